//! Single-letter information measures. Every quantity is in nats.
//!
//! Sibson-type quantities have closed forms and are evaluated in log space.
//! The Augustin-type (breve) quantities need a minimisation over output laws,
//! done by [`augustin_mean`].

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance on the total mass of a distribution.
pub const PROB_TOL: f64 = 1e-9;
/// Entries below this are treated as exact zeros.
pub const ZERO_CUTOFF: f64 = 1e-15;
/// Certified optimality gap for the breve minimisation.
pub const CERT_TOL: f64 = 1e-8;

const FIXED_POINT_CAP: usize = 10_000;
const FIXED_POINT_TV: f64 = 1e-12;

fn snap(x: f64) -> f64 {
    if x.abs() < ZERO_CUTOFF {
        0.0
    } else {
        x
    }
}

fn check_probs(probs: &[f64], what: &str) -> Result<()> {
    if probs.is_empty() {
        return Err(Error::Validation(format!("{what}: empty alphabet")));
    }
    let mut total = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        if !p.is_finite() || p < 0.0 {
            return Err(Error::Validation(format!(
                "{what}: entry {i} = {p} is not a nonnegative number"
            )));
        }
        total += p;
    }
    if (total - 1.0).abs() > PROB_TOL {
        return Err(Error::Validation(format!(
            "{what}: mass {total} differs from 1 by more than {PROB_TOL}"
        )));
    }
    Ok(())
}

/// `ln Σ exp(v)`, ignoring `-inf` entries. Returns `-inf` for an empty sum.
pub fn log_sum_exp<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let v: Vec<f64> = values.into_iter().filter(|x| *x > f64::NEG_INFINITY).collect();
    let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    if m == f64::INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

fn ln0(p: f64) -> f64 {
    if p > 0.0 {
        p.ln()
    } else {
        f64::NEG_INFINITY
    }
}

/// Probability mass function over `0..len`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Pmf {
    probs: Vec<f64>,
}

impl TryFrom<Vec<f64>> for Pmf {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Pmf::new(v)
    }
}

impl From<Pmf> for Vec<f64> {
    fn from(p: Pmf) -> Self {
        p.probs
    }
}

impl Pmf {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        check_probs(&probs, "pmf")?;
        Ok(Pmf {
            probs: probs.into_iter().map(snap).collect(),
        })
    }

    /// Wraps a vector computed from valid laws (marginals, products) without re-validating.
    pub(crate) fn from_computed(probs: Vec<f64>) -> Self {
        debug_assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-6);
        Pmf {
            probs: probs.into_iter().map(snap).collect(),
        }
    }

    pub fn uniform(d: usize) -> Self {
        Pmf {
            probs: vec![1.0 / d as f64; d],
        }
    }

    pub fn point(d: usize, at: usize) -> Self {
        let mut probs = vec![0.0; d];
        probs[at] = 1.0;
        Pmf { probs }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.probs[i] > 0.0).collect()
    }

    /// Product law with index `i * other.len() + j`.
    pub fn product(&self, other: &Pmf) -> Pmf {
        let mut out = Vec::with_capacity(self.len() * other.len());
        for &a in &self.probs {
            for &b in &other.probs {
                out.push(a * b);
            }
        }
        Pmf::from_computed(out)
    }

    pub fn permuted(&self, perm: &[usize]) -> Pmf {
        let mut out = vec![0.0; self.len()];
        for (i, &p) in self.probs.iter().enumerate() {
            out[perm[i]] = p;
        }
        Pmf { probs: out }
    }
}

/// Conditional law: one [`Pmf`] row per conditioning symbol.
#[derive(Clone, Debug, PartialEq)]
pub struct CondPmf {
    n_in: usize,
    n_out: usize,
    data: Vec<f64>,
}

impl CondPmf {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n_in = rows.len();
        let n_out = rows.first().map(|r| r.len()).unwrap_or(0);
        if n_in == 0 || n_out == 0 {
            return Err(Error::Validation("conditional law: empty alphabet".into()));
        }
        let mut data = Vec::with_capacity(n_in * n_out);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != n_out {
                return Err(Error::Dimension(format!(
                    "row {i} has {} entries, expected {n_out}",
                    r.len()
                )));
            }
            check_probs(r, &format!("conditional law row {i}"))?;
            data.extend(r.iter().cloned().map(snap));
        }
        Ok(CondPmf { n_in, n_out, data })
    }

    pub fn from_flat(n_in: usize, n_out: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n_in * n_out {
            return Err(Error::Dimension(format!(
                "{} entries for a {n_in}x{n_out} law",
                data.len()
            )));
        }
        CondPmf::new(data.chunks(n_out).map(|c| c.to_vec()).collect())
    }

    pub(crate) fn from_computed(n_in: usize, n_out: usize, data: Vec<f64>) -> Self {
        CondPmf {
            n_in,
            n_out,
            data: data.into_iter().map(snap).collect(),
        }
    }

    pub fn identity(d: usize) -> Self {
        let mut data = vec![0.0; d * d];
        for i in 0..d {
            data[i * d + i] = 1.0;
        }
        CondPmf {
            n_in: d,
            n_out: d,
            data,
        }
    }

    pub fn n_in(&self) -> usize {
        self.n_in
    }

    pub fn n_out(&self) -> usize {
        self.n_out
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n_out..(i + 1) * self.n_out]
    }

    pub fn get(&self, i: usize, o: usize) -> f64 {
        self.data[i * self.n_out + o]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks(self.n_out)
    }

    /// Output law under `input`.
    pub fn output(&self, input: &Pmf) -> Pmf {
        let mut out = vec![0.0; self.n_out];
        for (i, &p) in input.probs().iter().enumerate() {
            if p > 0.0 {
                for (o, w) in self.row(i).iter().enumerate() {
                    out[o] += p * w;
                }
            }
        }
        Pmf::from_computed(out)
    }

    /// Joint law over output×input.
    pub fn joint_with(&self, input: &Pmf) -> JointPmf {
        let mut data = vec![0.0; self.n_out * self.n_in];
        for i in 0..self.n_in {
            for o in 0..self.n_out {
                data[o * self.n_in + i] = input.probs()[i] * self.get(i, o);
            }
        }
        JointPmf::from_computed(self.n_out, self.n_in, data)
    }

    /// Tensor product channel; input `(i, j) -> i * other.n_in + j`, output likewise.
    pub fn product(&self, other: &CondPmf) -> CondPmf {
        let n_in = self.n_in * other.n_in;
        let n_out = self.n_out * other.n_out;
        let mut data = vec![0.0; n_in * n_out];
        for i in 0..self.n_in {
            for j in 0..other.n_in {
                let row = i * other.n_in + j;
                for a in 0..self.n_out {
                    for b in 0..other.n_out {
                        data[row * n_out + a * other.n_out + b] = self.get(i, a) * other.get(j, b);
                    }
                }
            }
        }
        CondPmf { n_in, n_out, data }
    }

    /// Relabels inputs by `pin` and outputs by `pout` (symbol `i` becomes `pin[i]`).
    pub fn permuted(&self, pin: &[usize], pout: &[usize]) -> CondPmf {
        let mut data = vec![0.0; self.data.len()];
        for i in 0..self.n_in {
            for o in 0..self.n_out {
                data[pin[i] * self.n_out + pout[o]] = self.get(i, o);
            }
        }
        CondPmf {
            n_in: self.n_in,
            n_out: self.n_out,
            data,
        }
    }
}

/// Joint law over `A × B`, stored with index `a * n_b + b`.
#[derive(Clone, Debug, PartialEq)]
pub struct JointPmf {
    n_a: usize,
    n_b: usize,
    data: Vec<f64>,
}

impl JointPmf {
    pub fn new(n_a: usize, n_b: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n_a * n_b {
            return Err(Error::Dimension(format!(
                "{} entries for a {n_a}x{n_b} joint law",
                data.len()
            )));
        }
        check_probs(&data, "joint law")?;
        Ok(JointPmf {
            n_a,
            n_b,
            data: data.into_iter().map(snap).collect(),
        })
    }

    pub(crate) fn from_computed(n_a: usize, n_b: usize, data: Vec<f64>) -> Self {
        JointPmf {
            n_a,
            n_b,
            data: data.into_iter().map(snap).collect(),
        }
    }

    pub fn product(a: &Pmf, b: &Pmf) -> JointPmf {
        JointPmf::from_computed(a.len(), b.len(), a.product(b).probs)
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.n_a, self.n_b)
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.data[a * self.n_b + b]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn marginal_a(&self) -> Pmf {
        Pmf::from_computed(self.data.chunks(self.n_b).map(|r| r.iter().sum()).collect())
    }

    pub fn marginal_b(&self) -> Pmf {
        let mut out = vec![0.0; self.n_b];
        for r in self.data.chunks(self.n_b) {
            for (b, v) in r.iter().enumerate() {
                out[b] += v;
            }
        }
        Pmf::from_computed(out)
    }

    /// `P_{A|B}` as a conditional law with inputs `B`; rows with zero mass are uniform.
    pub fn cond_a_given_b(&self) -> CondPmf {
        let pb = self.marginal_b();
        let mut data = vec![0.0; self.n_a * self.n_b];
        for b in 0..self.n_b {
            for a in 0..self.n_a {
                data[b * self.n_a + a] = if pb.probs[b] > 0.0 {
                    self.get(a, b) / pb.probs[b]
                } else {
                    1.0 / self.n_a as f64
                };
            }
        }
        CondPmf::from_computed(self.n_b, self.n_a, data)
    }
}

/// Rényi order offset `s ∈ [0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct OrderParam(f64);

impl OrderParam {
    pub fn new(s: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&s) {
            return Err(Error::Domain(format!("order parameter s = {s} outside [0, 1]")));
        }
        Ok(OrderParam(s))
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

/// Which Sibson order a closed form refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SibsonOrder {
    /// order `1/(1+s)`
    InvOnePlus,
    /// order `1/(1-s)`, requires `s < 1`
    InvOneMinus,
}

/// A divergence value, `+inf` with `support_violation` set when `p` is not dominated by `q`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Divergence {
    pub value: f64,
    pub support_violation: bool,
}

fn same_len(p: &Pmf, q: &Pmf) -> Result<()> {
    if p.len() != q.len() {
        return Err(Error::Dimension(format!(
            "alphabets of size {} and {}",
            p.len(),
            q.len()
        )));
    }
    Ok(())
}

/// Shannon entropy `-Σ p ln p` (nats).
pub fn shannon_entropy(p: &Pmf) -> f64 {
    -p.probs.iter().filter(|&&x| x > 0.0).map(|&x| x * x.ln()).sum::<f64>()
}

/// Rényi entropy `ln(Σ p^α) / (1-α)` (nats).
pub fn renyi_entropy(p: &Pmf, order: f64) -> Result<f64> {
    if !(order.is_finite() && order > 0.0) {
        return Err(Error::Domain(format!(
            "Rényi order {order} must be positive and finite"
        )));
    }
    if order == 1.0 {
        return Err(Error::Domain("Rényi order 1 is the Shannon entropy".into()));
    }
    let l = log_sum_exp(p.probs.iter().map(|&x| order * ln0(x)));
    Ok(l / (1.0 - order))
}

/// Kullback-Leibler divergence `D(p‖q)` (nats).
pub fn kl_divergence(p: &Pmf, q: &Pmf) -> Result<Divergence> {
    same_len(p, q)?;
    let mut d = 0.0;
    for (&a, &b) in p.probs.iter().zip(&q.probs) {
        if a > 0.0 {
            if b <= 0.0 {
                return Ok(Divergence {
                    value: f64::INFINITY,
                    support_violation: true,
                });
            }
            d += a * (a / b).ln();
        }
    }
    Ok(Divergence {
        value: d.max(0.0),
        support_violation: false,
    })
}

/// Rényi relative entropy of order `1+s`, `ln(Σ p^{1+s} q^{-s}) / s`; `s = 0` gives KL.
pub fn renyi_relative_entropy(p: &Pmf, q: &Pmf, s: OrderParam) -> Result<Divergence> {
    let s = s.get();
    if s == 0.0 {
        return kl_divergence(p, q);
    }
    same_len(p, q)?;
    if p.probs.iter().zip(&q.probs).any(|(&a, &b)| a > 0.0 && b <= 0.0) {
        return Ok(Divergence {
            value: f64::INFINITY,
            support_violation: true,
        });
    }
    let l = log_sum_exp(
        p.probs
            .iter()
            .zip(&q.probs)
            .filter(|(&a, _)| a > 0.0)
            .map(|(&a, &b)| (1.0 + s) * a.ln() - s * b.ln()),
    );
    Ok(Divergence {
        value: (l / s).max(0.0),
        support_violation: false,
    })
}

/// Rényi divergence of a general order `α ≠ 1` on raw slices.
fn renyi_divergence_raw(p: &[f64], q: &[f64], alpha: f64) -> f64 {
    let l = log_sum_exp(
        p.iter()
            .zip(q)
            .filter(|(&a, _)| a > 0.0)
            .map(|(&a, &b)| alpha * a.ln() + (1.0 - alpha) * ln0(b)),
    );
    l / (alpha - 1.0)
}

/// Shannon mutual information of a joint law.
pub fn mutual_information(joint: &JointPmf) -> f64 {
    let pa = joint.marginal_a();
    let pb = joint.marginal_b();
    let mut i = 0.0;
    for a in 0..joint.n_a {
        for b in 0..joint.n_b {
            let p = joint.get(a, b);
            if p > 0.0 {
                i += p * (p / (pa.probs[a] * pb.probs[b])).ln();
            }
        }
    }
    i.max(0.0)
}

/// `I↓_{1+s}(A;B) = D_{1+s}(P_AB ‖ P_A × P_B)`; `s = 0` gives Shannon mutual information.
pub fn mi_down(joint: &JointPmf, s: OrderParam) -> f64 {
    let pa = joint.marginal_a();
    let pb = joint.marginal_b();
    let prod = pa.product(&pb);
    let p = Pmf::from_computed(joint.data.clone());
    renyi_relative_entropy(&p, &prod, s)
        .expect("product dominates joint")
        .value
}

/// Shannon conditional mutual information `I(Z;X|Y)`.
///
/// `chan` has rows indexed by `x * |Y| + y`; `inputs` is a joint law over `X × Y`.
pub fn conditional_mutual_information(chan: &CondPmf, inputs: &JointPmf) -> Result<f64> {
    let (nx, ny) = inputs.dims();
    check_cond_shape(chan, nx, ny)?;
    let py = inputs.marginal_b();
    let mut total = 0.0;
    for y in 0..ny {
        if py.probs[y] <= 0.0 {
            continue;
        }
        let mut out = vec![0.0; chan.n_out];
        for x in 0..nx {
            let pxy = inputs.get(x, y) / py.probs[y];
            for (z, o) in out.iter_mut().enumerate() {
                *o += pxy * chan.get(x * ny + y, z);
            }
        }
        for x in 0..nx {
            let pj = inputs.get(x, y);
            if pj <= 0.0 {
                continue;
            }
            for z in 0..chan.n_out {
                let w = chan.get(x * ny + y, z);
                if w > 0.0 {
                    total += pj * w * (w / out[z]).ln();
                }
            }
        }
    }
    Ok(total.max(0.0))
}

fn check_cond_shape(chan: &CondPmf, nx: usize, ny: usize) -> Result<()> {
    if chan.n_in != nx * ny {
        return Err(Error::Dimension(format!(
            "channel has {} input rows, inputs cover {nx}x{ny}",
            chan.n_in
        )));
    }
    Ok(())
}

/// Conditional Sibson information `I↑_{1/(1+s)}(Z;X|Y)` via
/// `e^{-s I} = Σ_y P_Y(y) Σ_z (Σ_x P_{X|Y}(x|y) W(z|x,y)^{1/(1+s)})^{1+s}`.
///
/// `chan` rows are indexed by `x * |Y| + y`; `inputs` is a joint law over `X × Y`.
pub fn mi_up_conditional(chan: &CondPmf, inputs: &JointPmf, s: OrderParam) -> Result<f64> {
    let s = s.get();
    if s == 0.0 {
        return conditional_mutual_information(chan, inputs);
    }
    let (nx, ny) = inputs.dims();
    check_cond_shape(chan, nx, ny)?;
    let py = inputs.marginal_b();
    let a = 1.0 / (1.0 + s);
    let mut outer = Vec::with_capacity(ny);
    for y in 0..ny {
        if py.probs[y] <= 0.0 {
            continue;
        }
        let lpy = py.probs[y].ln();
        let per_z = (0..chan.n_out).map(|z| {
            let inner = log_sum_exp((0..nx).map(|x| ln0(inputs.get(x, y)) - lpy + a * ln0(chan.get(x * ny + y, z))));
            (1.0 + s) * inner
        });
        outer.push(lpy + log_sum_exp(per_z));
    }
    Ok((-log_sum_exp(outer) / s).max(0.0))
}

/// Sibson information of order `α`: `α/(α-1) ln Σ_z (Σ_x P(x) W(z|x)^α)^{1/α}`.
pub fn sibson_mi(chan: &CondPmf, input: &Pmf, alpha: f64) -> Result<f64> {
    if chan.n_in != input.len() {
        return Err(Error::Dimension(format!(
            "channel has {} inputs, law has {}",
            chan.n_in,
            input.len()
        )));
    }
    if alpha == 1.0 {
        return Ok(mutual_information(&chan.joint_with(input)));
    }
    let l = log_sum_exp(
        (0..chan.n_out)
            .map(|z| log_sum_exp((0..chan.n_in).map(|x| ln0(input.probs[x]) + alpha * ln0(chan.get(x, z)))) / alpha),
    );
    Ok((alpha / (alpha - 1.0) * l).max(0.0))
}

/// Unconditional Sibson information at order `1/(1+s)` or `1/(1-s)`.
pub fn mi_up_unconditional(chan: &CondPmf, input: &Pmf, s: OrderParam, order: SibsonOrder) -> Result<f64> {
    let s = s.get();
    let alpha = match order {
        SibsonOrder::InvOnePlus => 1.0 / (1.0 + s),
        SibsonOrder::InvOneMinus => {
            if s >= 1.0 {
                return Err(Error::Domain("order 1/(1-s) needs s < 1".into()));
            }
            1.0 / (1.0 - s)
        }
    };
    sibson_mi(chan, input, alpha)
}

/// Minimiser of `Σ_x P(x) D_α(W_x ‖ Q)` over output laws `Q`.
#[derive(Clone, Debug)]
pub struct AugustinSolution {
    pub value: f64,
    pub mean: Vec<f64>,
    /// Upper bound on `value - min`, from convexity: `max_z T(Q)_z / Q_z - 1`.
    pub gap: f64,
    pub iterations: usize,
}

struct AugustinProblem {
    alpha: f64,
    weights: Vec<f64>,
    logw: Vec<Vec<f64>>,
}

struct AugustinEval {
    f: f64,
    t: Vec<f64>,
    tx: Vec<Vec<f64>>,
}

impl AugustinProblem {
    fn eval(&self, q: &[f64]) -> AugustinEval {
        let a = self.alpha;
        let lq: Vec<f64> = q.iter().map(|&v| ln0(v)).collect();
        let mut f = 0.0;
        let mut t = vec![0.0; q.len()];
        let mut tx = Vec::with_capacity(self.weights.len());
        for (px, lw) in self.weights.iter().zip(&self.logw) {
            let terms: Vec<f64> = lw
                .iter()
                .zip(&lq)
                .map(|(&w, &l)| {
                    if w == f64::NEG_INFINITY {
                        w
                    } else {
                        a * w + (1.0 - a) * l
                    }
                })
                .collect();
            let ls = log_sum_exp(terms.iter().cloned());
            f += px * ls / (a - 1.0);
            let row: Vec<f64> = terms.iter().map(|&v| (v - ls).exp()).collect();
            for (tz, r) in t.iter_mut().zip(&row) {
                *tz += px * r;
            }
            tx.push(row);
        }
        AugustinEval { f, t, tx }
    }

    fn gap(q: &[f64], t: &[f64]) -> f64 {
        q.iter()
            .zip(t)
            .map(|(&qz, &tz)| tz / qz)
            .fold(f64::NEG_INFINITY, f64::max)
            - 1.0
    }

    fn newton_step(&self, q: &[f64], ev: &AugustinEval) -> Option<Vec<f64>> {
        let m = q.len();
        let a = self.alpha;
        let mut k = DMatrix::<f64>::zeros(m + 1, m + 1);
        let mut rhs = DVector::<f64>::zeros(m + 1);
        for z in 0..m {
            rhs[z] = ev.t[z] / q[z];
            k[(z, m)] = 1.0;
            k[(m, z)] = 1.0;
        }
        for (px, row) in self.weights.iter().zip(&ev.tx) {
            for z in 0..m {
                k[(z, z)] += px * a * row[z] / (q[z] * q[z]);
                for w in 0..m {
                    k[(z, w)] += px * (1.0 - a) * row[z] * row[w] / (q[z] * q[w]);
                }
            }
        }
        let sol = k.lu().solve(&rhs)?;
        Some((0..m).map(|z| sol[z]).collect())
    }
}

/// Computes the Augustin mean and the breve information `min_Q Σ_x P(x) D_α(W_x‖Q)`.
///
/// Damped fixed-point iteration of `T(Q)(z) = Σ_x P(x) W_x(z)^α Q(z)^{1-α} / S_x`
/// (step halving whenever the objective would increase), followed by a Newton
/// polish on the simplex. The result is certified by the gap bound.
pub fn augustin_mean(chan: &CondPmf, input: &Pmf, order: f64) -> Result<AugustinSolution> {
    if !(order.is_finite() && order > 0.0) || order == 1.0 {
        return Err(Error::Domain(format!(
            "breve order {order} must be positive, finite and not 1"
        )));
    }
    if chan.n_in != input.len() {
        return Err(Error::Dimension(format!(
            "channel has {} inputs, law has {}",
            chan.n_in,
            input.len()
        )));
    }
    let active: Vec<usize> = input.support();
    let mut support: Vec<usize> = (0..chan.n_out)
        .filter(|&z| active.iter().any(|&x| chan.get(x, z) > 0.0))
        .collect();
    support.sort_unstable();
    let problem = AugustinProblem {
        alpha: order,
        weights: active.iter().map(|&x| input.probs[x]).collect(),
        logw: active
            .iter()
            .map(|&x| support.iter().map(|&z| ln0(chan.get(x, z))).collect())
            .collect(),
    };
    let out = chan.output(input);
    let mut q: Vec<f64> = support.iter().map(|&z| out.probs[z]).collect();
    let norm: f64 = q.iter().sum();
    q.iter_mut().for_each(|v| *v /= norm);

    let mut ev = problem.eval(&q);
    let mut iterations = 0;
    while iterations < FIXED_POINT_CAP {
        iterations += 1;
        if AugustinProblem::gap(&q, &ev.t) <= 1e-14 {
            break;
        }
        let mut lambda = 1.0;
        let (cand, cev) = loop {
            let c: Vec<f64> = q.iter().zip(&ev.t).map(|(&a, &b)| a + lambda * (b - a)).collect();
            let ce = problem.eval(&c);
            if ce.f <= ev.f + 1e-15 * ev.f.abs().max(1.0) || lambda < 1e-12 {
                break (c, ce);
            }
            lambda *= 0.5;
        };
        let tv = 0.5 * cand.iter().zip(&q).map(|(a, b)| (a - b).abs()).sum::<f64>();
        q = cand;
        ev = cev;
        if tv < FIXED_POINT_TV || (tv < 1e-7 && iterations > 20) {
            break;
        }
    }

    let mut gap = AugustinProblem::gap(&q, &ev.t);
    for _ in 0..60 {
        if gap <= 1e-14 {
            break;
        }
        let Some(d) = problem.newton_step(&q, &ev) else { break };
        let mut step = 1.0;
        let mut accepted = false;
        while step > 1e-10 {
            let c: Vec<f64> = q.iter().zip(&d).map(|(&a, &b)| a + step * b).collect();
            if c.iter().all(|&v| v > 0.0) {
                let s: f64 = c.iter().sum();
                let c: Vec<f64> = c.iter().map(|v| v / s).collect();
                let ce = problem.eval(&c);
                let cg = AugustinProblem::gap(&c, &ce.t);
                if cg < gap || ce.f < ev.f - 1e-14 * ev.f.abs().max(1.0) {
                    q = c;
                    ev = ce;
                    gap = cg;
                    accepted = true;
                    break;
                }
            }
            step *= 0.5;
        }
        iterations += 1;
        if !accepted {
            break;
        }
    }

    let mut mean = vec![0.0; chan.n_out];
    for (i, &z) in support.iter().enumerate() {
        mean[z] = q[i];
    }
    let value = ev.f.max(0.0);
    if gap > CERT_TOL {
        return Err(Error::NonConvergence {
            iterations,
            best: value,
            gap,
        });
    }
    Ok(AugustinSolution {
        value,
        mean,
        gap: gap.max(0.0),
        iterations,
    })
}

/// Breve (Augustin-type) information `Ĭ_α(Z;X)` (nats).
pub fn breve_mi(chan: &CondPmf, input: &Pmf, order: f64) -> Result<f64> {
    augustin_mean(chan, input, order).map(|s| s.value)
}

/// `Σ_x P(x) D_α(W_x ‖ Q)` for a given output law `q`.
pub fn augustin_objective(chan: &CondPmf, input: &Pmf, q: &[f64], order: f64) -> f64 {
    input
        .probs
        .iter()
        .enumerate()
        .filter(|(_, &p)| p > 0.0)
        .map(|(x, &p)| p * renyi_divergence_raw(chan.row(x), q, order))
        .sum()
}

fn split_by_y(chan: &CondPmf, nx: usize, ny: usize, y: usize) -> CondPmf {
    let mut data = Vec::with_capacity(nx * chan.n_out);
    for x in 0..nx {
        data.extend_from_slice(chan.row(x * ny + y));
    }
    CondPmf::from_computed(nx, chan.n_out, data)
}

/// Conditional breve information by per-`y` minimisation and exponential averaging.
///
/// With `s = 1/α - 1` for `α < 1`: `e^{-s Ĭ} = Σ_y P_Y(y) e^{-s m_y}`;
/// with `s = 1 - 1/α` for `α > 1`: `e^{s Ĭ} = Σ_y P_Y(y) e^{s m_y}`,
/// where `m_y = min_Q Σ_x P_X(x) D_α(W_{x,y} ‖ Q)`. Rows of `chan` are `x * |Y| + y`.
pub fn breve_mi_conditional(chan: &CondPmf, p_x: &Pmf, p_y: &Pmf, order: f64) -> Result<f64> {
    let (nx, ny) = (p_x.len(), p_y.len());
    check_cond_shape(chan, nx, ny)?;
    let mut terms = Vec::with_capacity(ny);
    for y in p_y.support() {
        let m = breve_mi(&split_by_y(chan, nx, ny, y), p_x, order)?;
        terms.push((p_y.probs[y], m));
    }
    if order < 1.0 {
        let s = 1.0 / order - 1.0;
        Ok((-log_sum_exp(terms.iter().map(|&(p, m)| p.ln() - s * m)) / s).max(0.0))
    } else {
        let s = 1.0 - 1.0 / order;
        Ok((log_sum_exp(terms.iter().map(|&(p, m)| p.ln() + s * m)) / s).max(0.0))
    }
}

/// Breve information of the joint output, `Ĭ_α(ZY;X)` with `Y ~ p_y` independent of `X`.
pub fn breve_mi_joint_output(chan: &CondPmf, p_x: &Pmf, p_y: &Pmf, order: f64) -> Result<f64> {
    let (nx, ny) = (p_x.len(), p_y.len());
    check_cond_shape(chan, nx, ny)?;
    breve_mi(&joint_output_channel(chan, nx, p_y), p_x, order)
}

/// Channel `x -> (z, y)` with `W'(z, y | x) = P_Y(y) W(z | x, y)`, output index `z * |Y| + y`.
pub(crate) fn joint_output_channel(chan: &CondPmf, nx: usize, p_y: &Pmf) -> CondPmf {
    let ny = p_y.len();
    let nz = chan.n_out;
    let mut data = vec![0.0; nx * nz * ny];
    for x in 0..nx {
        for y in 0..ny {
            for z in 0..nz {
                data[x * nz * ny + z * ny + y] = p_y.probs[y] * chan.get(x * ny + y, z);
            }
        }
    }
    CondPmf::from_computed(nx, nz * ny, data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn s(v: f64) -> OrderParam {
        OrderParam::new(v).unwrap()
    }

    #[test]
    fn entropy_examples() {
        assert_abs_diff_eq!(shannon_entropy(&Pmf::uniform(2)), 2f64.ln(), epsilon = 1e-15);
        assert_eq!(shannon_entropy(&Pmf::point(3, 1)), 0.0);
        let p = Pmf::new(vec![0.75, 0.25]).unwrap();
        let direct = -(0.75f64 * 0.75f64.ln() + 0.25 * 0.25f64.ln());
        assert_abs_diff_eq!(shannon_entropy(&p), direct, epsilon = 1e-15);
    }

    #[test]
    fn renyi_entropy_examples() {
        for q in [2usize, 3, 7] {
            for a in [0.3, 0.5, 2.0, 5.0] {
                assert_abs_diff_eq!(
                    renyi_entropy(&Pmf::uniform(q), a).unwrap(),
                    (q as f64).ln(),
                    epsilon = 1e-12
                );
            }
        }
        let p = Pmf::new(vec![0.75, 0.25]).unwrap();
        let expect = 2.0 * (0.75f64.sqrt() + 0.25f64.sqrt()).ln();
        assert_abs_diff_eq!(renyi_entropy(&p, 0.5).unwrap(), expect, epsilon = 1e-14);
        let h = shannon_entropy(&p);
        assert!((renyi_entropy(&p, 1.0 + 1e-4).unwrap() - h).abs() < 1e-3);
        assert!((renyi_entropy(&p, 1.0 - 1e-4).unwrap() - h).abs() < 1e-3);
        assert!(matches!(renyi_entropy(&p, 1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn relative_entropy_examples() {
        let p = Pmf::new(vec![1.0, 0.0]).unwrap();
        let q = Pmf::uniform(2);
        assert_abs_diff_eq!(
            renyi_relative_entropy(&p, &q, s(1.0)).unwrap().value,
            2f64.ln(),
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            renyi_relative_entropy(&q, &q, s(0.4)).unwrap().value,
            0.0,
            epsilon = 1e-15
        );
        let d = renyi_relative_entropy(&q, &p, s(0.5)).unwrap();
        assert!(d.support_violation && d.value.is_infinite());
    }

    #[test]
    fn validation_rejects_bad_laws() {
        assert!(Pmf::new(vec![0.5, 0.49]).is_err());
        assert!(Pmf::new(vec![1.1, -0.1]).is_err());
        assert!(Pmf::new(vec![]).is_err());
        assert!(Pmf::new(vec![0.5, 0.5 + 5e-10]).is_ok());
        assert_eq!(Pmf::new(vec![1.0, 1e-16]).unwrap().probs()[1], 0.0);
    }

    #[test]
    fn mi_down_examples() {
        let j = JointPmf::new(2, 2, vec![0.5, 0.0, 0.0, 0.5]).unwrap();
        assert_abs_diff_eq!(mi_down(&j, s(1.0)), 2f64.ln(), epsilon = 1e-14);
        let ind = JointPmf::product(&Pmf::new(vec![0.3, 0.7]).unwrap(), &Pmf::uniform(3));
        assert_abs_diff_eq!(mi_down(&ind, s(0.6)), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn mi_up_binary_additive_closed_form() {
        for p in [0.0, 0.05, 0.2, 0.45] {
            let chan = CondPmf::new(vec![vec![1.0 - p, p], vec![p, 1.0 - p]]).unwrap();
            let joint = JointPmf::product(&Pmf::uniform(2), &Pmf::uniform(1));
            for sv in [0.1, 0.5, 1.0] {
                let got = mi_up_conditional(&chan, &joint, s(sv)).unwrap();
                let noise = Pmf::new(vec![1.0 - p, p]).unwrap();
                let expect = 2f64.ln()
                    - if p == 0.0 {
                        0.0
                    } else {
                        renyi_entropy(&noise, 1.0 / (1.0 + sv)).unwrap()
                    };
                assert_abs_diff_eq!(got, expect, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn mi_up_identity_and_constant() {
        let id = CondPmf::identity(4);
        for sv in [0.2, 0.7] {
            for ord in [SibsonOrder::InvOnePlus, SibsonOrder::InvOneMinus] {
                let v = mi_up_unconditional(&id, &Pmf::uniform(4), s(sv), ord).unwrap();
                assert_abs_diff_eq!(v, 4f64.ln(), epsilon = 1e-12);
            }
        }
        let c = CondPmf::new(vec![vec![0.2, 0.8]; 3]).unwrap();
        let v = mi_up_unconditional(
            &c,
            &Pmf::new(vec![0.1, 0.6, 0.3]).unwrap(),
            s(0.5),
            SibsonOrder::InvOnePlus,
        )
        .unwrap();
        assert_abs_diff_eq!(v, 0.0, epsilon = 1e-14);
        assert!(mi_up_unconditional(&c, &Pmf::uniform(3), s(1.0), SibsonOrder::InvOneMinus).is_err());
    }

    #[test]
    fn breve_trivial_cases() {
        let c = CondPmf::new(vec![vec![0.2, 0.5, 0.3]; 2]).unwrap();
        for a in [0.5, 2.0] {
            let sol = augustin_mean(&c, &Pmf::new(vec![0.4, 0.6]).unwrap(), a).unwrap();
            assert_abs_diff_eq!(sol.value, 0.0, epsilon = 1e-12);
            assert_abs_diff_eq!(sol.mean[1], 0.5, epsilon = 1e-9);
        }
        assert!(breve_mi(&c, &Pmf::uniform(2), 1.0).is_err());
    }

    #[test]
    fn breve_identity_channel() {
        let id = CondPmf::identity(3);
        let p = Pmf::new(vec![0.5, 0.3, 0.2]).unwrap();
        for a in [0.5, 0.8, 1.25, 3.0] {
            let sol = augustin_mean(&id, &p, a).unwrap();
            let obj = augustin_objective(&id, &p, &sol.mean, a);
            assert_abs_diff_eq!(sol.value, obj, epsilon = 1e-12);
            assert!(sol.gap <= CERT_TOL);
        }
    }
}
