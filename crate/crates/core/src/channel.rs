//! Channel models: dense two-way wiretap tensors, input laws with pre-processing,
//! finite-field additive channels and Gaussian parameter containers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::{CondPmf, JointPmf, Pmf, PROB_TOL, ZERO_CUTOFF};

/// Maximum number of dense entries in a tensor or composed joint law.
pub const MAX_ENTRIES: usize = 10_000_000;

/// Axis order of [`compose_effective`] output.
pub mod axis {
    pub const V1: usize = 0;
    pub const V2: usize = 1;
    pub const X1: usize = 2;
    pub const X2: usize = 3;
    pub const Y1: usize = 4;
    pub const Y2: usize = 5;
    pub const Z: usize = 6;
}

/// What is wrong with one `(x1, x2)` slice of a tensor.
#[derive(Clone, Debug, PartialEq)]
pub enum SliceProblem {
    Mass(f64),
    Negative { y1: usize, y2: usize, z: usize, value: f64 },
    NotFinite { y1: usize, y2: usize, z: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Diagnostic {
    pub x1: usize,
    pub x2: usize,
    pub problem: SliceProblem,
}

impl std::fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.problem {
            SliceProblem::Mass(m) => write!(f, "slice (x1={}, x2={}) sums to {m}", self.x1, self.x2),
            SliceProblem::Negative { y1, y2, z, value } => write!(
                f,
                "slice (x1={}, x2={}) has negative entry {value} at (y1={y1}, y2={y2}, z={z})",
                self.x1, self.x2
            ),
            SliceProblem::NotFinite { y1, y2, z } => {
                write!(f, "slice (x1={}, x2={}) has a non-finite entry at (y1={y1}, y2={y2}, z={z})", self.x1, self.x2)
            }
        }
    }
}

/// `P(y1, y2, z | x1, x2)` stored row-major in the order `x1, x2, y1, y2, z`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelTensor {
    sizes: [usize; 5],
    probs: Vec<f64>,
}

/// Checks every `(x1, x2)` slice; an empty list means the tensor is valid.
pub fn validate_channel(sizes: [usize; 5], probs: &[f64]) -> Result<Vec<Diagnostic>> {
    let total = checked_product(&sizes)?;
    if sizes.iter().any(|&s| s == 0) {
        return Err(Error::Validation(format!("alphabet sizes {sizes:?} must be positive")));
    }
    if probs.len() != total {
        return Err(Error::Dimension(format!("{} probabilities for sizes {sizes:?} ({total} expected)", probs.len())));
    }
    let [nx1, nx2, ny1, ny2, nz] = sizes;
    let slice = ny1 * ny2 * nz;
    let mut out = Vec::new();
    for x1 in 0..nx1 {
        for x2 in 0..nx2 {
            let s = &probs[(x1 * nx2 + x2) * slice..][..slice];
            let mut bad = false;
            for (k, &v) in s.iter().enumerate() {
                let (y1, y2, z) = (k / (ny2 * nz), (k / nz) % ny2, k % nz);
                if !v.is_finite() {
                    out.push(Diagnostic { x1, x2, problem: SliceProblem::NotFinite { y1, y2, z } });
                    bad = true;
                } else if v < 0.0 {
                    out.push(Diagnostic { x1, x2, problem: SliceProblem::Negative { y1, y2, z, value: v } });
                    bad = true;
                }
            }
            let mass: f64 = s.iter().sum();
            if !bad && (mass - 1.0).abs() > PROB_TOL {
                out.push(Diagnostic { x1, x2, problem: SliceProblem::Mass(mass) });
            }
        }
    }
    Ok(out)
}

fn checked_product(sizes: &[usize]) -> Result<usize> {
    let mut t: usize = 1;
    for &s in sizes {
        t = t.checked_mul(s).filter(|&v| v <= MAX_ENTRIES).ok_or_else(|| {
            Error::Sizing(format!("dense array over alphabets {sizes:?} exceeds {MAX_ENTRIES} entries"))
        })?;
    }
    Ok(t)
}

impl ChannelTensor {
    pub fn new(sizes: [usize; 5], probs: Vec<f64>) -> Result<Self> {
        let diags = validate_channel(sizes, &probs)?;
        if let Some(d) = diags.first() {
            let rest = if diags.len() > 1 { format!(" (and {} more)", diags.len() - 1) } else { String::new() };
            return Err(Error::Validation(format!("{d}{rest}")));
        }
        let probs = probs.into_iter().map(|v| if v < ZERO_CUTOFF { 0.0 } else { v }).collect();
        Ok(ChannelTensor { sizes, probs })
    }

    /// Builds a tensor from a function of `(x1, x2, y1, y2, z)`.
    pub fn from_fn(sizes: [usize; 5], f: impl Fn(usize, usize, usize, usize, usize) -> f64) -> Result<Self> {
        let total = checked_product(&sizes)?;
        let [_, nx2, ny1, ny2, nz] = sizes;
        let probs = (0..total)
            .map(|k| {
                let z = k % nz;
                let y2 = (k / nz) % ny2;
                let y1 = (k / (nz * ny2)) % ny1;
                let x2 = (k / (nz * ny2 * ny1)) % nx2;
                let x1 = k / (nz * ny2 * ny1 * nx2);
                f(x1, x2, y1, y2, z)
            })
            .collect();
        ChannelTensor::new(sizes, probs)
    }

    /// `[|X1|, |X2|, |Y1|, |Y2|, |Z|]`
    pub fn sizes(&self) -> [usize; 5] {
        self.sizes
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn get(&self, x1: usize, x2: usize, y1: usize, y2: usize, z: usize) -> f64 {
        let [_, nx2, ny1, ny2, nz] = self.sizes;
        self.probs[(((x1 * nx2 + x2) * ny1 + y1) * ny2 + y2) * nz + z]
    }

    /// The `(y1, y2, z)` law for inputs `(x1, x2)`, index `(y1 * |Y2| + y2) * |Z| + z`.
    pub fn slice(&self, x1: usize, x2: usize) -> &[f64] {
        let [_, nx2, ny1, ny2, nz] = self.sizes;
        let len = ny1 * ny2 * nz;
        &self.probs[(x1 * nx2 + x2) * len..][..len]
    }

    fn marginal_channel(&self, which: usize) -> CondPmf {
        let [nx1, nx2, ny1, ny2, nz] = self.sizes;
        let nout = [ny1, ny2, nz][which];
        let mut data = vec![0.0; nx1 * nx2 * nout];
        for x in 0..nx1 * nx2 {
            let s = &self.probs[x * ny1 * ny2 * nz..][..ny1 * ny2 * nz];
            for (k, v) in s.iter().enumerate() {
                let o = match which {
                    0 => k / (ny2 * nz),
                    1 => (k / nz) % ny2,
                    _ => k % nz,
                };
                data[x * nout + o] += v;
            }
        }
        CondPmf::from_computed(nx1 * nx2, nout, data)
    }

    /// `P(y1 | x1, x2)`, rows `x1 * |X2| + x2`.
    pub fn channel_y1(&self) -> CondPmf {
        self.marginal_channel(0)
    }

    /// `P(y2 | x1, x2)`, rows `x1 * |X2| + x2`.
    pub fn channel_y2(&self) -> CondPmf {
        self.marginal_channel(1)
    }

    /// `P(z | x1, x2)`, rows `x1 * |X2| + x2`.
    pub fn channel_z(&self) -> CondPmf {
        self.marginal_channel(2)
    }
}

/// Product input structure `P_{V1} P_{X1|V1} × P_{V2} P_{X2|V2}`.
#[derive(Clone, Debug, PartialEq)]
pub struct JointInputLaw {
    pub p_v1: Pmf,
    pub x1_given_v1: CondPmf,
    pub p_v2: Pmf,
    pub x2_given_v2: CondPmf,
}

impl JointInputLaw {
    pub fn new(p_v1: Pmf, x1_given_v1: CondPmf, p_v2: Pmf, x2_given_v2: CondPmf) -> Result<Self> {
        if x1_given_v1.n_in() != p_v1.len() || x2_given_v2.n_in() != p_v2.len() {
            return Err(Error::Dimension("pre-processing rows must match the V alphabets".into()));
        }
        Ok(JointInputLaw { p_v1, x1_given_v1, p_v2, x2_given_v2 })
    }

    /// `V_i = X_i` with the given input laws.
    pub fn identity(p_x1: Pmf, p_x2: Pmf) -> Self {
        let (a, b) = (p_x1.len(), p_x2.len());
        JointInputLaw { p_v1: p_x1, x1_given_v1: CondPmf::identity(a), p_v2: p_x2, x2_given_v2: CondPmf::identity(b) }
    }

    pub fn p_x1(&self) -> Pmf {
        self.x1_given_v1.output(&self.p_v1)
    }

    pub fn p_x2(&self) -> Pmf {
        self.x2_given_v2.output(&self.p_v2)
    }

    pub fn sizes(&self) -> [usize; 4] {
        [self.p_v1.len(), self.p_v2.len(), self.x1_given_v1.n_out(), self.x2_given_v2.n_out()]
    }

    pub fn check_compatible(&self, t: &ChannelTensor) -> Result<()> {
        let [_, _, nx1, nx2] = self.sizes();
        let s = t.sizes();
        if nx1 != s[0] || nx2 != s[1] {
            return Err(Error::Dimension(format!(
                "law has input alphabets ({nx1}, {nx2}), channel has ({}, {})",
                s[0], s[1]
            )));
        }
        Ok(())
    }
}

/// Dense joint law over several axes, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct JointLaw {
    dims: Vec<usize>,
    probs: Vec<f64>,
}

impl JointLaw {
    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// Marginal over `axes`, kept in the given order.
    pub fn marginal(&self, axes: &[usize]) -> JointLaw {
        let dims: Vec<usize> = axes.iter().map(|&a| self.dims[a]).collect();
        let mut out = vec![0.0; dims.iter().product()];
        let nd = self.dims.len();
        let mut idx = vec![0usize; nd];
        for &p in &self.probs {
            if p != 0.0 {
                let mut k = 0;
                for &a in axes {
                    k = k * self.dims[a] + idx[a];
                }
                out[k] += p;
            }
            for d in (0..nd).rev() {
                idx[d] += 1;
                if idx[d] < self.dims[d] {
                    break;
                }
                idx[d] = 0;
            }
        }
        JointLaw { dims, probs: out }
    }

    /// Joint law of the flattened groups `a` and `b`.
    pub fn joint_pmf(&self, a: &[usize], b: &[usize]) -> JointPmf {
        let axes: Vec<usize> = a.iter().chain(b).cloned().collect();
        let m = self.marginal(&axes);
        let na = a.iter().map(|&x| self.dims[x]).product();
        let nb = b.iter().map(|&x| self.dims[x]).product();
        JointPmf::from_computed(na, nb, m.probs)
    }

    /// `P(out | inp)` with rows indexed by the flattened `inp` group.
    pub fn cond_pmf(&self, out: &[usize], inp: &[usize]) -> CondPmf {
        self.joint_pmf(out, inp).cond_a_given_b()
    }

    pub fn pmf(&self, axes: &[usize]) -> Pmf {
        Pmf::from_computed(self.marginal(axes).probs)
    }
}

/// Full single-use joint law of `(V1, V2, X1, X2, Y1, Y2, Z)`; see [`axis`].
pub fn compose_effective(t: &ChannelTensor, law: &JointInputLaw) -> Result<JointLaw> {
    law.check_compatible(t)?;
    let [nv1, nv2, nx1, nx2] = law.sizes();
    let [_, _, ny1, ny2, nz] = t.sizes();
    let dims = vec![nv1, nv2, nx1, nx2, ny1, ny2, nz];
    let total = checked_product(&dims)?;
    let slice = ny1 * ny2 * nz;
    let mut probs = vec![0.0; total];
    for v1 in 0..nv1 {
        for v2 in 0..nv2 {
            let pv = law.p_v1.probs()[v1] * law.p_v2.probs()[v2];
            if pv == 0.0 {
                continue;
            }
            for x1 in 0..nx1 {
                for x2 in 0..nx2 {
                    let w = pv * law.x1_given_v1.get(v1, x1) * law.x2_given_v2.get(v2, x2);
                    if w == 0.0 {
                        continue;
                    }
                    let base = (((v1 * nv2 + v2) * nx1 + x1) * nx2 + x2) * slice;
                    for (k, &c) in t.slice(x1, x2).iter().enumerate() {
                        probs[base + k] = w * c;
                    }
                }
            }
        }
    }
    Ok(JointLaw { dims, probs })
}

/// Nonzero residues modulo `q`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdditiveCoeffs {
    pub a1: u64,
    pub b1: u64,
    pub a2: u64,
    pub b2: u64,
    pub a3: u64,
    pub b3: u64,
}

/// `Y1 = a1 X1 + b1 X2 + N1`, `Y2 = a2 X1 + b2 X2 + N2`, `Z = a3 X1 + b3 X2 + N3` over `Z_q`.
#[derive(Clone, Debug, PartialEq)]
pub struct AdditiveChannelSpec {
    pub q: u64,
    pub coeffs: AdditiveCoeffs,
    pub noise: [Pmf; 3],
}

pub fn is_prime(q: u64) -> bool {
    q >= 2 && (2..).take_while(|d| d * d <= q).all(|d| q % d != 0)
}

impl AdditiveChannelSpec {
    pub fn new(q: u64, coeffs: AdditiveCoeffs, noise: [Pmf; 3]) -> Result<Self> {
        let spec = AdditiveChannelSpec { q, coeffs, noise };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !is_prime(self.q) {
            return Err(Error::Validation(format!("modulus q = {} is not prime", self.q)));
        }
        let c = self.coeffs;
        for (name, v) in [("a1", c.a1), ("b1", c.b1), ("a2", c.a2), ("b2", c.b2), ("a3", c.a3), ("b3", c.b3)] {
            if v == 0 || v >= self.q {
                return Err(Error::Validation(format!("coefficient {name} = {v} not in 1..{}", self.q - 1)));
            }
        }
        for (i, n) in self.noise.iter().enumerate() {
            if n.len() as u64 != self.q {
                return Err(Error::Validation(format!("noise {} has {} entries, q = {}", i + 1, n.len(), self.q)));
            }
        }
        Ok(())
    }
}

/// Dense tensor of an additive channel, all arithmetic modulo `q`.
pub fn additive_to_tensor(spec: &AdditiveChannelSpec) -> Result<ChannelTensor> {
    spec.validate()?;
    let q = spec.q as usize;
    let c = spec.coeffs;
    let [n1, n2, n3] = &spec.noise;
    let sub = |y: usize, a: u64, x1: usize, b: u64, x2: usize| -> usize {
        let m = spec.q;
        ((y as u64 + 2 * m * m - a * x1 as u64 - b * x2 as u64) % m) as usize
    };
    ChannelTensor::from_fn([q; 5], |x1, x2, y1, y2, z| {
        n1.probs()[sub(y1, c.a1, x1, c.b1, x2)]
            * n2.probs()[sub(y2, c.a2, x1, c.b2, x2)]
            * n3.probs()[sub(z, c.a3, x1, c.b3, x2)]
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianCoeffs {
    pub a1: f64,
    pub b1: f64,
    pub a2: f64,
    pub b2: f64,
    pub a3: f64,
    pub b3: f64,
}

/// Parameters of `Y1 = a1 X1 + b1 X2 + N1`, `Y2 = a2 X1 + b2 X2 + N2`, `Z = a3 X1 + b3 X2 + N3`
/// with Gaussian noise variances `v1, v2, v3`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussianChannelSpec {
    pub coeffs: GaussianCoeffs,
    pub variances: [f64; 3],
}

impl GaussianChannelSpec {
    pub fn new(coeffs: GaussianCoeffs, variances: [f64; 3]) -> Result<Self> {
        let s = GaussianChannelSpec { coeffs, variances };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.variances.iter().any(|&v| !(v.is_finite() && v > 0.0)) {
            return Err(Error::Validation(format!("noise variances {:?} must be positive", self.variances)));
        }
        let c = self.coeffs;
        if [c.a1, c.b1, c.a2, c.b2, c.a3, c.b3].iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation("Gaussian coefficients must be finite".into()));
        }
        Ok(())
    }
}

/// Per-symbol costs and budgets for the two inputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostSpec {
    pub g1: Vec<f64>,
    pub g2: Vec<f64>,
    pub c1: f64,
    pub c2: f64,
}

impl CostSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.c1.is_finite() && self.c2.is_finite()) || self.g1.iter().chain(&self.g2).any(|v| !v.is_finite()) {
            return Err(Error::Validation("costs and budgets must be finite".into()));
        }
        Ok(())
    }

    pub fn admits(&self, law: &JointInputLaw) -> Result<bool> {
        let (a, b) = average_cost(law, self)?;
        Ok(a <= self.c1 + 1e-12 && b <= self.c2 + 1e-12)
    }
}

/// `(Σ P_{X1} g1, Σ P_{X2} g2)`.
pub fn average_cost(law: &JointInputLaw, cost: &CostSpec) -> Result<(f64, f64)> {
    let (p1, p2) = (law.p_x1(), law.p_x2());
    if p1.len() != cost.g1.len() || p2.len() != cost.g2.len() {
        return Err(Error::Dimension(format!(
            "cost vectors of length ({}, {}) for inputs of size ({}, {})",
            cost.g1.len(),
            cost.g2.len(),
            p1.len(),
            p2.len()
        )));
    }
    let dot = |p: &Pmf, g: &[f64]| p.probs().iter().zip(g).map(|(a, b)| a * b).sum::<f64>();
    Ok((dot(&p1, &cost.g1), dot(&p2, &cost.g2)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bern(p: f64) -> Pmf {
        Pmf::new(vec![1.0 - p, p]).unwrap()
    }

    #[test]
    fn xor_tensor_is_deterministic() {
        let ones = AdditiveCoeffs { a1: 1, b1: 1, a2: 1, b2: 1, a3: 1, b3: 1 };
        let spec = AdditiveChannelSpec::new(2, ones, [bern(0.0), bern(0.0), bern(0.0)]).unwrap();
        let t = additive_to_tensor(&spec).unwrap();
        for x1 in 0..2 {
            for x2 in 0..2 {
                let y = x1 ^ x2;
                assert_eq!(t.get(x1, x2, y, y, y), 1.0);
            }
        }
    }

    #[test]
    fn validation_diagnostics() {
        let mut probs = vec![0.5; 8];
        let d = validate_channel([2, 2, 1, 1, 2], &probs).unwrap();
        assert!(d.is_empty());
        probs[2] = 0.49;
        let d = validate_channel([2, 2, 1, 1, 2], &probs).unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!((d[0].x1, d[0].x2), (0, 1));
        assert!(matches!(d[0].problem, SliceProblem::Mass(m) if (m - 0.99).abs() < 1e-12));
        probs[2] = 0.5;
        probs[7] = -0.5;
        let d = validate_channel([2, 2, 1, 1, 2], &probs).unwrap();
        assert!(matches!(d[0].problem, SliceProblem::Negative { z: 1, .. }));
        assert_eq!((d[0].x1, d[0].x2), (1, 1));
        assert!(ChannelTensor::new([2, 2, 1, 1, 2], probs).is_err());
    }

    #[test]
    fn sizing_guard() {
        assert!(matches!(validate_channel([100, 100, 100, 100, 100], &[]), Err(Error::Sizing(_))));
    }

    #[test]
    fn prime_check() {
        let primes: Vec<u64> = (0..30).filter(|&q| is_prime(q)).collect();
        assert_eq!(primes, vec![2, 3, 5, 7, 11, 13, 17, 19, 23, 29]);
        let ones = AdditiveCoeffs { a1: 1, b1: 1, a2: 1, b2: 1, a3: 1, b3: 1 };
        let u = Pmf::uniform(4);
        assert!(AdditiveChannelSpec::new(4, ones, [u.clone(), u.clone(), u]).is_err());
    }

    #[test]
    fn cost_examples() {
        let law = JointInputLaw::identity(Pmf::uniform(2), Pmf::uniform(3));
        let zero = CostSpec { g1: vec![0.0; 2], g2: vec![0.0; 3], c1: 0.0, c2: 0.0 };
        assert_eq!(average_cost(&law, &zero).unwrap(), (0.0, 0.0));
        let c = CostSpec { g1: vec![0.0, 2.0], g2: vec![0.0; 3], c1: 1.0, c2: 0.0 };
        assert_eq!(average_cost(&law, &c).unwrap().0, 1.0);
        assert!(c.admits(&law).unwrap());
    }
}
