//! Random codebooks, Monte Carlo decoding, exact leakage and the lemma verification harnesses.
//!
//! Messages and randomization indices are 0-based. Codeword `m * L + l` of a user carries
//! message `m` with randomization index `l`. Sequences over an alphabet of size `d` are indexed
//! with the first letter most significant.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::channel::{axis, compose_effective, ChannelTensor, JointInputLaw};
use crate::error::{Error, Result};
use crate::exponents::law_from_types;
use crate::measures::{breve_mi, breve_mi_joint_output, log_sum_exp, mi_down, mi_up_conditional, CondPmf, OrderParam};
use crate::typelib::{
    enumerate_conditional_class, enumerate_type_class, ln_nu_exact, ln_num_types, sample_conditional_type_class,
    sample_type_class, JointType, TypeVector,
};

pub const MAX_CODEBOOK_SYMBOLS: usize = 10_000_000;
pub const MAX_LEAKAGE_ENTRIES: usize = 10_000_000;
pub const MAX_ENSEMBLE: usize = 1_000_000;
pub const MAX_TABLE_ENTRIES: usize = 10_000_000;
pub const MAX_VERIFY_WORK: usize = 1_000_000_000;
pub const MAX_CLASS: usize = 100_000;
pub const TIE_RTOL: f64 = 1e-12;
pub const VERDICT_SLACK: f64 = 1e-9;
pub const Z_95: f64 = 1.959_963_984_540_054;

const CHUNK: usize = 256;

/// Stream namespaces under one master seed.
pub mod streams {
    pub const CODEBOOK: u64 = 1;
    pub const TRIALS: u64 = 2;
    pub const ENSEMBLE: u64 = 3;
}

/// ChaCha8 stream `id` of `namespace` under `seed`; independent of scheduling.
pub fn stream_rng(seed: u64, namespace: u64, id: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&namespace.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(id);
    rng
}

/// How codewords and channel inputs are drawn.
#[derive(Clone, Debug, PartialEq)]
pub enum InputMode {
    Iid(JointInputLaw),
    /// Joint types of `(V1, X1)` and `(V2, X2)`.
    ConstantComposition { t1: JointType, t2: JointType },
}

impl InputMode {
    pub fn label(&self) -> &'static str {
        match self {
            InputMode::Iid(_) => "iid",
            InputMode::ConstantComposition { .. } => "constant_composition",
        }
    }

    /// `[|V1|, |V2|, |X1|, |X2|]`.
    pub fn sizes(&self) -> [usize; 4] {
        match self {
            InputMode::Iid(law) => law.sizes(),
            InputMode::ConstantComposition { t1, t2 } => [t1.dims().0, t2.dims().0, t1.dims().1, t2.dims().1],
        }
    }

    /// Single-letter law with the declared marginals.
    pub fn law(&self) -> Result<JointInputLaw> {
        match self {
            InputMode::Iid(law) => Ok(law.clone()),
            InputMode::ConstantComposition { t1, t2 } => law_from_types(t1, t2),
        }
    }

    pub fn check(&self, t: &ChannelTensor, n: usize) -> Result<()> {
        if n == 0 {
            return Err(Error::Validation("blocklength must be at least 1".into()));
        }
        if let InputMode::ConstantComposition { t1, t2 } = self {
            if t1.n() != n || t2.n() != n {
                return Err(Error::Validation(format!(
                    "joint types have blocklengths ({}, {}), expected {n}",
                    t1.n(),
                    t2.n()
                )));
            }
        }
        self.law()?.check_compatible(t)
    }

    fn joint_type(&self, u: usize) -> Option<&JointType> {
        match self {
            InputMode::Iid(_) => None,
            InputMode::ConstantComposition { t1, t2 } => Some(if u == 0 { t1 } else { t2 }),
        }
    }

    fn sample_v<R: Rng + ?Sized>(&self, u: usize, n: usize, rng: &mut R) -> Vec<usize> {
        match self {
            InputMode::Iid(law) => {
                let p = if u == 0 { &law.p_v1 } else { &law.p_v2 };
                (0..n).map(|_| sample_index(p.probs(), rng)).collect()
            }
            InputMode::ConstantComposition { .. } => sample_type_class(&self.joint_type(u).unwrap().v_marginal(), rng),
        }
    }

    fn sample_x<R: Rng + ?Sized>(&self, u: usize, v: &[usize], rng: &mut R) -> Result<Vec<usize>> {
        match self {
            InputMode::Iid(law) => {
                let pre = if u == 0 { &law.x1_given_v1 } else { &law.x2_given_v2 };
                Ok(v.iter().map(|&s| sample_index(pre.row(s), rng)).collect())
            }
            InputMode::ConstantComposition { .. } => sample_conditional_type_class(self.joint_type(u).unwrap(), v, rng),
        }
    }

    fn sample_known<R: Rng + ?Sized>(&self, u: usize, n: usize, rng: &mut R) -> Result<Vec<usize>> {
        match self {
            InputMode::Iid(law) => {
                let p = if u == 0 { law.p_x1() } else { law.p_x2() };
                Ok((0..n).map(|_| sample_index(p.probs(), rng)).collect())
            }
            InputMode::ConstantComposition { .. } => Ok(sample_type_class(&self.joint_type(u).unwrap().x_marginal(), rng)),
        }
    }

    /// Codeword sequences of user `u` with their probabilities.
    fn v_support(&self, u: usize, n: usize) -> Result<Vec<(f64, Vec<usize>)>> {
        match self {
            InputMode::Iid(law) => weighted_sequences(if u == 0 { law.p_v1.probs() } else { law.p_v2.probs() }, n),
            InputMode::ConstantComposition { .. } => uniform_class(&self.joint_type(u).unwrap().v_marginal()),
        }
    }

    /// Channel input sequences of user `u` with their probabilities.
    fn x_support(&self, u: usize, n: usize) -> Result<Vec<(f64, Vec<usize>)>> {
        match self {
            InputMode::Iid(law) => {
                let p = if u == 0 { law.p_x1() } else { law.p_x2() };
                weighted_sequences(p.probs(), n)
            }
            InputMode::ConstantComposition { .. } => uniform_class(&self.joint_type(u).unwrap().x_marginal()),
        }
    }

    /// Input sequences averaged over for codeword `v` of user `u`: `v` itself in iid mode
    /// (the table is already composed with the pre-processing), the conditional class otherwise.
    fn expansions(&self, u: usize, v: &[usize]) -> Result<Vec<Vec<usize>>> {
        match self.joint_type(u) {
            None => Ok(vec![v.to_vec()]),
            Some(jt) => enumerate_conditional_class(jt, v, MAX_CLASS),
        }
    }

    fn pre(&self, u: usize) -> Option<&CondPmf> {
        match self {
            InputMode::Iid(law) => Some(if u == 0 { &law.x1_given_v1 } else { &law.x2_given_v2 }),
            InputMode::ConstantComposition { .. } => None,
        }
    }
}

fn weighted_sequences(p: &[f64], n: usize) -> Result<Vec<(f64, Vec<usize>)>> {
    let total = checked_pow(p.len(), n)?;
    if total > MAX_ENSEMBLE {
        return Err(Error::Sizing(format!("{total} sequences exceed the enumeration budget {MAX_ENSEMBLE}")));
    }
    let mut out = Vec::new();
    for idx in 0..total {
        let seq = digits(idx, p.len(), n);
        let w: f64 = seq.iter().map(|&s| p[s]).product();
        if w > 0.0 {
            out.push((w, seq));
        }
    }
    Ok(out)
}

fn uniform_class(t: &TypeVector) -> Result<Vec<(f64, Vec<usize>)>> {
    let seqs = enumerate_type_class(t, MAX_ENSEMBLE)?;
    let w = 1.0 / seqs.len() as f64;
    Ok(seqs.into_iter().map(|s| (w, s)).collect())
}

fn digits(mut idx: usize, d: usize, n: usize) -> Vec<usize> {
    let mut out = vec![0; n];
    for slot in out.iter_mut().rev() {
        *slot = idx % d;
        idx /= d;
    }
    out
}

fn checked_pow(base: usize, exp: usize) -> Result<usize> {
    base.checked_pow(exp as u32)
        .filter(|_| exp <= u32::MAX as usize)
        .ok_or_else(|| Error::Sizing(format!("{base}^{exp} overflows")))
}

fn checked_mul(a: usize, b: usize) -> Result<usize> {
    a.checked_mul(b).ok_or_else(|| Error::Sizing(format!("{a} * {b} overflows")))
}

fn sample_index<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            acc += p;
            last = i;
            if u < acc {
                return i;
            }
        }
    }
    last
}

fn user_index(user: usize) -> Result<usize> {
    match user {
        1 | 2 => Ok(user - 1),
        _ => Err(Error::Validation(format!("user must be 1 or 2, got {user}"))),
    }
}

/// Per-letter conditional laws `W(o | a, b)`.
#[derive(Clone, Debug)]
struct LetterTable {
    nb: usize,
    no: usize,
    data: Vec<f64>,
}

impl LetterTable {
    fn get(&self, a: usize, b: usize) -> &[f64] {
        let k = (a * self.nb + b) * self.no;
        &self.data[k..k + self.no]
    }

    /// `Σ_{x_a, x_b} P(x_a|a) P(x_b|b) W(o|x_a, x_b)`; `None` keeps that argument as is.
    fn compose(&self, na: usize, pre_a: Option<&CondPmf>, pre_b: Option<&CondPmf>) -> LetterTable {
        let (ma, mb) = (pre_a.map_or(na, |c| c.n_in()), pre_b.map_or(self.nb, |c| c.n_in()));
        let weight = |pre: Option<&CondPmf>, i: usize, x: usize| pre.map_or((i == x) as u8 as f64, |c| c.get(i, x));
        let mut data = vec![0.0; ma * mb * self.no];
        for a in 0..ma {
            for b in 0..mb {
                let out = &mut data[(a * mb + b) * self.no..(a * mb + b + 1) * self.no];
                for xa in 0..na {
                    let wa = weight(pre_a, a, xa);
                    if wa == 0.0 {
                        continue;
                    }
                    for xb in 0..self.nb {
                        let w = wa * weight(pre_b, b, xb);
                        if w == 0.0 {
                            continue;
                        }
                        for (o, &c) in out.iter_mut().zip(self.get(xa, xb)) {
                            *o += w * c;
                        }
                    }
                }
            }
        }
        LetterTable { nb: mb, no: self.no, data }
    }

    /// `P(o^n) = mean over (a^n, b^n) of Π_t W(o_t | a_t, b_t)`.
    fn seq_output(&self, a_opts: &[Vec<usize>], b_opts: &[Vec<usize>]) -> Vec<f64> {
        let n = a_opts[0].len();
        let mut total = vec![0.0; self.no.pow(n as u32)];
        let w = 1.0 / (a_opts.len() * b_opts.len()) as f64;
        for a in a_opts {
            for b in b_opts {
                let mut cur = vec![w];
                for t in 0..n {
                    let row = self.get(a[t], b[t]);
                    let mut next = Vec::with_capacity(cur.len() * self.no);
                    for &c in &cur {
                        next.extend(row.iter().map(|&r| c * r));
                    }
                    cur = next;
                }
                for (s, c) in total.iter_mut().zip(cur) {
                    *s += c;
                }
            }
        }
        total
    }

    /// `ln` of the mean over `b^n ∈ b_opts` of `Π_t W(o_t | a_t, b_t)`.
    fn seq_loglik(&self, a: &[usize], b_opts: &[Vec<usize>], o: &[usize]) -> f64 {
        let terms = b_opts.iter().map(|b| (0..a.len()).map(|t| self.get(a[t], b[t])[o[t]].ln()).sum::<f64>());
        log_sum_exp(terms) - (b_opts.len() as f64).ln()
    }
}

/// `W_Z(z | x1, x2)` with `a = x1`, `b = x2`.
fn z_table(t: &ChannelTensor) -> LetterTable {
    let [nx1, nx2, ny1, ny2, nz] = t.sizes();
    let mut data = Vec::with_capacity(nx1 * nx2 * nz);
    for x1 in 0..nx1 {
        for x2 in 0..nx2 {
            let s = t.slice(x1, x2);
            data.extend((0..nz).map(|z| (0..ny1 * ny2).map(|k| s[k * nz + z]).sum::<f64>()));
        }
    }
    LetterTable { nb: nx2, no: nz, data }
}

/// Observation of the receiver decoding user `u`: `a` is the receiver's own input, `b` is user `u`'s input.
fn y_table(t: &ChannelTensor, u: usize) -> LetterTable {
    let [nx1, nx2, ny1, ny2, nz] = t.sizes();
    let (na, nb, no) = if u == 0 { (nx2, nx1, ny2) } else { (nx1, nx2, ny1) };
    let mut data = vec![0.0; na * nb * no];
    for x1 in 0..nx1 {
        for x2 in 0..nx2 {
            let s = t.slice(x1, x2);
            let (a, b) = if u == 0 { (x2, x1) } else { (x1, x2) };
            for y1 in 0..ny1 {
                for y2 in 0..ny2 {
                    let p: f64 = (0..nz).map(|z| s[(y1 * ny2 + y2) * nz + z]).sum();
                    let o = if u == 0 { y2 } else { y1 };
                    data[(a * nb + b) * no + o] += p;
                }
            }
        }
    }
    LetterTable { nb, no, data }
}

fn z_model(t: &ChannelTensor, mode: &InputMode) -> LetterTable {
    let base = z_table(t);
    match mode {
        InputMode::Iid(_) => base.compose(t.sizes()[0], mode.pre(0), mode.pre(1)),
        InputMode::ConstantComposition { .. } => base,
    }
}

fn y_model(t: &ChannelTensor, mode: &InputMode, u: usize) -> LetterTable {
    let base = y_table(t, u);
    let na = t.sizes()[1 - u];
    match mode {
        InputMode::Iid(_) => base.compose(na, None, mode.pre(u)),
        InputMode::ConstantComposition { .. } => base,
    }
}

/// First index within `TIE_RTOL` (relative, in likelihood) of the maximum.
fn argmax_lowest(lls: &[f64]) -> usize {
    let best = lls.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if best == f64::NEG_INFINITY {
        return 0;
    }
    lls.iter().position(|&l| l >= best - TIE_RTOL).unwrap_or(0)
}

#[derive(Clone, Debug, PartialEq)]
pub struct CodebookParams {
    pub n: usize,
    pub m: [usize; 2],
    pub l: [usize; 2],
    pub mode: InputMode,
}

impl CodebookParams {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.m.contains(&0) || self.l.contains(&0) {
            return Err(Error::Validation("blocklength and all message and randomization counts must be at least 1".into()));
        }
        if let InputMode::ConstantComposition { t1, t2 } = &self.mode {
            if t1.n() != self.n || t2.n() != self.n {
                return Err(Error::Validation(format!(
                    "joint types have blocklengths ({}, {}), expected {}",
                    t1.n(),
                    t2.n(),
                    self.n
                )));
            }
        }
        Ok(())
    }

    pub fn words(&self, u: usize) -> usize {
        self.m[u] * self.l[u]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Codebook {
    params: CodebookParams,
    seed: Option<u64>,
    words: [Vec<Vec<usize>>; 2],
}

impl Codebook {
    /// Codebook from explicit codeword lists.
    pub fn from_words(params: CodebookParams, words: [Vec<Vec<usize>>; 2]) -> Result<Self> {
        params.validate()?;
        let sizes = params.mode.sizes();
        for u in 0..2 {
            if words[u].len() != params.words(u) {
                return Err(Error::Dimension(format!(
                    "user {} has {} codewords, expected {}",
                    u + 1,
                    words[u].len(),
                    params.words(u)
                )));
            }
            for w in &words[u] {
                if w.len() != params.n || w.iter().any(|&s| s >= sizes[u]) {
                    return Err(Error::Dimension(format!("codeword {w:?} of user {} is malformed", u + 1)));
                }
                if let Some(jt) = params.mode.joint_type(u) {
                    if TypeVector::of_sequence(w, sizes[u])? != jt.v_marginal() {
                        return Err(Error::Validation(format!("codeword {w:?} of user {} has the wrong type", u + 1)));
                    }
                }
            }
        }
        Ok(Codebook { params, seed: None, words })
    }

    pub fn params(&self) -> &CodebookParams {
        &self.params
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    /// Codewords of `user` (1 or 2).
    pub fn words(&self, user: usize) -> Result<&[Vec<usize>]> {
        Ok(&self.words[user_index(user)?])
    }

    pub fn word(&self, user: usize, m: usize, l: usize) -> Result<&[usize]> {
        let u = user_index(user)?;
        if m >= self.params.m[u] || l >= self.params.l[u] {
            return Err(Error::Validation(format!("index ({m}, {l}) out of range for user {user}")));
        }
        Ok(&self.words[u][m * self.params.l[u] + l])
    }
}

pub fn generate_codebook(params: CodebookParams, seed: u64) -> Result<Codebook> {
    params.validate()?;
    for u in 0..2 {
        let symbols = checked_mul(params.words(u), params.n)?;
        if symbols > MAX_CODEBOOK_SYMBOLS {
            return Err(Error::Sizing(format!(
                "user {} needs {symbols} codeword symbols, budget is {MAX_CODEBOOK_SYMBOLS}",
                u + 1
            )));
        }
    }
    let words = [0, 1].map(|u| {
        let mut rng = stream_rng(seed, streams::CODEBOOK, u as u64);
        (0..params.words(u)).map(|_| params.mode.sample_v(u, params.n, &mut rng)).collect()
    });
    Ok(Codebook { params, seed: Some(seed), words })
}

/// Stochastic encoder: returns `(v^n, x^n)` for message `m` of `user`.
pub fn encode<R: Rng + ?Sized>(cb: &Codebook, user: usize, m: usize, rng: &mut R) -> Result<(Vec<usize>, Vec<usize>)> {
    let u = user_index(user)?;
    if m >= cb.params.m[u] {
        return Err(Error::Validation(format!("message {m} out of range 0..{}", cb.params.m[u])));
    }
    let l = rng.random_range(0..cb.params.l[u]);
    let v = cb.words[u][m * cb.params.l[u] + l].clone();
    let x = cb.params.mode.sample_x(u, &v, rng)?;
    Ok((v, x))
}

/// ML decoder with per-codeword input expansions cached.
#[derive(Clone, Debug)]
pub struct Decoder<'a> {
    cb: &'a Codebook,
    tables: [LetterTable; 2],
    expansions: [Vec<Vec<Vec<usize>>>; 2],
}

impl<'a> Decoder<'a> {
    pub fn new(t: &ChannelTensor, cb: &'a Codebook) -> Result<Self> {
        cb.params.mode.check(t, cb.params.n)?;
        let tables = [y_model(t, &cb.params.mode, 0), y_model(t, &cb.params.mode, 1)];
        let mut expansions: [Vec<Vec<Vec<usize>>>; 2] = Default::default();
        for (u, e) in expansions.iter_mut().enumerate() {
            *e = cb.words[u].iter().map(|w| cb.params.mode.expansions(u, w)).collect::<Result<_>>()?;
        }
        Ok(Decoder { cb, tables, expansions })
    }

    /// Message estimate of `user` from the other receiver's output and input.
    pub fn decode(&self, user: usize, y: &[usize], own_x: &[usize]) -> Result<usize> {
        let u = user_index(user)?;
        let n = self.cb.params.n;
        if y.len() != n || own_x.len() != n {
            return Err(Error::Dimension(format!("sequences must have length {n}")));
        }
        let table = &self.tables[u];
        let lls: Vec<f64> = self.expansions[u].iter().map(|e| table.seq_loglik(own_x, e, y)).collect();
        Ok(argmax_lowest(&lls) / self.cb.params.l[u])
    }
}

pub fn ml_decode(t: &ChannelTensor, cb: &Codebook, user: usize, y: &[usize], own_x: &[usize]) -> Result<usize> {
    Decoder::new(t, cb)?.decode(user, y, own_x)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Leakage {
    pub joint: f64,
    pub m1: f64,
    pub m2: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimResult {
    pub trials: usize,
    pub errors: usize,
    pub error_rate: f64,
    pub wilson: [f64; 2],
    #[serde(skip_serializing_if = "Option::is_none")]
    pub leakage: Option<Leakage>,
}

/// Wilson score interval at `z`.
pub fn wilson_interval(successes: usize, trials: usize, z: f64) -> [f64; 2] {
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let lo = if successes == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if successes == trials { 1.0 } else { (center + half).min(1.0) };
    [lo, hi]
}

/// Monte Carlo union error probability; trial `k` uses its own stream.
pub fn run_error_trials(t: &ChannelTensor, cb: &Codebook, trials: usize, seed: u64) -> Result<SimResult> {
    if trials == 0 {
        return Err(Error::Validation("trials must be at least 1".into()));
    }
    let dec = Decoder::new(t, cb)?;
    let [_, _, _, ny2, nz] = t.sizes();
    let p = &cb.params;
    let errors = (0..trials)
        .into_par_iter()
        .map(|k| -> Result<usize> {
            let mut rng = stream_rng(seed, streams::TRIALS, k as u64);
            let m1 = rng.random_range(0..p.m[0]);
            let m2 = rng.random_range(0..p.m[1]);
            let (_, x1) = encode(cb, 1, m1, &mut rng)?;
            let (_, x2) = encode(cb, 2, m2, &mut rng)?;
            let mut y1 = Vec::with_capacity(p.n);
            let mut y2 = Vec::with_capacity(p.n);
            for i in 0..p.n {
                let o = sample_index(t.slice(x1[i], x2[i]), &mut rng);
                y1.push(o / (ny2 * nz));
                y2.push((o / nz) % ny2);
            }
            let h1 = dec.decode(1, &y2, &x2)?;
            let h2 = dec.decode(2, &y1, &x1)?;
            Ok((h1 != m1 || h2 != m2) as usize)
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))?;
    Ok(SimResult {
        trials,
        errors,
        error_rate: errors as f64 / trials as f64,
        wilson: wilson_interval(errors, trials, Z_95),
        leakage: None,
    })
}

fn kl(p: &[f64], q: &[f64]) -> f64 {
    p.iter().zip(q).filter(|(&a, _)| a > 0.0).map(|(&a, &b)| a * (a / b).ln()).sum::<f64>().max(0.0)
}

fn mean_of(vs: &[&Vec<f64>]) -> Vec<f64> {
    let mut out = vec![0.0; vs[0].len()];
    for v in vs {
        for (o, x) in out.iter_mut().zip(v.iter()) {
            *o += x;
        }
    }
    let k = vs.len() as f64;
    out.iter_mut().for_each(|o| *o /= k);
    out
}

/// Exact `I(M1,M2;Z^n)`, `I(M1;Z^n)` and `I(M2;Z^n)` for uniform messages.
pub fn exact_leakage(t: &ChannelTensor, cb: &Codebook) -> Result<Leakage> {
    let p = &cb.params;
    p.mode.check(t, p.n)?;
    let nz = t.sizes()[4];
    let entries = checked_mul(checked_mul(checked_pow(nz, p.n)?, p.words(0))?, p.words(1))?;
    if entries > MAX_LEAKAGE_ENTRIES {
        return Err(Error::Sizing(format!(
            "exact leakage needs {entries} entries, budget is {MAX_LEAKAGE_ENTRIES}; leakage has no Monte Carlo mode"
        )));
    }
    let table = z_model(t, &p.mode);
    let exp: [Vec<Vec<Vec<usize>>>; 2] = [
        cb.words[0].iter().map(|w| p.mode.expansions(0, w)).collect::<Result<_>>()?,
        cb.words[1].iter().map(|w| p.mode.expansions(1, w)).collect::<Result<_>>()?,
    ];
    let per_msg: Vec<Vec<Vec<f64>>> = (0..p.m[0])
        .into_par_iter()
        .map(|m1| {
            (0..p.m[1])
                .map(|m2| {
                    let outs: Vec<Vec<f64>> = (0..p.l[0])
                        .flat_map(|l1| (0..p.l[1]).map(move |l2| (l1, l2)))
                        .map(|(l1, l2)| table.seq_output(&exp[0][m1 * p.l[0] + l1], &exp[1][m2 * p.l[1] + l2]))
                        .collect();
                    mean_of(&outs.iter().collect::<Vec<_>>())
                })
                .collect()
        })
        .collect();
    let all: Vec<&Vec<f64>> = per_msg.iter().flatten().collect();
    let pz = mean_of(&all);
    let joint = all.iter().map(|v| kl(v, &pz)).sum::<f64>() / all.len() as f64;
    let m1 = per_msg.iter().map(|row| kl(&mean_of(&row.iter().collect::<Vec<_>>()), &pz)).sum::<f64>() / p.m[0] as f64;
    let m2 = (0..p.m[1])
        .map(|j| kl(&mean_of(&per_msg.iter().map(|row| &row[j]).collect::<Vec<_>>()), &pz))
        .sum::<f64>()
        / p.m[1] as f64;
    Ok(Leakage { joint, m1, m2 })
}

/// Codebook ensemble treatment in the verification harnesses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum VerifyMethod {
    Enumerate,
    Sampled { realizations: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyRow {
    pub s: f64,
    /// Left side of the inequality.
    #[serde(with = "crate::serde_num")]
    pub lhs: f64,
    /// Ensemble mean of the divergence (resolvability) or of the ML error (Gallager).
    #[serde(with = "crate::serde_num")]
    pub expectation: f64,
    #[serde(with = "crate::serde_num")]
    pub rhs: f64,
    #[serde(with = "crate::serde_num")]
    pub slack: f64,
    #[serde(with = "crate::serde_num::option", skip_serializing_if = "Option::is_none", default)]
    pub ci_half_width: Option<f64>,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyReport {
    pub bound: String,
    pub mode: String,
    pub method: VerifyMethod,
    pub n: usize,
    pub counts: Vec<usize>,
    pub realizations: usize,
    pub rows: Vec<VerifyRow>,
    pub all_hold: bool,
}

fn check_s_grid(grid: &[f64], allow_one: bool) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::Validation("s grid is empty".into()));
    }
    for &s in grid {
        if !(s > 0.0 && (s < 1.0 || (allow_one && s == 1.0))) {
            return Err(Error::Domain(format!(
                "s = {s} outside {}",
                if allow_one { "(0, 1]" } else { "(0, 1)" }
            )));
        }
    }
    Ok(())
}

/// Deterministic parallel sum of `f(0..count)`, chunked so the result does not depend on threads.
fn chunked_sum<F>(count: usize, width: usize, f: F) -> Result<Vec<f64>>
where
    F: Fn(usize) -> Result<Vec<f64>> + Sync,
{
    let parts: Vec<Vec<f64>> = (0..count.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut acc = vec![0.0; width];
            for r in c * CHUNK..((c + 1) * CHUNK).min(count) {
                for (a, b) in acc.iter_mut().zip(f(r)?) {
                    *a += b;
                }
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    let mut total = vec![0.0; width];
    for p in parts {
        for (a, b) in total.iter_mut().zip(p) {
            *a += b;
        }
    }
    Ok(total)
}

/// `D_{1+s}(p ‖ q)` for every `s`.
fn renyi_all(p: &[f64], q: &[f64], grid: &[f64]) -> Vec<f64> {
    grid.iter()
        .map(|&s| {
            let terms = p.iter().zip(q).filter(|(&a, _)| a > 0.0).map(|(&a, &b)| (1.0 + s) * a.ln() - s * b.ln());
            (log_sum_exp(terms) / s).max(0.0)
        })
        .collect()
}

struct Moments {
    mean: Vec<f64>,
    half: Option<Vec<f64>>,
    realizations: usize,
}

fn finish_moments(sums: Vec<f64>, k: usize, count: usize, sampled: bool) -> Moments {
    let c = count as f64;
    let mean: Vec<f64> = sums[..k].iter().map(|s| s / c).collect();
    let half = sampled.then(|| {
        (0..k)
            .map(|i| {
                if count < 2 {
                    return f64::INFINITY;
                }
                let var = ((sums[k + i] - c * mean[i] * mean[i]) / (c - 1.0)).max(0.0);
                Z_95 * (var / c).sqrt()
            })
            .collect()
    });
    Moments { mean, half, realizations: count }
}

fn check_method(method: VerifyMethod) -> Result<()> {
    if let VerifyMethod::Sampled { realizations: 0 } = method {
        return Err(Error::Validation("sampled mode needs at least one realization".into()));
    }
    Ok(())
}

fn ensemble_size(base: &[usize]) -> Result<usize> {
    let mut total = 1usize;
    for &b in base {
        total = checked_mul(total, b)?;
    }
    if total > MAX_ENSEMBLE {
        return Err(Error::Sizing(format!("{total} codebook realizations exceed the enumeration budget {MAX_ENSEMBLE}")));
    }
    Ok(total)
}

/// Soft-covering check: `s E_C[D_{1+s}(P_{Z^n|C} ‖ P_{Z^n})]` against `Σ_S L_S^{-s} e^{s n I_S}`
/// with Rényi information `I↓_{1+s}(Z;V_S)` (iid) or `ν(|X1|)ν(|X2|)`-factored Augustin information
/// `Ĭ_{1/(1-s)}(Z;V_S)` (constant composition).
pub fn verify_resolvability(
    t: &ChannelTensor,
    mode: &InputMode,
    l: [usize; 2],
    n: usize,
    s_grid: &[f64],
    method: VerifyMethod,
    seed: u64,
) -> Result<VerifyReport> {
    mode.check(t, n)?;
    check_method(method)?;
    let cc = matches!(mode, InputMode::ConstantComposition { .. });
    check_s_grid(s_grid, !cc)?;
    if l.contains(&0) {
        return Err(Error::Validation("randomization counts must be at least 1".into()));
    }
    let nz = t.sizes()[4];
    let len = checked_pow(nz, n)?;
    let table = z_model(t, mode);
    let law = mode.law()?;
    let j = compose_effective(t, &law)?;
    let k = s_grid.len();

    let codebook_output = |w1: &[&Vec<usize>], w2: &[&Vec<usize>]| -> Result<Vec<f64>> {
        let mut acc = vec![0.0; len];
        for a in w1 {
            let ea = mode.expansions(0, a)?;
            for b in w2 {
                for (s, o) in acc.iter_mut().zip(table.seq_output(&ea, &mode.expansions(1, b)?)) {
                    *s += o;
                }
            }
        }
        let c = (w1.len() * w2.len()) as f64;
        acc.iter_mut().for_each(|x| *x /= c);
        Ok(acc)
    };

    let supports = [mode.v_support(0, n)?, mode.v_support(1, n)?];
    checked_mul(checked_mul(supports[0].len(), supports[1].len())?, len)
        .ok()
        .filter(|&e| e <= MAX_TABLE_ENTRIES)
        .ok_or_else(|| Error::Sizing("output table for the reference law exceeds the budget".into()))?;
    let pairs: Vec<Vec<f64>> = supports[0]
        .par_iter()
        .flat_map_iter(|(_, a)| supports[1].iter().map(move |(_, b)| (a, b)))
        .map(|(a, b)| codebook_output(&[a], &[b]))
        .collect::<Result<_>>()?;
    let mut reference = vec![0.0; len];
    for (i, (w1, _)) in supports[0].iter().enumerate() {
        for (jj, (w2, _)) in supports[1].iter().enumerate() {
            for (r, o) in reference.iter_mut().zip(&pairs[i * supports[1].len() + jj]) {
                *r += w1 * w2 * o;
            }
        }
    }

    let moments = match method {
        VerifyMethod::Enumerate => {
            let (c1, c2) = (supports[0].len(), supports[1].len());
            let mut radices = vec![c1; l[0]];
            radices.extend(vec![c2; l[1]]);
            let count = ensemble_size(&radices)?;
            checked_mul(count, checked_mul(l[0] * l[1], len)?)
                .ok()
                .filter(|&w| w <= MAX_VERIFY_WORK)
                .ok_or_else(|| Error::Sizing("enumeration work exceeds the budget".into()))?;
            let sums = chunked_sum(count, k, |r| {
                let mut rest = r;
                let mut weight = 1.0;
                let mut idx = Vec::with_capacity(l[0] + l[1]);
                for &rad in &radices {
                    idx.push(rest % rad);
                    rest /= rad;
                }
                for (pos, &i) in idx.iter().enumerate() {
                    weight *= if pos < l[0] { supports[0][i].0 } else { supports[1][i].0 };
                }
                let mut out = vec![0.0; len];
                for &a in &idx[..l[0]] {
                    for &b in &idx[l[0]..] {
                        for (o, v) in out.iter_mut().zip(&pairs[a * c2 + b]) {
                            *o += v;
                        }
                    }
                }
                let c = (l[0] * l[1]) as f64;
                out.iter_mut().for_each(|o| *o /= c);
                Ok(renyi_all(&out, &reference, s_grid).into_iter().map(|d| weight * d).collect())
            })?;
            finish_moments(sums, k, 1, false).with_realizations(count)
        }
        VerifyMethod::Sampled { realizations } => {
            let sums = chunked_sum(realizations, 2 * k, |r| {
                let mut rng = stream_rng(seed, streams::ENSEMBLE, r as u64);
                let w1: Vec<Vec<usize>> = (0..l[0]).map(|_| mode.sample_v(0, n, &mut rng)).collect();
                let w2: Vec<Vec<usize>> = (0..l[1]).map(|_| mode.sample_v(1, n, &mut rng)).collect();
                let out = codebook_output(&w1.iter().collect::<Vec<_>>(), &w2.iter().collect::<Vec<_>>())?;
                let d = renyi_all(&out, &reference, s_grid);
                Ok(d.iter().cloned().chain(d.iter().map(|x| x * x)).collect())
            })?;
            finish_moments(sums, k, realizations, true)
        }
    };

    use axis::*;
    let ln_nu = if cc { ln_nu_exact(law.sizes()[2], n) + ln_nu_exact(law.sizes()[3], n) } else { 0.0 };
    let subsets: [(&[usize], f64); 3] =
        [(&[V1], l[0] as f64), (&[V2], l[1] as f64), (&[V1, V2], (l[0] * l[1]) as f64)];
    let rows = s_grid
        .iter()
        .enumerate()
        .map(|(i, &s)| -> Result<VerifyRow> {
            let mut rhs = 0.0;
            for (vs, ls) in subsets {
                let info = if cc {
                    breve_mi(&j.cond_pmf(&[Z], vs), &j.pmf(vs), 1.0 / (1.0 - s))?
                } else {
                    mi_down(&j.joint_pmf(&[Z], vs), OrderParam::new(s)?)
                };
                rhs += (ln_nu - s * ls.ln() + s * n as f64 * info).exp();
            }
            let lhs = s * moments.mean[i];
            Ok(VerifyRow {
                s,
                lhs,
                expectation: moments.mean[i],
                rhs,
                slack: rhs - lhs,
                ci_half_width: moments.half.as_ref().map(|h| s * h[i]),
                holds: lhs <= rhs + VERDICT_SLACK,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(report("resolvability", mode, method, n, l.to_vec(), moments.realizations, rows))
}

impl Moments {
    fn with_realizations(mut self, count: usize) -> Self {
        self.realizations = count;
        self
    }
}

fn report(
    bound: &str,
    mode: &InputMode,
    method: VerifyMethod,
    n: usize,
    counts: Vec<usize>,
    realizations: usize,
    rows: Vec<VerifyRow>,
) -> VerifyReport {
    VerifyReport {
        bound: bound.into(),
        mode: mode.label().into(),
        method,
        n,
        counts,
        realizations,
        all_hold: rows.iter().all(|r| r.holds),
        rows,
    }
}

/// Random-coding check for the receiver that knows its own input and decodes `user`'s codeword
/// among `N` candidates: exact or sampled `E[ML error]` against `N^s e^{-s n I↑_{1/(1+s)}(Y;V|X_own)}`
/// (iid) or the type-counting factored Augustin bound with `Ĭ_{1/(1+s)}(Y X_own; V)` (constant composition).
#[allow(clippy::too_many_arguments)]
pub fn verify_gallager(
    t: &ChannelTensor,
    mode: &InputMode,
    user: usize,
    n_codewords: usize,
    n: usize,
    s_grid: &[f64],
    method: VerifyMethod,
    seed: u64,
) -> Result<VerifyReport> {
    mode.check(t, n)?;
    check_method(method)?;
    check_s_grid(s_grid, true)?;
    let u = user_index(user)?;
    let own = 1 - u;
    if n_codewords == 0 {
        return Err(Error::Validation("N must be at least 1".into()));
    }
    let cc = matches!(mode, InputMode::ConstantComposition { .. });
    let table = y_model(t, mode, u);
    let ny = table.no;
    let len = checked_pow(ny, n)?;
    let k = s_grid.len();
    let nw = n_codewords;

    // Exact error of one realization: `(1/N) Σ_y (Σ_m P_m(y) - P_winner(y))`.
    let realization_error = |liks: &[&Vec<f64>]| -> f64 {
        let mut total = 0.0;
        let mut lls = vec![0.0; liks.len()];
        for y in 0..len {
            let mut sum = 0.0;
            for (m, lk) in liks.iter().enumerate() {
                sum += lk[y];
                lls[m] = lk[y].ln();
            }
            if sum > 0.0 {
                total += sum - liks[argmax_lowest(&lls)][y];
            }
        }
        total / liks.len() as f64
    };

    let moments = match method {
        VerifyMethod::Enumerate => {
            let known = mode.x_support(own, n)?;
            let words = mode.v_support(u, n)?;
            checked_mul(checked_mul(known.len(), words.len())?, len)
                .ok()
                .filter(|&e| e <= MAX_TABLE_ENTRIES)
                .ok_or_else(|| Error::Sizing("likelihood table exceeds the budget".into()))?;
            let liks: Vec<Vec<f64>> = known
                .par_iter()
                .flat_map_iter(|(_, x)| words.iter().map(move |(_, v)| (x, v)))
                .map(|(x, v)| Ok(table.seq_output(std::slice::from_ref(x), &mode.expansions(u, v)?)))
                .collect::<Result<_>>()?;
            let mut radices = vec![known.len()];
            radices.extend(vec![words.len(); nw]);
            let count = ensemble_size(&radices)?;
            checked_mul(count, checked_mul(nw, len)?)
                .ok()
                .filter(|&w| w <= MAX_VERIFY_WORK)
                .ok_or_else(|| Error::Sizing("enumeration work exceeds the budget".into()))?;
            let sums = chunked_sum(count, 1, |r| {
                let kx = r % known.len();
                let mut rest = r / known.len();
                let mut weight = known[kx].0;
                let mut chosen = Vec::with_capacity(nw);
                for _ in 0..nw {
                    let i = rest % words.len();
                    rest /= words.len();
                    weight *= words[i].0;
                    chosen.push(&liks[kx * words.len() + i]);
                }
                Ok(vec![weight * realization_error(&chosen)])
            })?;
            finish_moments(vec![sums[0]; k], k, 1, false).with_realizations(count)
        }
        VerifyMethod::Sampled { realizations } => {
            let sums = chunked_sum(realizations, 2, |r| {
                let mut rng = stream_rng(seed, streams::ENSEMBLE, r as u64);
                let x = mode.sample_known(own, n, &mut rng)?;
                let liks: Vec<Vec<f64>> = (0..nw)
                    .map(|_| {
                        let v = mode.sample_v(u, n, &mut rng);
                        Ok(table.seq_output(std::slice::from_ref(&x), &mode.expansions(u, &v)?))
                    })
                    .collect::<Result<_>>()?;
                let e = realization_error(&liks.iter().collect::<Vec<_>>());
                Ok(vec![e, e * e])
            })?;
            let mut expanded = vec![sums[0]; k];
            expanded.extend(vec![sums[1]; k]);
            finish_moments(expanded, k, realizations, true)
        }
    };

    use axis::*;
    let law = mode.law()?;
    let j = compose_effective(t, &law)?;
    let (ax_y, ax_v, ax_x) = if u == 0 { (Y2, V1, X2) } else { (Y1, V2, X1) };
    let sizes = law.sizes();
    let d = ny * sizes[2 + own];
    let rows = s_grid
        .iter()
        .enumerate()
        .map(|(i, &s)| -> Result<VerifyRow> {
            let chan = j.cond_pmf(&[ax_y], &[ax_v, ax_x]);
            let (info, ln_factor) = if cc {
                let info = breve_mi_joint_output(&chan, &j.pmf(&[ax_v]), &j.pmf(&[ax_x]), 1.0 / (1.0 + s))?;
                let f = (1.0 + s) * ln_num_types(d, n)
                    + s * ln_nu_exact(d, n)
                    + ln_nu_exact(sizes[2], n)
                    + ln_nu_exact(sizes[3], n);
                (info, f)
            } else {
                (mi_up_conditional(&chan, &j.joint_pmf(&[ax_v], &[ax_x]), OrderParam::new(s)?)?, 0.0)
            };
            let rhs = (ln_factor + s * (nw as f64).ln() - s * n as f64 * info).exp();
            let lhs = moments.mean[i];
            Ok(VerifyRow {
                s,
                lhs,
                expectation: lhs,
                rhs,
                slack: rhs - lhs,
                ci_half_width: moments.half.as_ref().map(|h| h[i]),
                holds: lhs <= rhs + VERDICT_SLACK,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(report("gallager", mode, method, n, vec![nw], moments.realizations, rows))
}
