//! Finite-blocklength bounds on decoding error and leakage for the non-adaptive scheme, as
//! functions of the order parameter `s`.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{axis, compose_effective, ChannelTensor, JointInputLaw, JointLaw};
use crate::error::{Error, Result};
use crate::measures::{
    breve_mi, breve_mi_joint_output, log_sum_exp, mi_down, mi_up_conditional, renyi_entropy, OrderParam,
};
use crate::regions::{randomness_system, shannon_terms, LinearSystem, SecrecyFlavor};
use crate::typelib::{ln_nu_bound, ln_nu_exact, ln_num_types, JointType};
use crate::AdditiveChannelSpec;

/// Message and local-randomness rates in nats per use.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateTuple {
    #[serde(rename = "R1")]
    pub big_r1: f64,
    #[serde(rename = "R2")]
    pub big_r2: f64,
    pub r1: f64,
    pub r2: f64,
}

impl RateTuple {
    pub fn new(big_r1: f64, big_r2: f64, r1: f64, r2: f64) -> Result<Self> {
        let t = RateTuple { big_r1, big_r2, r1, r2 };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("R1", self.big_r1), ("R2", self.big_r2), ("r1", self.r1), ("r2", self.r2)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Validation(format!("rate {name} = {v} must be finite and nonnegative")));
            }
        }
        Ok(())
    }
}

/// Bounds at one order parameter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentRow {
    pub s: f64,
    #[serde(with = "crate::serde_num")]
    pub err: f64,
    #[serde(with = "crate::serde_num")]
    pub leak_joint: f64,
    #[serde(with = "crate::serde_num")]
    pub leak_m1: f64,
    #[serde(with = "crate::serde_num")]
    pub leak_m2: f64,
    /// Some bound in the row is no better than the trivial one.
    pub vacuous: bool,
}

/// Smallest value of one metric over the grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BestEntry {
    pub s: f64,
    #[serde(with = "crate::serde_num")]
    pub value: f64,
    pub vacuous: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentReport {
    pub n: usize,
    pub rates: RateTuple,
    pub rows: Vec<ExponentRow>,
    pub best: BTreeMap<String, BestEntry>,
    #[serde(default)]
    pub meta: BTreeMap<String, serde_json::Value>,
}

pub const METRICS: [&str; 4] = ["err", "leak_joint", "leak_m1", "leak_m2"];

impl ExponentRow {
    pub fn metric(&self, name: &str) -> f64 {
        match name {
            "err" => self.err,
            "leak_joint" => self.leak_joint,
            "leak_m1" => self.leak_m1,
            "leak_m2" => self.leak_m2,
            _ => f64::NAN,
        }
    }
}

/// Thresholds above which each bound says nothing.
#[derive(Clone, Copy, Debug)]
struct Trivial {
    joint: f64,
    m1: f64,
    m2: f64,
}

impl Trivial {
    fn new(n: usize, rates: &RateTuple, nz: usize) -> Self {
        let nf = n as f64;
        let eve = nf * (nz as f64).ln();
        Trivial {
            joint: eve.min(nf * (rates.big_r1 + rates.big_r2)),
            m1: eve.min(nf * rates.big_r1),
            m2: eve.min(nf * rates.big_r2),
        }
    }

    fn flags(&self, row: &ExponentRow) -> [bool; 4] {
        [row.err >= 1.0, row.leak_joint >= self.joint, row.leak_m1 >= self.m1, row.leak_m2 >= self.m2]
    }
}

/// Information quantities entering the bounds at one `s`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrderTerms {
    /// Decoding quantity for user 1's codeword at receiver 2.
    pub up1: f64,
    /// Decoding quantity for user 2's codeword at receiver 1.
    pub up2: f64,
    pub down1: f64,
    pub down2: f64,
    pub down12: f64,
}

/// Natural logs of the multiplicative factors in front of the error and leakage bounds.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct LogFactors {
    pub err: f64,
    pub leak: f64,
}

/// Assembles one row from the information terms.
pub fn assemble_row(s: f64, n: usize, rates: &RateTuple, q: &OrderTerms, f: LogFactors) -> ExponentRow {
    let ns = n as f64 * s;
    let RateTuple { big_r1, big_r2, r1, r2 } = *rates;
    let (l2, l3) = (2f64.ln(), 3f64.ln());
    let err = (l2 + f.err + log_sum_exp([ns * (big_r1 + r1 - q.up1), ns * (big_r2 + r2 - q.up2)])).exp();
    let joint = (l2 + f.leak + log_sum_exp([ns * (q.down1 - r1), ns * (q.down2 - r2), ns * (q.down12 - r1 - r2)])).exp();
    let m1 = (l3 + f.leak
        + log_sum_exp([ns * (q.down12 - (r1 + r2 + big_r2)), ns * (q.down1 - r1), ns * (q.down2 - (r2 + big_r2))]))
    .exp();
    let m2 = (l3 + f.leak
        + log_sum_exp([ns * (q.down12 - (r1 + r2 + big_r1)), ns * (q.down2 - r2), ns * (q.down1 - (r1 + big_r1))]))
    .exp();
    ExponentRow { s, err, leak_joint: joint, leak_m1: m1, leak_m2: m2, vacuous: false }
}

fn finish(n: usize, rates: RateTuple, mut rows: Vec<ExponentRow>, trivial: Trivial) -> ExponentReport {
    let mut best = BTreeMap::new();
    for row in &mut rows {
        row.vacuous = trivial.flags(row).iter().any(|&v| v);
    }
    for (k, name) in METRICS.iter().enumerate() {
        let b = rows
            .iter()
            .filter(|r| !r.metric(name).is_nan())
            .min_by(|a, b| a.metric(name).total_cmp(&b.metric(name)).then(a.s.total_cmp(&b.s)));
        if let Some(r) = b {
            best.insert(name.to_string(), BestEntry { s: r.s, value: r.metric(name), vacuous: trivial.flags(r)[k] });
        }
    }
    ExponentReport { n, rates, rows, best, meta: BTreeMap::new() }
}

fn check_grid(s_grid: &[f64], allow_one: bool) -> Result<()> {
    if s_grid.is_empty() {
        return Err(Error::Validation("empty s grid".into()));
    }
    for &s in s_grid {
        let ok = s > 0.0 && (s < 1.0 || (allow_one && s == 1.0));
        if !ok {
            let range = if allow_one { "(0,1]" } else { "(0,1)" };
            return Err(Error::Domain(format!("order parameter s = {s} outside {range}")));
        }
    }
    Ok(())
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::Validation("blocklength must be positive".into()));
    }
    Ok(())
}

/// `k/99` for `k = 1..=99`.
pub fn default_s_grid_iid() -> Vec<f64> {
    (1..=99).map(|k| k as f64 / 99.0).collect()
}

/// `k/100` for `k = 1..=99`; the leakage quantities need `s < 1`.
pub fn default_s_grid_cc() -> Vec<f64> {
    (1..=99).map(|k| k as f64 / 100.0).collect()
}

/// Quantities of the iid bounds at order parameter `s`.
pub fn iid_terms(j: &JointLaw, s: f64) -> Result<OrderTerms> {
    use axis::*;
    let o = OrderParam::new(s)?;
    Ok(OrderTerms {
        up1: mi_up_conditional(&j.cond_pmf(&[Y2], &[V1, X2]), &j.joint_pmf(&[V1], &[X2]), o)?,
        up2: mi_up_conditional(&j.cond_pmf(&[Y1], &[V2, X1]), &j.joint_pmf(&[V2], &[X1]), o)?,
        down1: mi_down(&j.joint_pmf(&[Z], &[V1]), o),
        down2: mi_down(&j.joint_pmf(&[Z], &[V2]), o),
        down12: mi_down(&j.joint_pmf(&[Z], &[V1, V2]), o),
    })
}

/// Bounds for iid random codebooks drawn from `law`.
pub fn bounds_iid(
    t: &ChannelTensor,
    law: &JointInputLaw,
    rates: RateTuple,
    n: usize,
    s_grid: &[f64],
) -> Result<ExponentReport> {
    rates.validate()?;
    check_n(n)?;
    check_grid(s_grid, true)?;
    let j = compose_effective(t, law)?;
    let rows: Vec<ExponentRow> = s_grid
        .par_iter()
        .map(|&s| Ok(assemble_row(s, n, &rates, &iid_terms(&j, s)?, LogFactors::default())))
        .collect::<Result<_>>()?;
    let mut r = finish(n, rates, rows, Trivial::new(n, &rates, t.sizes()[4]));
    r.meta.insert("mode".into(), "iid".into());
    Ok(r)
}

/// Closed-form quantities of the additive channel with uniform inputs at order parameter `s`.
pub fn additive_terms(spec: &AdditiveChannelSpec, s: f64) -> Result<OrderTerms> {
    let lq = (spec.q as f64).ln();
    let lo = 1.0 / (1.0 + s);
    Ok(OrderTerms {
        up1: lq - renyi_entropy(&spec.noise[1], lo)?,
        up2: lq - renyi_entropy(&spec.noise[0], lo)?,
        down1: 0.0,
        down2: 0.0,
        down12: lq - renyi_entropy(&spec.noise[2], 1.0 + s)?,
    })
}

/// Bounds for the additive channel with uniform `V_i = X_i`.
pub fn bounds_additive(spec: &AdditiveChannelSpec, rates: RateTuple, n: usize, s_grid: &[f64]) -> Result<ExponentReport> {
    spec.validate()?;
    rates.validate()?;
    check_n(n)?;
    check_grid(s_grid, true)?;
    let rows: Vec<ExponentRow> = s_grid
        .par_iter()
        .map(|&s| Ok(assemble_row(s, n, &rates, &additive_terms(spec, s)?, LogFactors::default())))
        .collect::<Result<_>>()?;
    let mut r = finish(n, rates, rows, Trivial::new(n, &rates, spec.q as usize));
    r.meta.insert("mode".into(), "additive".into());
    Ok(r)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FactorMode {
    Exact,
    Bound,
}

/// `ln ν_n(d)` and `ln |T_n(d)|` under the chosen mode.
fn ln_nu(mode: FactorMode, d: usize, n: usize) -> f64 {
    match mode {
        FactorMode::Exact => ln_nu_exact(d, n),
        FactorMode::Bound => ln_nu_bound(d, n),
    }
}

fn ln_types(mode: FactorMode, d: usize, n: usize) -> f64 {
    match mode {
        FactorMode::Exact => ln_num_types(d, n),
        FactorMode::Bound => (d as f64 - 1.0) * (1.0 + n as f64).ln(),
    }
}

/// Log prefactors `(ln ν'_n, ln ν_n)` for alphabet sizes `[V1, V2, X1, X2, Y1, Y2]`.
pub fn cc_log_factors(sizes: [usize; 6], n: usize, s: f64, mode: FactorMode) -> LogFactors {
    let [nv1, nv2, nx1, nx2, ny1, ny2] = sizes;
    let leak = ln_nu(mode, nx1 * nx2 * nv1.max(nv2), n);
    let side = |ny: usize, nx: usize| (1.0 + s) * ln_types(mode, ny * nx, n) + s * ln_nu(mode, ny * nx, n);
    let err = ln_nu(mode, nx1, n) + ln_nu(mode, nx2, n) + side(ny1, nx1).max(side(ny2, nx2));
    LogFactors { err, leak }
}

/// Quantities of the constant-composition bounds at order parameter `s < 1`.
pub fn cc_terms(j: &JointLaw, s: f64) -> Result<OrderTerms> {
    use axis::*;
    let lo = 1.0 / (1.0 + s);
    let hi = 1.0 / (1.0 - s);
    Ok(OrderTerms {
        up1: breve_mi_joint_output(&j.cond_pmf(&[Y2], &[V1, X2]), &j.pmf(&[V1]), &j.pmf(&[X2]), lo)?,
        up2: breve_mi_joint_output(&j.cond_pmf(&[Y1], &[V2, X1]), &j.pmf(&[V2]), &j.pmf(&[X1]), lo)?,
        down1: breve_mi(&j.cond_pmf(&[Z], &[V1]), &j.pmf(&[V1]), hi)?,
        down2: breve_mi(&j.cond_pmf(&[Z], &[V2]), &j.pmf(&[V2]), hi)?,
        down12: breve_mi(&j.cond_pmf(&[Z], &[V1, V2]), &j.pmf(&[V1, V2]), hi)?,
    })
}

/// Input law whose marginals are the given joint types of `(V_i, X_i)`.
pub fn law_from_types(t1: &JointType, t2: &JointType) -> Result<JointInputLaw> {
    JointInputLaw::new(t1.v_marginal().to_pmf(), t1.conditional(), t2.v_marginal().to_pmf(), t2.conditional())
}

/// Bounds for codebooks drawn uniformly from conditional type classes.
pub fn bounds_constant_composition(
    t: &ChannelTensor,
    t1: &JointType,
    t2: &JointType,
    rates: RateTuple,
    n: usize,
    s_grid: &[f64],
    mode: FactorMode,
) -> Result<ExponentReport> {
    rates.validate()?;
    check_n(n)?;
    check_grid(s_grid, false)?;
    if t1.n() != n || t2.n() != n {
        return Err(Error::Validation(format!(
            "joint types have blocklengths ({}, {}), expected {n}",
            t1.n(),
            t2.n()
        )));
    }
    let law = law_from_types(t1, t2)?;
    let j = compose_effective(t, &law)?;
    let [nv1, nv2, nx1, nx2] = law.sizes();
    let [_, _, ny1, ny2, nz] = t.sizes();
    let rows: Vec<ExponentRow> = s_grid
        .par_iter()
        .map(|&s| {
            let f = cc_log_factors([nv1, nv2, nx1, nx2, ny1, ny2], n, s, mode);
            Ok(assemble_row(s, n, &rates, &cc_terms(&j, s)?, f))
        })
        .collect::<Result<_>>()?;
    let mut r = finish(n, rates, rows, Trivial::new(n, &rates, nz));
    r.meta.insert("mode".into(), "constant_composition".into());
    r.meta.insert(
        "factor_mode".into(),
        match mode {
            FactorMode::Exact => "exact",
            FactorMode::Bound => "bound",
        }
        .into(),
    );
    Ok(r)
}

/// Polyhedron of `(r1, r2)` meeting the reliability and secrecy constraints at `(R1, R2)`, or
/// `None` when it is empty.
pub fn feasible_randomness(
    t: &ChannelTensor,
    law: &JointInputLaw,
    big_r1: f64,
    big_r2: f64,
    flavor: SecrecyFlavor,
) -> Result<Option<LinearSystem<f64>>> {
    let terms = shannon_terms(t, law)?;
    let sys = randomness_system(&terms, big_r1, big_r2, flavor);
    Ok(sys.is_feasible().then(|| sys.remove_redundant()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        let g = default_s_grid_iid();
        assert_eq!(g.len(), 99);
        assert_eq!(g[98], 1.0);
        let c = default_s_grid_cc();
        assert_eq!(c.len(), 99);
        assert!(c.iter().all(|&s| s > 0.0 && s < 1.0));
    }

    #[test]
    fn rates_validated() {
        assert!(RateTuple::new(0.1, 0.0, -0.1, 0.0).is_err());
        assert!(RateTuple::new(0.1, f64::NAN, 0.0, 0.0).is_err());
    }

    #[test]
    fn zero_information_row() {
        let q = OrderTerms { up1: 0.0, up2: 0.0, down1: 0.0, down2: 0.0, down12: 0.0 };
        let rates = RateTuple::new(0.0, 0.0, 1.0, 2.0).unwrap();
        let row = assemble_row(1.0, 3, &rates, &q, LogFactors::default());
        let e = |x: f64| (-3.0 * x).exp();
        assert!((row.leak_joint - 2.0 * (e(1.0) + e(2.0) + e(3.0))).abs() < 1e-15);
        assert!((row.err - 2.0 * (e(-1.0) + e(-2.0))).abs() < 1e-9);
    }

    #[test]
    fn factors_compare() {
        for n in [2, 5, 9] {
            for s in [0.1, 0.5, 0.9] {
                let e = cc_log_factors([2, 2, 2, 2, 2, 3], n, s, FactorMode::Exact);
                let b = cc_log_factors([2, 2, 2, 2, 2, 3], n, s, FactorMode::Bound);
                assert!(b.err >= e.err && b.leak >= e.leak);
            }
        }
    }
}
