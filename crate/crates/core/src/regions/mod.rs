//! Secrecy rate regions: single input laws, unions and time sharing, the additive and Gaussian
//! closed forms, and the symbolic rate systems behind them.

pub mod fm;
mod polygon;

pub use fm::{fourier_motzkin, Inequality, LinearSystem, Scalar, Sense};
pub use polygon::{convex_hull, minkowski_combination, RateRegion2D, DET_TOL, VERTEX_TOL};

use num_rational::BigRational;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{axis, compose_effective, ChannelTensor, CostSpec, GaussianChannelSpec, JointInputLaw};
use crate::error::{Error, Result};
use crate::measures::{conditional_mutual_information, mutual_information, shannon_entropy, Pmf};
use crate::typelib::{enumerate_types, num_types};
use crate::AdditiveChannelSpec;

/// Default lattice step `1/k` of [`grid_laws`].
pub const DEFAULT_GRID: usize = 8;
/// Largest law family [`grid_laws`] will build.
pub const MAX_GRID_LAWS: usize = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SecrecyFlavor {
    Joint,
    Individual,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AdditiveFlavor {
    Joint,
    Individual,
    Outer,
}

/// Single-letter Shannon quantities of one input law.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShannonTerms {
    /// `I(Y2;V1|X2)`
    pub a: f64,
    /// `I(Y1;V2|X1)`
    pub b: f64,
    /// `I(Z;V1)`
    pub z1: f64,
    /// `I(Z;V2)`
    pub z2: f64,
    /// `I(Z;V1,V2)`
    pub z12: f64,
}

pub fn shannon_terms(t: &ChannelTensor, law: &JointInputLaw) -> Result<ShannonTerms> {
    use axis::*;
    let j = compose_effective(t, law)?;
    let a = conditional_mutual_information(&j.cond_pmf(&[Y2], &[V1, X2]), &j.joint_pmf(&[V1], &[X2]))?;
    let b = conditional_mutual_information(&j.cond_pmf(&[Y1], &[V2, X1]), &j.joint_pmf(&[V2], &[X1]))?;
    Ok(ShannonTerms {
        a,
        b,
        z1: mutual_information(&j.joint_pmf(&[Z], &[V1])),
        z2: mutual_information(&j.joint_pmf(&[Z], &[V2])),
        z12: mutual_information(&j.joint_pmf(&[Z], &[V1, V2])),
    })
}

impl ShannonTerms {
    pub fn region(&self, flavor: SecrecyFlavor) -> RateRegion2D {
        let r1 = (self.a - self.z1).max(0.0);
        let r2 = (self.b - self.z2).max(0.0);
        let c = (self.a + self.b - self.z12).max(0.0);
        let hs = match flavor {
            SecrecyFlavor::Joint => vec![[1.0, 0.0, r1], [0.0, 1.0, r2], [1.0, 1.0, c]],
            SecrecyFlavor::Individual => vec![[1.0, 0.0, r1], [0.0, 1.0, r2], [1.0, 0.0, c], [0.0, 1.0, c]],
        };
        RateRegion2D::from_halfspaces(hs).with_meta("flavor", flavor_name(flavor))
    }
}

fn flavor_name(f: SecrecyFlavor) -> &'static str {
    match f {
        SecrecyFlavor::Joint => "joint",
        SecrecyFlavor::Individual => "individual",
    }
}

pub fn region_joint(t: &ChannelTensor, law: &JointInputLaw) -> Result<RateRegion2D> {
    Ok(shannon_terms(t, law)?.region(SecrecyFlavor::Joint))
}

pub fn region_individual(t: &ChannelTensor, law: &JointInputLaw) -> Result<RateRegion2D> {
    Ok(shannon_terms(t, law)?.region(SecrecyFlavor::Individual))
}

pub fn region_for(t: &ChannelTensor, law: &JointInputLaw, flavor: SecrecyFlavor) -> Result<RateRegion2D> {
    Ok(shannon_terms(t, law)?.region(flavor))
}

/// Lattice of probability vectors over `d` symbols with step `1/k`.
pub fn simplex_grid(d: usize, k: usize) -> Result<Vec<Pmf>> {
    Ok(enumerate_types(d, k)?.into_iter().map(|t| t.to_pmf()).collect())
}

/// Product lattice of input laws with `V_i = X_i`.
pub fn grid_laws(nx1: usize, nx2: usize, k: usize) -> Result<Vec<JointInputLaw>> {
    if k == 0 {
        return Err(Error::Validation("grid resolution must be positive".into()));
    }
    let total = num_types(nx1, k) * num_types(nx2, k);
    if total > MAX_GRID_LAWS.into() {
        return Err(Error::Sizing(format!("{total} grid laws exceeds {MAX_GRID_LAWS}")));
    }
    let g1 = simplex_grid(nx1, k)?;
    let g2 = simplex_grid(nx2, k)?;
    Ok(g1.iter().flat_map(|p1| g2.iter().map(move |p2| JointInputLaw::identity(p1.clone(), p2.clone()))).collect())
}

/// Convex hull of the member regions of the laws admitted by `cost`.
pub fn region_union(
    t: &ChannelTensor,
    laws: &[JointInputLaw],
    cost: Option<&CostSpec>,
    flavor: SecrecyFlavor,
) -> Result<RateRegion2D> {
    if laws.is_empty() {
        return Err(Error::Validation("region_union needs at least one law".into()));
    }
    if let Some(c) = cost {
        c.validate()?;
    }
    let members: Vec<Option<RateRegion2D>> = laws
        .par_iter()
        .map(|law| {
            if let Some(c) = cost {
                if !c.admits(law)? {
                    return Ok(None);
                }
            }
            region_for(t, law, flavor).map(Some)
        })
        .collect::<Result<_>>()?;
    let admitted = members.iter().flatten().count();
    let out = if admitted == 0 {
        RateRegion2D::empty()
    } else {
        let pts: Vec<[f64; 2]> = members.iter().flatten().flat_map(|r| r.vertices.iter().cloned()).collect();
        RateRegion2D::from_points(&pts)
    };
    Ok(out.with_meta("flavor", flavor_name(flavor)).with_meta("laws_total", laws.len()).with_meta("laws_admitted", admitted))
}

/// Segment weights and per-segment cost budgets against an overall budget.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeSharingPlan {
    pub weights: Pmf,
    pub budgets: Vec<[f64; 2]>,
    pub total: [f64; 2],
}

impl TimeSharingPlan {
    pub fn new(weights: Pmf, budgets: Vec<[f64; 2]>, total: [f64; 2]) -> Result<Self> {
        let p = TimeSharingPlan { weights, budgets, total };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.budgets.len() != self.weights.len() {
            return Err(Error::Dimension(format!(
                "{} segment budgets for {} weights",
                self.budgets.len(),
                self.weights.len()
            )));
        }
        for i in 0..2 {
            let used: f64 = self.weights.probs().iter().zip(&self.budgets).map(|(w, b)| w * b[i]).sum();
            if used > self.total[i] + 1e-12 {
                return Err(Error::Validation(format!(
                    "time sharing spends {used} of budget c{} = {}",
                    i + 1,
                    self.total[i]
                )));
            }
        }
        Ok(())
    }
}

/// Weighted Minkowski average of the per-segment regions.
pub fn region_time_share(plan: &TimeSharingPlan, regions: &[RateRegion2D]) -> Result<RateRegion2D> {
    plan.validate()?;
    if regions.len() != plan.weights.len() {
        return Err(Error::Dimension(format!("{} regions for {} segments", regions.len(), plan.weights.len())));
    }
    Ok(minkowski_combination(regions, plan.weights.probs()).with_meta("segments", regions.len()))
}

/// Closed-form regions of the additive channel with uniform `V_i = X_i`.
pub fn region_additive(spec: &AdditiveChannelSpec, flavor: AdditiveFlavor) -> Result<RateRegion2D> {
    spec.validate()?;
    let lq = (spec.q as f64).ln();
    let [h1, h2, h3] = [0, 1, 2].map(|i| shannon_entropy(&spec.noise[i]));
    let r1 = (lq - h2).max(0.0);
    let r2 = (lq - h1).max(0.0);
    let c = (lq + h3 - h1 - h2).max(0.0);
    let (hs, name) = match flavor {
        AdditiveFlavor::Joint => (vec![[1.0, 0.0, r1], [0.0, 1.0, r2], [1.0, 1.0, c]], "joint"),
        AdditiveFlavor::Individual => (vec![[1.0, 0.0, r1], [0.0, 1.0, r2], [1.0, 0.0, c], [0.0, 1.0, c]], "individual"),
        AdditiveFlavor::Outer => (vec![[1.0, 0.0, r1], [0.0, 1.0, r2]], "outer"),
    };
    Ok(RateRegion2D::from_halfspaces(hs).with_meta("flavor", name))
}

fn gaussian_sum_bound(spec: &GaussianChannelSpec, p1: f64, p2: f64) -> f64 {
    let g = &spec.coeffs;
    let [v1, v2, v3] = spec.variances;
    0.5 * ((g.b1 * g.b1 * p2 + v1).ln() + (g.a2 * g.a2 * p1 + v2).ln()
        - (g.a3 * g.a3 * p1 + g.b3 * g.b3 * p2 + v3).ln()
        + v3.ln()
        - v1.ln()
        - v2.ln())
}

/// Gaussian region at input powers `(p1, p2)`.
pub fn region_gaussian_inner(spec: &GaussianChannelSpec, p1: f64, p2: f64, flavor: SecrecyFlavor) -> Result<RateRegion2D> {
    spec.validate()?;
    if !(p1 >= 0.0 && p2 >= 0.0 && p1.is_finite() && p2.is_finite()) {
        return Err(Error::Validation(format!("powers must be finite and nonnegative, got ({p1}, {p2})")));
    }
    let g = &spec.coeffs;
    let [v1, v2, v3] = spec.variances;
    let mix = g.a3 * g.a3 * p1 + g.b3 * g.b3 * p2 + v3;
    let r1 = 0.5 * ((g.a2 * g.a2 * p1 + v2).ln() - v2.ln() - mix.ln() + (g.b3 * g.b3 * p2 + v3).ln());
    let r2 = 0.5 * ((g.b1 * g.b1 * p2 + v1).ln() - v1.ln() - mix.ln() + (g.a3 * g.a3 * p1 + v3).ln());
    let c = gaussian_sum_bound(spec, p1, p2).max(0.0);
    let (r1, r2) = (r1.max(0.0), r2.max(0.0));
    let hs = match flavor {
        SecrecyFlavor::Joint => vec![[1.0, 0.0, r1], [0.0, 1.0, r2], [1.0, 1.0, c]],
        SecrecyFlavor::Individual => vec![[1.0, 0.0, r1], [0.0, 1.0, r2], [1.0, 0.0, c], [0.0, 1.0, c]],
    };
    Ok(RateRegion2D::from_halfspaces(hs).with_meta("flavor", flavor_name(flavor)).with_meta("powers", vec![p1, p2]))
}

/// Hull of the Gaussian regions over the power grid `{0, …, c1} × {0, …, c2}` with `resolution` points per axis.
pub fn region_gaussian_inner_hull(
    spec: &GaussianChannelSpec,
    c1: f64,
    c2: f64,
    resolution: usize,
    flavor: SecrecyFlavor,
) -> Result<RateRegion2D> {
    if resolution < 2 {
        return Err(Error::Validation("power grid resolution must be at least 2".into()));
    }
    if !(c1 >= 0.0 && c2 >= 0.0) {
        return Err(Error::Validation("budgets must be nonnegative".into()));
    }
    let step = |c: f64, j: usize| c * j as f64 / (resolution - 1) as f64;
    let grid: Vec<(f64, f64)> =
        (0..resolution).flat_map(|i| (0..resolution).map(move |j| (step(c1, i), step(c2, j)))).collect();
    let members: Vec<RateRegion2D> =
        grid.par_iter().map(|&(p1, p2)| region_gaussian_inner(spec, p1, p2, flavor)).collect::<Result<_>>()?;
    let pts: Vec<[f64; 2]> = members.iter().flat_map(|r| r.vertices.iter().cloned()).collect();
    Ok(RateRegion2D::from_points(&pts)
        .with_meta("flavor", flavor_name(flavor))
        .with_meta("budgets", vec![c1, c2])
        .with_meta("resolution", resolution))
}

/// Whether `(b3²/b1²) v1 + (a3²/a2²) v2 <= v3`.
pub fn gaussian_outer_condition(spec: &GaussianChannelSpec) -> bool {
    let g = &spec.coeffs;
    let [v1, v2, v3] = spec.variances;
    (g.b3 * g.b3) / (g.b1 * g.b1) * v1 + (g.a3 * g.a3) / (g.a2 * g.a2) * v2 <= v3
}

/// Sum-rate outer bound at budgets `(c1, c2)`.
pub fn region_gaussian_outer(spec: &GaussianChannelSpec, c1: f64, c2: f64) -> Result<RateRegion2D> {
    spec.validate()?;
    if !(c1 >= 0.0 && c2 >= 0.0) {
        return Err(Error::Validation("budgets must be nonnegative".into()));
    }
    let g = &spec.coeffs;
    let [v1, v2, _] = spec.variances;
    let r1 = (0.5 * (1.0 + g.a2 * g.a2 * c1 / v2).ln()).max(0.0);
    let r2 = (0.5 * (1.0 + g.b1 * g.b1 * c2 / v1).ln()).max(0.0);
    let c = gaussian_sum_bound(spec, c1, c2).max(0.0);
    let mut r = RateRegion2D::from_halfspaces(vec![[1.0, 0.0, r1], [0.0, 1.0, r2], [1.0, 1.0, c]])
        .with_meta("budgets", vec![c1, c2]);
    if !gaussian_outer_condition(spec) {
        r = r
            .with_meta("flag", "condition_unmet")
            .with_meta("note", "noise condition fails; outer bound not established");
    }
    Ok(r)
}

/// Names of the information quantities in the symbolic rate systems.
pub const INFO_SYMBOLS: [&str; 5] = ["I(Y2;V1|X2)", "I(Y1;V2|X1)", "I(Z;V1)", "I(Z;V2)", "I(Z;V1,V2)"];

/// Variable order of the symbolic rate systems.
pub fn rate_system_variables() -> Vec<String> {
    ["R1", "R2", "r1", "r2"].iter().chain(INFO_SYMBOLS.iter()).map(|s| s.to_string()).collect()
}

/// Reliability and secrecy constraints over `(R1, R2, r1, r2)` with the information
/// quantities kept as free symbols; `min(R1,R2)` is split into two inequalities.
pub fn symbolic_rate_system(flavor: SecrecyFlavor) -> LinearSystem<BigRational> {
    let q = |v: i64| BigRational::from_integer(v.into());
    // R1 R2 r1 r2 A B Z1 Z2 Z12
    let mut rows: Vec<([i64; 9], Sense)> = vec![
        ([0, 1, 0, 1, 0, -1, 0, 0, 0], Sense::Lt),
        ([1, 0, 1, 0, -1, 0, 0, 0, 0], Sense::Lt),
        ([0, 0, 1, 0, 0, 0, -1, 0, 0], Sense::Gt),
        ([0, 0, 0, 1, 0, 0, 0, -1, 0], Sense::Gt),
    ];
    match flavor {
        SecrecyFlavor::Joint => rows.push(([0, 0, 1, 1, 0, 0, 0, 0, -1], Sense::Gt)),
        SecrecyFlavor::Individual => {
            rows.push(([1, 0, 1, 1, 0, 0, 0, 0, -1], Sense::Gt));
            rows.push(([0, 1, 1, 1, 0, 0, 0, 0, -1], Sense::Gt));
        }
    }
    let ineqs = rows.into_iter().map(|(c, s)| Inequality::new(c.iter().map(|&v| q(v)).collect(), s, q(0))).collect();
    LinearSystem::new(rate_system_variables(), ineqs).expect("fixed system is well formed")
}

/// The `(R1, R2)` system the elimination is expected to produce, all inequalities strict.
pub fn symbolic_rate_region(flavor: SecrecyFlavor) -> LinearSystem<BigRational> {
    let q = |v: i64| BigRational::from_integer(v.into());
    let mut rows: Vec<[i64; 9]> = vec![[1, 0, 0, 0, -1, 0, 1, 0, 0], [0, 1, 0, 0, 0, -1, 0, 1, 0]];
    match flavor {
        SecrecyFlavor::Joint => rows.push([1, 1, 0, 0, -1, -1, 0, 0, 1]),
        SecrecyFlavor::Individual => {
            rows.push([1, 0, 0, 0, -1, -1, 0, 0, 1]);
            rows.push([0, 1, 0, 0, -1, -1, 0, 0, 1]);
        }
    }
    let mut vars = rate_system_variables();
    vars.retain(|v| v != "r1" && v != "r2");
    let ineqs = rows
        .into_iter()
        .map(|c| {
            let c: Vec<BigRational> = c.iter().enumerate().filter(|(i, _)| *i != 2 && *i != 3).map(|(_, &v)| q(v)).collect();
            Inequality::new(c, Sense::Lt, q(0))
        })
        .collect();
    LinearSystem::new(vars, ineqs).expect("fixed system is well formed").canonical()
}

/// Constraints on `(r1, r2)` for fixed message rates and numeric information terms.
pub fn randomness_system(terms: &ShannonTerms, r1_msg: f64, r2_msg: f64, flavor: SecrecyFlavor) -> LinearSystem<f64> {
    let mut ineqs = vec![
        Inequality::new(vec![1.0, 0.0], Sense::Lt, terms.a - r1_msg),
        Inequality::new(vec![0.0, 1.0], Sense::Lt, terms.b - r2_msg),
        Inequality::new(vec![1.0, 0.0], Sense::Gt, terms.z1),
        Inequality::new(vec![0.0, 1.0], Sense::Gt, terms.z2),
        Inequality::new(vec![1.0, 0.0], Sense::Ge, 0.0),
        Inequality::new(vec![0.0, 1.0], Sense::Ge, 0.0),
    ];
    let sum_lower = match flavor {
        SecrecyFlavor::Joint => terms.z12,
        SecrecyFlavor::Individual => terms.z12 - r1_msg.min(r2_msg),
    };
    ineqs.push(Inequality::new(vec![1.0, 1.0], Sense::Gt, sum_lower));
    LinearSystem::new(vec!["r1".into(), "r2".into()], ineqs).expect("fixed system is well formed")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symbolic_elimination_reproduces_regions() {
        for flavor in [SecrecyFlavor::Joint, SecrecyFlavor::Individual] {
            let p = fourier_motzkin(&symbolic_rate_system(flavor), &["r1", "r2"]).unwrap();
            assert_eq!(p, symbolic_rate_region(flavor), "{flavor:?}:\n{p}");
        }
    }

    #[test]
    fn additive_outer_drops_sum() {
        let spec = AdditiveChannelSpec::new(
            2,
            crate::AdditiveCoeffs { a1: 1, b1: 1, a2: 1, b2: 1, a3: 1, b3: 1 },
            [Pmf::point(2, 0), Pmf::point(2, 0), Pmf::uniform(2)],
        )
        .unwrap();
        let o = region_additive(&spec, AdditiveFlavor::Outer).unwrap();
        let l2 = 2f64.ln();
        assert_eq!(o.vertices, vec![[0.0, 0.0], [l2, 0.0], [l2, l2], [0.0, l2]]);
        let j = region_additive(&spec, AdditiveFlavor::Joint).unwrap();
        assert!((j.max_sum_rate() - 2.0 * l2).abs() < 1e-12);
    }
}
