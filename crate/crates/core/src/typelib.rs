//! Method of types: enumeration, class sizes, the ν factor, uniform sampling from
//! (conditional) type classes and constant-composition cost accounting.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::Pmf;

/// Largest number of types [`enumerate_types`] will list.
pub const MAX_TYPES: u64 = 1_000_000;

/// Empirical counts of a length-`n` sequence.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct TypeVector {
    counts: Vec<usize>,
}

impl TryFrom<Vec<usize>> for TypeVector {
    type Error = Error;
    fn try_from(v: Vec<usize>) -> Result<Self> {
        TypeVector::new(v)
    }
}

impl From<TypeVector> for Vec<usize> {
    fn from(t: TypeVector) -> Self {
        t.counts
    }
}

impl TypeVector {
    pub fn new(counts: Vec<usize>) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::Validation("type over an empty alphabet".into()));
        }
        if counts.iter().sum::<usize>() == 0 {
            return Err(Error::Validation("type with blocklength 0".into()));
        }
        Ok(TypeVector { counts })
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn n(&self) -> usize {
        self.counts.iter().sum()
    }

    pub fn alphabet(&self) -> usize {
        self.counts.len()
    }

    pub fn to_pmf(&self) -> Pmf {
        let n = self.n() as f64;
        Pmf::from_computed(self.counts.iter().map(|&c| c as f64 / n).collect())
    }

    /// Type of a sequence over `0..d`.
    pub fn of_sequence(seq: &[usize], d: usize) -> Result<Self> {
        let mut counts = vec![0; d];
        for &s in seq {
            if s >= d {
                return Err(Error::Validation(format!("symbol {s} outside alphabet of size {d}")));
            }
            counts[s] += 1;
        }
        TypeVector::new(counts)
    }
}

/// Joint counts over `V × X`, row `v`, column `x`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<usize>>", into = "Vec<Vec<usize>>")]
pub struct JointType {
    nv: usize,
    nx: usize,
    counts: Vec<usize>,
}

impl TryFrom<Vec<Vec<usize>>> for JointType {
    type Error = Error;
    fn try_from(rows: Vec<Vec<usize>>) -> Result<Self> {
        JointType::new(rows)
    }
}

impl From<JointType> for Vec<Vec<usize>> {
    fn from(j: JointType) -> Self {
        j.counts.chunks(j.nx).map(|c| c.to_vec()).collect()
    }
}

impl JointType {
    pub fn new(rows: Vec<Vec<usize>>) -> Result<Self> {
        let nv = rows.len();
        let nx = rows.first().map(|r| r.len()).unwrap_or(0);
        if nv == 0 || nx == 0 || rows.iter().any(|r| r.len() != nx) {
            return Err(Error::Validation("joint type must be a nonempty rectangular count matrix".into()));
        }
        let counts: Vec<usize> = rows.concat();
        if counts.iter().sum::<usize>() == 0 {
            return Err(Error::Validation("joint type with blocklength 0".into()));
        }
        Ok(JointType { nv, nx, counts })
    }

    /// Joint type with deterministic pre-processing `V = X`.
    pub fn diagonal(t: &TypeVector) -> Self {
        let d = t.alphabet();
        let mut counts = vec![0; d * d];
        for (i, &c) in t.counts().iter().enumerate() {
            counts[i * d + i] = c;
        }
        JointType { nv: d, nx: d, counts }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.nv, self.nx)
    }

    pub fn count(&self, v: usize, x: usize) -> usize {
        self.counts[v * self.nx + x]
    }

    pub fn n(&self) -> usize {
        self.counts.iter().sum()
    }

    pub fn v_marginal(&self) -> TypeVector {
        TypeVector { counts: self.counts.chunks(self.nx).map(|r| r.iter().sum()).collect() }
    }

    pub fn x_marginal(&self) -> TypeVector {
        TypeVector { counts: (0..self.nx).map(|x| (0..self.nv).map(|v| self.count(v, x)).sum()).collect() }
    }

    /// `P_{X|V}` implied by the counts; rows of unused `v` are uniform.
    pub fn conditional(&self) -> crate::measures::CondPmf {
        let mut data = Vec::with_capacity(self.nv * self.nx);
        for v in 0..self.nv {
            let row = &self.counts[v * self.nx..][..self.nx];
            let t: usize = row.iter().sum();
            if t == 0 {
                data.extend(std::iter::repeat_n(1.0 / self.nx as f64, self.nx));
            } else {
                data.extend(row.iter().map(|&c| c as f64 / t as f64));
            }
        }
        crate::measures::CondPmf::from_computed(self.nv, self.nx, data)
    }

    /// Number of `x^n` compatible with a fixed `v^n` of the right marginal type.
    pub fn conditional_class_size(&self) -> BigUint {
        (0..self.nv)
            .map(|v| multinomial(&self.counts[v * self.nx..][..self.nx]))
            .fold(BigUint::one(), |a, b| a * b)
    }
}

fn factorial(n: usize) -> BigUint {
    (1..=n).fold(BigUint::one(), |a, k| a * BigUint::from(k))
}

fn multinomial(counts: &[usize]) -> BigUint {
    let n: usize = counts.iter().sum();
    counts.iter().fold(factorial(n), |a, &c| a / factorial(c))
}

fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

/// Number of types `C(n+d-1, d-1)`.
pub fn num_types(d: usize, n: usize) -> BigUint {
    if d == 0 {
        return BigUint::from(0u32);
    }
    factorial(n + d - 1) / (factorial(d - 1) * factorial(n))
}

/// `ln |T_n(d)|`.
pub fn ln_num_types(d: usize, n: usize) -> f64 {
    ln_factorial(n + d - 1) - ln_factorial(d - 1) - ln_factorial(n)
}

/// All types of length `n` over `d` symbols, in lexicographic order.
pub fn enumerate_types(d: usize, n: usize) -> Result<Vec<TypeVector>> {
    if d == 0 || n == 0 {
        return Err(Error::Validation("need d >= 1 and n >= 1".into()));
    }
    let count = num_types(d, n);
    if count > BigUint::from(MAX_TYPES) {
        return Err(Error::Sizing(format!("{count} types for d = {d}, n = {n} exceeds {MAX_TYPES}")));
    }
    let mut out = Vec::with_capacity(count.to_usize().unwrap_or(0));
    let mut cur = vec![0usize; d];
    fn rec(i: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<TypeVector>) {
        if i + 1 == cur.len() {
            cur[i] = left;
            out.push(TypeVector { counts: cur.clone() });
            return;
        }
        for c in 0..=left {
            cur[i] = c;
            rec(i + 1, left - c, cur, out);
        }
    }
    rec(0, n, &mut cur, &mut out);
    Ok(out)
}

/// `|T_P^n| = n! / Π counts!`, exact.
pub fn type_class_size(t: &TypeVector) -> BigUint {
    multinomial(&t.counts)
}

/// `|T_P^n|` when it fits in 64 bits.
pub fn type_class_size_u64(t: &TypeVector) -> Option<u64> {
    type_class_size(t).to_u64()
}

pub fn ln_type_class_size(t: &TypeVector) -> f64 {
    ln_factorial(t.n()) - t.counts.iter().map(|&c| ln_factorial(c)).sum::<f64>()
}

/// `ln(e^{nH(P)} / |T_P^n|)` for one type.
pub fn ln_nu_ratio(t: &TypeVector) -> f64 {
    let n = t.n() as f64;
    let nh: f64 = t.counts.iter().filter(|&&c| c > 0).map(|&c| -(c as f64) * (c as f64 / n).ln()).sum();
    nh - ln_type_class_size(t)
}

/// `ln ν_n(d)` with `ν_n(d) = max_P e^{nH(P)} / |T_P^n|`.
///
/// The objective separates as `Σ_i g(k_i) - ln n!` with `g(k) = ln k! - k ln(k/n)`,
/// so the maximum over count vectors is a knapsack-style dynamic program.
pub fn ln_nu_exact(d: usize, n: usize) -> f64 {
    if d == 0 || n == 0 {
        return 0.0;
    }
    let nf = n as f64;
    let g: Vec<f64> =
        (0..=n).map(|k| if k == 0 { 0.0 } else { ln_factorial(k) - k as f64 * (k as f64 / nf).ln() }).collect();
    let mut best = vec![f64::NEG_INFINITY; n + 1];
    best[0] = 0.0;
    for _ in 0..d {
        let mut next = vec![f64::NEG_INFINITY; n + 1];
        for (used, &b) in best.iter().enumerate() {
            if b == f64::NEG_INFINITY {
                continue;
            }
            for k in 0..=n - used {
                let v = b + g[k];
                if v > next[used + k] {
                    next[used + k] = v;
                }
            }
        }
        best = next;
    }
    best[n] - ln_factorial(n)
}

pub fn nu_exact(d: usize, n: usize) -> f64 {
    ln_nu_exact(d, n).exp()
}

/// `(1+n)^d`.
pub fn nu_bound(d: usize, n: usize) -> f64 {
    (1.0 + n as f64).powi(d as i32)
}

pub fn ln_nu_bound(d: usize, n: usize) -> f64 {
    d as f64 * (1.0 + n as f64).ln()
}

/// Uniform draw from the type class of `t`.
pub fn sample_type_class<R: Rng + ?Sized>(t: &TypeVector, rng: &mut R) -> Vec<usize> {
    let mut seq: Vec<usize> = t.counts.iter().enumerate().flat_map(|(s, &c)| std::iter::repeat_n(s, c)).collect();
    seq.shuffle(rng);
    seq
}

/// Uniform draw of `x^n` whose joint type with `v_seq` is `jt`.
pub fn sample_conditional_type_class<R: Rng + ?Sized>(jt: &JointType, v_seq: &[usize], rng: &mut R) -> Result<Vec<usize>> {
    let vt = TypeVector::of_sequence(v_seq, jt.nv)?;
    if vt != jt.v_marginal() {
        return Err(Error::Validation(format!(
            "sequence type {:?} does not match the V marginal {:?}",
            vt.counts,
            jt.v_marginal().counts
        )));
    }
    let mut out = vec![0usize; v_seq.len()];
    for v in 0..jt.nv {
        let mut pool: Vec<usize> =
            (0..jt.nx).flat_map(|x| std::iter::repeat_n(x, jt.count(v, x))).collect();
        pool.shuffle(rng);
        let positions = v_seq.iter().enumerate().filter(|(_, &s)| s == v).map(|(i, _)| i);
        for (pos, x) in positions.zip(pool) {
            out[pos] = x;
        }
    }
    Ok(out)
}

/// All `x^n` with joint type `jt` against `v_seq`, in lexicographic order of positions.
pub fn enumerate_conditional_class(jt: &JointType, v_seq: &[usize], limit: usize) -> Result<Vec<Vec<usize>>> {
    let vt = TypeVector::of_sequence(v_seq, jt.nv)?;
    if vt != jt.v_marginal() {
        return Err(Error::Validation("sequence does not match the V marginal".into()));
    }
    let size = jt.conditional_class_size();
    if size > BigUint::from(limit) {
        return Err(Error::Sizing(format!("conditional type class of size {size} exceeds {limit}")));
    }
    let mut remaining: Vec<Vec<usize>> = (0..jt.nv).map(|v| (0..jt.nx).map(|x| jt.count(v, x)).collect()).collect();
    let mut out = Vec::new();
    let mut cur = vec![0usize; v_seq.len()];
    fn rec(t: usize, v_seq: &[usize], rem: &mut [Vec<usize>], cur: &mut [usize], out: &mut Vec<Vec<usize>>) {
        if t == v_seq.len() {
            out.push(cur.to_vec());
            return;
        }
        let v = v_seq[t];
        for x in 0..rem[v].len() {
            if rem[v][x] > 0 {
                rem[v][x] -= 1;
                cur[t] = x;
                rec(t + 1, v_seq, rem, cur, out);
                rem[v][x] += 1;
            }
        }
    }
    rec(0, v_seq, &mut remaining, &mut cur, &mut out);
    Ok(out)
}

/// All sequences of the type class of `t`, in lexicographic order.
pub fn enumerate_type_class(t: &TypeVector, limit: usize) -> Result<Vec<Vec<usize>>> {
    let jt = JointType { nv: 1, nx: t.alphabet(), counts: t.counts.clone() };
    enumerate_conditional_class(&jt, &vec![0; t.n()], limit)
}

/// `Σ_x (counts(x)/n) g(x)`.
pub fn constant_composition_cost(t: &TypeVector, g: &[f64]) -> Result<f64> {
    if g.len() != t.alphabet() {
        return Err(Error::Dimension(format!("cost vector of length {} for alphabet {}", g.len(), t.alphabet())));
    }
    let n = t.n() as f64;
    Ok(t.counts.iter().zip(g).map(|(&c, &v)| c as f64 / n * v).sum())
}

/// Nearest type of length `n` to `p` in total variation; ties go to the lexicographically smallest counts.
pub fn snap_to_type(p: &Pmf, n: usize) -> Result<TypeVector> {
    if n == 0 {
        return Err(Error::Validation("blocklength must be positive".into()));
    }
    let target: Vec<f64> = p.probs().iter().map(|&x| x * n as f64).collect();
    let mut counts: Vec<usize> = target.iter().map(|&x| x.floor() as usize).collect();
    let used: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..counts.len()).collect();
    let frac = |i: usize| target[i] - target[i].floor();
    // larger remainder first; among equal remainders the later index, which keeps the counts lexicographically small
    order.sort_by(|&a, &b| frac(b).partial_cmp(&frac(a)).unwrap().then(b.cmp(&a)));
    for &i in order.iter().take(n.saturating_sub(used)) {
        counts[i] += 1;
    }
    TypeVector::new(counts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn enumeration_examples() {
        let t: Vec<Vec<usize>> = enumerate_types(2, 2).unwrap().into_iter().map(|t| t.counts).collect();
        assert_eq!(t, vec![vec![0, 2], vec![1, 1], vec![2, 0]]);
        assert_eq!(enumerate_types(1, 5).unwrap().len(), 1);
        assert_eq!(enumerate_types(3, 4).unwrap().len(), 15);
        assert!(matches!(enumerate_types(20, 30), Err(Error::Sizing(_))));
    }

    #[test]
    fn class_sizes() {
        assert_eq!(type_class_size(&TypeVector::new(vec![1, 1]).unwrap()), BigUint::from(2u32));
        assert_eq!(type_class_size(&TypeVector::new(vec![5, 0, 0]).unwrap()), BigUint::from(1u32));
        assert_eq!(type_class_size(&TypeVector::new(vec![2, 1, 1]).unwrap()), BigUint::from(12u32));
        let big = TypeVector::new(vec![40, 40, 40]).unwrap();
        assert!(type_class_size_u64(&big).is_none());
        assert!((type_class_size(&big).to_f64().unwrap().ln() - ln_type_class_size(&big)).abs() < 1e-9);
    }

    #[test]
    fn nu_examples() {
        assert!((nu_exact(2, 2) - 2.0).abs() < 1e-12);
        assert!((nu_exact(2, 4) - 8.0 / 3.0).abs() < 1e-12);
        assert!((nu_exact(1, 7) - 1.0).abs() < 1e-12);
        assert_eq!(nu_bound(2, 2), 9.0);
        assert_eq!(nu_bound(3, 1), 8.0);
        assert_eq!(nu_bound(4, 6), 2401.0);
    }

    #[test]
    fn snapping() {
        let p = Pmf::new(vec![0.5, 0.5]).unwrap();
        assert_eq!(snap_to_type(&p, 1).unwrap().counts, vec![0, 1]);
        let p = Pmf::new(vec![0.2, 0.3, 0.5]).unwrap();
        assert_eq!(snap_to_type(&p, 10).unwrap().counts, vec![2, 3, 5]);
    }

    #[test]
    fn cost_of_type() {
        let t = TypeVector::new(vec![1, 1]).unwrap();
        assert_eq!(constant_composition_cost(&t, &[0.0, 2.0]).unwrap(), 1.0);
        assert_eq!(constant_composition_cost(&t, &[0.0, 0.0]).unwrap(), 0.0);
    }
}
