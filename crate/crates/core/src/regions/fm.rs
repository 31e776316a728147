//! Fourier-Motzkin elimination over exact rationals or tolerant floats.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dominance and sign tolerance for the floating-point engine.
pub const FLOAT_TOL: f64 = 1e-9;

/// Largest system on which full redundancy removal is attempted.
pub const REDUNDANCY_LIMIT: usize = 64;

/// Field used by the elimination engine.
pub trait Scalar: Clone + fmt::Debug + fmt::Display + PartialEq + Send + Sync {
    fn zero() -> Self;
    fn one() -> Self;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn neg(&self) -> Self;
    fn abs(&self) -> Self;
    /// Sign, with values inside the engine tolerance treated as zero.
    fn signum(&self) -> Ordering;
    fn to_f64(&self) -> f64;
    /// Positive rescaling to a canonical representative of the inequality.
    fn normalize(coeffs: &mut [Self], rhs: &mut Self);
    /// Total order for sorting canonical systems.
    fn total_cmp(&self, o: &Self) -> Ordering;

    fn cmp_tol(&self, o: &Self) -> Ordering {
        self.sub(o).signum()
    }
    fn is_zero_tol(&self) -> bool {
        self.signum() == Ordering::Equal
    }
}

impl Scalar for BigRational {
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn neg(&self) -> Self {
        -self
    }
    fn abs(&self) -> Self {
        Signed::abs(self)
    }
    fn signum(&self) -> Ordering {
        self.cmp(&Zero::zero())
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn normalize(coeffs: &mut [Self], rhs: &mut Self) {
        use num_integer::Integer;
        let all = || coeffs.iter().chain(std::iter::once(&*rhs));
        let lcm = all().fold(BigInt::one(), |acc, v| acc.lcm(v.denom()));
        let gcd = all().fold(BigInt::zero(), |acc, v| acc.gcd(&(v.numer() * (&lcm / v.denom()))));
        if gcd.is_zero() {
            return;
        }
        let f = BigRational::new(lcm, gcd);
        for c in coeffs.iter_mut() {
            *c = &*c * &f;
        }
        *rhs = &*rhs * &f;
    }
    fn total_cmp(&self, o: &Self) -> Ordering {
        self.cmp(o)
    }
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn neg(&self) -> Self {
        -self
    }
    fn abs(&self) -> Self {
        f64::abs(*self)
    }
    fn signum(&self) -> Ordering {
        if *self > FLOAT_TOL {
            Ordering::Greater
        } else if *self < -FLOAT_TOL {
            Ordering::Less
        } else {
            Ordering::Equal
        }
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn normalize(coeffs: &mut [Self], rhs: &mut Self) {
        let m = coeffs.iter().fold(0.0f64, |a, c| a.max(f64::abs(*c)));
        let m = if m > FLOAT_TOL { m } else { f64::abs(*rhs) };
        if m > 0.0 {
            for c in coeffs.iter_mut() {
                *c /= m;
                if f64::abs(*c) <= FLOAT_TOL {
                    *c = 0.0;
                }
            }
            *rhs /= m;
        }
    }
    fn total_cmp(&self, o: &Self) -> Ordering {
        f64::total_cmp(self, o)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sense {
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = ">=")]
    Ge,
}

impl Sense {
    pub fn parse(s: &str) -> Result<Sense> {
        match s.trim() {
            "<" => Ok(Sense::Lt),
            "<=" | "≤" => Ok(Sense::Le),
            ">" => Ok(Sense::Gt),
            ">=" | "≥" => Ok(Sense::Ge),
            other => Err(Error::Validation(format!("unknown inequality sense {other:?}"))),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Sense::Lt => "<",
            Sense::Le => "<=",
            Sense::Gt => ">",
            Sense::Ge => ">=",
        }
    }

    pub fn is_strict(self) -> bool {
        matches!(self, Sense::Lt | Sense::Gt)
    }
}

/// `coeffs · x  sense  rhs`.
#[derive(Clone, Debug, PartialEq)]
pub struct Inequality<T> {
    pub coeffs: Vec<T>,
    pub sense: Sense,
    pub rhs: T,
}

impl<T: Scalar> Inequality<T> {
    pub fn new(coeffs: Vec<T>, sense: Sense, rhs: T) -> Self {
        Inequality { coeffs, sense, rhs }
    }

    /// Same set written with `<` or `<=`.
    pub fn upper_form(&self) -> Self {
        match self.sense {
            Sense::Lt | Sense::Le => self.clone(),
            Sense::Gt => Inequality::new(self.coeffs.iter().map(T::neg).collect(), Sense::Lt, self.rhs.neg()),
            Sense::Ge => Inequality::new(self.coeffs.iter().map(T::neg).collect(), Sense::Le, self.rhs.neg()),
        }
    }

    /// Complement of the set, in upper form.
    pub fn negated(&self) -> Self {
        let u = self.upper_form();
        let sense = if u.sense == Sense::Lt { Sense::Le } else { Sense::Lt };
        Inequality::new(u.coeffs.iter().map(T::neg).collect(), sense, u.rhs.neg())
    }

    pub fn holds(&self, x: &[T]) -> bool {
        let lhs = self.coeffs.iter().zip(x).fold(T::zero(), |a, (c, v)| a.add(&c.mul(v)));
        let o = lhs.cmp_tol(&self.rhs);
        match self.sense {
            Sense::Lt => o == Ordering::Less,
            Sense::Le => o != Ordering::Greater,
            Sense::Gt => o == Ordering::Greater,
            Sense::Ge => o != Ordering::Less,
        }
    }

    fn is_constant(&self) -> bool {
        self.coeffs.iter().all(T::is_zero_tol)
    }

    /// Truth value of a constant inequality in upper form.
    fn constant_holds(&self) -> bool {
        match self.rhs.signum() {
            Ordering::Greater => true,
            Ordering::Equal => self.sense == Sense::Le,
            Ordering::Less => false,
        }
    }

    fn canonical(&self) -> Self {
        let mut u = self.upper_form();
        T::normalize(&mut u.coeffs, &mut u.rhs);
        u
    }

    fn cmp_coeffs(&self, o: &Self) -> Ordering {
        for (a, b) in self.coeffs.iter().zip(&o.coeffs) {
            let c = a.total_cmp(b);
            if c != Ordering::Equal {
                return c;
            }
        }
        Ordering::Equal
    }

    fn same_direction(&self, o: &Self) -> bool {
        self.coeffs.iter().zip(&o.coeffs).all(|(a, b)| a.cmp_tol(b) == Ordering::Equal)
    }
}

/// Named-variable linear inequality system.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearSystem<T> {
    pub variables: Vec<String>,
    pub inequalities: Vec<Inequality<T>>,
}

impl<T: Scalar> LinearSystem<T> {
    pub fn new(variables: Vec<String>, inequalities: Vec<Inequality<T>>) -> Result<Self> {
        let n = variables.len();
        for (i, h) in inequalities.iter().enumerate() {
            if h.coeffs.len() != n {
                return Err(Error::Dimension(format!(
                    "inequality {i} has {} coefficients for {n} variables",
                    h.coeffs.len()
                )));
            }
        }
        let mut seen = std::collections::HashSet::new();
        for v in &variables {
            if !seen.insert(v) {
                return Err(Error::Validation(format!("duplicate variable {v:?}")));
            }
        }
        Ok(LinearSystem { variables, inequalities })
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v == name)
    }

    pub fn holds(&self, x: &[T]) -> bool {
        self.inequalities.iter().all(|h| h.holds(x))
    }

    /// Upper form, positively rescaled, deduplicated by dominance and sorted.
    pub fn canonical(&self) -> Self {
        let mut out: Vec<Inequality<T>> = Vec::new();
        let mut infeasible = false;
        for h in &self.inequalities {
            let c = h.canonical();
            if c.is_constant() {
                if !c.constant_holds() {
                    infeasible = true;
                }
                continue;
            }
            match out.iter_mut().find(|o| o.same_direction(&c)) {
                Some(o) => match c.rhs.cmp_tol(&o.rhs) {
                    Ordering::Less => *o = c,
                    Ordering::Equal if c.sense == Sense::Lt => o.sense = Sense::Lt,
                    _ => {}
                },
                None => out.push(c),
            }
        }
        if infeasible {
            let zeros = vec![T::zero(); self.variables.len()];
            out = vec![Inequality::new(zeros, Sense::Le, T::one().neg())];
        }
        out.sort_by(|a, b| a.cmp_coeffs(b).then(a.rhs.total_cmp(&b.rhs)).then(a.sense.cmp(&b.sense)));
        LinearSystem { variables: self.variables.clone(), inequalities: out }
    }

    /// Whether the system contains an explicit contradiction after canonicalisation.
    fn trivially_infeasible(&self) -> bool {
        self.inequalities.iter().any(|h| h.is_constant() && !h.constant_holds())
    }

    /// Eliminates one variable and drops its column.
    pub fn eliminate_one(&self, k: usize) -> Self {
        let mut pos = Vec::new();
        let mut neg = Vec::new();
        let mut rest = Vec::new();
        for h in &self.inequalities {
            let u = h.upper_form();
            match u.coeffs[k].signum() {
                Ordering::Greater => pos.push(u),
                Ordering::Less => neg.push(u),
                Ordering::Equal => rest.push(u),
            }
        }
        for p in &pos {
            for q in &neg {
                let a = p.coeffs[k].clone();
                let b = q.coeffs[k].neg();
                let coeffs = p.coeffs.iter().zip(&q.coeffs).map(|(x, y)| x.mul(&b).add(&y.mul(&a))).collect();
                let rhs = p.rhs.mul(&b).add(&q.rhs.mul(&a));
                let sense = if p.sense == Sense::Lt || q.sense == Sense::Lt { Sense::Lt } else { Sense::Le };
                rest.push(Inequality::new(coeffs, sense, rhs));
            }
        }
        let mut variables = self.variables.clone();
        variables.remove(k);
        for h in &mut rest {
            h.coeffs.remove(k);
        }
        LinearSystem { variables, inequalities: rest }.canonical()
    }

    pub fn is_feasible(&self) -> bool {
        let mut s = self.canonical();
        while !s.variables.is_empty() {
            if s.trivially_infeasible() {
                return false;
            }
            s = s.eliminate_one(0);
        }
        !s.trivially_infeasible()
    }

    /// Drops every inequality implied by the others.
    pub fn remove_redundant(&self) -> Self {
        let mut s = self.canonical();
        if s.inequalities.len() > REDUNDANCY_LIMIT || s.trivially_infeasible() {
            return s;
        }
        let mut i = 0;
        while i < s.inequalities.len() {
            let mut probe = s.inequalities.clone();
            let h = probe.remove(i);
            probe.push(h.negated());
            let test = LinearSystem { variables: s.variables.clone(), inequalities: probe };
            if test.is_feasible() {
                i += 1;
            } else {
                s.inequalities.remove(i);
            }
        }
        s
    }
}

/// Projects `sys` onto the variables not listed in `eliminate`, in the given order.
pub fn fourier_motzkin<T: Scalar>(sys: &LinearSystem<T>, eliminate: &[&str]) -> Result<LinearSystem<T>> {
    let mut cur = sys.canonical();
    for name in eliminate {
        let k = cur
            .index_of(name)
            .ok_or_else(|| Error::Validation(format!("variable {name:?} not in the system")))?;
        cur = cur.eliminate_one(k).remove_redundant();
    }
    Ok(cur)
}

impl<T: Scalar> fmt::Display for LinearSystem<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for h in &self.inequalities {
            let mut first = true;
            for (c, v) in h.coeffs.iter().zip(&self.variables) {
                if c.is_zero_tol() {
                    continue;
                }
                let neg = c.signum() == Ordering::Less;
                let mag = c.abs();
                let sign = match (first, neg) {
                    (true, true) => "-",
                    (true, false) => "",
                    (false, true) => " - ",
                    (false, false) => " + ",
                };
                if mag == T::one() {
                    write!(f, "{sign}{v}")?;
                } else {
                    write!(f, "{sign}{mag}*{v}")?;
                }
                first = false;
            }
            if first {
                write!(f, "0")?;
            }
            writeln!(f, " {} {}", h.sense.as_str(), h.rhs)?;
        }
        Ok(())
    }
}

/// Parses `"3"`, `"-2/5"` or `"0.125"` exactly.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let bad = || Error::Validation(format!("not a rational number: {s:?}"));
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(n, d));
    }
    let (mant, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let (int, frac) = mant.split_once('.').unwrap_or((mant, ""));
    if !frac.chars().all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let digits = format!("{int}{frac}");
    if matches!(digits.as_str(), "" | "-" | "+") {
        return Err(bad());
    }
    let n: BigInt = digits.parse().map_err(|_| bad())?;
    let scale = exp - frac.len() as i32;
    let ten = BigInt::from(10);
    Ok(if scale >= 0 {
        BigRational::from_integer(n * num_traits::pow(ten, scale as usize))
    } else {
        BigRational::new(n, num_traits::pow(ten, (-scale) as usize))
    })
}

/// Exact system with the same inequalities as a float system whose entries are all integers.
pub fn to_rational(sys: &LinearSystem<f64>) -> Option<LinearSystem<BigRational>> {
    let conv = |x: f64| BigRational::from_float(x);
    let inequalities = sys
        .inequalities
        .iter()
        .map(|h| {
            Some(Inequality::new(h.coeffs.iter().map(|&c| conv(c)).collect::<Option<_>>()?, h.sense, conv(h.rhs)?))
        })
        .collect::<Option<_>>()?;
    Some(LinearSystem { variables: sys.variables.clone(), inequalities })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64) -> BigRational {
        BigRational::from_integer(n.into())
    }

    fn sys(vars: &[&str], rows: &[(&[i64], Sense, i64)]) -> LinearSystem<BigRational> {
        LinearSystem::new(
            vars.iter().map(|s| s.to_string()).collect(),
            rows.iter().map(|(c, s, r)| Inequality::new(c.iter().map(|&v| q(v)).collect(), *s, q(*r))).collect(),
        )
        .unwrap()
    }

    #[test]
    fn interval_projection() {
        // 1 < x - y, x + y <= 4  =>  eliminate x gives 1 + y < 4 - y, i.e. 2y < 3
        let s = sys(&["x", "y"], &[(&[1, -1], Sense::Gt, 1), (&[1, 1], Sense::Le, 4)]);
        let p = fourier_motzkin(&s, &["x"]).unwrap();
        assert_eq!(p.variables, vec!["y".to_string()]);
        assert_eq!(p.inequalities, vec![Inequality::new(vec![q(2)], Sense::Lt, q(3))]);
    }

    #[test]
    fn dominance_keeps_tighter() {
        let s = sys(&["x"], &[(&[2], Sense::Le, 4), (&[1], Sense::Lt, 2), (&[3], Sense::Le, 9)]);
        let c = s.canonical();
        assert_eq!(c.inequalities, vec![Inequality::new(vec![q(1)], Sense::Lt, q(2))]);
    }

    #[test]
    fn infeasibility() {
        let s = sys(&["x"], &[(&[1], Sense::Lt, 0), (&[1], Sense::Ge, 0)]);
        assert!(!s.is_feasible());
        let s = sys(&["x"], &[(&[1], Sense::Le, 0), (&[1], Sense::Ge, 0)]);
        assert!(s.is_feasible());
    }

    #[test]
    fn redundancy() {
        let s = sys(&["x", "y"], &[(&[1, 0], Sense::Le, 1), (&[0, 1], Sense::Le, 1), (&[1, 1], Sense::Le, 3)]);
        assert_eq!(s.remove_redundant().inequalities.len(), 2);
    }

    #[test]
    fn rational_parsing() {
        assert_eq!(parse_rational("-2/4").unwrap(), BigRational::new((-1).into(), 2.into()));
        assert_eq!(parse_rational("0.125").unwrap(), BigRational::new(1.into(), 8.into()));
        assert_eq!(parse_rational("15e-1").unwrap(), BigRational::new(3.into(), 2.into()));
        assert_eq!(parse_rational("7").unwrap(), q(7));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational(".").is_err());
    }
}
