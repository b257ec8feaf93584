//! Exact multivariate polynomials with rational coefficients over a chart.
//!
//! This is the scalar ring for every symbolic object in the crate. Terms are
//! kept in a sorted map from dense exponent multi-indices to nonzero rational
//! coefficients, so equality to zero is decidable by emptiness.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_traits::{One, Signed, Zero};

use crate::chart::{rational_to_f64, ChartRef, RationalPoint};
use crate::error::{Error, Result};
use crate::Rational;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolyScalar {
    chart: ChartRef,
    // multi-index (length = chart dim) -> nonzero coefficient
    terms: BTreeMap<Vec<u32>, Rational>,
}

impl PolyScalar {
    pub fn zero(chart: &ChartRef) -> Self {
        PolyScalar {
            chart: chart.clone(),
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(chart: &ChartRef, c: Rational) -> Self {
        let mut p = Self::zero(chart);
        if !c.is_zero() {
            p.terms.insert(vec![0; chart.dim()], c);
        }
        p
    }

    pub fn one(chart: &ChartRef) -> Self {
        Self::constant(chart, Rational::one())
    }

    pub fn from_i64(chart: &ChartRef, c: i64) -> Self {
        Self::constant(chart, Rational::from_integer(c.into()))
    }

    /// The coordinate function with the given index.
    pub fn var(chart: &ChartRef, index: usize) -> Self {
        assert!(index < chart.dim());
        let mut exps = vec![0; chart.dim()];
        exps[index] = 1;
        let mut p = Self::zero(chart);
        p.terms.insert(exps, Rational::one());
        p
    }

    pub fn var_named(chart: &ChartRef, name: &str) -> Result<Self> {
        Ok(Self::var(chart, chart.index_of(name)?))
    }

    pub fn monomial(chart: &ChartRef, exps: Vec<u32>, coeff: Rational) -> Result<Self> {
        if exps.len() != chart.dim() {
            return Err(Error::DimensionMismatch {
                expected: chart.dim(),
                found: exps.len(),
            });
        }
        let total: u32 = exps.iter().sum();
        if total > chart.max_degree() {
            return Err(Error::DegreeOverflow {
                degree: total,
                cap: chart.max_degree(),
            });
        }
        let mut p = Self::zero(chart);
        if !coeff.is_zero() {
            p.terms.insert(exps, coeff);
        }
        Ok(p)
    }

    pub fn chart(&self) -> &ChartRef {
        &self.chart
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, &Rational)> {
        self.terms.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.keys().all(|e| e.iter().all(|&x| x == 0))
    }

    pub fn as_constant(&self) -> Option<Rational> {
        if self.is_zero() {
            Some(Rational::zero())
        } else if self.is_constant() {
            self.terms.values().next().cloned()
        } else {
            None
        }
    }

    pub fn total_degree(&self) -> u32 {
        self.terms
            .keys()
            .map(|e| e.iter().sum())
            .max()
            .unwrap_or(0)
    }

    fn insert_term(&mut self, exps: Vec<u32>, coeff: Rational) {
        if coeff.is_zero() {
            return;
        }
        match self.terms.entry(exps) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(coeff);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let sum = o.get().clone() + coeff;
                if sum.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = sum;
                }
            }
        }
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        self.chart.check_same(&other.chart)?;
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.insert_term(e.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn checked_mul(&self, other: &Self) -> Result<Self> {
        self.chart.check_same(&other.chart)?;
        let cap = self.chart.max_degree();
        let mut out = Self::zero(&self.chart);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let exps: Vec<u32> = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                let total: u32 = exps.iter().sum();
                if total > cap {
                    return Err(Error::DegreeOverflow { degree: total, cap });
                }
                out.insert_term(exps, ca * cb);
            }
        }
        Ok(out)
    }

    pub fn scale(&self, c: &Rational) -> Self {
        let mut out = Self::zero(&self.chart);
        if c.is_zero() {
            return out;
        }
        for (e, a) in &self.terms {
            out.terms.insert(e.clone(), a * c);
        }
        out
    }

    pub fn pow(&self, n: u32) -> Result<Self> {
        let mut out = Self::one(&self.chart);
        for _ in 0..n {
            out = out.checked_mul(self)?;
        }
        Ok(out)
    }

    /// Partial derivative with respect to the coordinate `index`.
    pub fn partial(&self, index: usize) -> Self {
        let mut out = Self::zero(&self.chart);
        for (e, c) in &self.terms {
            let k = e[index];
            if k == 0 {
                continue;
            }
            let mut exps = e.clone();
            exps[index] = k - 1;
            out.insert_term(exps, c * Rational::from_integer(k.into()));
        }
        out
    }

    pub fn eval(&self, p: &RationalPoint) -> Result<Rational> {
        self.chart.check_same(p.chart())?;
        Ok(self.eval_coords(p.coords()))
    }

    pub fn eval_coords(&self, coords: &[Rational]) -> Rational {
        let mut acc = Rational::zero();
        for (e, c) in &self.terms {
            let mut term = c.clone();
            for (i, &k) in e.iter().enumerate() {
                for _ in 0..k {
                    term *= &coords[i];
                }
            }
            acc += term;
        }
        acc
    }

    pub fn eval_f64(&self, coords: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (e, c) in &self.terms {
            let mut term = rational_to_f64(c);
            for (i, &k) in e.iter().enumerate() {
                term *= coords[i].powi(k as i32);
            }
            acc += term;
        }
        acc
    }

    pub fn depends_on(&self, index: usize) -> bool {
        self.terms.keys().any(|e| e[index] > 0)
    }

    /// Substitute an exact value for one coordinate; the result still lives
    /// on the same chart but no longer depends on that coordinate.
    pub fn substitute(&self, index: usize, value: &Rational) -> Self {
        let mut out = Self::zero(&self.chart);
        for (e, c) in &self.terms {
            let mut coeff = c.clone();
            for _ in 0..e[index] {
                coeff *= value;
            }
            let mut exps = e.clone();
            exps[index] = 0;
            out.insert_term(exps, coeff);
        }
        out
    }

    /// Reinterpret on a chart with coordinate `index` removed. Errors if the
    /// polynomial still depends on it.
    pub fn project_out(&self, index: usize, target: &ChartRef) -> Result<Self> {
        if self.depends_on(index) {
            return Err(Error::ResidualDependence);
        }
        let mut out = Self::zero(target);
        for (e, c) in &self.terms {
            let mut exps = e.clone();
            exps.remove(index);
            debug_assert_eq!(exps.len(), target.dim());
            out.terms.insert(exps, c.clone());
        }
        Ok(out)
    }

    /// Reinterpret on a larger chart whose first coordinates match this one.
    pub fn lift_to(&self, target: &ChartRef) -> Result<Self> {
        let extra = target
            .dim()
            .checked_sub(self.chart.dim())
            .ok_or(Error::DimensionMismatch {
                expected: self.chart.dim(),
                found: target.dim(),
            })?;
        let mut out = Self::zero(target);
        for (e, c) in &self.terms {
            let mut exps = e.clone();
            exps.extend(std::iter::repeat(0).take(extra));
            out.terms.insert(exps, c.clone());
        }
        Ok(out)
    }
}

impl Add for &PolyScalar {
    type Output = PolyScalar;
    fn add(self, rhs: &PolyScalar) -> PolyScalar {
        self.checked_add(rhs).expect("chart mismatch in +")
    }
}

impl Sub for &PolyScalar {
    type Output = PolyScalar;
    fn sub(self, rhs: &PolyScalar) -> PolyScalar {
        self + &(-rhs)
    }
}

impl Mul for &PolyScalar {
    type Output = PolyScalar;
    fn mul(self, rhs: &PolyScalar) -> PolyScalar {
        self.checked_mul(rhs).expect("polynomial product overflow")
    }
}

impl Neg for &PolyScalar {
    type Output = PolyScalar;
    fn neg(self) -> PolyScalar {
        self.scale(&-Rational::one())
    }
}

impl fmt::Display for PolyScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (e, c) in self.terms.iter().rev() {
            let mut mono = String::new();
            for (i, &k) in e.iter().enumerate() {
                if k == 0 {
                    continue;
                }
                if !mono.is_empty() {
                    mono.push('*');
                }
                mono.push_str(self.chart.name(i));
                if k > 1 {
                    mono.push_str(&format!("^{k}"));
                }
            }
            let neg = c.is_negative();
            let abs = c.abs();
            if first {
                if neg {
                    write!(f, "-")?;
                }
                first = false;
            } else if neg {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            if mono.is_empty() {
                write!(f, "{abs}")?;
            } else if abs.is_one() {
                write!(f, "{mono}")?;
            } else {
                write!(f, "{abs}*{mono}")?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::Chart;

    fn xyz() -> ChartRef {
        Chart::new(["x", "y", "z"]).unwrap()
    }

    #[test]
    fn ring_basics() {
        let ch = xyz();
        let x = PolyScalar::var(&ch, 0);
        let y = PolyScalar::var(&ch, 1);
        let p = &(&x * &x) + &(&y.scale(&Rational::from_integer(3.into())));
        assert_eq!(p.total_degree(), 2);
        let q = &p - &p;
        assert!(q.is_zero());
    }

    #[test]
    fn partial_derivative() {
        let ch = xyz();
        let x = PolyScalar::var(&ch, 0);
        let y = PolyScalar::var(&ch, 1);
        // d/dx (x^2 y) = 2 x y
        let p = &(&x * &x) * &y;
        let expect = (&x * &y).scale(&Rational::from_integer(2.into()));
        assert_eq!(p.partial(0), expect);
        assert!(p.partial(2).is_zero());
    }

    #[test]
    fn eval_exact() {
        let ch = xyz();
        let x = PolyScalar::var(&ch, 0);
        let y = PolyScalar::var(&ch, 1);
        let p = &(&x * &y) + &PolyScalar::from_i64(&ch, 7);
        let pt = RationalPoint::from_i64(ch.clone(), &[2, -3, 0]).unwrap();
        assert_eq!(p.eval(&pt).unwrap(), Rational::from_integer(1.into()));
    }

    #[test]
    fn degree_cap_is_an_error() {
        let ch = Chart::with_max_degree(["x"], 3).unwrap();
        let x = PolyScalar::var(&ch, 0);
        let x2 = x.checked_mul(&x).unwrap();
        assert!(x2.checked_mul(&x2).is_err());
    }

    #[test]
    fn substitution_drops_dependence() {
        let ch = xyz();
        let x = PolyScalar::var(&ch, 0);
        let z = PolyScalar::var(&ch, 2);
        let p = &(&x * &z) + &z;
        let s = p.substitute(2, &Rational::from_integer(5.into()));
        assert!(!s.depends_on(2));
        let pt = RationalPoint::from_i64(ch.clone(), &[1, 0, 9]).unwrap();
        assert_eq!(s.eval(&pt).unwrap(), Rational::from_integer(10.into()));
    }
}
