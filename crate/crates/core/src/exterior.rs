//! Vector fields and exterior differential forms with polynomial
//! coefficients, and the operations connecting them: Lie bracket, exterior
//! derivative, wedge product, interior product, pointwise evaluation.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::Zero;

use crate::chart::{ChartRef, RationalPoint};
use crate::error::{Error, Result};
use crate::poly::PolyScalar;
use crate::Rational;

/// A coordinate vector field: one polynomial component per chart coordinate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VectorField {
    chart: ChartRef,
    components: Vec<PolyScalar>,
}

impl VectorField {
    pub fn new(chart: ChartRef, components: Vec<PolyScalar>) -> Result<Self> {
        if components.len() != chart.dim() {
            return Err(Error::DimensionMismatch {
                expected: chart.dim(),
                found: components.len(),
            });
        }
        for c in &components {
            chart.check_same(c.chart())?;
        }
        Ok(VectorField { chart, components })
    }

    pub fn zero(chart: &ChartRef) -> Self {
        let components = (0..chart.dim()).map(|_| PolyScalar::zero(chart)).collect();
        VectorField {
            chart: chart.clone(),
            components,
        }
    }

    /// The coordinate field along coordinate `index` (written `d_x` in the
    /// CLI grammar).
    pub fn coordinate(chart: &ChartRef, index: usize) -> Self {
        let mut v = Self::zero(chart);
        v.components[index] = PolyScalar::one(chart);
        v
    }

    pub fn chart(&self) -> &ChartRef {
        &self.chart
    }

    pub fn components(&self) -> &[PolyScalar] {
        &self.components
    }

    pub fn component(&self, i: usize) -> &PolyScalar {
        &self.components[i]
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(|c| c.is_zero())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.chart.check_same(&other.chart)?;
        let components = self
            .components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| a.checked_add(b))
            .collect::<Result<_>>()?;
        Ok(VectorField {
            chart: self.chart.clone(),
            components,
        })
    }

    pub fn neg(&self) -> Self {
        VectorField {
            chart: self.chart.clone(),
            components: self.components.iter().map(|c| -c).collect(),
        }
    }

    pub fn scale_poly(&self, f: &PolyScalar) -> Result<Self> {
        let components = self
            .components
            .iter()
            .map(|c| c.checked_mul(f))
            .collect::<Result<_>>()?;
        Ok(VectorField {
            chart: self.chart.clone(),
            components,
        })
    }

    /// Directional derivative X(f).
    pub fn apply(&self, f: &PolyScalar) -> Result<PolyScalar> {
        self.chart.check_same(f.chart())?;
        let mut acc = PolyScalar::zero(&self.chart);
        for (i, xi) in self.components.iter().enumerate() {
            acc = acc.checked_add(&xi.checked_mul(&f.partial(i))?)?;
        }
        Ok(acc)
    }

    pub fn eval(&self, p: &RationalPoint) -> Result<Vec<Rational>> {
        self.chart.check_same(p.chart())?;
        self.components.iter().map(|c| c.eval(p)).collect()
    }

    pub fn eval_f64(&self, coords: &[f64]) -> Vec<f64> {
        self.components.iter().map(|c| c.eval_f64(coords)).collect()
    }
}

/// The Lie bracket [X, Y]^k = sum_i X^i d_i Y^k - Y^i d_i X^k, exact.
pub fn lie_bracket(x: &VectorField, y: &VectorField) -> Result<VectorField> {
    x.chart().check_same(y.chart())?;
    let chart = x.chart().clone();
    let mut components = Vec::with_capacity(chart.dim());
    for k in 0..chart.dim() {
        let xy = x.apply(y.component(k))?;
        let yx = y.apply(x.component(k))?;
        components.push(&xy - &yx);
    }
    VectorField::new(chart, components)
}

/// Exact antisymmetric tensor value of a form at a point: strictly
/// increasing k-index -> rational component.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FormValue {
    pub degree: usize,
    pub components: BTreeMap<Vec<usize>, Rational>,
}

impl FormValue {
    pub fn is_zero(&self) -> bool {
        self.components.values().all(|c| c.is_zero())
    }

    /// Flatten onto a shared key set; used for pointwise rank tests across
    /// several form values of the same degree.
    pub fn flatten(values: &[FormValue]) -> Vec<Vec<Rational>> {
        let mut keys: Vec<Vec<usize>> = Vec::new();
        for v in values {
            for k in v.components.keys() {
                if !keys.contains(k) {
                    keys.push(k.clone());
                }
            }
        }
        keys.sort();
        values
            .iter()
            .map(|v| {
                keys.iter()
                    .map(|k| v.components.get(k).cloned().unwrap_or_else(Rational::zero))
                    .collect()
            })
            .collect()
    }
}

/// An exterior k-form with polynomial coefficients. Terms are stored on
/// strictly increasing coordinate index lists with sign normalization done
/// at insertion, so the zero form is the empty map.
///
/// A degree can exceed the chart dimension only for the zero form (any wedge
/// that overflows the dimension collapses to it).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtForm {
    chart: ChartRef,
    degree: usize,
    terms: BTreeMap<Vec<usize>, PolyScalar>,
}

/// Sort an index list, counting inversions; `None` when an index repeats.
fn normalize_indices(mut idx: Vec<usize>) -> Option<(Vec<usize>, bool)> {
    let mut swaps = 0usize;
    for i in 1..idx.len() {
        let mut j = i;
        while j > 0 && idx[j - 1] > idx[j] {
            idx.swap(j - 1, j);
            swaps += 1;
            j -= 1;
        }
    }
    if idx.windows(2).any(|w| w[0] == w[1]) {
        return None;
    }
    Some((idx, swaps % 2 == 1))
}

impl ExtForm {
    pub fn zero(chart: &ChartRef, degree: usize) -> Self {
        ExtForm {
            chart: chart.clone(),
            degree,
            terms: BTreeMap::new(),
        }
    }

    pub fn from_scalar(f: PolyScalar) -> Self {
        let chart = f.chart().clone();
        let mut form = Self::zero(&chart, 0);
        form.insert(vec![], f);
        form
    }

    /// The coordinate differential dx_i.
    pub fn d_coord(chart: &ChartRef, index: usize) -> Self {
        let mut form = Self::zero(chart, 1);
        form.insert(vec![index], PolyScalar::one(chart));
        form
    }

    /// A 1-form from its coefficient row (alpha = sum_i a_i dx_i).
    pub fn one_form(chart: &ChartRef, coeffs: Vec<PolyScalar>) -> Result<Self> {
        if coeffs.len() != chart.dim() {
            return Err(Error::DimensionMismatch {
                expected: chart.dim(),
                found: coeffs.len(),
            });
        }
        let mut form = Self::zero(chart, 1);
        for (i, c) in coeffs.into_iter().enumerate() {
            form.insert(vec![i], c);
        }
        Ok(form)
    }

    pub fn chart(&self) -> &ChartRef {
        &self.chart
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<usize>, &PolyScalar)> {
        self.terms.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Insert with sign normalization; terms cancel exactly.
    pub fn insert(&mut self, indices: Vec<usize>, coeff: PolyScalar) {
        debug_assert_eq!(indices.len(), self.degree);
        if coeff.is_zero() {
            return;
        }
        let Some((sorted, flip)) = normalize_indices(indices) else {
            return;
        };
        let coeff = if flip { -&coeff } else { coeff };
        match self.terms.entry(sorted) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(coeff);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let sum = o.get().checked_add(&coeff).expect("chart mismatch");
                if sum.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = sum;
                }
            }
        }
    }

    pub fn coefficient(&self, indices: &[usize]) -> PolyScalar {
        self.terms
            .get(indices)
            .cloned()
            .unwrap_or_else(|| PolyScalar::zero(&self.chart))
    }

    /// Coefficient row of a 1-form.
    pub fn coefficient_row(&self) -> Result<Vec<PolyScalar>> {
        if self.degree != 1 {
            return Err(Error::BadDegree {
                degree: self.degree,
                dim: self.chart.dim(),
            });
        }
        Ok((0..self.chart.dim())
            .map(|i| self.coefficient(&[i]))
            .collect())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.chart.check_same(&other.chart)?;
        if self.degree != other.degree {
            return Err(Error::BadDegree {
                degree: other.degree,
                dim: self.chart.dim(),
            });
        }
        let mut out = self.clone();
        for (i, c) in &other.terms {
            out.insert(i.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        self.map_coeffs(|c| -c)
    }

    pub fn scale_poly(&self, f: &PolyScalar) -> Result<Self> {
        let mut out = Self::zero(&self.chart, self.degree);
        for (i, c) in &self.terms {
            out.insert(i.clone(), c.checked_mul(f)?);
        }
        Ok(out)
    }

    pub fn scale(&self, c: &Rational) -> Self {
        self.map_coeffs(|p| p.scale(c))
    }

    pub fn map_coeffs(&self, f: impl Fn(&PolyScalar) -> PolyScalar) -> Self {
        let mut out = Self::zero(&self.chart, self.degree);
        for (i, c) in &self.terms {
            out.insert(i.clone(), f(c));
        }
        out
    }

    /// Apply a 1-form to a vector field: alpha(X), a scalar.
    pub fn apply_to(&self, x: &VectorField) -> Result<PolyScalar> {
        let contracted = interior_product(x, self)?;
        debug_assert_eq!(contracted.degree, 0);
        Ok(contracted.coefficient(&[]))
    }

    pub fn eval(&self, p: &RationalPoint) -> Result<FormValue> {
        self.chart.check_same(p.chart())?;
        let mut components = BTreeMap::new();
        for (i, c) in &self.terms {
            let v = c.eval(p)?;
            if !v.is_zero() {
                components.insert(i.clone(), v);
            }
        }
        Ok(FormValue {
            degree: self.degree,
            components,
        })
    }

    /// Coefficient row of a 1-form evaluated at a rational point.
    pub fn eval_row(&self, p: &RationalPoint) -> Result<Vec<Rational>> {
        self.coefficient_row()?
            .iter()
            .map(|c| c.eval(p))
            .collect()
    }

    pub fn eval_row_f64(&self, coords: &[f64]) -> Result<Vec<f64>> {
        Ok(self
            .coefficient_row()?
            .iter()
            .map(|c| c.eval_f64(coords))
            .collect())
    }
}

/// Exterior derivative; linear, satisfies d(d(a)) = 0 and the graded
/// Leibniz rule.
pub fn exterior_derivative(alpha: &ExtForm) -> ExtForm {
    let chart = alpha.chart().clone();
    let mut out = ExtForm::zero(&chart, alpha.degree() + 1);
    for (idx, coeff) in alpha.terms() {
        for i in 0..chart.dim() {
            let dc = coeff.partial(i);
            if dc.is_zero() {
                continue;
            }
            let mut indices = Vec::with_capacity(idx.len() + 1);
            indices.push(i);
            indices.extend_from_slice(idx);
            out.insert(indices, dc);
        }
    }
    out
}

/// Graded-commutative wedge product. A product whose degree exceeds the
/// chart dimension is the canonical zero form of that degree.
pub fn wedge(alpha: &ExtForm, beta: &ExtForm) -> Result<ExtForm> {
    alpha.chart().check_same(beta.chart())?;
    let chart = alpha.chart().clone();
    let degree = alpha.degree() + beta.degree();
    let mut out = ExtForm::zero(&chart, degree);
    if degree > chart.dim() {
        return Ok(out);
    }
    for (ia, ca) in alpha.terms() {
        for (ib, cb) in beta.terms() {
            let mut indices = Vec::with_capacity(degree);
            indices.extend_from_slice(ia);
            indices.extend_from_slice(ib);
            out.insert(indices, ca.checked_mul(cb)?);
        }
    }
    Ok(out)
}

pub fn wedge_all(forms: &[&ExtForm]) -> Result<ExtForm> {
    let first = forms.first().ok_or(Error::EmptyInput("wedge_all"))?;
    let mut acc = (*first).clone();
    for f in &forms[1..] {
        acc = wedge(&acc, f)?;
    }
    Ok(acc)
}

/// n-th wedge power of a form (power 0 is the constant 0-form 1).
pub fn wedge_power(alpha: &ExtForm, n: usize) -> Result<ExtForm> {
    let mut acc = ExtForm::from_scalar(PolyScalar::one(alpha.chart()));
    for _ in 0..n {
        acc = wedge(&acc, alpha)?;
    }
    Ok(acc)
}

/// Interior product (contraction in the first slot); an antiderivation with
/// iota_X iota_X = 0.
pub fn interior_product(x: &VectorField, alpha: &ExtForm) -> Result<ExtForm> {
    x.chart().check_same(alpha.chart())?;
    if alpha.degree() == 0 {
        return Err(Error::BadDegree {
            degree: 0,
            dim: alpha.chart().dim(),
        });
    }
    let chart = alpha.chart().clone();
    let mut out = ExtForm::zero(&chart, alpha.degree() - 1);
    for (idx, coeff) in alpha.terms() {
        for (j, &i) in idx.iter().enumerate() {
            let xi = x.component(i);
            if xi.is_zero() {
                continue;
            }
            let mut rest: Vec<usize> = idx.clone();
            rest.remove(j);
            let mut c = coeff.checked_mul(xi)?;
            if j % 2 == 1 {
                c = -&c;
            }
            out.insert(rest, c);
        }
    }
    Ok(out)
}

/// Two-slot evaluation of a 2-form: alpha(X, Y).
pub fn two_form_apply(alpha: &ExtForm, x: &VectorField, y: &VectorField) -> Result<PolyScalar> {
    interior_product(x, alpha)?.apply_to(y)
}

impl fmt::Display for ExtForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (idx, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            let basis: Vec<&str> = idx.iter().map(|&i| self.chart.name(i)).collect();
            if idx.is_empty() {
                write!(f, "{c}")?;
            } else {
                write!(f, "({c}) d{}", basis.join("^d"))?;
            }
        }
        Ok(())
    }
}

impl fmt::Display for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (i, c) in self.components.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({c}) d_{}", self.chart.name(i))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::Chart;

    fn chart4() -> ChartRef {
        Chart::new(["x", "y", "z", "w"]).unwrap()
    }

    #[test]
    fn coordinate_fields_commute() {
        let ch = chart4();
        let dx = VectorField::coordinate(&ch, 0);
        let dy = VectorField::coordinate(&ch, 1);
        assert!(lie_bracket(&dx, &dy).unwrap().is_zero());
    }

    #[test]
    fn bracket_engel_generators() {
        // [d_w, d_x + y d_z + w d_y] = d_y
        let ch = chart4();
        let w = PolyScalar::var(&ch, 3);
        let y = PolyScalar::var(&ch, 1);
        let dw = VectorField::coordinate(&ch, 3);
        let z_field = VectorField::new(
            ch.clone(),
            vec![
                PolyScalar::one(&ch),
                w,
                y,
                PolyScalar::zero(&ch),
            ],
        )
        .unwrap();
        let br = lie_bracket(&dw, &z_field).unwrap();
        assert_eq!(br, VectorField::coordinate(&ch, 1));
    }

    #[test]
    fn d_of_contact_form() {
        // d(dz - y dx) = dx ^ dy
        let ch = chart4();
        let y = PolyScalar::var(&ch, 1);
        let mut theta = ExtForm::d_coord(&ch, 2);
        theta = theta
            .add(&ExtForm::d_coord(&ch, 0).scale_poly(&(-&y)).unwrap())
            .unwrap();
        let dtheta = exterior_derivative(&theta);
        let mut expect = ExtForm::zero(&ch, 2);
        expect.insert(vec![0, 1], PolyScalar::one(&ch));
        assert_eq!(dtheta, expect);
    }

    #[test]
    fn d_squared_zero() {
        let ch = chart4();
        let x = PolyScalar::var(&ch, 0);
        let y = PolyScalar::var(&ch, 1);
        let mut alpha = ExtForm::zero(&ch, 1);
        alpha.insert(vec![2], &(&x * &x) * &y);
        alpha.insert(vec![3], &x + &y);
        assert!(exterior_derivative(&exterior_derivative(&alpha)).is_zero());
    }

    #[test]
    fn wedge_self_vanishes() {
        let ch = chart4();
        let dx = ExtForm::d_coord(&ch, 0);
        assert!(wedge(&dx, &dx).unwrap().is_zero());
    }

    #[test]
    fn wedge_cancellation() {
        // (dz - y dx) ^ (dx ^ dy) = dx ^ dy ^ dz
        let ch = chart4();
        let y = PolyScalar::var(&ch, 1);
        let mut theta = ExtForm::d_coord(&ch, 2);
        theta = theta
            .add(&ExtForm::d_coord(&ch, 0).scale_poly(&(-&y)).unwrap())
            .unwrap();
        let dxdy = wedge(&ExtForm::d_coord(&ch, 0), &ExtForm::d_coord(&ch, 1)).unwrap();
        let got = wedge(&theta, &dxdy).unwrap();
        let mut expect = ExtForm::zero(&ch, 3);
        expect.insert(vec![0, 1, 2], PolyScalar::one(&ch));
        assert_eq!(got, expect);
    }

    #[test]
    fn interior_basis_contraction() {
        // iota_{d_w}(dx ^ dw) = -dx
        let ch = chart4();
        let dxdw = wedge(&ExtForm::d_coord(&ch, 0), &ExtForm::d_coord(&ch, 3)).unwrap();
        let got = interior_product(&VectorField::coordinate(&ch, 3), &dxdw).unwrap();
        assert_eq!(got, ExtForm::d_coord(&ch, 0).neg());
    }

    #[test]
    fn interior_on_one_form() {
        // iota_{d_x}(dz - y dx) = -y
        let ch = chart4();
        let y = PolyScalar::var(&ch, 1);
        let mut theta = ExtForm::d_coord(&ch, 2);
        theta = theta
            .add(&ExtForm::d_coord(&ch, 0).scale_poly(&(-&y)).unwrap())
            .unwrap();
        let got = interior_product(&VectorField::coordinate(&ch, 0), &theta).unwrap();
        assert_eq!(got.coefficient(&[]), -&y);
    }

    #[test]
    fn evaluate_field_and_form() {
        let ch = Chart::new(["x", "y", "z"]).unwrap();
        let y = PolyScalar::var(&ch, 1);
        let field = VectorField::coordinate(&ch, 2).scale_poly(&y).unwrap();
        let p = RationalPoint::from_i64(ch.clone(), &[0, 3, 1]).unwrap();
        let vals = field.eval(&p).unwrap();
        let q = |n: i64| Rational::from_integer(n.into());
        assert_eq!(vals, vec![q(0), q(0), q(3)]);

        let mut theta = ExtForm::d_coord(&ch, 2);
        theta = theta
            .add(&ExtForm::d_coord(&ch, 0).scale_poly(&(-&y)).unwrap())
            .unwrap();
        let p2 = RationalPoint::from_i64(ch.clone(), &[5, 2, -1]).unwrap();
        assert_eq!(theta.eval_row(&p2).unwrap(), vec![q(-2), q(0), q(1)]);
    }

    #[test]
    fn wedge_beyond_dimension_is_zero() {
        let ch = Chart::new(["x", "y"]).unwrap();
        let dxdy = wedge(&ExtForm::d_coord(&ch, 0), &ExtForm::d_coord(&ch, 1)).unwrap();
        let over = wedge(&dxdy, &ExtForm::d_coord(&ch, 0)).unwrap();
        assert!(over.is_zero());
        assert_eq!(over.degree(), 3);
    }
}
