//! Distributions as generator lists or Pfaffian systems, the derived flag
//! and growth vector, annihilators, the Cauchy characteristic distribution,
//! and exact subspace comparisons at rational points.

use crate::chart::{ChartRef, RationalPoint};
use crate::error::{Error, Result};
use crate::exterior::{exterior_derivative, lie_bracket, ExtForm, VectorField};
use crate::linalg::{self, Row, SubspaceRelation};
use crate::poly::PolyScalar;
use crate::Rational;

use num_traits::Zero;

/// A distribution presented by a (possibly redundant) generator list; all
/// verdicts about it are computed pointwise.
#[derive(Debug, Clone)]
pub struct Distribution {
    chart: ChartRef,
    generators: Vec<VectorField>,
}

impl Distribution {
    pub fn new(chart: ChartRef, generators: Vec<VectorField>) -> Result<Self> {
        if generators.is_empty() {
            return Err(Error::EmptyInput("distribution generators"));
        }
        for g in &generators {
            chart.check_same(g.chart())?;
        }
        Ok(Distribution { chart, generators })
    }

    pub fn chart(&self) -> &ChartRef {
        &self.chart
    }

    pub fn generators(&self) -> &[VectorField] {
        &self.generators
    }

    pub fn eval_rows(&self, p: &RationalPoint) -> Result<Vec<Row>> {
        self.generators.iter().map(|g| g.eval(p)).collect()
    }

    pub fn rank_at(&self, p: &RationalPoint) -> Result<usize> {
        Ok(linalg::rank(&self.eval_rows(p)?))
    }
}

/// A distribution presented dually by annihilating 1-forms.
#[derive(Debug, Clone)]
pub struct PfaffianSystem {
    chart: ChartRef,
    forms: Vec<ExtForm>,
}

impl PfaffianSystem {
    pub fn new(chart: ChartRef, forms: Vec<ExtForm>) -> Result<Self> {
        if forms.is_empty() {
            return Err(Error::EmptyInput("Pfaffian system forms"));
        }
        for f in &forms {
            chart.check_same(f.chart())?;
            if f.degree() != 1 {
                return Err(Error::BadDegree {
                    degree: f.degree(),
                    dim: chart.dim(),
                });
            }
        }
        Ok(PfaffianSystem { chart, forms })
    }

    pub fn chart(&self) -> &ChartRef {
        &self.chart
    }

    pub fn forms(&self) -> &[ExtForm] {
        &self.forms
    }

    /// Pointwise kernel (common kernel of all forms) at a rational point.
    pub fn kernel_at(&self, p: &RationalPoint) -> Result<Vec<Row>> {
        let rows: Vec<Row> = self
            .forms
            .iter()
            .map(|f| f.eval_row(p))
            .collect::<Result<_>>()?;
        Ok(linalg::nullspace(&rows, self.chart.dim()))
    }
}

/// The sequence of pointwise dimensions of the iterated bracket flag
/// D^(i+1) = D + [D, D^i] at a fixed point, stopping once stationary or at
/// full rank.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrowthVector {
    pub point: RationalPoint,
    pub ranks: Vec<usize>,
}

/// Exact rank of a set of evaluated vectors or covectors.
pub fn pointwise_rank(rows: &[Row]) -> Result<usize> {
    if rows.is_empty() {
        return Err(Error::EmptyInput("pointwise_rank"));
    }
    Ok(linalg::rank(rows))
}

/// Cumulative generator lists for D^1, D^2, ..., D^depth, bracketing the
/// generators of D with those of the previous level.
pub fn flag_generators(d: &Distribution, depth: usize) -> Result<Vec<Vec<VectorField>>> {
    let mut levels: Vec<Vec<VectorField>> = vec![d.generators().to_vec()];
    for _ in 1..depth {
        let prev = levels.last().unwrap();
        let mut next = prev.clone();
        for x in d.generators() {
            for y in prev {
                let b = lie_bracket(x, y)?;
                if !b.is_zero() {
                    next.push(b);
                }
            }
        }
        levels.push(next);
    }
    Ok(levels)
}

/// Growth vector of `d` at `p`, to at most `max_depth` levels.
pub fn derived_flag(d: &Distribution, p: &RationalPoint, max_depth: usize) -> Result<GrowthVector> {
    assert!(max_depth >= 1);
    let dim = d.chart().dim();
    let mut ranks = Vec::new();
    let mut current = d.generators().to_vec();
    loop {
        let rows: Vec<Row> = current.iter().map(|g| g.eval(p)).collect::<Result<_>>()?;
        let r = linalg::rank(&rows);
        if let Some(&last) = ranks.last() {
            if r == last {
                break;
            }
        }
        ranks.push(r);
        if r == dim || ranks.len() == max_depth {
            break;
        }
        let mut next = current.clone();
        for x in d.generators() {
            for y in &current {
                let b = lie_bracket(x, y)?;
                if !b.is_zero() {
                    next.push(b);
                }
            }
        }
        current = next;
    }
    Ok(GrowthVector {
        point: p.clone(),
        ranks,
    })
}

/// Exact nullspace basis of the generator matrix at `p`: all covectors
/// annihilating the distribution there.
pub fn annihilator_at(d: &Distribution, p: &RationalPoint) -> Result<Vec<Row>> {
    let rows = d.eval_rows(p)?;
    Ok(linalg::nullspace(&rows, d.chart().dim()))
}

/// Polynomial-coefficient annihilator via fraction-free elimination. The
/// returned forms are valid off the vanishing locus of the returned pivot
/// polynomial.
pub fn symbolic_annihilator(d: &Distribution) -> Result<(PfaffianSystem, PolyScalar)> {
    let chart = d.chart().clone();
    let rows: Vec<Vec<PolyScalar>> = d
        .generators()
        .iter()
        .map(|g| g.components().to_vec())
        .collect();
    let (basis, pivots) = linalg::symbolic_nullspace(&rows, chart.dim())?;
    if basis.is_empty() {
        return Err(Error::NoSymbolicAnnihilator);
    }
    let forms = basis
        .into_iter()
        .map(|coeffs| ExtForm::one_form(&chart, coeffs))
        .collect::<Result<Vec<_>>>()?;
    Ok((PfaffianSystem::new(chart, forms)?, pivots))
}

/// Cauchy characteristic space of a corank-1 distribution `e` at `p`:
/// vectors v in E_p whose brackets with every section of E stay in E.
///
/// The pointwise computation contracts the evaluated generator brackets with
/// the (unique up to scale) pointwise annihilator covector; the result is
/// independent of generator redundancy.
pub fn cauchy_characteristic_at(e: &Distribution, p: &RationalPoint) -> Result<Vec<Row>> {
    let dim = e.chart().dim();
    let rows = e.eval_rows(p)?;
    let rank_e = linalg::rank(&rows);
    if rank_e + 1 != dim {
        return Err(Error::NotCorankOne {
            corank: dim - rank_e,
        });
    }
    let ann = linalg::nullspace(&rows, dim);
    debug_assert_eq!(ann.len(), 1);
    let omega = &ann[0];
    let gens = e.generators();
    // M[j][i] = omega([Y_i, Y_j](p)); kernel coefficients c give v = sum c_i Y_i(p).
    let mut m: Vec<Row> = Vec::with_capacity(gens.len());
    for yj in gens {
        let mut row = Vec::with_capacity(gens.len());
        for yi in gens {
            let b = lie_bracket(yi, yj)?.eval(p)?;
            row.push(linalg::dot(omega, &b));
        }
        m.push(row);
    }
    let coeffs = linalg::nullspace(&m, gens.len());
    collect_span(&coeffs, &rows, dim)
}

/// Cauchy characteristic at `p` computed from a defining 1-form theta for E:
/// the kernel of d(theta) restricted to E_p.
pub fn cauchy_characteristic_from_theta(theta: &ExtForm, p: &RationalPoint) -> Result<Vec<Row>> {
    let chart = theta.chart().clone();
    let dim = chart.dim();
    let theta_row = theta.eval_row(p)?;
    if theta_row.iter().all(|c| c.is_zero()) {
        return Err(Error::NotCorankOne { corank: 0 });
    }
    let e_basis = linalg::nullspace(&[theta_row], dim);
    let dtheta = exterior_derivative(theta);
    let a = two_form_matrix(&dtheta, p)?;
    // v = sum c_a e_a with dtheta(v, e_b) = 0 for all b.
    let mut m: Vec<Row> = Vec::new();
    for eb in &e_basis {
        let mut row = Vec::new();
        for ea in &e_basis {
            row.push(bilinear(&a, ea, eb));
        }
        m.push(row);
    }
    let coeffs = linalg::nullspace(&m, e_basis.len());
    collect_span(&coeffs, &e_basis, dim)
}

/// Antisymmetric matrix of a 2-form evaluated at a point.
pub fn two_form_matrix(form: &ExtForm, p: &RationalPoint) -> Result<Vec<Row>> {
    let dim = form.chart().dim();
    let val = form.eval(p)?;
    let mut a = vec![vec![Rational::zero(); dim]; dim];
    for (idx, c) in &val.components {
        let (i, j) = (idx[0], idx[1]);
        a[i][j] = c.clone();
        a[j][i] = -c.clone();
    }
    Ok(a)
}

pub fn bilinear(a: &[Row], x: &[Rational], y: &[Rational]) -> Rational {
    let mut acc = Rational::zero();
    for (i, xi) in x.iter().enumerate() {
        if xi.is_zero() {
            continue;
        }
        for (j, yj) in y.iter().enumerate() {
            acc += xi * &a[i][j] * yj;
        }
    }
    acc
}

/// Map coefficient vectors through a basis and keep an independent spanning
/// set.
pub(crate) fn collect_span(coeffs: &[Row], basis: &[Row], dim: usize) -> Result<Vec<Row>> {
    let mut out: Vec<Row> = Vec::new();
    for c in coeffs {
        let mut v = vec![Rational::zero(); dim];
        for (ci, b) in c.iter().zip(basis) {
            for (vi, bi) in v.iter_mut().zip(b) {
                *vi += ci * bi;
            }
        }
        if v.iter().any(|x| !x.is_zero()) {
            let mut test = out.clone();
            test.push(v.clone());
            if linalg::rank(&test) > out.len() {
                out.push(v);
            }
        }
    }
    Ok(out)
}

/// Exact comparison of two evaluated subspaces.
pub fn subspace_compare(a: &[Row], b: &[Row]) -> SubspaceRelation {
    linalg::subspace_compare(a, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::Chart;

    fn q(n: i64) -> Rational {
        Rational::from_integer(n.into())
    }

    fn engel_standard() -> (ChartRef, Distribution) {
        // D = <d_w, d_x + y d_z + w d_y> on R^4 (x, y, z, w)
        let ch = Chart::new(["x", "y", "z", "w"]).unwrap();
        let y = PolyScalar::var(&ch, 1);
        let w = PolyScalar::var(&ch, 3);
        let dw = VectorField::coordinate(&ch, 3);
        let z = VectorField::new(
            ch.clone(),
            vec![PolyScalar::one(&ch), w, y, PolyScalar::zero(&ch)],
        )
        .unwrap();
        let d = Distribution::new(ch.clone(), vec![dw, z]).unwrap();
        (ch, d)
    }

    #[test]
    fn engel_growth_vector() {
        let (ch, d) = engel_standard();
        let origin = RationalPoint::origin(ch);
        let gv = derived_flag(&d, &origin, 5).unwrap();
        assert_eq!(gv.ranks, vec![2, 3, 4]);
    }

    #[test]
    fn integrable_flag_is_stationary() {
        let ch = Chart::new(["x", "y", "z"]).unwrap();
        let d = Distribution::new(
            ch.clone(),
            vec![
                VectorField::coordinate(&ch, 0),
                VectorField::coordinate(&ch, 1),
            ],
        )
        .unwrap();
        let gv = derived_flag(&d, &RationalPoint::origin(ch), 6).unwrap();
        assert_eq!(gv.ranks, vec![2]);
    }

    #[test]
    fn redundant_generators_rank() {
        let ch = Chart::new(["x", "y"]).unwrap();
        let dx = VectorField::coordinate(&ch, 0);
        let two_dx = dx.scale_poly(&PolyScalar::from_i64(&ch, 2)).unwrap();
        let d = Distribution::new(ch.clone(), vec![dx, two_dx]).unwrap();
        assert_eq!(d.rank_at(&RationalPoint::origin(ch)).unwrap(), 1);
    }

    #[test]
    fn annihilator_of_line_field() {
        // D = <d_x + y d_z> on R^3: annihilator span{dy, dz - y dx}
        let ch = Chart::new(["x", "y", "z"]).unwrap();
        let y = PolyScalar::var(&ch, 1);
        let g = VectorField::new(
            ch.clone(),
            vec![PolyScalar::one(&ch), PolyScalar::zero(&ch), y],
        )
        .unwrap();
        let d = Distribution::new(ch.clone(), vec![g]).unwrap();
        let p = RationalPoint::from_i64(ch.clone(), &[1, 2, 3]).unwrap();
        let ann = annihilator_at(&d, &p).unwrap();
        assert_eq!(ann.len(), 2);
        // dy and dz - y dx (at y=2) must lie in the computed span
        assert!(linalg::vector_in_span(&[q(0), q(1), q(0)], &ann));
        assert!(linalg::vector_in_span(&[q(-2), q(0), q(1)], &ann));
    }

    #[test]
    fn cauchy_of_integrable_corank_one() {
        // E = ker dz on R^3 has d(theta) = 0, so L = E.
        let ch = Chart::new(["x", "y", "z"]).unwrap();
        let e = Distribution::new(
            ch.clone(),
            vec![
                VectorField::coordinate(&ch, 0),
                VectorField::coordinate(&ch, 1),
            ],
        )
        .unwrap();
        let p = RationalPoint::from_i64(ch.clone(), &[1, -2, 0]).unwrap();
        let l = cauchy_characteristic_at(&e, &p).unwrap();
        assert_eq!(l.len(), 2);
    }

    #[test]
    fn cauchy_theta_route_matches_bracket_route() {
        // E = ker(dz - y dx) on R^4; L should be <d_w> plus nothing else.
        let ch = Chart::new(["x", "y", "z", "w"]).unwrap();
        let y = PolyScalar::var(&ch, 1);
        let mut theta = ExtForm::d_coord(&ch, 2);
        theta = theta
            .add(&ExtForm::d_coord(&ch, 0).scale_poly(&(-&y)).unwrap())
            .unwrap();
        let p = RationalPoint::from_i64(ch.clone(), &[1, 2, 0, -1]).unwrap();
        let l_theta = cauchy_characteristic_from_theta(&theta, &p).unwrap();
        assert_eq!(l_theta.len(), 1);
        assert!(linalg::vector_in_span(&[q(0), q(0), q(0), q(1)], &l_theta));

        // Same E by generators.
        let e = Distribution::new(
            ch.clone(),
            vec![
                VectorField::coordinate(&ch, 3),
                VectorField::coordinate(&ch, 1),
                VectorField::new(
                    ch.clone(),
                    vec![
                        PolyScalar::one(&ch),
                        PolyScalar::zero(&ch),
                        PolyScalar::var(&ch, 1),
                        PolyScalar::zero(&ch),
                    ],
                )
                .unwrap(),
            ],
        )
        .unwrap();
        let l_gen = cauchy_characteristic_at(&e, &p).unwrap();
        assert_eq!(
            subspace_compare(&l_theta, &l_gen),
            SubspaceRelation::Equal
        );
    }

    #[test]
    fn symbolic_annihilator_of_contact_kernel() {
        // span{d_w, d_y, d_x + y d_z} annihilated by a multiple of dz - y dx.
        let ch = Chart::new(["x", "y", "z", "w"]).unwrap();
        let e = Distribution::new(
            ch.clone(),
            vec![
                VectorField::coordinate(&ch, 3),
                VectorField::coordinate(&ch, 1),
                VectorField::new(
                    ch.clone(),
                    vec![
                        PolyScalar::one(&ch),
                        PolyScalar::zero(&ch),
                        PolyScalar::var(&ch, 1),
                        PolyScalar::zero(&ch),
                    ],
                )
                .unwrap(),
            ],
        )
        .unwrap();
        let (sys, _pivots) = symbolic_annihilator(&e).unwrap();
        assert_eq!(sys.forms().len(), 1);
        // At a sample point the form must annihilate the generators.
        let p = RationalPoint::from_i64(ch.clone(), &[2, -1, 1, 3]).unwrap();
        let row = sys.forms()[0].eval_row(&p).unwrap();
        for g in e.generators() {
            assert!(linalg::dot(&row, &g.eval(&p).unwrap()).is_zero());
        }
        assert!(row.iter().any(|c| !c.is_zero()));
    }
}
