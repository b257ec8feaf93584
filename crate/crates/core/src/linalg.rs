//! Exact linear algebra over the rationals: Gaussian elimination, rank,
//! nullspace, affine solves with a minimum-norm tie-break, subspace
//! comparison and intersection. Also fraction-free (Bareiss-style)
//! elimination over the polynomial ring for symbolic annihilators.

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::poly::PolyScalar;
use crate::Rational;

pub type Row = Vec<Rational>;

/// Reduced row echelon form in place; returns pivot column indices.
pub fn rref(m: &mut Vec<Row>) -> Vec<usize> {
    let rows = m.len();
    if rows == 0 {
        return vec![];
    }
    let cols = m[0].len();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        let Some(pr) = (r..rows).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(r, pr);
        let inv = m[r][c].recip();
        for x in m[r].iter_mut() {
            *x *= &inv;
        }
        for i in 0..rows {
            if i != r && !m[i][c].is_zero() {
                let f = m[i][c].clone();
                for j in 0..cols {
                    let s = &m[r][j] * &f;
                    m[i][j] -= s;
                }
            }
        }
        pivots.push(c);
        r += 1;
        if r == rows {
            break;
        }
    }
    pivots
}

pub fn rank(rows: &[Row]) -> usize {
    let mut m: Vec<Row> = rows.to_vec();
    rref(&mut m).len()
}

/// Right nullspace of the row-matrix `m`: basis of {x : m x = 0}.
pub fn nullspace(rows: &[Row], cols: usize) -> Vec<Row> {
    let mut m: Vec<Row> = rows.to_vec();
    let pivots = rref(&mut m);
    let mut free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
    free.sort();
    let mut basis = Vec::new();
    for &f in &free {
        let mut v = vec![Rational::zero(); cols];
        v[f] = Rational::one();
        for (r, &p) in pivots.iter().enumerate() {
            v[p] = -m[r][f].clone();
        }
        basis.push(v);
    }
    basis
}

/// Solve `m x = b` over the rationals. Returns a particular solution and a
/// basis of the homogeneous solution space, or `None` if inconsistent.
pub fn solve_affine(rows: &[Row], b: &[Rational], cols: usize) -> Option<(Row, Vec<Row>)> {
    let mut aug: Vec<Row> = rows
        .iter()
        .zip(b)
        .map(|(r, bi)| {
            let mut row = r.clone();
            row.push(bi.clone());
            row
        })
        .collect();
    let pivots = rref(&mut aug);
    if pivots.contains(&cols) {
        return None; // pivot in the augmented column
    }
    let mut x = vec![Rational::zero(); cols];
    for (r, &p) in pivots.iter().enumerate() {
        x[p] = aug[r][cols].clone();
    }
    let hom_rows: Vec<Row> = aug.iter().map(|r| r[..cols].to_vec()).collect();
    Some((x, nullspace(&hom_rows, cols)))
}

pub fn dot(a: &[Rational], b: &[Rational]) -> Rational {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm_sq(a: &[Rational]) -> Rational {
    dot(a, a)
}

/// Minimum-Euclidean-norm element of the affine set { x0 + sum mu_a d_a }.
/// Exact: solves the Gram normal equations over the rationals.
pub fn min_norm_in_affine(x0: &[Rational], dirs: &[Row]) -> Row {
    // Reduce to independent directions first.
    let mut indep: Vec<Row> = Vec::new();
    for d in dirs {
        let mut test = indep.clone();
        test.push(d.clone());
        if rank(&test) > indep.len() {
            indep.push(d.clone());
        }
    }
    if indep.is_empty() {
        return x0.to_vec();
    }
    let k = indep.len();
    let gram: Vec<Row> = (0..k)
        .map(|i| (0..k).map(|j| dot(&indep[i], &indep[j])).collect())
        .collect();
    let rhs: Vec<Rational> = (0..k).map(|i| -dot(&indep[i], x0)).collect();
    let (mu, _) = solve_affine(&gram, &rhs, k).expect("Gram system is nonsingular");
    let mut x = x0.to_vec();
    for (a, d) in mu.iter().zip(&indep) {
        for (xi, di) in x.iter_mut().zip(d) {
            *xi += a * di;
        }
    }
    x
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SubspaceRelation {
    Equal,
    ASubsetB,
    BSubsetA,
    Incomparable,
}

/// Exact comparison of span(A) and span(B) via rank tests of stacked
/// matrices.
pub fn subspace_compare(a: &[Row], b: &[Row]) -> SubspaceRelation {
    let ra = rank(a);
    let rb = rank(b);
    let mut stacked: Vec<Row> = a.to_vec();
    stacked.extend_from_slice(b);
    let rs = rank(&stacked);
    let a_in_b = rs == rb;
    let b_in_a = rs == ra;
    match (a_in_b, b_in_a) {
        (true, true) => SubspaceRelation::Equal,
        (true, false) => SubspaceRelation::ASubsetB,
        (false, true) => SubspaceRelation::BSubsetA,
        (false, false) => SubspaceRelation::Incomparable,
    }
}

pub fn vector_in_span(v: &[Rational], basis: &[Row]) -> bool {
    let r = rank(basis);
    let mut stacked = basis.to_vec();
    stacked.push(v.to_vec());
    rank(&stacked) == r
}

/// Intersection of span(A) and span(B), exact.
pub fn subspace_intersection(a: &[Row], b: &[Row], dim: usize) -> Vec<Row> {
    if a.is_empty() || b.is_empty() {
        return vec![];
    }
    // Columns of [A^T | -B^T]; kernel elements (x, y) satisfy A^T x = B^T y.
    let cols = a.len() + b.len();
    let rows: Vec<Row> = (0..dim)
        .map(|d| {
            let mut row: Row = a.iter().map(|v| v[d].clone()).collect();
            row.extend(b.iter().map(|v| -v[d].clone()));
            row
        })
        .collect();
    let kernel = nullspace(&rows, cols);
    let mut result: Vec<Row> = Vec::new();
    for k in kernel {
        let mut v = vec![Rational::zero(); dim];
        for (coef, base) in k[..a.len()].iter().zip(a) {
            for (vi, bi) in v.iter_mut().zip(base) {
                *vi += coef * bi;
            }
        }
        if v.iter().any(|x| !x.is_zero()) {
            let mut test = result.clone();
            test.push(v.clone());
            if rank(&test) > result.len() {
                result.push(v);
            }
        }
    }
    result
}

/// Fraction-free elimination over the polynomial ring. Returns a basis of
/// polynomial-coefficient kernel vectors of {x : m x = 0} valid off the
/// vanishing locus of the pivots, together with the pivot product.
pub fn symbolic_nullspace(
    rows: &[Vec<PolyScalar>],
    cols: usize,
) -> Result<(Vec<Vec<PolyScalar>>, PolyScalar)> {
    let first = rows.first().ok_or(Error::EmptyInput("symbolic_nullspace"))?;
    let chart = first[0].chart().clone();
    let mut m: Vec<Vec<PolyScalar>> = rows.to_vec();
    let nrows = m.len();
    let mut pivots: Vec<usize> = Vec::new();
    let mut pivot_product = PolyScalar::one(&chart);
    let mut r = 0;
    for c in 0..cols {
        // Prefer a constant nonzero pivot to keep degrees down.
        let cand = (r..nrows)
            .filter(|&i| !m[i][c].is_zero())
            .min_by_key(|&i| m[i][c].total_degree());
        let Some(pr) = cand else { continue };
        m.swap(r, pr);
        let pivot = m[r][c].clone();
        pivot_product = pivot_product.checked_mul(&pivot)?;
        for i in 0..nrows {
            if i == r || m[i][c].is_zero() {
                continue;
            }
            let factor = m[i][c].clone();
            for j in 0..cols {
                let a = m[i][j].checked_mul(&pivot)?;
                let b = m[r][j].checked_mul(&factor)?;
                m[i][j] = &a - &b;
            }
        }
        pivots.push(c);
        r += 1;
        if r == nrows {
            break;
        }
    }
    // Back-substitute free columns; entries stay polynomial by clearing
    // denominators with pivot products.
    let free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
    let mut basis = Vec::new();
    for &f in &free {
        let mut v: Vec<PolyScalar> = (0..cols).map(|_| PolyScalar::zero(&chart)).collect();
        // v[f] = prod of pivots, v[p_r] = -m[r][f] * (prod of other pivots)
        let pivot_vals: Vec<PolyScalar> = pivots.iter().enumerate().map(|(r, &p)| m[r][p].clone()).collect();
        let mut all = PolyScalar::one(&chart);
        for pv in &pivot_vals {
            all = all.checked_mul(pv)?;
        }
        v[f] = all;
        for (r, &p) in pivots.iter().enumerate() {
            let mut others = PolyScalar::one(&chart);
            for (s, pv) in pivot_vals.iter().enumerate() {
                if s != r {
                    others = others.checked_mul(pv)?;
                }
            }
            v[p] = -&m[r][f].checked_mul(&others)?;
        }
        reduce_common_monomial(&mut v)?;
        basis.push(v);
    }
    Ok((basis, pivot_product))
}

/// Divide every component of a polynomial vector by the largest monomial
/// dividing all of its terms. Fraction-free elimination multiplies kernel
/// vectors by pivot factors; stripping a common monomial removes spurious
/// vanishing on the pivot locus without changing the span.
fn reduce_common_monomial(v: &mut [PolyScalar]) -> Result<()> {
    let mut min_exps: Option<Vec<u32>> = None;
    for c in v.iter().filter(|c| !c.is_zero()) {
        for (exps, _) in c.terms() {
            match &mut min_exps {
                None => min_exps = Some(exps.clone()),
                Some(m) => {
                    for (mi, e) in m.iter_mut().zip(exps) {
                        *mi = (*mi).min(*e);
                    }
                }
            }
        }
    }
    let Some(m) = min_exps else { return Ok(()) };
    if m.iter().all(|&e| e == 0) {
        return Ok(());
    }
    for c in v.iter_mut() {
        if c.is_zero() {
            continue;
        }
        let chart = c.chart().clone();
        let mut out = PolyScalar::zero(&chart);
        for (exps, coeff) in c.terms() {
            let reduced: Vec<u32> = exps.iter().zip(&m).map(|(e, mi)| e - mi).collect();
            out = out.checked_add(&PolyScalar::monomial(&chart, reduced, coeff.clone())?)?;
        }
        *c = out;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64) -> Rational {
        Rational::from_integer(n.into())
    }
    fn row(v: &[i64]) -> Row {
        v.iter().map(|&x| q(x)).collect()
    }

    #[test]
    fn rank_and_nullspace() {
        let m = vec![row(&[1, 2, 3]), row(&[2, 4, 6]), row(&[0, 1, 1])];
        assert_eq!(rank(&m), 2);
        let ns = nullspace(&m, 3);
        assert_eq!(ns.len(), 1);
        for r in &m {
            assert!(dot(r, &ns[0]).is_zero());
        }
    }

    #[test]
    fn affine_solve_min_norm() {
        // x + y = 2 has min-norm solution (1, 1)
        let m = vec![row(&[1, 1])];
        let (x0, hom) = solve_affine(&m, &[q(2)], 2).unwrap();
        let x = min_norm_in_affine(&x0, &hom);
        assert_eq!(x, row(&[1, 1]));
    }

    #[test]
    fn inconsistent_system() {
        let m = vec![row(&[1, 1]), row(&[1, 1])];
        assert!(solve_affine(&m, &[q(1), q(2)], 2).is_none());
    }

    #[test]
    fn compare_subspaces() {
        let a = vec![row(&[1, 0, 0])];
        let b = vec![row(&[1, 0, 0]), row(&[0, 1, 0])];
        assert_eq!(subspace_compare(&a, &b), SubspaceRelation::ASubsetB);
        assert_eq!(subspace_compare(&b, &a), SubspaceRelation::BSubsetA);
        assert_eq!(subspace_compare(&a, &a), SubspaceRelation::Equal);
        let c = vec![row(&[0, 0, 1])];
        assert_eq!(subspace_compare(&a, &c), SubspaceRelation::Incomparable);
    }

    #[test]
    fn intersection() {
        let a = vec![row(&[1, 0, 0]), row(&[0, 1, 0])];
        let b = vec![row(&[0, 1, 0]), row(&[0, 0, 1])];
        let i = subspace_intersection(&a, &b, 3);
        assert_eq!(i.len(), 1);
        assert!(vector_in_span(&row(&[0, 1, 0]), &i));
    }
}
