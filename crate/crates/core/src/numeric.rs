//! Floating-point linear algebra for the flow-integration layer: SVD-based
//! nullspaces, minimum-norm least squares, and principal angles between
//! subspaces. Everything symbolic stays exact; these helpers only serve the
//! numerical Moser-flow verification.

use nalgebra::DMatrix;

pub const RANK_TOL: f64 = 1e-9;

/// Orthonormal basis of the right nullspace of `m` (rows x cols).
pub fn nullspace(m: &DMatrix<f64>, tol: f64) -> Vec<Vec<f64>> {
    let cols = m.ncols();
    // pad to square so the thin SVD exposes every right-singular vector
    let m = if m.nrows() < cols {
        let mut padded = DMatrix::zeros(cols, cols);
        padded.view_mut((0, 0), (m.nrows(), cols)).copy_from(m);
        padded
    } else {
        m.clone()
    };
    let svd = m.svd(false, true);
    let v_t = svd.v_t.expect("svd computed with V^T");
    let smax = svd.singular_values.iter().cloned().fold(0.0_f64, f64::max);
    let thresh = tol * smax.max(1.0);
    let mut basis = Vec::new();
    for i in 0..cols {
        let s = if i < svd.singular_values.len() {
            svd.singular_values[i]
        } else {
            0.0
        };
        if s <= thresh {
            basis.push(v_t.row(i).iter().cloned().collect());
        }
    }
    basis
}

pub fn rank(m: &DMatrix<f64>, tol: f64) -> usize {
    let svd = m.clone().svd(false, false);
    let smax = svd.singular_values.iter().cloned().fold(0.0_f64, f64::max);
    let thresh = tol * smax.max(1.0);
    svd.singular_values.iter().filter(|&&s| s > thresh).count()
}

/// Minimum-norm least squares solution of `m x = b`.
pub fn min_norm_solve(m: &DMatrix<f64>, b: &[f64]) -> Vec<f64> {
    let svd = m.clone().svd(true, true);
    let b = nalgebra::DVector::from_column_slice(b);
    let x = svd.solve(&b, RANK_TOL).expect("svd solve");
    x.iter().cloned().collect()
}

pub fn from_rows(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let nrows = rows.len();
    let ncols = rows.first().map(|r| r.len()).unwrap_or(0);
    DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j])
}

pub fn from_cols(cols: &[Vec<f64>]) -> DMatrix<f64> {
    let ncols = cols.len();
    let nrows = cols.first().map(|c| c.len()).unwrap_or(0);
    DMatrix::from_fn(nrows, ncols, |i, j| cols[j][i])
}

/// Orthonormalize the columns of `m` (thin QR, dropping dependent columns).
pub fn orthonormal_cols(m: &DMatrix<f64>) -> DMatrix<f64> {
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("svd with U");
    let smax = svd.singular_values.iter().cloned().fold(0.0_f64, f64::max);
    let thresh = RANK_TOL * smax.max(1.0);
    let r = svd.singular_values.iter().filter(|&&s| s > thresh).count();
    u.columns(0, r).into_owned()
}

/// Largest principal angle (radians) between the column spans of `a` and
/// `b`. Zero when the spans coincide.
pub fn max_principal_angle(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let qa = orthonormal_cols(a);
    let qb = orthonormal_cols(b);
    if qa.ncols() != qb.ncols() {
        return std::f64::consts::FRAC_PI_2;
    }
    if qa.ncols() == 0 {
        return 0.0;
    }
    let prod = qa.transpose() * qb;
    let svd = prod.svd(false, false);
    let smin = svd
        .singular_values
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
        .clamp(-1.0, 1.0);
    smin.acos()
}

/// Gauss-elimination nullspace with partial pivoting; much faster than the
/// SVD route for the small well-conditioned systems in the flow integrator.
pub fn nullspace_gauss(rows: &[Vec<f64>], cols: usize, tol: f64) -> Vec<Vec<f64>> {
    let mut m: Vec<Vec<f64>> = rows.to_vec();
    let nrows = m.len();
    let scale = m
        .iter()
        .flat_map(|r| r.iter())
        .fold(0.0_f64, |a, &b| a.max(b.abs()))
        .max(1.0);
    let thresh = tol * scale;
    let mut pivots: Vec<usize> = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        let Some(pr) = (r..nrows)
            .filter(|&i| m[i][c].abs() > thresh)
            .max_by(|&a, &b| m[a][c].abs().total_cmp(&m[b][c].abs()))
        else {
            continue;
        };
        m.swap(r, pr);
        let inv = 1.0 / m[r][c];
        for x in m[r].iter_mut() {
            *x *= inv;
        }
        for i in 0..nrows {
            if i != r && m[i][c].abs() > 0.0 {
                let f = m[i][c];
                for j in 0..cols {
                    m[i][j] -= f * m[r][j];
                }
            }
        }
        pivots.push(c);
        r += 1;
        if r == nrows {
            break;
        }
    }
    let mut basis = Vec::new();
    for f in (0..cols).filter(|c| !pivots.contains(c)) {
        let mut v = vec![0.0; cols];
        v[f] = 1.0;
        for (ri, &p) in pivots.iter().enumerate() {
            v[p] = -m[ri][f];
        }
        basis.push(v);
    }
    basis
}

/// Solve a square system by Gauss elimination; `None` when near-singular.
pub fn solve_square(a: &[Vec<f64>], b: &[f64], tol: f64) -> Option<Vec<f64>> {
    let n = b.len();
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .zip(b)
        .map(|(row, &bi)| {
            let mut r = row.clone();
            r.push(bi);
            r
        })
        .collect();
    for c in 0..n {
        let pr = (c..n).max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs()))?;
        if m[pr][c].abs() < tol {
            return None;
        }
        m.swap(c, pr);
        let inv = 1.0 / m[c][c];
        for x in m[c].iter_mut() {
            *x *= inv;
        }
        for i in 0..n {
            if i != c {
                let f = m[i][c];
                if f != 0.0 {
                    for j in 0..=n {
                        m[i][j] -= f * m[c][j];
                    }
                }
            }
        }
    }
    Some((0..n).map(|i| m[i][n]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nullspace_of_plane() {
        let m = from_rows(&[vec![0.0, 0.0, 1.0]]);
        let ns = nullspace(&m, RANK_TOL);
        assert_eq!(ns.len(), 2);
        for v in &ns {
            assert!(v[2].abs() < 1e-12);
        }
    }

    #[test]
    fn principal_angle_basic() {
        let a = from_cols(&[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]]);
        let b = from_cols(&[vec![1.0, 1.0, 0.0], vec![1.0, -1.0, 0.0]]);
        assert!(max_principal_angle(&a, &b) < 1e-12);
        let c = from_cols(&[vec![1.0, 0.0, 0.0], vec![0.0, 0.0, 1.0]]);
        let ang = max_principal_angle(&a, &c);
        assert!((ang - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn min_norm_underdetermined() {
        let m = from_rows(&[vec![1.0, 1.0]]);
        let x = min_norm_solve(&m, &[2.0]);
        assert!((x[0] - 1.0).abs() < 1e-12 && (x[1] - 1.0).abs() < 1e-12);
    }
}
