//! One-parameter families of corank-(k+1) structures and their stability:
//! exact Moser vector fields at rational points, kernel distributions of the
//! defining 2-forms, and a floating-point flow integrator that checks the
//! induced diffeomorphisms really carry the distributions onto each other.
//!
//! Families are polynomial in the parameter: every coefficient lives on the
//! spatial chart extended by a reserved coordinate `t`, and the forms carry
//! no dt component. Instantiating at rational t and differentiating in t are
//! therefore exact operations.

use nalgebra::DMatrix;
use num_traits::Zero;

use crate::chart::{ChartRef, RationalPoint};
use crate::distribution::{
    bilinear, cauchy_characteristic_from_theta, collect_span, two_form_matrix,
};
use crate::error::{Error, Result};
use crate::exterior::{exterior_derivative, ExtForm};
use crate::linalg::{self, Row};
use crate::numeric;
use crate::poly::PolyScalar;
use crate::Rational;

pub const T_NAME: &str = "t";

/// A family theta_t, omega^1_t ... omega^k_t of 1-forms with polynomial
/// dependence on the parameter.
#[derive(Debug, Clone)]
pub struct OneParamFamily {
    chart: ChartRef,
    ext_chart: ChartRef,
    t_index: usize,
    theta: ExtForm,
    omegas: Vec<ExtForm>,
}

impl OneParamFamily {
    /// The chart on which family coefficients live: spatial coordinates plus
    /// the parameter as the final coordinate.
    pub fn parameter_chart(chart: &ChartRef) -> Result<ChartRef> {
        chart.extend(T_NAME)
    }

    pub fn new(chart: ChartRef, theta: ExtForm, omegas: Vec<ExtForm>) -> Result<Self> {
        let ext_chart = Self::parameter_chart(&chart)?;
        let t_index = chart.dim();
        for f in std::iter::once(&theta).chain(&omegas) {
            ext_chart.check_same(f.chart())?;
            if f.degree() != 1 {
                return Err(Error::BadDegree {
                    degree: f.degree(),
                    dim: chart.dim(),
                });
            }
            if !f.coefficient(&[t_index]).is_zero() {
                return Err(Error::Input(
                    "family forms must have no component along the parameter".into(),
                ));
            }
        }
        Ok(OneParamFamily {
            chart,
            ext_chart,
            t_index,
            theta,
            omegas,
        })
    }

    pub fn chart(&self) -> &ChartRef {
        &self.chart
    }

    pub fn ext_chart(&self) -> &ChartRef {
        &self.ext_chart
    }

    pub fn t_index(&self) -> usize {
        self.t_index
    }

    pub fn theta(&self) -> &ExtForm {
        &self.theta
    }

    pub fn omegas(&self) -> &[ExtForm] {
        &self.omegas
    }

    pub fn k(&self) -> usize {
        self.omegas.len()
    }

    fn instantiate(&self, form: &ExtForm, t: &Rational) -> Result<ExtForm> {
        let mut out = ExtForm::zero(&self.chart, form.degree());
        for (idx, coeff) in form.terms() {
            let c = coeff.substitute(self.t_index, t).project_out(self.t_index, &self.chart)?;
            if !c.is_zero() {
                out.insert(idx.clone(), c);
            }
        }
        Ok(out)
    }

    /// theta at a fixed parameter value, as a form on the spatial chart.
    pub fn theta_at(&self, t: &Rational) -> Result<ExtForm> {
        self.instantiate(&self.theta, t)
    }

    pub fn omega_at(&self, i: usize, t: &Rational) -> Result<ExtForm> {
        self.instantiate(&self.omegas[i], t)
    }

    pub fn omegas_at(&self, t: &Rational) -> Result<Vec<ExtForm>> {
        (0..self.k()).map(|i| self.omega_at(i, t)).collect()
    }

    /// Parameter derivative of a family form (still on the extended chart).
    fn dt(&self, form: &ExtForm) -> ExtForm {
        form.map_coeffs(|c| c.partial(self.t_index))
    }

    pub fn dt_theta_at(&self, t: &Rational) -> Result<ExtForm> {
        self.instantiate(&self.dt(&self.theta), t)
    }

    pub fn dt_omega_at(&self, i: usize, t: &Rational) -> Result<ExtForm> {
        self.instantiate(&self.dt(&self.omegas[i]), t)
    }

    pub fn theta_is_constant(&self) -> bool {
        self.theta.terms().all(|(_, c)| !c.depends_on(self.t_index))
    }

    /// Pointwise kernel of the instantiated system at (t, p).
    pub fn d_basis_at(&self, t: &Rational, p: &RationalPoint) -> Result<Vec<Row>> {
        let dim = self.chart.dim();
        let mut rows = vec![self.theta_at(t)?.eval_row(p)?];
        for i in 0..self.k() {
            rows.push(self.omega_at(i, t)?.eval_row(p)?);
        }
        if linalg::rank(&rows) != self.k() + 1 {
            return Err(Error::HypothesisViolation(
                "instantiated forms are dependent at the sample point".into(),
            ));
        }
        Ok(linalg::nullspace(&rows, dim))
    }
}

/// Pointwise bases of the kernel distributions attached to a family at a
/// fixed (t, p): K^i = ker d(omega^i)|_D, their intersection W, and the
/// partial intersections J^i within the Cauchy characteristic space L.
#[derive(Debug, Clone)]
pub struct KernelReport {
    pub t: Rational,
    pub point: RationalPoint,
    pub d: Vec<Row>,
    pub l: Vec<Row>,
    pub k: Vec<Vec<Row>>,
    pub w: Vec<Row>,
    pub j: Vec<Vec<Row>>,
}

impl KernelReport {
    pub fn rank_w(&self) -> usize {
        self.w.len()
    }

    pub fn rank_j(&self) -> Vec<usize> {
        self.j.iter().map(|b| b.len()).collect()
    }
}

pub fn kernel_distributions(
    fam: &OneParamFamily,
    t: &Rational,
    p: &RationalPoint,
) -> Result<KernelReport> {
    if fam.k() == 0 {
        return Err(Error::EmptyInput("kernel_distributions needs omegas"));
    }
    let dim = fam.chart().dim();
    let d = fam.d_basis_at(t, p)?;
    let theta_t = fam.theta_at(t)?;
    let l = cauchy_characteristic_from_theta(&theta_t, p)?;
    let mut ks: Vec<Vec<Row>> = Vec::with_capacity(fam.k());
    for i in 0..fam.k() {
        let domega = exterior_derivative(&fam.omega_at(i, t)?);
        let a = two_form_matrix(&domega, p)?;
        // coefficients c with d(omega)(sum c_a d_a, d_b) = 0 for all b
        let m: Vec<Row> = d
            .iter()
            .map(|db| d.iter().map(|da| bilinear(&a, da, db)).collect())
            .collect();
        let coeffs = linalg::nullspace(&m, d.len());
        ks.push(collect_span(&coeffs, &d, dim)?);
    }
    let mut w = ks[0].clone();
    for ki in &ks[1..] {
        w = linalg::subspace_intersection(&w, ki, dim);
        if w.is_empty() {
            break;
        }
    }
    // J^i = L intersected with all K^j except K^i; for a single omega this
    // degenerates to L itself.
    let mut js: Vec<Vec<Row>> = Vec::with_capacity(fam.k());
    for i in 0..fam.k() {
        let mut ji = l.clone();
        for (jdx, kj) in ks.iter().enumerate() {
            if jdx != i && !ji.is_empty() {
                ji = linalg::subspace_intersection(&ji, kj, dim);
            }
        }
        js.push(ji);
    }
    Ok(KernelReport {
        t: t.clone(),
        point: p.clone(),
        d,
        l,
        k: ks,
        w,
        j: js,
    })
}

/// The exact Moser vector field value at one (t, p), with certificates: the
/// defining equations hold exactly after substitution and the value lies in
/// the required subspace.
#[derive(Debug, Clone)]
pub struct MoserSolveResult {
    pub t: Rational,
    pub point: RationalPoint,
    pub x: Row,
    pub residual_zero: bool,
    pub constraint_ok: bool,
}

/// Solve i_X d(omega^i_t)|_D + (d/dt omega^i_t)|_D = 0 for X in the Cauchy
/// characteristic space L of ker theta_t, taking the minimum-norm solution
/// when the system is underdetermined.
pub fn moser_field_at(
    fam: &OneParamFamily,
    t: &Rational,
    p: &RationalPoint,
) -> Result<MoserSolveResult> {
    if fam.k() == 0 {
        return Err(Error::EmptyInput("moser_field_at needs omegas"));
    }
    let dim = fam.chart().dim();
    let d = fam.d_basis_at(t, p)?;
    let theta_t = fam.theta_at(t)?;
    let l = cauchy_characteristic_from_theta(&theta_t, p)?;
    if l.is_empty() {
        return Err(Error::HypothesisViolation(
            "Cauchy characteristic space is trivial at the sample point".into(),
        ));
    }
    let mut sys: Vec<Row> = Vec::new();
    let mut rhs: Vec<Rational> = Vec::new();
    let mut two_forms: Vec<Vec<Row>> = Vec::new();
    let mut dt_rows: Vec<Row> = Vec::new();
    for i in 0..fam.k() {
        let a = two_form_matrix(&exterior_derivative(&fam.omega_at(i, t)?), p)?;
        let dt_row = fam.dt_omega_at(i, t)?.eval_row(p)?;
        for db in &d {
            let row: Row = l.iter().map(|la| bilinear(&a, la, db)).collect();
            sys.push(row);
            rhs.push(-linalg::dot(&dt_row, db));
        }
        two_forms.push(a);
        dt_rows.push(dt_row);
    }
    let Some((c0, hom)) = linalg::solve_affine(&sys, &rhs, l.len()) else {
        return Err(Error::HypothesisViolation(
            "Moser system has no solution in the Cauchy characteristic space".into(),
        ));
    };
    let expand = |c: &Row| -> Row {
        let mut v = vec![Rational::zero(); dim];
        for (ci, la) in c.iter().zip(&l) {
            for (vi, li) in v.iter_mut().zip(la) {
                *vi += ci * li;
            }
        }
        v
    };
    let x0 = expand(&c0);
    let dirs: Vec<Row> = hom.iter().map(&expand).collect();
    let x = linalg::min_norm_in_affine(&x0, &dirs);
    let mut residual_zero = true;
    for (i, a) in two_forms.iter().enumerate() {
        for db in &d {
            let r = bilinear(a, &x, db) + linalg::dot(&dt_rows[i], db);
            if !r.is_zero() {
                residual_zero = false;
            }
        }
    }
    let constraint_ok = linalg::vector_in_span(&x, &l);
    Ok(MoserSolveResult {
        t: t.clone(),
        point: p.clone(),
        x,
        residual_zero,
        constraint_ok,
    })
}

/// Stage-one solve for an even-contact family: the unique X in the Euclidean
/// orthocomplement V of L inside E_t with i_X d(theta_t)|_V = -(d/dt theta_t)|_V.
///
/// Requires the Cauchy characteristic space to be the same at every
/// parameter value (checked at several t); families violating this are
/// rejected rather than silently mis-normalized.
pub fn even_contact_moser_field_at(
    fam: &OneParamFamily,
    t: &Rational,
    p: &RationalPoint,
) -> Result<MoserSolveResult> {
    let dim = fam.chart().dim();
    let l_at = |tv: &Rational| -> Result<Vec<Row>> {
        cauchy_characteristic_from_theta(&fam.theta_at(tv)?, p)
    };
    let l = l_at(t)?;
    for tv in [
        Rational::zero(),
        Rational::new(1.into(), 2.into()),
        Rational::from_integer(1.into()),
    ] {
        let other = l_at(&tv)?;
        if linalg::subspace_compare(&l, &other) != linalg::SubspaceRelation::Equal {
            return Err(Error::HypothesisViolation(
                "Cauchy characteristic space varies with the parameter".into(),
            ));
        }
    }
    let theta_t = fam.theta_at(t)?;
    let theta_row = theta_t.eval_row(p)?;
    // V = vectors of E_t orthogonal to every L generator
    let mut constraints = vec![theta_row];
    constraints.extend(l.iter().cloned());
    let v = linalg::nullspace(&constraints, dim);
    let a = two_form_matrix(&exterior_derivative(&theta_t), p)?;
    let dt_row = fam.dt_theta_at(t)?.eval_row(p)?;
    let m: Vec<Row> = v
        .iter()
        .map(|vb| v.iter().map(|va| bilinear(&a, va, vb)).collect())
        .collect();
    let rhs: Vec<Rational> = v.iter().map(|vb| -linalg::dot(&dt_row, vb)).collect();
    let Some((c, hom)) = linalg::solve_affine(&m, &rhs, v.len()) else {
        return Err(Error::HypothesisViolation(
            "even-contact normalization system is inconsistent".into(),
        ));
    };
    if !hom.is_empty() {
        return Err(Error::HypothesisViolation(
            "d(theta) is degenerate on the orthocomplement of L".into(),
        ));
    }
    let mut x = vec![Rational::zero(); dim];
    for (ci, va) in c.iter().zip(&v) {
        for (xi, vi) in x.iter_mut().zip(va) {
            *xi += ci * vi;
        }
    }
    let mut residual_zero = true;
    for vb in &v {
        if !(bilinear(&a, &x, vb) + linalg::dot(&dt_row, vb)).is_zero() {
            residual_zero = false;
        }
    }
    let constraint_ok = linalg::vector_in_span(&x, &v) || x.iter().all(|c| c.is_zero());
    Ok(MoserSolveResult {
        t: t.clone(),
        point: p.clone(),
        x,
        residual_zero,
        constraint_ok,
    })
}

// ---------------------------------------------------------------------------
// floating-point layer
// ---------------------------------------------------------------------------

const F_TOL: f64 = 1e-9;

/// Precomputed coefficient polynomials for fast evaluation along a flow.
struct NumericFamily {
    dim: usize,
    theta_row: Vec<PolyScalar>,
    omega_rows: Vec<Vec<PolyScalar>>,
    dtheta: Vec<(usize, usize, PolyScalar)>,
    domega: Vec<Vec<(usize, usize, PolyScalar)>>,
    dt_theta: Vec<PolyScalar>,
    dt_omega: Vec<Vec<PolyScalar>>,
}

fn spatial_d(row: &[PolyScalar], dim: usize) -> Vec<(usize, usize, PolyScalar)> {
    let mut terms = Vec::new();
    for i in 0..dim {
        for j in (i + 1)..dim {
            let c = &row[j].partial(i) - &row[i].partial(j);
            if !c.is_zero() {
                terms.push((i, j, c));
            }
        }
    }
    terms
}

impl NumericFamily {
    fn new(fam: &OneParamFamily) -> Result<Self> {
        let dim = fam.chart().dim();
        let t_index = fam.t_index();
        let theta_row = fam.theta.coefficient_row()?;
        let omega_rows: Vec<Vec<PolyScalar>> = fam
            .omegas
            .iter()
            .map(|w| w.coefficient_row())
            .collect::<Result<_>>()?;
        let dtheta = spatial_d(&theta_row, dim);
        let domega = omega_rows.iter().map(|r| spatial_d(r, dim)).collect();
        let dt_theta = theta_row.iter().map(|c| c.partial(t_index)).collect();
        let dt_omega = omega_rows
            .iter()
            .map(|r| r.iter().map(|c| c.partial(t_index)).collect())
            .collect();
        Ok(NumericFamily {
            dim,
            theta_row,
            omega_rows,
            dtheta,
            domega,
            dt_theta,
            dt_omega,
        })
    }

    fn row(&self, polys: &[PolyScalar], coords: &[f64]) -> Vec<f64> {
        polys[..self.dim].iter().map(|c| c.eval_f64(coords)).collect()
    }

    fn two_form(&self, terms: &[(usize, usize, PolyScalar)], coords: &[f64]) -> Vec<Vec<f64>> {
        let mut a = vec![vec![0.0; self.dim]; self.dim];
        for (i, j, c) in terms {
            let v = c.eval_f64(coords);
            a[*i][*j] = v;
            a[*j][*i] = -v;
        }
        a
    }

    /// Pointwise D, E, L bases (as column lists) of the instantaneous
    /// structure; used both for the flow right-hand sides and the angle
    /// checks along trajectories.
    fn bases(&self, t: f64, p: &[f64]) -> Option<(Vec<Vec<f64>>, Vec<Vec<f64>>, Vec<Vec<f64>>)> {
        let coords = ext_coords(p, t);
        let th = self.row(&self.theta_row, &coords);
        let mut rows = vec![th.clone()];
        for r in &self.omega_rows {
            rows.push(self.row(r, &coords));
        }
        let d = numeric::nullspace_gauss(&rows, self.dim, F_TOL);
        let e = numeric::nullspace_gauss(&[th], self.dim, F_TOL);
        let a_th = self.two_form(&self.dtheta, &coords);
        let m: Vec<Vec<f64>> = e
            .iter()
            .map(|eb| e.iter().map(|ea| bilf(&a_th, ea, eb)).collect())
            .collect();
        let lc = numeric::nullspace_gauss(&m, e.len(), F_TOL);
        let l: Vec<Vec<f64>> = lc
            .iter()
            .map(|c| expand_f64(c, &e, self.dim))
            .collect();
        Some((d, e, l))
    }

    /// Moser field of the omega-family with theta held as the E-defining form.
    fn moser_rhs(&self, t: f64, p: &[f64]) -> Option<Vec<f64>> {
        let coords = ext_coords(p, t);
        let (d, _e, l) = self.bases(t, p)?;
        if l.is_empty() {
            return None;
        }
        let mut sys: Vec<Vec<f64>> = Vec::new();
        let mut rhs: Vec<f64> = Vec::new();
        for (i, terms) in self.domega.iter().enumerate() {
            let a = self.two_form(terms, &coords);
            let dt_row = self.row(&self.dt_omega[i], &coords);
            for db in &d {
                sys.push(l.iter().map(|la| bilf(&a, la, db)).collect());
                rhs.push(-dotf(&dt_row, db));
            }
        }
        let c = numeric::min_norm_solve(&numeric::from_rows(&sys), &rhs);
        Some(expand_f64(&c, &l, self.dim))
    }

    /// Even-contact normalization field: unique X in the orthocomplement of
    /// L inside E with i_X d(theta)|_V = -(d/dt theta)|_V.
    fn even_rhs(&self, t: f64, p: &[f64]) -> Option<Vec<f64>> {
        let coords = ext_coords(p, t);
        let th = self.row(&self.theta_row, &coords);
        let e = numeric::nullspace_gauss(&[th.clone()], self.dim, F_TOL);
        let a_th = self.two_form(&self.dtheta, &coords);
        let m: Vec<Vec<f64>> = e
            .iter()
            .map(|eb| e.iter().map(|ea| bilf(&a_th, ea, eb)).collect())
            .collect();
        let lc = numeric::nullspace_gauss(&m, e.len(), F_TOL);
        let mut constraints = vec![th];
        for c in &lc {
            constraints.push(expand_f64(c, &e, self.dim));
        }
        let v = numeric::nullspace_gauss(&constraints, self.dim, F_TOL);
        let dt_row = self.row(&self.dt_theta, &coords);
        let m: Vec<Vec<f64>> = v
            .iter()
            .map(|vb| v.iter().map(|va| bilf(&a_th, va, vb)).collect())
            .collect();
        let rhs: Vec<f64> = v.iter().map(|vb| -dotf(&dt_row, vb)).collect();
        let c = numeric::solve_square(&m, &rhs, F_TOL)?;
        Some(expand_f64(&c, &v, self.dim))
    }
}

fn ext_coords(p: &[f64], t: f64) -> Vec<f64> {
    let mut c = p.to_vec();
    c.push(t);
    c
}

fn dotf(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn bilf(a: &[Vec<f64>], x: &[f64], y: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (i, xi) in x.iter().enumerate() {
        if *xi == 0.0 {
            continue;
        }
        acc += xi * dotf(&a[i], y);
    }
    acc
}

fn expand_f64(c: &[f64], basis: &[Vec<f64>], dim: usize) -> Vec<f64> {
    let mut v = vec![0.0; dim];
    for (ci, b) in c.iter().zip(basis) {
        for (vi, bi) in v.iter_mut().zip(b) {
            *vi += ci * bi;
        }
    }
    v
}

#[derive(Debug, Clone)]
pub struct FlowConfig {
    pub h: f64,
    pub box_radius: f64,
    pub jac_eps: f64,
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig {
            h: 1e-3,
            box_radius: 1e3,
            jac_eps: 1e-6,
        }
    }
}

/// Result of integrating a flow on [0, 1] and comparing pushed-forward
/// distributions with the instantaneous ones along the trajectory.
#[derive(Debug, Clone)]
pub struct FlowVerification {
    pub t_grid: Vec<f64>,
    pub trajectory: Vec<Vec<f64>>,
    pub angles_d: Vec<f64>,
    pub angles_e: Vec<f64>,
    pub angles_l: Vec<f64>,
    pub max_angle_d: f64,
    pub max_angle_e: f64,
    pub max_angle_l: f64,
    pub final_point: Vec<f64>,
    pub truncated: bool,
}

fn fd_jacobian(
    f: &dyn Fn(f64, &[f64]) -> Option<Vec<f64>>,
    t: f64,
    p: &[f64],
    eps: f64,
) -> Option<DMatrix<f64>> {
    let n = p.len();
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(n);
    for i in 0..n {
        let mut pp = p.to_vec();
        let mut pm = p.to_vec();
        pp[i] += eps;
        pm[i] -= eps;
        let fp = f(t, &pp)?;
        let fm = f(t, &pm)?;
        cols.push(
            fp.iter()
                .zip(&fm)
                .map(|(a, b)| (a - b) / (2.0 * eps))
                .collect(),
        );
    }
    Some(numeric::from_cols(&cols))
}

/// RK4 on the combined (point, Jacobian) system; the variational part uses a
/// finite-difference Jacobian of the field. `observe` is called at every
/// grid node including t = 0.
fn integrate_with_jacobian(
    f: &dyn Fn(f64, &[f64]) -> Option<Vec<f64>>,
    p0: &[f64],
    steps: usize,
    h: f64,
    jac_eps: f64,
    box_radius: f64,
    mut observe: impl FnMut(f64, &[f64], &DMatrix<f64>) -> Result<()>,
) -> Result<(Vec<f64>, bool)> {
    let n = p0.len();
    let mut p = p0.to_vec();
    let mut jac = DMatrix::<f64>::identity(n, n);
    observe(0.0, &p, &jac)?;
    let eval = |t: f64, p: &[f64]| -> Result<(Vec<f64>, DMatrix<f64>)> {
        let x = f(t, p).ok_or_else(|| Error::SolveFailure(format!("flow field at t = {t}")))?;
        let dx = fd_jacobian(f, t, p, jac_eps)
            .ok_or_else(|| Error::SolveFailure(format!("flow field Jacobian at t = {t}")))?;
        Ok((x, dx))
    };
    for step in 0..steps {
        let t = step as f64 * h;
        let (k1, d1) = eval(t, &p)?;
        let p2: Vec<f64> = p.iter().zip(&k1).map(|(a, b)| a + 0.5 * h * b).collect();
        let j2 = &jac + (&d1 * &jac) * (0.5 * h);
        let (k2, d2) = eval(t + 0.5 * h, &p2)?;
        let p3: Vec<f64> = p.iter().zip(&k2).map(|(a, b)| a + 0.5 * h * b).collect();
        let j3 = &jac + (&d2 * &j2) * (0.5 * h);
        let (k3, d3) = eval(t + 0.5 * h, &p3)?;
        let p4: Vec<f64> = p.iter().zip(&k3).map(|(a, b)| a + h * b).collect();
        let j4 = &jac + (&d3 * &j3) * h;
        let (k4, d4) = eval(t + h, &p4)?;
        for i in 0..n {
            p[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        jac = &jac
            + (&d1 * &jac + (&d2 * &j2) * 2.0 + (&d3 * &j3) * 2.0 + &d4 * &j4) * (h / 6.0);
        if p.iter().any(|c| c.abs() > box_radius) {
            return Ok((p, true));
        }
        observe(t + h, &p, &jac)?;
    }
    Ok((p, false))
}

fn run_flow(
    nf: &NumericFamily,
    field: &dyn Fn(f64, &[f64]) -> Option<Vec<f64>>,
    p0: &[f64],
    cfg: &FlowConfig,
) -> Result<FlowVerification> {
    if p0.len() != nf.dim {
        return Err(Error::DimensionMismatch {
            expected: nf.dim,
            found: p0.len(),
        });
    }
    let steps = (1.0 / cfg.h).round().max(1.0) as usize;
    let h = 1.0 / steps as f64;
    let (d0, e0, l0) = nf
        .bases(0.0, p0)
        .ok_or_else(|| Error::SolveFailure("initial bases".into()))?;
    let d0 = numeric::from_cols(&d0);
    let e0 = numeric::from_cols(&e0);
    let l0 = numeric::from_cols(&l0);
    let mut out = FlowVerification {
        t_grid: Vec::new(),
        trajectory: Vec::new(),
        angles_d: Vec::new(),
        angles_e: Vec::new(),
        angles_l: Vec::new(),
        max_angle_d: 0.0,
        max_angle_e: 0.0,
        max_angle_l: 0.0,
        final_point: Vec::new(),
        truncated: false,
    };
    let (p_end, truncated) = {
        let observe = |t: f64, p: &[f64], jac: &DMatrix<f64>| -> Result<()> {
            let (d, e, l) = nf
                .bases(t, p)
                .ok_or_else(|| Error::SolveFailure(format!("bases at t = {t}")))?;
            let ad = numeric::max_principal_angle(&(jac * &d0), &numeric::from_cols(&d));
            let ae = numeric::max_principal_angle(&(jac * &e0), &numeric::from_cols(&e));
            let al = numeric::max_principal_angle(&(jac * &l0), &numeric::from_cols(&l));
            out.t_grid.push(t);
            out.trajectory.push(p.to_vec());
            out.angles_d.push(ad);
            out.angles_e.push(ae);
            out.angles_l.push(al);
            out.max_angle_d = out.max_angle_d.max(ad);
            out.max_angle_e = out.max_angle_e.max(ae);
            out.max_angle_l = out.max_angle_l.max(al);
            Ok(())
        };
        integrate_with_jacobian(field, p0, steps, h, cfg.jac_eps, cfg.box_radius, observe)?
    };
    out.final_point = p_end;
    out.truncated = truncated;
    Ok(out)
}

/// Integrate the Moser field of the family from t = 0 to 1 and verify that
/// the flow's pushforward matches D_t, E_t and L_t along the trajectory.
pub fn integrate_moser_flow(
    fam: &OneParamFamily,
    p0: &[f64],
    cfg: &FlowConfig,
) -> Result<FlowVerification> {
    let nf = NumericFamily::new(fam)?;
    run_flow(&nf, &|t, p| nf.moser_rhs(t, p), p0, cfg)
}

/// Integrate the even-contact normalization field alone (stage one of the
/// pipeline), with the same pushforward checks.
pub fn integrate_even_contact_flow(
    fam: &OneParamFamily,
    p0: &[f64],
    cfg: &FlowConfig,
) -> Result<FlowVerification> {
    let nf = NumericFamily::new(fam)?;
    run_flow(&nf, &|t, p| nf.even_rhs(t, p), p0, cfg)
}

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub steps: usize,
    pub stage1_h: f64,
    pub t_fd: f64,
    pub space_fd: f64,
    pub jac_fd: f64,
    pub box_radius: f64,
    pub direct: FlowConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            steps: 16,
            stage1_h: 0.125,
            t_fd: 1e-3,
            space_fd: 1e-4,
            jac_fd: 1e-5,
            box_radius: 1e3,
            direct: FlowConfig::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PipelineVerification {
    /// True when theta does not depend on the parameter, so stage one is the
    /// identity and the run reduces to the plain Moser flow.
    pub stage1_trivial: bool,
    pub flow: FlowVerification,
}

/// Two-stage stability verification: first flow along the even-contact
/// normalization field so that E_t is carried to E_0, then pull the
/// omega-family back through that flow and run the Moser construction with E
/// fixed. The composition is checked against the original family.
pub fn verify_stability_pipeline(
    fam: &OneParamFamily,
    p0: &[f64],
    cfg: &PipelineConfig,
) -> Result<PipelineVerification> {
    if fam.k() == 0 {
        return Err(Error::EmptyInput("pipeline needs omegas"));
    }
    if fam.theta_is_constant() {
        // stage one is exactly the identity; run stage two directly
        let flow = integrate_moser_flow(fam, p0, &cfg.direct)?;
        return Ok(PipelineVerification {
            stage1_trivial: true,
            flow,
        });
    }
    let nf = NumericFamily::new(fam)?;
    let dim = nf.dim;

    // plain stage-one trajectory: flow of the even-contact field from 0 to tau
    let stage1_point = |p: &[f64], tau: f64| -> Option<Vec<f64>> {
        if tau == 0.0 {
            return Some(p.to_vec());
        }
        let n = ((tau.abs() / cfg.stage1_h).ceil() as usize).max(1);
        let h = tau / n as f64;
        let mut q = p.to_vec();
        for step in 0..n {
            let t = step as f64 * h;
            let k1 = nf.even_rhs(t, &q)?;
            let q2: Vec<f64> = q.iter().zip(&k1).map(|(a, b)| a + 0.5 * h * b).collect();
            let k2 = nf.even_rhs(t + 0.5 * h, &q2)?;
            let q3: Vec<f64> = q.iter().zip(&k2).map(|(a, b)| a + 0.5 * h * b).collect();
            let k3 = nf.even_rhs(t + 0.5 * h, &q3)?;
            let q4: Vec<f64> = q.iter().zip(&k3).map(|(a, b)| a + h * b).collect();
            let k4 = nf.even_rhs(t + h, &q4)?;
            for i in 0..dim {
                q[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
            if q.iter().any(|c| c.abs() > cfg.box_radius) {
                return None;
            }
        }
        Some(q)
    };

    // stage-one map with Jacobian by finite differences of the map itself
    let stage1_map = |p: &[f64], tau: f64| -> Option<(Vec<f64>, DMatrix<f64>)> {
        let q = stage1_point(p, tau)?;
        let mut cols = Vec::with_capacity(dim);
        for i in 0..dim {
            let mut pp = p.to_vec();
            let mut pm = p.to_vec();
            pp[i] += cfg.jac_fd;
            pm[i] -= cfg.jac_fd;
            let qp = stage1_point(&pp, tau)?;
            let qm = stage1_point(&pm, tau)?;
            cols.push(
                qp.iter()
                    .zip(&qm)
                    .map(|(a, b)| (a - b) / (2.0 * cfg.jac_fd))
                    .collect::<Vec<f64>>(),
            );
        }
        Some((q, numeric::from_cols(&cols)))
    };

    // rows of the pulled-back omega-family at (tau, p)
    let pulled_rows = |tau: f64, p: &[f64]| -> Option<Vec<Vec<f64>>> {
        let (q, a) = stage1_map(p, tau)?;
        let coords = ext_coords(&q, tau);
        let rows: Vec<Vec<f64>> = nf
            .omega_rows
            .iter()
            .map(|r| {
                let w = nf.row(r, &coords);
                (0..dim).map(|j| dotf(&w, &a.column(j).iter().cloned().collect::<Vec<f64>>())).collect()
            })
            .collect();
        Some(rows)
    };

    // Moser field for the pulled-back family with E frozen at theta_0
    let stage2_field = |tau: f64, p: &[f64]| -> Option<Vec<f64>> {
        let coords0 = ext_coords(p, 0.0);
        let th0 = nf.row(&nf.theta_row, &coords0);
        let r0 = pulled_rows(tau, p)?;
        let mut rows = vec![th0.clone()];
        rows.extend(r0.iter().cloned());
        let d = numeric::nullspace_gauss(&rows, dim, F_TOL);
        let e = numeric::nullspace_gauss(&[th0], dim, F_TOL);
        let a_th = nf.two_form(&nf.dtheta, &coords0);
        let m: Vec<Vec<f64>> = e
            .iter()
            .map(|eb| e.iter().map(|ea| bilf(&a_th, ea, eb)).collect())
            .collect();
        let lc = numeric::nullspace_gauss(&m, e.len(), F_TOL);
        let l: Vec<Vec<f64>> = lc.iter().map(|c| expand_f64(c, &e, dim)).collect();
        if l.is_empty() {
            return None;
        }
        let rp = pulled_rows(tau + cfg.t_fd, p)?;
        let rm = pulled_rows(tau - cfg.t_fd, p)?;
        let dt_rows: Vec<Vec<f64>> = rp
            .iter()
            .zip(&rm)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y) / (2.0 * cfg.t_fd)).collect())
            .collect();
        // spatial derivative of each pulled row, for the d of the pulled form
        let mut grads: Vec<Vec<Vec<f64>>> = vec![Vec::with_capacity(dim); nf.omega_rows.len()];
        for j in 0..dim {
            let mut pp = p.to_vec();
            let mut pm = p.to_vec();
            pp[j] += cfg.space_fd;
            pm[j] -= cfg.space_fd;
            let rjp = pulled_rows(tau, &pp)?;
            let rjm = pulled_rows(tau, &pm)?;
            for (i, g) in grads.iter_mut().enumerate() {
                g.push(
                    rjp[i]
                        .iter()
                        .zip(&rjm[i])
                        .map(|(x, y)| (x - y) / (2.0 * cfg.space_fd))
                        .collect(),
                );
            }
        }
        let mut sys: Vec<Vec<f64>> = Vec::new();
        let mut rhs: Vec<f64> = Vec::new();
        for (i, g) in grads.iter().enumerate() {
            // antisymmetric matrix of d(omega'_i): a[r][s] = d_r w_s - d_s w_r
            let mut a = vec![vec![0.0; dim]; dim];
            for r in 0..dim {
                for s in 0..dim {
                    a[r][s] = g[r][s] - g[s][r];
                }
            }
            for db in &d {
                sys.push(l.iter().map(|la| bilf(&a, la, db)).collect());
                rhs.push(-dotf(&dt_rows[i], db));
            }
        }
        let c = numeric::min_norm_solve(&numeric::from_rows(&sys), &rhs);
        Some(expand_f64(&c, &l, dim))
    };

    let (d0, e0, l0) = nf
        .bases(0.0, p0)
        .ok_or_else(|| Error::SolveFailure("initial bases".into()))?;
    let d0 = numeric::from_cols(&d0);
    let e0 = numeric::from_cols(&e0);
    let l0 = numeric::from_cols(&l0);
    let h2 = 1.0 / cfg.steps as f64;
    let mut out = FlowVerification {
        t_grid: Vec::new(),
        trajectory: Vec::new(),
        angles_d: Vec::new(),
        angles_e: Vec::new(),
        angles_l: Vec::new(),
        max_angle_d: 0.0,
        max_angle_e: 0.0,
        max_angle_l: 0.0,
        final_point: Vec::new(),
        truncated: false,
    };
    let (_p_end, truncated) = {
        let observe = |tau: f64, p: &[f64], j2: &DMatrix<f64>| -> Result<()> {
            // composed map: stage-two position pushed through stage one
            let (q, a1) = stage1_map(p, tau)
                .ok_or_else(|| Error::SolveFailure(format!("stage-one map at t = {tau}")))?;
            let jc = &a1 * j2;
            let (d, e, l) = nf
                .bases(tau, &q)
                .ok_or_else(|| Error::SolveFailure(format!("bases at t = {tau}")))?;
            let ad = numeric::max_principal_angle(&(&jc * &d0), &numeric::from_cols(&d));
            let ae = numeric::max_principal_angle(&(&jc * &e0), &numeric::from_cols(&e));
            let al = numeric::max_principal_angle(&(&jc * &l0), &numeric::from_cols(&l));
            out.t_grid.push(tau);
            out.trajectory.push(q.clone());
            out.angles_d.push(ad);
            out.angles_e.push(ae);
            out.angles_l.push(al);
            out.max_angle_d = out.max_angle_d.max(ad);
            out.max_angle_e = out.max_angle_e.max(ae);
            out.max_angle_l = out.max_angle_l.max(al);
            Ok(())
        };
        integrate_with_jacobian(
            &stage2_field,
            p0,
            cfg.steps,
            h2,
            cfg.jac_fd,
            cfg.box_radius,
            observe,
        )?
    };
    out.truncated = truncated;
    out.final_point = out
        .trajectory
        .last()
        .cloned()
        .unwrap_or_else(|| p0.to_vec());
    Ok(PipelineVerification {
        stage1_trivial: false,
        flow: out,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::Chart;

    fn q(n: i64) -> Rational {
        Rational::from_integer(n.into())
    }
    fn qr(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into())
    }

    // theta = dz - y dx, omega_t = dy - (w + t) dx on (x, y, z, w)
    fn engel_translation() -> OneParamFamily {
        let ch = Chart::new(["x", "y", "z", "w"]).unwrap();
        let ext = OneParamFamily::parameter_chart(&ch).unwrap();
        let y = PolyScalar::var(&ext, 1);
        let w = PolyScalar::var(&ext, 3);
        let t = PolyScalar::var(&ext, 4);
        let theta = ExtForm::d_coord(&ext, 2)
            .add(&ExtForm::d_coord(&ext, 0).scale_poly(&-&y).unwrap())
            .unwrap();
        let omega = ExtForm::d_coord(&ext, 1)
            .add(
                &ExtForm::d_coord(&ext, 0)
                    .scale_poly(&-&(&w + &t))
                    .unwrap(),
            )
            .unwrap();
        OneParamFamily::new(ch, theta, vec![omega]).unwrap()
    }

    // theta_t = dz - (y + t) dx with the translated omega as well
    fn even_contact_family() -> OneParamFamily {
        let ch = Chart::new(["x", "y", "z", "w"]).unwrap();
        let ext = OneParamFamily::parameter_chart(&ch).unwrap();
        let y = PolyScalar::var(&ext, 1);
        let w = PolyScalar::var(&ext, 3);
        let t = PolyScalar::var(&ext, 4);
        let theta = ExtForm::d_coord(&ext, 2)
            .add(
                &ExtForm::d_coord(&ext, 0)
                    .scale_poly(&-&(&y + &t))
                    .unwrap(),
            )
            .unwrap();
        let omega = ExtForm::d_coord(&ext, 1)
            .add(
                &ExtForm::d_coord(&ext, 0)
                    .scale_poly(&-&(&w + &t))
                    .unwrap(),
            )
            .unwrap();
        OneParamFamily::new(ch, theta, vec![omega]).unwrap()
    }

    #[test]
    fn translation_moser_field_is_minus_dw() {
        let fam = engel_translation();
        let p = RationalPoint::from_i64(fam.chart().clone(), &[1, 2, 3, 4]).unwrap();
        let res = moser_field_at(&fam, &qr(1, 2), &p).unwrap();
        assert_eq!(res.x, vec![q(0), q(0), q(0), q(-1)]);
        assert!(res.residual_zero);
        assert!(res.constraint_ok);
    }

    #[test]
    fn constant_family_field_is_zero() {
        let ch = Chart::new(["x", "y", "z", "w"]).unwrap();
        let ext = OneParamFamily::parameter_chart(&ch).unwrap();
        let y = PolyScalar::var(&ext, 1);
        let w = PolyScalar::var(&ext, 3);
        let theta = ExtForm::d_coord(&ext, 2)
            .add(&ExtForm::d_coord(&ext, 0).scale_poly(&-&y).unwrap())
            .unwrap();
        let omega = ExtForm::d_coord(&ext, 1)
            .add(&ExtForm::d_coord(&ext, 0).scale_poly(&-&w).unwrap())
            .unwrap();
        let fam = OneParamFamily::new(ch, theta, vec![omega]).unwrap();
        let p = RationalPoint::from_i64(fam.chart().clone(), &[1, -1, 2, 3]).unwrap();
        let res = moser_field_at(&fam, &qr(1, 3), &p).unwrap();
        assert!(res.x.iter().all(|c| c.is_zero()));
        assert!(res.residual_zero);
    }

    #[test]
    fn moser_field_invariant_under_rescaling() {
        let fam = engel_translation();
        // f theta with f = 1 + x^2, (2 + t) omega
        let ext = fam.ext_chart().clone();
        let x = PolyScalar::var(&ext, 0);
        let f = &PolyScalar::one(&ext) + &x.checked_mul(&x).unwrap();
        let g = &PolyScalar::from_i64(&ext, 2) + &PolyScalar::var(&ext, 4);
        let theta2 = fam.theta().scale_poly(&f).unwrap();
        let omega2 = fam.omegas()[0].scale_poly(&g).unwrap();
        let fam2 = OneParamFamily::new(fam.chart().clone(), theta2, vec![omega2]).unwrap();
        let p = RationalPoint::from_i64(fam.chart().clone(), &[2, 1, -1, 3]).unwrap();
        let t = qr(1, 2);
        let a = moser_field_at(&fam, &t, &p).unwrap();
        let b = moser_field_at(&fam2, &t, &p).unwrap();
        assert_eq!(a.x, b.x);
    }

    #[test]
    fn kernel_ranks_on_translation_family() {
        let fam = engel_translation();
        let p = RationalPoint::from_i64(fam.chart().clone(), &[1, 0, 2, -1]).unwrap();
        let rep = kernel_distributions(&fam, &qr(1, 4), &p).unwrap();
        assert_eq!(rep.d.len(), 2);
        assert_eq!(rep.l.len(), 1);
        assert_eq!(rep.rank_w(), 0);
        assert_eq!(rep.rank_j(), vec![1]);
        // rank J = rank W + 1
        assert_eq!(rep.rank_j()[0], rep.rank_w() + 1);
    }

    #[test]
    fn even_contact_field_is_minus_dy() {
        let fam = even_contact_family();
        let p = RationalPoint::from_i64(fam.chart().clone(), &[1, 2, 0, -1]).unwrap();
        let res = even_contact_moser_field_at(&fam, &qr(1, 2), &p).unwrap();
        assert_eq!(res.x, vec![q(0), q(-1), q(0), q(0)]);
        assert!(res.residual_zero);
    }

    #[test]
    fn varying_cauchy_space_is_rejected() {
        // theta_t = dz - y dx - t dw has L_t = span{t d_z + d_w}
        let ch = Chart::new(["x", "y", "z", "w"]).unwrap();
        let ext = OneParamFamily::parameter_chart(&ch).unwrap();
        let y = PolyScalar::var(&ext, 1);
        let t = PolyScalar::var(&ext, 4);
        let theta = ExtForm::d_coord(&ext, 2)
            .add(&ExtForm::d_coord(&ext, 0).scale_poly(&-&y).unwrap())
            .unwrap()
            .add(&ExtForm::d_coord(&ext, 3).scale_poly(&-&t).unwrap())
            .unwrap();
        let fam = OneParamFamily::new(ch, theta, vec![]).unwrap();
        let p = RationalPoint::from_i64(fam.chart().clone(), &[0, 1, 0, 0]).unwrap();
        let err = even_contact_moser_field_at(&fam, &qr(1, 2), &p).unwrap_err();
        assert!(matches!(err, Error::HypothesisViolation(_)));
    }

    #[test]
    fn translation_flow_preserves_distributions() {
        let fam = engel_translation();
        let cfg = FlowConfig {
            h: 0.01,
            ..FlowConfig::default()
        };
        let v = integrate_moser_flow(&fam, &[0.2, -0.1, 0.3, 0.5], &cfg).unwrap();
        assert!(!v.truncated);
        assert!((v.final_point[3] + 0.5).abs() < 1e-8, "w = {}", v.final_point[3]);
        assert!(v.max_angle_d < 1e-6, "angle D = {}", v.max_angle_d);
        assert!(v.max_angle_l < 1e-8, "angle L = {}", v.max_angle_l);
    }

    #[test]
    fn pipeline_short_circuits_when_theta_constant() {
        let fam = engel_translation();
        let cfg = PipelineConfig {
            direct: FlowConfig {
                h: 0.01,
                ..FlowConfig::default()
            },
            ..PipelineConfig::default()
        };
        let p0 = [0.2, -0.1, 0.3, 0.5];
        let pv = verify_stability_pipeline(&fam, &p0, &cfg).unwrap();
        assert!(pv.stage1_trivial);
        let direct = integrate_moser_flow(&fam, &p0, &cfg.direct).unwrap();
        for (a, b) in pv.flow.final_point.iter().zip(&direct.final_point) {
            assert!((a - b).abs() <= 1e-10);
        }
    }

    #[test]
    fn pipeline_composed_flow_on_even_contact_family() {
        let fam = even_contact_family();
        let cfg = PipelineConfig {
            steps: 8,
            stage1_h: 0.25,
            ..PipelineConfig::default()
        };
        let p0 = [0.2, -0.1, 0.3, 0.5];
        let pv = verify_stability_pipeline(&fam, &p0, &cfg).unwrap();
        assert!(!pv.stage1_trivial);
        assert!(!pv.flow.truncated);
        // composed map is (x, y - t, z, w - t)
        let f = &pv.flow.final_point;
        assert!((f[0] - 0.2).abs() < 1e-6, "x = {}", f[0]);
        assert!((f[1] + 1.1).abs() < 1e-6, "y = {}", f[1]);
        assert!((f[3] + 0.5).abs() < 1e-6, "w = {}", f[3]);
        assert!(pv.flow.max_angle_d < 1e-4, "angle D = {}", pv.flow.max_angle_d);
        assert!(pv.flow.max_angle_e < 1e-4, "angle E = {}", pv.flow.max_angle_e);
    }
}
