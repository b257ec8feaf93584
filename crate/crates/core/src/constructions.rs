//! Canonical objects: Cartan prolongation charts of the standard contact
//! structure, the adapted-coordinate normal-form Pfaffian systems, and the
//! three R^8 counterexample fixtures with their expected verdicts.

use crate::chart::{Chart, ChartRef};
use crate::distribution::Distribution;
use crate::error::Result;
use crate::exterior::{ExtForm, VectorField};
use crate::poly::PolyScalar;

/// The prolongation flag L in D in E on the affine fiber chart
/// (x_1..x_n, y_1..y_n, z, a_1..a_n, b_1..b_{n-1}), dim 4n, where the line
/// direction is normalized to have unit component along P_n.
#[derive(Debug, Clone)]
pub struct ProlongationChart {
    pub n: usize,
    pub chart: ChartRef,
    pub l: Distribution,
    pub d: Distribution,
    pub e: Distribution,
    /// Contact form dz - sum y_i dx_i pulled to the chart.
    pub theta: ExtForm,
}

/// Index helpers for the prolongation chart layout.
impl ProlongationChart {
    pub fn x(&self, i: usize) -> usize {
        i
    }
    pub fn y(&self, i: usize) -> usize {
        self.n + i
    }
    pub fn z_index(&self) -> usize {
        2 * self.n
    }
    pub fn a(&self, i: usize) -> usize {
        2 * self.n + 1 + i
    }
    pub fn b(&self, j: usize) -> usize {
        3 * self.n + 1 + j
    }
}

/// Build the Cartan prolongation of the standard contact structure on
/// R^(2n+1): P_i = d_{x_i} + y_i d_z, Z = P_n + sum a_i d_{y_i} + sum b_j P_j,
/// L = <d_a, d_b>, D = L + <Z>, E = D + <d_{y_i}, P_1..P_{n-1}>.
pub fn cartan_prolongation(n: usize) -> Result<ProlongationChart> {
    assert!(n >= 1);
    let mut names: Vec<String> = Vec::with_capacity(4 * n);
    for i in 1..=n {
        names.push(format!("x{i}"));
    }
    for i in 1..=n {
        names.push(format!("y{i}"));
    }
    names.push("z".to_string());
    for i in 1..=n {
        names.push(format!("a{i}"));
    }
    for j in 1..n {
        names.push(format!("b{j}"));
    }
    let chart = Chart::new(names)?;
    let x = |i: usize| i; // 0-based position of x_{i+1}
    let y = |i: usize| n + i;
    let z = 2 * n;
    let a = |i: usize| 2 * n + 1 + i;
    let b = |j: usize| 3 * n + 1 + j;

    let p_field = |i: usize| -> Result<VectorField> {
        let mut comps: Vec<PolyScalar> = (0..4 * n).map(|_| PolyScalar::zero(&chart)).collect();
        comps[x(i)] = PolyScalar::one(&chart);
        comps[z] = PolyScalar::var(&chart, y(i));
        VectorField::new(chart.clone(), comps)
    };

    // Z = P_n + sum a_i d_{y_i} + sum b_j P_j
    let mut zed = p_field(n - 1)?;
    for i in 0..n {
        let term = VectorField::coordinate(&chart, y(i)).scale_poly(&PolyScalar::var(&chart, a(i)))?;
        zed = zed.add(&term)?;
    }
    for j in 0..n - 1 {
        let term = p_field(j)?.scale_poly(&PolyScalar::var(&chart, b(j)))?;
        zed = zed.add(&term)?;
    }

    let mut l_gens: Vec<VectorField> = Vec::new();
    for i in 0..n {
        l_gens.push(VectorField::coordinate(&chart, a(i)));
    }
    for j in 0..n - 1 {
        l_gens.push(VectorField::coordinate(&chart, b(j)));
    }

    let mut d_gens = l_gens.clone();
    d_gens.push(zed);

    let mut e_gens = d_gens.clone();
    for i in 0..n {
        e_gens.push(VectorField::coordinate(&chart, y(i)));
    }
    for j in 0..n - 1 {
        e_gens.push(p_field(j)?);
    }

    let mut theta = ExtForm::d_coord(&chart, z);
    for i in 0..n {
        let yi = PolyScalar::var(&chart, y(i));
        theta = theta.add(&ExtForm::d_coord(&chart, x(i)).scale_poly(&(-&yi))?)?;
    }

    Ok(ProlongationChart {
        n,
        chart: chart.clone(),
        l: Distribution::new(chart.clone(), l_gens)?,
        d: Distribution::new(chart.clone(), d_gens)?,
        e: Distribution::new(chart, e_gens)?,
        theta,
    })
}

/// The adapted-coordinate Pfaffian system on the chart
/// (x_1..x_{l+1}, y_1..y_{l+1}, z, c_1..c_k, q_1..q_r), dim 2k + 2 + r with
/// k = 2l + 1.
#[derive(Debug, Clone)]
pub struct NormalFormSystem {
    pub l: usize,
    pub r: usize,
    pub chart: ChartRef,
    pub theta: ExtForm,
    pub omegas: Vec<ExtForm>,
}

pub fn normal_form(l: usize, r: usize) -> Result<NormalFormSystem> {
    let k = 2 * l + 1;
    let mut names: Vec<String> = Vec::new();
    for i in 1..=l + 1 {
        names.push(format!("x{i}"));
    }
    for i in 1..=l + 1 {
        names.push(format!("y{i}"));
    }
    names.push("z".to_string());
    for i in 1..=k {
        names.push(format!("c{i}"));
    }
    for i in 1..=r {
        names.push(format!("q{i}"));
    }
    let chart = Chart::new(names)?;
    let xi = |i: usize| i; // 0-based index of x_{i+1}
    let yi = |i: usize| l + 1 + i;
    let z = 2 * (l + 1);
    let ci = |i: usize| 2 * l + 3 + i;

    // Theta = dz - sum y_i dx_i
    let mut theta = ExtForm::d_coord(&chart, z);
    for i in 0..l + 1 {
        let y = PolyScalar::var(&chart, yi(i));
        theta = theta.add(&ExtForm::d_coord(&chart, xi(i)).scale_poly(&(-&y))?)?;
    }

    // Omega^i = dx_i + c_i dy_{l+1} for i <= l+1, dy_{i-l-1} + c_i dy_{l+1}
    // above.
    let dy_last = ExtForm::d_coord(&chart, yi(l));
    let mut omegas = Vec::with_capacity(k);
    for i in 0..k {
        let base = if i < l + 1 {
            ExtForm::d_coord(&chart, xi(i))
        } else {
            ExtForm::d_coord(&chart, yi(i - l - 1))
        };
        let c = PolyScalar::var(&chart, ci(i));
        omegas.push(base.add(&dy_last.scale_poly(&c)?)?);
    }

    Ok(NormalFormSystem {
        l,
        r,
        chart,
        theta,
        omegas,
    })
}

/// Which generalized Engel condition a fixture is expected to violate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExpectedFailure {
    /// The Cauchy characteristic of D^2 escapes D.
    LNotInD,
    /// L sits in D but with the stated corank instead of 1.
    LCorank(usize),
}

#[derive(Debug, Clone)]
pub struct Fixture {
    pub name: &'static str,
    pub distribution: Distribution,
    pub expected: ExpectedFailure,
    /// Rank of the Cauchy characteristic of D^2 on the regular sample.
    pub cauchy_rank: usize,
}

/// The three R^8 examples separating the flag conditions: two where L
/// escapes D, one where L sits in D with corank 3. Generator order follows
/// the source lists so witness indices stay stable.
pub fn paper_fixtures() -> Result<Vec<Fixture>> {
    let mut out = Vec::new();

    // (a) D = <d_x, d_y, d_z, d_w + x d_x1 + y d_y1 + z d_z1 + z1 d_t>
    {
        let ch = Chart::new(["x", "y", "z", "w", "x1", "y1", "z1", "t"])?;
        let mut comps: Vec<PolyScalar> = (0..8).map(|_| PolyScalar::zero(&ch)).collect();
        comps[3] = PolyScalar::one(&ch);
        comps[4] = PolyScalar::var(&ch, 0);
        comps[5] = PolyScalar::var(&ch, 1);
        comps[6] = PolyScalar::var(&ch, 2);
        comps[7] = PolyScalar::var(&ch, 6);
        let g = VectorField::new(ch.clone(), comps)?;
        let d = Distribution::new(
            ch.clone(),
            vec![
                VectorField::coordinate(&ch, 0),
                VectorField::coordinate(&ch, 1),
                VectorField::coordinate(&ch, 2),
                g,
            ],
        )?;
        out.push(Fixture {
            name: "a",
            distribution: d,
            expected: ExpectedFailure::LNotInD,
            cauchy_rank: 5,
        });
    }

    // (b) D = <d_w, d_x1 + w d_y1 + y1 d_z, d_x2 + w d_y2 + y2 d_z,
    //          d_x3 + w d_y3>
    {
        let ch = Chart::new(["w", "x1", "x2", "x3", "y1", "y2", "y3", "z"])?;
        let w = |ch: &ChartRef| PolyScalar::var(ch, 0);
        let mk = |xi: usize, yi: usize, z_coeff: Option<usize>| -> Result<VectorField> {
            let mut comps: Vec<PolyScalar> = (0..8).map(|_| PolyScalar::zero(&ch)).collect();
            comps[xi] = PolyScalar::one(&ch);
            comps[yi] = w(&ch);
            if let Some(yc) = z_coeff {
                comps[7] = PolyScalar::var(&ch, yc);
            }
            VectorField::new(ch.clone(), comps)
        };
        let d = Distribution::new(
            ch.clone(),
            vec![
                VectorField::coordinate(&ch, 0),
                mk(1, 4, Some(4))?,
                mk(2, 5, Some(5))?,
                mk(3, 6, None)?,
            ],
        )?;
        out.push(Fixture {
            name: "b",
            distribution: d,
            expected: ExpectedFailure::LNotInD,
            cauchy_rank: 3,
        });
    }

    // (c) v_i = d_{x_i} + w d_{y_i} + y_i d_z, D = <d_w, v1, v2, v3>
    {
        let ch = Chart::new(["w", "x1", "x2", "x3", "y1", "y2", "y3", "z"])?;
        let mk = |xi: usize, yi: usize| -> Result<VectorField> {
            let mut comps: Vec<PolyScalar> = (0..8).map(|_| PolyScalar::zero(&ch)).collect();
            comps[xi] = PolyScalar::one(&ch);
            comps[yi] = PolyScalar::var(&ch, 0);
            comps[7] = PolyScalar::var(&ch, yi);
            VectorField::new(ch.clone(), comps)
        };
        let d = Distribution::new(
            ch.clone(),
            vec![
                VectorField::coordinate(&ch, 0),
                mk(1, 4)?,
                mk(2, 5)?,
                mk(3, 6)?,
            ],
        )?;
        out.push(Fixture {
            name: "c",
            distribution: d,
            expected: ExpectedFailure::LCorank(3),
            cauchy_rank: 1,
        });
    }

    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::RationalPoint;
    use crate::distribution::{cauchy_characteristic_at, derived_flag, flag_generators};
    use crate::engel::{check_generalized_engel, Verdict};
    use crate::linalg::SubspaceRelation;
    use crate::sample::SamplePlan;

    #[test]
    fn prolongation_rank_vector() {
        for n in 1..=3 {
            let pc = cartan_prolongation(n).unwrap();
            let points = SamplePlan::new(5, 11).points(&pc.chart);
            for p in &points {
                assert_eq!(pc.l.rank_at(p).unwrap(), 2 * n - 1);
                assert_eq!(pc.d.rank_at(p).unwrap(), 2 * n);
                assert_eq!(pc.e.rank_at(p).unwrap(), 4 * n - 1);
            }
        }
    }

    #[test]
    fn prolongation_n1_is_engel() {
        let pc = cartan_prolongation(1).unwrap();
        assert_eq!(pc.chart.dim(), 4);
        let origin = RationalPoint::origin(pc.chart.clone());
        let gv = derived_flag(&pc.d, &origin, 5).unwrap();
        assert_eq!(gv.ranks, vec![2, 3, 4]);
        let points = SamplePlan::new(10, 3).points(&pc.chart);
        let report = check_generalized_engel(&pc.d, &points).unwrap();
        assert_eq!(report.verdict, Verdict::Pass);
    }

    #[test]
    fn prolongation_n2_growth() {
        let pc = cartan_prolongation(2).unwrap();
        let points = SamplePlan::new(3, 5).points(&pc.chart);
        for p in &points {
            let gv = derived_flag(&pc.d, p, 5).unwrap();
            assert_eq!(gv.ranks, vec![4, 7, 8]);
        }
    }

    #[test]
    fn prolongation_l_is_cauchy_of_e() {
        for n in 1..=2 {
            let pc = cartan_prolongation(n).unwrap();
            let points = SamplePlan::new(5, 17).points(&pc.chart);
            for p in &points {
                let l = cauchy_characteristic_at(&pc.e, p).unwrap();
                let l_rows = pc.l.eval_rows(p).unwrap();
                assert_eq!(
                    crate::linalg::subspace_compare(&l, &l_rows),
                    SubspaceRelation::Equal
                );
            }
        }
    }

    #[test]
    fn prolongation_bracket_relations() {
        // [Z, d_{a_i}] = -d_{y_i} mod D and [Z, d_{b_j}] = -P_j mod D;
        // witnessed by D^2 = E at sample points.
        let pc = cartan_prolongation(2).unwrap();
        let levels = flag_generators(&pc.d, 2).unwrap();
        let d2 = Distribution::new(pc.chart.clone(), levels[1].clone()).unwrap();
        let points = SamplePlan::new(5, 23).points(&pc.chart);
        for p in &points {
            let d2_rows = d2.eval_rows(p).unwrap();
            let e_rows = pc.e.eval_rows(p).unwrap();
            assert_eq!(
                crate::linalg::subspace_compare(&d2_rows, &e_rows),
                SubspaceRelation::Equal
            );
        }
    }

    #[test]
    fn normal_form_l0_is_engel_pair() {
        let nf = normal_form(0, 0).unwrap();
        assert_eq!(nf.chart.dim(), 4);
        assert_eq!(nf.omegas.len(), 1);
        // Theta = dz - y1 dx1, Omega1 = dx1 + c1 dy1
        assert_eq!(format!("{}", nf.theta), "(-y1) dx1 + (1) dz");
        assert_eq!(format!("{}", nf.omegas[0]), "(1) dx1 + (c1) dy1");
    }

    #[test]
    fn normal_form_dimensions() {
        let nf = normal_form(1, 0).unwrap();
        // 2(l+1) point coordinates, z, and k = 2l+1 fiber coordinates
        assert_eq!(nf.chart.dim(), 8);
        assert_eq!(nf.omegas.len(), 3);
        let nf = normal_form(0, 2).unwrap();
        assert_eq!(nf.chart.dim(), 6);
    }

    #[test]
    fn fixture_c_contains_integrable_corank_one() {
        // <v1, v2, v3> is integrable: brackets vanish pointwise.
        let fixtures = paper_fixtures().unwrap();
        let c = &fixtures[2];
        let gens = c.distribution.generators();
        let points = SamplePlan::new(10, 29).points(c.distribution.chart());
        for i in 1..4 {
            for j in 1..4 {
                let b = crate::exterior::lie_bracket(&gens[i], &gens[j]).unwrap();
                for p in &points {
                    assert!(b.eval(p).unwrap().iter().all(num_traits::Zero::is_zero));
                }
            }
        }
    }
}
