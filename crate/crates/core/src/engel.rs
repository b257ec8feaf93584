//! Verdicts for the generalized Engel definition (five pointwise flag
//! conditions) and for the four Pfaffian-form criteria, with structured,
//! JSON-serializable reports.

use serde::Serialize;

use crate::chart::RationalPoint;
use crate::distribution::{
    cauchy_characteristic_at, flag_generators, Distribution, PfaffianSystem,
};
use crate::error::{Error, Result};
use crate::exterior::{exterior_derivative, wedge, wedge_all, wedge_power, ExtForm, FormValue};
use crate::linalg::{self, Row, SubspaceRelation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    /// Sampled ranks disagree; the verdict is undefined on this sample.
    Singular,
}

impl Verdict {
    pub fn passed(self) -> bool {
        self == Verdict::Pass
    }
}

/// Per-point evaluation backing each condition flag.
#[derive(Debug, Clone, Serialize)]
pub struct FlagWitness {
    pub point: String,
    pub rank_d: usize,
    pub rank_e: usize,
    pub rank_d3: usize,
    pub rank_l: usize,
    pub l_in_d: bool,
    pub conditions: [bool; 5],
}

/// Outcome of the five-condition generalized Engel check on a point sample.
#[derive(Debug, Clone, Serialize)]
pub struct FlagReport {
    pub corank_d: usize,
    pub corank_e: usize,
    pub corank_l_in_d: usize,
    pub cond_even_corank: bool,
    pub cond_e_corank1: bool,
    pub cond_d3_full: bool,
    pub cond_l_in_d: bool,
    pub cond_l_corank1_in_d: bool,
    pub witnesses: Vec<FlagWitness>,
    /// Points whose rank profile deviates from the first sampled profile.
    pub singular_witnesses: Vec<String>,
    pub verdict: Verdict,
}

impl FlagReport {
    pub fn conditions(&self) -> [bool; 5] {
        [
            self.cond_even_corank,
            self.cond_e_corank1,
            self.cond_d3_full,
            self.cond_l_in_d,
            self.cond_l_corank1_in_d,
        ]
    }

    pub fn failed_conditions(&self) -> Vec<&'static str> {
        const NAMES: [&str; 5] = [
            "corank(D) even",
            "corank(E) = 1",
            "D^3 = TM",
            "L in D",
            "corank(L in D) = 1",
        ];
        self.conditions()
            .iter()
            .zip(NAMES)
            .filter(|(ok, _)| !**ok)
            .map(|(_, n)| n)
            .collect()
    }
}

/// Check the generalized Engel conditions for `d` at every point of the
/// sample: corank(D) even, corank(D^2) = 1, D^3 = TM, L inside D, and L of
/// corank 1 in D, where L is the Cauchy characteristic of E = D^2.
pub fn check_generalized_engel(d: &Distribution, points: &[RationalPoint]) -> Result<FlagReport> {
    if points.is_empty() {
        return Err(Error::EmptyInput("sample points"));
    }
    let dim = d.chart().dim();
    let levels = flag_generators(d, 3)?;
    let e = Distribution::new(d.chart().clone(), levels[1].clone())?;
    let d3 = &levels[2];

    let mut witnesses = Vec::new();
    let mut profiles: Vec<(usize, usize, usize, usize, bool)> = Vec::new();
    for p in points {
        let d_rows = d.eval_rows(p)?;
        let rank_d = linalg::rank(&d_rows);
        let e_rows = e.eval_rows(p)?;
        let rank_e = linalg::rank(&e_rows);
        let d3_rows: Vec<Row> = d3.iter().map(|g| g.eval(p)).collect::<Result<_>>()?;
        let rank_d3 = linalg::rank(&d3_rows);

        let corank_d = dim - rank_d;
        let cond1 = corank_d % 2 == 0 && corank_d > 0;
        let cond2 = dim - rank_e == 1;
        let cond3 = rank_d3 == dim;

        // Condition 5 (corank of L in D equals 1) is only meaningful once L
        // sits inside D; when condition 4 already fails it is not counted as
        // an additional failure.
        let (rank_l, l_in_d, cond5) = if cond2 {
            let l = cauchy_characteristic_at(&e, p)?;
            let rel = linalg::subspace_compare(&l, &d_rows);
            let l_in_d = matches!(rel, SubspaceRelation::ASubsetB | SubspaceRelation::Equal);
            let rank_l = l.len();
            let cond5 = if l_in_d { rank_d == rank_l + 1 } else { true };
            (rank_l, l_in_d, cond5)
        } else {
            (0, false, false)
        };
        let conds = [cond1, cond2, cond3, l_in_d, cond5];
        profiles.push((rank_d, rank_e, rank_d3, rank_l, l_in_d));
        witnesses.push(FlagWitness {
            point: p.to_string(),
            rank_d,
            rank_e,
            rank_d3,
            rank_l,
            l_in_d,
            conditions: conds,
        });
    }

    let reference = profiles[0];
    let singular_witnesses: Vec<String> = profiles
        .iter()
        .zip(points)
        .filter(|(pr, _)| **pr != reference)
        .map(|(_, p)| p.to_string())
        .collect();
    let singular = !singular_witnesses.is_empty();

    let all = |i: usize| witnesses.iter().all(|w| w.conditions[i]);
    let conds = [all(0), all(1), all(2), all(3), all(4)];
    let (rank_d, rank_e, rank_l) = (reference.0, reference.1, reference.3);
    let verdict = if singular {
        Verdict::Singular
    } else if conds.iter().all(|&c| c) {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(FlagReport {
        corank_d: dim - rank_d,
        corank_e: dim - rank_e,
        corank_l_in_d: rank_d.saturating_sub(rank_l),
        cond_even_corank: conds[0],
        cond_e_corank1: conds[1],
        cond_d3_full: conds[2],
        cond_l_in_d: conds[3],
        cond_l_corank1_in_d: conds[4],
        witnesses,
        singular_witnesses,
        verdict,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct PfaffianWitness {
    pub point: String,
    pub eta_rank: usize,
    pub theta_power_nonzero: bool,
}

/// Outcome of the four Pfaffian-form criteria for (theta, omega^1..omega^k)
/// with k = 2l+1: the eta^i are pointwise independent, each
/// omega^i ^ theta ^ (d theta)^(l+1) vanishes identically,
/// theta ^ (d theta)^(l+1) is nonzero pointwise, and
/// theta ^ (d theta)^(l+2) vanishes identically.
#[derive(Debug, Clone, Serialize)]
pub struct PfaffianReport {
    pub k: usize,
    pub l: usize,
    pub eta_independent: bool,
    pub omega_theta_vanish: bool,
    pub theta_nondegenerate: bool,
    pub theta_degenerate_next: bool,
    pub witnesses: Vec<PfaffianWitness>,
    pub verdict: Verdict,
}

pub fn check_pfaffian_criteria(
    theta: &ExtForm,
    omegas: &[ExtForm],
    points: &[RationalPoint],
) -> Result<PfaffianReport> {
    let chart = theta.chart().clone();
    let k = omegas.len();
    if k % 2 == 0 {
        return Err(Error::EvenK(k));
    }
    let l = (k - 1) / 2;
    let dim = chart.dim();
    if dim < k + 3 {
        return Err(Error::BadDegree {
            degree: k + 3,
            dim,
        });
    }
    if points.is_empty() {
        return Err(Error::EmptyInput("sample points"));
    }
    for w in omegas {
        chart.check_same(w.chart())?;
    }

    let dtheta = exterior_derivative(theta);
    let theta_pow1 = wedge(theta, &wedge_power(&dtheta, l + 1)?)?;
    let theta_pow2 = wedge(theta, &wedge_power(&dtheta, l + 2)?)?;
    let theta_degenerate_next = theta_pow2.is_zero();

    // Symbolic: omega^i ^ theta ^ (d theta)^(l+1) = 0 identically.
    let mut omega_theta_vanish = true;
    for w in omegas {
        if !wedge(w, &theta_pow1)?.is_zero() {
            omega_theta_vanish = false;
            break;
        }
    }

    // eta^i = omega^1 ^ ... ^ omega^k ^ theta ^ d omega^i
    let omega_refs: Vec<&ExtForm> = omegas.iter().collect();
    let base = wedge(&wedge_all(&omega_refs)?, theta)?;
    let etas: Vec<ExtForm> = omegas
        .iter()
        .map(|w| wedge(&base, &exterior_derivative(w)))
        .collect::<Result<_>>()?;

    let mut witnesses = Vec::new();
    let mut eta_independent = true;
    let mut theta_nondegenerate = true;
    for p in points {
        let vals: Vec<FormValue> = etas.iter().map(|e| e.eval(p)).collect::<Result<_>>()?;
        let rows = FormValue::flatten(&vals);
        let eta_rank = if rows.is_empty() || rows[0].is_empty() {
            0
        } else {
            linalg::rank(&rows)
        };
        if eta_rank != k {
            eta_independent = false;
        }
        let nz = !theta_pow1.eval(p)?.is_zero();
        if !nz {
            theta_nondegenerate = false;
        }
        witnesses.push(PfaffianWitness {
            point: p.to_string(),
            eta_rank,
            theta_power_nonzero: nz,
        });
    }

    let pass =
        eta_independent && omega_theta_vanish && theta_nondegenerate && theta_degenerate_next;
    Ok(PfaffianReport {
        k,
        l,
        eta_independent,
        omega_theta_vanish,
        theta_nondegenerate,
        theta_degenerate_next,
        witnesses,
        verdict: if pass { Verdict::Pass } else { Verdict::Fail },
    })
}

/// Result of converting a Pfaffian presentation to a generator presentation.
#[derive(Debug, Clone)]
pub struct FormsToDistribution {
    /// Polynomial generators of the common kernel, when fraction-free
    /// elimination finds them.
    pub distribution: Option<Distribution>,
    /// Exact kernel bases at the sample points.
    pub pointwise: Vec<(RationalPoint, Vec<Row>)>,
    pub symbolic: bool,
}

pub fn forms_to_distribution(
    theta: &ExtForm,
    omegas: &[ExtForm],
    points: &[RationalPoint],
) -> Result<FormsToDistribution> {
    let chart = theta.chart().clone();
    let mut forms = vec![theta.clone()];
    forms.extend_from_slice(omegas);
    let sys = PfaffianSystem::new(chart.clone(), forms.clone())?;

    let mut pointwise = Vec::new();
    for p in points {
        let rows: Vec<Row> = forms
            .iter()
            .map(|f| f.eval_row(p))
            .collect::<Result<_>>()?;
        if linalg::rank(&rows) != forms.len() {
            return Err(Error::DependentForms);
        }
        pointwise.push((p.clone(), sys.kernel_at(p)?));
    }

    let coeff_rows: Vec<Vec<crate::poly::PolyScalar>> = forms
        .iter()
        .map(|f| f.coefficient_row())
        .collect::<Result<_>>()?;
    let symbolic = linalg::symbolic_nullspace(&coeff_rows, chart.dim())
        .ok()
        .and_then(|(basis, _)| {
            let gens: Vec<_> = basis
                .into_iter()
                .map(|comps| crate::exterior::VectorField::new(chart.clone(), comps))
                .collect::<Result<_>>()
                .ok()?;
            Distribution::new(chart.clone(), gens).ok()
        });
    let has_symbolic = symbolic.is_some();
    Ok(FormsToDistribution {
        distribution: symbolic,
        pointwise,
        symbolic: has_symbolic,
    })
}

/// Result of converting a generator presentation to a Pfaffian one.
#[derive(Debug, Clone)]
pub struct DistributionForms {
    pub theta: ExtForm,
    pub omegas: Vec<ExtForm>,
    /// False when symbolic elimination failed and the forms are frozen
    /// covectors from the first sample point.
    pub symbolic: bool,
}

pub fn distribution_to_forms(
    d: &Distribution,
    points: &[RationalPoint],
) -> Result<DistributionForms> {
    let chart = d.chart().clone();
    let dim = chart.dim();
    let p0 = points.first().ok_or(Error::EmptyInput("sample points"))?;
    let levels = flag_generators(d, 2)?;
    let e = Distribution::new(chart.clone(), levels[1].clone())?;
    let rank_d = d.rank_at(p0)?;
    let k = dim - rank_d - 1;

    let symbolic_attempt = (|| -> Result<(ExtForm, Vec<ExtForm>)> {
        let (e_ann, _) = crate::distribution::symbolic_annihilator(&e)?;
        let theta = e_ann
            .forms()
            .iter()
            .find(|f| {
                f.eval_row(p0)
                    .map(|r| r.iter().any(|c| !num_traits::Zero::is_zero(c)))
                    .unwrap_or(false)
            })
            .cloned()
            .ok_or(Error::NoSymbolicAnnihilator)?;
        let (d_ann, _) = crate::distribution::symbolic_annihilator(d)?;
        // Greedily pick k forms independent of theta at every sample point.
        let mut chosen: Vec<ExtForm> = Vec::new();
        for cand in d_ann.forms() {
            if chosen.len() == k {
                break;
            }
            let mut trial = vec![theta.clone()];
            trial.extend(chosen.iter().cloned());
            trial.push(cand.clone());
            let independent_everywhere = points.iter().all(|p| {
                let rows: std::result::Result<Vec<Row>, _> =
                    trial.iter().map(|f| f.eval_row(p)).collect();
                rows.map(|r| linalg::rank(&r) == trial.len()).unwrap_or(false)
            });
            if independent_everywhere {
                chosen.push(cand.clone());
            }
        }
        if chosen.len() != k {
            return Err(Error::NoSymbolicAnnihilator);
        }
        Ok((theta, chosen))
    })();

    match symbolic_attempt {
        Ok((theta, omegas)) => Ok(DistributionForms {
            theta,
            omegas,
            symbolic: true,
        }),
        Err(_) => {
            // Frozen covectors from the first sample point.
            let e_ann = crate::distribution::annihilator_at(&e, p0)?;
            let theta_row = e_ann.first().ok_or(Error::NoSymbolicAnnihilator)?;
            let theta = row_to_form(&chart, theta_row);
            let d_ann = crate::distribution::annihilator_at(d, p0)?;
            let mut omegas = Vec::new();
            for row in &d_ann {
                if omegas.len() == k {
                    break;
                }
                let mut rows: Vec<Row> = vec![theta_row.clone()];
                rows.extend(omegas.iter().map(|f: &ExtForm| f.eval_row(p0).unwrap()));
                rows.push(row.clone());
                if linalg::rank(&rows) == rows.len() {
                    omegas.push(row_to_form(&chart, row));
                }
            }
            Ok(DistributionForms {
                theta,
                omegas,
                symbolic: false,
            })
        }
    }
}

fn row_to_form(chart: &crate::chart::ChartRef, row: &Row) -> ExtForm {
    let coeffs = row
        .iter()
        .map(|c| crate::poly::PolyScalar::constant(chart, c.clone()))
        .collect();
    ExtForm::one_form(chart, coeffs).expect("row length matches chart")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::Chart;
    use crate::exterior::VectorField;
    use crate::poly::PolyScalar;
    use crate::sample::SamplePlan;

    fn engel_distribution() -> Distribution {
        let ch = Chart::new(["x", "y", "z", "w"]).unwrap();
        let y = PolyScalar::var(&ch, 1);
        let w = PolyScalar::var(&ch, 3);
        let dw = VectorField::coordinate(&ch, 3);
        let z = VectorField::new(
            ch.clone(),
            vec![PolyScalar::one(&ch), w, y, PolyScalar::zero(&ch)],
        )
        .unwrap();
        Distribution::new(ch, vec![dw, z]).unwrap()
    }

    fn engel_forms() -> (ExtForm, Vec<ExtForm>) {
        // theta = dz - y dx, omega = dy - w dx
        let ch = Chart::new(["x", "y", "z", "w"]).unwrap();
        let y = PolyScalar::var(&ch, 1);
        let w = PolyScalar::var(&ch, 3);
        let theta = ExtForm::d_coord(&ch, 2)
            .add(&ExtForm::d_coord(&ch, 0).scale_poly(&(-&y)).unwrap())
            .unwrap();
        let omega = ExtForm::d_coord(&ch, 1)
            .add(&ExtForm::d_coord(&ch, 0).scale_poly(&(-&w)).unwrap())
            .unwrap();
        (theta, vec![omega])
    }

    #[test]
    fn standard_engel_passes_all_conditions() {
        let d = engel_distribution();
        let points = SamplePlan::default().points(d.chart());
        let report = check_generalized_engel(&d, &points).unwrap();
        assert_eq!(report.verdict, Verdict::Pass);
        assert_eq!(report.corank_d, 2);
        assert_eq!(report.corank_e, 1);
        assert_eq!(report.corank_l_in_d, 1);
    }

    #[test]
    fn engel_forms_pass_pfaffian_criteria() {
        let (theta, omegas) = engel_forms();
        let points = SamplePlan::default().points(theta.chart());
        let report = check_pfaffian_criteria(&theta, &omegas, &points).unwrap();
        assert_eq!(report.verdict, Verdict::Pass);
        assert_eq!(report.l, 0);
    }

    #[test]
    fn dtheta_zero_fails_nondegeneracy() {
        // theta = dz, omega = dx on R^4
        let ch = Chart::new(["x", "y", "z", "w"]).unwrap();
        let theta = ExtForm::d_coord(&ch, 2);
        let omega = ExtForm::d_coord(&ch, 0);
        let points = SamplePlan::default().points(&ch);
        let report = check_pfaffian_criteria(&theta, &[omega], &points).unwrap();
        assert!(!report.theta_nondegenerate);
        assert_eq!(report.verdict, Verdict::Fail);
    }

    #[test]
    fn even_k_rejected() {
        let ch = Chart::new(["x", "y", "z", "w", "u", "v"]).unwrap();
        let theta = ExtForm::d_coord(&ch, 2);
        let omegas = vec![ExtForm::d_coord(&ch, 0), ExtForm::d_coord(&ch, 1)];
        let p = vec![RationalPoint::origin(ch)];
        assert!(matches!(
            check_pfaffian_criteria(&theta, &omegas, &p),
            Err(Error::EvenK(2))
        ));
    }

    #[test]
    fn forms_round_trip_to_engel_distribution() {
        let (theta, omegas) = engel_forms();
        let points = SamplePlan::default().points(theta.chart());
        let result = forms_to_distribution(&theta, &omegas, &points).unwrap();
        let d = engel_distribution();
        for (p, kernel) in &result.pointwise {
            let rows = d.eval_rows(p).unwrap();
            assert_eq!(
                linalg::subspace_compare(kernel, &rows),
                SubspaceRelation::Equal
            );
        }
        let sym = result.distribution.expect("symbolic kernel");
        for p in &points {
            let rows = sym.eval_rows(p).unwrap();
            let expect = d.eval_rows(p).unwrap();
            assert_eq!(
                linalg::subspace_compare(&rows, &expect),
                SubspaceRelation::Equal
            );
        }
    }

    #[test]
    fn line_field_to_forms_on_plane() {
        // D = <d_x> on R^2 -> forms {dy}
        let ch = Chart::new(["x", "y"]).unwrap();
        let d = Distribution::new(ch.clone(), vec![VectorField::coordinate(&ch, 0)]).unwrap();
        let points = SamplePlan::default().points(&ch);
        let forms = distribution_to_forms(&d, &points).unwrap();
        // corank 2: one theta, k = 0 omegas; actually on R^2 with rank-1 D,
        // corank is 1 so k = 0 and theta spans the annihilator.
        assert!(forms.omegas.is_empty());
        let row = forms.theta.eval_row(&points[0]).unwrap();
        assert!(num_traits::Zero::is_zero(&row[0]));
        assert!(!num_traits::Zero::is_zero(&row[1]));
    }

    #[test]
    fn scale_invariance_of_pfaffian_verdict() {
        let (theta, omegas) = engel_forms();
        let ch = theta.chart().clone();
        let points = SamplePlan::default().points(&ch);
        let base = check_pfaffian_criteria(&theta, &omegas, &points).unwrap();
        // f = 1 + x^2 is nonvanishing; rescale theta and omega.
        let x = PolyScalar::var(&ch, 0);
        let f = &PolyScalar::one(&ch) + &(&x * &x);
        let theta2 = theta.scale_poly(&f).unwrap();
        let omega2 = omegas[0].scale_poly(&f).unwrap();
        let scaled = check_pfaffian_criteria(&theta2, &[omega2], &points).unwrap();
        assert_eq!(base.verdict, scaled.verdict);
    }
}
