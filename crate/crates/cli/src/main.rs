//! Command-line front end: parse structured documents and expressions,
//! dispatch to the library, and print deterministic text or JSON reports.
//!
//! Exit codes: 0 when the computation succeeded and any verdict is positive,
//! 1 for input errors, 2 when a hypothesis is violated or a verdict is
//! negative.

use std::io::Read;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use engel_core::constructions::{cartan_prolongation, normal_form, paper_fixtures, ExpectedFailure};
use engel_core::distribution::{
    cauchy_characteristic_at, cauchy_characteristic_from_theta, derived_flag, flag_generators,
    Distribution,
};
use engel_core::engel::{check_generalized_engel, check_pfaffian_criteria};
use engel_core::moser::{moser_field_at, verify_stability_pipeline, FlowConfig, PipelineConfig};
use engel_core::sample::SamplePlan;
use engel_core::{lie_bracket, OneParamFamily, RationalPoint};

use engel_cli::doc::{self, format_rational, InputDocument, Kind, ObjectDecl, Params, Resolved};
use engel_cli::{expr, CliError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Args, Debug)]
struct IoArgs {
    /// Input document (JSON). Omitted or '-' reads stdin.
    #[arg(short, long)]
    input: Option<String>,
    /// Inline points: coordinates comma-separated, points ';'-separated.
    #[arg(long)]
    points: Option<String>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    h: Option<f64>,
    #[arg(long)]
    tolerance: Option<f64>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Parser, Debug)]
#[command(name = "engel", version, about = "Distribution flags, Engel-type verdicts, and Moser-flow stability checks")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Lie bracket of the first two vector-field objects.
    Bracket(IoArgs),
    /// Growth vector of the distribution spanned by the vector-field objects.
    Growth(IoArgs),
    /// Cauchy characteristic of a corank-1 distribution.
    Cauchy(IoArgs),
    /// Generalized Engel verdict for the vector-field objects.
    Check(IoArgs),
    /// Pfaffian-form criteria for theta and the remaining 1-forms.
    Pfaffian(IoArgs),
    /// Emit the Cartan prolongation chart as an input document.
    Prolong {
        #[arg(long, default_value_t = 1)]
        n: usize,
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
    /// Emit the adapted-coordinate normal form as an input document.
    NormalForm {
        #[arg(long, default_value_t = 0)]
        l: usize,
        #[arg(long, default_value_t = 0)]
        r: usize,
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
    /// Run the three counterexample fixtures against their expected verdicts.
    Fixtures {
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
    /// Solve the Moser equation exactly at random (t, p) samples.
    MoserVerify(IoArgs),
    /// Two-stage flow verification of a one-parameter family.
    Pipeline(IoArgs),
}

struct Report {
    text: String,
    json: serde_json::Value,
    code: i32,
}

fn read_document(io: &IoArgs) -> Result<InputDocument, CliError> {
    let data = match io.input.as_deref() {
        None | Some("-") => {
            let mut buf = String::new();
            std::io::stdin()
                .read_to_string(&mut buf)
                .map_err(|e| CliError::input(format!("reading stdin: {e}")))?;
            buf
        }
        Some(path) => std::fs::read_to_string(path)
            .map_err(|e| CliError::input(format!("reading {path}: {e}")))?,
    };
    serde_json::from_str(&data).map_err(|e| CliError::input(format!("parsing document: {e}")))
}

fn sample_plan(io: &IoArgs, params: &Params, default_samples: usize) -> SamplePlan {
    let samples = io
        .samples
        .or(params.samples)
        .unwrap_or(default_samples);
    let seed = io
        .seed
        .or(params.seed)
        .unwrap_or(engel_core::sample::DEFAULT_SEED);
    SamplePlan::new(samples, seed)
}

/// Points in priority order: --points, document points, seeded sample.
fn evaluation_points(
    io: &IoArgs,
    res: &Resolved,
    default_samples: usize,
) -> Result<Vec<RationalPoint>, CliError> {
    if let Some(src) = &io.points {
        return doc::parse_inline_points(src, &res.chart);
    }
    if !res.points.is_empty() {
        return Ok(res.points.clone());
    }
    Ok(sample_plan(io, &res.params, default_samples).points(&res.chart))
}

fn distribution_from(res: &Resolved) -> Result<Distribution, CliError> {
    if res.vector_fields.is_empty() {
        return Err(CliError::input("document declares no vector_field objects"));
    }
    Distribution::new(
        res.chart.clone(),
        res.vector_fields.iter().map(|(_, v)| v.clone()).collect(),
    )
    .map_err(|e| CliError::from_core("distribution", e))
}

fn point_string(p: &RationalPoint) -> String {
    let coords: Vec<String> = p.coords().iter().map(format_rational).collect();
    format!("({})", coords.join(", "))
}

fn row_strings(rows: &[Vec<engel_core::Rational>]) -> Vec<Vec<String>> {
    rows.iter()
        .map(|r| r.iter().map(format_rational).collect())
        .collect()
}

fn cmd_bracket(io: &IoArgs) -> Result<Report, CliError> {
    let res = read_document(io)?.resolve()?;
    if res.vector_fields.len() < 2 {
        return Err(CliError::input(
            "bracket needs at least two vector_field objects",
        ));
    }
    let (xn, x) = &res.vector_fields[0];
    let (yn, y) = &res.vector_fields[1];
    let b = lie_bracket(x, y).map_err(|e| CliError::from_core("bracket", e))?;
    let printed = expr::print_vector_field(&b);
    Ok(Report {
        text: format!("[{xn}, {yn}] = {printed}\n"),
        json: json!({"x": xn, "y": yn, "bracket": printed}),
        code: 0,
    })
}

fn cmd_growth(io: &IoArgs) -> Result<Report, CliError> {
    let res = read_document(io)?.resolve()?;
    let d = distribution_from(&res)?;
    let points = evaluation_points(io, &res, engel_core::sample::DEFAULT_SAMPLES)?;
    let max_depth = res.chart.dim() + 1;
    let mut rows = Vec::new();
    let mut text = String::new();
    for p in &points {
        let gv = derived_flag(&d, p, max_depth).map_err(|e| CliError::from_core("growth", e))?;
        text.push_str(&format!("{} -> {:?}\n", point_string(p), gv.ranks));
        rows.push(json!({"point": point_string(p), "ranks": gv.ranks}));
    }
    let regular = {
        let mut it = rows.iter().map(|r| r["ranks"].clone());
        let first = it.next();
        it.all(|r| Some(&r) == first.as_ref())
    };
    text.push_str(&format!("regular on sample: {regular}\n"));
    Ok(Report {
        text,
        json: json!({"growth": rows, "regular": regular}),
        code: 0,
    })
}

fn cmd_cauchy(io: &IoArgs) -> Result<Report, CliError> {
    let res = read_document(io)?.resolve()?;
    let points = evaluation_points(io, &res, engel_core::sample::DEFAULT_SAMPLES)?;
    let mut text = String::new();
    let mut rows = Vec::new();
    for p in &points {
        let l = if !res.vector_fields.is_empty() {
            let e = distribution_from(&res)?;
            cauchy_characteristic_at(&e, p).map_err(|e| CliError::from_core("cauchy", e))?
        } else if let Some((_, theta)) = res.one_forms.first() {
            cauchy_characteristic_from_theta(theta, p)
                .map_err(|e| CliError::from_core("cauchy", e))?
        } else {
            return Err(CliError::input(
                "cauchy needs vector_field objects or a one_form",
            ));
        };
        text.push_str(&format!("{} -> rank {}\n", point_string(p), l.len()));
        rows.push(json!({
            "point": point_string(p),
            "rank": l.len(),
            "basis": row_strings(&l),
        }));
    }
    Ok(Report {
        text,
        json: json!({"cauchy": rows}),
        code: 0,
    })
}

fn cmd_check(io: &IoArgs) -> Result<Report, CliError> {
    let res = read_document(io)?.resolve()?;
    let d = distribution_from(&res)?;
    let points = evaluation_points(io, &res, engel_core::sample::DEFAULT_SAMPLES)?;
    let report =
        check_generalized_engel(&d, &points).map_err(|e| CliError::from_core("check", e))?;
    let mut text = String::new();
    text.push_str(&format!(
        "corank D = {}, corank E = {}, corank of L in D = {}\n",
        report.corank_d, report.corank_e, report.corank_l_in_d
    ));
    for (name, ok) in [
        ("corank(D) even", report.cond_even_corank),
        ("corank(E) = 1", report.cond_e_corank1),
        ("D^3 = TM", report.cond_d3_full),
        ("L in D", report.cond_l_in_d),
        ("corank(L in D) = 1", report.cond_l_corank1_in_d),
    ] {
        text.push_str(&format!("  {name}: {}\n", if ok { "ok" } else { "FAIL" }));
    }
    text.push_str(&format!("verdict: {:?}\n", report.verdict));
    let code = if report.verdict.passed() { 0 } else { 2 };
    Ok(Report {
        text,
        json: serde_json::to_value(&report).expect("report serializes"),
        code,
    })
}

fn cmd_pfaffian(io: &IoArgs) -> Result<Report, CliError> {
    let res = read_document(io)?.resolve()?;
    if res.one_forms.is_empty() {
        return Err(CliError::input("pfaffian needs one_form objects"));
    }
    let theta_idx = res
        .one_forms
        .iter()
        .position(|(n, _)| n == "theta")
        .unwrap_or(0);
    let theta = res.one_forms[theta_idx].1.clone();
    let omegas: Vec<_> = res
        .one_forms
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != theta_idx)
        .map(|(_, (_, f))| f.clone())
        .collect();
    let points = evaluation_points(io, &res, engel_core::sample::DEFAULT_SAMPLES)?;
    let report = check_pfaffian_criteria(&theta, &omegas, &points)
        .map_err(|e| CliError::from_core("pfaffian", e))?;
    let mut text = String::new();
    text.push_str(&format!("k = {}, l = {}\n", report.k, report.l));
    for (name, ok) in [
        ("eta forms independent", report.eta_independent),
        ("omega ^ theta ^ (d theta)^(l+1) = 0", report.omega_theta_vanish),
        ("theta ^ (d theta)^(l+1) != 0", report.theta_nondegenerate),
        ("theta ^ (d theta)^(l+2) = 0", report.theta_degenerate_next),
    ] {
        text.push_str(&format!("  {name}: {}\n", if ok { "ok" } else { "FAIL" }));
    }
    text.push_str(&format!("verdict: {:?}\n", report.verdict));
    let code = if report.verdict.passed() { 0 } else { 2 };
    Ok(Report {
        text,
        json: serde_json::to_value(&report).expect("report serializes"),
        code,
    })
}

fn document_report(doc: &InputDocument, format: Option<Format>) -> Report {
    // these commands emit a document so their output can be piped back in;
    // default format is json
    let json = serde_json::to_value(doc).expect("document serializes");
    let text = match format {
        Some(Format::Text) => {
            let mut t = format!("chart: {}\n", doc.chart.join(", "));
            for o in &doc.objects {
                t.push_str(&format!("{} ({:?}): {}\n", o.name, o.kind, o.expr));
            }
            t
        }
        _ => format!("{}\n", serde_json::to_string_pretty(&json).unwrap()),
    };
    Report {
        text,
        json,
        code: 0,
    }
}

fn cmd_prolong(n: usize, format: Option<Format>) -> Result<Report, CliError> {
    if n == 0 {
        return Err(CliError::input("--n must be at least 1"));
    }
    let pc = cartan_prolongation(n).map_err(|e| CliError::from_core("prolong", e))?;
    let mut objects: Vec<ObjectDecl> = pc
        .d
        .generators()
        .iter()
        .enumerate()
        .map(|(i, g)| ObjectDecl {
            name: format!("g{}", i + 1),
            kind: Kind::VectorField,
            expr: expr::print_vector_field(g),
        })
        .collect();
    objects.push(ObjectDecl {
        name: "theta".to_string(),
        kind: Kind::OneForm,
        expr: expr::print_form(&pc.theta),
    });
    let doc = InputDocument {
        chart: pc.chart.names().to_vec(),
        objects,
        points: vec![],
        params: Params {
            n: Some(n),
            ..Params::default()
        },
    };
    Ok(document_report(&doc, format))
}

fn cmd_normal_form(l: usize, r: usize, format: Option<Format>) -> Result<Report, CliError> {
    let nf = normal_form(l, r).map_err(|e| CliError::from_core("normal-form", e))?;
    let mut objects = vec![ObjectDecl {
        name: "theta".to_string(),
        kind: Kind::OneForm,
        expr: expr::print_form(&nf.theta),
    }];
    for (i, w) in nf.omegas.iter().enumerate() {
        objects.push(ObjectDecl {
            name: format!("omega{}", i + 1),
            kind: Kind::OneForm,
            expr: expr::print_form(w),
        });
    }
    let doc = InputDocument {
        chart: nf.chart.names().to_vec(),
        objects,
        points: vec![],
        params: Params {
            l: Some(l),
            r: Some(r),
            ..Params::default()
        },
    };
    Ok(document_report(&doc, format))
}

fn cmd_fixtures(samples: Option<usize>, seed: Option<u64>) -> Result<Report, CliError> {
    let plan = SamplePlan::new(
        samples.unwrap_or(engel_core::sample::DEFAULT_SAMPLES),
        seed.unwrap_or(engel_core::sample::DEFAULT_SEED),
    );
    let fixtures = paper_fixtures().map_err(|e| CliError::from_core("fixtures", e))?;
    let mut text = String::new();
    let mut rows = Vec::new();
    let mut all_match = true;
    for f in &fixtures {
        let points = plan.points(f.distribution.chart());
        let report = check_generalized_engel(&f.distribution, &points)
            .map_err(|e| CliError::from_core("fixtures", e))?;
        let failed = report.failed_conditions();
        let expected_desc = match f.expected {
            ExpectedFailure::LNotInD => "L in D".to_string(),
            ExpectedFailure::LCorank(c) => format!("corank(L in D) = 1 (actual corank {c})"),
        };
        let matched = match f.expected {
            ExpectedFailure::LNotInD => failed == vec!["L in D"],
            ExpectedFailure::LCorank(c) => {
                failed == vec!["corank(L in D) = 1"] && report.corank_l_in_d == c
            }
        };
        // Cauchy rank of E = D^2 on the sample
        let levels = flag_generators(&f.distribution, 2)
            .map_err(|e| CliError::from_core("fixtures", e))?;
        let e = Distribution::new(f.distribution.chart().clone(), levels[1].clone())
            .map_err(|e| CliError::from_core("fixtures", e))?;
        let mut cauchy_ok = true;
        for p in &points {
            let l =
                cauchy_characteristic_at(&e, p).map_err(|e| CliError::from_core("fixtures", e))?;
            if l.len() != f.cauchy_rank {
                cauchy_ok = false;
            }
        }
        all_match &= matched && cauchy_ok;
        text.push_str(&format!(
            "fixture ({}): expected failure [{expected_desc}], got {failed:?}, cauchy rank {} -> {}\n",
            f.name,
            f.cauchy_rank,
            if matched && cauchy_ok { "ok" } else { "MISMATCH" }
        ));
        rows.push(json!({
            "name": f.name,
            "expected": expected_desc,
            "failed_conditions": failed,
            "corank_l_in_d": report.corank_l_in_d,
            "cauchy_rank": f.cauchy_rank,
            "cauchy_rank_matches": cauchy_ok,
            "matched": matched,
        }));
    }
    text.push_str(&format!(
        "all fixtures match: {}\n",
        if all_match { "yes" } else { "no" }
    ));
    Ok(Report {
        text,
        json: json!({"fixtures": rows, "all_match": all_match}),
        code: if all_match { 0 } else { 2 },
    })
}

fn family_from(res: &Resolved) -> Result<OneParamFamily, CliError> {
    if res.family_forms.is_empty() {
        return Err(CliError::input("document declares no family objects"));
    }
    let theta_idx = res
        .family_forms
        .iter()
        .position(|(n, _)| n == "theta")
        .unwrap_or(0);
    let theta = res.family_forms[theta_idx].1.clone();
    let omegas: Vec<_> = res
        .family_forms
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != theta_idx)
        .map(|(_, (_, f))| f.clone())
        .collect();
    OneParamFamily::new(res.chart.clone(), theta, omegas)
        .map_err(|e| CliError::from_core("family", e))
}

fn cmd_moser_verify(io: &IoArgs) -> Result<Report, CliError> {
    let res = read_document(io)?.resolve()?;
    let fam = family_from(&res)?;
    let plan = sample_plan(io, &res.params, 20);
    let mut rng = plan.rng();
    let mut text = String::new();
    let mut rows = Vec::new();
    let mut all_ok = true;
    for _ in 0..plan.samples {
        let t = SamplePlan::unit_rational(&mut rng);
        let p = SamplePlan::point_from_rng(&res.chart, &mut rng);
        let sol = moser_field_at(&fam, &t, &p).map_err(|e| CliError::from_core("moser", e))?;
        let ok = sol.residual_zero && sol.constraint_ok;
        all_ok &= ok;
        let xs: Vec<String> = sol.x.iter().map(format_rational).collect();
        text.push_str(&format!(
            "t = {}, p = {} -> X = ({}), residual zero: {}, in L: {}\n",
            format_rational(&t),
            point_string(&p),
            xs.join(", "),
            sol.residual_zero,
            sol.constraint_ok
        ));
        rows.push(json!({
            "t": format_rational(&t),
            "point": point_string(&p),
            "x": xs,
            "residual_zero": sol.residual_zero,
            "in_l": sol.constraint_ok,
        }));
    }
    text.push_str(&format!("all samples exact: {all_ok}\n"));
    Ok(Report {
        text,
        json: json!({"samples": rows, "all_exact": all_ok}),
        code: if all_ok { 0 } else { 2 },
    })
}

fn cmd_pipeline(io: &IoArgs) -> Result<Report, CliError> {
    let res = read_document(io)?.resolve()?;
    let fam = family_from(&res)?;
    let points = if let Some(src) = &io.points {
        doc::parse_inline_points(src, &res.chart)?
    } else {
        res.points.clone()
    };
    let Some(p0) = points.first() else {
        return Err(CliError::input("pipeline needs a start point"));
    };
    let p0: Vec<f64> = p0.to_f64();
    let mut cfg = PipelineConfig::default();
    if let Some(steps) = io.steps.or(res.params.steps) {
        cfg.steps = steps;
    }
    if let Some(h) = io.h.or(res.params.h) {
        cfg.direct = FlowConfig {
            h,
            ..FlowConfig::default()
        };
    }
    let tol = io.tolerance.or(res.params.tolerance).unwrap_or(1e-4);
    let pv = verify_stability_pipeline(&fam, &p0, &cfg)
        .map_err(|e| CliError::from_core("pipeline", e))?;
    let ok = !pv.flow.truncated && pv.flow.max_angle_d <= tol;
    let fp: Vec<String> = pv
        .flow
        .final_point
        .iter()
        .map(|c| format!("{c:.8e}"))
        .collect();
    let text = format!(
        "stage 1 trivial: {}\nmax angle D: {:.3e}\nmax angle E: {:.3e}\nmax angle L: {:.3e}\nfinal point: ({})\ntruncated: {}\nwithin tolerance {tol:.1e}: {}\n",
        pv.stage1_trivial,
        pv.flow.max_angle_d,
        pv.flow.max_angle_e,
        pv.flow.max_angle_l,
        fp.join(", "),
        pv.flow.truncated,
        ok
    );
    Ok(Report {
        text,
        json: json!({
            "stage1_trivial": pv.stage1_trivial,
            "max_angle_d": pv.flow.max_angle_d,
            "max_angle_e": pv.flow.max_angle_e,
            "max_angle_l": pv.flow.max_angle_l,
            "final_point": pv.flow.final_point,
            "truncated": pv.flow.truncated,
            "tolerance": tol,
            "ok": ok,
        }),
        code: if ok { 0 } else { 2 },
    })
}

fn run(cli: Cli) -> Result<(Report, Option<Format>), CliError> {
    match &cli.cmd {
        Cmd::Bracket(io) => Ok((cmd_bracket(io)?, io.format)),
        Cmd::Growth(io) => Ok((cmd_growth(io)?, io.format)),
        Cmd::Cauchy(io) => Ok((cmd_cauchy(io)?, io.format)),
        Cmd::Check(io) => Ok((cmd_check(io)?, io.format)),
        Cmd::Pfaffian(io) => Ok((cmd_pfaffian(io)?, io.format)),
        Cmd::Prolong { n, format } => Ok((cmd_prolong(*n, *format)?, Some(Format::Text))),
        Cmd::NormalForm { l, r, format } => {
            Ok((cmd_normal_form(*l, *r, *format)?, Some(Format::Text)))
        }
        Cmd::Fixtures {
            samples,
            seed,
            format,
        } => Ok((cmd_fixtures(*samples, *seed)?, *format)),
        Cmd::MoserVerify(io) => Ok((cmd_moser_verify(io)?, io.format)),
        Cmd::Pipeline(io) => Ok((cmd_pipeline(io)?, io.format)),
    }
}

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok((report, format)) => {
            match format {
                Some(Format::Json) => {
                    println!(
                        "{}",
                        serde_json::to_string_pretty(&report.json).expect("json prints")
                    );
                }
                _ => print!("{}", report.text),
            }
            std::process::exit(report.code);
        }
        Err(e) => {
            eprintln!("error: {}", e.message);
            std::process::exit(e.code);
        }
    }
}
