//! Structured input documents: a chart, named expressions, optional rational
//! points, and task parameters. All numbers are strings parsed as exact
//! rationals so the symbolic layer never sees floats.

use engel_core::{Chart, ChartRef, ExtForm, OneParamFamily, Rational, RationalPoint, VectorField};
use num_bigint::BigInt;
use serde::{Deserialize, Serialize};

use crate::expr;
use crate::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InputDocument {
    pub chart: Vec<String>,
    #[serde(default)]
    pub objects: Vec<ObjectDecl>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub points: Vec<Vec<String>>,
    #[serde(default, skip_serializing_if = "Params::is_empty")]
    pub params: Params,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ObjectDecl {
    pub name: String,
    pub kind: Kind,
    pub expr: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    VectorField,
    OneForm,
    Family,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Params {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub l: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
}

impl Params {
    pub fn is_empty(&self) -> bool {
        self.l.is_none()
            && self.r.is_none()
            && self.n.is_none()
            && self.steps.is_none()
            && self.h.is_none()
            && self.seed.is_none()
            && self.samples.is_none()
            && self.tolerance.is_none()
    }
}

pub fn parse_rational(s: &str) -> Result<Rational, CliError> {
    let s = s.trim();
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s),
    };
    let (num, den) = match body.split_once('/') {
        Some((n, d)) => (n, d),
        None => (body, "1"),
    };
    let n: BigInt = num
        .parse()
        .map_err(|_| CliError::input(format!("invalid rational '{s}'")))?;
    let d: BigInt = den
        .parse()
        .map_err(|_| CliError::input(format!("invalid rational '{s}'")))?;
    if d == BigInt::from(0) {
        return Err(CliError::input(format!("zero denominator in '{s}'")));
    }
    let r = Rational::new(n, d);
    Ok(if neg { -r } else { r })
}

pub fn format_rational(r: &Rational) -> String {
    use num_traits::One;
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// A document with its expressions resolved against the chart.
pub struct Resolved {
    pub chart: ChartRef,
    pub vector_fields: Vec<(String, VectorField)>,
    pub one_forms: Vec<(String, ExtForm)>,
    pub family_forms: Vec<(String, ExtForm)>,
    pub points: Vec<RationalPoint>,
    pub params: Params,
}

impl InputDocument {
    pub fn resolve(&self) -> Result<Resolved, CliError> {
        if self.chart.is_empty() {
            return Err(CliError::input("document declares an empty chart"));
        }
        let chart = Chart::new(self.chart.iter().map(|s| s.as_str()))
            .map_err(|e| CliError::input(e.to_string()))?;
        let ext_chart = OneParamFamily::parameter_chart(&chart)
            .map_err(|e| CliError::input(e.to_string()))?;
        let mut vector_fields = Vec::new();
        let mut one_forms = Vec::new();
        let mut family_forms = Vec::new();
        for obj in &self.objects {
            match obj.kind {
                Kind::VectorField => {
                    let v = expr::parse_vector_field(&obj.expr, &chart)
                        .map_err(|e| CliError::input(format!("object '{}': {e}", obj.name)))?;
                    vector_fields.push((obj.name.clone(), v));
                }
                Kind::OneForm => {
                    let f = expr::parse_one_form(&obj.expr, &chart)
                        .map_err(|e| CliError::input(format!("object '{}': {e}", obj.name)))?;
                    one_forms.push((obj.name.clone(), f));
                }
                Kind::Family => {
                    let f = expr::parse_one_form(&obj.expr, &ext_chart)
                        .map_err(|e| CliError::input(format!("object '{}': {e}", obj.name)))?;
                    family_forms.push((obj.name.clone(), f));
                }
            }
        }
        let mut points = Vec::new();
        for (i, coords) in self.points.iter().enumerate() {
            if coords.len() != chart.dim() {
                return Err(CliError::input(format!(
                    "point {i} has {} coordinates, chart has {}",
                    coords.len(),
                    chart.dim()
                )));
            }
            let vals = coords
                .iter()
                .map(|s| parse_rational(s))
                .collect::<Result<Vec<_>, _>>()?;
            points.push(
                RationalPoint::new(chart.clone(), vals)
                    .map_err(|e| CliError::input(e.to_string()))?,
            );
        }
        Ok(Resolved {
            chart,
            vector_fields,
            one_forms,
            family_forms,
            points,
            params: self.params.clone(),
        })
    }
}

/// Parse an inline `--points` override: points separated by ';', coordinates
/// by ','.
pub fn parse_inline_points(src: &str, chart: &ChartRef) -> Result<Vec<RationalPoint>, CliError> {
    let mut out = Vec::new();
    for chunk in src.split(';').filter(|c| !c.trim().is_empty()) {
        let vals = chunk
            .split(',')
            .map(parse_rational)
            .collect::<Result<Vec<_>, _>>()?;
        if vals.len() != chart.dim() {
            return Err(CliError::input(format!(
                "inline point '{chunk}' has {} coordinates, chart has {}",
                vals.len(),
                chart.dim()
            )));
        }
        out.push(
            RationalPoint::new(chart.clone(), vals).map_err(|e| CliError::input(e.to_string()))?,
        );
    }
    if out.is_empty() {
        return Err(CliError::input("--points parsed to an empty list"));
    }
    Ok(out)
}
