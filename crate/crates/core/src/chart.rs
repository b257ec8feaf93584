//! Coordinate charts and exact rational points on them.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::Rational;

/// Default cap on the total degree of any polynomial coefficient on a chart.
pub const DEFAULT_MAX_DEGREE: u32 = 16;

/// An ordered list of distinct coordinate names. All symbolic objects refer
/// to the chart they live on; operations between objects require the same
/// chart (compared by name list).
#[derive(Debug, PartialEq, Eq)]
pub struct Chart {
    names: Vec<String>,
    max_degree: u32,
}

pub type ChartRef = Arc<Chart>;

impl Chart {
    pub fn new<S: Into<String>>(names: impl IntoIterator<Item = S>) -> Result<ChartRef> {
        Self::with_max_degree(names, DEFAULT_MAX_DEGREE)
    }

    pub fn with_max_degree<S: Into<String>>(
        names: impl IntoIterator<Item = S>,
        max_degree: u32,
    ) -> Result<ChartRef> {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        if names.is_empty() {
            return Err(Error::EmptyChart);
        }
        for (i, n) in names.iter().enumerate() {
            if names[..i].contains(n) {
                return Err(Error::DuplicateCoordinate(n.clone()));
            }
        }
        Ok(Arc::new(Chart { names, max_degree }))
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn max_degree(&self) -> u32 {
        self.max_degree
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, i: usize) -> &str {
        &self.names[i]
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::UnknownCoordinate(name.to_string()))
    }

    /// Chart with one extra coordinate appended (used for time-parametrized
    /// families).
    pub fn extend(&self, extra: &str) -> Result<ChartRef> {
        let mut names = self.names.clone();
        names.push(extra.to_string());
        Chart::with_max_degree(names, self.max_degree)
    }

    pub fn same_as(&self, other: &Chart) -> bool {
        self.names == other.names
    }

    pub fn check_same(&self, other: &Chart) -> Result<()> {
        if self.same_as(other) {
            Ok(())
        } else {
            Err(Error::ChartMismatch {
                expected: self.to_string(),
                found: other.to_string(),
            })
        }
    }
}

impl fmt::Display for Chart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})", self.names.join(", "))
    }
}

/// An exact rational coordinate tuple on a chart; the locus of every
/// pointwise linear-algebra verdict.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RationalPoint {
    chart: ChartRef,
    coords: Vec<Rational>,
}

impl RationalPoint {
    pub fn new(chart: ChartRef, coords: Vec<Rational>) -> Result<Self> {
        if coords.len() != chart.dim() {
            return Err(Error::DimensionMismatch {
                expected: chart.dim(),
                found: coords.len(),
            });
        }
        Ok(RationalPoint { chart, coords })
    }

    pub fn origin(chart: ChartRef) -> Self {
        let coords = vec![Rational::from_integer(0.into()); chart.dim()];
        RationalPoint { chart, coords }
    }

    pub fn from_i64(chart: ChartRef, coords: &[i64]) -> Result<Self> {
        let coords = coords
            .iter()
            .map(|&c| Rational::from_integer(c.into()))
            .collect();
        Self::new(chart, coords)
    }

    pub fn chart(&self) -> &ChartRef {
        &self.chart
    }

    pub fn coords(&self) -> &[Rational] {
        &self.coords
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.coords.iter().map(rational_to_f64).collect()
    }
}

impl fmt::Display for RationalPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .chart
            .names()
            .iter()
            .zip(&self.coords)
            .map(|(n, c)| format!("{n}={c}"))
            .collect();
        write!(f, "({})", parts.join(", "))
    }
}

pub fn rational_to_f64(r: &Rational) -> f64 {
    use num_traits::ToPrimitive;
    r.to_f64().unwrap_or(f64::NAN)
}
