//! Dimensions, dimensioned variables and the plain-text variable table format.
//!
//! A table file holds an optional `dimensions:` declaration followed by one
//! `name | dimension | description` record per line:
//!
//! ```text
//! # homogeneous turbulence
//! dimensions: L T
//! L0  | L        | driving length scale
//! eta | L        | dissipation length scale
//! U   | L T^-1   | bulk (driving) flow speed
//! nu  | L^2 T^-1 | viscosity
//! ```
//!
//! Dimension strings are space- or `*`-separated factors `NAME` or
//! `NAME^EXP` with integer or `p/q` exponents; `1` or `-` means dimensionless.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use num_rational::Ratio;
use num_traits::{One, Zero};

use crate::error::{Error, Result};

pub type Rational = Ratio<i128>;

/// Exponents of base dimensions. Zero exponents are never stored.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Dimension {
    exponents: BTreeMap<String, Rational>,
}

impl Dimension {
    pub fn dimensionless() -> Self {
        Self::default()
    }

    pub fn from_pairs<S: Into<String>>(pairs: impl IntoIterator<Item = (S, Rational)>) -> Self {
        let mut d = Dimension::default();
        for (name, e) in pairs {
            d.add(name.into(), e);
        }
        d
    }

    /// Integer-exponent shorthand, e.g. `Dimension::of(&[("L", 2), ("T", -1)])`.
    pub fn of(pairs: &[(&str, i64)]) -> Self {
        Self::from_pairs(pairs.iter().map(|&(n, e)| (n, Rational::from_integer(e as i128))))
    }

    fn add(&mut self, name: String, e: Rational) {
        let entry = self.exponents.entry(name).or_insert_with(Rational::zero);
        *entry += e;
        if entry.is_zero() {
            self.exponents.retain(|_, v| !v.is_zero());
        }
    }

    pub fn exponent(&self, base: &str) -> Rational {
        self.exponents.get(base).copied().unwrap_or_else(Rational::zero)
    }

    pub fn is_dimensionless(&self) -> bool {
        self.exponents.is_empty()
    }

    pub fn bases(&self) -> impl Iterator<Item = &str> {
        self.exponents.keys().map(String::as_str)
    }

    pub fn parse(s: &str) -> std::result::Result<Self, String> {
        let s = s.trim();
        if s.is_empty() || s == "1" || s == "-" {
            return Ok(Dimension::dimensionless());
        }
        let mut d = Dimension::default();
        for factor in s.split(|c: char| c.is_whitespace() || c == '*' || c == '·').filter(|f| !f.is_empty()) {
            let (name, exp) = match factor.split_once('^') {
                Some((n, e)) => (n, parse_rational(e)?),
                None => (factor, Rational::one()),
            };
            if !is_identifier(name) {
                return Err(format!("bad base dimension name {name:?}"));
            }
            d.add(name.to_string(), exp);
        }
        Ok(d)
    }
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_alphabetic() || c == '_')
        && chars.all(|c| c.is_alphanumeric() || c == '_')
}

pub fn parse_rational(s: &str) -> std::result::Result<Rational, String> {
    let t = s.trim().trim_start_matches('(').trim_end_matches(')');
    let bad = || format!("bad exponent {s:?}");
    match t.split_once('/') {
        Some((n, d)) => {
            let n: i128 = n.trim().parse().map_err(|_| bad())?;
            let d: i128 = d.trim().parse().map_err(|_| bad())?;
            if d == 0 {
                return Err(bad());
            }
            Ok(Rational::new(n, d))
        }
        None => t.parse::<i128>().map(Rational::from_integer).map_err(|_| bad()),
    }
}

pub(crate) fn fmt_rational(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.exponents.is_empty() {
            return f.write_str("1");
        }
        let parts: Vec<String> = self
            .exponents
            .iter()
            .map(|(n, e)| if e.is_one() { n.clone() } else { format!("{n}^{}", fmt_rational(e)) })
            .collect();
        f.write_str(&parts.join(" "))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DimensionedVariable {
    pub name: String,
    pub dimension: Dimension,
    pub description: String,
}

impl DimensionedVariable {
    pub fn new(name: impl Into<String>, dimension: Dimension, description: impl Into<String>) -> Self {
        DimensionedVariable {
            name: name.into(),
            dimension,
            description: description.into(),
        }
    }
}

/// A variable table with its set of base dimensions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VariableTable {
    bases: Vec<String>,
    variables: Vec<DimensionedVariable>,
}

impl VariableTable {
    /// Builds a table whose base dimensions are those the variables use, in
    /// order of first appearance.
    pub fn new(variables: Vec<DimensionedVariable>) -> Result<Self> {
        let mut bases: Vec<String> = Vec::new();
        for v in &variables {
            for b in v.dimension.bases() {
                if !bases.iter().any(|x| x == b) {
                    bases.push(b.to_string());
                }
            }
        }
        Self::with_bases(bases, variables)
    }

    pub fn with_bases(bases: Vec<String>, variables: Vec<DimensionedVariable>) -> Result<Self> {
        let mut seen = HashSet::new();
        for b in &bases {
            if !is_identifier(b) {
                return Err(Error::Config(format!("bad base dimension name {b:?}")));
            }
            if !seen.insert(b.as_str()) {
                return Err(Error::Config(format!("base dimension {b} declared twice")));
            }
        }
        let mut names = HashSet::new();
        for v in &variables {
            if !names.insert(v.name.as_str()) {
                return Err(Error::Config(format!("variable {} listed twice", v.name)));
            }
            if let Some(b) = v.dimension.bases().find(|b| !seen.contains(b)) {
                return Err(Error::Config(format!(
                    "variable {} uses undeclared base dimension {b}",
                    v.name
                )));
            }
        }
        Ok(VariableTable { bases, variables })
    }

    pub fn bases(&self) -> &[String] {
        &self.bases
    }

    pub fn variables(&self) -> &[DimensionedVariable] {
        &self.variables
    }

    pub fn len(&self) -> usize {
        self.variables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variables.is_empty()
    }

    /// W×V matrix of exponents: one row per base dimension, one column per variable.
    pub fn dimension_matrix(&self) -> Vec<Vec<Rational>> {
        self.bases
            .iter()
            .map(|b| self.variables.iter().map(|v| v.dimension.exponent(b)).collect())
            .collect()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut declared: Option<Vec<String>> = None;
        let mut vars = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix("dimensions:") {
                if declared.is_some() {
                    return Err(Error::Table { line: line_no, msg: "dimensions declared twice".into() });
                }
                declared = Some(
                    rest.split(|c: char| c.is_whitespace() || c == ',')
                        .filter(|s| !s.is_empty())
                        .map(str::to_string)
                        .collect(),
                );
                continue;
            }
            let fields: Vec<&str> = line.splitn(3, '|').map(str::trim).collect();
            if fields.len() < 2 {
                return Err(Error::Table {
                    line: line_no,
                    msg: "expected `name | dimension | description`".into(),
                });
            }
            if !is_identifier(fields[0]) {
                return Err(Error::Table { line: line_no, msg: format!("bad variable name {:?}", fields[0]) });
            }
            let dimension = Dimension::parse(fields[1]).map_err(|msg| Error::Table { line: line_no, msg })?;
            vars.push(DimensionedVariable::new(fields[0], dimension, fields.get(2).copied().unwrap_or("")));
        }
        match declared {
            Some(bases) => Self::with_bases(bases, vars),
            None => Self::new(vars),
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("dimensions: {}\n", self.bases.join(" "));
        for v in &self.variables {
            out.push_str(&format!("{} | {} | {}\n", v.name, v.dimension, v.description));
        }
        out
    }
}
