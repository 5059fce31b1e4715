//! Dimensionless groups as the nullspace of the dimension matrix.

use std::fmt;

use num_integer::Integer;
use num_traits::Zero;

use super::dimension::{DimensionedVariable, Rational, VariableTable};
use crate::error::{Error, Result};

/// A monomial `Π = Q_1^{e_1} ... Q_V^{e_V}` of zero total dimension.
///
/// Canonical form: integer exponents with collective gcd 1, first nonzero
/// exponent (in table order) positive.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PiGroup {
    /// Variable names in table order, parallel to `exponents`.
    names: Vec<String>,
    exponents: Vec<i64>,
    pub label: Option<String>,
}

impl PiGroup {
    /// Builds a canonical group from rational exponents over the table's variables.
    pub fn from_rational(names: Vec<String>, exponents: &[Rational]) -> Result<Self> {
        assert_eq!(names.len(), exponents.len());
        let lcm = exponents.iter().fold(1i128, |acc, e| acc.lcm(e.denom()));
        let ints: Vec<i128> = exponents.iter().map(|e| (e * lcm).to_integer()).collect();
        Self::from_integers(names, &ints)
    }

    pub fn from_integers(names: Vec<String>, exponents: &[i128]) -> Result<Self> {
        assert_eq!(names.len(), exponents.len());
        let gcd = exponents.iter().fold(0i128, |acc, e| acc.gcd(e));
        if gcd == 0 {
            return Err(Error::Domain("zero exponent vector is not a group".into()));
        }
        let sign = exponents.iter().find(|e| **e != 0).map_or(1, |e| e.signum());
        let exponents = exponents
            .iter()
            .map(|e| i64::try_from(e / gcd * sign).map_err(|_| Error::Domain("group exponent overflow".into())))
            .collect::<Result<Vec<_>>>()?;
        Ok(PiGroup { names, exponents, label: None })
    }

    /// Canonicalizes a group written over a subset of the table, e.g.
    /// `h / eps` as `[("h", 1), ("eps", -1)]`.
    pub fn from_terms(table: &VariableTable, terms: &[(&str, i64)]) -> Result<Self> {
        let names: Vec<String> = table.variables().iter().map(|v| v.name.clone()).collect();
        let mut ex = vec![0i128; names.len()];
        for &(n, e) in terms {
            let i = names
                .iter()
                .position(|x| x == n)
                .ok_or_else(|| Error::Config(format!("unknown variable {n}")))?;
            ex[i] += e as i128;
        }
        Self::from_integers(names, &ex)
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    /// Exponent vector in table order.
    pub fn exponents(&self) -> &[i64] {
        &self.exponents
    }

    pub fn exponent(&self, name: &str) -> i64 {
        self.names.iter().position(|n| n == name).map_or(0, |i| self.exponents[i])
    }

    /// Nonzero `(variable, exponent)` pairs in table order.
    pub fn terms(&self) -> impl Iterator<Item = (&str, i64)> {
        self.names
            .iter()
            .zip(&self.exponents)
            .filter(|(_, e)| **e != 0)
            .map(|(n, e)| (n.as_str(), *e))
    }

    /// Evaluates the group for numeric variable values given in table order.
    pub fn evaluate(&self, values: &[f64]) -> f64 {
        self.exponents
            .iter()
            .zip(values)
            .map(|(&e, &v)| v.powi(e as i32))
            .product()
    }

    /// Total dimension of the monomial; zero for a valid group.
    pub fn residual_dimension(&self, variables: &[DimensionedVariable], bases: &[String]) -> Vec<Rational> {
        bases
            .iter()
            .map(|b| {
                variables
                    .iter()
                    .zip(&self.exponents)
                    .map(|(v, &e)| v.dimension.exponent(b) * Rational::from_integer(e as i128))
                    .fold(Rational::zero(), |a, x| a + x)
            })
            .collect()
    }
}

impl fmt::Display for PiGroup {
    /// Product form, e.g. `L0^1 U^1 nu^-1`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.terms().map(|(n, e)| format!("{n}^{e}")).collect();
        f.write_str(&parts.join(" "))
    }
}

/// Reduced row echelon form over the rationals. Pivots are taken column by
/// column in order; returns the pivot column of each nonzero row.
fn row_reduce(m: &mut [Vec<Rational>]) -> Vec<usize> {
    let rows = m.len();
    let cols = m.first().map_or(0, Vec::len);
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(r, p);
        let lead = m[r][c];
        for x in m[r].iter_mut() {
            *x /= lead;
        }
        for i in 0..rows {
            if i != r && !m[i][c].is_zero() {
                let factor = m[i][c];
                for j in 0..cols {
                    let delta = factor * m[r][j];
                    m[i][j] -= delta;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

pub fn matrix_rank(m: &[Vec<Rational>]) -> usize {
    let mut work = m.to_vec();
    row_reduce(&mut work).len()
}

/// Dimensionless groups spanning the nullspace of the table's dimension
/// matrix: `V - rank` groups, one per free variable (free variables taken in
/// table order), canonicalized and sorted by exponent vector.
pub fn compute_pi_groups(table: &VariableTable) -> Result<Vec<PiGroup>> {
    if table.is_empty() {
        return Err(Error::NoVariables);
    }
    let names: Vec<String> = table.variables().iter().map(|v| v.name.clone()).collect();
    let v = names.len();
    let mut m = table.dimension_matrix();
    let pivots = row_reduce(&mut m);
    let mut groups = Vec::with_capacity(v - pivots.len());
    for free in (0..v).filter(|c| !pivots.contains(c)) {
        let mut ex = vec![Rational::zero(); v];
        ex[free] = Rational::from_integer(1);
        for (row, &p) in pivots.iter().enumerate() {
            ex[p] = -m[row][free];
        }
        groups.push(PiGroup::from_rational(names.clone(), &ex)?);
    }
    groups.sort_by(|a, b| a.exponents.cmp(&b.exponents));
    Ok(groups)
}

/// Convenience wrapper for a bare list of variables.
pub fn pi_groups_of(variables: Vec<DimensionedVariable>) -> Result<Vec<PiGroup>> {
    if variables.is_empty() {
        return Err(Error::NoVariables);
    }
    compute_pi_groups(&VariableTable::new(variables)?)
}

/// True when both group lists span the same rational subspace of exponent
/// vectors over the same variables (compared by variable name).
pub fn same_span(a: &[PiGroup], b: &[PiGroup], names: &[String]) -> bool {
    let to_rows = |gs: &[PiGroup]| -> Vec<Vec<Rational>> {
        gs.iter()
            .map(|g| names.iter().map(|n| Rational::from_integer(g.exponent(n) as i128)).collect())
            .collect()
    };
    let (ra, rb) = (to_rows(a), to_rows(b));
    let rank_a = matrix_rank(&ra);
    let rank_b = matrix_rank(&rb);
    let mut both = ra;
    both.extend(rb);
    rank_a == rank_b && matrix_rank(&both) == rank_a
}
