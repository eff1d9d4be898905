//! Coefficient tables of the cleared-denominator curvature expansions.
//!
//! The tables are stored as an expanded term list, one term per line:
//! `table k coefficient monomial [suspect]`, where the monomial is a
//! `*`-separated product of `slot` or `slot^e` factors, or `1`. The data file
//! is compiled in and pinned by its SHA-256 digest.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::bundle::InvariantBundle;
use super::slots::Slot;
use crate::error::{Error, Result};

/// The term list as shipped.
pub const TERM_DATA: &str = include_str!("../../data/expansion_terms.v1.txt");

/// SHA-256 of [`TERM_DATA`].
pub const TERM_DATA_SHA256: &str =
    "e176ab8f29ce207a714932c2a9f02c4b333163fa0db6e8655982e95467cd39ee";

/// Hex SHA-256 digest of a byte string.
pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Table {
    /// Riemann curvature expansion
    T,
    /// Ricci curvature expansion
    D,
    /// Ricci expansion under reversibility
    DPrime,
    /// the previous one after the conformal substitution
    DDoublePrime,
    /// Riemann expansion under reversibility, conformal substitution applied
    TPrime,
    /// weakly Einstein condition
    A,
    /// weakly Einstein condition, conformal substitution applied
    APrime,
}

impl Table {
    pub const ALL: [Table; 7] = [
        Table::T,
        Table::D,
        Table::DPrime,
        Table::DDoublePrime,
        Table::TPrime,
        Table::A,
        Table::APrime,
    ];

    /// Tag used in the data file.
    pub fn tag(self) -> &'static str {
        match self {
            Table::T => "t",
            Table::D => "d",
            Table::DPrime => "dp",
            Table::DDoublePrime => "dpp",
            Table::TPrime => "tp",
            Table::A => "A",
            Table::APrime => "Ap",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Table> {
        Table::ALL.into_iter().find(|t| t.tag() == tag)
    }

    /// Display label with primes.
    pub fn label(self) -> &'static str {
        match self {
            Table::T => "t",
            Table::D => "d",
            Table::DPrime => "d'",
            Table::DDoublePrime => "d''",
            Table::TPrime => "t'",
            Table::A => "A",
            Table::APrime => "A'",
        }
    }

    /// Degree in `y` shared by `c_k α^k` for every `k`.
    pub fn total_degree(self) -> u32 {
        match self {
            Table::T | Table::A => 13,
            Table::D | Table::DPrime | Table::APrime => 11,
            Table::DDoublePrime | Table::TPrime => 9,
        }
    }

    /// Whether `k` lies in the declared index range.
    pub fn in_range(self, k: usize) -> bool {
        match self {
            Table::T | Table::A | Table::TPrime => k <= 13,
            Table::D => k <= 11,
            Table::DPrime | Table::APrime => k <= 10 && k.is_multiple_of(2),
            Table::DDoublePrime => k <= 8 && k.is_multiple_of(2),
        }
    }

    pub fn indices(self) -> impl Iterator<Item = usize> {
        (0..=13).filter(move |k| self.in_range(*k))
    }
}

impl fmt::Display for Table {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Why a term is not trusted.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuspectReasons {
    /// reads a token with no definition
    pub undefined: bool,
    /// carries an odd power of `b = √(b²)`
    pub odd_b: bool,
    /// its degree in `y` disagrees with the rest of its coefficient
    pub degree: bool,
    /// flagged by hand in the data file
    pub marked: bool,
}

impl SuspectReasons {
    pub fn any(&self) -> bool {
        self.undefined || self.odd_b || self.degree || self.marked
    }
}

/// `coefficient · Π slot^exponent`
#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub coefficient: f64,
    pub factors: Vec<(Slot, i32)>,
    pub suspect: SuspectReasons,
}

impl Term {
    /// Degree in `y`, or `None` when an undefined token appears.
    pub fn degree(&self) -> Option<i64> {
        self.factors
            .iter()
            .map(|(s, e)| s.degree().map(|d| d as i64 * *e as i64))
            .sum()
    }

    pub fn eval(&self, bundle: &InvariantBundle) -> f64 {
        self.factors
            .iter()
            .fold(self.coefficient, |acc, (s, e)| acc * bundle.power(*s, *e))
    }

    fn classify(&mut self, expected_degree: Option<i64>) {
        self.suspect.undefined = self.factors.iter().any(|(s, _)| s.is_undefined());
        self.suspect.odd_b = self
            .factors
            .iter()
            .any(|(s, e)| *s == Slot::B && e % 2 != 0);
        self.suspect.degree = match (self.degree(), expected_degree) {
            (Some(d), Some(want)) => d != want,
            _ => false,
        };
    }

    /// Monomial in data-file syntax.
    pub fn monomial(&self) -> String {
        if self.factors.is_empty() {
            return "1".into();
        }
        self.factors
            .iter()
            .map(|(s, e)| {
                if *e == 1 {
                    s.name().to_string()
                } else {
                    format!("{}^{e}", s.name())
                }
            })
            .collect::<Vec<_>>()
            .join("*")
    }
}

/// All seven tables, keyed by `(table, k)`. Missing keys were not printed.
#[derive(Debug, Clone)]
pub struct TermTables {
    entries: BTreeMap<(Table, usize), Vec<Term>>,
}

fn parse_rational(text: &str) -> Option<f64> {
    match text.split_once('/') {
        Some((p, q)) => Some(p.parse::<i64>().ok()? as f64 / q.parse::<i64>().ok()? as f64),
        None => Some(text.parse::<i64>().ok()? as f64),
    }
}

fn parse_monomial(text: &str) -> std::result::Result<Vec<(Slot, i32)>, String> {
    if text == "1" {
        return Ok(Vec::new());
    }
    text.split('*')
        .map(|f| {
            let (name, exp) = match f.split_once('^') {
                Some((n, e)) => (
                    n,
                    e.parse::<i32>()
                        .map_err(|_| format!("bad exponent in '{f}'"))?,
                ),
                None => (f, 1),
            };
            let slot = Slot::from_name(name).ok_or_else(|| format!("unknown slot '{name}'"))?;
            Ok((slot, exp))
        })
        .collect()
}

impl TermTables {
    /// Parse a term list without checking its digest.
    pub fn parse(text: &str) -> Result<TermTables> {
        let mut entries: BTreeMap<(Table, usize), Vec<Term>> = BTreeMap::new();
        let mut saw_schema = false;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                if comment.trim() == "schema: v1" {
                    saw_schema = true;
                }
                continue;
            }
            let err = |m: String| Error::TermData(format!("line {}: {m}", lineno + 1));
            let cols: Vec<&str> = line.split_whitespace().collect();
            if cols.len() != 4 && cols.len() != 5 {
                return Err(err(format!(
                    "expected 4 or 5 columns, found {}",
                    cols.len()
                )));
            }
            let table = Table::from_tag(cols[0])
                .ok_or_else(|| err(format!("unknown table '{}'", cols[0])))?;
            let k: usize = cols[1]
                .parse()
                .map_err(|_| err(format!("bad index '{}'", cols[1])))?;
            if !table.in_range(k) {
                return Err(err(format!("{table}_{k} outside the declared range")));
            }
            let coefficient = parse_rational(cols[2])
                .ok_or_else(|| err(format!("bad coefficient '{}'", cols[2])))?;
            let factors = parse_monomial(cols[3]).map_err(err)?;
            let marked = match cols.get(4) {
                None => false,
                Some(&"suspect") => true,
                Some(other) => return Err(err(format!("unknown flag '{other}'"))),
            };
            let mut term = Term {
                coefficient,
                factors,
                suspect: SuspectReasons {
                    marked,
                    ..Default::default()
                },
            };
            term.classify(Some(table.total_degree() as i64 - k as i64));
            entries.entry((table, k)).or_default().push(term);
        }
        if !saw_schema {
            return Err(Error::TermData("missing '# schema: v1' header".into()));
        }
        Ok(TermTables { entries })
    }

    /// The compiled-in tables after checking the pinned digest.
    pub fn load() -> Result<TermTables> {
        let digest = sha256_hex(TERM_DATA.as_bytes());
        if digest != TERM_DATA_SHA256 {
            return Err(Error::TermData(format!(
                "checksum mismatch: expected {TERM_DATA_SHA256}, found {digest}"
            )));
        }
        TermTables::parse(TERM_DATA)
    }

    /// Terms of one coefficient.
    pub fn terms(&self, table: Table, k: usize) -> Result<&[Term]> {
        if !table.in_range(k) {
            return Err(Error::IndexOutOfRange {
                table: table.label(),
                k,
            });
        }
        self.entries
            .get(&(table, k))
            .map(Vec::as_slice)
            .ok_or(Error::NotPrinted {
                table: table.label(),
                k,
            })
    }

    /// Indices of `table` that have printed terms.
    pub fn printed(&self, table: Table) -> Vec<usize> {
        table
            .indices()
            .filter(|k| self.entries.contains_key(&(table, *k)))
            .collect()
    }

    pub fn term_count(&self) -> usize {
        self.entries.values().map(Vec::len).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Table, usize, &Term)> {
        self.entries
            .iter()
            .flat_map(|((t, k), terms)| terms.iter().map(move |term| (*t, *k, term)))
    }
}

/// Shared copy of the compiled-in tables.
pub fn term_tables() -> &'static TermTables {
    static TABLES: OnceLock<TermTables> = OnceLock::new();
    TABLES.get_or_init(|| TermTables::load().expect("compiled-in term data is valid"))
}

/// Value of one coefficient, with the part coming from suspect terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoefficientValue {
    pub value: f64,
    pub suspect_value: f64,
    /// Sum of absolute term values; the scale against which cancellation is judged.
    pub magnitude: f64,
    pub terms: usize,
    pub suspect_terms: usize,
    pub degree_mismatches: usize,
}

impl CoefficientValue {
    pub fn suspect(&self) -> bool {
        self.suspect_terms > 0
    }
}

pub(crate) fn eval_terms(terms: &[Term], bundle: &InvariantBundle) -> CoefficientValue {
    let mut out = CoefficientValue {
        value: 0.0,
        suspect_value: 0.0,
        magnitude: 0.0,
        terms: terms.len(),
        suspect_terms: 0,
        degree_mismatches: 0,
    };
    for term in terms {
        let v = term.eval(bundle);
        out.value += v;
        out.magnitude += v.abs();
        if term.suspect.any() {
            out.suspect_value += v;
            out.suspect_terms += 1;
        }
        if term.suspect.degree {
            out.degree_mismatches += 1;
        }
    }
    out
}

/// Evaluate printed coefficient `table_k` on the bundle slots.
pub fn eval_coefficient(
    table: Table,
    k: usize,
    bundle: &InvariantBundle,
) -> Result<CoefficientValue> {
    Ok(eval_terms(term_tables().terms(table, k)?, bundle))
}
