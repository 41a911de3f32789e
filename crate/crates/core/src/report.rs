//! Ledger of empirical constants: one [`CheckReport`] per inequality family.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::grid::Field;

/// Right-hand sides at or below this are treated as zero.
pub const DEGENERATE_THRESHOLD: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseStatus {
    Ok,
    /// Both sides vanish; the inequality says nothing.
    Degenerate,
    /// Left side positive while the right side vanishes.
    Unbounded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckCase {
    pub label: String,
    pub input_digest: String,
    pub lhs: f64,
    pub rhs_no_constant: f64,
    pub ratio: Option<f64>,
    pub status: CaseStatus,
}

impl CheckCase {
    pub fn new(label: impl Into<String>, lhs: f64, rhs_no_constant: f64) -> Self {
        let (ratio, status) = if !(lhs.is_finite() && rhs_no_constant.is_finite()) {
            (None, CaseStatus::Unbounded)
        } else if rhs_no_constant > DEGENERATE_THRESHOLD {
            (Some(lhs / rhs_no_constant), CaseStatus::Ok)
        } else if lhs.abs() <= DEGENERATE_THRESHOLD {
            (None, CaseStatus::Degenerate)
        } else {
            (None, CaseStatus::Unbounded)
        };
        CheckCase {
            label: label.into(),
            input_digest: String::new(),
            lhs,
            rhs_no_constant,
            ratio,
            status,
        }
    }

    pub fn with_digest(mut self, digest: String) -> Self {
        self.input_digest = digest;
        self
    }

    pub fn is_degenerate(&self) -> bool {
        self.status == CaseStatus::Degenerate
    }
}

/// Extra pass condition `value <= limit` attached to a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Criterion {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    pub cap: f64,
    pub cases: Vec<CheckCase>,
    /// Ratios of the non-degenerate cases, in case order.
    pub ratios: Vec<f64>,
    pub max_ratio: Option<f64>,
    pub median_ratio: Option<f64>,
    pub degenerate_cases: usize,
    pub criteria: Vec<Criterion>,
    pub notes: Vec<String>,
    pub pass: bool,
}

impl CheckReport {
    pub fn new(name: impl Into<String>, cap: f64, cases: Vec<CheckCase>) -> Self {
        let ratios: Vec<f64> = cases.iter().filter_map(|c| c.ratio).collect();
        let max_ratio = ratios
            .iter()
            .copied()
            .fold(None, |m: Option<f64>, r| Some(m.map_or(r, |m| m.max(r))));
        let median_ratio = median(&ratios);
        let degenerate_cases = cases.iter().filter(|c| c.is_degenerate()).count();
        let mut report = CheckReport {
            name: name.into(),
            cap,
            cases,
            ratios,
            max_ratio,
            median_ratio,
            degenerate_cases,
            criteria: Vec::new(),
            notes: Vec::new(),
            pass: false,
        };
        report.refresh_pass();
        report
    }

    pub fn with_criterion(mut self, name: impl Into<String>, value: f64, limit: f64) -> Self {
        self.criteria.push(Criterion {
            name: name.into(),
            value,
            limit,
            pass: value.is_finite() && value <= limit,
        });
        self.refresh_pass();
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }

    fn refresh_pass(&mut self) {
        let unbounded = self.cases.iter().any(|c| c.status == CaseStatus::Unbounded);
        let ratios_ok = self.ratios.iter().all(|r| r.is_finite() && *r <= self.cap);
        self.pass = !unbounded && ratios_ok && self.criteria.iter().all(|c| c.pass);
    }

    /// Number of cases that entered the pass/fail decision.
    pub fn evaluated_cases(&self) -> usize {
        self.cases.len() - self.degenerate_cases
    }
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    })
}

/// FNV-1a digest of the raw sample bits of a field.
pub fn field_digest<F: Field>(field: &F) -> String {
    let mut h = Fnv::new();
    h.eat(&(field.grid().n() as u64).to_le_bytes());
    h.eat(&field.grid().box_length().to_le_bytes());
    for c in field.component_slice() {
        for v in c.values() {
            h.eat(&v.to_le_bytes());
        }
    }
    h.hex()
}

/// FNV-1a digest of a canonical text rendering (specs, configurations).
pub fn text_digest(text: &str) -> String {
    let mut h = Fnv::new();
    h.eat(text.as_bytes());
    h.hex()
}

struct Fnv(u64);

impl Fnv {
    fn new() -> Self {
        Fnv(0xcbf2_9ce4_8422_2325)
    }

    fn eat(&mut self, bytes: &[u8]) {
        for b in bytes {
            self.0 ^= *b as u64;
            self.0 = self.0.wrapping_mul(0x0100_0000_01b3);
        }
    }

    fn hex(&self) -> String {
        format!("{:016x}", self.0)
    }
}
