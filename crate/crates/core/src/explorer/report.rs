//! Latency minima, trade-off checks and side-by-side variant comparison.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::SweepRow;
use crate::error::{Error, Result};

/// Largest relative latency spread accepted as a plateau.
pub const PLATEAU_TOLERANCE: f64 = 0.10;
/// Largest utilization gap (percentage points) treated as equal.
pub const UTILIZATION_MATCH_PP: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Variant {
    pub alpha: f64,
    pub rho: f64,
}

impl Variant {
    pub const fn new(alpha: f64, rho: f64) -> Self {
        Self { alpha, rho }
    }

    fn matches(&self, row: &SweepRow) -> bool {
        row.alpha == self.alpha && row.rho == self.rho
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "alpha={} rho={}", self.alpha, self.rho)
    }
}

fn selected<'a>(
    rows: &'a [SweepRow],
    array: &'a str,
    v: Variant,
) -> impl Iterator<Item = &'a SweepRow> {
    rows.iter()
        .filter(move |r| r.is_ok() && r.array_label == array && v.matches(r))
}

/// Array labels in order of first appearance.
fn array_labels(rows: &[SweepRow]) -> Vec<&str> {
    let mut out: Vec<&str> = Vec::new();
    for r in rows {
        if !out.contains(&r.array_label.as_str()) {
            out.push(&r.array_label);
        }
    }
    out
}

/// G with the lowest latency for one array and variant; ties go to the
/// smaller G.
pub fn argmin_latency(rows: &[SweepRow], array: &str, alpha: f64, rho: f64) -> Result<(u32, f64)> {
    selected(rows, array, Variant::new(alpha, rho))
        .map(|r| (r.g, r.latency_ms))
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
        .ok_or_else(|| Error::NoMatchingRows(format!("{array} alpha={alpha} rho={rho}")))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Pass,
    Fail,
    NotEvaluable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub check_id: String,
    pub status: CheckStatus,
    pub pass: bool,
    pub statement: String,
    pub evidence: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

impl Check {
    fn new(id: &str, statement: &str) -> Self {
        Self {
            check_id: id.into(),
            status: CheckStatus::NotEvaluable,
            pass: false,
            statement: statement.into(),
            evidence: BTreeMap::new(),
            detail: String::new(),
        }
    }

    fn decide(mut self, pass: bool) -> Self {
        self.pass = pass;
        self.status = if pass {
            CheckStatus::Pass
        } else {
            CheckStatus::Fail
        };
        self
    }

    fn missing(mut self, what: impl Into<String>) -> Self {
        self.detail = format!("missing rows: {}", what.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TakeawayReport {
    pub checks: Vec<Check>,
}

impl TakeawayReport {
    pub fn get(&self, id: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.check_id == id)
    }
}

/// Evaluates the four trade-off checks T1 to T4 over sweep rows.
///
/// A check whose rows are absent is reported as not evaluable.
pub fn takeaway_report(rows: &[SweepRow]) -> TakeawayReport {
    TakeawayReport {
        checks: vec![
            minima_shift(rows),
            plateau(rows),
            utilization_is_not_latency(rows),
            width_gain_on_small_arrays(rows),
        ],
    }
}

fn lookup<'a>(rows: &'a [SweepRow], array: &str, v: Variant, g: u32) -> Option<&'a SweepRow> {
    rows.iter()
        .find(|r| r.is_ok() && r.array_label == array && v.matches(r) && r.g == g)
}

fn minima_shift(rows: &[SweepRow]) -> Check {
    let mut check = Check::new(
        "T1",
        "latency-optimal G does not decrease as the array grows (alpha=1, rho in {1, 2})",
    );
    let mut pass = true;
    for rho in [1.0, 2.0] {
        let v = Variant::new(1.0, rho);
        let arrays: Vec<&str> = array_labels(rows)
            .into_iter()
            .filter(|a| selected(rows, a, v).next().is_some())
            .collect();
        if arrays.len() < 2 {
            return check.missing(format!("{v} on at least two arrays"));
        }
        let mut prev = 0;
        for a in arrays {
            let (g, ms) = argmin_latency(rows, a, 1.0, rho).expect("rows present");
            check
                .evidence
                .insert(format!("rho{rho}_{a}_argmin_G"), g as f64);
            check
                .evidence
                .insert(format!("rho{rho}_{a}_latency_ms"), ms);
            pass &= g >= prev;
            prev = g;
        }
    }
    check.decide(pass)
}

fn plateau(rows: &[SweepRow]) -> Check {
    let mut check = Check::new(
        "T2",
        "alpha=0.5 rho=1 on 64x64: latency over the upper half of the G range varies by at most 10%",
    );
    let v = Variant::new(0.5, 1.0);
    let mut points: Vec<(u32, f64)> = selected(rows, "64x64", v)
        .map(|r| (r.g, r.latency_ms))
        .collect();
    points.sort_by_key(|p| p.0);
    let top = &points[points.len() / 2..];
    if top.len() < 2 {
        return check.missing(format!("{v} on 64x64 with at least three G values"));
    }
    for (g, ms) in top {
        check.evidence.insert(format!("G{g}_latency_ms"), *ms);
    }
    let lo = top.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let hi = top.iter().map(|p| p.1).fold(0.0, f64::max);
    let spread = (hi - lo) / lo;
    check.evidence.insert("relative_spread".into(), spread);
    check.evidence.insert("tolerance".into(), PLATEAU_TOLERANCE);
    check.decide(spread <= PLATEAU_TOLERANCE)
}

fn utilization_is_not_latency(rows: &[SweepRow]) -> Check {
    let check = Check::new(
        "T3",
        "alpha=1 rho=2 on 64x64: G=16 has higher utilization than G=4 yet higher latency",
    );
    let v = Variant::new(1.0, 2.0);
    let (Some(g4), Some(g16)) = (lookup(rows, "64x64", v, 4), lookup(rows, "64x64", v, 16)) else {
        return check.missing(format!("{v} on 64x64 at G=4 and G=16"));
    };
    let mut check = check;
    check.evidence.insert("G4_latency_ms".into(), g4.latency_ms);
    check
        .evidence
        .insert("G16_latency_ms".into(), g16.latency_ms);
    check
        .evidence
        .insert("G4_utilization".into(), g4.avg_utilization);
    check
        .evidence
        .insert("G16_utilization".into(), g16.avg_utilization);
    check.decide(g16.latency_ms > g4.latency_ms && g16.avg_utilization > g4.avg_utilization)
}

fn width_gain_on_small_arrays(rows: &[SweepRow]) -> Check {
    let check = Check::new(
        "T4",
        "halving alpha at rho=2, G=1 cuts latency more on 16x16 than on 128x128",
    );
    let (wide, narrow) = (Variant::new(1.0, 2.0), Variant::new(0.5, 2.0));
    let ratio = |array: &str| {
        let a = lookup(rows, array, wide, 1)?;
        let b = lookup(rows, array, narrow, 1)?;
        Some(a.latency_ms / b.latency_ms)
    };
    let (Some(small), Some(large)) = (ratio("16x16"), ratio("128x128")) else {
        return check.missing(format!("{wide} and {narrow} at G=1 on 16x16 and 128x128"));
    };
    let mut check = check;
    check.evidence.insert("16x16_speedup".into(), small);
    check.evidence.insert("128x128_speedup".into(), large);
    check
        .evidence
        .insert("16x16_reduction".into(), 1.0 - 1.0 / small);
    check
        .evidence
        .insert("128x128_reduction".into(), 1.0 - 1.0 / large);
    check.decide(small > large)
}

/// One (array, G) cell of a two-variant comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub array_label: String,
    #[serde(rename = "G")]
    pub g: u32,
    pub util_baseline: f64,
    pub util_alternative: f64,
    pub util_delta_pp: f64,
    pub latency_ms_baseline: f64,
    pub latency_ms_alternative: f64,
    pub energy_mj_baseline: f64,
    pub energy_mj_alternative: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub baseline: Variant,
    pub alternative: Variant,
    pub rows: Vec<ComparisonRow>,
    pub max_util_delta_pp: f64,
    /// Every cell within [`UTILIZATION_MATCH_PP`].
    pub utilization_matches: bool,
    /// Alternative strictly faster in every cell.
    pub alternative_faster: bool,
    /// Alternative strictly cheaper in every cell.
    pub alternative_cheaper: bool,
}

/// Pairs the rows of two variants cell by cell for every G up to `max_g`.
pub fn compare_variants(
    rows: &[SweepRow],
    baseline: Variant,
    alternative: Variant,
    max_g: u32,
) -> Result<Comparison> {
    let mut cells = Vec::new();
    for array in array_labels(rows) {
        for b in selected(rows, array, baseline).filter(|r| r.g <= max_g) {
            let a = lookup(rows, array, alternative, b.g).ok_or_else(|| {
                Error::MissingVariant(format!("{alternative} on {array} at G={}", b.g))
            })?;
            cells.push(ComparisonRow {
                array_label: array.to_string(),
                g: b.g,
                util_baseline: b.avg_utilization,
                util_alternative: a.avg_utilization,
                util_delta_pp: (a.avg_utilization - b.avg_utilization) * 100.0,
                latency_ms_baseline: b.latency_ms,
                latency_ms_alternative: a.latency_ms,
                energy_mj_baseline: b.energy_mj,
                energy_mj_alternative: a.energy_mj,
            });
        }
    }
    if cells.is_empty() {
        return Err(Error::MissingVariant(format!(
            "{baseline} with G <= {max_g}"
        )));
    }
    let max_util_delta_pp = cells
        .iter()
        .map(|c| c.util_delta_pp.abs())
        .fold(0.0, f64::max);
    Ok(Comparison {
        baseline,
        alternative,
        max_util_delta_pp,
        utilization_matches: max_util_delta_pp <= UTILIZATION_MATCH_PP,
        alternative_faster: cells
            .iter()
            .all(|c| c.latency_ms_alternative < c.latency_ms_baseline),
        alternative_cheaper: cells
            .iter()
            .all(|c| c.energy_mj_alternative < c.energy_mj_baseline),
        rows: cells,
    })
}

/// Full-width, double-resolution MobileNetV1 against the half-width variant
/// at the same resolution, for G up to 16.
pub fn alternative_comparison(rows: &[SweepRow]) -> Result<Comparison> {
    compare_variants(rows, Variant::new(1.0, 2.0), Variant::new(0.5, 2.0), 16)
}
