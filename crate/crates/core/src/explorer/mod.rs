//! Design-space sweep over array size, group size, width and resolution.

use std::io::{BufRead, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::costmodel::{network_cost, NetworkCost};
use crate::error::{Error, Result};
use crate::mapping::{ArrayConfig, PRESET_SIZES};
use crate::netgen::{generate_mobilenet_v1, narrowest_grouped_layer, network_counts};

mod report;

pub use report::{
    alternative_comparison, argmin_latency, compare_variants, takeaway_report, Check, CheckStatus,
    Comparison, ComparisonRow, TakeawayReport, Variant, PLATEAU_TOLERANCE, UTILIZATION_MATCH_PP,
};

/// Grid of MobileNetV1 variants and arrays to evaluate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepGrid {
    pub arrays: Vec<ArrayConfig>,
    /// Strictly ascending.
    pub g_values: Vec<u32>,
    pub alphas: Vec<f64>,
    pub rhos: Vec<f64>,
    /// Skip G larger than the narrowest grouped layer of a variant, where
    /// every grouped layer would already be clamped to standard conv or
    /// the point would repeat a smaller G.
    #[serde(default = "yes")]
    pub skip_oversized_groups: bool,
    /// Double GBuf and RF for every `rho > 1` point.
    #[serde(default = "yes")]
    pub double_memory_above_unit_rho: bool,
}

fn yes() -> bool {
    true
}

impl SweepGrid {
    /// All presets, G in 1..=64 (powers of two), alpha and rho in {0.5, 1, 2}.
    pub fn reference() -> Self {
        Self {
            arrays: PRESET_SIZES
                .iter()
                .map(|&s| ArrayConfig::preset(s).expect("preset"))
                .collect(),
            g_values: vec![1, 2, 4, 8, 16, 32, 64],
            alphas: vec![0.5, 1.0, 2.0],
            rhos: vec![0.5, 1.0, 2.0],
            skip_oversized_groups: true,
            double_memory_above_unit_rho: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let empty = [
            ("arrays", self.arrays.is_empty()),
            ("g_values", self.g_values.is_empty()),
            ("alphas", self.alphas.is_empty()),
            ("rhos", self.rhos.is_empty()),
        ];
        if let Some((name, _)) = empty.iter().find(|(_, e)| *e) {
            return Err(Error::InvalidGrid(format!("`{name}` is empty")));
        }
        if self.g_values.contains(&0) {
            return Err(Error::InvalidGrid("G must be positive".into()));
        }
        if self.g_values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidGrid(format!(
                "g_values must be strictly ascending, got {:?}",
                self.g_values
            )));
        }
        for v in self.alphas.iter().chain(&self.rhos) {
            if !(v.is_finite() && *v > 0.0) {
                return Err(Error::InvalidGrid(format!(
                    "multiplier {v} is not positive"
                )));
            }
        }
        for a in &self.arrays {
            a.validate()?;
        }
        Ok(())
    }

    pub fn points(&self) -> usize {
        self.arrays.len() * self.g_values.len() * self.alphas.len() * self.rhos.len()
    }

    fn ordered(&self) -> (Vec<&ArrayConfig>, Vec<f64>, Vec<f64>) {
        let mut arrays: Vec<&ArrayConfig> = self.arrays.iter().collect();
        arrays.sort_by_key(|a| (a.rows, a.cols));
        let sorted = |v: &[f64]| {
            let mut v = v.to_vec();
            v.sort_by(f64::total_cmp);
            v
        };
        (arrays, sorted(&self.alphas), sorted(&self.rhos))
    }
}

/// One evaluated grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub array_label: String,
    pub alpha: f64,
    pub rho: f64,
    #[serde(rename = "G")]
    pub g: u32,
    pub macs: u64,
    pub params: u64,
    pub avg_utilization: f64,
    pub util_3x3: f64,
    pub util_1x1: f64,
    pub latency_ms: f64,
    pub energy_mj: f64,
    pub energy_dram_mj: f64,
    pub energy_gbuf_mj: f64,
    pub energy_array_mj: f64,
    pub energy_rf_mj: f64,
    pub energy_alu_mj: f64,
    /// Empty unless the point failed to evaluate.
    #[serde(default)]
    pub error: String,
}

impl SweepRow {
    pub fn is_ok(&self) -> bool {
        self.error.is_empty()
    }

    fn failed(label: String, alpha: f64, rho: f64, g: u32, err: &Error) -> Self {
        Self {
            array_label: label,
            alpha,
            rho,
            g,
            macs: 0,
            params: 0,
            avg_utilization: 0.0,
            util_3x3: 0.0,
            util_1x1: 0.0,
            latency_ms: 0.0,
            energy_mj: 0.0,
            energy_dram_mj: 0.0,
            energy_gbuf_mj: 0.0,
            energy_array_mj: 0.0,
            energy_rf_mj: 0.0,
            energy_alu_mj: 0.0,
            error: err.to_string(),
        }
    }

    fn from_cost(
        label: String,
        alpha: f64,
        rho: f64,
        g: u32,
        macs: u64,
        params: u64,
        c: &NetworkCost,
    ) -> Self {
        let util_3x3 = c
            .mean_utilization_where(|l| l.kind == GROUPED)
            .unwrap_or(0.0);
        let util_1x1 = c
            .mean_utilization_where(|l| l.kind == STANDARD && l.mapping.pe_set_rows == 1)
            .unwrap_or(0.0);
        let e = c.energy;
        Self {
            array_label: label,
            alpha,
            rho,
            g,
            macs,
            params,
            avg_utilization: c.avg_utilization,
            util_3x3,
            util_1x1,
            latency_ms: c.latency_ms(),
            energy_mj: c.energy_mj(),
            energy_dram_mj: e.dram * 1e3,
            energy_gbuf_mj: e.gbuf * 1e3,
            energy_array_mj: e.array * 1e3,
            energy_rf_mj: e.rf * 1e3,
            energy_alu_mj: e.alu * 1e3,
            error: String::new(),
        }
    }
}

/// A grid point that was not evaluated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedPoint {
    pub array_label: String,
    pub alpha: f64,
    pub rho: f64,
    #[serde(rename = "G")]
    pub g: u32,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepOutcome {
    pub config: SweepGrid,
    pub rows: Vec<SweepRow>,
    pub skipped: Vec<SkippedPoint>,
}

const GROUPED: &str = "grouped_conv";
const STANDARD: &str = "standard_conv";

enum Point {
    Row(SweepRow),
    Skip(SkippedPoint),
}

fn evaluate(array: &ArrayConfig, alpha: f64, rho: f64, g: u32, grid: &SweepGrid) -> Point {
    let label = array.label();
    let skip = |reason: String| {
        Point::Skip(SkippedPoint {
            array_label: label.clone(),
            alpha,
            rho,
            g,
            reason,
        })
    };
    let net = match generate_mobilenet_v1(alpha, rho, g) {
        Ok(net) => net,
        Err(e @ Error::Divisibility { .. }) => return skip(e.to_string()),
        Err(e) => return Point::Row(SweepRow::failed(label, alpha, rho, g, &e)),
    };
    if grid.skip_oversized_groups {
        if let Some(narrowest) = narrowest_grouped_layer(&net) {
            if g > narrowest {
                return skip(format!(
                    "G={g} exceeds the narrowest grouped layer ({narrowest} channels)"
                ));
            }
        }
    }
    let array = if grid.double_memory_above_unit_rho && rho > 1.0 {
        array.clone().with_doubled_memory()
    } else {
        array.clone()
    };
    let result = network_counts(&net).and_then(|t| Ok((t, network_cost(&net, &array)?)));
    Point::Row(match result {
        Ok((t, cost)) => SweepRow::from_cost(label, alpha, rho, g, t.macs, t.params, &cost),
        Err(e) => SweepRow::failed(label, alpha, rho, g, &e),
    })
}

/// Evaluates every grid point in parallel.
///
/// Rows come back ordered by array, alpha, rho and G regardless of
/// scheduling, so the output is reproducible.
pub fn run_sweep(grid: &SweepGrid) -> Result<SweepOutcome> {
    grid.validate()?;
    let (arrays, alphas, rhos) = grid.ordered();
    let mut points = Vec::with_capacity(grid.points());
    for &array in &arrays {
        for &alpha in &alphas {
            for &rho in &rhos {
                for &g in &grid.g_values {
                    points.push((array, alpha, rho, g));
                }
            }
        }
    }
    let evaluated: Vec<Point> = points
        .par_iter()
        .map(|&(array, alpha, rho, g)| evaluate(array, alpha, rho, g, grid))
        .collect();

    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for p in evaluated {
        match p {
            Point::Row(r) => rows.push(r),
            Point::Skip(s) => skipped.push(s),
        }
    }
    Ok(SweepOutcome {
        config: grid.clone(),
        rows,
        skipped,
    })
}

const CONFIG_PREFIX: &str = "# config: ";
const SKIPPED_PREFIX: &str = "# skipped: ";

/// CSV rows preceded by `#` lines holding the grid and each skipped point.
pub fn write_sweep_csv<W: Write>(outcome: &SweepOutcome, mut out: W) -> Result<()> {
    writeln!(
        out,
        "{CONFIG_PREFIX}{}",
        serde_json::to_string(&outcome.config)?
    )?;
    for s in &outcome.skipped {
        writeln!(out, "{SKIPPED_PREFIX}{}", serde_json::to_string(s)?)?;
    }
    let mut w = csv::Writer::from_writer(out);
    for row in &outcome.rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_sweep_json<W: Write>(outcome: &SweepOutcome, out: W) -> Result<()> {
    serde_json::to_writer_pretty(out, outcome)?;
    Ok(())
}

/// Reads either format written by this module.
pub fn read_sweep(text: &str) -> Result<SweepOutcome> {
    if text.trim_start().starts_with('{') {
        return Ok(serde_json::from_str(text)?);
    }
    let mut config = None;
    let mut skipped = Vec::new();
    for line in text.as_bytes().lines() {
        let line = line?;
        if let Some(json) = line.strip_prefix(CONFIG_PREFIX) {
            config = Some(serde_json::from_str(json)?);
        } else if let Some(json) = line.strip_prefix(SKIPPED_PREFIX) {
            skipped.push(serde_json::from_str(json)?);
        } else if !line.starts_with('#') {
            break;
        }
    }
    let config =
        config.ok_or_else(|| Error::InvalidGrid("sweep CSV has no `# config:` line".into()))?;
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let rows = reader
        .deserialize()
        .collect::<std::result::Result<Vec<SweepRow>, _>>()?;
    Ok(SweepOutcome {
        config,
        rows,
        skipped,
    })
}

/// Accepts a bare grid, a sweep JSON document or a sweep CSV, and returns
/// the grid it holds.
pub fn read_grid(text: &str) -> Result<SweepGrid> {
    if let Ok(grid) = serde_json::from_str::<SweepGrid>(text) {
        return Ok(grid);
    }
    Ok(read_sweep(text)?.config)
}
