//! Row-stationary occupancy model of a layer on an `R x C` PE array.
//!
//! Every (input channel, filter) pair of a convolution is a *tile*: a logical
//! PE set of `d_k` rows by `d_f` columns where each PE convolves one filter row
//! with one ifmap row and produces one psum row (`d_k * d_f` MACs). Sets wider
//! than the array are folded into `ceil(d_f / C)` strips stacked vertically.
//!
//! A pass packs as many tiles of one channel group as fit in the
//! `floor(R / set_rows) x floor(C / set_cols)` slot grid, channel slices first.
//! Tiles from different groups never share a pass, so depthwise layers occupy
//! a single PE set per pass. A folded set taller than the array is spread over
//! several passes. The final pass of a group may be partially filled.
//!
//! Pooling is mapped like a depthwise layer whose kernel is the pooling
//! window; fully connected layers are a vector operation with one output per
//! PE.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::costmodel::{EnergyCosts, TrafficFactors};
use crate::error::{Error, Result};
use crate::netgen::{LayerKind, LayerSpec};

/// Array sides with a calibrated memory configuration.
pub const PRESET_SIZES: [u32; 4] = [16, 32, 64, 128];
pub const DEFAULT_CLOCK_HZ: f64 = 200e6;
pub const DEFAULT_WORD_BYTES: u32 = 2;
/// 256 16-bit words per cycle.
pub const DEFAULT_DRAM_BYTES_PER_CYCLE: f64 = 512.0;
/// Global buffer per PE of array side: 16 -> 128 KiB, ..., 128 -> 1 MiB.
pub const GBUF_BYTES_PER_SIDE: u64 = 8 * 1024;
pub const RF_BYTES_PER_PE: u64 = 512;

/// PE array dimensions, memories and the calibration knobs of the cost model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArrayConfig {
    pub rows: u32,
    pub cols: u32,
    pub gbuf_bytes: u64,
    pub rf_bytes_per_pe: u64,
    pub clock_hz: f64,
    pub dram_bytes_per_cycle: f64,
    pub word_bytes: u32,
    pub energy_costs: EnergyCosts,
    pub traffic: TrafficFactors,
}

impl ArrayConfig {
    pub fn new(rows: u32, cols: u32) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidArray(format!("{rows}x{cols} has no PEs")));
        }
        Ok(Self {
            rows,
            cols,
            gbuf_bytes: GBUF_BYTES_PER_SIDE * (rows as u64 + cols as u64) / 2,
            rf_bytes_per_pe: RF_BYTES_PER_PE,
            clock_hz: DEFAULT_CLOCK_HZ,
            dram_bytes_per_cycle: DEFAULT_DRAM_BYTES_PER_CYCLE,
            word_bytes: DEFAULT_WORD_BYTES,
            energy_costs: EnergyCosts::default(),
            traffic: TrafficFactors::default(),
        })
    }

    /// One of the square presets in [`PRESET_SIZES`].
    pub fn preset(side: u32) -> Result<Self> {
        if !PRESET_SIZES.contains(&side) {
            return Err(Error::InvalidArray(format!(
                "no preset for {side}x{side}; presets are {PRESET_SIZES:?}"
            )));
        }
        Self::new(side, side)
    }

    /// Doubles the global buffer and the per-PE register file.
    pub fn with_doubled_memory(mut self) -> Self {
        self.gbuf_bytes *= 2;
        self.rf_bytes_per_pe *= 2;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows == 0 || self.cols == 0 {
            return Err(Error::InvalidArray("array has no PEs".into()));
        }
        if !(self.clock_hz > 0.0 && self.clock_hz.is_finite()) {
            return Err(Error::InvalidArray(format!("clock_hz {}", self.clock_hz)));
        }
        if !(self.dram_bytes_per_cycle > 0.0 && self.dram_bytes_per_cycle.is_finite()) {
            return Err(Error::InvalidArray(format!(
                "dram_bytes_per_cycle {}",
                self.dram_bytes_per_cycle
            )));
        }
        if self.word_bytes == 0 {
            return Err(Error::InvalidArray("word_bytes must be positive".into()));
        }
        self.energy_costs.validate()
    }

    pub fn label(&self) -> String {
        format!("{}x{}", self.rows, self.cols)
    }

    pub fn pes(&self) -> u64 {
        self.rows as u64 * self.cols as u64
    }

    /// Global buffer plus all register files.
    pub fn on_chip_bytes(&self) -> u64 {
        self.gbuf_bytes + self.rf_bytes_per_pe * self.pes()
    }
}

/// `passes` consecutive passes with the same number of active PEs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PassGroup {
    pub passes: u64,
    pub active_pes: u64,
}

/// How many tiles are packed side by side in one pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Replication {
    /// Distinct input channels of a group in one pass.
    pub r_g: u64,
    /// Distinct filters (outputs) in one pass.
    pub r_f: u64,
    /// Ofmap strips a folded PE set is split into.
    pub r_s: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MappingResult {
    pub pe_set_rows: u32,
    pub pe_set_cols: u32,
    pub replication: Replication,
    pub passes: u64,
    /// Run-length encoded active-PE count of every pass, in schedule order.
    pub pass_groups: Vec<PassGroup>,
    /// Cycles each active PE spends in a pass.
    pub cycles_per_pass: u64,
    pub utilization: f64,
}

impl MappingResult {
    fn from_groups(
        pe_set_rows: u32,
        pe_set_cols: u32,
        replication: Replication,
        pass_groups: Vec<PassGroup>,
        cycles_per_pass: u64,
        array: &ArrayConfig,
    ) -> Self {
        let pass_groups: Vec<PassGroup> =
            pass_groups.into_iter().filter(|g| g.passes > 0).collect();
        let passes = pass_groups.iter().map(|g| g.passes).sum::<u64>();
        let active = pass_groups
            .iter()
            .map(|g| g.passes * g.active_pes)
            .sum::<u64>();
        let utilization = if passes == 0 {
            0.0
        } else {
            active as f64 / (passes as f64 * array.pes() as f64)
        };
        Self {
            pe_set_rows,
            pe_set_cols,
            replication,
            passes,
            pass_groups,
            cycles_per_pass,
            utilization,
        }
    }

    /// Active PEs of every pass, expanded.
    pub fn active_pes_per_pass(&self) -> impl Iterator<Item = u64> + '_ {
        self.pass_groups
            .iter()
            .flat_map(|g| std::iter::repeat_n(g.active_pes, g.passes as usize))
    }

    /// Sum of active PEs over all passes.
    pub fn active_pe_passes(&self) -> u64 {
        self.pass_groups
            .iter()
            .map(|g| g.passes * g.active_pes)
            .sum()
    }
}

/// Maps one layer. Pure and deterministic.
pub fn map_layer(layer: &LayerSpec, array: &ArrayConfig) -> MappingResult {
    match layer.kind {
        LayerKind::FullyConnected => map_vector(layer, array),
        _ => map_row_stationary(layer, array),
    }
}

fn map_vector(layer: &LayerSpec, array: &ArrayConfig) -> MappingResult {
    let outputs = layer.out_channels as u64 * (layer.out_spatial as u64).pow(2);
    let pes = array.pes();
    let per_pass = outputs.min(pes).max(1);
    let groups = vec![
        PassGroup {
            passes: outputs / per_pass,
            active_pes: per_pass,
        },
        PassGroup {
            passes: u64::from(!outputs.is_multiple_of(per_pass)),
            active_pes: outputs % per_pass,
        },
    ];
    let replication = Replication {
        r_g: layer.in_channels as u64,
        r_f: per_pass,
        r_s: 1,
    };
    let dot = layer.in_channels as u64 * (layer.kernel_size as u64).pow(2);
    MappingResult::from_groups(1, 1, replication, groups, dot, array)
}

fn map_row_stationary(layer: &LayerSpec, array: &ArrayConfig) -> MappingResult {
    let (rows, cols) = (array.rows as u64, array.cols as u64);
    let dk = layer.kernel_size as u64;
    let df = layer.out_spatial as u64;
    let channels = layer.channels_per_group() as u64;
    let filters = layer.filters_per_group() as u64;
    let groups = layer.groups() as u64;
    let tiles = channels * filters;

    let strips = df.div_ceil(cols);
    let width = df.min(cols);
    let set_rows = dk * strips;
    let tile_pes = dk * df;
    let cycles_per_pass = match layer.kind {
        LayerKind::Pooling => 0,
        _ => dk * df,
    };

    let (pass_groups, r_g, r_f) = if set_rows <= rows {
        let slots = (rows / set_rows) * (cols / width);
        let per = tiles.min(slots);
        let groups = vec![
            PassGroup {
                passes: groups * (tiles / per),
                active_pes: per * tile_pes,
            },
            PassGroup {
                passes: groups * u64::from(!tiles.is_multiple_of(per)),
                active_pes: (tiles % per) * tile_pes,
            },
        ];
        (groups, channels.min(per), (per / channels).max(1))
    } else {
        let per_tile = folded_tile_passes(dk, df, rows, cols);
        let groups = per_tile
            .into_iter()
            .map(|g| PassGroup {
                passes: g.passes * groups * tiles,
                active_pes: g.active_pes,
            })
            .collect();
        (groups, 1, 1)
    };

    MappingResult::from_groups(
        layer.kernel_size,
        width as u32,
        Replication {
            r_g,
            r_f,
            r_s: strips,
        },
        pass_groups,
        cycles_per_pass,
        array,
    )
}

/// Passes of a single tile whose folded set is taller than the array.
fn folded_tile_passes(dk: u64, df: u64, rows: u64, cols: u64) -> Vec<PassGroup> {
    let strips = df.div_ceil(cols);
    let last_width = df - (strips - 1) * cols;
    let mut out: Vec<PassGroup> = Vec::new();
    let mut push = |active: u64| match out.last_mut() {
        Some(g) if g.active_pes == active => g.passes += 1,
        _ => out.push(PassGroup {
            passes: 1,
            active_pes: active,
        }),
    };
    if dk <= rows {
        let per_pass = rows / dk;
        let mut first = 0;
        while first < strips {
            let n = per_pass.min(strips - first);
            let short = if first + n == strips {
                cols - last_width
            } else {
                0
            };
            push(dk * (n * cols - short));
            first += n;
        }
    } else {
        // Kernel rows themselves are split across passes.
        for s in 0..strips {
            let w = if s + 1 == strips { last_width } else { cols };
            let mut left = dk;
            while left > 0 {
                let h = left.min(rows);
                push(h * w);
                left -= h;
            }
        }
    }
    out
}

/// Unweighted mean of per-layer utilization.
pub fn average_utilization<'a, I>(results: I) -> Result<f64>
where
    I: IntoIterator<Item = &'a MappingResult>,
{
    let (sum, n) = results
        .into_iter()
        .fold((0.0, 0usize), |(s, n), r| (s + r.utilization, n + 1));
    if n == 0 {
        return Err(Error::EmptyUtilization);
    }
    Ok(sum / n as f64)
}

/// Row of the per-layer mapping dump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MappingRow {
    pub layer: String,
    pub pe_set_rows: u32,
    pub pe_set_cols: u32,
    pub r_g: u64,
    pub r_f: u64,
    pub r_s: u64,
    pub passes: u64,
    pub utilization: f64,
}

impl MappingRow {
    pub fn new(layer: &str, m: &MappingResult) -> Self {
        Self {
            layer: layer.to_string(),
            pe_set_rows: m.pe_set_rows,
            pe_set_cols: m.pe_set_cols,
            r_g: m.replication.r_g,
            r_f: m.replication.r_f,
            r_s: m.replication.r_s,
            passes: m.passes,
            utilization: m.utilization,
        }
    }
}

pub fn write_mapping_csv<W: Write>(rows: &[MappingRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}
