//! Command-line front end: `gen`, `analyze`, `sweep`, `report`, `defaults`.
//!
//! Exit status is 0 on success, 1 for usage errors and 2 for model or I/O
//! errors.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::costmodel::{network_cost, write_cost_csv, CostSummary, EnergyCosts, TrafficFactors};
use crate::error::{Error, Result};
use crate::explorer::{
    alternative_comparison, read_grid, read_sweep, run_sweep, takeaway_report, write_sweep_csv,
    write_sweep_json, CheckStatus, Comparison, SweepGrid, TakeawayReport,
};
use crate::mapping::{
    write_mapping_csv, ArrayConfig, MappingRow, DEFAULT_CLOCK_HZ, DEFAULT_DRAM_BYTES_PER_CYCLE,
    DEFAULT_WORD_BYTES, GBUF_BYTES_PER_SIDE, PRESET_SIZES, RF_BYTES_PER_PE,
};
use crate::netgen::{
    counts_report, generate_mobilenet_v1, multiplier_scaled_counts, network_counts,
    write_counts_csv, write_counts_json, NetworkSpec,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_MODEL: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "systolic-dse",
    version,
    about = "Systolic-array cost model and design-space sweep"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a MobileNetV1 variant and print its totals.
    Gen(GenArgs),
    /// Map and cost a network descriptor on one array.
    Analyze(AnalyzeArgs),
    /// Sweep arrays, G, alpha and rho.
    Sweep(SweepArgs),
    /// Evaluate the trade-off checks and the width/resolution comparison.
    Report(ReportArgs),
    /// Print every default parameter.
    Defaults,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    pub rho: f64,
    /// Channels per group of every 3x3 layer after the first.
    #[arg(long = "g", default_value_t = 1)]
    pub g: u32,
    /// Network descriptor (JSON).
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    /// Per-layer counts report.
    #[arg(long)]
    pub counts: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct Overrides {
    #[arg(long)]
    pub clock_hz: Option<f64>,
    /// DRAM bandwidth in bytes per cycle.
    #[arg(long)]
    pub bandwidth: Option<f64>,
    #[arg(long)]
    pub word_bytes: Option<u32>,
    /// ALU energy per MAC in picojoules.
    #[arg(long)]
    pub alu_pj: Option<f64>,
}

impl Overrides {
    fn apply(&self, a: &mut ArrayConfig) {
        if let Some(v) = self.clock_hz {
            a.clock_hz = v;
        }
        if let Some(v) = self.bandwidth {
            a.dram_bytes_per_cycle = v;
        }
        if let Some(v) = self.word_bytes {
            a.word_bytes = v;
        }
        if let Some(v) = self.alu_pj {
            a.energy_costs.alu_j = v * 1e-12;
        }
    }
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Network descriptor written by `gen`.
    pub network: PathBuf,
    /// Preset side (16, 32, 64, 128) or explicit `RxC`.
    #[arg(long, default_value = "64", value_parser = parse_array)]
    pub array: ArrayConfig,
    /// Keep preset memories for rho > 1 networks.
    #[arg(long)]
    pub no_double_memory: bool,
    /// Directory for mapping.csv, cost.csv and summary.json.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Replay the grid stored in a previous sweep output or grid file.
    #[arg(long, conflicts_with_all = ["arrays", "g", "alpha", "rho", "no_skip_oversized"])]
    pub config: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', value_parser = parse_array)]
    pub arrays: Vec<ArrayConfig>,
    #[arg(long = "g", value_delimiter = ',')]
    pub g: Vec<u32>,
    #[arg(long, value_delimiter = ',')]
    pub alpha: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    pub rho: Vec<f64>,
    /// Evaluate G values wider than the narrowest grouped layer.
    #[arg(long)]
    pub no_skip_oversized: bool,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Sweep output (CSV or JSON).
    pub sweep: PathBuf,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

fn parse_array(s: &str) -> std::result::Result<ArrayConfig, String> {
    let result = match s.split_once(['x', 'X']) {
        Some((r, c)) => {
            let rows = r.trim().parse().map_err(|e| format!("rows `{r}`: {e}"))?;
            let cols = c.trim().parse().map_err(|e| format!("cols `{c}`: {e}"))?;
            ArrayConfig::new(rows, cols)
        }
        None => ArrayConfig::preset(s.trim().parse().map_err(|e| format!("`{s}`: {e}"))?),
    };
    result.map_err(|e| e.to_string())
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                err.write_all(text.as_bytes())
            } else {
                out.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match execute(cli.command, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_MODEL
        }
    }
}

pub fn execute(command: Command, out: &mut dyn Write) -> Result<()> {
    match command {
        Command::Gen(a) => cmd_gen(&a, out),
        Command::Analyze(a) => cmd_analyze(&a, out),
        Command::Sweep(a) => cmd_sweep(&a, out),
        Command::Report(a) => cmd_report(&a, out),
        Command::Defaults => cmd_defaults(out),
    }
}

fn create(path: &Path) -> Result<fs::File> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    Ok(fs::File::create(path)?)
}

fn millions(v: u64) -> String {
    let m = v as f64 / 1e6;
    if m >= 100.0 {
        format!("{m:.0}M")
    } else {
        format!("{m:.2}M")
    }
}

pub fn cmd_gen(a: &GenArgs, out: &mut dyn Write) -> Result<()> {
    let net = generate_mobilenet_v1(a.alpha, a.rho, a.g)?;
    let totals = network_counts(&net)?;
    writeln!(out, "{}: {} layers", net.name, net.layers.len())?;
    writeln!(
        out,
        "MACs: {}, Params: {}",
        millions(totals.macs),
        millions(totals.params)
    )?;
    let scaled = multiplier_scaled_counts(a.alpha, a.rho, a.g)?;
    if (scaled.macs, scaled.params) != (totals.macs, totals.params) {
        writeln!(
            out,
            "Multiplier-scaled: MACs: {}, Params: {}",
            millions(scaled.macs),
            millions(scaled.params)
        )?;
    }
    if let Some(path) = &a.out {
        create(path)?.write_all(net.to_json()?.as_bytes())?;
        writeln!(out, "wrote {}", path.display())?;
    }
    if let Some(path) = &a.counts {
        let rows = counts_report(&net)?;
        match a.format {
            Format::Csv => write_counts_csv(&rows, create(path)?)?,
            Format::Json => write_counts_json(&rows, create(path)?)?,
        }
        writeln!(out, "wrote {}", path.display())?;
    }
    Ok(())
}

pub fn cmd_analyze(a: &AnalyzeArgs, out: &mut dyn Write) -> Result<()> {
    let net = NetworkSpec::from_json(&fs::read_to_string(&a.network)?)?;
    let mut array = a.array.clone();
    if net.rho > 1.0 && !a.no_double_memory {
        array = array.with_doubled_memory();
    }
    a.overrides.apply(&mut array);
    let cost = network_cost(&net, &array)?;
    let summary = CostSummary::new(&net, &array, &cost);

    writeln!(out, "{} on {}", net.name, array.label())?;
    writeln!(
        out,
        "avg utilization: {:.1}%",
        summary.avg_utilization * 100.0
    )?;
    writeln!(out, "latency: {:.3} ms", summary.latency_ms)?;
    writeln!(out, "energy: {:.3} mJ", summary.energy_mj)?;

    if let Some(dir) = &a.out {
        fs::create_dir_all(dir)?;
        let rows: Vec<MappingRow> = cost
            .layers
            .iter()
            .map(|l| MappingRow::new(&l.name, &l.mapping))
            .collect();
        write_mapping_csv(&rows, create(&dir.join("mapping.csv"))?)?;
        write_cost_csv(&cost, create(&dir.join("cost.csv"))?)?;
        serde_json::to_writer_pretty(create(&dir.join("summary.json"))?, &summary)?;
        writeln!(out, "wrote {}", dir.display())?;
    }
    Ok(())
}

fn sweep_grid(a: &SweepArgs) -> Result<SweepGrid> {
    if let Some(path) = &a.config {
        let mut grid = read_grid(&fs::read_to_string(path)?)?;
        for array in &mut grid.arrays {
            a.overrides.apply(array);
        }
        return Ok(grid);
    }
    let full = SweepGrid::reference();
    let or = |v: &Vec<f64>, d: Vec<f64>| if v.is_empty() { d } else { v.clone() };
    let mut grid = SweepGrid {
        arrays: if a.arrays.is_empty() {
            full.arrays
        } else {
            a.arrays.clone()
        },
        g_values: if a.g.is_empty() {
            full.g_values
        } else {
            a.g.clone()
        },
        alphas: or(&a.alpha, full.alphas),
        rhos: or(&a.rho, full.rhos),
        skip_oversized_groups: !a.no_skip_oversized,
        double_memory_above_unit_rho: true,
    };
    grid.g_values.sort_unstable();
    grid.g_values.dedup();
    for array in &mut grid.arrays {
        a.overrides.apply(array);
    }
    Ok(grid)
}

pub fn cmd_sweep(a: &SweepArgs, out: &mut dyn Write) -> Result<()> {
    let grid = sweep_grid(a)?;
    let outcome = run_sweep(&grid)?;
    let failed = outcome.rows.iter().filter(|r| !r.is_ok()).count();
    writeln!(
        out,
        "{} rows, {} skipped, {} failed",
        outcome.rows.len(),
        outcome.skipped.len(),
        failed
    )?;
    for s in &outcome.skipped {
        writeln!(
            out,
            "skipped {} alpha={} rho={} G={}: {}",
            s.array_label, s.alpha, s.rho, s.g, s.reason
        )?;
    }
    let Some(path) = &a.out else {
        return Ok(());
    };
    match a.format {
        Format::Csv => write_sweep_csv(&outcome, create(path)?)?,
        Format::Json => write_sweep_json(&outcome, create(path)?)?,
    }
    writeln!(out, "wrote {}", path.display())?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct ReportDoc {
    source: SweepGrid,
    takeaways: TakeawayReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    comparison: Option<Comparison>,
    #[serde(skip_serializing_if = "Option::is_none")]
    comparison_error: Option<String>,
}

pub fn cmd_report(a: &ReportArgs, out: &mut dyn Write) -> Result<()> {
    let sweep = read_sweep(&fs::read_to_string(&a.sweep)?)?;
    let takeaways = takeaway_report(&sweep.rows);
    for c in &takeaways.checks {
        let status = match c.status {
            CheckStatus::Pass => "pass",
            CheckStatus::Fail => "FAIL",
            CheckStatus::NotEvaluable => "not evaluable",
        };
        writeln!(out, "{}: {status} - {}", c.check_id, c.statement)?;
    }
    let (comparison, comparison_error) = match alternative_comparison(&sweep.rows) {
        Ok(c) => {
            writeln!(
                out,
                "alternative: max utilization gap {:.2} pp, faster everywhere: {}, cheaper everywhere: {}",
                c.max_util_delta_pp, c.alternative_faster, c.alternative_cheaper
            )?;
            (Some(c), None)
        }
        Err(e @ Error::MissingVariant(_)) => {
            writeln!(out, "alternative: not evaluable ({e})")?;
            (None, Some(e.to_string()))
        }
        Err(e) => return Err(e),
    };
    let doc = ReportDoc {
        source: sweep.config,
        takeaways,
        comparison,
        comparison_error,
    };
    match &a.out {
        Some(path) => {
            serde_json::to_writer_pretty(create(path)?, &doc)?;
            writeln!(out, "wrote {}", path.display())?;
        }
        None => {
            serde_json::to_writer_pretty(&mut *out, &doc)?;
            writeln!(out)?;
        }
    }
    Ok(())
}

pub fn cmd_defaults(out: &mut dyn Write) -> Result<()> {
    let e = EnergyCosts::default();
    let t = TrafficFactors::default();
    let rows: Vec<(String, String)> = vec![
        ("clock_hz".into(), format!("{DEFAULT_CLOCK_HZ}")),
        ("word_bytes".into(), format!("{DEFAULT_WORD_BYTES}")),
        (
            "dram_bytes_per_cycle".into(),
            format!("{DEFAULT_DRAM_BYTES_PER_CYCLE}"),
        ),
        ("energy.dram_pj".into(), format!("{}", e.dram_j * 1e12)),
        ("energy.gbuf_pj".into(), format!("{}", e.gbuf_j * 1e12)),
        ("energy.array_pj".into(), format!("{}", e.array_j * 1e12)),
        ("energy.rf_pj".into(), format!("{}", e.rf_j * 1e12)),
        ("energy.alu_pj".into(), format!("{}", e.alu_j * 1e12)),
        ("traffic.rf_per_mac".into(), format!("{}", t.rf_per_mac)),
        (
            "traffic.array_per_mac".into(),
            format!("{}", t.array_per_mac),
        ),
        ("rf_bytes_per_pe".into(), format!("{RF_BYTES_PER_PE}")),
        (
            "gbuf_bytes".into(),
            PRESET_SIZES
                .iter()
                .map(|&s| format!("{s}x{s}={}KiB", GBUF_BYTES_PER_SIDE * s as u64 / 1024))
                .collect::<Vec<_>>()
                .join(" "),
        ),
        (
            "memory_doubling".into(),
            "GBuf and RF doubled when rho > 1".into(),
        ),
        ("batch".into(), "1".into()),
    ];
    let width = rows.iter().map(|r| r.0.len()).max().unwrap_or(0);
    for (k, v) in rows {
        writeln!(out, "{k:<width$}  {v}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> (i32, String, String) {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = run(
            std::iter::once("systolic-dse").chain(args.iter().copied()),
            &mut out,
            &mut err,
        );
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    #[test]
    fn gen_prints_baseline_totals() {
        let (code, out, _) = run_args(&["gen", "--alpha", "1", "--rho", "1", "--g", "1"]);
        assert_eq!(code, 0);
        assert!(out.contains("MACs: 569M, Params: 4.21M"), "{out}");
        assert!(!out.contains("Multiplier-scaled"));
    }

    #[test]
    fn gen_reports_scaled_totals_when_they_differ() {
        let (_, out, _) = run_args(&["gen", "--alpha", "0.5"]);
        assert!(
            out.contains("Multiplier-scaled: MACs: 147M, Params: 1.82M"),
            "{out}"
        );
    }

    #[test]
    fn gen_group_32() {
        let (_, out, _) = run_args(&["gen", "--g", "32"]);
        assert!(out.contains("MACs: 1108M, Params: 5.59M"), "{out}");
    }

    #[test]
    fn exit_codes() {
        let (code, _, err) = run_args(&["gen", "--g", "3"]);
        assert_eq!(code, EXIT_MODEL);
        assert!(err.contains("does not divide 32"), "{err}");
        assert_eq!(run_args(&["gen", "--bogus"]).0, EXIT_USAGE);
        assert_eq!(run_args(&["frobnicate"]).0, EXIT_USAGE);
        assert_eq!(run_args(&["--help"]).0, EXIT_OK);
        assert_eq!(
            run_args(&["analyze", "/nonexistent/net.json"]).0,
            EXIT_MODEL
        );
    }

    #[test]
    fn array_argument_forms() {
        assert_eq!(parse_array("32").unwrap().label(), "32x32");
        assert_eq!(parse_array("8x12").unwrap().label(), "8x12");
        assert!(parse_array("48").is_err());
        assert!(parse_array("0x4").is_err());
        assert!(parse_array("ax4").is_err());
    }

    #[test]
    fn defaults_lists_every_knob() {
        let (code, out, _) = run_args(&["defaults"]);
        assert_eq!(code, 0);
        for key in [
            "clock_hz",
            "word_bytes",
            "dram_bytes_per_cycle",
            "energy.alu_pj",
            "128x128=1024KiB",
        ] {
            assert!(out.contains(key), "{key}");
        }
    }

    #[test]
    fn overrides_apply() {
        let o = Overrides {
            clock_hz: Some(1e9),
            bandwidth: Some(64.0),
            word_bytes: Some(1),
            alu_pj: Some(2.0),
        };
        let mut a = ArrayConfig::preset(16).unwrap();
        o.apply(&mut a);
        assert_eq!(
            (a.clock_hz, a.dram_bytes_per_cycle, a.word_bytes),
            (1e9, 64.0, 1)
        );
        assert!((a.energy_costs.alu_j - 2e-12).abs() < 1e-24);
    }
}
