//! Half width at double resolution against full width at double
//! resolution: utilization, latency and energy per array and G.

use systolic_dse::explorer::{alternative_comparison, run_sweep, SweepGrid};

fn main() -> systolic_dse::Result<()> {
    let out = run_sweep(&SweepGrid::reference())?;
    let cmp = alternative_comparison(&out.rows)?;
    println!(
        "baseline {} vs alternative {}",
        cmp.baseline, cmp.alternative
    );
    println!(
        "{:<8} {:>3} {:>7} {:>7} {:>9} {:>9} {:>9} {:>9}",
        "array", "G", "util b", "util a", "ms b", "ms a", "mJ b", "mJ a"
    );
    for r in &cmp.rows {
        println!(
            "{:<8} {:>3} {:>6.1}% {:>6.1}% {:>9.3} {:>9.3} {:>9.3} {:>9.3}",
            r.array_label,
            r.g,
            r.util_baseline * 100.0,
            r.util_alternative * 100.0,
            r.latency_ms_baseline,
            r.latency_ms_alternative,
            r.energy_mj_baseline,
            r.energy_mj_alternative
        );
    }
    println!(
        "max utilization gap {:.2} pp, faster everywhere: {}, cheaper everywhere: {}",
        cmp.max_util_delta_pp, cmp.alternative_faster, cmp.alternative_cheaper
    );
    Ok(())
}
