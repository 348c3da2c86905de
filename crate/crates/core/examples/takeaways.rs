//! Evaluate the four utilization/latency trade-off checks on the full grid.

use systolic_dse::explorer::{run_sweep, takeaway_report, SweepGrid};

fn main() -> systolic_dse::Result<()> {
    let out = run_sweep(&SweepGrid::reference())?;
    let report = takeaway_report(&out.rows);
    for check in &report.checks {
        println!(
            "{}: {:?} - {}",
            check.check_id, check.status, check.statement
        );
        for (k, v) in &check.evidence {
            println!("    {k} = {v:.4}");
        }
        if !check.detail.is_empty() {
            println!("    {}", check.detail);
        }
    }
    Ok(())
}
