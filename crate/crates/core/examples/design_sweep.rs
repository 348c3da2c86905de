//! Sweep the full grid and print the latency-optimal G for each array and
//! width/resolution pair. Writes the rows to `sweep.csv` in the temp dir.

use systolic_dse::explorer::{argmin_latency, run_sweep, write_sweep_csv, SweepGrid};

fn main() -> systolic_dse::Result<()> {
    let grid = SweepGrid::reference();
    let start = std::time::Instant::now();
    let out = run_sweep(&grid)?;
    println!(
        "{} rows, {} skipped points in {:.1?}",
        out.rows.len(),
        out.skipped.len(),
        start.elapsed()
    );

    for &alpha in &grid.alphas {
        for &rho in &grid.rhos {
            print!("alpha={alpha:<3} rho={rho:<3}");
            for array in &grid.arrays {
                let label = array.label();
                match argmin_latency(&out.rows, &label, alpha, rho) {
                    Ok((g, ms)) => print!("  {label}: G={g:<2} {ms:7.3} ms"),
                    Err(_) => print!("  {label}: -"),
                }
            }
            println!();
        }
    }

    let path = std::env::temp_dir().join("sweep.csv");
    let file = std::fs::File::create(&path).expect("create sweep.csv");
    write_sweep_csv(&out, file)?;
    println!("wrote {}", path.display());
    Ok(())
}
