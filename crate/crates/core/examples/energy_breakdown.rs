//! Energy per memory level as G grows: the RF share tracks MACs while DRAM
//! traffic barely moves.

use systolic_dse::costmodel::network_cost;
use systolic_dse::mapping::ArrayConfig;
use systolic_dse::netgen::generate_mobilenet_v1;

fn main() -> systolic_dse::Result<()> {
    let array = ArrayConfig::preset(64)?;
    println!(
        "{:>3} {:>8} {:>8} {:>8} {:>8} {:>8} {:>8}",
        "G", "DRAM", "GBuf", "array", "RF", "ALU", "total"
    );
    for g in [1, 2, 4, 8, 16, 32] {
        let cost = network_cost(&generate_mobilenet_v1(1.0, 1.0, g)?, &array)?;
        let e = cost.energy;
        println!(
            "{g:>3} {:>8.3} {:>8.3} {:>8.3} {:>8.3} {:>8.3} {:>8.3}",
            e.dram * 1e3,
            e.gbuf * 1e3,
            e.array * 1e3,
            e.rf * 1e3,
            e.alu * 1e3,
            e.total() * 1e3
        );
    }
    println!("(mJ)");
    Ok(())
}
