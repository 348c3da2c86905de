//! Non-square arrays and hardware overrides: clock, bandwidth, energy costs.

use systolic_dse::costmodel::network_cost;
use systolic_dse::mapping::ArrayConfig;
use systolic_dse::netgen::generate_mobilenet_v1;

fn main() -> systolic_dse::Result<()> {
    let net = generate_mobilenet_v1(1.0, 1.0, 4)?;

    let mut configs = vec![("64x64 preset", ArrayConfig::preset(64)?)];

    let mut wide = ArrayConfig::new(32, 128)?;
    wide.gbuf_bytes = 512 * 1024;
    configs.push(("32x128, 512 KiB", wide));

    let mut slow = ArrayConfig::preset(64)?;
    slow.dram_bytes_per_cycle = 16.0;
    configs.push(("64x64, 16 B/cycle", slow));

    let mut fast = ArrayConfig::preset(64)?;
    fast.clock_hz = 1e9;
    fast.energy_costs.dram_j *= 0.5;
    configs.push(("64x64, 1 GHz, cheap DRAM", fast));

    for (name, array) in &configs {
        array.validate()?;
        let cost = network_cost(&net, array)?;
        println!(
            "{name:<26} util {:5.1}%  {:7.3} ms  {:6.3} mJ (DRAM {:4.1}%)",
            cost.avg_utilization * 100.0,
            cost.latency_ms(),
            cost.energy_mj(),
            cost.energy.dram / cost.energy_j * 100.0
        );
    }
    Ok(())
}
