//! Per-layer latency, utilization and energy of one network on one array.
//!
//! `cargo run --example network_cost -- [side] [G]`

use systolic_dse::costmodel::network_cost;
use systolic_dse::mapping::ArrayConfig;
use systolic_dse::netgen::generate_mobilenet_v1;

fn main() -> systolic_dse::Result<()> {
    let mut args = std::env::args()
        .skip(1)
        .map(|a| a.parse::<u32>().expect("integer argument"));
    let side = args.next().unwrap_or(64);
    let g = args.next().unwrap_or(1);

    let net = generate_mobilenet_v1(1.0, 1.0, g)?;
    let array = ArrayConfig::preset(side)?;
    let cost = network_cost(&net, &array)?;

    println!("{} on {}", net.name, array.label());
    println!(
        "{:<12} {:>6} {:>10} {:>10} {:>10}",
        "layer", "util%", "compute", "memory", "energy uJ"
    );
    for l in &cost.layers {
        println!(
            "{:<12} {:>6.1} {:>10} {:>10} {:>10.2}",
            l.name,
            l.mapping.utilization * 100.0,
            l.cost.latency.compute_cycles,
            l.cost.latency.memory_cycles,
            l.cost.energy_total_j * 1e6
        );
    }
    println!(
        "\ntotal: {:.3} ms, {:.3} mJ, average utilization {:.1}%",
        cost.latency_ms(),
        cost.energy_mj(),
        cost.avg_utilization * 100.0
    );
    let bound = cost
        .layers
        .iter()
        .filter(|l| l.cost.latency.memory_cycles > l.cost.latency.compute_cycles)
        .count();
    println!(
        "{bound} of {} layers are bandwidth bound",
        cost.layers.len()
    );
    Ok(())
}
