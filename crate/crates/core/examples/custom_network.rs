//! Build a small network by hand, save it as a descriptor and cost it.

use systolic_dse::costmodel::network_cost;
use systolic_dse::mapping::ArrayConfig;
use systolic_dse::netgen::{apply_group_size, network_counts, LayerSpec, NetworkSpec};

fn main() -> systolic_dse::Result<()> {
    let net = NetworkSpec::new(
        "tiny",
        vec![
            LayerSpec::conv("stem", 3, 2, 3, 16, 32)?,
            LayerSpec::grouped("dw1", 3, 1, 16, 1, 16)?,
            LayerSpec::conv("pw1", 1, 1, 16, 32, 16)?,
            LayerSpec::grouped("dw2", 3, 2, 32, 1, 16)?,
            LayerSpec::conv("pw2", 1, 1, 32, 64, 8)?,
            LayerSpec::global_pool("pool", 64, 8)?,
            LayerSpec::fully_connected("fc", 64, 10)?,
        ],
    );
    net.validate()?;

    let json = net.to_json()?;
    let path = std::env::temp_dir().join("tiny_network.json");
    std::fs::write(&path, &json).expect("write descriptor");
    let reloaded =
        NetworkSpec::from_json(&std::fs::read_to_string(&path).expect("read descriptor"))?;
    assert_eq!(reloaded, net);
    println!("descriptor round-tripped through {}", path.display());

    let array = ArrayConfig::new(16, 32)?;
    for g in [1, 2, 4, 8, 16] {
        let grouped = apply_group_size(&net, g)?;
        let counts = network_counts(&grouped)?;
        let cost = network_cost(&grouped, &array)?;
        println!(
            "G={g:<2} {:>8} MACs  util {:5.1}%  {:7.2} us  {:7.2} uJ",
            counts.macs,
            cost.avg_utilization * 100.0,
            cost.latency_s * 1e6,
            cost.energy_j * 1e6
        );
    }
    Ok(())
}
