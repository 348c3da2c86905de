//! MACs and parameters of the MobileNetV1 family as G grows.
//!
//! `cargo run --example count_mobilenet -- [alpha] [rho]`

use systolic_dse::netgen::{count_layer, generate_mobilenet_v1, network_counts};

fn main() -> systolic_dse::Result<()> {
    let mut args = std::env::args()
        .skip(1)
        .map(|a| a.parse::<f64>().expect("numeric argument"));
    let alpha = args.next().unwrap_or(1.0);
    let rho = args.next().unwrap_or(1.0);

    println!("alpha={alpha} rho={rho}");
    println!(
        "{:>4} {:>10} {:>10} {:>8} {:>8}",
        "G", "MACs (M)", "params (M)", "W reuse", "A reuse"
    );
    for g in [1, 2, 4, 8, 16, 32, 64] {
        let net = match generate_mobilenet_v1(alpha, rho, g) {
            Ok(net) => net,
            Err(e) => {
                println!("{g:>4} skipped: {e}");
                continue;
            }
        };
        let c = network_counts(&net)?;
        println!(
            "{g:>4} {:>10.1} {:>10.2} {:>8.1} {:>8.1}",
            c.macs as f64 / 1e6,
            c.params as f64 / 1e6,
            c.w_reu,
            c.a_reu
        );
    }

    let net = generate_mobilenet_v1(alpha, rho, 4)?;
    println!("\nper-layer counts at G=4:");
    for layer in &net.layers {
        let c = count_layer(layer)?;
        println!(
            "  {:<12} {:<9} {:>12} MACs {:>9} params",
            layer.name,
            layer.kind.label(),
            c.macs,
            c.params
        );
    }
    Ok(())
}
