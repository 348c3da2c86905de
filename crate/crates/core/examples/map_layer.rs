//! How one 3x3 grouped layer occupies arrays of each preset size.

use systolic_dse::mapping::{map_layer, ArrayConfig, PRESET_SIZES};
use systolic_dse::netgen::LayerSpec;

fn main() -> systolic_dse::Result<()> {
    for (channels, d_f) in [(32, 112), (256, 28), (1024, 7)] {
        println!("layer: {channels} channels, {d_f}x{d_f} ofmap");
        for g in [1, 4, 16] {
            let layer = LayerSpec::grouped("dw", 3, 1, channels, g, d_f)?;
            for side in PRESET_SIZES {
                let array = ArrayConfig::preset(side)?;
                let m = map_layer(&layer, &array);
                println!(
                    "  G={g:<3} {:<8} set {}x{:<3} r_g={:<3} r_f={:<3} r_s={:<2} passes={:<6} util={:5.1}%",
                    array.label(),
                    m.pe_set_rows,
                    m.pe_set_cols,
                    m.replication.r_g,
                    m.replication.r_f,
                    m.replication.r_s,
                    m.passes,
                    m.utilization * 100.0
                );
            }
        }
    }

    let layer = LayerSpec::grouped("dw", 3, 1, 64, 8, 14)?;
    let m = map_layer(&layer, &ArrayConfig::preset(32)?);
    println!("\npass schedule of G=8, 64 channels, 14x14 on 32x32:");
    for group in &m.pass_groups {
        println!(
            "  {} pass(es) with {} active PEs",
            group.passes, group.active_pes
        );
    }
    Ok(())
}
