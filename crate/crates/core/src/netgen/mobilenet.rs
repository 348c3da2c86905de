use super::{apply_group_size, count_layer, LayerCounts, LayerKind, LayerSpec, NetworkSpec};
use crate::error::{Error, Result};

/// Input side at resolution multiplier 1.
pub const MOBILENET_V1_INPUT: u32 = 224;
/// Filters of the stem 3x3 convolution at width multiplier 1.
pub const MOBILENET_V1_STEM_CHANNELS: u32 = 32;
pub const MOBILENET_V1_CLASSES: u32 = 1000;

/// `(pointwise output channels, 3x3 stride)` for the 13 separable blocks.
pub const MOBILENET_V1_BLOCKS: [(u32, u32); 13] = [
    (64, 1),
    (128, 2),
    (128, 1),
    (256, 2),
    (256, 1),
    (512, 2),
    (512, 1),
    (512, 1),
    (512, 1),
    (512, 1),
    (512, 1),
    (1024, 2),
    (1024, 1),
];

fn check_multiplier(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidMultiplier { name, value })
    }
}

fn scaled(name: &'static str, base: u32, factor: f64) -> Result<u32> {
    let v = (base as f64 * factor).round();
    if v < 1.0 {
        return Err(Error::InvalidMultiplier {
            name,
            value: factor,
        });
    }
    Ok(v as u32)
}

/// The 29-layer MobileNetV1 schedule: stem conv, 13 blocks of
/// (3x3 grouped conv, 1x1 conv), global pooling, and the classifier.
///
/// Channel counts are `round(alpha * base)`, the input side is
/// `round(224 * rho)`, and every 3x3 layer except the stem gets
/// `min(group_size, channels)` channels per group.
pub fn generate_mobilenet_v1(alpha: f64, rho: f64, group_size: u32) -> Result<NetworkSpec> {
    check_multiplier("alpha", alpha)?;
    check_multiplier("rho", rho)?;
    if group_size == 0 {
        return Err(Error::InvalidMultiplier {
            name: "group size",
            value: 0.0,
        });
    }

    let input = scaled("rho", MOBILENET_V1_INPUT, rho)?;
    let mut channels = scaled("alpha", MOBILENET_V1_STEM_CHANNELS, alpha)?;
    let mut layers = Vec::with_capacity(3 + 2 * MOBILENET_V1_BLOCKS.len());

    let stem = LayerSpec::conv("conv1", 3, 2, 3, channels, input)?;
    let mut spatial = stem.out_spatial;
    layers.push(stem);

    for (i, &(out, stride)) in MOBILENET_V1_BLOCKS.iter().enumerate() {
        let dw = LayerSpec::grouped(format!("conv{}_dw", i + 2), 3, stride, channels, 1, spatial)?;
        spatial = dw.out_spatial;
        layers.push(dw);
        let out = scaled("alpha", out, alpha)?;
        layers.push(LayerSpec::conv(
            format!("conv{}_pw", i + 2),
            1,
            1,
            channels,
            out,
            spatial,
        )?);
        channels = out;
    }

    layers.push(LayerSpec::global_pool("avgpool", channels, spatial)?);
    layers.push(LayerSpec::fully_connected(
        "fc",
        channels,
        MOBILENET_V1_CLASSES,
    )?);

    let net = NetworkSpec {
        name: format!("mobilenet_v1_a{alpha}_r{rho}_g{group_size}"),
        alpha,
        rho,
        group_size: 1,
        batch: 1,
        layers,
    };
    net.validate()?;
    apply_group_size(&net, group_size)
}

/// Whole-network totals under the multiplier-scaled convention.
///
/// Layer counts are taken from the width-1, resolution-1 network and scaled
/// analytically instead of being recounted on the resized layers:
///
/// | layer         | MACs                | params      |
/// |---------------|---------------------|-------------|
/// | standard conv | `alpha^2 * rho^2`   | `alpha^2`   |
/// | grouped conv  | `alpha * rho^2`     | `alpha^2`   |
/// | classifier    | unscaled            | unscaled    |
///
/// Grouped layers use the same `min(G, channels)` clamp as the generated
/// network at `alpha`. The result differs from [`super::network_counts`]
/// whenever `alpha != 1`, or when `rho` makes fmap sides non-integral
/// (e.g. `rho = 0.5` ends at 4x4 instead of 3.5x3.5).
pub fn multiplier_scaled_counts(alpha: f64, rho: f64, group_size: u32) -> Result<LayerCounts> {
    // Rejects invalid knobs and divisibility violations up front.
    let actual = generate_mobilenet_v1(alpha, rho, group_size)?;
    let reference = generate_mobilenet_v1(1.0, 1.0, 1)?;

    let (a, r2) = (alpha, rho * rho);
    let (mut macs, mut params, mut in_acts, mut out_acts) = (0f64, 0f64, 0f64, 0f64);
    for (base, sized) in reference.layers.iter().zip(&actual.layers) {
        let c = count_layer(base)?;
        match base.kind {
            LayerKind::StandardConv => {
                macs += a * a * r2 * c.macs as f64;
                params += a * a * c.params as f64;
            }
            LayerKind::GroupedConv { .. } => {
                let g = sized.channels_per_group() as f64;
                let k2 = (base.kernel_size as f64).powi(2);
                let per_filter = g * k2;
                macs += a
                    * r2
                    * base.out_channels as f64
                    * per_filter
                    * (base.out_spatial as f64).powi(2);
                params += a * a * base.out_channels as f64 * per_filter;
            }
            LayerKind::FullyConnected => {
                macs += c.macs as f64;
                params += c.params as f64;
                in_acts += c.in_acts as f64;
                out_acts += c.out_acts as f64;
                continue;
            }
            LayerKind::Pooling => {}
        }
        let in_scale = if base.in_channels == 3 { r2 } else { a * r2 };
        in_acts += in_scale * c.in_acts as f64;
        out_acts += a * r2 * c.out_acts as f64;
    }
    Ok(LayerCounts::from_totals(
        macs.round() as u64,
        params.round() as u64,
        in_acts.round() as u64,
        out_acts.round() as u64,
    ))
}
