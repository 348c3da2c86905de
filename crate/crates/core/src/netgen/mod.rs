//! Network descriptors and analytic per-layer counts.
//!
//! Counts follow the usual grouped-convolution bookkeeping: with `n` input
//! channels, `m` filters, a `d_k x d_k` kernel, a `d_f x d_f` output fmap and
//! `G` input channels per group,
//!
//! ```text
//! MACs   = m * G * d_k^2 * d_f^2
//! params = m * G * d_k^2
//! ```
//!
//! Standard convolution is the `G = n` case and depthwise convolution the
//! `G = 1` case.

mod io;
mod mobilenet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use io::{counts_report, write_counts_csv, write_counts_json, CountsRow};
pub use mobilenet::{
    generate_mobilenet_v1, multiplier_scaled_counts, MOBILENET_V1_BLOCKS, MOBILENET_V1_CLASSES,
    MOBILENET_V1_INPUT, MOBILENET_V1_STEM_CHANNELS,
};

/// Operator type of a layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayerKind {
    StandardConv,
    /// Grouped convolution with `channels_per_group` input channels feeding
    /// each output. `1` is depthwise convolution.
    GroupedConv {
        channels_per_group: u32,
    },
    Pooling,
    FullyConnected,
}

impl LayerKind {
    pub fn label(&self) -> &'static str {
        match self {
            LayerKind::StandardConv => "standard_conv",
            LayerKind::GroupedConv { .. } => "grouped_conv",
            LayerKind::Pooling => "pooling",
            LayerKind::FullyConnected => "fully_connected",
        }
    }

    pub fn is_grouped(&self) -> bool {
        matches!(self, LayerKind::GroupedConv { .. })
    }
}

/// One layer. Feature maps are square.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerSpec {
    pub name: String,
    pub kind: LayerKind,
    /// Kernel side `d_k` (the window side for pooling).
    pub kernel_size: u32,
    pub stride: u32,
    pub in_channels: u32,
    pub out_channels: u32,
    pub in_spatial: u32,
    /// Output side `d_f`; always derived from the other geometry fields.
    pub out_spatial: u32,
    pub padding: u32,
    /// Count one bias term per filter in `params`.
    pub bias: bool,
}

fn invalid(layer: &str, reason: impl Into<String>) -> Error {
    Error::InvalidLayer {
        layer: layer.to_string(),
        reason: reason.into(),
    }
}

fn output_side(
    layer: &str,
    in_spatial: u32,
    kernel: u32,
    stride: u32,
    padding: u32,
) -> Result<u32> {
    let padded = in_spatial as u64 + 2 * padding as u64;
    if padded < kernel as u64 {
        return Err(invalid(
            layer,
            format!("kernel {kernel} exceeds padded input {padded}"),
        ));
    }
    Ok(((padded - kernel as u64) / stride as u64 + 1) as u32)
}

impl LayerSpec {
    /// Builds a layer and derives `out_spatial`.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: impl Into<String>,
        kind: LayerKind,
        kernel_size: u32,
        stride: u32,
        in_channels: u32,
        out_channels: u32,
        in_spatial: u32,
        padding: u32,
    ) -> Result<Self> {
        let name = name.into();
        for (field, value) in [
            ("d_k", kernel_size),
            ("stride", stride),
            ("in_channels", in_channels),
            ("out_channels", out_channels),
            ("in_spatial", in_spatial),
        ] {
            if value == 0 {
                return Err(invalid(&name, format!("{field} must be positive")));
            }
        }
        let out_spatial = output_side(&name, in_spatial, kernel_size, stride, padding)?;
        let layer = Self {
            name,
            kind,
            kernel_size,
            stride,
            in_channels,
            out_channels,
            in_spatial,
            out_spatial,
            padding,
            bias: false,
        };
        layer.validate()?;
        Ok(layer)
    }

    pub fn conv(
        name: impl Into<String>,
        kernel: u32,
        stride: u32,
        in_channels: u32,
        out_channels: u32,
        in_spatial: u32,
    ) -> Result<Self> {
        Self::new(
            name,
            LayerKind::StandardConv,
            kernel,
            stride,
            in_channels,
            out_channels,
            in_spatial,
            kernel / 2,
        )
    }

    /// Grouped convolution with `m = n` channels and "same" padding.
    pub fn grouped(
        name: impl Into<String>,
        kernel: u32,
        stride: u32,
        channels: u32,
        channels_per_group: u32,
        in_spatial: u32,
    ) -> Result<Self> {
        Self::new(
            name,
            LayerKind::GroupedConv { channels_per_group },
            kernel,
            stride,
            channels,
            channels,
            in_spatial,
            kernel / 2,
        )
    }

    /// Global pooling over the whole input plane.
    pub fn global_pool(name: impl Into<String>, channels: u32, in_spatial: u32) -> Result<Self> {
        Self::new(
            name,
            LayerKind::Pooling,
            in_spatial,
            1,
            channels,
            channels,
            in_spatial,
            0,
        )
    }

    pub fn fully_connected(name: impl Into<String>, inputs: u32, outputs: u32) -> Result<Self> {
        Self::new(name, LayerKind::FullyConnected, 1, 1, inputs, outputs, 1, 0)
    }

    pub fn with_bias(mut self, bias: bool) -> Self {
        self.bias = bias;
        self
    }

    /// Checks the geometry and grouping invariants.
    pub fn validate(&self) -> Result<()> {
        let name = &self.name;
        if self.kernel_size == 0 || self.stride == 0 {
            return Err(invalid(name, "d_k and stride must be positive"));
        }
        if self.in_channels == 0 || self.out_channels == 0 || self.in_spatial == 0 {
            return Err(invalid(name, "channels and spatial size must be positive"));
        }
        let expected = output_side(
            name,
            self.in_spatial,
            self.kernel_size,
            self.stride,
            self.padding,
        )?;
        if expected != self.out_spatial {
            return Err(invalid(
                name,
                format!("out_spatial {} != derived {expected}", self.out_spatial),
            ));
        }
        match self.kind {
            LayerKind::GroupedConv {
                channels_per_group: g,
            } => {
                if g == 0 || !self.in_channels.is_multiple_of(g) {
                    return Err(Error::Divisibility {
                        layer: name.clone(),
                        group: g,
                        channels: self.in_channels,
                    });
                }
                let groups = self.in_channels / g;
                if !self.out_channels.is_multiple_of(groups) {
                    return Err(invalid(
                        name,
                        format!(
                            "{} filters cannot be split across {groups} groups",
                            self.out_channels
                        ),
                    ));
                }
            }
            LayerKind::Pooling if self.in_channels != self.out_channels => {
                return Err(invalid(name, "pooling must preserve the channel count"));
            }
            LayerKind::FullyConnected if self.in_spatial != 1 || self.kernel_size != 1 => {
                return Err(invalid(name, "fully connected layers take a 1x1 input"));
            }
            _ => {}
        }
        Ok(())
    }

    /// Input channels accumulated into each output (`G`).
    pub fn channels_per_group(&self) -> u32 {
        match self.kind {
            LayerKind::GroupedConv { channels_per_group } => channels_per_group,
            LayerKind::Pooling => 1,
            LayerKind::StandardConv | LayerKind::FullyConnected => self.in_channels,
        }
    }

    /// Number of independent channel groups.
    pub fn groups(&self) -> u32 {
        match self.kind {
            LayerKind::GroupedConv { channels_per_group } => {
                self.in_channels / channels_per_group.max(1)
            }
            LayerKind::Pooling => self.in_channels,
            LayerKind::StandardConv | LayerKind::FullyConnected => 1,
        }
    }

    /// Filters that read the same group of input channels.
    pub fn filters_per_group(&self) -> u32 {
        self.out_channels.div_ceil(self.groups().max(1))
    }
}

/// An ordered layer list plus the knobs it was generated with.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSpec {
    pub name: String,
    pub alpha: f64,
    pub rho: f64,
    pub group_size: u32,
    pub batch: u32,
    pub layers: Vec<LayerSpec>,
}

impl NetworkSpec {
    pub fn new(name: impl Into<String>, layers: Vec<LayerSpec>) -> Self {
        Self {
            name: name.into(),
            alpha: 1.0,
            rho: 1.0,
            group_size: 1,
            batch: 1,
            layers,
        }
    }

    /// Validates every layer and the shape chain between neighbours.
    pub fn validate(&self) -> Result<()> {
        if self.batch == 0 {
            return Err(invalid(&self.name, "batch must be positive"));
        }
        for layer in &self.layers {
            layer.validate()?;
        }
        for pair in self.layers.windows(2) {
            let (prev, next) = (&pair[0], &pair[1]);
            let mut detail = Vec::new();
            if prev.out_channels != next.in_channels {
                detail.push(format!(
                    "channels {} vs {}",
                    prev.out_channels, next.in_channels
                ));
            }
            if prev.out_spatial != next.in_spatial {
                detail.push(format!(
                    "spatial {} vs {}",
                    prev.out_spatial, next.in_spatial
                ));
            }
            if !detail.is_empty() {
                return Err(Error::ShapeMismatch {
                    prev: prev.name.clone(),
                    next: next.name.clone(),
                    detail: detail.join(", "),
                });
            }
        }
        Ok(())
    }
}

/// Work, storage and reuse metrics of a layer (or a sum of layers).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LayerCounts {
    pub macs: u64,
    pub params: u64,
    pub in_acts: u64,
    pub out_acts: u64,
    /// MACs per datum touched (arithmetic intensity).
    pub data_reuse: f64,
    /// MACs per weight; zero for parameter-free layers.
    pub w_reu: f64,
    /// MACs per activation.
    pub a_reu: f64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl LayerCounts {
    pub fn from_totals(macs: u64, params: u64, in_acts: u64, out_acts: u64) -> Self {
        Self {
            macs,
            params,
            in_acts,
            out_acts,
            data_reuse: ratio(macs, params + in_acts + out_acts),
            w_reu: ratio(macs, params),
            a_reu: ratio(macs, in_acts + out_acts),
        }
    }

    pub fn acts(&self) -> u64 {
        self.in_acts + self.out_acts
    }

    /// `params + in_acts + out_acts`.
    pub fn unique_words(&self) -> u64 {
        self.params + self.in_acts + self.out_acts
    }
}

impl std::ops::Add for LayerCounts {
    type Output = LayerCounts;

    fn add(self, rhs: Self) -> Self {
        Self::from_totals(
            self.macs + rhs.macs,
            self.params + rhs.params,
            self.in_acts + rhs.in_acts,
            self.out_acts + rhs.out_acts,
        )
    }
}

impl std::iter::Sum for LayerCounts {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(LayerCounts::default(), |acc, c| acc + c)
    }
}

/// Counts for one layer at batch 1.
pub fn count_layer(layer: &LayerSpec) -> Result<LayerCounts> {
    layer.validate()?;
    let n = layer.in_channels as u64;
    let m = layer.out_channels as u64;
    let k2 = (layer.kernel_size as u64).pow(2);
    let df2 = (layer.out_spatial as u64).pow(2);
    let in_acts = n * (layer.in_spatial as u64).pow(2);
    let out_acts = m * df2;
    let bias = if layer.bias { m } else { 0 };
    let (macs, params) = match layer.kind {
        LayerKind::StandardConv | LayerKind::FullyConnected => {
            (m * n * k2 * df2, m * n * k2 + bias)
        }
        LayerKind::GroupedConv { channels_per_group } => {
            let g = channels_per_group as u64;
            (m * g * k2 * df2, m * g * k2 + bias)
        }
        LayerKind::Pooling => (0, 0),
    };
    Ok(LayerCounts::from_totals(macs, params, in_acts, out_acts))
}

/// Whole-network totals; MACs and activations scale with `batch`, weights do not.
pub fn network_counts(net: &NetworkSpec) -> Result<LayerCounts> {
    let batch = net.batch.max(1) as u64;
    let mut total = LayerCounts::default();
    for layer in &net.layers {
        let c = count_layer(layer)?;
        total = total
            + LayerCounts::from_totals(
                c.macs * batch,
                c.params,
                c.in_acts * batch,
                c.out_acts * batch,
            );
    }
    Ok(total)
}

/// Sets every grouped layer to `min(group_size, in_channels)` channels per group.
pub fn apply_group_size(net: &NetworkSpec, group_size: u32) -> Result<NetworkSpec> {
    if group_size == 0 {
        return Err(invalid(&net.name, "group size must be positive"));
    }
    let mut out = net.clone();
    for layer in out.layers.iter_mut() {
        if let LayerKind::GroupedConv { channels_per_group } = &mut layer.kind {
            *channels_per_group = group_size.min(layer.in_channels);
            layer.validate()?;
        }
    }
    out.group_size = group_size;
    Ok(out)
}

/// Smallest input-channel count over the grouped layers, if any.
pub fn narrowest_grouped_layer(net: &NetworkSpec) -> Option<u32> {
    net.layers
        .iter()
        .filter(|l| l.kind.is_grouped())
        .map(|l| l.in_channels)
        .min()
}
