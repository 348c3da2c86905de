//! JSON network descriptors and per-layer counts reports.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{count_layer, LayerKind, LayerSpec, NetworkSpec};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum KindTag {
    StandardConv,
    GroupedConv,
    Pooling,
    FullyConnected,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LayerRecord {
    name: String,
    kind: KindTag,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    channels_per_group: Option<u32>,
    d_k: u32,
    stride: u32,
    in_channels: u32,
    out_channels: u32,
    in_spatial: u32,
    padding: u32,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    bias: bool,
}

fn default_batch() -> u32 {
    1
}

fn is_one(v: &u32) -> bool {
    *v == 1
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NetworkRecord {
    name: String,
    alpha: f64,
    rho: f64,
    group_size: u32,
    #[serde(default = "default_batch", skip_serializing_if = "is_one")]
    batch: u32,
    layers: Vec<LayerRecord>,
}

impl From<&LayerSpec> for LayerRecord {
    fn from(l: &LayerSpec) -> Self {
        let (kind, channels_per_group) = match l.kind {
            LayerKind::StandardConv => (KindTag::StandardConv, None),
            LayerKind::GroupedConv { channels_per_group } => {
                (KindTag::GroupedConv, Some(channels_per_group))
            }
            LayerKind::Pooling => (KindTag::Pooling, None),
            LayerKind::FullyConnected => (KindTag::FullyConnected, None),
        };
        Self {
            name: l.name.clone(),
            kind,
            channels_per_group,
            d_k: l.kernel_size,
            stride: l.stride,
            in_channels: l.in_channels,
            out_channels: l.out_channels,
            in_spatial: l.in_spatial,
            padding: l.padding,
            bias: l.bias,
        }
    }
}

impl TryFrom<LayerRecord> for LayerSpec {
    type Error = Error;

    fn try_from(r: LayerRecord) -> Result<Self> {
        let kind = match (r.kind, r.channels_per_group) {
            (KindTag::GroupedConv, Some(channels_per_group)) => {
                LayerKind::GroupedConv { channels_per_group }
            }
            (KindTag::GroupedConv, None) => {
                return Err(Error::InvalidLayer {
                    layer: r.name,
                    reason: "grouped_conv requires field `channels_per_group`".into(),
                })
            }
            (_, Some(_)) => {
                return Err(Error::InvalidLayer {
                    layer: r.name,
                    reason: "field `channels_per_group` is only valid for grouped_conv".into(),
                })
            }
            (KindTag::StandardConv, None) => LayerKind::StandardConv,
            (KindTag::Pooling, None) => LayerKind::Pooling,
            (KindTag::FullyConnected, None) => LayerKind::FullyConnected,
        };
        Ok(LayerSpec::new(
            r.name,
            kind,
            r.d_k,
            r.stride,
            r.in_channels,
            r.out_channels,
            r.in_spatial,
            r.padding,
        )?
        .with_bias(r.bias))
    }
}

impl NetworkSpec {
    pub fn to_json(&self) -> Result<String> {
        let record = NetworkRecord {
            name: self.name.clone(),
            alpha: self.alpha,
            rho: self.rho,
            group_size: self.group_size,
            batch: self.batch,
            layers: self.layers.iter().map(LayerRecord::from).collect(),
        };
        Ok(serde_json::to_string_pretty(&record)?)
    }

    /// Parses and validates a descriptor. Structural problems name the
    /// offending field path.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let record: NetworkRecord =
            serde_path_to_error::deserialize(de).map_err(|e| Error::Field {
                path: e.path().to_string(),
                source: e.into_inner(),
            })?;
        let layers = record
            .layers
            .into_iter()
            .map(LayerSpec::try_from)
            .collect::<Result<Vec<_>>>()?;
        let net = NetworkSpec {
            name: record.name,
            alpha: record.alpha,
            rho: record.rho,
            group_size: record.group_size,
            batch: record.batch,
            layers,
        };
        net.validate()?;
        Ok(net)
    }
}

/// One line of the counts report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountsRow {
    pub name: String,
    pub kind: String,
    #[serde(rename = "G")]
    pub g: u32,
    pub macs: u64,
    pub params: u64,
    pub in_acts: u64,
    pub out_acts: u64,
    pub data_reuse: f64,
    pub w_reu: f64,
    pub a_reu: f64,
}

pub fn counts_report(net: &NetworkSpec) -> Result<Vec<CountsRow>> {
    net.layers
        .iter()
        .map(|l| {
            let c = count_layer(l)?;
            Ok(CountsRow {
                name: l.name.clone(),
                kind: l.kind.label().to_string(),
                g: l.channels_per_group(),
                macs: c.macs,
                params: c.params,
                in_acts: c.in_acts,
                out_acts: c.out_acts,
                data_reuse: c.data_reuse,
                w_reu: c.w_reu,
                a_reu: c.a_reu,
            })
        })
        .collect()
}

pub fn write_counts_csv<W: Write>(rows: &[CountsRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_counts_json<W: Write>(rows: &[CountsRow], out: W) -> Result<()> {
    serde_json::to_writer_pretty(out, rows)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netgen::generate_mobilenet_v1;

    #[test]
    fn descriptor_round_trips() {
        let net = generate_mobilenet_v1(0.5, 2.0, 4).unwrap();
        let text = net.to_json().unwrap();
        assert_eq!(NetworkSpec::from_json(&text).unwrap(), net);
    }

    #[test]
    fn missing_field_is_named() {
        let text = r#"{"name":"x","alpha":1,"rho":1,"group_size":1,"layers":[
            {"name":"c","kind":"standard_conv","stride":1,"in_channels":3,
             "out_channels":8,"in_spatial":8,"padding":1}]}"#;
        let msg = NetworkSpec::from_json(text).unwrap_err().to_string();
        assert!(msg.contains("d_k"), "{msg}");
    }

    #[test]
    fn grouped_layer_needs_group_field() {
        let text = r#"{"name":"x","alpha":1,"rho":1,"group_size":1,"layers":[
            {"name":"d","kind":"grouped_conv","d_k":3,"stride":1,"in_channels":8,
             "out_channels":8,"in_spatial":8,"padding":1}]}"#;
        let msg = NetworkSpec::from_json(text).unwrap_err().to_string();
        assert!(msg.contains("channels_per_group"), "{msg}");
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = r#"{"name":"x","alpha":1,"rho":1,"group_size":1,"layers":[],"extra":1}"#;
        assert!(NetworkSpec::from_json(text).is_err());
    }

    #[test]
    fn counts_csv_has_one_row_per_layer() {
        let net = generate_mobilenet_v1(1.0, 1.0, 1).unwrap();
        let rows = counts_report(&net).unwrap();
        let mut buf = Vec::new();
        write_counts_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "name,kind,G,macs,params,in_acts,out_acts,data_reuse,w_reu,a_reu"
        );
        assert_eq!(lines.count(), 29);
    }
}
