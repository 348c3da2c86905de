//! Access counts, roofline latency and energy per layer and per network.

use std::io::Write;
use std::ops::Add;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mapping::{average_utilization, map_layer, ArrayConfig, MappingResult};
use crate::netgen::{count_layer, LayerCounts, LayerKind, LayerSpec, NetworkSpec};

/// Joules per access at each level of the memory hierarchy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnergyCosts {
    pub dram_j: f64,
    pub gbuf_j: f64,
    /// Per inter-PE transfer.
    pub array_j: f64,
    pub rf_j: f64,
    /// Per MAC.
    pub alu_j: f64,
}

impl Default for EnergyCosts {
    fn default() -> Self {
        Self {
            dram_j: 200e-12,
            gbuf_j: 6e-12,
            array_j: 2e-12,
            rf_j: 1e-12,
            alu_j: 1e-12,
        }
    }
}

impl EnergyCosts {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.dram_j,
            self.gbuf_j,
            self.array_j,
            self.rf_j,
            self.alu_j,
        ];
        if all.iter().all(|v| v.is_finite() && *v >= 0.0) {
            Ok(())
        } else {
            Err(Error::InvalidArray(format!("energy costs {all:?}")))
        }
    }
}

/// Per-MAC traffic inside the array.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrafficFactors {
    /// Weight read, activation read and psum update.
    pub rf_per_mac: u64,
    /// Operand hops between neighbouring PEs.
    pub array_per_mac: u64,
}

impl Default for TrafficFactors {
    fn default() -> Self {
        Self {
            rf_per_mac: 3,
            array_per_mac: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccessCounts {
    pub dram: u64,
    pub gbuf: u64,
    pub array: u64,
    pub rf: u64,
    pub alu_macs: u64,
}

impl AccessCounts {
    fn scaled(self, k: u64) -> Self {
        Self {
            dram: self.dram * k,
            gbuf: self.gbuf * k,
            array: self.array * k,
            rf: self.rf * k,
            alu_macs: self.alu_macs * k,
        }
    }
}

impl Add for AccessCounts {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self {
            dram: self.dram + o.dram,
            gbuf: self.gbuf + o.gbuf,
            array: self.array + o.array,
            rf: self.rf + o.rf,
            alu_macs: self.alu_macs + o.alu_macs,
        }
    }
}

/// Joules per level.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub dram: f64,
    pub gbuf: f64,
    pub array: f64,
    pub rf: f64,
    pub alu: f64,
}

impl EnergyBreakdown {
    pub fn total(&self) -> f64 {
        self.dram + self.gbuf + self.array + self.rf + self.alu
    }
}

impl Add for EnergyBreakdown {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self {
            dram: self.dram + o.dram,
            gbuf: self.gbuf + o.gbuf,
            array: self.array + o.array,
            rf: self.rf + o.rf,
            alu: self.alu + o.alu,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Latency {
    pub compute_cycles: u64,
    pub memory_cycles: u64,
    pub latency_cycles: u64,
    pub latency_s: f64,
}

impl Latency {
    fn new(compute_cycles: u64, memory_cycles: u64, clock_hz: f64) -> Self {
        let latency_cycles = compute_cycles.max(memory_cycles);
        Self {
            compute_cycles,
            memory_cycles,
            latency_cycles,
            latency_s: latency_cycles as f64 / clock_hz,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayerCost {
    pub latency: Latency,
    pub accesses: AccessCounts,
    pub energy: EnergyBreakdown,
    pub energy_total_j: f64,
}

/// Memory traffic of one layer.
///
/// The global buffer serves every weight once, every ifmap word once per
/// filter batch (`ceil(filters / r_f)`), and every ofmap word once plus a
/// read-back and write for each extra channel batch (`ceil(channels / r_g)`).
/// DRAM sees compulsory traffic, with weights re-fetched when the working set
/// overflows GBuf plus all register files.
pub fn access_counts(
    layer: &LayerSpec,
    counts: &LayerCounts,
    mapping: &MappingResult,
    array: &ArrayConfig,
) -> AccessCounts {
    let gbuf = match layer.kind {
        LayerKind::Pooling => counts.in_acts + counts.out_acts,
        _ => {
            let rep = &mapping.replication;
            let filters = layer.filters_per_group() as u64;
            let channels = layer.channels_per_group() as u64;
            let ifmap_reads = filters.div_ceil(rep.r_f.max(1));
            let psum_rounds = channels.div_ceil(rep.r_g.max(1));
            counts.params + counts.in_acts * ifmap_reads + counts.out_acts * (2 * psum_rounds - 1)
        }
    };

    let working_set = counts.unique_words() * array.word_bytes as u64;
    let capacity = array.on_chip_bytes().max(1);
    let reload = if working_set <= capacity {
        1
    } else {
        working_set.div_ceil(capacity)
    };

    AccessCounts {
        dram: counts.params * reload + counts.in_acts + counts.out_acts,
        gbuf,
        array: counts.macs * array.traffic.array_per_mac,
        rf: counts.macs * array.traffic.rf_per_mac,
        alu_macs: counts.macs,
    }
}

/// Roofline latency: the slower of the pass schedule and DRAM streaming.
pub fn layer_latency(
    layer: &str,
    counts: &LayerCounts,
    mapping: &MappingResult,
    accesses: &AccessCounts,
    array: &ArrayConfig,
) -> Result<Latency> {
    if counts.macs > 0 && mapping.utilization <= 0.0 {
        return Err(Error::Unmappable(layer.to_string()));
    }
    let compute = mapping.passes * mapping.cycles_per_pass;
    let bytes = accesses.dram as f64 * array.word_bytes as f64;
    let memory = (bytes / array.dram_bytes_per_cycle).ceil() as u64;
    Ok(Latency::new(compute, memory, array.clock_hz))
}

pub fn layer_energy(accesses: &AccessCounts, costs: &EnergyCosts) -> EnergyBreakdown {
    EnergyBreakdown {
        dram: accesses.dram as f64 * costs.dram_j,
        gbuf: accesses.gbuf as f64 * costs.gbuf_j,
        array: accesses.array as f64 * costs.array_j,
        rf: accesses.rf as f64 * costs.rf_j,
        alu: accesses.alu_macs as f64 * costs.alu_j,
    }
}

/// Full cost of one layer for a single input.
pub fn layer_cost(
    layer: &LayerSpec,
    array: &ArrayConfig,
) -> Result<(LayerCounts, MappingResult, LayerCost)> {
    let counts = count_layer(layer)?;
    let mapping = map_layer(layer, array);
    let accesses = access_counts(layer, &counts, &mapping, array);
    let latency = layer_latency(&layer.name, &counts, &mapping, &accesses, array)?;
    let energy = layer_energy(&accesses, &array.energy_costs);
    let cost = LayerCost {
        latency,
        accesses,
        energy,
        energy_total_j: energy.total(),
    };
    Ok((counts, mapping, cost))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerReport {
    pub name: String,
    pub kind: String,
    pub counts: LayerCounts,
    pub mapping: MappingResult,
    /// Scaled by the network batch.
    pub cost: LayerCost,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkCost {
    pub layers: Vec<LayerReport>,
    pub compute_cycles: u64,
    pub memory_cycles: u64,
    pub latency_cycles: u64,
    pub latency_s: f64,
    pub accesses: AccessCounts,
    pub energy: EnergyBreakdown,
    pub energy_j: f64,
    pub avg_utilization: f64,
}

impl NetworkCost {
    pub fn latency_ms(&self) -> f64 {
        self.latency_s * 1e3
    }

    pub fn energy_mj(&self) -> f64 {
        self.energy_j * 1e3
    }

    /// Mean utilization over layers matching `pred`, or `None` if none match.
    pub fn mean_utilization_where(&self, pred: impl Fn(&LayerReport) -> bool) -> Option<f64> {
        let picked: Vec<_> = self
            .layers
            .iter()
            .filter(|l| pred(l))
            .map(|l| &l.mapping)
            .collect();
        average_utilization(picked).ok()
    }
}

/// Layers run back to back; totals are plain sums over layers.
pub fn network_cost(net: &NetworkSpec, array: &ArrayConfig) -> Result<NetworkCost> {
    if net.layers.is_empty() {
        return Err(Error::EmptyNetwork);
    }
    net.validate()?;
    array.validate()?;
    let batch = net.batch as u64;
    let mut layers = Vec::with_capacity(net.layers.len());
    for layer in &net.layers {
        let (counts, mapping, one) = layer_cost(layer, array)?;
        let accesses = one.accesses.scaled(batch);
        let energy = layer_energy(&accesses, &array.energy_costs);
        let cost = LayerCost {
            latency: Latency::new(
                one.latency.compute_cycles * batch,
                one.latency.memory_cycles * batch,
                array.clock_hz,
            ),
            accesses,
            energy,
            energy_total_j: energy.total(),
        };
        layers.push(LayerReport {
            name: layer.name.clone(),
            kind: layer.kind.label().to_string(),
            counts,
            mapping,
            cost,
        });
    }

    let avg_utilization = average_utilization(layers.iter().map(|l| &l.mapping))?;
    let sum = |f: fn(&LayerCost) -> u64| layers.iter().map(|l| f(&l.cost)).sum::<u64>();
    let latency_cycles = sum(|c| c.latency.latency_cycles);
    let accesses = layers
        .iter()
        .fold(AccessCounts::default(), |a, l| a + l.cost.accesses);
    let energy = layers
        .iter()
        .fold(EnergyBreakdown::default(), |a, l| a + l.cost.energy);
    Ok(NetworkCost {
        compute_cycles: sum(|c| c.latency.compute_cycles),
        memory_cycles: sum(|c| c.latency.memory_cycles),
        latency_cycles,
        latency_s: latency_cycles as f64 / array.clock_hz,
        accesses,
        energy_j: layers.iter().map(|l| l.cost.energy_total_j).sum(),
        energy,
        avg_utilization,
        layers,
    })
}

/// Row of the per-layer cost CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostRow {
    pub layer: String,
    pub utilization: f64,
    pub compute_cycles: u64,
    pub memory_cycles: u64,
    pub latency_ms: f64,
    pub dram: u64,
    pub gbuf: u64,
    pub array: u64,
    pub rf: u64,
    pub alu: u64,
    #[serde(rename = "energy_uJ")]
    pub energy_uj: f64,
}

impl From<&LayerReport> for CostRow {
    fn from(l: &LayerReport) -> Self {
        let c = &l.cost;
        Self {
            layer: l.name.clone(),
            utilization: l.mapping.utilization,
            compute_cycles: c.latency.compute_cycles,
            memory_cycles: c.latency.memory_cycles,
            latency_ms: c.latency.latency_s * 1e3,
            dram: c.accesses.dram,
            gbuf: c.accesses.gbuf,
            array: c.accesses.array,
            rf: c.accesses.rf,
            alu: c.accesses.alu_macs,
            energy_uj: c.energy_total_j * 1e6,
        }
    }
}

pub fn write_cost_csv<W: Write>(cost: &NetworkCost, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for l in &cost.layers {
        w.serialize(CostRow::from(l))?;
    }
    w.flush()?;
    Ok(())
}

/// Whole-network summary with the configuration that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostSummary {
    pub network: String,
    pub alpha: f64,
    pub rho: f64,
    pub group_size: u32,
    pub batch: u32,
    pub config: ArrayConfig,
    pub macs: u64,
    pub params: u64,
    pub avg_utilization: f64,
    pub latency_ms: f64,
    pub compute_cycles: u64,
    pub memory_cycles: u64,
    pub energy_mj: f64,
    pub energy_breakdown_mj: EnergyBreakdown,
    pub accesses: AccessCounts,
}

impl CostSummary {
    pub fn new(net: &NetworkSpec, array: &ArrayConfig, cost: &NetworkCost) -> Self {
        let e = cost.energy;
        Self {
            network: net.name.clone(),
            alpha: net.alpha,
            rho: net.rho,
            group_size: net.group_size,
            batch: net.batch,
            config: array.clone(),
            macs: cost.layers.iter().map(|l| l.counts.macs).sum::<u64>() * net.batch as u64,
            params: cost.layers.iter().map(|l| l.counts.params).sum(),
            avg_utilization: cost.avg_utilization,
            latency_ms: cost.latency_ms(),
            compute_cycles: cost.compute_cycles,
            memory_cycles: cost.memory_cycles,
            energy_mj: cost.energy_mj(),
            energy_breakdown_mj: EnergyBreakdown {
                dram: e.dram * 1e3,
                gbuf: e.gbuf * 1e3,
                array: e.array * 1e3,
                rf: e.rf * 1e3,
                alu: e.alu * 1e3,
            },
            accesses: cost.accesses,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netgen::generate_mobilenet_v1;

    fn mv1(alpha: f64, rho: f64, g: u32, side: u32) -> NetworkCost {
        let net = generate_mobilenet_v1(alpha, rho, g).unwrap();
        let mut array = ArrayConfig::preset(side).unwrap();
        if rho > 1.0 {
            array = array.with_doubled_memory();
        }
        network_cost(&net, &array).unwrap()
    }

    #[test]
    fn thousand_dram_accesses_cost_200_nj() {
        let a = AccessCounts {
            dram: 1000,
            ..Default::default()
        };
        let e = layer_energy(&a, &EnergyCosts::default());
        assert!((e.total() - 200e-9).abs() < 1e-18);
        assert_eq!(
            layer_energy(&AccessCounts::default(), &EnergyCosts::default()).total(),
            0.0
        );
    }

    #[test]
    fn full_array_single_cycle() {
        // 1x1 kernel, 1x1 output: one MAC per PE.
        let layer = LayerSpec::new("c", LayerKind::StandardConv, 1, 1, 4, 4, 1, 0).unwrap();
        let array = ArrayConfig::new(4, 4).unwrap();
        let (counts, mapping, cost) = layer_cost(&layer, &array).unwrap();
        assert_eq!(counts.macs, 16);
        assert_eq!(mapping.utilization, 1.0);
        assert_eq!(cost.latency.compute_cycles, 1);
    }

    #[test]
    fn pooling_has_no_compute_traffic() {
        let pool = LayerSpec::global_pool("p", 64, 7).unwrap();
        let (counts, _, cost) = layer_cost(&pool, &ArrayConfig::preset(16).unwrap()).unwrap();
        assert_eq!((cost.accesses.rf, cost.accesses.alu_macs), (0, 0));
        assert!(cost.accesses.dram >= counts.in_acts + counts.out_acts);
        assert_eq!(cost.latency.compute_cycles, 0);
    }

    #[test]
    fn on_chip_layer_sees_compulsory_dram_only() {
        let layer = LayerSpec::conv("c", 3, 1, 16, 16, 14).unwrap();
        let array = ArrayConfig::preset(64).unwrap();
        let counts = count_layer(&layer).unwrap();
        let a = access_counts(&layer, &counts, &map_layer(&layer, &array), &array);
        assert_eq!(a.dram, counts.unique_words());
    }

    #[test]
    fn oversized_weights_are_refetched() {
        let layer = LayerSpec::conv("c", 3, 1, 512, 512, 8).unwrap();
        let array = ArrayConfig::preset(16).unwrap();
        let counts = count_layer(&layer).unwrap();
        let a = access_counts(&layer, &counts, &map_layer(&layer, &array), &array);
        assert!(a.dram > counts.unique_words());
        assert_eq!((a.dram - counts.acts()) % counts.params, 0);
    }

    #[test]
    fn zero_utilization_with_macs_is_unmappable() {
        let layer = LayerSpec::conv("c", 1, 1, 4, 4, 2).unwrap();
        let array = ArrayConfig::new(4, 4).unwrap();
        let counts = count_layer(&layer).unwrap();
        let mut m = map_layer(&layer, &array);
        m.utilization = 0.0;
        let a = access_counts(&layer, &counts, &m, &array);
        assert!(matches!(
            layer_latency("c", &counts, &m, &a, &array),
            Err(Error::Unmappable(_))
        ));
    }

    #[test]
    fn single_layer_network_equals_layer() {
        let layer = LayerSpec::conv("c", 3, 1, 8, 8, 16).unwrap();
        let array = ArrayConfig::preset(16).unwrap();
        let net = NetworkSpec::new("one", vec![layer.clone()]);
        let cost = network_cost(&net, &array).unwrap();
        let (_, m, c) = layer_cost(&layer, &array).unwrap();
        assert_eq!(cost.latency_cycles, c.latency.latency_cycles);
        assert_eq!(cost.energy_j, c.energy_total_j);
        assert_eq!(cost.avg_utilization, m.utilization);
    }

    #[test]
    fn batch_scales_latency_and_energy() {
        let mut net = generate_mobilenet_v1(0.5, 1.0, 2).unwrap();
        let array = ArrayConfig::preset(32).unwrap();
        let one = network_cost(&net, &array).unwrap();
        net.batch = 3;
        let three = network_cost(&net, &array).unwrap();
        assert_eq!(three.latency_cycles, 3 * one.latency_cycles);
        assert!((three.energy_j / one.energy_j - 3.0).abs() < 1e-9);
        assert_eq!(three.avg_utilization, one.avg_utilization);
    }

    #[test]
    fn empty_network_is_rejected() {
        let net = NetworkSpec::new("empty", vec![]);
        let err = network_cost(&net, &ArrayConfig::preset(16).unwrap()).unwrap_err();
        assert_eq!(err.to_string(), "network has no layers");
    }

    #[test]
    fn table_latency_anchors() {
        let ms = mv1(1.0, 2.0, 1, 16).latency_ms();
        assert!((ms / 66.5 - 1.0).abs() <= 0.3, "{ms}");
        let ms = mv1(1.0, 2.0, 4, 64).latency_ms();
        assert!((ms / 4.9 - 1.0).abs() <= 0.3, "{ms}");
    }

    #[test]
    fn table_energy_anchor() {
        let mj = mv1(0.5, 2.0, 1, 64).energy_mj();
        assert!((mj / 10.3 - 1.0).abs() <= 0.4, "{mj}");
    }

    #[test]
    fn grouping_barely_moves_dram_energy() {
        let g1 = mv1(1.0, 1.0, 1, 64);
        let g8 = mv1(1.0, 1.0, 8, 64);
        assert!(g8.energy_j / g1.energy_j <= 1.15);
        assert!((g8.energy.dram - g1.energy.dram) / g1.energy.dram <= 0.05);
        let macs = |c: &NetworkCost| c.accesses.alu_macs as f64;
        assert!((g8.energy.rf / g1.energy.rf - macs(&g8) / macs(&g1)).abs() < 1e-9);
    }

    #[test]
    fn clock_only_moves_latency() {
        let net = generate_mobilenet_v1(1.0, 1.0, 2).unwrap();
        let a = ArrayConfig::preset(32).unwrap();
        let mut b = a.clone();
        b.clock_hz *= 2.0;
        let (ca, cb) = (
            network_cost(&net, &a).unwrap(),
            network_cost(&net, &b).unwrap(),
        );
        assert_eq!(ca.latency_s, 2.0 * cb.latency_s);
        assert_eq!(ca.energy_j, cb.energy_j);
    }

    #[test]
    fn cost_csv_header() {
        let cost = mv1(1.0, 1.0, 1, 16);
        let mut buf = Vec::new();
        write_cost_csv(&cost, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text.lines().next().unwrap(),
            "layer,utilization,compute_cycles,memory_cycles,latency_ms,dram,gbuf,array,rf,alu,energy_uJ"
        );
        assert_eq!(text.lines().count(), 30);
    }
}
