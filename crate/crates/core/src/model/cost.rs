use super::spec::{LayerSpec, ModelSpec};
use crate::error::Result;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LayerCount {
    pub index: usize,
    pub kind: &'static str,
    pub count: u64,
}

/// Per-layer counts in spec order plus their sum.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CostReport {
    pub layers: Vec<LayerCount>,
    pub total: u64,
}

fn report(spec: &ModelSpec, per_layer: impl Fn(&super::spec::LayerPlan) -> u64) -> Result<CostReport> {
    let layers: Vec<LayerCount> = spec
        .plan()?
        .iter()
        .map(|p| LayerCount {
            index: p.index,
            kind: p.spec.kind_name(),
            count: per_layer(p),
        })
        .collect();
    let total = layers.iter().map(|l| l.count).sum();
    Ok(CostReport { layers, total })
}

/// Learnable parameter counts. Batch norm contributes gamma and beta per
/// channel; running statistics are not counted.
pub fn count_params(spec: &ModelSpec) -> Result<CostReport> {
    report(spec, |p| {
        let c_in = p.input.c as u64;
        match p.spec {
            LayerSpec::Conv { kernel, bn, bias, .. } => {
                let c_out = p.channels as u64;
                let k2 = (kernel * kernel) as u64;
                k2 * c_in * c_out + if bias { c_out } else { 0 } + if bn { 2 * c_out } else { 0 }
            }
            LayerSpec::Separable { kernel, bn, bias, .. } => {
                let c_out = p.channels as u64;
                let k2 = (kernel * kernel) as u64;
                k2 * c_in + c_in * c_out + if bias { c_in + c_out } else { 0 } + if bn { 2 * (c_in + c_out) } else { 0 }
            }
            LayerSpec::FullyConnected { units, .. } => (units as u64) * c_in + units as u64,
            LayerSpec::MaxPool(_) | LayerSpec::AvgPool(_) | LayerSpec::Flatten => 0,
        }
    })
}

/// Multiply-accumulate counts of the convolution and fully-connected
/// layers, evaluated at the output extent of each layer.
pub fn count_flops(spec: &ModelSpec) -> Result<CostReport> {
    report(spec, |p| {
        let c_in = p.input.c as u64;
        let out_px = (p.output.h * p.output.w) as u64;
        match p.spec {
            LayerSpec::Conv { kernel, .. } => (kernel * kernel) as u64 * c_in * p.channels as u64 * out_px,
            LayerSpec::Separable { kernel, .. } => ((kernel * kernel) as u64 * c_in + c_in * p.channels as u64) * out_px,
            LayerSpec::FullyConnected { units, .. } => units as u64 * c_in,
            LayerSpec::MaxPool(_) | LayerSpec::AvgPool(_) | LayerSpec::Flatten => 0,
        }
    })
}
