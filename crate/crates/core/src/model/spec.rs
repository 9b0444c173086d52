use std::fmt;

use crate::config::ConfigText;
use crate::error::{Error, Result};
use crate::tensor::{conv_output_extent, pool_output_extent};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Activation {
    Relu,
    None,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PoolWindow {
    /// One window covering the whole feature map.
    Global,
    Square { size: usize, stride: usize },
}

/// One entry of the declarative layer stack.
#[derive(Clone, Debug, PartialEq)]
pub enum LayerSpec {
    /// Standard convolution, optionally followed by batch norm and ReLU.
    Conv {
        out_channels: usize,
        kernel: usize,
        stride: usize,
        padding: usize,
        bn: bool,
        bias: bool,
        activation: Activation,
    },
    /// Depthwise conv → BN → act → pointwise conv → BN → act.
    Separable {
        out_channels: usize,
        kernel: usize,
        stride: usize,
        padding: usize,
        bn: bool,
        bias: bool,
        activation: Activation,
    },
    MaxPool(PoolWindow),
    AvgPool(PoolWindow),
    Flatten,
    FullyConnected {
        units: usize,
        /// Declared input width; checked against the chain when present.
        in_features: Option<usize>,
        activation: Activation,
    },
}

impl LayerSpec {
    /// Conv block with the usual MobileNet defaults (BN, no bias, ReLU, same padding).
    pub fn conv(out_channels: usize, kernel: usize, stride: usize) -> Self {
        LayerSpec::Conv {
            out_channels,
            kernel,
            stride,
            padding: kernel / 2,
            bn: true,
            bias: false,
            activation: Activation::Relu,
        }
    }

    pub fn separable(out_channels: usize, kernel: usize, stride: usize) -> Self {
        LayerSpec::Separable {
            out_channels,
            kernel,
            stride,
            padding: kernel / 2,
            bn: true,
            bias: false,
            activation: Activation::Relu,
        }
    }

    pub fn fc(units: usize, activation: Activation) -> Self {
        LayerSpec::FullyConnected {
            units,
            in_features: None,
            activation,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            LayerSpec::Conv { .. } => "standard-conv",
            LayerSpec::Separable { .. } => "depthwise-separable",
            LayerSpec::MaxPool(_) => "max-pool",
            LayerSpec::AvgPool(_) => "avg-pool",
            LayerSpec::Flatten => "flatten",
            LayerSpec::FullyConnected { .. } => "fully-connected",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Head {
    /// One logit, probability via sigmoid; exactly two class labels.
    SigmoidBinary,
    /// K logits, probabilities via softmax.
    Softmax,
}

/// Channel/height/width of one item.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct FeatureShape {
    pub c: usize,
    pub h: usize,
    pub w: usize,
}

impl FeatureShape {
    pub const fn new(c: usize, h: usize, w: usize) -> Self {
        Self { c, h, w }
    }

    pub const fn len(&self) -> usize {
        self.c * self.h * self.w
    }

    pub const fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl fmt::Display for FeatureShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}x{}", self.c, self.h, self.w)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelSpec {
    pub input: FeatureShape,
    pub width_multiplier: f64,
    pub layers: Vec<LayerSpec>,
    pub head: Head,
    pub class_labels: Vec<String>,
}

/// Static shape information for one layer after width scaling.
#[derive(Clone, Debug, PartialEq)]
pub struct LayerPlan {
    pub index: usize,
    pub spec: LayerSpec,
    pub input: FeatureShape,
    pub output: FeatureShape,
    /// Channel count after width scaling (conv / separable only).
    pub channels: usize,
}

/// Default input extent (the first of the commonly used 224, 256 and 640×480 sizes).
pub const DEFAULT_INPUT: (usize, usize) = (224, 224);

/// Applies a width multiplier to a channel count: `max(1, round(α·C))`.
pub fn scale_channels(channels: usize, alpha: f64) -> usize {
    ((alpha * channels as f64).round() as usize).max(1)
}

impl ModelSpec {
    /// MobileNetV1-style stack: a stride-2 3×3 stem, thirteen separable
    /// blocks that double channels on their stride-2 blocks, global average
    /// pooling and a single fully-connected head.
    pub fn mobilenet_v1(labels: Vec<String>, height: usize, width: usize, alpha: f64) -> Self {
        let mut layers = vec![LayerSpec::conv(32, 3, 2)];
        for (out, stride) in [
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
        ] {
            layers.push(LayerSpec::separable(out, 3, stride));
        }
        Self::with_head(labels, height, width, alpha, layers)
    }

    /// Shortened MobileNetV1 stack (stem + five separable blocks) for small
    /// inputs such as 32×32.
    pub fn desk(labels: Vec<String>, height: usize, width: usize, alpha: f64) -> Self {
        let mut layers = vec![LayerSpec::conv(32, 3, 2)];
        for (out, stride) in [(64, 1), (128, 2), (128, 1), (256, 2), (256, 1)] {
            layers.push(LayerSpec::separable(out, 3, stride));
        }
        Self::with_head(labels, height, width, alpha, layers)
    }

    fn with_head(labels: Vec<String>, height: usize, width: usize, alpha: f64, mut layers: Vec<LayerSpec>) -> Self {
        layers.push(LayerSpec::AvgPool(PoolWindow::Global));
        layers.push(LayerSpec::Flatten);
        layers.push(LayerSpec::fc(labels.len(), Activation::None));
        Self {
            input: FeatureShape::new(3, height, width),
            width_multiplier: alpha,
            layers,
            head: Head::Softmax,
            class_labels: labels,
        }
    }

    pub fn num_classes(&self) -> usize {
        self.class_labels.len()
    }

    /// Number of logits the network produces.
    pub fn logits(&self) -> usize {
        match self.head {
            Head::SigmoidBinary => 1,
            Head::Softmax => self.class_labels.len(),
        }
    }

    /// Validates the spec and computes every layer's shapes.
    pub fn plan(&self) -> Result<Vec<LayerPlan>> {
        let alpha = self.width_multiplier;
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::config(format!("width_multiplier {alpha} outside (0, 1]")));
        }
        if self.input.c == 0 || self.input.h == 0 || self.input.w == 0 {
            return Err(Error::config(format!("input shape {} must be positive", self.input)));
        }
        match self.head {
            Head::SigmoidBinary if self.class_labels.len() != 2 => {
                return Err(Error::config(format!(
                    "sigmoid-binary head needs exactly 2 class labels, got {}",
                    self.class_labels.len()
                )))
            }
            Head::Softmax if self.class_labels.len() < 2 => {
                return Err(Error::config("softmax head needs at least 2 class labels"))
            }
            _ => {}
        }
        for (i, label) in self.class_labels.iter().enumerate() {
            if label.is_empty() || label.contains([',', '\n', '\r']) {
                return Err(Error::config(format!("class label {i} ({label:?}) is empty or contains a separator")));
            }
            if self.class_labels[..i].contains(label) {
                return Err(Error::config(format!("duplicate class label {label:?}")));
            }
        }
        if self.layers.is_empty() {
            return Err(Error::config("model has no layers"));
        }

        let mut plans = Vec::with_capacity(self.layers.len());
        let mut cur = self.input;
        for (index, layer) in self.layers.iter().enumerate() {
            let fail = |msg: String| Error::Config(format!("layer {index} ({}): {msg}", layer.kind_name()));
            let (output, channels) = match *layer {
                LayerSpec::Conv { out_channels, kernel, stride, padding, .. }
                | LayerSpec::Separable { out_channels, kernel, stride, padding, .. } => {
                    if out_channels == 0 {
                        return Err(fail("channel count must be positive".into()));
                    }
                    if !matches!(kernel, 1 | 3 | 5) {
                        return Err(fail(format!("kernel size {kernel} not in {{1, 3, 5}}")));
                    }
                    let h = conv_output_extent(cur.h, kernel, stride, padding).map_err(|e| fail(e.to_string()))?;
                    let w = conv_output_extent(cur.w, kernel, stride, padding).map_err(|e| fail(e.to_string()))?;
                    let c = scale_channels(out_channels, alpha);
                    (FeatureShape::new(c, h, w), c)
                }
                LayerSpec::MaxPool(window) | LayerSpec::AvgPool(window) => {
                    let (wh, ww, sh, sw) = match window {
                        PoolWindow::Global => (cur.h, cur.w, 1, 1),
                        PoolWindow::Square { size, stride } => (size, size, stride, stride),
                    };
                    let h = pool_output_extent(cur.h, wh, sh).map_err(|e| fail(e.to_string()))?;
                    let w = pool_output_extent(cur.w, ww, sw).map_err(|e| fail(e.to_string()))?;
                    (FeatureShape::new(cur.c, h, w), 0)
                }
                LayerSpec::Flatten => (FeatureShape::new(cur.len(), 1, 1), 0),
                LayerSpec::FullyConnected { units, in_features, .. } => {
                    if cur.h != 1 || cur.w != 1 {
                        return Err(fail(format!("input {cur} is not flat; insert a flatten layer")));
                    }
                    if let Some(d) = in_features {
                        if d != cur.c {
                            return Err(fail(format!("declares {d} input features but receives {}", cur.c)));
                        }
                    }
                    if units == 0 {
                        return Err(fail("unit count must be positive".into()));
                    }
                    (FeatureShape::new(units, 1, 1), 0)
                }
            };
            plans.push(LayerPlan {
                index,
                spec: layer.clone(),
                input: cur,
                output,
                channels,
            });
            cur = output;
        }

        let last = plans.last().expect("non-empty");
        if !matches!(last.spec, LayerSpec::FullyConnected { activation: Activation::None, .. }) {
            return Err(Error::Config(format!(
                "layer {} ({}): the final layer must be a fully-connected layer without activation",
                last.index,
                last.spec.kind_name()
            )));
        }
        if cur.c != self.logits() {
            return Err(Error::Config(format!(
                "layer {} (fully-connected): produces {} logits but the head needs {}",
                last.index,
                cur.c,
                self.logits()
            )));
        }
        Ok(plans)
    }

    /// Canonical configuration text.
    pub fn to_config(&self) -> ConfigText {
        let mut doc = ConfigText::new();
        doc.set("input", format!("{}x{}x{}", self.input.c, self.input.h, self.input.w));
        doc.set("width_multiplier", self.width_multiplier);
        doc.set(
            "head",
            match self.head {
                Head::SigmoidBinary => "sigmoid",
                Head::Softmax => "softmax",
            },
        );
        doc.set("classes", self.class_labels.join(","));
        doc.set("layers", self.layers.len());
        for (i, layer) in self.layers.iter().enumerate() {
            doc.set(&format!("layer.{i}"), render_layer(layer));
        }
        doc
    }

    pub fn to_config_text(&self) -> String {
        self.to_config().to_string()
    }

    pub fn from_config_text(text: &str) -> Result<Self> {
        Self::from_config(&ConfigText::parse(text)?)
    }

    /// Reads a model description. Keys other than the model's own are
    /// ignored so a model section can share a file with other settings.
    pub fn from_config(doc: &ConfigText) -> Result<Self> {
        let input = doc.require("input")?;
        let dims: Vec<usize> = input
            .split('x')
            .map(|p| p.trim().parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::config(format!("input {input:?}: {e}")))?;
        let [c, h, w] = dims[..] else {
            return Err(Error::config(format!("input {input:?}: expected CxHxW")));
        };
        let head = match doc.require("head")? {
            "sigmoid" | "sigmoid-binary" => Head::SigmoidBinary,
            "softmax" => Head::Softmax,
            other => return Err(Error::config(format!("unknown head {other:?}"))),
        };
        let class_labels: Vec<String> = doc.require("classes")?.split(',').map(|s| s.trim().to_string()).collect();
        let count: usize = doc.required("layers")?;
        let mut layers = Vec::with_capacity(count);
        for i in 0..count {
            let key = format!("layer.{i}");
            layers.push(parse_layer(doc.require(&key)?).map_err(|e| Error::config(format!("{key}: {e}")))?);
        }
        for key in doc.keys() {
            if let Some(idx) = key.strip_prefix("layer.") {
                if idx.parse::<usize>().map_or(true, |i| i >= count) {
                    return Err(Error::config(format!("`{key}` outside the declared {count} layers")));
                }
            }
        }
        let spec = Self {
            input: FeatureShape::new(c, h, w),
            width_multiplier: doc.required("width_multiplier")?,
            layers,
            head,
            class_labels,
        };
        spec.plan()?;
        Ok(spec)
    }
}

fn render_act(a: Activation) -> &'static str {
    match a {
        Activation::Relu => "relu",
        Activation::None => "none",
    }
}

fn render_pool(name: &str, w: PoolWindow) -> String {
    match w {
        PoolWindow::Global => format!("{name} global"),
        PoolWindow::Square { size, stride } => format!("{name} size={size} stride={stride}"),
    }
}

fn render_layer(layer: &LayerSpec) -> String {
    match *layer {
        LayerSpec::Conv { out_channels, kernel, stride, padding, bn, bias, activation }
        | LayerSpec::Separable { out_channels, kernel, stride, padding, bn, bias, activation } => format!(
            "{} out={out_channels} k={kernel} stride={stride} pad={padding} bn={} bias={} act={}",
            if matches!(layer, LayerSpec::Conv { .. }) { "conv" } else { "separable" },
            bn as u8,
            bias as u8,
            render_act(activation)
        ),
        LayerSpec::MaxPool(w) => render_pool("maxpool", w),
        LayerSpec::AvgPool(w) => render_pool("avgpool", w),
        LayerSpec::Flatten => "flatten".to_string(),
        LayerSpec::FullyConnected { units, in_features, activation } => match in_features {
            Some(d) => format!("fc units={units} in={d} act={}", render_act(activation)),
            None => format!("fc units={units} act={}", render_act(activation)),
        },
    }
}

fn parse_layer(text: &str) -> std::result::Result<LayerSpec, String> {
    let mut tokens = text.split_whitespace();
    let kind = tokens.next().ok_or("empty layer description")?;
    let mut opts: Vec<(&str, &str)> = Vec::new();
    let mut global = false;
    for tok in tokens {
        if tok == "global" {
            global = true;
            continue;
        }
        let (k, v) = tok.split_once('=').ok_or_else(|| format!("expected key=value, found {tok:?}"))?;
        opts.push((k, v));
    }
    let take = |key: &str| opts.iter().find(|(k, _)| *k == key).map(|(_, v)| *v);
    let num = |key: &str, default: Option<usize>| -> std::result::Result<usize, String> {
        match take(key) {
            Some(v) => v.parse().map_err(|e| format!("{key}={v}: {e}")),
            None => default.ok_or_else(|| format!("missing {key}=")),
        }
    };
    let flag = |key: &str, default: bool| -> std::result::Result<bool, String> {
        match take(key) {
            None => Ok(default),
            Some("1" | "true") => Ok(true),
            Some("0" | "false") => Ok(false),
            Some(v) => Err(format!("{key}={v}: expected 0/1")),
        }
    };
    let act = |default: Activation| -> std::result::Result<Activation, String> {
        match take("act") {
            None => Ok(default),
            Some("relu") => Ok(Activation::Relu),
            Some("none") => Ok(Activation::None),
            Some(v) => Err(format!("act={v}: expected relu or none")),
        }
    };
    let known: &[&str] = match kind {
        "conv" | "separable" => &["out", "k", "stride", "pad", "bn", "bias", "act"],
        "maxpool" | "avgpool" => &["size", "stride"],
        "flatten" => &[],
        "fc" => &["units", "in", "act"],
        other => return Err(format!("unknown layer kind {other:?}")),
    };
    if let Some((k, _)) = opts.iter().find(|(k, _)| !known.contains(k)) {
        return Err(format!("unknown option {k:?} for {kind}"));
    }
    Ok(match kind {
        "conv" | "separable" => {
            let kernel = num("k", Some(3))?;
            let bn = flag("bn", true)?;
            let fields = (
                num("out", None)?,
                kernel,
                num("stride", Some(1))?,
                num("pad", Some(kernel / 2))?,
                bn,
                flag("bias", !bn)?,
                act(Activation::Relu)?,
            );
            let (out_channels, kernel, stride, padding, bn, bias, activation) = fields;
            if kind == "conv" {
                LayerSpec::Conv { out_channels, kernel, stride, padding, bn, bias, activation }
            } else {
                LayerSpec::Separable { out_channels, kernel, stride, padding, bn, bias, activation }
            }
        }
        "maxpool" | "avgpool" => {
            let window = if global {
                PoolWindow::Global
            } else {
                let size = num("size", None)?;
                PoolWindow::Square { size, stride: num("stride", Some(size))? }
            };
            if kind == "maxpool" {
                LayerSpec::MaxPool(window)
            } else {
                LayerSpec::AvgPool(window)
            }
        }
        "flatten" => LayerSpec::Flatten,
        _ => LayerSpec::FullyConnected {
            units: num("units", None)?,
            in_features: take("in").map(|v| v.parse().map_err(|e| format!("in={v}: {e}"))).transpose()?,
            activation: act(Activation::None)?,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(k: usize) -> Vec<String> {
        (0..k).map(|i| format!("c{i}")).collect()
    }

    #[test]
    fn width_multiplier_rounding() {
        assert_eq!(scale_channels(32, 0.25), 8);
        assert_eq!(scale_channels(3, 0.25), 1);
        assert_eq!(scale_channels(1, 0.1), 1);
        assert_eq!(scale_channels(64, 0.5), 32);
    }

    #[test]
    fn desk_plan_shapes() {
        let spec = ModelSpec::desk(labels(5), 32, 32, 0.25);
        let plan = spec.plan().unwrap();
        assert_eq!(plan[0].output, FeatureShape::new(8, 16, 16));
        assert_eq!(plan[5].output, FeatureShape::new(64, 4, 4));
        assert_eq!(plan.last().unwrap().output, FeatureShape::new(5, 1, 1));
    }

    #[test]
    fn mobilenet_v1_at_224_and_640x480() {
        let plan = ModelSpec::mobilenet_v1(labels(10), 224, 224, 1.0).plan().unwrap();
        assert_eq!(plan[13].output, FeatureShape::new(1024, 7, 7));
        let plan = ModelSpec::mobilenet_v1(labels(10), 480, 640, 1.0).plan().unwrap();
        assert_eq!(plan[13].output, FeatureShape::new(1024, 15, 20));
    }

    #[test]
    fn fc_input_mismatch_names_the_layer() {
        let mut spec = ModelSpec::desk(labels(5), 32, 32, 0.25);
        let last = spec.layers.len() - 1;
        spec.layers[last] = LayerSpec::FullyConnected {
            units: 5,
            in_features: Some(999),
            activation: Activation::None,
        };
        let msg = spec.plan().unwrap_err().to_string();
        assert!(msg.contains(&format!("layer {last} (fully-connected)")), "{msg}");
    }

    #[test]
    fn unflattened_fc_is_rejected() {
        let spec = ModelSpec {
            input: FeatureShape::new(3, 4, 4),
            width_multiplier: 1.0,
            layers: vec![LayerSpec::fc(2, Activation::None)],
            head: Head::Softmax,
            class_labels: labels(2),
        };
        assert!(spec.plan().unwrap_err().to_string().contains("layer 0 (fully-connected)"));
    }

    #[test]
    fn head_label_count_checked() {
        let mut spec = ModelSpec::desk(labels(3), 32, 32, 0.25);
        spec.head = Head::SigmoidBinary;
        assert!(spec.plan().is_err());
        let mut spec = ModelSpec::desk(labels(3), 32, 32, 0.25);
        spec.class_labels.push("c3".into());
        assert!(spec.plan().unwrap_err().to_string().contains("logits"));
    }

    #[test]
    fn config_round_trip() {
        let mut spec = ModelSpec::desk(labels(5), 32, 24, 0.5);
        spec.layers.insert(1, LayerSpec::MaxPool(PoolWindow::Square { size: 2, stride: 2 }));
        let text = spec.to_config_text();
        let back = ModelSpec::from_config_text(&text).unwrap();
        assert_eq!(back, spec);
        assert_eq!(back.to_config_text(), text);
    }

    #[test]
    fn config_rejects_unknown_layer_option() {
        let text = "input = 3x8x8\nwidth_multiplier = 1\nhead = softmax\nclasses = a,b\nlayers = 1\nlayer.0 = fc units=2 colour=red\n";
        assert!(ModelSpec::from_config_text(text).is_err());
    }
}
