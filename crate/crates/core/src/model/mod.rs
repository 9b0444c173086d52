//! Declarative MobileNet-style networks: specification, initialization,
//! forward/backward passes, cost accounting and the weight file.

mod cost;
mod io;
mod network;
mod spec;
mod weights;

pub use cost::{count_flops, count_params, CostReport, LayerCount};
pub use io::{decode_weights, encode_weights, load_weights, save_weights, FORMAT_VERSION, MAGIC};
pub use network::{argmax, decide, forward, head_probabilities, predict, predict_batch, Network, Prediction, Tape};
pub use spec::{scale_channels, Activation, FeatureShape, Head, LayerPlan, LayerSpec, ModelSpec, PoolWindow, DEFAULT_INPUT};
pub use weights::{build_model, ModelWeights, Param, ParamRole};
