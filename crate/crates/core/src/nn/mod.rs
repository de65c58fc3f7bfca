//! Minimal deterministic layer toolkit.
//!
//! Layers are hand-paired forward/backward functions over row-major `f64`
//! tensors; there is no autodiff graph.

mod gradcheck;
mod lstm;
mod ops;
mod optim;
mod params;
pub(crate) mod tensor;

pub use gradcheck::{grad_check, GradCheckReport};
pub use lstm::{lstm_cell_backward, lstm_cell_forward, lstm_step, lstm_step_backward, LstmCellCache, LstmStepGrads, LstmWeights};
pub use ops::{
    dropout, gelu, gelu_backward, layer_norm, layer_norm_backward, linear, linear_backward,
    sigmoid, softmax_cross_entropy, softmax_cross_entropy_sum, LayerNormCache, LinearGrads,
    LAYER_NORM_EPS,
};
pub use optim::{adamw_step, lr_schedule, AdamWConfig, DecayShape};
pub use params::{Grads, Param, ParamId, ParamStore};
pub use tensor::Tensor;
