//! Sentence-context fusion architectures and the shared classification head.
//!
//! Every variant maps token states `H: L×D` to `H′: L×D`; the head then runs
//! `linear D→hidden`, dropout, GELU, layer norm and `linear hidden→C`.

mod context;
mod linear;
mod model;

use serde::{Deserialize, Serialize};

pub use context::{ContextBlock, ContextCache, LstmLayer};
pub use linear::{Adapter, Linear, LinearCache};
pub use model::{argmax_labels, ForwardCache, Model, ModelConfig};

use crate::error::{Error, Result};
use crate::nn::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FusionVariant {
    /// No context block.
    #[serde(rename = "base")]
    BaseTe,
    /// `h′ = W_f [h ; mean(H)] + b_f`
    #[serde(rename = "concat")]
    ConcatPool,
    /// `h′ = γ(s) ⊙ h + β(s)` with `s = mean(H)`
    #[serde(rename = "film")]
    Film,
    /// `h′ = [→h ; ←h]`, each direction `D/2` wide
    #[serde(rename = "bilstm")]
    BiLstm,
    /// `h′ = g ⊙ h + (1 − g) ⊙ s`, `g = σ(W_g [h ; s] + b_g)`, `s = h_L`
    #[serde(rename = "gated")]
    Gated,
}

impl FusionVariant {
    pub const ALL: [FusionVariant; 5] = [
        FusionVariant::BaseTe,
        FusionVariant::ConcatPool,
        FusionVariant::Film,
        FusionVariant::BiLstm,
        FusionVariant::Gated,
    ];

    pub fn key(self) -> &'static str {
        match self {
            FusionVariant::BaseTe => "base",
            FusionVariant::ConcatPool => "concat",
            FusionVariant::Film => "film",
            FusionVariant::BiLstm => "bilstm",
            FusionVariant::Gated => "gated",
        }
    }

    pub fn uses_context(self) -> bool {
        self != FusionVariant::BaseTe
    }
}

impl std::str::FromStr for FusionVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FusionVariant::ALL
            .into_iter()
            .find(|v| v.key() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown variant {s:?} (expected base|concat|film|bilstm|gated)")))
    }
}

impl std::fmt::Display for FusionVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.key())
    }
}

/// Where dropout sits relative to GELU in the head.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeadOrder {
    #[default]
    DropoutThenGelu,
    GeluThenDropout,
}

/// Arithmetic mean of the rows of `H`. Each column is summed in ascending
/// value order, so the result is bit-identical under any row permutation.
pub fn mean_pool(h: &Tensor) -> Result<Vec<f64>> {
    let (l, d) = (h.rows(), h.cols());
    if l == 0 {
        return Err(Error::DimensionMismatch("mean pooling over zero tokens".into()));
    }
    let mut column = vec![0.0; l];
    let s = (0..d)
        .map(|k| {
            for (r, v) in column.iter_mut().enumerate() {
                *v = h.row(r)[k];
            }
            column.sort_unstable_by(f64::total_cmp);
            column.iter().sum::<f64>() / l as f64
        })
        .collect();
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_pool_cases() {
        let h = Tensor::from_rows(&[vec![1.0, 3.0], vec![3.0, 5.0]]).unwrap();
        assert_eq!(mean_pool(&h).unwrap(), vec![2.0, 4.0]);
        let one = Tensor::from_rows(&[vec![0.25, -7.0]]).unwrap();
        assert_eq!(mean_pool(&one).unwrap(), vec![0.25, -7.0]);
        assert!(mean_pool(&Tensor::zeros(&[0, 3])).is_err());
    }

    #[test]
    fn variant_keys_round_trip() {
        for v in FusionVariant::ALL {
            assert_eq!(v.key().parse::<FusionVariant>().unwrap(), v);
            assert_eq!(serde_json::to_string(&v).unwrap(), format!("\"{}\"", v.key()));
        }
        assert!("attention".parse::<FusionVariant>().is_err());
    }
}
