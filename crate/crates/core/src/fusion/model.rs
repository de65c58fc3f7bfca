use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::context::{ContextBlock, ContextCache};
use super::linear::{Linear, LinearCache};
use super::{FusionVariant, HeadOrder};
use crate::error::{Error, Result};
use crate::lora::LoraConfig;
use crate::nn::{
    dropout, gelu, gelu_backward, grad_check, GradCheckReport, layer_norm, layer_norm_backward, softmax_cross_entropy_sum, Grads, LayerNormCache,
    ParamId, ParamStore, Tensor,
};

pub const DEFAULT_HIDDEN: usize = 100;
pub const DEFAULT_DROPOUT: f64 = 0.2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub variant: FusionVariant,
    pub embed_dim: usize,
    pub hidden_dim: usize,
    /// Event types plus NA.
    pub num_labels: usize,
    pub dropout: f64,
    pub head_order: HeadOrder,
}

impl ModelConfig {
    pub fn new(variant: FusionVariant, embed_dim: usize, num_labels: usize) -> Self {
        ModelConfig {
            variant,
            embed_dim,
            hidden_dim: DEFAULT_HIDDEN,
            num_labels,
            dropout: DEFAULT_DROPOUT,
            head_order: HeadOrder::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.embed_dim == 0 {
            return Err(Error::InvalidConfig("embedding dim must be positive".into()));
        }
        if self.hidden_dim < 2 {
            return Err(Error::InvalidConfig("hidden dim must be at least 2".into()));
        }
        if self.num_labels < 2 {
            return Err(Error::InvalidConfig("need at least one event type besides NA".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::InvalidConfig(format!("dropout must be in [0, 1), got {}", self.dropout)));
        }
        if self.variant == FusionVariant::BiLstm && self.embed_dim % 2 != 0 {
            return Err(Error::DimensionMismatch(format!(
                "BiLSTM needs an even embedding dim, got {}",
                self.embed_dim
            )));
        }
        Ok(())
    }
}

/// Context block plus the shared projection/normalization/classifier head.
#[derive(Debug, Clone)]
pub struct Model {
    config: ModelConfig,
    params: ParamStore,
    context: ContextBlock,
    proj: Linear,
    norm_gain: ParamId,
    norm_bias: ParamId,
    cls: Linear,
    /// Adapter settings and the parameter count before adapters were added.
    lora: Option<(LoraConfig, usize)>,
}

#[derive(Debug, Clone)]
pub struct ForwardCache {
    context: ContextCache,
    proj: LinearCache,
    gelu_in: Tensor,
    mask: Option<Vec<f64>>,
    norm: LayerNormCache,
    cls: LinearCache,
}

impl Model {
    pub fn new<R: Rng + ?Sized>(config: ModelConfig, rng: &mut R) -> Result<Model> {
        config.validate()?;
        let (d, hidden, c) = (config.embed_dim, config.hidden_dim, config.num_labels);
        let mut params = ParamStore::new();
        let context = ContextBlock::create(config.variant, &mut params, d, rng)?;
        let proj = Linear::create(&mut params, "proj", d, hidden, true, rng)?;
        let norm_gain = params.insert("norm.gain", Tensor::filled(&[hidden], 1.0), true)?;
        let norm_bias = params.insert("norm.bias", Tensor::zeros(&[hidden]), true)?;
        let cls = Linear::create(&mut params, "cls", hidden, c, true, rng)?;
        Ok(Model {
            config,
            params,
            context,
            proj,
            norm_gain,
            norm_bias,
            cls,
            lora: None,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn variant(&self) -> FusionVariant {
        self.config.variant
    }

    pub fn params(&self) -> &ParamStore {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamStore {
        &mut self.params
    }

    pub fn context(&self) -> &ContextBlock {
        &self.context
    }

    pub fn context_mut(&mut self) -> &mut ContextBlock {
        &mut self.context
    }

    pub fn lora(&self) -> Option<&LoraConfig> {
        self.lora.as_ref().map(|(cfg, _)| cfg)
    }

    /// Every linear layer: context block first, then projection and classifier.
    pub fn linears(&self) -> Vec<&Linear> {
        let mut out = self.context.linears();
        out.push(&self.proj);
        out.push(&self.cls);
        out
    }

    pub(crate) fn lora_parts(&mut self) -> (&mut ParamStore, Vec<&mut Linear>, &mut Option<(LoraConfig, usize)>) {
        let mut layers = self.context.linears_mut();
        layers.push(&mut self.proj);
        layers.push(&mut self.cls);
        (&mut self.params, layers, &mut self.lora)
    }

    fn check_input(&self, h: &Tensor) -> Result<()> {
        if h.shape().len() != 2 || h.cols() != self.config.embed_dim {
            return Err(Error::DimensionMismatch(format!(
                "expected L×{} token states, got {:?}",
                self.config.embed_dim,
                h.shape()
            )));
        }
        if h.rows() == 0 {
            return Err(Error::DimensionMismatch("sentence with zero tokens".into()));
        }
        Ok(())
    }

    /// Context block output `H′` (`L×D`).
    pub fn context_forward(&self, h: &Tensor) -> Result<Tensor> {
        self.check_input(h)?;
        Ok(self.context.forward::<ChaCha8Rng>(&self.params, h, false, &mut None)?.0)
    }

    /// Raw logits `L×C`. Dropout is active only when `train` is set and an rng is given.
    pub fn forward<R: Rng + ?Sized>(
        &self,
        h: &Tensor,
        train: bool,
        rng: &mut Option<&mut R>,
    ) -> Result<(Tensor, ForwardCache)> {
        self.check_input(h)?;
        let ps = &self.params;
        let (hc, context) = self.context.forward(ps, h, train, rng)?;
        let (p, proj) = self.proj.forward(ps, &hc, train, rng);
        let p_drop = self.config.dropout;
        let mut apply_dropout = |x: &Tensor| match rng {
            Some(r) if train => dropout(x, p_drop, true, &mut **r),
            _ => (x.clone(), None),
        };
        let (gelu_in, act, mask) = match self.config.head_order {
            HeadOrder::DropoutThenGelu => {
                let (dropped, mask) = apply_dropout(&p);
                let act = gelu(&dropped);
                (dropped, act, mask)
            }
            HeadOrder::GeluThenDropout => {
                let g = gelu(&p);
                let (act, mask) = apply_dropout(&g);
                (p, act, mask)
            }
        };
        let (z, norm) = layer_norm(&act, ps.value(self.norm_gain), ps.value(self.norm_bias))?;
        let (logits, cls) = self.cls.forward(ps, &z, train, rng);
        Ok((
            logits,
            ForwardCache {
                context,
                proj,
                gelu_in,
                mask,
                norm,
                cls,
            },
        ))
    }

    /// Accumulates parameter gradients for `dlogits` into `grads`.
    pub fn backward(&self, cache: &ForwardCache, dlogits: &Tensor, grads: &mut Grads) {
        let ps = &self.params;
        let dz = self.cls.backward(ps, &cache.cls, dlogits, grads, true).expect("dx requested");
        let (dact, dgain, dbias) = layer_norm_backward(&cache.norm, ps.value(self.norm_gain), &dz);
        if let Some(g) = grads.slot_mut(self.norm_gain) {
            g.add_assign(&dgain);
        }
        if let Some(g) = grads.slot_mut(self.norm_bias) {
            g.add_assign(&dbias);
        }
        let unmask = |mut t: Tensor| {
            if let Some(mask) = &cache.mask {
                t.data_mut().iter_mut().zip(mask).for_each(|(v, m)| *v *= m);
            }
            t
        };
        let dp = match self.config.head_order {
            HeadOrder::DropoutThenGelu => unmask(gelu_backward(&cache.gelu_in, &dact)),
            HeadOrder::GeluThenDropout => gelu_backward(&cache.gelu_in, &unmask(dact)),
        };
        let need_dx = self.config.variant.uses_context();
        if let Some(dhc) = self.proj.backward(ps, &cache.proj, &dp, grads, need_dx) {
            self.context.backward(ps, &cache.context, &dhc, grads);
        }
    }

    /// Logits in the requested mode.
    pub fn classify_tokens<R: Rng + ?Sized>(&self, h: &Tensor, train: bool, rng: &mut Option<&mut R>) -> Result<Tensor> {
        Ok(self.forward(h, train, rng)?.0)
    }

    pub fn logits(&self, h: &Tensor) -> Result<Tensor> {
        self.classify_tokens::<ChaCha8Rng>(h, false, &mut None)
    }

    /// Eval-mode argmax per token.
    pub fn predict_labels(&self, h: &Tensor) -> Result<Vec<usize>> {
        Ok(argmax_labels(&self.logits(h)?))
    }

    /// Summed token cross-entropy and gradients scaled by `grad_scale`.
    pub fn loss_and_grads<R: Rng + ?Sized>(
        &self,
        h: &Tensor,
        labels: &[usize],
        grad_scale: f64,
        rng: &mut Option<&mut R>,
    ) -> Result<(f64, Grads)> {
        let (logits, cache) = self.forward(h, true, rng)?;
        let (loss, dlogits) = softmax_cross_entropy_sum(&logits, labels, grad_scale)?;
        let mut grads = self.params.grad_buffers();
        self.backward(&cache, &dlogits, &mut grads);
        Ok((loss, grads))
    }

    /// Compares backprop against central differences of the summed token loss
    /// with dropout disabled.
    pub fn check_gradients(&self, h: &Tensor, labels: &[usize], eps: f64) -> Result<GradCheckReport> {
        let (_, grads) = self.loss_and_grads::<ChaCha8Rng>(h, labels, 1.0, &mut None)?;
        let mut ps = self.params.clone();
        ps.set_grads(&grads);
        let mut probe = self.clone();
        grad_check(
            &ps,
            |p| {
                probe.params = p.clone();
                probe
                    .forward::<ChaCha8Rng>(h, true, &mut None)
                    .and_then(|(logits, _)| softmax_cross_entropy_sum(&logits, labels, 0.0))
                    .map_or(f64::NAN, |(loss, _)| loss)
            },
            eps,
        )
    }

    /// Mean token loss in eval mode.
    pub fn eval_loss(&self, h: &Tensor, labels: &[usize]) -> Result<f64> {
        let logits = self.logits(h)?;
        let (loss, _) = softmax_cross_entropy_sum(&logits, labels, 0.0)?;
        Ok(loss / labels.len() as f64)
    }
}

/// Row-wise argmax; ties go to the lowest index.
pub fn argmax_labels(logits: &Tensor) -> Vec<usize> {
    (0..logits.rows())
        .map(|r| {
            let row = logits.row(r);
            let mut best = 0;
            for (j, &v) in row.iter().enumerate().skip(1) {
                if v > row[best] {
                    best = j;
                }
            }
            best
        })
        .collect()
}
