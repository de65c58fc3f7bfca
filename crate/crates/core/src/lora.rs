//! Low-rank adaptation: `y = Wx + b + (α/r)·B(Ax)` with `W`, `b` frozen.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fusion::{Adapter, Model};
use crate::nn::tensor::{matmul_nn, matmul_nt, matmul_tn_acc};
use crate::nn::Tensor;

pub const DEFAULT_RANK: usize = 8;
pub const SUPPORTED_RANKS: [usize; 5] = [2, 4, 8, 16, 64];
pub const INIT_STD: f64 = 0.02;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LoraConfig {
    /// 0 disables adapters (full finetuning).
    pub rank: usize,
    /// Defaults to `2·rank`.
    pub alpha: Option<f64>,
    pub dropout: f64,
    /// Keep layer-norm gain/bias and the classifier bias trainable.
    pub train_head: bool,
}

impl Default for LoraConfig {
    fn default() -> Self {
        LoraConfig {
            rank: DEFAULT_RANK,
            alpha: None,
            dropout: 0.0,
            train_head: true,
        }
    }
}

impl LoraConfig {
    pub fn enabled(&self) -> bool {
        self.rank > 0
    }

    pub fn alpha(&self) -> f64 {
        self.alpha.unwrap_or(2.0 * self.rank as f64)
    }
}

fn check_rank(rank: usize, din: usize, dout: usize) -> Result<()> {
    if rank == 0 || rank > din.min(dout) {
        return Err(Error::InvalidRank { rank, din, dout });
    }
    Ok(())
}

fn gaussian_init<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Tensor {
    let normal = Normal::new(0.0, INIT_STD).expect("valid std");
    Tensor::matrix(rows, cols, (0..rows * cols).map(|_| normal.sample(rng)).collect()).expect("shape")
}

/// Returns `(scale·(x·Aᵀ)·Bᵀ, x·Aᵀ)` for `x: n×din`, `A: r×din`, `B: dout×r`.
pub fn adapter_forward(x: &Tensor, a: &Tensor, b: &Tensor, scale: f64) -> (Tensor, Tensor) {
    let (r, din) = (a.rows(), a.cols());
    let dout = b.rows();
    let n = x.len() / din;
    let ax = matmul_nt(x.data(), n, din, a.data(), r);
    let mut delta = matmul_nt(&ax, n, r, b.data(), dout);
    delta.iter_mut().for_each(|v| *v *= scale);
    (
        Tensor::matrix(n, dout, delta).expect("delta shape"),
        Tensor::matrix(n, r, ax).expect("ax shape"),
    )
}

/// Gradients of the adapter term: `(dx, dA, dB)`, with `dx` only when asked.
pub fn adapter_backward(
    x: &Tensor,
    ax: &Tensor,
    a: &Tensor,
    b: &Tensor,
    scale: f64,
    dy: &Tensor,
    need_dx: bool,
) -> (Option<Tensor>, Tensor, Tensor) {
    let (r, din) = (a.rows(), a.cols());
    let dout = b.rows();
    let n = x.len() / din;
    let mut db = vec![0.0; dout * r];
    matmul_tn_acc(&mut db, dy.data(), n, dout, ax.data(), r);
    db.iter_mut().for_each(|v| *v *= scale);
    // d(ax) = scale · dy · B
    let mut dax = matmul_nn(dy.data(), n, dout, b.data(), r);
    dax.iter_mut().for_each(|v| *v *= scale);
    let mut da = vec![0.0; r * din];
    matmul_tn_acc(&mut da, &dax, n, r, x.data(), din);
    let dx = need_dx.then(|| Tensor::new(x.shape().to_vec(), matmul_nn(&dax, n, r, a.data(), din)).expect("dx shape"));
    (
        dx,
        Tensor::matrix(r, din, da).expect("dA shape"),
        Tensor::matrix(dout, r, db).expect("dB shape"),
    )
}

/// A plain dense layer `y = x·Wᵀ + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLinear {
    pub weight: Tensor,
    pub bias: Tensor,
}

impl DenseLinear {
    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        crate::nn::linear(x, &self.weight, &self.bias)
    }
}

/// A dense layer with a frozen base and a trainable low-rank correction.
#[derive(Debug, Clone, PartialEq)]
pub struct LoraLinear {
    pub weight: Tensor,
    pub bias: Tensor,
    pub a: Tensor,
    pub b: Tensor,
    pub rank: usize,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoraGrads {
    pub dx: Tensor,
    pub da: Tensor,
    pub db: Tensor,
    /// Always zero; the base is frozen.
    pub dweight: Tensor,
    pub dbias: Tensor,
}

pub fn wrap_linear<R: Rng + ?Sized>(layer: &DenseLinear, rank: usize, alpha: f64, rng: &mut R) -> Result<LoraLinear> {
    let (dout, din) = (layer.weight.rows(), layer.weight.cols());
    check_rank(rank, din, dout)?;
    Ok(LoraLinear {
        weight: layer.weight.clone(),
        bias: layer.bias.clone(),
        a: gaussian_init(rank, din, rng),
        b: Tensor::zeros(&[dout, rank]),
        rank,
        alpha,
    })
}

impl LoraLinear {
    pub fn din(&self) -> usize {
        self.weight.cols()
    }

    pub fn dout(&self) -> usize {
        self.weight.rows()
    }

    pub fn scale(&self) -> f64 {
        self.alpha / self.rank as f64
    }

    fn check_input(&self, x: &Tensor) -> Result<()> {
        if x.cols() != self.din() {
            return Err(Error::ShapeMismatch(format!("input width {} vs layer din {}", x.cols(), self.din())));
        }
        Ok(())
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        self.check_input(x)?;
        let mut y = crate::nn::linear(x, &self.weight, &self.bias)?;
        let (delta, _) = adapter_forward(x, &self.a, &self.b, self.scale());
        for (v, d) in y.data_mut().iter_mut().zip(delta.data()) {
            *v += d;
        }
        Ok(y)
    }

    pub fn backward(&self, x: &Tensor, dy: &Tensor) -> Result<LoraGrads> {
        self.check_input(x)?;
        if dy.cols() != self.dout() || dy.rows() != x.rows() {
            return Err(Error::ShapeMismatch(format!("dy {:?} vs output ({}, {})", dy.shape(), x.rows(), self.dout())));
        }
        let (_, ax) = adapter_forward(x, &self.a, &self.b, self.scale());
        let (dx_adapter, da, db) = adapter_backward(x, &ax, &self.a, &self.b, self.scale(), dy, true);
        let n = x.rows();
        let mut dx = Tensor::matrix(n, self.din(), matmul_nn(dy.data(), n, self.dout(), self.weight.data(), self.din()))?;
        dx.add_assign(&dx_adapter.expect("requested"));
        Ok(LoraGrads {
            dx,
            da,
            db,
            dweight: Tensor::zeros(self.weight.shape()),
            dbias: Tensor::zeros(self.bias.shape()),
        })
    }

    /// `W′ = W + (α/r)·B·A`.
    pub fn merge(&self) -> DenseLinear {
        DenseLinear {
            weight: merged_weight(&self.weight, &self.a, &self.b, self.scale()),
            bias: self.bias.clone(),
        }
    }

    /// Scalars added by the adapter: `r·(din + dout)`.
    pub fn adapter_param_count(&self) -> usize {
        adapter_param_count(self.rank, self.din(), self.dout())
    }
}

pub fn adapter_param_count(rank: usize, din: usize, dout: usize) -> usize {
    rank * (din + dout)
}

fn merged_weight(w: &Tensor, a: &Tensor, b: &Tensor, scale: f64) -> Tensor {
    let (dout, din, r) = (w.rows(), w.cols(), a.rows());
    let mut out = w.clone();
    let data = out.data_mut();
    for o in 0..dout {
        for k in 0..r {
            let bk = scale * b.data()[o * r + k];
            if bk == 0.0 {
                continue;
            }
            for (v, av) in data[o * din..(o + 1) * din].iter_mut().zip(&a.data()[k * din..(k + 1) * din]) {
                *v += bk * av;
            }
        }
    }
    out
}

/// Attaches adapters to every linear layer of `model` and freezes the base.
pub fn apply_lora<R: Rng + ?Sized>(model: &mut Model, cfg: &LoraConfig, rng: &mut R) -> Result<()> {
    if !cfg.enabled() {
        return Ok(());
    }
    if model.lora().is_some() {
        return Err(Error::InvalidConfig("model already carries adapters".into()));
    }
    if !(0.0..1.0).contains(&cfg.dropout) {
        return Err(Error::InvalidConfig(format!("lora dropout must be in [0, 1), got {}", cfg.dropout)));
    }
    for layer in model.linears() {
        check_rank(cfg.rank, layer.din, layer.dout)?;
    }
    let alpha = cfg.alpha();
    let base_len = model.params().len();
    let names: Vec<String> = model.params().names();
    let (params, layers, lora_slot) = model.lora_parts();
    for name in &names {
        let id = params.id(name).expect("listed name");
        params.set_trainable(id, false);
    }
    for layer in layers {
        let a = params.insert(format!("{}.lora_a", layer.name), gaussian_init(cfg.rank, layer.din, rng), true)?;
        let b = params.insert(format!("{}.lora_b", layer.name), Tensor::zeros(&[layer.dout, cfg.rank]), true)?;
        layer.adapter = Some(Adapter {
            a,
            b,
            rank: cfg.rank,
            alpha,
            dropout: cfg.dropout,
        });
    }
    if cfg.train_head {
        for name in ["norm.gain", "norm.bias", "cls.bias"] {
            let id = params.id(name).expect("head parameter");
            params.set_trainable(id, true);
        }
    }
    *lora_slot = Some((cfg.clone(), base_len));
    Ok(())
}

/// Folds every adapter into its base weight; the result has no adapters and
/// every parameter trainable.
pub fn merge_model(model: &Model) -> Model {
    let mut merged = model.clone();
    let (params, layers, lora_slot) = merged.lora_parts();
    let Some((_, base_len)) = lora_slot.take() else {
        return merged;
    };
    for layer in layers {
        if let Some(ad) = layer.adapter.take() {
            let w = merged_weight(params.value(layer.weight), params.value(ad.a), params.value(ad.b), ad.scale());
            *params.value_mut(layer.weight) = w;
        }
    }
    params.truncate(base_len);
    let ids: Vec<_> = params.iter().map(|(id, _, _)| id).collect();
    for id in ids {
        params.set_trainable(id, true);
    }
    merged
}

/// `(trainable, total)` scalar counts.
pub fn trainable_param_count(model: &Model) -> (usize, usize) {
    let (total, trainable) = model.params().counts();
    (trainable, total)
}
