use rand::Rng;

use crate::error::Result;
use crate::lora::{adapter_backward, adapter_forward};
use crate::nn::{dropout, Grads, ParamId, ParamStore, Tensor};
use crate::nn::tensor::{matmul_nn, matmul_nt, matmul_tn_acc};

/// Low-rank adapter attached to a [`Linear`]: `Δy = (α/r)·B(Ax)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Adapter {
    /// `r × din`
    pub a: ParamId,
    /// `dout × r`
    pub b: ParamId,
    pub rank: usize,
    pub alpha: f64,
    /// Dropout applied to the adapter's input only.
    pub dropout: f64,
}

impl Adapter {
    pub fn scale(&self) -> f64 {
        self.alpha / self.rank as f64
    }
}

/// A linear layer whose tensors live in a [`ParamStore`].
#[derive(Debug, Clone, PartialEq)]
pub struct Linear {
    pub name: String,
    pub weight: ParamId,
    pub bias: Option<ParamId>,
    pub adapter: Option<Adapter>,
    pub din: usize,
    pub dout: usize,
}

#[derive(Debug, Clone)]
pub struct LinearCache {
    x: Tensor,
    adapter: Option<AdapterCache>,
}

#[derive(Debug, Clone)]
struct AdapterCache {
    /// Adapter input after dropout, with its mask; `None` when dropout is off.
    dropped: Option<(Tensor, Vec<f64>)>,
    ax: Tensor,
}

impl Linear {
    /// Registers `<name>.weight` drawn from `U(−1/√din, 1/√din)` and a zero `<name>.bias`.
    pub fn create<R: Rng + ?Sized>(
        ps: &mut ParamStore,
        name: &str,
        din: usize,
        dout: usize,
        with_bias: bool,
        rng: &mut R,
    ) -> Result<Linear> {
        let bound = 1.0 / (din as f64).sqrt();
        let w: Vec<f64> = (0..din * dout).map(|_| rng.random_range(-bound..=bound)).collect();
        let weight = ps.insert(format!("{name}.weight"), Tensor::matrix(dout, din, w)?, true)?;
        let bias = if with_bias {
            Some(ps.insert(format!("{name}.bias"), Tensor::zeros(&[dout]), true)?)
        } else {
            None
        };
        Ok(Linear {
            name: name.to_string(),
            weight,
            bias,
            adapter: None,
            din,
            dout,
        })
    }

    /// `y = x·Wᵀ + b (+ (α/r)·(x·Aᵀ)·Bᵀ)`; never materializes `W + ΔW`.
    pub fn forward<R: Rng + ?Sized>(
        &self,
        ps: &ParamStore,
        x: &Tensor,
        train: bool,
        rng: &mut Option<&mut R>,
    ) -> (Tensor, LinearCache) {
        let n = x.rows();
        let mut y = matmul_nt(x.data(), n, self.din, ps.value(self.weight).data(), self.dout);
        if let Some(b) = self.bias {
            for row in y.chunks_mut(self.dout) {
                for (v, bv) in row.iter_mut().zip(ps.value(b).data()) {
                    *v += bv;
                }
            }
        }
        let adapter = self.adapter.as_ref().map(|ad| {
            let dropped = match rng {
                Some(r) if train && ad.dropout > 0.0 => {
                    let (xd, mask) = dropout(x, ad.dropout, true, &mut **r);
                    mask.map(|m| (xd, m))
                }
                _ => None,
            };
            let xin = dropped.as_ref().map_or(x, |(xd, _)| xd);
            let (delta, ax) = adapter_forward(xin, ps.value(ad.a), ps.value(ad.b), ad.scale());
            for (v, d) in y.iter_mut().zip(delta.data()) {
                *v += d;
            }
            AdapterCache { dropped, ax }
        });
        let mut shape = x.shape().to_vec();
        *shape.last_mut().expect("non-scalar input") = self.dout;
        let y = Tensor::new(shape, y).expect("linear output shape");
        (
            y,
            LinearCache {
                x: x.clone(),
                adapter,
            },
        )
    }

    pub fn forward_eval(&self, ps: &ParamStore, x: &Tensor) -> Tensor {
        self.forward::<rand_chacha::ChaCha8Rng>(ps, x, false, &mut None).0
    }

    /// Accumulates parameter gradients into `grads` (frozen slots are skipped)
    /// and returns `dx` when requested.
    pub fn backward(
        &self,
        ps: &ParamStore,
        cache: &LinearCache,
        dy: &Tensor,
        grads: &mut Grads,
        need_dx: bool,
    ) -> Option<Tensor> {
        let x = &cache.x;
        let n = x.rows();
        if let Some(g) = grads.slot_mut(self.weight) {
            matmul_tn_acc(g.data_mut(), dy.data(), n, self.dout, x.data(), self.din);
        }
        if let Some(b) = self.bias {
            if let Some(g) = grads.slot_mut(b) {
                for row in dy.data().chunks(self.dout) {
                    for (gv, v) in g.data_mut().iter_mut().zip(row) {
                        *gv += v;
                    }
                }
            }
        }
        let mut dx = need_dx.then(|| {
            Tensor::new(
                x.shape().to_vec(),
                matmul_nn(dy.data(), n, self.dout, ps.value(self.weight).data(), self.din),
            )
            .expect("dx shape")
        });
        if let (Some(ad), Some(ac)) = (&self.adapter, &cache.adapter) {
            let xin = ac.dropped.as_ref().map_or(x, |(xd, _)| xd);
            let (dx_adapter, da, db) = adapter_backward(xin, &ac.ax, ps.value(ad.a), ps.value(ad.b), ad.scale(), dy, need_dx);
            if let Some(g) = grads.slot_mut(ad.a) {
                g.add_assign(&da);
            }
            if let Some(g) = grads.slot_mut(ad.b) {
                g.add_assign(&db);
            }
            if let (Some(dx), Some(extra)) = (dx.as_mut(), dx_adapter) {
                match &ac.dropped {
                    Some((_, mask)) => {
                        for ((o, e), m) in dx.data_mut().iter_mut().zip(extra.data()).zip(mask) {
                            *o += m * e;
                        }
                    }
                    None => dx.add_assign(&extra),
                }
            }
        }
        dx
    }

    /// Scalars in weight and bias.
    pub fn base_param_count(&self) -> usize {
        self.din * self.dout + if self.bias.is_some() { self.dout } else { 0 }
    }
}
