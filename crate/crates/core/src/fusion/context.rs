use rand::Rng;

use super::linear::{Linear, LinearCache};
use super::{mean_pool, FusionVariant};
use crate::error::{Error, Result};
use crate::nn::{lstm_cell_backward, lstm_cell_forward, sigmoid, Grads, LstmCellCache, ParamStore, Tensor};

/// One direction of the BiLSTM: `z = ih(x) + hh(h_prev)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmLayer {
    pub ih: Linear,
    pub hh: Linear,
    pub hidden: usize,
}

impl LstmLayer {
    fn create<R: Rng + ?Sized>(ps: &mut ParamStore, name: &str, din: usize, hidden: usize, rng: &mut R) -> Result<Self> {
        let ih = Linear::create(ps, &format!("{name}.ih"), din, 4 * hidden, true, rng)?;
        let hh = Linear::create(ps, &format!("{name}.hh"), hidden, 4 * hidden, false, rng)?;
        let bias = ps.value_mut(ih.bias.expect("ih bias"));
        bias.data_mut()[hidden..2 * hidden].fill(1.0);
        Ok(LstmLayer { ih, hh, hidden })
    }

    /// Runs over rows of `h` in the given order and returns outputs in row order.
    fn forward<R: Rng + ?Sized>(
        &self,
        ps: &ParamStore,
        h: &Tensor,
        order: &[usize],
        train: bool,
        rng: &mut Option<&mut R>,
    ) -> (Vec<Vec<f64>>, LstmCache) {
        let l = h.rows();
        let hd = self.hidden;
        let (zx, ih_cache) = self.ih.forward(ps, h, train, rng);
        let mut outputs = vec![Vec::new(); l];
        let mut steps = Vec::with_capacity(l);
        let (mut h_prev, mut c_prev) = (vec![0.0; hd], vec![0.0; hd]);
        for &t in order {
            let hp = Tensor::matrix(1, hd, h_prev.clone()).expect("row");
            let (zh, hh_cache) = self.hh.forward(ps, &hp, train, rng);
            let z: Vec<f64> = zx.row(t).iter().zip(zh.data()).map(|(a, b)| a + b).collect();
            let (h_new, c_new, cell) = lstm_cell_forward(&z, &c_prev);
            outputs[t] = h_new.clone();
            steps.push((t, hh_cache, cell));
            h_prev = h_new;
            c_prev = c_new;
        }
        (outputs, LstmCache { ih_cache, steps })
    }

    /// `dout[t]` is the gradient on this direction's output at row `t`.
    fn backward(&self, ps: &ParamStore, cache: &LstmCache, dout: &[Vec<f64>], grads: &mut Grads) {
        let hd = self.hidden;
        let mut dzx = Tensor::zeros(&[dout.len(), 4 * hd]);
        let (mut dh_next, mut dc_next) = (vec![0.0; hd], vec![0.0; hd]);
        for (t, hh_cache, cell) in cache.steps.iter().rev() {
            let dh: Vec<f64> = dout[*t].iter().zip(&dh_next).map(|(a, b)| a + b).collect();
            let (dz, dc_prev) = lstm_cell_backward(cell, &dh, &dc_next);
            dzx.row_mut(*t).copy_from_slice(&dz);
            let dz_t = Tensor::matrix(1, 4 * hd, dz).expect("row");
            dh_next = self.hh.backward(ps, hh_cache, &dz_t, grads, true).expect("dx requested").into_data();
            dc_next = dc_prev;
        }
        self.ih.backward(ps, &cache.ih_cache, &dzx, grads, false);
    }
}

#[derive(Debug, Clone)]
pub struct LstmCache {
    ih_cache: LinearCache,
    /// (row, hh cache, cell cache) in processing order.
    steps: Vec<(usize, LinearCache, LstmCellCache)>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ContextBlock {
    Base,
    ConcatPool { fuse: Linear },
    Film { gamma: Linear, beta: Linear },
    BiLstm { fwd: LstmLayer, bwd: LstmLayer },
    Gated { gate: Linear },
}

#[derive(Debug, Clone)]
pub enum ContextCache {
    Base,
    ConcatPool(LinearCache),
    Film {
        h: Tensor,
        gamma_out: Vec<f64>,
        gamma: LinearCache,
        beta: LinearCache,
    },
    BiLstm(Box<(LstmCache, LstmCache)>),
    Gated {
        h: Tensor,
        s: Vec<f64>,
        g: Tensor,
        gate: LinearCache,
    },
}

/// `[h_i ; s]` for every row.
fn concat_rows(h: &Tensor, s: &[f64]) -> Tensor {
    let (l, d) = (h.rows(), h.cols());
    let mut data = Vec::with_capacity(l * 2 * d);
    for r in 0..l {
        data.extend_from_slice(h.row(r));
        data.extend_from_slice(s);
    }
    Tensor::matrix(l, 2 * d, data).expect("concat shape")
}

impl ContextBlock {
    pub(crate) fn create<R: Rng + ?Sized>(
        variant: FusionVariant,
        ps: &mut ParamStore,
        d: usize,
        rng: &mut R,
    ) -> Result<ContextBlock> {
        Ok(match variant {
            FusionVariant::BaseTe => ContextBlock::Base,
            FusionVariant::ConcatPool => ContextBlock::ConcatPool {
                fuse: Linear::create(ps, "context.fuse", 2 * d, d, true, rng)?,
            },
            FusionVariant::Film => ContextBlock::Film {
                gamma: Linear::create(ps, "context.film_gamma", d, d, true, rng)?,
                beta: Linear::create(ps, "context.film_beta", d, d, true, rng)?,
            },
            FusionVariant::BiLstm => {
                if d % 2 != 0 {
                    return Err(Error::DimensionMismatch(format!("BiLSTM needs an even embedding dim, got {d}")));
                }
                ContextBlock::BiLstm {
                    fwd: LstmLayer::create(ps, "context.lstm_fwd", d, d / 2, rng)?,
                    bwd: LstmLayer::create(ps, "context.lstm_bwd", d, d / 2, rng)?,
                }
            }
            FusionVariant::Gated => ContextBlock::Gated {
                gate: Linear::create(ps, "context.gate", 2 * d, d, true, rng)?,
            },
        })
    }

    pub fn linears(&self) -> Vec<&Linear> {
        match self {
            ContextBlock::Base => vec![],
            ContextBlock::ConcatPool { fuse } => vec![fuse],
            ContextBlock::Film { gamma, beta } => vec![gamma, beta],
            ContextBlock::BiLstm { fwd, bwd } => vec![&fwd.ih, &fwd.hh, &bwd.ih, &bwd.hh],
            ContextBlock::Gated { gate } => vec![gate],
        }
    }

    pub fn linears_mut(&mut self) -> Vec<&mut Linear> {
        match self {
            ContextBlock::Base => vec![],
            ContextBlock::ConcatPool { fuse } => vec![fuse],
            ContextBlock::Film { gamma, beta } => vec![gamma, beta],
            ContextBlock::BiLstm { fwd, bwd } => vec![&mut fwd.ih, &mut fwd.hh, &mut bwd.ih, &mut bwd.hh],
            ContextBlock::Gated { gate } => vec![gate],
        }
    }

    pub fn forward<R: Rng + ?Sized>(
        &self,
        ps: &ParamStore,
        h: &Tensor,
        train: bool,
        rng: &mut Option<&mut R>,
    ) -> Result<(Tensor, ContextCache)> {
        let (l, d) = (h.rows(), h.cols());
        if l == 0 {
            return Err(Error::DimensionMismatch("sentence with zero tokens".into()));
        }
        Ok(match self {
            ContextBlock::Base => (h.clone(), ContextCache::Base),
            ContextBlock::ConcatPool { fuse } => {
                let s = mean_pool(h)?;
                let c = concat_rows(h, &s);
                let (out, cache) = fuse.forward(ps, &c, train, rng);
                (out, ContextCache::ConcatPool(cache))
            }
            ContextBlock::Film { gamma, beta } => {
                let s = Tensor::matrix(1, d, mean_pool(h)?)?;
                let (g, gcache) = gamma.forward(ps, &s, train, rng);
                let (b, bcache) = beta.forward(ps, &s, train, rng);
                let mut out = h.clone();
                for r in 0..l {
                    for ((v, gv), bv) in out.row_mut(r).iter_mut().zip(g.data()).zip(b.data()) {
                        *v = gv * *v + bv;
                    }
                }
                (
                    out,
                    ContextCache::Film {
                        h: h.clone(),
                        gamma_out: g.into_data(),
                        gamma: gcache,
                        beta: bcache,
                    },
                )
            }
            ContextBlock::BiLstm { fwd, bwd } => {
                let forward_order: Vec<usize> = (0..l).collect();
                let backward_order: Vec<usize> = (0..l).rev().collect();
                let (fo, fcache) = fwd.forward(ps, h, &forward_order, train, rng);
                let (bo, bcache) = bwd.forward(ps, h, &backward_order, train, rng);
                let mut data = Vec::with_capacity(l * d);
                for t in 0..l {
                    data.extend_from_slice(&fo[t]);
                    data.extend_from_slice(&bo[t]);
                }
                (Tensor::matrix(l, d, data)?, ContextCache::BiLstm(Box::new((fcache, bcache))))
            }
            ContextBlock::Gated { gate } => {
                let s = h.row(l - 1).to_vec();
                let c = concat_rows(h, &s);
                let (z, gcache) = gate.forward(ps, &c, train, rng);
                let mut g = z;
                g.data_mut().iter_mut().for_each(|v| *v = sigmoid(*v));
                let mut out = h.clone();
                for r in 0..l {
                    for ((v, gv), sv) in out.row_mut(r).iter_mut().zip(g.row(r)).zip(&s) {
                        *v = gv * *v + (1.0 - gv) * sv;
                    }
                }
                (
                    out,
                    ContextCache::Gated {
                        h: h.clone(),
                        s,
                        g,
                        gate: gcache,
                    },
                )
            }
        })
    }

    /// Parameter gradients only; the embeddings themselves are constants.
    pub fn backward(&self, ps: &ParamStore, cache: &ContextCache, dout: &Tensor, grads: &mut Grads) {
        match (self, cache) {
            (ContextBlock::Base, ContextCache::Base) => {}
            (ContextBlock::ConcatPool { fuse }, ContextCache::ConcatPool(c)) => {
                fuse.backward(ps, c, dout, grads, false);
            }
            (
                ContextBlock::Film { gamma, beta },
                ContextCache::Film {
                    h,
                    gamma: gc,
                    beta: bc,
                    ..
                },
            ) => {
                let d = h.cols();
                let mut dg = vec![0.0; d];
                let mut db = vec![0.0; d];
                for r in 0..h.rows() {
                    for k in 0..d {
                        dg[k] += dout.row(r)[k] * h.row(r)[k];
                        db[k] += dout.row(r)[k];
                    }
                }
                gamma.backward(ps, gc, &Tensor::matrix(1, d, dg).expect("row"), grads, false);
                beta.backward(ps, bc, &Tensor::matrix(1, d, db).expect("row"), grads, false);
            }
            (ContextBlock::BiLstm { fwd, bwd }, ContextCache::BiLstm(caches)) => {
                let half = fwd.hidden;
                let l = dout.rows();
                let df: Vec<Vec<f64>> = (0..l).map(|t| dout.row(t)[..half].to_vec()).collect();
                let dbw: Vec<Vec<f64>> = (0..l).map(|t| dout.row(t)[half..].to_vec()).collect();
                fwd.backward(ps, &caches.0, &df, grads);
                bwd.backward(ps, &caches.1, &dbw, grads);
            }
            (ContextBlock::Gated { gate }, ContextCache::Gated { h, s, g, gate: gc }) => {
                let mut dz = Tensor::zeros(g.shape());
                for r in 0..h.rows() {
                    for k in 0..h.cols() {
                        let gv = g.row(r)[k];
                        let dg = dout.row(r)[k] * (h.row(r)[k] - s[k]);
                        dz.row_mut(r)[k] = dg * gv * (1.0 - gv);
                    }
                }
                gate.backward(ps, gc, &dz, grads, false);
            }
            _ => unreachable!("context cache does not match its block"),
        }
    }
}
