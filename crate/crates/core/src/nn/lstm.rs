//! Standard LSTM cell with gate order (input, forget, candidate, output).

use super::ops::sigmoid;
use super::tensor::{matmul_nn, matmul_nt, matmul_tn_acc, Tensor};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct LstmCellCache {
    i: Vec<f64>,
    f: Vec<f64>,
    g: Vec<f64>,
    o: Vec<f64>,
    tanh_c: Vec<f64>,
    c_prev: Vec<f64>,
}

/// Applies the gate nonlinearities to pre-activations `z` (length `4H`).
/// Returns `(h, c, cache)`.
pub fn lstm_cell_forward(z: &[f64], c_prev: &[f64]) -> (Vec<f64>, Vec<f64>, LstmCellCache) {
    let h = c_prev.len();
    debug_assert_eq!(z.len(), 4 * h);
    let i: Vec<f64> = z[..h].iter().map(|&v| sigmoid(v)).collect();
    let f: Vec<f64> = z[h..2 * h].iter().map(|&v| sigmoid(v)).collect();
    let g: Vec<f64> = z[2 * h..3 * h].iter().map(|&v| v.tanh()).collect();
    let o: Vec<f64> = z[3 * h..].iter().map(|&v| sigmoid(v)).collect();
    let c: Vec<f64> = (0..h).map(|k| f[k] * c_prev[k] + i[k] * g[k]).collect();
    let tanh_c: Vec<f64> = c.iter().map(|v| v.tanh()).collect();
    let h_out: Vec<f64> = (0..h).map(|k| o[k] * tanh_c[k]).collect();
    let cache = LstmCellCache {
        i,
        f,
        g,
        o,
        tanh_c,
        c_prev: c_prev.to_vec(),
    };
    (h_out, c, cache)
}

/// Given upstream `dh` and `dc` (the gradient flowing into `c_t` from the
/// next step), returns `(dz, dc_prev)`.
pub fn lstm_cell_backward(cache: &LstmCellCache, dh: &[f64], dc_next: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let h = dh.len();
    let mut dz = vec![0.0; 4 * h];
    let mut dc_prev = vec![0.0; h];
    for k in 0..h {
        let (i, f, g, o, tc) = (cache.i[k], cache.f[k], cache.g[k], cache.o[k], cache.tanh_c[k]);
        let dc = dc_next[k] + dh[k] * o * (1.0 - tc * tc);
        dz[k] = dc * g * i * (1.0 - i);
        dz[h + k] = dc * cache.c_prev[k] * f * (1.0 - f);
        dz[2 * h + k] = dc * i * (1.0 - g * g);
        dz[3 * h + k] = dh[k] * tc * o * (1.0 - o);
        dc_prev[k] = dc * f;
    }
    (dz, dc_prev)
}

/// Plain (unadapted) LSTM weights.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmWeights {
    /// `4H × D`
    pub w_ih: Tensor,
    /// `4H × H`
    pub w_hh: Tensor,
    /// `4H`
    pub bias: Tensor,
}

impl LstmWeights {
    pub fn hidden(&self) -> usize {
        self.w_hh.cols()
    }

    fn check(&self, x: &[f64], h_prev: &[f64], c_prev: &[f64]) -> Result<()> {
        let hd = self.hidden();
        let ok = self.w_ih.rows() == 4 * hd
            && self.w_hh.rows() == 4 * hd
            && self.bias.len() == 4 * hd
            && x.len() == self.w_ih.cols()
            && h_prev.len() == hd
            && c_prev.len() == hd;
        if ok {
            Ok(())
        } else {
            Err(Error::ShapeMismatch(format!(
                "lstm_step: x {}, h {}, c {}, w_ih {:?}, w_hh {:?}",
                x.len(),
                h_prev.len(),
                c_prev.len(),
                self.w_ih.shape(),
                self.w_hh.shape()
            )))
        }
    }
}

/// One LSTM step. Returns `(h_t, c_t, cache)`.
pub fn lstm_step(
    x: &[f64],
    h_prev: &[f64],
    c_prev: &[f64],
    weights: &LstmWeights,
) -> Result<(Vec<f64>, Vec<f64>, LstmCellCache)> {
    weights.check(x, h_prev, c_prev)?;
    let hd = weights.hidden();
    let mut z = matmul_nt(x, 1, x.len(), weights.w_ih.data(), 4 * hd);
    let zh = matmul_nt(h_prev, 1, hd, weights.w_hh.data(), 4 * hd);
    for ((a, b), bias) in z.iter_mut().zip(zh).zip(weights.bias.data()) {
        *a += b + bias;
    }
    Ok(lstm_cell_forward(&z, c_prev))
}

#[derive(Debug, Clone)]
pub struct LstmStepGrads {
    pub dx: Vec<f64>,
    pub dh_prev: Vec<f64>,
    pub dc_prev: Vec<f64>,
    pub dw_ih: Tensor,
    pub dw_hh: Tensor,
    pub dbias: Tensor,
}

pub fn lstm_step_backward(
    weights: &LstmWeights,
    cache: &LstmCellCache,
    x: &[f64],
    h_prev: &[f64],
    dh: &[f64],
    dc: &[f64],
) -> LstmStepGrads {
    let hd = weights.hidden();
    let din = x.len();
    let (dz, dc_prev) = lstm_cell_backward(cache, dh, dc);
    let dx = matmul_nn(&dz, 1, 4 * hd, weights.w_ih.data(), din);
    let dh_prev = matmul_nn(&dz, 1, 4 * hd, weights.w_hh.data(), hd);
    let mut dw_ih = Tensor::zeros(&[4 * hd, din]);
    matmul_tn_acc(dw_ih.data_mut(), &dz, 1, 4 * hd, x, din);
    let mut dw_hh = Tensor::zeros(&[4 * hd, hd]);
    matmul_tn_acc(dw_hh.data_mut(), &dz, 1, 4 * hd, h_prev, hd);
    LstmStepGrads {
        dx,
        dh_prev,
        dc_prev,
        dw_ih,
        dw_hh,
        dbias: Tensor::vector(dz),
    }
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn random_weights(rng: &mut ChaCha8Rng, din: usize, hd: usize) -> LstmWeights {
        let mut t = |shape: &[usize]| {
            let n: usize = shape.iter().product();
            Tensor::new(shape.to_vec(), (0..n).map(|_| rng.random_range(-0.8..0.8)).collect()).unwrap()
        };
        LstmWeights {
            w_ih: t(&[4 * hd, din]),
            w_hh: t(&[4 * hd, hd]),
            bias: t(&[4 * hd]),
        }
    }

    #[test]
    fn zero_everything_gives_zero_state() {
        let w = LstmWeights {
            w_ih: Tensor::zeros(&[8, 3]),
            w_hh: Tensor::zeros(&[8, 2]),
            bias: Tensor::zeros(&[8]),
        };
        let (h, c, _) = lstm_step(&[0.0; 3], &[0.0; 2], &[0.0; 2], &w).unwrap();
        assert_eq!(h, vec![0.0, 0.0]);
        assert_eq!(c, vec![0.0, 0.0]);
    }

    #[test]
    fn saturated_forget_gate_keeps_cell() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut w = random_weights(&mut rng, 3, 2);
        w.w_ih.fill(0.0);
        w.w_hh.fill(0.0);
        let hd = 2;
        for k in 0..hd {
            w.bias.data_mut()[k] = -30.0;
            w.bias.data_mut()[hd + k] = 30.0;
        }
        let c_prev = [0.7, -1.3];
        let (_, c, _) = lstm_step(&[0.5, -0.2, 0.9], &[0.1, 0.4], &c_prev, &w).unwrap();
        for k in 0..hd {
            assert!((c[k] - c_prev[k]).abs() < 1e-10);
        }
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let w = random_weights(&mut rng, 3, 2);
        assert!(lstm_step(&[0.0; 4], &[0.0; 2], &[0.0; 2], &w).is_err());
        assert!(lstm_step(&[0.0; 3], &[0.0; 3], &[0.0; 2], &w).is_err());
    }

    /// Three chained steps, loss = Σ probe·h_t summed over steps.
    #[test]
    fn chained_steps_gradient_check() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let (din, hd, steps) = (3, 4, 3);
        let w = random_weights(&mut rng, din, hd);
        let xs: Vec<Vec<f64>> = (0..steps).map(|_| (0..din).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let probes: Vec<Vec<f64>> = (0..steps).map(|_| (0..hd).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();

        let loss = |w: &LstmWeights| -> f64 {
            let (mut h, mut c) = (vec![0.0; hd], vec![0.0; hd]);
            let mut total = 0.0;
            for t in 0..steps {
                let (nh, nc, _) = lstm_step(&xs[t], &h, &c, w).unwrap();
                total += nh.iter().zip(&probes[t]).map(|(a, b)| a * b).sum::<f64>();
                h = nh;
                c = nc;
            }
            total
        };

        // forward with caches
        let mut hs = vec![vec![0.0; hd]];
        let mut caches = Vec::new();
        let mut c = vec![0.0; hd];
        for x in &xs {
            let (nh, nc, cache) = lstm_step(x, hs.last().unwrap(), &c, &w).unwrap();
            hs.push(nh);
            caches.push(cache);
            c = nc;
        }
        let mut dw_ih = Tensor::zeros(w.w_ih.shape());
        let mut dw_hh = Tensor::zeros(w.w_hh.shape());
        let mut db = Tensor::zeros(w.bias.shape());
        let (mut dh_next, mut dc_next) = (vec![0.0; hd], vec![0.0; hd]);
        for t in (0..steps).rev() {
            let dh: Vec<f64> = probes[t].iter().zip(&dh_next).map(|(a, b)| a + b).collect();
            let g = lstm_step_backward(&w, &caches[t], &xs[t], &hs[t], &dh, &dc_next);
            dw_ih.add_assign(&g.dw_ih);
            dw_hh.add_assign(&g.dw_hh);
            db.add_assign(&g.dbias);
            dh_next = g.dh_prev;
            dc_next = g.dc_prev;
        }

        let eps = 1e-5;
        let mut worst: f64 = 0.0;
        for (which, analytic) in [(0, &dw_ih), (1, &dw_hh), (2, &db)] {
            for i in 0..analytic.len() {
                let mut wp = w.clone();
                let mut wm = w.clone();
                let (p, m) = match which {
                    0 => (&mut wp.w_ih, &mut wm.w_ih),
                    1 => (&mut wp.w_hh, &mut wm.w_hh),
                    _ => (&mut wp.bias, &mut wm.bias),
                };
                p.data_mut()[i] += eps;
                m.data_mut()[i] -= eps;
                let num = (loss(&wp) - loss(&wm)) / (2.0 * eps);
                let a = analytic.data()[i];
                worst = worst.max((a - num).abs() / f64::max(1.0, a.abs() + num.abs()));
            }
        }
        assert!(worst < 1e-4, "worst {worst}");
    }
}
