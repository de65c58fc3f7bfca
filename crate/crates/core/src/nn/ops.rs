use rand::Rng;

use super::tensor::{matmul_nn, matmul_nt, matmul_tn_acc, Tensor};
use crate::error::{Error, Result};

pub const LAYER_NORM_EPS: f64 = 1e-5;

/// `y = x·Wᵀ + b` applied to every row of `x`.
pub fn linear(x: &Tensor, w: &Tensor, b: &Tensor) -> Result<Tensor> {
    let (dout, din) = check_linear_shapes(x, w, b)?;
    let n = x.rows();
    let mut y = matmul_nt(x.data(), n, din, w.data(), dout);
    for row in y.chunks_mut(dout) {
        for (v, bias) in row.iter_mut().zip(b.data()) {
            *v += bias;
        }
    }
    let mut shape = x.shape().to_vec();
    *shape.last_mut().expect("non-scalar input") = dout;
    Tensor::new(shape, y)
}

#[derive(Debug, Clone)]
pub struct LinearGrads {
    pub dx: Tensor,
    pub dw: Tensor,
    pub db: Tensor,
}

pub fn linear_backward(x: &Tensor, w: &Tensor, dy: &Tensor) -> Result<LinearGrads> {
    let (dout, din) = (w.rows(), w.cols());
    if x.cols() != din || dy.cols() != dout || dy.rows() != x.rows() {
        return Err(Error::ShapeMismatch(format!(
            "linear backward: x {:?}, w {:?}, dy {:?}",
            x.shape(),
            w.shape(),
            dy.shape()
        )));
    }
    let n = x.rows();
    let dx = Tensor::new(x.shape().to_vec(), matmul_nn(dy.data(), n, dout, w.data(), din))?;
    let mut dw = Tensor::zeros(&[dout, din]);
    matmul_tn_acc(dw.data_mut(), dy.data(), n, dout, x.data(), din);
    let mut db = Tensor::zeros(&[dout]);
    for row in dy.data().chunks(dout) {
        for (g, v) in db.data_mut().iter_mut().zip(row) {
            *g += v;
        }
    }
    Ok(LinearGrads { dx, dw, db })
}

fn check_linear_shapes(x: &Tensor, w: &Tensor, b: &Tensor) -> Result<(usize, usize)> {
    if w.shape().len() != 2 || x.shape().is_empty() {
        return Err(Error::ShapeMismatch(format!(
            "linear expects a matrix weight and non-scalar input, got w {:?}, x {:?}",
            w.shape(),
            x.shape()
        )));
    }
    let (dout, din) = (w.rows(), w.cols());
    if x.cols() != din || b.len() != dout {
        return Err(Error::ShapeMismatch(format!(
            "linear: x {:?}, w {:?}, b {:?}",
            x.shape(),
            w.shape(),
            b.shape()
        )));
    }
    Ok((dout, din))
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[inline]
fn normal_cdf(x: f64) -> f64 {
    0.5 * (1.0 + libm::erf(x / std::f64::consts::SQRT_2))
}

#[inline]
fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Exact (erf-based) GELU.
pub fn gelu(x: &Tensor) -> Tensor {
    let mut out = x.clone();
    out.data_mut().iter_mut().for_each(|v| *v *= normal_cdf(*v));
    out
}

pub fn gelu_backward(x: &Tensor, dy: &Tensor) -> Tensor {
    let mut dx = dy.clone();
    for (g, &v) in dx.data_mut().iter_mut().zip(x.data()) {
        *g *= normal_cdf(v) + v * normal_pdf(v);
    }
    dx
}

#[derive(Debug, Clone)]
pub struct LayerNormCache {
    xhat: Tensor,
    inv_std: Vec<f64>,
}

/// Per-row normalization to zero mean and unit (biased) variance, then `gain ⊙ x̂ + bias`.
pub fn layer_norm(x: &Tensor, gain: &Tensor, bias: &Tensor) -> Result<(Tensor, LayerNormCache)> {
    let d = x.cols();
    if d < 2 || gain.len() != d || bias.len() != d {
        return Err(Error::ShapeMismatch(format!(
            "layer_norm: x {:?}, gain {:?}, bias {:?}",
            x.shape(),
            gain.shape(),
            bias.shape()
        )));
    }
    let mut xhat = x.clone();
    let mut y = x.clone();
    let mut inv_std = Vec::with_capacity(x.rows());
    for r in 0..x.rows() {
        let row = x.row(r);
        let mean = row.iter().sum::<f64>() / d as f64;
        let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / d as f64;
        let is = 1.0 / (var + LAYER_NORM_EPS).sqrt();
        inv_std.push(is);
        let xr = xhat.row_mut(r);
        for v in xr.iter_mut() {
            *v = (*v - mean) * is;
        }
        let yr = y.row_mut(r);
        for (j, v) in yr.iter_mut().enumerate() {
            *v = gain.data()[j] * xhat.row(r)[j] + bias.data()[j];
        }
    }
    Ok((y, LayerNormCache { xhat, inv_std }))
}

/// Returns `(dx, dgain, dbias)`.
pub fn layer_norm_backward(cache: &LayerNormCache, gain: &Tensor, dy: &Tensor) -> (Tensor, Tensor, Tensor) {
    let d = dy.cols();
    let mut dx = Tensor::zeros(dy.shape());
    let mut dgain = Tensor::zeros(&[d]);
    let mut dbias = Tensor::zeros(&[d]);
    let mut dxhat = vec![0.0; d];
    for r in 0..dy.rows() {
        let dyr = dy.row(r);
        let xh = cache.xhat.row(r);
        for j in 0..d {
            dgain.data_mut()[j] += dyr[j] * xh[j];
            dbias.data_mut()[j] += dyr[j];
            dxhat[j] = dyr[j] * gain.data()[j];
        }
        let sum: f64 = dxhat.iter().sum();
        let sum_xh: f64 = dxhat.iter().zip(xh).map(|(a, b)| a * b).sum();
        let scale = cache.inv_std[r] / d as f64;
        let dxr = dx.row_mut(r);
        for j in 0..d {
            dxr[j] = scale * (d as f64 * dxhat[j] - sum - xh[j] * sum_xh);
        }
    }
    (dx, dgain, dbias)
}

/// Inverted dropout. Returns the output and, in training mode, the per-element
/// multiplier (0 or `1/(1-p)`) needed by the backward pass.
pub fn dropout<R: Rng + ?Sized>(x: &Tensor, p: f64, train: bool, rng: &mut R) -> (Tensor, Option<Vec<f64>>) {
    if !train || p == 0.0 {
        return (x.clone(), None);
    }
    let keep = 1.0 / (1.0 - p);
    let mask: Vec<f64> = (0..x.len())
        .map(|_| if rng.random::<f64>() < p { 0.0 } else { keep })
        .collect();
    let mut out = x.clone();
    for (v, m) in out.data_mut().iter_mut().zip(&mask) {
        *v *= m;
    }
    (out, Some(mask))
}

/// Mean negative log-likelihood over rows and its gradient `(softmax − onehot)/n`.
pub fn softmax_cross_entropy(logits: &Tensor, labels: &[usize]) -> Result<(f64, Tensor)> {
    let n = logits.rows();
    if n == 0 {
        return Err(Error::ShapeMismatch("cross-entropy over zero rows".into()));
    }
    let (sum, grad) = softmax_cross_entropy_sum(logits, labels, 1.0 / n as f64)?;
    Ok((sum / n as f64, grad))
}

/// Summed negative log-likelihood; the returned gradient is multiplied by `grad_scale`.
pub fn softmax_cross_entropy_sum(logits: &Tensor, labels: &[usize], grad_scale: f64) -> Result<(f64, Tensor)> {
    let c = logits.cols();
    if labels.len() != logits.rows() {
        return Err(Error::ShapeMismatch(format!(
            "{} labels for {} logit rows",
            labels.len(),
            logits.rows()
        )));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= c) {
        return Err(Error::LabelOutOfRange { label: bad, classes: c });
    }
    let mut grad = Tensor::zeros(logits.shape());
    let mut loss = 0.0;
    for (r, &label) in labels.iter().enumerate() {
        let row = logits.row(r);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let sum_exp: f64 = row.iter().map(|v| (v - max).exp()).sum();
        let log_z = max + sum_exp.ln();
        loss += log_z - row[label];
        let gr = grad.row_mut(r);
        for (j, g) in gr.iter_mut().enumerate() {
            let p = (row[j] - log_z).exp();
            *g = grad_scale * (p - if j == label { 1.0 } else { 0.0 });
        }
    }
    Ok((loss, grad))
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn rand_tensor(rng: &mut ChaCha8Rng, shape: &[usize]) -> Tensor {
        let n = shape.iter().product();
        Tensor::new(shape.to_vec(), (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
    }

    fn rel_err(a: f64, n: f64) -> f64 {
        (a - n).abs() / f64::max(1.0, a.abs() + n.abs())
    }

    #[test]
    fn linear_identity_and_zero_input() {
        let x = Tensor::matrix(2, 3, vec![1.0, -2.0, 3.0, 0.5, 0.0, 4.0]).unwrap();
        let y = linear(&x, &Tensor::identity(3), &Tensor::zeros(&[3])).unwrap();
        assert_eq!(y, x);
        let b = Tensor::vector(vec![1.0, 2.0]);
        let w = Tensor::matrix(2, 3, vec![5.0; 6]).unwrap();
        let y = linear(&Tensor::zeros(&[4, 3]), &w, &b).unwrap();
        for r in 0..4 {
            assert_eq!(y.row(r), b.data());
        }
    }

    #[test]
    fn linear_rejects_shape_mismatch() {
        let w = Tensor::zeros(&[2, 3]);
        assert!(linear(&Tensor::zeros(&[4, 2]), &w, &Tensor::zeros(&[2])).is_err());
        assert!(linear(&Tensor::zeros(&[4, 3]), &w, &Tensor::zeros(&[3])).is_err());
    }

    #[test]
    fn linear_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = rand_tensor(&mut rng, &[3, 4]);
        let w = rand_tensor(&mut rng, &[2, 4]);
        let b = rand_tensor(&mut rng, &[2]);
        let probe = rand_tensor(&mut rng, &[3, 2]);
        let f = |x: &Tensor, w: &Tensor, b: &Tensor| -> f64 {
            linear(x, w, b).unwrap().data().iter().zip(probe.data()).map(|(a, p)| a * p).sum()
        };
        let g = linear_backward(&x, &w, &probe).unwrap();
        let h = 1e-5;
        let mut worst: f64 = 0.0;
        for (target, analytic) in [(0, &g.dx), (1, &g.dw), (2, &g.db)] {
            for i in 0..analytic.len() {
                let (mut xp, mut wp, mut bp) = (x.clone(), w.clone(), b.clone());
                let (mut xm, mut wm, mut bm) = (x.clone(), w.clone(), b.clone());
                match target {
                    0 => {
                        xp.data_mut()[i] += h;
                        xm.data_mut()[i] -= h;
                    }
                    1 => {
                        wp.data_mut()[i] += h;
                        wm.data_mut()[i] -= h;
                    }
                    _ => {
                        bp.data_mut()[i] += h;
                        bm.data_mut()[i] -= h;
                    }
                }
                let num = (f(&xp, &wp, &bp) - f(&xm, &wm, &bm)) / (2.0 * h);
                worst = worst.max(rel_err(analytic.data()[i], num));
            }
        }
        assert!(worst < 1e-6, "worst {worst}");
    }

    #[test]
    fn gelu_values_and_gradient() {
        let y = gelu(&Tensor::vector(vec![0.0, 10.0]));
        assert_eq!(y.data()[0], 0.0);
        assert!((9.99..=10.0).contains(&y.data()[1]));
        let h = 1e-5;
        for x in [-2.0, -0.5, 0.5, 2.0] {
            let a = gelu_backward(&Tensor::vector(vec![x]), &Tensor::vector(vec![1.0])).data()[0];
            let n = (gelu(&Tensor::vector(vec![x + h])).data()[0] - gelu(&Tensor::vector(vec![x - h])).data()[0])
                / (2.0 * h);
            assert!(rel_err(a, n) < 1e-6, "x={x}: {a} vs {n}");
        }
    }

    #[test]
    fn layer_norm_constant_row_and_zero_mean() {
        let gain = Tensor::filled(&[4], 1.0);
        let bias = Tensor::zeros(&[4]);
        let (y, _) = layer_norm(&Tensor::filled(&[1, 4], 3.0), &gain, &bias).unwrap();
        assert!(y.data().iter().all(|&v| v == 0.0));
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let x = rand_tensor(&mut rng, &[5, 4]);
        let (y, _) = layer_norm(&x, &gain, &bias).unwrap();
        for r in 0..5 {
            let mean: f64 = y.row(r).iter().sum::<f64>() / 4.0;
            assert!(mean.abs() < 1e-12);
        }
        assert!(layer_norm(&Tensor::zeros(&[2, 1]), &Tensor::zeros(&[1]), &Tensor::zeros(&[1])).is_err());
    }

    #[test]
    fn layer_norm_gradient_check() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let x = rand_tensor(&mut rng, &[3, 5]);
        let gain = rand_tensor(&mut rng, &[5]);
        let bias = rand_tensor(&mut rng, &[5]);
        let probe = rand_tensor(&mut rng, &[3, 5]);
        let f = |x: &Tensor, g: &Tensor, b: &Tensor| -> f64 {
            let (y, _) = layer_norm(x, g, b).unwrap();
            y.data().iter().zip(probe.data()).map(|(a, p)| a * p).sum()
        };
        let (_, cache) = layer_norm(&x, &gain, &bias).unwrap();
        let (dx, dg, db) = layer_norm_backward(&cache, &gain, &probe);
        let h = 1e-5;
        let mut worst: f64 = 0.0;
        for (which, analytic) in [(0, &dx), (1, &dg), (2, &db)] {
            for i in 0..analytic.len() {
                let mut args = [x.clone(), gain.clone(), bias.clone()];
                args[which].data_mut()[i] += h;
                let fp = f(&args[0], &args[1], &args[2]);
                args[which].data_mut()[i] -= 2.0 * h;
                let fm = f(&args[0], &args[1], &args[2]);
                worst = worst.max(rel_err(analytic.data()[i], (fp - fm) / (2.0 * h)));
            }
        }
        assert!(worst < 1e-5, "worst {worst}");
    }

    #[test]
    fn dropout_modes() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = Tensor::filled(&[100_000], 1.0);
        let (y, _) = dropout(&x, 0.0, true, &mut rng);
        assert_eq!(y, x);
        let (y, mask) = dropout(&x, 0.7, false, &mut rng);
        assert_eq!(y, x);
        assert!(mask.is_none());
        let (y, _) = dropout(&x, 0.5, true, &mut rng);
        let mean = y.data().iter().sum::<f64>() / y.len() as f64;
        assert!((0.98..=1.02).contains(&mean), "mean {mean}");
        assert!(y.data().iter().all(|&v| v == 0.0 || v == 2.0));
    }

    #[test]
    fn cross_entropy_cases() {
        let (loss, _) = softmax_cross_entropy(&Tensor::zeros(&[1, 4]), &[2]).unwrap();
        assert!((loss - 4f64.ln()).abs() < 1e-15);
        let (loss, _) = softmax_cross_entropy(&Tensor::matrix(1, 3, vec![0.0, 30.0, 0.0]).unwrap(), &[1]).unwrap();
        assert!(loss < 1e-10);
        assert!(matches!(
            softmax_cross_entropy(&Tensor::zeros(&[1, 3]), &[3]),
            Err(Error::LabelOutOfRange { label: 3, classes: 3 })
        ));
    }

    #[test]
    fn cross_entropy_gradient_check() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let logits = rand_tensor(&mut rng, &[3, 5]);
        let labels = [0, 4, 2];
        let (_, grad) = softmax_cross_entropy(&logits, &labels).unwrap();
        let h = 1e-5;
        for i in 0..logits.len() {
            let mut p = logits.clone();
            p.data_mut()[i] += h;
            let mut m = logits.clone();
            m.data_mut()[i] -= h;
            let n = (softmax_cross_entropy(&p, &labels).unwrap().0 - softmax_cross_entropy(&m, &labels).unwrap().0)
                / (2.0 * h);
            assert!(rel_err(grad.data()[i], n) < 1e-6);
        }
    }

    #[test]
    fn cross_entropy_shift_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..50 {
            let logits = rand_tensor(&mut rng, &[4, 6]);
            let labels: Vec<usize> = (0..4).map(|_| rng.random_range(0..6)).collect();
            let shift = rng.random_range(-50.0..50.0);
            let mut shifted = logits.clone();
            shifted.data_mut().iter_mut().for_each(|v| *v += shift);
            let a = softmax_cross_entropy(&logits, &labels).unwrap().0;
            let b = softmax_cross_entropy(&shifted, &labels).unwrap().0;
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }
}
