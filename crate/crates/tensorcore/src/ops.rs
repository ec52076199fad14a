//! Forward and backward kernels for the supported layer operations.
//!
//! Forward functions are usable on their own for inference; the tape in
//! [`crate::tape`] records them and calls the matching `*_backward`.

use serde::{Deserialize, Serialize};

use crate::error::{shape_err, Result, TensorError};
use crate::real::Real;
use crate::tensor::Tensor;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Sigmoid,
    LeakyRelu(f64),
    Elu,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    Mse,
    L1,
}

fn dims3(t: &[usize], op: &'static str) -> Result<(usize, usize, usize)> {
    match *t {
        [c, h, w] => Ok((c, h, w)),
        _ => Err(shape_err(op, format!("expected [C,H,W], got {t:?}"))),
    }
}

/// Output extent of a zero-padded "same" convolution with the given stride.
pub fn conv_out_extent(extent: usize, stride: usize) -> usize {
    extent.div_ceil(stride)
}

struct ConvGeom {
    cin: usize,
    h: usize,
    w: usize,
    cout: usize,
    k: usize,
    stride: usize,
    pad: usize,
    ho: usize,
    wo: usize,
}

fn conv_geom<T: Real>(
    x: &Tensor<T>,
    kernel: &Tensor<T>,
    bias: &Tensor<T>,
    stride: usize,
) -> Result<ConvGeom> {
    let (cin, h, w) = dims3(x.shape(), "conv2d")?;
    let [cout, kc, k, k2] = *kernel.shape() else {
        return Err(shape_err("conv2d", format!("kernel must be [O,C,k,k], got {:?}", kernel.shape())));
    };
    if kc != cin {
        return Err(shape_err("conv2d", format!("kernel expects {kc} input channels, input has {cin}")));
    }
    if k != k2 || k % 2 == 0 {
        return Err(shape_err("conv2d", format!("kernel must be square with odd size, got {k}x{k2}")));
    }
    if bias.shape() != [cout] {
        return Err(shape_err("conv2d", format!("bias {:?} for {cout} output channels", bias.shape())));
    }
    if stride == 0 {
        return Err(TensorError::Invalid("conv2d stride must be positive".into()));
    }
    Ok(ConvGeom {
        cin,
        h,
        w,
        cout,
        k,
        stride,
        pad: k / 2,
        ho: conv_out_extent(h, stride),
        wo: conv_out_extent(w, stride),
    })
}

/// Cross-correlation with zero "same" padding. With stride 1 the output has
/// the input's spatial size; with stride s it is `ceil(H/s) x ceil(W/s)`.
pub fn conv2d<T: Real>(
    x: &Tensor<T>,
    kernel: &Tensor<T>,
    bias: &Tensor<T>,
    stride: usize,
) -> Result<Tensor<T>> {
    let g = conv_geom(x, kernel, bias, stride)?;
    let (xd, kd, bd) = (x.data(), kernel.data(), bias.data());
    let mut out = vec![T::zero(); g.cout * g.ho * g.wo];
    for o in 0..g.cout {
        let plane = &mut out[o * g.ho * g.wo..(o + 1) * g.ho * g.wo];
        plane.iter_mut().for_each(|v| *v = bd[o]);
        for c in 0..g.cin {
            let xin = &xd[c * g.h * g.w..(c + 1) * g.h * g.w];
            for ki in 0..g.k {
                for kj in 0..g.k {
                    let wv = kd[((o * g.cin + c) * g.k + ki) * g.k + kj];
                    for oh in 0..g.ho {
                        let ih = (oh * g.stride + ki) as isize - g.pad as isize;
                        if ih < 0 || ih >= g.h as isize {
                            continue;
                        }
                        let row = &xin[ih as usize * g.w..(ih as usize + 1) * g.w];
                        let orow = &mut plane[oh * g.wo..(oh + 1) * g.wo];
                        for (ow, ov) in orow.iter_mut().enumerate() {
                            let iw = (ow * g.stride + kj) as isize - g.pad as isize;
                            if iw >= 0 && iw < g.w as isize {
                                *ov = *ov + wv * row[iw as usize];
                            }
                        }
                    }
                }
            }
        }
    }
    Tensor::new(vec![g.cout, g.ho, g.wo], out)
}

/// Returns (d input, d kernel, d bias).
pub fn conv2d_backward<T: Real>(
    x: &Tensor<T>,
    kernel: &Tensor<T>,
    bias: &Tensor<T>,
    stride: usize,
    grad: &Tensor<T>,
) -> Result<(Tensor<T>, Tensor<T>, Tensor<T>)> {
    let g = conv_geom(x, kernel, bias, stride)?;
    let (xd, kd, gd) = (x.data(), kernel.data(), grad.data());
    let mut dx = vec![T::zero(); x.len()];
    let mut dk = vec![T::zero(); kernel.len()];
    let mut db = vec![T::zero(); g.cout];
    for o in 0..g.cout {
        let gplane = &gd[o * g.ho * g.wo..(o + 1) * g.ho * g.wo];
        db[o] = gplane.iter().copied().sum();
        for c in 0..g.cin {
            let xin = &xd[c * g.h * g.w..(c + 1) * g.h * g.w];
            let dxin = &mut dx[c * g.h * g.w..(c + 1) * g.h * g.w];
            for ki in 0..g.k {
                for kj in 0..g.k {
                    let widx = ((o * g.cin + c) * g.k + ki) * g.k + kj;
                    let wv = kd[widx];
                    let mut acc = T::zero();
                    for oh in 0..g.ho {
                        let ih = (oh * g.stride + ki) as isize - g.pad as isize;
                        if ih < 0 || ih >= g.h as isize {
                            continue;
                        }
                        let base = ih as usize * g.w;
                        let grow = &gplane[oh * g.wo..(oh + 1) * g.wo];
                        for (ow, &gv) in grow.iter().enumerate() {
                            let iw = (ow * g.stride + kj) as isize - g.pad as isize;
                            if iw >= 0 && iw < g.w as isize {
                                let xi = base + iw as usize;
                                acc = acc + gv * xin[xi];
                                dxin[xi] = dxin[xi] + gv * wv;
                            }
                        }
                    }
                    dk[widx] = acc;
                }
            }
        }
    }
    Ok((
        Tensor::new(x.shape().to_vec(), dx)?,
        Tensor::new(kernel.shape().to_vec(), dk)?,
        Tensor::new(vec![g.cout], db)?,
    ))
}

fn rows_cols<T: Real>(x: &Tensor<T>) -> (usize, usize) {
    match *x.shape() {
        [d] => (1, d),
        [n, d] => (n, d),
        _ => (0, 0),
    }
}

/// Affine map `y = x W^T + b` for `x` of shape `[D]` or `[N, D]`.
pub fn linear<T: Real>(x: &Tensor<T>, weight: &Tensor<T>, bias: Option<&Tensor<T>>) -> Result<Tensor<T>> {
    let (n, d) = rows_cols(x);
    if n == 0 {
        return Err(shape_err("dense", format!("input must be [D] or [N,D], got {:?}", x.shape())));
    }
    let [o, wd] = *weight.shape() else {
        return Err(shape_err("dense", format!("weight must be [O,D], got {:?}", weight.shape())));
    };
    if wd != d {
        return Err(shape_err("dense", format!("weight expects {wd} inputs, got {d}")));
    }
    if let Some(b) = bias {
        if b.shape() != [o] {
            return Err(shape_err("dense", format!("bias {:?} for {o} outputs", b.shape())));
        }
    }
    let (xd, wdata) = (x.data(), weight.data());
    let mut out = vec![T::zero(); n * o];
    for r in 0..n {
        let xr = &xd[r * d..(r + 1) * d];
        for j in 0..o {
            let wr = &wdata[j * d..(j + 1) * d];
            let mut acc = bias.map_or(T::zero(), |b| b.data()[j]);
            for (a, b) in xr.iter().zip(wr) {
                acc = acc + *a * *b;
            }
            out[r * o + j] = acc;
        }
    }
    let shape = if x.shape().len() == 1 { vec![o] } else { vec![n, o] };
    Tensor::new(shape, out)
}

/// Returns (d input, d weight, d bias).
pub fn linear_backward<T: Real>(
    x: &Tensor<T>,
    weight: &Tensor<T>,
    grad: &Tensor<T>,
) -> (Tensor<T>, Tensor<T>, Tensor<T>) {
    let (n, d) = rows_cols(x);
    let o = weight.shape()[0];
    let (xd, wd, gd) = (x.data(), weight.data(), grad.data());
    let mut dx = vec![T::zero(); n * d];
    let mut dw = vec![T::zero(); o * d];
    let mut db = vec![T::zero(); o];
    for r in 0..n {
        let xr = &xd[r * d..(r + 1) * d];
        let dxr = &mut dx[r * d..(r + 1) * d];
        for j in 0..o {
            let gv = gd[r * o + j];
            if gv == T::zero() {
                continue;
            }
            db[j] = db[j] + gv;
            let wr = &wd[j * d..(j + 1) * d];
            let dwr = &mut dw[j * d..(j + 1) * d];
            for i in 0..d {
                dxr[i] = dxr[i] + gv * wr[i];
                dwr[i] = dwr[i] + gv * xr[i];
            }
        }
    }
    (
        Tensor::new(x.shape().to_vec(), dx).expect("input shape"),
        Tensor::new(weight.shape().to_vec(), dw).expect("weight shape"),
        Tensor::new(vec![o], db).expect("bias shape"),
    )
}

pub fn activation<T: Real>(x: &Tensor<T>, kind: Activation) -> Tensor<T> {
    match kind {
        Activation::Relu => x.map(|v| if v > T::zero() { v } else { T::zero() }),
        Activation::Sigmoid => x.map(sigmoid_scalar),
        Activation::LeakyRelu(alpha) => {
            let a = T::lit(alpha);
            x.map(|v| if v > T::zero() { v } else { a * v })
        }
        Activation::Elu => x.map(|v| if v > T::zero() { v } else { v.exp_m1() }),
    }
}

#[inline]
fn sigmoid_scalar<T: Real>(v: T) -> T {
    if v >= T::zero() {
        T::one() / (T::one() + (-v).exp())
    } else {
        let e = v.exp();
        e / (T::one() + e)
    }
}

/// Gradient of an activation given its input, output and upstream gradient.
pub fn activation_backward<T: Real>(
    x: &Tensor<T>,
    y: &Tensor<T>,
    grad: &Tensor<T>,
    kind: Activation,
) -> Tensor<T> {
    let data = x
        .data()
        .iter()
        .zip(y.data())
        .zip(grad.data())
        .map(|((&xv, &yv), &g)| match kind {
            Activation::Relu => {
                if xv > T::zero() {
                    g
                } else {
                    T::zero()
                }
            }
            Activation::Sigmoid => g * yv * (T::one() - yv),
            Activation::LeakyRelu(alpha) => {
                if xv > T::zero() {
                    g
                } else {
                    g * T::lit(alpha)
                }
            }
            Activation::Elu => {
                if xv > T::zero() {
                    g
                } else {
                    g * (yv + T::one())
                }
            }
        })
        .collect();
    Tensor::new(x.shape().to_vec(), data).expect("same shape")
}

/// Nearest-neighbour upsampling: every pixel becomes a `factor x factor` block.
pub fn upsample_nearest<T: Real>(x: &Tensor<T>, factor: usize) -> Result<Tensor<T>> {
    let (c, h, w) = dims3(x.shape(), "upsample_nearest")?;
    if factor == 0 {
        return Err(TensorError::Invalid("upsample factor must be >= 1".into()));
    }
    if factor == 1 {
        return Ok(x.clone());
    }
    let (oh, ow) = (h * factor, w * factor);
    let xd = x.data();
    let mut out = Vec::with_capacity(c * oh * ow);
    for ci in 0..c {
        for r in 0..oh {
            let src = &xd[(ci * h + r / factor) * w..(ci * h + r / factor + 1) * w];
            for col in 0..ow {
                out.push(src[col / factor]);
            }
        }
    }
    Tensor::new(vec![c, oh, ow], out)
}

pub fn upsample_nearest_backward<T: Real>(
    x_shape: &[usize],
    grad: &Tensor<T>,
    factor: usize,
) -> Tensor<T> {
    let (c, h, w) = (x_shape[0], x_shape[1], x_shape[2]);
    let (oh, ow) = (h * factor, w * factor);
    let gd = grad.data();
    let mut dx = vec![T::zero(); c * h * w];
    for ci in 0..c {
        for r in 0..oh {
            for col in 0..ow {
                let i = (ci * h + r / factor) * w + col / factor;
                dx[i] = dx[i] + gd[(ci * oh + r) * ow + col];
            }
        }
    }
    Tensor::new(x_shape.to_vec(), dx).expect("input shape")
}

/// Mean squared or mean absolute error over all elements.
pub fn loss<T: Real>(pred: &Tensor<T>, target: &Tensor<T>, kind: LossKind) -> Result<T> {
    if pred.shape() != target.shape() {
        return Err(shape_err("loss", format!("{:?} vs {:?}", pred.shape(), target.shape())));
    }
    let n = T::lit(pred.len() as f64);
    let total: T = pred
        .data()
        .iter()
        .zip(target.data())
        .map(|(&p, &t)| match kind {
            LossKind::Mse => (p - t) * (p - t),
            LossKind::L1 => (p - t).abs(),
        })
        .sum();
    Ok(total / n)
}

/// Gradient of [`loss`] with respect to `pred`, scaled by the upstream scalar.
pub fn loss_backward<T: Real>(pred: &Tensor<T>, target: &Tensor<T>, kind: LossKind, upstream: T) -> Tensor<T> {
    let scale = upstream / T::lit(pred.len() as f64);
    let data = pred
        .data()
        .iter()
        .zip(target.data())
        .map(|(&p, &t)| match kind {
            LossKind::Mse => scale * T::lit(2.0) * (p - t),
            LossKind::L1 => {
                let d = p - t;
                if d > T::zero() {
                    scale
                } else if d < T::zero() {
                    -scale
                } else {
                    T::zero()
                }
            }
        })
        .collect();
    Tensor::new(pred.shape().to_vec(), data).expect("same shape")
}

/// Softmax of `scores[e]` within each group `seg[e]`.
pub fn segment_softmax<T: Real>(scores: &[T], seg: &[usize], groups: usize) -> Vec<T> {
    let mut max = vec![T::neg_infinity(); groups];
    for (&s, &g) in scores.iter().zip(seg) {
        if s > max[g] {
            max[g] = s;
        }
    }
    let exps: Vec<T> = scores.iter().zip(seg).map(|(&s, &g)| (s - max[g]).exp()).collect();
    let mut denom = vec![T::zero(); groups];
    for (&e, &g) in exps.iter().zip(seg) {
        denom[g] = denom[g] + e;
    }
    exps.iter().zip(seg).map(|(&e, &g)| e / denom[g]).collect()
}

/// Standardises each column of an `[N, M]` matrix over its rows:
/// `(x - mean) / sqrt(var + eps)` with the biased variance. Returns the
/// output and the per-column `1 / sqrt(var + eps)`.
pub fn standardize_cols<T: Real>(x: &Tensor<T>, eps: f64) -> Result<(Tensor<T>, Vec<T>)> {
    let [n, m] = *x.shape() else {
        return Err(shape_err("standardize_cols", format!("expected [N, M], got {:?}", x.shape())));
    };
    if n == 0 {
        return Err(shape_err("standardize_cols", "no rows"));
    }
    let xd = x.data();
    let inv_n = T::one() / T::lit(n as f64);
    let mut mean = vec![T::zero(); m];
    for r in 0..n {
        for c in 0..m {
            mean[c] = mean[c] + xd[r * m + c];
        }
    }
    mean.iter_mut().for_each(|v| *v = *v * inv_n);
    let mut var = vec![T::zero(); m];
    for r in 0..n {
        for c in 0..m {
            let d = xd[r * m + c] - mean[c];
            var[c] = var[c] + d * d;
        }
    }
    let eps = T::lit(eps);
    let inv_std: Vec<T> = var.iter().map(|&v| T::one() / (v * inv_n + eps).sqrt()).collect();
    let data = xd.iter().enumerate().map(|(i, &v)| (v - mean[i % m]) * inv_std[i % m]).collect();
    Ok((Tensor::new(vec![n, m], data)?, inv_std))
}

/// Input gradient of [`standardize_cols`] given its output `y`.
pub fn standardize_cols_backward<T: Real>(y: &Tensor<T>, inv_std: &[T], grad: &Tensor<T>) -> Tensor<T> {
    let (n, m) = (y.shape()[0], y.shape()[1]);
    let (yd, gd) = (y.data(), grad.data());
    let mut sum_g = vec![T::zero(); m];
    let mut sum_gy = vec![T::zero(); m];
    for r in 0..n {
        for c in 0..m {
            sum_g[c] = sum_g[c] + gd[r * m + c];
            sum_gy[c] = sum_gy[c] + gd[r * m + c] * yd[r * m + c];
        }
    }
    let nt = T::lit(n as f64);
    let data = (0..n * m)
        .map(|i| {
            let c = i % m;
            inv_std[c] / nt * (nt * gd[i] - sum_g[c] - yd[i] * sum_gy[c])
        })
        .collect();
    Tensor::new(vec![n, m], data).expect("same shape")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    fn t(shape: &[usize], data: &[f64]) -> Tensor<f64> {
        Tensor::from_f64(shape, data).unwrap()
    }

    /// Direct quadruple-loop cross-correlation used as an independent oracle.
    fn conv_oracle(x: &Tensor<f64>, k: &Tensor<f64>, b: &Tensor<f64>) -> Tensor<f64> {
        let (cin, h, w) = (x.shape()[0], x.shape()[1], x.shape()[2]);
        let (cout, ks) = (k.shape()[0], k.shape()[2]);
        let p = (ks / 2) as isize;
        let mut out = Tensor::zeros(&[cout, h, w]);
        for o in 0..cout {
            for i in 0..h {
                for j in 0..w {
                    let mut s = b.data()[o];
                    for c in 0..cin {
                        for di in 0..ks {
                            for dj in 0..ks {
                                let (ii, jj) = (i as isize + di as isize - p, j as isize + dj as isize - p);
                                if ii >= 0 && jj >= 0 && (ii as usize) < h && (jj as usize) < w {
                                    s += k.data()[((o * cin + c) * ks + di) * ks + dj]
                                        * x.data()[(c * h + ii as usize) * w + jj as usize];
                                }
                            }
                        }
                    }
                    out.data_mut()[(o * h + i) * w + j] = s;
                }
            }
        }
        out
    }

    #[test]
    fn conv_identity_kernel() {
        let mut rng = Rng::new(1);
        let x: Tensor<f64> = rng.uniform_tensor(&[1, 5, 4], -1.0, 1.0);
        let mut k = Tensor::zeros(&[1, 1, 3, 3]);
        k.data_mut()[4] = 1.0;
        let y = conv2d(&x, &k, &Tensor::zeros(&[1]), 1).unwrap();
        assert_eq!(y, x);
        let k1 = t(&[1, 1, 1, 1], &[1.0]);
        assert_eq!(conv2d(&x, &k1, &Tensor::zeros(&[1]), 1).unwrap(), x);
    }

    #[test]
    fn conv_zero_input_gives_bias() {
        let mut rng = Rng::new(2);
        let k: Tensor<f64> = rng.uniform_tensor(&[3, 2, 3, 3], -1.0, 1.0);
        let b = t(&[3], &[0.5, -1.0, 2.0]);
        let y = conv2d(&Tensor::zeros(&[2, 4, 4]), &k, &b, 1).unwrap();
        for c in 0..3 {
            assert!(y.data()[c * 16..(c + 1) * 16].iter().all(|&v| v == b.data()[c]));
        }
    }

    #[test]
    fn conv_matches_direct_oracle() {
        let mut rng = Rng::new(3);
        let x: Tensor<f64> = rng.uniform_tensor(&[2, 4, 4], -1.0, 1.0);
        let k: Tensor<f64> = rng.uniform_tensor(&[3, 2, 3, 3], -1.0, 1.0);
        let b: Tensor<f64> = rng.uniform_tensor(&[3], -1.0, 1.0);
        let y = conv2d(&x, &k, &b, 1).unwrap();
        assert!(y.max_abs_diff(&conv_oracle(&x, &k, &b)) < 1e-6);
    }

    #[test]
    fn strided_conv_subsamples_same_conv() {
        let mut rng = Rng::new(4);
        let x: Tensor<f64> = rng.uniform_tensor(&[2, 6, 6], -1.0, 1.0);
        let k: Tensor<f64> = rng.uniform_tensor(&[2, 2, 3, 3], -1.0, 1.0);
        let b: Tensor<f64> = rng.uniform_tensor(&[2], -1.0, 1.0);
        let full = conv2d(&x, &k, &b, 1).unwrap();
        let strided = conv2d(&x, &k, &b, 2).unwrap();
        assert_eq!(strided.shape(), [2, 3, 3]);
        for o in 0..2 {
            for i in 0..3 {
                for j in 0..3 {
                    let a = strided.data()[(o * 3 + i) * 3 + j];
                    let e = full.data()[(o * 6 + 2 * i) * 6 + 2 * j];
                    assert!((a - e).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn conv_rejects_bad_shapes() {
        let x: Tensor<f64> = Tensor::zeros(&[2, 4, 4]);
        assert!(conv2d(&x, &Tensor::zeros(&[1, 3, 3, 3]), &Tensor::zeros(&[1]), 1).is_err());
        assert!(conv2d(&x, &Tensor::zeros(&[1, 2, 2, 2]), &Tensor::zeros(&[1]), 1).is_err());
        assert!(conv2d(&x, &Tensor::zeros(&[1, 2, 3, 3]), &Tensor::zeros(&[2]), 1).is_err());
    }

    #[test]
    fn dense_examples() {
        let x = t(&[2], &[3.0, -4.0]);
        let eye = t(&[2, 2], &[1.0, 0.0, 0.0, 1.0]);
        assert_eq!(linear(&x, &eye, Some(&Tensor::zeros(&[2]))).unwrap(), x);
        let y = linear(&x, &Tensor::zeros(&[2, 2]), Some(&t(&[2], &[1.0, 2.0]))).unwrap();
        assert_eq!(y.data(), [1.0, 2.0]);

        let x = t(&[3], &[0.3, -1.2, 2.5]);
        let w = t(&[2, 3], &[0.1, 0.2, 0.3, -0.5, 0.4, 0.9]);
        let b = t(&[2], &[0.05, -0.25]);
        let y = linear(&x, &w, Some(&b)).unwrap();
        let expect = [0.3 * 0.1 - 1.2 * 0.2 + 2.5 * 0.3 + 0.05, -0.3 * 0.5 - 1.2 * 0.4 + 2.5 * 0.9 - 0.25];
        assert!((y.data()[0] - expect[0]).abs() < 1e-6);
        assert!((y.data()[1] - expect[1]).abs() < 1e-6);
        assert!(linear(&x, &t(&[2, 2], &[0.0; 4]), None).is_err());
    }

    #[test]
    fn activation_examples() {
        let x = t(&[3], &[-1.0, 0.0, 2.0]);
        assert_eq!(activation(&x, Activation::Relu).data(), [0.0, 0.0, 2.0]);
        assert_eq!(activation(&t(&[1], &[0.0]), Activation::Sigmoid).item(), 0.5);
        let y = activation(&t(&[1], &[-2.0]), Activation::LeakyRelu(0.2)).item();
        assert!((y + 0.4).abs() < 1e-12);
        let s = activation(&t(&[2], &[-800.0, 800.0]), Activation::Sigmoid);
        assert!(s.is_finite());
    }

    #[test]
    fn upsample_examples() {
        let mut rng = Rng::new(5);
        let x: Tensor<f64> = rng.uniform_tensor(&[2, 3, 3], 0.0, 1.0);
        assert_eq!(upsample_nearest(&x, 1).unwrap(), x);
        let y = upsample_nearest(&t(&[1, 1, 1], &[3.0]), 2).unwrap();
        assert_eq!(y.shape(), [1, 2, 2]);
        assert!(y.data().iter().all(|&v| v == 3.0));
        let y = upsample_nearest(&x, 3).unwrap();
        assert!((y.sum() - 9.0 * x.sum()).abs() < 1e-9);
    }

    #[test]
    fn loss_examples() {
        let a = t(&[2], &[1.0, 1.0]);
        assert_eq!(loss(&a, &a, LossKind::Mse).unwrap(), 0.0);
        assert_eq!(loss(&a, &Tensor::zeros(&[2]), LossKind::Mse).unwrap(), 1.0);
        assert_eq!(loss(&t(&[2], &[1.0, 0.0]), &Tensor::zeros(&[2]), LossKind::L1).unwrap(), 0.5);
        assert!(loss(&a, &Tensor::zeros(&[3]), LossKind::L1).is_err());
    }

    #[test]
    fn segment_softmax_normalises_per_group() {
        let s = [1.0f64, 2.0, 3.0, -1.0, 0.5];
        let seg = [0, 0, 1, 1, 1];
        let y = segment_softmax(&s, &seg, 2);
        assert!((y[0] + y[1] - 1.0).abs() < 1e-12);
        assert!((y[2] + y[3] + y[4] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn standardized_columns_have_zero_mean_unit_variance() {
        let x = t(&[4, 2], &[1.0, 10.0, 2.0, 20.0, 3.0, 30.0, 6.0, 0.0]);
        let (y, _) = standardize_cols(&x, 0.0).unwrap();
        for c in 0..2 {
            let col: Vec<f64> = (0..4).map(|r| y.data()[r * 2 + c]).collect();
            let mean = col.iter().sum::<f64>() / 4.0;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 4.0;
            assert!(mean.abs() < 1e-12 && (var - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn standardizing_a_single_row_gives_zeros() {
        let (y, _) = standardize_cols(&t(&[1, 3], &[5.0, -2.0, 7.0]), 1e-5).unwrap();
        assert!(y.data().iter().all(|&v| v == 0.0));
    }
}
