use num_complex::Complex;

use crate::fft::{fft2_real, ifft2_real};
use crate::ops::{axpy_rotated, dot_rotated};
use crate::{NdError, NdResult, Scalar, Tensor, Var};

/// Largest kernel extent handled by the direct loops; anything bigger goes
/// through the FFT path. Both paths agree to near machine precision.
pub const DIRECT_CONV_MAX_TAPS: usize = 9;

/// Reverses both kernel axes. For odd extents the center tap stays put, so
/// convolving with the flipped kernel is the adjoint of convolving with the
/// original.
pub fn flip_kernel<T: Scalar>(k: &Tensor<T>) -> Tensor<T> {
    Tensor::new(
        k.shape().to_vec(),
        k.data().iter().rev().copied().collect(),
    )
    .expect("same length")
}

/// Accepts a rank-2 `[h, w]` or rank-3 `[c, h, w]` image and returns `(c, h, w)`.
fn image_dims<T: Scalar>(x: &Tensor<T>, op: &'static str) -> NdResult<(usize, usize, usize)> {
    match x.shape()[..] {
        [h, w] => Ok((1, h, w)),
        [c, h, w] => Ok((c, h, w)),
        _ => Err(NdError::RankMismatch {
            op,
            want: 3,
            got: x.shape().to_vec(),
        }),
    }
}

fn validate_kernel(kh: usize, kw: usize, h: usize, w: usize) -> NdResult<()> {
    if kh % 2 == 0 || kw % 2 == 0 {
        return Err(NdError::EvenKernel(vec![kh, kw]));
    }
    if kh > h || kw > w {
        return Err(NdError::KernelTooLarge {
            kernel: vec![kh, kw],
            image: vec![h, w],
        });
    }
    Ok(())
}

/// Accumulates one periodic convolution plane: for every kernel tap, the
/// whole source plane is streamed once with a rotated fused multiply-add.
fn conv_plane_accumulate<T: Scalar>(
    out: &mut [T],
    xin: &[T],
    k: &[T],
    kh: usize,
    kw: usize,
    h: usize,
    w: usize,
    mirror: bool,
) {
    let (cy, cx) = (kh / 2, kw / 2);
    for i in 0..kh {
        for j in 0..kw {
            let wt = k[i * kw + j];
            if wt == T::zero() {
                continue;
            }
            let (mut di, mut dj) = (i as isize - cy as isize, j as isize - cx as isize);
            if mirror {
                di = -di;
                dj = -dj;
            }
            let shift = dj.rem_euclid(w as isize) as usize;
            let mut sy = (-di).rem_euclid(h as isize) as usize;
            for y in 0..h {
                axpy_rotated(&mut out[y * w..y * w + w], &xin[sy * w..sy * w + w], shift, wt);
                sy += 1;
                if sy == h {
                    sy = 0;
                }
            }
        }
    }
}

/// Per-tap cross-correlation of `g` against `xin`:
/// `gk[i, j] = sum_y dot(g[y, .], xin[(y - di) mod h, .] rotated by dj)`.
fn corr_taps_accumulate<T: Scalar>(
    gk: &mut [T],
    g: &[T],
    xin: &[T],
    kh: usize,
    kw: usize,
    h: usize,
    w: usize,
) {
    let (cy, cx) = (kh / 2, kw / 2);
    for i in 0..kh {
        for j in 0..kw {
            let (di, dj) = (i as isize - cy as isize, j as isize - cx as isize);
            let shift = dj.rem_euclid(w as isize) as usize;
            let mut sy = (-di).rem_euclid(h as isize) as usize;
            let mut acc = T::zero();
            for y in 0..h {
                acc += dot_rotated(&g[y * w..y * w + w], &xin[sy * w..sy * w + w], shift);
                sy += 1;
                if sy == h {
                    sy = 0;
                }
            }
            gk[i * kw + j] += acc;
        }
    }
}

/// Periodic 2-D convolution by direct summation. True convolution: the
/// kernel is flipped relative to cross-correlation, and the center tap of
/// the odd kernel sits on the output pixel.
pub fn conv2d_periodic_direct_t<T: Scalar>(x: &Tensor<T>, k: &Tensor<T>) -> NdResult<Tensor<T>> {
    let (_, h, w) = image_dims(x, "conv2d_periodic")?;
    let (kh, kw) = k.dims2("conv2d_periodic")?;
    validate_kernel(kh, kw, h, w)?;
    let mut out = Tensor::zeros(x.shape().to_vec());
    let plane = h * w;
    for (xin, xout) in x
        .data()
        .chunks_exact(plane)
        .zip(out.data_mut().chunks_exact_mut(plane))
    {
        conv_plane_accumulate(xout, xin, k.data(), kh, kw, h, w, false);
    }
    Ok(out)
}

/// Periodic 2-D convolution via the FFT: the kernel is embedded on the image
/// grid with its center tap at the origin, both factors are transformed, and
/// the product is transformed back.
pub fn conv2d_periodic_fft_t<T: Scalar>(x: &Tensor<T>, k: &Tensor<T>) -> NdResult<Tensor<T>> {
    let (_, h, w) = image_dims(x, "conv2d_periodic")?;
    let (kh, kw) = k.dims2("conv2d_periodic")?;
    validate_kernel(kh, kw, h, w)?;
    let (cy, cx) = (kh / 2, kw / 2);

    let mut kbuf = vec![T::zero(); h * w];
    for i in 0..kh {
        for j in 0..kw {
            let y = (i as isize - cy as isize).rem_euclid(h as isize) as usize;
            let x0 = (j as isize - cx as isize).rem_euclid(w as isize) as usize;
            kbuf[y * w + x0] = k.data()[i * kw + j];
        }
    }
    let khat = fft2_real(&kbuf, h, w);

    let plane = h * w;
    let mut out = Tensor::zeros(x.shape().to_vec());
    for (xin, xout) in x
        .data()
        .chunks_exact(plane)
        .zip(out.data_mut().chunks_exact_mut(plane))
    {
        let mut xhat = fft2_real(xin, h, w);
        for (a, b) in xhat.iter_mut().zip(&khat) {
            *a = Complex::new(a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re);
        }
        xout.copy_from_slice(&ifft2_real(&xhat, h, w));
    }
    Ok(out)
}

/// Periodic 2-D convolution, direct for kernels up to
/// `DIRECT_CONV_MAX_TAPS` per axis and FFT-based beyond that.
pub fn conv2d_periodic_t<T: Scalar>(x: &Tensor<T>, k: &Tensor<T>) -> NdResult<Tensor<T>> {
    let (kh, kw) = k.dims2("conv2d_periodic")?;
    if kh.max(kw) > DIRECT_CONV_MAX_TAPS {
        conv2d_periodic_fft_t(x, k)
    } else {
        conv2d_periodic_direct_t(x, k)
    }
}

/// Multichannel periodic convolution: `x` is `[cin, h, w]`, `weights` is
/// `[cout, cin, kh, kw]`, the result is `[cout, h, w]`. Always direct; the
/// kernels this is used with are small.
pub fn conv2d_mc_t<T: Scalar>(x: &Tensor<T>, weights: &Tensor<T>) -> NdResult<Tensor<T>> {
    let (cin, h, w) = x.dims3("conv2d_mc")?;
    let ws = weights.shape();
    let [cout, wcin, kh, kw] = ws[..] else {
        return Err(NdError::RankMismatch {
            op: "conv2d_mc",
            want: 4,
            got: ws.to_vec(),
        });
    };
    if wcin != cin {
        return Err(NdError::ShapeMismatch {
            op: "conv2d_mc",
            left: x.shape().to_vec(),
            right: ws.to_vec(),
        });
    }
    validate_kernel(kh, kw, h, w)?;

    let plane = h * w;
    let taps = kh * kw;
    let mut out = Tensor::zeros(vec![cout, h, w]);
    for (co, xout) in out.data_mut().chunks_exact_mut(plane).enumerate() {
        for (ci, xin) in x.data().chunks_exact(plane).enumerate() {
            let k = &weights.data()[(co * cin + ci) * taps..][..taps];
            conv_plane_accumulate(xout, xin, k, kh, kw, h, w, false);
        }
    }
    Ok(out)
}

fn conv2d_mc_grad_input<T: Scalar>(
    g: &Tensor<T>,
    weights: &Tensor<T>,
    cin: usize,
    h: usize,
    w: usize,
) -> Tensor<T> {
    let ws = weights.shape();
    let (kh, kw) = (ws[2], ws[3]);
    let plane = h * w;
    let taps = kh * kw;
    let mut gx = Tensor::zeros(vec![cin, h, w]);
    for (ci, gplane) in gx.data_mut().chunks_exact_mut(plane).enumerate() {
        for (co, gout) in g.data().chunks_exact(plane).enumerate() {
            let k = &weights.data()[(co * cin + ci) * taps..][..taps];
            conv_plane_accumulate(gplane, gout, k, kh, kw, h, w, true);
        }
    }
    gx
}

fn conv2d_mc_grad_weights<T: Scalar>(
    g: &Tensor<T>,
    x: &Tensor<T>,
    shape: &[usize],
) -> Tensor<T> {
    let (cin, kh, kw) = (shape[1], shape[2], shape[3]);
    let (_, h, w) = x.dims3("conv2d_mc").expect("validated");
    let plane = h * w;
    let taps = kh * kw;
    let mut gw = Tensor::zeros(shape.to_vec());
    for (co, gout) in g.data().chunks_exact(plane).enumerate() {
        for (ci, xin) in x.data().chunks_exact(plane).enumerate() {
            let slot = &mut gw.data_mut()[(co * cin + ci) * taps..][..taps];
            corr_taps_accumulate(slot, gout, xin, kh, kw, h, w);
        }
    }
    gw
}

impl<T: Scalar> Var<T> {
    /// Periodic convolution of an image with one shared rank-2 kernel.
    ///
    /// Gradients flow to both the image and the kernel. The input gradient
    /// is a convolution with the flipped kernel; the kernel gradient is the
    /// per-tap cross-correlation of upstream gradient and input.
    pub fn conv2d_periodic(&self, kernel: &Var<T>) -> NdResult<Var<T>> {
        self.same_graph(kernel, "conv2d_periodic")?;
        let x = self.value();
        let k = kernel.value();
        let out = conv2d_periodic_t(&x, &k)?;
        let (c, h, w) = image_dims(&x, "conv2d_periodic")?;
        let (kh, kw) = k.dims2("conv2d_periodic")?;
        Ok(self.graph().push_op(
            out,
            vec![self.id(), kernel.id()],
            Box::new(move |g, mask| {
                let gx = mask[0].then(|| {
                    conv2d_periodic_t(g, &flip_kernel(&k)).expect("shapes already validated")
                });
                let gk = mask[1].then(|| {
                    let plane = h * w;
                    let mut gk = Tensor::zeros(vec![kh, kw]);
                    for ch in 0..c {
                        corr_taps_accumulate(
                            gk.data_mut(),
                            &g.data()[ch * plane..][..plane],
                            &x.data()[ch * plane..][..plane],
                            kh,
                            kw,
                            h,
                            w,
                        );
                    }
                    gk
                });
                vec![gx, gk]
            }),
        ))
    }

    /// Multichannel periodic convolution against a `[cout, cin, kh, kw]`
    /// weight tensor.
    pub fn conv2d_mc(&self, weights: &Var<T>) -> NdResult<Var<T>> {
        self.same_graph(weights, "conv2d_mc")?;
        let x = self.value();
        let wgt = weights.value();
        let out = conv2d_mc_t(&x, &wgt)?;
        let (cin, h, w) = x.dims3("conv2d_mc")?;
        let wshape = wgt.shape().to_vec();
        Ok(self.graph().push_op(
            out,
            vec![self.id(), weights.id()],
            Box::new(move |g, mask| {
                vec![
                    mask[0].then(|| conv2d_mc_grad_input(g, &wgt, cin, h, w)),
                    mask[1].then(|| conv2d_mc_grad_weights(g, &x, &wshape)),
                ]
            }),
        ))
    }
}
