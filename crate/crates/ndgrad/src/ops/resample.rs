use crate::ops::axpy;
use crate::{NdError, NdResult, Scalar, Tensor, Var};

/// Keys cubic interpolation kernel with a = -1/2. Support is `(-2, 2)`,
/// `keys_kernel(0) == 1`, and the integer-shift lattice sums are exactly 1,
/// so resampling reproduces constants.
pub fn keys_kernel(t: f64) -> f64 {
    let a = t.abs();
    if a < 1.0 {
        ((1.5 * a - 2.5) * a) * a + 1.0
    } else if a < 2.0 {
        (((-0.5) * a + 2.5) * a - 4.0) * a + 2.0
    } else {
        0.0
    }
}

/// Geometry of a periodic bicubic resampling pass.
///
/// Output sample `(yo, xo)` reads the source at coordinate
/// `(yo * spacing.0 + offset.0, xo * spacing.1 + offset.1)`, in units of
/// input pixels, wrapping periodically. `kernel_scale` stretches the Keys
/// kernel: 1 is plain interpolation, a factor `r > 1` widens the support to
/// `4 r` taps and turns the pass into an antialiased downsampler.
#[derive(Debug, Clone, PartialEq)]
pub struct ResampleSpec {
    pub out_h: usize,
    pub out_w: usize,
    pub spacing: (f64, f64),
    pub offset: (f64, f64),
    pub kernel_scale: f64,
}

/// Per-axis gather table: each output index reads `ntaps` (index, weight)
/// pairs. Rows are padded with zero-weight taps so the layout stays flat.
pub struct AxisTaps<T> {
    n_out: usize,
    ntaps: usize,
    idx: Vec<u32>,
    wgt: Vec<T>,
}

/// Builds the gather table for one axis. Tap positions and weights are
/// computed in `f64` regardless of `T`, so the geometry is identical across
/// precisions.
pub fn resample_taps<T: Scalar>(
    n_in: usize,
    n_out: usize,
    spacing: f64,
    offset: f64,
    kernel_scale: f64,
) -> NdResult<AxisTaps<T>> {
    if n_in == 0 || n_out == 0 {
        return Err(NdError::Invalid {
            op: "resample_bicubic",
            what: "extents must be positive".into(),
        });
    }
    if !(spacing > 0.0) || !spacing.is_finite() || !offset.is_finite() {
        return Err(NdError::Invalid {
            op: "resample_bicubic",
            what: format!("bad spacing {spacing} or offset {offset}"),
        });
    }
    if !(kernel_scale >= 1.0) || !kernel_scale.is_finite() {
        return Err(NdError::Invalid {
            op: "resample_bicubic",
            what: format!("kernel scale {kernel_scale} must be >= 1"),
        });
    }
    let support = 2.0 * kernel_scale;
    let ntaps = (4.0 * kernel_scale).floor() as usize + 1;
    let mut idx = Vec::with_capacity(n_out * ntaps);
    let mut wgt = Vec::with_capacity(n_out * ntaps);
    let n = n_in as isize;
    for o in 0..n_out {
        let s = o as f64 * spacing + offset;
        let lo = (s - support).ceil() as isize;
        let hi = (s + support).floor() as isize;
        debug_assert!((hi - lo + 1) as usize <= ntaps);
        for t in lo..=hi {
            idx.push(t.rem_euclid(n) as u32);
            wgt.push(T::of_f64(
                keys_kernel((s - t as f64) / kernel_scale) / kernel_scale,
            ));
        }
        for _ in (hi - lo + 1) as usize..ntaps {
            idx.push(0);
            wgt.push(T::zero());
        }
    }
    Ok(AxisTaps {
        n_out,
        ntaps,
        idx,
        wgt,
    })
}

fn gather_rows<T: Scalar>(
    out: &mut [T],
    xin: &[T],
    rows: &AxisTaps<T>,
    w: usize,
) {
    // out[yo * w ..] += wgt * xin[iy * w ..], one axpy per tap row
    for yo in 0..rows.n_out {
        let dst = &mut out[yo * w..][..w];
        for t in 0..rows.ntaps {
            let k = yo * rows.ntaps + t;
            let wt = rows.wgt[k];
            if wt == T::zero() {
                continue;
            }
            let src = &xin[rows.idx[k] as usize * w..][..w];
            axpy(dst, src, wt);
        }
    }
}

fn gather_cols<T: Scalar>(out: &mut [T], xin: &[T], cols: &AxisTaps<T>, h: usize, w_in: usize) {
    let w_out = cols.n_out;
    for y in 0..h {
        let src = &xin[y * w_in..][..w_in];
        let dst = &mut out[y * w_out..][..w_out];
        for (xo, d) in dst.iter_mut().enumerate() {
            let mut acc = T::zero();
            for t in 0..cols.ntaps {
                let k = xo * cols.ntaps + t;
                acc += cols.wgt[k] * src[cols.idx[k] as usize];
            }
            *d = acc;
        }
    }
}

fn apply_taps<T: Scalar>(
    x: &Tensor<T>,
    rows: &AxisTaps<T>,
    cols: &AxisTaps<T>,
) -> Tensor<T> {
    let (c, h, w) = x.dims3("resample_bicubic").expect("validated");
    let (oh, ow) = (rows.n_out, cols.n_out);
    let mut out = Tensor::zeros(vec![c, oh, ow]);
    let mut tmp = vec![T::zero(); h * ow];
    for ch in 0..c {
        tmp.iter_mut().for_each(|v| *v = T::zero());
        gather_cols(&mut tmp, x.plane(ch), cols, h, w);
        gather_rows(out.plane_mut(ch), &tmp, rows, ow);
    }
    out
}

/// Adjoint of [`apply_taps`] onto an input of extents `(h, w)`: the same tap
/// tables are walked in the same order, scattering instead of gathering.
fn apply_taps_adjoint<T: Scalar>(
    g: &Tensor<T>,
    rows: &AxisTaps<T>,
    cols: &AxisTaps<T>,
    c: usize,
    h: usize,
    w: usize,
) -> Tensor<T> {
    let ow = cols.n_out;
    let mut out = Tensor::zeros(vec![c, h, w]);
    let mut tmp = vec![T::zero(); h * ow];
    for ch in 0..c {
        tmp.iter_mut().for_each(|v| *v = T::zero());
        let gplane = g.plane(ch);
        // transpose of gather_rows: tmp[iy] += wgt * g[yo]
        for yo in 0..rows.n_out {
            let src = &gplane[yo * ow..][..ow];
            for t in 0..rows.ntaps {
                let k = yo * rows.ntaps + t;
                let wt = rows.wgt[k];
                if wt == T::zero() {
                    continue;
                }
                let dst = &mut tmp[rows.idx[k] as usize * ow..][..ow];
                axpy(dst, src, wt);
            }
        }
        // transpose of gather_cols: out[y][ix] += wgt * tmp[y][xo]
        let xplane = out.plane_mut(ch);
        for y in 0..h {
            let src = &tmp[y * ow..][..ow];
            let dst = &mut xplane[y * w..][..w];
            for (xo, s) in src.iter().enumerate() {
                for t in 0..cols.ntaps {
                    let k = xo * cols.ntaps + t;
                    dst[cols.idx[k] as usize] += cols.wgt[k] * *s;
                }
            }
        }
    }
    out
}

fn build_tables<T: Scalar>(
    x: &Tensor<T>,
    spec: &ResampleSpec,
) -> NdResult<(AxisTaps<T>, AxisTaps<T>)> {
    let (_, h, w) = x.dims3("resample_bicubic")?;
    let rows = resample_taps::<T>(h, spec.out_h, spec.spacing.0, spec.offset.0, spec.kernel_scale)?;
    let cols = resample_taps::<T>(w, spec.out_w, spec.spacing.1, spec.offset.1, spec.kernel_scale)?;
    Ok((rows, cols))
}

/// Periodic separable bicubic resampling of a `[c, h, w]` tensor.
pub fn resample_bicubic_t<T: Scalar>(x: &Tensor<T>, spec: &ResampleSpec) -> NdResult<Tensor<T>> {
    let (rows, cols) = build_tables(x, spec)?;
    Ok(apply_taps(x, &rows, &cols))
}

impl<T: Scalar> Var<T> {
    /// Periodic bicubic resampling; the backward pass scatters through the
    /// same tap tables, so gradient and adjoint agree exactly.
    pub fn resample_bicubic(&self, spec: &ResampleSpec) -> NdResult<Var<T>> {
        let x = self.value();
        let (rows, cols) = build_tables(&x, spec)?;
        let (c, h, w) = x.dims3("resample_bicubic")?;
        let out = apply_taps(&x, &rows, &cols);
        Ok(self.graph().push_op(
            out,
            vec![self.id()],
            Box::new(move |g, mask| {
                vec![mask[0].then(|| apply_taps_adjoint(g, &rows, &cols, c, h, w))]
            }),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ops::cyclic_shift_t;

    #[test]
    fn keys_kernel_fixed_points() {
        assert_eq!(keys_kernel(0.0), 1.0);
        assert_eq!(keys_kernel(1.0), 0.0);
        assert_eq!(keys_kernel(2.0), 0.0);
        assert_eq!(keys_kernel(-2.5), 0.0);
        assert!((keys_kernel(0.5) - 0.5625).abs() < 1e-15);
        assert!((keys_kernel(1.5) + 0.0625).abs() < 1e-15);
        assert_eq!(keys_kernel(0.75), keys_kernel(-0.75));
    }

    fn spec(out_h: usize, out_w: usize, spacing: f64, offset: f64) -> ResampleSpec {
        ResampleSpec {
            out_h,
            out_w,
            spacing: (spacing, spacing),
            offset: (offset, offset),
            kernel_scale: 1.0,
        }
    }

    #[test]
    fn unit_spacing_zero_offset_is_identity() {
        let x = Tensor::from_fn(vec![2, 5, 4], |i| (i as f64 * 0.913).sin());
        let y = resample_bicubic_t(&x, &spec(5, 4, 1.0, 0.0)).unwrap();
        for (a, b) in y.data().iter().zip(x.data()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn integer_offset_matches_cyclic_shift() {
        let x = Tensor::from_fn(vec![1, 6, 6], |i| ((i * 13 % 17) as f64).cos());
        let y = resample_bicubic_t(&x, &spec(6, 6, 1.0, 2.0)).unwrap();
        // reading at source o + 2 moves content by -2
        let want = cyclic_shift_t(&x, -2, -2).unwrap();
        for (a, b) in y.data().iter().zip(want.data()) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn constants_are_reproduced_for_all_kernel_scales() {
        let x: Tensor<f64> = Tensor::full(vec![1, 7, 5], 0.8125);
        for (oh, ow, sp, off, ks) in [
            (7, 5, 1.0, 0.3, 1.0),
            (3, 2, 2.3, 0.77, 1.0),
            (4, 3, 1.75, 0.0, 2.0),
            (2, 2, 3.5, 1.21, 3.0),
        ] {
            let spec = ResampleSpec {
                out_h: oh,
                out_w: ow,
                spacing: (sp, sp),
                offset: (off, off),
                kernel_scale: ks,
            };
            let y = resample_bicubic_t(&x, &spec).unwrap();
            for v in y.data() {
                assert!(
                    (v - 0.8125).abs() < 1e-12,
                    "constant not reproduced at scale {ks}"
                );
            }
        }
    }

    #[test]
    fn half_offset_weights_hand_worked() {
        // At offset 1/2 the four taps carry [-1/16, 9/16, 9/16, -1/16].
        let x: Tensor<f64> = Tensor::new(vec![1, 1, 4], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let spec = ResampleSpec {
            out_h: 1,
            out_w: 4,
            spacing: (1.0, 1.0),
            offset: (0.0, 0.5),
            kernel_scale: 1.0,
        };
        let y = resample_bicubic_t(&x, &spec).unwrap();
        let want = [1.25, 2.5, 3.75, 2.5];
        for (a, b) in y.data().iter().zip(&want) {
            assert!((a - b).abs() < 1e-14, "got {:?}", y.data());
        }
    }

    #[test]
    fn gradient_is_the_exact_adjoint() {
        // <R x, y> == <x, R^T y> where R^T is the backward pass.
        let g = crate::Graph::<f64>::new();
        let x0 = Tensor::from_fn(vec![1, 6, 5], |i| ((i * 29 % 23) as f64 * 0.21).sin());
        let cot = Tensor::from_fn(vec![1, 4, 7], |i| ((i * 17 % 13) as f64 * 0.47).cos());
        let spec = ResampleSpec {
            out_h: 4,
            out_w: 7,
            spacing: (1.44, 0.71),
            offset: (0.35, 1.1),
            kernel_scale: 1.0,
        };
        let x = g.var(x0.clone(), true);
        let y = x.resample_bicubic(&spec).unwrap();
        let c = g.constant(cot.clone());
        let s = y.dot(&c).unwrap();
        let grads = g.backward(&s).unwrap();
        let lhs = crate::ops::dot_slice(y.value().data(), cot.data());
        let rhs = crate::ops::dot_slice(x0.data(), grads.get(&x).unwrap().data());
        assert!((lhs - rhs).abs() < 1e-12 * lhs.abs().max(1.0));
    }

    #[test]
    fn bad_geometry_is_rejected() {
        let x = Tensor::<f64>::zeros(vec![1, 4, 4]);
        let mut s = spec(4, 4, 0.0, 0.0);
        assert!(resample_bicubic_t(&x, &s).is_err());
        s = spec(4, 4, 1.0, 0.0);
        s.kernel_scale = 0.5;
        assert!(resample_bicubic_t(&x, &s).is_err());
        s = spec(0, 4, 1.0, 0.0);
        assert!(resample_bicubic_t(&x, &s).is_err());
    }
}
