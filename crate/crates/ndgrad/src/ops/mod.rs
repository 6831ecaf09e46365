//! Tensor operations, each in two forms: a plain function on [`Tensor`]s and
//! a recording method on [`crate::Var`] that registers the matching VJP.
//!
//! The slice helpers here are the only place the crate spends real time, so
//! they are written to vectorize: fused multiply-accumulate over contiguous
//! slices, and reductions over a fixed number of independent lanes so the
//! summation order never depends on anything but the slice length.

mod conv;
mod elementwise;
mod reduce;
mod resample;
mod sample;

pub use conv::{
    conv2d_mc_t, conv2d_periodic_direct_t, conv2d_periodic_fft_t, conv2d_periodic_t,
    flip_kernel, DIRECT_CONV_MAX_TAPS,
};
pub use resample::{keys_kernel, resample_bicubic_t, resample_taps, ResampleSpec};
pub use sample::{crop_t, cyclic_shift_t, subsample_t, upsample_zero_t};

use crate::Scalar;

const LANES: usize = 8;

/// `dst[i] += w * src[i]`.
#[inline]
pub fn axpy<T: Scalar>(dst: &mut [T], src: &[T], w: T) {
    debug_assert_eq!(dst.len(), src.len());
    for (d, s) in dst.iter_mut().zip(src.iter()) {
        *d += w * *s;
    }
}

/// `dst[i] += w * src[(i + n - shift) % n]`, with `shift` already in `0..n`.
#[inline]
pub fn axpy_rotated<T: Scalar>(dst: &mut [T], src: &[T], shift: usize, w: T) {
    let n = dst.len();
    debug_assert_eq!(src.len(), n);
    debug_assert!(shift < n);
    let (head, tail) = dst.split_at_mut(shift);
    axpy(tail, &src[..n - shift], w);
    axpy(head, &src[n - shift..], w);
}

/// Dot product with a fixed 8-lane accumulation order.
#[inline]
pub fn dot_slice<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    let split = a.len() - a.len() % LANES;
    let mut acc = [T::zero(); LANES];
    for (ca, cb) in a[..split]
        .chunks_exact(LANES)
        .zip(b[..split].chunks_exact(LANES))
    {
        for l in 0..LANES {
            acc[l] += ca[l] * cb[l];
        }
    }
    let mut total = T::zero();
    for lane in acc {
        total += lane;
    }
    for (x, y) in a[split..].iter().zip(&b[split..]) {
        total += *x * *y;
    }
    total
}

/// `sum_i a[i] * b[(i + n - shift) % n]`, with `shift` in `0..n`.
#[inline]
pub fn dot_rotated<T: Scalar>(a: &[T], b: &[T], shift: usize) -> T {
    let n = a.len();
    debug_assert_eq!(b.len(), n);
    debug_assert!(shift < n);
    dot_slice(&a[shift..], &b[..n - shift]) + dot_slice(&a[..shift], &b[n - shift..])
}

/// Sum with the same fixed-lane order as [`dot_slice`].
#[inline]
pub fn sum_slice<T: Scalar>(a: &[T]) -> T {
    let split = a.len() - a.len() % LANES;
    let mut acc = [T::zero(); LANES];
    for chunk in a[..split].chunks_exact(LANES) {
        for l in 0..LANES {
            acc[l] += chunk[l];
        }
    }
    let mut total = T::zero();
    for lane in acc {
        total += lane;
    }
    for x in &a[split..] {
        total += *x;
    }
    total
}

/// `sum_i (a[i] - b[i])^2` with the fixed-lane order.
#[inline]
pub fn sq_diff_sum<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    let split = a.len() - a.len() % LANES;
    let mut acc = [T::zero(); LANES];
    for (ca, cb) in a[..split]
        .chunks_exact(LANES)
        .zip(b[..split].chunks_exact(LANES))
    {
        for l in 0..LANES {
            let d = ca[l] - cb[l];
            acc[l] += d * d;
        }
    }
    let mut total = T::zero();
    for lane in acc {
        total += lane;
    }
    for (x, y) in a[split..].iter().zip(&b[split..]) {
        let d = *x - *y;
        total += d * d;
    }
    total
}
