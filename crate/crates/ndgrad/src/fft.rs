//! Thin 2-D wrappers around `rustfft`.
//!
//! Forward transforms are unnormalized, `X[k] = sum_n x[n] exp(-2 pi i k n / N)`;
//! the inverse divides by the element count, so `ifft2(fft2(x)) == x` up to
//! roundoff.

use num_complex::Complex;
use rustfft::FftPlanner;

use crate::Scalar;

/// In-place 2-D FFT of a row-major `h x w` buffer.
pub fn fft2_in_place<T: Scalar>(data: &mut [Complex<T>], h: usize, w: usize, inverse: bool) {
    assert_eq!(data.len(), h * w, "buffer does not match extents");
    if h == 0 || w == 0 {
        return;
    }
    let mut planner = FftPlanner::new();
    let row_fft = if inverse {
        planner.plan_fft_inverse(w)
    } else {
        planner.plan_fft_forward(w)
    };
    let col_fft = if inverse {
        planner.plan_fft_inverse(h)
    } else {
        planner.plan_fft_forward(h)
    };

    for row in data.chunks_exact_mut(w) {
        row_fft.process(row);
    }

    let mut column = vec![Complex::new(T::zero(), T::zero()); h];
    for x in 0..w {
        for y in 0..h {
            column[y] = data[y * w + x];
        }
        col_fft.process(&mut column);
        for y in 0..h {
            data[y * w + x] = column[y];
        }
    }

    if inverse {
        let scale = T::one() / T::of_f64((h * w) as f64);
        for v in data.iter_mut() {
            *v = Complex::new(v.re * scale, v.im * scale);
        }
    }
}

/// Forward 2-D FFT of a real plane.
pub fn fft2_real<T: Scalar>(plane: &[T], h: usize, w: usize) -> Vec<Complex<T>> {
    let mut buf: Vec<Complex<T>> = plane
        .iter()
        .map(|&v| Complex::new(v, T::zero()))
        .collect();
    fft2_in_place(&mut buf, h, w, false);
    buf
}

/// Inverse 2-D FFT, discarding the imaginary part.
///
/// The imaginary residue of a spectrum with Hermitian symmetry is pure
/// roundoff; callers that feed non-Hermitian spectra get the real part of the
/// complex result, which is what every use in this workspace wants.
pub fn ifft2_real<T: Scalar>(spectrum: &[Complex<T>], h: usize, w: usize) -> Vec<T> {
    let mut buf = spectrum.to_vec();
    fft2_in_place(&mut buf, h, w, true);
    buf.into_iter().map(|v| v.re).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn impulse_transforms_to_ones() {
        let mut x = vec![0.0f64; 12];
        x[0] = 1.0;
        let spec = fft2_real(&x, 3, 4);
        for v in &spec {
            assert!((v.re - 1.0).abs() < 1e-14 && v.im.abs() < 1e-14);
        }
    }

    #[test]
    fn round_trip_recovers_the_signal() {
        let x: Vec<f64> = (0..35).map(|i| ((i * 7 % 11) as f64 * 0.4).sin()).collect();
        let spec = fft2_real(&x, 5, 7);
        let back = ifft2_real(&spec, 5, 7);
        for (a, b) in back.iter().zip(&x) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn shifted_impulse_has_unit_modulus_spectrum() {
        let mut x = vec![0.0f64; 16];
        x[1] = 1.0; // one sample to the right of the origin
        let spec = fft2_real(&x, 4, 4);
        for v in &spec {
            assert!((v.norm() - 1.0).abs() < 1e-13);
        }
    }
}
