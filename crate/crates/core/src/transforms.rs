//! Group actions used as training-time augmentation: periodic bicubic
//! downscaling and cyclic shifts, plus a spectral bandwidth diagnostic.
//!
//! Downscaling by `s` in (0, 1] resamples the image, viewed as periodic, on a
//! grid with spacing `1/s` pixels starting at a subpixel offset. There is
//! deliberately no antialiasing prefilter: content above the new Nyquist
//! aliases, and the training objective built on this transform treats that as
//! part of the augmentation. Output extents are `floor(s H) x floor(s W)`.

use ndgrad::fft::fft2_real;
use ndgrad::ops::{cyclic_shift_t, resample_bicubic_t, ResampleSpec};
use ndgrad::{Scalar, Tensor, Var};
use rand::Rng;
use rand_chacha::ChaCha12Rng;

use crate::{SeiError, SeiResult};

/// One draw of the downscaling action.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleParams {
    /// Scale factor in (0, 1]; output is `s` times smaller per axis.
    pub s: f64,
    /// Grid origin in input pixels, each component in `[0, 1/s)`.
    pub offset: (f64, f64),
}

impl ScaleParams {
    pub fn new(s: f64, offset: (f64, f64)) -> SeiResult<Self> {
        if !(s > 0.0 && s <= 1.0) {
            return Err(SeiError::invalid("scale factor", format!("{s} (want 0 < s <= 1)")));
        }
        if !offset.0.is_finite() || !offset.1.is_finite() {
            return Err(SeiError::invalid("scale offset", format!("{offset:?}")));
        }
        Ok(ScaleParams { s, offset })
    }

    /// Output extents for an input of `(h, w)`.
    pub fn output_extents(&self, h: usize, w: usize) -> (usize, usize) {
        ((self.s * h as f64).floor() as usize, (self.s * w as f64).floor() as usize)
    }

    fn resample_spec(&self, h: usize, w: usize) -> ResampleSpec {
        let (oh, ow) = self.output_extents(h, w);
        ResampleSpec {
            out_h: oh,
            out_w: ow,
            spacing: (1.0 / self.s, 1.0 / self.s),
            offset: self.offset,
            kernel_scale: 1.0,
        }
    }
}

/// One draw of the cyclic shift action, in pixels; displacements act modulo
/// the image extents.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ShiftParams {
    pub v: (isize, isize),
}

/// Periodic bicubic downscaling of a plain tensor.
pub fn scale_transform_t<T: Scalar>(x: &Tensor<T>, params: &ScaleParams) -> SeiResult<Tensor<T>> {
    let (_, h, w) = x.dims3("scale_transform")?;
    Ok(resample_bicubic_t(x, &params.resample_spec(h, w))?)
}

/// Graph-recorded downscaling, differentiable in the image.
pub fn scale_transform<T: Scalar>(x: &Var<T>, params: &ScaleParams) -> SeiResult<Var<T>> {
    let shape = x.shape();
    if shape.len() != 3 {
        return Err(SeiError::invalid("scale input", format!("rank {} (want 3)", shape.len())));
    }
    Ok(x.resample_bicubic(&params.resample_spec(shape[1], shape[2]))?)
}

/// Scale factors the training augmentation draws from.
pub const TRAIN_SCALES: [f64; 2] = [0.5, 0.75];

/// Draws `s` uniformly from [`TRAIN_SCALES`] and the grid origin uniformly
/// from `[0, 1/s)^2`. Exactly three `f64` draws, in the order s, row offset,
/// column offset.
pub fn random_scale_params(rng: &mut ChaCha12Rng) -> ScaleParams {
    let s = TRAIN_SCALES[rng.gen_range(0..TRAIN_SCALES.len())];
    let du = rng.gen_range(0.0..1.0 / s);
    let dv = rng.gen_range(0.0..1.0 / s);
    ScaleParams { s, offset: (du, dv) }
}

/// Draws a shift and applies it; returns the transformed image and the draw.
pub fn random_scale<T: Scalar>(
    x: &Var<T>,
    rng: &mut ChaCha12Rng,
) -> SeiResult<(Var<T>, ScaleParams)> {
    let params = random_scale_params(rng);
    Ok((scale_transform(x, &params)?, params))
}

/// Cyclic shift of a plain tensor; content moves toward larger indices for
/// positive displacements.
pub fn cyclic_shift<T: Scalar>(x: &Tensor<T>, params: &ShiftParams) -> SeiResult<Tensor<T>> {
    Ok(cyclic_shift_t(x, params.v.0, params.v.1)?)
}

/// Uniform shift over the full torus `[0, h) x [0, w)`.
pub fn random_shift_params(rng: &mut ChaCha12Rng, h: usize, w: usize) -> ShiftParams {
    let dr = rng.gen_range(0..h as u64) as isize;
    let dc = rng.gen_range(0..w as u64) as isize;
    ShiftParams { v: (dr, dc) }
}

/// Smallest radial frequency, in cycles per image, inside which at least
/// `energy_fraction` of the total spectral energy lives. Single-channel
/// diagnostic; a constant image answers 0.
pub fn measured_bandwidth(x: &Tensor<f64>, energy_fraction: f64) -> SeiResult<f64> {
    if !(energy_fraction > 0.0 && energy_fraction < 1.0) {
        return Err(SeiError::invalid(
            "energy fraction",
            format!("{energy_fraction} (want in (0, 1))"),
        ));
    }
    let (c, h, w) = x.dims3("measured_bandwidth")?;
    if c != 1 {
        return Err(SeiError::invalid("channel count", format!("{c} (want 1)")));
    }
    let spectrum = fft2_real(x.plane(0), h, w);
    let signed = |k: usize, n: usize| -> f64 {
        if k <= n / 2 {
            k as f64
        } else {
            k as f64 - n as f64
        }
    };
    let mut by_radius: Vec<(f64, f64)> = Vec::with_capacity(h * w);
    let mut total = 0.0;
    for ky in 0..h {
        for kx in 0..w {
            let e = spectrum[ky * w + kx].norm_sqr();
            let r = signed(ky, h).hypot(signed(kx, w));
            by_radius.push((r, e));
            total += e;
        }
    }
    if total == 0.0 {
        return Ok(0.0);
    }
    by_radius.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut acc = 0.0;
    for (r, e) in by_radius {
        acc += e;
        if acc >= energy_fraction * total {
            return Ok(r);
        }
    }
    Ok((h.max(w) / 2) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Purpose};
    use ndgrad::Graph;
    use std::f64::consts::TAU;

    fn sinusoid(h: usize, w: usize, cycles: f64) -> Tensor<f64> {
        Tensor::from_fn(vec![1, h, w], |i| {
            let x = (i % w) as f64;
            (TAU * cycles * x / w as f64).cos()
        })
    }

    #[test]
    fn unit_scale_zero_offset_reproduces_samples() {
        let x = Tensor::from_fn(vec![1, 6, 7], |i| (i as f64).sin());
        let p = ScaleParams::new(1.0, (0.0, 0.0)).unwrap();
        let y = scale_transform_t(&x, &p).unwrap();
        for (a, b) in x.data().iter().zip(y.data()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn constants_stay_constant_under_any_draw() {
        let x = Tensor::full(vec![1, 9, 9], 0.37f64);
        let mut rng = stream(3, Purpose::Loss, &[0]);
        for _ in 0..8 {
            let p = random_scale_params(&mut rng);
            let y = scale_transform_t(&x, &p).unwrap();
            let (oh, ow) = p.output_extents(9, 9);
            assert_eq!(y.shape(), &[1, oh, ow]);
            for v in y.data() {
                assert!((v - 0.37).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn halving_doubles_cycles_per_pixel() {
        let x = sinusoid(64, 64, 3.0);
        let p = ScaleParams::new(0.5, (0.0, 0.0)).unwrap();
        let y = scale_transform_t(&x, &p).unwrap();
        assert_eq!(y.shape(), &[1, 32, 32]);
        let spec = fft2_real(y.plane(0), 32, 32);
        let peak = spec
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != 0)
            .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
            .map(|(i, _)| i % 32)
            .unwrap();
        // 3 cycles across 64 pixels become 3 cycles across 32: same bin
        // index, twice the cycles per pixel.
        assert!(peak == 3 || peak == 29);
    }

    #[test]
    fn scale_draw_frequencies_and_ranges() {
        let mut rng = stream(5, Purpose::Loss, &[1]);
        let n = 10_000;
        let mut halves = 0usize;
        for _ in 0..n {
            let p = random_scale_params(&mut rng);
            assert!(TRAIN_SCALES.contains(&p.s));
            assert!(p.offset.0 >= 0.0 && p.offset.0 < 1.0 / p.s);
            assert!(p.offset.1 >= 0.0 && p.offset.1 < 1.0 / p.s);
            if p.s == 0.5 {
                halves += 1;
            }
        }
        let freq = halves as f64 / n as f64;
        assert!((freq - 0.5).abs() < 0.02, "freq {freq}");
    }

    #[test]
    fn random_scale_is_deterministic_given_the_stream() {
        let x = Tensor::from_fn(vec![1, 8, 8], |i| (i as f64 * 0.13).cos());
        let g = Graph::new();
        let v = g.constant(x);
        let mut ra = stream(8, Purpose::Loss, &[2]);
        let mut rb = stream(8, Purpose::Loss, &[2]);
        let (ya, pa) = random_scale(&v, &mut ra).unwrap();
        let (yb, pb) = random_scale(&v, &mut rb).unwrap();
        assert_eq!(pa, pb);
        assert_eq!(ya.value().data(), yb.value().data());
    }

    #[test]
    fn shifts_preserve_pixel_multiset_and_spectrum_magnitude() {
        let x = Tensor::from_fn(vec![1, 8, 8], |i| ((i * 37 % 11) as f64) / 11.0);
        let shifted = cyclic_shift(&x, &ShiftParams { v: (3, -2) }).unwrap();
        // Bijectivity: the pixel multiset is exactly preserved, so any
        // order-canonical reduction (sorted sum, min, max) is bitwise stable.
        let mut xs = x.data().to_vec();
        let mut ys = shifted.data().to_vec();
        xs.sort_by(f64::total_cmp);
        ys.sort_by(f64::total_cmp);
        assert_eq!(xs, ys);
        assert_eq!(xs.iter().sum::<f64>(), ys.iter().sum::<f64>());

        let sa = fft2_real(x.plane(0), 8, 8);
        let sb = fft2_real(shifted.plane(0), 8, 8);
        for (a, b) in sa.iter().zip(&sb) {
            assert!((a.norm() - b.norm()).abs() < 1e-10);
        }
    }

    #[test]
    fn full_period_shift_is_identity() {
        let x = Tensor::from_fn(vec![1, 5, 6], |i| i as f64);
        let same = cyclic_shift(&x, &ShiftParams { v: (5, 6) }).unwrap();
        assert_eq!(x.data(), same.data());
        let zero = cyclic_shift(&x, &ShiftParams { v: (0, 0) }).unwrap();
        assert_eq!(x.data(), zero.data());
    }

    #[test]
    fn bandwidth_of_simple_spectra() {
        let flat = Tensor::full(vec![1, 32, 32], 0.42);
        assert_eq!(measured_bandwidth(&flat, 0.99).unwrap(), 0.0);

        let wave = sinusoid(32, 32, 5.0);
        assert_eq!(measured_bandwidth(&wave, 0.99).unwrap(), 5.0);

        assert!(measured_bandwidth(&flat, 1.5).is_err());
    }

    #[test]
    fn bandwidth_of_lowpassed_noise_respects_the_cutoff() {
        let mut rng = stream(12, Purpose::Oracle, &[3]);
        let n = 32;
        let noise = Tensor::from_fn(vec![1, n, n], |_| rng.gen_range(-1.0..1.0));
        let mut spec = fft2_real(noise.plane(0), n, n);
        let signed = |k: usize| if k <= n / 2 { k as f64 } else { k as f64 - n as f64 };
        for ky in 0..n {
            for kx in 0..n {
                if signed(ky).hypot(signed(kx)) > 8.0 {
                    spec[ky * n + kx] = num_complex::Complex::new(0.0, 0.0);
                }
            }
        }
        let lowpassed =
            Tensor::new(vec![1, n, n], ndgrad::fft::ifft2_real(&spec, n, n)).unwrap();
        let r = measured_bandwidth(&lowpassed, 0.999).unwrap();
        assert!(r <= 9.0, "radius {r}");
    }
}
