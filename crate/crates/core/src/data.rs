//! Dataset bookkeeping and synthetic imagery.
//!
//! Splitting works on file paths and is independent of enumeration order:
//! paths are sorted, shuffled by a seeded Fisher-Yates pass, and cut. The
//! synthetic textures are Gaussian random fields with power-law spectra,
//! enough structure to train and evaluate on without any external data.

use std::path::PathBuf;

use ndgrad::fft::ifft2_real;
use ndgrad::Tensor;
use num_complex::Complex;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::rng::{stream, Purpose};
use crate::{SeiError, SeiResult};

/// Deterministic train/test split. Paths are sorted before shuffling, so any
/// enumeration order of the same files yields the same split; the first
/// `n_test` shuffled entries become the held-out set. At least one training
/// sample must remain.
pub fn split_paths(
    paths: &[PathBuf],
    n_test: usize,
    seed: u64,
) -> SeiResult<(Vec<PathBuf>, Vec<PathBuf>)> {
    if n_test >= paths.len() {
        return Err(SeiError::invalid(
            "test split",
            format!("{n_test} held out of {} leaves no training data", paths.len()),
        ));
    }
    let mut sorted: Vec<PathBuf> = paths.to_vec();
    sorted.sort();
    let mut rng = stream(seed, Purpose::Split, &[]);
    for i in (1..sorted.len()).rev() {
        let j = rng.gen_range(0..=i);
        sorted.swap(i, j);
    }
    let train = sorted.split_off(n_test);
    Ok((train, sorted))
}

/// A single-channel Gaussian random field with amplitude spectrum
/// `|k|^(-slope)`, rescaled to exactly fill `[0, 1]`.
///
/// The spectrum is filled over canonical frequency pairs in a fixed scan
/// order (two standard-normal draws per pair, one for self-conjugate bins)
/// and mirrored Hermitian, so the field is real and the draw count is a
/// function of `n` alone. The zero frequency is left empty; larger `slope`
/// concentrates energy at coarse structure.
pub fn synth_texture(seed: u64, n: usize, slope: f64) -> SeiResult<Tensor<f64>> {
    if n < 2 {
        return Err(SeiError::invalid("texture extent", format!("{n} (want >= 2)")));
    }
    if !slope.is_finite() || slope < 0.0 {
        return Err(SeiError::invalid("spectral slope", format!("{slope}")));
    }
    let mut rng = stream(seed, Purpose::Texture, &[n as u64]);
    let mut spectrum = vec![Complex::new(0.0f64, 0.0); n * n];
    let signed = |i: usize| -> f64 {
        if i <= n / 2 {
            i as f64
        } else {
            i as f64 - n as f64
        }
    };
    for ky in 0..n {
        for kx in 0..n {
            if ky == 0 && kx == 0 {
                continue;
            }
            let (py, px) = ((n - ky) % n, (n - kx) % n);
            if (py, px) < (ky, kx) {
                continue;
            }
            let radius = (signed(ky).powi(2) + signed(kx).powi(2)).sqrt();
            let amp = radius.powf(-slope);
            if (py, px) == (ky, kx) {
                let re: f64 = rng.sample(StandardNormal);
                spectrum[ky * n + kx] = Complex::new(amp * re, 0.0);
            } else {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                let v = Complex::new(amp * re, amp * im);
                spectrum[ky * n + kx] = v;
                spectrum[py * n + px] = v.conj();
            }
        }
    }
    let field = ifft2_real(&spectrum, n, n);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &v in &field {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !(hi - lo).is_finite() || hi - lo < 1e-12 {
        return Err(SeiError::invalid("texture contrast", format!("range {}", hi - lo)));
    }
    // Division rather than reciprocal multiplication: the extremes then land
    // on exactly 0 and 1.
    let range = hi - lo;
    Tensor::new(vec![1, n, n], field.iter().map(|&v| (v - lo) / range).collect())
        .map_err(SeiError::from)
}
