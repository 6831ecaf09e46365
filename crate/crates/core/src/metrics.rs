//! Reconstruction quality metrics: PSNR and SSIM on the luminance channel.
//!
//! Both metrics run in `f64` and assume intensities in `[0, 1]` with peak 1.
//! SSIM window sums use periodic boundary handling, the same convention as
//! every other windowed operator here. PSNR of (near-)identical inputs is
//! capped at 99 dB so CSV output stays finite.

use ndgrad::ops::conv2d_periodic_t;
use ndgrad::{Scalar, Tensor};

use crate::{Image, SeiError, SeiResult};

/// Ceiling applied to PSNR, in dB. Hit only when the mean squared error
/// underflows the cap, identical inputs included.
pub const PSNR_CAP_DB: f64 = 99.0;

/// `10 log10(peak^2 / mse)`, capped at [`PSNR_CAP_DB`].
pub fn psnr_from_mse(mse: f64, peak: f64) -> f64 {
    if mse <= 0.0 {
        return PSNR_CAP_DB;
    }
    (10.0 * (peak * peak / mse).log10()).min(PSNR_CAP_DB)
}

fn mean_squared_error<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>) -> SeiResult<f64> {
    if a.shape() != b.shape() {
        return Err(SeiError::invalid(
            "metric inputs",
            format!("shape {:?} vs {:?}", a.shape(), b.shape()),
        ));
    }
    let sum: f64 = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(p, q)| {
            let d = p.as_f64() - q.as_f64();
            d * d
        })
        .sum();
    Ok(sum / a.len() as f64)
}

/// Peak signal-to-noise ratio over all channels jointly.
pub fn psnr<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>, peak: f64) -> SeiResult<f64> {
    Ok(psnr_from_mse(mean_squared_error(a, b)?, peak))
}

/// Full-range BT.601 luma: `0.299 R + 0.587 G + 0.114 B`.
pub const LUMA_WEIGHTS: [f64; 3] = [0.299, 0.587, 0.114];

/// Collapses a 3-channel image to its luminance plane.
pub fn rgb_to_y<T: Scalar>(image: &Image<T>) -> SeiResult<Image<T>> {
    if image.channels() != 3 {
        return Err(SeiError::invalid(
            "channel count",
            format!("{} (want 3)", image.channels()),
        ));
    }
    let (h, w) = (image.height(), image.width());
    let t = image.tensor();
    let y = Tensor::from_fn(vec![1, h, w], |i| {
        let v: f64 = LUMA_WEIGHTS
            .iter()
            .enumerate()
            .map(|(c, wgt)| wgt * t.plane(c)[i].as_f64())
            .sum();
        T::of_f64(v)
    });
    Image::from_tensor(y)
}

/// The luminance plane of any supported image: 3-channel input goes through
/// [`rgb_to_y`], single-channel input is already luma.
pub fn luma<T: Scalar>(image: &Image<T>) -> SeiResult<Image<T>> {
    match image.channels() {
        1 => Ok(image.clone()),
        3 => rgb_to_y(image),
        c => Err(SeiError::invalid("channel count", format!("{c} (want 1 or 3)"))),
    }
}

fn ssim_window() -> Tensor<f64> {
    let sigma = 1.5;
    let half = 5isize;
    let mut taps = Vec::with_capacity(121);
    for i in -half..=half {
        for j in -half..=half {
            taps.push((-((i * i + j * j) as f64) / (2.0 * sigma * sigma)).exp());
        }
    }
    let mass: f64 = taps.iter().sum();
    for t in &mut taps {
        *t /= mass;
    }
    Tensor::new(vec![11, 11], taps).expect("sized above")
}

/// Mean structural similarity over all positions, single channel, peak 1.
/// 11x11 Gaussian window with standard deviation 1.5; stabilizers
/// `C1 = (0.01)^2`, `C2 = (0.03)^2`.
pub fn ssim(a: &Tensor<f64>, b: &Tensor<f64>) -> SeiResult<f64> {
    let (ca, h, w) = a.dims3("ssim")?;
    if ca != 1 {
        return Err(SeiError::invalid("channel count", format!("{ca} (want 1)")));
    }
    if a.shape() != b.shape() {
        return Err(SeiError::invalid(
            "metric inputs",
            format!("shape {:?} vs {:?}", a.shape(), b.shape()),
        ));
    }
    if h < 11 || w < 11 {
        return Err(SeiError::invalid("image extents", format!("{h}x{w} (want >= 11x11)")));
    }
    let window = ssim_window();
    let blur = |x: &Tensor<f64>| conv2d_periodic_t(x, &window);
    let mul = |x: &Tensor<f64>, y: &Tensor<f64>| x.zip_map(y, "ssim", |p, q| p * q);

    let mu_a = blur(a)?;
    let mu_b = blur(b)?;
    let e_aa = blur(&mul(a, a)?)?;
    let e_bb = blur(&mul(b, b)?)?;
    let e_ab = blur(&mul(a, b)?)?;

    let c1 = 0.01 * 0.01;
    let c2 = 0.03 * 0.03;
    let mut acc = 0.0;
    for i in 0..h * w {
        let (ma, mb) = (mu_a.data()[i], mu_b.data()[i]);
        let va = e_aa.data()[i] - ma * ma;
        let vb = e_bb.data()[i] - mb * mb;
        let cov = e_ab.data()[i] - ma * mb;
        let num = (2.0 * ma * mb + c1) * (2.0 * cov + c2);
        let den = (ma * ma + mb * mb + c1) * (va + vb + c2);
        acc += num / den;
    }
    Ok(acc / (h * w) as f64)
}

/// One evaluated sample in a metrics table.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub id: String,
    pub psnr_y: f64,
    pub ssim_y: f64,
}

/// Luminance-channel PSNR and SSIM for one reconstruction/reference pair.
pub fn evaluate_pair<T: Scalar>(
    id: &str,
    reconstruction: &Image<T>,
    reference: &Image<T>,
) -> SeiResult<MetricRow> {
    let ya = luma(reconstruction)?.cast::<f64>();
    let yb = luma(reference)?.cast::<f64>();
    Ok(MetricRow {
        id: id.to_string(),
        psnr_y: psnr(ya.tensor(), yb.tensor(), 1.0)?,
        ssim_y: ssim(ya.tensor(), yb.tensor())?,
    })
}

/// Renders rows as the metrics table `id,psnr_y,ssim_y`. Floats print in
/// shortest round-trip form, so identical runs give identical bytes.
pub fn metrics_csv(rows: &[MetricRow]) -> String {
    let mut out = String::from("id,psnr_y,ssim_y\n");
    for row in rows {
        out.push_str(&format!("{},{},{}\n", row.id, row.psnr_y, row.ssim_y));
    }
    out
}
