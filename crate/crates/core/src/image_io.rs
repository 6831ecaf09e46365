//! Images as planar tensors, and their movement to and from files.
//!
//! An [`Image`] is a rank-3 tensor `[channels, height, width]` with
//! intensities in `[0, 1]`. Files are 8- or 16-bit PNG, PGM or PPM; decoding
//! maps sample `k` of maximum `M` to `k / M` exactly, and encoding is the
//! inverse on in-gamut values (out-of-gamut values are clipped, never
//! wrapped).

use std::path::Path;

use image::{DynamicImage, ImageBuffer, Luma, Rgb};
use ndgrad::{Scalar, Tensor};

use crate::{SeiError, SeiResult};

/// A decoded image. Wraps a `[C, H, W]` tensor; the wrapper exists so
/// file-facing code can state "this is image data in [0, 1]" in types, while
/// numerical code borrows the underlying tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct Image<T> {
    tensor: Tensor<T>,
}

impl<T: Scalar> Image<T> {
    pub fn from_tensor(tensor: Tensor<T>) -> SeiResult<Self> {
        tensor.dims3("image")?;
        Ok(Image { tensor })
    }

    pub fn zeros(channels: usize, height: usize, width: usize) -> Self {
        Image { tensor: Tensor::zeros(vec![channels, height, width]) }
    }

    pub fn channels(&self) -> usize {
        self.tensor.shape()[0]
    }

    pub fn height(&self) -> usize {
        self.tensor.shape()[1]
    }

    pub fn width(&self) -> usize {
        self.tensor.shape()[2]
    }

    pub fn tensor(&self) -> &Tensor<T> {
        &self.tensor
    }

    pub fn into_tensor(self) -> Tensor<T> {
        self.tensor
    }

    pub fn cast<U: Scalar>(&self) -> Image<U> {
        Image { tensor: self.tensor.cast() }
    }
}

/// Stored sample width for encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BitDepth {
    Eight,
    Sixteen,
}

impl BitDepth {
    pub fn parse(bits: u32) -> SeiResult<Self> {
        match bits {
            8 => Ok(BitDepth::Eight),
            16 => Ok(BitDepth::Sixteen),
            other => Err(SeiError::invalid("bit depth", format!("{other} (want 8 or 16)"))),
        }
    }

    pub fn bits(self) -> u32 {
        match self {
            BitDepth::Eight => 8,
            BitDepth::Sixteen => 16,
        }
    }
}

fn planar_from_interleaved<T: Scalar>(
    samples: &[u16],
    channels: usize,
    height: usize,
    width: usize,
    max: f64,
) -> Image<T> {
    let plane = height * width;
    let mut data = vec![T::default(); channels * plane];
    for p in 0..plane {
        for c in 0..channels {
            data[c * plane + p] = T::of_f64(f64::from(samples[p * channels + c]) / max);
        }
    }
    Image { tensor: Tensor::new(vec![channels, height, width], data).expect("sized above") }
}

/// Decodes a PNG/PGM/PPM file into intensities `k / M`.
pub fn load_image<T: Scalar>(path: &Path) -> SeiResult<Image<T>> {
    let decoded = image::open(path)?;
    let widen = |v: &[u8]| v.iter().map(|&b| u16::from(b)).collect::<Vec<u16>>();
    let (samples, channels, h, w, max) = match decoded {
        DynamicImage::ImageLuma8(buf) => {
            let (w, h) = buf.dimensions();
            (widen(buf.as_raw()), 1, h, w, 255.0)
        }
        DynamicImage::ImageRgb8(buf) => {
            let (w, h) = buf.dimensions();
            (widen(buf.as_raw()), 3, h, w, 255.0)
        }
        DynamicImage::ImageLuma16(buf) => {
            let (w, h) = buf.dimensions();
            (buf.as_raw().clone(), 1, h, w, 65535.0)
        }
        DynamicImage::ImageRgb16(buf) => {
            let (w, h) = buf.dimensions();
            (buf.as_raw().clone(), 3, h, w, 65535.0)
        }
        other => {
            return Err(SeiError::invalid(
                "image format",
                format!("{:?} (want 8/16-bit gray or rgb, no alpha)", other.color()),
            ))
        }
    };
    Ok(planar_from_interleaved(&samples, channels, h as usize, w as usize, max))
}

fn quantize(v: f64, max: f64) -> u16 {
    (v.clamp(0.0, 1.0) * max).round() as u16
}

/// Encodes to the format implied by the file extension (`.png`, `.pgm`,
/// `.ppm`). Out-of-gamut intensities are clipped to `[0, 1]`.
pub fn save_image<T: Scalar>(img: &Image<T>, path: &Path, depth: BitDepth) -> SeiResult<()> {
    let (c, h, w) = (img.channels(), img.height(), img.width());
    if c != 1 && c != 3 {
        return Err(SeiError::invalid("channel count", format!("{c} (want 1 or 3)")));
    }
    let plane = h * w;
    let max = f64::from((1u32 << depth.bits()) - 1);
    let data = img.tensor().data();
    let mut interleaved = vec![0u16; plane * c];
    for p in 0..plane {
        for ch in 0..c {
            interleaved[p * c + ch] = quantize(data[ch * plane + p].as_f64(), max);
        }
    }
    let (w32, h32) = (w as u32, h as u32);
    match (c, depth) {
        (1, BitDepth::Eight) => {
            let raw: Vec<u8> = interleaved.iter().map(|&v| v as u8).collect();
            ImageBuffer::<Luma<u8>, _>::from_raw(w32, h32, raw).expect("sized above").save(path)?
        }
        (3, BitDepth::Eight) => {
            let raw: Vec<u8> = interleaved.iter().map(|&v| v as u8).collect();
            ImageBuffer::<Rgb<u8>, _>::from_raw(w32, h32, raw).expect("sized above").save(path)?
        }
        (1, BitDepth::Sixteen) => ImageBuffer::<Luma<u16>, _>::from_raw(w32, h32, interleaved)
            .expect("sized above")
            .save(path)?,
        (3, BitDepth::Sixteen) => ImageBuffer::<Rgb<u16>, _>::from_raw(w32, h32, interleaved)
            .expect("sized above")
            .save(path)?,
        _ => unreachable!("channel count checked above"),
    }
    Ok(())
}
