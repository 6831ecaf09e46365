//! Training objectives.
//!
//! Every loss builds an [`ndgrad`] graph rooted at a scalar, so the caller
//! backpropagates once and reads parameter gradients. Alongside the graph
//! root, each loss reports its numeric breakdown as a [`LossValue`] for
//! logging.
//!
//! The self-supervised family sees only the measurement `y`:
//!
//! - [`loss_mc`]: measurement consistency `(1/m) |A f(y) - y|^2`. Blind to
//!   anything the degradation operator annihilates.
//! - [`loss_sure`]: measurement consistency corrected into an unbiased
//!   estimate of the measurement-domain error under Gaussian noise, using a
//!   single-probe Monte-Carlo divergence.
//! - [`loss_seq`]: the scale-equivariance residual. Reconstruct, downscale,
//!   treat the downscaled image as a fixed target (gradient stopping),
//!   re-degrade with fresh noise, reconstruct again, and penalize the
//!   mismatch. This is the term that reaches past the operator's nullspace.
//! - [`loss_sei`]: `sure + alpha * seq`, the full objective.
//! - [`loss_css`]: re-degrade the measurement itself and regress back to it.
//! - [`loss_ei_shift`]: the equivariance residual with cyclic shifts in
//!   place of downscaling, kept structurally identical for a controlled
//!   comparison (including gradient stopping).
//!
//! [`loss_supervised`] is the reference objective and the only one that
//! touches ground truth.

use std::collections::BTreeMap;

use ndgrad::{Scalar, Tensor, Var};
use rand::Rng;
use rand_chacha::ChaCha12Rng;

use crate::operators::{add_gaussian_noise, gaussian_field, ForwardModel};
use crate::transforms::{
    random_scale_params, random_shift_params, scale_transform, ScaleParams, ShiftParams,
};
use crate::{SeiError, SeiResult};

/// A loss evaluation: the scalar total plus named sub-terms. Part names come
/// from a fixed vocabulary (`sure`, `seq`, `mc`, `divergence_estimate`,
/// `data_fidelity`); a loss records the ones that apply to it.
#[derive(Debug, Clone, PartialEq)]
pub struct LossValue {
    pub total: f64,
    pub parts: BTreeMap<&'static str, f64>,
}

impl LossValue {
    fn new(total: f64, parts: impl IntoIterator<Item = (&'static str, f64)>) -> Self {
        LossValue { total, parts: parts.into_iter().collect() }
    }

    pub fn part(&self, name: &str) -> Option<f64> {
        self.parts.get(name).copied()
    }

    pub fn is_finite(&self) -> bool {
        self.total.is_finite() && self.parts.values().all(|v| v.is_finite())
    }
}

/// A built loss: the graph root to backpropagate and the numbers to log.
pub struct LossOutput<T> {
    pub root: Var<T>,
    pub value: LossValue,
}

impl<T: Scalar> LossOutput<T> {
    fn from_root(root: Var<T>, parts: impl IntoIterator<Item = (&'static str, f64)>) -> Self {
        let total = root.value().item().expect("loss roots are scalar").as_f64();
        LossOutput { value: LossValue::new(total, parts), root }
    }

    fn with_self_part(mut self, name: &'static str) -> Self {
        self.value.parts.insert(name, self.value.total);
        self
    }
}

/// A reconstruction map `y -> x` whose output is `factor` times larger per
/// axis than its input. Implementations with parameters register them on the
/// same graph as `y` so gradients reach them.
pub trait Reconstructor<T: Scalar> {
    fn factor(&self) -> usize;
    fn reconstruct(&self, y: &Var<T>) -> SeiResult<Var<T>>;
}

/// Minimal reconstructors for oracles and diagnostics: closed-form maps whose
/// losses and gradients can be worked out by hand.
pub mod probes {
    use super::*;

    /// `f(y) = y`.
    pub struct Identity;

    impl<T: Scalar> Reconstructor<T> for Identity {
        fn factor(&self) -> usize {
            1
        }
        fn reconstruct(&self, y: &Var<T>) -> SeiResult<Var<T>> {
            Ok(y.clone())
        }
    }

    /// `f(y) = 0`.
    pub struct Zero;

    impl<T: Scalar> Reconstructor<T> for Zero {
        fn factor(&self) -> usize {
            1
        }
        fn reconstruct(&self, y: &Var<T>) -> SeiResult<Var<T>> {
            Ok(y.mul_scalar(T::zero()))
        }
    }

    /// A fixed linear map: periodic convolution with a constant kernel.
    pub struct FixedConv<T> {
        pub kernel: Tensor<T>,
    }

    impl<T: Scalar> Reconstructor<T> for FixedConv<T> {
        fn factor(&self) -> usize {
            1
        }
        fn reconstruct(&self, y: &Var<T>) -> SeiResult<Var<T>> {
            let k = y.graph().constant(self.kernel.clone());
            Ok(y.conv2d_periodic(&k)?)
        }
    }

    /// Ignores the input and produces a fixed image.
    pub struct Fixed<T> {
        pub output: Tensor<T>,
        pub factor: usize,
    }

    impl<T: Scalar> Reconstructor<T> for Fixed<T> {
        fn factor(&self) -> usize {
            self.factor
        }
        fn reconstruct(&self, y: &Var<T>) -> SeiResult<Var<T>> {
            Ok(y.graph().constant(self.output.clone()))
        }
    }

    /// Parameter-free bicubic upsampling by an integer factor: the weakest
    /// reasonable reconstructor, and the baseline any trained one should
    /// beat.
    pub struct Bicubic {
        pub factor: usize,
    }

    impl<T: Scalar> Reconstructor<T> for Bicubic {
        fn factor(&self) -> usize {
            self.factor
        }
        fn reconstruct(&self, y: &Var<T>) -> SeiResult<Var<T>> {
            let shape = y.shape();
            let spec = ndgrad::ops::ResampleSpec {
                out_h: self.factor * shape[1],
                out_w: self.factor * shape[2],
                spacing: (1.0 / self.factor as f64, 1.0 / self.factor as f64),
                offset: (0.0, 0.0),
                kernel_scale: 1.0,
            };
            Ok(y.resample_bicubic(&spec)?)
        }
    }

    /// One learnable parameter: `f(y) = gain * y`.
    pub struct Gain<T> {
        pub gain: Var<T>,
    }

    impl<T: Scalar> Gain<T> {
        pub fn new(on: &Var<T>, value: f64) -> Self {
            Gain { gain: on.graph().var(Tensor::full(vec![1], T::of_f64(value)), true) }
        }
    }

    impl<T: Scalar> Reconstructor<T> for Gain<T> {
        fn factor(&self) -> usize {
            1
        }
        fn reconstruct(&self, y: &Var<T>) -> SeiResult<Var<T>> {
            Ok(y.scale_by(&self.gain)?)
        }
    }
}

/// Measurement consistency `(1/m) |A f(y) - y|^2`.
pub fn loss_mc<T: Scalar>(
    f: &dyn Reconstructor<T>,
    model: &ForwardModel,
    y: &Var<T>,
) -> SeiResult<LossOutput<T>> {
    let x1 = f.reconstruct(y)?;
    let ay = model.apply_linear_var(&x1)?;
    let root = ay.mse(y)?;
    let total = root.value().item()?.as_f64();
    Ok(LossOutput { root, value: LossValue::new(total, [("mc", total)]) })
}

/// Independent +-1 per element.
pub fn rademacher_field<T: Scalar>(shape: Vec<usize>, rng: &mut ChaCha12Rng) -> Tensor<T> {
    Tensor::from_fn(shape, |_| if rng.gen::<bool>() { T::one() } else { -T::one() })
}

/// Finite-difference step for the divergence probe, tied to the noise scale
/// and floored so it stays above round-off on noiseless data.
pub fn divergence_delta(sigma: f64, y_max_abs: f64) -> f64 {
    (sigma / 10.0).max(1e-4 * y_max_abs)
}

/// Single-probe Monte-Carlo divergence of a map `g` at `y`:
/// `b . (g(y + delta b) - g(y)) / delta` with Rademacher `b`. Unbiased for
/// the true divergence up to the finite-difference error, exact for linear
/// maps.
pub fn mc_divergence<T: Scalar>(
    mut g: impl FnMut(&Tensor<T>) -> SeiResult<Tensor<T>>,
    y: &Tensor<T>,
    rng: &mut ChaCha12Rng,
    delta: f64,
) -> SeiResult<f64> {
    if !(delta > 0.0) {
        return Err(SeiError::invalid("divergence delta", format!("{delta} (want > 0)")));
    }
    let b = rademacher_field::<T>(y.shape().to_vec(), rng);
    let d = T::of_f64(delta);
    let perturbed = y.zip_map(&b, "divergence probe", |v, s| v + d * s)?;
    let gy = g(y)?;
    let gp = g(&perturbed)?;
    if gy.shape() != y.shape() || gp.shape() != y.shape() {
        return Err(SeiError::invalid(
            "divergence map",
            format!("output shape {:?} differs from input {:?}", gy.shape(), y.shape()),
        ));
    }
    let mut acc = 0.0;
    for i in 0..y.len() {
        acc += b.data()[i].as_f64() * (gp.data()[i].as_f64() - gy.data()[i].as_f64());
    }
    Ok(acc / delta)
}

/// Unbiased estimate of the measurement-domain error under Gaussian noise:
/// `(1/m) |A f(y) - y|^2 - sigma^2 + (2 sigma^2 / m) div[A . f](y)`, with
/// the divergence estimated by one Rademacher probe. With `sigma` 0 this is
/// [`loss_mc`] exactly (no probe is drawn). May legitimately be negative;
/// nothing clamps it.
pub fn loss_sure<T: Scalar>(
    f: &dyn Reconstructor<T>,
    model: &ForwardModel,
    y: &Var<T>,
    rng: &mut ChaCha12Rng,
) -> SeiResult<LossOutput<T>> {
    let sigma = model.sigma;
    if sigma == 0.0 {
        let mc = loss_mc(f, model, y)?;
        let t = mc.value.total;
        return Ok(LossOutput {
            root: mc.root,
            value: LossValue::new(t, [("data_fidelity", t), ("sure", t)]),
        });
    }
    let x1 = f.reconstruct(y)?;
    let ay = model.apply_linear_var(&x1)?;
    let fidelity = ay.mse(y)?;

    let delta = divergence_delta(sigma, y.value().max_abs().as_f64());
    let b = rademacher_field::<T>(y.shape(), rng);
    let perturbed =
        y.value().zip_map(&b, "divergence probe", |v, s| v + T::of_f64(delta) * s)?;
    let y_pert = y.graph().constant(perturbed);
    let ay_pert = model.apply_linear_var(&f.reconstruct(&y_pert)?)?;
    let b_var = y.graph().constant(b);
    let divergence =
        ay_pert.sub(&ay)?.dot(&b_var)?.mul_scalar(T::of_f64(1.0 / delta));

    let m = y.value().len() as f64;
    let root = fidelity
        .add_scalar(T::of_f64(-sigma * sigma))
        .add(&divergence.mul_scalar(T::of_f64(2.0 * sigma * sigma / m)))?;

    let fid = fidelity.value().item()?.as_f64();
    let div = divergence.value().item()?.as_f64();
    Ok(LossOutput::from_root(
        root,
        [("data_fidelity", fid), ("divergence_estimate", div)],
    )
    .with_self_part("sure"))
}

/// The randomness consumed by one scale-equivariance evaluation, drawn up
/// front so a pipeline can be replayed against a frozen target. Draw order:
/// scale factor, row offset, column offset, then the fresh noise field
/// row-major (skipped entirely when `sigma` is 0).
pub struct SeqDraws<T> {
    pub scale: ScaleParams,
    pub noise: Tensor<T>,
    target_extents: (usize, usize),
}

impl<T: Scalar> SeqDraws<T> {
    pub fn draw(
        model: &ForwardModel,
        factor: usize,
        y_shape: &[usize],
        rng: &mut ChaCha12Rng,
    ) -> SeiResult<Self> {
        if y_shape.len() != 3 {
            return Err(SeiError::invalid("measurement shape", format!("{y_shape:?}")));
        }
        let (c, h, w) = (y_shape[0], y_shape[1], y_shape[2]);
        let scale = random_scale_params(rng);
        let (h2, w2) = scale.output_extents(factor * h, factor * w);
        let (h2c, w2c) = (h2 - h2 % model.factor, w2 - w2 % model.factor);
        if h2c == 0 || w2c == 0 {
            return Err(SeiError::invalid(
                "downscaled target",
                format!("{h2}x{w2} collapses under factor {}", model.factor),
            ));
        }
        let noise_shape = vec![c, h2c / model.factor, w2c / model.factor];
        let noise = if model.sigma > 0.0 {
            gaussian_field(noise_shape, model.sigma, rng)
        } else {
            Tensor::zeros(noise_shape)
        };
        Ok(SeqDraws { scale, noise, target_extents: (h2c, w2c) })
    }
}

/// The root, breakdown, and frozen regression target of one equivariance
/// evaluation.
pub struct SeqOutput<T> {
    pub root: Var<T>,
    pub value: LossValue,
    /// The (cropped) downscaled reconstruction the loss regresses toward.
    pub target: Tensor<T>,
}

/// The scale-equivariance pipeline with every knob exposed: reconstruct,
/// downscale by the drawn parameters, crop the result to a multiple of the
/// model's subsampling factor, optionally stop the gradient there,
/// re-degrade with the drawn noise, reconstruct again, and take the mean
/// squared mismatch over the cropped target's elements.
///
/// `target_override` substitutes a frozen tensor for the downscaled
/// reconstruction everywhere it appears; by the gradient-stopping contract,
/// the parameter gradient of the substituted pipeline equals the stopped
/// one's.
pub fn seq_pipeline<T: Scalar>(
    f: &dyn Reconstructor<T>,
    model: &ForwardModel,
    y: &Var<T>,
    draws: &SeqDraws<T>,
    stop_gradient: bool,
    target_override: Option<&Tensor<T>>,
) -> SeiResult<SeqOutput<T>> {
    let target_var = match target_override {
        Some(frozen) => y.graph().constant(frozen.clone()),
        None => {
            let x1 = f.reconstruct(y)?;
            let x2 = scale_transform(&x1, &draws.scale)?;
            let x2 = if stop_gradient { x2.detach() } else { x2 };
            let shape = x2.shape();
            let (h2, w2) = (shape[1], shape[2]);
            let (h2c, w2c) = draws.target_extents;
            if h2c == h2 && w2c == w2 {
                x2
            } else {
                x2.crop(0, 0, h2c, w2c)?
            }
        }
    };
    let degraded = model.apply_linear_var(&target_var)?;
    let reinput = if model.sigma > 0.0 {
        degraded.add(&y.graph().constant(draws.noise.clone()))?
    } else {
        degraded
    };
    let x3 = f.reconstruct(&reinput)?;
    let root = x3.mse(&target_var)?;
    let total = root.value().item()?.as_f64();
    Ok(SeqOutput {
        root,
        value: LossValue::new(total, [("seq", total)]),
        target: (*target_var.value()).clone(),
    })
}

/// The scale-equivariance loss as trained: gradient stopping on.
pub fn loss_seq<T: Scalar>(
    f: &dyn Reconstructor<T>,
    model: &ForwardModel,
    y: &Var<T>,
    rng: &mut ChaCha12Rng,
) -> SeiResult<LossOutput<T>> {
    let draws = SeqDraws::draw(model, f.factor(), &y.shape(), rng)?;
    let out = seq_pipeline(f, model, y, &draws, true, None)?;
    Ok(LossOutput { root: out.root, value: out.value })
}

/// The full objective `sure + alpha * seq` with gradient stopping.
pub fn loss_sei<T: Scalar>(
    f: &dyn Reconstructor<T>,
    model: &ForwardModel,
    y: &Var<T>,
    rng: &mut ChaCha12Rng,
    alpha: f64,
) -> SeiResult<LossOutput<T>> {
    loss_sei_with(f, model, y, rng, alpha, true)
}

/// [`loss_sei`] with the gradient stop exposed for the ablation. Draw order:
/// the equivariance draws first, then the divergence probe.
pub fn loss_sei_with<T: Scalar>(
    f: &dyn Reconstructor<T>,
    model: &ForwardModel,
    y: &Var<T>,
    rng: &mut ChaCha12Rng,
    alpha: f64,
    stop_gradient: bool,
) -> SeiResult<LossOutput<T>> {
    if !(alpha > 0.0) {
        return Err(SeiError::invalid("alpha", format!("{alpha} (want > 0)")));
    }
    let draws = SeqDraws::draw(model, f.factor(), &y.shape(), rng)?;
    let seq = seq_pipeline(f, model, y, &draws, stop_gradient, None)?;
    let sure = loss_sure(f, model, y, rng)?;
    let root = sure.root.add(&seq.root.mul_scalar(T::of_f64(alpha)))?;
    let mut parts = sure.value.parts;
    parts.insert("seq", seq.value.total);
    let total = root.value().item()?.as_f64();
    Ok(LossOutput { root, value: LossValue { total, parts } })
}

/// Re-degrade the measurement and regress back to it:
/// `(1/m) |y - f(A y + noise)|^2`. The measurement must itself be divisible
/// by the subsampling factor.
pub fn loss_css<T: Scalar>(
    f: &dyn Reconstructor<T>,
    model: &ForwardModel,
    y: &Var<T>,
    rng: &mut ChaCha12Rng,
) -> SeiResult<LossOutput<T>> {
    let clean = model.apply_linear(&y.value())?;
    let re_degraded = if model.sigma > 0.0 {
        add_gaussian_noise(&clean, model.sigma, rng)
    } else {
        clean
    };
    let x3 = f.reconstruct(&y.graph().constant(re_degraded))?;
    let root = x3.mse(y)?;
    let total = root.value().item()?.as_f64();
    Ok(LossOutput { root, value: LossValue::new(total, [("data_fidelity", total)]) })
}

/// The randomness of one shift-equivariance evaluation: displacement row,
/// displacement column, then the fresh noise field (skipped when `sigma` is
/// 0).
pub struct EiDraws<T> {
    pub shift: ShiftParams,
    pub noise: Tensor<T>,
}

impl<T: Scalar> EiDraws<T> {
    pub fn draw(
        model: &ForwardModel,
        factor: usize,
        y_shape: &[usize],
        rng: &mut ChaCha12Rng,
    ) -> SeiResult<Self> {
        if y_shape.len() != 3 {
            return Err(SeiError::invalid("measurement shape", format!("{y_shape:?}")));
        }
        let (c, h, w) = (y_shape[0], y_shape[1], y_shape[2]);
        let shift = random_shift_params(rng, factor * h, factor * w);
        let noise = if model.sigma > 0.0 {
            gaussian_field(vec![c, h, w], model.sigma, rng)
        } else {
            Tensor::zeros(vec![c, h, w])
        };
        Ok(EiDraws { shift, noise })
    }
}

/// The shift counterpart of [`seq_pipeline`]: identical structure with a
/// cyclic shift as the group action. Shifts preserve extents, so no crop is
/// ever needed and the breakdown reuses the `seq` slot for the equivariance
/// residual.
pub fn ei_pipeline<T: Scalar>(
    f: &dyn Reconstructor<T>,
    model: &ForwardModel,
    y: &Var<T>,
    draws: &EiDraws<T>,
    stop_gradient: bool,
    target_override: Option<&Tensor<T>>,
) -> SeiResult<SeqOutput<T>> {
    let target_var = match target_override {
        Some(frozen) => y.graph().constant(frozen.clone()),
        None => {
            let x1 = f.reconstruct(y)?;
            let x2 = x1.cyclic_shift(draws.shift.v.0, draws.shift.v.1)?;
            if stop_gradient {
                x2.detach()
            } else {
                x2
            }
        }
    };
    let degraded = model.apply_linear_var(&target_var)?;
    let reinput = if model.sigma > 0.0 {
        degraded.add(&y.graph().constant(draws.noise.clone()))?
    } else {
        degraded
    };
    let x3 = f.reconstruct(&reinput)?;
    let root = x3.mse(&target_var)?;
    let total = root.value().item()?.as_f64();
    Ok(SeqOutput {
        root,
        value: LossValue::new(total, [("seq", total)]),
        target: (*target_var.value()).clone(),
    })
}

/// The shift-equivariance baseline with gradient stopping, matching the
/// scale loss for a controlled comparison.
pub fn loss_ei_shift<T: Scalar>(
    f: &dyn Reconstructor<T>,
    model: &ForwardModel,
    y: &Var<T>,
    rng: &mut ChaCha12Rng,
) -> SeiResult<LossOutput<T>> {
    let draws = EiDraws::draw(model, f.factor(), &y.shape(), rng)?;
    let out = ei_pipeline(f, model, y, &draws, true, None)?;
    Ok(LossOutput { root: out.root, value: out.value })
}

/// The supervised reference `(1/n) |f(y) - x|^2`.
pub fn loss_supervised<T: Scalar>(
    f: &dyn Reconstructor<T>,
    y: &Var<T>,
    reference: &Tensor<T>,
) -> SeiResult<LossOutput<T>> {
    let y_shape = y.shape();
    let want: Vec<usize> =
        vec![y_shape[0], f.factor() * y_shape[1], f.factor() * y_shape[2]];
    if reference.shape() != want.as_slice() {
        return Err(SeiError::invalid(
            "reference shape",
            format!("{:?} (want {:?})", reference.shape(), want),
        ));
    }
    let x1 = f.reconstruct(y)?;
    let root = x1.mse(&y.graph().constant(reference.clone()))?;
    let total = root.value().item()?.as_f64();
    Ok(LossOutput { root, value: LossValue::new(total, [("data_fidelity", total)]) })
}
