//! The training loop.
//!
//! One step builds one graph: every sample in the batch gets its own loss
//! subtree (with its own derived random stream), the roots are averaged, and
//! a single backward pass feeds the optimizer. All randomness derives from
//! the master seed and the schedule position, so a run is reproducible from
//! `(seed, epochs_completed)` alone and two identical calls produce
//! bit-identical checkpoints.
//!
//! Epoch structure: a seeded shuffle of the sample indices, then batches in
//! order (the last one may be short). Each sample contributes a randomly
//! placed crop with periodic wrap, drawn from the epoch stream; images
//! smaller than the crop extent are used whole.

use ndgrad::{Graph, Scalar, Tensor, Var};
use rand::Rng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::checkpoint::{Checkpoint, TrainProgress};
use crate::losses::{
    loss_css, loss_ei_shift, loss_mc, loss_sei_with, loss_seq, loss_supervised, loss_sure,
    LossOutput, LossValue, Reconstructor,
};
use crate::metrics::psnr;
use crate::network::{Network, NetworkConfig};
use crate::operators::ForwardModel;
use crate::optim::{Adam, OptimizerKind, Sgd};
use crate::rng::{stream, Purpose};
use crate::{SeiError, SeiResult};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    Mc,
    Sure,
    Seq,
    Sei,
    Css,
    EiShift,
    Supervised,
}

impl LossKind {
    pub fn needs_reference(self) -> bool {
        matches!(self, LossKind::Supervised)
    }

    pub fn name(self) -> &'static str {
        match self {
            LossKind::Mc => "mc",
            LossKind::Sure => "sure",
            LossKind::Seq => "seq",
            LossKind::Sei => "sei",
            LossKind::Css => "css",
            LossKind::EiShift => "ei_shift",
            LossKind::Supervised => "supervised",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub loss: LossKind,
    pub epochs: u64,
    pub batch_size: usize,
    /// Measurement-domain crop extent per training sample.
    pub crop: usize,
    pub lr: f64,
    pub optimizer: OptimizerKind,
    pub betas: (f64, f64),
    /// Weight of the equivariance term inside the combined objective.
    pub alpha: f64,
    /// The ablation switch: `false` lets gradients flow through the
    /// equivariance target.
    pub gradient_stopping: bool,
    pub seed: u64,
}

impl TrainConfig {
    pub fn new(loss: LossKind, epochs: u64, seed: u64) -> Self {
        TrainConfig {
            loss,
            epochs,
            batch_size: 8,
            crop: 48,
            lr: 5e-4,
            optimizer: OptimizerKind::Adam,
            betas: (0.9, 0.999),
            alpha: 1.0,
            gradient_stopping: true,
            seed,
        }
    }

    pub fn validate(&self) -> SeiResult<()> {
        if self.batch_size == 0 {
            return Err(SeiError::invalid("batch size", "0"));
        }
        if self.crop == 0 {
            return Err(SeiError::invalid("crop extent", "0"));
        }
        if !(self.lr > 0.0) || !self.lr.is_finite() {
            return Err(SeiError::invalid("learning rate", format!("{}", self.lr)));
        }
        if self.loss == LossKind::Sei && !(self.alpha > 0.0) {
            return Err(SeiError::invalid("alpha", format!("{}", self.alpha)));
        }
        Ok(())
    }
}

/// Training data, already in tensor form. Self-supervised losses see
/// measurements only; the supervised loss needs `(measurement, reference)`
/// pairs.
pub enum TrainingSet<T> {
    SelfSupervised { measurements: Vec<Tensor<T>> },
    Supervised { pairs: Vec<(Tensor<T>, Tensor<T>)> },
}

impl<T: Scalar> TrainingSet<T> {
    fn len(&self) -> usize {
        match self {
            TrainingSet::SelfSupervised { measurements } => measurements.len(),
            TrainingSet::Supervised { pairs } => pairs.len(),
        }
    }

    fn validate(&self, loss: LossKind, factor: usize) -> SeiResult<()> {
        if self.len() == 0 {
            return Err(SeiError::invalid("training set", "empty"));
        }
        match self {
            TrainingSet::SelfSupervised { measurements } => {
                if loss.needs_reference() {
                    return Err(SeiError::invalid(
                        "training set",
                        format!("loss {} needs references", loss.name()),
                    ));
                }
                for m in measurements {
                    if m.rank() != 3 {
                        return Err(SeiError::invalid(
                            "measurement rank",
                            format!("{:?}", m.shape()),
                        ));
                    }
                }
            }
            TrainingSet::Supervised { pairs } => {
                if !loss.needs_reference() {
                    return Err(SeiError::invalid(
                        "training set",
                        format!("loss {} is self-supervised, got paired data", loss.name()),
                    ));
                }
                for (y, x) in pairs {
                    let (c, h, w) = y.dims3("training pair")?;
                    if x.shape() != [c, factor * h, factor * w] {
                        return Err(SeiError::invalid(
                            "training pair",
                            format!(
                                "reference {:?} does not match measurement {:?} at factor {factor}",
                                x.shape(),
                                y.shape()
                            ),
                        ));
                    }
                }
            }
        }
        Ok(())
    }
}

/// One logged training step. `sure` and `seq` appear when the loss tracks
/// them; `psnr_val` appears on each epoch's last step when validation pairs
/// were supplied.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainLogRow {
    pub epoch: u64,
    pub step: u64,
    pub total: f64,
    pub sure: Option<f64>,
    pub seq: Option<f64>,
    pub psnr_val: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainLog {
    pub rows: Vec<TrainLogRow>,
}

impl TrainLog {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,step,loss_total,loss_sure,loss_seq,psnr_val\n");
        let opt = |v: Option<f64>| v.map(|x| format!("{x}")).unwrap_or_default();
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.epoch,
                r.step,
                r.total,
                opt(r.sure),
                opt(r.seq),
                opt(r.psnr_val)
            ));
        }
        out
    }
}

/// Crop with periodic wrap, origin `(oy, ox)`, extent `(ch, cw)`.
fn wrapped_crop<T: Scalar>(t: &Tensor<T>, oy: usize, ox: usize, ch: usize, cw: usize) -> Tensor<T> {
    let (c, h, w) = (t.shape()[0], t.shape()[1], t.shape()[2]);
    Tensor::from_fn(vec![c, ch, cw], |i| {
        let x = i % cw;
        let y = (i / cw) % ch;
        let ci = i / (cw * ch);
        t.data()[ci * h * w + ((oy + y) % h) * w + (ox + x) % w]
    })
}

enum Engine<T> {
    Adam(Adam<T>),
    Sgd(Sgd),
}

impl<T: Scalar> Engine<T> {
    fn apply(
        &mut self,
        params: &mut [&mut Tensor<T>],
        grads: &[Option<Tensor<T>>],
    ) -> SeiResult<()> {
        match self {
            Engine::Adam(a) => a.apply(params, grads),
            Engine::Sgd(s) => s.apply(params, grads),
        }
    }
}

fn build_loss<T: Scalar>(
    cfg: &TrainConfig,
    f: &dyn Reconstructor<T>,
    model: &ForwardModel,
    y: &Var<T>,
    reference: Option<&Tensor<T>>,
    rng: &mut ChaCha12Rng,
) -> SeiResult<LossOutput<T>> {
    match cfg.loss {
        LossKind::Mc => loss_mc(f, model, y),
        LossKind::Sure => loss_sure(f, model, y, rng),
        LossKind::Seq => loss_seq(f, model, y, rng),
        LossKind::Sei => loss_sei_with(f, model, y, rng, cfg.alpha, cfg.gradient_stopping),
        LossKind::Css => loss_css(f, model, y, rng),
        LossKind::EiShift => loss_ei_shift(f, model, y, rng),
        LossKind::Supervised => {
            let x = reference.expect("validated: supervised data carries references");
            loss_supervised(f, y, x)
        }
    }
}

/// Mean validation PSNR of the current parameters, on gamut-clipped
/// reconstructions against the references, peak 1.
fn validation_psnr<T: Scalar>(
    network: &Network<T>,
    val: &[(Tensor<T>, Tensor<T>)],
) -> SeiResult<f64> {
    let mut acc = 0.0;
    for (y, x_ref) in val {
        let g = Graph::new();
        let out = network.bind_frozen(&g).reconstruct(&g.constant(y.clone()))?;
        let recon = out
            .value()
            .map(|v| v.max(T::zero()).min(T::one()))
            .cast::<f64>();
        acc += psnr(&recon, &x_ref.cast::<f64>(), 1.0)?;
    }
    Ok(acc / val.len() as f64)
}

/// Continue training `network`. `start_epoch` offsets the stream derivation
/// (a resumed run consumes exactly the streams the uninterrupted one would
/// have); `adam_state` carries restored moment buffers.
#[allow(clippy::too_many_arguments)]
pub fn train_from<T: Scalar>(
    mut network: Network<T>,
    start_epoch: u64,
    adam_state: Option<(u64, Vec<Tensor<T>>, Vec<Tensor<T>>)>,
    set: &TrainingSet<T>,
    model: &ForwardModel,
    cfg: &TrainConfig,
    val: Option<&[(Tensor<T>, Tensor<T>)]>,
) -> SeiResult<(Checkpoint<T>, TrainLog)> {
    cfg.validate()?;
    model.validate_mode()?;
    let factor = network.config().factor;
    if factor != model.factor {
        return Err(SeiError::invalid(
            "factor",
            format!("network upsamples by {factor}, model subsamples by {}", model.factor),
        ));
    }
    set.validate(cfg.loss, factor)?;

    let shapes: Vec<Vec<usize>> =
        network.parameters().iter().map(|p| p.shape().to_vec()).collect();
    let mut engine = match cfg.optimizer {
        OptimizerKind::Adam => Engine::Adam(match adam_state {
            Some((steps, m, v)) => Adam::restore(cfg.lr, cfg.betas, steps, m, v)?,
            None => Adam::new(cfg.lr, cfg.betas, &shapes)?,
        }),
        OptimizerKind::Sgd => Engine::Sgd(Sgd::new(cfg.lr)?),
    };

    let n = set.len();
    let mut log = TrainLog::default();
    for e in 0..cfg.epochs {
        let epoch = start_epoch + e;
        let mut epoch_rng = stream(cfg.seed, Purpose::Batch, &[epoch]);
        let mut order: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            let j = epoch_rng.gen_range(0..=i);
            order.swap(i, j);
        }

        let steps = n.div_ceil(cfg.batch_size);
        for step in 0..steps {
            let slots = &order[step * cfg.batch_size..n.min((step + 1) * cfg.batch_size)];
            let g = Graph::new();
            let bound = network.bind(&g);
            let mut root: Option<Var<T>> = None;
            let mut part_sums: (f64, Option<f64>, Option<f64>) = (0.0, None, None);
            for (slot, &sample) in slots.iter().enumerate() {
                let (y_full, x_full) = match set {
                    TrainingSet::SelfSupervised { measurements } => (&measurements[sample], None),
                    TrainingSet::Supervised { pairs } => {
                        (&pairs[sample].0, Some(&pairs[sample].1))
                    }
                };
                let (h, w) = (y_full.shape()[1], y_full.shape()[2]);
                let (ch, cw) = (cfg.crop.min(h), cfg.crop.min(w));
                let oy = epoch_rng.gen_range(0..h);
                let ox = epoch_rng.gen_range(0..w);
                let y = g.constant(wrapped_crop(y_full, oy, ox, ch, cw));
                let x_crop = x_full.map(|x| {
                    wrapped_crop(x, factor * oy, factor * ox, factor * ch, factor * cw)
                });
                let mut loss_rng =
                    stream(cfg.seed, Purpose::Loss, &[epoch, step as u64, slot as u64]);
                let out =
                    build_loss(cfg, &bound, model, &y, x_crop.as_ref(), &mut loss_rng)?;
                accumulate_parts(&mut part_sums, &out.value);
                root = Some(match root {
                    None => out.root,
                    Some(acc) => acc.add(&out.root)?,
                });
            }
            let count = slots.len() as f64;
            let root = root
                .expect("batches are non-empty")
                .mul_scalar(T::of_f64(1.0 / count));
            let total = root.value().item()?.as_f64();
            if !total.is_finite() {
                return Err(SeiError::NonFinite { epoch, step: step as u64, total });
            }

            let mut grads = g.backward(&root)?;
            let grad_list: Vec<Option<Tensor<T>>> =
                bound.parameters().iter().map(|p| grads.take(p)).collect();
            let mut params = network.parameters_mut();
            engine.apply(&mut params, &grad_list)?;

            let psnr_val = if step + 1 == steps {
                match val {
                    Some(pairs) if !pairs.is_empty() => Some(validation_psnr(&network, pairs)?),
                    _ => None,
                }
            } else {
                None
            };
            log.rows.push(TrainLogRow {
                epoch,
                step: step as u64,
                total,
                sure: part_sums.1.map(|s| s / count),
                seq: part_sums.2.map(|s| s / count),
                psnr_val,
            });
        }
    }

    let (adam_steps, moments) = match &engine {
        Engine::Adam(a) => {
            let (m, v) = a.moments();
            (a.step_count(), Some((m.to_vec(), v.to_vec())))
        }
        Engine::Sgd(_) => (0, None),
    };
    let checkpoint = Checkpoint {
        network,
        progress: TrainProgress {
            seed: cfg.seed,
            epochs_completed: start_epoch + cfg.epochs,
            optimizer: cfg.optimizer,
            lr: cfg.lr,
            betas: cfg.betas,
            adam_steps,
        },
        moments,
    };
    Ok((checkpoint, log))
}

fn accumulate_parts(sums: &mut (f64, Option<f64>, Option<f64>), value: &LossValue) {
    sums.0 += value.total;
    if let Some(s) = value.part("sure") {
        *sums.1.get_or_insert(0.0) += s;
    }
    if let Some(s) = value.part("seq") {
        *sums.2.get_or_insert(0.0) += s;
    }
}

/// Train a fresh network (parameters seeded from the same master seed).
pub fn train<T: Scalar>(
    set: &TrainingSet<T>,
    model: &ForwardModel,
    net_cfg: &NetworkConfig,
    cfg: &TrainConfig,
    val: Option<&[(Tensor<T>, Tensor<T>)]>,
) -> SeiResult<(Checkpoint<T>, TrainLog)> {
    let network = Network::init(net_cfg, cfg.seed)?;
    train_from(network, 0, None, set, model, cfg, val)
}

/// Continue from a checkpoint on (possibly different) data and objective.
/// Epoch numbering restarts at zero under this run's seed; Adam moments are
/// carried over only when this run also uses Adam.
pub fn finetune<T: Scalar>(
    start: Checkpoint<T>,
    set: &TrainingSet<T>,
    model: &ForwardModel,
    cfg: &TrainConfig,
    val: Option<&[(Tensor<T>, Tensor<T>)]>,
) -> SeiResult<(Checkpoint<T>, TrainLog)> {
    let adam_state = match (cfg.optimizer, start.moments) {
        (OptimizerKind::Adam, Some((m, v))) => Some((start.progress.adam_steps, m, v)),
        _ => None,
    };
    train_from(start.network, 0, adam_state, set, model, cfg, val)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::synth_texture;
    use crate::operators::Psf;

    fn tiny_net(factor: usize) -> NetworkConfig {
        NetworkConfig {
            channels: 4,
            depth: 2,
            kernel_size: 3,
            residual: true,
            factor,
            in_channels: 1,
        }
    }

    fn denoise_model(sigma: f64) -> ForwardModel {
        ForwardModel::new(Psf::delta(), 1, sigma, (0, 0)).unwrap()
    }

    fn noisy_textures(count: usize, n: usize, sigma: f64) -> Vec<Tensor<f64>> {
        (0..count)
            .map(|i| {
                let clean = synth_texture(100 + i as u64, n, 1.5).unwrap();
                let mut rng = stream(200 + i as u64, Purpose::DataNoise, &[]);
                crate::operators::add_gaussian_noise(&clean, sigma, &mut rng)
            })
            .collect()
    }

    #[test]
    fn identical_runs_produce_bit_identical_checkpoints() {
        let set = TrainingSet::SelfSupervised { measurements: noisy_textures(4, 16, 0.1) };
        let model = denoise_model(0.1);
        let mut cfg = TrainConfig::new(LossKind::Sure, 2, 9);
        cfg.batch_size = 2;
        cfg.crop = 12;
        let (ck1, log1) = train(&set, &model, &tiny_net(1), &cfg, None).unwrap();
        let (ck2, log2) = train(&set, &model, &tiny_net(1), &cfg, None).unwrap();
        assert_eq!(ck1.encode().unwrap(), ck2.encode().unwrap());
        assert_eq!(log1, log2);
        assert_eq!(log1.rows.len(), 4);
        assert_eq!(ck1.progress.epochs_completed, 2);
        assert_eq!(ck1.progress.adam_steps, 4);
    }

    #[test]
    fn supervised_training_reduces_the_loss() {
        let pairs: Vec<(Tensor<f64>, Tensor<f64>)> = (0..6)
            .map(|i| {
                let clean = synth_texture(300 + i as u64, 16, 1.5).unwrap();
                let mut rng = stream(400 + i as u64, Purpose::DataNoise, &[]);
                let noisy = crate::operators::add_gaussian_noise(&clean, 0.1, &mut rng);
                (noisy, clean)
            })
            .collect();
        let set = TrainingSet::Supervised { pairs };
        let model = denoise_model(0.1);
        let mut cfg = TrainConfig::new(LossKind::Supervised, 10, 1);
        cfg.batch_size = 3;
        cfg.crop = 16;
        cfg.lr = 5e-3;
        let (_, log) = train(&set, &model, &tiny_net(1), &cfg, None).unwrap();
        let first: f64 = log.rows[..2].iter().map(|r| r.total).sum::<f64>() / 2.0;
        let last: f64 =
            log.rows[log.rows.len() - 2..].iter().map(|r| r.total).sum::<f64>() / 2.0;
        assert!(
            last < 0.6 * first,
            "loss should drop: first {first}, last {last}"
        );
    }

    #[test]
    fn logged_parts_follow_the_objective() {
        let set = TrainingSet::SelfSupervised { measurements: noisy_textures(2, 12, 0.1) };
        let model = denoise_model(0.1);
        let mut cfg = TrainConfig::new(LossKind::Sei, 1, 3);
        cfg.batch_size = 2;
        cfg.crop = 12;
        let (_, log) = train(&set, &model, &tiny_net(1), &cfg, None).unwrap();
        assert_eq!(log.rows.len(), 1);
        let row = &log.rows[0];
        assert!(row.sure.is_some() && row.seq.is_some());
        let recombined = row.sure.unwrap() + cfg.alpha * row.seq.unwrap();
        assert!((row.total - recombined).abs() < 1e-12 * row.total.abs().max(1.0));

        let mut cfg_mc = TrainConfig::new(LossKind::Mc, 1, 3);
        cfg_mc.batch_size = 2;
        cfg_mc.crop = 12;
        let (_, log_mc) = train(&set, &model, &tiny_net(1), &cfg_mc, None).unwrap();
        assert!(log_mc.rows[0].sure.is_none() && log_mc.rows[0].seq.is_none());
    }

    #[test]
    fn validation_psnr_lands_on_each_epochs_final_step() {
        let measurements = noisy_textures(3, 12, 0.1);
        let val: Vec<(Tensor<f64>, Tensor<f64>)> = vec![(
            measurements[0].clone(),
            synth_texture(100, 12, 1.5).unwrap(),
        )];
        let set = TrainingSet::SelfSupervised { measurements };
        let model = denoise_model(0.1);
        let mut cfg = TrainConfig::new(LossKind::Sure, 2, 5);
        cfg.batch_size = 2;
        cfg.crop = 12;
        let (_, log) = train(&set, &model, &tiny_net(1), &cfg, Some(&val)).unwrap();
        assert_eq!(log.rows.len(), 4);
        assert!(log.rows[0].psnr_val.is_none());
        assert!(log.rows[1].psnr_val.is_some());
        assert!(log.rows[2].psnr_val.is_none());
        assert!(log.rows[3].psnr_val.is_some());

        let csv = log.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "epoch,step,loss_total,loss_sure,loss_seq,psnr_val");
        assert_eq!(lines.len(), 5);
        // Self-supervised SURE logs no seq part: the field stays empty.
        assert!(lines[1].contains(",,"));
    }

    #[test]
    fn kind_and_data_mismatches_are_rejected() {
        let set = TrainingSet::SelfSupervised { measurements: noisy_textures(2, 12, 0.1) };
        let model = denoise_model(0.1);
        let cfg = TrainConfig::new(LossKind::Supervised, 1, 0);
        assert!(train(&set, &model, &tiny_net(1), &cfg, None).is_err());

        let pairs = vec![(
            Tensor::<f64>::zeros(vec![1, 8, 8]),
            Tensor::<f64>::zeros(vec![1, 8, 8]),
        )];
        let set = TrainingSet::Supervised { pairs };
        let cfg = TrainConfig::new(LossKind::Sure, 1, 0);
        assert!(train(&set, &model, &tiny_net(1), &cfg, None).is_err());

        // Factor mismatch between network and degradation.
        let set = TrainingSet::SelfSupervised { measurements: noisy_textures(2, 12, 0.1) };
        let cfg = TrainConfig::new(LossKind::Sure, 1, 0);
        assert!(train(&set, &model, &tiny_net(2), &cfg, None).is_err());

        // Supervised pair with the wrong reference extents for factor 2.
        let model2 = ForwardModel::new(Psf::delta(), 2, 0.0, (0, 0)).unwrap();
        let pairs = vec![(
            Tensor::<f64>::zeros(vec![1, 8, 8]),
            Tensor::<f64>::zeros(vec![1, 8, 8]),
        )];
        let set = TrainingSet::Supervised { pairs };
        let cfg = TrainConfig::new(LossKind::Supervised, 1, 0);
        assert!(train(&set, &model2, &tiny_net(2), &cfg, None).is_err());
    }

    #[test]
    fn divergent_training_reports_the_failing_step() {
        // A fresh factor-1 network is the identity, so the blur model keeps
        // the initial residual (and gradient) away from zero; the absurd
        // rate then blows the parameters up within a few steps.
        let set = TrainingSet::SelfSupervised { measurements: noisy_textures(2, 12, 0.1) };
        let model = ForwardModel::new(Psf::gaussian(1.0, 5).unwrap(), 1, 0.0, (0, 0)).unwrap();
        let mut cfg = TrainConfig::new(LossKind::Mc, 50, 2);
        cfg.batch_size = 2;
        cfg.crop = 12;
        cfg.optimizer = OptimizerKind::Sgd;
        cfg.lr = 1e12;
        let err = train(&set, &model, &tiny_net(1), &cfg, None).unwrap_err();
        match err {
            SeiError::NonFinite { .. } => {}
            other => panic!("expected a non-finite abort, got {other}"),
        }
    }

    #[test]
    fn zero_epoch_finetune_is_an_identity() {
        let set = TrainingSet::SelfSupervised { measurements: noisy_textures(2, 12, 0.1) };
        let model = denoise_model(0.1);
        let mut cfg = TrainConfig::new(LossKind::Sure, 1, 4);
        cfg.batch_size = 2;
        cfg.crop = 12;
        let (ck, _) = train(&set, &model, &tiny_net(1), &cfg, None).unwrap();
        let before = ck.network.clone();

        let mut ft = TrainConfig::new(LossKind::Sei, 0, 5);
        ft.optimizer = OptimizerKind::Sgd;
        ft.lr = 0.01;
        let (ck2, log) = finetune(ck, &set, &model, &ft, None).unwrap();
        assert!(log.rows.is_empty());
        for (a, b) in ck2.network.parameters().iter().zip(before.parameters().iter()) {
            assert_eq!(a.data(), b.data());
        }
        assert!(ck2.moments.is_none());
    }

    #[test]
    fn finetune_under_adam_resumes_the_moment_buffers() {
        let set = TrainingSet::SelfSupervised { measurements: noisy_textures(2, 12, 0.1) };
        let model = denoise_model(0.1);
        let mut cfg = TrainConfig::new(LossKind::Sure, 1, 6);
        cfg.batch_size = 2;
        cfg.crop = 12;
        let (ck, _) = train(&set, &model, &tiny_net(1), &cfg, None).unwrap();
        assert!(ck.moments.is_some());
        let steps_before = ck.progress.adam_steps;

        let mut ft = cfg.clone();
        ft.seed = 7;
        let (ck2, _) = finetune(ck, &set, &model, &ft, None).unwrap();
        assert_eq!(ck2.progress.adam_steps, steps_before + 1);
    }
}
