//! First-order optimizers over flat parameter lists.
//!
//! Both optimizers walk parameters in the fixed order established by the
//! network (layer by layer, weight then bias) and treat a missing gradient
//! as zero. Updates happen in the parameter's own precision; Adam keeps its
//! moment buffers there too, so a checkpoint restores the optimizer
//! bit-for-bit.

use ndgrad::{Scalar, Tensor};
use serde::{Deserialize, Serialize};

use crate::{SeiError, SeiResult};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Adam,
    Sgd,
}

/// Adam with the standard bias correction. `beta^t` powers accumulate in
/// f64; `eps` sits outside the square root.
#[derive(Debug, Clone)]
pub struct Adam<T> {
    lr: f64,
    betas: (f64, f64),
    eps: f64,
    step: u64,
    m: Vec<Tensor<T>>,
    v: Vec<Tensor<T>>,
}

impl<T: Scalar> Adam<T> {
    pub const DEFAULT_EPS: f64 = 1e-8;

    pub fn new(lr: f64, betas: (f64, f64), shapes: &[Vec<usize>]) -> SeiResult<Self> {
        if !(lr > 0.0) || !lr.is_finite() {
            return Err(SeiError::invalid("learning rate", format!("{lr}")));
        }
        let ok = |b: f64| b >= 0.0 && b < 1.0;
        if !ok(betas.0) || !ok(betas.1) {
            return Err(SeiError::invalid("betas", format!("{betas:?} (want [0, 1))")));
        }
        Ok(Adam {
            lr,
            betas,
            eps: Self::DEFAULT_EPS,
            step: 0,
            m: shapes.iter().map(|s| Tensor::zeros(s.clone())).collect(),
            v: shapes.iter().map(|s| Tensor::zeros(s.clone())).collect(),
        })
    }

    /// Rebuild from checkpointed state. `step` is the number of updates
    /// already applied.
    pub fn restore(
        lr: f64,
        betas: (f64, f64),
        step: u64,
        m: Vec<Tensor<T>>,
        v: Vec<Tensor<T>>,
    ) -> SeiResult<Self> {
        let mut adam = Adam::new(lr, betas, &[])?;
        if m.len() != v.len() {
            return Err(SeiError::invalid(
                "moment buffers",
                format!("{} first moments, {} second", m.len(), v.len()),
            ));
        }
        adam.step = step;
        adam.m = m;
        adam.v = v;
        Ok(adam)
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn moments(&self) -> (&[Tensor<T>], &[Tensor<T>]) {
        (&self.m, &self.v)
    }

    pub fn apply(
        &mut self,
        params: &mut [&mut Tensor<T>],
        grads: &[Option<Tensor<T>>],
    ) -> SeiResult<()> {
        if params.len() != self.m.len() || grads.len() != params.len() {
            return Err(SeiError::invalid(
                "optimizer slots",
                format!(
                    "{} params, {} grads, {} moment buffers",
                    params.len(),
                    grads.len(),
                    self.m.len()
                ),
            ));
        }
        self.step += 1;
        let (b1, b2) = self.betas;
        let bc1 = 1.0 - b1.powi(self.step as i32);
        let bc2 = 1.0 - b2.powi(self.step as i32);
        let (b1t, b2t) = (T::of_f64(b1), T::of_f64(b2));
        let (cb1, cb2) = (T::of_f64(1.0 - b1), T::of_f64(1.0 - b2));
        let lr = T::of_f64(self.lr);
        let (ibc1, ibc2) = (T::of_f64(1.0 / bc1), T::of_f64(1.0 / bc2));
        let eps = T::of_f64(self.eps);
        for i in 0..params.len() {
            let Some(grad) = &grads[i] else { continue };
            if grad.shape() != params[i].shape() {
                return Err(SeiError::invalid(
                    "gradient shape",
                    format!("{:?} (param {:?})", grad.shape(), params[i].shape()),
                ));
            }
            let m = self.m[i].data_mut();
            let v = self.v[i].data_mut();
            let p = params[i].data_mut();
            let g = grad.data();
            for j in 0..p.len() {
                m[j] = b1t * m[j] + cb1 * g[j];
                v[j] = b2t * v[j] + cb2 * g[j] * g[j];
                let mhat = m[j] * ibc1;
                let vhat = v[j] * ibc2;
                p[j] = p[j] - lr * mhat / (vhat.sqrt() + eps);
            }
        }
        Ok(())
    }
}

/// Plain gradient descent.
#[derive(Debug, Clone)]
pub struct Sgd {
    lr: f64,
}

impl Sgd {
    pub fn new(lr: f64) -> SeiResult<Self> {
        if !(lr > 0.0) || !lr.is_finite() {
            return Err(SeiError::invalid("learning rate", format!("{lr}")));
        }
        Ok(Sgd { lr })
    }

    pub fn apply<T: Scalar>(
        &self,
        params: &mut [&mut Tensor<T>],
        grads: &[Option<Tensor<T>>],
    ) -> SeiResult<()> {
        if grads.len() != params.len() {
            return Err(SeiError::invalid(
                "optimizer slots",
                format!("{} params, {} grads", params.len(), grads.len()),
            ));
        }
        let lr = T::of_f64(self.lr);
        for i in 0..params.len() {
            let Some(grad) = &grads[i] else { continue };
            if grad.shape() != params[i].shape() {
                return Err(SeiError::invalid(
                    "gradient shape",
                    format!("{:?} (param {:?})", grad.shape(), params[i].shape()),
                ));
            }
            let p = params[i].data_mut();
            let g = grad.data();
            for j in 0..p.len() {
                p[j] = p[j] - lr * g[j];
            }
        }
        Ok(())
    }
}
