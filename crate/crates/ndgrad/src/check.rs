//! Central-difference gradient validation.

use crate::Tensor;

/// Compares `analytic` against central finite differences of `f`.
///
/// `f` is called with perturbed copies of `leaves`; for every coordinate the
/// forward and backward evaluations at `+/- eps` give
/// `(f(x + eps e) - f(x - eps e)) / (2 eps)`, and the reported figure is
///
/// `max |fd - analytic| / (|analytic| + floor)`
///
/// over all coordinates of all leaves. The additive `floor` keeps
/// coordinates with a tiny true gradient from turning roundoff in the
/// difference quotient into a huge ratio. Checks run in `f64`; validating an
/// `f32` computation means rebuilding it in `f64` first.
pub fn finite_diff_check<F>(
    mut f: F,
    leaves: &[Tensor<f64>],
    analytic: &[Tensor<f64>],
    eps: f64,
    floor: f64,
) -> f64
where
    F: FnMut(&[Tensor<f64>]) -> f64,
{
    assert_eq!(leaves.len(), analytic.len(), "one gradient per leaf");
    assert!(eps > 0.0 && floor >= 0.0);
    let mut work: Vec<Tensor<f64>> = leaves.to_vec();
    let mut worst = 0.0f64;
    for (li, grad) in analytic.iter().enumerate() {
        assert_eq!(
            grad.shape(),
            leaves[li].shape(),
            "gradient shape must match leaf shape"
        );
        for ci in 0..leaves[li].len() {
            let v0 = leaves[li].data()[ci];
            work[li].data_mut()[ci] = v0 + eps;
            let up = f(&work);
            work[li].data_mut()[ci] = v0 - eps;
            let down = f(&work);
            work[li].data_mut()[ci] = v0;
            let fd = (up - down) / (2.0 * eps);
            let a = grad.data()[ci];
            let rel = (fd - a).abs() / (a.abs() + floor);
            if rel > worst {
                worst = rel;
            }
        }
    }
    worst
}
