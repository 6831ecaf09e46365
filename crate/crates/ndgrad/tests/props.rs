//! Structural invariants under randomized inputs.

use ndgrad::ops::{
    conv2d_periodic_t, cyclic_shift_t, flip_kernel, subsample_t, upsample_zero_t,
};
use ndgrad::ops::dot_slice;
use ndgrad::{Graph, Tensor};
use proptest::prelude::*;

fn tensor3(c: usize, h: usize, w: usize) -> impl Strategy<Value = Tensor<f64>> {
    prop::collection::vec(-10.0f64..10.0, c * h * w)
        .prop_map(move |data| Tensor::new(vec![c, h, w], data).unwrap())
}

fn kernel(kh: usize, kw: usize) -> impl Strategy<Value = Tensor<f64>> {
    prop::collection::vec(-2.0f64..2.0, kh * kw)
        .prop_map(move |data| Tensor::new(vec![kh, kw], data).unwrap())
}

fn close(a: &Tensor<f64>, b: &Tensor<f64>, tol: f64) -> bool {
    let scale = a.max_abs().max(b.max_abs()).max(1.0);
    a.data()
        .iter()
        .zip(b.data())
        .all(|(x, y)| (x - y).abs() <= tol * scale)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn convolution_is_linear(
        x in tensor3(1, 6, 6),
        y in tensor3(1, 6, 6),
        k in kernel(3, 3),
        alpha in -3.0f64..3.0,
    ) {
        let mixed = x.zip_map(&y, "mix", |a, b| alpha * a + b).unwrap();
        let lhs = conv2d_periodic_t(&mixed, &k).unwrap();
        let cx = conv2d_periodic_t(&x, &k).unwrap();
        let cy = conv2d_periodic_t(&y, &k).unwrap();
        let rhs = cx.zip_map(&cy, "mix", |a, b| alpha * a + b).unwrap();
        prop_assert!(close(&lhs, &rhs, 1e-12));
    }

    #[test]
    fn convolution_commutes_with_cyclic_shift(
        x in tensor3(1, 8, 7),
        k in kernel(3, 5),
        dy in -8isize..8,
        dx in -8isize..8,
    ) {
        let a = conv2d_periodic_t(&cyclic_shift_t(&x, dy, dx).unwrap(), &k).unwrap();
        let b = cyclic_shift_t(&conv2d_periodic_t(&x, &k).unwrap(), dy, dx).unwrap();
        prop_assert!(close(&a, &b, 1e-12));
    }

    #[test]
    fn conv_adjoint_identity(
        x in tensor3(1, 6, 8),
        y in tensor3(1, 6, 8),
        k in kernel(5, 3),
    ) {
        let lhs = dot_slice(conv2d_periodic_t(&x, &k).unwrap().data(), y.data());
        let rhs = dot_slice(x.data(), conv2d_periodic_t(&y, &flip_kernel(&k)).unwrap().data());
        let scale = lhs.abs().max(rhs.abs()).max(1.0);
        prop_assert!((lhs - rhs).abs() < 1e-11 * scale);
    }

    #[test]
    fn subsample_of_upsample_is_identity(
        x in tensor3(2, 3, 4),
        r in 1usize..4,
        py in 0usize..4,
        px in 0usize..4,
    ) {
        let phase = (py % r, px % r);
        let u = upsample_zero_t(&x, r, phase).unwrap();
        let s = subsample_t(&u, r, phase).unwrap();
        prop_assert_eq!(s.data(), x.data());
    }

    #[test]
    fn subsample_adjoint_identity(
        x in tensor3(1, 6, 6),
        y in tensor3(1, 3, 3),
        py in 0usize..2,
        px in 0usize..2,
    ) {
        let s = subsample_t(&x, 2, (py, px)).unwrap();
        let u = upsample_zero_t(&y, 2, (py, px)).unwrap();
        let lhs = dot_slice(s.data(), y.data());
        let rhs = dot_slice(x.data(), u.data());
        let scale = lhs.abs().max(rhs.abs()).max(1.0);
        prop_assert!((lhs - rhs).abs() < 1e-12 * scale);
    }

    #[test]
    fn shifts_compose_additively(
        x in tensor3(1, 5, 6),
        a in -6isize..6,
        b in -6isize..6,
        c in -6isize..6,
        d in -6isize..6,
    ) {
        let once = cyclic_shift_t(&cyclic_shift_t(&x, a, b).unwrap(), c, d).unwrap();
        let twice = cyclic_shift_t(&x, a + c, b + d).unwrap();
        prop_assert_eq!(once.data(), twice.data());
    }

    #[test]
    fn mse_of_identical_inputs_is_zero(x in tensor3(1, 4, 4)) {
        let g = Graph::new();
        let a = g.var(x.clone(), true);
        let b = g.constant(x);
        let l = a.mse(&b).unwrap();
        prop_assert_eq!(l.value().data()[0], 0.0);
        let grads = g.backward(&l).unwrap();
        prop_assert!(grads.get(&a).unwrap().data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn detached_branches_never_produce_gradients(x in tensor3(1, 3, 3)) {
        let g = Graph::new();
        let a = g.var(x, true);
        let frozen = a.detach();
        let l = frozen.mul(&frozen).unwrap().mse(&frozen).unwrap();
        let grads = g.backward(&l).unwrap();
        prop_assert!(grads.get(&a).is_none());
    }
}
