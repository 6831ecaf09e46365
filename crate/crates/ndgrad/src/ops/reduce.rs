use crate::ops::{dot_slice, sq_diff_sum, sum_slice};
use crate::{NdResult, Scalar, Tensor, Var};

impl<T: Scalar> Var<T> {
    /// Sum of all elements, as a `[1]` tensor.
    pub fn sum(&self) -> Var<T> {
        let shape = self.shape();
        let out = Tensor::scalar(sum_slice(self.value().data()));
        self.graph().push_op(
            out,
            vec![self.id()],
            Box::new(move |g, mask| {
                vec![mask[0].then(|| Tensor::full(shape.clone(), g.data()[0]))]
            }),
        )
    }

    /// Mean of all elements, as a `[1]` tensor.
    pub fn mean(&self) -> Var<T> {
        let shape = self.shape();
        let n = T::of_f64(shape.iter().product::<usize>() as f64);
        let out = Tensor::scalar(sum_slice(self.value().data()) / n);
        self.graph().push_op(
            out,
            vec![self.id()],
            Box::new(move |g, mask| {
                vec![mask[0].then(|| Tensor::full(shape.clone(), g.data()[0] / n))]
            }),
        )
    }

    /// Inner product of two same-shape tensors, as a `[1]` tensor.
    pub fn dot(&self, other: &Var<T>) -> NdResult<Var<T>> {
        self.same_graph(other, "dot")?;
        let a = self.value();
        let b = other.value();
        a.zip_map(&b, "dot", |_, _| T::zero())?; // shape check only
        let out = Tensor::scalar(dot_slice(a.data(), b.data()));
        Ok(self.graph().push_op(
            out,
            vec![self.id(), other.id()],
            Box::new(move |g, mask| {
                let g0 = g.data()[0];
                vec![
                    mask[0].then(|| b.map(|v| v * g0)),
                    mask[1].then(|| a.map(|v| v * g0)),
                ]
            }),
        ))
    }

    /// Mean squared difference `(1/n) * sum (a - b)^2`, as a `[1]` tensor.
    pub fn mse(&self, other: &Var<T>) -> NdResult<Var<T>> {
        self.same_graph(other, "mse")?;
        let a = self.value();
        let b = other.value();
        a.zip_map(&b, "mse", |_, _| T::zero())?; // shape check only
        let n = T::of_f64(a.len() as f64);
        let out = Tensor::scalar(sq_diff_sum(a.data(), b.data()) / n);
        Ok(self.graph().push_op(
            out,
            vec![self.id(), other.id()],
            Box::new(move |g, mask| {
                let scale = g.data()[0] * T::of_f64(2.0) / n;
                let ga = (mask[0] || mask[1]).then(|| {
                    a.zip_map(&b, "mse_vjp", |x, y| scale * (x - y))
                        .expect("same shape")
                });
                match (mask[0], mask[1]) {
                    (true, true) => {
                        let ga = ga.expect("computed");
                        let gb = ga.map(|v| -v);
                        vec![Some(ga), Some(gb)]
                    }
                    (true, false) => vec![ga, None],
                    (false, true) => vec![None, ga.map(|t| t.map(|v| -v))],
                    (false, false) => vec![None, None],
                }
            }),
        ))
    }
}

#[cfg(test)]
mod tests {
    use crate::{Graph, Tensor};

    #[test]
    fn mse_value_and_gradients() {
        let g = Graph::<f64>::new();
        let a = g.var(Tensor::new(vec![3], vec![1.0, 2.0, 4.0]).unwrap(), true);
        let b = g.var(Tensor::new(vec![3], vec![0.0, 0.0, 1.0]).unwrap(), true);
        let l = a.mse(&b).unwrap();
        // (1 + 4 + 9) / 3
        assert!((l.value().data()[0] - 14.0 / 3.0).abs() < 1e-15);
        let grads = g.backward(&l).unwrap();
        let ga = grads.get(&a).unwrap().data().to_vec();
        let gb = grads.get(&b).unwrap().data().to_vec();
        for (i, want) in [2.0 / 3.0, 4.0 / 3.0, 2.0].iter().enumerate() {
            assert!((ga[i] - want).abs() < 1e-15);
            assert!((gb[i] + want).abs() < 1e-15);
        }
    }

    #[test]
    fn mse_matches_composed_ops() {
        let g = Graph::<f64>::new();
        let data_a = vec![0.3, -0.2, 0.9, 1.4];
        let data_b = vec![0.1, 0.2, -0.9, 1.3];
        let a = g.var(Tensor::new(vec![4], data_a).unwrap(), true);
        let b = g.var(Tensor::new(vec![4], data_b).unwrap(), true);
        let fused = a.mse(&b).unwrap();
        let diff = a.sub(&b).unwrap();
        let composed = diff.mul(&diff).unwrap().mean();
        assert!(
            (fused.value().data()[0] - composed.value().data()[0]).abs() < 1e-15,
            "fused and composed mse disagree"
        );
        let gf = g.backward(&fused).unwrap().get(&a).unwrap().clone();
        let gc = g.backward(&composed).unwrap().get(&a).unwrap().clone();
        for (x, y) in gf.data().iter().zip(gc.data()) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn sum_mean_dot_values_and_gradients() {
        let g = Graph::<f64>::new();
        let a = g.var(Tensor::new(vec![2], vec![2.0, 6.0]).unwrap(), true);
        let b = g.var(Tensor::new(vec![2], vec![0.5, -1.0]).unwrap(), true);
        assert_eq!(a.sum().value().data(), &[8.0]);
        assert_eq!(a.mean().value().data(), &[4.0]);
        let d = a.dot(&b).unwrap();
        assert_eq!(d.value().data(), &[-5.0]);
        let grads = g.backward(&d).unwrap();
        assert_eq!(grads.get(&a).unwrap().data(), &[0.5, -1.0]);
        assert_eq!(grads.get(&b).unwrap().data(), &[2.0, 6.0]);
        let grads = g.backward(&a.mean()).unwrap();
        assert_eq!(grads.get(&a).unwrap().data(), &[0.5, 0.5]);
    }

    #[test]
    fn reductions_reject_shape_mismatch() {
        let g = Graph::<f64>::new();
        let a = g.var(Tensor::zeros(vec![3]), true);
        let b = g.var(Tensor::zeros(vec![4]), true);
        assert!(a.mse(&b).is_err());
        assert!(a.dot(&b).is_err());
    }
}
