use crate::ops::dot_slice;
use crate::{NdError, NdResult, Scalar, Tensor, Var};

impl<T: Scalar> Var<T> {
    pub fn add(&self, other: &Var<T>) -> NdResult<Var<T>> {
        self.same_graph(other, "add")?;
        let out = self.value().zip_map(&other.value(), "add", |a, b| a + b)?;
        Ok(self.graph().push_op(
            out,
            vec![self.id(), other.id()],
            Box::new(move |g, mask| {
                vec![
                    mask[0].then(|| g.clone()),
                    mask[1].then(|| g.clone()),
                ]
            }),
        ))
    }

    pub fn sub(&self, other: &Var<T>) -> NdResult<Var<T>> {
        self.same_graph(other, "sub")?;
        let out = self.value().zip_map(&other.value(), "sub", |a, b| a - b)?;
        Ok(self.graph().push_op(
            out,
            vec![self.id(), other.id()],
            Box::new(move |g, mask| {
                vec![
                    mask[0].then(|| g.clone()),
                    mask[1].then(|| g.map(|v| -v)),
                ]
            }),
        ))
    }

    /// Elementwise product.
    pub fn mul(&self, other: &Var<T>) -> NdResult<Var<T>> {
        self.same_graph(other, "mul")?;
        let a = self.value();
        let b = other.value();
        let out = a.zip_map(&b, "mul", |x, y| x * y)?;
        Ok(self.graph().push_op(
            out,
            vec![self.id(), other.id()],
            Box::new(move |g, mask| {
                vec![
                    mask[0].then(|| g.zip_map(&b, "mul_vjp", |gv, bv| gv * bv).expect("same shape")),
                    mask[1].then(|| g.zip_map(&a, "mul_vjp", |gv, av| gv * av).expect("same shape")),
                ]
            }),
        ))
    }

    pub fn add_scalar(&self, c: T) -> Var<T> {
        let out = self.value().map(|v| v + c);
        self.graph().push_op(
            out,
            vec![self.id()],
            Box::new(move |g, mask| vec![mask[0].then(|| g.clone())]),
        )
    }

    pub fn mul_scalar(&self, c: T) -> Var<T> {
        let out = self.value().map(|v| v * c);
        self.graph().push_op(
            out,
            vec![self.id()],
            Box::new(move |g, mask| vec![mask[0].then(|| g.map(|v| v * c))]),
        )
    }

    /// Rectifier with subgradient 0 at the kink.
    pub fn relu(&self) -> Var<T> {
        let a = self.value();
        let out = a.map(|v| v.max(T::zero()));
        self.graph().push_op(
            out,
            vec![self.id()],
            Box::new(move |g, mask| {
                vec![mask[0].then(|| {
                    g.zip_map(&a, "relu_vjp", |gv, av| {
                        if av > T::zero() {
                            gv
                        } else {
                            T::zero()
                        }
                    })
                    .expect("same shape")
                })]
            }),
        )
    }

    /// Multiplies a `[1]` scalar variable into every element of `self`.
    pub fn scale_by(&self, factor: &Var<T>) -> NdResult<Var<T>> {
        self.same_graph(factor, "scale_by")?;
        let x = self.value();
        let s = factor.value().item()?;
        let out = x.map(|v| v * s);
        Ok(self.graph().push_op(
            out,
            vec![self.id(), factor.id()],
            Box::new(move |g, mask| {
                vec![
                    mask[0].then(|| g.map(|v| v * s)),
                    mask[1].then(|| Tensor::scalar(dot_slice(g.data(), x.data()))),
                ]
            }),
        ))
    }

    /// Adds a per-channel bias: `x[c, y, x] + bias[c]`.
    pub fn add_bias(&self, bias: &Var<T>) -> NdResult<Var<T>> {
        self.same_graph(bias, "add_bias")?;
        let x = self.value();
        let b = bias.value();
        let (c, h, w) = x.dims3("add_bias")?;
        if b.shape() != [c] {
            return Err(NdError::ShapeMismatch {
                op: "add_bias",
                left: x.shape().to_vec(),
                right: b.shape().to_vec(),
            });
        }
        let plane = h * w;
        let mut out = Tensor::zeros(x.shape().to_vec());
        for ch in 0..c {
            let bc = b.data()[ch];
            for (o, v) in out.plane_mut(ch).iter_mut().zip(x.plane(ch)) {
                *o = *v + bc;
            }
        }
        Ok(self.graph().push_op(
            out,
            vec![self.id(), bias.id()],
            Box::new(move |g, mask| {
                vec![
                    mask[0].then(|| g.clone()),
                    mask[1].then(|| {
                        let mut gb = Tensor::zeros(vec![c]);
                        for ch in 0..c {
                            gb.data_mut()[ch] =
                                crate::ops::sum_slice(&g.data()[ch * plane..(ch + 1) * plane]);
                        }
                        gb
                    }),
                ]
            }),
        ))
    }
}
