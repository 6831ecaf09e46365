use crate::{NdError, NdResult, Scalar, Tensor, Var};

fn check_phase(r: usize, phase: (usize, usize)) -> NdResult<()> {
    if r == 0 {
        return Err(NdError::Invalid {
            op: "subsample",
            what: "factor must be positive".into(),
        });
    }
    if phase.0 >= r || phase.1 >= r {
        return Err(NdError::Invalid {
            op: "subsample",
            what: format!("phase {:?} out of range for factor {r}", phase),
        });
    }
    Ok(())
}

/// Keeps every `r`-th sample per axis, starting at `phase`:
/// `out[c, y, x] = in[c, r y + phase.0, r x + phase.1]`.
/// Extents must be divisible by `r`.
pub fn subsample_t<T: Scalar>(x: &Tensor<T>, r: usize, phase: (usize, usize)) -> NdResult<Tensor<T>> {
    check_phase(r, phase)?;
    let (c, h, w) = x.dims3("subsample")?;
    if h % r != 0 || w % r != 0 {
        return Err(NdError::NotDivisible {
            extents: vec![h, w],
            factor: r,
        });
    }
    let (oh, ow) = (h / r, w / r);
    let mut out = Tensor::zeros(vec![c, oh, ow]);
    for ch in 0..c {
        let xin = x.plane(ch);
        let xout = out.plane_mut(ch);
        for y in 0..oh {
            let src_row = &xin[(r * y + phase.0) * w..][..w];
            let dst_row = &mut xout[y * ow..][..ow];
            for (d, chunk) in dst_row.iter_mut().zip(src_row[phase.1..].chunks(r)) {
                *d = chunk[0];
            }
        }
    }
    Ok(out)
}

/// Exact adjoint of [`subsample_t`]: places each sample at `(r y + phase.0,
/// r x + phase.1)` on a grid `r` times larger and fills the rest with zeros.
pub fn upsample_zero_t<T: Scalar>(
    x: &Tensor<T>,
    r: usize,
    phase: (usize, usize),
) -> NdResult<Tensor<T>> {
    check_phase(r, phase)?;
    let (c, h, w) = x.dims3("upsample_zero")?;
    let (oh, ow) = (h * r, w * r);
    let mut out = Tensor::zeros(vec![c, oh, ow]);
    for ch in 0..c {
        let xin = x.plane(ch);
        let xout = out.plane_mut(ch);
        for y in 0..h {
            let src_row = &xin[y * w..][..w];
            let dst_row = &mut xout[(r * y + phase.0) * ow..][..ow];
            for (s, slot) in src_row.iter().zip(dst_row[phase.1..].chunks_mut(r)) {
                slot[0] = *s;
            }
        }
    }
    Ok(out)
}

/// Rotates the image on the torus: `out[c, y, x] = in[c, (y - dy) mod h, (x - dx) mod w]`,
/// so positive offsets move content toward larger indices.
pub fn cyclic_shift_t<T: Scalar>(x: &Tensor<T>, dy: isize, dx: isize) -> NdResult<Tensor<T>> {
    let (c, h, w) = x.dims3("cyclic_shift")?;
    let sy = dy.rem_euclid(h as isize) as usize;
    let sx = dx.rem_euclid(w as isize) as usize;
    let mut out = Tensor::zeros(vec![c, h, w]);
    for ch in 0..c {
        let xin = x.plane(ch);
        let xout = out.plane_mut(ch);
        for y in 0..h {
            let src = &xin[((y + h - sy) % h) * w..][..w];
            let dst = &mut xout[y * w..][..w];
            dst[sx..].copy_from_slice(&src[..w - sx]);
            dst[..sx].copy_from_slice(&src[w - sx..]);
        }
    }
    Ok(out)
}

/// Copies the axis-aligned window at `(y0, x0)` of size `h x w`. The window
/// must lie inside the image; cropping never wraps.
pub fn crop_t<T: Scalar>(
    x: &Tensor<T>,
    y0: usize,
    x0: usize,
    h: usize,
    w: usize,
) -> NdResult<Tensor<T>> {
    let (c, ih, iw) = x.dims3("crop")?;
    if h == 0 || w == 0 || y0 + h > ih || x0 + w > iw {
        return Err(NdError::Invalid {
            op: "crop",
            what: format!("window {y0},{x0} size {h}x{w} outside image {ih}x{iw}"),
        });
    }
    let mut out = Tensor::zeros(vec![c, h, w]);
    for ch in 0..c {
        let xin = x.plane(ch);
        let xout = out.plane_mut(ch);
        for y in 0..h {
            xout[y * w..][..w].copy_from_slice(&xin[(y0 + y) * iw + x0..][..w]);
        }
    }
    Ok(out)
}

impl<T: Scalar> Var<T> {
    pub fn subsample(&self, r: usize, phase: (usize, usize)) -> NdResult<Var<T>> {
        let x = self.value();
        let out = subsample_t(&x, r, phase)?;
        Ok(self.graph().push_op(
            out,
            vec![self.id()],
            Box::new(move |g, mask| {
                vec![mask[0].then(|| upsample_zero_t(g, r, phase).expect("validated"))]
            }),
        ))
    }

    pub fn upsample_zero(&self, r: usize, phase: (usize, usize)) -> NdResult<Var<T>> {
        let x = self.value();
        let out = upsample_zero_t(&x, r, phase)?;
        Ok(self.graph().push_op(
            out,
            vec![self.id()],
            Box::new(move |g, mask| {
                vec![mask[0].then(|| subsample_t(g, r, phase).expect("validated"))]
            }),
        ))
    }

    pub fn cyclic_shift(&self, dy: isize, dx: isize) -> NdResult<Var<T>> {
        let x = self.value();
        let out = cyclic_shift_t(&x, dy, dx)?;
        Ok(self.graph().push_op(
            out,
            vec![self.id()],
            Box::new(move |g, mask| {
                vec![mask[0].then(|| cyclic_shift_t(g, -dy, -dx).expect("validated"))]
            }),
        ))
    }

    pub fn crop(&self, y0: usize, x0: usize, h: usize, w: usize) -> NdResult<Var<T>> {
        let x = self.value();
        let out = crop_t(&x, y0, x0, h, w)?;
        let full = x.shape().to_vec();
        Ok(self.graph().push_op(
            out,
            vec![self.id()],
            Box::new(move |g, mask| {
                vec![mask[0].then(|| {
                    let mut gx = Tensor::zeros(full.clone());
                    let (c, _, iw) = gx.dims3("crop_vjp").expect("rank checked");
                    for ch in 0..c {
                        let gplane = g.plane(ch);
                        let xplane = gx.plane_mut(ch);
                        for y in 0..h {
                            xplane[(y0 + y) * iw + x0..][..w]
                                .copy_from_slice(&gplane[y * w..][..w]);
                        }
                    }
                    gx
                })]
            }),
        ))
    }
}
