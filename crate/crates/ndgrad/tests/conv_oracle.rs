//! Convolution correctness against an independent reference.
//!
//! The reference implementation below shares no code with the library: it
//! walks every output pixel and kernel tap with explicit modular arithmetic.

use ndgrad::ops::{conv2d_periodic_direct_t, conv2d_periodic_fft_t, conv2d_periodic_t};
use ndgrad::Tensor;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

fn random_tensor(rng: &mut ChaCha12Rng, shape: Vec<usize>) -> Tensor<f64> {
    Tensor::from_fn(shape, |_| rng.gen_range(-1.0..1.0))
}

fn naive_conv(x: &Tensor<f64>, k: &Tensor<f64>) -> Tensor<f64> {
    let (c, h, w) = match x.shape() {
        &[h, w] => (1, h, w),
        &[c, h, w] => (c, h, w),
        other => panic!("unexpected shape {other:?}"),
    };
    let (kh, kw) = (k.shape()[0], k.shape()[1]);
    let (cy, cx) = ((kh / 2) as isize, (kw / 2) as isize);
    let mut out = vec![0.0; c * h * w];
    for ch in 0..c {
        for y in 0..h as isize {
            for xo in 0..w as isize {
                let mut acc = 0.0;
                for i in 0..kh as isize {
                    for j in 0..kw as isize {
                        let sy = (y - (i - cy)).rem_euclid(h as isize) as usize;
                        let sx = (xo - (j - cx)).rem_euclid(w as isize) as usize;
                        acc += k.data()[(i * kw as isize + j) as usize]
                            * x.data()[(ch * h + sy) * w + sx];
                    }
                }
                out[(ch * h + y as usize) * w + xo as usize] = acc;
            }
        }
    }
    Tensor::new(x.shape().to_vec(), out).unwrap()
}

fn max_abs_diff(a: &Tensor<f64>, b: &Tensor<f64>) -> f64 {
    a.data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

#[test]
fn direct_path_matches_the_reference() {
    let mut rng = ChaCha12Rng::seed_from_u64(11);
    for (c, h, w, kh, kw) in [
        (1, 8, 8, 3, 3),
        (2, 9, 7, 5, 3),
        (3, 6, 10, 1, 5),
        (1, 5, 5, 5, 5),
        (1, 3, 3, 3, 3),
    ] {
        let x = random_tensor(&mut rng, vec![c, h, w]);
        let k = random_tensor(&mut rng, vec![kh, kw]);
        let got = conv2d_periodic_direct_t(&x, &k).unwrap();
        let want = naive_conv(&x, &k);
        assert!(
            max_abs_diff(&got, &want) < 1e-13,
            "direct conv disagrees for {c}x{h}x{w} kernel {kh}x{kw}"
        );
    }
}

#[test]
fn fft_path_matches_the_reference() {
    let mut rng = ChaCha12Rng::seed_from_u64(12);
    for (h, w, kh, kw) in [(8, 8, 3, 3), (12, 10, 11, 7), (16, 16, 13, 13)] {
        let x = random_tensor(&mut rng, vec![2, h, w]);
        let k = random_tensor(&mut rng, vec![kh, kw]);
        let got = conv2d_periodic_fft_t(&x, &k).unwrap();
        let want = naive_conv(&x, &k);
        assert!(
            max_abs_diff(&got, &want) < 1e-12,
            "fft conv disagrees for {h}x{w} kernel {kh}x{kw}"
        );
    }
}

#[test]
fn direct_and_fft_agree_on_a_large_kernel() {
    let mut rng = ChaCha12Rng::seed_from_u64(13);
    let x = random_tensor(&mut rng, vec![1, 32, 32]);
    let k = random_tensor(&mut rng, vec![17, 17]);
    let direct = conv2d_periodic_direct_t(&x, &k).unwrap();
    let fft = conv2d_periodic_fft_t(&x, &k).unwrap();
    assert!(max_abs_diff(&direct, &fft) < 1e-10);
}

#[test]
fn dispatch_switches_at_nine_taps() {
    let mut rng = ChaCha12Rng::seed_from_u64(14);
    let x = random_tensor(&mut rng, vec![1, 16, 16]);

    let small = random_tensor(&mut rng, vec![9, 9]);
    let auto = conv2d_periodic_t(&x, &small).unwrap();
    let direct = conv2d_periodic_direct_t(&x, &small).unwrap();
    assert_eq!(auto.data(), direct.data(), "9x9 should use the direct path");

    let large = random_tensor(&mut rng, vec![11, 9]);
    let auto = conv2d_periodic_t(&x, &large).unwrap();
    let fft = conv2d_periodic_fft_t(&x, &large).unwrap();
    assert_eq!(auto.data(), fft.data(), "11x9 should use the fft path");
}

#[test]
fn full_size_odd_kernel_is_allowed() {
    let mut rng = ChaCha12Rng::seed_from_u64(15);
    let x = random_tensor(&mut rng, vec![1, 7, 7]);
    let k = random_tensor(&mut rng, vec![7, 7]);
    let got = conv2d_periodic_t(&x, &k).unwrap();
    let want = naive_conv(&x, &k);
    assert!(max_abs_diff(&got, &want) < 1e-12);
}
