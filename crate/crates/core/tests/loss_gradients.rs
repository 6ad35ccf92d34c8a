// perturbation loops index several parallel buffers at once
#![allow(clippy::needless_range_loop)]

use fsg_core::losses::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const H: f64 = 1e-6;

fn close(analytic: f64, numeric: f64) -> bool {
    (analytic - numeric).abs() <= 1e-4 * analytic.abs().max(numeric.abs()).max(1e-8)
}

fn feature_pair(rng: &mut ChaCha8Rng) -> (Vec<FeatureMap>, Vec<FeatureMap>) {
    let mut a = Vec::new();
    let mut b = Vec::new();
    for layer in 0..3 {
        let (c, h, w) = (
            rng.gen_range(1..4),
            rng.gen_range(1..4),
            rng.gen_range(1..4),
        );
        let n = c * h * w;
        // keep every coordinate well away from the kink at equality
        let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let x: Vec<f64> = y
            .iter()
            .map(|v| v + rng.gen_range(0.1..1.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 })
            .collect();
        a.push(FeatureMap::new(layer, c, h, w, x).unwrap());
        b.push(FeatureMap::new(layer, c, h, w, y).unwrap());
    }
    (a, b)
}

#[test]
fn perceptual_gradient_matches_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..20 {
        let (fx, fy) = feature_pair(&mut rng);
        let grad = perceptual_grad(&fx, &fy).unwrap();
        for l in 0..fx.len() {
            for i in 0..fx[l].data.len() {
                let mut plus = fx.clone();
                let mut minus = fx.clone();
                plus[l].data[i] += H;
                minus[l].data[i] -= H;
                let num = (perceptual_loss(&plus, &fy).unwrap()
                    - perceptual_loss(&minus, &fy).unwrap())
                    / (2.0 * H);
                assert!(
                    close(grad[l][i], num),
                    "layer {l} index {i}: {} vs {num}",
                    grad[l][i]
                );
            }
        }
    }
}

#[test]
fn l1_and_reconstruction_gradients() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let w = LossWeights::default();
    for _ in 0..20 {
        let n = rng.gen_range(1..30);
        let y: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
        let x: Vec<f64> = y
            .iter()
            .map(|v| v + if rng.gen_bool(0.5) { 0.3 } else { -0.3 })
            .collect();
        let (fx, fy) = feature_pair(&mut rng);
        let total = |x: &[f64], fx: &[FeatureMap]| {
            w.perc * perceptual_loss(fx, &fy).unwrap()
                + w.pixel * l1(x, &y, Reduction::Sum).unwrap()
        };
        let (gx, gf) = reconstruction_grad(&x, &y, &fx, &fy, &w).unwrap();
        for i in 0..n {
            let (mut p, mut m) = (x.clone(), x.clone());
            p[i] += H;
            m[i] -= H;
            let num = (total(&p, &fx) - total(&m, &fx)) / (2.0 * H);
            assert!(close(gx[i], num));
        }
        for l in 0..fx.len() {
            for i in 0..fx[l].data.len() {
                let (mut p, mut m) = (fx.clone(), fx.clone());
                p[l].data[i] += H;
                m[l].data[i] -= H;
                let num = (total(&x, &p) - total(&x, &m)) / (2.0 * H);
                assert!(close(gf[l][i], num));
            }
        }
        for red in [Reduction::Sum, Reduction::Mean] {
            let g = l1_grad(&x, &y, red).unwrap();
            let (mut p, mut m) = (x.clone(), x.clone());
            p[0] += H;
            m[0] -= H;
            let num = (l1(&p, &y, red).unwrap() - l1(&m, &y, red).unwrap()) / (2.0 * H);
            assert!(close(g[0], num));
        }
    }
}

#[test]
fn gan_gradients() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let cases = [
        (Side::Discriminator, GanReading::NonSaturating),
        (Side::Generator, GanReading::NonSaturating),
        (Side::Generator, GanReading::MinMax),
    ];
    for _ in 0..20 {
        let scales = rng.gen_range(1..4);
        let maps = |rng: &mut ChaCha8Rng| -> Vec<ScoreMap> {
            (0..scales)
                .map(|s| {
                    let n = (s + 1) * 2;
                    ScoreMap::new(1, n, (0..n).map(|_| rng.gen_range(0.05..0.95)).collect())
                        .unwrap()
                })
                .collect()
        };
        let real = maps(&mut rng);
        let fake = maps(&mut rng);
        for (side, reading) in cases {
            let (gr, gf) = gan_grad(&real, &fake, side, reading).unwrap();
            for s in 0..scales {
                for i in 0..fake[s].data.len() {
                    let (mut p, mut m) = (fake.clone(), fake.clone());
                    p[s].data[i] += H;
                    m[s].data[i] -= H;
                    let num = (gan_loss(&real, &p, side, reading).unwrap()
                        - gan_loss(&real, &m, side, reading).unwrap())
                        / (2.0 * H);
                    assert!(
                        close(gf[s][i], num),
                        "{side:?} {reading:?}: {} vs {num}",
                        gf[s][i]
                    );
                }
                if side == Side::Discriminator {
                    let (mut p, mut m) = (real.clone(), real.clone());
                    p[s].data[0] += H;
                    m[s].data[0] -= H;
                    let num = (gan_loss(&p, &fake, side, reading).unwrap()
                        - gan_loss(&m, &fake, side, reading).unwrap())
                        / (2.0 * H);
                    assert!(close(gr[s][0], num));
                }
            }
        }
    }
}

#[test]
fn losses_scale_linearly_along_the_difference() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..20 {
        let (fx, fy) = feature_pair(&mut rng);
        let alpha = rng.gen_range(0.0..2.0);
        let moved: Vec<FeatureMap> = fx
            .iter()
            .zip(&fy)
            .map(|(a, b)| {
                let data = a
                    .data
                    .iter()
                    .zip(&b.data)
                    .map(|(p, q)| q + alpha * (p - q))
                    .collect();
                FeatureMap::new(a.layer, a.channels, a.height, a.width, data).unwrap()
            })
            .collect();
        let base = perceptual_loss(&fx, &fy).unwrap();
        assert!((perceptual_loss(&moved, &fy).unwrap() - alpha * base).abs() < 1e-9 * (1.0 + base));
        assert_eq!(perceptual_loss(&fy, &fy).unwrap(), 0.0);
    }
}
