use fsg_core::curation::{dispersion, prune_frames, select_max_variance, FrameRecord};
use fsg_core::metrics::*;
use fsg_core::pose::PlanePoint;
use fsg_core::{EulerPose, Image, LandmarkSet};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_image(rng: &mut ChaCha8Rng, h: usize, w: usize, c: usize) -> Image {
    Image::from_fn(h, w, c, |_, _, _| rng.gen_range(0.0..1.0)).unwrap()
}

#[test]
fn ssim_symmetry_and_bounds() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..30 {
        let c = if rng.gen_bool(0.5) { 1 } else { 3 };
        let x = random_image(&mut rng, 14, 13, c);
        let y = random_image(&mut rng, 14, 13, c);
        let a = ssim(&x, &y).unwrap();
        assert_eq!(a, ssim(&y, &x).unwrap());
        assert!((-1.0..=1.0).contains(&a));
        assert!((ssim(&x, &x).unwrap() - 1.0).abs() < 1e-9);
    }
}

#[test]
fn ssim_is_translation_invariant_on_interior_crops() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let big_x = random_image(&mut rng, 24, 24, 1);
    let big_y = random_image(&mut rng, 24, 24, 1);
    let crop = |img: &Image, dr: usize, dc: usize| {
        Image::from_fn(16, 16, 1, |r, c, _| img.get(r + dr, c + dc, 0)).unwrap()
    };
    // shifting the window content and the frame together is a relabelling
    let a = ssim(&crop(&big_x, 2, 3), &crop(&big_y, 2, 3)).unwrap();
    let shifted_x = Image::from_fn(24, 24, 1, |r, c, _| {
        big_x.get((r + 23) % 24, (c + 22) % 24, 0)
    })
    .unwrap();
    let shifted_y = Image::from_fn(24, 24, 1, |r, c, _| {
        big_y.get((r + 23) % 24, (c + 22) % 24, 0)
    })
    .unwrap();
    let b = ssim(&crop(&shifted_x, 3, 5), &crop(&shifted_y, 3, 5)).unwrap();
    assert!((a - b).abs() < 1e-9);
}

fn pose() -> impl Strategy<Value = EulerPose> {
    (-90.0..90.0f64, -90.0..90.0f64, -90.0..90.0f64)
        .prop_map(|(y, p, r)| EulerPose::new(y, p, r).unwrap())
}

fn lmset(n: usize) -> impl Strategy<Value = LandmarkSet> {
    prop::collection::vec((-100.0..100.0f64, -100.0..100.0f64), n)
        .prop_map(|v| LandmarkSet::new(v.into_iter().map(|(x, y)| [x, y]).collect()).unwrap())
}

proptest! {
    #[test]
    fn pose_error_is_a_metric(a in pose(), b in pose(), c in pose()) {
        prop_assert_eq!(pose_error(&a, &a), 0.0);
        prop_assert_eq!(pose_error(&a, &b), pose_error(&b, &a));
        prop_assert!(pose_error(&a, &c) <= pose_error(&a, &b) + pose_error(&b, &c) + 1e-9);
        let (dy, dp, dr) = (a.yaw - b.yaw, a.pitch - b.pitch, a.roll - b.roll);
        prop_assert!((pose_error(&a, &b) - (dy * dy + dp * dp + dr * dr).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn landmark_error_is_a_metric(a in lmset(5), b in lmset(5), c in lmset(5)) {
        for red in [LandmarkReduction::Flattened, LandmarkReduction::MeanPerPoint] {
            let d = |x: &LandmarkSet, y: &LandmarkSet| landmark_error(x, y, red).unwrap();
            prop_assert_eq!(d(&a, &a), 0.0);
            prop_assert_eq!(d(&a, &b), d(&b, &a));
            prop_assert!(d(&a, &c) <= d(&a, &b) + d(&b, &c) + 1e-9);
        }
        let flat: f64 = a.flatten().iter().zip(b.flatten()).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt();
        prop_assert!((landmark_error(&a, &b, LandmarkReduction::Flattened).unwrap() - flat).abs() < 1e-9);
    }

    #[test]
    fn aggregate_is_permutation_invariant(vals in prop::collection::vec(prop::collection::vec(0.0..10.0f64, 1..5), 1..6), seed in 0u64..1000) {
        let groups: Vec<Vec<SwapEval>> = vals
            .iter()
            .map(|g| g.iter().map(|&v| SwapEval { verification: None, ssim: v / 10.0, euler_err: v, landmark_err: 2.0 * v }).collect())
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut shuffled = groups.clone();
        for g in shuffled.iter_mut() {
            g.reverse();
        }
        let k = rng.gen_range(0..shuffled.len());
        shuffled.rotate_left(k);
        let a = aggregate(&groups).unwrap();
        let b = aggregate(&shuffled).unwrap();
        prop_assert!((a.euler.mean - b.euler.mean).abs() < 1e-9 && (a.euler.std - b.euler.std).abs() < 1e-9);
        prop_assert!((a.landmarks.mean - 2.0 * a.euler.mean).abs() < 1e-9);
    }
}

fn frame(rng: &mut ChaCha8Rng, id: usize, dims: usize) -> FrameRecord {
    FrameRecord {
        id: format!("{id}"),
        point: PlanePoint::new(rng.gen_range(-40.0..40.0), rng.gen_range(-40.0..40.0)),
        roll: rng.gen_range(-10.0..10.0),
        blur: Some(rng.gen_range(0.0..1.0)),
        coverage: rng.gen_range(0.0..1.0),
        landmarks: LandmarkSet::new(
            (0..dims)
                .map(|_| [rng.gen_range(0.0..50.0), rng.gen_range(0.0..50.0)])
                .collect(),
        )
        .unwrap(),
    }
}

#[test]
fn pruning_is_monotone_in_coverage() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..30 {
        let frames: Vec<FrameRecord> = (0..40).map(|i| frame(&mut rng, i, 3)).collect();
        let lo = rng.gen_range(0.0..0.5);
        let hi = lo + rng.gen_range(0.0..0.5);
        // without angular pruning the coverage filter alone is monotone
        let ids = |t: f64| {
            prune_frames(&frames, t, 1e-9, None)
                .unwrap()
                .into_iter()
                .map(|f| f.id)
                .collect::<Vec<_>>()
        };
        let (a, b) = (ids(lo), ids(hi));
        assert!(b.iter().all(|id| a.contains(id)));
    }
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    (0u32..1 << n)
        .filter(|m| m.count_ones() as usize == k)
        .map(|m| (0..n).filter(|i| m >> i & 1 == 1).collect())
        .collect()
}

#[test]
fn pairs_are_optimal_and_triples_within_factor_two() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..50 {
        let n = rng.gen_range(3..=8);
        let frames: Vec<FrameRecord> = (0..n).map(|i| frame(&mut rng, i, 4)).collect();
        let best = |k: usize| {
            subsets(n, k)
                .iter()
                .map(|s| dispersion(&frames, s))
                .fold(0.0, f64::max)
        };
        let two = select_max_variance(&frames, 2).unwrap();
        assert!((dispersion(&frames, &two) - best(2)).abs() < 1e-12);
        let three = select_max_variance(&frames, 3).unwrap();
        assert!(dispersion(&frames, &three) >= best(3) / 2.0 - 1e-12);
        assert_eq!(three, select_max_variance(&frames, 3).unwrap());
    }
}
