use fsg_core::appearance::{exclude_boundary, prune_views, AppearanceMap, MapView, ViewCandidate};
use fsg_core::pose::{angular_distance, PlanePoint};
use fsg_core::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// Coordinates are multiples of 1/8 so the oracle below can work in exact
// integer arithmetic on 8x-scaled values.
fn random_views(rng: &mut ChaCha8Rng, n: usize) -> Vec<MapView> {
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::new();
    while out.len() < n {
        let k = (rng.gen_range(-599i64..=599), rng.gen_range(-599i64..=599));
        if seen.insert(k) {
            out.push(MapView {
                point: PlanePoint::new(k.0 as f64 / 8.0, k.1 as f64 / 8.0),
                id: out.len() as u32,
                flipped: false,
            });
        }
    }
    out
}

fn scaled(p: [f64; 2]) -> [i128; 2] {
    [(p[0] * 8.0) as i128, (p[1] * 8.0) as i128]
}

fn orient_exact(a: [i128; 2], b: [i128; 2], c: [i128; 2]) -> i128 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

/// Positive when `d` is strictly inside the circumcircle of CCW `a, b, c`.
fn incircle_exact(a: [i128; 2], b: [i128; 2], c: [i128; 2], d: [i128; 2]) -> i128 {
    let row = |p: [i128; 2]| {
        let (x, y) = (p[0] - d[0], p[1] - d[1]);
        [x, y, x * x + y * y]
    };
    let (r0, r1, r2) = (row(a), row(b), row(c));
    r0[0] * (r1[1] * r2[2] - r1[2] * r2[1]) - r0[1] * (r1[0] * r2[2] - r1[2] * r2[0])
        + r0[2] * (r1[0] * r2[1] - r1[1] * r2[0])
}

#[test]
fn triangulations_are_delaunay() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..40 {
        let n = rng.gen_range(1..=60);
        let map = AppearanceMap::build(random_views(&mut rng, n)).unwrap();
        let pts: Vec<[i128; 2]> = (0..map.vertex_count())
            .map(|i| scaled(map.vertex(i)))
            .collect();
        let mut area2 = 0i128;
        for t in map.triangles() {
            let [a, b, c] = t.map(|i| pts[i]);
            assert!(
                orient_exact(a, b, c) > 0,
                "triangle {t:?} not counter-clockwise"
            );
            area2 += orient_exact(a, b, c);
            for (i, &d) in pts.iter().enumerate() {
                if !t.contains(&i) {
                    assert!(
                        incircle_exact(a, b, c, d) <= 0,
                        "vertex {i} inside circumcircle of {t:?}"
                    );
                }
            }
        }
        // the mesh tiles the 150 x 150 square exactly
        assert_eq!(area2, 2 * 1200 * 1200);
    }
}

#[test]
fn collinear_and_cocircular_inputs() {
    let line: Vec<MapView> = (0..7)
        .map(|i| MapView {
            point: PlanePoint::new(-30.0 + 10.0 * i as f64, 0.0),
            id: i,
            flipped: false,
        })
        .collect();
    let map = AppearanceMap::build(line).unwrap();
    assert_eq!(map.triangles().len(), 2 * 7 + 2);
    let grid: Vec<MapView> = (0..16)
        .map(|i| MapView {
            point: PlanePoint::new(-30.0 + 20.0 * (i % 4) as f64, -30.0 + 20.0 * (i / 4) as f64),
            id: i,
            flipped: false,
        })
        .collect();
    let map = AppearanceMap::build(grid).unwrap();
    assert_eq!(map.triangles().len(), 2 * 16 + 2);
}

#[test]
fn barycentric_reconstruction() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let n = rng.gen_range(3..=30);
        let map = AppearanceMap::build(random_views(&mut rng, n)).unwrap();
        for _ in 0..50 {
            let x = PlanePoint::new(rng.gen_range(-75.0..=75.0), rng.gen_range(-75.0..=75.0));
            let (tri, raw) = map.locate(x).unwrap();
            assert!((raw.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            assert!(raw.iter().all(|&w| w >= 0.0));
            let rec = (0..3).fold([0.0, 0.0], |acc, k| {
                let v = map.vertex(tri[k]);
                [acc[0] + raw[k] * v[0], acc[1] + raw[k] * v[1]]
            });
            assert!((rec[0] - x.yaw).abs() < 1e-9 && (rec[1] - x.pitch).abs() < 1e-9);
        }
        for (i, v) in map.views().iter().enumerate() {
            let q = map.query_point(v.point).unwrap();
            let k = q.triangle.iter().position(|&t| t == i).unwrap();
            assert_eq!(q.weights[k], 1.0);
        }
    }
    assert!(matches!(map_err(), Error::OutOfRange(_)));
}

fn map_err() -> Error {
    let map = AppearanceMap::build(vec![MapView {
        point: PlanePoint::new(0.0, 0.0),
        id: 0,
        flipped: false,
    }])
    .unwrap();
    map.query_point(PlanePoint::new(75.5, 0.0)).unwrap_err()
}

#[test]
fn boundary_exclusion_arithmetic() {
    let w = exclude_boundary([0.5, 0.25, 0.25], [false, false, true]).unwrap();
    assert!((w[0] - 2.0 / 3.0).abs() < 1e-15 && (w[1] - 1.0 / 3.0).abs() < 1e-15 && w[2] == 0.0);
    assert!(matches!(
        exclude_boundary([0.2, 0.3, 0.5], [true; 3]),
        Err(Error::NoView)
    ));
    assert!(matches!(
        exclude_boundary([0.0, 0.5, 0.5], [false, true, true]),
        Err(Error::NoView)
    ));
}

/// Quadratic greedy reference: blurry candidates out, then ascending |roll|
/// (ties by index), keep when no kept point is strictly closer than `radius`.
fn prune_reference(c: &[ViewCandidate], radius: f64, blur: Option<f64>) -> Vec<usize> {
    let mut order: Vec<usize> = (0..c.len())
        .filter(|&i| !matches!((blur, c[i].blur), (Some(t), Some(b)) if b > t))
        .collect();
    order.sort_by(|&a, &b| {
        c[a].roll
            .abs()
            .partial_cmp(&c[b].roll.abs())
            .unwrap()
            .then(a.cmp(&b))
    });
    let mut kept: Vec<usize> = Vec::new();
    for i in order {
        if kept
            .iter()
            .all(|&k| angular_distance(c[k].point, c[i].point) >= radius)
        {
            kept.push(i);
        }
    }
    kept.sort();
    kept
}

#[test]
fn pruning_matches_reference() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for round in 0..60 {
        let n = rng.gen_range(0..200);
        let c: Vec<ViewCandidate> = (0..n)
            .map(|_| ViewCandidate {
                // a coarse grid makes exact-radius ties common
                point: PlanePoint::new(
                    rng.gen_range(-20..=20) as f64,
                    rng.gen_range(-20..=20) as f64,
                ),
                roll: rng.gen_range(-4..=4) as f64 * 2.5,
                blur: if rng.gen_bool(0.5) {
                    Some(rng.gen_range(0.0..1.0))
                } else {
                    None
                },
            })
            .collect();
        let radius = [1.0, 5.0, 7.5][round % 3];
        let blur = if round % 2 == 0 { Some(0.7) } else { None };
        assert_eq!(
            prune_views(&c, radius, blur),
            prune_reference(&c, radius, blur)
        );
    }
}
