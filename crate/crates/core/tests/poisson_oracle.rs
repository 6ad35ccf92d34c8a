use fsg_core::poisson::{laplacian_at, solve, BlendProblem, Method, SolverOptions};
use fsg_core::Image;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_problem(rng: &mut ChaCha8Rng, h: usize, w: usize, channels: usize) -> BlendProblem {
    let t = Image::from_fn(h, w, channels, |_, _, _| rng.gen_range(0.0..1.0)).unwrap();
    let s = Image::from_fn(h, w, channels, |_, _, _| rng.gen_range(0.0..1.0)).unwrap();
    let mut free: Vec<bool> = (0..h * w).map(|_| rng.gen_bool(0.7)).collect();
    free[rng.gen_range(0..h * w)] = false;
    BlendProblem::new(t, s, free).unwrap()
}

/// Least squares over every 4-neighbour pair touching a free pixel:
/// minimize Σ ((f_p − f_q) − (s_p − s_q))² with constrained f = t.
fn dense_oracle(p: &BlendProblem, channel: usize) -> Vec<f64> {
    let (h, w) = (p.target().height(), p.target().width());
    let free = p.free();
    let index: Vec<Option<usize>> = {
        let mut n = 0;
        free.iter()
            .map(|&f| {
                f.then(|| {
                    n += 1;
                    n - 1
                })
            })
            .collect()
    };
    let unknowns = free.iter().filter(|&&f| f).count();
    let s = |i: usize| p.source().data()[i * p.source().channels() + channel] as f64;
    let t = |i: usize| p.target().data()[i * p.target().channels() + channel] as f64;
    let mut rows: Vec<(Vec<(usize, f64)>, f64)> = Vec::new();
    for r in 0..h {
        for c in 0..w {
            let a = r * w + c;
            for b in [(c + 1 < w).then(|| a + 1), (r + 1 < h).then(|| a + w)]
                .into_iter()
                .flatten()
            {
                if !free[a] && !free[b] {
                    continue;
                }
                let mut coeffs = Vec::new();
                let mut rhs = s(a) - s(b);
                match index[a] {
                    Some(k) => coeffs.push((k, 1.0)),
                    None => rhs -= t(a),
                }
                match index[b] {
                    Some(k) => coeffs.push((k, -1.0)),
                    None => rhs += t(b),
                }
                rows.push((coeffs, rhs));
            }
        }
    }
    let mut a = DMatrix::<f64>::zeros(rows.len(), unknowns);
    let mut rhs = DVector::<f64>::zeros(rows.len());
    for (i, (coeffs, v)) in rows.iter().enumerate() {
        for &(k, x) in coeffs {
            a[(i, k)] = x;
        }
        rhs[i] = *v;
    }
    let x = a.svd(true, true).solve(&rhs, 1e-12).unwrap();
    let mut out: Vec<f64> = (0..h * w).map(t).collect();
    for (i, k) in index.iter().enumerate() {
        if let Some(k) = k {
            out[i] = x[*k];
        }
    }
    out
}

#[test]
fn solvers_match_dense_least_squares() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for round in 0..20 {
        let (h, w) = (rng.gen_range(2..=12), rng.gen_range(2..=12));
        let p = random_problem(&mut rng, h, w, 1 + 2 * (round % 2));
        let method = [Method::ConjugateGradient, Method::Direct][round % 2];
        let sol = solve(
            &p,
            &SolverOptions {
                tol: 1e-10,
                method,
                ..Default::default()
            },
        )
        .unwrap();
        for ch in 0..p.target().channels() {
            let want = dense_oracle(&p, ch);
            for (i, (&got, &w)) in sol.planes[ch].iter().zip(&want).enumerate() {
                assert!(
                    (got - w).abs() < 1e-7,
                    "round {round} pixel {i}: {got} vs {w}"
                );
            }
        }
    }
}

#[test]
fn euler_lagrange_holds_at_interior_free_pixels() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..4 {
        let p = random_problem(&mut rng, 32, 32, 1);
        let sol = solve(&p, &SolverOptions::default()).unwrap();
        let s: Vec<f64> = p.source().data().iter().map(|&v| v as f64).collect();
        for r in 1..31 {
            for c in 1..31 {
                if p.free()[r * 32 + c] {
                    let d = laplacian_at(&sol.planes[0], 32, r, c) - laplacian_at(&s, 32, r, c);
                    assert!(d.abs() < 1e-5, "({r}, {c}): {d}");
                }
            }
        }
    }
}
