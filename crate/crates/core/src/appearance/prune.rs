//! Angular-domain pruning of face views.

use crate::image::Image;
use crate::pose::PlanePoint;

/// Default minimum separation between retained views, in degrees.
pub const DEFAULT_PRUNE_RADIUS: f64 = 5.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ViewCandidate {
    pub point: PlanePoint,
    pub roll: f64,
    /// Motion-blur score; larger is blurrier. See [`blur_score`].
    pub blur: Option<f64>,
}

/// Negated variance of the 4-neighbour Laplacian of the grayscale image.
pub fn blur_score(img: &Image) -> f64 {
    let g = img.to_gray();
    let (h, w) = (g.height(), g.width());
    if h < 3 || w < 3 {
        return 0.0;
    }
    let mut vals = Vec::with_capacity((h - 2) * (w - 2));
    for r in 1..h - 1 {
        for c in 1..w - 1 {
            let v = |r: usize, c: usize| g.get(r, c, 0) as f64;
            vals.push(v(r - 1, c) + v(r + 1, c) + v(r, c - 1) + v(r, c + 1) - 4.0 * v(r, c));
        }
    }
    let n = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / n;
    -(vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n)
}

/// Static 2-d tree over the candidate points, with a retained flag per
/// point so queries only see points already kept.
struct KdTree {
    // indices into `points`, arranged as an implicit balanced tree: the
    // median of every slice is its root, split on depth parity
    order: Vec<usize>,
    points: Vec<[f64; 2]>,
    retained: Vec<bool>,
}

impl KdTree {
    fn new(points: Vec<[f64; 2]>) -> Self {
        let mut order: Vec<usize> = (0..points.len()).collect();
        build(&mut order, &points, 0);
        let retained = vec![false; points.len()];
        Self {
            order,
            points,
            retained,
        }
    }

    fn any_retained_within(&self, q: [f64; 2], radius: f64) -> bool {
        self.search(&self.order, q, radius, 0)
    }

    fn search(&self, slice: &[usize], q: [f64; 2], radius: f64, depth: usize) -> bool {
        if slice.is_empty() {
            return false;
        }
        let mid = slice.len() / 2;
        let idx = slice[mid];
        let p = self.points[idx];
        if self.retained[idx] && (p[0] - q[0]).hypot(p[1] - q[1]) < radius {
            return true;
        }
        let axis = depth % 2;
        let diff = q[axis] - p[axis];
        let (near, far) = if diff < 0.0 {
            (&slice[..mid], &slice[mid + 1..])
        } else {
            (&slice[mid + 1..], &slice[..mid])
        };
        self.search(near, q, radius, depth + 1)
            || (diff.abs() < radius && self.search(far, q, radius, depth + 1))
    }
}

fn build(slice: &mut [usize], points: &[[f64; 2]], depth: usize) {
    if slice.len() <= 1 {
        return;
    }
    let axis = depth % 2;
    let mid = slice.len() / 2;
    slice.select_nth_unstable_by(mid, |&a, &b| {
        points[a][axis].total_cmp(&points[b][axis]).then(a.cmp(&b))
    });
    let (left, right) = slice.split_at_mut(mid);
    build(left, points, depth + 1);
    build(&mut right[1..], points, depth + 1);
}

/// Greedy angular pruning. Candidates whose blur score exceeds
/// `blur_threshold` are dropped first; the rest are visited in ascending
/// `|roll|` (ties by input order) and kept unless a kept point lies strictly
/// closer than `radius`. Returns kept indices in ascending order.
pub fn prune_views(
    candidates: &[ViewCandidate],
    radius: f64,
    blur_threshold: Option<f64>,
) -> Vec<usize> {
    assert!(radius > 0.0, "prune radius must be positive");
    let sharp: Vec<usize> = (0..candidates.len())
        .filter(|&i| match (blur_threshold, candidates[i].blur) {
            (Some(t), Some(b)) => b <= t,
            _ => true,
        })
        .collect();
    let mut tree = KdTree::new(
        sharp
            .iter()
            .map(|&i| [candidates[i].point.yaw, candidates[i].point.pitch])
            .collect(),
    );
    let mut visit: Vec<usize> = (0..sharp.len()).collect();
    visit.sort_by(|&a, &b| {
        candidates[sharp[a]]
            .roll
            .abs()
            .total_cmp(&candidates[sharp[b]].roll.abs())
            .then(a.cmp(&b))
    });
    let mut kept = Vec::new();
    for local in visit {
        if !tree.any_retained_within(tree.points[local], radius) {
            tree.retained[local] = true;
            kept.push(sharp[local]);
        }
    }
    kept.sort_unstable();
    kept
}
