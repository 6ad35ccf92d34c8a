//! Incremental (Bowyer–Watson) Delaunay triangulation inside a fixed
//! bounding square, using adaptive exact orientation and in-circle tests.

use std::collections::HashMap;

use robust::Coord;

use crate::error::{Error, Result};

#[inline]
fn coord(p: [f64; 2]) -> Coord<f64> {
    Coord { x: p[0], y: p[1] }
}

/// Positive when `a, b, c` turn counter-clockwise (y up), zero when collinear.
#[inline]
pub fn orient(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    robust::orient2d(coord(a), coord(b), coord(c))
}

/// Positive when `d` lies strictly inside the circumcircle of the
/// counter-clockwise triangle `a, b, c`.
#[inline]
pub fn in_circle(a: [f64; 2], b: [f64; 2], c: [f64; 2], d: [f64; 2]) -> f64 {
    robust::incircle(coord(a), coord(b), coord(c), coord(d))
}

/// Triangulates `points`, whose first four entries must be the corners of an
/// axis-aligned square in counter-clockwise order and whose remaining points
/// lie inside or on that square. Returns counter-clockwise vertex triples.
pub fn triangulate_in_square(points: &[[f64; 2]]) -> Result<Vec<[usize; 3]>> {
    if points.len() < 4 {
        return Err(Error::invalid(
            "triangulation needs the four square corners",
        ));
    }
    let mut tris: Vec<[usize; 3]> = vec![[0, 1, 2], [0, 2, 3]];
    for (i, &p) in points.iter().enumerate().skip(4) {
        let (bad, keep): (Vec<[usize; 3]>, Vec<[usize; 3]>) = tris
            .into_iter()
            .partition(|t| in_circle(points[t[0]], points[t[1]], points[t[2]], p) > 0.0);
        if bad.is_empty() {
            return Err(Error::invalid(format!(
                "point {i} lies outside the triangulated square"
            )));
        }
        // cavity boundary: directed edges whose reverse is not in the cavity
        let mut edges: HashMap<(usize, usize), usize> = HashMap::new();
        for t in &bad {
            for k in 0..3 {
                *edges.entry((t[k], t[(k + 1) % 3])).or_default() += 1;
            }
        }
        tris = keep;
        let mut boundary: Vec<(usize, usize)> = edges
            .keys()
            .copied()
            .filter(|&(a, b)| !edges.contains_key(&(b, a)))
            .collect();
        boundary.sort_unstable();
        for (a, b) in boundary {
            let o = orient(points[a], points[b], p);
            if o > 0.0 {
                tris.push([a, b, i]);
            } else if o < 0.0 {
                return Err(Error::invalid(format!(
                    "non star-shaped cavity while inserting point {i}"
                )));
            }
            // o == 0: the point sits on this hull edge, which it splits
        }
    }
    Ok(tris)
}

pub fn triangle_area(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

#[cfg(test)]
mod tests {
    use super::*;

    const SQUARE: [[f64; 2]; 4] = [[-75.0, -75.0], [75.0, -75.0], [75.0, 75.0], [-75.0, 75.0]];

    #[test]
    fn single_center_point_fans() {
        let mut pts = SQUARE.to_vec();
        pts.push([0.0, 0.0]);
        let tris = triangulate_in_square(&pts).unwrap();
        assert_eq!(tris.len(), 4);
        assert!(tris.iter().all(|t| t.contains(&4)));
    }

    #[test]
    fn point_on_hull_edge() {
        let mut pts = SQUARE.to_vec();
        pts.push([75.0, 10.0]);
        let tris = triangulate_in_square(&pts).unwrap();
        assert_eq!(tris.len(), 3);
        let area: f64 = tris
            .iter()
            .map(|t| triangle_area(pts[t[0]], pts[t[1]], pts[t[2]]))
            .sum();
        assert!((area - 150.0 * 150.0).abs() < 1e-9);
    }

    #[test]
    fn rejects_outside_points() {
        let mut pts = SQUARE.to_vec();
        pts.push([200.0, 0.0]);
        assert!(triangulate_in_square(&pts).is_err());
    }
}
