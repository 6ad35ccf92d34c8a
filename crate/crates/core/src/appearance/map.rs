//! The appearance map: retained face views plus four boundary corners,
//! Delaunay-triangulated in the (yaw, pitch) plane.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::delaunay::{orient, triangle_area, triangulate_in_square};
use crate::error::{Error, Result};
use crate::pose::{pose_to_plane, EulerPose, PlanePoint};

/// Half-width of the square spanned by the boundary corners, in degrees.
pub const BOUNDARY_EXTENT: f64 = 75.0;

pub const FSAM_MAGIC: &[u8; 4] = b"FSAM";
pub const FSAM_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapView {
    pub point: PlanePoint,
    pub id: u32,
    /// The view is the horizontal mirror of image `id`.
    pub flipped: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AppearanceMap {
    views: Vec<MapView>,
    boundary: [PlanePoint; 4],
    /// Counter-clockwise triangles over vertex indices: `0..views.len()` are
    /// views, the following four are the boundary corners.
    triangles: Vec<[usize; 3]>,
}

/// Barycentric lookup result for one query pose.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ViewQuery {
    pub triangle: [usize; 3],
    /// Barycentric coordinates with respect to all three vertices.
    pub raw: [f64; 3],
    /// Interpolation weights: zero on boundary corners, the remaining
    /// vertices renormalized to sum to one.
    pub weights: [f64; 3],
}

/// Drops the weights of boundary vertices and rescales the rest to unit sum.
pub fn exclude_boundary(raw: [f64; 3], is_boundary: [bool; 3]) -> Result<[f64; 3]> {
    let mut w = [0.0; 3];
    for k in 0..3 {
        if !is_boundary[k] {
            w[k] = raw[k];
        }
    }
    let mass: f64 = w.iter().sum();
    if is_boundary.iter().all(|&b| b) || mass <= 0.0 {
        return Err(Error::NoView);
    }
    Ok(w.map(|v| v / mass))
}

impl AppearanceMap {
    /// Triangulates the given views together with the corners `(±75, ±75)`.
    pub fn build(views: Vec<MapView>) -> Result<Self> {
        if views.is_empty() {
            return Err(Error::invalid("an appearance map needs at least one view"));
        }
        let e = BOUNDARY_EXTENT;
        let boundary = [
            PlanePoint::new(-e, -e),
            PlanePoint::new(e, -e),
            PlanePoint::new(e, e),
            PlanePoint::new(-e, e),
        ];
        let mut points: Vec<[f64; 2]> = boundary.iter().map(|p| [p.yaw, p.pitch]).collect();
        for (i, v) in views.iter().enumerate() {
            let p = v.point;
            if !p.is_finite() {
                return Err(Error::invalid(format!("view {i} has a non-finite pose")));
            }
            if p.yaw.abs() > e || p.pitch.abs() > e {
                return Err(Error::OutOfRange(format!(
                    "view {i} at ({}, {}) lies outside [-{e}, {e}]²",
                    p.yaw, p.pitch
                )));
            }
            points.push([p.yaw, p.pitch]);
        }
        let mut sorted: Vec<usize> = (0..points.len()).collect();
        sorted.sort_by(|&a, &b| {
            points[a][0]
                .total_cmp(&points[b][0])
                .then(points[a][1].total_cmp(&points[b][1]))
        });
        if let Some(w) = sorted.windows(2).find(|w| points[w[0]] == points[w[1]]) {
            return Err(Error::invalid(format!(
                "duplicate map point at {:?}",
                points[w[0]]
            )));
        }
        let m = views.len();
        // triangulation numbers corners first; the map numbers views first
        let remap = |i: usize| if i < 4 { m + i } else { i - 4 };
        let triangles: Vec<[usize; 3]> = triangulate_in_square(&points)?
            .into_iter()
            .map(|t| t.map(remap))
            .collect();
        let map = Self {
            views,
            boundary,
            triangles,
        };
        for t in &map.triangles {
            let [a, b, c] = t.map(|i| map.vertex(i));
            if triangle_area(a, b, c) <= 1e-12 {
                return Err(Error::invalid(format!("degenerate triangle {t:?}")));
            }
        }
        Ok(map)
    }

    pub fn views(&self) -> &[MapView] {
        &self.views
    }

    pub fn boundary(&self) -> &[PlanePoint; 4] {
        &self.boundary
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn vertex_count(&self) -> usize {
        self.views.len() + 4
    }

    pub fn is_boundary(&self, vertex: usize) -> bool {
        vertex >= self.views.len()
    }

    pub fn vertex(&self, i: usize) -> [f64; 2] {
        let p = if i < self.views.len() {
            self.views[i].point
        } else {
            self.boundary[i - self.views.len()]
        };
        [p.yaw, p.pitch]
    }

    /// Locates the triangle containing `x` (first in index order when `x`
    /// lies on a shared edge) and its barycentric coordinates.
    pub fn locate(&self, x: PlanePoint) -> Result<([usize; 3], [f64; 3])> {
        let e = BOUNDARY_EXTENT;
        if !x.is_finite() || x.yaw.abs() > e || x.pitch.abs() > e {
            return Err(Error::OutOfRange(format!(
                "query ({}, {}) lies outside [-{e}, {e}]²",
                x.yaw, x.pitch
            )));
        }
        let q = [x.yaw, x.pitch];
        for t in &self.triangles {
            let [a, b, c] = t.map(|i| self.vertex(i));
            if orient(a, b, q) >= 0.0 && orient(b, c, q) >= 0.0 && orient(c, a, q) >= 0.0 {
                let area = triangle_area(a, b, c);
                let raw = [
                    triangle_area(q, b, c) / area,
                    triangle_area(a, q, c) / area,
                    triangle_area(a, b, q) / area,
                ];
                // exact-predicate containment allows only rounding noise below zero
                let raw = raw.map(|v| if v < 0.0 { 0.0 } else { v });
                let sum: f64 = raw.iter().sum();
                return Ok((*t, raw.map(|v| v / sum)));
            }
        }
        Err(Error::OutOfRange(format!(
            "query ({}, {}) not covered by the mesh",
            x.yaw, x.pitch
        )))
    }

    pub fn query(&self, pose: &EulerPose) -> Result<ViewQuery> {
        self.query_point(pose_to_plane(pose))
    }

    pub fn query_point(&self, x: PlanePoint) -> Result<ViewQuery> {
        let (triangle, raw) = self.locate(x)?;
        let weights = exclude_boundary(raw, triangle.map(|i| self.is_boundary(i)))?;
        Ok(ViewQuery {
            triangle,
            raw,
            weights,
        })
    }

    /// Index of the view nearest to `x` in the plane.
    pub fn nearest_view(&self, x: PlanePoint) -> usize {
        (0..self.views.len())
            .min_by(|&a, &b| {
                crate::pose::angular_distance(self.views[a].point, x)
                    .total_cmp(&crate::pose::angular_distance(self.views[b].point, x))
            })
            .expect("maps hold at least one view")
    }

    pub fn write_binary(&self, mut w: impl Write) -> Result<()> {
        let mut buf = Vec::new();
        buf.extend_from_slice(FSAM_MAGIC);
        for v in [
            FSAM_VERSION,
            self.views.len() as u32,
            self.triangles.len() as u32,
        ] {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        for v in &self.views {
            buf.extend_from_slice(&v.point.yaw.to_le_bytes());
            buf.extend_from_slice(&v.point.pitch.to_le_bytes());
            buf.extend_from_slice(&v.id.to_le_bytes());
            buf.extend_from_slice(&(v.flipped as u32).to_le_bytes());
        }
        for p in &self.boundary {
            buf.extend_from_slice(&p.yaw.to_le_bytes());
            buf.extend_from_slice(&p.pitch.to_le_bytes());
        }
        for t in &self.triangles {
            for &i in t {
                buf.extend_from_slice(&(i as u32).to_le_bytes());
            }
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn read_binary(mut r: impl Read) -> Result<Self> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        let mut cur = Cursor {
            bytes: &bytes,
            pos: 0,
        };
        if cur.take(4)? != FSAM_MAGIC {
            return Err(Error::invalid("not an FSAM appearance map"));
        }
        let version = cur.u32()?;
        if version != FSAM_VERSION {
            return Err(Error::invalid(format!(
                "unsupported FSAM version {version}"
            )));
        }
        let (nv, nt) = (cur.u32()? as usize, cur.u32()? as usize);
        if nv.saturating_mul(24).saturating_add(nt.saturating_mul(12)) > bytes.len() {
            return Err(Error::invalid("FSAM counts exceed file size"));
        }
        let mut views = Vec::with_capacity(nv);
        for _ in 0..nv {
            let point = PlanePoint::new(cur.f64()?, cur.f64()?);
            let id = cur.u32()?;
            let flipped = match cur.u32()? {
                0 => false,
                1 => true,
                f => return Err(Error::invalid(format!("bad flipped flag {f}"))),
            };
            views.push(MapView { point, id, flipped });
        }
        let mut boundary = [PlanePoint::new(0.0, 0.0); 4];
        for b in boundary.iter_mut() {
            *b = PlanePoint::new(cur.f64()?, cur.f64()?);
        }
        let mut triangles = Vec::with_capacity(nt);
        for _ in 0..nt {
            let t = [
                cur.u32()? as usize,
                cur.u32()? as usize,
                cur.u32()? as usize,
            ];
            if t.iter().any(|&i| i >= nv + 4) {
                return Err(Error::invalid("FSAM triangle index out of range"));
            }
            triangles.push(t);
        }
        if cur.pos != bytes.len() {
            return Err(Error::invalid("trailing bytes after FSAM map"));
        }
        Ok(Self {
            views,
            boundary,
            triangles,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("map serializes")
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::invalid("FSAM file truncated"))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}
