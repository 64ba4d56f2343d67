//! Polygonal curves in R^n and their discretization as oriented varifolds.
//!
//! A [`PolygonalCurve`] stands in for a smooth embedded curve; orientation
//! is storage order. [`PolygonalCurve::to_varifold`] places one atom per
//! segment at the segment midpoint, carrying the unit segment direction and
//! the segment length as weight.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Junction tolerance for [`PolygonalCurve::concat`].
pub const JUNCTION_TOL: f64 = 1e-9;

/// Tolerance on `‖tangent‖ = 1` for varifold atoms.
pub const UNIT_TOL: f64 = 1e-12;

#[inline]
pub(crate) fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[inline]
pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    dist_sq(a, b).sqrt()
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Distance from `p` to the segment `[a, b]`.
pub fn point_segment_distance(p: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let ab: Vec<f64> = a.iter().zip(b).map(|(x, y)| y - x).collect();
    let ap: Vec<f64> = a.iter().zip(p).map(|(x, y)| y - x).collect();
    let len_sq = dot(&ab, &ab);
    let t = if len_sq > 0.0 {
        (dot(&ap, &ab) / len_sq).clamp(0.0, 1.0)
    } else {
        0.0
    };
    ap.iter()
        .zip(&ab)
        .map(|(u, v)| (u - t * v) * (u - t * v))
        .sum::<f64>()
        .sqrt()
}

/// Minimum distance between segments `[p0, p1]` and `[q0, q1]` in R^n.
pub fn segment_distance(p0: &[f64], p1: &[f64], q0: &[f64], q1: &[f64]) -> f64 {
    let d1: Vec<f64> = p0.iter().zip(p1).map(|(a, b)| b - a).collect();
    let d2: Vec<f64> = q0.iter().zip(q1).map(|(a, b)| b - a).collect();
    let r: Vec<f64> = q0.iter().zip(p0).map(|(a, b)| b - a).collect();
    let a = dot(&d1, &d1);
    let e = dot(&d2, &d2);
    let f = dot(&d2, &r);
    let c = dot(&d1, &r);
    let b = dot(&d1, &d2);
    let denom = a * e - b * b;

    // Closest points of the supporting lines, clamped to the segments.
    let mut s = if denom > 1e-14 * a * e {
        ((b * f - c * e) / denom).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let mut t = (b * s + f) / e;
    if t < 0.0 {
        t = 0.0;
        s = (-c / a).clamp(0.0, 1.0);
    } else if t > 1.0 {
        t = 1.0;
        s = ((b - c) / a).clamp(0.0, 1.0);
    }
    p0.iter()
        .zip(&d1)
        .zip(q0.iter().zip(&d2))
        .map(|((p, u), (q, v))| {
            let x = p + s * u - (q + t * v);
            x * x
        })
        .sum::<f64>()
        .sqrt()
}

/// Which one-sided tangent to report at a vertex.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Before,
    After,
}

/// An oriented polyline in R^n with at least two points and no zero-length
/// segments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CurveRepr", into = "CurveRepr")]
pub struct PolygonalCurve {
    dim: usize,
    points: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct CurveRepr {
    dim: usize,
    points: Vec<Vec<f64>>,
}

impl TryFrom<CurveRepr> for PolygonalCurve {
    type Error = Error;
    fn try_from(r: CurveRepr) -> Result<Self> {
        PolygonalCurve::from_rows(r.dim, &r.points)
    }
}

impl From<PolygonalCurve> for CurveRepr {
    fn from(c: PolygonalCurve) -> Self {
        CurveRepr {
            dim: c.dim,
            points: c.rows(),
        }
    }
}

impl PolygonalCurve {
    /// Builds a curve from a flat, row-major coordinate buffer.
    pub fn new(dim: usize, points: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        if !points.len().is_multiple_of(dim) {
            return Err(Error::InvalidCurve {
                index: points.len() / dim,
                reason: format!("coordinate count {} not divisible by {dim}", points.len()),
            });
        }
        let n = points.len() / dim;
        if n < 2 {
            return Err(Error::InvalidCurve {
                index: n,
                reason: "a curve needs at least 2 points".into(),
            });
        }
        for (i, p) in points.chunks_exact(dim).enumerate() {
            if p.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidCurve {
                    index: i,
                    reason: "non-finite coordinate".into(),
                });
            }
        }
        for (i, w) in points.chunks_exact(dim).collect::<Vec<_>>().windows(2).enumerate() {
            if dist_sq(w[0], w[1]) == 0.0 {
                return Err(Error::InvalidCurve {
                    index: i + 1,
                    reason: "zero-length segment".into(),
                });
            }
        }
        Ok(Self { dim, points })
    }

    pub fn from_rows(dim: usize, rows: &[Vec<f64>]) -> Result<Self> {
        let mut flat = Vec::with_capacity(rows.len() * dim);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != dim {
                return Err(Error::InvalidCurve {
                    index: i,
                    reason: format!("expected {dim} coordinates, found {}", r.len()),
                });
            }
            flat.extend_from_slice(r);
        }
        Self::new(dim, flat)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of vertices.
    pub fn len(&self) -> usize {
        self.points.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.points.chunks_exact(self.dim)
    }

    pub fn first(&self) -> &[f64] {
        self.point(0)
    }

    pub fn last(&self) -> &[f64] {
        self.point(self.len() - 1)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.points
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.points().map(<[f64]>::to_vec).collect()
    }

    pub fn segment_count(&self) -> usize {
        self.len() - 1
    }

    pub fn segment_lengths(&self) -> Vec<f64> {
        (0..self.segment_count())
            .map(|k| dist(self.point(k), self.point(k + 1)))
            .collect()
    }

    /// Cumulative arc length at every vertex; the first entry is 0.
    pub fn stations(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        let mut acc = 0.0;
        out.push(0.0);
        for l in self.segment_lengths() {
            acc += l;
            out.push(acc);
        }
        out
    }

    pub fn arc_length(&self) -> f64 {
        self.segment_lengths().iter().sum()
    }

    pub fn max_segment_length(&self) -> f64 {
        self.segment_lengths().into_iter().fold(0.0, f64::max)
    }

    /// Same geometry, opposite orientation.
    pub fn reversed(&self) -> Self {
        let mut points = Vec::with_capacity(self.points.len());
        for p in self.points.chunks_exact(self.dim).rev() {
            points.extend_from_slice(p);
        }
        Self {
            dim: self.dim,
            points,
        }
    }

    /// Locates arc-length `s` as (segment index, fraction along it).
    /// Values within `snap` of a vertex station land exactly on the vertex.
    fn locate(&self, stations: &[f64], s: f64) -> (usize, f64) {
        let total = *stations.last().unwrap();
        let snap = 1e-12 * total.max(1.0);
        let last_seg = self.segment_count() - 1;
        if s <= snap {
            return (0, 0.0);
        }
        if s >= total - snap {
            return (last_seg, 1.0);
        }
        let k = match stations.binary_search_by(|x| x.total_cmp(&s)) {
            Ok(k) => return (k.min(last_seg), if k > last_seg { 1.0 } else { 0.0 }),
            Err(k) => k - 1,
        };
        if (stations[k + 1] - s).abs() <= snap {
            return (k, 1.0);
        }
        if (s - stations[k]).abs() <= snap {
            return (k, 0.0);
        }
        (k, (s - stations[k]) / (stations[k + 1] - stations[k]))
    }

    fn lerp(&self, k: usize, t: f64) -> Vec<f64> {
        if t == 0.0 {
            return self.point(k).to_vec();
        }
        if t == 1.0 {
            return self.point(k + 1).to_vec();
        }
        self.point(k)
            .iter()
            .zip(self.point(k + 1))
            .map(|(a, b)| a + t * (b - a))
            .collect()
    }

    /// Point at arc-length `s` from the start (clamped to the curve).
    pub fn point_at(&self, s: f64) -> Vec<f64> {
        let stations = self.stations();
        let (k, t) = self.locate(&stations, s);
        self.lerp(k, t)
    }

    fn segment_tangent(&self, k: usize) -> Vec<f64> {
        let a = self.point(k);
        let b = self.point(k + 1);
        let l = dist(a, b);
        a.iter().zip(b).map(|(x, y)| (y - x) / l).collect()
    }

    /// Unit tangent at arc-length `s`. At a vertex, `side` picks the
    /// incoming or outgoing segment; at the curve ends the only available
    /// segment is used.
    pub fn tangent_at(&self, s: f64, side: Side) -> Vec<f64> {
        let stations = self.stations();
        let (k, t) = self.locate(&stations, s);
        let last_seg = self.segment_count() - 1;
        let seg = match (t, side) {
            (t, Side::Before) if t == 0.0 && k > 0 => k - 1,
            (t, Side::After) if t == 1.0 && k < last_seg => k + 1,
            _ => k,
        };
        self.segment_tangent(seg)
    }

    /// Midpoint-rule discretization: one atom per segment.
    pub fn to_varifold(&self) -> DiscreteVarifold {
        let m = self.segment_count();
        let d = self.dim;
        let mut centers = Vec::with_capacity(m * d);
        let mut tangents = Vec::with_capacity(m * d);
        let mut weights = Vec::with_capacity(m);
        for k in 0..m {
            let a = self.point(k);
            let b = self.point(k + 1);
            let l = dist(a, b);
            centers.extend(a.iter().zip(b).map(|(x, y)| 0.5 * (x + y)));
            tangents.extend(a.iter().zip(b).map(|(x, y)| (y - x) / l));
            weights.push(l);
        }
        DiscreteVarifold {
            dim: d,
            centers,
            tangents,
            weights,
        }
    }

    /// Subdivides every segment into equal pieces no longer than `step`.
    /// Original vertices are kept exactly.
    pub fn resample(&self, step: f64) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "resample step must be positive, got {step}"
            )));
        }
        let d = self.dim;
        let mut points = Vec::new();
        for k in 0..self.segment_count() {
            let a = self.point(k);
            let b = self.point(k + 1);
            let pieces = ((dist(a, b) / step) - 1e-9).ceil().max(1.0) as usize;
            points.extend_from_slice(a);
            for i in 1..pieces {
                let t = i as f64 / pieces as f64;
                points.extend(a.iter().zip(b).map(|(x, y)| x + t * (y - x)));
            }
        }
        points.extend_from_slice(self.last());
        debug_assert_eq!(points.len() % d, 0);
        Self::new(d, points)
    }

    /// Appends `other`, dropping its first point, which must coincide with
    /// this curve's last point within [`JUNCTION_TOL`].
    pub fn concat(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        let gap = dist(self.last(), other.first());
        if gap > JUNCTION_TOL {
            return Err(Error::JunctionMismatch { gap });
        }
        let mut points = self.points.clone();
        points.extend_from_slice(&other.points[self.dim..]);
        Self::new(self.dim, points)
    }

    /// The portion between arc-length stations `s0 < s1`, with
    /// interpolated endpoints.
    pub fn subcurve(&self, s0: f64, s1: f64) -> Result<Self> {
        let stations = self.stations();
        let total = *stations.last().unwrap();
        let slack = 1e-12 * total.max(1.0);
        if !(s0 >= -slack && s1 <= total + slack && s0 < s1) || !s0.is_finite() || !s1.is_finite()
        {
            return Err(Error::StationOutOfRange {
                s0,
                s1,
                length: total,
            });
        }
        let (k0, t0) = self.locate(&stations, s0);
        let (k1, t1) = self.locate(&stations, s1);
        let mut points = self.lerp(k0, t0);
        // First vertex strictly after s0 and last vertex strictly before s1.
        let lo = if t0 == 1.0 { k0 + 2 } else { k0 + 1 };
        let hi = if t1 == 0.0 { k1 } else { k1 + 1 };
        for v in lo..hi {
            points.extend_from_slice(self.point(v));
        }
        points.extend(self.lerp(k1, t1));
        Self::new(self.dim, points)
    }

    /// Minimum distance from `p` to this polyline.
    pub fn distance_to_point(&self, p: &[f64]) -> f64 {
        (0..self.segment_count())
            .map(|k| point_segment_distance(p, self.point(k), self.point(k + 1)))
            .fold(f64::INFINITY, f64::min)
    }

    /// Minimum distance between two polylines.
    pub fn distance_to_curve(&self, other: &Self) -> f64 {
        let mut best = f64::INFINITY;
        for k in 0..self.segment_count() {
            for l in 0..other.segment_count() {
                let d = segment_distance(
                    self.point(k),
                    self.point(k + 1),
                    other.point(l),
                    other.point(l + 1),
                );
                best = best.min(d);
            }
        }
        best
    }
}

/// Symmetric Hausdorff distance between two polylines, evaluated on
/// vertices densified to spacing `resolution` against the exact segments of
/// the other curve. The result underestimates the true value by at most
/// `resolution / 2`.
pub fn hausdorff(a: &PolygonalCurve, b: &PolygonalCurve, resolution: f64) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    let da = a.resample(resolution)?;
    let db = b.resample(resolution)?;
    let ab = da.points().map(|p| b.distance_to_point(p)).fold(0.0, f64::max);
    let ba = db.points().map(|p| a.distance_to_point(p)).fold(0.0, f64::max);
    Ok(ab.max(ba))
}

/// One weighted Dirac mass `weight · δ(center, tangent)`.
#[derive(Debug, Clone, PartialEq)]
pub struct VarifoldAtom {
    pub center: Vec<f64>,
    pub tangent: Vec<f64>,
    pub weight: f64,
}

/// A finite sum of varifold atoms, stored column-wise.
///
/// The empty varifold (no atoms) is allowed: it represents the degenerate
/// path from the root to itself.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteVarifold {
    dim: usize,
    centers: Vec<f64>,
    tangents: Vec<f64>,
    weights: Vec<f64>,
}

impl DiscreteVarifold {
    pub fn empty(dim: usize) -> Self {
        Self {
            dim,
            centers: Vec::new(),
            tangents: Vec::new(),
            weights: Vec::new(),
        }
    }

    pub fn from_atoms(dim: usize, atoms: &[VarifoldAtom]) -> Result<Self> {
        let mut out = Self::empty(dim);
        for (i, a) in atoms.iter().enumerate() {
            if a.center.len() != dim || a.tangent.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: a.center.len().max(a.tangent.len()),
                });
            }
            if !(a.weight > 0.0 && a.weight.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "atom {i} has non-positive weight {}",
                    a.weight
                )));
            }
            if (norm(&a.tangent) - 1.0).abs() > UNIT_TOL {
                return Err(Error::InvalidArgument(format!(
                    "atom {i} tangent is not a unit vector"
                )));
            }
            out.centers.extend_from_slice(&a.center);
            out.tangents.extend_from_slice(&a.tangent);
            out.weights.push(a.weight);
        }
        Ok(out)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn center(&self, i: usize) -> &[f64] {
        &self.centers[i * self.dim..(i + 1) * self.dim]
    }

    pub fn tangent(&self, i: usize) -> &[f64] {
        &self.tangents[i * self.dim..(i + 1) * self.dim]
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn atom(&self, i: usize) -> VarifoldAtom {
        VarifoldAtom {
            center: self.center(i).to_vec(),
            tangent: self.tangent(i).to_vec(),
            weight: self.weights[i],
        }
    }

    pub fn atoms(&self) -> impl Iterator<Item = VarifoldAtom> + '_ {
        (0..self.len()).map(|i| self.atom(i))
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub(crate) fn centers_flat(&self) -> &[f64] {
        &self.centers
    }

    pub(crate) fn tangents_flat(&self) -> &[f64] {
        &self.tangents
    }

    pub(crate) fn weights_slice(&self) -> &[f64] {
        &self.weights
    }

    /// Atom-list union, i.e. the sum of the two measures.
    pub fn union(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        let mut out = self.clone();
        out.centers.extend_from_slice(&other.centers);
        out.tangents.extend_from_slice(&other.tangents);
        out.weights.extend_from_slice(&other.weights);
        Ok(out)
    }
}
