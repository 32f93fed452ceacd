//! Pareto dominance, front maintenance and exact hypervolume.
//!
//! Everything here uses the maximization convention: a point is better when
//! its coordinates are larger, and the reference point bounds the measured
//! region from below. Dominance uses exact floating-point comparison.

use std::cmp::Ordering;
use std::ops::Deref;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{check_dim, Error, Result};

/// A K-dimensional objective value in maximization convention.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveVector(Vec<f64>);

impl ObjectiveVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::invalid(format!(
                "objective vectors need at least 2 entries, got {}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("objective vector"));
        }
        Ok(ObjectiveVector(values))
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for ObjectiveVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Returns true iff `a` is at least as large as `b` everywhere and strictly
/// larger somewhere.
pub fn dominates(a: &[f64], b: &[f64]) -> Result<bool> {
    check_dim(a.len(), b.len())?;
    Ok(dominates_unchecked(a, b))
}

#[inline]
pub(crate) fn dominates_unchecked(a: &[f64], b: &[f64]) -> bool {
    let mut strict = false;
    for (&ai, &bi) in a.iter().zip(b) {
        if ai < bi {
            return false;
        }
        if ai > bi {
            strict = true;
        }
    }
    strict
}

#[inline]
fn weakly_dominates(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(ai, bi)| ai >= bi)
}

#[inline]
fn strictly_above(p: &[f64], reference: &[f64]) -> bool {
    p.iter().zip(reference).all(|(pi, ri)| pi > ri)
}

/// Lexicographic descending order; the canonical storage order of a front.
fn lex_desc(a: &[f64], b: &[f64]) -> Ordering {
    for (ai, bi) in a.iter().zip(b) {
        match bi.total_cmp(ai) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    Ordering::Equal
}

/// The non-dominated subset of `ys`, duplicates collapsed, in lexicographic
/// descending order.
pub fn nondominated(ys: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let Some(first) = ys.first() else {
        return Ok(Vec::new());
    };
    let k = first.len();
    for y in ys {
        check_dim(k, y.len())?;
    }
    let mut sorted: Vec<&Vec<f64>> = ys.iter().collect();
    sorted.sort_by(|a, b| lex_desc(a, b));
    sorted.dedup_by(|a, b| a == b);
    // After a lexicographic descending sort, a point can only be dominated
    // by points that precede it.
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(sorted.len());
    for y in sorted {
        if !out.iter().any(|p| weakly_dominates(p, y)) {
            out.push(y.clone());
        }
    }
    Ok(out)
}

/// A mutually non-dominated set of objective vectors plus a reference point.
///
/// Points are stored flat, in lexicographic descending order. Points that do
/// not strictly dominate the reference are kept but measure zero volume.
#[derive(Debug, Clone, PartialEq)]
pub struct ParetoFront {
    k: usize,
    data: Vec<f64>,
    reference: Vec<f64>,
}

impl ParetoFront {
    pub fn new(reference: Vec<f64>) -> Result<Self> {
        ObjectiveVector::new(reference.clone())?;
        Ok(ParetoFront {
            k: reference.len(),
            data: Vec::new(),
            reference,
        })
    }

    pub fn from_points(points: &[Vec<f64>], reference: Vec<f64>) -> Result<Self> {
        let mut front = ParetoFront::new(reference)?;
        for p in points {
            front.insert(p)?;
        }
        Ok(front)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.k
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn reference(&self) -> &[f64] {
        &self.reference
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.k)
    }

    pub fn to_vecs(&self) -> Vec<Vec<f64>> {
        self.points().map(<[f64]>::to_vec).collect()
    }

    fn check_point(&self, y: &[f64]) -> Result<()> {
        check_dim(self.k, y.len())?;
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("objective vector"));
        }
        Ok(())
    }

    /// True when some stored point is at least as good as `y` everywhere.
    pub fn weakly_dominates(&self, y: &[f64]) -> bool {
        self.points().any(|p| weakly_dominates(p, y))
    }

    /// Adds `y`, dropping any points it dominates. Returns false (and leaves
    /// the front untouched) when `y` is weakly dominated.
    pub fn insert(&mut self, y: &[f64]) -> Result<bool> {
        self.check_point(y)?;
        Ok(self.insert_unchecked(y))
    }

    pub(crate) fn insert_unchecked(&mut self, y: &[f64]) -> bool {
        if self.weakly_dominates(y) {
            return false;
        }
        let k = self.k;
        let mut write = 0;
        let mut pos = None;
        for read in 0..self.len() {
            let range = read * k..(read + 1) * k;
            if weakly_dominates(y, &self.data[range.clone()]) {
                continue;
            }
            if pos.is_none() && lex_desc(y, &self.data[range.clone()]) == Ordering::Less {
                pos = Some(write);
            }
            if write != read {
                self.data.copy_within(range, write * k);
            }
            write += 1;
        }
        self.data.truncate(write * k);
        let at = pos.unwrap_or(write) * k;
        self.data.splice(at..at, y.iter().copied());
        true
    }

    /// Dominated volume between the front and the reference point.
    pub fn hypervolume(&self) -> f64 {
        let pts: Vec<&[f64]> = self.points().filter(|p| strictly_above(p, &self.reference)).collect();
        hv_filtered(pts, &self.reference)
    }

    /// Hypervolume gained by adding `y` to the front.
    pub fn hvi(&self, y: &[f64]) -> Result<f64> {
        self.check_point(y)?;
        Ok(self.hvi_unchecked(y))
    }

    pub(crate) fn hvi_unchecked(&self, y: &[f64]) -> f64 {
        let r = &self.reference;
        if !strictly_above(y, r) || self.weakly_dominates(y) {
            return 0.0;
        }
        if self.k == 2 {
            return hvi_2d(self.points(), y, r);
        }
        // Volume of [r, y] minus the part already covered by the front,
        // which is the union of the boxes [r, min(p, y)].
        let own: f64 = y.iter().zip(r).map(|(yi, ri)| yi - ri).product();
        let clipped: Vec<Vec<f64>> = self
            .points()
            .map(|p| p.iter().zip(y).map(|(pi, yi)| pi.min(*yi)).collect::<Vec<f64>>())
            .filter(|c| strictly_above(c, r))
            .collect();
        let covered = hv_filtered(clipped.iter().map(Vec::as_slice).collect(), r);
        (own - covered).max(0.0)
    }
}

/// Hypervolume of the front, see [`ParetoFront::hypervolume`].
pub fn hypervolume(front: &ParetoFront) -> Result<f64> {
    Ok(front.hypervolume())
}

/// Hypervolume improvement of `y` with respect to `front`.
pub fn hvi(y: &[f64], front: &ParetoFront) -> Result<f64> {
    front.hvi(y)
}

/// Hypervolume of an arbitrary point set (dominated points allowed).
pub fn hypervolume_of(points: &[Vec<f64>], reference: &[f64]) -> Result<f64> {
    if reference.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("reference point"));
    }
    for p in points {
        check_dim(reference.len(), p.len())?;
        if p.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("objective vector"));
        }
    }
    let pts: Vec<&[f64]> = points
        .iter()
        .map(Vec::as_slice)
        .filter(|p| strictly_above(p, reference))
        .collect();
    Ok(hv_filtered(pts, reference))
}

/// Exact hypervolume of points that all strictly dominate `r`.
fn hv_filtered(mut pts: Vec<&[f64]>, r: &[f64]) -> f64 {
    if pts.is_empty() {
        return 0.0;
    }
    match r.len() {
        1 => pts.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max) - r[0],
        2 => {
            pts.sort_by(|a, b| b[0].total_cmp(&a[0]));
            hv_2d_sorted(&pts, r)
        }
        3 => hv_3d(pts, r),
        k => {
            // Slice along the last coordinate: between consecutive levels the
            // cross-section is the (k-1)-dimensional hypervolume of all points
            // at or above the level.
            pts.sort_by(|a, b| b[k - 1].total_cmp(&a[k - 1]));
            let mut total = 0.0;
            for i in 0..pts.len() {
                let next = pts.get(i + 1).map_or(r[k - 1], |p| p[k - 1]);
                let depth = pts[i][k - 1] - next;
                if depth > 0.0 {
                    let slice: Vec<&[f64]> = pts[..=i].iter().map(|p| &p[..k - 1]).collect();
                    total += depth * hv_filtered(slice, &r[..k - 1]);
                }
            }
            total
        }
    }
}

/// Sweep over points sorted by descending first coordinate.
fn hv_2d_sorted(pts: &[&[f64]], r: &[f64]) -> f64 {
    let mut area = 0.0;
    let mut ymax = r[1];
    for (i, p) in pts.iter().enumerate() {
        ymax = ymax.max(p[1]);
        let next = pts.get(i + 1).map_or(r[0], |q| q[0]);
        area += (p[0] - next) * (ymax - r[1]);
    }
    area
}

/// Dimension sweep along the third coordinate with an incrementally
/// maintained two-dimensional staircase.
fn hv_3d(mut pts: Vec<&[f64]>, r: &[f64]) -> f64 {
    pts.sort_by(|a, b| b[2].total_cmp(&a[2]));
    let mut stair = Staircase::default();
    let mut area = 0.0;
    let mut total = 0.0;
    for i in 0..pts.len() {
        area += stair.insert(pts[i][0], pts[i][1], r);
        let next = pts.get(i + 1).map_or(r[2], |p| p[2]);
        total += area * (pts[i][2] - next);
    }
    total
}

/// Exclusive area of `q` against points given in descending-first-coordinate
/// order. `q` must strictly dominate `r` and not be weakly dominated.
fn hvi_2d<'a>(points: impl Iterator<Item = &'a [f64]>, q: &[f64], r: &[f64]) -> f64 {
    let (qx, qy) = (q[0], q[1]);
    let mut total = 0.0;
    let mut upper = f64::INFINITY;
    let mut height = r[1];
    for p in points {
        if p[0] <= r[0] {
            break;
        }
        if p[1] <= r[1] {
            continue;
        }
        let hi = upper.min(qx);
        if hi > p[0] && qy > height {
            total += (hi - p[0]) * (qy - height);
        }
        upper = p[0];
        height = height.max(p[1]);
        if height >= qy {
            return total;
        }
    }
    let hi = upper.min(qx);
    if hi > r[0] && qy > height {
        total += (hi - r[0]) * (qy - height);
    }
    total
}

/// Non-dominated 2-D points, descending x / ascending y.
#[derive(Default)]
struct Staircase {
    pts: Vec<[f64; 2]>,
}

impl Staircase {
    /// Inserts a point strictly above `r` and returns the area it adds.
    fn insert(&mut self, x: f64, y: f64, r: &[f64]) -> f64 {
        if self.pts.iter().any(|p| p[0] >= x && p[1] >= y) {
            return 0.0;
        }
        let gain = hvi_2d(self.pts.iter().map(|p| p.as_slice()), &[x, y], r);
        self.pts.retain(|p| !(x >= p[0] && y >= p[1]));
        let at = self.pts.partition_point(|p| p[0] > x);
        self.pts.insert(at, [x, y]);
        gain
    }
}

/// Monte-Carlo estimate of a dominated volume with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub value: f64,
    pub std_error: f64,
}

/// Uniform Monte-Carlo estimate of the front's hypervolume, sampling the
/// box spanned by the reference point and the coordinate-wise maximum of
/// the front. Independent of the exact sweep algorithms; used as an oracle.
pub fn hv_mc_oracle(front: &ParetoFront, n_samples: usize, seed: u64) -> Result<McEstimate> {
    if n_samples == 0 {
        return Err(Error::invalid("n_samples must be positive"));
    }
    let r = front.reference();
    let pts: Vec<&[f64]> = front.points().filter(|p| strictly_above(p, r)).collect();
    if pts.is_empty() {
        return Ok(McEstimate {
            value: 0.0,
            std_error: 0.0,
        });
    }
    let k = front.k();
    let upper: Vec<f64> = (0..k)
        .map(|i| pts.iter().map(|p| p[i]).fold(f64::NEG_INFINITY, f64::max))
        .collect();
    let volume: f64 = upper.iter().zip(r).map(|(u, l)| u - l).product();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut u = vec![0.0; k];
    let mut hits = 0usize;
    for _ in 0..n_samples {
        for i in 0..k {
            u[i] = r[i] + rng.random::<f64>() * (upper[i] - r[i]);
        }
        if pts.iter().any(|p| weakly_dominates(p, &u)) {
            hits += 1;
        }
    }
    let n = n_samples as f64;
    let frac = hits as f64 / n;
    Ok(McEstimate {
        value: volume * frac,
        std_error: volume * (frac * (1.0 - frac) / n).sqrt(),
    })
}
