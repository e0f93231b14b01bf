//! Finitely supported measures, piecewise-constant 1D densities, and the
//! mass/min/interpolation/pushforward algebra shared by every solver.
//!
//! A [`DiscreteMeasure`] is always kept in canonical form: atoms sorted
//! lexicographically, atoms within [`MERGE_TOL`] (sup-norm) merged with their
//! weights summed, and zero-weight atoms dropped. LP columns built from two
//! canonical measures are therefore distinct.

use std::cmp::Ordering;

use crate::error::{Error, Result};

/// Atoms closer than this in sup-norm are the same atom.
pub const MERGE_TOL: f64 = 1e-12;

fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            Ordering::Equal => continue,
            other => return other,
        }
    }
    a.len().cmp(&b.len())
}

fn sup_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// A finitely supported positive measure on R^d.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    dim: usize,
    points: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl DiscreteMeasure {
    /// Builds a canonical measure. Rejects non-finite coordinates, negative or
    /// non-finite weights and points of the wrong dimension.
    pub fn new(dim: usize, points: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidMeasure("dimension must be positive".into()));
        }
        if points.len() != weights.len() {
            return Err(Error::InvalidMeasure(format!(
                "{} points but {} weights",
                points.len(),
                weights.len()
            )));
        }
        for p in &points {
            if p.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: p.len(),
                });
            }
            if p.iter().any(|c| !c.is_finite()) {
                return Err(Error::InvalidMeasure(format!("non-finite point {p:?}")));
            }
        }
        for &w in &weights {
            if !w.is_finite() || w < 0.0 {
                return Err(Error::InvalidMeasure(format!("invalid weight {w}")));
            }
        }
        Ok(Self::canonical(dim, points, weights))
    }

    /// The zero measure.
    pub fn empty(dim: usize) -> Self {
        Self {
            dim: dim.max(1),
            points: Vec::new(),
            weights: Vec::new(),
        }
    }

    /// 1D convenience constructor from `(position, weight)` pairs.
    pub fn from_1d(atoms: &[(f64, f64)]) -> Result<Self> {
        let (points, weights) = atoms.iter().map(|&(x, w)| (vec![x], w)).unzip();
        Self::new(1, points, weights)
    }

    /// Sum of unit Dirac masses at the given 1D positions.
    pub fn unit_diracs_1d(xs: &[f64]) -> Result<Self> {
        let atoms: Vec<_> = xs.iter().map(|&x| (x, 1.0)).collect();
        Self::from_1d(&atoms)
    }

    fn canonical(dim: usize, points: Vec<Vec<f64>>, weights: Vec<f64>) -> Self {
        let mut atoms: Vec<(Vec<f64>, f64)> = points
            .into_iter()
            .zip(weights)
            .filter(|(_, w)| *w > 0.0)
            .collect();
        atoms.sort_by(|a, b| lex_cmp(&a.0, &b.0));

        let mut out_points: Vec<Vec<f64>> = Vec::with_capacity(atoms.len());
        let mut out_weights: Vec<f64> = Vec::with_capacity(atoms.len());
        for (p, w) in atoms {
            // Sorted by first coordinate, so any representative within
            // MERGE_TOL lies in a short window at the back.
            let mut target = None;
            for k in (0..out_points.len()).rev() {
                if p[0] - out_points[k][0] > MERGE_TOL {
                    break;
                }
                if sup_dist(&out_points[k], &p) <= MERGE_TOL {
                    target = Some(k);
                    break;
                }
            }
            match target {
                Some(k) => out_weights[k] += w,
                None => {
                    out_points.push(p);
                    out_weights.push(w);
                }
            }
        }
        Self {
            dim,
            points: out_points,
            weights: out_weights,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn atoms(&self) -> impl Iterator<Item = (&[f64], f64)> + '_ {
        self.points
            .iter()
            .map(Vec::as_slice)
            .zip(self.weights.iter().copied())
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Index of the atom located at `p` (within [`MERGE_TOL`]), if any.
    pub fn find_atom(&self, p: &[f64]) -> Option<usize> {
        if p.len() != self.dim || self.points.is_empty() {
            return None;
        }
        let lo = p[0] - MERGE_TOL;
        let start = self.points.partition_point(|q| q[0] < lo);
        self.points[start..]
            .iter()
            .take_while(|q| q[0] <= p[0] + MERGE_TOL)
            .position(|q| sup_dist(q, p) <= MERGE_TOL)
            .map(|k| start + k)
    }

    /// Weight at `p`, zero off the support.
    pub fn weight_at(&self, p: &[f64]) -> f64 {
        self.find_atom(p).map_or(0.0, |i| self.weights[i])
    }

    /// Mass of atoms whose first coordinate lies in `[lo, hi]`.
    pub fn mass_in(&self, lo: f64, hi: f64) -> f64 {
        self.atoms()
            .filter(|(p, _)| p[0] >= lo && p[0] <= hi)
            .map(|(_, w)| w)
            .sum()
    }

    /// Same atoms with every weight multiplied by `factor >= 0`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let weights = self.weights.iter().map(|w| w * factor).collect();
        Self::new(self.dim, self.points.clone(), weights)
    }

    /// `self + other`, canonicalized.
    pub fn add(&self, other: &Self) -> Result<Self> {
        check_dim(self.dim, other.dim)?;
        let points = self.points.iter().chain(&other.points).cloned().collect();
        let weights = self.weights.iter().chain(&other.weights).copied().collect();
        Ok(Self::canonical(self.dim, points, weights))
    }

    /// `(self - other)_+` evaluated atom by atom; weights below `tol` vanish.
    pub fn saturating_sub(&self, other: &Self, tol: f64) -> Result<Self> {
        check_dim(self.dim, other.dim)?;
        let weights = self
            .atoms()
            .map(|(p, w)| {
                let d = w - other.weight_at(p);
                if d > tol {
                    d
                } else {
                    0.0
                }
            })
            .collect();
        Ok(Self::canonical(self.dim, self.points.clone(), weights))
    }
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// Closed interval on the real line.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn length(&self) -> f64 {
        (self.hi - self.lo).max(0.0)
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }
}

/// A density on R given by breakpoints `b_0 < ... < b_k` and constant values
/// on each `[b_i, b_{i+1}]`. Zero outside `[b_0, b_k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseConstantDensity {
    breaks: Vec<f64>,
    values: Vec<f64>,
}

impl PiecewiseConstantDensity {
    pub fn new(breaks: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if breaks.len() != values.len() + 1 {
            return Err(Error::InvalidMeasure(format!(
                "{} breakpoints need {} values, got {}",
                breaks.len(),
                breaks.len().saturating_sub(1),
                values.len()
            )));
        }
        if breaks.iter().any(|b| !b.is_finite()) {
            return Err(Error::InvalidMeasure("non-finite breakpoint".into()));
        }
        if breaks.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidMeasure(
                "breakpoints must be strictly increasing".into(),
            ));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidMeasure("invalid density value".into()));
        }
        Ok(Self { breaks, values })
    }

    /// Constant density `value` on `[lo, hi]`.
    pub fn uniform(lo: f64, hi: f64, value: f64) -> Result<Self> {
        Self::new(vec![lo, hi], vec![value])
    }

    pub fn zero() -> Self {
        Self {
            breaks: vec![0.0, 1.0],
            values: vec![0.0],
        }
    }

    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn support(&self) -> Interval {
        Interval::new(self.breaks[0], self.breaks[self.breaks.len() - 1])
    }

    pub fn total_mass(&self) -> f64 {
        self.values
            .iter()
            .zip(self.breaks.windows(2))
            .map(|(v, w)| v * (w[1] - w[0]))
            .sum()
    }

    /// Density at `x`; right-continuous at interior breakpoints.
    pub fn value_at(&self, x: f64) -> f64 {
        let last = self.breaks.len() - 1;
        if x < self.breaks[0] || x > self.breaks[last] {
            return 0.0;
        }
        if x == self.breaks[last] {
            return self.values[last - 1];
        }
        let i = self.breaks.partition_point(|&b| b <= x) - 1;
        self.values[i]
    }

    /// Integral of the density over `[lo, hi]`.
    pub fn mass_between(&self, lo: f64, hi: f64) -> f64 {
        if hi <= lo {
            return 0.0;
        }
        self.values
            .iter()
            .zip(self.breaks.windows(2))
            .map(|(v, w)| v * (w[1].min(hi) - w[0].max(lo)).max(0.0))
            .sum()
    }

    /// The same density on a finer breakpoint grid (`grid` must contain the
    /// density's support endpoints or extend beyond them).
    pub fn refine_to(&self, grid: &[f64]) -> Result<Self> {
        let values = grid
            .windows(2)
            .map(|w| self.value_at(0.5 * (w[0] + w[1])))
            .collect();
        Self::new(grid.to_vec(), values)
    }
}

/// Sorted union of breakpoint grids with near-duplicates removed.
pub fn union_grid<'a>(grids: impl IntoIterator<Item = &'a [f64]>) -> Vec<f64> {
    let mut all: Vec<f64> = grids.into_iter().flatten().copied().collect();
    all.sort_by(f64::total_cmp);
    let mut out: Vec<f64> = Vec::with_capacity(all.len());
    for b in all {
        match out.last() {
            Some(&last) if b - last <= 1e-12 * (1.0 + last.abs()) => {}
            _ => out.push(b),
        }
    }
    out
}

/// Transported mass budget `m >= 0`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, serde::Serialize)]
pub struct MassParameter(f64);

impl MassParameter {
    pub fn new(m: f64) -> Result<Self> {
        if !m.is_finite() || m < 0.0 {
            return Err(Error::MassOutOfRange {
                m,
                lo: 0.0,
                hi: f64::INFINITY,
            });
        }
        Ok(Self(m))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// Checks `0 <= m <= min(masses)` up to a relative slack.
    pub fn check_against(self, masses: &[f64]) -> Result<()> {
        let hi = masses.iter().copied().fold(f64::INFINITY, f64::min);
        if self.0 > hi + 1e-9 * (1.0 + hi) {
            return Err(Error::MassOutOfRange { m: self.0, lo: 0.0, hi });
        }
        Ok(())
    }
}

/// Operations shared by both measure kinds.
pub trait Measure: Sized {
    fn total_mass(&self) -> f64;

    /// Pointwise minimum of a nonempty family.
    fn pointwise_min(measures: &[Self]) -> Result<Self>;
}

impl Measure for DiscreteMeasure {
    fn total_mass(&self) -> f64 {
        DiscreteMeasure::total_mass(self)
    }

    fn pointwise_min(measures: &[Self]) -> Result<Self> {
        let (first, rest) = measures
            .split_first()
            .ok_or_else(|| Error::InvalidMeasure("minimum of an empty family".into()))?;
        for m in rest {
            check_dim(first.dim, m.dim)?;
        }
        let weights = first
            .atoms()
            .map(|(p, w)| rest.iter().fold(w, |acc, m| acc.min(m.weight_at(p))))
            .collect();
        Ok(Self::canonical(first.dim, first.points.clone(), weights))
    }
}

impl Measure for PiecewiseConstantDensity {
    fn total_mass(&self) -> f64 {
        PiecewiseConstantDensity::total_mass(self)
    }

    fn pointwise_min(measures: &[Self]) -> Result<Self> {
        if measures.is_empty() {
            return Err(Error::InvalidMeasure("minimum of an empty family".into()));
        }
        let grid = union_grid(measures.iter().map(|d| d.breaks.as_slice()));
        let values = grid
            .windows(2)
            .map(|w| {
                let mid = 0.5 * (w[0] + w[1]);
                measures
                    .iter()
                    .map(|d| d.value_at(mid))
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        Self::new(grid, values)
    }
}

/// `|mu|`.
pub fn total_mass<M: Measure>(mu: &M) -> f64 {
    mu.total_mass()
}

pub fn pointwise_min<M: Measure>(measures: &[M]) -> Result<M> {
    M::pointwise_min(measures)
}

/// `(1 - t) nu0 + t nu1` on the union of supports.
pub fn lerp(nu0: &DiscreteMeasure, nu1: &DiscreteMeasure, t: f64) -> Result<DiscreteMeasure> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::OutOfRange(format!("interpolation parameter {t}")));
    }
    check_dim(nu0.dim, nu1.dim)?;
    let points = nu0.points.iter().chain(&nu1.points).cloned().collect();
    let weights = nu0
        .weights
        .iter()
        .map(|w| (1.0 - t) * w)
        .chain(nu1.weights.iter().map(|w| t * w))
        .collect();
    Ok(DiscreteMeasure::canonical(nu0.dim, points, weights))
}

/// Cell-midpoint discretization of a 1D density.
///
/// Cells come from the uniform grid `k / cells_per_unit` refined by the
/// density's own breakpoints, so the density is constant on every cell and
/// each atom carries exactly the mass of its cell.
pub fn discretize(f: &PiecewiseConstantDensity, cells_per_unit: u32) -> Result<DiscreteMeasure> {
    if cells_per_unit == 0 {
        return Err(Error::OutOfRange("cells_per_unit must be positive".into()));
    }
    let h = 1.0 / f64::from(cells_per_unit);
    let support = f.support();
    let first = (support.lo / h).ceil() as i64;
    let last = (support.hi / h).floor() as i64;
    let uniform: Vec<f64> = (first..=last).map(|k| k as f64 * h).collect();
    let grid = union_grid([f.breaks(), uniform.as_slice()]);

    let mut points = Vec::with_capacity(grid.len());
    let mut weights = Vec::with_capacity(grid.len());
    for w in grid.windows(2) {
        let mid = 0.5 * (w[0] + w[1]);
        points.push(vec![mid]);
        weights.push(f.value_at(mid) * (w[1] - w[0]));
    }
    DiscreteMeasure::new(1, points, weights)
}

/// `T_# mu`: atoms moved to `T(x)` and merged on collision.
pub fn pushforward<F>(mu: &DiscreteMeasure, map: F) -> Result<DiscreteMeasure>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let points: Vec<Vec<f64>> = mu.points.iter().map(|p| map(p)).collect();
    let dim = points.first().map_or(mu.dim, Vec::len);
    DiscreteMeasure::new(dim, points, mu.weights.clone())
}

/// Whether `sigma <= mu` atom by atom, up to `tol`.
pub fn is_submeasure(sigma: &DiscreteMeasure, mu: &DiscreteMeasure, tol: f64) -> bool {
    if sigma.is_empty() {
        return true;
    }
    sigma.dim == mu.dim && sigma.atoms().all(|(p, w)| w <= mu.weight_at(p) + tol)
}

/// Fixed-width histogram of the first coordinate of a measure.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct Histogram {
    pub origin: f64,
    pub width: f64,
    pub masses: Vec<f64>,
}

impl Histogram {
    /// Bins `[origin + k w, origin + (k+1) w)`, grown to cover every atom.
    pub fn of(mu: &DiscreteMeasure, origin: f64, width: f64) -> Result<Self> {
        if width <= 0.0 || width.is_nan() {
            return Err(Error::OutOfRange(format!("bin width {width}")));
        }
        let mut origin = origin;
        if let Some(min) = mu.points.iter().map(|p| p[0]).reduce(f64::min) {
            while min < origin {
                origin -= width;
            }
        }
        let mut masses: Vec<f64> = Vec::new();
        for (p, w) in mu.atoms() {
            let k = ((p[0] - origin) / width).floor().max(0.0) as usize;
            if k >= masses.len() {
                masses.resize(k + 1, 0.0);
            }
            masses[k] += w;
        }
        Ok(Self {
            origin,
            width,
            masses,
        })
    }

    pub fn edges(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        (0..self.masses.len()).map(|k| {
            let lo = self.origin + k as f64 * self.width;
            (lo, lo + self.width)
        })
    }

    /// Per-bin mass divided by bin width.
    pub fn densities(&self) -> Vec<f64> {
        self.masses.iter().map(|m| m / self.width).collect()
    }

    /// `sum_bins |hist - int_bin f|`, including mass of `f` outside the bins.
    pub fn l1_distance(&self, f: &PiecewiseConstantDensity) -> f64 {
        let inside: f64 = self
            .edges()
            .zip(&self.masses)
            .map(|((lo, hi), m)| (m - f.mass_between(lo, hi)).abs())
            .sum();
        let covered_lo = self.origin;
        let covered_hi = self.origin + self.masses.len() as f64 * self.width;
        let support = f.support();
        inside
            + f.mass_between(support.lo, covered_lo)
            + f.mass_between(covered_hi, support.hi)
    }
}
