//! Spacetime strips `[0, T] × [0, L]` in straightened coordinates and
//! unit-speed causal envelopes.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::{Expr, Var};

#[derive(Debug, Clone, PartialEq)]
pub enum GeometryKind {
    /// Half-Minkowski space whose boundary moves with constant speed `a`.
    HalfMinkowski { boundary_speed: f64 },
    /// `g = -β² dt² + α² Σ dx_j²`, used only for coefficient analysis.
    DiagonalMetric { lapse: Expr, spatial_factor: Expr },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Geometry {
    pub spatial_dim: usize,
    pub kind: GeometryKind,
    pub time_horizon: f64,
    pub length: f64,
}

/// Number of samples per axis used to bound metric functions on the strip.
const METRIC_SAMPLES: usize = 41;

pub fn make_half_minkowski(n: usize, a: f64, time_horizon: f64, length: f64) -> Result<Geometry> {
    if n == 0 {
        return Err(Error::Structural("spatial dimension must be at least 1".into()));
    }
    if !a.is_finite() || a.abs() >= 1.0 {
        return Err(Error::BoundaryNotTimelike { speed: a.abs() });
    }
    check_strip(time_horizon, length)?;
    Ok(Geometry {
        spatial_dim: n,
        kind: GeometryKind::HalfMinkowski { boundary_speed: a },
        time_horizon,
        length,
    })
}

/// A diagonal metric; lapse and spatial factor must be positive on the strip.
pub fn diagonal_metric(
    n: usize,
    lapse: Expr,
    spatial_factor: Expr,
    time_horizon: f64,
    length: f64,
) -> Result<Geometry> {
    if n == 0 {
        return Err(Error::Structural("spatial dimension must be at least 1".into()));
    }
    check_strip(time_horizon, length)?;
    let geometry = Geometry {
        spatial_dim: n,
        kind: GeometryKind::DiagonalMetric { lapse, spatial_factor },
        time_horizon,
        length,
    };
    for (t, z) in geometry.sample_points(METRIC_SAMPLES, METRIC_SAMPLES) {
        let (beta, alpha) = geometry.metric_factors(t, z);
        if !(beta > 0.0 && alpha > 0.0) {
            return Err(Error::Config(format!(
                "metric factors must be positive (β = {beta}, α = {alpha} at t = {t}, z = {z})"
            )));
        }
    }
    Ok(geometry)
}

fn check_strip(time_horizon: f64, length: f64) -> Result<()> {
    if !(time_horizon > 0.0 && time_horizon.is_finite()) {
        return Err(Error::Config(format!("time horizon must be positive, got {time_horizon}")));
    }
    if !(length > 0.0 && length.is_finite()) {
        return Err(Error::Config(format!("length must be positive, got {length}")));
    }
    Ok(())
}

impl Geometry {
    pub fn boundary_speed(&self) -> f64 {
        match self.kind {
            GeometryKind::HalfMinkowski { boundary_speed } => boundary_speed,
            GeometryKind::DiagonalMetric { .. } => 0.0,
        }
    }

    /// Lorentz factor of the boundary rest frame.
    pub fn lorentz_factor(&self) -> f64 {
        let a = self.boundary_speed();
        1.0 / (1.0 - a * a).sqrt()
    }

    pub fn is_flat(&self) -> bool {
        matches!(self.kind, GeometryKind::HalfMinkowski { .. })
    }

    /// `(β, α)` at a point; `(1, 1)` for half-Minkowski.
    pub fn metric_factors(&self, t: f64, z: f64) -> (f64, f64) {
        match &self.kind {
            GeometryKind::HalfMinkowski { .. } => (1.0, 1.0),
            GeometryKind::DiagonalMetric { lapse, spatial_factor } => {
                (lapse.eval_real(t, z), spatial_factor.eval_real(t, z))
            }
        }
    }

    /// `√|det g| = β αⁿ` as an expression.
    pub fn volume_density(&self) -> Expr {
        match &self.kind {
            GeometryKind::HalfMinkowski { .. } => Expr::constant(1.0.into()),
            GeometryKind::DiagonalMetric { lapse, spatial_factor } => {
                let n = self.spatial_dim as f64;
                Expr::Mul(
                    Box::new(lapse.clone()),
                    Box::new(Expr::Pow(
                        Box::new(spatial_factor.clone()),
                        Box::new(Expr::constant(n.into())),
                    )),
                )
            }
        }
    }

    /// Maximal coordinate speed of light: 1 in straightened half-Minkowski,
    /// `max β/α` over a sample lattice otherwise.
    pub fn max_causal_speed(&self) -> f64 {
        match self.kind {
            GeometryKind::HalfMinkowski { .. } => 1.0,
            GeometryKind::DiagonalMetric { .. } => self
                .sample_points(METRIC_SAMPLES, METRIC_SAMPLES)
                .map(|(t, z)| {
                    let (b, a) = self.metric_factors(t, z);
                    b / a
                })
                .fold(0.0, f64::max),
        }
    }

    /// Uniform lattice of `nt × nz` points covering the strip.
    pub fn sample_points(&self, nt: usize, nz: usize) -> impl Iterator<Item = (f64, f64)> + '_ {
        let tt = self.time_horizon;
        let ll = self.length;
        (0..nt).flat_map(move |i| {
            let t = if nt > 1 { tt * i as f64 / (nt - 1) as f64 } else { 0.0 };
            (0..nz).map(move |j| {
                let z = if nz > 1 { ll * j as f64 / (nz - 1) as f64 } else { 0.0 };
                (t, z)
            })
        })
    }

    pub fn depends_on_time(&self) -> bool {
        match &self.kind {
            GeometryKind::HalfMinkowski { .. } => false,
            GeometryKind::DiagonalMetric { lapse, spatial_factor } => {
                lapse.depends_on(Var::T) || spatial_factor.depends_on(Var::T)
            }
        }
    }
}

/// Closed interval `[lo, hi]` on the z axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }

    pub fn distance(&self, x: f64) -> f64 {
        if x < self.lo {
            self.lo - x
        } else if x > self.hi {
            x - self.hi
        } else {
            0.0
        }
    }

    pub fn contains_interval(&self, other: &Interval) -> bool {
        other.lo >= self.lo && other.hi <= self.hi
    }
}

/// Space-time box `[t.lo, t.hi] × [z.lo, z.hi]` bounding the support of a source.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpacetimeBox {
    pub t: Interval,
    pub z: Interval,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Direction {
    Future,
    Past,
}

/// Slice at time `t` of the causal future or past of a support set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CausalEnvelope {
    pub t: f64,
    pub intervals: Vec<Interval>,
}

impl CausalEnvelope {
    pub fn empty(t: f64) -> Self {
        Self { t, intervals: Vec::new() }
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn contains(&self, z: f64) -> bool {
        self.intervals.iter().any(|i| i.contains(z))
    }

    /// Distance from `z` to the envelope (infinite for an empty envelope).
    pub fn distance(&self, z: f64) -> f64 {
        self.intervals.iter().map(|i| i.distance(z)).fold(f64::INFINITY, f64::min)
    }

    pub fn contains_envelope(&self, other: &CausalEnvelope) -> bool {
        other
            .intervals
            .iter()
            .all(|o| self.intervals.iter().any(|s| s.contains_interval(o)))
    }

    /// Union with another slice at the same time.
    pub fn union(mut self, other: CausalEnvelope) -> Self {
        self.intervals.extend(other.intervals);
        self.intervals = merge(self.intervals);
        self
    }
}

fn merge(mut v: Vec<Interval>) -> Vec<Interval> {
    v.retain(|i| i.lo <= i.hi);
    v.sort_by(|a, b| a.lo.total_cmp(&b.lo));
    let mut out: Vec<Interval> = Vec::with_capacity(v.len());
    for i in v {
        match out.last_mut() {
            Some(last) if i.lo <= last.hi => last.hi = last.hi.max(i.hi),
            _ => out.push(i),
        }
    }
    out
}

/// Points reachable at time `t` by causal curves leaving `support` at `t0`,
/// clipped to `[0, L]`.
pub fn causal_envelope(
    geometry: &Geometry,
    support: &[Interval],
    t0: f64,
    direction: Direction,
    t: f64,
) -> Result<CausalEnvelope> {
    let tt = geometry.time_horizon;
    let eps = 1e-12 * tt.max(1.0);
    if !(t >= -eps && t <= tt + eps) {
        return Err(Error::Range(format!("time {t} outside the strip [0, {tt}]")));
    }
    let ll = geometry.length;
    if support
        .iter()
        .any(|i| i.lo < -eps * ll.max(1.0) || i.hi > ll * (1.0 + 1e-12) + eps)
    {
        return Err(Error::Range(format!("support outside the spatial extent [0, {ll}]")));
    }
    let elapsed = match direction {
        Direction::Future => t - t0,
        Direction::Past => t0 - t,
    };
    if elapsed < 0.0 {
        return Ok(CausalEnvelope::empty(t));
    }
    let reach = geometry.max_causal_speed() * elapsed;
    let intervals = support
        .iter()
        .filter(|i| i.lo <= i.hi)
        .map(|i| Interval::new((i.lo - reach).max(0.0), (i.hi + reach).min(ll)))
        .collect();
    Ok(CausalEnvelope { t, intervals: merge(intervals) })
}

/// Future (or past) slice at `t` of a space-time source box: emission at the
/// earliest (or latest) time of the box dominates.
pub fn box_envelope(
    geometry: &Geometry,
    b: &SpacetimeBox,
    direction: Direction,
    t: f64,
) -> Result<CausalEnvelope> {
    let t0 = match direction {
        Direction::Future => b.t.lo,
        Direction::Past => b.t.hi,
    };
    causal_envelope(geometry, &[b.z], t0, direction, t)
}
