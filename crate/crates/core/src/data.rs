//! Spinor-valued fields on the strip: initial data `𝔥(z)` and sources `𝔣(t, z)`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::expr::{Expr, Var};
use crate::geometry::{Interval, SpacetimeBox};
use crate::linalg::{binomial, c, CMat, C64};

type SpinorFn = Arc<dyn Fn(f64, f64, &mut [C64]) + Send + Sync>;

#[derive(Clone)]
enum Repr {
    Zero,
    Expr(Vec<Expr>),
    Func(SpinorFn),
    /// Time-independent nodal samples, linear in z between nodes.
    Nodes { z0: f64, dz: f64, values: Vec<C64> },
    /// Samples on a `times × nodes` lattice, bilinear in between.
    TimeNodes { times: Vec<f64>, z0: f64, dz: f64, values: Vec<C64> },
    /// `e^{-decay t} · matrix · inner`.
    Mapped { inner: Box<SpinorField>, matrix: CMat, decay: f64 },
    Sum(Box<SpinorField>, Box<SpinorField>),
    Scaled(Box<SpinorField>, C64),
}

#[derive(Clone)]
pub struct SpinorField {
    repr: Repr,
    components: usize,
}

impl fmt::Debug for SpinorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &self.repr {
            Repr::Zero => "zero",
            Repr::Expr(_) => "expression",
            Repr::Func(_) => "closure",
            Repr::Nodes { .. } => "nodes",
            Repr::TimeNodes { .. } => "time-nodes",
            Repr::Mapped { .. } => "mapped",
            Repr::Sum(..) => "sum",
            Repr::Scaled(..) => "scaled",
        };
        write!(f, "SpinorField({kind}, {} components)", self.components)
    }
}

impl SpinorField {
    pub fn zero(components: usize) -> Self {
        Self { repr: Repr::Zero, components }
    }

    pub fn from_exprs(exprs: Vec<Expr>) -> Self {
        if exprs.iter().all(Expr::is_zero) {
            return Self::zero(exprs.len());
        }
        Self { components: exprs.len(), repr: Repr::Expr(exprs) }
    }

    /// Parses one expression per component.
    pub fn parse(sources: &[&str]) -> Result<Self> {
        let exprs = sources.iter().map(|s| Expr::parse(s)).collect::<Result<Vec<_>>>()?;
        Ok(Self::from_exprs(exprs))
    }

    pub fn from_fn<F>(components: usize, f: F) -> Self
    where
        F: Fn(f64, f64, &mut [C64]) + Send + Sync + 'static,
    {
        Self { repr: Repr::Func(Arc::new(f)), components }
    }

    /// `profile(z) · spinor`, with `t` ignored.
    pub fn profile<F>(spinor: Vec<C64>, profile: F) -> Self
    where
        F: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        let n = spinor.len();
        Self::from_fn(n, move |t, z, out| {
            let p = profile(t, z);
            for (o, s) in out.iter_mut().zip(&spinor) {
                *o = s * p;
            }
        })
    }

    /// Nodal samples `values[node * components + k]` on `z0 + i dz`.
    pub fn from_nodes(components: usize, z0: f64, dz: f64, values: Vec<C64>) -> Result<Self> {
        if components == 0 || values.len() % components != 0 || values.len() / components < 2 {
            return Err(Error::Structural("nodal samples need at least two full nodes".into()));
        }
        if !(dz > 0.0) {
            return Err(Error::Structural("node spacing must be positive".into()));
        }
        Ok(Self { repr: Repr::Nodes { z0, dz, values }, components })
    }

    /// Samples `values[(ti * nodes + node) * components + k]`.
    pub fn from_time_nodes(components: usize, times: Vec<f64>, z0: f64, dz: f64, values: Vec<C64>) -> Result<Self> {
        if times.len() < 2 || times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Structural("sample times must be increasing, at least two".into()));
        }
        if components == 0 || values.len() % (components * times.len()) != 0 {
            return Err(Error::Structural("sample array does not match the lattice".into()));
        }
        if values.len() / (components * times.len()) < 2 || !(dz > 0.0) {
            return Err(Error::Structural("need at least two nodes with positive spacing".into()));
        }
        Ok(Self { repr: Repr::TimeNodes { times, z0, dz, values }, components })
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn is_zero(&self) -> bool {
        match &self.repr {
            Repr::Zero => true,
            Repr::Mapped { inner, .. } => inner.is_zero(),
            Repr::Sum(a, b) => a.is_zero() && b.is_zero(),
            Repr::Scaled(a, s) => a.is_zero() || *s == c(0.0, 0.0),
            _ => false,
        }
    }

    /// True when values are linearly interpolated in time between samples.
    pub fn is_time_interpolated(&self) -> bool {
        match &self.repr {
            Repr::TimeNodes { .. } => true,
            Repr::Mapped { inner, .. } | Repr::Scaled(inner, _) => inner.is_time_interpolated(),
            Repr::Sum(a, b) => a.is_time_interpolated() || b.is_time_interpolated(),
            _ => false,
        }
    }

    pub fn exprs(&self) -> Option<&[Expr]> {
        match &self.repr {
            Repr::Expr(e) => Some(e),
            _ => None,
        }
    }

    pub fn eval(&self, t: f64, z: f64, out: &mut [C64]) {
        match &self.repr {
            Repr::Zero => out.iter_mut().for_each(|o| *o = c(0.0, 0.0)),
            Repr::Expr(es) => {
                for (o, e) in out.iter_mut().zip(es) {
                    *o = e.eval(t, z);
                }
            }
            Repr::Func(f) => f(t, z, out),
            Repr::Nodes { z0, dz, values } => {
                let (i, w) = locate(*z0, *dz, values.len() / self.components, z);
                let n = self.components;
                for (k, o) in out.iter_mut().enumerate().take(n) {
                    *o = values[i * n + k] * (1.0 - w) + values[(i + 1) * n + k] * w;
                }
            }
            Repr::TimeNodes { times, z0, dz, values } => {
                let n = self.components;
                let nodes = values.len() / (n * times.len());
                let (ti, wt) = locate_sorted(times, t);
                let (i, w) = locate(*z0, *dz, nodes, z);
                let at = |tk: usize, node: usize, k: usize| values[(tk * nodes + node) * n + k];
                for (k, o) in out.iter_mut().enumerate().take(n) {
                    let lo = at(ti, i, k) * (1.0 - w) + at(ti, i + 1, k) * w;
                    let hi = at(ti + 1, i, k) * (1.0 - w) + at(ti + 1, i + 1, k) * w;
                    *o = lo * (1.0 - wt) + hi * wt;
                }
            }
            Repr::Mapped { inner, matrix, decay } => {
                let mut tmp = vec![c(0.0, 0.0); inner.components];
                inner.eval(t, z, &mut tmp);
                let s = (-decay * t).exp();
                for (i, o) in out.iter_mut().enumerate().take(matrix.nrows()) {
                    let mut acc = c(0.0, 0.0);
                    for (j, v) in tmp.iter().enumerate() {
                        acc += matrix[(i, j)] * v;
                    }
                    *o = acc * s;
                }
            }
            Repr::Sum(a, b) => {
                let mut tmp = vec![c(0.0, 0.0); self.components];
                a.eval(t, z, out);
                b.eval(t, z, &mut tmp);
                for (o, v) in out.iter_mut().zip(&tmp) {
                    *o += v;
                }
            }
            Repr::Scaled(a, s) => {
                a.eval(t, z, out);
                out.iter_mut().for_each(|o| *o *= s);
            }
        }
    }

    pub fn value(&self, t: f64, z: f64) -> Vec<C64> {
        let mut out = vec![c(0.0, 0.0); self.components];
        self.eval(t, z, &mut out);
        out
    }

    /// Mixed partial derivative `∂t^p ∂z^q` at a point.
    pub fn derivative(&self, p: usize, q: usize, t: f64, z: f64) -> Result<Vec<C64>> {
        if p == 0 && q == 0 {
            return Ok(self.value(t, z));
        }
        let n = self.components;
        match &self.repr {
            Repr::Zero => Ok(vec![c(0.0, 0.0); n]),
            Repr::Expr(es) => Ok(es
                .iter()
                .map(|e| e.diff_n(Var::T, p).diff_n(Var::Z, q).eval(t, z))
                .collect()),
            Repr::Func(_) => Err(Error::Analysis(
                "closure fields carry no derivative information".into(),
            )),
            Repr::Nodes { z0, dz, values } => {
                if p > 0 {
                    return Ok(vec![c(0.0, 0.0); n]);
                }
                let nodes = values.len() / n;
                let (idx, w) = stencil(*z0, *dz, nodes, z, q)?;
                let mut out = vec![c(0.0, 0.0); n];
                for (node, wt) in idx.iter().zip(&w) {
                    for (k, o) in out.iter_mut().enumerate() {
                        *o += values[node * n + k] * wt;
                    }
                }
                Ok(out)
            }
            Repr::TimeNodes { times, z0, dz, values } => {
                let nodes = values.len() / (n * times.len());
                let (zi, zw) = stencil(*z0, *dz, nodes, z, q)?;
                let (ti, tw) = time_stencil(times, t, p)?;
                let mut out = vec![c(0.0, 0.0); n];
                for (tk, wt) in ti.iter().zip(&tw) {
                    for (node, wz) in zi.iter().zip(&zw) {
                        for (k, o) in out.iter_mut().enumerate() {
                            *o += values[(tk * nodes + node) * n + k] * (wt * wz);
                        }
                    }
                }
                Ok(out)
            }
            Repr::Mapped { inner, matrix, decay } => {
                // Leibniz rule on e^{-decay t} · g.
                let mut acc = vec![c(0.0, 0.0); inner.components];
                for j in 0..=p {
                    let coef = binomial(p, j) * (-decay).powi(j as i32) * (-decay * t).exp();
                    if coef == 0.0 {
                        continue;
                    }
                    let d = inner.derivative(p - j, q, t, z)?;
                    for (a, v) in acc.iter_mut().zip(&d) {
                        *a += v * coef;
                    }
                }
                Ok((0..matrix.nrows())
                    .map(|i| (0..acc.len()).map(|j| matrix[(i, j)] * acc[j]).sum())
                    .collect())
            }
            Repr::Sum(a, b) => {
                let mut x = a.derivative(p, q, t, z)?;
                let y = b.derivative(p, q, t, z)?;
                for (u, v) in x.iter_mut().zip(&y) {
                    *u += v;
                }
                Ok(x)
            }
            Repr::Scaled(a, s) => Ok(a.derivative(p, q, t, z)?.into_iter().map(|v| v * s).collect()),
        }
    }

    /// `e^{-decay t} · matrix · self`; symbolic when `self` is an expression.
    pub fn mapped(&self, matrix: &CMat, decay: f64) -> Self {
        let rows = matrix.nrows();
        if self.is_zero() {
            return Self::zero(rows);
        }
        if let Repr::Expr(es) = &self.repr {
            let damp = if decay == 0.0 {
                None
            } else {
                Some(Expr::parse(&format!("exp(-({decay:e})*t)")).expect("valid decay expression"))
            };
            let exprs = (0..rows)
                .map(|i| {
                    let mut acc: Option<Expr> = None;
                    for (j, e) in es.iter().enumerate() {
                        let m = matrix[(i, j)];
                        if m == c(0.0, 0.0) || e.is_zero() {
                            continue;
                        }
                        let term = Expr::Mul(Box::new(Expr::constant(m)), Box::new(e.clone()));
                        acc = Some(match acc {
                            None => term,
                            Some(a) => Expr::Add(Box::new(a), Box::new(term)),
                        });
                    }
                    let e = acc.unwrap_or_else(|| Expr::constant(c(0.0, 0.0)));
                    match &damp {
                        Some(d) if !e.is_zero() => Expr::Mul(Box::new(d.clone()), Box::new(e)),
                        _ => e,
                    }
                })
                .collect();
            return Self::from_exprs(exprs);
        }
        Self {
            repr: Repr::Mapped { inner: Box::new(self.clone()), matrix: matrix.clone(), decay },
            components: rows,
        }
    }

    pub fn plus(&self, other: &SpinorField) -> Self {
        if self.is_zero() {
            return other.clone();
        }
        if other.is_zero() {
            return self.clone();
        }
        if let (Repr::Expr(a), Repr::Expr(b)) = (&self.repr, &other.repr) {
            return Self::from_exprs(
                a.iter()
                    .zip(b)
                    .map(|(x, y)| Expr::Add(Box::new(x.clone()), Box::new(y.clone())))
                    .collect(),
            );
        }
        Self {
            repr: Repr::Sum(Box::new(self.clone()), Box::new(other.clone())),
            components: self.components,
        }
    }

    pub fn scaled(&self, s: C64) -> Self {
        if self.is_zero() || s == c(0.0, 0.0) {
            return Self::zero(self.components);
        }
        Self { repr: Repr::Scaled(Box::new(self.clone()), s), components: self.components }
    }

    /// Sample onto `nodes` equally spaced points at time `t`.
    pub fn sample(&self, t: f64, z0: f64, dz: f64, nodes: usize) -> Vec<C64> {
        let n = self.components;
        let mut out = vec![c(0.0, 0.0); nodes * n];
        for (i, chunk) in out.chunks_mut(n).enumerate() {
            self.eval(t, z0 + i as f64 * dz, chunk);
        }
        out
    }
}

fn locate(z0: f64, dz: f64, nodes: usize, z: f64) -> (usize, f64) {
    let x = ((z - z0) / dz).clamp(0.0, (nodes - 1) as f64);
    let i = (x.floor() as usize).min(nodes - 2);
    (i, x - i as f64)
}

fn locate_sorted(times: &[f64], t: f64) -> (usize, f64) {
    let last = times.len() - 1;
    if t <= times[0] {
        return (0, 0.0);
    }
    if t >= times[last] {
        return (last - 1, 1.0);
    }
    let i = times.partition_point(|&s| s <= t) - 1;
    let i = i.min(last - 1);
    (i, (t - times[i]) / (times[i + 1] - times[i]))
}

/// Finite-difference weights for the `order`-th derivative at `x0` from
/// samples at `xs` (Fornberg's recursion).
pub fn fd_weights(x0: f64, xs: &[f64], order: usize) -> Vec<f64> {
    let n = xs.len();
    let mut c = vec![vec![0.0; order + 1]; n];
    let mut c1 = 1.0;
    let mut c4 = xs[0] - x0;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - x0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[order]).collect()
}

/// Second-order accurate stencil for `∂z^order` near `z`: centred in the
/// interior, one-sided near the ends of the node range.
fn stencil(z0: f64, dz: f64, nodes: usize, z: f64, order: usize) -> Result<(Vec<usize>, Vec<f64>)> {
    let width = order + 2;
    if nodes < width {
        return Err(Error::Analysis(format!(
            "{nodes} nodes cannot resolve a derivative of order {order}"
        )));
    }
    let x = (z - z0) / dz;
    let centre = x.round().clamp(0.0, (nodes - 1) as f64) as isize;
    let half = (width / 2) as isize;
    let start = (centre - half).clamp(0, (nodes - width) as isize) as usize;
    let idx: Vec<usize> = (start..start + width).collect();
    let xs: Vec<f64> = idx.iter().map(|&i| z0 + i as f64 * dz).collect();
    Ok((idx.clone(), fd_weights(z, &xs, order)))
}

fn time_stencil(times: &[f64], t: f64, order: usize) -> Result<(Vec<usize>, Vec<f64>)> {
    if order == 0 {
        let (i, w) = locate_sorted(times, t);
        return Ok((vec![i, i + 1], vec![1.0 - w, w]));
    }
    let width = order + 2;
    if times.len() < width {
        return Err(Error::Analysis(format!(
            "{} time samples cannot resolve a time derivative of order {order}",
            times.len()
        )));
    }
    let (i, _) = locate_sorted(times, t);
    let start = i.saturating_sub(width / 2).min(times.len() - width);
    let idx: Vec<usize> = (start..start + width).collect();
    let xs: Vec<f64> = idx.iter().map(|&k| times[k]).collect();
    Ok((idx, fd_weights(t, &xs, order)))
}

/// Initial data and source of `𝔖Ψ = 𝔣`, `Ψ|_{t=0} = 𝔥`, with declared supports.
#[derive(Debug, Clone)]
pub struct CauchyData {
    pub initial: SpinorField,
    pub source: SpinorField,
    /// z-intervals containing the support of the initial data.
    pub initial_support: Vec<Interval>,
    /// Space-time boxes containing the support of the source.
    pub source_support: Vec<SpacetimeBox>,
}

impl CauchyData {
    pub fn zero(components: usize) -> Self {
        Self {
            initial: SpinorField::zero(components),
            source: SpinorField::zero(components),
            initial_support: Vec::new(),
            source_support: Vec::new(),
        }
    }

    pub fn new(initial: SpinorField, source: SpinorField) -> Self {
        Self { initial, source, initial_support: Vec::new(), source_support: Vec::new() }
    }

    pub fn with_initial_support(mut self, s: Interval) -> Self {
        self.initial_support.push(s);
        self
    }

    pub fn with_source_support(mut self, b: SpacetimeBox) -> Self {
        self.source_support.push(b);
        self
    }

    /// Converts Dirac data `Dψ = f`, `ψ|_{t=0} = h` to the gauged system data
    /// `𝔣 = e^{-λt}(-iγ(e₀))f`, `𝔥 = h`.
    pub fn from_dirac(f: &SpinorField, h: &SpinorField, gamma0: &CMat, lambda: f64) -> Self {
        let m = gamma0 * c(0.0, -1.0);
        Self::new(h.clone(), f.mapped(&m, lambda))
    }

    pub fn validate(&self, rank: usize, length: f64) -> Result<()> {
        if self.initial.components() != rank || self.source.components() != rank {
            return Err(Error::Structural(format!(
                "data have {} / {} components, representation rank is {rank}",
                self.initial.components(),
                self.source.components()
            )));
        }
        let inside = |i: &Interval| i.lo >= 0.0 && i.hi <= length && i.lo <= i.hi;
        if !self.initial_support.iter().all(inside) || !self.source_support.iter().all(|b| inside(&b.z)) {
            return Err(Error::Config(format!("declared supports must lie within [0, {length}]")));
        }
        Ok(())
    }

    /// Minimal distance from the declared supports to either boundary.
    pub fn boundary_clearance(&self, length: f64) -> f64 {
        self.initial_support
            .iter()
            .chain(self.source_support.iter().map(|b| &b.z))
            .map(|i| i.lo.min(length - i.hi))
            .fold(f64::INFINITY, f64::min)
    }
}

/// `exp(1 - 1/(1 - s²))` for `|s| < 1`, zero elsewhere; `s = (x - centre)/halfwidth`.
pub fn bump(x: f64, centre: f64, halfwidth: f64) -> f64 {
    let s = (x - centre) / halfwidth;
    if s.abs() < 1.0 {
        (1.0 - 1.0 / (1.0 - s * s)).exp()
    } else {
        0.0
    }
}

/// C∞ step from 0 (x ≤ 0) to 1 (x ≥ 1).
pub fn smoothstep(x: f64) -> f64 {
    let e = |y: f64| if y > 0.0 { (-1.0 / y).exp() } else { 0.0 };
    let a = e(x);
    let b = e(1.0 - x);
    if a + b == 0.0 {
        0.0
    } else {
        a / (a + b)
    }
}

/// Derivative of [`smoothstep`].
pub fn smoothstep_derivative(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        return 0.0;
    }
    let e = |y: f64| (-1.0 / y).exp();
    let de = |y: f64| e(y) / (y * y);
    let (a, b) = (e(x), e(1.0 - x));
    let s = a + b;
    (de(x) * b + a * de(1.0 - x)) / (s * s)
}
