//! Nonlinear Dirichlet problems for `H = Δ_p + V` on finite balls, Green
//! functions by exhaustion, spherical Green functions on model graphs, the
//! tree root `β_{p,d}` and a weak-comparison test utility.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{ball_decomposition, VertexFunction, WeightedGraph};
use crate::model::{ModelGraphSpec, SphericalFunction};
use crate::operator::{check_p, spow, SchrodingerOperator};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepOrder {
    Ascending,
    Descending,
    /// Ascending then descending within one sweep.
    Symmetric,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolveConfig {
    pub max_sweeps: usize,
    pub residual_tol: f64,
    /// Relative tolerance of the scalar root at each vertex.
    pub per_vertex_tol: f64,
    pub sweep_order: SweepOrder,
    pub damping: f64,
    /// Measure the residual relative to the size of the terms of `H[u](x)`
    /// rather than absolutely. Needed when values span many decades.
    pub scaled_residual: bool,
    /// Start from the `p = 2` solution of the same problem.
    pub warm_start: bool,
    /// Record the Dirichlet energy after every sweep.
    pub record_energy: bool,
    /// For `p < 2` and `V ≥ 0`, try global Newton steps every this many
    /// sweeps. 0 disables.
    pub newton_interval: usize,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            max_sweeps: 20_000,
            residual_tol: 1e-10,
            per_vertex_tol: 1e-14,
            sweep_order: SweepOrder::Ascending,
            damping: 1.0,
            scaled_residual: false,
            warm_start: true,
            record_energy: false,
            newton_interval: 10,
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_sweeps == 0 {
            return Err(Error::InvalidConfig("max_sweeps must be at least 1".into()));
        }
        if !(self.residual_tol > 0.0) || !(self.per_vertex_tol > 0.0) {
            return Err(Error::InvalidConfig("tolerances must be positive".into()));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::InvalidConfig(format!("damping must lie in (0, 1], got {}", self.damping)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveOutcome {
    pub values: VertexFunction,
    pub sweeps: usize,
    pub residual: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub energy_trace: Vec<f64>,
}

/// The scalar equation at one vertex,
/// `F(t) = Σ_y b (t - u_y)^<p-1> + m V t^<p-1> - m f`.
struct Local<'a> {
    nbrs: &'a [(usize, f64)],
    u: &'a [f64],
    mv: f64,
    rhs: f64,
    q: f64,
}

impl Local<'_> {
    fn eval(&self, t: f64) -> f64 {
        let mut s = self.mv * spow(t, self.q) - self.rhs;
        for &(y, b) in self.nbrs {
            s += b * spow(t - self.u[y], self.q);
        }
        s
    }

    fn derivative(&self, t: f64) -> f64 {
        let e = self.q - 1.0;
        let mut s = self.mv * t.abs().powf(e);
        for &(y, b) in self.nbrs {
            s += b * (t - self.u[y]).abs().powf(e);
        }
        self.q * s
    }

    fn spread(&self, prev: f64) -> (f64, f64, f64) {
        let mut lo = prev;
        let mut hi = prev;
        let mut wsum = 0.0;
        for &(y, b) in self.nbrs {
            lo = lo.min(self.u[y]);
            hi = hi.max(self.u[y]);
            wsum += b;
        }
        let shift = (self.rhs.abs() / wsum).powf(1.0 / self.q);
        let scale = (hi - lo).max(lo.abs()).max(hi.abs()).max(shift).max(f64::MIN_POSITIVE);
        (lo, hi, scale)
    }

    /// Monotone case: expanding bracket, then Newton safeguarded by bisection.
    fn monotone_root(&self, prev: f64, tol: f64) -> Option<f64> {
        let (mut lo, mut hi, scale) = self.spread(prev);
        let mut w = scale;
        let mut guard = 0;
        while self.eval(lo) > 0.0 {
            lo -= w;
            w *= 2.0;
            guard += 1;
            if guard > 2000 || !lo.is_finite() {
                return None;
            }
        }
        w = scale;
        while self.eval(hi) < 0.0 {
            hi += w;
            w *= 2.0;
            guard += 1;
            if guard > 4000 || !hi.is_finite() {
                return None;
            }
        }
        let mut t = prev.clamp(lo, hi);
        for _ in 0..400 {
            let ft = self.eval(t);
            if ft == 0.0 {
                return Some(t);
            }
            if ft < 0.0 {
                lo = t;
            } else {
                hi = t;
            }
            let d = self.derivative(t);
            let mut next = if d.is_finite() && d > 0.0 { t - ft / d } else { f64::NAN };
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - t).abs() <= tol * next.abs().max(f64::MIN_POSITIVE)
                || hi - lo <= 4.0 * f64::EPSILON * lo.abs().max(hi.abs())
            {
                return Some(next);
            }
            t = next;
        }
        Some(t)
    }

    /// Sign-changing potential: every sampled root in
    /// `[min u_y - Δ, max u_y + Δ]`, the one nearest `prev` wins.
    fn nearest_root(&self, prev: f64, tol: f64) -> Option<f64> {
        const SAMPLES: usize = 64;
        let (lo, hi, scale) = self.spread(prev);
        let a = lo - scale;
        let b = hi + scale;
        let mut grid: Vec<f64> = (0..=SAMPLES).map(|i| a + (b - a) * i as f64 / SAMPLES as f64).collect();
        grid.push(prev);
        grid.sort_by(f64::total_cmp);
        grid.dedup();
        let vals: Vec<f64> = grid.iter().map(|&t| self.eval(t)).collect();
        let mut roots = Vec::new();
        for i in 0..grid.len() {
            if vals[i] == 0.0 {
                roots.push(grid[i]);
            } else if i + 1 < grid.len() && vals[i] * vals[i + 1] < 0.0 {
                let (mut l, mut r, fl) = (grid[i], grid[i + 1], vals[i]);
                for _ in 0..200 {
                    let m = 0.5 * (l + r);
                    let fm = self.eval(m);
                    if fm == 0.0 {
                        l = m;
                        r = m;
                        break;
                    }
                    if (fm < 0.0) == (fl < 0.0) {
                        l = m;
                    } else {
                        r = m;
                    }
                    if r - l <= tol * l.abs().max(r.abs()).max(f64::MIN_POSITIVE) {
                        break;
                    }
                }
                roots.push(0.5 * (l + r));
            }
        }
        roots.into_iter().min_by(|x, y| {
            (x - prev).abs().total_cmp(&(y - prev).abs()).then(x.total_cmp(y))
        })
    }
}

fn sweep_sequence(interior: &[usize], order: SweepOrder) -> Vec<usize> {
    match order {
        SweepOrder::Ascending => interior.to_vec(),
        SweepOrder::Descending => interior.iter().rev().copied().collect(),
        SweepOrder::Symmetric => interior.iter().chain(interior.iter().rev()).copied().collect(),
    }
}

fn residual_at(op: &SchrodingerOperator<'_>, u: &[f64], source: &[f64], x: usize, scaled: bool) -> f64 {
    let g = op.graph();
    let q = op.p() - 1.0;
    let m = g.measure(x);
    let v = op.potential()[x];
    // what a few ulps in u can move each term by; for p < 2 this is large
    // across nearly flat edges and no iteration can get below it
    let wobble = |t: f64, scale: f64| {
        let eta = 4.0 * f64::EPSILON * scale;
        (t.abs() + eta).powf(q) - t.abs().powf(q)
    };
    let mut floor = 0.0;
    let mut size = 0.0;
    for &(y, b) in g.neighbors(x) {
        let d = u[x] - u[y];
        floor += b * wobble(d, u[x].abs() + u[y].abs());
        size += b * d.abs().powf(q);
    }
    floor /= m;
    size /= m;
    if v != 0.0 {
        floor += v.abs() * wobble(u[x], u[x].abs());
    }
    let r = ((op.apply_raw(u, x) - source[x]).abs() - floor).max(0.0);
    if !scaled {
        return r;
    }
    size += (v * spow(u[x], q)).abs() + source[x].abs();
    if size == 0.0 {
        0.0
    } else {
        r / size
    }
}

fn max_residual(op: &SchrodingerOperator<'_>, u: &[f64], source: &[f64], scaled: bool) -> f64 {
    op.domain().interior().iter().map(|&x| residual_at(op, u, source, x, scaled)).fold(0.0, f64::max)
}

/// `(1/p) [Σ_{edges} b |∇u|^p + Σ_int m V |u|^p] - Σ_int m f u`, where edges
/// between two boundary vertices are left out.
pub fn dirichlet_energy(op: &SchrodingerOperator<'_>, u: &VertexFunction, source: &VertexFunction) -> Result<f64> {
    u.check_len(op.graph())?;
    source.check_len(op.graph())?;
    Ok(energy_raw(op, u.values(), source.values()))
}

fn energy_raw(op: &SchrodingerOperator<'_>, u: &[f64], source: &[f64]) -> f64 {
    let g = op.graph();
    let p = op.p();
    let dom = op.domain();
    let mut kinetic = 0.0;
    for (x, y, b) in g.edges() {
        if dom.is_interior(x) || dom.is_interior(y) {
            kinetic += b * (u[x] - u[y]).abs().powf(p);
        }
    }
    let mut rest = 0.0;
    let mut linear = 0.0;
    for &x in dom.interior() {
        rest += g.measure(x) * op.potential()[x] * u[x].abs().powf(p);
        linear += g.measure(x) * source[x] * u[x];
    }
    (kinetic + rest) / p - linear
}

/// Solution of the `p = 2` problem `Δ u + V u = f` on the interior with
/// `u = g` on the boundary, by Jacobi-preconditioned conjugate gradients.
/// `None` when the system is not positive definite or CG stalls.
pub fn harmonic_extension(
    graph: &WeightedGraph,
    domain: &crate::graph::BoundaryDecomposition,
    potential: &[f64],
    boundary_data: &[f64],
    source: &[f64],
) -> Option<Vec<f64>> {
    let interior = domain.interior();
    let n = interior.len();
    let mut u: Vec<f64> = boundary_data.to_vec();
    for &x in interior {
        u[x] = 0.0;
    }
    if n == 0 {
        return Some(u);
    }
    if potential.iter().any(|&v| v < 0.0) {
        return None;
    }
    let index = interior_index(graph.len(), interior);
    let diag: Vec<f64> =
        interior.iter().map(|&x| graph.weighted_degree(x) + graph.measure(x) * potential[x]).collect();
    let off: Vec<Vec<(usize, f64)>> = interior
        .iter()
        .map(|&x| graph.neighbors(x).iter().filter(|&&(y, _)| index[y] != usize::MAX).map(|&(y, b)| (index[y], b)).collect())
        .collect();
    let rhs: Vec<f64> = interior
        .iter()
        .map(|&x| {
            let mut s = graph.measure(x) * source[x];
            for &(y, b) in graph.neighbors(x) {
                if index[y] == usize::MAX {
                    s += b * boundary_data[y];
                }
            }
            s
        })
        .collect();
    let x = pcg(&diag, &off, &rhs, 1e-13)?;
    for (i, &v) in interior.iter().enumerate() {
        u[v] = x[i];
    }
    Some(u)
}

fn interior_index(n: usize, interior: &[usize]) -> Vec<usize> {
    let mut index = vec![usize::MAX; n];
    for (i, &x) in interior.iter().enumerate() {
        index[x] = i;
    }
    index
}

/// Jacobi-preconditioned CG for `diag_i v_i - Σ_j w_ij v_j = rhs_i` with the
/// off-diagonal part given row by row.
fn pcg(diag: &[f64], off: &[Vec<(usize, f64)>], rhs: &[f64], rel_tol: f64) -> Option<Vec<f64>> {
    let n = diag.len();
    if diag.iter().any(|&d| !(d > 0.0) || !d.is_finite()) {
        return None;
    }
    let apply = |v: &[f64], out: &mut [f64]| {
        for i in 0..n {
            let mut s = diag[i] * v[i];
            for &(j, w) in &off[i] {
                s -= w * v[j];
            }
            out[i] = s;
        }
    };
    let rhs_norm = rhs.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut x = vec![0.0; n];
    if rhs_norm == 0.0 {
        return Some(x);
    }
    let mut r = rhs.to_vec();
    let mut z: Vec<f64> = r.iter().zip(diag).map(|(r, d)| r / d).collect();
    let mut dir = z.clone();
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    let mut ad = vec![0.0; n];
    for _ in 0..(10 * n + 100) {
        apply(&dir, &mut ad);
        let dad: f64 = dir.iter().zip(&ad).map(|(a, b)| a * b).sum();
        if !(dad > 0.0) {
            return None;
        }
        let step = rz / dad;
        for i in 0..n {
            x[i] += step * dir[i];
            r[i] -= step * ad[i];
        }
        if r.iter().map(|v| v * v).sum::<f64>().sqrt() <= rel_tol * rhs_norm {
            return Some(x);
        }
        for i in 0..n {
            z[i] = r[i] / diag[i];
        }
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            dir[i] = z[i] + beta * dir[i];
        }
    }
    None
}

/// `m(x) (H[u](x) - f(x))` on the interior.
fn local_residuals(op: &SchrodingerOperator<'_>, u: &[f64], source: &[f64]) -> Vec<f64> {
    let g = op.graph();
    op.domain().interior().iter().map(|&x| g.measure(x) * (op.apply_raw(u, x) - source[x])).collect()
}

/// One damped Newton step for `H[u] = f` with the Jacobian solved by CG.
/// Used for `p < 2`, where near-flat edges make pointwise relaxation crawl.
/// Returns the new iterate only if it lowers the residual norm.
fn newton_step(op: &SchrodingerOperator<'_>, u: &[f64], source: &[f64]) -> Option<Vec<f64>> {
    let g = op.graph();
    let interior = op.domain().interior();
    let index = interior_index(g.len(), interior);
    let q = op.p() - 1.0;
    let scale = u.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    let floor = 1e-12 * scale;
    let slope = |t: f64| q * t.abs().max(floor).powf(q - 1.0);
    let mut diag = vec![0.0; interior.len()];
    let mut off = vec![Vec::new(); interior.len()];
    for (i, &x) in interior.iter().enumerate() {
        for &(y, b) in g.neighbors(x) {
            let w = b * slope(u[x] - u[y]);
            diag[i] += w;
            if index[y] != usize::MAX {
                off[i].push((index[y], w));
            }
        }
        let v = op.potential()[x];
        if v != 0.0 {
            diag[i] += g.measure(x) * v * slope(u[x]);
        }
    }
    let res = local_residuals(op, u, source);
    let norm = |r: &[f64]| r.iter().map(|v| v * v).sum::<f64>().sqrt();
    let r0 = norm(&res);
    let e0 = energy_raw(op, u, source);
    let rhs: Vec<f64> = res.iter().map(|r| -r).collect();
    let delta = pcg(&diag, &off, &rhs, 1e-12)?;
    let mut t = 1.0;
    for _ in 0..40 {
        let mut trial = u.to_vec();
        for (i, &x) in interior.iter().enumerate() {
            trial[x] += t * delta[i];
        }
        if norm(&local_residuals(op, &trial, source)) < r0 && energy_raw(op, &trial, source) <= e0 {
            return Some(trial);
        }
        t *= 0.5;
    }
    None
}

/// Solves `H[u] = 0` on the interior with `u = boundary_data` on the boundary.
///
/// For a sign-changing potential the returned function is a solution, not
/// necessarily the only one.
pub fn dirichlet_solve(
    op: &SchrodingerOperator<'_>,
    boundary_data: &VertexFunction,
    config: &SolveConfig,
) -> Result<SolveOutcome> {
    let zero = VertexFunction::zeros(op.graph().len());
    solve_with_source(op, boundary_data, &zero, None, config)
}

/// Solves `H[u] = f` on the interior with `u = boundary_data` on the boundary
/// by cyclic per-vertex relaxation. `initial` overrides the warm start on the
/// interior.
pub fn solve_with_source(
    op: &SchrodingerOperator<'_>,
    boundary_data: &VertexFunction,
    source: &VertexFunction,
    initial: Option<&VertexFunction>,
    config: &SolveConfig,
) -> Result<SolveOutcome> {
    config.validate()?;
    let g = op.graph();
    boundary_data.check_len(g)?;
    source.check_len(g)?;
    let dom = op.domain();
    let q = op.p() - 1.0;
    let mut u: Vec<f64> = match initial {
        Some(init) => {
            init.check_len(g)?;
            let mut u = init.values().to_vec();
            for &x in dom.boundary() {
                u[x] = boundary_data[x];
            }
            u
        }
        None => {
            let warm = config
                .warm_start
                .then(|| {
                    harmonic_extension(g, dom, op.potential().values(), boundary_data.values(), source.values())
                })
                .flatten();
            warm.unwrap_or_else(|| {
                let mut u = vec![0.0; g.len()];
                for &x in dom.boundary() {
                    u[x] = boundary_data[x];
                }
                u
            })
        }
    };
    let monotone = dom.interior().iter().all(|&x| op.potential()[x] >= 0.0);
    let newton = monotone && op.p() < 2.0 && config.newton_interval > 0;
    let order = sweep_sequence(dom.interior(), config.sweep_order);
    let mut energy_trace = Vec::new();
    if config.record_energy {
        energy_trace.push(energy_raw(op, &u, source.values()));
    }
    let mut residual = max_residual(op, &u, source.values(), config.scaled_residual);
    if residual <= config.residual_tol {
        return Ok(SolveOutcome { values: VertexFunction::new(u)?, sweeps: 0, residual, energy_trace });
    }
    for sweep in 1..=config.max_sweeps {
        for &x in &order {
            let local = Local {
                nbrs: g.neighbors(x),
                u: &u,
                mv: g.measure(x) * op.potential()[x],
                rhs: g.measure(x) * source[x],
                q,
            };
            let root = if monotone {
                local.monotone_root(u[x], config.per_vertex_tol)
            } else {
                local.nearest_root(u[x], config.per_vertex_tol)
            };
            let t = root.ok_or(Error::NoScalarRoot(x))?;
            u[x] = (1.0 - config.damping) * u[x] + config.damping * t;
        }
        if config.record_energy {
            energy_trace.push(energy_raw(op, &u, source.values()));
        }
        residual = max_residual(op, &u, source.values(), config.scaled_residual);
        if !residual.is_finite() {
            return Err(Error::NoConvergence { sweeps: sweep, residual });
        }
        if newton && sweep % config.newton_interval == 0 && residual > config.residual_tol {
            for _ in 0..50 {
                let Some(next) = newton_step(op, &u, source.values()) else { break };
                u = next;
                residual = max_residual(op, &u, source.values(), config.scaled_residual);
                if residual <= config.residual_tol {
                    break;
                }
            }
            if config.record_energy {
                *energy_trace.last_mut().expect("recorded") = energy_raw(op, &u, source.values());
            }
        }
        if residual <= config.residual_tol {
            return Ok(SolveOutcome { values: VertexFunction::new(u)?, sweeps: sweep, residual, energy_trace });
        }
    }
    Err(Error::NoConvergence { sweeps: config.max_sweeps, residual })
}

/// A family of exact balls `B_R(o)` of one infinite graph. Ids of `B_r` must
/// form a prefix of the ids of `B_R` for `r < R`, with the root at id 0.
pub trait BallFamily {
    fn ball(&self, radius: usize) -> Result<WeightedGraph>;
}

impl<F> BallFamily for F
where
    F: Fn(usize) -> Result<WeightedGraph>,
{
    fn ball(&self, radius: usize) -> Result<WeightedGraph> {
        self(radius)
    }
}

impl BallFamily for ModelGraphSpec {
    fn ball(&self, radius: usize) -> Result<WeightedGraph> {
        self.truncated(radius)?.realize()
    }
}

/// Balls of a model graph represented by their radial quotients; exact for
/// spherically symmetric solutions such as Green functions with source `1_o`.
#[derive(Debug, Clone, Copy)]
pub struct RadialBalls<'a>(pub &'a ModelGraphSpec);

impl BallFamily for RadialBalls<'_> {
    fn ball(&self, radius: usize) -> Result<WeightedGraph> {
        self.0.truncated(radius)?.radial_quotient()
    }
}

/// Induced balls of a large finite graph standing in for an infinite one.
#[derive(Debug, Clone, Copy)]
pub struct InducedBalls<'a>(pub &'a WeightedGraph);

impl BallFamily for InducedBalls<'_> {
    fn ball(&self, radius: usize) -> Result<WeightedGraph> {
        Ok(self.0.induced_ball(radius)?.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExhaustionConfig {
    /// Increasing truncation radii.
    pub radii: Vec<usize>,
    /// Approximants are compared on `B_{reference_radius}`.
    pub reference_radius: usize,
    /// Relative agreement required between successive approximants.
    pub limit_tol: f64,
    /// Values at the root beyond this signal a divergent exhaustion.
    pub divergence_cap: f64,
    /// Use Aitken's Δ² on the last three approximants (equally spaced radii).
    pub extrapolate: bool,
    /// Relative slack of the monotonicity check.
    pub monotone_tol: f64,
    pub solve: SolveConfig,
}

impl Default for ExhaustionConfig {
    fn default() -> Self {
        Self {
            radii: vec![4, 6, 8, 10],
            reference_radius: 2,
            limit_tol: 1e-6,
            divergence_cap: 1e12,
            extrapolate: true,
            monotone_tol: 1e-9,
            solve: SolveConfig { scaled_residual: true, residual_tol: 1e-12, ..SolveConfig::default() },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityViolation {
    pub vertex: usize,
    pub radius: usize,
    /// `G^{(previous)}(x) - G^{(R)}(x) > 0`.
    pub drop: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExhaustionResult {
    pub radii: Vec<usize>,
    /// Each approximant restricted to the reference ball.
    pub approximants: Vec<VertexFunction>,
    pub root_values: Vec<f64>,
    pub sweeps: Vec<usize>,
    pub converged: bool,
    /// Whether the limit uses the extrapolated values.
    pub extrapolated: bool,
    /// Limit candidate on the reference ball.
    pub limit: VertexFunction,
    pub monotone: bool,
    pub violations: Vec<MonotonicityViolation>,
    /// The approximant on the largest ball.
    pub last: VertexFunction,
}

fn aitken(a0: f64, a1: f64, a2: f64) -> Option<f64> {
    let d0 = a1 - a0;
    let d1 = a2 - a1;
    let r = d1 / d0;
    (d0 != 0.0 && r > 0.0 && r < 1.0).then(|| a2 - d1 * d1 / (d1 - d0))
}

/// Green function of `Δ_p + α` with pole at the root by zero-Dirichlet
/// exhaustion. Each solve is warm-started from the previous one.
pub fn green_function<F: BallFamily + ?Sized>(
    family: &F,
    p: f64,
    alpha: f64,
    config: &ExhaustionConfig,
) -> Result<ExhaustionResult> {
    check_p(p)?;
    if !(alpha >= 0.0) || !alpha.is_finite() {
        return Err(Error::InvalidConfig(format!("alpha must be nonnegative, got {alpha}")));
    }
    let radii = &config.radii;
    if radii.is_empty() || radii.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidConfig("radii must be strictly increasing".into()));
    }
    if config.reference_radius >= radii[0] {
        return Err(Error::InvalidConfig("reference radius must be below the first truncation radius".into()));
    }
    let mut approximants: Vec<VertexFunction> = Vec::new();
    let mut root_values = Vec::new();
    let mut sweeps = Vec::new();
    let mut violations = Vec::new();
    let mut reference_depths: Option<Vec<usize>> = None;
    let mut previous: Option<(Vec<usize>, Vec<f64>)> = None;
    let mut last = VertexFunction::zeros(0);

    for &radius in radii {
        let g = family.ball(radius)?;
        if g.root() != 0 {
            return Err(Error::PreconditionViolated("ball families must put the root at id 0".into()));
        }
        let domain = ball_decomposition(&g, radius)?;
        let op = SchrodingerOperator::new(&g, p, VertexFunction::constant(g.len(), alpha))?.with_domain(domain)?;
        let n_ref = g.depths().iter().take_while(|&&r| r <= config.reference_radius).count();
        let depths_ref = g.depths()[..n_ref].to_vec();
        if g.depths().iter().skip(n_ref).any(|&r| r <= config.reference_radius) {
            return Err(Error::PreconditionViolated("reference ball is not a prefix of the ids".into()));
        }
        match &reference_depths {
            None => reference_depths = Some(depths_ref),
            Some(d) if *d != depths_ref => {
                return Err(Error::PreconditionViolated("balls of the family are not nested".into()));
            }
            _ => {}
        }
        let initial = previous.as_ref().and_then(|(depths, values)| {
            (depths.len() <= g.len() && g.depths()[..depths.len()] == depths[..]).then(|| {
                let mut v = values.clone();
                v.resize(g.len(), 0.0);
                VertexFunction::new(v).expect("finite")
            })
        });
        let mut source = vec![0.0; g.len()];
        source[0] = 1.0;
        let source = VertexFunction::new(source)?;
        // On recurrent graphs the previous approximant padded by zeros is a
        // poor start; keep it only if it beats the linear warm start.
        let initial = match (initial, config.solve.warm_start) {
            (Some(prev), true) => {
                let zero = vec![0.0; g.len()];
                let linear = harmonic_extension(&g, op.domain(), op.potential().values(), &zero, source.values());
                match linear {
                    Some(lin)
                        if max_residual(&op, &lin, source.values(), false)
                            < max_residual(&op, prev.values(), source.values(), false) =>
                    {
                        Some(VertexFunction::new(lin)?)
                    }
                    _ => Some(prev),
                }
            }
            (initial, _) => initial,
        };
        let outcome =
            solve_with_source(&op, &VertexFunction::zeros(g.len()), &source, initial.as_ref(), &config.solve)?;
        let values = outcome.values.into_values();
        if !(values[0] <= config.divergence_cap) {
            return Err(Error::DivergentExhaustion { radius, value: values[0] });
        }
        let restricted = VertexFunction::new(values[..n_ref].to_vec())?;
        if let Some(prev) = approximants.last() {
            for x in 0..n_ref {
                let drop = prev[x] - restricted[x];
                if drop > config.monotone_tol * restricted[x].abs() {
                    violations.push(MonotonicityViolation { vertex: x, radius, drop });
                }
            }
        }
        root_values.push(values[0]);
        sweeps.push(outcome.sweeps);
        approximants.push(restricted);
        previous = Some((g.depths().to_vec(), values.clone()));
        last = VertexFunction::new(values)?;
    }

    let k = approximants.len();
    let n_ref = approximants[0].len();
    let evenly = radii.len() >= 3 && {
        let s = &radii[radii.len() - 3..];
        s[1] - s[0] == s[2] - s[1]
    };
    let evenly4 = radii.len() >= 4 && {
        let s = &radii[radii.len() - 4..];
        s[1] - s[0] == s[2] - s[1] && s[2] - s[1] == s[3] - s[2]
    };
    let mut converged = k >= 2;
    let mut extrapolated = false;
    let mut limit = vec![0.0; n_ref];
    for x in 0..n_ref {
        let a = |i: usize| approximants[k - 1 - i][x];
        let raw_ok = k >= 2 && (a(0) - a(1)).abs() <= config.limit_tol * a(0).abs();
        let acc = (config.extrapolate && evenly).then(|| aitken(a(2), a(1), a(0))).flatten();
        let acc_prev = (config.extrapolate && evenly4).then(|| aitken(a(3), a(2), a(1))).flatten();
        if raw_ok {
            limit[x] = a(0);
        } else if let (Some(now), Some(before)) = (acc, acc_prev) {
            limit[x] = now;
            extrapolated = true;
            converged &= (now - before).abs() <= config.limit_tol * now.abs();
        } else {
            limit[x] = acc.unwrap_or(a(0));
            converged = false;
        }
    }

    if !converged && k >= 3 {
        let inc: Vec<f64> = root_values.windows(2).map(|w| w[1] - w[0]).collect();
        let (a, b) = (inc[inc.len() - 2], inc[inc.len() - 1]);
        if b > 0.0 && b >= a * (1.0 - 1e-6) {
            return Err(Error::DivergentExhaustion { radius: radii[k - 1], value: root_values[k - 1] });
        }
    }

    Ok(ExhaustionResult {
        radii: radii.clone(),
        approximants,
        root_values,
        sweeps,
        converged,
        extrapolated,
        limit: VertexFunction::new(limit)?,
        monotone: violations.is_empty(),
        violations,
        last,
    })
}

/// The root `β ∈ (0,1)` of
/// `(1-β)^{p-1} = (1/d)(1/β - 1)^{p-1} - 1/d`, for which `β^{|x|}` solves
/// `(Δ_p + 1) u = 0` off the root of the `d`-regular tree.
pub fn tree_beta(p: f64, d: usize) -> Result<f64> {
    check_p(p)?;
    if d < 2 {
        return Err(Error::InvalidDegree(d));
    }
    let dd = d as f64;
    let q = p - 1.0;
    let f = |b: f64| (1.0 - b).powf(q) - ((1.0 / b - 1.0).powf(q) - 1.0) / dd;
    let mut lo = 1e-300_f64;
    let mut hi = 1.0 - f64::EPSILON;
    if !(f(lo) < 0.0 && f(hi) > 0.0) {
        return Err(Error::NoRootBracket);
    }
    for _ in 0..3000 {
        let mid = if hi / lo > 4.0 { (lo * hi).sqrt() } else { 0.5 * (lo + hi) };
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(if f(lo).abs() <= f(hi).abs() { lo } else { hi })
}

/// Spherically symmetric solution of `(Δ_p + α) G = 1_o` on `B_R` with
/// `G = 0` on `S_R`.
///
/// Runs the radial equation backwards from `G(R) = 0, G(R-1) = 1`, where
/// the decaying solution dominates, and fixes the scale from the equation at
/// the root. This is the radial form of the zero-Dirichlet exhaustion step.
pub fn radial_green(spec: &ModelGraphSpec, p: f64, alpha: f64) -> Result<SphericalFunction> {
    check_p(p)?;
    if !(alpha >= 0.0) || !alpha.is_finite() {
        return Err(Error::InvalidConfig(format!("alpha must be nonnegative, got {alpha}")));
    }
    let r = spec.radius();
    let q = p - 1.0;
    let flux = spec.boundary_weights();
    let mass = spec.sphere_masses();
    let mut g = vec![0.0; r + 1];
    g[r - 1] = 1.0;
    for k in (1..r).rev() {
        let out = flux[k] * spow(g[k] - g[k + 1], q) + alpha * mass[k] * spow(g[k], q);
        g[k - 1] = g[k] + spow(out / flux[k - 1], 1.0 / q);
        if g[k - 1] > 1e200 {
            let s = g[k - 1];
            for v in &mut g[k - 1..] {
                *v /= s;
            }
        }
    }
    let at_root = flux[0] * spow(g[0] - g[1], q) + alpha * mass[0] * spow(g[0], q);
    let lambda = (spec.root_measure() / at_root).powf(1.0 / q);
    Ok(SphericalFunction(g.into_iter().map(|v| v * lambda).collect()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ShootingConfig {
    /// Upper end of the initial bracket for `G(0)`.
    pub cap: f64,
    /// Accept once `G(R) <= shoot_tol · G(0)` with no sign change.
    pub shoot_tol: f64,
    pub max_bisections: usize,
}

impl Default for ShootingConfig {
    fn default() -> Self {
        Self { cap: 1e6, shoot_tol: 1e-12, max_bisections: 200 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShootingResult {
    pub g0: f64,
    pub values: SphericalFunction,
    /// Radii up to which the bracketing trajectories still agree to 1e-8;
    /// rounding in `G(0)` grows geometrically beyond it.
    pub valid_radius: usize,
    pub bisections: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Shot {
    /// Crossed zero: `G(0)` too small.
    Under,
    /// Turned upwards: `G(0)` too large.
    Over,
    /// Positive and decreasing through `R`.
    Inside,
}

fn classify_shot(values: &[f64]) -> Shot {
    for k in 1..values.len() {
        if values[k] <= 0.0 {
            return Shot::Under;
        }
        if values[k] > values[k - 1] {
            return Shot::Over;
        }
    }
    Shot::Inside
}

/// Bisection on `G(0)` for the forward flux recurrence: find the smallest
/// initial value whose trajectory stays positive and nonincreasing through
/// `R`. Forward integration amplifies errors in `G(0)` geometrically, so the
/// usable range is reported in `valid_radius`; [`radial_green`] is the
/// stable alternative.
pub fn shoot_green(spec: &ModelGraphSpec, p: f64, alpha: f64, config: &ShootingConfig) -> Result<ShootingResult> {
    let mut hi = config.cap;
    let first = spec.spherical_flux_solve(p, alpha, hi)?;
    if classify_shot(first.values.values()) == Shot::Under {
        return Err(Error::NoRootBracket);
    }
    let mut lo = 0.0;
    let mut lo_values: Option<Vec<f64>> = None;
    let mut hi_values = first.values.0;
    let mut bisections = 0;
    while bisections < config.max_bisections {
        let r = spec.radius();
        if classify_shot(&hi_values) == Shot::Inside && hi_values[r] <= config.shoot_tol * hi_values[0] {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        bisections += 1;
        let traj = spec.spherical_flux_solve(p, alpha, mid)?.values.0;
        match classify_shot(&traj) {
            Shot::Under => {
                lo = mid;
                lo_values = Some(traj);
            }
            Shot::Over | Shot::Inside => {
                hi = mid;
                hi_values = traj;
            }
        }
    }
    let valid_radius = match &lo_values {
        Some(lv) => hi_values
            .iter()
            .zip(lv)
            .position(|(h, l)| !(h > &0.0) || (h - l).abs() > 1e-8 * h.abs())
            .map_or(spec.radius(), |k| k.saturating_sub(1)),
        None => spec.radius(),
    };
    Ok(ShootingResult { g0: hi, values: SphericalFunction(hi_values), valid_radius, bisections })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonOutcome {
    pub holds: bool,
    pub first_violation: Option<usize>,
}

/// Weak comparison on `region`: with `v` superharmonic, `u` subharmonic and
/// `u ≤ v` on the outer vertex boundary, checks `u ≤ v + tol` on `region`.
pub fn weak_comparison_check(
    op: &SchrodingerOperator<'_>,
    u: &VertexFunction,
    v: &VertexFunction,
    region: &[usize],
    tol: f64,
) -> Result<ComparisonOutcome> {
    let g = op.graph();
    let cv = op.classify(v, region, tol)?;
    if !cv.aggregate.is_superharmonic() {
        return Err(Error::PreconditionViolated("v is not superharmonic on the region".into()));
    }
    let cu = op.classify(u, region, tol)?;
    if !cu.aggregate.is_subharmonic() {
        return Err(Error::PreconditionViolated("u is not subharmonic on the region".into()));
    }
    let mut inside = vec![false; g.len()];
    for &x in region {
        inside[x] = true;
    }
    for &x in region {
        for &(y, _) in g.neighbors(x) {
            if !inside[y] && u[y] > v[y] + tol {
                return Err(Error::PreconditionViolated(format!("u > v at boundary vertex {y}")));
            }
        }
    }
    let first_violation = region.iter().copied().find(|&x| u[x] > v[x] + tol);
    Ok(ComparisonOutcome { holds: first_violation.is_none(), first_violation })
}
