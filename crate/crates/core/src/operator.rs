//! The weighted p-Laplacian, the quasilinear Schrödinger operator
//! `H = Δ_p + V`, its energy functional and the simplified energy.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{BoundaryDecomposition, VertexFunction, WeightedGraph};

/// Default absolute tolerance for (sub/super)harmonicity tags.
pub const DEFAULT_CLASSIFY_TOL: f64 = 1e-9;

/// `a^<r> = a |a|^(r-1)` with `0^<r> = 0`.
pub fn signed_power(a: f64, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::NonpositiveExponent(r));
    }
    Ok(spow(a, r))
}

#[inline]
pub(crate) fn spow(a: f64, r: f64) -> f64 {
    if a == 0.0 {
        0.0
    } else if r == 1.0 {
        a
    } else {
        a.signum() * a.abs().powf(r)
    }
}

pub(crate) fn check_p(p: f64) -> Result<()> {
    if p > 1.0 && p.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidP(p))
    }
}

/// `Δ_p f(x)` without domain checks.
#[inline]
pub(crate) fn p_laplacian(g: &WeightedGraph, p: f64, f: &[f64], x: usize) -> f64 {
    let fx = f[x];
    let flux: f64 = g.neighbors(x).iter().map(|&(y, b)| b * spow(fx - f[y], p - 1.0)).sum();
    flux / g.measure(x)
}

/// `Δ_p f(x) = (1/m(x)) sum_y b(x,y) (f(x) - f(y))^<p-1>` at an interior vertex.
pub fn apply_p_laplacian(
    g: &WeightedGraph,
    domain: &BoundaryDecomposition,
    p: f64,
    f: &VertexFunction,
    x: usize,
) -> Result<f64> {
    check_p(p)?;
    f.check_len(g)?;
    if x >= g.len() {
        return Err(Error::VertexOutOfRange(x));
    }
    if domain.is_boundary(x) {
        return Err(Error::BoundaryVertex(x));
    }
    Ok(p_laplacian(g, p, f.values(), x))
}

/// `H = Δ_p + V` on a graph together with the set of vertices where it may
/// be evaluated.
#[derive(Debug, Clone)]
pub struct SchrodingerOperator<'g> {
    graph: &'g WeightedGraph,
    p: f64,
    potential: VertexFunction,
    domain: BoundaryDecomposition,
}

impl<'g> SchrodingerOperator<'g> {
    /// Operator on the closed graph (every vertex interior).
    pub fn new(graph: &'g WeightedGraph, p: f64, potential: VertexFunction) -> Result<Self> {
        check_p(p)?;
        potential.check_len(graph)?;
        Ok(Self { graph, p, potential, domain: BoundaryDecomposition::closed(graph) })
    }

    /// The free p-Laplacian, `V = 0`.
    pub fn laplacian(graph: &'g WeightedGraph, p: f64) -> Result<Self> {
        Self::new(graph, p, VertexFunction::zeros(graph.len()))
    }

    pub fn with_domain(mut self, domain: BoundaryDecomposition) -> Result<Self> {
        if domain.len() != self.graph.len() {
            return Err(Error::LengthMismatch { expected: self.graph.len(), got: domain.len() });
        }
        self.domain = domain;
        Ok(self)
    }

    pub fn graph(&self) -> &'g WeightedGraph {
        self.graph
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn potential(&self) -> &VertexFunction {
        &self.potential
    }

    pub fn domain(&self) -> &BoundaryDecomposition {
        &self.domain
    }

    fn check_vertex(&self, x: usize) -> Result<()> {
        if x >= self.graph.len() {
            return Err(Error::VertexOutOfRange(x));
        }
        if self.domain.is_boundary(x) {
            return Err(Error::BoundaryVertex(x));
        }
        Ok(())
    }

    pub fn p_laplacian_at(&self, f: &VertexFunction, x: usize) -> Result<f64> {
        f.check_len(self.graph)?;
        self.check_vertex(x)?;
        Ok(p_laplacian(self.graph, self.p, f.values(), x))
    }

    /// `H[f](x) = Δ_p f(x) + V(x) f(x)^<p-1>`.
    pub fn apply(&self, f: &VertexFunction, x: usize) -> Result<f64> {
        f.check_len(self.graph)?;
        self.check_vertex(x)?;
        Ok(self.apply_raw(f.values(), x))
    }

    #[inline]
    pub(crate) fn apply_raw(&self, f: &[f64], x: usize) -> f64 {
        p_laplacian(self.graph, self.p, f, x) + self.potential[x] * spow(f[x], self.p - 1.0)
    }

    /// `H[f]` at every interior vertex, as `(vertex, value)` pairs.
    pub fn apply_interior(&self, f: &VertexFunction) -> Result<Vec<(usize, f64)>> {
        f.check_len(self.graph)?;
        Ok(self.domain.interior().iter().map(|&x| (x, self.apply_raw(f.values(), x))).collect())
    }

    /// `Q(φ) = ½ Σ_{x,y} b |∇φ|^p + Σ_x m V |φ|^p` for `φ` vanishing on the boundary.
    pub fn energy(&self, phi: &VertexFunction) -> Result<f64> {
        phi.check_len(self.graph)?;
        if let Some(&x) = self.domain.boundary().iter().find(|&&x| phi[x] != 0.0) {
            return Err(Error::SupportTouchesBoundary(x));
        }
        Ok(self.energy_raw(phi.values()))
    }

    pub(crate) fn energy_raw(&self, phi: &[f64]) -> f64 {
        let p = self.p;
        // each unordered edge once accounts for the ½ over ordered pairs
        let kinetic: f64 =
            self.graph.edges().map(|(x, y, b)| b * (phi[x] - phi[y]).abs().powf(p)).sum();
        let potential: f64 = (0..self.graph.len())
            .filter(|&x| phi[x] != 0.0)
            .map(|x| self.graph.measure(x) * self.potential[x] * phi[x].abs().powf(p))
            .sum();
        kinetic + potential
    }

    /// Tags `H[f]` on `region` as harmonic / sub / superharmonic within `tol`.
    pub fn classify(&self, f: &VertexFunction, region: &[usize], tol: f64) -> Result<Classification> {
        f.check_len(self.graph)?;
        let mut vertices = Vec::with_capacity(region.len());
        for &x in region {
            self.check_vertex(x)?;
            let value = self.apply_raw(f.values(), x);
            vertices.push(VertexClass { vertex: x, value, tag: Tag::of(value, tol) });
        }
        let aggregate = Tag::aggregate(vertices.iter().map(|v| v.value), tol);
        Ok(Classification { tol, vertices, aggregate })
    }

    /// Classification over all interior vertices.
    pub fn classify_interior(&self, f: &VertexFunction, tol: f64) -> Result<Classification> {
        let region = self.domain.interior().to_vec();
        self.classify(f, &region, tol)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tag {
    Harmonic,
    Subharmonic,
    Superharmonic,
    None,
}

impl Tag {
    /// Tag of a single value: harmonic wins when both one-sided tests pass.
    pub fn of(value: f64, tol: f64) -> Tag {
        if value.abs() <= tol {
            Tag::Harmonic
        } else if value < 0.0 {
            Tag::Subharmonic
        } else {
            Tag::Superharmonic
        }
    }

    fn aggregate(mut values: impl Iterator<Item = f64> + Clone, tol: f64) -> Tag {
        let sub = values.clone().all(|v| v <= tol);
        let sup = values.all(|v| v >= -tol);
        match (sub, sup) {
            (true, true) => Tag::Harmonic,
            (true, false) => Tag::Subharmonic,
            (false, true) => Tag::Superharmonic,
            (false, false) => Tag::None,
        }
    }

    pub fn is_subharmonic(self) -> bool {
        matches!(self, Tag::Harmonic | Tag::Subharmonic)
    }

    pub fn is_superharmonic(self) -> bool {
        matches!(self, Tag::Harmonic | Tag::Superharmonic)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VertexClass {
    pub vertex: usize,
    pub value: f64,
    pub tag: Tag,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub tol: f64,
    pub vertices: Vec<VertexClass>,
    pub aggregate: Tag,
}

impl Classification {
    pub fn max_abs(&self) -> f64 {
        self.vertices.iter().map(|v| v.value.abs()).fold(0.0, f64::max)
    }

    pub fn max_value(&self) -> f64 {
        self.vertices.iter().map(|v| v.value).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_value(&self) -> f64 {
        self.vertices.iter().map(|v| v.value).fold(f64::INFINITY, f64::min)
    }
}

/// Simplified energy
/// `E(φ) = Σ b (u⊗u) |∇φ|² [ |∇u| ⟨|φ|⟩ + (u⊗u)^{1/2} |∇φ| ]^{p-2}`,
/// summed once per unordered edge so that `E` equals the ground state
/// transform at `p = 2`. Terms with `∇φ = 0` or a vanishing bracket are 0.
pub fn simplified_energy(g: &WeightedGraph, p: f64, u: &VertexFunction, phi: &VertexFunction) -> Result<f64> {
    check_p(p)?;
    u.check_len(g)?;
    phi.check_len(g)?;
    if let Some(x) = u.iter().position(|v| !(v > 0.0)) {
        return Err(Error::NonpositiveGroundFunction(x));
    }
    let mut total = 0.0;
    for (x, y, b) in g.edges() {
        let grad_phi = (phi[x] - phi[y]).abs();
        if grad_phi == 0.0 {
            continue;
        }
        let uu = u[x] * u[y];
        let mean_abs = 0.5 * (phi[x].abs() + phi[y].abs());
        let bracket = (u[x] - u[y]).abs() * mean_abs + uu.sqrt() * grad_phi;
        if bracket == 0.0 {
            continue;
        }
        total += b * uu * grad_phi * grad_phi * bracket.powf(p - 2.0);
    }
    Ok(total)
}

/// `Q(uφ) - Σ_x m u H[u] |φ|^p`, the quantity the simplified energy is
/// two-sided comparable to. Requires `uφ` to vanish on the boundary.
pub fn ground_state_remainder(op: &SchrodingerOperator<'_>, u: &VertexFunction, phi: &VertexFunction) -> Result<f64> {
    let g = op.graph();
    u.check_len(g)?;
    phi.check_len(g)?;
    let product = VertexFunction::new(u.iter().zip(phi.iter()).map(|(a, b)| a * b).collect())?;
    let q = op.energy(&product)?;
    let p = op.p();
    let correction: f64 = op
        .domain()
        .interior()
        .iter()
        .filter(|&&x| phi[x] != 0.0)
        .map(|&x| g.measure(x) * u[x] * op.apply_raw(u.values(), x) * phi[x].abs().powf(p))
        .sum();
    Ok(q - correction)
}

/// `f₊ = max(f, 0)`.
pub fn positive_part(f: &VertexFunction) -> VertexFunction {
    f.map(|v| v.max(0.0))
}

/// `f₋ = max(-f, 0)`.
pub fn negative_part(f: &VertexFunction) -> VertexFunction {
    f.map(|v| (-v).max(0.0))
}

pub fn abs_part(f: &VertexFunction) -> VertexFunction {
    f.map(f64::abs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path3() -> WeightedGraph {
        WeightedGraph::build(&[(0, 1, 1.0), (1, 2, 1.0)], &[1.0; 3], 0).unwrap()
    }

    #[test]
    fn signed_power_cases() {
        assert_eq!(signed_power(-2.0, 3.0).unwrap(), -8.0);
        assert_eq!(signed_power(0.0, 0.5).unwrap(), 0.0);
        assert_eq!(signed_power(3.0, 1.0).unwrap(), 3.0);
        assert_eq!(signed_power(1.0, 0.0), Err(Error::NonpositiveExponent(0.0)));
    }

    #[test]
    fn p_laplacian_on_path() {
        let g = path3();
        let dom = BoundaryDecomposition::closed(&g);
        let f = VertexFunction::new(vec![0.0, 1.0, 0.0]).unwrap();
        assert_eq!(apply_p_laplacian(&g, &dom, 2.0, &f, 1).unwrap(), 2.0);
        assert_eq!(apply_p_laplacian(&g, &dom, 3.0, &f, 1).unwrap(), 2.0);
        assert_eq!(apply_p_laplacian(&g, &dom, 3.0, &f, 0).unwrap(), -1.0);
        let c = VertexFunction::constant(3, 4.2);
        for p in [1.3, 2.0, 3.7] {
            for x in 0..3 {
                assert_eq!(apply_p_laplacian(&g, &dom, p, &c, x).unwrap(), 0.0);
            }
        }
    }

    #[test]
    fn boundary_vertex_rejected() {
        let g = path3();
        let op = SchrodingerOperator::laplacian(&g, 2.0)
            .unwrap()
            .with_domain(BoundaryDecomposition::with_boundary(&g, [2]).unwrap())
            .unwrap();
        let f = VertexFunction::zeros(3);
        assert_eq!(op.apply(&f, 2), Err(Error::BoundaryVertex(2)));
        assert!(op.apply(&f, 1).is_ok());
    }

    #[test]
    fn invalid_p_rejected() {
        let g = path3();
        assert!(matches!(SchrodingerOperator::laplacian(&g, 1.0), Err(Error::InvalidP(_))));
    }

    #[test]
    fn constant_function_sees_only_potential() {
        let g = path3();
        let op = SchrodingerOperator::new(&g, 2.5, VertexFunction::constant(3, 0.7)).unwrap();
        let one = VertexFunction::constant(3, 1.0);
        for x in 0..3 {
            assert!((op.apply(&one, x).unwrap() - 0.7).abs() < 1e-15);
        }
        let zero_v = SchrodingerOperator::laplacian(&g, 2.5).unwrap();
        let c = zero_v.classify_interior(&one, DEFAULT_CLASSIFY_TOL).unwrap();
        assert_eq!(c.aggregate, Tag::Harmonic);
    }

    #[test]
    fn energy_single_edge() {
        let g = WeightedGraph::build(&[(0, 1, 1.0)], &[1.0; 2], 0).unwrap();
        let op = SchrodingerOperator::laplacian(&g, 2.0)
            .unwrap()
            .with_domain(BoundaryDecomposition::with_boundary(&g, [1]).unwrap())
            .unwrap();
        let phi = VertexFunction::new(vec![1.0, 0.0]).unwrap();
        assert_eq!(op.energy(&phi).unwrap(), 1.0);
        assert_eq!(op.energy(&VertexFunction::zeros(2)).unwrap(), 0.0);
        let bad = VertexFunction::new(vec![1.0, 1.0]).unwrap();
        assert_eq!(op.energy(&bad), Err(Error::SupportTouchesBoundary(1)));
    }

    #[test]
    fn energy_is_p_homogeneous() {
        let g = path3();
        let op = SchrodingerOperator::new(&g, 2.7, VertexFunction::new(vec![0.3, -0.2, 1.0]).unwrap()).unwrap();
        let phi = VertexFunction::new(vec![0.4, -1.1, 0.25]).unwrap();
        let q = op.energy(&phi).unwrap();
        for t in [-2.0, 0.5, 3.0] {
            let qt = op.energy(&phi.scaled(t)).unwrap();
            assert!((qt - (t as f64).abs().powf(2.7) * q).abs() < 1e-12 * (1.0 + qt.abs()));
        }
    }

    #[test]
    fn simplified_energy_cases() {
        let g = WeightedGraph::build(&[(0, 1, 1.0)], &[1.0; 2], 0).unwrap();
        let one = VertexFunction::constant(2, 1.0);
        let phi = VertexFunction::new(vec![1.0, 0.0]).unwrap();
        assert_eq!(simplified_energy(&g, 2.0, &one, &phi).unwrap(), 1.0);
        assert_eq!(simplified_energy(&g, 1.5, &one, &VertexFunction::zeros(2)).unwrap(), 0.0);
        assert_eq!(
            simplified_energy(&g, 2.0, &VertexFunction::new(vec![1.0, 0.0]).unwrap(), &phi),
            Err(Error::NonpositiveGroundFunction(1))
        );
        // p < 2 with a flat edge: the 0·∞ term is dropped
        let flat = VertexFunction::new(vec![0.5, 0.5]).unwrap();
        assert_eq!(simplified_energy(&g, 1.5, &one, &flat).unwrap(), 0.0);
    }

    #[test]
    fn positive_and_negative_parts() {
        let f = VertexFunction::new(vec![1.0, -2.0, 0.0]).unwrap();
        assert_eq!(positive_part(&f).values(), &[1.0, 0.0, 0.0]);
        assert_eq!(negative_part(&f).values(), &[0.0, 2.0, 0.0]);
        assert_eq!(abs_part(&f).values(), &[1.0, 2.0, 0.0]);
        let g = VertexFunction::new(vec![0.5, 3.0]).unwrap();
        assert_eq!(positive_part(&g), g);
    }
}
