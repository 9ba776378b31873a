//! Spherically symmetric graphs given by per-sphere data: sizes `#S_k`,
//! the edge weight between consecutive spheres and the vertex measure.
//!
//! Everything radial reduces to two layer sequences, `m(S_k)` and the flux
//! `∂B_k = Σ_{x∈S_k, y∈S_{k+1}} b(x,y)`. [`ModelGraphSpec::radial_quotient`]
//! packs them into a weighted path which reproduces `Δ_p`, energies and
//! edge ratios of spherically symmetric functions exactly.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::linear_fit;
use crate::graph::{VertexFunction, WeightedGraph};
use crate::operator::{check_p, spow};

/// How consecutive spheres are connected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Wiring {
    /// Every vertex of `S_k` owns a block of `#S_{k+1}/#S_k` children.
    Tree,
    /// All pairs between consecutive spheres.
    CompleteBipartite,
}

/// Declared large-`k` behaviour of `∂B_k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GrowthLaw {
    /// `∂B_{k+1}/∂B_k → ratio`.
    Geometric { ratio: f64 },
    /// `∂B_k ≍ k^exponent`.
    PowerLaw { exponent: f64 },
}

impl GrowthLaw {
    /// Convergence of `Σ (1/∂B_k)^{1/(p-1)}` under the law.
    pub fn summable(self, p: f64) -> bool {
        match self {
            GrowthLaw::Geometric { ratio } => ratio > 1.0,
            GrowthLaw::PowerLaw { exponent } => exponent / (p - 1.0) > 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelKind {
    Tree { d: usize },
    Antitree { gamma: f64 },
    Path,
    Custom,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelGraphSpec {
    kind: ModelKind,
    sphere_sizes: Vec<usize>,
    /// Per-edge weight between `S_k` and `S_{k+1}`, `k < R`.
    weights: Vec<f64>,
    /// Measure of each vertex of `S_k`.
    measures: Vec<f64>,
    wiring: Wiring,
    law: Option<GrowthLaw>,
}

impl ModelGraphSpec {
    /// General constructor; validates the invariants.
    pub fn custom(sphere_sizes: Vec<usize>, weights: Vec<f64>, measures: Vec<f64>, wiring: Wiring) -> Result<Self> {
        let spec = Self { kind: ModelKind::Custom, sphere_sizes, weights, measures, wiring, law: None };
        spec.validate()?;
        Ok(spec)
    }

    /// `d`-regular tree with unit weights and measures, `k_+ = d`, `k_- = 1`.
    pub fn tree(d: usize, radius: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidDegree(d));
        }
        let mut sizes = Vec::with_capacity(radius + 1);
        let mut s = 1usize;
        for _ in 0..=radius {
            sizes.push(s);
            s = s
                .checked_mul(d)
                .ok_or_else(|| Error::InvalidSpec(format!("tree of degree {d} too large at radius {radius}")))?;
        }
        let mut spec = Self::custom(sizes, vec![1.0; radius], vec![1.0; radius + 1], Wiring::Tree)?;
        spec.kind = ModelKind::Tree { d };
        spec.law = Some(GrowthLaw::Geometric { ratio: d as f64 });
        Ok(spec)
    }

    /// Anti-tree: `#S_0 = 1`, `#S_{r+1} = ⌈r^γ⌉` (at least 1), complete
    /// bipartite unit weights.
    pub fn antitree(gamma: f64, radius: usize) -> Result<Self> {
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(Error::InvalidSpec(format!("gamma must be positive, got {gamma}")));
        }
        let mut sizes = vec![1usize];
        for r in 0..radius {
            let s = (r as f64).powf(gamma).ceil();
            if s > 1e12 {
                return Err(Error::InvalidSpec("anti-tree sphere too large".into()));
            }
            sizes.push((s as usize).max(1));
        }
        let mut spec = Self::custom(sizes, vec![1.0; radius], vec![1.0; radius + 1], Wiring::CompleteBipartite)?;
        spec.kind = ModelKind::Antitree { gamma };
        spec.law = Some(GrowthLaw::PowerLaw { exponent: 2.0 * gamma });
        Ok(spec)
    }

    /// The half-line `0 - 1 - 2 - …` with unit data.
    pub fn path(radius: usize) -> Result<Self> {
        let mut spec = Self::custom(vec![1; radius + 1], vec![1.0; radius], vec![1.0; radius + 1], Wiring::Tree)?;
        spec.kind = ModelKind::Path;
        spec.law = Some(GrowthLaw::PowerLaw { exponent: 0.0 });
        Ok(spec)
    }

    pub fn with_law(mut self, law: GrowthLaw) -> Self {
        self.law = Some(law);
        self
    }

    fn validate(&self) -> Result<()> {
        let sizes = &self.sphere_sizes;
        if sizes.len() < 2 {
            return Err(Error::InvalidSpec("need at least the root sphere and one more".into()));
        }
        if sizes[0] != 1 {
            return Err(Error::InvalidSpec(format!("#S_0 must be 1, got {}", sizes[0])));
        }
        if let Some(r) = sizes.iter().position(|&s| s == 0) {
            return Err(Error::InvalidSpec(format!("sphere {r} is empty")));
        }
        let radius = sizes.len() - 1;
        if self.weights.len() != radius {
            return Err(Error::InvalidSpec(format!("expected {radius} weights, got {}", self.weights.len())));
        }
        if self.measures.len() != radius + 1 {
            return Err(Error::InvalidSpec(format!("expected {} measures, got {}", radius + 1, self.measures.len())));
        }
        if let Some(w) = self.weights.iter().find(|w| !(**w > 0.0) || !w.is_finite()) {
            return Err(Error::InvalidSpec(format!("weights must be positive, got {w}")));
        }
        if let Some(m) = self.measures.iter().find(|m| !(**m > 0.0) || !m.is_finite()) {
            return Err(Error::InvalidSpec(format!("measures must be positive, got {m}")));
        }
        if self.wiring == Wiring::Tree {
            if let Some(k) = (0..radius).find(|&k| sizes[k + 1] % sizes[k] != 0) {
                return Err(Error::InvalidSpec(format!("tree wiring needs #S_{k} to divide #S_{}", k + 1)));
            }
        }
        Ok(())
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn radius(&self) -> usize {
        self.sphere_sizes.len() - 1
    }

    pub fn sphere_sizes(&self) -> &[usize] {
        &self.sphere_sizes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn measures(&self) -> &[f64] {
        &self.measures
    }

    pub fn wiring(&self) -> Wiring {
        self.wiring
    }

    pub fn law(&self) -> Option<GrowthLaw> {
        self.law
    }

    pub fn root_measure(&self) -> f64 {
        self.measures[0]
    }

    /// Total number of vertices of the realized ball.
    pub fn vertex_count(&self) -> usize {
        self.sphere_sizes.iter().sum()
    }

    /// Id of the first vertex of `S_k` in the realized graph.
    pub fn sphere_offset(&self, k: usize) -> usize {
        self.sphere_sizes[..k].iter().sum()
    }

    fn edges_between(&self, k: usize) -> f64 {
        let (a, b) = (self.sphere_sizes[k] as f64, self.sphere_sizes[k + 1] as f64);
        match self.wiring {
            Wiring::Tree => b,
            Wiring::CompleteBipartite => a * b,
        }
    }

    /// `∂B_k`, the total weight between `S_k` and `S_{k+1}`.
    pub fn boundary_weight(&self, k: usize) -> Result<f64> {
        if k >= self.radius() {
            return Err(Error::RadiusOutOfRange { radius: k, limit: self.radius() });
        }
        Ok(self.weights[k] * self.edges_between(k))
    }

    pub fn boundary_weights(&self) -> Vec<f64> {
        (0..self.radius()).map(|k| self.weights[k] * self.edges_between(k)).collect()
    }

    /// `m(S_k)` for every sphere.
    pub fn sphere_masses(&self) -> Vec<f64> {
        self.sphere_sizes.iter().zip(&self.measures).map(|(&s, &m)| s as f64 * m).collect()
    }

    /// The same data cut at a smaller radius.
    pub fn truncated(&self, radius: usize) -> Result<Self> {
        if radius == 0 || radius > self.radius() {
            return Err(Error::RadiusOutOfRange { radius, limit: self.radius() });
        }
        Ok(Self {
            kind: self.kind,
            sphere_sizes: self.sphere_sizes[..=radius].to_vec(),
            weights: self.weights[..radius].to_vec(),
            measures: self.measures[..=radius].to_vec(),
            wiring: self.wiring,
            law: self.law,
        })
    }

    /// Concrete ball `B_R(o)`; vertex ids run sphere by sphere.
    pub fn realize(&self) -> Result<WeightedGraph> {
        let n = self.vertex_count();
        let mut measures = Vec::with_capacity(n);
        for (&s, &m) in self.sphere_sizes.iter().zip(&self.measures) {
            measures.extend(std::iter::repeat(m).take(s));
        }
        let mut edges = Vec::new();
        let mut offset = 0;
        for k in 0..self.radius() {
            let (a, b) = (self.sphere_sizes[k], self.sphere_sizes[k + 1]);
            let next = offset + a;
            let w = self.weights[k];
            match self.wiring {
                Wiring::Tree => {
                    let c = b / a;
                    for i in 0..a {
                        for j in 0..c {
                            edges.push((offset + i, next + i * c + j, w));
                        }
                    }
                }
                Wiring::CompleteBipartite => {
                    for i in 0..a {
                        for j in 0..b {
                            edges.push((offset + i, next + j, w));
                        }
                    }
                }
            }
            offset = next;
        }
        WeightedGraph::build(&edges, &measures, 0)
    }

    /// Weighted path `0..=R` with `m(k) = m(S_k)` and `b(k, k+1) = ∂B_k`.
    pub fn radial_quotient(&self) -> Result<WeightedGraph> {
        let edges: Vec<_> = self.boundary_weights().into_iter().enumerate().map(|(k, w)| (k, k + 1, w)).collect();
        WeightedGraph::build(&edges, &self.sphere_masses(), 0)
    }

    /// Checks that `g` carries this spec's layer data: the same `m(S_k)` and
    /// `∂B_k` (relative `tol`) and no edges inside a sphere. Works for the
    /// realization and for the radial quotient alike.
    pub fn check_layers(&self, g: &WeightedGraph, tol: f64) -> Result<()> {
        let radius = self.radius();
        if g.max_depth() != radius || g.root() != 0 {
            return Err(Error::PreconditionViolated(format!(
                "graph depth {} does not match model radius {radius}",
                g.max_depth()
            )));
        }
        let mut mass = vec![0.0; radius + 1];
        let mut flux = vec![0.0; radius];
        for x in 0..g.len() {
            mass[g.depth(x)] += g.measure(x);
        }
        for (x, y, b) in g.edges() {
            let (rx, ry) = (g.depth(x), g.depth(y));
            if rx == ry {
                return Err(Error::PreconditionViolated(format!("edge ({x}, {y}) lies inside sphere {rx}")));
            }
            flux[rx.min(ry)] += b;
        }
        let close = |a: f64, b: f64| (a - b).abs() <= tol * a.abs().max(b.abs());
        for (k, (&a, b)) in mass.iter().zip(self.sphere_masses()).enumerate() {
            if !close(a, b) {
                return Err(Error::PreconditionViolated(format!("m(S_{k}) = {a}, model says {b}")));
            }
        }
        for (k, (&a, b)) in flux.iter().zip(self.boundary_weights()).enumerate() {
            if !close(a, b) {
                return Err(Error::PreconditionViolated(format!("layer flux {k} = {a}, model says {b}")));
            }
        }
        Ok(())
    }

    /// Subcriticality of `Δ_p`, from the declared law or, failing that, from
    /// a fit of the outer half of the layer fluxes.
    pub fn subcriticality(&self, p: f64) -> Result<Subcriticality> {
        check_p(p)?;
        if let Some(law) = self.law {
            return Ok(Subcriticality { subcritical: law.summable(p), law, declared: true, goodness: 1.0 });
        }
        let (law, goodness) = self.infer_law().ok_or(Error::UnknownAsymptotics)?;
        let margin = 0.1;
        let decided = match law {
            GrowthLaw::Geometric { ratio } => (ratio.ln().abs() > margin).then_some(ratio > 1.0),
            GrowthLaw::PowerLaw { exponent } => {
                let s = exponent / (p - 1.0);
                ((s - 1.0).abs() > margin).then_some(s > 1.0)
            }
        };
        match decided {
            Some(subcritical) => Ok(Subcriticality { subcritical, law, declared: false, goodness }),
            None => Err(Error::UnknownAsymptotics),
        }
    }

    pub fn is_subcritical(&self, p: f64) -> Result<bool> {
        Ok(self.subcriticality(p)?.subcritical)
    }

    fn infer_law(&self) -> Option<(GrowthLaw, f64)> {
        let flux = self.boundary_weights();
        let start = (flux.len() / 2).max(1);
        let ks: Vec<usize> = (start..flux.len()).collect();
        if ks.len() < 4 {
            return None;
        }
        let ys: Vec<f64> = ks.iter().map(|&k| flux[k].ln()).collect();
        let lin: Vec<f64> = ks.iter().map(|&k| k as f64).collect();
        let log: Vec<f64> = ks.iter().map(|&k| (k as f64).ln()).collect();
        let geo = linear_fit(&lin, &ys)?;
        let pow = linear_fit(&log, &ys)?;
        // the power fit wins ties: a constant flux is the path, not a ratio-1 geometric law
        let best = if pow.r_squared >= geo.r_squared {
            (GrowthLaw::PowerLaw { exponent: pow.slope }, pow.r_squared)
        } else {
            (GrowthLaw::Geometric { ratio: geo.slope.exp() }, geo.r_squared)
        };
        (best.1 >= 0.99).then_some(best)
    }

    /// `G_0(k) = Σ_{j≥k} (m(o)/∂B_j)^{1/(p-1)}` for every radius `k ≤ R`:
    /// partial sums up to `R-1` plus a tail estimate.
    pub fn green0_profile(&self, p: f64) -> Result<Vec<Green0Value>> {
        let sub = self.subcriticality(p)?;
        if !sub.subcritical {
            return Err(Error::SeriesDivergent(p));
        }
        let radius = self.radius();
        let mo = self.root_measure();
        let terms: Vec<f64> = self.boundary_weights().iter().map(|&w| (mo / w).powf(1.0 / (p - 1.0))).collect();
        let last = terms[radius - 1];
        let (tail, tail_bound, exact) = match sub.law {
            GrowthLaw::Geometric { ratio } => {
                let rho = ratio.powf(-1.0 / (p - 1.0));
                let t = last * rho / (1.0 - rho);
                (t, t, true)
            }
            GrowthLaw::PowerLaw { exponent } => {
                if radius < 2 {
                    return Err(Error::InvalidSpec("power-law tail needs R >= 2".into()));
                }
                let sigma = exponent / (p - 1.0);
                let k = (radius - 1) as f64;
                let c = last * k.powf(sigma);
                let bound = c * k.powf(1.0 - sigma) / (sigma - 1.0);
                let estimate = c * (k + 0.5).powf(1.0 - sigma) / (sigma - 1.0);
                (estimate, bound, false)
            }
        };
        let mut out = vec![Green0Value::default(); radius + 1];
        let mut partial = 0.0;
        for k in (0..=radius).rev() {
            if k < radius {
                partial += terms[k];
            }
            out[k] = Green0Value {
                value: partial + tail,
                lower: if exact { partial + tail } else { partial },
                upper: partial + tail_bound,
                tail_exact: exact,
            };
        }
        Ok(out)
    }

    /// [`green0_profile`](Self::green0_profile) at one radius.
    pub fn green0_closed_form(&self, p: f64, radius: usize) -> Result<Green0Value> {
        if radius > self.radius() {
            return Err(Error::RadiusOutOfRange { radius, limit: self.radius() });
        }
        Ok(self.green0_profile(p)?[radius])
    }

    /// Forward flux recurrence for a spherical solution of
    /// `(Δ_p + α) G = 1_o` with prescribed `G(0)`:
    /// `∂B_k (G(k) - G(k+1))^<p-1> = m(o) - α Σ_{j≤k} m(S_j) G(j)^<p-1>`.
    pub fn spherical_flux_solve(&self, p: f64, alpha: f64, g0: f64) -> Result<FluxSolution> {
        check_p(p)?;
        if !(g0 > 0.0) || !g0.is_finite() {
            return Err(Error::NonpositiveInitial(g0));
        }
        if !(alpha >= 0.0) {
            return Err(Error::InvalidSpec(format!("alpha must be nonnegative, got {alpha}")));
        }
        let flux = self.boundary_weights();
        let mass = self.sphere_masses();
        let mo = self.root_measure();
        let mut g = vec![g0];
        let mut absorbed = 0.0;
        for k in 0..self.radius() {
            absorbed += alpha * mass[k] * spow(g[k], p - 1.0);
            let step = spow((mo - absorbed) / flux[k], 1.0 / (p - 1.0));
            g.push(g[k] - step);
        }
        let first_nonpositive = g.iter().position(|&v| !(v > 0.0));
        Ok(FluxSolution { values: SphericalFunction(g), first_nonpositive })
    }

    /// `k_±` of every vertex of `g`, as `(k_+, k_-)`.
    pub fn curvatures(g: &WeightedGraph) -> Vec<(f64, f64)> {
        (0..g.len())
            .map(|x| {
                let r = g.depth(x);
                let (mut kp, mut km) = (0.0, 0.0);
                for &(y, b) in g.neighbors(x) {
                    let ry = g.depth(y);
                    if ry == r + 1 {
                        kp += b;
                    } else if ry + 1 == r {
                        km += b;
                    }
                }
                (kp / g.measure(x), km / g.measure(x))
            })
            .collect()
    }

    /// True when `k_±` are constant on spheres (relative `tol`).
    pub fn is_spherically_symmetric(g: &WeightedGraph, tol: f64) -> bool {
        let k = Self::curvatures(g);
        let mut first: Vec<Option<(f64, f64)>> = vec![None; g.max_depth() + 1];
        let close = |a: f64, b: f64| (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0);
        (0..g.len()).all(|x| match first[g.depth(x)] {
            None => {
                first[g.depth(x)] = Some(k[x]);
                true
            }
            Some((p, m)) => close(p, k[x].0) && close(m, k[x].1),
        })
    }

    pub fn to_document(&self) -> ModelDocument {
        let (kind, d, gamma) = match self.kind {
            ModelKind::Tree { d } => ("tree", Some(d), None),
            ModelKind::Antitree { gamma } => ("antitree", None, Some(gamma)),
            ModelKind::Path => ("path", None, None),
            ModelKind::Custom => ("custom", None, None),
        };
        ModelDocument {
            kind: kind.into(),
            d,
            gamma,
            radius: self.radius(),
            p: None,
            sphere_sizes: Some(self.sphere_sizes.clone()),
            weights: Some(self.weights.clone()),
            measures: Some(self.measures.clone()),
            wiring: Some(self.wiring),
            law: self.law,
        }
    }

    pub fn from_document(doc: &ModelDocument) -> Result<Self> {
        let mut spec = match doc.kind.as_str() {
            "tree" => Self::tree(doc.d.ok_or_else(|| Error::InvalidSpec("tree needs d".into()))?, doc.radius)?,
            "antitree" => {
                Self::antitree(doc.gamma.ok_or_else(|| Error::InvalidSpec("antitree needs gamma".into()))?, doc.radius)?
            }
            "path" => Self::path(doc.radius)?,
            "custom" => {
                let sizes =
                    doc.sphere_sizes.clone().ok_or_else(|| Error::InvalidSpec("custom needs sphere_sizes".into()))?;
                if sizes.len() != doc.radius + 1 {
                    return Err(Error::InvalidSpec(format!("expected {} sphere sizes", doc.radius + 1)));
                }
                let weights = doc.weights.clone().unwrap_or_else(|| vec![1.0; doc.radius]);
                let measures = doc.measures.clone().unwrap_or_else(|| vec![1.0; doc.radius + 1]);
                Self::custom(sizes, weights, measures, doc.wiring.unwrap_or(Wiring::CompleteBipartite))?
            }
            other => return Err(Error::InvalidSpec(format!("unknown kind {other:?}"))),
        };
        if doc.kind != "custom" {
            // named families accept overrides of the per-layer data only
            if let Some(w) = &doc.weights {
                spec.weights = w.clone();
            }
            if let Some(m) = &doc.measures {
                spec.measures = m.clone();
            }
            if doc.weights.is_some() || doc.measures.is_some() {
                spec.validate()?;
            }
        }
        if let Some(law) = doc.law {
            spec.law = Some(law);
        }
        Ok(spec)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ModelDocument = serde_json::from_str(text).map_err(|e| Error::ParseError(e.to_string()))?;
        Self::from_document(&doc)
    }
}

/// Serialized form of a [`ModelGraphSpec`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(rename = "R")]
    pub radius: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sphere_sizes: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measures: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wiring: Option<Wiring>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub law: Option<GrowthLaw>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Subcriticality {
    pub subcritical: bool,
    pub law: GrowthLaw,
    /// False when the law was fitted from the truncated data.
    pub declared: bool,
    /// R² of the fit, 1 for declared laws.
    pub goodness: f64,
}

/// A value of `G_0` with the bracket coming from the tail estimate.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Green0Value {
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
    /// The tail was summed exactly (geometric law).
    pub tail_exact: bool,
}

/// Values indexed by radius `0..=R`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SphericalFunction(pub Vec<f64>);

impl SphericalFunction {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    /// The function `x ↦ f(|x|)` on `g`.
    pub fn lift(&self, g: &WeightedGraph) -> Result<VertexFunction> {
        let limit = self.0.len().saturating_sub(1);
        if g.max_depth() > limit {
            return Err(Error::RadiusOutOfRange { radius: g.max_depth(), limit });
        }
        VertexFunction::radial(g, |r| self.0[r])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluxSolution {
    pub values: SphericalFunction,
    /// First radius where the trajectory is no longer positive.
    pub first_nonpositive: Option<usize>,
}
