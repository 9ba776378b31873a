//! Hardy weights built from Green functions, energy probes, null sequences
//! and the edgewise Liouville comparison between two operators.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{bounded_above, linear_fit, LineFit, TrendConfig};
use crate::graph::{BoundaryDecomposition, VertexFunction, WeightedGraph};
use crate::operator::{check_p, p_laplacian, positive_part, spow, SchrodingerOperator};

/// `Φ = G_0^{(p-1)/p}` and `W_op = Δ_pΦ / Φ^{p-1}`, so that
/// `(Δ_p - W_op)[Φ] = 0` on the interior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HardyPackage {
    pub p: f64,
    pub phi: VertexFunction,
    /// Zero on the boundary, where it is not defined.
    pub w_op: VertexFunction,
    /// `max |(Δ_p - W_op)[Φ]|` over the interior.
    pub residual: f64,
}

pub fn hardy_weight(
    g: &WeightedGraph,
    domain: &BoundaryDecomposition,
    p: f64,
    g0: &VertexFunction,
) -> Result<HardyPackage> {
    check_p(p)?;
    g0.check_len(g)?;
    if domain.len() != g.len() {
        return Err(Error::LengthMismatch { expected: g.len(), got: domain.len() });
    }
    if let Some(x) = (0..g.len()).find(|&x| g0[x] < 0.0 || (domain.is_interior(x) && !(g0[x] > 0.0))) {
        return Err(Error::NonpositiveGreen(x));
    }
    let phi = g0.map(|t| t.powf((p - 1.0) / p));
    let mut w = vec![0.0; g.len()];
    for &x in domain.interior() {
        w[x] = p_laplacian(g, p, phi.values(), x) / phi[x].powf(p - 1.0);
    }
    let residual = domain
        .interior()
        .iter()
        .map(|&x| (p_laplacian(g, p, phi.values(), x) - w[x] * spow(phi[x], p - 1.0)).abs())
        .fold(0.0, f64::max);
    Ok(HardyPackage { p, phi, w_op: VertexFunction::new(w)?, residual })
}

impl HardyPackage {
    /// `Δ_p - W_op` on `g` with the given truncation.
    pub fn operator<'g>(&self, g: &'g WeightedGraph, domain: BoundaryDecomposition) -> Result<SchrodingerOperator<'g>> {
        SchrodingerOperator::new(g, self.p, self.w_op.map(|t| -t))?.with_domain(domain)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ProbeWitness {
    Indicator { vertex: usize },
    Random { sample: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeResult {
    pub seed: u64,
    pub samples: usize,
    pub indicators: usize,
    pub min_energy: f64,
    /// `Q(φ) / Σ m |φ|^p` at the minimizer.
    pub min_rayleigh: f64,
    pub witness: Option<ProbeWitness>,
}

impl ProbeResult {
    /// A negative minimum certifies that `Q ≥ 0` fails.
    pub fn certifies_negative(&self, tol: f64) -> bool {
        self.min_energy < -tol
    }
}

/// Minimum of `Q` over random functions supported in the interior and all
/// indicators `1_x`.
pub fn nonnegativity_probe(op: &SchrodingerOperator<'_>, n_samples: usize, seed: u64) -> Result<ProbeResult> {
    let support = op.domain().interior().to_vec();
    nonnegativity_probe_on(op, &support, n_samples, seed)
}

/// [`nonnegativity_probe`] with functions supported in `support`.
pub fn nonnegativity_probe_on(
    op: &SchrodingerOperator<'_>,
    support: &[usize],
    n_samples: usize,
    seed: u64,
) -> Result<ProbeResult> {
    let g = op.graph();
    let p = op.p();
    for &x in support {
        if x >= g.len() {
            return Err(Error::VertexOutOfRange(x));
        }
        if op.domain().is_boundary(x) {
            return Err(Error::SupportTouchesBoundary(x));
        }
    }
    let mut best: Option<(f64, f64, ProbeWitness)> = None;
    let mut consider = |phi: &[f64], witness: ProbeWitness| {
        let norm: f64 = support.iter().map(|&x| g.measure(x) * phi[x].abs().powf(p)).sum();
        if norm == 0.0 {
            return;
        }
        let q = op.energy_raw(phi);
        if best.map_or(true, |(b, _, _)| q < b) {
            best = Some((q, q / norm, witness));
        }
    };
    let mut phi = vec![0.0; g.len()];
    for &x in support {
        phi[x] = 1.0;
        consider(&phi, ProbeWitness::Indicator { vertex: x });
        phi[x] = 0.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for sample in 0..n_samples {
        // three shapes in rotation: positive, signed, sparse positive
        for &x in support {
            phi[x] = match sample % 3 {
                0 => rng.gen::<f64>(),
                1 => rng.gen_range(-1.0..1.0),
                _ => {
                    if rng.gen_bool(0.3) {
                        rng.gen::<f64>()
                    } else {
                        0.0
                    }
                }
            };
        }
        consider(&phi, ProbeWitness::Random { sample });
    }
    let (min_energy, min_rayleigh, witness) = match best {
        Some((q, r, w)) => (q, r, Some(w)),
        None => (0.0, 0.0, None),
    };
    Ok(ProbeResult { seed, samples: n_samples, indicators: support.len(), min_energy, min_rayleigh, witness })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NullSequenceEntry {
    pub n: usize,
    pub energy: f64,
    pub value_at_root: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NullSequenceTrace {
    pub entries: Vec<NullSequenceEntry>,
    /// `Q(φ_n)` nonincreasing along the schedule (relative slack 1e-9).
    pub nonincreasing: bool,
    /// Fit of `log Q(φ_n)` against `log n`.
    pub fit: Option<LineFit>,
}

/// `Q(φ_n)` for `φ_n = Φ · clamp((2n - |x|)/n, 0, 1)` along `ns`.
pub fn null_sequence_experiment(
    op: &SchrodingerOperator<'_>,
    ground: &VertexFunction,
    ns: &[usize],
) -> Result<NullSequenceTrace> {
    let g = op.graph();
    ground.check_len(g)?;
    if let Some(x) = (0..g.len()).find(|&x| !(ground[x] > 0.0)) {
        return Err(Error::NonpositiveGroundFunction(x));
    }
    let mut entries = Vec::with_capacity(ns.len());
    for &n in ns {
        if n == 0 {
            return Err(Error::InvalidConfig("cutoff index n must be positive".into()));
        }
        let phi = VertexFunction::from_fn(g.len(), |x| {
            let t = (2.0 * n as f64 - g.depth(x) as f64) / n as f64;
            ground[x] * t.clamp(0.0, 1.0)
        })?;
        let energy = op.energy(&phi)?;
        let value_at_root = phi[g.root()];
        debug_assert_eq!(value_at_root, ground[g.root()]);
        entries.push(NullSequenceEntry { n, energy, value_at_root });
    }
    let nonincreasing = entries.windows(2).all(|w| w[1].energy <= w[0].energy * (1.0 + 1e-9) + 1e-300);
    let (xs, ys): (Vec<f64>, Vec<f64>) =
        entries.iter().filter(|e| e.energy > 0.0).map(|e| ((e.n as f64).ln(), e.energy.ln())).unzip();
    Ok(NullSequenceTrace { entries, nonincreasing, fit: linear_fit(&xs, &ys) })
}

/// Evidence that the reference operator is critical.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CriticalityEvidence {
    /// E.g. `Δ_p - W_op` for an optimal Hardy weight.
    ConfirmedByConstruction { source: String },
    Probed { min_energy: f64, null_sequence_nonincreasing: bool },
    Unknown,
}

impl CriticalityEvidence {
    /// `None` when there is no evidence either way.
    pub fn supports_criticality(&self, tol: f64) -> Option<bool> {
        match self {
            CriticalityEvidence::ConfirmedByConstruction { .. } => Some(true),
            CriticalityEvidence::Probed { min_energy, null_sequence_nonincreasing } => {
                Some(*min_energy >= -tol && *null_sequence_nonincreasing)
            }
            CriticalityEvidence::Unknown => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeRatio {
    pub x: usize,
    pub y: usize,
    pub radius: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadiusValue {
    pub radius: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioTrace {
    pub edges: Vec<EdgeRatio>,
    pub sup: f64,
    /// Supremum over edges with `max(|x|, |y|) = r`.
    pub per_radius: Vec<RadiusValue>,
    pub slope: Option<f64>,
    pub infinite_edges: usize,
    pub bounded: bool,
}

impl RatioTrace {
    fn from_edges(edges: Vec<EdgeRatio>, cfg: &TrendConfig) -> Self {
        let max_r = edges.iter().map(|e| e.radius).max().unwrap_or(0);
        let mut sups = vec![f64::NAN; max_r + 1];
        for e in &edges {
            let s = &mut sups[e.radius];
            if s.is_nan() || e.value > *s {
                *s = e.value;
            }
        }
        let per_radius: Vec<RadiusValue> = sups
            .iter()
            .enumerate()
            .filter(|(_, v)| !v.is_nan())
            .map(|(radius, &value)| RadiusValue { radius, value })
            .collect();
        let radii: Vec<usize> = per_radius.iter().map(|r| r.radius).collect();
        let values: Vec<f64> = per_radius.iter().map(|r| r.value).collect();
        let (bounded, slope) = bounded_above(&radii, &values, cfg);
        let sup = values.iter().copied().fold(0.0, f64::max);
        let infinite_edges = edges.iter().filter(|e| e.value.is_infinite()).count();
        Self { edges, sup, per_radius, slope, infinite_edges, bounded }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositivePartCondition {
    pub nonzero: bool,
    /// `max H[u₊]` over the checked region.
    pub max_value: f64,
    pub subharmonic: bool,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub p: f64,
    pub ratio1: RatioTrace,
    pub ratio2: RatioTrace,
    /// Edges of `b` missing from `b̃` (counted as violations).
    pub edges_only_in_operator: usize,
    /// Edges of `b̃` missing from `b` (counted as satisfied).
    pub edges_only_in_reference: usize,
    pub evidence: CriticalityEvidence,
    /// (a): `None` when the evidence is unknown.
    pub condition_a: Option<bool>,
    /// (b): `u₊ ≠ 0` and `H[u₊] ≤ 0`.
    pub condition_b: PositivePartCondition,
    /// (c): both ratio families bounded.
    pub condition_c: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ComparisonOptions {
    pub trend: TrendConfig,
    pub classify_tol: f64,
    /// Slack for probed evidence.
    pub evidence_tol: f64,
    /// Vertices left out of the `H[u₊] ≤ 0` check.
    pub exceptional: Vec<usize>,
}

impl Default for ComparisonOptions {
    fn default() -> Self {
        Self { trend: TrendConfig::default(), classify_tol: 1e-9, evidence_tol: 1e-8, exceptional: Vec::new() }
    }
}

/// Conditions (a), (b), (c) of the Liouville comparison between `H` on `b`
/// and the reference `H̃` on `b̃` with positive `v`.
pub fn liouville_conditions(
    h: &SchrodingerOperator<'_>,
    h_ref: &SchrodingerOperator<'_>,
    u: &VertexFunction,
    v: &VertexFunction,
    evidence: CriticalityEvidence,
    opts: &ComparisonOptions,
) -> Result<ComparisonReport> {
    let g = h.graph();
    let gt = h_ref.graph();
    let p = h.p();
    if gt.len() != g.len() {
        return Err(Error::LengthMismatch { expected: g.len(), got: gt.len() });
    }
    if let Some(x) = (0..g.len()).find(|&x| (g.measure(x) - gt.measure(x)).abs() > 1e-12 * g.measure(x)) {
        return Err(Error::MeasureMismatch(x));
    }
    u.check_len(g)?;
    v.check_len(g)?;
    if let Some(x) = (0..g.len()).find(|&x| !(v[x] > 0.0)) {
        return Err(Error::NonpositiveReference(x));
    }
    let up = positive_part(u);
    let positive = |x: usize| up[x] > 0.0;

    let mut pairs: Vec<(usize, usize)> = g
        .edges()
        .chain(gt.edges())
        .filter(|&(x, y, _)| positive(x) && positive(y))
        .map(|(x, y, _)| (x, y))
        .collect();
    pairs.sort_unstable();
    pairs.dedup();

    let mut r1 = Vec::with_capacity(pairs.len());
    let mut r2 = Vec::with_capacity(pairs.len());
    let (mut only_b, mut only_bt) = (0, 0);
    for (x, y) in pairs {
        let b = g.edge_weight(x, y);
        let bt = gt.edge_weight(x, y);
        let radius = g.depth(x).max(g.depth(y));
        let (v1, v2) = if b > 0.0 && bt == 0.0 {
            only_b += 1;
            (f64::INFINITY, f64::INFINITY)
        } else if b == 0.0 {
            only_bt += 1;
            (0.0, 0.0)
        } else {
            let v1 = (b / bt).powf(2.0 / p) * up[x] * up[y] / (v[x] * v[y]);
            let gu = (up[x] - up[y]).abs();
            let gv = (v[x] - v[y]).abs();
            let e = p - 2.0;
            let v2 = if e == 0.0 {
                1.0
            } else if e > 0.0 {
                if gu == 0.0 {
                    0.0
                } else if gv == 0.0 {
                    f64::INFINITY
                } else {
                    (b / bt).powf(1.0 - 2.0 / p) * (gu / gv).powf(e)
                }
            } else if gv == 0.0 {
                // right side infinite
                0.0
            } else if gu == 0.0 {
                f64::INFINITY
            } else {
                (b / bt).powf(1.0 - 2.0 / p) * (gu / gv).powf(e)
            };
            (v1, v2)
        };
        r1.push(EdgeRatio { x, y, radius, value: v1 });
        r2.push(EdgeRatio { x, y, radius, value: v2 });
    }
    let ratio1 = RatioTrace::from_edges(r1, &opts.trend);
    let ratio2 = RatioTrace::from_edges(r2, &opts.trend);

    let region: Vec<usize> =
        h.domain().interior().iter().copied().filter(|x| !opts.exceptional.contains(x)).collect();
    let nonzero = up.iter().any(|t| t > 0.0);
    let max_value = region.iter().map(|&x| h.apply_raw(up.values(), x)).fold(f64::NEG_INFINITY, f64::max);
    let subharmonic = max_value <= opts.classify_tol;
    let condition_b = PositivePartCondition { nonzero, max_value, subharmonic, ok: nonzero && subharmonic };
    let condition_a = evidence.supports_criticality(opts.evidence_tol);
    let condition_c = ratio1.bounded && ratio2.bounded;
    Ok(ComparisonReport {
        p,
        ratio1,
        ratio2,
        edges_only_in_operator: only_b,
        edges_only_in_reference: only_bt,
        evidence,
        condition_a,
        condition_b,
        condition_c,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::ball_decomposition;
    use crate::model::ModelGraphSpec;

    fn tree_hardy(p: f64, d: usize, r: usize) -> (WeightedGraph, BoundaryDecomposition, HardyPackage) {
        let spec = ModelGraphSpec::tree(d, r).unwrap();
        let g = spec.realize().unwrap();
        let dom = ball_decomposition(&g, r).unwrap();
        let prof = spec.green0_profile(p).unwrap();
        let g0 = VertexFunction::radial(&g, |k| prof[k].value).unwrap();
        let pkg = hardy_weight(&g, &dom, p, &g0).unwrap();
        (g, dom, pkg)
    }

    #[test]
    fn hardy_on_binary_tree() {
        let (g, _, pkg) = tree_hardy(2.0, 2, 6);
        for x in 0..g.len() {
            let exact = 2f64.powf(-(g.depth(x) as f64) / 2.0);
            assert!((pkg.phi[x] - exact).abs() < 1e-14);
        }
        assert!(pkg.residual <= 1e-12);
        assert!(pkg.w_op.iter().all(|w| w >= 0.0));
    }

    #[test]
    fn hardy_rejects_nonpositive_green() {
        let (g, dom, _) = tree_hardy(2.0, 2, 3);
        let mut g0 = vec![1.0; g.len()];
        g0[1] = 0.0;
        let g0 = VertexFunction::new(g0).unwrap();
        assert!(matches!(hardy_weight(&g, &dom, 2.0, &g0), Err(Error::NonpositiveGreen(1))));
    }

    #[test]
    fn probe_cases() {
        let (g, dom, pkg) = tree_hardy(3.0, 2, 7);
        let op = pkg.operator(&g, dom.clone()).unwrap();
        let support: Vec<usize> = (0..g.len()).filter(|&x| g.depth(x) <= 4).collect();
        let res = nonnegativity_probe_on(&op, &support, 50, 7).unwrap();
        assert!(res.min_energy >= -1e-8);
        assert_eq!(res, nonnegativity_probe_on(&op, &support, 50, 7).unwrap());

        let free = SchrodingerOperator::laplacian(&g, 3.0).unwrap().with_domain(dom.clone()).unwrap();
        assert!(nonnegativity_probe(&free, 20, 1).unwrap().min_energy >= 0.0);

        // heavy vertex with V = -1: Q(1_x) = deg - m < 0
        let mut m = vec![1.0; 3];
        m[1] = 10.0;
        let small = WeightedGraph::build(&[(0, 1, 1.0), (1, 2, 1.0)], &m, 0).unwrap();
        let neg = SchrodingerOperator::new(&small, 2.0, VertexFunction::constant(3, -1.0)).unwrap();
        let res = nonnegativity_probe(&neg, 10, 3).unwrap();
        assert!(res.certifies_negative(1e-12));
    }

    #[test]
    fn null_sequence_on_tree() {
        let r = 13;
        let (g, dom, pkg) = tree_hardy(2.0, 2, r);
        let op = pkg.operator(&g, dom.clone()).unwrap();
        let trace = null_sequence_experiment(&op, &pkg.phi, &[1, 2, 3, 4, 5, 6]).unwrap();
        assert!(trace.nonincreasing, "{trace:?}");
        assert!(trace.entries.iter().all(|e| e.value_at_root == pkg.phi[0]));
        assert!(matches!(null_sequence_experiment(&op, &pkg.phi, &[7]), Err(Error::SupportTouchesBoundary(_))));

        let free = SchrodingerOperator::laplacian(&g, 2.0).unwrap().with_domain(dom).unwrap();
        let sub = null_sequence_experiment(&free, &pkg.phi, &[1, 2, 3, 4, 5, 6]).unwrap();
        let last = sub.entries.last().unwrap().energy;
        assert!(last > 0.1 * sub.entries[0].energy);
    }

    #[test]
    fn comparison_identity_and_scaling() {
        let (g, dom, pkg) = tree_hardy(3.0, 2, 6);
        let op = pkg.operator(&g, dom).unwrap();
        let ev = CriticalityEvidence::ConfirmedByConstruction { source: "hardy".into() };
        let rep = liouville_conditions(&op, &op, &pkg.phi, &pkg.phi, ev.clone(), &ComparisonOptions::default()).unwrap();
        assert!(rep.ratio1.edges.iter().all(|e| (e.value - 1.0).abs() < 1e-12));
        assert!(rep.ratio2.edges.iter().all(|e| (e.value - 1.0).abs() < 1e-12));
        assert!(rep.condition_c);
        let t = 3.0;
        let scaled = pkg.phi.scaled(t);
        let rep2 = liouville_conditions(&op, &op, &scaled, &pkg.phi, ev, &ComparisonOptions::default()).unwrap();
        for (a, b) in rep.ratio1.edges.iter().zip(&rep2.ratio1.edges) {
            assert!((b.value / a.value - t * t).abs() < 1e-10);
        }
        for (a, b) in rep.ratio2.edges.iter().zip(&rep2.ratio2.edges) {
            assert!((b.value / a.value - t).abs() < 1e-10);
        }
    }

    #[test]
    fn comparison_errors() {
        let (g, dom, pkg) = tree_hardy(2.0, 2, 3);
        let op = pkg.operator(&g, dom).unwrap();
        let v = VertexFunction::zeros(g.len());
        let r = liouville_conditions(&op, &op, &pkg.phi, &v, CriticalityEvidence::Unknown, &Default::default());
        assert!(matches!(r, Err(Error::NonpositiveReference(0))));
        let other = WeightedGraph::build(
            &g.edges().collect::<Vec<_>>(),
            &vec![2.0; g.len()],
            0,
        )
        .unwrap();
        let op2 = SchrodingerOperator::laplacian(&other, 2.0).unwrap();
        let r = liouville_conditions(&op, &op2, &pkg.phi, &pkg.phi, CriticalityEvidence::Unknown, &Default::default());
        assert!(matches!(r, Err(Error::MeasureMismatch(0))));
    }

    #[test]
    fn recurrent_reference_reduces_to_boundedness() {
        let path = ModelGraphSpec::path(30).unwrap().realize().unwrap();
        let dom = ball_decomposition(&path, 30).unwrap();
        let op = SchrodingerOperator::laplacian(&path, 1.5).unwrap().with_domain(dom).unwrap();
        let one = VertexFunction::constant(path.len(), 1.0);
        let bounded = VertexFunction::radial(&path, |k| 1.0 / (1.0 + k as f64)).unwrap();
        let rep = liouville_conditions(&op, &op, &bounded, &one, CriticalityEvidence::Unknown, &Default::default())
            .unwrap();
        assert!(rep.ratio1.bounded);
        // ∇v = 0 everywhere: p < 2 right side is infinite
        assert!(rep.ratio2.edges.iter().all(|e| e.value == 0.0));
        let growing = VertexFunction::radial(&path, |k| (1.0 + k as f64).powi(2)).unwrap();
        let rep = liouville_conditions(&op, &op, &growing, &one, CriticalityEvidence::Unknown, &Default::default())
            .unwrap();
        assert!(!rep.ratio1.bounded);
    }
}
