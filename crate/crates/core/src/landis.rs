//! Landis-type checks: given `u` on a truncation `B_R`, evaluate the
//! hypotheses of the uniqueness criteria for the general, negative
//! potential, model graph, regular tree and recurrent regimes.
//!
//! Asymptotic hypotheses (`O(·)`, `liminf = 0`) are decided by trends of
//! per-annulus suprema and minima, see [`crate::fit`].

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::criticality::{
    hardy_weight, liouville_conditions, nonnegativity_probe, nonnegativity_probe_on, ComparisonOptions,
    ComparisonReport, CriticalityEvidence, ProbeResult,
};
use crate::error::{Error, Result};
use crate::fit::{bounded_above, bounded_below, linear_fit, minima_trend, MinimaTrend, Trend, TrendConfig};
use crate::graph::{BoundaryDecomposition, VertexFunction, WeightedGraph};
use crate::model::ModelGraphSpec;
use crate::operator::{abs_part, positive_part, SchrodingerOperator, Tag};
use crate::solvers::tree_beta;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    General,
    NegativePotential,
    Model,
    Tree,
    Recurrent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    ForcesZero,
    NotTriggered,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Satisfied,
    Violated,
    Inconclusive,
}

/// One row of a condition trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub radius: usize,
    pub sup: f64,
    pub min: f64,
    /// The per-annulus value the decision is based on.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub name: String,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trend: Option<Trend>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slope: Option<f64>,
    pub trace: Vec<TracePoint>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub flagged_edges: Vec<(usize, usize)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Condition {
    fn new(name: &str, status: Status) -> Self {
        Self {
            name: name.into(),
            status,
            trend: None,
            slope: None,
            trace: Vec::new(),
            flagged_edges: Vec::new(),
            note: None,
        }
    }

    fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    /// Trace as CSV with columns `radius,sup,min,ratio`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("radius,sup,min,ratio\n");
        for t in &self.trace {
            let _ = writeln!(out, "{},{},{},{}", t.radius, t.sup, t.min, t.ratio);
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HarmonicityMode {
    Checked,
    /// Taken as a hypothesis; the classification is still recorded.
    Assumed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Harmonicity {
    pub mode: HarmonicityMode,
    pub tag: Tag,
    pub max_abs_residual: f64,
    pub region_size: usize,
    /// `H[u₊] ≤ tol` pointwise on the region.
    pub positive_part_subharmonic: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialBound {
    pub bound: f64,
    pub max_value: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandisReport {
    pub regime: Regime,
    pub p: f64,
    pub verdict: Verdict,
    pub reasons: Vec<String>,
    pub potential_bound: PotentialBound,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub harmonicity: Option<Harmonicity>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub positivity_evidence: Option<ProbeResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub comparison: Option<ComparisonReport>,
    pub conditions: Vec<Condition>,
    /// Where the reference functions came from.
    pub provenance: BTreeMap<String, String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub negative: Option<Box<LandisReport>>,
}

impl LandisReport {
    pub fn condition(&self, name: &str) -> Option<&Condition> {
        self.conditions.iter().find(|c| c.name == name)
    }

    /// Status of the regime's liminf condition.
    pub fn decay_ok(&self) -> Option<Status> {
        self.condition("decay").map(|c| c.status)
    }

    /// Status of the regime's gradient condition, if it has one.
    pub fn gradient_ok(&self) -> Option<Status> {
        self.condition("gradient").map(|c| c.status)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    fn finish(mut self) -> Self {
        let mut verdict = Verdict::ForcesZero;
        for c in &self.conditions {
            match c.status {
                Status::Violated => {
                    verdict = Verdict::NotTriggered;
                    self.reasons.push(format!("condition {} fails", c.name));
                }
                Status::Inconclusive if verdict == Verdict::ForcesZero => verdict = Verdict::Inconclusive,
                _ => {}
            }
        }
        if verdict == Verdict::Inconclusive {
            for c in self.conditions.iter().filter(|c| c.status == Status::Inconclusive) {
                self.reasons.push(format!("condition {} is inconclusive on this truncation", c.name));
            }
        }
        self.verdict = verdict;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LandisOptions {
    pub trend: TrendConfig,
    pub classify_tol: f64,
    /// Vertices excluded from the harmonicity check, e.g. the root for
    /// functions harmonic off `o`.
    pub exceptional: Vec<usize>,
    /// Take harmonicity of `u` as a hypothesis instead of checking it.
    pub assume_harmonic: bool,
    /// Radii of the annuli; regime-specific default when `None`.
    pub annuli: Option<Vec<usize>>,
    pub probe_samples: usize,
    pub seed: u64,
    pub probe_tol: f64,
    /// Restrict probe functions to `B_r`.
    pub probe_radius: Option<usize>,
    /// Also run the check on `-u` and attach it.
    pub check_negative_too: bool,
}

impl Default for LandisOptions {
    fn default() -> Self {
        Self {
            trend: TrendConfig::default(),
            classify_tol: 1e-9,
            exceptional: Vec::new(),
            assume_harmonic: false,
            annuli: None,
            probe_samples: 100,
            seed: 0,
            probe_tol: 1e-8,
            probe_radius: None,
            check_negative_too: false,
        }
    }
}

/// Per-annulus minima of a ratio and their trend.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiminfEstimate {
    pub radii: Vec<usize>,
    pub minima: Vec<f64>,
    pub maxima: Vec<f64>,
    pub trend: MinimaTrend,
    /// Minimum over the outermost `tail_annuli` annuli.
    pub surrogate: f64,
}

fn spheres_for(g: &WeightedGraph, annuli: &[usize]) -> Result<Vec<Vec<usize>>> {
    let spheres = g.spheres();
    annuli
        .iter()
        .map(|&r| match spheres.get(r) {
            Some(s) if !s.is_empty() => Ok(s.clone()),
            _ => Err(Error::EmptyAnnulus(r)),
        })
        .collect()
}

fn ratio_minima(
    g: &WeightedGraph,
    numerator: &VertexFunction,
    reference: &VertexFunction,
    annuli: &[usize],
    cfg: &TrendConfig,
) -> Result<LiminfEstimate> {
    numerator.check_len(g)?;
    reference.check_len(g)?;
    let spheres = spheres_for(g, annuli)?;
    let mut minima = Vec::with_capacity(annuli.len());
    let mut maxima = Vec::with_capacity(annuli.len());
    for sphere in &spheres {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for &x in sphere {
            if !(reference[x] > 0.0) {
                return Err(Error::NonpositiveReference(x));
            }
            let q = numerator[x] / reference[x];
            lo = lo.min(q);
            hi = hi.max(q);
        }
        minima.push(lo);
        maxima.push(hi);
    }
    let trend = minima_trend(annuli, &minima, cfg);
    let tail = cfg.tail_annuli.max(1).min(minima.len());
    let surrogate = minima[minima.len() - tail..].iter().copied().fold(f64::INFINITY, f64::min);
    Ok(LiminfEstimate { radii: annuli.to_vec(), minima, maxima, trend, surrogate })
}

/// Per-annulus minima of `u₊ / reference` and their trend.
pub fn liminf_estimate(
    g: &WeightedGraph,
    u: &VertexFunction,
    reference: &VertexFunction,
    annuli: &[usize],
    cfg: &TrendConfig,
) -> Result<LiminfEstimate> {
    ratio_minima(g, &positive_part(u), reference, annuli, cfg)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    /// `-slope` of `log max_{S_r} |u|` against `r`.
    pub rate_per_step: f64,
    /// Slope of `log max_{S_r} |u|` against `log r` (radii ≥ 1).
    pub power_exponent: Option<f64>,
    pub geometric_goodness: f64,
    pub power_goodness: Option<f64>,
}

pub fn decay_fit(g: &WeightedGraph, u: &VertexFunction, annuli: &[usize]) -> Result<DecayFit> {
    u.check_len(g)?;
    let spheres = spheres_for(g, annuli)?;
    let maxima: Vec<f64> = spheres.iter().map(|s| s.iter().map(|&x| u[x].abs()).fold(0.0, f64::max)).collect();
    if let Some(i) = maxima.iter().position(|&m| m == 0.0) {
        return Err(Error::DegenerateData(format!("u vanishes on the annulus at radius {}", annuli[i])));
    }
    let ys: Vec<f64> = maxima.iter().map(|m| m.ln()).collect();
    let xs: Vec<f64> = annuli.iter().map(|&r| r as f64).collect();
    let geo = linear_fit(&xs, &ys).ok_or_else(|| Error::DegenerateData("need two distinct annuli".into()))?;
    let (lx, ly): (Vec<f64>, Vec<f64>) =
        annuli.iter().zip(&ys).filter(|(&r, _)| r >= 1).map(|(&r, &y)| ((r as f64).ln(), y)).unzip();
    let pow = linear_fit(&lx, &ly);
    Ok(DecayFit {
        rate_per_step: -geo.slope,
        power_exponent: pow.map(|f| f.slope),
        geometric_goodness: geo.r_squared,
        power_goodness: pow.map(|f| f.r_squared),
    })
}

/// Reference operator `H̃` with its Agmon ground state `v`.
#[derive(Debug, Clone)]
pub struct Reference<'a> {
    pub operator: &'a SchrodingerOperator<'a>,
    pub ground_state: &'a VertexFunction,
    pub evidence: CriticalityEvidence,
}

fn check_potential(op: &SchrodingerOperator<'_>, bound: f64, skip: &[usize]) -> Result<PotentialBound> {
    let mut max_value = f64::NEG_INFINITY;
    for &x in op.domain().interior() {
        if skip.contains(&x) {
            continue;
        }
        let v = op.potential()[x];
        if v > bound {
            return Err(Error::PotentialBoundViolated { vertex: x, value: v, bound });
        }
        max_value = max_value.max(v);
    }
    Ok(PotentialBound { bound, max_value, ok: true })
}

fn harmonicity(
    op: &SchrodingerOperator<'_>,
    u: &VertexFunction,
    opts: &LandisOptions,
    require_sub_only: bool,
) -> Result<Harmonicity> {
    let region: Vec<usize> =
        op.domain().interior().iter().copied().filter(|x| !opts.exceptional.contains(x)).collect();
    let class = op.classify(u, &region, opts.classify_tol)?;
    let mode = if opts.assume_harmonic { HarmonicityMode::Assumed } else { HarmonicityMode::Checked };
    if mode == HarmonicityMode::Checked {
        if require_sub_only {
            if let Some(v) = class.vertices.iter().filter(|v| v.value > opts.classify_tol).max_by(|a, b| a.value.total_cmp(&b.value)) {
                return Err(Error::NotSubharmonic { vertex: v.vertex, value: v.value });
            }
        } else if let Some(v) = class
            .vertices
            .iter()
            .filter(|v| v.value.abs() > opts.classify_tol)
            .max_by(|a, b| a.value.abs().total_cmp(&b.value.abs()))
        {
            return Err(Error::NotHarmonic { vertex: v.vertex, residual: v.value.abs() });
        }
    }
    let up = positive_part(u);
    let positive_part_subharmonic =
        region.iter().all(|&x| op.apply_raw(up.values(), x) <= opts.classify_tol);
    Ok(Harmonicity {
        mode,
        tag: class.aggregate,
        max_abs_residual: class.max_abs(),
        region_size: region.len(),
        positive_part_subharmonic,
    })
}

fn probe(op: &SchrodingerOperator<'_>, opts: &LandisOptions) -> Result<ProbeResult> {
    match opts.probe_radius {
        Some(r) => {
            let g = op.graph();
            let support: Vec<usize> =
                op.domain().interior().iter().copied().filter(|&x| g.depth(x) <= r).collect();
            nonnegativity_probe_on(op, &support, opts.probe_samples, opts.seed)
        }
        None => nonnegativity_probe(op, opts.probe_samples, opts.seed),
    }
}

fn positivity_condition(res: &ProbeResult, tol: f64) -> Condition {
    if res.certifies_negative(tol) {
        Condition::new("positivity", Status::Violated).with_note(format!("Q takes the value {:e}", res.min_energy))
    } else {
        Condition::new("positivity", Status::Satisfied).with_note("sampled energies nonnegative; evidence only")
    }
}

fn decay_condition(est: &LiminfEstimate) -> Condition {
    let status = match est.trend.trend {
        Trend::DecreasingToZero => Status::Satisfied,
        Trend::BoundedAwayFromZero => Status::Violated,
        Trend::Flat => Status::Inconclusive,
    };
    let mut c = Condition::new("decay", status);
    c.trend = Some(est.trend.trend);
    c.slope = est.trend.geometric.map(|f| f.slope);
    c.trace = est
        .radii
        .iter()
        .zip(est.minima.iter().zip(&est.maxima))
        .map(|(&radius, (&min, &sup))| TracePoint { radius, sup, min, ratio: min })
        .collect();
    c
}

/// `sup_{S_r} numerator / reference` is bounded.
fn growth_condition(
    name: &str,
    g: &WeightedGraph,
    numerator: &VertexFunction,
    reference: &VertexFunction,
    annuli: &[usize],
    cfg: &TrendConfig,
) -> Result<Condition> {
    let est = ratio_minima(g, numerator, reference, annuli, cfg)?;
    let (bounded, slope) = bounded_above(annuli, &est.maxima, cfg);
    let mut c = Condition::new(name, if bounded { Status::Satisfied } else { Status::Violated });
    c.slope = slope;
    c.trace = annuli
        .iter()
        .zip(est.minima.iter().zip(&est.maxima))
        .map(|(&radius, (&min, &sup))| TracePoint { radius, sup, min, ratio: sup })
        .collect();
    Ok(c)
}

fn comparison_conditions(rep: &ComparisonReport) -> Vec<Condition> {
    let a = match rep.condition_a {
        Some(true) => Condition::new("criticality", Status::Satisfied),
        Some(false) => Condition::new("criticality", Status::Violated),
        None => Condition::new("criticality", Status::Inconclusive).with_note("no evidence that the reference is critical"),
    };
    let b = Condition::new("positive_part", if rep.condition_b.ok { Status::Satisfied } else { Status::Violated });
    let ratio = |name: &str, t: &crate::criticality::RatioTrace| {
        let mut c = Condition::new(name, if t.bounded { Status::Satisfied } else { Status::Violated });
        c.slope = t.slope;
        c.trace = t.per_radius.iter().map(|r| TracePoint { radius: r.radius, sup: r.value, min: f64::NAN, ratio: r.value }).collect();
        // per-radius minima for the CSV
        for tp in &mut c.trace {
            tp.min = t.edges.iter().filter(|e| e.radius == tp.radius).map(|e| e.value).fold(f64::INFINITY, f64::min);
        }
        if t.infinite_edges > 0 {
            c.note = Some(format!("{} edges with an infinite ratio", t.infinite_edges));
        }
        c
    };
    vec![a, b, ratio("ratio1", &rep.ratio1), ratio("ratio2", &rep.ratio2)]
}

fn default_annuli(g: &WeightedGraph, numeric_reference: bool) -> Vec<usize> {
    let r = g.max_depth();
    let top = if numeric_reference { r.saturating_sub((r / 5).max(2)) } else { r.saturating_sub(1) };
    (1..=top.max(1)).collect()
}

fn empty_report(regime: Regime, p: f64, potential_bound: PotentialBound) -> LandisReport {
    LandisReport {
        regime,
        p,
        verdict: Verdict::Inconclusive,
        reasons: Vec::new(),
        potential_bound,
        harmonicity: None,
        positivity_evidence: None,
        comparison: None,
        conditions: Vec::new(),
        provenance: BTreeMap::new(),
        negative: None,
    }
}

/// Shared body of the general and negative-potential regimes.
fn comparison_regime(
    regime: Regime,
    h: &SchrodingerOperator<'_>,
    u: &VertexFunction,
    reference: &Reference<'_>,
    decay_ref: &VertexFunction,
    opts: &LandisOptions,
) -> Result<LandisReport> {
    let bound = if regime == Regime::General { 1.0 } else { 0.0 };
    let g = h.graph();
    u.check_len(g)?;
    decay_ref.check_len(g)?;
    let potential_bound = check_potential(h, bound, &[])?;
    let harm = harmonicity(h, u, opts, regime == Regime::NegativePotential)?;
    let mut report = empty_report(regime, h.p(), potential_bound);
    report.harmonicity = Some(harm);
    if !positive_part(u).iter().any(|t| t > 0.0) {
        report.verdict = Verdict::NotTriggered;
        report.reasons.push("u has no positive part".into());
        return Ok(report);
    }
    let res = probe(h, opts)?;
    report.conditions.push(positivity_condition(&res, opts.probe_tol));
    report.positivity_evidence = Some(res);

    let copts = ComparisonOptions {
        trend: opts.trend,
        classify_tol: opts.classify_tol,
        evidence_tol: opts.probe_tol,
        exceptional: opts.exceptional.clone(),
    };
    let comparison = liouville_conditions(h, reference.operator, u, reference.ground_state, reference.evidence.clone(), &copts)?;
    report.conditions.extend(comparison_conditions(&comparison));
    report.comparison = Some(comparison);

    let annuli = opts.annuli.clone().unwrap_or_else(|| default_annuli(g, true));
    let est = liminf_estimate(g, u, decay_ref, &annuli, &opts.trend)?;
    report.conditions.push(decay_condition(&est));

    let mut report = report.finish();
    if opts.check_negative_too {
        let neg = u.scaled(-1.0);
        let inner = LandisOptions { check_negative_too: false, ..opts.clone() };
        report.negative = Some(Box::new(comparison_regime(regime, h, &neg, reference, decay_ref, &inner)?));
    }
    Ok(report)
}

/// General regime: `V ≤ 1`, `u` harmonic, comparison with a critical
/// reference and `liminf u₊/G_1 = 0`.
pub fn landis_check_general(
    h: &SchrodingerOperator<'_>,
    u: &VertexFunction,
    reference: &Reference<'_>,
    g1: &VertexFunction,
    opts: &LandisOptions,
) -> Result<LandisReport> {
    let mut rep = comparison_regime(Regime::General, h, u, reference, g1, opts)?;
    rep.provenance.insert("decay_reference".into(), "G_1 supplied by caller".into());
    Ok(rep)
}

/// `V ≤ 0`, `u` subharmonic, `liminf u₊/g = 0` for a positive p-harmonic
/// `g` of minimal growth.
pub fn landis_check_negative_potential(
    h: &SchrodingerOperator<'_>,
    u: &VertexFunction,
    reference: &Reference<'_>,
    g: &VertexFunction,
    opts: &LandisOptions,
) -> Result<LandisReport> {
    if let Some(x) = (0..g.len()).find(|&x| h.domain().is_interior(x) && !(g[x] > 0.0)) {
        return Err(Error::NonpositiveReference(x));
    }
    let mut rep = comparison_regime(Regime::NegativePotential, h, u, reference, g, opts)?;
    rep.provenance.insert("decay_reference".into(), "minimal-growth g supplied by caller".into());
    Ok(rep)
}

fn ball_domain(g: &WeightedGraph) -> Result<BoundaryDecomposition> {
    crate::graph::ball_decomposition(g, g.max_depth())
}

/// Model graph regime on a ball `g` of the model (realized or radial
/// quotient): `V ≤ 0`, growth, gradient and liminf conditions relative to
/// the closed-form `G_0`.
pub fn landis_check_model(
    spec: &ModelGraphSpec,
    g: &WeightedGraph,
    p: f64,
    potential: &VertexFunction,
    u: &VertexFunction,
    opts: &LandisOptions,
) -> Result<LandisReport> {
    spec.check_layers(g, 1e-12)?;
    if !spec.is_subcritical(p)? {
        return Err(Error::NotSubcritical(p));
    }
    u.check_len(g)?;
    let domain = ball_domain(g)?;
    let h = SchrodingerOperator::new(g, p, potential.clone())?.with_domain(domain.clone())?;
    let potential_bound = check_potential(&h, 0.0, &[])?;
    let harm = harmonicity(&h, u, opts, false)?;
    let mut report = empty_report(Regime::Model, p, potential_bound);
    report.harmonicity = Some(harm);
    report.provenance.insert("G_0".into(), "closed-form layer series with tail estimate".into());

    let prof = spec.green0_profile(p)?;
    let g0 = VertexFunction::radial(g, |k| prof[k].value)?;
    let hardy = hardy_weight(g, &domain, p, &g0)?;
    let phi = &hardy.phi;
    let au = abs_part(u);
    let up = positive_part(u);
    let annuli = opts.annuli.clone().unwrap_or_else(|| default_annuli(g, false));

    let res = probe(&h, opts)?;
    report.conditions.push(positivity_condition(&res, opts.probe_tol));
    report.positivity_evidence = Some(res);

    report.conditions.push(growth_condition("growth", g, &au, phi, &annuli, &opts.trend)?);

    // gradient: (|∇u₊| / K)^{p-2} bounded, K = m(o)^{1/(p-1)} G_0(z)^{-1/p} ∂B_{|y|}^{-1/(p-1)}
    let flux = spec.boundary_weights();
    let mo = spec.root_measure();
    let q = p - 1.0;
    let e = p - 2.0;
    let max_r = g.max_depth();
    let mut sups = vec![f64::NEG_INFINITY; max_r + 1];
    let mut infs = vec![f64::INFINITY; max_r + 1];
    let mut flagged = Vec::new();
    let mut same_sphere = Vec::new();
    for (a, b, _) in g.edges() {
        if !(up[a] > 0.0 && up[b] > 0.0) {
            continue;
        }
        let (x, y) = if g.depth(a) >= g.depth(b) { (a, b) } else { (b, a) };
        let grad = (up[x] - up[y]).abs();
        if g.depth(x) == g.depth(y) {
            if p >= 2.0 && grad > 0.0 {
                same_sphere.push((y.min(x), y.max(x)));
            }
            continue;
        }
        let z = if p < 2.0 { x } else { y };
        let k = mo.powf(1.0 / q) * g0[z].powf(-1.0 / p) * flux[g.depth(y)].powf(-1.0 / q);
        let value = if e == 0.0 {
            1.0
        } else if grad == 0.0 {
            if e > 0.0 {
                0.0
            } else {
                flagged.push((y.min(x), y.max(x)));
                f64::INFINITY
            }
        } else {
            (grad / k).powf(e)
        };
        let r = g.depth(x);
        sups[r] = sups[r].max(value);
        infs[r] = infs[r].min(value);
    }
    let (radii, values): (Vec<usize>, Vec<f64>) =
        (1..=max_r).filter(|&r| sups[r] > f64::NEG_INFINITY).map(|r| (r, sups[r])).unzip();
    let (bounded, slope) = bounded_above(&radii, &values, &opts.trend);
    let mut grad = Condition::new("gradient", if bounded { Status::Satisfied } else { Status::Violated });
    grad.slope = slope;
    grad.trace = radii.iter().map(|&r| TracePoint { radius: r, sup: sups[r], min: infs[r], ratio: sups[r] }).collect();
    grad.flagged_edges = flagged;
    report.conditions.push(grad);
    if p >= 2.0 {
        let mut c = Condition::new(
            "same_sphere_gradient",
            if same_sphere.is_empty() { Status::Satisfied } else { Status::Violated },
        );
        c.flagged_edges = same_sphere;
        report.conditions.push(c);
    }

    let est = ratio_minima(g, &au, &g0, &annuli, &opts.trend)?;
    report.conditions.push(decay_condition(&est));
    Ok(report.finish())
}

/// `d`-regular tree regime on a ball `g` of the tree (realized or radial
/// quotient). With a potential, `V ≤ 1` and harmonicity are checked too.
pub fn landis_check_tree(
    g: &WeightedGraph,
    p: f64,
    d: usize,
    u: &VertexFunction,
    potential: Option<&VertexFunction>,
    opts: &LandisOptions,
) -> Result<LandisReport> {
    if d < 2 {
        return Err(Error::InvalidDegree(d));
    }
    let beta = tree_beta(p, d)?;
    let radius = g.max_depth();
    let spec = ModelGraphSpec::tree(d, radius)?;
    spec.check_layers(g, 1e-12)?;
    u.check_len(g)?;
    let domain = ball_domain(g)?;
    let mut report = empty_report(Regime::Tree, p, PotentialBound { bound: 1.0, max_value: f64::NAN, ok: true });
    if let Some(v) = potential {
        let h = SchrodingerOperator::new(g, p, v.clone())?.with_domain(domain.clone())?;
        report.potential_bound = check_potential(&h, 1.0, &[])?;
        report.harmonicity = Some(harmonicity(&h, u, opts, false)?);
        let res = probe(&h, opts)?;
        report.conditions.push(positivity_condition(&res, opts.probe_tol));
        report.positivity_evidence = Some(res);
    }
    report.provenance.insert("beta".into(), format!("bisection root {beta:.17e}"));
    report.provenance.insert("rate".into(), "d^(-|x|/p)".into());

    let dd = d as f64;
    let rate = VertexFunction::radial(g, |k| dd.powf(-(k as f64) / p))?;
    let au = abs_part(u);
    let up = positive_part(u);
    let annuli = opts.annuli.clone().unwrap_or_else(|| default_annuli(g, false));
    report.conditions.push(growth_condition("growth", g, &au, &rate, &annuli, &opts.trend)?);

    // gradient of u₊ against d^{-r/p}, r = max(|x|, |y|): upper bound for p ≥ 2, lower for p < 2
    let spheres = g.spheres();
    let vanishes = |r: usize| spheres[r].iter().all(|&x| up[x] == 0.0);
    let mut sups = vec![f64::NEG_INFINITY; radius + 1];
    let mut infs = vec![f64::INFINITY; radius + 1];
    let mut zero_edges = Vec::new();
    for (x, y, _) in g.edges() {
        let r = g.depth(x).max(g.depth(y));
        let grad = (up[x] - up[y]).abs();
        if grad == 0.0 && p < 2.0 {
            if vanishes(g.depth(x)) && vanishes(g.depth(y)) {
                continue;
            }
            zero_edges.push((x, y));
        }
        let value = grad / dd.powf(-(r as f64) / p);
        sups[r] = sups[r].max(value);
        infs[r] = infs[r].min(value);
    }
    let radii: Vec<usize> = (1..=radius).filter(|&r| sups[r] > f64::NEG_INFINITY).collect();
    let mut grad = if p >= 2.0 {
        let values: Vec<f64> = radii.iter().map(|&r| sups[r]).collect();
        let (ok, slope) = bounded_above(&radii, &values, &opts.trend);
        let mut c = Condition::new("gradient", if ok { Status::Satisfied } else { Status::Violated });
        c.slope = slope;
        c.trace = radii.iter().map(|&r| TracePoint { radius: r, sup: sups[r], min: infs[r], ratio: sups[r] }).collect();
        c
    } else {
        let values: Vec<f64> = radii.iter().map(|&r| infs[r]).collect();
        let (ok, slope) = bounded_below(&radii, &values, &opts.trend);
        let ok = ok && zero_edges.is_empty();
        let mut c = Condition::new("gradient", if ok { Status::Satisfied } else { Status::Violated })
            .with_note("lower bound for p < 2");
        c.slope = slope;
        c.trace = radii.iter().map(|&r| TracePoint { radius: r, sup: sups[r], min: infs[r], ratio: infs[r] }).collect();
        c
    };
    grad.flagged_edges = zero_edges;
    report.conditions.push(grad);

    let beta_ref = VertexFunction::radial(g, |k| beta.powi(k as i32))?;
    let est = ratio_minima(g, &au, &beta_ref, &annuli, &opts.trend)?;
    report.conditions.push(decay_condition(&est));
    Ok(report.finish())
}

/// Why the graph is taken to be recurrent.
#[derive(Debug, Clone)]
pub enum RecurrenceEvidence<'a> {
    /// Checked through the divergence of the layer series.
    Model(&'a ModelGraphSpec),
    Declared,
}

/// Recurrent regime, `p ≤ 2`: `V ≤ 0` outside `compact`, `u` bounded and
/// `liminf u = 0`.
pub fn landis_check_recurrent(
    g: &WeightedGraph,
    p: f64,
    potential: &VertexFunction,
    u: &VertexFunction,
    compact: &[usize],
    evidence: RecurrenceEvidence<'_>,
    opts: &LandisOptions,
) -> Result<LandisReport> {
    if p > 2.0 {
        return Err(Error::ExponentOutOfRange(p));
    }
    u.check_len(g)?;
    let domain = ball_domain(g)?;
    let h = SchrodingerOperator::new(g, p, potential.clone())?.with_domain(domain)?;
    let potential_bound = check_potential(&h, 0.0, compact)?;
    let mut report = empty_report(Regime::Recurrent, p, potential_bound);
    match evidence {
        RecurrenceEvidence::Model(spec) => {
            spec.check_layers(g, 1e-12)?;
            if spec.is_subcritical(p)? {
                return Err(Error::PreconditionViolated("the model graph is subcritical, not recurrent".into()));
            }
            report.provenance.insert("recurrence".into(), "divergent layer series".into());
        }
        RecurrenceEvidence::Declared => {
            report.provenance.insert("recurrence".into(), "declared by caller".into());
        }
    }
    report.harmonicity = Some(harmonicity(&h, u, opts, false)?);
    if !positive_part(u).iter().any(|t| t > 0.0) {
        report.verdict = Verdict::NotTriggered;
        report.reasons.push("u has no positive part".into());
        return Ok(report);
    }
    let res = probe(&h, opts)?;
    report.conditions.push(positivity_condition(&res, opts.probe_tol));
    report.positivity_evidence = Some(res);

    let annuli = opts.annuli.clone().unwrap_or_else(|| default_annuli(g, false));
    let one = VertexFunction::constant(g.len(), 1.0);
    report.conditions.push(growth_condition("bounded", g, &abs_part(u), &one, &annuli, &opts.trend)?);
    let est = ratio_minima(g, u, &one, &annuli, &opts.trend)?;
    report.conditions.push(decay_condition(&est));
    Ok(report.finish())
}
