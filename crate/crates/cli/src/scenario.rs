//! A scenario is one task on one graph with one operator. Every subcommand
//! builds a scenario from its flags, so a scenario JSON file and the
//! equivalent command line produce the same artifacts.

use std::fmt;
use std::path::{Path, PathBuf};

use qlgraph::criticality::{hardy_weight, nonnegativity_probe_on, CriticalityEvidence};
use qlgraph::landis::{
    landis_check_general, landis_check_model, landis_check_negative_potential, landis_check_recurrent,
    landis_check_tree, LandisOptions, LandisReport, RecurrenceEvidence, Reference,
};
use qlgraph::model::Wiring;
use qlgraph::solvers::{
    dirichlet_solve, green_function, radial_green, shoot_green, solve_with_source, tree_beta, ExhaustionConfig,
    InducedBalls, RadialBalls, ShootingConfig, SolveConfig,
};
use qlgraph::{ball_decomposition, read_graph, Error, ModelGraphSpec, SchrodingerOperator, VertexFunction, WeightedGraph};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::expr::{Expr, Symbols};

/// Model balls with more vertices than this are replaced by their radial
/// quotient under `representation = auto`.
pub const REALIZE_LIMIT: usize = 100_000;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn precondition(message: impl Into<String>) -> Self {
        Self { code: 2, message: message.into() }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        Self { code: if e.is_convergence_failure() { 3 } else { 2 }, message: e.to_string() }
    }
}

impl From<crate::expr::ExprError> for CliError {
    fn from(e: crate::expr::ExprError) -> Self {
        Self::precondition(format!("expression: {e}"))
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::precondition(format!("io: {e}"))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        Self::precondition(format!("json: {e}"))
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Representation {
    /// Realized ball unless it exceeds the size limit, then the quotient.
    #[default]
    Auto,
    Realized,
    /// One vertex per sphere; exact for radial functions.
    Quotient,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, clap::Args)]
#[serde(default)]
pub struct GraphSource {
    /// Graph JSON file.
    #[arg(long, value_name = "FILE")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub graph: Option<PathBuf>,
    /// Model graph JSON file.
    #[arg(long, value_name = "FILE")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<PathBuf>,
    /// Ball of the d-regular tree (needs --d, --R).
    #[arg(long)]
    pub tree: bool,
    /// Antitree with #S_{r+1} = ceil(r^gamma) (needs --gamma, --R).
    #[arg(long)]
    pub antitree: bool,
    /// Half-line path (needs --R).
    #[arg(long)]
    pub path: bool,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    /// Ball radius.
    #[arg(long = "R", value_name = "R")]
    #[serde(rename = "R", skip_serializing_if = "Option::is_none")]
    pub radius: Option<usize>,
    #[arg(long, value_enum, default_value_t)]
    pub representation: Representation,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, clap::Args)]
#[serde(default)]
pub struct OperatorArgs {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    /// `c`, a radial expression, `EXPR outside B_k`, or `@file.json`.
    #[arg(long, value_name = "V", allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub potential: Option<String>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, clap::Args)]
#[serde(default)]
pub struct OutputArgs {
    /// JSON report path; tables go next to it as `<stem>.<table>.csv`.
    #[arg(long, value_name = "FILE")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    /// What to print on stdout when --out is absent.
    #[arg(long, value_enum, default_value_t)]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum GreenMethod {
    /// Closed form for alpha = 0 on model graphs, radial recurrence for
    /// alpha > 0, exhaustion otherwise.
    #[default]
    Auto,
    ClosedForm,
    Radial,
    Shooting,
    Exhaustion,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum LandisRegime {
    General,
    Negative,
    Model,
    Tree,
    Recurrent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolveTask {
    /// Data on the outer sphere, a radial expression.
    pub boundary: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
    pub config: SolveConfig,
}

impl Default for SolveTask {
    fn default() -> Self {
        Self { boundary: "0".into(), source: None, config: SolveConfig::default() }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GreenTask {
    pub alpha: f64,
    pub method: GreenMethod,
    pub exhaustion: ExhaustionConfig,
    pub shooting: ShootingConfig,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BetaTask {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HardyTask {
    /// Random test functions for the nonnegativity probe; 0 skips it.
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProbeTask {
    pub samples: usize,
    /// Probe functions live on `B_r`; defaults to the whole interior.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub support_radius: Option<usize>,
    pub tol: f64,
}

impl Default for ProbeTask {
    fn default() -> Self {
        Self { samples: 100, support_radius: None, tol: 1e-8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandisTask {
    pub regime: LandisRegime,
    pub u: String,
    /// Recurrent regime: the compact set is `B_k`.
    #[serde(default)]
    pub compact_radius: usize,
    /// Recurrent regime on a graph file: take recurrence as given.
    #[serde(default)]
    pub declare_recurrent: bool,
    /// Add the root to `options.exceptional`.
    #[serde(default)]
    pub exceptional_root: bool,
    #[serde(default)]
    pub options: LandisOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Task {
    GraphValidate,
    GraphBuild,
    ModelBuild,
    Solve(SolveTask),
    Green(GreenTask),
    Beta(BetaTask),
    Hardy(HardyTask),
    EnergyProbe(ProbeTask),
    Landis(LandisTask),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default)]
    pub graph: GraphSource,
    #[serde(default)]
    pub operator: OperatorArgs,
    pub task: Task,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: OutputArgs,
}

/// A CSV table; `name` becomes part of the file name.
#[derive(Debug, Clone)]
pub struct Table {
    pub name: String,
    pub csv: String,
}

#[derive(Debug, Clone)]
pub struct Artifacts {
    pub report: Value,
    pub tables: Vec<Table>,
    /// Plain text always printed, e.g. the value of β.
    pub text: Option<String>,
}

struct Loaded {
    graph: WeightedGraph,
    spec: Option<ModelGraphSpec>,
}

fn load_graph(src: &mut GraphSource) -> CliResult<Loaded> {
    let chosen = [src.graph.is_some(), src.model.is_some(), src.tree, src.antitree, src.path];
    match chosen.iter().filter(|&&c| c).count() {
        1 => {}
        0 => return Err(CliError::precondition("no graph given: use --graph, --model, --tree, --antitree or --path")),
        _ => return Err(CliError::precondition("give exactly one of --graph, --model, --tree, --antitree, --path")),
    }
    if let Some(file) = &src.graph {
        let mut g = read_graph(file)?;
        if let Some(r) = src.radius {
            g = g.induced_ball(r)?.0;
        }
        return Ok(Loaded { graph: g, spec: None });
    }
    let need_radius = || src.radius.ok_or_else(|| CliError::precondition("--R is required for this graph"));
    let spec = if let Some(file) = &src.model {
        let spec = ModelGraphSpec::from_json(&std::fs::read_to_string(file)?)?;
        match src.radius {
            Some(r) => spec.truncated(r)?,
            None => spec,
        }
    } else if src.tree {
        let d = src.d.ok_or_else(|| CliError::precondition("--tree needs --d"))?;
        ModelGraphSpec::tree(d, need_radius()?)?
    } else if src.antitree {
        let gamma = src.gamma.ok_or_else(|| CliError::precondition("--antitree needs --gamma"))?;
        ModelGraphSpec::antitree(gamma, need_radius()?)?
    } else {
        ModelGraphSpec::path(need_radius()?)?
    };
    if src.representation == Representation::Auto {
        src.representation =
            if spec.vertex_count() <= REALIZE_LIMIT { Representation::Realized } else { Representation::Quotient };
    }
    let graph = match src.representation {
        Representation::Quotient => spec.radial_quotient()?,
        _ => spec.realize()?,
    };
    Ok(Loaded { graph, spec: Some(spec) })
}

fn require_p(op: &OperatorArgs) -> CliResult<f64> {
    op.p.ok_or_else(|| CliError::precondition("--p is required for this task"))
}

fn symbols(src: &GraphSource, p: Option<f64>) -> Symbols {
    let d = src.d.map(|d| d as f64);
    let beta = match (p, src.d) {
        (Some(p), Some(d)) => tree_beta(p, d).ok(),
        _ => None,
    };
    Symbols { d, beta, p }
}

/// Per-vertex values from `@file.json` (a JSON array) or a radial expression.
fn vertex_values(g: &WeightedGraph, text: &str, sym: &Symbols) -> CliResult<VertexFunction> {
    if let Some(file) = text.strip_prefix('@') {
        let values: Vec<f64> = serde_json::from_str(&std::fs::read_to_string(file)?)?;
        return Ok(VertexFunction::on(g, values)?);
    }
    let e = Expr::parse(text)?;
    let mut out = Vec::with_capacity(g.len());
    for x in 0..g.len() {
        out.push(e.eval(g.depth(x), sym)?);
    }
    Ok(VertexFunction::on(g, out)?)
}

/// `c`, an expression, `EXPR outside B_k` (zero on `B_k`) or `@file`.
fn potential(g: &WeightedGraph, text: Option<&str>, sym: &Symbols) -> CliResult<VertexFunction> {
    let text = text.unwrap_or("0").trim();
    if let Some((expr, ball)) = text.split_once("outside") {
        let k: usize = ball
            .trim()
            .strip_prefix("B_")
            .and_then(|k| k.trim().parse().ok())
            .ok_or_else(|| CliError::precondition(format!("potential {text:?}: expected `EXPR outside B_k`")))?;
        let outer = vertex_values(g, expr.trim(), sym)?;
        return Ok(VertexFunction::from_fn(g.len(), |x| if g.depth(x) > k { outer[x] } else { 0.0 })?);
    }
    vertex_values(g, text, sym)
}

fn per_vertex_csv(g: &WeightedGraph, columns: &[(&str, &VertexFunction)]) -> String {
    let mut s = String::from("vertex,radius");
    for (name, _) in columns {
        s.push(',');
        s.push_str(name);
    }
    s.push('\n');
    for x in 0..g.len() {
        s.push_str(&format!("{x},{}", g.depth(x)));
        for (_, f) in columns {
            s.push_str(&format!(",{:e}", f[x]));
        }
        s.push('\n');
    }
    s
}

fn radial_csv(header: &str, rows: impl IntoIterator<Item = Vec<f64>>) -> String {
    let mut s = format!("{header}\n");
    for (k, row) in rows.into_iter().enumerate() {
        s.push_str(&k.to_string());
        for v in row {
            s.push_str(&format!(",{v:e}"));
        }
        s.push('\n');
    }
    s
}

fn table(name: &str, csv: String) -> Table {
    Table { name: name.into(), csv }
}

fn graph_summary(g: &WeightedGraph) -> Value {
    json!({
        "vertices": g.len(),
        "edges": g.edge_count(),
        "root": g.root(),
        "max_depth": g.max_depth(),
        "sphere_sizes": g.spheres().iter().map(Vec::len).collect::<Vec<_>>(),
        "spherically_symmetric": ModelGraphSpec::is_spherically_symmetric(g, 1e-12),
    })
}

fn model_spec(loaded: &Loaded, what: &str) -> CliResult<ModelGraphSpec> {
    loaded.spec.clone().ok_or_else(|| CliError::precondition(format!("{what} needs a model graph (--model, --tree, --antitree or --path)")))
}

impl Scenario {
    /// Runs the scenario. The returned report embeds `self` after defaults
    /// and automatic choices have been filled in.
    pub fn run(&self) -> CliResult<Artifacts> {
        let mut s = self.clone();
        let (result, tables, text) = s.execute()?;
        let mut report = json!({ "config": s, "result": result });
        if let Task::GraphBuild | Task::ModelBuild = s.task {
            // the document itself must stay readable by --graph / --model
            let mut doc = report["result"].take();
            doc["config"] = report["config"].take();
            report = doc;
        }
        Ok(Artifacts { report, tables, text })
    }

    fn execute(&mut self) -> CliResult<(Value, Vec<Table>, Option<String>)> {
        if let Task::Beta(t) = &mut self.task {
            let p = require_p(&self.operator)?;
            let d = t.d.or(self.graph.d).ok_or_else(|| CliError::precondition("beta needs --d"))?;
            t.d = Some(d);
            let beta = tree_beta(p, d)?;
            let dd = d as f64;
            let f = (1.0 - beta).powf(p - 1.0) - (1.0 / beta - 1.0).powf(p - 1.0) / dd + 1.0 / dd;
            let text = format!("beta = {beta}\n|f(beta)| = {:e}\n", f.abs());
            return Ok((json!({ "beta": beta, "abs_f_beta": f.abs() }), Vec::new(), Some(text)));
        }
        if let Task::GraphValidate = self.task {
            if self.graph.graph.is_none() {
                return Err(CliError::precondition("graph validate needs a graph file"));
            }
        }
        let src = &mut self.graph;
        let no_source = src.graph.is_none() && src.model.is_none() && !src.tree && !src.antitree && !src.path;
        if no_source && matches!(&self.task, Task::Landis(t) if t.regime == LandisRegime::Tree) {
            src.tree = true;
        }
        let loaded = load_graph(&mut self.graph)?;
        let g = &loaded.graph;
        let sym = symbols(&self.graph, self.operator.p);
        let seed = self.seed;
        match &mut self.task {
            Task::GraphValidate => Ok((graph_summary(g), Vec::new(), None)),
            Task::GraphBuild => Ok((serde_json::to_value(g.to_document())?, Vec::new(), None)),
            Task::ModelBuild => {
                let spec = model_spec(&loaded, "model build")?;
                let mut doc = serde_json::to_value(spec.to_document())?;
                doc["derived"] = json!({
                    "vertex_count": spec.vertex_count(),
                    "boundary_weights": spec.boundary_weights(),
                    "subcriticality": self.operator.p.map(|p| spec.subcriticality(p)).transpose()?,
                });
                Ok((doc, Vec::new(), None))
            }
            Task::Solve(t) => {
                let p = require_p(&self.operator)?;
                let v = potential(g, self.operator.potential.as_deref(), &sym)?;
                let dom = ball_decomposition(g, g.max_depth())?;
                let h = SchrodingerOperator::new(g, p, v)?.with_domain(dom)?;
                let data = vertex_values(g, &t.boundary, &sym)?;
                let out = match &t.source {
                    Some(f) => solve_with_source(&h, &data, &vertex_values(g, f, &sym)?, None, &t.config)?,
                    None => dirichlet_solve(&h, &data, &t.config)?,
                };
                let csv = per_vertex_csv(g, &[("value", &out.values)]);
                Ok((serde_json::to_value(&out)?, vec![table("solution", csv)], None))
            }
            Task::Green(t) => {
                let p = require_p(&self.operator)?;
                if t.method == GreenMethod::Auto {
                    t.method = match (&loaded.spec, t.alpha == 0.0) {
                        (Some(_), true) => GreenMethod::ClosedForm,
                        (Some(_), false) => GreenMethod::Radial,
                        (None, _) => GreenMethod::Exhaustion,
                    };
                }
                match t.method {
                    GreenMethod::ClosedForm => {
                        if t.alpha != 0.0 {
                            return Err(CliError::precondition("the closed form is for alpha = 0"));
                        }
                        let prof = model_spec(&loaded, "closed-form Green")?.green0_profile(p)?;
                        let csv = radial_csv("radius,value,lower,upper", prof.iter().map(|v| vec![v.value, v.lower, v.upper]));
                        Ok((json!({ "profile": prof }), vec![table("green", csv)], None))
                    }
                    GreenMethod::Radial => {
                        let f = radial_green(&model_spec(&loaded, "radial Green")?, p, t.alpha)?;
                        let csv = radial_csv("radius,value", f.values().iter().map(|&v| vec![v]));
                        Ok((json!({ "profile": f }), vec![table("green", csv)], None))
                    }
                    GreenMethod::Shooting => {
                        let res = shoot_green(&model_spec(&loaded, "shooting")?, p, t.alpha, &t.shooting)?;
                        let csv = radial_csv("radius,value", res.values.values().iter().map(|&v| vec![v]));
                        Ok((serde_json::to_value(&res)?, vec![table("green", csv)], None))
                    }
                    GreenMethod::Exhaustion => {
                        let res = match (&loaded.spec, self.graph.representation) {
                            (Some(spec), Representation::Quotient) => green_function(&RadialBalls(spec), p, t.alpha, &t.exhaustion)?,
                            (Some(spec), _) => green_function(spec, p, t.alpha, &t.exhaustion)?,
                            (None, _) => green_function(&InducedBalls(g), p, t.alpha, &t.exhaustion)?,
                        };
                        let (ball, _) = g.induced_ball(t.exhaustion.reference_radius)?;
                        let csv = per_vertex_csv(&ball, &[("value", &res.limit)]);
                        Ok((serde_json::to_value(&res)?, vec![table("green", csv)], None))
                    }
                    GreenMethod::Auto => unreachable!("resolved above"),
                }
            }
            Task::Hardy(t) => {
                let p = require_p(&self.operator)?;
                let spec = model_spec(&loaded, "hardy")?;
                let prof = spec.green0_profile(p)?;
                let g0 = VertexFunction::radial(g, |k| prof[k].value)?;
                let dom = ball_decomposition(g, g.max_depth())?;
                let pkg = hardy_weight(g, &dom, p, &g0)?;
                let probe = if t.samples > 0 {
                    let op = pkg.operator(g, dom.clone())?;
                    Some(nonnegativity_probe_on(&op, dom.interior(), t.samples, seed)?)
                } else {
                    None
                };
                let csv = radial_csv(
                    "radius,g0,phi,w",
                    (0..=g.max_depth()).map(|k| {
                        let x = g.sphere(k)[0];
                        vec![g0[x], pkg.phi[x], pkg.w_op[x]]
                    }),
                );
                let w: Vec<f64> = (0..=g.max_depth()).map(|k| pkg.w_op[g.sphere(k)[0]]).collect();
                Ok((json!({ "p": p, "residual": pkg.residual, "w_by_radius": w, "probe": probe }), vec![table("hardy", csv)], None))
            }
            Task::EnergyProbe(t) => {
                let p = require_p(&self.operator)?;
                let v = potential(g, self.operator.potential.as_deref(), &sym)?;
                let dom = ball_decomposition(g, g.max_depth())?;
                let support: Vec<usize> = match t.support_radius {
                    Some(r) => dom.interior().iter().copied().filter(|&x| g.depth(x) <= r).collect(),
                    None => dom.interior().to_vec(),
                };
                let h = SchrodingerOperator::new(g, p, v)?.with_domain(dom)?;
                let res = nonnegativity_probe_on(&h, &support, t.samples, seed)?;
                let negative = res.certifies_negative(t.tol);
                Ok((json!({ "probe": res, "certifies_negative": negative }), Vec::new(), None))
            }
            Task::Landis(t) => {
                t.options.seed = seed;
                if t.exceptional_root && !t.options.exceptional.contains(&g.root()) {
                    t.options.exceptional.push(g.root());
                }
                let p = require_p(&self.operator)?;
                let u = vertex_values(g, &t.u, &sym)?;
                let report = landis(t, &loaded, &self.graph, &self.operator, &sym, p, &u)?;
                let mut tables: Vec<Table> = report
                    .conditions
                    .iter()
                    .filter(|c| !c.trace.is_empty())
                    .map(|c| table(&c.name, c.to_csv()))
                    .collect();
                if let Some(neg) = &report.negative {
                    tables.extend(
                        neg.conditions.iter().filter(|c| !c.trace.is_empty()).map(|c| table(&format!("negative.{}", c.name), c.to_csv())),
                    );
                }
                Ok((serde_json::to_value(&report)?, tables, None))
            }
            Task::Beta(_) => unreachable!("handled above"),
        }
    }
}

fn landis(
    t: &LandisTask,
    loaded: &Loaded,
    src: &GraphSource,
    op: &OperatorArgs,
    sym: &Symbols,
    p: f64,
    u: &VertexFunction,
) -> CliResult<LandisReport> {
    let g = &loaded.graph;
    let v = potential(g, op.potential.as_deref(), sym)?;
    let opts = &t.options;
    match t.regime {
        LandisRegime::Tree => {
            let d = src.d.ok_or_else(|| CliError::precondition("landis tree needs --d"))?;
            if let Some(spec) = &loaded.spec {
                if spec.wiring() != Wiring::Tree || spec.sphere_sizes().get(1) != Some(&d) {
                    return Err(CliError::precondition(format!("the graph is not a ball of the {d}-regular tree")));
                }
            }
            let pot = op.potential.as_ref().map(|_| &v);
            Ok(landis_check_tree(g, p, d, u, pot, opts)?)
        }
        LandisRegime::Model => Ok(landis_check_model(&model_spec(loaded, "landis model")?, g, p, &v, u, opts)?),
        LandisRegime::Recurrent => {
            let compact: Vec<usize> = (0..g.len()).filter(|&x| g.depth(x) <= t.compact_radius).collect();
            let evidence = match (&loaded.spec, t.declare_recurrent) {
                (Some(spec), _) => RecurrenceEvidence::Model(spec),
                (None, true) => RecurrenceEvidence::Declared,
                (None, false) => {
                    return Err(CliError::precondition("recurrence of a graph file must be declared (--declare-recurrent)"))
                }
            };
            Ok(landis_check_recurrent(g, p, &v, u, &compact, evidence, opts)?)
        }
        LandisRegime::General | LandisRegime::Negative => {
            // reference: Δ_p minus the optimal Hardy weight built from G_0
            let spec = model_spec(loaded, "the comparison regimes")?;
            let dom = ball_decomposition(g, g.max_depth())?;
            let prof = spec.green0_profile(p)?;
            let g0 = VertexFunction::radial(g, |k| prof[k].value)?;
            let pkg = hardy_weight(g, &dom, p, &g0)?;
            let href = pkg.operator(g, dom.clone())?;
            let reference = Reference {
                operator: &href,
                ground_state: &pkg.phi,
                evidence: CriticalityEvidence::ConfirmedByConstruction { source: "optimal Hardy weight".into() },
            };
            let h = SchrodingerOperator::new(g, p, v)?.with_domain(dom)?;
            if t.regime == LandisRegime::General {
                let g1 = radial_green(&spec, p, 1.0)?.lift(g)?;
                Ok(landis_check_general(&h, u, &reference, &g1, opts)?)
            } else {
                Ok(landis_check_negative_potential(&h, u, &reference, &g0, opts)?)
            }
        }
    }
}

/// `report.json` → `report.<name>.csv`.
pub fn table_path(out: &Path, name: &str) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    out.with_file_name(format!("{stem}.{name}.csv"))
}

/// CSV with the resolved config as a leading `#` comment line.
pub fn csv_with_config(config: &Value, csv: &str) -> String {
    format!("# config {}\n{csv}", serde_json::to_string(config).expect("json values serialize"))
}

impl Artifacts {
    pub fn config(&self) -> &Value {
        &self.report["config"]
    }

    /// Writes the report and tables next to `out`.
    pub fn write(&self, out: &Path) -> CliResult<Vec<PathBuf>> {
        let mut written = vec![out.to_path_buf()];
        std::fs::write(out, pretty(&self.report))?;
        for t in &self.tables {
            let path = table_path(out, &t.name);
            std::fs::write(&path, csv_with_config(self.config(), &t.csv))?;
            written.push(path);
        }
        Ok(written)
    }
}

pub fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values serialize");
    s.push('\n');
    s
}
