//! One test per acceptance criterion. Each prints a single
//! `criterion N: PASS|FAIL ...` line (sub-cases get their own lines) and
//! fails when the criterion is not met.

mod common;

use std::time::Instant;

use common::{random_function, random_graph};
use qlgraph::criticality::{hardy_weight, nonnegativity_probe_on, CriticalityEvidence};
use qlgraph::fit::linear_fit;
use qlgraph::landis::{
    landis_check_general, landis_check_recurrent, landis_check_tree, LandisOptions, LandisReport, RecurrenceEvidence,
    Reference, Verdict,
};
use qlgraph::operator::{abs_part, ground_state_remainder, positive_part, simplified_energy};
use qlgraph::solvers::{
    dirichlet_solve, green_function, radial_green, tree_beta, ExhaustionConfig, SolveConfig,
};
use qlgraph::{
    ball_decomposition, signed_power, BoundaryDecomposition, Error, ModelGraphSpec, SchrodingerOperator,
    VertexFunction, WeightedGraph,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn line(id: &str, ok: bool, detail: impl AsRef<str>) -> bool {
    println!("criterion {id}: {} {}", if ok { "PASS" } else { "FAIL" }, detail.as_ref());
    ok
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

#[test]
fn criterion_1_signed_power() {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut ok = true;
    for _ in 0..10_000 {
        let a: f64 = rng.gen_range(-1e6..1e6);
        let r: f64 = rng.gen_range(0.05..5.0);
        let s = signed_power(a, r).unwrap();
        ok &= signed_power(-a, r).unwrap() == -s;
        ok &= signed_power(0.0, r).unwrap() == 0.0;
        ok &= signed_power(a, 1.0).unwrap() == a;
        ok &= s.signum() == a.signum() || a == 0.0;
    }
    ok &= matches!(signed_power(1.0, 0.0), Err(Error::NonpositiveExponent(_)));
    let secs = t.elapsed().as_secs_f64();
    assert!(line("1", ok && secs < 1.0, format!("10^4 inputs exact, {secs:.3}s")));
}

#[test]
fn criterion_2_positive_part_and_absolute_value() {
    let t = Instant::now();
    let mut worst_pos = f64::NEG_INFINITY;
    let mut worst_abs = f64::NEG_INFINITY;
    let ps = [1.3, 2.0, 2.7];
    for seed in 0..200u64 {
        let n = 5 + (seed as usize * 7919) % 56;
        let p = ps[seed as usize % 3];
        let g = random_graph(seed, n, 0.08);
        let u = random_function(seed + 10_000, n, -1.0, 1.0);
        let v = random_function(seed + 20_000, n, -2.0, 2.0);
        let h = SchrodingerOperator::new(&g, p, v).unwrap();
        let up = positive_part(&u);
        for x in 0..n {
            if u[x] <= 0.0 || h.apply(&u, x).unwrap() <= 0.0 {
                worst_pos = worst_pos.max(h.apply(&up, x).unwrap());
            }
        }
        // Dirichlet-harmonic u with signed boundary data
        let boundary: Vec<usize> = (0..n).filter(|x| x % 4 == 3).collect();
        if boundary.is_empty() {
            continue;
        }
        let dom = BoundaryDecomposition::with_boundary(&g, boundary).unwrap();
        let vp = random_function(seed + 30_000, n, 0.0, 1.0);
        let hd = SchrodingerOperator::new(&g, p, vp).unwrap().with_domain(dom).unwrap();
        let data = random_function(seed + 40_000, n, -1.0, 1.0);
        let cfg = SolveConfig { residual_tol: 1e-12, ..Default::default() };
        let sol = dirichlet_solve(&hd, &data, &cfg).unwrap().values;
        let au = abs_part(&sol);
        for &x in hd.domain().interior() {
            worst_abs = worst_abs.max(hd.apply(&au, x).unwrap());
        }
    }
    let secs = t.elapsed().as_secs_f64();
    let ok = worst_pos <= 1e-10 && worst_abs <= 1e-8 && secs < 30.0;
    assert!(line(
        "2",
        ok,
        format!("max H[u+] = {worst_pos:.3e}, max H[|u|] = {worst_abs:.3e}, 200 graphs, {secs:.1}s")
    ));
}

#[test]
fn criterion_3_simplified_energy_sandwich() {
    let t = Instant::now();
    let n = 40;
    let g = random_graph(3, n, 0.1);
    let u = random_function(4, n, 0.2, 3.0);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut all = true;
    for &p in &[1.5, 2.0, 3.0] {
        let h = SchrodingerOperator::laplacian(&g, p).unwrap();
        let (mut min_n, mut lo, mut hi) = (f64::INFINITY, f64::INFINITY, 0.0f64);
        for k in 0..500 {
            let phi = VertexFunction::new(
                (0..n)
                    .map(|_| if k % 3 == 0 && rng.gen_bool(0.6) { 0.0 } else { rng.gen_range(-1.0..1.0) })
                    .collect(),
            )
            .unwrap();
            let big_n = ground_state_remainder(&h, &u, &phi).unwrap();
            let e = simplified_energy(&g, p, &u, &phi).unwrap();
            min_n = min_n.min(big_n);
            if e > 1e-12 {
                lo = lo.min(big_n / e);
                hi = hi.max(big_n / e);
            }
        }
        let ok = min_n >= -1e-10 && lo > 0.0 && hi.is_finite() && (p != 2.0 || (lo - 1.0).abs() <= 1e-10 && (hi - 1.0).abs() <= 1e-10);
        all &= line(&format!("3[p={p}]"), ok, format!("min N = {min_n:.3e}, N/E in [{lo:.6}, {hi:.6}]"));
    }
    let secs = t.elapsed().as_secs_f64();
    assert!(line("3", all && secs < 60.0, format!("{secs:.1}s")));
}

/// `Σ_{j≥k} d^{-(j+1)/(p-1)}` in closed form.
fn tree_green(p: f64, d: usize, k: usize) -> f64 {
    let rho = (d as f64).powf(-1.0 / (p - 1.0));
    rho.powi(k as i32 + 1) / (1.0 - rho)
}

#[test]
fn criterion_4_green_closed_form_vs_exhaustion() {
    let t = Instant::now();
    let mut all = true;
    for &d in &[2usize, 3] {
        for &p in &[1.5, 2.0, 3.0] {
            let radii: Vec<usize> = if d == 2 { vec![11, 12, 13, 14] } else { vec![7, 8, 9, 10] };
            let r_max = *radii.last().unwrap();
            let spec = ModelGraphSpec::tree(d, r_max).unwrap();
            let cfg = ExhaustionConfig { radii, reference_radius: 6, ..Default::default() };
            let res = green_function(&spec, p, 0.0, &cfg).unwrap();
            let ball = ModelGraphSpec::tree(d, 6).unwrap().realize().unwrap();
            let err = (0..ball.len())
                .map(|x| rel(res.limit[x], tree_green(p, d, ball.depth(x))))
                .fold(0.0, f64::max);
            let closed = spec.green0_profile(p).unwrap();
            let profile_err = (0..=r_max).map(|k| rel(closed[k].value, tree_green(p, d, k))).fold(0.0, f64::max);
            let flux = spec.spherical_flux_solve(p, 0.0, tree_green(p, d, 0)).unwrap();
            // sup-norm error relative to G(0): the forward recurrence subtracts
            // steps from G(0), so pointwise relative error grows like G(0)/G(k)
            let flux_err = flux
                .values
                .values()
                .iter()
                .enumerate()
                .map(|(k, &v)| (v - tree_green(p, d, k)).abs() / tree_green(p, d, 0))
                .fold(0.0, f64::max);
            let ok = res.converged && res.monotone && err <= 1e-6 && flux_err <= 1e-12 && profile_err <= 1e-12;
            all &= line(
                &format!("4[d={d},p={p}]"),
                ok,
                format!("exhaustion rel err {err:.2e} (R to {r_max}), flux err {flux_err:.2e}"),
            );
        }
    }
    for &p in &[1.5, 2.0, 3.0] {
        let path = ModelGraphSpec::path(60).unwrap();
        let cfg = ExhaustionConfig { radii: vec![20, 30, 40, 50], reference_radius: 2, ..Default::default() };
        let out = green_function(&path, p, 0.0, &cfg);
        all &= line(
            &format!("4[path,p={p}]"),
            matches!(out, Err(Error::DivergentExhaustion { .. })),
            format!("{:?}", out.err()),
        );
    }
    let secs = t.elapsed().as_secs_f64();
    assert!(line("4", all && secs < 300.0, format!("{secs:.1}s")));
}

#[test]
fn criterion_5_beta_root() {
    let t = Instant::now();
    let mut all = true;
    for &p in &[1.2, 1.5, 2.0, 3.0, 4.0] {
        for &d in &[2usize, 3, 4, 5] {
            let b = tree_beta(p, d).unwrap();
            let q = p - 1.0;
            let dd = d as f64;
            let f = (1.0 - b).powf(q) - ((1.0 / b - 1.0).powf(q) - 1.0) / dd;
            let mut ok = f.abs() <= 1e-12 && b > 0.0 && b < 1.0;
            let mut detail = format!("beta = {b:.12}, |f| = {:.1e}", f.abs());
            if p == 2.0 {
                let exact = ((dd + 2.0) - (dd * dd + 4.0).sqrt()) / (2.0 * dd);
                ok &= (b - exact).abs() <= 1e-10;
                detail += &format!(", closed form diff {:.1e}", (b - exact).abs());
            }
            // realized ball for d = 2, radial quotient otherwise
            let spec = ModelGraphSpec::tree(d, 12).unwrap();
            let g = if d == 2 { spec.realize().unwrap() } else { spec.radial_quotient().unwrap() };
            let h = SchrodingerOperator::new(&g, p, VertexFunction::constant(g.len(), 1.0))
                .unwrap()
                .with_domain(ball_decomposition(&g, 12).unwrap())
                .unwrap();
            let u = VertexFunction::radial(&g, |k| b.powi(k as i32)).unwrap();
            let res = h
                .domain()
                .interior()
                .iter()
                .filter(|&&x| x != g.root())
                .map(|&x| h.apply(&u, x).unwrap().abs())
                .fold(0.0, f64::max);
            ok &= res <= 1e-10;
            detail += &format!(", B_12 residual {res:.1e}");
            all &= line(&format!("5[p={p},d={d}]"), ok, detail);
        }
    }
    let secs = t.elapsed().as_secs_f64();
    assert!(line("5", all && secs < 10.0, format!("{secs:.2}s")));
}

#[test]
fn criterion_6_hardy_package() {
    let t = Instant::now();
    let mut all = true;
    let models: Vec<(String, ModelGraphSpec, f64)> = vec![
        ("tree d=2 p=2".into(), ModelGraphSpec::tree(2, 12).unwrap(), 2.0),
        ("tree d=2 p=3".into(), ModelGraphSpec::tree(2, 12).unwrap(), 3.0),
        ("tree d=3 p=1.5".into(), ModelGraphSpec::tree(3, 11).unwrap(), 1.5),
        ("antitree g=1 p=1.5".into(), ModelGraphSpec::antitree(1.0, 14).unwrap(), 1.5),
        ("antitree g=2 p=2".into(), ModelGraphSpec::antitree(2.0, 10).unwrap(), 2.0),
        ("antitree g=2 p=3".into(), ModelGraphSpec::antitree(2.0, 10).unwrap(), 3.0),
    ];
    for (name, spec, p) in &models {
        let p = *p;
        let g = spec.realize().unwrap();
        let r = spec.radius();
        let dom = ball_decomposition(&g, r).unwrap();
        let prof = spec.green0_profile(p).unwrap();
        let g0 = VertexFunction::radial(&g, |k| prof[k].value).unwrap();
        let pkg = hardy_weight(&g, &dom, p, &g0).unwrap();
        let scale = (0..g.len()).map(|x| pkg.phi[x].powf(p - 1.0) * pkg.w_op[x].abs()).fold(0.0, f64::max);
        let res_ok = pkg.residual <= 1e-12 * scale.max(1.0);

        // |∇Φ| between the bounds from G_0(y)^{-1/p} and G_0(x)^{-1/p}, |x| = |y| + 1
        let flux = spec.boundary_weights();
        let mo = spec.root_measure();
        let mut bracket = 0.0f64;
        for (a, b, _) in g.edges() {
            let (x, y) = if g.depth(a) > g.depth(b) { (a, b) } else { (b, a) };
            let grad_g0 = (mo / flux[g.depth(y)]).powf(1.0 / (p - 1.0));
            let grad_phi = pkg.phi[y] - pkg.phi[x];
            let c = (p - 1.0) / p * grad_g0;
            let lower = c * g0[y].powf(-1.0 / p);
            let upper = c * g0[x].powf(-1.0 / p);
            bracket = bracket.max((lower - grad_phi) / grad_phi).max((grad_phi - upper) / grad_phi);
        }
        let bracket_ok = bracket <= 1e-10;

        let h = pkg.operator(&g, dom.clone()).unwrap();
        let support: Vec<usize> = (0..g.len()).filter(|&x| g.depth(x) <= r - 3).collect();
        let probe = nonnegativity_probe_on(&h, &support, 500, 6).unwrap();
        let probe_ok = probe.min_energy >= -1e-8;

        let mut detail = format!(
            "residual {:.1e}, bracket {:.1e}, probe min {:.3e}",
            pkg.residual, bracket, probe.min_energy
        );
        let mut ok = res_ok && bracket_ok && probe_ok;
        if let qlgraph::model::ModelKind::Tree { d } = spec.kind() {
            let dd = d as f64;
            let ratios: Vec<f64> = (1..=10)
                .map(|k| {
                    let x = g.sphere(k)[0];
                    let y = g.sphere(k - 1)[0];
                    (pkg.phi[y] - pkg.phi[x]) / dd.powf(-(k as f64) / p)
                })
                .collect();
            let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = ratios.iter().copied().fold(0.0, f64::max);
            ok &= lo > 0.0 && hi / lo <= 1.0 + 1e-9;
            detail += &format!(", |grad Phi| / d^(-|x|/p) in [{lo:.6}, {hi:.6}]");
        }
        all &= line(&format!("6[{name}]"), ok, detail);
    }
    let secs = t.elapsed().as_secs_f64();
    assert!(line("6", all && secs < 120.0, format!("{secs:.1}s")));
}

fn antitree_slope(p: f64, gamma: f64) -> f64 {
    let spec = ModelGraphSpec::antitree(gamma, 4000).unwrap();
    let prof = spec.green0_profile(p).unwrap();
    let radii: Vec<usize> = (10..=40).collect();
    let values: Vec<f64> = radii.iter().map(|&k| prof[k].value).collect();
    let xs: Vec<f64> = radii.iter().map(|&k| (k as f64).ln()).collect();
    let ys: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    linear_fit(&xs, &ys).unwrap().slope
}

#[test]
fn criterion_7_antitree_asymptotics() {
    let t = Instant::now();
    let s = antitree_slope(2.0, 1.0);
    let first = line("7a", (s + 1.0).abs() <= 0.05, format!("p=2 gamma=1 slope {s:.4} (target -1 +- 5%)"));
    let mut grid = true;
    for &p in &[1.5, 2.0, 3.0] {
        for &gamma in &[1.0, 2.0] {
            if gamma <= (p - 1.0) / 2.0 {
                println!("criterion 7b[p={p},gamma={gamma}]: SKIP not subcritical");
                continue;
            }
            let target = -(2.0 * gamma - p + 1.0) / (p - 1.0);
            let s = antitree_slope(p, gamma);
            grid &= line(
                &format!("7b[p={p},gamma={gamma}]"),
                ((s - target) / target).abs() <= 0.10,
                format!("slope {s:.4}, target {target:.4}"),
            );
        }
    }
    let secs = t.elapsed().as_secs_f64();
    assert!(line("7", first && grid && secs < 120.0, format!("{secs:.1}s")));
}

struct TreeCase {
    p: f64,
    d: usize,
    g: WeightedGraph,
    beta: f64,
}

fn tree_case(p: f64, d: usize) -> TreeCase {
    let g = ModelGraphSpec::tree(d, 30).unwrap().radial_quotient().unwrap();
    TreeCase { p, d, beta: tree_beta(p, d).unwrap(), g }
}

fn general_on_tree(case: &TreeCase, u: &VertexFunction, assume_harmonic: bool) -> (LandisReport, f64) {
    let g = &case.g;
    let p = case.p;
    let spec = ModelGraphSpec::tree(case.d, 30).unwrap();
    let dom = ball_decomposition(g, 30).unwrap();
    let prof = spec.green0_profile(p).unwrap();
    let g0 = VertexFunction::radial(g, |k| prof[k].value).unwrap();
    let pkg = hardy_weight(g, &dom, p, &g0).unwrap();
    let href = pkg.operator(g, dom.clone()).unwrap();
    let h = SchrodingerOperator::new(g, p, VertexFunction::constant(g.len(), 1.0)).unwrap().with_domain(dom).unwrap();
    let g1 = radial_green(&spec, p, 1.0).unwrap().lift(g).unwrap();
    let ratios: Vec<f64> = (10..=25).map(|k| g1[g.sphere(k)[0]] / case.beta.powi(k as i32)).collect();
    let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ratios.iter().copied().fold(0.0, f64::max);
    let reference = Reference {
        operator: &href,
        ground_state: &pkg.phi,
        evidence: CriticalityEvidence::ConfirmedByConstruction { source: "optimal Hardy weight".into() },
    };
    let opts = LandisOptions { exceptional: vec![g.root()], assume_harmonic, ..Default::default() };
    (landis_check_general(&h, u, &reference, &g1, &opts).unwrap(), hi / lo - 1.0)
}

#[test]
fn criterion_8_landis_on_trees() {
    let t = Instant::now();
    let mut all = true;
    for &p in &[1.5, 2.0, 3.0] {
        for &d in &[2usize, 3] {
            let case = tree_case(p, d);
            let dd = d as f64;
            let fast = VertexFunction::radial(&case.g, |k| dd.powi(-2 * k as i32)).unwrap();
            let slow = VertexFunction::radial(&case.g, |k| case.beta.powi(k as i32)).unwrap();
            let opts = LandisOptions::default();
            let rf = landis_check_tree(&case.g, p, d, &fast, None, &opts).unwrap();
            let rs = landis_check_tree(&case.g, p, d, &slow, None, &opts).unwrap();
            let liminf_one = rs.condition("decay").unwrap().trace.iter().all(|t| (t.min - 1.0).abs() < 1e-12);
            let ok_fast = rf.verdict == Verdict::ForcesZero;
            let ok_slow = rs.verdict == Verdict::NotTriggered && liminf_one;
            all &= line(
                &format!("8[p={p},d={d},u=d^-2|x|]"),
                ok_fast,
                format!("{:?} {:?}", rf.verdict, rf.reasons),
            );
            all &= line(&format!("8[p={p},d={d},u=beta^|x|]"), ok_slow, format!("{:?}, liminf ratio 1", rs.verdict));

            let (gf, spread) = general_on_tree(&case, &fast, true);
            let (gs, _) = general_on_tree(&case, &slow, false);
            let consistent = gf.verdict == rf.verdict && gs.verdict == rs.verdict && spread <= 0.05;
            all &= line(
                &format!("8[p={p},d={d},cross-regime]"),
                consistent,
                format!("general {:?}/{:?}, G1/beta^k spread {spread:.2e} on 10..25", gf.verdict, gs.verdict),
            );
        }
    }
    let secs = t.elapsed().as_secs_f64();
    assert!(line("8", all && secs < 300.0, format!("{secs:.1}s")));
}

#[test]
fn criterion_9_recurrent_path() {
    let t = Instant::now();
    let mut all = true;
    let spec = ModelGraphSpec::path(60).unwrap();
    let g = spec.realize().unwrap();
    let v = VertexFunction::zeros(g.len());
    for &p in &[1.5, 2.0] {
        let decaying = VertexFunction::radial(&g, |k| 1.0 / (1.0 + k as f64)).unwrap();
        let opts = LandisOptions { assume_harmonic: true, ..Default::default() };
        let r1 = landis_check_recurrent(&g, p, &v, &decaying, &[0], RecurrenceEvidence::Model(&spec), &opts).unwrap();
        let one = VertexFunction::constant(g.len(), 1.0);
        let r2 = landis_check_recurrent(&g, p, &v, &one, &[0], RecurrenceEvidence::Model(&spec), &LandisOptions::default())
            .unwrap();
        all &= line(
            &format!("9[p={p}]"),
            r1.verdict == Verdict::ForcesZero && r2.verdict == Verdict::NotTriggered,
            format!("decaying {:?}, constant {:?}", r1.verdict, r2.verdict),
        );
    }
    let secs = t.elapsed().as_secs_f64();
    assert!(line("9", all && secs < 10.0, format!("{secs:.2}s")));
}

fn report_bundle() -> String {
    let mut out = String::new();
    let case = tree_case(3.0, 2);
    let fast = VertexFunction::radial(&case.g, |k| 4f64.powi(-(k as i32))).unwrap();
    let opts = LandisOptions { probe_samples: 200, seed: 42, ..Default::default() };
    let pot = VertexFunction::constant(case.g.len(), 1.0);
    out += &landis_check_tree(&case.g, 3.0, 2, &fast, Some(&pot), &LandisOptions { assume_harmonic: true, ..opts.clone() })
        .unwrap()
        .to_json();
    out += &general_on_tree(&case, &fast, true).0.to_json();
    let spec = ModelGraphSpec::tree(2, 8).unwrap();
    let cfg = ExhaustionConfig { radii: vec![5, 6, 7, 8], reference_radius: 3, ..Default::default() };
    out += &serde_json::to_string(&green_function(&spec, 1.5, 0.0, &cfg).unwrap()).unwrap();
    let g = random_graph(9, 30, 0.1);
    let h = SchrodingerOperator::new(&g, 2.5, random_function(10, 30, -0.2, 1.0)).unwrap();
    out += &serde_json::to_string(&qlgraph::criticality::nonnegativity_probe(&h, 300, 7).unwrap()).unwrap();
    out
}

#[test]
fn criterion_10_determinism() {
    let a = report_bundle();
    let b = report_bundle();
    let c = std::thread::spawn(report_bundle).join().unwrap();
    assert!(line("10", a == b && b == c, format!("{} bytes, three runs identical", a.len())));
}
