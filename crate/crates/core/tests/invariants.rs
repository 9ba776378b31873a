mod common;

use common::{random_function, random_graph};
use proptest::prelude::*;
use qlgraph::model::Wiring;
use qlgraph::operator::{abs_part, ground_state_remainder, positive_part, simplified_energy};
use qlgraph::solvers::{dirichlet_solve, SolveConfig};
use qlgraph::{signed_power, BoundaryDecomposition, ModelGraphSpec, SchrodingerOperator, VertexFunction, WeightedGraph};

fn p_strategy() -> impl Strategy<Value = f64> {
    prop_oneof![Just(1.3), Just(1.5), Just(2.0), Just(2.7), Just(3.0), 1.1f64..4.0]
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn signed_power_odd_and_multiplicative(a in -1e3f64..1e3, b in -1e3f64..1e3, r in 0.1f64..4.0) {
        let pa = signed_power(a, r).unwrap();
        prop_assert_eq!(signed_power(-a, r).unwrap(), -pa);
        prop_assert_eq!(signed_power(a, 1.0).unwrap(), a);
        prop_assert_eq!(signed_power(0.0, r).unwrap(), 0.0);
        let pab = signed_power(a * b, r).unwrap();
        prop_assert!(close(pab, pa * signed_power(b, r).unwrap(), 1e-12));
    }

    /// Summing `m Δ_p f` over a finite graph telescopes edge fluxes to zero,
    /// and pairing with `φ` gives the edge form.
    #[test]
    fn divergence_and_green_formula(seed in 0u64..10_000, n in 2usize..40, p in p_strategy()) {
        let g = random_graph(seed, n, 0.1);
        let f = random_function(seed + 1, n, -2.0, 2.0);
        let phi = random_function(seed + 2, n, -1.0, 1.0);
        let op = SchrodingerOperator::laplacian(&g, p).unwrap();
        let lap: Vec<f64> = (0..n).map(|x| op.apply(&f, x).unwrap()).collect();
        let total: f64 = (0..n).map(|x| g.measure(x) * lap[x]).sum();
        let scale: f64 = g.edges().map(|(x, y, b)| b * (f[x] - f[y]).abs().powf(p - 1.0)).sum();
        prop_assert!(total.abs() <= 1e-12 * (1.0 + scale));
        let lhs: f64 = (0..n).map(|x| g.measure(x) * phi[x] * lap[x]).sum();
        let rhs: f64 = g
            .edges()
            .map(|(x, y, b)| b * (phi[x] - phi[y]) * signed_power(f[x] - f[y], p - 1.0).unwrap())
            .sum();
        prop_assert!(close(lhs, rhs, 1e-11));
        // energy identity Σ m φ H[φ] = p-th power energy
        let v = random_function(seed + 3, n, -0.5, 1.0);
        let h = SchrodingerOperator::new(&g, p, v).unwrap();
        let pairing: f64 = (0..n).map(|x| g.measure(x) * phi[x] * h.apply(&phi, x).unwrap()).sum();
        prop_assert!(close(pairing, h.energy(&phi).unwrap(), 1e-11));
    }

    /// `H[t u] = t^<p-1> H[u]` and `Q(t φ) = |t|^p Q(φ)`.
    #[test]
    fn homogeneity(seed in 0u64..10_000, n in 2usize..30, p in p_strategy(), t in -5.0f64..5.0) {
        let g = random_graph(seed, n, 0.2);
        let u = random_function(seed + 1, n, -1.0, 1.0);
        let v = random_function(seed + 2, n, -1.0, 1.0);
        let h = SchrodingerOperator::new(&g, p, v).unwrap();
        let tu = u.scaled(t);
        let k = signed_power(t, p - 1.0).unwrap();
        for x in 0..n {
            let a = h.apply(&tu, x).unwrap();
            let b = k * h.apply(&u, x).unwrap();
            prop_assert!(close(a, b, 1e-11), "x={} {} vs {}", x, a, b);
        }
        let e = h.energy(&u).unwrap();
        prop_assert!(close(h.energy(&tu).unwrap(), t.abs().powf(p) * e, 1e-11));
    }

    /// At every vertex with `u(x) ≤ 0` or `H[u](x) ≤ 0`, `H[u₊](x) ≤ 0`.
    #[test]
    fn positive_part_is_subharmonic_where_u_is(seed in 0u64..10_000, n in 2usize..60, p in p_strategy()) {
        let g = random_graph(seed, n, 0.1);
        let u = random_function(seed + 1, n, -1.0, 1.0);
        let v = random_function(seed + 2, n, -2.0, 2.0);
        let h = SchrodingerOperator::new(&g, p, v).unwrap();
        let up = positive_part(&u);
        for x in 0..n {
            if u[x] <= 0.0 || h.apply(&u, x).unwrap() <= 0.0 {
                prop_assert!(h.apply(&up, x).unwrap() <= 1e-10);
            }
        }
    }

    /// `|u|` is subharmonic wherever `u` is harmonic.
    #[test]
    fn absolute_value_of_harmonic(seed in 0u64..10_000, n in 4usize..30, p in prop_oneof![Just(1.5), Just(2.0), Just(3.0)]) {
        let g = random_graph(seed, n, 0.15);
        let v = random_function(seed + 2, n, 0.0, 1.0);
        let boundary: Vec<usize> = (0..n).filter(|x| x % 3 == 0).collect();
        let dom = BoundaryDecomposition::with_boundary(&g, boundary).unwrap();
        let h = SchrodingerOperator::new(&g, p, v).unwrap().with_domain(dom).unwrap();
        let data = random_function(seed + 3, n, -1.0, 1.0);
        let cfg = SolveConfig { scaled_residual: true, residual_tol: 1e-11, ..Default::default() };
        let u = dirichlet_solve(&h, &data, &cfg).unwrap().values;
        let au = abs_part(&u);
        for &x in h.domain().interior() {
            let scale: f64 = g.neighbors(x).iter().map(|&(y, b)| b * (u[x] - u[y]).abs().powf(p - 1.0)).sum::<f64>() / g.measure(x);
            prop_assert!(h.apply(&au, x).unwrap() <= 1e-8 * (1.0 + scale));
        }
    }

    #[test]
    fn graph_json_round_trip(seed in 0u64..10_000, n in 1usize..40) {
        let g = random_graph(seed, n, 0.1);
        let back = WeightedGraph::from_json(&g.to_json()).unwrap();
        prop_assert_eq!(&back, &g);
        prop_assert_eq!(back.to_json(), g.to_json());
    }

    /// `N(φ) ≥ 0` and at `p = 2` the simplified energy is exact.
    #[test]
    fn simplified_energy_sandwich(seed in 0u64..10_000, n in 2usize..30, p in prop_oneof![Just(1.5), Just(2.0), Just(3.0)]) {
        let g = random_graph(seed, n, 0.2);
        let u = random_function(seed + 1, n, 0.2, 2.0);
        let phi = random_function(seed + 2, n, -1.0, 1.0);
        let h = SchrodingerOperator::laplacian(&g, p).unwrap();
        let big_n = ground_state_remainder(&h, &u, &phi).unwrap();
        let e = simplified_energy(&g, p, &u, &phi).unwrap();
        prop_assert!(big_n >= -1e-10 * (1.0 + e));
        if p == 2.0 {
            prop_assert!(close(big_n, e, 1e-10));
        }
    }

    /// A radial function has the same `Δ_p` on the model graph and on its
    /// radial quotient.
    #[test]
    fn quotient_equivalence(
        sizes in prop::collection::vec(1usize..4, 3..6),
        w in prop::collection::vec(0.2f64..3.0, 5),
        p in p_strategy(),
        complete in any::<bool>(),
    ) {
        let r = sizes.len();
        let mut sphere_sizes = vec![1];
        sphere_sizes.extend(&sizes);
        let wiring = if complete { Wiring::CompleteBipartite } else { Wiring::Tree };
        if wiring == Wiring::Tree && sphere_sizes.windows(2).any(|s| s[1] % s[0] != 0) {
            return Ok(());
        }
        let weights = w[..r].to_vec();
        let measures: Vec<f64> = (0..=r).map(|k| 1.0 + 0.25 * k as f64).collect();
        let spec = ModelGraphSpec::custom(sphere_sizes, weights, measures, wiring).unwrap();
        let g = spec.realize().unwrap();
        let q = spec.radial_quotient().unwrap();
        prop_assert!(ModelGraphSpec::is_spherically_symmetric(&g, 1e-12));
        spec.check_layers(&g, 1e-12).unwrap();
        spec.check_layers(&q, 1e-12).unwrap();
        let profile = |k: usize| (1.7f64).powi(-(k as i32)) + if k % 2 == 0 { 0.1 } else { 0.0 };
        let fg = VertexFunction::radial(&g, profile).unwrap();
        let fq = VertexFunction::radial(&q, profile).unwrap();
        let hg = SchrodingerOperator::laplacian(&g, p).unwrap();
        let hq = SchrodingerOperator::laplacian(&q, p).unwrap();
        for x in 0..g.len() {
            let k = g.depth(x);
            let xq = q.sphere(k)[0];
            prop_assert!(close(hg.apply(&fg, x).unwrap(), hq.apply(&fq, xq).unwrap(), 1e-12));
        }
    }
}
