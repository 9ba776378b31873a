#![allow(dead_code)]

use qlgraph::{VertexFunction, WeightedGraph};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Connected graph on `n` vertices: a random recursive tree plus extra
/// edges with probability `extra`.
pub fn random_graph(seed: u64, n: usize, extra: f64) -> WeightedGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for i in 1..n {
        let j = rng.gen_range(0..i);
        edges.push((j, i, rng.gen_range(0.1..2.0)));
    }
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen_bool(extra) && !edges.iter().any(|&(a, b, _)| (a, b) == (i, j) || (a, b) == (j, i)) {
                edges.push((i, j, rng.gen_range(0.1..2.0)));
            }
        }
    }
    let measures: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..2.0)).collect();
    WeightedGraph::build(&edges, &measures, 0).unwrap()
}

pub fn random_function(seed: u64, n: usize, lo: f64, hi: f64) -> VertexFunction {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    VertexFunction::new((0..n).map(|_| rng.gen_range(lo..hi)).collect()).unwrap()
}
