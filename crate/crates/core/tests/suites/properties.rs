//! Randomised identities and inequalities between the energies.

use std::sync::Arc;

use num_rational::BigRational;
use proptest::prelude::*;
use proptest::test_runner::{Config, RngSeed};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use elastica::covers::{pullback_curve, CoveringMap};
use elastica::curves::{curve_length, enumerate_cycles, extremal_length, MultiCurve, Step};
use elastica::graph::{ElasticGraph, LengthGraph};
use elastica::maps::{compose, dirichlet_energy, embedding_energy, lipschitz, pushforward_curve, GraphPoint, PLGraphMap, Segment};
use elastica::{Dir, Graph, Scalar};

type Q = BigRational;

fn q(p: i64, d: i64) -> Q {
    Q::new(p.into(), d.into())
}

fn config(seed: u64) -> Config {
    Config { cases: 256, rng_seed: RngSeed::Fixed(seed), failure_persistence: None, ..Config::default() }
}

/// Connected graph with `nv` vertices and `ne >= nv - 1` edges (loops allowed).
fn random_graph(rng: &mut ChaCha8Rng, nv: usize, ne: usize) -> Arc<Graph> {
    let mut edges = Vec::new();
    for v in 1..nv {
        edges.push((rng.gen_range(0..v), v));
    }
    while edges.len() < ne {
        edges.push((rng.gen_range(0..nv), rng.gen_range(0..nv)));
    }
    let vertices = (0..nv).map(|v| format!("v{v}")).collect();
    let edges = edges.into_iter().enumerate().map(|(i, (a, b))| (format!("e{i}"), a, b)).collect();
    Arc::new(Graph::from_indices(vertices, edges).unwrap())
}

fn rose(k: usize) -> Arc<Graph> {
    Arc::new(Graph::from_indices(vec!["o".into()], (0..k).map(|i| (format!("r{i}"), 0, 0)).collect()).unwrap())
}

fn random_measure<T: Scalar>(rng: &mut ChaCha8Rng, n: usize) -> Vec<T> {
    (0..n).map(|_| T::from_ratio(rng.gen_range(1..=6), rng.gen_range(1..=4))).collect()
}

/// Map from `dom` onto a rose: every vertex to the centre, every edge along a
/// random word of full petal traversals at random speeds.
fn map_to_rose<T: Scalar>(rng: &mut ChaCha8Rng, dom: Arc<Graph>, alpha: Vec<T>, k: usize, beta: Vec<T>) -> PLGraphMap<T> {
    let cod = rose(k);
    let routes = (0..dom.edge_count())
        .map(|_| {
            let len = rng.gen_range(1..=3);
            let w: Vec<i64> = (0..len).map(|_| rng.gen_range(1..=3)).collect();
            let total: i64 = w.iter().sum();
            w.iter()
                .map(|wi| {
                    let e = rng.gen_range(0..k);
                    let span = T::from_ratio(*wi, total);
                    if rng.gen_bool(0.5) {
                        Segment::new(e, T::zero(), T::one(), span)
                    } else {
                        Segment::new(e, T::one(), T::zero(), span)
                    }
                })
                .collect()
        })
        .collect();
    let images = vec![GraphPoint::Vertex(0); dom.vertex_count()];
    PLGraphMap::new(dom, cod, alpha, beta, images, routes).unwrap()
}

fn random_cycle(rng: &mut ChaCha8Rng, g: &Arc<Graph>) -> Option<Vec<Step>> {
    let cycles = enumerate_cycles(g, 4);
    if cycles.is_empty() {
        return None;
    }
    let c = &cycles[rng.gen_range(0..cycles.len())];
    let reps = rng.gen_range(1..=2);
    Some(c.steps.iter().cycle().take(c.steps.len() * reps).copied().collect())
}

proptest! {
    #![proptest_config(config(11))]

    fn el_is_quadratic(seed in any::<u64>(), p in 1i64..40, d in 1i64..12) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let nv = rng.gen_range(1..=3);
        let ne = rng.gen_range(nv..=5);
        let g = random_graph(&mut rng, nv, ne);
        let eg = ElasticGraph::new(g.clone(), random_measure::<Q>(&mut rng, g.edge_count())).unwrap();
        let steps = random_cycle(&mut rng, &g);
        prop_assume!(steps.is_some());
        let c = MultiCurve::single(g, steps.unwrap(), q(rng.gen_range(1..5), rng.gen_range(1..4))).unwrap();
        let a = q(p, d);
        let lhs = extremal_length(&c.scaled(a.clone()), &eg).unwrap();
        let rhs = a.clone() * a * extremal_length(&c, &eg).unwrap();
        prop_assert_eq!(lhs, rhs);
    }
}

/// Degree-`d` cover of `base` from one random permutation per edge.
fn random_cover(rng: &mut ChaCha8Rng, base: &Arc<Graph>, d: usize) -> CoveringMap {
    let nv = base.vertex_count();
    let vertices = (0..nv * d).map(|i| format!("v{}_{}", i / d, i % d)).collect();
    let mut edges = Vec::new();
    let mut edge_map = Vec::new();
    for e in 0..base.edge_count() {
        let mut perm: Vec<usize> = (0..d).collect();
        for i in (1..d).rev() {
            perm.swap(i, rng.gen_range(0..=i));
        }
        for k in 0..d {
            edges.push((format!("e{e}_{k}"), base.tail(e) * d + k, base.head(e) * d + perm[k]));
            edge_map.push((e, Dir::Fwd));
        }
    }
    let total = Arc::new(Graph::from_indices(vertices, edges).unwrap());
    let vm = (0..nv * d).map(|i| i / d).collect();
    CoveringMap::new(total, base.clone(), vm, edge_map).unwrap()
}

proptest! {
    #![proptest_config(config(12))]

    fn el_scales_by_degree_under_pullback(seed in any::<u64>(), d in 1usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let nv = rng.gen_range(1..=3);
        let ne = rng.gen_range(nv..=4);
        let g = random_graph(&mut rng, nv, ne);
        let alpha = random_measure::<Q>(&mut rng, g.edge_count());
        let steps = random_cycle(&mut rng, &g);
        prop_assume!(steps.is_some());
        let c = MultiCurve::single(g.clone(), steps.unwrap(), q(rng.gen_range(1..5), 1)).unwrap();
        let cover = random_cover(&mut rng, &g, d);
        let up = pullback_curve(&cover, &c).unwrap();
        let eg_up = ElasticGraph::new(cover.total.clone(), cover.pull_measure(&alpha)).unwrap();
        let eg = ElasticGraph::new(g, alpha).unwrap();
        let lhs = extremal_length(&up, &eg_up).unwrap();
        let rhs = Q::from_integer((d as i64).into()) * extremal_length(&c, &eg).unwrap();
        prop_assert_eq!(lhs, rhs);
    }
}

proptest! {
    #![proptest_config(config(13))]

    fn emb_dominates_lipschitz(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let nv = rng.gen_range(1..=3);
        let ne = rng.gen_range(nv..=4);
        let dom = random_graph(&mut rng, nv, ne);
        let k = rng.gen_range(1..=3);
        let alpha = random_measure::<Q>(&mut rng, dom.edge_count());
        let beta = random_measure::<Q>(&mut rng, k);
        let m = map_to_rose(&mut rng, dom, alpha, k, beta);
        prop_assert!(embedding_energy(&m) >= lipschitz(&m));
    }

    fn emb_and_dir_submultiplicative(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let nv = rng.gen_range(1..=3);
        let ne = rng.gen_range(nv..=4);
        let g1 = random_graph(&mut rng, nv, ne);
        let (k2, k3) = (rng.gen_range(1..=3), rng.gen_range(1..=3));
        let a1 = random_measure::<f64>(&mut rng, g1.edge_count());
        let a2 = random_measure::<f64>(&mut rng, k2);
        let a3 = random_measure::<f64>(&mut rng, k3);
        let m1 = map_to_rose(&mut rng, g1, a1, k2, a2.clone());
        let m2 = map_to_rose(&mut rng, rose(k2), a2, k3, a3);
        let c = compose(&m2, &m1).unwrap();
        let slack = 1e-9;
        let (e1, e2, e12) = (embedding_energy(&m1), embedding_energy(&m2), embedding_energy(&c));
        prop_assert!(e12 <= e2 * e1 * (1.0 + slack) + slack, "Emb {} > {} * {}", e12, e2, e1);
        let (d2, d12) = (dirichlet_energy(&m2), dirichlet_energy(&c));
        prop_assert!(d12 <= d2 * e1 * (1.0 + slack) + slack, "Dir {} > {} * {}", d12, d2, e1);
    }

    fn duality_equality_is_exact(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let nv = rng.gen_range(1..=3);
        let ne = rng.gen_range(nv..=5);
        let g = random_graph(&mut rng, nv, ne);
        let alpha = random_measure::<Q>(&mut rng, g.edge_count());
        let steps = random_cycle(&mut rng, &g);
        prop_assume!(steps.is_some());
        let c = MultiCurve::single(g.clone(), steps.unwrap(), q(rng.gen_range(1..4), rng.gen_range(1..3))).unwrap();
        let n = c.counts();
        let ell: Vec<Q> = alpha.iter().zip(&n).map(|(a, x)| a.clone() * x.clone()).collect();
        let f = PLGraphMap::identity(g.clone(), alpha.clone()).with_measures(alpha.clone(), ell.clone()).unwrap();
        let len = curve_length(&pushforward_curve(&f, &c).unwrap(), &LengthGraph::new(g.clone(), ell).unwrap()).unwrap();
        let el = extremal_length(&c, &ElasticGraph::new(g, alpha).unwrap()).unwrap();
        prop_assert_eq!(len.clone() * len, dirichlet_energy(&f) * el);
    }
}

/// Every property, by name.
pub const ALL: &[(&str, fn())] = &[
    ("el_is_quadratic", el_is_quadratic),
    ("el_scales_by_degree_under_pullback", el_scales_by_degree_under_pullback),
    ("emb_dominates_lipschitz", emb_dominates_lipschitz),
    ("emb_and_dir_submultiplicative", emb_and_dir_submultiplicative),
    ("duality_equality_is_exact", duality_equality_is_exact),
];

pub fn run(name: &str) {
    let (_, f) = ALL.iter().find(|(n, _)| *n == name).expect("unknown property");
    f();
}
