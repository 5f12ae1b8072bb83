//! Random annular systems against a brute-force grid search for `Mx >= x`.

use num_rational::BigRational;
use proptest::prelude::*;
use proptest::test_runner::{Config, RngSeed};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use elastica::obstruction::{emb_annular, obstruction_check, Preimage, Target, TransitionData};

fn random_system(rng: &mut ChaCha8Rng) -> TransitionData {
    let m = rng.gen_range(1..=4);
    let d = rng.gen_range(2..=4u32);
    let mut pre = Vec::new();
    for c in 0..m {
        let mut left = d;
        while left > 0 {
            let k = rng.gen_range(1..=left);
            left -= k;
            let target = if rng.gen_bool(0.7) { Target::Class(rng.gen_range(0..m)) } else { Target::Inessential };
            pre.push(Preimage { covers: c, degree: k, target });
        }
    }
    TransitionData::new((0..m).map(|i| format!("c{i}")).collect(), d, pre).unwrap()
}

/// Transition matrix rebuilt from the preimage list.
fn matrix(td: &TransitionData) -> Vec<Vec<f64>> {
    let m = td.size();
    let mut a = vec![vec![0.0; m]; m];
    for p in &td.preimages {
        if let Target::Class(t) = p.target {
            a[t][p.covers] += 1.0 / p.degree as f64;
        }
    }
    a
}

/// Power iteration on `M + I`, which shares the Perron vector of `M`.
fn power_radius(a: &[Vec<f64>]) -> f64 {
    let m = a.len();
    let mut x = vec![1.0; m];
    let mut r = 0.0;
    for _ in 0..20000 {
        let y: Vec<f64> = (0..m).map(|i| x[i] + (0..m).map(|j| a[i][j] * x[j]).sum::<f64>()).collect();
        let s: f64 = y.iter().sum();
        r = s / x.iter().sum::<f64>() - 1.0;
        x = y.iter().map(|v| v / s).collect();
    }
    r
}

/// `max min_{x_i > 0} (Mx)_i / x_i` over the simplex grid with step `1/n`.
fn grid_ratio(a: &[Vec<f64>], n: usize) -> f64 {
    fn walk(a: &[Vec<f64>], left: usize, x: &mut Vec<usize>, best: &mut f64) {
        let m = a.len();
        if x.len() + 1 == m {
            x.push(left);
            let mut worst = f64::INFINITY;
            for i in 0..m {
                if x[i] > 0 {
                    let mx: f64 = (0..m).map(|j| a[i][j] * x[j] as f64).sum();
                    worst = worst.min(mx / x[i] as f64);
                }
            }
            *best = best.max(worst);
            x.pop();
            return;
        }
        for k in 0..=left {
            x.push(k);
            walk(a, left - k, x, best);
            x.pop();
        }
    }
    let mut best = 0.0;
    walk(a, n, &mut Vec::new(), &mut best);
    best
}

proptest! {
    #![proptest_config(Config { cases: 256, rng_seed: RngSeed::Fixed(21), failure_persistence: None, ..Config::default() })]

    fn verdict_matches_grid_search(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let td = random_system(&mut rng);
        let a = matrix(&td);
        let rho = power_radius(&a);
        prop_assume!(!(0.75..1.0).contains(&rho));
        let oracle = grid_ratio(&a, 36) >= 0.8;
        prop_assert_eq!(oracle, rho >= 1.0);
        let v = obstruction_check(&td, 1e-9);
        prop_assert_eq!(v.exact_obstructed, oracle);
        prop_assert_eq!(v.obstructed, oracle);
        prop_assert!((v.lambda - rho).abs() < 1e-3, "lambda {} power iteration {}", v.lambda, rho);
        if oracle {
            let e = v.witness_emb.expect("witness");
            prop_assert!(e <= 1.0 + 1e-9, "witness energy {}", e);
        } else {
            for _ in 0..8 {
                let alpha: Vec<BigRational> = (0..td.size())
                    .map(|_| BigRational::new(rng.gen_range(1..=9).into(), rng.gen_range(1..=9).into()))
                    .collect();
                if let Some(e) = emb_annular(&td, &alpha).unwrap() {
                    prop_assert!(e > BigRational::from_integer(1.into()), "energy {} at {:?}", e, alpha);
                }
            }
        }
    }
}

/// Every property, by name.
pub const ALL: &[(&str, fn())] = &[
    ("verdict_matches_grid_search", verdict_matches_grid_search),
];

pub fn run(name: &str) {
    let (_, f) = ALL.iter().find(|(n, _)| *n == name).expect("unknown property");
    f();
}
