//! Annular obstructions from multicurve transition data.
//!
//! The user lists, for a multicurve `A` with `m` classes, every component of
//! its preimage: which class it covers, with which degree, and which class
//! (if any) it is isotopic to. From that we form the join of the preimage,
//! the embedding energy of `A` into it, and the transition matrix whose
//! spectral radius decides the obstruction.

use num_rational::BigRational;
use num_traits::{One, Zero};
use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;

use crate::error::{Error, Result};
use crate::graph::harmonic_add;
use crate::scalar::Scalar;

/// Where a preimage component goes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Target {
    Class(usize),
    Inessential,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Preimage {
    /// Class it covers.
    pub covers: usize,
    /// Degree of the covering onto that class.
    pub degree: u32,
    pub target: Target,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TransitionData {
    pub classes: Vec<String>,
    /// Degree of the branched cover.
    pub degree: u32,
    pub preimages: Vec<Preimage>,
    /// User assertion that the map is not a Lattes example.
    pub not_lattes: bool,
}

impl TransitionData {
    /// Validates indices, degrees, and that each class is covered `degree` times.
    pub fn new(classes: Vec<String>, degree: u32, preimages: Vec<Preimage>) -> Result<Self> {
        let m = classes.len();
        let mut bad = Vec::new();
        let mut sums = vec![0u32; m];
        for (i, p) in preimages.iter().enumerate() {
            let target_ok = match p.target {
                Target::Class(t) => t < m,
                Target::Inessential => true,
            };
            if p.covers >= m || p.degree == 0 || !target_ok {
                bad.push(format!("preimage {i}"));
                continue;
            }
            sums[p.covers] += p.degree;
        }
        for (j, s) in sums.iter().enumerate() {
            if *s != degree && bad.is_empty() {
                bad.push(format!("{} (covered with total degree {s}, expected {degree})", classes[j]));
            }
        }
        let mut seen = std::collections::HashSet::new();
        for c in &classes {
            if !seen.insert(c) {
                bad.push(format!("duplicate class {c}"));
            }
        }
        if !bad.is_empty() {
            return Err(Error::structural("inconsistent transition data", bad));
        }
        Ok(TransitionData { classes, degree, preimages, not_lattes: false })
    }

    pub fn size(&self) -> usize {
        self.classes.len()
    }
}

/// Result of joining the preimage of an annular system.
#[derive(Clone, Debug, PartialEq)]
pub struct Join<T = f64> {
    /// Merged weight per class; `None` when no essential preimage lands there.
    pub weights: Vec<Option<T>>,
    /// Indices of inessential preimages that were deleted.
    pub dropped: Vec<usize>,
}

/// Pulls back weights (`k * alpha(c)`), drops inessential components and
/// merges parallel ones by harmonic addition.
pub fn join<T: Scalar>(td: &TransitionData, alpha: &[T]) -> Result<Join<T>> {
    if alpha.len() != td.size() {
        return Err(Error::mismatch("one weight per class expected"));
    }
    if alpha.iter().any(|a| !a.is_positive()) {
        return Err(Error::invalid("annular weights must be positive"));
    }
    let mut weights: Vec<Option<T>> = vec![None; td.size()];
    let mut dropped = Vec::new();
    for (i, p) in td.preimages.iter().enumerate() {
        match p.target {
            Target::Inessential => dropped.push(i),
            Target::Class(t) => {
                let w = T::from_ratio(p.degree as i64, 1) * alpha[p.covers].clone();
                weights[t] = Some(match weights[t].take() {
                    None => w,
                    Some(prev) => harmonic_add(prev, w)?,
                });
            }
        }
    }
    Ok(Join { weights, dropped })
}

/// `max_i join(i) / alpha(i)`; `None` stands for `+inf` (a class without
/// essential preimage).
pub fn emb_annular<T: Scalar>(td: &TransitionData, alpha: &[T]) -> Result<Option<T>> {
    let j = join(td, alpha)?;
    let mut best = T::zero();
    for (w, a) in j.weights.iter().zip(alpha) {
        match w {
            None => return Ok(None),
            Some(w) => best = T::max_of(best, w.clone() / a.clone()),
        }
    }
    Ok(Some(best))
}

/// Annular energy of the sub-system on `support` (other classes excluded).
pub fn emb_annular_on(td: &TransitionData, alpha: &[f64], support: &[usize]) -> Option<f64> {
    let m = thurston_matrix_f64(td);
    let mut best: f64 = 0.0;
    for &i in support {
        let inv: f64 = support.iter().map(|&c| m[i][c] / alpha[c]).sum();
        if inv <= 0.0 {
            return None;
        }
        best = best.max(1.0 / inv / alpha[i]);
    }
    Some(best)
}

/// `M[i][c] = sum of 1/k` over essential preimages covering `c` isotopic to `i`.
pub fn thurston_matrix(td: &TransitionData) -> Vec<Vec<BigRational>> {
    let m = td.size();
    let mut out = vec![vec![BigRational::zero(); m]; m];
    for p in &td.preimages {
        if let Target::Class(t) = p.target {
            out[t][p.covers] += BigRational::from_ratio(1, p.degree as i64);
        }
    }
    out
}

pub fn thurston_matrix_f64(td: &TransitionData) -> Vec<Vec<f64>> {
    thurston_matrix(td).iter().map(|r| r.iter().map(Scalar::to_f64).collect()).collect()
}

/// Strongly connected blocks of the support graph of a square matrix.
pub fn blocks(m: &[Vec<f64>]) -> Vec<Vec<usize>> {
    let n = m.len();
    let mut g = DiGraph::<(), ()>::new();
    let nodes: Vec<_> = (0..n).map(|_| g.add_node(())).collect();
    for i in 0..n {
        for j in 0..n {
            if m[i][j] > 0.0 {
                g.add_edge(nodes[i], nodes[j], ());
            }
        }
    }
    let mut out: Vec<Vec<usize>> = tarjan_scc(&g).into_iter().map(|c| {
        let mut v: Vec<usize> = c.into_iter().map(|x| x.index()).collect();
        v.sort();
        v
    }).collect();
    out.sort();
    out
}

/// Perron root and vector of an irreducible nonnegative block by power
/// iteration on `B + I` (which is primitive), stopped when the
/// Collatz-Wielandt bounds agree within `tol`.
fn block_perron(m: &[Vec<f64>], block: &[usize], tol: f64) -> (f64, Vec<f64>) {
    let k = block.len();
    if k == 1 && m[block[0]][block[0]] == 0.0 {
        return (0.0, vec![1.0]);
    }
    let mut x = vec![1.0 / k as f64; k];
    let mut lam = 0.0;
    for _ in 0..100_000 {
        let y: Vec<f64> = (0..k)
            .map(|a| x[a] + (0..k).map(|b| m[block[a]][block[b]] * x[b]).sum::<f64>())
            .collect();
        let ratios: Vec<f64> = (0..k).map(|a| y[a] / x[a]).collect();
        let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = ratios.iter().cloned().fold(0.0, f64::max);
        let s: f64 = y.iter().sum();
        x = y.iter().map(|v| v / s).collect();
        lam = 0.5 * (lo + hi) - 1.0;
        if hi - lo <= tol * hi.max(1.0) {
            break;
        }
    }
    (lam, x)
}

/// Spectral radius: the largest Perron root over strongly connected blocks.
pub fn spectral_radius(m: &[Vec<f64>], tol: f64) -> f64 {
    blocks(m).iter().map(|b| block_perron(m, b, tol).0).fold(0.0, f64::max)
}

/// Exact test of `rho(M) < 1`: `I - M` is a nonsingular M-matrix iff all its
/// leading principal minors are positive.
pub fn radius_below_one(m: &[Vec<BigRational>]) -> bool {
    let n = m.len();
    let mut a: Vec<Vec<BigRational>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let id = if i == j { BigRational::one() } else { BigRational::zero() };
                    id - m[i][j].clone()
                })
                .collect()
        })
        .collect();
    // Gaussian elimination without pivoting: the k-th pivot is the ratio of
    // consecutive leading minors, so all minors are positive iff all pivots are.
    for k in 0..n {
        if a[k][k] <= BigRational::zero() {
            return false;
        }
        for i in k + 1..n {
            let f = a[i][k].clone() / a[k][k].clone();
            if f.is_zero() {
                continue;
            }
            for j in k..n {
                let d = f.clone() * a[k][j].clone();
                a[i][j] -= d;
            }
        }
    }
    true
}

fn det(mut a: Vec<Vec<BigRational>>) -> BigRational {
    let n = a.len();
    let mut d = BigRational::one();
    for k in 0..n {
        let Some(p) = (k..n).find(|&i| !a[i][k].is_zero()) else { return BigRational::zero() };
        if p != k {
            a.swap(p, k);
            d = -d;
        }
        d *= a[k][k].clone();
        for i in k + 1..n {
            let f = a[i][k].clone() / a[k][k].clone();
            for j in k..n {
                let x = f.clone() * a[k][j].clone();
                a[i][j] -= x;
            }
        }
    }
    d
}

/// Continued-fraction convergents of `x` with denominator at most `max_den`.
fn convergents(x: f64, max_den: i64) -> Vec<BigRational> {
    let (mut h0, mut h1, mut k0, mut k1) = (0i64, 1i64, 1i64, 0i64);
    let mut r = x;
    let mut out = Vec::new();
    for _ in 0..40 {
        let a = r.floor();
        if a.abs() > 1e12 {
            break;
        }
        let a = a as i64;
        let (h, k) = (a * h1 + h0, a * k1 + k0);
        if k > max_den {
            break;
        }
        out.push(BigRational::new(h.into(), k.into()));
        (h0, h1, k0, k1) = (h1, h, k1, k);
        let frac = r - a as f64;
        if frac.abs() < 1e-15 {
            break;
        }
        r = 1.0 / frac;
    }
    out
}

/// The spectral radius as an exact rational, when it is one close to
/// `approx`. Exactness: `r` is an eigenvalue and `rI - M` has no negative
/// principal minor, which makes it a (possibly singular) M-matrix.
pub fn exact_radius(m: &[Vec<BigRational>], approx: f64) -> Option<BigRational> {
    let n = m.len();
    if n > 16 {
        return None;
    }
    let shifted = |r: &BigRational, idx: &[usize]| -> Vec<Vec<BigRational>> {
        idx.iter()
            .map(|&i| idx.iter().map(|&j| if i == j { r.clone() - m[i][j].clone() } else { -m[i][j].clone() }).collect())
            .collect()
    };
    let all: Vec<usize> = (0..n).collect();
    convergents(approx, 1_000_000).into_iter().rev().find(|r| {
        *r >= BigRational::zero()
            && det(shifted(r, &all)).is_zero()
            && (1u32..(1 << n)).all(|mask| {
                let idx: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
                det(shifted(r, &idx)) >= BigRational::zero()
            })
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ObstructionVerdict {
    pub obstructed: bool,
    pub lambda: f64,
    /// Exact answer to `rho >= 1`.
    pub exact_obstructed: bool,
    /// Weights `1/x` from a Perron vector; `None` marks a class left out.
    pub witness: Option<Vec<Option<f64>>>,
    /// Annular energy of the witness sub-system.
    pub witness_emb: Option<f64>,
    pub not_lattes: bool,
}

/// Decides whether the annular system obstructs: `rho(M) >= 1 - tol`.
pub fn obstruction_check(td: &TransitionData, tol: f64) -> ObstructionVerdict {
    let m = thurston_matrix_f64(td);
    let exact_obstructed = !radius_below_one(&thurston_matrix(td));
    let mut best: Option<(f64, Vec<usize>, Vec<f64>)> = None;
    for b in blocks(&m) {
        let (lam, x) = block_perron(&m, &b, 1e-15);
        if best.as_ref().is_none_or(|(l, _, _)| lam > *l) {
            best = Some((lam, b, x));
        }
    }
    let lambda = best.as_ref().map(|b| b.0).unwrap_or(0.0);
    let obstructed = lambda >= 1.0 - tol;
    let (witness, witness_emb) = match (&best, obstructed) {
        (Some((_, block, x)), true) => {
            let mut w = vec![None; m.len()];
            let mut alpha = vec![1.0; m.len()];
            for (k, &i) in block.iter().enumerate() {
                w[i] = Some(1.0 / x[k]);
                alpha[i] = 1.0 / x[k];
            }
            (Some(w), emb_annular_on(td, &alpha, block))
        }
        _ => (None, None),
    };
    ObstructionVerdict { obstructed, lambda, exact_obstructed, witness, witness_emb, not_lattes: td.not_lattes }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(a: i64, b: i64) -> BigRational {
        BigRational::from_ratio(a, b)
    }

    #[test]
    fn exact_radius_of_small_matrices() {
        let m = vec![vec![q(1, 1)]];
        assert_eq!(exact_radius(&m, 0.9999999), Some(q(1, 1)));
        // rho = 3/2 for [[1, 1/4], [1, 1]]
        let m = vec![vec![q(1, 1), q(1, 4)], vec![q(1, 1), q(1, 1)]];
        assert_eq!(exact_radius(&m, 1.5000000001), Some(q(3, 2)));
        // 1/2 is an eigenvalue but not the radius
        assert_eq!(exact_radius(&m, 0.5), None);
        // irrational radius sqrt(2)
        let m = vec![vec![q(0, 1), q(2, 1)], vec![q(1, 1), q(0, 1)]];
        assert_eq!(exact_radius(&m, 2f64.sqrt()), None);
    }

    fn levy() -> TransitionData {
        TransitionData::new(
            vec!["g".into()],
            2,
            vec![
                Preimage { covers: 0, degree: 1, target: Target::Class(0) },
                Preimage { covers: 0, degree: 1, target: Target::Inessential },
            ],
        )
        .unwrap()
    }

    fn single(k: u32, n: usize) -> TransitionData {
        let pre = (0..n).map(|_| Preimage { covers: 0, degree: k, target: Target::Class(0) }).collect();
        TransitionData::new(vec!["g".into()], k * n as u32, pre).unwrap()
    }

    #[test]
    fn joins() {
        let j = join(&levy(), &[q(1, 1)]).unwrap();
        assert_eq!(j.weights, vec![Some(q(1, 1))]);
        assert_eq!(j.dropped, vec![1]);
        let j = join(&single(2, 2), &[q(1, 1)]).unwrap();
        assert_eq!(j.weights, vec![Some(q(1, 1))]);
    }

    #[test]
    fn annular_energies() {
        for a in [q(1, 3), q(7, 2)] {
            assert_eq!(emb_annular(&levy(), &[a]).unwrap(), Some(q(1, 1)));
        }
        assert_eq!(emb_annular(&single(2, 2), &[q(1, 1)]).unwrap(), Some(q(1, 1)));
        assert_eq!(emb_annular(&single(2, 1), &[q(1, 1)]).unwrap(), Some(q(2, 1)));
    }

    #[test]
    fn matrices() {
        assert_eq!(thurston_matrix(&levy()), vec![vec![q(1, 1)]]);
        assert_eq!(thurston_matrix(&single(2, 2)), vec![vec![q(1, 1)]]);
        assert_eq!(thurston_matrix(&single(2, 1)), vec![vec![q(1, 2)]]);
    }

    #[test]
    fn radii() {
        assert!((spectral_radius(&[vec![1.0]], 1e-12) - 1.0).abs() < 1e-12);
        assert!((spectral_radius(&[vec![0.0, 1.0], vec![1.0, 0.0]], 1e-12) - 1.0).abs() < 1e-12);
        let m = [vec![0.5, 0.25], vec![1.0 / 3.0, 0.2]];
        // dominant root of x^2 - tr x + det
        let (tr, det) = (0.7, 0.5 * 0.2 - 0.25 / 3.0);
        let root = 0.5 * (tr + ((tr * tr) - 4.0 * det as f64).sqrt());
        assert!((spectral_radius(&m, 1e-14) - root).abs() < 1e-12);
        assert_eq!(spectral_radius(&[vec![0.0, 0.0], vec![0.0, 0.0]], 1e-12), 0.0);
        // reducible: triangular blocks
        let m = [vec![0.5, 3.0], vec![0.0, 2.0]];
        assert!((spectral_radius(&m, 1e-14) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn verdicts() {
        let v = obstruction_check(&levy(), 1e-9);
        assert!(v.obstructed && v.exact_obstructed);
        assert_eq!(v.lambda, 1.0);
        assert!(v.witness_emb.unwrap() <= 1.0 + 1e-9);
        let v = obstruction_check(&single(2, 1), 1e-9);
        assert!(!v.obstructed && !v.exact_obstructed);
        assert!((v.lambda - 0.5).abs() < 1e-12);
        let none = TransitionData::new(vec!["g".into()], 2, vec![Preimage { covers: 0, degree: 2, target: Target::Inessential }]).unwrap();
        let v = obstruction_check(&none, 1e-9);
        assert!(!v.obstructed);
        assert_eq!(v.lambda, 0.0);
    }

    #[test]
    fn inconsistent_degrees_rejected() {
        let r = TransitionData::new(vec!["g".into()], 2, vec![Preimage { covers: 0, degree: 1, target: Target::Class(0) }]);
        assert!(r.is_err());
    }
}
