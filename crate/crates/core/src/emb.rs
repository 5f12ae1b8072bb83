//! Embedding energy: the width iteration, brackets, λ-filling checks and
//! asymptotic stretch factors of virtual endomorphisms.
//!
//! One pass of the iteration takes widths `v` on the codomain, builds the
//! metric graph `K` with lengths `alpha2 * v`, finds a harmonic map `g` into
//! `K` homotopic to the input, and pushes the domain widths `|g'|` forward
//! to new codomain widths. `Emb(psi)` for the map `psi` with the routes of
//! `g` is an upper bound for `Emb[phi]` at every pass.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::covers::{iterate_step, IterateResult, VirtualEndomorphism};
use crate::curves::{curve_from_widths, EdgePath, MultiCurve, Step};
use crate::error::{Error, Result};
use crate::graph::{Dir, ElasticGraph, Graph};
use crate::harmonic::{minimize_dirichlet, HarmonicOptions, HarmonicResult};
use crate::maps::{curve_ratio, embedding_energy, fill_profile, normalize, sf_lower_bound, PLGraphMap};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct EmbOptions {
    /// Target spread of the per-edge width ratios.
    pub tol: f64,
    /// Passes per start.
    pub max_iters: usize,
    /// Longest enumerated cycle for the curve lower bound.
    pub max_steps: usize,
    pub seed: u64,
    /// Random restarts after a stall.
    pub restarts: usize,
    /// Passes without improvement that count as a stall.
    pub stall: usize,
    /// Relative floor on codomain widths.
    pub floor: f64,
}

impl Default for EmbOptions {
    fn default() -> Self {
        EmbOptions { tol: 1e-9, max_iters: 400, max_steps: 6, seed: 0, restarts: 2, stall: 50, floor: 1e-9 }
    }
}

/// State after one pass of the width iteration.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbIterationState {
    pub index: usize,
    /// Codomain widths that built `K`.
    pub v: Vec<f64>,
    /// Domain widths `|g'|`.
    pub w: Vec<f64>,
    /// Pushed-forward widths.
    pub v_next: Vec<f64>,
    /// `v_next / v` per codomain edge (`None` on contracted edges).
    pub ratios: Vec<Option<f64>>,
    /// `Emb(psi)` of this pass.
    pub upper: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EmbCertificate<T = f64> {
    pub upper: T,
    pub lower: T,
    /// Representative attaining `upper`, with the original measures.
    pub witness_map: PLGraphMap<T>,
    /// Curve attaining `lower`.
    pub witness_curve: Option<MultiCurve<T>>,
    pub gap: T,
    pub converged: bool,
    pub iterations: usize,
    /// Final codomain widths (max 1).
    pub widths: Vec<f64>,
    /// Final domain widths.
    pub domain_widths: Vec<f64>,
    /// Upper bound after each pass.
    pub history: Vec<f64>,
    /// Passes where the max ratio went up or the min ratio went down.
    pub envelope_violations: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BracketStatus {
    /// `Emb < 1` certified with margin.
    Below,
    /// `Emb >= 1` certified by a curve.
    Above,
    Undecided,
}

impl BracketStatus {
    pub fn name(self) -> &'static str {
        match self {
            BracketStatus::Below => "below",
            BracketStatus::Above => "above",
            BracketStatus::Undecided => "undecided",
        }
    }
}

impl<T: Scalar> EmbCertificate<T> {
    /// Which side of 1 the bracket certifies; `tol` sets the margin below 1.
    pub fn status(&self, tol: f64) -> BracketStatus {
        if self.lower >= T::one() {
            BracketStatus::Above
        } else if self.upper.to_f64() < 1.0 - 10.0 * tol {
            BracketStatus::Below
        } else {
            BracketStatus::Undecided
        }
    }
}

fn harmonic_opts() -> HarmonicOptions {
    HarmonicOptions { tol: 1e-13, max_iters: 20_000, ..HarmonicOptions::default() }
}

/// Runs one pass: `v` must already be normalised and floored.
pub fn emb_pass(m: &PLGraphMap<f64>, start: &PLGraphMap<f64>, v: &[f64], index: usize) -> Result<(EmbIterationState, HarmonicResult)> {
    let ell: Vec<f64> = m.cod_measure.iter().zip(v).map(|(a, x)| a * x).collect();
    let init = start.with_measures(m.dom_measure.clone(), ell)?;
    let g = minimize_dirichlet(&init, &harmonic_opts())?;
    let w = g.tensions.clone();
    let prof = fill_profile(&g.map);
    let v_next: Vec<f64> = (0..v.len()).map(|e| prof.edge_max(e)).collect();
    let ratios: Vec<Option<f64>> = (0..v.len())
        .map(|e| if m.cod_measure[e] > 0.0 { Some(v_next[e] / v[e]) } else { None })
        .collect();
    let psi = g.map.with_measures(m.dom_measure.clone(), m.cod_measure.clone())?;
    let upper = embedding_energy(&psi);
    Ok((EmbIterationState { index, v: v.to_vec(), w, v_next, ratios, upper }, g))
}

fn normalise(v: &[f64], alpha2: &[f64], floor: f64) -> Option<Vec<f64>> {
    let max = v.iter().zip(alpha2).filter(|(_, a)| **a > 0.0).map(|(x, _)| *x).fold(0.0, f64::max);
    if !(max > 0.0 && max.is_finite()) {
        return None;
    }
    Some(v.iter().zip(alpha2).map(|(x, a)| if *a > 0.0 { (x / max).max(floor) } else { 1.0 }).collect())
}

fn spread(ratios: &[Option<f64>], v: &[f64], floor: f64) -> f64 {
    let active: Vec<f64> = ratios
        .iter()
        .zip(v)
        .filter_map(|(r, x)| r.filter(|_| *x > floor * 1e3))
        .collect();
    if active.is_empty() {
        return 0.0;
    }
    active.iter().cloned().fold(f64::MIN, f64::max) - active.iter().cloned().fold(f64::MAX, f64::min)
}

struct Run {
    best_upper: f64,
    best_map: PLGraphMap<f64>,
    v: Vec<f64>,
    w: Vec<f64>,
    converged: bool,
    iterations: usize,
    history: Vec<f64>,
    envelope_violations: usize,
}

fn run_from(m: &PLGraphMap<f64>, v0: Vec<f64>, opts: &EmbOptions) -> Result<Run> {
    let alpha2 = &m.cod_measure;
    let mut v = normalise(&v0, alpha2, opts.floor).ok_or_else(|| Error::Degenerate("all-zero widths".into()))?;
    let mut start = m.clone();
    let mut run = Run {
        best_upper: f64::INFINITY,
        best_map: m.clone(),
        v: v.clone(),
        w: vec![0.0; m.domain.edge_count()],
        converged: false,
        iterations: 0,
        history: Vec::new(),
        envelope_violations: 0,
    };
    let mut last_improvement = 0;
    let mut prev: Option<(f64, f64)> = None;
    for i in 0..opts.max_iters {
        let (state, g) = emb_pass(m, &start, &v, i)?;
        run.iterations = i + 1;
        run.history.push(state.upper);
        if state.upper < run.best_upper * (1.0 - opts.tol) {
            last_improvement = i;
        }
        if state.upper < run.best_upper {
            run.best_upper = state.upper;
            run.best_map = g.map.with_measures(m.dom_measure.clone(), m.cod_measure.clone())?;
            run.v = v.clone();
            run.w = state.w.clone();
        }
        let rs: Vec<f64> = state.ratios.iter().flatten().cloned().collect();
        let (hi, lo) = (rs.iter().cloned().fold(f64::MIN, f64::max), rs.iter().cloned().fold(f64::MAX, f64::min));
        if let Some((phi, plo)) = prev {
            if hi > phi * (1.0 + 1e-9) || lo < plo * (1.0 - 1e-9) {
                run.envelope_violations += 1;
            }
        }
        prev = Some((hi, lo));
        let next = match normalise(&state.v_next, alpha2, opts.floor) {
            Some(n) => n,
            // Nothing maps anywhere: the constant map has energy zero.
            None => {
                run.converged = true;
                break;
            }
        };
        let moved = next.iter().zip(&v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let settled = run.history.len() >= 2 && {
            let k = run.history.len();
            (run.history[k - 1] - run.history[k - 2]).abs() <= opts.tol * run.history[k - 1].max(1e-300)
        };
        if spread(&state.ratios, &v, opts.floor) < opts.tol || (settled && moved < opts.tol) {
            run.converged = g.converged;
            break;
        }
        if i - last_improvement >= opts.stall {
            break;
        }
        v = next;
        start = g.map;
    }
    Ok(run)
}

/// Runs the width iteration from `v0` (uniform when `None`) with random
/// restarts on stalls, and bounds `Emb[m]` from both sides.
pub fn estimate_emb(m: &PLGraphMap<f64>, v0: Option<&[f64]>, opts: &EmbOptions) -> Result<EmbCertificate<f64>> {
    m.validate()?;
    m.check_contracted()?;
    let ce = m.codomain.edge_count();
    let v0 = match v0 {
        Some(v) => {
            if v.len() != ce || v.iter().any(|x| !(*x > 0.0)) {
                return Err(Error::invalid("initial widths must be positive, one per codomain edge"));
            }
            v.to_vec()
        }
        None => vec![1.0; ce],
    };
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut best = run_from(m, v0, opts)?;
    let mut total_iters = best.iterations;
    let mut restarts = 0;
    while !best.converged && restarts < opts.restarts {
        restarts += 1;
        let v: Vec<f64> = (0..ce).map(|_| rng.gen_range(0.25..1.0)).collect();
        let r = run_from(m, v, opts)?;
        total_iters += r.iterations;
        if r.best_upper < best.best_upper || (r.converged && r.best_upper <= best.best_upper * (1.0 + opts.tol)) {
            let mut history = std::mem::take(&mut best.history);
            history.extend(&r.history);
            best = Run { history, ..r };
        } else {
            best.history.extend(&r.history);
        }
    }
    // The input map itself is a representative too.
    let upper_input = embedding_energy(m);
    if upper_input < best.best_upper {
        best.best_upper = upper_input;
        best.best_map = m.clone();
    }
    let (lower, witness_curve) = lower_bound(m, &best.w, opts.max_steps)?;
    let lower = lower.min(best.best_upper);
    Ok(EmbCertificate {
        upper: best.best_upper,
        lower,
        witness_map: best.best_map,
        witness_curve,
        gap: best.best_upper - lower,
        converged: best.converged,
        iterations: total_iters,
        widths: best.v,
        domain_widths: best.w,
        history: best.history,
        envelope_violations: best.envelope_violations,
    })
}

/// Best curve ratio from enumerated cycles and from curves built on the
/// domain widths.
pub fn lower_bound(m: &PLGraphMap<f64>, w: &[f64], max_steps: usize) -> Result<(f64, Option<MultiCurve<f64>>)> {
    let dom = ElasticGraph { graph: m.domain.clone(), alpha: m.dom_measure.clone() };
    let cod = ElasticGraph { graph: m.codomain.clone(), alpha: m.cod_measure.clone() };
    let (mut best, cyc) = if m.domain.edge_count() <= 64 { sf_lower_bound(m, max_steps)? } else { (0.0, None) };
    let mut witness = cyc.map(|p| single(&m.domain, p));
    for frac in [0.999, 0.99, 0.9, 0.5] {
        for p in tight_cycles(&m.domain, w, frac, 400) {
            let c = single(&m.domain, p);
            if let Some(r) = curve_ratio(m, &dom, &cod, &c)? {
                if r > best {
                    best = r;
                    witness = Some(c);
                }
            }
        }
    }
    for res in [1u32, 2, 3, 4, 6, 8, 12, 16, 32, 64] {
        if let Some(c) = curve_from_widths::<f64>(&m.domain, w, res) {
            if let Some(r) = curve_ratio(m, &dom, &cod, &c)? {
                if r > best {
                    best = r;
                    witness = Some(c);
                }
            }
        }
    }
    Ok((best, witness))
}

/// Fundamental cycles of the subgraph of edges with `w >= frac * max(w)`.
/// The extremal curves of a harmonic map run along its most stretched edges.
fn tight_cycles(g: &Graph, w: &[f64], frac: f64, limit: usize) -> Vec<EdgePath> {
    let max = w.iter().cloned().fold(0.0, f64::max);
    if !(max > 0.0) {
        return Vec::new();
    }
    let keep: Vec<bool> = w.iter().map(|x| *x >= frac * max).collect();
    let n = g.vertex_count();
    // parent step leads from the parent to the vertex
    let mut parent: Vec<Option<Step>> = vec![None; n];
    let mut depth = vec![usize::MAX; n];
    let mut tree = vec![false; g.edge_count()];
    for root in 0..n {
        if depth[root] != usize::MAX {
            continue;
        }
        depth[root] = 0;
        let mut queue = std::collections::VecDeque::from([root]);
        while let Some(v) = queue.pop_front() {
            for h in g.half_edges_at(v) {
                let u = g.vertex_of(h.opposite());
                if keep[h.edge] && depth[u] == usize::MAX {
                    depth[u] = depth[v] + 1;
                    parent[u] = Some(Step::new(h.edge, h.outgoing()));
                    tree[h.edge] = true;
                    queue.push_back(u);
                }
            }
        }
    }
    let mut out = Vec::new();
    for e in 0..g.edge_count() {
        if !keep[e] || tree[e] || out.len() >= limit {
            continue;
        }
        // e from a to b, then the tree path from b back to a
        let (mut a, mut b) = (g.tail(e), g.head(e));
        let mut up_from_b = Vec::new();
        let mut down_to_a = Vec::new();
        while a != b {
            if depth[b] >= depth[a] {
                let s = parent[b].expect("non-root");
                up_from_b.push(Step::new(s.edge, s.dir.reverse()));
                b = g.step_source(s.edge, s.dir);
            } else {
                let s = parent[a].expect("non-root");
                down_to_a.push(s);
                a = g.step_source(s.edge, s.dir);
            }
        }
        let mut steps = vec![Step::new(e, Dir::Fwd)];
        steps.extend(up_from_b);
        steps.extend(down_to_a.into_iter().rev());
        out.push(EdgePath::new(steps));
    }
    out
}

fn single<T: Scalar>(g: &Arc<crate::graph::Graph>, p: EdgePath) -> MultiCurve<T> {
    MultiCurve { graph: g.clone(), components: vec![crate::curves::Component { weight: T::one(), path: p }] }
}

/// Bracket for the given map as it stands: `Emb(m)` above, enumerated curves
/// below. Works in any scalar type, so exact in rational mode.
pub fn bracket_exact<T: Scalar>(m: &PLGraphMap<T>, max_steps: usize) -> Result<EmbCertificate<T>> {
    m.validate()?;
    m.check_contracted()?;
    let upper = embedding_energy(m);
    let (lower, cyc) = sf_lower_bound(m, max_steps)?;
    Ok(EmbCertificate {
        gap: upper.clone() - lower.clone(),
        upper,
        lower,
        witness_map: m.clone(),
        witness_curve: cyc.map(|p| single(&m.domain, p)),
        converged: true,
        iterations: 0,
        widths: Vec::new(),
        domain_widths: Vec::new(),
        history: Vec::new(),
        envelope_violations: 0,
    })
}

/// Float bracket: the width iteration above, curves below.
pub fn bracket(m: &PLGraphMap<f64>, opts: &EmbOptions) -> Result<EmbCertificate<f64>> {
    estimate_emb(m, None, opts)
}

#[derive(Clone, Debug, PartialEq)]
pub struct LambdaFillingReport {
    pub lambda: f64,
    /// Domain edges in `T1`.
    pub t1: Vec<usize>,
    /// Codomain edges in `T2`.
    pub t2: Vec<usize>,
    /// `max |slope - 1|` in the length metrics.
    pub length_residual: f64,
    /// `max |ratio - lambda|` over `T2`.
    pub width_residual: f64,
    /// Largest width ratio off `T2`.
    pub off_ratio: f64,
    /// `phi(T1) = T2` and `phi^-1(T2) = T1`.
    pub preimage_ok: bool,
    pub backtracking: Vec<usize>,
    pub pass: bool,
}

/// Checks length preservation and width scaling for a map between strip
/// graphs, given as length and width vectors on each side.
pub fn lambda_filling_check(
    m: &PLGraphMap<f64>,
    dom: (&[f64], &[f64]),
    cod: (&[f64], &[f64]),
    tol: f64,
) -> Result<LambdaFillingReport> {
    let (ell1, w1) = dom;
    let (ell2, w2) = cod;
    if ell1.len() != m.domain.edge_count() || w1.len() != ell1.len() || ell2.len() != m.codomain.edge_count() || w2.len() != ell2.len() {
        return Err(Error::mismatch("strip data must match the graphs"));
    }
    let lm = m.with_measures(ell1.to_vec(), ell2.to_vec())?;
    let nm = normalize(&lm);
    let mut length_residual: f64 = 0.0;
    let mut sums: Vec<Vec<f64>> = nm.breakpoints.iter().map(|b| vec![0.0; b.len() - 1]).collect();
    let mut hits: Vec<Vec<(usize, usize)>> = vec![Vec::new(); ell1.len()];
    for (e, ps) in nm.pieces.iter().enumerate() {
        for p in ps {
            let Some(k) = p.cell else { continue };
            if let Some(s) = lm.slope(e, &p.segment) {
                length_residual = length_residual.max((s - 1.0).abs());
                sums[p.segment.edge][k] += w1[e];
                hits[e].push((p.segment.edge, k));
            }
        }
    }
    let mut lambda: f64 = 0.0;
    let mut ratio: Vec<Vec<Option<f64>>> = Vec::new();
    for (ce, cells) in sums.iter().enumerate() {
        let bp = &nm.breakpoints[ce];
        let row: Vec<Option<f64>> = cells
            .iter()
            .enumerate()
            .map(|(k, s)| {
                if ell2[ce] > 0.0 && w2[ce] > 0.0 && bp[k + 1] > bp[k] {
                    Some(s / w2[ce])
                } else {
                    None
                }
            })
            .collect();
        for r in row.iter().flatten() {
            lambda = lambda.max(*r);
        }
        ratio.push(row);
    }
    let at = |r: f64| (r - lambda).abs() <= tol * lambda.max(1.0);
    let mut t2 = Vec::new();
    let mut width_residual: f64 = 0.0;
    let mut off_ratio: f64 = 0.0;
    let mut in_t2 = vec![false; ell2.len()];
    for (ce, row) in ratio.iter().enumerate() {
        let vals: Vec<f64> = row.iter().flatten().cloned().collect();
        if !vals.is_empty() && vals.iter().any(|r| at(*r)) {
            in_t2[ce] = true;
            t2.push(ce);
            for r in &vals {
                width_residual = width_residual.max((r - lambda).abs());
            }
        } else {
            for r in &vals {
                off_ratio = off_ratio.max(*r);
            }
        }
    }
    let t1: Vec<usize> = (0..ell1.len()).filter(|e| hits[*e].iter().any(|(c, _)| in_t2[*c])).collect();
    let preimage_ok = t1.iter().all(|e| hits[*e].iter().all(|(c, _)| in_t2[*c]));
    let backtracking = m.backtracking_edges();
    let pass = length_residual <= tol
        && width_residual <= tol * lambda.max(1.0)
        && preimage_ok
        && backtracking.is_empty()
        && !t2.is_empty()
        && off_ratio < lambda;
    Ok(LambdaFillingReport { lambda, t1, t2, length_residual, width_residual, off_ratio, preimage_ok, backtracking, pass })
}

/// λ-filling check on the fixed point reached by [`estimate_emb`]: strips
/// `(alpha1 w, w)` on the domain and `(alpha2 v, v)` on the codomain.
pub fn lambda_filling_of(m: &PLGraphMap<f64>, cert: &EmbCertificate<f64>, tol: f64) -> Result<LambdaFillingReport> {
    let w = &cert.domain_widths;
    let v = &cert.widths;
    let ell1: Vec<f64> = m.dom_measure.iter().zip(w).map(|(a, x)| a * x).collect();
    let ell2: Vec<f64> = m.cod_measure.iter().zip(v).map(|(a, x)| a * x).collect();
    lambda_filling_check(&cert.witness_map, (&ell1, w), (&ell2, v), tol)
}

#[derive(Clone, Debug, PartialEq)]
pub struct AsfRow {
    pub n: usize,
    pub lower: f64,
    pub upper: f64,
    /// `upper^(1/n)`.
    pub root: f64,
    pub converged: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AsfEstimate {
    pub rows: Vec<AsfRow>,
    /// `(n, k)` with `lower(n) > upper(k) * upper(n - k) + tol`.
    pub submultiplicative_violations: Vec<(usize, usize)>,
    /// Set when the resource guard stopped the sequence early.
    pub stopped: Option<String>,
}

impl AsfEstimate {
    /// CSV with columns `n,params,lower,upper,root`.
    pub fn csv(&self, params: &str) -> String {
        let mut out = String::from("n,params,lower,upper,root\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{:.16e},{:.16e},{:.16e}\n", r.n, params, r.lower, r.upper, r.root));
        }
        out
    }
}

/// Brackets `Emb[phi_n]` for `n = 1..=n_max` and records roots `upper^(1/n)`.
pub fn asf_estimate(ve: &VirtualEndomorphism<f64>, n_max: usize, opts: &EmbOptions) -> Result<AsfEstimate> {
    asf_with(ve, n_max, opts, |_| {})
}

/// As [`asf_estimate`], reporting each row as it is computed.
pub fn asf_with(
    ve: &VirtualEndomorphism<f64>,
    n_max: usize,
    opts: &EmbOptions,
    mut progress: impl FnMut(&AsfRow),
) -> Result<AsfEstimate> {
    let mut rows: Vec<AsfRow> = Vec::new();
    let mut stopped = None;
    let mut cur: Option<IterateResult<f64>> = None;
    for n in 1..=n_max {
        let next = match &cur {
            None => crate::covers::iterate(ve, 1),
            Some(c) => guarded_step(ve, c),
        };
        let it = match next {
            Ok(it) => it,
            Err(e @ Error::ResourceLimit { .. }) => {
                stopped = Some(e.to_string());
                break;
            }
            Err(e) => return Err(e),
        };
        let cert = bracket(&it.map, opts)?;
        let row = AsfRow { n, lower: cert.lower, upper: cert.upper, root: cert.upper.powf(1.0 / n as f64), converged: cert.converged };
        progress(&row);
        rows.push(row);
        cur = Some(it);
    }
    let mut violations = Vec::new();
    for n in 2..=rows.len() {
        for k in 1..n {
            if rows[n - 1].lower > rows[k - 1].upper * rows[n - k - 1].upper + opts.tol.max(1e-9) {
                violations.push((n, k));
            }
        }
    }
    Ok(AsfEstimate { rows, submultiplicative_violations: violations, stopped })
}

fn guarded_step(ve: &VirtualEndomorphism<f64>, cur: &IterateResult<f64>) -> Result<IterateResult<f64>> {
    let cells = (cur.graph.edge_count() as u128).saturating_mul(ve.cover.degree as u128);
    let limit = crate::covers::resource_limit();
    if cells > limit {
        return Err(Error::ResourceLimit { cells, limit });
    }
    iterate_step(ve, cur)
}

#[derive(Clone, Debug, PartialEq)]
pub enum RationalVerdict {
    /// `Emb[phi_n] < 1` with the given certificate.
    Certified { n: usize, certificate: Box<EmbCertificate<f64>> },
    /// A curve with ratio at least 1 for `phi_n`; not a global negative answer.
    ObstructedAt { n: usize, certificate: Box<EmbCertificate<f64>> },
    Undecided { best_upper: f64, reason: String },
}

/// Searches `n = 1..=n_max` for an iterate with a certified `Emb < 1`.
pub fn certify_rational(ve: &VirtualEndomorphism<f64>, n_max: usize, opts: &EmbOptions) -> Result<RationalVerdict> {
    let mut best_upper = f64::INFINITY;
    let mut cur: Option<IterateResult<f64>> = None;
    for n in 1..=n_max {
        let next = match &cur {
            None => crate::covers::iterate(ve, 1),
            Some(c) => guarded_step(ve, c),
        };
        let it = match next {
            Ok(it) => it,
            Err(e @ Error::ResourceLimit { .. }) => return Ok(RationalVerdict::Undecided { best_upper, reason: e.to_string() }),
            Err(e) => return Err(e),
        };
        let cert = bracket(&it.map, opts)?;
        best_upper = best_upper.min(cert.upper);
        match cert.status(opts.tol) {
            BracketStatus::Below => return Ok(RationalVerdict::Certified { n, certificate: Box::new(cert) }),
            BracketStatus::Above => return Ok(RationalVerdict::ObstructedAt { n, certificate: Box::new(cert) }),
            BracketStatus::Undecided => {}
        }
        cur = Some(it);
    }
    Ok(RationalVerdict::Undecided { best_upper, reason: format!("no certificate up to n = {n_max}") })
}
