use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use num_rational::BigRational;
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use elastica::covers::{iterate, validate_cover, VirtualEndomorphism};
use elastica::curves::{el_witness, extremal_length};
use elastica::emb::{asf_with, bracket, bracket_exact, certify_rational, AsfRow, EmbCertificate, EmbOptions, RationalVerdict};
use elastica::graph::{euler_characteristic, ribbon_faces, ribbon_genus, validate_graph, ElasticGraph, Graph};
use elastica::harmonic::{is_harmonic_fixed, minimize_dirichlet, HarmonicOptions};
use elastica::io::{
    cover_parts, curve_doc, doc_value, load_curve, load_graph, load_map_bundle, load_transition, load_ve, map_bundle_doc, map_doc,
    map_from_bundle, parse_doc, parse_graph, parse_transition, parse_ve, read_json, ve_doc, CodomainMeasure, CoverDoc, GraphDoc,
    MapBundleDoc, TransitionDoc, VeDoc,
};
use elastica::maps::{dirichlet_energy, embedding_energy, lipschitz, PLGraphMap};
use elastica::obstruction::{emb_annular, exact_radius, obstruction_check, thurston_matrix};
use elastica::scalar::format_rational;
use elastica::{Error, Result, Scalar};

use crate::{Cli, Command, Outcome};

/// Process exit code for a library error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io(_) => 3,
        Error::ResourceLimit { .. } => 5,
        _ => 2,
    }
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::Structural { .. } => "structural",
        Error::InvalidArgument(_) => "invalid_argument",
        Error::Mismatch(_) => "mismatch",
        Error::Discontinuous { .. } => "discontinuous",
        Error::ResourceLimit { .. } => "resource_limit",
        Error::Singular(_) => "singular",
        Error::Degenerate(_) => "degenerate",
        Error::Parse(_) => "parse",
        Error::Io(_) => "io",
    }
}

fn error_value(e: &Error) -> Value {
    let ids = match e {
        Error::Structural { ids, .. } => ids.clone(),
        Error::Discontinuous { edge, .. } => vec![edge.clone()],
        _ => Vec::new(),
    };
    json!({ "kind": error_kind(e), "message": e.to_string(), "ids": ids })
}

fn sha256(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    Ok(format!("{:x}", Sha256::digest(&bytes)))
}

struct Job<'a> {
    cli: &'a Cli,
    inputs: Vec<Value>,
    extra: Map<String, Value>,
}

impl<'a> Job<'a> {
    fn new(cli: &'a Cli) -> Self {
        Job { cli, inputs: Vec::new(), extra: Map::new() }
    }

    fn input(&mut self, path: &Path) -> Result<PathBuf> {
        let hash = sha256(path)?;
        self.inputs.push(json!({ "path": path.display().to_string(), "sha256": hash }));
        Ok(path.to_path_buf())
    }

    fn options(&self) -> Value {
        let mut o = match serde_json::to_value(&self.cli.opts).expect("options serialize") {
            Value::Object(m) => m,
            _ => unreachable!(),
        };
        o.extend(self.extra.clone());
        Value::Object(o)
    }

    fn document(&self, name: &str, result: Value) -> String {
        let doc = json!({ "command": name, "inputs": self.inputs, "options": self.options(), "result": result });
        serde_json::to_string_pretty(&doc).expect("json") + "\n"
    }

    fn emb_options(&self) -> EmbOptions {
        let o = &self.cli.opts;
        EmbOptions { tol: o.tol, max_iters: o.max_iters, max_steps: o.max_steps, seed: o.seed, ..EmbOptions::default() }
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Validate { .. } => "validate",
        Command::El { .. } => "el",
        Command::Dir { .. } => "dir",
        Command::Harmonic { .. } => "harmonic",
        Command::Emb { .. } => "emb",
        Command::Iterate { .. } => "iterate",
        Command::Asf { .. } => "asf",
        Command::Certify { .. } => "certify",
        Command::Obstruction { .. } => "obstruction",
        Command::RunAllFixtures { .. } => "run-all-fixtures",
    }
}

pub fn run(cli: &Cli) -> Outcome {
    let name = command_name(&cli.command);
    let mut job = Job::new(cli);
    let res = match &cli.command {
        Command::Validate { files } => validate(&mut job, files),
        Command::El { graph, curve } => el(&mut job, graph, curve),
        Command::Dir { map } => dir(&mut job, map),
        Command::Harmonic { map, fix } => harmonic(&mut job, map, fix.as_deref()),
        Command::Emb { input } => emb(&mut job, input),
        Command::Iterate { ve, n } => iterate_cmd(&mut job, ve, *n),
        Command::Asf { ve, params } => return asf(&mut job, ve, params),
        Command::Certify { ve } => certify(&mut job, ve),
        Command::Obstruction { transition } => obstruction(&mut job, transition),
        Command::RunAllFixtures { dir } => return crate::fixtures::run_all(dir),
    };
    match res {
        Ok((code, result)) => Outcome { code, text: job.document(name, result) },
        Err(e) => Outcome { code: exit_code(&e), text: job.document(name, json!({ "error": error_value(&e) })) },
    }
}

type Res = Result<(i32, Value)>;

fn per_edge<T: Scalar>(g: &Graph, v: &[T]) -> Value {
    Value::Object((0..g.edge_count()).map(|e| (g.edge_name(e).to_string(), v[e].to_json())).collect())
}

// ---------------------------------------------------------------- validate

fn validate_value(v: Value, base: Option<&Path>) -> (String, Result<Value>) {
    let has = |k: &str| v.get(k).is_some();
    if has("vertex_map") && has("map") {
        let r = parse_doc::<VeDoc>(v).and_then(|d| {
            cover_parts::<f64>(&d.cover, base)?;
            let ve = parse_ve::<f64>(&d, base)?;
            ve.map.check_contracted()?;
            Ok(json!({ "degree": ve.cover.degree, "backtracking_edges": ve.map.backtracking_edges().len() }))
        });
        ("virtual_endomorphism".into(), r)
    } else if has("vertex_map") {
        let r = parse_doc::<CoverDoc>(v).and_then(|d| {
            let (b, t, vm, em) = cover_parts::<f64>(&d, base)?;
            let c = elastica::covers::CoveringMap { total: t.graph, base: b.graph, vertex_map: vm, edge_map: em, degree: 0 };
            let rep = validate_cover(&c);
            if rep.valid {
                Ok(json!({ "degree": rep.degree }))
            } else {
                Err(Error::structural("invalid covering map", rep.violations))
            }
        });
        ("cover".into(), r)
    } else if has("domain") {
        let r = parse_doc::<MapBundleDoc>(v).and_then(|d| {
            let m = map_from_bundle::<f64>(&d, base, CodomainMeasure::Either)?;
            m.validate()?;
            Ok(json!({ "backtracking_edges": m.backtracking_edges().len() }))
        });
        ("map".into(), r)
    } else if has("classes") {
        let r = parse_doc::<TransitionDoc>(v).and_then(|d| {
            let (td, _) = parse_transition::<f64>(&d)?;
            Ok(json!({ "classes": td.size() }))
        });
        ("transition".into(), r)
    } else if has("vertices") {
        let r = parse_doc::<GraphDoc>(v).and_then(|d| {
            let lg = parse_graph::<f64>(&d)?;
            let g = &lg.graph;
            let rep = validate_graph(g);
            if !rep.valid {
                return Err(Error::structural("invalid graph", rep.problems));
            }
            let mut out = json!({ "vertices": g.vertex_count(), "edges": g.edge_count(), "euler_characteristic": euler_characteristic(g) });
            if let Some(r) = &lg.ribbon {
                out["genus"] = json!(ribbon_genus(g, r)?);
                out["faces"] = json!(ribbon_faces(g, r)?.len());
            }
            Ok(out)
        });
        ("graph".into(), r)
    } else {
        ("unknown".into(), Err(Error::Parse("unrecognised document".into())))
    }
}

fn validate(job: &mut Job, files: &[PathBuf]) -> Res {
    let mut reports = Vec::new();
    let mut all_valid = true;
    for f in files {
        job.input(f)?;
        let v = read_json(f)?;
        let (kind, r) = validate_value(v, f.parent());
        let rep = match r {
            Ok(details) => json!({ "path": f.display().to_string(), "kind": kind, "valid": true, "details": details, "errors": [] }),
            Err(e @ Error::Io(_)) => return Err(e),
            Err(e) => {
                all_valid = false;
                json!({ "path": f.display().to_string(), "kind": kind, "valid": false, "errors": [error_value(&e)] })
            }
        };
        reports.push(rep);
    }
    Ok((if all_valid { 0 } else { 2 }, json!({ "valid": all_valid, "files": reports })))
}

// ---------------------------------------------------------------- el, dir, harmonic

fn el_typed<T: Scalar>(graph: &Path, curve: &Path) -> Result<Value> {
    let lg = load_graph::<T>(graph)?;
    let g = ElasticGraph::new(lg.graph.clone(), lg.alpha()?)?;
    let c = load_curve::<T>(curve, &lg.graph)?;
    let el = extremal_length(&c, &g)?;
    let mut out = json!({ "el": el.to_json(), "counts": per_edge(&lg.graph, &c.counts()) });
    if !c.is_empty() {
        let w = el_witness(&c, &g)?;
        out["witness"] = json!({ "rho": per_edge(&lg.graph, &w.rho), "ratio": w.ratio.to_json() });
    }
    Ok(out)
}

fn el(job: &mut Job, graph: &Path, curve: &Path) -> Res {
    job.input(graph)?;
    job.input(curve)?;
    let r = if job.cli.opts.rational { el_typed::<BigRational>(graph, curve)? } else { el_typed::<f64>(graph, curve)? };
    Ok((0, r))
}

fn dir_typed<T: Scalar>(path: &Path) -> Result<Value> {
    let m = load_map_bundle::<T>(path, CodomainMeasure::Either)?;
    m.validate()?;
    Ok(json!({ "dirichlet": dirichlet_energy(&m).to_json(), "lipschitz": lipschitz(&m).to_json() }))
}

fn dir(job: &mut Job, map: &Path) -> Res {
    job.input(map)?;
    let r = if job.cli.opts.rational { dir_typed::<BigRational>(map)? } else { dir_typed::<f64>(map)? };
    Ok((0, r))
}

fn harmonic(job: &mut Job, path: &Path, fix: Option<&str>) -> Res {
    job.input(path)?;
    job.extra.insert("fix".into(), json!(fix));
    let m = load_map_bundle::<f64>(path, CodomainMeasure::Either)?;
    let mut fixed = Vec::new();
    for name in fix.unwrap_or("").split(',').map(str::trim).filter(|s| !s.is_empty()) {
        fixed.push(m.domain.vertex_id(name).ok_or_else(|| Error::structural("unknown vertex to fix", [name.to_string()]))?);
    }
    let opts = HarmonicOptions { tol: job.cli.opts.tol, fixed: fixed.clone(), ..HarmonicOptions::default() };
    let h = minimize_dirichlet(&m, &opts)?;
    let rep = is_harmonic_fixed(&h.map, 1e-6, &fixed);
    let checks = [
        ("piecewise_linear", &rep.piecewise_linear),
        ("no_backtracking", &rep.no_backtracking),
        ("constant_slope", &rep.constant_slope),
        ("edge_balance", &rep.edge_balance),
        ("vertex_balance", &rep.vertex_balance),
    ];
    let report: Map<String, Value> =
        checks.iter().map(|(k, c)| (k.to_string(), json!({ "pass": c.pass, "residual": c.residual, "worst": c.worst }))).collect();
    Ok((
        0,
        json!({
            "energy": h.energy,
            "tensions": per_edge(&m.domain, &h.tensions),
            "fill": per_edge(&m.codomain, &h.fill_per_codomain_edge),
            "converged": h.converged,
            "iterations": h.iterations,
            "harmonic": rep.pass,
            "checks": report,
            "map": doc_value(&map_doc(&h.map)),
        }),
    ))
}

// ---------------------------------------------------------------- emb, iterate, asf, certify

fn load_emb_input<T: Scalar>(path: &Path) -> Result<PLGraphMap<T>> {
    let v = read_json(path)?;
    if v.get("vertex_map").is_some() {
        Ok(load_ve::<T>(path)?.map)
    } else {
        load_map_bundle::<T>(path, CodomainMeasure::Alpha)
    }
}

fn cert_value<T: Scalar>(c: &EmbCertificate<T>, tol: f64) -> Value {
    let m = &c.witness_map;
    let mut out = json!({
        "lower": c.lower.to_json(),
        "upper": c.upper.to_json(),
        "gap": c.gap.to_json(),
        "status": c.status(tol).name(),
        "converged": c.converged,
        "iterations": c.iterations,
        "witness_curve": c.witness_curve.as_ref().map(|w| doc_value(&curve_doc(w))),
    });
    if !c.widths.is_empty() {
        out["widths"] = per_edge(&m.codomain, &c.widths);
        out["domain_widths"] = per_edge(&m.domain, &c.domain_widths);
        out["envelope_violations"] = json!(c.envelope_violations);
    }
    out
}

fn emb(job: &mut Job, path: &Path) -> Res {
    job.input(path)?;
    let tol = job.cli.opts.tol;
    if job.cli.opts.rational {
        let m = load_emb_input::<BigRational>(path)?;
        let c = bracket_exact(&m, job.cli.opts.max_steps)?;
        Ok((0, cert_value(&c, tol)))
    } else {
        let m = load_emb_input::<f64>(path)?;
        let c = bracket(&m, &job.emb_options())?;
        Ok((0, cert_value(&c, tol)))
    }
}

fn iterate_cmd(job: &mut Job, path: &Path, n: usize) -> Res {
    job.input(path)?;
    job.extra.insert("n".into(), json!(n));
    let ve = load_ve::<f64>(path)?;
    let it = iterate(&ve, n)?;
    Ok((
        0,
        json!({
            "n": n,
            "degree": it.cover.degree,
            "vertices": it.graph.vertex_count(),
            "edges": it.graph.edge_count(),
            "euler_characteristic": euler_characteristic(&it.graph),
            "base_euler_characteristic": euler_characteristic(ve.base()),
            "embedding_energy": embedding_energy(&it.map),
            "ve": doc_value(&ve_doc(&it.as_endomorphism())),
        }),
    ))
}

/// Parses `edge=value;edge=value` into base weights, starting from `alpha`.
/// Returns the weights and the canonical text in base edge order.
fn parse_params(g: &Graph, alpha: &[f64], text: &str) -> Result<(Vec<f64>, String)> {
    let mut a = alpha.to_vec();
    let mut given: BTreeMap<usize, String> = BTreeMap::new();
    for part in text.split([';', ',']).map(str::trim).filter(|s| !s.is_empty()) {
        let (k, v) = part.split_once('=').ok_or_else(|| Error::invalid(format!("parameter {part} is not edge=value")))?;
        let e = g.edge_id(k.trim()).ok_or_else(|| Error::structural("unknown edge in parameters", [k.trim().to_string()]))?;
        let x = elastica::scalar::scalar_from_json::<f64>(&Value::String(v.trim().to_string()))
            .ok_or_else(|| Error::invalid(format!("bad value in {part}")))?;
        if !(x >= 0.0 && x.is_finite()) {
            return Err(Error::invalid(format!("weight in {part} must be finite and nonnegative")));
        }
        a[e] = x;
        given.insert(e, v.trim().to_string());
    }
    let canon = given.iter().map(|(e, v)| format!("{}={v}", g.edge_name(*e))).collect::<Vec<_>>().join(";");
    Ok((a, canon))
}

fn asf(job: &mut Job, path: &Path, params: &[String]) -> Outcome {
    let header = |job: &Job| -> String {
        let mut h = String::from("# elastica asf\n");
        for i in &job.inputs {
            h.push_str(&format!("# input {} sha256={}\n", i["path"].as_str().unwrap_or(""), i["sha256"].as_str().unwrap_or("")));
        }
        h.push_str(&format!("# options {}\n", serde_json::to_string(&job.options()).expect("json")));
        h
    };
    let fail = |job: &Job, e: Error| Outcome { code: exit_code(&e), text: format!("{}# error {}\n", header(job), e) };
    if let Err(e) = job.input(path) {
        return fail(job, e);
    }
    job.extra.insert("params".into(), json!(params));
    let ve = match load_ve::<f64>(path) {
        Ok(v) => v,
        Err(e) => return fail(job, e),
    };
    let mut sets = Vec::new();
    let texts: Vec<String> = if params.is_empty() { vec![String::new()] } else { params.to_vec() };
    for t in &texts {
        match parse_params(ve.base(), ve.alpha(), t).and_then(|(a, c)| Ok((ve.with_alpha(a)?, c))) {
            Ok(x) => sets.push(x),
            Err(e) => return fail(job, e),
        }
    }
    let opts = job.emb_options();
    let n_max = job.cli.opts.n_max;
    let results = sweep(&sets, job.cli.opts.jobs, |s| asf_with(&s.0, n_max, &opts, |_: &AsfRow| {}));
    let mut text = header(job);
    text.push_str("n,params,lower,upper,root\n");
    let mut code = 0;
    for ((_, canon), r) in sets.iter().zip(results) {
        match r {
            Ok(est) => {
                for row in &est.rows {
                    text.push_str(&format!("{},{},{:.16e},{:.16e},{:.16e}\n", row.n, canon, row.lower, row.upper, row.root));
                }
                if let Some(s) = &est.stopped {
                    text.push_str(&format!("# stopped [{canon}]: {s}\n"));
                    code = code.max(5);
                }
                for (n, k) in &est.submultiplicative_violations {
                    text.push_str(&format!("# submultiplicativity violated [{canon}]: n={n} k={k}\n"));
                }
            }
            Err(e) => {
                text.push_str(&format!("# error [{canon}]: {e}\n"));
                code = code.max(exit_code(&e));
            }
        }
    }
    Outcome { code, text }
}

/// Runs `f` over `items` on up to `jobs` threads; results keep input order.
fn sweep<I: Sync, R: Send>(items: &[I], jobs: usize, f: impl Fn(&I) -> R + Sync) -> Vec<R> {
    let jobs = jobs.clamp(1, items.len().max(1));
    let next = std::sync::atomic::AtomicUsize::new(0);
    let slots: Vec<std::sync::Mutex<Option<R>>> = items.iter().map(|_| std::sync::Mutex::new(None)).collect();
    std::thread::scope(|s| {
        for _ in 0..jobs {
            s.spawn(|| loop {
                let i = next.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
                if i >= items.len() {
                    break;
                }
                let r = f(&items[i]);
                *slots[i].lock().expect("slot") = Some(r);
            });
        }
    });
    slots.into_iter().map(|m| m.into_inner().expect("slot").expect("filled")).collect()
}

fn certify(job: &mut Job, path: &Path) -> Res {
    job.input(path)?;
    let ve: VirtualEndomorphism<f64> = load_ve(path)?;
    let opts = job.emb_options();
    let tol = opts.tol;
    let metric = |c: &EmbCertificate<f64>| {
        json!({ "alpha": per_edge(ve.base(), ve.alpha()), "widths": per_edge(ve.base(), &c.widths) })
    };
    Ok(match certify_rational(&ve, job.cli.opts.n_max, &opts)? {
        RationalVerdict::Certified { n, certificate: c } => (
            0,
            json!({
                "verdict": "certified", "n": n, "upper": c.upper, "lower": c.lower,
                "root": c.upper.powf(1.0 / n as f64),
                "witness_metric": metric(&c),
                "witness_map": doc_value(&map_bundle_doc(&c.witness_map)),
            }),
        ),
        RationalVerdict::ObstructedAt { n, certificate: c } => (
            4,
            json!({
                "verdict": "obstructed_at", "n": n, "upper": c.upper, "lower": c.lower,
                "witness_curve": c.witness_curve.as_ref().map(|w| doc_value(&curve_doc(w))),
                "status": c.status(tol).name(),
            }),
        ),
        RationalVerdict::Undecided { best_upper, reason } => {
            let code = if reason.contains("resource guard") { 5 } else { 4 };
            (code, json!({ "verdict": "undecided", "best_upper": best_upper, "reason": reason }))
        }
    })
}

// ---------------------------------------------------------------- obstruction

fn obstruction(job: &mut Job, path: &Path) -> Res {
    job.input(path)?;
    let (td, alpha) = load_transition::<f64>(path)?;
    let v = obstruction_check(&td, job.cli.opts.tol);
    let m = thurston_matrix(&td);
    let lambda = if job.cli.opts.rational {
        exact_radius(&m, v.lambda).map(|r| Value::String(format_rational(&r))).unwrap_or(json!(v.lambda))
    } else {
        json!(v.lambda)
    };
    let classes = &td.classes;
    let witness = v.witness.as_ref().map(|w| {
        Value::Object(classes.iter().zip(w).map(|(c, x)| (c.clone(), json!(x))).collect())
    });
    let mut out = json!({
        "obstructed": v.obstructed,
        "exact_obstructed": v.exact_obstructed,
        "lambda": lambda,
        "matrix": m.iter().map(|r| r.iter().map(format_rational).collect::<Vec<_>>()).collect::<Vec<_>>(),
        "classes": classes,
        "witness": witness,
        "witness_emb": v.witness_emb,
        "not_lattes": v.not_lattes,
    });
    if let Some(a) = alpha {
        out["emb_annular"] = json!(emb_annular(&td, &a)?);
    }
    let code = if v.obstructed == v.exact_obstructed { 0 } else { 4 };
    Ok((code, out))
}
