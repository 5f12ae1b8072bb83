//! Writes the example fixtures: `spinegen [OUT_DIR]` (default `fixtures`).

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde_json::{json, Value};

use elastica::graph::Graph;
use elastica::io::{doc_value, graph_doc, map_bundle_doc, ribbon_doc, ve_doc, write_json, GraphRef};
use elastica::maps::{uniform_route, GraphPoint, PLGraphMap};
use elastica::Result;

use spinegen::catalog;
use spinegen::spine::Lifted;

/// Positive root of `x^3 = x + 2`.
fn z2i_lambda() -> f64 {
    let mut x: f64 = 1.5;
    for _ in 0..60 {
        x -= (x * x * x - x - 2.0) / (3.0 * x * x - 1.0);
    }
    x
}

fn check(args: &[&str], expect: Vec<Value>) -> Value {
    json!({ "args": args, "expect": expect })
}

fn near(pointer: &str, value: f64, tol: f64) -> Value {
    json!({ "pointer": pointer, "value": value, "tol": tol })
}

fn equals(pointer: &str, value: Value) -> Value {
    json!({ "pointer": pointer, "equals": value })
}

fn exit(code: i32) -> Value {
    json!({ "exit": code })
}

fn csv_near(params: &str, n: usize, column: &str, value: f64, tol: f64) -> Value {
    json!({ "csv": { "params": params, "n": n, "column": column }, "value": value, "tol": tol })
}

struct Writer {
    root: PathBuf,
}

impl Writer {
    fn dir(&self, name: &str) -> Result<PathBuf> {
        let d = self.root.join(name);
        std::fs::create_dir_all(&d).map_err(|e| elastica::Error::Io(format!("{}: {e}", d.display())))?;
        Ok(d)
    }

    fn fixture(&self, name: &str, description: &str, provenance: &str, checks: Vec<Value>) -> Result<()> {
        let doc = json!({ "name": name, "description": description, "provenance": provenance, "checks": checks });
        write_json(&self.dir(name)?.join("fixture.json"), &doc)
    }

    fn ve(&self, name: &str, l: &Lifted, alpha: &[f64]) -> Result<()> {
        let ve = l.endomorphism(alpha)?;
        let mut doc = ve_doc(&ve);
        if let GraphRef::Inline(g) = &mut doc.cover.base {
            g.ribbon = Some(ribbon_doc(&l.base, &l.ribbon));
        }
        write_json(&self.dir(name)?.join("ve.json"), &doc_value(&doc))
    }
}

const SEARCHED: &str = "Spine and dual arcs drawn by hand around the marked points, lifted \
    through the map by path continuation and projected back onto the spine. The base weights \
    were found by pattern search on the embedding-energy estimate and then frozen in closed form.";

fn three_point(w: &Writer) -> Result<()> {
    let l = catalog::three_point()?;
    w.ve("three-point", &l, &[1.0, 0.5, 0.5f64.sqrt()])?;
    let r = 0.5f64.sqrt();
    w.fixture(
        "three-point",
        "1/(1 - z^2) on the theta spine of the three marked points 0, 1, inf.",
        SEARCHED,
        vec![
            check(&["emb", "ve.json"], vec![near("/result/upper", r, 1e-6), near("/result/lower", r, 1e-6)]),
            check(
                &["asf", "ve.json", "--n-max", "4"],
                (1..=4).map(|k| csv_near("", k, "upper", r.powi(k as i32), 1e-6)).collect(),
            ),
            check(
                &["iterate", "ve.json", "--n", "3"],
                vec![equals("/result/degree", json!(8)), equals("/result/euler_characteristic", json!(-8))],
            ),
        ],
    )
}

fn rabbit(w: &Writer) -> Result<()> {
    let l = catalog::rabbit()?;
    let a = 2f64.powf(-1.0 / 3.0);
    w.ve("rabbit", &l, &[1.0, a * a, a])?;
    // Curves around {c, c^2+c}, {0, c} and {0, c^2+c}. The first two pull back
    // through the critical value with degree 2; the pairing of preimages for
    // the third is taken to be the one giving the larger matrix.
    let annular = json!({
        "classes": [{ "id": "c1c2" }, { "id": "c0c1" }, { "id": "c0c2" }],
        "degree": 2,
        "preimages": [
            { "covers": "c1c2", "degree": 2, "isotopic_to": "c0c1" },
            { "covers": "c0c1", "degree": 2, "isotopic_to": "c0c2" },
            { "covers": "c0c2", "degree": 1, "isotopic_to": "c1c2" },
            { "covers": "c0c2", "degree": 1, "isotopic_to": "inessential" }
        ]
    });
    write_json(&w.dir("rabbit")?.join("annular.json"), &annular)?;
    w.fixture(
        "rabbit",
        "Douady rabbit z^2 + c on a rose with one petal per point of the critical cycle.",
        &format!("{SEARCHED} The annular system was derived by hand from the preimages of disks around pairs of marked points."),
        vec![
            check(&["emb", "ve.json"], vec![near("/result/upper", a, 1e-4)]),
            check(
                &["certify", "ve.json", "--n-max", "2"],
                vec![equals("/result/verdict", json!("certified")), equals("/result/n", json!(1)), near("/result/upper", a, 1e-4)],
            ),
            check(&["obstruction", "annular.json"], vec![equals("/result/obstructed", json!(false)), near("/result/lambda", 0.25f64.cbrt(), 1e-9)]),
            check(
                &["iterate", "ve.json", "--n", "3"],
                vec![equals("/result/degree", json!(8)), equals("/result/euler_characteristic", json!(-16))],
            ),
        ],
    )
}

fn z2_plus_i(w: &Writer) -> Result<()> {
    let l = catalog::z2_plus_i()?;
    let lam = z2i_lambda();
    w.ve("z2-plus-i", &l, &[1.0 / (lam * lam), 0.0, 1.0 / lam, 0.0, 1.0, 0.0])?;
    w.fixture(
        "z2-plus-i",
        "z^2 + i on a tripod from the alpha fixed point to the marked points, with a zero-weight loop at each leaf.",
        "Spine drawn by hand and lifted by path continuation. Legs carry weights lambda^-2, lambda^-1, 1 \
         where lambda^3 = lambda + 2; the loops have weight zero and their preimages are pulled tight.",
        vec![check(&["emb", "ve.json"], vec![near("/result/upper", 1.0 / lam, 1e-3), near("/result/lower", 1.0 / lam, 1e-3)])],
    )
}

fn asf_bad(w: &Writer) -> Result<()> {
    let l = catalog::asf_bad()?;
    // (left, middle, right) in edge order l, m, r
    w.ve("asf-bad", &l, &[1.0, 1.0, 1.0])?;
    let fitted = "l=1;m=0.2056;r=0.8214";
    let target = 2f64.powf(-1.0 / 3.0);
    w.fixture(
        "asf-bad",
        "(1 + z^2)/(1 - z^2), whose one-step embedding energy is far above the asymptotic stretch factor.",
        &format!(
            "{SEARCHED} The stored weights are all 1; the sweep also runs the fitted weights {fitted} \
             (rounded to four digits) and l=1;m=0.5;r=1."
        ),
        vec![check(
            &["asf", "ve.json", "--n-max", "8", "--param", "l=1;m=1;r=1", "--param", "l=1;m=0.5;r=1", "--param", fitted, "--jobs", "3"],
            vec![
                csv_near(fitted, 1, "root", 0.8214, 1e-3),
                csv_near(fitted, 8, "root", target, 0.05),
                csv_near("l=1;m=1;r=1", 8, "root", target, 0.05),
                csv_near("l=1;m=0.5;r=1", 8, "root", target, 0.05),
            ],
        )],
    )
}

fn mating(w: &Writer) -> Result<()> {
    let l = catalog::basilica_mating()?;
    w.ve("basilica-mating", &l, &[2.0 / 3.0, 1.0 / 3.0, 100.0, 100.0])?;
    let d = w.dir("basilica-mating")?;
    let levy = json!({
        "classes": [{ "id": "levy" }],
        "degree": 2,
        "preimages": [
            { "covers": "levy", "degree": 1, "isotopic_to": "levy" },
            { "covers": "levy", "degree": 1, "isotopic_to": "inessential" }
        ]
    });
    write_json(&d.join("levy.json"), &levy)?;
    let circle = json!({ "components": [{ "weight": 1, "steps": [["h1", "+"], ["h2", "-"]] }] });
    write_json(&d.join("circle.json"), &circle)?;
    w.fixture(
        "basilica-mating",
        "Formal mating of the basilica with itself; the two chords form a Levy cycle.",
        "The equator is cut at the landing angles 1/3 and 2/3 and its arcs weighted by angle; \
         the chords get weight 100. The Levy circle is the union of the two chords.",
        vec![
            check(&["emb", "ve.json"], vec![json!({ "pointer": "/result/lower", "min": 1.0 })]),
            check(&["obstruction", "levy.json", "--rational"], vec![
                equals("/result/obstructed", json!(true)),
                equals("/result/lambda", json!("1")),
            ]),
            check(&["certify", "ve.json", "--n-max", "1"], vec![exit(4), equals("/result/verdict", json!("obstructed_at"))]),
        ],
    )
}

fn slit(w: &Writer) -> Result<()> {
    let ve = catalog::slit(4)?;
    let d = w.dir("slit")?;
    write_json(&d.join("ve.json"), &doc_value(&ve_doc(&ve)))?;
    w.fixture(
        "slit",
        "Blow-up of the identity of a four-petal rose along a tree; the extra sheets fold onto petal midpoints.",
        "Written down combinatorially: the main sheet covers each petal twice at half speed.",
        vec![
            check(&["emb", "ve.json", "--rational"], vec![equals("/result/lower", json!("1/2")), equals("/result/upper", json!("1/2"))]),
            check(&["emb", "ve.json"], vec![near("/result/lower", 0.5, 1e-12), near("/result/upper", 0.5, 1e-12)]),
            check(&["iterate", "ve.json", "--n", "2"], vec![equals("/result/degree", json!(25)), equals("/result/euler_characteristic", json!(-75))]),
        ],
    )
}

/// Wheatstone bridge with one doubled edge, mapped to a unit interval with
/// `s -> 0`, `t -> 1`.
fn rect_tiling(w: &Writer) -> Result<()> {
    let dom = Arc::new(Graph::new(
        ["a", "b", "s", "t"].map(String::from).to_vec(),
        [("ab", "a", "b"), ("at", "a", "t"), ("bt", "b", "t"), ("sa", "s", "a"), ("sb", "s", "b")]
            .map(|(e, x, y)| (e.to_string(), x.to_string(), y.to_string()))
            .to_vec(),
    )?);
    let cod = Arc::new(Graph::new(vec!["0".into(), "1".into()], vec![("I".into(), "0".into(), "1".into())])?);
    let alpha = vec![1.0, 1.0, 1.0, 2.0, 1.0];
    let ell = vec![1.0];
    let step = |fwd: bool| vec![elastica::curves::Step::new(0, if fwd { elastica::Dir::Fwd } else { elastica::Dir::Rev })];
    let half = GraphPoint::Edge(0, 0.5);
    let restrict = |from: f64, to: f64| {
        let mut r = uniform_route(&step(to >= from), &ell);
        r[0].from = from;
        r[0].to = to;
        r
    };
    let routes = vec![
        vec![elastica::maps::stall_at(&cod, &half, 1.0)?],
        restrict(0.5, 1.0),
        restrict(0.5, 1.0),
        restrict(0.0, 0.5),
        restrict(0.0, 0.5),
    ];
    let images = vec![half.clone(), half, GraphPoint::Vertex(0), GraphPoint::Vertex(1)];
    let m = PLGraphMap::new(dom, cod, alpha, ell, images, routes)?;
    let d = w.dir("rect-tiling")?;
    write_json(&d.join("map.json"), &doc_value(&map_bundle_doc(&m)))?;
    let q = |n: f64| n / 13.0;
    w.fixture(
        "rect-tiling",
        "Wheatstone bridge with one edge of weight 2, pulled tight onto an interval with s at 0 and t at 1.",
        "The bridge stands in for the tiled planar graph. Values are the solution of the 2x2 Kirchhoff \
         system (a = 8/13, b = 7/13) and agree with a dense-subdivision convex solver.",
        vec![check(
            &["harmonic", "map.json", "--fix", "s,t"],
            vec![
                near("/result/energy", q(11.0), 1e-9),
                near("/result/tensions/sa", q(4.0), 1e-9),
                near("/result/tensions/sb", q(7.0), 1e-9),
                near("/result/tensions/ab", q(1.0), 1e-9),
                near("/result/tensions/at", q(5.0), 1e-9),
                near("/result/tensions/bt", q(6.0), 1e-9),
                near("/result/map/vertex_images/a/t", q(8.0), 1e-9),
                near("/result/map/vertex_images/b/t", q(7.0), 1e-9),
            ],
        )],
    )
}

fn small(w: &Writer) -> Result<()> {
    let d = w.dir("theta")?;
    let theta = json!({
        "vertices": ["n", "s"],
        "edges": [{ "id": "l", "from": "n", "to": "s" }, { "id": "m", "from": "n", "to": "s" }, { "id": "r", "from": "n", "to": "s" }],
        "alpha": { "l": 1, "m": "1/2", "r": 1 },
        "ribbon": { "n": ["l+", "m+", "r+"], "s": ["r-", "m-", "l-"] }
    });
    write_json(&d.join("graph.json"), &theta)?;
    let lm = json!({ "components": [{ "weight": 1, "steps": [["l", "+"], ["m", "-"]] }] });
    write_json(&d.join("curve.json"), &lm)?;
    let broken = json!({
        "base": "graph.json",
        "total": {
            "vertices": ["n0", "s0"],
            "edges": [{ "id": "l0", "from": "n0", "to": "s0" }, { "id": "m0", "from": "n0", "to": "s0" }, { "id": "r0", "from": "n0", "to": "s0" }]
        },
        "vertex_map": { "n0": "n", "s0": "s" },
        "edge_map": { "l0": { "edge": "l", "dir": "+" }, "m0": { "edge": "q", "dir": "+" }, "r0": { "edge": "r", "dir": "+" } }
    });
    write_json(&d.join("broken-cover.json"), &broken)?;
    w.fixture(
        "theta",
        "Theta graph with a ribbon structure, a two-edge curve and a cover with a bad label.",
        "Written by hand.",
        vec![
            check(&["validate", "graph.json"], vec![exit(0), equals("/result/valid", json!(true))]),
            check(&["validate", "broken-cover.json"], vec![exit(2), equals("/result/files/0/errors/0/ids", json!(["m0"]))]),
            check(&["validate", "missing.json"], vec![exit(3)]),
            check(&["el", "graph.json", "curve.json", "--rational"], vec![equals("/result/el", json!("3/2"))]),
        ],
    )?;
    let d = w.dir("loop")?;
    let g = Graph::new(vec!["o".into()], vec![("e".into(), "o".into(), "o".into())])?;
    write_json(&d.join("graph.json"), &doc_value(&graph_doc(&g, Some(&[5.0]), None)))?;
    write_json(&d.join("curve.json"), &json!({ "components": [{ "steps": [["e", "+"]] }] }))?;
    w.fixture(
        "loop",
        "One-edge loop of weight 5 with the curve running once around it.",
        "Written by hand.",
        vec![
            check(&["el", "graph.json", "curve.json"], vec![near("/result/el", 5.0, 0.0)]),
            check(&["el", "graph.json", "curve.json", "--rational"], vec![equals("/result/el", json!("5"))]),
        ],
    )
}

fn main() {
    let root = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| Path::new("fixtures").to_path_buf());
    let w = Writer { root };
    let steps: [(&str, fn(&Writer) -> Result<()>); 8] = [
        ("three-point", three_point),
        ("rabbit", rabbit),
        ("z2-plus-i", z2_plus_i),
        ("asf-bad", asf_bad),
        ("basilica-mating", mating),
        ("slit", slit),
        ("rect-tiling", rect_tiling),
        ("small", small),
    ];
    for (name, f) in steps {
        if let Err(e) = f(&w) {
            eprintln!("{name}: {e}");
            std::process::exit(1);
        }
        eprintln!("wrote {name}");
    }
}
