//! JSON documents for graphs, curves, maps, covers, virtual endomorphisms
//! and annular transition data.
//!
//! Scalars are JSON numbers or `"p/q"` strings. Loaders sort ids so that
//! indices are id-lexicographic regardless of file order. Graph documents
//! may be inlined or referenced by a path relative to the referring file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::covers::{CoveringMap, VirtualEndomorphism};
use crate::curves::{Component, EdgePath, MultiCurve, Step};
use crate::error::{Error, Result};
use crate::graph::{measure_from_map, Dir, End, Graph, HalfEdge, RibbonStructure};
use crate::maps::{GraphPoint, PLGraphMap, Segment};
use crate::obstruction::{Preimage, Target, TransitionData};
use crate::scalar::{scalar_from_json, Scalar};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeDoc {
    pub id: String,
    pub from: String,
    pub to: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphDoc {
    pub vertices: Vec<String>,
    pub edges: Vec<EdgeDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<BTreeMap<String, Value>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ell: Option<BTreeMap<String, Value>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width: Option<BTreeMap<String, Value>>,
    /// Cyclic order per vertex; half-edges written `e+` (tail) or `e-` (head).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ribbon: Option<BTreeMap<String, Vec<String>>>,
}

/// A graph document inline or by path.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GraphRef {
    Path(String),
    Inline(Box<GraphDoc>),
}

/// Graph with its optional decorations.
#[derive(Clone, Debug, PartialEq)]
pub struct LoadedGraph<T = f64> {
    pub graph: Arc<Graph>,
    pub alpha: Option<Vec<T>>,
    pub ell: Option<Vec<T>>,
    pub width: Option<Vec<T>>,
    pub ribbon: Option<RibbonStructure>,
}

impl<T: Scalar> LoadedGraph<T> {
    pub fn alpha(&self) -> Result<Vec<T>> {
        self.alpha.clone().ok_or_else(|| Error::structural("missing decoration", ["alpha".to_string()]))
    }

    pub fn ell(&self) -> Result<Vec<T>> {
        self.ell.clone().ok_or_else(|| Error::structural("missing decoration", ["ell".to_string()]))
    }
}

fn parse_err(e: impl std::fmt::Display) -> Error {
    Error::Parse(e.to_string())
}

pub fn read_json(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

pub fn write_json(path: &Path, v: &Value) -> Result<()> {
    let text = serde_json::to_string_pretty(v).map_err(parse_err)?;
    std::fs::write(path, text + "\n").map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn from_value<D: for<'de> Deserialize<'de>>(v: Value) -> Result<D> {
    serde_json::from_value(v).map_err(parse_err)
}

fn to_value<S: Serialize>(s: &S) -> Value {
    serde_json::to_value(s).expect("documents serialize")
}

fn scalar<T: Scalar>(v: &Value, what: &str) -> Result<T> {
    scalar_from_json(v).ok_or_else(|| Error::Parse(format!("{what}: expected a number or \"p/q\", got {v}")))
}

fn decoration<T: Scalar>(g: &Graph, m: &Option<BTreeMap<String, Value>>, name: &str) -> Result<Option<Vec<T>>> {
    let Some(m) = m else { return Ok(None) };
    let mut parsed = BTreeMap::new();
    for (k, v) in m {
        parsed.insert(k.clone(), scalar::<T>(v, &format!("{name}[{k}]"))?);
    }
    let values = measure_from_map(g, &parsed, None)?;
    let bad: Vec<String> =
        (0..g.edge_count()).filter(|&e| values[e] < T::zero()).map(|e| g.edge_name(e).to_string()).collect();
    if !bad.is_empty() {
        return Err(Error::structural(format!("negative {name}"), bad));
    }
    Ok(Some(values))
}

fn half_edge_text(g: &Graph, h: HalfEdge) -> String {
    format!("{}{}", g.edge_name(h.edge), if h.end == End::Tail { "+" } else { "-" })
}

fn parse_half_edge(g: &Graph, s: &str) -> Result<HalfEdge> {
    let (name, end) = if let Some(n) = s.strip_suffix('+') {
        (n, End::Tail)
    } else if let Some(n) = s.strip_suffix('-') {
        (n, End::Head)
    } else {
        return Err(Error::Parse(format!("half-edge {s} must end in + or -")));
    };
    let e = g.edge_id(name).ok_or_else(|| Error::structural("unknown edge in ribbon", [name.to_string()]))?;
    Ok(HalfEdge::new(e, end))
}

pub fn parse_graph<T: Scalar>(doc: &GraphDoc) -> Result<LoadedGraph<T>> {
    let edges = doc.edges.iter().map(|e| (e.id.clone(), e.from.clone(), e.to.clone())).collect();
    let raw = Graph::new(doc.vertices.clone(), edges)?;
    let graph = Arc::new(raw.sorted().0);
    let ribbon = match &doc.ribbon {
        None => None,
        Some(r) => {
            let mut rotation = vec![Vec::new(); graph.vertex_count()];
            for (v, hs) in r {
                let vi = graph.vertex_id(v).ok_or_else(|| Error::structural("unknown vertex in ribbon", [v.clone()]))?;
                rotation[vi] = hs.iter().map(|h| parse_half_edge(&graph, h)).collect::<Result<_>>()?;
            }
            let rs = RibbonStructure { rotation };
            rs.validate(&graph)?;
            Some(rs)
        }
    };
    Ok(LoadedGraph {
        alpha: decoration(&graph, &doc.alpha, "alpha")?,
        ell: decoration(&graph, &doc.ell, "ell")?,
        width: decoration(&graph, &doc.width, "width")?,
        ribbon,
        graph,
    })
}

fn measure_doc<T: Scalar>(g: &Graph, m: Option<&[T]>) -> Option<BTreeMap<String, Value>> {
    m.map(|m| (0..g.edge_count()).map(|e| (g.edge_name(e).to_string(), m[e].to_json())).collect())
}

/// Document for a graph with optional `alpha` and `ell`.
pub fn graph_doc<T: Scalar>(g: &Graph, alpha: Option<&[T]>, ell: Option<&[T]>) -> GraphDoc {
    GraphDoc {
        vertices: g.vertex_names().to_vec(),
        edges: (0..g.edge_count())
            .map(|e| EdgeDoc {
                id: g.edge_name(e).to_string(),
                from: g.vertex_name(g.tail(e)).to_string(),
                to: g.vertex_name(g.head(e)).to_string(),
            })
            .collect(),
        alpha: measure_doc(g, alpha),
        ell: measure_doc(g, ell),
        width: None,
        ribbon: None,
    }
}

pub fn ribbon_doc(g: &Graph, r: &RibbonStructure) -> BTreeMap<String, Vec<String>> {
    (0..g.vertex_count())
        .map(|v| (g.vertex_name(v).to_string(), r.rotation[v].iter().map(|h| half_edge_text(g, *h)).collect()))
        .collect()
}

fn resolve(base: Option<&Path>, p: &str) -> PathBuf {
    match base {
        Some(b) => b.join(p),
        None => PathBuf::from(p),
    }
}

pub fn load_graph_ref<T: Scalar>(r: &GraphRef, base: Option<&Path>) -> Result<LoadedGraph<T>> {
    match r {
        GraphRef::Inline(doc) => parse_graph(doc),
        GraphRef::Path(p) => load_graph(&resolve(base, p)),
    }
}

pub fn load_graph<T: Scalar>(path: &Path) -> Result<LoadedGraph<T>> {
    parse_graph(&from_value::<GraphDoc>(read_json(path)?)?)
}

// ---------------------------------------------------------------- curves

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComponentDoc {
    #[serde(default = "one")]
    pub weight: Value,
    pub steps: Vec<(String, String)>,
}

fn one() -> Value {
    Value::from(1)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveDoc {
    pub components: Vec<ComponentDoc>,
}

fn parse_dir(s: &str) -> Result<Dir> {
    Dir::parse(s).ok_or_else(|| Error::Parse(format!("direction must be + or -, got {s}")))
}

fn parse_steps(g: &Graph, steps: &[(String, String)]) -> Result<Vec<Step>> {
    steps
        .iter()
        .map(|(e, d)| {
            let ei = g.edge_id(e).ok_or_else(|| Error::structural("unknown edge in curve", [e.clone()]))?;
            Ok(Step::new(ei, parse_dir(d)?))
        })
        .collect()
}

pub fn parse_curve<T: Scalar>(doc: &CurveDoc, g: &Arc<Graph>) -> Result<MultiCurve<T>> {
    let mut comps = Vec::new();
    for (i, c) in doc.components.iter().enumerate() {
        let steps = parse_steps(g, &c.steps)?;
        let weight = scalar::<T>(&c.weight, &format!("component {i} weight"))?;
        comps.push(Component { weight, path: EdgePath::new(steps) });
    }
    MultiCurve::new(g.clone(), comps)
}

pub fn curve_doc<T: Scalar>(c: &MultiCurve<T>) -> CurveDoc {
    let g = &c.graph;
    CurveDoc {
        components: c
            .components
            .iter()
            .map(|comp| ComponentDoc {
                weight: comp.weight.to_json(),
                steps: comp.path.steps.iter().map(|s| (g.edge_name(s.edge).to_string(), s.dir.symbol().to_string())).collect(),
            })
            .collect(),
    }
}

// ---------------------------------------------------------------- maps

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ImageDoc {
    Vertex { vertex: String },
    Edge { edge: String, t: Value },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegmentDoc {
    pub edge: String,
    pub dir: String,
    pub from: Value,
    pub to: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub span: Option<Value>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapDoc {
    pub vertex_images: BTreeMap<String, ImageDoc>,
    pub routes: BTreeMap<String, Vec<SegmentDoc>>,
}

/// Builds a map from a document; missing spans give uniform speed in the
/// codomain measure (equal spans when the route has measure zero).
pub fn parse_map<T: Scalar>(
    doc: &MapDoc,
    domain: Arc<Graph>,
    codomain: Arc<Graph>,
    dom_measure: Vec<T>,
    cod_measure: Vec<T>,
) -> Result<PLGraphMap<T>> {
    let mut images = Vec::with_capacity(domain.vertex_count());
    let mut missing = Vec::new();
    for v in 0..domain.vertex_count() {
        let name = domain.vertex_name(v);
        match doc.vertex_images.get(name) {
            None => {
                missing.push(name.to_string());
                images.push(GraphPoint::Vertex(0));
            }
            Some(ImageDoc::Vertex { vertex }) => {
                let w = codomain.vertex_id(vertex).ok_or_else(|| Error::structural("unknown codomain vertex", [vertex.clone()]))?;
                images.push(GraphPoint::Vertex(w));
            }
            Some(ImageDoc::Edge { edge, t }) => {
                let e = codomain.edge_id(edge).ok_or_else(|| Error::structural("unknown codomain edge", [edge.clone()]))?;
                let t = scalar::<T>(t, &format!("image of {name}"))?;
                if t < T::zero() || t > T::one() {
                    return Err(Error::structural("edge parameter outside [0, 1]", [name.to_string()]));
                }
                images.push(GraphPoint::on_edge(&codomain, e, t));
            }
        }
    }
    if !missing.is_empty() {
        return Err(Error::structural("vertex without image", missing));
    }
    let unknown: Vec<String> = doc
        .vertex_images
        .keys()
        .chain(doc.routes.keys())
        .filter(|k| domain.vertex_id(k).is_none() && domain.edge_id(k).is_none())
        .cloned()
        .collect();
    if !unknown.is_empty() {
        return Err(Error::structural("map entry for unknown domain id", unknown));
    }
    let mut routes = Vec::with_capacity(domain.edge_count());
    for e in 0..domain.edge_count() {
        let name = domain.edge_name(e);
        let segs = doc.routes.get(name).map(Vec::as_slice).unwrap_or(&[]);
        let mut parsed = Vec::with_capacity(segs.len());
        for s in segs {
            let ce = codomain.edge_id(&s.edge).ok_or_else(|| Error::structural("unknown codomain edge", [s.edge.clone()]))?;
            let from = scalar::<T>(&s.from, &format!("route {name}"))?;
            let to = scalar::<T>(&s.to, &format!("route {name}"))?;
            let dir = parse_dir(&s.dir)?;
            let expected = if to > from { Dir::Fwd } else if to < from { Dir::Rev } else { dir };
            if dir != expected {
                return Err(Error::structural("segment direction disagrees with parameters", [name.to_string()]));
            }
            let span = s.span.as_ref().map(|v| scalar::<T>(v, &format!("span in {name}"))).transpose()?;
            parsed.push((Segment::new(ce, from, to, T::zero()), span));
        }
        let given = parsed.iter().filter(|p| p.1.is_some()).count();
        if given != 0 && given != parsed.len() {
            return Err(Error::structural("spans must be given for all segments or none", [name.to_string()]));
        }
        let route: Vec<Segment<T>> = if given == parsed.len() {
            parsed.into_iter().map(|(mut s, span)| {
                s.span = span.expect("checked");
                s
            }).collect()
        } else {
            let weights: Vec<T> = parsed.iter().map(|(s, _)| s.extent() * cod_measure[s.edge].clone()).collect();
            let total = weights.iter().cloned().fold(T::zero(), |a, b| a + b);
            let n = T::from_ratio(parsed.len() as i64, 1);
            parsed
                .into_iter()
                .zip(weights)
                .map(|((mut s, _), w)| {
                    s.span = if total.is_positive() { w / total.clone() } else { T::one() / n.clone() };
                    s
                })
                .collect()
        };
        routes.push(route);
    }
    PLGraphMap::new(domain, codomain, dom_measure, cod_measure, images, routes)
}

pub fn map_doc<T: Scalar>(m: &PLGraphMap<T>) -> MapDoc {
    let (d, c) = (&m.domain, &m.codomain);
    let vertex_images = (0..d.vertex_count())
        .map(|v| {
            let img = match &m.vertex_images[v] {
                GraphPoint::Vertex(w) => ImageDoc::Vertex { vertex: c.vertex_name(*w).to_string() },
                GraphPoint::Edge(e, t) => ImageDoc::Edge { edge: c.edge_name(*e).to_string(), t: t.to_json() },
            };
            (d.vertex_name(v).to_string(), img)
        })
        .collect();
    let routes = (0..d.edge_count())
        .map(|e| {
            let segs = m.routes[e]
                .iter()
                .map(|s| SegmentDoc {
                    edge: c.edge_name(s.edge).to_string(),
                    dir: s.dir().symbol().to_string(),
                    from: s.from.to_json(),
                    to: s.to.to_json(),
                    span: Some(s.span.to_json()),
                })
                .collect();
            (d.edge_name(e).to_string(), segs)
        })
        .collect();
    MapDoc { vertex_images, routes }
}

/// A map with its domain and codomain graphs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapBundleDoc {
    pub domain: GraphRef,
    pub codomain: GraphRef,
    #[serde(flatten)]
    pub map: MapDoc,
}

/// Which codomain decoration a command reads as the codomain measure.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CodomainMeasure {
    Alpha,
    Ell,
    /// `ell` when present, else `alpha`.
    Either,
}

pub fn load_map_bundle<T: Scalar>(path: &Path, which: CodomainMeasure) -> Result<PLGraphMap<T>> {
    let doc: MapBundleDoc = from_value(read_json(path)?)?;
    map_from_bundle(&doc, path.parent(), which)
}

pub fn map_from_bundle<T: Scalar>(doc: &MapBundleDoc, base: Option<&Path>, which: CodomainMeasure) -> Result<PLGraphMap<T>> {
    let dom = load_graph_ref::<T>(&doc.domain, base)?;
    let cod = load_graph_ref::<T>(&doc.codomain, base)?;
    let cm = match which {
        CodomainMeasure::Alpha => cod.alpha()?,
        CodomainMeasure::Ell => cod.ell()?,
        CodomainMeasure::Either => cod.ell.clone().map(Ok).unwrap_or_else(|| cod.alpha())?,
    };
    parse_map(&doc.map, dom.graph.clone(), cod.graph.clone(), dom.alpha()?, cm)
}

pub fn map_bundle_doc<T: Scalar>(m: &PLGraphMap<T>) -> MapBundleDoc {
    MapBundleDoc {
        domain: GraphRef::Inline(Box::new(graph_doc(&m.domain, Some(&m.dom_measure), None))),
        codomain: GraphRef::Inline(Box::new(graph_doc(&m.codomain, Some(&m.cod_measure), None))),
        map: map_doc(m),
    }
}

// ---------------------------------------------------------------- covers

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeImageDoc {
    pub edge: String,
    pub dir: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverDoc {
    pub base: GraphRef,
    pub total: GraphRef,
    pub vertex_map: BTreeMap<String, String>,
    pub edge_map: BTreeMap<String, EdgeImageDoc>,
}

/// Cover, graphs and decorations.
pub struct LoadedCover<T = f64> {
    pub cover: CoveringMap,
    pub base: LoadedGraph<T>,
    pub total: LoadedGraph<T>,
}

/// Parses the labelling without validating the covering property.
pub fn cover_parts<T: Scalar>(doc: &CoverDoc, base_dir: Option<&Path>) -> Result<(LoadedGraph<T>, LoadedGraph<T>, Vec<usize>, Vec<(usize, Dir)>)> {
    let base = load_graph_ref::<T>(&doc.base, base_dir)?;
    let total = load_graph_ref::<T>(&doc.total, base_dir)?;
    let (b, t) = (&base.graph, &total.graph);
    let mut bad = Vec::new();
    let mut vm = Vec::with_capacity(t.vertex_count());
    for v in 0..t.vertex_count() {
        match doc.vertex_map.get(t.vertex_name(v)).and_then(|w| b.vertex_id(w)) {
            Some(w) => vm.push(w),
            None => {
                bad.push(t.vertex_name(v).to_string());
                vm.push(0);
            }
        }
    }
    let mut em = Vec::with_capacity(t.edge_count());
    for e in 0..t.edge_count() {
        match doc.edge_map.get(t.edge_name(e)).and_then(|x| Some((b.edge_id(&x.edge)?, Dir::parse(&x.dir)?))) {
            Some(x) => em.push(x),
            None => {
                bad.push(t.edge_name(e).to_string());
                em.push((0, Dir::Fwd));
            }
        }
    }
    for k in doc.vertex_map.keys().chain(doc.edge_map.keys()) {
        if t.vertex_id(k).is_none() && t.edge_id(k).is_none() {
            bad.push(k.clone());
        }
    }
    if !bad.is_empty() {
        return Err(Error::structural("cover labelling missing or unknown", bad));
    }
    Ok((base, total, vm, em))
}

pub fn parse_cover<T: Scalar>(doc: &CoverDoc, base_dir: Option<&Path>) -> Result<LoadedCover<T>> {
    let (base, total, vm, em) = cover_parts::<T>(doc, base_dir)?;
    let cover = CoveringMap::new(total.graph.clone(), base.graph.clone(), vm, em)?;
    Ok(LoadedCover { cover, base, total })
}

pub fn cover_doc(c: &CoveringMap, base: GraphRef, total: GraphRef) -> CoverDoc {
    let (b, t) = (&c.base, &c.total);
    CoverDoc {
        base,
        total,
        vertex_map: (0..t.vertex_count()).map(|v| (t.vertex_name(v).to_string(), b.vertex_name(c.vertex_map[v]).to_string())).collect(),
        edge_map: (0..t.edge_count())
            .map(|e| {
                let (be, d) = c.edge_map[e];
                (t.edge_name(e).to_string(), EdgeImageDoc { edge: b.edge_name(be).to_string(), dir: d.symbol().to_string() })
            })
            .collect(),
    }
}

/// A cover together with a map from its total graph to its base.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VeDoc {
    #[serde(flatten)]
    pub cover: CoverDoc,
    pub map: MapDoc,
}

/// Loads a virtual endomorphism; the base needs `alpha`, and the total
/// graph's weights default to the pulled-back ones.
pub fn parse_ve<T: Scalar>(doc: &VeDoc, base_dir: Option<&Path>) -> Result<VirtualEndomorphism<T>> {
    let lc = parse_cover::<T>(&doc.cover, base_dir)?;
    let alpha = lc.base.alpha()?;
    let pulled = lc.cover.pull_measure(&alpha);
    if let Some(given) = &lc.total.alpha {
        if *given != pulled {
            return Err(Error::mismatch("total graph weights must be pulled back from the base"));
        }
    }
    let map = parse_map(&doc.map, lc.total.graph.clone(), lc.base.graph.clone(), pulled, alpha)?;
    VirtualEndomorphism::new(lc.cover, map)
}

pub fn load_ve<T: Scalar>(path: &Path) -> Result<VirtualEndomorphism<T>> {
    parse_ve(&from_value::<VeDoc>(read_json(path)?)?, path.parent())
}

pub fn ve_doc<T: Scalar>(ve: &VirtualEndomorphism<T>) -> VeDoc {
    let base = GraphRef::Inline(Box::new(graph_doc(&ve.cover.base, Some(ve.alpha()), None)));
    let total = GraphRef::Inline(Box::new(graph_doc::<T>(&ve.cover.total, None, None)));
    VeDoc { cover: cover_doc(&ve.cover, base, total), map: map_doc(&ve.map) }
}

// ---------------------------------------------------------------- transition data

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassDoc {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<Value>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PreimageDoc {
    pub covers: String,
    pub degree: u32,
    pub isotopic_to: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransitionDoc {
    pub classes: Vec<ClassDoc>,
    pub degree: u32,
    pub preimages: Vec<PreimageDoc>,
    #[serde(default)]
    pub not_lattes: bool,
}

/// Transition data and, when every class has one, its annular weights.
pub fn parse_transition<T: Scalar>(doc: &TransitionDoc) -> Result<(TransitionData, Option<Vec<T>>)> {
    let mut ids: Vec<&ClassDoc> = doc.classes.iter().collect();
    ids.sort_by(|a, b| a.id.cmp(&b.id));
    let classes: Vec<String> = ids.iter().map(|c| c.id.clone()).collect();
    let index = |s: &str| classes.iter().position(|c| c == s);
    let mut pre = Vec::new();
    let mut bad = Vec::new();
    for (i, p) in doc.preimages.iter().enumerate() {
        let covers = index(&p.covers);
        let target = if p.isotopic_to == "inessential" { Some(Target::Inessential) } else { index(&p.isotopic_to).map(Target::Class) };
        match (covers, target) {
            (Some(c), Some(t)) => pre.push(Preimage { covers: c, degree: p.degree, target: t }),
            _ => bad.push(format!("preimage {i}")),
        }
    }
    if !bad.is_empty() {
        return Err(Error::structural("preimage references unknown class", bad));
    }
    let mut td = TransitionData::new(classes, doc.degree, pre)?;
    td.not_lattes = doc.not_lattes;
    let alpha = if ids.iter().all(|c| c.alpha.is_some()) && !ids.is_empty() {
        Some(ids.iter().map(|c| scalar::<T>(c.alpha.as_ref().expect("checked"), &c.id)).collect::<Result<Vec<T>>>()?)
    } else {
        None
    };
    Ok((td, alpha))
}

pub fn load_transition<T: Scalar>(path: &Path) -> Result<(TransitionData, Option<Vec<T>>)> {
    parse_transition(&from_value::<TransitionDoc>(read_json(path)?)?)
}

pub fn load_curve<T: Scalar>(path: &Path, g: &Arc<Graph>) -> Result<MultiCurve<T>> {
    parse_curve(&from_value::<CurveDoc>(read_json(path)?)?, g)
}

pub fn doc_value<S: Serialize>(s: &S) -> Value {
    to_value(s)
}

pub fn parse_doc<D: for<'de> Deserialize<'de>>(v: Value) -> Result<D> {
    from_value(v)
}
