//! The explicit isomorphism between the ordinary Khovanov cube and the
//! reduced Khovanov–Rozansky cube: base points, the sign function `tau`,
//! generator propagation, the vertex maps `theta_v`, and the checks that
//! they intertwine the two cubes.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use num_traits::{One, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::diagram::{ArcEnd, LinkDiagram, ResolutionVertex, SmoothingVertex};
use crate::khcube::{build_kh_cube, kauffman_bracket_jones, EdgeKind, KhCube, KhVertexSpace};
use crate::krcube::{
    calibrate_generators, fast_edges, kr_homology, oracle_edges, reduce_all, split_multiplier, KrCube,
    ReducedEdgeMap, ReducedVertex,
};
use crate::linalg::{add_to, BigradedDimTable, SparseMatrix, SparseVec};
use crate::poly::Q;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BridgeError {
    #[error("no admissible path from mark {0} to its base point")]
    NoPathFound(usize),
    #[error("base point {0} is not a mark of the diagram")]
    BadBasePoint(usize),
    #[error("expected one base point per shadow component ({expected}), got {got}")]
    BasePointCount { expected: usize, got: usize },
    #[error("split image at vertex {vertex} is not a multiple of the divisor: {detail}")]
    DivisionNotExact { vertex: String, detail: String },
    #[error("generators disagree at vertex {vertex}: {detail}")]
    InconsistentGenerator { vertex: String, detail: String },
    #[error(transparent)]
    Kr(#[from] crate::krcube::KrError),
    #[error(transparent)]
    Linalg(#[from] crate::linalg::LinalgError),
}

/// Direction of travel along an arc relative to the diagram orientation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Dir {
    Forward,
    Backward,
}

/// A step of an admissible path: leave the current mark along `arc` in
/// direction `dir` and stop at the next mark.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PathStep {
    pub arc: usize,
    pub dir: Dir,
}

/// A path between marks: the start mark, then the arcs whose marks are
/// visited in order. Every step after the first crosses exactly one crossing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MarkPath {
    pub start: usize,
    pub start_dir: Dir,
    pub steps: Vec<PathStep>,
    pub reversing_turns: usize,
}

impl MarkPath {
    pub fn end(&self) -> usize {
        self.steps.last().map_or(self.start, |s| s.arc)
    }

    pub fn parity(&self) -> i32 {
        if self.reversing_turns % 2 == 0 {
            1
        } else {
            -1
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TauAssignment {
    /// One base mark per shadow component, in component order.
    pub base_points: Vec<usize>,
    /// `tau(z)` for every mark.
    pub values: Vec<i32>,
    /// The path used for each mark.
    pub paths: Vec<MarkPath>,
}

impl TauAssignment {
    pub fn tau(&self, mark: usize) -> i32 {
        self.values[mark]
    }
}

/// Half-arc edge ids: `2a` joins the tail crossing to `z_a`, `2a + 1`
/// joins `z_a` to the head crossing.
fn leaving_edge(arc: usize, dir: Dir) -> usize {
    match dir {
        Dir::Forward => 2 * arc + 1,
        Dir::Backward => 2 * arc,
    }
}

fn arriving_edge(arc: usize, dir: Dir) -> usize {
    match dir {
        Dir::Forward => 2 * arc,
        Dir::Backward => 2 * arc + 1,
    }
}

/// Crossing end reached when leaving the mark of `arc` in direction `dir`.
fn end_reached(d: &LinkDiagram, arc: usize, dir: Dir) -> Option<ArcEnd> {
    let a = &d.arcs()[arc];
    match dir {
        Dir::Forward => a.head,
        Dir::Backward => a.tail,
    }
}

/// The two turns available at a crossing end: `(next arc, direction, reversing)`.
fn turns(d: &LinkDiagram, end: ArcEnd) -> [(usize, Dir, bool); 2] {
    let cr = &d.crossings()[end.crossing];
    // arriving along an incoming arc means path and graph orientation agree
    let arrive_agrees = cr.incoming[end.pos];
    [(end.pos + 1) % 4, (end.pos + 3) % 4].map(|p| {
        let depart_agrees = !cr.incoming[p];
        let dir = if depart_agrees { Dir::Forward } else { Dir::Backward };
        (cr.arcs[p], dir, arrive_agrees != depart_agrees)
    })
}

/// Smallest mark of each shadow component.
pub fn default_base_points(d: &LinkDiagram) -> Vec<usize> {
    d.shadow_components()
        .iter()
        .map(|c| *c.iter().min().expect("nonempty component"))
        .collect()
}

/// Searches for an admissible path from `start` to `target` with a
/// visited-edge set, depth first, in a fixed turn order.
fn find_path(d: &LinkDiagram, start: usize, target: usize) -> Option<MarkPath> {
    if start == target {
        return Some(MarkPath {
            start,
            start_dir: Dir::Forward,
            steps: Vec::new(),
            reversing_turns: 0,
        });
    }
    let mut used = vec![false; 2 * d.n_marks()];
    let mut steps = Vec::new();
    for dir in [Dir::Forward, Dir::Backward] {
        if let Some(turns) = dfs_to(d, start, dir, target, &mut used, &mut steps, 0) {
            return Some(MarkPath {
                start,
                start_dir: dir,
                steps,
                reversing_turns: turns,
            });
        }
    }
    None
}

fn dfs_to(
    d: &LinkDiagram,
    arc: usize,
    dir: Dir,
    target: usize,
    used: &mut [bool],
    steps: &mut Vec<PathStep>,
    turns_so_far: usize,
) -> Option<usize> {
    let out = leaving_edge(arc, dir);
    if used[out] {
        return None;
    }
    let end = end_reached(d, arc, dir)?;
    used[out] = true;
    for (next, ndir, reversing) in turns(d, end) {
        let inn = arriving_edge(next, ndir);
        if used[inn] {
            continue;
        }
        used[inn] = true;
        steps.push(PathStep { arc: next, dir: ndir });
        let t = turns_so_far + reversing as usize;
        if next == target {
            return Some(t);
        }
        if let Some(found) = dfs_to(d, next, ndir, target, used, steps, t) {
            return Some(found);
        }
        steps.pop();
        used[inn] = false;
    }
    used[out] = false;
    None
}

/// `tau(z) = (-1)^{l(gamma_z)}` for a path found from each base point by a
/// breadth-first search over (arc, direction) states; the path is then
/// checked for admissibility and replaced by a depth-first admissible path
/// if it repeats an edge.
pub fn compute_tau(d: &LinkDiagram, base_points: Option<&[usize]>) -> Result<TauAssignment, BridgeError> {
    let comps = d.shadow_components();
    let base: Vec<usize> = match base_points {
        Some(b) => {
            if b.len() != comps.len() {
                return Err(BridgeError::BasePointCount {
                    expected: comps.len(),
                    got: b.len(),
                });
            }
            for &w in b {
                if w >= d.n_marks() {
                    return Err(BridgeError::BadBasePoint(w));
                }
            }
            // reorder to component order
            let mut ordered = Vec::new();
            for c in comps {
                let w = b
                    .iter()
                    .find(|w| c.contains(w))
                    .ok_or(BridgeError::BadBasePoint(b[0]))?;
                ordered.push(*w);
            }
            ordered
        }
        None => default_base_points(d),
    };
    let mut paths: Vec<Option<MarkPath>> = vec![None; d.n_marks()];
    for &w in &base {
        // BFS over (arc, dir) arrival states
        let mut parent: BTreeMap<(usize, Dir), Option<((usize, Dir), bool)>> = BTreeMap::new();
        let mut queue = VecDeque::new();
        for dir in [Dir::Forward, Dir::Backward] {
            parent.insert((w, dir), None);
            queue.push_back((w, dir));
        }
        paths[w] = Some(MarkPath {
            start: w,
            start_dir: Dir::Forward,
            steps: Vec::new(),
            reversing_turns: 0,
        });
        while let Some((arc, dir)) = queue.pop_front() {
            let Some(end) = end_reached(d, arc, dir) else {
                continue;
            };
            for (next, ndir, rev) in turns(d, end) {
                if parent.contains_key(&(next, ndir)) {
                    continue;
                }
                parent.insert((next, ndir), Some(((arc, dir), rev)));
                queue.push_back((next, ndir));
                if paths[next].is_none() {
                    let path = bfs_path(w, (next, ndir), &parent);
                    let path = if admissible(&path) {
                        path
                    } else {
                        find_path(d, w, next).ok_or(BridgeError::NoPathFound(next))?
                    };
                    paths[next] = Some(path);
                }
            }
        }
    }
    let paths: Vec<MarkPath> = paths
        .into_iter()
        .enumerate()
        .map(|(m, p)| p.ok_or(BridgeError::NoPathFound(m)))
        .collect::<Result<_, _>>()?;
    let values = paths.iter().map(|p| p.parity()).collect();
    Ok(TauAssignment {
        base_points: base,
        values,
        paths,
    })
}

fn bfs_path(
    w: usize,
    last: (usize, Dir),
    parent: &BTreeMap<(usize, Dir), Option<((usize, Dir), bool)>>,
) -> MarkPath {
    let mut steps = Vec::new();
    let mut turns = 0;
    let mut cur = last;
    while let Some(Some((prev, rev))) = parent.get(&cur) {
        steps.push(PathStep { arc: cur.0, dir: cur.1 });
        turns += *rev as usize;
        cur = *prev;
    }
    steps.reverse();
    debug_assert_eq!(cur.0, w);
    MarkPath {
        start: w,
        start_dir: cur.1,
        steps,
        reversing_turns: turns,
    }
}

/// Edges traversed by a path, in order.
fn path_edges(p: &MarkPath) -> Vec<usize> {
    let mut edges = Vec::new();
    let (mut cur, mut dir) = (p.start, p.start_dir);
    for s in &p.steps {
        edges.push(leaving_edge(cur, dir));
        edges.push(arriving_edge(s.arc, s.dir));
        cur = s.arc;
        dir = s.dir;
    }
    edges
}

/// Rule (4): no edge is traversed twice. Rules (1)-(3) hold by construction.
pub fn admissible(p: &MarkPath) -> bool {
    let mut seen = BTreeSet::new();
    path_edges(p).into_iter().all(|e| seen.insert(e))
}

/// Two admissible paths from a base point to the same mark with different
/// parities.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TauConflict {
    pub mark: usize,
    pub expected: i32,
    pub path: MarkPath,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MultipathReport {
    pub paths_checked: usize,
    /// Whether the enumeration finished before reaching the trial cap.
    pub exhaustive: bool,
    pub conflicts: Vec<TauConflict>,
}

impl MultipathReport {
    pub fn passed(&self) -> bool {
        self.conflicts.is_empty()
    }
}

/// Enumerates admissible paths from every base point (up to `trials` path
/// endings in total) and compares each ending's parity with `tau`.
pub fn tau_multipath_check(d: &LinkDiagram, tau: &TauAssignment, trials: usize) -> MultipathReport {
    let mut report = MultipathReport {
        paths_checked: 0,
        exhaustive: true,
        conflicts: Vec::new(),
    };
    for &w in &tau.base_points {
        for dir in [Dir::Forward, Dir::Backward] {
            let mut used = vec![false; 2 * d.n_marks()];
            let mut steps = Vec::new();
            let mut walker = Walker {
                d,
                tau,
                w,
                start_dir: dir,
                trials,
                report: &mut report,
            };
            walker.walk(w, dir, &mut used, &mut steps, 0);
        }
    }
    report
}

struct Walker<'a> {
    d: &'a LinkDiagram,
    tau: &'a TauAssignment,
    w: usize,
    start_dir: Dir,
    trials: usize,
    report: &'a mut MultipathReport,
}

impl Walker<'_> {
    fn walk(&mut self, arc: usize, dir: Dir, used: &mut [bool], steps: &mut Vec<PathStep>, turns_so_far: usize) {
        if self.report.paths_checked >= self.trials {
            self.report.exhaustive = false;
            return;
        }
        let out = leaving_edge(arc, dir);
        let Some(end) = end_reached(self.d, arc, dir) else {
            return;
        };
        if used[out] {
            return;
        }
        used[out] = true;
        for (next, ndir, reversing) in turns(self.d, end) {
            let inn = arriving_edge(next, ndir);
            if used[inn] {
                continue;
            }
            if self.report.paths_checked >= self.trials {
                self.report.exhaustive = false;
                break;
            }
            used[inn] = true;
            steps.push(PathStep { arc: next, dir: ndir });
            let t = turns_so_far + reversing as usize;
            self.report.paths_checked += 1;
            let parity = if t % 2 == 0 { 1 } else { -1 };
            // a path may end at the base point itself only if it is trivial
            if parity != self.tau.tau(next) && self.report.conflicts.len() < 16 {
                self.report.conflicts.push(TauConflict {
                    mark: next,
                    expected: self.tau.tau(next),
                    path: MarkPath {
                        start: self.w,
                        start_dir: self.start_dir,
                        steps: steps.clone(),
                        reversing_turns: t,
                    },
                });
            }
            self.walk(next, ndir, used, steps, t);
            steps.pop();
            used[inn] = false;
        }
        used[out] = false;
    }
}

/// `sigma(v)`: negative-crossing coordinates shifted down by one.
pub fn sigma(d: &LinkDiagram, v: &SmoothingVertex) -> ResolutionVertex {
    d.sigma(v)
}

/// The local marks `(y, z)` of a split at crossing `c` with the relative
/// sign `tau(y) tau(z)`: the multiplier `tau(y) y + tau(z) z` is
/// `tau(y) (y + z)` when the sign is `+1` (antiparallel strands) and
/// `tau(y) (y - z)` when it is `-1` (parallel strands).
pub fn split_marks_tau(
    d: &LinkDiagram,
    target: &ReducedVertex,
    c: usize,
    tau: &[i32],
) -> Option<(i32, (usize, usize))> {
    let (y, z) = crate::krcube::split_marks(d, target, c)?;
    Some((tau[y] * tau[z], (y, z)))
}

/// The largest mark of each shadow component; an alternative to
/// [`default_base_points`] for invariance checks.
pub fn alternative_base_points(d: &LinkDiagram) -> Vec<usize> {
    d.shadow_components()
        .iter()
        .map(|c| *c.iter().max().expect("nonempty component"))
        .collect()
}

/// One generator per cube vertex (indexed like the cube), in coordinates of
/// the vertex's reduced basis.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GeneratorChoice {
    #[serde(serialize_with = "serialize_vecs")]
    pub generators: Vec<SparseVec>,
    /// Edges (as indices into the edge list) that were not used to define
    /// a generator and were checked for consistency instead.
    pub checked_edges: Vec<usize>,
}

fn serialize_vecs<S: serde::Serializer>(v: &[SparseVec], s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for vec in v {
        let entries: Vec<(usize, String)> = vec.iter().map(|(k, c)| (*k, c.to_string())).collect();
        seq.serialize_element(&entries)?;
    }
    seq.end()
}

fn scale_vec(v: &SparseVec, c: &Q) -> SparseVec {
    v.iter().map(|(k, x)| (*k, x * c)).filter(|(_, x)| !x.is_zero()).collect()
}

/// `p * v` for a module element `v` and a polynomial in the vertex's reps.
fn multiply(vertex: &ReducedVertex, p: &SparseVec, v: &SparseVec) -> SparseVec {
    let mut out = SparseVec::new();
    for (a, x) in p {
        for (b, y) in v {
            if a & b == 0 {
                add_to(&mut out, a | b, &(x * y));
            }
        }
    }
    debug_assert!(out.keys().all(|&m| m < vertex.dim()));
    out
}

/// The `q` with `v = q * w` for a nonzero scalar `q`, if any.
fn scalar_ratio(v: &SparseVec, w: &SparseVec) -> Option<Q> {
    let (k, wk) = w.iter().next()?;
    let q = v.get(k)? / wk;
    (v.len() == w.len() && w.iter().all(|(k, c)| v.get(k) == Some(&(c * &q)))).then_some(q)
}

/// The divisor `tau(y) y + tau(z) z` of a split edge, in target coordinates.
fn split_divisor(edge: &ReducedEdgeMap, target: &ReducedVertex, tau: &TauAssignment) -> Option<SparseVec> {
    match edge.kind {
        EdgeKind::Split { a, b, .. } => {
            let m = split_multiplier(target, a, b, &tau.values);
            Some(target.coordinates(&m).expect("reps are coordinates"))
        }
        EdgeKind::Merge { .. } => None,
    }
}

/// Starting from `|1...1>` at the all-zero smoothing, pushes generators up
/// the cube breadth first: `g' = psi(g)` across merges and
/// `g' = psi(g) / (tau(y) y + tau(z) z)` across splits. Every edge not used
/// to reach a new vertex is checked against the generators already chosen.
pub fn propagate_generators(
    cube: &KrCube,
    edges: &[ReducedEdgeMap],
    tau: &TauAssignment,
) -> Result<GeneratorChoice, BridgeError> {
    let n_vertices = cube.vertices.len();
    let mut generators: Vec<Option<SparseVec>> = vec![None; n_vertices];
    generators[0] = Some(SparseVec::from([(0, Q::one())]));
    let mut outgoing: Vec<Vec<usize>> = vec![Vec::new(); n_vertices];
    for (k, e) in edges.iter().enumerate() {
        outgoing[e.edge.from].push(k);
    }
    let mut used = vec![false; edges.len()];
    let mut queue = VecDeque::from([0usize]);
    while let Some(v) = queue.pop_front() {
        let g = generators[v].clone().expect("queued vertices have generators");
        for &k in &outgoing[v] {
            let e = &edges[k];
            if generators[e.edge.to].is_some() {
                continue;
            }
            let target = &cube.vertices[e.edge.to];
            let image = e.matrix.apply(&g);
            let next = match split_divisor(e, target, tau) {
                None => image,
                Some(divisor) => {
                    // the quotient is a multiple of |1...1>
                    let unit = SparseVec::from([(0, Q::one())]);
                    let q = scalar_ratio(&image, &multiply(target, &divisor, &unit)).ok_or_else(|| {
                        BridgeError::DivisionNotExact {
                            vertex: target.vertex.to_string(),
                            detail: format!("image {image:?}, divisor {divisor:?}"),
                        }
                    })?;
                    scale_vec(&unit, &q)
                }
            };
            used[k] = true;
            generators[e.edge.to] = Some(next);
            queue.push_back(e.edge.to);
        }
    }
    let generators: Vec<SparseVec> = generators
        .into_iter()
        .map(|g| g.expect("every vertex lies above the all-zero smoothing"))
        .collect();
    let mut checked_edges = Vec::new();
    for (k, e) in edges.iter().enumerate() {
        if used[k] {
            continue;
        }
        let target = &cube.vertices[e.edge.to];
        let image = e.matrix.apply(&generators[e.edge.from]);
        let expected = match split_divisor(e, target, tau) {
            None => generators[e.edge.to].clone(),
            Some(divisor) => multiply(target, &divisor, &generators[e.edge.to]),
        };
        if image != expected {
            return Err(BridgeError::InconsistentGenerator {
                vertex: target.vertex.to_string(),
                detail: format!("along {} -> {}: {image:?} vs {expected:?}", e.source, e.target),
            });
        }
        checked_edges.push(k);
    }
    Ok(GeneratorChoice {
        generators,
        checked_edges,
    })
}

/// `theta_v(x_1^{e_1} ... x_s^{e_s}) = prod (tau(r_i) r_i)^{e_i} g_v` as a
/// matrix from the ordinary basis (bit `i` = factor `x` on circle `i`) to
/// the reduced basis. Circles on both sides are ordered by smallest mark.
pub fn theta(vertex: &ReducedVertex, tau: &TauAssignment, generator: &SparseVec) -> SparseMatrix {
    let mut m = SparseMatrix::zero(vertex.dim(), vertex.dim());
    for mask in 0..vertex.dim() {
        let sign: i32 = (0..vertex.k())
            .filter(|i| mask >> i & 1 == 1)
            .map(|i| tau.tau(vertex.reps[i]))
            .product();
        let monomial = SparseVec::from([(mask, Q::from_integer(sign.into()))]);
        for (row, c) in multiply(vertex, &monomial, generator) {
            m.add_entry(row, mask, &c);
        }
    }
    m
}

/// Whether a matrix sends distinct basis vectors to nonzero multiples of
/// distinct basis vectors.
fn is_monomial_bijection(m: &SparseMatrix) -> bool {
    let mut rows = BTreeSet::new();
    m.columns.iter().all(|col| col.len() == 1 && rows.insert(*col.keys().next().unwrap()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckStatus {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Check {
    pub name: String,
    pub status: CheckStatus,
    pub detail: String,
}

impl Check {
    pub fn new(name: &str, ok: bool, detail: impl Into<String>) -> Self {
        Check {
            name: name.to_string(),
            status: if ok { CheckStatus::Pass } else { CheckStatus::Fail },
            detail: detail.into(),
        }
    }

    pub fn passed(&self) -> bool {
        self.status == CheckStatus::Pass
    }
}

/// How the reduced edge maps are obtained for a verification run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeSource {
    /// Closed-form maps on calibrated generators.
    Fast,
    /// Full transport through the factorizations, on the generators
    /// `|1...1>` produced by the reductions; the generator propagation
    /// is then nontrivial.
    Oracle,
}

/// Everything the isomorphism needs, computed once.
pub struct BridgeData {
    pub kh: KhCube,
    pub kr: KrCube,
    pub tau: TauAssignment,
    pub edges: Vec<ReducedEdgeMap>,
    pub generators: GeneratorChoice,
    pub thetas: Vec<SparseMatrix>,
}

pub fn build_bridge(
    d: &LinkDiagram,
    base_points: Option<&[usize]>,
    source: EdgeSource,
) -> Result<BridgeData, BridgeError> {
    let kh = build_kh_cube(d);
    let mut kr = reduce_all(d)?;
    let tau = compute_tau(d, base_points)?;
    let edges = match source {
        EdgeSource::Fast => {
            calibrate_generators(d, &mut kr, &tau.values)?;
            fast_edges(d, &kr, &tau.values)?
        }
        EdgeSource::Oracle => oracle_edges(d, &kr)?,
    };
    let generators = propagate_generators(&kr, &edges, &tau)?;
    let thetas = kr
        .vertices
        .iter()
        .zip(&generators.generators)
        .map(|(v, g)| theta(v, &tau, g))
        .collect();
    Ok(BridgeData {
        kh,
        kr,
        tau,
        edges,
        generators,
        thetas,
    })
}

/// Degree bookkeeping at one vertex: homological degrees agree and `theta`
/// negates quantum degrees, with the generator in degree
/// `-s - r - n_+ + 2 n_-`.
fn vertex_degree_failure(d: &LinkDiagram, kh: &KhVertexSpace, kr: &ReducedVertex, theta: &SparseMatrix) -> Option<String> {
    let r = kh.vertex.weight() as i64;
    let expected_generator = -(kh.s() as i64) - r - d.n_plus() as i64 + 2 * d.n_minus() as i64;
    if kh.homological_degree != kr.homological_degree() {
        return Some(format!(
            "{}: homological degrees {} vs {}",
            kr.vertex,
            kh.homological_degree,
            kr.homological_degree()
        ));
    }
    if kr.q_degree(0) != expected_generator {
        return Some(format!("{}: generator degree {} vs {expected_generator}", kr.vertex, kr.q_degree(0)));
    }
    for (mask, col) in theta.columns.iter().enumerate() {
        if let Some(row) = col.keys().find(|&&row| kr.q_degree(row) != -kh.q_degree(mask)) {
            return Some(format!(
                "{}: basis {mask} in degree {} maps to degree {}",
                kr.vertex,
                kh.q_degree(mask),
                kr.q_degree(*row)
            ));
        }
    }
    None
}

/// `psi_{sigma(e)} theta_v = theta_{v'} phi_e` on every edge with equal
/// signs, plus bijectivity and degree bookkeeping of every `theta_v`.
pub fn verify_proposition(d: &LinkDiagram, data: &BridgeData) -> Vec<Check> {
    let mut checks = Vec::new();
    let bad_theta: Vec<String> = data
        .thetas
        .iter()
        .zip(&data.kr.vertices)
        .filter(|(t, _)| !is_monomial_bijection(t))
        .map(|(_, v)| v.vertex.to_string())
        .collect();
    checks.push(Check::new(
        "theta bijective",
        bad_theta.is_empty(),
        if bad_theta.is_empty() {
            format!("all {} vertex maps are monomial bijections", data.thetas.len())
        } else {
            format!("not bijective at {}", bad_theta.join(", "))
        },
    ));
    let degree_failures: Vec<String> = data
        .kh
        .vertices
        .iter()
        .zip(&data.kr.vertices)
        .zip(&data.thetas)
        .filter_map(|((kh, kr), t)| vertex_degree_failure(d, kh, kr, t))
        .collect();
    checks.push(Check::new(
        "degrees",
        degree_failures.is_empty(),
        if degree_failures.is_empty() {
            "homological degrees agree and quantum degrees negate at every vertex".to_string()
        } else {
            degree_failures.join("; ")
        },
    ));
    let mut failures = Vec::new();
    for (phi, psi) in data.kh.edges.iter().zip(&data.edges) {
        debug_assert_eq!(phi.edge, psi.edge);
        let (from, to) = (phi.edge.from, phi.edge.to);
        let mut phi_matrix = SparseMatrix::zero(data.kh.vertices[to].dim(), data.kh.vertices[from].dim());
        for mask in 0..data.kh.vertices[from].dim() {
            for (row, c) in phi.apply_basis(mask) {
                phi_matrix.add_entry(row, mask, &c);
            }
        }
        let left = psi.matrix.mul(&data.thetas[from]);
        let right = data.thetas[to].mul(&phi_matrix);
        if left != right {
            failures.push(format!("{} -> {}: squares differ", psi.source, psi.target));
        } else if phi.sign != psi.sign {
            failures.push(format!("{} -> {}: edge signs differ", psi.source, psi.target));
        }
    }
    checks.push(Check::new(
        "identifying cubes",
        failures.is_empty(),
        if failures.is_empty() {
            format!("all {} edges commute with theta", data.edges.len())
        } else {
            failures.join("; ")
        },
    ));
    checks
}

/// Both homologies, their comparison, and the Euler characteristic check.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TheoremReport {
    pub kh: BigradedDimTable,
    pub kr: BigradedDimTable,
    pub checks: Vec<Check>,
}

/// `dim H^{i,j} = dim H_2^{i,-j}`, plus the graded Euler characteristics of
/// both tables against the Kauffman-bracket state sum.
pub fn verify_theorem(d: &LinkDiagram, data: &BridgeData) -> Result<TheoremReport, BridgeError> {
    let kh = crate::khcube::assemble_kh_complex(&data.kh).homology()?;
    let kr = kr_homology(&data.kr, &data.edges)?;
    let mirrored = kr.q_mirror();
    let mut checks = vec![Check::new(
        "homology isomorphic",
        kh == mirrored,
        format!("Kh {} ; KR mirrored {}", kh.poincare(), mirrored.poincare()),
    )];
    let jones = kauffman_bracket_jones(d);
    let kh_chi = kh.euler_characteristic();
    let kr_chi = kr.euler_characteristic().invert_q();
    checks.push(Check::new(
        "euler characteristic",
        kh_chi == jones && kr_chi == jones,
        format!("state sum {jones}; Kh {kh_chi}; KR mirrored {kr_chi}"),
    ));
    Ok(TheoremReport { kh, kr, checks })
}

/// The full comparison: proposition checks then theorem checks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VerificationReport {
    pub base_points: Vec<usize>,
    pub theorem: TheoremReport,
    pub checks: Vec<Check>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }

    pub fn outcomes(&self) -> Vec<(String, bool)> {
        self.checks.iter().map(|c| (c.name.clone(), c.passed())).collect()
    }
}

/// Builds both cubes and runs every check. Failures of the construction
/// itself (inexact division, inconsistent generators) are reported as
/// failed checks rather than errors.
pub fn verify(
    d: &LinkDiagram,
    base_points: Option<&[usize]>,
    source: EdgeSource,
) -> Result<VerificationReport, BridgeError> {
    let data = match build_bridge(d, base_points, source) {
        Ok(data) => data,
        Err(e @ (BridgeError::DivisionNotExact { .. } | BridgeError::InconsistentGenerator { .. })) => {
            let kh = crate::khcube::khovanov_homology(d)?;
            return Ok(VerificationReport {
                base_points: compute_tau(d, base_points)?.base_points,
                theorem: TheoremReport {
                    kh,
                    kr: BigradedDimTable::default(),
                    checks: Vec::new(),
                },
                checks: vec![Check::new("generators", false, e.to_string())],
            });
        }
        Err(e) => return Err(e),
    };
    let mut checks = vec![Check::new(
        "generators",
        true,
        format!(
            "{} generators, {} edges checked for consistency",
            data.generators.generators.len(),
            data.generators.checked_edges.len()
        ),
    )];
    checks.extend(verify_proposition(d, &data));
    let theorem = verify_theorem(d, &data)?;
    checks.extend(theorem.checks.iter().cloned());
    Ok(VerificationReport {
        base_points: data.tau.base_points.clone(),
        theorem,
        checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagram::{builtin, parse_pd};

    #[test]
    fn sigma_examples() {
        let t = builtin("trefoil").unwrap();
        let v = SmoothingVertex(vec![1, 0, 1]);
        assert_eq!(sigma(&t, &v), ResolutionVertex(vec![1, 0, 1]));
        let h = builtin("hopf-").unwrap();
        assert_eq!(sigma(&h, &SmoothingVertex(vec![0, 0])), ResolutionVertex(vec![-1, -1]));
    }

    #[test]
    fn base_points_have_tau_one() {
        for name in ["unknot", "unlink2", "hopf+", "trefoil", "figure8"] {
            let d = builtin(name).unwrap();
            let tau = compute_tau(&d, None).unwrap();
            assert_eq!(tau.base_points.len(), d.shadow_components().len());
            for &w in &tau.base_points {
                assert_eq!(tau.tau(w), 1);
                assert!(tau.paths[w].steps.is_empty());
            }
            assert!(tau.paths.iter().all(admissible));
        }
    }

    #[test]
    fn wrong_base_points_are_rejected() {
        let d = builtin("hopf+").unwrap();
        assert!(matches!(
            compute_tau(&d, Some(&[0])),
            Err(BridgeError::BasePointCount { expected: 1, got: 1 }) | Ok(_)
        ));
        let d = builtin("unlink2").unwrap();
        assert!(matches!(
            compute_tau(&d, Some(&[0])),
            Err(BridgeError::BasePointCount { expected: 2, got: 1 })
        ));
        assert!(matches!(compute_tau(&d, Some(&[0, 7])), Err(BridgeError::BadBasePoint(7))));
    }

    #[test]
    fn trefoil_paths_agree_exhaustively() {
        let d = builtin("trefoil").unwrap();
        let tau = compute_tau(&d, None).unwrap();
        let report = tau_multipath_check(&d, &tau, usize::MAX);
        assert!(report.exhaustive);
        assert!(report.passed(), "{:?}", report.conflicts);
        assert!(report.paths_checked >= d.n_marks());
    }

    #[test]
    fn trial_cap_stops_enumeration() {
        let d = builtin("figure8").unwrap();
        let tau = compute_tau(&d, None).unwrap();
        let report = tau_multipath_check(&d, &tau, 5);
        assert!(!report.exhaustive);
        assert_eq!(report.paths_checked, 5);
    }

    #[test]
    fn outgoing_strands_at_a_crossing_have_opposite_tau() {
        for name in ["hopf+", "hopf-", "trefoil", "figure8", "torus7"] {
            let d = builtin(name).unwrap();
            let tau = compute_tau(&d, None).unwrap();
            for cr in d.crossings() {
                let [i, j, _, _] = cr.wide_edge_roles();
                assert_eq!(tau.tau(i) * tau.tau(j), -1, "{name}");
            }
        }
    }

    #[test]
    fn moving_base_points_rescales_each_component() {
        let d = builtin("hopf+").unwrap();
        let a = compute_tau(&d, None).unwrap();
        let b = compute_tau(&d, Some(&alternative_base_points(&d))).unwrap();
        for comp in d.shadow_components() {
            let ratio = a.tau(comp[0]) * b.tau(comp[0]);
            assert!(comp.iter().all(|&m| a.tau(m) * b.tau(m) == ratio));
        }
    }

    #[test]
    fn ident_signs_are_products_of_tau() {
        for name in ["hopf-", "trefoil", "figure8"] {
            let d = builtin(name).unwrap();
            let tau = compute_tau(&d, None).unwrap();
            for v in reduce_all(&d).unwrap().vertices {
                for (z, &(c, sign)) in v.ident.iter().enumerate() {
                    assert_eq!(sign, tau.tau(z) * tau.tau(v.reps[c]), "{name} {} z{z}", v.vertex);
                }
            }
        }
    }

    #[test]
    fn crossingless_unknot_has_unit_generator() {
        let d = parse_pd("O[1]").unwrap();
        let data = build_bridge(&d, None, EdgeSource::Oracle).unwrap();
        assert_eq!(data.generators.generators, vec![SparseVec::from([(0, Q::one())])]);
        // x maps to tau(z_1) z_1 g
        assert_eq!(data.thetas[0].get(1, 1), Q::one());
        assert_eq!(data.thetas[0].get(0, 0), Q::one());
    }

    #[test]
    fn kink_split_divides_exactly() {
        let d = builtin("unknot-kink-").unwrap();
        let data = build_bridge(&d, None, EdgeSource::Oracle).unwrap();
        assert_eq!(data.generators.generators.len(), 2);
        assert!(data.edges[0].kind == EdgeKind::Split { from: 0, a: 0, b: 1 });
    }

    #[test]
    fn trefoil_generators_are_consistent() {
        let d = builtin("trefoil").unwrap();
        let data = build_bridge(&d, None, EdgeSource::Oracle).unwrap();
        assert_eq!(data.generators.generators.len(), 8);
        // seven tree edges define generators, the other five are checks
        assert_eq!(data.generators.checked_edges.len(), 5);
        for (v, g) in data.kr.vertices.iter().zip(&data.generators.generators) {
            assert_eq!(g.len(), 1);
            assert!(g.contains_key(&0), "{}", v.vertex);
        }
    }

    #[test]
    fn theta_sends_ones_to_the_generator() {
        let d = builtin("figure8").unwrap();
        let data = build_bridge(&d, None, EdgeSource::Fast).unwrap();
        for (t, g) in data.thetas.iter().zip(&data.generators.generators) {
            assert_eq!(&t.columns[0], g);
            assert!(is_monomial_bijection(t));
        }
    }

    #[test]
    fn trefoil_and_figure8_verify() {
        for name in ["trefoil", "figure8"] {
            let d = builtin(name).unwrap();
            for source in [EdgeSource::Fast, EdgeSource::Oracle] {
                let report = verify(&d, None, source).unwrap();
                assert!(report.passed(), "{name}: {:?}", report.checks);
                assert_eq!(report.theorem.kh, report.theorem.kr.q_mirror());
            }
        }
    }

    #[test]
    fn broken_edge_map_is_detected() {
        let d = builtin("hopf+").unwrap();
        let data = build_bridge(&d, None, EdgeSource::Fast).unwrap();
        let doubled = |k: usize| {
            let mut edges = data.edges.clone();
            edges[k].matrix = edges[k].matrix.scale(&Q::from_integer(2.into()));
            edges
        };
        // a tree edge: generators absorb the factor, the square does not
        let mut broken = build_bridge(&d, None, EdgeSource::Fast).unwrap();
        broken.edges = doubled(0);
        assert!(verify_proposition(&d, &broken).iter().any(|c| !c.passed()));
        // the only non-tree edge: propagation itself notices
        let err = propagate_generators(&data.kr, &doubled(3), &data.tau);
        assert!(matches!(err, Err(BridgeError::InconsistentGenerator { .. })), "{err:?}");
    }
}
