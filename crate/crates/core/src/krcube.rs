//! The Khovanov–Rozansky sl(2) cube of resolutions.
//!
//! Every arc `a` of the diagram carries its mark `z_a` just after it leaves
//! a crossing and a helper mark `h_a = n_marks + a` just before it arrives,
//! so that the four variables around each crossing are distinct. At a
//! resolution vertex the factorization `C_2(Gamma_v)` is the tensor product
//! of one two-row block per crossing (rows `2c`, `2c + 1`), followed by one
//! arc row `C_2(L^{h_a}_{z_a})` per arc. Reduction eliminates every row except
//! one `(3 r^2, 0)` per circle, leaving `Q[r_1..r_k]/(r_i^2){-k}`.
//!
//! Variables are indexed from 0 in code and printed from 1 (`z1` is
//! variable 0), so marks print with the labels of their arcs.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::diagram::{DiagramError, LinkDiagram, ResolutionVertex, Sign, SmoothingVertex, TrivalentGraph};
use crate::khcube::{assemble_cube, classify_edge, cube_edges, CubeEdge, EdgeKind};
use crate::koszul::{
    arc_row, chi0, chi1, wide_edge_rows, Chain, CrossingVars, KoszulError, KoszulMF, KoszulRow,
    Reduction, Side, State,
};
use crate::linalg::{add_to, BigradedComplex, BigradedDimTable, LinalgError, SparseMatrix, SparseVec};
use crate::poly::{Monomial, MultiPoly, Var, Q};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KrError {
    #[error(transparent)]
    Diagram(#[from] DiagramError),
    #[error(transparent)]
    Koszul(#[from] KoszulError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("reduction stuck at vertex {vertex}: {reason}")]
    ReductionStuck { vertex: String, reason: String },
    #[error("vertices {0} and {1} are not joined by a cube edge")]
    NotAdjacent(String, String),
    #[error("edge maps disagree with the cube structure: {0}")]
    SignInconsistency(String),
    #[error("generator calibration failed: {0}")]
    Calibration(String),
}

/// The helper mark placed just before the head of `arc`.
pub fn helper_mark(d: &LinkDiagram, arc: usize) -> Var {
    d.n_marks() + arc
}

/// Variables of crossing `c` in the roles of its local factorizations.
pub fn crossing_vars(d: &LinkDiagram, c: usize) -> CrossingVars {
    let [i, j, k, l] = d.crossings()[c].wide_edge_roles();
    CrossingVars {
        i,
        j,
        k: helper_mark(d, k),
        l: helper_mark(d, l),
    }
}

/// `p_v = -sum v_i + n_- - n_+`.
pub fn p_shift(d: &LinkDiagram, v: &ResolutionVertex) -> i64 {
    -v.height() + d.n_minus() as i64 - d.n_plus() as i64
}

/// `(-1)^{sum_{i < j} (v'_i mod 2)}`.
pub fn leibniz_sign(target: &ResolutionVertex, j: usize) -> i32 {
    let odd = target.0[..j].iter().filter(|&&x| x.rem_euclid(2) == 1).count();
    if odd % 2 == 0 {
        1
    } else {
        -1
    }
}

/// What a row of the vertex factorization came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RowTag {
    /// Row `0` or `1` of the wide edge at a crossing.
    WideEdge(usize, u8),
    /// Row `0` or `1` of the two arcs through an unresolved crossing.
    Pass(usize, u8),
    /// The arc row between `h_a` and `z_a`, or `(z_a, z_a)` for a loop.
    Arc(usize),
}

impl fmt::Display for RowTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RowTag::WideEdge(c, r) => write!(f, "wide edge {c} row {r}"),
            RowTag::Pass(c, r) => write!(f, "pass {c} arc {r}"),
            RowTag::Arc(a) => write!(f, "arc {a}"),
        }
    }
}

/// `C_2(Gamma_v)` before reduction, with a tag for each row.
pub fn build_vertex_mf(d: &LinkDiagram, v: &ResolutionVertex) -> Result<(KoszulMF, Vec<RowTag>), KrError> {
    d.check_resolution(v)?;
    let mut rows: Vec<KoszulRow> = Vec::new();
    let mut tags = Vec::new();
    for c in 0..d.n_crossings() {
        let cv = crossing_vars(d, c);
        if d.has_wide_edge(c, v.0[c]) {
            rows.extend(wide_edge_rows(cv.i, cv.j, cv.k, cv.l));
            tags.extend([RowTag::WideEdge(c, 0), RowTag::WideEdge(c, 1)]);
        } else {
            rows.extend(cv.gamma0().rows);
            tags.extend([RowTag::Pass(c, 0), RowTag::Pass(c, 1)]);
        }
    }
    for (a, arc) in d.arcs().iter().enumerate() {
        if arc.is_loop() {
            rows.push(arc_row(a, a));
        } else {
            rows.push(arc_row(helper_mark(d, a), a));
        }
        tags.push(RowTag::Arc(a));
    }
    Ok((KoszulMF::new(rows), tags))
}

/// One recorded elimination.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TraceStep {
    pub tag: String,
    pub row: usize,
    pub side: Side,
    pub var: Var,
    pub image: String,
}

impl fmt::Display for TraceStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let side = match self.side {
            Side::A => "a",
            Side::B => "b",
        };
        write!(
            f,
            "row {} ({}) {}-side: z{} -> {}",
            self.row,
            self.tag,
            side,
            self.var + 1,
            self.image
        )
    }
}

/// Everything needed to move chains between `C_2(Gamma_v)` and its reduction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VertexTrace {
    pub full: KoszulMF,
    pub tags: Vec<RowTag>,
    pub reduced: KoszulMF,
    pub reduction: Reduction,
    pub steps: Vec<TraceStep>,
}

/// `H_2(Gamma_v){p_v} = Q[r_1..r_k]/(r_i^2){-k + p_v}`. Basis vectors are
/// masks over circles: bit `c` set means the factor `r_c`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ReducedVertex {
    pub vertex: ResolutionVertex,
    /// Circles of the graph with wide edges erased, as mark lists.
    pub circles: Vec<Vec<usize>>,
    /// Smallest mark of each circle.
    pub reps: Vec<usize>,
    /// For each mark: (circle index, sign) with `z = sign * r_circle`.
    pub ident: Vec<(usize, i32)>,
    /// `-k + p_v`.
    pub q_shift_total: i64,
    /// Z/2 degree of the generator `|1...1>`.
    pub z2_class: u8,
    /// Multiple of `|1...1>` chosen as the module generator.
    #[serde(serialize_with = "serialize_q")]
    pub generator_coeff: Q,
}

fn serialize_q<S: serde::Serializer>(c: &Q, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&c.to_string())
}

impl ReducedVertex {
    pub fn k(&self) -> usize {
        self.reps.len()
    }

    pub fn dim(&self) -> usize {
        1 << self.k()
    }

    pub fn homological_degree(&self) -> i64 {
        self.vertex.height()
    }

    /// Quantum degree of the basis vector `mask` including all shifts.
    pub fn q_degree(&self, mask: usize) -> i64 {
        2 * mask.count_ones() as i64 + self.q_shift_total
    }

    /// `sign * r_c` for a mark.
    pub fn ident_poly(&self, mark: usize) -> MultiPoly {
        let (c, s) = self.ident[mark];
        MultiPoly::var(self.reps[c]).scale(&Q::from_integer(s.into()))
    }

    /// The monomial `prod r_c` of a mask.
    pub fn monomial(&self, mask: usize) -> MultiPoly {
        let pairs = (0..self.k())
            .filter(|c| mask >> c & 1 == 1)
            .map(|c| (self.reps[c], 1))
            .collect();
        MultiPoly::term(Q::one(), Monomial::from_pairs(pairs))
    }

    /// Coordinates of a polynomial in the reps, reduced mod the squares.
    pub fn coordinates(&self, p: &MultiPoly) -> Result<SparseVec, KrError> {
        let mut out = SparseVec::new();
        for (m, c) in p.truncate_squares(&self.reps).terms() {
            let mut mask = 0usize;
            for &(var, e) in m.factors() {
                let idx = self.reps.iter().position(|&r| r == var).ok_or_else(|| {
                    KrError::SignInconsistency(format!(
                        "variable z{var} is not a representative at {}",
                        self.vertex
                    ))
                })?;
                debug_assert_eq!(e, 1);
                mask |= 1 << idx;
            }
            add_to(&mut out, mask, c);
        }
        Ok(out)
    }
}

fn stuck(v: &ResolutionVertex, reason: impl Into<String>) -> KrError {
    KrError::ReductionStuck {
        vertex: v.to_string(),
        reason: reason.into(),
    }
}

fn max_var(p: &MultiPoly) -> Option<Var> {
    p.vars().into_iter().max()
}

/// Reduces `C_2(Gamma_v)`: wide edges in crossing order (first row on its
/// `a` side, second row on its `b` side), then the remaining arc rows in
/// order on their `b` side, always solving for the largest variable.
pub fn reduce_vertex(d: &LinkDiagram, v: &ResolutionVertex) -> Result<(ReducedVertex, VertexTrace), KrError> {
    let graph: TrivalentGraph = d.resolve(v)?;
    let (full, tags) = build_vertex_mf(d, v)?;
    let mut mf = full.clone();
    let mut live: Vec<RowTag> = tags.clone();
    let mut reduction = Reduction::default();
    let mut steps = Vec::new();

    let mut eliminate = |mf: &mut KoszulMF, live: &mut Vec<RowTag>, j: usize, side: Side| -> Result<bool, KrError> {
        let row = &mf.rows[j];
        let entry = match side {
            Side::A => &row.a,
            Side::B => &row.b,
        };
        if entry.is_zero() {
            return Ok(false);
        }
        let t = max_var(entry).ok_or_else(|| stuck(v, format!("constant entry in {}", live[j])))?;
        let (lambda, rest) = entry.linear_split(t).map_err(KoszulError::from)?;
        // an entry like 2z would identify z with 0
        if rest.is_zero() && side == Side::B {
            return Err(stuck(v, format!("{} forces z{} = 0 (lambda {lambda})", live[j], t + 1)));
        }
        let (next, elim) = mf.eliminate_row(j, side, t)?;
        steps.push(TraceStep {
            tag: live[j].to_string(),
            row: j,
            side,
            var: t,
            image: elim.image.to_string(),
        });
        reduction.steps.push(elim);
        *mf = next;
        live.remove(j);
        Ok(true)
    };

    for c in 0..d.n_crossings() {
        if !d.has_wide_edge(c, v.0[c]) {
            continue;
        }
        let j = live.iter().position(|t| *t == RowTag::WideEdge(c, 0)).expect("wide edge row");
        if !eliminate(&mut mf, &mut live, j, Side::A)? {
            return Err(stuck(v, format!("wide edge {c}: first row has zero a-entry")));
        }
        let j = live.iter().position(|t| *t == RowTag::WideEdge(c, 1)).expect("wide edge row");
        if !eliminate(&mut mf, &mut live, j, Side::B)? {
            return Err(stuck(v, format!("wide edge {c}: second row has zero b-entry")));
        }
    }
    let mut j = 0;
    while j < live.len() {
        if !eliminate(&mut mf, &mut live, j, Side::B)? {
            j += 1;
        }
    }

    // normal form: one (c r^2, 0) row per circle
    let circles = graph.circles.circles.clone();
    let reps: Vec<usize> = circles.iter().map(|c| *c.iter().min().expect("nonempty circle")).collect();
    if mf.rows.len() != circles.len() {
        return Err(stuck(
            v,
            format!("{} rows remain for {} circles", mf.rows.len(), circles.len()),
        ));
    }
    let mut row_reps = Vec::new();
    for row in &mf.rows {
        let vars = row.a.vars();
        if !row.b.is_zero() || vars.len() != 1 || row.a.num_terms() != 1 || row.a.degree_in(vars[0]) != 2 {
            return Err(stuck(v, format!("row ({} | {}) is not of the form (c r^2, 0)", row.a, row.b)));
        }
        row_reps.push(vars[0]);
    }
    let mut sorted = row_reps.clone();
    sorted.sort();
    let mut expected = reps.clone();
    expected.sort();
    if sorted != expected {
        return Err(stuck(v, format!("surviving variables {row_reps:?} are not the circle minima {reps:?}")));
    }
    let mut ident = vec![(usize::MAX, 0); d.n_marks()];
    for (ci, circle) in circles.iter().enumerate() {
        for &m in circle {
            let img = reduction.image_of(m);
            let r = MultiPoly::var(reps[ci]);
            let sign = if img == r {
                1
            } else if img == -&r {
                -1
            } else {
                return Err(stuck(v, format!("z{} reduces to {img}, not +-z{}", m + 1, reps[ci] + 1)));
            };
            ident[m] = (ci, sign);
        }
    }
    let k = circles.len();
    let top: State = if k == 0 { 0 } else { (1u64 << k) - 1 };
    let base_degree = mf.state_degree(top);
    if base_degree != -(k as i64) {
        return Err(stuck(v, format!("generator has degree {base_degree}, expected {}", -(k as i64))));
    }
    let reduced_vertex = ReducedVertex {
        vertex: v.clone(),
        circles,
        reps,
        ident,
        q_shift_total: -(k as i64) + p_shift(d, v),
        z2_class: mf.state_parity(top),
        generator_coeff: Q::one(),
    };
    let trace = VertexTrace {
        full,
        tags,
        reduced: mf,
        reduction,
        steps,
    };
    Ok((reduced_vertex, trace))
}

/// `psi_e` on reduced bases, with the Leibniz sign kept separately.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReducedEdgeMap {
    pub edge: CubeEdge,
    pub source: ResolutionVertex,
    pub target: ResolutionVertex,
    pub kind: EdgeKind,
    /// Columns indexed by source masks, rows by target masks.
    pub matrix: SparseMatrix,
    pub sign: i32,
}

impl ReducedEdgeMap {
    pub fn apply_basis(&self, mask: usize) -> SparseVec {
        self.matrix.columns[mask].clone()
    }
}

fn check_adjacent(d: &LinkDiagram, src: &ReducedVertex, tgt: &ReducedVertex) -> Result<usize, KrError> {
    let not_adjacent = || KrError::NotAdjacent(src.vertex.to_string(), tgt.vertex.to_string());
    if src.vertex.0.len() != d.n_crossings() || tgt.vertex.0.len() != d.n_crossings() {
        return Err(not_adjacent());
    }
    let diff: Vec<usize> = (0..d.n_crossings()).filter(|&c| src.vertex.0[c] != tgt.vertex.0[c]).collect();
    match diff[..] {
        [c] if tgt.vertex.0[c] == src.vertex.0[c] + 1 => Ok(c),
        _ => Err(not_adjacent()),
    }
}

fn edge_kind(d: &LinkDiagram, src: &ReducedVertex, tgt: &ReducedVertex) -> EdgeKind {
    let sp = crate::diagram::CirclePartition {
        circles: src.circles.clone(),
    };
    let tp = crate::diagram::CirclePartition {
        circles: tgt.circles.clone(),
    };
    classify_edge(&sp, &tp, d.n_marks()).0
}

fn cube_edge(d: &LinkDiagram, src: &ReducedVertex, c: usize) -> CubeEdge {
    let from = d.sigma_inverse(&src.vertex).index();
    CubeEdge {
        from,
        to: from | 1 << c,
        crossing: c,
    }
}

/// The exact reduced matrix of `psi_e` in the generator bases of the two
/// vertices: every source basis vector is lifted
/// through the source reduction, hit by `chi_0` or `chi_1` on the two rows
/// of the changed crossing, and pushed down through the target reduction.
/// Only the `|1...1>` coefficient survives in homology.
pub fn oracle_edge_map(
    d: &LinkDiagram,
    src: (&ReducedVertex, &VertexTrace),
    tgt: (&ReducedVertex, &VertexTrace),
) -> Result<ReducedEdgeMap, KrError> {
    let (sv, _) = src;
    let (tv, _) = tgt;
    let c = check_adjacent(d, sv, tv)?;
    let masks: Vec<usize> = (0..sv.dim()).collect();
    let columns = oracle_columns(d, src, tgt, &masks)?;
    let rescale = &sv.generator_coeff / &tv.generator_coeff;
    let mut matrix = SparseMatrix::zero(tv.dim(), sv.dim());
    for (mask, column) in columns.into_iter().enumerate() {
        for (t, coeff) in column {
            matrix.add_entry(t, mask, &(coeff * &rescale));
        }
    }
    Ok(ReducedEdgeMap {
        edge: cube_edge(d, sv, c),
        source: sv.vertex.clone(),
        target: tv.vertex.clone(),
        kind: edge_kind(d, sv, tv),
        matrix,
        sign: leibniz_sign(&tv.vertex, c),
    })
}

/// The oracle images of selected source basis vectors `monomial * |1...1>`,
/// in target coordinates relative to `|1...1>` (generator coefficients are
/// not applied).
pub fn oracle_columns(
    d: &LinkDiagram,
    src: (&ReducedVertex, &VertexTrace),
    tgt: (&ReducedVertex, &VertexTrace),
    masks: &[usize],
) -> Result<Vec<SparseVec>, KrError> {
    let (sv, st) = src;
    let (tv, tt) = tgt;
    let c = check_adjacent(d, sv, tv)?;
    let cv = crossing_vars(d, c);
    let chi = match d.crossings()[c].sign {
        Sign::Positive => chi0(cv),
        Sign::Negative => chi1(cv),
    };
    let src_top: State = (1u64 << sv.k()) - 1;
    let tgt_top: State = (1u64 << tv.k()) - 1;
    // every map below is linear over the full ring, so coefficients can be
    // pushed into the target's truncated ring as soon as they appear
    let to_target = full_substitution(d, tt);
    let reduce = |p: MultiPoly| p.substitute(&to_target).truncate_squares(&tv.reps);
    let kept = kept_state(tt, tv.k());
    let local_rows: State = 0b11 << (2 * c);
    let stages = row_stages(st);
    let mut out = Vec::with_capacity(masks.len());
    for &mask in masks {
        let mut up = Chain::term(src_top, reduce(sv.monomial(mask)));
        for (i, step) in st.reduction.steps.iter().enumerate().rev() {
            up = step.backward_mod(&up, &reduce);
            // each of the i remaining lifts flips at most one existing bit,
            // and only the states next to `kept` survive the final projection
            let rows = &stages[i];
            let mut pruned = Chain::zero();
            for (state, p) in up.iter() {
                let distance = rows
                    .iter()
                    .enumerate()
                    .filter(|&(pos, &full)| {
                        local_rows >> full & 1 == 0 && (state >> pos & 1) != (kept >> full & 1)
                    })
                    .count();
                if distance <= i {
                    pruned.add(state, p.clone());
                }
            }
            up = pruned;
        }
        let across = chi.apply_local(2 * c, &up);
        let mut local = Chain::zero();
        for (s, p) in across.iter() {
            local.add(s, reduce(p.clone()));
        }
        let down = tt.reduction.forward(&local);
        out.push(tv.coordinates(&down.coeff(tgt_top))?);
    }
    Ok(out)
}

/// The only state of the full factorization that the reduction's forward
/// map does not discard on the way to `|1...1>`.
fn kept_state(trace: &VertexTrace, k: usize) -> State {
    let mut state: State = if k == 0 { 0 } else { (1 << k) - 1 };
    for e in trace.reduction.steps.iter().rev() {
        state = crate::koszul::insert_bit(state, e.row, e.side == Side::A);
    }
    state
}

/// For each elimination step, the full-factorization rows present just
/// before it, in their current order.
fn row_stages(trace: &VertexTrace) -> Vec<Vec<usize>> {
    let mut rows: Vec<usize> = (0..trace.full.n_rows()).collect();
    let mut out = Vec::new();
    for e in &trace.reduction.steps {
        out.push(rows.clone());
        rows.remove(e.row);
    }
    out
}

/// For a split at crossing `c`, two marks next to the crossing on the two
/// new circles of the target: the outgoing arc `i`, and `j` or `l`
/// (whichever lies on the other circle), both one turn away from `i`.
/// `None` when the edge is a merge.
pub fn split_marks(d: &LinkDiagram, tgt: &ReducedVertex, c: usize) -> Option<(usize, usize)> {
    let [i, j, _, l] = d.crossings()[c].wide_edge_roles();
    let y = d.arcs()[i].mark(i);
    let circle = tgt.ident[y].0;
    [j, l]
        .into_iter()
        .map(|a| d.arcs()[a].mark(a))
        .find(|&z| tgt.ident[z].0 != circle)
        .map(|z| (y, z))
}

/// The split multiplier `tau(y) y + tau(z) z`, in target representatives.
/// Since `ident(z) = tau(z) tau(rep) rep`, this is `tau(r_a) r_a + tau(r_b)
/// r_b` for the two new circles, independent of which marks are chosen.
pub fn split_multiplier(tgt: &ReducedVertex, a: usize, b: usize, tau: &[i32]) -> MultiPoly {
    let term = |circle: usize| {
        let r = tgt.reps[circle];
        MultiPoly::var(r).scale(&Q::from_integer(tau[r].into()))
    };
    &term(a) + &term(b)
}

/// Closed form of `psi_e` in the generator bases: a merge carries the
/// generator to the generator, a split multiplies it by `tau(y) y + tau(z) z`;
/// everything else is the identification of marks through the two
/// reductions. `tau` holds one sign per mark. Exact once the generators are
/// calibrated by [`calibrate_generators`].
pub fn reduced_edge_map(
    d: &LinkDiagram,
    src: &ReducedVertex,
    tgt: &ReducedVertex,
    tau: &[i32],
) -> Result<ReducedEdgeMap, KrError> {
    let c = check_adjacent(d, src, tgt)?;
    let kind = edge_kind(d, src, tgt);
    let multiplier = match kind {
        EdgeKind::Merge { .. } => MultiPoly::constant(Q::one()),
        EdgeKind::Split { a, b, .. } => split_multiplier(tgt, a, b, tau),
    };
    let to_target = ident_substitution(tgt);
    let mut matrix = SparseMatrix::zero(tgt.dim(), src.dim());
    for mask in 0..src.dim() {
        let image = &src.monomial(mask).substitute(&to_target) * &multiplier;
        for (t, coeff) in tgt.coordinates(&image)? {
            matrix.add_entry(t, mask, &coeff);
        }
    }
    Ok(ReducedEdgeMap {
        edge: cube_edge(d, src, c),
        source: src.vertex.clone(),
        target: tgt.vertex.clone(),
        kind,
        matrix,
        sign: leibniz_sign(&tgt.vertex, c),
    })
}

/// Composite substitution of a vertex reduction on every variable,
/// helper marks included.
pub fn full_substitution(d: &LinkDiagram, trace: &VertexTrace) -> crate::poly::Substitution {
    let mut s = crate::poly::Substitution::identity();
    for var in 0..2 * d.n_marks() {
        s.insert(var, trace.reduction.image_of(var));
    }
    s
}

/// `z -> ident(z)` for every mark of the diagram.
pub fn ident_substitution(v: &ReducedVertex) -> crate::poly::Substitution {
    let mut s = crate::poly::Substitution::identity();
    for m in 0..v.ident.len() {
        s.insert(m, v.ident_poly(m));
    }
    s
}

/// All vertices of the cube, reduced, indexed like the ordinary cube.
pub struct KrCube {
    pub vertices: Vec<ReducedVertex>,
    pub traces: Vec<VertexTrace>,
}

pub fn reduce_all(d: &LinkDiagram) -> Result<KrCube, KrError> {
    let n = d.n_crossings();
    let results: Vec<Result<(ReducedVertex, VertexTrace), KrError>> = (0..1usize << n)
        .into_par_iter()
        .map(|idx| reduce_vertex(d, &d.sigma(&SmoothingVertex::from_index(idx, n))))
        .collect();
    let mut vertices = Vec::new();
    let mut traces = Vec::new();
    for r in results {
        let (v, t) = r?;
        vertices.push(v);
        traces.push(t);
    }
    Ok(KrCube { vertices, traces })
}

/// Oracle edge maps for every edge of the cube.
pub fn oracle_edges(d: &LinkDiagram, cube: &KrCube) -> Result<Vec<ReducedEdgeMap>, KrError> {
    cube_edges(d.n_crossings())
        .into_par_iter()
        .map(|e| {
            oracle_edge_map(
                d,
                (&cube.vertices[e.from], &cube.traces[e.from]),
                (&cube.vertices[e.to], &cube.traces[e.to]),
            )
        })
        .collect()
}

/// Closed-form edge maps for every edge of the cube.
pub fn fast_edges(d: &LinkDiagram, cube: &KrCube, tau: &[i32]) -> Result<Vec<ReducedEdgeMap>, KrError> {
    cube_edges(d.n_crossings())
        .into_par_iter()
        .map(|e| reduced_edge_map(d, &cube.vertices[e.from], &cube.vertices[e.to], tau))
        .collect()
}

/// Chooses the generator of every vertex by pushing the base generator
/// `|1...1>` at the all-zero smoothing along a spanning tree of the cube:
/// across a merge `g' = psi(g)`, across a split `g'` is the quotient of
/// `psi(g)` by `tau(y) y + tau(z) z`. Only the image of the generator is
/// computed through the full factorizations, one tree edge per vertex
/// (the edge clearing the lowest set bit). The remaining edges are not
/// used, so comparing them with [`reduced_edge_map`] is a real check.
pub fn calibrate_generators(d: &LinkDiagram, cube: &mut KrCube, tau: &[i32]) -> Result<(), KrError> {
    let n = d.n_crossings();
    let mut levels: Vec<Vec<usize>> = vec![Vec::new(); n + 1];
    for idx in 1..1usize << n {
        levels[idx.count_ones() as usize].push(idx);
    }
    cube.vertices[0].generator_coeff = Q::one();
    for level in &levels[1..] {
        let factors: Vec<Result<(usize, Q), KrError>> = level
            .par_iter()
            .map(|&to| {
                let from = to & (to - 1);
                let (sv, tv) = (&cube.vertices[from], &cube.vertices[to]);
                let column = oracle_columns(d, (sv, &cube.traces[from]), (tv, &cube.traces[to]), &[0])?
                    .pop()
                    .unwrap_or_default();
                let expected = match edge_kind(d, sv, tv) {
                    EdgeKind::Merge { .. } => MultiPoly::constant(Q::one()),
                    EdgeKind::Split { a, b, .. } => split_multiplier(tv, a, b, tau),
                };
                let expected = tv.coordinates(&expected)?;
                Ok((to, proportionality(&column, &expected).ok_or_else(|| {
                    KrError::Calibration(format!(
                        "image of the generator along {} -> {} is not a multiple of the closed form",
                        sv.vertex, tv.vertex
                    ))
                })?))
            })
            .collect();
        for f in factors {
            let (to, factor) = f?;
            let from = to & (to - 1);
            cube.vertices[to].generator_coeff = &cube.vertices[from].generator_coeff * &factor;
        }
    }
    Ok(())
}

/// The nonzero `m` with `v = m * w`, if any.
fn proportionality(v: &SparseVec, w: &SparseVec) -> Option<Q> {
    let (&key, wk) = w.iter().next()?;
    let m = v.get(&key)? / wk;
    if m.is_zero() || v.len() != w.len() {
        return None;
    }
    w.iter()
        .all(|(k, c)| v.get(k).is_some_and(|x| *x == c * &m))
        .then_some(m)
}

/// The `d_chi` complex on `H(C_2(D), d_mf)`.
pub fn assemble_kr_complex(cube: &KrCube, edges: &[ReducedEdgeMap]) -> BigradedComplex {
    let degrees = cube.vertices.iter().map(|v| v.homological_degree()).collect();
    let vertex_q: Vec<Vec<i64>> = cube
        .vertices
        .iter()
        .map(|v| (0..v.dim()).map(|m| v.q_degree(m)).collect())
        .collect();
    let plain: Vec<CubeEdge> = edges.iter().map(|e| e.edge).collect();
    assemble_cube(degrees, &vertex_q, &plain, |k| {
        let e = &edges[k];
        let s = Q::from_integer(e.sign.into());
        let mut out = Vec::new();
        for (col, entries) in e.matrix.columns.iter().enumerate() {
            for (row, c) in entries {
                out.push((*row, col, c * &s));
            }
        }
        out
    })
}

pub fn kr_homology(cube: &KrCube, edges: &[ReducedEdgeMap]) -> Result<BigradedDimTable, KrError> {
    Ok(assemble_kr_complex(cube, edges).homology()?)
}

/// Summary of a vertex for debugging output.
pub fn describe_vertex(v: &ReducedVertex) -> String {
    let mut parts = BTreeMap::new();
    for (m, &(c, s)) in v.ident.iter().enumerate() {
        parts.insert(m, format!("z{}={}z{}", m + 1, if s < 0 { "-" } else { "" }, v.reps[c] + 1));
    }
    format!(
        "{} k={} shift={} {}",
        v.vertex,
        v.k(),
        v.q_shift_total,
        parts.into_values().collect::<Vec<_>>().join(" ")
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagram::{builtin, parse_pd, SmoothingVertex};
    use crate::khcube::kauffman_bracket_jones;

    fn tau_all_plus(d: &LinkDiagram) -> Vec<i32> {
        vec![1; d.n_marks()]
    }

    #[test]
    fn p_shift_examples() {
        let unknot = parse_pd("O[1]").unwrap();
        assert_eq!(p_shift(&unknot, &ResolutionVertex(vec![])), 0);
        let kink_plus = builtin("unknot-kink+").unwrap();
        assert_eq!(p_shift(&kink_plus, &ResolutionVertex(vec![0])), -1);
        let kink_minus = builtin("unknot-kink-").unwrap();
        assert_eq!(p_shift(&kink_minus, &ResolutionVertex(vec![-1])), 2);
    }

    #[test]
    fn leibniz_examples() {
        assert_eq!(leibniz_sign(&ResolutionVertex(vec![1, 1, 0]), 0), 1);
        assert_eq!(leibniz_sign(&ResolutionVertex(vec![1, 0, -1, 0]), 3), 1);
        assert_eq!(leibniz_sign(&ResolutionVertex(vec![1, 0, 0]), 2), -1);
    }

    #[test]
    fn crossingless_unknot_reduces_to_one_circle() {
        let d = parse_pd("O[1]").unwrap();
        let (v, _) = reduce_vertex(&d, &ResolutionVertex(vec![])).unwrap();
        assert_eq!(v.k(), 1);
        assert_eq!(v.reps, vec![0]);
        assert_eq!(v.ident, vec![(0, 1)]);
        let mut qs: Vec<i64> = (0..v.dim()).map(|m| v.q_degree(m)).collect();
        qs.sort();
        assert_eq!(qs, vec![-1, 1]);
    }

    #[test]
    fn wide_edge_flips_the_sign_between_its_marks() {
        let d = builtin("unknot-kink+").unwrap();
        let (v, trace) = reduce_vertex(&d, &ResolutionVertex(vec![1])).unwrap();
        assert_eq!(v.k(), 1);
        assert_eq!(v.ident.len(), 2);
        assert_eq!(v.ident[0].1 * v.ident[1].1, -1);
        assert!(trace.steps.iter().any(|s| s.tag.starts_with("wide edge 0")));
    }

    #[test]
    fn circle_counts_match_the_smoothings() {
        for name in ["unknot-kink+", "unknot-kink-", "hopf+", "hopf-", "trefoil", "trefoil-mirror", "figure8"] {
            let d = builtin(name).unwrap();
            let cube = reduce_all(&d).unwrap();
            for (idx, v) in cube.vertices.iter().enumerate() {
                let s = SmoothingVertex::from_index(idx, d.n_crossings());
                assert_eq!(v.k(), d.smooth(&s).unwrap().len(), "{name} at {s}");
                assert_eq!(v.vertex, d.sigma(&s));
            }
        }
    }

    #[test]
    fn every_vertex_factorization_has_zero_potential() {
        let d = builtin("figure8").unwrap();
        for idx in 0..1usize << d.n_crossings() {
            let v = d.sigma(&SmoothingVertex::from_index(idx, d.n_crossings()));
            let (mf, tags) = build_vertex_mf(&d, &v).unwrap();
            assert!(mf.potential().is_zero());
            assert_eq!(tags.len(), mf.n_rows());
        }
    }

    #[test]
    fn z2_class_is_constant_across_the_cube() {
        for name in ["hopf+", "trefoil", "figure8"] {
            let cube = reduce_all(&builtin(name).unwrap()).unwrap();
            let first = cube.vertices[0].z2_class;
            assert!(cube.vertices.iter().all(|v| v.z2_class == first), "{name}");
        }
    }

    #[test]
    fn uncalibrated_oracle_has_the_expected_scalars() {
        // merges along positive crossings send |1...1> to -|1...1>
        let d = builtin("trefoil").unwrap();
        let cube = reduce_all(&d).unwrap();
        let e = oracle_edge_map(&d, (&cube.vertices[0], &cube.traces[0]), (&cube.vertices[1], &cube.traces[1])).unwrap();
        assert!(matches!(e.kind, EdgeKind::Merge { .. }));
        assert_eq!(e.apply_basis(0), SparseVec::from([(0, -Q::one())]));
    }

    #[test]
    fn non_adjacent_vertices_are_rejected() {
        let d = builtin("hopf+").unwrap();
        let cube = reduce_all(&d).unwrap();
        let err = oracle_edge_map(&d, (&cube.vertices[0], &cube.traces[0]), (&cube.vertices[3], &cube.traces[3]));
        assert!(matches!(err, Err(KrError::NotAdjacent(..))));
        let err = reduced_edge_map(&d, &cube.vertices[1], &cube.vertices[0], &tau_all_plus(&d));
        assert!(matches!(err, Err(KrError::NotAdjacent(..))));
    }

    fn calibrated(name: &str, tau: &[i32]) -> (LinkDiagram, KrCube) {
        let d = builtin(name).unwrap();
        let mut cube = reduce_all(&d).unwrap();
        calibrate_generators(&d, &mut cube, tau).unwrap();
        (d, cube)
    }

    #[test]
    fn closed_form_matches_oracle_on_hopf_links() {
        for name in ["hopf+", "hopf-"] {
            let d = builtin(name).unwrap();
            let tau = crate::bridge::compute_tau(&d, None).unwrap().values;
            let (d, cube) = calibrated(name, &tau);
            let fast = fast_edges(&d, &cube, &tau).unwrap();
            let oracle = oracle_edges(&d, &cube).unwrap();
            assert_eq!(fast, oracle, "{name}");
        }
    }

    #[test]
    fn edge_maps_preserve_shifted_degree() {
        let d = builtin("figure8").unwrap();
        let tau = crate::bridge::compute_tau(&d, None).unwrap().values;
        let (d, cube) = calibrated("figure8", &tau);
        for e in fast_edges(&d, &cube, &tau).unwrap() {
            let (s, t) = (&cube.vertices[e.edge.from], &cube.vertices[e.edge.to]);
            for (col, entries) in e.matrix.columns.iter().enumerate() {
                for row in entries.keys() {
                    assert_eq!(t.q_degree(*row), s.q_degree(col));
                }
            }
        }
    }

    #[test]
    fn trefoil_homology_and_euler_characteristic() {
        let d = builtin("trefoil").unwrap();
        let tau = crate::bridge::compute_tau(&d, None).unwrap().values;
        let (d, cube) = calibrated("trefoil", &tau);
        let edges = fast_edges(&d, &cube, &tau).unwrap();
        let complex = assemble_kr_complex(&cube, &edges);
        complex.check().unwrap();
        let h = complex.homology().unwrap();
        assert_eq!(h.poincare().to_string(), "q^-3 + q^-1 + t^2*q^-5 + t^3*q^-9");
        assert_eq!(h.euler_characteristic().invert_q(), kauffman_bracket_jones(&d));
    }

    #[test]
    fn unknot_homology() {
        let d = parse_pd("O[1]").unwrap();
        let cube = reduce_all(&d).unwrap();
        let h = kr_homology(&cube, &[]).unwrap();
        assert_eq!(h.get(0, -1), 1);
        assert_eq!(h.get(0, 1), 1);
        assert_eq!(h.total_dimension(), 2);
    }
}
