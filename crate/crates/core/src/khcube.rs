//! The ordinary Khovanov cube of resolutions and its chain complex.
//!
//! At a vertex `v` of `{0,1}^n` the space is `V^{(x) s(v)}` with one tensor
//! factor per circle of `D_v` (circles ordered by smallest mark). A basis
//! vector is a bit mask over circles: bit `c` set means `x` on circle `c`,
//! clear means `1`.

use num_traits::One;
use serde::Serialize;

use crate::diagram::{CirclePartition, LinkDiagram, Sign, SmoothingVertex};
use crate::linalg::{add_to, BigradedComplex, BigradedDimTable, Laurent, LinalgError, SparseMatrix, SparseVec};
use crate::poly::Q;

/// Edge of the cube: `from` and `to` differ at `crossing`, 0 -> 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CubeEdge {
    pub from: usize,
    pub to: usize,
    pub crossing: usize,
}

/// All `n 2^{n-1}` edges, ordered by source vertex index then crossing.
pub fn cube_edges(n: usize) -> Vec<CubeEdge> {
    let mut out = Vec::new();
    for from in 0..1usize << n {
        for c in 0..n {
            if from >> c & 1 == 0 {
                out.push(CubeEdge {
                    from,
                    to: from | 1 << c,
                    crossing: c,
                });
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct KhVertexSpace {
    pub vertex: SmoothingVertex,
    pub circles: CirclePartition,
    /// `r(v) + n_+ - 2 n_-`.
    pub q_shift: i64,
    /// `r(v) - n_-`.
    pub homological_degree: i64,
}

impl KhVertexSpace {
    pub fn s(&self) -> usize {
        self.circles.len()
    }

    pub fn dim(&self) -> usize {
        1 << self.s()
    }

    /// Quantum degree of the basis vector `mask`.
    pub fn q_degree(&self, mask: usize) -> i64 {
        self.s() as i64 - 2 * mask.count_ones() as i64 + self.q_shift
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EdgeKind {
    /// Source circles `a < b` fuse into target circle `into`.
    Merge { a: usize, b: usize, into: usize },
    /// Source circle `from` splits into target circles `a < b`.
    Split { from: usize, a: usize, b: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct KhEdgeMap {
    pub edge: CubeEdge,
    pub kind: EdgeKind,
    /// Target circle of each untouched source circle.
    pub circle_map: Vec<Option<usize>>,
    pub sign: i32,
}

/// Circles of `source` matched to circles of `target` across one edge.
pub fn classify_edge(source: &CirclePartition, target: &CirclePartition, n_marks: usize) -> (EdgeKind, Vec<Option<usize>>) {
    let tgt_of = target.circle_of(n_marks);
    let src_of = source.circle_of(n_marks);
    let images: Vec<Vec<usize>> = source
        .circles
        .iter()
        .map(|c| {
            let mut t: Vec<usize> = c.iter().map(|&m| tgt_of[m]).collect();
            t.sort();
            t.dedup();
            t
        })
        .collect();
    let preimages: Vec<Vec<usize>> = target
        .circles
        .iter()
        .map(|c| {
            let mut s: Vec<usize> = c.iter().map(|&m| src_of[m]).collect();
            s.sort();
            s.dedup();
            s
        })
        .collect();
    if let Some(from) = images.iter().position(|t| t.len() == 2) {
        let kind = EdgeKind::Split {
            from,
            a: images[from][0],
            b: images[from][1],
        };
        let map = images
            .iter()
            .enumerate()
            .map(|(i, t)| if i == from { None } else { Some(t[0]) })
            .collect();
        return (kind, map);
    }
    let into = preimages
        .iter()
        .position(|s| s.len() == 2)
        .expect("a single smoothing change merges or splits circles");
    let (a, b) = (preimages[into][0], preimages[into][1]);
    let map = images
        .iter()
        .enumerate()
        .map(|(i, t)| if i == a || i == b { None } else { Some(t[0]) })
        .collect();
    (EdgeKind::Merge { a, b, into }, map)
}

impl KhEdgeMap {
    /// Image of the basis vector `mask` (coefficients in `{0, 1}`).
    pub fn apply_basis(&self, mask: usize) -> SparseVec {
        let mut rest = 0usize;
        for (i, t) in self.circle_map.iter().enumerate() {
            if let Some(t) = t {
                if mask >> i & 1 == 1 {
                    rest |= 1 << t;
                }
            }
        }
        let mut out = SparseVec::new();
        let one = Q::one();
        match self.kind {
            EdgeKind::Merge { a, b, into } => {
                let xa = mask >> a & 1;
                let xb = mask >> b & 1;
                match xa + xb {
                    0 => add_to(&mut out, rest, &one),
                    1 => add_to(&mut out, rest | 1 << into, &one),
                    _ => {}
                }
            }
            EdgeKind::Split { from, a, b } => {
                if mask >> from & 1 == 0 {
                    add_to(&mut out, rest | 1 << a, &one);
                    add_to(&mut out, rest | 1 << b, &one);
                } else {
                    add_to(&mut out, rest | 1 << a | 1 << b, &one);
                }
            }
        }
        out
    }
}

/// Sign of the edge at `crossing` into `target` (an ordinary-cube vertex),
/// taken from the Leibniz rule on the resolution cube:
/// `(-1)^{sum_{i < crossing} sigma(target)_i mod 2}`.
pub fn edge_sign(d: &LinkDiagram, target: &SmoothingVertex, crossing: usize) -> i32 {
    let ones: usize = (0..crossing)
        .filter(|&i| {
            let b = target.0[i];
            match d.crossings()[i].sign {
                Sign::Positive => b == 1,
                Sign::Negative => b == 0,
            }
        })
        .count();
    if ones % 2 == 0 {
        1
    } else {
        -1
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct KhCube {
    pub vertices: Vec<KhVertexSpace>,
    pub edges: Vec<KhEdgeMap>,
}

pub fn build_kh_cube(d: &LinkDiagram) -> KhCube {
    let n = d.n_crossings();
    let (np, nm) = (d.n_plus() as i64, d.n_minus() as i64);
    let vertices: Vec<KhVertexSpace> = (0..1usize << n)
        .map(|idx| {
            let v = SmoothingVertex::from_index(idx, n);
            let circles = d.smooth(&v).expect("cube vertices are valid");
            let r = v.weight() as i64;
            KhVertexSpace {
                vertex: v,
                circles,
                q_shift: r + np - 2 * nm,
                homological_degree: r - nm,
            }
        })
        .collect();
    let edges = cube_edges(n)
        .into_iter()
        .map(|e| {
            let (kind, circle_map) =
                classify_edge(&vertices[e.from].circles, &vertices[e.to].circles, d.n_marks());
            KhEdgeMap {
                edge: e,
                kind,
                circle_map,
                sign: edge_sign(d, &vertices[e.to].vertex, e.crossing),
            }
        })
        .collect();
    KhCube { vertices, edges }
}

/// Position of every cube basis vector inside its chain group.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CubeLayout {
    /// Offset of each vertex's basis within its homological degree.
    pub offsets: Vec<usize>,
    pub degrees: Vec<i64>,
}

impl CubeLayout {
    pub fn new(degrees: Vec<i64>, dims: &[usize]) -> Self {
        let mut next = std::collections::BTreeMap::<i64, usize>::new();
        let offsets = degrees
            .iter()
            .zip(dims)
            .map(|(&h, &dim)| {
                let slot = next.entry(h).or_insert(0);
                let o = *slot;
                *slot += dim;
                o
            })
            .collect();
        CubeLayout { offsets, degrees }
    }
}

/// Assembles a cube with per-vertex q-degrees and signed edge maps into a
/// complex. `edge_matrix(e)` lists `(target basis, source basis, coefficient)`.
pub fn assemble_cube(
    degrees: Vec<i64>,
    vertex_q: &[Vec<i64>],
    edges: &[CubeEdge],
    edge_entries: impl Fn(usize) -> Vec<(usize, usize, Q)>,
) -> BigradedComplex {
    let dims: Vec<usize> = vertex_q.iter().map(|q| q.len()).collect();
    let layout = CubeLayout::new(degrees.clone(), &dims);
    let mut complex = BigradedComplex::default();
    for (v, qs) in vertex_q.iter().enumerate() {
        let g = complex.groups.entry(degrees[v]).or_default();
        debug_assert_eq!(g.len(), layout.offsets[v]);
        g.extend(qs.iter().copied());
    }
    for (k, e) in edges.iter().enumerate() {
        let h = degrees[e.from];
        let rows = complex.groups.get(&(h + 1)).map_or(0, |g| g.len());
        let cols = complex.groups[&h].len();
        let m = complex
            .differentials
            .entry(h)
            .or_insert_with(|| SparseMatrix::zero(rows, cols));
        for (t, s, c) in edge_entries(k) {
            m.add_entry(layout.offsets[e.to] + t, layout.offsets[e.from] + s, &c);
        }
    }
    complex
}

/// The signed Khovanov complex of the cube.
pub fn assemble_kh_complex(cube: &KhCube) -> BigradedComplex {
    let degrees = cube.vertices.iter().map(|v| v.homological_degree).collect();
    let vertex_q: Vec<Vec<i64>> = cube
        .vertices
        .iter()
        .map(|v| (0..v.dim()).map(|m| v.q_degree(m)).collect())
        .collect();
    let edges: Vec<CubeEdge> = cube.edges.iter().map(|e| e.edge).collect();
    assemble_cube(degrees, &vertex_q, &edges, |k| {
        let e = &cube.edges[k];
        let sign = Q::from_integer(e.sign.into());
        let mut out = Vec::new();
        for s in 0..cube.vertices[e.edge.from].dim() {
            for (t, c) in e.apply_basis(s) {
                out.push((t, s, &c * &sign));
            }
        }
        out
    })
}

pub fn khovanov_homology(d: &LinkDiagram) -> Result<BigradedDimTable, LinalgError> {
    assemble_kh_complex(&build_kh_cube(d)).homology()
}

/// Kauffman-bracket state sum
/// `sum_v (-1)^{r - n_-} q^{r + n_+ - 2 n_-} (q + q^{-1})^{s}`.
pub fn kauffman_bracket_jones(d: &LinkDiagram) -> Laurent {
    let n = d.n_crossings();
    let (np, nm) = (d.n_plus() as i64, d.n_minus() as i64);
    let circle = Laurent::monomial(1, 1).add(&Laurent::monomial(-1, 1));
    let mut total = Laurent::zero();
    for idx in 0..1usize << n {
        let v = SmoothingVertex::from_index(idx, n);
        let s = d.smooth(&v).expect("cube vertices are valid").len();
        let r = v.weight() as i64;
        let sign = if (r - nm).rem_euclid(2) == 0 { 1 } else { -1 };
        total = total.add(&Laurent::monomial(r + np - 2 * nm, sign).mul(&circle.pow(s)));
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagram::{builtin, parse_pd};

    fn table(entries: &[(i64, i64, usize)]) -> BigradedDimTable {
        let mut t = BigradedDimTable::default();
        for &(i, j, d) in entries {
            t.insert(i, j, d);
        }
        t
    }

    #[test]
    fn unknot_vertex() {
        let cube = build_kh_cube(&parse_pd("O[1]").unwrap());
        assert_eq!(cube.vertices.len(), 1);
        let v = &cube.vertices[0];
        assert_eq!(v.dim(), 2);
        let mut qs: Vec<i64> = (0..2).map(|m| v.q_degree(m)).collect();
        qs.sort();
        assert_eq!(qs, vec![-1, 1]);
    }

    #[test]
    fn circle_counts() {
        let t = build_kh_cube(&builtin("trefoil").unwrap());
        assert_eq!(t.vertices.len(), 8);
        assert_eq!(t.edges.len(), 12);
        let d = builtin("trefoil").unwrap();
        for v in &t.vertices {
            assert_eq!(v.s(), d.smooth(&v.vertex).unwrap().len());
        }
        let h = build_kh_cube(&builtin("hopf+").unwrap());
        let s: Vec<usize> = h.vertices.iter().map(|v| v.s()).collect();
        assert_eq!(s, vec![2, 1, 1, 2]);
    }

    fn local_merge() -> KhEdgeMap {
        KhEdgeMap {
            edge: CubeEdge { from: 0, to: 1, crossing: 0 },
            kind: EdgeKind::Merge { a: 0, b: 1, into: 0 },
            circle_map: vec![None, None],
            sign: 1,
        }
    }

    fn local_split() -> KhEdgeMap {
        KhEdgeMap {
            edge: CubeEdge { from: 0, to: 1, crossing: 0 },
            kind: EdgeKind::Split { from: 0, a: 0, b: 1 },
            circle_map: vec![None],
            sign: 1,
        }
    }

    fn vec_of(entries: &[usize]) -> SparseVec {
        let mut v = SparseVec::new();
        for &e in entries {
            add_to(&mut v, e, &Q::one());
        }
        v
    }

    #[test]
    fn merge_and_split_rules() {
        let m = local_merge();
        // bit 0 is the first factor: x (x) 1 is mask 0b01
        assert_eq!(m.apply_basis(0b01), vec_of(&[0b1]));
        assert_eq!(m.apply_basis(0b10), vec_of(&[0b1]));
        assert_eq!(m.apply_basis(0b00), vec_of(&[0b0]));
        assert!(m.apply_basis(0b11).is_empty());
        let s = local_split();
        assert_eq!(s.apply_basis(0b0), vec_of(&[0b01, 0b10]));
        assert_eq!(s.apply_basis(0b1), vec_of(&[0b11]));
    }

    #[test]
    fn edge_sign_examples() {
        let d = builtin("trefoil").unwrap();
        assert_eq!(edge_sign(&d, &SmoothingVertex(vec![1, 0, 0]), 0), 1);
        assert_eq!(edge_sign(&d, &SmoothingVertex(vec![1, 1, 1]), 2), 1);
        assert_eq!(edge_sign(&d, &SmoothingVertex(vec![1, 0, 1]), 2), -1);
    }

    #[test]
    fn d_squared_zero_and_degree_zero() {
        for (name, _) in crate::diagram::BUILTIN {
            if *name == "torus7" {
                continue;
            }
            let c = assemble_kh_complex(&build_kh_cube(&builtin(name).unwrap()));
            c.check().unwrap_or_else(|e| panic!("{name}: {e}"));
        }
    }

    #[test]
    fn complex_supports() {
        let t = assemble_kh_complex(&build_kh_cube(&builtin("trefoil").unwrap()));
        assert_eq!(t.groups.keys().copied().collect::<Vec<_>>(), vec![0, 1, 2, 3]);
        let h = assemble_kh_complex(&build_kh_cube(&builtin("hopf-").unwrap()));
        assert_eq!(h.groups.keys().copied().collect::<Vec<_>>(), vec![-2, -1, 0]);
        let u = assemble_kh_complex(&build_kh_cube(&parse_pd("O[1]").unwrap()));
        assert!(u.differentials.is_empty());
    }

    #[test]
    fn jones_examples() {
        let circle = Laurent::monomial(1, 1).add(&Laurent::monomial(-1, 1));
        assert_eq!(kauffman_bracket_jones(&parse_pd("O[1]").unwrap()), circle);
        assert_eq!(kauffman_bracket_jones(&parse_pd("O[1];O[2]").unwrap()), circle.pow(2));
        // unnormalized Jones polynomial of the right-handed trefoil: q + q^3 + q^5 - q^9
        assert_eq!(
            kauffman_bracket_jones(&builtin("trefoil").unwrap()).to_string(),
            "q + q^3 + q^5 - q^9"
        );
    }

    #[test]
    fn homology_tables() {
        let u = khovanov_homology(&parse_pd("O[1]").unwrap()).unwrap();
        assert_eq!(u, table(&[(0, -1, 1), (0, 1, 1)]));
        for kink in ["unknot-kink+", "unknot-kink-"] {
            assert_eq!(khovanov_homology(&builtin(kink).unwrap()).unwrap(), u, "{kink}");
        }
        // right-handed trefoil: q + q^3 + t^2 q^5 + t^3 q^9
        let t = khovanov_homology(&builtin("trefoil").unwrap()).unwrap();
        assert_eq!(t, table(&[(0, 1, 1), (0, 3, 1), (2, 5, 1), (3, 9, 1)]));
        let m = khovanov_homology(&builtin("trefoil-mirror").unwrap()).unwrap();
        assert_eq!(m, t.q_mirror().dims.iter().map(|(&(i, j), &d)| (-i, j, d)).fold(BigradedDimTable::default(), |mut acc, (i, j, d)| { acc.insert(i, j, d); acc }));
        // positive Hopf link: 1 + q^2 + t^2 q^4 + t^2 q^6
        let h = khovanov_homology(&builtin("hopf+").unwrap()).unwrap();
        assert_eq!(h, table(&[(0, 0, 1), (0, 2, 1), (2, 4, 1), (2, 6, 1)]));
        let k = khovanov_homology(&builtin("trefoil-kink").unwrap()).unwrap();
        assert_eq!(k, t);
    }

    #[test]
    fn euler_characteristic_matches_state_sum() {
        for (name, _) in crate::diagram::BUILTIN {
            if *name == "torus7" {
                continue;
            }
            let d = builtin(name).unwrap();
            let h = khovanov_homology(&d).unwrap();
            assert_eq!(h.euler_characteristic(), kauffman_bracket_jones(&d), "{name}");
        }
    }
}
