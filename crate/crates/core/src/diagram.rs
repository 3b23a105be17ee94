//! Oriented link diagrams given as planar-diagram (PD) codes.
//!
//! A crossing `X[a,b,c,d]` lists the four arc labels counterclockwise,
//! starting from the incoming under-strand, so the under-strand runs from
//! position 0 to position 2. The over-strand joins positions 1 and 3; its
//! direction is read off from the orientation of its component. With the
//! under-strand drawn pointing up, the crossing is positive when the
//! over-strand runs from position 3 to position 1.
//!
//! Every arc carries exactly one marked point, and marks are numbered like
//! arcs: in order of first appearance in the PD text. Crossings are stored
//! with all positive crossings first.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DiagramError {
    #[error("malformed PD code: {0}")]
    MalformedPd(String),
    #[error("inconsistent orientation: {0}")]
    InconsistentOrientation(String),
    #[error("virtual crossing rejected: {0}")]
    VirtualCrossingRejected(String),
    #[error("diagram is not realizable in the plane: {0}")]
    UnrealizablePlanarity(String),
    #[error("invalid cube vertex: {0}")]
    InvalidVertex(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Sign {
    Positive,
    Negative,
}

impl Sign {
    pub fn value(self) -> i32 {
        match self {
            Sign::Positive => 1,
            Sign::Negative => -1,
        }
    }
}

/// One end of an arc: a crossing index and a position `0..4` in its tuple.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct ArcEnd {
    pub crossing: usize,
    pub pos: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Crossing {
    /// Arc indices at positions 0..4, counterclockwise.
    pub arcs: [usize; 4],
    pub sign: Sign,
    /// Whether the arc at each position points into the crossing.
    pub incoming: [bool; 4],
    sign_override: Option<Sign>,
}

impl Crossing {
    pub fn arc_at(&self, pos: usize) -> usize {
        self.arcs[pos % 4]
    }

    /// Positions of the over-strand in the order (incoming, outgoing).
    pub fn over_strand(&self) -> (usize, usize) {
        match self.sign {
            Sign::Positive => (3, 1),
            Sign::Negative => (1, 3),
        }
    }

    /// Position pairs joined by the 0- or 1-smoothing.
    pub fn smoothing_pairs(&self, bit: u8) -> [(usize, usize); 2] {
        if bit == 0 {
            [(0, 1), (2, 3)]
        } else {
            [(0, 3), (1, 2)]
        }
    }

    /// The smoothing bit that agrees with the orientation.
    pub fn oriented_bit(&self) -> u8 {
        match self.sign {
            Sign::Positive => 0,
            Sign::Negative => 1,
        }
    }

    /// Arcs around the crossing in the roles `(i, j, k, l)` of a wide edge:
    /// `i`, `j` outgoing and `k`, `l` incoming, where the oriented
    /// resolution joins `k` to `j` and `l` to `i`.
    pub fn wide_edge_roles(&self) -> [usize; 4] {
        let (j, l) = match self.sign {
            Sign::Positive => (1, 3),
            Sign::Negative => (3, 1),
        };
        [self.arcs[2], self.arcs[j], self.arcs[0], self.arcs[l]]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Arc {
    /// Label used in the input text.
    pub label: i64,
    /// Crossing end the arc leaves from; `None` for a crossingless loop.
    pub tail: Option<ArcEnd>,
    /// Crossing end the arc arrives at.
    pub head: Option<ArcEnd>,
}

impl Arc {
    pub fn is_loop(&self) -> bool {
        self.tail.is_none()
    }

    /// The marked point on this arc; there is one per arc.
    pub fn mark(&self, index: usize) -> usize {
        index
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LinkDiagram {
    crossings: Vec<Crossing>,
    arcs: Vec<Arc>,
    /// Link components as cyclic arc sequences in the direction of travel.
    components: Vec<Vec<usize>>,
    /// Connected components of the underlying planar graph, as arc sets.
    shadow_components: Vec<Vec<usize>>,
    n_plus: usize,
    n_minus: usize,
}

/// A vertex of the ordinary cube `{0,1}^n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct SmoothingVertex(pub Vec<u8>);

/// A vertex of `{0,1}^{n+} x {-1,0}^{n-}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct ResolutionVertex(pub Vec<i8>);

impl SmoothingVertex {
    pub fn from_index(index: usize, n: usize) -> Self {
        SmoothingVertex((0..n).map(|i| ((index >> i) & 1) as u8).collect())
    }

    pub fn index(&self) -> usize {
        self.0
            .iter()
            .enumerate()
            .map(|(i, &b)| (b as usize) << i)
            .sum()
    }

    /// Number of 1-smoothings, `r(v)`.
    pub fn weight(&self) -> usize {
        self.0.iter().filter(|&&b| b == 1).count()
    }
}

impl fmt::Display for SmoothingVertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, b) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{b}")?;
        }
        write!(f, ")")
    }
}

impl ResolutionVertex {
    pub fn height(&self) -> i64 {
        self.0.iter().map(|&x| x as i64).sum()
    }
}

impl fmt::Display for ResolutionVertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, b) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{b}")?;
        }
        write!(f, ")")
    }
}

/// Circles of a total smoothing, each a cyclic sequence of marks starting
/// at its smallest mark; circles are sorted by that mark.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CirclePartition {
    pub circles: Vec<Vec<usize>>,
}

impl CirclePartition {
    pub fn len(&self) -> usize {
        self.circles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.circles.is_empty()
    }

    /// Index of the circle containing each mark.
    pub fn circle_of(&self, n_marks: usize) -> Vec<usize> {
        let mut out = vec![usize::MAX; n_marks];
        for (c, circle) in self.circles.iter().enumerate() {
            for &m in circle {
                out[m] = c;
            }
        }
        out
    }

    /// Smallest mark on each circle.
    pub fn representatives(&self) -> Vec<usize> {
        self.circles.iter().map(|c| c[0]).collect()
    }
}

/// Wide edge `E^{ij}_{kl}` at a crossing, by mark.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct WideEdge {
    pub crossing: usize,
    /// Marks `(i, j)` on the outgoing regular edges.
    pub outgoing: [usize; 2],
    /// Marks `(k, l)` on the incoming regular edges.
    pub incoming: [usize; 2],
}

/// Oriented resolution of a crossing without a wide edge: `k -> j` and `l -> i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct OrientedPass {
    pub crossing: usize,
    /// Marks `(j, k)`: the edge from `k` into `j`.
    pub first: (usize, usize),
    /// Marks `(i, l)`: the edge from `l` into `i`.
    pub second: (usize, usize),
}

/// A closed marked trivalent graph `Gamma_v`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TrivalentGraph {
    pub n_marks: usize,
    pub wide_edges: Vec<WideEdge>,
    pub passes: Vec<OrientedPass>,
    /// Marks lying on crossingless loops.
    pub loops: Vec<usize>,
    /// Circles left after deleting every wide edge.
    pub circles: CirclePartition,
}

impl TrivalentGraph {
    pub fn wide_edge_at(&self, crossing: usize) -> Option<&WideEdge> {
        self.wide_edges.iter().find(|w| w.crossing == crossing)
    }

    pub fn pass_at(&self, crossing: usize) -> Option<&OrientedPass> {
        self.passes.iter().find(|p| p.crossing == crossing)
    }
}

// ---------------------------------------------------------------------------
// parsing

#[derive(Debug)]
enum Token {
    Crossing {
        labels: [i64; 4],
        sign: Option<Sign>,
        text: String,
    },
    Loop(i64),
}

fn parse_tokens(text: &str) -> Result<Vec<Token>, DiagramError> {
    let mut body = text.trim();
    if let Some(inner) = body.strip_prefix("PD[").and_then(|s| s.strip_suffix(']')) {
        body = inner;
    }
    let bytes = body.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    let skip_sep = |i: &mut usize| {
        while *i < bytes.len() && (bytes[*i].is_ascii_whitespace() || bytes[*i] == b';' || bytes[*i] == b',') {
            *i += 1;
        }
    };
    loop {
        skip_sep(&mut i);
        if i >= bytes.len() {
            break;
        }
        let start = i;
        let head = bytes[i];
        if !matches!(head, b'X' | b'V' | b'O') {
            return Err(DiagramError::MalformedPd(format!(
                "unexpected '{}' at offset {start}",
                head as char
            )));
        }
        i += 1;
        if i >= bytes.len() || bytes[i] != b'[' {
            return Err(DiagramError::MalformedPd(format!("expected '[' at offset {i}")));
        }
        let close = body[i..]
            .find(']')
            .map(|o| i + o)
            .ok_or_else(|| DiagramError::MalformedPd(format!("unclosed '[' at offset {i}")))?;
        let labels: Vec<i64> = body[i + 1..close]
            .split(',')
            .map(|s| s.trim().parse::<i64>())
            .collect::<Result<_, _>>()
            .map_err(|e| DiagramError::MalformedPd(format!("bad label in '{}': {e}", &body[start..=close])))?;
        i = close + 1;
        let mut suffix = None;
        if i < bytes.len() && bytes[i] == b':' {
            i += 1;
            let s = i;
            while i < bytes.len() && !bytes[i].is_ascii_whitespace() && bytes[i] != b';' && bytes[i] != b',' {
                i += 1;
            }
            suffix = Some(&body[s..i]);
        }
        let text = body[start..i].to_string();
        match head {
            b'O' => {
                if labels.len() != 1 || suffix.is_some() {
                    return Err(DiagramError::MalformedPd(format!("bad loop directive '{text}'")));
                }
                tokens.push(Token::Loop(labels[0]));
            }
            b'V' => return Err(DiagramError::VirtualCrossingRejected(text)),
            _ => {
                if labels.len() != 4 {
                    return Err(DiagramError::MalformedPd(format!(
                        "crossing '{text}' needs four labels"
                    )));
                }
                let sign = match suffix {
                    None => None,
                    Some("+") => Some(Sign::Positive),
                    Some("-") => Some(Sign::Negative),
                    Some("v") => return Err(DiagramError::VirtualCrossingRejected(text)),
                    Some(other) => {
                        return Err(DiagramError::MalformedPd(format!(
                            "unknown crossing annotation ':{other}' in '{text}'"
                        )))
                    }
                };
                tokens.push(Token::Crossing {
                    labels: [labels[0], labels[1], labels[2], labels[3]],
                    sign,
                    text,
                });
            }
        }
    }
    Ok(tokens)
}

/// Parses a PD code into a validated, oriented diagram.
pub fn parse_pd(text: &str) -> Result<LinkDiagram, DiagramError> {
    let tokens = parse_tokens(text)?;

    // arcs in first-appearance order
    let mut arc_of_label: HashMap<i64, usize> = HashMap::new();
    let mut labels: Vec<i64> = Vec::new();
    let mut occurrences: Vec<Vec<ArcEnd>> = Vec::new();
    let mut loop_arcs: Vec<usize> = Vec::new();
    let mut raw: Vec<([usize; 4], Option<Sign>, String)> = Vec::new();

    let mut intern = |label: i64, labels: &mut Vec<i64>, occ: &mut Vec<Vec<ArcEnd>>| -> usize {
        *arc_of_label.entry(label).or_insert_with(|| {
            labels.push(label);
            occ.push(Vec::new());
            labels.len() - 1
        })
    };

    for tok in &tokens {
        match tok {
            Token::Crossing { labels: ls, sign, text } => {
                let c = raw.len();
                let mut arcs = [0; 4];
                for (pos, &l) in ls.iter().enumerate() {
                    let a = intern(l, &mut labels, &mut occurrences);
                    occurrences[a].push(ArcEnd { crossing: c, pos });
                    arcs[pos] = a;
                }
                raw.push((arcs, *sign, text.clone()));
            }
            Token::Loop(l) => {
                let a = intern(*l, &mut labels, &mut occurrences);
                if !occurrences[a].is_empty() || loop_arcs.contains(&a) {
                    return Err(DiagramError::MalformedPd(format!(
                        "loop label {l} is also used elsewhere"
                    )));
                }
                loop_arcs.push(a);
            }
        }
    }
    for (a, occ) in occurrences.iter().enumerate() {
        if loop_arcs.contains(&a) {
            continue;
        }
        if occ.len() != 2 {
            return Err(DiagramError::MalformedPd(format!(
                "arc label {} appears {} times, expected 2",
                labels[a],
                occ.len()
            )));
        }
    }

    let n_arcs = labels.len();
    let other_end = |e: ArcEnd, arcs: &[[usize; 4]]| -> ArcEnd {
        let a = arcs[e.crossing][e.pos];
        let occ = &occurrences[a];
        if occ[0] == e {
            occ[1]
        } else {
            occ[0]
        }
    };
    let crossing_arcs: Vec<[usize; 4]> = raw.iter().map(|r| r.0).collect();

    // orient components: walk the cycles formed by arcs and straight-through strands
    let mut incoming: Vec<[Option<bool>; 4]> = vec![[None; 4]; raw.len()];
    let mut components: Vec<Vec<usize>> = Vec::new();
    let mut seen = vec![[false; 4]; raw.len()];
    for c0 in 0..raw.len() {
        for p0 in 0..4 {
            if seen[c0][p0] {
                continue;
            }
            // collect the cycle of ends as (incoming_end, outgoing_end) pairs per crossing
            let start = ArcEnd { crossing: c0, pos: p0 };
            let mut walk: Vec<ArcEnd> = Vec::new();
            let mut e = start;
            loop {
                // enter crossing at e, leave straight through
                let out = ArcEnd { crossing: e.crossing, pos: (e.pos + 2) % 4 };
                seen[e.crossing][e.pos] = true;
                seen[out.crossing][out.pos] = true;
                walk.push(e);
                walk.push(out);
                e = other_end(out, &crossing_arcs);
                if e == start {
                    break;
                }
            }
            // walk lists entering ends at even indices; decide direction
            let votes = |w: &[ArcEnd]| -> (usize, usize) {
                let (mut agree, mut disagree) = (0, 0);
                for (k, end) in w.iter().enumerate() {
                    let entering = k % 2 == 0;
                    let want = match end.pos {
                        0 => Some(true),
                        2 => Some(false),
                        p => raw[end.crossing].1.map(|s| match s {
                            Sign::Positive => p == 3,
                            Sign::Negative => p == 1,
                        }),
                    };
                    if let Some(want) = want {
                        if want == entering {
                            agree += 1;
                        } else {
                            disagree += 1;
                        }
                    }
                }
                (agree, disagree)
            };
            let (agree, disagree) = votes(&walk);
            let forward = if agree > 0 && disagree > 0 {
                return Err(DiagramError::InconsistentOrientation(format!(
                    "component through crossing '{}' has conflicting strand directions",
                    raw[c0].2
                )));
            } else if agree > 0 {
                true
            } else if disagree > 0 {
                false
            } else {
                // over-strands only: fall back on consecutive arc labels
                let e = walk[0];
                let (a_in, a_out) = (
                    labels[crossing_arcs[e.crossing][e.pos]],
                    labels[crossing_arcs[e.crossing][(e.pos + 2) % 4]],
                );
                a_out == a_in + 1 || (a_in > a_out + 1)
            };
            let mut arcs_in_order = Vec::new();
            for (k, end) in walk.iter().enumerate() {
                let entering = (k % 2 == 0) == forward;
                incoming[end.crossing][end.pos] = Some(entering);
            }
            // arcs in travel order: the arc leaving each outgoing end
            if forward {
                for k in (1..walk.len()).step_by(2) {
                    arcs_in_order.push(crossing_arcs[walk[k].crossing][walk[k].pos]);
                }
            } else {
                for k in (0..walk.len()).step_by(2).rev() {
                    arcs_in_order.push(crossing_arcs[walk[k].crossing][walk[k].pos]);
                }
            }
            components.push(arcs_in_order);
        }
    }
    for &a in &loop_arcs {
        components.push(vec![a]);
    }

    let mut crossings: Vec<Crossing> = raw
        .iter()
        .enumerate()
        .map(|(c, (arcs, ov, _))| {
            let inc = [
                incoming[c][0].unwrap(),
                incoming[c][1].unwrap(),
                incoming[c][2].unwrap(),
                incoming[c][3].unwrap(),
            ];
            let sign = if inc[3] { Sign::Positive } else { Sign::Negative };
            Crossing {
                arcs: *arcs,
                sign,
                incoming: inc,
                sign_override: *ov,
            }
        })
        .collect();
    for (c, cr) in crossings.iter().enumerate() {
        if cr.incoming[1] == cr.incoming[3] {
            return Err(DiagramError::InconsistentOrientation(format!(
                "over-strand of '{}' is not traversed consistently",
                raw[c].2
            )));
        }
    }

    check_planarity(&crossing_arcs, &occurrences, &loop_arcs, |c| raw[c].2.clone())?;

    // positive crossings first, stable
    let mut order: Vec<usize> = (0..crossings.len()).collect();
    order.sort_by_key(|&c| match crossings[c].sign {
        Sign::Positive => 0,
        Sign::Negative => 1,
    });
    let mut new_index = vec![0; crossings.len()];
    for (new, &old) in order.iter().enumerate() {
        new_index[old] = new;
    }
    crossings = order.iter().map(|&c| crossings[c].clone()).collect();

    let mut arcs: Vec<Arc> = (0..n_arcs)
        .map(|a| Arc {
            label: labels[a],
            tail: None,
            head: None,
        })
        .collect();
    for (c, cr) in crossings.iter().enumerate() {
        for pos in 0..4 {
            let end = ArcEnd { crossing: c, pos };
            let a = cr.arcs[pos];
            if cr.incoming[pos] {
                if arcs[a].head.is_some() {
                    return Err(DiagramError::InconsistentOrientation(format!(
                        "arc {} enters two crossings",
                        labels[a]
                    )));
                }
                arcs[a].head = Some(end);
            } else {
                if arcs[a].tail.is_some() {
                    return Err(DiagramError::InconsistentOrientation(format!(
                        "arc {} leaves two crossings",
                        labels[a]
                    )));
                }
                arcs[a].tail = Some(end);
            }
        }
    }

    let n_plus = crossings.iter().filter(|c| c.sign == Sign::Positive).count();
    let n_minus = crossings.len() - n_plus;
    let mut d = LinkDiagram {
        crossings,
        arcs,
        components,
        shadow_components: Vec::new(),
        n_plus,
        n_minus,
    };
    d.shadow_components = d.compute_shadow_components();
    Ok(d)
}

/// Euler-characteristic check of the rotation system: every connected
/// component with `V` crossings must bound `V + 2` faces.
fn check_planarity(
    crossing_arcs: &[[usize; 4]],
    occurrences: &[Vec<ArcEnd>],
    loop_arcs: &[usize],
    describe: impl Fn(usize) -> String,
) -> Result<(), DiagramError> {
    let n = crossing_arcs.len();
    if n == 0 {
        return Ok(());
    }
    let partner = |e: ArcEnd| -> ArcEnd {
        let a = crossing_arcs[e.crossing][e.pos];
        let occ = &occurrences[a];
        if occ[0] == e {
            occ[1]
        } else {
            occ[0]
        }
    };
    // union-find over crossings
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        let mut y = x;
        while p[y] != r {
            let nx = p[y];
            p[y] = r;
            y = nx;
        }
        r
    }
    for (a, occ) in occurrences.iter().enumerate() {
        if loop_arcs.contains(&a) {
            continue;
        }
        let (x, y) = (find(&mut parent, occ[0].crossing), find(&mut parent, occ[1].crossing));
        parent[x] = y;
    }
    let mut faces_per_root: BTreeMap<usize, usize> = BTreeMap::new();
    let mut verts_per_root: BTreeMap<usize, usize> = BTreeMap::new();
    for c in 0..n {
        let r = find(&mut parent, c);
        *verts_per_root.entry(r).or_default() += 1;
    }
    let mut visited = vec![[false; 4]; n];
    for c in 0..n {
        for p in 0..4 {
            if visited[c][p] {
                continue;
            }
            let mut e = ArcEnd { crossing: c, pos: p };
            while !visited[e.crossing][e.pos] {
                visited[e.crossing][e.pos] = true;
                let f = partner(e);
                e = ArcEnd { crossing: f.crossing, pos: (f.pos + 3) % 4 };
            }
            let r = find(&mut parent, c);
            *faces_per_root.entry(r).or_default() += 1;
        }
    }
    for (r, v) in verts_per_root {
        let f = faces_per_root.get(&r).copied().unwrap_or(0);
        if f != v + 2 {
            return Err(DiagramError::UnrealizablePlanarity(format!(
                "component containing '{}' has {v} crossings but {f} faces (expected {})",
                describe(r),
                v + 2
            )));
        }
    }
    Ok(())
}

impl LinkDiagram {
    /// The crossingless diagram of an unlink with `k` components.
    pub fn unlink(k: usize) -> Self {
        let text: Vec<String> = (1..=k).map(|i| format!("O[{i}]")).collect();
        parse_pd(&text.join(";")).expect("unlink PD is valid")
    }

    pub fn crossings(&self) -> &[Crossing] {
        &self.crossings
    }

    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    pub fn n_crossings(&self) -> usize {
        self.crossings.len()
    }

    pub fn n_marks(&self) -> usize {
        self.arcs.len()
    }

    pub fn n_plus(&self) -> usize {
        self.n_plus
    }

    pub fn n_minus(&self) -> usize {
        self.n_minus
    }

    pub fn components(&self) -> &[Vec<usize>] {
        &self.components
    }

    pub fn shadow_components(&self) -> &[Vec<usize>] {
        &self.shadow_components
    }

    /// Arc leaving the crossing end opposite to `end` along its strand.
    pub fn arc_at(&self, end: ArcEnd) -> usize {
        self.crossings[end.crossing].arcs[end.pos]
    }

    fn compute_shadow_components(&self) -> Vec<Vec<usize>> {
        let n = self.arcs.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], x: usize) -> usize {
            if p[x] != x {
                let r = find(p, p[x]);
                p[x] = r;
            }
            p[x]
        }
        for cr in &self.crossings {
            for pos in 1..4 {
                let (x, y) = (find(&mut parent, cr.arcs[0]), find(&mut parent, cr.arcs[pos]));
                parent[x] = y;
            }
        }
        let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for a in 0..n {
            let r = find(&mut parent, a);
            groups.entry(r).or_default().push(a);
        }
        let mut out: Vec<Vec<usize>> = groups.into_values().collect();
        out.sort();
        out
    }

    pub fn check_smoothing(&self, v: &SmoothingVertex) -> Result<(), DiagramError> {
        if v.0.len() != self.n_crossings() || v.0.iter().any(|&b| b > 1) {
            return Err(DiagramError::InvalidVertex(format!(
                "{v} is not a vertex of the {}-cube",
                self.n_crossings()
            )));
        }
        Ok(())
    }

    pub fn check_resolution(&self, v: &ResolutionVertex) -> Result<(), DiagramError> {
        let ok = v.0.len() == self.n_crossings()
            && v.0.iter().zip(&self.crossings).all(|(&x, c)| match c.sign {
                Sign::Positive => x == 0 || x == 1,
                Sign::Negative => x == -1 || x == 0,
            });
        if ok {
            Ok(())
        } else {
            Err(DiagramError::InvalidVertex(format!("{v} is not a resolution vertex")))
        }
    }

    /// Circles of the total smoothing `D_v`.
    pub fn smooth(&self, v: &SmoothingVertex) -> Result<CirclePartition, DiagramError> {
        self.check_smoothing(v)?;
        Ok(self.circles_for_bits(&v.0))
    }

    fn circles_for_bits(&self, bits: &[u8]) -> CirclePartition {
        // at each crossing end, the end joined to it by the smoothing
        let joined = |end: ArcEnd| -> ArcEnd {
            let cr = &self.crossings[end.crossing];
            let pairs = cr.smoothing_pairs(bits[end.crossing]);
            let p = pairs
                .iter()
                .find_map(|&(a, b)| {
                    if a == end.pos {
                        Some(b)
                    } else if b == end.pos {
                        Some(a)
                    } else {
                        None
                    }
                })
                .expect("every position is paired");
            ArcEnd { crossing: end.crossing, pos: p }
        };
        let mut visited = vec![false; self.arcs.len()];
        let mut circles = Vec::new();
        for a0 in 0..self.arcs.len() {
            if visited[a0] {
                continue;
            }
            let mut circle = vec![a0];
            visited[a0] = true;
            if let Some(head) = self.arcs[a0].head {
                // walk: leave arc through an end, cross the smoothing, take the next arc
                let mut end = head;
                loop {
                    let next_end = joined(end);
                    let a = self.arc_at(next_end);
                    if a == a0 {
                        break;
                    }
                    visited[a] = true;
                    circle.push(a);
                    let arc = &self.arcs[a];
                    end = if arc.head == Some(next_end) {
                        arc.tail.unwrap()
                    } else {
                        arc.head.unwrap()
                    };
                }
            }
            circles.push(circle);
        }
        for c in &mut circles {
            let k = c.iter().enumerate().min_by_key(|(_, &m)| m).unwrap().0;
            c.rotate_left(k);
        }
        circles.sort();
        CirclePartition { circles }
    }

    /// `sigma`: negative-crossing coordinates shift down by one.
    pub fn sigma(&self, v: &SmoothingVertex) -> ResolutionVertex {
        ResolutionVertex(
            v.0.iter()
                .zip(&self.crossings)
                .map(|(&b, c)| match c.sign {
                    Sign::Positive => b as i8,
                    Sign::Negative => b as i8 - 1,
                })
                .collect(),
        )
    }

    pub fn sigma_inverse(&self, v: &ResolutionVertex) -> SmoothingVertex {
        SmoothingVertex(
            v.0.iter()
                .zip(&self.crossings)
                .map(|(&x, c)| match c.sign {
                    Sign::Positive => x as u8,
                    Sign::Negative => (x + 1) as u8,
                })
                .collect(),
        )
    }

    /// Whether the crossing carries a wide edge at resolution coordinate `x`.
    pub fn has_wide_edge(&self, crossing: usize, x: i8) -> bool {
        match self.crossings[crossing].sign {
            Sign::Positive => x == 1,
            Sign::Negative => x == -1,
        }
    }

    /// The marked trivalent graph `Gamma_v`.
    pub fn resolve(&self, v: &ResolutionVertex) -> Result<TrivalentGraph, DiagramError> {
        self.check_resolution(v)?;
        let mut wide_edges = Vec::new();
        let mut passes = Vec::new();
        for (c, cr) in self.crossings.iter().enumerate() {
            let [i, j, k, l] = cr.wide_edge_roles();
            if self.has_wide_edge(c, v.0[c]) {
                wide_edges.push(WideEdge {
                    crossing: c,
                    outgoing: [i, j],
                    incoming: [k, l],
                });
            } else {
                passes.push(OrientedPass {
                    crossing: c,
                    first: (j, k),
                    second: (i, l),
                });
            }
        }
        let loops = (0..self.arcs.len()).filter(|&a| self.arcs[a].is_loop()).collect();
        let bits = self.sigma_inverse(v).0;
        Ok(TrivalentGraph {
            n_marks: self.n_marks(),
            wide_edges,
            passes,
            loops,
            circles: self.circles_for_bits(&bits),
        })
    }

    /// Canonical PD text: arcs relabelled `1..` in index order, crossings in
    /// stored order. Sign annotations appear only where the orientation
    /// cannot be recovered from under-strands.
    pub fn serialize(&self) -> String {
        let mut under_fixed = vec![false; self.arcs.len()];
        for comp in &self.components {
            let has_under = comp.iter().any(|&a| {
                self.arcs[a]
                    .head
                    .map(|e| e.pos == 0 || e.pos == 2)
                    .unwrap_or(false)
            });
            for &a in comp {
                under_fixed[a] = has_under;
            }
        }
        let mut parts = Vec::new();
        for cr in &self.crossings {
            let l: Vec<String> = cr.arcs.iter().map(|a| (a + 1).to_string()).collect();
            let mut s = format!("X[{}]", l.join(","));
            if !under_fixed[cr.arcs[1]] || cr.sign_override.is_some() {
                s.push_str(match cr.sign {
                    Sign::Positive => ":+",
                    Sign::Negative => ":-",
                });
            }
            parts.push(s);
        }
        for (a, arc) in self.arcs.iter().enumerate() {
            if arc.is_loop() {
                parts.push(format!("O[{}]", a + 1));
            }
        }
        parts.join(";")
    }
}

/// Built-in diagrams available by name.
pub const BUILTIN: &[(&str, &str)] = &[
    ("unknot", "O[1]"),
    ("unknot-kink+", "X[1,1,2,2]"),
    ("unknot-kink-", "X[1,2,2,1]"),
    ("unlink2", "O[1];O[2]"),
    ("hopf+", "X[4,1,3,2];X[1,4,2,3]"),
    ("hopf-", "X[4,1,3,2];X[2,3,1,4]"),
    ("trefoil", "X[4,2,5,1];X[6,4,1,3];X[2,6,3,5]"),
    ("trefoil-mirror", "X[1,4,2,5];X[3,6,4,1];X[5,2,6,3]"),
    ("trefoil-kink", "X[4,2,5,8];X[6,4,1,3];X[2,6,3,5];X[1,8,7,7]"),
    ("figure8", "X[4,2,5,1];X[8,6,1,5];X[6,3,7,4];X[2,7,3,8]"),
    (
        "torus7",
        "X[1,8,2,9];X[3,10,4,11];X[5,12,6,13];X[7,14,8,1];X[9,2,10,3];X[11,4,12,5];X[13,6,14,7]",
    ),
];

pub fn builtin(name: &str) -> Option<LinkDiagram> {
    BUILTIN
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, pd)| parse_pd(pd).expect("built-in PD codes are valid"))
}

/// A built-in name or literal PD text.
pub fn diagram_from_arg(arg: &str) -> Result<LinkDiagram, DiagramError> {
    match builtin(arg) {
        Some(d) => Ok(d),
        None => parse_pd(arg),
    }
}
