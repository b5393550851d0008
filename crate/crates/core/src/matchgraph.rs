//! Bipartite graphs built from erasure patterns and from matrix supports,
//! with complete-matching search and Hall-condition witnesses.

use std::fmt;
use std::fmt::Write as _;

use thiserror::Error;

use crate::codegen::SymbolicMatrix;
use crate::patterns::{ErasurePattern, RowProfile};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MatchError {
    #[error("bad partition: {0}")]
    BadPartition(String),
    #[error("row {0} holds no erasures")]
    BadRow(usize),
    #[error("pattern is not row-wise irreducible")]
    NotIrreducible,
    #[error("matrix is {rows}x{cols}, not square")]
    NotSquare { rows: usize, cols: usize },
    #[error("subset enumeration over {0} left vertices exceeds the limit of {1}")]
    TooLarge(usize, usize),
    #[error("no row profile for row {0}")]
    MissingProfile(usize),
}

/// Largest left side `neighborhood_check` will enumerate subsets of.
pub const NEIGHBORHOOD_LIMIT: usize = 20;

/// Left vertex `e(i, j)`: the `j`-th copy of erasure row `i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ErasureVertex {
    pub row: usize,
    pub copy: usize,
}

impl fmt::Display for ErasureVertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e({},{})", self.row + 1, self.copy + 1)
    }
}

/// A grid cell used as a right vertex (a non-erasure).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CellVertex {
    pub row: usize,
    pub col: usize,
}

impl fmt::Display for CellVertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "d({},{})", self.row + 1, self.col + 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RowVertex(pub usize);

impl fmt::Display for RowVertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "row{}", self.0 + 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ColumnVertex(pub usize);

impl fmt::Display for ColumnVertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "col{}", self.0 + 1)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BipartiteGraph<L, R> {
    left: Vec<L>,
    right: Vec<R>,
    adj: Vec<Vec<usize>>,
}

impl<L, R> BipartiteGraph<L, R> {
    pub fn new(left: Vec<L>, right: Vec<R>) -> Self {
        let adj = vec![Vec::new(); left.len()];
        BipartiteGraph { left, right, adj }
    }

    /// Adds an edge between vertex indices; duplicates are ignored and
    /// adjacency stays sorted.
    pub fn add_edge(&mut self, l: usize, r: usize) {
        assert!(l < self.left.len() && r < self.right.len(), "edge ({l}, {r}) out of range");
        if let Err(pos) = self.adj[l].binary_search(&r) {
            self.adj[l].insert(pos, r);
        }
    }

    pub fn left(&self) -> &[L] {
        &self.left
    }

    pub fn right(&self) -> &[R] {
        &self.right
    }

    pub fn neighbors(&self, l: usize) -> &[usize] {
        &self.adj[l]
    }

    pub fn has_edge(&self, l: usize, r: usize) -> bool {
        self.adj[l].binary_search(&r).is_ok()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum()
    }

    /// Right vertices adjacent to at least one of `set`, ascending.
    pub fn neighborhood(&self, set: &[usize]) -> Vec<usize> {
        let mut seen = vec![false; self.right.len()];
        for &l in set {
            for &r in &self.adj[l] {
                seen[r] = true;
            }
        }
        (0..self.right.len()).filter(|&r| seen[r]).collect()
    }
}

impl<L: fmt::Display, R: fmt::Display> BipartiteGraph<L, R> {
    /// Graphviz description; matched edges are drawn bold.
    pub fn to_dot(&self, matching: Option<&Matching>) -> String {
        let mut out = String::from("graph G {\n  rankdir=LR;\n");
        for (i, l) in self.left.iter().enumerate() {
            let _ = writeln!(out, "  L{i} [label=\"{l}\", shape=box];");
        }
        for (j, r) in self.right.iter().enumerate() {
            let _ = writeln!(out, "  R{j} [label=\"{r}\"];");
        }
        for (i, nbrs) in self.adj.iter().enumerate() {
            for &j in nbrs {
                let bold = matching.is_some_and(|m| m.partner(i) == Some(j));
                let style = if bold { " [style=bold, color=red]" } else { "" };
                let _ = writeln!(out, "  L{i} -- R{j}{style};");
            }
        }
        out.push_str("}\n");
        out
    }
}

/// Vertex-disjoint edges as `(left, right)` index pairs, sorted by left.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Matching {
    pairs: Vec<(usize, usize)>,
}

impl Matching {
    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn partner(&self, l: usize) -> Option<usize> {
        self.pairs.iter().find(|p| p.0 == l).map(|p| p.1)
    }

    /// Matched right vertices, ascending.
    pub fn right_vertices(&self) -> Vec<usize> {
        let mut r: Vec<usize> = self.pairs.iter().map(|p| p.1).collect();
        r.sort_unstable();
        r
    }
}

/// Left vertices `set` whose neighborhood is strictly smaller than `set`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HallWitness {
    pub set: Vec<usize>,
    pub neighborhood: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MatchOutcome {
    Complete(Matching),
    Deficient {
        maximum: Matching,
        witness: HallWitness,
    },
}

impl MatchOutcome {
    pub fn is_complete(&self) -> bool {
        matches!(self, MatchOutcome::Complete(_))
    }

    pub fn matching(&self) -> &Matching {
        match self {
            MatchOutcome::Complete(m) => m,
            MatchOutcome::Deficient { maximum, .. } => maximum,
        }
    }
}

/// Maximum matching by repeated augmenting-path search, left vertices in
/// ascending order and neighbors in ascending order.
pub fn maximum_matching<L, R>(g: &BipartiteGraph<L, R>) -> Matching {
    let mut right_owner: Vec<Option<usize>> = vec![None; g.right.len()];
    let mut left_partner: Vec<Option<usize>> = vec![None; g.left.len()];
    for l in 0..g.left.len() {
        let mut visited = vec![false; g.right.len()];
        augment(g, l, &mut visited, &mut right_owner, &mut left_partner);
    }
    Matching {
        pairs: left_partner
            .iter()
            .enumerate()
            .filter_map(|(l, r)| r.map(|r| (l, r)))
            .collect(),
    }
}

fn augment<L, R>(
    g: &BipartiteGraph<L, R>,
    l: usize,
    visited: &mut [bool],
    right_owner: &mut [Option<usize>],
    left_partner: &mut [Option<usize>],
) -> bool {
    for &r in &g.adj[l] {
        if visited[r] {
            continue;
        }
        visited[r] = true;
        let free = match right_owner[r] {
            None => true,
            Some(owner) => augment(g, owner, visited, right_owner, left_partner),
        };
        if free {
            right_owner[r] = Some(l);
            left_partner[l] = Some(r);
            return true;
        }
    }
    false
}

/// Finds a matching covering every left vertex, or a Hall witness proving
/// none exists.
///
/// The witness is the set of left vertices reachable by alternating paths
/// from the first unmatched left vertex; its neighborhood is exactly the
/// reachable right vertices, all matched, so it is one short.
pub fn complete_matching<L, R>(g: &BipartiteGraph<L, R>) -> MatchOutcome {
    let matching = maximum_matching(g);
    if matching.len() == g.left.len() {
        return MatchOutcome::Complete(matching);
    }
    let mut left_partner = vec![None; g.left.len()];
    let mut right_owner = vec![None; g.right.len()];
    for &(l, r) in &matching.pairs {
        left_partner[l] = Some(r);
        right_owner[r] = Some(l);
    }
    let start = (0..g.left.len())
        .find(|&l| left_partner[l].is_none())
        .expect("deficient matching leaves a left vertex free");
    let mut in_set = vec![false; g.left.len()];
    let mut seen_right = vec![false; g.right.len()];
    let mut stack = vec![start];
    in_set[start] = true;
    while let Some(l) = stack.pop() {
        for &r in &g.adj[l] {
            if seen_right[r] {
                continue;
            }
            seen_right[r] = true;
            let owner = right_owner[r].expect("reachable right vertex must be matched");
            if !in_set[owner] {
                in_set[owner] = true;
                stack.push(owner);
            }
        }
    }
    let set: Vec<usize> = (0..g.left.len()).filter(|&l| in_set[l]).collect();
    let neighborhood: Vec<usize> = (0..g.right.len()).filter(|&r| seen_right[r]).collect();
    debug_assert!(neighborhood.len() < set.len());
    MatchOutcome::Deficient {
        maximum: matching,
        witness: HallWitness { set, neighborhood },
    }
}

/// Graph between erasure copies in rows `U \ U_R` and non-erasures in
/// rows `U_R`.
///
/// Row `i` contributes `r_i = |V_i| - b` left vertices. A left vertex of row
/// `i` is adjacent to a non-erasure in column `t` whenever `(i, t)` is erased.
pub fn build_erasure_nonerasure_graph(
    pattern: &ErasurePattern,
    right_rows: &[usize],
) -> Result<BipartiteGraph<ErasureVertex, CellVertex>, MatchError> {
    let t = pattern.topology();
    if !pattern.is_row_irreducible() {
        return Err(MatchError::NotIrreducible);
    }
    let mut ur = right_rows.to_vec();
    ur.sort_unstable();
    ur.dedup();
    if ur.len() != right_rows.len() || ur.len() != t.a() {
        return Err(MatchError::BadPartition(format!(
            "U_R must hold exactly a = {} distinct rows, got {}",
            t.a(),
            right_rows.len()
        )));
    }
    let u = pattern.erased_rows();
    if let Some(&bad) = ur.iter().find(|r| !u.contains(r)) {
        return Err(MatchError::BadPartition(format!(
            "row {} of U_R is not in the enclosing row set",
            bad + 1
        )));
    }
    let b = t.b();
    let mut left = Vec::new();
    for &i in u.iter().filter(|i| !ur.contains(i)) {
        for copy in 0..pattern.row_count(i) - b {
            left.push(ErasureVertex { row: i, copy });
        }
    }
    let right: Vec<CellVertex> = ur
        .iter()
        .flat_map(|&s| {
            (0..t.n())
                .filter(move |&c| !pattern.is_erased(s, c))
                .map(move |col| CellVertex { row: s, col })
        })
        .collect();
    let mut g = BipartiteGraph::new(left, right);
    for l in 0..g.left.len() {
        let row = g.left[l].row;
        for r in 0..g.right.len() {
            if pattern.is_erased(row, g.right[r].col) {
                g.add_edge(l, r);
            }
        }
    }
    Ok(g)
}

/// Default `U_R`: the `a` smallest rows holding erasures.
pub fn default_right_rows(pattern: &ErasurePattern) -> Vec<usize> {
    pattern.erased_rows().into_iter().take(pattern.topology().a()).collect()
}

/// Graph between rows `U \ {ell}` and columns `V \ V_ell`, with an edge
/// wherever the cell is erased.
pub fn build_rowcol_graph(
    pattern: &ErasurePattern,
    ell: usize,
) -> Result<BipartiteGraph<RowVertex, ColumnVertex>, MatchError> {
    if !pattern.is_row_irreducible() {
        return Err(MatchError::NotIrreducible);
    }
    if ell >= pattern.topology().m() || pattern.row_count(ell) == 0 {
        return Err(MatchError::BadRow(ell + 1));
    }
    let grid = pattern.enclosing_grid().map_err(|_| MatchError::BadRow(ell + 1))?;
    let left: Vec<RowVertex> = grid.rows.iter().filter(|&&i| i != ell).map(|&i| RowVertex(i)).collect();
    let right: Vec<ColumnVertex> = grid
        .cols
        .iter()
        .filter(|&&j| !pattern.is_erased(ell, j))
        .map(|&j| ColumnVertex(j))
        .collect();
    let mut g = BipartiteGraph::new(left, right);
    for l in 0..g.left.len() {
        for r in 0..g.right.len() {
            if pattern.is_erased(g.left[l].0, g.right[r].0) {
                g.add_edge(l, r);
            }
        }
    }
    Ok(g)
}

/// First left subset `A` (binary counting order) with `|N(A)| < Σ_{i∈A} r_i`.
pub fn neighborhood_violation(
    g: &BipartiteGraph<RowVertex, ColumnVertex>,
    profiles: &[RowProfile],
) -> Result<Option<Vec<usize>>, MatchError> {
    neighborhood_violation_limited(g, profiles, NEIGHBORHOOD_LIMIT)
}

pub fn neighborhood_violation_limited(
    g: &BipartiteGraph<RowVertex, ColumnVertex>,
    profiles: &[RowProfile],
    limit: usize,
) -> Result<Option<Vec<usize>>, MatchError> {
    let k = g.left.len();
    if k > limit {
        return Err(MatchError::TooLarge(k, limit));
    }
    let demand: Vec<usize> = g
        .left
        .iter()
        .map(|v| {
            profiles
                .iter()
                .find(|p| p.row == v.0)
                .map(|p| p.excess)
                .ok_or(MatchError::MissingProfile(v.0 + 1))
        })
        .collect::<Result<_, _>>()?;
    let words = g.right.len().div_ceil(64).max(1);
    let masks: Vec<Vec<u64>> = g
        .adj
        .iter()
        .map(|nbrs| {
            let mut w = vec![0u64; words];
            for &r in nbrs {
                w[r / 64] |= 1 << (r % 64);
            }
            w
        })
        .collect();
    let mut acc = vec![0u64; words];
    for subset in 1u32..(1u32 << k) {
        acc.iter_mut().for_each(|w| *w = 0);
        let mut need = 0;
        for l in 0..k {
            if subset >> l & 1 == 1 {
                need += demand[l];
                for (a, m) in acc.iter_mut().zip(&masks[l]) {
                    *a |= m;
                }
            }
        }
        let have: u32 = acc.iter().map(|w| w.count_ones()).sum();
        if (have as usize) < need {
            return Ok(Some((0..k).filter(|&l| subset >> l & 1 == 1).collect()));
        }
    }
    Ok(None)
}

/// `|N(A)| >= Σ_{i∈A} r_i` for every subset `A` of the left side.
pub fn neighborhood_check(
    g: &BipartiteGraph<RowVertex, ColumnVertex>,
    profiles: &[RowProfile],
) -> Result<bool, MatchError> {
    Ok(neighborhood_violation(g, profiles)?.is_none())
}

/// Rows versus columns of a matrix, with an edge at every nonzero entry.
pub fn support_graph(m: &SymbolicMatrix) -> BipartiteGraph<RowVertex, ColumnVertex> {
    let mut g = BipartiteGraph::new(
        (0..m.rows()).map(RowVertex).collect(),
        (0..m.cols()).map(ColumnVertex).collect(),
    );
    for r in 0..m.rows() {
        for c in 0..m.cols() {
            if !m.get(r, c).is_zero() {
                g.add_edge(r, c);
            }
        }
    }
    g
}

/// [`support_graph`] restricted to square matrices.
pub fn matrix_pattern_graph(m: &SymbolicMatrix) -> Result<BipartiteGraph<RowVertex, ColumnVertex>, MatchError> {
    if m.rows() != m.cols() {
        return Err(MatchError::NotSquare {
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    Ok(support_graph(m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codegen::{Entry, SymbolicMatrix, VarPool};
    use crate::patterns::fixtures::fig1;
    use crate::patterns::Topology;

    #[test]
    fn trivial_matchings() {
        let mut g = BipartiteGraph::new(vec!['x'], vec!['y']);
        g.add_edge(0, 0);
        assert_eq!(complete_matching(&g), MatchOutcome::Complete(Matching { pairs: vec![(0, 0)] }));

        let mut g = BipartiteGraph::new(vec!["x1", "x2"], vec!["y"]);
        g.add_edge(0, 0);
        g.add_edge(1, 0);
        match complete_matching(&g) {
            MatchOutcome::Deficient { witness, .. } => {
                assert_eq!(witness.set, vec![0, 1]);
                assert_eq!(witness.neighborhood, vec![0]);
            }
            other => panic!("expected a Hall witness, got {other:?}"),
        }
    }

    #[test]
    fn erasure_graph_with_first_row_on_the_right() {
        let p = fig1();
        let g = build_erasure_nonerasure_graph(&p, &[0]).unwrap();
        let cols: Vec<usize> = g.right().iter().map(|c| c.col).collect();
        assert_eq!(cols, vec![0, 1, 2, 3, 4, 5]);
        assert_eq!(g.left().len(), 4);
        let m = complete_matching(&g);
        assert!(m.is_complete());
        let matched: Vec<usize> = m.matching().right_vertices().iter().map(|&r| g.right()[r].col).collect();
        assert_eq!(matched, vec![2, 3, 4, 5]);
    }

    #[test]
    fn erasure_graph_with_fifth_row_on_the_right() {
        // the circled non-erasures of the worked matching sit in row 5
        let p = fig1();
        let g = build_erasure_nonerasure_graph(&p, &[4]).unwrap();
        assert_eq!(g.left().len(), 5);
        let m = complete_matching(&g);
        assert!(m.is_complete());
        let matched: Vec<usize> = m.matching().right_vertices().iter().map(|&r| g.right()[r].col).collect();
        assert_eq!(matched, vec![5, 6, 7, 8, 9]);
    }

    #[test]
    fn erasure_graph_partition_errors() {
        let p = fig1();
        assert!(matches!(build_erasure_nonerasure_graph(&p, &[5]), Err(MatchError::BadPartition(_))));
        assert!(matches!(build_erasure_nonerasure_graph(&p, &[0, 1]), Err(MatchError::BadPartition(_))));
        assert!(matches!(build_erasure_nonerasure_graph(&p, &[]), Err(MatchError::BadPartition(_))));

        let t = Topology::new(4, 5, 1, 2).unwrap();
        let single = ErasurePattern::from_row_supports(t, &[vec![], vec![0, 2, 4]]).unwrap();
        let g = build_erasure_nonerasure_graph(&single, &[1]).unwrap();
        assert!(g.left().is_empty());
        assert!(complete_matching(&g).is_complete());
    }

    #[test]
    fn rowcol_graph_for_second_row() {
        let p = fig1();
        let g = build_rowcol_graph(&p, 1).unwrap();
        let left: Vec<usize> = g.left().iter().map(|v| v.0).collect();
        let right: Vec<usize> = g.right().iter().map(|v| v.0).collect();
        assert_eq!(left, vec![0, 2, 3, 4]);
        assert_eq!(right, vec![2, 3, 4, 8, 9]);
        let n = g.neighborhood(&[0]);
        assert_eq!(n.iter().map(|&r| g.right()[r].0).collect::<Vec<_>>(), vec![8, 9]);
        let profiles = p.row_profiles().unwrap();
        assert!(neighborhood_check(&g, &profiles).unwrap());
        assert_eq!(build_rowcol_graph(&p, 5), Err(MatchError::BadRow(6)));
    }

    #[test]
    fn rowcol_graph_single_row() {
        let t = Topology::new(3, 5, 1, 2).unwrap();
        let p = ErasurePattern::from_row_supports(t, &[vec![0, 1, 2]]).unwrap();
        let g = build_rowcol_graph(&p, 0).unwrap();
        assert!(g.left().is_empty() && g.right().is_empty());
        assert!(neighborhood_check(&g, &p.row_profiles().unwrap()).unwrap());
    }

    #[test]
    fn neighborhood_violation_detected() {
        let mut g = BipartiteGraph::new(vec![RowVertex(0)], vec![ColumnVertex(0), ColumnVertex(1)]);
        g.add_edge(0, 0);
        let profiles = vec![RowProfile {
            row: 0,
            support: vec![],
            excess: 2,
        }];
        assert!(!neighborhood_check(&g, &profiles).unwrap());
        assert_eq!(neighborhood_violation(&g, &profiles).unwrap(), Some(vec![0]));
        assert_eq!(neighborhood_check(&g, &[]), Err(MatchError::MissingProfile(1)));
    }

    #[test]
    fn matrix_pattern_graphs() {
        let mut pool = VarPool::new();
        let diag = SymbolicMatrix::from_fn(3, 3, |r, c| {
            if r == c {
                Entry::var(pool.fresh(format!("d[{r}]")))
            } else {
                Entry::Zero
            }
        });
        let g = matrix_pattern_graph(&diag).unwrap();
        let m = complete_matching(&g);
        assert_eq!(m.matching().pairs(), &[(0, 0), (1, 1), (2, 2)]);

        let zero = SymbolicMatrix::zeros(2, 2);
        match complete_matching(&matrix_pattern_graph(&zero).unwrap()) {
            MatchOutcome::Deficient { witness, .. } => {
                assert_eq!(witness.set, vec![0]);
                assert!(witness.neighborhood.is_empty());
            }
            MatchOutcome::Complete(_) => panic!("zero matrix cannot be matched"),
        }
        assert_eq!(
            matrix_pattern_graph(&SymbolicMatrix::zeros(2, 3)),
            Err(MatchError::NotSquare { rows: 2, cols: 3 })
        );
    }

    #[test]
    fn dot_output_marks_matching() {
        let mut g = BipartiteGraph::new(vec![RowVertex(0)], vec![ColumnVertex(0)]);
        g.add_edge(0, 0);
        let m = maximum_matching(&g);
        let dot = g.to_dot(Some(&m));
        assert!(dot.contains("L0 -- R0 [style=bold, color=red];"));
        assert!(dot.contains("label=\"row1\""));
    }
}
