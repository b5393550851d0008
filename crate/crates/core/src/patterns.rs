//! Topologies, erasure patterns and the counting conditions on them.
//!
//! Cells are addressed 0-based inside the library. The text format, every
//! `Display` impl and every report are 1-based, so printed output lines up
//! with the usual row/column numbering of the grid.

use std::fmt;

use thiserror::Error;

/// Widest row a pattern can hold; rows are stored as bitmasks.
pub const MAX_COLUMNS: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PatternError {
    #[error("invalid topology m={m} n={n} a={a} b={b}: need 1 <= a < m and 1 <= b < n")]
    BadTopology { m: usize, n: usize, a: usize, b: usize },
    #[error("grid has {0} columns, at most {MAX_COLUMNS} are supported")]
    TooWide(usize),
    #[error("cell ({row}, {col}) lies outside the {m}x{n} grid")]
    OutOfGrid { row: usize, col: usize, m: usize, n: usize },
    #[error("erasure pattern is empty")]
    EmptyPattern,
    #[error("row {row} has {count} erasures, fewer than b+1 = {needed}")]
    NotIrreducible { row: usize, count: usize, needed: usize },
    #[error("source row {0} is replicated more than once")]
    ReplicationBound(usize),
    #[error("precondition failed: {0}")]
    PreconditionFailed(String),
    #[error("line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
}

/// The product topology with `a` parities per column and `b` per row
/// (no global parities).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Topology {
    m: usize,
    n: usize,
    a: usize,
    b: usize,
}

impl Topology {
    pub fn new(m: usize, n: usize, a: usize, b: usize) -> Result<Self, PatternError> {
        if a == 0 || b == 0 || a >= m || b >= n {
            return Err(PatternError::BadTopology { m, n, a, b });
        }
        if n > MAX_COLUMNS {
            return Err(PatternError::TooWide(n));
        }
        Ok(Topology { m, n, a, b })
    }

    #[inline]
    pub fn m(&self) -> usize {
        self.m
    }
    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }
    #[inline]
    pub fn a(&self) -> usize {
        self.a
    }
    #[inline]
    pub fn b(&self) -> usize {
        self.b
    }

    /// Dimension of any code instantiating the topology, `(m-a)(n-b)`.
    pub fn dimension(&self) -> usize {
        (self.m - self.a) * (self.n - self.b)
    }

    pub fn cells(&self) -> usize {
        self.m * self.n
    }

    /// Row-major coordinate of a cell, i.e. its generator-matrix column.
    #[inline]
    pub fn cell_index(&self, row: usize, col: usize) -> usize {
        row * self.n + col
    }
}

impl fmt::Display for Topology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "T_{{{},{}}}({},{})", self.m, self.n, self.a, self.b)
    }
}

/// A set of row and column indices; displayed 1-based.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Grid {
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
}

impl Grid {
    pub fn u(&self) -> usize {
        self.rows.len()
    }
    pub fn v(&self) -> usize {
        self.cols.len()
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "U={} V={}", IndexSet(&self.rows), IndexSet(&self.cols))
    }
}

/// Formats 0-based indices as a 1-based set, e.g. `{1,2,5}`.
pub struct IndexSet<'a>(pub &'a [usize]);

impl fmt::Display for IndexSet<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (k, i) in self.0.iter().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            write!(f, "{}", i + 1)?;
        }
        f.write_str("}")
    }
}

/// A subgrid on which the regularity bound fails.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub grid: Grid,
    pub erasures: usize,
    pub bound: usize,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {} erasures > bound {}", self.grid, self.erasures, self.bound)
    }
}

/// Erased columns of one row and how far the row exceeds `b`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowProfile {
    pub row: usize,
    pub support: Vec<usize>,
    pub excess: usize,
}

/// Right side of the regularity inequality, `uv - max(u-a,0)·max(v-b,0)`.
pub fn regularity_bound(u: usize, v: usize, a: usize, b: usize) -> usize {
    u * v - u.saturating_sub(a) * v.saturating_sub(b)
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct ErasurePattern {
    topology: Topology,
    rows: Vec<u64>,
}

impl fmt::Debug for ErasurePattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ErasurePattern({}, {:?})", self.topology, self.erased_cells().collect::<Vec<_>>())
    }
}

impl ErasurePattern {
    pub fn empty(topology: Topology) -> Self {
        ErasurePattern {
            topology,
            rows: vec![0; topology.m],
        }
    }

    /// Builds a pattern from 0-based cells; duplicates are merged.
    pub fn from_cells<I>(topology: Topology, cells: I) -> Result<Self, PatternError>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut p = Self::empty(topology);
        for (row, col) in cells {
            if row >= topology.m || col >= topology.n {
                return Err(PatternError::OutOfGrid {
                    row: row + 1,
                    col: col + 1,
                    m: topology.m,
                    n: topology.n,
                });
            }
            p.rows[row] |= 1 << col;
        }
        Ok(p)
    }

    /// Builds a pattern from per-row lists of 0-based erased columns.
    pub fn from_row_supports(topology: Topology, supports: &[Vec<usize>]) -> Result<Self, PatternError> {
        let cells = supports
            .iter()
            .enumerate()
            .flat_map(|(i, cols)| cols.iter().map(move |&j| (i, j)));
        Self::from_cells(topology, cells)
    }

    /// Decodes a row-major bitmask (bit `i*n + j` is cell `(i, j)`).
    pub fn from_bits(topology: Topology, bits: u64) -> Self {
        let n = topology.n;
        let mask = row_mask(n);
        let rows = (0..topology.m)
            .map(|i| if i * n >= 64 { 0 } else { (bits >> (i * n)) & mask })
            .collect();
        ErasurePattern { topology, rows }
    }

    /// Row-major bitmask; `None` when the grid has more than 64 cells.
    pub fn to_bits(&self) -> Option<u64> {
        if self.topology.cells() > 64 {
            return None;
        }
        let n = self.topology.n;
        Some(self.rows.iter().enumerate().fold(0u64, |acc, (i, &r)| acc | (r << (i * n))))
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    /// Same cells under a different topology with the same grid size.
    pub fn with_topology(&self, topology: Topology) -> Result<Self, PatternError> {
        if topology.m != self.topology.m || topology.n != self.topology.n {
            return Err(PatternError::PreconditionFailed(format!(
                "cannot reinterpret a {}x{} pattern under {}",
                self.topology.m, self.topology.n, topology
            )));
        }
        Ok(ErasurePattern {
            topology,
            rows: self.rows.clone(),
        })
    }

    #[inline]
    pub fn is_erased(&self, row: usize, col: usize) -> bool {
        self.rows[row] >> col & 1 == 1
    }

    pub fn erase(&mut self, row: usize, col: usize) {
        self.rows[row] |= 1 << col;
    }

    pub fn restore(&mut self, row: usize, col: usize) {
        self.rows[row] &= !(1 << col);
    }

    #[inline]
    pub fn row_mask(&self, row: usize) -> u64 {
        self.rows[row]
    }

    pub fn row_count(&self, row: usize) -> usize {
        self.rows[row].count_ones() as usize
    }

    pub fn col_count(&self, col: usize) -> usize {
        self.rows.iter().filter(|&&r| r >> col & 1 == 1).count()
    }

    pub fn count(&self) -> usize {
        self.rows.iter().map(|r| r.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.iter().all(|&r| r == 0)
    }

    /// Erased columns of a row, ascending.
    pub fn row_support(&self, row: usize) -> Vec<usize> {
        bits_of(self.rows[row])
    }

    /// Erased cells in row-major order.
    pub fn erased_cells(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(i, &r)| bits_of(r).into_iter().map(move |j| (i, j)))
    }

    /// Row-major coordinates of the surviving cells.
    pub fn surviving_indices(&self) -> Vec<usize> {
        let n = self.topology.n;
        (0..self.topology.m)
            .flat_map(|i| (0..n).filter(move |&j| !self.is_erased(i, j)).map(move |j| i * n + j))
            .collect()
    }

    pub fn is_subset_of(&self, other: &ErasurePattern) -> bool {
        self.rows.len() == other.rows.len() && self.rows.iter().zip(&other.rows).all(|(a, b)| a & !b == 0)
    }

    /// Rows and columns touched by at least one erasure.
    pub fn enclosing_grid(&self) -> Result<Grid, PatternError> {
        if self.is_empty() {
            return Err(PatternError::EmptyPattern);
        }
        let rows = (0..self.topology.m).filter(|&i| self.rows[i] != 0).collect();
        let cols = bits_of(self.rows.iter().fold(0, |acc, &r| acc | r));
        Ok(Grid { rows, cols })
    }

    /// Rows holding at least one erasure (empty for the empty pattern).
    pub fn erased_rows(&self) -> Vec<usize> {
        (0..self.topology.m).filter(|&i| self.rows[i] != 0).collect()
    }

    /// Swaps the roles of rows and columns (and of `a` and `b`).
    pub fn transpose(&self) -> ErasurePattern {
        let t = self.topology;
        let topology = Topology {
            m: t.n,
            n: t.m,
            a: t.b,
            b: t.a,
        };
        let mut out = ErasurePattern::empty(topology);
        for (i, j) in self.erased_cells() {
            out.erase(j, i);
        }
        out
    }

    pub fn is_regular(&self) -> bool {
        self.regularity_violation().is_none()
    }

    /// First subgrid violating the regularity bound, if any.
    ///
    /// For a fixed row set `U` the bound depends on the column set only
    /// through its size, so the worst `V` of size `v` is the `v` columns with
    /// the most erasures inside `U`. Row sets are scanned in binary counting
    /// order over the shorter side of the grid; ties between equally loaded
    /// columns go to the lower index.
    pub fn regularity_violation(&self) -> Option<Violation> {
        let t = self.topology;
        if t.n < t.m && t.m <= MAX_COLUMNS {
            return self.transpose().regularity_violation().map(|v| Violation {
                grid: Grid {
                    rows: v.grid.cols,
                    cols: v.grid.rows,
                },
                ..v
            });
        }
        let (m, n, a, b) = (t.m, t.n, t.a, t.b);
        assert!(m < 32, "regularity check enumerates 2^{m} row subsets");
        let mut counts = vec![0usize; n];
        let mut order: Vec<usize> = (0..n).collect();
        for umask in 1u32..(1u32 << m) {
            let u = umask.count_ones() as usize;
            if u <= a {
                continue;
            }
            counts.iter_mut().for_each(|c| *c = 0);
            for i in 0..m {
                if umask >> i & 1 == 1 {
                    let mut r = self.rows[i];
                    while r != 0 {
                        counts[r.trailing_zeros() as usize] += 1;
                        r &= r - 1;
                    }
                }
            }
            order.sort_by(|&x, &y| counts[y].cmp(&counts[x]).then(x.cmp(&y)));
            let mut acc = 0;
            for v in 1..=n {
                acc += counts[order[v - 1]];
                if v <= b {
                    continue;
                }
                let bound = regularity_bound(u, v, a, b);
                if acc > bound {
                    let mut cols = order[..v].to_vec();
                    cols.sort_unstable();
                    let rows = (0..m).filter(|&i| umask >> i & 1 == 1).collect();
                    return Some(Violation {
                        grid: Grid { rows, cols },
                        erasures: acc,
                        bound,
                    });
                }
            }
        }
        None
    }

    /// Every nonempty row has at least `b+1` erasures.
    pub fn is_row_irreducible(&self) -> bool {
        let need = self.topology.b + 1;
        self.rows.iter().all(|&r| r == 0 || r.count_ones() as usize >= need)
    }

    /// Every nonempty column has at least `a+1` erasures.
    pub fn is_col_irreducible(&self) -> bool {
        let need = self.topology.a + 1;
        (0..self.topology.n).all(|j| {
            let c = self.col_count(j);
            c == 0 || c >= need
        })
    }

    pub fn is_irreducible(&self) -> bool {
        self.is_row_irreducible() && self.is_col_irreducible()
    }

    /// Clears every row with at most `b` erasures and keeps the others verbatim.
    pub fn reduce_rowwise(&self) -> ErasurePattern {
        let need = self.topology.b + 1;
        let rows = self
            .rows
            .iter()
            .map(|&r| if r.count_ones() as usize >= need { r } else { 0 })
            .collect();
        ErasurePattern {
            topology: self.topology,
            rows,
        }
    }

    /// Support and excess of every nonempty row.
    pub fn row_profiles(&self) -> Result<Vec<RowProfile>, PatternError> {
        let b = self.topology.b;
        let mut out = Vec::new();
        for i in 0..self.topology.m {
            let count = self.row_count(i);
            if count == 0 {
                continue;
            }
            if count < b + 1 {
                return Err(PatternError::NotIrreducible {
                    row: i + 1,
                    count,
                    needed: b + 1,
                });
            }
            out.push(RowProfile {
                row: i,
                support: self.row_support(i),
                excess: count - b,
            });
        }
        Ok(out)
    }

    /// Parses the text format: a header `m n a b`, then `m` lines of `n`
    /// characters where `.` is intact and `x` is erased.
    pub fn parse(text: &str) -> Result<Self, PatternError> {
        let mut lines = text.lines().enumerate();
        let (topology, _) = parse_header(&mut lines)?;
        let mut p = ErasurePattern::empty(topology);
        for i in 0..topology.m {
            let Some((ln, line)) = lines.next() else {
                return Err(parse_err(i + 2, 1, format!("expected {} grid rows, found {i}", topology.m)));
            };
            let line = line.trim_end();
            let mut width = 0;
            for (c, ch) in line.chars().enumerate() {
                if c >= topology.n {
                    return Err(parse_err(ln + 1, c + 1, format!("row longer than n = {}", topology.n)));
                }
                match ch {
                    '.' => {}
                    'x' => p.erase(i, c),
                    other => return Err(parse_err(ln + 1, c + 1, format!("unexpected character {other:?}"))),
                }
                width = c + 1;
            }
            if width < topology.n {
                return Err(parse_err(ln + 1, width + 1, format!("row shorter than n = {}", topology.n)));
            }
        }
        for (ln, line) in lines {
            if !line.trim().is_empty() {
                return Err(parse_err(ln + 1, 1, "unexpected content after the grid".into()));
            }
        }
        Ok(p)
    }
}

impl fmt::Display for ErasurePattern {
    /// Serializes to the text format accepted by [`ErasurePattern::parse`].
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let t = self.topology;
        writeln!(f, "{} {} {} {}", t.m, t.n, t.a, t.b)?;
        for i in 0..t.m {
            let line: String = (0..t.n).map(|j| if self.is_erased(i, j) { 'x' } else { '.' }).collect();
            writeln!(f, "{line}")?;
        }
        Ok(())
    }
}

fn parse_err(line: usize, column: usize, message: String) -> PatternError {
    PatternError::Parse { line, column, message }
}

/// Reads the `m n a b` header shared by every grid file format.
pub fn parse_header<'a, I>(lines: &mut I) -> Result<(Topology, usize), PatternError>
where
    I: Iterator<Item = (usize, &'a str)>,
{
    let Some((ln, header)) = lines.by_ref().find(|(_, l)| !l.trim().is_empty()) else {
        return Err(parse_err(1, 1, "missing header line \"m n a b\"".into()));
    };
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 4 {
        return Err(parse_err(ln + 1, 1, format!("header needs 4 fields \"m n a b\", found {}", fields.len())));
    }
    let mut nums = [0usize; 4];
    let mut col = 1;
    for (k, fld) in fields.iter().enumerate() {
        let pos = header[col - 1..].find(fld).map_or(col, |p| p + col);
        nums[k] = fld
            .parse()
            .map_err(|_| parse_err(ln + 1, pos, format!("not a non-negative integer: {fld:?}")))?;
        col = pos + fld.len();
    }
    let topology = Topology::new(nums[0], nums[1], nums[2], nums[3])
        .map_err(|e| parse_err(ln + 1, 1, e.to_string()))?;
    Ok((topology, ln))
}

#[inline]
fn row_mask(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

pub(crate) fn bits_of(mut r: u64) -> Vec<usize> {
    let mut out = Vec::with_capacity(r.count_ones() as usize);
    while r != 0 {
        out.push(r.trailing_zeros() as usize);
        r &= r - 1;
    }
    out
}

/// An `a = 2` pattern obtained by appending copies of rows of a regular,
/// row-wise irreducible `a = 1` pattern, each source row copied at most once.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtendedPattern {
    pub base: ErasurePattern,
    pub sources: Vec<usize>,
    pub result: ErasurePattern,
}

impl ExtendedPattern {
    /// Regularity of the extended pattern under `(a=2, b)`. Always expected
    /// to hold for a valid extension; evaluated, never assumed.
    pub fn check_regular(&self) -> bool {
        self.result.is_regular()
    }

    /// Row of the base pattern that row `row` of the result copies.
    pub fn source_of(&self, row: usize) -> usize {
        let m = self.base.topology.m;
        if row < m {
            row
        } else {
            self.sources[row - m]
        }
    }
}

/// Appends rows `m+1..m+m'` copying the given source rows (0-based).
pub fn extend_pattern(base: &ErasurePattern, sources: &[usize]) -> Result<ExtendedPattern, PatternError> {
    let t = base.topology;
    if t.a != 1 {
        return Err(PatternError::PreconditionFailed(format!(
            "base pattern must be for a=1, got a={}",
            t.a
        )));
    }
    let mut seen = vec![false; t.m];
    for &s in sources {
        if s >= t.m {
            return Err(PatternError::OutOfGrid {
                row: s + 1,
                col: 1,
                m: t.m,
                n: t.n,
            });
        }
        if std::mem::replace(&mut seen[s], true) {
            return Err(PatternError::ReplicationBound(s + 1));
        }
    }
    if !base.is_row_irreducible() {
        return Err(PatternError::PreconditionFailed("base pattern is not row-wise irreducible".into()));
    }
    if !base.is_regular() {
        return Err(PatternError::PreconditionFailed("base pattern is not regular".into()));
    }
    let topology = Topology::new(t.m + sources.len(), t.n, 2, t.b)
        .map_err(|e| PatternError::PreconditionFailed(e.to_string()))?;
    let mut rows = base.rows.clone();
    rows.extend(sources.iter().map(|&s| base.rows[s]));
    Ok(ExtendedPattern {
        base: base.clone(),
        sources: sources.to_vec(),
        result: ErasurePattern { topology, rows },
    })
}


#[cfg(test)]
mod tests {
    use super::fixtures::fig1;
    use super::*;

    fn topo(m: usize, n: usize, a: usize, b: usize) -> Topology {
        Topology::new(m, n, a, b).unwrap()
    }

    #[test]
    fn topology_invariants() {
        assert!(Topology::new(1, 3, 1, 1).is_err());
        assert!(Topology::new(3, 3, 0, 1).is_err());
        assert!(Topology::new(3, 3, 1, 3).is_err());
        assert!(Topology::new(2, 65, 1, 1).is_err());
        assert_eq!(topo(6, 10, 1, 2).dimension(), 40);
    }

    #[test]
    fn enclosing_grid_examples() {
        let g = fig1().enclosing_grid().unwrap();
        assert_eq!(g.rows, vec![0, 1, 2, 3, 4]);
        assert_eq!(g.cols, (2..10).collect::<Vec<_>>());
        assert_eq!(g.to_string(), "U={1,2,3,4,5} V={3,4,5,6,7,8,9,10}");

        let t = topo(6, 10, 1, 2);
        let single = ErasurePattern::from_cells(t, [(1, 2)]).unwrap();
        let g = single.enclosing_grid().unwrap();
        assert_eq!((g.rows, g.cols), (vec![1], vec![2]));

        let full = ErasurePattern::from_bits(topo(3, 4, 1, 1), (1 << 12) - 1);
        let g = full.enclosing_grid().unwrap();
        assert_eq!((g.u(), g.v()), (3, 4));

        assert_eq!(ErasurePattern::empty(t).enclosing_grid(), Err(PatternError::EmptyPattern));
    }

    #[test]
    fn regularity_examples() {
        assert!(fig1().is_regular());
        assert!(ErasurePattern::empty(topo(3, 3, 1, 1)).is_regular());

        let block = ErasurePattern::from_cells(topo(3, 3, 1, 1), [(0, 0), (0, 1), (1, 0), (1, 1)]).unwrap();
        let v = block.regularity_violation().unwrap();
        assert_eq!(v.grid.rows, vec![0, 1]);
        assert_eq!(v.grid.cols, vec![0, 1]);
        assert_eq!((v.erasures, v.bound), (4, 3));
    }

    #[test]
    fn transposed_witness_is_mapped_back() {
        // 4x2 grid: the check runs on the 2x4 transpose
        let t = topo(4, 2, 1, 1);
        let p = ErasurePattern::from_cells(t, [(0, 0), (0, 1), (1, 0), (1, 1)]).unwrap();
        let v = p.regularity_violation().unwrap();
        assert_eq!(v.grid.rows, vec![0, 1]);
        assert_eq!(v.grid.cols, vec![0, 1]);
        assert_eq!(v.erasures, 4);
    }

    #[test]
    fn irreducibility_examples() {
        let p = fig1();
        assert!(p.is_row_irreducible());
        let counts: Vec<usize> = (0..6).map(|i| p.row_count(i)).collect();
        assert_eq!(counts, vec![4, 3, 3, 3, 3, 0]);
        assert!(ErasurePattern::empty(topo(3, 3, 1, 1)).is_irreducible());
        let single = ErasurePattern::from_cells(topo(3, 3, 1, 1), [(0, 0)]).unwrap();
        assert!(!single.is_row_irreducible());
        assert!(!single.is_col_irreducible());
    }

    #[test]
    fn reduce_rowwise_examples() {
        assert_eq!(fig1().reduce_rowwise(), fig1());

        let t = topo(3, 6, 1, 2);
        let light = ErasurePattern::from_row_supports(t, &[vec![0, 1]]).unwrap();
        assert!(light.reduce_rowwise().is_empty());

        // counts b+1, b, b+2
        let mixed = ErasurePattern::from_row_supports(t, &[vec![0, 1, 2], vec![3, 4], vec![0, 2, 4, 5]]).unwrap();
        let reduced = mixed.reduce_rowwise();
        assert_eq!(reduced.row_support(0), vec![0, 1, 2]);
        assert!(reduced.row_support(1).is_empty());
        assert_eq!(reduced.row_support(2), vec![0, 2, 4, 5]);
        assert!(reduced.is_row_irreducible());
    }

    #[test]
    fn row_profile_examples() {
        let profiles = fig1().row_profiles().unwrap();
        let excess: Vec<usize> = profiles.iter().map(|p| p.excess).collect();
        assert_eq!(excess, vec![2, 1, 1, 1, 1]);
        assert_eq!(profiles[0].support, vec![6, 7, 8, 9]);

        let t = topo(3, 6, 1, 2);
        let one = ErasurePattern::from_row_supports(t, &[vec![], vec![0, 3, 5]]).unwrap();
        let p = one.row_profiles().unwrap();
        assert_eq!((p.len(), p[0].row, p[0].excess), (1, 1, 1));

        let light = ErasurePattern::from_row_supports(t, &[vec![0]]).unwrap();
        assert!(matches!(light.row_profiles(), Err(PatternError::NotIrreducible { row: 1, .. })));
    }

    #[test]
    fn extension_examples() {
        let x = extend_pattern(&fig1(), &[0]).unwrap();
        assert_eq!(x.result.topology(), topo(7, 10, 2, 2));
        assert_eq!(x.result.row_support(6), vec![6, 7, 8, 9]);
        assert!(x.check_regular());

        let none = extend_pattern(&fig1(), &[]).unwrap();
        assert_eq!(none.result.topology(), topo(6, 10, 2, 2));
        assert_eq!(none.result.to_string().lines().skip(1).collect::<Vec<_>>(),
                   fig1().to_string().lines().skip(1).collect::<Vec<_>>());
        assert!(none.check_regular());

        assert_eq!(extend_pattern(&fig1(), &[0, 0]), Err(PatternError::ReplicationBound(1)));

        let light = ErasurePattern::from_cells(topo(3, 3, 1, 1), [(0, 0)]).unwrap();
        assert!(matches!(extend_pattern(&light, &[0]), Err(PatternError::PreconditionFailed(_))));
    }

    #[test]
    fn triplicated_row_can_break_regularity() {
        // three copies of a row with 3 erasures in a 3x3 grid under a=2, b=1:
        // U = all rows, V = all columns gives 9 > 9 - 1*2 = 7
        let t = topo(3, 3, 2, 1);
        let p = ErasurePattern::from_bits(t, 0b111_111_111);
        assert!(!p.is_regular());
        // two copies of a 2-erasure row in 2 extra rows stays regular
        let t = topo(4, 3, 2, 1);
        let p = ErasurePattern::from_row_supports(t, &[vec![0, 1], vec![0, 1]]).unwrap();
        assert!(p.is_regular());
    }

    #[test]
    fn text_format_round_trip() {
        let text = fig1().to_string();
        assert!(text.starts_with("6 10 1 2\n......xxxx\n"));
        assert_eq!(ErasurePattern::parse(&text).unwrap(), fig1());
    }

    #[test]
    fn parse_errors_carry_positions() {
        let e = ErasurePattern::parse("2 3 1 1\n..x\n.y.\n").unwrap_err();
        assert_eq!(e, parse_err(3, 2, "unexpected character 'y'".into()));
        let e = ErasurePattern::parse("2 3 1 1\n..x.\n...\n").unwrap_err();
        assert!(matches!(e, PatternError::Parse { line: 2, column: 4, .. }));
        let e = ErasurePattern::parse("2 3 1 1\n..\n...\n").unwrap_err();
        assert!(matches!(e, PatternError::Parse { line: 2, column: 3, .. }));
        let e = ErasurePattern::parse("2 3 1 1\n...\n").unwrap_err();
        assert!(matches!(e, PatternError::Parse { line: 3, .. }));
        let e = ErasurePattern::parse("2 3 1\n").unwrap_err();
        assert!(matches!(e, PatternError::Parse { line: 1, .. }));
        let e = ErasurePattern::parse("2 3 2 1\n...\n...\n").unwrap_err();
        assert!(matches!(e, PatternError::Parse { line: 1, .. }));
    }

    #[test]
    fn bits_round_trip() {
        let t = topo(3, 4, 1, 1);
        let p = ErasurePattern::from_cells(t, [(0, 0), (2, 3)]).unwrap();
        assert_eq!(p.to_bits(), Some(1 | 1 << 11));
        assert_eq!(ErasurePattern::from_bits(t, p.to_bits().unwrap()), p);
        assert_eq!(p.surviving_indices().len(), 10);
    }
}
