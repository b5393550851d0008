//! Symbolic generator matrices for product codes and their instantiation
//! over a prime field.
//!
//! A row code is built per erasure pattern with three blocks: a unit row for
//! every column the pattern never touches, `r_i` rows per erased row `i`
//! (`b` shared columns of the row's support plus one extra column each), and
//! fully supported filler rows on the pattern's columns. The column code is a
//! single parity check for `a = 1` and `[Σ | Λ]` with `Λ` diagonal for
//! `a = 2`. The code is their tensor product, instantiated by drawing every
//! indeterminate uniformly from the nonzero field elements.

use std::collections::BTreeMap;
use std::fmt;

use rand::Rng;
use thiserror::Error;

use crate::gfield::{Field, FieldMatrix};
use crate::matchgraph::{build_erasure_nonerasure_graph, complete_matching, support_graph};
use crate::patterns::{ErasurePattern, ExtendedPattern, PatternError, Topology, Violation};
use crate::seeds::{derive_seed, rng_from_seed};

/// Fresh seeds tried by the sampling functions after the first one fails.
pub const DEFAULT_RETRIES: u32 = 8;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodegenError {
    #[error("pattern is not regular ({0})")]
    NotRegular(Violation),
    #[error("pattern is not row-wise irreducible")]
    NotIrreducible,
    #[error("the row-code construction needs at least two erased rows, found {0}")]
    TooFewRows(usize),
    #[error("bad dimension: {0}")]
    BadDimension(String),
    #[error("no full-rank instantiation found after {attempts} attempts over GF({q})")]
    UnluckyField { attempts: u32, q: u64 },
    #[error("proof decomposition failed at {block}")]
    DecompositionFailure { block: String },
    #[error("precondition failed: {0}")]
    PreconditionFailed(String),
    #[error(transparent)]
    Pattern(#[from] PatternError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(u32);

impl VarId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Registry of indeterminates shared by every matrix of one construction.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VarPool {
    names: Vec<String>,
}

impl VarPool {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn fresh(&mut self, name: impl Into<String>) -> VarId {
        self.names.push(name.into());
        VarId(self.names.len() as u32 - 1)
    }

    pub fn name(&self, v: VarId) -> &str {
        &self.names[v.index()]
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }
}

/// Zero, the constant one, or a product of indeterminates.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Entry {
    Zero,
    Unit,
    Mono(Vec<VarId>),
}

impl Entry {
    pub fn var(v: VarId) -> Self {
        Entry::Mono(vec![v])
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Entry::Zero)
    }

    pub fn degree(&self) -> Option<usize> {
        match self {
            Entry::Zero => None,
            Entry::Unit => Some(0),
            Entry::Mono(vs) => Some(vs.len()),
        }
    }

    pub fn vars(&self) -> &[VarId] {
        match self {
            Entry::Mono(vs) => vs,
            _ => &[],
        }
    }

    pub fn mul(&self, other: &Entry) -> Entry {
        match (self, other) {
            (Entry::Zero, _) | (_, Entry::Zero) => Entry::Zero,
            (Entry::Unit, e) | (e, Entry::Unit) => e.clone(),
            (Entry::Mono(x), Entry::Mono(y)) => {
                let mut vs = x.clone();
                vs.extend_from_slice(y);
                vs.sort_unstable();
                Entry::Mono(vs)
            }
        }
    }

    pub fn display<'a>(&'a self, pool: &'a VarPool) -> impl fmt::Display + 'a {
        EntryDisplay { entry: self, pool }
    }
}

struct EntryDisplay<'a> {
    entry: &'a Entry,
    pool: &'a VarPool,
}

impl fmt::Display for EntryDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.entry {
            Entry::Zero => f.write_str("0"),
            Entry::Unit => f.write_str("1"),
            Entry::Mono(vs) => {
                for (k, v) in vs.iter().enumerate() {
                    if k > 0 {
                        f.write_str("*")?;
                    }
                    f.write_str(self.pool.name(*v))?;
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolicMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<Entry>,
}

impl SymbolicMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        SymbolicMatrix {
            rows,
            cols,
            entries: vec![Entry::Zero; rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Entry) -> Self {
        let mut entries = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                entries.push(f(r, c));
            }
        }
        SymbolicMatrix { rows, cols, entries }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> &Entry {
        &self.entries[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, e: Entry) {
        self.entries[r * self.cols + c] = e;
    }

    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    pub fn row_is_zero(&self, r: usize) -> bool {
        (0..self.cols).all(|c| self.get(r, c).is_zero())
    }

    /// Nonzero columns of a row, ascending.
    pub fn row_support(&self, r: usize) -> Vec<usize> {
        (0..self.cols).filter(|&c| !self.get(r, c).is_zero()).collect()
    }

    /// Restriction to the given rows and columns, in the order given.
    pub fn submatrix(&self, rowset: &[usize], colset: &[usize]) -> SymbolicMatrix {
        SymbolicMatrix::from_fn(rowset.len(), colset.len(), |r, c| self.get(rowset[r], colset[c]).clone())
    }

    /// Every indeterminate occurring in the matrix, ascending and deduplicated.
    pub fn variables(&self) -> Vec<VarId> {
        let mut vs: Vec<VarId> = self.entries.iter().flat_map(|e| e.vars().iter().copied()).collect();
        vs.sort_unstable();
        vs.dedup();
        vs
    }

    /// True when no two nonzero entries share an indeterminate and every
    /// nonzero entry is a single indeterminate.
    pub fn has_distinct_variables(&self) -> bool {
        let mut seen = Vec::new();
        for e in &self.entries {
            match e {
                Entry::Zero => {}
                Entry::Unit => return false,
                Entry::Mono(vs) if vs.len() == 1 => seen.push(vs[0]),
                Entry::Mono(_) => return false,
            }
        }
        let total = seen.len();
        seen.sort_unstable();
        seen.dedup();
        seen.len() == total
    }

    /// Stacks `other` below `self`.
    pub fn vstack(&self, other: &SymbolicMatrix) -> SymbolicMatrix {
        assert_eq!(self.cols, other.cols, "vstack needs equal column counts");
        let mut entries = self.entries.clone();
        entries.extend_from_slice(&other.entries);
        SymbolicMatrix {
            rows: self.rows + other.rows,
            cols: self.cols,
            entries,
        }
    }

    pub fn render(&self, pool: &VarPool) -> String {
        let mut out = String::new();
        for r in 0..self.rows {
            let line: Vec<String> = (0..self.cols).map(|c| self.get(r, c).display(pool).to_string()).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }
}

/// Kronecker product: block `(i, j)` is `outer[i][j] · inner`.
pub fn tensor(outer: &SymbolicMatrix, inner: &SymbolicMatrix) -> SymbolicMatrix {
    let (r2, c2) = (inner.rows, inner.cols);
    let mut out = SymbolicMatrix::zeros(outer.rows * r2, outer.cols * c2);
    for i in 0..outer.rows {
        for j in 0..outer.cols {
            let a = outer.get(i, j);
            if a.is_zero() {
                continue;
            }
            for k in 0..r2 {
                for l in 0..c2 {
                    out.set(i * r2 + k, j * c2 + l, a.mul(inner.get(k, l)));
                }
            }
        }
    }
    out
}

/// Values for every indeterminate of a pool, indexed by [`VarId`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    pub field: Field,
    pub seed: u64,
    values: Vec<u64>,
}

impl Assignment {
    /// Draws each value independently and uniformly from `[1, q-1]`.
    pub fn random(pool: &VarPool, field: Field, seed: u64) -> Self {
        let mut rng = rng_from_seed(seed);
        let q = field.modulus();
        let values = (0..pool.len()).map(|_| rng.gen_range(1..q.max(2))).collect();
        Assignment { field, seed, values }
    }

    pub fn from_values(field: Field, seed: u64, values: Vec<u64>) -> Self {
        let values = values.into_iter().map(|v| field.reduce(v)).collect();
        Assignment { field, seed, values }
    }

    pub fn value(&self, v: VarId) -> u64 {
        self.values[v.index()]
    }

    pub fn values(&self) -> &[u64] {
        &self.values
    }

    pub fn eval_entry(&self, e: &Entry) -> u64 {
        let f = self.field;
        match e {
            Entry::Zero => 0,
            Entry::Unit => 1 % f.modulus(),
            Entry::Mono(vs) => vs.iter().fold(1, |acc, &v| f.mul(acc, self.value(v))),
        }
    }

    pub fn evaluate(&self, m: &SymbolicMatrix) -> FieldMatrix {
        let data = m.entries.iter().map(|e| self.eval_entry(e)).collect();
        FieldMatrix::from_vec(self.field, m.rows, m.cols, data).expect("shape preserved")
    }
}

pub fn instantiate(m: &SymbolicMatrix, pool: &VarPool, field: Field, seed: u64) -> (FieldMatrix, Assignment) {
    let assignment = Assignment::random(pool, field, seed);
    (assignment.evaluate(m), assignment)
}

/// A matrix with a fresh indeterminate in every position.
pub fn generic_matrix(rows: usize, cols: usize, pool: &mut VarPool, prefix: &str) -> SymbolicMatrix {
    SymbolicMatrix::from_fn(rows, cols, |r, c| Entry::var(pool.fresh(format!("{prefix}[{},{}]", r + 1, c + 1))))
}

/// Role of one row of the structured row-code generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowRole {
    /// Unit row on a column the pattern never erases.
    Identity { col: usize },
    /// One of the `r_i` rows for erased row `row`, adding column `extra`.
    Excess { row: usize, extra: usize },
    /// Fully supported row on the pattern's columns.
    Filler,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowBlock {
    pub row: usize,
    pub shared: Vec<usize>,
    pub extras: Vec<usize>,
}

/// Layout of a structured row-code generator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GRowPlan {
    pub n: usize,
    pub b: usize,
    pub pattern_cols: Vec<usize>,
    pub blocks: Vec<RowBlock>,
    pub roles: Vec<RowRole>,
}

impl GRowPlan {
    pub fn identity_rows(&self) -> Vec<usize> {
        self.rows_where(|r| matches!(r, RowRole::Identity { .. }))
    }

    pub fn excess_rows(&self) -> Vec<usize> {
        self.rows_where(|r| matches!(r, RowRole::Excess { .. }))
    }

    /// Generator rows contributed by erased row `row`.
    pub fn excess_rows_of(&self, row: usize) -> Vec<usize> {
        self.rows_where(|r| matches!(r, RowRole::Excess { row: i, .. } if *i == row))
    }

    pub fn filler_rows(&self) -> Vec<usize> {
        self.rows_where(|r| matches!(r, RowRole::Filler))
    }

    fn rows_where(&self, pred: impl Fn(&RowRole) -> bool) -> Vec<usize> {
        (0..self.roles.len()).filter(|&k| pred(&self.roles[k])).collect()
    }
}

/// A structured row code together with its layout.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowCode {
    pub matrix: SymbolicMatrix,
    pub plan: GRowPlan,
}

/// Per-row override of the `b` shared columns (0-based row and columns).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GrowOptions {
    pub shared_override: BTreeMap<usize, Vec<usize>>,
}

/// `(n-b) x n` row-code generator for a regular, row-wise irreducible
/// pattern with at least two erased rows. The shared columns of each row are
/// its `b` smallest erased columns unless overridden.
pub fn build_grow(pattern: &ErasurePattern, pool: &mut VarPool) -> Result<RowCode, CodegenError> {
    build_grow_with(pattern, pool, &GrowOptions::default())
}

pub fn build_grow_with(
    pattern: &ErasurePattern,
    pool: &mut VarPool,
    options: &GrowOptions,
) -> Result<RowCode, CodegenError> {
    let t = pattern.topology();
    let (n, b) = (t.n(), t.b());
    if !pattern.is_row_irreducible() {
        return Err(CodegenError::NotIrreducible);
    }
    if let Some(v) = pattern.regularity_violation() {
        return Err(CodegenError::NotRegular(v));
    }
    let profiles = pattern.row_profiles()?;
    if profiles.len() < 2 {
        return Err(CodegenError::TooFewRows(profiles.len()));
    }
    let grid = pattern.enclosing_grid()?;
    let v = grid.v();
    let excess_total: usize = profiles.iter().map(|p| p.excess).sum();
    // regularity on U x V gives ub + Σ r_i <= v + ub - b
    let filler = (v - b)
        .checked_sub(excess_total)
        .ok_or_else(|| CodegenError::PreconditionFailed("filler row count would be negative".into()))?;

    let mut blocks = Vec::with_capacity(profiles.len());
    for p in &profiles {
        let shared = match options.shared_override.get(&p.row) {
            Some(s) => {
                let mut s = s.clone();
                s.sort_unstable();
                s.dedup();
                if s.len() != b || s.iter().any(|c| !p.support.contains(c)) {
                    return Err(CodegenError::PreconditionFailed(format!(
                        "override for row {} must be {b} erased columns of that row",
                        p.row + 1
                    )));
                }
                s
            }
            None => p.support[..b].to_vec(),
        };
        let extras = p.support.iter().copied().filter(|c| !shared.contains(c)).collect();
        blocks.push(RowBlock {
            row: p.row,
            shared,
            extras,
        });
    }

    let identity_cols: Vec<usize> = (0..n).filter(|c| !grid.cols.contains(c)).collect();
    let mut roles: Vec<RowRole> = identity_cols.iter().map(|&col| RowRole::Identity { col }).collect();
    for blk in &blocks {
        roles.extend(blk.extras.iter().map(|&extra| RowRole::Excess { row: blk.row, extra }));
    }
    roles.extend(std::iter::repeat_n(RowRole::Filler, filler));
    debug_assert_eq!(roles.len(), n - b);

    let mut matrix = SymbolicMatrix::zeros(n - b, n);
    for (k, role) in roles.iter().enumerate() {
        let support: Vec<usize> = match *role {
            RowRole::Identity { col } => vec![col],
            RowRole::Excess { row, extra } => {
                let blk = blocks.iter().find(|bk| bk.row == row).expect("block exists");
                let mut s = blk.shared.clone();
                s.push(extra);
                s.sort_unstable();
                s
            }
            RowRole::Filler => grid.cols.clone(),
        };
        for c in support {
            matrix.set(k, c, Entry::var(pool.fresh(format!("x[{},{}]", k + 1, c + 1))));
        }
    }
    Ok(RowCode {
        matrix,
        plan: GRowPlan {
            n,
            b,
            pattern_cols: grid.cols,
            blocks,
            roles,
        },
    })
}

/// `[1 | I_{m-1}]`, the single parity check column code.
pub fn build_gcol_a1(m: usize) -> Result<SymbolicMatrix, CodegenError> {
    if m < 2 {
        return Err(CodegenError::BadDimension(format!("parity column code needs m >= 2, got {m}")));
    }
    Ok(SymbolicMatrix::from_fn(m - 1, m, |r, c| {
        if c == 0 || c == r + 1 {
            Entry::Unit
        } else {
            Entry::Zero
        }
    }))
}

/// `[Σ | Λ]` of size `(M-2) x M`: a fully indeterminate two-column block
/// followed by a diagonal of indeterminates.
pub fn build_gcol_a2(m_total: usize, pool: &mut VarPool) -> Result<SymbolicMatrix, CodegenError> {
    if m_total < 3 {
        return Err(CodegenError::BadDimension(format!(
            "two-parity column code needs at least 3 rows, got {m_total}"
        )));
    }
    let rows = m_total - 2;
    let mut g = SymbolicMatrix::zeros(rows, m_total);
    for r in 0..rows {
        for c in 0..2 {
            g.set(r, c, Entry::var(pool.fresh(format!("sigma[{},{}]", r + 1, c + 1))));
        }
    }
    for r in 0..rows {
        g.set(r, r + 2, Entry::var(pool.fresh(format!("lambda[{},{}]", r + 1, r + 1))));
    }
    Ok(g)
}

/// An instantiated product code `G = G_col ⊗ G_row` with columns in
/// row-major cell order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProductCode {
    pub topology: Topology,
    pub gcol: FieldMatrix,
    pub grow: FieldMatrix,
    pub generator: FieldMatrix,
}

impl ProductCode {
    pub fn from_factors(topology: Topology, gcol: FieldMatrix, grow: FieldMatrix) -> Result<Self, CodegenError> {
        if gcol.cols() != topology.m() || grow.cols() != topology.n() {
            return Err(CodegenError::BadDimension(format!(
                "factors {}x{} and {}x{} do not fit {}",
                gcol.rows(),
                gcol.cols(),
                grow.rows(),
                grow.cols(),
                topology
            )));
        }
        let generator = gcol.kron(&grow);
        Ok(ProductCode {
            topology,
            gcol,
            grow,
            generator,
        })
    }

    /// Rank of the generator restricted to the surviving cells.
    pub fn punctured_rank(&self, pattern: &ErasurePattern) -> usize {
        self.generator
            .select_columns(&pattern.surviving_indices())
            .expect("cells index generator columns")
            .rank()
    }
}

/// The symbolic side of a sampled code, kept for diagnostics and export.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolicCode {
    pub pool: VarPool,
    pub gcol: SymbolicMatrix,
    pub grow: SymbolicMatrix,
    pub plan: Option<GRowPlan>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampledCode {
    pub code: ProductCode,
    pub symbolic: SymbolicCode,
    pub assignment: Assignment,
    /// Pattern the rank target was verified on.
    pub verified_pattern: ErasurePattern,
    pub punctured_rank: usize,
    pub target_rank: usize,
    pub attempts: u32,
}

/// Builds and instantiates a code recovering a regular `a = 1` pattern.
///
/// The row code follows the structured construction on the row-wise
/// reduction of `pattern`; with fewer than two erased rows left it is fully
/// generic. The rank target `(m-1)(n-b)` is verified on the reduced pattern.
pub fn sample_code(
    pattern: &ErasurePattern,
    field: Field,
    seed: u64,
    max_retries: u32,
) -> Result<SampledCode, CodegenError> {
    let t = pattern.topology();
    if t.a() != 1 {
        return Err(CodegenError::PreconditionFailed(format!(
            "structured code needs a=1, got a={}",
            t.a()
        )));
    }
    if let Some(v) = pattern.regularity_violation() {
        return Err(CodegenError::NotRegular(v));
    }
    let reduced = pattern.reduce_rowwise();
    let mut pool = VarPool::new();
    let gcol = build_gcol_a1(t.m())?;
    let (grow, plan) = row_code_or_generic(&reduced, &mut pool)?;
    sample_product(t, &reduced, pool, gcol, grow, plan, field, seed, max_retries)
}

/// Builds and instantiates a code for an extended `a = 2` pattern: the row
/// code of the base pattern and a `[Σ | Λ]` column code.
pub fn sample_code_a2(
    extended: &ExtendedPattern,
    field: Field,
    seed: u64,
    max_retries: u32,
) -> Result<SampledCode, CodegenError> {
    let t = extended.result.topology();
    let mut pool = VarPool::new();
    let (grow, plan) = row_code_or_generic(&extended.base, &mut pool)?;
    let gcol = build_gcol_a2(t.m(), &mut pool)?;
    sample_product(t, &extended.result, pool, gcol, grow, plan, field, seed, max_retries)
}

fn row_code_or_generic(
    pattern: &ErasurePattern,
    pool: &mut VarPool,
) -> Result<(SymbolicMatrix, Option<GRowPlan>), CodegenError> {
    let t = pattern.topology();
    if pattern.erased_rows().len() >= 2 {
        let rc = build_grow(pattern, pool)?;
        Ok((rc.matrix, Some(rc.plan)))
    } else {
        Ok((generic_matrix(t.n() - t.b(), t.n(), pool, "x"), None))
    }
}

#[allow(clippy::too_many_arguments)]
fn sample_product(
    topology: Topology,
    verify_on: &ErasurePattern,
    pool: VarPool,
    gcol: SymbolicMatrix,
    grow: SymbolicMatrix,
    plan: Option<GRowPlan>,
    field: Field,
    seed: u64,
    max_retries: u32,
) -> Result<SampledCode, CodegenError> {
    let target = topology.dimension();
    let symbolic_g = tensor(&gcol, &grow);
    let survivors = verify_on.surviving_indices();
    for attempt in 0..=max_retries {
        let s = attempt_seed(seed, attempt);
        let (g, assignment) = instantiate(&symbolic_g, &pool, field, s);
        if g.rank() != target {
            continue;
        }
        let punctured = g.select_columns(&survivors).expect("valid cells").rank();
        if punctured != target {
            continue;
        }
        let code = ProductCode {
            topology,
            gcol: assignment.evaluate(&gcol),
            grow: assignment.evaluate(&grow),
            generator: g,
        };
        return Ok(SampledCode {
            code,
            symbolic: SymbolicCode { pool, gcol, grow, plan },
            assignment,
            verified_pattern: verify_on.clone(),
            punctured_rank: punctured,
            target_rank: target,
            attempts: attempt + 1,
        });
    }
    Err(CodegenError::UnluckyField {
        attempts: max_retries + 1,
        q: field.modulus(),
    })
}

/// Seed of the `attempt`-th try; the first try uses `seed` itself.
pub fn attempt_seed(seed: u64, attempt: u32) -> u64 {
    if attempt == 0 {
        seed
    } else {
        derive_seed(seed, 0x5EED_0000 + attempt as u64)
    }
}

/// A code pair with every generator entry an independent indeterminate.
pub fn sample_universal_mrc(topology: Topology, field: Field, seed: u64) -> ProductCode {
    let mut pool = VarPool::new();
    let gcol = generic_matrix(topology.m() - topology.a(), topology.m(), &mut pool, "y");
    let grow = generic_matrix(topology.n() - topology.b(), topology.n(), &mut pool, "x");
    let assignment = Assignment::random(&pool, field, seed);
    ProductCode::from_factors(topology, assignment.evaluate(&gcol), assignment.evaluate(&grow))
        .expect("generic factors fit the topology")
}

/// One diagonal block of the decomposition: row `row` of the grid with its
/// erased columns removed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockReport {
    pub row: usize,
    pub zero_rows: usize,
    pub expected_zero_rows: usize,
    /// `(rows, cols)` of `G_Y` (the nonzero excess rows stacked on the filler rows).
    pub y_dims: (usize, usize),
    pub y_matched: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecompositionReport {
    pub parity_row: usize,
    /// Columns of the matched non-erasures in the parity row.
    pub matched_columns: Vec<usize>,
    pub gp_dims: (usize, usize),
    pub gp_prime_dims: (usize, usize),
    pub gp_prime_matched: bool,
    pub gp_prime_distinct: bool,
    pub blocks: Vec<BlockReport>,
}

impl fmt::Display for DecompositionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cols: Vec<String> = self.matched_columns.iter().map(|c| (c + 1).to_string()).collect();
        writeln!(f, "parity row {}; V_M = {{{}}}", self.parity_row + 1, cols.join(","))?;
        writeln!(
            f,
            "G_P {}x{}; G_P' {}x{} matched={} distinct={}",
            self.gp_dims.0,
            self.gp_dims.1,
            self.gp_prime_dims.0,
            self.gp_prime_dims.1,
            self.gp_prime_matched,
            self.gp_prime_distinct
        )?;
        for b in &self.blocks {
            writeln!(
                f,
                "row {}: zero rows {}/{}; G_Y {}x{} matched={}",
                b.row + 1,
                b.zero_rows,
                b.expected_zero_rows,
                b.y_dims.0,
                b.y_dims.1,
                b.y_matched
            )?;
        }
        Ok(())
    }
}

/// Rebuilds the block structure of the punctured `a = 1` generator and
/// checks every matching it relies on.
///
/// The parity row is the smallest erased row. For every grid row `i`, the
/// excess rows restricted to `V \ V_i` must have exactly `r_i` zero rows, and
/// the remaining excess rows stacked on the filler rows must admit a
/// complete matching. The top block `G_P` (excess rows of the other erased
/// rows, on the surviving columns of the parity row) restricted to the
/// columns matched by the erasure/non-erasure graph must be square, matched,
/// and built from distinct indeterminates.
pub fn proof_decomposition(pattern: &ErasurePattern, row_code: &RowCode) -> Result<DecompositionReport, CodegenError> {
    let t = pattern.topology();
    if t.a() != 1 {
        return Err(CodegenError::PreconditionFailed("decomposition is defined for a=1".into()));
    }
    let fail = |block: String| CodegenError::DecompositionFailure { block };
    let plan = &row_code.plan;
    let grow = &row_code.matrix;
    let u = pattern.erased_rows();
    if u.len() < 2 {
        return Err(CodegenError::TooFewRows(u.len()));
    }
    let parity = u[0];
    let n = t.n();

    let graph = build_erasure_nonerasure_graph(pattern, &[parity])
        .map_err(|e| fail(format!("erasure/non-erasure graph ({e})")))?;
    let outcome = complete_matching(&graph);
    if !outcome.is_complete() {
        return Err(fail("erasure/non-erasure matching".into()));
    }
    let matched_columns: Vec<usize> = outcome
        .matching()
        .right_vertices()
        .iter()
        .map(|&r| graph.right()[r].col)
        .collect();

    let excess_rows = plan.excess_rows();
    let filler_rows = plan.filler_rows();
    let mut blocks = Vec::with_capacity(t.m());
    for i in 0..t.m() {
        let support = pattern.row_support(i);
        let kept: Vec<usize> = plan.pattern_cols.iter().copied().filter(|c| !support.contains(c)).collect();
        let s_i = grow.submatrix(&excess_rows, &kept);
        let nonzero: Vec<usize> = (0..s_i.rows()).filter(|&r| !s_i.row_is_zero(r)).collect();
        let zero_rows = s_i.rows() - nonzero.len();
        let expected = support.len().saturating_sub(t.b());
        if zero_rows != expected {
            return Err(fail(format!(
                "G_S of row {} has {zero_rows} zero rows, expected {expected}",
                i + 1
            )));
        }
        let z_i = s_i.submatrix(&nonzero, &(0..kept.len()).collect::<Vec<_>>());
        let y_i = z_i.vstack(&grow.submatrix(&filler_rows, &kept));
        let y_matched = complete_matching(&support_graph(&y_i)).is_complete();
        if !y_matched {
            return Err(fail(format!("G_Y of row {}", i + 1)));
        }
        blocks.push(BlockReport {
            row: i,
            zero_rows,
            expected_zero_rows: expected,
            y_dims: (y_i.rows(), y_i.cols()),
            y_matched,
        });
    }

    let parity_support = pattern.row_support(parity);
    let gp_rows: Vec<usize> = excess_rows
        .iter()
        .copied()
        .filter(|&k| matches!(plan.roles[k], RowRole::Excess { row, .. } if row != parity))
        .collect();
    let gp_cols: Vec<usize> = (0..n).filter(|c| !parity_support.contains(c)).collect();
    let gp_prime = grow.submatrix(&gp_rows, &matched_columns);
    if gp_prime.rows() != gp_prime.cols() {
        return Err(fail(format!("G_P' is {}x{}, not square", gp_prime.rows(), gp_prime.cols())));
    }
    let gp_prime_matched = complete_matching(&support_graph(&gp_prime)).is_complete();
    if !gp_prime_matched {
        return Err(fail("G_P' matching".into()));
    }
    let gp_prime_distinct = gp_prime.has_distinct_variables();
    if !gp_prime_distinct {
        return Err(fail("G_P' indeterminates".into()));
    }
    Ok(DecompositionReport {
        parity_row: parity,
        matched_columns,
        gp_dims: (gp_rows.len(), gp_cols.len()),
        gp_prime_dims: (gp_prime.rows(), gp_prime.cols()),
        gp_prime_matched,
        gp_prime_distinct,
        blocks,
    })
}

/// Structure of `G_P'` for an extended `a = 2` pattern whose first two rows
/// both hold erasures.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtendedMinorReport {
    /// Matched non-erasures `(row, col)` in the first two rows.
    pub matched_cells: Vec<(usize, usize)>,
    pub size: usize,
    pub matched: bool,
    /// Largest number of monomials sharing one row-code indeterminate within
    /// one of the two leading column blocks.
    pub max_occurrences_per_block: usize,
    /// Every monomial in block `β` carries a `σ` from column `β` of `Σ`.
    pub sigma_columns_consistent: bool,
    /// `G_P'` is nonsingular under the sampled assignment.
    pub nonsingular: bool,
}

/// Extracts `G_P'` from the actual tensor generator of an extended pattern.
///
/// `G_P` collects the rows of `G|_{D∖E'}` that vanish on every `Λ` block; its
/// columns are the surviving cells of the first two rows. `G_P'` keeps the
/// cells matched by the erasure/non-erasure graph with `U_R = {1, 2}`.
pub fn extended_minor(
    extended: &ExtendedPattern,
    field: Field,
    seed: u64,
) -> Result<ExtendedMinorReport, CodegenError> {
    let pattern = &extended.result;
    let t = pattern.topology();
    let n = t.n();
    if pattern.row_count(0) == 0 || pattern.row_count(1) == 0 {
        return Err(CodegenError::PreconditionFailed(
            "the first two rows must hold erasures".into(),
        ));
    }
    let mut pool = VarPool::new();
    let (grow, _) = row_code_or_generic(&extended.base, &mut pool)?;
    let gcol = build_gcol_a2(t.m(), &mut pool)?;
    let g = tensor(&gcol, &grow);
    let rows_per_block = grow.rows();

    let graph = build_erasure_nonerasure_graph(pattern, &[0, 1])
        .map_err(|e| CodegenError::DecompositionFailure { block: format!("U_R = {{1,2}} graph ({e})") })?;
    let outcome = complete_matching(&graph);
    let matched_cells: Vec<(usize, usize)> = outcome
        .matching()
        .right_vertices()
        .iter()
        .map(|&r| (graph.right()[r].row, graph.right()[r].col))
        .collect();

    let survivors = pattern.surviving_indices();
    let lambda_cols: Vec<usize> = survivors.iter().copied().filter(|&c| c >= 2 * n).collect();
    let gp_rows: Vec<usize> = (0..g.rows())
        .filter(|&r| lambda_cols.iter().all(|&c| g.get(r, c).is_zero()))
        .filter(|&r| (0..2 * n).any(|c| !g.get(r, c).is_zero()))
        .collect();
    let gp_cols: Vec<usize> = matched_cells.iter().map(|&(row, col)| row * n + col).collect();
    let minor = g.submatrix(&gp_rows, &gp_cols);

    let sigma_of = |block_row: usize, beta: usize| gcol.get(block_row, beta).vars()[0];
    let mut max_occurrences = 0;
    let mut consistent = true;
    for beta in 0..2 {
        let cols: Vec<usize> = (0..gp_cols.len()).filter(|&c| matched_cells[c].0 == beta).collect();
        let mut occurrences: BTreeMap<VarId, usize> = BTreeMap::new();
        for (r, &row) in gp_rows.iter().enumerate() {
            let block_row = row / rows_per_block;
            for &c in &cols {
                let e = minor.get(r, c);
                if e.is_zero() {
                    continue;
                }
                if !e.vars().contains(&sigma_of(block_row, beta)) {
                    consistent = false;
                }
                for v in e.vars() {
                    if pool.name(*v).starts_with('x') {
                        *occurrences.entry(*v).or_default() += 1;
                    }
                }
            }
        }
        max_occurrences = max_occurrences.max(occurrences.values().copied().max().unwrap_or(0));
    }

    let square = minor.rows() == minor.cols();
    let matched = square && complete_matching(&support_graph(&minor)).is_complete();
    let nonsingular = square && {
        let (values, _) = instantiate(&minor, &pool, field, seed);
        values.rank() == minor.rows()
    };
    Ok(ExtendedMinorReport {
        matched_cells,
        size: if square { minor.rows() } else { 0 },
        matched,
        max_occurrences_per_block: max_occurrences,
        sigma_columns_consistent: consistent,
        nonsingular,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::patterns::extend_pattern;
    use crate::patterns::fixtures::fig1;

    fn supports(m: &SymbolicMatrix) -> Vec<Vec<usize>> {
        (0..m.rows()).map(|r| m.row_support(r)).collect()
    }

    #[test]
    fn grow_for_worked_example_has_expected_support() {
        let mut pool = VarPool::new();
        let rc = build_grow(&fig1(), &mut pool).unwrap();
        assert_eq!((rc.matrix.rows(), rc.matrix.cols()), (8, 10));
        // 0-based versions of {1}, {2}, {7,8,9}, {7,8,10}, {6,7,8}, {3,9,10}, {4,5,6}, {3,4,5}
        let expected = vec![
            vec![0],
            vec![1],
            vec![6, 7, 8],
            vec![6, 7, 9],
            vec![5, 6, 7],
            vec![2, 8, 9],
            vec![3, 4, 5],
            vec![2, 3, 4],
        ];
        assert_eq!(supports(&rc.matrix), expected);
        assert!(rc.plan.filler_rows().is_empty());
        assert_eq!(rc.plan.blocks[0].shared, vec![6, 7]);
        assert!(rc.matrix.has_distinct_variables());
        assert_eq!(rc.matrix.get(2, 6).display(&pool).to_string(), "x[3,7]");
    }

    #[test]
    fn shared_column_override() {
        let mut pool = VarPool::new();
        let mut options = GrowOptions::default();
        options.shared_override.insert(0, vec![8, 9]);
        let rc = build_grow_with(&fig1(), &mut pool, &options).unwrap();
        assert_eq!(rc.matrix.row_support(2), vec![6, 8, 9]);
        assert_eq!(rc.matrix.row_support(3), vec![7, 8, 9]);
        options.shared_override.insert(0, vec![0, 9]);
        assert!(build_grow_with(&fig1(), &mut pool, &options).is_err());
    }

    #[test]
    fn grow_filler_and_identity_counts() {
        // all columns used and Σ r_i = v - b: no filler rows, no identity rows
        let t = Topology::new(3, 3, 1, 1).unwrap();
        let p = ErasurePattern::from_row_supports(t, &[vec![0, 1], vec![1, 2]]).unwrap();
        let rc = build_grow(&p, &mut VarPool::new()).unwrap();
        assert!(rc.plan.filler_rows().is_empty());
        assert!(rc.plan.identity_rows().is_empty());

        // one untouched column: exactly one identity row
        let t = Topology::new(3, 4, 1, 1).unwrap();
        let p = ErasurePattern::from_row_supports(t, &[vec![0, 1], vec![1, 2]]).unwrap();
        let rc = build_grow(&p, &mut VarPool::new()).unwrap();
        assert_eq!(rc.plan.identity_rows().len(), 1);
        assert_eq!(rc.matrix.row_support(0), vec![3]);

        // a filler row appears when v - b exceeds Σ r_i
        let t = Topology::new(3, 5, 1, 1).unwrap();
        let p = ErasurePattern::from_row_supports(t, &[vec![0, 1], vec![2, 3]]).unwrap();
        let rc = build_grow(&p, &mut VarPool::new()).unwrap();
        assert_eq!(rc.plan.filler_rows().len(), 1);
        assert_eq!(rc.matrix.row_support(3), vec![0, 1, 2, 3]);
    }

    #[test]
    fn grow_errors() {
        let t = Topology::new(3, 3, 1, 1).unwrap();
        let block = ErasurePattern::from_row_supports(t, &[vec![0, 1], vec![0, 1]]).unwrap();
        assert!(matches!(build_grow(&block, &mut VarPool::new()), Err(CodegenError::NotRegular(_))));
        let light = ErasurePattern::from_row_supports(t, &[vec![0], vec![0, 1]]).unwrap();
        assert_eq!(build_grow(&light, &mut VarPool::new()), Err(CodegenError::NotIrreducible));
        let single = ErasurePattern::from_row_supports(t, &[vec![0, 1]]).unwrap();
        assert_eq!(build_grow(&single, &mut VarPool::new()), Err(CodegenError::TooFewRows(1)));
    }

    #[test]
    fn column_codes() {
        assert_eq!(build_gcol_a1(2).unwrap().entries(), &[Entry::Unit, Entry::Unit]);
        let g3 = build_gcol_a1(3).unwrap();
        let pattern: Vec<bool> = g3.entries().iter().map(|e| !e.is_zero()).collect();
        assert_eq!(pattern, vec![true, true, false, true, false, true]);
        let g6 = build_gcol_a1(6).unwrap();
        assert_eq!((g6.rows(), g6.cols()), (5, 6));
        assert!(build_gcol_a1(1).is_err());

        let mut pool = VarPool::new();
        let s3 = build_gcol_a2(3, &mut pool).unwrap();
        let names: Vec<String> = s3.entries().iter().map(|e| e.display(&pool).to_string()).collect();
        assert_eq!(names, vec!["sigma[1,1]", "sigma[1,2]", "lambda[1,1]"]);
        let s4 = build_gcol_a2(4, &mut pool).unwrap();
        assert_eq!(s4.get(1, 3).display(&pool).to_string(), "lambda[2,2]");
        assert!(s4.get(0, 3).is_zero() && s4.get(1, 2).is_zero());
        let s6 = build_gcol_a2(6, &mut pool).unwrap();
        assert!((0..4).all(|r| !s6.get(r, 0).is_zero() && !s6.get(r, 1).is_zero()));
        assert!(build_gcol_a2(2, &mut pool).is_err());
    }

    #[test]
    fn tensor_blocks() {
        let mut pool = VarPool::new();
        let grow = generic_matrix(2, 3, &mut pool, "x");
        let parity = build_gcol_a1(2).unwrap();
        let g = tensor(&parity, &grow);
        assert_eq!((g.rows(), g.cols()), (2, 6));
        for r in 0..2 {
            for c in 0..3 {
                assert_eq!(g.get(r, c), grow.get(r, c));
                assert_eq!(g.get(r, c + 3), grow.get(r, c));
            }
        }

        let gcol = build_gcol_a2(3, &mut pool).unwrap();
        let g = tensor(&gcol, &grow);
        let sigma = gcol.get(0, 0).vars()[0];
        assert_eq!(g.get(1, 2), &grow.get(1, 2).mul(&Entry::var(sigma)));
        assert_eq!(g.get(0, 0).degree(), Some(2));

        let mut z = build_gcol_a1(3).unwrap();
        z.set(0, 0, Entry::Zero);
        let g = tensor(&z, &grow);
        assert!((0..2).all(|r| (0..3).all(|c| g.get(r, c).is_zero())));
    }

    #[test]
    fn instantiation_is_deterministic() {
        let f = Field::default_field();
        let constant = build_gcol_a1(4).unwrap();
        let pool = VarPool::new();
        assert_eq!(instantiate(&constant, &pool, f, 1).0, instantiate(&constant, &pool, f, 2).0);

        let mut pool = VarPool::new();
        let m = generic_matrix(3, 3, &mut pool, "x");
        let (a, sa) = instantiate(&m, &pool, f, 7);
        let (b, sb) = instantiate(&m, &pool, f, 7);
        assert_eq!((&a, &sa), (&b, &sb));
        assert!(sb.values().iter().all(|&v| v >= 1 && v < f.modulus()));

        let diag = SymbolicMatrix::from_fn(3, 3, |r, c| {
            if r == c {
                Entry::var(VarId(r as u32))
            } else {
                Entry::Zero
            }
        });
        let (d, _) = instantiate(&diag, &pool, f, 11);
        assert_eq!(d.rank(), 3);
    }

    #[test]
    fn sample_code_on_worked_example() {
        let f = Field::default_field();
        let s = sample_code(&fig1(), f, 1, DEFAULT_RETRIES).unwrap();
        assert_eq!(s.punctured_rank, 40);
        assert_eq!(s.code.punctured_rank(&fig1()), 40);
        assert_eq!(s.code.generator.rank(), 40);

        let empty = ErasurePattern::empty(fig1().topology());
        assert_eq!(sample_code(&empty, f, 1, DEFAULT_RETRIES).unwrap().punctured_rank, 40);

        let t = Topology::new(3, 3, 1, 1).unwrap();
        let block = ErasurePattern::from_row_supports(t, &[vec![0, 1], vec![0, 1]]).unwrap();
        assert!(matches!(sample_code(&block, f, 1, 8), Err(CodegenError::NotRegular(_))));
    }

    #[test]
    fn sample_code_a2_rank_targets() {
        let f = Field::default_field();
        let none = extend_pattern(&fig1(), &[]).unwrap();
        let s = sample_code_a2(&none, f, 3, DEFAULT_RETRIES).unwrap();
        assert_eq!((s.punctured_rank, s.target_rank), (32, 32));
        let one = extend_pattern(&fig1(), &[0]).unwrap();
        let s = sample_code_a2(&one, f, 3, DEFAULT_RETRIES).unwrap();
        assert_eq!((s.punctured_rank, s.target_rank), (40, 40));
    }

    #[test]
    fn universal_code_dimensions() {
        let f = Field::default_field();
        let t = Topology::new(3, 3, 1, 1).unwrap();
        let c = sample_universal_mrc(t, f, 5);
        assert_eq!((c.grow.rows(), c.grow.cols()), (2, 3));
        assert_eq!((c.gcol.rows(), c.gcol.cols()), (2, 3));
        assert!(c.grow.as_slice().iter().all(|&x| x != 0));
        assert_eq!(c.generator.rank(), 4);
    }

    #[test]
    fn decomposition_of_worked_example() {
        let p = fig1();
        let rc = build_grow(&p, &mut VarPool::new()).unwrap();
        let report = proof_decomposition(&p, &rc).unwrap();
        assert_eq!(report.parity_row, 0);
        assert_eq!(report.matched_columns, vec![2, 3, 4, 5]);
        assert_eq!(report.gp_dims, (4, 6));
        assert_eq!(report.gp_prime_dims, (4, 4));
        let zero_rows: Vec<usize> = report.blocks.iter().map(|b| b.zero_rows).collect();
        assert_eq!(zero_rows, vec![2, 1, 1, 1, 1, 0]);
        // G_Y is square for erased rows: v - b - r_i
        assert_eq!(report.blocks[0].y_dims, (4, 4));
        assert_eq!(report.blocks[1].y_dims, (5, 5));
        assert_eq!(report.blocks[5].y_dims, (6, 8));
    }

    #[test]
    fn extended_minor_pairs_sigma_columns() {
        let f = Field::default_field();
        for sources in [vec![], vec![0], vec![2, 4], vec![0, 1, 2, 3, 4, 5]] {
            let x = extend_pattern(&fig1(), &sources).unwrap();
            let r = extended_minor(&x, f, 9).unwrap();
            assert!(r.matched, "sources {sources:?}");
            assert!(r.sigma_columns_consistent);
            assert!(r.max_occurrences_per_block <= 2);
            assert!(r.nonsingular);
        }
    }
}
