//! Exhaustive and seeded verification over small grids.
//!
//! Every routine enumerates patterns in binary-counting order (bit `i·n+j`
//! is cell `(i, j)`) and emits one record per examined pattern. Work is split
//! into contiguous bit ranges; records are reassembled in enumeration order
//! and every per-pattern seed is derived from the pattern bits, so reports do
//! not depend on the number of workers.

use std::fmt;
use std::io::{self, Write};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::codegen::{sample_code, sample_code_a2, sample_universal_mrc, CodegenError, ProductCode, DEFAULT_RETRIES};
use crate::gfield::{Field, FieldMatrix};
use crate::patterns::{extend_pattern, ErasurePattern, Topology};
use crate::seeds::derive_seed;

/// Largest grid (in cells) accepted for exhaustive enumeration.
pub const MAX_ENUMERATION_CELLS: usize = 25;
/// Largest grid accepted by the verification modes.
pub const MAX_VERIFY_CELLS: usize = 16;
/// Independent generic codes whose maximum rank classifies a pattern.
pub const GENERIC_SEEDS: u64 = 3;

const SHARD_BITS: u32 = 10;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("grid {m}x{n} has {cells} cells, the limit is {limit}")]
    TooLarge { m: usize, n: usize, cells: usize, limit: usize },
    #[error("precondition failed: {0}")]
    PreconditionFailed(String),
    #[error("theorem violated by pattern {pattern}: {detail}")]
    TheoremViolation { pattern: String, detail: String },
    #[error("MDS property failed on {attempts} seeds: {detail}")]
    MdsViolation { attempts: u32, detail: String },
    #[error(transparent)]
    Codegen(#[from] CodegenError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PatternFilter {
    #[default]
    All,
    Nonempty,
    Regular,
    RowIrreducible,
    Irreducible,
    RegularRowIrreducible,
}

impl PatternFilter {
    pub fn accepts(self, p: &ErasurePattern) -> bool {
        match self {
            PatternFilter::All => true,
            PatternFilter::Nonempty => !p.is_empty(),
            PatternFilter::Regular => p.is_regular(),
            PatternFilter::RowIrreducible => p.is_row_irreducible(),
            PatternFilter::Irreducible => p.is_irreducible(),
            PatternFilter::RegularRowIrreducible => p.is_row_irreducible() && p.is_regular(),
        }
    }
}

fn guard(t: Topology, limit: usize) -> Result<u64, OracleError> {
    let cells = t.cells();
    if cells > limit {
        return Err(OracleError::TooLarge {
            m: t.m(),
            n: t.n(),
            cells,
            limit,
        });
    }
    Ok(1u64 << cells)
}

/// All patterns of the grid passing `filter`, in binary-counting order.
pub fn enumerate_patterns(
    topology: Topology,
    filter: PatternFilter,
) -> Result<impl Iterator<Item = ErasurePattern>, OracleError> {
    let total = guard(topology, MAX_ENUMERATION_CELLS)?;
    Ok((0..total)
        .map(move |bits| ErasurePattern::from_bits(topology, bits))
        .filter(move |p| filter.accepts(p)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Ok,
    Violation,
    Candidate,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PatternRecord {
    pub pattern: String,
    pub regular: bool,
    pub rank: usize,
    pub k: usize,
    pub verdict: Verdict,
}

impl PatternRecord {
    fn new(pattern: &ErasurePattern, regular: bool, rank: usize, verdict: Verdict) -> Self {
        PatternRecord {
            pattern: hex_bits(pattern),
            regular,
            rank,
            k: pattern.topology().dimension(),
            verdict,
        }
    }
}

pub fn hex_bits(p: &ErasurePattern) -> String {
    format!("0x{:x}", p.to_bits().expect("enumerated grids fit in 64 bits"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Equivalence,
    Extended,
    Conjecture,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Equivalence => "equivalence",
            Mode::Extended => "extended",
            Mode::Conjecture => "conjecture",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Summary {
    pub mode: Mode,
    pub topology: [usize; 4],
    pub q: u64,
    pub seed: u64,
    pub patterns: usize,
    pub regular: usize,
    pub violations: usize,
    pub candidates: usize,
    /// First-pass generic rank deficiencies that were checked again with
    /// independent seeds.
    pub rechecked: usize,
}

impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [m, n, a, b] = self.topology;
        write!(
            f,
            "{} {}x{} a={} b={}: {} patterns, {} regular, {} violations",
            self.mode, m, n, a, b, self.patterns, self.regular, self.violations
        )?;
        if self.mode == Mode::Conjecture {
            write!(f, ", {} candidates ({} rechecked)", self.candidates, self.rechecked)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleReport {
    pub records: Vec<PatternRecord>,
    pub summary: Summary,
}

impl OracleReport {
    fn assemble(mode: Mode, t: Topology, config: &OracleConfig, records: Vec<PatternRecord>, rechecked: usize) -> Self {
        let count = |v: Verdict| records.iter().filter(|r| r.verdict == v).count();
        let summary = Summary {
            mode,
            topology: [t.m(), t.n(), t.a(), t.b()],
            q: config.field.modulus(),
            seed: config.seed,
            patterns: records.len(),
            regular: records.iter().filter(|r| r.regular).count(),
            violations: count(Verdict::Violation),
            candidates: count(Verdict::Candidate),
            rechecked,
        };
        OracleReport { records, summary }
    }

    pub fn violations(&self) -> impl Iterator<Item = &PatternRecord> {
        self.records.iter().filter(|r| r.verdict == Verdict::Violation)
    }

    pub fn candidates(&self) -> impl Iterator<Item = &PatternRecord> {
        self.records.iter().filter(|r| r.verdict == Verdict::Candidate)
    }

    /// The first violation, if any, as an error.
    pub fn ensure_no_violations(&self) -> Result<(), OracleError> {
        match self.violations().next() {
            None => Ok(()),
            Some(r) => Err(OracleError::TheoremViolation {
                pattern: r.pattern.clone(),
                detail: format!("regular={} rank={} k={}", r.regular, r.rank, r.k),
            }),
        }
    }

    /// One JSON object per record, then `{"summary": ...}`.
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> io::Result<()> {
        for r in &self.records {
            serde_json::to_writer(&mut w, r)?;
            w.write_all(b"\n")?;
        }
        serde_json::to_writer(&mut w, &serde_json::json!({ "summary": self.summary }))?;
        w.write_all(b"\n")
    }

    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("json is utf-8")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleConfig {
    pub field: Field,
    pub seed: u64,
    /// Worker threads; `0` uses rayon's default.
    pub jobs: usize,
}

impl OracleConfig {
    pub fn new(field: Field, seed: u64) -> Self {
        OracleConfig { field, seed, jobs: 1 }
    }

    pub fn with_jobs(mut self, jobs: usize) -> Self {
        self.jobs = jobs;
        self
    }
}

/// Runs `work` on every value of `0..total`, keeping results in order.
fn sharded<T, F>(total: u64, jobs: usize, work: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> Vec<T> + Sync,
{
    if jobs == 1 {
        return (0..total).flat_map(&work).collect();
    }
    let unit = 1u64 << SHARD_BITS;
    let shards: Vec<(u64, u64)> = (0..total.div_ceil(unit))
        .map(|s| (s * unit, ((s + 1) * unit).min(total)))
        .collect();
    let run = || {
        shards
            .par_iter()
            .map(|&(lo, hi)| (lo..hi).flat_map(&work).collect::<Vec<T>>())
            .collect::<Vec<_>>()
            .into_iter()
            .flatten()
            .collect()
    };
    if jobs == 0 {
        run()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .expect("thread pool")
            .install(run)
    }
}

/// Generic product codes used to classify patterns by rank.
pub fn generic_codes(topology: Topology, field: Field, seed: u64, salt: u64) -> Vec<ProductCode> {
    (0..GENERIC_SEEDS)
        .map(|s| sample_universal_mrc(topology, field, derive_seed(seed, salt + s)))
        .collect()
}

/// Largest punctured rank among `codes`, stopping early at full rank.
pub fn generic_rank(codes: &[ProductCode], pattern: &ErasurePattern) -> usize {
    let k = pattern.topology().dimension();
    let mut best = 0;
    for c in codes {
        best = best.max(c.punctured_rank(pattern));
        if best == k {
            break;
        }
    }
    best
}

const SALT_GENERIC: u64 = 0x6E6E_0000;
const SALT_RECHECK: u64 = 0x7E7E_0000;

/// Regular patterns are recovered by the structured code, non-regular ones
/// are rank deficient under the generic product code.
///
/// A regular pattern is `ok` when the structured construction reaches rank
/// `k` on its row-wise reduction and the generic code reaches `k` on the
/// pattern itself. A non-regular pattern is `ok` when the maximum generic
/// rank over [`GENERIC_SEEDS`] codes stays below `k`. `rank` is that
/// maximum generic rank.
pub fn verify_equivalence_a1(topology: Topology, config: OracleConfig) -> Result<OracleReport, OracleError> {
    if topology.a() != 1 {
        return Err(OracleError::PreconditionFailed(format!(
            "equivalence mode needs a=1, got a={}",
            topology.a()
        )));
    }
    let total = guard(topology, MAX_VERIFY_CELLS)?;
    let k = topology.dimension();
    let codes = generic_codes(topology, config.field, config.seed, SALT_GENERIC);
    let records = sharded(total, config.jobs, |bits| {
        let p = ErasurePattern::from_bits(topology, bits);
        let regular = p.is_regular();
        let rank = generic_rank(&codes, &p);
        let verdict = if regular {
            let constructed = sample_code(&p, config.field, derive_seed(config.seed, bits), DEFAULT_RETRIES).is_ok();
            if constructed && rank == k {
                Verdict::Ok
            } else {
                Verdict::Violation
            }
        } else if rank < k {
            Verdict::Ok
        } else {
            Verdict::Violation
        };
        vec![PatternRecord::new(&p, regular, rank, verdict)]
    });
    Ok(OracleReport::assemble(Mode::Equivalence, topology, &config, records, 0))
}

/// Every extension of every regular, row-wise irreducible base pattern is
/// regular and recovered by the two-parity construction.
///
/// Records describe the extended patterns; `rank` is the punctured rank of
/// the sampled code (0 when sampling failed). With a `budget`, only the
/// first `budget` extensions in enumeration order are examined.
pub fn verify_extended_a2(
    base: Topology,
    config: OracleConfig,
    budget: Option<usize>,
) -> Result<OracleReport, OracleError> {
    if base.a() != 1 {
        return Err(OracleError::PreconditionFailed(format!(
            "extended mode takes an a=1 base topology, got a={}",
            base.a()
        )));
    }
    guard(base, MAX_VERIFY_CELLS)?;
    let m = base.m();
    let mut work = Vec::new();
    for p in enumerate_patterns(base, PatternFilter::RegularRowIrreducible)? {
        let bits = p.to_bits().expect("small grid");
        for subset in 0u64..(1 << m) {
            work.push((bits, subset));
        }
    }
    if let Some(limit) = budget {
        work.truncate(limit);
    }
    let records = sharded(work.len() as u64, config.jobs, |idx| {
        let (bits, subset) = work[idx as usize];
        let p = ErasurePattern::from_bits(base, bits);
        let sources: Vec<usize> = (0..m).filter(|i| subset >> i & 1 == 1).collect();
        let x = extend_pattern(&p, &sources).expect("sources are distinct rows of a valid base");
        let regular = x.check_regular();
        let seed = derive_seed(config.seed, bits << m | subset);
        let (rank, recovered) = match sample_code_a2(&x, config.field, seed, DEFAULT_RETRIES) {
            Ok(s) => (s.punctured_rank, true),
            Err(_) => (0, false),
        };
        let verdict = if regular && recovered { Verdict::Ok } else { Verdict::Violation };
        vec![PatternRecord::new(&x.result, regular, rank, verdict)]
    });
    Ok(OracleReport::assemble(Mode::Extended, base, &config, records, 0))
}

/// Classifies every regular pattern by generic recoverability.
///
/// A pattern whose maximum generic rank falls short of `k` is checked again
/// with [`GENERIC_SEEDS`] independently seeded codes; it is reported as a
/// `candidate` only if both passes are deficient. Candidates are findings,
/// never violations.
pub fn explore_conjecture_a2(topology: Topology, config: OracleConfig) -> Result<OracleReport, OracleError> {
    if topology.a() != 2 {
        return Err(OracleError::PreconditionFailed(format!(
            "conjecture mode needs a=2, got a={}",
            topology.a()
        )));
    }
    let total = guard(topology, MAX_VERIFY_CELLS)?;
    let k = topology.dimension();
    let codes = generic_codes(topology, config.field, config.seed, SALT_GENERIC);
    let second = generic_codes(topology, config.field, config.seed, SALT_RECHECK);
    let records = sharded(total, config.jobs, |bits| {
        let p = ErasurePattern::from_bits(topology, bits);
        if !p.is_regular() {
            return vec![];
        }
        let rank = generic_rank(&codes, &p);
        if rank == k {
            return vec![(PatternRecord::new(&p, true, rank, Verdict::Ok), false)];
        }
        let recheck = generic_rank(&second, &p);
        let verdict = if recheck == k { Verdict::Ok } else { Verdict::Candidate };
        vec![(PatternRecord::new(&p, true, rank.max(recheck), verdict), true)]
    });
    let rechecked = records.iter().filter(|(_, r)| *r).count();
    let records = records.into_iter().map(|(r, _)| r).collect();
    Ok(OracleReport::assemble(Mode::Conjecture, topology, &config, records, rechecked))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MdsReport {
    pub topology: [usize; 4],
    pub seed: u64,
    pub attempts: u32,
    pub rank: usize,
    pub k: usize,
    pub row_minors: usize,
    pub col_minors: usize,
    pub subgrids: usize,
}

impl fmt::Display for MdsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [m, n, a, b] = self.topology;
        write!(
            f,
            "mds {m}x{n} a={a} b={b}: rank {} = k {}; {} row minors, {} column minors, {} subgrids full rank (seed {}, attempt {})",
            self.rank, self.k, self.row_minors, self.col_minors, self.subgrids, self.seed, self.attempts
        )
    }
}

/// All `r`-subsets of `0..n` in lexicographic order.
pub fn combinations(n: usize, r: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(r);
    fn rec(start: usize, n: usize, r: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == r {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < r - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, r, cur, out);
            cur.pop();
        }
    }
    rec(0, n, r, &mut cur, &mut out);
    out
}

fn all_minors_full(g: &FieldMatrix) -> Result<usize, Vec<usize>> {
    let r = g.rows();
    let sets = combinations(g.cols(), r);
    for s in &sets {
        if g.select_columns(s).expect("in range").rank() != r {
            return Err(s.clone());
        }
    }
    Ok(sets.len())
}

fn check_mds(code: &ProductCode) -> Result<(usize, usize, usize, usize), String> {
    let t = code.topology;
    let k = t.dimension();
    let rank = code.generator.rank();
    if rank != k {
        return Err(format!("rank(G) = {rank} != {k}"));
    }
    let row_minors =
        all_minors_full(&code.grow).map_err(|s| format!("row-code minor on columns {s:?} is singular"))?;
    let col_minors =
        all_minors_full(&code.gcol).map_err(|s| format!("column-code minor on columns {s:?} is singular"))?;
    let mut subgrids = 0;
    for rows in combinations(t.m(), t.m() - t.a()) {
        for cols in combinations(t.n(), t.n() - t.b()) {
            let cells: Vec<usize> = rows
                .iter()
                .flat_map(|&i| cols.iter().map(move |&j| i * t.n() + j))
                .collect();
            let r = code.generator.select_columns(&cells).expect("in range").rank();
            if r != k {
                return Err(format!("subgrid rows {rows:?} cols {cols:?} has rank {r} < {k}"));
            }
            subgrids += 1;
        }
    }
    Ok((rank, row_minors, col_minors, subgrids))
}

/// Dimension and MDS properties of a generic product code, trying up to
/// [`GENERIC_SEEDS`] seeds.
pub fn verify_mds_consequences(topology: Topology, field: Field, seed: u64) -> Result<MdsReport, OracleError> {
    let (m, n, a, b) = (topology.m(), topology.n(), topology.a(), topology.b());
    if (m - a).max(n - b) > topology.dimension() {
        return Err(OracleError::PreconditionFailed(format!(
            "max(m-a, n-b) exceeds (m-a)(n-b) for {topology}"
        )));
    }
    let mut last = String::new();
    for attempt in 0..GENERIC_SEEDS as u32 {
        let s = if attempt == 0 { seed } else { derive_seed(seed, attempt as u64) };
        let code = sample_universal_mrc(topology, field, s);
        match check_mds(&code) {
            Ok((rank, row_minors, col_minors, subgrids)) => {
                return Ok(MdsReport {
                    topology: [m, n, a, b],
                    seed: s,
                    attempts: attempt + 1,
                    rank,
                    k: topology.dimension(),
                    row_minors,
                    col_minors,
                    subgrids,
                })
            }
            Err(e) => last = e,
        }
    }
    Err(OracleError::MdsViolation {
        attempts: GENERIC_SEEDS as u32,
        detail: last,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(m: usize, n: usize, a: usize, b: usize) -> Topology {
        Topology::new(m, n, a, b).unwrap()
    }

    /// Regularity straight from the definition: every row subset against
    /// every column subset.
    fn naive_regular(p: &ErasurePattern) -> bool {
        let tp = p.topology();
        for us in 1u64..(1 << tp.m()) {
            for vs in 1u64..(1 << tp.n()) {
                let (u, v) = (us.count_ones() as usize, vs.count_ones() as usize);
                let mut count = 0;
                for i in 0..tp.m() {
                    for j in 0..tp.n() {
                        if us >> i & 1 == 1 && vs >> j & 1 == 1 && p.is_erased(i, j) {
                            count += 1;
                        }
                    }
                }
                let bound = u * v - u.saturating_sub(tp.a()) * v.saturating_sub(tp.b());
                if count > bound {
                    return false;
                }
            }
        }
        true
    }

    #[test]
    fn enumeration_counts() {
        assert_eq!(enumerate_patterns(t(2, 2, 1, 1), PatternFilter::All).unwrap().count(), 16);
        let naive = enumerate_patterns(t(3, 3, 1, 1), PatternFilter::All)
            .unwrap()
            .filter(naive_regular)
            .count();
        let regular = enumerate_patterns(t(3, 3, 1, 1), PatternFilter::Regular).unwrap().count();
        assert_eq!(regular, naive);
        assert_eq!(regular, REGULAR_3X3_A1_B1);
        assert!(matches!(
            enumerate_patterns(t(5, 6, 1, 1), PatternFilter::All).map(|_| ()),
            Err(OracleError::TooLarge { cells: 30, .. })
        ));
        let first: Vec<String> = enumerate_patterns(t(2, 2, 1, 1), PatternFilter::Nonempty)
            .unwrap()
            .take(3)
            .map(|p| hex_bits(&p))
            .collect();
        assert_eq!(first, vec!["0x1", "0x2", "0x3"]);
    }

    const REGULAR_3X3_A1_B1: usize = 328;

    #[test]
    fn equivalence_small_grids() {
        let config = OracleConfig::new(Field::default_field(), 1);
        let r = verify_equivalence_a1(t(3, 3, 1, 1), config).unwrap();
        assert_eq!(r.summary.patterns, 512);
        assert_eq!(r.summary.violations, 0);
        assert_eq!(r.summary.regular, REGULAR_3X3_A1_B1);
        for n in 2..=5 {
            let r = verify_equivalence_a1(t(2, n, 1, 1), config).unwrap();
            assert_eq!(r.summary.violations, 0, "2x{n}");
        }
    }

    #[test]
    fn reports_do_not_depend_on_jobs() {
        let config = OracleConfig::new(Field::default_field(), 5);
        let one = verify_equivalence_a1(t(3, 3, 1, 1), config).unwrap();
        let four = verify_equivalence_a1(t(3, 3, 1, 1), config.with_jobs(4)).unwrap();
        assert_eq!(one.to_jsonl(), four.to_jsonl());
        let line = one.to_jsonl().lines().next().unwrap().to_string();
        assert_eq!(line, r#"{"pattern":"0x0","regular":true,"rank":4,"k":4,"verdict":"ok"}"#);
    }

    #[test]
    fn extended_on_small_base() {
        let config = OracleConfig::new(Field::default_field(), 2);
        let r = verify_extended_a2(t(3, 3, 1, 1), config, None).unwrap();
        assert_eq!(r.summary.violations, 0);
        assert!(r.summary.patterns > 0);
        let capped = verify_extended_a2(t(3, 3, 1, 1), config, Some(5)).unwrap();
        assert_eq!(capped.summary.patterns, 5);
    }

    #[test]
    fn conjecture_on_small_grid() {
        let config = OracleConfig::new(Field::default_field(), 4);
        let r = verify_equivalence_a1(t(3, 3, 1, 1), config).unwrap();
        assert_eq!(r.summary.candidates, 0);
        let c = explore_conjecture_a2(t(3, 3, 2, 1), config).unwrap();
        assert_eq!(c.summary.violations, 0);
        assert_eq!(c.summary.patterns, c.summary.regular);
        assert!(explore_conjecture_a2(t(3, 3, 1, 1), config).is_err());
    }

    #[test]
    fn mds_examples() {
        let f = Field::default_field();
        let r = verify_mds_consequences(t(3, 4, 1, 1), f, 1).unwrap();
        assert_eq!((r.rank, r.k), (6, 6));
        assert_eq!(r.row_minors, 4);
        assert_eq!(r.col_minors, 3);
        assert_eq!(r.subgrids, 3 * 4);
    }

    #[test]
    fn combination_counts() {
        assert_eq!(combinations(4, 3).len(), 4);
        assert_eq!(combinations(5, 2), {
            let mut v = Vec::new();
            for i in 0..5 {
                for j in i + 1..5 {
                    v.push(vec![i, j]);
                }
            }
            v
        });
        assert_eq!(combinations(3, 0), vec![Vec::<usize>::new()]);
    }
}
