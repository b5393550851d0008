//! `mrc`: command-line access to pattern checks, matchings, code
//! construction, recovery and exhaustive verification.
//!
//! Exit codes: 0 success or affirmative verdict, 1 negative verdict, 2 input
//! error, 3 inconsistent data.

mod formats;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rand::Rng;

use mrc_core::codegen::{
    build_grow, proof_decomposition, sample_code, sample_code_a2, sample_universal_mrc, VarPool, DEFAULT_RETRIES,
};
use mrc_core::gfield::{Field, DEFAULT_MODULUS};
use mrc_core::matchgraph::{
    build_erasure_nonerasure_graph, build_rowcol_graph, complete_matching, default_right_rows, neighborhood_violation,
    MatchOutcome,
};
use mrc_core::oracle::{
    explore_conjecture_a2, verify_equivalence_a1, verify_extended_a2, verify_mds_consequences, OracleConfig,
    OracleError,
};
use mrc_core::patterns::{extend_pattern, ErasurePattern, IndexSet};
use mrc_core::recovery::{decode, encode, is_recoverable_by, RecoveryError};
use mrc_core::seeds::rng_from_seed;

#[derive(Parser)]
#[command(name = "mrc", version, about = "Maximally recoverable product codes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Regularity, irreducibility and row profiles of a pattern file.
    Check { pattern: PathBuf },
    /// Matching certificates for a pattern.
    Match {
        pattern: PathBuf,
        /// Rows on the right side of the erasure/non-erasure graph (1-based, comma separated).
        #[arg(long, value_delimiter = ',', conflicts_with = "ell")]
        ur: Option<Vec<usize>>,
        /// Row removed in the row/column graph (1-based).
        #[arg(long)]
        ell: Option<usize>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Construct and instantiate a code recovering the pattern.
    Build {
        pattern: PathBuf,
        #[arg(long, default_value_t = DEFAULT_MODULUS)]
        q: u64,
        #[arg(long, env = "MRC_SEED", default_value_t = 1)]
        seed: u64,
        /// Treat the pattern as an a=1 base and append copies of these rows (1-based).
        #[arg(long, value_delimiter = ',')]
        extend: Option<Vec<usize>>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Encode a seeded random message, optionally erasing a pattern.
    Encode {
        code: PathBuf,
        #[arg(long, env = "MRC_SEED", default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        erase: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recover a received word with erasures.
    Recover {
        code: PathBuf,
        received: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exhaustive verification over a small topology.
    Verify {
        #[arg(long, num_args = 4, value_names = ["M", "N", "A", "B"])]
        topology: Vec<usize>,
        #[arg(long, value_enum)]
        mode: Mode,
        #[arg(long, default_value_t = DEFAULT_MODULUS)]
        q: u64,
        #[arg(long, env = "MRC_SEED", default_value_t = 1)]
        seed: u64,
        /// Worker threads (0 = all cores).
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Examine at most this many extensions (extended mode).
        #[arg(long)]
        budget: Option<usize>,
        /// Write JSON-lines records here.
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Dot,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Equivalence,
    Extended,
    Conjecture,
    Mds,
}

/// A terminal outcome carrying its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(message: impl std::fmt::Display) -> Self {
        Failure {
            code: 2,
            message: message.to_string(),
        }
    }

    fn negative(message: impl std::fmt::Display) -> Self {
        Failure {
            code: 1,
            message: message.to_string(),
        }
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Check { pattern } => cmd_check(&pattern),
        Command::Match { pattern, ur, ell, format } => cmd_match(&pattern, ur, ell, format),
        Command::Build {
            pattern,
            q,
            seed,
            extend,
            out,
        } => cmd_build(&pattern, q, seed, extend, out.as_deref()),
        Command::Encode { code, seed, erase, out } => cmd_encode(&code, seed, erase.as_deref(), out.as_deref()),
        Command::Recover { code, received, out } => cmd_recover(&code, &received, out.as_deref()),
        Command::Verify {
            topology,
            mode,
            q,
            seed,
            jobs,
            budget,
            report,
        } => cmd_verify(&topology, mode, q, seed, jobs, budget, report.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn read_pattern(path: &Path) -> Result<ErasurePattern, Failure> {
    ErasurePattern::parse(&read(path)?).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn emit(out: Option<&Path>, text: &str) -> Outcome {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| Failure::input(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn field(q: u64) -> Result<Field, Failure> {
    Field::new(q).map_err(Failure::input)
}

/// `[lo:hi]` for a contiguous range, `{...}` otherwise (1-based).
fn span(ix: &[usize]) -> String {
    match (ix.first(), ix.last()) {
        (Some(&lo), Some(&hi)) if hi - lo + 1 == ix.len() => format!("[{}:{}]", lo + 1, hi + 1),
        _ => IndexSet(ix).to_string(),
    }
}

fn cmd_check(path: &Path) -> Outcome {
    let p = read_pattern(path)?;
    if p.is_empty() {
        println!("regular (empty)");
        return Ok(());
    }
    let violation = p.regularity_violation();
    let mut parts = vec![if violation.is_none() { "regular" } else { "not regular" }.to_string()];
    parts.push(if p.is_row_irreducible() { "row-irreducible" } else { "row-reducible" }.to_string());
    let grid = p.enclosing_grid().map_err(Failure::input)?;
    parts.push(format!("grid {}x{}", span(&grid.rows), span(&grid.cols)));
    let b = p.topology().b();
    let r: Vec<String> = grid.rows.iter().map(|&i| p.row_count(i).saturating_sub(b).to_string()).collect();
    parts.push(format!("r = {}", r.join(",")));
    println!("{}", parts.join("; "));
    if !p.is_row_irreducible() {
        let reduced = p.reduce_rowwise();
        println!("row-wise reduction keeps {} of {} erasures", reduced.count(), p.count());
    }
    println!("column-irreducible: {}", p.is_col_irreducible());
    match violation {
        None => Ok(()),
        Some(v) => Err(Failure::negative(format!("violation {v}"))),
    }
}

fn parse_rows(rows: &[usize], m: usize) -> Result<Vec<usize>, Failure> {
    rows.iter()
        .map(|&r| {
            if r == 0 || r > m {
                Err(Failure::input(format!("row {r} is outside 1..={m}")))
            } else {
                Ok(r - 1)
            }
        })
        .collect()
}

fn cmd_match(path: &Path, ur: Option<Vec<usize>>, ell: Option<usize>, format: Format) -> Outcome {
    let p = read_pattern(path)?;
    let m = p.topology().m();
    if let Some(ell) = ell {
        let ell = parse_rows(&[ell], m)?[0];
        let g = build_rowcol_graph(&p, ell).map_err(Failure::input)?;
        if format == Format::Dot {
            print!("{}", g.to_dot(None));
            return Ok(());
        }
        let left: Vec<String> = g.left().iter().map(ToString::to_string).collect();
        let right: Vec<String> = g.right().iter().map(ToString::to_string).collect();
        println!("left: {}", left.join(" "));
        println!("right: {}", right.join(" "));
        for (l, v) in g.left().iter().enumerate() {
            let nbrs: Vec<String> = g.neighbors(l).iter().map(|&r| g.right()[r].to_string()).collect();
            println!("N({v}) = {{{}}}", nbrs.join(","));
        }
        let profiles = p.row_profiles().map_err(Failure::input)?;
        return match neighborhood_violation(&g, &profiles).map_err(Failure::input)? {
            None => {
                println!("neighborhood condition holds");
                Ok(())
            }
            Some(set) => {
                let rows: Vec<String> = set.iter().map(|&l| g.left()[l].to_string()).collect();
                Err(Failure::negative(format!(
                    "neighborhood condition fails for {{{}}}",
                    rows.join(",")
                )))
            }
        };
    }
    let right_rows = match ur {
        Some(rows) => parse_rows(&rows, m)?,
        None => default_right_rows(&p),
    };
    let g = build_erasure_nonerasure_graph(&p, &right_rows).map_err(Failure::input)?;
    let outcome = complete_matching(&g);
    if format == Format::Dot {
        print!("{}", g.to_dot(Some(outcome.matching())));
        return if outcome.is_complete() {
            Ok(())
        } else {
            Err(Failure::negative("no complete matching"))
        };
    }
    println!("U_R = {}", IndexSet(&right_rows));
    if g.left().is_empty() {
        println!("trivially matched (empty left side)");
        return Ok(());
    }
    println!("left vertices: {}, right vertices: {}, edges: {}", g.left().len(), g.right().len(), g.edge_count());
    for &(l, r) in outcome.matching().pairs() {
        println!("{} -- {}", g.left()[l], g.right()[r]);
    }
    match outcome {
        MatchOutcome::Complete(matching) => {
            let mut cols: Vec<usize> = matching.right_vertices().iter().map(|&r| g.right()[r].col).collect();
            cols.sort_unstable();
            cols.dedup();
            println!("complete matching; V_M = {}", IndexSet(&cols));
            Ok(())
        }
        MatchOutcome::Deficient { witness, .. } => {
            let set: Vec<String> = witness.set.iter().map(|&l| g.left()[l].to_string()).collect();
            let nb: Vec<String> = witness.neighborhood.iter().map(|&r| g.right()[r].to_string()).collect();
            Err(Failure::negative(format!(
                "no complete matching; Hall witness {{{}}} with neighborhood {{{}}}",
                set.join(","),
                nb.join(",")
            )))
        }
    }
}

fn cmd_build(path: &Path, q: u64, seed: u64, extend: Option<Vec<usize>>, out: Option<&Path>) -> Outcome {
    let p = read_pattern(path)?;
    let f = field(q)?;
    let t = p.topology();
    if let Some(sources) = extend {
        let sources = parse_rows(&sources, t.m())?;
        let x = extend_pattern(&p, &sources).map_err(Failure::input)?;
        let s = sample_code_a2(&x, f, seed, DEFAULT_RETRIES).map_err(Failure::negative)?;
        println!(
            "extended to {}x{} a=2 b={}; punctured rank {} of {} (attempts {})",
            t.m() + sources.len(),
            t.n(),
            t.b(),
            s.punctured_rank,
            s.target_rank,
            s.attempts
        );
        let sym = (&s.symbolic.pool, &s.symbolic.grow, &s.symbolic.gcol, &s.assignment);
        return emit(out, &formats::write_code_file(&s.code, s.assignment.seed, "extended", Some(sym)));
    }
    if let Some(v) = p.regularity_violation() {
        return Err(Failure::negative(format!("not regular: {v}")));
    }
    if t.a() == 1 {
        let s = sample_code(&p, f, seed, DEFAULT_RETRIES).map_err(Failure::negative)?;
        let report = is_recoverable_by(&s.code.generator, &p).map_err(Failure::input)?;
        println!(
            "punctured rank {} of {} on the reduced pattern; {} (attempts {})",
            s.punctured_rank, s.target_rank, report, s.attempts
        );
        if p.reduce_rowwise().erased_rows().len() >= 2 {
            let reduced = p.reduce_rowwise();
            let row_code = build_grow(&reduced, &mut VarPool::new()).map_err(Failure::negative)?;
            match proof_decomposition(&reduced, &row_code) {
                Ok(d) => print!("{d}"),
                Err(e) => println!("decomposition: {e}"),
            }
        }
        let sym = (&s.symbolic.pool, &s.symbolic.grow, &s.symbolic.gcol, &s.assignment);
        return emit(out, &formats::write_code_file(&s.code, s.assignment.seed, "structured", Some(sym)));
    }
    let code = sample_universal_mrc(t, f, seed);
    let report = is_recoverable_by(&code.generator, &p).map_err(Failure::input)?;
    println!("generic code: {report}");
    if !report.recoverable {
        return Err(Failure::negative("generic code does not recover the pattern"));
    }
    emit(out, &formats::write_code_file(&code, seed, "generic", None))
}

fn load_code(path: &Path) -> Result<formats::CodeFile, Failure> {
    formats::parse_code_file(&read(path)?).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn cmd_encode(code: &Path, seed: u64, erase: Option<&Path>, out: Option<&Path>) -> Outcome {
    let c = load_code(code)?;
    let g = &c.code.generator;
    let f = g.field();
    let mut rng = rng_from_seed(seed);
    let message: Vec<u64> = (0..g.rows()).map(|_| rng.gen_range(0..f.modulus())).collect();
    let word = encode(g, c.code.topology, &message).map_err(Failure::input)?;
    match erase {
        None => emit(out, &formats::format_codeword(&word)),
        Some(p) => {
            let pattern = read_pattern(p)?;
            if pattern.topology() != c.code.topology {
                return Err(Failure::input("pattern and code topologies differ"));
            }
            emit(out, &formats::format_received(&word.erase(&pattern)))
        }
    }
}

fn cmd_recover(code: &Path, received: &Path, out: Option<&Path>) -> Outcome {
    let c = load_code(code)?;
    let g = &c.code.generator;
    let r = formats::parse_received(&read(received)?, g.field())
        .map_err(|e| Failure::input(format!("{}: {e}", received.display())))?;
    if r.topology() != c.code.topology {
        return Err(Failure::input("received word and code topologies differ"));
    }
    match decode(g, &r) {
        Ok(word) => {
            if out.is_some() {
                println!(
                    "recovered {} erased cells with the {} code (seed {})",
                    r.pattern().count(),
                    c.construction,
                    c.seed
                );
            }
            emit(out, &formats::format_codeword(&word))
        }
        Err(e @ RecoveryError::NotRecoverable { .. }) => Err(Failure::negative(e)),
        Err(e @ RecoveryError::NotACodeword { .. }) => Err(Failure {
            code: 3,
            message: e.to_string(),
        }),
        Err(e) => Err(Failure::input(e)),
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_verify(
    topology: &[usize],
    mode: Mode,
    q: u64,
    seed: u64,
    jobs: usize,
    budget: Option<usize>,
    report_path: Option<&Path>,
) -> Outcome {
    let t = mrc_core::Topology::new(topology[0], topology[1], topology[2], topology[3]).map_err(Failure::input)?;
    let f = field(q)?;
    let config = OracleConfig::new(f, seed).with_jobs(jobs);
    let oracle_err = |e: OracleError| match e {
        OracleError::TooLarge { .. } => Failure::input(format!("{e}; exhaustive modes accept at most 16 cells")),
        OracleError::MdsViolation { .. } => Failure::negative(e),
        other => Failure::input(other),
    };
    let report = match mode {
        Mode::Mds => {
            let r = verify_mds_consequences(t, f, seed).map_err(oracle_err)?;
            println!("{r}");
            return Ok(());
        }
        Mode::Equivalence => verify_equivalence_a1(t, config),
        Mode::Extended => verify_extended_a2(t, config, budget),
        Mode::Conjecture => explore_conjecture_a2(t, config),
    }
    .map_err(oracle_err)?;
    if let Some(path) = report_path {
        emit(Some(path), &report.to_jsonl())?;
    }
    println!("{}", report.summary);
    for c in report.candidates() {
        println!("candidate {} (generic rank {} < {})", c.pattern, c.rank, c.k);
    }
    match report.ensure_no_violations() {
        Ok(()) => Ok(()),
        Err(e) => Err(Failure::negative(e)),
    }
}
