//! Recoverability of erasure patterns under an instantiated code, encoding
//! and erasure decoding.

use std::fmt;

use thiserror::Error;

use crate::gfield::{FieldError, FieldMatrix};
use crate::patterns::{ErasurePattern, Topology};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RecoveryError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("pattern is not recoverable (punctured rank {rank} < {target})")]
    NotRecoverable { rank: usize, target: usize },
    #[error("received values are not a codeword restriction: constraint {equation} (cell ({r},{c})) is inconsistent", r = .row + 1, c = .col + 1)]
    NotACodeword { equation: usize, row: usize, col: usize },
    #[error("degenerate code: {0}")]
    DegenerateCode(String),
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// An `m x n` array of field elements, stored row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Codeword {
    topology: Topology,
    values: Vec<u64>,
}

impl Codeword {
    pub fn new(topology: Topology, values: Vec<u64>) -> Result<Self, RecoveryError> {
        if values.len() != topology.cells() {
            return Err(RecoveryError::Shape(format!(
                "{} values for a {}x{} grid",
                values.len(),
                topology.m(),
                topology.n()
            )));
        }
        Ok(Codeword { topology, values })
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    pub fn get(&self, row: usize, col: usize) -> u64 {
        self.values[row * self.topology.n() + col]
    }

    pub fn row(&self, row: usize) -> &[u64] {
        let n = self.topology.n();
        &self.values[row * n..(row + 1) * n]
    }

    pub fn column(&self, col: usize) -> Vec<u64> {
        (0..self.topology.m()).map(|r| self.get(r, col)).collect()
    }

    pub fn as_slice(&self) -> &[u64] {
        &self.values
    }

    /// Keeps the cells outside `pattern`.
    pub fn erase(&self, pattern: &ErasurePattern) -> Received {
        let n = self.topology.n();
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(k, &v)| (!pattern.is_erased(k / n, k % n)).then_some(v))
            .collect();
        Received {
            topology: self.topology,
            values,
        }
    }
}

impl fmt::Display for Codeword {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in 0..self.topology.m() {
            let line: Vec<String> = self.row(r).iter().map(u64::to_string).collect();
            writeln!(f, "{}", line.join(" "))?;
        }
        Ok(())
    }
}

/// A codeword with some cells missing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Received {
    topology: Topology,
    values: Vec<Option<u64>>,
}

impl Received {
    pub fn new(topology: Topology, values: Vec<Option<u64>>) -> Result<Self, RecoveryError> {
        if values.len() != topology.cells() {
            return Err(RecoveryError::Shape(format!(
                "{} cells for a {}x{} grid",
                values.len(),
                topology.m(),
                topology.n()
            )));
        }
        Ok(Received { topology, values })
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    pub fn values(&self) -> &[Option<u64>] {
        &self.values
    }

    pub fn pattern(&self) -> ErasurePattern {
        let n = self.topology.n();
        let cells = self
            .values
            .iter()
            .enumerate()
            .filter(|(_, v)| v.is_none())
            .map(|(k, _)| (k / n, k % n));
        ErasurePattern::from_cells(self.topology, cells).expect("cells lie in the grid")
    }
}

impl fmt::Display for Received {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = self.topology.n();
        for row in self.values.chunks(n) {
            let line: Vec<String> = row
                .iter()
                .map(|v| v.map_or_else(|| "?".to_string(), |x| x.to_string()))
                .collect();
            writeln!(f, "{}", line.join(" "))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecoveryReport {
    pub pattern: ErasurePattern,
    pub seed: Option<u64>,
    pub punctured_rank: usize,
    pub target_rank: usize,
    pub recoverable: bool,
}

impl fmt::Display for RecoveryReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.recoverable { "recoverable" } else { "not recoverable" };
        write!(f, "{verdict}: punctured rank {} of {}", self.punctured_rank, self.target_rank)?;
        if let Some(s) = self.seed {
            write!(f, " (seed {s})")?;
        }
        Ok(())
    }
}

fn check_columns(g: &FieldMatrix, topology: Topology) -> Result<(), RecoveryError> {
    if g.cols() != topology.cells() {
        return Err(RecoveryError::Shape(format!(
            "generator has {} columns, the {}x{} grid has {} cells",
            g.cols(),
            topology.m(),
            topology.n(),
            topology.cells()
        )));
    }
    Ok(())
}

/// Compares the rank of `G` on the surviving cells with `k = (m-a)(n-b)`.
pub fn is_recoverable_by(g: &FieldMatrix, pattern: &ErasurePattern) -> Result<RecoveryReport, RecoveryError> {
    let t = pattern.topology();
    check_columns(g, t)?;
    let target = t.dimension();
    let punctured = g.select_columns(&pattern.surviving_indices())?.rank();
    let recoverable = punctured == target && g.rank() == target;
    Ok(RecoveryReport {
        pattern: pattern.clone(),
        seed: None,
        punctured_rank: punctured,
        target_rank: target,
        recoverable,
    })
}

/// `message · G`, laid out row-major on the grid.
pub fn encode(g: &FieldMatrix, topology: Topology, message: &[u64]) -> Result<Codeword, RecoveryError> {
    check_columns(g, topology)?;
    if message.len() != g.rows() {
        return Err(RecoveryError::Shape(format!(
            "message of length {} for a generator with {} rows",
            message.len(),
            g.rows()
        )));
    }
    Codeword::new(topology, g.left_mul_vec(message)?)
}

/// Recovers the full codeword from the surviving cells.
///
/// Every surviving cell contributes one equation; a contradiction among them
/// is reported as [`RecoveryError::NotACodeword`].
pub fn decode(g: &FieldMatrix, received: &Received) -> Result<Codeword, RecoveryError> {
    let t = received.topology();
    check_columns(g, t)?;
    let pattern = received.pattern();
    let report = is_recoverable_by(g, &pattern)?;
    if !report.recoverable || g.rows() != report.target_rank {
        return Err(RecoveryError::NotRecoverable {
            rank: report.punctured_rank,
            target: report.target_rank,
        });
    }
    let survivors = pattern.surviving_indices();
    let system = g.select_columns(&survivors)?.transpose();
    let rhs: Vec<u64> = survivors
        .iter()
        .map(|&c| received.values()[c].expect("surviving cell"))
        .collect();
    let message = match system.solve(&rhs) {
        Ok(x) => x,
        Err(FieldError::NoSolution { equation }) => {
            let cell = survivors[equation];
            return Err(RecoveryError::NotACodeword {
                equation,
                row: cell / t.n(),
                col: cell % t.n(),
            });
        }
        Err(FieldError::Underdetermined { rank, .. }) => {
            return Err(RecoveryError::NotRecoverable {
                rank,
                target: report.target_rank,
            })
        }
        Err(e) => return Err(e.into()),
    };
    encode(g, t, &message)
}

/// Parity-check matrices `(H_row, H_col)`: kernel bases of the row and
/// column generators, of sizes `b x n` and `a x m`.
pub fn parity_checks(grow: &FieldMatrix, gcol: &FieldMatrix) -> Result<(FieldMatrix, FieldMatrix), RecoveryError> {
    let check = |g: &FieldMatrix, what: &str| {
        if g.rows() >= g.cols() {
            return Err(RecoveryError::DegenerateCode(format!(
                "{what} generator is {}x{}, leaving no parity",
                g.rows(),
                g.cols()
            )));
        }
        let r = g.rank();
        if r != g.rows() {
            return Err(RecoveryError::DegenerateCode(format!(
                "{what} generator has rank {r} < {} rows",
                g.rows()
            )));
        }
        Ok(g.nullspace())
    };
    Ok((check(grow, "row")?, check(gcol, "column")?))
}

/// True when every row satisfies `H_row` and every column satisfies `H_col`.
pub fn satisfies_parities(c: &Codeword, h_row: &FieldMatrix, h_col: &FieldMatrix) -> bool {
    let t = c.topology();
    let zero = |h: &FieldMatrix, v: &[u64]| h.mul_vec(v).map(|s| s.iter().all(|&x| x == 0)).unwrap_or(false);
    (0..t.m()).all(|r| zero(h_row, c.row(r))) && (0..t.n()).all(|col| zero(h_col, &c.column(col)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codegen::{sample_code, DEFAULT_RETRIES};
    use crate::gfield::Field;
    use crate::patterns::fixtures::fig1;
    use crate::seeds::rng_from_seed;
    use rand::Rng;

    fn fig1_code() -> crate::codegen::SampledCode {
        sample_code(&fig1(), Field::default_field(), 17, DEFAULT_RETRIES).unwrap()
    }

    #[test]
    fn recoverability_extremes() {
        let s = fig1_code();
        let g = &s.code.generator;
        let t = fig1().topology();
        let r = is_recoverable_by(g, &fig1()).unwrap();
        assert!(r.recoverable);
        assert_eq!(r.punctured_rank, 40);
        assert!(is_recoverable_by(g, &ErasurePattern::empty(t)).unwrap().recoverable);
        let all = ErasurePattern::from_cells(t, (0..6).flat_map(|i| (0..10).map(move |j| (i, j)))).unwrap();
        let r = is_recoverable_by(g, &all).unwrap();
        assert_eq!((r.punctured_rank, r.recoverable), (0, false));

        let other = Topology::new(2, 2, 1, 1).unwrap();
        assert!(matches!(
            is_recoverable_by(g, &ErasurePattern::empty(other)),
            Err(RecoveryError::Shape(_))
        ));
    }

    #[test]
    fn round_trip_and_corruption() {
        let s = fig1_code();
        let g = &s.code.generator;
        let t = fig1().topology();
        let f = Field::default_field();
        let mut rng = rng_from_seed(3);
        let msg: Vec<u64> = (0..40).map(|_| rng.gen_range(0..f.modulus())).collect();
        let c = encode(g, t, &msg).unwrap();
        let received = c.erase(&fig1());
        assert_eq!(decode(g, &received).unwrap(), c);

        let zero = encode(g, t, &[0; 40]).unwrap();
        assert!(zero.as_slice().iter().all(|&x| x == 0));
        assert_eq!(decode(g, &zero.erase(&fig1())).unwrap(), zero);

        let mut values = received.values().to_vec();
        let k = values.iter().position(Option::is_some).unwrap();
        values[k] = Some(f.add(values[k].unwrap(), 1));
        let corrupted = Received::new(t, values).unwrap();
        assert!(matches!(decode(g, &corrupted), Err(RecoveryError::NotACodeword { .. })));
    }

    #[test]
    fn encode_shapes() {
        let s = fig1_code();
        let t = fig1().topology();
        assert!(matches!(encode(&s.code.generator, t, &[1; 39]), Err(RecoveryError::Shape(_))));
        let mut basis = vec![0; 40];
        basis[0] = 1;
        let c = encode(&s.code.generator, t, &basis).unwrap();
        assert_eq!(c.as_slice(), s.code.generator.row(0));
    }

    #[test]
    fn parity_checks_annihilate() {
        let s = fig1_code();
        let (h_row, h_col) = parity_checks(&s.code.grow, &s.code.gcol).unwrap();
        assert_eq!((h_row.rows(), h_row.cols()), (2, 10));
        assert_eq!((h_col.rows(), h_col.cols()), (1, 6));
        let c = encode(&s.code.generator, fig1().topology(), &[5; 40]).unwrap();
        assert!(satisfies_parities(&c, &h_row, &h_col));

        let f7 = Field::new(7).unwrap();
        let grow = FieldMatrix::from_rows(f7, &[vec![1, 2, 3, 4], vec![0, 1, 5, 6], vec![3, 0, 1, 1]]).unwrap();
        let gcol = FieldMatrix::from_rows(f7, &[vec![1, 1, 0], vec![1, 0, 1]]).unwrap();
        let (h_row, h_col) = parity_checks(&grow, &gcol).unwrap();
        assert_eq!(h_row.rows(), 1);
        assert!(grow.mul(&h_row.transpose()).unwrap().is_zero());
        assert!(gcol.mul(&h_col.transpose()).unwrap().is_zero());

        let id = FieldMatrix::identity(f7, 4);
        assert!(matches!(parity_checks(&id, &gcol), Err(RecoveryError::DegenerateCode(_))));
        let deficient = FieldMatrix::from_rows(f7, &[vec![1, 1, 0], vec![2, 2, 0]]).unwrap();
        assert!(matches!(parity_checks(&grow, &deficient), Err(RecoveryError::DegenerateCode(_))));
    }
}
