//! Prime-field arithmetic and dense linear algebra over GF(q).
//!
//! Everything the constructions instantiate (row codes, column codes, their
//! tensor product, punctured generator matrices) ends up as a [`FieldMatrix`]
//! and is judged by [`FieldMatrix::rank`] or [`FieldMatrix::solve`].

use std::fmt;

use thiserror::Error;

/// The Mersenne prime 2^31 - 1, used as the default modulus.
pub const DEFAULT_MODULUS: u64 = 2_147_483_647;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FieldError {
    #[error("modulus {0} is not a prime >= 2")]
    InvalidField(u64),
    #[error("index out of range: {what} index {index} >= {bound}")]
    IndexError {
        what: &'static str,
        index: usize,
        bound: usize,
    },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("linear system is inconsistent at equation {equation}")]
    NoSolution { equation: usize },
    #[error("linear system is underdetermined (rank {rank} < {unknowns} unknowns)")]
    Underdetermined { rank: usize, unknowns: usize },
}

/// A prime field GF(q).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Field {
    q: u64,
}

impl Field {
    pub fn new(q: u64) -> Result<Self, FieldError> {
        if is_prime(q) {
            Ok(Field { q })
        } else {
            Err(FieldError::InvalidField(q))
        }
    }

    /// GF(2^31 - 1).
    pub fn default_field() -> Self {
        Field { q: DEFAULT_MODULUS }
    }

    #[inline]
    pub fn modulus(&self) -> u64 {
        self.q
    }

    #[inline]
    pub fn reduce(&self, x: u64) -> u64 {
        x % self.q
    }

    #[inline]
    pub fn add(&self, x: u64, y: u64) -> u64 {
        let s = x as u128 + y as u128;
        (s % self.q as u128) as u64
    }

    #[inline]
    pub fn sub(&self, x: u64, y: u64) -> u64 {
        if x >= y {
            x - y
        } else {
            self.q - (y - x)
        }
    }

    #[inline]
    pub fn neg(&self, x: u64) -> u64 {
        if x == 0 {
            0
        } else {
            self.q - x
        }
    }

    #[inline]
    pub fn mul(&self, x: u64, y: u64) -> u64 {
        mulmod(x, y, self.q)
    }

    /// Multiplicative inverse by the extended Euclidean algorithm.
    /// Returns `None` for zero.
    pub fn inv(&self, x: u64) -> Option<u64> {
        let x = x % self.q;
        if x == 0 {
            return None;
        }
        let (mut old_r, mut r) = (x as i128, self.q as i128);
        let (mut old_s, mut s) = (1i128, 0i128);
        while r != 0 {
            let quot = old_r / r;
            (old_r, r) = (r, old_r - quot * r);
            (old_s, s) = (s, old_s - quot * s);
        }
        debug_assert_eq!(old_r, 1);
        Some(old_s.rem_euclid(self.q as i128) as u64)
    }
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GF({})", self.q)
    }
}

#[inline]
fn mulmod(x: u64, y: u64, q: u64) -> u64 {
    ((x as u128 * y as u128) % q as u128) as u64
}

fn powmod(mut base: u64, mut exp: u64, q: u64) -> u64 {
    let mut acc = 1u64 % q;
    base %= q;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mulmod(acc, base, q);
        }
        base = mulmod(base, base, q);
        exp >>= 1;
    }
    acc
}

/// Deterministic Miller-Rabin, exact for all 64-bit inputs.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    const SMALL: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    for p in SMALL {
        if n.is_multiple_of(p) {
            return n == p;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d.is_multiple_of(2) {
        d /= 2;
        s += 1;
    }
    'witness: for a in SMALL {
        let mut x = powmod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mulmod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Dense row-major matrix over a prime field.
#[derive(Clone, PartialEq, Eq)]
pub struct FieldMatrix {
    field: Field,
    rows: usize,
    cols: usize,
    data: Vec<u64>,
}

impl fmt::Debug for FieldMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "FieldMatrix {}x{} over {}", self.rows, self.cols, self.field)?;
        for r in 0..self.rows {
            writeln!(f, "  {:?}", self.row(r))?;
        }
        Ok(())
    }
}

impl FieldMatrix {
    pub fn zeros(field: Field, rows: usize, cols: usize) -> Self {
        FieldMatrix {
            field,
            rows,
            cols,
            data: vec![0; rows * cols],
        }
    }

    pub fn identity(field: Field, n: usize) -> Self {
        let mut m = Self::zeros(field, n, n);
        for i in 0..n {
            m.data[i * n + i] = 1 % field.modulus();
        }
        m
    }

    /// Builds a matrix from row-major data, reducing every entry mod q.
    pub fn from_vec(field: Field, rows: usize, cols: usize, data: Vec<u64>) -> Result<Self, FieldError> {
        if data.len() != rows * cols {
            return Err(FieldError::Shape(format!(
                "{} entries for a {}x{} matrix",
                data.len(),
                rows,
                cols
            )));
        }
        let data = data.into_iter().map(|x| field.reduce(x)).collect();
        Ok(FieldMatrix { field, rows, cols, data })
    }

    pub fn from_rows(field: Field, rows: &[Vec<u64>]) -> Result<Self, FieldError> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(FieldError::Shape("ragged rows".into()));
        }
        let data = rows.iter().flatten().copied().collect();
        Self::from_vec(field, rows.len(), cols, data)
    }

    #[inline]
    pub fn field(&self) -> Field {
        self.field
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> u64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, value: u64) {
        self.data[r * self.cols + c] = self.field.reduce(value);
    }

    pub fn row(&self, r: usize) -> &[u64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[u64] {
        &self.data
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.field, self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.data[c * self.rows + r] = self.get(r, c);
            }
        }
        t
    }

    /// Restriction to the given rows and columns, in the order given.
    pub fn submatrix(&self, rowset: &[usize], colset: &[usize]) -> Result<Self, FieldError> {
        check_indices("row", rowset, self.rows)?;
        check_indices("column", colset, self.cols)?;
        let mut data = Vec::with_capacity(rowset.len() * colset.len());
        for &r in rowset {
            let row = self.row(r);
            data.extend(colset.iter().map(|&c| row[c]));
        }
        Ok(FieldMatrix {
            field: self.field,
            rows: rowset.len(),
            cols: colset.len(),
            data,
        })
    }

    /// Keeps every row and the listed columns.
    pub fn select_columns(&self, colset: &[usize]) -> Result<Self, FieldError> {
        let all: Vec<usize> = (0..self.rows).collect();
        self.submatrix(&all, colset)
    }

    pub fn mul(&self, other: &FieldMatrix) -> Result<Self, FieldError> {
        if self.cols != other.rows {
            return Err(FieldError::Shape(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let f = self.field;
        let mut out = Self::zeros(f, self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0 {
                    continue;
                }
                for j in 0..other.cols {
                    let idx = i * other.cols + j;
                    out.data[idx] = f.add(out.data[idx], f.mul(a, other.get(k, j)));
                }
            }
        }
        Ok(out)
    }

    /// Row vector times matrix: `x · M`.
    pub fn left_mul_vec(&self, x: &[u64]) -> Result<Vec<u64>, FieldError> {
        if x.len() != self.rows {
            return Err(FieldError::Shape(format!(
                "vector of length {} against {} rows",
                x.len(),
                self.rows
            )));
        }
        let f = self.field;
        let mut out = vec![0u64; self.cols];
        for (r, &xr) in x.iter().enumerate() {
            if xr == 0 {
                continue;
            }
            for (o, &m) in out.iter_mut().zip(self.row(r)) {
                *o = f.add(*o, f.mul(xr, m));
            }
        }
        Ok(out)
    }

    /// Matrix times column vector: `M · x`.
    pub fn mul_vec(&self, x: &[u64]) -> Result<Vec<u64>, FieldError> {
        if x.len() != self.cols {
            return Err(FieldError::Shape(format!(
                "vector of length {} against {} columns",
                x.len(),
                self.cols
            )));
        }
        let f = self.field;
        Ok((0..self.rows)
            .map(|r| {
                self.row(r)
                    .iter()
                    .zip(x)
                    .fold(0, |acc, (&m, &v)| f.add(acc, f.mul(m, v)))
            })
            .collect())
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &FieldMatrix) -> Self {
        let f = self.field;
        let (r2, c2) = (other.rows, other.cols);
        let mut out = Self::zeros(f, self.rows * r2, self.cols * c2);
        let out_cols = out.cols;
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = self.get(i, j);
                if a == 0 {
                    continue;
                }
                for k in 0..r2 {
                    for l in 0..c2 {
                        out.data[(i * r2 + k) * out_cols + j * c2 + l] = f.mul(a, other.get(k, l));
                    }
                }
            }
        }
        out
    }

    /// Row rank by Gaussian elimination.
    pub fn rank(&self) -> usize {
        let mut work = self.clone();
        work.eliminate(None).len()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&x| x == 0)
    }

    /// Determinant of a square matrix.
    pub fn determinant(&self) -> Result<u64, FieldError> {
        if self.rows != self.cols {
            return Err(FieldError::Shape(format!("{}x{} is not square", self.rows, self.cols)));
        }
        let f = self.field;
        let n = self.rows;
        let mut a = self.clone();
        let mut det = 1 % f.modulus();
        for col in 0..n {
            let Some(p) = (col..n).find(|&r| a.get(r, col) != 0) else {
                return Ok(0);
            };
            if p != col {
                a.swap_rows(p, col);
                det = f.neg(det);
            }
            let pivot = a.get(col, col);
            det = f.mul(det, pivot);
            let inv = f.inv(pivot).expect("nonzero pivot");
            for r in col + 1..n {
                let factor = f.mul(a.get(r, col), inv);
                if factor != 0 {
                    a.axpy_row(r, col, factor, col);
                }
            }
        }
        Ok(det)
    }

    /// Solves `A·x = y` for `x`.
    ///
    /// Inconsistency is reported before rank deficiency: an overdetermined
    /// system with a contradictory equation yields `NoSolution` carrying the
    /// original index of the offending equation.
    pub fn solve(&self, y: &[u64]) -> Result<Vec<u64>, FieldError> {
        if y.len() != self.rows {
            return Err(FieldError::Shape(format!(
                "right-hand side of length {} against {} rows",
                y.len(),
                self.rows
            )));
        }
        let f = self.field;
        let n = self.cols;
        // augmented [A | y]
        let mut aug = FieldMatrix::zeros(f, self.rows, n + 1);
        for (r, &yr) in y.iter().enumerate() {
            aug.data[r * (n + 1)..r * (n + 1) + n].copy_from_slice(self.row(r));
            aug.data[r * (n + 1) + n] = f.reduce(yr);
        }
        let mut origin: Vec<usize> = (0..self.rows).collect();
        let pivots = aug.eliminate_tracking(Some(n), &mut origin);
        let rank = pivots.len();
        if let Some(r) = (rank..aug.rows).find(|&r| aug.get(r, n) != 0) {
            return Err(FieldError::NoSolution { equation: origin[r] });
        }
        if rank < n {
            return Err(FieldError::Underdetermined { rank, unknowns: n });
        }
        // reduced row echelon form: pivot rows carry the solution directly
        let mut x = vec![0u64; n];
        for (r, &c) in pivots.iter().enumerate() {
            x[c] = aug.get(r, n);
        }
        Ok(x)
    }

    /// Basis of the right kernel `{h : M·h = 0}`, one basis vector per row.
    pub fn nullspace(&self) -> FieldMatrix {
        let f = self.field;
        let mut work = self.clone();
        let pivots = work.eliminate(None);
        let mut is_pivot = vec![false; self.cols];
        for &c in &pivots {
            is_pivot[c] = true;
        }
        let free: Vec<usize> = (0..self.cols).filter(|&c| !is_pivot[c]).collect();
        let mut basis = FieldMatrix::zeros(f, free.len(), self.cols);
        for (k, &fc) in free.iter().enumerate() {
            basis.set(k, fc, 1);
            for (r, &pc) in pivots.iter().enumerate() {
                let v = work.get(r, fc);
                basis.data[k * self.cols + pc] = f.neg(v);
            }
        }
        basis
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for c in 0..self.cols {
            self.data.swap(a * self.cols + c, b * self.cols + c);
        }
    }

    /// row[target] -= factor * row[source], for columns >= from.
    fn axpy_row(&mut self, target: usize, source: usize, factor: u64, from: usize) {
        let f = self.field;
        let cols = self.cols;
        for c in from..cols {
            let s = self.data[source * cols + c];
            if s != 0 {
                let t = &mut self.data[target * cols + c];
                *t = f.sub(*t, f.mul(factor, s));
            }
        }
    }

    fn eliminate(&mut self, col_limit: Option<usize>) -> Vec<usize> {
        let mut origin: Vec<usize> = (0..self.rows).collect();
        self.eliminate_tracking(col_limit, &mut origin)
    }

    /// In-place reduction to reduced row echelon form over the first
    /// `col_limit` columns; pivots are the first nonzero entry found scanning
    /// rows top-down. Returns pivot columns; `origin` follows the row swaps.
    fn eliminate_tracking(&mut self, col_limit: Option<usize>, origin: &mut [usize]) -> Vec<usize> {
        let f = self.field;
        let limit = col_limit.unwrap_or(self.cols);
        let mut pivots = Vec::new();
        let mut row = 0;
        for col in 0..limit {
            if row == self.rows {
                break;
            }
            let Some(p) = (row..self.rows).find(|&r| self.get(r, col) != 0) else {
                continue;
            };
            self.swap_rows(p, row);
            origin.swap(p, row);
            let inv = f.inv(self.get(row, col)).expect("nonzero pivot");
            for c in col..self.cols {
                let idx = row * self.cols + c;
                self.data[idx] = f.mul(self.data[idx], inv);
            }
            for r in 0..self.rows {
                if r != row {
                    let factor = self.get(r, col);
                    if factor != 0 {
                        self.axpy_row(r, row, factor, col);
                    }
                }
            }
            pivots.push(col);
            row += 1;
        }
        pivots
    }
}

fn check_indices(what: &'static str, idx: &[usize], bound: usize) -> Result<(), FieldError> {
    match idx.iter().find(|&&i| i >= bound) {
        Some(&index) => Err(FieldError::IndexError { what, index, bound }),
        None => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gf(q: u64) -> Field {
        Field::new(q).unwrap()
    }

    #[test]
    fn field_construction() {
        assert_eq!(gf(2).modulus(), 2);
        assert_eq!(gf(2_147_483_647).modulus(), DEFAULT_MODULUS);
        assert_eq!(Field::new(4), Err(FieldError::InvalidField(4)));
        assert!(Field::new(0).is_err());
        assert!(Field::new(1).is_err());
        // large 64-bit prime and a strong pseudoprime to base 2
        assert!(Field::new(18_446_744_073_709_551_557).is_ok());
        assert!(Field::new(3_215_031_751).is_err());
    }

    #[test]
    fn inverse_round_trip() {
        let f = gf(7);
        for x in 1..7 {
            assert_eq!(f.mul(x, f.inv(x).unwrap()), 1);
        }
        assert_eq!(f.inv(0), None);
        let big = Field::default_field();
        let x = 123_456_789;
        assert_eq!(big.mul(x, big.inv(x).unwrap()), 1);
    }

    #[test]
    fn rank_examples() {
        let f = gf(7);
        assert_eq!(FieldMatrix::identity(f, 3).rank(), 3);
        assert_eq!(FieldMatrix::zeros(f, 2, 5).rank(), 0);
        let m = FieldMatrix::from_rows(f, &[vec![1, 2], vec![2, 4]]).unwrap();
        assert_eq!(m.rank(), 1);
    }

    #[test]
    fn solve_examples() {
        let f = gf(7);
        let id = FieldMatrix::identity(f, 2);
        assert_eq!(id.solve(&[3, 5]).unwrap(), vec![3, 5]);
        let a = FieldMatrix::from_rows(f, &[vec![2]]).unwrap();
        assert_eq!(a.solve(&[3]).unwrap(), vec![5]);
        let a = FieldMatrix::from_rows(f, &[vec![1], vec![1]]).unwrap();
        assert_eq!(a.solve(&[1, 2]), Err(FieldError::NoSolution { equation: 1 }));
        let a = FieldMatrix::from_rows(f, &[vec![1, 1], vec![2, 2]]).unwrap();
        assert_eq!(
            a.solve(&[1, 2]),
            Err(FieldError::Underdetermined { rank: 1, unknowns: 2 })
        );
    }

    #[test]
    fn submatrix_examples() {
        let f = gf(7);
        let id = FieldMatrix::identity(f, 3);
        assert_eq!(id.submatrix(&[0, 1, 2], &[0, 1, 2]).unwrap(), id);
        let empty = id.submatrix(&[0, 1, 2], &[]).unwrap();
        assert_eq!((empty.rows(), empty.cols()), (3, 0));
        // 1-based rows {1,2}, cols {2,3}
        let s = id.submatrix(&[0, 1], &[1, 2]).unwrap();
        assert_eq!(s, FieldMatrix::from_rows(f, &[vec![0, 0], vec![1, 0]]).unwrap());
        assert!(matches!(
            id.submatrix(&[3], &[0]),
            Err(FieldError::IndexError { what: "row", index: 3, bound: 3 })
        ));
    }

    #[test]
    fn nullspace_annihilates() {
        let f = gf(7);
        let m = FieldMatrix::from_rows(f, &[vec![1, 2, 3, 4], vec![0, 1, 5, 6]]).unwrap();
        let h = m.nullspace();
        assert_eq!(h.rows(), 2);
        assert!(m.mul(&h.transpose()).unwrap().is_zero());
        assert_eq!(h.rank(), 2);
    }

    #[test]
    fn determinant_matches_rank() {
        let f = gf(11);
        let m = FieldMatrix::from_rows(f, &[vec![2, 1], vec![1, 1]]).unwrap();
        assert_eq!(m.determinant().unwrap(), 1);
        let s = FieldMatrix::from_rows(f, &[vec![0, 1], vec![1, 0]]).unwrap();
        assert_eq!(s.determinant().unwrap(), 10);
        let z = FieldMatrix::from_rows(f, &[vec![1, 2], vec![2, 4]]).unwrap();
        assert_eq!(z.determinant().unwrap(), 0);
    }

    #[test]
    fn kron_small() {
        let f = gf(7);
        let a = FieldMatrix::from_rows(f, &[vec![1, 1]]).unwrap();
        let b = FieldMatrix::from_rows(f, &[vec![2, 3]]).unwrap();
        assert_eq!(a.kron(&b).as_slice(), &[2, 3, 2, 3]);
    }
}
