//! Text formats for code files and received words.
//!
//! Code file:
//!
//! ```text
//! mrc-code 1
//! topology <m> <n> <a> <b>
//! field <q>
//! seed <s>
//! construction <structured|extended|generic>
//! grow <rows> <cols>
//! <decimal rows>
//! gcol <rows> <cols>
//! <decimal rows>
//! symbolic-grow <rows> <cols>
//! <entry rows: 0, 1 or variable products such as x[3,7]>
//! symbolic-gcol <rows> <cols>
//! <entry rows>
//! assignment <count>
//! <name> <value>
//! ```
//!
//! The symbolic sections and the assignment are optional and are not read back.
//!
//! Received file: the header `m n a b`, then `m` lines of `n`
//! whitespace-separated tokens, each a decimal field element or `?`.

use std::fmt::Write as _;

use mrc_core::codegen::{Assignment, SymbolicMatrix, VarPool};
use mrc_core::gfield::{Field, FieldMatrix};
use mrc_core::patterns::{parse_header, Topology};
use mrc_core::recovery::{Codeword, Received};
use mrc_core::ProductCode;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FormatError {
    pub line: usize,
    pub message: String,
}

impl std::fmt::Display for FormatError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

impl std::error::Error for FormatError {}

fn err(line: usize, message: impl Into<String>) -> FormatError {
    FormatError {
        line,
        message: message.into(),
    }
}

pub struct CodeFile {
    pub code: ProductCode,
    pub seed: u64,
    pub construction: String,
}

pub fn write_code_file(
    code: &ProductCode,
    seed: u64,
    construction: &str,
    symbolic: Option<(&VarPool, &SymbolicMatrix, &SymbolicMatrix, &Assignment)>,
) -> String {
    let t = code.topology;
    let mut out = String::new();
    let _ = writeln!(out, "mrc-code 1");
    let _ = writeln!(out, "topology {} {} {} {}", t.m(), t.n(), t.a(), t.b());
    let _ = writeln!(out, "field {}", code.grow.field().modulus());
    let _ = writeln!(out, "seed {seed}");
    let _ = writeln!(out, "construction {construction}");
    write_matrix(&mut out, "grow", &code.grow);
    write_matrix(&mut out, "gcol", &code.gcol);
    if let Some((pool, grow, gcol, assignment)) = symbolic {
        let _ = writeln!(out, "symbolic-grow {} {}", grow.rows(), grow.cols());
        out.push_str(&grow.render(pool));
        let _ = writeln!(out, "symbolic-gcol {} {}", gcol.rows(), gcol.cols());
        out.push_str(&gcol.render(pool));
        let _ = writeln!(out, "assignment {}", pool.len());
        for (name, value) in pool.names().iter().zip(assignment.values()) {
            let _ = writeln!(out, "{name} {value}");
        }
    }
    out
}

fn write_matrix(out: &mut String, name: &str, m: &FieldMatrix) {
    let _ = writeln!(out, "{name} {} {}", m.rows(), m.cols());
    for r in 0..m.rows() {
        let row: Vec<String> = m.row(r).iter().map(u64::to_string).collect();
        let _ = writeln!(out, "{}", row.join(" "));
    }
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    fn next_line(&mut self) -> Option<(usize, &'a str)> {
        for (k, l) in self.inner.by_ref() {
            let l = l.trim();
            if !l.is_empty() && !l.starts_with('#') {
                return Some((k + 1, l));
            }
        }
        None
    }

    fn expect(&mut self, what: &str) -> Result<(usize, &'a str), FormatError> {
        self.next_line().ok_or_else(|| err(0, format!("unexpected end of file, expected {what}")))
    }

    fn keyed(&mut self, key: &str) -> Result<(usize, Vec<&'a str>), FormatError> {
        let (ln, l) = self.expect(key)?;
        let mut parts = l.split_whitespace();
        if parts.next() != Some(key) {
            return Err(err(ln, format!("expected `{key}`")));
        }
        Ok((ln, parts.collect()))
    }
}

fn numbers(ln: usize, parts: &[&str], count: usize) -> Result<Vec<u64>, FormatError> {
    if parts.len() != count {
        return Err(err(ln, format!("expected {count} numbers, found {}", parts.len())));
    }
    parts
        .iter()
        .map(|p| p.parse::<u64>().map_err(|_| err(ln, format!("`{p}` is not a number"))))
        .collect()
}

fn read_matrix(lines: &mut Lines<'_>, key: &str, field: Field) -> Result<FieldMatrix, FormatError> {
    let (ln, dims) = lines.keyed(key)?;
    let d = numbers(ln, &dims, 2)?;
    let (rows, cols) = (d[0] as usize, d[1] as usize);
    let mut data = Vec::with_capacity(rows * cols);
    for _ in 0..rows {
        let (ln, l) = lines.expect(key)?;
        let parts: Vec<&str> = l.split_whitespace().collect();
        for v in numbers(ln, &parts, cols)? {
            if v >= field.modulus() {
                return Err(err(ln, format!("{v} is not an element of GF({})", field.modulus())));
            }
            data.push(v);
        }
    }
    FieldMatrix::from_vec(field, rows, cols, data).map_err(|e| err(ln, e.to_string()))
}

pub fn parse_code_file(text: &str) -> Result<CodeFile, FormatError> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
    };
    let (ln, version) = lines.keyed("mrc-code")?;
    if version != ["1"] {
        return Err(err(ln, "unsupported code file version"));
    }
    let (ln, tp) = lines.keyed("topology")?;
    let d = numbers(ln, &tp, 4)?;
    let topology = Topology::new(d[0] as usize, d[1] as usize, d[2] as usize, d[3] as usize)
        .map_err(|e| err(ln, e.to_string()))?;
    let (ln, q) = lines.keyed("field")?;
    let field = Field::new(numbers(ln, &q, 1)?[0]).map_err(|e| err(ln, e.to_string()))?;
    let (ln, s) = lines.keyed("seed")?;
    let seed = numbers(ln, &s, 1)?[0];
    let (ln, c) = lines.keyed("construction")?;
    let construction = c.first().ok_or_else(|| err(ln, "missing construction name"))?.to_string();
    let grow = read_matrix(&mut lines, "grow", field)?;
    let gcol = read_matrix(&mut lines, "gcol", field)?;
    let code = ProductCode::from_factors(topology, gcol, grow).map_err(|e| err(ln, e.to_string()))?;
    Ok(CodeFile {
        code,
        seed,
        construction,
    })
}

pub fn parse_received(text: &str, field: Field) -> Result<Received, FormatError> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
    let (topology, header_line) = parse_header(&mut lines).map_err(|e| err(0, e.to_string()))?;
    let mut values = Vec::with_capacity(topology.cells());
    let mut last = header_line + 1;
    for _ in 0..topology.m() {
        let (k, l) = lines
            .next()
            .ok_or_else(|| err(last + 1, format!("expected {} grid rows", topology.m())))?;
        last = k + 1;
        let tokens: Vec<&str> = l.split_whitespace().collect();
        if tokens.len() != topology.n() {
            return Err(err(k + 1, format!("expected {} cells, found {}", topology.n(), tokens.len())));
        }
        for tok in tokens {
            if tok == "?" {
                values.push(None);
            } else {
                let v: u64 = tok.parse().map_err(|_| err(k + 1, format!("`{tok}` is neither a number nor `?`")))?;
                if v >= field.modulus() {
                    return Err(err(k + 1, format!("{v} is not an element of GF({})", field.modulus())));
                }
                values.push(Some(v));
            }
        }
    }
    if let Some((k, _)) = lines.next() {
        return Err(err(k + 1, "trailing content after the grid"));
    }
    Received::new(topology, values).map_err(|e| err(0, e.to_string()))
}

fn header(t: Topology) -> String {
    format!("{} {} {} {}\n", t.m(), t.n(), t.a(), t.b())
}

pub fn format_received(r: &Received) -> String {
    header(r.topology()) + &r.to_string()
}

pub fn format_codeword(c: &Codeword) -> String {
    header(c.topology()) + &c.to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn received_round_trip() {
        let f = Field::new(7).unwrap();
        let text = "2 3 1 1\n1 ? 3\n? 5 6\n";
        let r = parse_received(text, f).unwrap();
        assert_eq!(r.values(), &[Some(1), None, Some(3), None, Some(5), Some(6)]);
        assert_eq!(format_received(&r), text);
        assert_eq!(parse_received("2 3 1 1\n1 ? 3\n? 5 9\n", f).unwrap_err().line, 3);
        assert_eq!(parse_received("2 3 1 1\n1 ? 3\n", f).unwrap_err().line, 3);
    }

    #[test]
    fn code_file_round_trip() {
        let f = Field::new(7).unwrap();
        let t = Topology::new(2, 3, 1, 1).unwrap();
        let grow = FieldMatrix::from_rows(f, &[vec![1, 2, 3], vec![0, 1, 4]]).unwrap();
        let gcol = FieldMatrix::from_rows(f, &[vec![1, 1]]).unwrap();
        let code = ProductCode::from_factors(t, gcol, grow).unwrap();
        let text = write_code_file(&code, 9, "generic", None);
        let back = parse_code_file(&text).unwrap();
        assert_eq!(back.code, code);
        assert_eq!((back.seed, back.construction.as_str()), (9, "generic"));
        assert!(parse_code_file(&text.replace("grow 2 3", "grow 2 4")).is_err());
    }
}
