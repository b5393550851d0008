//! Maximally recoverable codes for product topologies `T_{m,n}(a, b, 0)`.
//!
//! * [`gfield`]: prime-field arithmetic and dense linear algebra.
//! * [`patterns`]: erasure patterns, regularity, reduction and extension.
//! * [`matchgraph`]: bipartite graphs and matching certificates.
//! * [`codegen`]: symbolic generator matrices and their instantiation.
//! * [`recovery`]: recoverability checks, encoding and decoding.
//! * [`oracle`]: exhaustive verification at small scale.
//!
//! Codeword cell `(i, j)` of an `m x n` grid maps to generator column
//! `i·n + j` (0-based, row after row).

pub mod codegen;
pub mod gfield;
pub mod matchgraph;
pub mod oracle;
pub mod patterns;
pub mod recovery;
pub mod seeds;

pub use codegen::{sample_code, sample_code_a2, sample_universal_mrc, ProductCode, SampledCode};
pub use gfield::{Field, FieldMatrix};
pub use patterns::{extend_pattern, ErasurePattern, ExtendedPattern, Topology};
pub use recovery::{decode, encode, is_recoverable_by, Codeword};
