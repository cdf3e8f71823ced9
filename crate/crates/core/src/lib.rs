//! Exact cross-correlation spectra between a p-ary m-sequence of period
//! `p^{2m} - 1` and its decimation by `d = (p^m+1)²/(2(p^e+1))`, for
//! `p ≡ 1 (mod 4)`, `m` odd and `e | m`.
//!
//! Correlation values are computed three ways (definitional sum over the
//! sequences, two exponential sums over the field, and quadratic-form
//! rank/sign analysis), all in exact cyclotomic arithmetic, and compared with
//! the closed-form six-valued distribution.

pub mod audit;
pub mod cyclotomic;
pub mod ffield;
mod modp;
pub mod qform;
pub mod seqgen;
pub mod spectrum;

pub use cyclotomic::{CycInt, QuadValue};
pub use ffield::{build_field, FieldDesc, FieldElem, FieldOptions};
pub use seqgen::{validate_params, Instance, SeqParams};
pub use qform::{Analyzer, QFormAnalysis};
pub use spectrum::{CorrTag, Method, Spectrum, SpectrumReport};
