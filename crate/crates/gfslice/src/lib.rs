//! Bit-sliced arithmetic over prime fields and minimum-distance search for
//! random linear codes.
//!
//! Elements of F_p are transposed into bit planes so one logical word
//! operation acts on 32 or 64 field elements at once; addition, negation and
//! scalar combination are pure AND/OR/XOR/NOT circuits. On top of that sits a
//! Brouwer-Zimmermann minimum-distance engine with reusable partial sums,
//! weight-only (isometric) inner operations, and a multithreaded enumerator.

pub mod arith;
pub mod bench;
pub mod code;
pub mod engine;
mod error;
pub mod field;
pub mod selftest;
pub mod sliced;

pub use code::{GammaMatrix, GammaSet, GeneratorMatrix};
pub use engine::{EngineOptions, MinWeightResult, StageRecord};
pub use error::{Error, Result};
pub use field::FieldSpec;
pub use sliced::{DenseVector, NonzeroMask, SlicedVector, Word, WordWidth};
