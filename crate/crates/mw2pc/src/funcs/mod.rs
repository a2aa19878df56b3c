//! Derived function protocols built on the MW-coefficient core: exact
//! division and truncation, transcendental evaluation (exponential variants
//! and sine), and the benchmark-scale Softmax pipeline.

mod div;
pub mod exp;
pub mod sin;
pub mod softmax;
pub mod sop;

pub use div::{pi_div, pi_trunc};
pub use exp::{modeled_rexp_bits, pi_exp, pi_rexp, ExpParams};
pub use sin::{pi_sin, SinParams};
pub use softmax::{pi_softmax, reciprocal, secure_max_rows, SoftmaxParams};
pub use sop::{eval_sop, FinalShift, MulKind, ScalarFn, SopGroup, SopSpec, SopTerm};
