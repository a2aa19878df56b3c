//! Semi-honest secure two-party computation over `Z_{2^l}` built around
//! *modular-wrap (MW) coefficients*.
//!
//! Two parties hold additive shares `x0, x1` of a ring element
//! `x = x0 + x1 mod 2^l`. The MW coefficient
//!
//! ```text
//! MW(x0, x1) = MSB(x) + Wrap(x0, x1)   in {0, 1, 2}
//! ```
//!
//! (`MSB(x) = 1{x >= 2^(l-1)}`, `Wrap = 1{x0 + x1 >= 2^l}`) captures exactly
//! how the physical sum `x0 + x1` relates to the signed integer the sharing
//! encodes: `int(x) = x0 + x1 - MW * 2^l`. Many fixed-point primitives
//! (faithful truncation, exact division by public constants, sign/zero
//! extension, and one-lookup evaluation of transcendental functions) reduce to
//! securely computing shares of MW. When the shared value is known to be
//! bounded, `|int(x)| < B`, MW can be computed far below the cost of a generic
//! comparison — down to a single bit-multiplication for `B <= L/4`.
//!
//! # Main components
//!
//! - [`ring`]: width-parameterized ring elements ([`ring::RingElem`]) and
//!   fixed-point encode/decode ([`ring::FixMeta`]).
//! - [`sharing`]: additive/XOR sharing helpers and plaintext wrap/MW
//!   references.
//! - [`runtime`]: party contexts, in-memory and TCP transports, the
//!   communication [`runtime::CostLedger`] (modeled bits, actual bytes, round
//!   waves), and the two-thread [`runtime::run_pair`] driver.
//! - [`ot`]: a dealer-assisted oblivious-transfer layer (1-of-2, 1-of-k,
//!   correlated OT) used by every interactive gate.
//! - [`gates`]: batched primitive gates — AND, bit-multiplication,
//!   CrypTFlow2-style comparison, DReLU, B2A, MUX, lookup tables, sign
//!   extension, cross terms, and share multiplication.
//! - [`mw`]: the bounded-input MW protocol, the MW-from-wider-ring conversion,
//!   and the constrained comparison/wrap reductions they rest on.
//! - [`funcs`]: derived fixed-point protocols — faithful truncation, exact
//!   division, a reusable sum-of-products engine, exponentials, sine, secure
//!   maximum, reciprocal, and softmax.
//! - [`oracle`]: brute-force plaintext oracles and the ULP accuracy metric
//!   used by the test suites and the verification CLI.
//!
//! # Example
//!
//! Computing MW shares for a bounded sharing, in-memory:
//!
//! ```
//! use mw2pc::mw::{pi_mw, MwParams};
//! use mw2pc::ring::RingElem;
//! use mw2pc::runtime::run_pair;
//! use mw2pc::sharing::ArithShare;
//!
//! let l = 8;
//! let params = MwParams::new(l, 2, 96).unwrap(); // |int(x)| < 96, 2-bit output
//! let (r0, r1) = run_pair(7, move |ctx| {
//!     let my_share = match ctx.party().index() {
//!         0 => ArithShare(RingElem::new(l, 50)),
//!         _ => ArithShare(RingElem::new(l, 250)),
//!     };
//!     pi_mw(ctx, &params, &[my_share])
//! })
//! .unwrap();
//! // 50 + 250 = 300 wraps once and the residue 44 has MSB 0, so MW = 1.
//! assert_eq!((r0.output[0].0 + r1.output[0].0).value(), 1);
//! ```
//!
//! # Cost accounting
//!
//! Every interactive gate records its *modeled* cost — the closed-form bit
//! count of a standard IKNP-style instantiation with security parameter
//! λ = 128 — alongside the bytes actually moved by the (dealer-assisted)
//! transcript, and rounds are counted as message waves. The modeled figures
//! are what the published cost tables quote; see [`runtime::CostLedger`].
//!
//! # Security model
//!
//! Semi-honest, two-party. The OT layer is dealer-derandomized from a shared
//! session seed: transcripts are masked and choice-independent, which
//! preserves the message-flow structure and on-wire sizes of the modeled
//! protocols while keeping the whole stack deterministic and replayable. It is
//! a benchmarking/accuracy artifact, not a hardened production transport.

#![deny(unsafe_code)]
#![deny(missing_docs)]
#![deny(rustdoc::broken_intra_doc_links)]

pub mod funcs;
pub mod gates;
pub mod mw;
pub mod oracle;
pub mod ot;
pub mod ring;
pub mod runtime;
pub mod sharing;

use thiserror::Error;

/// Security parameter (bits) used by every modeled cost formula.
pub const LAMBDA: u64 = 128;

/// Errors shared across the library.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter failed validation (width, bound, divisor, ...).
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    /// The transport failed or the peer disconnected.
    #[error("transport: {0}")]
    Transport(String),
    /// The peer did not answer within the configured deadline.
    #[error("timed out after {0:?} waiting for peer")]
    Timeout(std::time::Duration),
    /// The two endpoints disagreed on session parameters or roles.
    #[error("handshake mismatch: {0}")]
    Handshake(String),
    /// Underlying I/O error (TCP transport).
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    /// A protocol worker thread panicked.
    #[error("party thread panicked: {0}")]
    Panic(String),
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
