//! Sine of a fixed-point sharing via the angle-addition split.
//!
//! With `int(x) = z0 + z1 - c·2^li`, the parties evaluate
//! `sin(u + v + t_c)` for `u = z0/2^f`, `v = z1/2^f`, `t_c = -c·2^(li-f)`
//! through two groups:
//!
//! ```text
//! sin(u+v+t) = cos(t)·[sin u cos v + cos u sin v]
//!            + sin(t)·[cos u cos v - sin u sin v]
//! ```
//!
//! All factors live in `[-1, 1]`, so they multiply under the offset scheme,
//! and the guard bits come off with the exact-floor shift.

use std::sync::Arc;

use crate::funcs::sop::{eval_sop, FinalShift, MulKind, SopGroup, SopSpec, SopTerm};
use crate::ring::FixMeta;
use crate::runtime::PartyCtx;
use crate::sharing::ArithShare;
use crate::{Error, Result};

/// Encodings for one sine evaluation.
#[derive(Clone, Copy, Debug)]
pub struct SinParams {
    input: FixMeta,
    out: FixMeta,
    comp: FixMeta,
    weight: FixMeta,
    mw_bound: u128,
}

impl SinParams {
    /// Builds parameters for arguments in the `input` encoding whose value is
    /// promised inside `(-mw_bound, mw_bound)` fixed-point units (up to half
    /// the component ring). The output is produced in the `out` encoding.
    pub fn new(input: FixMeta, out: FixMeta, mw_bound: u128) -> Result<Self> {
        if input.f == 0 {
            return Err(Error::InvalidParam("sine needs at least one fraction bit".into()));
        }
        if mw_bound == 0 || mw_bound > 1u128 << (input.l - 1) {
            return Err(Error::InvalidParam(format!(
                "coefficient bound {mw_bound} outside 1..=2^{}",
                input.l - 1
            )));
        }
        Ok(Self {
            input,
            out,
            comp: FixMeta::new(16, 14)?,
            weight: FixMeta::new(32, 30)?,
            mw_bound,
        })
    }

    fn spec(&self) -> SopSpec {
        let sin: Arc<dyn Fn(f64) -> f64 + Send + Sync> = Arc::new(f64::sin);
        let cos: Arc<dyn Fn(f64) -> f64 + Send + Sync> = Arc::new(f64::cos);
        SopSpec {
            input: self.input,
            comp: self.comp,
            weight: self.weight,
            out: self.out,
            guard_bits: 6,
            final_shift: FinalShift::FaithfulFloor,
            mul_kind: MulKind::Offset,
            mw_bound: self.mw_bound,
            fold_residue: false,
            groups: vec![
                SopGroup {
                    terms: vec![
                        SopTerm { left: sin.clone(), right: cos.clone(), negate: false },
                        SopTerm { left: cos.clone(), right: sin.clone(), negate: false },
                    ],
                    weight: cos.clone(),
                },
                SopGroup {
                    terms: vec![
                        SopTerm { left: cos.clone(), right: cos, negate: false },
                        SopTerm { left: sin.clone(), right: sin.clone(), negate: true },
                    ],
                    weight: sin,
                },
            ],
        }
    }
}

/// Shares of `sin(x)` (argument in radians).
pub fn pi_sin(ctx: &mut PartyCtx, xs: &[ArithShare], params: &SinParams) -> Result<Vec<ArithShare>> {
    eval_sop(ctx, xs, &params.spec())
}
