//! Exponentials: `base^x` over the component ring, and the gated negative
//! exponential `e^(-x)` on arbitrary ring widths.

use std::sync::Arc;

use crate::funcs::sop::{eval_sop, FinalShift, MulKind, SopGroup, SopSpec, SopTerm};
use crate::gates;
use crate::mw;
use crate::ring::FixMeta;
use crate::runtime::{Party, PartyCtx};
use crate::sharing::ArithShare;
use crate::{Error, Result};

/// Encodings for one `base^x` evaluation.
///
/// The argument is interpreted with `f` fraction bits in the `(f+3)`-bit
/// component ring, so the representable domain is `[-4, 4)`.
#[derive(Clone)]
pub struct ExpParams {
    base: f64,
    input: FixMeta,
    comp: FixMeta,
    weight: FixMeta,
    out: FixMeta,
    mw_bound: u128,
}

impl ExpParams {
    /// Derives component/weight encodings for the given base (must exceed 1)
    /// and input fraction. Folded per-party factors reach `base^4`, so the
    /// base is capped where their encoding keeps at least six fraction bits.
    pub fn new(base: f64, f: u8, out: FixMeta) -> Result<Self> {
        if !base.is_finite() || base <= 1.0 {
            return Err(Error::InvalidParam(format!("exponential base {base} must exceed 1")));
        }
        if f == 0 || f > 40 {
            return Err(Error::InvalidParam(format!("input fraction {f} outside 1..=40")));
        }
        // Folded factors lie in [1, base^4], non-negative, and must stay
        // under a quarter of the multiplication ring for the cheap sign
        // extension: the 23-bit encoding keeps the top bit and the sign bit
        // clear, and the rest of the width goes to the fraction. Weights
        // never exceed one, so the deep 2^-44 grid always fits.
        let int_bits = (4.0 * base.log2()).ceil() as u16;
        if int_bits > 16 {
            return Err(Error::InvalidParam(format!("base {base} too large to encode")));
        }
        Ok(Self {
            base,
            input: FixMeta::new(f + 3, f)?,
            comp: FixMeta::new(23, 22 - int_bits as u8)?,
            weight: FixMeta::new(46, 44)?,
            out,
            mw_bound: 1u128 << (f + 2),
        })
    }

    /// Narrows the coefficient bound for arguments promised in `(-b, b)`
    /// fixed-point units, which cheapens the coefficient protocol.
    pub fn with_mw_bound(mut self, b: u128) -> Self {
        self.mw_bound = b;
        self
    }

    fn spec(&self) -> SopSpec {
        let base = self.base;
        SopSpec {
            input: self.input,
            comp: self.comp,
            weight: self.weight,
            out: self.out,
            guard_bits: 6,
            final_shift: FinalShift::StochasticRound,
            mul_kind: MulKind::NonNegative,
            mw_bound: self.mw_bound,
            fold_residue: true,
            groups: vec![SopGroup {
                terms: vec![SopTerm {
                    left: Arc::new(move |u| base.powf(u)),
                    right: Arc::new(move |v| base.powf(v)),
                    negate: false,
                }],
                weight: Arc::new(move |t| base.powf(t)),
            }],
        }
    }
}

/// Shares of `base^x` for sharings in the component ring (or any wider ring
/// whose value fits the component ring's signed range).
pub fn pi_exp(ctx: &mut PartyCtx, xs: &[ArithShare], params: &ExpParams) -> Result<Vec<ArithShare>> {
    eval_sop(ctx, xs, &params.spec())
}

/// Modeled communication of one [`pi_rexp`] instance on an `l`-bit ring with
/// `f` fraction bits.
pub fn modeled_rexp_bits(l: u8, f: u8) -> u64 {
    let n_lut = (22 + f).min(l + 6);
    let n_out = n_lut - 6;
    let mut total = gates::modeled_bit_mul_bits(2)
        + gates::modeled_cross_term_bits(23, 23)
        + mw::modeled_sext_constrained_bits(46, 92)
        + gates::modeled_lut_bits(4, n_lut);
    if n_out < l {
        total += mw::modeled_sext_constrained_bits(n_out, l);
    }
    if l > f + 4 {
        total += gates::modeled_drelu_bits(l) + gates::modeled_mux_bits(l);
    }
    total
}

/// Shares of `e^(-x)` for non-negative arguments: exact to the fixed-point
/// budget on `[0, 8)` and exactly zero from 8 on, where the true value falls
/// below the representable grid.
///
/// The ring must satisfy `l >= f + 4`; the caller promises
/// `int(x) in [0, 2^(l-1))`.
pub fn pi_rexp(ctx: &mut PartyCtx, xs: &[ArithShare], f: u8) -> Result<Vec<ArithShare>> {
    if xs.is_empty() {
        return Ok(vec![]);
    }
    let l = xs[0].width();
    if f == 0 || f > 40 {
        return Err(Error::InvalidParam(format!("input fraction {f} outside 1..=40")));
    }
    if l < f + 4 {
        return Err(Error::InvalidParam(format!(
            "ring width {l} too narrow for fraction {f} (need f+4)"
        )));
    }
    let p0 = ctx.party() == Party::P0;

    // Recentred argument w = (2^(f+2) - 1) - x: arguments in [0, 8) land in
    // the signed range of the (f+3)-bit component ring, and the weight folds
    // the recentring constant back out.
    let ws: Vec<ArithShare> = xs
        .iter()
        .map(|x| {
            let mut v = -*x;
            if p0 {
                v = ArithShare(v.0.add_const((1u128 << (f + 2)) - 1));
            }
            v
        })
        .collect();
    let shift = -4.0 + (-(f as f64)).exp2();
    // Folded component grid: e^r spans [1, e^4), six magnitude bits, leaving
    // sixteen fraction bits of the 23-bit encoding — relative error at most
    // 2^-17 per factor. The weights e^(shift - 4k) stay below one, and the
    // deep 2^-44 grid keeps even the e^-12 entry at relative error ~5e-9.
    let spec = SopSpec {
        input: FixMeta::new(f + 3, f)?,
        comp: FixMeta::new(23, 16)?,
        weight: FixMeta::new(46, 44)?,
        out: FixMeta::new(l, f)?,
        guard_bits: 6,
        final_shift: FinalShift::StochasticRound,
        mul_kind: MulKind::NonNegative,
        mw_bound: 1u128 << (f + 2),
        fold_residue: true,
        groups: vec![SopGroup {
            terms: vec![SopTerm {
                left: Arc::new(|u: f64| u.exp()),
                right: Arc::new(|v: f64| v.exp()),
                negate: false,
            }],
            weight: Arc::new(move |t: f64| (t + shift).exp()),
        }],
    };
    let ys = eval_sop(ctx, &ws, &spec)?;
    if l == f + 4 {
        return Ok(ys);
    }

    // Wider rings can hold arguments past the evaluated window; one DReLU
    // keeps the in-window results and the MUX zeroes the tail.
    let gate: Vec<ArithShare> = xs
        .iter()
        .map(|x| {
            let mut v = -*x;
            if p0 {
                v = ArithShare(v.0.add_const((1u128 << (f + 3)) - 1));
            }
            v
        })
        .collect();
    let keep = gates::drelu(ctx, &gate)?;
    gates::mux(ctx, &ys, &keep)
}
