//! Shared evaluation core for functions with a multiplicative
//! sum-of-products split.
//!
//! A function qualifies when the component-ring decomposition of its
//! fixed-point argument — `int(x) = z0 + z1 - c·2^li` with `z_i` the parties'
//! share residues modulo `2^li` and `c ∈ {0, 1, 2}` — factors it as
//!
//! ```text
//! F(x) = Σ_groups  weight(t_c) · Σ_terms ± left(z0 / 2^f) · right(z1 / 2^f),
//! t_c  = -c · 2^(li - f).
//! ```
//!
//! Exponentials (one group, one term, all components positive) and the
//! sine/cosine addition formulas (two groups of two signed terms) both fit.
//! The pipeline evaluates every term product with one batched cross
//! multiplication, folds the group sums, forms the three weighted candidates
//! locally, selects the live one with a shared-table lookup indexed by the
//! coefficient shares, and finally drops the guard bits with a carry-aware
//! shift.
//!
//! Fast-growing component functions can opt into a residue fold: each party
//! splits off the top bit of its residue (`z = h·2^(li-1) + r`) and evaluates
//! its factor on `r` alone, while the local bits fold into the coefficient
//! index (`k = 2c - h0 - h1`, still in `{0, 1, 2}` under the signed-range
//! promise, with the weight step halved). Halving the factor domain frees an
//! integer bit of the component encoding for precision, and keeps the term
//! products inside the quarter-range contract of the cheap sign extension.

use std::sync::Arc;

use crate::gates::{self, LutKind};
use crate::mw::{self, MwParams};
use crate::ring::{encode_fix_round, width_mask, FixMeta, RingElem};
use crate::runtime::{Party, PartyCtx};
use crate::sharing::ArithShare;
use crate::{Error, Result};

/// A real-valued component function evaluated locally on a share residue.
pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// One product `left(u) · right(v)` inside a group; `negate` subtracts it
/// from the group sum instead of adding.
#[derive(Clone)]
pub struct SopTerm {
    /// Factor computed by party 0 from its residue.
    pub left: ScalarFn,
    /// Factor computed by party 1 from its residue.
    pub right: ScalarFn,
    /// Subtract this product from the group sum.
    pub negate: bool,
}

/// A group of term products sharing one public weight function of the
/// coefficient step `t`.
#[derive(Clone)]
pub struct SopGroup {
    /// The products folded into this group's sum.
    pub terms: Vec<SopTerm>,
    /// Weight applied to the group sum, evaluated at `t = -c·2^(li-f)`.
    pub weight: ScalarFn,
}

/// How the trailing guard bits are removed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FinalShift {
    /// Share-local shift with a pre-added unit: the output sits within one
    /// ULP of the true value, unbiased up to `2^-g`, expected absolute error
    /// one third of a ULP. Free of communication.
    StochasticRound,
    /// Exact floor of the guarded value: a small comparison recovers the
    /// share carry, costing one (g+1)-bit DReLU plus a bit conversion.
    FaithfulFloor,
}

/// How term factors are fed to the cross multiplication.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MulKind {
    /// Factors are non-negative; encodings multiply directly.
    NonNegative,
    /// Factors may be negative: each is offset by `+2^fc` before the
    /// multiplication and the affine correction is applied locally after.
    Offset,
}

/// Full description of one sum-of-products evaluation.
#[derive(Clone)]
pub struct SopSpec {
    /// Component ring and input fraction: residues are taken modulo
    /// `2^input.l`, components see `residue / 2^input.f`.
    pub input: FixMeta,
    /// Encoding of the per-party component factors.
    pub comp: FixMeta,
    /// Encoding of the public group weights.
    pub weight: FixMeta,
    /// Output ring and fraction.
    pub out: FixMeta,
    /// Guard bits kept below the output fraction until the final shift.
    pub guard_bits: u8,
    /// Guard-bit removal strategy.
    pub final_shift: FinalShift,
    /// Factor signedness contract.
    pub mul_kind: MulKind,
    /// Coefficient bound when the input is shared exactly in the component
    /// ring (`|int(x)| < mw_bound`); ignored for wider inputs, where the
    /// bound is fixed at half the component ring.
    pub mw_bound: u128,
    /// Evaluate component factors on the residue below its top bit and fold
    /// that bit into the coefficient index (halved weight step).
    pub fold_residue: bool,
    /// The groups of the decomposition.
    pub groups: Vec<SopGroup>,
}

/// Derived widths of one evaluation.
struct SopPlan {
    /// Weighting width: `2·comp.l + weight.l`.
    w1: u8,
    /// First shift: `2·comp.f + weight.f - out.f - guard_bits`.
    s1: u8,
    /// Lookup-entry width.
    n_lut: u8,
    /// Width after the final shift.
    n_out: u8,
}

impl SopSpec {
    fn plan(&self) -> Result<SopPlan> {
        if self.groups.is_empty() || self.groups.iter().any(|g| g.terms.is_empty()) {
            return Err(Error::InvalidParam("empty group structure".into()));
        }
        let g = self.guard_bits;
        if !(1..=16).contains(&g) {
            return Err(Error::InvalidParam(format!("guard bits {g} outside 1..=16")));
        }
        if self.input.l > 50 {
            return Err(Error::InvalidParam(
                "component ring too wide for exact f64 residues".into(),
            ));
        }
        let w1 = 2 * self.comp.l as u16 + self.weight.l as u16;
        if w1 > 128 {
            return Err(Error::InvalidParam(format!("weighting width {w1} > 128")));
        }
        let w1 = w1 as u8;
        let shift_total = 2 * self.comp.f as u16 + self.weight.f as u16;
        let drop = self.out.f as u16 + g as u16;
        if shift_total < drop {
            return Err(Error::InvalidParam(format!(
                "fraction deficit: products carry {shift_total} fraction bits, output needs {drop}"
            )));
        }
        let s1 = (shift_total - drop) as u8;
        let n_lut = (w1 - s1).min(self.out.l + g);
        if n_lut <= g {
            return Err(Error::InvalidParam(format!(
                "lookup width {n_lut} leaves no bits above the {g} guard bits"
            )));
        }
        if self.mul_kind == MulKind::Offset && self.comp.l < self.comp.f + 2 {
            return Err(Error::InvalidParam(
                "offset multiplication needs two integer bits of component headroom".into(),
            ));
        }
        Ok(SopPlan { w1, s1, n_lut, n_out: n_lut - g })
    }
}

/// Evaluates the sum-of-products decomposition on a batch of sharings.
///
/// Inputs shared exactly in the component ring use the caller's `mw_bound`
/// to derive the coefficient. Inputs in a wider ring must satisfy
/// `-2^(li-1) <= int(x) < 2^(li-1)`; their coefficient comes from the
/// quarter-bound evaluation in the `(li+1)`-bit ring plus each party's local
/// bit `li`, one bit multiplication in total.
pub fn eval_sop(ctx: &mut PartyCtx, xs: &[ArithShare], spec: &SopSpec) -> Result<Vec<ArithShare>> {
    if xs.is_empty() {
        return Ok(vec![]);
    }
    let plan = spec.plan()?;
    let li = spec.input.l;
    let lr = xs[0].width();
    if xs.iter().any(|x| x.width() != lr) {
        return Err(Error::InvalidParam("mixed input widths".into()));
    }
    if lr < li {
        return Err(Error::InvalidParam(format!(
            "input ring {lr} narrower than component ring {li}"
        )));
    }
    let p0 = ctx.party() == Party::P0;
    let n = xs.len();

    // Coefficient shares: int(x) = z0 + z1 - c·2^li.
    let mut idx: Vec<ArithShare> = if lr == li {
        let params = MwParams::new(li, 2, spec.mw_bound)?;
        mw::pi_mw(ctx, &params, xs)?
    } else {
        // For a wider sharing, c = 2·mw' - b0 - b1 where mw' is the
        // coefficient of the (li+1)-bit reduction (quarter bound, one bit
        // multiplication) and b_i is bit li of each party's own share.
        let ys: Vec<ArithShare> = xs.iter().map(|x| ArithShare(x.0.resize(li + 1))).collect();
        let params = MwParams::new(li + 1, 2, 1u128 << (li - 1))?;
        let mw_y = mw::pi_mw(ctx, &params, &ys)?;
        xs.iter()
            .zip(mw_y)
            .map(|(x, m)| {
                let b = (x.0.value() >> li) & 1;
                ArithShare(m.0.mul_const(2).add_const(4 - b))
            })
            .collect()
    };
    if spec.fold_residue {
        // Folded coefficient: k = 2c - h0 - h1 against the halved step,
        // where h_i is the top residue bit each party strips locally.
        idx = idx
            .into_iter()
            .zip(xs)
            .map(|(c, x)| {
                let h = (x.0.resize(li).value() >> (li - 1)) & 1;
                ArithShare(c.0.mul_const(2).add_const(4 - h))
            })
            .collect();
    }

    // Encode one factor per (instance, group, term), instance-major, then
    // multiply all of them in a single batched cross-term call.
    let scale = (-(spec.input.f as f64)).exp2();
    let comp_mask = width_mask(if spec.fold_residue { li - 1 } else { li });
    let offset = 1u128 << spec.comp.f;
    let terms_per_inst: usize = spec.groups.iter().map(|g| g.terms.len()).sum();
    let mut my_vals = Vec::with_capacity(n * terms_per_inst);
    for x in xs {
        let u = (x.0.resize(li).value() & comp_mask) as f64 * scale;
        for grp in &spec.groups {
            for term in &grp.terms {
                let func = if p0 { &term.left } else { &term.right };
                let enc = encode_fix_round(func(u), spec.comp);
                let v = match spec.mul_kind {
                    MulKind::NonNegative => enc.value(),
                    MulKind::Offset => (enc.value() + offset) & width_mask(spec.comp.l),
                };
                my_vals.push(v);
            }
        }
    }
    let prods = gates::cross_term(ctx, Party::P0, spec.comp.l, spec.comp.l, &my_vals)?;

    // Offset correction and signed group sums at the product width.
    let w_prod = 2 * spec.comp.l;
    let mut sums = Vec::with_capacity(n * spec.groups.len());
    let mut prod_it = prods.into_iter();
    let mut val_it = my_vals.iter();
    for _ in 0..n {
        for grp in &spec.groups {
            let mut acc = RingElem::new(w_prod, 0);
            for term in &grp.terms {
                let mut p = prod_it.next().expect("product count").0;
                let own = *val_it.next().expect("factor count");
                if spec.mul_kind == MulKind::Offset {
                    // a·b = â·b̂ - 2^fc·â - 2^fc·b̂ + 2^(2fc); each party
                    // removes its own offset cross, party 0 restores the
                    // constant.
                    p = p - RingElem::new(w_prod, own << spec.comp.f);
                    if p0 {
                        p = p.add_const(1u128 << (2 * spec.comp.f));
                    }
                }
                acc = if term.negate { acc - p } else { acc + p };
            }
            sums.push(ArithShare(acc));
        }
    }
    let sums = mw::sext_constrained(ctx, &sums, plan.w1)?;

    // Public weight encodings for the coefficient index in {0, 1, 2},
    // sign-extended to the weighting width. Candidate three stays zero so a
    // stray index under out-of-contract inputs selects zero instead of
    // garbage.
    let step_bits = (if spec.fold_residue { li - 1 } else { li }) - spec.input.f;
    let t_step = (1u128 << step_bits) as f64;
    let weights: Vec<[u128; 3]> = spec
        .groups
        .iter()
        .map(|grp| {
            let mut row = [0u128; 3];
            for (j, slot) in row.iter_mut().enumerate() {
                let enc = encode_fix_round((grp.weight)(-(j as f64) * t_step), spec.weight);
                *slot = RingElem::from_signed(plan.w1, enc.to_signed()).value();
            }
            row
        })
        .collect();

    let g_count = spec.groups.len();
    let mut entries = Vec::with_capacity(n * 4);
    for i in 0..n {
        for j in 0..3 {
            let mut t = RingElem::new(plan.w1, 0);
            for (grp, row) in weights.iter().enumerate() {
                t = t + sums[i * g_count + grp].0.mul_const(row[j]);
            }
            entries.push(t.shr_logical(plan.s1).resize(plan.n_lut).value());
        }
        entries.push(0);
    }
    let looked = gates::lut(ctx, LutKind::Shared, 4, plan.n_lut, &entries, &idx)?;

    // Drop the guard bits.
    let g = spec.guard_bits;
    let shifted: Vec<RingElem> = looked
        .iter()
        .map(|s| {
            let mut v = s.0;
            if p0 && spec.final_shift == FinalShift::StochasticRound {
                v = v.add_const(1u128 << g);
            }
            v.shr_logical(g).resize(plan.n_out)
        })
        .collect();
    let out: Vec<ArithShare> = match spec.final_shift {
        FinalShift::StochasticRound => shifted.into_iter().map(ArithShare).collect(),
        FinalShift::FaithfulFloor => {
            let low_mask = width_mask(g);
            let lows: Vec<ArithShare> = looked
                .iter()
                .map(|s| {
                    let low = s.0.value() & low_mask;
                    ArithShare(RingElem::new(g + 1, if p0 { low + (1u128 << g) } else { low }))
                })
                .collect();
            let carry = gates::drelu(ctx, &lows)?;
            let eps = gates::b2a(ctx, &carry, plan.n_out)?;
            shifted.into_iter().zip(eps).map(|(v, e)| ArithShare(v + e.0)).collect()
        }
    };

    if plan.n_out < spec.out.l {
        mw::sext_constrained(ctx, &out, spec.out.l)
    } else {
        Ok(out)
    }
}
