//! Row-wise Softmax: secure maximum, gated negative exponentials, a
//! Newton–Raphson reciprocal of the row sum, and the normalizing products.

use crate::funcs::div::pi_trunc;
use crate::funcs::exp::pi_rexp;
use crate::gates::{self, LutKind};
use crate::mw;
use crate::ring::{width_mask, RingElem};
use crate::runtime::{Party, PartyCtx};
use crate::sharing::ArithShare;
use crate::{Error, Result};
use rand::Rng;

/// Shape and encoding of one Softmax evaluation.
#[derive(Clone, Copy, Debug)]
pub struct SoftmaxParams {
    /// Number of rows.
    pub rows: usize,
    /// Entries per row.
    pub cols: usize,
    /// Ring width of the logits and outputs.
    pub width: u8,
    /// Fraction bits of the logits and outputs.
    pub frac: u8,
    /// Fraction bits carried by the reciprocal of the row sum.
    pub recip_frac: u8,
    /// Rows evaluated per communication batch.
    pub chunk_rows: usize,
}

impl SoftmaxParams {
    /// Validates a shape against the width/fraction budget. Logits must obey
    /// `|int(z)| < 2^(width-2)` so that row differences stay representable.
    pub fn new(rows: usize, cols: usize, width: u8, frac: u8) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidParam("empty softmax shape".into()));
        }
        let recip_frac = 23u8;
        let e_max = ceil_log2(cols as u128 + 1);
        if frac < 6 || frac > 20 {
            return Err(Error::InvalidParam(format!("fraction {frac} outside 6..=20")));
        }
        if e_max + 1 > frac {
            return Err(Error::InvalidParam(format!(
                "{cols} columns need more fraction bits than {frac}"
            )));
        }
        if width < 2 * frac + 3 || width < frac + e_max + 2 {
            return Err(Error::InvalidParam(format!(
                "ring width {width} too narrow for fraction {frac}"
            )));
        }
        if width < frac + recip_frac + 2 || width > 63 {
            return Err(Error::InvalidParam(format!(
                "ring width {width} outside reciprocal range"
            )));
        }
        Ok(Self { rows, cols, width, frac, recip_frac, chunk_rows: 32 })
    }

    fn e_max(&self) -> u8 {
        ceil_log2(self.cols as u128 + 1)
    }
}

fn ceil_log2(v: u128) -> u8 {
    debug_assert!(v >= 1);
    if v <= 1 {
        0
    } else {
        (128 - (v - 1).leading_zeros()) as u8
    }
}

/// Row maxima of a row-major batch: a comparison tournament of
/// `ceil(log2 cols)` DReLU+MUX waves batched across all rows.
///
/// Pairwise differences must stay inside the signed range.
pub fn secure_max_rows(
    ctx: &mut PartyCtx,
    vals: &[ArithShare],
    cols: usize,
) -> Result<Vec<ArithShare>> {
    if cols == 0 || vals.len() % cols != 0 {
        return Err(Error::InvalidParam(format!(
            "batch of {} values does not tile rows of {cols}",
            vals.len()
        )));
    }
    let rows = vals.len() / cols;
    let mut cur: Vec<Vec<ArithShare>> = (0..rows)
        .map(|r| vals[r * cols..(r + 1) * cols].to_vec())
        .collect();
    while cur.iter().any(|row| row.len() > 1) {
        // Pair up candidates; with sel = 1{a >= b}, max = b + sel·(a - b).
        let mut diffs = Vec::new();
        let mut seconds = Vec::new();
        for row in &cur {
            for pair in row.chunks_exact(2) {
                diffs.push(pair[0] - pair[1]);
                seconds.push(pair[1]);
            }
        }
        let sel = gates::drelu(ctx, &diffs)?;
        let delta = gates::mux(ctx, &diffs, &sel)?;
        let mut k = 0;
        for row in &mut cur {
            let odd = (row.len() % 2 == 1).then(|| *row.last().unwrap());
            let mut next = Vec::with_capacity(row.len() / 2 + 1);
            for _ in 0..row.len() / 2 {
                next.push(seconds[k] + delta[k]);
                k += 1;
            }
            next.extend(odd);
            *row = next;
        }
    }
    Ok(cur.into_iter().map(|row| row[0]).collect())
}

/// Shares of `1/s` at `out_frac` fraction bits for sums `s` carrying `f`
/// fraction bits with `1 <= s < 2^(e_max+1)`.
///
/// The sum is scaled by a looked-up power of two into `[1/2, 1]`, seeded with
/// the affine minimax estimate, and refined by two Newton–Raphson steps at a
/// wide fixed width before scaling back.
pub fn reciprocal(
    ctx: &mut PartyCtx,
    sums: &[ArithShare],
    f: u8,
    e_max: u8,
    out_frac: u8,
) -> Result<Vec<ArithShare>> {
    if sums.is_empty() {
        return Ok(vec![]);
    }
    let l = sums[0].width();
    if !(1..=15).contains(&e_max) || e_max + 1 > f {
        return Err(Error::InvalidParam(format!("exponent cap {e_max} unusable at fraction {f}")));
    }
    if l < 2 * f + 3 || l < f + e_max + 2 || l >= 64 {
        return Err(Error::InvalidParam(format!("ring width {l} outside reciprocal range")));
    }
    if out_frac == 0 || out_frac > 21 + f || out_frac + 2 > l {
        return Err(Error::InvalidParam(format!("output fraction {out_frac} out of range")));
    }
    let p0 = ctx.party() == Party::P0;
    let n = sums.len();

    // Exponent e = Σ_k 1{s >= 2^(f+k)} on the reduced ring.
    let lw = f + e_max + 2;
    let mut temps = Vec::with_capacity(n * e_max as usize);
    for s in sums {
        let small = s.0.resize(lw);
        for k in 1..=e_max {
            let v = if p0 {
                small.add_const((1u128 << lw) - (1u128 << (f + k)))
            } else {
                small
            };
            temps.push(ArithShare(v));
        }
    }
    let bits = gates::drelu(ctx, &temps)?;
    let parts = gates::b2a(ctx, &bits, 4)?;
    let e_idx: Vec<ArithShare> = (0..n)
        .map(|i| {
            let mut acc = RingElem::new(4, 0);
            for k in 0..e_max as usize {
                acc = acc + parts[i * e_max as usize + k].0;
            }
            ArithShare(acc)
        })
        .collect();

    // Scale t = 2^(f-e-1) from a public sixteen-entry table.
    let entries: Vec<u128> = if p0 {
        vec![]
    } else {
        let mut es = Vec::with_capacity(n * 16);
        for _ in 0..n {
            for u in 0..16u8 {
                es.push(if u <= e_max { 1u128 << (f - u - 1) } else { 0 });
            }
        }
        es
    };
    let t = gates::lut(ctx, LutKind::Owned(Party::P1), 16, l, &entries, &e_idx)?;

    // Mantissa m = s·t in [1/2, 1] at fraction f.
    let v = gates::mul_shared(ctx, sums, &t)?;
    let m = pi_trunc(ctx, &v, f, true, Some(1u128 << (2 * f + 1)))?;

    // Newton–Raphson at width 64, fraction 22: y' = y·(2 - m·y).
    let m64 = mw::sext_constrained(ctx, &m, 64)?;
    let t64 = mw::sext_constrained(ctx, &t, 64)?;
    let c1 = ((48.0 / 17.0) * (22f64).exp2()).round() as u128;
    let c2 = ((32.0 / 17.0) * ((22 - f as i32) as f64).exp2()).round() as u128;
    let mut y: Vec<ArithShare> = m64
        .iter()
        .map(|m| {
            let mut v = RingElem::new(64, 0) - m.0.mul_const(c2);
            if p0 {
                v = v.add_const(c1);
            }
            ArithShare(v)
        })
        .collect();
    for _ in 0..2 {
        let prod = gates::mul_shared(ctx, &m64, &y)?;
        let my = pi_trunc(ctx, &prod, f, true, Some(1u128 << 62))?;
        let w: Vec<ArithShare> = my
            .iter()
            .map(|s| {
                let mut v = RingElem::new(64, 0) - s.0;
                if p0 {
                    v = v.add_const(1u128 << 23);
                }
                ArithShare(v)
            })
            .collect();
        let prod2 = gates::mul_shared(ctx, &y, &w)?;
        y = pi_trunc(ctx, &prod2, 22, true, Some(1u128 << 62))?;
    }

    // 1/s = y·t, renormalized to out_frac and returned in the source ring.
    let r = gates::mul_shared(ctx, &y, &t64)?;
    let r = pi_trunc(ctx, &r, 22 + f - out_frac, true, Some(1u128 << 62))?;
    Ok(r.into_iter().map(|s| ArithShare(s.0.resize(l))).collect())
}

/// Row-wise Softmax of a row-major logit batch, returned in the same
/// encoding.
pub fn pi_softmax(
    ctx: &mut PartyCtx,
    logits: &[ArithShare],
    params: &SoftmaxParams,
) -> Result<Vec<ArithShare>> {
    let SoftmaxParams { rows, cols, width, frac, recip_frac, chunk_rows } = *params;
    if logits.len() != rows * cols {
        return Err(Error::InvalidParam(format!(
            "expected {} logits, got {}",
            rows * cols,
            logits.len()
        )));
    }
    if logits.iter().any(|z| z.width() != width) {
        return Err(Error::InvalidParam("logit width mismatch".into()));
    }
    let e_max = params.e_max();
    let chunk = chunk_rows.max(1);
    let mut out = Vec::with_capacity(logits.len());
    for start in (0..rows).step_by(chunk) {
        let end = (start + chunk).min(rows);
        let slice = &logits[start * cols..end * cols];
        let mx = secure_max_rows(ctx, slice, cols)?;

        // Non-negative offsets from the row maximum.
        let ws: Vec<ArithShare> = slice
            .iter()
            .enumerate()
            .map(|(i, z)| mx[i / cols] - *z)
            .collect();
        let es = pi_rexp(ctx, &ws, frac)?;

        let sums: Vec<ArithShare> = (0..end - start)
            .map(|r| {
                let mut acc = es[r * cols];
                for c in 1..cols {
                    acc = acc + es[r * cols + c];
                }
                acc
            })
            .collect();
        let d = reciprocal(ctx, &sums, frac, e_max, recip_frac)?;

        let dd: Vec<ArithShare> = (0..(end - start) * cols).map(|i| d[i / cols]).collect();
        let prods = gates::mul_shared(ctx, &es, &dd)?;

        // Unbiased stochastic rounding for the normalization: party 0 dithers
        // each product with a fresh uniform offset below the cut. Nearest
        // rounding would floor every entry whose mass sits under half an
        // output step, and across a long row that tail loss accumulates into
        // a visible deficit in the decoded row sum.
        let prods: Vec<ArithShare> = prods
            .into_iter()
            .map(|s| {
                if ctx.party() == Party::P0 {
                    let r = ctx.rng().gen::<u128>() & width_mask(recip_frac);
                    ArithShare(s.0.add_const(r))
                } else {
                    s
                }
            })
            .collect();
        let bound = (1u128 << (frac + recip_frac)) + (1u128 << (frac + recip_frac - 2));
        out.extend(pi_trunc(ctx, &prods, recip_frac, false, Some(bound))?);
    }
    Ok(out)
}
