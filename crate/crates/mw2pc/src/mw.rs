//! MW-coefficient protocols: the core wrap/MSB recovery machinery.
//!
//! For an additive sharing `x = x0 + x1 mod 2^l` of a signed value with
//! `|int(x)| < B`, the MW coefficient `MW = MSB(x) + Wrap(x0, x1)` satisfies
//! `int(x) = x0 + x1 - MW·2^l` over the integers, so arithmetic shares of MW
//! unlock division, truncation, ring conversion and sign extension.
//!
//! [`pi_mw`] computes MW for a bound `B <= L/2` known in advance; the bound
//! picks one of three strategies (see [`MwParams`]). [`pi_mw_conv`] computes
//! the MW coefficient *of a wider ring* from the value's residue in a small
//! ring, for values small enough to survive the conversion. [`sext`] and
//! [`sext_constrained`] are the zero/sign-extension applications.

use crate::gates;
use crate::ring::{width_mask, RingElem};
use crate::runtime::{Party, PartyCtx};
use crate::sharing::{ArithShare, BoolShare};
use crate::{Error, Result, LAMBDA};

fn bit_len(v: u128) -> u8 {
    debug_assert!(v > 0);
    (128 - v.leading_zeros()) as u8
}

fn ceil_log2(v: u128) -> u8 {
    debug_assert!(v >= 1);
    if v == 1 {
        0
    } else {
        bit_len(v - 1)
    }
}

/// Strategy chosen by [`MwParams::new`] from the bound `B`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum MwBranch {
    /// `B < 3L/8`: the divisor `A = L - 2B` exceeds `L/4`, so the reduced
    /// comparison domain has at most 4 values and `1{a < b}` expands into
    /// `k_eff <= 3` bit multiplications (one wave, 2 rounds).
    BitMuls { a: u128, k_eff: u32 },
    /// `3L/8 <= B < L/2` with a reduced domain of at most `2^4` values: one
    /// OT-based small comparison.
    CompSmall { a: u128, w: u8 },
    /// `3L/8 <= B < L/2`, reduced domain width `w > 4`: tree comparison plus
    /// B2A.
    Comp { a: u128, w: u8 },
    /// `B = L/2` exactly: no divisor reduction is possible; full-width
    /// comparison plus B2A.
    CompHalf,
}

/// Validated parameters of [`pi_mw`]: ring width `l`, output share width,
/// and the public bound `B` on `|int(x)|`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MwParams {
    l: u8,
    out_bits: u8,
    b: u128,
    branch: MwBranch,
}

impl MwParams {
    /// Derives the evaluation strategy for bound `b` (`1 <= b <= 2^(l-1)`).
    pub fn new(l: u8, out_bits: u8, b: u128) -> Result<Self> {
        if !(2..=127).contains(&l) {
            return Err(Error::InvalidParam(format!("mw ring width {l} outside 2..=127")));
        }
        if out_bits == 0 || out_bits > 128 {
            return Err(Error::InvalidParam(format!("mw output width {out_bits} outside 1..=128")));
        }
        let m = 1u128 << l;
        if b == 0 || b > m / 2 {
            return Err(Error::InvalidParam(format!("mw bound {b} outside 1..=2^{}", l - 1)));
        }
        let below_three_eighths =
            if l >= 3 { b < 3 * (1u128 << (l - 3)) } else { 8 * b < 3 * m };
        let branch = if b == m / 2 {
            MwBranch::CompHalf
        } else if below_three_eighths {
            let a = m - 2 * b;
            let k = m / a;
            let k_eff = k.min((m - 1) / a) as u32;
            MwBranch::BitMuls { a, k_eff }
        } else {
            let a = m - 2 * b;
            let k = m / a;
            let lstar = ceil_log2(k);
            // The comparison must faithfully represent a in [0, K] and b in
            // [0, floor((L-1)/A)]. When A | L the peer side tops out at K-1
            // and a = K (possible only at x0* = 0) may be clamped to the
            // domain maximum: the clamped comparison still answers 0 as
            // required. Only when K = 2^lstar and A does not divide L do both
            // sides genuinely need the extra bit.
            let w = if k.is_power_of_two() && m % a != 0 { lstar + 1 } else { lstar };
            if w <= 4 {
                MwBranch::CompSmall { a, w }
            } else {
                MwBranch::Comp { a, w }
            }
        };
        Ok(Self { l, out_bits, b, branch })
    }

    /// Ring width of the input sharing.
    pub fn ring_width(&self) -> u8 {
        self.l
    }

    /// Width of the output MW shares.
    pub fn out_bits(&self) -> u8 {
        self.out_bits
    }

    /// The bound `B`.
    pub fn bound(&self) -> u128 {
        self.b
    }

    /// Human-readable strategy name (diagnostics and benchmark tables).
    pub fn branch_name(&self) -> &'static str {
        match self.branch {
            MwBranch::BitMuls { .. } => "bit-mul",
            MwBranch::CompSmall { .. } => "comp-small",
            MwBranch::Comp { .. } => "comp",
            MwBranch::CompHalf => "comp-full",
        }
    }

    /// Modeled communication in bits for one instance.
    pub fn modeled_bits(&self) -> u64 {
        let out = self.out_bits;
        match self.branch {
            MwBranch::BitMuls { k_eff, .. } => k_eff as u64 * gates::modeled_bit_mul_bits(out),
            MwBranch::CompSmall { w, .. } => gates::modeled_comp_small_ot_bits(w, out),
            MwBranch::Comp { w, .. } => gates::modeled_comp_bits(w) + gates::modeled_b2a_bits(out),
            MwBranch::CompHalf => {
                gates::modeled_comp_bits(self.l) + gates::modeled_b2a_bits(out)
            }
        }
    }
}

/// Arithmetic shares (width `params.out_bits`) of `MW(x0, x1, 2^l)` for each
/// sharing in `xs`, assuming `|int(x)| < B`.
///
/// Inputs violating the bound produce an undefined (but still only
/// share-dependent) result; no information leaks either way.
pub fn pi_mw(ctx: &mut PartyCtx, params: &MwParams, xs: &[ArithShare]) -> Result<Vec<ArithShare>> {
    if xs.is_empty() {
        return Ok(vec![]);
    }
    if xs.iter().any(|x| x.width() != params.l) {
        return Err(Error::InvalidParam(format!(
            "pi_mw expects width {} inputs",
            params.l
        )));
    }
    let m = 1u128 << params.l;
    let p0 = ctx.party() == Party::P0;
    let out = params.out_bits;
    let n = xs.len();

    // P0 rotates its share by B and records the rotation bit delta; P1's
    // share stays as is. With x0* = x0 - B mod L the MW value becomes
    // delta + 1{x0* + x1 >= L + A}.
    let mut delta = vec![false; n];
    let star: Vec<u128> = xs
        .iter()
        .enumerate()
        .map(|(i, x)| {
            let v = x.0.value();
            if p0 {
                delta[i] = v >= params.b;
                (v + m - params.b) % m
            } else {
                v
            }
        })
        .collect();

    let m_star = match params.branch {
        MwBranch::BitMuls { a, k_eff } => {
            // 1{av < bv} = sum_i 1{av = i} · 1{bv > i} over the k_eff live
            // terms, av = floor((L - x0*)/A) at P0, bv = floor(x1/A) at P1.
            let terms = k_eff as usize;
            let mut bits = Vec::with_capacity(n * terms);
            for &s in &star {
                let v = if p0 { (m - s) / a } else { s / a };
                for i in 0..k_eff as u128 {
                    bits.push(if p0 { v == i } else { v > i });
                }
            }
            let partial = gates::bit_mul(ctx, Party::P0, &bits, out)?;
            partial
                .chunks(terms)
                .map(|ch| ch.iter().fold(ArithShare(RingElem::zero(out)), |acc, &p| acc + p))
                .collect::<Vec<_>>()
        }
        MwBranch::CompSmall { a, w } | MwBranch::Comp { a, w } => {
            let cap = width_mask(w);
            let vals: Vec<u128> = star
                .iter()
                .map(|&s| {
                    if p0 {
                        ((m - s) / a).min(cap)
                    } else {
                        debug_assert!(s / a <= cap);
                        s / a
                    }
                })
                .collect();
            if matches!(params.branch, MwBranch::CompSmall { .. }) {
                gates::comp_small_ot(ctx, Party::P0, w, &vals, out)?
            } else {
                let bits = gates::comp(ctx, Party::P0, w, &vals)?;
                gates::b2a(ctx, &bits, out)?
            }
        }
        MwBranch::CompHalf => {
            // 1{x0* + x1 >= L} stated in-domain as 1{(L-1-x0*) < x1}.
            let vals: Vec<u128> = star.iter().map(|&s| if p0 { m - 1 - s } else { s }).collect();
            let bits = gates::comp(ctx, Party::P0, params.l, &vals)?;
            gates::b2a(ctx, &bits, out)?
        }
    };

    Ok(m_star
        .into_iter()
        .zip(delta)
        .map(|(s, d)| {
            if p0 {
                ArithShare(s.0.add_const(d as u128))
            } else {
                s
            }
        })
        .collect())
}

/// Modeled communication of one [`pi_mw_conv`] instance: two bit
/// multiplications, `2(λ + out_bits)`.
pub fn modeled_pi_mw_conv_bits(out_bits: u8) -> u64 {
    2 * (LAMBDA + out_bits as u64)
}

/// MW coefficient of the *reduced* sharing `z_i = x_i mod 2^small_l`.
///
/// For `x` shared in `Z_{2^lr}` with `|int(x)| < 2^(small_l - 1)`, both
/// parties reduce their shares to `small_l + 1` bits and this protocol
/// returns shares of `MW(z0, z1, 2^small_l)` — the coefficient needed to
/// continue computing on the cheap `small_l`-bit residues — at the cost of
/// two bit multiplications, independent of `lr`.
pub fn pi_mw_conv(
    ctx: &mut PartyCtx,
    xs: &[ArithShare],
    small_l: u8,
    out_bits: u8,
) -> Result<Vec<ArithShare>> {
    if xs.is_empty() {
        return Ok(vec![]);
    }
    let lr = xs[0].width();
    if small_l < 1 || lr < small_l + 1 {
        return Err(Error::InvalidParam(format!(
            "ring conversion needs source width {lr} > component width {small_l}"
        )));
    }
    let ly = small_l + 1;
    let half = 1u128 << small_l; // 2^small_l = L_y / 2
    let p0 = ctx.party() == Party::P0;

    let y: Vec<ArithShare> = xs.iter().map(|x| ArithShare(x.0.resize(ly))).collect();
    // MW of y in the (small_l+1)-bit ring; |int(y)| < 2^(small_l-1) = L_y/4,
    // which lands in the single-bit-multiplication branch.
    let params = MwParams::new(ly, out_bits, half / 2)?;
    let mw_y = pi_mw(ctx, &params, &y)?;

    // Half-ring rotation: both shares move by 2^small_l, leaving the shared
    // value fixed but relocating the wrap boundary.
    let y_hat: Vec<u128> = y.iter().map(|s| s.0.add_const(half).value()).collect();
    let my_bits: Vec<bool> = y_hat
        .iter()
        .map(|&v| {
            if p0 {
                let star = (v + (1u128 << ly) - half / 2) % (1u128 << ly);
                star >= half
            } else {
                v >= half
            }
        })
        .collect();
    let m_hat = gates::bit_mul(ctx, Party::P0, &my_bits, out_bits)?;

    // MW_z = MW_y - (1 - delta_hat - M_hat).
    let out = mw_y
        .into_iter()
        .zip(m_hat)
        .enumerate()
        .map(|(i, (mwy, mh))| {
            let mut s = mwy + mh;
            if p0 {
                let delta_hat = y_hat[i] >= half / 2;
                s = ArithShare(s.0.add_const(delta_hat as u128).add_const(
                    width_mask(out_bits), // -1 mod 2^out
                ));
            }
            s
        })
        .collect();
    Ok(out)
}

/// Modeled communication of one general [`sext`]: `λ(l+1) + 13l + target`.
pub fn modeled_sext_bits(l: u8, target: u8) -> u64 {
    LAMBDA * (l as u64 + 1) + 13 * l as u64 + target as u64
}

/// Modeled communication of one [`sext_constrained`]: `λ + target - l`.
pub fn modeled_sext_constrained_bits(l: u8, target: u8) -> u64 {
    LAMBDA + (target - l) as u64
}

fn sext_combine(xs: &[ArithShare], mw: Vec<ArithShare>, l: u8, target: u8) -> Vec<ArithShare> {
    xs.iter()
        .zip(mw)
        .map(|(x, m)| {
            let wide = x.0.resize(target);
            let correction = RingElem::new(target, m.0.value() << l);
            ArithShare(wide - correction)
        })
        .collect()
}

fn sext_validate(xs: &[ArithShare], target: u8) -> Result<u8> {
    let l = xs[0].width();
    if target <= l || target > 128 {
        return Err(Error::InvalidParam(format!(
            "sign extension target {target} must exceed source width {l}"
        )));
    }
    Ok(l)
}

/// Sign extension: re-shares an `l`-bit signed sharing in `Z_{2^target}`,
/// valid for every input (`|int(x)| <= L/2`). One full-width comparison.
pub fn sext(ctx: &mut PartyCtx, xs: &[ArithShare], target: u8) -> Result<Vec<ArithShare>> {
    if xs.is_empty() {
        return Ok(vec![]);
    }
    let l = sext_validate(xs, target)?;
    ctx.record("sext", xs.len() as u64, modeled_sext_bits(l, target));
    let mw = ctx.quiet_modeled(|ctx| {
        let params = MwParams::new(l, target - l, 1u128 << (l - 1))?;
        pi_mw(ctx, &params, xs)
    })?;
    Ok(sext_combine(xs, mw, l, target))
}

/// Sign extension for values already known to satisfy `|int(x)| < 2^(l-2)`:
/// a single bit multiplication.
pub fn sext_constrained(ctx: &mut PartyCtx, xs: &[ArithShare], target: u8) -> Result<Vec<ArithShare>> {
    if xs.is_empty() {
        return Ok(vec![]);
    }
    let l = sext_validate(xs, target)?;
    ctx.record("sext_const", xs.len() as u64, modeled_sext_constrained_bits(l, target));
    let mw = ctx.quiet_modeled(|ctx| {
        let params = MwParams::new(l, target - l, 1u128 << (l - 2))?;
        pi_mw(ctx, &params, xs)
    })?;
    Ok(sext_combine(xs, mw, l, target))
}

/// Divisor-reduced comparison: XOR shares of `1{x < y}` computed on
/// `floor(·/a)` of both operands (`x` at `x_owner`).
///
/// Valid whenever `y - x >= a` or `y <= x` (the divisor-reduction identity's
/// precondition); the reduced comparison runs at the width of
/// `floor((2^l - 1)/a)`.
pub fn comp_constrained(
    ctx: &mut PartyCtx,
    x_owner: Party,
    l: u8,
    a: u128,
    my_vals: &[u128],
) -> Result<Vec<BoolShare>> {
    if my_vals.is_empty() {
        return Ok(vec![]);
    }
    let m = 1u128 << l;
    if a == 0 || a >= m {
        return Err(Error::InvalidParam(format!("divisor {a} outside 1..2^{l}")));
    }
    let w = bit_len(((m - 1) / a).max(1));
    let reduced: Vec<u128> = my_vals.iter().map(|&v| v / a).collect();
    gates::comp(ctx, x_owner, w, &reduced)
}

/// Divisor-reduced wrap bit: XOR shares of `Wrap(x0, x1, 2^l)` computed as
/// the comparison `floor((L - x0)/a) < floor(x1/a)`.
///
/// Valid whenever `x0 + x1 < L` or `x0 + x1 >= L + a`.
pub fn wrap_constrained(ctx: &mut PartyCtx, l: u8, a: u128, my_vals: &[u128]) -> Result<Vec<BoolShare>> {
    if my_vals.is_empty() {
        return Ok(vec![]);
    }
    let m = 1u128 << l;
    if a == 0 || a >= m {
        return Err(Error::InvalidParam(format!("divisor {a} outside 1..2^{l}")));
    }
    let w = bit_len(m / a);
    let p0 = ctx.party() == Party::P0;
    let reduced: Vec<u128> = my_vals.iter().map(|&v| if p0 { (m - v) / a } else { v / a }).collect();
    gates::comp(ctx, Party::P0, w, &reduced)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle;
    use crate::runtime::run_pair;
    use crate::sharing::{reconstruct, share};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    fn run_mw_batch(l: u8, out_bits: u8, b: u128, pairs: &[(u128, u128)]) -> Vec<u128> {
        let params = MwParams::new(l, out_bits, b).unwrap();
        let s0: Vec<ArithShare> =
            pairs.iter().map(|&(x0, _)| ArithShare(RingElem::new(l, x0))).collect();
        let s1: Vec<ArithShare> =
            pairs.iter().map(|&(_, x1)| ArithShare(RingElem::new(l, x1))).collect();
        let (r0, r1) = run_pair(31, move |ctx| {
            let mine = if ctx.party() == Party::P0 { &s0 } else { &s1 };
            pi_mw(ctx, &params, mine)
        })
        .unwrap();
        (0..pairs.len()).map(|j| reconstruct(r0.output[j], r1.output[j]).value()).collect()
    }

    #[test]
    fn pi_mw_frozen_example() {
        let got = run_mw_batch(8, 2, 96, &[(50, 250)]);
        assert_eq!(got[0], 1);
        assert_eq!(oracle::mw_ref(50, 250, 8), 1);
    }

    #[test]
    fn pi_mw_exhaustive_l6_branch_grid() {
        // Bounds picked to hit every strategy: bit-mul (1, 8, 16, 23),
        // comp-small at the 3L/8 edge (24) and a non-power-of-two K (27),
        // tree comparison (31), full-width comparison (32).
        for b in [1u128, 8, 16, 23, 24, 27, 31, 32] {
            let mut pairs = Vec::new();
            let mut want = Vec::new();
            for x0 in 0..64u128 {
                for x1 in 0..64u128 {
                    if oracle::in_bound_ref(x0 + x1, 6, b) {
                        pairs.push((x0, x1));
                        want.push(oracle::mw_ref(x0, x1, 6) as u128);
                    }
                }
            }
            let got = run_mw_batch(6, 2, b, &pairs);
            for j in 0..pairs.len() {
                assert_eq!(
                    got[j], want[j],
                    "b={b} x0={} x1={}",
                    pairs[j].0, pairs[j].1
                );
            }
        }
    }

    #[test]
    fn pi_mw_extra_width_corner_exhaustive() {
        // l=8, B=113: A=30, K=8 is a power of two while 30 does not divide
        // 256, so the comparison needs l*+1 = 4 bits.
        let params = MwParams::new(8, 2, 113).unwrap();
        assert_eq!(params.branch_name(), "comp-small");
        assert!(matches!(params.branch, MwBranch::CompSmall { w: 4, .. }));
        let mut pairs = Vec::new();
        let mut want = Vec::new();
        for x0 in 0..256u128 {
            for x1 in 0..256u128 {
                if oracle::in_bound_ref(x0 + x1, 8, 113) {
                    pairs.push((x0, x1));
                    want.push(oracle::mw_ref(x0, x1, 8) as u128);
                }
            }
        }
        let got = run_mw_batch(8, 2, 113, &pairs);
        for j in 0..pairs.len() {
            assert_eq!(got[j], want[j], "x0={} x1={}", pairs[j].0, pairs[j].1);
        }
    }

    #[test]
    fn pi_mw_tree_comp_corner_random_l10() {
        // l=10, B=481: A=62, K=16 (power of two), 1024 % 62 != 0 -> width 5
        // tree comparison with the extra bit.
        let params = MwParams::new(10, 2, 481).unwrap();
        assert!(matches!(params.branch, MwBranch::Comp { w: 5, .. }));
        let mut rng = ChaCha20Rng::seed_from_u64(33);
        let mut pairs = Vec::new();
        let mut want = Vec::new();
        while pairs.len() < 2000 {
            let x0 = rng.gen::<u128>() & 1023;
            let x1 = rng.gen::<u128>() & 1023;
            if oracle::in_bound_ref(x0 + x1, 10, 481) {
                pairs.push((x0, x1));
                want.push(oracle::mw_ref(x0, x1, 10) as u128);
            }
        }
        let got = run_mw_batch(10, 2, 481, &pairs);
        for j in 0..pairs.len() {
            assert_eq!(got[j], want[j], "x0={} x1={}", pairs[j].0, pairs[j].1);
        }
    }

    #[test]
    fn pi_mw_modeled_bits_published_points() {
        let l = 37u8;
        let half = 1u128 << 36;
        let points: [(f64, u64); 4] =
            [(0.5, 165), (0.8, 429), (0.9999, 2153), (0.999999, 3005)];
        for (frac, expect) in points {
            let b = (frac * half as f64).round() as u128;
            let params = MwParams::new(l, l, b).unwrap();
            assert_eq!(params.modeled_bits(), expect, "frac {frac}");
        }
        let full = MwParams::new(l, l, half).unwrap();
        assert_eq!(full.modeled_bits(), 5419);
        assert_eq!(full.branch_name(), "comp-full");
    }

    #[test]
    fn pi_mw_round_counts() {
        // Bit-mul branch: one COT wave, 2 rounds.
        let params = MwParams::new(8, 2, 32).unwrap();
        let (r0, _) = run_pair(34, move |ctx| {
            let mine = vec![ArithShare(RingElem::new(8, 7))];
            pi_mw(ctx, &params, &mine)
        })
        .unwrap();
        assert_eq!(r0.ledger.rounds, 2);

        // Full comparison at l=8: 2 + log2(2 blocks) + 2 = 5 rounds.
        let params = MwParams::new(8, 2, 128).unwrap();
        let (r0, _) = run_pair(35, move |ctx| {
            let mine = vec![ArithShare(RingElem::new(8, 7))];
            pi_mw(ctx, &params, &mine)
        })
        .unwrap();
        assert_eq!(r0.ledger.rounds, 5);
    }

    #[test]
    fn pi_mw_conv_frozen_example() {
        // x = (17, 18) in the 8-bit ring, component ring 2^5.
        let (r0, r1) = run_pair(36, move |ctx| {
            let v = if ctx.party() == Party::P0 { 17 } else { 18 };
            let xs = vec![ArithShare(RingElem::new(8, v))];
            pi_mw_conv(ctx, &xs, 4, 2)
        })
        .unwrap();
        let got = reconstruct(r0.output[0], r1.output[0]).value();
        // Output is the coefficient for the reduced shares z_i = x_i mod 2^4.
        assert_eq!(got, oracle::mw_ref(17 % 16, 18 % 16, 4) as u128);
        assert_eq!(got, 0);
        assert_eq!(r0.ledger.modeled_bits, modeled_pi_mw_conv_bits(2));
        assert_eq!(r0.ledger.rounds, 4); // two sequential bit-mul waves
    }

    #[test]
    fn pi_mw_conv_exhaustive_small() {
        // small_l = 3 (|int| < 4), wide rings 5 and 7: all share pairs whose
        // value is in bounds.
        for lr in [5u8, 7] {
            let m = 1u128 << lr;
            let mut pairs = Vec::new();
            let mut want = Vec::new();
            for x0 in 0..m {
                for x1 in 0..m {
                    let int = oracle::int_ref(x0, x1, lr);
                    if int.abs() < 4 {
                        pairs.push((x0, x1));
                        want.push(oracle::mw_ref(x0 % 8, x1 % 8, 3) as u128);
                    }
                }
            }
            let (p, w) = (pairs.clone(), lr);
            let (r0, r1) = run_pair(37, move |ctx| {
                let mine: Vec<ArithShare> = p
                    .iter()
                    .map(|&(x0, x1)| {
                        ArithShare(RingElem::new(w, if ctx.party() == Party::P0 { x0 } else { x1 }))
                    })
                    .collect();
                pi_mw_conv(ctx, &mine, 3, 2)
            })
            .unwrap();
            for j in 0..pairs.len() {
                let got = reconstruct(r0.output[j], r1.output[j]).value();
                assert_eq!(got, want[j], "lr={lr} x0={} x1={}", pairs[j].0, pairs[j].1);
            }
        }
    }

    #[test]
    fn sext_exhaustive_l5() {
        // General sign extension must hold for every 5-bit sharing.
        let mut pairs = Vec::new();
        for x0 in 0..32u128 {
            for x1 in 0..32u128 {
                pairs.push((x0, x1));
            }
        }
        let p = pairs.clone();
        let (r0, r1) = run_pair(38, move |ctx| {
            let mine: Vec<ArithShare> = p
                .iter()
                .map(|&(x0, x1)| {
                    ArithShare(RingElem::new(5, if ctx.party() == Party::P0 { x0 } else { x1 }))
                })
                .collect();
            sext(ctx, &mine, 9)
        })
        .unwrap();
        for j in 0..pairs.len() {
            let got = reconstruct(r0.output[j], r1.output[j]).to_signed();
            let want = oracle::int_ref(pairs[j].0, pairs[j].1, 5);
            assert_eq!(got, want, "x0={} x1={}", pairs[j].0, pairs[j].1);
        }
        assert_eq!(
            r0.ledger.modeled_bits,
            pairs.len() as u64 * modeled_sext_bits(5, 9)
        );
        assert_eq!(r0.ledger.per_primitive["sext"].calls, pairs.len() as u64);
    }

    #[test]
    fn sext_constrained_exhaustive_l5() {
        // Constrained variant only promises |int| < 2^(l-2) = 8.
        let mut pairs = Vec::new();
        for x0 in 0..32u128 {
            for x1 in 0..32u128 {
                if oracle::int_ref(x0, x1, 5).abs() < 8 {
                    pairs.push((x0, x1));
                }
            }
        }
        let p = pairs.clone();
        let (r0, r1) = run_pair(39, move |ctx| {
            let mine: Vec<ArithShare> = p
                .iter()
                .map(|&(x0, x1)| {
                    ArithShare(RingElem::new(5, if ctx.party() == Party::P0 { x0 } else { x1 }))
                })
                .collect();
            sext_constrained(ctx, &mine, 12)
        })
        .unwrap();
        for j in 0..pairs.len() {
            let got = reconstruct(r0.output[j], r1.output[j]).to_signed();
            let want = oracle::int_ref(pairs[j].0, pairs[j].1, 5);
            assert_eq!(got, want, "x0={} x1={}", pairs[j].0, pairs[j].1);
        }
        assert_eq!(
            r0.ledger.modeled_bits,
            pairs.len() as u64 * modeled_sext_constrained_bits(5, 12)
        );
        assert_eq!(r0.ledger.rounds, 2);
    }

    #[test]
    fn constrained_comparisons_match_frozen_examples() {
        // floor-by-16 comparison: 1{50 < 100} via Comp(3, 6).
        let (r0, r1) = run_pair(40, move |ctx| {
            let mine = if ctx.party() == Party::P0 { vec![50u128] } else { vec![100u128] };
            comp_constrained(ctx, Party::P0, 8, 16, &mine)
        })
        .unwrap();
        assert!(r0.output[0].0 ^ r1.output[0].0);

        // Wrap(200, 100) via Comp(floor(56/16), floor(100/16)) = Comp(3, 6).
        let (r0, r1) = run_pair(41, move |ctx| {
            let mine = if ctx.party() == Party::P0 { vec![200u128] } else { vec![100u128] };
            wrap_constrained(ctx, 8, 16, &mine)
        })
        .unwrap();
        assert!(r0.output[0].0 ^ r1.output[0].0);
        assert_eq!(oracle::lemma2_holds(200, 100, 16, 8), Some(true));
    }

    #[test]
    fn constrained_comparisons_exhaustive_l6() {
        // Every divisor and operand pair satisfying the preconditions.
        for a in 1..64u128 {
            let mut xs = Vec::new();
            let mut ys = Vec::new();
            let mut want = Vec::new();
            for x in 0..64u128 {
                for y in 0..64u128 {
                    // comp_constrained computes 1{x < y}; the identity needs
                    // y - x >= a or y <= x.
                    if oracle::lemma1_holds(y, x, a, 6).is_some() {
                        xs.push(x);
                        ys.push(y);
                        want.push(x < y);
                    }
                }
            }
            let (xs2, ys2) = (xs.clone(), ys.clone());
            let (r0, r1) = run_pair(42, move |ctx| {
                let mine = if ctx.party() == Party::P0 { &xs2 } else { &ys2 };
                comp_constrained(ctx, Party::P0, 6, a, mine)
            })
            .unwrap();
            for j in 0..want.len() {
                assert_eq!(
                    r0.output[j].0 ^ r1.output[j].0,
                    want[j],
                    "a={a} x={} y={}",
                    xs[j],
                    ys[j]
                );
            }

            let mut p0v = Vec::new();
            let mut p1v = Vec::new();
            let mut wantw = Vec::new();
            for x0 in 0..64u128 {
                for x1 in 0..64u128 {
                    if oracle::lemma2_holds(x0, x1, a, 6).is_some() {
                        p0v.push(x0);
                        p1v.push(x1);
                        wantw.push(oracle::wrap_ref(x0, x1, 6));
                    }
                }
            }
            let (v0, v1) = (p0v.clone(), p1v.clone());
            let (r0, r1) = run_pair(43, move |ctx| {
                let mine = if ctx.party() == Party::P0 { &v0 } else { &v1 };
                wrap_constrained(ctx, 6, a, mine)
            })
            .unwrap();
            for j in 0..wantw.len() {
                assert_eq!(
                    r0.output[j].0 ^ r1.output[j].0,
                    wantw[j],
                    "a={a} x0={} x1={}",
                    p0v[j],
                    p1v[j]
                );
            }
        }
    }

    #[test]
    fn params_reject_bad_bounds() {
        assert!(MwParams::new(8, 2, 0).is_err());
        assert!(MwParams::new(8, 2, 129).is_err());
        assert!(MwParams::new(1, 2, 1).is_err());
        assert!(MwParams::new(8, 0, 16).is_err());
    }

    #[test]
    fn random_share_splits_agree_with_reference() {
        // Same plaintext under many random share splits must give the same
        // MW through the protocol as the reference.
        let mut rng = ChaCha20Rng::seed_from_u64(44);
        let l = 12u8;
        let b = 1u128 << 10;
        let mut pairs = Vec::new();
        let mut want = Vec::new();
        for _ in 0..500 {
            let v = RingElem::from_signed(l, rng.gen_range(-(b as i128) + 1..b as i128));
            let (s0, s1) = share(&mut rng, v);
            pairs.push((s0.0.value(), s1.0.value()));
            want.push(oracle::mw_ref(s0.0.value(), s1.0.value(), l) as u128);
        }
        let got = run_mw_batch(l, 2, b, &pairs);
        for j in 0..pairs.len() {
            assert_eq!(got[j], want[j], "case {j}");
        }
    }
}
