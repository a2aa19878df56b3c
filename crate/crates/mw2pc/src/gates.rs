//! Batched primitive gates: AND, bit multiplication, millionaires-style
//! comparison, DReLU, boolean→arithmetic conversion, MUX, lookup tables,
//! cross terms, and share multiplication.
//!
//! Every gate takes slices and executes all instances inside one fixed number
//! of message waves — batching never changes the round count. Gates record
//! their own closed-form modeled cost (the figures the published tables are
//! built from) and run any internal building blocks with recording
//! suppressed, so totals never double count. The closed forms are exposed as
//! `modeled_*_bits` functions next to each gate.
//!
//! Role conventions: gates with asymmetric inputs (comparison, bit
//! multiplication, cross terms, owned lookup tables) take the owning
//! [`Party`] as a parameter and each side passes its private slice; shares of
//! the result come back to both. Public constant offsets are applied by party
//! 0 by convention.

use crate::ot;
use crate::ring::{width_mask, RingElem};
use crate::runtime::wire::{BitReader, BitWriter};
use crate::runtime::{Party, PartyCtx};
use crate::sharing::{ArithShare, BoolShare};
use crate::{Error, Result, LAMBDA};

/// Modeled bits of one AND (bit-triple based): `λ + 20`.
pub fn modeled_and_bits() -> u64 {
    LAMBDA + 20
}

/// Modeled bits of one bit-multiplication into an `lp`-bit ring: `λ + lp`.
pub fn modeled_bit_mul_bits(lp: u8) -> u64 {
    LAMBDA + lp as u64
}

/// Modeled bits of one `w`-bit comparison: `λ·w + 14·w`.
pub fn modeled_comp_bits(w: u8) -> u64 {
    (LAMBDA + 14) * w as u64
}

/// Modeled bits of one small-domain comparison via a single
/// `(2^w choose 1)`-OT plus B2A: `3λ + 2^w + lp`.
pub fn modeled_comp_small_ot_bits(w: u8, lp: u8) -> u64 {
    3 * LAMBDA + (1u64 << w) + lp as u64
}

/// Modeled bits of one small-domain comparison via a bit-multiplication
/// chain: `(2^w - 1)(λ + lp)`.
pub fn modeled_comp_small_and_bits(w: u8, lp: u8) -> u64 {
    ((1u64 << w) - 1) * (LAMBDA + lp as u64)
}

/// Modeled bits of one DReLU on an `l`-bit sharing: a comparison on `l-1`
/// bits, `(λ + 14)(l - 1)`.
pub fn modeled_drelu_bits(l: u8) -> u64 {
    (LAMBDA + 14) * (l as u64 - 1)
}

/// Modeled bits of one boolean→arithmetic conversion into `l` bits: `λ + l`.
pub fn modeled_b2a_bits(l: u8) -> u64 {
    LAMBDA + l as u64
}

/// Modeled bits of one MUX of an `l`-bit sharing by a shared bit: `2(λ + l)`.
pub fn modeled_mux_bits(l: u8) -> u64 {
    2 * (LAMBDA + l as u64)
}

/// Modeled bits of one lookup into an `m`-entry table of `n`-bit entries:
/// `2λ + m·n` (counted once even for tables shared between the parties).
pub fn modeled_lut_bits(m: u32, n: u8) -> u64 {
    2 * LAMBDA + m as u64 * n as u64
}

/// Modeled bits of one cross term `x·y` with `x` of `m` bits and `y` of `n`
/// bits into `m+n` bits: `u = min(m,n)` correlated OTs of shrinking widths,
/// `Σ_{i<u} (λ + m + n - i)`.
pub fn modeled_cross_term_bits(m: u8, n: u8) -> u64 {
    let (m, n) = (m as u64, n as u64);
    let u = m.min(n);
    u * LAMBDA + u * (m + n) - u * (u - 1) / 2
}

/// Modeled bits of one cross term evaluated only modulo `2^w` (both operands
/// `w`-bit, result `w`-bit): `Σ_{i<w} (λ + w - i)`.
pub fn modeled_cross_term_mod_bits(w: u8) -> u64 {
    let w = w as u64;
    w * LAMBDA + w * (w + 1) / 2
}

fn uniform_width(xs: &[ArithShare]) -> u8 {
    let w = xs[0].width();
    debug_assert!(xs.iter().all(|x| x.width() == w), "mixed widths in batch");
    w
}

/// AND of XOR-shared bit vectors via dealer bit-triples.
///
/// Standalone form: the opening is sequential (party 0's halves, then party
/// 1's) — 2 rounds.
pub fn and_gate(ctx: &mut PartyCtx, xs: &[BoolShare], ys: &[BoolShare]) -> Result<Vec<BoolShare>> {
    ctx.record("and", xs.len() as u64, modeled_and_bits());
    ctx.quiet_modeled(|ctx| beaver_and(ctx, xs, ys, false))
}

/// AND with a simultaneous (single-wave) opening — used inside comparison
/// trees where both parties' halves can cross on the wire.
pub(crate) fn and_gate_sim(
    ctx: &mut PartyCtx,
    xs: &[BoolShare],
    ys: &[BoolShare],
) -> Result<Vec<BoolShare>> {
    beaver_and(ctx, xs, ys, true)
}

fn beaver_and(
    ctx: &mut PartyCtx,
    xs: &[BoolShare],
    ys: &[BoolShare],
    simultaneous: bool,
) -> Result<Vec<BoolShare>> {
    debug_assert_eq!(xs.len(), ys.len());
    if xs.is_empty() {
        return Ok(vec![]);
    }
    let n = xs.len();
    let p0 = ctx.party() == Party::P0;
    let (mut a, mut b, mut c) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
    for _ in 0..n {
        let (a0, a1) = (ctx.dealer_bit(), ctx.dealer_bit());
        let (b0, b1) = (ctx.dealer_bit(), ctx.dealer_bit());
        let c0 = ctx.dealer_bit();
        let c1 = ((a0 ^ a1) & (b0 ^ b1)) ^ c0;
        if p0 {
            a.push(a0);
            b.push(b0);
            c.push(c0);
        } else {
            a.push(a1);
            b.push(b1);
            c.push(c1);
        }
    }
    let mut opening = BitWriter::with_capacity(2 * n, 1);
    for j in 0..n {
        opening.push_bit(xs[j].0 ^ a[j]);
        opening.push_bit(ys[j].0 ^ b[j]);
    }
    let mine = opening.finish();
    let peer = if simultaneous {
        ctx.exchange(mine)?
    } else if p0 {
        ctx.send_msg(mine)?;
        ctx.recv_msg()?
    } else {
        let p = ctx.recv_msg()?;
        ctx.send_msg(mine)?;
        p
    };
    let mut rdr = BitReader::new(&peer);
    let mut out = Vec::with_capacity(n);
    for j in 0..n {
        let d = (xs[j].0 ^ a[j]) ^ rdr.read_bit();
        let e = (ys[j].0 ^ b[j]) ^ rdr.read_bit();
        let mut z = c[j] ^ (d & b[j]) ^ (e & a[j]);
        if p0 {
            z ^= d & e;
        }
        out.push(BoolShare(z));
    }
    Ok(out)
}

/// Multiplies a private bit of `bit_owner` with a private bit of the peer,
/// producing additive shares in `Z_{2^width}`. Each party passes its own bit
/// vector (the non-owner's bits act as the OT choices).
pub fn bit_mul(
    ctx: &mut PartyCtx,
    bit_owner: Party,
    my_bits: &[bool],
    width: u8,
) -> Result<Vec<ArithShare>> {
    if my_bits.is_empty() {
        return Ok(vec![]);
    }
    ctx.record("bit_mul", my_bits.len() as u64, modeled_bit_mul_bits(width));
    ctx.quiet_modeled(|ctx| {
        let widths = vec![width; my_bits.len()];
        let vals = if ctx.party() == bit_owner {
            let xs: Vec<u128> = my_bits.iter().map(|&b| b as u128).collect();
            ot::cot_send(ctx, &widths, &xs)?
        } else {
            ot::cot_recv(ctx, &widths, my_bits)?
        };
        Ok(vals.into_iter().map(|v| ArithShare(RingElem::new(width, v))).collect())
    })
}

/// Converts XOR-shared bits to additive shares in `Z_{2^width}` using one
/// correlated OT per bit (`y = b0 + b1 - 2·b0·b1`).
pub fn b2a(ctx: &mut PartyCtx, bits: &[BoolShare], width: u8) -> Result<Vec<ArithShare>> {
    if bits.is_empty() {
        return Ok(vec![]);
    }
    ctx.record("b2a", bits.len() as u64, modeled_b2a_bits(width));
    ctx.quiet_modeled(|ctx| {
        let widths = vec![width; bits.len()];
        let prod = if ctx.party() == Party::P0 {
            let xs: Vec<u128> = bits.iter().map(|b| b.0 as u128).collect();
            ot::cot_send(ctx, &widths, &xs)?
        } else {
            let choices: Vec<bool> = bits.iter().map(|b| b.0).collect();
            ot::cot_recv(ctx, &widths, &choices)?
        };
        let out = bits
            .iter()
            .zip(prod)
            .map(|(b, p)| {
                let own = RingElem::new(width, b.0 as u128);
                let twice = RingElem::new(width, p).mul_const(2);
                ArithShare(own - twice)
            })
            .collect();
        Ok(out)
    })
}

/// MUX: shares of `sel · x` from an additively shared `x` and an XOR-shared
/// `sel`, via two opposite-direction correlated OTs fused into 2 rounds.
pub fn mux(ctx: &mut PartyCtx, xs: &[ArithShare], sel: &[BoolShare]) -> Result<Vec<ArithShare>> {
    debug_assert_eq!(xs.len(), sel.len());
    if xs.is_empty() {
        return Ok(vec![]);
    }
    let w = uniform_width(xs);
    ctx.record("mux", xs.len() as u64, modeled_mux_bits(w));
    ctx.quiet_modeled(|ctx| {
        // With sel = s0 ^ s1 = s0 + s1 - 2·s0·s1:
        //   sel·x = s0·x0 + s1·x1 + s0·[(1-2s1)·x1] + s1·[(1-2s0)·x0]
        // so each party sends the correlation (1-2s_me)·x_me and chooses with
        // its own bit s_me; the first two terms are local.
        let widths = vec![w; xs.len()];
        let corr: Vec<u128> = xs
            .iter()
            .zip(sel)
            .map(|(x, s)| if s.0 { (-x.0).value() } else { x.0.value() })
            .collect();
        let choices: Vec<bool> = sel.iter().map(|s| s.0).collect();
        let (send_shares, recv_vals) = ot::cot_bidir(ctx, &widths, &corr, &widths, &choices)?;
        let out = (0..xs.len())
            .map(|j| {
                let local = if sel[j].0 { xs[j].0 } else { RingElem::zero(w) };
                ArithShare(local + RingElem::new(w, send_shares[j]) + RingElem::new(w, recv_vals[j]))
            })
            .collect();
        Ok(out)
    })
}

/// Block size (bits) of the comparison tree leaves.
const COMP_BLOCK_BITS: u8 = 4;

/// Millionaires comparison: XOR shares of `1{x < y}` where `x_owner` holds
/// `x` and the peer holds `y`; each side passes its own `width`-bit values.
///
/// CrypTFlow2 structure: 4-bit blocks compared by one `(16 choose 1)`-OT of
/// (lt, eq) bit pairs, combined up a binary tree with batched single-wave
/// ANDs — `2 + ceil(log2 ceil(width/4))` rounds. Modeled as `λ·w + 14·w`.
pub fn comp(ctx: &mut PartyCtx, x_owner: Party, width: u8, my_vals: &[u128]) -> Result<Vec<BoolShare>> {
    if my_vals.is_empty() {
        return Ok(vec![]);
    }
    ctx.record("comp", my_vals.len() as u64, modeled_comp_bits(width));
    ctx.quiet_modeled(|ctx| comp_quiet(ctx, x_owner, width, my_vals))
}

pub(crate) fn comp_quiet(
    ctx: &mut PartyCtx,
    x_owner: Party,
    width: u8,
    my_vals: &[u128],
) -> Result<Vec<BoolShare>> {
    use rand::Rng;
    debug_assert!(my_vals.iter().all(|&v| v <= width_mask(width)));
    let n = my_vals.len();
    let q = (width as usize + COMP_BLOCK_BITS as usize - 1) / COMP_BLOCK_BITS as usize;
    let k = 1u32 << COMP_BLOCK_BITS;

    // Leaf layer: per (instance, block), XOR shares of lt/eq of the blocks.
    // Nodes are kept block-major: node[j] holds vectors over instances.
    let block = |v: u128, j: usize| (v >> (j * COMP_BLOCK_BITS as usize)) as u32 & (k - 1);
    let mut lt: Vec<Vec<BoolShare>> = vec![Vec::with_capacity(n); q];
    let mut eq: Vec<Vec<BoolShare>> = vec![Vec::with_capacity(n); q];
    if ctx.party() == x_owner {
        // Sender: for each candidate peer block v, message (1{x<v}, 1{x=v})
        // masked by per-leaf random bits, which become our shares.
        let mut msgs = Vec::with_capacity(n * q * k as usize);
        for &x in my_vals {
            for j in 0..q {
                let xb = block(x, j);
                let r_lt = ctx.rng().gen::<bool>();
                let r_eq = ctx.rng().gen::<bool>();
                lt[j].push(BoolShare(r_lt));
                eq[j].push(BoolShare(r_eq));
                for v in 0..k {
                    let m = ((xb < v) as u128 ^ r_lt as u128)
                        | ((((xb == v) as u128) ^ r_eq as u128) << 1);
                    msgs.push(m);
                }
            }
        }
        ot::ot_send_k(ctx, k, 2, &msgs)?;
    } else {
        let mut choices = Vec::with_capacity(n * q);
        for &y in my_vals {
            for j in 0..q {
                choices.push(block(y, j));
            }
        }
        let got = ot::ot_recv_k(ctx, k, 2, &choices)?;
        for (i, m) in got.into_iter().enumerate() {
            let j = i % q;
            lt[j].push(BoolShare(m & 1 == 1));
            eq[j].push(BoolShare(m >> 1 & 1 == 1));
        }
    }

    // Tree combine, least-significant block first:
    //   lt' = lt_hi ^ (eq_hi & lt_lo),  eq' = eq_hi & eq_lo
    // All ANDs of a level share one simultaneous opening.
    let mut level_lt = lt;
    let mut level_eq = eq;
    while level_lt.len() > 1 {
        let pairs = level_lt.len() / 2;
        let mut and_x = Vec::with_capacity(2 * pairs * n);
        let mut and_y = Vec::with_capacity(2 * pairs * n);
        for p in 0..pairs {
            let (lo, hi) = (2 * p, 2 * p + 1);
            and_x.extend_from_slice(&level_eq[hi]);
            and_y.extend_from_slice(&level_lt[lo]);
            and_x.extend_from_slice(&level_eq[hi]);
            and_y.extend_from_slice(&level_eq[lo]);
        }
        let products = and_gate_sim(ctx, &and_x, &and_y)?;
        let mut next_lt = Vec::with_capacity(pairs + 1);
        let mut next_eq = Vec::with_capacity(pairs + 1);
        for p in 0..pairs {
            let base = 2 * p * n;
            let lt_hi = &level_lt[2 * p + 1];
            let new_lt: Vec<BoolShare> =
                (0..n).map(|i| lt_hi[i] ^ products[base + i]).collect();
            let new_eq: Vec<BoolShare> = products[base + n..base + 2 * n].to_vec();
            next_lt.push(new_lt);
            next_eq.push(new_eq);
        }
        if level_lt.len() % 2 == 1 {
            next_lt.push(level_lt.pop().expect("odd leftover"));
            next_eq.push(level_eq.pop().expect("odd leftover"));
        }
        level_lt = next_lt;
        level_eq = next_eq;
    }
    Ok(level_lt.pop().expect("root"))
}

/// Small-domain comparison (`width <= 6`): arithmetic shares of `1{x < y}` in
/// `Z_{2^out_width}`, via one `(2^width choose 1)`-OT of masked bits plus one
/// B2A. Modeled `3λ + 2^width + out_width`; 4 rounds.
pub fn comp_small_ot(
    ctx: &mut PartyCtx,
    x_owner: Party,
    width: u8,
    my_vals: &[u128],
    out_width: u8,
) -> Result<Vec<ArithShare>> {
    use rand::Rng;
    if my_vals.is_empty() {
        return Ok(vec![]);
    }
    if width > 6 {
        return Err(Error::InvalidParam(format!("comp_small domain width {width} > 6")));
    }
    ctx.record("comp_small_ot", my_vals.len() as u64, modeled_comp_small_ot_bits(width, out_width));
    ctx.quiet_modeled(|ctx| {
        let k = 1u32 << width;
        let bools = if ctx.party() == x_owner {
            let mut msgs = Vec::with_capacity(my_vals.len() * k as usize);
            let mut mine = Vec::with_capacity(my_vals.len());
            for &x in my_vals {
                let r = ctx.rng().gen::<bool>();
                mine.push(BoolShare(r));
                for v in 0..k {
                    msgs.push(((x as u32) < v) as u128 ^ r as u128);
                }
            }
            ot::ot_send_k(ctx, k, 1, &msgs)?;
            mine
        } else {
            let choices: Vec<u32> = my_vals.iter().map(|&v| v as u32).collect();
            ot::ot_recv_k(ctx, k, 1, &choices)?.into_iter().map(|m| BoolShare(m == 1)).collect()
        };
        b2a(ctx, &bools, out_width)
    })
}

/// Small-domain comparison via a bit-multiplication chain:
/// `1{x < y} = Σ_{i=0}^{2^width-2} 1{x = i}·1{y > i}` — arithmetic shares out,
/// modeled `(2^width - 1)(λ + out_width)`, 2 rounds.
pub fn comp_small_and(
    ctx: &mut PartyCtx,
    x_owner: Party,
    width: u8,
    my_vals: &[u128],
    out_width: u8,
) -> Result<Vec<ArithShare>> {
    if my_vals.is_empty() {
        return Ok(vec![]);
    }
    if width > 6 {
        return Err(Error::InvalidParam(format!("comp_small domain width {width} > 6")));
    }
    ctx.record(
        "comp_small_and",
        my_vals.len() as u64,
        modeled_comp_small_and_bits(width, out_width),
    );
    ctx.quiet_modeled(|ctx| {
        let terms = (1usize << width) - 1;
        let i_own_x = ctx.party() == x_owner;
        let mut bits = Vec::with_capacity(my_vals.len() * terms);
        for &v in my_vals {
            for i in 0..terms as u128 {
                bits.push(if i_own_x { v == i } else { v > i });
            }
        }
        let partials = bit_mul(ctx, x_owner, &bits, out_width)?;
        let out = partials
            .chunks(terms)
            .map(|ch| ch.iter().fold(ArithShare(RingElem::zero(out_width)), |acc, &p| acc + p))
            .collect();
        Ok(out)
    })
}

/// DReLU: XOR shares of `1{int(x) >= 0}` for an `l`-bit sharing (`l >= 2`).
///
/// `MSB(x) = msb(x0) ^ msb(x1) ^ carry`, with the carry of the low parts
/// computed by one `(l-1)`-bit comparison kept in-domain as
/// `1{a + b >= 2^(l-1)} = 1{2^(l-1)-1-a < b}`.
pub fn drelu(ctx: &mut PartyCtx, xs: &[ArithShare]) -> Result<Vec<BoolShare>> {
    if xs.is_empty() {
        return Ok(vec![]);
    }
    let l = uniform_width(xs);
    if l < 2 {
        return Err(Error::InvalidParam("drelu needs width >= 2".into()));
    }
    ctx.record("drelu", xs.len() as u64, modeled_drelu_bits(l));
    ctx.quiet_modeled(|ctx| {
        let low_mask = width_mask(l - 1);
        let my_vals: Vec<u128> = xs
            .iter()
            .map(|x| {
                let low = x.0.value() & low_mask;
                if ctx.party() == Party::P0 {
                    low_mask - low // 2^(l-1) - 1 - a
                } else {
                    low
                }
            })
            .collect();
        let carry = comp_quiet(ctx, Party::P0, l - 1, &my_vals)?;
        let out = xs
            .iter()
            .zip(carry)
            .map(|(x, c)| {
                let s = BoolShare(x.0.msb()) ^ c;
                if ctx.party() == Party::P0 {
                    s.flip() // 1{int >= 0} = NOT msb
                } else {
                    s
                }
            })
            .collect();
        Ok(out)
    })
}

/// Table location for [`lut`]: either one party owns the whole table, or both
/// hold additive shares of every entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LutKind {
    /// `owner` holds the table in the clear; the peer passes an empty entry
    /// slice. One OT.
    Owned(Party),
    /// Entries are additively shared; each party passes its share table. Two
    /// opposite-direction OTs fused into the same 2 rounds (modeled once).
    Shared,
}

/// Lookup `T[i]` for an additively shared index `i` (index width `log2 m`)
/// into per-instance tables of `m` entries of `width` bits.
///
/// `my_entries` is flat (`m` per instance, instance-major); with
/// [`LutKind::Owned`] the non-owner passes `&[]`. Returns additive shares of
/// the selected entry. Modeled `2λ + m·width`; 2 rounds.
pub fn lut(
    ctx: &mut PartyCtx,
    kind: LutKind,
    m: u32,
    width: u8,
    my_entries: &[u128],
    idx: &[ArithShare],
) -> Result<Vec<ArithShare>> {
    use rand::Rng;
    if idx.is_empty() {
        return Ok(vec![]);
    }
    if !m.is_power_of_two() || m < 2 {
        return Err(Error::InvalidParam(format!("table size {m} must be a power of two >= 2")));
    }
    let idx_w = uniform_width(idx);
    if (1u32 << idx_w) != m {
        return Err(Error::InvalidParam(format!("index width {idx_w} does not address {m} entries")));
    }
    ctx.record("lut", idx.len() as u64, modeled_lut_bits(m, width));
    ctx.quiet_modeled(|ctx| {
        let n = idx.len();
        let mask = width_mask(width);
        // Rotated-and-masked message table for the side(s) that send:
        // msg[u] = T[(u + I_mine) mod m] - r, so the receiver's choice
        // I_theirs lands on T[I] - r.
        let build = |ctx: &mut PartyCtx, entries: &[u128]| -> (Vec<u128>, Vec<u128>) {
            let mut msgs = Vec::with_capacity(n * m as usize);
            let mut masks = Vec::with_capacity(n);
            for inst in 0..n {
                let r: u128 = ctx.rng().gen::<u128>() & mask;
                masks.push(r);
                let rot = idx[inst].0.value() as u32;
                for u in 0..m {
                    let e = entries[inst * m as usize + ((u + rot) % m) as usize];
                    msgs.push(e.wrapping_sub(r) & mask);
                }
            }
            (msgs, masks)
        };
        let choices: Vec<u32> = idx.iter().map(|i| i.0.value() as u32).collect();
        match kind {
            LutKind::Owned(owner) => {
                if ctx.party() == owner {
                    debug_assert_eq!(my_entries.len(), n * m as usize);
                    let (msgs, masks) = build(ctx, my_entries);
                    ot::ot_send_k(ctx, m, width, &msgs)?;
                    Ok(masks.into_iter().map(|r| ArithShare(RingElem::new(width, r))).collect())
                } else {
                    let got = ot::ot_recv_k(ctx, m, width, &choices)?;
                    Ok(got.into_iter().map(|v| ArithShare(RingElem::new(width, v))).collect())
                }
            }
            LutKind::Shared => {
                debug_assert_eq!(my_entries.len(), n * m as usize);
                let (msgs, masks) = build(ctx, my_entries);
                let got = ot::ot_bidir_k(ctx, m, width, &msgs, &choices)?;
                Ok(got
                    .into_iter()
                    .zip(masks)
                    .map(|(v, r)| ArithShare(RingElem::new(width, v.wrapping_add(r) & mask)))
                    .collect())
            }
        }
    })
}

/// Two-field variant of an owned lookup: each entry is a pair
/// `(a: width_a bits, b: width_b bits)`, each field masked independently and
/// bit-packed into one message. Returns share vectors for both fields.
/// Modeled `2λ + m·(width_a + width_b)`; 2 rounds.
pub fn lut_owned_pair(
    ctx: &mut PartyCtx,
    owner: Party,
    m: u32,
    width_a: u8,
    width_b: u8,
    my_entries: &[(u128, u128)],
    idx: &[ArithShare],
) -> Result<(Vec<ArithShare>, Vec<ArithShare>)> {
    use rand::Rng;
    if idx.is_empty() {
        return Ok((vec![], vec![]));
    }
    let packed = width_a + width_b;
    if packed > 128 {
        return Err(Error::InvalidParam(format!("packed pair width {packed} > 128")));
    }
    let idx_w = uniform_width(idx);
    if (1u32 << idx_w) != m {
        return Err(Error::InvalidParam(format!("index width {idx_w} does not address {m} entries")));
    }
    ctx.record("lut", idx.len() as u64, modeled_lut_bits(m, packed));
    ctx.quiet_modeled(|ctx| {
        let n = idx.len();
        let (mask_a, mask_b) = (width_mask(width_a), width_mask(width_b));
        if ctx.party() == owner {
            debug_assert_eq!(my_entries.len(), n * m as usize);
            let mut msgs = Vec::with_capacity(n * m as usize);
            let mut sa = Vec::with_capacity(n);
            let mut sb = Vec::with_capacity(n);
            for inst in 0..n {
                let ra: u128 = ctx.rng().gen::<u128>() & mask_a;
                let rb: u128 = ctx.rng().gen::<u128>() & mask_b;
                sa.push(ArithShare(RingElem::new(width_a, ra)));
                sb.push(ArithShare(RingElem::new(width_b, rb)));
                let rot = idx[inst].0.value() as u32;
                for u in 0..m {
                    let (a, b) = my_entries[inst * m as usize + ((u + rot) % m) as usize];
                    let fa = a.wrapping_sub(ra) & mask_a;
                    let fb = b.wrapping_sub(rb) & mask_b;
                    msgs.push(fa | (fb << width_a));
                }
            }
            ot::ot_send_k(ctx, m, packed, &msgs)?;
            Ok((sa, sb))
        } else {
            let choices: Vec<u32> = idx.iter().map(|i| i.0.value() as u32).collect();
            let got = ot::ot_recv_k(ctx, m, packed, &choices)?;
            let mut sa = Vec::with_capacity(n);
            let mut sb = Vec::with_capacity(n);
            for v in got {
                sa.push(ArithShare(RingElem::new(width_a, v & mask_a)));
                sb.push(ArithShare(RingElem::new(width_b, v >> width_a)));
            }
            Ok((sa, sb))
        }
    })
}

/// Cross term: additive shares of `x·y` in `Z_{2^(m+n)}`, where `x_owner`
/// holds the `m`-bit `x` and the peer the `n`-bit `y` (both unsigned).
///
/// `u = min(m, n)` correlated OTs: the shorter operand is bit-decomposed as
/// choices, the longer one provides the correlations `x·2^j` whose `j` known
/// zero bits are not transferred. Batched into 2 rounds.
pub fn cross_term(
    ctx: &mut PartyCtx,
    x_owner: Party,
    m: u8,
    n: u8,
    my_vals: &[u128],
) -> Result<Vec<ArithShare>> {
    if my_vals.is_empty() {
        return Ok(vec![]);
    }
    let out_w = m
        .checked_add(n)
        .filter(|&w| w <= 128)
        .ok_or_else(|| Error::InvalidParam(format!("cross term width {m}+{n} > 128")))?;
    ctx.record("cross_term", my_vals.len() as u64, modeled_cross_term_bits(m, n));
    ctx.quiet_modeled(|ctx| {
        // Decompose the shorter side; its holder is the COT receiver.
        let decompose_y = n <= m;
        let u = m.min(n);
        let i_hold_x = ctx.party() == x_owner;
        let i_receive = i_hold_x != decompose_y; // I hold the decomposed operand
        let mut widths = Vec::with_capacity(my_vals.len() * u as usize);
        for _ in 0..my_vals.len() {
            for j in 0..u {
                widths.push(out_w - j);
            }
        }
        let pieces = if i_receive {
            let mut choices = Vec::with_capacity(widths.len());
            for &v in my_vals {
                for j in 0..u {
                    choices.push(v >> j & 1 == 1);
                }
            }
            ot::cot_recv(ctx, &widths, &choices)?
        } else {
            let mut corrs = Vec::with_capacity(widths.len());
            for &v in my_vals {
                // x·2^j with the j zero bits dropped is x at every position.
                corrs.extend(std::iter::repeat(v).take(u as usize));
            }
            ot::cot_send(ctx, &widths, &corrs)?
        };
        let out = pieces
            .chunks(u as usize)
            .map(|ch| {
                let mut acc = RingElem::zero(out_w);
                for (j, &p) in ch.iter().enumerate() {
                    acc = acc + RingElem::new(out_w, p << j);
                }
                ArithShare(acc)
            })
            .collect();
        Ok(out)
    })
}

/// Share multiplication: additive shares of `x·y mod 2^w` from two additively
/// shared `w`-bit values, via the exact expansion
/// `x·y = x0·y0 + x1·y1 + x0·y1 + x1·y0 (mod 2^w)` — the two cross terms run
/// in opposite directions over the same 2 rounds.
pub fn mul_shared(ctx: &mut PartyCtx, xs: &[ArithShare], ys: &[ArithShare]) -> Result<Vec<ArithShare>> {
    debug_assert_eq!(xs.len(), ys.len());
    if xs.is_empty() {
        return Ok(vec![]);
    }
    let w = uniform_width(xs);
    debug_assert_eq!(w, uniform_width(ys));
    // Two mod-2^w cross terms, each w COTs of shrinking width.
    ctx.record("cross_term", 2 * xs.len() as u64, modeled_cross_term_mod_bits(w));
    ctx.quiet_modeled(|ctx| {
        let n = xs.len();
        let mut widths = Vec::with_capacity(n * w as usize);
        let mut corrs = Vec::with_capacity(n * w as usize);
        let mut choices = Vec::with_capacity(n * w as usize);
        for i in 0..n {
            let x = xs[i].0.value();
            let y = ys[i].0.value();
            for j in 0..w {
                widths.push(w - j);
                corrs.push(x); // correlation x·2^j with the j zero bits dropped
                choices.push(y >> j & 1 == 1);
            }
        }
        let (send_shares, recv_vals) = ot::cot_bidir(ctx, &widths, &corrs, &widths, &choices)?;
        let out = (0..n)
            .map(|i| {
                let mut acc = xs[i].0 * ys[i].0; // local x_me·y_me
                for j in 0..w as usize {
                    let p = send_shares[i * w as usize + j];
                    let r = recv_vals[i * w as usize + j];
                    acc = acc + RingElem::new(w, p << j) + RingElem::new(w, r << j);
                }
                ArithShare(acc)
            })
            .collect();
        Ok(out)
    })
}
