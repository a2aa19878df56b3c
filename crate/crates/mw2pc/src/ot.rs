//! Dealer-assisted oblivious transfer: 1-of-2, 1-of-k, and correlated OT
//! (COT), batch-first.
//!
//! All transfers are derandomized from the shared dealer stream (Beaver-style
//! precomputation): for each instance the dealer supplies a random index `d`
//! and `k` pads; the receiver reveals only the rotation `u = choice - d mod k`
//! and the sender replies with all `k` messages, each masked by a pad rotated
//! by `u`. Transcripts are therefore masked and choice-independent, and both
//! parties replay deterministically from the session seed.
//!
//! Two flow shapes are provided:
//!
//! - **sequential** (`*_send` / `*_recv`): the receiver's derandomization
//!   message, then the sender's masked messages — 2 rounds, one direction of
//!   transfer;
//! - **bidirectional** (`*_bidir`): both parties act as sender of one batch
//!   and receiver of another; derandomizations are exchanged simultaneously,
//!   then masked messages — still 2 rounds for *both* transfers. Gates like
//!   MUX, shared lookup tables, and share multiplication rely on this to meet
//!   their round counts.
//!
//! Nothing here records modeled costs — the gates that invoke OT record their
//! own closed forms (see [`crate::gates`]). The closed forms for raw OT are
//! exposed as [`modeled_ot2_bits`], [`modeled_otk_bits`] and
//! [`modeled_cot_bits`].
//!
//! Dealer-call discipline: both parties must make the same OT calls in the
//! same order (the SPMD protocol style guarantees this), so their dealer
//! cursors stay aligned.

use crate::runtime::wire::{BitReader, BitWriter};
use crate::runtime::{Party, PartyCtx};
use crate::{Result, LAMBDA};

/// Modeled bits of a 1-of-2 OT on `n`-bit messages: `λ + 2n`.
pub fn modeled_ot2_bits(n: u64) -> u64 {
    LAMBDA + 2 * n
}

/// Modeled bits of a `k`-of-1 OT on `n`-bit messages: `2λ + k·n`.
pub fn modeled_otk_bits(k: u64, n: u64) -> u64 {
    2 * LAMBDA + k * n
}

/// Modeled bits of a correlated OT on an `n`-bit correlation: `λ + n`.
pub fn modeled_cot_bits(n: u64) -> u64 {
    LAMBDA + n
}

#[inline(always)]
fn index_bits(k: u32) -> u8 {
    debug_assert!(k.is_power_of_two() && k >= 2);
    k.trailing_zeros() as u8
}

/// Sender side of a batched uniform-width 1-of-k OT.
///
/// `msgs` is flat, `k` messages per instance. Two rounds: receive the
/// derandomization, answer with masked messages.
pub fn ot_send_k(ctx: &mut PartyCtx, k: u32, width: u8, msgs: &[u128]) -> Result<()> {
    debug_assert_eq!(msgs.len() % k as usize, 0);
    let count = msgs.len() / k as usize;
    let derand = ctx.recv_msg()?;
    let mut us = BitReader::new(&derand);
    let mut payload = BitWriter::with_capacity(msgs.len(), width);
    for inst in 0..count {
        let u = us.read(index_bits(k)) as u32;
        let _d = ctx.dealer_index(k);
        // Pads are drawn in slot order; message slot s is masked by the pad
        // at slot (s - u) mod k, i.e. pad slot t masks message (t + u) mod k.
        let base = inst * k as usize;
        let mut masked = vec![0u128; k as usize];
        for t in 0..k {
            let pad = ctx.dealer_elem(width);
            masked[((t + u) % k) as usize] = msgs[base + ((t + u) % k) as usize] ^ pad;
        }
        for m in masked {
            payload.push(m, width);
        }
    }
    ctx.send_msg(payload.finish())
}

/// Receiver side of a batched uniform-width 1-of-k OT.
pub fn ot_recv_k(ctx: &mut PartyCtx, k: u32, width: u8, choices: &[u32]) -> Result<Vec<u128>> {
    let mut derand = BitWriter::with_capacity(choices.len(), index_bits(k));
    let mut my_pads = Vec::with_capacity(choices.len());
    for &c in choices {
        debug_assert!(c < k);
        let d = ctx.dealer_index(k);
        derand.push(((c + k - d) % k) as u128, index_bits(k));
        let mut pad_d = 0;
        for t in 0..k {
            let pad = ctx.dealer_elem(width);
            if t == d {
                pad_d = pad;
            }
        }
        my_pads.push(pad_d);
    }
    ctx.send_msg(derand.finish())?;
    let payload = ctx.recv_msg()?;
    let mut r = BitReader::new(&payload);
    let mut out = Vec::with_capacity(choices.len());
    for (j, &c) in choices.iter().enumerate() {
        let mut chosen = 0u128;
        for s in 0..k {
            let y = r.read(width);
            if s == c {
                chosen = y;
            }
        }
        out.push(chosen ^ my_pads[j]);
    }
    Ok(out)
}

/// Sender side of a batched 1-of-2 OT with per-instance widths.
pub fn ot_send_2(ctx: &mut PartyCtx, widths: &[u8], msg0: &[u128], msg1: &[u128]) -> Result<()> {
    debug_assert!(widths.len() == msg0.len() && widths.len() == msg1.len());
    let derand = ctx.recv_msg()?;
    let mut us = BitReader::new(&derand);
    let mut payload = BitWriter::with_capacity(2 * widths.len(), 64);
    for j in 0..widths.len() {
        let u = us.read_bit();
        let _d = ctx.dealer_bit();
        let w = widths[j];
        let (p0, p1) = (ctx.dealer_elem(w), ctx.dealer_elem(w));
        // Pad slot t masks message t XOR u.
        let (y0, y1) = if u { (msg0[j] ^ p1, msg1[j] ^ p0) } else { (msg0[j] ^ p0, msg1[j] ^ p1) };
        payload.push(y0, w);
        payload.push(y1, w);
    }
    ctx.send_msg(payload.finish())
}

/// Receiver side of a batched 1-of-2 OT with per-instance widths.
pub fn ot_recv_2(ctx: &mut PartyCtx, widths: &[u8], choices: &[bool]) -> Result<Vec<u128>> {
    debug_assert_eq!(widths.len(), choices.len());
    let mut derand = BitWriter::with_capacity(choices.len(), 1);
    let mut my_pads = Vec::with_capacity(choices.len());
    for (j, &c) in choices.iter().enumerate() {
        let d = ctx.dealer_bit();
        derand.push_bit(c ^ d);
        let w = widths[j];
        let (p0, p1) = (ctx.dealer_elem(w), ctx.dealer_elem(w));
        my_pads.push(if d { p1 } else { p0 });
    }
    ctx.send_msg(derand.finish())?;
    let payload = ctx.recv_msg()?;
    let mut r = BitReader::new(&payload);
    let mut out = Vec::with_capacity(choices.len());
    for (j, &c) in choices.iter().enumerate() {
        let y0 = r.read(widths[j]);
        let y1 = r.read(widths[j]);
        out.push(if c { y1 } else { y0 } ^ my_pads[j]);
    }
    Ok(out)
}

/// Sender side of a batched correlated OT with per-instance widths: transfers
/// `(r, r + x)` and returns the sender's additive shares `-r` so that
/// `sender_share + receiver_value = choice * x (mod 2^width)`.
pub fn cot_send(ctx: &mut PartyCtx, widths: &[u8], xs: &[u128]) -> Result<Vec<u128>> {
    use crate::ring::width_mask;
    use rand::Rng;
    let rs: Vec<u128> =
        widths.iter().map(|&w| ctx.rng().gen::<u128>() & width_mask(w)).collect();
    let m1: Vec<u128> = rs
        .iter()
        .zip(xs)
        .zip(widths)
        .map(|((&r, &x), &w)| r.wrapping_add(x) & width_mask(w))
        .collect();
    ot_send_2(ctx, widths, &rs, &m1)?;
    Ok(rs.iter().zip(widths).map(|(&r, &w)| r.wrapping_neg() & width_mask(w)).collect())
}

/// Receiver side of a batched correlated OT (see [`cot_send`]).
pub fn cot_recv(ctx: &mut PartyCtx, widths: &[u8], choices: &[bool]) -> Result<Vec<u128>> {
    ot_recv_2(ctx, widths, choices)
}

/// Both directions of correlated OT fused into two rounds.
///
/// This party is sender of `my_xs` (against the peer's choices) and receiver
/// with `my_choices` (against the peer's correlations). Returns
/// `(sender_shares, receiver_values)`. Both parties must pass symmetric batch
/// shapes: `my_xs.len()` here equals `my_choices.len()` at the peer.
pub fn cot_bidir(
    ctx: &mut PartyCtx,
    send_widths: &[u8],
    my_xs: &[u128],
    recv_widths: &[u8],
    my_choices: &[bool],
) -> Result<(Vec<u128>, Vec<u128>)> {
    use crate::ring::width_mask;
    use rand::Rng;
    debug_assert_eq!(send_widths.len(), my_xs.len());
    debug_assert_eq!(recv_widths.len(), my_choices.len());

    // Dealer draws, lockstep order: the batch where P0 sends first.
    let draw = |ctx: &mut PartyCtx, widths: &[u8]| -> (Vec<bool>, Vec<u128>, Vec<u128>) {
        let mut d = Vec::with_capacity(widths.len());
        let mut p0 = Vec::with_capacity(widths.len());
        let mut p1 = Vec::with_capacity(widths.len());
        for &w in widths {
            d.push(ctx.dealer_bit());
            p0.push(ctx.dealer_elem(w));
            p1.push(ctx.dealer_elem(w));
        }
        (d, p0, p1)
    };
    let i_send_first = ctx.party() == Party::P0;
    let (send_draw, recv_draw) = if i_send_first {
        let a = draw(ctx, send_widths);
        let b = draw(ctx, recv_widths);
        (a, b)
    } else {
        let a = draw(ctx, recv_widths);
        let b = draw(ctx, send_widths);
        (b, a)
    };

    // Round 1: exchange derandomization bits for the side we receive on.
    let mut derand = BitWriter::with_capacity(my_choices.len(), 1);
    for (j, &c) in my_choices.iter().enumerate() {
        derand.push_bit(c ^ recv_draw.0[j]);
    }
    let peer_derand = ctx.exchange(derand.finish())?;
    let mut peer_us = BitReader::new(&peer_derand);

    // Round 2: exchange masked correlation pairs.
    let mut sender_shares = Vec::with_capacity(my_xs.len());
    let mut payload = BitWriter::with_capacity(2 * my_xs.len(), 8);
    for (j, (&x, &w)) in my_xs.iter().zip(send_widths).enumerate() {
        let u = peer_us.read_bit();
        let r: u128 = ctx.rng().gen::<u128>() & width_mask(w);
        let m1 = r.wrapping_add(x) & width_mask(w);
        let (p0, p1) = (send_draw.1[j], send_draw.2[j]);
        let (y0, y1) = if u { (r ^ p1, m1 ^ p0) } else { (r ^ p0, m1 ^ p1) };
        payload.push(y0, w);
        payload.push(y1, w);
        sender_shares.push(r.wrapping_neg() & width_mask(w));
    }
    let peer_payload = ctx.exchange(payload.finish())?;
    let mut rdr = BitReader::new(&peer_payload);
    let mut receiver_values = Vec::with_capacity(my_choices.len());
    for (j, &c) in my_choices.iter().enumerate() {
        let w = recv_widths[j];
        let y0 = rdr.read(w);
        let y1 = rdr.read(w);
        let d = recv_draw.0[j];
        let pad = if d { recv_draw.2[j] } else { recv_draw.1[j] };
        receiver_values.push(if c { y1 } else { y0 } ^ pad);
    }
    Ok((sender_shares, receiver_values))
}

/// Both directions of uniform-width 1-of-k OT fused into two rounds
/// (each party sends one table batch and receives from the other's).
pub fn ot_bidir_k(
    ctx: &mut PartyCtx,
    k: u32,
    width: u8,
    my_msgs: &[u128],
    my_choices: &[u32],
) -> Result<Vec<u128>> {
    debug_assert_eq!(my_msgs.len() % k as usize, 0);
    let send_count = my_msgs.len() / k as usize;

    let draw = |ctx: &mut PartyCtx, count: usize| -> (Vec<u32>, Vec<u128>) {
        let mut d = Vec::with_capacity(count);
        let mut pads = Vec::with_capacity(count * k as usize);
        for _ in 0..count {
            d.push(ctx.dealer_index(k));
            for _ in 0..k {
                pads.push(ctx.dealer_elem(width));
            }
        }
        (d, pads)
    };
    let i_send_first = ctx.party() == Party::P0;
    let (send_draw, recv_draw) = if i_send_first {
        let a = draw(ctx, send_count);
        let b = draw(ctx, my_choices.len());
        (a, b)
    } else {
        let a = draw(ctx, my_choices.len());
        let b = draw(ctx, send_count);
        (b, a)
    };

    let mut derand = BitWriter::with_capacity(my_choices.len(), index_bits(k));
    for (j, &c) in my_choices.iter().enumerate() {
        derand.push((c + k - recv_draw.0[j]) as u128 % k as u128, index_bits(k));
    }
    let peer_derand = ctx.exchange(derand.finish())?;
    let mut peer_us = BitReader::new(&peer_derand);

    let mut payload = BitWriter::with_capacity(my_msgs.len(), width);
    for inst in 0..send_count {
        let u = peer_us.read(index_bits(k)) as u32;
        let base = inst * k as usize;
        for t in 0..k {
            let s = ((t + u) % k) as usize;
            payload.push(my_msgs[base + s] ^ send_draw.1[base + t as usize], width);
        }
    }
    // The sender emitted slots in pad order t; slot s sits at position
    // (s - u) mod k of the instance, which the receiver recomputes below.
    let peer_payload = ctx.exchange(payload.finish())?;
    let mut rdr = BitReader::new(&peer_payload);
    // The peer emitted its payload in pad order t (masking message (t+u)%k
    // with pad t), so our chosen message sits at position d of each instance.
    let mut out = Vec::with_capacity(my_choices.len());
    for (j, &d) in recv_draw.0.iter().enumerate() {
        let mut chosen = 0u128;
        for t in 0..k {
            let y = rdr.read(width);
            if t == d {
                chosen = y;
            }
        }
        out.push(chosen ^ recv_draw.1[j * k as usize + d as usize]);
    }
    Ok(out)
}
