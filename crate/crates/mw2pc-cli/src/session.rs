//! Runnable protocol workloads shared by `verify`, `bench`, and `party`.
//!
//! One [`Proto`] value describes a workload completely; input generation,
//! execution, and the handshake digest are identical whether the session runs
//! in-memory or across TCP, which is what makes transport-equivalence checks
//! meaningful.

use anyhow::{bail, Context, Result};
use mw2pc::funcs::{
    pi_div, pi_exp, pi_rexp, pi_sin, pi_softmax, pi_trunc, reciprocal, ExpParams, SinParams,
    SoftmaxParams,
};
use mw2pc::mw::{pi_mw, pi_mw_conv, MwParams};
use mw2pc::oracle::{self, UlpStats};
use mw2pc::ring::{decode_real, encode_fix_round, width_mask, FixMeta, RingElem};
use mw2pc::runtime::{
    handshake, input_rng, run_pair, Party, PartyCtx, PartyOutcome, SessionConfig, TcpTransport,
};
use mw2pc::sharing::ArithShare;
use rand::Rng;
use rand_chacha::ChaCha20Rng;
use std::time::Duration;

/// A fully parameterized protocol workload.
#[derive(Clone, Debug)]
pub enum Proto {
    /// MW coefficient of a bounded sharing.
    Mw { l: u8, lp: u8, b: u128 },
    /// MW of the reduced sharing from a wider ring.
    MwConv { lr: u8, l: u8, lp: u8 },
    /// Faithful division by a public divisor.
    Div { l: u8, d: u128 },
    /// Faithful arithmetic right shift.
    Trunc { l: u8, k: u8 },
    /// Negative exponential e^-x for x >= 0.
    Rexp { l: u8, f: u8 },
    /// Natural exponential over [-4, 4).
    Exp { f: u8, out_l: u8 },
    /// Sine under a share bound.
    Sin { l: u8, f: u8, b: u128 },
    /// Reciprocal of a sum in [1, 2^e_max).
    Recip { l: u8, f: u8, out_f: u8, e_max: u8 },
    /// Row-wise softmax of a logit matrix.
    Softmax { rows: usize, cols: usize, l: u8, f: u8 },
}

impl Proto {
    /// Canonical parameter string (reports, digests, artifact rows).
    pub fn label(&self) -> String {
        match *self {
            Proto::Mw { l, lp, b } => format!("mw l={l} lp={lp} B={b}"),
            Proto::MwConv { lr, l, lp } => format!("mw-conv lr={lr} l={l} lp={lp}"),
            Proto::Div { l, d } => format!("div l={l} d={d}"),
            Proto::Trunc { l, k } => format!("trunc l={l} k={k}"),
            Proto::Rexp { l, f } => format!("rexp l={l} f={f}"),
            Proto::Exp { f, out_l } => format!("exp f={f} out_l={out_l}"),
            Proto::Sin { l, f, b } => format!("sin l={l} f={f} B={b}"),
            Proto::Recip { l, f, out_f, e_max } => {
                format!("recip l={l} f={f} out_f={out_f} e_max={e_max}")
            }
            Proto::Softmax { rows, cols, l, f } => {
                format!("softmax rows={rows} cols={cols} l={l} f={f}")
            }
        }
    }

    /// Short protocol name.
    pub fn name(&self) -> &'static str {
        match self {
            Proto::Mw { .. } => "mw",
            Proto::MwConv { .. } => "mw-conv",
            Proto::Div { .. } => "div",
            Proto::Trunc { .. } => "trunc",
            Proto::Rexp { .. } => "rexp",
            Proto::Exp { .. } => "exp",
            Proto::Sin { .. } => "sin",
            Proto::Recip { .. } => "recip",
            Proto::Softmax { .. } => "softmax",
        }
    }

    /// Ring width of the input shares.
    pub fn input_width(&self) -> u8 {
        match *self {
            Proto::Mw { l, .. } => l,
            Proto::MwConv { lr, .. } => lr,
            Proto::Div { l, .. } => l,
            Proto::Trunc { l, .. } => l,
            Proto::Rexp { l, .. } => l,
            Proto::Exp { f, .. } => f + 3,
            Proto::Sin { l, .. } => l,
            Proto::Recip { l, .. } => l,
            Proto::Softmax { l, .. } => l,
        }
    }

    /// Number of logical runs in a batch of `batch` input vectors (softmax
    /// counts whole matrices).
    pub fn runs_in_batch(&self, batch: usize) -> usize {
        match self {
            Proto::Softmax { .. } => 1,
            _ => batch,
        }
    }

    /// Stable parameter digest for the TCP handshake.
    pub fn digest(&self, seed: u64, batch: usize) -> u64 {
        fnv1a64(format!("{}|seed={seed}|batch={batch}", self.label()).as_bytes())
    }
}

/// Order-sensitive digest of a party's output share vector.
pub fn output_hash(outs: &[ArithShare]) -> u64 {
    let mut bytes = Vec::with_capacity(outs.len() * 17);
    for s in outs {
        bytes.push(s.0.width());
        bytes.extend_from_slice(&s.0.value().to_le_bytes());
    }
    fnv1a64(&bytes)
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Deterministic batch of inputs: plaintext encodings plus a share split.
pub struct GenBatch {
    /// Ring width of the shares.
    pub width: u8,
    /// (party-0, party-1) share values.
    pub pairs: Vec<(u128, u128)>,
    /// Signed plaintext encodings, for oracles.
    pub ints: Vec<i128>,
}

impl GenBatch {
    /// This party's shares.
    pub fn shares_for(&self, party: Party) -> Vec<ArithShare> {
        self.pairs
            .iter()
            .map(|&(a, b)| {
                ArithShare(RingElem::new(self.width, if party == Party::P0 { a } else { b }))
            })
            .collect()
    }
}

fn split(rng: &mut ChaCha20Rng, width: u8, enc: u128) -> (u128, u128) {
    let a = rng.gen::<u128>() & width_mask(width);
    (a, enc.wrapping_sub(a) & width_mask(width))
}

/// Draws the deterministic input batch for a workload.
pub fn generate(proto: &Proto, seed: u64, batch: usize) -> Result<GenBatch> {
    let mut rng = input_rng(seed);
    let width = proto.input_width();
    let n = match proto {
        Proto::Softmax { rows, cols, .. } => rows * cols,
        _ => batch,
    };
    let ints: Vec<i128> = match *proto {
        Proto::Mw { b, .. } => {
            (0..n).map(|_| rng.gen_range(-(b as i128)..b as i128)).collect()
        }
        Proto::MwConv { l, .. } => {
            let half = 1i128 << (l - 1);
            (0..n).map(|_| rng.gen_range(-half..half)).collect()
        }
        Proto::Div { l, .. } | Proto::Trunc { l, .. } => {
            let half = 1i128 << (l - 1);
            (0..n).map(|_| rng.gen_range(-half..half)).collect()
        }
        Proto::Rexp { f, .. } => (0..n).map(|_| rng.gen_range(0..1i128 << (f + 3))).collect(),
        Proto::Exp { f, .. } => {
            let half = 1i128 << (f + 2);
            (0..n).map(|_| rng.gen_range(-half..half)).collect()
        }
        Proto::Sin { b, .. } => (0..n).map(|_| rng.gen_range(-(b as i128)..b as i128)).collect(),
        Proto::Recip { l, f, e_max, .. } => {
            let meta = FixMeta::new(l, f).map_err(anyhow::Error::from)?;
            (0..n)
                .map(|_| {
                    // Log-uniform over the contract range [1, 2^e_max).
                    let e = rng.gen_range(0.0..e_max as f64 - 0.01);
                    encode_fix_round(e.exp2(), meta).to_signed()
                })
                .collect()
        }
        Proto::Softmax { l, f, .. } => {
            let meta = FixMeta::new(l, f).map_err(anyhow::Error::from)?;
            (0..n)
                .map(|_| encode_fix_round(rng.gen_range(-3.0..3.0), meta).to_signed())
                .collect()
        }
    };
    let pairs = ints
        .iter()
        .map(|&v| split(&mut rng, width, RingElem::from_signed(width, v).value()))
        .collect();
    Ok(GenBatch { width, pairs, ints })
}

/// Runs the workload on this party's context over pre-built shares.
pub fn execute(proto: &Proto, ctx: &mut PartyCtx, mine: &[ArithShare]) -> mw2pc::Result<Vec<ArithShare>> {
    match *proto {
        Proto::Mw { l, lp, b } => {
            let params = MwParams::new(l, lp, b)?;
            pi_mw(ctx, &params, mine)
        }
        Proto::MwConv { l, lp, .. } => pi_mw_conv(ctx, mine, l, lp),
        Proto::Div { d, .. } => pi_div(ctx, mine, d),
        Proto::Trunc { k, .. } => pi_trunc(ctx, mine, k, false, None),
        Proto::Rexp { f, .. } => pi_rexp(ctx, mine, f),
        Proto::Exp { f, out_l } => {
            let out = FixMeta::new(out_l, f)?;
            let params = ExpParams::new(std::f64::consts::E, f, out)?;
            pi_exp(ctx, mine, &params)
        }
        Proto::Sin { l, f, b } => {
            let meta = FixMeta::new(l, f)?;
            let params = SinParams::new(meta, meta, b)?;
            pi_sin(ctx, mine, &params)
        }
        Proto::Recip { f, out_f, e_max, .. } => reciprocal(ctx, mine, f, e_max, out_f),
        Proto::Softmax { rows, cols, l, f } => {
            let params = SoftmaxParams::new(rows, cols, l, f)?;
            pi_softmax(ctx, mine, &params)
        }
    }
}

/// Both parties of a seeded in-memory session.
pub fn run_local(
    proto: &Proto,
    seed: u64,
    batch: usize,
) -> Result<(GenBatch, PartyOutcome<Vec<ArithShare>>, PartyOutcome<Vec<ArithShare>>)> {
    let gen = generate(proto, seed, batch)?;
    let p = proto.clone();
    let (r0, r1) = run_pair(seed, move |ctx| {
        let gen = generate(&p, seed, batch).map_err(|e| {
            mw2pc::Error::InvalidParam(format!("input generation: {e}"))
        })?;
        let mine = gen.shares_for(ctx.party());
        execute(&p, ctx, &mine)
    })?;
    Ok((gen, r0, r1))
}

/// One party of a seeded session over TCP. Party 0 listens, party 1 connects.
pub fn run_tcp(
    proto: &Proto,
    seed: u64,
    batch: usize,
    role: Party,
    addr: &str,
) -> Result<PartyOutcome<Vec<ArithShare>>> {
    let transport = match role {
        Party::P0 => TcpTransport::listen(addr).context("listen")?,
        Party::P1 => {
            TcpTransport::connect(addr, Duration::from_secs(30)).context("connect")?
        }
    };
    let cfg = SessionConfig { seed, ..SessionConfig::default() };
    let mut ctx = PartyCtx::new(role, Box::new(transport), cfg);
    handshake(&mut ctx, proto.digest(seed, batch)).context("handshake")?;
    // Ledger reflects the protocol itself, as in-memory runs have no
    // handshake to price.
    ctx.ledger = Default::default();
    let gen = generate(proto, seed, batch)?;
    let mine = gen.shares_for(role);
    let output = execute(proto, &mut ctx, &mine)?;
    Ok(PartyOutcome { output, ledger: ctx.ledger })
}

/// Reconstructed outputs of a completed pair of runs.
pub fn reconstruct_outputs(
    r0: &PartyOutcome<Vec<ArithShare>>,
    r1: &PartyOutcome<Vec<ArithShare>>,
) -> Vec<RingElem> {
    r0.output.iter().zip(&r1.output).map(|(a, b)| a.0 + b.0).collect()
}

/// Accuracy evaluation of reconstructed outputs against the plaintext oracle.
pub enum Accuracy {
    /// Exact protocols: number of mismatches.
    Exact { failures: u64 },
    /// Approximate protocols: error statistics under a named metric.
    Stats { metric: &'static str, stats: UlpStats },
}

/// Compares reconstructed outputs against the plaintext reference.
pub fn accuracy(proto: &Proto, gen: &GenBatch, outs: &[RingElem]) -> Result<Accuracy> {
    match *proto {
        Proto::Mw { l, lp, .. } => {
            let mask = width_mask(lp);
            let fails = gen
                .pairs
                .iter()
                .zip(outs)
                .filter(|(&(a, b), o)| o.value() != oracle::mw_ref(a, b, l) as u128 & mask)
                .count();
            Ok(Accuracy::Exact { failures: fails as u64 })
        }
        Proto::MwConv { l, lp, .. } => {
            let (mask, small) = (width_mask(lp), width_mask(l));
            let fails = gen
                .pairs
                .iter()
                .zip(outs)
                .filter(|(&(a, b), o)| {
                    o.value() != oracle::mw_ref(a & small, b & small, l) as u128 & mask
                })
                .count();
            Ok(Accuracy::Exact { failures: fails as u64 })
        }
        Proto::Div { d, .. } => {
            let fails = gen
                .ints
                .iter()
                .zip(outs)
                .filter(|(&x, o)| o.to_signed() != oracle::div_floor_ref(x, d))
                .count();
            Ok(Accuracy::Exact { failures: fails as u64 })
        }
        Proto::Trunc { k, .. } => {
            let fails = gen
                .ints
                .iter()
                .zip(outs)
                .filter(|(&x, o)| o.to_signed() != oracle::trunc_ref(x, k))
                .count();
            Ok(Accuracy::Exact { failures: fails as u64 })
        }
        Proto::Rexp { l, f } => {
            let out_meta = FixMeta::new(l, f).map_err(anyhow::Error::from)?;
            let mut stats = UlpStats::default();
            for (&x, o) in gen.ints.iter().zip(outs) {
                let real = x as f64 / (f as f64).exp2();
                let got = decode_real(*o, out_meta);
                stats.observe(oracle::ulp_error(oracle::rexp_ref(real), got, f));
            }
            Ok(Accuracy::Stats { metric: "ulp", stats })
        }
        Proto::Exp { f, out_l } => {
            let out_meta = FixMeta::new(out_l, f).map_err(anyhow::Error::from)?;
            let mut stats = UlpStats::default();
            for (&x, o) in gen.ints.iter().zip(outs) {
                let real = x as f64 / (f as f64).exp2();
                let want = oracle::exp_ref(std::f64::consts::E, real);
                let got = decode_real(*o, out_meta);
                // Relative metric: component quantization scales with a^x.
                stats.observe((got - want).abs() / want.max(1e-9));
            }
            Ok(Accuracy::Stats { metric: "rel", stats })
        }
        Proto::Sin { l, f, .. } => {
            let meta = FixMeta::new(l, f).map_err(anyhow::Error::from)?;
            let mut stats = UlpStats::default();
            for (&x, o) in gen.ints.iter().zip(outs) {
                let real = x as f64 / (f as f64).exp2();
                let got = decode_real(*o, meta);
                stats.observe(oracle::ulp_error(oracle::sin_ref(real), got, f));
            }
            Ok(Accuracy::Stats { metric: "ulp", stats })
        }
        Proto::Recip { l, f, out_f, .. } => {
            let in_meta = FixMeta::new(l, f).map_err(anyhow::Error::from)?;
            let out_meta = FixMeta::new(l, out_f).map_err(anyhow::Error::from)?;
            let mut stats = UlpStats::default();
            for (&x, o) in gen.ints.iter().zip(outs) {
                let s = decode_real(RingElem::from_signed(l, x), in_meta);
                let got = decode_real(*o, out_meta);
                stats.observe((got * s - 1.0).abs());
            }
            Ok(Accuracy::Stats { metric: "rel", stats })
        }
        Proto::Softmax { rows, cols, l, f } => {
            let meta = FixMeta::new(l, f).map_err(anyhow::Error::from)?;
            let mut stats = UlpStats::default();
            for r in 0..rows {
                let row: Vec<f64> =
                    gen.ints[r * cols..(r + 1) * cols].iter().map(|&x| x as f64 / (f as f64).exp2()).collect();
                let want = oracle::softmax_ref(&row);
                for c in 0..cols {
                    let got = decode_real(outs[r * cols + c], meta);
                    stats.observe((got - want[c]).abs());
                }
            }
            Ok(Accuracy::Stats { metric: "abs", stats })
        }
    }
}

/// Parses a bound flag: a value containing '.' is a fraction of `L/2`
/// (rounded to nearest); anything else is an absolute ring value.
pub fn parse_bound(s: &str, l: u8) -> Result<u128> {
    let half = 1u128 << (l - 1);
    let b = if s.contains('.') {
        let frac: f64 = s.parse().context("bound fraction")?;
        if !(0.0..=1.0).contains(&frac) || frac == 0.0 {
            bail!("bound fraction {frac} outside (0, 1]");
        }
        (frac * half as f64).round() as u128
    } else {
        s.parse().context("bound value")?
    };
    if b == 0 || b > half {
        bail!("bound {b} outside 1..=2^{}", l - 1);
    }
    Ok(b)
}
