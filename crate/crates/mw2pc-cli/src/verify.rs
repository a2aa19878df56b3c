//! Correctness sweeps: exhaustive enumerations for the exact protocols and
//! seeded accuracy sweeps (with pinned error budgets) for the approximate
//! ones. Every suite reports `cases`, `failures`, and the first failing
//! instance, so a red run is directly actionable.

use crate::session::{self, Proto};
use anyhow::Result;
use mw2pc::oracle::{self, UlpStats, VerifyReport};
use mw2pc::ring::{decode_real, width_mask, FixMeta, RingElem};
use mw2pc::runtime::{input_rng, run_pair, Party};
use mw2pc::sharing::ArithShare;
use rand::Rng;

/// Instances per in-memory session; keeps peak memory flat on big sweeps.
const CHUNK: usize = 1 << 15;

/// Outcome of one verification suite.
pub struct Suite {
    /// Suite name as printed.
    pub name: String,
    /// Pass/fail accounting.
    pub report: VerifyReport,
    /// Error statistics per labeled sub-sweep, for approximate protocols.
    pub stats: Vec<(String, UlpStats)>,
}

impl Suite {
    fn new(name: impl Into<String>) -> Self {
        Suite { name: name.into(), report: VerifyReport::default(), stats: Vec::new() }
    }

    /// Whether the suite passed.
    pub fn pass(&self) -> bool {
        self.report.pass()
    }

    /// Render the suite as report lines.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for (label, s) in &self.stats {
            out.push_str(&format!(
                "  {label}: n={} max={:.4} avg={:.4}\n",
                s.count,
                s.max,
                s.avg()
            ));
        }
        if let Some(first) = &self.report.first_failure {
            out.push_str(&format!("  first failure: {first}\n"));
        }
        out.push_str(&format!(
            "verify {}: cases={} failures={} -> {}\n",
            self.name,
            self.report.cases,
            self.report.failures,
            if self.pass() { "PASS" } else { "FAIL" }
        ));
        out
    }
}

/// Runs explicit share pairs through a seeded in-memory session, chunked.
fn run_explicit(
    proto: &Proto,
    width: u8,
    pairs: &[(u128, u128)],
    seed: u64,
) -> Result<Vec<RingElem>> {
    let mut outs = Vec::with_capacity(pairs.len());
    for chunk in pairs.chunks(CHUNK) {
        let chunk: Vec<(u128, u128)> = chunk.to_vec();
        let p = proto.clone();
        let (r0, r1) = run_pair(seed, move |ctx| {
            let mine: Vec<ArithShare> = chunk
                .iter()
                .map(|&(a, b)| {
                    ArithShare(RingElem::new(width, if ctx.party() == Party::P0 { a } else { b }))
                })
                .collect();
            session::execute(&p, ctx, &mine)
        })?;
        outs.extend(session::reconstruct_outputs(&r0, &r1));
    }
    Ok(outs)
}

/// Grid of at least twenty MW bounds spanning `(0, L/2]`, always including
/// the `3L/8` branch boundary and `L/2`.
pub fn default_b_grid(l: u8) -> Vec<u128> {
    let half = 1u128 << (l - 1);
    let mut grid: Vec<u128> = (1..=20u32)
        .map(|j| ((j as f64 / 20.0) * half as f64).round().max(1.0) as u128)
        .collect();
    grid.push(3 * (1u128 << l) / 8);
    grid.push(half);
    grid.sort_unstable();
    grid.dedup();
    grid
}

/// Exhaustive MW sweep: for each bound in the grid, every share pair whose
/// value lies within the bound must reconstruct the plaintext coefficient.
pub fn verify_mw(l: u8, lp: u8, bound: Option<u128>, seed: u64) -> Result<Suite> {
    let mut suite = Suite::new(format!("mw l={l} lp={lp}"));
    let ring = 1u128 << l;
    let mask = width_mask(lp);
    let grid = bound.map(|b| vec![b]).unwrap_or_else(|| default_b_grid(l));
    for &b in &grid {
        let mut pairs = Vec::with_capacity((2 * b) as usize * ring as usize);
        for v in -(b as i128)..b as i128 {
            let enc = RingElem::from_signed(l, v).value();
            for x0 in 0..ring {
                pairs.push((x0, enc.wrapping_sub(x0) & (ring - 1)));
            }
        }
        let outs = run_explicit(&Proto::Mw { l, lp, b }, l, &pairs, seed)?;
        for (&(x0, x1), o) in pairs.iter().zip(&outs) {
            let want = oracle::mw_ref(x0, x1, l) as u128 & mask;
            suite.report.check(o.value() == want, || {
                format!("mw l={l} B={b} x0={x0} x1={x1}: got {} want {want}", o.value())
            });
        }
    }
    Ok(suite)
}

/// Exhaustive ring-reduction sweep: over source rings `l+1`, `l+2`, `l+4`,
/// every share pair whose wide value fits the halved target ring must
/// reproduce the plaintext coefficient of the reduced shares.
pub fn verify_mw_conv(l: u8, lp: u8, seed: u64) -> Result<Suite> {
    let mut suite = Suite::new(format!("mw-conv l={l} lp={lp}"));
    let mask = width_mask(lp);
    let small = width_mask(l);
    let half = 1i128 << (l - 1);
    for lr in [l + 1, l + 2, l + 4] {
        let wide = 1u128 << lr;
        let mut pairs = Vec::with_capacity((wide << l) as usize);
        for v in -half..half {
            let enc = RingElem::from_signed(lr, v).value();
            for x0 in 0..wide {
                pairs.push((x0, enc.wrapping_sub(x0) & (wide - 1)));
            }
        }
        let outs = run_explicit(&Proto::MwConv { lr, l, lp }, lr, &pairs, seed)?;
        for (&(x0, x1), o) in pairs.iter().zip(&outs) {
            let want = oracle::mw_ref(x0 & small, x1 & small, l) as u128 & mask;
            suite.report.check(o.value() == want, || {
                format!("mw-conv lr={lr} l={l} x0={x0} x1={x1}: got {} want {want}", o.value())
            });
        }
    }
    Ok(suite)
}

/// Exhaustive plaintext check of the two division/wrap identities the
/// comparison reduction rests on.
pub fn verify_lemmas(l: u8) -> Result<Suite> {
    let mut suite = Suite::new(format!("lemmas l={l}"));
    let ring = 1u128 << l;
    for a in 1..ring {
        let mut l1_fail = None;
        let mut l2_fail = None;
        let mut cases = 0u64;
        for x in 0..ring {
            for y in 0..ring {
                if let Some(ok) = oracle::lemma1_holds(x, y, a, l) {
                    cases += 1;
                    if !ok && l1_fail.is_none() {
                        l1_fail = Some((x, y));
                    }
                }
                if let Some(ok) = oracle::lemma2_holds(x, y, a, l) {
                    cases += 1;
                    if !ok && l2_fail.is_none() {
                        l2_fail = Some((x, y));
                    }
                }
            }
        }
        // Fold each divisor's sweep into two summary checks to keep the
        // report small; `cases` still counts every evaluated instance.
        suite.report.cases += cases.saturating_sub(2);
        suite.report.check(l1_fail.is_none(), || {
            format!("lemma1 a={a}: first failure at {:?}", l1_fail.unwrap())
        });
        suite.report.check(l2_fail.is_none(), || {
            format!("lemma2 a={a}: first failure at {:?}", l2_fail.unwrap())
        });
    }
    Ok(suite)
}

/// Division sweep: exhaustive over all share pairs when the ring is small,
/// seeded random otherwise; outputs must match floor division exactly.
pub fn verify_div(l: u8, d: u128, samples: usize, seed: u64) -> Result<Suite> {
    let mut suite = Suite::new(format!("div l={l} d={d}"));
    if l <= 10 {
        let ring = 1u128 << l;
        let mut pairs = Vec::with_capacity((ring * ring) as usize);
        for x0 in 0..ring {
            for x1 in 0..ring {
                pairs.push((x0, x1));
            }
        }
        let outs = run_explicit(&Proto::Div { l, d }, l, &pairs, seed)?;
        for (&(x0, x1), o) in pairs.iter().zip(&outs) {
            let want = oracle::div_floor_ref(oracle::int_ref(x0, x1, l), d);
            suite.report.check(o.to_signed() == want, || {
                format!("div l={l} d={d} x0={x0} x1={x1}: got {} want {want}", o.to_signed())
            });
        }
    } else {
        let (gen, r0, r1) = session::run_local(&Proto::Div { l, d }, seed, samples)?;
        let outs = session::reconstruct_outputs(&r0, &r1);
        for (&x, o) in gen.ints.iter().zip(&outs) {
            let want = oracle::div_floor_ref(x, d);
            suite.report.check(o.to_signed() == want, || {
                format!("div l={l} d={d} x={x}: got {} want {want}", o.to_signed())
            });
        }
    }
    Ok(suite)
}

/// Truncation sweep mirroring [`verify_div`]: exact arithmetic shift by `k`.
pub fn verify_trunc(l: u8, k: u8, samples: usize, seed: u64) -> Result<Suite> {
    let mut suite = Suite::new(format!("trunc l={l} k={k}"));
    if l <= 10 {
        let ring = 1u128 << l;
        let mut pairs = Vec::with_capacity((ring * ring) as usize);
        for x0 in 0..ring {
            for x1 in 0..ring {
                pairs.push((x0, x1));
            }
        }
        let outs = run_explicit(&Proto::Trunc { l, k }, l, &pairs, seed)?;
        for (&(x0, x1), o) in pairs.iter().zip(&outs) {
            let want = oracle::trunc_ref(oracle::int_ref(x0, x1, l), k);
            suite.report.check(o.to_signed() == want, || {
                format!("trunc l={l} k={k} x0={x0} x1={x1}: got {} want {want}", o.to_signed())
            });
        }
    } else {
        let (gen, r0, r1) = session::run_local(&Proto::Trunc { l, k }, seed, samples)?;
        let outs = session::reconstruct_outputs(&r0, &r1);
        for (&x, o) in gen.ints.iter().zip(&outs) {
            let want = oracle::trunc_ref(x, k);
            suite.report.check(o.to_signed() == want, || {
                format!("trunc l={l} k={k} x={x}: got {} want {want}", o.to_signed())
            });
        }
    }
    Ok(suite)
}

/// Negative-exponential sweep. On the minimal ring (`l = f + 4`) it runs
/// every representable input in `[0, 8)` and pins the stochastic-rounding
/// error profile; on wider rings it additionally demands exact zeros for
/// inputs at or beyond the gate point.
pub fn verify_rexp(l: u8, f: u8, samples: usize, seed: u64) -> Result<Suite> {
    let mut suite = Suite::new(format!("rexp l={l} f={f}"));
    let out_meta = FixMeta::new(l, f).map_err(anyhow::Error::from)?;
    let scale = (f as f64).exp2();
    if l == f + 4 {
        let mut rng = input_rng(seed ^ 0x5eed);
        let pairs: Vec<(u128, u128)> = (0..1u128 << (f + 3))
            .map(|enc| {
                let a = rng.gen::<u128>() & width_mask(l);
                (a, enc.wrapping_sub(a) & width_mask(l))
            })
            .collect();
        let outs = run_explicit(&Proto::Rexp { l, f }, l, &pairs, seed)?;
        let mut stats = UlpStats::default();
        for (enc, o) in (0..1u128 << (f + 3)).zip(&outs) {
            let want = oracle::rexp_ref(enc as f64 / scale);
            stats.observe(oracle::ulp_error(want, decode_real(*o, out_meta), f));
        }
        suite.report.check(stats.max <= 1.435, || {
            format!("rexp max ulp {:.4} exceeds 1.435", stats.max)
        });
        suite.report.check(stats.avg() <= 0.40, || {
            format!("rexp avg ulp {:.4} exceeds 0.40", stats.avg())
        });
        suite.report.cases += stats.count;
        suite.stats.push(("all inputs in [0, 8)".into(), stats));
    } else {
        let mut rng = input_rng(seed ^ 0x5eed);
        // Exact zeros at and beyond the gate point.
        let zero_pairs: Vec<(u128, u128)> = (0..samples)
            .map(|_| {
                let x = rng.gen_range(8.0 * scale..1000.0 * scale).round() as i128;
                let enc = RingElem::from_signed(l, x).value();
                let a = rng.gen::<u128>() & width_mask(l);
                (a, enc.wrapping_sub(a) & width_mask(l))
            })
            .collect();
        let outs = run_explicit(&Proto::Rexp { l, f }, l, &zero_pairs, seed)?;
        for (i, o) in outs.iter().enumerate() {
            suite.report.check(o.value() == 0, || {
                format!("rexp gated input #{i}: got {} want 0", o.to_signed())
            });
        }
        // Error profile over the full supported range.
        let mut ints = Vec::with_capacity(samples);
        let wide_pairs: Vec<(u128, u128)> = (0..samples)
            .map(|_| {
                let x = rng.gen_range(1.0..1000.0 * scale).round() as i128;
                ints.push(x);
                let enc = RingElem::from_signed(l, x).value();
                let a = rng.gen::<u128>() & width_mask(l);
                (a, enc.wrapping_sub(a) & width_mask(l))
            })
            .collect();
        let outs = run_explicit(&Proto::Rexp { l, f }, l, &wide_pairs, seed)?;
        let mut stats = UlpStats::default();
        for (&x, o) in ints.iter().zip(&outs) {
            let want = oracle::rexp_ref(x as f64 / scale);
            stats.observe(oracle::ulp_error(want, decode_real(*o, out_meta), f));
        }
        suite.report.check(stats.max <= 1.5, || {
            format!("rexp max ulp {:.4} exceeds 1.5", stats.max)
        });
        suite.report.cases += stats.count;
        suite.stats.push(("random inputs in (0, 1000]".into(), stats));
    }
    Ok(suite)
}

/// Sine sweep: seeded samples per bound; pins the faithful-floor error
/// profile (max one representable step, average near half a step).
pub fn verify_sin(l: u8, f: u8, bounds: &[u128], samples: usize, seed: u64) -> Result<Suite> {
    let mut suite = Suite::new(format!("sin l={l} f={f}"));
    for &b in bounds {
        let (gen, r0, r1) = session::run_local(&Proto::Sin { l, f, b }, seed, samples)?;
        let outs = session::reconstruct_outputs(&r0, &r1);
        let acc = session::accuracy(&Proto::Sin { l, f, b }, &gen, &outs)?;
        let stats = match acc {
            session::Accuracy::Stats { stats, .. } => stats,
            session::Accuracy::Exact { .. } => unreachable!("sin is approximate"),
        };
        suite.report.check(stats.max <= 1.5, || {
            format!("sin B={b}: max ulp {:.4} exceeds 1.5", stats.max)
        });
        suite.report.check((0.45..=0.60).contains(&stats.avg()), || {
            format!("sin B={b}: avg ulp {:.4} outside [0.45, 0.60]", stats.avg())
        });
        suite.report.cases += stats.count;
        suite.stats.push((format!("B={b}"), stats));
    }
    Ok(suite)
}

/// Exponential sweep: relative error must stay within the component
/// quantization budget `(1/512) + 1e-3 / e^x` across `[-4, 4)`.
pub fn verify_exp(f: u8, out_l: u8, samples: usize, seed: u64) -> Result<Suite> {
    let mut suite = Suite::new(format!("exp f={f} out_l={out_l}"));
    let proto = Proto::Exp { f, out_l };
    let (gen, r0, r1) = session::run_local(&proto, seed, samples)?;
    let outs = session::reconstruct_outputs(&r0, &r1);
    let out_meta = FixMeta::new(out_l, f).map_err(anyhow::Error::from)?;
    let scale = (f as f64).exp2();
    let mut stats = UlpStats::default();
    for (&x, o) in gen.ints.iter().zip(&outs) {
        let want = oracle::exp_ref(std::f64::consts::E, x as f64 / scale);
        let err = (decode_real(*o, out_meta) - want).abs();
        let budget = want / 512.0 + 1e-3;
        stats.observe(err / budget);
        suite.report.check(err <= budget, || {
            format!("exp x={}: err {err:.6} over budget {budget:.6}", x as f64 / scale)
        });
    }
    suite.stats.push(("error / budget".into(), stats));
    Ok(suite)
}

/// Reciprocal sweep: log-uniform inputs across the supported magnitude
/// range; the relative error of `1/s` must stay within `1e-3`.
pub fn verify_recip(
    l: u8,
    f: u8,
    out_f: u8,
    e_max: u8,
    samples: usize,
    seed: u64,
) -> Result<Suite> {
    let mut suite = Suite::new(format!("recip l={l} f={f} out_f={out_f} e_max={e_max}"));
    let proto = Proto::Recip { l, f, out_f, e_max };
    let (gen, r0, r1) = session::run_local(&proto, seed, samples)?;
    let outs = session::reconstruct_outputs(&r0, &r1);
    let in_meta = FixMeta::new(l, f).map_err(anyhow::Error::from)?;
    let out_meta = FixMeta::new(l, out_f).map_err(anyhow::Error::from)?;
    let mut stats = UlpStats::default();
    for (&x, o) in gen.ints.iter().zip(&outs) {
        let s = decode_real(RingElem::from_signed(l, x), in_meta);
        let err = (decode_real(*o, out_meta) * s - 1.0).abs();
        stats.observe(err);
        suite.report.check(err <= 1e-3, || format!("recip s={s:.4}: relative error {err:.6}"));
    }
    suite.stats.push(("relative error".into(), stats));
    Ok(suite)
}

/// Softmax sweep: every output row must sum to one within a percent, every
/// entry must sit within a percent of the plaintext value, and the secure
/// argmax must agree whenever the top two logits are separated by at least
/// one part in 2^8.
pub fn verify_softmax(rows: usize, cols: usize, l: u8, f: u8, seed: u64) -> Result<Suite> {
    let mut suite = Suite::new(format!("softmax {rows}x{cols} l={l} f={f}"));
    let proto = Proto::Softmax { rows, cols, l, f };
    let (gen, r0, r1) = session::run_local(&proto, seed, 0)?;
    let outs = session::reconstruct_outputs(&r0, &r1);
    let meta = FixMeta::new(l, f).map_err(anyhow::Error::from)?;
    let scale = (f as f64).exp2();
    let mut stats = UlpStats::default();
    for r in 0..rows {
        let row: Vec<f64> =
            gen.ints[r * cols..(r + 1) * cols].iter().map(|&x| x as f64 / scale).collect();
        let want = oracle::softmax_ref(&row);
        let got: Vec<f64> =
            outs[r * cols..(r + 1) * cols].iter().map(|&o| decode_real(o, meta)).collect();
        let sum: f64 = got.iter().sum();
        suite.report.check((sum - 1.0).abs() <= 0.01, || {
            format!("softmax row {r}: sum {sum:.4} outside 1 +- 0.01")
        });
        for c in 0..cols {
            stats.observe((got[c] - want[c]).abs());
            suite.report.check((got[c] - want[c]).abs() <= 0.01, || {
                format!("softmax row {r} col {c}: got {:.5} want {:.5}", got[c], want[c])
            });
        }
        let arg = |v: &[f64]| {
            v.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).map(|(i, _)| i).unwrap()
        };
        let (wi, gi) = (arg(&want), arg(&got));
        let mut sorted = want.clone();
        sorted.sort_by(|a, b| b.total_cmp(a));
        let margin = sorted[0] - sorted[1];
        if margin >= 1.0 / 256.0 {
            suite.report.check(wi == gi, || {
                format!("softmax row {r}: argmax {gi} != reference {wi} (margin {margin:.4})")
            });
        }
    }
    suite.stats.push(("absolute error".into(), stats));
    Ok(suite)
}
