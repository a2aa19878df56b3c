//! Acceptance gate for the whole stack.
//!
//! Each test drives the public CLI binary or the library API, prints one
//! `ACCEPTANCE <n> <name>: PASS/FAIL` line on the real stderr (bypassing
//! libtest capture so the verdicts always appear in logs), and then asserts.
//! Tolerances and cost pins are frozen in the constants below; loosening any
//! of them is a regression that needs an explicit justification.

use std::io::Write as _;
use std::net::TcpListener;
use std::process::{Command, Stdio};
use std::time::Instant;

use mw2pc::gates;
use mw2pc::mw::{self, MwParams};
use mw2pc::ring::{width_mask, RingElem};
use mw2pc::runtime::{run_pair, Party};
use mw2pc::sharing::{ArithShare, BoolShare};
use mw2pc::LAMBDA;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

// ---------------------------------------------------------------------------
// Frozen gates.

/// Wall-clock budget for the full exhaustive coefficient grid (seconds).
const MW_GRID_BUDGET_SECS: u64 = 300;
/// Wall-clock budget for the desk-scale softmax run (seconds).
const SOFTMAX_BUDGET_SECS: u64 = 600;
/// Negative exponential on the minimal ring (l = 16, f = 12), every input.
const REXP_NARROW_MAX_ULP: f64 = 1.435;
const REXP_NARROW_AVG_ULP: f64 = 0.40;
/// Negative exponential on the wide ring (l = 37), random inputs (0, 1000].
const REXP_WIDE_MAX_ULP: f64 = 1.5;
/// Sine at l = 21, f = 12 under every share bound.
const SIN_MAX_ULP: f64 = 1.5;
const SIN_AVG_ULP: (f64, f64) = (0.45, 0.60);
/// Modeled bits per coefficient instance at l = l' = 37, keyed by the bound
/// as a fraction of L/2. `true` pins equality, `false` an upper limit.
const MW_COST_PINS: &[(&str, u64, bool)] =
    &[("0.5", 165, true), ("0.8", 591, false), ("0.9999", 2153, false), ("0.999999", 3005, false), ("1.0", 5419, true)];

// ---------------------------------------------------------------------------
// Helpers.

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_mw2pc")
}

struct Run {
    stdout: String,
    stderr: String,
    code: i32,
}

fn cli(args: &[&str]) -> Run {
    let out = Command::new(bin())
        .args(args)
        .output()
        .unwrap_or_else(|e| panic!("failed to spawn {:?}: {e}", args));
    Run {
        stdout: String::from_utf8_lossy(&out.stdout).into_owned(),
        stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
        code: out.status.code().unwrap_or(-1),
    }
}

/// Value of a `key=<number>` field on a line, as a string slice.
fn field<'a>(line: &'a str, key: &str) -> Option<&'a str> {
    let pat = format!("{key}=");
    let start = line.find(&pat)? + pat.len();
    let rest = &line[start..];
    let end = rest.find(|c: char| !(c.is_ascii_digit() || c == '.' || c == '-')).unwrap_or(rest.len());
    Some(&rest[..end])
}

fn field_u64(line: &str, key: &str) -> u64 {
    field(line, key).and_then(|s| s.parse().ok()).unwrap_or_else(|| panic!("no `{key}=` in {line:?}"))
}

fn field_f64(line: &str, key: &str) -> f64 {
    field(line, key).and_then(|s| s.parse().ok()).unwrap_or_else(|| panic!("no `{key}=` in {line:?}"))
}

/// The summary line of a verification suite (the one carrying `cases=`).
fn suite_line(run: &Run) -> &str {
    run.stdout
        .lines()
        .rev()
        .find(|l| l.contains("cases="))
        .unwrap_or_else(|| panic!("no suite line in stdout {:?} / stderr {:?}", run.stdout, run.stderr))
}

/// Runs a verification suite and checks exit code, failure count, and (when
/// `want_cases` is given) the exact case count. Appends problems to `errs`.
fn check_suite(args: &[&str], want_cases: Option<u64>, errs: &mut Vec<String>) -> Run {
    let run = cli(args);
    if run.code != 0 {
        errs.push(format!("{args:?}: exit code {} (stderr: {})", run.code, run.stderr.trim()));
        return run;
    }
    let line = suite_line(&run).to_owned();
    let failures = field_u64(&line, "failures");
    if failures != 0 {
        errs.push(format!("{args:?}: {failures} failures ({line})"));
    }
    if let Some(want) = want_cases {
        let cases = field_u64(&line, "cases");
        if cases != want {
            errs.push(format!("{args:?}: {cases} cases, expected {want} ({line})"));
        }
    }
    run
}

/// Prints the verdict line on the real (uncaptured) stderr, then asserts.
fn report(n: u8, name: &str, errs: Vec<String>) {
    let verdict = if errs.is_empty() { "PASS" } else { "FAIL" };
    let mut sink = std::io::stderr().lock();
    let _ = writeln!(sink, "ACCEPTANCE {n} {name}: {verdict}");
    drop(sink);
    assert!(errs.is_empty(), "ACCEPTANCE {n} {name}:\n{}", errs.join("\n"));
}

fn ceil_log2(v: u128) -> u32 {
    debug_assert!(v >= 1);
    if v <= 1 {
        0
    } else {
        128 - (v - 1).leading_zeros()
    }
}

// ---------------------------------------------------------------------------
// 1. Exhaustive coefficient correctness over a 20-point bound grid.
//
// For each ring width the grid is j/20 of L/2 for j = 1..=20, which spans
// (0, L/2] and contains 3L/8 (j = 15) and L/2 (j = 20). Every grid point is
// checked against the plaintext coefficient for every share pair inside the
// bound; the expected case count 2B * 2^l pins exhaustiveness.
#[test]
fn a01_exhaustive_coefficient_grid() {
    let started = Instant::now();
    let mut errs = Vec::new();
    for l in [6u8, 8, 10] {
        let half = 1u128 << (l - 1);
        for j in 1..=20u32 {
            let frac = j as f64 / 20.0;
            let b = format!("{frac:.2}");
            let bound = ((frac * half as f64).round() as u128).max(1);
            let want = 2 * bound as u64 * (1u64 << l);
            check_suite(
                &["verify", "mw", "--l", &l.to_string(), "--b", &b, "--seed", "7"],
                Some(want),
                &mut errs,
            );
        }
    }
    let elapsed = started.elapsed().as_secs();
    if elapsed >= MW_GRID_BUDGET_SECS {
        errs.push(format!("grid took {elapsed}s, budget {MW_GRID_BUDGET_SECS}s"));
    }
    report(1, "exhaustive coefficient grid", errs);
}

// ---------------------------------------------------------------------------
// 2. Exhaustive ring reduction: the coefficient of the reduced shares equals
// the plaintext coefficient for every wide-ring pair with |int| < 2^(l-1),
// for source widths l+1, l+2, l+4. Case count: 2^l ints times 2^lr splits,
// summed over the three source widths = 22 * 4^l.
#[test]
fn a02_exhaustive_ring_reduction() {
    let mut errs = Vec::new();
    for l in [4u8, 6, 8] {
        let want = 22 * (1u64 << (2 * l));
        check_suite(&["verify", "mw-conv", "--l", &l.to_string()], Some(want), &mut errs);
    }
    report(2, "exhaustive ring reduction", errs);
}

// ---------------------------------------------------------------------------
// 3. Plaintext division/wrap identities, exhaustive at l = 8. The case count
// is pinned so a silently shrunken domain cannot pass.
#[test]
fn a03_plaintext_identities() {
    let mut errs = Vec::new();
    check_suite(&["verify", "lemmas", "--l", "8"], Some(22_271_360), &mut errs);
    report(3, "plaintext identities", errs);
}

// ---------------------------------------------------------------------------
// 4. Faithful division and truncation, exact everywhere: exhaustive at
// l = 10 (every one of the 2^20 share pairs) and 10^4 random pairs at
// l = 37. Truncation runs k = 1 and k = fraction-width (8 on the narrow
// ring, 12 on the wide one).
#[test]
fn a04_faithful_division_and_truncation() {
    let mut errs = Vec::new();
    for d in ["3", "7", "10", "100"] {
        check_suite(&["verify", "div", "--l", "10", "--d", d], Some(1 << 20), &mut errs);
    }
    for d in ["7", "1000"] {
        check_suite(
            &["verify", "div", "--l", "37", "--d", d, "--samples", "10000", "--seed", "7"],
            Some(10_000),
            &mut errs,
        );
    }
    for k in ["1", "8"] {
        check_suite(&["verify", "trunc", "--l", "10", "--k", k], Some(1 << 20), &mut errs);
    }
    for k in ["1", "12"] {
        check_suite(
            &["verify", "trunc", "--l", "37", "--k", k, "--samples", "10000", "--seed", "7"],
            Some(10_000),
            &mut errs,
        );
    }
    report(4, "faithful division and truncation", errs);
}

// ---------------------------------------------------------------------------
// 5. Negative exponential accuracy.
//
// Narrow ring (l = 16, f = 12): every representable input in [0, 8) — all
// 2^15 of them — with max and average ULP error under the frozen gates.
// Wide ring (l = 37): exact zero for 10^4 random inputs in [8, 1000] (the
// suite counts them under `failures`) and max ULP over 10^4 random inputs
// in (0, 1000] under the wide gate.
#[test]
fn a05_negative_exponential_accuracy() {
    let mut errs = Vec::new();

    let narrow = check_suite(&["verify", "rexp", "--l", "16", "--f", "12", "--seed", "7"], Some(32_770), &mut errs);
    if let Some(line) = narrow.stdout.lines().find(|l| l.trim_start().starts_with("all inputs in [0, 8)")) {
        let n = field_u64(line, "n");
        let max = field_f64(line, "max");
        let avg = field_f64(line, "avg");
        if n != 32_768 {
            errs.push(format!("narrow sweep covered {n} inputs, expected 32768"));
        }
        if max > REXP_NARROW_MAX_ULP {
            errs.push(format!("narrow max ULP {max} > {REXP_NARROW_MAX_ULP}"));
        }
        if avg > REXP_NARROW_AVG_ULP {
            errs.push(format!("narrow avg ULP {avg} > {REXP_NARROW_AVG_ULP}"));
        }
    } else {
        errs.push("narrow sweep stat line missing".into());
    }

    let wide = check_suite(&["verify", "rexp", "--l", "37", "--f", "12", "--seed", "7"], Some(20_001), &mut errs);
    if let Some(line) = wide.stdout.lines().find(|l| l.trim_start().starts_with("random inputs in (0, 1000]")) {
        let n = field_u64(line, "n");
        let max = field_f64(line, "max");
        if n != 10_000 {
            errs.push(format!("wide sweep covered {n} inputs, expected 10000"));
        }
        if max > REXP_WIDE_MAX_ULP {
            errs.push(format!("wide max ULP {max} > {REXP_WIDE_MAX_ULP}"));
        }
    } else {
        errs.push("wide sweep stat line missing".into());
    }

    report(5, "negative exponential accuracy", errs);
}

// ---------------------------------------------------------------------------
// 6. Sine accuracy at l = 21, f = 12: 2^14 random inputs per share bound
// (0.5, 0.99, 0.999999, 1.0 of L/2), max ULP and the average-ULP window
// checked on each bound's stat line.
#[test]
fn a06_sine_accuracy() {
    let mut errs = Vec::new();
    let run = check_suite(
        &["verify", "sin", "--l", "21", "--f", "12", "--samples", "16384", "--seed", "7"],
        None,
        &mut errs,
    );
    let stat_lines: Vec<&str> =
        run.stdout.lines().filter(|l| l.trim_start().starts_with("B=")).collect();
    if stat_lines.len() != 4 {
        errs.push(format!("expected 4 bound sweeps, saw {}", stat_lines.len()));
    }
    for line in stat_lines {
        let n = field_u64(line, "n");
        let max = field_f64(line, "max");
        let avg = field_f64(line, "avg");
        if n != 16_384 {
            errs.push(format!("{line}: n={n}, expected 16384"));
        }
        if max > SIN_MAX_ULP {
            errs.push(format!("{line}: max ULP {max} > {SIN_MAX_ULP}"));
        }
        if avg < SIN_AVG_ULP.0 || avg > SIN_AVG_ULP.1 {
            errs.push(format!("{line}: avg ULP {avg} outside [{}, {}]", SIN_AVG_ULP.0, SIN_AVG_ULP.1));
        }
    }
    report(6, "sine accuracy", errs);
}

// ---------------------------------------------------------------------------
// 7. Modeled communication of the coefficient protocol at l = l' = 37,
// pinned per bound. At B = L/2 the ledger must equal the closed form
// lambda*(l+1) + 14l + l' = 5419 and the benchmark note must flag the
// externally quoted 5254 as an open discrepancy.
#[test]
fn a07_coefficient_cost_pins() {
    let mut errs = Vec::new();
    for &(b, bits, exact) in MW_COST_PINS {
        let out = std::env::temp_dir().join(format!("acceptance-mw-{b}.json"));
        let out_s = out.to_str().unwrap().to_owned();
        let run = cli(&[
            "bench", "mw", "--l", "37", "--lp", "37", "--b", b, "--runs", "8", "--batch", "8",
            "--seed", "7", "--format", "json", "--out", &out_s,
        ]);
        if run.code != 0 {
            errs.push(format!("bench mw b={b}: exit {} ({})", run.code, run.stderr.trim()));
            continue;
        }
        let rows: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
        let row = &rows[0];
        let got = row["modeled_bits_per_run"].as_u64().unwrap();
        if exact && got != bits {
            errs.push(format!("b={b}: modeled {got} bits per run, pinned {bits}"));
        }
        if !exact && got > bits {
            errs.push(format!("b={b}: modeled {got} bits per run, cap {bits}"));
        }
        if b == &"1.0"[..] {
            let lam = LAMBDA;
            let closed = lam * 38 + 14 * 37 + 37;
            if got != closed {
                errs.push(format!("b=1.0: modeled {got} != closed form {closed}"));
            }
            let note = row["note"].as_str().unwrap_or("");
            if !note.contains("5254") || !note.to_lowercase().contains("open discrepanc") {
                errs.push(format!("b=1.0 note does not flag 5254 as an open discrepancy: {note:?}"));
            }
        }
        let _ = std::fs::remove_file(&out);
    }
    report(7, "coefficient cost pins", errs);
}

// ---------------------------------------------------------------------------
// 8. Modeled communication of the negative exponential per run:
// l = f + 4 must fit in 28*lambda + 2l + 4f + 897 bits, and the wide ring
// (l = 37 with its range gate) in lambda*(l + 29) + 18l + 4f + 897.
#[test]
fn a08_negative_exponential_cost_caps() {
    let mut errs = Vec::new();
    let configs: &[(u64, u64, u64)] = &[
        (16, 12, 28 * LAMBDA + 2 * 16 + 4 * 12 + 897),
        (37, 12, LAMBDA * (37 + 29) + 18 * 37 + 4 * 12 + 897),
    ];
    for &(l, f, cap) in configs {
        let out = std::env::temp_dir().join(format!("acceptance-rexp-{l}.json"));
        let out_s = out.to_str().unwrap().to_owned();
        let run = cli(&[
            "bench", "rexp", "--l", &l.to_string(), "--f", &f.to_string(), "--runs", "8",
            "--batch", "8", "--seed", "7", "--format", "json", "--out", &out_s,
        ]);
        if run.code != 0 {
            errs.push(format!("bench rexp l={l}: exit {} ({})", run.code, run.stderr.trim()));
            continue;
        }
        let rows: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
        let got = rows[0]["modeled_bits_per_run"].as_u64().unwrap();
        if got > cap {
            errs.push(format!("l={l} f={f}: modeled {got} bits per run, cap {cap}"));
        }
        let _ = std::fs::remove_file(&out);
    }
    report(8, "negative exponential cost caps", errs);
}

// ---------------------------------------------------------------------------
// 9. Softmax at desk scale: 128 rows of 768 logits at l = 37, f = 12. The
// suite checks every decoded row sum against 1 +- 0.01, argmax agreement on
// clear-margin rows, and per-element error; it must finish inside the
// wall-clock budget in-memory.
#[test]
fn a09_softmax_desk_scale() {
    let started = Instant::now();
    let mut errs = Vec::new();
    check_suite(
        &["verify", "softmax", "--rows", "128", "--cols", "768", "--seed", "7"],
        Some(128 * 768 + 128),
        &mut errs,
    );
    let elapsed = started.elapsed().as_secs();
    if elapsed >= SOFTMAX_BUDGET_SECS {
        errs.push(format!("softmax took {elapsed}s, budget {SOFTMAX_BUDGET_SECS}s"));
    }
    report(9, "softmax at desk scale", errs);
}

// ---------------------------------------------------------------------------
// 10. Transport equivalence: for every protocol, a seeded two-process TCP
// session must reproduce the in-memory session record field by field —
// handshake digest, rounds, modeled bits, actual bytes on the wire, and the
// output-share hash — for both roles.
#[test]
fn a10_transport_equivalence() {
    let mut errs = Vec::new();
    let protos: &[(&str, &[&str])] = &[
        ("mw", &["--batch", "64"]),
        ("mw-conv", &["--batch", "64"]),
        ("div", &["--batch", "64"]),
        ("trunc", &["--batch", "64"]),
        ("rexp", &["--batch", "64"]),
        ("exp", &["--batch", "64"]),
        ("sin", &["--batch", "64"]),
        ("recip", &["--batch", "16"]),
        ("softmax", &["--rows", "4", "--cols", "16"]),
    ];
    let keys = ["digest", "rounds", "modeled_bits", "actual_bytes", "output_hash"];
    for (proto, extra) in protos {
        let mut base = vec!["party", proto];
        base.extend_from_slice(extra);
        base.extend_from_slice(&["--seed", "5"]);

        let mut mem_args = base.clone();
        mem_args.extend_from_slice(&["--role", "both"]);
        let mem_run = cli(&mem_args);
        if mem_run.code != 0 {
            errs.push(format!("{proto}: in-memory run failed ({})", mem_run.stderr.trim()));
            continue;
        }
        let mem: serde_json::Value = serde_json::from_str(&mem_run.stdout).unwrap();

        // Ephemeral port: bind, read, release.
        let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
        let addr = format!("127.0.0.1:{port}");
        let mut args0 = base.clone();
        args0.extend_from_slice(&["--role", "0", "--addr", &addr]);
        let child = Command::new(bin())
            .args(&args0)
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .expect("spawn listener role");
        let mut args1 = base.clone();
        args1.extend_from_slice(&["--role", "1", "--addr", &addr]);
        let run1 = cli(&args1);
        let out0 = child.wait_with_output().expect("join listener role");
        if run1.code != 0 || !out0.status.success() {
            errs.push(format!(
                "{proto}: tcp run failed (role 0: {:?}, role 1: {})",
                String::from_utf8_lossy(&out0.stderr).trim(),
                run1.stderr.trim()
            ));
            continue;
        }
        let rec0: serde_json::Value =
            serde_json::from_slice(&out0.stdout).expect("role 0 record");
        let rec1: serde_json::Value = serde_json::from_str(&run1.stdout).expect("role 1 record");
        for rec in [&rec0[0], &rec1[0]] {
            let role = rec["role"].as_u64().unwrap() as usize;
            for key in keys {
                if rec[key] != mem[role][key] {
                    errs.push(format!(
                        "{proto} role {role}: {key} differs (tcp {} vs in-memory {})",
                        rec[key], mem[role][key]
                    ));
                }
            }
        }
    }
    report(10, "transport equivalence", errs);
}

// ---------------------------------------------------------------------------
// 11. Round counts. The four primitive waves finish in 2 rounds; the
// coefficient protocol finishes in 2 rounds on the bit-multiplication branch
// and in at most 2 + ceil(log2 w) rounds on the comparison branches, where w
// is the comparator width (the reduced-domain width, or l at the half-range
// bound).
#[test]
fn a11_round_counts() {
    let mut errs = Vec::new();
    fn check(errs: &mut Vec<String>, name: &str, got: u32, cap: u32, exact: bool) {
        if (exact && got != cap) || (!exact && got > cap) {
            let rel = if exact { "expected" } else { "cap" };
            errs.push(format!("{name}: {got} rounds, {rel} {cap}"));
        }
    }

    let (r0, _) = run_pair(31, |ctx| {
        let me = ctx.party() == Party::P0;
        let xs = vec![BoolShare(me); 8];
        gates::and_gate(ctx, &xs, &xs)
    })
    .unwrap();
    check(&mut errs, "and", r0.ledger.rounds, 2, true);

    let (r0, _) = run_pair(32, |ctx| gates::bit_mul(ctx, Party::P0, &[true; 8], 16)).unwrap();
    check(&mut errs, "bit_mul", r0.ledger.rounds, 2, true);

    let (r0, _) = run_pair(33, |ctx| {
        let me = ctx.party() == Party::P0;
        let bits = vec![BoolShare(me); 8];
        gates::b2a(ctx, &bits, 16)
    })
    .unwrap();
    check(&mut errs, "b2a", r0.ledger.rounds, 2, true);

    let (r0, _) = run_pair(34, |ctx| {
        let me = if ctx.party() == Party::P0 { 5u128 } else { 9 };
        let xs = vec![ArithShare(RingElem::new(16, me)); 8];
        let sel = vec![BoolShare(true); 8];
        gates::mux(ctx, &xs, &sel)
    })
    .unwrap();
    check(&mut errs, "mux", r0.ledger.rounds, 2, true);

    // Coefficient protocol branches at l = 37.
    let l = 37u8;
    let m = 1u128 << l;
    let half = m / 2;
    let bounds: &[(&str, u128)] = &[
        ("bit-mul", half / 2),
        ("comp", (0.9999f64 * half as f64) as u128),
        ("comp", (0.999999f64 * half as f64) as u128),
        ("comp-full", half),
    ];
    for &(want_branch, b) in bounds {
        let params = MwParams::new(l, 2, b).unwrap();
        if params.branch_name() != want_branch {
            errs.push(format!("bound {b}: branch {} (expected {want_branch})", params.branch_name()));
            continue;
        }
        // Comparator width: the reduced domain needs ceil(log2 K) bits, one
        // more when K is a power of two and the divisor does not divide the
        // modulus; the half-range bound compares full ring words.
        let cap = match want_branch {
            "bit-mul" => 2,
            "comp-full" => 2 + ceil_log2(l as u128),
            _ => {
                let a = m - 2 * b;
                let k = m / a;
                let lstar = ceil_log2(k);
                let w = if k.is_power_of_two() && m % a != 0 { lstar + 1 } else { lstar };
                2 + ceil_log2(w as u128)
            }
        };
        let mut rng = ChaCha20Rng::seed_from_u64(35);
        let pairs: Vec<(u128, u128)> = (0..8)
            .map(|_| {
                let int = rng.gen_range(-(b as i128 - 1)..b as i128);
                let a = rng.gen::<u128>() & width_mask(l);
                (a, RingElem::from_signed(l, int).value().wrapping_sub(a) & width_mask(l))
            })
            .collect();
        let (r0, _) = run_pair(36, move |ctx| {
            let mine: Vec<ArithShare> = pairs
                .iter()
                .map(|&(x0, x1)| {
                    ArithShare(RingElem::new(l, if ctx.party() == Party::P0 { x0 } else { x1 }))
                })
                .collect();
            mw::pi_mw(ctx, &params, &mine)
        })
        .unwrap();
        check(
            &mut errs,
            &format!("coefficient {want_branch} bound {b}"),
            r0.ledger.rounds,
            cap,
            want_branch == "bit-mul",
        );
    }

    report(11, "round counts", errs);
}
