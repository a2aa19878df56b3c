//! Command-line driver for the two-party MW-coefficient protocol suite.
//!
//! Three subcommands share one set of protocol flags:
//!
//! - `verify` runs correctness sweeps (exhaustive where the ring is small)
//!   and exits non-zero on any failure;
//! - `bench` executes a seeded batch in-memory and emits one artifact row of
//!   modeled and actual communication cost plus accuracy;
//! - `party` runs one endpoint of a seeded TCP session (`--role 0|1`) or the
//!   whole pair in-memory (`--role both`), printing comparable JSON records
//!   so the two transports can be diffed bit-for-bit.

mod bench;
mod session;
mod verify;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use mw2pc::runtime::Party;
use serde::Serialize;
use session::Proto;
use std::io::Write;
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "mw2pc",
    version,
    about = "Secure two-party MW-coefficient protocols: verification sweeps, \
             communication benchmarks, and networked sessions"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a correctness sweep for one protocol; exits 1 on failure
    Verify {
        /// Protocol to sweep
        protocol: ProtoName,
        #[command(flatten)]
        flags: ProtoFlags,
    },
    /// Measure communication cost and accuracy on a seeded in-memory batch
    Bench {
        /// Protocol to measure
        protocol: ProtoName,
        #[command(flatten)]
        flags: ProtoFlags,
        /// Output format: table, csv, or json
        #[arg(long, default_value = "table")]
        format: String,
        /// Write the artifact to this file instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
        /// Runs the aggregate modeled-cost column is scaled to
        #[arg(long, default_value_t = 16384)]
        runs: u64,
    },
    /// Run one endpoint of a seeded session and print its JSON record
    Party {
        /// Protocol to run
        protocol: ProtoName,
        #[command(flatten)]
        flags: ProtoFlags,
        /// 0 listens, 1 connects, both runs the pair in-memory
        #[arg(long)]
        role: String,
        /// Socket address of party 0
        #[arg(long, default_value = "127.0.0.1:7677")]
        addr: String,
        /// Include the output share vector (hex) in the record
        #[arg(long)]
        emit_shares: bool,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ProtoName {
    /// MW coefficient of a bounded sharing
    Mw,
    /// MW of the reduced sharing from a wider ring
    MwConv,
    /// Faithful division by a public divisor
    Div,
    /// Faithful arithmetic right shift
    Trunc,
    /// Negative exponential e^-x
    Rexp,
    /// Natural exponential over [-4, 4)
    Exp,
    /// Sine under a share bound
    Sin,
    /// Reciprocal of a sum at or above one
    Recip,
    /// Row-wise softmax
    Softmax,
    /// Plaintext division/wrap identities (verify only)
    Lemmas,
}

#[derive(Args)]
struct ProtoFlags {
    /// Ring width in bits
    #[arg(long)]
    l: Option<u8>,
    /// Output ring width in bits
    #[arg(long)]
    lp: Option<u8>,
    /// Fraction bits of the fixed-point encoding
    #[arg(long)]
    f: Option<u8>,
    /// Output ring width of the exponential
    #[arg(long)]
    out_l: Option<u8>,
    /// Output fraction bits of the reciprocal
    #[arg(long)]
    out_f: Option<u8>,
    /// Largest supported input exponent of the reciprocal
    #[arg(long)]
    e_max: Option<u8>,
    /// Share bound: absolute value, or a fraction of L/2 when it contains '.'
    #[arg(long)]
    b: Option<String>,
    /// Public divisor
    #[arg(long)]
    d: Option<u128>,
    /// Shift amount in bits
    #[arg(long)]
    k: Option<u8>,
    /// Matrix rows
    #[arg(long)]
    rows: Option<usize>,
    /// Matrix columns
    #[arg(long)]
    cols: Option<usize>,
    /// Sample count for randomized sweeps
    #[arg(long)]
    samples: Option<usize>,
    /// Batch size for bench and party sessions
    #[arg(long)]
    batch: Option<usize>,
    /// Session seed (falls back to MW2PC_SEED, then 7)
    #[arg(long)]
    seed: Option<u64>,
}

impl ProtoFlags {
    fn seed(&self) -> u64 {
        self.seed
            .or_else(|| std::env::var("MW2PC_SEED").ok().and_then(|s| s.parse().ok()))
            .unwrap_or(7)
    }

    /// Resolves a workload with bench/party defaults.
    fn build(&self, name: ProtoName) -> Result<Proto> {
        Ok(match name {
            ProtoName::Mw => {
                let l = self.l.unwrap_or(37);
                let b = session::parse_bound(self.b.as_deref().unwrap_or("0.5"), l)?;
                Proto::Mw { l, lp: self.lp.unwrap_or(2), b }
            }
            ProtoName::MwConv => {
                let l = self.l.unwrap_or(16);
                Proto::MwConv { lr: l + 4, l, lp: self.lp.unwrap_or(2) }
            }
            ProtoName::Div => Proto::Div { l: self.l.unwrap_or(37), d: self.d.unwrap_or(7) },
            ProtoName::Trunc => {
                Proto::Trunc { l: self.l.unwrap_or(37), k: self.k.unwrap_or(12) }
            }
            ProtoName::Rexp => Proto::Rexp { l: self.l.unwrap_or(16), f: self.f.unwrap_or(12) },
            ProtoName::Exp => {
                Proto::Exp { f: self.f.unwrap_or(12), out_l: self.out_l.unwrap_or(37) }
            }
            ProtoName::Sin => {
                let l = self.l.unwrap_or(21);
                let b = session::parse_bound(self.b.as_deref().unwrap_or("1.0"), l)?;
                Proto::Sin { l, f: self.f.unwrap_or(12), b }
            }
            ProtoName::Recip => Proto::Recip {
                l: self.l.unwrap_or(37),
                f: self.f.unwrap_or(12),
                out_f: self.out_f.unwrap_or(23),
                e_max: self.e_max.unwrap_or(10),
            },
            ProtoName::Softmax => Proto::Softmax {
                rows: self.rows.unwrap_or(8),
                cols: self.cols.unwrap_or(64),
                l: self.l.unwrap_or(37),
                f: self.f.unwrap_or(12),
            },
            ProtoName::Lemmas => {
                bail!("lemmas is a plaintext identity sweep; use `mw2pc verify lemmas`")
            }
        })
    }
}

fn main() {
    if let Err(e) = real_main() {
        eprintln!("error: {e:#}");
        std::process::exit(2);
    }
}

fn real_main() -> Result<()> {
    match Cli::parse().cmd {
        Cmd::Verify { protocol, flags } => cmd_verify(protocol, &flags),
        Cmd::Bench { protocol, flags, format, out, runs } => {
            cmd_bench(protocol, &flags, &format, out.as_deref(), runs)
        }
        Cmd::Party { protocol, flags, role, addr, emit_shares } => {
            cmd_party(protocol, &flags, &role, &addr, emit_shares)
        }
    }
}

fn cmd_verify(protocol: ProtoName, flags: &ProtoFlags) -> Result<()> {
    let seed = flags.seed();
    let suite = match protocol {
        ProtoName::Mw => {
            let l = flags.l.unwrap_or(8);
            let b = flags.b.as_deref().map(|s| session::parse_bound(s, l)).transpose()?;
            verify::verify_mw(l, flags.lp.unwrap_or(2), b, seed)?
        }
        ProtoName::MwConv => {
            verify::verify_mw_conv(flags.l.unwrap_or(6), flags.lp.unwrap_or(2), seed)?
        }
        ProtoName::Lemmas => verify::verify_lemmas(flags.l.unwrap_or(8))?,
        ProtoName::Div => verify::verify_div(
            flags.l.unwrap_or(8),
            flags.d.unwrap_or(7),
            flags.samples.unwrap_or(10_000),
            seed,
        )?,
        ProtoName::Trunc => {
            let l = flags.l.unwrap_or(8);
            let k = flags.k.unwrap_or(if l <= 10 { 3 } else { 12 });
            verify::verify_trunc(l, k, flags.samples.unwrap_or(10_000), seed)?
        }
        ProtoName::Rexp => verify::verify_rexp(
            flags.l.unwrap_or(16),
            flags.f.unwrap_or(12),
            flags.samples.unwrap_or(10_000),
            seed,
        )?,
        ProtoName::Sin => {
            let l = flags.l.unwrap_or(21);
            let bounds = match flags.b.as_deref() {
                Some(s) => vec![session::parse_bound(s, l)?],
                None => sin_default_bounds(l)?,
            };
            verify::verify_sin(
                l,
                flags.f.unwrap_or(12),
                &bounds,
                flags.samples.unwrap_or(16_384),
                seed,
            )?
        }
        ProtoName::Exp => verify::verify_exp(
            flags.f.unwrap_or(12),
            flags.out_l.unwrap_or(37),
            flags.samples.unwrap_or(8_192),
            seed,
        )?,
        ProtoName::Recip => verify::verify_recip(
            flags.l.unwrap_or(37),
            flags.f.unwrap_or(12),
            flags.out_f.unwrap_or(23),
            flags.e_max.unwrap_or(10),
            flags.samples.unwrap_or(8_192),
            seed,
        )?,
        ProtoName::Softmax => verify::verify_softmax(
            flags.rows.unwrap_or(8),
            flags.cols.unwrap_or(64),
            flags.l.unwrap_or(37),
            flags.f.unwrap_or(12),
            seed,
        )?,
    };
    print!("{}", suite.render());
    if !suite.pass() {
        std::process::exit(1);
    }
    Ok(())
}

/// The standard sine bound grid: half, near-full, nearly-full, and full
/// range, as fractions of `L/2`.
fn sin_default_bounds(l: u8) -> Result<Vec<u128>> {
    ["0.5", "0.99", "0.999999", "1.0"]
        .iter()
        .map(|s| session::parse_bound(s, l))
        .collect()
}

fn cmd_bench(
    protocol: ProtoName,
    flags: &ProtoFlags,
    format: &str,
    out: Option<&std::path::Path>,
    runs: u64,
) -> Result<()> {
    let proto = flags.build(protocol)?;
    let batch = flags.batch.unwrap_or(match proto {
        Proto::Softmax { .. } => 0,
        _ => 1024,
    });
    let row = bench::run(&proto, flags.seed(), batch, runs)?;
    let format: bench::Format = format.parse()?;
    let failed = row.exact_failures.unwrap_or(0) > 0;
    match out {
        Some(path) => {
            let file = std::fs::File::create(path)
                .with_context(|| format!("create {}", path.display()))?;
            bench::write_rows(&[row], format, file)?;
        }
        None => bench::write_rows(&[row], format, std::io::stdout().lock())?,
    }
    if failed {
        bail!("exact protocol produced mismatches; see the artifact row");
    }
    Ok(())
}

/// One endpoint's record of a seeded session, printed as JSON.
#[derive(Serialize)]
struct PartyRecord {
    role: u8,
    protocol: String,
    params: String,
    seed: u64,
    batch: usize,
    digest: String,
    rounds: u32,
    modeled_bits: u64,
    actual_bytes: u64,
    output_hash: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    shares: Option<Vec<String>>,
}

fn record(
    proto: &Proto,
    seed: u64,
    batch: usize,
    role: Party,
    outcome: &mw2pc::runtime::PartyOutcome<Vec<mw2pc::sharing::ArithShare>>,
    emit_shares: bool,
) -> PartyRecord {
    PartyRecord {
        role: role.index() as u8,
        protocol: proto.name().to_string(),
        params: proto.label(),
        seed,
        batch,
        digest: format!("{:016x}", proto.digest(seed, batch)),
        rounds: outcome.ledger.rounds,
        modeled_bits: outcome.ledger.modeled_bits,
        actual_bytes: outcome.ledger.actual_bytes,
        output_hash: format!("{:016x}", session::output_hash(&outcome.output)),
        shares: emit_shares.then(|| {
            outcome.output.iter().map(|s| format!("{:x}", s.0.value())).collect()
        }),
    }
}

fn cmd_party(
    protocol: ProtoName,
    flags: &ProtoFlags,
    role: &str,
    addr: &str,
    emit_shares: bool,
) -> Result<()> {
    let proto = flags.build(protocol)?;
    let seed = flags.seed();
    let batch = flags.batch.unwrap_or(match proto {
        Proto::Softmax { .. } => 0,
        _ => 256,
    });
    let records = match role {
        "both" => {
            let (_, r0, r1) = session::run_local(&proto, seed, batch)?;
            vec![
                record(&proto, seed, batch, Party::P0, &r0, emit_shares),
                record(&proto, seed, batch, Party::P1, &r1, emit_shares),
            ]
        }
        "0" | "1" => {
            let me = if role == "0" { Party::P0 } else { Party::P1 };
            let outcome = session::run_tcp(&proto, seed, batch, me, addr)?;
            vec![record(&proto, seed, batch, me, &outcome, emit_shares)]
        }
        other => bail!("role {other:?} must be 0, 1, or both"),
    };
    let mut stdout = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut stdout, &records).context("party records")?;
    writeln!(stdout)?;
    Ok(())
}
