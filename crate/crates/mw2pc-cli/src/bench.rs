//! Communication-cost benchmarking: executes a seeded batch, reads both
//! ledgers, and emits one artifact row with dual accounting — the modeled
//! OT-payload bits per run next to the bytes the transport actually moved —
//! plus accuracy statistics for the batch. Artifacts carry no wall-clock
//! fields, so a re-run with the same seed is byte-identical.

use crate::session::{self, Accuracy, Proto};
use anyhow::{bail, Context, Result};
use mw2pc::runtime::CostLedger;
use serde::Serialize;
use std::io::Write;

/// One benchmark artifact row.
#[derive(Debug, Serialize)]
pub struct BenchRow {
    /// Protocol name.
    pub protocol: String,
    /// Full parameter label.
    pub params: String,
    /// Session seed.
    pub seed: u64,
    /// Logical runs actually executed in the measured batch.
    pub executed_runs: u64,
    /// Communication rounds for the whole batch.
    pub rounds: u32,
    /// Modeled OT-payload bits for one run.
    pub modeled_bits_per_run: u64,
    /// Modeled OT-payload bits for the executed batch.
    pub modeled_bits_batch: u64,
    /// Bytes party 0 wrote to the transport (payload plus framing).
    pub actual_bytes_p0: u64,
    /// Bytes party 1 wrote to the transport (payload plus framing).
    pub actual_bytes_p1: u64,
    /// Runs the aggregate column is scaled to.
    pub target_runs: u64,
    /// Modeled MiB for `target_runs` runs.
    pub aggregate_modeled_mb: f64,
    /// Whether the aggregate was scaled beyond the executed batch.
    pub extrapolated: bool,
    /// Accuracy metric: `exact`, `ulp`, `rel`, or `abs`.
    pub acc_metric: &'static str,
    /// Worst observed error (0 for a clean exact protocol).
    pub acc_max: f64,
    /// Mean observed error.
    pub acc_avg: f64,
    /// Mismatch count for exact protocols; empty otherwise.
    pub exact_failures: Option<u64>,
    /// Per-primitive modeled totals, `name:calls:bits` separated by spaces.
    pub primitives: String,
    /// Caveats attached to this row.
    pub note: String,
}

fn primitives_summary(ledger: &CostLedger) -> String {
    ledger
        .per_primitive
        .iter()
        .map(|(name, c)| format!("{name}:{}:{}", c.calls, c.modeled_bits))
        .collect::<Vec<_>>()
        .join(" ")
}

fn note_for(proto: &Proto, per_run: u64) -> String {
    if let Proto::Mw { l, lp, b } = *proto {
        if b == 1u128 << (l - 1) {
            let mut n = format!(
                "modeled {per_run} = lambda*(l+1) + 14*l + lp prices the comparison plus its \
                 boolean-to-arithmetic conversion"
            );
            if l == 37 && lp == 37 {
                n.push_str(
                    "; reference tables quote 5254 for l=lp=37, pricing the comparison alone \
                     (open discrepancy, see README)",
                );
            }
            return n;
        }
    }
    String::new()
}

/// Runs the batch in-memory and assembles the artifact row.
pub fn run(proto: &Proto, seed: u64, batch: usize, target_runs: u64) -> Result<BenchRow> {
    let (gen, r0, r1) = session::run_local(proto, seed, batch)?;
    let outs = session::reconstruct_outputs(&r0, &r1);
    let executed = proto.runs_in_batch(batch) as u64;
    if executed == 0 {
        bail!("empty batch");
    }
    let modeled = r0.ledger.modeled_bits;
    debug_assert_eq!(modeled, r1.ledger.modeled_bits);
    let per_run = modeled / executed;
    let (acc_metric, acc_max, acc_avg, exact_failures) =
        match session::accuracy(proto, &gen, &outs)? {
            Accuracy::Exact { failures } => ("exact", 0.0, 0.0, Some(failures)),
            Accuracy::Stats { metric, stats } => (metric, stats.max, stats.avg(), None),
        };
    Ok(BenchRow {
        protocol: proto.name().to_string(),
        params: proto.label(),
        seed,
        executed_runs: executed,
        rounds: r0.ledger.rounds,
        modeled_bits_per_run: per_run,
        modeled_bits_batch: modeled,
        actual_bytes_p0: r0.ledger.actual_bytes,
        actual_bytes_p1: r1.ledger.actual_bytes,
        target_runs,
        aggregate_modeled_mb: r0.ledger.modeled_mb_for(per_run, target_runs),
        extrapolated: target_runs != executed,
        acc_metric,
        acc_max,
        acc_avg,
        exact_failures,
        primitives: primitives_summary(&r0.ledger),
        note: note_for(proto, per_run),
    })
}

/// Output encodings for artifact rows.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    /// Human-readable block.
    Table,
    /// One CSV record with a header row.
    Csv,
    /// Pretty-printed JSON array.
    Json,
}

impl std::str::FromStr for Format {
    type Err = anyhow::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "table" => Ok(Format::Table),
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => bail!("unknown format {other:?} (expected table, csv, or json)"),
        }
    }
}

/// Writes rows in the requested format.
pub fn write_rows(rows: &[BenchRow], format: Format, mut w: impl Write) -> Result<()> {
    match format {
        Format::Table => {
            for row in rows {
                writeln!(w, "protocol        {}", row.params)?;
                writeln!(w, "seed            {}", row.seed)?;
                writeln!(w, "executed runs   {}", row.executed_runs)?;
                writeln!(w, "rounds          {}", row.rounds)?;
                writeln!(
                    w,
                    "modeled bits    {} per run ({} for the batch)",
                    row.modeled_bits_per_run, row.modeled_bits_batch
                )?;
                writeln!(
                    w,
                    "actual bytes    p0={} p1={} (payload + framing)",
                    row.actual_bytes_p0, row.actual_bytes_p1
                )?;
                writeln!(
                    w,
                    "aggregate       {:.3} MiB modeled for {} runs{}",
                    row.aggregate_modeled_mb,
                    row.target_runs,
                    if row.extrapolated { " (extrapolated)" } else { "" }
                )?;
                match row.exact_failures {
                    Some(n) => writeln!(w, "accuracy        exact, {n} mismatches")?,
                    None => writeln!(
                        w,
                        "accuracy        {} max={:.4} avg={:.4}",
                        row.acc_metric, row.acc_max, row.acc_avg
                    )?,
                }
                writeln!(w, "primitives      {}", row.primitives)?;
                if !row.note.is_empty() {
                    writeln!(w, "note            {}", row.note)?;
                }
                writeln!(w)?;
            }
        }
        Format::Csv => {
            let mut csv = csv::Writer::from_writer(w);
            for row in rows {
                csv.serialize(row).context("csv row")?;
            }
            csv.flush().context("csv flush")?;
        }
        Format::Json => {
            serde_json::to_writer_pretty(&mut w, rows).context("json rows")?;
            writeln!(w)?;
        }
    }
    Ok(())
}
