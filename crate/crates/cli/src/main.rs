use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand};
use ringbid_core::auction::{Announcement, BidMessage};
use ringbid_core::group::GroupParams;
use ringbid_core::harness::{
    codec, derive_rng, report_efficiency, run_scenario, run_scenario_with_params,
    verify_transcript, ScenarioConfig, ScenarioRun,
};
use ringbid_core::registry::{BulletinBoard, EntryKind};
use ringbid_core::ringsig::{self, PublicParams, TraceKey};

#[derive(Parser)]
#[command(
    name = "ringbid",
    version,
    about = "Conditionally anonymous English auction simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a group and public parameters.
    Setup {
        #[arg(long)]
        p_bits: usize,
        #[arg(long)]
        q_bits: usize,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Public parameter file to write.
        #[arg(long)]
        out: PathBuf,
        /// Trace key file to write; defaults to `<out>.tracekey`.
        #[arg(long)]
        tracekey_out: Option<PathBuf>,
    },
    /// Run a scenario and write its bulletin board transcript.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Print per-phase operation counts and the signing cost table.
        #[arg(long)]
        counts: bool,
        #[arg(long)]
        params_out: Option<PathBuf>,
        #[arg(long)]
        tracekey_out: Option<PathBuf>,
    },
    /// Replay a transcript using public data only.
    Verify {
        #[arg(long)]
        transcript: PathBuf,
    },
    /// Find the ring position and key that signed a posted bid.
    Trace {
        #[arg(long)]
        transcript: PathBuf,
        #[arg(long)]
        seq: u64,
        #[arg(long)]
        params: PathBuf,
        #[arg(long)]
        tracekey: PathBuf,
    },
}

enum Failure {
    /// Exit code 1.
    Rejected(anyhow::Error),
    /// Exit code 2.
    Usage(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Usage(e)
    }
}

fn read(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write(path: &Path, contents: &str) -> anyhow::Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn load_params(path: &Path) -> anyhow::Result<PublicParams> {
    codec::params_from_text(&read(path)?).with_context(|| format!("parsing {}", path.display()))
}

fn load_tracekey(path: &Path, pp: &PublicParams) -> anyhow::Result<TraceKey> {
    codec::tracekey_from_text(&read(path)?, pp.curve())
        .with_context(|| format!("parsing {}", path.display()))
}

fn default_tracekey_path(out: &Path) -> PathBuf {
    let mut p = out.as_os_str().to_owned();
    p.push(".tracekey");
    PathBuf::from(p)
}

fn setup(
    p_bits: usize,
    q_bits: usize,
    k: usize,
    seed: u64,
    out: &Path,
    tracekey_out: Option<PathBuf>,
) -> Result<(), Failure> {
    let group = GroupParams::generate(p_bits, q_bits, &mut derive_rng(seed, "group", &[]))
        .map_err(|e| anyhow!(e))?;
    let (pp, tk) =
        ringsig::setup(&group, k, &mut derive_rng(seed, "setup", &[])).map_err(|e| anyhow!(e))?;
    let tk_path = tracekey_out.unwrap_or_else(|| default_tracekey_path(out));
    write(out, &codec::params_to_text(&pp))?;
    write(&tk_path, &codec::tracekey_to_text(&tk))?;
    println!(
        "n: {} bits, ell: {} bits, k: {}",
        pp.curve().order().bits(),
        pp.curve().ell().bits(),
        k
    );
    println!("params: {}", out.display());
    println!("tracekey: {}", tk_path.display());
    Ok(())
}

fn run(
    scenario: &Path,
    out: &Path,
    counts: bool,
    params_out: Option<PathBuf>,
    tracekey_out: Option<PathBuf>,
) -> Result<(), Failure> {
    let config = ScenarioConfig::from_text(&read(scenario)?)
        .with_context(|| format!("parsing {}", scenario.display()))?;
    let base = scenario.parent().unwrap_or(Path::new("."));
    let result = match (&config.params_file, &config.tracekey_file) {
        (Some(p), Some(t)) => {
            let pp = load_params(&base.join(p))?;
            let tk = load_tracekey(&base.join(t), &pp)?;
            run_scenario_with_params(&config, pp, tk, counts)
        }
        _ => run_scenario(&config, counts),
    };
    let run = result.map_err(|e| Failure::Rejected(anyhow!(e)))?;
    write(out, &run.transcript())?;
    if let Some(p) = params_out {
        write(&p, &codec::params_to_text(&run.params))?;
    }
    if let Some(p) = tracekey_out {
        write(&p, &codec::tracekey_to_text(&run.trace_key))?;
    }
    print_run(&run, counts);
    Ok(())
}

fn print_run(run: &ScenarioRun, counts: bool) {
    println!("records: {}", run.board.len());
    for r in &run.results {
        match &r.winner {
            Some(w) => println!(
                "auction {}: winner {} at price {} (bid {}), {} skipped",
                r.auction_id,
                String::from_utf8_lossy(&w.identity),
                w.price,
                w.seq,
                r.skipped.len()
            ),
            None => println!("auction {}: no valid bid", r.auction_id),
        }
    }
    for e in &run.evictions {
        println!(
            "auction {}: bidder-{} repudiated bid {} and was evicted",
            e.auction_id, e.bidder, e.bid_seq
        );
    }
    println!("rejected bids: {}", run.rejections.len());
    if let (true, Some(report)) = (counts, &run.report) {
        println!("\n{report}\n");
        println!("{}", report_efficiency(&report.signing, run.params.k()));
    }
}

fn verify(transcript: &Path) -> Result<(), Failure> {
    let bytes =
        fs::read(transcript).with_context(|| format!("reading {}", transcript.display()))?;
    match verify_transcript(&bytes) {
        Ok(s) => {
            println!(
                "valid: {} records, {} bids, {} active keys",
                s.records, s.bids, s.active_keys
            );
            for w in &s.winners {
                println!(
                    "auction {}: winning bid {} at price {}",
                    w.auction_id, w.bid_seq, w.price
                );
            }
            if !s.invalid_signatures.is_empty() {
                println!("bids with invalid signatures: {:?}", s.invalid_signatures);
            }
            Ok(())
        }
        Err(e) => Err(Failure::Rejected(anyhow!(
            "invalid at record {}: {}",
            e.seq,
            e.reason
        ))),
    }
}

fn trace(transcript: &Path, seq: u64, params: &Path, tracekey: &Path) -> Result<(), Failure> {
    let pp = load_params(params)?;
    let tk = load_tracekey(tracekey, &pp)?;
    let board = BulletinBoard::from_text(&read(transcript)?)
        .map_err(|e| Failure::Rejected(anyhow!("transcript {e}")))?;
    let genesis = board
        .get(0)
        .filter(|e| e.kind == EntryKind::ParamsPublished);
    if genesis.map(|e| e.payload.as_slice()) != Some(codec::params_to_text(&pp).as_bytes()) {
        return Err(Failure::Usage(anyhow!(
            "parameters do not match the transcript"
        )));
    }
    let entry = board
        .get(seq)
        .ok_or_else(|| anyhow!("transcript has no record {seq}"))?;
    let payload = match entry.kind {
        EntryKind::BidPosted => entry.payload.clone(),
        EntryKind::WinnerAnnounced => {
            Announcement::from_bytes(&entry.payload)
                .map_err(|e| Failure::Rejected(anyhow!(e)))?
                .bid_payload
        }
        other => {
            return Err(Failure::Usage(anyhow!(
                "record {seq} is {other}, not a bid"
            )))
        }
    };
    let bid =
        BidMessage::from_bytes(pp.curve(), &payload).map_err(|e| Failure::Rejected(anyhow!(e)))?;
    let traced = ringsig::trace(&tk, &pp, &bid.ring, &bid.message(), &bid.signature)
        .map_err(|e| Failure::Rejected(anyhow!(e)))?;
    println!("position: {} of {}", traced.position, bid.ring.len());
    println!("pub_key: {}", hex_point(&pp, &traced.pub_key));
    Ok(())
}

fn hex_point(pp: &PublicParams, p: &ringbid_core::group::Point) -> String {
    pp.curve()
        .encode_point(p)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Setup {
            p_bits,
            q_bits,
            k,
            seed,
            out,
            tracekey_out,
        } => setup(p_bits, q_bits, k, seed, &out, tracekey_out),
        Command::Run {
            scenario,
            out,
            counts,
            params_out,
            tracekey_out,
        } => run(&scenario, &out, counts, params_out, tracekey_out),
        Command::Verify { transcript } => verify(&transcript),
        Command::Trace {
            transcript,
            seq,
            params,
            tracekey,
        } => trace(&transcript, seq, &params, &tracekey),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Rejected(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
