//! `ott`: create, resolve, update and revoke OTT DIDs, benchmark the method
//! functions, and run a gateway node.
//!
//! stdout carries data only; diagnostics go to stderr. Exit codes:
//!
//! | code | meaning                                   |
//! |------|-------------------------------------------|
//! | 0    | success (including a Revoked resolution)  |
//! | 1    | unexpected I/O failure                    |
//! | 2    | usage: bad flags, DID, key or keyring     |
//! | 3    | ledger unreachable / node bind or store   |
//! | 4    | keyring file already exists               |
//! | 5    | DID not found                             |
//! | 6    | DID invalid                               |
//! | 7    | partial update (revoked, not re-created)  |

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ott_core::bench::BenchOp;
use ott_core::ledger::{LatencyProfile, DEFAULT_NODE_URL};
use ott_core::method::DEFAULT_KEY_TYPE;

#[derive(Debug, Parser)]
#[command(
    name = "ott",
    version,
    about = "OTT DID method client and gateway node"
)]
struct Cli {
    /// Gateway node URL.
    #[arg(long, global = true, env = "OTT_NODE_URL", default_value = DEFAULT_NODE_URL)]
    node: String,

    #[arg(long, global = true, value_enum, default_value_t = Output::Human)]
    output: Output,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Output {
    Human,
    Json,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Create a DID for a public key and write its keyring.
    Create(CreateArgs),
    /// Resolve a DID and print its status and document.
    Resolve {
        /// `did:ott:<64 hex>`
        did: String,
    },
    /// Revoke the DID held in a keyring.
    Revoke {
        #[arg(long)]
        keyring: PathBuf,
    },
    /// Revoke the DID held in a keyring and create its replacement.
    Update {
        #[arg(long)]
        keyring: PathBuf,
        #[command(flatten)]
        key: KeyArgs,
    },
    /// Time one method function against the in-process simulated ledger.
    Bench(BenchArgs),
    /// Run a gateway node until interrupted.
    Node(NodeArgs),
}

#[derive(Debug, Args)]
struct KeyArgs {
    /// PEM file holding the SubjectPublicKeyInfo to publish.
    #[arg(long)]
    key: PathBuf,
    /// Verification method type recorded in the document.
    #[arg(long, default_value = DEFAULT_KEY_TYPE)]
    key_type: String,
}

#[derive(Debug, Args)]
struct CreateArgs {
    #[command(flatten)]
    key: KeyArgs,
    /// Where to write the new keyring; never overwritten.
    #[arg(long, default_value = "ott-keyring.json")]
    keyring: PathBuf,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[arg(long, value_parser = parse_op)]
    op: BenchOp,
    /// Number of timed runs.
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
    n: u64,
    /// `fixed:<ms>`, `uniform:<lo>:<hi>`, `lognormal:<mu>:<sigma>` or
    /// `attach=<delay>,fetch=<delay>`.
    #[arg(long, default_value = "fixed:0", value_parser = parse_latency)]
    latency: LatencyProfile,
    /// Latency sampler seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Run calls concurrently on all cores.
    #[arg(long)]
    parallel: bool,
    /// Per-run CSV; the CDF goes to `<out>.cdf.csv`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct NodeArgs {
    #[arg(long, default_value = "127.0.0.1:14265")]
    listen: String,
    /// Store directory.
    #[arg(long, env = ott_gateway::STORE_ENV)]
    store: PathBuf,
    #[arg(long, default_value = "fixed:0", value_parser = parse_latency)]
    latency: LatencyProfile,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = ott_core::ledger::MAX_PAYLOAD)]
    max_payload: usize,
}

fn parse_op(s: &str) -> Result<BenchOp, String> {
    s.parse()
        .map_err(|e: ott_core::bench::BenchError| e.to_string())
}

fn parse_latency(s: &str) -> Result<LatencyProfile, String> {
    s.parse()
        .map_err(|e: ott_core::ledger::LedgerError| e.to_string())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            if let Some(hint) = &e.hint {
                eprintln!("hint: {hint}");
            }
            ExitCode::from(e.code)
        }
    }
}
