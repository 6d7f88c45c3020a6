use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::Duration;

use ott_core::bench::{self, BenchConfig};
use ott_core::index::Did;
use ott_core::ledger::{FaultInjector, HttpLedger, Ledger, LedgerError};
use ott_core::method::{self, AuthKey, DidKeyRing, KeyringError, MethodError, ResolutionStatus};
use ott_gateway::{GatewayConfig, GatewayError};
use serde_json::json;

use crate::{BenchArgs, Cli, Command, CreateArgs, KeyArgs, NodeArgs, Output};

/// Attach budget for the ledger client; unset in normal use. Lets tests
/// fail a ledger write mid-operation without a special build.
const FAULT_ENV: &str = "OTT_FAULT_ATTACH_LIMIT";

pub struct CliError {
    pub code: u8,
    pub message: String,
    pub hint: Option<String>,
}

impl CliError {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
            hint: None,
        }
    }

    fn usage(message: impl Into<String>) -> Self {
        Self::new(2, message)
    }
}

impl From<LedgerError> for CliError {
    fn from(e: LedgerError) -> Self {
        Self::new(3, format!("ledger: {e}"))
    }
}

impl From<MethodError> for CliError {
    fn from(e: MethodError) -> Self {
        match e {
            MethodError::Ledger(e) => e.into(),
            MethodError::PartialUpdate { revoked, source } => Self {
                code: 7,
                message: format!("{revoked} was revoked but no replacement was created: {source}"),
                hint: Some(
                    "the keyring still holds the revoked DID; run `ott create --key <pem>` \
                     to publish a replacement"
                        .into(),
                ),
            },
            other => Self::usage(other.to_string()),
        }
    }
}

impl From<KeyringError> for CliError {
    fn from(e: KeyringError) -> Self {
        let code = if matches!(e, KeyringError::Exists(_)) {
            4
        } else {
            2
        };
        Self::new(code, e.to_string())
    }
}

fn io_error(context: &Path, e: io::Error) -> CliError {
    CliError::new(1, format!("{}: {e}", context.display()))
}

fn emit(output: Output, human: impl FnOnce() -> String, value: serde_json::Value) {
    match output {
        Output::Human => println!("{}", human()),
        Output::Json => println!("{value}"),
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let Cli {
        node,
        output,
        command,
    } = cli;
    match command {
        Command::Create(args) => create(&ledger(&node)?, output, args),
        Command::Resolve { did } => resolve(&ledger(&node)?, output, &did),
        Command::Revoke { keyring } => revoke(&ledger(&node)?, output, &keyring),
        Command::Update { keyring, key } => update(&ledger(&node)?, output, &keyring, &key),
        Command::Bench(args) => run_bench(output, args),
        Command::Node(args) => run_node(output, args),
    }
}

fn ledger(node: &str) -> Result<Box<dyn Ledger>, CliError> {
    let rest = node
        .strip_prefix("http://")
        .ok_or_else(|| CliError::usage(format!("node URL `{node}` must start with http://")))?;
    if rest.trim_end_matches('/').is_empty() {
        return Err(CliError::usage(format!("node URL `{node}` has no host")));
    }
    let http = HttpLedger::connect(node);
    match std::env::var(FAULT_ENV) {
        Ok(limit) => {
            let limit: u64 = limit
                .parse()
                .map_err(|_| CliError::usage(format!("{FAULT_ENV} must be an integer")))?;
            let faulty = FaultInjector::new(http);
            faulty.fail_attaches_after(limit);
            Ok(Box::new(faulty))
        }
        Err(_) => Ok(Box::new(http)),
    }
}

fn load_key(args: &KeyArgs) -> Result<AuthKey, CliError> {
    let text = fs::read_to_string(&args.key)
        .map_err(|e| CliError::usage(format!("cannot read key {}: {e}", args.key.display())))?;
    AuthKey::from_pem(args.key_type.clone(), &text)
        .map_err(|e| CliError::usage(format!("key {}: {e}", args.key.display())))
}

fn create(ledger: &dyn Ledger, output: Output, args: CreateArgs) -> Result<(), CliError> {
    let auth = load_key(&args.key)?;
    // refuse before touching the ledger; save_new re-checks atomically
    if args.keyring.exists() {
        return Err(KeyringError::Exists(args.keyring).into());
    }
    let ring = method::create(&auth, ledger)?;
    ring.save_new(&args.keyring)?;
    emit(
        output,
        || ring.did().to_string(),
        json!({"did": ring.did().uri(), "keyring": args.keyring}),
    );
    Ok(())
}

fn resolve(ledger: &dyn Ledger, output: Output, did: &str) -> Result<(), CliError> {
    let did: Did = did.parse().map_err(|e| CliError::usage(format!("{e}")))?;
    let result = method::resolve(&did, ledger)?;
    let value = result.to_json();
    match output {
        Output::Json => println!("{value}"),
        Output::Human => {
            println!("status: {:?}", result.status);
            if let Some(doc) = &result.document {
                println!(
                    "{}",
                    serde_json::to_string_pretty(doc).expect("document serializes")
                );
            }
        }
    }
    match result.status {
        ResolutionStatus::Valid | ResolutionStatus::Revoked => Ok(()),
        ResolutionStatus::NotFound => Err(CliError::new(5, format!("{did} not found"))),
        ResolutionStatus::Invalid => Err(CliError::new(6, format!("{did} is invalid"))),
    }
}

fn revoke(ledger: &dyn Ledger, output: Output, path: &Path) -> Result<(), CliError> {
    let ring = DidKeyRing::load(path)?;
    let message_id = match method::revoke_checked(&ring, ledger) {
        Ok(id) => Some(id),
        Err(MethodError::AlreadyRevoked(did)) => {
            eprintln!("note: {did} was already revoked; nothing attached");
            None
        }
        Err(e) => return Err(e.into()),
    };
    emit(
        output,
        || format!("{} revoked", ring.did()),
        json!({
            "did": ring.did().uri(),
            "status": ResolutionStatus::Revoked,
            "messageId": message_id.map(|id| id.to_hex()),
        }),
    );
    Ok(())
}

fn update(ledger: &dyn Ledger, output: Output, path: &Path, key: &KeyArgs) -> Result<(), CliError> {
    let auth = load_key(key)?;
    let old = DidKeyRing::load(path)?;
    let new = method::update(&old, &auth, ledger)?;
    new.save_replace(path).map_err(|e| CliError {
        hint: Some(format!("new keyring contents:\n{}", new.to_json())),
        ..CliError::from(e)
    })?;
    emit(
        output,
        || new.did().to_string(),
        json!({"oldDid": old.did().uri(), "did": new.did().uri(), "keyring": path}),
    );
    Ok(())
}

pub fn cdf_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".cdf.csv");
    PathBuf::from(name)
}

fn write_csv(
    path: &Path,
    f: impl FnOnce(&mut BufWriter<File>) -> io::Result<()>,
) -> Result<(), CliError> {
    let mut w = BufWriter::new(File::create(path).map_err(|e| io_error(path, e))?);
    f(&mut w)
        .and_then(|_| w.flush())
        .map_err(|e| io_error(path, e))
}

fn run_bench(output: Output, args: BenchArgs) -> Result<(), CliError> {
    let mut config = BenchConfig::new(args.op, args.n as usize, args.latency);
    config.seed = args.seed;
    config.parallel = args.parallel;
    let report = bench::run(&config).map_err(|e| CliError::new(1, e.to_string()))?;

    let cdf = args.out.as_deref().map(cdf_path);
    if let (Some(out), Some(cdf_out)) = (&args.out, &cdf) {
        write_csv(out, |w| bench::write_runs_csv(w, &report.durations_ms))?;
        write_csv(cdf_out, |w| bench::write_cdf_csv(w, &report.cdf()))?;
    }
    let (mean, p95) = (report.mean_ms(), report.quantile_ms(0.95));
    emit(
        output,
        || format!("{} n={} mean={mean:.3} ms p95={p95:.3} ms", args.op, args.n),
        json!({
            "op": args.op.name(),
            "n": args.n,
            "latency": args.latency.to_string(),
            "meanMs": mean,
            "p95Ms": p95,
            "out": args.out,
            "cdf": cdf,
        }),
    );
    Ok(())
}

fn run_node(output: Output, args: NodeArgs) -> Result<(), CliError> {
    let stop = Arc::new(AtomicBool::new(false));
    for sig in [signal_hook::consts::SIGINT, signal_hook::consts::SIGTERM] {
        signal_hook::flag::register(sig, Arc::clone(&stop))
            .map_err(|e| CliError::new(1, format!("cannot install signal handler: {e}")))?;
    }

    let mut config = GatewayConfig::new(args.listen, &args.store);
    config.latency = args.latency;
    config.latency_seed = args.seed;
    config.max_payload = args.max_payload;
    let handle = ott_gateway::serve(config).map_err(|e| match e {
        GatewayError::InvalidConfig(_) => CliError::usage(e.to_string()),
        other => CliError::new(3, other.to_string()),
    })?;

    emit(
        output,
        || format!("listening on {}", handle.url()),
        json!({"listening": handle.url(), "store": args.store}),
    );
    io::stdout()
        .flush()
        .map_err(|e| CliError::new(1, e.to_string()))?;

    while !stop.load(Ordering::Relaxed) {
        std::thread::sleep(Duration::from_millis(50));
    }
    log::info!("signal received, shutting down");
    let records = handle.record_count();
    handle
        .shutdown()
        .map_err(|e| CliError::new(3, format!("shutdown: {e}")))?;
    eprintln!("gateway stopped cleanly with {records} records");
    Ok(())
}
