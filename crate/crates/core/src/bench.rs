//! Timing harness for the four method functions.
//!
//! Each run times one complete method call, ledger round trips included,
//! against an in-process [`MemoryLedger`] with injected latency. Results
//! are summarized as an empirical CDF `F(t) = P(T <= t)`.

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::crypto::{self, Seed};
use crate::ledger::{LatencyProfile, LedgerError, MemoryLedger};
use crate::method::{self, AuthKey, DidKeyRing, MethodError};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("run count must be at least 1")]
    NoRuns,
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error(transparent)]
    Method(#[from] MethodError),
    #[error("unknown operation `{0}` (expected create, resolve, update or revoke)")]
    UnknownOp(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BenchOp {
    Create,
    Resolve,
    Update,
    Revoke,
}

impl BenchOp {
    pub const ALL: [BenchOp; 4] = [
        BenchOp::Create,
        BenchOp::Resolve,
        BenchOp::Update,
        BenchOp::Revoke,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BenchOp::Create => "create",
            BenchOp::Resolve => "resolve",
            BenchOp::Update => "update",
            BenchOp::Revoke => "revoke",
        }
    }
}

impl fmt::Display for BenchOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BenchOp {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        BenchOp::ALL
            .into_iter()
            .find(|op| op.name() == s)
            .ok_or_else(|| BenchError::UnknownOp(s.to_owned()))
    }
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub op: BenchOp,
    pub runs: usize,
    pub latency: LatencyProfile,
    /// Seeds the latency sampler; `None` draws from the OS.
    pub seed: Option<u64>,
    pub parallel: bool,
}

impl BenchConfig {
    pub fn new(op: BenchOp, runs: usize, latency: LatencyProfile) -> Self {
        Self {
            op,
            runs,
            latency,
            seed: None,
            parallel: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub op: BenchOp,
    /// Per-run wall time in milliseconds, microsecond resolution, run order.
    pub durations_ms: Vec<f64>,
}

impl BenchReport {
    pub fn mean_ms(&self) -> f64 {
        mean(&self.durations_ms)
    }

    pub fn quantile_ms(&self, p: f64) -> f64 {
        quantile(&self.durations_ms, p)
    }

    pub fn cdf(&self) -> EmpiricalCdf {
        EmpiricalCdf::new(&self.durations_ms)
    }
}

fn to_ms(d: Duration) -> f64 {
    // whole microseconds, so the value survives a `{:.3}` round trip
    d.as_micros() as f64 / 1000.0
}

fn bench_auth_key() -> AuthKey {
    AuthKey::ed25519(crypto::keypair_from_seed(&Seed::new([0x42; 32])).public())
}

fn timed<T>(f: impl FnOnce() -> Result<T, BenchError>) -> Result<f64, BenchError> {
    let start = Instant::now();
    f()?;
    Ok(to_ms(start.elapsed()))
}

/// Runs `config.runs` timed calls of `config.op`. Setup (the DIDs that
/// resolve/revoke/update act on) happens untimed with no injected latency.
pub fn run(config: &BenchConfig) -> Result<BenchReport, BenchError> {
    if config.runs == 0 {
        return Err(BenchError::NoRuns);
    }
    let ledger = MemoryLedger::new();
    let auth = bench_auth_key();

    let fixtures: Vec<DidKeyRing> = match config.op {
        BenchOp::Create => Vec::new(),
        BenchOp::Resolve => vec![method::create(&auth, &ledger)?],
        BenchOp::Update | BenchOp::Revoke => (0..config.runs)
            .map(|_| method::create(&auth, &ledger))
            .collect::<Result<_, _>>()?,
    };
    ledger.configure_latency(config.latency, config.seed)?;

    let one = |i: usize| -> Result<f64, BenchError> {
        match config.op {
            BenchOp::Create => timed(|| Ok(method::create(&auth, &ledger)?)),
            BenchOp::Resolve => timed(|| Ok(method::resolve(fixtures[0].did(), &ledger)?)),
            BenchOp::Update => timed(|| Ok(method::update(&fixtures[i], &auth, &ledger)?)),
            BenchOp::Revoke => timed(|| Ok(method::revoke(&fixtures[i], &ledger)?)),
        }
    };

    let durations_ms = if config.parallel {
        let workers = std::thread::available_parallelism()
            .map_or(4, |n| n.get())
            .min(config.runs);
        let mut slots = vec![0.0; config.runs];
        std::thread::scope(|scope| -> Result<(), BenchError> {
            let chunk = config.runs.div_ceil(workers);
            let handles: Vec<_> = slots
                .chunks_mut(chunk)
                .enumerate()
                .map(|(c, out)| {
                    let one = &one;
                    scope.spawn(move || -> Result<(), BenchError> {
                        for (j, slot) in out.iter_mut().enumerate() {
                            *slot = one(c * chunk + j)?;
                        }
                        Ok(())
                    })
                })
                .collect();
            for h in handles {
                h.join().expect("bench worker panicked")?;
            }
            Ok(())
        })?;
        slots
    } else {
        (0..config.runs).map(one).collect::<Result<_, _>>()?
    };

    Ok(BenchReport {
        op: config.op,
        durations_ms,
    })
}

pub fn mean(samples: &[f64]) -> f64 {
    if samples.is_empty() {
        return f64::NAN;
    }
    samples.iter().sum::<f64>() / samples.len() as f64
}

/// The smallest sample `x` with at least `p * n` samples `<= x`, i.e. the
/// order statistic `x_(ceil(p n))`.
pub fn quantile(samples: &[f64], p: f64) -> f64 {
    assert!(p > 0.0 && p <= 1.0, "quantile level must be in (0, 1]");
    if samples.is_empty() {
        return f64::NAN;
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = ((p * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    sorted[rank - 1]
}

/// Step points `(t, F(t))` at each distinct sample value.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCdf {
    points: Vec<(f64, f64)>,
}

impl EmpiricalCdf {
    pub fn new(samples: &[f64]) -> Self {
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len() as f64;
        let mut points: Vec<(f64, f64)> = Vec::new();
        for (i, &t) in sorted.iter().enumerate() {
            let f = (i + 1) as f64 / n;
            match points.last_mut() {
                Some(last) if last.0 == t => last.1 = f,
                _ => points.push((t, f)),
            }
        }
        Self { points }
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    /// `F(t)`
    pub fn eval(&self, t: f64) -> f64 {
        self.points
            .iter()
            .take_while(|(x, _)| *x <= t)
            .last()
            .map_or(0.0, |(_, f)| *f)
    }
}

/// `run_index,duration_ms`
pub fn write_runs_csv(mut out: impl Write, durations_ms: &[f64]) -> io::Result<()> {
    writeln!(out, "run_index,duration_ms")?;
    for (i, d) in durations_ms.iter().enumerate() {
        writeln!(out, "{i},{d:.3}")?;
    }
    Ok(())
}

/// `t_ms,F`
pub fn write_cdf_csv(mut out: impl Write, cdf: &EmpiricalCdf) -> io::Result<()> {
    writeln!(out, "t_ms,F")?;
    for (t, f) in cdf.points() {
        writeln!(out, "{t:.3},{f}")?;
    }
    Ok(())
}
