use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use parking_lot::Mutex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};

use super::LedgerError;

/// A delay distribution in milliseconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Delay {
    Fixed(f64),
    Uniform {
        lo: f64,
        hi: f64,
    },
    /// `exp(N(mu, sigma))` milliseconds.
    LogNormal {
        mu: f64,
        sigma: f64,
    },
}

impl Delay {
    pub const ZERO: Delay = Delay::Fixed(0.0);

    pub fn validate(&self) -> Result<(), LedgerError> {
        let params: &[f64] = match self {
            Delay::Fixed(ms) => &[*ms],
            Delay::Uniform { lo, hi } => {
                if lo > hi {
                    return Err(LedgerError::InvalidProfile(format!(
                        "uniform bounds reversed: {lo} > {hi}"
                    )));
                }
                &[*lo, *hi]
            }
            Delay::LogNormal { mu, sigma } => {
                // mu is a log-scale location and may be negative
                if !mu.is_finite() {
                    return Err(LedgerError::InvalidProfile(format!(
                        "lognormal mu must be finite: {self}"
                    )));
                }
                &[*sigma]
            }
        };
        if params.iter().all(|p| p.is_finite() && *p >= 0.0) {
            Ok(())
        } else {
            Err(LedgerError::InvalidProfile(format!(
                "delay parameters must be finite and non-negative: {self}"
            )))
        }
    }

    fn sample_ms(&self, rng: &mut impl Rng) -> f64 {
        match *self {
            Delay::Fixed(ms) => ms,
            Delay::Uniform { lo, hi } if lo == hi => lo,
            Delay::Uniform { lo, hi } => rng.random_range(lo..=hi),
            Delay::LogNormal { mu, sigma } => LogNormal::new(mu, sigma)
                .expect("validated parameters")
                .sample(rng),
        }
    }

    fn is_zero(&self) -> bool {
        matches!(self, Delay::Fixed(ms) if *ms == 0.0)
    }
}

impl fmt::Display for Delay {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Delay::Fixed(ms) => write!(f, "fixed:{ms}"),
            Delay::Uniform { lo, hi } => write!(f, "uniform:{lo}:{hi}"),
            Delay::LogNormal { mu, sigma } => write!(f, "lognormal:{mu}:{sigma}"),
        }
    }
}

impl FromStr for Delay {
    type Err = LedgerError;

    /// `fixed:<ms>`, `uniform:<lo>:<hi>` or `lognormal:<mu>:<sigma>`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || LedgerError::InvalidProfile(format!("cannot parse delay `{s}`"));
        let mut parts = s.split(':');
        let kind = parts.next().ok_or_else(bad)?;
        let nums = parts
            .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
            .collect::<Result<Vec<_>, _>>()?;
        let delay = match (kind.trim(), nums.as_slice()) {
            ("fixed", [ms]) => Delay::Fixed(*ms),
            ("uniform", [lo, hi]) => Delay::Uniform { lo: *lo, hi: *hi },
            ("lognormal", [mu, sigma]) => Delay::LogNormal {
                mu: *mu,
                sigma: *sigma,
            },
            _ => return Err(bad()),
        };
        delay.validate()?;
        Ok(delay)
    }
}

/// Delays injected before attach and fetch complete.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatencyProfile {
    pub attach: Delay,
    pub fetch: Delay,
}

impl LatencyProfile {
    pub const NONE: LatencyProfile = LatencyProfile {
        attach: Delay::ZERO,
        fetch: Delay::ZERO,
    };

    pub fn new(attach: Delay, fetch: Delay) -> Result<Self, LedgerError> {
        attach.validate()?;
        fetch.validate()?;
        Ok(Self { attach, fetch })
    }

    pub fn uniform(delay: Delay) -> Result<Self, LedgerError> {
        Self::new(delay, delay)
    }
}

impl Default for LatencyProfile {
    fn default() -> Self {
        Self::NONE
    }
}

impl fmt::Display for LatencyProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.attach == self.fetch {
            write!(f, "{}", self.attach)
        } else {
            write!(f, "attach={},fetch={}", self.attach, self.fetch)
        }
    }
}

impl FromStr for LatencyProfile {
    type Err = LedgerError;

    /// Either a single delay applied to both primitives, or
    /// `attach=<delay>,fetch=<delay>` (either side may be omitted and
    /// defaults to `fixed:0`).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if !s.contains('=') {
            return Self::uniform(s.parse()?);
        }
        let mut profile = Self::NONE;
        for part in s.split(',') {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| LedgerError::InvalidProfile(format!("cannot parse `{part}`")))?;
            match key.trim() {
                "attach" => profile.attach = value.parse()?,
                "fetch" => profile.fetch = value.parse()?,
                other => {
                    return Err(LedgerError::InvalidProfile(format!(
                        "unknown primitive `{other}`"
                    )))
                }
            }
        }
        Ok(profile)
    }
}

/// Samples delays from a profile with a seedable random source.
#[derive(Debug)]
pub struct LatencySampler {
    profile: LatencyProfile,
    rng: Mutex<ChaCha8Rng>,
}

impl LatencySampler {
    pub fn new(profile: LatencyProfile, seed: Option<u64>) -> Result<Self, LedgerError> {
        profile.attach.validate()?;
        profile.fetch.validate()?;
        let rng = match seed {
            Some(seed) => ChaCha8Rng::seed_from_u64(seed),
            None => ChaCha8Rng::from_os_rng(),
        };
        Ok(Self {
            profile,
            rng: Mutex::new(rng),
        })
    }

    pub fn none() -> Self {
        Self::new(LatencyProfile::NONE, Some(0)).expect("zero profile is valid")
    }

    pub fn profile(&self) -> &LatencyProfile {
        &self.profile
    }

    pub fn attach_delay(&self) -> Duration {
        self.sample(&self.profile.attach)
    }

    pub fn fetch_delay(&self) -> Duration {
        self.sample(&self.profile.fetch)
    }

    fn sample(&self, delay: &Delay) -> Duration {
        if delay.is_zero() {
            return Duration::ZERO;
        }
        let ms = delay.sample_ms(&mut *self.rng.lock());
        Duration::from_secs_f64(ms.max(0.0) / 1000.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_cli_grammar() {
        assert_eq!("fixed:216".parse::<Delay>().unwrap(), Delay::Fixed(216.0));
        assert_eq!(
            "uniform:5:10".parse::<Delay>().unwrap(),
            Delay::Uniform { lo: 5.0, hi: 10.0 }
        );
        assert_eq!(
            "lognormal:1.5:0.25".parse::<Delay>().unwrap(),
            Delay::LogNormal {
                mu: 1.5,
                sigma: 0.25
            }
        );
        let p: LatencyProfile = "attach=fixed:50,fetch=fixed:1".parse().unwrap();
        assert_eq!(p.attach, Delay::Fixed(50.0));
        assert_eq!(p.fetch, Delay::Fixed(1.0));
        let p: LatencyProfile = "fixed:3".parse().unwrap();
        assert_eq!(p.attach, p.fetch);
        assert_eq!(p.to_string().parse::<LatencyProfile>().unwrap(), p);
    }

    #[test]
    fn rejects_bad_profiles() {
        for bad in [
            "fixed:-1",
            "uniform:10:5",
            "uniform:-1:5",
            "lognormal:1:-0.5",
            "fixed",
            "gauss:1",
            "fixed:abc",
            "attach=fixed:1,disk=fixed:2",
        ] {
            assert!(
                matches!(
                    bad.parse::<LatencyProfile>(),
                    Err(LedgerError::InvalidProfile(_))
                ),
                "{bad} accepted"
            );
        }
        assert!(LatencyProfile::new(Delay::Fixed(f64::NAN), Delay::ZERO).is_err());
        assert!("lognormal:inf:1".parse::<LatencyProfile>().is_err());
    }

    #[test]
    fn lognormal_location_may_be_negative() {
        let p: LatencyProfile = "lognormal:-1:0.8".parse().unwrap();
        let s = LatencySampler::new(p, Some(3)).unwrap();
        let ms: Vec<f64> = (0..200)
            .map(|_| s.fetch_delay().as_secs_f64() * 1e3)
            .collect();
        assert!(ms.iter().all(|m| *m > 0.0));
        // median of exp(N(-1, 0.8)) is e^-1
        let mut sorted = ms.clone();
        sorted.sort_by(f64::total_cmp);
        assert!((sorted[100] - (-1f64).exp()).abs() < 0.1, "{}", sorted[100]);
    }

    #[test]
    fn uniform_samples_stay_in_range() {
        let sampler = LatencySampler::new(
            LatencyProfile::uniform(Delay::Uniform { lo: 5.0, hi: 10.0 }).unwrap(),
            Some(7),
        )
        .unwrap();
        for _ in 0..1000 {
            let ms = sampler.attach_delay().as_secs_f64() * 1000.0;
            assert!((5.0 - 1e-9..=10.0 + 1e-9).contains(&ms), "{ms}");
        }
    }

    #[test]
    fn seeded_sampling_is_reproducible() {
        let profile = LatencyProfile::uniform(Delay::LogNormal {
            mu: 1.0,
            sigma: 0.5,
        })
        .unwrap();
        let a = LatencySampler::new(profile, Some(42)).unwrap();
        let b = LatencySampler::new(profile, Some(42)).unwrap();
        for _ in 0..50 {
            assert_eq!(a.fetch_delay(), b.fetch_delay());
        }
    }

    #[test]
    fn zero_profile_never_sleeps() {
        let s = LatencySampler::none();
        assert_eq!(s.attach_delay(), Duration::ZERO);
        assert_eq!(s.fetch_delay(), Duration::ZERO);
    }
}
