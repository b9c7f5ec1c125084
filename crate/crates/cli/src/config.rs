//! Emulator configuration resolution: JSON config files merge under
//! explicit command-line flags, which merge under the shipped defaults.

use std::path::PathBuf;

use anyhow::{anyhow, bail, Context, Result};
use clap::Args;
use distillq_core::{BufferCapacity, EmulatorConfig, Policy, Rational};
use serde::{Deserialize, Serialize};

/// Shared emulation flags. Every field is optional; unset fields fall back
/// to the `--config` file and then the shipped defaults.
#[derive(Debug, Clone, Args)]
pub struct ConfigArgs {
    /// Production rate, `p/q` or decimal (default 16/63).
    #[arg(long, value_name = "RATE")]
    pub rate: Option<String>,

    /// Distillery policy: `stop-when-full` or `lookahead=W` (default
    /// stop-when-full).
    #[arg(long, value_name = "POLICY")]
    pub policy: Option<String>,

    /// Steps until the first distilled state is ready (default 3).
    #[arg(long, value_name = "STEPS")]
    pub warmup: Option<u32>,

    /// States pre-loaded into the buffer (default 0).
    #[arg(long, value_name = "N")]
    pub stock: Option<u32>,

    /// Progress already made on the next distillation when the warmup
    /// state completes, in steps, `p/q` or decimal (default 1/2).
    #[arg(long, value_name = "PHASE")]
    pub phase: Option<String>,

    /// JSON config file; explicit flags take precedence over its fields.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
}

/// JSON schema of `--config` files: `{"rate": "16/63", "buffer": 7 | "inf",
/// "policy": "stop-when-full" | {"lookahead": 36}, "warmup": 3, "stock": 0,
/// "phase": "1/2"}`. All fields optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    rate: Option<NumberOrText>,
    buffer: Option<BufferField>,
    policy: Option<PolicyField>,
    warmup: Option<u32>,
    stock: Option<u32>,
    phase: Option<NumberOrText>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum NumberOrText {
    Number(f64),
    Text(String),
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum BufferField {
    Count(u32),
    Text(String),
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum PolicyField {
    Name(String),
    Lookahead { lookahead: u32 },
}

/// Canonical form of the resolved config, hashed into run manifests and
/// echoed in JSON output.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct EffectiveConfig {
    pub rate: String,
    pub buffer: String,
    pub policy: String,
    pub warmup: u32,
    pub stock: u32,
    pub phase: String,
}

impl From<&EmulatorConfig> for EffectiveConfig {
    fn from(config: &EmulatorConfig) -> EffectiveConfig {
        EffectiveConfig {
            rate: format_rational(config.production_rate),
            buffer: config.buffer_capacity.to_string(),
            policy: match config.policy {
                Policy::StopWhenFull => "stop-when-full".to_string(),
                Policy::Lookahead { window } => format!("lookahead={window}"),
            },
            warmup: config.warmup_remaining,
            stock: config.initial_stock,
            phase: format_rational(config.production_phase),
        }
    }
}

pub fn format_rational(r: Rational) -> String {
    if r.is_integer() {
        format!("{}", r.numer())
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Parses `p/q` or a decimal literal into an exact rational.
pub fn parse_rational(text: &str) -> Result<Rational> {
    let text = text.trim();
    if let Some((p, q)) = text.split_once('/') {
        let p: i64 = p.trim().parse().context("rational numerator")?;
        let q: i64 = q.trim().parse().context("rational denominator")?;
        if q == 0 {
            bail!("rational denominator is zero");
        }
        return Ok(Rational::new(p, q));
    }
    if let Ok(n) = text.parse::<i64>() {
        return Ok(Rational::from_integer(n));
    }
    let value: f64 = text.parse().with_context(|| format!("not a rational: {text}"))?;
    Rational::approximate_float(value).ok_or_else(|| anyhow!("not representable: {text}"))
}

pub fn parse_capacity(text: &str) -> Result<BufferCapacity> {
    let text = text.trim();
    if text.eq_ignore_ascii_case("inf") || text.eq_ignore_ascii_case("infinite") {
        Ok(BufferCapacity::Infinite)
    } else {
        Ok(BufferCapacity::Finite(
            text.parse().with_context(|| format!("bad capacity: {text}"))?,
        ))
    }
}

pub fn parse_policy(text: &str) -> Result<Policy> {
    let text = text.trim();
    if text.eq_ignore_ascii_case("stop-when-full") {
        return Ok(Policy::StopWhenFull);
    }
    if let Some(rest) = text
        .strip_prefix("lookahead=")
        .or_else(|| text.strip_prefix("lookahead:"))
    {
        let window: u32 = rest.parse().context("lookahead window")?;
        return Ok(Policy::Lookahead { window });
    }
    bail!("unknown policy: {text} (expected stop-when-full or lookahead=W)")
}

/// Buffer range syntax: comma-separated `N`, `a..b` (inclusive), or `inf`.
pub fn parse_capacity_list(text: &str) -> Result<Vec<BufferCapacity>> {
    let mut out = Vec::new();
    for token in text.split(',') {
        let token = token.trim();
        if token.is_empty() {
            continue;
        }
        if let Some((a, b)) = token.split_once("..") {
            let a: u32 = a.trim().parse().context("range start")?;
            let b: u32 = b.trim().parse().context("range end")?;
            if a > b {
                bail!("empty range {token}");
            }
            out.extend((a..=b).map(BufferCapacity::Finite));
        } else {
            out.push(parse_capacity(token)?);
        }
    }
    if out.is_empty() {
        bail!("no capacities given");
    }
    Ok(out)
}

impl ConfigArgs {
    /// Resolves flags over the config file over the defaults, then
    /// validates. `buffer_flag` is the `--buffer` value of single-run
    /// subcommands; sweeps pass `None` (capacity comes from `--buffers`).
    pub fn resolve(&self, buffer_flag: Option<&str>) -> Result<EmulatorConfig> {
        let file: ConfigFile = match &self.config {
            Some(path) => {
                let body = std::fs::read_to_string(path)
                    .with_context(|| format!("reading config {}", path.display()))?;
                serde_json::from_str(&body)
                    .with_context(|| format!("parsing config {}", path.display()))?
            }
            None => ConfigFile::default(),
        };
        let defaults = EmulatorConfig::default();

        let rate = match (&self.rate, &file.rate) {
            (Some(flag), _) => parse_rational(flag)?,
            (None, Some(NumberOrText::Text(t))) => parse_rational(t)?,
            (None, Some(NumberOrText::Number(v))) => Rational::approximate_float(*v)
                .ok_or_else(|| anyhow!("config rate not representable"))?,
            (None, None) => defaults.production_rate,
        };
        let buffer = match (buffer_flag, &file.buffer) {
            (Some(flag), _) => parse_capacity(flag)?,
            (None, Some(BufferField::Count(b))) => BufferCapacity::Finite(*b),
            (None, Some(BufferField::Text(t))) => parse_capacity(t)?,
            (None, None) => defaults.buffer_capacity,
        };
        let policy = match (&self.policy, &file.policy) {
            (Some(flag), _) => parse_policy(flag)?,
            (None, Some(PolicyField::Name(name))) => parse_policy(name)?,
            (None, Some(PolicyField::Lookahead { lookahead })) => Policy::Lookahead {
                window: *lookahead,
            },
            (None, None) => defaults.policy,
        };
        let phase = match (&self.phase, &file.phase) {
            (Some(flag), _) => parse_rational(flag)?,
            (None, Some(NumberOrText::Text(t))) => parse_rational(t)?,
            (None, Some(NumberOrText::Number(v))) => Rational::approximate_float(*v)
                .ok_or_else(|| anyhow!("config phase not representable"))?,
            (None, None) => defaults.production_phase,
        };
        let config = EmulatorConfig {
            production_rate: rate,
            buffer_capacity: buffer,
            policy,
            warmup_remaining: self.warmup.or(file.warmup).unwrap_or(defaults.warmup_remaining),
            production_phase: phase,
            initial_stock: self.stock.or(file.stock).unwrap_or(defaults.initial_stock),
        };
        config.validate().map_err(|e| anyhow!("{e}"))?;
        Ok(config)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_forms() {
        assert_eq!(parse_rational("16/63").unwrap(), Rational::new(16, 63));
        assert_eq!(parse_rational("0.25").unwrap(), Rational::new(1, 4));
        assert_eq!(parse_rational("1").unwrap(), Rational::from_integer(1));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("x").is_err());
    }

    #[test]
    fn capacity_lists() {
        let caps = parse_capacity_list("0..3,7,inf").unwrap();
        assert_eq!(caps.len(), 6);
        assert_eq!(caps[0], BufferCapacity::Finite(0));
        assert_eq!(caps[3], BufferCapacity::Finite(3));
        assert_eq!(caps[4], BufferCapacity::Finite(7));
        assert_eq!(caps[5], BufferCapacity::Infinite);
        assert!(parse_capacity_list("5..2").is_err());
        assert!(parse_capacity_list("").is_err());
    }

    #[test]
    fn policy_forms() {
        assert_eq!(parse_policy("stop-when-full").unwrap(), Policy::StopWhenFull);
        assert_eq!(
            parse_policy("lookahead=36").unwrap(),
            Policy::Lookahead { window: 36 }
        );
        assert!(parse_policy("fifo").is_err());
    }
}
