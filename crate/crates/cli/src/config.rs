//! `key = value` settings files.
//!
//! One setting per line, `#` starts a comment, keys are the long flag names
//! without the leading dashes (`_` and `-` are interchangeable). Command-line
//! flags take precedence over file values, which take precedence over the
//! built-in defaults.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};

/// Every key any subcommand understands.
pub const KNOWN_KEYS: &[&str] = &[
    "frame-kind",
    "gamma",
    "channel",
    "ebn0-db",
    "bsc-p",
    "distance-m",
    "tx-power-dbm",
    "tx-gain-dbi",
    "rx-gain-dbi",
    "carrier-hz",
    "bandwidth-hz",
    "noise-figure-db",
    "extra-loss-db",
    "frames",
    "target-ber",
    "ebn0-per-info-bit",
    "bit-offset",
    "execution",
    "param",
    "values",
    "p",
    "gammas",
    "preset",
    "capacity-bytes",
    "upper-threshold",
    "lower-threshold",
    "write-clock-hz",
    "read-clock-hz",
    "resume-latency-cycles",
    "flow-control",
    "pattern",
    "active",
    "period",
    "cycles",
    "format",
];

#[derive(Debug, Default, Clone)]
pub struct Settings {
    values: BTreeMap<String, (String, usize)>,
}

impl Settings {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in config {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("line {line_no}: expected key = value"))?;
            let key = k.trim().replace('_', "-");
            if !KNOWN_KEYS.contains(&key.as_str()) {
                bail!("line {line_no}: unknown key {key:?}");
            }
            if values
                .insert(key.clone(), (v.trim().to_string(), line_no))
                .is_some()
            {
                bail!("line {line_no}: duplicate key {key:?}");
            }
        }
        Ok(Settings { values })
    }

    /// `flag` if given, else the parsed file value for `key`, else `None`.
    pub fn pick<T>(&self, flag: Option<T>, key: &str) -> Result<Option<T>>
    where
        T: FromStr,
        T::Err: std::fmt::Display,
    {
        debug_assert!(KNOWN_KEYS.contains(&key), "{key}");
        if flag.is_some() {
            return Ok(flag);
        }
        match self.values.get(key) {
            None => Ok(None),
            Some((v, line)) => v
                .parse()
                .map(Some)
                .map_err(|e| anyhow!("config line {line}: {key} = {v:?}: {e}")),
        }
    }

    /// [`Settings::pick`] with a fallback default.
    pub fn pick_or<T>(&self, flag: Option<T>, key: &str, default: T) -> Result<T>
    where
        T: FromStr,
        T::Err: std::fmt::Display,
    {
        Ok(self.pick(flag, key)?.unwrap_or(default))
    }
}

/// A list of numbers: `a,b,c` or an inclusive range `start:stop:step`.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueList(pub Vec<f64>);

impl FromStr for ValueList {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.contains(':') {
            let parts: Vec<f64> = s
                .split(':')
                .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
                .collect::<Result<_, _>>()?;
            let [start, stop, step] = parts[..] else {
                return Err("range must be start:stop:step".into());
            };
            if step.is_nan()
                || step <= 0.0
                || !start.is_finite()
                || !stop.is_finite()
                || stop < start
            {
                return Err("range needs finite start <= stop and step > 0".into());
            }
            // Index-based so that points do not accumulate rounding drift.
            let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
            return Ok(ValueList(
                (0..count).map(|i| start + i as f64 * step).collect(),
            ));
        }
        s.split(',')
            .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
            .collect::<Result<Vec<_>, _>>()
            .map(ValueList)
    }
}
