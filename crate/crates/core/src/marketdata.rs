//! Quote files, model configuration and result persistence.
//!
//! Maturities are calendar days converted with `day_count` (365 by default)
//! and the VIX window is `theta_days` (30). Exchange quotes in vol points
//! (15.0) are mapped to decimals (0.15) by `strike_scale`.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::KernelSpec;
use crate::lognormal::ForwardVarianceCurve;
use crate::modulated::AffineModulator;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VixOptionQuote {
    pub maturity_days: u32,
    pub strike: f64,
    pub mid_price: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bid: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ask: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub implied_vol: Option<f64>,
}

/// Quotes of one maturity, sorted by strike.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuoteSlice {
    pub maturity_days: u32,
    pub quotes: Vec<VixOptionQuote>,
}

impl QuoteSlice {
    pub fn strikes(&self) -> Vec<f64> {
        self.quotes.iter().map(|q| q.strike).collect()
    }

    pub fn prices(&self) -> Vec<f64> {
        self.quotes.iter().map(|q| q.mid_price).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Conventions {
    pub day_count: f64,
    pub theta_days: f64,
    /// Quoted strikes and prices are divided by this factor.
    pub strike_scale: f64,
}

impl Default for Conventions {
    fn default() -> Self {
        Conventions {
            day_count: 365.0,
            theta_days: 30.0,
            strike_scale: 1.0,
        }
    }
}

impl Conventions {
    pub fn year_fraction(&self, days: f64) -> f64 {
        days / self.day_count
    }

    /// VIX window `Θ` in years.
    pub fn theta(&self) -> f64 {
        self.theta_days / self.day_count
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("day_count", self.day_count),
            ("theta_days", self.theta_days),
            ("strike_scale", self.strike_scale),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Deserialize)]
struct Row {
    maturity_days: String,
    strike: String,
    mid_price: String,
    #[serde(default)]
    bid: Option<String>,
    #[serde(default)]
    ask: Option<String>,
    #[serde(default)]
    implied_vol: Option<String>,
}

fn field(line: usize, name: &str, raw: &str) -> Result<f64> {
    raw.trim().parse::<f64>().map_err(|_| Error::Parse {
        line,
        message: format!("{name} {raw:?} is not a number"),
    })
}

fn optional(line: usize, name: &str, raw: &Option<String>) -> Result<Option<f64>> {
    match raw.as_deref().map(str::trim) {
        None | Some("") => Ok(None),
        Some(s) => field(line, name, s).map(Some),
    }
}

/// Parses and groups quotes from CSV text with a header row.
pub fn parse_quotes<R: Read>(reader: R, conventions: &Conventions) -> Result<Vec<QuoteSlice>> {
    conventions.validate()?;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let scale = conventions.strike_scale;
    let mut groups: BTreeMap<u32, Vec<(usize, VixOptionQuote)>> = BTreeMap::new();
    let headers = rdr
        .headers()
        .map_err(|e| Error::Parse {
            line: 1,
            message: e.to_string(),
        })?
        .clone();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Parse {
            line: e.position().map(|p| p.line() as usize).unwrap_or(0),
            message: e.to_string(),
        })?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        let row: Row = rec.deserialize(Some(&headers)).map_err(|e| Error::Parse {
            line,
            message: e.to_string(),
        })?;
        let days = row.maturity_days.trim().parse::<u32>().map_err(|_| Error::Parse {
            line,
            message: format!("maturity_days {:?} is not a positive integer", row.maturity_days),
        })?;
        if days == 0 {
            return Err(Error::Parse {
                line,
                message: "maturity_days must be positive".into(),
            });
        }
        let strike = field(line, "strike", &row.strike)? / scale;
        if !(strike > 0.0 && strike.is_finite()) {
            return Err(Error::Parse {
                line,
                message: format!("strike must be positive, got {}", row.strike.trim()),
            });
        }
        let mid = field(line, "mid_price", &row.mid_price)? / scale;
        if !(mid >= 0.0 && mid.is_finite()) {
            return Err(Error::Parse {
                line,
                message: format!("mid_price must be >= 0, got {}", row.mid_price.trim()),
            });
        }
        let bid = optional(line, "bid", &row.bid)?.map(|v| v / scale);
        let ask = optional(line, "ask", &row.ask)?.map(|v| v / scale);
        let implied_vol = optional(line, "implied_vol", &row.implied_vol)?;
        if let (Some(b), Some(a)) = (bid, ask) {
            if b > a {
                return Err(Error::invalid(format!("line {line}: crossed quote, bid {b} > ask {a}")));
            }
        }
        if bid.is_some_and(|b| b > mid) || ask.is_some_and(|a| a < mid) {
            return Err(Error::invalid(format!("line {line}: mid {mid} outside bid/ask")));
        }
        let q = VixOptionQuote {
            maturity_days: days,
            strike,
            mid_price: mid,
            bid,
            ask,
            implied_vol,
        };
        groups.entry(days).or_default().push((line, q));
    }
    let mut out = Vec::with_capacity(groups.len());
    for (days, mut rows) in groups {
        rows.sort_by(|a, b| a.1.strike.total_cmp(&b.1.strike).then(a.0.cmp(&b.0)));
        for w in rows.windows(2) {
            if w[0].1.strike == w[1].1.strike {
                return Err(Error::invalid(format!(
                    "duplicate quote for maturity {days}d strike {} on lines {} and {}",
                    w[0].1.strike, w[0].0, w[1].0
                )));
            }
        }
        out.push(QuoteSlice {
            maturity_days: days,
            quotes: rows.into_iter().map(|(_, q)| q).collect(),
        });
    }
    Ok(out)
}

/// Loads and groups the quote file at `path`.
pub fn load_quotes(path: &Path, conventions: &Conventions) -> Result<Vec<QuoteSlice>> {
    let file = std::fs::File::open(path).map_err(|e| io_error(path, e))?;
    parse_quotes(file, conventions)
}

/// Writes quotes in the CSV schema read by [`parse_quotes`] (unscaled).
pub fn quotes_to_csv(slices: &[QuoteSlice]) -> String {
    let mut s = String::from("maturity_days,strike,mid_price,bid,ask,implied_vol\n");
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for q in slices.iter().flat_map(|sl| &sl.quotes) {
        s.push_str(&format!(
            "{},{},{},{},{},{}\n",
            q.maturity_days,
            q.strike,
            q.mid_price,
            opt(q.bid),
            opt(q.ask),
            opt(q.implied_vol)
        ));
    }
    s
}

/// Model configuration file: kernel, optional modulator and today's curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub kernel: KernelSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modulator: Option<AffineModulator>,
    pub curve: ForwardVarianceCurve,
    #[serde(default)]
    pub conventions: Conventions,
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        self.kernel.build()?;
        if let Some(m) = &self.modulator {
            m.validate()?;
        }
        self.curve.validate()?;
        self.conventions.validate()
    }
}

pub fn load_model_config(path: &Path) -> Result<ModelConfig> {
    let c: ModelConfig = load_result(path)?;
    c.validate()?;
    Ok(c)
}

fn io_error(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Writes `bytes` to `path` through a temporary file in the same directory
/// and an atomic rename.
pub fn persist_bytes(bytes: &[u8], path: &Path) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| io_error(path, e))?;
    tmp.write_all(bytes).map_err(|e| io_error(path, e))?;
    tmp.as_file().sync_all().map_err(|e| io_error(path, e))?;
    tmp.persist(path).map_err(|e| io_error(path, e.error))?;
    Ok(())
}

/// Serialises `value` as pretty JSON and persists it atomically.
pub fn persist_result<T: Serialize + ?Sized>(value: &T, path: &Path) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    persist_bytes(s.as_bytes(), path)
}

pub fn load_result<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let s = std::fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    Ok(serde_json::from_str(&s)?)
}
