//! Text grammar for profiles:
//!
//! ```text
//! schwarzschild m=<float> r=<float>
//! flat r=<float>
//! conformal-series r0=<float> coeffs=[c1,c2,...]     φ = 1 + Σ cᵢ/rⁱ
//! table <path.csv>                                   header `s,rho`
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use super::{conformal_to_warped, load_tabulated, read_table, schwarzschild_profile, ConformalProfile, WarpedProfile};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum ProfileSpec {
    Schwarzschild { m: f64, r: f64 },
    Flat { r: f64 },
    ConformalSeries { r0: f64, coeffs: Vec<f64> },
    Table { path: PathBuf },
}

impl ProfileSpec {
    pub fn build(&self) -> Result<WarpedProfile> {
        match self {
            ProfileSpec::Schwarzschild { m, r } => conformal_to_warped(&schwarzschild_profile(*m, *r)?),
            ProfileSpec::Flat { r } => conformal_to_warped(&schwarzschild_profile(0.0, *r)?),
            ProfileSpec::ConformalSeries { r0, coeffs } => {
                conformal_to_warped(&ConformalProfile::series(*r0, coeffs.clone())?)
            }
            ProfileSpec::Table { path } => load_tabulated(&read_table(path)?),
        }
    }
}

fn spec_error(spec: &str, reason: impl Into<String>) -> Error {
    Error::Spec {
        spec: spec.to_string(),
        reason: reason.into(),
    }
}

/// Splits `key=value` words, keeping bracketed lists (which may contain
/// spaces) together.
fn key_values<'a>(spec: &str, rest: &'a str) -> Result<BTreeMap<&'a str, &'a str>> {
    let mut pairs = BTreeMap::new();
    let mut remaining = rest.trim();
    while !remaining.is_empty() {
        let eq = remaining
            .find('=')
            .ok_or_else(|| spec_error(spec, format!("expected key=value, found `{remaining}`")))?;
        let key = remaining[..eq].trim();
        if key.is_empty() || key.contains(char::is_whitespace) {
            return Err(spec_error(spec, format!("malformed key `{key}`")));
        }
        let after = remaining[eq + 1..].trim_start();
        let end = if after.starts_with('[') {
            after
                .find(']')
                .map(|i| i + 1)
                .ok_or_else(|| spec_error(spec, "unterminated `[`"))?
        } else {
            after.find(char::is_whitespace).unwrap_or(after.len())
        };
        if pairs.insert(key, &after[..end]).is_some() {
            return Err(spec_error(spec, format!("duplicate key `{key}`")));
        }
        remaining = after[end..].trim_start();
    }
    Ok(pairs)
}

fn take_float(spec: &str, pairs: &mut BTreeMap<&str, &str>, key: &str) -> Result<f64> {
    let raw = pairs
        .remove(key)
        .ok_or_else(|| spec_error(spec, format!("missing `{key}=`")))?;
    raw.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| spec_error(spec, format!("`{key}` is not a finite number: `{raw}`")))
}

fn take_list(spec: &str, pairs: &mut BTreeMap<&str, &str>, key: &str) -> Result<Vec<f64>> {
    let raw = pairs
        .remove(key)
        .ok_or_else(|| spec_error(spec, format!("missing `{key}=`")))?;
    let inner = raw
        .strip_prefix('[')
        .and_then(|r| r.strip_suffix(']'))
        .ok_or_else(|| spec_error(spec, format!("`{key}` must be a bracketed list")))?;
    if inner.trim().is_empty() {
        return Ok(Vec::new());
    }
    inner
        .split(',')
        .map(|item| {
            item.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| spec_error(spec, format!("bad list entry `{}`", item.trim())))
        })
        .collect()
}

fn finish(spec: &str, pairs: BTreeMap<&str, &str>) -> Result<()> {
    match pairs.keys().next() {
        Some(extra) => Err(spec_error(spec, format!("unexpected key `{extra}`"))),
        None => Ok(()),
    }
}

impl FromStr for ProfileSpec {
    type Err = Error;

    fn from_str(spec: &str) -> Result<Self> {
        let trimmed = spec.trim();
        let (kind, rest) = trimmed.split_once(char::is_whitespace).unwrap_or((trimmed, ""));
        match kind {
            "schwarzschild" => {
                let mut pairs = key_values(spec, rest)?;
                let m = take_float(spec, &mut pairs, "m")?;
                let r = take_float(spec, &mut pairs, "r")?;
                finish(spec, pairs)?;
                Ok(ProfileSpec::Schwarzschild { m, r })
            }
            "flat" => {
                let mut pairs = key_values(spec, rest)?;
                let r = take_float(spec, &mut pairs, "r")?;
                finish(spec, pairs)?;
                Ok(ProfileSpec::Flat { r })
            }
            "conformal-series" => {
                let mut pairs = key_values(spec, rest)?;
                let r0 = take_float(spec, &mut pairs, "r0")?;
                let coeffs = take_list(spec, &mut pairs, "coeffs")?;
                finish(spec, pairs)?;
                Ok(ProfileSpec::ConformalSeries { r0, coeffs })
            }
            "table" => {
                let path = rest.trim();
                if path.is_empty() {
                    return Err(spec_error(spec, "missing table path"));
                }
                Ok(ProfileSpec::Table {
                    path: PathBuf::from(path),
                })
            }
            "" => Err(spec_error(spec, "empty profile spec")),
            other => Err(spec_error(spec, format!("unknown profile kind `{other}`"))),
        }
    }
}

impl fmt::Display for ProfileSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProfileSpec::Schwarzschild { m, r } => write!(f, "schwarzschild m={m} r={r}"),
            ProfileSpec::Flat { r } => write!(f, "flat r={r}"),
            ProfileSpec::ConformalSeries { r0, coeffs } => {
                let list: Vec<String> = coeffs.iter().map(|c| c.to_string()).collect();
                write!(f, "conformal-series r0={r0} coeffs=[{}]", list.join(","))
            }
            ProfileSpec::Table { path } => write!(f, "table {}", path.display()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_each_kind() {
        assert_eq!(
            "schwarzschild m=2 r=1".parse::<ProfileSpec>().unwrap(),
            ProfileSpec::Schwarzschild { m: 2.0, r: 1.0 }
        );
        assert_eq!(
            "flat r=1.5".parse::<ProfileSpec>().unwrap(),
            ProfileSpec::Flat { r: 1.5 }
        );
        assert_eq!(
            "conformal-series r0=0.8 coeffs=[0.5, -0.02,-1e-3]"
                .parse::<ProfileSpec>()
                .unwrap(),
            ProfileSpec::ConformalSeries {
                r0: 0.8,
                coeffs: vec![0.5, -0.02, -1e-3]
            }
        );
        assert_eq!(
            "table data/profile.csv".parse::<ProfileSpec>().unwrap(),
            ProfileSpec::Table {
                path: PathBuf::from("data/profile.csv")
            }
        );
    }

    #[test]
    fn rejects_malformed_specs() {
        for bad in [
            "",
            "kerr a=1",
            "schwarzschild m=2",
            "schwarzschild m=2 r=one",
            "schwarzschild m=2 r=1 q=3",
            "flat r=inf",
            "conformal-series r0=1 coeffs=0.5",
            "conformal-series r0=1 coeffs=[0.5",
            "table",
        ] {
            assert!(bad.parse::<ProfileSpec>().is_err(), "accepted `{bad}`");
        }
    }

    #[test]
    fn builds_presets() {
        let w = "schwarzschild m=2 r=1".parse::<ProfileSpec>().unwrap().build().unwrap();
        assert_eq!(w.boundary_radius(), 4.0);
        assert!("schwarzschild m=-1 r=0.4"
            .parse::<ProfileSpec>()
            .unwrap()
            .build()
            .is_err());
    }

    proptest! {
        #[test]
        fn display_round_trips(m in -10.0f64..10.0, r in 0.01f64..100.0, coeffs in proptest::collection::vec(-5.0f64..5.0, 0..5)) {
            for spec in [
                ProfileSpec::Schwarzschild { m, r },
                ProfileSpec::Flat { r },
                ProfileSpec::ConformalSeries { r0: r, coeffs: coeffs.clone() },
            ] {
                prop_assert_eq!(spec.to_string().parse::<ProfileSpec>().unwrap(), spec);
            }
        }
    }
}
