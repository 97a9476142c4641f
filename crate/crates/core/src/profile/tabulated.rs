use std::path::Path;
use std::sync::Arc;

use serde::Deserialize;

use super::{Jet, ProfileSource, RadialChart, WarpedProfile};
use crate::error::{Error, Result};

pub const MIN_TABLE_SAMPLES: usize = 8;

/// Largest allowed `|ρ'/1 - 1|` and `|ρ/σ - 1|` over the final samples,
/// where `σ` is arclength shifted so that `σ(s0) = ρ(s0)`.
const TABLE_AF_TOL: f64 = 1e-2;

/// Monotone cubic Hermite interpolant of `(s, ρ)` samples, continued past the
/// last sample by `ρ = s + a`.
#[derive(Debug, Clone)]
pub struct TabulatedChart {
    s: Vec<f64>,
    rho: Vec<f64>,
    slopes: Vec<f64>,
    tail_offset: f64,
}

/// Derivative at `nodes[k]` of the polynomial interpolating all `nodes`.
fn lagrange_slope(xs: &[f64], ys: &[f64], k: usize) -> f64 {
    let xk = xs[k];
    let mut total = 0.0;
    for j in 0..xs.len() {
        let weight = if j == k {
            xs.iter()
                .enumerate()
                .filter(|&(m, _)| m != k)
                .map(|(_, &xm)| 1.0 / (xk - xm))
                .sum()
        } else {
            let num: f64 = xs
                .iter()
                .enumerate()
                .filter(|&(m, _)| m != j && m != k)
                .map(|(_, &xm)| xk - xm)
                .product();
            let den: f64 = xs
                .iter()
                .enumerate()
                .filter(|&(m, _)| m != j)
                .map(|(_, &xm)| xs[j] - xm)
                .product();
            num / den
        };
        total += weight * ys[j];
    }
    total
}

/// Clamp `d` into the monotone region `[0, 3 |secant|]` with the secant's sign.
fn clamp_monotone(d: f64, secants: &[f64]) -> f64 {
    let sign = secants[0].signum();
    if secants.iter().any(|&m| m == 0.0 || m.signum() != sign) {
        return 0.0;
    }
    let bound = 3.0 * secants.iter().fold(f64::INFINITY, |acc, m| acc.min(m.abs()));
    sign * (sign * d).clamp(0.0, bound)
}

impl TabulatedChart {
    fn new(samples: &[(f64, f64)]) -> Self {
        let s: Vec<f64> = samples.iter().map(|p| p.0).collect();
        let rho: Vec<f64> = samples.iter().map(|p| p.1).collect();
        let n = s.len();
        let secants: Vec<f64> = (0..n - 1).map(|i| (rho[i + 1] - rho[i]) / (s[i + 1] - s[i])).collect();
        let slopes = (0..n)
            .map(|k| {
                let lo = k.saturating_sub(2).min(n - 5);
                let raw = lagrange_slope(&s[lo..lo + 5], &rho[lo..lo + 5], k - lo);
                let neighbours: &[f64] = if k == 0 {
                    &secants[..1]
                } else if k == n - 1 {
                    &secants[n - 2..]
                } else {
                    &secants[k - 1..=k]
                };
                clamp_monotone(raw, neighbours)
            })
            .collect();
        TabulatedChart {
            tail_offset: rho[n - 1] - s[n - 1],
            s,
            rho,
            slopes,
        }
    }

    pub fn samples(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.s.iter().copied().zip(self.rho.iter().copied())
    }
}

impl RadialChart for TabulatedChart {
    fn start(&self) -> f64 {
        self.s[0]
    }

    fn radius(&self, x: f64) -> Jet {
        let n = self.s.len();
        if x >= self.s[n - 1] {
            return Jet::new(x + self.tail_offset, 1.0, 0.0);
        }
        let i = self.s.partition_point(|&k| k <= x).saturating_sub(1).min(n - 2);
        let h = self.s[i + 1] - self.s[i];
        let t = (x - self.s[i]) / h;
        let (y0, y1) = (self.rho[i], self.rho[i + 1]);
        let (m0, m1) = (self.slopes[i] * h, self.slopes[i + 1] * h);
        let t2 = t * t;
        let t3 = t2 * t;
        let value =
            (2.0 * t3 - 3.0 * t2 + 1.0) * y0 + (t3 - 2.0 * t2 + t) * m0 + (-2.0 * t3 + 3.0 * t2) * y1 + (t3 - t2) * m1;
        let d1 = (6.0 * t2 - 6.0 * t) * y0
            + (3.0 * t2 - 4.0 * t + 1.0) * m0
            + (-6.0 * t2 + 6.0 * t) * y1
            + (3.0 * t2 - 2.0 * t) * m1;
        let d2 = (12.0 * t - 6.0) * y0 + (6.0 * t - 4.0) * m0 + (-12.0 * t + 6.0) * y1 + (6.0 * t - 2.0) * m1;
        Jet::new(value, d1 / h, d2 / (h * h))
    }

    fn stretch(&self, _x: f64) -> Jet {
        Jet::constant(1.0)
    }

    fn length_scale(&self) -> f64 {
        self.rho[0]
    }
}

/// Builds a warped profile from `(s, ρ)` samples.
///
/// Requires at least [`MIN_TABLE_SAMPLES`] samples, strictly increasing `s`,
/// positive `ρ`, and final samples that are already close to flat (slope and
/// ratio within 1%).
pub fn load_tabulated(samples: &[(f64, f64)]) -> Result<WarpedProfile> {
    let n = samples.len();
    if n < MIN_TABLE_SAMPLES {
        return Err(Error::InvalidProfile(format!(
            "{n} samples given, at least {MIN_TABLE_SAMPLES} are needed"
        )));
    }
    if samples.iter().any(|&(s, r)| !(s.is_finite() && r.is_finite())) {
        return Err(Error::InvalidProfile("samples must be finite".into()));
    }
    if let Some(w) = samples.windows(2).find(|w| w[1].0 <= w[0].0) {
        return Err(Error::InvalidProfile(format!(
            "s must be strictly increasing (found {} then {})",
            w[0].0, w[1].0
        )));
    }
    if let Some(&(s, r)) = samples.iter().find(|p| p.1 <= 0.0) {
        return Err(Error::InvalidProfile(format!("ρ({s}) = {r} is not positive")));
    }

    let (s0, rho0) = samples[0];
    let (s_last, rho_last) = samples[n - 1];
    let (s_prev, rho_prev) = samples[n - 2];
    let slope = (rho_last - rho_prev) / (s_last - s_prev);
    let shifted = s_last - s0 + rho0;
    if (slope - 1.0).abs() > TABLE_AF_TOL || (rho_last / shifted - 1.0).abs() > TABLE_AF_TOL {
        return Err(Error::NotAsymptoticallyFlat(format!(
            "final samples are not in the flat regime (slope {slope}, ρ/σ = {})",
            rho_last / shifted
        )));
    }

    let chart = TabulatedChart::new(samples);
    WarpedProfile::from_chart(Arc::new(chart), s0, ProfileSource::Tabulated { samples: n })
}

#[derive(Debug, Deserialize)]
struct Row {
    s: f64,
    rho: f64,
}

/// Reads an `s,rho` CSV table; lines starting with `#` are ignored.
pub fn read_table(path: &Path) -> Result<Vec<(f64, f64)>> {
    let table_error = |reason: String| Error::Table {
        path: path.display().to_string(),
        reason,
    };
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| table_error(e.to_string()))?;
    let headers = reader.headers().map_err(|e| table_error(e.to_string()))?.clone();
    if headers.len() != 2 || &headers[0] != "s" || &headers[1] != "rho" {
        return Err(table_error(format!(
            "expected header `s,rho`, found `{}`",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    reader
        .deserialize::<Row>()
        .map(|row| row.map(|r| (r.s, r.rho)).map_err(|e| table_error(e.to_string())))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat_samples(n: usize) -> Vec<(f64, f64)> {
        (0..n)
            .map(|i| {
                let s = 1.0 + 10f64.powf(i as f64 / 4.0) - 1.0;
                (s, s)
            })
            .collect()
    }

    #[test]
    fn too_few_samples() {
        let err = load_tabulated(&[(1.0, 1.0), (2.0, 2.0)]).unwrap_err();
        assert!(matches!(err, Error::InvalidProfile(_)));
    }

    #[test]
    fn unsorted_samples() {
        let mut samples = flat_samples(12);
        samples.swap(3, 4);
        assert!(matches!(load_tabulated(&samples), Err(Error::InvalidProfile(_))));
    }

    #[test]
    fn non_flat_tail_is_refused() {
        let samples: Vec<(f64, f64)> = (1..=20).map(|i| (i as f64, (i * i) as f64)).collect();
        assert!(matches!(load_tabulated(&samples), Err(Error::NotAsymptoticallyFlat(_))));
    }

    #[test]
    fn linear_data_is_reproduced_exactly() {
        let w = load_tabulated(&flat_samples(24)).unwrap();
        for s in [1.0, 1.3, 7.0, 55.5, 1e7] {
            let sample = w.sample_chart(s);
            assert!((sample.rho - s).abs() < 1e-9 * s, "{s}: {}", sample.rho);
            assert!((sample.rho_s - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn monotone_data_stays_monotone() {
        // A steep step embedded in monotone data must not overshoot.
        let mut samples: Vec<(f64, f64)> = (0..12).map(|i| (1.0 + i as f64, 1.0 + i as f64)).collect();
        for p in samples.iter_mut().skip(5) {
            p.1 += 5.0;
        }
        samples.extend((12..40).map(|i| (1.0 + i as f64 * 100.0, 6.0 + i as f64 * 100.0)));
        let chart = TabulatedChart::new(&samples);
        let mut last = 0.0;
        for k in 0..2000 {
            let x = 1.0 + k as f64 * 0.006;
            let v = chart.radius(x).value;
            assert!(v >= last - 1e-12, "overshoot at {x}");
            last = v;
        }
    }
}
