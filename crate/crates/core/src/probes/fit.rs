use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959963984540054;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileSample {
    pub r: f64,
    pub value: f64,
    /// Standard error of `value`, when it is a Monte Carlo mean.
    pub stderr: Option<f64>,
}

impl ProfileSample {
    pub fn exact(r: f64, value: f64) -> Self {
        ProfileSample {
            r,
            value,
            stderr: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayProfile {
    pub samples: Vec<ProfileSample>,
    pub rate: f64,
    pub prefactor: f64,
    /// Smallest and largest `r` entering the fit.
    pub fit_window: (f64, f64),
    pub r_squared: f64,
    pub floor: f64,
    /// Standard error of the rate by the delta method, when every fitted sample has one.
    pub rate_stderr: Option<f64>,
    pub rate_ci: Option<(f64, f64)>,
}

/// Least squares fit of `ln value = ln prefactor - rate * r` over samples above `floor`.
pub fn fit_decay(samples: &[ProfileSample], floor: f64) -> Result<DecayProfile> {
    let used: Vec<&ProfileSample> = samples
        .iter()
        .filter(|s| s.value.is_finite() && s.value > floor && s.value > 0.0)
        .collect();
    if used.len() < 3 {
        return Err(Error::InsufficientSamples(format!(
            "{} of {} samples lie above the floor {floor:e}; at least 3 are needed",
            used.len(),
            samples.len()
        )));
    }
    let n = used.len() as f64;
    let xm = used.iter().map(|s| s.r).sum::<f64>() / n;
    let ym = used.iter().map(|s| s.value.ln()).sum::<f64>() / n;
    let sxx: f64 = used.iter().map(|s| (s.r - xm).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientSamples(
            "all fitted samples share one distance".into(),
        ));
    }
    let sxy: f64 = used.iter().map(|s| (s.r - xm) * (s.value.ln() - ym)).sum();
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;
    let ss_tot: f64 = used.iter().map(|s| (s.value.ln() - ym).powi(2)).sum();
    let ss_res: f64 = used
        .iter()
        .map(|s| (s.value.ln() - intercept - slope * s.r).powi(2))
        .sum();
    let r_squared = if ss_tot == 0.0 {
        1.0
    } else {
        1.0 - ss_res / ss_tot
    };
    let rate_stderr = used
        .iter()
        .map(|s| s.stderr.map(|e| ((s.r - xm) * e / s.value).powi(2)))
        .sum::<Option<f64>>()
        .map(|v| v.sqrt() / sxx);
    let rate = -slope;
    let lo = used.iter().map(|s| s.r).fold(f64::INFINITY, f64::min);
    let hi = used.iter().map(|s| s.r).fold(f64::NEG_INFINITY, f64::max);
    Ok(DecayProfile {
        samples: samples.to_vec(),
        rate,
        prefactor: intercept.exp(),
        fit_window: (lo, hi),
        r_squared,
        floor,
        rate_stderr,
        rate_ci: rate_stderr.map(|e| (rate - Z95 * e, rate + Z95 * e)),
    })
}

impl DecayProfile {
    /// Whether the confidence interval lies strictly above zero.
    pub fn rate_significant(&self) -> bool {
        matches!(self.rate_ci, Some((lo, _)) if lo > 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_exponential() {
        let s: Vec<_> = (1..=3)
            .map(|r| ProfileSample::exact(r as f64, 3.0 * (-0.7 * r as f64).exp()))
            .collect();
        let p = fit_decay(&s, 0.0).unwrap();
        assert!((p.rate - 0.7).abs() < 1e-12);
        assert!((p.prefactor - 3.0).abs() < 1e-12);
        assert!((p.r_squared - 1.0).abs() < 1e-12);
        assert!(p.rate_ci.is_none());
    }

    #[test]
    fn floor_rejects() {
        let s: Vec<_> = (1..=5)
            .map(|r| ProfileSample::exact(r as f64, 1e-20))
            .collect();
        assert!(matches!(
            fit_decay(&s, 1e-15),
            Err(Error::InsufficientSamples(_))
        ));
    }

    #[test]
    fn confidence_interval_from_errors() {
        let s: Vec<_> = (1..=5)
            .map(|r| {
                let v = (-0.4 * r as f64).exp();
                ProfileSample {
                    r: r as f64,
                    value: v,
                    stderr: Some(0.01 * v),
                }
            })
            .collect();
        let p = fit_decay(&s, 0.0).unwrap();
        let (lo, hi) = p.rate_ci.unwrap();
        assert!(lo < 0.4 && 0.4 < hi && lo > 0.0);
        assert!(p.rate_significant());
    }
}
