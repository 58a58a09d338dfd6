//! Episode metrics: success rate, success weighted by path length, mean
//! distance-to-success over failures and escape rate.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("no episodes")]
    Empty,
    #[error("episode {index}: shortest path {value} must be positive")]
    NonPositiveShortestPath { index: usize, value: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub success: bool,
    /// Meters travelled.
    pub path_length: f64,
    /// Geodesic meters from the start to the nearest target instance.
    pub shortest_path: f64,
    /// Geodesic meters from the final position to the nearest target.
    pub final_dts: f64,
    /// Geodesic meters between start and final position.
    pub start_final_geodesic: f64,
    pub escaped: bool,
    pub steps: u32,
    pub waypoints: u32,
}

impl EpisodeResult {
    /// Per-episode SPL term in `[0, 1]`.
    pub fn spl_term(&self) -> f64 {
        if !self.success {
            return 0.0;
        }
        self.shortest_path / self.path_length.max(self.shortest_path)
    }
}

fn non_empty(results: &[EpisodeResult]) -> Result<(), MetricsError> {
    if results.is_empty() {
        Err(MetricsError::Empty)
    } else {
        Ok(())
    }
}

/// Percent.
pub fn spl(results: &[EpisodeResult]) -> Result<f64, MetricsError> {
    non_empty(results)?;
    for (index, r) in results.iter().enumerate() {
        if !(r.shortest_path > 0.0) {
            return Err(MetricsError::NonPositiveShortestPath {
                index,
                value: r.shortest_path,
            });
        }
    }
    let sum: f64 = results.iter().map(EpisodeResult::spl_term).sum();
    Ok(100.0 * sum / results.len() as f64)
}

/// Percent.
pub fn success_rate(results: &[EpisodeResult]) -> Result<f64, MetricsError> {
    non_empty(results)?;
    let wins = results.iter().filter(|r| r.success).count();
    Ok(100.0 * wins as f64 / results.len() as f64)
}

/// Mean final distance-to-success over failed episodes; `None` without failures.
pub fn dts_failures(results: &[EpisodeResult]) -> Option<f64> {
    let failed: Vec<f64> = results.iter().filter(|r| !r.success).map(|r| r.final_dts).collect();
    if failed.is_empty() {
        return None;
    }
    Some(failed.iter().sum::<f64>() / failed.len() as f64)
}

/// Percent of episodes that ended farther than the escape radius from the start.
pub fn escape_rate(results: &[EpisodeResult]) -> Result<f64, MetricsError> {
    non_empty(results)?;
    let escaped = results.iter().filter(|r| r.escaped).count();
    Ok(100.0 * escaped as f64 / results.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub n: usize,
    pub sr: f64,
    pub spl: f64,
    pub dts_f: Option<f64>,
    pub er: f64,
}

impl MetricsReport {
    pub fn compute(results: &[EpisodeResult]) -> Result<Self, MetricsError> {
        Ok(Self {
            n: results.len(),
            sr: success_rate(results)?,
            spl: spl(results)?,
            dts_f: dts_failures(results),
            er: escape_rate(results)?,
        })
    }

    pub const CSV_HEADER: &'static str = "N,SR,SPL,DTS_f,ER";

    /// `N,SR,SPL,DTS_f,ER` with one decimal place; DTS_f is empty when absent.
    pub fn csv_row(&self) -> String {
        format!(
            "{},{:.1},{:.1},{},{:.1}",
            self.n,
            self.sr,
            self.spl,
            self.dts_f.map(|d| format!("{d:.1}")).unwrap_or_default(),
            self.er
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ep(success: bool, ell: f64, rho: f64) -> EpisodeResult {
        EpisodeResult {
            success,
            path_length: rho,
            shortest_path: ell,
            final_dts: if success { 0.5 } else { 2.0 },
            start_final_geodesic: 0.0,
            escaped: false,
            steps: 0,
            waypoints: 0,
        }
    }

    #[test]
    fn spl_examples() {
        assert_eq!(spl(&[ep(true, 2.0, 4.0)]).unwrap(), 50.0);
        assert_eq!(spl(&[ep(false, 2.0, 1.0)]).unwrap(), 0.0);
        assert_eq!(spl(&[ep(true, 4.0, 4.0), ep(false, 3.0, 9.0)]).unwrap(), 50.0);
    }

    #[test]
    fn spl_rejects_bad_input() {
        assert_eq!(spl(&[]), Err(MetricsError::Empty));
        assert!(matches!(spl(&[ep(true, 0.0, 1.0)]), Err(MetricsError::NonPositiveShortestPath { index: 0, .. })));
    }

    #[test]
    fn success_rate_examples() {
        let mut v: Vec<_> = (0..10).map(|i| ep(i < 4, 1.0, 1.0)).collect();
        assert_eq!(success_rate(&v).unwrap(), 40.0);
        v.iter_mut().for_each(|e| e.success = false);
        assert_eq!(success_rate(&v).unwrap(), 0.0);
        v.iter_mut().for_each(|e| e.success = true);
        assert_eq!(success_rate(&v).unwrap(), 100.0);
    }

    #[test]
    fn dts_examples() {
        let mut a = ep(false, 1.0, 1.0);
        a.final_dts = 2.5;
        let mut b = a.clone();
        b.final_dts = 1.5;
        assert_eq!(dts_failures(&[a.clone(), b, ep(true, 1.0, 1.0)]), Some(2.0));
        assert_eq!(dts_failures(&[ep(true, 1.0, 1.0)]), None);
        a.final_dts = 6.7;
        assert_eq!(dts_failures(&[a]), Some(6.7));
    }

    #[test]
    fn escape_examples() {
        let v: Vec<_> = (0..50)
            .map(|i| EpisodeResult {
                escaped: i < 41,
                ..ep(false, 1.0, 1.0)
            })
            .collect();
        assert_eq!(escape_rate(&v).unwrap(), 82.0);
    }

    #[test]
    fn csv_row_format() {
        let r = MetricsReport::compute(&[ep(true, 2.0, 4.0), ep(false, 1.0, 1.0)]).unwrap();
        assert_eq!(r.csv_row(), "2,50.0,25.0,2.0,0.0");
    }
}
