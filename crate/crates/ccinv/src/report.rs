//! Run reports: a stable JSON schema for experiment results plus a
//! plain-text table renderer and a two-report comparison.
//!
//! Reports are the CLI's durable output. The schema is additive only;
//! optional fields are skipped when absent so old readers keep working.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which estimator produced the numbers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Correlated coupled chains.
    Cc,
    /// Independent right-hand-side sampling with an inner solver.
    Se,
    /// Exact dense factorization.
    Oracle,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Method::Cc => write!(f, "cc"),
            Method::Se => write!(f, "se"),
            Method::Oracle => write!(f, "oracle"),
        }
    }
}

/// Timing block, all in seconds of wall clock.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Timings {
    pub total_s: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub burn_in_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sampling_s: Option<f64>,
    /// Sampling seconds per post-burn-in cycle.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_cycle_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_burn_in_cycle_s: Option<f64>,
    /// Sampling seconds per unit of effective sample size.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_effective_cycle_s: Option<f64>,
}

/// One estimator run on one matrix.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub method: Method,
    pub matrix: String,
    pub order: usize,
    pub nnz: usize,
    pub complex: bool,
    pub query: String,
    pub estimate_re: f64,
    pub estimate_im: f64,
    pub mc_std_error: f64,
    pub sample_variance: f64,
    /// Burn-in cycles N (zero for the independent sampler and oracle).
    pub burn_in: usize,
    /// Post-burn-in samples, M - N.
    pub samples: usize,
    pub effective_length: f64,
    pub converged: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub empirical_std_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub replicates: Option<usize>,
    /// Inner-solver rounds per system, independent sampler only.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inner_rounds_per_system: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inner_systems: Option<usize>,
    pub noise: String,
    pub seed: u64,
    pub tolerance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub burn_in_tolerance: Option<f64>,
    pub timings: Timings,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl RunReport {
    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| Error::Report(format!("serialize report: {e}")))?;
        fs::write(path, text + "\n")?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        serde_json::from_str(&text)
            .map_err(|e| Error::Report(format!("parse {}: {e}", path.display())))
    }

    /// Plain-text summary table.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let mut row = |k: &str, v: String| {
            let _ = writeln!(out, "{k:<26} {v}");
        };
        row("method", self.method.to_string());
        row("matrix", self.matrix.clone());
        row(
            "order / nnz",
            format!("{} / {}", self.order, self.nnz),
        );
        row("query", self.query.clone());
        let estimate = if self.complex {
            format!("{:.10e} + {:.10e}i", self.estimate_re, self.estimate_im)
        } else {
            format!("{:.10e}", self.estimate_re)
        };
        row("estimate", estimate);
        row("mc std error", format!("{:.4e}", self.mc_std_error));
        if let Some(e) = self.empirical_std_error {
            row("empirical std error", format!("{:.4e}", e));
        }
        row("sample variance", format!("{:.4e}", self.sample_variance));
        row("burn-in N", self.burn_in.to_string());
        row("samples M-N", self.samples.to_string());
        row("effective length", format!("{:.1}", self.effective_length));
        if let Some(r) = self.inner_rounds_per_system {
            row("inner rounds/system", format!("{r:.1}"));
        }
        row("converged", self.converged.to_string());
        row("noise / seed", format!("{} / {}", self.noise, self.seed));
        row("total wall time", format!("{:.3} s", self.timings.total_s));
        if let Some(t) = self.timings.per_cycle_s {
            row("time per cycle", format!("{:.3e} s", t));
        }
        if let Some(t) = self.timings.per_burn_in_cycle_s {
            row("time per burn-in cycle", format!("{:.3e} s", t));
        }
        if let Some(t) = self.timings.per_effective_cycle_s {
            row("time per effective cycle", format!("{:.3e} s", t));
        }
        for n in &self.notes {
            row("note", n.clone());
        }
        out
    }
}

/// Agreement and cost comparison of two reports on the same query.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Comparison {
    pub difference_re: f64,
    pub difference_im: f64,
    /// |difference| over the combined standard error.
    pub z_score: f64,
    pub combined_std_error: f64,
    /// Wall time of the first run over the second.
    pub cpu_ratio: f64,
}

pub fn compare(a: &RunReport, b: &RunReport) -> Result<Comparison> {
    if a.order != b.order {
        return Err(Error::DimensionMismatch {
            expected: a.order,
            got: b.order,
        });
    }
    if a.query != b.query {
        return Err(Error::Report(format!(
            "reports answer different queries: {} vs {}",
            a.query, b.query
        )));
    }
    let dre = a.estimate_re - b.estimate_re;
    let dim = a.estimate_im - b.estimate_im;
    let combined = (a.mc_std_error.powi(2) + b.mc_std_error.powi(2)).sqrt();
    let z = if combined > 0.0 {
        (dre * dre + dim * dim).sqrt() / combined
    } else if dre == 0.0 && dim == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    let cpu_ratio = if b.timings.total_s > 0.0 {
        a.timings.total_s / b.timings.total_s
    } else {
        f64::INFINITY
    };
    Ok(Comparison {
        difference_re: dre,
        difference_im: dim,
        z_score: z,
        combined_std_error: combined,
        cpu_ratio,
    })
}

impl Comparison {
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<26} {:.6e} + {:.6e}i",
            "difference", self.difference_re, self.difference_im
        );
        let _ = writeln!(
            out,
            "{:<26} {:.4e}",
            "combined std error", self.combined_std_error
        );
        let _ = writeln!(out, "{:<26} {:.3}", "z-score", self.z_score);
        let _ = writeln!(out, "{:<26} {:.3}", "cpu ratio (a/b)", self.cpu_ratio);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(method: Method, value: f64, err: f64, total_s: f64) -> RunReport {
        RunReport {
            method,
            matrix: "test".into(),
            order: 10,
            nnz: 10,
            complex: false,
            query: "identity".into(),
            estimate_re: value,
            estimate_im: 0.0,
            mc_std_error: err,
            sample_variance: err * err,
            burn_in: 5,
            samples: 100,
            effective_length: 80.0,
            converged: true,
            empirical_std_error: None,
            replicates: None,
            inner_rounds_per_system: None,
            inner_systems: None,
            noise: "z2".into(),
            seed: 1,
            tolerance: 5e-5,
            burn_in_tolerance: Some(5e-5),
            timings: Timings {
                total_s,
                ..Timings::default()
            },
            notes: vec![],
        }
    }

    #[test]
    fn json_round_trip_preserves_fields() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.json");
        let mut r = sample(Method::Cc, 3.25, 0.01, 1.5);
        r.notes.push("periodic boundaries".into());
        r.save(&path).unwrap();
        let back = RunReport::load(&path).unwrap();
        assert_eq!(back.method, Method::Cc);
        assert_eq!(back.estimate_re, 3.25);
        assert_eq!(back.notes, vec!["periodic boundaries".to_string()]);
    }

    #[test]
    fn optional_fields_are_omitted_from_json() {
        let r = sample(Method::Cc, 1.0, 0.1, 1.0);
        let text = serde_json::to_string(&r).unwrap();
        assert!(!text.contains("inner_rounds_per_system"));
        assert!(!text.contains("empirical_std_error"));
        assert!(!text.contains("notes"));
    }

    #[test]
    fn compare_computes_z_score_and_cpu_ratio() {
        let a = sample(Method::Cc, 10.0, 0.3, 2.0);
        let b = sample(Method::Se, 10.5, 0.4, 8.0);
        let c = compare(&a, &b).unwrap();
        assert!((c.difference_re + 0.5).abs() < 1e-12);
        assert!((c.combined_std_error - 0.5).abs() < 1e-12);
        assert!((c.z_score - 1.0).abs() < 1e-12);
        assert!((c.cpu_ratio - 0.25).abs() < 1e-12);
    }

    #[test]
    fn compare_rejects_mismatched_queries() {
        let a = sample(Method::Cc, 1.0, 0.1, 1.0);
        let mut b = sample(Method::Se, 1.0, 0.1, 1.0);
        b.query = "diag".into();
        assert!(compare(&a, &b).is_err());
    }

    #[test]
    fn render_mentions_the_essentials() {
        let r = sample(Method::Cc, 2.0, 0.1, 1.0);
        let text = r.render();
        assert!(text.contains("method"));
        assert!(text.contains("estimate"));
        assert!(text.contains("2.0000000000e0"));
    }
}
