//! Evaluation reports as canonical JSON: keys sorted, floats rendered
//! with six significant digits, no timestamps. Identical reports always
//! serialize to identical bytes.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use crate::error::{IoError, Result};

/// Distribution diagnostics of the final embeddings.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Diagnostics {
    pub cov_min_eig: f64,
    pub cov_max_eig: f64,
    pub cov_offdiag_mean_abs: f64,
    /// Squared 2-Wasserstein distance of the embedding distribution from
    /// the standard Gaussian.
    pub uniformity_w2: f64,
    /// Log average pairwise Gaussian potential on a normalized subsample.
    pub wang_isola: f64,
}

/// Aggregated downstream metrics over the evaluation seeds, plus the
/// resolved configuration that produced them.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EvalReport {
    pub accuracy_mean: f64,
    pub accuracy_std: f64,
    pub nmi_mean: f64,
    pub nmi_std: f64,
    pub ari_mean: f64,
    pub ari_std: f64,
    pub seeds: Vec<u64>,
    pub diagnostics: Diagnostics,
    pub config: BTreeMap<String, String>,
}

/// Six significant digits, scientific notation; deterministic bytes.
fn fmt_float(x: f64) -> String {
    format!("{x:.5e}")
}

fn json_string(s: &str) -> String {
    serde_json::to_string(s).expect("string serializes")
}

/// Renders the canonical JSON (sorted keys). Fails on non-finite metrics.
pub fn render_report(report: &EvalReport) -> Result<String> {
    let d = &report.diagnostics;
    let floats = [
        report.accuracy_mean,
        report.accuracy_std,
        report.nmi_mean,
        report.nmi_std,
        report.ari_mean,
        report.ari_std,
        d.cov_min_eig,
        d.cov_max_eig,
        d.cov_offdiag_mean_abs,
        d.uniformity_w2,
        d.wang_isola,
    ];
    if floats.iter().any(|v| !v.is_finite()) {
        return Err(IoError::format("report", "non-finite metric"));
    }

    let mut out = String::from("{\n");
    out.push_str(&format!("  \"accuracy_mean\": {},\n", fmt_float(report.accuracy_mean)));
    out.push_str(&format!("  \"accuracy_std\": {},\n", fmt_float(report.accuracy_std)));
    out.push_str(&format!("  \"ari_mean\": {},\n", fmt_float(report.ari_mean)));
    out.push_str(&format!("  \"ari_std\": {},\n", fmt_float(report.ari_std)));
    out.push_str("  \"config\": {");
    let mut first = true;
    for (k, v) in &report.config {
        if !first {
            out.push(',');
        }
        first = false;
        out.push_str(&format!("\n    {}: {}", json_string(k), json_string(v)));
    }
    if !report.config.is_empty() {
        out.push_str("\n  ");
    }
    out.push_str("},\n");
    out.push_str("  \"diagnostics\": {\n");
    out.push_str(&format!("    \"cov_max_eig\": {},\n", fmt_float(d.cov_max_eig)));
    out.push_str(&format!("    \"cov_min_eig\": {},\n", fmt_float(d.cov_min_eig)));
    out.push_str(&format!("    \"cov_offdiag_mean_abs\": {},\n", fmt_float(d.cov_offdiag_mean_abs)));
    out.push_str(&format!("    \"uniformity_w2\": {},\n", fmt_float(d.uniformity_w2)));
    out.push_str(&format!("    \"wang_isola\": {}\n", fmt_float(d.wang_isola)));
    out.push_str("  },\n");
    out.push_str(&format!("  \"nmi_mean\": {},\n", fmt_float(report.nmi_mean)));
    out.push_str(&format!("  \"nmi_std\": {},\n", fmt_float(report.nmi_std)));
    let seeds: Vec<String> = report.seeds.iter().map(u64::to_string).collect();
    out.push_str(&format!("  \"seeds\": [{}]\n", seeds.join(", ")));
    out.push_str("}\n");
    Ok(out)
}

pub fn write_report(report: &EvalReport, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let body = render_report(report)?;
    fs::write(path, body).map_err(|e| IoError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> EvalReport {
        let mut config = BTreeMap::new();
        config.insert("lr".into(), "0.001".into());
        config.insert("lambda".into(), "0.1".into());
        EvalReport {
            accuracy_mean: 0.8391,
            accuracy_std: 0.0031,
            nmi_mean: 0.6058,
            nmi_std: 0.0025,
            ari_mean: 0.5696,
            ari_std: 0.0034,
            seeds: vec![0, 1, 2],
            diagnostics: Diagnostics {
                cov_min_eig: 0.21,
                cov_max_eig: 3.4,
                cov_offdiag_mean_abs: 0.05,
                uniformity_w2: 12.0,
                wang_isola: -3.2,
            },
            config,
        }
    }

    #[test]
    fn deterministic_bytes_and_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.json");
        let b = dir.path().join("b.json");
        write_report(&sample(), &a).unwrap();
        write_report(&sample(), &b).unwrap();
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());

        let parsed: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(&a).unwrap()).unwrap();
        let acc = parsed["accuracy_mean"].as_f64().unwrap();
        assert!((acc - 0.8391).abs() < 1e-4, "six significant digits preserved");
        assert_eq!(parsed["seeds"].as_array().unwrap().len(), 3);
        assert_eq!(parsed["config"]["lr"].as_str().unwrap(), "0.001");
        assert!((parsed["diagnostics"]["cov_min_eig"].as_f64().unwrap() - 0.21).abs() < 1e-6);
    }

    #[test]
    fn keys_are_sorted() {
        let body = render_report(&sample()).unwrap();
        let keys: Vec<usize> = ["accuracy_mean", "accuracy_std", "ari_mean", "ari_std", "config", "diagnostics", "nmi_mean", "nmi_std", "seeds"]
            .iter()
            .map(|k| body.find(&format!("\"{k}\"")).expect("key present"))
            .collect();
        assert!(keys.windows(2).all(|w| w[0] < w[1]), "top-level keys sorted");
    }

    #[test]
    fn non_finite_metric_rejected() {
        let mut r = sample();
        r.nmi_mean = f64::NAN;
        assert!(render_report(&r).is_err());
        let dir = tempfile::tempdir().unwrap();
        assert!(write_report(&r, dir.path().join("x.json")).is_err());
    }
}
