//! Line-based `key = value` training configuration. Comments start with
//! `#`; unknown keys are rejected; command-line flags override file
//! values. Hidden sizes use the `256-256` form.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::{CliError, Result};

/// Every knob of a training run.
#[derive(Debug, Clone)]
pub struct TrainConfig {
    /// Dataset directory (the only key without a default).
    pub dataset: PathBuf,
    /// Edge-drop probability per view.
    pub p_d: f64,
    /// Feature-mask probability per view.
    pub p_m: f64,
    /// Uniformity weight.
    pub lambda: f64,
    /// Alignment weight; 1 except in ablations.
    pub align_weight: f64,
    pub lr: f64,
    pub wd: f64,
    pub epochs: usize,
    /// Hidden/output widths, e.g. `[256, 256]`.
    pub hidden: Vec<usize>,
    pub seed: u64,
    /// Eigenvalue floor for the uniformity gradient.
    pub clamp: f64,
    /// Number of evaluation seeds aggregated into the report.
    pub eval_seeds: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            dataset: PathBuf::new(),
            p_d: 0.0,
            p_m: 0.0,
            lambda: 0.1,
            align_weight: 1.0,
            lr: 1e-3,
            wd: 1e-5,
            epochs: 100,
            hidden: vec![256, 256],
            seed: 42,
            clamp: 1e-8,
            eval_seeds: 10,
        }
    }
}

fn parse_hidden(value: &str) -> Result<Vec<usize>> {
    let sizes: std::result::Result<Vec<usize>, _> =
        value.split('-').map(|t| t.trim().parse::<usize>()).collect();
    match sizes {
        Ok(v) if !v.is_empty() && v.iter().all(|&s| s > 0) => Ok(v),
        _ => Err(CliError::Config(format!("bad hidden sizes {value:?}; expected e.g. 256-256"))),
    }
}

impl TrainConfig {
    /// Parses a config file; missing keys keep their defaults.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::default();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::Config(format!(
                    "{}:{}: expected `key = value`",
                    path.display(),
                    no + 1
                )));
            };
            cfg.set(key.trim(), value.trim()).map_err(|e| {
                CliError::Config(format!("{}:{}: {e}", path.display(), no + 1))
            })?;
        }
        if cfg.dataset.as_os_str().is_empty() {
            return Err(CliError::Config(format!("{}: missing `dataset` key", path.display())));
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Sets one key from its textual form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = |what: &str| CliError::Config(format!("bad {what} value {value:?}"));
        match key {
            "dataset" => self.dataset = PathBuf::from(value),
            "p_d" => self.p_d = value.parse().map_err(|_| bad("p_d"))?,
            "p_m" => self.p_m = value.parse().map_err(|_| bad("p_m"))?,
            "lambda" => self.lambda = value.parse().map_err(|_| bad("lambda"))?,
            "align_weight" => self.align_weight = value.parse().map_err(|_| bad("align_weight"))?,
            "lr" => self.lr = value.parse().map_err(|_| bad("lr"))?,
            "wd" => self.wd = value.parse().map_err(|_| bad("wd"))?,
            "epochs" => self.epochs = value.parse().map_err(|_| bad("epochs"))?,
            "hidden" => self.hidden = parse_hidden(value)?,
            "seed" => self.seed = value.parse().map_err(|_| bad("seed"))?,
            "clamp" => self.clamp = value.parse().map_err(|_| bad("clamp"))?,
            "eval_seeds" => self.eval_seeds = value.parse().map_err(|_| bad("eval_seeds"))?,
            other => return Err(CliError::Config(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        for (name, p) in [("p_d", self.p_d), ("p_m", self.p_m)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(CliError::Config(format!("{name} = {p} outside [0, 1]")));
            }
        }
        if !(self.lambda >= 0.0) {
            return Err(CliError::Config(format!("lambda = {} must be nonnegative", self.lambda)));
        }
        if !(self.clamp >= 0.0) {
            return Err(CliError::Config(format!("clamp = {} must be nonnegative", self.clamp)));
        }
        if self.epochs == 0 {
            return Err(CliError::Config("epochs must be at least 1".into()));
        }
        if self.eval_seeds == 0 {
            return Err(CliError::Config("eval_seeds must be at least 1".into()));
        }
        if self.hidden.is_empty() || self.hidden.iter().any(|&h| h == 0) {
            return Err(CliError::Config("hidden sizes must be positive".into()));
        }
        Ok(())
    }

    /// Hidden sizes in the `256-256` textual form.
    pub fn hidden_string(&self) -> String {
        self.hidden.iter().map(usize::to_string).collect::<Vec<_>>().join("-")
    }

    /// Exact resolved configuration, embedded in reports for
    /// reproducibility.
    pub fn resolved_map(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        m.insert("dataset".into(), self.dataset.display().to_string());
        m.insert("p_d".into(), self.p_d.to_string());
        m.insert("p_m".into(), self.p_m.to_string());
        m.insert("lambda".into(), self.lambda.to_string());
        m.insert("align_weight".into(), self.align_weight.to_string());
        m.insert("lr".into(), self.lr.to_string());
        m.insert("wd".into(), self.wd.to_string());
        m.insert("epochs".into(), self.epochs.to_string());
        m.insert("hidden".into(), self.hidden_string());
        m.insert("seed".into(), self.seed.to_string());
        m.insert("clamp".into(), self.clamp.to_string());
        m.insert("eval_seeds".into(), self.eval_seeds.to_string());
        m
    }

    /// Renders as a config file body (round-trips through `from_file`).
    pub fn render(&self) -> String {
        let mut s = String::new();
        for (k, v) in self.resolved_map() {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_cfg(body: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(body.as_bytes()).unwrap();
        f
    }

    #[test]
    fn parses_full_config() {
        let f = write_cfg(
            "# cora defaults\n\
             dataset = data/cora\n\
             p_d = 0.3\n\
             p_m = 0.1\n\
             lambda = 0.1\n\
             lr = 1e-3\n\
             wd = 1e-5\n\
             epochs = 80\n\
             hidden = 256-256\n\
             seed = 42\n",
        );
        let cfg = TrainConfig::from_file(f.path()).unwrap();
        assert_eq!(cfg.dataset, PathBuf::from("data/cora"));
        assert_eq!(cfg.p_d, 0.3);
        assert_eq!(cfg.hidden, vec![256, 256]);
        assert_eq!(cfg.epochs, 80);
        assert_eq!(cfg.eval_seeds, 10); // default preserved
    }

    #[test]
    fn single_hidden_layer_form() {
        let f = write_cfg("dataset = d\nhidden = 512\nepochs = 20\n");
        let cfg = TrainConfig::from_file(f.path()).unwrap();
        assert_eq!(cfg.hidden, vec![512]);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        let f = write_cfg("dataset = d\nlearning_rate = 0.1\n");
        assert!(TrainConfig::from_file(f.path()).is_err());
        let f = write_cfg("dataset = d\np_d = 1.5\n");
        assert!(TrainConfig::from_file(f.path()).is_err());
        let f = write_cfg("dataset = d\nhidden = 256--256\n");
        assert!(TrainConfig::from_file(f.path()).is_err());
        let f = write_cfg("p_d = 0.5\n");
        assert!(TrainConfig::from_file(f.path()).is_err(), "dataset is required");
    }

    #[test]
    fn render_round_trips() {
        let f = write_cfg("dataset = data/x\nlambda = 0.05\nhidden = 512\nepochs = 20\n");
        let cfg = TrainConfig::from_file(f.path()).unwrap();
        let f2 = write_cfg(&cfg.render());
        let cfg2 = TrainConfig::from_file(f2.path()).unwrap();
        assert_eq!(cfg.resolved_map(), cfg2.resolved_map());
    }
}
