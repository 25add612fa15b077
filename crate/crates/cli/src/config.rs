//! Experiment files.
//!
//! A TOML file names the command, the shared settings and a `[params]`
//! table. It is expanded into the equivalent argument list, so flags and
//! files share one parser and unknown keys are rejected the same way.
//!
//! ```toml
//! command = "threshold"
//! seed = 1
//! output_path = "square.csv"
//! format = "csv"
//!
//! [params]
//! geometry = "square"
//! size = 128
//! trials = 400
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;

use crate::{Failure, Format};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CommandName {
    Verify,
    Distill,
    Percolate,
    Threshold,
    Route,
    Strategy,
    Square,
    Hierarchy,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: CommandName,
    #[serde(default)]
    pub params: BTreeMap<String, toml::Value>,
    pub seed: Option<u64>,
    pub output_path: Option<String>,
    pub format: Option<Format>,
    pub threads: Option<usize>,
    #[serde(default)]
    pub deterministic: bool,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Invalid(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| Failure::Invalid(format!("config {}: {e}", path.display())))
    }

    fn command_word(&self) -> String {
        match self.command {
            CommandName::Verify => "verify",
            CommandName::Distill => "distill",
            CommandName::Percolate => "percolate",
            CommandName::Threshold => "threshold",
            CommandName::Route => "route",
            CommandName::Strategy => "strategy",
            CommandName::Square => "square",
            CommandName::Hierarchy => "hierarchy",
        }
        .to_string()
    }

    /// Arguments equivalent to this file, without the program name.
    #[cfg(test)]
    pub fn to_args(&self) -> Result<Vec<String>, Failure> {
        let mut args = self.shared_args();
        args.extend(self.command_args()?);
        Ok(args)
    }

    fn shared_args(&self) -> Vec<String> {
        let mut args = Vec::new();
        if let Some(seed) = self.seed {
            args.extend(["--seed".to_string(), seed.to_string()]);
        }
        if let Some(out) = &self.output_path {
            args.extend(["--output".to_string(), out.clone()]);
        }
        if let Some(f) = self.format {
            let name = match f {
                Format::Csv => "csv",
                Format::Json => "json",
            };
            args.extend(["--format".to_string(), name.to_string()]);
        }
        if let Some(t) = self.threads {
            args.extend(["--threads".to_string(), t.to_string()]);
        }
        if self.deterministic {
            args.push("--deterministic".to_string());
        }
        args
    }

    fn command_args(&self) -> Result<Vec<String>, Failure> {
        let mut args = vec![self.command_word()];
        for (key, value) in &self.params {
            let flag = format!("--{}", key.replace('_', "-"));
            match value {
                toml::Value::Boolean(true) => args.push(flag),
                toml::Value::Boolean(false) => {}
                other => args.extend([flag, scalar(key, other)?]),
            }
        }
        Ok(args)
    }
}

fn scalar(key: &str, v: &toml::Value) -> Result<String, Failure> {
    Ok(match v {
        toml::Value::String(s) => s.clone(),
        toml::Value::Integer(i) => i.to_string(),
        toml::Value::Float(f) => f.to_string(),
        toml::Value::Array(items) => items.iter().map(|x| scalar(key, x)).collect::<Result<Vec<_>, _>>()?.join(","),
        _ => return Err(Failure::Invalid(format!("param `{key}` must be a scalar or an array of scalars"))),
    })
}

/// Replaces `--config FILE` in `raw` by the file's arguments. Flags given
/// next to `--config` come later and so take precedence.
pub fn expand(raw: Vec<String>) -> Result<Vec<String>, Failure> {
    let mut rest = Vec::with_capacity(raw.len());
    let mut path = None;
    let mut it = raw.into_iter();
    let program = it.next().unwrap_or_else(|| "entperc".into());
    while let Some(arg) = it.next() {
        if arg == "--config" {
            path = Some(it.next().ok_or_else(|| Failure::Invalid("--config needs a path".into()))?);
        } else if let Some(p) = arg.strip_prefix("--config=") {
            path = Some(p.to_string());
        } else {
            rest.push(arg);
        }
    }
    let Some(path) = path else {
        let mut argv = vec![program];
        argv.extend(rest);
        return Ok(argv);
    };
    let cfg = ExperimentConfig::load(Path::new(&path))?;
    let mut argv = vec![program];
    argv.extend(cfg.shared_args());
    argv.extend(rest);
    argv.extend(cfg.command_args()?);
    Ok(argv)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ExperimentConfig, toml::de::Error> {
        toml::from_str(text)
    }

    #[test]
    fn params_become_flags() {
        let cfg = parse(
            r#"
            command = "distill"
            seed = 7
            deterministic = true
            [params]
            scheme = "recycling"
            n = [2, 4]
            alpha = 0.5
            lambda = 1.0
            "#,
        )
        .unwrap();
        let args = cfg.to_args().unwrap();
        assert_eq!(
            args,
            [
                "--seed",
                "7",
                "--deterministic",
                "distill",
                "--alpha",
                "0.5",
                "--lambda",
                "1",
                "--n",
                "2,4",
                "--scheme",
                "recycling"
            ]
        );
    }

    #[test]
    fn unknown_top_level_key_rejected() {
        assert!(parse("command = \"verify\"\nsede = 3\n").is_err());
        assert!(parse("command = \"nope\"\n").is_err());
    }

    #[test]
    fn expand_without_config_is_identity() {
        let raw: Vec<String> = ["entperc", "verify", "--draws", "5"].map(String::from).to_vec();
        assert_eq!(expand(raw.clone()).unwrap(), raw);
    }
}
