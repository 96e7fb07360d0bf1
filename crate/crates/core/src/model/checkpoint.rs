//! Plain-text checkpoints.
//!
//! ```text
//! mmdin-checkpoint 1
//! [config]
//! variant = MMDIN
//! ...                       one `key = value` line per config field
//! [scaler]
//! fitted = true
//! mean = <NUMERIC_LEN values>
//! std = <NUMERIC_LEN values>
//! [params]
//! <name> <dim>x<dim>...
//! <values>                  one line, space separated
//! ```
//!
//! Values are written in shortest round-trip form, so loading restores
//! every parameter bit for bit.

use std::io::{BufRead, Write};

use super::features::{FeatureScaler, NUMERIC_LEN};
use super::{Model, ModelConfig, ModelError};

pub const CHECKPOINT_MAGIC: &str = "mmdin-checkpoint 1";

fn join(values: &[f64]) -> String {
    values.iter().map(|v| format!("{v:e}")).collect::<Vec<_>>().join(" ")
}

fn parse_values(text: &str, line: usize) -> Result<Vec<f64>, ModelError> {
    text.split_ascii_whitespace()
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| ModelError::Checkpoint(format!("line {line}: bad number '{t}'")))
        })
        .collect()
}

impl Model {
    pub fn save<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{CHECKPOINT_MAGIC}")?;
        writeln!(w, "[config]")?;
        for (k, v) in self.config().to_pairs() {
            writeln!(w, "{k} = {v}")?;
        }
        writeln!(w, "[scaler]")?;
        writeln!(w, "fitted = {}", self.scaler.fitted)?;
        writeln!(w, "mean = {}", join(&self.scaler.mean))?;
        writeln!(w, "std = {}", join(&self.scaler.std))?;
        writeln!(w, "[params]")?;
        for (name, t) in self.named_parameters() {
            let shape: Vec<String> = t.shape().iter().map(usize::to_string).collect();
            writeln!(w, "{name} {}", shape.join("x"))?;
            writeln!(w, "{}", join(&t.data()))?;
        }
        w.flush()
    }

    /// Rebuilds a model from [`Model::save`] output.
    pub fn load<R: BufRead>(reader: R) -> Result<Self, ModelError> {
        let lines: Vec<String> = reader
            .lines()
            .collect::<Result<_, _>>()
            .map_err(|e| ModelError::Checkpoint(e.to_string()))?;
        let mut it = lines.iter().enumerate().map(|(i, l)| (i + 1, l.as_str()));
        let bad = |line: usize, what: &str| ModelError::Checkpoint(format!("line {line}: {what}"));
        match it.next() {
            Some((_, l)) if l == CHECKPOINT_MAGIC => {}
            _ => return Err(bad(1, "not a checkpoint file")),
        }
        if it.next().map(|(_, l)| l) != Some("[config]") {
            return Err(bad(2, "expected [config]"));
        }
        let mut config = ModelConfig::default();
        let mut line_no = 2;
        loop {
            let (n, l) = it.next().ok_or_else(|| bad(line_no, "missing [scaler]"))?;
            line_no = n;
            if l == "[scaler]" {
                break;
            }
            let (k, v) = l.split_once('=').ok_or_else(|| bad(n, "expected key = value"))?;
            config.set(k.trim(), v)?;
        }
        let mut field = |key: &str| -> Result<(usize, String), ModelError> {
            let (n, l) = it.next().ok_or_else(|| bad(line_no, "truncated scaler block"))?;
            match l.split_once('=') {
                Some((k, v)) if k.trim() == key => Ok((n, v.trim().to_string())),
                _ => Err(bad(n, &format!("expected {key} = ..."))),
            }
        };
        let (n, fitted) = field("fitted")?;
        let fitted = fitted.parse::<bool>().map_err(|_| bad(n, "fitted must be true or false"))?;
        let (n, mean) = field("mean")?;
        let mean = parse_values(&mean, n)?;
        let (n, std) = field("std")?;
        let std = parse_values(&std, n)?;
        if mean.len() != NUMERIC_LEN || std.len() != NUMERIC_LEN {
            return Err(bad(n, &format!("scaler needs {NUMERIC_LEN} columns")));
        }
        if it.next().map(|(_, l)| l) != Some("[params]") {
            return Err(bad(n + 1, "expected [params]"));
        }

        let mut model = Model::build(&config, config.seed)?;
        model.scaler = FeatureScaler { mean, std, fitted };
        let mut seen = 0;
        while let Some((n, header)) = it.next() {
            if header.is_empty() {
                continue;
            }
            let (name, shape) = header
                .split_once(' ')
                .ok_or_else(|| bad(n, "expected '<name> <shape>'"))?;
            let shape = shape
                .split('x')
                .map(|s| s.parse::<usize>().map_err(|_| bad(n, "bad shape")))
                .collect::<Result<Vec<_>, _>>()?;
            let (vn, values) = it.next().ok_or_else(|| bad(n, "missing parameter values"))?;
            model.load_parameter(name, &shape, parse_values(values, vn)?)?;
            seen += 1;
        }
        if seen != model.named_parameters().len() {
            return Err(ModelError::Incompatible(format!(
                "checkpoint holds {seen} parameters, the configured model has {}",
                model.named_parameters().len()
            )));
        }
        Ok(model)
    }
}
