//! Flat `key = value` experiment files with `[section]` headers.
//!
//! Every key has a default, so a file only needs the settings it changes.
//! [`render_config`] writes the full set and [`parse_config`] reads it back
//! to an identical [`HdltexConfig`].

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use hdltex_core::hierarchy::{HdltexConfig, ModelKind, VocabScope};
use hdltex_core::nn::Activation;
use hdltex_core::optim::{OptimizerConfig, OptimizerKind};
use hdltex_core::recurrent::TimePooling;

use crate::error::{Error, Result};

const DEFAULT_MOMENTUM: f64 = 0.9;
const DEFAULT_RHO: f64 = 0.9;
const DEFAULT_BETA1: f64 = 0.9;
const DEFAULT_BETA2: f64 = 0.999;

fn pooling_name(p: TimePooling) -> &'static str {
    match p {
        TimePooling::Last => "last",
        TimePooling::Mean => "mean",
    }
}

fn list(v: &[usize]) -> String {
    v.iter().map(usize::to_string).collect::<Vec<_>>().join(",")
}

/// Writes every setting. Reals use the shortest round-trip notation, so
/// parsing the output gives back the same bits.
pub fn render_config(cfg: &HdltexConfig) -> String {
    let (momentum, rho, beta1, beta2) = match cfg.optimizer.kind {
        OptimizerKind::Sgd { momentum } => (momentum, DEFAULT_RHO, DEFAULT_BETA1, DEFAULT_BETA2),
        OptimizerKind::RmsProp { rho } => (DEFAULT_MOMENTUM, rho, DEFAULT_BETA1, DEFAULT_BETA2),
        OptimizerKind::Adam { beta1, beta2 } => (DEFAULT_MOMENTUM, DEFAULT_RHO, beta1, beta2),
    };
    let f = &cfg.features;
    let mut s = String::new();
    let _ = write!(
        s,
        "[model]\n\
         parent = {}\n\
         child = {}\n\
         child_vocab_scope = {}\n\
         seed = {}\n\
         \n\
         [training]\n\
         epochs = {}\n\
         batch_size = {}\n\
         \n\
         [optimizer]\n\
         # sgd | rmsprop | adam; only the chosen kind's own keys are used\n\
         kind = {}\n\
         learning_rate = {:?}\n\
         epsilon = {:?}\n\
         decay = {:?}\n\
         momentum = {:?}\n\
         rho = {:?}\n\
         beta1 = {:?}\n\
         beta2 = {:?}\n\
         \n\
         [features]\n\
         max_n = {}\n\
         min_count = {}\n\
         max_features = {}\n\
         max_len = {}\n\
         embed_dim = {}\n\
         nb_max_n = {}\n\
         nb_alpha = {:?}\n\
         \n\
         [dnn]\n\
         hidden_layers = {}\n\
         width = {}\n\
         dropout = {:?}\n\
         activation = {}\n\
         \n\
         [rnn]\n\
         hidden_size = {}\n\
         layers = {}\n\
         dropout = {:?}\n\
         pooling = {}\n\
         clip_norm = {}\n\
         \n\
         [cnn]\n\
         branch_widths = {}\n\
         filters = {}\n\
         branch_pool = {}\n\
         stage_width = {}\n\
         stage_pools = {}\n\
         dense = {}\n\
         dropout = {:?}\n",
        cfg.parent_kind.name(),
        cfg.child_kind.name(),
        cfg.child_vocab_scope.name(),
        cfg.seed,
        cfg.epochs,
        cfg.batch_size,
        cfg.optimizer.kind.name(),
        cfg.optimizer.learning_rate,
        cfg.optimizer.epsilon,
        cfg.optimizer.decay,
        momentum,
        rho,
        beta1,
        beta2,
        f.max_n,
        f.min_count,
        f.max_features,
        f.max_len,
        f.embed_dim,
        f.nb_max_n,
        f.nb_alpha,
        cfg.dnn.hidden_layers,
        cfg.dnn.width,
        cfg.dnn.dropout,
        cfg.dnn.activation.name(),
        cfg.rnn.hidden_size,
        cfg.rnn.layers,
        cfg.rnn.dropout,
        pooling_name(cfg.rnn.pooling),
        cfg.rnn.clip_norm.map_or("none".to_string(), |c| format!("{c:?}")),
        list(&cfg.cnn.branch_widths),
        cfg.cnn.filters,
        cfg.cnn.branch_pool,
        cfg.cnn.stage_width,
        list(&cfg.cnn.stage_pools),
        cfg.cnn.dense,
        cfg.cnn.dropout,
    );
    s
}

struct Entries {
    map: BTreeMap<(String, String), (String, usize)>,
}

impl Entries {
    fn take<T>(&mut self, section: &str, key: &str, parse: impl FnOnce(&str) -> Option<T>) -> Result<Option<T>> {
        let Some((value, line)) = self.map.remove(&(section.to_string(), key.to_string())) else {
            return Ok(None);
        };
        parse(&value).map(Some).ok_or_else(|| Error::Config {
            line,
            message: format!("invalid value {value:?} for {section}.{key}"),
        })
    }

    fn set<T: FromStr>(&mut self, section: &str, key: &str, slot: &mut T) -> Result<()> {
        if let Some(v) = self.take(section, key, |s| s.parse().ok())? {
            *slot = v;
        }
        Ok(())
    }

    fn set_with<T>(&mut self, section: &str, key: &str, slot: &mut T, parse: impl FnOnce(&str) -> Option<T>) -> Result<()> {
        if let Some(v) = self.take(section, key, parse)? {
            *slot = v;
        }
        Ok(())
    }
}

fn parse_list(s: &str) -> Option<Vec<usize>> {
    s.split(',').map(|p| p.trim().parse().ok()).collect()
}

pub fn parse_config(text: &str) -> Result<HdltexConfig> {
    let mut map = BTreeMap::new();
    let mut section: Option<String> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        let lineno = i + 1;
        if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            section = Some(name.trim().to_string());
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::Config {
                line: lineno,
                message: "expected `key = value`".into(),
            });
        };
        let Some(sec) = &section else {
            return Err(Error::Config {
                line: lineno,
                message: "setting outside any [section]".into(),
            });
        };
        let k = (sec.clone(), key.trim().to_string());
        if map.insert(k.clone(), (value.trim().to_string(), lineno)).is_some() {
            return Err(Error::Config {
                line: lineno,
                message: format!("duplicate key {}.{}", k.0, k.1),
            });
        }
    }
    let mut e = Entries { map };
    let mut cfg = HdltexConfig::default();

    e.set_with("model", "parent", &mut cfg.parent_kind, ModelKind::from_name)?;
    e.set_with("model", "child", &mut cfg.child_kind, ModelKind::from_name)?;
    e.set_with("model", "child_vocab_scope", &mut cfg.child_vocab_scope, VocabScope::from_name)?;
    e.set("model", "seed", &mut cfg.seed)?;
    e.set("training", "epochs", &mut cfg.epochs)?;
    e.set("training", "batch_size", &mut cfg.batch_size)?;

    let mut kind = cfg.optimizer.kind.name().to_string();
    let mut opt = OptimizerConfig::default();
    let (mut momentum, mut rho, mut beta1, mut beta2) = (DEFAULT_MOMENTUM, DEFAULT_RHO, DEFAULT_BETA1, DEFAULT_BETA2);
    e.set_with("optimizer", "kind", &mut kind, |s| {
        matches!(s, "sgd" | "rmsprop" | "adam").then(|| s.to_string())
    })?;
    e.set("optimizer", "learning_rate", &mut opt.learning_rate)?;
    e.set("optimizer", "epsilon", &mut opt.epsilon)?;
    e.set("optimizer", "decay", &mut opt.decay)?;
    e.set("optimizer", "momentum", &mut momentum)?;
    e.set("optimizer", "rho", &mut rho)?;
    e.set("optimizer", "beta1", &mut beta1)?;
    e.set("optimizer", "beta2", &mut beta2)?;
    opt.kind = match kind.as_str() {
        "sgd" => OptimizerKind::Sgd { momentum },
        "rmsprop" => OptimizerKind::RmsProp { rho },
        _ => OptimizerKind::Adam { beta1, beta2 },
    };
    cfg.optimizer = opt;

    let f = &mut cfg.features;
    e.set("features", "max_n", &mut f.max_n)?;
    e.set("features", "min_count", &mut f.min_count)?;
    e.set("features", "max_features", &mut f.max_features)?;
    e.set("features", "max_len", &mut f.max_len)?;
    e.set("features", "embed_dim", &mut f.embed_dim)?;
    e.set("features", "nb_max_n", &mut f.nb_max_n)?;
    e.set("features", "nb_alpha", &mut f.nb_alpha)?;

    e.set("dnn", "hidden_layers", &mut cfg.dnn.hidden_layers)?;
    e.set("dnn", "width", &mut cfg.dnn.width)?;
    e.set("dnn", "dropout", &mut cfg.dnn.dropout)?;
    e.set_with("dnn", "activation", &mut cfg.dnn.activation, |s| {
        Activation::from_name(s).filter(|a| *a != Activation::Softmax)
    })?;

    e.set("rnn", "hidden_size", &mut cfg.rnn.hidden_size)?;
    e.set("rnn", "layers", &mut cfg.rnn.layers)?;
    e.set("rnn", "dropout", &mut cfg.rnn.dropout)?;
    e.set_with("rnn", "pooling", &mut cfg.rnn.pooling, |s| match s {
        "last" => Some(TimePooling::Last),
        "mean" => Some(TimePooling::Mean),
        _ => None,
    })?;
    e.set_with("rnn", "clip_norm", &mut cfg.rnn.clip_norm, |s| match s {
        "none" => Some(None),
        s => s.parse::<f64>().ok().filter(|c| *c > 0.0).map(Some),
    })?;

    e.set_with("cnn", "branch_widths", &mut cfg.cnn.branch_widths, parse_list)?;
    e.set("cnn", "filters", &mut cfg.cnn.filters)?;
    e.set("cnn", "branch_pool", &mut cfg.cnn.branch_pool)?;
    e.set("cnn", "stage_width", &mut cfg.cnn.stage_width)?;
    e.set_with("cnn", "stage_pools", &mut cfg.cnn.stage_pools, parse_list)?;
    e.set("cnn", "dense", &mut cfg.cnn.dense)?;
    e.set("cnn", "dropout", &mut cfg.cnn.dropout)?;

    if let Some(((sec, key), (_, line))) = e.map.into_iter().min_by_key(|(_, (_, line))| *line) {
        return Err(Error::Config {
            line,
            message: format!("unknown setting {sec}.{key}"),
        });
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<HdltexConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        assert_eq!(parse_config("").unwrap(), HdltexConfig::default());
    }

    #[test]
    fn defaults_round_trip() {
        let cfg = HdltexConfig::default();
        assert_eq!(parse_config(&render_config(&cfg)).unwrap(), cfg);
    }

    #[test]
    fn every_kind_round_trips() {
        let mut cfg = HdltexConfig {
            parent_kind: ModelKind::RnnGru,
            child_kind: ModelKind::Cnn,
            child_vocab_scope: VocabScope::Global,
            seed: u64::MAX,
            ..Default::default()
        };
        cfg.optimizer = OptimizerConfig::sgd(0.1 + 0.2, 0.3);
        cfg.rnn.clip_norm = None;
        cfg.rnn.pooling = TimePooling::Mean;
        cfg.features.nb_alpha = 1e-300;
        cfg.cnn.stage_pools = vec![2];
        assert_eq!(parse_config(&render_config(&cfg)).unwrap(), cfg);
        cfg.optimizer = OptimizerConfig::rmsprop(3e-4);
        assert_eq!(parse_config(&render_config(&cfg)).unwrap(), cfg);
    }

    #[test]
    fn partial_override() {
        let cfg = parse_config("[dnn]\nwidth = 64\nhidden_layers=2\n[model]\nparent = nbc\n").unwrap();
        assert_eq!(cfg.dnn.width, 64);
        assert_eq!(cfg.dnn.hidden_layers, 2);
        assert_eq!(cfg.parent_kind, ModelKind::Nbc);
        assert_eq!(cfg.epochs, 10);
    }

    #[test]
    fn errors_carry_lines() {
        let line = |text: &str| match parse_config(text) {
            Err(Error::Config { line, .. }) => line,
            other => panic!("{other:?}"),
        };
        assert_eq!(line("[dnn]\n\nwidth = wide\n"), 3);
        assert_eq!(line("[dnn]\nbogus = 1\n"), 2);
        assert_eq!(line("width = 3\n"), 1);
        assert_eq!(line("[dnn]\nwidth = 3\nwidth = 4\n"), 3);
        assert_eq!(line("[model]\nparent = svm\n"), 2);
        assert_eq!(line("[optimizer]\n\nkind = lbfgs\n"), 3);
    }

    #[test]
    fn invalid_values_rejected() {
        assert!(parse_config("[training]\nepochs = 0\n").is_err());
        assert!(parse_config("[dnn]\nactivation = softmax\n").is_err());
    }
}
