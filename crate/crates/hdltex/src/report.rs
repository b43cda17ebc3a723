//! Metric and training-log formatting.

use std::fmt::Write as _;

use hdltex_core::hierarchy::{Level, LevelMetrics};
use hdltex_core::nn::EpochLog;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum ReportFormat {
    /// Aligned lines for reading.
    #[default]
    Text,
    /// `key=value` lines for scripts; reals at full precision.
    Kv,
}

pub fn render_metrics(m: &LevelMetrics, format: ReportFormat) -> String {
    let mut s = String::new();
    match format {
        ReportFormat::Text => {
            let width = m
                .per_domain_child_accuracy
                .iter()
                .map(|d| d.parent.len())
                .max()
                .unwrap_or(0);
            let _ = writeln!(s, "documents                {}", m.documents);
            let _ = writeln!(s, "parent accuracy          {:.4}", m.parent_accuracy);
            for d in &m.per_domain_child_accuracy {
                let _ = writeln!(s, "  child accuracy  {:<width$}  {:.4}  (n={})", d.parent, d.accuracy, d.count);
            }
            let _ = writeln!(s, "weighted child accuracy  {:.4}", m.weighted_child_accuracy);
            let _ = writeln!(s, "combined accuracy        {:.4}", m.combined_accuracy);
            let _ = writeln!(s, "end-to-end accuracy      {:.4}", m.end_to_end_accuracy);
        }
        ReportFormat::Kv => {
            let _ = writeln!(s, "documents={}", m.documents);
            let _ = writeln!(s, "parent_accuracy={}", m.parent_accuracy);
            let _ = writeln!(s, "domains={}", m.per_domain_child_accuracy.len());
            for (i, d) in m.per_domain_child_accuracy.iter().enumerate() {
                let _ = writeln!(s, "domain.{i}.label={}", d.parent);
                let _ = writeln!(s, "domain.{i}.child_accuracy={}", d.accuracy);
                let _ = writeln!(s, "domain.{i}.count={}", d.count);
            }
            let _ = writeln!(s, "weighted_child_accuracy={}", m.weighted_child_accuracy);
            let _ = writeln!(s, "combined_accuracy={}", m.combined_accuracy);
            let _ = writeln!(s, "end_to_end_accuracy={}", m.end_to_end_accuracy);
        }
    }
    s
}

/// Accuracy of a single flat classifier.
pub fn render_flat(name: &str, documents: usize, accuracy: f64, format: ReportFormat) -> String {
    match format {
        ReportFormat::Text => format!("documents                {documents}\n{:<25}{accuracy:.4}\n", format!("{name} accuracy")),
        ReportFormat::Kv => format!("documents={documents}\nmodel={name}\naccuracy={accuracy}\n"),
    }
}

pub fn level_name(level: Level) -> String {
    match level {
        Level::Parent => "parent".into(),
        Level::Child(i) => format!("child{i}"),
        Level::Flat => "flat".into(),
    }
}

/// One line per epoch: `level=.. epoch=.. loss=.. train_accuracy=.. seconds=..`.
pub fn render_epoch(level: Level, log: &EpochLog) -> String {
    format!(
        "level={} epoch={} loss={:.6} train_accuracy={:.4} seconds={:.2}",
        level_name(level),
        log.epoch,
        log.mean_loss,
        log.train_accuracy,
        log.wall_seconds
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use hdltex_core::hierarchy::DomainAccuracy;

    fn metrics() -> LevelMetrics {
        LevelMetrics {
            parent_accuracy: 0.5,
            per_domain_child_accuracy: vec![
                DomainAccuracy { parent: "Computer Science".into(), accuracy: 0.8, count: 100 },
                DomainAccuracy { parent: "Medical".into(), accuracy: 0.6, count: 300 },
            ],
            weighted_child_accuracy: 0.65,
            combined_accuracy: 0.325,
            end_to_end_accuracy: 0.3,
            documents: 400,
        }
    }

    #[test]
    fn kv_block_is_parseable() {
        let kv = render_metrics(&metrics(), ReportFormat::Kv);
        let pairs: Vec<(&str, &str)> = kv.lines().map(|l| l.split_once('=').unwrap()).collect();
        assert!(pairs.contains(&("combined_accuracy", "0.325")));
        assert!(pairs.contains(&("domain.0.label", "Computer Science")));
        assert!(pairs.contains(&("domain.1.count", "300")));
    }

    #[test]
    fn text_lists_all_levels() {
        let t = render_metrics(&metrics(), ReportFormat::Text);
        for key in ["parent accuracy", "weighted child accuracy", "combined accuracy", "end-to-end accuracy", "Medical"] {
            assert!(t.contains(key), "{key} missing from\n{t}");
        }
    }

    #[test]
    fn epoch_line() {
        let log = EpochLog { epoch: 3, mean_loss: 0.25, train_accuracy: 0.9, wall_seconds: 1.5 };
        assert_eq!(
            render_epoch(Level::Child(2), &log),
            "level=child2 epoch=3 loss=0.250000 train_accuracy=0.9000 seconds=1.50"
        );
    }
}
