//! CSV outputs of a training run. Floats are written in shortest round-trip
//! form and rows carry no timestamps, so equal runs give equal bytes.

use std::fs;
use std::path::Path;

use graphsgan_core::trainer::{DiagnosticRecord, EpochMetrics};
use serde::Serialize;

#[derive(Serialize)]
struct MetricsRow {
    epoch: usize,
    loss_sup: f64,
    loss_un: f64,
    loss_ent: f64,
    loss_pt_classifier: f64,
    loss_fm: f64,
    loss_pt_generator: f64,
    objective_classifier: f64,
    objective_generator: f64,
    train_accuracy: f64,
    val_accuracy: Option<f64>,
    test_accuracy: Option<f64>,
    unlabeled_accuracy: f64,
    mean_p_fake_real: f64,
    mean_p_fake_generated: f64,
}

fn writer(path: &Path) -> csv::Result<csv::Writer<fs::File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    csv::Writer::from_path(path)
}

/// One row per epoch; absent validation or test accuracy is an empty field.
pub fn write_metrics_csv(path: &Path, history: &[EpochMetrics]) -> csv::Result<()> {
    let mut w = writer(path)?;
    for m in history {
        let l = &m.losses;
        w.serialize(MetricsRow {
            epoch: m.epoch,
            loss_sup: l.sup,
            loss_un: l.un,
            loss_ent: l.ent,
            loss_pt_classifier: l.pt_d,
            loss_fm: l.fm,
            loss_pt_generator: l.pt_g,
            objective_classifier: l.composite_d,
            objective_generator: l.composite_g,
            train_accuracy: m.train_accuracy,
            val_accuracy: m.val_accuracy,
            test_accuracy: m.test_accuracy,
            unlabeled_accuracy: m.unlabeled_accuracy,
            mean_p_fake_real: m.mean_p_fake_real,
            mean_p_fake_generated: m.mean_p_fake_generated,
        })?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct DiagnosticRow {
    step: usize,
    node: usize,
    marginal: bool,
    grad_norm: f64,
    p_fake: f64,
}

/// `marginal` is indexed by node.
pub fn write_diagnostics_csv(path: &Path, records: &[DiagnosticRecord], marginal: &[bool]) -> csv::Result<()> {
    let mut w = writer(path)?;
    for r in records {
        w.serialize(DiagnosticRow {
            step: r.step,
            node: r.node,
            marginal: marginal[r.node],
            grad_norm: r.grad_norm,
            p_fake: r.p_fake,
        })?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct PredictionRow<'a> {
    node: usize,
    label: usize,
    predicted: usize,
    p_fake: f64,
    split: &'a str,
}

/// `split_names[v]` is `train`, `val`, `test` or `none`.
pub fn write_predictions_csv(
    path: &Path,
    labels: &[usize],
    predicted: &[usize],
    p_fake: &[f64],
    split_names: &[&str],
) -> csv::Result<()> {
    let mut w = writer(path)?;
    for v in 0..labels.len() {
        w.serialize(PredictionRow {
            node: v,
            label: labels[v],
            predicted: predicted[v],
            p_fake: p_fake[v],
            split: split_names[v],
        })?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use graphsgan_core::game::LossBreakdown;

    #[test]
    fn metrics_layout() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.csv");
        let m = EpochMetrics {
            epoch: 0,
            losses: LossBreakdown {
                sup: 0.5,
                ..Default::default()
            },
            train_accuracy: 1.0,
            val_accuracy: None,
            test_accuracy: Some(0.75),
            unlabeled_accuracy: 0.8,
            mean_p_fake_real: 0.1,
            mean_p_fake_generated: 0.4,
        };
        write_metrics_csv(&p, &[m]).unwrap();
        let text = fs::read_to_string(&p).unwrap();
        let mut lines = text.lines();
        assert!(lines.next().unwrap().starts_with("epoch,loss_sup,loss_un"));
        assert_eq!(lines.next().unwrap(), "0,0.5,0.0,0.0,0.0,0.0,0.0,0.0,0.0,1.0,,0.75,0.8,0.1,0.4");
    }

    #[test]
    fn diagnostics_flag_marginal_nodes() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.csv");
        let recs = [DiagnosticRecord {
            step: 3,
            node: 1,
            grad_norm: 0.25,
            p_fake: 0.5,
        }];
        write_diagnostics_csv(&p, &recs, &[false, true]).unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "step,node,marginal,grad_norm,p_fake\n3,1,true,0.25,0.5\n");
    }
}
