//! ACC: one minus the mean absolute error, per trait and averaged.

use serde::{Deserialize, Serialize};

use crate::error::{P2gError, Result};
use crate::synth::TRAIT_NAMES;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AccReport {
    pub per_trait: [f64; 5],
    pub avg: f64,
}

fn check(values: &[[f64; 5]], what: &str) -> Result<()> {
    for v in values.iter().flatten() {
        if !(0.0..=1.0).contains(v) {
            return Err(P2gError::Invalid(format!("{what} value {v} outside [0,1]")));
        }
    }
    Ok(())
}

pub fn acc(preds: &[[f64; 5]], labels: &[[f64; 5]]) -> Result<AccReport> {
    if preds.is_empty() || preds.len() != labels.len() {
        return Err(P2gError::Invalid(format!(
            "acc needs equally many predictions and labels (got {} and {})",
            preds.len(),
            labels.len()
        )));
    }
    check(preds, "prediction")?;
    check(labels, "label")?;
    let m = preds.len() as f64;
    let mut per_trait = [0.0; 5];
    for (t, out) in per_trait.iter_mut().enumerate() {
        let mae = preds.iter().zip(labels).map(|(p, y)| (p[t] - y[t]).abs()).sum::<f64>() / m;
        *out = 1.0 - mae;
    }
    let avg = per_trait.iter().sum::<f64>() / 5.0;
    Ok(AccReport { per_trait, avg })
}

/// `subject_id,<trait>...` rows with six decimals.
pub fn predictions_csv(ids: &[String], preds: &[[f64; 5]]) -> String {
    let mut out = format!("subject_id,{}\n", TRAIT_NAMES.join(","));
    for (id, p) in ids.iter().zip(preds) {
        let cells: Vec<String> = p.iter().map(|v| format!("{v:.6}")).collect();
        out.push_str(&format!("{id},{}\n", cells.join(",")));
    }
    out
}

/// `trait,acc` rows followed by an `avg` row.
pub fn metrics_csv(report: &AccReport) -> String {
    let mut out = String::from("trait,acc\n");
    for (name, v) in TRAIT_NAMES.iter().zip(report.per_trait) {
        out.push_str(&format!("{name},{v:.6}\n"));
    }
    out.push_str(&format!("avg,{:.6}\n", report.avg));
    out
}
