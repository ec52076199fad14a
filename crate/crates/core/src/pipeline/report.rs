use serde::{Deserialize, Serialize};

use super::config::AblationFlags;
use crate::gnn::{AccReport, GnnArch};
use crate::synth::TRAIT_NAMES;

/// Decoder family a system is built from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// One decoder per horizon on the pre-trained encoder.
    DecM,
    /// A single decoder at the first horizon.
    DecS,
    /// One decoder per horizon on the untrained encoder.
    DecMNpt,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::DecM, Variant::DecS, Variant::DecMNpt];

    pub fn key(self) -> &'static str {
        match self {
            Variant::DecM => "dec_m",
            Variant::DecS => "dec_s",
            Variant::DecMNpt => "dec_m_npt",
        }
    }

    pub fn horizons(self, all: &[usize]) -> Vec<usize> {
        match self {
            Variant::DecS => all[..1].to_vec(),
            Variant::DecM | Variant::DecMNpt => all.to_vec(),
        }
    }

    pub fn pretrained_encoder(self) -> bool {
        self != Variant::DecMNpt
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Learner {
    EncoderHead,
    Mlp,
    Gnn(GnnArch),
}

/// Rows of the ablation table, declared in report order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum System {
    Encoder,
    VecDecM,
    GatedGcnDecM,
    GatDecS,
    GatDecMNpt,
    GatDecM,
}

impl System {
    pub const ALL: [System; 6] =
        [System::Encoder, System::VecDecM, System::GatedGcnDecM, System::GatDecS, System::GatDecMNpt, System::GatDecM];

    pub fn label(self) -> &'static str {
        match self {
            System::Encoder => "Encoder",
            System::VecDecM => "Vec(Dec-M)",
            System::GatedGcnDecM => "GatedGCN(Dec-M)",
            System::GatDecS => "GAT(Dec-S)",
            System::GatDecMNpt => "GAT(Dec-M-NPT)",
            System::GatDecM => "GAT(Dec-M)",
        }
    }

    /// Directory and seed-stream name.
    pub fn key(self) -> &'static str {
        match self {
            System::Encoder => "encoder",
            System::VecDecM => "vec_dec_m",
            System::GatedGcnDecM => "gatedgcn_dec_m",
            System::GatDecS => "gat_dec_s",
            System::GatDecMNpt => "gat_dec_m_npt",
            System::GatDecM => "gat_dec_m",
        }
    }

    pub fn variant(self) -> Option<Variant> {
        match self {
            System::Encoder => None,
            System::VecDecM | System::GatedGcnDecM | System::GatDecM => Some(Variant::DecM),
            System::GatDecS => Some(Variant::DecS),
            System::GatDecMNpt => Some(Variant::DecMNpt),
        }
    }

    pub fn learner(self) -> Learner {
        match self {
            System::Encoder => Learner::EncoderHead,
            System::VecDecM => Learner::Mlp,
            System::GatedGcnDecM => Learner::Gnn(GnnArch::GatedGcn),
            _ => Learner::Gnn(GnnArch::Gat),
        }
    }

    pub fn enabled(self, flags: &AblationFlags) -> bool {
        match self {
            System::Encoder => flags.encoder_baseline,
            System::VecDecM => flags.vec,
            System::GatedGcnDecM => flags.gatedgcn,
            System::GatDecS => flags.dec_s,
            System::GatDecMNpt => flags.dec_m_npt,
            System::GatDecM => flags.dec_m,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub system: System,
    /// Mean over repeats.
    pub per_trait: [f64; 5],
    pub avg: f64,
    /// Average ACC of each repeat.
    pub repeat_avgs: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub master_seed: u64,
    pub repeats: usize,
    pub rows: Vec<ReportRow>,
    /// Wall-clock seconds per stage, filled in by whole-experiment runs.
    #[serde(default)]
    pub runtimes: Vec<(String, f64)>,
}

impl AblationReport {
    /// Averages per-repeat reports; `per_system[i]` holds one entry per repeat.
    pub fn from_repeats(master_seed: u64, per_system: &[(System, Vec<AccReport>)]) -> Self {
        let mut rows: Vec<ReportRow> = per_system
            .iter()
            .filter(|(_, reps)| !reps.is_empty())
            .map(|(system, reps)| {
                let n = reps.len() as f64;
                let per_trait = std::array::from_fn(|t| reps.iter().map(|r| r.per_trait[t]).sum::<f64>() / n);
                let avg = reps.iter().map(|r| r.avg).sum::<f64>() / n;
                ReportRow { system: *system, per_trait, avg, repeat_avgs: reps.iter().map(|r| r.avg).collect() }
            })
            .collect();
        rows.sort_by_key(|r| System::ALL.iter().position(|s| *s == r.system));
        let repeats = per_system.iter().map(|(_, r)| r.len()).max().unwrap_or(0);
        Self { master_seed, repeats, rows, runtimes: Vec::new() }
    }

    pub fn row(&self, system: System) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.system == system)
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("system,{},avg\n", TRAIT_NAMES.join(","));
        for r in &self.rows {
            let cells: Vec<String> = r.per_trait.iter().map(|v| format!("{v:.4}")).collect();
            out.push_str(&format!("{},{},{:.4}\n", r.system.label(), cells.join(","), r.avg));
        }
        out
    }

    pub fn to_markdown(&self) -> String {
        let short = ["Ext", "Agr", "Con", "Neu", "Ope"];
        let mut out = format!(
            "# Ablation report\n\nMaster seed {}, mean test ACC over {} repeat(s).\n\n| System | {} | Avg | Per-repeat avg |\n|---|{}---|---|\n",
            self.master_seed,
            self.repeats,
            short.join(" | "),
            "---|".repeat(5)
        );
        for r in &self.rows {
            let cells: Vec<String> = r.per_trait.iter().map(|v| format!("{v:.4}")).collect();
            let reps: Vec<String> = r.repeat_avgs.iter().map(|v| format!("{v:.4}")).collect();
            out.push_str(&format!("| {} | {} | {:.4} | {} |\n", r.system.label(), cells.join(" | "), r.avg, reps.join(", ")));
        }
        if !self.runtimes.is_empty() {
            out.push_str("\n| Stage | Seconds |\n|---|---|\n");
            for (stage, secs) in &self.runtimes {
                out.push_str(&format!("| {stage} | {secs:.1} |\n"));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rep(avg: f64) -> AccReport {
        AccReport { per_trait: [avg; 5], avg }
    }

    #[test]
    fn rows_follow_table_order_and_average_repeats() {
        let report = AblationReport::from_repeats(
            1,
            &[(System::GatDecM, vec![rep(0.9), rep(0.8)]), (System::Encoder, vec![rep(0.7), rep(0.7)]), (System::GatDecS, vec![])],
        );
        let order: Vec<System> = report.rows.iter().map(|r| r.system).collect();
        assert_eq!(order, vec![System::Encoder, System::GatDecM]);
        assert!((report.row(System::GatDecM).unwrap().avg - 0.85).abs() < 1e-12);
        let csv = report.to_csv();
        assert_eq!(csv.lines().nth(1).unwrap(), "Encoder,0.7000,0.7000,0.7000,0.7000,0.7000,0.7000");
        assert!(csv.lines().nth(2).unwrap().starts_with("GAT(Dec-M),"));
    }

    #[test]
    fn dec_s_uses_first_horizon() {
        assert_eq!(Variant::DecS.horizons(&[8, 16, 32]), vec![8]);
        assert_eq!(Variant::DecMNpt.horizons(&[8, 16, 32]), vec![8, 16, 32]);
        assert!(!Variant::DecMNpt.pretrained_encoder());
    }
}
