//! End-to-end experiment: synthetic data, encoder pre-training, per-subject
//! decoder fitting, graph encoding, trait regressors and the ablation table.
//!
//! Every run lives in a directory named after the hash of its resolved
//! configuration, so stages of different configurations never mix. Data is
//! shared by all repeats; each repeat draws fresh model seeds.

pub mod config;
mod provenance;
mod report;

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde_json::json;
use tensorcore::{derive_seed, psnt, ParamSet};

pub use config::{
    AblationFlags, DatasetConfig, DecoderSettings, EncoderSettings, ExperimentConfig, GnnSettings, GraphSettings,
    LearnerSettings,
};
pub use provenance::{hash_path, version, StageManifest, STAGE_MANIFEST};
pub use report::{AblationReport, Learner, ReportRow, System, Variant};

use crate::checkpoint::{read_json, read_params, write_json, write_params};
use crate::error::{io_err, P2gError, Result};
use crate::gnn::{acc, metrics_csv, mlp_baseline_train, predictions_csv, train_gnn, AccReport, GnnModel, MlpModel, TrainLog};
use crate::graphrep::{encode_graph, fit_pca_bank, vec_encode, PcaBank, WeightGraph};
use crate::pnet::{
    encoder_frame_baseline, fit_decoders, pretrain_encoder, DecoderArch, DecoderSet, Encoder, FitConfig, PretrainConfig,
    SharedDecoderInit,
};
use crate::synth::{plan_splits, render_split, SplitSpecs, SubjectSequence};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Stage {
    Synth,
    Pretrain,
    Fit,
    Encode,
    TrainGnn,
    Eval,
}

impl Stage {
    pub const ALL: [Stage; 6] = [Stage::Synth, Stage::Pretrain, Stage::Fit, Stage::Encode, Stage::TrainGnn, Stage::Eval];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Synth => "synth",
            Stage::Pretrain => "pretrain",
            Stage::Fit => "fit",
            Stage::Encode => "encode",
            Stage::TrainGnn => "traingnn",
            Stage::Eval => "eval",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Stage {
    type Err = P2gError;
    fn from_str(s: &str) -> Result<Self> {
        Stage::ALL.into_iter().find(|st| st.name() == s).ok_or_else(|| P2gError::Config(format!("unknown stage `{s}`")))
    }
}

/// Rendered subjects of the three splits, in split order.
#[derive(Clone, Debug)]
pub struct Dataset {
    pub specs: SplitSpecs,
    pub train: Vec<SubjectSequence>,
    pub validation: Vec<SubjectSequence>,
    pub test: Vec<SubjectSequence>,
}

impl Dataset {
    pub fn all(&self) -> impl Iterator<Item = &SubjectSequence> {
        self.train.iter().chain(&self.validation).chain(&self.test)
    }
}

fn labels(seqs: &[SubjectSequence]) -> Vec<[f64; 5]> {
    seqs.iter().map(|s| s.traits.values()).collect()
}

fn ids(seqs: &[SubjectSequence]) -> Vec<String> {
    seqs.iter().map(|s| s.id.clone()).collect()
}

/// One experiment directory and the configuration that owns it.
#[derive(Clone, Debug)]
pub struct Run {
    pub config: ExperimentConfig,
    pub root: PathBuf,
}

impl Run {
    pub fn new(config: ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let root = config.run_dir();
        Ok(Self { config, root })
    }

    pub fn data_dir(&self) -> PathBuf {
        self.root.join("data")
    }

    pub fn repeat_dir(&self, repeat: usize) -> PathBuf {
        self.root.join(format!("rep{repeat}"))
    }

    pub fn stage_dir(&self, repeat: usize, stage: Stage) -> PathBuf {
        self.repeat_dir(repeat).join(stage.name())
    }

    pub fn decoder_dir(&self, repeat: usize, variant: Variant, subject: &str) -> PathBuf {
        self.stage_dir(repeat, Stage::Fit).join(variant.key()).join(subject)
    }

    pub fn graph_path(&self, repeat: usize, variant: Variant, subject: &str) -> PathBuf {
        self.stage_dir(repeat, Stage::Encode).join(variant.key()).join("graphs").join(format!("{subject}.json"))
    }

    pub fn bank_dir(&self, repeat: usize, variant: Variant) -> PathBuf {
        self.stage_dir(repeat, Stage::Encode).join(variant.key()).join("bank")
    }

    pub fn model_dir(&self, repeat: usize, system: System) -> PathBuf {
        self.stage_dir(repeat, Stage::TrainGnn).join(system.key())
    }

    pub fn eval_dir(&self, repeat: usize, system: System) -> PathBuf {
        self.stage_dir(repeat, Stage::Eval).join(system.key())
    }

    pub fn systems(&self) -> Vec<System> {
        System::ALL.into_iter().filter(|s| s.enabled(&self.config.ablation)).collect()
    }

    /// Decoder families needed by the enabled systems.
    pub fn variants(&self) -> Vec<Variant> {
        let needed: BTreeSet<Variant> = self.systems().iter().filter_map(|s| s.variant()).collect();
        needed.into_iter().collect()
    }

    fn pool(&self) -> Result<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.config.workers)
            .build()
            .map_err(|e| P2gError::Config(format!("worker pool: {e}")))
    }

    fn seed(&self, stream: &str, repeat: usize) -> u64 {
        derive_seed(self.config.seed, stream, repeat as u64)
    }

    fn write_config(&self) -> Result<()> {
        write_json(&self.root.join("config.json"), &self.config)
    }

    pub fn run_stage(&self, stage: Stage) -> Result<()> {
        self.write_config()?;
        match stage {
            Stage::Synth => self.synth(),
            Stage::Pretrain => self.pretrain(),
            Stage::Fit => self.fit(),
            Stage::Encode => self.encode(),
            Stage::TrainGnn => self.train(),
            Stage::Eval => self.eval().map(|_| ()),
        }
    }

    /// Every stage after `synth`, timing each one.
    pub fn ablate(&self) -> Result<AblationReport> {
        let mut runtimes = Vec::new();
        for stage in [Stage::Pretrain, Stage::Fit, Stage::Encode, Stage::TrainGnn] {
            let t = Instant::now();
            self.run_stage(stage)?;
            runtimes.push((stage.name().to_string(), t.elapsed().as_secs_f64()));
        }
        let t = Instant::now();
        self.write_config()?;
        let mut report = self.eval()?;
        runtimes.push((Stage::Eval.name().to_string(), t.elapsed().as_secs_f64()));
        report.runtimes = runtimes;
        self.write_report_extras(&report)?;
        Ok(report)
    }

    pub fn all(&self) -> Result<AblationReport> {
        let t = Instant::now();
        self.run_stage(Stage::Synth)?;
        let synth_secs = t.elapsed().as_secs_f64();
        let mut report = self.ablate()?;
        report.runtimes.insert(0, (Stage::Synth.name().to_string(), synth_secs));
        self.write_report_extras(&report)?;
        Ok(report)
    }

    // ---- synth -------------------------------------------------------------

    fn synth(&self) -> Result<()> {
        let d = &self.config.dataset;
        let specs = plan_splits(d.n_train, d.n_val, d.n_test, self.config.seed)?;
        let dir = self.data_dir();
        let frames = dir.join("frames");
        std::fs::create_dir_all(&frames).map_err(io_err(&frames))?;
        for split in [&specs.train, &specs.validation, &specs.test] {
            for (spec, seq) in split.iter().zip(render_split(split, d.dims())?) {
                psnt::write(frames.join(format!("{}.psnt", seq.id)), &seq.frames)?;
                write_json(&frames.join(format!("{}.json", seq.id)), spec)?;
            }
        }
        write_json(&dir.join("splits.json"), &specs)?;
        provenance::write_manifest(&self.root, &dir, "synth", &self.config, &[])
    }

    pub fn load_data(&self) -> Result<Dataset> {
        let dir = self.data_dir();
        let splits = dir.join("splits.json");
        if !splits.exists() {
            return Err(P2gError::MissingPrerequisite(format!("no dataset at {}; run `synth` first", dir.display())));
        }
        let specs: SplitSpecs = read_json(&splits)?;
        let dims = self.config.dataset.dims();
        let load = |list: &[crate::synth::SubjectSpec]| -> Result<Vec<SubjectSequence>> {
            list.iter()
                .map(|s| {
                    let path = dir.join("frames").join(format!("{}.psnt", s.subject_id));
                    if !path.exists() {
                        return Err(P2gError::MissingPrerequisite(format!("missing frames {}", path.display())));
                    }
                    let frames = psnt::read::<f32>(&path)?;
                    if frames.shape() != [dims.t_total, dims.height, dims.width] {
                        return Err(P2gError::Mismatch(format!("{} has shape {:?}, config expects {dims:?}", path.display(), frames.shape())));
                    }
                    Ok(SubjectSequence { id: s.subject_id.clone(), frames, traits: s.traits, seed: s.seed })
                })
                .collect()
        };
        Ok(Dataset { train: load(&specs.train)?, validation: load(&specs.validation)?, test: load(&specs.test)?, specs })
    }

    // ---- pretrain ----------------------------------------------------------

    fn pretrain(&self) -> Result<()> {
        let data = self.load_data()?;
        let cfg = PretrainConfig { epochs: self.config.encoder.epochs, lr: self.config.encoder.lr };
        for r in 0..self.config.repeats {
            let dir = self.stage_dir(r, Stage::Pretrain);
            let init = Encoder::new(self.config.encoder_config(), self.seed("encoder", r))?;
            init.save(&dir.join("encoder_init"))?;
            let (trained, log) = pretrain_encoder(init, &data.train, &data.validation, &cfg)?;
            trained.save(&dir.join("encoder"))?;
            write_json(&dir.join("log.json"), &log)?;
            provenance::write_manifest(&self.root, &dir, "pretrain", &self.config, &[self.data_dir()])?;
        }
        Ok(())
    }

    pub fn load_encoder(&self, repeat: usize, pretrained: bool) -> Result<Encoder> {
        let name = if pretrained { "encoder" } else { "encoder_init" };
        let dir = self.stage_dir(repeat, Stage::Pretrain).join(name);
        let enc = Encoder::load(&dir)?;
        if enc.config != self.config.encoder_config() {
            return Err(P2gError::Mismatch(format!("encoder at {} was built for a different configuration", dir.display())));
        }
        Ok(enc)
    }

    // ---- fit ---------------------------------------------------------------

    pub fn decoder_arch(&self) -> Result<DecoderArch> {
        let d = &self.config.dataset;
        DecoderArch::desk(self.config.encoder_config().latent_shape()?, d.segment_length, [d.height, d.width])
    }

    fn fit(&self) -> Result<()> {
        let data = self.load_data()?;
        let pool = self.pool()?;
        let arch = self.decoder_arch()?;
        let cfg = FitConfig {
            epochs: self.config.decoder.epochs,
            lr: self.config.decoder.lr,
            segment_length: self.config.dataset.segment_length,
        };
        let subjects: Vec<&SubjectSequence> = data.all().collect();
        for r in 0..self.config.repeats {
            let pretrain_dir = self.stage_dir(r, Stage::Pretrain);
            let init_seed = self.seed("decoder_init", r);
            for variant in self.variants() {
                let encoder = self.load_encoder(r, variant.pretrained_encoder())?;
                let init = SharedDecoderInit::new(arch.clone(), variant.horizons(&self.config.dataset.horizons), init_seed)?;
                let sets: Vec<DecoderSet> =
                    pool.install(|| subjects.par_iter().map(|s| fit_decoders(&encoder, s, &init, &cfg)).collect::<Result<_>>())?;
                for set in &sets {
                    set.save(&self.decoder_dir(r, variant, &set.subject_id))?;
                }
            }
            let dir = self.stage_dir(r, Stage::Fit);
            provenance::write_manifest(&self.root, &dir, "fit", &self.config, &[self.data_dir(), pretrain_dir])?;
        }
        Ok(())
    }

    pub fn load_decoders(&self, repeat: usize, variant: Variant, seqs: &[SubjectSequence]) -> Result<Vec<DecoderSet>> {
        let arch = self.decoder_arch()?;
        let horizons = variant.horizons(&self.config.dataset.horizons);
        seqs.iter()
            .map(|s| {
                let dir = self.decoder_dir(repeat, variant, &s.id);
                let set = DecoderSet::load(&dir).map_err(|e| match e {
                    P2gError::MissingPrerequisite(m) => P2gError::MissingPrerequisite(format!("{m}; run `fit` first")),
                    other => other,
                })?;
                if set.arch != arch || set.horizons != horizons {
                    return Err(P2gError::Mismatch(format!("decoders at {} do not match the configuration", dir.display())));
                }
                Ok(set)
            })
            .collect()
    }

    // ---- encode ------------------------------------------------------------

    fn encode(&self) -> Result<()> {
        let data = self.load_data()?;
        let pool = self.pool()?;
        let g = &self.config.graph;
        for r in 0..self.config.repeats {
            let mut inputs = vec![self.stage_dir(r, Stage::Fit)];
            for variant in self.variants() {
                let train = self.load_decoders(r, variant, &data.train)?;
                let bank = fit_pca_bank(&train, g.k)?;
                bank.save(&self.bank_dir(r, variant))?;
                let rest = [&data.validation[..], &data.test[..]].concat();
                let others = self.load_decoders(r, variant, &rest)?;
                let sets: Vec<&DecoderSet> = train.iter().chain(&others).collect();
                let graphs: Vec<WeightGraph> =
                    pool.install(|| sets.par_iter().map(|s| encode_graph(s, &bank, g.virtual_root)).collect::<Result<_>>())?;
                for graph in &graphs {
                    graph.save(&self.graph_path(r, variant, &graph.subject_id))?;
                }
            }
            inputs.retain(|p| p.exists());
            let dir = self.stage_dir(r, Stage::Encode);
            provenance::write_manifest(&self.root, &dir, "encode", &self.config, &inputs)?;
        }
        Ok(())
    }

    pub fn load_bank(&self, repeat: usize, variant: Variant) -> Result<PcaBank> {
        PcaBank::load(&self.bank_dir(repeat, variant))
    }

    pub fn load_graphs(&self, repeat: usize, variant: Variant, seqs: &[SubjectSequence]) -> Result<Vec<WeightGraph>> {
        seqs.iter()
            .map(|s| {
                let path = self.graph_path(repeat, variant, &s.id);
                if !path.exists() {
                    return Err(P2gError::MissingPrerequisite(format!("no graph at {}; run `encode` first", path.display())));
                }
                let graph = WeightGraph::load(&path)?;
                if graph.k != self.config.graph.k {
                    return Err(P2gError::Mismatch(format!("{} has K = {}, config says {}", path.display(), graph.k, self.config.graph.k)));
                }
                Ok(graph)
            })
            .collect()
    }

    fn vectors(&self, repeat: usize, seqs: &[SubjectSequence]) -> Result<Vec<Vec<f32>>> {
        Ok(self.load_decoders(repeat, Variant::DecM, seqs)?.iter().map(vec_encode).collect())
    }

    // ---- traingnn ----------------------------------------------------------

    fn train(&self) -> Result<()> {
        let data = self.load_data()?;
        let (ytr, yva) = (labels(&data.train), labels(&data.validation));
        for r in 0..self.config.repeats {
            let dir = self.stage_dir(r, Stage::TrainGnn);
            let mut inputs = Vec::new();
            for system in self.systems() {
                let seed = self.seed(&format!("train/{}", system.key()), r);
                let out = self.model_dir(r, system);
                let log: TrainLog = match system.learner() {
                    Learner::EncoderHead => continue,
                    Learner::Mlp => {
                        inputs.push(self.stage_dir(r, Stage::Fit));
                        let cfg = self.config.mlp.with_seed(seed);
                        let (model, log) =
                            mlp_baseline_train(&self.vectors(r, &data.train)?, &ytr, &self.vectors(r, &data.validation)?, &yva, &cfg)?;
                        write_params(&out.join("model"), &model.params, json!({ "kind": "mlp", "input_dim": model.input_dim }))?;
                        log
                    }
                    Learner::Gnn(arch) => {
                        let variant = system.variant().expect("graph systems have a variant");
                        inputs.push(self.stage_dir(r, Stage::Encode));
                        let cfg = self.config.gnn.learner().with_seed(seed);
                        let train = self.load_graphs(r, variant, &data.train)?;
                        let val = self.load_graphs(r, variant, &data.validation)?;
                        let (model, log) = train_gnn(arch, &train, &ytr, &val, &yva, &cfg)?;
                        write_params(&out.join("model"), &model.params, json!({ "kind": "gnn", "arch": arch, "k": model.k }))?;
                        log
                    }
                };
                write_json(&out.join("log.json"), &log)?;
            }
            inputs.sort();
            inputs.dedup();
            provenance::write_manifest(&self.root, &dir, "traingnn", &self.config, &inputs)?;
        }
        Ok(())
    }

    // ---- eval --------------------------------------------------------------

    fn predict(&self, repeat: usize, system: System, test: &[SubjectSequence]) -> Result<Vec<[f64; 5]>> {
        let model_dir = self.model_dir(repeat, system).join("model");
        match system.learner() {
            Learner::EncoderHead => {
                let enc = self.load_encoder(repeat, true)?;
                test.iter().map(|s| Ok(encoder_frame_baseline(&enc, s)?.values())).collect()
            }
            Learner::Mlp => {
                let (params, meta) = read_params::<f64>(&model_dir)?;
                let input_dim = meta["input_dim"].as_u64().unwrap_or(0) as usize;
                let model = MlpModel { input_dim, params };
                self.vectors(repeat, test)?.iter().map(|v| model.predict(&tensorcore::Tensor::from_vec(v.iter().map(|&x| x as f64).collect()))).collect()
            }
            Learner::Gnn(arch) => {
                let (params, _): (ParamSet<f64>, _) = read_params(&model_dir)?;
                let model = GnnModel::from_params(arch, self.config.graph.k, params)?;
                let variant = system.variant().expect("graph systems have a variant");
                self.load_graphs(repeat, variant, test)?.iter().map(|g| model.predict(g)).collect()
            }
        }
    }

    /// Scores every enabled system on the test split and writes the report.
    fn eval(&self) -> Result<AblationReport> {
        let data = self.load_data()?;
        let y = labels(&data.test);
        let test_ids = ids(&data.test);
        let mut per_system: Vec<(System, Vec<AccReport>)> = self.systems().into_iter().map(|s| (s, Vec::new())).collect();
        for r in 0..self.config.repeats {
            for (system, reports) in &mut per_system {
                let preds = self.predict(r, *system, &data.test)?;
                let score = acc(&preds, &y)?;
                let dir = self.eval_dir(r, *system);
                std::fs::create_dir_all(&dir).map_err(io_err(&dir))?;
                write_text(&dir.join("predictions.csv"), &predictions_csv(&test_ids, &preds))?;
                write_text(&dir.join("metrics.csv"), &metrics_csv(&score))?;
                reports.push(score);
            }
            let dir = self.stage_dir(r, Stage::Eval);
            let inputs: Vec<PathBuf> = [Stage::Pretrain, Stage::Encode, Stage::TrainGnn]
                .iter()
                .map(|s| self.stage_dir(r, *s))
                .filter(|p| p.exists())
                .collect();
            provenance::write_manifest(&self.root, &dir, "eval", &self.config, &inputs)?;
        }
        let report = AblationReport::from_repeats(self.config.seed, &per_system);
        write_text(&self.root.join("report.csv"), &report.to_csv())?;
        self.write_report_extras(&report)?;
        Ok(report)
    }

    fn write_report_extras(&self, report: &AblationReport) -> Result<()> {
        write_text(&self.root.join("report.md"), &report.to_markdown())?;
        write_json(&self.root.join("report.json"), report)
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(io_err(path))
}
