//! Per-layer-position PCA over training subjects' flattened weights.

use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use tensorcore::{psnt, Tensor};

use super::layers::{extract_layers, LayerDescriptor, LayerKind};
use crate::checkpoint::{read_json, write_json};
use crate::error::{io_err, P2gError, Result};
use crate::pnet::DecoderSet;

/// Mean and orthonormal principal directions for one layer position.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PcaBasis {
    pub mean: Vec<f64>,
    /// `K_eff` rows of length `D`, by decreasing singular value.
    pub components: Vec<Vec<f64>>,
    pub singular_values: Vec<f64>,
}

/// Relative Gram eigenvalue floor (a singular-value ratio of 1e-6) under
/// which a direction is treated as null.
const RANK_TOL: f64 = 1e-12;

impl PcaBasis {
    /// Fits on the rows of `samples` (one per subject). Keeps
    /// `min(k, n - 1, D)` directions, fewer if the centred data has lower
    /// numerical rank. Each direction is signed so that its largest-magnitude
    /// entry (lowest index on ties) is positive.
    pub fn fit(samples: &[Vec<f64>], k: usize) -> Result<Self> {
        let n = samples.len();
        if n < 2 {
            return Err(P2gError::Invalid(format!("PCA needs at least 2 samples, got {n}")));
        }
        let d = samples[0].len();
        if d == 0 || samples.iter().any(|s| s.len() != d) {
            return Err(P2gError::Invalid("PCA samples must share a positive length".into()));
        }
        let mut mean = vec![0.0; d];
        for s in samples {
            for (m, v) in mean.iter_mut().zip(s) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n as f64);
        let centred = DMatrix::from_fn(n, d, |r, c| samples[r][c] - mean[c]);

        // Eigendecomposition of the smaller Gram matrix. The SVD routine loses
        // accuracy on rank-deficient input, and centred data always is.
        let (eigenvalues, vectors) = if n <= d {
            let e = (&centred * centred.transpose()).symmetric_eigen();
            (e.eigenvalues, centred.transpose() * e.eigenvectors)
        } else {
            let e = (centred.transpose() * &centred).symmetric_eigen();
            (e.eigenvalues, e.eigenvectors)
        };
        let mut order: Vec<usize> = (0..eigenvalues.len()).collect();
        order.sort_by(|&a, &b| eigenvalues[b].total_cmp(&eigenvalues[a]).then(a.cmp(&b)));

        let k_eff = k.min(n - 1).min(d);
        let top = order.first().map_or(0.0, |&i| eigenvalues[i]);
        let mut components: Vec<Vec<f64>> = Vec::with_capacity(k_eff);
        let mut singular_values = Vec::with_capacity(k_eff);
        for &i in order.iter().take(k_eff) {
            let lambda = eigenvalues[i];
            if lambda <= top * RANK_TOL || lambda <= 0.0 {
                break;
            }
            let mut row: Vec<f64> = vectors.column(i).iter().copied().collect();
            for c in &components {
                let dot: f64 = c.iter().zip(&row).map(|(a, b)| a * b).sum();
                row.iter_mut().zip(c).for_each(|(r, ci)| *r -= dot * ci);
            }
            let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            row.iter_mut().for_each(|v| *v /= norm);
            let pivot = row
                .iter()
                .enumerate()
                .fold(0, |best, (j, v)| if v.abs() > row[best].abs() { j } else { best });
            if row[pivot] < 0.0 {
                row.iter_mut().for_each(|v| *v = -*v);
            }
            components.push(row);
            singular_values.push(lambda.sqrt());
        }
        Ok(Self { mean, components, singular_values })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn k_eff(&self) -> usize {
        self.components.len()
    }

    /// Projection of `x - mean` onto the components, zero-padded to `k`.
    pub fn project(&self, x: &[f64], k: usize) -> Result<Vec<f64>> {
        if x.len() != self.dim() {
            return Err(P2gError::Mismatch(format!("weight vector of length {}, basis expects {}", x.len(), self.dim())));
        }
        let mut out = vec![0.0; k];
        for (o, c) in out.iter_mut().zip(&self.components) {
            *o = c.iter().zip(x).zip(&self.mean).map(|((ci, xi), mi)| ci * (xi - mi)).sum();
        }
        Ok(out)
    }
}

/// Basis for one conv layer position `(n, a)`, both 1-based.
#[derive(Clone, Debug, PartialEq)]
pub struct BankEntry {
    pub decoder: usize,
    pub layer: usize,
    pub basis: PcaBasis,
}

/// Per-position PCA bases fitted on the training split's decoder weights.
#[derive(Clone, Debug, PartialEq)]
pub struct PcaBank {
    pub k: usize,
    pub decoders: usize,
    pub entries: Vec<BankEntry>,
}

#[derive(Serialize, Deserialize)]
struct BankIndex {
    k: usize,
    decoders: usize,
    positions: Vec<(usize, usize)>,
}

impl PcaBank {
    pub fn entry(&self, decoder: usize, layer: usize) -> Option<&BankEntry> {
        self.entries.iter().find(|e| e.decoder == decoder && e.layer == layer)
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
        let index = BankIndex { k: self.k, decoders: self.decoders, positions: self.entries.iter().map(|e| (e.decoder, e.layer)).collect() };
        write_json(&dir.join("bank.json"), &index)?;
        for e in &self.entries {
            let stem = format!("n{}_a{}", e.decoder, e.layer);
            let b = &e.basis;
            psnt::write(dir.join(format!("{stem}.mean.psnt")), &Tensor::from_vec(b.mean.clone()))?;
            let comps = Tensor::new(vec![b.k_eff(), b.dim()], b.components.concat())?;
            psnt::write(dir.join(format!("{stem}.components.psnt")), &comps)?;
            psnt::write(dir.join(format!("{stem}.singular.psnt")), &Tensor::new(vec![b.k_eff()], b.singular_values.clone())?)?;
        }
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let index_path = dir.join("bank.json");
        if !index_path.exists() {
            return Err(P2gError::MissingPrerequisite(format!("no PCA bank at {}", dir.display())));
        }
        let index: BankIndex = read_json(&index_path)?;
        let mut entries = Vec::with_capacity(index.positions.len());
        for (decoder, layer) in index.positions {
            let stem = format!("n{decoder}_a{layer}");
            let mean: Tensor<f64> = psnt::read(dir.join(format!("{stem}.mean.psnt")))?;
            let comps: Tensor<f64> = psnt::read(dir.join(format!("{stem}.components.psnt")))?;
            let sv: Tensor<f64> = psnt::read(dir.join(format!("{stem}.singular.psnt")))?;
            let d = mean.len();
            let components = if comps.is_empty() { Vec::new() } else { comps.data().chunks(d).map(<[f64]>::to_vec).collect() };
            entries.push(BankEntry {
                decoder,
                layer,
                basis: PcaBasis { mean: mean.into_data(), components, singular_values: sv.into_data() },
            });
        }
        Ok(Self { k: index.k, decoders: index.decoders, entries })
    }
}

/// Fits one basis per conv layer position across the given subjects, which
/// must all share an architecture and decoder count.
pub fn fit_pca_bank(sets: &[DecoderSet], k: usize) -> Result<PcaBank> {
    if sets.len() < 2 {
        return Err(P2gError::Invalid(format!("PCA bank needs at least 2 training subjects, got {}", sets.len())));
    }
    if k == 0 {
        return Err(P2gError::Invalid("PCA dimension must be positive".into()));
    }
    let first = &sets[0];
    for s in sets {
        if s.arch != first.arch || s.decoders.len() != first.decoders.len() {
            return Err(P2gError::Mismatch(format!("subject {} has a different decoder layout than {}", s.subject_id, first.subject_id)));
        }
    }
    let layers: Vec<Vec<LayerDescriptor>> = sets.iter().map(extract_layers).collect();
    let mut entries = Vec::new();
    for (pos, d) in layers[0].iter().enumerate() {
        if d.kind != LayerKind::Conv {
            continue;
        }
        let samples: Vec<Vec<f64>> =
            layers.iter().map(|ls| ls[pos].weights.iter().map(|&w| w as f64).collect()).collect();
        entries.push(BankEntry { decoder: d.decoder, layer: d.layer, basis: PcaBasis::fit(&samples, k)? });
    }
    Ok(PcaBank { k, decoders: first.decoders.len(), entries })
}
