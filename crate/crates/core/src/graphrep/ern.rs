//! Edge representation network: a two-layer map from the concatenated
//! endpoint features `v_src ‖ v_dst` (length 2K) to an edge feature of
//! length K, with hidden width 2K and relu between the layers.

use tensorcore::{ParamSet, Real, Rng, Tape, Tensor, Var};

use super::graph::WeightGraph;
use crate::error::{P2gError, Result};

pub const ERN_NAMES: [&str; 4] = ["ern.fc1.weight", "ern.fc1.bias", "ern.fc2.weight", "ern.fc2.bias"];

/// Appends He-initialised ERN weights and zero biases to `params`; returns
/// the index of the first one.
pub fn ern_init<T: Real>(params: &mut ParamSet<T>, k: usize, rng: &mut Rng) -> usize {
    let first = params.add(ERN_NAMES[0], rng.he_uniform(&[2 * k, 2 * k], 2 * k));
    params.add(ERN_NAMES[1], Tensor::zeros(&[2 * k]));
    params.add(ERN_NAMES[2], rng.he_uniform(&[k, 2 * k], 2 * k));
    params.add(ERN_NAMES[3], Tensor::zeros(&[k]));
    first
}

/// Edge features `[E, K]` from source and destination rows `[E, K]`.
/// `p` holds the four ERN variables in `ERN_NAMES` order.
pub fn ern_apply<'t, T: Real>(p: &[Var<'t, T>], src: Var<'t, T>, dst: Var<'t, T>) -> Result<Var<'t, T>> {
    let x = src.concat_cols(dst)?;
    let h = x.linear(p[0], Some(p[1]))?.relu();
    Ok(h.linear(p[2], Some(p[3]))?)
}

fn ern_slice<'t, T: Real>(params: &ParamSet<T>, tape: &'t Tape<T>) -> Result<Vec<Var<'t, T>>> {
    ERN_NAMES
        .iter()
        .map(|name| {
            params
                .by_name(name)
                .map(|p| tape.leaf(p.value.clone()))
                .ok_or_else(|| P2gError::Invalid(format!("parameter set lacks {name}")))
        })
        .collect()
}

/// Returns `graph` with every edge feature set to `ERN(v_src ‖ v_dst)`,
/// using the `ern.*` entries of `params`.
pub fn ern_edge_features(graph: &WeightGraph, params: &ParamSet<f64>) -> Result<WeightGraph> {
    let mut out = graph.clone();
    if graph.edges.is_empty() {
        return Ok(out);
    }
    let tape = Tape::new();
    let p = ern_slice(params, &tape)?;
    let k = graph.k;
    let verts = tape.leaf(Tensor::new(vec![graph.vertices.len(), k], graph.vertex_matrix())?);
    let src: Vec<usize> = graph.edges.iter().map(|e| e.src).collect();
    let dst: Vec<usize> = graph.edges.iter().map(|e| e.dst).collect();
    let feats = ern_apply(&p, verts.gather_rows(&src)?, verts.gather_rows(&dst)?)?.value();
    for (e, row) in out.edges.iter_mut().zip(feats.data().chunks(k)) {
        e.feat = row.to_vec();
    }
    Ok(out)
}
