use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use tensorcore::{ParamSet, Real, Rng, Tape, Tensor, Var};

use crate::error::{P2gError, Result};
use crate::graphrep::{ern_apply, ern_init, WeightGraph};

pub const GAT_LAYERS: usize = 3;
pub const GATED_GCN_LAYERS: usize = 5;
pub const GAT_LEAKY_SLOPE: f64 = 0.2;
const GATE_EPS: f64 = 1e-6;
/// Variance floor of the per-graph feature standardisation in GatedGCN.
const NORM_EPS: f64 = 1e-5;
const N_ERN: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GnnArch {
    #[serde(rename = "gat")]
    Gat,
    #[serde(rename = "gatedgcn")]
    GatedGcn,
}

impl GnnArch {
    pub fn layers(self) -> usize {
        match self {
            GnnArch::Gat => GAT_LAYERS,
            GnnArch::GatedGcn => GATED_GCN_LAYERS,
        }
    }

    fn params_per_layer(self) -> usize {
        match self {
            GnnArch::Gat => 3,
            GnnArch::GatedGcn => 7,
        }
    }
}

/// Message-passing view of a graph: every edge in both directions (each
/// ordered pair once) followed by one self-loop per vertex.
#[derive(Clone, Debug, PartialEq)]
pub struct PreparedGraph<T> {
    pub vertices: Tensor<T>,
    pub src: Vec<usize>,
    pub dst: Vec<usize>,
}

impl<T: Real> PreparedGraph<T> {
    pub fn new(graph: &WeightGraph) -> Result<Self> {
        graph.validate()?;
        let nv = graph.vertices.len();
        if nv == 0 {
            return Err(P2gError::Invalid(format!("graph {} has no vertices", graph.subject_id)));
        }
        let mut seen = HashSet::new();
        let (mut src, mut dst) = (Vec::new(), Vec::new());
        for e in &graph.edges {
            for (s, d) in [(e.src, e.dst), (e.dst, e.src)] {
                if seen.insert((s, d)) {
                    src.push(s);
                    dst.push(d);
                }
            }
        }
        src.extend(0..nv);
        dst.extend(0..nv);
        let feats: Vec<T> = graph.vertex_matrix().into_iter().map(T::lit).collect();
        Ok(Self { vertices: Tensor::new(vec![nv, graph.k], feats)?, src, dst })
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.shape()[0]
    }
}

/// Per-layer attention coefficients (GAT) or gate values (GatedGCN), in
/// message-edge order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ForwardTrace {
    pub attention: Vec<Vec<f64>>,
    pub gates: Vec<Vec<f64>>,
}

/// ERN, message-passing layers and readout in one parameter set.
#[derive(Clone, Debug, PartialEq)]
pub struct GnnModel<T> {
    pub arch: GnnArch,
    pub k: usize,
    pub params: ParamSet<T>,
}

impl<T: Real> GnnModel<T> {
    pub fn new(arch: GnnArch, k: usize, seed: u64) -> Result<Self> {
        if k == 0 {
            return Err(P2gError::Invalid("feature dimension must be positive".into()));
        }
        let mut rng = Rng::new(seed);
        let mut params = ParamSet::new();
        ern_init(&mut params, k, &mut rng);
        for l in 0..arch.layers() {
            match arch {
                GnnArch::Gat => {
                    params.add(format!("gat.l{l}.w"), rng.he_uniform(&[k, k], k));
                    params.add(format!("gat.l{l}.we"), rng.he_uniform(&[k, k], k));
                    params.add(format!("gat.l{l}.att"), rng.he_uniform(&[1, 3 * k], 3 * k));
                }
                GnnArch::GatedGcn => {
                    for name in ["a", "b", "c"] {
                        params.add(format!("gatedgcn.l{l}.{name}"), rng.he_uniform(&[k, k], k));
                    }
                    params.add(format!("gatedgcn.l{l}.c_bias"), Tensor::zeros(&[k]));
                    params.add(format!("gatedgcn.l{l}.u"), rng.he_uniform(&[k, k], k));
                    params.add(format!("gatedgcn.l{l}.u_bias"), Tensor::zeros(&[k]));
                    params.add(format!("gatedgcn.l{l}.v"), rng.he_uniform(&[k, k], k));
                }
            }
        }
        params.add("readout.weight", rng.he_uniform(&[5, k], k));
        params.add("readout.bias", Tensor::zeros(&[5]));
        Ok(Self { arch, k, params })
    }

    /// Rebuilds a model around loaded parameters, checking names and shapes.
    pub fn from_params(arch: GnnArch, k: usize, params: ParamSet<T>) -> Result<Self> {
        let reference = Self::new(arch, k, 0)?;
        let ok = reference.params.len() == params.len()
            && reference.params.iter().zip(params.iter()).all(|(a, b)| a.name == b.name && a.value.shape() == b.value.shape());
        if !ok {
            return Err(P2gError::Mismatch(format!("parameters do not match a {arch:?} model with K = {k}")));
        }
        Ok(Self { arch, k, params })
    }

    /// Trait predictions `[5]` on `tape`; `p` is `self.params` bound to it.
    pub fn forward<'t>(
        &self,
        tape: &'t Tape<T>,
        p: &[Var<'t, T>],
        graph: &PreparedGraph<T>,
        mut trace: Option<&mut ForwardTrace>,
    ) -> Result<Var<'t, T>> {
        if graph.vertices.shape()[1] != self.k {
            return Err(P2gError::Mismatch(format!("graph features have width {}, model expects {}", graph.vertices.shape()[1], self.k)));
        }
        let (src, dst, nv) = (&graph.src, &graph.dst, graph.num_vertices());
        let v = tape.leaf(graph.vertices.clone());
        let mut e = ern_apply(&p[..N_ERN], v.gather_rows(src)?, v.gather_rows(dst)?)?;
        let mut h = v;
        let layers = self.arch.layers();
        for l in 0..layers {
            let q = &p[N_ERN + l * self.arch.params_per_layer()..];
            match self.arch {
                GnnArch::Gat => {
                    let wh = h.linear(q[0], None)?;
                    let we = e.linear(q[1], None)?;
                    let hs = wh.gather_rows(src)?;
                    let z = hs.concat_cols(wh.gather_rows(dst)?)?.concat_cols(we)?;
                    let score = z.linear(q[2], None)?.leaky_relu(GAT_LEAKY_SLOPE).reshape(&[src.len()])?;
                    let alpha = score.segment_softmax(dst)?;
                    if let Some(t) = trace.as_deref_mut() {
                        t.attention.push(alpha.value().data().iter().map(|x| x.as_f64()).collect());
                    }
                    h = hs.scale_rows(alpha)?.scatter_add_rows(dst, nv)?;
                    if l + 1 < layers {
                        h = h.elu();
                    }
                }
                GnnArch::GatedGcn => {
                    // e_hat = C e + A h_dst + B h_src; gates sigmoid(e_hat) weight
                    // V h_src in a normalised sum; both streams are residual.
                    let e_hat = e
                        .linear(q[2], Some(q[3]))?
                        .add(h.linear(q[0], None)?.gather_rows(dst)?)?
                        .add(h.linear(q[1], None)?.gather_rows(src)?)?;
                    let gate = e_hat.sigmoid();
                    if let Some(t) = trace.as_deref_mut() {
                        t.gates.push(gate.value().data().iter().map(|x| x.as_f64()).collect());
                    }
                    let vh = h.linear(q[6], None)?.gather_rows(src)?;
                    let num = gate.mul(vh)?.scatter_add_rows(dst, nv)?;
                    let den = gate.scatter_add_rows(dst, nv)?.add_scalar(GATE_EPS);
                    let update = h.linear(q[4], Some(q[5]))?.add(num.div(den)?)?;
                    h = h.add(update.standardize_cols(NORM_EPS)?.relu())?;
                    e = e.add(e_hat.standardize_cols(NORM_EPS)?.relu())?;
                }
            }
        }
        let r = &p[p.len() - 2..];
        Ok(h.mean_rows()?.linear(r[0], Some(r[1]))?.sigmoid())
    }

    pub fn predict_prepared(&self, graph: &PreparedGraph<T>) -> Result<[f64; 5]> {
        let tape = Tape::new();
        let p = self.params.bind(&tape);
        let out = self.forward(&tape, &p, graph, None)?.value();
        Ok(std::array::from_fn(|i| out.data()[i].as_f64()))
    }

    pub fn predict(&self, graph: &WeightGraph) -> Result<[f64; 5]> {
        self.predict_prepared(&PreparedGraph::new(graph)?)
    }

    pub fn trace(&self, graph: &WeightGraph) -> Result<ForwardTrace> {
        let prepared = PreparedGraph::new(graph)?;
        let tape = Tape::new();
        let p = self.params.bind(&tape);
        let mut trace = ForwardTrace::default();
        self.forward(&tape, &p, &prepared, Some(&mut trace))?;
        Ok(trace)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphrep::{Edge, Vertex, VertexKind};

    fn random_graph(nv: usize, edges: &[(usize, usize)], k: usize, seed: u64) -> WeightGraph {
        let mut rng = Rng::new(seed);
        let vertices = (0..nv)
            .map(|i| Vertex { n: 1, a: i + 1, kind: VertexKind::Conv, feat: (0..k).map(|_| rng.normal()).collect() })
            .collect();
        let edges = edges.iter().map(|&(src, dst)| Edge { src, dst, feat: vec![0.0; k] }).collect();
        WeightGraph { subject_id: "toy".into(), k, vertices, edges }
    }

    #[test]
    fn message_edges_symmetrised_with_self_loops() {
        let g = random_graph(3, &[(0, 1), (1, 2), (2, 1)], 2, 1);
        let p = PreparedGraph::<f64>::new(&g).unwrap();
        assert_eq!(p.src, vec![0, 1, 1, 2, 0, 1, 2]);
        assert_eq!(p.dst, vec![1, 0, 2, 1, 0, 1, 2]);
    }

    #[test]
    fn attention_normalised_per_vertex() {
        let g = random_graph(6, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (0, 5)], 4, 2);
        let model = GnnModel::<f64>::new(GnnArch::Gat, 4, 3).unwrap();
        let trace = model.trace(&g).unwrap();
        let p = PreparedGraph::<f64>::new(&g).unwrap();
        assert_eq!(trace.attention.len(), GAT_LAYERS);
        for alpha in &trace.attention {
            let mut sums = [0.0; 6];
            for (a, &d) in alpha.iter().zip(&p.dst) {
                sums[d] += a;
            }
            assert!(sums.iter().all(|s| (s - 1.0).abs() < 1e-6), "{sums:?}");
        }
    }

    #[test]
    fn gates_strictly_inside_unit_interval() {
        let g = random_graph(5, &[(0, 1), (1, 2), (2, 3), (3, 4)], 4, 4);
        let model = GnnModel::<f64>::new(GnnArch::GatedGcn, 4, 5).unwrap();
        let trace = model.trace(&g).unwrap();
        assert_eq!(trace.gates.len(), GATED_GCN_LAYERS);
        assert!(trace.gates.iter().flatten().all(|&x| x > 0.0 && x < 1.0));
    }

    #[test]
    fn outputs_inside_unit_interval() {
        let g = random_graph(4, &[(0, 1), (2, 3)], 3, 6);
        for arch in [GnnArch::Gat, GnnArch::GatedGcn] {
            let y = GnnModel::<f64>::new(arch, 3, 7).unwrap().predict(&g).unwrap();
            assert!(y.iter().all(|&v| v > 0.0 && v < 1.0));
        }
    }

    fn matvec(w: &Tensor<f64>, x: &[f64]) -> Vec<f64> {
        let d = x.len();
        w.data().chunks(d).map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum()).collect()
    }

    #[test]
    fn single_vertex_gat_is_stacked_projections() {
        let g = random_graph(1, &[], 3, 8);
        let model = GnnModel::<f64>::new(GnnArch::Gat, 3, 9).unwrap();
        let elu = |v: f64| if v > 0.0 { v } else { v.exp_m1() };
        let mut h = g.vertices[0].feat.clone();
        for l in 0..GAT_LAYERS {
            h = matvec(&model.params.by_name(&format!("gat.l{l}.w")).unwrap().value, &h);
            if l + 1 < GAT_LAYERS {
                h = h.into_iter().map(elu).collect();
            }
        }
        let logits = matvec(&model.params.by_name("readout.weight").unwrap().value, &h);
        let bias = model.params.by_name("readout.bias").unwrap().value.data().to_vec();
        let y = model.predict(&g).unwrap();
        for i in 0..5 {
            let want = 1.0 / (1.0 + (-(logits[i] + bias[i])).exp());
            assert!((y[i] - want).abs() < 1e-12);
        }
    }

    #[test]
    fn empty_graph_rejected() {
        let g = random_graph(0, &[], 3, 1);
        assert!(GnnModel::<f64>::new(GnnArch::Gat, 3, 1).unwrap().predict(&g).is_err());
    }

    #[test]
    fn relabelled_graph_gives_same_output() {
        let edges = [(0, 1), (1, 2), (2, 3), (4, 5), (5, 6)];
        let g = random_graph(7, &edges, 4, 10);
        let perm = [3, 6, 0, 5, 1, 4, 2];
        let mut h = g.clone();
        for (old, &new) in perm.iter().enumerate() {
            h.vertices[new] = g.vertices[old].clone();
        }
        for e in &mut h.edges {
            (e.src, e.dst) = (perm[e.src], perm[e.dst]);
        }
        for arch in [GnnArch::Gat, GnnArch::GatedGcn] {
            let m = GnnModel::<f64>::new(arch, 4, 11).unwrap();
            let (a, b) = (m.predict(&g).unwrap(), m.predict(&h).unwrap());
            assert!(a.iter().zip(&b).all(|(x, y)| (x - y).abs() <= 1e-6));
        }
    }

    #[test]
    fn from_params_checks_layout() {
        let m = GnnModel::<f64>::new(GnnArch::Gat, 4, 1).unwrap();
        assert!(GnnModel::from_params(GnnArch::Gat, 4, m.params.clone()).is_ok());
        assert!(GnnModel::from_params(GnnArch::GatedGcn, 4, m.params.clone()).is_err());
        assert!(GnnModel::from_params(GnnArch::Gat, 5, m.params).is_err());
    }
}
