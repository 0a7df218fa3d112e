//! Graph-attention surrogate models.
//!
//! Architecture: four attention layers (linear F->F plus single-head
//! additive attention over in-neighbors, LeakyReLU 0.02 inside attention and
//! between layers), average pooling over key nodes, a 3->12->12->12 branch
//! for the global feature vector, and a (F+12)->256->128->64->1 head. F is
//! the node feature width (31 at the default target-qubit width).
//!
//! Message passing runs over the stored edges plus reverse edges and
//! self-loops. Gradients are hand-derived reverse-mode and validated against
//! central finite differences (see [`gradient_check`]).

mod train;

pub use train::{gradient_check, predict_batch, r_squared, train, TrainConfig};

use ndarray::{Array1, Array2};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::featurize::{feature_width, CircuitGraph};
use crate::rng::rng_from_seed;

/// LeakyReLU slope used everywhere in the model.
pub const LEAKY_SLOPE: f64 = 0.02;

const GAT_LAYERS: usize = 4;
const GLOBAL_IN: usize = 3;
const GLOBAL_HIDDEN: usize = 12;
const HEAD_HIDDEN: [usize; 3] = [256, 128, 64];

#[inline]
fn leaky(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        LEAKY_SLOPE * x
    }
}

#[inline]
fn leaky_grad(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        LEAKY_SLOPE
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct GatLayer {
    w: Array2<f64>,
    b: Array1<f64>,
    /// Attention vector applied to the aggregating (destination) node.
    att_self: Array1<f64>,
    /// Attention vector applied to the in-neighbor (source) node.
    att_neigh: Array1<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Linear {
    w: Array2<f64>,
    b: Array1<f64>,
}

/// A trainable PST/KTA predictor.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SurrogateModel {
    pub q_width: usize,
    feature_dim: usize,
    gat: Vec<GatLayer>,
    global_mlp: Vec<Linear>,
    head: Vec<Linear>,
}

fn glorot(rng: &mut crate::rng::SeededRng, rows: usize, cols: usize, fan_in: usize, fan_out: usize) -> Array2<f64> {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    Array2::from_shape_fn((rows, cols), |_| rng.random_range(-limit..limit))
}

impl SurrogateModel {
    /// Fresh model with Glorot-uniform weights and zero biases.
    pub fn new(q_width: usize, seed: u64) -> Self {
        let f = feature_width(q_width);
        let mut rng = rng_from_seed(seed);
        let gat = (0..GAT_LAYERS)
            .map(|_| GatLayer {
                w: glorot(&mut rng, f, f, f, f),
                b: Array1::zeros(f),
                att_self: glorot(&mut rng, 1, f, f, 1).row(0).to_owned(),
                att_neigh: glorot(&mut rng, 1, f, f, 1).row(0).to_owned(),
            })
            .collect();
        let mut global_mlp = Vec::with_capacity(3);
        let mut gin = GLOBAL_IN;
        for _ in 0..3 {
            global_mlp.push(Linear {
                w: glorot(&mut rng, gin, GLOBAL_HIDDEN, gin, GLOBAL_HIDDEN),
                b: Array1::zeros(GLOBAL_HIDDEN),
            });
            gin = GLOBAL_HIDDEN;
        }
        let mut head = Vec::with_capacity(4);
        let mut hin = f + GLOBAL_HIDDEN;
        for &hout in HEAD_HIDDEN.iter() {
            head.push(Linear {
                w: glorot(&mut rng, hin, hout, hin, hout),
                b: Array1::zeros(hout),
            });
            hin = hout;
        }
        head.push(Linear {
            w: glorot(&mut rng, hin, 1, hin, 1),
            b: Array1::zeros(1),
        });
        SurrogateModel {
            q_width,
            feature_dim: f,
            gat,
            global_mlp,
            head,
        }
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn num_params(&self) -> usize {
        let mut n = 0;
        for l in &self.gat {
            n += l.w.len() + l.b.len() + l.att_self.len() + l.att_neigh.len();
        }
        for l in self.global_mlp.iter().chain(&self.head) {
            n += l.w.len() + l.b.len();
        }
        n
    }

    /// Flatten all parameters in a fixed order.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        for l in &self.gat {
            out.extend(l.w.iter());
            out.extend(l.b.iter());
            out.extend(l.att_self.iter());
            out.extend(l.att_neigh.iter());
        }
        for l in self.global_mlp.iter().chain(&self.head) {
            out.extend(l.w.iter());
            out.extend(l.b.iter());
        }
        out
    }

    /// Load parameters from a flat vector (inverse of [`Self::to_flat`]).
    pub fn from_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.num_params() {
            return Err(Error::Dimension(format!(
                "expected {} parameters, got {}",
                self.num_params(),
                flat.len()
            )));
        }
        let mut pos = 0;
        let take = |arr: &mut [f64], pos: &mut usize| {
            arr.copy_from_slice(&flat[*pos..*pos + arr.len()]);
            *pos += arr.len();
        };
        for l in &mut self.gat {
            take(l.w.as_slice_mut().unwrap(), &mut pos);
            take(l.b.as_slice_mut().unwrap(), &mut pos);
            take(l.att_self.as_slice_mut().unwrap(), &mut pos);
            take(l.att_neigh.as_slice_mut().unwrap(), &mut pos);
        }
        for l in self.global_mlp.iter_mut().chain(self.head.iter_mut()) {
            take(l.w.as_slice_mut().unwrap(), &mut pos);
            take(l.b.as_slice_mut().unwrap(), &mut pos);
        }
        Ok(())
    }

    /// Persist as a JSON document with shape metadata.
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    /// Load a persisted model, rejecting shape mismatches.
    pub fn from_json(text: &str) -> Result<Self> {
        let model: SurrogateModel =
            serde_json::from_str(text).map_err(|e| Error::Parse(format!("model: {e}")))?;
        let f = feature_width(model.q_width);
        if model.feature_dim != f
            || model.gat.len() != GAT_LAYERS
            || model.gat.iter().any(|l| l.w.dim() != (f, f) || l.b.len() != f
                || l.att_self.len() != f || l.att_neigh.len() != f)
            || model.global_mlp.len() != 3
            || model.head.len() != 4
            || model.head[0].w.nrows() != f + GLOBAL_HIDDEN
        {
            return Err(Error::Parse("model shapes are inconsistent".into()));
        }
        Ok(model)
    }

    /// Scalar prediction for one normalized graph.
    pub fn forward(&self, graph: &CircuitGraph) -> Result<f64> {
        let prepared = PreparedGraph::build(graph, self.feature_dim)?;
        Ok(self.forward_prepared(&prepared).output)
    }

    pub(crate) fn forward_prepared(&self, g: &PreparedGraph) -> ForwardTrace {
        let f = self.feature_dim;
        let n = g.x.nrows();
        let mut h_all: Vec<Array2<f64>> = Vec::with_capacity(GAT_LAYERS + 1);
        h_all.push(g.x.clone());
        let mut z_all = Vec::with_capacity(GAT_LAYERS);
        let mut m_all = Vec::with_capacity(GAT_LAYERS);
        let mut t_all = Vec::with_capacity(GAT_LAYERS);
        let mut alpha_all = Vec::with_capacity(GAT_LAYERS);

        for (li, layer) in self.gat.iter().enumerate() {
            let h = &h_all[li];
            let z = h.dot(&layer.w) + &layer.b;
            let s_self = z.dot(&layer.att_self);
            let s_neigh = z.dot(&layer.att_neigh);
            let mut t = vec![0.0; g.in_src.len()];
            let mut alpha = vec![0.0; g.in_src.len()];
            let mut m = Array2::<f64>::zeros((n, f));
            for i in 0..n {
                let (lo, hi) = (g.in_offsets[i], g.in_offsets[i + 1]);
                let mut maxe = f64::NEG_INFINITY;
                for e in lo..hi {
                    let raw = s_self[i] + s_neigh[g.in_src[e]];
                    t[e] = raw;
                    maxe = maxe.max(leaky(raw));
                }
                let mut denom = 0.0;
                for e in lo..hi {
                    let w = (leaky(t[e]) - maxe).exp();
                    alpha[e] = w;
                    denom += w;
                }
                for e in lo..hi {
                    alpha[e] /= denom;
                    let zj = z.row(g.in_src[e]);
                    let a = alpha[e];
                    for (c, v) in zj.iter().enumerate() {
                        m[[i, c]] += a * v;
                    }
                }
            }
            let next = if li < GAT_LAYERS - 1 {
                m.mapv(leaky)
            } else {
                m.clone()
            };
            h_all.push(next);
            z_all.push(z);
            m_all.push(m);
            t_all.push(t);
            alpha_all.push(alpha);
        }

        // average pooling over key nodes
        let mut pooled = Array1::<f64>::zeros(f);
        if !g.key_idx.is_empty() {
            let scale = 1.0 / g.key_idx.len() as f64;
            let hl = &h_all[GAT_LAYERS];
            for &i in &g.key_idx {
                for c in 0..f {
                    pooled[c] += hl[[i, c]] * scale;
                }
            }
        }

        // global branch
        let mut g_z = Vec::with_capacity(3);
        let mut g_a = Vec::with_capacity(3);
        let mut cur = Array1::from(vec![g.globals[0], g.globals[1], g.globals[2]]);
        for lin in &self.global_mlp {
            let z = cur.dot(&lin.w) + &lin.b;
            let a = z.mapv(leaky);
            g_z.push(z);
            g_a.push(a.clone());
            cur = a;
        }

        // head on [pooled ++ global]
        let mut cat = Array1::<f64>::zeros(f + GLOBAL_HIDDEN);
        cat.slice_mut(ndarray::s![..f]).assign(&pooled);
        cat.slice_mut(ndarray::s![f..]).assign(&cur);
        let mut head_z = Vec::with_capacity(self.head.len());
        let mut head_a = Vec::with_capacity(self.head.len());
        let mut cur = cat.clone();
        for (idx, lin) in self.head.iter().enumerate() {
            let z = cur.dot(&lin.w) + &lin.b;
            let a = if idx + 1 < self.head.len() {
                z.mapv(leaky)
            } else {
                z.clone()
            };
            head_z.push(z);
            head_a.push(a.clone());
            cur = a;
        }
        let output = cur[0];

        ForwardTrace {
            h: h_all,
            z: z_all,
            m: m_all,
            t: t_all,
            alpha: alpha_all,
            cat,
            g_z,
            g_a,
            head_z,
            head_a,
            output,
        }
    }

    /// Gradients of a scalar loss w.r.t. all parameters, given d(loss)/d(out).
    pub(crate) fn backward_prepared(
        &self,
        g: &PreparedGraph,
        trace: &ForwardTrace,
        dout: f64,
        grads: &mut ModelGrads,
    ) {
        let f = self.feature_dim;
        let n = g.x.nrows();

        // head backward
        let mut da = Array1::from(vec![dout]);
        for idx in (0..self.head.len()).rev() {
            let dz = if idx + 1 < self.head.len() {
                let z = &trace.head_z[idx];
                Array1::from_shape_fn(z.len(), |c| da[c] * leaky_grad(z[c]))
            } else {
                da.clone()
            };
            let input = if idx == 0 {
                &trace.cat
            } else {
                &trace.head_a[idx - 1]
            };
            let gl = &mut grads.head[idx];
            for r in 0..input.len() {
                let xv = input[r];
                if xv != 0.0 {
                    for c in 0..dz.len() {
                        gl.w[[r, c]] += xv * dz[c];
                    }
                }
            }
            for c in 0..dz.len() {
                gl.b[c] += dz[c];
            }
            da = self.head[idx].w.dot(&dz);
        }
        let dcat = da;
        let dpooled = dcat.slice(ndarray::s![..f]).to_owned();
        let mut dglobal = dcat.slice(ndarray::s![f..]).to_owned();

        // global branch backward
        for idx in (0..self.global_mlp.len()).rev() {
            let z = &trace.g_z[idx];
            let dz = Array1::from_shape_fn(z.len(), |c| dglobal[c] * leaky_grad(z[c]));
            let input = if idx == 0 {
                Array1::from(vec![g.globals[0], g.globals[1], g.globals[2]])
            } else {
                trace.g_a[idx - 1].clone()
            };
            let gl = &mut grads.global_mlp[idx];
            for r in 0..input.len() {
                for c in 0..dz.len() {
                    gl.w[[r, c]] += input[r] * dz[c];
                }
            }
            for c in 0..dz.len() {
                gl.b[c] += dz[c];
            }
            dglobal = self.global_mlp[idx].w.dot(&dz);
        }

        // pooling backward
        let mut dh = Array2::<f64>::zeros((n, f));
        if !g.key_idx.is_empty() {
            let scale = 1.0 / g.key_idx.len() as f64;
            for &i in &g.key_idx {
                for c in 0..f {
                    dh[[i, c]] += dpooled[c] * scale;
                }
            }
        }

        // attention layers backward
        for li in (0..GAT_LAYERS).rev() {
            let layer = &self.gat[li];
            let z = &trace.z[li];
            let m = &trace.m[li];
            let t = &trace.t[li];
            let alpha = &trace.alpha[li];
            let h_prev = &trace.h[li];

            // activation between layers (layers 0..2 only)
            let dm = if li < GAT_LAYERS - 1 {
                let mut dm = dh.clone();
                for ((i, c), v) in dm.indexed_iter_mut() {
                    *v *= leaky_grad(m[[i, c]]);
                }
                dm
            } else {
                dh.clone()
            };

            let mut dz = Array2::<f64>::zeros((n, f));
            let mut ds_self = vec![0.0; n];
            let mut ds_neigh = vec![0.0; n];
            for i in 0..n {
                let (lo, hi) = (g.in_offsets[i], g.in_offsets[i + 1]);
                // dL/dalpha_e and the softmax correction term
                let mut dalpha = vec![0.0; hi - lo];
                let mut srow = 0.0;
                for e in lo..hi {
                    let j = g.in_src[e];
                    let mut d = 0.0;
                    for c in 0..f {
                        d += dm[[i, c]] * z[[j, c]];
                    }
                    dalpha[e - lo] = d;
                    srow += d * alpha[e];
                }
                for e in lo..hi {
                    let j = g.in_src[e];
                    let a = alpha[e];
                    // aggregation path
                    for c in 0..f {
                        dz[[j, c]] += a * dm[[i, c]];
                    }
                    let de = a * (dalpha[e - lo] - srow);
                    let dt = de * leaky_grad(t[e]);
                    ds_self[i] += dt;
                    ds_neigh[j] += dt;
                }
            }
            for i in 0..n {
                if ds_self[i] != 0.0 {
                    for c in 0..f {
                        dz[[i, c]] += ds_self[i] * layer.att_self[c];
                        grads.gat[li].att_self[c] += ds_self[i] * z[[i, c]];
                    }
                }
                if ds_neigh[i] != 0.0 {
                    for c in 0..f {
                        dz[[i, c]] += ds_neigh[i] * layer.att_neigh[c];
                        grads.gat[li].att_neigh[c] += ds_neigh[i] * z[[i, c]];
                    }
                }
            }

            // z = h_prev W + b
            let gw = h_prev.t().dot(&dz);
            grads.gat[li].w += &gw;
            for c in 0..f {
                let mut s = 0.0;
                for i in 0..n {
                    s += dz[[i, c]];
                }
                grads.gat[li].b[c] += s;
            }
            dh = dz.dot(&layer.w.t());
        }
    }
}

/// Gradient accumulator mirroring the model shapes.
#[derive(Debug, Clone)]
pub(crate) struct ModelGrads {
    gat: Vec<GatGrads>,
    global_mlp: Vec<LinearGrads>,
    head: Vec<LinearGrads>,
}

#[derive(Debug, Clone)]
struct GatGrads {
    w: Array2<f64>,
    b: Array1<f64>,
    att_self: Array1<f64>,
    att_neigh: Array1<f64>,
}

#[derive(Debug, Clone)]
struct LinearGrads {
    w: Array2<f64>,
    b: Array1<f64>,
}

impl ModelGrads {
    pub(crate) fn zeros_like(model: &SurrogateModel) -> Self {
        ModelGrads {
            gat: model
                .gat
                .iter()
                .map(|l| GatGrads {
                    w: Array2::zeros(l.w.dim()),
                    b: Array1::zeros(l.b.len()),
                    att_self: Array1::zeros(l.att_self.len()),
                    att_neigh: Array1::zeros(l.att_neigh.len()),
                })
                .collect(),
            global_mlp: model
                .global_mlp
                .iter()
                .map(|l| LinearGrads {
                    w: Array2::zeros(l.w.dim()),
                    b: Array1::zeros(l.b.len()),
                })
                .collect(),
            head: model
                .head
                .iter()
                .map(|l| LinearGrads {
                    w: Array2::zeros(l.w.dim()),
                    b: Array1::zeros(l.b.len()),
                })
                .collect(),
        }
    }

    pub(crate) fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for l in &self.gat {
            out.extend(l.w.iter());
            out.extend(l.b.iter());
            out.extend(l.att_self.iter());
            out.extend(l.att_neigh.iter());
        }
        for l in self.global_mlp.iter().chain(&self.head) {
            out.extend(l.w.iter());
            out.extend(l.b.iter());
        }
        out
    }

    pub(crate) fn scale(&mut self, factor: f64) {
        for l in &mut self.gat {
            l.w *= factor;
            l.b *= factor;
            l.att_self *= factor;
            l.att_neigh *= factor;
        }
        for l in self.global_mlp.iter_mut().chain(self.head.iter_mut()) {
            l.w *= factor;
            l.b *= factor;
        }
    }
}

/// Forward-pass intermediates kept for the backward pass.
pub(crate) struct ForwardTrace {
    h: Vec<Array2<f64>>,
    z: Vec<Array2<f64>>,
    m: Vec<Array2<f64>>,
    t: Vec<Vec<f64>>,
    alpha: Vec<Vec<f64>>,
    cat: Array1<f64>,
    g_z: Vec<Array1<f64>>,
    g_a: Vec<Array1<f64>>,
    head_z: Vec<Array1<f64>>,
    head_a: Vec<Array1<f64>>,
    pub(crate) output: f64,
}

impl ForwardTrace {
    /// Attention weights per destination node for one layer (testing aid).
    #[cfg(test)]
    pub(crate) fn attention_sums(&self, g: &PreparedGraph, layer: usize) -> Vec<f64> {
        let n = g.in_offsets.len() - 1;
        (0..n)
            .map(|i| {
                self.alpha[layer][g.in_offsets[i]..g.in_offsets[i + 1]]
                    .iter()
                    .sum()
            })
            .collect()
    }
}

/// A graph preprocessed for message passing: CSR in-neighbor lists over the
/// stored edges plus reverse edges (deduplicated) and self-loops.
pub(crate) struct PreparedGraph {
    pub(crate) x: Array2<f64>,
    pub(crate) in_offsets: Vec<usize>,
    pub(crate) in_src: Vec<usize>,
    pub(crate) key_idx: Vec<usize>,
    pub(crate) globals: [f64; 3],
}

impl PreparedGraph {
    pub(crate) fn build(graph: &CircuitGraph, expected_width: usize) -> Result<Self> {
        if graph.nodes.ncols() != expected_width {
            return Err(Error::Dimension(format!(
                "graph feature width {} does not match model width {}",
                graph.nodes.ncols(),
                expected_width
            )));
        }
        if !graph.normalized {
            return Err(Error::Invariant(
                "graphs must be normalized before prediction".into(),
            ));
        }
        let n = graph.nodes.nrows();
        let mut neighbors: Vec<Vec<usize>> = vec![Vec::new(); n];
        for &(s, d) in &graph.edges {
            neighbors[d].push(s);
            neighbors[s].push(d); // reverse edge
        }
        for (i, list) in neighbors.iter_mut().enumerate() {
            list.push(i); // self-loop
            list.sort_unstable();
            list.dedup();
        }
        let mut in_offsets = Vec::with_capacity(n + 1);
        let mut in_src = Vec::new();
        in_offsets.push(0);
        for list in &neighbors {
            in_src.extend(list);
            in_offsets.push(in_src.len());
        }
        let key_idx = graph
            .key_mask
            .iter()
            .enumerate()
            .filter(|(_, &k)| k)
            .map(|(i, _)| i)
            .collect();
        Ok(PreparedGraph {
            x: graph.nodes.clone(),
            in_offsets,
            in_src,
            key_idx,
            globals: graph.globals,
        })
    }
}
