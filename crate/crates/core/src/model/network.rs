//! Parameters and the forward/backward passes of CFL and HiCFL.
//!
//! A stack of graph convolutions `h ← φ(BN(Â h Wᵀ + b))` (no normalization,
//! activation or dropout on the last one) feeds either a single logit (CFL) or
//! the hierarchical heads (HiCFL):
//!
//! ```text
//! a_p(1)   = φ(W_p(0) h + b)            a_q(l) = φ(W_t(l) a_p(l) + b)
//! a_p(l+1) = φ(W_p(l) [a_p(l); h] + b)  z_q(l) = σ(W_q(l) a_q(l) + b)
//! z_p      = σ(W_p(L) a_p(L) + b)       s      = α z_p + (1 - α) Π_l z_q(l)
//! ```

use ndarray::{concatenate, s, Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::layers::{relu_backward, relu_inplace, sigmoid, BatchNorm, BatchNormCache, Linear};
use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum ModelKind {
    /// One sigmoid output trained on a single level.
    Cfl,
    /// Global and per-level local heads over `levels` hierarchy levels.
    HiCfl { levels: usize },
}

/// Shape of a network.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Architecture {
    pub kind: ModelKind,
    pub input_dim: usize,
    pub hidden_dim: usize,
    /// Number of graph convolutions (`l_c`).
    pub gcn_layers: usize,
    pub batch_norm: bool,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GcnLayer {
    pub linear: Linear,
    /// Present on every layer except the output one when batch norm is enabled.
    pub norm: Option<BatchNorm>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HierarchyHeads {
    /// `W_p(0) .. W_p(L)`; the last one is the global output layer.
    pub global: Vec<Linear>,
    /// `W_t(1) .. W_t(L)`
    pub local_hidden: Vec<Linear>,
    /// `W_q(1) .. W_q(L)`
    pub local_out: Vec<Linear>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub kind: ModelKind,
    pub gcn: Vec<GcnLayer>,
    pub heads: Option<HierarchyHeads>,
    pub alpha: f64,
}

/// Forward results for every node.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelOutputs {
    /// Output of the last graph convolution.
    pub hidden: Array2<f64>,
    /// CFL probability, or the HiCFL global head `z_p`.
    pub z: Array1<f64>,
    /// HiCFL local heads `z_q(1..L)`; empty for CFL.
    pub z_local: Vec<Array1<f64>>,
    /// Relevance scores `s`.
    pub scores: Array1<f64>,
}

/// How a forward pass treats batch norm and dropout.
pub enum ForwardMode<'a> {
    /// Running statistics, no dropout.
    Inference,
    /// Batch statistics; dropout at `rate` drawn from `rng` when given.
    Training { dropout: Option<(f64, &'a mut ChaCha8Rng)> },
}

struct GcnCache {
    input: Array2<f64>,
    bn: Option<BatchNormCache>,
    activated: Option<Array2<f64>>,
    dropout_mask: Option<Array2<f64>>,
}

struct HeadCache {
    global_act: Vec<Array2<f64>>,
    local_act: Vec<Array2<f64>>,
}

/// Everything the backward pass needs.
pub struct ForwardCache {
    gcn: Vec<GcnCache>,
    hidden: Array2<f64>,
    heads: Option<HeadCache>,
    pub logits: Array1<f64>,
    pub local_logits: Vec<Array1<f64>>,
}

impl ForwardCache {
    /// Which ReLU units were active, over every rectified layer in a fixed
    /// order. Two forward passes with equal patterns lie on the same smooth
    /// piece of the loss.
    pub fn relu_pattern(&self) -> Vec<bool> {
        let mut out = Vec::new();
        for c in &self.gcn {
            if let Some(a) = &c.activated {
                out.extend(a.iter().map(|&v| v > 0.0));
            }
        }
        if let Some(h) = &self.heads {
            for a in h.global_act.iter().chain(&h.local_act) {
                out.extend(a.iter().map(|&v| v > 0.0));
            }
        }
        out
    }
}

impl ModelParams {
    pub fn init(arch: &Architecture, rng: &mut impl Rng) -> Result<Self> {
        if arch.gcn_layers < 1 {
            return Err(Error::InvalidArgument("at least one graph convolution is required".into()));
        }
        if arch.input_dim == 0 || arch.hidden_dim == 0 {
            return Err(Error::InvalidArgument("layer widths must be positive".into()));
        }
        if !(0.0..=1.0).contains(&arch.alpha) {
            return Err(Error::InvalidArgument(format!("alpha {} outside [0, 1]", arch.alpha)));
        }
        let out_dim = match arch.kind {
            ModelKind::Cfl => 1,
            ModelKind::HiCfl { levels } => {
                if levels < 1 {
                    return Err(Error::InvalidArgument("HiCFL needs at least one level".into()));
                }
                arch.hidden_dim
            }
        };
        let mut gcn = Vec::with_capacity(arch.gcn_layers);
        for l in 0..arch.gcn_layers {
            let last = l + 1 == arch.gcn_layers;
            let inp = if l == 0 { arch.input_dim } else { arch.hidden_dim };
            let out = if last { out_dim } else { arch.hidden_dim };
            gcn.push(GcnLayer {
                linear: Linear::glorot(inp, out, rng),
                norm: (!last && arch.batch_norm).then(|| BatchNorm::new(out)),
            });
        }
        let heads = match arch.kind {
            ModelKind::Cfl => None,
            ModelKind::HiCfl { levels } => {
                let h = arch.hidden_dim;
                let mut global = Vec::with_capacity(levels + 1);
                global.push(Linear::glorot(h, h, rng));
                for _ in 1..levels {
                    global.push(Linear::glorot(2 * h, h, rng));
                }
                global.push(Linear::glorot(h, 1, rng));
                let local_hidden = (0..levels).map(|_| Linear::glorot(h, h, rng)).collect();
                let local_out = (0..levels).map(|_| Linear::glorot(h, 1, rng)).collect();
                Some(HierarchyHeads {
                    global,
                    local_hidden,
                    local_out,
                })
            }
        };
        Ok(ModelParams {
            kind: arch.kind,
            gcn,
            heads,
            alpha: arch.alpha,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.gcn[0].linear.inputs()
    }

    pub fn levels(&self) -> usize {
        match self.kind {
            ModelKind::Cfl => 1,
            ModelKind::HiCfl { levels } => levels,
        }
    }

    /// Same structure, all trainable values zero; used to accumulate gradients.
    pub fn zeros_like(&self) -> Self {
        let zl = |l: &Linear| Linear::zeros(l.inputs(), l.outputs());
        ModelParams {
            kind: self.kind,
            gcn: self
                .gcn
                .iter()
                .map(|g| GcnLayer {
                    linear: zl(&g.linear),
                    norm: g.norm.as_ref().map(BatchNorm::zeros_like),
                })
                .collect(),
            heads: self.heads.as_ref().map(|h| HierarchyHeads {
                global: h.global.iter().map(zl).collect(),
                local_hidden: h.local_hidden.iter().map(zl).collect(),
                local_out: h.local_out.iter().map(zl).collect(),
            }),
            alpha: self.alpha,
        }
    }

    /// Visits every trainable tensor in a fixed order.
    pub fn visit_mut(&mut self, f: &mut dyn FnMut(&str, &mut [f64])) {
        fn lin(prefix: &str, l: &mut Linear, f: &mut dyn FnMut(&str, &mut [f64])) {
            f(&format!("{prefix}.weight"), l.weight.as_slice_mut().expect("standard layout"));
            f(&format!("{prefix}.bias"), l.bias.as_slice_mut().expect("standard layout"));
        }
        for (i, g) in self.gcn.iter_mut().enumerate() {
            lin(&format!("gcn.{i}"), &mut g.linear, f);
            if let Some(bn) = &mut g.norm {
                f(&format!("gcn.{i}.bn.gamma"), bn.gamma.as_slice_mut().expect("standard layout"));
                f(&format!("gcn.{i}.bn.beta"), bn.beta.as_slice_mut().expect("standard layout"));
            }
        }
        if let Some(h) = &mut self.heads {
            for (i, l) in h.global.iter_mut().enumerate() {
                lin(&format!("global.{i}"), l, f);
            }
            for (i, l) in h.local_hidden.iter_mut().enumerate() {
                lin(&format!("local_hidden.{}", i + 1), l, f);
            }
            for (i, l) in h.local_out.iter_mut().enumerate() {
                lin(&format!("local_out.{}", i + 1), l, f);
            }
        }
    }

    /// Copies of all trainable tensors, flattened, in `visit_mut` order.
    pub fn flatten(&self) -> Vec<(String, Vec<f64>)> {
        let mut out = Vec::new();
        self.clone().visit_mut(&mut |name, t| out.push((name.to_string(), t.to_vec())));
        out
    }

    pub fn parameter_count(&self) -> usize {
        self.flatten().iter().map(|(_, t)| t.len()).sum()
    }

    fn check_input(&self, adj: &CsrMatrix, x: ArrayView2<'_, f64>) -> Result<()> {
        if adj.rows() != x.nrows() || adj.cols() != x.nrows() {
            return Err(Error::Dimension(format!(
                "adjacency is {}x{} but features have {} rows",
                adj.rows(),
                adj.cols(),
                x.nrows()
            )));
        }
        if x.ncols() != self.input_dim() {
            return Err(Error::Dimension(format!(
                "features have {} columns, model expects {}",
                x.ncols(),
                self.input_dim()
            )));
        }
        if x.nrows() == 0 {
            return Err(Error::Dimension("empty graph".into()));
        }
        Ok(())
    }

    /// Graph convolutions only; returns `h(1..l_c)`.
    pub fn gcn_forward(
        &self,
        adj: &CsrMatrix,
        x: ArrayView2<'_, f64>,
        mode: ForwardMode<'_>,
    ) -> Result<Vec<Array2<f64>>> {
        self.check_input(adj, x)?;
        let mut mode = mode;
        let mut states = Vec::with_capacity(self.gcn.len());
        let mut h = x.to_owned();
        for (l, layer) in self.gcn.iter().enumerate() {
            let last = l + 1 == self.gcn.len();
            let (out, _) = gcn_layer_forward(layer, adj, &h, last, &mut mode);
            states.push(out.clone());
            h = out;
        }
        Ok(states)
    }

    /// Full forward pass; the cache is only needed for training.
    pub fn forward(
        &self,
        adj: &CsrMatrix,
        x: ArrayView2<'_, f64>,
        mode: ForwardMode<'_>,
    ) -> Result<(ModelOutputs, ForwardCache)> {
        self.check_input(adj, x)?;
        let mut mode = mode;
        let mut caches = Vec::with_capacity(self.gcn.len());
        let mut h = x.to_owned();
        for (l, layer) in self.gcn.iter().enumerate() {
            let last = l + 1 == self.gcn.len();
            let (out, cache) = gcn_layer_forward(layer, adj, &h, last, &mut mode);
            caches.push(cache);
            h = out;
        }
        let (outputs, head_cache, logits, local_logits) = self.heads_forward(h)?;
        let hidden = outputs.hidden.clone();
        Ok((
            outputs,
            ForwardCache {
                gcn: caches,
                hidden,
                heads: head_cache,
                logits,
                local_logits,
            },
        ))
    }

    #[allow(clippy::type_complexity)]
    fn heads_forward(
        &self,
        h: Array2<f64>,
    ) -> Result<(ModelOutputs, Option<HeadCache>, Array1<f64>, Vec<Array1<f64>>)> {
        match (&self.kind, &self.heads) {
            (ModelKind::Cfl, _) => {
                let logits = h.column(0).to_owned();
                let z = logits.mapv(sigmoid);
                Ok((
                    ModelOutputs {
                        hidden: h,
                        z: z.clone(),
                        z_local: Vec::new(),
                        scores: z,
                    },
                    None,
                    logits,
                    Vec::new(),
                ))
            }
            (ModelKind::HiCfl { levels }, Some(heads)) => {
                let levels = *levels;
                let mut global_act: Vec<Array2<f64>> = Vec::with_capacity(levels);
                let mut a = heads.global[0].forward(h.view());
                relu_inplace(&mut a);
                global_act.push(a);
                for l in 1..levels {
                    let cat = concatenate(Axis(1), &[global_act[l - 1].view(), h.view()]).expect("same rows");
                    let mut a = heads.global[l].forward(cat.view());
                    relu_inplace(&mut a);
                    global_act.push(a);
                }
                let logits = heads.global[levels].forward(global_act[levels - 1].view()).column(0).to_owned();
                let z = logits.mapv(sigmoid);
                let mut local_act = Vec::with_capacity(levels);
                let mut local_logits = Vec::with_capacity(levels);
                for ((hidden, out), act) in heads.local_hidden.iter().zip(&heads.local_out).zip(&global_act) {
                    let mut a = hidden.forward(act.view());
                    relu_inplace(&mut a);
                    local_logits.push(out.forward(a.view()).column(0).to_owned());
                    local_act.push(a);
                }
                let z_local: Vec<Array1<f64>> = local_logits.iter().map(|lg| lg.mapv(sigmoid)).collect();
                let scores = blend_scores(&z, &z_local, self.alpha);
                Ok((
                    ModelOutputs {
                        hidden: h,
                        z,
                        z_local,
                        scores,
                    },
                    Some(HeadCache { global_act, local_act }),
                    logits,
                    local_logits,
                ))
            }
            (ModelKind::HiCfl { .. }, None) => Err(Error::InvalidArgument("HiCFL parameters without heads".into())),
        }
    }

    /// Gradients of a loss given its derivatives with respect to the output
    /// logits (`d_logits` for CFL / the global head, `d_local` for local heads).
    pub fn backward(
        &self,
        adj: &CsrMatrix,
        cache: &ForwardCache,
        d_logits: &Array1<f64>,
        d_local: &[Array1<f64>],
    ) -> ModelParams {
        let mut grads = self.zeros_like();
        let mut g_h = match (&self.heads, &cache.heads) {
            (Some(heads), Some(hc)) => {
                let acc = grads.heads.as_mut().expect("heads");
                let levels = hc.global_act.len();
                let h_in = &cache.hidden;
                let hd = h_in.ncols();
                let mut g_global: Vec<Array2<f64>> = hc.global_act.iter().map(|a| Array2::zeros(a.raw_dim())).collect();

                let col = |v: &Array1<f64>| v.view().insert_axis(Axis(1)).to_owned();
                g_global[levels - 1] += &heads.global[levels].backward(
                    hc.global_act[levels - 1].view(),
                    col(d_logits).view(),
                    &mut acc.global[levels],
                );
                for l in 0..levels {
                    let mut g_a = heads.local_out[l].backward(hc.local_act[l].view(), col(&d_local[l]).view(), &mut acc.local_out[l]);
                    relu_backward(&hc.local_act[l], &mut g_a);
                    g_global[l] += &heads.local_hidden[l].backward(hc.global_act[l].view(), g_a.view(), &mut acc.local_hidden[l]);
                }
                let mut g_h = Array2::zeros(h_in.raw_dim());
                for l in (1..levels).rev() {
                    let mut g = std::mem::replace(&mut g_global[l], Array2::zeros((0, 0)));
                    relu_backward(&hc.global_act[l], &mut g);
                    let cat = concatenate(Axis(1), &[hc.global_act[l - 1].view(), h_in.view()]).expect("same rows");
                    let g_cat = heads.global[l].backward(cat.view(), g.view(), &mut acc.global[l]);
                    let split = hc.global_act[l - 1].ncols();
                    g_global[l - 1] += &g_cat.slice(s![.., ..split]);
                    g_h += &g_cat.slice(s![.., split..split + hd]);
                }
                let mut g0 = std::mem::replace(&mut g_global[0], Array2::zeros((0, 0)));
                relu_backward(&hc.global_act[0], &mut g0);
                g_h += &heads.global[0].backward(h_in.view(), g0.view(), &mut acc.global[0]);
                g_h
            }
            _ => d_logits.view().insert_axis(Axis(1)).to_owned(),
        };

        for l in (0..self.gcn.len()).rev() {
            let layer = &self.gcn[l];
            let c = &cache.gcn[l];
            let acc = &mut grads.gcn[l];
            if let Some(mask) = &c.dropout_mask {
                g_h *= mask;
            }
            if let Some(act) = &c.activated {
                relu_backward(act, &mut g_h);
            }
            if let (Some(bn), Some(bc)) = (&layer.norm, &c.bn) {
                g_h = bn.backward(bc, &g_h, acc.norm.as_mut().expect("norm"));
            }
            acc.linear.bias += &g_h.sum_axis(Axis(0));
            // Â is symmetric, so Âᵀ g = Â g.
            let g_proj = adj.matmul(g_h.view());
            acc.linear.weight += &g_proj.t().dot(&c.input);
            g_h = g_proj.dot(&layer.linear.weight);
        }
        grads
    }

    /// Updates batch-norm running statistics from a training forward pass.
    pub fn update_running_stats(&mut self, cache: &ForwardCache) {
        for (layer, c) in self.gcn.iter_mut().zip(&cache.gcn) {
            if let (Some(bn), Some(bc)) = (&mut layer.norm, &c.bn) {
                bn.update_running(bc);
            }
        }
    }
}

/// `s = α z_p + (1 - α) Π_l z_q(l)`
pub fn blend_scores(z_global: &Array1<f64>, z_local: &[Array1<f64>], alpha: f64) -> Array1<f64> {
    let mut product = Array1::ones(z_global.len());
    for z in z_local {
        product *= z;
    }
    z_global * alpha + &(product * (1.0 - alpha))
}

fn gcn_layer_forward(
    layer: &GcnLayer,
    adj: &CsrMatrix,
    h: &Array2<f64>,
    last: bool,
    mode: &mut ForwardMode<'_>,
) -> (Array2<f64>, GcnCache) {
    let projected = layer.linear.project(h.view());
    let mut pre = adj.matmul(projected.view());
    pre += &layer.linear.bias;
    let mut cache = GcnCache {
        input: h.clone(),
        bn: None,
        activated: None,
        dropout_mask: None,
    };
    if last {
        return (pre, cache);
    }
    let mut out = match (&layer.norm, &*mode) {
        (Some(bn), ForwardMode::Training { .. }) => {
            let (y, bc) = bn.forward_batch(&pre);
            cache.bn = Some(bc);
            y
        }
        (Some(bn), ForwardMode::Inference) => bn.forward_running(&pre),
        (None, _) => pre,
    };
    relu_inplace(&mut out);
    cache.activated = Some(out.clone());
    if let ForwardMode::Training {
        dropout: Some((rate, rng)),
    } = mode
    {
        if *rate > 0.0 {
            let keep = 1.0 - *rate;
            let mask = Array2::from_shape_fn(out.raw_dim(), |_| {
                if rng.random::<f64>() < keep {
                    1.0 / keep
                } else {
                    0.0
                }
            });
            out *= &mask;
            cache.dropout_mask = Some(mask);
        }
    }
    (out, cache)
}

impl ModelParams {
    /// Scores `ids` in inference mode using only their `l_c`-hop neighborhood.
    pub fn score_terms(&self, adj: &CsrMatrix, x: ArrayView2<'_, f64>, ids: &[usize]) -> Result<Vec<f64>> {
        self.check_input(adj, x)?;
        let n = x.nrows();
        if let Some(&bad) = ids.iter().find(|&&i| i >= n) {
            return Err(Error::UnknownNode(bad));
        }
        let layers = self.gcn.len();
        // needed[l] = rows of h(l) required; needed[layers] = the queried ids.
        let mut needed: Vec<Vec<usize>> = vec![Vec::new(); layers + 1];
        let mut top: Vec<usize> = ids.to_vec();
        top.sort_unstable();
        top.dedup();
        needed[layers] = top;
        for l in (0..layers).rev() {
            let mut rows: Vec<usize> = needed[l + 1].clone();
            for &i in &needed[l + 1] {
                rows.extend_from_slice(adj.row(i).0);
            }
            rows.sort_unstable();
            rows.dedup();
            needed[l] = rows;
        }
        let mut position = vec![usize::MAX; n];
        let mut h = x.select(Axis(0), &needed[0]);
        for (l, layer) in self.gcn.iter().enumerate() {
            for (p, &i) in needed[l].iter().enumerate() {
                position[i] = p;
            }
            let projected = layer.linear.project(h.view());
            let width = projected.ncols();
            let mut pre = Array2::zeros((needed[l + 1].len(), width));
            for (r, &i) in needed[l + 1].iter().enumerate() {
                let (idx, vals) = adj.row(i);
                let mut out = pre.row_mut(r);
                for (&j, &v) in idx.iter().zip(vals) {
                    out.scaled_add(v, &projected.row(position[j]));
                }
            }
            pre += &layer.linear.bias;
            h = if l + 1 == layers {
                pre
            } else {
                let mut out = match &layer.norm {
                    Some(bn) => bn.forward_running(&pre),
                    None => pre,
                };
                relu_inplace(&mut out);
                out
            };
        }
        let (outputs, ..) = self.heads_forward(h)?;
        let rows = &needed[layers];
        Ok(ids
            .iter()
            .map(|i| outputs.scores[rows.binary_search(i).expect("queried row computed")])
            .collect())
    }

    /// Inference-mode scores for every node.
    pub fn score_all(&self, adj: &CsrMatrix, x: ArrayView2<'_, f64>) -> Result<Array1<f64>> {
        Ok(self.forward(adj, x, ForwardMode::Inference)?.0.scores)
    }
}
