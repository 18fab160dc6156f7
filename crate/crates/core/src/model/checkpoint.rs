//! Versioned binary checkpoints (`TRCK1`).

use std::path::Path;

use ndarray::{Array1, Array2};

use super::layers::{BatchNorm, Linear};
use super::network::{GcnLayer, HierarchyHeads, ModelKind, ModelParams};
use crate::codec::{Reader, Writer};
use crate::error::{Error, Result};

pub const CHECKPOINT_MAGIC: &[u8] = b"TRCK1";
const VERSION: u64 = 1;

/// Trained parameters plus free-form run metadata and a digest of the graph
/// and features they were trained on.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub params: ModelParams,
    /// JSON describing how to rebuild the inputs.
    pub meta: String,
    /// Hex SHA-256 of the training graph and feature matrix.
    pub input_hash: String,
}

fn corrupt(m: String) -> Error {
    Error::CorruptCheckpoint(m)
}

fn put_linear(w: &mut Writer, l: &Linear) {
    w.usize(l.inputs());
    w.usize(l.outputs());
    w.f64s(l.weight.as_slice().expect("standard layout"));
    w.f64s(l.bias.as_slice().expect("standard layout"));
}

fn get_linear(r: &mut Reader<'_>) -> Result<Linear> {
    let inputs = r.usize()?;
    let outputs = r.usize()?;
    let weight = r.f64s()?;
    let bias = r.f64s()?;
    if weight.len() != inputs.saturating_mul(outputs) || bias.len() != outputs {
        return Err(corrupt("layer shape does not match its data".into()));
    }
    Ok(Linear {
        weight: Array2::from_shape_vec((outputs, inputs), weight).map_err(|e| corrupt(e.to_string()))?,
        bias: Array1::from(bias),
    })
}

fn put_linears(w: &mut Writer, ls: &[Linear]) {
    w.usize(ls.len());
    ls.iter().for_each(|l| put_linear(w, l));
}

fn get_linears(r: &mut Reader<'_>) -> Result<Vec<Linear>> {
    let n = r.len(16)?;
    (0..n).map(|_| get_linear(r)).collect()
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new(CHECKPOINT_MAGIC);
        w.u64(VERSION);
        w.str(&self.meta);
        w.str(&self.input_hash);
        let p = &self.params;
        match p.kind {
            ModelKind::Cfl => w.u8(0),
            ModelKind::HiCfl { levels } => {
                w.u8(1);
                w.usize(levels);
            }
        }
        w.f64(p.alpha);
        w.usize(p.gcn.len());
        for g in &p.gcn {
            put_linear(&mut w, &g.linear);
            match &g.norm {
                None => w.u8(0),
                Some(bn) => {
                    w.u8(1);
                    for t in [&bn.gamma, &bn.beta, &bn.running_mean, &bn.running_var] {
                        w.f64s(t.as_slice().expect("standard layout"));
                    }
                    w.f64(bn.momentum);
                    w.f64(bn.eps);
                }
            }
        }
        match &p.heads {
            None => w.u8(0),
            Some(h) => {
                w.u8(1);
                put_linears(&mut w, &h.global);
                put_linears(&mut w, &h.local_hidden);
                put_linears(&mut w, &h.local_out);
            }
        }
        w.buf
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes, CHECKPOINT_MAGIC, corrupt)?;
        let version = r.u64()?;
        if version != VERSION {
            return Err(corrupt(format!("unsupported version {version}")));
        }
        let meta = r.str()?;
        let input_hash = r.str()?;
        let kind = match r.u8()? {
            0 => ModelKind::Cfl,
            1 => ModelKind::HiCfl { levels: r.usize()? },
            t => return Err(corrupt(format!("unknown model kind {t}"))),
        };
        let alpha = r.f64()?;
        let layers = r.len(17)?;
        let mut gcn = Vec::with_capacity(layers);
        for _ in 0..layers {
            let linear = get_linear(&mut r)?;
            let norm = match r.u8()? {
                0 => None,
                1 => {
                    let mut t = Vec::with_capacity(4);
                    for _ in 0..4 {
                        let v = r.f64s()?;
                        if v.len() != linear.outputs() {
                            return Err(corrupt("batch norm width does not match its layer".into()));
                        }
                        t.push(Array1::from(v));
                    }
                    let momentum = r.f64()?;
                    let eps = r.f64()?;
                    let mut t = t.into_iter();
                    let mut next = || t.next().expect("four tensors");
                    Some(BatchNorm {
                        gamma: next(),
                        beta: next(),
                        running_mean: next(),
                        running_var: next(),
                        momentum,
                        eps,
                    })
                }
                f => return Err(corrupt(format!("bad batch norm flag {f}"))),
            };
            gcn.push(GcnLayer { linear, norm });
        }
        let heads = match r.u8()? {
            0 => None,
            1 => Some(HierarchyHeads {
                global: get_linears(&mut r)?,
                local_hidden: get_linears(&mut r)?,
                local_out: get_linears(&mut r)?,
            }),
            f => return Err(corrupt(format!("bad heads flag {f}"))),
        };
        r.finish()?;
        let params = ModelParams {
            kind,
            gcn,
            heads,
            alpha,
        };
        validate_shapes(&params)?;
        Ok(Checkpoint {
            params,
            meta,
            input_hash,
        })
    }
}

fn validate_shapes(p: &ModelParams) -> Result<()> {
    let bad = |m: &str| Err(corrupt(format!("inconsistent shapes: {m}")));
    if p.gcn.is_empty() {
        return bad("no graph convolutions");
    }
    for w in p.gcn.windows(2) {
        if w[0].linear.outputs() != w[1].linear.inputs() {
            return bad("graph convolution widths");
        }
    }
    let h = p.gcn.last().expect("non-empty").linear.outputs();
    match (p.kind, &p.heads) {
        (ModelKind::Cfl, None) if h == 1 => Ok(()),
        (ModelKind::HiCfl { levels }, Some(heads)) => {
            let ok = levels >= 1
                && heads.global.len() == levels + 1
                && heads.local_hidden.len() == levels
                && heads.local_out.len() == levels
                && heads.global[0].inputs() == h
                && heads.global[1..levels].iter().all(|l| l.inputs() == 2 * h && l.outputs() == h)
                && heads.global[0].outputs() == h
                && heads.global[levels].inputs() == h
                && heads.global[levels].outputs() == 1
                && heads.local_hidden.iter().all(|l| l.inputs() == h && l.outputs() == h)
                && heads.local_out.iter().all(|l| l.inputs() == h && l.outputs() == 1);
            if ok {
                Ok(())
            } else {
                bad("hierarchy heads")
            }
        }
        _ => bad("output layer"),
    }
}

pub fn save_checkpoint(path: impl AsRef<Path>, checkpoint: &Checkpoint) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, checkpoint.to_bytes()).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Checkpoint::from_bytes(&bytes)
}
