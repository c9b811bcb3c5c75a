//! Model parameters: message-passing weights, MLP heads, the optional
//! trainable embedding table, initialization, flattening helpers and the
//! binary checkpoint format.

use std::path::Path;

use rand::Rng;

use crate::binio::{Reader, Writer};
use crate::dense::Mat;
use crate::error::{Error, Result};

const MAGIC: [u8; 4] = *b"TORM";
const VERSION: u32 = 1;

/// A two-layer perceptron head: `out = W2ᵀ·relu(W1ᵀ·u + b1) + b2`, with
/// biases stored as `1 × k` row vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct Mlp {
    pub w1: Mat,
    pub b1: Mat,
    pub w2: Mat,
    pub b2: Mat,
}

impl Mlp {
    fn glorot(input: usize, hidden: usize, output: usize, rng: &mut impl Rng) -> Mlp {
        Mlp {
            w1: glorot_uniform(input, hidden, rng),
            b1: Mat::zeros(1, hidden),
            w2: glorot_uniform(hidden, output, rng),
            b2: Mat::zeros(1, output),
        }
    }
}

/// All trainable state of a TorGNN model. The same shape doubles as the
/// gradient container and as the Adam moment accumulators.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    /// Trainable per-vertex embedding, used when the dataset has no
    /// features (`N × width`).
    pub embed: Option<Mat>,
    /// Message-passing weight matrices `W^(l)`.
    pub layers: Vec<Mat>,
    /// Link head over the `4h` pair features.
    pub mlp_link: Option<Mlp>,
    /// Node head over single-vertex representations.
    pub mlp_node: Option<Mlp>,
}

impl ModelParams {
    /// All tensors in a fixed order (used by Adam, flattening, checkpoints).
    #[must_use]
    pub fn tensors(&self) -> Vec<&Mat> {
        let mut out = Vec::new();
        if let Some(e) = &self.embed {
            out.push(e);
        }
        out.extend(self.layers.iter());
        for mlp in [&self.mlp_link, &self.mlp_node].into_iter().flatten() {
            out.extend([&mlp.w1, &mlp.b1, &mlp.w2, &mlp.b2]);
        }
        out
    }

    /// Mutable variant of [`ModelParams::tensors`], same order.
    pub fn tensors_mut(&mut self) -> Vec<&mut Mat> {
        let mut out: Vec<&mut Mat> = Vec::new();
        if let Some(e) = &mut self.embed {
            out.push(e);
        }
        out.extend(self.layers.iter_mut());
        for mlp in [&mut self.mlp_link, &mut self.mlp_node]
            .into_iter()
            .flatten()
        {
            out.extend([&mut mlp.w1, &mut mlp.b1, &mut mlp.w2, &mut mlp.b2]);
        }
        out
    }

    /// Names parallel to [`ModelParams::tensors`], for diagnostics.
    #[must_use]
    pub fn tensor_names(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.embed.is_some() {
            out.push("embed".to_string());
        }
        for i in 0..self.layers.len() {
            out.push(format!("layer{i}"));
        }
        for (mlp, name) in [(&self.mlp_link, "mlp_link"), (&self.mlp_node, "mlp_node")] {
            if mlp.is_some() {
                for part in ["w1", "b1", "w2", "b2"] {
                    out.push(format!("{name}.{part}"));
                }
            }
        }
        out
    }

    /// A same-shaped parameter set with every entry zero.
    #[must_use]
    pub fn zeros_like(&self) -> ModelParams {
        let zero = |m: &Mat| Mat::zeros(m.rows(), m.cols());
        let zero_mlp = |m: &Mlp| Mlp {
            w1: zero(&m.w1),
            b1: zero(&m.b1),
            w2: zero(&m.w2),
            b2: zero(&m.b2),
        };
        ModelParams {
            embed: self.embed.as_ref().map(zero),
            layers: self.layers.iter().map(zero).collect(),
            mlp_link: self.mlp_link.as_ref().map(zero_mlp),
            mlp_node: self.mlp_node.as_ref().map(zero_mlp),
        }
    }

    /// True when every parameter is finite.
    #[must_use]
    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.is_finite())
    }

    /// Total number of scalar parameters.
    #[must_use]
    pub fn num_parameters(&self) -> usize {
        self.tensors().iter().map(|t| t.data().len()).sum()
    }
}

/// Glorot (Xavier) uniform initialization: `±√(6 / (fan_in + fan_out))`.
fn glorot_uniform(rows: usize, cols: usize, rng: &mut impl Rng) -> Mat {
    let limit = (6.0 / (rows + cols) as f64).sqrt();
    let mut m = Mat::zeros(rows, cols);
    for v in m.data_mut() {
        *v = rng.random::<f64>() * 2.0 * limit - limit;
    }
    m
}

/// Embedding initialization: symmetric uniform scaled by `1/√width`.
fn embed_init(n: usize, width: usize, rng: &mut impl Rng) -> Mat {
    let limit = 1.0 / (width as f64).sqrt();
    let mut m = Mat::zeros(n, width);
    for v in m.data_mut() {
        *v = rng.random::<f64>() * 2.0 * limit - limit;
    }
    m
}

/// Builds a link-prediction model: two message-passing layers
/// (`m → hidden → hidden`), a link MLP over `4·hidden` pair features, and —
/// when `feature_dim` is `None` — a trainable embedding of width `hidden`.
pub fn init_link_model(
    feature_dim: Option<usize>,
    num_vertices: usize,
    hidden: usize,
    rng: &mut impl Rng,
) -> ModelParams {
    let (embed, input_dim) = match feature_dim {
        Some(m) => (None, m),
        None => (Some(embed_init(num_vertices, hidden, rng)), hidden),
    };
    ModelParams {
        embed,
        layers: vec![
            glorot_uniform(input_dim, hidden, rng),
            glorot_uniform(hidden, hidden, rng),
        ],
        mlp_link: Some(Mlp::glorot(4 * hidden, hidden, 1, rng)),
        mlp_node: None,
    }
}

/// Builds a node-classification model: the same trunk with a class head.
pub fn init_node_model(
    feature_dim: Option<usize>,
    num_vertices: usize,
    hidden: usize,
    num_classes: usize,
    rng: &mut impl Rng,
) -> ModelParams {
    let (embed, input_dim) = match feature_dim {
        Some(m) => (None, m),
        None => (Some(embed_init(num_vertices, hidden, rng)), hidden),
    };
    ModelParams {
        embed,
        layers: vec![
            glorot_uniform(input_dim, hidden, rng),
            glorot_uniform(hidden, hidden, rng),
        ],
        mlp_link: None,
        mlp_node: Some(Mlp::glorot(hidden, hidden, num_classes, rng)),
    }
}

/// Copies every parameter into one flat vector (tensor order).
#[must_use]
pub fn flatten_params(params: &ModelParams) -> Vec<f64> {
    let mut out = Vec::with_capacity(params.num_parameters());
    for t in params.tensors() {
        out.extend_from_slice(t.data());
    }
    out
}

/// Writes a flat vector back into the parameters (inverse of
/// [`flatten_params`]).
pub fn assign_flat(params: &mut ModelParams, flat: &[f64]) -> Result<()> {
    let expected = params.num_parameters();
    if flat.len() != expected {
        return Err(Error::Shape(format!(
            "flat vector has {} entries, model has {expected}",
            flat.len()
        )));
    }
    let mut offset = 0;
    for t in params.tensors_mut() {
        let len = t.data().len();
        t.data_mut().copy_from_slice(&flat[offset..offset + len]);
        offset += len;
    }
    Ok(())
}

/// Saves a deterministic binary checkpoint of all parameter tensors.
pub fn save_model(params: &ModelParams, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = Writer::new();
    w.bytes(&MAGIC);
    w.u32(VERSION);
    let write_mat = |w: &mut Writer, m: &Mat| {
        w.u64(m.rows() as u64);
        w.u64(m.cols() as u64);
        for &v in m.data() {
            w.f64(v);
        }
    };
    let write_opt_mlp = |w: &mut Writer, mlp: &Option<Mlp>| {
        match mlp {
            None => w.u8(0),
            Some(m) => {
                w.u8(1);
                for t in [&m.w1, &m.b1, &m.w2, &m.b2] {
                    write_mat(w, t);
                }
            }
        };
    };
    match &params.embed {
        None => w.u8(0),
        Some(e) => {
            w.u8(1);
            write_mat(&mut w, e);
        }
    }
    w.u64(params.layers.len() as u64);
    for layer in &params.layers {
        write_mat(&mut w, layer);
    }
    write_opt_mlp(&mut w, &params.mlp_link);
    write_opt_mlp(&mut w, &params.mlp_node);
    w.write_to(path)
}

/// Loads a checkpoint written by [`save_model`].
pub fn load_model(path: impl AsRef<Path>) -> Result<ModelParams> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut r = Reader::new(&bytes, path);
    if r.take(4)? != MAGIC {
        return Err(Error::parse(path, 0, "not a TORM model checkpoint"));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::parse(
            path,
            0,
            format!("unsupported checkpoint version {version}"),
        ));
    }
    fn read_mat(r: &mut Reader) -> Result<Mat> {
        let rows = r.u64()? as usize;
        let cols = r.u64()? as usize;
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..rows * cols {
            data.push(r.f64()?);
        }
        Mat::from_vec(rows, cols, data)
    }
    fn read_opt_mlp(r: &mut Reader) -> Result<Option<Mlp>> {
        Ok(match r.u8()? {
            0 => None,
            _ => Some(Mlp {
                w1: read_mat(r)?,
                b1: read_mat(r)?,
                w2: read_mat(r)?,
                b2: read_mat(r)?,
            }),
        })
    }
    let embed = match r.u8()? {
        0 => None,
        _ => Some(read_mat(&mut r)?),
    };
    let num_layers = r.u64()? as usize;
    let mut layers = Vec::with_capacity(num_layers);
    for _ in 0..num_layers {
        layers.push(read_mat(&mut r)?);
    }
    let mlp_link = read_opt_mlp(&mut r)?;
    let mlp_node = read_opt_mlp(&mut r)?;
    r.finish()?;
    Ok(ModelParams {
        embed,
        layers,
        mlp_link,
        mlp_node,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn init_shapes_compose() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let link = init_link_model(Some(12), 30, 8, &mut rng);
        assert!(link.embed.is_none());
        assert_eq!(link.layers[0].rows(), 12);
        assert_eq!(link.layers[0].cols(), 8);
        assert_eq!(link.layers[1].rows(), 8);
        let mlp = link.mlp_link.as_ref().unwrap();
        assert_eq!(mlp.w1.rows(), 32);
        assert_eq!(mlp.w2.cols(), 1);

        let node = init_node_model(None, 30, 8, 5, &mut rng);
        assert_eq!(node.embed.as_ref().unwrap().rows(), 30);
        assert_eq!(node.mlp_node.as_ref().unwrap().w2.cols(), 5);
    }

    #[test]
    fn glorot_respects_its_limit_and_biases_start_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let m = glorot_uniform(10, 20, &mut rng);
        let limit = (6.0 / 30.0f64).sqrt();
        assert!(m.data().iter().all(|&v| v.abs() <= limit));
        assert!(m.data().iter().any(|&v| v != 0.0));
        let model = init_link_model(None, 5, 4, &mut rng);
        let mlp = model.mlp_link.as_ref().unwrap();
        assert!(mlp.b1.data().iter().all(|&v| v == 0.0));
        assert!(mlp.b2.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn flatten_assign_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let params = init_node_model(None, 7, 4, 3, &mut rng);
        let flat = flatten_params(&params);
        assert_eq!(flat.len(), params.num_parameters());
        let mut other = params.zeros_like();
        assert_ne!(other, params);
        assign_flat(&mut other, &flat).unwrap();
        assert_eq!(other, params);
        assert!(assign_flat(&mut other, &flat[1..]).is_err());
    }

    #[test]
    fn checkpoint_round_trip_is_bit_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let params = init_link_model(None, 9, 6, &mut rng);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.torm");
        save_model(&params, &path).unwrap();
        let loaded = load_model(&path).unwrap();
        assert_eq!(loaded, params);

        // Determinism of the byte layout itself.
        let path2 = dir.path().join("model2.torm");
        save_model(&params, &path2).unwrap();
        assert_eq!(
            std::fs::read(&path).unwrap(),
            std::fs::read(&path2).unwrap()
        );
    }

    #[test]
    fn checkpoint_rejects_corruption() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let params = init_node_model(Some(3), 5, 4, 2, &mut rng);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.torm");
        save_model(&params, &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        let truncated = dir.path().join("bad.torm");
        std::fs::write(&truncated, &bytes[..bytes.len() - 3]).unwrap();
        assert!(load_model(&truncated).is_err());
        std::fs::write(&truncated, b"garbage").unwrap();
        assert!(load_model(&truncated).is_err());
    }

    #[test]
    fn tensor_names_align_with_tensors() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let params = init_link_model(None, 4, 4, &mut rng);
        assert_eq!(params.tensor_names().len(), params.tensors().len());
        assert_eq!(params.tensor_names()[0], "embed");
    }
}
