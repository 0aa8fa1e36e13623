use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{SeededRng, Tensor};

/// How the embedded sequence is turned into the encoder input vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pooling {
    /// Mean over the T embedded rows; order-invariant.
    Mean,
    /// Concatenation of all T rows; order-sensitive.
    #[default]
    Flatten,
}

impl std::str::FromStr for Pooling {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean" => Ok(Pooling::Mean),
            "flatten" => Ok(Pooling::Flatten),
            other => Err(Error::config(format!("unknown pooling `{other}`"))),
        }
    }
}

/// Shape of the shared embedding + encoder trunk.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Architecture {
    pub vocab_size: usize,
    pub seq_len: usize,
    pub embed_dim: usize,
    /// Widths of the affine+tanh encoder layers; empty means identity encoder.
    pub hidden: Vec<usize>,
    pub pooling: Pooling,
}

impl Architecture {
    pub fn encoder_input_dim(&self) -> usize {
        match self.pooling {
            Pooling::Mean => self.embed_dim,
            Pooling::Flatten => self.seq_len * self.embed_dim,
        }
    }

    pub fn encoder_output_dim(&self) -> usize {
        self.hidden.last().copied().unwrap_or_else(|| self.encoder_input_dim())
    }

    pub fn validate(&self) -> Result<()> {
        if self.vocab_size == 0 || self.seq_len == 0 || self.embed_dim == 0 {
            return Err(Error::config("vocab_size, seq_len and embed_dim must be positive"));
        }
        if self.hidden.contains(&0) {
            return Err(Error::config("hidden layer widths must be positive"));
        }
        Ok(())
    }
}

/// Affine map `y = W x + b` with `W` stored `out × in`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub weight: Tensor,
    pub bias: Tensor,
}

impl Dense {
    pub fn zeros(input: usize, output: usize) -> Self {
        Dense {
            weight: Tensor::zeros(&[output, input]),
            bias: Tensor::zeros(&[output]),
        }
    }

    /// Weights drawn from N(0, 1/input); zero bias.
    pub fn random(input: usize, output: usize, rng: &mut SeededRng) -> Self {
        let scale = 1.0 / (input as f64).sqrt();
        Dense {
            weight: Tensor::from_fn(&[output, input], |_| rng.normal() * scale),
            bias: Tensor::zeros(&[output]),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.weight.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.weight.rows()
    }

    fn forward(&self, x: &[f64]) -> Vec<f64> {
        let w = self.weight.values();
        let n_in = x.len();
        self.bias
            .values()
            .iter()
            .enumerate()
            .map(|(o, &b)| {
                let row = &w[o * n_in..(o + 1) * n_in];
                b + row.iter().zip(x).map(|(a, c)| a * c).sum::<f64>()
            })
            .collect()
    }

    /// `W^T dz`.
    fn backward_input(&self, dz: &[f64]) -> Vec<f64> {
        let n_in = self.input_dim();
        let w = self.weight.values();
        let mut dx = vec![0.0; n_in];
        for (o, &g) in dz.iter().enumerate() {
            if g == 0.0 {
                continue;
            }
            let row = &w[o * n_in..(o + 1) * n_in];
            for (d, &a) in dx.iter_mut().zip(row) {
                *d += g * a;
            }
        }
        dx
    }
}

/// Activations recorded by a forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// Encoder input, then the output of every hidden layer.
    activations: Vec<Vec<f64>>,
    pub output: Vec<f64>,
}

/// Parameter gradients, one flat buffer per tensor in [`Network::params`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct Grads(pub Vec<Vec<f64>>);

impl Grads {
    pub fn scale(&mut self, factor: f64) {
        for g in &mut self.0 {
            for v in g.iter_mut() {
                *v *= factor;
            }
        }
    }
}

/// Embedding table, affine+tanh encoder and a linear head.
///
/// Shared by the classifier (head width C) and the student explainer
/// (head width T).
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub arch: Architecture,
    pub embedding: Tensor,
    pub layers: Vec<Dense>,
    pub head: Dense,
}

impl Network {
    pub fn random(arch: Architecture, outputs: usize, rng: &mut SeededRng) -> Result<Self> {
        arch.validate()?;
        let embedding = Tensor::from_fn(&[arch.vocab_size, arch.embed_dim], |_| rng.normal());
        let mut layers = Vec::with_capacity(arch.hidden.len());
        let mut width = arch.encoder_input_dim();
        for &h in &arch.hidden {
            layers.push(Dense::random(width, h, rng));
            width = h;
        }
        let head = Dense::random(width, outputs, rng);
        Ok(Network {
            arch,
            embedding,
            layers,
            head,
        })
    }

    pub fn zeros(arch: Architecture, outputs: usize) -> Result<Self> {
        arch.validate()?;
        let embedding = Tensor::zeros(&[arch.vocab_size, arch.embed_dim]);
        let mut layers = Vec::new();
        let mut width = arch.encoder_input_dim();
        for &h in &arch.hidden {
            layers.push(Dense::zeros(width, h));
            width = h;
        }
        let head = Dense::zeros(width, outputs);
        Ok(Network {
            arch,
            embedding,
            layers,
            head,
        })
    }

    pub fn outputs(&self) -> usize {
        self.head.output_dim()
    }

    pub fn check_tokens(&self, tokens: &[u32]) -> Result<()> {
        if tokens.len() != self.arch.seq_len {
            return Err(Error::SequenceLength {
                expected: self.arch.seq_len,
                actual: tokens.len(),
            });
        }
        if let Some((position, &id)) = tokens
            .iter()
            .enumerate()
            .find(|(_, &t)| t as usize >= self.arch.vocab_size)
        {
            return Err(Error::OutOfVocabulary {
                id,
                position,
                vocab_size: self.arch.vocab_size,
            });
        }
        Ok(())
    }

    /// `T × embed_dim` tensor whose row i is the embedding of token i.
    pub fn embed(&self, tokens: &[u32]) -> Result<Tensor> {
        self.check_tokens(tokens)?;
        let d = self.arch.embed_dim;
        let mut values = Vec::with_capacity(tokens.len() * d);
        for &t in tokens {
            values.extend_from_slice(self.embedding.row(t as usize));
        }
        Tensor::new(vec![tokens.len(), d], values)
    }

    fn check_embedded(&self, embedded: &Tensor) -> Result<()> {
        if embedded.shape() != [self.arch.seq_len, self.arch.embed_dim] {
            return Err(Error::ShapeMismatch {
                op: "forward_embedded",
                detail: format!(
                    "expected [{}, {}], got {:?}",
                    self.arch.seq_len,
                    self.arch.embed_dim,
                    embedded.shape()
                ),
            });
        }
        Ok(())
    }

    fn pool(&self, embedded: &[f64]) -> Vec<f64> {
        match self.arch.pooling {
            Pooling::Flatten => embedded.to_vec(),
            Pooling::Mean => {
                let d = self.arch.embed_dim;
                let t = self.arch.seq_len as f64;
                let mut pooled = vec![0.0; d];
                for row in embedded.chunks_exact(d) {
                    for (p, &v) in pooled.iter_mut().zip(row) {
                        *p += v;
                    }
                }
                pooled.iter_mut().for_each(|p| *p /= t);
                pooled
            }
        }
    }

    pub fn forward_embedded_cached(&self, embedded: &Tensor) -> Result<ForwardCache> {
        self.check_embedded(embedded)?;
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        activations.push(self.pool(embedded.values()));
        for layer in &self.layers {
            let mut h = layer.forward(activations.last().expect("non-empty"));
            h.iter_mut().for_each(|v| *v = v.tanh());
            activations.push(h);
        }
        let output = self.head.forward(activations.last().expect("non-empty"));
        Ok(ForwardCache {
            activations,
            output,
        })
    }

    pub fn forward_embedded(&self, embedded: &Tensor) -> Result<Vec<f64>> {
        Ok(self.forward_embedded_cached(embedded)?.output)
    }

    pub fn forward(&self, tokens: &[u32]) -> Result<Vec<f64>> {
        self.forward_embedded(&self.embed(tokens)?)
    }

    /// Backpropagates `d_out` (gradient w.r.t. the head outputs) to the
    /// embedded input, optionally accumulating parameter gradients.
    fn backprop(
        &self,
        tokens: Option<&[u32]>,
        cache: &ForwardCache,
        d_out: &[f64],
        mut grads: Option<&mut Grads>,
    ) -> Vec<f64> {
        let n_layers = self.layers.len();
        let last = cache.activations.last().expect("non-empty");
        if let Some(g) = grads.as_deref_mut() {
            let (gw, gb) = (1 + 2 * n_layers, 2 + 2 * n_layers);
            outer_acc(&mut g.0[gw], d_out, last);
            add_into(&mut g.0[gb], d_out);
        }
        let mut dh = self.head.backward_input(d_out);
        for (l, layer) in self.layers.iter().enumerate().rev() {
            let out = &cache.activations[l + 1];
            let dz: Vec<f64> = dh.iter().zip(out).map(|(g, h)| g * (1.0 - h * h)).collect();
            if let Some(g) = grads.as_deref_mut() {
                outer_acc(&mut g.0[1 + 2 * l], &dz, &cache.activations[l]);
                add_into(&mut g.0[2 + 2 * l], &dz);
            }
            dh = layer.backward_input(&dz);
        }
        let d = self.arch.embed_dim;
        let t = self.arch.seq_len;
        let d_embedded = match self.arch.pooling {
            Pooling::Flatten => dh,
            Pooling::Mean => {
                let mut out = Vec::with_capacity(t * d);
                for _ in 0..t {
                    out.extend(dh.iter().map(|v| v / t as f64));
                }
                out
            }
        };
        if let (Some(g), Some(tokens)) = (grads, tokens) {
            let table = &mut g.0[0];
            for (i, &tok) in tokens.iter().enumerate() {
                let row = &mut table[tok as usize * d..(tok as usize + 1) * d];
                add_into(row, &d_embedded[i * d..(i + 1) * d]);
            }
        }
        d_embedded
    }

    /// Gradient of `d_out · output` with respect to the embedded input.
    pub fn input_gradient(&self, cache: &ForwardCache, d_out: &[f64]) -> Vec<f64> {
        self.backprop(None, cache, d_out, None)
    }

    /// Accumulates parameter gradients of `d_out · output` for `tokens`.
    pub fn accumulate_grads(&self, tokens: &[u32], cache: &ForwardCache, d_out: &[f64], grads: &mut Grads) {
        self.backprop(Some(tokens), cache, d_out, Some(grads));
    }

    /// Parameter tensors: embedding, per-layer (weight, bias), head (weight, bias).
    pub fn params(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = vec![self.embedding.values()];
        for layer in &self.layers {
            out.push(layer.weight.values());
            out.push(layer.bias.values());
        }
        out.push(self.head.weight.values());
        out.push(self.head.bias.values());
        out
    }

    pub fn params_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = vec![self.embedding.values_mut()];
        for layer in &mut self.layers {
            out.push(layer.weight.values_mut());
            out.push(layer.bias.values_mut());
        }
        out.push(self.head.weight.values_mut());
        out.push(self.head.bias.values_mut());
        out
    }

    pub fn zero_grads(&self) -> Grads {
        Grads(self.params().iter().map(|p| vec![0.0; p.len()]).collect())
    }

    pub fn is_finite(&self) -> bool {
        self.params().iter().all(|p| p.iter().all(|v| v.is_finite()))
    }
}

fn add_into(dst: &mut [f64], src: &[f64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += s;
    }
}

/// `dst += a ⊗ b` for a row-major `len(a) × len(b)` buffer.
fn outer_acc(dst: &mut [f64], a: &[f64], b: &[f64]) {
    let n = b.len();
    for (i, &ai) in a.iter().enumerate() {
        if ai == 0.0 {
            continue;
        }
        for (d, &bj) in dst[i * n..(i + 1) * n].iter_mut().zip(b) {
            *d += ai * bj;
        }
    }
}

/// Mini-batch gradient descent with classical momentum.
#[derive(Debug, Clone)]
pub struct Sgd {
    pub learning_rate: f64,
    pub momentum: f64,
    velocity: Grads,
}

impl Sgd {
    pub fn new(net: &Network, learning_rate: f64, momentum: f64) -> Self {
        Sgd {
            learning_rate,
            momentum,
            velocity: net.zero_grads(),
        }
    }

    pub fn step(&mut self, net: &mut Network, grads: &Grads) {
        for ((param, grad), vel) in net
            .params_mut()
            .into_iter()
            .zip(&grads.0)
            .zip(&mut self.velocity.0)
        {
            for ((p, g), v) in param.iter_mut().zip(grad).zip(vel.iter_mut()) {
                *v = self.momentum * *v - self.learning_rate * g;
                *p += *v;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{finite_diff_gradient, max_relative_error};

    fn arch(pooling: Pooling, hidden: Vec<usize>) -> Architecture {
        Architecture {
            vocab_size: 12,
            seq_len: 5,
            embed_dim: 3,
            hidden,
            pooling,
        }
    }

    #[test]
    fn parameter_gradients_match_finite_differences() {
        for pooling in [Pooling::Mean, Pooling::Flatten] {
            let mut rng = SeededRng::new(8);
            let net = Network::random(arch(pooling, vec![4, 3]), 2, &mut rng).unwrap();
            let tokens = [1u32, 5, 7, 5, 0];
            let d_out = [0.3, -1.2];
            let cache = net.forward_embedded_cached(&net.embed(&tokens).unwrap()).unwrap();
            let mut grads = net.zero_grads();
            net.accumulate_grads(&tokens, &cache, &d_out, &mut grads);

            let n_params = net.params().len();
            for slot in 0..n_params {
                let len = net.params()[slot].len();
                let x = Tensor::new(vec![len], net.params()[slot].to_vec()).unwrap();
                let objective = |t: &Tensor| {
                    let mut probe = net.clone();
                    probe.params_mut()[slot].copy_from_slice(t.values());
                    let out = probe.forward(&tokens).unwrap();
                    out.iter().zip(&d_out).map(|(o, g)| o * g).sum()
                };
                let fd = finite_diff_gradient(objective, &x, 1e-5).unwrap();
                let err = max_relative_error(fd.values(), &grads.0[slot], 1e-6);
                assert!(err < 1e-5, "{pooling:?} slot {slot}: {err}");
            }
        }
    }

    #[test]
    fn sgd_moves_against_gradient() {
        let mut rng = SeededRng::new(1);
        let mut net = Network::random(arch(Pooling::Mean, vec![2]), 1, &mut rng).unwrap();
        let before = net.clone();
        let mut grads = net.zero_grads();
        grads.0[0][0] = 1.0;
        let mut opt = Sgd::new(&net, 0.1, 0.9);
        opt.step(&mut net, &grads);
        assert!((net.embedding.values()[0] - (before.embedding.values()[0] - 0.1)).abs() < 1e-15);
        opt.step(&mut net, &grads);
        // second step carries momentum: -0.1*0.9 - 0.1
        assert!((net.embedding.values()[0] - (before.embedding.values()[0] - 0.29)).abs() < 1e-15);
    }
}
