use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fully-connected ReLU network with a linear output layer.
///
/// Parameters live in one flat buffer, layer by layer, each layer stored as a
/// row-major `out x in` weight matrix followed by its bias. Gradients use the
/// same layout, so optimizers can treat the model as a single slice.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MlpFile", into = "MlpFile")]
pub struct Mlp {
    dims: Vec<usize>,
    offsets: Vec<usize>,
    params: Vec<f64>,
}

/// Activations recorded by [`Mlp::forward_traced`]; `inputs[l]` is what layer
/// `l` consumed, so for `l > 0` it is the ReLU output of layer `l - 1`.
#[derive(Clone, Debug)]
pub struct MlpTrace {
    pub inputs: Vec<Vec<f64>>,
    pub output: Vec<f64>,
}

fn layout(dims: &[usize]) -> Result<(Vec<usize>, usize)> {
    if dims.len() < 2 || dims.contains(&0) {
        return Err(Error::InvalidInput(format!("invalid layer dims {dims:?}")));
    }
    let mut offsets = Vec::with_capacity(dims.len() - 1);
    let mut total = 0;
    for w in dims.windows(2) {
        offsets.push(total);
        total += w[1] * w[0] + w[1];
    }
    Ok((offsets, total))
}

impl Mlp {
    pub fn zeros(dims: &[usize]) -> Result<Self> {
        let (offsets, total) = layout(dims)?;
        Ok(Self { dims: dims.to_vec(), offsets, params: vec![0.0; total] })
    }

    /// Uniform He initialization, `U(-sqrt(6 / fan_in), sqrt(6 / fan_in))`, zero biases.
    pub fn he_uniform<R: Rng + ?Sized>(dims: &[usize], rng: &mut R) -> Result<Self> {
        let mut mlp = Self::zeros(dims)?;
        for l in 0..mlp.num_layers() {
            let (fan_in, fan_out) = (mlp.dims[l], mlp.dims[l + 1]);
            let bound = (6.0 / fan_in as f64).sqrt();
            let off = mlp.offsets[l];
            for w in &mut mlp.params[off..off + fan_in * fan_out] {
                *w = rng.random_range(-bound..bound);
            }
        }
        Ok(mlp)
    }

    pub fn from_params(dims: &[usize], params: Vec<f64>) -> Result<Self> {
        let (offsets, total) = layout(dims)?;
        if params.len() != total {
            return Err(Error::LengthMismatch { expected: total, found: params.len() });
        }
        if !params.iter().all(|p| p.is_finite()) {
            return Err(Error::Numerical("non-finite model parameter".into()));
        }
        Ok(Self { dims: dims.to_vec(), offsets, params })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn num_layers(&self) -> usize {
        self.dims.len() - 1
    }

    pub fn input_dim(&self) -> usize {
        self.dims[0]
    }

    pub fn output_dim(&self) -> usize {
        self.dims[self.dims.len() - 1]
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    /// `(weights, bias)` of layer `l`.
    pub fn layer(&self, l: usize) -> (&[f64], &[f64]) {
        let (n_in, n_out) = (self.dims[l], self.dims[l + 1]);
        let off = self.offsets[l];
        let (w, rest) = self.params[off..].split_at(n_in * n_out);
        (w, &rest[..n_out])
    }

    pub fn layer_mut(&mut self, l: usize) -> (&mut [f64], &mut [f64]) {
        let (n_in, n_out) = (self.dims[l], self.dims[l + 1]);
        let off = self.offsets[l];
        let (w, rest) = self.params[off..].split_at_mut(n_in * n_out);
        (w, &mut rest[..n_out])
    }

    /// Offset of layer `l` in the flat parameter buffer.
    pub fn layer_offset(&self, l: usize) -> usize {
        self.offsets[l]
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim() {
            return Err(Error::LengthMismatch { expected: self.input_dim(), found: x.len() });
        }
        Ok(())
    }

    /// Pre-activation values of every layer.
    pub fn preactivations(&self, x: &[f64]) -> Result<Vec<Vec<f64>>> {
        self.check_input(x)?;
        let mut out = Vec::with_capacity(self.num_layers());
        let mut a = x.to_vec();
        for l in 0..self.num_layers() {
            let z = self.affine(l, &a);
            a = z.iter().map(|v| v.max(0.0)).collect();
            out.push(z);
        }
        Ok(out)
    }

    pub(crate) fn affine(&self, l: usize, x: &[f64]) -> Vec<f64> {
        let (w, b) = self.layer(l);
        let n_in = self.dims[l];
        w.chunks_exact(n_in).zip(b).map(|(row, bias)| bias + dot(row, x)).collect()
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let last = self.num_layers() - 1;
        let mut a = x.to_vec();
        for l in 0..=last {
            a = self.affine(l, &a);
            if l < last {
                relu_in_place(&mut a);
            }
        }
        check_finite(&a)?;
        Ok(a)
    }

    pub fn forward_traced(&self, x: &[f64]) -> Result<MlpTrace> {
        self.check_input(x)?;
        let last = self.num_layers() - 1;
        let mut inputs = Vec::with_capacity(self.num_layers());
        let mut a = x.to_vec();
        for l in 0..=last {
            let mut z = self.affine(l, &a);
            if l < last {
                relu_in_place(&mut z);
            }
            inputs.push(a);
            a = z;
        }
        check_finite(&a)?;
        Ok(MlpTrace { inputs, output: a })
    }

    /// Accumulates `dL/dparams` into `grad` given `dL/doutput`, returning `dL/dinput`.
    pub fn backward(&self, trace: &MlpTrace, d_out: &[f64], grad: &mut [f64]) -> Vec<f64> {
        debug_assert_eq!(grad.len(), self.params.len());
        debug_assert_eq!(d_out.len(), self.output_dim());
        let mut delta = d_out.to_vec();
        for l in (0..self.num_layers()).rev() {
            let (n_in, n_out) = (self.dims[l], self.dims[l + 1]);
            let input = &trace.inputs[l];
            let off = self.offsets[l];
            let (w, _) = self.layer(l);
            let (gw, gb) = grad[off..off + n_in * n_out + n_out].split_at_mut(n_in * n_out);
            let mut d_in = vec![0.0; n_in];
            for (o, &d) in delta.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                gb[o] += d;
                let row = &w[o * n_in..(o + 1) * n_in];
                let grow = &mut gw[o * n_in..(o + 1) * n_in];
                for ((g, x), (di, wi)) in grow.iter_mut().zip(input).zip(d_in.iter_mut().zip(row)) {
                    *g += d * x;
                    *di += d * wi;
                }
            }
            if l > 0 {
                for (di, a) in d_in.iter_mut().zip(input) {
                    if *a <= 0.0 {
                        *di = 0.0;
                    }
                }
            }
            delta = d_in;
        }
        delta
    }
}

/// Four independent accumulators so the compiler can vectorize; the summation
/// order is fixed, so results are reproducible.
#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let tail: f64 = ra.iter().zip(rb).map(|(x, y)| x * y).sum();
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

fn relu_in_place(v: &mut [f64]) {
    for x in v {
        if *x < 0.0 {
            *x = 0.0;
        }
    }
}

fn check_finite(v: &[f64]) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::Numerical("non-finite network activation".into()))
    }
}

/// `sign(r)` with the zero-residual subgradient fixed at 0.
pub(crate) fn l1_subgradient(r: f64) -> f64 {
    if r > 0.0 {
        1.0
    } else if r < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Loss and parameter gradient of `weight * mean_b sum_k |f(x_b)_k - y_bk|`.
pub fn mlp_grad(model: &Mlp, batch: &[(Vec<f64>, Vec<f64>)], weight: f64) -> Result<(f64, Vec<f64>)> {
    if batch.is_empty() {
        return Err(Error::InvalidInput("empty batch".into()));
    }
    let scale = weight / batch.len() as f64;
    let mut grad = vec![0.0; model.num_params()];
    let mut loss = 0.0;
    for (x, y) in batch {
        if y.len() != model.output_dim() {
            return Err(Error::LengthMismatch { expected: model.output_dim(), found: y.len() });
        }
        let trace = model.forward_traced(x)?;
        let d_out: Vec<f64> = trace
            .output
            .iter()
            .zip(y)
            .map(|(o, t)| {
                loss += (o - t).abs();
                scale * l1_subgradient(o - t)
            })
            .collect();
        model.backward(&trace, &d_out, &mut grad);
    }
    Ok((loss * scale, grad))
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MlpFile {
    layer_dims: Vec<usize>,
    /// Row-major `out x in` per layer.
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
}

impl From<Mlp> for MlpFile {
    fn from(m: Mlp) -> Self {
        let (weights, biases) = (0..m.num_layers())
            .map(|l| {
                let (w, b) = m.layer(l);
                (w.to_vec(), b.to_vec())
            })
            .unzip();
        Self { layer_dims: m.dims, weights, biases }
    }
}

impl TryFrom<MlpFile> for Mlp {
    type Error = Error;

    fn try_from(f: MlpFile) -> Result<Self> {
        let layers = f.layer_dims.len().saturating_sub(1);
        if f.weights.len() != layers || f.biases.len() != layers {
            return Err(Error::LengthMismatch { expected: layers, found: f.weights.len().min(f.biases.len()) });
        }
        let mut params = Vec::new();
        for (l, (w, b)) in f.weights.into_iter().zip(f.biases).enumerate() {
            let (n_in, n_out) = (f.layer_dims[l], f.layer_dims[l + 1]);
            if w.len() != n_in * n_out || b.len() != n_out {
                return Err(Error::Contract(format!("layer {l} has wrong parameter counts")));
            }
            params.extend(w);
            params.extend(b);
        }
        Mlp::from_params(&f.layer_dims, params)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_model_outputs_zero() {
        let m = Mlp::zeros(&[4, 8, 8, 3]).unwrap();
        assert_eq!(m.forward(&[1.0, -2.0, 3.0, 0.5]).unwrap(), vec![0.0; 3]);
    }

    #[test]
    fn identity_fixture_copies_inputs() {
        // one linear layer from (f_i || f_j) with d_f = 1 to two outputs
        let m = Mlp::from_params(&[2, 2], vec![1.0, 0.0, 0.0, 1.0, 0.0, 0.0]).unwrap();
        assert_eq!(m.forward(&[0.25, -3.0]).unwrap(), vec![0.25, -3.0]);
    }

    #[test]
    fn width_mismatch_is_rejected() {
        let m = Mlp::zeros(&[3, 2]).unwrap();
        assert!(matches!(m.forward(&[1.0]), Err(Error::LengthMismatch { .. })));
        assert!(Mlp::zeros(&[3]).is_err());
        assert!(Mlp::from_params(&[2, 1], vec![0.0; 2]).is_err());
    }

    #[test]
    fn zero_residual_gives_zero_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = Mlp::he_uniform(&[3, 5, 2], &mut rng).unwrap();
        let x = vec![0.3, -0.1, 0.8];
        let y = m.forward(&x).unwrap();
        let (loss, grad) = mlp_grad(&m, &[(x, y)], 1.0).unwrap();
        assert_eq!(loss, 0.0);
        assert!(grad.iter().all(|g| *g == 0.0));
    }

    #[test]
    fn gradient_scales_linearly_with_loss_weight() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let m = Mlp::he_uniform(&[3, 6, 6, 2], &mut rng).unwrap();
        let batch = vec![(vec![0.3, -0.1, 0.8], vec![1.0, -1.0]), (vec![-0.5, 0.2, 0.1], vec![0.0, 2.0])];
        let (l1, g1) = mlp_grad(&m, &batch, 1.0).unwrap();
        // power-of-two weights keep the comparison exact
        let (l4, g4) = mlp_grad(&m, &batch, 4.0).unwrap();
        assert_eq!(l4, 4.0 * l1);
        for (a, b) in g1.iter().zip(&g4) {
            assert_eq!(4.0 * a, *b);
        }
        let (_, g3) = mlp_grad(&m, &batch, 0.3).unwrap();
        for (a, b) in g1.iter().zip(&g3) {
            assert!((0.3 * a - b).abs() <= 1e-15 * b.abs().max(1.0));
        }
    }

    #[test]
    fn json_round_trip_is_row_major() {
        let m = Mlp::from_params(&[2, 1], vec![1.0, 2.0, 3.0]).unwrap();
        let json = serde_json::to_value(&m).unwrap();
        assert_eq!(json, serde_json::json!({"layer_dims": [2, 1], "weights": [[1.0, 2.0]], "biases": [[3.0]]}));
        let back: Mlp = serde_json::from_value(json).unwrap();
        assert_eq!(back, m);
    }
}
