//! Small differentiable classifiers with exact per-sample gradients of the
//! conditional log-likelihood.
//!
//! Two architectures are supported: multinomial/binary logistic regression
//! and a one-hidden-layer tanh MLP. Parameters live in a single flat
//! [`ParamVector`] with a fixed, documented layout so that Fisher vectors,
//! anchors, and checkpoints all share one indexing scheme.
//!
//! Parameter layout
//! - `logistic`, C = 2 (single-logit head): `[w (d_x), b]`, length `d_x + 1`.
//! - `logistic`, C > 2: `[W row-major (C x d_x), b (C)]`.
//! - `mlp1`: `[W1 (hidden x d_x), b1 (hidden), W2 (k x hidden), b2 (k)]`
//!   where `k = 1` for C = 2 and `k = C` otherwise.

use crate::error::{FadeError, Result};
use crate::seeding::{self, purpose};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};

/// Probabilities are clamped to this floor before taking logs, so saturated
/// predictions yield a large but finite loss.
pub const LOG_CLAMP: f64 = 1e-12;

/// Flat model parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector {
    pub values: Vec<f64>,
}

impl ParamVector {
    pub fn zeros(len: usize) -> Self {
        ParamVector { values: vec![0.0; len] }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn l2_distance(&self, other: &ParamVector) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    /// FNV-1a over the little-endian parameter bytes; used as the run-log
    /// parameter checksum.
    pub fn checksum(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for v in &self.values {
            for byte in v.to_le_bytes() {
                h ^= byte as u64;
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        }
        h
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Arch {
    Logistic,
    Mlp1,
}

/// Architecture description; fully determines the parameter layout.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub arch: Arch,
    pub d_x: usize,
    pub classes: usize,
    /// Hidden width; only meaningful for `mlp1`.
    #[serde(default = "default_hidden")]
    pub hidden: usize,
    #[serde(default)]
    pub init_seed: u64,
}

fn default_hidden() -> usize {
    16
}

impl ModelSpec {
    pub fn validate(&self) -> Result<()> {
        if self.classes < 2 {
            return Err(FadeError::config("model.classes", "need at least 2 classes"));
        }
        if self.d_x == 0 {
            return Err(FadeError::config("model.d_x", "feature dimension must be >= 1"));
        }
        if self.arch == Arch::Mlp1 && self.hidden == 0 {
            return Err(FadeError::config("model.hidden", "mlp1 needs hidden >= 1"));
        }
        Ok(())
    }

    /// Number of output logits (binary problems use a single logit).
    pub fn logits_dim(&self) -> usize {
        if self.classes == 2 {
            1
        } else {
            self.classes
        }
    }

    pub fn param_count(&self) -> usize {
        let k = self.logits_dim();
        match self.arch {
            Arch::Logistic => k * self.d_x + k,
            Arch::Mlp1 => self.hidden * self.d_x + self.hidden + k * self.hidden + k,
        }
    }
}

/// A model is a spec plus the operations over flat parameter vectors.
#[derive(Debug, Clone)]
pub struct Model {
    spec: ModelSpec,
}

impl Model {
    pub fn new(spec: ModelSpec) -> Result<Self> {
        spec.validate()?;
        Ok(Model { spec })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn param_count(&self) -> usize {
        self.spec.param_count()
    }

    /// Logistic initializes at zero (uniform predictive); mlp1 uses symmetric
    /// uniform weights scaled by 1/sqrt(fan_in) with zero biases,
    /// deterministic in `init_seed`.
    pub fn init_params(&self) -> ParamVector {
        let d = self.param_count();
        match self.spec.arch {
            Arch::Logistic => ParamVector::zeros(d),
            Arch::Mlp1 => {
                let mut rng = seeding::rng(self.spec.init_seed, purpose::MODEL_INIT, 0);
                let h = self.spec.hidden;
                let dx = self.spec.d_x;
                let k = self.spec.logits_dim();
                let mut values = vec![0.0; d];
                let s1 = 1.0 / (dx as f64).sqrt();
                for v in values.iter_mut().take(h * dx) {
                    *v = rng.random_range(-s1..s1);
                }
                let s2 = 1.0 / (h as f64).sqrt();
                let w2_start = h * dx + h;
                for v in values.iter_mut().skip(w2_start).take(k * h) {
                    *v = rng.random_range(-s2..s2);
                }
                ParamVector { values }
            }
        }
    }

    fn check_theta(&self, theta: &ParamVector) -> Result<()> {
        if theta.len() != self.param_count() {
            return Err(FadeError::Dimension {
                context: "parameter vector",
                expected: self.param_count(),
                got: theta.len(),
            });
        }
        Ok(())
    }

    fn check_x(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.spec.d_x {
            return Err(FadeError::Dimension {
                context: "feature row",
                expected: self.spec.d_x,
                got: x.len(),
            });
        }
        Ok(())
    }

    /// Raw logits (length `logits_dim`) plus, for mlp1, the hidden
    /// activations needed by backprop.
    fn logits(&self, theta: &[f64], x: &[f64]) -> (Vec<f64>, Option<Vec<f64>>) {
        let dx = self.spec.d_x;
        let k = self.spec.logits_dim();
        match self.spec.arch {
            Arch::Logistic => {
                let mut z = vec![0.0; k];
                for (c, zc) in z.iter_mut().enumerate() {
                    let row = &theta[c * dx..(c + 1) * dx];
                    let mut acc = 0.0;
                    for (w, xi) in row.iter().zip(x) {
                        acc += w * xi;
                    }
                    *zc = acc + theta[k * dx + c];
                }
                (z, None)
            }
            Arch::Mlp1 => {
                let h = self.spec.hidden;
                let b1 = &theta[h * dx..h * dx + h];
                let mut hidden = vec![0.0; h];
                for (j, hj) in hidden.iter_mut().enumerate() {
                    let row = &theta[j * dx..(j + 1) * dx];
                    let mut acc = b1[j];
                    for (w, xi) in row.iter().zip(x) {
                        acc += w * xi;
                    }
                    *hj = acc.tanh();
                }
                let w2_start = h * dx + h;
                let b2 = &theta[w2_start + k * h..w2_start + k * h + k];
                let mut z = vec![0.0; k];
                for (c, zc) in z.iter_mut().enumerate() {
                    let row = &theta[w2_start + c * h..w2_start + (c + 1) * h];
                    let mut acc = b2[c];
                    for (w, hj) in row.iter().zip(&hidden) {
                        acc += w * hj;
                    }
                    *zc = acc;
                }
                (z, Some(hidden))
            }
        }
    }

    fn probs_from_logits(&self, z: &[f64]) -> Vec<f64> {
        if self.spec.classes == 2 {
            let p1 = sigmoid(z[0]);
            vec![1.0 - p1, p1]
        } else {
            softmax(z)
        }
    }

    /// Class-probability vector for one feature row.
    pub fn forward(&self, theta: &ParamVector, x: &[f64]) -> Result<Vec<f64>> {
        self.check_theta(theta)?;
        self.check_x(x)?;
        let (z, _) = self.logits(&theta.values, x);
        Ok(self.probs_from_logits(&z))
    }

    pub fn predict(&self, theta: &ParamVector, x: &[f64]) -> Result<usize> {
        let p = self.forward(theta, x)?;
        Ok(argmax(&p))
    }

    /// dL/dz for one sample under cross-entropy, where z are the raw logits.
    fn logit_grad(&self, probs: &[f64], y: usize) -> Vec<f64> {
        if self.spec.classes == 2 {
            // single-logit head: dL/dz = p1 - y
            vec![probs[1] - y as f64]
        } else {
            let mut g = probs.to_vec();
            g[y] -= 1.0;
            g
        }
    }

    /// Accumulate the gradient of one sample's NLL into `grad`.
    fn accumulate_sample_grad(
        &self,
        theta: &[f64],
        x: &[f64],
        dz: &[f64],
        hidden: Option<&[f64]>,
        grad: &mut [f64],
        scale: f64,
    ) {
        let dx = self.spec.d_x;
        let k = self.spec.logits_dim();
        match self.spec.arch {
            Arch::Logistic => {
                for (c, dzc) in dz.iter().enumerate() {
                    let g = scale * dzc;
                    let row = &mut grad[c * dx..(c + 1) * dx];
                    for (gw, xi) in row.iter_mut().zip(x) {
                        *gw += g * xi;
                    }
                    grad[k * dx + c] += g;
                }
            }
            Arch::Mlp1 => {
                let h = self.spec.hidden;
                let hid = hidden.expect("mlp1 backprop needs hidden activations");
                let w2_start = h * dx + h;
                // output layer
                for (c, dzc) in dz.iter().enumerate() {
                    let g = scale * dzc;
                    let row = &mut grad[w2_start + c * h..w2_start + (c + 1) * h];
                    for (gw, hj) in row.iter_mut().zip(hid) {
                        *gw += g * hj;
                    }
                    grad[w2_start + k * h + c] += g;
                }
                // backprop into hidden: da_j = (1 - h_j^2) * sum_c W2[c][j] dz_c
                for (j, hj) in hid.iter().enumerate() {
                    let mut dh = 0.0;
                    for (c, dzc) in dz.iter().enumerate() {
                        dh += theta[w2_start + c * h + j] * dzc;
                    }
                    let da = scale * dh * (1.0 - hj * hj);
                    let row = &mut grad[j * dx..(j + 1) * dx];
                    for (gw, xi) in row.iter_mut().zip(x) {
                        *gw += da * xi;
                    }
                    grad[h * dx + j] += da;
                }
            }
        }
    }

    /// Mean negative log-likelihood over rows plus its exact gradient.
    ///
    /// `features` is row-major with `labels.len()` rows of `d_x` columns.
    pub fn nll_and_grad(
        &self,
        theta: &ParamVector,
        features: &[f64],
        labels: &[usize],
    ) -> Result<(f64, ParamVector)> {
        self.check_theta(theta)?;
        let n = labels.len();
        if n == 0 {
            return Err(FadeError::data("nll_and_grad needs a nonempty batch"));
        }
        if features.len() != n * self.spec.d_x {
            return Err(FadeError::Dimension {
                context: "feature matrix",
                expected: n * self.spec.d_x,
                got: features.len(),
            });
        }
        let dx = self.spec.d_x;
        let mut grad = vec![0.0; self.param_count()];
        let mut loss = 0.0;
        let scale = 1.0 / n as f64;
        for (i, &y) in labels.iter().enumerate() {
            if y >= self.spec.classes {
                return Err(FadeError::data(format!(
                    "label {y} out of range for {} classes",
                    self.spec.classes
                )));
            }
            let x = &features[i * dx..(i + 1) * dx];
            let (z, hidden) = self.logits(&theta.values, x);
            let probs = self.probs_from_logits(&z);
            loss -= probs[y].max(LOG_CLAMP).ln() * scale;
            let dz = self.logit_grad(&probs, y);
            self.accumulate_sample_grad(&theta.values, x, &dz, hidden.as_deref(), &mut grad, scale);
        }
        Ok((loss, ParamVector { values: grad }))
    }

    /// Mean NLL only (no gradient), for evaluation.
    pub fn nll(&self, theta: &ParamVector, features: &[f64], labels: &[usize]) -> Result<f64> {
        self.check_theta(theta)?;
        let n = labels.len();
        if n == 0 {
            return Err(FadeError::data("nll needs a nonempty batch"));
        }
        let dx = self.spec.d_x;
        let mut loss = 0.0;
        for (i, &y) in labels.iter().enumerate() {
            let x = &features[i * dx..(i + 1) * dx];
            let (z, _) = self.logits(&theta.values, x);
            let probs = self.probs_from_logits(&z);
            loss -= probs[y].max(LOG_CLAMP).ln();
        }
        Ok(loss / n as f64)
    }

    /// Score function: gradient of `log p_theta(y|x)` for one sample.
    /// Equals minus the per-sample NLL gradient.
    pub fn per_sample_score(&self, theta: &ParamVector, x: &[f64], y: usize) -> Result<ParamVector> {
        self.check_theta(theta)?;
        self.check_x(x)?;
        if y >= self.spec.classes {
            return Err(FadeError::data(format!(
                "label {y} out of range for {} classes",
                self.spec.classes
            )));
        }
        let (z, hidden) = self.logits(&theta.values, x);
        let probs = self.probs_from_logits(&z);
        let dz = self.logit_grad(&probs, y);
        let mut grad = vec![0.0; self.param_count()];
        self.accumulate_sample_grad(&theta.values, x, &dz, hidden.as_deref(), &mut grad, -1.0);
        Ok(ParamVector { values: grad })
    }

    /// Fraction of rows whose argmax prediction matches the label.
    pub fn accuracy_on(&self, theta: &ParamVector, features: &[f64], labels: &[usize]) -> Result<f64> {
        if labels.is_empty() {
            return Err(FadeError::data("accuracy needs at least one row"));
        }
        let dx = self.spec.d_x;
        let mut hits = 0usize;
        for (i, &y) in labels.iter().enumerate() {
            let x = &features[i * dx..(i + 1) * dx];
            if self.predict(theta, x)? == y {
                hits += 1;
            }
        }
        Ok(hits as f64 / labels.len() as f64)
    }

    /// Score of class 1 (binary models only), for AUC computation.
    pub fn positive_score(&self, theta: &ParamVector, x: &[f64]) -> Result<f64> {
        let p = self.forward(theta, x)?;
        Ok(p[1.min(p.len() - 1)])
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn softmax(z: &[f64]) -> Vec<f64> {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

// ---------------------------------------------------------------------------
// Checkpoint format: one JSON header line (spec, layout note, lengths),
// then the parameter values and optionally a Fisher diagonal as raw
// little-endian f64 bytes.
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct CheckpointHeader {
    model: ModelSpec,
    layout: String,
    param_len: usize,
    fim_len: usize,
}

fn layout_note(spec: &ModelSpec) -> String {
    match spec.arch {
        Arch::Logistic => format!("[W ({}x{}) row-major, b ({})]", spec.logits_dim(), spec.d_x, spec.logits_dim()),
        Arch::Mlp1 => format!(
            "[W1 ({}x{}) row-major, b1 ({}), W2 ({}x{}) row-major, b2 ({})]",
            spec.hidden,
            spec.d_x,
            spec.hidden,
            spec.logits_dim(),
            spec.hidden,
            spec.logits_dim()
        ),
    }
}

pub fn write_checkpoint<W: Write>(
    mut w: W,
    spec: &ModelSpec,
    theta: &ParamVector,
    fim_diag: Option<&[f64]>,
) -> Result<()> {
    let header = CheckpointHeader {
        model: spec.clone(),
        layout: layout_note(spec),
        param_len: theta.len(),
        fim_len: fim_diag.map_or(0, <[f64]>::len),
    };
    let mut line = serde_json::to_string(&header)?;
    line.push('\n');
    w.write_all(line.as_bytes())?;
    for v in &theta.values {
        w.write_all(&v.to_le_bytes())?;
    }
    if let Some(diag) = fim_diag {
        for v in diag {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_checkpoint<R: Read>(mut r: R) -> Result<(ModelSpec, ParamVector, Option<Vec<f64>>)> {
    let mut buf = Vec::new();
    r.read_to_end(&mut buf)?;
    let nl = buf
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| FadeError::data("checkpoint missing header line"))?;
    let header: CheckpointHeader = serde_json::from_slice(&buf[..nl])?;
    let body = &buf[nl + 1..];
    let want = (header.param_len + header.fim_len) * 8;
    if body.len() != want {
        return Err(FadeError::data(format!(
            "checkpoint body has {} bytes, expected {want}",
            body.len()
        )));
    }
    let mut floats = Vec::with_capacity(header.param_len + header.fim_len);
    for chunk in body.chunks_exact(8) {
        floats.push(f64::from_le_bytes(chunk.try_into().unwrap()));
    }
    let fim = if header.fim_len > 0 {
        Some(floats.split_off(header.param_len))
    } else {
        None
    };
    Ok((header.model, ParamVector { values: floats }, fim))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn logistic_spec(d_x: usize, classes: usize) -> ModelSpec {
        ModelSpec { arch: Arch::Logistic, d_x, classes, hidden: 1, init_seed: 0 }
    }

    fn mlp_spec(d_x: usize, hidden: usize, classes: usize, seed: u64) -> ModelSpec {
        ModelSpec { arch: Arch::Mlp1, d_x, classes, hidden, init_seed: seed }
    }

    #[test]
    fn logistic_init_is_zero_of_documented_length() {
        let m = Model::new(logistic_spec(3, 2)).unwrap();
        let theta = m.init_params();
        assert_eq!(theta.len(), 4); // 3 weights + 1 bias, binary head
        assert!(theta.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn mlp_param_count_matches_layout() {
        let m = Model::new(mlp_spec(2, 3, 2, 0)).unwrap();
        assert_eq!(m.param_count(), 13); // 2*3 + 3 + 3*1 + 1
    }

    #[test]
    fn mlp_init_is_deterministic_in_seed() {
        let a = Model::new(mlp_spec(4, 5, 3, 9)).unwrap().init_params();
        let b = Model::new(mlp_spec(4, 5, 3, 9)).unwrap().init_params();
        let c = Model::new(mlp_spec(4, 5, 3, 10)).unwrap().init_params();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn zero_params_give_uniform_probabilities() {
        let m = Model::new(logistic_spec(3, 2)).unwrap();
        let p = m.forward(&m.init_params(), &[1.0, -2.0, 0.5]).unwrap();
        assert_eq!(p, vec![0.5, 0.5]);
    }

    #[test]
    fn logistic_forward_matches_sigmoid() {
        let m = Model::new(logistic_spec(2, 2)).unwrap();
        // w = (1, 0), b = 0
        let theta = ParamVector { values: vec![1.0, 0.0, 0.0] };
        let p_zero = m.forward(&theta, &[0.0, 0.0]).unwrap();
        assert!((p_zero[1] - 0.5).abs() < 1e-12);
        let p = m.forward(&theta, &[2.0, 5.0]).unwrap();
        assert!((p[1] - 0.880797).abs() < 1e-6);
    }

    #[test]
    fn probabilities_normalize() {
        let m = Model::new(mlp_spec(3, 4, 5, 1)).unwrap();
        let theta = m.init_params();
        for i in 0..20 {
            let x = vec![i as f64 * 0.3 - 2.0, (i as f64).sin(), 1.0];
            let p = m.forward(&theta, &x).unwrap();
            let s: f64 = p.iter().sum();
            assert!((s - 1.0).abs() < 1e-9);
            assert!(p.iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn zero_params_loss_is_log_two() {
        let m = Model::new(logistic_spec(2, 2)).unwrap();
        let feats = [0.3, -1.0, 2.0, 0.7];
        let labels = [0, 1];
        let (loss, _) = m.nll_and_grad(&m.init_params(), &feats, &labels).unwrap();
        assert!((loss - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn hand_gradient_single_sample() {
        // logistic, w = 0, x = (1, 2), y = 1: grad_w = (sigma - y) x = (-0.5, -1.0)
        let m = Model::new(logistic_spec(2, 2)).unwrap();
        let (_, grad) = m.nll_and_grad(&m.init_params(), &[1.0, 2.0], &[1]).unwrap();
        assert!((grad.values[0] + 0.5).abs() < 1e-12);
        assert!((grad.values[1] + 1.0).abs() < 1e-12);
        assert!((grad.values[2] + 0.5).abs() < 1e-12);
    }

    #[test]
    fn score_is_minus_per_sample_gradient_and_hand_value() {
        let m = Model::new(logistic_spec(2, 2)).unwrap();
        let theta = m.init_params();
        let score = m.per_sample_score(&theta, &[1.0, 2.0], 1).unwrap();
        assert!((score.values[0] - 0.5).abs() < 1e-12);
        assert!((score.values[1] - 1.0).abs() < 1e-12);
        assert!((score.values[2] - 0.5).abs() < 1e-12);
        let (_, grad) = m.nll_and_grad(&theta, &[1.0, 2.0], &[1]).unwrap();
        for (s, g) in score.values.iter().zip(&grad.values) {
            assert!((s + g).abs() < 1e-12);
        }
    }

    #[test]
    fn mean_score_equals_minus_batch_gradient() {
        let m = Model::new(mlp_spec(3, 4, 3, 5)).unwrap();
        let theta = m.init_params();
        let mut rng = crate::seeding::rng(11, 0x99, 0);
        let n = 8;
        let feats: Vec<f64> = (0..n * 3).map(|_| rng.random_range(-2.0..2.0)).collect();
        let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..3)).collect();
        let (_, grad) = m.nll_and_grad(&theta, &feats, &labels).unwrap();
        let mut mean_score = vec![0.0; m.param_count()];
        for i in 0..n {
            let s = m
                .per_sample_score(&theta, &feats[i * 3..(i + 1) * 3], labels[i])
                .unwrap();
            for (acc, v) in mean_score.iter_mut().zip(&s.values) {
                *acc += v / n as f64;
            }
        }
        for (s, g) in mean_score.iter().zip(&grad.values) {
            assert!((s + g).abs() < 1e-10);
        }
    }

    #[test]
    fn saturated_fit_has_vanishing_score() {
        let m = Model::new(logistic_spec(2, 2)).unwrap();
        // Huge weights aligned with the sample's class drive p -> 1.
        let theta = ParamVector { values: vec![50.0, 50.0, 0.0] };
        let score = m.per_sample_score(&theta, &[1.0, 1.0], 1).unwrap();
        let norm: f64 = score.values.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(norm < 1e-12);
    }

    /// Central finite differences, the independent gradient oracle.
    pub(crate) fn fd_gradient(
        m: &Model,
        theta: &ParamVector,
        feats: &[f64],
        labels: &[usize],
        h: f64,
    ) -> Vec<f64> {
        let mut g = vec![0.0; theta.len()];
        let mut work = theta.clone();
        for j in 0..theta.len() {
            let orig = work.values[j];
            work.values[j] = orig + h;
            let up = m.nll(&work, feats, labels).unwrap();
            work.values[j] = orig - h;
            let dn = m.nll(&work, feats, labels).unwrap();
            work.values[j] = orig;
            g[j] = (up - dn) / (2.0 * h);
        }
        g
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = crate::seeding::rng(3, 0x77, 0);
        for trial in 0..20 {
            let spec = if trial % 2 == 0 {
                logistic_spec(3, if trial % 4 == 0 { 2 } else { 3 })
            } else {
                mlp_spec(3, 3, if trial % 3 == 0 { 2 } else { 4 }, trial as u64)
            };
            let classes = spec.classes;
            let m = Model::new(spec).unwrap();
            let theta = ParamVector {
                values: (0..m.param_count()).map(|_| rng.random_range(-1.0..1.0)).collect(),
            };
            let n = 6;
            let feats: Vec<f64> = (0..n * 3).map(|_| rng.random_range(-2.0..2.0)).collect();
            let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..classes)).collect();
            let (_, grad) = m.nll_and_grad(&theta, &feats, &labels).unwrap();
            let fd = fd_gradient(&m, &theta, &feats, &labels, 1e-5);
            let max_err = grad
                .values
                .iter()
                .zip(&fd)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            assert!(max_err <= 1e-5, "trial {trial}: max grad error {max_err}");
        }
    }

    #[test]
    fn checkpoint_roundtrip_preserves_forward() {
        let spec = mlp_spec(3, 4, 3, 21);
        let m = Model::new(spec.clone()).unwrap();
        let theta = m.init_params();
        let fim = vec![0.5; m.param_count()];
        let mut buf = Vec::new();
        write_checkpoint(&mut buf, &spec, &theta, Some(&fim)).unwrap();
        let (spec2, theta2, fim2) = read_checkpoint(&buf[..]).unwrap();
        assert_eq!(fim2.unwrap(), fim);
        let m2 = Model::new(spec2).unwrap();
        let x = [0.2, -1.1, 0.7];
        assert_eq!(m.forward(&theta, &x).unwrap(), m2.forward(&theta2, &x).unwrap());
    }
}
