//! Linear probes trained by full-batch gradient descent.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::linalg::{matmul_nt, matmul_tn};
use crate::numerics::{sigmoid, softmax_in_place};
use crate::seed::{derive_rng, tag};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeConfig {
    pub iterations: usize,
    pub lr: f64,
    pub l2: f64,
    /// Fraction of dialogues used for training; the rest are held out.
    pub train_fraction: f64,
    pub seed: u64,
    /// Fit on z-scored features; the returned weights act on raw states.
    pub standardize: bool,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig { iterations: 500, lr: 0.1, l2: 1e-4, train_fraction: 0.7, seed: 0, standardize: true }
    }
}

impl ProbeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 || !(self.lr > 0.0) || !(self.l2 >= 0.0) {
            return Err(Error::Config("probe needs iterations > 0, lr > 0 and l2 >= 0".into()));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::Config(format!("train_fraction {} outside (0, 1)", self.train_fraction)));
        }
        Ok(())
    }
}

/// Dialogues assigned to the training side of a split.
pub fn split_dialogues(dialogues: impl IntoIterator<Item = usize>, cfg: &ProbeConfig) -> BTreeSet<usize> {
    let mut ids: Vec<usize> = dialogues.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
    ids.shuffle(&mut derive_rng(cfg.seed, &[tag("probe-split")]));
    let n = ((ids.len() as f64) * cfg.train_fraction).round() as usize;
    // both sides stay nonempty whenever there are two dialogues or more
    let n = if ids.len() >= 2 { n.clamp(1, ids.len() - 1) } else { ids.len() };
    ids.truncate(n);
    ids.into_iter().collect()
}

/// Indices with the minority class drawn with replacement up to the size
/// of the majority class.
pub fn balanced_indices<R: Rng + ?Sized>(ys: &[bool], rng: &mut R) -> Vec<usize> {
    let (pos, neg): (Vec<usize>, Vec<usize>) = (0..ys.len()).partition(|&i| ys[i]);
    let (small, large) = if pos.len() < neg.len() { (pos, neg) } else { (neg, pos) };
    let mut out = large.clone();
    out.extend(small.iter().copied());
    for _ in small.len()..large.len() {
        out.push(small[rng.gen_range(0..small.len())]);
    }
    out
}

fn pack(xs: &[&[f32]], dim: usize) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(xs.len() * dim);
    for x in xs {
        if x.len() != dim {
            return Err(Error::shape("probe input", dim, x.len()));
        }
        out.extend(x.iter().map(|&v| v as f64));
    }
    Ok(out)
}

/// Binary logistic regression.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinaryClassifier {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl BinaryClassifier {
    pub fn probability(&self, x: &[f32]) -> f64 {
        let z: f64 = self.weights.iter().zip(x).map(|(w, &v)| w * v as f64).sum::<f64>() + self.bias;
        sigmoid(z)
    }

    pub fn predict(&self, x: &[f32]) -> bool {
        self.probability(x) >= 0.5
    }
}

/// Returns the classifier and the regularised loss before each update.
pub fn fit_binary(xs: &[&[f32]], ys: &[bool], cfg: &ProbeConfig) -> Result<(BinaryClassifier, Vec<f64>)> {
    if xs.len() != ys.len() {
        return Err(Error::shape("fit_binary", xs.len(), ys.len()));
    }
    let npos = ys.iter().filter(|&&y| y).count();
    if npos == 0 || npos == ys.len() {
        return Err(Error::SingleClass(if npos == 0 { "no positives" } else { "no negatives" }.into()));
    }
    let ys: Vec<f64> = ys.iter().map(|&y| if y { 1.0 } else { 0.0 }).collect();
    let (c, losses) = fit_softmax_like(xs, &ys, 1, cfg, true)?;
    Ok((BinaryClassifier { weights: c.weights, bias: c.bias[0] }, losses))
}

/// Multinomial logistic regression over `classes` labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MulticlassClassifier {
    pub classes: usize,
    /// `classes × dim`, row-major.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl MulticlassClassifier {
    pub fn scores(&self, x: &[f32]) -> Vec<f64> {
        let dim = x.len();
        (0..self.classes)
            .map(|k| self.weights[k * dim..(k + 1) * dim].iter().zip(x).map(|(w, &v)| w * v as f64).sum::<f64>() + self.bias[k])
            .collect()
    }

    pub fn predict(&self, x: &[f32]) -> usize {
        let s = self.scores(x);
        // first maximum, like argmax elsewhere
        (0..s.len()).fold(0, |best, k| if s[k] > s[best] { k } else { best })
    }
}

pub fn fit_multiclass(xs: &[&[f32]], ys: &[usize], classes: usize, cfg: &ProbeConfig) -> Result<(MulticlassClassifier, Vec<f64>)> {
    if xs.len() != ys.len() {
        return Err(Error::shape("fit_multiclass", xs.len(), ys.len()));
    }
    if let Some(&bad) = ys.iter().find(|&&y| y >= classes) {
        return Err(Error::OutOfRange { what: "classes", index: bad, size: classes });
    }
    let distinct: BTreeSet<usize> = ys.iter().copied().collect();
    if distinct.len() < 2 {
        return Err(Error::SingleClass(format!("{} distinct labels", distinct.len())));
    }
    let mut onehot = vec![0.0; ys.len() * classes];
    for (i, &y) in ys.iter().enumerate() {
        onehot[i * classes + y] = 1.0;
    }
    fit_softmax_like(xs, &onehot, classes, cfg, false)
}

fn fit_softmax_like(
    xs: &[&[f32]],
    targets: &[f64],
    k: usize,
    cfg: &ProbeConfig,
    binary: bool,
) -> Result<(MulticlassClassifier, Vec<f64>)> {
    cfg.validate()?;
    let n = xs.len();
    let dim = xs.first().map(|x| x.len()).ok_or(Error::EmptyInput("probe training"))?;
    let mut x = pack(xs, dim)?;
    let (mean, scale) = if cfg.standardize { moments(&x, dim) } else { (vec![0.0; dim], vec![1.0; dim]) };
    for row in x.chunks_mut(dim) {
        for ((v, m), s) in row.iter_mut().zip(&mean).zip(&scale) {
            *v = (*v - m) / s;
        }
    }
    let mut w = vec![0.0; k * dim];
    let mut b = vec![0.0; k];
    let mut z = vec![0.0; n * k];
    let mut gw = vec![0.0; k * dim];
    let mut losses = Vec::with_capacity(cfg.iterations);
    for _ in 0..cfg.iterations {
        matmul_nt(n, dim, k, &x, &w, 0.0, &mut z);
        let mut loss = 0.0;
        for (i, row) in z.chunks_mut(k).enumerate() {
            for (v, bb) in row.iter_mut().zip(&b) {
                *v += bb;
            }
            let t = &targets[i * k..(i + 1) * k];
            if binary {
                let p = sigmoid(row[0]);
                let y = t[0];
                loss -= y * p.max(1e-300).ln() + (1.0 - y) * (1.0 - p).max(1e-300).ln();
                row[0] = p - y;
            } else {
                softmax_in_place(row)?;
                for (v, &y) in row.iter_mut().zip(t) {
                    if y > 0.0 {
                        loss -= y * v.max(1e-300).ln();
                    }
                    *v -= y;
                }
            }
        }
        let inv = 1.0 / n as f64;
        loss = loss * inv + 0.5 * cfg.l2 * w.iter().map(|v| v * v).sum::<f64>();
        if !loss.is_finite() {
            return Err(Error::NonFinite("probe loss".into()));
        }
        losses.push(loss);
        matmul_tn(k, n, dim, &z, &x, 0.0, &mut gw);
        for (wv, g) in w.iter_mut().zip(&gw) {
            *wv -= cfg.lr * (g * inv + cfg.l2 * *wv);
        }
        for (c, bb) in b.iter_mut().enumerate() {
            let g: f64 = z.iter().skip(c).step_by(k).sum::<f64>() * inv;
            *bb -= cfg.lr * g;
        }
    }
    for (row, bb) in w.chunks_mut(dim).zip(b.iter_mut()) {
        for ((wv, m), s) in row.iter_mut().zip(&mean).zip(&scale) {
            *wv /= s;
            *bb -= *wv * m;
        }
    }
    Ok((MulticlassClassifier { classes: k, weights: w, bias: b }, losses))
}

/// Column means and standard deviations; constant columns keep scale 1.
fn moments(x: &[f64], dim: usize) -> (Vec<f64>, Vec<f64>) {
    let n = (x.len() / dim) as f64;
    let mut mean = vec![0.0; dim];
    for row in x.chunks(dim) {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v / n;
        }
    }
    let mut var = vec![0.0; dim];
    for row in x.chunks(dim) {
        for ((s, v), m) in var.iter_mut().zip(row).zip(&mean) {
            *s += (v - m) * (v - m) / n;
        }
    }
    let scale = var.into_iter().map(|v| if v > 1e-12 { v.sqrt() } else { 1.0 }).collect();
    (mean, scale)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng;

    #[test]
    fn separable_toy_reaches_full_accuracy() {
        let pts: Vec<Vec<f32>> = (0..40).map(|i| vec![if i % 2 == 0 { 1.0 } else { -1.0 }, (i as f32 * 0.37).sin()]).collect();
        let ys: Vec<bool> = (0..40).map(|i| i % 2 == 0).collect();
        let xs: Vec<&[f32]> = pts.iter().map(|p| p.as_slice()).collect();
        let (c, _) = fit_binary(&xs, &ys, &ProbeConfig::default()).unwrap();
        assert!(xs.iter().zip(&ys).all(|(x, &y)| c.predict(x) == y));
    }

    #[test]
    fn loss_decreases_monotonically() {
        let mut r = rng(3);
        let pts: Vec<Vec<f32>> = (0..60).map(|_| (0..4).map(|_| r.gen_range(-1.0..1.0)).collect()).collect();
        let ys: Vec<bool> = pts.iter().map(|p| p[0] + 0.5 * p[1] > 0.1).collect();
        let xs: Vec<&[f32]> = pts.iter().map(|p| p.as_slice()).collect();
        let cfg = ProbeConfig { lr: 0.05, iterations: 200, ..Default::default() };
        let (_, losses) = fit_binary(&xs, &ys, &cfg).unwrap();
        assert!(losses.windows(2).all(|w| w[1] <= w[0] + 1e-15));
        assert!((losses[0] - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn deterministic_and_single_class_rejected() {
        let pts = [vec![1.0f32, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]];
        let xs: Vec<&[f32]> = pts.iter().map(|p| p.as_slice()).collect();
        let ys = [true, false, true];
        let cfg = ProbeConfig::default();
        assert_eq!(fit_binary(&xs, &ys, &cfg).unwrap().0, fit_binary(&xs, &ys, &cfg).unwrap().0);
        assert!(matches!(fit_binary(&xs, &[true; 3], &cfg), Err(Error::SingleClass(_))));
        assert!(matches!(fit_multiclass(&xs, &[1, 1, 1], 3, &cfg), Err(Error::SingleClass(_))));
    }

    #[test]
    fn multiclass_learns_clusters() {
        let centers = [[2.0f32, 0.0], [-2.0, 0.0], [0.0, 2.0]];
        let mut r = rng(5);
        let mut pts = Vec::new();
        let mut ys = Vec::new();
        for i in 0..90 {
            let c = centers[i % 3];
            pts.push(vec![c[0] + r.gen_range(-0.3..0.3), c[1] + r.gen_range(-0.3..0.3)]);
            ys.push(i % 3);
        }
        let xs: Vec<&[f32]> = pts.iter().map(|p| p.as_slice()).collect();
        let (c, losses) = fit_multiclass(&xs, &ys, 3, &ProbeConfig::default()).unwrap();
        assert!((losses[0] - 3f64.ln()).abs() < 1e-12);
        assert!(xs.iter().zip(&ys).all(|(x, &y)| c.predict(x) == y));
    }

    #[test]
    fn balancing_equalises_classes() {
        let ys: Vec<bool> = (0..50).map(|i| i < 5).collect();
        let idx = balanced_indices(&ys, &mut rng(1));
        let pos = idx.iter().filter(|&&i| ys[i]).count();
        assert_eq!(pos, 45);
        assert_eq!(idx.len(), 90);
    }

    #[test]
    fn split_is_disjoint_and_sized() {
        let cfg = ProbeConfig::default();
        let train = split_dialogues(0..100, &cfg);
        assert_eq!(train.len(), 70);
        assert_eq!(train, split_dialogues((0..100).rev(), &cfg));
    }
}
