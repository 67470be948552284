//! Pairwise property classification: can a linear classifier tell a query's
//! similar nodes from its intruders using only the two embeddings?
//!
//! Pair features are `|z_u − z_v| ‖ z_u ⊙ z_v`, symmetric in `(u, v)`. The
//! classifier is L2-regularized logistic regression fitted by Newton's
//! method; accuracy is measured on a held-out 20%.

use nalgebra::{DMatrix, DVector};
use ndarray::{Array1, Array2, Axis};
use rand::seq::SliceRandom;

use crate::embedding::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::nci::{query_sets, CoherenceParams};
use crate::relations::SimilarityMatrix;
use crate::rng::substream;

pub const LOGISTIC_L2: f64 = 1e-2;
pub const LOGISTIC_TOLERANCE: f64 = 1e-6;
pub const TRAIN_FRACTION: f64 = 0.8;
pub const MIN_PAIRS_PER_CLASS: usize = 20;
/// Each class is downsampled to at most this many pairs.
pub const MAX_PAIRS_PER_CLASS: usize = 1000;

const MAX_NEWTON_STEPS: usize = 100;

/// Balanced labelled node pairs: `true` for (query, similar), `false` for
/// (query, intruder).
#[derive(Debug, Clone, PartialEq)]
pub struct PairDataset {
    pairs: Vec<(usize, usize)>,
    labels: Vec<bool>,
}

impl PairDataset {
    pub fn new(pairs: Vec<(usize, usize)>, labels: Vec<bool>) -> Result<Self> {
        if pairs.len() != labels.len() {
            return Err(Error::Parameter("pairs and labels differ in length".into()));
        }
        let pos = labels.iter().filter(|&&l| l).count();
        let neg = labels.len() - pos;
        if pos.min(neg) < MIN_PAIRS_PER_CLASS {
            return Err(Error::InsufficientData(format!(
                "{pos} positive and {neg} negative pairs, need {MIN_PAIRS_PER_CLASS} of each"
            )));
        }
        Ok(PairDataset { pairs, labels })
    }

    /// Positives from every query's similar set, negatives from its
    /// intruders, each side downsampled to the smaller side (capped at
    /// [`MAX_PAIRS_PER_CLASS`]).
    pub fn from_similarity(s: &SimilarityMatrix, p: &CoherenceParams) -> Result<Self> {
        p.validate()?;
        let n = s.node_count();
        let targets = p.target_set(n)?;
        let mut pos = Vec::new();
        let mut neg = Vec::new();
        for &u in p.query_set(n)?.nodes() {
            if !s.has_row(u) {
                continue;
            }
            let sets = query_sets(&s.row(u), u, &targets, p);
            if sets.similar.is_empty() || sets.intruders.is_empty() {
                continue;
            }
            pos.extend(sets.similar.iter().map(|&(v, _)| (u, v)));
            neg.extend(sets.intruders.iter().map(|&v| (u, v)));
        }
        let m = pos.len().min(neg.len()).min(MAX_PAIRS_PER_CLASS);
        if m < MIN_PAIRS_PER_CLASS {
            return Err(Error::InsufficientData(format!(
                "{}: {} positive and {} negative pairs, need {MIN_PAIRS_PER_CLASS} of each",
                s.name(),
                pos.len(),
                neg.len()
            )));
        }
        let mut rng = substream(p.seed, "probe-pairs", 0);
        pos.shuffle(&mut rng);
        neg.shuffle(&mut rng);
        pos.truncate(m);
        neg.truncate(m);
        let labels = std::iter::repeat_n(true, m).chain(std::iter::repeat_n(false, m)).collect();
        pos.extend(neg);
        Ok(PairDataset { pairs: pos, labels })
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn labels(&self) -> &[bool] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Same pairs with labels randomly permuted.
    pub fn shuffle_labels(&self, seed: u64) -> PairDataset {
        let mut labels = self.labels.clone();
        labels.shuffle(&mut substream(seed, "probe-labels", 0));
        PairDataset {
            pairs: self.pairs.clone(),
            labels,
        }
    }

    /// Fits on a seeded 80% split and returns accuracy on the other 20%.
    pub fn held_out_accuracy(&self, z: &EmbeddingMatrix, seed: u64) -> Result<f64> {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.shuffle(&mut substream(seed, "probe-split", 0));
        let n_train = ((self.len() as f64) * TRAIN_FRACTION).floor() as usize;
        let (train, test) = order.split_at(n_train);
        let features = |idx: &[usize]| {
            let pairs: Vec<(usize, usize)> = idx.iter().map(|&i| self.pairs[i]).collect();
            pair_features(z, &pairs)
        };
        let y: Vec<bool> = train.iter().map(|&i| self.labels[i]).collect();
        let model = train_logistic(&features(train), &y, LOGISTIC_L2, LOGISTIC_TOLERANCE)?;
        let predicted = model.predict(&features(test));
        let correct = test
            .iter()
            .zip(predicted)
            .filter(|(&i, p)| self.labels[i] == *p)
            .count();
        Ok(correct as f64 / test.len() as f64)
    }
}

/// One row per pair: `|z_u − z_v|` followed by `z_u ⊙ z_v`.
pub fn pair_features(z: &EmbeddingMatrix, pairs: &[(usize, usize)]) -> Array2<f64> {
    let d = z.dim();
    let mut x = Array2::zeros((pairs.len(), 2 * d));
    for (mut row, &(u, v)) in x.outer_iter_mut().zip(pairs) {
        let (zu, zv) = (z.row(u), z.row(v));
        for j in 0..d {
            row[j] = (zu[j] - zv[j]).abs();
            row[d + j] = zu[j] * zv[j];
        }
    }
    x
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticModel {
    pub weights: Array1<f64>,
    pub bias: f64,
}

impl LogisticModel {
    pub fn decision(&self, x: &Array2<f64>) -> Array1<f64> {
        x.dot(&self.weights) + self.bias
    }

    pub fn predict(&self, x: &Array2<f64>) -> Vec<bool> {
        self.decision(x).iter().map(|&t| t > 0.0).collect()
    }
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^t)` without overflow.
fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

/// Minimizes `mean log-loss + (λ/2)‖w‖²` (bias unpenalized) by damped Newton
/// steps until the gradient's max-norm drops below `tol`.
pub fn train_logistic(x: &Array2<f64>, y: &[bool], l2: f64, tol: f64) -> Result<LogisticModel> {
    let (m, f) = x.dim();
    if m == 0 || y.len() != m {
        return Err(Error::Parameter("training set is empty or mislabelled".into()));
    }
    // bias as a trailing constant feature
    let mut xb = Array2::ones((m, f + 1));
    xb.slice_mut(ndarray::s![.., ..f]).assign(x);
    let yv = Array1::from_iter(y.iter().map(|&b| if b { 1.0 } else { 0.0 }));
    let penalty = Array1::from_iter((0..=f).map(|j| if j < f { l2 } else { 0.0 }));
    let mf = m as f64;

    let objective = |w: &Array1<f64>| {
        let t = xb.dot(w);
        let loss: f64 = t.iter().zip(&yv).map(|(&t, &y)| softplus(t) - y * t).sum::<f64>() / mf;
        loss + 0.5 * w.iter().zip(&penalty).map(|(w, p)| p * w * w).sum::<f64>()
    };

    let mut w = Array1::zeros(f + 1);
    let mut obj = objective(&w);
    for _ in 0..MAX_NEWTON_STEPS {
        let p = xb.dot(&w).mapv(sigmoid);
        let grad = xb.t().dot(&(&p - &yv)) / mf + &penalty * &w;
        if grad.iter().fold(0.0f64, |a, g| a.max(g.abs())) < tol {
            break;
        }
        let sw = p.mapv(|p| (p * (1.0 - p)).sqrt());
        let xw = &xb * &sw.insert_axis(Axis(1));
        let h = xw.t().dot(&xw) / mf;
        let k = f + 1;
        let hm = DMatrix::from_fn(k, k, |i, j| {
            h[[i, j]] + if i == j { penalty[i] + 1e-12 } else { 0.0 }
        });
        let g = DVector::from_iterator(k, grad.iter().copied());
        let step = match hm.cholesky() {
            Some(c) => c.solve(&g),
            None => g.clone(),
        };
        let step = Array1::from_iter(step.iter().copied());
        let slope = grad.dot(&step);
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let cand = &w - &(&step * t);
            let c = objective(&cand);
            if c <= obj - 1e-4 * t * slope {
                w = cand;
                obj = c;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if w.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("logistic regression diverged".into()));
    }
    Ok(LogisticModel {
        bias: w[f],
        weights: w.slice(ndarray::s![..f]).to_owned(),
    })
}

/// Held-out accuracy of the pair classifier on `z` for relation `s`.
pub fn property_classification_score(z: &EmbeddingMatrix, s: &SimilarityMatrix, p: &CoherenceParams) -> Result<f64> {
    super::check_rows(z, s)?;
    PairDataset::from_similarity(s, p)?.held_out_accuracy(&super::normalized(z), p.seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::EmbeddingSource;

    /// Query `0` near its positives, far from its negatives.
    fn separable(n_per_class: usize) -> (EmbeddingMatrix, PairDataset) {
        let n = 1 + 2 * n_per_class;
        let z = Array2::from_shape_fn((n, 2), |(i, j)| {
            let theta: f64 = if i == 0 {
                0.0
            } else if i <= n_per_class {
                0.01 * (i as f64 / n_per_class as f64)
            } else {
                std::f64::consts::PI - 0.01 * ((i - n_per_class) as f64 / n_per_class as f64)
            };
            if j == 0 { theta.cos() } else { theta.sin() }
        });
        let pairs: Vec<(usize, usize)> = (1..n).map(|v| (0, v)).collect();
        let labels = (1..n).map(|v| v <= n_per_class).collect();
        (
            EmbeddingMatrix::new(z, EmbeddingSource::Constructed).normalize_rows(),
            PairDataset::new(pairs, labels).unwrap(),
        )
    }

    #[test]
    fn separable_pairs_are_classified() {
        let (z, data) = separable(100);
        assert!(data.held_out_accuracy(&z, 0).unwrap() >= 0.95);
    }

    #[test]
    fn too_few_pairs_is_insufficient() {
        let pairs = vec![(0, 1); 30];
        let labels = (0..30).map(|i| i < 15).collect();
        assert!(matches!(PairDataset::new(pairs, labels), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn logistic_fits_a_threshold() {
        let x = Array2::from_shape_fn((200, 1), |(i, _)| i as f64 / 100.0 - 1.0);
        let y: Vec<bool> = (0..200).map(|i| i >= 100).collect();
        let m = train_logistic(&x, &y, LOGISTIC_L2, LOGISTIC_TOLERANCE).unwrap();
        assert!(m.weights[0] > 0.0);
        let acc = m.predict(&x).iter().zip(&y).filter(|(a, b)| a == b).count();
        assert!(acc >= 195);
    }

    #[test]
    fn features_are_symmetric() {
        let z = EmbeddingMatrix::new(ndarray::array![[1.0, -2.0], [0.5, 3.0]], EmbeddingSource::Constructed);
        let a = pair_features(&z, &[(0, 1)]);
        let b = pair_features(&z, &[(1, 0)]);
        assert_eq!(a, b);
        assert_eq!(a.row(0).to_vec(), vec![0.5, 5.0, 0.5, -6.0]);
    }
}
