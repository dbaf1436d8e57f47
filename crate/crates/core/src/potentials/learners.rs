//! Deterministic from-scratch learners behind the accuracy potentials.
//!
//! Every learner receives its training multiset already canonicalized, which
//! fixes the floating-point reduction order.

use serde::{Deserialize, Serialize};

use crate::data::{squared_distance, DataPoint};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Learner {
    /// Full-batch gradient descent from a zero initialization.
    Logistic {
        lr: f64,
        epochs: usize,
        l2: f64,
    },
    Knn {
        k_neighbors: usize,
    },
    Ridge {
        lambda: f64,
    },
}

impl Learner {
    pub fn logistic_default() -> Self {
        Learner::Logistic {
            lr: 0.1,
            epochs: 200,
            l2: 1e-3,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Learner::Logistic { .. } => "logistic",
            Learner::Knn { .. } => "knn",
            Learner::Ridge { .. } => "ridge",
        }
    }
}

/// A trained predictor. Classifiers predict class ids, regressors reals.
pub enum Model<'a> {
    Binary {
        weights: Vec<f64>,
        bias: f64,
    },
    Softmax {
        weights: Vec<Vec<f64>>,
        biases: Vec<f64>,
    },
    Knn {
        train: Vec<&'a DataPoint>,
        k: usize,
        n_classes: u32,
    },
    Linear {
        weights: Vec<f64>,
        intercept: f64,
    },
}

impl Model<'_> {
    pub fn predict_class(&self, x: &[f64]) -> u32 {
        match self {
            Model::Binary { weights, bias } => u32::from(dot(weights, x) + bias > 0.0),
            Model::Softmax { weights, biases } => {
                let mut best = 0;
                let mut best_score = f64::NEG_INFINITY;
                for (c, (w, b)) in weights.iter().zip(biases).enumerate() {
                    let s = dot(w, x) + b;
                    if s > best_score {
                        best = c;
                        best_score = s;
                    }
                }
                best as u32
            }
            Model::Knn { train, k, n_classes } => {
                let mut votes = vec![0usize; *n_classes as usize];
                for p in nearest(train, x, *k) {
                    if let Some(c) = p.class() {
                        votes[c as usize] += 1;
                    }
                }
                argmax_first(&votes) as u32
            }
            Model::Linear { weights, intercept } => (dot(weights, x) + intercept).round().max(0.0) as u32,
        }
    }

    pub fn predict_real(&self, x: &[f64]) -> f64 {
        match self {
            Model::Linear { weights, intercept } => dot(weights, x) + intercept,
            Model::Knn { train, k, .. } => {
                let near = nearest(train, x, *k);
                near.iter().map(|p| p.label.map_or(0.0, |l| l.as_f64())).sum::<f64>() / near.len() as f64
            }
            other => other.predict_class(x) as f64,
        }
    }
}

/// Trains `learner` on a canonicalized, non-degenerate multiset.
pub fn train<'a>(learner: &Learner, train: &[&'a DataPoint], n_classes: u32) -> Model<'a> {
    match *learner {
        Learner::Logistic { lr, epochs, l2 } => {
            if n_classes <= 2 {
                train_binary_logistic(train, lr, epochs, l2)
            } else {
                train_softmax(train, n_classes as usize, lr, epochs, l2)
            }
        }
        Learner::Knn { k_neighbors } => Model::Knn {
            train: train.to_vec(),
            k: k_neighbors.max(1),
            n_classes: n_classes.max(1),
        },
        Learner::Ridge { lambda } => train_ridge(train, lambda),
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn argmax_first(values: &[usize]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

fn train_binary_logistic<'a>(train: &[&DataPoint], lr: f64, epochs: usize, l2: f64) -> Model<'a> {
    let d = train.first().map_or(0, |p| p.dimension());
    let n = train.len() as f64;
    let mut w = vec![0.0; d];
    let mut b = 0.0;
    let mut grad = vec![0.0; d];
    for _ in 0..epochs {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut grad_b = 0.0;
        for p in train {
            let y = f64::from(u8::from(p.class() == Some(1)));
            let r = sigmoid(dot(&w, &p.features) + b) - y;
            for (g, x) in grad.iter_mut().zip(&p.features) {
                *g += r * x;
            }
            grad_b += r;
        }
        for (wj, g) in w.iter_mut().zip(&grad) {
            *wj -= lr * (g / n + l2 * *wj);
        }
        b -= lr * grad_b / n;
    }
    Model::Binary { weights: w, bias: b }
}

fn train_softmax<'a>(train: &[&DataPoint], k: usize, lr: f64, epochs: usize, l2: f64) -> Model<'a> {
    let d = train.first().map_or(0, |p| p.dimension());
    let n = train.len() as f64;
    let mut w = vec![vec![0.0; d]; k];
    let mut b = vec![0.0; k];
    let mut gw = vec![vec![0.0; d]; k];
    let mut gb = vec![0.0; k];
    let mut probs = vec![0.0; k];
    for _ in 0..epochs {
        gw.iter_mut().for_each(|row| row.iter_mut().for_each(|g| *g = 0.0));
        gb.iter_mut().for_each(|g| *g = 0.0);
        for p in train {
            let y = p.class().unwrap_or(0) as usize;
            for (c, pr) in probs.iter_mut().enumerate() {
                *pr = dot(&w[c], &p.features) + b[c];
            }
            let top = probs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mut z = 0.0;
            for pr in probs.iter_mut() {
                *pr = (*pr - top).exp();
                z += *pr;
            }
            for c in 0..k {
                let r = probs[c] / z - f64::from(u8::from(c == y));
                for (g, x) in gw[c].iter_mut().zip(&p.features) {
                    *g += r * x;
                }
                gb[c] += r;
            }
        }
        for c in 0..k {
            for (wj, g) in w[c].iter_mut().zip(&gw[c]) {
                *wj -= lr * (g / n + l2 * *wj);
            }
            b[c] -= lr * gb[c] / n;
        }
    }
    Model::Softmax { weights: w, biases: b }
}

/// Centered ridge regression solved through a Cholesky factorization.
fn train_ridge<'a>(train: &[&DataPoint], lambda: f64) -> Model<'a> {
    let d = train.first().map_or(0, |p| p.dimension());
    let n = train.len() as f64;
    let mut x_mean = vec![0.0; d];
    let mut y_mean = 0.0;
    for p in train {
        for (m, v) in x_mean.iter_mut().zip(&p.features) {
            *m += v;
        }
        y_mean += p.label.map_or(0.0, |l| l.as_f64());
    }
    x_mean.iter_mut().for_each(|m| *m /= n);
    y_mean /= n;

    let mut gram = vec![vec![0.0; d]; d];
    let mut rhs = vec![0.0; d];
    for p in train {
        let xc: Vec<f64> = p.features.iter().zip(&x_mean).map(|(v, m)| v - m).collect();
        let yc = p.label.map_or(0.0, |l| l.as_f64()) - y_mean;
        for i in 0..d {
            rhs[i] += xc[i] * yc;
            for j in 0..=i {
                gram[i][j] += xc[i] * xc[j];
            }
        }
    }
    for (i, row) in gram.iter_mut().enumerate() {
        row[i] += lambda.max(1e-12);
    }
    let weights = cholesky_solve(&gram, &rhs).unwrap_or_else(|| vec![0.0; d]);
    let intercept = y_mean - dot(&weights, &x_mean);
    Model::Linear { weights, intercept }
}

/// Solves `A x = b` for symmetric positive definite `A` given by its lower
/// triangle.
fn cholesky_solve(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            if i == j {
                let diag = a[i][i] - s;
                if diag <= 0.0 {
                    return None;
                }
                l[i][i] = diag.sqrt();
            } else {
                l[i][j] = (a[i][j] - s) / l[j][j];
            }
        }
    }
    let mut y = vec![0.0; n];
    for i in 0..n {
        let s: f64 = (0..i).map(|k| l[i][k] * y[k]).sum();
        y[i] = (b[i] - s) / l[i][i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| l[k][i] * x[k]).sum();
        x[i] = (y[i] - s) / l[i][i];
    }
    Some(x)
}

/// The `k` training points closest to `x`; distance ties keep canonical order.
fn nearest<'a>(train: &[&'a DataPoint], x: &[f64], k: usize) -> Vec<&'a DataPoint> {
    let mut scored: Vec<(f64, usize)> = train
        .iter()
        .enumerate()
        .map(|(i, p)| (squared_distance(&p.features, x), i))
        .collect();
    let k = k.min(scored.len());
    if k < scored.len() {
        scored.select_nth_unstable_by(k - 1, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        scored.truncate(k);
    }
    scored.into_iter().map(|(_, i)| train[i]).collect()
}
