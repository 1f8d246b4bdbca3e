//! Small numeric kernels shared by the model, losses and evaluation.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Added to each norm in cosine similarities of embeddings.
pub const COSINE_EPS: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    #[default]
    Elu,
    Relu,
    Identity,
}

impl Activation {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Elu => elu(x),
            Activation::Relu => x.max(0.0),
            Activation::Identity => x,
        }
    }

    /// Derivative as a function of the pre-activation.
    pub fn derivative(self, x: f64) -> f64 {
        match self {
            Activation::Elu => elu_derivative(x),
            Activation::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Identity => 1.0,
        }
    }

    pub fn apply_all(self, x: &Array2<f64>) -> Array2<f64> {
        x.mapv(|v| self.apply(v))
    }
}

pub fn elu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        x.exp_m1()
    }
}

pub fn elu_derivative(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        x.exp()
    }
}

/// Plain cosine similarity; zero if either vector is zero.
pub fn cosine(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
    let na = a.dot(&a).sqrt();
    let nb = b.dot(&b).sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        a.dot(&b) / (na * nb)
    }
}

/// Cosine similarity with [`COSINE_EPS`] added to both norms.
pub fn cosine_eps(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
    let na = a.dot(&a).sqrt() + COSINE_EPS;
    let nb = b.dot(&b).sqrt() + COSINE_EPS;
    a.dot(&b) / (na * nb)
}

/// Rows divided by `‖row‖ + ε`, with the row norms.
pub fn normalize_rows(z: ArrayView2<'_, f64>) -> (Array2<f64>, Array1<f64>) {
    let norms: Array1<f64> = z.map_axis(Axis(1), |r| r.dot(&r).sqrt());
    let mut out = z.to_owned();
    for (mut row, &n) in out.axis_iter_mut(Axis(0)).zip(norms.iter()) {
        row /= n + COSINE_EPS;
    }
    (out, norms)
}

/// Back-propagates through [`normalize_rows`]: given `∂L/∂n` returns `∂L/∂z`.
pub fn normalize_rows_backward(
    z: ArrayView2<'_, f64>,
    norms: &Array1<f64>,
    grad_normalized: ArrayView2<'_, f64>,
) -> Array2<f64> {
    let mut out = Array2::zeros(z.raw_dim());
    for i in 0..z.nrows() {
        let rho = norms[i];
        let denom = rho + COSINE_EPS;
        let g = grad_normalized.row(i);
        let zr = z.row(i);
        let mut o = out.row_mut(i);
        o.assign(&g);
        o /= denom;
        if rho > 0.0 {
            let coeff = g.dot(&zr) / (rho * denom * denom);
            o.scaled_add(-coeff, &zr);
        }
    }
    out
}

/// Glorot/Xavier uniform: `U(−a, a)` with `a = √(6 / (fan_in + fan_out))`.
pub fn glorot_uniform<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Array2<f64> {
    let bound = (6.0 / (rows + cols) as f64).sqrt();
    Array2::from_shape_simple_fn((rows, cols), || rng.random_range(-bound..=bound))
}

/// Numerically stable `log Σ exp(x)`.
pub fn log_sum_exp<I: IntoIterator<Item = f64> + Clone>(xs: I) -> f64 {
    let max = xs.clone().into_iter().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + xs.into_iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// Softmax of a slice, shifted by its maximum.
pub fn softmax(xs: &[f64]) -> Vec<f64> {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = xs.iter().map(|x| (x - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}
