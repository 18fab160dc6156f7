//! Dense building blocks with explicit backward passes.

use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};
use rand::Rng;

/// Affine map `x Wᵀ + b` with `W` stored `out × in`.
#[derive(Debug, Clone, PartialEq)]
pub struct Linear {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Linear {
    /// Glorot-uniform weights, zero bias.
    pub fn glorot<R: Rng>(inputs: usize, outputs: usize, rng: &mut R) -> Self {
        let limit = (6.0 / (inputs + outputs) as f64).sqrt();
        let weight = Array2::from_shape_fn((outputs, inputs), |_| rng.random_range(-limit..=limit));
        Linear {
            weight,
            bias: Array1::zeros(outputs),
        }
    }

    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Linear {
            weight: Array2::zeros((outputs, inputs)),
            bias: Array1::zeros(outputs),
        }
    }

    pub fn inputs(&self) -> usize {
        self.weight.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.weight.nrows()
    }

    /// `x Wᵀ` without the bias.
    pub fn project(&self, x: ArrayView2<'_, f64>) -> Array2<f64> {
        x.dot(&self.weight.t())
    }

    pub fn forward(&self, x: ArrayView2<'_, f64>) -> Array2<f64> {
        self.project(x) + &self.bias
    }

    /// Accumulates parameter gradients for upstream `grad` (rows × out) given the
    /// layer input, and returns the gradient with respect to the input.
    pub fn backward(&self, input: ArrayView2<'_, f64>, grad: ArrayView2<'_, f64>, acc: &mut Linear) -> Array2<f64> {
        acc.weight += &grad.t().dot(&input);
        acc.bias += &grad.sum_axis(Axis(0));
        grad.dot(&self.weight)
    }
}

/// Batch normalization over the node axis.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchNorm {
    pub gamma: Array1<f64>,
    pub beta: Array1<f64>,
    pub running_mean: Array1<f64>,
    pub running_var: Array1<f64>,
    /// Weight of the previous running value in each update.
    pub momentum: f64,
    pub eps: f64,
}

pub const BN_EPS: f64 = 1e-5;
pub const BN_MOMENTUM: f64 = 0.9;

/// What the forward pass keeps for the backward pass of a batch norm.
#[derive(Debug, Clone)]
pub struct BatchNormCache {
    pub normalized: Array2<f64>,
    pub inv_std: Array1<f64>,
    pub batch_mean: Array1<f64>,
    pub batch_var_unbiased: Array1<f64>,
}

impl BatchNorm {
    pub fn new(width: usize) -> Self {
        BatchNorm {
            gamma: Array1::ones(width),
            beta: Array1::zeros(width),
            running_mean: Array1::zeros(width),
            running_var: Array1::ones(width),
            momentum: BN_MOMENTUM,
            eps: BN_EPS,
        }
    }

    pub fn zeros_like(&self) -> Self {
        let w = self.gamma.len();
        BatchNorm {
            gamma: Array1::zeros(w),
            beta: Array1::zeros(w),
            running_mean: Array1::zeros(w),
            running_var: Array1::zeros(w),
            momentum: self.momentum,
            eps: self.eps,
        }
    }

    /// Normalizes with the statistics of `x` itself.
    pub fn forward_batch(&self, x: &Array2<f64>) -> (Array2<f64>, BatchNormCache) {
        let n = x.nrows() as f64;
        let mean = x.mean_axis(Axis(0)).expect("non-empty batch");
        let centered = x - &mean;
        let var = centered.mapv(|v| v * v).sum_axis(Axis(0)) / n;
        let inv_std = var.mapv(|v| 1.0 / (v + self.eps).sqrt());
        let normalized = &centered * &inv_std;
        let out = &normalized * &self.gamma + &self.beta;
        let unbiased = if n > 1.0 { &var * (n / (n - 1.0)) } else { var.clone() };
        (
            out,
            BatchNormCache {
                normalized,
                inv_std,
                batch_mean: mean,
                batch_var_unbiased: unbiased,
            },
        )
    }

    /// Normalizes with the running statistics.
    pub fn forward_running(&self, x: &Array2<f64>) -> Array2<f64> {
        let inv_std = self.running_var.mapv(|v| 1.0 / (v + self.eps).sqrt());
        ((x - &self.running_mean) * &inv_std) * &self.gamma + &self.beta
    }

    pub fn update_running(&mut self, cache: &BatchNormCache) {
        let m = self.momentum;
        Zip::from(&mut self.running_mean)
            .and(&cache.batch_mean)
            .for_each(|r, &b| *r = m * *r + (1.0 - m) * b);
        Zip::from(&mut self.running_var)
            .and(&cache.batch_var_unbiased)
            .for_each(|r, &b| *r = m * *r + (1.0 - m) * b);
    }

    /// Backward through batch-statistics normalization.
    pub fn backward(&self, cache: &BatchNormCache, grad: &Array2<f64>, acc: &mut BatchNorm) -> Array2<f64> {
        let n = grad.nrows() as f64;
        acc.gamma += &(grad * &cache.normalized).sum_axis(Axis(0));
        acc.beta += &grad.sum_axis(Axis(0));
        let g_norm = grad * &self.gamma;
        let sum_g = g_norm.sum_axis(Axis(0));
        let sum_gx = (&g_norm * &cache.normalized).sum_axis(Axis(0));
        let mut out = &g_norm * n - &sum_g - &(&cache.normalized * &sum_gx);
        out *= &(&cache.inv_std / n);
        out
    }
}

pub fn relu_inplace(x: &mut Array2<f64>) {
    x.mapv_inplace(|v| v.max(0.0));
}

/// Zeroes `grad` where the activation output was not positive.
pub fn relu_backward(activated: &Array2<f64>, grad: &mut Array2<f64>) {
    Zip::from(grad).and(activated).for_each(|g, &a| {
        if a <= 0.0 {
            *g = 0.0;
        }
    });
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn sigmoid_is_stable_at_extremes() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!(sigmoid(-800.0) >= 0.0 && sigmoid(-800.0) < 1e-300);
        assert_eq!(sigmoid(800.0), 1.0);
    }

    #[test]
    fn batch_norm_output_is_standardized() {
        let bn = BatchNorm::new(2);
        let x = array![[1.0, 10.0], [3.0, 20.0], [5.0, 30.0]];
        let (y, cache) = bn.forward_batch(&x);
        for c in 0..2 {
            let col = y.column(c);
            assert!(col.sum().abs() < 1e-12);
            let var = col.mapv(|v| v * v).sum() / 3.0;
            assert!((var - 1.0).abs() < 1e-4);
        }
        assert_eq!(cache.batch_mean, array![3.0, 20.0]);
        assert_eq!(cache.batch_var_unbiased, array![4.0, 100.0]);
    }
}
