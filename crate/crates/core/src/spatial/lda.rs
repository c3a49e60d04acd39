//! Two-class Fisher discriminant with logistic squashing to `[0, 1]`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Ridge added to the within-class scatter before solving.
pub const REGULARIZATION: f64 = 1e-6;
/// Probability assigned to the projected skin class mean; the non-skin mean
/// maps to `1 - SQUASH_TARGET`.
pub const SQUASH_TARGET: f64 = 0.99;
/// Separations at or below this are reported as degenerate.
pub const DEGENERATE_SEPARATION: f64 = 1e-12;

/// Unit projection `w`, oriented so skin projects above `offset`.
#[derive(Debug, Clone, PartialEq)]
pub struct LdaModel {
    pub weights: Vec<f64>,
    pub offset: f64,
    pub gain: f64,
    /// `w · (μ_skin − μ_nonskin)` measured at training time.
    pub separation: f64,
}

impl LdaModel {
    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    /// Training classes were not separable along any direction.
    pub fn is_degenerate(&self) -> bool {
        self.separation <= DEGENERATE_SEPARATION
    }

    /// Signed distance along `w` from the midpoint of the class means.
    pub fn project(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.weights.len());
        self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() - self.offset
    }

    pub fn probability(&self, x: &[f64]) -> f64 {
        1.0 / (1.0 + (-self.gain * self.project(x)).exp())
    }

    pub fn validate(&self) -> Result<()> {
        let norm = self.weights.iter().map(|w| w * w).sum::<f64>().sqrt();
        if self.weights.is_empty() || (norm - 1.0).abs() > 1e-9 || !self.gain.is_finite() || !self.offset.is_finite() {
            return Err(Error::InvalidParameter("LDA model must have a finite unit projection".into()));
        }
        Ok(())
    }
}

/// Streaming first and second moments per class. Index 0 is skin.
#[derive(Debug, Clone, PartialEq)]
pub struct LdaAccumulator {
    dim: usize,
    count: [u64; 2],
    sum: [Vec<f64>; 2],
    outer: [Vec<f64>; 2],
}

impl LdaAccumulator {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            count: [0; 2],
            sum: [vec![0.0; dim], vec![0.0; dim]],
            outer: [vec![0.0; dim * dim], vec![0.0; dim * dim]],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn counts(&self) -> (u64, u64) {
        (self.count[0], self.count[1])
    }

    pub fn add(&mut self, x: &[f64], is_skin: bool) {
        assert_eq!(x.len(), self.dim, "feature dimension");
        let c = usize::from(!is_skin);
        self.count[c] += 1;
        for (s, v) in self.sum[c].iter_mut().zip(x) {
            *s += v;
        }
        let outer = &mut self.outer[c];
        for i in 0..self.dim {
            for j in 0..self.dim {
                outer[i * self.dim + j] += x[i] * x[j];
            }
        }
    }

    pub fn merge(&mut self, other: &Self) {
        assert_eq!(self.dim, other.dim, "feature dimension");
        for c in 0..2 {
            self.count[c] += other.count[c];
            for (a, b) in self.sum[c].iter_mut().zip(&other.sum[c]) {
                *a += b;
            }
            for (a, b) in self.outer[c].iter_mut().zip(&other.outer[c]) {
                *a += b;
            }
        }
    }

    fn mean_and_cov(&self, c: usize) -> (DVector<f64>, DMatrix<f64>) {
        let n = self.count[c] as f64;
        let mean = DVector::from_iterator(self.dim, self.sum[c].iter().map(|s| s / n));
        let second = DMatrix::from_row_slice(self.dim, self.dim, &self.outer[c]) / n;
        let cov = second - &mean * mean.transpose();
        (mean, cov)
    }

    /// Closed-form Fisher direction `w ∝ (S_w + εI)⁻¹ (μ_skin − μ_nonskin)`,
    /// where `S_w` is the sum of the two class covariance matrices.
    pub fn fit(&self) -> Result<LdaModel> {
        if self.count[0] == 0 || self.count[1] == 0 {
            return Err(Error::TooFewSamples {
                needed: 1,
                available: self.count[0].min(self.count[1]) as usize,
            });
        }
        let (mu_s, cov_s) = self.mean_and_cov(0);
        let (mu_n, cov_n) = self.mean_and_cov(1);
        let scatter = cov_s + cov_n + DMatrix::identity(self.dim, self.dim) * REGULARIZATION;
        let delta = &mu_s - &mu_n;

        let solved = match scatter.clone().cholesky() {
            Some(ch) => Some(ch.solve(&delta)),
            None => scatter.lu().solve(&delta),
        };
        let mut w = solved.unwrap_or_else(|| delta.clone());
        let norm = w.norm();
        if !(norm.is_finite() && norm > 0.0) {
            w = DVector::zeros(self.dim);
            w[0] = 1.0;
        } else {
            w /= norm;
        }
        if w.dot(&delta) < 0.0 {
            w = -w;
        }
        let separation = w.dot(&delta);
        let offset = w.dot(&((&mu_s + &mu_n) * 0.5));
        let gain = if separation > DEGENERATE_SEPARATION {
            2.0 * (SQUASH_TARGET / (1.0 - SQUASH_TARGET)).ln() / separation
        } else {
            1.0
        };
        Ok(LdaModel {
            weights: w.iter().copied().collect(),
            offset,
            gain,
            separation,
        })
    }
}

/// Fits a discriminant to labeled feature vectors (`true` = skin).
pub fn train_lda(samples: &[(Vec<f64>, bool)]) -> Result<LdaModel> {
    let dim = samples
        .first()
        .map(|(x, _)| x.len())
        .ok_or(Error::TooFewSamples { needed: 2, available: 0 })?;
    if dim == 0 {
        return Err(Error::InvalidParameter("zero-dimensional features".into()));
    }
    let mut acc = LdaAccumulator::new(dim);
    for (x, skin) in samples {
        if x.len() != dim {
            return Err(Error::InvalidParameter(format!(
                "feature vector of length {} in a {dim}-dimensional set",
                x.len()
            )));
        }
        acc.add(x, *skin);
    }
    acc.fit()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Four points per class at `mean ± (a, 0)` and `mean ± (0, b)`; the
    /// population covariance is `diag(a²/2, b²/2)`.
    fn cross(mean: [f64; 2], a: f64, b: f64, skin: bool) -> Vec<(Vec<f64>, bool)> {
        vec![
            (vec![mean[0] + a, mean[1]], skin),
            (vec![mean[0] - a, mean[1]], skin),
            (vec![mean[0], mean[1] + b], skin),
            (vec![mean[0], mean[1] - b], skin),
        ]
    }

    fn angle(a: &[f64], b: &[f64]) -> f64 {
        let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
        let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
        let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
        (dot / (na * nb)).clamp(-1.0, 1.0).acos()
    }

    #[test]
    fn axis_aligned_toy() {
        let mut s = cross([1.0, 0.0], 1.0, 1.0, true);
        s.extend(cross([0.0, 0.0], 1.0, 1.0, false));
        let m = train_lda(&s).unwrap();
        assert!(angle(&m.weights, &[1.0, 0.0]) < 1e-9);
        assert!(m.project(&[1.0, 0.0]) > 0.0);
        assert!(m.project(&[0.0, 0.0]) < 0.0);
        assert!((m.probability(&[1.0, 0.0]) - SQUASH_TARGET).abs() < 1e-9);
        m.validate().unwrap();
    }

    #[test]
    fn anisotropic_scatter() {
        // per-class covariance diag(0.5, 50): S_w = diag(1, 100)
        let mut s = cross([1.0, 1.0], 1.0, 10.0, true);
        s.extend(cross([0.0, 0.0], 1.0, 10.0, false));
        let m = train_lda(&s).unwrap();
        let expected = [1.0, 0.01];
        assert!(angle(&m.weights, &expected) < 1e-6);
        let norm: f64 = m.weights.iter().map(|w| w * w).sum::<f64>().sqrt();
        assert!((norm - 1.0).abs() < 1e-12);
    }

    #[test]
    fn equal_means_are_degenerate() {
        let mut s = cross([0.5, 0.5], 1.0, 1.0, true);
        s.extend(cross([0.5, 0.5], 2.0, 1.0, false));
        let m = train_lda(&s).unwrap();
        assert!(m.is_degenerate());
        assert!(m.separation.abs() < 1e-9);
        m.validate().unwrap();
    }

    #[test]
    fn needs_both_classes() {
        let s = cross([0.0, 0.0], 1.0, 1.0, true);
        assert!(matches!(train_lda(&s), Err(Error::TooFewSamples { .. })));
        assert!(matches!(train_lda(&[]), Err(Error::TooFewSamples { .. })));
    }

    #[test]
    fn maximizes_fisher_ratio() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut samples = Vec::new();
        for _ in 0..300 {
            let t: f64 = rng.random_range(-1.0..1.0);
            let u: f64 = rng.random_range(-1.0..1.0);
            samples.push((vec![1.0 + t, 0.5 + 2.0 * u + 0.8 * t, u], true));
            let t: f64 = rng.random_range(-1.0..1.0);
            let u: f64 = rng.random_range(-1.0..1.0);
            samples.push((vec![t, 2.0 * u + 0.8 * t, -0.3 + u], false));
        }
        let m = train_lda(&samples).unwrap();

        let mut acc = LdaAccumulator::new(3);
        for (x, s) in &samples {
            acc.add(x, *s);
        }
        let (ms, cs) = acc.mean_and_cov(0);
        let (mn, cn) = acc.mean_and_cov(1);
        let sw = cs + cn;
        let d = ms - mn;
        let ratio = |v: &[f64]| {
            let v = DVector::from_column_slice(v);
            v.dot(&d).powi(2) / (v.transpose() * &sw * &v)[(0, 0)]
        };
        let best = ratio(&m.weights);
        for _ in 0..2000 {
            let v: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
            assert!(ratio(&v) <= best * (1.0 + 1e-9));
        }
    }

    #[test]
    fn merge_equals_single_pass() {
        let mut s = cross([1.0, 2.0], 0.5, 1.5, true);
        s.extend(cross([0.0, 0.0], 1.0, 0.5, false));
        let mut a = LdaAccumulator::new(2);
        let mut b = LdaAccumulator::new(2);
        let mut all = LdaAccumulator::new(2);
        for (i, (x, k)) in s.iter().enumerate() {
            if i % 2 == 0 { a.add(x, *k) } else { b.add(x, *k) }
            all.add(x, *k);
        }
        a.merge(&b);
        let (m1, m2) = (a.fit().unwrap(), all.fit().unwrap());
        assert!(angle(&m1.weights, &m2.weights) < 1e-12);
    }
}
