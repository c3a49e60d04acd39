//! Diagonal-covariance Gaussian mixtures over RGB, trained by EM.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::raster::{Image, ProbabilityMap, Rgb};

/// EM settings. Defaults: 16 components, 200 iterations, stop when the mean
/// log-likelihood gains less than `1e-6`, variance floor 1.0 (8-bit units²).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GmmConfig {
    pub components: usize,
    pub seed: u64,
    pub max_iterations: usize,
    pub tolerance: f64,
    pub variance_floor: f64,
}

impl Default for GmmConfig {
    fn default() -> Self {
        Self {
            components: 16,
            seed: 0,
            max_iterations: 200,
            tolerance: 1e-6,
            variance_floor: 1.0,
        }
    }
}

/// A single class-conditional mixture.
#[derive(Debug, Clone, PartialEq)]
pub struct Mixture {
    pub weights: Vec<f64>,
    pub means: Vec<[f64; 3]>,
    pub variances: Vec<[f64; 3]>,
}

const LN_2PI: f64 = 1.837_877_066_409_345_5;

impl Mixture {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    fn component_log_density(&self, k: usize, x: &[f64; 3]) -> f64 {
        let (mu, var) = (&self.means[k], &self.variances[k]);
        let mut acc = 0.0;
        for c in 0..3 {
            let d = x[c] - mu[c];
            acc += d * d / var[c] + var[c].ln() + LN_2PI;
        }
        -0.5 * acc
    }

    /// `ln Σ_k w_k N(x; μ_k, σ²_k)`.
    pub fn log_density(&self, x: &[f64; 3]) -> f64 {
        let mut best = f64::NEG_INFINITY;
        let mut terms = [0.0f64; 64];
        let mut buf;
        let logs: &mut [f64] = if self.len() <= terms.len() {
            &mut terms[..self.len()]
        } else {
            buf = vec![0.0; self.len()];
            &mut buf
        };
        for (k, slot) in logs.iter_mut().enumerate() {
            *slot = if self.weights[k] > 0.0 {
                self.weights[k].ln() + self.component_log_density(k, x)
            } else {
                f64::NEG_INFINITY
            };
            best = best.max(*slot);
        }
        if best == f64::NEG_INFINITY {
            return best;
        }
        best + logs.iter().map(|l| (l - best).exp()).sum::<f64>().ln()
    }
}

/// Skin and non-skin mixtures plus the skin prior seen during training.
#[derive(Debug, Clone, PartialEq)]
pub struct GmmModel {
    pub skin: Mixture,
    pub nonskin: Mixture,
    pub skin_prior: f64,
}

/// Smallest and largest posterior returned, keeping outputs inside (0, 1).
const POSTERIOR_EPS: f64 = 1e-12;

impl GmmModel {
    /// `π·L_s / (π·L_s + (1 − π)·L_n)`, evaluated in log space.
    pub fn posterior(&self, p: Rgb, skin_prior: f64) -> f64 {
        let x = to_f64(p);
        let ls = skin_prior.ln() + self.skin.log_density(&x);
        let ln = (1.0 - skin_prior).ln() + self.nonskin.log_density(&x);
        let post = if ls == f64::NEG_INFINITY && ln == f64::NEG_INFINITY {
            0.5
        } else {
            1.0 / (1.0 + (ln - ls).exp())
        };
        post.clamp(POSTERIOR_EPS, 1.0 - POSTERIOR_EPS)
    }

    pub fn probability_map(&self, img: &Image) -> ProbabilityMap {
        let values = img
            .pixels()
            .par_iter()
            .map(|&p| self.posterior(p, self.skin_prior))
            .collect();
        ProbabilityMap::from_valid(img.width(), img.height(), values)
    }
}

/// Posterior of a GMM model at an explicit prior.
pub fn gmm_posterior(m: &GmmModel, p: Rgb, skin_prior: f64) -> f64 {
    m.posterior(p, skin_prior)
}

fn to_f64([r, g, b]: Rgb) -> [f64; 3] {
    [f64::from(r), f64::from(g), f64::from(b)]
}

fn sq_dist(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    (0..3).map(|c| (a[c] - b[c]).powi(2)).sum()
}

/// k-means++ seeding: returns `k` initial centers.
fn kmeans_pp(samples: &[[f64; 3]], k: usize, rng: &mut ChaCha8Rng) -> Vec<[f64; 3]> {
    let mut centers = Vec::with_capacity(k);
    centers.push(samples[rng.random_range(0..samples.len())]);
    let mut d2: Vec<f64> = samples.iter().map(|s| sq_dist(s, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let idx = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = samples.len() - 1;
            for (i, &d) in d2.iter().enumerate() {
                if target < d {
                    chosen = i;
                    break;
                }
                target -= d;
            }
            chosen
        } else {
            rng.random_range(0..samples.len())
        };
        let c = samples[idx];
        for (d, s) in d2.iter_mut().zip(samples) {
            *d = d.min(sq_dist(s, &c));
        }
        centers.push(c);
    }
    centers
}

/// Fits one mixture. Returns the model and the mean log-likelihood of the
/// data before every M-step; EM guarantees that sequence never decreases.
pub fn fit_mixture(samples: &[[f64; 3]], cfg: &GmmConfig, rng: &mut ChaCha8Rng) -> Result<(Mixture, Vec<f64>)> {
    let k = cfg.components;
    if k == 0 {
        return Err(Error::InvalidParameter("GMM needs at least one component".into()));
    }
    if samples.len() < k {
        return Err(Error::TooFewSamples {
            needed: k,
            available: samples.len(),
        });
    }
    let n = samples.len() as f64;
    let floor = cfg.variance_floor;

    let mut mean = [0.0; 3];
    for s in samples {
        for c in 0..3 {
            mean[c] += s[c];
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = [0.0; 3];
    for s in samples {
        for c in 0..3 {
            var[c] += (s[c] - mean[c]).powi(2);
        }
    }
    let global_var = var.map(|v| (v / n).max(floor));

    let mut mix = Mixture {
        weights: vec![1.0 / k as f64; k],
        means: kmeans_pp(samples, k, rng),
        variances: vec![global_var; k],
    };

    let mut resp = vec![0.0; samples.len() * k];
    let mut trace = Vec::new();
    for _ in 0..cfg.max_iterations {
        let ll = e_step(&mix, samples, &mut resp);
        let converged = trace.last().is_some_and(|&prev: &f64| ll - prev < cfg.tolerance);
        trace.push(ll);
        if converged {
            break;
        }
        m_step(&mut mix, samples, &resp, floor);
    }
    Ok((mix, trace))
}

/// Fills responsibilities, returns the mean log-likelihood.
fn e_step(mix: &Mixture, samples: &[[f64; 3]], resp: &mut [f64]) -> f64 {
    let k = mix.len();
    let log_w: Vec<f64> = mix.weights.iter().map(|w| if *w > 0.0 { w.ln() } else { f64::NEG_INFINITY }).collect();
    let mut total = 0.0;
    for (x, r) in samples.iter().zip(resp.chunks_exact_mut(k)) {
        let mut best = f64::NEG_INFINITY;
        for j in 0..k {
            r[j] = if log_w[j].is_finite() {
                log_w[j] + mix.component_log_density(j, x)
            } else {
                f64::NEG_INFINITY
            };
            best = best.max(r[j]);
        }
        let mut sum = 0.0;
        for v in r.iter_mut() {
            *v = (*v - best).exp();
            sum += *v;
        }
        for v in r.iter_mut() {
            *v /= sum;
        }
        total += best + sum.ln();
    }
    total / samples.len() as f64
}

fn m_step(mix: &mut Mixture, samples: &[[f64; 3]], resp: &[f64], floor: f64) {
    let k = mix.len();
    let n = samples.len() as f64;
    for j in 0..k {
        let mut nk = 0.0;
        let mut mu = [0.0; 3];
        for (x, r) in samples.iter().zip(resp.chunks_exact(k)) {
            let w = r[j];
            nk += w;
            for c in 0..3 {
                mu[c] += w * x[c];
            }
        }
        mix.weights[j] = nk / n;
        // a component that lost all support keeps its last shape
        if nk <= f64::MIN_POSITIVE {
            continue;
        }
        mu.iter_mut().for_each(|m| *m /= nk);
        let mut var = [0.0; 3];
        for (x, r) in samples.iter().zip(resp.chunks_exact(k)) {
            let w = r[j];
            for c in 0..3 {
                var[c] += w * (x[c] - mu[c]).powi(2);
            }
        }
        mix.means[j] = mu;
        mix.variances[j] = var.map(|v| (v / nk).max(floor));
    }
}

/// Log-likelihood traces from GMM training, one per class.
#[derive(Debug, Clone, PartialEq)]
pub struct GmmTrace {
    pub skin: Vec<f64>,
    pub nonskin: Vec<f64>,
}

/// Trains skin and non-skin mixtures; all randomness comes from `cfg.seed`.
pub fn train_gmm_traced(skin: &[Rgb], nonskin: &[Rgb], cfg: &GmmConfig) -> Result<(GmmModel, GmmTrace)> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let skin_x: Vec<[f64; 3]> = skin.iter().copied().map(to_f64).collect();
    let nonskin_x: Vec<[f64; 3]> = nonskin.iter().copied().map(to_f64).collect();
    let (skin_mix, skin_trace) = fit_mixture(&skin_x, cfg, &mut rng)?;
    let (nonskin_mix, nonskin_trace) = fit_mixture(&nonskin_x, cfg, &mut rng)?;
    let prior = skin.len() as f64 / (skin.len() + nonskin.len()) as f64;
    Ok((
        GmmModel {
            skin: skin_mix,
            nonskin: nonskin_mix,
            skin_prior: prior,
        },
        GmmTrace {
            skin: skin_trace,
            nonskin: nonskin_trace,
        },
    ))
}

pub fn train_gmm(skin: &[Rgb], nonskin: &[Rgb], components: usize, seed: u64) -> Result<GmmModel> {
    let cfg = GmmConfig {
        components,
        seed,
        ..GmmConfig::default()
    };
    train_gmm_traced(skin, nonskin, &cfg).map(|(m, _)| m)
}

/// Uniform reservoir sample of at most `cap` pixels, deterministic in `seed`
/// and in the order pixels are offered.
#[derive(Debug, Clone)]
pub struct Reservoir {
    cap: usize,
    seen: u64,
    items: Vec<Rgb>,
    rng: ChaCha8Rng,
}

impl Reservoir {
    pub fn new(cap: usize, seed: u64) -> Self {
        Self {
            cap,
            seen: 0,
            items: Vec::new(),
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn offer(&mut self, p: Rgb) {
        self.seen += 1;
        if self.items.len() < self.cap {
            self.items.push(p);
        } else {
            let j = self.rng.random_range(0..self.seen);
            if (j as usize) < self.cap {
                self.items[j as usize] = p;
            }
        }
    }

    pub fn seen(&self) -> u64 {
        self.seen
    }

    pub fn into_samples(self) -> Vec<Rgb> {
        self.items
    }
}
