//! Fractional Brownian motion on uniform grids with exact covariance.
//!
//! The sampler draws fractional Gaussian noise (the increment process) and
//! accumulates it. Two interchangeable generators back it:
//!
//! * circulant spectral embedding, O(n log n), the default — the circulant
//!   eigenvalues are precomputed once per (hurst, n, delta) and shared by all
//!   replications;
//! * a covariance-factorization recursion, O(n²), used as fallback when the
//!   embedding produces a genuinely negative eigenvalue, and as an
//!   independent cross-check in tests.

use std::sync::Arc;

use rand::RngExt;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::grid::{GridKind, TimeGrid};

/// Autocovariance of fractional Gaussian noise at integer lag:
/// gamma(k) = (delta^{2H}/2)(|k+1|^{2H} - 2|k|^{2H} + |k-1|^{2H}).
pub fn fgn_autocovariance(hurst: f64, lag: u64, delta: f64) -> f64 {
    assert!(hurst > 0.0 && hurst < 1.0, "hurst must lie in (0, 1)");
    assert!(delta > 0.0, "spacing must be positive");
    let k = lag as f64;
    let two_h = 2.0 * hurst;
    0.5 * delta.powf(two_h) * ((k + 1.0).powf(two_h) - 2.0 * k.powf(two_h) + (k - 1.0).abs().powf(two_h))
}

/// Uniform-grid fractional Brownian motion request.
#[derive(Debug, Clone, PartialEq)]
pub struct FbmSpec {
    pub hurst: f64,
    pub grid: TimeGrid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FbmMethod {
    /// Circulant spectral embedding.
    Spectral,
    /// Covariance-factorization recursion.
    Recursive,
}

enum Backend {
    Spectral {
        /// sqrt of circulant eigenvalues, length 2n.
        root_eigenvalues: Vec<f64>,
        fft: Arc<dyn Fft<f64>>,
    },
    Recursive {
        /// Row k holds the regression coefficients of increment k on the k
        /// previous increments, plus the innovation standard deviation.
        coeffs: Vec<Vec<f64>>,
        innovation_sd: Vec<f64>,
    },
}

/// Reusable sampler for fBm paths on a fixed uniform grid. Construction does
/// the covariance work once; `sample` is cheap per replication.
pub struct FbmSampler {
    hurst: f64,
    n: usize,
    backend: Backend,
}

impl FbmSampler {
    pub fn new(hurst: f64, n: usize, delta: f64) -> Result<Self> {
        Self::build(hurst, n, delta, false)
    }

    /// Skip the spectral route; used to cross-check the two generators.
    pub fn new_recursive(hurst: f64, n: usize, delta: f64) -> Result<Self> {
        Self::build(hurst, n, delta, true)
    }

    fn build(hurst: f64, n: usize, delta: f64, force_recursive: bool) -> Result<Self> {
        if !(0.0 < hurst && hurst < 1.0) {
            return Err(Error::invalid_param("hurst must lie in (0, 1)"));
        }
        if n == 0 {
            return Err(Error::InvalidGrid("need at least one grid step".into()));
        }
        if delta <= 0.0 {
            return Err(Error::InvalidGrid("spacing must be positive".into()));
        }
        if !force_recursive {
            if let Some(root_eigenvalues) = circulant_root_eigenvalues(hurst, n, delta) {
                let fft = FftPlanner::new().plan_fft_forward(2 * n);
                return Ok(FbmSampler { hurst, n, backend: Backend::Spectral { root_eigenvalues, fft } });
            }
        }
        let (coeffs, innovation_sd) = levinson_factorization(hurst, n, delta)?;
        Ok(FbmSampler { hurst, n, backend: Backend::Recursive { coeffs, innovation_sd } })
    }

    pub fn for_spec(spec: &FbmSpec) -> Result<Self> {
        let delta = spec.grid.delta().ok_or_else(|| {
            Error::InvalidGrid("fractional Brownian paths need a uniform grid".into())
        })?;
        FbmSampler::new(spec.hurst, spec.grid.len(), delta)
    }

    pub fn method(&self) -> FbmMethod {
        match self.backend {
            Backend::Spectral { .. } => FbmMethod::Spectral,
            Backend::Recursive { .. } => FbmMethod::Recursive,
        }
    }

    pub fn hurst(&self) -> f64 {
        self.hurst
    }

    /// One fGn vector (the path increments), length n.
    pub fn sample_increments(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        match &self.backend {
            Backend::Spectral { root_eigenvalues, fft } => {
                let m = 2 * self.n;
                let mut z = vec![Complex::new(0.0, 0.0); m];
                // Hermitian-symmetric Gaussian spectrum, drawn in a fixed
                // order: one real normal at 0 and m/2, a complex pair for
                // every bin in between.
                z[0] = Complex::new(rng.sample::<f64, _>(StandardNormal), 0.0);
                let half = m / 2;
                for k in 1..half {
                    let re: f64 = rng.sample(StandardNormal);
                    let im: f64 = rng.sample(StandardNormal);
                    let w = Complex::new(re, im) * std::f64::consts::FRAC_1_SQRT_2;
                    z[k] = w;
                    z[m - k] = w.conj();
                }
                z[half] = Complex::new(rng.sample::<f64, _>(StandardNormal), 0.0);
                for (zk, r) in z.iter_mut().zip(root_eigenvalues) {
                    *zk *= *r;
                }
                fft.process(&mut z);
                let scale = 1.0 / (m as f64).sqrt();
                z[..self.n].iter().map(|c| c.re * scale).collect()
            }
            Backend::Recursive { coeffs, innovation_sd } => {
                let mut x = Vec::with_capacity(self.n);
                for k in 0..self.n {
                    let mut mean = 0.0;
                    for (j, phi) in coeffs[k].iter().enumerate() {
                        mean += phi * x[k - 1 - j];
                    }
                    let z: f64 = rng.sample(StandardNormal);
                    x.push(mean + innovation_sd[k] * z);
                }
                x
            }
        }
    }

    /// One fBm path at grid times delta..n*delta (cumulative increments).
    pub fn sample(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let mut path = self.sample_increments(rng);
        let mut acc = 0.0;
        for v in &mut path {
            acc += *v;
            *v = acc;
        }
        path
    }
}

/// One-shot convenience over [`FbmSampler`]; returns the path at grid times
/// together with the generation method that actually ran.
pub fn generate_fbm(spec: &FbmSpec, rng: &mut ChaCha8Rng) -> Result<(Vec<f64>, FbmMethod)> {
    if !matches!(spec.grid.kind(), GridKind::Arithmetic { .. }) {
        return Err(Error::InvalidGrid("fractional Brownian paths need a uniform grid".into()));
    }
    let sampler = FbmSampler::for_spec(spec)?;
    let method = sampler.method();
    Ok((sampler.sample(rng), method))
}

/// Eigenvalues of the 2n-circulant embedding of the fGn covariance, as square
/// roots; None when one of them is negative beyond rounding noise.
fn circulant_root_eigenvalues(hurst: f64, n: usize, delta: f64) -> Option<Vec<f64>> {
    let m = 2 * n;
    let mut row: Vec<Complex<f64>> = Vec::with_capacity(m);
    for k in 0..=n {
        row.push(Complex::new(fgn_autocovariance(hurst, k as u64, delta), 0.0));
    }
    for k in (1..n).rev() {
        row.push(Complex::new(fgn_autocovariance(hurst, k as u64, delta), 0.0));
    }
    FftPlanner::new().plan_fft_forward(m).process(&mut row);
    let max = row.iter().map(|c| c.re).fold(0.0f64, f64::max);
    let floor = -1e-12 * max.max(1.0);
    let mut roots = Vec::with_capacity(m);
    for c in row {
        if c.re < floor {
            return None;
        }
        roots.push(c.re.max(0.0).sqrt());
    }
    Some(roots)
}

/// Levinson recursion on the fGn covariance: per-step regression coefficients
/// and innovation standard deviations for sequential generation.
#[allow(clippy::type_complexity)]
fn levinson_factorization(hurst: f64, n: usize, delta: f64) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    let gamma: Vec<f64> = (0..n as u64).map(|k| fgn_autocovariance(hurst, k, delta)).collect();
    let mut coeffs: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut innovation_sd = Vec::with_capacity(n);
    coeffs.push(Vec::new());
    innovation_sd.push(gamma[0].sqrt());
    let mut phi_prev: Vec<f64> = Vec::new();
    let mut v = gamma[0];
    for k in 1..n {
        let mut acc = gamma[k];
        for (j, p) in phi_prev.iter().enumerate() {
            acc -= p * gamma[k - 1 - j];
        }
        let reflection = acc / v;
        // phi[j] multiplies the (j+1)-th most recent value
        let mut phi = Vec::with_capacity(k);
        for j in 0..k - 1 {
            phi.push(phi_prev[j] - reflection * phi_prev[k - 2 - j]);
        }
        phi.push(reflection);
        v *= 1.0 - reflection * reflection;
        if v <= 0.0 {
            return Err(Error::invalid_param(
                "covariance factorization lost positive definiteness",
            ));
        }
        coeffs.push(phi.clone());
        innovation_sd.push(v.sqrt());
        phi_prev = phi;
    }
    Ok((coeffs, innovation_sd))
}
