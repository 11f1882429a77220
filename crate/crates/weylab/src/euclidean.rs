//! Imaginary-time side: analytic Schwinger functions, the Gaussian process
//! ensemble that realizes them, Monte Carlo moment estimators, and the
//! exponential correlations of the positive case with the charge
//! superselection rule.
//!
//! Per-mode processes follow the ledger (C13): a stationary
//! Ornstein-Uhlenbeck pair per transverse polarization, a two-sided Brownian
//! bridge-free path pinned at τ = 0 for the gradient sector, and one complex
//! draw z = z₁ + i z₂ per mode. Sampling is deterministic per (seed, sample
//! index) through counter-based substreams, so estimates are independent of
//! thread count and delivery order.

use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::ModeGrid;
use crate::testfn::{divergence, ScalarFunction, VectorFunction, ZERO_TOL};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[derive(Debug, Clone)]
pub struct EuclideanConfig {
    pub grid: Arc<ModeGrid>,
    pub taus: Vec<f64>,
    pub samples: usize,
    pub seed: u64,
    pub batches: usize,
}

impl EuclideanConfig {
    pub fn new(grid: Arc<ModeGrid>, mut taus: Vec<f64>, samples: usize, seed: u64) -> Result<Self> {
        if taus.is_empty() {
            return Err(Error::Invalid("need at least one time".into()));
        }
        taus.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for w in taus.windows(2) {
            if w[0] == w[1] {
                return Err(Error::Invalid("times must be distinct".into()));
            }
        }
        if samples == 0 {
            return Err(Error::Invalid("need at least one sample".into()));
        }
        Ok(EuclideanConfig { grid, taus, samples, seed, batches: 20 })
    }

    pub fn with_batches(mut self, batches: usize) -> Result<Self> {
        if batches == 0 || batches > self.samples {
            return Err(Error::Invalid("batch count must be in 1..=samples".into()));
        }
        self.batches = batches;
        Ok(self)
    }

    fn tau_index(&self, tau: f64) -> Result<usize> {
        self.taus
            .iter()
            .position(|&t| (t - tau).abs() <= 1e-12)
            .ok_or_else(|| Error::Invalid(format!("time {tau} is not on the configured grid")))
    }
}

/// Two real orthonormal vectors perpendicular to k, the same for ±k.
fn polarization_basis(k: [f64; 3]) -> ([f64; 3], [f64; 3]) {
    let norm = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]).sqrt();
    let khat = [k[0] / norm, k[1] / norm, k[2] / norm];
    let axis = {
        let abs = [khat[0].abs(), khat[1].abs(), khat[2].abs()];
        if abs[0] <= abs[1] && abs[0] <= abs[2] {
            [1.0, 0.0, 0.0]
        } else if abs[1] <= abs[2] {
            [0.0, 1.0, 0.0]
        } else {
            [0.0, 0.0, 1.0]
        }
    };
    let mut e1 = [
        khat[1] * axis[2] - khat[2] * axis[1],
        khat[2] * axis[0] - khat[0] * axis[2],
        khat[0] * axis[1] - khat[1] * axis[0],
    ];
    let n1 = (e1[0] * e1[0] + e1[1] * e1[1] + e1[2] * e1[2]).sqrt();
    for v in &mut e1 {
        *v /= n1;
    }
    let e2 = [
        khat[1] * e1[2] - khat[2] * e1[1],
        khat[2] * e1[0] - khat[0] * e1[2],
        khat[0] * e1[1] - khat[1] * e1[0],
    ];
    (e1, e2)
}

/// One Euclidean configuration: per representative mode, two transverse
/// OU paths, one Brownian path and one complex draw, all reality-linked to
/// the partner mode by conjugation.
#[derive(Debug, Clone)]
pub struct FieldSample {
    grid: Arc<ModeGrid>,
    taus: Vec<f64>,
    half: Vec<usize>,
    tr: Vec<[Vec<Complex64>; 2]>,
    xi: Vec<Vec<Complex64>>,
    z1: Vec<Complex64>,
    z2: Vec<Complex64>,
}

fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index.wrapping_add(1));
    rng
}

fn draw(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// Stationary complex OU path with per-component unit variance and rate ω,
/// scaled so that E[a(τ) conj(a(σ))] = e^{−ω|τ−σ|}/(2ω).
fn ou_path(taus: &[f64], omega: f64, rng: &mut ChaCha8Rng) -> Vec<Complex64> {
    let scale = 1.0 / (2.0 * omega.sqrt());
    let mut out = Vec::with_capacity(taus.len());
    let mut x = draw(rng);
    let mut y = draw(rng);
    out.push(c(x, y) * scale);
    for w in taus.windows(2) {
        let rho = (-omega * (w[1] - w[0])).exp();
        let jitter = (1.0 - rho * rho).sqrt();
        x = rho * x + jitter * draw(rng);
        y = rho * y + jitter * draw(rng);
        out.push(c(x, y) * scale);
    }
    out
}

/// Two-sided Brownian path pinned at ξ(0) = 0 with independent branches,
/// scaled so that E[ξ(τ) conj(ξ(σ))] = (−|τ−σ|+|τ|+|σ|)/(2k²).
fn brownian_path(taus: &[f64], kabs: f64, rng: &mut ChaCha8Rng) -> Vec<Complex64> {
    let scale = 1.0 / (std::f64::consts::SQRT_2 * kabs);
    let mut out = vec![Complex64::ZERO; taus.len()];
    // positive branch, ascending
    let mut val = Complex64::ZERO;
    let mut prev = 0.0;
    for (j, &t) in taus.iter().enumerate() {
        if t <= 0.0 {
            continue;
        }
        let step = (t - prev).sqrt();
        val += c(draw(rng), draw(rng)) * step;
        out[j] = val * scale;
        prev = t;
    }
    // negative branch, descending from 0
    let mut val = Complex64::ZERO;
    let mut prev = 0.0;
    for (j, &t) in taus.iter().enumerate().rev() {
        if t >= 0.0 {
            continue;
        }
        let step = (prev - t).sqrt();
        val += c(draw(rng), draw(rng)) * step;
        out[j] = val * scale;
        prev = t;
    }
    out
}

impl FieldSample {
    pub fn generate(config: &EuclideanConfig, index: u64) -> FieldSample {
        let grid = config.grid.clone();
        let half: Vec<usize> = grid.half_modes().collect();
        let mut rng = sample_rng(config.seed, index);
        let mut tr = Vec::with_capacity(half.len());
        let mut xi = Vec::with_capacity(half.len());
        let mut z1 = Vec::with_capacity(half.len());
        let mut z2 = Vec::with_capacity(half.len());
        for &i in &half {
            let omega = grid.omega(i);
            let zscale = 1.0 / (2.0 * std::f64::consts::SQRT_2 * omega);
            z1.push(c(draw(&mut rng), draw(&mut rng)) * zscale);
            z2.push(c(draw(&mut rng), draw(&mut rng)) * zscale);
            xi.push(brownian_path(&config.taus, omega, &mut rng));
            tr.push([
                ou_path(&config.taus, omega, &mut rng),
                ou_path(&config.taus, omega, &mut rng),
            ]);
        }
        FieldSample { grid, taus: config.taus.clone(), half, tr, xi, z1, z2 }
    }

    pub fn taus(&self) -> &[f64] {
        &self.taus
    }

    /// Raw transverse mode value for the representative-mode list position
    /// `h`, polarization `lam`.
    pub fn tr_mode(&self, h: usize, lam: usize, tau_index: usize) -> Complex64 {
        self.tr[h][lam][tau_index]
    }

    pub fn xi_mode(&self, h: usize, tau_index: usize) -> Complex64 {
        self.xi[h][tau_index]
    }

    pub fn z_mode(&self, h: usize) -> Complex64 {
        self.z1[h] + c(0.0, 1.0) * self.z2[h]
    }

    pub fn half_modes(&self) -> &[usize] {
        &self.half
    }

    /// Smeared transverse field A^tr(f, τ): real.
    pub fn transverse(&self, f: &VectorFunction, tau_index: usize) -> f64 {
        let vol = self.grid.volume();
        let mut acc = Complex64::ZERO;
        for (h, &i) in self.half.iter().enumerate() {
            let k = self.grid.k(i);
            let (e1, e2) = polarization_basis(k);
            let fv = f.coeff(i);
            for (lam, e) in [e1, e2].iter().enumerate() {
                let cf = fv[0].conj() * e[0] + fv[1].conj() * e[1] + fv[2].conj() * e[2];
                acc += cf * self.tr[h][lam][tau_index];
            }
        }
        vol.sqrt() * 2.0 * acc.re
    }

    /// Smeared Brownian sector ξ(h, τ) for a real scalar h: real.
    pub fn xi_smeared(&self, hfun: &ScalarFunction, tau_index: usize) -> f64 {
        let mut acc = Complex64::ZERO;
        for (h, &i) in self.half.iter().enumerate() {
            acc += hfun.coeff(i).conj() * self.xi[h][tau_index];
        }
        self.grid.volume().sqrt() * 2.0 * acc.re
    }

    /// Smeared complex draws: returns (z(h), z̄(h)).
    pub fn z_smeared(&self, hfun: &ScalarFunction) -> (Complex64, Complex64) {
        let mut a1 = Complex64::ZERO;
        let mut a2 = Complex64::ZERO;
        for (h, &i) in self.half.iter().enumerate() {
            a1 += hfun.coeff(i).conj() * self.z1[h];
            a2 += hfun.coeff(i).conj() * self.z2[h];
        }
        let s = self.grid.volume().sqrt();
        let z1 = s * 2.0 * a1.re;
        let z2 = s * 2.0 * a2.re;
        (c(z1, z2), c(z1, -z2))
    }

    /// Composite field Ã(f, τ) = A^tr(f, τ) − [ξ(div f, τ) + z(div f) −
    /// z̄(div f)|τ|]; complex through the z sector.
    pub fn composite(&self, f: &VectorFunction, tau_index: usize) -> Complex64 {
        let h = divergence(f);
        let tau = self.taus[tau_index];
        let (z, zbar) = self.z_smeared(&h);
        let grad_part = c(self.xi_smeared(&h, tau_index), 0.0) + z - zbar * tau.abs();
        c(self.transverse(f, tau_index), 0.0) - grad_part
    }

    /// Exponential functional exp(i[A^tr(f,τ) + ξ(−div f, τ)]) of the
    /// positive-case representation.
    pub fn exp_factor(&self, f: &VectorFunction, tau_index: usize) -> Complex64 {
        let h = divergence(f);
        let arg = self.transverse(f, tau_index) - self.xi_smeared(&h, tau_index);
        Complex64::from_polar(1.0, arg)
    }
}

pub fn sample_ensemble<'a>(
    config: &'a EuclideanConfig,
) -> impl Iterator<Item = FieldSample> + 'a {
    (0..config.samples as u64).map(move |i| FieldSample::generate(config, i))
}

// ---------------------------------------------------------------------------
// Analytic kernels
// ---------------------------------------------------------------------------

fn transverse_kernel(f: &VectorFunction, g: &VectorFunction, dtau: f64) -> f64 {
    let grid = f.grid();
    let vol = grid.volume();
    let mut acc = Complex64::ZERO;
    for i in 0..grid.len() {
        let k = grid.k(i);
        let k2 = grid.k2(i);
        let om = k2.sqrt();
        let fv = f.coeff(i);
        let gv = g.coeff(i);
        let kf = fv[0].conj() * k[0] + fv[1].conj() * k[1] + fv[2].conj() * k[2];
        let kg = gv[0] * k[0] + gv[1] * k[1] + gv[2] * k[2];
        let dot = fv[0].conj() * gv[0] + fv[1].conj() * gv[1] + fv[2].conj() * gv[2];
        let tr = dot - kf * kg / k2;
        acc += tr * ((-om * dtau.abs()).exp() / (2.0 * om));
    }
    (vol * acc).re
}

/// ½ L³ Σ (k·conj f̂)(k·ĝ)/k² · w(τ,σ) for the Brownian weight w; with
/// w = −|τ−σ| this is the longitudinal Schwinger kernel (note the sign).
fn gradient_kernel(f: &VectorFunction, g: &VectorFunction, weight: f64) -> f64 {
    let grid = f.grid();
    let vol = grid.volume();
    let mut acc = Complex64::ZERO;
    for i in 0..grid.len() {
        let k = grid.k(i);
        let k2 = grid.k2(i);
        let fv = f.coeff(i);
        let gv = g.coeff(i);
        let kf = fv[0].conj() * k[0] + fv[1].conj() * k[1] + fv[2].conj() * k[2];
        let kg = gv[0] * k[0] + gv[1] * k[1] + gv[2] * k[2];
        acc += kf * kg / k2;
    }
    0.5 * weight * (vol * acc).re
}

fn check_zero_mean(f: &VectorFunction) -> Result<()> {
    if !f.has_zero_mean() {
        return Err(Error::MeanModeUnsupported(
            "euclidean smearings must have zero mean".into(),
        ));
    }
    Ok(())
}

/// Euclidean two-point function S(f,τ₁; g,τ₂): transverse heat-kernel part
/// minus the |Δτ|-linear gradient part.
pub fn schwinger_two_point(
    f: &VectorFunction,
    tau1: f64,
    g: &VectorFunction,
    tau2: f64,
) -> Result<f64> {
    check_zero_mean(f)?;
    check_zero_mean(g)?;
    let dtau = tau2 - tau1;
    Ok(transverse_kernel(f, g, dtau) + gradient_kernel(f, g, -dtau.abs()))
}

/// The Schwinger kernel continued back to real time by the symbolic
/// substitution |Δτ| ↦ −i·y₀ per mode: e^{−ω|Δτ|} becomes e^{+iωy₀} and the
/// linear term −|Δτ|/2 becomes +i y₀/2.
pub fn schwinger_continued(
    f: &VectorFunction,
    g: &VectorFunction,
    y0: f64,
) -> Result<Complex64> {
    check_zero_mean(f)?;
    check_zero_mean(g)?;
    let grid = f.grid();
    let vol = grid.volume();
    let mut acc = Complex64::ZERO;
    for i in 0..grid.len() {
        let k = grid.k(i);
        let k2 = grid.k2(i);
        let om = k2.sqrt();
        let fv = f.coeff(i);
        let gv = g.coeff(i);
        let kf = fv[0].conj() * k[0] + fv[1].conj() * k[1] + fv[2].conj() * k[2];
        let kg = gv[0] * k[0] + gv[1] * k[1] + gv[2] * k[2];
        let dot = fv[0].conj() * gv[0] + fv[1].conj() * gv[1] + fv[2].conj() * gv[2];
        let tr = dot - kf * kg / k2;
        acc += tr * Complex64::from_polar(1.0, om * y0) / (2.0 * om);
        acc += kf * kg / k2 * c(0.0, 0.5 * y0);
    }
    Ok(vol * acc)
}

/// Covariance of the ξ sector smeared with div f: ½L³Σ(k·f̂)(k·ĝ)/k²·W(τ,σ),
/// W(τ,σ) = −|τ−σ|+|τ|+|σ|.
pub fn xi_covariance(f: &VectorFunction, tau: f64, g: &VectorFunction, sigma: f64) -> f64 {
    let w = -(tau - sigma).abs() + tau.abs() + sigma.abs();
    gradient_kernel(f, g, w)
}

/// Gaussian expectation of Π_j exp(i[A^tr(f_j, τ_j) + ξ(−div f_j, τ_j)]):
/// exp(−½ Var Σ_j X_j) from the OU and Brownian kernels. This is the
/// measure-side value before any charge rule is applied.
pub fn gaussian_exp_expectation(factors: &[(VectorFunction, f64)]) -> Result<f64> {
    let mut var = 0.0;
    for (fj, tj) in factors {
        check_zero_mean(fj)?;
        for (fl, tl) in factors {
            var += transverse_kernel(fj, fl, tl - tj) + xi_covariance(fj, *tj, fl, *tl);
        }
    }
    Ok((-0.5 * var).exp())
}

/// Euclidean Gaussian value of Π_j exp(i Ã(f_j, τ_j)) in the indefinite case:
/// exp(−½ ΣΣ S(f_j,τ_j; f_l,τ_l)), a formal Gaussian of the full kernel.
pub fn indefinite_exp_expectation(factors: &[(VectorFunction, f64)]) -> Result<f64> {
    let mut var = 0.0;
    for (fj, tj) in factors {
        for (fl, tl) in factors {
            var += schwinger_two_point(fj, *tj, fl, *tl)?;
        }
    }
    Ok((-0.5 * var).exp())
}

/// Whether Σ_j div f_j = 0 as a function (per mode, against the list scale).
pub fn total_charge_vanishes(factors: &[(VectorFunction, f64)]) -> bool {
    if factors.is_empty() {
        return true;
    }
    let grid = factors[0].0.grid().clone();
    let mut total = ScalarFunction::zero(&grid);
    let mut scale: f64 = 0.0;
    for (f, _) in factors {
        let d = divergence(f);
        scale = scale.max(d.max_coeff());
        total = total.add(&d);
    }
    total.max_coeff() <= ZERO_TOL * scale.max(1.0)
}

/// Exponential correlation of the positive case: the ergodic mean enforces
/// charge superselection exactly (value 0 unless Σ div f_j = 0), and on the
/// charge-zero sector the value is the Gaussian expectation of the
/// transverse+ξ exponentials, which coincides with the indefinite-case
/// correlation.
pub fn positive_exponential_correlation(factors: &[(VectorFunction, f64)]) -> Result<Complex64> {
    for (f, _) in factors {
        check_zero_mean(f)?;
    }
    if !total_charge_vanishes(factors) {
        return Ok(Complex64::ZERO);
    }
    Ok(c(gaussian_exp_expectation(factors)?, 0.0))
}

// ---------------------------------------------------------------------------
// Monte Carlo
// ---------------------------------------------------------------------------

/// Batched, order-fixed Monte Carlo mean of a per-sample functional. The
/// partition into batches and the combination order are independent of the
/// executing thread pool, so results are bitwise reproducible.
fn batched_mc<F>(config: &EuclideanConfig, eval: F) -> (Complex64, f64)
where
    F: Fn(&FieldSample) -> Complex64 + Sync,
{
    let n = config.samples;
    let b = config.batches.min(n);
    let base = n / b;
    let extra = n % b;
    let ranges: Vec<(u64, u64)> = (0..b)
        .map(|j| {
            let start = j * base + j.min(extra);
            let len = base + usize::from(j < extra);
            (start as u64, (start + len) as u64)
        })
        .collect();
    let batch_sums: Vec<(Complex64, usize)> = ranges
        .par_iter()
        .map(|&(start, end)| {
            let mut acc = Complex64::ZERO;
            for idx in start..end {
                acc += eval(&FieldSample::generate(config, idx));
            }
            (acc, (end - start) as usize)
        })
        .collect();
    let mut total = Complex64::ZERO;
    for (s, _) in &batch_sums {
        total += s;
    }
    let estimate = total / n as f64;
    let means: Vec<Complex64> = batch_sums
        .iter()
        .map(|(s, cnt)| s / *cnt as f64)
        .collect();
    let mut mu = Complex64::ZERO;
    for m in &means {
        mu += m;
    }
    mu /= means.len() as f64;
    let mut var = 0.0;
    for m in &means {
        var += (m - mu).norm_sqr();
    }
    let stderr = if means.len() > 1 {
        (var / (means.len() as f64 * (means.len() - 1) as f64)).sqrt()
    } else {
        f64::INFINITY
    };
    (estimate, stderr)
}

/// Monte Carlo estimate of ⟨Ã(f₁,τ₁)···Ã(f_n,τ_n)⟩ with batch-means error.
pub fn mc_moment(
    config: &EuclideanConfig,
    labels: &[(VectorFunction, f64)],
) -> Result<(Complex64, f64)> {
    if labels.len() > 8 {
        return Err(Error::Invalid("moment order is capped at 8".into()));
    }
    let resolved: Vec<(VectorFunction, usize)> = labels
        .iter()
        .map(|(f, t)| {
            check_zero_mean(f)?;
            Ok((f.clone(), config.tau_index(*t)?))
        })
        .collect::<Result<_>>()?;
    Ok(batched_mc(config, |sample| {
        let mut prod = c(1.0, 0.0);
        for (f, ti) in &resolved {
            prod *= sample.composite(f, *ti);
        }
        prod
    }))
}

/// Wick value of ⟨Ã(f₁,τ₁)···Ã(f_n,τ_n)⟩ from the analytic Schwinger kernel:
/// the analytic counterpart of `mc_moment`.
pub fn wick_moment(labels: &[(VectorFunction, f64)]) -> Result<f64> {
    fn pairings(items: &[usize], cov: &dyn Fn(usize, usize) -> f64) -> f64 {
        match items.split_first() {
            None => 1.0,
            Some((&first, rest)) => {
                let mut total = 0.0;
                for (pos, &j) in rest.iter().enumerate() {
                    let mut remaining = rest.to_vec();
                    remaining.remove(pos);
                    total += cov(first, j) * pairings(&remaining, cov);
                }
                total
            }
        }
    }
    if labels.len() % 2 == 1 {
        return Ok(0.0);
    }
    let mut cov = vec![vec![0.0; labels.len()]; labels.len()];
    for i in 0..labels.len() {
        for j in 0..labels.len() {
            cov[i][j] = schwinger_two_point(&labels[i].0, labels[i].1, &labels[j].0, labels[j].1)?;
        }
    }
    let idx: Vec<usize> = (0..labels.len()).collect();
    Ok(pairings(&idx, &|i, j| cov[i][j]))
}

/// Monte Carlo cross-estimate of the positive-case exponential correlation
/// on the charge-zero sector.
pub fn positive_exp_mc(
    config: &EuclideanConfig,
    factors: &[(VectorFunction, f64)],
) -> Result<(Complex64, f64)> {
    let resolved: Vec<(VectorFunction, usize)> = factors
        .iter()
        .map(|(f, t)| {
            check_zero_mean(f)?;
            Ok((f.clone(), config.tau_index(*t)?))
        })
        .collect::<Result<_>>()?;
    Ok(batched_mc(config, |sample| {
        let mut prod = c(1.0, 0.0);
        for (f, ti) in &resolved {
            prod *= sample.exp_factor(f, *ti);
        }
        prod
    }))
}
