//! Exact representation of time correlations as quasi-polynomials
//! Σ_a c_a e^{+i ω_a t} + b0 + b1·t, plus a sampled fallback for
//! correlations that leave this class.
//!
//! The stored term (ω, c) means c·e^{+iωt}; under the Fourier convention of
//! CONVENTIONS.md its transform is a delta at +ω, so support points are read
//! off the stored frequencies directly. Terms carry the largest |k| of the
//! grid modes that contributed, for the per-mode relativistic check.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Relative tolerance for merging equal frequencies and dropping null
/// coefficients in the exact path.
pub const SUPPORT_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct SeriesTerm {
    pub omega: f64,
    pub coeff: Complex64,
    /// Largest |k| among grid modes contributing to this term, when known.
    pub max_mode_k: Option<f64>,
}

/// Σ terms + b0 + b1·t.
#[derive(Debug, Clone, Default)]
pub struct QuasiPolynomialSeries {
    terms: Vec<SeriesTerm>,
    pub b0: Complex64,
    pub b1: Complex64,
    pub linear_max_mode_k: Option<f64>,
}

impl QuasiPolynomialSeries {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn terms(&self) -> &[SeriesTerm] {
        &self.terms
    }

    /// Add c·e^{+iωt}, merging with an existing term at the same frequency.
    pub fn push(&mut self, omega: f64, coeff: Complex64, mode_k: Option<f64>) {
        for t in &mut self.terms {
            if (t.omega - omega).abs() <= SUPPORT_TOL * (1.0 + omega.abs()) {
                t.coeff += coeff;
                t.max_mode_k = match (t.max_mode_k, mode_k) {
                    (Some(a), Some(b)) => Some(a.max(b)),
                    (a, b) => a.or(b),
                };
                return;
            }
        }
        self.terms.push(SeriesTerm { omega, coeff, max_mode_k: mode_k });
    }

    /// Drop terms whose coefficients are negligible against the series scale
    /// and sort by frequency.
    pub fn cleaned(mut self) -> Self {
        let scale = self
            .terms
            .iter()
            .map(|t| t.coeff.norm())
            .fold(self.b0.norm().max(self.b1.norm()), f64::max)
            .max(1e-300);
        self.terms.retain(|t| t.coeff.norm() > SUPPORT_TOL * scale);
        self.terms
            .sort_by(|a, b| a.omega.partial_cmp(&b.omega).unwrap());
        self
    }

    pub fn eval(&self, t: f64) -> Complex64 {
        let mut v = self.b0 + self.b1 * t;
        for term in &self.terms {
            v += term.coeff * Complex64::from_polar(1.0, term.omega * t);
        }
        v
    }

    /// d/dt: differentiating the time argument of the later label.
    pub fn derivative(&self) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|t| SeriesTerm {
                omega: t.omega,
                coeff: t.coeff * Complex64::new(0.0, t.omega),
                max_mode_k: t.max_mode_k,
            })
            .collect();
        QuasiPolynomialSeries {
            terms,
            b0: self.b1,
            b1: Complex64::ZERO,
            linear_max_mode_k: self.linear_max_mode_k,
        }
    }

    /// d/d(−t): differentiating the time argument of the earlier label.
    pub fn derivative_earlier(&self) -> Self {
        let mut d = self.derivative();
        for t in &mut d.terms {
            t.coeff = -t.coeff;
        }
        d.b0 = -d.b0;
        d
    }

    pub fn scaled(&self, s: Complex64) -> Self {
        QuasiPolynomialSeries {
            terms: self
                .terms
                .iter()
                .map(|t| SeriesTerm { omega: t.omega, coeff: t.coeff * s, max_mode_k: t.max_mode_k })
                .collect(),
            b0: self.b0 * s,
            b1: self.b1 * s,
            linear_max_mode_k: self.linear_max_mode_k,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty() && self.b0 == Complex64::ZERO && self.b1 == Complex64::ZERO
    }
}

/// Uniformly sampled correlation, the fallback for time dependences outside
/// the quasi-polynomial class (Gaussian-in-t envelopes from transverse Weyl
/// pairs).
#[derive(Debug, Clone)]
pub struct SampledSeries {
    pub dt: f64,
    pub values: Vec<Complex64>,
}

impl SampledSeries {
    pub fn eval_index(&self, i: usize) -> Complex64 {
        self.values[i]
    }

    /// Hann-windowed discrete Fourier analysis under the ledger convention
    /// G̃(ω) = Σ_t G(t) e^{−iωt} dt: bin j carries frequency +2πj/(n·dt).
    /// Returns (frequencies, squared masses) over the symmetric band.
    pub fn windowed_spectrum(&self) -> Vec<(f64, f64)> {
        let n = self.values.len();
        let mut out = Vec::with_capacity(n);
        let window: Vec<f64> = (0..n)
            .map(|j| 0.5 - 0.5 * (std::f64::consts::TAU * j as f64 / n as f64).cos())
            .collect();
        for j in 0..n {
            // map bins to the symmetric band (−n/2, n/2]
            let jm = if j <= n / 2 { j as f64 } else { j as f64 - n as f64 };
            let omega = std::f64::consts::TAU * jm / (n as f64 * self.dt);
            let mut acc = Complex64::ZERO;
            for (m, v) in self.values.iter().enumerate() {
                let ph = -omega * (m as f64) * self.dt;
                acc += v * window[m] * Complex64::from_polar(1.0, ph);
            }
            out.push((omega, acc.norm_sqr()));
        }
        out.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        out
    }

    /// Fraction of windowed spectral mass strictly below −ω_res, where
    /// ω_res is the DFT resolution.
    pub fn negative_mass_fraction(&self) -> f64 {
        let spec = self.windowed_spectrum();
        let res = std::f64::consts::TAU / (self.values.len() as f64 * self.dt);
        let total: f64 = spec.iter().map(|(_, m)| m).sum();
        if total == 0.0 {
            return 0.0;
        }
        let neg: f64 = spec
            .iter()
            .filter(|(w, _)| *w < -2.0 * res)
            .map(|(_, m)| m)
            .sum();
        neg / total
    }

    /// Windowed spectral mass within one resolution width of ω, normalized
    /// by the total mass.
    pub fn mass_near(&self, omega: f64) -> f64 {
        let spec = self.windowed_spectrum();
        let res = std::f64::consts::TAU / (self.values.len() as f64 * self.dt);
        let total: f64 = spec.iter().map(|(_, m)| m).sum();
        if total == 0.0 {
            return 0.0;
        }
        spec.iter()
            .filter(|(w, _)| (w - omega).abs() <= 2.0 * res)
            .map(|(_, m)| m)
            .sum::<f64>()
            / total
    }
}

/// Either an exact quasi-polynomial or the sampled fallback.
#[derive(Debug, Clone)]
pub enum CorrelationSeries {
    Exact(QuasiPolynomialSeries),
    Sampled(SampledSeries),
}

/// One point of distributional support: a delta (order 0) or a derivative
/// of a delta (order 1) at ω with the stated weight.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SupportPoint {
    pub omega: f64,
    pub weight: f64,
    pub order: u8,
}

/// Energy-support verdict for a correlation series.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectralVerdict {
    pub support: Vec<SupportPoint>,
    pub energy_positive: bool,
    pub relativistic: bool,
    pub negative_mass_fraction: f64,
}
