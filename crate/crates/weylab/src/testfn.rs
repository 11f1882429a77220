//! Smearing functions on the mode grid, stored as Fourier coefficients plus
//! a separate mean sector, together with the differential operators and
//! inner products every other module is built from.
//!
//! Reality invariant: f̂(-k) = conj(f̂(k)) and the mean is exactly real, so
//! every stored function is a real-valued function on the torus. All
//! operators below preserve this invariant.

use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::ModeGrid;

/// Tolerance for "exactly zero" coefficient tests, relative to the largest
/// coefficient magnitude of the function involved.
pub const ZERO_TOL: f64 = 1e-12;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Real scalar function: coefficients over the dynamical modes plus a real
/// mean value (L⁻³ ∫ f).
#[derive(Debug, Clone)]
pub struct ScalarFunction {
    grid: Arc<ModeGrid>,
    coeffs: Vec<Complex64>,
    mean: f64,
}

/// Real vector function: one complex 3-vector per dynamical mode plus a
/// real mean 3-vector.
#[derive(Debug, Clone)]
pub struct VectorFunction {
    grid: Arc<ModeGrid>,
    coeffs: Vec<[Complex64; 3]>,
    mean: [f64; 3],
}

impl ScalarFunction {
    pub fn zero(grid: &Arc<ModeGrid>) -> Self {
        ScalarFunction {
            grid: grid.clone(),
            coeffs: vec![Complex64::ZERO; grid.len()],
            mean: 0.0,
        }
    }

    pub fn constant(grid: &Arc<ModeGrid>, mean: f64) -> Self {
        let mut f = Self::zero(grid);
        f.mean = mean;
        f
    }

    /// Build from raw parts, enforcing the reality invariant.
    pub fn from_parts(grid: &Arc<ModeGrid>, coeffs: Vec<Complex64>, mean: f64) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::Invalid("coefficient vector length != mode count".into()));
        }
        let f = ScalarFunction { grid: grid.clone(), coeffs, mean };
        f.check_reality()?;
        Ok(f)
    }

    fn check_reality(&self) -> Result<()> {
        let scale = self.max_coeff().max(self.mean.abs()).max(1.0);
        for i in 0..self.grid.len() {
            let j = self.grid.conj_index(i);
            if (self.coeffs[i] - self.coeffs[j].conj()).norm() > ZERO_TOL * scale {
                return Err(Error::Invalid("reality invariant violated".into()));
            }
        }
        Ok(())
    }

    /// Set f̂(n) = v and f̂(-n) = conj(v).
    pub fn set_mode_pair(&mut self, n: [i32; 3], v: Complex64) {
        let i = self.grid.mode_index(n).expect("mode outside grid");
        let j = self.grid.conj_index(i);
        self.coeffs[i] = v;
        self.coeffs[j] = v.conj();
    }

    pub fn set_mean(&mut self, m: f64) {
        self.mean = m;
    }

    /// Set a single coefficient. The caller is responsible for keeping the
    /// reality invariant.
    pub fn set_coeff(&mut self, i: usize, v: Complex64) {
        self.coeffs[i] = v;
    }

    pub fn grid(&self) -> &Arc<ModeGrid> {
        &self.grid
    }

    pub fn coeff(&self, i: usize) -> Complex64 {
        self.coeffs[i]
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn max_coeff(&self) -> f64 {
        self.coeffs.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn is_zero(&self) -> bool {
        let scale = self.max_coeff().max(self.mean.abs());
        scale == 0.0 || (self.max_coeff() <= ZERO_TOL && self.mean.abs() <= ZERO_TOL)
    }

    pub fn has_zero_mean(&self) -> bool {
        self.mean.abs() <= ZERO_TOL * self.max_coeff().max(1.0)
    }

    pub fn scaled(&self, s: f64) -> Self {
        ScalarFunction {
            grid: self.grid.clone(),
            coeffs: self.coeffs.iter().map(|z| z * s).collect(),
            mean: self.mean * s,
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert!(self.grid.same_grid(&other.grid), "grid mismatch");
        ScalarFunction {
            grid: self.grid.clone(),
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a + b)
                .collect(),
            mean: self.mean + other.mean,
        }
    }

    /// Coefficient phase e^{-i k·x}: f ↦ f(· - x).
    pub fn translate(&self, x: [f64; 3]) -> Self {
        let mut out = self.clone();
        for i in 0..self.grid.len() {
            let k = self.grid.k(i);
            let ph = -(k[0] * x[0] + k[1] * x[1] + k[2] * x[2]);
            out.coeffs[i] = self.coeffs[i] * Complex64::from_polar(1.0, ph);
        }
        out
    }

    /// Position-space value, used only for quadrature cross-checks.
    pub fn value_at(&self, x: [f64; 3]) -> f64 {
        let mut v = c(self.mean, 0.0);
        for i in 0..self.grid.len() {
            let k = self.grid.k(i);
            let ph = k[0] * x[0] + k[1] * x[1] + k[2] * x[2];
            v += self.coeffs[i] * Complex64::from_polar(1.0, ph);
        }
        debug_assert!(v.im.abs() < 1e-9 * (1.0 + v.re.abs()));
        v.re
    }

    /// Random reality-invariant scalar with coefficients O(1), zero mean.
    pub fn random<R: Rng>(grid: &Arc<ModeGrid>, rng: &mut R) -> Self {
        let mut f = Self::zero(grid);
        let halves: Vec<usize> = grid.half_modes().collect();
        for i in halves {
            let v = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            f.coeffs[i] = v;
            f.coeffs[grid.conj_index(i)] = v.conj();
        }
        f
    }
}

impl VectorFunction {
    pub fn zero(grid: &Arc<ModeGrid>) -> Self {
        VectorFunction {
            grid: grid.clone(),
            coeffs: vec![[Complex64::ZERO; 3]; grid.len()],
            mean: [0.0; 3],
        }
    }

    pub fn constant(grid: &Arc<ModeGrid>, mean: [f64; 3]) -> Self {
        let mut f = Self::zero(grid);
        f.mean = mean;
        f
    }

    pub fn from_parts(
        grid: &Arc<ModeGrid>,
        coeffs: Vec<[Complex64; 3]>,
        mean: [f64; 3],
    ) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::Invalid("coefficient vector length != mode count".into()));
        }
        let f = VectorFunction { grid: grid.clone(), coeffs, mean };
        f.check_reality()?;
        Ok(f)
    }

    fn check_reality(&self) -> Result<()> {
        let scale = self.max_coeff().max(1.0);
        for i in 0..self.grid.len() {
            let j = self.grid.conj_index(i);
            for a in 0..3 {
                if (self.coeffs[i][a] - self.coeffs[j][a].conj()).norm() > ZERO_TOL * scale {
                    return Err(Error::Invalid("reality invariant violated".into()));
                }
            }
        }
        Ok(())
    }

    pub fn set_mode_pair(&mut self, n: [i32; 3], v: [Complex64; 3]) {
        let i = self.grid.mode_index(n).expect("mode outside grid");
        let j = self.grid.conj_index(i);
        self.coeffs[i] = v;
        self.coeffs[j] = [v[0].conj(), v[1].conj(), v[2].conj()];
    }

    pub fn set_mean(&mut self, m: [f64; 3]) {
        self.mean = m;
    }

    /// Set a single coefficient. The caller is responsible for keeping the
    /// reality invariant (set the partner mode to the conjugate).
    pub fn set_coeff(&mut self, i: usize, v: [Complex64; 3]) {
        self.coeffs[i] = v;
    }

    pub fn grid(&self) -> &Arc<ModeGrid> {
        &self.grid
    }

    pub fn coeff(&self, i: usize) -> [Complex64; 3] {
        self.coeffs[i]
    }

    pub fn mean(&self) -> [f64; 3] {
        self.mean
    }

    pub fn mean_norm(&self) -> f64 {
        let m = self.mean;
        (m[0] * m[0] + m[1] * m[1] + m[2] * m[2]).sqrt()
    }

    pub fn max_coeff(&self) -> f64 {
        self.coeffs
            .iter()
            .flat_map(|v| v.iter().map(|z| z.norm()))
            .fold(0.0, f64::max)
    }

    pub fn is_zero(&self) -> bool {
        self.max_coeff() <= ZERO_TOL && self.mean_norm() <= ZERO_TOL
    }

    pub fn has_zero_mean(&self) -> bool {
        self.mean_norm() <= ZERO_TOL * self.max_coeff().max(1.0)
    }

    pub fn scaled(&self, s: f64) -> Self {
        VectorFunction {
            grid: self.grid.clone(),
            coeffs: self
                .coeffs
                .iter()
                .map(|v| [v[0] * s, v[1] * s, v[2] * s])
                .collect(),
            mean: [self.mean[0] * s, self.mean[1] * s, self.mean[2] * s],
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert!(self.grid.same_grid(&other.grid), "grid mismatch");
        VectorFunction {
            grid: self.grid.clone(),
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| [a[0] + b[0], a[1] + b[1], a[2] + b[2]])
                .collect(),
            mean: [
                self.mean[0] + other.mean[0],
                self.mean[1] + other.mean[1],
                self.mean[2] + other.mean[2],
            ],
        }
    }

    pub fn translate(&self, x: [f64; 3]) -> Self {
        let mut out = self.clone();
        for i in 0..self.grid.len() {
            let k = self.grid.k(i);
            let ph = Complex64::from_polar(1.0, -(k[0] * x[0] + k[1] * x[1] + k[2] * x[2]));
            for a in 0..3 {
                out.coeffs[i][a] = self.coeffs[i][a] * ph;
            }
        }
        out
    }

    pub fn value_at(&self, x: [f64; 3]) -> [f64; 3] {
        let mut v = [c(self.mean[0], 0.0), c(self.mean[1], 0.0), c(self.mean[2], 0.0)];
        for i in 0..self.grid.len() {
            let k = self.grid.k(i);
            let ph = Complex64::from_polar(1.0, k[0] * x[0] + k[1] * x[1] + k[2] * x[2]);
            for a in 0..3 {
                v[a] += self.coeffs[i][a] * ph;
            }
        }
        [v[0].re, v[1].re, v[2].re]
    }

    /// Random reality-invariant vector function, zero mean.
    pub fn random<R: Rng>(grid: &Arc<ModeGrid>, rng: &mut R) -> Self {
        let mut f = Self::zero(grid);
        let halves: Vec<usize> = grid.half_modes().collect();
        for i in halves {
            let v = [
                c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
            ];
            f.coeffs[i] = v;
            let j = grid.conj_index(i);
            f.coeffs[j] = [v[0].conj(), v[1].conj(), v[2].conj()];
        }
        f
    }

    /// Random divergence-free vector function (transverse projection of a
    /// random function), zero mean.
    pub fn random_transverse<R: Rng>(grid: &Arc<ModeGrid>, rng: &mut R) -> Self {
        transverse_project(&Self::random(grid, rng))
    }

    /// The unit-norm transverse reference mode: component 1 on the modes
    /// ±e₃ with value 1/√(2L³), so that (u, u) = 1 and |k| = 2π/L.
    pub fn unit_transverse_mode(grid: &Arc<ModeGrid>) -> Self {
        let mut u = Self::zero(grid);
        let v = 1.0 / (2.0 * grid.volume()).sqrt();
        u.set_mode_pair([0, 0, 1], [c(v, 0.0), Complex64::ZERO, Complex64::ZERO]);
        u
    }
}

// ---------------------------------------------------------------------------
// Differential operators (momentum-space multipliers)
// ---------------------------------------------------------------------------

/// (div f)̂(k) = i k·f̂(k); the mean of the result is 0.
pub fn divergence(f: &VectorFunction) -> ScalarFunction {
    let grid = f.grid().clone();
    let mut out = ScalarFunction::zero(&grid);
    for i in 0..grid.len() {
        let k = grid.k(i);
        let v = f.coeff(i);
        out.coeffs[i] = c(0.0, 1.0) * (v[0] * k[0] + v[1] * k[1] + v[2] * k[2]);
    }
    out
}

/// (∂h)̂(k) = i k ĥ(k); the mean of the result is 0.
pub fn gradient(h: &ScalarFunction) -> VectorFunction {
    let grid = h.grid().clone();
    let mut out = VectorFunction::zero(&grid);
    for i in 0..grid.len() {
        let k = grid.k(i);
        let v = c(0.0, 1.0) * h.coeff(i);
        out.coeffs[i] = [v * k[0], v * k[1], v * k[2]];
    }
    out
}

/// (Δh)̂(k) = -|k|² ĥ(k); the mean of the result is 0.
pub fn laplacian(h: &ScalarFunction) -> ScalarFunction {
    let grid = h.grid().clone();
    let mut out = ScalarFunction::zero(&grid);
    for i in 0..grid.len() {
        out.coeffs[i] = -grid.k2(i) * h.coeff(i);
    }
    out
}

/// Per mode multiply by -1/|k|². Undefined on constants.
pub fn inverse_laplacian(h: &ScalarFunction) -> Result<ScalarFunction> {
    if !h.has_zero_mean() {
        return Err(Error::MeanModeUnsupported(
            "inverse Laplacian is undefined on the mean sector".into(),
        ));
    }
    let grid = h.grid().clone();
    let mut out = ScalarFunction::zero(&grid);
    for i in 0..grid.len() {
        out.coeffs[i] = -h.coeff(i) / grid.k2(i);
    }
    Ok(out)
}

/// P^tr_ij(k) = δ_ij - k_i k_j/|k|² on the dynamical modes; the mean sector
/// is carried along unchanged (it belongs to neither split).
pub fn transverse_project(f: &VectorFunction) -> VectorFunction {
    let grid = f.grid().clone();
    let mut out = VectorFunction::zero(&grid);
    out.mean = f.mean();
    for i in 0..grid.len() {
        let k = grid.k(i);
        let k2 = grid.k2(i);
        let v = f.coeff(i);
        let kv = (v[0] * k[0] + v[1] * k[1] + v[2] * k[2]) / k2;
        out.coeffs[i] = [v[0] - kv * k[0], v[1] - kv * k[1], v[2] - kv * k[2]];
    }
    out
}

/// P^l_ij(k) = k_i k_j/|k|² on the dynamical modes; mean sector dropped.
pub fn longitudinal_project(f: &VectorFunction) -> VectorFunction {
    let grid = f.grid().clone();
    let mut out = VectorFunction::zero(&grid);
    for i in 0..grid.len() {
        let k = grid.k(i);
        let k2 = grid.k2(i);
        let v = f.coeff(i);
        let kv = (v[0] * k[0] + v[1] * k[1] + v[2] * k[2]) / k2;
        out.coeffs[i] = [kv * k[0], kv * k[1], kv * k[2]];
    }
    out
}

// ---------------------------------------------------------------------------
// Inner products
// ---------------------------------------------------------------------------

/// Parseval pairing (f,g) = L³ Σ_k conj(f̂)·ĝ + L³ m_f·m_g. Real for
/// reality-invariant inputs.
pub fn inner_scalar(f: &ScalarFunction, g: &ScalarFunction) -> f64 {
    assert!(f.grid().same_grid(g.grid()), "grid mismatch");
    let mut s = Complex64::ZERO;
    for i in 0..f.grid().len() {
        s += f.coeff(i).conj() * g.coeff(i);
    }
    s += c(f.mean() * g.mean(), 0.0);
    let v = s * f.grid().volume();
    debug_assert!(v.im.abs() <= 1e-9 * (1.0 + v.re.abs()));
    v.re
}

pub fn inner_vector(f: &VectorFunction, g: &VectorFunction) -> f64 {
    assert!(f.grid().same_grid(g.grid()), "grid mismatch");
    let mut s = Complex64::ZERO;
    for i in 0..f.grid().len() {
        let a = f.coeff(i);
        let b = g.coeff(i);
        for d in 0..3 {
            s += a[d].conj() * b[d];
        }
    }
    let mf = f.mean();
    let mg = g.mean();
    s += c(mf[0] * mg[0] + mf[1] * mg[1] + mf[2] * mg[2], 0.0);
    let v = s * f.grid().volume();
    debug_assert!(v.im.abs() <= 1e-9 * (1.0 + v.re.abs()));
    v.re
}

/// ω-weighted pairing (f, ω^p g) with ω(k) = |k|, p ∈ {-1, 0, +1}, defined
/// on the dynamical modes only (the mean sector never enters).
pub fn omega_inner_vector(f: &VectorFunction, g: &VectorFunction, p: i32) -> f64 {
    assert!(f.grid().same_grid(g.grid()), "grid mismatch");
    assert!((-1..=1).contains(&p), "omega power must be in -1..=1");
    let mut s = Complex64::ZERO;
    for i in 0..f.grid().len() {
        let w = f.grid().omega(i).powi(p);
        let a = f.coeff(i);
        let b = g.coeff(i);
        for d in 0..3 {
            s += a[d].conj() * b[d] * w;
        }
    }
    let v = s * f.grid().volume();
    debug_assert!(v.im.abs() <= 1e-9 * (1.0 + v.re.abs()));
    v.re
}

/// Quadrature evaluation of ∫ f·g d³x on the (2N+1)³ collocation lattice;
/// exact for the stored trigonometric degree, used as an independent oracle
/// for the Parseval pairing.
pub fn quadrature_inner_scalar(f: &ScalarFunction, g: &ScalarFunction) -> f64 {
    let grid = f.grid();
    let n = (2 * grid.cutoff() + 1) as usize;
    let h = grid.side() / n as f64;
    let mut s = 0.0;
    for ix in 0..n {
        for iy in 0..n {
            for iz in 0..n {
                let x = [ix as f64 * h, iy as f64 * h, iz as f64 * h];
                s += f.value_at(x) * g.value_at(x);
            }
        }
    }
    s * h * h * h
}

pub fn quadrature_inner_vector(f: &VectorFunction, g: &VectorFunction) -> f64 {
    let grid = f.grid();
    let n = (2 * grid.cutoff() + 1) as usize;
    let h = grid.side() / n as f64;
    let mut s = 0.0;
    for ix in 0..n {
        for iy in 0..n {
            for iz in 0..n {
                let x = [ix as f64 * h, iy as f64 * h, iz as f64 * h];
                let a = f.value_at(x);
                let b = g.value_at(x);
                s += a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
            }
        }
    }
    s * h * h * h
}

// ---------------------------------------------------------------------------
// JSON fixtures
// ---------------------------------------------------------------------------

/// Wire format for both scalar (1 component) and vector (3 components)
/// functions: {L, N, entries: [{n, re, im}], mean}.
#[derive(Debug, Serialize, Deserialize)]
pub struct FunctionJson {
    pub l: f64,
    pub n: i32,
    pub entries: Vec<FunctionEntry>,
    pub mean: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct FunctionEntry {
    pub n: [i32; 3],
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl ScalarFunction {
    pub fn to_json(&self) -> FunctionJson {
        let mut entries = Vec::new();
        for (i, &n) in self.grid.modes().iter().enumerate() {
            let z = self.coeffs[i];
            if z != Complex64::ZERO {
                entries.push(FunctionEntry { n, re: vec![z.re], im: vec![z.im] });
            }
        }
        FunctionJson { l: self.grid.side(), n: self.grid.cutoff(), entries, mean: vec![self.mean] }
    }

    pub fn from_json(j: &FunctionJson) -> Result<Self> {
        if j.mean.len() != 1 {
            return Err(Error::Invalid("scalar function requires a 1-component mean".into()));
        }
        let grid = ModeGrid::new(j.l, j.n)?;
        let mut coeffs = vec![Complex64::ZERO; grid.len()];
        for e in &j.entries {
            let i = grid
                .mode_index(e.n)
                .ok_or_else(|| Error::Invalid(format!("mode {:?} outside grid", e.n)))?;
            if e.re.len() != 1 || e.im.len() != 1 {
                return Err(Error::Invalid("scalar entry must have 1 component".into()));
            }
            coeffs[i] = c(e.re[0], e.im[0]);
        }
        Self::from_parts(&grid, coeffs, j.mean[0])
    }
}

impl VectorFunction {
    pub fn to_json(&self) -> FunctionJson {
        let mut entries = Vec::new();
        for (i, &n) in self.grid.modes().iter().enumerate() {
            let v = self.coeffs[i];
            if v.iter().any(|z| *z != Complex64::ZERO) {
                entries.push(FunctionEntry {
                    n,
                    re: v.iter().map(|z| z.re).collect(),
                    im: v.iter().map(|z| z.im).collect(),
                });
            }
        }
        FunctionJson {
            l: self.grid.side(),
            n: self.grid.cutoff(),
            entries,
            mean: self.mean.to_vec(),
        }
    }

    pub fn from_json(j: &FunctionJson) -> Result<Self> {
        if j.mean.len() != 3 {
            return Err(Error::Invalid("vector function requires a 3-component mean".into()));
        }
        let grid = ModeGrid::new(j.l, j.n)?;
        let mut coeffs = vec![[Complex64::ZERO; 3]; grid.len()];
        for e in &j.entries {
            let i = grid
                .mode_index(e.n)
                .ok_or_else(|| Error::Invalid(format!("mode {:?} outside grid", e.n)))?;
            if e.re.len() != 3 || e.im.len() != 3 {
                return Err(Error::Invalid("vector entry must have 3 components".into()));
            }
            coeffs[i] = [c(e.re[0], e.im[0]), c(e.re[1], e.im[1]), c(e.re[2], e.im[2])];
        }
        Self::from_parts(&grid, coeffs, [j.mean[0], j.mean[1], j.mean[2]])
    }
}
