//! Exact Weyl-element arithmetic: CCR multiplication phases, adjoints, and
//! the automorphism groups acting on them (gauge transformations, constant
//! background shifts, free time evolution).
//!
//! Conventions (see CONVENTIONS.md): the symplectic form is
//! σ((f1,g1),(f2,g2)) = (f1,g2) − (g1,f2) with the full Parseval pairing,
//! and products compose as W1·W2 = e^{−iσ/2} W(f1+f2, g1+g2), which makes
//! [A(f), E(g)] = +i (f,g).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::testfn::{
    divergence, gradient, inner_scalar, inner_vector, FunctionJson, ScalarFunction,
    VectorFunction,
};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// phase · exp i[A(f) + E(g)].
#[derive(Debug, Clone)]
pub struct WeylElement {
    f: VectorFunction,
    g: VectorFunction,
    phase: Complex64,
}

/// One of the automorphism groups of the gauge Weyl algebra.
#[derive(Debug, Clone)]
pub enum Automorphism {
    /// γ^Λ with Λ a periodic scalar: multiplies by e^{−i (Λ, div f)}.
    SmallGauge(ScalarFunction),
    /// Λ = α·x. Only the integrated-by-parts phase e^{+i L³ α·m_f} is used;
    /// α·x itself is not periodic on the torus.
    LargeGauge([f64; 3]),
    /// Constant background electric field: multiplies by e^{+i θ·m_g L³}.
    Theta([f64; 3]),
    /// Free Heisenberg evolution by t, mode by mode.
    TimeShift(f64),
}

pub fn symplectic(
    f1: &VectorFunction,
    g1: &VectorFunction,
    f2: &VectorFunction,
    g2: &VectorFunction,
) -> f64 {
    inner_vector(f1, g2) - inner_vector(g1, f2)
}

impl WeylElement {
    pub fn new(f: VectorFunction, g: VectorFunction) -> Self {
        assert!(f.grid().same_grid(g.grid()), "grid mismatch");
        WeylElement { f, g, phase: c(1.0, 0.0) }
    }

    pub fn with_phase(f: VectorFunction, g: VectorFunction, phase: Complex64) -> Result<Self> {
        if (phase.norm() - 1.0).abs() > 1e-12 {
            return Err(Error::Invalid(format!("phase must be unit modulus, |z| = {}", phase.norm())));
        }
        assert!(f.grid().same_grid(g.grid()), "grid mismatch");
        Ok(WeylElement { f, g, phase })
    }

    pub fn identity(grid: &std::sync::Arc<crate::grid::ModeGrid>) -> Self {
        WeylElement::new(VectorFunction::zero(grid), VectorFunction::zero(grid))
    }

    pub fn a_smearing(&self) -> &VectorFunction {
        &self.f
    }

    pub fn e_smearing(&self) -> &VectorFunction {
        &self.g
    }

    pub fn phase(&self) -> Complex64 {
        self.phase
    }

    pub fn grid(&self) -> &std::sync::Arc<crate::grid::ModeGrid> {
        self.f.grid()
    }

    /// W(f1,g1)·W(f2,g2) = e^{−iσ/2} W(f1+f2, g1+g2), phases composed.
    pub fn multiply(&self, other: &WeylElement) -> WeylElement {
        assert!(self.grid().same_grid(other.grid()), "grid mismatch");
        let sigma = symplectic(&self.f, &self.g, &other.f, &other.g);
        WeylElement {
            f: self.f.add(&other.f),
            g: self.g.add(&other.g),
            phase: self.phase * other.phase * Complex64::from_polar(1.0, -sigma / 2.0),
        }
    }

    /// W(f,g)* = conj(phase)·W(−f,−g); an exact inverse since σ((f,g),(−f,−g)) = 0.
    pub fn adjoint(&self) -> WeylElement {
        WeylElement {
            f: self.f.scaled(-1.0),
            g: self.g.scaled(-1.0),
            phase: self.phase.conj(),
        }
    }

    /// Conjugation V · W · V*, reduced through the Weyl relations to the
    /// phase e^{−i σ(v, w)}.
    pub fn conjugate_by(&self, v: &WeylElement) -> WeylElement {
        v.multiply(self).multiply(&v.adjoint())
    }

    pub fn apply(&self, auto: &Automorphism) -> WeylElement {
        match auto {
            Automorphism::SmallGauge(lambda) => {
                let df = divergence(&self.f);
                let ph = -inner_scalar(lambda, &df);
                WeylElement {
                    f: self.f.clone(),
                    g: self.g.clone(),
                    phase: self.phase * Complex64::from_polar(1.0, ph),
                }
            }
            Automorphism::LargeGauge(alpha) => {
                let m = self.f.mean();
                let ph = self.grid().volume() * (alpha[0] * m[0] + alpha[1] * m[1] + alpha[2] * m[2]);
                WeylElement {
                    f: self.f.clone(),
                    g: self.g.clone(),
                    phase: self.phase * Complex64::from_polar(1.0, ph),
                }
            }
            Automorphism::Theta(theta) => {
                let m = self.g.mean();
                let ph = self.grid().volume() * (theta[0] * m[0] + theta[1] * m[1] + theta[2] * m[2]);
                WeylElement {
                    f: self.f.clone(),
                    g: self.g.clone(),
                    phase: self.phase * Complex64::from_polar(1.0, ph),
                }
            }
            Automorphism::TimeShift(t) => self.time_shift(*t),
        }
    }

    /// Per-mode symplectic flow. Transverse components rotate with angle
    /// ω t; longitudinal components and the mean sector shear (f, g) ↦
    /// (f, g + t f), the ω → 0 limit of the rotation.
    fn time_shift(&self, t: f64) -> WeylElement {
        let grid = self.grid().clone();
        let mut f = VectorFunction::zero(&grid);
        let mut g = VectorFunction::zero(&grid);
        for i in 0..grid.len() {
            let k = grid.k(i);
            let k2 = grid.k2(i);
            let w = grid.omega(i);
            let (cos, sin) = ((w * t).cos(), (w * t).sin());
            let fv = self.f.coeff(i);
            let gv = self.g.coeff(i);
            let kf = (fv[0] * k[0] + fv[1] * k[1] + fv[2] * k[2]) / k2;
            let kg = (gv[0] * k[0] + gv[1] * k[1] + gv[2] * k[2]) / k2;
            let mut fo = [Complex64::ZERO; 3];
            let mut go = [Complex64::ZERO; 3];
            for a in 0..3 {
                let ftr = fv[a] - kf * k[a];
                let gtr = gv[a] - kg * k[a];
                let fl = kf * k[a];
                let gl = kg * k[a];
                fo[a] = ftr * cos - gtr * (w * sin) + fl;
                go[a] = ftr * (sin / w) + gtr * cos + gl + fl * t;
            }
            f.set_coeff(i, fo);
            g.set_coeff(i, go);
        }
        let mf = self.f.mean();
        let mg = self.g.mean();
        f.set_mean(mf);
        g.set_mean([mg[0] + t * mf[0], mg[1] + t * mf[1], mg[2] + t * mf[2]]);
        WeylElement { f, g, phase: self.phase }
    }

    /// Coefficientwise comparison with phase tolerance, both at `tol`
    /// relative to the elements' scale.
    pub fn approx_eq(&self, other: &WeylElement, tol: f64) -> bool {
        let scale = self
            .f
            .max_coeff()
            .max(self.g.max_coeff())
            .max(other.f.max_coeff())
            .max(other.g.max_coeff())
            .max(1.0);
        if (self.phase - other.phase).norm() > tol {
            return false;
        }
        let df = self.f.add(&other.f.scaled(-1.0));
        let dg = self.g.add(&other.g.scaled(-1.0));
        df.max_coeff() <= tol * scale
            && dg.max_coeff() <= tol * scale
            && df.mean_norm() <= tol * scale
            && dg.mean_norm() <= tol * scale
    }

    pub fn to_json(&self) -> WeylJson {
        WeylJson {
            f: self.f.to_json(),
            g: self.g.to_json(),
            phase: [self.phase.re, self.phase.im],
        }
    }

    pub fn from_json(j: &WeylJson) -> Result<Self> {
        let f = VectorFunction::from_json(&j.f)?;
        let g = VectorFunction::from_json(&j.g)?;
        if !f.grid().same_grid(g.grid()) {
            return Err(Error::Invalid("f and g on different grids".into()));
        }
        WeylElement::with_phase(f, g, c(j.phase[0], j.phase[1]))
    }
}

/// Wire format for Weyl elements.
#[derive(Debug, Serialize, Deserialize)]
pub struct WeylJson {
    pub f: FunctionJson,
    pub g: FunctionJson,
    pub phase: [f64; 2],
}

/// Phase acquired by e^{iA(∂h)} under conjugation with e^{iG(g)} = W(0, −∂g),
/// computed through the symplectic form. Equals e^{+i (Δh, g)}.
pub fn gauss_conjugation_phase(h: &ScalarFunction, g: &ScalarFunction) -> Result<Complex64> {
    if !h.has_zero_mean() || !g.has_zero_mean() {
        return Err(Error::MeanModeUnsupported(
            "gauss conjugation requires zero-mean scalars".into(),
        ));
    }
    let grid = h.grid().clone();
    let dh = gradient(h);
    let mdg = gradient(g).scaled(-1.0);
    let zero = VectorFunction::zero(&grid);
    let sigma = symplectic(&zero, &mdg, &dh, &zero);
    Ok(Complex64::from_polar(1.0, -sigma))
}

/// The longitudinal Weyl element V = W(0, ∂Λ) whose conjugation action
/// realizes the small gauge transformation γ^Λ.
pub fn gauge_implementer(lambda: &ScalarFunction) -> Result<WeylElement> {
    if !lambda.has_zero_mean() {
        return Err(Error::MeanModeUnsupported(
            "gauge implementer requires a zero-mean gauge function".into(),
        ));
    }
    let grid = lambda.grid().clone();
    Ok(WeylElement::new(VectorFunction::zero(&grid), gradient(lambda)))
}
