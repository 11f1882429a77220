//! The two vacuum functionals on the gauge Weyl algebra and their field
//! correlations.
//!
//! `PositiveNonRegular` is a genuine state: positive, invariant under time
//! evolution and gauge transformations, annihilated by the Gauss operator,
//! but discontinuous in the longitudinal smearings, so only exponentials
//! have expectations. `IndefiniteQuasiFree` is a hermitian linear functional
//! defined by a Källén-Lehmann measure: regular (field correlations exist),
//! not positive, with null longitudinal vectors. `ThetaComposed` composes
//! either with the constant-background automorphism.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::series::QuasiPolynomialSeries;
use crate::testfn::{longitudinal_project, VectorFunction, ZERO_TOL};
use crate::weyl::WeylElement;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Atomic spectral measure dρ = Σ w_a δ(m² − m_a²) plus the contact-term
/// constant Z.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralMeasure {
    atoms: Vec<(f64, f64)>,
    z: f64,
}

impl SpectralMeasure {
    pub fn new(atoms: Vec<(f64, f64)>, z: f64) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::Invalid("spectral measure needs at least one atom".into()));
        }
        for &(m2, w) in &atoms {
            if m2 < 0.0 || !m2.is_finite() {
                return Err(Error::Invalid(format!("squared mass must be >= 0, got {m2}")));
            }
            if w <= 0.0 || !w.is_finite() {
                return Err(Error::Invalid(format!("weight must be > 0, got {w}")));
            }
        }
        for i in 0..atoms.len() {
            for j in i + 1..atoms.len() {
                if (atoms[i].0 - atoms[j].0).abs() <= 1e-12 {
                    return Err(Error::Invalid("atom masses must be distinct".into()));
                }
            }
        }
        if z < 0.0 || !z.is_finite() {
            return Err(Error::Invalid(format!("contact constant must be >= 0, got {z}")));
        }
        Ok(SpectralMeasure { atoms, z })
    }

    /// Single massless atom of unit weight, Z = 0: reproduces the free-field
    /// kernel and the canonical equal-time commutator.
    pub fn free_case() -> Self {
        SpectralMeasure { atoms: vec![(0.0, 1.0)], z: 0.0 }
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn z(&self) -> f64 {
        self.z
    }

    /// Canonical normalization (ledger C11): weights summing to one and no
    /// contact term, which pins the equal-time commutator to i(f,g) for any
    /// atom masses.
    pub fn is_admissible(&self) -> bool {
        let total: f64 = self.atoms.iter().map(|a| a.1).sum();
        (total - 1.0).abs() <= 1e-12 && self.z.abs() <= 1e-12
    }

    pub fn has_massless_atom(&self) -> bool {
        self.atoms.iter().any(|&(m2, _)| m2 <= 1e-14)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Species {
    A,
    E,
}

/// A time-stamped smeared field, A(f, t) or E(f, t).
#[derive(Debug, Clone)]
pub struct FieldLabel {
    pub species: Species,
    pub f: VectorFunction,
    pub t: f64,
}

impl FieldLabel {
    pub fn a(f: VectorFunction, t: f64) -> Self {
        FieldLabel { species: Species::A, f, t }
    }

    pub fn e(f: VectorFunction, t: f64) -> Self {
        FieldLabel { species: Species::E, f, t }
    }
}

/// Which vacuum functional to evaluate.
#[derive(Debug, Clone)]
pub enum StateSpec {
    PositiveNonRegular,
    IndefiniteQuasiFree(SpectralMeasure),
    ThetaComposed { inner: Box<StateSpec>, theta: [f64; 3] },
}

impl StateSpec {
    pub fn free_indefinite() -> Self {
        StateSpec::IndefiniteQuasiFree(SpectralMeasure::free_case())
    }

    /// Compose with β^θ. Nesting beyond depth one is rejected.
    pub fn theta_composed(inner: StateSpec, theta: [f64; 3]) -> Result<Self> {
        if matches!(inner, StateSpec::ThetaComposed { .. }) {
            return Err(Error::Invalid("theta composition nests at most once".into()));
        }
        Ok(StateSpec::ThetaComposed { inner: Box::new(inner), theta })
    }

    fn split_theta(&self) -> (&StateSpec, Option<[f64; 3]>) {
        match self {
            StateSpec::ThetaComposed { inner, theta } => (inner, Some(*theta)),
            other => (other, None),
        }
    }

    fn measure(&self) -> Result<&SpectralMeasure> {
        match self.split_theta().0 {
            StateSpec::IndefiniteQuasiFree(m) => Ok(m),
            _ => Err(Error::UnsupportedState(
                "field correlations exist only in the indefinite quasi-free state".into(),
            )),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            StateSpec::PositiveNonRegular => "positive-nonregular".into(),
            StateSpec::IndefiniteQuasiFree(m) => {
                format!("indefinite(rho={:?}, Z={})", m.atoms(), m.z())
            }
            StateSpec::ThetaComposed { inner, theta } => {
                format!("theta({:?})∘{}", theta, inner.describe())
            }
        }
    }

    /// Expectation of a Weyl element. Total on all elements.
    pub fn eval_weyl(&self, w: &WeylElement) -> Complex64 {
        let (inner, theta) = self.split_theta();
        let character = match theta {
            Some(th) => {
                let mg = w.e_smearing().mean();
                let vol = w.grid().volume();
                Complex64::from_polar(1.0, vol * (th[0] * mg[0] + th[1] * mg[1] + th[2] * mg[2]))
            }
            None => c(1.0, 0.0),
        };
        let base = match inner {
            StateSpec::PositiveNonRegular => eval_positive_nonregular(w),
            StateSpec::IndefiniteQuasiFree(m) => eval_indefinite(m, w),
            StateSpec::ThetaComposed { .. } => unreachable!("nesting depth is validated"),
        };
        base * character
    }

    /// Exact correlation series ⟨X Y⟩ as a quasi-polynomial in t_Y − t_X.
    pub fn two_point_series(&self, x: &FieldLabel, y: &FieldLabel) -> Result<QuasiPolynomialSeries> {
        let measure = self.measure()?;
        for label in [x, y] {
            if !label.f.has_zero_mean() {
                return Err(Error::MeanModeUnsupported(
                    "two-point labels must have zero-mean smearings".into(),
                ));
            }
        }
        let mut s = aa_series(measure, &x.f, &y.f);
        if x.species == Species::E {
            s = s.derivative_earlier();
        }
        if y.species == Species::E {
            s = s.derivative();
        }
        Ok(s)
    }

    /// ⟨X Y⟩ evaluated at the labels' times.
    pub fn two_point(&self, x: &FieldLabel, y: &FieldLabel) -> Result<Complex64> {
        Ok(self.two_point_series(x, y)?.eval(y.t - x.t))
    }

    /// Wick expectation of an ordered product of field labels. Under a
    /// θ-composed state, mean-carrying labels contribute their classical
    /// one-point values; the dynamical parts pair through `two_point`.
    pub fn n_point_wick(&self, labels: &[FieldLabel]) -> Result<Complex64> {
        let (_, theta) = self.split_theta();
        self.measure()?;
        if theta.is_none() {
            for l in labels {
                if !l.f.has_zero_mean() {
                    return Err(Error::MeanModeUnsupported(
                        "mean-carrying labels require a theta-composed state".into(),
                    ));
                }
            }
        }
        let means: Vec<Complex64> = labels.iter().map(|l| c(self.one_point(l), 0.0)).collect();
        let dyn_labels: Vec<FieldLabel> = labels
            .iter()
            .map(|l| {
                let mut f = l.f.clone();
                f.set_mean([0.0; 3]);
                FieldLabel { species: l.species, f, t: l.t }
            })
            .collect();
        let n = labels.len();
        let mut cov = vec![vec![Complex64::ZERO; n]; n];
        for i in 0..n {
            for j in i + 1..n {
                cov[i][j] = self.two_point(&dyn_labels[i], &dyn_labels[j])?;
            }
        }
        let active: Vec<usize> = (0..n).collect();
        Ok(gaussian_moment(&active, &means, &cov))
    }

    /// Classical one-point value: t·θ·m_f·L³ for A labels, θ·m_f·L³ for E
    /// labels, zero without a θ composition.
    pub fn one_point(&self, label: &FieldLabel) -> f64 {
        let (_, theta) = self.split_theta();
        match theta {
            None => 0.0,
            Some(th) => {
                let m = label.f.mean();
                let vol = label.f.grid().volume();
                let shift = vol * (th[0] * m[0] + th[1] * m[1] + th[2] * m[2]);
                match label.species {
                    Species::A => label.t * shift,
                    Species::E => shift,
                }
            }
        }
    }
}

/// Σ over partitions into singletons (weighted by means) and pairs
/// (weighted by ordered covariances).
fn gaussian_moment(active: &[usize], means: &[Complex64], cov: &[Vec<Complex64>]) -> Complex64 {
    match active.split_first() {
        None => c(1.0, 0.0),
        Some((&first, rest)) => {
            let tail: Vec<usize> = rest.to_vec();
            let mut total = means[first] * gaussian_moment(&tail, means, cov);
            for (pos, &j) in tail.iter().enumerate() {
                let mut remaining = tail.clone();
                remaining.remove(pos);
                total += cov[first][j] * gaussian_moment(&remaining, means, cov);
            }
            total
        }
    }
}

fn eval_positive_nonregular(w: &WeylElement) -> Complex64 {
    let f = w.a_smearing();
    let g = w.e_smearing();
    let scale = f.max_coeff().max(1.0);
    // non-regular directions: any longitudinal or mean component of the
    // A-smearing kills the expectation
    if longitudinal_project(f).max_coeff() > ZERO_TOL * scale || f.mean_norm() > ZERO_TOL * scale {
        return Complex64::ZERO;
    }
    let grid = f.grid();
    let vol = grid.volume();
    let mut q = 0.0;
    for i in 0..grid.len() {
        let om = grid.omega(i);
        let k = grid.k(i);
        let k2 = grid.k2(i);
        let fv = f.coeff(i);
        let gv = g.coeff(i);
        let kg = (gv[0] * k[0] + gv[1] * k[1] + gv[2] * k[2]) / k2;
        let mut ftr2 = 0.0;
        let mut gtr2 = 0.0;
        for a in 0..3 {
            ftr2 += fv[a].norm_sqr();
            gtr2 += (gv[a] - kg * k[a]).norm_sqr();
        }
        q += vol * (ftr2 / om + gtr2 * om);
    }
    // exp(−¼[(f_tr, ω⁻¹ f_tr) + (g_tr, ω g_tr)]); the E mean is classical
    // and contributes a factor 1
    w.phase() * (-0.25 * q).exp()
}

fn eval_indefinite(measure: &SpectralMeasure, w: &WeylElement) -> Complex64 {
    let f = w.a_smearing();
    let g = w.e_smearing();
    let scale = f.max_coeff().max(1.0);
    if f.mean_norm() > ZERO_TOL * scale && measure.has_massless_atom() {
        // divergent zero-mode variance: the formal Gaussian vanishes
        return Complex64::ZERO;
    }
    let vol = f.grid().volume();
    let caa = aa_series(measure, f, f).eval(0.0);
    let cee = aa_series(measure, g, g).derivative_earlier().derivative().eval(0.0);
    let mut q = caa + cee;
    // mean sector: every atom contributes an oscillator of frequency m_a
    let mf2 = {
        let m = f.mean();
        m[0] * m[0] + m[1] * m[1] + m[2] * m[2]
    };
    let mg2 = {
        let m = g.mean();
        m[0] * m[0] + m[1] * m[1] + m[2] * m[2]
    };
    for &(m2, wt) in measure.atoms() {
        let m = m2.sqrt();
        if m > 0.0 {
            q += c(vol * mf2 * wt / (2.0 * m), 0.0);
        }
        q += c(vol * mg2 * wt * m / 2.0, 0.0);
    }
    w.phase() * (-0.5 * q).exp()
}

/// The ⟨A(f, t_X) A(g, t_Y)⟩ series of the indefinite state: per atom and
/// mode a term at ω_a(k) = √(|k|²+m_a²) with weight w_a·conj(f̂)·P^a·ĝ/(2ω_a)
/// under the Parseval pairing, plus the linear longitudinal/contact term.
fn aa_series(
    measure: &SpectralMeasure,
    f: &VectorFunction,
    g: &VectorFunction,
) -> QuasiPolynomialSeries {
    let grid = f.grid();
    assert!(grid.same_grid(g.grid()), "grid mismatch");
    let vol = grid.volume();
    let mut s = QuasiPolynomialSeries::new();
    let mut b1 = Complex64::ZERO;
    let mut linear_kmax: Option<f64> = None;
    for i in 0..grid.len() {
        let k = grid.k(i);
        let k2 = grid.k2(i);
        let kabs = k2.sqrt();
        let fv = f.coeff(i);
        let gv = g.coeff(i);
        let kf = fv[0].conj() * k[0] + fv[1].conj() * k[1] + fv[2].conj() * k[2];
        let kg = gv[0] * k[0] + gv[1] * k[1] + gv[2] * k[2];
        let dot = fv[0].conj() * gv[0] + fv[1].conj() * gv[1] + fv[2].conj() * gv[2];
        let mut kappa = measure.z();
        for &(m2, wt) in measure.atoms() {
            let w2 = k2 + m2;
            let omega = w2.sqrt();
            let proj = dot - kf * kg / w2;
            let coeff = proj * (vol * wt / (2.0 * omega));
            if coeff.norm() > 0.0 {
                s.push(omega, coeff, Some(kabs));
            }
            kappa += wt / w2;
        }
        let lin = kf * kg * kappa;
        if lin.norm() > 1e-300 {
            b1 += lin;
            linear_kmax = Some(linear_kmax.map_or(kabs, |m: f64| m.max(kabs)));
        }
    }
    s.b1 = I * 0.5 * vol * b1;
    if s.b1.norm() <= 1e-300 {
        s.b1 = Complex64::ZERO;
    }
    s.linear_max_mode_k = linear_kmax;
    s.cleaned()
}

/// Hard-coded massless reference kernel (transverse projector times
/// e^{+i|k|y₀}/2|k| plus the ½i y₀ k_i k_j/|k|² part), kept as an
/// independent route against the measure-driven evaluator.
pub fn two_point_free_reference(x: &FieldLabel, y: &FieldLabel) -> Result<Complex64> {
    for label in [x, y] {
        if !label.f.has_zero_mean() {
            return Err(Error::MeanModeUnsupported(
                "two-point labels must have zero-mean smearings".into(),
            ));
        }
    }
    let grid = x.f.grid();
    let vol = grid.volume();
    let y0 = y.t - x.t;
    let mut total = Complex64::ZERO;
    for i in 0..grid.len() {
        let k = grid.k(i);
        let k2 = grid.k2(i);
        let om = k2.sqrt();
        let fv = x.f.coeff(i);
        let gv = y.f.coeff(i);
        let kf = fv[0].conj() * k[0] + fv[1].conj() * k[1] + fv[2].conj() * k[2];
        let kg = gv[0] * k[0] + gv[1] * k[1] + gv[2] * k[2];
        let dot = fv[0].conj() * gv[0] + fv[1].conj() * gv[1] + fv[2].conj() * gv[2];
        let tr = dot - kf * kg / k2;
        let long = kf * kg / k2;
        let osc = Complex64::from_polar(1.0, om * y0);
        let (tr_part, lin_part) = match (x.species, y.species) {
            (Species::A, Species::A) => (tr * osc / (2.0 * om), I * 0.5 * y0 * long),
            (Species::A, Species::E) => (tr * osc * I * om / (2.0 * om), I * 0.5 * long),
            (Species::E, Species::A) => (tr * osc * (-I * om) / (2.0 * om), -I * 0.5 * long),
            (Species::E, Species::E) => (tr * osc * om * om / (2.0 * om), Complex64::ZERO),
        };
        total += vol * (tr_part + lin_part);
    }
    Ok(total)
}

/// Gram matrix of the vectors {q^a p^b Ψ₀ : a+b ≤ maxdeg} for one
/// longitudinal mode with canonical pair (q, p) = (div A(f), div E(f)),
/// (f, −Δf) = 1, in the indefinite vacuum. Basis ordering: by total degree,
/// q-powers first. Equal-time kernel: ⟨qq⟩ = ⟨pp⟩ = 0, ⟨qp⟩ = i/2,
/// ⟨pq⟩ = −i/2; all values are dyadic so the entries are exact.
pub fn gram_longitudinal_mode(maxdeg: usize) -> Result<DMatrix<Complex64>> {
    if !(1..=3).contains(&maxdeg) {
        return Err(Error::DegreeUnsupported(maxdeg));
    }
    let mut basis = Vec::new();
    for d in 0..=maxdeg {
        for b in 0..=d {
            basis.push((d - b, b));
        }
    }
    let n = basis.len();
    let mut m = DMatrix::<Complex64>::zeros(n, n);
    for (i, &(a, b)) in basis.iter().enumerate() {
        for (j, &(cq, dp)) in basis.iter().enumerate() {
            // ⟨q^a p^b Ψ, q^c p^d Ψ⟩ = Ω(p^b q^{a+c} p^d)
            let mut word = Vec::new();
            word.extend(std::iter::repeat(Letter::P).take(b));
            word.extend(std::iter::repeat(Letter::Q).take(a + cq));
            word.extend(std::iter::repeat(Letter::P).take(dp));
            m[(i, j)] = wick_word(&word);
        }
    }
    Ok(m)
}

/// Monomial basis used by `gram_longitudinal_mode`, exposed for reporting.
pub fn gram_basis(maxdeg: usize) -> Vec<(usize, usize)> {
    let mut basis = Vec::new();
    for d in 0..=maxdeg {
        for b in 0..=d {
            basis.push((d - b, b));
        }
    }
    basis
}

#[derive(Clone, Copy, PartialEq)]
enum Letter {
    Q,
    P,
}

fn pair_kernel(x: Letter, y: Letter) -> Complex64 {
    match (x, y) {
        (Letter::Q, Letter::P) => c(0.0, 0.5),
        (Letter::P, Letter::Q) => c(0.0, -0.5),
        _ => Complex64::ZERO,
    }
}

/// Quasi-free expectation of an ordered word: sum over matchings of
/// products of ordered pair kernels.
fn wick_word(word: &[Letter]) -> Complex64 {
    if word.is_empty() {
        return c(1.0, 0.0);
    }
    if word.len() % 2 == 1 {
        return Complex64::ZERO;
    }
    let mut total = Complex64::ZERO;
    for j in 1..word.len() {
        let k = pair_kernel(word[0], word[j]);
        if k == Complex64::ZERO {
            continue;
        }
        let mut rest: Vec<Letter> = Vec::with_capacity(word.len() - 2);
        rest.extend_from_slice(&word[1..j]);
        rest.extend_from_slice(&word[j + 1..]);
        total += k * wick_word(&rest);
    }
    total
}

/// Gram matrix M_ij = Ω(W_i* · W_j) of a family of Weyl elements under a
/// state; Hermitian by construction.
pub fn state_gram(state: &StateSpec, family: &[WeylElement]) -> DMatrix<Complex64> {
    let n = family.len();
    let mut m = DMatrix::<Complex64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = state.eval_weyl(&family[i].adjoint().multiply(&family[j]));
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::ModeGrid;
    use crate::linalg::hermitian_eigenvalues;
    use crate::testfn::{gradient, inner_vector, omega_inner_vector, ScalarFunction};
    use crate::weyl::{symplectic, Automorphism};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn desk() -> Arc<ModeGrid> {
        ModeGrid::desk(1).unwrap()
    }

    fn normalized_random<R: Rng>(grid: &Arc<ModeGrid>, rng: &mut R) -> VectorFunction {
        let s = 1.0 / (2.0 * grid.volume()).sqrt();
        VectorFunction::random(grid, rng).scaled(s)
    }

    fn grad_mode(grid: &Arc<ModeGrid>) -> VectorFunction {
        let mut h = ScalarFunction::zero(grid);
        h.set_mode_pair([0, 0, 1], c(1.0, 0.0));
        gradient(&h)
    }

    fn random_admissible<R: Rng>(rng: &mut R) -> SpectralMeasure {
        let n = rng.gen_range(1..4usize);
        let mut atoms: Vec<(f64, f64)> = Vec::new();
        for j in 0..n {
            atoms.push((j as f64 * 0.7 + rng.gen_range(0.0..0.5), rng.gen_range(0.1..1.0)));
        }
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        for a in &mut atoms {
            a.1 /= total;
        }
        SpectralMeasure::new(atoms, 0.0).unwrap()
    }

    #[test]
    fn positive_state_kills_longitudinal_a_smearings() {
        let grid = desk();
        let w = WeylElement::new(grad_mode(&grid), VectorFunction::zero(&grid));
        let state = StateSpec::PositiveNonRegular;
        assert_eq!(state.eval_weyl(&w), Complex64::ZERO);
    }

    #[test]
    fn positive_state_is_invariant_on_pure_gradient_e_smearings() {
        let grid = desk();
        let w = WeylElement::new(VectorFunction::zero(&grid), grad_mode(&grid));
        let state = StateSpec::PositiveNonRegular;
        assert!((state.eval_weyl(&w) - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn positive_state_on_unit_transverse_mode() {
        // oracle: ground-state characteristic function of one oscillator,
        // ⟨e^{i s q}⟩ = ∫ |ψ₀|² e^{isx} dx computed by quadrature
        let grid = desk();
        let u = VectorFunction::unit_transverse_mode(&grid);
        let w = WeylElement::new(u, VectorFunction::zero(&grid));
        let got = StateSpec::PositiveNonRegular.eval_weyl(&w);

        let omega: f64 = 1.0;
        let s: f64 = 1.0; // (u,u) = 1 and ω = 1 reduce A(u) to a unit oscillator
        let mut int = 0.0;
        let dx = 1e-4;
        let mut x = -12.0;
        while x < 12.0 {
            let density = (omega / std::f64::consts::PI).sqrt() * (-omega * x * x).exp();
            int += density * (s * x).cos() * dx;
            x += dx;
        }
        assert!((got.re - int).abs() < 1e-6, "{got} vs {int}");
        assert!((got.re - (-0.25f64).exp()).abs() < 1e-12);
        assert!(got.im.abs() < 1e-15);
    }

    #[test]
    fn positive_state_invariance_under_gradient_shifts_and_time() {
        let grid = desk();
        let state = StateSpec::PositiveNonRegular;
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..10 {
            let f = crate::testfn::transverse_project(&normalized_random(&grid, &mut rng));
            let g = normalized_random(&grid, &mut rng);
            let w = WeylElement::new(f, g);
            let base = state.eval_weyl(&w);

            let k = ScalarFunction::random(&grid, &mut rng).scaled(0.1);
            let shifted = WeylElement::new(
                w.a_smearing().clone(),
                w.e_smearing().add(&gradient(&k)),
            );
            assert!((state.eval_weyl(&shifted) - base).norm() <= 1e-12);

            let t = rng.gen_range(-4.0..4.0);
            let moved = w.apply(&Automorphism::TimeShift(t));
            assert!((state.eval_weyl(&moved) - base).norm() <= 1e-12);
        }
    }

    #[test]
    fn positive_state_gauge_invariance() {
        let grid = desk();
        let state = StateSpec::PositiveNonRegular;
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        for _ in 0..10 {
            let w = WeylElement::new(
                normalized_random(&grid, &mut rng),
                normalized_random(&grid, &mut rng),
            );
            let base = state.eval_weyl(&w);
            let lambda = ScalarFunction::random(&grid, &mut rng);
            let small = w.apply(&Automorphism::SmallGauge(lambda));
            let large = w.apply(&Automorphism::LargeGauge([
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            ]));
            assert!((state.eval_weyl(&small) - base).norm() <= 1e-12);
            assert!((state.eval_weyl(&large) - base).norm() <= 1e-12);
        }
    }

    #[test]
    fn positive_state_gram_matrices_are_psd() {
        let grid = desk();
        let state = StateSpec::PositiveNonRegular;
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for trial in 0..5 {
            let n = 2 + trial % 5;
            let family: Vec<WeylElement> = (0..n)
                .map(|_| {
                    let mut f = normalized_random(&grid, &mut rng);
                    let mut g = normalized_random(&grid, &mut rng);
                    if rng.gen_bool(0.5) {
                        f = crate::testfn::transverse_project(&f);
                    }
                    g.set_mean([0.0, 0.0, rng.gen_range(-0.05..0.05)]);
                    WeylElement::new(f, g)
                })
                .collect();
            let m = state_gram(&state, &family);
            let eigs = hermitian_eigenvalues(&m);
            assert!(eigs[0] >= -1e-10, "min eigenvalue {}", eigs[0]);
        }
    }

    #[test]
    fn non_regularity_step_function() {
        let grid = desk();
        let state = StateSpec::PositiveNonRegular;
        let dh = grad_mode(&grid);
        for s in [-2.0, -0.5, 1e-6, 0.3, 5.0] {
            let w = WeylElement::new(dh.scaled(s), VectorFunction::zero(&grid));
            assert_eq!(state.eval_weyl(&w), Complex64::ZERO, "s = {s}");
        }
        let w0 = WeylElement::new(dh.scaled(0.0), VectorFunction::zero(&grid));
        assert!((state.eval_weyl(&w0) - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn translation_overlap_is_discontinuous() {
        let grid = desk();
        let state = StateSpec::PositiveNonRegular;
        let dh = grad_mode(&grid);
        let l = grid.side();
        for step in 1..10 {
            let x = [0.0, 0.0, l * step as f64 / 10.0];
            let diff = dh.add(&dh.translate(x).scaled(-1.0));
            let w = WeylElement::new(diff, VectorFunction::zero(&grid));
            assert_eq!(state.eval_weyl(&w), Complex64::ZERO);
        }
        let w0 = WeylElement::new(
            dh.add(&dh.translate([0.0; 3]).scaled(-1.0)),
            VectorFunction::zero(&grid),
        );
        assert!((state.eval_weyl(&w0) - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn gauss_operator_is_null_on_the_vacuum() {
        // second derivative in s of Ω(W(0, −s ∂k)) at s = 0
        let grid = desk();
        let state = StateSpec::PositiveNonRegular;
        let dk = grad_mode(&grid);
        let eval = |s: f64| {
            state
                .eval_weyl(&WeylElement::new(VectorFunction::zero(&grid), dk.scaled(-s)))
                .re
        };
        let h = 1e-3;
        let second = (eval(h) - 2.0 * eval(0.0) + eval(-h)) / (h * h);
        assert!(second.abs() < 1e-9);
    }

    #[test]
    fn theta_character_separates_states() {
        let grid = desk();
        let mut g = VectorFunction::zero(&grid);
        g.set_mean([0.0, 0.0, 0.01]);
        let theta = [0.0, 0.0, 0.35];
        let plain = StateSpec::PositiveNonRegular;
        let composed = StateSpec::theta_composed(StateSpec::PositiveNonRegular, theta).unwrap();
        for s in [-3.0, -1.0, 0.5, 2.0] {
            let w = WeylElement::new(VectorFunction::zero(&grid), g.scaled(s));
            let a = plain.eval_weyl(&w);
            let b = composed.eval_weyl(&w);
            assert!((a - c(1.0, 0.0)).norm() < 1e-15);
            let want = Complex64::from_polar(1.0, s * theta[2] * 0.01 * grid.volume());
            assert!((b - want).norm() < 1e-12);
            let sep = (a - b).norm();
            let expect = (c(1.0, 0.0) - want).norm();
            assert!((sep - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn theta_nesting_is_rejected() {
        let inner = StateSpec::theta_composed(StateSpec::PositiveNonRegular, [1.0, 0.0, 0.0]).unwrap();
        assert!(StateSpec::theta_composed(inner, [0.0, 1.0, 0.0]).is_err());
    }

    #[test]
    fn two_point_transverse_equal_time() {
        let grid = desk();
        let state = StateSpec::free_indefinite();
        let u = VectorFunction::unit_transverse_mode(&grid);
        let v = state
            .two_point(&FieldLabel::a(u.clone(), 0.3), &FieldLabel::a(u.clone(), 0.3))
            .unwrap();
        // mode-sum oracle: (u, ω⁻¹ u)/2 with ω = 1 and (u,u) = 1
        let want = 0.5 * omega_inner_vector(&u, &u, -1);
        assert!((v - c(want, 0.0)).norm() < 1e-14);
        assert!((v - c(0.5, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn two_point_longitudinal_equal_time_vanishes() {
        let grid = desk();
        let state = StateSpec::free_indefinite();
        let dh = grad_mode(&grid);
        let v = state
            .two_point(&FieldLabel::a(dh.clone(), 1.7), &FieldLabel::a(dh, 1.7))
            .unwrap();
        assert!(v.norm() < 1e-14);
    }

    #[test]
    fn two_point_ee_gradients_vanish_at_all_times() {
        let grid = desk();
        let state = StateSpec::free_indefinite();
        let mut h1 = ScalarFunction::zero(&grid);
        h1.set_mode_pair([0, 0, 1], c(0.7, 0.1));
        let mut h2 = ScalarFunction::zero(&grid);
        h2.set_mode_pair([0, 0, 1], c(-0.2, 0.5));
        h2.set_mode_pair([1, 0, 0], c(0.3, 0.0));
        for (t, s) in [(0.0, 0.0), (1.2, -0.4), (3.0, 3.0)] {
            let v = state
                .two_point(
                    &FieldLabel::e(gradient(&h1), t),
                    &FieldLabel::e(gradient(&h2), s),
                )
                .unwrap();
            assert!(v.norm() < 1e-13, "t={t} s={s}: {v}");
        }
    }

    #[test]
    fn two_point_rejects_mean_and_positive_state() {
        let grid = desk();
        let state = StateSpec::free_indefinite();
        let mut f = VectorFunction::zero(&grid);
        f.set_mean([0.1, 0.0, 0.0]);
        let err = state
            .two_point(&FieldLabel::a(f, 0.0), &FieldLabel::a(VectorFunction::zero(&grid), 0.0))
            .unwrap_err();
        assert!(matches!(err, Error::MeanModeUnsupported(_)));

        let err2 = StateSpec::PositiveNonRegular
            .two_point(
                &FieldLabel::a(VectorFunction::zero(&grid), 0.0),
                &FieldLabel::a(VectorFunction::zero(&grid), 0.0),
            )
            .unwrap_err();
        assert!(matches!(err2, Error::UnsupportedState(_)));
    }

    #[test]
    fn equal_time_commutator_is_canonical_for_admissible_measures() {
        let grid = desk();
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let mut measures = vec![SpectralMeasure::free_case()];
        for _ in 0..5 {
            measures.push(random_admissible(&mut rng));
        }
        for m in measures {
            let state = StateSpec::IndefiniteQuasiFree(m);
            for _ in 0..3 {
                let f = normalized_random(&grid, &mut rng);
                let g = normalized_random(&grid, &mut rng);
                let ae = state
                    .two_point(&FieldLabel::a(f.clone(), 0.0), &FieldLabel::e(g.clone(), 0.0))
                    .unwrap();
                let ea = state
                    .two_point(&FieldLabel::e(g.clone(), 0.0), &FieldLabel::a(f.clone(), 0.0))
                    .unwrap();
                let comm = ae - ea;
                let want = I * inner_vector(&f, &g);
                assert!(
                    (comm - want).norm() <= 1e-10 * want.norm().max(1.0),
                    "{comm} vs {want}"
                );
            }
        }
    }

    #[test]
    fn commutator_picks_up_contact_term_for_nonzero_z() {
        let grid = desk();
        let mut rng = ChaCha8Rng::seed_from_u64(47);
        let z = 0.8;
        let state =
            StateSpec::IndefiniteQuasiFree(SpectralMeasure::new(vec![(0.0, 1.0)], z).unwrap());
        let f = normalized_random(&grid, &mut rng);
        let g = normalized_random(&grid, &mut rng);
        let ae = state
            .two_point(&FieldLabel::a(f.clone(), 0.0), &FieldLabel::e(g.clone(), 0.0))
            .unwrap();
        let ea = state
            .two_point(&FieldLabel::e(g.clone(), 0.0), &FieldLabel::a(f.clone(), 0.0))
            .unwrap();
        let comm = ae - ea;
        // i(f,g) + i·Z·L³ Σ (k·conj f̂)(k·ĝ)
        let mut contact = Complex64::ZERO;
        for i in 0..grid.len() {
            let k = grid.k(i);
            let fv = f.coeff(i);
            let gv = g.coeff(i);
            let kf = fv[0].conj() * k[0] + fv[1].conj() * k[1] + fv[2].conj() * k[2];
            let kg = gv[0] * k[0] + gv[1] * k[1] + gv[2] * k[2];
            contact += kf * kg;
        }
        let want = I * (inner_vector(&f, &g) + z * (grid.volume() * contact).re);
        assert!((comm - want).norm() <= 1e-10 * want.norm().max(1.0));
    }

    #[test]
    fn free_case_matches_reference_kernel() {
        let grid = desk();
        let state = StateSpec::free_indefinite();
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        for _ in 0..20 {
            let f = normalized_random(&grid, &mut rng);
            let g = normalized_random(&grid, &mut rng);
            let sp = if rng.gen_bool(0.5) { Species::A } else { Species::E };
            let sq = if rng.gen_bool(0.5) { Species::A } else { Species::E };
            let x = FieldLabel { species: sp, f, t: rng.gen_range(-2.0..2.0) };
            let y = FieldLabel { species: sq, f: g, t: rng.gen_range(-2.0..2.0) };
            let a = state.two_point(&x, &y).unwrap();
            let b = two_point_free_reference(&x, &y).unwrap();
            assert!((a - b).norm() <= 1e-12 * b.norm().max(1.0), "{a} vs {b}");
        }
    }

    #[test]
    fn wick_four_point_of_unit_modes() {
        let grid = desk();
        let state = StateSpec::free_indefinite();
        let u = VectorFunction::unit_transverse_mode(&grid);
        let labels: Vec<FieldLabel> = (0..4).map(|_| FieldLabel::a(u.clone(), 0.0)).collect();
        let got = state.n_point_wick(&labels).unwrap();
        // brute-force oracle over the three pairings of {0,1,2,3}
        let pairings = [[(0, 1), (2, 3)], [(0, 2), (1, 3)], [(0, 3), (1, 2)]];
        let mut want = Complex64::ZERO;
        for pairing in pairings {
            let mut term = c(1.0, 0.0);
            for (i, j) in pairing {
                term *= state.two_point(&labels[i], &labels[j]).unwrap();
            }
            want += term;
        }
        assert!((got - want).norm() < 1e-14);
        assert!((got - c(0.75, 0.0)).norm() < 1e-13);
    }

    #[test]
    fn wick_two_point_reduction_and_odd_vanishing() {
        let grid = desk();
        let state = StateSpec::free_indefinite();
        let mut rng = ChaCha8Rng::seed_from_u64(59);
        let f = normalized_random(&grid, &mut rng);
        let g = normalized_random(&grid, &mut rng);
        let x = FieldLabel::a(f, 0.4);
        let y = FieldLabel::e(g, -0.9);
        let two = state.two_point(&x, &y).unwrap();
        let viaw = state.n_point_wick(&[x.clone(), y.clone()]).unwrap();
        assert!((two - viaw).norm() < 1e-14);
        let odd = state.n_point_wick(&[x.clone(), y.clone(), x.clone()]).unwrap();
        assert_eq!(odd, Complex64::ZERO);
    }

    #[test]
    fn theta_one_point_values() {
        let grid = desk();
        let theta = [0.0, 0.0, 0.4];
        let state = StateSpec::theta_composed(StateSpec::free_indefinite(), theta).unwrap();
        let mut f = VectorFunction::zero(&grid);
        f.set_mean([0.0, 0.0, 0.2]);
        let t = 1.7;
        let a = state.n_point_wick(&[FieldLabel::a(f.clone(), t)]).unwrap();
        let want = t * theta[2] * 0.2 * grid.volume();
        assert!((a - c(want, 0.0)).norm() < 1e-12);
        let e = state.n_point_wick(&[FieldLabel::e(f.clone(), t)]).unwrap();
        assert!((e - c(theta[2] * 0.2 * grid.volume(), 0.0)).norm() < 1e-12);
        // orthogonal mean direction gives zero
        let mut f2 = VectorFunction::zero(&grid);
        f2.set_mean([0.3, 0.0, 0.0]);
        let z = state.n_point_wick(&[FieldLabel::a(f2, t)]).unwrap();
        assert_eq!(z, Complex64::ZERO);
    }

    #[test]
    fn indefinite_weyl_eval_is_regular_on_longitudinal_elements() {
        let grid = desk();
        let state = StateSpec::free_indefinite();
        let dh = grad_mode(&grid);
        for s in [0.0, 0.3, 2.0] {
            let w = WeylElement::new(dh.scaled(s), VectorFunction::zero(&grid));
            let v = state.eval_weyl(&w);
            // null longitudinal vectors: the formal Gaussian stays at 1
            assert!((v - c(1.0, 0.0)).norm() < 1e-12, "s = {s}");
        }
        // transverse sector agrees with the positive state
        let u = VectorFunction::unit_transverse_mode(&grid);
        let w = WeylElement::new(u.clone(), u.scaled(0.4));
        let a = state.eval_weyl(&w);
        let b = StateSpec::PositiveNonRegular.eval_weyl(&w);
        assert!((a - b).norm() < 1e-13);
    }

    #[test]
    fn gram_degree_one_matches_derived_matrix() {
        let m = gram_longitudinal_mode(1).unwrap();
        let want = [
            [c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)],
            [c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.5)],
            [c(0.0, 0.0), c(0.0, -0.5), c(0.0, 0.0)],
        ];
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(m[(i, j)], want[i][j], "entry ({i},{j})");
            }
        }
        let det = m.clone().determinant();
        assert!((det - c(-0.25, 0.0)).norm() < 1e-15);
        let eigs = hermitian_eigenvalues(&m);
        assert!(eigs[0] < -0.49 && eigs[0] > -0.51);
    }

    #[test]
    fn gram_null_vectors_and_hermiticity() {
        for deg in 1..=3 {
            let m = gram_longitudinal_mode(deg).unwrap();
            let n = m.nrows();
            for i in 0..n {
                for j in 0..n {
                    assert_eq!(m[(i, j)], m[(j, i)].conj());
                }
            }
            // qΨ₀ and pΨ₀ are null
            assert_eq!(m[(1, 1)], Complex64::ZERO);
            assert_eq!(m[(2, 2)], Complex64::ZERO);
        }
        assert!(matches!(gram_longitudinal_mode(4), Err(Error::DegreeUnsupported(4))));
        assert!(matches!(gram_longitudinal_mode(0), Err(Error::DegreeUnsupported(0))));
    }

    #[test]
    fn gram_entries_match_ccr_reordering_oracle() {
        // independent route: move leading p's through q's with [p,q] = −i,
        // then use ⟨q^n p^n⟩ = n! (i/2)^n from the ordered characteristic
        // function e^{−isu/2}
        fn ordered_moment(a: usize, b: usize) -> Complex64 {
            if a != b {
                return Complex64::ZERO;
            }
            // n!(i/2)^n accumulated as Π_{j=1..n} j·(i/2)
            let mut v = c(1.0, 0.0);
            for j in 1..=a {
                v *= c(0.0, 0.5) * j as f64;
            }
            v
        }
        fn binom(n: usize, k: usize) -> f64 {
            let mut v = 1.0;
            for j in 0..k {
                v = v * (n - j) as f64 / (j + 1) as f64;
            }
            v
        }
        fn oracle(b: usize, qn: usize, d: usize) -> Complex64 {
            // ⟨p^b q^qn p^d⟩ = Σ_j (−i)^j j! C(b,j) C(qn,j) ⟨q^{qn−j} p^{b+d−j}⟩
            let mut total = Complex64::ZERO;
            for j in 0..=b.min(qn) {
                // (−i)^j j! accumulated as Π_{m=1..j} (−i·m)
                let mut factor = c(1.0, 0.0);
                for m in 1..=j {
                    factor *= c(0.0, -1.0) * m as f64;
                }
                total += factor * binom(b, j) * binom(qn, j) * ordered_moment(qn - j, b + d - j);
            }
            total
        }
        let basis = gram_basis(3);
        let m = gram_longitudinal_mode(3).unwrap();
        for (i, &(a, b)) in basis.iter().enumerate() {
            for (j, &(cq, dp)) in basis.iter().enumerate() {
                let want = oracle(b, a + cq, dp);
                assert!(
                    (m[(i, j)] - want).norm() < 1e-12,
                    "entry ({a},{b})x({cq},{dp}): {} vs {}",
                    m[(i, j)],
                    want
                );
            }
        }
    }

    #[test]
    fn longitudinal_pair_kernel_from_two_point() {
        // ties the gram kernel to the field machinery: with (f, −Δf) = 1,
        // q = div A(f) = −A(∂f) gives ⟨q(0) q(y₀)⟩ = i y₀/2
        let grid = desk();
        let state = StateSpec::free_indefinite();
        let mut h = ScalarFunction::zero(&grid);
        h.set_mode_pair([0, 0, 1], c(1.0, 0.0));
        let dh = gradient(&h);
        let norm = inner_vector(&dh, &dh).sqrt();
        let f = dh.scaled(1.0 / norm);
        for y0 in [0.0, 0.7, -1.3] {
            let qq = state
                .two_point(&FieldLabel::a(f.scaled(-1.0), 0.0), &FieldLabel::a(f.scaled(-1.0), y0))
                .unwrap();
            assert!((qq - I * 0.5 * y0).norm() < 1e-13, "y0={y0}: {qq}");
            let qp = state
                .two_point(&FieldLabel::a(f.scaled(-1.0), 0.0), &FieldLabel::e(f.scaled(-1.0), y0))
                .unwrap();
            assert!((qp - I * 0.5).norm() < 1e-13);
        }
    }

    #[test]
    fn null_vector_suite() {
        let grid = desk();
        let state = StateSpec::free_indefinite();
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        for _ in 0..10 {
            let hf = ScalarFunction::random(&grid, &mut rng).scaled(0.2);
            let hg = ScalarFunction::random(&grid, &mut rng).scaled(0.2);
            let qf = gradient(&hf).scaled(-1.0); // div A(f) = −A(∂f)
            let qg = gradient(&hg).scaled(-1.0);
            let aa = state
                .two_point(&FieldLabel::a(qf.clone(), 0.0), &FieldLabel::a(qf.clone(), 0.0))
                .unwrap();
            let ee = state
                .two_point(&FieldLabel::e(qf.clone(), 0.0), &FieldLabel::e(qf.clone(), 0.0))
                .unwrap();
            assert!(aa.norm() < 1e-13);
            assert!(ee.norm() < 1e-13);
            let cross = state
                .two_point(&FieldLabel::a(qf.clone(), 0.0), &FieldLabel::e(qg.clone(), 0.0))
                .unwrap();
            // Wick/CCR oracle: (i/2)(∂hf, ∂hg)
            let want = I * 0.5 * inner_vector(&gradient(&hf), &gradient(&hg));
            assert!((cross - want).norm() <= 1e-12 * want.norm().max(1.0));
            if want.norm() > 1e-6 {
                assert!(cross.norm() > 1e-8);
            }
        }
    }

    #[test]
    fn symplectic_matches_commutator_normalization() {
        // σ((f,0),(0,g)) = (f,g) is the same pairing the commutator pins
        let grid = desk();
        let mut rng = ChaCha8Rng::seed_from_u64(67);
        let f = normalized_random(&grid, &mut rng);
        let g = normalized_random(&grid, &mut rng);
        let z = VectorFunction::zero(&grid);
        let s = symplectic(&f, &z, &z, &g);
        assert!((s - inner_vector(&f, &g)).abs() < 1e-12);
    }
}
