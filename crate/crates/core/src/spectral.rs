//! Fourier-space linear algebra for the periodic difference operators.
//!
//! Every operator in [`crate::grid`] is circulant, so one 2D DFT diagonalizes
//! all of them at once. The forward transform divides by `n1 n2`, which makes
//! the `(0, 0)` coefficient the spatial mean.
//!
//! Per mode `k`, the centred difference has symbol `i s(k)` with
//! `s_α(k) = sin(2π k_α / n_α) / h`, and the five-point Laplacian has symbol
//! `-λ(k)` with `λ(k) = (4 / h²)(sin²(π k₁ / n₁) + sin²(π k₂ / n₂))`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::grid::{Axis, GridSpec, ScalarField, VectorField};

/// Fourier coefficients of a scalar gridfunction, stored like the field
/// itself: mode `(k1, k2)` at `k2 * n1 + k1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeArray {
    spec: GridSpec,
    coeffs: Vec<Complex64>,
}

impl ModeArray {
    pub fn spec(&self) -> GridSpec {
        self.spec
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn get(&self, k1: usize, k2: usize) -> Complex64 {
        self.coeffs[self.spec.index(k1, k2)]
    }

    /// The zeroth coefficient, i.e. the spatial mean.
    pub fn mean(&self) -> Complex64 {
        self.coeffs[0]
    }

    pub fn set_mean(&mut self, value: f64) {
        self.coeffs[0] = Complex64::new(value, 0.0);
    }
}

/// Planned forward/inverse 2D transforms for one grid.
#[derive(Clone)]
pub struct Fft2 {
    spec: GridSpec,
    fwd1: Arc<dyn Fft<f64>>,
    inv1: Arc<dyn Fft<f64>>,
    fwd2: Arc<dyn Fft<f64>>,
    inv2: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Fft2 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fft2").field("spec", &self.spec).finish()
    }
}

impl Fft2 {
    pub fn new(spec: GridSpec) -> Self {
        let mut planner = FftPlanner::new();
        Fft2 {
            spec,
            fwd1: planner.plan_fft_forward(spec.n1()),
            inv1: planner.plan_fft_inverse(spec.n1()),
            fwd2: planner.plan_fft_forward(spec.n2()),
            inv2: planner.plan_fft_inverse(spec.n2()),
        }
    }

    pub fn spec(&self) -> GridSpec {
        self.spec
    }

    fn apply(&self, buf: &mut [Complex64], along1: &dyn Fft<f64>, along2: &dyn Fft<f64>) {
        let (n1, n2) = (self.spec.n1(), self.spec.n2());
        // rows are contiguous: one call transforms all of them
        along1.process(buf);
        let mut cols = vec![Complex64::default(); buf.len()];
        for j in 0..n2 {
            for i in 0..n1 {
                cols[i * n2 + j] = buf[j * n1 + i];
            }
        }
        along2.process(&mut cols);
        for j in 0..n2 {
            for i in 0..n1 {
                buf[j * n1 + i] = cols[i * n2 + j];
            }
        }
    }

    pub fn forward(&self, f: &ScalarField) -> ModeArray {
        assert_eq!(f.spec(), self.spec, "field is on a different grid");
        let mut buf: Vec<Complex64> = f.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.apply(&mut buf, self.fwd1.as_ref(), self.fwd2.as_ref());
        let scale = 1.0 / self.spec.len() as f64;
        buf.iter_mut().for_each(|c| *c *= scale);
        ModeArray {
            spec: self.spec,
            coeffs: buf,
        }
    }

    /// Inverse transform, keeping the real part.
    pub fn inverse(&self, m: &ModeArray) -> ScalarField {
        assert_eq!(m.spec, self.spec, "modes are on a different grid");
        let mut buf = m.coeffs.clone();
        self.apply(&mut buf, self.inv1.as_ref(), self.inv2.as_ref());
        ScalarField::from_values(self.spec, buf.into_iter().map(|c| c.re).collect())
            .expect("length preserved by transform")
    }
}

pub fn transform(f: &ScalarField) -> ModeArray {
    Fft2::new(f.spec()).forward(f)
}

pub fn inverse_transform(m: &ModeArray) -> ScalarField {
    Fft2::new(m.spec()).inverse(m)
}

/// Signed wavenumber in `(-n/2, n/2]`.
fn signed(k: usize, n: usize) -> f64 {
    if 2 * k <= n {
        k as f64
    } else {
        k as f64 - n as f64
    }
}

/// `sin(2π k / n)`, exactly zero on the constant and checkerboard modes.
fn centred_sine(k: usize, n: usize) -> f64 {
    if (2 * k).is_multiple_of(n) {
        0.0
    } else {
        (2.0 * PI * signed(k, n) / n as f64).sin()
    }
}

/// Per-mode symbols of `D⁰` and `-D⁺·D⁻`.
#[derive(Debug, Clone)]
pub struct ModeSymbols {
    spec: GridSpec,
    centred: Vec<[f64; 2]>,
    lam: Vec<f64>,
}

impl ModeSymbols {
    pub fn new(spec: GridSpec) -> Self {
        let (n1, n2) = (spec.n1(), spec.n2());
        let h = spec.h();
        let mut centred = Vec::with_capacity(spec.len());
        let mut lam = Vec::with_capacity(spec.len());
        for k2 in 0..n2 {
            let s2 = centred_sine(k2, n2) / h;
            let l2 = (PI * signed(k2, n2) / n2 as f64).sin().powi(2);
            for k1 in 0..n1 {
                let s1 = centred_sine(k1, n1) / h;
                let l1 = (PI * signed(k1, n1) / n1 as f64).sin().powi(2);
                centred.push([s1, s2]);
                lam.push(4.0 / (h * h) * (l1 + l2));
            }
        }
        ModeSymbols { spec, centred, lam }
    }

    pub fn spec(&self) -> GridSpec {
        self.spec
    }

    /// Real vector `s(k)`; the symbol of `D⁰` is `i s(k)`.
    pub fn centred(&self, k1: usize, k2: usize) -> [f64; 2] {
        self.centred[self.spec.index(k1, k2)]
    }

    /// `λ(k)`, the symbol of `-D⁺·D⁻`.
    pub fn laplacian(&self, k1: usize, k2: usize) -> f64 {
        self.lam[self.spec.index(k1, k2)]
    }

    /// Symbol of `-D⁰·D⁰`, i.e. `|s(k)|²`.
    pub fn centred_laplacian(&self, k1: usize, k2: usize) -> f64 {
        let [s1, s2] = self.centred(k1, k2);
        s1 * s1 + s2 * s2
    }

    /// Dimension of `ker(D⁰)`: 1, 2 or 4 depending on the parity of `n1`, `n2`.
    pub fn kernel_dimension(&self) -> usize {
        self.centred.iter().filter(|s| s[0] == 0.0 && s[1] == 0.0).count()
    }
}

/// Output of the decomposition `v = w + D⁰ψ` with `D⁰·w = 0`.
#[derive(Debug, Clone)]
pub struct HelmholtzParts {
    pub w: VectorField,
    pub gpsi: VectorField,
}

fn check_solve_params(dt: f64, mu: f64, rho: f64) -> Result<()> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::param("dt", format!("must be positive, got {dt}")));
    }
    if !(rho.is_finite() && rho > 0.0) {
        return Err(Error::param("rho", format!("must be positive, got {rho}")));
    }
    if !(mu.is_finite() && mu >= 0.0) {
        return Err(Error::param("mu", format!("must be non-negative, got {mu}")));
    }
    Ok(())
}

/// Planned transforms plus symbols for one grid; reuse across time steps.
#[derive(Debug, Clone)]
pub struct SpectralSolver {
    fft: Fft2,
    symbols: ModeSymbols,
}

impl SpectralSolver {
    pub fn new(spec: GridSpec) -> Self {
        SpectralSolver {
            fft: Fft2::new(spec),
            symbols: ModeSymbols::new(spec),
        }
    }

    pub fn spec(&self) -> GridSpec {
        self.fft.spec()
    }

    pub fn fft(&self) -> &Fft2 {
        &self.fft
    }

    pub fn symbols(&self) -> &ModeSymbols {
        &self.symbols
    }

    fn forward_vec(&self, v: &VectorField) -> [ModeArray; 2] {
        assert_eq!(v.spec(), self.spec(), "field is on a different grid");
        [self.fft.forward(v.u1()), self.fft.forward(v.u2())]
    }

    fn inverse_vec(&self, m: &[ModeArray; 2]) -> VectorField {
        VectorField::new(self.fft.inverse(&m[0]), self.fft.inverse(&m[1]))
            .expect("same grid")
    }

    /// Split each mode into its component along `s(k)` (returned) and the
    /// remainder (left in `modes`). Modes with `s(k) = 0` are untouched.
    fn split_gradient(&self, modes: &mut [ModeArray; 2]) -> [ModeArray; 2] {
        let mut grad = [modes[0].clone(), modes[1].clone()];
        let [m1, m2] = modes;
        let [g1, g2] = &mut grad;
        for (idx, s) in self.symbols.centred.iter().enumerate() {
            let s2 = s[0] * s[0] + s[1] * s[1];
            if s2 == 0.0 {
                g1.coeffs[idx] = Complex64::default();
                g2.coeffs[idx] = Complex64::default();
                continue;
            }
            let proj = (m1.coeffs[idx] * s[0] + m2.coeffs[idx] * s[1]) / s2;
            let (p1, p2) = (proj * s[0], proj * s[1]);
            g1.coeffs[idx] = p1;
            g2.coeffs[idx] = p2;
            m1.coeffs[idx] -= p1;
            m2.coeffs[idx] -= p2;
        }
        grad
    }

    /// Solve `(I - dt (μ/ρ) D⁺·D⁻) u + (dt/ρ) D⁰p = w`, `D⁰·u = 0` mode by mode.
    /// Returns `u` and `D⁰p`.
    pub fn stokes_solve(&self, w: &VectorField, dt: f64, mu: f64, rho: f64) -> Result<(VectorField, VectorField)> {
        self.stokes_solve_pinned(w, dt, mu, rho, None)
    }

    /// As [`Self::stokes_solve`], but first overwrite the zeroth coefficient
    /// of `w₁` with `mean_flow` when one is given.
    pub fn stokes_solve_pinned(
        &self,
        w: &VectorField,
        dt: f64,
        mu: f64,
        rho: f64,
        mean_flow: Option<f64>,
    ) -> Result<(VectorField, VectorField)> {
        check_solve_params(dt, mu, rho)?;
        let mut modes = self.forward_vec(w);
        if let Some(u_mean) = mean_flow {
            modes[0].set_mean(u_mean);
        }
        let mut grad = self.split_gradient(&mut modes);
        let nu = mu / rho;
        for (idx, &lam) in self.symbols.lam.iter().enumerate() {
            let damp = 1.0 / (1.0 + dt * nu * lam);
            modes[0].coeffs[idx] *= damp;
            modes[1].coeffs[idx] *= damp;
        }
        let scale = rho / dt;
        for g in grad.iter_mut() {
            g.coeffs.iter_mut().for_each(|c| *c *= scale);
        }
        Ok((self.inverse_vec(&modes), self.inverse_vec(&grad)))
    }

    pub fn helmholtz(&self, v: &VectorField) -> HelmholtzParts {
        let mut modes = self.forward_vec(v);
        let grad = self.split_gradient(&mut modes);
        HelmholtzParts {
            w: self.inverse_vec(&modes),
            gpsi: self.inverse_vec(&grad),
        }
    }
}

pub fn stokes_solve(w: &VectorField, dt: f64, mu: f64, rho: f64) -> Result<(VectorField, VectorField)> {
    SpectralSolver::new(w.spec()).stokes_solve(w, dt, mu, rho)
}

pub fn helmholtz(v: &VectorField) -> HelmholtzParts {
    SpectralSolver::new(v.spec()).helmholtz(v)
}

/// Smallest non-zero eigenvalue of `-D⁰·D⁰`.
pub fn lambda_min(spec: GridSpec) -> f64 {
    let sym = ModeSymbols::new(spec);
    let mut best = f64::INFINITY;
    for k2 in 0..spec.n2() {
        for k1 in 0..spec.n1() {
            let l = sym.centred_laplacian(k1, k2);
            if l > 0.0 {
                best = best.min(l);
            }
        }
    }
    best
}

/// Shift `w₁` so that its spatial mean (the zeroth Fourier coefficient)
/// equals `u_mean`. All other modes are unchanged.
pub fn pin_mean_flow(w: &VectorField, u_mean: f64) -> VectorField {
    let mut out = w.clone();
    let shift = u_mean - w.u1().mean();
    out.comp_mut(Axis::X1).values_mut().iter_mut().for_each(|v| *v += shift);
    out
}
