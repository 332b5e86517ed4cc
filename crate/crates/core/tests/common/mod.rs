//! Dense-matrix reference operators written directly from the stencils.

#![allow(dead_code)]

use ibflow::grid::{GridSpec, ScalarField, VectorField};
use nalgebra::{DMatrix, DVector};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

pub fn idx(spec: GridSpec, i: isize, j: isize) -> usize {
    let i = i.rem_euclid(spec.n1() as isize) as usize;
    let j = j.rem_euclid(spec.n2() as isize) as usize;
    j * spec.n1() + i
}

/// Dense `D⁰` along one axis (0 or 1).
pub fn d0(spec: GridSpec, axis: usize) -> DMatrix<f64> {
    let n = spec.len();
    let mut m = DMatrix::zeros(n, n);
    let c = 1.0 / (2.0 * spec.h());
    for j in 0..spec.n2() as isize {
        for i in 0..spec.n1() as isize {
            let row = idx(spec, i, j);
            let (p, q) = if axis == 0 {
                (idx(spec, i + 1, j), idx(spec, i - 1, j))
            } else {
                (idx(spec, i, j + 1), idx(spec, i, j - 1))
            };
            m[(row, p)] += c;
            m[(row, q)] -= c;
        }
    }
    m
}

/// Dense 5-point Laplacian.
pub fn laplacian(spec: GridSpec) -> DMatrix<f64> {
    let n = spec.len();
    let mut m = DMatrix::zeros(n, n);
    let c = 1.0 / (spec.h() * spec.h());
    for j in 0..spec.n2() as isize {
        for i in 0..spec.n1() as isize {
            let row = idx(spec, i, j);
            m[(row, row)] -= 4.0 * c;
            for (di, dj) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
                m[(row, idx(spec, i + di, j + dj))] += c;
            }
        }
    }
    m
}

/// Gradient `G: ℝᴺ → ℝ²ᴺ` and divergence `Div: ℝ²ᴺ → ℝᴺ` built from `D⁰`.
pub fn grad_div(spec: GridSpec) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = spec.len();
    let (dx, dy) = (d0(spec, 0), d0(spec, 1));
    let mut g = DMatrix::zeros(2 * n, n);
    g.view_mut((0, 0), (n, n)).copy_from(&dx);
    g.view_mut((n, 0), (n, n)).copy_from(&dy);
    let mut div = DMatrix::zeros(n, 2 * n);
    div.view_mut((0, 0), (n, n)).copy_from(&dx);
    div.view_mut((0, n), (n, n)).copy_from(&dy);
    (g, div)
}

pub fn stack(v: &VectorField) -> DVector<f64> {
    let mut data = v.u1().values().to_vec();
    data.extend_from_slice(v.u2().values());
    DVector::from_vec(data)
}

pub fn unstack(spec: GridSpec, v: &DVector<f64>) -> VectorField {
    let n = spec.len();
    VectorField::new(
        ScalarField::from_values(spec, v.as_slice()[..n].to_vec()).unwrap(),
        ScalarField::from_values(spec, v.as_slice()[n..].to_vec()).unwrap(),
    )
    .unwrap()
}

/// Minimum-norm least-squares solve through the SVD.
pub fn pinv_solve(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let svd = a.clone().svd(true, true);
    let tol = 1e-10 * svd.singular_values.max();
    svd.solve(b, tol).expect("svd solve")
}

/// Solve `(ρ/dt - μL) u + G p = (ρ/dt) w`, `Div u = 0`. Returns `u` and `G p`.
/// Assembled in the scaled unknown `q = (dt/ρ) p` to keep the system well
/// conditioned.
pub fn dense_stokes(w: &VectorField, dt: f64, mu: f64, rho: f64) -> (VectorField, VectorField) {
    let spec = w.spec();
    let n = spec.len();
    let (g, div) = grad_div(spec);
    let lap = laplacian(spec);
    let mut a = DMatrix::zeros(3 * n, 3 * n);
    for block in 0..2 {
        let mut m = -&lap * (dt * mu / rho);
        for k in 0..n {
            m[(k, k)] += 1.0;
        }
        a.view_mut((block * n, block * n), (n, n)).copy_from(&m);
    }
    a.view_mut((0, 2 * n), (2 * n, n)).copy_from(&g);
    a.view_mut((2 * n, 0), (n, 2 * n)).copy_from(&div);
    let mut rhs = DVector::zeros(3 * n);
    rhs.rows_mut(0, 2 * n).copy_from(&stack(w));
    let sol = pinv_solve(&a, &rhs);
    let u = sol.rows(0, 2 * n).into_owned();
    let q = sol.rows(2 * n, n).into_owned();
    (unstack(spec, &u), unstack(spec, &(&g * q * (rho / dt))))
}

/// Orthogonal split `v = w + Gψ` with `Div w = 0`. Returns `(w, Gψ)`.
pub fn dense_helmholtz(v: &VectorField) -> (VectorField, VectorField) {
    let spec = v.spec();
    let (g, _) = grad_div(spec);
    let sv = stack(v);
    let psi = pinv_solve(&g, &sv);
    let gpsi = &g * psi;
    (unstack(spec, &(&sv - &gpsi)), unstack(spec, &gpsi))
}

pub fn random_scalar(spec: GridSpec, rng: &mut StdRng) -> ScalarField {
    ScalarField::from_fn(spec, |_, _| rng.random_range(-1.0..1.0))
}

pub fn random_vector(spec: GridSpec, rng: &mut StdRng) -> VectorField {
    VectorField::new(random_scalar(spec, rng), random_scalar(spec, rng)).unwrap()
}

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

pub fn max_abs_diff(a: &VectorField, b: &VectorField) -> f64 {
    a.u1()
        .values()
        .iter()
        .chain(a.u2().values())
        .zip(b.u1().values().iter().chain(b.u2().values()))
        .fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}
