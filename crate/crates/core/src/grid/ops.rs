//! Centred, forward and backward differences with periodic wrap.

use super::{ScalarField, VectorField};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    X1,
    X2,
}

impl Axis {
    pub const BOTH: [Axis; 2] = [Axis::X1, Axis::X2];

    pub fn index(self) -> usize {
        match self {
            Axis::X1 => 0,
            Axis::X2 => 1,
        }
    }
}

/// Apply a three-point stencil `g(f(x - h e), f(x), f(x + h e))` along `axis`.
fn stencil(f: &ScalarField, axis: Axis, g: impl Fn(f64, f64, f64) -> f64) -> ScalarField {
    let spec = f.spec();
    let (n1, n2) = (spec.n1(), spec.n2());
    let v = f.values();
    let mut out = Vec::with_capacity(v.len());
    match axis {
        Axis::X1 => {
            for j in 0..n2 {
                let row = &v[j * n1..(j + 1) * n1];
                for i in 0..n1 {
                    let im = if i == 0 { n1 - 1 } else { i - 1 };
                    let ip = if i + 1 == n1 { 0 } else { i + 1 };
                    out.push(g(row[im], row[i], row[ip]));
                }
            }
        }
        Axis::X2 => {
            for j in 0..n2 {
                let jm = if j == 0 { n2 - 1 } else { j - 1 };
                let jp = if j + 1 == n2 { 0 } else { j + 1 };
                let (rm, r, rp) = (&v[jm * n1..], &v[j * n1..], &v[jp * n1..]);
                for i in 0..n1 {
                    out.push(g(rm[i], r[i], rp[i]));
                }
            }
        }
    }
    ScalarField { spec, values: out }
}

/// `(f(x + h e) - f(x - h e)) / 2h`
pub fn d0(f: &ScalarField, axis: Axis) -> ScalarField {
    let inv = 0.5 / f.spec().h();
    stencil(f, axis, |m, _, p| (p - m) * inv)
}

/// `(f(x + h e) - f(x)) / h`
pub fn dplus(f: &ScalarField, axis: Axis) -> ScalarField {
    let inv = 1.0 / f.spec().h();
    stencil(f, axis, |_, c, p| (p - c) * inv)
}

/// `(f(x) - f(x - h e)) / h`
pub fn dminus(f: &ScalarField, axis: Axis) -> ScalarField {
    let inv = 1.0 / f.spec().h();
    stencil(f, axis, |m, c, _| (c - m) * inv)
}

/// Five-point Laplacian `D⁺·D⁻`.
pub fn laplacian5(f: &ScalarField) -> ScalarField {
    let inv = 1.0 / (f.spec().h() * f.spec().h());
    let mut out = stencil(f, Axis::X1, |m, c, p| (p - 2.0 * c + m) * inv);
    out.axpy(1.0, &stencil(f, Axis::X2, |m, c, p| (p - 2.0 * c + m) * inv));
    out
}

pub fn div0(v: &VectorField) -> ScalarField {
    let mut out = d0(v.u1(), Axis::X1);
    out.axpy(1.0, &d0(v.u2(), Axis::X2));
    out
}

pub fn grad0(f: &ScalarField) -> VectorField {
    VectorField::from_parts(d0(f, Axis::X1), d0(f, Axis::X2))
}

/// Forward-difference divergence `D⁺·v`.
pub fn dplus_div(v: &VectorField) -> ScalarField {
    let mut out = dplus(v.u1(), Axis::X1);
    out.axpy(1.0, &dplus(v.u2(), Axis::X2));
    out
}

/// Backward-difference gradient `D⁻f`.
pub fn dminus_grad(f: &ScalarField) -> VectorField {
    VectorField::from_parts(dminus(f, Axis::X1), dminus(f, Axis::X2))
}

/// Centred curl `D⁰₁u₂ - D⁰₂u₁`.
pub fn vorticity(u: &VectorField) -> ScalarField {
    let mut out = d0(u.u2(), Axis::X1);
    out.axpy(-1.0, &d0(u.u1(), Axis::X2));
    out
}
