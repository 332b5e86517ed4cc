//! Consistency residues: the exact solution substituted into the scheme.

use super::manufactured::ManufacturedSolution;
use crate::error::Result;
use crate::grid::{dminus_grad, div0, grad0, laplacian5, norm, GridSpec, ScalarField, VectorField};
use crate::kernel::Kernel;
use crate::sim::advection;
use crate::spectral::SpectralSolver;

#[derive(Debug, Clone)]
pub struct ResidueFields {
    /// Momentum residue.
    pub tau: VectorField,
    /// Incompressibility residue at the new time level.
    pub eta: ScalarField,
    /// Particle-advection residue; absent if the solution has no particle path.
    pub xi: Option<[f64; 2]>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidueNorms {
    pub tau: f64,
    pub eta: f64,
    /// `‖D⁻η‖` over both directions.
    pub eta_grad: f64,
    pub xi: Option<f64>,
}

impl ResidueFields {
    pub fn norms(&self) -> ResidueNorms {
        ResidueNorms {
            tau: norm(&self.tau),
            eta: norm(&self.eta),
            eta_grad: norm(&dminus_grad(&self.eta)),
            xi: self.xi.map(|v| v[0].hypot(v[1])),
        }
    }
}

struct Exact {
    u0: VectorField,
    u1: VectorField,
    p1: ScalarField,
    forcing: VectorField,
    x: Option<([f64; 2], [f64; 2])>,
}

/// Exact data at `t` and `t + dt`, plus the total forcing density at `t`.
fn sample_exact(ms: &dyn ManufacturedSolution, spec: GridSpec, dt: f64, t: f64, kern: &Kernel) -> Result<Exact> {
    let u0 = VectorField::sample(spec, |x| ms.velocity(x, t));
    let u1 = VectorField::sample(spec, |x| ms.velocity(x, t + dt));
    let p1 = ScalarField::sample(spec, |x| ms.pressure(x, t + dt));
    let mut forcing = VectorField::sample(spec, |x| ms.body_force(x, t));
    let x = match (ms.particle(t), ms.particle(t + dt)) {
        (Some(a), Some(b)) => Some((a, b)),
        _ => None,
    };
    if let Some((xn, _)) = x {
        forcing.axpy(1.0, &kern.spread(ms.particle_force(xn), xn, spec)?);
    }
    Ok(Exact { u0, u1, p1, forcing, x })
}

/// Residues from their defining formulas.
pub fn residue_fields(
    ms: &dyn ManufacturedSolution,
    spec: GridSpec,
    dt: f64,
    t: f64,
    kern: &Kernel,
) -> Result<ResidueFields> {
    let fluid = ms.fluid();
    let ex = sample_exact(ms, spec, dt, t, kern)?;

    let mut tau = &(&ex.u1 - &ex.u0) * (fluid.rho / dt);
    tau.axpy(fluid.rho, &advection(&ex.u0));
    tau.axpy(1.0, &grad0(&ex.p1));
    tau.axpy(-fluid.mu, &ex.u1.map_components(laplacian5));
    tau.axpy(-1.0, &ex.forcing);

    let xi = match ex.x {
        Some((xn, xn1)) => {
            let v = kern.interpolate(&ex.u0, xn)?;
            Some([(xn1[0] - xn[0]) / dt - v[0], (xn1[1] - xn[1]) / dt - v[1]])
        }
        None => None,
    };
    Ok(ResidueFields {
        tau,
        eta: div0(&ex.u1),
        xi,
    })
}

/// Residues as the defect between the exact new state and one step of the
/// scheme started from exact data.
pub fn residue_fields_via_scheme(
    ms: &dyn ManufacturedSolution,
    spec: GridSpec,
    dt: f64,
    t: f64,
    kern: &Kernel,
) -> Result<ResidueFields> {
    let fluid = ms.fluid();
    let ex = sample_exact(ms, spec, dt, t, kern)?;

    let mut w = ex.u0.clone();
    w.axpy(-dt, &advection(&ex.u0));
    w.axpy(dt / fluid.rho, &ex.forcing);
    let (u_scheme, gradp_scheme) = SpectralSolver::new(spec).stokes_solve(&w, dt, fluid.mu, fluid.rho)?;

    let diff = &ex.u1 - &u_scheme;
    let mut tau = &diff * (fluid.rho / dt);
    tau.axpy(-fluid.mu, &diff.map_components(laplacian5));
    tau.axpy(1.0, &(&grad0(&ex.p1) - &gradp_scheme));

    let xi = match ex.x {
        Some((xn, xn1)) => {
            let v = kern.interpolate(&ex.u0, xn)?;
            let stepped = [xn[0] + dt * v[0], xn[1] + dt * v[1]];
            Some([(xn1[0] - stepped[0]) / dt, (xn1[1] - stepped[1]) / dt])
        }
        None => None,
    };
    Ok(ResidueFields {
        tau,
        eta: div0(&diff),
        xi,
    })
}

pub fn residues(
    ms: &dyn ManufacturedSolution,
    spec: GridSpec,
    dt: f64,
    t: f64,
    kern: &Kernel,
) -> Result<ResidueNorms> {
    Ok(residue_fields(ms, spec, dt, t, kern)?.norms())
}
