//! Smooth exact solutions used to measure the scheme's residues.

use crate::sim::{FluidParams, TaylorGreen};

/// An exact solution of the continuous coupled problem, possibly with an
/// added body force.
pub trait ManufacturedSolution: Sync {
    fn fluid(&self) -> FluidParams;

    fn velocity(&self, x: [f64; 2], t: f64) -> [f64; 2];

    fn pressure(&self, x: [f64; 2], t: f64) -> f64;

    /// Particle path, if the solution prescribes one.
    fn particle(&self, _t: f64) -> Option<[f64; 2]> {
        None
    }

    /// Force on the particle at position `x`.
    fn particle_force(&self, _x: [f64; 2]) -> [f64; 2] {
        [0.0, 0.0]
    }

    /// Extra body force density needed to make the solution exact.
    fn body_force(&self, _x: [f64; 2], _t: f64) -> [f64; 2] {
        [0.0, 0.0]
    }
}

impl ManufacturedSolution for TaylorGreen {
    fn fluid(&self) -> FluidParams {
        FluidParams {
            rho: self.rho,
            mu: self.nu * self.rho,
        }
    }

    fn velocity(&self, x: [f64; 2], t: f64) -> [f64; 2] {
        TaylorGreen::velocity(self, x, t)
    }

    fn pressure(&self, x: [f64; 2], t: f64) -> f64 {
        TaylorGreen::pressure(self, x, t)
    }
}

/// Constant flow carrying a force-free particle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformFlow {
    pub fluid: FluidParams,
    pub velocity: [f64; 2],
    pub pressure: f64,
    pub x0: [f64; 2],
}

impl ManufacturedSolution for UniformFlow {
    fn fluid(&self) -> FluidParams {
        self.fluid
    }

    fn velocity(&self, _x: [f64; 2], _t: f64) -> [f64; 2] {
        self.velocity
    }

    fn pressure(&self, _x: [f64; 2], _t: f64) -> f64 {
        self.pressure
    }

    fn particle(&self, t: f64) -> Option<[f64; 2]> {
        Some([self.x0[0] + self.velocity[0] * t, self.x0[1] + self.velocity[1] * t])
    }
}

/// Spatially uniform flow rotating in time, `U(t) = U₀ (cos ωt, sin ωt)`,
/// driven by the body force `ρ U'(t)`. The particle follows
/// `X(t) = X₀ + ∫₀ᵗ U`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotatingUniformFlow {
    pub fluid: FluidParams,
    pub speed: f64,
    pub omega: f64,
    pub x0: [f64; 2],
}

impl ManufacturedSolution for RotatingUniformFlow {
    fn fluid(&self) -> FluidParams {
        self.fluid
    }

    fn velocity(&self, _x: [f64; 2], t: f64) -> [f64; 2] {
        let (s, c) = (self.omega * t).sin_cos();
        [self.speed * c, self.speed * s]
    }

    fn pressure(&self, _x: [f64; 2], _t: f64) -> f64 {
        0.0
    }

    fn particle(&self, t: f64) -> Option<[f64; 2]> {
        let (s, c) = (self.omega * t).sin_cos();
        let r = self.speed / self.omega;
        Some([self.x0[0] + r * s, self.x0[1] + r * (1.0 - c)])
    }

    fn body_force(&self, _x: [f64; 2], t: f64) -> [f64; 2] {
        let (s, c) = (self.omega * t).sin_cos();
        let a = self.fluid.rho * self.speed * self.omega;
        [-a * s, a * c]
    }
}
