//! Time stepping: explicit advection and spring forcing, an implicit
//! viscous/pressure solve, and particle advection with the old velocity.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::grid::snapshot::{write_field_csv, write_snapshot};
use crate::grid::{d0, div0, norm, vorticity, Axis, GridSpec, ScalarField, VectorField};
use crate::kernel::{Kernel, ParticleState};
use crate::spectral::SpectralSolver;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluidParams {
    /// Density, kg/m³.
    pub rho: f64,
    /// Dynamic viscosity, kg/(m·s).
    pub mu: f64,
}

impl FluidParams {
    pub fn new(rho: f64, mu: f64) -> Result<Self> {
        if !(rho.is_finite() && rho > 0.0) {
            return Err(Error::param("rho", format!("must be positive, got {rho}")));
        }
        if !(mu.is_finite() && mu >= 0.0) {
            return Err(Error::param("mu", format!("must be non-negative, got {mu}")));
        }
        Ok(FluidParams { rho, mu })
    }

    pub fn nu(&self) -> f64 {
        self.mu / self.rho
    }
}

/// Generalized Taylor–Green vortex
///
/// ```text
/// u₁ =  A sin(a x₁) cos(b x₂) E(t)
/// u₂ = -(A a / b) cos(a x₁) sin(b x₂) E(t)
/// p  =  ρ A² E(t)² / 4 · (cos(2a x₁) + (a²/b²) cos(2b x₂))
/// ```
///
/// with `a = 2π m₁/L₁`, `b = 2π m₂/L₂` and `E(t) = exp(-ν (a² + b²) t)`.
/// An exact Navier–Stokes solution for any mode pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaylorGreen {
    pub amplitude: f64,
    pub a: f64,
    pub b: f64,
    pub nu: f64,
    pub rho: f64,
}

impl TaylorGreen {
    pub fn new(spec: GridSpec, fluid: FluidParams, amplitude: f64, modes: [u32; 2]) -> Result<Self> {
        if modes[0] == 0 || modes[1] == 0 {
            return Err(Error::param("modes", "Taylor–Green mode numbers must be non-zero"));
        }
        if !amplitude.is_finite() {
            return Err(Error::param("amplitude", "must be finite"));
        }
        let (l1, l2) = spec.lengths();
        Ok(TaylorGreen {
            amplitude,
            a: 2.0 * std::f64::consts::PI * modes[0] as f64 / l1,
            b: 2.0 * std::f64::consts::PI * modes[1] as f64 / l2,
            nu: fluid.nu(),
            rho: fluid.rho,
        })
    }

    fn decay(&self, t: f64) -> f64 {
        (-self.nu * (self.a * self.a + self.b * self.b) * t).exp()
    }

    pub fn velocity(&self, x: [f64; 2], t: f64) -> [f64; 2] {
        let e = self.amplitude * self.decay(t);
        let (sa, ca) = (self.a * x[0]).sin_cos();
        let (sb, cb) = (self.b * x[1]).sin_cos();
        [e * sa * cb, -e * self.a / self.b * ca * sb]
    }

    pub fn pressure(&self, x: [f64; 2], t: f64) -> f64 {
        let e = self.amplitude * self.decay(t);
        let r = self.a / self.b;
        self.rho * e * e / 4.0 * ((2.0 * self.a * x[0]).cos() + r * r * (2.0 * self.b * x[1]).cos())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialCondition {
    /// `u₁ ≡ u1`, `u₂ ≡ v0`.
    Uniform { u1: f64 },
    TaylorGreen { amplitude: f64, modes: [u32; 2] },
    Field(VectorField),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SnapshotFormat {
    Binary,
    Csv,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
    /// Sample and snapshot every `cadence` steps.
    pub cadence: usize,
    pub formats: Vec<SnapshotFormat>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: None,
            cadence: 1,
            formats: vec![SnapshotFormat::Binary],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub spec: GridSpec,
    pub fluid: FluidParams,
    pub particle: ParticleState,
    pub kern: Kernel,
    pub dt: f64,
    pub t_end: f64,
    /// Pins the mean of `u₁` every step when set.
    pub u_mean: Option<f64>,
    pub v0: f64,
    pub initial: InitialCondition,
    pub output: OutputConfig,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::param("dt", format!("must be positive, got {}", self.dt)));
        }
        if !(self.t_end.is_finite() && self.t_end >= 0.0) {
            return Err(Error::param("t_end", format!("must be non-negative, got {}", self.t_end)));
        }
        if self.output.cadence == 0 {
            return Err(Error::param("cadence", "must be at least 1"));
        }
        if let Some(u) = self.u_mean {
            if !u.is_finite() {
                return Err(Error::param("u_mean", "must be finite"));
            }
        }
        let p = &self.particle;
        if !(p.x.iter().chain(&p.x0).all(|v| v.is_finite()) && p.k_spring.is_finite()) {
            return Err(Error::param("particle", "position and stiffness must be finite"));
        }
        if let InitialCondition::Field(u) = &self.initial {
            if u.spec() != self.spec {
                return Err(Error::param("initial", "initial field is on a different grid"));
            }
        }
        self.kern.check_grid(self.spec)?;
        Ok(())
    }

    /// Number of steps until `n·dt ≥ t_end`.
    pub fn n_steps(&self) -> usize {
        let r = self.t_end / self.dt;
        let nearest = r.round();
        if (r - nearest).abs() <= 1e-9 * nearest.max(1.0) {
            nearest as usize
        } else {
            r.ceil() as usize
        }
    }

    pub fn taylor_green(&self) -> Option<TaylorGreen> {
        match self.initial {
            InitialCondition::TaylorGreen { amplitude, modes } => {
                TaylorGreen::new(self.spec, self.fluid, amplitude, modes).ok()
            }
            _ => None,
        }
    }

    pub fn initial_velocity(&self) -> Result<VectorField> {
        Ok(match &self.initial {
            InitialCondition::Uniform { u1 } => VectorField::constant(self.spec, [*u1, self.v0]),
            InitialCondition::TaylorGreen { amplitude, modes } => {
                let tg = TaylorGreen::new(self.spec, self.fluid, *amplitude, *modes)?;
                VectorField::sample(self.spec, |x| tg.velocity(x, 0.0))
            }
            InitialCondition::Field(u) => u.clone(),
        })
    }

    /// `Re = ρ u_mean 2R / μ` with `R` the kernel's effective radius.
    pub fn reynolds(&self) -> Option<f64> {
        let u = self.u_mean?;
        if self.fluid.mu == 0.0 {
            return None;
        }
        Some(self.fluid.rho * u * 2.0 * self.kern.effective_radius() / self.fluid.mu)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Diagnostics {
    /// `‖D⁰·u‖ / ‖u‖`, or the absolute norm when `u = 0`.
    pub div_residual: f64,
    pub mean_u1: f64,
    /// `½ ρ Σ |u|² h²`, per unit depth.
    pub kinetic_energy: f64,
}

impl Diagnostics {
    pub fn of(u: &VectorField, rho: f64) -> Self {
        let spec = u.spec();
        let un = norm(u);
        let dn = norm(&div0(u));
        let (l1, l2) = spec.lengths();
        Diagnostics {
            div_residual: if un > 0.0 { dn / un } else { dn },
            mean_u1: u.u1().mean(),
            kinetic_energy: 0.5 * rho * un * un * l1 * l2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub step: usize,
    pub time: f64,
    pub u: VectorField,
    /// Particle position, unwrapped.
    pub x: [f64; 2],
    pub diagnostics: Diagnostics,
}

impl SimState {
    pub fn initial(cfg: &SimConfig) -> Result<Self> {
        let u = cfg.initial_velocity()?;
        let diagnostics = Diagnostics::of(&u, cfg.fluid.rho);
        Ok(SimState {
            step: 0,
            time: 0.0,
            u,
            x: cfg.particle.x,
            diagnostics,
        })
    }
}

/// `(u·D⁰)u`, componentwise `Σ_β u_β D⁰_β u_α`.
pub fn advection(u: &VectorField) -> VectorField {
    u.map_components(|ua| {
        let mut out = d0(ua, Axis::X1).zip_map(u.u1(), |d, v| d * v);
        let second = d0(ua, Axis::X2).zip_map(u.u2(), |d, v| d * v);
        out.axpy(1.0, &second);
        out
    })
}

/// `-k (X - X₀)`, no periodic wrap.
pub fn spring_force(p: &ParticleState) -> [f64; 2] {
    [-p.k_spring * (p.x[0] - p.x0[0]), -p.k_spring * (p.x[1] - p.x0[1])]
}

/// Reusable stepper holding the planned transforms for one grid.
#[derive(Debug, Clone)]
pub struct Stepper {
    cfg: SimConfig,
    solver: SpectralSolver,
}

impl Stepper {
    pub fn new(cfg: SimConfig) -> Result<Self> {
        cfg.validate()?;
        let solver = SpectralSolver::new(cfg.spec);
        Ok(Stepper { cfg, solver })
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    pub fn solver(&self) -> &SpectralSolver {
        &self.solver
    }

    pub fn step(&self, state: &SimState) -> Result<SimState> {
        let cfg = &self.cfg;
        let (dt, rho) = (cfg.dt, cfg.fluid.rho);
        let particle = ParticleState {
            x: state.x,
            ..cfg.particle
        };
        let force = spring_force(&particle);
        let mut w = state.u.clone();
        w.axpy(-dt, &advection(&state.u));
        w.axpy(dt / rho, &cfg.kern.spread(force, state.x, cfg.spec)?);
        let (u_next, _) = self
            .solver
            .stokes_solve_pinned(&w, dt, cfg.fluid.mu, rho, cfg.u_mean)?;

        let vel = cfg.kern.interpolate(&state.u, state.x)?;
        let x_next = [state.x[0] + dt * vel[0], state.x[1] + dt * vel[1]];

        let step = state.step + 1;
        let time = step as f64 * dt;
        if !u_next.is_finite() {
            return Err(Error::Divergence { step, time, what: "velocity" });
        }
        if !(x_next[0].is_finite() && x_next[1].is_finite()) {
            return Err(Error::Divergence { step, time, what: "particle position" });
        }
        let diagnostics = Diagnostics::of(&u_next, rho);
        Ok(SimState {
            step,
            time,
            u: u_next,
            x: x_next,
            diagnostics,
        })
    }
}

pub fn step(state: &SimState, cfg: &SimConfig) -> Result<SimState> {
    Stepper::new(cfg.clone())?.step(state)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectorySample {
    pub step: usize,
    pub t: f64,
    pub x: [f64; 2],
    /// Interpolated fluid velocity at the particle.
    pub velocity: [f64; 2],
    pub diagnostics: Diagnostics,
}

pub const TRAJECTORY_HEADER: &str = "t,X1,X2,U1,U2,mean_u1,div_residual,kinetic_energy";

impl TrajectorySample {
    fn of(state: &SimState, kern: &Kernel) -> Result<Self> {
        Ok(TrajectorySample {
            step: state.step,
            t: state.time,
            x: state.x,
            velocity: kern.interpolate(&state.u, state.x)?,
            diagnostics: state.diagnostics,
        })
    }

    pub fn csv_line(&self) -> String {
        let d = &self.diagnostics;
        format!(
            "{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
            self.t, self.x[0], self.x[1], self.velocity[0], self.velocity[1], d.mean_u1, d.div_residual, d.kinetic_energy
        )
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub samples: Vec<TrajectorySample>,
    pub final_state: SimState,
    /// Files written, in creation order.
    pub files: Vec<PathBuf>,
}

struct Writer {
    dir: PathBuf,
    formats: Vec<SnapshotFormat>,
    trajectory: BufWriter<File>,
    trajectory_path: PathBuf,
    files: Vec<PathBuf>,
}

impl Writer {
    fn create(dir: &Path, formats: &[SnapshotFormat]) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let trajectory_path = dir.join("trajectory.csv");
        let file = File::create(&trajectory_path).map_err(|e| Error::io(&trajectory_path, e))?;
        let mut w = Writer {
            dir: dir.to_path_buf(),
            formats: formats.to_vec(),
            trajectory: BufWriter::new(file),
            trajectory_path: trajectory_path.clone(),
            files: vec![trajectory_path],
        };
        w.line(TRAJECTORY_HEADER)?;
        Ok(w)
    }

    fn line(&mut self, text: &str) -> Result<()> {
        writeln!(self.trajectory, "{text}").map_err(|e| Error::io(&self.trajectory_path, e))
    }

    fn snapshot(&mut self, state: &SimState) -> Result<()> {
        let vort = vorticity(&state.u);
        let channels: [(&str, &ScalarField); 3] =
            [("u1", state.u.u1()), ("u2", state.u.u2()), ("vorticity", &vort)];
        for format in self.formats.clone() {
            match format {
                SnapshotFormat::Binary => {
                    let path = self.dir.join(format!("snapshot_{:06}.bin", state.step));
                    write_snapshot(&path, &channels)?;
                    self.files.push(path);
                }
                SnapshotFormat::Csv => {
                    for (name, field) in channels {
                        let path = self.dir.join(format!("snapshot_{:06}_{name}.csv", state.step));
                        write_field_csv(&path, field)?;
                        self.files.push(path);
                    }
                }
            }
        }
        Ok(())
    }

    fn finish(mut self) -> Result<Vec<PathBuf>> {
        self.trajectory
            .flush()
            .map_err(|e| Error::io(&self.trajectory_path, e))?;
        Ok(self.files)
    }
}

/// Step until `n·dt ≥ t_end`, sampling every `cadence` steps and at the end.
pub fn run(cfg: &SimConfig) -> Result<RunOutput> {
    let stepper = Stepper::new(cfg.clone())?;
    let n_steps = cfg.n_steps();
    let cadence = cfg.output.cadence;
    let mut writer = match &cfg.output.dir {
        Some(dir) => Some(Writer::create(dir, &cfg.output.formats)?),
        None => None,
    };

    let mut state = SimState::initial(cfg)?;
    let mut samples = Vec::with_capacity(n_steps / cadence + 2);
    let mut record = |state: &SimState, writer: &mut Option<Writer>| -> Result<()> {
        let sample = TrajectorySample::of(state, &cfg.kern)?;
        if let Some(w) = writer.as_mut() {
            w.line(&sample.csv_line())?;
            w.snapshot(state)?;
        }
        samples.push(sample);
        Ok(())
    };

    record(&state, &mut writer)?;
    while state.step < n_steps {
        state = match stepper.step(&state) {
            Ok(s) => s,
            Err(e) => {
                if let Some(w) = writer {
                    // keep what was recorded before the failure
                    let _ = w.finish();
                }
                return Err(e);
            }
        };
        if state.step % cadence == 0 || state.step == n_steps {
            record(&state, &mut writer)?;
        }
    }
    let files = match writer {
        Some(w) => w.finish()?,
        None => Vec::new(),
    };
    Ok(RunOutput {
        samples,
        final_state: state,
        files,
    })
}
