//! The six-point C³ kernel `φ`, the tensor-product delta `δ_c`, and the
//! spread/interpolate pair that couples the particle to the grid.
//!
//! `φ` is not tabulated. For a shift `s ∈ [0, 1)` the six values
//! `φ(s - 3), …, φ(s + 2)` are the unique solution of
//!
//! * even-offset sum = odd-offset sum = 1/2,
//! * first and third moments = 0, second moment = `K`,
//! * sum of squares = `C`,
//!
//! where the first five conditions are linear. Eliminating them leaves one
//! unknown (`φ(s - 3)`) that solves a quadratic. `C` is fixed by requiring
//! `φ(-3) = 0` at `s = 0`, and the quadratic root is the branch through that
//! point.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::grid::{GridSpec, ScalarField, VectorField};

/// `K = 59/60 - √29/20`, the second moment that makes `φ` three times
/// continuously differentiable.
pub fn canonical_second_moment() -> f64 {
    59.0 / 60.0 - 29f64.sqrt() / 20.0
}

/// Offsets `m` of the unknowns `φ(s + m)` left after eliminating `φ(s - 3)`.
const OFFSETS: [f64; 5] = [-2.0, -1.0, 0.0, 1.0, 2.0];

/// Rows: even sum, odd sum, moments 1..3, evaluated at integer offsets.
fn reduced_matrix() -> [[f64; 5]; 5] {
    let mut a = [[0.0; 5]; 5];
    for (col, &m) in OFFSETS.iter().enumerate() {
        let even = (m as i64).rem_euclid(2) == 0;
        a[0][col] = if even { 1.0 } else { 0.0 };
        a[1][col] = if even { 0.0 } else { 1.0 };
        a[2][col] = m;
        a[3][col] = m * m;
        a[4][col] = m * m * m;
    }
    a
}

/// Gauss-Jordan inverse with partial pivoting.
fn invert5(mut a: [[f64; 5]; 5]) -> Option<[[f64; 5]; 5]> {
    let mut inv = [[0.0; 5]; 5];
    for (i, row) in inv.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for col in 0..5 {
        let pivot = (col..5).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))?;
        if a[pivot][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, pivot);
        inv.swap(col, pivot);
        let d = a[col][col];
        for k in 0..5 {
            a[col][k] /= d;
            inv[col][k] /= d;
        }
        for row in 0..5 {
            if row != col {
                let f = a[row][col];
                if f != 0.0 {
                    for k in 0..5 {
                        a[row][k] -= f * a[col][k];
                        inv[row][k] -= f * inv[col][k];
                    }
                }
            }
        }
    }
    Some(inv)
}

fn matvec5(m: &[[f64; 5]; 5], v: &[f64; 5]) -> [f64; 5] {
    let mut out = [0.0; 5];
    for (o, row) in out.iter_mut().zip(m) {
        *o = row.iter().zip(v).map(|(a, b)| a * b).sum();
    }
    out
}

fn dot5(a: &[f64; 5], b: &[f64; 5]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Constraint residuals of one set of six weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residuals {
    pub even_sum: f64,
    pub odd_sum: f64,
    pub first_moment: f64,
    pub second_moment: f64,
    pub third_moment: f64,
    /// Raw `Σ φ²`, not a residual.
    pub sum_sq: f64,
}

impl Residuals {
    pub fn max_linear(&self) -> f64 {
        [
            self.even_sum,
            self.odd_sum,
            self.first_moment,
            self.second_moment,
            self.third_moment,
        ]
        .iter()
        .fold(0.0, |m, r| m.max(r.abs()))
    }
}

/// The one-dimensional profile `φ` with support `(-3, 3)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhiProfile {
    k: f64,
    c: f64,
    a_inv: [[f64; 5]; 5],
    /// Coefficients of `φ(s - 3)` in the eliminated unknowns.
    q: [f64; 5],
    branch: f64,
}

static CANONICAL: OnceLock<PhiProfile> = OnceLock::new();

impl Default for PhiProfile {
    fn default() -> Self {
        *CANONICAL.get_or_init(|| {
            PhiProfile::with_second_moment(canonical_second_moment())
                .expect("canonical profile is constructible")
        })
    }
}

impl PhiProfile {
    pub fn new() -> Self {
        Self::default()
    }

    /// Build the profile for an arbitrary second moment. Only the canonical
    /// value yields a C³ function; other values are useful for fault tests.
    pub fn with_second_moment(k: f64) -> Result<Self> {
        if !k.is_finite() {
            return Err(Error::KernelConstruction(format!("second moment {k} is not finite")));
        }
        let a_inv = invert5(reduced_matrix())
            .ok_or_else(|| Error::KernelConstruction("singular moment system".into()))?;
        // φ(s - 3) enters the odd sum and the three moments at offset -3
        let t_col = [0.0, 1.0, -3.0, 9.0, -27.0];
        let q = matvec5(&a_inv, &t_col).map(|v| -v);
        let mut profile = PhiProfile {
            k,
            c: 0.0,
            a_inv,
            q,
            branch: 1.0,
        };
        let p0 = profile.particular(0.0);
        profile.c = dot5(&p0, &p0);
        let b0 = 2.0 * dot5(&p0, &q);
        if b0 == 0.0 {
            return Err(Error::KernelConstruction(
                "double root at s = 0; branch is ambiguous".into(),
            ));
        }
        profile.branch = b0.signum();
        // the discriminant is a low-degree polynomial in s; a dense scan is
        // enough to certify it stays positive
        for i in 0..=4096 {
            let s = i as f64 / 4096.0;
            profile.try_weights(s.min(1.0 - f64::EPSILON))?;
        }
        Ok(profile)
    }

    /// `K`
    pub fn second_moment(&self) -> f64 {
        self.k
    }

    /// `C = Σ_j φ(r - j)²`, the same for every `r`.
    pub fn sum_of_squares(&self) -> f64 {
        self.c
    }

    /// Solution of the linear constraints with `φ(s - 3) = 0`.
    fn particular(&self, s: f64) -> [f64; 5] {
        let rhs = [
            0.5,
            0.5,
            -s,
            self.k + s * s,
            -3.0 * s * self.k - s * s * s,
        ];
        matvec5(&self.a_inv, &rhs)
    }

    /// `(φ(s - 3), φ(s - 2), φ(s - 1), φ(s), φ(s + 1), φ(s + 2))` for `s ∈ [0, 1)`.
    pub fn try_weights(&self, s: f64) -> Result<[f64; 6]> {
        if !(0.0..1.0).contains(&s) {
            return Err(Error::param("s", format!("shift must lie in [0, 1), got {s}")));
        }
        let p = self.particular(s);
        let qa = 1.0 + dot5(&self.q, &self.q);
        let qb = 2.0 * dot5(&p, &self.q);
        let qc = dot5(&p, &p) - self.c;
        let disc = qb * qb - 4.0 * qa * qc;
        if disc < 0.0 {
            return Err(Error::KernelConstruction(format!(
                "negative discriminant {disc:e} at s = {s}"
            )));
        }
        // cancellation-free form of (-b + σ√d) / 2a
        let t = -2.0 * qc / (qb + self.branch * disc.sqrt());
        let mut w = [0.0; 6];
        w[0] = t;
        for (dst, (pi, qi)) in w[1..].iter_mut().zip(p.iter().zip(&self.q)) {
            *dst = pi + qi * t;
        }
        Ok(w)
    }

    pub fn weights(&self, s: f64) -> [f64; 6] {
        self.try_weights(s).expect("shift in [0, 1) on a validated profile")
    }

    /// `φ(x)`; zero for `|x| ≥ 3`.
    pub fn eval(&self, x: f64) -> f64 {
        if x.is_nan() || x.abs() >= 3.0 {
            return 0.0;
        }
        let fl = x.floor();
        let s = x - fl;
        // x - floor(x) can round up to 1.0 for tiny negative x
        let (s, fl) = if s >= 1.0 { (0.0, fl + 1.0) } else { (s, fl) };
        self.weights(s)[(fl as i64 + 3) as usize]
    }

    /// Constraint residuals at shift `s`, measured against this profile's `K`.
    pub fn residuals(&self, s: f64) -> Result<Residuals> {
        self.residuals_against(s, self.k)
    }

    pub fn residuals_against(&self, s: f64, k: f64) -> Result<Residuals> {
        let w = self.try_weights(s)?;
        let mut r = Residuals {
            even_sum: -0.5,
            odd_sum: -0.5,
            first_moment: 0.0,
            second_moment: -k,
            third_moment: 0.0,
            sum_sq: 0.0,
        };
        for (m, &wm) in w.iter().enumerate() {
            let offset = m as i64 - 3;
            let x = s + offset as f64;
            if offset.rem_euclid(2) == 0 {
                r.even_sum += wm;
            } else {
                r.odd_sum += wm;
            }
            r.first_moment += x * wm;
            r.second_moment += x * x * wm;
            r.third_moment += x * x * x * wm;
            r.sum_sq += wm * wm;
        }
        Ok(r)
    }
}

/// `φ(x)` for the canonical profile.
pub fn phi(x: f64) -> f64 {
    PhiProfile::default().eval(x)
}

pub fn phi_weights(s: f64) -> Result<[f64; 6]> {
    PhiProfile::default().try_weights(s)
}

/// `δ_c(x) = φ(x₁/c) φ(x₂/c) / c²`.
pub fn delta_c(profile: &PhiProfile, dx: [f64; 2], c: f64) -> f64 {
    profile.eval(dx[0] / c) * profile.eval(dx[1] / c) / (c * c)
}

/// One axis of the kernel footprint: node index, minimum-image displacement
/// `x - X`, and `φ((x - X)/c) / c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisWeight {
    pub index: usize,
    pub offset: f64,
    pub weight: f64,
}

/// `δ_c` restricted to the grid around one point.
#[derive(Debug, Clone)]
pub struct Footprint {
    pub axes: [Vec<AxisWeight>; 2],
}

impl Footprint {
    /// Iterate `(i, j, δ_c(x_ij - X), x_ij - X)` over touched nodes.
    pub fn nodes(&self) -> impl Iterator<Item = (usize, usize, f64, [f64; 2])> + '_ {
        self.axes[1].iter().flat_map(move |b| {
            self.axes[0]
                .iter()
                .map(move |a| (a.index, b.index, a.weight * b.weight, [a.offset, b.offset]))
        })
    }
}

/// The kernel `δ_c` with physical width `c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kernel {
    profile: PhiProfile,
    c: f64,
}

impl Kernel {
    pub fn new(c: f64) -> Result<Self> {
        Self::with_profile(PhiProfile::default(), c)
    }

    pub fn with_profile(profile: PhiProfile, c: f64) -> Result<Self> {
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::param("c", format!("kernel width must be positive, got {c}")));
        }
        Ok(Kernel { profile, c })
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn profile(&self) -> &PhiProfile {
        &self.profile
    }

    pub fn delta(&self, dx: [f64; 2]) -> f64 {
        delta_c(&self.profile, dx, self.c)
    }

    /// `R = c √(2K)`
    pub fn effective_radius(&self) -> f64 {
        self.c * (2.0 * self.profile.second_moment()).sqrt()
    }

    /// Check that `c/h` is an integer and that the support fits the domain.
    /// Returns `c/h`.
    pub fn check_grid(&self, spec: GridSpec) -> Result<usize> {
        let ratio = self.c / spec.h();
        let m = ratio.round();
        if m < 1.0 || (ratio - m).abs() > 1e-9 * ratio.max(1.0) {
            return Err(Error::param(
                "c",
                format!("c/h = {ratio} must be a positive integer (c = {}, h = {})", self.c, spec.h()),
            ));
        }
        let (l1, l2) = spec.lengths();
        let footprint = 6.0 * self.c;
        if footprint >= l1.min(l2) {
            return Err(Error::DomainTooSmall {
                footprint,
                min_side: l1.min(l2),
            });
        }
        Ok(m as usize)
    }

    fn axis_weights(&self, x: f64, n: usize, h: f64) -> Vec<AxisWeight> {
        let len = n as f64 * h;
        let xw = x.rem_euclid(len);
        let reach = 3.0 * self.c;
        let lo = ((xw - reach) / h).floor() as i64;
        let hi = ((xw + reach) / h).ceil() as i64;
        let mut out = Vec::with_capacity((hi - lo + 1) as usize);
        for i in lo..=hi {
            let offset = i as f64 * h - xw;
            if offset.abs() < reach {
                let weight = self.profile.eval(offset / self.c) / self.c;
                out.push(AxisWeight {
                    index: i.rem_euclid(n as i64) as usize,
                    offset,
                    weight,
                });
            }
        }
        out
    }

    /// Grid footprint of `δ_c(· - X)` with periodic minimum-image wrap.
    pub fn footprint(&self, spec: GridSpec, x: [f64; 2]) -> Result<Footprint> {
        self.check_grid(spec)?;
        if !(x[0].is_finite() && x[1].is_finite()) {
            return Err(Error::param("X", "particle position is not finite"));
        }
        Ok(Footprint {
            axes: [
                self.axis_weights(x[0], spec.n1(), spec.h()),
                self.axis_weights(x[1], spec.n2(), spec.h()),
            ],
        })
    }

    /// Force density `F δ_c(x - X)` on the grid.
    pub fn spread(&self, force: [f64; 2], x: [f64; 2], spec: GridSpec) -> Result<VectorField> {
        let fp = self.footprint(spec, x)?;
        let mut f1 = ScalarField::zeros(spec);
        let mut f2 = ScalarField::zeros(spec);
        if force != [0.0, 0.0] {
            for (i, j, d, _) in fp.nodes() {
                f1.set(i, j, force[0] * d);
                f2.set(i, j, force[1] * d);
            }
        }
        VectorField::new(f1, f2)
    }

    /// `Σ_x u(x) δ_c(x - X) h²`
    pub fn interpolate(&self, u: &VectorField, x: [f64; 2]) -> Result<[f64; 2]> {
        let spec = u.spec();
        let fp = self.footprint(spec, x)?;
        let h2 = spec.h() * spec.h();
        let mut out = [0.0; 2];
        for (i, j, d, _) in fp.nodes() {
            let v = u.at(i, j);
            out[0] += v[0] * d * h2;
            out[1] += v[1] * d * h2;
        }
        Ok(out)
    }

    /// `Σ_x |x - X|² δ_c(x - X) h²`, which equals `2 K c²` for admissible grids.
    pub fn discrete_second_moment(&self, spec: GridSpec, x: [f64; 2]) -> Result<f64> {
        let fp = self.footprint(spec, x)?;
        let h2 = spec.h() * spec.h();
        Ok(fp
            .nodes()
            .map(|(_, _, d, off)| (off[0] * off[0] + off[1] * off[1]) * d * h2)
            .sum())
    }
}

pub fn spread(force: [f64; 2], x: [f64; 2], spec: GridSpec, kern: &Kernel) -> Result<VectorField> {
    kern.spread(force, x, spec)
}

pub fn interpolate(u: &VectorField, x: [f64; 2], kern: &Kernel) -> Result<[f64; 2]> {
    kern.interpolate(u, x)
}

pub fn effective_radius(kern: &Kernel) -> f64 {
    kern.effective_radius()
}

/// Immersed particle tethered by a linear spring.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParticleState {
    /// Current position; stored unwrapped.
    pub x: [f64; 2],
    /// Tether point.
    pub x0: [f64; 2],
    /// Spring stiffness, N/m² (force per unit length of cylinder).
    pub k_spring: f64,
}

impl ParticleState {
    pub fn at_rest(x0: [f64; 2], k_spring: f64) -> Self {
        ParticleState { x: x0, x0, k_spring }
    }
}
