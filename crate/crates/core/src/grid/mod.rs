//! Periodic uniform grids and the gridfunctions that live on them.
//!
//! Values are stored row-major with `i` (the x₁ index) fastest, so node
//! `(i, j)` sits at `values[j * n1 + i]`. Periodicity is handled by index
//! arithmetic; there are no ghost cells.

mod ops;
pub mod snapshot;

use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};

pub use ops::{
    d0, div0, dminus, dminus_grad, dplus, dplus_div, grad0, laplacian5, vorticity, Axis,
};

/// Geometry of a periodic rectangular grid with square cells of side `h`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    n1: usize,
    n2: usize,
    h: f64,
}

impl GridSpec {
    pub const MIN_NODES: usize = 4;

    pub fn new(n1: usize, n2: usize, h: f64) -> Result<Self> {
        if n1 < Self::MIN_NODES || n2 < Self::MIN_NODES {
            return Err(Error::InvalidGrid(format!(
                "need at least {} nodes per axis, got {n1} x {n2}",
                Self::MIN_NODES
            )));
        }
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::InvalidGrid(format!("spacing h = {h} must be finite and positive")));
        }
        let spec = GridSpec { n1, n2, h };
        let (l1, l2) = spec.lengths();
        if !(l1.is_finite() && l2.is_finite()) {
            return Err(Error::InvalidGrid("domain lengths overflow".into()));
        }
        Ok(spec)
    }

    /// Square cells on an `l1 x l2` domain; `l1 / n1` must equal `l2 / n2`.
    pub fn from_lengths(l1: f64, l2: f64, n1: usize, n2: usize) -> Result<Self> {
        let h1 = l1 / n1 as f64;
        let h2 = l2 / n2 as f64;
        if (h1 - h2).abs() > 1e-12 * h1.abs().max(h2.abs()) {
            return Err(Error::InvalidGrid(format!(
                "cells are not square: L1/n1 = {h1}, L2/n2 = {h2}"
            )));
        }
        GridSpec::new(n1, n2, h1)
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn n2(&self) -> usize {
        self.n2
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn len(&self) -> usize {
        self.n1 * self.n2
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn lengths(&self) -> (f64, f64) {
        (self.n1 as f64 * self.h, self.n2 as f64 * self.h)
    }

    pub fn n(&self, axis: Axis) -> usize {
        match axis {
            Axis::X1 => self.n1,
            Axis::X2 => self.n2,
        }
    }

    pub fn length(&self, axis: Axis) -> f64 {
        self.n(axis) as f64 * self.h
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.n1 + i
    }

    /// Node coordinates `(i h, j h)`.
    #[inline]
    pub fn node(&self, i: usize, j: usize) -> [f64; 2] {
        [i as f64 * self.h, j as f64 * self.h]
    }

    /// Half the node count per axis and twice the spacing. Fails on odd `n`.
    pub fn coarsen(&self) -> Result<GridSpec> {
        if !self.n1.is_multiple_of(2) || !self.n2.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!(
                "{} x {} grid cannot be coarsened by two",
                self.n1, self.n2
            )));
        }
        GridSpec::new(self.n1 / 2, self.n2 / 2, 2.0 * self.h)
    }

    pub fn refine(&self) -> Result<GridSpec> {
        GridSpec::new(self.n1 * 2, self.n2 * 2, 0.5 * self.h)
    }
}

/// Anything made of one or more scalar channels on a common grid.
pub trait Field {
    fn spec(&self) -> GridSpec;
    fn channels(&self) -> &[ScalarField];
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    spec: GridSpec,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(spec: GridSpec) -> Self {
        Self::constant(spec, 0.0)
    }

    pub fn constant(spec: GridSpec, value: f64) -> Self {
        ScalarField {
            spec,
            values: vec![value; spec.len()],
        }
    }

    pub fn from_values(spec: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != spec.len() {
            return Err(Error::InvalidGrid(format!(
                "expected {} values for a {} x {} grid, got {}",
                spec.len(),
                spec.n1,
                spec.n2,
                values.len()
            )));
        }
        Ok(ScalarField { spec, values })
    }

    /// Fill from a function of the node indices.
    pub fn from_fn(spec: GridSpec, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut values = Vec::with_capacity(spec.len());
        for j in 0..spec.n2 {
            for i in 0..spec.n1 {
                values.push(f(i, j));
            }
        }
        ScalarField { spec, values }
    }

    /// Sample a function of position at every node.
    pub fn sample(spec: GridSpec, mut f: impl FnMut([f64; 2]) -> f64) -> Self {
        Self::from_fn(spec, |i, j| f(spec.node(i, j)))
    }

    pub fn spec(&self) -> GridSpec {
        self.spec
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.spec.index(i, j)]
    }

    /// Periodic accessor: indices are reduced modulo the grid size.
    #[inline]
    pub fn get(&self, i: isize, j: isize) -> f64 {
        let i = i.rem_euclid(self.spec.n1 as isize) as usize;
        let j = j.rem_euclid(self.spec.n2 as isize) as usize;
        self.at(i, j)
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        let k = self.spec.index(i, j);
        self.values[k] = value;
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        ScalarField {
            spec: self.spec,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> Self {
        assert_eq!(self.spec, other.spec, "fields live on different grids");
        ScalarField {
            spec: self.spec,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    /// `self += alpha * other`
    pub fn axpy(&mut self, alpha: f64, other: &ScalarField) {
        assert_eq!(self.spec, other.spec, "fields live on different grids");
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += alpha * b;
        }
    }

    /// Injection onto the grid with half the nodes per axis (coincident nodes).
    pub fn restrict(&self) -> Result<ScalarField> {
        let coarse = self.spec.coarsen()?;
        Ok(ScalarField::from_fn(coarse, |i, j| self.at(2 * i, 2 * j)))
    }
}

impl Field for ScalarField {
    fn spec(&self) -> GridSpec {
        self.spec
    }

    fn channels(&self) -> &[ScalarField] {
        std::slice::from_ref(self)
    }
}

/// Two-component gridfunction; both components share one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    comps: [ScalarField; 2],
}

impl VectorField {
    pub fn new(u1: ScalarField, u2: ScalarField) -> Result<Self> {
        if u1.spec != u2.spec {
            return Err(Error::InvalidGrid(
                "vector components are defined on different grids".into(),
            ));
        }
        Ok(VectorField { comps: [u1, u2] })
    }

    pub fn zeros(spec: GridSpec) -> Self {
        Self::constant(spec, [0.0, 0.0])
    }

    pub fn constant(spec: GridSpec, value: [f64; 2]) -> Self {
        VectorField {
            comps: [
                ScalarField::constant(spec, value[0]),
                ScalarField::constant(spec, value[1]),
            ],
        }
    }

    pub fn sample(spec: GridSpec, f: impl Fn([f64; 2]) -> [f64; 2]) -> Self {
        VectorField {
            comps: [
                ScalarField::sample(spec, |x| f(x)[0]),
                ScalarField::sample(spec, |x| f(x)[1]),
            ],
        }
    }

    pub(crate) fn from_parts(u1: ScalarField, u2: ScalarField) -> Self {
        debug_assert_eq!(u1.spec, u2.spec);
        VectorField { comps: [u1, u2] }
    }

    pub fn spec(&self) -> GridSpec {
        self.comps[0].spec
    }

    pub fn comp(&self, axis: Axis) -> &ScalarField {
        &self.comps[axis.index()]
    }

    pub fn comp_mut(&mut self, axis: Axis) -> &mut ScalarField {
        &mut self.comps[axis.index()]
    }

    pub fn u1(&self) -> &ScalarField {
        &self.comps[0]
    }

    pub fn u2(&self) -> &ScalarField {
        &self.comps[1]
    }

    pub fn into_components(self) -> (ScalarField, ScalarField) {
        let [a, b] = self.comps;
        (a, b)
    }

    pub fn is_finite(&self) -> bool {
        self.comps.iter().all(ScalarField::is_finite)
    }

    pub fn at(&self, i: usize, j: usize) -> [f64; 2] {
        [self.comps[0].at(i, j), self.comps[1].at(i, j)]
    }

    pub fn map_components(&self, f: impl Fn(&ScalarField) -> ScalarField) -> Self {
        VectorField::from_parts(f(&self.comps[0]), f(&self.comps[1]))
    }

    pub fn axpy(&mut self, alpha: f64, other: &VectorField) {
        self.comps[0].axpy(alpha, &other.comps[0]);
        self.comps[1].axpy(alpha, &other.comps[1]);
    }

    pub fn restrict(&self) -> Result<VectorField> {
        Ok(VectorField::from_parts(
            self.comps[0].restrict()?,
            self.comps[1].restrict()?,
        ))
    }
}

impl Field for VectorField {
    fn spec(&self) -> GridSpec {
        VectorField::spec(self)
    }

    fn channels(&self) -> &[ScalarField] {
        &self.comps
    }
}

/// Averaged inner product `(h² / (L1 L2)) Σ_x Σ_α a_α b_α`.
pub fn inner<F: Field>(a: &F, b: &F) -> f64 {
    let spec = a.spec();
    assert_eq!(spec, b.spec(), "fields live on different grids");
    let sum: f64 = a
        .channels()
        .iter()
        .zip(b.channels())
        .map(|(ca, cb)| ca.values.iter().zip(&cb.values).map(|(x, y)| x * y).sum::<f64>())
        .sum();
    sum / spec.len() as f64
}

/// Averaged 2-norm; a constant unit scalar field has norm 1 on any grid.
pub fn norm<F: Field>(a: &F) -> f64 {
    inner(a, a).sqrt()
}

macro_rules! impl_arith {
    ($ty:ident) => {
        impl Add for &$ty {
            type Output = $ty;
            fn add(self, rhs: &$ty) -> $ty {
                let mut out = self.clone();
                out.axpy(1.0, rhs);
                out
            }
        }

        impl Sub for &$ty {
            type Output = $ty;
            fn sub(self, rhs: &$ty) -> $ty {
                let mut out = self.clone();
                out.axpy(-1.0, rhs);
                out
            }
        }

        impl Neg for &$ty {
            type Output = $ty;
            fn neg(self) -> $ty {
                self * -1.0
            }
        }
    };
}

impl_arith!(ScalarField);
impl_arith!(VectorField);

impl Mul<f64> for &ScalarField {
    type Output = ScalarField;
    fn mul(self, rhs: f64) -> ScalarField {
        self.map(|v| v * rhs)
    }
}

impl Mul<f64> for &VectorField {
    type Output = VectorField;
    fn mul(self, rhs: f64) -> VectorField {
        self.map_components(|c| c * rhs)
    }
}
