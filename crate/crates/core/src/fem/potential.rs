//! Homogeneous-conductivity potentials for the trigonometric current basis.

use std::f64::consts::PI;

use nalgebra::Vector2;

use crate::error::{Error, Result};
use crate::geometry::Point;

/// Which member of the `(sin(j phi), cos(j phi))` pair a current is.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CurrentKind {
    Sine,
    Cosine,
}

impl CurrentKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            CurrentKind::Sine => "sin",
            CurrentKind::Cosine => "cos",
        }
    }
}

/// `z^k` as `(re, im)` by repeated multiplication.
#[inline]
fn complex_pow(x: f64, y: f64, k: usize) -> (f64, f64) {
    let (mut re, mut im) = (1.0, 0.0);
    for _ in 0..k {
        let t = re * x - im * y;
        im = re * y + im * x;
        re = t;
    }
    (re, im)
}

/// Boundary current `sin(j phi) / sqrt(pi)` or `cos(j phi) / sqrt(pi)`.
#[inline]
pub fn boundary_current(j: usize, kind: CurrentKind, angle: f64) -> f64 {
    let s = (j as f64 * angle).sin_cos();
    match kind {
        CurrentKind::Sine => s.0 / PI.sqrt(),
        CurrentKind::Cosine => s.1 / PI.sqrt(),
    }
}

/// Gradient of the homogeneous potential without argument checks.
///
/// With `f(z) = z^j / (j sqrt(pi))` the cosine potential is `Re f` and the
/// sine potential `Im f`, so the Cauchy-Riemann equations give the gradient
/// from `f'(z) = z^(j-1) / sqrt(pi)`.
#[inline]
pub fn potential_gradient(j: usize, kind: CurrentKind, p: &Point) -> Vector2<f64> {
    let (re, im) = complex_pow(p.x, p.y, j - 1);
    let s = 1.0 / PI.sqrt();
    match kind {
        CurrentKind::Cosine => Vector2::new(re * s, -im * s),
        CurrentKind::Sine => Vector2::new(im * s, re * s),
    }
}

/// Value and gradient of the potential `u0_j` generated by the current
/// `(j, kind)` for unit conductivity: `r^j sin(j phi) / (j sqrt(pi))` or the
/// cosine analogue.
pub fn homogeneous_potential(
    j: usize,
    kind: CurrentKind,
    p: &Point,
) -> Result<(f64, Vector2<f64>)> {
    if j == 0 {
        return Err(Error::Domain("current order j must be >= 1".into()));
    }
    if !(p.x.is_finite() && p.y.is_finite()) || p.coords.norm() > 1.0 + 1e-12 {
        return Err(Error::Domain(format!(
            "point ({}, {}) lies outside the closed unit disk",
            p.x, p.y
        )));
    }
    let (re, im) = complex_pow(p.x, p.y, j);
    let scale = 1.0 / (j as f64 * PI.sqrt());
    let value = match kind {
        CurrentKind::Cosine => re * scale,
        CurrentKind::Sine => im * scale,
    };
    Ok((value, potential_gradient(j, kind, p)))
}
