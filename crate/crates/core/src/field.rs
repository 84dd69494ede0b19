//! Sound pressure around a rigid sphere.
//!
//! For a unit point source at `(r_s, Ω_s)` and an evaluation point `(r, Ω)` with
//! `a <= r <= r_s` the pressure is
//!
//! ```text
//! p = Σ_n Σ_m i^{-(n+1)} k h_n(k r_s) 4π i^n [ j_n(kr) - j_n'(ka)/h_n'(ka) h_n(kr) ] Y_n^m(Ω_s)* Y_n^m(Ω)
//! ```
//!
//! which tends to `e^{-ikR}/R` (`R` the source distance) as the sphere shrinks.
//! The plane-wave solution drops the `i^{-(n+1)} k h_n(k r_s)` source factor and
//! has unit amplitude at the origin without the sphere. All Hankel functions
//! are of the second kind (`e^{+iωt}`).
//!
//! Both sums are evaluated through the addition theorem
//! `Σ_m Y_n^m(Ω_s)* Y_n^m(Ω) = (2n+1)/(4π) P_n(cos Θ)`, so a field is an
//! axisymmetric [`ModalExpansion`] about the source direction.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::sphmath::{legendre_sequence, Direction, Order, RadialSet};

/// Relative slack allowed when checking that a point lies on the sphere surface.
const SURFACE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidSphere {
    radius_m: f64,
    speed_of_sound_mps: f64,
}

impl RigidSphere {
    pub const DEFAULT_RADIUS_M: f64 = 0.1;
    pub const DEFAULT_SPEED_OF_SOUND_MPS: f64 = 343.0;

    pub fn new(radius_m: f64, speed_of_sound_mps: f64) -> Result<Self> {
        if !(radius_m.is_finite() && radius_m > 0.0) {
            return Err(Error::Domain(format!("sphere radius must be positive, got {radius_m}")));
        }
        if !(speed_of_sound_mps.is_finite() && speed_of_sound_mps > 0.0) {
            return Err(Error::Domain(format!(
                "speed of sound must be positive, got {speed_of_sound_mps}"
            )));
        }
        Ok(RigidSphere {
            radius_m,
            speed_of_sound_mps,
        })
    }

    pub fn radius_m(&self) -> f64 {
        self.radius_m
    }

    pub fn speed_of_sound_mps(&self) -> f64 {
        self.speed_of_sound_mps
    }

    /// `k = 2πf / c`.
    pub fn wavenumber(&self, frequency_hz: f64) -> f64 {
        2.0 * PI * frequency_hz / self.speed_of_sound_mps
    }
}

impl Default for RigidSphere {
    fn default() -> Self {
        RigidSphere {
            radius_m: Self::DEFAULT_RADIUS_M,
            speed_of_sound_mps: Self::DEFAULT_SPEED_OF_SOUND_MPS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourcePosition {
    pub distance_m: f64,
    pub direction: Direction,
}

impl SourcePosition {
    pub fn new(distance_m: f64, direction: Direction) -> Self {
        SourcePosition {
            distance_m,
            direction,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldPoint {
    pub radius_m: f64,
    pub direction: Direction,
}

impl FieldPoint {
    pub fn new(radius_m: f64, direction: Direction) -> Self {
        FieldPoint {
            radius_m,
            direction,
        }
    }

    pub fn on_surface(sphere: &RigidSphere, direction: Direction) -> Self {
        FieldPoint {
            radius_m: sphere.radius_m(),
            direction,
        }
    }
}

/// Free-field Green's amplitude `e^{-ikr}/r` (no 4π).
pub fn free_field_factor(k: f64, r: f64) -> Complex64 {
    Complex64::from_polar(1.0 / r, -k * r)
}

fn check_wavenumber(k: f64) -> Result<()> {
    if !(k.is_finite() && k > 0.0) {
        return Err(Error::Domain(format!("wavenumber must be positive, got {k}")));
    }
    Ok(())
}

fn check_eval_radius(sphere: &RigidSphere, r: f64) -> Result<()> {
    let a = sphere.radius_m();
    if !r.is_finite() || r < a * (1.0 - SURFACE_TOLERANCE) {
        return Err(Error::Domain(format!(
            "evaluation radius {r} m lies inside the sphere (radius {a} m)"
        )));
    }
    Ok(())
}

fn check_source_distance(sphere: &RigidSphere, distance_m: f64) -> Result<()> {
    if !(distance_m.is_finite() && distance_m > sphere.radius_m()) {
        return Err(Error::Domain(format!(
            "source distance {distance_m} m must exceed the sphere radius {} m",
            sphere.radius_m()
        )));
    }
    Ok(())
}

/// Per-order weights `w_n` of an axisymmetric field `Σ_n w_n P_n(cos Θ)`,
/// `Θ` being the angle between the evaluation direction and the source
/// (or incidence) direction.
#[derive(Debug, Clone)]
pub struct ModalExpansion {
    weights: Vec<Complex64>,
}

impl ModalExpansion {
    /// Scattered + incident field of a unit point source at `source_distance_m`,
    /// evaluated at radius `eval_radius_m`.
    pub fn point_source(
        sphere: &RigidSphere,
        source_distance_m: f64,
        eval_radius_m: f64,
        k: f64,
        order: Order,
    ) -> Result<Self> {
        check_wavenumber(k)?;
        check_source_distance(sphere, source_distance_m)?;
        check_eval_radius(sphere, eval_radius_m)?;
        if eval_radius_m > source_distance_m {
            return Err(Error::Domain(format!(
                "evaluation radius {eval_radius_m} m is beyond the source at {source_distance_m} m"
            )));
        }
        let source = RadialSet::new(order, k * source_distance_m)?;
        let brackets = radial_brackets(sphere, eval_radius_m, k, order)?;
        let weights = brackets
            .iter()
            .enumerate()
            .map(|(n, &b)| Complex64::new(0.0, -k * (2 * n + 1) as f64) * source.h2[n] * b)
            .collect();
        Self::finite(weights)
    }

    /// Field of a unit-amplitude plane wave arriving from the incidence direction.
    pub fn plane_wave(sphere: &RigidSphere, eval_radius_m: f64, k: f64, order: Order) -> Result<Self> {
        check_wavenumber(k)?;
        check_eval_radius(sphere, eval_radius_m)?;
        let brackets = radial_brackets(sphere, eval_radius_m, k, order)?;
        let weights = brackets
            .iter()
            .enumerate()
            .map(|(n, &b)| i_pow(n as i64) * (2 * n + 1) as f64 * b)
            .collect();
        Self::finite(weights)
    }

    fn finite(weights: Vec<Complex64>) -> Result<Self> {
        if let Some(n) = weights.iter().position(|w| !(w.re.is_finite() && w.im.is_finite())) {
            return Err(Error::NonFinite(format!(
                "modal weight of order {n} overflowed; reduce the truncation order"
            )));
        }
        Ok(ModalExpansion { weights })
    }

    /// `Σ_n w_n P_n(cos_angle)`.
    pub fn evaluate(&self, cos_angle: f64) -> Complex64 {
        let p = legendre_sequence(self.weights.len() - 1, cos_angle);
        self.weights.iter().zip(&p).map(|(w, &p)| w * p).sum()
    }

    /// Pressure at `point` for a source / incidence direction `source_dir`.
    pub fn evaluate_between(&self, source_dir: &Direction, point_dir: &Direction) -> Complex64 {
        self.evaluate(source_dir.cos_angle_to(point_dir))
    }

    /// Weights `w_n`, including the `(2n+1)` factor of the addition theorem.
    pub fn weights(&self) -> &[Complex64] {
        &self.weights
    }
}

fn i_pow(n: i64) -> Complex64 {
    match n.rem_euclid(4) {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

/// `j_n(kr) - j_n'(ka)/h_n'(ka) · h_n(kr)` for `n = 0..=N`.
fn radial_brackets(sphere: &RigidSphere, r: f64, k: f64, order: Order) -> Result<Vec<Complex64>> {
    let a = sphere.radius_m();
    let surface = RadialSet::new(order, k * a)?;
    let on_surface = (r - a).abs() <= SURFACE_TOLERANCE * a;
    if on_surface {
        // Wronskian form: j h' - j' h = -i/x^2, free of the j·y cancellation.
        let x = k * a;
        return Ok(surface
            .h2_prime
            .iter()
            .map(|hp| Complex64::new(0.0, -1.0 / (x * x)) / hp)
            .collect());
    }
    let eval = RadialSet::new(order, k * r)?;
    Ok((0..=order.get())
        .map(|n| {
            let ratio = surface.j_prime[n] / surface.h2_prime[n];
            eval.j[n] - ratio * eval.h2[n]
        })
        .collect())
}

/// Pressure at `point` due to a unit point source near a rigid sphere.
pub fn point_source_pressure(
    sphere: &RigidSphere,
    source: &SourcePosition,
    point: &FieldPoint,
    k: f64,
    order: Order,
) -> Result<Complex64> {
    let expansion = ModalExpansion::point_source(sphere, source.distance_m, point.radius_m, k, order)?;
    Ok(expansion.evaluate_between(&source.direction, &point.direction))
}

/// Pressure at `point` due to a unit plane wave arriving from `incidence`
/// (the direction in which the far source lies).
pub fn plane_wave_pressure(
    sphere: &RigidSphere,
    incidence: &Direction,
    point: &FieldPoint,
    k: f64,
    order: Order,
) -> Result<Complex64> {
    let expansion = ModalExpansion::plane_wave(sphere, point.radius_m, k, order)?;
    Ok(expansion.evaluate_between(incidence, &point.direction))
}

/// Ratio of surface pressures for a source at `near_distance_m` and at
/// `far_distance_m`, same source direction and evaluation point.
pub fn dvf(
    sphere: &RigidSphere,
    near_distance_m: f64,
    far_distance_m: f64,
    eval_direction: &Direction,
    source_direction: &Direction,
    k: f64,
    order: Order,
) -> Result<Complex64> {
    let a = sphere.radius_m();
    let near = ModalExpansion::point_source(sphere, near_distance_m, a, k, order)?;
    let far = ModalExpansion::point_source(sphere, far_distance_m, a, k, order)?;
    let cos_angle = source_direction.cos_angle_to(eval_direction);
    dvf_ratio(near.evaluate(cos_angle), far.evaluate(cos_angle))
}

pub(crate) fn dvf_ratio(near: Complex64, far: Complex64) -> Result<Complex64> {
    if far.norm() < 1e-300 {
        return Err(Error::DegenerateField(
            "far-distance pressure vanishes at the evaluation point".into(),
        ));
    }
    Ok(near / far)
}
