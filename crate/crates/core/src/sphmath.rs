//! Spherical Bessel/Hankel functions and complex spherical harmonics.
//!
//! Conventions:
//! - time dependence `e^{+iωt}`, so outgoing radial waves are `h_n^(2) = j_n - i y_n`;
//! - spherical harmonics are orthonormal on the unit sphere and carry the
//!   Condon–Shortley phase `(-1)^m`;
//! - `theta` is measured from +z, `phi` from +x toward +y.
//!
//! `j_n` is evaluated by Miller's downward recurrence (upward recurrence
//! loses all accuracy once `n > x`), normalised against the closed forms of
//! `j_0` and `j_1` together so that a zero of either does not spoil the scale.
//! `y_n` uses the upward recurrence, which is stable for it.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Highest order accepted by [`Order::new`].
pub const DEFAULT_MAX_ORDER: usize = 64;

/// Below this argument `j_n` is summed from its power series.
const SERIES_THRESHOLD: f64 = 1.0;

/// A radial / spherical-harmonic order `n`, bounded by a configured maximum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Order(usize);

impl Order {
    pub fn new(n: usize) -> Result<Self> {
        Self::with_max(n, DEFAULT_MAX_ORDER)
    }

    pub fn with_max(n: usize, max: usize) -> Result<Self> {
        if n > max {
            return Err(Error::UnsupportedOrder { order: n, max });
        }
        Ok(Order(n))
    }

    #[inline]
    pub fn get(self) -> usize {
        self.0
    }
}

/// Spherical-harmonic mode `(n, m)` with `|m| <= n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ModeIndex {
    n: usize,
    m: i64,
}

impl ModeIndex {
    pub fn new(n: usize, m: i64) -> Result<Self> {
        if m.unsigned_abs() as usize > n {
            return Err(Error::Domain(format!("mode degree |{m}| exceeds order {n}")));
        }
        Ok(ModeIndex { n, m })
    }

    pub fn n(self) -> usize {
        self.n
    }

    pub fn m(self) -> i64 {
        self.m
    }
}

/// A point on the unit sphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Direction {
    theta: f64,
    phi: f64,
}

impl Direction {
    /// `theta` must lie in `[0, π]`; `phi` is wrapped into `[0, 2π)`.
    pub fn new(theta: f64, phi: f64) -> Result<Self> {
        if !theta.is_finite() || !phi.is_finite() {
            return Err(Error::Domain(format!(
                "direction angles must be finite (theta={theta}, phi={phi})"
            )));
        }
        if !(0.0..=PI).contains(&theta) {
            return Err(Error::Domain(format!(
                "elevation {theta} rad outside [0, pi]"
            )));
        }
        let mut phi = phi.rem_euclid(2.0 * PI);
        if phi >= 2.0 * PI {
            phi = 0.0;
        }
        Ok(Direction { theta, phi })
    }

    pub fn from_degrees(theta_deg: f64, phi_deg: f64) -> Result<Self> {
        Self::new(theta_deg.to_radians(), phi_deg.to_radians())
    }

    /// Direction of a Cartesian vector. The zero vector maps to +z.
    pub fn from_cartesian(v: [f64; 3]) -> Self {
        let r = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if r == 0.0 {
            return Direction { theta: 0.0, phi: 0.0 };
        }
        let theta = (v[2] / r).clamp(-1.0, 1.0).acos();
        let phi = v[1].atan2(v[0]).rem_euclid(2.0 * PI);
        let phi = if phi >= 2.0 * PI { 0.0 } else { phi };
        Direction { theta, phi }
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn theta_deg(&self) -> f64 {
        self.theta.to_degrees()
    }

    pub fn phi_deg(&self) -> f64 {
        self.phi.to_degrees()
    }

    pub fn unit_vector(&self) -> [f64; 3] {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        [st * cp, st * sp, ct]
    }

    /// Cosine of the great-circle angle between two directions.
    pub fn cos_angle_to(&self, other: &Direction) -> f64 {
        let (st1, ct1) = self.theta.sin_cos();
        let (st2, ct2) = other.theta.sin_cos();
        (st1 * st2 * (self.phi - other.phi).cos() + ct1 * ct2).clamp(-1.0, 1.0)
    }
}

fn check_arg(x: f64) -> Result<()> {
    if !x.is_finite() || x < 0.0 {
        return Err(Error::Domain(format!(
            "spherical Bessel argument must be finite and non-negative, got {x}"
        )));
    }
    Ok(())
}

fn check_positive(x: f64) -> Result<()> {
    check_arg(x)?;
    if x == 0.0 {
        return Err(Error::Domain(
            "argument 0 is a singular point of y_n, h_n and their derivatives".into(),
        ));
    }
    Ok(())
}

fn bessel_j_series(n: usize, x: f64) -> f64 {
    // x^n / (2n+1)!! * sum_k (-x^2/2)^k / (k! (2n+3)(2n+5)...(2n+2k+1))
    let mut lead = 1.0;
    for i in 1..=n {
        lead *= x / (2 * i + 1) as f64;
    }
    let half_x2 = 0.5 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..200 {
        term *= -half_x2 / (k as f64 * (2 * n + 2 * k + 1) as f64);
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    lead * sum
}

/// `j_0(x) .. j_{max_n}(x)`.
pub fn bessel_j_sequence(max_n: Order, x: f64) -> Result<Vec<f64>> {
    check_arg(x)?;
    Ok(j_sequence_unchecked(max_n.get(), x))
}

fn j_sequence_unchecked(max_n: usize, x: f64) -> Vec<f64> {
    if x == 0.0 {
        let mut out = vec![0.0; max_n + 1];
        out[0] = 1.0;
        return out;
    }
    if x < SERIES_THRESHOLD {
        return (0..=max_n).map(|n| bessel_j_series(n, x)).collect();
    }

    // Miller: recur downward from well above max(n, x), then rescale.
    let top = max_n.max(1);
    let span = (top as f64).max(x);
    let start = top + (x as usize) + 20 + (40.0 * span).sqrt() as usize;
    let mut stored = vec![0.0; top + 1];
    let mut next = 0.0; // f_{k+1}
    let mut cur = 1e-300; // f_k
    for k in (0..=start).rev() {
        if k <= top {
            stored[k] = cur;
        }
        if k == 0 {
            break;
        }
        // f_{k-1} = (2k+1)/x f_k - f_{k+1}
        let prev = (2 * k + 1) as f64 / x * cur - next;
        next = cur;
        cur = prev;
        if cur.abs() > 1e150 {
            let s = 1e-150;
            cur *= s;
            next *= s;
            for v in stored.iter_mut().skip(k.saturating_sub(1)) {
                *v *= s;
            }
        }
    }
    let (s, c) = x.sin_cos();
    let j0 = s / x;
    let j1 = s / (x * x) - c / x;
    let norm = stored[0].abs().max(stored[1].abs());
    let (u0, u1) = (stored[0] / norm, stored[1] / norm);
    let scale = (j0 * u0 + j1 * u1) / (u0 * u0 + u1 * u1) / norm;
    stored.truncate(max_n + 1);
    stored.iter().map(|v| v * scale).collect()
}

/// `y_0(x) .. y_{max_n}(x)` by upward recurrence. Requires `x > 0`.
pub fn bessel_y_sequence(max_n: Order, x: f64) -> Result<Vec<f64>> {
    check_positive(x)?;
    Ok(y_sequence_unchecked(max_n.get(), x))
}

fn y_sequence_unchecked(max_n: usize, x: f64) -> Vec<f64> {
    let (s, c) = x.sin_cos();
    let mut out = Vec::with_capacity(max_n + 1);
    out.push(-c / x);
    if max_n >= 1 {
        out.push(-c / (x * x) - s / x);
    }
    for n in 1..max_n {
        let v = (2 * n + 1) as f64 / x * out[n] - out[n - 1];
        out.push(v);
    }
    out
}

/// `h^(2)_0(x) .. h^(2)_{max_n}(x)`. Requires `x > 0`.
pub fn hankel2_sequence(max_n: Order, x: f64) -> Result<Vec<Complex64>> {
    check_positive(x)?;
    let j = j_sequence_unchecked(max_n.get(), x);
    let y = y_sequence_unchecked(max_n.get(), x);
    Ok(j.iter().zip(&y).map(|(&j, &y)| Complex64::new(j, -y)).collect())
}

/// Derivatives of a spherical-Bessel-type sequence `f_0 .. f_N` at `x`, using
/// `f_n' = f_{n-1} - (n+1)/x f_n` and `f_0' = -f_1`. The input must hold at
/// least two entries.
fn derivative_sequence<T>(f: &[T], x: f64, len: usize) -> Vec<T>
where
    T: Copy + std::ops::Sub<Output = T> + std::ops::Mul<f64, Output = T> + std::ops::Neg<Output = T>,
{
    let mut out = Vec::with_capacity(len);
    out.push(-f[1]);
    for n in 1..len {
        out.push(f[n - 1] - f[n] * ((n + 1) as f64 / x));
    }
    out
}

/// Values and argument-derivatives of `j_n` and `h^(2)_n`, `n = 0..=N`, at one argument.
#[derive(Debug, Clone)]
pub struct RadialSet {
    pub j: Vec<f64>,
    pub j_prime: Vec<f64>,
    pub h2: Vec<Complex64>,
    pub h2_prime: Vec<Complex64>,
}

impl RadialSet {
    pub fn new(max_n: Order, x: f64) -> Result<Self> {
        check_positive(x)?;
        let n = max_n.get();
        let len = n + 1;
        let inner = n.max(1);
        let j = j_sequence_unchecked(inner, x);
        let y = y_sequence_unchecked(inner, x);
        let h2: Vec<Complex64> = j.iter().zip(&y).map(|(&j, &y)| Complex64::new(j, -y)).collect();
        let j_prime = derivative_sequence(&j, x, len);
        let h2_prime = derivative_sequence(&h2, x, len);
        Ok(RadialSet {
            j: j[..len].to_vec(),
            j_prime,
            h2: h2[..len].to_vec(),
            h2_prime,
        })
    }
}

/// Spherical Bessel function of the first kind `j_n(x)`, `x >= 0`.
pub fn spherical_bessel_j(n: Order, x: f64) -> Result<f64> {
    check_arg(x)?;
    let seq = j_sequence_unchecked(n.get(), x);
    Ok(seq[n.get()])
}

/// Spherical Bessel function of the second kind `y_n(x)`, `x > 0`.
pub fn spherical_bessel_y(n: Order, x: f64) -> Result<f64> {
    check_positive(x)?;
    Ok(y_sequence_unchecked(n.get(), x)[n.get()])
}

/// Outgoing spherical Hankel function `h^(2)_n(x) = j_n(x) - i y_n(x)`, `x > 0`.
pub fn spherical_hankel2(n: Order, x: f64) -> Result<Complex64> {
    check_positive(x)?;
    let j = j_sequence_unchecked(n.get(), x)[n.get()];
    let y = y_sequence_unchecked(n.get(), x)[n.get()];
    Ok(Complex64::new(j, -y))
}

/// `d j_n / dx`, `x > 0`.
pub fn spherical_bessel_j_prime(n: Order, x: f64) -> Result<f64> {
    check_positive(x)?;
    let j = j_sequence_unchecked(n.get().max(1), x);
    Ok(derivative_sequence(&j, x, n.get() + 1)[n.get()])
}

/// `d y_n / dx`, `x > 0`.
pub fn spherical_bessel_y_prime(n: Order, x: f64) -> Result<f64> {
    check_positive(x)?;
    let y = y_sequence_unchecked(n.get().max(1), x);
    Ok(derivative_sequence(&y, x, n.get() + 1)[n.get()])
}

/// `d h^(2)_n / dx`, `x > 0`.
pub fn spherical_hankel2_prime(n: Order, x: f64) -> Result<Complex64> {
    Ok(RadialSet::new(n, x)?.h2_prime[n.get()])
}

/// Legendre polynomials `P_0(t) .. P_{max_n}(t)` (Bonnet recurrence).
pub fn legendre_sequence(max_n: usize, t: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(max_n + 1);
    out.push(1.0);
    if max_n >= 1 {
        out.push(t);
    }
    for n in 1..max_n {
        let v = ((2 * n + 1) as f64 * t * out[n] - n as f64 * out[n - 1]) / (n + 1) as f64;
        out.push(v);
    }
    out
}

/// Orthonormal associated Legendre values `N_n^m P_n^m(cos theta)` for
/// `n = m..=max_n`, Condon–Shortley phase included. Entry `i` holds `n = m + i`.
fn normalized_legendre_column(max_n: usize, m: usize, theta: f64) -> Vec<f64> {
    let (st, ct) = theta.sin_cos();
    // sectoral term, normalised as it is built so n = 60+ stays in range
    let mut pmm = 1.0 / (4.0 * PI).sqrt();
    for k in 1..=m {
        pmm *= -((2 * k + 1) as f64 / (2 * k) as f64).sqrt() * st;
    }
    let mut out = Vec::with_capacity(max_n + 1 - m);
    out.push(pmm);
    if max_n == m {
        return out;
    }
    out.push(((2 * m + 3) as f64).sqrt() * ct * pmm);
    for n in (m + 2)..=max_n {
        let nf = n as f64;
        let mf = m as f64;
        let a = ((4.0 * nf * nf - 1.0) / (nf * nf - mf * mf)).sqrt();
        let b = (((nf - 1.0) * (nf - 1.0) - mf * mf) / (4.0 * (nf - 1.0) * (nf - 1.0) - 1.0)).sqrt();
        let i = n - m;
        let v = a * (ct * out[i - 1] - b * out[i - 2]);
        out.push(v);
    }
    out
}

/// Complex orthonormal spherical harmonic `Y_n^m(theta, phi)` with Condon–Shortley phase.
pub fn sph_harm(mode: ModeIndex, dir: &Direction) -> Complex64 {
    let n = mode.n();
    let m_abs = mode.m().unsigned_abs() as usize;
    let p = normalized_legendre_column(n, m_abs, dir.theta())[n - m_abs];
    let y = Complex64::from_polar(p, m_abs as f64 * dir.phi());
    if mode.m() < 0 {
        let sign = if m_abs.is_multiple_of(2) { 1.0 } else { -1.0 };
        y.conj() * sign
    } else {
        y
    }
}

/// All `Y_n^m(dir)` for `n <= max_n`, indexed `n*n + n + m`.
pub fn sph_harm_all(max_n: usize, dir: &Direction) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); (max_n + 1) * (max_n + 1)];
    for m in 0..=max_n {
        let col = normalized_legendre_column(max_n, m, dir.theta());
        let phase = Complex64::from_polar(1.0, m as f64 * dir.phi());
        let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
        for (i, &p) in col.iter().enumerate() {
            let n = m + i;
            let y = phase * p;
            out[n * n + n + m] = y;
            if m > 0 {
                out[n * n + n - m] = y.conj() * sign;
            }
        }
    }
    out
}
