//! Binaural signal matching: steering matrices, regularised filter design and
//! the normalised binaural reproduction error.
//!
//! With `M` microphones and `Q` sources the array signals are `x = V s + n`,
//! the ear signals `p = hᵀ s`, and the estimate `p̂ = cᴴ x`. For white sources
//! (power σ_s²) and white noise (σ_n²) the MSE-optimal weights are
//!
//! ```text
//! c = (V Vᴴ + λ I_M)⁻¹ V h*,    λ = σ_n² / σ_s²
//! ```
//!
//! and the normalised error is
//!
//! ```text
//! ε = (σ_s² ‖Vᵀ c* − h‖² + σ_n² ‖c‖²) / (σ_s² ‖h‖²).
//! ```

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::field::{free_field_factor, ModalExpansion, RigidSphere};
use crate::hrtf::EarPair;
use crate::sphmath::{Direction, Order};

/// Microphones on the surface of a rigid sphere.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrayGeometry {
    sphere: RigidSphere,
    mic_directions: Vec<Direction>,
}

impl ArrayGeometry {
    pub fn new(sphere: RigidSphere, mic_directions: Vec<Direction>) -> Result<Self> {
        if mic_directions.is_empty() {
            return Err(Error::Contract("an array needs at least one microphone".into()));
        }
        Ok(ArrayGeometry {
            sphere,
            mic_directions,
        })
    }

    /// Four microphones on the horizontal great circle at 30°, 80°, 280° and 330°.
    pub fn semicircular_default() -> Self {
        let mics = [30.0, 80.0, 280.0, 330.0]
            .iter()
            .map(|&phi| Direction::from_degrees(90.0, phi).expect("valid default"))
            .collect();
        ArrayGeometry {
            sphere: RigidSphere::default(),
            mic_directions: mics,
        }
    }

    pub fn sphere(&self) -> &RigidSphere {
        &self.sphere
    }

    pub fn mic_directions(&self) -> &[Direction] {
        &self.mic_directions
    }

    pub fn num_mics(&self) -> usize {
        self.mic_directions.len()
    }
}

impl Default for ArrayGeometry {
    fn default() -> Self {
        Self::semicircular_default()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SteeringKind {
    FarField,
    NearField { distance_m: f64 },
}

/// Whether near-field steering keeps the bulk `e^{-ik r_s}/r_s` spreading factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SteeringNormalization {
    #[default]
    Normalized,
    Raw,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteeringMatrix {
    entries: DMatrix<Complex64>,
    frequency_hz: f64,
    kind: SteeringKind,
}

impl SteeringMatrix {
    pub fn new(entries: DMatrix<Complex64>, frequency_hz: f64, kind: SteeringKind) -> Result<Self> {
        if entries.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::NonFinite("steering matrix entry".into()));
        }
        Ok(SteeringMatrix {
            entries,
            frequency_hz,
            kind,
        })
    }

    /// `M × Q`.
    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn frequency_hz(&self) -> f64 {
        self.frequency_hz
    }

    pub fn kind(&self) -> SteeringKind {
        self.kind
    }

    pub fn num_mics(&self) -> usize {
        self.entries.nrows()
    }

    pub fn num_sources(&self) -> usize {
        self.entries.ncols()
    }

    /// Keeps only column `q`.
    pub fn column_subset(&self, q: usize) -> SteeringMatrix {
        SteeringMatrix {
            entries: self.entries.columns(q, 1).into_owned(),
            ..self.clone()
        }
    }
}

fn frequency_of(sphere: &RigidSphere, k: f64) -> f64 {
    k * sphere.speed_of_sound_mps() / (2.0 * PI)
}

fn fill_steering(array: &ArrayGeometry, directions: &[Direction], expansion: &ModalExpansion, scale: Complex64) -> DMatrix<Complex64> {
    DMatrix::from_fn(array.num_mics(), directions.len(), |m, q| {
        expansion.evaluate_between(&directions[q], &array.mic_directions[m]) * scale
    })
}

/// Plane-wave array response, one column per incidence direction.
pub fn steering_matrix_farfield(array: &ArrayGeometry, directions: &[Direction], k: f64, order: Order) -> Result<SteeringMatrix> {
    let sphere = array.sphere();
    let expansion = ModalExpansion::plane_wave(sphere, sphere.radius_m(), k, order)?;
    SteeringMatrix::new(
        fill_steering(array, directions, &expansion, Complex64::new(1.0, 0.0)),
        frequency_of(sphere, k),
        SteeringKind::FarField,
    )
}

/// Point-source array response for sources at `source_distance_m` in each direction.
pub fn steering_matrix_nearfield(
    array: &ArrayGeometry,
    directions: &[Direction],
    source_distance_m: f64,
    k: f64,
    order: Order,
    normalization: SteeringNormalization,
) -> Result<SteeringMatrix> {
    let sphere = array.sphere();
    let expansion = ModalExpansion::point_source(sphere, source_distance_m, sphere.radius_m(), k, order)?;
    let scale = match normalization {
        SteeringNormalization::Normalized => free_field_factor(k, source_distance_m).inv(),
        SteeringNormalization::Raw => Complex64::new(1.0, 0.0),
    };
    SteeringMatrix::new(
        fill_steering(array, directions, &expansion, scale),
        frequency_of(sphere, k),
        SteeringKind::NearField {
            distance_m: source_distance_m,
        },
    )
}

/// Signal and noise powers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    sigma_s_sq: f64,
    sigma_n_sq: f64,
}

impl NoiseModel {
    pub fn new(sigma_s_sq: f64, sigma_n_sq: f64) -> Result<Self> {
        if !(sigma_s_sq.is_finite() && sigma_s_sq > 0.0) {
            return Err(Error::Domain(format!("signal power must be positive, got {sigma_s_sq}")));
        }
        if !(sigma_n_sq.is_finite() && sigma_n_sq >= 0.0) {
            return Err(Error::Domain(format!("noise power must be non-negative, got {sigma_n_sq}")));
        }
        Ok(NoiseModel {
            sigma_s_sq,
            sigma_n_sq,
        })
    }

    pub fn sigma_s_sq(&self) -> f64 {
        self.sigma_s_sq
    }

    pub fn sigma_n_sq(&self) -> f64 {
        self.sigma_n_sq
    }

    /// `λ = σ_n² / σ_s²`.
    pub fn regularization(&self) -> f64 {
        self.sigma_n_sq / self.sigma_s_sq
    }
}

impl Default for NoiseModel {
    /// 20 dB SNR.
    fn default() -> Self {
        NoiseModel {
            sigma_s_sq: 1.0,
            sigma_n_sq: 0.01,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DesignKind {
    FarField,
    NearField { distance_m: f64 },
}

impl From<SteeringKind> for DesignKind {
    fn from(kind: SteeringKind) -> Self {
        match kind {
            SteeringKind::FarField => DesignKind::FarField,
            SteeringKind::NearField { distance_m } => DesignKind::NearField { distance_m },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BsmFilter {
    pub weights: EarPair<DVector<Complex64>>,
    pub frequency_hz: f64,
    pub design_kind: DesignKind,
}

impl BsmFilter {
    pub fn num_mics(&self) -> usize {
        self.weights.left.len()
    }
}

fn check_targets(v: &SteeringMatrix, h: &EarPair<Vec<Complex64>>) -> Result<()> {
    for t in [&h.left, &h.right] {
        if t.len() != v.num_sources() {
            return Err(Error::Contract(format!(
                "target has {} entries but the steering matrix has {} columns",
                t.len(),
                v.num_sources()
            )));
        }
    }
    Ok(())
}

/// Relative singular-value floor below which `V Vᴴ` counts as singular at `λ = 0`.
const RANK_TOLERANCE: f64 = 1e-12;

/// Solves `(V Vᴴ + λ I) c = V h*` for one ear.
pub fn solve_weights(v: &DMatrix<Complex64>, h: &[Complex64], lambda: f64) -> Result<DVector<Complex64>> {
    if h.len() != v.ncols() {
        return Err(Error::Contract(format!("target length {} vs {} steering columns", h.len(), v.ncols())));
    }
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Error::Domain(format!("regularization must be finite and non-negative, got {lambda}")));
    }
    let m = v.nrows();
    let mut gram = v * v.adjoint();
    for i in 0..m {
        gram[(i, i)] += Complex64::new(lambda, 0.0);
    }
    let h_conj = DVector::from_iterator(h.len(), h.iter().map(|z| z.conj()));
    let rhs = v * h_conj;

    if lambda == 0.0 {
        let sv = gram.clone().singular_values();
        let max = sv.max();
        let min = sv.min();
        if max == 0.0 || min <= RANK_TOLERANCE * max {
            return Err(Error::NumericalRank(format!(
                "V Vᴴ is singular (singular values {min:e} / {max:e}) and λ = 0"
            )));
        }
    }
    if let Some(chol) = gram.clone().cholesky() {
        return Ok(chol.solve(&rhs));
    }
    gram.full_piv_lu()
        .solve(&rhs)
        .ok_or_else(|| Error::NumericalRank("regularised normal equations are singular".into()))
}

/// MSE-optimal BSM weights for both ears.
pub fn design_filter(v: &SteeringMatrix, targets: &EarPair<Vec<Complex64>>, noise: &NoiseModel) -> Result<BsmFilter> {
    check_targets(v, targets)?;
    let lambda = noise.regularization();
    let left = solve_weights(v.entries(), &targets.left, lambda)?;
    let right = solve_weights(v.entries(), &targets.right, lambda)?;
    Ok(BsmFilter {
        weights: EarPair::new(left, right),
        frequency_hz: v.frequency_hz(),
        design_kind: v.kind().into(),
    })
}

/// Numerator and denominator of the normalised error for one ear.
fn error_terms(c: &DVector<Complex64>, v: &DMatrix<Complex64>, h: &[Complex64], noise: &NoiseModel) -> (f64, f64) {
    // (Vᵀ c*)_q = Σ_m conj(c_m) V[m, q]
    let reproduced = v.transpose() * c.conjugate();
    let residual: f64 = reproduced.iter().zip(h).map(|(r, h)| (r - h).norm_sqr()).sum();
    let target: f64 = h.iter().map(|z| z.norm_sqr()).sum();
    let noise_gain = c.norm_squared();
    (
        noise.sigma_s_sq() * residual + noise.sigma_n_sq() * noise_gain,
        noise.sigma_s_sq() * target,
    )
}

/// Normalised binaural error per ear.
pub fn evaluate_error(
    filter: &BsmFilter,
    v_true: &SteeringMatrix,
    h_true: &EarPair<Vec<Complex64>>,
    noise: &NoiseModel,
) -> Result<EarPair<f64>> {
    check_targets(v_true, h_true)?;
    if filter.num_mics() != v_true.num_mics() {
        return Err(Error::Contract(format!(
            "filter has {} weights but the array has {} microphones",
            filter.num_mics(),
            v_true.num_mics()
        )));
    }
    let one = |c: &DVector<Complex64>, h: &[Complex64]| {
        let (num, den) = error_terms(c, v_true.entries(), h, noise);
        if den == 0.0 {
            return Err(Error::DegenerateTarget);
        }
        Ok(num / den)
    };
    Ok(EarPair::new(
        one(&filter.weights.left, &h_true.left)?,
        one(&filter.weights.right, &h_true.right)?,
    ))
}

/// Sampled error ratio with its delta-method standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloEstimate {
    pub value: f64,
    pub standard_error: f64,
    pub trials: usize,
}

#[derive(Default)]
struct RatioAccumulator {
    e: f64,
    p: f64,
    ee: f64,
    pp: f64,
    ep: f64,
}

impl RatioAccumulator {
    fn push(&mut self, e: f64, p: f64) {
        self.e += e;
        self.p += p;
        self.ee += e * e;
        self.pp += p * p;
        self.ep += e * p;
    }

    fn finish(&self, n: usize) -> MonteCarloEstimate {
        let nf = n as f64;
        let (me, mp) = (self.e / nf, self.p / nf);
        let ratio = me / mp;
        let (var_e, var_p, cov) = if n > 1 {
            let d = nf - 1.0;
            (
                (self.ee - nf * me * me) / d,
                (self.pp - nf * mp * mp) / d,
                (self.ep - nf * me * mp) / d,
            )
        } else {
            (0.0, 0.0, 0.0)
        };
        let var_ratio = (var_e - 2.0 * ratio * cov + ratio * ratio * var_p) / (nf * mp * mp);
        MonteCarloEstimate {
            value: ratio,
            standard_error: var_ratio.max(0.0).sqrt(),
            trials: n,
        }
    }
}

fn circular_gaussian(rng: &mut ChaCha8Rng, std_per_axis: f64) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re * std_per_axis, im * std_per_axis)
}

/// Simulates `x = V s + n`, `p = hᵀ s`, `p̂ = cᴴ x` with circular Gaussian
/// sources and noise and returns `mean |p − p̂|² / mean |p|²` per ear.
pub fn monte_carlo_mse(
    filter: &BsmFilter,
    v_true: &SteeringMatrix,
    h_true: &EarPair<Vec<Complex64>>,
    noise: &NoiseModel,
    trials: usize,
    seed: u64,
) -> Result<EarPair<MonteCarloEstimate>> {
    check_targets(v_true, h_true)?;
    if trials == 0 {
        return Err(Error::Contract("at least one trial is required".into()));
    }
    if filter.num_mics() != v_true.num_mics() {
        return Err(Error::Contract("filter length does not match the array".into()));
    }
    let v = v_true.entries();
    let (m, q) = v.shape();
    let s_std = (noise.sigma_s_sq() / 2.0).sqrt();
    let n_std = (noise.sigma_n_sq() / 2.0).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = DVector::<Complex64>::zeros(q);
    let mut acc = EarPair::<RatioAccumulator>::default();
    for _ in 0..trials {
        for z in s.iter_mut() {
            *z = circular_gaussian(&mut rng, s_std);
        }
        let mut x = v * &s;
        for i in 0..m {
            x[i] += circular_gaussian(&mut rng, n_std);
        }
        for (ear_acc, (c, h)) in [
            (&mut acc.left, (&filter.weights.left, &h_true.left)),
            (&mut acc.right, (&filter.weights.right, &h_true.right)),
        ] {
            let p: Complex64 = h.iter().zip(s.iter()).map(|(h, s)| h * s).sum();
            let p_hat = c.dotc(&x);
            ear_acc.push((p - p_hat).norm_sqr(), p.norm_sqr());
        }
    }
    Ok(EarPair::new(acc.left.finish(trials), acc.right.finish(trials)))
}

/// `count` nearly uniform directions on a spherical Fibonacci lattice.
pub fn fibonacci_directions(count: usize) -> Vec<Direction> {
    let golden = PI * (3.0 - 5f64.sqrt());
    (0..count)
        .map(|i| {
            let z = 1.0 - (2.0 * i as f64 + 1.0) / count as f64;
            let phi = golden * i as f64;
            Direction::new(z.clamp(-1.0, 1.0).acos(), phi).expect("lattice point on the sphere")
        })
        .collect()
}

/// `count` directions drawn uniformly over the sphere.
pub fn random_directions(count: usize, seed: u64) -> Vec<Direction> {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let z: f64 = rng.gen_range(-1.0..=1.0);
            let phi: f64 = rng.gen_range(0.0..2.0 * PI);
            Direction::new(z.acos(), phi).expect("uniform point on the sphere")
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{plane_wave_pressure, FieldPoint};
    use approx::assert_relative_eq;
    use rand::Rng;

    fn order() -> Order {
        Order::new(30).unwrap()
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_instance(rng: &mut ChaCha8Rng, m: usize, q: usize) -> (SteeringMatrix, EarPair<Vec<Complex64>>) {
        let v = DMatrix::from_fn(m, q, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        let mut target = || (0..q).map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect::<Vec<_>>();
        let h = EarPair::new(target(), target());
        (SteeringMatrix::new(v, 1000.0, SteeringKind::FarField).unwrap(), h)
    }

    fn scalar_instance() -> (SteeringMatrix, EarPair<Vec<Complex64>>) {
        let v = SteeringMatrix::new(DMatrix::from_element(1, 1, c(1.0, 0.0)), 100.0, SteeringKind::FarField).unwrap();
        (v, EarPair::new(vec![c(1.0, 0.0)], vec![c(1.0, 0.0)]))
    }

    #[test]
    fn scalar_normal_equation() {
        let (v, h) = scalar_instance();
        let noise = NoiseModel::new(1.0, 0.0).unwrap();
        let filt = design_filter(&v, &h, &noise).unwrap();
        assert!((filt.weights.left[0] - c(1.0, 0.0)).norm() < 1e-15);
        let eps = evaluate_error(&filt, &v, &h, &noise).unwrap();
        assert_eq!(eps.left, 0.0);
    }

    #[test]
    fn heavy_regularization_shrinks_weights() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (v, h) = random_instance(&mut rng, 4, 30);
        let noise = NoiseModel::new(1.0, 1e12).unwrap();
        let filt = design_filter(&v, &h, &noise).unwrap();
        assert!(filt.weights.left.norm() < 1e-9);
        assert!(filt.weights.right.norm() < 1e-9);
    }

    #[test]
    fn zero_filter_has_unit_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (v, h) = random_instance(&mut rng, 4, 20);
        let zero = BsmFilter {
            weights: EarPair::new(DVector::zeros(4), DVector::zeros(4)),
            frequency_hz: 1000.0,
            design_kind: DesignKind::FarField,
        };
        let eps = evaluate_error(&zero, &v, &h, &NoiseModel::default()).unwrap();
        assert_eq!(eps.left, 1.0);
        assert_eq!(eps.right, 1.0);
    }

    #[test]
    fn singular_system_without_regularization_is_rejected() {
        let v = DMatrix::from_fn(3, 2, |_, _| c(1.0, 0.0));
        let err = solve_weights(&v, &[c(1.0, 0.0), c(0.0, 1.0)], 0.0).unwrap_err();
        assert!(matches!(err, Error::NumericalRank(_)));
        assert!(solve_weights(&v, &[c(1.0, 0.0), c(0.0, 1.0)], 1e-3).is_ok());
        assert!(matches!(solve_weights(&v, &[c(1.0, 0.0)], 1e-3), Err(Error::Contract(_))));
    }

    #[test]
    fn zero_target_is_degenerate() {
        let (v, _) = scalar_instance();
        let h = EarPair::new(vec![c(0.0, 0.0)], vec![c(1.0, 0.0)]);
        let filt = design_filter(&v, &EarPair::new(vec![c(1.0, 0.0)], vec![c(1.0, 0.0)]), &NoiseModel::default()).unwrap();
        assert!(matches!(evaluate_error(&filt, &v, &h, &NoiseModel::default()), Err(Error::DegenerateTarget)));
    }

    #[test]
    fn weight_norm_decreases_with_regularization() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (v, h) = random_instance(&mut rng, 4, 50);
        let mut last = f64::INFINITY;
        for lambda in [0.0, 1e-4, 1e-2, 1.0, 10.0, 1e3] {
            let w = solve_weights(v.entries(), &h.left, lambda).unwrap().norm();
            assert!(w <= last * (1.0 + 1e-12));
            last = w;
        }
    }

    #[test]
    fn designed_filter_is_first_order_optimal() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let (v, h) = random_instance(&mut rng, 4, 40);
        let noise = NoiseModel::new(1.0, 0.05).unwrap();
        let filt = design_filter(&v, &h, &noise).unwrap();
        let objective = |w: &DVector<Complex64>| error_terms(w, v.entries(), &h.left, &noise).0;
        let best = objective(&filt.weights.left);
        for i in 0..4 {
            for delta in [c(1e-3, 0.0), c(-1e-3, 0.0), c(0.0, 1e-3), c(0.0, -1e-3)] {
                let mut w = filt.weights.left.clone();
                w[i] += delta;
                assert!(objective(&w) >= best);
            }
        }
        let eps = evaluate_error(&filt, &v, &h, &noise).unwrap();
        assert!(eps.left <= 1.0 && eps.right <= 1.0);
    }

    #[test]
    fn unit_phase_on_target_conjugates_weights() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (v, h) = random_instance(&mut rng, 4, 25);
        let noise = NoiseModel::default();
        let u = Complex64::from_polar(1.0, 0.7);
        let rotated = h.map(|t| t.iter().map(|z| z * u).collect::<Vec<_>>());
        let f0 = design_filter(&v, &h, &noise).unwrap();
        let f1 = design_filter(&v, &rotated, &noise).unwrap();
        for i in 0..4 {
            assert!((f1.weights.left[i] - f0.weights.left[i] * u.conj()).norm() < 1e-12);
        }
        let e0 = evaluate_error(&f0, &v, &h, &noise).unwrap();
        let e1 = evaluate_error(&f1, &v, &rotated, &noise).unwrap();
        assert_relative_eq!(e0.left, e1.left, epsilon = 1e-12);
    }

    #[test]
    fn monte_carlo_is_deterministic_and_exact_for_perfect_match() {
        let (v, h) = scalar_instance();
        let noise = NoiseModel::new(1.0, 0.0).unwrap();
        let filt = design_filter(&v, &h, &noise).unwrap();
        let r = monte_carlo_mse(&filt, &v, &h, &noise, 1000, 9).unwrap();
        assert!(r.left.value < 1e-20);

        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let (v, h) = random_instance(&mut rng, 3, 8);
        let noise = NoiseModel::default();
        let filt = design_filter(&v, &h, &noise).unwrap();
        let a = monte_carlo_mse(&filt, &v, &h, &noise, 500, 42).unwrap();
        let b = monte_carlo_mse(&filt, &v, &h, &noise, 500, 42).unwrap();
        assert_eq!(a, b);
        assert!(monte_carlo_mse(&filt, &v, &h, &noise, 0, 42).is_err());
    }

    #[test]
    fn monte_carlo_error_shrinks_like_inverse_sqrt_trials() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let (v, h) = random_instance(&mut rng, 4, 12);
        let noise = NoiseModel::new(1.0, 0.3).unwrap();
        // a deliberately poor filter so the error is O(1)
        let filt = design_filter(&v, &h, &NoiseModel::new(1.0, 5.0).unwrap()).unwrap();
        let exact = evaluate_error(&filt, &v, &h, &noise).unwrap().left;
        let mut ses = Vec::new();
        for trials in [1_000, 10_000, 100_000] {
            let est = monte_carlo_mse(&filt, &v, &h, &noise, trials, 11).unwrap().left;
            assert!((est.value - exact).abs() < 4.0 * est.standard_error, "{trials}: {} vs {exact}", est.value);
            ses.push(est.standard_error);
        }
        for pair in ses.windows(2) {
            let ratio = pair[0] / pair[1];
            assert!(ratio > 2.5 && ratio < 4.0, "standard error ratio {ratio}");
        }
    }

    #[test]
    fn steering_columns_are_plane_wave_pressures() {
        let array = ArrayGeometry::default();
        let sphere = *array.sphere();
        let k = sphere.wavenumber(2200.0);
        let dirs = fibonacci_directions(240);
        let v = steering_matrix_farfield(&array, &dirs, k, order()).unwrap();
        assert_eq!(v.entries().shape(), (4, 240));
        for q in [0, 17, 239] {
            for m in 0..4 {
                let p = plane_wave_pressure(&sphere, &dirs[q], &FieldPoint::on_surface(&sphere, array.mic_directions()[m]), k, order()).unwrap();
                assert!((v.entries()[(m, q)] - p).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn long_wavelength_steering_is_unity() {
        let array = ArrayGeometry::default();
        let k = 1e-4 / array.sphere().radius_m();
        let v = steering_matrix_farfield(&array, &fibonacci_directions(30), k, order()).unwrap();
        assert!(v.entries().iter().all(|z| (z - c(1.0, 0.0)).norm() < 1e-3));
    }

    #[test]
    fn swapping_directions_swaps_columns() {
        let array = ArrayGeometry::default();
        let k = array.sphere().wavenumber(900.0);
        let dirs = fibonacci_directions(6);
        let mut swapped = dirs.clone();
        swapped.swap(1, 4);
        let norm = SteeringNormalization::Normalized;
        let a = steering_matrix_nearfield(&array, &dirs, 0.3, k, order(), norm).unwrap();
        let b = steering_matrix_nearfield(&array, &swapped, 0.3, k, order(), norm).unwrap();
        assert_eq!(a.entries().column(1), b.entries().column(4));
        assert_eq!(a.entries().column(4), b.entries().column(1));
    }

    #[test]
    fn close_and_far_steering_differ() {
        let array = ArrayGeometry::default();
        let k = array.sphere().wavenumber(500.0);
        let dirs = fibonacci_directions(50);
        let norm = SteeringNormalization::Normalized;
        let near = steering_matrix_nearfield(&array, &dirs, 0.15, k, order(), norm).unwrap();
        let far = steering_matrix_nearfield(&array, &dirs, 3.2, k, order(), norm).unwrap();
        let max_rel = near
            .entries()
            .iter()
            .zip(far.entries().iter())
            .map(|(a, b)| (a - b).norm() / b.norm())
            .fold(0.0, f64::max);
        assert!(max_rel > 1e-2);
    }

    #[test]
    fn raw_and_normalized_steering_differ_by_free_field_factor() {
        let array = ArrayGeometry::default();
        let k = array.sphere().wavenumber(700.0);
        let dirs = fibonacci_directions(5);
        let raw = steering_matrix_nearfield(&array, &dirs, 0.4, k, order(), SteeringNormalization::Raw).unwrap();
        let nrm = steering_matrix_nearfield(&array, &dirs, 0.4, k, order(), SteeringNormalization::Normalized).unwrap();
        let g = free_field_factor(k, 0.4);
        for (r, n) in raw.entries().iter().zip(nrm.entries().iter()) {
            assert!((r - n * g).norm() < 1e-12 * r.norm());
        }
    }

    #[test]
    fn fibonacci_lattice_is_balanced() {
        let dirs = fibonacci_directions(240);
        let mut sum = [0.0; 3];
        for d in &dirs {
            let u = d.unit_vector();
            for i in 0..3 {
                sum[i] += u[i];
            }
        }
        for s in sum {
            assert!(s.abs() / 240.0 < 0.01);
        }
        assert_eq!(random_directions(10, 3), random_directions(10, 3));
    }
}
