//! Experiment configuration, the distance × frequency sweep and CSV output.
//!
//! # Configuration file
//!
//! One `key = value` per line, `#` starts a comment, lists are written
//! `[a, b, c]`. Every key is optional; omitted keys take the defaults below.
//!
//! | key | default | meaning |
//! |-----|---------|---------|
//! | `sphere_radius_m` | `0.1` | rigid sphere (head / array) radius |
//! | `speed_of_sound_mps` | `343` | |
//! | `mic_azimuths_deg` | `[30, 80, 280, 330]` | microphone azimuths |
//! | `mic_elevations_deg` | `90` for every mic | microphone elevations from +z |
//! | `mic_radius_m` | sphere radius | must equal the sphere radius |
//! | `ear_left_deg` | `[90, 100]` | `[theta, phi]` of the left ear |
//! | `ear_right_deg` | `[90, 260]` | `[theta, phi]` of the right ear |
//! | `order` | `30` | truncation order of all expansions |
//! | `max_order` | `64` | upper bound accepted for `order` |
//! | `distances_m` | `[0.15, 0.2, 0.3, 0.5, 1.0, 3.2]` | source distances |
//! | `freq_min_hz` | `75` | |
//! | `freq_max_hz` | `10000` | |
//! | `freq_count` | `128` | |
//! | `freq_spacing` | `log` | `log` or `linear` |
//! | `frequencies_hz` | unset | explicit list, excludes the four `freq_*` keys |
//! | `sigma_s_sq` | `1` | source power |
//! | `sigma_n_sq` | `0.01` | noise power |
//! | `design_grid` | `fibonacci` | `fibonacci` or `random` (uses `seed`) |
//! | `design_grid_size` | `240` | number of design directions |
//! | `hrtf_source` | `analytic` | `analytic` or `file:<path>` |
//! | `reference_distance_m` | `3.2` | distance of the reference (far) HRTFs |
//! | `steering_normalization` | `normalized` | `normalized` or `raw` |
//! | `evaluation` | `grid` | `grid` or `direction` |
//! | `evaluation_direction_deg` | unset | `[theta, phi]`, only with `evaluation = direction` |
//! | `seed` | `0` | |
//!
//! With `hrtf_source = file:...` the directions, frequencies and reference
//! distance come from the file, and the frequency / grid / reference keys
//! are ignored. The file's responses are assumed free-field normalised at its
//! reference distance.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::bsm::{
    design_filter, evaluate_error, fibonacci_directions, random_directions, steering_matrix_farfield,
    steering_matrix_nearfield, ArrayGeometry, NoiseModel, SteeringMatrix, SteeringNormalization,
};
use crate::error::{Error, Result};
use crate::field::{free_field_factor, RigidSphere};
use crate::hrtf::{analytic_sphere_hrtf, load_hrtf, nearfield_transform, renormalize_distance, Ear, EarGeometry, EarPair, HrtfSet, SourceModel};
use crate::sphmath::{Direction, Order, DEFAULT_MAX_ORDER};

#[derive(Debug, Clone, PartialEq)]
pub enum FrequencyGrid {
    Log { min_hz: f64, max_hz: f64, count: usize },
    Linear { min_hz: f64, max_hz: f64, count: usize },
    Explicit(Vec<f64>),
}

impl FrequencyGrid {
    pub fn frequencies(&self) -> Vec<f64> {
        match self {
            FrequencyGrid::Explicit(v) => v.clone(),
            FrequencyGrid::Log { min_hz, max_hz, count } => spaced(*count, |t| min_hz * (max_hz / min_hz).powf(t)),
            FrequencyGrid::Linear { min_hz, max_hz, count } => spaced(*count, |t| min_hz + (max_hz - min_hz) * t),
        }
    }
}

fn spaced(count: usize, at: impl Fn(f64) -> f64) -> Vec<f64> {
    if count == 1 {
        return vec![at(0.0)];
    }
    (0..count)
        .map(|i| if i + 1 == count { at(1.0) } else { at(i as f64 / (count - 1) as f64) })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DesignGrid {
    Fibonacci(usize),
    Random(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum HrtfSource {
    Analytic,
    File(PathBuf),
}

/// Which (V, h) pair the error is measured against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Evaluation {
    /// All design directions at once.
    Grid,
    /// The single design direction closest to `[theta_deg, phi_deg]`.
    Direction { theta_deg: f64, phi_deg: f64 },
}

/// Sweep configuration. Angles are kept in degrees as written in the file.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub sphere: RigidSphere,
    /// `(theta_deg, phi_deg)` per microphone.
    pub mics_deg: Vec<(f64, f64)>,
    pub ear_left_deg: (f64, f64),
    pub ear_right_deg: (f64, f64),
    pub order: usize,
    pub max_order: usize,
    pub distances_m: Vec<f64>,
    pub frequencies: FrequencyGrid,
    pub noise: NoiseModel,
    pub design_grid: DesignGrid,
    pub hrtf_source: HrtfSource,
    pub reference_distance_m: f64,
    pub steering_normalization: SteeringNormalization,
    pub evaluation: Evaluation,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            sphere: RigidSphere::default(),
            mics_deg: [30.0, 80.0, 280.0, 330.0].iter().map(|&p| (90.0, p)).collect(),
            ear_left_deg: (90.0, 100.0),
            ear_right_deg: (90.0, 260.0),
            order: 30,
            max_order: DEFAULT_MAX_ORDER,
            distances_m: vec![0.15, 0.2, 0.3, 0.5, 1.0, 3.2],
            frequencies: FrequencyGrid::Log {
                min_hz: 75.0,
                max_hz: 10_000.0,
                count: 128,
            },
            noise: NoiseModel::default(),
            design_grid: DesignGrid::Fibonacci(240),
            hrtf_source: HrtfSource::Analytic,
            reference_distance_m: 3.2,
            steering_normalization: SteeringNormalization::Normalized,
            evaluation: Evaluation::Grid,
            seed: 0,
        }
    }
}

fn direction_deg(key: &str, (theta, phi): (f64, f64)) -> Result<Direction> {
    Direction::from_degrees(theta, phi).map_err(|e| Error::validation(key, e.to_string()))
}

impl ExperimentConfig {
    pub fn array(&self) -> Result<ArrayGeometry> {
        let mics = self
            .mics_deg
            .iter()
            .map(|&m| direction_deg("mic_elevations_deg", m))
            .collect::<Result<_>>()?;
        ArrayGeometry::new(self.sphere, mics)
    }

    pub fn ears(&self) -> Result<EarGeometry> {
        Ok(EarGeometry {
            left: direction_deg("ear_left_deg", self.ear_left_deg)?,
            right: direction_deg("ear_right_deg", self.ear_right_deg)?,
        })
    }

    pub fn truncation(&self) -> Result<Order> {
        Order::with_max(self.order, self.max_order).map_err(|e| Error::validation("order", e.to_string()))
    }

    pub fn design_directions(&self) -> Vec<Direction> {
        match self.design_grid {
            DesignGrid::Fibonacci(q) => fibonacci_directions(q),
            DesignGrid::Random(q) => random_directions(q, self.seed),
        }
    }

    /// Checks every cross-field constraint.
    pub fn validate(&self) -> Result<()> {
        let a = self.sphere.radius_m();
        self.array()?;
        self.ears()?;
        self.truncation()?;
        if self.mics_deg.is_empty() {
            return Err(Error::validation("mic_azimuths_deg", "at least one microphone is required"));
        }
        if self.distances_m.is_empty() {
            return Err(Error::validation("distances_m", "at least one distance is required"));
        }
        if let Some(d) = self.distances_m.iter().find(|d| !(d.is_finite() && **d > a)) {
            return Err(Error::validation(
                "distances_m",
                format!("distance {d} m must be finite and exceed the sphere radius {a} m"),
            ));
        }
        if !(self.reference_distance_m.is_finite() && self.reference_distance_m > a) {
            return Err(Error::validation(
                "reference_distance_m",
                format!("{} m must exceed the sphere radius {a} m", self.reference_distance_m),
            ));
        }
        match &self.frequencies {
            FrequencyGrid::Explicit(v) => {
                if v.is_empty() || v.iter().any(|f| !(f.is_finite() && *f > 0.0)) {
                    return Err(Error::validation("frequencies_hz", "frequencies must be positive and non-empty"));
                }
            }
            FrequencyGrid::Log { min_hz, max_hz, count } | FrequencyGrid::Linear { min_hz, max_hz, count } => {
                if !(min_hz.is_finite() && *min_hz > 0.0) {
                    return Err(Error::validation("freq_min_hz", format!("{min_hz} is not positive")));
                }
                if !(max_hz.is_finite() && max_hz >= min_hz) {
                    return Err(Error::validation("freq_max_hz", format!("{max_hz} is below freq_min_hz")));
                }
                if *count == 0 {
                    return Err(Error::validation("freq_count", "must be at least 1"));
                }
            }
        }
        let q = match self.design_grid {
            DesignGrid::Fibonacci(q) | DesignGrid::Random(q) => q,
        };
        if q == 0 {
            return Err(Error::validation("design_grid_size", "must be at least 1"));
        }
        if let Evaluation::Direction { theta_deg, phi_deg } = self.evaluation {
            direction_deg("evaluation_direction_deg", (theta_deg, phi_deg))?;
        }
        Ok(())
    }

    /// Renders the configuration in the file syntax; parsing the result gives back `self`.
    pub fn to_config_string(&self) -> String {
        let list = |v: &[f64]| {
            let items: Vec<String> = v.iter().map(|x| x.to_string()).collect();
            format!("[{}]", items.join(", "))
        };
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        kv("sphere_radius_m", self.sphere.radius_m().to_string());
        kv("speed_of_sound_mps", self.sphere.speed_of_sound_mps().to_string());
        kv("mic_elevations_deg", list(&self.mics_deg.iter().map(|m| m.0).collect::<Vec<_>>()));
        kv("mic_azimuths_deg", list(&self.mics_deg.iter().map(|m| m.1).collect::<Vec<_>>()));
        kv("ear_left_deg", list(&[self.ear_left_deg.0, self.ear_left_deg.1]));
        kv("ear_right_deg", list(&[self.ear_right_deg.0, self.ear_right_deg.1]));
        kv("order", self.order.to_string());
        kv("max_order", self.max_order.to_string());
        kv("distances_m", list(&self.distances_m));
        match &self.frequencies {
            FrequencyGrid::Explicit(v) => kv("frequencies_hz", list(v)),
            FrequencyGrid::Log { min_hz, max_hz, count } | FrequencyGrid::Linear { min_hz, max_hz, count } => {
                kv("freq_min_hz", min_hz.to_string());
                kv("freq_max_hz", max_hz.to_string());
                kv("freq_count", count.to_string());
                let spacing = if matches!(self.frequencies, FrequencyGrid::Log { .. }) { "log" } else { "linear" };
                kv("freq_spacing", spacing.to_string());
            }
        }
        kv("sigma_s_sq", self.noise.sigma_s_sq().to_string());
        kv("sigma_n_sq", self.noise.sigma_n_sq().to_string());
        let (grid, size) = match self.design_grid {
            DesignGrid::Fibonacci(q) => ("fibonacci", q),
            DesignGrid::Random(q) => ("random", q),
        };
        kv("design_grid", grid.to_string());
        kv("design_grid_size", size.to_string());
        kv(
            "hrtf_source",
            match &self.hrtf_source {
                HrtfSource::Analytic => "analytic".to_string(),
                HrtfSource::File(p) => format!("file:{}", p.display()),
            },
        );
        kv("reference_distance_m", self.reference_distance_m.to_string());
        kv(
            "steering_normalization",
            match self.steering_normalization {
                SteeringNormalization::Normalized => "normalized",
                SteeringNormalization::Raw => "raw",
            }
            .to_string(),
        );
        match self.evaluation {
            Evaluation::Grid => kv("evaluation", "grid".into()),
            Evaluation::Direction { theta_deg, phi_deg } => {
                kv("evaluation", "direction".into());
                kv("evaluation_direction_deg", list(&[theta_deg, phi_deg]));
            }
        }
        kv("seed", self.seed.to_string());
        out
    }
}

const KNOWN_KEYS: &[&str] = &[
    "sphere_radius_m",
    "speed_of_sound_mps",
    "mic_azimuths_deg",
    "mic_elevations_deg",
    "mic_radius_m",
    "ear_left_deg",
    "ear_right_deg",
    "order",
    "max_order",
    "distances_m",
    "freq_min_hz",
    "freq_max_hz",
    "freq_count",
    "freq_spacing",
    "frequencies_hz",
    "sigma_s_sq",
    "sigma_n_sq",
    "design_grid",
    "design_grid_size",
    "hrtf_source",
    "reference_distance_m",
    "steering_normalization",
    "evaluation",
    "evaluation_direction_deg",
    "seed",
];

struct RawConfig {
    values: BTreeMap<String, String>,
}

impl RawConfig {
    fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Format {
                line: i + 1,
                message: format!("expected `key = value`, found `{line}`"),
            })?;
            let key = key.trim();
            if !KNOWN_KEYS.contains(&key) {
                return Err(Error::validation(key, "unknown key"));
            }
            if values.insert(key.to_string(), value.trim().to_string()).is_some() {
                return Err(Error::validation(key, "key given more than once"));
            }
        }
        Ok(RawConfig { values })
    }

    fn has(&self, key: &str) -> bool {
        self.values.contains_key(key)
    }

    fn word(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(|s| s.as_str())
    }

    fn number<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.word(key)
            .map(|v| v.parse::<T>().map_err(|_| Error::validation(key, format!("`{v}` is not a valid number"))))
            .transpose()
    }

    fn float(&self, key: &str) -> Result<Option<f64>> {
        let v: Option<f64> = self.number(key)?;
        match v {
            Some(x) if !x.is_finite() => Err(Error::validation(key, "must be finite")),
            other => Ok(other),
        }
    }

    fn list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        let Some(v) = self.word(key) else { return Ok(None) };
        let inner = v
            .strip_prefix('[')
            .and_then(|s| s.strip_suffix(']'))
            .ok_or_else(|| Error::validation(key, format!("expected a list `[a, b, ...]`, found `{v}`")))?;
        if inner.trim().is_empty() {
            return Ok(Some(Vec::new()));
        }
        inner
            .split(',')
            .map(|t| {
                let t = t.trim();
                t.parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| Error::validation(key, format!("`{t}` is not a finite number")))
            })
            .collect::<Result<Vec<_>>>()
            .map(Some)
    }

    fn pair(&self, key: &str) -> Result<Option<(f64, f64)>> {
        match self.list(key)? {
            None => Ok(None),
            Some(v) if v.len() == 2 => Ok(Some((v[0], v[1]))),
            Some(v) => Err(Error::validation(key, format!("expected [theta, phi], found {} values", v.len()))),
        }
    }
}

/// Parses configuration text, applying defaults and validating the result.
pub fn parse_config_str(text: &str) -> Result<ExperimentConfig> {
    let raw = RawConfig::parse(text)?;
    let mut cfg = ExperimentConfig::default();

    let radius = raw.float("sphere_radius_m")?.unwrap_or(cfg.sphere.radius_m());
    let speed = raw.float("speed_of_sound_mps")?.unwrap_or(cfg.sphere.speed_of_sound_mps());
    cfg.sphere = RigidSphere::new(radius, speed).map_err(|e| {
        let key = if radius > 0.0 { "speed_of_sound_mps" } else { "sphere_radius_m" };
        Error::validation(key, e.to_string())
    })?;

    let azimuths = raw.list("mic_azimuths_deg")?.unwrap_or_else(|| cfg.mics_deg.iter().map(|m| m.1).collect());
    let elevations = raw.list("mic_elevations_deg")?.unwrap_or_else(|| vec![90.0; azimuths.len()]);
    if azimuths.is_empty() {
        return Err(Error::validation("mic_azimuths_deg", "at least one microphone is required"));
    }
    if elevations.len() != azimuths.len() {
        return Err(Error::validation(
            "mic_elevations_deg",
            format!("{} elevations for {} azimuths", elevations.len(), azimuths.len()),
        ));
    }
    if let Some(elevation) = elevations.iter().find(|e| !(0.0..=180.0).contains(*e)) {
        return Err(Error::validation("mic_elevations_deg", format!("{elevation} outside [0, 180]")));
    }
    cfg.mics_deg = elevations.into_iter().zip(azimuths).collect();
    if let Some(r) = raw.float("mic_radius_m")? {
        if (r - radius).abs() > 1e-9 * radius {
            return Err(Error::validation(
                "mic_radius_m",
                format!("microphones at {r} m are off the sphere surface (radius {radius} m)"),
            ));
        }
    }

    if let Some(p) = raw.pair("ear_left_deg")? {
        cfg.ear_left_deg = p;
    }
    if let Some(p) = raw.pair("ear_right_deg")? {
        cfg.ear_right_deg = p;
    }
    if let Some(n) = raw.number("order")? {
        cfg.order = n;
    }
    if let Some(n) = raw.number("max_order")? {
        cfg.max_order = n;
    }
    if let Some(d) = raw.list("distances_m")? {
        cfg.distances_m = d;
    }

    let range_keys = ["freq_min_hz", "freq_max_hz", "freq_count", "freq_spacing"];
    if let Some(list) = raw.list("frequencies_hz")? {
        if let Some(k) = range_keys.iter().find(|k| raw.has(k)) {
            return Err(Error::validation(k, "cannot be combined with `frequencies_hz`"));
        }
        cfg.frequencies = FrequencyGrid::Explicit(list);
    } else {
        let min_hz = raw.float("freq_min_hz")?.unwrap_or(75.0);
        let max_hz = raw.float("freq_max_hz")?.unwrap_or(10_000.0);
        let count = raw.number("freq_count")?.unwrap_or(128);
        cfg.frequencies = match raw.word("freq_spacing").unwrap_or("log") {
            "log" => FrequencyGrid::Log { min_hz, max_hz, count },
            "linear" => FrequencyGrid::Linear { min_hz, max_hz, count },
            other => return Err(Error::validation("freq_spacing", format!("`{other}` is neither `log` nor `linear`"))),
        };
    }

    let s = raw.float("sigma_s_sq")?.unwrap_or(cfg.noise.sigma_s_sq());
    let n = raw.float("sigma_n_sq")?.unwrap_or(cfg.noise.sigma_n_sq());
    cfg.noise = NoiseModel::new(s, n).map_err(|e| {
        let key = if s > 0.0 { "sigma_n_sq" } else { "sigma_s_sq" };
        Error::validation(key, e.to_string())
    })?;

    let size = raw.number("design_grid_size")?.unwrap_or(240);
    cfg.design_grid = match raw.word("design_grid").unwrap_or("fibonacci") {
        "fibonacci" => DesignGrid::Fibonacci(size),
        "random" => DesignGrid::Random(size),
        other => return Err(Error::validation("design_grid", format!("`{other}` is neither `fibonacci` nor `random`"))),
    };

    if let Some(src) = raw.word("hrtf_source") {
        cfg.hrtf_source = if src == "analytic" {
            HrtfSource::Analytic
        } else if let Some(path) = src.strip_prefix("file:") {
            if path.trim().is_empty() {
                return Err(Error::validation("hrtf_source", "empty file path"));
            }
            HrtfSource::File(PathBuf::from(path.trim()))
        } else {
            return Err(Error::validation("hrtf_source", format!("`{src}` is neither `analytic` nor `file:<path>`")));
        };
    }
    if let Some(r) = raw.float("reference_distance_m")? {
        cfg.reference_distance_m = r;
    }
    cfg.steering_normalization = match raw.word("steering_normalization").unwrap_or("normalized") {
        "normalized" => SteeringNormalization::Normalized,
        "raw" => SteeringNormalization::Raw,
        other => {
            return Err(Error::validation(
                "steering_normalization",
                format!("`{other}` is neither `normalized` nor `raw`"),
            ))
        }
    };
    let eval_dir = raw.pair("evaluation_direction_deg")?;
    cfg.evaluation = match (raw.word("evaluation").unwrap_or("grid"), eval_dir) {
        ("grid", None) => Evaluation::Grid,
        ("grid", Some(_)) => {
            return Err(Error::validation("evaluation_direction_deg", "only valid with `evaluation = direction`"))
        }
        ("direction", Some((theta_deg, phi_deg))) => Evaluation::Direction { theta_deg, phi_deg },
        ("direction", None) => {
            return Err(Error::validation("evaluation_direction_deg", "required with `evaluation = direction`"))
        }
        (other, _) => return Err(Error::validation("evaluation", format!("`{other}` is neither `grid` nor `direction`"))),
    };
    if let Some(seed) = raw.number("seed")? {
        cfg.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn parse_config(path: impl AsRef<Path>) -> Result<ExperimentConfig> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config_str(&text)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FilterKind {
    Ff,
    Nf,
}

impl FilterKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FilterKind::Ff => "ff",
            FilterKind::Nf => "nf",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorRecord {
    pub distance_m: f64,
    pub frequency_hz: f64,
    pub filter: FilterKind,
    pub ear: Ear,
    pub epsilon: f64,
    pub epsilon_db: f64,
}

impl ErrorRecord {
    pub fn new(distance_m: f64, frequency_hz: f64, filter: FilterKind, ear: Ear, epsilon: f64) -> Self {
        ErrorRecord {
            distance_m,
            frequency_hz,
            filter,
            ear,
            epsilon,
            epsilon_db: 10.0 * epsilon.log10(),
        }
    }
}

/// Normalised errors over distance × frequency × filter × ear, kept sorted by
/// `(filter, ear, distance, frequency)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorSurface {
    records: Vec<ErrorRecord>,
}

impl ErrorSurface {
    pub fn new(mut records: Vec<ErrorRecord>) -> Self {
        records.sort_by(|a, b| {
            (a.filter, a.ear)
                .cmp(&(b.filter, b.ear))
                .then(a.distance_m.total_cmp(&b.distance_m))
                .then(a.frequency_hz.total_cmp(&b.frequency_hz))
        });
        ErrorSurface { records }
    }

    pub fn records(&self) -> &[ErrorRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// `(frequency, epsilon)` for one curve, ascending in frequency.
    pub fn curve(&self, filter: FilterKind, ear: Ear, distance_m: f64) -> Vec<(f64, f64)> {
        self.records
            .iter()
            .filter(|r| r.filter == filter && r.ear == ear && r.distance_m == distance_m)
            .map(|r| (r.frequency_hz, r.epsilon))
            .collect()
    }

    /// Mean linear epsilon of one curve over `lo_hz <= f <= hi_hz`.
    pub fn band_mean(&self, filter: FilterKind, ear: Ear, distance_m: f64, lo_hz: f64, hi_hz: f64) -> Option<f64> {
        let vals: Vec<f64> = self
            .curve(filter, ear, distance_m)
            .into_iter()
            .filter(|(f, _)| *f >= lo_hz && *f <= hi_hz)
            .map(|(_, e)| e)
            .collect();
        if vals.is_empty() {
            None
        } else {
            Some(vals.iter().sum::<f64>() / vals.len() as f64)
        }
    }
}

pub const CSV_HEADER: [&str; 6] = ["distance_m", "frequency_hz", "filter", "ear", "epsilon", "epsilon_db"];

/// Writes the surface as CSV with shortest round-trip decimal numbers.
pub fn write_csv<W: Write>(surface: &ErrorSurface, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in surface.records() {
        w.write_record([
            r.distance_m.to_string(),
            r.frequency_hz.to_string(),
            r.filter.as_str().to_string(),
            r.ear.as_str().to_string(),
            r.epsilon.to_string(),
            r.epsilon_db.to_string(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn emit_csv(surface: &ErrorSurface, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if surface.is_empty() {
        return Err(Error::Contract("refusing to write an empty error surface".into()));
    }
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv(surface, std::io::BufWriter::new(file))
}

/// Reads a CSV written by [`emit_csv`].
pub fn load_csv(path: impl AsRef<Path>) -> Result<ErrorSurface> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::Reader::from_reader(file);
    let header = rdr.headers()?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::Format {
            line: 1,
            message: format!("unexpected header `{}`", header.iter().collect::<Vec<_>>().join(",")),
        });
    }
    let mut records = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row = row?;
        let line = i + 2;
        let num = |j: usize| -> Result<f64> {
            row[j].parse().map_err(|_| Error::Format {
                line,
                message: format!("bad number `{}`", &row[j]),
            })
        };
        let filter = match &row[2] {
            "ff" => FilterKind::Ff,
            "nf" => FilterKind::Nf,
            other => return Err(Error::Format { line, message: format!("unknown filter `{other}`") }),
        };
        let ear = match &row[3] {
            "left" => Ear::Left,
            "right" => Ear::Right,
            other => return Err(Error::Format { line, message: format!("unknown ear `{other}`") }),
        };
        records.push(ErrorRecord {
            distance_m: num(0)?,
            frequency_hz: num(1)?,
            filter,
            ear,
            epsilon: num(4)?,
            epsilon_db: num(5)?,
        });
    }
    Ok(ErrorSurface::new(records))
}

/// Responses of the reference set at every design direction for one frequency.
fn reference_set(cfg: &ExperimentConfig, ears: &EarGeometry, order: Order) -> Result<HrtfSet> {
    match &cfg.hrtf_source {
        HrtfSource::Analytic => analytic_sphere_hrtf(
            &cfg.sphere,
            ears,
            &cfg.design_directions(),
            &cfg.frequencies.frequencies(),
            SourceModel::NearFieldPoint {
                distance_m: cfg.reference_distance_m,
            },
            order,
        ),
        HrtfSource::File(path) => {
            let set = load_hrtf(path)?;
            let r = set.reference_distance_m();
            if !(r.is_finite() && r > cfg.sphere.radius_m()) {
                return Err(Error::validation(
                    "hrtf_source",
                    format!("file reference distance {r} m must be finite and exceed the sphere radius"),
                ));
            }
            Ok(set)
        }
    }
}

/// Near-field targets at `distance_m`, on the same free-field reference as
/// the steering matrices.
fn distance_targets(
    reference: &HrtfSet,
    cfg: &ExperimentConfig,
    ears: &EarGeometry,
    distance_m: f64,
    order: Order,
) -> Result<HrtfSet> {
    let moved = nearfield_transform(reference, &cfg.sphere, ears, distance_m, order)?;
    let r_f = reference.reference_distance_m();
    Ok(match cfg.steering_normalization {
        SteeringNormalization::Normalized => renormalize_distance(&moved, &cfg.sphere, r_f),
        SteeringNormalization::Raw => {
            let freqs = moved.frequencies_hz().to_vec();
            moved.scaled_per_frequency(|f| free_field_factor(cfg.sphere.wavenumber(freqs[f]), r_f))
        }
    })
}

fn nearest_direction(directions: &[Direction], target: &Direction) -> usize {
    directions
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.cos_angle_to(target).total_cmp(&b.1.cos_angle_to(target)))
        .map(|(i, _)| i)
        .unwrap_or(0)
}

fn with_context<T>(distance_m: f64, frequency_hz: f64, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::AtPoint {
        distance_m,
        frequency_hz,
        source: Box::new(e),
    })
}

/// Runs the far-field / near-field comparison over every configured distance
/// and frequency.
///
/// For each frequency the far-field filter is designed from plane-wave
/// steering and the reference HRTFs; for each distance the near-field filter
/// is designed from point-source steering and distance-transformed HRTFs at
/// that distance. Both are scored against the near-field pair.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<ErrorSurface> {
    cfg.validate()?;
    let order = cfg.truncation()?;
    let array = cfg.array()?;
    let ears = cfg.ears()?;
    let reference = reference_set(cfg, &ears, order)?;
    let directions = reference.directions().to_vec();
    let frequencies = reference.frequencies_hz().to_vec();

    let per_distance: Vec<HrtfSet> = cfg
        .distances_m
        .iter()
        .map(|&d| with_context(d, f64::NAN, distance_targets(&reference, cfg, &ears, d, order)))
        .collect::<Result<_>>()?;

    let eval_index = match cfg.evaluation {
        Evaluation::Grid => None,
        Evaluation::Direction { theta_deg, phi_deg } => {
            Some(nearest_direction(&directions, &direction_deg("evaluation_direction_deg", (theta_deg, phi_deg))?))
        }
    };
    let restrict = |v: SteeringMatrix, h: EarPair<Vec<Complex64>>| match eval_index {
        None => (v, h),
        Some(q) => (v.column_subset(q), h.map(|t| vec![t[q]])),
    };

    let records: Vec<Vec<ErrorRecord>> = frequencies
        .par_iter()
        .enumerate()
        .map(|(fi, &f)| {
            let k = cfg.sphere.wavenumber(f);
            let ff = with_context(f64::INFINITY, f, (|| {
                let v = steering_matrix_farfield(&array, &directions, k, order)?;
                design_filter(&v, &reference.targets(fi), &cfg.noise)
            })())?;
            let mut out = Vec::with_capacity(cfg.distances_m.len() * 4);
            for (&d, targets) in cfg.distances_m.iter().zip(&per_distance) {
                let errors = with_context(d, f, (|| {
                    let v = steering_matrix_nearfield(&array, &directions, d, k, order, cfg.steering_normalization)?;
                    let h = targets.targets(fi);
                    let nf = design_filter(&v, &h, &cfg.noise)?;
                    let (v_true, h_true) = restrict(v, h);
                    Ok((
                        evaluate_error(&ff, &v_true, &h_true, &cfg.noise)?,
                        evaluate_error(&nf, &v_true, &h_true, &cfg.noise)?,
                    ))
                })())?;
                for (kind, eps) in [(FilterKind::Ff, errors.0), (FilterKind::Nf, errors.1)] {
                    for ear in Ear::BOTH {
                        out.push(ErrorRecord::new(d, f, kind, ear, *eps.get(ear)));
                    }
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    Ok(ErrorSurface::new(records.into_iter().flatten().collect()))
}
