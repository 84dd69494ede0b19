//! HRTF sets: analytic rigid-sphere responses, distance transforms and a
//! line-oriented text format.
//!
//! Responses are stored relative to the free field: a plane-wave set has unit
//! incident amplitude at the origin, and a point-source set at distance `r`
//! has the free-field factor `e^{-ikr}/r` divided out. Either way `|H| -> 1`
//! at low frequency for distant sources.
//!
//! # File format
//!
//! ```text
//! version 1
//! reference_distance_m 3.2
//! num_directions 2
//! num_frequencies 1
//! dir 90 100          # theta_deg phi_deg, Q lines
//! dir 90 260
//! freq 1000           # F lines
//! h 0 0 <re_left> <im_left> <re_right> <im_right>   # Q·F lines, direction-major
//! h 1 0 ...
//! ```
//!
//! Tokens are whitespace separated and `#` starts a comment.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::{dvf_ratio, free_field_factor, ModalExpansion, RigidSphere};
use crate::sphmath::{Direction, Order};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Ear {
    Left,
    Right,
}

impl Ear {
    pub const BOTH: [Ear; 2] = [Ear::Left, Ear::Right];

    pub fn as_str(self) -> &'static str {
        match self {
            Ear::Left => "left",
            Ear::Right => "right",
        }
    }
}

/// A left/right pair of anything.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EarPair<T> {
    pub left: T,
    pub right: T,
}

impl<T> EarPair<T> {
    pub fn new(left: T, right: T) -> Self {
        EarPair { left, right }
    }

    pub fn get(&self, ear: Ear) -> &T {
        match ear {
            Ear::Left => &self.left,
            Ear::Right => &self.right,
        }
    }

    pub fn map<U>(&self, mut f: impl FnMut(&T) -> U) -> EarPair<U> {
        EarPair {
            left: f(&self.left),
            right: f(&self.right),
        }
    }
}

/// Ear positions on the sphere surface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EarGeometry {
    pub left: Direction,
    pub right: Direction,
}

impl Default for EarGeometry {
    fn default() -> Self {
        EarGeometry {
            left: Direction::from_degrees(90.0, 100.0).expect("valid default"),
            right: Direction::from_degrees(90.0, 260.0).expect("valid default"),
        }
    }
}

impl EarGeometry {
    pub fn get(&self, ear: Ear) -> &Direction {
        match ear {
            Ear::Left => &self.left,
            Ear::Right => &self.right,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SourceModel {
    FarFieldPlaneWave,
    NearFieldPoint { distance_m: f64 },
}

/// Per-ear complex responses on a `directions × frequencies` grid.
///
/// A plane-wave set has an infinite reference distance.
#[derive(Debug, Clone, PartialEq)]
pub struct HrtfSet {
    directions: Vec<Direction>,
    frequencies_hz: Vec<f64>,
    reference_distance_m: f64,
    left: Vec<Complex64>,
    right: Vec<Complex64>,
}

impl HrtfSet {
    /// Tables are direction-major: entry `q * F + f`.
    pub fn new(
        directions: Vec<Direction>,
        frequencies_hz: Vec<f64>,
        reference_distance_m: f64,
        left: Vec<Complex64>,
        right: Vec<Complex64>,
    ) -> Result<Self> {
        let expected = directions.len() * frequencies_hz.len();
        for (what, table) in [("left table", &left), ("right table", &right)] {
            if table.len() != expected {
                return Err(Error::Schema {
                    what: what.to_string(),
                    expected,
                    found: table.len(),
                });
            }
        }
        if directions.is_empty() || frequencies_hz.is_empty() {
            return Err(Error::Contract("an HRTF set needs at least one direction and one frequency".into()));
        }
        if let Some(f) = frequencies_hz.iter().find(|f| !(f.is_finite() && **f > 0.0)) {
            return Err(Error::Domain(format!("frequency {f} Hz is not positive")));
        }
        if reference_distance_m.is_nan() || reference_distance_m <= 0.0 {
            return Err(Error::Domain(format!(
                "reference distance {reference_distance_m} m is not positive"
            )));
        }
        if left.iter().chain(&right).any(|h| !(h.re.is_finite() && h.im.is_finite())) {
            return Err(Error::NonFinite("HRTF table holds a NaN or infinite response".into()));
        }
        Ok(HrtfSet {
            directions,
            frequencies_hz,
            reference_distance_m,
            left,
            right,
        })
    }

    pub fn directions(&self) -> &[Direction] {
        &self.directions
    }

    pub fn frequencies_hz(&self) -> &[f64] {
        &self.frequencies_hz
    }

    pub fn reference_distance_m(&self) -> f64 {
        self.reference_distance_m
    }

    pub fn num_directions(&self) -> usize {
        self.directions.len()
    }

    pub fn num_frequencies(&self) -> usize {
        self.frequencies_hz.len()
    }

    fn table(&self, ear: Ear) -> &[Complex64] {
        match ear {
            Ear::Left => &self.left,
            Ear::Right => &self.right,
        }
    }

    pub fn response(&self, ear: Ear, direction: usize, frequency: usize) -> Complex64 {
        self.table(ear)[direction * self.num_frequencies() + frequency]
    }

    /// The `Q` responses of one ear at frequency index `f`.
    pub fn ear_vector(&self, ear: Ear, frequency: usize) -> Vec<Complex64> {
        let nf = self.num_frequencies();
        self.table(ear).iter().skip(frequency).step_by(nf).copied().collect()
    }

    /// Both ears at frequency index `f`.
    pub fn targets(&self, frequency: usize) -> EarPair<Vec<Complex64>> {
        EarPair::new(self.ear_vector(Ear::Left, frequency), self.ear_vector(Ear::Right, frequency))
    }

    /// Multiplies every response by a per-frequency factor.
    pub fn scaled_per_frequency(&self, factor: impl Fn(usize) -> Complex64) -> HrtfSet {
        let nf = self.num_frequencies();
        let scale = |t: &[Complex64]| t.iter().enumerate().map(|(i, h)| h * factor(i % nf)).collect();
        HrtfSet {
            left: scale(&self.left),
            right: scale(&self.right),
            ..self.clone()
        }
    }
}

/// HRTFs of a rigid sphere, i.e. the surface pressure at each ear.
pub fn analytic_sphere_hrtf(
    sphere: &RigidSphere,
    ears: &EarGeometry,
    directions: &[Direction],
    frequencies_hz: &[f64],
    model: SourceModel,
    order: Order,
) -> Result<HrtfSet> {
    let a = sphere.radius_m();
    let per_freq: Vec<Vec<EarPair<Complex64>>> = frequencies_hz
        .par_iter()
        .map(|&f| {
            let k = sphere.wavenumber(f);
            let (expansion, norm) = match model {
                SourceModel::FarFieldPlaneWave => (ModalExpansion::plane_wave(sphere, a, k, order)?, Complex64::new(1.0, 0.0)),
                SourceModel::NearFieldPoint { distance_m } => (
                    ModalExpansion::point_source(sphere, distance_m, a, k, order)?,
                    free_field_factor(k, distance_m),
                ),
            };
            Ok(directions
                .iter()
                .map(|d| EarPair::new(
                    expansion.evaluate_between(d, &ears.left) / norm,
                    expansion.evaluate_between(d, &ears.right) / norm,
                ))
                .collect())
        })
        .collect::<Result<_>>()?;
    let reference = match model {
        SourceModel::FarFieldPlaneWave => f64::INFINITY,
        SourceModel::NearFieldPoint { distance_m } => distance_m,
    };
    let nf = frequencies_hz.len();
    let mut left = Vec::with_capacity(directions.len() * nf);
    let mut right = Vec::with_capacity(directions.len() * nf);
    for q in 0..directions.len() {
        for column in &per_freq {
            left.push(column[q].left);
            right.push(column[q].right);
        }
    }
    HrtfSet::new(directions.to_vec(), frequencies_hz.to_vec(), reference, left, right)
}

/// Moves a set to `target_distance_m` by multiplying each response with the
/// rigid-sphere pressure ratio (near / reference) at that ear.
///
/// The ratio carries the change of the free-field factor as well, so the
/// result is referenced to the free field at the *original* distance. Use
/// [`renormalize_distance`] to re-reference it to the target.
pub fn nearfield_transform(
    set: &HrtfSet,
    sphere: &RigidSphere,
    ears: &EarGeometry,
    target_distance_m: f64,
    order: Order,
) -> Result<HrtfSet> {
    let reference = set.reference_distance_m();
    if !reference.is_finite() {
        return Err(Error::Domain(
            "cannot apply a distance ratio to a plane-wave set (infinite reference distance)".into(),
        ));
    }
    let a = sphere.radius_m();
    let ratios: Vec<Vec<EarPair<Complex64>>> = set
        .frequencies_hz()
        .par_iter()
        .map(|&f| {
            let k = sphere.wavenumber(f);
            let near = ModalExpansion::point_source(sphere, target_distance_m, a, k, order)?;
            let far = ModalExpansion::point_source(sphere, reference, a, k, order)?;
            set.directions()
                .iter()
                .map(|d| {
                    let ratio = |ear: &Direction| {
                        let c = d.cos_angle_to(ear);
                        dvf_ratio(near.evaluate(c), far.evaluate(c))
                    };
                    Ok(EarPair::new(ratio(&ears.left)?, ratio(&ears.right)?))
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let nf = set.num_frequencies();
    let mut left = set.left.clone();
    let mut right = set.right.clone();
    for (i, (l, r)) in left.iter_mut().zip(right.iter_mut()).enumerate() {
        let ratio = ratios[i % nf][i / nf];
        *l *= ratio.left;
        *r *= ratio.right;
    }
    HrtfSet::new(set.directions.clone(), set.frequencies_hz.clone(), target_distance_m, left, right)
}

/// Free-field ratio `g(r_from) / g(r_to)` per frequency, with `g(r) = e^{-ikr}/r`.
pub fn renormalize_distance(set: &HrtfSet, sphere: &RigidSphere, from_distance_m: f64) -> HrtfSet {
    let to = set.reference_distance_m();
    let freqs = set.frequencies_hz().to_vec();
    set.scaled_per_frequency(|f| {
        let k = sphere.wavenumber(freqs[f]);
        free_field_factor(k, from_distance_m) / free_field_factor(k, to)
    })
}

/// Serializes a set in the tabular text format.
pub fn format_hrtf(set: &HrtfSet) -> String {
    let mut out = String::new();
    out.push_str("version 1\n");
    let _ = writeln!(out, "reference_distance_m {}", set.reference_distance_m);
    let _ = writeln!(out, "num_directions {}", set.num_directions());
    let _ = writeln!(out, "num_frequencies {}", set.num_frequencies());
    for d in &set.directions {
        let _ = writeln!(out, "dir {} {}", d.theta_deg(), d.phi_deg());
    }
    for f in &set.frequencies_hz {
        let _ = writeln!(out, "freq {f}");
    }
    let nf = set.num_frequencies();
    for (i, (l, r)) in set.left.iter().zip(&set.right).enumerate() {
        let _ = writeln!(out, "h {} {} {} {} {} {}", i / nf, i % nf, l.re, l.im, r.re, r.im);
    }
    out
}

pub fn save_hrtf(set: &HrtfSet, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, format_hrtf(set)).map_err(|e| Error::io(path, e))
}

pub fn load_hrtf(path: impl AsRef<Path>) -> Result<HrtfSet> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_hrtf(&text)
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last_line: usize,
}

impl<'a> Lines<'a> {
    /// Next non-empty line, comments stripped, as (line number, tokens).
    fn next_tokens(&mut self) -> Option<(usize, Vec<&'a str>)> {
        for (i, raw) in self.inner.by_ref() {
            self.last_line = i + 1;
            let content = raw.split('#').next().unwrap_or("");
            let tokens: Vec<&str> = content.split_whitespace().collect();
            if !tokens.is_empty() {
                return Some((i + 1, tokens));
            }
        }
        None
    }

    fn expect(&mut self, keyword: &str, arity: usize) -> Result<(usize, Vec<&'a str>)> {
        let (line, tokens) = self.next_tokens().ok_or_else(|| Error::Format {
            line: self.last_line + 1,
            message: format!("unexpected end of file, expected `{keyword}`"),
        })?;
        if tokens[0] != keyword {
            return Err(Error::Format {
                line,
                message: format!("expected `{keyword}`, found `{}`", tokens[0]),
            });
        }
        if tokens.len() != arity + 1 {
            return Err(Error::Format {
                line,
                message: format!("`{keyword}` takes {arity} value(s), found {}", tokens.len() - 1),
            });
        }
        Ok((line, tokens[1..].to_vec()))
    }
}

fn number<T: std::str::FromStr>(line: usize, token: &str) -> Result<T> {
    token.parse().map_err(|_| Error::Format {
        line,
        message: format!("cannot parse `{token}` as a number"),
    })
}

fn finite(line: usize, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Data {
            line,
            message: format!("non-finite value {v}"),
        })
    }
}

/// Parses the tabular text format.
pub fn parse_hrtf(text: &str) -> Result<HrtfSet> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
        last_line: 0,
    };
    let (line, v) = lines.expect("version", 1)?;
    if v[0] != "1" {
        return Err(Error::Format {
            line,
            message: format!("unsupported version `{}`", v[0]),
        });
    }
    let (line, v) = lines.expect("reference_distance_m", 1)?;
    let reference: f64 = number(line, v[0])?;
    if reference.is_nan() || reference <= 0.0 {
        return Err(Error::Data {
            line,
            message: format!("reference distance {reference} is not positive"),
        });
    }
    let (line, v) = lines.expect("num_directions", 1)?;
    let q: usize = number(line, v[0])?;
    let (line, v) = lines.expect("num_frequencies", 1)?;
    let nf: usize = number(line, v[0])?;
    if q == 0 || nf == 0 {
        return Err(Error::Data {
            line,
            message: "the direction and frequency counts must be positive".into(),
        });
    }

    let mut directions = Vec::with_capacity(q);
    let mut frequencies = Vec::with_capacity(nf);
    let mut left = Vec::with_capacity(q * nf);
    let mut right = Vec::with_capacity(q * nf);
    let mut counts = [0usize; 3];
    // remaining lines may appear only in block order: dir, freq, h
    let mut stage = 0;
    while let Some((line, tokens)) = lines.next_tokens() {
        let (block, arity) = match tokens[0] {
            "dir" => (0, 2),
            "freq" => (1, 1),
            "h" => (2, 6),
            other => {
                return Err(Error::Format {
                    line,
                    message: format!("unknown record `{other}`"),
                })
            }
        };
        if block < stage {
            return Err(Error::Format {
                line,
                message: format!("`{}` record after a later block", tokens[0]),
            });
        }
        if block > stage {
            let (what, expected) = [("direction lines", q), ("frequency lines", nf)][stage];
            if counts[stage] != expected {
                return Err(Error::Schema {
                    what: what.into(),
                    expected,
                    found: counts[stage],
                });
            }
            stage = block;
            if stage == 2 && counts[1] != nf {
                return Err(Error::Schema {
                    what: "frequency lines".into(),
                    expected: nf,
                    found: counts[1],
                });
            }
        }
        if tokens.len() != arity + 1 {
            return Err(Error::Format {
                line,
                message: format!("`{}` takes {arity} value(s), found {}", tokens[0], tokens.len() - 1),
            });
        }
        counts[block] += 1;
        match block {
            0 => {
                let theta = finite(line, number(line, tokens[1])?)?;
                let phi = finite(line, number(line, tokens[2])?)?;
                let d = Direction::from_degrees(theta, phi).map_err(|e| Error::Data {
                    line,
                    message: e.to_string(),
                })?;
                directions.push(d);
            }
            1 => {
                let f = finite(line, number(line, tokens[1])?)?;
                if f <= 0.0 {
                    return Err(Error::Data {
                        line,
                        message: format!("frequency {f} Hz is not positive"),
                    });
                }
                frequencies.push(f);
            }
            _ => {
                let qi: usize = number(line, tokens[1])?;
                let fi: usize = number(line, tokens[2])?;
                let idx = left.len();
                if idx >= q * nf {
                    return Err(Error::Schema {
                        what: "data lines".into(),
                        expected: q * nf,
                        found: idx + 1,
                    });
                }
                if qi != idx / nf || fi != idx % nf {
                    return Err(Error::Format {
                        line,
                        message: format!(
                            "expected indices ({} {}) in direction-major order, found ({qi} {fi})",
                            idx / nf,
                            idx % nf
                        ),
                    });
                }
                let mut vals = [0.0; 4];
                for (v, t) in vals.iter_mut().zip(&tokens[3..]) {
                    *v = finite(line, number(line, t)?)?;
                }
                left.push(Complex64::new(vals[0], vals[1]));
                right.push(Complex64::new(vals[2], vals[3]));
            }
        }
    }
    for (what, expected, found) in [
        ("direction lines", q, counts[0]),
        ("frequency lines", nf, counts[1]),
        ("data lines", q * nf, counts[2]),
    ] {
        if found != expected {
            return Err(Error::Schema {
                what: what.into(),
                expected,
                found,
            });
        }
    }
    HrtfSet::new(directions, frequencies, reference, left, right)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{point_source_pressure, FieldPoint, SourcePosition};

    fn order() -> Order {
        Order::new(30).unwrap()
    }

    fn dir(t: f64, p: f64) -> Direction {
        Direction::from_degrees(t, p).unwrap()
    }

    fn small_set() -> HrtfSet {
        let dirs = vec![dir(90.0, 0.0), dir(90.0, 90.0), dir(30.0, 200.0)];
        analytic_sphere_hrtf(
            &RigidSphere::default(),
            &EarGeometry::default(),
            &dirs,
            &[200.0, 1000.0, 4000.0],
            SourceModel::NearFieldPoint { distance_m: 3.2 },
            order(),
        )
        .unwrap()
    }

    #[test]
    fn frontal_source_is_symmetric() {
        let set = analytic_sphere_hrtf(
            &RigidSphere::default(),
            &EarGeometry::default(),
            &[dir(90.0, 0.0)],
            &[300.0, 3000.0, 9000.0],
            SourceModel::FarFieldPlaneWave,
            order(),
        )
        .unwrap();
        for f in 0..3 {
            let l = set.response(Ear::Left, 0, f).norm();
            let r = set.response(Ear::Right, 0, f).norm();
            assert!((l - r).abs() < 1e-9);
        }
    }

    #[test]
    fn long_wavelength_limit_is_unity() {
        let sphere = RigidSphere::default();
        let f = 1e-4 / sphere.radius_m() * sphere.speed_of_sound_mps() / (2.0 * std::f64::consts::PI);
        let dirs: Vec<Direction> = (0..12).map(|i| dir(15.0 * (i % 7) as f64, 30.0 * i as f64)).collect();
        for model in [SourceModel::FarFieldPlaneWave, SourceModel::NearFieldPoint { distance_m: 1000.0 }] {
            let set = analytic_sphere_hrtf(&sphere, &EarGeometry::default(), &dirs, &[f], model, order()).unwrap();
            for q in 0..dirs.len() {
                for ear in Ear::BOTH {
                    assert!((set.response(ear, q, 0).norm() - 1.0).abs() < 1e-3);
                }
            }
        }
    }

    #[test]
    fn lateral_source_favours_ipsilateral_ear() {
        let set = analytic_sphere_hrtf(
            &RigidSphere::default(),
            &EarGeometry::default(),
            &[dir(90.0, 90.0)],
            &[4000.0],
            SourceModel::FarFieldPlaneWave,
            order(),
        )
        .unwrap();
        assert!(set.response(Ear::Left, 0, 0).norm() > set.response(Ear::Right, 0, 0).norm());
    }

    #[test]
    fn point_model_divides_out_free_field_factor() {
        let sphere = RigidSphere::default();
        let ears = EarGeometry::default();
        let set = small_set();
        let k = sphere.wavenumber(1000.0);
        let p = point_source_pressure(
            &sphere,
            &SourcePosition::new(3.2, set.directions()[1]),
            &FieldPoint::on_surface(&sphere, ears.right),
            k,
            order(),
        )
        .unwrap();
        let want = p / free_field_factor(k, 3.2);
        assert!((set.response(Ear::Right, 1, 1) - want).norm() < 1e-13);
    }

    #[test]
    fn nearfield_identity_and_composition() {
        let sphere = RigidSphere::default();
        let ears = EarGeometry::default();
        let set = small_set();
        let same = nearfield_transform(&set, &sphere, &ears, 3.2, order()).unwrap();
        for ear in Ear::BOTH {
            for q in 0..3 {
                for f in 0..3 {
                    assert!((same.response(ear, q, f) - set.response(ear, q, f)).norm() < 1e-12);
                }
            }
        }
        let direct = nearfield_transform(&set, &sphere, &ears, 0.2, order()).unwrap();
        let via = nearfield_transform(&set, &sphere, &ears, 0.6, order()).unwrap();
        let via = nearfield_transform(&via, &sphere, &ears, 0.2, order()).unwrap();
        assert_eq!(direct.directions(), set.directions());
        assert_eq!(direct.frequencies_hz(), set.frequencies_hz());
        assert_eq!(direct.reference_distance_m(), 0.2);
        for ear in Ear::BOTH {
            for q in 0..3 {
                for f in 0..3 {
                    let a = direct.response(ear, q, f);
                    assert!((a - via.response(ear, q, f)).norm() <= 1e-10 * a.norm());
                }
            }
        }
    }

    #[test]
    fn close_source_raises_low_frequency_ipsilateral_level() {
        let sphere = RigidSphere::default();
        let ears = EarGeometry::default();
        let set = small_set();
        let near = nearfield_transform(&set, &sphere, &ears, 0.25, order()).unwrap();
        // direction 1 is at 90 degrees azimuth, left side
        assert!(near.response(Ear::Left, 1, 0).norm() > set.response(Ear::Left, 1, 0).norm());
        // re-referenced to the new distance the level is still above the far set
        let renorm = renormalize_distance(&near, &sphere, 3.2);
        assert!(renorm.response(Ear::Left, 1, 0).norm() > set.response(Ear::Left, 1, 0).norm());
    }

    #[test]
    fn renormalized_transform_matches_direct_analytic_set() {
        let sphere = RigidSphere::default();
        let ears = EarGeometry::default();
        let set = small_set();
        let near = renormalize_distance(&nearfield_transform(&set, &sphere, &ears, 0.3, order()).unwrap(), &sphere, 3.2);
        let direct = analytic_sphere_hrtf(
            &sphere,
            &ears,
            set.directions(),
            set.frequencies_hz(),
            SourceModel::NearFieldPoint { distance_m: 0.3 },
            order(),
        )
        .unwrap();
        for ear in Ear::BOTH {
            for q in 0..3 {
                for f in 0..3 {
                    let a = direct.response(ear, q, f);
                    assert!((a - near.response(ear, q, f)).norm() <= 1e-10 * a.norm());
                }
            }
        }
    }

    #[test]
    fn plane_wave_set_cannot_be_distance_transformed() {
        let set = analytic_sphere_hrtf(
            &RigidSphere::default(),
            &EarGeometry::default(),
            &[dir(90.0, 0.0)],
            &[500.0],
            SourceModel::FarFieldPlaneWave,
            order(),
        )
        .unwrap();
        assert!(nearfield_transform(&set, &RigidSphere::default(), &EarGeometry::default(), 0.5, order()).is_err());
    }

    #[test]
    fn text_round_trip() {
        let set = small_set();
        let back = parse_hrtf(&format_hrtf(&set)).unwrap();
        assert_eq!(back.num_directions(), 3);
        assert_eq!(back.frequencies_hz(), set.frequencies_hz());
        assert_eq!(back.reference_distance_m(), 3.2);
        for ear in Ear::BOTH {
            for q in 0..3 {
                assert!((back.directions()[q].theta() - set.directions()[q].theta()).abs() < 1e-12);
                assert!((back.directions()[q].phi() - set.directions()[q].phi()).abs() < 1e-12);
                for f in 0..3 {
                    assert_eq!(back.response(ear, q, f), set.response(ear, q, f));
                }
            }
        }
    }

    #[test]
    fn missing_data_row_is_a_schema_error() {
        let text = format_hrtf(&small_set());
        let truncated: Vec<&str> = text.lines().collect();
        let truncated = truncated[..truncated.len() - 1].join("\n");
        match parse_hrtf(&truncated) {
            Err(Error::Schema { expected, found, .. }) => {
                assert_eq!(expected, 9);
                assert_eq!(found, 8);
            }
            other => panic!("expected schema error, got {other:?}"),
        }
    }

    #[test]
    fn malformed_inputs_report_line_numbers() {
        let err = parse_hrtf("# comment\nversoin 1\n").unwrap_err();
        assert!(matches!(err, Error::Format { line: 2, .. }), "{err:?}");

        let err = parse_hrtf("version 1\nreference_distance_m abc\n").unwrap_err();
        assert!(matches!(err, Error::Format { line: 2, .. }), "{err:?}");

        let text = "version 1\nreference_distance_m 3.2\nnum_directions 1\nnum_frequencies 1\n\
                    dir 90 0\nfreq 100\nh 0 0 NaN 0 1 0\n";
        let err = parse_hrtf(text).unwrap_err();
        assert!(matches!(err, Error::Data { line: 7, .. }), "{err:?}");

        let text = "version 1\nreference_distance_m 3.2\nnum_directions 2\nnum_frequencies 1\n\
                    dir 90 0\nfreq 100\nh 0 0 1 0 1 0\n";
        let err = parse_hrtf(text).unwrap_err();
        assert!(matches!(err, Error::Schema { expected: 2, found: 1, .. }), "{err:?}");

        let text = "version 1\nreference_distance_m 3.2\nnum_directions 2\nnum_frequencies 1\n\
                    dir 90 0\ndir 90 10\nfreq 100\nh 1 0 1 0 1 0\nh 0 0 1 0 1 0\n";
        let err = parse_hrtf(text).unwrap_err();
        assert!(matches!(err, Error::Format { line: 8, .. }), "{err:?}");
    }

    #[test]
    fn set_constructor_rejects_non_finite_values() {
        let bad = HrtfSet::new(
            vec![dir(90.0, 0.0)],
            vec![100.0],
            1.0,
            vec![Complex64::new(f64::INFINITY, 0.0)],
            vec![Complex64::new(0.0, 0.0)],
        );
        assert!(matches!(bad, Err(Error::NonFinite(_))));
    }
}
