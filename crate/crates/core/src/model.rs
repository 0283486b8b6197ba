//! Probability densities and samplers of the local hidden-variable model.
//!
//! Angles are radians. A station's polarizer angle `a` and a photon's hidden
//! polarization angle `s` enter only through `zeta = a - s`, and every
//! dependence is on `2 * zeta`, so all quantities here have period π in `zeta`.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The three knobs of the model: delay exponent `d`, maximum delay `t0` and
/// coincidence window `window`, the last two in the same time unit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct ModelParams {
    d: f64,
    t0: f64,
    window: f64,
}

#[derive(Serialize, Deserialize)]
struct RawParams {
    d: f64,
    t0: f64,
    window: f64,
}

impl TryFrom<RawParams> for ModelParams {
    type Error = Error;

    fn try_from(raw: RawParams) -> Result<Self> {
        ModelParams::new(raw.d, raw.t0, raw.window)
    }
}

impl From<ModelParams> for RawParams {
    fn from(p: ModelParams) -> Self {
        RawParams {
            d: p.d,
            t0: p.t0,
            window: p.window,
        }
    }
}

impl ModelParams {
    pub fn new(d: f64, t0: f64, window: f64) -> Result<Self> {
        if !(d.is_finite() && d >= 0.0) {
            return Err(Error::invalid("d", format!("must be finite and >= 0, got {d}")));
        }
        if !(t0.is_finite() && t0 > 0.0) {
            return Err(Error::invalid("t0", format!("must be finite and > 0, got {t0}")));
        }
        if !(window.is_finite() && window >= 0.0) {
            return Err(Error::invalid(
                "window",
                format!("must be finite and >= 0, got {window}"),
            ));
        }
        Ok(ModelParams { d, t0, window })
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn window(&self) -> f64 {
        self.window
    }

    pub fn with_window(self, window: f64) -> Result<Self> {
        ModelParams::new(self.d, self.t0, window)
    }
}

/// A polarizer orientation in radians.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Setting(pub f64);

impl Setting {
    pub fn radians(angle: f64) -> Self {
        Setting(angle)
    }

    pub fn degrees(angle: f64) -> Self {
        Setting(angle.to_radians())
    }

    pub fn angle(self) -> f64 {
        self.0
    }

    /// The orientation folded into `[0, π)`; polarizers are axes, not arrows.
    pub fn normalized(self) -> f64 {
        normalize_angle(self.0)
    }
}

/// Folds an angle into `[0, π)`.
pub fn normalize_angle(angle: f64) -> f64 {
    let r = angle.rem_euclid(PI);
    if r >= PI {
        0.0
    } else {
        r
    }
}

/// Hidden polarization angles of the two photons of one pair, in `[0, 2π)`.
/// Always orthogonal: `s2 = s1 + π/2 (mod 2π)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HiddenPair {
    s1: f64,
    s2: f64,
}

impl HiddenPair {
    /// Builds the pair carried by a photon with hidden angle `s1`.
    pub fn from_s1(s1: f64) -> Self {
        let s1 = s1.rem_euclid(TAU);
        let s1 = if s1 >= TAU { 0.0 } else { s1 };
        let s2 = (s1 + FRAC_PI_2).rem_euclid(TAU);
        let s2 = if s2 >= TAU { 0.0 } else { s2 };
        HiddenPair { s1, s2 }
    }

    pub fn s1(&self) -> f64 {
        self.s1
    }

    pub fn s2(&self) -> f64 {
        self.s2
    }
}

/// Which of the two detectors behind a polarizing filter fired.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Outcome {
    Plus,
    Minus,
}

impl Outcome {
    pub const BOTH: [Outcome; 2] = [Outcome::Plus, Outcome::Minus];

    pub fn sign(self) -> i8 {
        match self {
            Outcome::Plus => 1,
            Outcome::Minus => -1,
        }
    }

    pub fn value(self) -> f64 {
        f64::from(self.sign())
    }
}

impl TryFrom<i64> for Outcome {
    type Error = Error;

    fn try_from(x: i64) -> Result<Self> {
        match x {
            1 => Ok(Outcome::Plus),
            -1 => Ok(Outcome::Minus),
            other => Err(Error::InvalidOutcome(other)),
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.sign())
    }
}

/// Angle between a polarizer and a hidden polarization.
pub fn zeta(setting: Setting, hidden: f64) -> f64 {
    setting.0 - hidden
}

/// Malus-law outcome probability `(1 + x cos 2ζ) / 2`.
pub fn outcome_prob(x: Outcome, zeta: f64) -> f64 {
    let c = (2.0 * zeta).cos();
    match x {
        Outcome::Plus => 0.5 * (1.0 + c),
        Outcome::Minus => 0.5 * (1.0 - c),
    }
}

/// Draws a detector outcome; `+1` with probability `outcome_prob(Plus, zeta)`.
pub fn sample_outcome<R: Rng + ?Sized>(zeta: f64, rng: &mut R) -> Outcome {
    let u: f64 = rng.random();
    if u < outcome_prob(Outcome::Plus, zeta) {
        Outcome::Plus
    } else {
        Outcome::Minus
    }
}

/// Maximum detection delay `T0 |sin 2ζ|^d`. With `d = 0` this is `T0` for
/// every `zeta`, including where `sin 2ζ = 0`.
pub fn delay_timescale(zeta: f64, params: &ModelParams) -> f64 {
    if params.d == 0.0 {
        return params.t0;
    }
    let t = params.t0 * (2.0 * zeta).sin().abs().powf(params.d);
    t.clamp(0.0, params.t0)
}

/// Uniform delay on `[0, T(ζ))`; exactly zero when `T(ζ) = 0`.
///
/// Always consumes one draw so the stream position does not depend on `zeta`.
pub fn sample_delay<R: Rng + ?Sized>(zeta: f64, params: &ModelParams, rng: &mut R) -> f64 {
    let u: f64 = rng.random();
    delay_timescale(zeta, params) * u
}

/// Draws `s1` uniformly on `[0, 2π)` and pairs it with its orthogonal partner.
pub fn sample_hidden_pair<R: Rng + ?Sized>(rng: &mut R) -> HiddenPair {
    let u: f64 = rng.random();
    HiddenPair::from_s1(TAU * u)
}
