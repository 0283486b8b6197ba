//! Exact predictions of the model by deterministic quadrature, and the quantum
//! reference correlations.
//!
//! With orthogonal hidden polarizations (`s2 = s1 + π/2`) and uniform `s1`, the
//! average over the hidden pair is a single integral over `s ∈ [0, π)` (the
//! integrand has period π). Conditioning on coincidence divides by the same
//! integral taken over the weight alone.

pub mod quadrature;
pub mod weight;

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::analysis::{chsh_from_correlations, ChshQuadruple};
use crate::error::{Error, Result};
use crate::model::{delay_timescale, outcome_prob, zeta, ModelParams, Outcome, Setting};

pub use quadrature::{integrate, AdaptiveSettings, Integral};
pub use weight::{weight_approx, weight_exact, weight_grid};

/// How the coincidence weight is evaluated inside the outer integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WeightRule {
    ClosedForm,
    /// [`weight_grid`] with this many cells; slow, for cross-checks only.
    Grid { cells: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    /// Absolute error target of the outer integral over `s`.
    pub tolerance: f64,
    pub max_subdivisions: usize,
    pub weight: WeightRule,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            tolerance: 1e-8,
            max_subdivisions: 5000,
            weight: WeightRule::ClosedForm,
        }
    }
}

impl QuadratureSpec {
    fn adaptive(&self) -> Result<AdaptiveSettings> {
        if !(self.tolerance > 0.0) {
            return Err(Error::invalid("tolerance", format!("must be > 0, got {}", self.tolerance)));
        }
        Ok(AdaptiveSettings {
            tolerance: self.tolerance,
            max_subdivisions: self.max_subdivisions,
        })
    }
}

/// Local quantities of both stations at hidden angle `s` (photon 1's polarization).
struct Local {
    zeta1: f64,
    zeta2: f64,
    weight: f64,
}

struct Integrand<'a> {
    a1: Setting,
    a2: Setting,
    params: &'a ModelParams,
    rule: WeightRule,
}

impl Integrand<'_> {
    fn at(&self, s: f64) -> Local {
        let zeta1 = zeta(self.a1, s);
        let zeta2 = zeta(self.a2, s + FRAC_PI_2);
        let t1 = delay_timescale(zeta1, self.params);
        let t2 = delay_timescale(zeta2, self.params);
        let w = self.params.window();
        let weight = match self.rule {
            WeightRule::ClosedForm => weight::band_weight(t1, t2, w),
            WeightRule::Grid { cells } => {
                if t1 > 0.0 && t2 > 0.0 {
                    weight_grid(t1, t2, w, cells).unwrap_or(f64::NAN)
                } else {
                    weight::band_weight(t1, t2, w)
                }
            }
        };
        Local {
            zeta1,
            zeta2,
            weight,
        }
    }

    /// Points in `[0, π)` where the weight is not smooth and that are cheap to
    /// locate: zeros of either timescale, and where a timescale equals `W`.
    fn anchors(&self) -> Vec<f64> {
        let p = self.params;
        let mut offsets = vec![0.0];
        if p.d() > 0.0 && p.window() < p.t0() {
            let half = 0.5 * (p.window() / p.t0()).powf(1.0 / p.d()).asin();
            offsets.extend([half, -half]);
        }
        let mut out = Vec::new();
        for a in [self.a1.angle(), self.a2.angle()] {
            for k in 0..2 {
                for off in &offsets {
                    out.push((a + off + k as f64 * FRAC_PI_2).rem_euclid(PI));
                }
            }
        }
        out
    }

    fn integrate<const N: usize>(
        &self,
        spec: &QuadratureSpec,
        f: impl Fn(&Local) -> [f64; N],
    ) -> Result<Integral<N>> {
        let settings = spec.adaptive()?;
        integrate(|s| f(&self.at(s)), 0.0, PI, &self.anchors(), &settings)
    }
}

fn check_rule(rule: WeightRule) -> Result<()> {
    match rule {
        WeightRule::Grid { cells: 0 } => Err(Error::invalid("weight", "grid needs cells > 0")),
        _ => Ok(()),
    }
}

fn ratio(num: f64, den: f64) -> Result<f64> {
    if den <= 0.0 {
        return Err(Error::invalid(
            "window",
            "coincidence probability is zero for these parameters",
        ));
    }
    Ok(num / den)
}

/// Joint outcome probability conditioned on coincidence.
pub fn joint_prob(
    x1: Outcome,
    x2: Outcome,
    a1: Setting,
    a2: Setting,
    params: &ModelParams,
    quad: &QuadratureSpec,
) -> Result<f64> {
    check_rule(quad.weight)?;
    let integrand = Integrand {
        a1,
        a2,
        params,
        rule: quad.weight,
    };
    let r = integrand.integrate(quad, |l| {
        let p = outcome_prob(x1, l.zeta1) * outcome_prob(x2, l.zeta2);
        [p * l.weight, l.weight]
    })?;
    ratio(r.value[0], r.value[1])
}

/// Probability that a pair emitted with settings `(a1, a2)` is counted as a
/// coincidence: the mean weight over the hidden polarization.
pub fn coincidence_probability(
    a1: Setting,
    a2: Setting,
    params: &ModelParams,
    quad: &QuadratureSpec,
) -> Result<f64> {
    check_rule(quad.weight)?;
    let integrand = Integrand {
        a1,
        a2,
        params,
        rule: quad.weight,
    };
    let r = integrand.integrate(quad, |l| [l.weight])?;
    Ok(r.value[0] / PI)
}

/// Correlation `E = Σ x1 x2 p(x1, x2 | a1, a2)` among coincident pairs.
pub fn correlation_exact(
    a1: Setting,
    a2: Setting,
    params: &ModelParams,
    quad: &QuadratureSpec,
) -> Result<f64> {
    check_rule(quad.weight)?;
    let integrand = Integrand {
        a1,
        a2,
        params,
        rule: quad.weight,
    };
    // Σ x1 x2 p(x1|ζ1) p(x2|ζ2) = cos 2ζ1 cos 2ζ2
    let r = integrand.integrate(quad, |l| {
        let c = (2.0 * l.zeta1).cos() * (2.0 * l.zeta2).cos();
        [c * l.weight, l.weight]
    })?;
    Ok(ratio(r.value[0], r.value[1])?.clamp(-1.0, 1.0))
}

/// CHSH `S` of the model's exact correlations.
pub fn chsh_exact(
    quadruple: &ChshQuadruple,
    params: &ModelParams,
    quad: &QuadratureSpec,
) -> Result<f64> {
    let mut e = [0.0; 4];
    for (k, (s1, s2)) in quadruple.combinations().into_iter().enumerate() {
        e[k] = correlation_exact(s1, s2, params, quad)?;
    }
    Ok(chsh_from_correlations(e))
}

/// `-cos 2(a1 - a2)`: the rotationally invariant pure (singlet-like) state.
pub fn singlet_correlation(a1: Setting, a2: Setting) -> f64 {
    -(2.0 * (a1.angle() - a2.angle())).cos()
}

/// `-cos 2(a1 - a2) / 2`: the rotationally invariant mixture.
pub fn mixed_correlation(a1: Setting, a2: Setting) -> f64 {
    0.5 * singlet_correlation(a1, a2)
}
