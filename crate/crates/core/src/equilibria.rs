//! Constructors for stationary and rigidly rotating configurations.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::dynamics::VortexConfig;
use crate::error::{Error, Result};
use crate::geometry::{project_tangent, rotation_z, UnitVector3, Vec3};

/// Parameters of the four-vortex family: poles `±e3` with strengths
/// `κΓ, -(2 + κ)Γ` and two ring vortices of strength `Γ` at `(±a, 0, s)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FourVortexParams {
    pub a: f64,
    pub gamma: f64,
    pub ring_strength: f64,
    pub kappa: f64,
    pub s: f64,
    pub alpha_minus: f64,
    pub alpha_plus: f64,
    pub upsilon: f64,
}

impl FourVortexParams {
    /// Solves for the pole ratio `κ` that makes the configuration stationary.
    pub fn new(a: f64, gamma: f64, ring_strength: f64) -> Result<Self> {
        if !(a > 0.0 && a <= 1.0) {
            return Err(Error::invalid("a", format!("must lie in (0, 1], got {a}")));
        }
        if ring_strength == 0.0 || !ring_strength.is_finite() {
            return Err(Error::invalid("Gamma", "must be finite and nonzero"));
        }
        if !gamma.is_finite() {
            return Err(Error::invalid("gamma", "must be finite"));
        }
        let s = (1.0 - a * a).sqrt();
        let alpha_minus = 1.0 / (2.0 * (1.0 - s));
        let alpha_plus = 1.0 / (2.0 * (1.0 + s));
        let upsilon = 1.0 / (4.0 * a * a);
        let kappa = (-2.0 * s * upsilon - 2.0 * alpha_plus + 2.0 * PI * gamma / ring_strength)
            / (alpha_minus + alpha_plus);
        Ok(Self {
            a,
            gamma,
            ring_strength,
            kappa,
            s,
            alpha_minus,
            alpha_plus,
            upsilon,
        })
    }

    pub fn config(&self) -> Result<VortexConfig> {
        let g = self.ring_strength;
        let points = vec![
            UnitVector3::e3(),
            -UnitVector3::e3(),
            UnitVector3::new_normalize(Vec3::new(self.a, 0.0, self.s))?,
            UnitVector3::new_normalize(Vec3::new(-self.a, 0.0, self.s))?,
        ];
        let strengths = vec![self.kappa * g, -(2.0 + self.kappa) * g, g, g];
        VortexConfig::new(points, strengths, self.gamma)
    }
}

/// Counter-rotating vortices at the poles.
pub fn polar_pair(strength: f64, gamma: f64) -> Result<VortexConfig> {
    VortexConfig::new(
        vec![UnitVector3::e3(), -UnitVector3::e3()],
        vec![strength, -strength],
        gamma,
    )
}

pub fn kappa_stationary(a: f64, gamma: f64, ring_strength: f64) -> Result<f64> {
    Ok(FourVortexParams::new(a, gamma, ring_strength)?.kappa)
}

/// Stationary four-vortex configuration with unit ring strength.
pub fn four_vortex(a: f64, gamma: f64) -> Result<VortexConfig> {
    FourVortexParams::new(a, gamma, 1.0)?.config()
}

/// `N - 2` unit vortices on a ring of chord parameter `a` around the pole,
/// then `κ` at `e3` and `-(N - 2) - κ` at `-e3`.
pub fn vortex_crystal(n: usize, a: f64, kappa: f64, gamma: f64) -> Result<VortexConfig> {
    if n < 4 {
        return Err(Error::invalid(
            "n",
            format!("need at least 4 vortices, got {n}"),
        ));
    }
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::invalid("a", format!("must lie in (0, 1), got {a}")));
    }
    if !kappa.is_finite() {
        return Err(Error::invalid("kappa", "must be finite"));
    }
    let ring = n - 2;
    let x0 = Vec3::new(a, 0.0, (1.0 - a * a).sqrt());
    let mut points = (0..ring)
        .map(|i| UnitVector3::new_normalize(rotation_z(2.0 * PI * i as f64 / ring as f64) * x0))
        .collect::<Result<Vec<_>>>()?;
    points.push(UnitVector3::e3());
    points.push(-UnitVector3::e3());
    let mut strengths = vec![1.0; ring];
    strengths.push(kappa);
    strengths.push(-(ring as f64) - kappa);
    VortexConfig::new(points, strengths, gamma)
}

/// Moves every vortex along a random tangent direction by a chordal distance
/// drawn uniformly from `[0, delta]`.
pub fn perturb<R: Rng + ?Sized>(
    cfg: &VortexConfig,
    delta: f64,
    rng: &mut R,
) -> Result<VortexConfig> {
    if !(0.0..=2.0).contains(&delta) {
        return Err(Error::invalid(
            "delta",
            format!("must lie in [0, 2], got {delta}"),
        ));
    }
    if delta == 0.0 {
        return Ok(cfg.clone());
    }
    let moved: Vec<Vec3> = cfg
        .points()
        .iter()
        .map(|x| {
            let t = loop {
                let g = Vec3::new(
                    rng.sample(StandardNormal),
                    rng.sample(StandardNormal),
                    rng.sample(StandardNormal),
                );
                let t = project_tangent(x, &g);
                let n = t.norm();
                if n > 1e-6 {
                    break t / n;
                }
            };
            let chord = delta * rng.random::<f64>();
            let theta = 2.0 * (chord / 2.0).asin();
            x.as_vec() * theta.cos() + t * theta.sin()
        })
        .collect();
    cfg.with_positions(&moved)
}
