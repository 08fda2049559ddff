//! Log-regularized dynamics and ε-collision detection.
//!
//! `ln_ε(r) = ln r` for `r ≥ ε` and `ln ε - (1 - r/ε)` below, a C¹ non-decreasing blend
//! with `|ln_ε(r)| ≤ |ln r|` and `ln_ε'(r) ≤ 1/r`. The regularized flow coincides with
//! the exact one as long as all pairwise distances stay at or above `ε`.

use std::f64::consts::PI;

use super::{min_pair_distance, moment_vector, Trajectory, VortexConfig, VortexField, DIST_FLOOR};
use crate::error::{Error, Result};
use crate::geometry::{TangentVector, Vec3};

/// `(ln_ε(r), ln_ε'(r))`.
pub fn regularized_log(r: f64, eps: f64) -> (f64, f64) {
    if r >= eps {
        (r.ln(), 1.0 / r)
    } else {
        (eps.ln() - (1.0 - r / eps), 1.0 / eps)
    }
}

// Cutoffs up to the sphere's diameter are accepted; the bound |ln_ε| ≤ |ln r|
// only holds for ε ≤ 1.
fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps < 2.0) {
        return Err(Error::invalid(
            "eps",
            format!("must lie in (0, 2), got {eps}"),
        ));
    }
    Ok(())
}

/// The regularized point-vortex field with cutoff `eps`.
#[derive(Debug, Clone)]
pub struct RegularizedField {
    strengths: Vec<f64>,
    gamma: f64,
    eps: f64,
}

impl RegularizedField {
    pub fn new(strengths: Vec<f64>, gamma: f64, eps: f64) -> Result<Self> {
        check_eps(eps)?;
        Ok(Self {
            strengths,
            gamma,
            eps,
        })
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }
}

impl VortexField for RegularizedField {
    fn strengths(&self) -> &[f64] {
        &self.strengths
    }

    fn velocities(&self, points: &[Vec3], out: &mut [Vec3]) -> Result<()> {
        let n = points.len();
        let e3 = Vec3::z();
        for (o, x) in out.iter_mut().zip(points) {
            *o = e3.cross(x) * self.gamma;
        }
        for i in 0..n {
            for j in i + 1..n {
                let r = (points[i] - points[j]).norm();
                if r < DIST_FLOOR {
                    continue;
                }
                let (_, dlog) = regularized_log(r, self.eps);
                let k = points[i].cross(&points[j]) * (dlog / r);
                out[i] += k * (self.strengths[j] / (2.0 * PI));
                out[j] -= k * (self.strengths[i] / (2.0 * PI));
            }
        }
        Ok(())
    }

    fn energy(&self, points: &[Vec3]) -> Result<f64> {
        let n = points.len();
        let mut h = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                let r = (points[i] - points[j]).norm();
                h += self.strengths[i] * self.strengths[j] / (2.0 * PI)
                    * regularized_log(r, self.eps).0;
            }
        }
        Ok(h + self.gamma * moment_vector(points, &self.strengths).z)
    }
}

/// Velocities of the regularized dynamics; finite for every configuration.
pub fn regularized_rhs(cfg: &VortexConfig, eps: f64) -> Result<Vec<TangentVector>> {
    let field = RegularizedField::new(cfg.strengths().to_vec(), cfg.gamma(), eps)?;
    let pos = cfg.positions();
    let mut out = vec![Vec3::zeros(); pos.len()];
    field.velocities(&pos, &mut out)?;
    Ok(cfg
        .points()
        .iter()
        .zip(out)
        .map(|(base, vec)| TangentVector { base: *base, vec })
        .collect())
}

/// The regularized energy `H_ε`, conserved by the regularized flow.
pub fn regularized_hamiltonian(cfg: &VortexConfig, eps: f64) -> Result<f64> {
    RegularizedField::new(cfg.strengths().to_vec(), cfg.gamma(), eps)?.energy(&cfg.positions())
}

/// `Σ_{i≠j} exp(-η ln_ε |x_i - x_j|)`.
pub fn phi_eps(cfg: &VortexConfig, eps: f64, eta: f64) -> Result<f64> {
    check_eps(eps)?;
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::invalid(
            "eta",
            format!("must lie in (0, 1), got {eta}"),
        ));
    }
    let pos = cfg.positions();
    let mut sum = 0.0;
    for i in 0..pos.len() {
        for j in i + 1..pos.len() {
            let r = (pos[i] - pos[j]).norm();
            sum += 2.0 * (-eta * regularized_log(r, eps).0).exp();
        }
    }
    Ok(sum)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CollisionReport {
    pub first_collision_time: Option<f64>,
    pub colliding_pair: Option<(usize, usize)>,
    pub min_distance_series: Vec<f64>,
}

/// First time the sampled minimum pairwise distance reaches `eps`, linearly
/// interpolated between the bracketing samples.
pub fn first_eps_collision(traj: &Trajectory, eps: f64) -> CollisionReport {
    let mut report = CollisionReport {
        first_collision_time: None,
        colliding_pair: None,
        min_distance_series: Vec::with_capacity(traj.states.len()),
    };
    for (k, state) in traj.states.iter().enumerate() {
        let pos: Vec<Vec3> = state.iter().map(|p| p.into_inner()).collect();
        let (d, i, j) = min_pair_distance(&pos);
        report.min_distance_series.push(d);
        if report.first_collision_time.is_none() && d <= eps {
            let t = if k == 0 {
                traj.times[0]
            } else {
                let (t0, t1) = (traj.times[k - 1], traj.times[k]);
                let d0 = report.min_distance_series[k - 1];
                t0 + (d0 - eps) / (d0 - d) * (t1 - t0)
            };
            report.first_collision_time = Some(t);
            report.colliding_pair = Some((i, j));
        }
    }
    report
}
