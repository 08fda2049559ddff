//! Desingularized vortices as clouds of point particles.
//!
//! Each vortex `i` is replaced by `m` particles of circulation `Γ_i / m` spread over
//! the cap of chordal radius `ε` around it. All particles then move under the exact
//! point-vortex law, and the spread of each cloud around the point-vortex solution
//! is monitored through its center of vorticity and moments.

use std::cell::Cell;
use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::{kernel_raw, PointVortexField, SphereRk4, VortexConfig, VortexField};
use crate::error::{Error, Result};
use crate::geometry::{chord_to_geodesic, fibonacci_cap, sample_cap, UnitVector3, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BlobLayout {
    /// Independent uniform samples on the cap.
    #[default]
    Uniform,
    /// A Fibonacci spiral on the cap with a random phase.
    Fibonacci,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Particle {
    pub position: UnitVector3,
    pub circulation: f64,
    /// Index of the vortex this particle belongs to.
    pub blob: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlobCloud {
    particles: Vec<Particle>,
    eps: f64,
    beta: f64,
    reference: VortexConfig,
}

impl BlobCloud {
    pub fn particles(&self) -> &[Particle] {
        &self.particles
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn reference(&self) -> &VortexConfig {
        &self.reference
    }

    pub fn blob_count(&self) -> usize {
        self.reference.len()
    }

    /// Radius `ε^β` of the confinement balls.
    pub fn confinement_radius(&self) -> f64 {
        self.eps.powf(self.beta)
    }

    pub fn positions(&self) -> Vec<Vec3> {
        self.particles
            .iter()
            .map(|p| p.position.into_inner())
            .collect()
    }

    pub fn circulations(&self) -> Vec<f64> {
        self.particles.iter().map(|p| p.circulation).collect()
    }
}

/// Spreads each vortex of `reference` over `m` particles in the cap `C(x_i, eps)`.
pub fn blob_initialize<R: Rng + ?Sized>(
    reference: &VortexConfig,
    eps: f64,
    m: usize,
    beta: f64,
    layout: BlobLayout,
    rng: &mut R,
) -> Result<BlobCloud> {
    if !(eps > 0.0 && eps < 2.0) {
        return Err(Error::invalid(
            "eps",
            format!("must lie in (0, 2), got {eps}"),
        ));
    }
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::invalid(
            "beta",
            format!("must lie in (0, 1), got {beta}"),
        ));
    }
    if m == 0 {
        return Err(Error::invalid("particles_per_blob", "must be at least 1"));
    }
    let xs = reference.points();
    let reach = 2.0 * chord_to_geodesic(eps);
    for i in 0..xs.len() {
        for j in i + 1..xs.len() {
            if xs[i].geodesic_distance(&xs[j]) <= reach {
                return Err(Error::OverlappingCaps { i, j, eps });
            }
        }
    }
    let mut particles = Vec::with_capacity(m * xs.len());
    for (blob, (x, g)) in xs.iter().zip(reference.strengths()).enumerate() {
        let points = match layout {
            BlobLayout::Uniform => (0..m).map(|_| sample_cap(rng, x, eps)).collect(),
            BlobLayout::Fibonacci => fibonacci_cap(x, eps, m, 2.0 * PI * rng.random::<f64>()),
        };
        particles.extend(points.into_iter().map(|position| Particle {
            position,
            circulation: g / m as f64,
            blob,
        }));
    }
    Ok(BlobCloud {
        particles,
        eps,
        beta,
        reference: reference.clone(),
    })
}

/// Neumaier-compensated sum.
fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let (mut sum, mut c) = (0.0f64, 0.0f64);
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            c += (sum - t) + v;
        } else {
            c += (v - t) + sum;
        }
        sum = t;
    }
    sum + c
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlobMoments {
    pub circulation: f64,
    /// Center of vorticity, inside the unit ball.
    pub center: Vec3,
    /// Second moment about the center, normalized by the circulation.
    pub second_moment: f64,
    /// `4n`-th moments for the requested orders `n`.
    pub higher_moments: Vec<f64>,
    /// Largest particle distance to the center.
    pub radius: f64,
    /// Circulation carried farther than `r` from the center, per requested radius.
    pub mass_outside: Vec<f64>,
}

/// Moments of one cloud whose circulations share a sign.
pub fn blob_moments(
    positions: &[Vec3],
    circulations: &[f64],
    orders: &[u32],
    radii: &[f64],
) -> BlobMoments {
    let total = compensated_sum(circulations.iter().copied());
    let center = Vec3::from_fn(|c, _| {
        compensated_sum(positions.iter().zip(circulations).map(|(x, g)| g * x[c])) / total
    });
    let dist: Vec<f64> = positions.iter().map(|x| (x - center).norm()).collect();
    let weighted = |f: &dyn Fn(f64) -> f64| {
        compensated_sum(dist.iter().zip(circulations).map(|(d, g)| g * f(*d))) / total
    };
    BlobMoments {
        circulation: total,
        center,
        second_moment: weighted(&|d| d * d),
        higher_moments: orders
            .iter()
            .map(|&n| weighted(&|d| d.powi(4 * n as i32)))
            .collect(),
        radius: dist.iter().copied().fold(0.0, f64::max),
        mass_outside: radii
            .iter()
            .map(|&r| {
                compensated_sum(
                    dist.iter()
                        .zip(circulations)
                        .filter(|(d, _)| **d > r)
                        .map(|(_, g)| *g),
                )
            })
            .collect(),
    }
}

/// All particles under the exact kernel; coincident pairs are skipped and counted.
struct ParticleField {
    strengths: Vec<f64>,
    gamma: f64,
    dropped: Cell<u64>,
}

impl VortexField for ParticleField {
    fn strengths(&self) -> &[f64] {
        &self.strengths
    }

    fn velocities(&self, points: &[Vec3], out: &mut [Vec3]) -> Result<()> {
        let e3 = Vec3::z();
        for (o, x) in out.iter_mut().zip(points) {
            *o = e3.cross(x) * self.gamma;
        }
        let scale: Vec<f64> = self.strengths.iter().map(|g| g / (2.0 * PI)).collect();
        for i in 0..points.len() {
            let xi = points[i];
            let mut acc = Vec3::zeros();
            for j in i + 1..points.len() {
                match kernel_raw(&xi, &points[j]) {
                    Some(k) => {
                        acc += k * scale[j];
                        out[j] -= k * scale[i];
                    }
                    None => self.dropped.set(self.dropped.get() + 1),
                }
            }
            out[i] += acc;
        }
        Ok(())
    }

    fn energy(&self, _points: &[Vec3]) -> Result<f64> {
        Ok(f64::NAN)
    }
}

/// Diagnostics of one blob at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct BlobSample {
    pub time: f64,
    pub blob: usize,
    pub moments: BlobMoments,
    /// Point-vortex position `x_i(t)`.
    pub reference: Vec3,
    /// Largest particle distance to `x_i(t)`.
    pub max_deviation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentReport {
    pub eps: f64,
    pub beta: f64,
    pub orders: Vec<u32>,
    pub radii: Vec<f64>,
    /// Ordered by time, then blob.
    pub samples: Vec<BlobSample>,
    /// First diagnostic time at which a particle of blob `i` is farther than `ε^β` from `x_i(t)`.
    pub exit_times: Vec<Option<f64>>,
    /// Earliest exit over all blobs.
    pub exit_time: Option<f64>,
    /// Kernel evaluations skipped because two particles coincided.
    pub dropped_interactions: u64,
}

impl MomentReport {
    /// Largest support radius of blob `i` over the run.
    pub fn max_radius(&self, i: usize) -> f64 {
        self.samples
            .iter()
            .filter(|s| s.blob == i)
            .map(|s| s.moments.radius)
            .fold(0.0, f64::max)
    }
}

/// Evolves the particle system and the reference point vortices side by side,
/// taking diagnostics every `diag_every` steps and at the final time. With
/// `stop_at_exit`, the run ends at the first exit of any blob.
#[allow(clippy::too_many_arguments)]
pub fn blob_evolve(
    cloud: &BlobCloud,
    dt: f64,
    t_end: f64,
    diag_every: usize,
    orders: &[u32],
    radii: &[f64],
    stop_at_exit: bool,
) -> Result<MomentReport> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::invalid(
            "dt",
            format!("must be positive and finite, got {dt}"),
        ));
    }
    if !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(Error::invalid(
            "t_end",
            format!("must be non-negative, got {t_end}"),
        ));
    }
    if diag_every == 0 {
        return Err(Error::invalid("diag_every", "must be at least 1"));
    }
    let steps = ((t_end / dt) - 1e-9).ceil().max(0.0) as usize;
    let blobs = cloud.blob_count();
    let members: Vec<Vec<usize>> = (0..blobs)
        .map(|b| {
            (0..cloud.particles.len())
                .filter(|&p| cloud.particles[p].blob == b)
                .collect()
        })
        .collect();
    let circulations = cloud.circulations();
    let field = ParticleField {
        strengths: circulations.clone(),
        gamma: cloud.reference.gamma(),
        dropped: Cell::new(0),
    };
    let reference_field = PointVortexField::from_config(&cloud.reference);
    let mut x = cloud.positions();
    let mut xr = cloud.reference.positions();
    let mut rk = SphereRk4::new(x.len());
    let mut rk_ref = SphereRk4::new(xr.len());
    let limit = cloud.confinement_radius();

    let mut report = MomentReport {
        eps: cloud.eps,
        beta: cloud.beta,
        orders: orders.to_vec(),
        radii: radii.to_vec(),
        samples: Vec::new(),
        exit_times: vec![None; blobs],
        exit_time: None,
        dropped_interactions: 0,
    };
    let diagnose = |report: &mut MomentReport, t: f64, x: &[Vec3], xr: &[Vec3]| {
        for (b, idx) in members.iter().enumerate() {
            let pos: Vec<Vec3> = idx.iter().map(|&p| x[p]).collect();
            let gs: Vec<f64> = idx.iter().map(|&p| circulations[p]).collect();
            let max_deviation = pos.iter().map(|p| (p - xr[b]).norm()).fold(0.0, f64::max);
            if max_deviation > limit && report.exit_times[b].is_none() {
                report.exit_times[b] = Some(t);
                if report.exit_time.is_none() {
                    report.exit_time = Some(t);
                }
            }
            report.samples.push(BlobSample {
                time: t,
                blob: b,
                moments: blob_moments(&pos, &gs, orders, radii),
                reference: xr[b],
                max_deviation,
            });
        }
    };

    diagnose(&mut report, 0.0, &x, &xr);
    let mut t = 0.0;
    for k in 1..=steps {
        let t_next = if k == steps { t_end } else { k as f64 * dt };
        rk.step(&field, &mut x, t_next - t)?;
        rk_ref.step(&reference_field, &mut xr, t_next - t)?;
        t = t_next;
        if k % diag_every == 0 || k == steps {
            diagnose(&mut report, t, &x, &xr);
            if stop_at_exit && report.exit_time.is_some() {
                break;
            }
        }
    }
    report.dropped_interactions = field.dropped.get();
    Ok(report)
}
