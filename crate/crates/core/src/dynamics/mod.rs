//! Point vortices on the rotating sphere.
//!
//! Vortex `i` at `x_i` with circulation `Γ_i` moves with
//! `ẋ_i = Σ_{j≠i} (Γ_j / 2π) K(x_i, x_j) + γ e3 ∧ x_i`, where
//! `K(x, y) = x ∧ y / |x - y|²` and `γ` is the planet's angular speed.

mod integrate;
mod regularized;

use std::f64::consts::PI;

use log::warn;

use crate::error::{Error, Result};
use crate::geometry::{TangentVector, UnitVector3, Vec3};

pub use integrate::{
    integrate, integrate_field, integrate_regularized, InvariantSample, PointVortexField,
    SphereRk4, Termination, Trajectory, VortexField,
};
pub use regularized::{
    first_eps_collision, phi_eps, regularized_hamiltonian, regularized_log, regularized_rhs,
    CollisionReport, RegularizedField,
};

/// Pairs closer than this are treated as collided by the exact kernel.
pub const DIST_FLOOR: f64 = 1e-14;
/// Default tolerance on `|Σ Γ_i|` when the Gauss constraint is enforced.
pub const GAUSS_TOL: f64 = 1e-12;

/// N points on the sphere with circulations and the planet rotation rate.
#[derive(Debug, Clone, PartialEq)]
pub struct VortexConfig {
    points: Vec<UnitVector3>,
    strengths: Vec<f64>,
    gamma: f64,
    strict_gauss: bool,
}

impl VortexConfig {
    /// Builds a configuration that must satisfy `|Σ Γ_i| ≤ GAUSS_TOL`.
    pub fn new(points: Vec<UnitVector3>, strengths: Vec<f64>, gamma: f64) -> Result<Self> {
        Self::build(points, strengths, gamma, true)
    }

    /// Builds a configuration that records but does not enforce the Gauss constraint.
    pub fn unconstrained(
        points: Vec<UnitVector3>,
        strengths: Vec<f64>,
        gamma: f64,
    ) -> Result<Self> {
        Self::build(points, strengths, gamma, false)
    }

    pub fn build(
        points: Vec<UnitVector3>,
        strengths: Vec<f64>,
        gamma: f64,
        strict_gauss: bool,
    ) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::invalid(
                "vortices",
                "at least two vortices are required",
            ));
        }
        if points.len() != strengths.len() {
            return Err(Error::invalid(
                "strengths",
                format!("{} strengths for {} points", strengths.len(), points.len()),
            ));
        }
        if let Some(i) = strengths.iter().position(|g| *g == 0.0 || !g.is_finite()) {
            return Err(Error::invalid(
                format!("vortices[{i}].strength"),
                "circulations must be finite and nonzero",
            ));
        }
        if !gamma.is_finite() {
            return Err(Error::invalid("gamma", "must be finite"));
        }
        let cfg = Self {
            points,
            strengths,
            gamma,
            strict_gauss,
        };
        let (d, i, j) = min_pair_distance(&cfg.positions());
        if d <= 0.0 {
            return Err(Error::invalid(
                format!("vortices[{j}].position"),
                format!("coincides with vortex {i}"),
            ));
        }
        let sum = cfg.gauss_sum();
        if sum.abs() > GAUSS_TOL {
            if strict_gauss {
                return Err(Error::GaussViolation {
                    sum,
                    tol: GAUSS_TOL,
                });
            }
            warn!("Gauss constraint not satisfied: sum of strengths = {sum:e}");
        }
        Ok(cfg)
    }

    pub fn points(&self) -> &[UnitVector3] {
        &self.points
    }

    pub fn strengths(&self) -> &[f64] {
        &self.strengths
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn strict_gauss(&self) -> bool {
        self.strict_gauss
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn gauss_sum(&self) -> f64 {
        self.strengths.iter().sum()
    }

    pub fn positions(&self) -> Vec<Vec3> {
        self.points.iter().map(|p| p.into_inner()).collect()
    }

    /// Same strengths and γ at new positions (renormalized onto the sphere).
    pub fn with_positions(&self, positions: &[Vec3]) -> Result<Self> {
        let points = positions
            .iter()
            .map(|p| UnitVector3::new_normalize(*p))
            .collect::<Result<Vec<_>>>()?;
        Self::build(
            points,
            self.strengths.clone(),
            self.gamma,
            self.strict_gauss,
        )
    }

    pub fn with_gamma(&self, gamma: f64) -> Self {
        Self {
            gamma,
            ..self.clone()
        }
    }
}

/// Smallest pairwise chordal distance and the pair `(i, j)`, `i < j`, attaining it.
pub fn min_pair_distance(points: &[Vec3]) -> (f64, usize, usize) {
    let mut best = (f64::INFINITY, 0, 0);
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            let d = (points[i] - points[j]).norm();
            if d < best.0 {
                best = (d, i, j);
            }
        }
    }
    best
}

#[inline]
pub(crate) fn kernel_raw(x: &Vec3, y: &Vec3) -> Option<Vec3> {
    let d = x - y;
    let r2 = d.norm_squared();
    if r2 < DIST_FLOOR * DIST_FLOOR {
        return None;
    }
    Some(x.cross(y) / r2)
}

/// `K(x, y) = x ∧ y / |x - y|²`.
pub fn biot_savart_kernel(x: &UnitVector3, y: &UnitVector3) -> Result<Vec3> {
    kernel_raw(x.as_vec(), y.as_vec()).ok_or(Error::DistanceUnderflow {
        i: 0,
        j: 1,
        distance: x.chordal_distance(y),
    })
}

/// Exact point-vortex velocities into `out`.
pub(crate) fn exact_velocities(
    points: &[Vec3],
    strengths: &[f64],
    gamma: f64,
    out: &mut [Vec3],
) -> Result<()> {
    let n = points.len();
    let e3 = Vec3::z();
    for (o, x) in out.iter_mut().zip(points) {
        *o = e3.cross(x) * gamma;
    }
    for i in 0..n {
        for j in i + 1..n {
            let k = kernel_raw(&points[i], &points[j]).ok_or_else(|| Error::DistanceUnderflow {
                i,
                j,
                distance: (points[i] - points[j]).norm(),
            })?;
            // K(x_j, x_i) = -K(x_i, x_j)
            out[i] += k * (strengths[j] / (2.0 * PI));
            out[j] -= k * (strengths[i] / (2.0 * PI));
        }
    }
    Ok(())
}

/// Velocity of every vortex.
pub fn vortex_rhs(cfg: &VortexConfig) -> Result<Vec<TangentVector>> {
    let pos = cfg.positions();
    let mut out = vec![Vec3::zeros(); pos.len()];
    exact_velocities(&pos, &cfg.strengths, cfg.gamma, &mut out)?;
    Ok(cfg
        .points
        .iter()
        .zip(out)
        .map(|(base, vec)| TangentVector { base: *base, vec })
        .collect())
}

pub(crate) fn exact_energy(points: &[Vec3], strengths: &[f64], gamma: f64) -> Result<f64> {
    let n = points.len();
    let mut h = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            let r = (points[i] - points[j]).norm();
            if r < DIST_FLOOR {
                return Err(Error::DistanceUnderflow { i, j, distance: r });
            }
            // each unordered pair appears twice in the ordered sum
            h += strengths[i] * strengths[j] / (2.0 * PI) * r.ln();
        }
    }
    Ok(h + gamma * moment_vector(points, strengths).z)
}

/// `Σ_{i≠j} (Γ_iΓ_j / 4π) ln|x_i - x_j| + γ e3 · Σ Γ_i x_i`.
pub fn hamiltonian(cfg: &VortexConfig) -> Result<f64> {
    exact_energy(&cfg.positions(), &cfg.strengths, cfg.gamma)
}

pub(crate) fn moment_vector(points: &[Vec3], strengths: &[f64]) -> Vec3 {
    points
        .iter()
        .zip(strengths)
        .fold(Vec3::zeros(), |acc, (x, g)| acc + x * *g)
}

/// `Σ Γ_i x_i`.
pub fn circulation_moment(cfg: &VortexConfig) -> Vec3 {
    moment_vector(&cfg.positions(), &cfg.strengths)
}

/// `e3 · Σ Γ_i x_i`.
pub fn vertical_moment(cfg: &VortexConfig) -> f64 {
    circulation_moment(cfg).z
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::sample_uniform;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn polar(g: f64, gamma: f64) -> VortexConfig {
        VortexConfig::new(
            vec![UnitVector3::e3(), -UnitVector3::e3()],
            vec![g, -g],
            gamma,
        )
        .unwrap()
    }

    #[test]
    fn kernel_examples() {
        let k = biot_savart_kernel(&UnitVector3::e3(), &-UnitVector3::e3()).unwrap();
        assert_eq!(k, Vec3::zeros());
        let k = biot_savart_kernel(&UnitVector3::e1(), &UnitVector3::e2()).unwrap();
        assert_abs_diff_eq!(k, Vec3::z() / 2.0, epsilon = 1e-16);
        let e1 = UnitVector3::e1();
        assert!(matches!(
            biot_savart_kernel(&e1, &e1),
            Err(Error::DistanceUnderflow { .. })
        ));
    }

    #[test]
    fn kernel_bound_and_tangency() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..1000 {
            let x = sample_uniform(&mut rng);
            let y = sample_uniform(&mut rng);
            let k = biot_savart_kernel(&x, &y).unwrap();
            assert!(k.norm() <= 1.0 / x.chordal_distance(&y) * (1.0 + 1e-14));
            assert!(k.dot(x.as_vec()).abs() <= 1e-12 * k.norm().max(1.0));
        }
    }

    #[test]
    fn config_validation() {
        let e3 = UnitVector3::e3();
        assert!(VortexConfig::new(vec![e3], vec![1.0], 0.0).is_err());
        assert!(VortexConfig::new(vec![e3, e3], vec![1.0, -1.0], 0.0).is_err());
        assert!(VortexConfig::new(vec![e3, -e3], vec![1.0, 0.0], 0.0).is_err());
        assert!(matches!(
            VortexConfig::new(vec![e3, -e3], vec![1.0, -0.5], 0.0),
            Err(Error::GaussViolation { .. })
        ));
        let cfg = VortexConfig::unconstrained(vec![e3, -e3], vec![1.0, -0.5], 0.0).unwrap();
        assert_eq!(cfg.gauss_sum(), 0.5);
    }

    #[test]
    fn polar_pair_is_stationary() {
        for (g, gamma) in [(1.0, 0.0), (3.0, 7.0), (-2.0, -1.5)] {
            for v in vortex_rhs(&polar(g, gamma)).unwrap() {
                assert!(v.vec.norm() <= 1e-15);
            }
        }
    }

    #[test]
    fn equatorial_pair_is_pure_planetary_advection() {
        let cfg = VortexConfig::new(
            vec![UnitVector3::e1(), -UnitVector3::e1()],
            vec![2.0, -2.0],
            0.7,
        )
        .unwrap();
        for v in vortex_rhs(&cfg).unwrap() {
            let expect = Vec3::z().cross(v.base.as_vec()) * 0.7;
            assert_abs_diff_eq!(v.vec, expect, epsilon = 1e-15);
        }
        assert_eq!(vertical_moment(&cfg), 0.0);
    }

    #[test]
    fn polar_pair_energy_and_moment() {
        let g: f64 = 1.7;
        let gamma = 0.4;
        let cfg = polar(g, gamma);
        // two ordered pairs, each -Γ²/(4π) ln 2, plus γ e3·(Γ e3 + Γ e3)
        let expect = -g * g * 2f64.ln() / (2.0 * PI) + 2.0 * gamma * g;
        assert_abs_diff_eq!(hamiltonian(&cfg).unwrap(), expect, epsilon = 1e-14);
        assert_abs_diff_eq!(vertical_moment(&cfg), 2.0 * g, epsilon = 1e-15);
    }

    #[test]
    fn energy_matches_ordered_double_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let pts: Vec<_> = (0..5).map(|_| sample_uniform(&mut rng)).collect();
        let gs = vec![1.0, -0.3, 2.0, -1.2, -1.5];
        let cfg = VortexConfig::new(pts.clone(), gs.clone(), 0.9).unwrap();
        let mut h = 0.0;
        for i in 0..5 {
            for j in 0..5 {
                if i != j {
                    h += gs[i] * gs[j] / (4.0 * PI) * pts[i].chordal_distance(&pts[j]).ln();
                }
            }
            h += 0.9 * gs[i] * pts[i].as_vec().z;
        }
        assert_abs_diff_eq!(hamiltonian(&cfg).unwrap(), h, epsilon = 1e-13);
        let h0 = hamiltonian(&cfg.with_gamma(0.0)).unwrap();
        assert_abs_diff_eq!(h - h0, 0.9 * vertical_moment(&cfg), epsilon = 1e-13);
    }

    #[test]
    fn rhs_is_tangent() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..200 {
            let pts: Vec<_> = (0..4).map(|_| sample_uniform(&mut rng)).collect();
            let cfg = VortexConfig::new(pts, vec![1.0, 2.0, -0.5, -2.5], 1.3).unwrap();
            for v in vortex_rhs(&cfg).unwrap() {
                assert!(v.base.as_vec().dot(&v.vec).abs() <= 1e-10);
            }
        }
    }
}
