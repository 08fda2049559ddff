//! Geometric primitives on the unit sphere S² embedded in ℝ³.
//!
//! Distances are chordal (Euclidean in ℝ³) unless a function says otherwise.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Matrix3x2, Vector2, Vector3};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;

/// Allowed deviation of `|x|²` from one for a [`UnitVector3`].
pub const UNIT_TOL: f64 = 1e-12;
/// Allowed `|x · v|` for a tangent vector at `x`.
pub const TANGENT_TOL: f64 = 1e-10;
/// Tangent bases switch to the fixed polar branch when `|x · e3| ≥ 1 - POLE_THRESHOLD`.
pub const POLE_THRESHOLD: f64 = 1e-9;

/// A point of S².
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitVector3(Vec3);

impl UnitVector3 {
    /// Normalizes `v` onto the sphere. Fails on zero or non-finite input.
    pub fn new_normalize(v: Vec3) -> Result<Self> {
        let n = v.norm();
        if !n.is_finite() || n < 1e-300 {
            return Err(Error::invalid("point", format!("cannot normalize {v:?}")));
        }
        Ok(Self(v / n))
    }

    /// Accepts `v` only if it is already unit to [`UNIT_TOL`].
    pub fn new_checked(v: Vec3) -> Result<Self> {
        let dev = (v.norm_squared() - 1.0).abs();
        if !(dev <= UNIT_TOL) {
            return Err(Error::invalid(
                "point",
                format!("| |x|^2 - 1 | = {dev:e} exceeds {UNIT_TOL:e}"),
            ));
        }
        Ok(Self(v))
    }

    pub fn from_xyz(x: f64, y: f64, z: f64) -> Result<Self> {
        Self::new_normalize(Vec3::new(x, y, z))
    }

    /// Renormalizes without validation; callers guarantee a non-degenerate input.
    pub(crate) fn renormalized(v: Vec3) -> Self {
        Self(v / v.norm())
    }

    pub fn e1() -> Self {
        Self(Vec3::x())
    }

    pub fn e2() -> Self {
        Self(Vec3::y())
    }

    pub fn e3() -> Self {
        Self(Vec3::z())
    }

    /// The north pole `e3`.
    pub fn north_pole() -> Self {
        Self::e3()
    }

    pub fn as_vec(&self) -> &Vec3 {
        &self.0
    }

    pub fn into_inner(self) -> Vec3 {
        self.0
    }

    pub fn dot(&self, other: &UnitVector3) -> f64 {
        self.0.dot(&other.0)
    }

    pub fn chordal_distance(&self, other: &UnitVector3) -> f64 {
        (self.0 - other.0).norm()
    }

    pub fn geodesic_distance(&self, other: &UnitVector3) -> f64 {
        chord_to_geodesic(self.chordal_distance(other))
    }
}

impl std::ops::Neg for UnitVector3 {
    type Output = UnitVector3;

    fn neg(self) -> Self::Output {
        UnitVector3(-self.0)
    }
}

/// A vector of `T_x S²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TangentVector {
    pub base: UnitVector3,
    pub vec: Vec3,
}

impl TangentVector {
    pub fn new(base: UnitVector3, vec: Vec3) -> Result<Self> {
        let normal = base.as_vec().dot(&vec);
        if !(normal.abs() <= TANGENT_TOL * vec.norm().max(1.0)) {
            return Err(Error::invalid(
                "tangent vector",
                format!("normal component {normal:e}"),
            ));
        }
        Ok(Self { base, vec })
    }
}

/// Orthonormal basis `(b1, b2)` of `T_x S²` with `(x, b1, b2)` direct.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TangentBasis {
    pub base: UnitVector3,
    pub b1: Vec3,
    pub b2: Vec3,
}

impl TangentBasis {
    pub fn new(base: UnitVector3, b1: Vec3, b2: Vec3) -> Result<Self> {
        let x = base.as_vec();
        let checks = [
            x.dot(&b1),
            x.dot(&b2),
            b1.dot(&b2),
            b1.norm() - 1.0,
            b2.norm() - 1.0,
            x.dot(&b1.cross(&b2)) - 1.0,
        ];
        if checks.iter().any(|c| !(c.abs() <= 1e-10)) {
            return Err(Error::invalid(
                "tangent basis",
                "(x, b1, b2) must be a direct orthonormal triple",
            ));
        }
        Ok(Self { base, b1, b2 })
    }

    /// The 3×2 matrix with columns `b1`, `b2`.
    pub fn matrix(&self) -> Matrix3x2<f64> {
        Matrix3x2::from_columns(&[self.b1, self.b2])
    }

    /// Coordinates of an ambient vector's tangential part in this basis.
    pub fn coords(&self, v: &Vec3) -> Vector2<f64> {
        Vector2::new(self.b1.dot(v), self.b2.dot(v))
    }

    pub fn embed(&self, c: &Vector2<f64>) -> Vec3 {
        self.b1 * c[0] + self.b2 * c[1]
    }

    /// The same plane with both vectors turned by `theta` about `base`.
    pub fn rotated(&self, theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self {
            base: self.base,
            b1: self.b1 * c + self.b2 * s,
            b2: self.b2 * c - self.b1 * s,
        }
    }
}

/// Direct rotation by `theta` about the vertical axis.
pub fn rotation_z(theta: f64) -> Matrix3<f64> {
    let (s, c) = theta.sin_cos();
    Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

/// `(Id - x⊗x) v`.
pub fn project_tangent(x: &UnitVector3, v: &Vec3) -> Vec3 {
    let x = x.as_vec();
    v - x * x.dot(v)
}

/// Deterministic direct orthonormal basis of `T_x S²`.
///
/// Away from the poles `b1 = (e3 ∧ x)/|e3 ∧ x|` and `b2 = x ∧ b1`. Within
/// [`POLE_THRESHOLD`] of a pole `b1` is the normalized tangential part of `e1`, which
/// gives `(e1, e2)` at `e3` and `(e1, -e2)` at `-e3`.
pub fn tangent_basis(x: &UnitVector3) -> TangentBasis {
    let v = x.as_vec();
    if v.z.abs() >= 1.0 - POLE_THRESHOLD {
        let w = Vec3::x() - v * v.x;
        let b1 = w / w.norm();
        return TangentBasis {
            base: *x,
            b1,
            b2: v.cross(&b1),
        };
    }
    let w = Vec3::z().cross(v);
    let b1 = w / w.norm();
    let b2 = v.cross(&b1);
    TangentBasis { base: *x, b1, b2 }
}

/// Surface area of the chordal cap `{y ∈ S² : |y - x| ≤ r}`, which is `π r²`.
pub fn cap_area(r: f64) -> Result<f64> {
    if !(0.0..=2.0).contains(&r) {
        return Err(Error::invalid(
            "r",
            format!("chordal radius {r} outside [0, 2]"),
        ));
    }
    Ok(PI * r * r)
}

pub fn chord_to_geodesic(r: f64) -> f64 {
    2.0 * (r / 2.0).clamp(-1.0, 1.0).asin()
}

pub fn geodesic_to_chord(d: f64) -> f64 {
    2.0 * (d / 2.0).sin()
}

/// Uniform point on S² from three standard normals (resampled when the norm is below 1e-6).
pub fn sample_uniform<R: Rng + ?Sized>(rng: &mut R) -> UnitVector3 {
    loop {
        let v = Vec3::new(
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
        );
        let n = v.norm();
        if n >= 1e-6 {
            return UnitVector3(v / n);
        }
    }
}

/// Point of the cap with height `1 - u r²/2` above `center` and azimuth `phi`.
fn cap_point(center: &UnitVector3, r: f64, u: f64, phi: f64) -> UnitVector3 {
    let basis = tangent_basis(center);
    let z = 1.0 - 0.5 * u * r * r;
    let rho = (1.0 - z * z).max(0.0).sqrt();
    let (s, c) = phi.sin_cos();
    UnitVector3::renormalized(center.as_vec() * z + (basis.b1 * c + basis.b2 * s) * rho)
}

/// Uniform point of the chordal cap `C(center, r)`.
pub fn sample_cap<R: Rng + ?Sized>(rng: &mut R, center: &UnitVector3, r: f64) -> UnitVector3 {
    let u: f64 = rng.random();
    let phi: f64 = rng.random::<f64>() * 2.0 * PI;
    cap_point(center, r, u, phi)
}

/// Stratified (golden-angle) layout of `m` points on `C(center, r)`, equal area per point.
pub fn fibonacci_cap(center: &UnitVector3, r: f64, m: usize, phase: f64) -> Vec<UnitVector3> {
    let golden = PI * (3.0 - 5f64.sqrt());
    (0..m)
        .map(|k| {
            let u = (k as f64 + 0.5) / m as f64;
            cap_point(center, r, u, phase + golden * k as f64)
        })
        .collect()
}

/// `∫_{S²} |N - y|^{-α} dσ(y) = 2^{3-α} π / (2 - α)` for `0 ≤ α < 2`.
pub fn singular_moment_integral(alpha: f64) -> Result<f64> {
    if !(0.0..2.0).contains(&alpha) {
        return Err(Error::invalid(
            "alpha",
            format!("{alpha} outside [0, 2): the integral diverges for alpha >= 2"),
        ));
    }
    Ok(2f64.powf(3.0 - alpha) * PI / (2.0 - alpha))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rotation_identity_and_quarter_turn() {
        assert_eq!(rotation_z(0.0), Matrix3::identity());
        let r = rotation_z(PI / 2.0) * Vec3::x();
        assert_abs_diff_eq!(r, Vec3::y(), epsilon = 1e-15);
    }

    #[test]
    fn rotation_is_orthogonal_and_commutes_with_axis() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let theta = rng.random::<f64>() * 20.0 - 10.0;
            let r = rotation_z(theta);
            assert_abs_diff_eq!(r.transpose() * r, Matrix3::identity(), epsilon = 1e-14);
            assert_abs_diff_eq!(r.determinant(), 1.0, epsilon = 1e-14);
            let x = sample_uniform(&mut rng).into_inner();
            let lhs = r * Vec3::z().cross(&x);
            let rhs = Vec3::z().cross(&(r * x));
            assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-14);
        }
    }

    #[test]
    fn projection_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let e3 = UnitVector3::e3();
        assert_eq!(project_tangent(&e3, &Vec3::x()), Vec3::x());
        for _ in 0..100 {
            let x = sample_uniform(&mut rng);
            assert_abs_diff_eq!(project_tangent(&x, x.as_vec()).norm(), 0.0, epsilon = 1e-15);
            let h = Vec3::new(rng.random(), rng.random(), rng.random());
            let p = project_tangent(&x, &h);
            assert!(p.dot(x.as_vec()).abs() < 1e-15);
            assert_abs_diff_eq!(project_tangent(&x, &p), p, epsilon = 1e-15);
            let lhs = project_tangent(&x, &x.as_vec().cross(&h));
            let rhs = x.as_vec().cross(&p);
            assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-14);
        }
    }

    #[test]
    fn polar_bases() {
        let n = tangent_basis(&UnitVector3::e3());
        assert_eq!((n.b1, n.b2), (Vec3::x(), Vec3::y()));
        let s = tangent_basis(&-UnitVector3::e3());
        assert_eq!((s.b1, s.b2), (Vec3::x(), -Vec3::y()));
        TangentBasis::new(s.base, s.b1, s.b2).unwrap();
    }

    #[test]
    fn random_bases_are_direct_and_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            let x = sample_uniform(&mut rng);
            let b = tangent_basis(&x);
            TangentBasis::new(b.base, b.b1, b.b2).unwrap();
            let again = tangent_basis(&x);
            assert_eq!(b.b1.as_slice(), again.b1.as_slice());
            assert_eq!(b.b2.as_slice(), again.b2.as_slice());
            TangentBasis::new(x, b.rotated(1.3).b1, b.rotated(1.3).b2).unwrap();
        }
        let near_pole = UnitVector3::from_xyz(1e-6, 0.0, 1.0).unwrap();
        let b = tangent_basis(&near_pole);
        TangentBasis::new(b.base, b.b1, b.b2).unwrap();
    }

    #[test]
    fn cap_area_values() {
        assert_eq!(cap_area(0.0).unwrap(), 0.0);
        assert_abs_diff_eq!(cap_area(2.0).unwrap(), 4.0 * PI, epsilon = 1e-15);
        assert_abs_diff_eq!(cap_area(1.0).unwrap(), PI, epsilon = 1e-15);
        assert!(cap_area(2.5).is_err());
        assert!(cap_area(-0.1).is_err());
    }

    #[test]
    fn sampling_is_reproducible() {
        let mut a = ChaCha8Rng::seed_from_u64(11);
        let mut b = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            assert_eq!(sample_uniform(&mut a), sample_uniform(&mut b));
        }
    }

    #[test]
    fn uniform_sample_mean_and_cap_fraction() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let n = 100_000;
        let mut mean = Vec3::zeros();
        let mut inside = 0usize;
        let e3 = UnitVector3::e3();
        for _ in 0..n {
            let x = sample_uniform(&mut rng);
            assert!((x.as_vec().norm_squared() - 1.0).abs() <= UNIT_TOL);
            mean += x.as_vec();
            if x.chordal_distance(&e3) <= 1.0 {
                inside += 1;
            }
        }
        mean /= n as f64;
        assert!(mean.norm() < 0.02, "mean {mean:?}");
        let frac = inside as f64 / n as f64;
        assert!((frac - 0.25).abs() < 0.01, "fraction {frac}");
    }

    #[test]
    fn cap_samples_stay_in_cap() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..200 {
            let c = sample_uniform(&mut rng);
            for _ in 0..20 {
                let p = sample_cap(&mut rng, &c, 0.1);
                assert!(p.chordal_distance(&c) <= 0.1 + 1e-15);
            }
            for p in fibonacci_cap(&c, 0.05, 30, 0.7) {
                assert!(p.chordal_distance(&c) <= 0.05 + 1e-15);
            }
        }
    }

    #[test]
    fn wedge_bounded_by_chord_and_norm_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        for _ in 0..10_000 {
            let x = sample_uniform(&mut rng);
            let y = sample_uniform(&mut rng);
            let chord = x.chordal_distance(&y);
            assert!(x.as_vec().cross(y.as_vec()).norm() <= chord + 1e-15);
            assert_abs_diff_eq!(chord * chord, 2.0 * (1.0 - x.dot(&y)), epsilon = 1e-12);
        }
    }

    #[test]
    fn singular_moment_closed_form() {
        assert_abs_diff_eq!(
            singular_moment_integral(0.0).unwrap(),
            4.0 * PI,
            epsilon = 1e-14
        );
        assert_abs_diff_eq!(
            singular_moment_integral(1.0).unwrap(),
            4.0 * PI,
            epsilon = 1e-14
        );
        assert!(singular_moment_integral(2.0).is_err());
        assert!(singular_moment_integral(-0.5).is_err());
    }

    #[test]
    fn geodesic_conversion_round_trips() {
        for r in [0.0, 0.3, 1.0, 1.7, 2.0] {
            assert_abs_diff_eq!(geodesic_to_chord(chord_to_geodesic(r)), r, epsilon = 1e-14);
        }
        assert_abs_diff_eq!(chord_to_geodesic(2.0), PI, epsilon = 1e-15);
    }
}
