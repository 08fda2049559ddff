//! Linearization of the point-vortex field and spectral stability tests.
//!
//! In a direct orthonormal tangent basis `(b1, b2)` at `x`, the map `h ↦ x ∧ h`
//! is the quarter-turn matrix `J = [[0, -1], [1, 0]]`.

use std::f64::consts::PI;

use nalgebra::{Complex, DMatrix, Matrix2, Matrix3, Schur, SymmetricEigen};

use crate::dynamics::{kernel_raw, VortexConfig, DIST_FLOOR};
use crate::error::{Error, Result};
use crate::geometry::{project_tangent, tangent_basis, TangentBasis, UnitVector3, Vec3};

const SCHUR_MAX_ITER: usize = 10_000;
/// Residual certificate threshold relative to the matrix norm.
pub const EIG_TOL: f64 = 1e-9;

pub type Complex64 = Complex<f64>;

pub fn quarter_turn() -> Matrix2<f64> {
    Matrix2::new(0.0, -1.0, 1.0, 0.0)
}

fn pair_distance(x: &UnitVector3, y: &UnitVector3) -> Result<(Vec3, f64)> {
    let d = x.as_vec() - y.as_vec();
    let r2 = d.norm_squared();
    if r2 < DIST_FLOOR * DIST_FLOOR {
        return Err(Error::DistanceUnderflow {
            i: 0,
            j: 1,
            distance: r2.sqrt(),
        });
    }
    Ok((d, r2))
}

/// Derivative of `K(x, y)` in `x` along an ambient vector `h`.
pub fn d1k(x: &UnitVector3, y: &UnitVector3, h: &Vec3) -> Result<Vec3> {
    let (d, r2) = pair_distance(x, y)?;
    Ok(h.cross(y.as_vec()) / r2 - x.as_vec().cross(y.as_vec()) * (2.0 * h.dot(&d) / (r2 * r2)))
}

/// Derivative of `K(x, y)` in `y` along an ambient vector `k`.
pub fn d2k(x: &UnitVector3, y: &UnitVector3, k: &Vec3) -> Result<Vec3> {
    let (d, r2) = pair_distance(x, y)?;
    Ok(x.as_vec().cross(k) / r2 + x.as_vec().cross(y.as_vec()) * (2.0 * k.dot(&d) / (r2 * r2)))
}

/// Matrix of the linear map `f` from the tangent plane of `from` to that of `to`.
fn block_of(from: &TangentBasis, to: &TangentBasis, f: impl Fn(&Vec3) -> Vec3) -> Matrix2<f64> {
    let c1 = to.coords(&f(&from.b1));
    let c2 = to.coords(&f(&from.b2));
    Matrix2::new(c1.x, c2.x, c1.y, c2.y)
}

/// Differential of the vortex field at a configuration, in per-vortex tangent bases.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentMap {
    bases: Vec<TangentBasis>,
    blocks: Vec<Matrix2<f64>>,
    assembled: DMatrix<f64>,
}

impl TangentMap {
    pub fn len(&self) -> usize {
        self.bases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bases.is_empty()
    }

    pub fn bases(&self) -> &[TangentBasis] {
        &self.bases
    }

    pub fn block(&self, i: usize, j: usize) -> &Matrix2<f64> {
        &self.blocks[i * self.len() + j]
    }

    pub fn assembled(&self) -> &DMatrix<f64> {
        &self.assembled
    }
}

/// Jacobian of the vortex field in the default bases of [`tangent_basis`].
pub fn jacobian(cfg: &VortexConfig) -> Result<TangentMap> {
    let bases = cfg.points().iter().map(tangent_basis).collect();
    jacobian_in_bases(cfg, bases)
}

/// Jacobian of the vortex field in caller-chosen tangent bases.
///
/// Blocks are
/// `A_ii = Σ_{k≠i} -Γ_k / (2π|x_i - x_k|²) ((x_i·x_k) J + M_ik) + γ (e3·x_i) J` and
/// `A_ij = Γ_j / (2π|x_i - x_j|²) (J P_ij + N_ij)`, where `M_ik` and `N_ij` are the
/// matrices of `h ↦ 2 h·(x_i - x_·) (x_i ∧ x_·) / |x_i - x_·|²` and `P_ij` that of the
/// projection from the plane at `x_j` to the plane at `x_i`.
pub fn jacobian_in_bases(cfg: &VortexConfig, bases: Vec<TangentBasis>) -> Result<TangentMap> {
    let n = cfg.len();
    if bases.len() != n {
        return Err(Error::invalid(
            "bases",
            format!("{} bases for {n} vortices", bases.len()),
        ));
    }
    for (i, (b, x)) in bases.iter().zip(cfg.points()).enumerate() {
        if (b.base.as_vec() - x.as_vec()).norm() > 1e-12 {
            return Err(Error::invalid(
                format!("bases[{i}]"),
                "basis is not attached to the vortex",
            ));
        }
    }
    let gs = cfg.strengths();
    let xs = cfg.points();
    let j_mat = quarter_turn();
    let mut blocks = vec![Matrix2::zeros(); n * n];
    for i in 0..n {
        let xi = xs[i].as_vec();
        let mut diag = j_mat * (cfg.gamma() * xi.z);
        for k in 0..n {
            if k == i {
                continue;
            }
            let xk = xs[k].as_vec();
            let d = xi - xk;
            let r2 = d.norm_squared();
            if r2 < DIST_FLOOR * DIST_FLOOR {
                return Err(Error::DistanceUnderflow {
                    i: i.min(k),
                    j: i.max(k),
                    distance: r2.sqrt(),
                });
            }
            let w = xi.cross(xk);
            let coef = 1.0 / (2.0 * PI * r2);
            // the same rank-one map, seen from x_i (M_ik) and from x_k (N_ik)
            let m_ik = block_of(&bases[i], &bases[i], |h| w * (2.0 * h.dot(&d) / r2));
            diag -= (j_mat * xi.dot(xk) + m_ik) * (gs[k] * coef);
            let n_ik = block_of(&bases[k], &bases[i], |h| w * (2.0 * h.dot(&d) / r2));
            let p_ik = block_of(&bases[k], &bases[i], |h| project_tangent(&xs[i], h));
            blocks[i * n + k] = (j_mat * p_ik + n_ik) * (gs[k] * coef);
        }
        blocks[i * n + i] = diag;
    }
    let mut assembled = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            assembled
                .fixed_view_mut::<2, 2>(2 * i, 2 * j)
                .copy_from(&blocks[i * n + j]);
        }
    }
    Ok(TangentMap {
        bases,
        blocks,
        assembled,
    })
}

/// Eigenvalues of a real matrix with per-eigenvalue residual certificates.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumReport {
    /// Sorted by real part, then imaginary part, both descending.
    pub eigenvalues: Vec<Complex64>,
    /// `min_{|v|=1} |(A - λ) v|`, the smallest singular value of `A - λ`.
    pub residuals: Vec<f64>,
    pub max_real_part: f64,
    /// Frobenius norm of the input.
    pub matrix_norm: f64,
}

impl SpectrumReport {
    /// Eigenvalues within `tol` of `z`.
    pub fn count_near(&self, z: Complex64, tol: f64) -> usize {
        self.eigenvalues
            .iter()
            .filter(|l| (*l - z).norm() <= tol)
            .count()
    }

    pub fn max_abs_real_part(&self) -> f64 {
        self.eigenvalues
            .iter()
            .map(|l| l.re.abs())
            .fold(0.0, f64::max)
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }

    /// Residuals within the certificate threshold and conjugates present.
    pub fn is_certified(&self) -> bool {
        let tol = EIG_TOL * self.matrix_norm.max(1.0);
        self.max_residual() <= tol
            && self
                .eigenvalues
                .iter()
                .all(|l| self.count_near(l.conj(), tol.sqrt()) > 0)
    }
}

fn residual(a: &DMatrix<Complex64>, lambda: Complex64) -> f64 {
    let mut m = a.clone();
    for k in 0..m.nrows() {
        m[(k, k)] -= lambda;
    }
    m.singular_values().min()
}

/// Replaces tight clusters of eigenvalues by their mean when the mean has a
/// residual no worse than the members.
///
/// A defective eigenvalue of multiplicity `k` is perturbed by `O(u^{1/k})` in
/// floating point, while the cluster mean is a well-conditioned function of the
/// invariant subspace.
fn merge_clusters(
    a: &DMatrix<Complex64>,
    values: &mut [Complex64],
    residuals: &mut [f64],
    radius: f64,
) {
    let n = values.len();
    let mut label: Vec<usize> = (0..n).collect();
    for i in 0..n {
        for j in i + 1..n {
            if (values[i] - values[j]).norm() <= radius {
                let (keep, drop) = (label[i], label[j]);
                for l in label.iter_mut() {
                    if *l == drop {
                        *l = keep;
                    }
                }
            }
        }
    }
    for c in 0..n {
        let members: Vec<usize> = (0..n).filter(|&k| label[k] == c).collect();
        if members.len() < 2 {
            continue;
        }
        let mean = members.iter().map(|&k| values[k]).sum::<Complex64>() / members.len() as f64;
        let r = residual(a, mean);
        if members.iter().all(|&k| r <= residuals[k]) {
            for k in members {
                values[k] = mean;
                residuals[k] = r;
            }
        }
    }
}

pub fn spectrum(matrix: &DMatrix<f64>) -> Result<SpectrumReport> {
    if !matrix.is_square() || matrix.nrows() == 0 {
        return Err(Error::invalid("matrix", "must be square and nonempty"));
    }
    if matrix.nrows() > 64 {
        return Err(Error::invalid("matrix", "dimension above 64"));
    }
    if matrix.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("matrix", "entries must be finite"));
    }
    let norm = matrix.norm();
    let schur = Schur::try_new(matrix.clone(), f64::EPSILON, SCHUR_MAX_ITER).ok_or(
        Error::NoConvergence {
            iterations: SCHUR_MAX_ITER,
        },
    )?;
    let raw: Vec<Complex64> = schur.complex_eigenvalues().iter().copied().collect();
    let ac = matrix.map(|v| Complex64::new(v, 0.0));
    let mut values = raw.clone();
    let mut res: Vec<f64> = raw.iter().map(|l| residual(&ac, *l)).collect();
    // defective clusters at double precision spread by about sqrt(u)·|A|
    merge_clusters(&ac, &mut values, &mut res, 1e-6 * norm.max(1.0));
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| {
        let (a, b) = (values[a], values[b]);
        b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im))
    });
    let eigenvalues: Vec<Complex64> = order.iter().map(|&k| values[k]).collect();
    let residuals: Vec<f64> = order.iter().map(|&k| res[k]).collect();
    let max_real_part = eigenvalues
        .iter()
        .map(|l| l.re)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(SpectrumReport {
        eigenvalues,
        residuals,
        max_real_part,
        matrix_norm: norm,
    })
}

/// `χ(λ) = λ²(4λ² + 1)(128π²λ⁴ + (32 + 8π²)λ² + 3) / (512π²)`, the characteristic
/// polynomial of the four-vortex Jacobian at `a = 1`, `γ = 1/2`.
pub fn four_vortex_char_poly(lambda: f64) -> f64 {
    let l2 = lambda * lambda;
    let p2 = PI * PI;
    l2 * (4.0 * l2 + 1.0) * (128.0 * p2 * l2 * l2 + (32.0 + 8.0 * p2) * l2 + 3.0) / (512.0 * p2)
}

/// `det(λ I - A)` by LU factorization.
pub fn char_poly_det(matrix: &DMatrix<f64>, lambda: f64) -> f64 {
    let n = matrix.nrows();
    (DMatrix::identity(n, n) * lambda - matrix)
        .lu()
        .determinant()
}

/// Pairs `(det(λ I - A), χ(λ))` for the Jacobian of `cfg` against the closed form.
pub fn char_poly_check(cfg: &VortexConfig, lambdas: &[f64]) -> Result<Vec<(f64, f64)>> {
    let a = jacobian(cfg)?.assembled;
    lambdas
        .iter()
        .map(|&l| {
            if !l.is_finite() {
                return Err(Error::invalid("lambda", "must be finite"));
            }
            Ok((char_poly_det(&a, l), four_vortex_char_poly(l)))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SupstableReport {
    /// Frobenius norm of the symmetric part of `Σ_{j≠i} Γ_j D₁K(x_i, x_j)`.
    pub residuals: Vec<f64>,
    pub passed: bool,
}

/// Ambient 3×3 matrix of `h ↦ Σ_{j≠i} Γ_j D₁K(x_i, x_j)[h]`.
pub fn supstable_matrix(cfg: &VortexConfig, i: usize) -> Result<Matrix3<f64>> {
    let xs = cfg.points();
    let mut m = Matrix3::zeros();
    for (j, (xj, gj)) in xs.iter().zip(cfg.strengths()).enumerate() {
        if j == i {
            continue;
        }
        for c in 0..3 {
            let col =
                d1k(&xs[i], xj, &Vec3::ith(c, 1.0)).map_err(|_| Error::DistanceUnderflow {
                    i: i.min(j),
                    j: i.max(j),
                    distance: xs[i].chordal_distance(xj),
                })?;
            m.set_column(c, &(m.column(c) + col * *gj));
        }
    }
    Ok(m)
}

/// Tests whether `Σ_j Γ_j D₁K(x_i, x_j)[h]·h` vanishes for all `h` and every `i`.
pub fn check_supstable(cfg: &VortexConfig, tol: f64) -> Result<SupstableReport> {
    let residuals = (0..cfg.len())
        .map(|i| {
            let m = supstable_matrix(cfg, i)?;
            Ok(((m + m.transpose()) * 0.5).norm())
        })
        .collect::<Result<Vec<f64>>>()?;
    let passed = residuals.iter().all(|r| *r <= tol);
    Ok(SupstableReport { residuals, passed })
}

/// Largest eigenvalue of the symmetric part of a square matrix.
pub fn max_symmetric_eigenvalue(a: &DMatrix<f64>) -> f64 {
    let s = (a + a.transpose()) * 0.5;
    SymmetricEigen::new(s).eigenvalues.max()
}

/// `(A H)·H ≤ tol |H|²` for every `H`, decided on the symmetric part.
pub fn check_dissipative(map: &TangentMap, tol: f64) -> (bool, f64) {
    let m = max_symmetric_eigenvalue(&map.assembled);
    (m <= tol, m)
}

/// Least-squares fit of a rigid rotation `ẋ_i = Ω e3 ∧ x_i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelativeEquilibrium {
    pub omega: f64,
    /// Root-mean-square defect of the fit.
    pub residual: f64,
    /// Every vortex lies on the rotation axis, so `Ω` is indeterminate and reported as `γ`.
    pub axial: bool,
}

pub fn relative_equilibrium(cfg: &VortexConfig) -> Result<RelativeEquilibrium> {
    let xs = cfg.positions();
    let gs = cfg.strengths();
    let n = xs.len();
    let mut w = vec![Vec3::zeros(); n];
    for i in 0..n {
        for j in i + 1..n {
            let k = kernel_raw(&xs[i], &xs[j]).ok_or_else(|| Error::DistanceUnderflow {
                i,
                j,
                distance: (xs[i] - xs[j]).norm(),
            })?;
            w[i] += k * (gs[j] / (2.0 * PI));
            w[j] -= k * (gs[i] / (2.0 * PI));
        }
    }
    let u: Vec<Vec3> = xs.iter().map(|x| Vec3::z().cross(x)).collect();
    let uu: f64 = u.iter().map(|v| v.norm_squared()).sum();
    let uw: f64 = u.iter().zip(&w).map(|(a, b)| a.dot(b)).sum();
    let axial = uu <= 1e-24;
    let shift = if axial { 0.0 } else { uw / uu };
    let sq: f64 = u
        .iter()
        .zip(&w)
        .map(|(a, b)| (a * shift - b).norm_squared())
        .sum();
    Ok(RelativeEquilibrium {
        omega: cfg.gamma() + shift,
        residual: (sq / n as f64).sqrt(),
        axial,
    })
}

/// `(Ω, residual)` of [`relative_equilibrium`].
pub fn relative_equilibrium_residual(cfg: &VortexConfig) -> Result<(f64, f64)> {
    let r = relative_equilibrium(cfg)?;
    Ok((r.omega, r.residual))
}

/// Linearization of a relative equilibrium in the frame rotating with it.
#[derive(Debug, Clone, PartialEq)]
pub struct Linearization {
    pub equilibrium: RelativeEquilibrium,
    /// Rotation rate of the analysis frame: `Ω`, or 0 for axial configurations.
    pub frame_rate: f64,
    pub map: TangentMap,
    pub spectrum: SpectrumReport,
}

/// A rigid rotation at `Ω` is an equilibrium of the field with `γ` replaced by
/// `γ - Ω`; the Jacobian and spectrum are taken there.
pub fn linearize(cfg: &VortexConfig) -> Result<Linearization> {
    let equilibrium = relative_equilibrium(cfg)?;
    let frame_rate = if equilibrium.axial {
        0.0
    } else {
        equilibrium.omega
    };
    let map = jacobian(&cfg.with_gamma(cfg.gamma() - frame_rate))?;
    let spectrum = spectrum(map.assembled())?;
    Ok(Linearization {
        equilibrium,
        frame_rate,
        map,
        spectrum,
    })
}

/// The basis rotated by `k` quarter turns, computed without rounding.
pub fn quarter_turned(b: &TangentBasis, k: u8) -> TangentBasis {
    let (b1, b2) = match k % 4 {
        0 => (b.b1, b.b2),
        1 => (b.b2, -b.b1),
        2 => (-b.b1, -b.b2),
        _ => (-b.b2, b.b1),
    };
    TangentBasis {
        base: b.base,
        b1,
        b2,
    }
}

/// Searches quarter-turn rotations of the default bases for the choice whose
/// Jacobian best matches `target` entrywise. Returns the turns per vortex and the
/// largest entry difference.
pub fn match_quarter_turns(cfg: &VortexConfig, target: &DMatrix<f64>) -> Result<(Vec<u8>, f64)> {
    let n = cfg.len();
    if target.shape() != (2 * n, 2 * n) {
        return Err(Error::invalid(
            "target",
            format!("expected a {0}×{0} matrix", 2 * n),
        ));
    }
    if n > 8 {
        return Err(Error::invalid(
            "vortices",
            "basis search is limited to 8 vortices",
        ));
    }
    let base: Vec<TangentBasis> = cfg.points().iter().map(tangent_basis).collect();
    let mut best = (vec![0u8; n], f64::INFINITY);
    for code in 0..4usize.pow(n as u32) {
        let turns: Vec<u8> = (0..n).map(|k| ((code >> (2 * k)) & 3) as u8).collect();
        let bases = base
            .iter()
            .zip(&turns)
            .map(|(b, t)| quarter_turned(b, *t))
            .collect();
        let a = jacobian_in_bases(cfg, bases)?.assembled;
        let diff = (a - target).amax();
        if diff < best.1 {
            best = (turns, diff);
        }
    }
    Ok(best)
}
