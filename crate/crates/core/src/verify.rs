//! Built-in reproduction checks behind `spherevortex verify`.

use std::f64::consts::PI;
use std::fmt;
use std::time::Instant;

use nalgebra::DMatrix;
use rand::Rng;

use crate::dynamics::{hamiltonian, integrate, vortex_rhs, VortexConfig};
use crate::equilibria::{four_vortex, kappa_stationary, polar_pair, FourVortexParams};
use crate::error::Result;
use crate::experiments::{
    blob_evolve, blob_initialize, blob_moments, montecarlo_collisions, BlobLayout, CollisionRequest,
};
use crate::geometry::{
    cap_area, rotation_z, sample_uniform, singular_moment_integral, tangent_basis, TangentBasis,
    UnitVector3, Vec3,
};
use crate::rng::substream;
use crate::stability::{
    char_poly_check, check_supstable, jacobian, jacobian_in_bases, match_quarter_turns,
    quarter_turn, spectrum, Complex64,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    /// Everything except the blob confinement runs.
    Quick,
    Full,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} [{:>2}] {}: {} ({:.2} s)",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.detail,
            self.seconds
        )
    }
}

type Check = fn() -> Result<(bool, String)>;

pub fn run_suite(level: Level) -> Vec<CheckResult> {
    let mut checks: Vec<(u8, &'static str, Check)> = vec![
        (1, "polar pair is stationary", polar_stationarity),
        (2, "four-vortex pole strength", kappa_values),
        (
            3,
            "four-vortex spectrum at a = 1, gamma = 1/2",
            four_vortex_spectrum,
        ),
        (4, "polar pair Jacobian", polar_jacobian),
        (
            5,
            "Jacobian against finite differences",
            jacobian_finite_differences,
        ),
        (6, "conservation and order of the integrator", conservation),
        (7, "geometry", geometry),
        (8, "initial blob moments", initial_blobs),
    ];
    if level == Level::Full {
        checks.push((9, "blob confinement contrast", confinement_contrast));
    }
    checks.push((
        10,
        "collision frequency decreases with eps",
        collision_trend,
    ));
    checks
        .into_iter()
        .map(|(id, name, check)| {
            let start = Instant::now();
            let (passed, detail) = check().unwrap_or_else(|e| (false, format!("error: {e}")));
            CheckResult {
                id,
                name,
                passed,
                detail,
                seconds: start.elapsed().as_secs_f64(),
            }
        })
        .collect()
}

fn max_speed(cfg: &VortexConfig) -> Result<f64> {
    Ok(vortex_rhs(cfg)?
        .iter()
        .map(|v| v.vec.norm())
        .fold(0.0, f64::max))
}

fn polar_stationarity() -> Result<(bool, String)> {
    let mut worst = 0.0f64;
    for g in [-2.0, -0.5, 0.3, 1.0, 4.0] {
        for gamma in [-1.0, -0.5, 0.0, 0.5, 1.0] {
            worst = worst.max(max_speed(&polar_pair(g, gamma)?)?);
        }
    }
    Ok((worst <= 1e-12, format!("max |F| = {worst:.2e}")))
}

fn kappa_values() -> Result<(bool, String)> {
    let k1 = kappa_stationary(1.0, 0.5, 1.0)?;
    let small = [0.0, 0.5, 1.0]
        .iter()
        .map(|&g| kappa_stationary(1e-4, g, 1.0).map(|k| (k + 0.5).abs()))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let mut residual = 0.0f64;
    for ka in 1..=10 {
        for kg in -4..=4 {
            let cfg = four_vortex(ka as f64 / 10.0, kg as f64 / 4.0)?;
            residual = residual.max(max_speed(&cfg)?);
        }
    }
    let ok = (k1 - (PI - 1.0)).abs() <= 1e-12 && small <= 1e-3 && residual <= 1e-10;
    Ok((
        ok,
        format!("kappa(1, 1/2) - (pi - 1) = {:.1e}, |kappa + 1/2| <= {small:.1e} near a = 0, residual {residual:.1e}", k1 - (PI - 1.0)),
    ))
}

/// The Jacobian at `a = 1`, `γ = 1/2`, entered by hand, in units of `1/(8π)`.
fn four_vortex_reference() -> DMatrix<f64> {
    let p = PI;
    #[rustfmt::skip]
    let rows = [
        0.0, 1.0 - 3.0 * p, 0.0, -(p + 1.0), -2.0, 0.0, -2.0, 0.0,
        3.0 * (p + 1.0), 0.0, -(p + 1.0), 0.0, 0.0, 2.0, 0.0, 2.0,
        0.0, p - 1.0, 0.0, 3.0 * p + 1.0, 2.0, 0.0, 2.0, 0.0,
        p - 1.0, 0.0, 3.0 * (1.0 - p), 0.0, 0.0, -2.0, 0.0, -2.0,
        2.0 * (1.0 - p), 0.0, -2.0 * (p + 1.0), 0.0, 0.0, 3.0, 0.0, 1.0,
        0.0, 2.0 * (p - 1.0), 0.0, 2.0 * (p + 1.0), 1.0, 0.0, 1.0, 0.0,
        2.0 * (1.0 - p), 0.0, -2.0 * (p + 1.0), 0.0, 0.0, 1.0, 0.0, 3.0,
        0.0, 2.0 * (p - 1.0), 0.0, 2.0 * (p + 1.0), 1.0, 0.0, 1.0, 0.0,
    ];
    DMatrix::from_row_slice(8, 8, &rows) / (8.0 * p)
}

fn four_vortex_spectrum() -> Result<(bool, String)> {
    let cfg = four_vortex(1.0, 0.5)?;
    let map = jacobian(&cfg)?;
    let r = spectrum(map.assembled())?;
    let zeros = r.count_near(Complex64::new(0.0, 0.0), 1e-9);
    let halves = [0.5, -0.5]
        .iter()
        .map(|&im| r.count_near(Complex64::new(0.0, im), 1e-9))
        .min()
        .unwrap_or(0);
    let chi = char_poly_check(&cfg, &[0.25, 0.5, 1.0, 2.0])?;
    let chi_err = chi
        .iter()
        .map(|(det, closed)| (det - closed).abs() / closed.abs())
        .fold(0.0, f64::max);
    let (turns, diff) = match_quarter_turns(&cfg, &four_vortex_reference())?;
    let ok = zeros == 2
        && halves >= 1
        && (r.max_real_part - 0.0491).abs() <= 1e-3
        && chi_err <= 1e-8
        && diff <= 1e-12;
    Ok((
        ok,
        format!(
            "max Re = {:.7}, zero multiplicity {zeros}, chi rel. error {chi_err:.1e}, \
             reference matrix matched to {diff:.1e} with quarter turns {turns:?}",
            r.max_real_part
        ),
    ))
}

fn polar_jacobian() -> Result<(bool, String)> {
    let (g, gamma) = (1.7, -0.6);
    let cfg = polar_pair(g, gamma)?;
    let bases = vec![
        TangentBasis::new(UnitVector3::e3(), Vec3::x(), Vec3::y())?,
        TangentBasis::new(-UnitVector3::e3(), -Vec3::x(), Vec3::y())?,
    ];
    let map = jacobian_in_bases(&cfg, bases)?;
    let j = quarter_turn();
    let s = nalgebra::Matrix2::new(0.0, -1.0, -1.0, 0.0);
    let c = g / (8.0 * PI);
    let expected = [j * (gamma - c), -s * c, s * c, j * (c - gamma)];
    let entry = [(0, 0), (0, 1), (1, 0), (1, 1)]
        .iter()
        .zip(&expected)
        .map(|(&(i, k), e)| (map.block(i, k) - e).amax())
        .fold(0.0, f64::max);
    let re = spectrum(map.assembled())?.max_abs_real_part();
    let sup = check_supstable(&cfg, 1e-12)?;
    let sup_res = sup.residuals.iter().copied().fold(0.0, f64::max);
    Ok((
        entry <= 1e-12 && re <= 1e-10 && sup.passed,
        format!(
            "entry error {entry:.1e}, max |Re| {re:.1e}, symmetric-part residual {sup_res:.1e}"
        ),
    ))
}

fn random_gauss_config<R: Rng>(rng: &mut R, n: usize, gamma: f64) -> Result<VortexConfig> {
    loop {
        let pts: Vec<UnitVector3> = (0..n).map(|_| sample_uniform(rng)).collect();
        let close = (0..n).any(|i| (i + 1..n).any(|j| pts[i].chordal_distance(&pts[j]) < 0.3));
        if close {
            continue;
        }
        let mut strengths: Vec<f64> = (0..n - 1).map(|_| rng.random_range(0.5..2.0)).collect();
        strengths.push(-strengths.iter().sum::<f64>());
        return VortexConfig::new(pts, strengths, gamma);
    }
}

fn great_circle(x: &UnitVector3, v: &Vec3, t: f64) -> Vec3 {
    x.as_vec() * t.cos() + v * t.sin()
}

fn jacobian_finite_differences() -> Result<(bool, String)> {
    let h = 1e-5;
    let mut worst_fd = 0.0f64;
    let mut worst_basis = 0.0f64;
    for trial in 0..20u32 {
        let mut rng = substream(0x5eed, 5, trial);
        let n = 3 + (trial as usize % 3);
        let gamma = rng.random_range(-1.0..1.0);
        let cfg = random_gauss_config(&mut rng, n, gamma)?;
        let map = jacobian(&cfg)?;
        let a = map.assembled();
        let xs = cfg.positions();
        for i in 0..n {
            for c in 0..2 {
                let b = &map.bases()[i];
                let v = if c == 0 { b.b1 } else { b.b2 };
                let shifted = |t: f64| {
                    let mut p = xs.clone();
                    p[i] = great_circle(&cfg.points()[i], &v, t);
                    cfg.with_positions(&p).and_then(|c| vortex_rhs(&c))
                };
                let (fp, fm) = (shifted(h)?, shifted(-h)?);
                let mut fd = nalgebra::DVector::zeros(2 * n);
                for k in 0..n {
                    let d = (fp[k].vec - fm[k].vec) / (2.0 * h);
                    let bk = &map.bases()[k];
                    fd[2 * k] = bk.b1.dot(&d);
                    fd[2 * k + 1] = bk.b2.dot(&d);
                }
                let col = a.column(2 * i + c);
                worst_fd = worst_fd.max((col - &fd).norm() / col.norm().max(1e-12));
            }
        }
        let turned: Vec<TangentBasis> = cfg
            .points()
            .iter()
            .map(|x| tangent_basis(x).rotated(rng.random_range(0.0..2.0 * PI)))
            .collect();
        let other = jacobian_in_bases(&cfg, turned)?;
        let s1 = spectrum(a)?;
        let s2 = spectrum(other.assembled())?;
        worst_basis = worst_basis.max(multiset_distance(&s1.eigenvalues, &s2.eigenvalues));
    }
    Ok((
        worst_fd < 1e-5 && worst_basis <= 1e-9,
        format!("relative FD error {worst_fd:.1e}, eigenvalue change under basis rotation {worst_basis:.1e}"),
    ))
}

/// Largest distance in a greedy nearest-neighbour pairing of two eigenvalue lists.
fn multiset_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    let mut free: Vec<Complex64> = b.to_vec();
    let mut worst = if a.len() == b.len() {
        0.0f64
    } else {
        f64::INFINITY
    };
    for l in a {
        let Some((k, d)) = free
            .iter()
            .map(|m| (l - m).norm())
            .enumerate()
            .min_by(|x, y| x.1.total_cmp(&y.1))
        else {
            break;
        };
        worst = worst.max(d);
        free.swap_remove(k);
    }
    worst
}

fn conservation() -> Result<(bool, String)> {
    let mut ok = true;
    let (mut wh, mut wm, mut wv) = (0.0f64, 0.0f64, 0.0f64);
    for trial in 0..10u32 {
        let mut rng = substream(0x5eed, 6, trial);
        let gamma = if trial % 2 == 0 {
            0.0
        } else {
            rng.random_range(-1.0..1.0)
        };
        let cfg = random_gauss_config(&mut rng, 3 + trial as usize % 3, gamma)?;
        let traj = integrate(&cfg, 1e-3, 10.0, 100)?;
        if !traj.completed() {
            return Ok((false, format!("config {trial} hit a collision")));
        }
        let h0 = hamiltonian(&cfg)?;
        let (dh, dm3) = traj.invariant_drift();
        let m0 = traj.invariants[0].moment;
        let dv = traj
            .invariants
            .iter()
            .map(|s| (s.moment - m0).norm())
            .fold(0.0, f64::max);
        ok &= dh <= 1e-6 * (1.0 + h0.abs()) && dm3 <= 1e-8;
        if gamma == 0.0 {
            ok &= dv <= 1e-8;
            wv = wv.max(dv);
        }
        wh = wh.max(dh / (1.0 + h0.abs()));
        wm = wm.max(dm3);
    }
    let errors = [0.1, 0.05, 0.025]
        .iter()
        .map(|&dt| antipodal_error(dt))
        .collect::<Result<Vec<_>>>()?;
    let ratios: Vec<f64> = errors.windows(2).map(|w| w[0] / w[1]).collect();
    ok &= ratios.iter().all(|r| (8.0..=32.0).contains(r));
    Ok((
        ok,
        format!("|dH|/(1+|H|) {wh:.1e}, |dM3| {wm:.1e}, |dM| {wv:.1e}, error ratios {ratios:.2?}"),
    ))
}

/// Endpoint error of an off-axis antipodal pair, which rigidly rotates at rate `γ`.
fn antipodal_error(dt: f64) -> Result<f64> {
    let x = UnitVector3::from_xyz(0.6, 0.0, 0.8)?;
    let gamma = 1.0;
    let cfg = VortexConfig::new(vec![x, -x], vec![1.0, -1.0], gamma)?;
    let t = 10.0;
    let traj = integrate(&cfg, dt, t, usize::MAX)?;
    let r = rotation_z(gamma * t);
    Ok(cfg
        .positions()
        .iter()
        .zip(traj.last_state())
        .map(|(x0, x)| (r * x0 - x.as_vec()).norm())
        .fold(0.0, f64::max))
}

/// Integral over the sphere of `|N - y|^{-α}` in colatitude, `2π ∫_0^π sin θ (2 sin(θ/2))^{-α} dθ`,
/// with `θ = π s⁴` so the integrand is smooth at the pole.
fn singular_quadrature(alpha: f64) -> f64 {
    let f = |s: f64| {
        let theta = PI * s.powi(4);
        let jac = 4.0 * PI * s.powi(3);
        2.0 * PI * theta.sin() * (2.0 * (theta / 2.0).sin()).powf(-alpha) * jac
    };
    gauss_legendre(&f, 0.0, 1.0, 64)
}

fn gauss_legendre(f: &dyn Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    const NODES: [(f64, f64); 5] = [
        (0.0, 0.568_888_888_888_888_9),
        (0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
        (-0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
        (0.906_179_845_938_664, 0.236_926_885_056_189_1),
        (-0.906_179_845_938_664, 0.236_926_885_056_189_1),
    ];
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|k| {
            let mid = a + (k as f64 + 0.5) * h;
            NODES
                .iter()
                .map(|(x, w)| w * f(mid + 0.5 * h * x))
                .sum::<f64>()
                * 0.5
                * h
        })
        .sum()
}

fn geometry() -> Result<(bool, String)> {
    let mut rng = substream(0x5eed, 7, 0);
    let mut wedge = 0.0f64;
    for _ in 0..10_000 {
        let x = sample_uniform(&mut rng).into_inner();
        let y = sample_uniform(&mut rng).into_inner();
        wedge = wedge.max(x.cross(&y).norm() - (x - y).norm());
    }
    let mut ok = wedge <= 1e-15;
    let samples = 100_000;
    let center = sample_uniform(&mut rng);
    let mut worst_sigma = 0.0f64;
    for r in [0.5, 1.0, 1.5] {
        let p = cap_area(r)? / (4.0 * PI);
        let hits = (0..samples)
            .filter(|_| sample_uniform(&mut rng).chordal_distance(&center) <= r)
            .count();
        let sigma = (p * (1.0 - p) / samples as f64).sqrt();
        worst_sigma = worst_sigma.max((hits as f64 / samples as f64 - p).abs() / sigma);
    }
    ok &= worst_sigma <= 3.0;
    let mut quad = 0.0f64;
    for alpha in [0.25, 0.5, 1.0, 1.5] {
        quad = quad.max((singular_moment_integral(alpha)? - singular_quadrature(alpha)).abs());
    }
    let four_pi = [0.0, 1.0]
        .iter()
        .map(|&a| singular_moment_integral(a).map(|v| (v - 4.0 * PI).abs()))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    ok &= quad <= 1e-8 && four_pi <= 1e-12;
    Ok((
        ok,
        format!(
            "|x^y| - |x-y| <= {wedge:.1e}, cap mass within {worst_sigma:.2} sigma, \
             quadrature error {quad:.1e}"
        ),
    ))
}

fn initial_blobs() -> Result<(bool, String)> {
    let mut ok = true;
    let mut worst = 0.0f64;
    for trial in 0..100u32 {
        let eps = if trial % 2 == 0 { 0.1 } else { 0.05 };
        let layout = if trial % 4 < 2 {
            BlobLayout::Uniform
        } else {
            BlobLayout::Fibonacci
        };
        let mut rng = substream(0x5eed, 8, trial);
        let cfg = random_gauss_config(&mut rng, 3, 0.0)?;
        let cloud = blob_initialize(&cfg, eps, 64, 0.4, layout, &mut rng)?;
        for (i, x) in cfg.points().iter().enumerate() {
            let (pos, circ): (Vec<Vec3>, Vec<f64>) = cloud
                .particles()
                .iter()
                .filter(|p| p.blob == i)
                .map(|p| (*p.position.as_vec(), p.circulation))
                .unzip();
            let m = blob_moments(&pos, &circ, &[1, 2, 3], &[]);
            let dc = (m.center - x.as_vec()).norm() / eps;
            let di = m.second_moment / (4.0 * eps * eps);
            let dn = m
                .higher_moments
                .iter()
                .zip(1..)
                .map(|(v, n)| v / (16f64.powi(n) * eps.powi(4 * n)))
                .fold(0.0, f64::max);
            let ratio = dc.max(di).max(dn);
            worst = worst.max(ratio);
            ok &= ratio <= 1.0;
        }
    }
    Ok((ok, format!("largest ratio to the bound {worst:.3}")))
}

/// One seed of the blob confinement comparison: polar pair confined, the unstable
/// four-vortex configuration leaving, later for the smaller blob.
pub fn confinement_seed(seed: u64) -> Result<(bool, String)> {
    let polar = polar_pair(1.0, 0.0)?;
    let mut rng = substream(seed, 9, 0);
    let cloud = blob_initialize(&polar, 0.1, 200, 0.4, BlobLayout::Uniform, &mut rng)?;
    let rep = blob_evolve(&cloud, 2e-3, 50.0, 10, &[1], &[], false)?;
    let max_r = (0..2).map(|i| rep.max_radius(i)).fold(0.0, f64::max);
    let polar_ok = rep.exit_time.is_none() && max_r < 0.2;
    let unstable = FourVortexParams::new(1.0, 0.5, 1.0)?.config()?;
    let mut exits = Vec::new();
    for (k, eps) in [0.1, 0.05].into_iter().enumerate() {
        let mut rng = substream(seed, 9, 1 + k as u32);
        let cloud = blob_initialize(&unstable, eps, 50, 0.4, BlobLayout::Uniform, &mut rng)?;
        exits.push(blob_evolve(&cloud, 2e-3, 400.0, 10, &[1], &[], true)?.exit_time);
    }
    let bound = 2.0 * 20f64.ln() / 10f64.ln();
    let (ratio_ok, ratio) = match (exits[0], exits[1]) {
        (Some(a), Some(b)) => {
            let r = b / a;
            ((1.0..=bound).contains(&r), r)
        }
        _ => (false, f64::NAN),
    };
    Ok((
        polar_ok && ratio_ok,
        format!("seed {seed}: polar max R {max_r:.3}, exits {exits:?}, ratio {ratio:.3}"),
    ))
}

fn confinement_contrast() -> Result<(bool, String)> {
    let runs = (1..=3).map(confinement_seed).collect::<Result<Vec<_>>>()?;
    let passed = runs.iter().filter(|r| r.0).count();
    let detail = runs
        .iter()
        .map(|r| r.1.as_str())
        .collect::<Vec<_>>()
        .join("; ");
    Ok((passed >= 2, format!("{passed}/3 seeds pass; {detail}")))
}

/// True when each fraction is at most the previous one plus three combined standard errors.
pub fn non_increasing_at_3_sigma(fractions: &[f64], std_errors: &[f64]) -> bool {
    fractions
        .windows(2)
        .zip(std_errors.windows(2))
        .all(|(f, s)| f[1] <= f[0] + 3.0 * (s[0] * s[0] + s[1] * s[1]).sqrt())
}

fn collision_trend() -> Result<(bool, String)> {
    let req = CollisionRequest {
        strengths: vec![1.0, 1.0, -2.0],
        gamma: 0.0,
        eps_grid: vec![0.05, 0.02, 0.01],
        tau: 5.0,
        trials: 500,
        dt: 1e-3,
        master_seed: 0,
    };
    let first = montecarlo_collisions(&req)?;
    let second = montecarlo_collisions(&req)?;
    let replay = first == second;
    let trend = non_increasing_at_3_sigma(&first.fraction_collided, &first.std_error);
    Ok((
        trend && replay,
        format!(
            "fractions {:?} for eps {:?}, replay identical: {replay}",
            first.fraction_collided, first.eps_grid
        ),
    ))
}
