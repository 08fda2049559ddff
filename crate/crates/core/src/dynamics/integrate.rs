//! Fixed-step RK4 on (S²)^N.
//!
//! Every stage point and every step result is renormalized onto the sphere. This is
//! classical RK4 applied to `ẋ = f(x/|x|)`, a field that preserves `|x|` and agrees
//! with `f` on the sphere, so the scheme keeps its fourth order.

use super::{exact_energy, exact_velocities, moment_vector, RegularizedField, VortexConfig};
use crate::error::{Error, Result};
use crate::geometry::{UnitVector3, Vec3};

/// A velocity field for N points on the sphere.
pub trait VortexField {
    fn strengths(&self) -> &[f64];

    fn velocities(&self, points: &[Vec3], out: &mut [Vec3]) -> Result<()>;

    /// The conserved energy of this field, if it has one.
    fn energy(&self, points: &[Vec3]) -> Result<f64>;
}

/// The exact point-vortex field.
#[derive(Debug, Clone)]
pub struct PointVortexField {
    pub strengths: Vec<f64>,
    pub gamma: f64,
}

impl PointVortexField {
    pub fn from_config(cfg: &VortexConfig) -> Self {
        Self {
            strengths: cfg.strengths().to_vec(),
            gamma: cfg.gamma(),
        }
    }
}

impl VortexField for PointVortexField {
    fn strengths(&self) -> &[f64] {
        &self.strengths
    }

    fn velocities(&self, points: &[Vec3], out: &mut [Vec3]) -> Result<()> {
        exact_velocities(points, &self.strengths, self.gamma, out)
    }

    fn energy(&self, points: &[Vec3]) -> Result<f64> {
        exact_energy(points, &self.strengths, self.gamma)
    }
}

/// Scratch buffers for one RK4 step.
#[derive(Debug, Clone)]
pub struct SphereRk4 {
    k1: Vec<Vec3>,
    k2: Vec<Vec3>,
    k3: Vec<Vec3>,
    k4: Vec<Vec3>,
    stage: Vec<Vec3>,
}

impl SphereRk4 {
    pub fn new(n: usize) -> Self {
        let z = vec![Vec3::zeros(); n];
        Self {
            k1: z.clone(),
            k2: z.clone(),
            k3: z.clone(),
            k4: z.clone(),
            stage: z,
        }
    }

    fn load_stage(&mut self, x: &[Vec3], h: f64, which: usize) {
        let k = match which {
            1 => &self.k1,
            2 => &self.k2,
            _ => &self.k3,
        };
        for ((s, xi), ki) in self.stage.iter_mut().zip(x).zip(k) {
            let v = xi + ki * h;
            *s = v / v.norm();
        }
    }

    /// Advances `x` by `h`. On error `x` is left untouched.
    pub fn step<F: VortexField + ?Sized>(
        &mut self,
        field: &F,
        x: &mut [Vec3],
        h: f64,
    ) -> Result<()> {
        field.velocities(x, &mut self.k1)?;
        self.load_stage(x, 0.5 * h, 1);
        field.velocities(&self.stage, &mut self.k2)?;
        self.load_stage(x, 0.5 * h, 2);
        field.velocities(&self.stage, &mut self.k3)?;
        self.load_stage(x, h, 3);
        field.velocities(&self.stage, &mut self.k4)?;
        let w = h / 6.0;
        for (i, xi) in x.iter_mut().enumerate() {
            let v = *xi + (self.k1[i] + (self.k2[i] + self.k3[i]) * 2.0 + self.k4[i]) * w;
            *xi = v / v.norm();
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvariantSample {
    /// Energy of the integrated field (exact or regularized).
    pub energy: f64,
    /// `e3 · Σ Γ_i x_i`.
    pub vertical_moment: f64,
    /// `Σ Γ_i x_i`.
    pub moment: Vec3,
    pub gauss_sum: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Termination {
    Completed,
    /// Two vortices got closer than the kernel floor; the trajectory stops at the last good state.
    DistanceUnderflow {
        time: f64,
        i: usize,
        j: usize,
        distance: f64,
    },
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<UnitVector3>>,
    pub velocities: Vec<Vec<Vec3>>,
    pub invariants: Vec<InvariantSample>,
    pub strengths: Vec<f64>,
    pub termination: Termination,
}

impl Trajectory {
    pub fn completed(&self) -> bool {
        self.termination == Termination::Completed
    }

    pub fn last_state(&self) -> &[UnitVector3] {
        self.states.last().map(Vec::as_slice).unwrap_or(&[])
    }

    /// Largest `|H(t) - H(0)|` and `|M3(t) - M3(0)|` over the recorded samples.
    pub fn invariant_drift(&self) -> (f64, f64) {
        let Some(first) = self.invariants.first() else {
            return (0.0, 0.0);
        };
        self.invariants.iter().fold((0.0, 0.0), |(dh, dm), s| {
            (
                f64::max(dh, (s.energy - first.energy).abs()),
                f64::max(dm, (s.vertical_moment - first.vertical_moment).abs()),
            )
        })
    }
}

fn validate_steps(dt: f64, t_end: f64, record_every: usize) -> Result<usize> {
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
    if record_every == 0 {
        return Err(Error::invalid("record_every", "must be at least 1"));
    }
    Ok(((t_end / dt) - 1e-9).ceil().max(0.0) as usize)
}

/// Integrates any [`VortexField`] from `initial` to `t_end`, recording every
/// `record_every` steps and always at the final time.
pub fn integrate_field<F: VortexField + ?Sized>(
    field: &F,
    initial: &[Vec3],
    dt: f64,
    t_end: f64,
    record_every: usize,
) -> Result<Trajectory> {
    let steps = validate_steps(dt, t_end, record_every)?;
    let strengths = field.strengths().to_vec();
    if strengths.len() != initial.len() {
        return Err(Error::invalid(
            "initial",
            "one position per strength is required",
        ));
    }
    let mut traj = Trajectory {
        times: Vec::new(),
        states: Vec::new(),
        velocities: Vec::new(),
        invariants: Vec::new(),
        strengths,
        termination: Termination::Completed,
    };
    let mut x: Vec<Vec3> = initial.iter().map(|p| p / p.norm()).collect();
    let mut rk = SphereRk4::new(x.len());

    let record = |traj: &mut Trajectory, t: f64, x: &[Vec3]| -> Result<()> {
        let mut v = vec![Vec3::zeros(); x.len()];
        field.velocities(x, &mut v)?;
        let energy = field.energy(x)?;
        let moment = moment_vector(x, &traj.strengths);
        traj.invariants.push(InvariantSample {
            energy,
            vertical_moment: moment.z,
            moment,
            gauss_sum: traj.strengths.iter().sum(),
        });
        traj.times.push(t);
        traj.states
            .push(x.iter().map(|p| UnitVector3::renormalized(*p)).collect());
        traj.velocities.push(v);
        Ok(())
    };

    let underflow = |t: f64, e: Error| match e {
        Error::DistanceUnderflow { i, j, distance } => Ok(Termination::DistanceUnderflow {
            time: t,
            i,
            j,
            distance,
        }),
        other => Err(other),
    };

    if let Err(e) = record(&mut traj, 0.0, &x) {
        traj.termination = underflow(0.0, e)?;
        return Ok(traj);
    }
    let mut t = 0.0;
    for k in 1..=steps {
        let t_next = if k == steps { t_end } else { k as f64 * dt };
        if let Err(e) = rk.step(field, &mut x, t_next - t) {
            traj.termination = underflow(t, e)?;
            return Ok(traj);
        }
        t = t_next;
        if k % record_every == 0 || k == steps {
            if let Err(e) = record(&mut traj, t, &x) {
                traj.termination = underflow(t, e)?;
                return Ok(traj);
            }
        }
    }
    Ok(traj)
}

/// RK4 integration of the exact point-vortex dynamics.
pub fn integrate(
    cfg: &VortexConfig,
    dt: f64,
    t_end: f64,
    record_every: usize,
) -> Result<Trajectory> {
    integrate_field(
        &PointVortexField::from_config(cfg),
        &cfg.positions(),
        dt,
        t_end,
        record_every,
    )
}

/// RK4 integration of the `ln_ε`-regularized dynamics; never hits a distance underflow.
pub fn integrate_regularized(
    cfg: &VortexConfig,
    eps: f64,
    dt: f64,
    t_end: f64,
    record_every: usize,
) -> Result<Trajectory> {
    let field = RegularizedField::new(cfg.strengths().to_vec(), cfg.gamma(), eps)?;
    integrate_field(&field, &cfg.positions(), dt, t_end, record_every)
}
