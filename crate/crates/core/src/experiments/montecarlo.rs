//! Monte Carlo frequency of ε-collisions from uniformly random initial data.

use rayon::prelude::*;

use crate::dynamics::{first_eps_collision, integrate_field, RegularizedField, GAUSS_TOL};
use crate::error::{Error, Result};
use crate::geometry::{sample_uniform, Vec3};
use crate::rng::substream;

#[derive(Debug, Clone, PartialEq)]
pub struct CollisionRequest {
    pub strengths: Vec<f64>,
    pub gamma: f64,
    /// Strictly decreasing cutoffs.
    pub eps_grid: Vec<f64>,
    pub tau: f64,
    pub trials: usize,
    pub dt: f64,
    pub master_seed: u64,
}

impl CollisionRequest {
    fn validate(&self) -> Result<()> {
        if self.strengths.len() < 2 {
            return Err(Error::invalid(
                "strengths",
                "at least two vortices are required",
            ));
        }
        if self.strengths.iter().any(|g| *g == 0.0 || !g.is_finite()) {
            return Err(Error::invalid(
                "strengths",
                "circulations must be finite and nonzero",
            ));
        }
        let sum: f64 = self.strengths.iter().sum();
        if sum.abs() > GAUSS_TOL {
            return Err(Error::GaussViolation {
                sum,
                tol: GAUSS_TOL,
            });
        }
        if self.trials == 0 {
            return Err(Error::invalid("trials", "must be at least 1"));
        }
        if self.eps_grid.is_empty() {
            return Err(Error::invalid("eps", "at least one value is required"));
        }
        if self.eps_grid.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::invalid("eps", "values must be strictly decreasing"));
        }
        if !(self.tau >= 0.0 && self.tau.is_finite()) {
            return Err(Error::invalid("tau", "must be non-negative and finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CollisionStats {
    pub eps_grid: Vec<f64>,
    pub trials: usize,
    pub tau: f64,
    pub master_seed: u64,
    pub collided: Vec<usize>,
    pub fraction_collided: Vec<f64>,
    /// Binomial standard error `sqrt(p (1 - p) / trials)`.
    pub std_error: Vec<f64>,
    /// First ε-collision time of every trial, indexed `[eps][trial]`.
    pub collision_times: Vec<Vec<Option<f64>>>,
}

fn run_trial(req: &CollisionRequest, k: usize, trial: usize) -> Result<Option<f64>> {
    let eps = req.eps_grid[k];
    let mut rng = substream(req.master_seed, k as u32, trial as u32);
    let initial: Vec<Vec3> = (0..req.strengths.len())
        .map(|_| sample_uniform(&mut rng).into_inner())
        .collect();
    let field = RegularizedField::new(req.strengths.clone(), req.gamma, eps)?;
    let traj = integrate_field(&field, &initial, req.dt, req.tau, 1)?;
    Ok(first_eps_collision(&traj, eps).first_collision_time)
}

/// Integrates the regularized dynamics from i.i.d. uniform points and counts the
/// trials that reach an ε-collision before `tau`. Trial `t` at cutoff index `k`
/// draws from `substream(master_seed, k, t)`.
pub fn montecarlo_collisions(req: &CollisionRequest) -> Result<CollisionStats> {
    req.validate()?;
    let jobs: Vec<(usize, usize)> = (0..req.eps_grid.len())
        .flat_map(|k| (0..req.trials).map(move |t| (k, t)))
        .collect();
    let outcomes = jobs
        .into_par_iter()
        .map(|(k, t)| run_trial(req, k, t))
        .collect::<Result<Vec<_>>>()?;
    let collision_times: Vec<Vec<Option<f64>>> =
        outcomes.chunks(req.trials).map(<[_]>::to_vec).collect();
    let collided: Vec<usize> = collision_times
        .iter()
        .map(|row| row.iter().filter(|t| t.is_some()).count())
        .collect();
    let n = req.trials as f64;
    let fraction_collided: Vec<f64> = collided.iter().map(|c| *c as f64 / n).collect();
    let std_error = fraction_collided
        .iter()
        .map(|p| (p * (1.0 - p) / n).sqrt())
        .collect();
    Ok(CollisionStats {
        eps_grid: req.eps_grid.clone(),
        trials: req.trials,
        tau: req.tau,
        master_seed: req.master_seed,
        collided,
        fraction_collided,
        std_error,
        collision_times,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn request() -> CollisionRequest {
        CollisionRequest {
            strengths: vec![1.0, 1.0, -2.0],
            gamma: 0.0,
            eps_grid: vec![1.2, 0.3],
            tau: 1.0,
            trials: 20,
            dt: 1e-2,
            master_seed: 11,
        }
    }

    #[test]
    fn near_saturated_cutoff() {
        let req = CollisionRequest {
            strengths: vec![1.0, -1.0],
            eps_grid: vec![1.9],
            tau: 0.0,
            trials: 2000,
            ..request()
        };
        let stats = montecarlo_collisions(&req).unwrap();
        // P(|x - y| < 1.9) = 1 - (4 - 1.9²)/4 for independent uniform points
        let p = 1.0 - (4.0 - 1.9f64.powi(2)) / 4.0;
        assert!((stats.fraction_collided[0] - p).abs() <= 3.0 * stats.std_error[0].max(0.007));
    }

    #[test]
    fn replay_is_identical() {
        let a = montecarlo_collisions(&request()).unwrap();
        let b = montecarlo_collisions(&request()).unwrap();
        assert_eq!(a, b);
        let c = montecarlo_collisions(&CollisionRequest {
            master_seed: 12,
            ..request()
        })
        .unwrap();
        assert_ne!(a.collision_times, c.collision_times);
    }

    #[test]
    fn trial_outcome_depends_only_on_its_indices() {
        let full = montecarlo_collisions(&request()).unwrap();
        let fewer = montecarlo_collisions(&CollisionRequest {
            trials: 5,
            ..request()
        })
        .unwrap();
        for k in 0..2 {
            assert_eq!(full.collision_times[k][..5], fewer.collision_times[k][..]);
        }
    }

    #[test]
    fn rejects_bad_requests() {
        let bad = [
            CollisionRequest {
                trials: 0,
                ..request()
            },
            CollisionRequest {
                eps_grid: vec![0.1, 0.3],
                ..request()
            },
            CollisionRequest {
                strengths: vec![1.0, 1.0, -1.0],
                ..request()
            },
        ];
        for r in bad {
            assert!(montecarlo_collisions(&r).is_err());
        }
    }
}
