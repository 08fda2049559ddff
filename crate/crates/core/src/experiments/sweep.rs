//! Spectral stability over parameter grids.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::dynamics::VortexConfig;
use crate::equilibria::{polar_pair, vortex_crystal, FourVortexParams};
use crate::error::{Error, Result};
use crate::stability::linearize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    FourVortex,
    VortexCrystal,
    PolarPair,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::FourVortex => "four-vortex",
            Family::VortexCrystal => "vortex-crystal",
            Family::PolarPair => "polar-pair",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "four-vortex" => Ok(Family::FourVortex),
            "vortex-crystal" => Ok(Family::VortexCrystal),
            "polar-pair" => Ok(Family::PolarPair),
            other => Err(Error::invalid(
                "family",
                format!(
                    "unknown family {other:?} (expected four-vortex, vortex-crystal or polar-pair)"
                ),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRequest {
    pub family: Family,
    /// Total number of vortices, used by the crystal family.
    pub n: usize,
    pub a_values: Vec<f64>,
    pub gamma_values: Vec<f64>,
    /// Pole strengths for the crystal family; the four-vortex family derives its own.
    pub kappa_values: Vec<f64>,
    /// Ring strength (four-vortex) or pole strength (polar pair).
    pub strength: f64,
}

impl SweepRequest {
    fn validate(&self) -> Result<()> {
        if self.gamma_values.is_empty() {
            return Err(Error::invalid("gamma", "at least one value is required"));
        }
        match self.family {
            Family::FourVortex => {
                if self.a_values.is_empty() {
                    return Err(Error::invalid("a", "at least one value is required"));
                }
                if !self.kappa_values.is_empty() {
                    return Err(Error::invalid(
                        "kappa",
                        "the four-vortex family determines kappa from a and gamma",
                    ));
                }
            }
            Family::VortexCrystal => {
                if self.a_values.is_empty() {
                    return Err(Error::invalid("a", "at least one value is required"));
                }
                if self.kappa_values.is_empty() {
                    return Err(Error::invalid("kappa", "at least one value is required"));
                }
                if !(4..=32).contains(&self.n) {
                    return Err(Error::invalid(
                        "n",
                        format!("must lie in 4..=32, got {}", self.n),
                    ));
                }
            }
            Family::PolarPair => {}
        }
        Ok(())
    }

    /// Parameter tuples `(a, kappa, gamma)` in output order.
    fn grid(&self) -> Vec<(f64, f64, f64)> {
        let a_values = match self.family {
            Family::PolarPair => vec![f64::NAN],
            _ => self.a_values.clone(),
        };
        let kappa_values = match self.family {
            Family::VortexCrystal => self.kappa_values.clone(),
            _ => vec![f64::NAN],
        };
        let mut out = Vec::new();
        for &a in &a_values {
            for &k in &kappa_values {
                for &g in &self.gamma_values {
                    out.push((a, k, g));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub family: Family,
    pub n: usize,
    pub a: f64,
    pub kappa: f64,
    pub gamma: f64,
    /// Root-mean-square relative-equilibrium defect.
    pub eq_residual: f64,
    /// Largest real part of the spectrum in the co-rotating frame.
    pub max_real_part: f64,
    pub omega: f64,
    pub error: Option<String>,
}

fn build(req: &SweepRequest, a: f64, kappa: f64, gamma: f64) -> Result<(VortexConfig, f64)> {
    match req.family {
        Family::FourVortex => {
            let p = FourVortexParams::new(a, gamma, req.strength)?;
            Ok((p.config()?, p.kappa))
        }
        Family::VortexCrystal => Ok((vortex_crystal(req.n, a, kappa, gamma)?, kappa)),
        Family::PolarPair => Ok((polar_pair(req.strength, gamma)?, f64::NAN)),
    }
}

/// Stability of one configuration, analysed in the frame rotating at its fitted rate.
pub fn sweep_row(req: &SweepRequest, a: f64, kappa: f64, gamma: f64) -> SweepRow {
    let mut row = SweepRow {
        family: req.family,
        n: match req.family {
            Family::FourVortex => 4,
            Family::VortexCrystal => req.n,
            Family::PolarPair => 2,
        },
        a,
        kappa,
        gamma,
        eq_residual: f64::NAN,
        max_real_part: f64::NAN,
        omega: f64::NAN,
        error: None,
    };
    let result = (|| -> Result<()> {
        let (cfg, kappa) = build(req, a, kappa, gamma)?;
        row.kappa = kappa;
        let lin = linearize(&cfg)?;
        row.omega = lin.equilibrium.omega;
        row.eq_residual = lin.equilibrium.residual;
        row.max_real_part = lin.spectrum.max_real_part;
        Ok(())
    })();
    if let Err(e) = result {
        row.error = Some(e.to_string());
    }
    row
}

/// Evaluates every grid point; rows come back in grid order whatever the scheduling.
pub fn stability_sweep(req: &SweepRequest) -> Result<Vec<SweepRow>> {
    req.validate()?;
    let rows = req
        .grid()
        .into_par_iter()
        .map(|(a, k, g)| sweep_row(req, a, k, g))
        .collect();
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn request(family: Family) -> SweepRequest {
        SweepRequest {
            family,
            n: 4,
            a_values: vec![1.0],
            gamma_values: vec![0.5],
            kappa_values: vec![],
            strength: 1.0,
        }
    }

    #[test]
    fn four_vortex_row() {
        let rows = stability_sweep(&request(Family::FourVortex)).unwrap();
        assert_eq!(rows.len(), 1);
        let r = &rows[0];
        assert!(r.error.is_none());
        assert_abs_diff_eq!(r.kappa, std::f64::consts::PI - 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.max_real_part, 0.0491, epsilon = 1e-3);
        assert!(r.eq_residual <= 1e-10 && r.omega.abs() <= 1e-10);
    }

    #[test]
    fn small_ring_is_unstable() {
        let mut req = request(Family::FourVortex);
        req.a_values = vec![0.1];
        req.gamma_values = vec![-1.0, -0.5, 0.5, 1.0];
        for r in stability_sweep(&req).unwrap() {
            assert!(r.max_real_part > 1e-6, "{r:?}");
        }
    }

    #[test]
    fn polar_rows_are_neutral() {
        let mut req = request(Family::PolarPair);
        req.gamma_values = (-4..=4).map(|k| k as f64 / 2.0).collect();
        let rows = stability_sweep(&req).unwrap();
        assert_eq!(rows.len(), 9);
        for r in rows {
            assert!(r.max_real_part <= 1e-10);
            assert_eq!(r.omega, r.gamma);
        }
    }

    #[test]
    fn crystal_grid_order_and_residuals() {
        let req = SweepRequest {
            family: Family::VortexCrystal,
            n: 8,
            a_values: vec![0.2, 0.5],
            gamma_values: vec![0.0, 0.5],
            kappa_values: vec![-1.0, 1.0],
            strength: 1.0,
        };
        let rows = stability_sweep(&req).unwrap();
        let keys: Vec<_> = rows.iter().map(|r| (r.a, r.kappa, r.gamma)).collect();
        assert_eq!(keys[1], (0.2, -1.0, 0.5));
        assert_eq!(keys[2], (0.2, 1.0, 0.0));
        assert!(rows.iter().all(|r| r.eq_residual <= 1e-9));
    }

    #[test]
    fn invalid_rows_are_recorded() {
        let mut req = request(Family::FourVortex);
        req.a_values = vec![0.0, 1.0];
        let rows = stability_sweep(&req).unwrap();
        assert!(rows[0].error.is_some() && rows[0].max_real_part.is_nan());
        assert!(rows[1].error.is_none());
        assert!("nonsense".parse::<Family>().is_err());
    }
}
