//! Local refinement from a marked-cell midpoint.
//!
//! Steps follow the normalized projected gradient, so the step length is set
//! by the backtracking schedule alone and never by the gradient magnitude.
//! Steep, narrow basins therefore cannot cause overshoot.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objective::{ObjectiveSpec, Point};

/// Gradient norm below which the iterate is treated as stationary.
pub const PLATEAU_GRADIENT: f64 = 1e-12;

const GROW: f64 = 1.5;
const SHRINK: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DescentConfig {
    #[serde(default = "defaults::fd_step")]
    pub fd_step: f64,
    #[serde(default = "defaults::f_tol")]
    pub f_tol: f64,
    #[serde(default = "defaults::x_tol")]
    pub x_tol: f64,
    #[serde(default = "defaults::max_iters")]
    pub max_iters: u64,
    #[serde(default = "defaults::initial_step")]
    pub initial_step: f64,
}

mod defaults {
    pub fn fd_step() -> f64 {
        1e-6
    }
    pub fn f_tol() -> f64 {
        1e-9
    }
    pub fn x_tol() -> f64 {
        1e-12
    }
    pub fn max_iters() -> u64 {
        10_000
    }
    pub fn initial_step() -> f64 {
        0.02
    }
}

impl Default for DescentConfig {
    fn default() -> Self {
        DescentConfig {
            fd_step: defaults::fd_step(),
            f_tol: defaults::f_tol(),
            x_tol: defaults::x_tol(),
            max_iters: defaults::max_iters(),
            initial_step: defaults::initial_step(),
        }
    }
}

impl DescentConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("fd_step", self.fd_step),
            ("f_tol", self.f_tol),
            ("x_tol", self.x_tol),
            ("initial_step", self.initial_step),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::param(name, format!("{v} must be positive")));
            }
        }
        if self.fd_step > 0.5 {
            return Err(Error::param("fd_step", "must be at most 1/2"));
        }
        if self.max_iters == 0 {
            return Err(Error::param("max_iters", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// `f` dropped below `f_tol`.
    Tol,
    /// Backtracking shrank the step below `x_tol`.
    Step,
    MaxIters,
    /// Stationary once the box constraints are taken into account.
    Boundary,
    /// Zero gradient in the interior.
    Plateau,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescentResult {
    pub point: Point,
    pub f_value: f64,
    pub iters: u64,
    pub evals_used: u64,
    pub terminated_by: Termination,
}

/// Central-difference gradient; one-sided at the faces of the box.
/// Always costs `2d` evaluations.
pub fn finite_diff_gradient(spec: &ObjectiveSpec, p: &Point, fd_step: f64) -> Result<Vec<f64>> {
    if !(fd_step > 0.0 && fd_step <= 0.5) {
        return Err(Error::param(
            "fd_step",
            format!("{fd_step} not in (0, 1/2]"),
        ));
    }
    p.check_domain(spec.dimension())?;
    let mut grad = Vec::with_capacity(p.dim());
    let mut probe = p.clone().into_inner();
    for j in 0..p.dim() {
        let x = p[j];
        let (lo, hi) = if x - fd_step >= 0.0 && x + fd_step <= 1.0 {
            (x - fd_step, x + fd_step)
        } else if x + fd_step <= 1.0 {
            (x, x + fd_step)
        } else {
            (x - fd_step, x)
        };
        probe[j] = hi;
        let f_hi = spec.evaluate(&Point::new(probe.clone()))?;
        probe[j] = lo;
        let f_lo = spec.evaluate(&Point::new(probe.clone()))?;
        probe[j] = x;
        grad.push((f_hi - f_lo) / (hi - lo));
    }
    Ok(grad)
}

fn project(coords: &mut [f64]) {
    for x in coords {
        *x = x.clamp(0.0, 1.0);
    }
}

/// Normalized-gradient descent with backtracking, projected onto `[0,1]^d`.
pub fn refine(
    spec: &ObjectiveSpec,
    start: &Point,
    config: &DescentConfig,
) -> Result<DescentResult> {
    config.validate()?;
    start.check_domain(spec.dimension())?;
    let evals_before = spec.eval_count();

    let mut x = start.clone();
    let mut fx = spec.evaluate(&x)?;
    let mut step = config.initial_step;
    let mut iters = 0;

    let terminated_by = 'outer: loop {
        if fx < config.f_tol {
            break Termination::Tol;
        }
        if iters >= config.max_iters {
            break Termination::MaxIters;
        }
        iters += 1;

        let mut grad = finite_diff_gradient(spec, &x, config.fd_step)?;
        let mut clipped = false;
        for (g, &xi) in grad.iter_mut().zip(x.coords()) {
            if (xi <= 0.0 && *g > 0.0) || (xi >= 1.0 && *g < 0.0) {
                clipped |= g.abs() >= PLATEAU_GRADIENT;
                *g = 0.0;
            }
        }
        let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if norm < PLATEAU_GRADIENT {
            break if clipped {
                Termination::Boundary
            } else {
                Termination::Plateau
            };
        }

        loop {
            let mut trial: Vec<f64> = x
                .coords()
                .iter()
                .zip(&grad)
                .map(|(xi, g)| xi - step * g / norm)
                .collect();
            project(&mut trial);
            let trial = Point::new(trial);
            let ft = spec.evaluate(&trial)?;
            if ft < fx {
                x = trial;
                fx = ft;
                step = (step * GROW).min(config.initial_step);
                break;
            }
            step *= SHRINK;
            if step < config.x_tol {
                break 'outer Termination::Step;
            }
        }
    };

    Ok(DescentResult {
        point: x,
        f_value: fx,
        iters,
        evals_used: spec.eval_count() - evals_before,
        terminated_by,
    })
}
