use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::elasticity::{Displacement, ForceField};
use crate::sparse::{dot, norm};
use crate::{Error, Result};

use super::lbfgs::LbfgsMemory;
use super::problem::{ControlProblem, GradientReference};

/// Summary of one minimization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimizeReport {
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
    /// The line search could not decrease Φ; the best iterate was returned.
    pub line_search_failed: bool,
    pub initial_objective: f64,
    pub final_objective: f64,
    pub final_j: f64,
    pub initial_grad_norm: f64,
    /// Norm the relative gradient tolerance was applied to.
    pub reference_grad_norm: f64,
    pub final_grad_norm: f64,
    /// `J` at the initial point and after every accepted iteration.
    pub j_history: Vec<f64>,
    pub grad_norm_history: Vec<f64>,
    /// Wall-clock time; kept out of serialized reports so they stay reproducible.
    #[serde(skip)]
    pub wall_time: f64,
}

#[derive(Debug, Clone)]
pub struct MinimizeOutcome {
    pub force: ForceField,
    pub displacement: Displacement,
    pub report: MinimizeReport,
}

struct Point {
    x: Vec<f64>,
    phi: f64,
    j: f64,
    g: Vec<f64>,
    u: Displacement,
}

struct Evaluator<'a> {
    problem: &'a ControlProblem,
    count: usize,
}

impl Evaluator<'_> {
    fn eval(&mut self, x: Vec<f64>) -> Result<Point> {
        self.count += 1;
        let p = self.problem;
        let b = ForceField::from_control(p.model().mesh().vertex_count(), p.support(), &x);
        let e = p.evaluate(&b).map_err(|source| Error::Iterate {
            evaluation: self.count,
            source: Box::new(source),
        })?;
        Ok(Point {
            x,
            phi: e.phi,
            j: e.j,
            g: e.gradient.to_control(),
            u: e.displacement,
        })
    }
}

/// Per-vertex projection onto the ball `‖b_i‖ ≤ cap`.
fn project_cap(x: &mut [f64], cap: Option<f64>) {
    let Some(c) = cap else { return };
    for v in x.chunks_exact_mut(3) {
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if n > c {
            let s = c / n;
            v.iter_mut().for_each(|x| *x *= s);
        }
    }
}

fn violates_cap(x: &[f64], cap: Option<f64>) -> bool {
    let Some(c) = cap else { return false };
    x.chunks_exact(3).any(|v| (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt() > c)
}

/// L-BFGS state that can be carried from one solve to the next.
///
/// Successive problems in a sequence share their Hessian up to the change in
/// projections, so the curvature pairs of one solve remain useful for the
/// next.
#[derive(Debug, Clone)]
pub struct Minimizer {
    memory: LbfgsMemory,
}

impl Minimizer {
    pub fn new(memory: usize) -> Self {
        Minimizer {
            memory: LbfgsMemory::new(memory),
        }
    }

    pub fn reset(&mut self) {
        self.memory.clear();
    }

    /// Runs [`minimize`] starting from the stored curvature pairs, and keeps
    /// the pairs gathered along the way.
    pub fn run(&mut self, problem: &ControlProblem, b0: &ForceField) -> Result<MinimizeOutcome> {
        if self.memory.dim().is_some_and(|d| d != 3 * problem.support().len()) {
            self.memory.clear();
        }
        run(problem, b0, &mut self.memory)
    }
}

/// Minimizes `Φ` over the control support with L-BFGS.
///
/// Steps come from the two-loop recursion with a backtracking Armijo line
/// search (halving). Steepest-descent steps, used at the start and after a
/// memory reset, begin with the step `2Φ/‖∇Φ‖²` refined once by a
/// quadratic fit along the ray. With a force cap, iterates are projected
/// per vertex and an L-BFGS direction that leaves the feasible set is
/// replaced by a projected-gradient step.
pub fn minimize(problem: &ControlProblem, b0: &ForceField) -> Result<MinimizeOutcome> {
    run(problem, b0, &mut LbfgsMemory::new(problem.params().memory))
}

fn run(problem: &ControlProblem, b0: &ForceField, memory: &mut LbfgsMemory) -> Result<MinimizeOutcome> {
    let start = Instant::now();
    let params = *problem.params();
    let cap = problem.cap();
    let phi_floor = 0.5 * (1e-12 * problem.model().mesh().diameter()).powi(2);

    let mut x0 = problem.adapt(b0)?.to_control();
    project_cap(&mut x0, cap);
    let mut ev = Evaluator { problem, count: 0 };
    let mut cur = ev.eval(x0)?;
    let g0 = norm(&cur.g);
    let g_ref = match params.grad_reference {
        GradientReference::ZeroControl if cur.x.iter().any(|&x| x != 0.0) => {
            norm(&ev.eval(vec![0.0; cur.x.len()])?.g)
        }
        _ => g0,
    };
    let initial_objective = cur.phi;
    let mut j_history = vec![cur.j];
    let mut grad_norm_history = vec![g0];
    let converged_at = |p: &Point| {
        let gn = norm(&p.g);
        gn <= params.grad_rtol * g_ref || gn == 0.0 || p.phi <= phi_floor
    };

    let mut iterations = 0;
    let mut converged = converged_at(&cur);
    let mut line_search_failed = false;
    while !converged && iterations < params.max_iters {
        let mut steepest = memory.is_empty();
        let mut d = if steepest {
            cur.g.iter().map(|g| -g).collect()
        } else {
            memory.direction(&cur.g)
        };
        if !steepest {
            let full: Vec<f64> = cur.x.iter().zip(&d).map(|(x, d)| x + d).collect();
            if dot(&cur.g, &d) >= 0.0 || violates_cap(&full, cap) {
                steepest = true;
                d = cur.g.iter().map(|g| -g).collect();
            }
        }
        let mut next = line_search(&mut ev, &cur, &d, steepest, cap, &params)?;
        if next.is_none() && !steepest {
            memory.clear();
            d = cur.g.iter().map(|g| -g).collect();
            next = line_search(&mut ev, &cur, &d, true, cap, &params)?;
        }
        let Some(next) = next else {
            line_search_failed = true;
            break;
        };
        let s: Vec<f64> = next.x.iter().zip(&cur.x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = next.g.iter().zip(&cur.g).map(|(a, b)| a - b).collect();
        memory.push(s, y);
        cur = next;
        iterations += 1;
        j_history.push(cur.j);
        grad_norm_history.push(norm(&cur.g));
        converged = converged_at(&cur);
    }

    let n = problem.model().mesh().vertex_count();
    let report = MinimizeReport {
        iterations,
        evaluations: ev.count,
        converged,
        line_search_failed,
        initial_objective,
        final_objective: cur.phi,
        final_j: cur.j,
        initial_grad_norm: g0,
        reference_grad_norm: g_ref,
        final_grad_norm: norm(&cur.g),
        j_history,
        grad_norm_history,
        wall_time: start.elapsed().as_secs_f64(),
    };
    Ok(MinimizeOutcome {
        force: ForceField::from_control(n, problem.support(), &cur.x),
        displacement: cur.u,
        report,
    })
}

/// Backtracking Armijo search along `d` (projected onto the cap).
/// Returns `None` when no trial decreases Φ sufficiently.
fn line_search(
    ev: &mut Evaluator<'_>,
    cur: &Point,
    d: &[f64],
    steepest: bool,
    cap: Option<f64>,
    params: &crate::control::OptimizerParams,
) -> Result<Option<Point>> {
    let gnorm2 = dot(&cur.g, &cur.g);
    let mut alpha = if steepest && cur.phi > 0.0 && gnorm2 > 0.0 {
        2.0 * cur.phi / gnorm2
    } else {
        1.0
    };
    let mut refine = steepest;
    let mut fallback: Option<Point> = None;
    for _ in 0..params.max_line_search {
        let mut xt: Vec<f64> = cur.x.iter().zip(d).map(|(x, d)| x + alpha * d).collect();
        project_cap(&mut xt, cap);
        let s: Vec<f64> = xt.iter().zip(&cur.x).map(|(a, b)| a - b).collect();
        let gs = dot(&cur.g, &s);
        if s.iter().all(|&v| v == 0.0) || !(gs < 0.0) {
            break;
        }
        let trial = ev.eval(xt)?;
        let armijo = trial.phi <= cur.phi + params.armijo_c1 * gs;
        if refine {
            refine = false;
            // quadratic model q(a) = Φ + a·slope + c a²/2 through the probe
            let slope = gs / alpha;
            let curvature = 2.0 * (trial.phi - cur.phi - alpha * slope) / (alpha * alpha);
            if curvature > 0.0 {
                let a_star = -slope / curvature;
                if a_star < 0.5 * alpha || a_star > 2.0 * alpha {
                    if armijo {
                        fallback = Some(trial);
                    }
                    alpha = a_star;
                    continue;
                }
            }
        }
        if armijo {
            return Ok(Some(match fallback {
                Some(f) if f.phi < trial.phi => f,
                _ => trial,
            }));
        }
        if fallback.is_some() {
            return Ok(fallback);
        }
        alpha *= 0.5;
    }
    Ok(fallback)
}
