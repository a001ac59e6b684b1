//! Damped Newton corrector and continuation drivers.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::diagnostics::compatibility_constant;
use crate::error::{Error, Result};
use crate::grid::{ScalarField, TorusGrid};
use crate::krylov::{gmres, GmresOptions};
use crate::operator::{
    check_density, cone_margins, reference_density_phi, sweep, Linearization, ProblemData, Residual, CONE_TOL,
};

/// Largest `b` tolerated along the second stage of [`two_stage_solve`].
pub const MONOTONICITY_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub newton_tol_inf: f64,
    pub max_newton: usize,
    /// Relative residual target of each Krylov solve.
    pub linear_tol: f64,
    pub max_backtracks: usize,
    pub t_step_init: f64,
    pub t_step_min: f64,
    pub pos_floor: f64,
    pub growth: f64,
    /// Krylov basis size before a restart.
    pub krylov_restart: usize,
    /// Total Krylov iterations allowed per linear solve.
    pub max_linear_iters: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            newton_tol_inf: 1e-9,
            max_newton: 30,
            linear_tol: 1e-8,
            max_backtracks: 30,
            t_step_init: 0.1,
            t_step_min: 1e-4,
            pos_floor: 1e-8,
            growth: 1.5,
            krylov_restart: 60,
            max_linear_iters: 5000,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let reals = [
            ("newton_tol_inf", self.newton_tol_inf),
            ("linear_tol", self.linear_tol),
            ("t_step_init", self.t_step_init),
            ("t_step_min", self.t_step_min),
            ("pos_floor", self.pos_floor),
            ("growth", self.growth),
        ];
        for (name, v) in reals {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("solver.{name} must be positive, got {v}")));
            }
        }
        let ints = [
            ("max_newton", self.max_newton),
            ("max_backtracks", self.max_backtracks),
            ("krylov_restart", self.krylov_restart),
            ("max_linear_iters", self.max_linear_iters),
        ];
        for (name, v) in ints {
            if v == 0 {
                return Err(Error::Config(format!("solver.{name} must be positive")));
            }
        }
        if !(self.t_step_min <= self.t_step_init && self.t_step_init <= 1.0) {
            return Err(Error::Config("need t_step_min <= t_step_init <= 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistoryRow {
    pub t: f64,
    pub newton_iters: usize,
    pub residual_inf: f64,
    pub margin: f64,
    pub b: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverState {
    pub u: ScalarField,
    pub b: f64,
    pub t: f64,
    pub history: Vec<HistoryRow>,
}

impl SolverState {
    pub fn initial(grid: &TorusGrid) -> Self {
        SolverState {
            u: ScalarField::zeros(grid),
            b: 0.0,
            t: 0.0,
            history: Vec::new(),
        }
    }

    pub fn total_newton_iterations(&self) -> usize {
        self.history.iter().map(|r| r.newton_iters).sum()
    }

    /// `u` shifted so that its maximum is zero.
    pub fn sup_normalized(&self) -> ScalarField {
        let sup = self.u.values().iter().copied().fold(f64::NEG_INFINITY, f64::max);
        self.u.shifted(-sup)
    }
}

pub fn write_history<W: Write>(w: W, history: &[HistoryRow]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for row in history {
        out.serialize(row).map_err(|e| Error::Io(e.to_string()))?;
    }
    out.flush()?;
    Ok(())
}

fn recenter(u: &mut [f64]) {
    let mean = u.iter().sum::<f64>() / u.len() as f64;
    u.iter_mut().for_each(|v| *v -= mean);
}

/// Newton iterations at fixed density `psi_t`. Appends one history row for
/// the corrected state.
pub fn newton_correct(
    state: SolverState,
    psi_t: &ScalarField,
    data: &ProblemData,
    cfg: &SolverConfig,
) -> Result<SolverState> {
    let grid = data.grid();
    if state.u.grid() != grid || psi_t.grid() != grid {
        return Err(Error::Shape("state and density must live on the problem grid".into()));
    }
    check_density(psi_t)?;
    let SolverState { u, mut b, t, mut history } = state;
    let mut u = u.into_values();
    recenter(&mut u);
    let mut u = ScalarField::new(grid.clone(), u)?;

    let first = sweep(&u, b, psi_t, data);
    let mut res: Residual = first.residual.ok_or(Error::NotAdmissible {
        point: Some(first.worst_point),
        min_eigenvalue: first.margin,
    })?;
    let mut margin = first.margin;
    let len = grid.len();
    let mut iters = 0;
    let mut rhs = vec![0.0; len + 1];
    let mut delta = vec![0.0; len + 1];

    while res.norm_inf > cfg.newton_tol_inf {
        if iters >= cfg.max_newton {
            return Err(Error::NewtonStalled {
                residual_inf: res.norm_inf,
                iterations: iters,
            });
        }
        let lin = Linearization::new(&u, b, psi_t, data)?;
        let sigma = lin.diagonal().iter().map(|d| d.abs()).sum::<f64>() / len as f64;
        let row = sigma / len as f64;
        for (r, v) in rhs.iter_mut().zip(res.field.values()) {
            *r = -v;
        }
        rhs[len] = -row * u.values().iter().sum::<f64>();
        delta.fill(0.0);
        let apply = |v: &[f64], out: &mut [f64]| {
            lin.apply(&v[..len], v[len], &mut out[..len]);
            out[len] = row * v[..len].iter().sum::<f64>();
        };
        let diag = lin.diagonal();
        let precond = |v: &[f64], out: &mut [f64]| {
            for ((o, x), d) in out.iter_mut().zip(v).zip(diag) {
                *o = x / d;
            }
            out[len] = v[len];
        };
        let opts = GmresOptions {
            restart: cfg.krylov_restart,
            max_iters: cfg.max_linear_iters,
            rel_tol: cfg.linear_tol,
        };
        gmres(apply, precond, &rhs, &mut delta, &opts)?;
        drop(lin);

        // b moves multiplicatively: the residual is affine in e^{-b}
        let db = delta[len];
        let mut s = 1.0;
        let mut accepted = None;
        for _ in 0..=cfg.max_backtracks {
            let q = 1.0 - s * db;
            if q > 0.0 {
                let b_new = b - q.ln();
                let trial: Vec<f64> = u.values().iter().zip(&delta).map(|(a, d)| a + s * d).collect();
                let trial = ScalarField::from_vec_unchecked(grid.clone(), trial);
                let sw = sweep(&trial, b_new, psi_t, data);
                if sw.margin > cfg.pos_floor {
                    if let Some(r) = sw.residual {
                        if r.norm_inf <= (1.0 - s / 4.0) * res.norm_inf {
                            accepted = Some((trial, b_new, r, sw.margin));
                            break;
                        }
                    }
                }
            }
            s *= 0.5;
        }
        let Some((trial, b_new, r, m)) = accepted else {
            return Err(Error::NewtonStalled {
                residual_inf: res.norm_inf,
                iterations: iters,
            });
        };
        let mut values = trial.into_values();
        recenter(&mut values);
        u = ScalarField::new(grid.clone(), values)?;
        b = b_new;
        res = r;
        margin = m;
        iters += 1;
    }

    history.push(HistoryRow {
        t,
        newton_iters: iters,
        residual_inf: res.norm_inf,
        margin,
        b,
    });
    Ok(SolverState { u, b, t, history })
}

fn interpolate(start: &ScalarField, target: &ScalarField, t: f64) -> ScalarField {
    if t <= 0.0 {
        return start.clone();
    }
    if t >= 1.0 {
        return target.clone();
    }
    let values = start
        .values()
        .iter()
        .zip(target.values())
        .map(|(s, g)| ((1.0 - t) * s.ln() + t * g.ln()).exp())
        .collect();
    ScalarField::from_vec_unchecked(start.grid().clone(), values)
}

fn recoverable(e: &Error) -> bool {
    matches!(
        e,
        Error::NewtonStalled { .. } | Error::LinearSolveFailed { .. } | Error::NotAdmissible { .. }
    )
}

/// Continuation along `start^{1-t} target^t` from a state solving the
/// `t = 0` equation. With `b_cap`, every accepted `b` must stay below it.
fn continuation(
    data: &ProblemData,
    start: &ScalarField,
    target: &ScalarField,
    init: SolverState,
    cfg: &SolverConfig,
    b_cap: Option<f64>,
) -> Result<SolverState> {
    let check = |s: &SolverState| -> Result<()> {
        match b_cap {
            Some(cap) if s.b > cap => Err(Error::MonotonicityViolated { t: s.t, b: s.b }),
            _ => Ok(()),
        }
    };
    let mut state = newton_correct(SolverState { t: 0.0, ..init }, start, data, cfg)?;
    check(&state)?;
    let mut step = cfg.t_step_init;
    while state.t < 1.0 {
        let t = (state.t + step).min(1.0);
        let psi_t = interpolate(start, target, t);
        match newton_correct(SolverState { t, ..state.clone() }, &psi_t, data, cfg) {
            Ok(next) => {
                check(&next)?;
                state = next;
                step = (step * cfg.growth).min(1.0);
            }
            Err(e) if recoverable(&e) => {
                step *= 0.5;
                if step < cfg.t_step_min {
                    return Err(Error::HomotopyStalled { t: state.t, step });
                }
            }
            Err(e) => return Err(e),
        }
    }
    Ok(state)
}

fn finish(state: SolverState) -> SolverState {
    SolverState {
        u: state.sup_normalized(),
        ..state
    }
}

/// Continuity path from the density of `chi` itself to the target density.
pub fn homotopy_solve(data: &ProblemData, cfg: &SolverConfig) -> Result<SolverState> {
    cfg.validate()?;
    data.validate()?;
    let grid = data.grid();
    let phi = reference_density_phi(data, &ScalarField::zeros(grid))?;
    let state = continuation(data, &phi, data.psi(), SolverState::initial(grid), cfg, None)?;
    Ok(finish(state))
}

/// Two-stage path through the majorant `h = max(phi, psi)`: first from `phi`
/// to `h`, then from `h` to `psi`, with `b` kept non-positive on the second
/// stage.
pub fn two_stage_solve(data: &ProblemData, cfg: &SolverConfig) -> Result<SolverState> {
    cfg.validate()?;
    if !data.is_kahler() {
        return Err(Error::NotKahler);
    }
    data.validate()?;
    let grid = data.grid();
    let c = compatibility_constant(data)?;
    let psi = data.psi();
    if let Some((point, &value)) = psi
        .values()
        .iter()
        .enumerate()
        .find(|(_, &v)| v < (1.0 - 1e-12) * c)
    {
        return Err(Error::HypothesisViolated { point, psi: value, c });
    }
    let phi = reference_density_phi(data, &ScalarField::zeros(grid))?;
    let h = phi.zip_with(psi, f64::max)?;
    let (margin, point) = cone_margins(data, &h)?;
    if !(margin > CONE_TOL / h.values()[point]) {
        return Err(Error::ConeViolatedForH { point, margin });
    }

    let stage_a = continuation(data, &phi, &h, SolverState::initial(grid), cfg, None)?;
    let stage_b = continuation(data, &h, psi, stage_a.clone(), cfg, Some(MONOTONICITY_TOL))?;
    Ok(finish(stage_b))
}
