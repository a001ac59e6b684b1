//! Batch front end: TOML run configurations, commands, and exit codes.

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::diagnostics::{
    compatibility_constant, estimate_monitor, verify_concavity, verify_identity_ensemble, verify_solved_state,
    DiagnosticsReport,
};
use crate::error::{Error, Result};
use crate::expr::TrigExpr;
use crate::grid::{read_scalar, write_scalar, ScalarField, TorusGrid};
use crate::operator::{admissibility_margin, cone_margins, residual, ProblemData};
use crate::solver::{homotopy_solve, two_stage_solve, write_history, SolverConfig, SolverState};
use crate::symfunc::{CoefficientSet, HermitianMatrix, OperatorCalculus};

pub const EXIT_OK: i32 = 0;
pub const EXIT_HYPOTHESIS: i32 = 1;
pub const EXIT_SOLVER: i32 = 2;
pub const EXIT_VERIFICATION: i32 = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Solve,
    TwoStage,
    Manufacture,
    Verify,
}

/// Hermitian matrix given by its real and (optional) imaginary parts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixSpec {
    pub re: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub im: Option<Vec<Vec<f64>>>,
}

impl MatrixSpec {
    pub fn to_matrix(&self, n: usize) -> Result<HermitianMatrix> {
        let square = |rows: &Vec<Vec<f64>>| rows.len() == n && rows.iter().all(|r| r.len() == n);
        if !square(&self.re) || !self.im.as_ref().is_none_or(square) {
            return Err(Error::Config(format!("matrix must be {n} x {n}")));
        }
        let mut e = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let im = self.im.as_ref().map_or(0.0, |m| m[i][j]);
                e.push(C64::new(self.re[i][j], im));
            }
        }
        HermitianMatrix::new(n, e)
    }

    pub fn scaled_identity(n: usize, s: f64) -> Self {
        MatrixSpec {
            re: (0..n).map(|i| (0..n).map(|j| if i == j { s } else { 0.0 }).collect()).collect(),
            im: None,
        }
    }
}

/// Target density: a constant, a trigonometric expression, or the literal
/// `"compatibility"` for the constant making the data compatible.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PsiSpec {
    Constant(f64),
    Text(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub n: usize,
    pub points_per_axis: usize,
    pub coefficients: Vec<f64>,
    pub chi0: MatrixSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric: Option<MatrixSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<TrigExpr>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho_file: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub psi: Option<PsiSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub psi_file: Option<PathBuf>,
    /// Manufactured solution; in solve modes the result is compared to it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u_star: Option<TrigExpr>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    pub trials: usize,
    /// Also run n = 2, 3, 4 with the standard coefficient sets and `g = I`.
    pub standard_suite: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub state_file: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub state_b: Option<f64>,
    pub inject_fault: bool,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            trials: 1000,
            standard_suite: true,
            state_file: None,
            state_b: None,
            inject_fault: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mode: Mode,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub problem: Option<ProblemConfig>,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub verify: VerifyConfig,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads a config file; input file paths inside it are taken relative to
    /// the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        let resolve = |p: &mut Option<PathBuf>| {
            if let Some(p) = p {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        };
        if let Some(problem) = cfg.problem.as_mut() {
            resolve(&mut problem.rho_file);
            resolve(&mut problem.psi_file);
        }
        resolve(&mut cfg.verify.state_file);
        Ok(cfg)
    }

    fn problem(&self) -> Result<&ProblemConfig> {
        self.problem
            .as_ref()
            .ok_or_else(|| Error::Config("this mode needs a [problem] table".into()))
    }
}

fn read_scalar_file(path: &Path, grid: &TorusGrid) -> Result<ScalarField> {
    let bytes = fs::read(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let field = read_scalar(&mut bytes.as_slice())?;
    if field.grid() != grid {
        return Err(Error::Shape(format!("{} was written for a different grid", path.display())));
    }
    Ok(field)
}

impl ProblemConfig {
    pub fn grid(&self) -> Result<TorusGrid> {
        TorusGrid::new(self.n, self.points_per_axis)
    }

    pub fn coeffs(&self) -> Result<CoefficientSet> {
        if self.coefficients.len() != self.n {
            return Err(Error::Config(format!(
                "expected {} coefficients, got {}",
                self.n,
                self.coefficients.len()
            )));
        }
        CoefficientSet::new(self.coefficients.clone())
    }

    pub fn metric(&self) -> Result<HermitianMatrix> {
        match &self.metric {
            Some(m) => m.to_matrix(self.n),
            None => Ok(HermitianMatrix::identity(self.n)),
        }
    }

    fn check_axes(&self, e: &TrigExpr, what: &str) -> Result<()> {
        if e.axes_used() > 2 * self.n {
            return Err(Error::Config(format!("{what} uses a coordinate beyond dimension {}", self.n)));
        }
        Ok(())
    }

    fn potential(&self, grid: &TorusGrid) -> Result<Option<ScalarField>> {
        match (&self.rho, &self.rho_file) {
            (Some(_), Some(_)) => Err(Error::Config("give rho or rho_file, not both".into())),
            (Some(e), None) => {
                self.check_axes(e, "rho")?;
                Ok(Some(e.sample(grid)?))
            }
            (None, Some(path)) => Ok(Some(read_scalar_file(path, grid)?)),
            (None, None) => Ok(None),
        }
    }

    /// Problem data with the target density left unchecked (`psi` may still
    /// be the placeholder used for manufacturing).
    fn data_with(&self, psi: ScalarField) -> Result<ProblemData> {
        let grid = self.grid()?;
        ProblemData::kahler_unchecked(
            &grid,
            &self.metric()?,
            &self.chi0.to_matrix(self.n)?,
            self.potential(&grid)?,
            psi,
            &self.coeffs()?,
        )
    }

    /// Fully validated problem data.
    pub fn build(&self) -> Result<ProblemData> {
        let grid = self.grid()?;
        let placeholder = self.data_with(ScalarField::constant(&grid, 1.0))?;
        let psi = match (&self.psi, &self.psi_file) {
            (Some(_), Some(_)) => return Err(Error::Config("give psi or psi_file, not both".into())),
            (None, None) => return Err(Error::Config("the problem needs psi or psi_file".into())),
            (None, Some(path)) => read_scalar_file(path, &grid)?,
            (Some(PsiSpec::Constant(c)), None) => ScalarField::constant(&grid, *c),
            (Some(PsiSpec::Text(t)), None) if t.trim() == "compatibility" => {
                ScalarField::constant(&grid, compatibility_constant(&placeholder)?)
            }
            (Some(PsiSpec::Text(t)), None) => {
                let e: TrigExpr = t.parse()?;
                self.check_axes(&e, "psi")?;
                e.sample(&grid)?
            }
        };
        let data = placeholder.with_psi_unchecked(psi)?;
        data.validate()?;
        Ok(data)
    }
}

#[derive(Parser, Debug)]
#[command(name = "gcma", version, about = "Solve and verify generalized complex Monge-Ampere equations on flat tori")]
pub struct Args {
    /// Run configuration (TOML).
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the configured mode.
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    /// Overrides the configured output directory.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

/// Stable machine-readable name of an error.
pub fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::NotHermitian { .. } => "not_hermitian",
        Error::Shape(_) => "shape",
        Error::InvalidCoefficients(_) => "invalid_coefficients",
        Error::NonPositiveMetric { .. } => "non_positive_metric",
        Error::Index { .. } => "index",
        Error::NotAdmissible { .. } => "not_admissible",
        Error::InvalidGrid(_) => "invalid_grid",
        Error::NonPositiveDensity { .. } => "non_positive_density",
        Error::ConeViolated { .. } => "cone_condition",
        Error::NotKahler => "not_kahler",
        Error::NewtonStalled { .. } => "newton_stalled",
        Error::LinearSolveFailed { .. } => "linear_solve_failed",
        Error::HomotopyStalled { .. } => "homotopy_stalled",
        Error::ConeViolatedForH { .. } => "cone_condition_majorant",
        Error::HypothesisViolated { .. } => "hypothesis_violated",
        Error::MonotonicityViolated { .. } => "monotonicity_violated",
        Error::Parse(_) => "parse",
        Error::Config(_) => "config",
        Error::Format(_) => "format",
        Error::Io(_) => "io",
    }
}

pub fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::NewtonStalled { .. }
        | Error::LinearSolveFailed { .. }
        | Error::HomotopyStalled { .. }
        | Error::MonotonicityViolated { .. } => EXIT_SOLVER,
        _ => EXIT_HYPOTHESIS,
    }
}

fn error_details(e: &Error) -> Value {
    match e {
        Error::ConeViolated { point, margin } | Error::ConeViolatedForH { point, margin } => {
            json!({ "point": point, "margin": margin })
        }
        Error::NotAdmissible { point, min_eigenvalue } => json!({ "point": point, "min_eigenvalue": min_eigenvalue }),
        Error::NonPositiveDensity { point, value } => json!({ "point": point, "value": value }),
        Error::HypothesisViolated { point, psi, c } => json!({ "point": point, "psi": psi, "c": c }),
        Error::NewtonStalled {
            residual_inf,
            iterations,
        } => json!({ "residual_inf": residual_inf, "iterations": iterations }),
        Error::LinearSolveFailed {
            relative_residual,
            iterations,
        } => json!({ "relative_residual": relative_residual, "iterations": iterations }),
        Error::HomotopyStalled { t, step } => json!({ "t": t, "step": step }),
        Error::MonotonicityViolated { t, b } => json!({ "t": t, "b": b }),
        _ => json!({}),
    }
}

fn write_json(dir: &Path, name: &str, value: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
    fs::write(dir.join(name), text + "\n")?;
    Ok(())
}

fn write_field(dir: &Path, name: &str, f: &ScalarField) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(dir.join(name))?);
    write_scalar(&mut w, f)
}

/// Writes `error.json` and returns the exit code for `e`.
fn report_error(dir: &Path, e: &Error, code: i32) -> i32 {
    let doc = json!({
        "error": error_kind(e),
        "message": e.to_string(),
        "exit_code": code,
        "details": error_details(e),
    });
    if let Err(io) = fs::create_dir_all(dir).and_then(|_| {
        fs::write(
            dir.join("error.json"),
            serde_json::to_string_pretty(&doc).unwrap_or_default() + "\n",
        )
    }) {
        eprintln!("could not write error.json: {io}");
    }
    eprintln!("error: {e}");
    code
}

fn fail(dir: &Path, e: Error) -> i32 {
    let code = exit_code_for(&e);
    report_error(dir, &e, code)
}

fn mean_zero_distance(a: &ScalarField, b: &ScalarField) -> Result<f64> {
    let (ma, mb) = (a.mean(), b.mean());
    Ok(a.zip_with(b, |x, y| (x - ma) - (y - mb))?.max_abs())
}

fn solve_summary(config: &RunConfig, data: &ProblemData, state: &SolverState) -> Result<Value> {
    let problem = config.problem()?;
    let r = residual(&state.u, state.b, data.psi(), data)?;
    let (cone_margin, cone_point) = cone_margins(data, data.psi())?;
    let mut summary = json!({
        "mode": config.mode,
        "n": problem.n,
        "points_per_axis": problem.points_per_axis,
        "b": state.b,
        "t": state.t,
        "residual_inf": r.norm_inf,
        "residual_l2": r.norm_l2,
        "admissibility_margin": admissibility_margin(&state.u, data),
        "cone": { "min_margin": cone_margin, "argmin_point": cone_point },
        "compatibility_constant": compatibility_constant(data)?,
        "newton_iterations": state.total_newton_iterations(),
        "homotopy_steps": state.history.len(),
        "estimates": estimate_monitor(&state.u, data)?,
    });
    if let Some(u_star) = &problem.u_star {
        let reference = u_star.sample(data.grid())?;
        summary["reference_error_inf"] = json!(mean_zero_distance(&state.u, &reference)?);
    }
    Ok(summary)
}

/// Runs a solve (homotopy or two-stage per the mode) and writes `u.bin`,
/// `history.csv` and `summary.json`.
pub fn cmd_solve(config: &RunConfig) -> i32 {
    let dir = config.output_dir.as_path();
    if let Err(e) = fs::create_dir_all(dir) {
        return report_error(dir, &e.into(), EXIT_HYPOTHESIS);
    }
    let data = match config
        .problem()
        .and_then(|p| config.solver.validate().map(|_| p))
        .and_then(ProblemConfig::build)
    {
        Ok(d) => d,
        Err(e) => return report_error(dir, &e, EXIT_HYPOTHESIS),
    };
    let solved = match config.mode {
        Mode::TwoStage => two_stage_solve(&data, &config.solver),
        _ => homotopy_solve(&data, &config.solver),
    };
    let state = match solved {
        Ok(s) => s,
        Err(e) => return fail(dir, e),
    };
    let written = (|| -> Result<()> {
        write_field(dir, "u.bin", &state.u)?;
        write_history(fs::File::create(dir.join("history.csv"))?, &state.history)?;
        write_json(dir, "summary.json", &solve_summary(config, &data, &state)?)
    })();
    match written {
        Ok(()) => {
            eprintln!(
                "solved: b = {:.12e}, {} Newton iterations over {} continuation steps",
                state.b,
                state.total_newton_iterations(),
                state.history.len()
            );
            EXIT_OK
        }
        Err(e) => report_error(dir, &e, EXIT_SOLVER),
    }
}

/// Density `psi*` for which the configured `u_star` solves the equation
/// with `b = 0`, using the analytic complex Hessian of `u_star`.
pub fn manufacture_density(problem: &ProblemConfig) -> Result<(ScalarField, ScalarField)> {
    let u_star = problem
        .u_star
        .as_ref()
        .ok_or_else(|| Error::Config("manufacture mode needs problem.u_star".into()))?;
    problem.check_axes(u_star, "u_star")?;
    let grid = problem.grid()?;
    let data = problem.data_with(ScalarField::constant(&grid, 1.0))?;
    let calc: &OperatorCalculus = data.calculus();
    let hess = u_star.sample_complex_hessian(&grid)?;
    let x = data.chi().add(&hess)?;
    let mut psi = Vec::with_capacity(grid.len());
    for p in 0..grid.len() {
        let value = calc.density_ratio(&x.at(p)).map_err(|e| match e {
            Error::NotAdmissible { min_eigenvalue, .. } => Error::NotAdmissible {
                point: Some(p),
                min_eigenvalue,
            },
            other => other,
        })?;
        psi.push(value);
    }
    Ok((ScalarField::new(grid.clone(), psi)?, u_star.sample(&grid)?))
}

/// Writes `psi_star.bin`, `u_star.bin` and a companion `config.toml` that
/// solves for the manufactured field.
pub fn cmd_manufacture(config: &RunConfig) -> i32 {
    let dir = config.output_dir.as_path();
    if let Err(e) = fs::create_dir_all(dir) {
        return report_error(dir, &e.into(), EXIT_HYPOTHESIS);
    }
    let result = (|| -> Result<()> {
        let problem = config.problem()?;
        let (psi, u_star) = manufacture_density(problem)?;
        write_field(dir, "psi_star.bin", &psi)?;
        write_field(dir, "u_star.bin", &u_star)?;
        let companion = RunConfig {
            mode: Mode::Solve,
            output_dir: dir.join("solve"),
            problem: Some(ProblemConfig {
                psi: None,
                psi_file: Some(PathBuf::from("psi_star.bin")),
                ..problem.clone()
            }),
            ..config.clone()
        };
        fs::write(dir.join("config.toml"), companion.to_toml()?)?;
        Ok(())
    })();
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => report_error(dir, &e, EXIT_HYPOTHESIS),
    }
}

/// Identity and concavity checks on seeded ensembles, plus an optional
/// solved state. Writes `report.json`.
pub fn run_verification(config: &RunConfig) -> Result<DiagnosticsReport> {
    let v = &config.verify;
    let mut report = DiagnosticsReport::default();
    let mut seed = config.seed;
    let mut run = |g: &HermitianMatrix, coeffs: &CoefficientSet, report: DiagnosticsReport| -> Result<DiagnosticsReport> {
        let ids = verify_identity_ensemble(g, coeffs, v.trials, seed, v.inject_fault)?;
        let conc = verify_concavity(g, coeffs, v.trials, seed.wrapping_add(1))?;
        seed = seed.wrapping_add(2);
        Ok(report.merge(DiagnosticsReport {
            concavity: Some(conc),
            ..ids
        }))
    };
    if let Some(problem) = &config.problem {
        report = run(&problem.metric()?, &problem.coeffs()?, report)?;
    }
    if v.standard_suite {
        for n in 2..=4 {
            let g = HermitianMatrix::identity(n);
            for coeffs in [
                CoefficientSet::donaldson(n)?,
                CoefficientSet::monge_ampere(n)?,
                CoefficientSet::all_ones(n)?,
            ] {
                report = run(&g, &coeffs, report)?;
            }
        }
    }
    if config.problem.is_none() && !v.standard_suite {
        return Err(Error::Config("nothing to verify: no problem and standard_suite = false".into()));
    }
    if let Some(path) = &v.state_file {
        let problem = config.problem()?;
        let data = problem.build()?;
        let u = read_scalar_file(path, data.grid())?;
        let b = v
            .state_b
            .ok_or_else(|| Error::Config("verify.state_file needs verify.state_b".into()))?;
        report = report.merge(verify_solved_state(&u, b, &data)?);
    }
    Ok(report)
}

pub fn cmd_verify(config: &RunConfig) -> i32 {
    let dir = config.output_dir.as_path();
    if let Err(e) = fs::create_dir_all(dir) {
        return report_error(dir, &e.into(), EXIT_HYPOTHESIS);
    }
    let report = match run_verification(config) {
        Ok(r) => r,
        Err(e) => return report_error(dir, &e, EXIT_HYPOTHESIS),
    };
    if let Err(e) = write_json(dir, "report.json", &report) {
        return report_error(dir, &e, EXIT_VERIFICATION);
    }
    let failures = report.failures();
    if failures.is_empty() {
        eprintln!("all identity checks passed");
        return EXIT_OK;
    }
    let doc = json!({
        "error": "verification_failed",
        "message": format!("failed checks: {}", failures.join(", ")),
        "exit_code": EXIT_VERIFICATION,
        "details": { "failed": failures },
    });
    if let Err(e) = write_json(dir, "error.json", &doc) {
        eprintln!("could not write error.json: {e}");
    }
    eprintln!("verification failed: {}", failures.join(", "));
    EXIT_VERIFICATION
}

pub fn run(config: &RunConfig) -> i32 {
    match config.mode {
        Mode::Solve | Mode::TwoStage => cmd_solve(config),
        Mode::Manufacture => cmd_manufacture(config),
        Mode::Verify => cmd_verify(config),
    }
}

/// Entry point for the binary: loads the config, applies flag overrides and
/// dispatches.
pub fn main_with_args(args: Args) -> i32 {
    let mut config = match RunConfig::load(&args.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_HYPOTHESIS;
        }
    };
    if let Some(m) = args.mode {
        config.mode = m;
    }
    if let Some(o) = args.output {
        config.output_dir = o;
    }
    if let Some(s) = args.seed {
        config.seed = s;
    }
    run(&config)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
mode = "two-stage"
output_dir = "out"
seed = 7

[problem]
n = 2
points_per_axis = 8
coefficients = [1.0, 0.0]
chi0 = { re = [[2.0, 0.1], [0.1, 2.0]], im = [[0.0, 0.2], [-0.2, 0.0]] }
rho = "0.05*sin(2*pi*x1)*cos(2*pi*y2)"
psi = "compatibility"

[solver]
t_step_init = 0.5
"#;

    #[test]
    fn parses_and_round_trips() {
        let cfg = RunConfig::parse(SAMPLE).unwrap();
        assert_eq!(cfg.mode, Mode::TwoStage);
        assert_eq!(cfg.solver.t_step_init, 0.5);
        assert_eq!(cfg.solver.max_newton, 30);
        assert_eq!(cfg.verify, VerifyConfig::default());
        let again = RunConfig::parse(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn psi_variants() {
        let mut cfg = RunConfig::parse(SAMPLE).unwrap();
        let p = cfg.problem.as_mut().unwrap();
        p.psi = Some(PsiSpec::Constant(2.0));
        let d = p.build().unwrap();
        assert!(d.psi().values().iter().all(|&v| v == 2.0));
        p.psi = Some(PsiSpec::Text("1.5 + 0.5*sin(2*pi*x1)".into()));
        assert!(p.build().is_ok());
        p.psi = Some(PsiSpec::Text("3 + sin(2*pi*x1)".into()));
        assert!(matches!(p.build(), Err(Error::ConeViolated { .. })));
        p.psi = Some(PsiSpec::Text("sin(x1)".into()));
        assert!(matches!(p.build(), Err(Error::Parse(_))));
        let text = "mode = \"solve\"\noutput_dir = \"o\"\n[problem]\nn = 2\npoints_per_axis = 4\ncoefficients = [1, 0]\nchi0 = { re = [[2, 0], [0, 2]] }\npsi = 3\n";
        let cfg = RunConfig::parse(text).unwrap();
        assert_eq!(cfg.problem.unwrap().psi, Some(PsiSpec::Constant(3.0)));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = SAMPLE.replace("seed = 7", "seed = 7\nbogus = 1");
        assert!(matches!(RunConfig::parse(&text), Err(Error::Config(_))));
    }

    #[test]
    fn error_codes() {
        assert_eq!(exit_code_for(&Error::ConeViolated { point: 0, margin: 0.0 }), EXIT_HYPOTHESIS);
        assert_eq!(exit_code_for(&Error::HomotopyStalled { t: 0.5, step: 1e-5 }), EXIT_SOLVER);
        assert_eq!(error_kind(&Error::ConeViolated { point: 0, margin: 0.0 }), "cone_condition");
    }
}
