//! Numerical checks of the trace identities, concavity, the cone condition,
//! the compatibility constant, and monitors for solved states.

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{gradient_norm_sq_with, integral, sup_and_inf, HermitianField, ScalarField};
use crate::operator::{assemble_x, cone_margins, ProblemData};
use crate::symfunc::{
    elementary_symmetric, elementary_symmetric_reduced, CoefficientSet, HermitianMatrix, Metric, OperatorCalculus,
};

/// Relative tolerance for the equality parts of the identity checks.
pub const IDENTITY_TOL: f64 = 1e-9;
/// Relative slack allowed on the inequality parts.
pub const INEQUALITY_SLACK: f64 = 1e-10;
pub const CONCAVITY_TOL: f64 = 1e-11;
/// Relative tolerance of the solved-equation check.
pub const SOLVED_TOL: f64 = 1e-7;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityCheck {
    pub max_violation: f64,
    pub worst_point: usize,
    pub pass: bool,
}

#[derive(Clone, Debug, Default)]
struct Tracker {
    equality: f64,
    inequality: f64,
    worst: f64,
    worst_point: usize,
}

impl Tracker {
    fn equal(&mut self, p: usize, lhs: f64, rhs: f64) {
        let v = (lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(f64::MIN_POSITIVE);
        self.equality = self.equality.max(v);
        self.note(p, v / IDENTITY_TOL);
    }

    /// Records a violation of `lhs <= rhs`.
    fn at_most(&mut self, p: usize, lhs: f64, rhs: f64) {
        let v = ((lhs - rhs) / lhs.abs().max(rhs.abs()).max(f64::MIN_POSITIVE)).max(0.0);
        self.inequality = self.inequality.max(v);
        self.note(p, v / INEQUALITY_SLACK);
    }

    fn note(&mut self, p: usize, scaled: f64) {
        if scaled > self.worst {
            self.worst = scaled;
            self.worst_point = p;
        }
    }

    fn finish(&self) -> IdentityCheck {
        IdentityCheck {
            max_violation: self.equality.max(self.inequality),
            worst_point: self.worst_point,
            pass: self.equality <= IDENTITY_TOL && self.inequality <= INEQUALITY_SLACK,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConcavityCheck {
    pub trials: usize,
    pub seed: u64,
    pub worst_gap: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConeReport {
    pub min_margin: f64,
    pub argmin_point: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegralEntry {
    pub alpha: usize,
    pub value: f64,
    pub reference: f64,
    pub deviation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateMonitor {
    pub sup_abs_u: f64,
    pub sup_grad_sq: f64,
    pub sup_w: f64,
    /// `sup w / e^{osc u}`.
    pub laplacian_ratio: f64,
    /// `sup |grad u|^2 / e^{osc u}`.
    pub gradient_ratio: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    /// `F^{ii} X_{ii} <= sum_a w_a S_a` for every index.
    pub partial_trace_bound: Option<IdentityCheck>,
    /// `sum_i F^{ii} X_{ii} = sum_a a w_a S_a`, inside `[T, nT]`.
    pub weighted_trace_range: Option<IdentityCheck>,
    /// `sum_i F^{ii}` against its expansion in the `S_a`.
    pub trace_identity: Option<IdentityCheck>,
    /// `sum_i F^{ii} >= S_1 sum_a a w_a S_a / n >= S_1 T / n`.
    pub newton_maclaurin_bound: Option<IdentityCheck>,
    /// `sum_a w_a S_a = e^{-b} / psi` on a solved state.
    pub solved_equation: Option<IdentityCheck>,
    pub concavity: Option<ConcavityCheck>,
    pub cone: Option<ConeReport>,
    pub integrals: Option<Vec<IntegralEntry>>,
    pub estimates: Option<EstimateMonitor>,
}

impl DiagnosticsReport {
    /// Names of the failing checks.
    pub fn failures(&self) -> Vec<&'static str> {
        let checks = [
            ("partial_trace_bound", &self.partial_trace_bound),
            ("weighted_trace_range", &self.weighted_trace_range),
            ("trace_identity", &self.trace_identity),
            ("newton_maclaurin_bound", &self.newton_maclaurin_bound),
            ("solved_equation", &self.solved_equation),
        ];
        let mut out: Vec<&'static str> = checks
            .iter()
            .filter(|(_, c)| c.as_ref().is_some_and(|c| !c.pass))
            .map(|(name, _)| *name)
            .collect();
        if self.concavity.as_ref().is_some_and(|c| !c.pass) {
            out.push("concavity");
        }
        out
    }

    pub fn passed(&self) -> bool {
        self.failures().is_empty()
    }

    /// Merges the checks of two ensembles, keeping the worse of each.
    pub fn merge(self, other: DiagnosticsReport) -> DiagnosticsReport {
        fn worse(a: Option<IdentityCheck>, b: Option<IdentityCheck>) -> Option<IdentityCheck> {
            match (a, b) {
                (Some(a), Some(b)) => Some(if !b.pass && a.pass || b.max_violation > a.max_violation {
                    IdentityCheck {
                        pass: a.pass && b.pass,
                        ..b
                    }
                } else {
                    IdentityCheck {
                        pass: a.pass && b.pass,
                        ..a
                    }
                }),
                (a, b) => a.or(b),
            }
        }
        let concavity = match (self.concavity, other.concavity) {
            (Some(a), Some(b)) => Some(ConcavityCheck {
                trials: a.trials + b.trials,
                seed: a.seed,
                worst_gap: a.worst_gap.min(b.worst_gap),
                pass: a.pass && b.pass,
            }),
            (a, b) => a.or(b),
        };
        DiagnosticsReport {
            partial_trace_bound: worse(self.partial_trace_bound, other.partial_trace_bound),
            weighted_trace_range: worse(self.weighted_trace_range, other.weighted_trace_range),
            trace_identity: worse(self.trace_identity, other.trace_identity),
            newton_maclaurin_bound: worse(self.newton_maclaurin_bound, other.newton_maclaurin_bound),
            solved_equation: worse(self.solved_equation, other.solved_equation),
            concavity,
            cone: self.cone.or(other.cone),
            integrals: self.integrals.or(other.integrals),
            estimates: self.estimates.or(other.estimates),
        }
    }
}

fn dot_conj(a: &HermitianMatrix, b: &HermitianMatrix) -> f64 {
    // sum_ij conj(a_ij) b_ji
    let n = a.dim();
    let mut s = C64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            s += a.get(i, j).conj() * b.get(j, i);
        }
    }
    s.re
}

/// Checks the trace identities of the linearization at each matrix. With
/// `inject_fault`, `F^{11}` at the first matrix is perturbed by `1e-3`
/// before the checks (a self-test of the checker).
pub fn verify_identities_on<'a>(
    matrices: impl IntoIterator<Item = &'a HermitianMatrix>,
    g: &HermitianMatrix,
    coeffs: &CoefficientSet,
    inject_fault: bool,
) -> Result<DiagnosticsReport> {
    let calc = OperatorCalculus::new(g, coeffs)?;
    let n = calc.n();
    let nf = n as f64;
    let w: Vec<f64> = (0..=n).map(|a| if a == 0 { 0.0 } else { coeffs.weight(a) }).collect();
    let mut partial = Tracker::default();
    let mut range = Tracker::default();
    let mut trace = Tracker::default();
    let mut nm = Tracker::default();

    for (p, x) in matrices.into_iter().enumerate() {
        let mut fm = calc.linearization_coeffs(x)?;
        if inject_fault && p == 0 {
            let mut e = fm.entries().to_vec();
            e[0] += 1e-3;
            fm = HermitianMatrix::new(n, e)?;
        }
        let eig = calc.eigen(x)?;
        let mu = &eig.lambda_inv;
        let s: Vec<f64> = (0..=n).map(|a| elementary_symmetric(mu, a)).collect::<Result<_>>()?;
        let total: f64 = (1..=n).map(|a| w[a] * s[a]).sum();
        let weighted: f64 = (1..=n).map(|a| a as f64 * w[a] * s[a]).sum();

        // G = conj(F); per-index weights f_k = (P^H g G g P)_kk
        let gmat = g;
        for k in 0..n {
            let v = eig.eigenvector(k);
            let mut gv = vec![C64::new(0.0, 0.0); n];
            for i in 0..n {
                for j in 0..n {
                    gv[i] += gmat.get(i, j) * v[j];
                }
            }
            let mut fk = C64::new(0.0, 0.0);
            for i in 0..n {
                for j in 0..n {
                    fk += gv[i].conj() * fm.get(i, j).conj() * gv[j];
                }
            }
            let lhs = fk.re * eig.lambda[k];
            let mut rhs = 0.0;
            for a in 1..=n {
                rhs += w[a] * elementary_symmetric_reduced(mu, a - 1, k)? * mu[k];
            }
            partial.equal(p, lhs, rhs);
            partial.at_most(p, lhs, total);
        }

        let sum_fx = dot_conj(&fm, x);
        range.equal(p, sum_fx, weighted);
        range.at_most(p, total, sum_fx);
        range.at_most(p, sum_fx, nf * total);

        let sum_f = dot_conj(&fm, g);
        let mut expansion = w[n] * s[n] * s[1];
        for a in 1..n {
            expansion += w[a] * (s[a] * s[1] - (a as f64 + 1.0) * s[a + 1]);
        }
        trace.equal(p, sum_f, expansion);

        let mid = s[1] * weighted / nf;
        nm.at_most(p, mid, sum_f);
        nm.at_most(p, s[1] * total / nf, mid);
    }
    Ok(DiagnosticsReport {
        partial_trace_bound: Some(partial.finish()),
        weighted_trace_range: Some(range.finish()),
        trace_identity: Some(trace.finish()),
        newton_maclaurin_bound: Some(nm.finish()),
        ..DiagnosticsReport::default()
    })
}

pub fn verify_pointwise_identities(
    x: &HermitianField,
    g: &HermitianMatrix,
    coeffs: &CoefficientSet,
) -> Result<DiagnosticsReport> {
    let matrices: Vec<HermitianMatrix> = (0..x.len()).map(|p| x.at(p)).collect();
    verify_identities_on(&matrices, g, coeffs, false)
}

/// Random Hermitian `X` with `X - 0.25 g` positive semi-definite.
pub fn random_admissible<R: Rng>(rng: &mut R, g: &HermitianMatrix) -> HermitianMatrix {
    let n = g.dim();
    let scale = rng.gen_range(0.3..2.0);
    let a: Vec<C64> = (0..n * n)
        .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * scale)
        .collect();
    let mut e = vec![C64::new(0.0, 0.0); n * n];
    for i in 0..n {
        for j in 0..n {
            let mut s = 0.25 * g.get(i, j);
            for k in 0..n {
                s += a[i * n + k] * a[j * n + k].conj();
            }
            e[i * n + j] = s;
        }
    }
    HermitianMatrix::new(n, e).expect("A A^H + 0.25 g is Hermitian")
}

/// Identity checks on `trials` seeded random admissible matrices.
pub fn verify_identity_ensemble(
    g: &HermitianMatrix,
    coeffs: &CoefficientSet,
    trials: usize,
    seed: u64,
    inject_fault: bool,
) -> Result<DiagnosticsReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let matrices: Vec<HermitianMatrix> = (0..trials).map(|_| random_admissible(&mut rng, g)).collect();
    verify_identities_on(&matrices, g, coeffs, inject_fault)
}

/// Midpoint concavity of `F` on seeded random admissible pairs.
pub fn verify_concavity(
    g: &HermitianMatrix,
    coeffs: &CoefficientSet,
    trials: usize,
    seed: u64,
) -> Result<ConcavityCheck> {
    if trials == 0 {
        return Err(Error::Config("concavity check needs at least one trial".into()));
    }
    let calc = OperatorCalculus::new(g, coeffs)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst_gap = f64::INFINITY;
    for _ in 0..trials {
        let x = random_admissible(&mut rng, g);
        let y = random_admissible(&mut rng, g);
        let mid = x.combine(&y, 0.5, 0.5)?;
        let gap = calc.evaluate_f(&mid)? - 0.5 * calc.evaluate_f(&x)? - 0.5 * calc.evaluate_f(&y)?;
        worst_gap = worst_gap.min(gap);
    }
    Ok(ConcavityCheck {
        trials,
        seed,
        worst_gap,
        pass: worst_gap >= -CONCAVITY_TOL,
    })
}

/// Quadratures `int S_{n-a}(lambda) / C(n,a)` for `a = 0..=n`.
pub fn form_integrals(x: &HermitianField, g: &HermitianMatrix, coeffs: &CoefficientSet) -> Result<Vec<f64>> {
    let calc = OperatorCalculus::new(g, coeffs)?;
    let n = calc.n();
    let grid = x.grid();
    let mut sums = vec![0.0; n + 1];
    for p in 0..x.len() {
        let eig = calc.eigen(&x.at(p))?;
        for (a, s) in sums.iter_mut().enumerate() {
            *s += elementary_symmetric(&eig.lambda, n - a)? / coeffs.binomial(a);
        }
    }
    Ok(sums.into_iter().map(|s| s * grid.cell_volume()).collect())
}

/// `int chi^n / sum_a c_a int chi^{n-a} ^ omega^a` on the grid.
pub fn compatibility_constant(data: &ProblemData) -> Result<f64> {
    if !data.is_kahler() {
        return Err(Error::NotKahler);
    }
    let chi = data.chi();
    for p in 0..chi.len() {
        data.calculus().eigen(&chi.at(p)).and_then(|e| {
            let min = e.lambda.iter().copied().fold(f64::INFINITY, f64::min);
            let max = e.lambda.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if min > crate::symfunc::ADMISSIBLE_RATIO * max {
                Ok(())
            } else {
                Err(Error::NotAdmissible {
                    point: Some(p),
                    min_eigenvalue: min,
                })
            }
        })?;
    }
    let ints = form_integrals(chi, data.g(), data.coeffs())?;
    let coeffs = data.coeffs();
    let denom: f64 = (1..=coeffs.n()).map(|a| coeffs.coefficient(a) * ints[a]).sum();
    Ok(ints[0] / denom)
}

pub fn estimate_monitor(u: &ScalarField, data: &ProblemData) -> Result<EstimateMonitor> {
    let x = assemble_x(u, data)?;
    let metric: &Metric = data.metric();
    let grad = gradient_norm_sq_with(data.stencil(), u, metric);
    let sup_w = (0..x.len())
        .map(|p| metric.trace_of(x.raw(p)))
        .fold(f64::NEG_INFINITY, f64::max);
    let (sup, inf) = sup_and_inf(u);
    let sup_grad_sq = grad.values().iter().copied().fold(0.0, f64::max);
    let growth = (sup - inf).exp();
    Ok(EstimateMonitor {
        sup_abs_u: u.max_abs(),
        sup_grad_sq,
        sup_w,
        laplacian_ratio: sup_w / growth,
        gradient_ratio: sup_grad_sq / growth,
    })
}

/// Full report on a solved state `(u, b)`.
pub fn verify_solved_state(u: &ScalarField, b: f64, data: &ProblemData) -> Result<DiagnosticsReport> {
    let x = assemble_x(u, data)?;
    let mut report = verify_pointwise_identities(&x, data.g(), data.coeffs())?;

    let coeffs = data.coeffs();
    let n = coeffs.n();
    let mut solved = Tracker::default();
    for p in 0..x.len() {
        let eig = data.calculus().eigen(&x.at(p))?;
        let total: f64 = (1..=n)
            .map(|a| Ok(coeffs.weight(a) * elementary_symmetric(&eig.lambda_inv, a)?))
            .sum::<Result<f64>>()?;
        solved.equal(p, total, (-b).exp() / data.psi().values()[p]);
    }
    let solved = solved.finish();
    report.solved_equation = Some(IdentityCheck {
        pass: solved.max_violation <= SOLVED_TOL,
        ..solved
    });

    let (min_margin, argmin_point) = cone_margins(data, data.psi())?;
    report.cone = Some(ConeReport {
        min_margin,
        argmin_point,
    });
    if data.is_kahler() {
        let value = form_integrals(&x, data.g(), coeffs)?;
        let reference = form_integrals(data.chi(), data.g(), coeffs)?;
        report.integrals = Some(
            value
                .iter()
                .zip(&reference)
                .enumerate()
                .map(|(alpha, (&v, &r))| IntegralEntry {
                    alpha,
                    value: v,
                    reference: r,
                    deviation: v - r,
                })
                .collect(),
        );
    }
    report.estimates = Some(estimate_monitor(u, data)?);
    Ok(report)
}

/// `int f` over the grid, re-exported for report consumers.
pub fn quadrature(f: &ScalarField) -> f64 {
    integral(f)
}
