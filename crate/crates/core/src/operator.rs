//! Discrete nonlinear operator on the torus.
//!
//! The equation is posed in concave form: with `X = chi + i dd̄ u` the
//! residual is `r = F(X) + e^{-b} / psi_t`, which vanishes exactly when
//! `X^n = e^b psi_t sum_a c_a X^{n-a} ^ omega^a` pointwise.

use std::sync::Arc;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::grid::{x_axis, y_axis, HermitianField, ScalarField, Stencil, TorusGrid};
use crate::symfunc::{
    linearization_matrix, spectrum, CoefficientSet, HermitianMatrix, Metric, OperatorCalculus, MAX_DIM,
};

/// Numeric thickness of the strict cone inequality, relative to `1/psi`.
pub const CONE_TOL: f64 = 1e-12;

/// `chi = chi0 + i dd̄ rho` with constant `chi0`.
#[derive(Clone, Debug)]
pub struct KahlerForm {
    pub chi0: HermitianMatrix,
    pub potential: Option<ScalarField>,
}

#[derive(Clone, Debug)]
pub struct ProblemData {
    grid: TorusGrid,
    stencil: Arc<Stencil>,
    calculus: OperatorCalculus,
    chi: HermitianField,
    psi: ScalarField,
    kahler: Option<KahlerForm>,
}

impl ProblemData {
    /// General (possibly non-closed) `chi` field.
    pub fn new(
        grid: &TorusGrid,
        g: &HermitianMatrix,
        chi: HermitianField,
        psi: ScalarField,
        coeffs: &CoefficientSet,
    ) -> Result<Self> {
        let data = Self::unchecked(grid, g, chi, psi, coeffs, None)?;
        data.validate()?;
        Ok(data)
    }

    /// Kahler data `chi = chi0 + i dd̄ rho`.
    pub fn kahler(
        grid: &TorusGrid,
        g: &HermitianMatrix,
        chi0: &HermitianMatrix,
        potential: Option<ScalarField>,
        psi: ScalarField,
        coeffs: &CoefficientSet,
    ) -> Result<Self> {
        let data = Self::kahler_unchecked(grid, g, chi0, potential, psi, coeffs)?;
        data.validate()?;
        Ok(data)
    }

    /// Builds Kahler data without checking positivity or the cone condition.
    pub fn kahler_unchecked(
        grid: &TorusGrid,
        g: &HermitianMatrix,
        chi0: &HermitianMatrix,
        potential: Option<ScalarField>,
        psi: ScalarField,
        coeffs: &CoefficientSet,
    ) -> Result<Self> {
        let mut chi = HermitianField::constant(grid, chi0)?;
        if let Some(rho) = &potential {
            if rho.grid() != grid {
                return Err(Error::Shape("potential lives on a different grid".into()));
            }
            chi = chi.add(&Stencil::new(grid).complex_hessian(rho))?;
        }
        let kahler = KahlerForm {
            chi0: chi0.clone(),
            potential,
        };
        Self::unchecked(grid, g, chi, psi, coeffs, Some(kahler))
    }

    fn unchecked(
        grid: &TorusGrid,
        g: &HermitianMatrix,
        chi: HermitianField,
        psi: ScalarField,
        coeffs: &CoefficientSet,
        kahler: Option<KahlerForm>,
    ) -> Result<Self> {
        if chi.grid() != grid || psi.grid() != grid {
            return Err(Error::Shape("chi and psi must live on the problem grid".into()));
        }
        if coeffs.n() != grid.n() {
            return Err(Error::Shape(format!(
                "coefficient set has n = {} but grid has complex dimension {}",
                coeffs.n(),
                grid.n()
            )));
        }
        let calculus = OperatorCalculus::with_metric(Metric::new(g)?, coeffs)?;
        Ok(ProblemData {
            grid: grid.clone(),
            stencil: Arc::new(Stencil::new(grid)),
            calculus,
            chi,
            psi,
            kahler,
        })
    }

    /// Positive density, admissible `chi`, and the strict cone inequality at
    /// every point.
    pub fn validate(&self) -> Result<()> {
        check_density(&self.psi)?;
        let (margin, point) = cone_margins(self, &self.psi)?;
        let psi = self.psi.values()[point];
        if !(margin > CONE_TOL / psi) {
            return Err(Error::ConeViolated { point, margin });
        }
        Ok(())
    }

    /// Same geometry with a different target density.
    pub fn with_psi(&self, psi: ScalarField) -> Result<Self> {
        let data = self.with_psi_unchecked(psi)?;
        data.validate()?;
        Ok(data)
    }

    pub fn with_psi_unchecked(&self, psi: ScalarField) -> Result<Self> {
        if psi.grid() != &self.grid {
            return Err(Error::Shape("psi lives on a different grid".into()));
        }
        Ok(ProblemData {
            psi,
            ..self.clone()
        })
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn stencil(&self) -> &Stencil {
        &self.stencil
    }

    pub fn calculus(&self) -> &OperatorCalculus {
        &self.calculus
    }

    pub fn metric(&self) -> &Metric {
        self.calculus.metric()
    }

    pub fn g(&self) -> &HermitianMatrix {
        self.calculus.metric().matrix()
    }

    pub fn coeffs(&self) -> &CoefficientSet {
        self.calculus.coeffs()
    }

    pub fn chi(&self) -> &HermitianField {
        &self.chi
    }

    pub fn psi(&self) -> &ScalarField {
        &self.psi
    }

    pub fn kahler_form(&self) -> Option<&KahlerForm> {
        self.kahler.as_ref()
    }

    pub fn is_kahler(&self) -> bool {
        self.kahler.is_some()
    }

    fn check_field(&self, u: &ScalarField) -> Result<()> {
        if u.grid() != &self.grid {
            return Err(Error::Shape("field lives on a different grid".into()));
        }
        Ok(())
    }

    /// `X(p) = chi(p) + H(u)(p)` written into `out`.
    #[inline]
    pub(crate) fn x_at(&self, u: &[f64], p: usize, d: &mut [f64], out: &mut [C64]) {
        let nn = self.grid.n() * self.grid.n();
        self.stencil.second_derivatives(u, p, d);
        self.stencil.hessian_from_second(d, &mut out[..nn]);
        for (o, c) in out[..nn].iter_mut().zip(self.chi.raw(p)) {
            *o += c;
        }
    }
}

pub(crate) fn check_density(psi: &ScalarField) -> Result<()> {
    if let Some((point, &value)) = psi
        .values()
        .iter()
        .enumerate()
        .find(|(_, v)| !(**v > 0.0) || !v.is_finite())
    {
        return Err(Error::NonPositiveDensity { point, value });
    }
    Ok(())
}

/// Smallest minor cone margin of `chi` against `density` over the grid, and
/// where it occurs.
pub fn cone_margins(data: &ProblemData, density: &ScalarField) -> Result<(f64, usize)> {
    check_density(density)?;
    let mut worst = (f64::INFINITY, 0);
    for p in 0..data.grid.len() {
        let sp = spectrum(data.chi.raw(p), data.metric(), false);
        if !sp.is_admissible() {
            return Err(Error::NotAdmissible {
                point: Some(p),
                min_eigenvalue: sp.min(),
            });
        }
        let m = data.calculus.cone_margin_of(&sp, density.values()[p]);
        if m < worst.0 {
            worst = (m, p);
        }
    }
    Ok(worst)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Residual {
    pub field: ScalarField,
    pub norm_inf: f64,
    pub norm_l2: f64,
}

impl Residual {
    pub fn new(field: ScalarField) -> Self {
        let norm_inf = field.max_abs();
        let norm_l2 = (field.grid().cell_volume() * field.values().iter().map(|v| v * v).sum::<f64>()).sqrt();
        Residual {
            field,
            norm_inf,
            norm_l2,
        }
    }
}

pub fn assemble_x(u: &ScalarField, data: &ProblemData) -> Result<HermitianField> {
    data.check_field(u)?;
    let n = data.grid.n();
    let nn = n * n;
    let mut d = vec![0.0; data.stencil.pairs().len()];
    let mut values = vec![C64::new(0.0, 0.0); data.grid.len() * nn];
    for p in 0..data.grid.len() {
        data.x_at(u.values(), p, &mut d, &mut values[p * nn..(p + 1) * nn]);
    }
    Ok(HermitianField::from_raw(data.grid.clone(), values))
}

/// One pass computing the residual (if admissible everywhere) together with
/// the admissibility margin.
pub(crate) struct Sweep {
    pub residual: Option<Residual>,
    pub margin: f64,
    pub worst_point: usize,
}

pub(crate) fn sweep(u: &ScalarField, b: f64, psi_t: &ScalarField, data: &ProblemData) -> Sweep {
    let grid = &data.grid;
    let mut d = vec![0.0; data.stencil.pairs().len()];
    let mut x = [C64::new(0.0, 0.0); MAX_DIM * MAX_DIM];
    let scale = (-b).exp();
    let mut r = vec![0.0; grid.len()];
    let mut margin = f64::INFINITY;
    let mut worst_point = 0;
    let mut admissible = true;
    for p in 0..grid.len() {
        data.x_at(u.values(), p, &mut d, &mut x);
        let sp = spectrum(&x, data.metric(), false);
        if sp.min() < margin {
            margin = sp.min();
            worst_point = p;
        }
        if !sp.is_admissible() {
            admissible = false;
            continue;
        }
        if admissible {
            r[p] = data.calculus.f_of(&sp) + scale / psi_t.values()[p];
        }
    }
    Sweep {
        residual: admissible.then(|| Residual::new(ScalarField::from_vec_unchecked(grid.clone(), r))),
        margin,
        worst_point,
    }
}

pub fn residual(u: &ScalarField, b: f64, psi_t: &ScalarField, data: &ProblemData) -> Result<Residual> {
    data.check_field(u)?;
    data.check_field(psi_t)?;
    let s = sweep(u, b, psi_t, data);
    s.residual.ok_or(Error::NotAdmissible {
        point: Some(s.worst_point),
        min_eigenvalue: s.margin,
    })
}

/// Smallest generalized eigenvalue of `X(u)` over the grid.
///
/// Panics if `u` does not live on the problem grid.
pub fn admissibility_margin(u: &ScalarField, data: &ProblemData) -> f64 {
    assert_eq!(u.grid(), &data.grid, "field lives on a different grid");
    let mut d = vec![0.0; data.stencil.pairs().len()];
    let mut x = [C64::new(0.0, 0.0); MAX_DIM * MAX_DIM];
    let mut margin = f64::INFINITY;
    for p in 0..data.grid.len() {
        data.x_at(u.values(), p, &mut d, &mut x);
        margin = margin.min(spectrum(&x, data.metric(), false).min());
    }
    margin
}

/// Pointwise density of `X_v = chi + i dd̄ v`.
pub fn reference_density_phi(data: &ProblemData, v: &ScalarField) -> Result<ScalarField> {
    data.check_field(v)?;
    let mut d = vec![0.0; data.stencil.pairs().len()];
    let mut x = [C64::new(0.0, 0.0); MAX_DIM * MAX_DIM];
    let mut out = vec![0.0; data.grid.len()];
    for (p, o) in out.iter_mut().enumerate() {
        data.x_at(v.values(), p, &mut d, &mut x);
        let sp = spectrum(&x, data.metric(), false);
        if !sp.is_admissible() {
            return Err(Error::NotAdmissible {
                point: Some(p),
                min_eigenvalue: sp.min(),
            });
        }
        *o = data.calculus.density_of(&sp);
    }
    ScalarField::new(data.grid.clone(), out)
}

/// Frozen linearization of the residual at `(u, b)`, stored as one real
/// coefficient per second-derivative stencil and point.
pub struct Linearization<'a> {
    data: &'a ProblemData,
    weights: Vec<f64>,
    b_column: Vec<f64>,
    diagonal: Vec<f64>,
}

impl<'a> Linearization<'a> {
    pub fn new(u: &ScalarField, b: f64, psi_t: &ScalarField, data: &'a ProblemData) -> Result<Self> {
        data.check_field(u)?;
        data.check_field(psi_t)?;
        let grid = &data.grid;
        let n = grid.n();
        let stencil = &data.stencil;
        let npairs = stencil.pairs().len();
        let h2 = grid.spacing() * grid.spacing();
        let scale = (-b).exp();

        let mut d = vec![0.0; npairs];
        let mut x = [C64::new(0.0, 0.0); MAX_DIM * MAX_DIM];
        let mut f = [0.0; MAX_DIM];
        let mut fij = [C64::new(0.0, 0.0); MAX_DIM * MAX_DIM];
        let mut weights = vec![0.0; grid.len() * npairs];
        let mut diagonal = vec![0.0; grid.len()];
        let mut b_column = vec![0.0; grid.len()];

        for p in 0..grid.len() {
            data.x_at(u.values(), p, &mut d, &mut x);
            let sp = spectrum(&x, data.metric(), true);
            if !sp.is_admissible() {
                return Err(Error::NotAdmissible {
                    point: Some(p),
                    min_eigenvalue: sp.min(),
                });
            }
            data.calculus.linearization_weights(&sp, &mut f);
            linearization_matrix(&sp, &f, &mut fij);

            // Re sum_ij F^{ij} H_ij with H_ij = (R_ij + i I_ij) / 4,
            // R = D[xi,xj] + D[yi,yj], I = D[xi,yj] - D[yi,xj]
            let k = &mut weights[p * npairs..(p + 1) * npairs];
            for i in 0..n {
                for j in 0..n {
                    let z = fij[i * n + j];
                    k[stencil.pair_index(x_axis(i), x_axis(j))] += 0.25 * z.re;
                    k[stencil.pair_index(y_axis(i), y_axis(j))] += 0.25 * z.re;
                    k[stencil.pair_index(x_axis(i), y_axis(j))] -= 0.25 * z.im;
                    k[stencil.pair_index(y_axis(i), x_axis(j))] += 0.25 * z.im;
                }
            }
            diagonal[p] = (0..grid.axes())
                .map(|a| -2.0 / h2 * k[stencil.pair_index(a, a)])
                .sum();
            b_column[p] = -scale / psi_t.values()[p];
        }
        Ok(Linearization {
            data,
            weights,
            b_column,
            diagonal,
        })
    }

    pub fn len(&self) -> usize {
        self.diagonal.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diagonal.is_empty()
    }

    /// `out = L v + (dr/db) db`.
    pub fn apply(&self, v: &[f64], db: f64, out: &mut [f64]) {
        let stencil = &self.data.stencil;
        let npairs = stencil.pairs().len();
        let mut d = vec![0.0; npairs];
        for (p, o) in out.iter_mut().enumerate() {
            stencil.second_derivatives(v, p, &mut d);
            let k = &self.weights[p * npairs..(p + 1) * npairs];
            let lv: f64 = k.iter().zip(&d).map(|(a, b)| a * b).sum();
            *o = lv + self.b_column[p] * db;
        }
    }

    /// Diagonal of the `u`-block.
    pub fn diagonal(&self) -> &[f64] {
        &self.diagonal
    }

    /// `dr/db = -e^{-b} / psi_t`.
    pub fn b_column(&self) -> &[f64] {
        &self.b_column
    }
}

pub fn apply_linearization(
    u: &ScalarField,
    b: f64,
    psi_t: &ScalarField,
    v: &ScalarField,
    db: f64,
    data: &ProblemData,
) -> Result<ScalarField> {
    data.check_field(v)?;
    let lin = Linearization::new(u, b, psi_t, data)?;
    let mut out = vec![0.0; data.grid.len()];
    lin.apply(v.values(), db, &mut out);
    ScalarField::new(data.grid.clone(), out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::complex_hessian;
    use std::f64::consts::PI;

    fn setup(chi_scale: f64, psi: f64, coeffs: CoefficientSet, points: usize) -> ProblemData {
        let grid = TorusGrid::new(2, points).unwrap();
        let chi0 = HermitianMatrix::scaled_identity(2, chi_scale);
        ProblemData::kahler(
            &grid,
            &HermitianMatrix::identity(2),
            &chi0,
            None,
            ScalarField::constant(&grid, psi),
            &coeffs,
        )
        .unwrap()
    }

    #[test]
    fn assemble_x_with_zero_potential_is_chi() {
        let data = setup(2.0, 2.0, CoefficientSet::donaldson(2).unwrap(), 4);
        let x = assemble_x(&ScalarField::zeros(data.grid()), &data).unwrap();
        assert_eq!(&x, data.chi());
    }

    #[test]
    fn assemble_x_adds_discrete_hessian() {
        let data = setup(2.0, 2.0, CoefficientSet::donaldson(2).unwrap(), 16);
        let eps = 0.01;
        let u = ScalarField::from_fn(data.grid(), |x| eps * (2.0 * PI * x[0]).cos()).unwrap();
        let x = assemble_x(&u, &data).unwrap();
        let h = data.grid().spacing();
        for p in 0..data.grid().len() {
            let analytic = -PI * PI * eps * (2.0 * PI * data.grid().coordinate(p, 0)).cos();
            let x11 = x.raw(p)[0].re;
            assert!((x11 - 2.0 - analytic).abs() < 2.0 * eps * PI.powi(4) * h * h);
        }
        let v = ScalarField::from_fn(data.grid(), |x| (2.0 * PI * x[3]).sin()).unwrap();
        let uv = u.zip_with(&v, |a, b| a + b).unwrap();
        let diff = assemble_x(&uv, &data).unwrap();
        let hv = complex_hessian(&v);
        for (i, z) in diff.raw_values().iter().enumerate() {
            let expect = x.raw_values()[i] + hv.raw_values()[i];
            assert!((z - expect).norm() < 1e-12);
        }
    }

    #[test]
    fn residual_examples() {
        let data = setup(2.0, 2.0, CoefficientSet::donaldson(2).unwrap(), 4);
        let zero = ScalarField::zeros(data.grid());
        let r = residual(&zero, 0.0, data.psi(), &data).unwrap();
        assert!(r.norm_inf < 1e-15);
        let r = residual(&zero, 2f64.ln(), data.psi(), &data).unwrap();
        assert!(r.field.values().iter().all(|v| (v + 0.25).abs() < 1e-15));
        assert!((r.norm_l2 - 0.25).abs() < 1e-14);
    }

    #[test]
    fn residual_rejects_non_admissible_state() {
        let data = setup(1.0, 1.0, CoefficientSet::donaldson(2).unwrap(), 8);
        let u = ScalarField::from_fn(data.grid(), |x| 0.2 * (2.0 * PI * x[0]).cos()).unwrap();
        assert!(admissibility_margin(&u, &data) <= 0.0);
        match residual(&u, 0.0, data.psi(), &data) {
            Err(Error::NotAdmissible { point: Some(_), min_eigenvalue }) => assert!(min_eigenvalue <= 0.0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn admissibility_margin_examples() {
        let data = setup(2.0, 2.0, CoefficientSet::donaldson(2).unwrap(), 4);
        assert_eq!(admissibility_margin(&ScalarField::zeros(data.grid()), &data), 2.0);
        let data = setup(1.0, 1.0, CoefficientSet::donaldson(2).unwrap(), 32);
        let u = ScalarField::from_fn(data.grid(), |x| (2.0 * PI * x[0]).cos() / (2.0 * PI * PI)).unwrap();
        let m = admissibility_margin(&u, &data);
        assert!((m - 0.5).abs() < 0.01, "{m}");
    }

    #[test]
    fn phi_examples() {
        let data = setup(2.0, 2.0, CoefficientSet::donaldson(2).unwrap(), 4);
        let phi = reference_density_phi(&data, &ScalarField::zeros(data.grid())).unwrap();
        assert!(phi.values().iter().all(|v| (v - 2.0).abs() < 1e-15));
        let grid = TorusGrid::new(2, 4).unwrap();
        let ones = CoefficientSet::all_ones(2).unwrap();
        // psi chosen inside the cone: margin = 1/psi - 1/2 > 0
        let data = ProblemData::kahler(
            &grid,
            &HermitianMatrix::identity(2),
            &HermitianMatrix::identity(2),
            None,
            ScalarField::constant(&grid, 1.0),
            &ones,
        )
        .unwrap();
        let phi = reference_density_phi(&data, &ScalarField::zeros(&grid)).unwrap();
        assert!(phi.values().iter().all(|v| (v - 0.5).abs() < 1e-15));
    }

    #[test]
    fn linearization_examples() {
        let data = setup(1.0, 1.0, CoefficientSet::donaldson(2).unwrap(), 32);
        let zero = ScalarField::zeros(data.grid());
        let v = ScalarField::from_fn(data.grid(), |x| (2.0 * PI * x[0]).cos()).unwrap();
        let lv = apply_linearization(&zero, 0.0, data.psi(), &v, 0.0, &data).unwrap();
        for p in 0..data.grid().len() {
            let expect = -0.5 * PI * PI * (2.0 * PI * data.grid().coordinate(p, 0)).cos();
            assert!((lv.values()[p] - expect).abs() < 0.02);
        }
        let two = ScalarField::constant(data.grid(), 2.0);
        let lv = apply_linearization(&zero, 0.0, &two, &zero, 1.0, &data).unwrap();
        assert!(lv.values().iter().all(|v| (v + 0.5).abs() < 1e-15));
    }

    #[test]
    fn cone_gatekeeping_reports_boundary_margin() {
        let grid = TorusGrid::new(2, 4).unwrap();
        let err = ProblemData::kahler(
            &grid,
            &HermitianMatrix::identity(2),
            &HermitianMatrix::identity(2),
            None,
            ScalarField::constant(&grid, 2.0),
            &CoefficientSet::donaldson(2).unwrap(),
        )
        .unwrap_err();
        match err {
            Error::ConeViolated { margin, .. } => assert!(margin.abs() < 1e-12),
            other => panic!("unexpected {other:?}"),
        }
    }
}
