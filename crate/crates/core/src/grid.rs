//! Periodic discretization of the unit flat torus `C^n / Z^{2n}`.
//!
//! Real axes are ordered `(x1, y1, x2, y2, ..., xn, yn)` and values are
//! stored row-major over them (the last axis varies fastest).

use std::io::{Read, Write};

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::symfunc::{HermitianMatrix, Metric, MAX_DIM};

/// Upper bound on the number of grid points (neighbor tables use `u32`).
pub const MAX_POINTS: usize = 1 << 28;

#[derive(Clone, Debug, PartialEq)]
pub struct TorusGrid {
    n: usize,
    points_per_axis: usize,
    h: f64,
    len: usize,
    strides: Vec<usize>,
}

impl TorusGrid {
    pub fn new(n: usize, points_per_axis: usize) -> Result<Self> {
        if n == 0 || n > MAX_DIM {
            return Err(Error::InvalidGrid(format!(
                "complex dimension {n} outside 1..={MAX_DIM}"
            )));
        }
        if points_per_axis < 4 || !points_per_axis.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!(
                "points per axis must be even and at least 4, got {points_per_axis}"
            )));
        }
        let axes = 2 * n;
        let mut len: usize = 1;
        for _ in 0..axes {
            len = len
                .checked_mul(points_per_axis)
                .filter(|&l| l <= MAX_POINTS)
                .ok_or_else(|| {
                    Error::InvalidGrid(format!(
                        "{points_per_axis}^{axes} points exceeds the supported maximum"
                    ))
                })?;
        }
        let mut strides = vec![1usize; axes];
        for a in (0..axes - 1).rev() {
            strides[a] = strides[a + 1] * points_per_axis;
        }
        Ok(TorusGrid {
            n,
            points_per_axis,
            h: 1.0 / points_per_axis as f64,
            len,
            strides,
        })
    }

    /// Complex dimension.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn points_per_axis(&self) -> usize {
        self.points_per_axis
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn axes(&self) -> usize {
        2 * self.n
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Quadrature weight `h^{2n}`.
    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.axes() as i32)
    }

    pub fn index_along(&self, p: usize, axis: usize) -> usize {
        (p / self.strides[axis]) % self.points_per_axis
    }

    pub fn coordinate(&self, p: usize, axis: usize) -> f64 {
        self.index_along(p, axis) as f64 * self.h
    }

    pub fn coordinates(&self, p: usize) -> Vec<f64> {
        (0..self.axes()).map(|a| self.coordinate(p, a)).collect()
    }

    /// Periodic neighbor one step forward (`forward = true`) or back.
    pub fn shift(&self, p: usize, axis: usize, forward: bool) -> usize {
        let s = self.strides[axis];
        let i = self.index_along(p, axis);
        let last = self.points_per_axis - 1;
        match (forward, i) {
            (true, i) if i == last => p - last * s,
            (true, _) => p + s,
            (false, 0) => p + last * s,
            (false, _) => p - s,
        }
    }
}

/// Axis of `x^i` (0-based `i`).
pub fn x_axis(i: usize) -> usize {
    2 * i
}

/// Axis of `y^i` (0-based `i`).
pub fn y_axis(i: usize) -> usize {
    2 * i + 1
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    grid: TorusGrid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: TorusGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Shape(format!(
                "field has {} values but grid has {} points",
                values.len(),
                grid.len()
            )));
        }
        if let Some(p) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Shape(format!("non-finite value at point {p}")));
        }
        Ok(ScalarField { grid, values })
    }

    pub(crate) fn from_vec_unchecked(grid: TorusGrid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        ScalarField { grid, values }
    }

    pub fn constant(grid: &TorusGrid, value: f64) -> Self {
        ScalarField {
            grid: grid.clone(),
            values: vec![value; grid.len()],
        }
    }

    pub fn zeros(grid: &TorusGrid) -> Self {
        Self::constant(grid, 0.0)
    }

    /// Samples `f` at the grid coordinates.
    pub fn from_fn(grid: &TorusGrid, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let mut coords = vec![0.0; grid.axes()];
        let values = (0..grid.len())
            .map(|p| {
                for (a, c) in coords.iter_mut().enumerate() {
                    *c = grid.coordinate(p, a);
                }
                f(&coords)
            })
            .collect();
        Self::new(grid.clone(), values)
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.grid.clone(), self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_with(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::Shape("fields live on different grids".into()));
        }
        Self::new(
            self.grid.clone(),
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        )
    }

    pub fn shifted(&self, c: f64) -> Self {
        ScalarField {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v + c).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HermitianField {
    grid: TorusGrid,
    values: Vec<C64>,
}

impl HermitianField {
    pub fn constant(grid: &TorusGrid, m: &HermitianMatrix) -> Result<Self> {
        if m.dim() != grid.n() {
            return Err(Error::Shape(format!(
                "matrix dimension {} does not match grid dimension {}",
                m.dim(),
                grid.n()
            )));
        }
        let mut values = Vec::with_capacity(grid.len() * m.entries().len());
        for _ in 0..grid.len() {
            values.extend_from_slice(m.entries());
        }
        Ok(HermitianField {
            grid: grid.clone(),
            values,
        })
    }

    pub fn from_matrices(grid: &TorusGrid, matrices: &[HermitianMatrix]) -> Result<Self> {
        if matrices.len() != grid.len() {
            return Err(Error::Shape("one matrix per grid point expected".into()));
        }
        let n = grid.n();
        let mut values = Vec::with_capacity(grid.len() * n * n);
        for m in matrices {
            if m.dim() != n {
                return Err(Error::Shape("matrix dimension mismatch".into()));
            }
            values.extend_from_slice(m.entries());
        }
        Ok(HermitianField {
            grid: grid.clone(),
            values,
        })
    }

    pub(crate) fn from_raw(grid: TorusGrid, values: Vec<C64>) -> Self {
        debug_assert_eq!(values.len(), grid.len() * grid.n() * grid.n());
        HermitianField { grid, values }
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// Row-major entries of the matrix at point `p`.
    pub fn raw(&self, p: usize) -> &[C64] {
        let nn = self.grid.n() * self.grid.n();
        &self.values[p * nn..(p + 1) * nn]
    }

    pub fn raw_values(&self) -> &[C64] {
        &self.values
    }

    pub fn at(&self, p: usize) -> HermitianMatrix {
        HermitianMatrix::from_raw(self.grid.n(), self.raw(p))
    }

    pub fn add(&self, other: &HermitianField) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::Shape("fields live on different grids".into()));
        }
        Ok(HermitianField {
            grid: self.grid.clone(),
            values: self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect(),
        })
    }

    /// Pointwise trace with respect to the identity (`sum_i H_ii`).
    pub fn trace(&self) -> ScalarField {
        let n = self.grid.n();
        let values = (0..self.len())
            .map(|p| {
                let m = self.raw(p);
                (0..n).map(|i| m[i * n + i].re).sum()
            })
            .collect();
        ScalarField::from_vec_unchecked(self.grid.clone(), values)
    }
}

/// Neighbor table plus the finite-difference kernels shared by the complex
/// Hessian and the linearized operator.
#[derive(Clone, Debug)]
pub struct Stencil {
    grid: TorusGrid,
    table: Vec<u32>,
    pairs: Vec<(usize, usize)>,
    pair_of: [[usize; 2 * MAX_DIM]; 2 * MAX_DIM],
}

impl Stencil {
    pub fn new(grid: &TorusGrid) -> Self {
        let axes = grid.axes();
        let mut table = vec![0u32; grid.len() * 2 * axes];
        for p in 0..grid.len() {
            for a in 0..axes {
                table[p * 2 * axes + 2 * a] = grid.shift(p, a, true) as u32;
                table[p * 2 * axes + 2 * a + 1] = grid.shift(p, a, false) as u32;
            }
        }
        let mut pairs = Vec::new();
        let mut pair_of = [[0usize; 2 * MAX_DIM]; 2 * MAX_DIM];
        for a in 0..axes {
            for b in a..axes {
                pair_of[a][b] = pairs.len();
                pair_of[b][a] = pairs.len();
                pairs.push((a, b));
            }
        }
        Stencil {
            grid: grid.clone(),
            table,
            pairs,
            pair_of,
        }
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    /// Unordered axis pairs `(a, b)` with `a <= b`.
    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn pair_index(&self, a: usize, b: usize) -> usize {
        self.pair_of[a][b]
    }

    #[inline]
    pub fn plus(&self, p: usize, axis: usize) -> usize {
        self.table[p * 2 * self.grid.axes() + 2 * axis] as usize
    }

    #[inline]
    pub fn minus(&self, p: usize, axis: usize) -> usize {
        self.table[p * 2 * self.grid.axes() + 2 * axis + 1] as usize
    }

    /// Second-order central second derivatives at `p`, one per pair.
    /// Diagonal pairs use the 3-point stencil, mixed pairs the 4-point cross.
    #[inline]
    pub fn second_derivatives(&self, u: &[f64], p: usize, out: &mut [f64]) {
        let h2 = self.grid.h * self.grid.h;
        for (k, &(a, b)) in self.pairs.iter().enumerate() {
            out[k] = if a == b {
                (u[self.plus(p, a)] - 2.0 * u[p] + u[self.minus(p, a)]) / h2
            } else {
                let pa = self.plus(p, a);
                let ma = self.minus(p, a);
                (u[self.plus(pa, b)] - u[self.minus(pa, b)] - u[self.plus(ma, b)]
                    + u[self.minus(ma, b)])
                    / (4.0 * h2)
            };
        }
    }

    /// Centered first derivatives at `p`, one per axis.
    #[inline]
    pub fn first_derivatives(&self, u: &[f64], p: usize, out: &mut [f64]) {
        let h = self.grid.h;
        for (a, o) in out.iter_mut().enumerate().take(self.grid.axes()) {
            *o = (u[self.plus(p, a)] - u[self.minus(p, a)]) / (2.0 * h);
        }
    }

    /// Wirtinger combination `u_{i jbar} = (u_{xi xj} + u_{yi yj} + i (u_{xi yj} - u_{yi xj})) / 4`.
    pub fn hessian_from_second(&self, d: &[f64], out: &mut [C64]) {
        let n = self.grid.n();
        for i in 0..n {
            for j in 0..n {
                let re = d[self.pair_index(x_axis(i), x_axis(j))]
                    + d[self.pair_index(y_axis(i), y_axis(j))];
                let im = if i == j {
                    0.0
                } else {
                    d[self.pair_index(x_axis(i), y_axis(j))]
                        - d[self.pair_index(y_axis(i), x_axis(j))]
                };
                out[i * n + j] = C64::new(0.25 * re, 0.25 * im);
            }
        }
    }

    pub fn complex_hessian(&self, u: &ScalarField) -> HermitianField {
        let n = self.grid.n();
        let nn = n * n;
        let mut d = vec![0.0; self.pairs.len()];
        let mut values = vec![C64::new(0.0, 0.0); self.grid.len() * nn];
        for p in 0..self.grid.len() {
            self.second_derivatives(u.values(), p, &mut d);
            self.hessian_from_second(&d, &mut values[p * nn..(p + 1) * nn]);
        }
        HermitianField::from_raw(self.grid.clone(), values)
    }
}

/// Discrete complex Hessian `u_{i jbar}` by central differences.
pub fn complex_hessian(u: &ScalarField) -> HermitianField {
    Stencil::new(u.grid()).complex_hessian(u)
}

/// `sum_ij g^{i jbar} u_i u_{jbar}` with `u_i = (u_{x^i} - i u_{y^i}) / 2`.
pub fn gradient_norm_sq(u: &ScalarField, g: &HermitianMatrix) -> Result<ScalarField> {
    let metric = Metric::new(g)?;
    if metric.dim() != u.grid().n() {
        return Err(Error::Shape("metric dimension does not match grid".into()));
    }
    Ok(gradient_norm_sq_with(&Stencil::new(u.grid()), u, &metric))
}

pub(crate) fn gradient_norm_sq_with(stencil: &Stencil, u: &ScalarField, metric: &Metric) -> ScalarField {
    let grid = u.grid();
    let n = grid.n();
    let ginv = metric.inverse();
    let mut d = vec![0.0; grid.axes()];
    let mut w = [C64::new(0.0, 0.0); MAX_DIM];
    let values = (0..grid.len())
        .map(|p| {
            stencil.first_derivatives(u.values(), p, &mut d);
            for i in 0..n {
                w[i] = C64::new(0.5 * d[x_axis(i)], -0.5 * d[y_axis(i)]);
            }
            // w^H g^{-1} w
            let mut s = 0.0;
            for i in 0..n {
                for j in 0..n {
                    s += (w[i].conj() * ginv[i * n + j] * w[j]).re;
                }
            }
            s
        })
        .collect();
    ScalarField::from_vec_unchecked(grid.clone(), values)
}

/// Rectangle rule `h^{2n} sum f`.
pub fn integral(f: &ScalarField) -> f64 {
    f.grid().cell_volume() * f.values().iter().sum::<f64>()
}

pub fn sup_and_inf(f: &ScalarField) -> (f64, f64) {
    f.values().iter().fold((f64::NEG_INFINITY, f64::INFINITY), |(hi, lo), &v| {
        (hi.max(v), lo.min(v))
    })
}

const MAGIC: &[u8; 4] = b"GCMA";
const VERSION: u32 = 1;
const KIND_SCALAR: u8 = 0;
const KIND_HERMITIAN: u8 = 1;

#[derive(Clone, Debug, PartialEq)]
pub enum FieldDump {
    Scalar(ScalarField),
    Hermitian(HermitianField),
}

fn write_header<W: Write>(w: &mut W, grid: &TorusGrid, kind: u8) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(grid.n() as u32).to_le_bytes())?;
    w.write_all(&(grid.points_per_axis() as u32).to_le_bytes())?;
    w.write_all(&[kind])?;
    Ok(())
}

pub fn write_scalar<W: Write>(w: &mut W, f: &ScalarField) -> Result<()> {
    write_header(w, f.grid(), KIND_SCALAR)?;
    let mut buf = Vec::with_capacity(8 * f.values().len());
    for v in f.values() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn write_hermitian<W: Write>(w: &mut W, f: &HermitianField) -> Result<()> {
    write_header(w, f.grid(), KIND_HERMITIAN)?;
    let mut buf = Vec::with_capacity(16 * f.raw_values().len());
    for z in f.raw_values() {
        buf.extend_from_slice(&z.re.to_le_bytes());
        buf.extend_from_slice(&z.im.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

pub fn read_field<R: Read>(r: &mut R) -> Result<FieldDump> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let version = read_u32(r)?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let n = read_u32(r)? as usize;
    let points = read_u32(r)? as usize;
    let mut kind = [0u8; 1];
    r.read_exact(&mut kind)?;
    let grid = TorusGrid::new(n, points)?;
    let mut body = Vec::new();
    r.read_to_end(&mut body)?;
    let floats: Vec<f64> = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    match kind[0] {
        KIND_SCALAR => {
            if body.len() != 8 * grid.len() {
                return Err(Error::Format("scalar payload has wrong length".into()));
            }
            Ok(FieldDump::Scalar(ScalarField::new(grid, floats)?))
        }
        KIND_HERMITIAN => {
            if body.len() != 16 * grid.len() * n * n {
                return Err(Error::Format("hermitian payload has wrong length".into()));
            }
            let values = floats.chunks_exact(2).map(|c| C64::new(c[0], c[1])).collect();
            Ok(FieldDump::Hermitian(HermitianField::from_raw(grid, values)))
        }
        k => Err(Error::Format(format!("unknown field kind {k}"))),
    }
}

pub fn read_scalar<R: Read>(r: &mut R) -> Result<ScalarField> {
    match read_field(r)? {
        FieldDump::Scalar(f) => Ok(f),
        FieldDump::Hermitian(_) => Err(Error::Format("expected a scalar field".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    const TAU: f64 = 2.0 * PI;

    #[test]
    fn rejects_degenerate_grids() {
        assert!(TorusGrid::new(2, 2).is_err());
        assert!(TorusGrid::new(2, 7).is_err());
        assert!(TorusGrid::new(0, 8).is_err());
        let g = TorusGrid::new(2, 4).unwrap();
        assert_eq!(g.len(), 256);
    }

    #[test]
    fn periodic_shift_wraps() {
        let g = TorusGrid::new(1, 4).unwrap();
        assert_eq!(g.shift(3, 1, true), 0);
        assert_eq!(g.shift(0, 1, false), 3);
        assert_eq!(g.shift(12, 0, true), 0);
        assert_eq!(g.shift(1, 0, false), 13);
    }

    #[test]
    fn hessian_of_single_cosine() {
        let g = TorusGrid::new(2, 16).unwrap();
        let u = ScalarField::from_fn(&g, |x| (TAU * x[0]).cos()).unwrap();
        let hess = complex_hessian(&u);
        let h = g.spacing();
        // exact discrete symbol of the 3-point stencil
        let symbol = -(2.0 - 2.0 * (TAU * h).cos()) / (h * h) / 4.0;
        for p in 0..g.len() {
            let m = hess.raw(p);
            let expect = symbol * (TAU * g.coordinate(p, 0)).cos();
            assert!((m[0].re - expect).abs() < 1e-10);
            assert!((expect - (-PI * PI * (TAU * g.coordinate(p, 0)).cos())).abs() < 0.2);
            for z in &m[1..] {
                assert!(z.norm() < 1e-10);
            }
        }
    }

    #[test]
    fn hessian_of_constant_is_zero() {
        let g = TorusGrid::new(2, 8).unwrap();
        let hess = complex_hessian(&ScalarField::constant(&g, 3.25));
        assert!(hess.raw_values().iter().all(|z| *z == C64::new(0.0, 0.0)));
    }

    #[test]
    fn integral_examples() {
        let g = TorusGrid::new(2, 8).unwrap();
        assert!((integral(&ScalarField::constant(&g, 1.0)) - 1.0).abs() < 1e-14);
        let f = ScalarField::from_fn(&g, |x| (TAU * x[0]).cos()).unwrap();
        assert!(integral(&f).abs() < 1e-14);
        let f = ScalarField::from_fn(&g, |x| (TAU * x[1]).sin().powi(2)).unwrap();
        assert!((integral(&f) - 0.5).abs() < 1e-14);
    }

    #[test]
    fn sup_inf_examples() {
        let g = TorusGrid::new(2, 8).unwrap();
        let f = ScalarField::from_fn(&g, |x| (TAU * x[0]).cos()).unwrap();
        let (hi, lo) = sup_and_inf(&f);
        assert!((hi - 1.0).abs() < 1e-15 && (lo + 1.0).abs() < 1e-15);
        assert_eq!(sup_and_inf(&ScalarField::constant(&g, 3.0)), (3.0, 3.0));
        let f = ScalarField::from_fn(&g, |x| (TAU * x[0]).sin() + 2.0).unwrap();
        let (hi, lo) = sup_and_inf(&f);
        assert!((hi - 3.0).abs() < 1e-15 && (lo - 1.0).abs() < 1e-15);
    }

    #[test]
    fn gradient_examples() {
        let g = TorusGrid::new(2, 32).unwrap();
        let id = HermitianMatrix::identity(2);
        let u = ScalarField::from_fn(&g, |x| (TAU * x[0]).cos()).unwrap();
        let gn = gradient_norm_sq(&u, &id).unwrap();
        for p in 0..g.len() {
            // central difference of cos has relative error (2 pi h)^2 / 6
            let expect = PI * PI * (TAU * g.coordinate(p, 0)).sin().powi(2);
            assert!((gn.values()[p] - expect).abs() < 2.0 * (TAU / 32.0).powi(2) / 6.0 * PI * PI);
        }
        let zero = gradient_norm_sq(&ScalarField::constant(&g, 1.0), &id).unwrap();
        assert!(zero.values().iter().all(|&v| v == 0.0));

        let u = ScalarField::from_fn(&g, |x| (TAU * x[0]).sin() + (TAU * x[3]).sin()).unwrap();
        let a = gradient_norm_sq(&u, &id).unwrap();
        let b = gradient_norm_sq(&u, &HermitianMatrix::scaled_identity(2, 2.0)).unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!((x - 2.0 * y).abs() < 1e-12);
        }
        assert!(gradient_norm_sq(&u, &HermitianMatrix::diagonal(&[1.0, -1.0])).is_err());
    }

    #[test]
    fn dump_round_trip_and_header_layout() {
        let g = TorusGrid::new(1, 4).unwrap();
        let f = ScalarField::from_fn(&g, |x| x[0] - 2.0 * x[1]).unwrap();
        let mut buf = Vec::new();
        write_scalar(&mut buf, &f).unwrap();
        assert_eq!(&buf[..4], b"GCMA");
        assert_eq!(u32::from_le_bytes(buf[4..8].try_into().unwrap()), 1);
        assert_eq!(u32::from_le_bytes(buf[8..12].try_into().unwrap()), 1);
        assert_eq!(u32::from_le_bytes(buf[12..16].try_into().unwrap()), 4);
        assert_eq!(buf[16], 0);
        assert_eq!(buf.len(), 17 + 8 * 16);
        assert_eq!(read_field(&mut buf.as_slice()).unwrap(), FieldDump::Scalar(f.clone()));

        let hess = complex_hessian(&f);
        let mut buf = Vec::new();
        write_hermitian(&mut buf, &hess).unwrap();
        assert_eq!(buf[16], 1);
        assert_eq!(buf.len(), 17 + 16 * 16);
        assert_eq!(read_field(&mut buf.as_slice()).unwrap(), FieldDump::Hermitian(hess));

        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(matches!(read_field(&mut bad.as_slice()), Err(Error::Format(_))));
        buf.truncate(40);
        assert!(read_field(&mut buf.as_slice()).is_err());
    }
}
