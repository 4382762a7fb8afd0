//! Weyl and Kohn-Nirenberg quantization of phase-space symbols on the
//! periodic grid, symbol-class certificates, composition and covariance
//! checks, and type-I Fourier integral operators.

mod certify;
mod fio;

pub use certify::{
    certify_symbol_class, compose_and_check, envelope_function, symbol_norm_minfty, CompositionCheck, Envelope,
    SymbolCertificate,
};
pub use fio::{covariance_defect, fio_type1_apply};

use std::f64::consts::PI;
use std::fmt;
use std::io::Write;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft;
use crate::grid::{fourier_multiplier, Grid1D, SampledSignal};
use crate::metaplectic::{LinearOperator, PhaseMap};
use crate::symplectic::SymplecticMatrix;

type SymbolFn = dyn Fn(f64, f64) -> Complex64 + Send + Sync;

/// Analytic symbol `sigma(x, xi)`.
#[derive(Clone)]
pub struct Symbol {
    name: String,
    f: Arc<SymbolFn>,
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Symbol({})", self.name)
    }
}

impl Symbol {
    pub fn new(name: impl Into<String>, f: impl Fn(f64, f64) -> Complex64 + Send + Sync + 'static) -> Self {
        Self { name: name.into(), f: Arc::new(f) }
    }

    pub fn real(name: impl Into<String>, f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        Self::new(name, move |x, xi| Complex64::new(f(x, xi), 0.0))
    }

    pub fn constant(c: f64) -> Self {
        Self::real(format!("{c}"), move |_, _| c)
    }

    /// `|sin x|^mu`.
    pub fn abs_sin_power(mu: f64) -> Self {
        Self::real(format!("|sin x|^{mu}"), move |x, _| x.sin().abs().powf(mu))
    }

    /// `exp(-pi ((x - x0)^2 + (xi - xi0)^2) / width^2)`.
    pub fn gaussian_bump(x0: f64, xi0: f64, width: f64) -> Self {
        Self::real(format!("bump({x0}, {xi0}, {width})"), move |x, xi| {
            (-PI * ((x - x0).powi(2) + (xi - xi0).powi(2)) / (width * width)).exp()
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, x: f64, xi: f64) -> Complex64 {
        (self.f)(x, xi)
    }

    /// `sigma o A`.
    pub fn compose(&self, a: &SymplecticMatrix) -> Symbol {
        let (p, q, r, s) = a.entries();
        let f = self.f.clone();
        Symbol { name: format!("{} o A", self.name), f: Arc::new(move |x, xi| f(p * x + q * xi, r * x + s * xi)) }
    }

    pub fn conj(&self) -> Symbol {
        let f = self.f.clone();
        Symbol { name: format!("conj({})", self.name), f: Arc::new(move |x, xi| f(x, xi).conj()) }
    }

    pub fn sample(&self, grid: Grid1D) -> SymbolGrid {
        SymbolGrid::from_symbol(self, grid)
    }
}

/// Serializable symbol descriptions for configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SymbolSpec {
    Constant { value: f64 },
    AbsSinPower { mu: f64 },
    GaussianBump { x0: f64, xi0: f64, width: f64 },
}

impl SymbolSpec {
    pub fn build(&self) -> Symbol {
        match *self {
            SymbolSpec::Constant { value } => Symbol::constant(value),
            SymbolSpec::AbsSinPower { mu } => Symbol::abs_sin_power(mu),
            SymbolSpec::GaussianBump { x0, xi0, width } => Symbol::gaussian_bump(x0, xi0, width),
        }
    }
}

/// Which argument of the symbol a kernel entry `K(x, y)` reads:
/// `(x + y)/2` for Weyl, `x` for Kohn-Nirenberg.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Quantization {
    #[default]
    Weyl,
    KohnNirenberg,
}

impl Quantization {
    pub fn tau(&self) -> f64 {
        match self {
            Quantization::Weyl => 0.5,
            Quantization::KohnNirenberg => 1.0,
        }
    }

    pub fn from_tau(tau: f64) -> Result<Self> {
        if tau == 0.5 {
            Ok(Quantization::Weyl)
        } else if tau == 1.0 {
            Ok(Quantization::KohnNirenberg)
        } else {
            Err(Error::Config(format!("tau must be 0.5 or 1, got {tau}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Structure {
    /// Depends on `x` only.
    Multiplication,
    /// Depends on `xi` only.
    FourierMultiplier,
    General,
}

/// Samples of a symbol at `(x'_h, xi_k)`, where `x'_h = (h - N) dx / 2`
/// runs over the twice-refined position grid (`2N` rows) that contains every
/// midpoint of the signal grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolGrid {
    grid: Grid1D,
    values: Vec<Complex64>,
    real: bool,
}

impl SymbolGrid {
    pub fn from_symbol(sigma: &Symbol, grid: Grid1D) -> Self {
        let n = grid.len();
        let xis = grid.dual().xs();
        let values: Vec<Complex64> = (0..2 * n)
            .into_par_iter()
            .flat_map_iter(|h| {
                let x = Self::refined_x(&grid, h);
                xis.iter().map(move |&xi| sigma.eval(x, xi)).collect::<Vec<_>>()
            })
            .collect();
        Self::new(grid, values).expect("shape matches")
    }

    pub fn new(grid: Grid1D, values: Vec<Complex64>) -> Result<Self> {
        let n = grid.len();
        if values.len() != 2 * n * n {
            return Err(Error::InvalidArgument(format!("expected {} symbol samples, got {}", 2 * n * n, values.len())));
        }
        let real = values.iter().all(|v| v.im.abs() < 1e-14);
        Ok(Self { grid, values, real })
    }

    fn refined_x(grid: &Grid1D, h: usize) -> f64 {
        (h as f64 - grid.len() as f64) * grid.dx() / 2.0
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn is_real(&self) -> bool {
        self.real
    }

    pub fn rows(&self) -> usize {
        2 * self.grid.len()
    }

    pub fn x(&self, h: usize) -> f64 {
        Self::refined_x(&self.grid, h)
    }

    pub fn get(&self, h: usize, k: usize) -> Complex64 {
        self.values[h * self.grid.len() + k]
    }

    fn row(&self, h: usize) -> &[Complex64] {
        let n = self.grid.len();
        &self.values[h * n..(h + 1) * n]
    }

    pub fn structure(&self) -> Structure {
        let n = self.grid.len();
        let scale = self.values.iter().map(|v| v.norm()).fold(0.0, f64::max).max(1e-300);
        let tol = 1e-14 * scale;
        let first = self.row(0);
        let x_free = (1..self.rows()).all(|h| self.row(h).iter().zip(first).all(|(a, b)| (a - b).norm() <= tol));
        if x_free {
            return Structure::FourierMultiplier;
        }
        let xi_free = (0..self.rows()).all(|h| {
            let r = self.row(h);
            (1..n).all(|k| (r[k] - r[0]).norm() <= tol)
        });
        if xi_free {
            Structure::Multiplication
        } else {
            Structure::General
        }
    }

    /// Columns `x,xi,re,im` over the refined grid.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "x,xi,re,im")?;
        let n = self.grid.len();
        for h in 0..self.rows() {
            for k in 0..n {
                let v = self.get(h, k);
                writeln!(w, "{:.12e},{:.12e},{:.12e},{:.12e}", self.x(h), self.grid.dual().x(k), v.re, v.im)?;
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "grid": self.grid,
            "x": (0..self.rows()).map(|h| self.x(h)).collect::<Vec<_>>(),
            "xi": self.grid.dual().xs(),
            "real": self.real,
            "values": self.values.iter().map(|v| [v.re, v.im]).collect::<Vec<_>>(),
        })
    }
}

/// Dense kernel `M[j][l] = K(x_j, x_l) dx`, so that `(sigma^w f)_j = sum_l M[j][l] f_l`.
fn dense_kernel(sigma: &SymbolGrid, q: Quantization) -> DMatrix<Complex64> {
    let grid = sigma.grid;
    let n = grid.len();
    let half = (n / 2) as i64;
    let dxi = grid.dxi();
    let dx = grid.dx();
    // g[h][d mod N] = dxi * sum_k sigma(x'_h, xi_k) e^{2 pi i d dx xi_k}
    let g: Vec<Vec<Complex64>> = (0..sigma.rows())
        .into_par_iter()
        .map(|h| {
            let mut buf = sigma.row(h).to_vec();
            fft::inverse(&mut buf);
            for (d, v) in buf.iter_mut().enumerate() {
                *v *= if d % 2 == 0 { dxi } else { -dxi };
            }
            buf
        })
        .collect();
    let two_n = 2 * n as i64;
    let entry = |j: usize, l: usize| -> Complex64 {
        let d = (j as i64 - l as i64 + half).rem_euclid(n as i64) - half;
        let dm = d.rem_euclid(n as i64) as usize;
        let h = match q {
            Quantization::Weyl => (2 * l as i64 + d).rem_euclid(two_n),
            Quantization::KohnNirenberg => 2 * j as i64,
        } as usize;
        if d == -half && q == Quantization::Weyl {
            0.5 * (g[h][dm] + g[(h + n) % (2 * n)][dm]) * dx
        } else {
            g[h][dm] * dx
        }
    };
    let cols: Vec<Vec<Complex64>> = (0..n).into_par_iter().map(|l| (0..n).map(|j| entry(j, l)).collect()).collect();
    DMatrix::from_vec(n, n, cols.concat())
}

/// Quantized symbol acting on signals of one grid.
#[derive(Debug, Clone)]
pub struct WeylOperator {
    name: String,
    grid: Grid1D,
    quantization: Quantization,
    structure: Structure,
    kernel: DMatrix<Complex64>,
    /// `sigma(x_j)` or `sigma(xi_k)` for the accelerated paths.
    diagonal: Vec<Complex64>,
}

impl WeylOperator {
    pub fn name_str(&self) -> &str {
        &self.name
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn structure(&self) -> Structure {
        self.structure
    }

    pub fn quantization(&self) -> Quantization {
        self.quantization
    }

    /// `sigma(x_j)` when the symbol does not depend on `xi`.
    pub fn multiplier(&self) -> Option<&[Complex64]> {
        match self.structure {
            Structure::Multiplication => Some(&self.diagonal),
            _ => None,
        }
    }

    /// Dense `K(x_j, x_l) dx`.
    pub fn kernel(&self) -> &DMatrix<Complex64> {
        &self.kernel
    }

    /// Dense product without the structure shortcut.
    pub fn apply_dense(&self, f: &SampledSignal) -> Result<SampledSignal> {
        self.grid.check_same(f.grid())?;
        let v = &self.kernel * DVector::from_column_slice(f.values());
        SampledSignal::new(self.grid, v.iter().cloned().collect())
    }

    /// `||K - K^*||_max`.
    pub fn hermitian_defect(&self) -> f64 {
        (&self.kernel - self.kernel.adjoint()).camax()
    }

    /// Operator with kernel `self.kernel * other.kernel`.
    pub fn compose(&self, other: &WeylOperator) -> Result<WeylOperator> {
        self.grid.check_same(&other.grid)?;
        Ok(WeylOperator {
            name: format!("{} * {}", self.name, other.name),
            grid: self.grid,
            quantization: self.quantization,
            structure: Structure::General,
            kernel: &self.kernel * &other.kernel,
            diagonal: Vec::new(),
        })
    }

    /// Columns `x,y,re,im` of `K(x, y)` (without the `dx` weight).
    pub fn write_kernel_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "x,y,re,im")?;
        let dx = self.grid.dx();
        for j in 0..self.grid.len() {
            for l in 0..self.grid.len() {
                let v = self.kernel[(j, l)] / dx;
                writeln!(w, "{:.12e},{:.12e},{:.12e},{:.12e}", self.grid.x(j), self.grid.x(l), v.re, v.im)?;
            }
        }
        Ok(())
    }
}

impl LinearOperator for WeylOperator {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn phase_map(&self) -> PhaseMap {
        PhaseMap::Identity
    }

    fn apply(&self, f: &SampledSignal) -> Result<SampledSignal> {
        self.grid.check_same(f.grid())?;
        match self.structure {
            Structure::Multiplication => {
                let v = f.values().iter().zip(&self.diagonal).map(|(a, b)| a * b).collect();
                SampledSignal::new(self.grid, v)
            }
            Structure::FourierMultiplier => {
                let diag = &self.diagonal;
                let dual = self.grid.dual();
                Ok(fourier_multiplier(f, |xi| diag[dual.index_of(xi)]))
            }
            Structure::General => self.apply_dense(f),
        }
    }
}

/// Quantizes sampled symbol values into a dense kernel.
pub fn weyl_quantize_with(sigma: &SymbolGrid, q: Quantization, name: impl Into<String>) -> WeylOperator {
    let n = sigma.grid.len();
    let structure = sigma.structure();
    let diagonal = match structure {
        Structure::Multiplication => (0..n).map(|j| sigma.get(2 * j, 0)).collect(),
        Structure::FourierMultiplier => sigma.row(0).to_vec(),
        Structure::General => Vec::new(),
    };
    WeylOperator {
        name: name.into(),
        grid: sigma.grid,
        quantization: q,
        structure,
        kernel: dense_kernel(sigma, q),
        diagonal,
    }
}

/// `sigma^w` on `grid`.
pub fn weyl_quantize(sigma: &Symbol, grid: Grid1D) -> WeylOperator {
    weyl_quantize_with(&sigma.sample(grid), Quantization::Weyl, sigma.name())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_test_signal, SignalKind};

    fn grid() -> Grid1D {
        Grid1D::self_dual(128).unwrap()
    }

    fn probe(grid: Grid1D) -> SampledSignal {
        make_test_signal(&SignalKind::ChirpedAtom { x: 0.7, xi: -1.0, c: 0.5 }, grid).unwrap()
    }

    #[test]
    fn constant_symbol_is_identity() {
        let op = weyl_quantize(&Symbol::constant(1.0), grid());
        let id = DMatrix::<Complex64>::identity(128, 128);
        assert!((op.kernel() - id).camax() < 1e-10);
    }

    #[test]
    fn multiplication_symbol() {
        let g = grid();
        let op = weyl_quantize(&Symbol::real("cos", |x, _| (2.0 * x).cos() + 0.3 * x), g);
        assert_eq!(op.structure(), Structure::Multiplication);
        let f = probe(g);
        let direct = f.multiply_by(|x| Complex64::new((2.0 * x).cos() + 0.3 * x, 0.0));
        assert!(op.apply(&f).unwrap().relative_error(&direct) < 1e-10);
        assert!(op.apply_dense(&f).unwrap().relative_error(&direct) < 1e-10);
    }

    #[test]
    fn laplacian_symbol() {
        let g = grid();
        let op = weyl_quantize(&Symbol::real("lap", |_, xi| -4.0 * PI * PI * xi * xi), g);
        assert_eq!(op.structure(), Structure::FourierMultiplier);
        let f = probe(g);
        let spectral = fourier_multiplier(&f, |xi| Complex64::new(-4.0 * PI * PI * xi * xi, 0.0));
        assert!(op.apply(&f).unwrap().relative_error(&spectral) < 1e-8);
        assert!(op.apply_dense(&f).unwrap().relative_error(&spectral) < 1e-8);
    }

    #[test]
    fn real_symbol_gives_hermitian_kernel() {
        let op = weyl_quantize(&Symbol::real("mix", |x, xi| (x * xi).sin() * (-x * x - xi * xi).exp()), grid());
        assert_eq!(op.structure(), Structure::General);
        assert!(op.hermitian_defect() < 1e-10);
    }

    #[test]
    fn adjoint_is_conjugate_symbol() {
        let g = grid();
        let s = Symbol::new("c", |x, xi| Complex64::new(x.cos(), xi.sin()) * (-0.3 * (x * x + xi * xi)).exp());
        let a = weyl_quantize(&s, g);
        let b = weyl_quantize(&s.conj(), g);
        assert!((a.kernel().adjoint() - b.kernel()).camax() < 1e-10);
    }

    #[test]
    fn quadratic_symbol_matches_differential_operator() {
        let g = grid();
        let q = crate::symplectic::QuadraticForm::from_scalars(0.0, -1.3, 2.1);
        let qs = q.clone();
        let op = weyl_quantize(&Symbol::real("q", move |x, xi| qs.eval1(x, xi)), g);
        let f = make_test_signal(&SignalKind::GaborAtom { x: 0.3, xi: 0.2 }, g).unwrap();
        let reference = crate::symplectic::quadratic_weyl_apply(&q, &f);
        assert!(op.apply(&f).unwrap().relative_error(&reference) < 1e-10);
    }

    #[test]
    fn kohn_nirenberg_of_x_xi() {
        // x xi quantizes to x D with D = (2 pi i)^{-1} d/dx
        let g = grid();
        let s = Symbol::real("xxi", |x, xi| x * xi * (-0.01 * x * x).exp());
        let op = weyl_quantize_with(&s.sample(g), Quantization::KohnNirenberg, "kn");
        let f = make_test_signal(&SignalKind::Gaussian, g).unwrap();
        let df = fourier_multiplier(&f, |xi| Complex64::new(xi, 0.0));
        let expect = df.multiply_by(|x| Complex64::new(x * (-0.01 * x * x).exp(), 0.0));
        assert!(op.apply(&f).unwrap().relative_error(&expect) < 1e-10);
    }

    #[test]
    fn symbol_grid_exports() {
        let g = Grid1D::self_dual(8).unwrap();
        let s = Symbol::constant(2.0).sample(g);
        assert!(s.is_real());
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 1 + 2 * 8 * 8);
        assert_eq!(s.to_json()["values"].as_array().unwrap().len(), 128);
        assert!(Quantization::from_tau(0.3).is_err());
    }
}
