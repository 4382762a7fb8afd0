//! Schrödinger evolution `u(t) = e^{itH} u_0` with `H = a^w + sigma^w`.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::io::Write;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::grid::{fourier, fourier_multiplier, interpolate, inverse_fourier, Grid1D, PhasePoint, SampledSignal};
use crate::metaplectic::metaplectic_apply;
use crate::symplectic::{flow, quadratic_symbol_to_generator, quadratic_weyl_apply, QuadraticForm, SymplecticMatrix};
use crate::weyl::{weyl_quantize, Symbol, WeylOperator};

mod dyson;
mod split;
mod structure;

pub use dyson::{dyson_propagate, factorial_shape_spread, growth_constant, DysonDiagnostics, DysonOptions, DysonResult};
pub use split::{split_step, SplitStep};
pub use structure::{propagator_gabor_structure, PropagatorStructure};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Distance from a caustic `pi/2 + k pi` below which the oscillator kernel
/// formula is abandoned for the metaplectic path.
pub const CAUSTIC_GUARD: f64 = 0.1;

/// Bounded perturbation `sigma^w` together with its symbol class exponent.
#[derive(Debug, Clone)]
pub struct Perturbation {
    symbol: Symbol,
    operator: WeylOperator,
    class_s: f64,
}

impl Perturbation {
    pub fn new(symbol: Symbol, class_s: f64, grid: Grid1D) -> Result<Self> {
        let operator = weyl_quantize(&symbol, grid);
        if operator.kernel().iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::Config(format!("perturbation '{}' is not finite on the grid", symbol.name())));
        }
        Ok(Self { symbol, operator, class_s })
    }

    pub fn symbol(&self) -> &Symbol {
        &self.symbol
    }

    pub fn operator(&self) -> &WeylOperator {
        &self.operator
    }

    /// `s` with `sigma` in `M^inf_{1 (x) v_s}`.
    pub fn class_s(&self) -> f64 {
        self.class_s
    }
}

/// `H = a^w + sigma^w` with `a` a real quadratic form.
#[derive(Debug, Clone)]
pub struct HamiltonianSpec {
    pub name: String,
    pub quadratic: QuadraticForm,
    pub perturbation: Option<Perturbation>,
}

impl HamiltonianSpec {
    pub fn new(name: impl Into<String>, quadratic: QuadraticForm) -> Self {
        Self { name: name.into(), quadratic, perturbation: None }
    }

    pub fn free_particle() -> Self {
        Self::new("free particle", QuadraticForm::free_particle())
    }

    pub fn harmonic_oscillator() -> Self {
        Self::new("harmonic oscillator", QuadraticForm::harmonic_oscillator())
    }

    /// Oscillator plus `|sin x|^mu`, a symbol of class `v_{mu+1}`.
    pub fn perturbed_oscillator(mu: f64, grid: Grid1D) -> Result<Self> {
        if !(mu > 0.0) {
            return Err(Error::Config(format!("perturbation exponent must be positive, got {mu}")));
        }
        Self::harmonic_oscillator().with_perturbation(Symbol::abs_sin_power(mu), mu + 1.0, grid)
    }

    pub fn with_perturbation(mut self, symbol: Symbol, class_s: f64, grid: Grid1D) -> Result<Self> {
        self.name = format!("{} + {}", self.name, symbol.name());
        self.perturbation = Some(Perturbation::new(symbol, class_s, grid)?);
        Ok(self)
    }

    /// The same Hamiltonian with its perturbation quantized on `grid`.
    pub fn on_grid(&self, grid: Grid1D) -> Result<Self> {
        let perturbation = match &self.perturbation {
            Some(p) if p.operator().grid().same_as(&grid) => Some(p.clone()),
            Some(p) => Some(Perturbation::new(p.symbol().clone(), p.class_s(), grid)?),
            None => None,
        };
        Ok(Self { name: self.name.clone(), quadratic: self.quadratic.clone(), perturbation })
    }

    /// `A_t` with `e^{ita^w} = mu(A_t)`.
    pub fn flow(&self, t: f64) -> SymplecticMatrix {
        flow(&quadratic_symbol_to_generator(&self.quadratic), t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    ClosedForm,
    Metaplectic,
    SplitStep,
    Dyson(usize),
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::ClosedForm => write!(f, "closed_form"),
            Method::Metaplectic => write!(f, "metaplectic"),
            Method::SplitStep => write!(f, "split_step"),
            Method::Dyson(n) => write!(f, "dyson({n})"),
        }
    }
}

impl Serialize for Method {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// `u_t` plus the method that produced it.
#[derive(Debug, Clone)]
pub struct PropagatorResult {
    pub t: f64,
    pub u_t: SampledSignal,
    pub method: Method,
    pub diagnostics: BTreeMap<String, f64>,
}

#[derive(Serialize)]
struct ResultJson<'a> {
    t: f64,
    method: Method,
    diagnostics: &'a BTreeMap<String, f64>,
}

impl PropagatorResult {
    fn new(t: f64, u0: &SampledSignal, u_t: SampledSignal, method: Method) -> Self {
        let mut diagnostics = BTreeMap::new();
        diagnostics.insert("norm_in".to_string(), u0.norm());
        diagnostics.insert("norm_out".to_string(), u_t.norm());
        Self { t, u_t, method, diagnostics }
    }

    fn with(mut self, key: &str, value: f64) -> Self {
        self.diagnostics.insert(key.to_string(), value);
        self
    }

    /// `| ||u_t|| - ||u_0|| | / ||u_0||`.
    pub fn unitarity_defect(&self) -> f64 {
        let a = self.diagnostics["norm_in"];
        let b = self.diagnostics["norm_out"];
        if a == 0.0 {
            b
        } else {
            (a - b).abs() / a
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(ResultJson { t: self.t, method: self.method, diagnostics: &self.diagnostics })
            .expect("result serializes")
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        self.u_t.write_csv(out)
    }
}

/// `e^{it Laplacian}` as the multiplier `e^{-4 pi^2 i t xi^2}`.
pub fn free_particle(u0: &SampledSignal, t: f64) -> PropagatorResult {
    let u = fourier_multiplier(u0, |xi| (-4.0 * PI * PI * t * xi * xi * I).exp());
    PropagatorResult::new(t, u0, u, Method::ClosedForm)
}

/// Free evolution of the wave packet `pi(z) phi` in closed form, summed over
/// the periodic images of the grid.
pub fn free_particle_packet(grid: Grid1D, z: PhasePoint, t: f64) -> SampledSignal {
    let w = Complex64::new(1.0, 4.0 * PI * t);
    let pref = w.powf(-0.5) * (-4.0 * PI * PI * t * z.xi * (2.0 * z.x + I * z.xi) / w).exp();
    let packet = |x: f64| pref * (2.0 * PI * I * z.xi * x / w).exp() * (-PI * (x - z.x).powi(2) / w).exp();
    let l = grid.length();
    SampledSignal::from_fn(grid, |x| (-4..=4).map(|m| packet(x + m as f64 * l)).sum())
}

/// Signed distance from `t` to the nearest caustic `pi/2 + k pi`.
pub fn caustic_distance(t: f64) -> f64 {
    let k = ((t - PI / 2.0) / PI).round();
    (t - PI / 2.0 - k * PI).abs()
}

/// Oscillator evolution by the kernel formula
/// `(cos t)^{-1/2} int e^{2 pi i [x xi / cos t - tan t (x^2 + xi^2) / 2]} u0^(xi) dxi`
/// with the branch continued from `t = 0`. The `xi`-integral is a trapezoid
/// sum on a zero-padded grid wide enough to hold `x / cos t`.
pub fn mehler_quadrature(u0: &SampledSignal, t: f64) -> Result<SampledSignal> {
    let (s, c) = t.sin_cos();
    if c.abs() < 1e-3 {
        return Err(Error::InvalidArgument(format!("t = {t} is on a caustic")));
    }
    let tau = s / c;
    let grid = *u0.grid();
    let n = grid.len();
    let pad = (1.0 / c.abs()).ceil() as usize + 1;
    let big = Grid1D::new(n * pad, grid.dx() * (n * pad) as f64)?;
    let offset = n * (pad - 1) / 2;
    let mut padded = SampledSignal::zeros(big);
    padded.values_mut()[offset..offset + n].copy_from_slice(u0.values());
    let chirped = fourier(&padded).multiply_by(|xi| (-PI * I * tau * xi * xi).exp());
    let inner = inverse_fourier(&chirped);
    let ys: Vec<f64> = grid.xs().iter().map(|x| x / c).collect();
    let values = interpolate(&inner, &ys);
    let pref = (-0.5 * t * I).exp() * Complex64::new(1.0, tau).sqrt();
    let out = values
        .into_iter()
        .zip(grid.xs())
        .map(|(v, x)| pref * v * (-PI * I * tau * x * x).exp())
        .collect();
    SampledSignal::new(grid, out)
}

/// `e^{it((1/4pi) Laplacian - pi x^2)} u0`: the kernel formula away from
/// caustics, the metaplectic path within [`CAUSTIC_GUARD`] of one.
pub fn harmonic_oscillator(u0: &SampledSignal, t: f64) -> Result<PropagatorResult> {
    let d = caustic_distance(t);
    if d > CAUSTIC_GUARD {
        let u = mehler_quadrature(u0, t)?;
        Ok(PropagatorResult::new(t, u0, u, Method::ClosedForm).with("caustic_distance", d))
    } else {
        Ok(quadratic_propagate(&QuadraticForm::harmonic_oscillator(), u0, t)?.with("caustic_distance", d))
    }
}

/// Unimodular `c` with `c * metaplectic_apply(A_t) = e^{itq^w}`, fixed by
/// `<e^{itq^w} phi, phi> = ||phi||^2 (2 / (A + D + i(B - C)))^{1/2}` with
/// the square root continued along the flow from `t = 0`.
pub fn gauge_phase(q: &QuadraticForm, t: f64, grid: Grid1D) -> Result<Complex64> {
    let gen = quadratic_symbol_to_generator(q);
    let den = |r: f64| {
        let (a, b, c, d) = flow(&gen, r).entries();
        Complex64::new(a + d, b - c)
    };
    let speed = gen.assemble().amax();
    let steps = 64 + (64.0 * t.abs() * speed).ceil() as usize;
    let mut arg = 0.0;
    let mut prev = den(0.0);
    for k in 1..=steps {
        let cur = den(t * k as f64 / steps as f64);
        arg += (cur / prev).arg();
        prev = cur;
    }
    let phi = SampledSignal::from_real_fn(grid, |x| (-PI * x * x).exp());
    let target = phi.norm_sqr() * (2.0 / prev.norm()).sqrt() * (-0.5 * arg * I).exp();
    let got = metaplectic_apply(&flow(&gen, t), &phi)?.signal.inner(&phi);
    let c = target / got;
    Ok(c / c.norm())
}

/// `e^{itq^w} u0 = mu(A_t) u0` with the phase fixed by [`gauge_phase`].
pub fn quadratic_propagate(q: &QuadraticForm, u0: &SampledSignal, t: f64) -> Result<PropagatorResult> {
    if q.is_zero() || t == 0.0 {
        return Ok(PropagatorResult::new(t, u0, u0.clone(), Method::Metaplectic));
    }
    let a = flow(&quadratic_symbol_to_generator(q), t);
    let applied = metaplectic_apply(&a, u0)?;
    if applied.margin_exceeded {
        log::warn!("e^(it q^w) at t = {t} pushes energy outside the margin window");
    }
    let c = gauge_phase(q, t, *u0.grid())?;
    let u = applied.signal.scale(c);
    Ok(PropagatorResult::new(t, u0, u, Method::Metaplectic).with("margin_exceeded", applied.margin_exceeded as u8 as f64))
}

/// `n`-th eigenmode (ascending energy) of `-(1/4pi) Laplacian + pi x^2 - |sin x|^mu`,
/// normalized with its largest entry real and positive.
pub fn perturbed_eigenmode(grid: Grid1D, n: usize, mu: f64) -> Result<SampledSignal> {
    let size = grid.len();
    if n >= size {
        return Err(Error::InvalidArgument(format!("mode {n} exceeds grid size {size}")));
    }
    if !(mu > 0.0) {
        return Err(Error::Config(format!("perturbation exponent must be positive, got {mu}")));
    }
    let osc = QuadraticForm::harmonic_oscillator().scaled(-1.0);
    let mut h = DMatrix::<Complex64>::zeros(size, size);
    for j in 0..size {
        let mut e = SampledSignal::zeros(grid);
        e.values_mut()[j] = Complex64::new(1.0, 0.0);
        let col = quadratic_weyl_apply(&osc, &e);
        for (i, v) in col.values().iter().enumerate() {
            h[(i, j)] = *v;
        }
        h[(j, j)] -= grid.x(j).sin().abs().powf(mu);
    }
    let h = (&h + h.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..size).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let v = eig.eigenvectors.column(order[n]);
    let peak = v.iter().cloned().max_by(|a, b| a.norm().total_cmp(&b.norm())).expect("nonempty");
    let phase = peak.conj() / peak.norm();
    let values: Vec<Complex64> = v.iter().map(|x| x * phase).collect();
    let s = SampledSignal::new(grid, values)?;
    let norm = s.norm();
    Ok(s.scale(Complex64::new(1.0 / norm, 0.0)))
}
