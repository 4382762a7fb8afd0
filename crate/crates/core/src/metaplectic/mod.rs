//! Metaplectic operators on sampled signals, built from the generator words
//! of [`factor_symplectic`], and Gabor matrices of general linear operators.
//!
//! All metaplectic identities hold projectively: results are compared modulo
//! a global unimodular constant.

mod decay;
mod matrix;

pub use decay::{decay_fit, decay_fit_with, DecayFit, DecayFitOptions, Shell};
pub use matrix::{gabor_matrix, GaborMatrixSample};

use serde::Serialize;

use crate::error::Result;
use crate::grid::{fourier, interpolate, inverse_fourier, tf_shift, tf_shift_fractional, PhasePoint, SampledSignal};
use crate::symplectic::{factor_symplectic, Generator, SymplecticMatrix};

/// Energy fraction outside the margin window above which a generator result
/// is flagged.
const TAIL_TOL: f64 = 1e-10;

/// Phase-space map an operator is expected to follow.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", content = "matrix", rename_all = "snake_case")]
pub enum PhaseMap {
    Identity,
    Symplectic(SymplecticMatrix),
    Unknown,
}

impl PhaseMap {
    pub fn matrix(&self) -> Option<SymplecticMatrix> {
        match self {
            PhaseMap::Identity => Some(SymplecticMatrix::identity(1)),
            PhaseMap::Symplectic(a) => Some(a.clone()),
            PhaseMap::Unknown => None,
        }
    }
}

/// A linear map on sampled signals.
pub trait LinearOperator: Send + Sync {
    fn name(&self) -> String;

    fn phase_map(&self) -> PhaseMap {
        PhaseMap::Unknown
    }

    fn apply(&self, f: &SampledSignal) -> Result<SampledSignal>;
}

pub struct IdentityOperator;

impl LinearOperator for IdentityOperator {
    fn name(&self) -> String {
        "identity".into()
    }

    fn phase_map(&self) -> PhaseMap {
        PhaseMap::Identity
    }

    fn apply(&self, f: &SampledSignal) -> Result<SampledSignal> {
        Ok(f.clone())
    }
}

/// `pi(z0)`.
pub struct ShiftOperator(pub PhasePoint);

impl LinearOperator for ShiftOperator {
    fn name(&self) -> String {
        format!("tf_shift({}, {})", self.0.x, self.0.xi)
    }

    fn phase_map(&self) -> PhaseMap {
        PhaseMap::Identity
    }

    fn apply(&self, f: &SampledSignal) -> Result<SampledSignal> {
        Ok(tf_shift(f, self.0))
    }
}

/// `mu(A)` with its generator word precomputed.
#[derive(Debug, Clone)]
pub struct MetaplecticOperator {
    a: SymplecticMatrix,
    word: Vec<Generator>,
}

impl MetaplecticOperator {
    pub fn new(a: SymplecticMatrix) -> Self {
        let word = factor_symplectic(&a);
        Self { a, word }
    }

    pub fn matrix(&self) -> &SymplecticMatrix {
        &self.a
    }

    pub fn word(&self) -> &[Generator] {
        &self.word
    }

    pub fn apply_checked(&self, f: &SampledSignal) -> Result<Applied> {
        apply_word(&self.word, f)
    }
}

impl LinearOperator for MetaplecticOperator {
    fn name(&self) -> String {
        let (a, b, c, d) = self.a.entries();
        format!("mu([[{a}, {b}], [{c}, {d}]])")
    }

    fn phase_map(&self) -> PhaseMap {
        PhaseMap::Symplectic(self.a.clone())
    }

    fn apply(&self, f: &SampledSignal) -> Result<SampledSignal> {
        Ok(self.apply_checked(f)?.signal)
    }
}

type BoxedMap = Box<dyn Fn(&SampledSignal) -> Result<SampledSignal> + Send + Sync>;

/// Operator given by a closure.
pub struct FnOperator {
    name: String,
    map: PhaseMap,
    f: BoxedMap,
}

impl FnOperator {
    pub fn new(
        name: impl Into<String>,
        map: PhaseMap,
        f: impl Fn(&SampledSignal) -> Result<SampledSignal> + Send + Sync + 'static,
    ) -> Self {
        Self { name: name.into(), map, f: Box::new(f) }
    }
}

impl LinearOperator for FnOperator {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn phase_map(&self) -> PhaseMap {
        self.map.clone()
    }

    fn apply(&self, f: &SampledSignal) -> Result<SampledSignal> {
        (self.f)(f)
    }
}

/// Generator output plus a flag raised when the result spills energy outside
/// the margin window in time or frequency.
#[derive(Debug, Clone)]
pub struct Applied {
    pub signal: SampledSignal,
    pub margin_exceeded: bool,
}

fn tail_fraction(f: &SampledSignal) -> f64 {
    let total = f.norm_sqr();
    if total == 0.0 {
        return 0.0;
    }
    let tail = |s: &SampledSignal| {
        let r = s.grid().margin_radius();
        let dx = s.grid().dx();
        s.grid()
            .xs()
            .iter()
            .zip(s.values())
            .filter(|(x, _)| x.abs() > r)
            .map(|(_, v)| v.norm_sqr())
            .sum::<f64>()
            * dx
    };
    (tail(f) + tail(&fourier(f))) / total
}

fn on_grid_of(out: SampledSignal, f: &SampledSignal) -> SampledSignal {
    if out.grid().same_as(f.grid()) {
        return SampledSignal::new(*f.grid(), out.into_values()).expect("same length");
    }
    let values = interpolate(&out, &f.grid().xs());
    SampledSignal::new(*f.grid(), values).expect("same length")
}

/// Explicit metaplectic operator of one generator:
/// `Chirp(c)` multiplies by `e^{i pi c x^2}`, `Fourier` is the Fourier
/// transform, `InverseFourier` its inverse and `Dilation(a)` maps `f` to
/// `|a|^{-1/2} f(x / a)` by trigonometric interpolation.
pub fn apply_generator(gen: &Generator, f: &SampledSignal) -> Result<Applied> {
    use std::f64::consts::PI;
    let out = match *gen {
        Generator::Chirp(c) => f.multiply_by(|x| num_complex::Complex64::from_polar(1.0, PI * c * x * x)),
        Generator::Fourier => on_grid_of(fourier(f), f),
        Generator::InverseFourier => on_grid_of(inverse_fourier(f), f),
        Generator::Dilation(a) => {
            let pts: Vec<f64> = f.grid().xs().iter().map(|x| x / a).collect();
            let scale = a.abs().powf(-0.5);
            let values = interpolate(f, &pts).into_iter().map(|v| v * scale).collect();
            SampledSignal::new(*f.grid(), values)?
        }
    };
    let before = tail_fraction(f);
    let after = tail_fraction(&out);
    let margin_exceeded = after > TAIL_TOL && after > 2.0 * before + TAIL_TOL;
    if margin_exceeded {
        log::debug!("{gen:?} pushes {after:.2e} of the energy outside the margin window");
    }
    Ok(Applied { signal: out, margin_exceeded })
}

fn apply_word(word: &[Generator], f: &SampledSignal) -> Result<Applied> {
    let mut cur = f.clone();
    let mut flagged = false;
    for gen in word.iter().rev() {
        let step = apply_generator(gen, &cur)?;
        flagged |= step.margin_exceeded;
        cur = step.signal;
    }
    Ok(Applied { signal: cur, margin_exceeded: flagged })
}

/// `mu(A) f` up to a global phase.
pub fn metaplectic_apply(a: &SymplecticMatrix, f: &SampledSignal) -> Result<Applied> {
    apply_word(&factor_symplectic(a), f)
}

/// `min_c || pi(Az) mu(A) g - c mu(A) pi(z) g || / ||g||` over unimodular `c`.
/// `z` is snapped to the grid; `Az` is applied with an exact spectral shift.
pub fn intertwining_defect(a: &SymplecticMatrix, z: PhasePoint, g: &SampledSignal) -> Result<f64> {
    let z = PhasePoint::new(g.grid().snap_x(z.x), g.grid().snap_xi(z.xi));
    let op = MetaplecticOperator::new(a.clone());
    let lhs = tf_shift_fractional(&op.apply(g)?, a.apply(z));
    let rhs = op.apply(&tf_shift(g, z))?;
    let c = lhs.optimal_phase(&rhs);
    Ok(lhs.distance(&rhs.scale(c)) / g.norm())
}
