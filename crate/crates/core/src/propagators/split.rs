use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::{gauge_phase, HamiltonianSpec, Method, PropagatorResult};
use crate::error::{Error, Result};
use crate::grid::{Grid1D, SampledSignal};
use crate::metaplectic::{metaplectic_apply, LinearOperator, PhaseMap};
use crate::symplectic::SymplecticMatrix;

const HERMITIAN_TOL: f64 = 1e-10;

enum Kick {
    None,
    Pointwise(Vec<Complex64>),
    Dense(DMatrix<Complex64>),
}

/// Strang splitting `(e^{i dt a^w / 2} e^{i dt sigma^w} e^{i dt a^w / 2})^steps`.
pub struct SplitStep {
    grid: Grid1D,
    t: f64,
    steps: usize,
    half: SymplecticMatrix,
    full: SymplecticMatrix,
    half_phase: Complex64,
    full_phase: Complex64,
    kick: Kick,
    name: String,
}

/// `e^{iK}` for Hermitian `K` by its Taylor polynomial of degree 4.
fn taylor4(k: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let n = k.nrows();
    let ik = k * Complex64::new(0.0, 1.0);
    let mut term = DMatrix::<Complex64>::identity(n, n);
    let mut sum = term.clone();
    for j in 1..=4 {
        term = &term * &ik * Complex64::new(1.0 / j as f64, 0.0);
        sum += &term;
    }
    sum
}

impl SplitStep {
    pub fn new(h: &HamiltonianSpec, grid: Grid1D, t: f64, steps: usize) -> Result<Self> {
        if steps == 0 {
            return Err(Error::InvalidArgument("split-step needs at least one step".into()));
        }
        let dt = t / steps as f64;
        let kick = match &h.perturbation {
            None => Kick::None,
            Some(p) => {
                let op = p.operator();
                grid.check_same(op.grid())?;
                let scale = op.kernel().camax().max(1e-300);
                let defect = op.hermitian_defect();
                if defect > HERMITIAN_TOL * scale {
                    return Err(Error::NonHermitian { defect });
                }
                match op.multiplier() {
                    Some(m) => Kick::Pointwise(m.iter().map(|v| Complex64::new(0.0, dt * v.re).exp()).collect()),
                    None => Kick::Dense(taylor4(&(op.kernel() * Complex64::new(dt, 0.0)))),
                }
            }
        };
        Ok(Self {
            grid,
            t,
            steps,
            half: h.flow(dt / 2.0),
            full: h.flow(dt),
            half_phase: gauge_phase(&h.quadratic, dt / 2.0, grid)?,
            full_phase: gauge_phase(&h.quadratic, dt, grid)?,
            kick,
            name: format!("split-step e^(itH), H = {}, t = {t}, {steps} steps", h.name),
        })
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    fn kick(&self, f: SampledSignal) -> Result<SampledSignal> {
        match &self.kick {
            Kick::None => Ok(f),
            Kick::Pointwise(m) => {
                let v = f.values().iter().zip(m).map(|(a, b)| a * b).collect();
                SampledSignal::new(self.grid, v)
            }
            Kick::Dense(e) => {
                let v = e * DVector::from_column_slice(f.values());
                SampledSignal::new(self.grid, v.iter().cloned().collect())
            }
        }
    }

    fn quadratic(&self, a: &SymplecticMatrix, phase: Complex64, f: &SampledSignal) -> Result<SampledSignal> {
        Ok(metaplectic_apply(a, f)?.signal.scale(phase))
    }

    pub fn propagate(&self, u0: &SampledSignal) -> Result<SampledSignal> {
        self.grid.check_same(u0.grid())?;
        if let Kick::None = self.kick {
            let mut u = u0.clone();
            for _ in 0..self.steps {
                u = self.quadratic(&self.full, self.full_phase, &u)?;
            }
            return Ok(u);
        }
        // consecutive half steps merge into one full step
        let mut u = self.quadratic(&self.half, self.half_phase, u0)?;
        for k in 0..self.steps {
            u = self.kick(u)?;
            u = if k + 1 == self.steps {
                self.quadratic(&self.half, self.half_phase, &u)?
            } else {
                self.quadratic(&self.full, self.full_phase, &u)?
            };
        }
        Ok(u)
    }
}

impl LinearOperator for SplitStep {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn phase_map(&self) -> PhaseMap {
        PhaseMap::Unknown
    }

    fn apply(&self, f: &SampledSignal) -> Result<SampledSignal> {
        self.propagate(f)
    }
}

/// `e^{itH} u0` by Strang splitting with `steps` equal substeps.
pub fn split_step(h: &HamiltonianSpec, u0: &SampledSignal, t: f64, steps: usize) -> Result<PropagatorResult> {
    let s = SplitStep::new(h, *u0.grid(), t, steps)?;
    let u = s.propagate(u0)?;
    Ok(PropagatorResult::new(t, u0, u, Method::SplitStep).with("steps", steps as f64))
}
