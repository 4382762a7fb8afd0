use serde::Serialize;

use super::{quadratic_propagate, HamiltonianSpec, SplitStep};
use crate::error::Result;
use crate::gabor::Lattice;
use crate::grid::SampledSignal;
use crate::metaplectic::{decay_fit_with, gabor_matrix, DecayFit, DecayFitOptions, FnOperator, LinearOperator, PhaseMap};
use crate::symplectic::SymplecticMatrix;

/// Envelope fits for `e^{itH}` against `A_t` and for
/// `P(t) = mu(A_{-t}) e^{itH}` against the identity.
#[derive(Debug, Clone, Serialize)]
pub struct PropagatorStructure {
    pub t: f64,
    pub map: SymplecticMatrix,
    pub target_s: f64,
    pub effective_target: f64,
    pub aligned: DecayFit,
    pub reduced: DecayFit,
    pub passed: bool,
}

/// Gabor matrix of the split-step realization of `e^{itH}` fitted against
/// `<w - A_t z>^{-s}`; passes when `s_fit >= min(s, cap) - 0.5`.
pub fn propagator_gabor_structure(
    h: &HamiltonianSpec,
    t: f64,
    steps: usize,
    g: &SampledSignal,
    input: &Lattice,
    output: &Lattice,
    opts: &DecayFitOptions,
) -> Result<PropagatorStructure> {
    let grid = *g.grid();
    let evolution = SplitStep::new(h, grid, t, steps)?;
    let map = h.flow(t);
    let k = gabor_matrix(&evolution, g, input, output)?;
    let aligned = decay_fit_with(&k, &map, opts)?;

    let q = h.quadratic.clone();
    let reduced_op = FnOperator::new("P(t)", PhaseMap::Identity, move |f| {
        let u = evolution.apply(f)?;
        Ok(quadratic_propagate(&q, &u, -t)?.u_t)
    });
    let kp = gabor_matrix(&reduced_op, g, input, output)?;
    let reduced = decay_fit_with(&kp, &SymplecticMatrix::identity(1), opts)?;

    let s = h.perturbation.as_ref().map_or(f64::INFINITY, |p| p.class_s());
    let cap = (1.0 / opts.floor).ln() / (1.0 + opts.r_min * opts.r_min).sqrt().ln();
    let effective_target = s.min(cap);
    Ok(PropagatorStructure {
        t,
        map,
        target_s: s,
        effective_target,
        passed: aligned.s_fit >= effective_target - 0.5,
        aligned,
        reduced,
    })
}
