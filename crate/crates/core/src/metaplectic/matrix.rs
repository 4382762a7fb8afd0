use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::LinearOperator;
use crate::error::{Error, Result};
use crate::gabor::{stft, Lattice};
use crate::grid::{tf_shift, PhasePoint, SampledSignal};

/// Samples `k(w, z) = <T pi(z) g, pi(w) g>` for input points `z` and output
/// points `w`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaborMatrixSample {
    inputs: Vec<PhasePoint>,
    outputs: Vec<PhasePoint>,
    /// Column-major: `values[iz * outputs.len() + iw]`.
    values: Vec<Complex64>,
}

#[derive(Serialize)]
struct SampleJson {
    z: Vec<[f64; 2]>,
    w: Vec<[f64; 2]>,
    values: Vec<[f64; 2]>,
}

impl GaborMatrixSample {
    pub fn new(inputs: Vec<PhasePoint>, outputs: Vec<PhasePoint>, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != inputs.len() * outputs.len() {
            return Err(Error::InvalidArgument(format!(
                "{} values for {} x {} points",
                values.len(),
                outputs.len(),
                inputs.len()
            )));
        }
        Ok(Self { inputs, outputs, values })
    }

    /// Builds a sample from a closed-form `k(w, z)`.
    pub fn from_fn(inputs: Vec<PhasePoint>, outputs: Vec<PhasePoint>, k: impl Fn(PhasePoint, PhasePoint) -> Complex64) -> Self {
        let values = inputs.iter().flat_map(|&z| outputs.iter().map(move |&w| (w, z))).map(|(w, z)| k(w, z)).collect();
        Self { inputs, outputs, values }
    }

    pub fn inputs(&self) -> &[PhasePoint] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[PhasePoint] {
        &self.outputs
    }

    pub fn get(&self, iw: usize, iz: usize) -> Complex64 {
        self.values[iz * self.outputs.len() + iw]
    }

    /// Iterator over `(w, z, k(w, z))`.
    pub fn iter(&self) -> impl Iterator<Item = (PhasePoint, PhasePoint, Complex64)> + '_ {
        let no = self.outputs.len();
        self.values.iter().enumerate().map(move |(i, v)| (self.outputs[i % no], self.inputs[i / no], *v))
    }

    /// Largest `| |k| - |k_ref| |` over the sample.
    pub fn magnitude_sup_error(&self, reference: impl Fn(PhasePoint, PhasePoint) -> f64) -> f64 {
        self.iter().map(|(w, z, v)| (v.norm() - reference(w, z)).abs()).fold(0.0, f64::max)
    }

    /// Columns `w_x,w_xi,z_x,z_xi,abs,arg`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "w_x,w_xi,z_x,z_xi,abs,arg")?;
        for (w, z, v) in self.iter() {
            writeln!(out, "{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e}", w.x, w.xi, z.x, z.xi, v.norm(), v.arg())?;
        }
        Ok(())
    }

    /// Input points, output points and `[re, im]` values ordered by input
    /// then output.
    pub fn to_json(&self) -> serde_json::Value {
        let pts = |v: &[PhasePoint]| v.iter().map(|p| [p.x, p.xi]).collect();
        serde_json::to_value(SampleJson {
            z: pts(&self.inputs),
            w: pts(&self.outputs),
            values: self.values.iter().map(|v| [v.re, v.im]).collect(),
        })
        .expect("sample serializes")
    }
}

/// Applies `t` to every atom `pi(z) g` of the input lattice and analyses the
/// result on the output lattice.
pub fn gabor_matrix(
    t: &dyn LinearOperator,
    g: &SampledSignal,
    input: &Lattice,
    output: &Lattice,
) -> Result<GaborMatrixSample> {
    g.grid().check_same(input.grid())?;
    g.grid().check_same(output.grid())?;
    let inputs = input.points();
    let columns: Vec<Vec<Complex64>> = inputs
        .par_iter()
        .map(|&z| {
            let image = t.apply(&tf_shift(g, z))?;
            Ok(stft(&image, g, output)?.values().to_vec())
        })
        .collect::<Result<_>>()?;
    Ok(GaborMatrixSample { inputs, outputs: output.points(), values: columns.concat() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_test_signal, Grid1D, SignalKind};
    use crate::metaplectic::{IdentityOperator, ShiftOperator};
    use std::f64::consts::PI;

    fn setup() -> (SampledSignal, Lattice) {
        let grid = Grid1D::default_desk();
        let g = make_test_signal(&SignalKind::Gaussian, grid).unwrap();
        let lat = Lattice::centered(grid, 12, 12, 4, 4).unwrap();
        (g, lat)
    }

    fn envelope(d: PhasePoint) -> f64 {
        2f64.powf(-0.5) * (-PI * (d.x * d.x + d.xi * d.xi) / 2.0).exp()
    }

    #[test]
    fn identity_matrix_is_gaussian_stft() {
        let (g, lat) = setup();
        let k = gabor_matrix(&IdentityOperator, &g, &lat, &lat).unwrap();
        assert!(k.magnitude_sup_error(|w, z| envelope(w - z)) < 1e-8);
    }

    #[test]
    fn shift_operator_moves_the_diagonal() {
        let (g, lat) = setup();
        let z0 = PhasePoint::new(12.0 * g.grid().dx(), -24.0 * g.grid().dxi());
        let k = gabor_matrix(&ShiftOperator(z0), &g, &lat, &lat).unwrap();
        assert!(k.magnitude_sup_error(|w, z| envelope(w - z - z0)) < 1e-8);
    }

    #[test]
    fn serialization_shapes() {
        let inputs = vec![PhasePoint::ORIGIN, PhasePoint::new(1.0, 0.0)];
        let outputs = vec![PhasePoint::ORIGIN];
        let k = GaborMatrixSample::from_fn(inputs, outputs, |w, z| Complex64::new(w.x - z.x, 1.0));
        assert_eq!(k.get(0, 1), Complex64::new(-1.0, 1.0));
        let mut buf = Vec::new();
        k.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 3);
        assert_eq!(k.to_json()["values"].as_array().unwrap().len(), 2);
    }
}
