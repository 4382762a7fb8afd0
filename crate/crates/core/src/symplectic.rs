//! Symplectic linear algebra on `R^{2d}`: the standard form `J`, `sp(d, R)`
//! generators built from quadratic forms, flows `e^{t H}` and, for `d = 1`,
//! factorization into dilations, lower chirps and `J`.
//!
//! Matrices act on column vectors `(x, xi)` with block layout `(A B; C D)`.

use std::f64::consts::PI;
use std::fmt;

use nalgebra::DMatrix;
use serde::ser::SerializeStruct;
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::grid::PhasePoint;

const MEMBERSHIP_TOL: f64 = 1e-10;
const DET_TOL: f64 = 1e-8;
/// Above this `||A^T J A - J||` drift the exponential is projected back.
const CLEANUP_TOL: f64 = 1e-10;
/// Largest chirp rate accepted in the three-shear factorization.
const CHIRP_LIMIT: f64 = 4.0;
const TRIVIAL: f64 = 1e-14;

/// Standard symplectic form `J = (0 I; -I 0)`.
pub fn standard_j(d: usize) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(2 * d, 2 * d);
    for i in 0..d {
        j[(i, d + i)] = 1.0;
        j[(d + i, i)] = -1.0;
    }
    j
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
}

/// An element of `Sp(d, R)`.
#[derive(Clone, PartialEq)]
pub struct SymplecticMatrix {
    d: usize,
    m: DMatrix<f64>,
}

impl fmt::Debug for SymplecticMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SymplecticMatrix(d={}, {:?})", self.d, self.m.as_slice())
    }
}

impl SymplecticMatrix {
    /// Validates `A^T J A = J` (entrywise to 1e-10) and `det A = 1` (to 1e-8).
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() || !m.nrows().is_multiple_of(2) || m.nrows() == 0 {
            return Err(Error::InvalidArgument(format!(
                "symplectic matrix must be 2d x 2d, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let s = Self { d: m.nrows() / 2, m };
        let defect = s.symplectic_defect();
        if defect > MEMBERSHIP_TOL {
            return Err(Error::InvalidArgument(format!("A^T J A - J has entry {defect:e}")));
        }
        let det = s.m.determinant();
        if (det - 1.0).abs() > DET_TOL {
            return Err(Error::InvalidArgument(format!("det = {det}, expected 1")));
        }
        Ok(s)
    }

    pub(crate) fn new_unchecked(m: DMatrix<f64>) -> Self {
        Self { d: m.nrows() / 2, m }
    }

    /// `d = 1` matrix `(a b; c d)`.
    pub fn from_entries(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        Self::new(DMatrix::from_row_slice(2, 2, &[a, b, c, d]))
    }

    pub fn identity(d: usize) -> Self {
        Self { d, m: DMatrix::identity(2 * d, 2 * d) }
    }

    pub fn j(d: usize) -> Self {
        Self { d, m: standard_j(d) }
    }

    /// Rotation `(cos t, -sin t; sin t, cos t)` (counter-clockwise, `d = 1`).
    pub fn rotation(t: f64) -> Self {
        let (s, c) = t.sin_cos();
        Self::new_unchecked(DMatrix::from_row_slice(2, 2, &[c, -s, s, c]))
    }

    /// `diag(a, 1/a)` (`d = 1`).
    pub fn dilation(a: f64) -> Result<Self> {
        if a == 0.0 || !a.is_finite() {
            return Err(Error::InvalidArgument(format!("dilation factor {a}")));
        }
        Ok(Self::new_unchecked(DMatrix::from_row_slice(2, 2, &[a, 0.0, 0.0, 1.0 / a])))
    }

    /// Lower shear `(1 0; c 1)`.
    pub fn lower_shear(c: f64) -> Self {
        Self::new_unchecked(DMatrix::from_row_slice(2, 2, &[1.0, 0.0, c, 1.0]))
    }

    /// Upper shear `(1 b; 0 1)`, the free-particle flow for `b = 4 pi t`.
    pub fn upper_shear(b: f64) -> Self {
        Self::new_unchecked(DMatrix::from_row_slice(2, 2, &[1.0, b, 0.0, 1.0]))
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    /// `max |A^T J A - J|`.
    pub fn symplectic_defect(&self) -> f64 {
        let j = standard_j(self.d);
        max_abs(&(self.m.transpose() * &j * &self.m - j))
    }

    /// Blocks `(A, B, C, D)`.
    pub fn blocks(&self) -> [DMatrix<f64>; 4] {
        let d = self.d;
        [
            self.m.view((0, 0), (d, d)).into_owned(),
            self.m.view((0, d), (d, d)).into_owned(),
            self.m.view((d, 0), (d, d)).into_owned(),
            self.m.view((d, d), (d, d)).into_owned(),
        ]
    }

    /// Entries `(a, b, c, d)` of a `d = 1` matrix.
    pub fn entries(&self) -> (f64, f64, f64, f64) {
        assert_eq!(self.d, 1, "entries() is only defined for d = 1");
        (self.m[(0, 0)], self.m[(0, 1)], self.m[(1, 0)], self.m[(1, 1)])
    }

    pub fn mul(&self, other: &SymplecticMatrix) -> SymplecticMatrix {
        Self { d: self.d, m: &self.m * &other.m }
    }

    /// `A^{-1} = -J A^T J`.
    pub fn inverse(&self) -> SymplecticMatrix {
        let j = standard_j(self.d);
        Self { d: self.d, m: -(&j * self.m.transpose() * &j) }
    }

    pub fn transpose(&self) -> SymplecticMatrix {
        Self { d: self.d, m: self.m.transpose() }
    }

    pub fn apply(&self, z: PhasePoint) -> PhasePoint {
        let (a, b, c, d) = self.entries();
        PhasePoint::new(a * z.x + b * z.xi, c * z.x + d * z.xi)
    }

    /// Spectral norm.
    pub fn operator_norm(&self) -> f64 {
        self.m.clone().singular_values().max()
    }

    pub fn max_entry_diff(&self, other: &SymplecticMatrix) -> f64 {
        max_abs(&(&self.m - &other.m))
    }

    /// Newton-type projection `A <- A (I - (X - I)/2)` with `X = -J A^T J A`.
    fn cleanup(mut self) -> Self {
        let j = standard_j(self.d);
        let id = DMatrix::<f64>::identity(2 * self.d, 2 * self.d);
        for _ in 0..4 {
            if self.symplectic_defect() <= 1e-14 {
                break;
            }
            let x = -(&j * self.m.transpose() * &j * &self.m);
            self.m = &self.m * (&id - (x - &id) * 0.5);
        }
        self
    }
}

#[derive(Serialize, Deserialize)]
struct Blocks {
    #[serde(rename = "A")]
    a: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    b: Vec<Vec<f64>>,
    #[serde(rename = "C")]
    c: Vec<Vec<f64>>,
    #[serde(rename = "D")]
    d: Vec<Vec<f64>>,
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

impl Serialize for SymplecticMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let [a, b, c, d] = self.blocks();
        let mut st = serializer.serialize_struct("SymplecticMatrix", 3)?;
        st.serialize_field("d", &self.d)?;
        st.serialize_field("rows", &rows(&self.m))?;
        st.serialize_field("blocks", &Blocks { a: rows(&a), b: rows(&b), c: rows(&c), d: rows(&d) })?;
        st.end()
    }
}

/// `(A B; C -A^T)` in `sp(d, R)` with `B`, `C` symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianMatrix {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    c: DMatrix<f64>,
}

impl HamiltonianMatrix {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>, c: DMatrix<f64>) -> Result<Self> {
        let d = a.nrows();
        for (name, m) in [("A", &a), ("B", &b), ("C", &c)] {
            if m.nrows() != d || m.ncols() != d {
                return Err(Error::InvalidArgument(format!("block {name} is not {d}x{d}")));
            }
        }
        if b != b.transpose() || c != c.transpose() {
            return Err(Error::InvalidArgument("blocks B and C must be symmetric".into()));
        }
        Ok(Self { a, b, c })
    }

    /// `d = 1` generator `(a b; c -a)`.
    pub fn from_scalars(a: f64, b: f64, c: f64) -> Self {
        let s = |v| DMatrix::from_element(1, 1, v);
        Self { a: s(a), b: s(b), c: s(c) }
    }

    pub fn zero(d: usize) -> Self {
        let z = DMatrix::zeros(d, d);
        Self { a: z.clone(), b: z.clone(), c: z }
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn assemble(&self) -> DMatrix<f64> {
        let d = self.dim();
        let mut m = DMatrix::zeros(2 * d, 2 * d);
        m.view_mut((0, 0), (d, d)).copy_from(&self.a);
        m.view_mut((0, d), (d, d)).copy_from(&self.b);
        m.view_mut((d, 0), (d, d)).copy_from(&self.c);
        m.view_mut((d, d), (d, d)).copy_from(&(-self.a.transpose()));
        m
    }

    /// `max |J H^T + H J|`, zero for members of `sp(d, R)`.
    pub fn membership_defect(&self) -> f64 {
        let h = self.assemble();
        let j = standard_j(self.dim());
        max_abs(&(&j * h.transpose() + &h * &j))
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { a: &self.a * s, b: &self.b * s, c: &self.c * s }
    }
}

/// `P(x, xi) = 1/2 xi.B xi + xi.A x - 1/2 x.C x`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticForm {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    c: DMatrix<f64>,
}

impl QuadraticForm {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>, c: DMatrix<f64>) -> Result<Self> {
        let h = HamiltonianMatrix::new(a, b, c)?;
        Ok(Self { a: h.a, b: h.b, c: h.c })
    }

    /// `d = 1`: `P(x, xi) = b xi^2 / 2 + a x xi - c x^2 / 2`.
    pub fn from_scalars(a: f64, b: f64, c: f64) -> Self {
        let s = |v| DMatrix::from_element(1, 1, v);
        Self { a: s(a), b: s(b), c: s(c) }
    }

    /// Symbol `-4 pi^2 xi^2` of the Laplacian.
    pub fn free_particle() -> Self {
        Self::from_scalars(0.0, -8.0 * PI * PI, 0.0)
    }

    /// Symbol `-pi (x^2 + xi^2)` of `(1/4pi) Laplacian - pi x^2`.
    pub fn harmonic_oscillator() -> Self {
        Self::from_scalars(0.0, -2.0 * PI, 2.0 * PI)
    }

    pub fn zero(d: usize) -> Self {
        let z = DMatrix::zeros(d, d);
        Self { a: z.clone(), b: z.clone(), c: z }
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn scalars(&self) -> (f64, f64, f64) {
        assert_eq!(self.dim(), 1, "scalars() is only defined for d = 1");
        (self.a[(0, 0)], self.b[(0, 0)], self.c[(0, 0)])
    }

    pub fn eval(&self, x: &[f64], xi: &[f64]) -> f64 {
        let xv = nalgebra::DVector::from_column_slice(x);
        let xiv = nalgebra::DVector::from_column_slice(xi);
        0.5 * xiv.dot(&(&self.b * &xiv)) + xiv.dot(&(&self.a * &xv)) - 0.5 * xv.dot(&(&self.c * &xv))
    }

    pub fn eval1(&self, x: f64, xi: f64) -> f64 {
        self.eval(&[x], &[xi])
    }

    pub fn add(&self, other: &QuadraticForm) -> QuadraticForm {
        Self { a: &self.a + &other.a, b: &self.b + &other.b, c: &self.c + &other.c }
    }

    pub fn scaled(&self, s: f64) -> QuadraticForm {
        Self { a: &self.a * s, b: &self.b * s, c: &self.c * s }
    }

    pub fn is_zero(&self) -> bool {
        self.a.iter().chain(self.b.iter()).chain(self.c.iter()).all(|v| *v == 0.0)
    }

    /// The block matrix `(A B; C -A^T)` whose form is `self`.
    pub fn naive_generator(&self) -> HamiltonianMatrix {
        HamiltonianMatrix { a: self.a.clone(), b: self.b.clone(), c: self.c.clone() }
    }
}

/// Generator of the phase-space flow of `e^{i t q^w}`: `-(1/2pi)` times the
/// block matrix of `q`.
pub fn quadratic_symbol_to_generator(q: &QuadraticForm) -> HamiltonianMatrix {
    q.naive_generator().scaled(-1.0 / (2.0 * PI))
}

/// `e^{t H}` by scaling and squaring around a degree-13 Padé approximant.
pub fn flow(h: &HamiltonianMatrix, t: f64) -> SymplecticMatrix {
    let m = h.assemble() * t;
    let e = expm(&m);
    let s = SymplecticMatrix::new_unchecked(e);
    if s.symplectic_defect() > CLEANUP_TOL {
        s.cleanup()
    } else {
        s
    }
}

/// Matrix exponential (Higham 2005, Padé 13 only).
pub fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    const B: [f64; 14] = [
        64764752532480000.0,
        32382376266240000.0,
        7771770303897600.0,
        1187353796428800.0,
        129060195264000.0,
        10559470521600.0,
        670442572800.0,
        33522128640.0,
        1323241920.0,
        40840800.0,
        960960.0,
        16380.0,
        182.0,
        1.0,
    ];
    const THETA13: f64 = 5.371920351148152;
    let n = a.nrows();
    let id = DMatrix::<f64>::identity(n, n);
    let norm1 = (0..n)
        .map(|j| a.column(j).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let s = if norm1 > THETA13 { (norm1 / THETA13).log2().ceil() as i32 } else { 0 };
    let a = a / 2f64.powi(s);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let u_inner = &a6 * (&a6 * B[13] + &a4 * B[11] + &a2 * B[9]) + &a6 * B[7] + &a4 * B[5] + &a2 * B[3] + &id * B[1];
    let u = &a * u_inner;
    let v = &a6 * (&a6 * B[12] + &a4 * B[10] + &a2 * B[8]) + &a6 * B[6] + &a4 * B[4] + &a2 * B[2] + &id * B[0];
    let p = &v + &u;
    let q = &v - &u;
    let mut r = q.lu().solve(&p).expect("Pade denominator is invertible");
    for _ in 0..s {
        r = &r * &r;
    }
    r
}

/// Elementary symplectic matrices with explicit metaplectic operators (`d = 1`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "param", rename_all = "snake_case")]
pub enum Generator {
    /// `diag(a, 1/a)`
    Dilation(f64),
    /// `(1 0; c 1)`
    Chirp(f64),
    /// `J`
    Fourier,
    /// `J^{-1} = -J`
    InverseFourier,
}

impl Generator {
    pub fn matrix(&self) -> SymplecticMatrix {
        match *self {
            Generator::Dilation(a) => SymplecticMatrix::dilation(a).expect("nonzero dilation"),
            Generator::Chirp(c) => SymplecticMatrix::lower_shear(c),
            Generator::Fourier => SymplecticMatrix::j(1),
            Generator::InverseFourier => SymplecticMatrix::j(1).inverse(),
        }
    }
}

/// Product of a word of generators, leftmost factor outermost.
pub fn word_product(word: &[Generator]) -> SymplecticMatrix {
    word.iter()
        .fold(SymplecticMatrix::identity(1), |acc, g| acc.mul(&g.matrix()))
}

fn push_chirp(word: &mut Vec<Generator>, c: f64) {
    if c.abs() > TRIVIAL {
        word.push(Generator::Chirp(c));
    }
}

fn push_dilation(word: &mut Vec<Generator>, a: f64) {
    if (a - 1.0).abs() > TRIVIAL {
        word.push(Generator::Dilation(a));
    }
}

/// Upper shear `(1 b; 0 1) = J (1 0; -b 1) J^{-1}`; with `negate`, the
/// trailing `J^{-1}` absorbs a factor `-I`.
fn push_upper(word: &mut Vec<Generator>, b: f64, negate: bool) {
    if b.abs() > TRIVIAL {
        word.push(Generator::Fourier);
        word.push(Generator::Chirp(-b));
        word.push(if negate { Generator::Fourier } else { Generator::InverseFourier });
    }
}

/// Writes `m` as a product of at most five generators (`d = 1`).
///
/// Words that avoid a nontrivial dilation are preferred, since dilations are
/// the only generators that need resampling on a grid.
pub fn factor_symplectic(m: &SymplecticMatrix) -> Vec<Generator> {
    assert_eq!(m.dim(), 1, "factorization is implemented for d = 1");
    let (a0, b0, c0, d0) = m.entries();
    // -I commutes with everything; pull it out when the trace is negative.
    let negate = a0 + d0 < 0.0;
    let (a, b, c, d) = if negate { (-a0, -b0, -c0, -d0) } else { (a0, b0, c0, d0) };

    let dilation_word = |negate: bool| -> (Vec<Generator>, f64) {
        let mut w = Vec::new();
        let scale;
        if a.abs() >= b.abs() {
            // (a b; c d) = L(c/a) D(a) U(b/a)
            scale = a;
            push_chirp(&mut w, c / a);
            let has_upper = (b / a).abs() > TRIVIAL;
            let dil = if negate && !has_upper { -a } else { a };
            push_dilation(&mut w, dil);
            push_upper(&mut w, b / a, negate);
        } else {
            // (a b; c d) = L(d/b) D(b) J L(a/b)
            scale = b;
            push_chirp(&mut w, d / b);
            push_dilation(&mut w, if negate { -b } else { b });
            w.push(Generator::Fourier);
            push_chirp(&mut w, a / b);
        }
        (w, scale)
    };

    let (dw, scale) = dilation_word(negate);
    if (scale.abs() - 1.0).abs() <= TRIVIAL {
        return dw;
    }
    if b.abs() > TRIVIAL {
        // (a b; c d) = L((d-1)/b) U(b) L((a-1)/b)
        let g1 = (d - 1.0) / b;
        let g2 = (a - 1.0) / b;
        if g1.abs().max(g2.abs()) <= CHIRP_LIMIT {
            let mut w = Vec::new();
            push_chirp(&mut w, g1);
            push_upper(&mut w, b, negate);
            push_chirp(&mut w, g2);
            return w;
        }
    }
    dw
}

/// `q^w f` for `d = 1`: `-(B/8pi^2) f'' - (iA/4pi)(x f' + (x f)') - (C/2) x^2 f`.
pub fn quadratic_weyl_apply(q: &QuadraticForm, f: &crate::grid::SampledSignal) -> crate::grid::SampledSignal {
    use crate::grid::fourier_multiplier;
    use num_complex::Complex64;
    let (a, b, c) = q.scalars();
    let i = Complex64::new(0.0, 1.0);
    let deriv = |s: &crate::grid::SampledSignal| fourier_multiplier(s, |xi| 2.0 * PI * xi * i);
    let mut out = crate::grid::SampledSignal::zeros(*f.grid());
    if b != 0.0 {
        let f2 = fourier_multiplier(f, |xi| Complex64::new(-4.0 * PI * PI * xi * xi, 0.0));
        out = out.axpy(Complex64::new(-b / (8.0 * PI * PI), 0.0), &f2);
    }
    if a != 0.0 {
        let xf = f.multiply_by(|x| Complex64::new(x, 0.0));
        let sym = deriv(f).multiply_by(|x| Complex64::new(x, 0.0)).axpy(Complex64::new(1.0, 0.0), &deriv(&xf));
        out = out.axpy(-i * a / (4.0 * PI), &sym);
    }
    if c != 0.0 {
        out = out.axpy(Complex64::new(1.0, 0.0), &f.multiply_by(|x| Complex64::new(-0.5 * c * x * x, 0.0)));
    }
    out
}
