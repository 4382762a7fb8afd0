use nalgebra::{DMatrix, SymmetricEigen};

/// Golub-Welsch: nodes and weights from the Jacobi matrix with off-diagonal
/// `beta` and total mass `mu0`.
fn golub_welsch(beta: impl Fn(usize) -> f64, m: usize, mu0: f64) -> (Vec<f64>, Vec<f64>) {
    let mut j = DMatrix::<f64>::zeros(m, m);
    for k in 1..m {
        let b = beta(k);
        j[(k, k - 1)] = b;
        j[(k - 1, k)] = b;
    }
    let eig = SymmetricEigen::new(j);
    let mut pairs: Vec<(f64, f64)> = (0..m)
        .map(|i| (eig.eigenvalues[i], mu0 * eig.eigenvectors[(0, i)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

/// Gauss-Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    golub_welsch(|k| k as f64 / ((4 * k * k - 1) as f64).sqrt(), m, 2.0)
}

/// Gauss-Hermite rule for the weight `e^{-x^2}`.
pub fn gauss_hermite(m: usize) -> (Vec<f64>, Vec<f64>) {
    golub_welsch(|k| (k as f64 / 2.0).sqrt(), m, std::f64::consts::PI.sqrt())
}

fn legendre_values(x: f64, m: usize) -> Vec<f64> {
    let mut p = vec![1.0, x];
    for i in 1..m {
        let next = ((2 * i + 1) as f64 * x * p[i] - i as f64 * p[i - 1]) / (i + 1) as f64;
        p.push(next);
    }
    p.truncate(m + 1);
    p
}

/// `S[k][j] = int_{-1}^{x_k} l_j(s) ds` for the Lagrange basis `l_j` on `nodes`.
pub fn integration_matrix(nodes: &[f64]) -> DMatrix<f64> {
    let m = nodes.len();
    let mut v = DMatrix::<f64>::zeros(m, m);
    let mut a = DMatrix::<f64>::zeros(m, m);
    for (k, &x) in nodes.iter().enumerate() {
        let p = legendre_values(x, m);
        for i in 0..m {
            v[(k, i)] = p[i];
            // int_{-1}^x P_i = (P_{i+1} - P_{i-1}) / (2i + 1), int P_0 = x + 1
            a[(k, i)] = if i == 0 { x + 1.0 } else { (p[i + 1] - p[i - 1]) / (2 * i + 1) as f64 };
        }
    }
    let vinv = v.try_inverse().expect("Legendre Vandermonde is invertible");
    a * vinv
}
