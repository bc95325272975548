use nalgebra::DMatrix;

/// Entrywise comparison of the zero-mean empirical covariance of `samples`
/// with `sigma`: returns the largest |z| and how many entries exceed `limit`
/// standard errors, using Var(X_i X_j) = Σ_ii Σ_jj + Σ_ij².
pub fn covariance_z(samples: &[Vec<f64>], sigma: &DMatrix<f64>, limit: f64) -> (f64, usize) {
    let n = samples.len();
    let dim = sigma.nrows();
    let x = DMatrix::from_fn(n, dim, |r, c| samples[r][c]);
    let emp = x.transpose() * &x / n as f64;
    let mut worst = 0.0f64;
    let mut exceed = 0;
    for i in 0..dim {
        for j in i..dim {
            let se = ((sigma[(i, i)] * sigma[(j, j)] + sigma[(i, j)].powi(2)) / n as f64).sqrt();
            let z = (emp[(i, j)] - sigma[(i, j)]).abs() / se;
            worst = worst.max(z);
            if z > limit {
                exceed += 1;
            }
        }
    }
    (worst, exceed)
}
