use super::EvalError;
use crate::numerics::{sym_eigendecomposition, NumericsError, Tensor};

/// Eigenvalues down to `-PSD_TOLERANCE` (relative to the largest) count as
/// sampling noise and are clipped to zero.
pub const PSD_TOLERANCE: f64 = 1e-10;

/// Mean and covariance of a sample.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianSummary {
    mean: Vec<f64>,
    /// Row-major `dim × dim`.
    cov: Vec<f64>,
}

impl GaussianSummary {
    pub fn new(mean: Vec<f64>, cov: Vec<f64>) -> Result<Self, EvalError> {
        let d = mean.len();
        if d == 0 {
            return Err(EvalError::Empty("mean"));
        }
        if cov.len() != d * d {
            return Err(EvalError::DimensionMismatch(cov.len(), d * d));
        }
        let scale = cov.iter().fold(1.0f64, |a, v| a.max(v.abs()));
        for i in 0..d {
            for j in (i + 1)..d {
                if (cov[i * d + j] - cov[j * d + i]).abs() > 1e-12 * scale {
                    return Err(EvalError::NotSymmetric { row: i, col: j });
                }
            }
        }
        Ok(Self { mean, cov })
    }

    /// Sample mean and unbiased covariance of `rows` (one observation each).
    pub fn from_samples<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self, EvalError> {
        let n = rows.len();
        if n < 2 {
            return Err(EvalError::Config(format!(
                "need at least two samples for a covariance, got {n}"
            )));
        }
        let d = rows[0].as_ref().len();
        let mut mean = vec![0.0; d];
        for r in rows {
            let r = r.as_ref();
            if r.len() != d {
                return Err(EvalError::DimensionMismatch(r.len(), d));
            }
            for (m, v) in mean.iter_mut().zip(r) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n as f64);
        let mut cov = vec![0.0; d * d];
        for r in rows {
            let r = r.as_ref();
            for i in 0..d {
                let di = r[i] - mean[i];
                for j in i..d {
                    cov[i * d + j] += di * (r[j] - mean[j]);
                }
            }
        }
        for i in 0..d {
            for j in i..d {
                let v = cov[i * d + j] / (n - 1) as f64;
                cov[i * d + j] = v;
                cov[j * d + i] = v;
            }
        }
        Self::new(mean, cov)
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn cov(&self) -> &[f64] {
        &self.cov
    }
}

fn matrix(d: usize, data: Vec<f64>) -> Tensor {
    Tensor::matrix(d, d, data).expect("square by construction")
}

fn matmul(d: usize, a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; d * d];
    for i in 0..d {
        for k in 0..d {
            let aik = a[i * d + k];
            for j in 0..d {
                out[i * d + j] += aik * b[k * d + j];
            }
        }
    }
    out
}

fn symmetrize(d: usize, m: &mut [f64]) {
    for i in 0..d {
        for j in (i + 1)..d {
            let avg = 0.5 * (m[i * d + j] + m[j * d + i]);
            m[i * d + j] = avg;
            m[j * d + i] = avg;
        }
    }
}

/// Clipped eigenvalues; errors if any is negative beyond tolerance.
fn psd_eigen(d: usize, m: Vec<f64>) -> Result<crate::numerics::SymmetricEigen, EvalError> {
    let eig = sym_eigendecomposition(&matrix(d, m)).map_err(|e| match e {
        NumericsError::NotSymmetric { row, col } => EvalError::NotSymmetric { row, col },
        other => other.into(),
    })?;
    let top = eig.eigenvalues.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    if let Some(&low) = eig.eigenvalues.first() {
        if low < -PSD_TOLERANCE * top {
            return Err(EvalError::NotPsd(low));
        }
    }
    Ok(eig)
}

/// `‖μ₁ − μ₂‖² + Tr(Σ₁ + Σ₂ − 2(Σ₁^½ Σ₂ Σ₁^½)^½)`.
pub fn frechet_distance(p: &GaussianSummary, q: &GaussianSummary) -> Result<f64, EvalError> {
    let d = p.dim();
    if q.dim() != d {
        return Err(EvalError::DimensionMismatch(d, q.dim()));
    }
    let mean_term: f64 = p
        .mean
        .iter()
        .zip(&q.mean)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();

    let sqrt_p = psd_eigen(d, p.cov.clone())?.reconstruct_with(|l| l.max(0.0).sqrt());
    // only checks q
    psd_eigen(d, q.cov.clone())?;
    let mut inner = matmul(d, &matmul(d, &sqrt_p, &q.cov), &sqrt_p);
    symmetrize(d, &mut inner);
    let cross: f64 = psd_eigen(d, inner)?
        .eigenvalues
        .iter()
        .map(|l| l.max(0.0).sqrt())
        .sum();
    let trace = |m: &[f64]| (0..d).map(|i| m[i * d + i]).sum::<f64>();
    Ok(mean_term + trace(&p.cov) + trace(&q.cov) - 2.0 * cross)
}
