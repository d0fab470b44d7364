use super::{NumericsError, Tensor};

pub const DEFAULT_STEP: f64 = 1e-5;

/// Central-difference gradient of `f` at `x`:
/// `(f(x + h·eᵢ) − f(x − h·eᵢ)) / 2h` for every coordinate.
pub fn finite_difference_grad<F>(mut f: F, x: &Tensor, h: f64) -> Result<Tensor, NumericsError>
where
    F: FnMut(&Tensor) -> f64,
{
    if !(h > 0.0 && h.is_finite()) {
        return Err(NumericsError::InvalidHyperparameter(format!(
            "finite-difference step must be positive, got {h}"
        )));
    }
    let mut probe = x.clone();
    let mut grad = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        let original = probe.data()[i];
        probe.data_mut()[i] = original + h;
        let plus = f(&probe);
        probe.data_mut()[i] = original - h;
        let minus = f(&probe);
        probe.data_mut()[i] = original;
        if !plus.is_finite() || !minus.is_finite() {
            return Err(NumericsError::NonFinite("finite-difference evaluation"));
        }
        grad.push((plus - minus) / (2.0 * h));
    }
    Ok(Tensor::from_parts_unchecked(x.shape().to_vec(), grad))
}

/// `‖a − b‖ / max(‖a‖, ‖b‖)`, zero when both vectors vanish.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let diff = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt();
    let scale = a
        .iter()
        .map(|x| x * x)
        .sum::<f64>()
        .sqrt()
        .max(b.iter().map(|x| x * x).sum::<f64>().sqrt());
    if scale == 0.0 {
        0.0
    } else {
        diff / scale
    }
}
