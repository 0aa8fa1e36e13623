use crate::error::{Error, Result};
use crate::numerics::Tensor;

/// Central-difference gradient `(g(x + h e_i) - g(x - h e_i)) / 2h`.
pub fn finite_diff_gradient<G>(g: G, x: &Tensor, h: f64) -> Result<Tensor>
where
    G: Fn(&Tensor) -> f64,
{
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::config(format!("step size must be positive, got {h}")));
    }
    let mut probe = x.clone();
    let mut grad = Tensor::zeros(x.shape());
    for i in 0..x.len() {
        let orig = x.values()[i];
        probe.values_mut()[i] = orig + h;
        let plus = g(&probe);
        probe.values_mut()[i] = orig - h;
        let minus = g(&probe);
        probe.values_mut()[i] = orig;
        if !plus.is_finite() || !minus.is_finite() {
            return Err(Error::NonFinite {
                context: format!("finite difference at coordinate {i}"),
            });
        }
        grad.values_mut()[i] = (plus - minus) / (2.0 * h);
    }
    Ok(grad)
}

/// Largest `|a - b| / max(|a|, |b|, floor)` over paired entries.
///
/// `floor` keeps near-zero entries from producing huge ratios out of
/// rounding noise.
pub fn max_relative_error(a: &[f64], b: &[f64], floor: f64) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(floor))
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic() {
        let x = Tensor::new(vec![2], vec![1.0, 2.0]).unwrap();
        let g = finite_diff_gradient(|t| t.values().iter().map(|v| v * v).sum(), &x, 1e-4).unwrap();
        assert!((g.values()[0] - 2.0).abs() < 1e-6);
        assert!((g.values()[1] - 4.0).abs() < 1e-6);
    }

    #[test]
    fn constant_function() {
        let x = Tensor::new(vec![3], vec![0.5, -1.0, 2.0]).unwrap();
        let g = finite_diff_gradient(|_| 4.2, &x, 1e-3).unwrap();
        assert!(g.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn rejects_non_finite() {
        let x = Tensor::new(vec![1], vec![0.0]).unwrap();
        assert!(finite_diff_gradient(|_| f64::NAN, &x, 1e-3).is_err());
        assert!(finite_diff_gradient(|_| 1.0, &x, 0.0).is_err());
    }
}
