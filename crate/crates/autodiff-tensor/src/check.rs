//! Finite-difference oracle helpers shared by this crate's gradient tests and
//! by downstream model tests.

/// Central-difference gradient of a scalar function, one coordinate at a time.
pub fn central_difference_gradient(
    f: &mut dyn FnMut(&[f64]) -> f64,
    x: &[f64],
    h: f64,
) -> Vec<f64> {
    let mut xs = x.to_vec();
    let mut out = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        let orig = xs[i];
        xs[i] = orig + h;
        let fp = f(&xs);
        xs[i] = orig - h;
        let fm = f(&xs);
        xs[i] = orig;
        out.push((fp - fm) / (2.0 * h));
    }
    out
}

/// Largest elementwise relative error |a−b| / max(floor, |a|, |b|). The floor
/// keeps entries whose true gradient is (near) zero from dividing FD noise by
/// almost nothing.
pub fn max_relative_error(analytic: &[f64], numeric: &[f64], floor: f64) -> f64 {
    assert_eq!(analytic.len(), numeric.len(), "gradient length mismatch");
    analytic
        .iter()
        .zip(numeric)
        .map(|(&a, &b)| (a - b).abs() / floor.max(a.abs()).max(b.abs()))
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_gradient_is_recovered() {
        let mut f = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>();
        let x = [1.0, -2.0, 0.5];
        let g = central_difference_gradient(&mut f, &x, 1e-6);
        let want = [2.0, -4.0, 1.0];
        assert!(max_relative_error(&want, &g, 1e-3) < 1e-9);
    }

    #[test]
    fn relative_error_uses_the_floor_near_zero() {
        let err = max_relative_error(&[0.0], &[1e-9], 1e-3);
        assert!((err - 1e-6).abs() < 1e-18);
    }
}
