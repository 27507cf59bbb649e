//! Composite Simpson quadrature for reference integrals in tests.

/// Integrate `f` over [a, b] with `n` panels (n rounded up to even).
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = if n.is_multiple_of(2) { n } else { n + 1 };
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + k as f64 * h);
    }
    acc * h / 3.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_polynomial_exactly() {
        // Simpson is exact for cubics
        let v = simpson(|x| x * x * x - 2.0 * x + 1.0, 0.0, 2.0, 10);
        assert!((v - (4.0 - 4.0 + 2.0)).abs() < 1e-12);
    }

    #[test]
    fn integrates_exponential() {
        let v = simpson(|x| (-x).exp(), 0.0, 30.0, 4000);
        assert!((v - 1.0).abs() < 1e-9);
    }
}
