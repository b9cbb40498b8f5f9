use serde::{Deserialize, Serialize};

/// One-dimensional quadrature rule applied per axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Quadrature {
    #[default]
    Trapezoid,
    /// Composite Simpson; with an even sample count the last three intervals use the 3/8 rule.
    Simpson,
}

/// Weights for `n` equally spaced samples with spacing `h`.
pub fn weights(n: usize, h: f64, rule: Quadrature) -> Vec<f64> {
    assert!(n >= 2, "quadrature needs at least two samples");
    let mut w = vec![0.0; n];
    match rule {
        Quadrature::Trapezoid => {
            w.iter_mut().for_each(|v| *v = h);
            w[0] = 0.5 * h;
            w[n - 1] = 0.5 * h;
        }
        Quadrature::Simpson if n < 3 => return weights(n, h, Quadrature::Trapezoid),
        Quadrature::Simpson => {
            let simpson_end = if n % 2 == 1 { n - 1 } else { n - 4 };
            for i in (0..simpson_end).step_by(2) {
                w[i] += h / 3.0;
                w[i + 1] += 4.0 * h / 3.0;
                w[i + 2] += h / 3.0;
            }
            if n % 2 == 0 {
                let s = simpson_end;
                let c = 3.0 * h / 8.0;
                w[s] += c;
                w[s + 1] += 3.0 * c;
                w[s + 2] += 3.0 * c;
                w[s + 3] += c;
            }
        }
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;

    fn integrate(n: usize, rule: Quadrature, f: impl Fn(f64) -> f64) -> f64 {
        let h = 1.0 / (n - 1) as f64;
        weights(n, h, rule).iter().enumerate().map(|(i, w)| w * f(i as f64 * h)).sum()
    }

    #[test]
    fn weights_sum_to_length() {
        for n in 3..12 {
            for rule in [Quadrature::Trapezoid, Quadrature::Simpson] {
                let s: f64 = weights(n, 0.1, rule).iter().sum();
                assert!((s - 0.1 * (n - 1) as f64).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn simpson_exact_on_cubics() {
        for n in [3, 4, 5, 8, 9] {
            let v = integrate(n, Quadrature::Simpson, |x| x * x * x - 2.0 * x * x + 1.0);
            assert!((v - (0.25 - 2.0 / 3.0 + 1.0)).abs() < 1e-14, "n={n}");
        }
    }

    #[test]
    fn trapezoid_second_order() {
        let f = |x: f64| (std::f64::consts::PI * x).sin();
        let exact = 2.0 / std::f64::consts::PI;
        let e1 = (integrate(33, Quadrature::Trapezoid, f) - exact).abs();
        let e2 = (integrate(65, Quadrature::Trapezoid, f) - exact).abs();
        assert!((e1 / e2 - 4.0).abs() < 0.05);
    }
}
