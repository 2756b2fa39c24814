//! Growth-rate laws of the two bacterial populations.

use crate::error::{Error, Result};

/// Monod rate μ1max·S/(S + K).
pub fn monod(s1: f64, mu1max: f64, k_s1: f64) -> Result<f64> {
    if s1 < 0.0 || s1.is_nan() {
        return Err(Error::domain("monod", format!("negative substrate S1 = {s1}")));
    }
    let denom = s1 + k_s1;
    if denom == 0.0 {
        return Err(Error::domain("monod", "S1 + K_S1 = 0"));
    }
    Ok(mu1max * s1 / denom)
}

/// Haldane rate μ2max·S/(S²/K_I + S + K_S); maximal at S = √(K_S·K_I).
pub fn haldane(s2: f64, mu2max: f64, k_s2: f64, k_i2: f64) -> Result<f64> {
    if s2 < 0.0 || s2.is_nan() {
        return Err(Error::domain("haldane", format!("negative substrate S2 = {s2}")));
    }
    Ok(mu2max * s2 / (s2 * s2 / k_i2 + s2 + k_s2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn zero_substrate_gives_zero_rate() {
        assert_eq!(monod(0.0, 1.2, 12.1).unwrap(), 0.0);
        assert_eq!(haldane(0.0, 3.0, 0.7, 9.0).unwrap(), 0.0);
    }

    #[test]
    fn reference_monod_value() {
        assert_relative_eq!(monod(10.0, 1.2, 12.1).unwrap(), 0.542_986_425_339_366_5, max_relative = 1e-15);
    }

    #[test]
    fn haldane_unit_constants() {
        assert_relative_eq!(haldane(1.0, 1.0, 1.0, 1.0).unwrap(), 1.0 / 3.0, max_relative = 1e-15);
    }

    #[test]
    fn negative_substrate_is_rejected() {
        assert!(monod(-1e-12, 1.2, 12.1).is_err());
        assert!(haldane(-0.5, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn monod_increasing_and_bounded() {
        let mut prev = 0.0;
        for i in 1..2000 {
            let s = 0.05 * i as f64 * (1.0 + i as f64 / 50.0);
            let r = monod(s, 1.2, 12.1).unwrap();
            assert!(r > prev && r < 1.2, "s = {s}");
            prev = r;
        }
        assert!((monod(1e12, 1.2, 12.1).unwrap() - 1.2).abs() < 1e-9);
    }

    fn golden_section_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
        let g = (5f64.sqrt() - 1.0) / 2.0;
        while b - a > 1e-10 * (1.0 + b.abs()) {
            let c = b - g * (b - a);
            let d = a + g * (b - a);
            if f(c) > f(d) {
                b = d;
            } else {
                a = c;
            }
        }
        0.5 * (a + b)
    }

    #[test]
    fn haldane_peak_location() {
        for &(ks, ki) in &[(1.0, 1.0), (0.5, 20.0), (9.3, 256.0), (2.0, 0.3)] {
            let f = |s: f64| haldane(s, 1.7, ks, ki).unwrap();
            let peak = golden_section_max(f, 0.0, 10.0 * (ks * ki).sqrt() + 10.0);
            assert_relative_eq!(peak, (ks * ki).sqrt(), max_relative = 1e-5);
            let top = f((ks * ki).sqrt());
            for i in 0..500 {
                let s = i as f64 * 0.1 * (1.0 + i as f64 / 10.0);
                assert!(f(s) <= top, "s = {s}");
            }
        }
    }
}
