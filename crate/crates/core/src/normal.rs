//! Standard normal density and distribution function.

use std::f64::consts::PI;

const SQRT_2: f64 = std::f64::consts::SQRT_2;

/// Standard normal pdf.
pub fn norm_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

/// Standard normal cdf, computed through the complementary error function
/// so it stays accurate far into the tails.
pub fn norm_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / SQRT_2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cdf_reference_values() {
        // Reference values from mpmath (50 digits), absolute tolerance 1e-13.
        let cases = [
            (0.0, 0.5),
            (1.0, 0.8413447460685429),
            (-1.0, 0.15865525393145705),
            (2.0, 0.9772498680518208),
            (-3.5, 0.00023262907903552502),
            (5.0, 0.9999997133484281),
            (-8.0, 6.220960574271782e-16),
        ];
        for (z, expected) in cases {
            assert!(
                (norm_cdf(z) - expected).abs() < 1e-13,
                "cdf({z}) = {} != {expected}",
                norm_cdf(z)
            );
        }
    }

    #[test]
    fn pdf_reference_values() {
        assert!((norm_pdf(0.0) - 0.3989422804014327).abs() < 1e-15);
        assert!((norm_pdf(1.0) - 0.24197072451914337).abs() < 1e-15);
    }

    #[test]
    fn cdf_is_monotone_and_bounded() {
        let mut prev = 0.0;
        let mut z = -40.0;
        while z <= 40.0 {
            let c = norm_cdf(z);
            assert!((0.0..=1.0).contains(&c));
            assert!(c >= prev);
            prev = c;
            z += 0.25;
        }
    }
}
