//! Axis-aligned box domains.

use rand::Rng;

use crate::error::{Error, Result};

/// A compact axis-aligned box in `R^d` with per-axis bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Domain {
    /// Build a box from per-axis bounds. Each axis must be finite with
    /// strictly positive side length.
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(Error::DomainViolation(format!(
                "bound vectors must be nonempty and equal length, got {} and {}",
                lower.len(),
                upper.len()
            )));
        }
        for (i, (&lo, &hi)) in lower.iter().zip(&upper).enumerate() {
            if !lo.is_finite() || !hi.is_finite() || lo >= hi {
                return Err(Error::DomainViolation(format!(
                    "axis {i}: need finite lo < hi, got [{lo}, {hi}]"
                )));
            }
        }
        Ok(Domain { lower, upper })
    }

    /// `[0,1]^d`.
    pub fn unit_cube(dim: usize) -> Self {
        Domain {
            lower: vec![0.0; dim],
            upper: vec![1.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(&xi, (&lo, &hi))| xi >= lo && xi <= hi)
    }

    /// Euclidean projection onto the box.
    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(&xi, (&lo, &hi))| xi.clamp(lo, hi))
            .collect()
    }

    /// L2 diameter, the distance between opposite corners.
    pub fn diameter(&self) -> f64 {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(&lo, &hi)| (hi - lo) * (hi - lo))
            .sum::<f64>()
            .sqrt()
    }

    /// Uniform draw from the box.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(&lo, &hi)| rng.random_range(lo..hi))
            .collect()
    }

    /// Map a point of this box to the unit cube.
    pub fn to_unit(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(&xi, (&lo, &hi))| (xi - lo) / (hi - lo))
            .collect()
    }

    /// Map a unit-cube point back into this box.
    pub fn from_unit(&self, u: &[f64]) -> Vec<f64> {
        u.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(&ui, (&lo, &hi))| lo + ui * (hi - lo))
            .collect()
    }
}

/// L2 distance between two points.
pub fn l2_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_degenerate_boxes() {
        assert!(Domain::new(vec![0.0], vec![0.0]).is_err());
        assert!(Domain::new(vec![0.0, 1.0], vec![1.0]).is_err());
        assert!(Domain::new(vec![f64::NAN], vec![1.0]).is_err());
    }

    #[test]
    fn projection_and_containment() {
        let d = Domain::new(vec![-1.0, 0.0], vec![1.0, 2.0]).unwrap();
        assert!(d.contains(&[0.0, 1.0]));
        assert!(!d.contains(&[2.0, 1.0]));
        assert_eq!(d.project(&[5.0, -3.0]), vec![1.0, 0.0]);
        assert!(d.contains(&d.project(&[5.0, -3.0])));
    }

    #[test]
    fn unit_round_trip() {
        let d = Domain::new(vec![-5.0, 0.0], vec![10.0, 15.0]).unwrap();
        let x = [2.5, 7.5];
        let u = d.to_unit(&x);
        let back = d.from_unit(&u);
        assert!(l2_distance(&x, &back) < 1e-12);
        assert!((d.diameter() - (15.0f64 * 15.0 + 15.0 * 15.0).sqrt()).abs() < 1e-12);
    }
}
