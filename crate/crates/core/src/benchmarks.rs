//! Registry of standard global-optimization test objectives with their
//! literature boxes and best known minima.
//!
//! Boxes and minima follow the usual test-function conventions:
//! Beale on [-4.5, 4.5]^2; Branin on [-5, 10] x [0, 15] with three minimizers
//! and minimum 5/(4 pi); Hartmann6 on [0, 1]^6; Holdertable on [-10, 10]^2;
//! Rosenbrock on [-2.048, 2.048]^d; Six-Hump Camel on [-3, 3] x [-2, 2];
//! Sphere on [-5.12, 5.12]^d. "Cosines" is the separable cosine mixture
//! rescaled to the unit cube,
//! `f(u) = sum_i [ (2 u_i - 1)^2 - 0.1 cos(5 pi (2 u_i - 1)) ]`,
//! with minimum -0.1 d at the cube center.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::domain::Domain;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Beale,
    Branin,
    Cosines,
    Hartmann6,
    Holdertable,
    Rosenbrock,
    SixHumpCamel,
    Sphere,
}

/// A benchmark objective: evaluation map, box, and known-minimum metadata.
#[derive(Debug, Clone)]
pub struct Benchmark {
    kind: Kind,
    name: String,
    dim: usize,
    domain: Domain,
    f_min: f64,
    minimizers: Vec<Vec<f64>>,
}

const HARTMANN6_ALPHA: [f64; 4] = [1.0, 1.2, 3.0, 3.2];
const HARTMANN6_A: [[f64; 6]; 4] = [
    [10.0, 3.0, 17.0, 3.5, 1.7, 8.0],
    [0.05, 10.0, 17.0, 0.1, 8.0, 14.0],
    [3.0, 3.5, 1.7, 10.0, 17.0, 8.0],
    [17.0, 8.0, 0.05, 10.0, 0.1, 14.0],
];
const HARTMANN6_P: [[f64; 6]; 4] = [
    [0.1312, 0.1696, 0.5569, 0.0124, 0.8283, 0.5886],
    [0.2329, 0.4135, 0.8307, 0.3736, 0.1004, 0.9991],
    [0.2348, 0.1451, 0.3522, 0.2883, 0.3047, 0.6650],
    [0.4047, 0.8828, 0.8732, 0.5743, 0.1091, 0.0381],
];

impl Benchmark {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    /// Best known minimum value.
    pub fn f_min(&self) -> f64 {
        self.f_min
    }

    /// Known minimizers (may be empty when no closed form is listed).
    pub fn minimizers(&self) -> &[Vec<f64>] {
        &self.minimizers
    }

    /// Exact objective value; panics on a dimension mismatch only through
    /// slice indexing, callers go through [`Benchmark::observe`] for checks.
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self.kind {
            Kind::Beale => {
                let (a, b) = (x[0], x[1]);
                (1.5 - a + a * b).powi(2)
                    + (2.25 - a + a * b * b).powi(2)
                    + (2.625 - a + a * b * b * b).powi(2)
            }
            Kind::Branin => {
                let (x1, x2) = (x[0], x[1]);
                let b = 5.1 / (4.0 * PI * PI);
                let c = 5.0 / PI;
                let t = 1.0 / (8.0 * PI);
                (x2 - b * x1 * x1 + c * x1 - 6.0).powi(2) + 10.0 * (1.0 - t) * x1.cos() + 10.0
            }
            Kind::Cosines => x
                .iter()
                .map(|&u| {
                    let v = 2.0 * u - 1.0;
                    v * v - 0.1 * (5.0 * PI * v).cos()
                })
                .sum(),
            Kind::Hartmann6 => {
                let mut total = 0.0;
                for i in 0..4 {
                    let mut inner = 0.0;
                    for (j, &xj) in x.iter().enumerate() {
                        inner += HARTMANN6_A[i][j] * (xj - HARTMANN6_P[i][j]).powi(2);
                    }
                    total -= HARTMANN6_ALPHA[i] * (-inner).exp();
                }
                total
            }
            Kind::Holdertable => {
                let (x1, x2) = (x[0], x[1]);
                let r = (x1 * x1 + x2 * x2).sqrt();
                -(x1.sin() * x2.cos() * (1.0 - r / PI).abs().exp()).abs()
            }
            Kind::Rosenbrock => x
                .windows(2)
                .map(|w| 100.0 * (w[1] - w[0] * w[0]).powi(2) + (1.0 - w[0]).powi(2))
                .sum(),
            Kind::SixHumpCamel => {
                let (a, b) = (x[0], x[1]);
                (4.0 - 2.1 * a * a + a.powi(4) / 3.0) * a * a
                    + a * b
                    + (-4.0 + 4.0 * b * b) * b * b
            }
            Kind::Sphere => x.iter().map(|v| v * v).sum(),
        }
    }

    /// Noisy observation `f(x) + sigma_n * eps`, `eps ~ N(0, 1)`;
    /// `sigma_n = 0` returns the exact value without touching the stream.
    pub fn observe<R: Rng>(&self, x: &[f64], sigma_n: f64, rng: &mut R) -> Result<f64> {
        if !self.domain.contains(x) {
            return Err(Error::DomainViolation(format!(
                "{:?} outside {} domain",
                x,
                self.name
            )));
        }
        let f = self.eval(x);
        if sigma_n == 0.0 {
            Ok(f)
        } else {
            let eps: f64 = rng.sample(StandardNormal);
            Ok(f + sigma_n * eps)
        }
    }

    /// Printable closed form.
    pub fn formula(&self) -> &'static str {
        match self.kind {
            Kind::Beale => {
                "(1.5 - x + x y)^2 + (2.25 - x + x y^2)^2 + (2.625 - x + x y^3)^2"
            }
            Kind::Branin => {
                "(y - 5.1 x^2/(4 pi^2) + 5 x/pi - 6)^2 + 10 (1 - 1/(8 pi)) cos(x) + 10"
            }
            Kind::Cosines => "sum_i (2 u_i - 1)^2 - 0.1 cos(5 pi (2 u_i - 1)), u in [0,1]^d",
            Kind::Hartmann6 => "-sum_i alpha_i exp(-sum_j A_ij (x_j - P_ij)^2)",
            Kind::Holdertable => "-|sin(x) cos(y) exp(|1 - sqrt(x^2 + y^2)/pi|)|",
            Kind::Rosenbrock => "sum_i 100 (x_{i+1} - x_i^2)^2 + (1 - x_i)^2",
            Kind::SixHumpCamel => {
                "(4 - 2.1 x^2 + x^4/3) x^2 + x y + (-4 + 4 y^2) y^2"
            }
            Kind::Sphere => "sum_i x_i^2",
        }
    }
}

fn make(kind: Kind, dim: usize) -> Benchmark {
    match kind {
        Kind::Beale => Benchmark {
            kind,
            name: "beale".into(),
            dim: 2,
            domain: Domain::new(vec![-4.5, -4.5], vec![4.5, 4.5]).unwrap(),
            f_min: 0.0,
            minimizers: vec![vec![3.0, 0.5]],
        },
        Kind::Branin => Benchmark {
            kind,
            name: "branin".into(),
            dim: 2,
            domain: Domain::new(vec![-5.0, 0.0], vec![10.0, 15.0]).unwrap(),
            f_min: 5.0 / (4.0 * PI),
            minimizers: vec![
                vec![-PI, 12.275],
                vec![PI, 2.275],
                vec![3.0 * PI, 2.475],
            ],
        },
        Kind::Cosines => Benchmark {
            kind,
            name: format!("cosines{dim}"),
            dim,
            domain: Domain::unit_cube(dim),
            f_min: -0.1 * dim as f64,
            minimizers: vec![vec![0.5; dim]],
        },
        Kind::Hartmann6 => Benchmark {
            kind,
            name: "hartmann6".into(),
            dim: 6,
            domain: Domain::unit_cube(6),
            f_min: -3.32236801141551,
            minimizers: vec![vec![
                0.20168952, 0.15001069, 0.47687398, 0.27533243, 0.31165162, 0.65730054,
            ]],
        },
        Kind::Holdertable => Benchmark {
            kind,
            name: "holdertable".into(),
            dim: 2,
            domain: Domain::new(vec![-10.0, -10.0], vec![10.0, 10.0]).unwrap(),
            f_min: -19.208502567886732,
            minimizers: vec![
                vec![8.055023472141116, 9.664590028909654],
                vec![-8.055023472141116, 9.664590028909654],
                vec![8.055023472141116, -9.664590028909654],
                vec![-8.055023472141116, -9.664590028909654],
            ],
        },
        Kind::Rosenbrock => Benchmark {
            kind,
            name: format!("rosenbrock{dim}"),
            dim,
            domain: Domain::new(vec![-2.048; dim], vec![2.048; dim]).unwrap(),
            f_min: 0.0,
            minimizers: vec![vec![1.0; dim]],
        },
        Kind::SixHumpCamel => Benchmark {
            kind,
            name: "sixhumpcamel".into(),
            dim: 2,
            domain: Domain::new(vec![-3.0, -2.0], vec![3.0, 2.0]).unwrap(),
            f_min: -1.0316284534898774,
            minimizers: vec![
                vec![0.08984201368301331, -0.7126564032704135],
                vec![-0.08984201368301331, 0.7126564032704135],
            ],
        },
        Kind::Sphere => Benchmark {
            kind,
            name: format!("sphere{dim}"),
            dim,
            domain: Domain::new(vec![-5.12; dim], vec![5.12; dim]).unwrap(),
            f_min: 0.0,
            minimizers: vec![vec![0.0; dim]],
        },
    }
}

/// Look up a benchmark. `dim` is required for `cosines` (2 or 8) and
/// optional for `sphere`/`rosenbrock` (default 2); other names pin their own
/// dimension. Name suffixes like `cosines8` select the dimension directly.
pub fn get_benchmark(name: &str, dim: Option<usize>) -> Result<Benchmark> {
    let lower = name.to_ascii_lowercase();
    match lower.as_str() {
        "beale" => Ok(make(Kind::Beale, 2)),
        "branin" => Ok(make(Kind::Branin, 2)),
        "hartmann6" | "hartmann6d" => Ok(make(Kind::Hartmann6, 6)),
        "holdertable" => Ok(make(Kind::Holdertable, 2)),
        "sixhumpcamel" => Ok(make(Kind::SixHumpCamel, 2)),
        "cosines" => match dim {
            Some(d @ (2 | 8)) => Ok(make(Kind::Cosines, d)),
            Some(d) => Err(Error::Config(format!("cosines supports dim 2 or 8, got {d}"))),
            None => Err(Error::Config("cosines needs an explicit dim (2 or 8)".into())),
        },
        "cosines2" => Ok(make(Kind::Cosines, 2)),
        "cosines8" => Ok(make(Kind::Cosines, 8)),
        "sphere" => {
            let d = dim.unwrap_or(2);
            if d == 0 {
                return Err(Error::Config("sphere needs dim >= 1".into()));
            }
            Ok(make(Kind::Sphere, d))
        }
        "sphere2" => Ok(make(Kind::Sphere, 2)),
        "rosenbrock" => {
            let d = dim.unwrap_or(2);
            if d < 2 {
                return Err(Error::Config("rosenbrock needs dim >= 2".into()));
            }
            Ok(make(Kind::Rosenbrock, d))
        }
        "rosenbrock2" => Ok(make(Kind::Rosenbrock, 2)),
        _ => Err(Error::UnknownBenchmark(name.to_string())),
    }
}

/// The nine standard instances, in registry order.
pub fn list() -> Vec<Benchmark> {
    vec![
        make(Kind::Beale, 2),
        make(Kind::Branin, 2),
        make(Kind::Cosines, 2),
        make(Kind::Cosines, 8),
        make(Kind::Hartmann6, 6),
        make(Kind::Holdertable, 2),
        make(Kind::Rosenbrock, 2),
        make(Kind::SixHumpCamel, 2),
        make(Kind::Sphere, 2),
    ]
}
