use qsim::C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{ReuploadError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    Relu,
    Tanh,
    Step,
    Poly,
    Himmelblau,
    Brent,
    Threehump,
    Adjiman,
}

pub const TARGETS: [Target; 8] = [
    Target::Relu,
    Target::Tanh,
    Target::Step,
    Target::Poly,
    Target::Himmelblau,
    Target::Brent,
    Target::Threehump,
    Target::Adjiman,
];

impl std::str::FromStr for Target {
    type Err = ReuploadError;

    fn from_str(s: &str) -> Result<Self> {
        TARGETS.into_iter().find(|t| t.name() == s).ok_or_else(|| ReuploadError::UnknownTarget(s.to_string()))
    }
}

impl Target {
    pub fn name(self) -> &'static str {
        match self {
            Target::Relu => "relu",
            Target::Tanh => "tanh",
            Target::Step => "step",
            Target::Poly => "poly",
            Target::Himmelblau => "himmelblau",
            Target::Brent => "brent",
            Target::Threehump => "threehump",
            Target::Adjiman => "adjiman",
        }
    }

    pub fn dim(self) -> usize {
        match self {
            Target::Relu | Target::Tanh | Target::Step | Target::Poly => 1,
            _ => 2,
        }
    }

    /// Half-width of the square domain.
    pub fn half_width(self) -> f64 {
        if self.dim() == 1 {
            1.0
        } else {
            5.0
        }
    }

    /// Function value before rescaling, at a point of the native domain.
    pub fn raw(self, p: &[f64]) -> f64 {
        let x = p[0];
        match self {
            Target::Relu => x.max(0.0),
            Target::Tanh => (5.0 * x).tanh(),
            Target::Step => {
                if x == 0.0 {
                    0.0
                } else {
                    x.signum()
                }
            }
            Target::Poly => (3.0 * x.powi(3) * (1.0 - x.powi(4))).abs(),
            Target::Himmelblau => {
                let y = p[1];
                (x * x + y - 11.0).powi(2) + (x + y * y - 7.0).powi(2)
            }
            Target::Brent => {
                let (u, v) = (x / 2.0, p[1] / 2.0);
                u * u + v * v + (-((u - 5.0).powi(2) + (v - 5.0).powi(2))).exp()
            }
            Target::Threehump => {
                let (u, v) = (2.0 * x / 5.0, 2.0 * p[1] / 5.0);
                2.0 * u * u - 1.05 * u.powi(4) + u.powi(6) / 6.0 + u * v + v * v
            }
            Target::Adjiman => {
                let y = p[1];
                x.cos() * y.sin() - x / (y * y + 1.0)
            }
        }
    }

    /// Points of the domain grid used for rescaling: 201 per axis.
    fn grid(self) -> Vec<Vec<f64>> {
        let h = self.half_width();
        let axis: Vec<f64> = (0..201).map(|i| -h + 2.0 * h * i as f64 / 200.0).collect();
        if self.dim() == 1 {
            axis.iter().map(|&x| vec![x]).collect()
        } else {
            axis.iter().flat_map(|&x| axis.iter().map(move |&y| vec![x, y])).collect()
        }
    }
}

/// A target rescaled affinely onto `[-1, 1]` using its extrema on the domain grid, and
/// evaluated at model inputs in `[-1, 1]^d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normalized {
    pub target: Target,
    pub lo: f64,
    pub hi: f64,
}

impl Normalized {
    pub fn new(target: Target) -> Self {
        let (lo, hi) = target
            .grid()
            .iter()
            .map(|p| target.raw(p))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
        Normalized { target, lo, hi }
    }

    pub fn eval(&self, u: &[f64]) -> f64 {
        let h = self.target.half_width();
        let p: Vec<f64> = u.iter().map(|v| v * h).collect();
        let v = self.target.raw(&p);
        (2.0 * (v - self.lo) / (self.hi - self.lo) - 1.0).clamp(-1.0, 1.0)
    }
}

/// Real and imaginary parts from two normalized targets, scaled so that the largest
/// modulus on the grid is 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexTarget {
    pub re: Normalized,
    pub im: Normalized,
    pub scale: f64,
}

impl ComplexTarget {
    pub fn new(re: Target, im: Target) -> Result<Self> {
        if re.dim() != 1 || im.dim() != 1 {
            return Err(ReuploadError::Config("complex targets are one-dimensional".into()));
        }
        let (re, im) = (Normalized::new(re), Normalized::new(im));
        let max = (0..201)
            .map(|i| {
                let x = [-1.0 + i as f64 / 100.0];
                C64::new(re.eval(&x), im.eval(&x)).norm()
            })
            .fold(0.0, f64::max);
        Ok(ComplexTarget { re, im, scale: if max > 1.0 { 1.0 / max } else { 1.0 } })
    }

    pub fn eval(&self, x: f64) -> C64 {
        C64::new(self.re.eval(&[x]), self.im.eval(&[x])) * self.scale
    }
}

/// Training inputs: an evenly spaced grid on `[-1, 1]` in 1D, uniform random points
/// in `[-1, 1]^2` otherwise.
pub fn sample_inputs(dim: usize, n: usize, seed: u64) -> Vec<Vec<f64>> {
    if dim == 1 {
        let step = if n > 1 { 2.0 / (n - 1) as f64 } else { 0.0 };
        return (0..n).map(|i| vec![-1.0 + step * i as f64]).collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect()).collect()
}
