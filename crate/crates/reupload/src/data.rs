use std::f64::consts::PI;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{ReuploadError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Problem {
    Circle,
    #[serde(rename = "3circles")]
    ThreeCircles,
    Tricrown,
    Crown,
    #[serde(rename = "nonconvex")]
    NonConvex,
    Sphere,
    Hypersphere,
    Squares,
    #[serde(rename = "wavylines")]
    WavyLines,
}

pub const PROBLEMS: [Problem; 9] = [
    Problem::Circle,
    Problem::ThreeCircles,
    Problem::Tricrown,
    Problem::Crown,
    Problem::NonConvex,
    Problem::Sphere,
    Problem::Hypersphere,
    Problem::Squares,
    Problem::WavyLines,
];

impl std::str::FromStr for Problem {
    type Err = ReuploadError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "circle" => Problem::Circle,
            "3circles" => Problem::ThreeCircles,
            "tricrown" => Problem::Tricrown,
            "crown" => Problem::Crown,
            "nonconvex" => Problem::NonConvex,
            "sphere" => Problem::Sphere,
            "hypersphere" => Problem::Hypersphere,
            "squares" => Problem::Squares,
            "wavylines" => Problem::WavyLines,
            _ => return Err(ReuploadError::UnknownProblem(s.to_string())),
        })
    }
}

const THREE_CIRCLES: [([f64; 2], f64); 3] = [([-1.0, 1.0], 1.0), ([1.0, 0.0], 0.953_865_460_692_829_6), ([-0.5, -0.5], 0.5)];

fn sq(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum()
}

/// Squared radius of the 4-ball whose intersection with `[-1, 1]^4` has half the box volume.
/// The ball pokes out of the box, so this is larger than `4/π`.
pub const HYPERSPHERE_R2: f64 = 1.297_814_954_997_035;

impl Problem {
    pub fn name(self) -> &'static str {
        match self {
            Problem::Circle => "circle",
            Problem::ThreeCircles => "3circles",
            Problem::Tricrown => "tricrown",
            Problem::Crown => "crown",
            Problem::NonConvex => "nonconvex",
            Problem::Sphere => "sphere",
            Problem::Hypersphere => "hypersphere",
            Problem::Squares => "squares",
            Problem::WavyLines => "wavylines",
        }
    }

    pub fn dim(self) -> usize {
        match self {
            Problem::Sphere => 3,
            Problem::Hypersphere => 4,
            _ => 2,
        }
    }

    pub fn classes(self) -> usize {
        match self {
            Problem::ThreeCircles | Problem::Squares | Problem::WavyLines => 4,
            Problem::Tricrown => 3,
            _ => 2,
        }
    }

    pub fn default_train(self) -> usize {
        match self {
            Problem::Sphere => 500,
            Problem::Hypersphere => 1000,
            _ => 200,
        }
    }

    /// Class of a point in `[-1, 1]^d`.
    pub fn label(self, x: &[f64]) -> usize {
        match self {
            Problem::Circle | Problem::Sphere | Problem::Hypersphere => {
                let r2 = match self {
                    Problem::Circle => 2.0 / PI,
                    Problem::Sphere => (3.0 / PI).powf(2.0 / 3.0),
                    _ => HYPERSPHERE_R2,
                };
                usize::from(sq(x) < r2)
            }
            Problem::ThreeCircles => THREE_CIRCLES
                .iter()
                .enumerate()
                .filter(|(_, (c, r))| (x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2) < r * r)
                .map(|(j, _)| j + 1)
                .last()
                .unwrap_or(0),
            Problem::Tricrown => {
                let r2 = sq(x);
                if r2 < 4.0 / (3.0 * PI) {
                    0
                } else if r2 < 8.0 / (3.0 * PI) {
                    1
                } else {
                    2
                }
            }
            Problem::Crown => {
                let r2 = sq(x);
                usize::from(r2 > 0.8 - 2.0 / PI && r2 < 0.8)
            }
            Problem::NonConvex => usize::from(x[1] >= -2.0 * x[0] + 1.5 * (PI * x[0]).sin()),
            Problem::Squares => 2 * usize::from(x[0] > 0.0) + usize::from(x[1] > 0.0),
            Problem::WavyLines => {
                let s = (PI * x[0]).sin();
                2 * usize::from(x[1] > s + x[0]) + usize::from(x[1] > s - x[0])
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Test,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Part {
    pub points: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
}

impl Part {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledDataset {
    pub problem: Problem,
    pub dim: usize,
    pub classes: usize,
    pub train: Part,
    pub test: Part,
}

fn sample(problem: Problem, n: usize, rng: &mut ChaCha8Rng) -> Part {
    let points: Vec<Vec<f64>> = (0..n).map(|_| (0..problem.dim()).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let labels = points.iter().map(|x| problem.label(x)).collect();
    Part { points, labels }
}

/// Uniform points in `[-1, 1]^d`, train part drawn first.
pub fn make_dataset(problem: Problem, n_train: usize, n_test: usize, seed: u64) -> LabeledDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let train = sample(problem, n_train, &mut rng);
    let test = sample(problem, n_test, &mut rng);
    LabeledDataset { problem, dim: problem.dim(), classes: problem.classes(), train, test }
}

impl LabeledDataset {
    /// Rows of `x1..xd,label,split`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let mut header: Vec<String> = (1..=self.dim).map(|i| format!("x{i}")).collect();
        header.extend(["label".into(), "split".into()]);
        wr.write_record(&header)?;
        for (part, name) in [(&self.train, "train"), (&self.test, "test")] {
            for (x, y) in part.points.iter().zip(&part.labels) {
                let mut row: Vec<String> = x.iter().map(|v| v.to_string()).collect();
                row.push(y.to_string());
                row.push(name.into());
                wr.write_record(&row)?;
            }
        }
        wr.flush()?;
        Ok(())
    }
}
