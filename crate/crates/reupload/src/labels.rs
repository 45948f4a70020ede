use qsim::C64;
use serde::{Deserialize, Serialize};

use crate::{ReuploadError, Result};

/// Single-qubit label states given by unit Bloch vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelSet {
    pub bloch: Vec<[f64; 3]>,
}

impl LabelSet {
    /// Maximally spread label states for 2, 3, 4 or 6 classes.
    pub fn for_classes(classes: usize) -> Result<Self> {
        let third = 2.0 * std::f64::consts::PI / 3.0;
        let bloch = match classes {
            2 => vec![[0.0, 0.0, 1.0], [0.0, 0.0, -1.0]],
            3 => (0..3).map(|k| [(k as f64 * third).cos(), (k as f64 * third).sin(), 0.0]).collect(),
            4 => {
                let s = (8.0f64 / 9.0).sqrt();
                let mut v = vec![[0.0, 0.0, 1.0]];
                v.extend((0..3).map(|k| [s * (k as f64 * third).cos(), s * (k as f64 * third).sin(), -1.0 / 3.0]));
                v
            }
            6 => vec![
                [0.0, 0.0, 1.0],
                [0.0, 0.0, -1.0],
                [1.0, 0.0, 0.0],
                [-1.0, 0.0, 0.0],
                [0.0, 1.0, 0.0],
                [0.0, -1.0, 0.0],
            ],
            n => return Err(ReuploadError::Labels(format!("no label set for {n} classes"))),
        };
        Ok(LabelSet { bloch })
    }

    pub fn classes(&self) -> usize {
        self.bloch.len()
    }

    /// `cos(θ/2)|0⟩ + e^{iφ} sin(θ/2)|1⟩` for label `j`.
    pub fn state(&self, j: usize) -> [C64; 2] {
        let [x, y, z] = self.bloch[j];
        let theta = z.clamp(-1.0, 1.0).acos();
        let phi = y.atan2(x);
        [C64::new((theta / 2.0).cos(), 0.0), C64::from_polar((theta / 2.0).sin(), phi)]
    }

    /// `⟨φ_j|ρ|φ_j⟩` for a qubit with Bloch vector `r`.
    pub fn fidelity(&self, j: usize, r: &[f64; 3]) -> f64 {
        let n = self.bloch[j];
        0.5 * (1.0 + n[0] * r[0] + n[1] * r[1] + n[2] * r[2])
    }

    pub fn overlap(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (self.state(i), self.state(j));
        (a[0].conj() * b[0] + a[1].conj() * b[1]).norm_sqr()
    }

    /// Row `y` of the overlap matrix; entry `y` is 1.
    pub fn target(&self, y: usize) -> Vec<f64> {
        (0..self.classes()).map(|j| if j == y { 1.0 } else { self.overlap(y, j) }).collect()
    }

    pub fn overlap_matrix(&self) -> Vec<Vec<f64>> {
        (0..self.classes()).map(|y| self.target(y)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_fidelities() {
        for (c, f) in [(2, 0.0), (3, 0.25), (4, 1.0 / 3.0)] {
            let l = LabelSet::for_classes(c).unwrap();
            for i in 0..c {
                assert!((l.overlap(i, i) - 1.0).abs() < 1e-12);
                for j in 0..c {
                    if i != j {
                        assert!((l.overlap(i, j) - f).abs() < 1e-10, "{c}: {i}{j}");
                    }
                }
            }
        }
        let o = LabelSet::for_classes(6).unwrap();
        assert!(o.overlap(0, 1) < 1e-12 && o.overlap(2, 3) < 1e-12);
        assert!((o.overlap(0, 2) - 0.5).abs() < 1e-10 && (o.overlap(3, 5) - 0.5).abs() < 1e-10);
        assert!(LabelSet::for_classes(5).is_err());
    }

    #[test]
    fn tetrahedron_target_vector() {
        let l = LabelSet::for_classes(4).unwrap();
        let t = l.target(2);
        assert_eq!(t[2], 1.0);
        for j in [0, 1, 3] {
            assert!((t[j] - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn bloch_fidelity_matches_states() {
        let l = LabelSet::for_classes(4).unwrap();
        for j in 0..4 {
            assert!((l.fidelity(j, &l.bloch[j]) - 1.0).abs() < 1e-12);
            assert!((l.fidelity(j, &l.bloch[(j + 1) % 4]) - 1.0 / 3.0).abs() < 1e-12);
        }
    }
}
