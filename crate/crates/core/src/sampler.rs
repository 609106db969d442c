//! Simulated measurement data: binomial shot noise around exact means.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::confidence::MeasurementRecord;
use crate::error::{Error, Result};
use crate::models::LindbladModel;
use crate::oracle::{self, DenseState};
use crate::pauli::{OperatorPoly, Pauli, PauliString};

/// Generator for the shots of observable `index` in `repeat`.
///
/// Every `(repeat, index)` pair owns the ChaCha8 stream
/// `(repeat << 32) | index` under the run seed, so results do not depend on
/// evaluation order or thread count.
pub fn shot_rng(seed: u64, repeat: u32, index: u32) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((repeat as u64) << 32) | index as u64);
    rng
}

/// Empirical mean of `shots` outcomes `±1` with expectation `true_mean`.
pub fn simulate_shots<R: rand::Rng + ?Sized>(true_mean: f64, shots: u64, rng: &mut R) -> f64 {
    let p = ((1.0 + true_mean) / 2.0).clamp(0.0, 1.0);
    // Binomial::new only fails for p outside [0, 1].
    let k = Binomial::new(shots, p).expect("probability in range").sample(rng);
    2.0 * k as f64 / shots as f64 - 1.0
}

/// Which nearest-neighbour pairs carry singlets in a dimerized chain.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DimerCovering {
    /// Bonds (1,2), (3,4), ….
    #[default]
    Even,
    /// Bonds (2,3), …, (n,1).
    Odd,
}

impl DimerCovering {
    pub fn bonds(self, n: usize) -> impl Iterator<Item = (usize, usize)> {
        let off = match self {
            DimerCovering::Even => 0,
            DimerCovering::Odd => 1,
        };
        (0..n / 2).map(move |k| ((2 * k + off) % n, (2 * k + 1 + off) % n))
    }
}

/// `⟨P⟩` in the product of singlets on the chosen bonds: `(−1)^{m/2}` when
/// `P` is a product of same-letter pairs on bonds, zero otherwise.
pub fn mg_true_moment(p: &PauliString, covering: DimerCovering) -> f64 {
    let n = p.num_qubits();
    let mut value = 1.0;
    for (a, b) in covering.bonds(n) {
        match (p.get(a), p.get(b)) {
            (Pauli::I, Pauli::I) => {}
            (x, y) if x == y => value = -value,
            _ => return 0.0,
        }
    }
    value
}

/// Where true expectation values come from.
#[derive(Clone, Debug)]
pub enum ShotSource {
    Exact(DenseState),
    MajumdarGhosh { n: usize, covering: DimerCovering },
}

impl ShotSource {
    /// Ground state of `h` (up to 12 qubits).
    pub fn ground_state(h: &OperatorPoly) -> Result<Self> {
        Ok(ShotSource::Exact(oracle::exact_ground_state(h)?.state))
    }

    /// Stationary state of `model` (up to 6 qubits).
    pub fn steady_state(model: &LindbladModel) -> Result<Self> {
        Ok(ShotSource::Exact(oracle::exact_steady_state(model)?.state))
    }

    pub fn majumdar_ghosh(n: usize, covering: DimerCovering) -> Result<Self> {
        if n < 2 || n % 2 != 0 {
            return Err(Error::Geometry(format!("dimer covering needs an even chain, got {n}")));
        }
        Ok(ShotSource::MajumdarGhosh { n, covering })
    }

    pub fn num_qubits(&self) -> usize {
        match self {
            ShotSource::Exact(s) => s.num_qubits(),
            ShotSource::MajumdarGhosh { n, .. } => *n,
        }
    }

    /// `tr(ρ P)`.
    pub fn true_moment(&self, p: &PauliString) -> Result<f64> {
        if p.num_qubits() != self.num_qubits() {
            return Err(Error::Shape(format!(
                "{}-qubit string for a {}-qubit source",
                p.num_qubits(),
                self.num_qubits()
            )));
        }
        Ok(match self {
            ShotSource::Exact(s) => s.expectation(p),
            ShotSource::MajumdarGhosh { covering, .. } => mg_true_moment(p, *covering),
        })
    }

    /// `tr(ρ O)` for a Hermitian polynomial.
    pub fn true_value(&self, o: &OperatorPoly) -> Result<f64> {
        let mut acc = 0.0;
        for (s, c) in o.real_terms() {
            acc += c * self.true_moment(s)?;
        }
        Ok(acc)
    }
}

/// Simulated records for `observables` (each with spectrum in `[−1, 1]`),
/// observable `i` measured `shots[i]` times.
pub fn simulate_records(
    source: &ShotSource,
    observables: &[OperatorPoly],
    shots: &[u64],
    seed: u64,
    repeat: u32,
) -> Result<Vec<MeasurementRecord>> {
    if observables.len() != shots.len() {
        return Err(Error::Shape(format!("{} observables but {} shot counts", observables.len(), shots.len())));
    }
    observables
        .iter()
        .zip(shots)
        .enumerate()
        .map(|(i, (o, &n))| {
            let truth = source.true_value(o)?.clamp(-1.0, 1.0);
            let mut rng = shot_rng(seed, repeat, i as u32);
            MeasurementRecord::new(o.clone(), n, simulate_shots(truth, n, &mut rng))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ps(s: &str, n: usize) -> PauliString {
        PauliString::parse_sparse(s, n).unwrap()
    }

    #[test]
    fn degenerate_means() {
        let mut rng = shot_rng(1, 0, 0);
        for _ in 0..20 {
            assert_eq!(simulate_shots(1.0, 37, &mut rng), 1.0);
            assert_eq!(simulate_shots(-1.0, 37, &mut rng), -1.0);
        }
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a = simulate_shots(0.1, 1000, &mut shot_rng(9, 3, 4));
        let b = simulate_shots(0.1, 1000, &mut shot_rng(9, 3, 4));
        assert_eq!(a, b);
        let draws: Vec<f64> = (0..8).map(|i| simulate_shots(0.0, 1000, &mut shot_rng(9, 0, i))).collect();
        assert!(draws.windows(2).any(|w| w[0] != w[1]));
    }

    #[test]
    fn mg_rule() {
        let n = 6;
        assert_eq!(mg_true_moment(&ps("X1 X2", n), DimerCovering::Even), -1.0);
        assert_eq!(mg_true_moment(&ps("X1 X3", n), DimerCovering::Even), 0.0);
        assert_eq!(mg_true_moment(&ps("X1 X2 Y3 Y4", n), DimerCovering::Even), 1.0);
        assert_eq!(mg_true_moment(&ps("X2 X3", n), DimerCovering::Even), 0.0);
        assert_eq!(mg_true_moment(&ps("X2 X3", n), DimerCovering::Odd), -1.0);
        assert_eq!(mg_true_moment(&ps("Z6 Z1", n), DimerCovering::Odd), -1.0);
        assert_eq!(mg_true_moment(&PauliString::identity(n), DimerCovering::Even), 1.0);
    }

    #[test]
    fn ground_state_source() {
        let h = OperatorPoly::from_string(ps("Z1", 1), 1.0.into());
        let src = ShotSource::ground_state(&h).unwrap();
        assert!((src.true_moment(&ps("Z1", 1)).unwrap() + 1.0).abs() < 1e-14);
        assert!(src.true_moment(&ps("Z1", 2)).is_err());
    }

    #[test]
    fn records_follow_shot_counts() {
        let src = ShotSource::majumdar_ghosh(4, DimerCovering::Even).unwrap();
        let obs = vec![
            OperatorPoly::from_string(ps("X1 X2", 4), 1.0.into()),
            OperatorPoly::from_string(ps("X1 X3", 4), 1.0.into()),
        ];
        let recs = simulate_records(&src, &obs, &[10, 20], 5, 0).unwrap();
        assert_eq!(recs[0].mean, -1.0);
        assert_eq!(recs[1].shots, 20);
        assert!(simulate_records(&src, &obs, &[10], 5, 0).is_err());
    }
}
