//! Closed-form gate counts for the unary and binary pricing circuits, and tallies of
//! the circuits this crate actually builds.

use market::PriceGrid;
use qsim::Tally;
use serde::{Deserialize, Serialize};

use crate::{build_bundle, Native, Result, UnaryBundle};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Representation {
    Unary,
    Binary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Block {
    Distributor,
    Payoff,
    SPsi0,
    S0,
}

pub const BLOCKS: [Block; 4] = [Block::Distributor, Block::Payoff, Block::SPsi0, Block::S0];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateCountModel {
    pub representation: Representation,
    pub native: Native,
    /// Bins for unary, register qubits for binary.
    pub n: f64,
    pub kappa: f64,
    /// qGAN layers, binary only.
    pub l: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Counts {
    pub one_qubit: f64,
    pub two_qubit: f64,
    pub depth: f64,
}

impl Counts {
    const fn new(one_qubit: f64, two_qubit: f64, depth: f64) -> Self {
        Counts { one_qubit, two_qubit, depth }
    }

    pub fn total(&self) -> f64 {
        self.one_qubit + self.two_qubit
    }

    fn scaled(self, k: f64) -> Self {
        Counts::new(k * self.one_qubit, k * self.two_qubit, k * self.depth)
    }

    fn add(self, o: Self) -> Self {
        Counts::new(self.one_qubit + o.one_qubit, self.two_qubit + o.two_qubit, self.depth + o.depth)
    }

    pub fn rounded(&self) -> Tally {
        Tally {
            one_qubit: self.one_qubit.round().max(0.0) as usize,
            two_qubit: self.two_qubit.round().max(0.0) as usize,
            depth: self.depth.round().max(0.0) as usize,
        }
    }
}

fn unary_row(native: Native, block: Block, n: f64, k: f64) -> Counts {
    match (native, block) {
        (Native::Cnot, Block::Distributor) => Counts::new(2.0 * n, 4.0 * n, 3.0 * n),
        (Native::Cnot, Block::Payoff) => Counts::new(2.0 * k * n, 2.0 * k * n, 4.0 * k * n),
        (Native::Cnot, Block::S0) => Counts::new(4.0, 1.0, 5.0),
        (Native::PartialIswap, Block::Distributor) => Counts::new(1.0, n, n / 2.0),
        (Native::PartialIswap, Block::Payoff) => Counts::new(10.0 * k * n, 5.0 * k * n, 15.0 * k * n),
        (Native::PartialIswap, Block::S0) => Counts::new(9.0, 2.0, 10.0),
        (_, Block::SPsi0) => Counts::new(1.0, 0.0, 1.0),
        (Native::Best, Block::Distributor) => unary_row(Native::PartialIswap, block, n, k),
        (Native::Best, _) => unary_row(Native::Cnot, block, n, k),
        (Native::Abstract, _) => unary_row(Native::Cnot, block, n, k),
    }
}

fn binary_row(native: Native, block: Block, n: f64, k: f64, l: f64) -> Counts {
    match (native, block) {
        (Native::Cnot, Block::Distributor) => Counts::new(3.0 * n * l, n * l, n * l + l),
        (Native::Cnot, Block::Payoff) => Counts::new((16.0 + 5.0 * k) * n, 14.0 * n, (27.0 + 2.0 * k) * n),
        (Native::Cnot, Block::S0) => Counts::new(20.0 * n - 23.0, 12.0 * n - 18.0, 24.0 * n - 30.0),
        (Native::PartialIswap, Block::Distributor) => Counts::new(8.0 * n * l, 2.0 * n * l, 6.0 * n * l + l),
        (Native::PartialIswap, Block::Payoff) => Counts::new((86.0 + 5.0 * k) * n, 28.0 * n, (97.0 + 2.0 * k) * n),
        (Native::PartialIswap, Block::S0) => Counts::new(80.0 * n - 113.0, 24.0 * n - 36.0, 90.0 * n - 129.0),
        (_, Block::SPsi0) => Counts::new(1.0, 0.0, 1.0),
        (Native::Best, _) => {
            let a = binary_row(Native::Cnot, block, n, k, l);
            let b = binary_row(Native::PartialIswap, block, n, k, l);
            if a.total() <= b.total() { a } else { b }
        }
        (Native::Abstract, _) => binary_row(Native::Cnot, block, n, k, l),
    }
}

/// Table value for one block.
pub fn block_counts(model: &GateCountModel, block: Block) -> Counts {
    match model.representation {
        Representation::Unary => unary_row(model.native, block, model.n, model.kappa),
        Representation::Binary => binary_row(model.native, block, model.n, model.kappa, model.l),
    }
}

/// A = D + C+R. For unary BEST this is `(4k+1)n + 1` gates.
pub fn a_counts(model: &GateCountModel) -> Counts {
    block_counts(model, Block::Distributor).add(block_counts(model, Block::Payoff))
}

/// Closed form of the unary BEST combination: total gates and depth of A.
pub fn best_unary_closed_form(n: f64, kappa: f64) -> (f64, f64) {
    ((4.0 * kappa + 1.0) * n + 1.0, (4.0 * kappa + 0.5) * n)
}

/// Whole algorithm with `m` Grover steps: A appears 2m+1 times, each reflection m times.
pub fn full_counts(model: &GateCountModel, m: usize) -> Counts {
    let m = m as f64;
    let refl = block_counts(model, Block::SPsi0).add(block_counts(model, Block::S0));
    a_counts(model).scaled(2.0 * m + 1.0).add(refl.scaled(m))
}

/// Register size and qGAN depth used for the binary side at a given bin count.
pub fn binary_params(bins: usize) -> (f64, f64) {
    let n = (bins as f64).log2().ceil().max(1.0);
    (n, n / 2.0)
}

/// Total gate counts of both representations for `bins` bins.
pub fn compare_totals(bins: usize, native: Native, kappa: f64, m: usize) -> (f64, f64) {
    let (nb, l) = binary_params(bins);
    let unary = GateCountModel { representation: Representation::Unary, native, n: bins as f64, kappa, l: 0.0 };
    let binary = GateCountModel { representation: Representation::Binary, native, n: nb, kappa, l };
    (full_counts(&unary, m).total(), full_counts(&binary, m).total())
}

/// Smallest bin count at which the unary total reaches the binary total.
pub fn crossover(native: Native, kappa: f64, m: usize, max_bins: usize) -> Option<usize> {
    (2..=max_bins).find(|&b| {
        let (u, b) = compare_totals(b, native, kappa, m);
        u >= b
    })
}

/// Actual tallies of the circuits built for `grid` and `k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstructedCounts {
    pub bins: usize,
    /// Bins above the strike divided by `bins`.
    pub kappa: f64,
    pub distributor: Tally,
    pub payoff: Tally,
    pub s_psi0: Tally,
    pub s_0: Tally,
}

impl ConstructedCounts {
    pub fn block(&self, block: Block) -> Tally {
        match block {
            Block::Distributor => self.distributor,
            Block::Payoff => self.payoff,
            Block::SPsi0 => self.s_psi0,
            Block::S0 => self.s_0,
        }
    }
}

pub fn constructed_counts(grid: &PriceGrid, k: f64, native: Native) -> Result<ConstructedCounts> {
    let b: UnaryBundle = build_bundle(grid, k, native)?;
    let above = grid.prices.iter().filter(|&&s| s > k).count();
    Ok(ConstructedCounts {
        bins: b.n,
        kappa: above as f64 / b.n as f64,
        distributor: b.distributor().tally(),
        payoff: b.payoff.tally(),
        s_psi0: b.s_psi0.tally(),
        s_0: b.s_0.tally(),
    })
}

/// Blocks whose constructed 1- and 2-qubit tallies differ from the table.
pub fn table_mismatches(c: &ConstructedCounts, native: Native) -> Vec<(Block, Tally, Tally)> {
    let model = GateCountModel { representation: Representation::Unary, native, n: c.bins as f64, kappa: c.kappa, l: 0.0 };
    BLOCKS
        .iter()
        .filter_map(|&blk| {
            let want = block_counts(&model, blk).rounded();
            let got = c.block(blk);
            (want.one_qubit != got.one_qubit || want.two_qubit != got.two_qubit).then_some((blk, want, got))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use market::{discretize, OptionSpec};

    fn unary(native: Native, n: f64, kappa: f64) -> GateCountModel {
        GateCountModel { representation: Representation::Unary, native, n, kappa, l: 0.0 }
    }

    #[test]
    fn table_examples() {
        let d = block_counts(&unary(Native::PartialIswap, 8.0, 0.5), Block::Distributor);
        assert_eq!(d.two_qubit, 8.0);
        let bin = GateCountModel { representation: Representation::Binary, native: Native::Cnot, n: 8.0, kappa: 0.5, l: 1.5 };
        assert_eq!(block_counts(&bin, Block::S0).two_qubit, 78.0);
    }

    #[test]
    fn best_matches_closed_form() {
        for n in [4.0, 8.0, 100.0] {
            for kappa in [0.0, 0.25, 0.5, 1.0] {
                let a = a_counts(&unary(Native::Best, n, kappa));
                let (total, depth) = best_unary_closed_form(n, kappa);
                assert!((a.total() - total).abs() < 1e-9);
                assert!((a.depth - depth).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn crossover_near_hundred() {
        let c = crossover(Native::Best, 0.5, 1, 10_000).unwrap();
        assert!((50..=200).contains(&c), "{c}");
        let (u, b) = compare_totals(16, Native::Best, 0.5, 1);
        assert!(u < b);
    }

    #[test]
    fn constructed_matches_where_expected() {
        let spec = OptionSpec::reference();
        let grid = discretize(&spec, 8, 3.0).unwrap();
        let c = constructed_counts(&grid, spec.k, Native::Cnot).unwrap();
        let bad: Vec<Block> = table_mismatches(&c, Native::Cnot).iter().map(|m| m.0).collect();
        assert!(!bad.contains(&Block::Payoff));
        assert!(!bad.contains(&Block::S0));
        // two-qubit gates of the built distributor
        assert_eq!(c.distributor.two_qubit, 4 * (8 - 1));
    }
}
