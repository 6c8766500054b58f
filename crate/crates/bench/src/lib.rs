//! Fixtures shared by the benchmarks.

use psq_core::grid::{Axis, PhaseGrid};
use psq_core::oracles::{coherent_state, hermite_function, CoherentParams};
use psq_core::poly::PolyH;
use psq_core::wave::WaveFunction;
use psq_core::wigner::QuasiDistribution;

/// Square grid of side `n` on `[-half, half)` with `hbar = 1`.
pub fn grid(n: usize, half: f64) -> PhaseGrid {
    PhaseGrid::symmetric(n, half, 1.0).expect("valid grid")
}

pub fn oscillator() -> PolyH {
    PolyH::parse("p^2/2 + x^2/2").expect("valid expression")
}

pub fn quartic() -> PolyH {
    PolyH::parse("p^2/2 + x^2/2 + x^4/10").expect("valid expression")
}

/// Coherent state displaced to `(1, 0.5)` under ordering parameter `sigma`.
pub fn coherent(sigma: f64, g: &PhaseGrid) -> QuasiDistribution {
    let params = CoherentParams::new(1.0, 0.5, 1.0, sigma).expect("valid parameters");
    coherent_state(&params, g).expect("state fits the grid")
}

pub fn first_excited(axis: &Axis) -> WaveFunction {
    hermite_function(1, 1.0, axis)
}
