//! Random instance families shared by the integration tests.
#![allow(dead_code)]

use kwkl::geometry::PotentialPair;
use kwkl::oracles::{generate, CostKind, Instance, InstanceSpec, MarginalKind};
use kwkl::{CostMatrix, Distribution};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, Exp1, Uniform};

pub const COST_KINDS: [CostKind; 4] = [
    CostKind::Hamming,
    CostKind::GridAbs,
    CostKind::RandomUniform,
    CostKind::TranslationInvariantCyclic,
];

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Strictly positive Dirichlet(1) draw.
pub fn dirichlet(n: usize, rng: &mut ChaCha8Rng) -> Distribution {
    Distribution::new((0..n).map(|_| Exp1.sample(rng)).collect()).unwrap()
}

pub fn uniform_vec(n: usize, lo: f64, hi: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let u = Uniform::new(lo, hi).unwrap();
    (0..n).map(|_| u.sample(rng)).collect()
}

/// Small instance with sizes in `1..=3`, any cost kind and any marginal
/// kind (cyclic costs force a square space).
pub fn small_instance(seed: u64) -> Instance {
    let mut r = rng(seed);
    let nx = r.random_range(1..=3);
    let cost_kind = COST_KINDS[r.random_range(0..4)];
    let ny = if cost_kind == CostKind::TranslationInvariantCyclic { nx } else { r.random_range(1..=3) };
    let marginal_kind = [MarginalKind::Uniform, MarginalKind::RandomDirichlet, MarginalKind::PointMass][r.random_range(0..3)];
    generate(InstanceSpec { nx, ny, seed: r.random(), cost_kind, marginal_kind }).unwrap()
}

/// Square instance with Dirichlet marginals and a random cost, size in
/// `lo..=hi`.
pub fn dirichlet_instance(seed: u64, lo: usize, hi: usize) -> Instance {
    let mut r = rng(seed);
    let n = r.random_range(lo..=hi);
    let cost_kind = [CostKind::RandomUniform, CostKind::TranslationInvariantCyclic, CostKind::GridAbs][r.random_range(0..3)];
    generate(InstanceSpec { nx: n, ny: n, seed: r.random(), cost_kind, marginal_kind: MarginalKind::RandomDirichlet }).unwrap()
}

/// Potential pair on `n` atoms with multipliers in `[0, 2)` and a cost
/// that is positive everywhere, so `ε` is finite.
pub fn potential_pair(seed: u64) -> (PotentialPair, CostMatrix) {
    let mut r = rng(seed);
    let n = r.random_range(2..=5);
    let reference = dirichlet(n, &mut r);
    let f = uniform_vec(n, -1.0, 1.0, &mut r);
    let g = uniform_vec(n, -1.0, 1.0, &mut r);
    let alpha = 2.0 * r.random::<f64>();
    let beta = 2.0 * r.random::<f64>();
    let cost = CostMatrix::new(n, n, uniform_vec(n * n, 0.1, 1.1, &mut r)).unwrap();
    (PotentialPair::new(f, g, alpha, beta, reference).unwrap(), cost)
}
