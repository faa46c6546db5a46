//! Seeded generators for states and test operators.
//!
//! Everything here is deterministic given the seed: the generator is a
//! ChaCha8 stream cipher, so reports and certificates produced from the
//! same seed are byte-identical across runs and platforms.

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::hilbert::{
    column_space_basis, hermitian_to_real_vector, kd_distribution, real_vector_to_hermitian,
    stack_real_vectors, CMatrix, CVector, DftPair, HermitianOperator,
};
use crate::numtheory::DimensionProfile;
use crate::purestates::PureStateLabel;
use crate::{Error, Result};

/// Frobenius size of the off-span perturbation added by
/// [`off_span_probe`].
pub const OFF_SPAN_MAGNITUDE: f64 = 0.05;

/// Negative mass forced into one grid entry by [`negativity_probe`].
pub const NEGATIVITY_MARGIN: f64 = 2e-6;

/// A deterministic generator for the given seed.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A flat Dirichlet sample: `k` nonnegative weights summing to 1.
pub fn dirichlet_weights(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    let mut weights: Vec<f64> = (0..k).map(|_| Exp1.sample(rng)).collect();
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return vec![1.0 / k as f64; k];
    }
    for w in &mut weights {
        *w /= total;
    }
    weights
}

/// A random convex combination of the projectors onto the given states.
pub fn convex_mixture(rng: &mut ChaCha8Rng, states: &[(PureStateLabel, CVector)]) -> CMatrix {
    let d = states
        .first()
        .map(|(_, v)| v.len())
        .expect("convex_mixture needs at least one state");
    let weights = dirichlet_weights(rng, states.len());
    let mut acc = CMatrix::zeros(d, d);
    for ((_, state), w) in states.iter().zip(weights) {
        acc += (state * state.adjoint()) * Complex64::new(w, 0.0);
    }
    acc
}

/// A Haar-random unit vector in dimension `d`.
pub fn haar_state(rng: &mut ChaCha8Rng, d: usize) -> CVector {
    let mut v = CVector::zeros(d);
    loop {
        for k in 0..d {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            v[k] = Complex64::new(re, im);
        }
        let norm = v.norm();
        if norm > 1e-12 {
            return v / Complex64::new(norm, 0.0);
        }
    }
}

/// A Gaussian Hermitian matrix, `(G + G^dagger) / 2` for i.i.d. standard
/// complex normal `G`.
pub fn random_hermitian(rng: &mut ChaCha8Rng, d: usize) -> CMatrix {
    let mut g = CMatrix::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            g[(i, j)] = Complex64::new(re, im);
        }
    }
    (&g + g.adjoint()) * Complex64::new(0.5, 0.0)
}

/// A trace-one Hermitian operator in the span of the given states whose
/// grid entry at one cell is exactly `-NEGATIVITY_MARGIN`.
///
/// The construction mixes the states, picks two distinct labels at one
/// vertex, and moves mass between their projectors. Every support cell
/// of the drained label loses `t/d` while the receiving projector
/// contributes nothing on that disjoint support, so the smallest such
/// entry lands exactly at the forced negative value. The result is
/// generally not positive semidefinite; it exists to exercise
/// grid-negativity rejection.
pub fn negativity_probe(
    profile: &DimensionProfile,
    pair: &DftPair,
    states: &[(PureStateLabel, CVector)],
    rng: &mut ChaCha8Rng,
) -> Result<CMatrix> {
    let d = profile.d();
    let mut vertex_indices: Vec<(u64, Vec<usize>)> = Vec::new();
    for (idx, (label, _)) in states.iter().enumerate() {
        match vertex_indices.iter_mut().find(|(x, _)| *x == label.x) {
            Some((_, members)) => members.push(idx),
            None => vertex_indices.push((label.x, vec![idx])),
        }
    }
    vertex_indices.retain(|(_, members)| members.len() >= 2);
    if vertex_indices.is_empty() {
        return Err(Error::EmptyStateList);
    }
    let conv = convex_mixture(rng, states);
    let (_, members) = &vertex_indices[rng.gen_range(0..vertex_indices.len())];
    let a = members[rng.gen_range(0..members.len())];
    let b = loop {
        let candidate = members[rng.gen_range(0..members.len())];
        if candidate != a {
            break candidate;
        }
    };
    let (label_b, state_b) = &states[b];
    let (_, state_a) = &states[a];
    let grid = kd_distribution(&HermitianOperator::new(conv.clone(), 1e-9)?, pair, 1e-9)?;
    // The probe drains every support cell of the picked projector by the
    // same amount, so the forced floor must target the smallest of them.
    let y = d / label_b.x;
    let mut entry = f64::INFINITY;
    for i in (label_b.m..d).step_by(y as usize) {
        for j in (label_b.s..d).step_by(label_b.x as usize) {
            entry = entry.min(grid.grid()[(i as usize, j as usize)].re);
        }
    }
    let t = d as f64 * (entry + NEGATIVITY_MARGIN);
    let shift =
        (state_a * state_a.adjoint() - state_b * state_b.adjoint()) * Complex64::new(t, 0.0);
    Ok(conv + shift)
}

/// A trace-one Hermitian operator a fixed Frobenius distance outside the
/// real span of the given projectors, or `None` when that span is already
/// the full Hermitian space.
pub fn off_span_probe(
    states: &[(PureStateLabel, CVector)],
    rng: &mut ChaCha8Rng,
    rank_tol: f64,
) -> Result<Option<CMatrix>> {
    let d = states
        .first()
        .map(|(_, v)| v.len())
        .ok_or(Error::EmptyStateList)?;
    let projectors: Vec<CMatrix> = states.iter().map(|(_, v)| v * v.adjoint()).collect();
    let stacked = stack_real_vectors(&projectors)?;
    let basis = column_space_basis(&stacked.transpose(), rank_tol);
    let g = random_hermitian(rng, d);
    let mut residual = hermitian_to_real_vector(&g);
    for vector in &basis {
        let overlap = vector.dot(&residual);
        residual.axpy(-overlap, vector, 1.0);
    }
    let norm = residual.norm();
    if norm <= 1e-10 {
        return Ok(None);
    }
    residual /= norm;
    let perturbation = real_vector_to_hermitian(&residual)?;
    let conv = convex_mixture(rng, states);
    Ok(Some(
        conv + perturbation * Complex64::new(OFF_SPAN_MAGNITUDE, 0.0),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{path_state_union, DivisorGraph};
    use crate::hilbert::{hermiticity_deviation, trace};
    use crate::purestates::enumerate_all;

    fn union(d: u64, x0: u64) -> (DimensionProfile, DftPair, Vec<(PureStateLabel, CVector)>) {
        let profile = DimensionProfile::factorize(d).unwrap();
        let pair = DftPair::new(d).unwrap();
        let graph = DivisorGraph::build(&profile, x0).unwrap();
        let path = graph.canonical_path(&profile);
        let states = path_state_union(&profile, &pair, &path).unwrap();
        (profile, pair, states)
    }

    #[test]
    fn same_seed_same_stream() {
        let (_, _, states) = union(6, 1);
        let a = convex_mixture(&mut seeded_rng(7), &states);
        let b = convex_mixture(&mut seeded_rng(7), &states);
        assert_eq!(a, b);
        let c = convex_mixture(&mut seeded_rng(8), &states);
        assert_ne!(a, c);
    }

    #[test]
    fn dirichlet_weights_are_a_distribution() {
        let mut rng = seeded_rng(0);
        for k in [1usize, 2, 5, 24] {
            let w = dirichlet_weights(&mut rng, k);
            assert_eq!(w.len(), k);
            assert!(w.iter().all(|&x| x >= 0.0));
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn convex_mixture_is_a_density_matrix() {
        let (_, _, states) = union(12, 4);
        let rho = convex_mixture(&mut seeded_rng(3), &states);
        assert!(hermiticity_deviation(&rho) < 1e-12);
        assert!((trace(&rho) - Complex64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn haar_states_are_normalized() {
        let mut rng = seeded_rng(1);
        for d in [2usize, 3, 5, 8] {
            let v = haar_state(&mut rng, d);
            assert!((v.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn negativity_probe_forces_the_entry() {
        let (profile, pair, states) = union(6, 2);
        let mut rng = seeded_rng(11);
        for _ in 0..5 {
            let probe = negativity_probe(&profile, &pair, &states, &mut rng).unwrap();
            assert!(hermiticity_deviation(&probe) < 1e-12);
            assert!((trace(&probe) - Complex64::new(1.0, 0.0)).norm() < 1e-10);
            let grid = kd_distribution(&HermitianOperator::new(probe, 1e-9).unwrap(), &pair, 1e-9)
                .unwrap();
            let (_, _, min_real) = grid.min_real();
            assert!(
                (min_real + NEGATIVITY_MARGIN).abs() < 1e-12,
                "forced entry came out {min_real}"
            );
        }
    }

    #[test]
    fn off_span_probe_leaves_the_span() {
        let profile = DimensionProfile::factorize(3).unwrap();
        let pair = DftPair::new(3).unwrap();
        let states = enumerate_all(&profile, &pair).unwrap();
        let mut rng = seeded_rng(5);
        let probe = off_span_probe(&states, &mut rng, 1e-9).unwrap().unwrap();
        assert!(hermiticity_deviation(&probe) < 1e-12);
        assert!((trace(&probe) - Complex64::new(1.0, 0.0)).norm() < 1e-10);
        let projectors: Vec<CMatrix> = states.iter().map(|(_, v)| v * v.adjoint()).collect();
        let with_probe: Vec<CMatrix> = projectors
            .iter()
            .cloned()
            .chain(std::iter::once(probe))
            .collect();
        let base_rank = crate::hilbert::rank_of_span(&projectors, 1e-9).unwrap();
        let probe_rank = crate::hilbert::rank_of_span(&with_probe, 1e-9).unwrap();
        assert_eq!(probe_rank, base_rank + 1);
    }

    #[test]
    fn off_span_probe_is_none_when_the_span_is_full() {
        let profile = DimensionProfile::factorize(1).unwrap();
        let pair = DftPair::new(1).unwrap();
        let states = enumerate_all(&profile, &pair).unwrap();
        let mut rng = seeded_rng(5);
        assert!(off_span_probe(&states, &mut rng, 1e-9).unwrap().is_none());
    }
}
