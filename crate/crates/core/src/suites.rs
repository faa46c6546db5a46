//! Named verification suites shared by the CLI and the acceptance tests.
//!
//! Each suite bundles many individual checks into one deterministic
//! pass/fail summary with the worst observed deviation. Sampling suites
//! draw from a seeded generator, so a report is reproducible from its
//! command line alone.

use serde::Serialize;

use crate::decompose::{
    lp_membership, prime_power_decompose, sweep_decompose, DecomposeOptions, LpVerdict,
};
use crate::graph::{path_state_union, DivisorGraph};
use crate::hilbert::{kd_real_space_dimension, rank_of_span, CMatrix, DftPair, HermitianOperator};
use crate::numtheory::DimensionProfile;
use crate::purestates::{check_marginal_identity, check_value_law, enumerate_all, VertexStateSet};
use crate::sampling::{convex_mixture, negativity_probe, seeded_rng};
use crate::{Error, Result};

/// Outcome of one named suite.
#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub pass: bool,
    /// Largest deviation observed across the suite's checks.
    pub worst_deviation: f64,
    /// Human-readable account of what was checked.
    pub detail: String,
}

/// Verifies the value law of every labeled state: the grid is `1/d` on
/// the congruence support of size `d` and zero elsewhere.
pub fn suite_value_law(
    profile: &DimensionProfile,
    pair: &DftPair,
    tol: f64,
) -> Result<CheckResult> {
    let mut worst = 0.0f64;
    let mut failures = 0usize;
    let mut checked = 0usize;
    for &x in profile.divisors() {
        let set = VertexStateSet::new(profile, pair, x)?;
        for label in set.labels() {
            let report = check_value_law(profile, pair, label, tol)?;
            worst = worst.max(report.max_deviation);
            if !report.pass {
                failures += 1;
            }
            checked += 1;
        }
    }
    Ok(CheckResult {
        name: "value-law".into(),
        pass: failures == 0,
        worst_deviation: worst,
        detail: format!("{checked} labels checked, {failures} failures"),
    })
}

/// Verifies the transfer identity on every lattice edge: for each family
/// the two projector sums agree as operators.
pub fn suite_marginals(
    profile: &DimensionProfile,
    pair: &DftPair,
    tol: f64,
) -> Result<CheckResult> {
    let mut worst = 0.0f64;
    let mut edges = 0usize;
    let mut failures = 0usize;
    for &x in profile.divisors() {
        if x == 1 {
            continue;
        }
        for pp in profile.primes() {
            if x % pp.prime == 0 {
                let report = check_marginal_identity(profile, pair, x, pp.prime, tol)?;
                worst = worst.max(report.max_deviation);
                edges += 1;
                if !report.pass {
                    failures += 1;
                }
            }
        }
    }
    Ok(CheckResult {
        name: "marginal-consistency".into(),
        pass: failures == 0,
        worst_deviation: worst,
        detail: format!("{edges} lattice edges checked, {failures} failures"),
    })
}

/// Verifies that the labeled states span exactly the space of operators
/// with a real grid, and that for prime `d` both equal `2d - 1`.
pub fn suite_rank_equality(
    profile: &DimensionProfile,
    pair: &DftPair,
    rank_tol: f64,
) -> Result<CheckResult> {
    let states = enumerate_all(profile, pair)?;
    let projectors: Vec<CMatrix> = states.iter().map(|(_, v)| v * v.adjoint()).collect();
    let span_rank = rank_of_span(&projectors, rank_tol)?;
    let grid_real_dim = kd_real_space_dimension(pair)?;
    let mut pass = span_rank == grid_real_dim;
    let mut detail = format!("span rank {span_rank}, real-grid dimension {grid_real_dim}");
    if profile.primes().len() == 1 && profile.primes()[0].exponent == 1 {
        let predicted = 2 * profile.d() as usize - 1;
        pass = pass && span_rank == predicted;
        detail.push_str(&format!(", prime-case prediction {predicted}"));
    }
    Ok(CheckResult {
        name: "rank-equality".into(),
        pass,
        worst_deviation: span_rank.abs_diff(grid_real_dim) as f64,
        detail,
    })
}

/// Round-trips seeded mixtures of the full state set in a prime-power
/// dimension: sweep-decompose, verify the certificate, and require LP
/// agreement. Errors out before sampling when `d` is not a prime power.
pub fn suite_prime_power_roundtrip(
    profile: &DimensionProfile,
    pair: &DftPair,
    samples: usize,
    seed: u64,
    opts: &DecomposeOptions,
) -> Result<CheckResult> {
    if !profile.is_prime_power() {
        return Err(Error::NotPrimePower { d: profile.d() });
    }
    let states = enumerate_all(profile, pair)?;
    let mut rng = seeded_rng(seed);
    let mut worst = 0.0f64;
    let mut failures = 0usize;
    for _ in 0..samples {
        let rho = convex_mixture(&mut rng, &states);
        let f = HermitianOperator::new(rho.clone(), opts.entry_tol)?;
        match prime_power_decompose(profile, pair, &f, opts) {
            Ok(certificate) => {
                worst = worst
                    .max(certificate.residual)
                    .max((certificate.weight_sum - 1.0).abs());
                let negative = certificate.weights.iter().any(|entry| entry.w < 0.0);
                let lp = lp_membership(&rho, &states, opts)?;
                if negative || !lp.is_feasible() {
                    failures += 1;
                }
            }
            Err(_) => failures += 1,
        }
    }
    Ok(CheckResult {
        name: "prime-power-roundtrip".into(),
        pass: failures == 0,
        worst_deviation: worst,
        detail: format!("{samples} seeded mixtures decomposed, {failures} failures"),
    })
}

/// For every start-to-end path of the graph at `x0`: seeded mixtures of
/// the path states must sweep into verified certificates, and forced
/// grid-negative probes must be rejected by the sweep and found
/// infeasible by the LP. Probes per path are half the mixture count.
pub fn suite_path_sweep(
    profile: &DimensionProfile,
    pair: &DftPair,
    x0: u64,
    samples: usize,
    seed: u64,
    opts: &DecomposeOptions,
) -> Result<CheckResult> {
    let graph = DivisorGraph::build(profile, x0)?;
    let paths = graph.enumerate_paths()?;
    let adversarial = samples / 2;
    let mut rng = seeded_rng(seed);
    let mut worst = 0.0f64;
    let mut failures = 0usize;
    for path in &paths {
        let union = path_state_union(profile, pair, path)?;
        for _ in 0..samples {
            let rho = convex_mixture(&mut rng, &union);
            let f = HermitianOperator::new(rho, opts.entry_tol)?;
            match sweep_decompose(profile, pair, &graph, path, &f, opts) {
                Ok(certificate) => {
                    worst = worst
                        .max(certificate.residual)
                        .max((certificate.weight_sum - 1.0).abs());
                    if certificate.weights.iter().any(|entry| entry.w < 0.0) {
                        failures += 1;
                    }
                }
                Err(_) => failures += 1,
            }
        }
        for _ in 0..adversarial {
            let probe = negativity_probe(profile, pair, &union, &mut rng)?;
            let f = HermitianOperator::new(probe.clone(), opts.entry_tol)?;
            let rejected = matches!(
                sweep_decompose(profile, pair, &graph, path, &f, opts),
                Err(Error::NotKdClassical { .. }) | Err(Error::NotInSpan { .. })
            );
            let infeasible = matches!(
                lp_membership(&probe, &union, opts)?,
                LpVerdict::Infeasible { .. }
            );
            if !rejected || !infeasible {
                failures += 1;
            }
        }
    }
    Ok(CheckResult {
        name: "path-sweep".into(),
        pass: failures == 0,
        worst_deviation: worst,
        detail: format!(
            "{} paths from {x0}, {samples} mixtures and {adversarial} probes each, {failures} failures",
            paths.len()
        ),
    })
}
