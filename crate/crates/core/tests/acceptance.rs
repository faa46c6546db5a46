//! End-to-end acceptance gate. Each criterion prints one line of the form
//! `[acceptance] criterion NN role-name: PASS (elapsed)` and panics when
//! its pinned tolerance or runtime budget is missed. Run with
//! `cargo test -p kdclass --test acceptance -- --nocapture` to see every
//! line.

use std::sync::Mutex;
use std::time::{Duration, Instant};

use kdclass::decompose::{
    gap_search, lp_membership, sweep_decompose, vet_gap_candidate, DecomposeOptions,
    GAP_ENTRY_FACTOR, GAP_PSD_MARGIN,
};
use kdclass::graph::{path_state_union, DivisorGraph};
use kdclass::hilbert::{
    kd_real_space_dimension, rank_of_span, DftPair, HermitianOperator, DEFAULT_RANK_TOL,
};
use kdclass::numtheory::{gcd, residue_coverage_check, DimensionProfile, DivisorSplit};
use kdclass::purestates::{dual_form_deviation, enumerate_all, PureStateLabel};
use kdclass::sampling::{convex_mixture, negativity_probe, off_span_probe, seeded_rng};
use kdclass::suites::{
    suite_marginals, suite_path_sweep, suite_prime_power_roundtrip, suite_value_law,
};
use kdclass::{Error, LpVerdict};
use rand::Rng;

static ORDER: Mutex<()> = Mutex::new(());

fn report(number: u8, name: &str, budget: Duration, body: impl FnOnce() -> Result<(), String>) {
    let guard = ORDER
        .lock()
        .unwrap_or_else(|poisoned| poisoned.into_inner());
    let start = Instant::now();
    let outcome = body();
    let elapsed = start.elapsed();
    drop(guard);
    let mut problems = Vec::new();
    if let Err(reason) = outcome {
        problems.push(reason);
    }
    if elapsed > budget {
        problems.push(format!("runtime {elapsed:.2?} exceeds budget {budget:.2?}"));
    }
    if problems.is_empty() {
        println!("[acceptance] criterion {number:02} {name}: PASS ({elapsed:.2?})");
    } else {
        let detail = problems.join("; ");
        println!("[acceptance] criterion {number:02} {name}: FAIL ({elapsed:.2?}) {detail}");
        panic!("criterion {number:02} {name} failed: {detail}");
    }
}

fn setup(d: u64) -> (DimensionProfile, DftPair) {
    (
        DimensionProfile::factorize(d).expect("factorize"),
        DftPair::new(d).expect("dft pair"),
    )
}

#[test]
fn criterion_01_value_law() {
    report(1, "value-law", Duration::from_secs(30), || {
        for d in 2..=30u64 {
            let (profile, pair) = setup(d);
            let result = suite_value_law(&profile, &pair, 1e-9).map_err(|e| e.to_string())?;
            if !result.pass {
                return Err(format!("d={d}: {}", result.detail));
            }
        }
        Ok(())
    });
}

#[test]
fn criterion_02_dual_form_identity() {
    report(2, "dual-form-identity", Duration::from_secs(10), || {
        for d in 2..=30u64 {
            let (profile, pair) = setup(d);
            for &x in profile.divisors() {
                let y = d / x;
                for m in 0..y {
                    for s in 0..x {
                        let label = PureStateLabel::new(x, m, s);
                        let deviation = dual_form_deviation(&profile, &pair, &label)
                            .map_err(|e| e.to_string())?;
                        if deviation > 1e-10 {
                            return Err(format!(
                                "d={d} label ({x},{m},{s}): form deviation {deviation:.3e}"
                            ));
                        }
                    }
                }
            }
        }
        Ok(())
    });
}

#[test]
fn criterion_03_marginal_identities() {
    report(3, "marginal-identities", Duration::from_secs(60), || {
        for d in [4u64, 6, 8, 9, 12, 16, 18, 27] {
            let (profile, pair) = setup(d);
            let result = suite_marginals(&profile, &pair, 1e-10).map_err(|e| e.to_string())?;
            if !result.pass {
                return Err(format!("d={d}: {}", result.detail));
            }
        }
        Ok(())
    });
}

#[test]
fn criterion_04_rank_equality() {
    report(4, "rank-equality", Duration::from_secs(30), || {
        for d in 2..=12u64 {
            let (profile, pair) = setup(d);
            let states = enumerate_all(&profile, &pair).map_err(|e| e.to_string())?;
            let projectors: Vec<_> = states.iter().map(|(_, v)| v * v.adjoint()).collect();
            let span_rank =
                rank_of_span(&projectors, DEFAULT_RANK_TOL).map_err(|e| e.to_string())?;
            let null_dim = kd_real_space_dimension(&pair).map_err(|e| e.to_string())?;
            if span_rank != null_dim {
                return Err(format!(
                    "d={d}: span rank {span_rank} != grid-real dimension {null_dim}"
                ));
            }
            if [2u64, 3, 5, 7, 11].contains(&d) && span_rank != (2 * d - 1) as usize {
                return Err(format!(
                    "prime d={d}: rank {span_rank} != predicted {}",
                    2 * d - 1
                ));
            }
        }
        Ok(())
    });
}

#[test]
fn criterion_05_prime_power_round_trip() {
    report(
        5,
        "prime-power-round-trip",
        Duration::from_secs(120),
        || {
            let opts = DecomposeOptions::default();
            for d in [4u64, 8, 9] {
                let (profile, pair) = setup(d);
                let result = suite_prime_power_roundtrip(&profile, &pair, 200, d, &opts)
                    .map_err(|e| e.to_string())?;
                if !result.pass {
                    return Err(format!("d={d}: {}", result.detail));
                }
                if result.worst_deviation > 1e-8 {
                    return Err(format!(
                        "d={d}: worst residual or weight-sum deviation {:.3e}",
                        result.worst_deviation
                    ));
                }
            }
            Ok(())
        },
    );
}

#[test]
fn criterion_06_path_sweep_certification() {
    report(
        6,
        "path-sweep-certification",
        Duration::from_secs(180),
        || {
            let opts = DecomposeOptions::default();
            for d in [6u64, 12] {
                let (profile, pair) = setup(d);
                for &x0 in profile.divisors() {
                    if gcd(x0, d / x0) != 1 {
                        continue;
                    }
                    let result = suite_path_sweep(&profile, &pair, x0, 100, d * 100 + x0, &opts)
                        .map_err(|e| e.to_string())?;
                    if !result.pass {
                        return Err(format!("d={d} x0={x0}: {}", result.detail));
                    }
                    if result.worst_deviation > 1e-8 {
                        return Err(format!(
                            "d={d} x0={x0}: worst deviation {:.3e}",
                            result.worst_deviation
                        ));
                    }
                }
            }
            Ok(())
        },
    );
}

#[test]
fn criterion_07_graph_structure() {
    report(7, "graph-structure", Duration::from_secs(1), || {
        let (profile, _) = setup(108);
        let graph = DivisorGraph::build(&profile, 4).map_err(|e| e.to_string())?;
        if graph.vertices().len() != 12 {
            return Err(format!("d=108: {} vertices", graph.vertices().len()));
        }
        let expected: Vec<(u64, u64, u64)> = vec![
            (4, 2, 2),
            (2, 1, 2),
            (12, 6, 2),
            (6, 3, 2),
            (36, 18, 2),
            (18, 9, 2),
            (108, 54, 2),
            (54, 27, 2),
            (1, 3, 3),
            (3, 9, 3),
            (9, 27, 3),
            (2, 6, 3),
            (6, 18, 3),
            (18, 54, 3),
            (4, 12, 3),
            (12, 36, 3),
            (36, 108, 3),
        ];
        if graph.edges().len() != expected.len() {
            return Err(format!("d=108: {} edges", graph.edges().len()));
        }
        for (from, to, prime) in expected {
            let found = graph
                .edges()
                .iter()
                .any(|e| e.from == from && e.to == to && e.prime == prime);
            if !found {
                return Err(format!("d=108: missing edge {from} -> {to} by {prime}"));
            }
        }

        let (profile, _) = setup(12);
        let graph = DivisorGraph::build(&profile, 4).map_err(|e| e.to_string())?;
        let paths = graph.enumerate_paths().map_err(|e| e.to_string())?;
        if paths.len() != 3 || graph.expected_path_count(&profile) != 3 {
            return Err(format!(
                "d=12 x0=4: {} paths enumerated, {} predicted",
                paths.len(),
                graph.expected_path_count(&profile)
            ));
        }

        for d in [2u64, 4, 8, 16, 32, 3, 9, 27, 5, 25, 121] {
            let (profile, _) = setup(d);
            for x0 in [1u64, d] {
                let graph = DivisorGraph::build(&profile, x0).map_err(|e| e.to_string())?;
                let count = graph.enumerate_paths().map_err(|e| e.to_string())?.len();
                if count != 1 {
                    return Err(format!("prime power d={d} x0={x0}: {count} paths"));
                }
            }
        }
        Ok(())
    });
}

#[test]
fn criterion_08_crt_round_trip() {
    report(8, "crt-round-trip", Duration::from_secs(10), || {
        let mut rng = seeded_rng(8);
        for _ in 0..50 {
            let d = rng.gen_range(2..=10_000u64);
            let profile = DimensionProfile::factorize(d).map_err(|e| e.to_string())?;
            for &x in profile.divisors() {
                let split = DivisorSplit::new(&profile, x).map_err(|e| e.to_string())?;
                let y = d / x;
                for i in 0..d {
                    let (m, k) = split.index_split(&profile, i).map_err(|e| e.to_string())?;
                    if (m, k) != (i % y, i / y) {
                        return Err(format!(
                            "d={d} x={x} i={i}: row split ({m},{k}) != ({},{})",
                            i % y,
                            i / y
                        ));
                    }
                    let (s, l) = split
                        .index_split_b(&profile, i)
                        .map_err(|e| e.to_string())?;
                    if (s, l) != (i % x, i / x) {
                        return Err(format!(
                            "d={d} x={x} j={i}: column split ({s},{l}) != ({},{})",
                            i % x,
                            i / x
                        ));
                    }
                }
            }
        }
        for d in 1..=60u64 {
            let profile = DimensionProfile::factorize(d).map_err(|e| e.to_string())?;
            for &x in profile.divisors() {
                let coverage = residue_coverage_check(&profile, x).map_err(|e| e.to_string())?;
                if !coverage.pass {
                    return Err(format!("d={d} x={x}: residue coverage {coverage:?}"));
                }
            }
        }
        Ok(())
    });
}

#[test]
fn criterion_09_oracle_cross_agreement() {
    report(
        9,
        "oracle-cross-agreement",
        Duration::from_secs(120),
        || {
            let (profile, pair) = setup(4);
            let graph = DivisorGraph::build(&profile, 1).map_err(|e| e.to_string())?;
            let path = graph.canonical_path(&profile);
            let union = path_state_union(&profile, &pair, &path).map_err(|e| e.to_string())?;
            let opts = DecomposeOptions::default();
            let mut rng = seeded_rng(9);
            let mut indeterminate = 0usize;
            for trial in 0..500usize {
                let matrix = match trial % 3 {
                    0 => convex_mixture(&mut rng, &union),
                    1 => negativity_probe(&profile, &pair, &union, &mut rng)
                        .map_err(|e| e.to_string())?,
                    _ => off_span_probe(&union, &mut rng, opts.rank_tol)
                        .map_err(|e| e.to_string())?
                        .ok_or("off-span probe found no complement at d=4")?,
                };
                let f = HermitianOperator::new(matrix.clone(), opts.entry_tol)
                    .map_err(|e| e.to_string())?;
                let sweep_accepts = match sweep_decompose(&profile, &pair, &graph, &path, &f, &opts)
                {
                    Ok(_) => Some(true),
                    Err(
                        Error::NotKdClassical { .. }
                        | Error::NotInSpan { .. }
                        | Error::SweepInconsistency { .. },
                    ) => Some(false),
                    Err(other) => return Err(format!("trial {trial}: sweep error {other}")),
                };
                let lp_accepts =
                    match lp_membership(&matrix, &union, &opts).map_err(|e| e.to_string())? {
                        LpVerdict::Feasible { .. } => Some(true),
                        LpVerdict::Infeasible { .. } => Some(false),
                        LpVerdict::Indeterminate { .. } => None,
                    };
                match (sweep_accepts, lp_accepts) {
                    (Some(a), Some(b)) if a != b => {
                        return Err(format!(
                            "trial {trial} (kind {}): sweep {} but LP {}",
                            trial % 3,
                            if a { "accepts" } else { "rejects" },
                            if b { "accepts" } else { "rejects" }
                        ));
                    }
                    (_, None) => indeterminate += 1,
                    _ => {}
                }
            }
            if indeterminate > 0 {
                return Err(format!("{indeterminate} indeterminate LP verdicts"));
            }
            Ok(())
        },
    );
}

#[test]
fn criterion_10_gap_search_contract() {
    report(10, "gap-search-contract", Duration::from_secs(120), || {
        let (profile, pair) = setup(6);
        let opts = DecomposeOptions::default();
        let states = enumerate_all(&profile, &pair).map_err(|e| e.to_string())?;
        let candidates = gap_search(&profile, &pair, 1500, 7, &opts).map_err(|e| e.to_string())?;
        for candidate in &candidates {
            let revetted = vet_gap_candidate(&pair, &states, &candidate.matrix, &opts)
                .map_err(|e| e.to_string())?
                .ok_or("emitted candidate fails its own vetting")?;
            if revetted.min_eigenvalue < GAP_PSD_MARGIN {
                return Err(format!(
                    "candidate not strictly positive: {:.3e}",
                    revetted.min_eigenvalue
                ));
            }
            if revetted.min_grid_entry < GAP_ENTRY_FACTOR * opts.entry_tol {
                return Err(format!(
                    "candidate grid entry {:.3e} below the strict floor",
                    revetted.min_grid_entry
                ));
            }
            if revetted.lp_objective <= opts.lp_tol {
                return Err(format!(
                    "candidate is LP-representable: objective {:.3e}",
                    revetted.lp_objective
                ));
            }
        }
        println!(
            "[acceptance]   gap search emitted {} candidate(s) over 1500 seeded trials",
            candidates.len()
        );
        Ok(())
    });
}
