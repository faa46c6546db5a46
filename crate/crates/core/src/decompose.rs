//! Convex decomposition over path states.
//!
//! Two independent routes answer "is `F` a convex combination of the
//! labeled pure states along a path":
//!
//! 1. The constructive sweep: project `F` onto the span of the path
//!    states, then walk the path edge by edge, draining each transfer
//!    family's source coefficients by their minimum. Transfers move mass
//!    between projector sums that are equal as operators, so the
//!    represented operator never changes while every vertex left behind
//!    ends up nonnegative.
//! 2. A phase-1 simplex on the exact membership LP, sharing no code with
//!    the sweep beyond the state constructions.
//!
//! Agreement between the two is itself a checked property; the wrappers
//! here never coerce an indeterminate LP verdict into a definite one.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::graph::{path_state_union, DivisorGraph, GraphPath};
use crate::hilbert::{
    gram_least_squares, hermitian_to_real_vector, is_kd_classical, kd_distribution, trace, CMatrix,
    CVector, DftPair, HermitianOperator, DEFAULT_ENTRY_TOL, DEFAULT_RANK_TOL,
};
use crate::numtheory::{transfer_family, DimensionProfile, DivisorSplit};
use crate::purestates::{enumerate_all, PureStateLabel};
use crate::sampling::{convex_mixture, seeded_rng};
use crate::{Error, Result};

mod simplex;
use simplex::{phase1_feasibility, Phase1Outcome};

/// Smallest eigenvalue a gap candidate must clear.
pub const GAP_PSD_MARGIN: f64 = 1e-7;
/// Strict grid tolerance used when vetting a gap candidate.
pub const GAP_STRICT_TOL: f64 = 1e-11;
/// Factor on the entry tolerance the smallest grid entry must clear.
pub const GAP_ENTRY_FACTOR: f64 = 100.0;
/// Weights at or below this magnitude are treated as numerical zeros
/// and dropped from certificates; the reconstruction residual is still
/// checked against the full operator afterwards.
pub const WEIGHT_DROP_FLOOR: f64 = 1e-12;

/// Tolerances and caps shared by the decomposition routines.
#[derive(Debug, Clone)]
pub struct DecomposeOptions {
    /// Entrywise KD grid tolerance.
    pub entry_tol: f64,
    /// Span membership threshold on the least-squares residual.
    pub span_tol: f64,
    /// Certificate reconstruction residual threshold.
    pub residual_tol: f64,
    /// LP feasibility threshold on the phase-1 objective.
    pub lp_tol: f64,
    /// Width of the negative-weight band clipped to zero; anything more
    /// negative is an internal inconsistency.
    pub weight_tol: f64,
    /// Relative singular-value cutoff for rank decisions.
    pub rank_tol: f64,
    /// Simplex pivot cap before the verdict degrades to indeterminate.
    pub max_lp_iterations: usize,
}

impl Default for DecomposeOptions {
    fn default() -> Self {
        DecomposeOptions {
            entry_tol: DEFAULT_ENTRY_TOL,
            span_tol: 1e-8,
            residual_tol: 1e-8,
            lp_tol: 1e-7,
            weight_tol: 1e-8,
            rank_tol: DEFAULT_RANK_TOL,
            max_lp_iterations: 100_000,
        }
    }
}

/// The span coefficients of one vertex, keyed by `(m, s)`.
#[derive(Debug, Clone)]
pub struct CoefficientGroup {
    x: u64,
    coefficients: BTreeMap<(u64, u64), f64>,
}

impl CoefficientGroup {
    /// The vertex divisor.
    pub fn x(&self) -> u64 {
        self.x
    }

    /// The coefficient at `(m, s)`, if that label was projected.
    pub fn get(&self, m: u64, s: u64) -> Option<f64> {
        self.coefficients.get(&(m, s)).copied()
    }

    /// All `(m, s, coefficient)` triples in label order.
    pub fn iter(&self) -> impl Iterator<Item = (u64, u64, f64)> + '_ {
        self.coefficients.iter().map(|(&(m, s), &w)| (m, s, w))
    }
}

/// Least-squares coordinates of an operator over a list of labeled
/// states, grouped by vertex.
#[derive(Debug, Clone)]
pub struct CoefficientTable {
    groups: Vec<CoefficientGroup>,
    residual: f64,
    in_span: bool,
}

impl CoefficientTable {
    /// Groups in first-appearance vertex order.
    pub fn groups(&self) -> &[CoefficientGroup] {
        &self.groups
    }

    /// Frobenius distance between the operator and its projection.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    /// Whether the residual is within the span tolerance.
    pub fn in_span(&self) -> bool {
        self.in_span
    }

    /// The coefficient at a full label.
    pub fn coefficient(&self, x: u64, m: u64, s: u64) -> Option<f64> {
        self.groups
            .iter()
            .find(|g| g.x == x)
            .and_then(|g| g.get(m, s))
    }

    /// Sum of all coefficients; equals the trace of the projected
    /// operator whenever the identity lies in the span.
    pub fn total(&self) -> f64 {
        self.groups
            .iter()
            .flat_map(|g| g.coefficients.values())
            .sum()
    }
}

/// Minimum-norm least-squares coordinates of `f` over the projectors of
/// the given states, with the span verdict at `opts.span_tol`.
pub fn span_project(
    f: &CMatrix,
    states: &[(PureStateLabel, CVector)],
    opts: &DecomposeOptions,
) -> Result<CoefficientTable> {
    if states.is_empty() {
        return Err(Error::EmptyStateList);
    }
    let d = f.nrows();
    if f.ncols() != d {
        return Err(Error::NonSquareMatrix {
            rows: d,
            cols: f.ncols(),
        });
    }
    for (_, state) in states {
        if state.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: state.len(),
            });
        }
    }
    let width = d * d;
    let mut a = DMatrix::<f64>::zeros(width, states.len());
    for (col, (_, state)) in states.iter().enumerate() {
        let projector = state * state.adjoint();
        a.column_mut(col)
            .copy_from(&hermitian_to_real_vector(&projector));
    }
    let b = hermitian_to_real_vector(f);
    let weights = gram_least_squares(&a, &b, opts.rank_tol);
    let residual = (&a * &weights - &b).norm();

    let mut groups: Vec<CoefficientGroup> = Vec::new();
    for ((label, _), &w) in states.iter().zip(weights.iter()) {
        let group = match groups.iter_mut().find(|g| g.x == label.x) {
            Some(found) => found,
            None => {
                groups.push(CoefficientGroup {
                    x: label.x,
                    coefficients: BTreeMap::new(),
                });
                groups.last_mut().expect("just pushed")
            }
        };
        *group.coefficients.entry((label.m, label.s)).or_insert(0.0) += w;
    }
    Ok(CoefficientTable {
        groups,
        residual,
        in_span: residual <= opts.span_tol,
    })
}

/// One weighted label of a decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightEntry {
    pub x: u64,
    pub m: u64,
    pub s: u64,
    pub w: f64,
}

/// Which route produced a certificate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CertificateMethod {
    Sweep,
    Lp,
}

/// A convex decomposition of an operator over labeled pure states,
/// together with its own reconstruction residual.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionCertificate {
    pub method: CertificateMethod,
    pub path: Vec<u64>,
    pub weights: Vec<WeightEntry>,
    pub residual: f64,
    pub weight_sum: f64,
}

impl DecompositionCertificate {
    /// Rebuilds the weighted projector sum the certificate describes.
    pub fn reconstruct(&self, profile: &DimensionProfile, pair: &DftPair) -> Result<CMatrix> {
        let d = pair.dim();
        let mut acc = CMatrix::zeros(d, d);
        for entry in &self.weights {
            let label = PureStateLabel::new(entry.x, entry.m, entry.s);
            let state = crate::purestates::build_pure_state(profile, pair, &label)?;
            acc += (&state * state.adjoint()) * Complex64::new(entry.w, 0.0);
        }
        Ok(acc)
    }

    /// Frobenius distance between the reconstruction and `f`.
    pub fn residual_against(
        &self,
        profile: &DimensionProfile,
        pair: &DftPair,
        f: &CMatrix,
    ) -> Result<f64> {
        Ok((self.reconstruct(profile, pair)? - f).norm())
    }
}

fn worst_component(value: Complex64) -> f64 {
    if value.im.abs() >= (-value.re).max(0.0) {
        value.im
    } else {
        value.re
    }
}

fn finalize_certificate(
    mut certificate: DecompositionCertificate,
    f: &CMatrix,
    union: &[(PureStateLabel, CVector)],
    residual_tol: f64,
) -> Result<DecompositionCertificate> {
    let lookup: BTreeMap<(u64, u64, u64), &CVector> = union
        .iter()
        .map(|(label, state)| ((label.x, label.m, label.s), state))
        .collect();
    let d = f.nrows();
    let mut acc = CMatrix::zeros(d, d);
    for entry in &certificate.weights {
        let state = lookup
            .get(&(entry.x, entry.m, entry.s))
            .ok_or(Error::InvalidLabel {
                x: entry.x,
                m: entry.m,
                s: entry.s,
                d: d as u64,
            })?;
        acc += (*state * state.adjoint()) * Complex64::new(entry.w, 0.0);
    }
    let residual = (&acc - f).norm();
    if residual > residual_tol {
        return Err(Error::CertificateResidual { residual });
    }
    certificate.residual = residual;
    Ok(certificate)
}

fn collect_weights(
    path: &GraphPath,
    d: u64,
    coeffs: &[Vec<f64>],
    weight_tol: f64,
) -> Result<(Vec<WeightEntry>, f64)> {
    let mut weights = Vec::new();
    let mut total = 0.0;
    for (pos, &x) in path.vertices.iter().enumerate() {
        let y = d / x;
        for m in 0..y {
            for s in 0..x {
                let slot = (m * x + s) as usize;
                let mut w = coeffs[pos][slot];
                if w < -weight_tol {
                    return Err(Error::SweepInconsistency {
                        coefficient: w,
                        x,
                        m,
                        s,
                    });
                }
                if w < 0.0 {
                    w = 0.0;
                }
                if w > WEIGHT_DROP_FLOOR {
                    total += w;
                    weights.push(WeightEntry { x, m, s, w });
                }
            }
        }
    }
    if total > 0.0 && (total - 1.0).abs() <= weight_tol {
        for entry in &mut weights {
            entry.w /= total;
        }
        total = weights.iter().map(|e| e.w).sum();
    }
    Ok((weights, total))
}

/// Decomposes a KD-classical operator into a convex combination of the
/// pure states along `path` by the constructive coefficient sweep.
///
/// Gates in order: the path must be valid for `graph`, the grid must be
/// classical at `opts.entry_tol`, and the operator must sit in the span
/// of the path states at `opts.span_tol`. The emitted certificate is
/// re-verified against `f` before it is returned.
pub fn sweep_decompose(
    profile: &DimensionProfile,
    pair: &DftPair,
    graph: &DivisorGraph,
    path: &GraphPath,
    f: &HermitianOperator,
    opts: &DecomposeOptions,
) -> Result<DecompositionCertificate> {
    graph.validate_path(path)?;
    if f.dim() != pair.dim() {
        return Err(Error::DimensionMismatch {
            expected: pair.dim(),
            found: f.dim(),
        });
    }
    let verdict = is_kd_classical(f, pair, opts.entry_tol)?;
    if !verdict.pass {
        return Err(Error::NotKdClassical {
            value: worst_component(verdict.value),
            row: verdict.row,
            col: verdict.col,
        });
    }
    let union = path_state_union(profile, pair, path)?;
    let table = span_project(f.matrix(), &union, opts)?;
    if !table.in_span() {
        return Err(Error::NotInSpan {
            residual: table.residual(),
        });
    }

    let d = profile.d();
    let splits: Vec<DivisorSplit> = path
        .vertices
        .iter()
        .map(|&x| DivisorSplit::new(profile, x))
        .collect::<Result<_>>()?;
    let mut coeffs: Vec<Vec<f64>> = path
        .vertices
        .iter()
        .map(|&x| {
            let y = d / x;
            let mut vertex = Vec::with_capacity(d as usize);
            for m in 0..y {
                for s in 0..x {
                    vertex.push(table.coefficient(x, m, s).unwrap_or(0.0));
                }
            }
            vertex
        })
        .collect();

    for idx in 0..path.vertices.len().saturating_sub(1) {
        let src = path.vertices[idx];
        let tgt = path.vertices[idx + 1];
        let (big, small) = (src.max(tgt), src.min(tgt));
        let prime = big / small;
        let prime_index = profile
            .primes()
            .iter()
            .position(|pp| pp.prime == prime)
            .ok_or_else(|| Error::InvalidPath {
                detail: format!("edge {src} -> {tgt} does not scale by a prime factor of {d}"),
            })?;
        let (big_split, small_split) = if src == big {
            (&splits[idx], &splits[idx + 1])
        } else {
            (&splits[idx + 1], &splits[idx])
        };
        let y_big = d / big;
        for m_big in 0..y_big {
            for s_small in 0..small {
                let (s_bigs, m_smalls) =
                    transfer_family(profile, big_split, small_split, prime_index, m_big, s_small)?;
                let big_slots: Vec<usize> = s_bigs
                    .iter()
                    .map(|&sb| (m_big * big + sb) as usize)
                    .collect();
                let small_slots: Vec<usize> = m_smalls
                    .iter()
                    .map(|&ms| (ms * small + s_small) as usize)
                    .collect();
                let (src_slots, tgt_slots) = if src == big {
                    (&big_slots, &small_slots)
                } else {
                    (&small_slots, &big_slots)
                };
                let lambda = src_slots
                    .iter()
                    .map(|&slot| coeffs[idx][slot])
                    .fold(f64::INFINITY, f64::min);
                for &slot in src_slots {
                    coeffs[idx][slot] -= lambda;
                }
                for &slot in tgt_slots {
                    coeffs[idx + 1][slot] += lambda;
                }
            }
        }
    }

    let (weights, weight_sum) = collect_weights(path, d, &coeffs, opts.weight_tol)?;
    let certificate = DecompositionCertificate {
        method: CertificateMethod::Sweep,
        path: path.vertices.clone(),
        weights,
        residual: 0.0,
        weight_sum,
    };
    finalize_certificate(certificate, f.matrix(), &union, opts.residual_tol)
}

/// Decomposes an operator over the full pure-state set of a prime-power
/// dimension, via the unique divisor chain starting at 1.
pub fn prime_power_decompose(
    profile: &DimensionProfile,
    pair: &DftPair,
    f: &HermitianOperator,
    opts: &DecomposeOptions,
) -> Result<DecompositionCertificate> {
    if !profile.is_prime_power() {
        return Err(Error::NotPrimePower { d: profile.d() });
    }
    let graph = DivisorGraph::build(profile, 1)?;
    let path = graph.canonical_path(profile);
    sweep_decompose(profile, pair, &graph, &path, f, opts)
}

/// Verdict of the LP membership oracle.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "lowercase")]
pub enum LpVerdict {
    /// A convex combination exists; `weights` follow the state order.
    Feasible { weights: Vec<f64>, objective: f64 },
    /// No convex combination exists.
    Infeasible { objective: f64 },
    /// The pivot cap was reached; no verdict.
    Indeterminate { iterations: usize },
}

impl LpVerdict {
    /// Whether the verdict is feasible.
    pub fn is_feasible(&self) -> bool {
        matches!(self, LpVerdict::Feasible { .. })
    }

    /// Whether the verdict is infeasible.
    pub fn is_infeasible(&self) -> bool {
        matches!(self, LpVerdict::Infeasible { .. })
    }

    /// Whether no verdict was reached.
    pub fn is_indeterminate(&self) -> bool {
        matches!(self, LpVerdict::Indeterminate { .. })
    }
}

/// Exact membership test: does `f` equal a convex combination of the
/// given state projectors? Solved as a phase-1 LP over the real
/// coordinates plus an explicit unit-sum row.
pub fn lp_membership(
    f: &CMatrix,
    states: &[(PureStateLabel, CVector)],
    opts: &DecomposeOptions,
) -> Result<LpVerdict> {
    if states.is_empty() {
        return Err(Error::EmptyStateList);
    }
    let d = f.nrows();
    if f.ncols() != d {
        return Err(Error::NonSquareMatrix {
            rows: d,
            cols: f.ncols(),
        });
    }
    for (_, state) in states {
        if state.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: state.len(),
            });
        }
    }
    let width = d * d;
    let mut a = DMatrix::<f64>::zeros(width + 1, states.len());
    for (col, (_, state)) in states.iter().enumerate() {
        let projector = state * state.adjoint();
        a.view_mut((0, col), (width, 1))
            .copy_from(&hermitian_to_real_vector(&projector));
        a[(width, col)] = 1.0;
    }
    let mut b = nalgebra::DVector::<f64>::zeros(width + 1);
    b.rows_mut(0, width).copy_from(&hermitian_to_real_vector(f));
    b[width] = 1.0;
    match phase1_feasibility(&a, &b, opts.max_lp_iterations) {
        Phase1Outcome::Optimal {
            objective,
            solution,
        } => {
            if objective <= opts.lp_tol {
                Ok(LpVerdict::Feasible {
                    weights: solution,
                    objective,
                })
            } else {
                Ok(LpVerdict::Infeasible { objective })
            }
        }
        Phase1Outcome::IterationCap { iterations } => Ok(LpVerdict::Indeterminate { iterations }),
    }
}

/// Runs the LP oracle over the states of `path` and, when feasible,
/// packages the solution as a certificate. Infeasible and indeterminate
/// verdicts surface as errors rather than being coerced.
pub fn lp_certificate(
    profile: &DimensionProfile,
    pair: &DftPair,
    graph: &DivisorGraph,
    path: &GraphPath,
    f: &HermitianOperator,
    opts: &DecomposeOptions,
) -> Result<DecompositionCertificate> {
    graph.validate_path(path)?;
    let union = path_state_union(profile, pair, path)?;
    match lp_membership(f.matrix(), &union, opts)? {
        LpVerdict::Feasible { weights, .. } => {
            let mut entries = Vec::new();
            let mut total = 0.0;
            for ((label, _), w) in union.iter().zip(weights) {
                if w > WEIGHT_DROP_FLOOR {
                    total += w;
                    entries.push(WeightEntry {
                        x: label.x,
                        m: label.m,
                        s: label.s,
                        w,
                    });
                }
            }
            if total > 0.0 && (total - 1.0).abs() <= opts.weight_tol {
                for entry in &mut entries {
                    entry.w /= total;
                }
                total = entries.iter().map(|e| e.w).sum();
            }
            let certificate = DecompositionCertificate {
                method: CertificateMethod::Lp,
                path: path.vertices.clone(),
                weights: entries,
                residual: 0.0,
                weight_sum: total,
            };
            finalize_certificate(
                certificate,
                f.matrix(),
                &union,
                opts.residual_tol.max(opts.lp_tol),
            )
        }
        LpVerdict::Infeasible { objective } => Err(Error::LpInfeasible { objective }),
        LpVerdict::Indeterminate { iterations } => Err(Error::LpIndeterminate { iterations }),
    }
}

/// A vetted hull-gap candidate: strictly positive definite, strictly
/// grid-positive, yet LP-infeasible against the full labeled set.
#[derive(Debug, Clone)]
pub struct GapCandidate {
    pub matrix: CMatrix,
    pub min_grid_entry: f64,
    pub min_eigenvalue: f64,
    pub lp_objective: f64,
}

fn min_eigenvalue(matrix: &CMatrix) -> f64 {
    nalgebra::SymmetricEigen::new(matrix.clone())
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Checks whether `matrix` witnesses a gap between grid classicality and
/// the convex hull of `states`. Returns `None` unless every margin
/// holds: Hermitian and unit trace, eigenvalues at least
/// `GAP_PSD_MARGIN`, grid imaginary parts within `GAP_STRICT_TOL`, grid
/// entries at least `GAP_ENTRY_FACTOR * opts.entry_tol`, and the
/// membership LP infeasible.
pub fn vet_gap_candidate(
    pair: &DftPair,
    states: &[(PureStateLabel, CVector)],
    matrix: &CMatrix,
    opts: &DecomposeOptions,
) -> Result<Option<GapCandidate>> {
    let f = match HermitianOperator::new(matrix.clone(), GAP_STRICT_TOL) {
        Ok(f) => f,
        Err(_) => return Ok(None),
    };
    if (trace(matrix) - Complex64::new(1.0, 0.0)).norm() > 1e-9 {
        return Ok(None);
    }
    let min_eig = min_eigenvalue(matrix);
    if min_eig < GAP_PSD_MARGIN {
        return Ok(None);
    }
    let dist = kd_distribution(&f, pair, GAP_STRICT_TOL)?;
    let (_, _, worst_imag) = dist.worst_imag();
    let (_, _, min_real) = dist.min_real();
    if worst_imag > GAP_STRICT_TOL || min_real < GAP_ENTRY_FACTOR * opts.entry_tol {
        return Ok(None);
    }
    match lp_membership(matrix, states, opts)? {
        LpVerdict::Infeasible { objective } => Ok(Some(GapCandidate {
            matrix: matrix.clone(),
            min_grid_entry: min_real,
            min_eigenvalue: min_eig,
            lp_objective: objective,
        })),
        _ => Ok(None),
    }
}

/// Random search for operators strictly inside the grid-classical cone
/// but outside the convex hull of the full labeled set in dimension 6,
/// the smallest dimension where the question is open. Runs exactly
/// `budget` attempts from the seed and returns every candidate that
/// survives [`vet_gap_candidate`]; an empty result is the expected
/// outcome.
pub fn gap_search(
    profile: &DimensionProfile,
    pair: &DftPair,
    budget: usize,
    seed: u64,
    opts: &DecomposeOptions,
) -> Result<Vec<GapCandidate>> {
    if profile.d() != 6 {
        return Err(Error::GapSearchDimension { d: profile.d() });
    }
    let states = enumerate_all(profile, pair)?;
    let mut rng = seeded_rng(seed);
    let d = pair.dim();
    let mut found = Vec::new();
    for _ in 0..budget {
        let base = convex_mixture(&mut rng, &states);
        let mut direction = CMatrix::zeros(d, d);
        for (_, state) in &states {
            let c: f64 = StandardNormal.sample(&mut rng);
            direction += (state * state.adjoint()) * Complex64::new(c, 0.0);
        }
        let shift = trace(&direction) / Complex64::new(d as f64, 0.0);
        for i in 0..d {
            direction[(i, i)] -= shift;
        }
        let norm = direction.norm();
        if norm < 1e-12 {
            continue;
        }
        direction /= Complex64::new(norm, 0.0);

        let q0 = kd_distribution(
            &HermitianOperator::new(base.clone(), 1e-9)?,
            pair,
            opts.entry_tol,
        )?;
        let dq = kd_distribution(
            &HermitianOperator::new(direction.clone(), 1e-9)?,
            pair,
            opts.entry_tol,
        )?;
        let mut t_max = f64::INFINITY;
        for i in 0..d {
            for j in 0..d {
                let slope = dq.grid()[(i, j)].re;
                if slope < -1e-15 {
                    let level = q0.grid()[(i, j)].re.max(0.0);
                    t_max = t_max.min(level / -slope);
                }
            }
        }
        if !t_max.is_finite() || t_max <= 0.0 {
            continue;
        }
        let mut t = 0.98 * t_max;
        for _ in 0..12 {
            let candidate = &base + &direction * Complex64::new(t, 0.0);
            if min_eigenvalue(&candidate) >= GAP_PSD_MARGIN {
                if let Some(hit) = vet_gap_candidate(pair, &states, &candidate, opts)? {
                    found.push(hit);
                }
                break;
            }
            t *= 0.9;
        }
    }
    Ok(found)
}
