//! The pure states with classical KD distributions.
//!
//! For every factorization `d = x * y` there is a family of `d` unit
//! vectors indexed by a row class `m` in `Z_y` and a column class `s` in
//! `Z_x`:
//!
//! ```text
//! |psi_(x,m,s)> = 1/sqrt(x) * sum_k omega_x^(s*k) |a_(k*y + m)>
//!              = omega_d^(-m*s)/sqrt(y) * sum_l omega_y^(-m*l) |b_(l*x + s)>
//! ```
//!
//! The two expansions describe the same vector; [`build_pure_state`]
//! constructs both and insists they agree. The KD grid of such a state is
//! `1/d` on the congruence support `{(i, j) : i = m mod y, j = s mod x}`
//! and `0` elsewhere, so each family sits at one vertex of the divisor
//! lattice: `x = 1` is the standard basis, `x = d` the DFT basis.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::hilbert::{kd_distribution, omega_power, CMatrix, CVector, DftPair, HermitianOperator};
use crate::numtheory::{transfer_family, DimensionProfile, DivisorSplit};
use crate::{Error, Result};

/// Frobenius tolerance for the agreement of the two state expansions.
pub const DUAL_FORM_TOL: f64 = 1e-10;
/// Frobenius tolerance for projector aliasing during deduplication.
pub const ALIAS_TOL: f64 = 1e-10;
/// Frobenius tolerance for the transfer (marginal) identities.
pub const MARGINAL_TOL: f64 = 1e-10;

/// Label of one pure state: the divisor `x` and the classes `(m, s)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PureStateLabel {
    pub x: u64,
    pub m: u64,
    pub s: u64,
}

impl PureStateLabel {
    /// Bundles a label without validating it.
    pub fn new(x: u64, m: u64, s: u64) -> Self {
        PureStateLabel { x, m, s }
    }

    /// Checks `x | d`, `m < d/x`, `s < x`. The endpoint constraints
    /// (`x = d` forces `m = 0`, `x = 1` forces `s = 0`) follow from the
    /// range checks.
    pub fn validate(&self, profile: &DimensionProfile) -> Result<()> {
        if !profile.is_divisor(self.x) || self.m >= profile.d() / self.x || self.s >= self.x {
            return Err(Error::InvalidLabel {
                x: self.x,
                m: self.m,
                s: self.s,
                d: profile.d(),
            });
        }
        Ok(())
    }
}

impl std::fmt::Display for PureStateLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "(x={}, m={}, s={})", self.x, self.m, self.s)
    }
}

fn a_basis_form(profile: &DimensionProfile, label: &PureStateLabel) -> CVector {
    let d = profile.d();
    let (x, y) = (label.x, d / label.x);
    let scale = 1.0 / (x as f64).sqrt();
    let mut state = CVector::zeros(d as usize);
    for k in 0..x {
        let amplitude = omega_power(x, i128::from(label.s) * i128::from(k)).scale(scale);
        state[(k * y + label.m) as usize] = amplitude;
    }
    state
}

fn b_basis_form(profile: &DimensionProfile, pair: &DftPair, label: &PureStateLabel) -> CVector {
    let d = profile.d();
    let (x, y) = (label.x, d / label.x);
    let scale = 1.0 / (y as f64).sqrt();
    let phase = omega_power(d, -(i128::from(label.m) * i128::from(label.s))).scale(scale);
    let mut state = CVector::zeros(d as usize);
    for l in 0..y {
        let amplitude = phase * omega_power(y, -(i128::from(label.m) * i128::from(l)));
        let column = (l * x + label.s) as usize;
        for i in 0..d as usize {
            state[i] += amplitude * pair.matrix()[(i, column)];
        }
    }
    state
}

/// Distance between the two expansions of the labeled state.
pub fn dual_form_deviation(
    profile: &DimensionProfile,
    pair: &DftPair,
    label: &PureStateLabel,
) -> Result<f64> {
    label.validate(profile)?;
    let a = a_basis_form(profile, label);
    let b = b_basis_form(profile, pair, label);
    Ok((a - b).norm())
}

/// Builds the labeled pure state in the standard basis.
///
/// Both expansions are constructed and compared; a disagreement beyond
/// [`DUAL_FORM_TOL`] is an internal error, not a recoverable condition.
pub fn build_pure_state(
    profile: &DimensionProfile,
    pair: &DftPair,
    label: &PureStateLabel,
) -> Result<CVector> {
    label.validate(profile)?;
    if profile.d() != pair.d() {
        return Err(Error::DimensionMismatch {
            expected: profile.d() as usize,
            found: pair.dim(),
        });
    }
    let state = a_basis_form(profile, label);
    let deviation = (&state - b_basis_form(profile, pair, label)).norm();
    if deviation > DUAL_FORM_TOL {
        return Err(Error::DualFormMismatch { deviation });
    }
    Ok(state)
}

/// All `d` states of one divisor vertex, ordered by `(m, s)` with the
/// state at flat index `m * x + s`.
#[derive(Debug, Clone)]
pub struct VertexStateSet {
    x: u64,
    y: u64,
    labels: Vec<PureStateLabel>,
    states: Vec<CVector>,
}

impl VertexStateSet {
    /// Builds the family at divisor `x`.
    pub fn new(profile: &DimensionProfile, pair: &DftPair, x: u64) -> Result<Self> {
        if !profile.is_divisor(x) {
            return Err(Error::NotADivisor {
                value: x,
                d: profile.d(),
            });
        }
        let y = profile.d() / x;
        let mut labels = Vec::with_capacity(profile.d() as usize);
        let mut states = Vec::with_capacity(profile.d() as usize);
        for m in 0..y {
            for s in 0..x {
                let label = PureStateLabel::new(x, m, s);
                states.push(build_pure_state(profile, pair, &label)?);
                labels.push(label);
            }
        }
        Ok(VertexStateSet {
            x,
            y,
            labels,
            states,
        })
    }

    /// The divisor of this vertex.
    pub fn x(&self) -> u64 {
        self.x
    }

    /// The cofactor `y = d / x`.
    pub fn y(&self) -> u64 {
        self.y
    }

    /// Number of states; always `d`.
    pub fn len(&self) -> usize {
        self.states.len()
    }

    /// Whether the set is empty (never, for a valid profile).
    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Labels in `(m, s)` order.
    pub fn labels(&self) -> &[PureStateLabel] {
        &self.labels
    }

    /// States in `(m, s)` order.
    pub fn states(&self) -> &[CVector] {
        &self.states
    }

    /// Flat index of the `(m, s)` state.
    pub fn index_of(&self, m: u64, s: u64) -> usize {
        (m * self.x + s) as usize
    }

    /// The `(m, s)` state.
    pub fn state(&self, m: u64, s: u64) -> &CVector {
        &self.states[self.index_of(m, s)]
    }
}

/// Enumerates every labeled state: all divisors `x` ascending, then
/// `(m, s)` within each vertex. Exactly `d * tau(d)` entries.
pub fn enumerate_all(
    profile: &DimensionProfile,
    pair: &DftPair,
) -> Result<Vec<(PureStateLabel, CVector)>> {
    let mut out = Vec::with_capacity(profile.d() as usize * profile.divisor_count());
    for &x in profile.divisors() {
        let set = VertexStateSet::new(profile, pair, x)?;
        out.extend(set.labels.iter().copied().zip(set.states.iter().cloned()));
    }
    Ok(out)
}

/// Groups state indices whose projectors coincide within `tol`
/// (Frobenius). Labels are never merged; singleton groups are included,
/// so `groups.len()` is the number of distinct projectors.
pub fn alias_groups(states: &[(PureStateLabel, CVector)], tol: f64) -> Vec<Vec<usize>> {
    let projectors: Vec<CMatrix> = states.iter().map(|(_, v)| v * v.adjoint()).collect();
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (idx, projector) in projectors.iter().enumerate() {
        let found = groups
            .iter_mut()
            .find(|group| (projector - &projectors[group[0]]).norm() <= tol);
        match found {
            Some(group) => group.push(idx),
            None => groups.push(vec![idx]),
        }
    }
    groups
}

/// Result of checking one state's KD grid against the congruence value
/// law: `1/d` on the support `{i = m mod y, j = s mod x}`, `0` elsewhere.
#[derive(Debug, Clone, Serialize)]
pub struct ValueLawReport {
    pub label: PureStateLabel,
    /// Entries more than `tol` away from 0.
    pub support_size: usize,
    /// Whether the numeric support equals the congruence pattern.
    pub support_matches: bool,
    /// Largest deviation from the predicted value over all entries.
    pub max_deviation: f64,
    pub pass: bool,
}

/// Checks the value law of a labeled state's KD grid at tolerance `tol`.
pub fn check_value_law(
    profile: &DimensionProfile,
    pair: &DftPair,
    label: &PureStateLabel,
    tol: f64,
) -> Result<ValueLawReport> {
    let state = build_pure_state(profile, pair, label)?;
    let f = HermitianOperator::projector(&state);
    let dist = kd_distribution(&f, pair, tol)?;
    let d = profile.d();
    let (x, y) = (label.x, d / label.x);
    let mut support_size = 0;
    let mut support_matches = true;
    let mut max_deviation = 0.0f64;
    for i in 0..d {
        for j in 0..d {
            let entry = dist.grid()[(i as usize, j as usize)];
            let on_support = i % y == label.m && j % x == label.s;
            let expected = if on_support { 1.0 / d as f64 } else { 0.0 };
            let deviation = (entry - Complex64::new(expected, 0.0)).norm();
            max_deviation = max_deviation.max(deviation);
            let numerically_nonzero = entry.norm() > tol;
            if numerically_nonzero {
                support_size += 1;
            }
            if numerically_nonzero != on_support {
                support_matches = false;
            }
        }
    }
    let pass = support_matches && max_deviation <= tol && support_size == d as usize;
    Ok(ValueLawReport {
        label: *label,
        support_size,
        support_matches,
        max_deviation,
        pass,
    })
}

/// Result of checking every transfer family on the edge `(x, x/p)`.
#[derive(Debug, Clone, Serialize)]
pub struct MarginalReport {
    pub x: u64,
    pub prime: u64,
    /// Families checked; always `d / p`.
    pub families: usize,
    /// Largest Frobenius mismatch over all families.
    pub max_deviation: f64,
    pub pass: bool,
}

/// Checks the transfer identity between the vertex at `x` and the vertex
/// at `x / p` for every index family: the sum of the `p` projectors on
/// one side equals the sum of the `p` projectors on the other.
pub fn check_marginal_identity(
    profile: &DimensionProfile,
    pair: &DftPair,
    x: u64,
    prime: u64,
    tol: f64,
) -> Result<MarginalReport> {
    let prime_index = profile
        .primes()
        .iter()
        .position(|pp| pp.prime == prime)
        .ok_or(Error::NotADivisor {
            value: prime,
            d: profile.d(),
        })?;
    if !profile.is_divisor(x) || x % prime != 0 {
        return Err(Error::NotADivisor {
            value: x,
            d: profile.d(),
        });
    }
    let big_split = DivisorSplit::new(profile, x)?;
    let small_split = DivisorSplit::new(profile, x / prime)?;
    let big = VertexStateSet::new(profile, pair, x)?;
    let small = VertexStateSet::new(profile, pair, x / prime)?;
    let n = profile.d() as usize;
    let mut families = 0;
    let mut max_deviation = 0.0f64;
    for m_big in 0..big.y() {
        for s_small in 0..small.x() {
            let (s_bigs, m_smalls) = transfer_family(
                profile,
                &big_split,
                &small_split,
                prime_index,
                m_big,
                s_small,
            )?;
            let mut lhs = CMatrix::zeros(n, n);
            for &s in &s_bigs {
                let v = big.state(m_big, s);
                lhs += v * v.adjoint();
            }
            let mut rhs = CMatrix::zeros(n, n);
            for &m in &m_smalls {
                let v = small.state(m, s_small);
                rhs += v * v.adjoint();
            }
            max_deviation = max_deviation.max((lhs - rhs).norm());
            families += 1;
        }
    }
    Ok(MarginalReport {
        x,
        prime,
        families,
        max_deviation,
        pass: max_deviation <= tol,
    })
}

/// Convenience map from labels to flat indices for a list of labeled
/// states; duplicate labels keep their first position.
pub fn label_index(states: &[(PureStateLabel, CVector)]) -> BTreeMap<PureStateLabel, usize> {
    let mut map = BTreeMap::new();
    for (idx, (label, _)) in states.iter().enumerate() {
        map.entry(*label).or_insert(idx);
    }
    map
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn setup(d: u64) -> (DimensionProfile, DftPair) {
        (
            DimensionProfile::factorize(d).unwrap(),
            DftPair::new(d).unwrap(),
        )
    }

    #[test]
    fn label_validation() {
        let (profile, _) = setup(6);
        assert!(PureStateLabel::new(2, 2, 1).validate(&profile).is_ok());
        assert!(PureStateLabel::new(4, 0, 0).validate(&profile).is_err());
        assert!(PureStateLabel::new(2, 3, 0).validate(&profile).is_err());
        assert!(PureStateLabel::new(2, 0, 2).validate(&profile).is_err());
        // Endpoint constraints are subsumed by the range checks.
        assert!(PureStateLabel::new(6, 1, 0).validate(&profile).is_err());
        assert!(PureStateLabel::new(1, 0, 1).validate(&profile).is_err());
    }

    #[test]
    fn middle_vertex_state_in_dimension_four() {
        let (profile, pair) = setup(4);
        let state = build_pure_state(&profile, &pair, &PureStateLabel::new(2, 1, 1)).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert_abs_diff_eq!(state[1].re, r, epsilon = 1e-14);
        assert_abs_diff_eq!(state[3].re, -r, epsilon = 1e-14);
        assert!(state[0].norm() < 1e-14 && state[2].norm() < 1e-14);
    }

    #[test]
    fn endpoint_vertices_recover_the_two_bases() {
        let (profile, pair) = setup(6);
        for i in 0..6u64 {
            let a = build_pure_state(&profile, &pair, &PureStateLabel::new(1, i, 0)).unwrap();
            for k in 0..6usize {
                let expected = if k as u64 == i { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(a[k].re, expected, epsilon = 1e-14);
                assert_abs_diff_eq!(a[k].im, 0.0, epsilon = 1e-14);
            }
        }
        for j in 0..6u64 {
            let b = build_pure_state(&profile, &pair, &PureStateLabel::new(6, 0, j)).unwrap();
            let col = pair.basis_vector(j as usize);
            assert!((b - col).norm() < 1e-12);
        }
    }

    #[test]
    fn states_are_unit_norm() {
        for d in [2u64, 3, 4, 6, 8, 9, 12] {
            let (profile, pair) = setup(d);
            for (label, state) in enumerate_all(&profile, &pair).unwrap() {
                assert!(
                    (state.norm() - 1.0).abs() <= 1e-12,
                    "norm off at d={d} {label}"
                );
            }
        }
    }

    #[test]
    fn dual_forms_agree_through_dimension_twelve() {
        for d in 1..=12u64 {
            let (profile, pair) = setup(d);
            for (label, _) in enumerate_all(&profile, &pair).unwrap() {
                let dev = dual_form_deviation(&profile, &pair, &label).unwrap();
                assert!(dev <= DUAL_FORM_TOL, "d={d} {label}: {dev:.3e}");
            }
        }
    }

    #[test]
    fn enumeration_counts_and_aliases() {
        let (profile, pair) = setup(2);
        let states = enumerate_all(&profile, &pair).unwrap();
        assert_eq!(states.len(), 4);
        assert_eq!(alias_groups(&states, ALIAS_TOL).len(), 4);

        let (profile, pair) = setup(3);
        let states = enumerate_all(&profile, &pair).unwrap();
        assert_eq!(states.len(), 6);
        assert_eq!(alias_groups(&states, ALIAS_TOL).len(), 6);

        let (profile, pair) = setup(4);
        let states = enumerate_all(&profile, &pair).unwrap();
        assert_eq!(states.len(), 12);
        let groups = alias_groups(&states, ALIAS_TOL);
        assert!(groups.iter().all(|g| !g.is_empty()));
        assert_eq!(groups.iter().map(Vec::len).sum::<usize>(), 12);
    }

    #[test]
    fn vertex_sum_is_a_congruence_class_projector() {
        let (profile, pair) = setup(6);
        let set = VertexStateSet::new(&profile, &pair, 2).unwrap();
        // Summing over s at fixed m gives the projector onto the a-basis
        // indices congruent to m mod y.
        for m in 0..3u64 {
            let mut sum = CMatrix::zeros(6, 6);
            for s in 0..2u64 {
                let v = set.state(m, s);
                sum += v * v.adjoint();
            }
            for i in 0..6usize {
                let expected = if i as u64 % 3 == m { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(sum[(i, i)].re, expected, epsilon = 1e-12);
            }
        }
        // The full vertex sum has trace d.
        let mut total = CMatrix::zeros(6, 6);
        for v in set.states() {
            total += v * v.adjoint();
        }
        assert_abs_diff_eq!(crate::hilbert::trace(&total).re, 6.0, epsilon = 1e-12);
    }

    #[test]
    fn value_law_frozen_example() {
        let (profile, pair) = setup(6);
        let report = check_value_law(&profile, &pair, &PureStateLabel::new(2, 1, 0), 1e-9).unwrap();
        assert!(report.pass, "{report:?}");
        assert_eq!(report.support_size, 6);
        // Support sits exactly on i = 1 mod 3, j = 0 mod 2.
        let state = build_pure_state(&profile, &pair, &PureStateLabel::new(2, 1, 0)).unwrap();
        let f = HermitianOperator::projector(&state);
        let dist = kd_distribution(&f, &pair, 1e-9).unwrap();
        for i in 0..6usize {
            for j in 0..6usize {
                let expected = if i % 3 == 1 && j % 2 == 0 {
                    1.0 / 6.0
                } else {
                    0.0
                };
                assert_abs_diff_eq!(dist.grid()[(i, j)].re, expected, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn value_law_all_labels_small_dimensions() {
        for d in [2u64, 3, 4, 6, 8, 9] {
            let (profile, pair) = setup(d);
            for (label, _) in enumerate_all(&profile, &pair).unwrap() {
                let report = check_value_law(&profile, &pair, &label, 1e-9).unwrap();
                assert!(report.pass, "d={d} {label}: {report:?}");
            }
        }
    }

    #[test]
    fn marginal_identity_small_instances() {
        for (d, x, p) in [
            (6u64, 2u64, 2u64),
            (6, 6, 3),
            (4, 2, 2),
            (8, 4, 2),
            (12, 6, 3),
        ] {
            let (profile, pair) = setup(d);
            let report = check_marginal_identity(&profile, &pair, x, p, MARGINAL_TOL).unwrap();
            assert!(report.pass, "d={d} x={x} p={p}: {report:?}");
            assert_eq!(report.families as u64, d / p);
        }
    }

    #[test]
    fn marginal_identity_rejects_bad_edge() {
        let (profile, pair) = setup(6);
        assert!(check_marginal_identity(&profile, &pair, 3, 2, MARGINAL_TOL).is_err());
        assert!(check_marginal_identity(&profile, &pair, 6, 5, MARGINAL_TOL).is_err());
    }
}
