//! Integer scaffolding for factored dimensions.
//!
//! A dimension `d` is carried around as a [`DimensionProfile`]: its prime
//! powers, its divisor list, and a [`CrtBasis`] of reconstruction
//! coefficients. A factorization `d = x * y` becomes a [`DivisorSplit`],
//! which owns the index bookkeeping used throughout the crate: the split of
//! a row index `i = k*y + m` and a column index `j = l*x + s`, and the
//! per-prime residue maps behind `m` and `s`.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Largest dimension accepted by [`DimensionProfile::factorize`].
pub const DEFAULT_DIMENSION_CEILING: u64 = 1_000_000;

/// One prime power `p^r` of a factored dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrimePower {
    /// The prime `p`.
    pub prime: u64,
    /// The exponent `r`.
    pub exponent: u32,
    /// The value `p^r`.
    pub power: u64,
}

/// CRT reconstruction data for one prime power of `d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CrtTerm {
    /// The prime-power modulus `p^r`.
    pub modulus: u64,
    /// The cofactor `d / p^r`.
    pub complement: u64,
    /// The inverse of the cofactor modulo `p^r`.
    pub inverse: u64,
    /// `complement * inverse mod d`; 1 modulo `p^r`, 0 modulo the others.
    pub reconstruct: u64,
}

/// CRT reconstruction coefficients for every prime power of `d`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CrtBasis {
    d: u64,
    terms: Vec<CrtTerm>,
}

impl CrtBasis {
    fn new(d: u64, primes: &[PrimePower]) -> Self {
        let terms = primes
            .iter()
            .map(|pp| {
                let complement = d / pp.power;
                let inverse = mod_inverse(complement, pp.power);
                let reconstruct = mulmod(complement, inverse, d);
                CrtTerm {
                    modulus: pp.power,
                    complement,
                    inverse,
                    reconstruct,
                }
            })
            .collect();
        CrtBasis { d, terms }
    }

    /// One term per prime power, in ascending prime order.
    pub fn terms(&self) -> &[CrtTerm] {
        &self.terms
    }

    /// Reconstructs a value modulo `modulus` (any divisor of `d`) from
    /// per-prime residues, one per term.
    pub fn reconstruct(&self, residues: &[u64], modulus: u64) -> Result<u64> {
        if residues.len() != self.terms.len() {
            return Err(Error::ResidueArity {
                expected: self.terms.len(),
                found: residues.len(),
            });
        }
        if modulus == 1 {
            return Ok(0);
        }
        let mut acc: u128 = 0;
        for (res, term) in residues.iter().zip(&self.terms) {
            acc += u128::from(*res) * u128::from(term.reconstruct);
            acc %= u128::from(modulus);
        }
        Ok(acc as u64)
    }
}

/// A dimension together with its prime powers, divisors, and CRT basis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DimensionProfile {
    d: u64,
    primes: Vec<PrimePower>,
    divisors: Vec<u64>,
    crt: CrtBasis,
}

impl DimensionProfile {
    /// Factorizes `d` under the default ceiling.
    pub fn factorize(d: u64) -> Result<Self> {
        Self::factorize_with_ceiling(d, DEFAULT_DIMENSION_CEILING)
    }

    /// Factorizes `d`, rejecting 0 and anything above `ceiling`.
    pub fn factorize_with_ceiling(d: u64, ceiling: u64) -> Result<Self> {
        if d == 0 {
            return Err(Error::ZeroDimension);
        }
        if d > ceiling {
            return Err(Error::DimensionCeiling { d, ceiling });
        }
        let primes = trial_division(d);
        let divisors = divisor_list(&primes);
        let crt = CrtBasis::new(d, &primes);
        Ok(DimensionProfile {
            d,
            primes,
            divisors,
            crt,
        })
    }

    /// The dimension `d`.
    pub fn d(&self) -> u64 {
        self.d
    }

    /// Prime powers of `d` in strictly ascending prime order.
    pub fn primes(&self) -> &[PrimePower] {
        &self.primes
    }

    /// All divisors of `d` in ascending order; starts at 1, ends at `d`.
    pub fn divisors(&self) -> &[u64] {
        &self.divisors
    }

    /// The divisor count tau(d).
    pub fn divisor_count(&self) -> usize {
        self.divisors.len()
    }

    /// Whether `x` divides `d`.
    pub fn is_divisor(&self, x: u64) -> bool {
        x != 0 && self.d % x == 0
    }

    /// Whether `d` is `p^r` for a single prime `p` (with `r >= 1`).
    pub fn is_prime_power(&self) -> bool {
        self.primes.len() == 1
    }

    /// The total exponent `L = sum of r_u`; the length of every
    /// start-to-end path in the transfer graph.
    pub fn total_exponent(&self) -> u32 {
        self.primes.iter().map(|pp| pp.exponent).sum()
    }

    /// The CRT basis of `d`.
    pub fn crt(&self) -> &CrtBasis {
        &self.crt
    }

    /// The exponent of `prime` in divisor `x`.
    fn exponent_in(x: u64, prime: u64) -> u32 {
        let mut x = x;
        let mut e = 0;
        while x % prime == 0 {
            x /= prime;
            e += 1;
        }
        e
    }
}

/// Per-prime digit expansion of an index `i` in `[0, d)`.
///
/// `digits()[u][t]` is digit `t` (least significant first) of the residue
/// `i mod p_u^{r_u}` in base `p_u`; each inner vector has length `r_u`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DigitVector {
    digits: Vec<Vec<u32>>,
}

impl DigitVector {
    /// The digit table, one row per prime of the profile.
    pub fn digits(&self) -> &[Vec<u32>] {
        &self.digits
    }

    /// Recombines row `u` into the residue `i mod p_u^{r_u}`.
    pub fn residue(&self, u: usize, prime: u64) -> u64 {
        let mut acc: u64 = 0;
        for &digit in self.digits[u].iter().rev() {
            acc = acc * prime + u64::from(digit);
        }
        acc
    }
}

/// Expands `i` into per-prime digits. Requires `i < d`.
pub fn to_digits(profile: &DimensionProfile, i: u64) -> Result<DigitVector> {
    if i >= profile.d() {
        return Err(Error::IndexOutOfRange {
            index: i,
            modulus: profile.d(),
        });
    }
    let digits = profile
        .primes()
        .iter()
        .map(|pp| {
            let mut residue = i % pp.power;
            (0..pp.exponent)
                .map(|_| {
                    let digit = (residue % pp.prime) as u32;
                    residue /= pp.prime;
                    digit
                })
                .collect()
        })
        .collect();
    Ok(DigitVector { digits })
}

/// Recombines per-prime digits into the unique `i < d`, rejecting digits
/// at or above their base.
pub fn from_digits(profile: &DimensionProfile, digits: &DigitVector) -> Result<u64> {
    if digits.digits.len() != profile.primes().len() {
        return Err(Error::ResidueArity {
            expected: profile.primes().len(),
            found: digits.digits.len(),
        });
    }
    let mut residues = Vec::with_capacity(profile.primes().len());
    for (u, pp) in profile.primes().iter().enumerate() {
        let row = &digits.digits[u];
        if row.len() != pp.exponent as usize {
            return Err(Error::ResidueArity {
                expected: pp.exponent as usize,
                found: row.len(),
            });
        }
        for &digit in row {
            if u64::from(digit) >= pp.prime {
                return Err(Error::DigitOutOfRange {
                    digit,
                    base: pp.prime,
                });
            }
        }
        residues.push(digits.residue(u, pp.prime));
    }
    profile.crt().reconstruct(&residues, profile.d())
}

/// A factorization `d = x * y` with per-prime exponent bookkeeping.
///
/// Row indices split as `i = k*y + m` with `m` in `Z_y`, `k` in `Z_x`;
/// column indices split as `j = l*x + s` with `s` in `Z_x`, `l` in `Z_y`.
/// Both splits are computed through per-prime digit slices and must agree
/// with plain division, which the tests enforce.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DivisorSplit {
    x: u64,
    y: u64,
    x_powers: Vec<u64>,
    y_powers: Vec<u64>,
    k_units: Vec<u64>,
    l_units: Vec<u64>,
}

impl DivisorSplit {
    /// Builds the split for divisor `x` of the profile's dimension.
    pub fn new(profile: &DimensionProfile, x: u64) -> Result<Self> {
        if !profile.is_divisor(x) {
            return Err(Error::NotADivisor {
                value: x,
                d: profile.d(),
            });
        }
        let y = profile.d() / x;
        let mut x_powers = Vec::new();
        let mut y_powers = Vec::new();
        let mut k_units = Vec::new();
        let mut l_units = Vec::new();
        for pp in profile.primes() {
            let rx = DimensionProfile::exponent_in(x, pp.prime);
            let x_power = pp.prime.pow(rx);
            let y_power = pp.power / x_power;
            x_powers.push(x_power);
            y_powers.push(y_power);
            k_units.push(mod_inverse(y / y_power, x_power));
            l_units.push(mod_inverse(x / x_power, y_power));
        }
        Ok(DivisorSplit {
            x,
            y,
            x_powers,
            y_powers,
            k_units,
            l_units,
        })
    }

    /// The divisor `x`.
    pub fn x(&self) -> u64 {
        self.x
    }

    /// The cofactor `y = d / x`.
    pub fn y(&self) -> u64 {
        self.y
    }

    /// `p_u^{r_(u,x)}` for each prime, the `x`-side prime content.
    pub fn x_powers(&self) -> &[u64] {
        &self.x_powers
    }

    /// `p_u^{r_(u,y)}` for each prime, the `y`-side prime content.
    pub fn y_powers(&self) -> &[u64] {
        &self.y_powers
    }

    /// Splits a row index `i = k*y + m` through per-prime digit slices,
    /// returning `(m, k)`.
    ///
    /// `m` is rebuilt from the low digit slices `i mod p^{r_(u,y)}`. The
    /// quotient digit at each prime is the high slice of `i - m` scaled
    /// by the inverse of the coprime cofactor `y / p^{r_(u,y)}`, because
    /// `i - m = k * y` carries that unit into each prime component.
    pub fn index_split(&self, profile: &DimensionProfile, i: u64) -> Result<(u64, u64)> {
        if i >= profile.d() {
            return Err(Error::IndexOutOfRange {
                index: i,
                modulus: profile.d(),
            });
        }
        let mut m: u128 = 0;
        for (u, (pp, term)) in profile
            .primes()
            .iter()
            .zip(profile.crt().terms())
            .enumerate()
        {
            let low = (i % pp.power) % self.y_powers[u];
            m += u128::from(low) * u128::from(term.reconstruct);
        }
        let m = if self.y == 1 {
            0
        } else {
            (m % u128::from(self.y)) as u64
        };
        let mut k: u128 = 0;
        for (u, (pp, term)) in profile
            .primes()
            .iter()
            .zip(profile.crt().terms())
            .enumerate()
        {
            let residue = i % pp.power;
            let m_residue = m % pp.power;
            let diff = (residue + pp.power - m_residue) % pp.power;
            let digit = diff / self.y_powers[u];
            k += u128::from(mulmod(digit, self.k_units[u], self.x_powers[u]))
                * u128::from(term.reconstruct);
        }
        let k = if self.x == 1 {
            0
        } else {
            (k % u128::from(self.x)) as u64
        };
        Ok((m, k))
    }

    /// Splits a column index `j = l*x + s` through per-prime digit slices,
    /// returning `(s, l)`. Mirror image of [`Self::index_split`] with the
    /// roles of `x` and `y` exchanged.
    pub fn index_split_b(&self, profile: &DimensionProfile, j: u64) -> Result<(u64, u64)> {
        if j >= profile.d() {
            return Err(Error::IndexOutOfRange {
                index: j,
                modulus: profile.d(),
            });
        }
        let mut s: u128 = 0;
        for (u, (pp, term)) in profile
            .primes()
            .iter()
            .zip(profile.crt().terms())
            .enumerate()
        {
            let low = (j % pp.power) % self.x_powers[u];
            s += u128::from(low) * u128::from(term.reconstruct);
        }
        let s = if self.x == 1 {
            0
        } else {
            (s % u128::from(self.x)) as u64
        };
        let mut l: u128 = 0;
        for (u, (pp, term)) in profile
            .primes()
            .iter()
            .zip(profile.crt().terms())
            .enumerate()
        {
            let residue = j % pp.power;
            let s_residue = s % pp.power;
            let diff = (residue + pp.power - s_residue) % pp.power;
            let digit = diff / self.x_powers[u];
            l += u128::from(mulmod(digit, self.l_units[u], self.y_powers[u]))
                * u128::from(term.reconstruct);
        }
        let l = if self.y == 1 {
            0
        } else {
            (l % u128::from(self.y)) as u64
        };
        Ok((s, l))
    }

    /// Per-prime residues of a row class `m` in `Z_y`: `m mod p_u^{r_(u,y)}`.
    pub fn row_residues(&self, m: u64) -> Vec<u64> {
        self.y_powers.iter().map(|&q| m % q).collect()
    }

    /// Rebuilds a row class in `Z_y` from per-prime residues.
    pub fn row_from_residues(&self, profile: &DimensionProfile, residues: &[u64]) -> Result<u64> {
        profile.crt().reconstruct(residues, self.y)
    }

    /// Per-prime residues of a column class `s` in `Z_x`: `s mod p_u^{r_(u,x)}`.
    pub fn col_residues(&self, s: u64) -> Vec<u64> {
        self.x_powers.iter().map(|&q| s % q).collect()
    }

    /// Rebuilds a column class in `Z_x` from per-prime residues.
    pub fn col_from_residues(&self, profile: &DimensionProfile, residues: &[u64]) -> Result<u64> {
        profile.crt().reconstruct(residues, self.x)
    }
}

/// Residue coverage of the digit-slice index splits over a full sweep of
/// `[0, d)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CoverageReport {
    pub x: u64,
    pub y: u64,
    /// Distinct values of `k` observed (expected: `x`).
    pub k_values: usize,
    /// Distinct values of `m` observed (expected: `y`).
    pub m_values: usize,
    /// Distinct values of `s` observed (expected: `x`).
    pub s_values: usize,
    /// Distinct values of `l` observed (expected: `y`).
    pub l_values: usize,
    pub pass: bool,
}

/// Sweeps every index in `[0, d)` through both splits and counts the
/// distinct residues each component takes.
pub fn residue_coverage_check(profile: &DimensionProfile, x: u64) -> Result<CoverageReport> {
    let split = DivisorSplit::new(profile, x)?;
    let mut k_seen = vec![false; split.x() as usize];
    let mut m_seen = vec![false; split.y() as usize];
    let mut s_seen = vec![false; split.x() as usize];
    let mut l_seen = vec![false; split.y() as usize];
    for i in 0..profile.d() {
        let (m, k) = split.index_split(profile, i)?;
        let (s, l) = split.index_split_b(profile, i)?;
        m_seen[m as usize] = true;
        k_seen[k as usize] = true;
        s_seen[s as usize] = true;
        l_seen[l as usize] = true;
    }
    let count = |v: &[bool]| v.iter().filter(|&&b| b).count();
    let (k_values, m_values) = (count(&k_seen), count(&m_seen));
    let (s_values, l_values) = (count(&s_seen), count(&l_seen));
    let pass = k_values == split.x() as usize
        && m_values == split.y() as usize
        && s_values == split.x() as usize
        && l_values == split.y() as usize;
    Ok(CoverageReport {
        x: split.x(),
        y: split.y(),
        k_values,
        m_values,
        s_values,
        l_values,
        pass,
    })
}

/// One transfer family on the edge between divisor `x` and `x / p`.
///
/// `big` and `small` must be splits of the same profile with
/// `big.x() == small.x() * p`, where `p` is the prime at `prime_index`.
/// The family at `(m_big, s_small)` consists of `p` states on each side;
/// for each digit value `c` in `[0, p)` the big side carries the label
/// `(m_big, s_big[c])` and the small side `(m_small[c], s_small)`. The two
/// projector sums over a family are equal, which is the operator identity
/// the coefficient sweep and the marginal checker both rest on.
pub fn transfer_family(
    profile: &DimensionProfile,
    big: &DivisorSplit,
    small: &DivisorSplit,
    prime_index: usize,
    m_big: u64,
    s_small: u64,
) -> Result<(Vec<u64>, Vec<u64>)> {
    let prime = profile.primes()[prime_index].prime;
    if big.x() != small.x() * prime {
        return Err(Error::InvalidPath {
            detail: format!(
                "transfer edge must scale the divisor by one prime: {} vs {} * {}",
                big.x(),
                small.x(),
                prime
            ),
        });
    }
    let mut s_bigs = Vec::with_capacity(prime as usize);
    let mut m_smalls = Vec::with_capacity(prime as usize);
    let col_base = small.col_residues(s_small);
    let row_base = big.row_residues(m_big);
    for c in 0..prime {
        let mut col = col_base.clone();
        col[prime_index] += c * small.x_powers()[prime_index];
        s_bigs.push(big.col_from_residues(profile, &col)?);
        let mut row = row_base.clone();
        row[prime_index] += c * big.y_powers()[prime_index];
        m_smalls.push(small.row_from_residues(profile, &row)?);
    }
    Ok((s_bigs, m_smalls))
}

/// Greatest common divisor.
pub fn gcd(a: u64, b: u64) -> u64 {
    let (mut a, mut b) = (a, b);
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn mulmod(a: u64, b: u64, modulus: u64) -> u64 {
    ((u128::from(a) * u128::from(b)) % u128::from(modulus)) as u64
}

/// Modular inverse of `a` modulo `m` for coprime `a`, `m`; `m = 1` gives 0.
fn mod_inverse(a: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let (mut old_r, mut r) = (i128::from(a % m), i128::from(m));
    let (mut old_s, mut s) = (1i128, 0i128);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
    }
    debug_assert_eq!(old_r, 1, "inputs must be coprime");
    old_s.rem_euclid(i128::from(m)) as u64
}

fn trial_division(d: u64) -> Vec<PrimePower> {
    let mut rest = d;
    let mut primes = Vec::new();
    let mut p = 2;
    while p * p <= rest {
        if rest % p == 0 {
            let mut exponent = 0;
            while rest % p == 0 {
                rest /= p;
                exponent += 1;
            }
            primes.push(PrimePower {
                prime: p,
                exponent,
                power: p.pow(exponent),
            });
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if rest > 1 {
        primes.push(PrimePower {
            prime: rest,
            exponent: 1,
            power: rest,
        });
    }
    primes
}

fn divisor_list(primes: &[PrimePower]) -> Vec<u64> {
    let mut divisors = vec![1u64];
    for pp in primes {
        let base = divisors.clone();
        let mut power = 1u64;
        for _ in 0..pp.exponent {
            power *= pp.prime;
            divisors.extend(base.iter().map(|&v| v * power));
        }
    }
    divisors.sort_unstable();
    divisors
}
