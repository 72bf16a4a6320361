//! Hecke operators on q-expansions, the three case-study registries, and the
//! weakly holomorphic basis forms and companion forms built from them.
//!
//! Each case fixes a cusp form `g` spanning a one-dimensional space of cusp
//! forms, a weight-0 multiplier `L` with a simple pole at `∞`, and a master
//! form `g·L^s` with a simple pole. The basis forms with principal part
//! `±q^(-m)` are found by pole-order elimination over the family `g·L^r`;
//! the companion form `φ_p` is found by elimination over a companion family and
//! cross-checked against `Θ^(-r)` of the Hecke image of the master form.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::etaq::{EtaCombination, EtaQuotient};
use crate::qring::{QSeries, SeriesError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HeckeError {
    #[error("insufficient precision: need O(q^{needed}), have O(q^{have})")]
    InsufficientPrecision { needed: i64, have: i64 },
    #[error("gap condition violated for index {index}: coefficient of q^{exponent} is {value}")]
    GapViolation {
        index: i64,
        exponent: i64,
        value: String,
    },
    #[error("elimination at q^{exponent} needs the non-integral multiplier {value}")]
    NonIntegralCombination { exponent: i64, value: String },
    #[error("the two constructions of φ_{p} disagree at q^{exponent}")]
    CrossCheckMismatch { p: u64, exponent: i64 },
    #[error("{p} is not an admissible prime for case {case}: {reason}")]
    PrimeNotAdmissible {
        case: CaseId,
        p: u64,
        reason: String,
    },
    #[error("{m} is not a basis index for case {case}")]
    IndexNotAdmissible { case: CaseId, m: i64 },
    #[error(transparent)]
    Series(#[from] SeriesError),
}

// ---------------------------------------------------------------------------
// characters and Hecke operators

/// Dirichlet characters that occur here: trivial, or the nontrivial
/// character modulo 4.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Character {
    Trivial,
    Chi4,
}

impl Character {
    pub fn value(self, d: i64) -> i64 {
        match self {
            Character::Trivial => 1,
            Character::Chi4 => match d.rem_euclid(4) {
                1 => 1,
                3 => -1,
                _ => 0,
            },
        }
    }

    /// `χ(p^j)`.
    pub fn value_pow(self, p: u64, j: u32) -> i64 {
        self.value(p as i64).pow(j)
    }
}

/// `f | T_{k,χ}(p^n) = Σ_{j=0}^{n} χ(p^j) p^((k-1)j) f | U(p^(n-j)) | V(p^j)`,
/// exact to `O(q^precision)`.
///
/// `f` must be known to `O(q^(p^n · precision))`.
pub fn hecke_tpn(
    f: &QSeries,
    weight: i64,
    chi: Character,
    p: u64,
    n: u32,
    precision: i64,
) -> Result<QSeries, HeckeError> {
    assert!(p >= 2, "Hecke operators need a prime");
    let pn = (p as i64).pow(n);
    let needed = pn * precision;
    if f.precision() < needed {
        return Err(HeckeError::InsufficientPrecision {
            needed,
            have: f.precision(),
        });
    }
    let mut acc = QSeries::zero(precision);
    for j in 0..=n {
        let c = chi.value_pow(p, j);
        if c == 0 {
            continue;
        }
        let pj = (p as i64).pow(j);
        let scale = BigInt::from(c) * BigInt::from(p).pow((weight - 1) as u32 * j);
        let term = f.u_op(pn / pj).v_op(pj).truncate(precision).scale(&scale);
        acc = acc.add(&term);
    }
    Ok(acc.truncate(precision))
}

// ---------------------------------------------------------------------------
// case registry

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CaseId {
    /// Weight 2, level 32: `F = -g·L(2z)` with `g = η²(4z)η²(8z)`.
    Eo,
    /// Weight 4, level 9: `G = g1·L1²` with `g1 = η⁸(3z)`.
    Gko,
    /// Weight 3, level 16, character χ mod 4: `H = g2·L2²` with `g2 = η⁶(4z)`.
    Bg,
}

impl CaseId {
    pub const ALL: [CaseId; 3] = [CaseId::Eo, CaseId::Gko, CaseId::Bg];

    pub fn name(self) -> &'static str {
        match self {
            CaseId::Eo => "eo",
            CaseId::Gko => "gko",
            CaseId::Bg => "bg",
        }
    }
}

impl fmt::Display for CaseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CaseId {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "eo" => Ok(CaseId::Eo),
            "gko" => Ok(CaseId::Gko),
            "bg" => Ok(CaseId::Bg),
            other => Err(format!("unknown case {other:?} (expected eo, gko or bg)")),
        }
    }
}

/// A residue class `n ≡ residue (mod modulus)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Residue {
    pub modulus: i64,
    pub residue: i64,
}

impl Residue {
    pub fn contains(&self, n: i64) -> bool {
        n.rem_euclid(self.modulus) == self.residue
    }
}

impl fmt::Display for Residue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (mod {})", self.residue, self.modulus)
    }
}

/// The fixed data of one case study.
#[derive(Clone, Debug)]
pub struct CaseStudy {
    pub id: CaseId,
    pub level: u64,
    pub weight: i64,
    pub character: Character,
    /// `C(n) = 0` unless `n` lies in this class.
    pub support: Residue,
    /// Primes for which the limit theorem is stated.
    pub prime_residue: Residue,
    /// Sign `ε` of the principal part `ε q^(-m)` of the basis forms.
    pub basis_sign: i64,
    /// Basis forms are `ε q^(-m) + O(q^gap)`.
    pub gap_bound: i64,
    /// `r` with `Θ^r φ_p = phi_sign · (master | T(p))`.
    pub phi_theta_power: u32,
    pub phi_sign: i64,
}

impl CaseStudy {
    pub fn get(id: CaseId) -> CaseStudy {
        match id {
            CaseId::Eo => CaseStudy {
                id,
                level: 32,
                weight: 2,
                character: Character::Trivial,
                support: Residue { modulus: 4, residue: 3 },
                prime_residue: Residue { modulus: 4, residue: 3 },
                basis_sign: -1,
                gap_bound: 3,
                phi_theta_power: 1,
                phi_sign: 1,
            },
            CaseId::Gko => CaseStudy {
                id,
                level: 9,
                weight: 4,
                character: Character::Trivial,
                support: Residue { modulus: 3, residue: 2 },
                prime_residue: Residue { modulus: 3, residue: 2 },
                basis_sign: 1,
                gap_bound: 2,
                phi_theta_power: 3,
                phi_sign: -1,
            },
            CaseId::Bg => CaseStudy {
                id,
                level: 16,
                weight: 3,
                character: Character::Chi4,
                support: Residue { modulus: 4, residue: 3 },
                prime_residue: Residue { modulus: 4, residue: 3 },
                basis_sign: 1,
                gap_bound: 3,
                phi_theta_power: 2,
                phi_sign: -1,
            },
        }
    }

    /// Exponent `k-1` in the Hecke weights `p^((k-1)j)`.
    pub fn hecke_weight_exponent(&self) -> u32 {
        (self.weight - 1) as u32
    }

    fn eta(level: u64, f: &[(u64, i64)]) -> EtaQuotient {
        EtaQuotient::new(level, f).expect("registry quotients are valid")
    }

    /// `g`, `g1` or `g2`.
    pub fn cusp_form(&self) -> EtaCombination {
        match self.id {
            CaseId::Eo => Self::eta(32, &[(4, 2), (8, 2)]).into(),
            CaseId::Gko => Self::eta(9, &[(3, 8)]).into(),
            CaseId::Bg => Self::eta(16, &[(4, 6)]).into(),
        }
    }

    /// The weight-0 function with a simple pole in the product formula for
    /// the master form: `L`, `L1 = η³(z)/η³(9z) + 3`, `L2`.
    pub fn hauptmodul(&self) -> EtaCombination {
        match self.id {
            CaseId::Eo => Self::eta(32, &[(4, -2), (8, 6), (16, -4)]).into(),
            CaseId::Gko => EtaCombination::from(Self::eta(9, &[(1, 3), (9, -3)]))
                .add(&EtaCombination::constant(3, 9)),
            CaseId::Bg => Self::eta(16, &[(4, -2), (8, 6), (16, -4)]).into(),
        }
    }

    /// Multiplier of the basis family: `L(2z)`, `L1`, `L2`.
    pub fn multiplier(&self) -> EtaCombination {
        match self.id {
            CaseId::Eo => self.hauptmodul().dilate(2),
            _ => self.hauptmodul(),
        }
    }

    /// `F = -g·L(2z)`, `G = g1·L1²`, `H = g2·L2²`.
    pub fn master_form(&self) -> EtaCombination {
        match self.id {
            CaseId::Eo => self.family_member(1),
            CaseId::Gko | CaseId::Bg => self.family_member(2),
        }
    }

    /// `E_r`: `-g·L(2z)^r`, `g1·L1^r` or `g2·L2^r`.
    pub fn family_member(&self, r: u32) -> EtaCombination {
        let sign = if self.id == CaseId::Eo { -1 } else { 1 };
        self.cusp_form().mul(&self.multiplier().pow(r)).scale(sign)
    }

    /// Pole order of `E_r` at `∞`.
    pub fn family_pole(&self, r: u32) -> i64 {
        match self.id {
            CaseId::Eo => 2 * r as i64 - 1,
            CaseId::Gko | CaseId::Bg => r as i64 - 1,
        }
    }

    /// Step in `r` between members whose q-exponents share a residue class.
    pub fn family_step(&self) -> u32 {
        match self.id {
            CaseId::Eo => 2,
            CaseId::Gko => 3,
            CaseId::Bg => 4,
        }
    }

    /// `r` with `family_pole(r) == m`.
    fn family_index(&self, m: i64) -> u32 {
        match self.id {
            CaseId::Eo => ((m + 1) / 2) as u32,
            CaseId::Gko | CaseId::Bg => (m + 1) as u32,
        }
    }

    pub fn basis_index_ok(&self, m: i64) -> bool {
        match self.id {
            CaseId::Eo | CaseId::Bg => m >= -1 && m.rem_euclid(2) == 1,
            CaseId::Gko => m >= -1 && m % 3 != 0,
        }
    }

    pub fn check_prime(&self, p: u64) -> Result<(), HeckeError> {
        let reason = if !is_prime(p) {
            Some("not prime".to_string())
        } else if !self.prime_residue.contains(p as i64) {
            Some(format!("{p} ≢ {}", self.prime_residue))
        } else {
            None
        };
        match reason {
            Some(reason) => Err(HeckeError::PrimeNotAdmissible {
                case: self.id,
                p,
                reason,
            }),
            None => Ok(()),
        }
    }

    /// Predicted `v_p(C(p^(2m+1)))`.
    pub fn valuation_law(&self, p: u64, m: u32) -> u64 {
        let m = m as u64;
        match self.id {
            CaseId::Eo => m,
            CaseId::Gko if p == 2 => 3 * m + 1,
            CaseId::Gko => 3 * m,
            CaseId::Bg => 2 * m,
        }
    }

    /// Predicted lower bound for `v_p(master | U(p^(2m+1)) / C(p^(2m+1)) - g)`.
    pub fn convergence_law(&self, p: u64, m: u32) -> u64 {
        let m = m as u64;
        match self.id {
            CaseId::Eo => m + 1,
            CaseId::Gko if p == 2 => 3 * m + 2,
            CaseId::Gko => 3 * m + 3,
            CaseId::Bg => 2 * m + 2,
        }
    }

    /// Sign in `C(p^(2m+1)) ≡ ± p^((k-1)m) C(p) (mod p^((k-1)(m+1)))`.
    pub fn congruence_sign(&self, m: u32) -> i64 {
        match self.id {
            CaseId::Eo | CaseId::Gko => {
                if m % 2 == 0 {
                    1
                } else {
                    -1
                }
            }
            CaseId::Bg => 1,
        }
    }

    /// `f | T_{k,χ}(p^n)` with this case's weight and character.
    pub fn hecke(&self, f: &QSeries, p: u64, n: u32, precision: i64) -> Result<QSeries, HeckeError> {
        hecke_tpn(f, self.weight, self.character, p, n, precision)
    }

    /// `ρ = -χ(p) p^(k-1)`, the factor in `master | U(p) = ε Θ^r φ_p + ρ master | V(p)`.
    pub fn iteration_ratio(&self, p: u64) -> BigInt {
        -BigInt::from(self.character.value(p as i64)) * BigInt::from(p).pow(self.hecke_weight_exponent())
    }

    /// Base of the companion family: `L(z)L(2z)` (level 32 has genus 1, so
    /// no function there has a lone simple pole), `φ2 = η²(3z)/η⁶(9z)`,
    /// `φ2 = η²(8z)/η⁴(16z)`.
    pub fn phi_base(&self) -> EtaCombination {
        match self.id {
            CaseId::Eo => self.hauptmodul().mul(&self.multiplier()),
            CaseId::Gko => Self::eta(9, &[(3, 2), (9, -6)]).into(),
            CaseId::Bg => Self::eta(16, &[(8, 2), (16, -4)]).into(),
        }
    }

    fn phi_base_pole(&self) -> i64 {
        match self.id {
            CaseId::Eo => 3,
            CaseId::Gko | CaseId::Bg => 2,
        }
    }

    /// Multiplier of the companion family: `L(2z)`, `L1`, `L2`.
    pub fn phi_multiplier(&self) -> EtaCombination {
        self.multiplier()
    }

    fn phi_multiplier_pole(&self) -> i64 {
        match self.id {
            CaseId::Eo => 2,
            CaseId::Gko | CaseId::Bg => 1,
        }
    }

    fn phi_step(&self) -> u32 {
        match self.id {
            CaseId::Eo => 2,
            CaseId::Gko => 3,
            CaseId::Bg => 4,
        }
    }

    /// The weight of `φ_p`, `2 - k`.
    pub fn phi_weight(&self) -> i64 {
        2 - self.weight
    }

    /// Every member `E_r` of the basis family, as a combination of eta quotients
    /// on the case's level, has nonnegative order at each cusp other than `∞`.
    pub fn family_member_holomorphic_away_from_infinity(&self, r: u32) -> bool {
        combination_holomorphic(&self.family_member(r), self.level)
    }

    pub fn phi_member_holomorphic_away_from_infinity(&self, j: u32) -> bool {
        combination_holomorphic(&self.phi_base().mul(&self.phi_multiplier().pow(j)), self.level)
    }
}

fn combination_holomorphic(c: &EtaCombination, level: u64) -> bool {
    c.terms().iter().all(|(_, q)| {
        q.with_level(level)
            .map(|q| q.holomorphic_away_from_infinity())
            .unwrap_or(false)
    })
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

// ---------------------------------------------------------------------------
// elimination

/// A family of series indexed by an integer label, keyed by the exponent of
/// their leading term.
struct Family {
    by_order: BTreeMap<i64, (u32, QSeries)>,
}

impl Family {
    /// `start · mult^(step·t)` for `t = 0..count`, each known to `O(q^precision)`.
    fn build(
        start: &EtaCombination,
        mult: &EtaCombination,
        first_label: u32,
        step: u32,
        count: u32,
        precision: i64,
    ) -> Family {
        let stepper = mult.pow(step);
        let loss = -stepper.min_prefactor();
        let mut current = start.expand(precision + loss * count.saturating_sub(1) as i64);
        let mut by_order = BTreeMap::new();
        for t in 0..count {
            if t > 0 {
                current = stepper.apply_to(&current);
            }
            let member = current.truncate(precision).normalized();
            let order = member.order().expect("family members are nonzero");
            by_order.insert(order, (first_label + t * step, member));
        }
        Family { by_order }
    }

    /// Greedy pole-order elimination: clears every coefficient of `target` at
    /// exponents in `(lo, hi)` by subtracting integer multiples of members,
    /// lowest exponent first. Returns the result and the multiples used.
    fn eliminate(
        &self,
        mut residual: QSeries,
        lo: i64,
        hi: i64,
    ) -> Result<(QSeries, Vec<(u32, BigInt)>), HeckeError> {
        let mut used = Vec::new();
        for e in (lo + 1)..hi {
            let c = residual.at(e).clone();
            if c.is_zero() {
                continue;
            }
            let Some((label, member)) = self.by_order.get(&e) else {
                return Err(HeckeError::GapViolation {
                    index: -lo,
                    exponent: e,
                    value: c.to_string(),
                });
            };
            let lead = member.at(e);
            let (quot, rem) = c.div_rem(lead);
            if !rem.is_zero() {
                return Err(HeckeError::NonIntegralCombination {
                    exponent: e,
                    value: BigRational::new(c, lead.clone()).to_string(),
                });
            }
            residual = residual.sub(&member.scale(&quot));
            used.push((*label, -quot));
        }
        Ok((residual, used))
    }
}

/// A basis form with its elimination recipe `Σ c_r E_r`.
#[derive(Clone, Debug)]
pub struct BasisForm {
    pub case: CaseId,
    pub m: i64,
    pub series: QSeries,
    /// `(r, c_r)`, starting with the leading member.
    pub recipe: Vec<(u32, BigInt)>,
    /// Whether the coefficient of `q^1` had to be eliminated (rather than
    /// vanishing by the support condition).
    pub q1_eliminated: bool,
}

/// `E_r` to `O(q^precision)`.
pub fn build_er(case: &CaseStudy, r: u32, precision: i64) -> QSeries {
    case.family_member(r).expand(precision)
}

/// How the basis coefficients are solved for.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Elimination {
    /// Lowest exponent first, one member at a time.
    Greedy,
    /// Rational Gauss–Jordan on the full gap system, columns in reverse order.
    DenseReversed,
}

/// The unique basis form `ε q^(-m) + O(q^gap)` with integer coefficients.
pub fn build_basis_form(case: &CaseStudy, m: i64, precision: i64) -> Result<BasisForm, HeckeError> {
    build_basis_form_with(case, m, precision, Elimination::Greedy)
}

pub fn build_basis_form_with(
    case: &CaseStudy,
    m: i64,
    precision: i64,
    method: Elimination,
) -> Result<BasisForm, HeckeError> {
    if !case.basis_index_ok(m) {
        return Err(HeckeError::IndexNotAdmissible { case: case.id, m });
    }
    let gap = case.gap_bound;
    let working = precision.max(gap);
    let top = case.family_index(m);
    let step = case.family_step();
    let first = top % step;
    let count = (top - first) / step + 1;
    let start = case.family_member(first);
    let family = Family::build(&start, &case.multiplier(), first, step, count, working);

    let (top_series, lead) = {
        let (_, s) = &family.by_order[&-m];
        (s.clone(), s.at(-m).clone())
    };
    let sign = BigInt::from(case.basis_sign);
    if lead.abs() != BigInt::one() {
        return Err(HeckeError::NonIntegralCombination {
            exponent: -m,
            value: lead.to_string(),
        });
    }
    let lead_mult = &sign * &lead;
    let start_residual = top_series.scale(&lead_mult);
    let (series, mut used) = match method {
        Elimination::Greedy => family.eliminate(start_residual, -m, gap)?,
        Elimination::DenseReversed => dense_solve(&family, start_residual, -m, gap)?,
    };
    let q1_eliminated = used
        .iter()
        .any(|(r, _)| family_order_of(&family, *r) == Some(1));

    for e in (-m + 1)..gap {
        let c = series.at(e);
        if !c.is_zero() {
            return Err(HeckeError::GapViolation {
                index: m,
                exponent: e,
                value: c.to_string(),
            });
        }
    }
    if series.at(-m) != &sign {
        return Err(HeckeError::GapViolation {
            index: m,
            exponent: -m,
            value: series.at(-m).to_string(),
        });
    }
    let mut recipe = vec![(top, lead_mult)];
    recipe.append(&mut used);
    Ok(BasisForm {
        case: case.id,
        m,
        series: series.truncate(precision),
        recipe,
        q1_eliminated,
    })
}

fn family_order_of(family: &Family, label: u32) -> Option<i64> {
    family
        .by_order
        .iter()
        .find(|(_, (l, _))| *l == label)
        .map(|(e, _)| *e)
}

/// Solves for multiples of every member with leading exponent in `(lo, hi)`
/// so that `target + Σ x_i member_i` vanishes on that range, by rational
/// Gauss–Jordan elimination processing columns from the last member back.
fn dense_solve(
    family: &Family,
    target: QSeries,
    lo: i64,
    hi: i64,
) -> Result<(QSeries, Vec<(u32, BigInt)>), HeckeError> {
    let members: Vec<(i64, &(u32, QSeries))> = family
        .by_order
        .iter()
        .filter(|(e, _)| **e > lo && **e < hi)
        .map(|(e, m)| (*e, m))
        .collect();
    let rows: Vec<i64> = ((lo + 1)..hi)
        .filter(|&e| !target.at(e).is_zero() || members.iter().any(|(_, (_, s))| !s.at(e).is_zero()))
        .collect();
    let ncols = members.len();
    // Augmented matrix [A | -b].
    let mut a: Vec<Vec<BigRational>> = rows
        .iter()
        .map(|&e| {
            let mut row: Vec<BigRational> = members
                .iter()
                .map(|(_, (_, s))| BigRational::from_integer(s.at(e).clone()))
                .collect();
            row.push(BigRational::from_integer(-target.at(e).clone()));
            row
        })
        .collect();
    let mut pivot_row_of = vec![None; ncols];
    let mut next_row = 0;
    for col in (0..ncols).rev() {
        let Some(pr) = (next_row..a.len()).rev().find(|&r| !a[r][col].is_zero()) else {
            continue;
        };
        a.swap(next_row, pr);
        let inv = a[next_row][col].recip();
        for x in a[next_row].iter_mut() {
            *x = &*x * &inv;
        }
        for r in 0..a.len() {
            if r != next_row && !a[r][col].is_zero() {
                let factor = a[r][col].clone();
                for c in 0..=ncols {
                    let delta = &factor * &a[next_row][c];
                    a[r][c] -= delta;
                }
            }
        }
        pivot_row_of[col] = Some(next_row);
        next_row += 1;
    }
    // Inconsistent rows mean the gap cannot be reached.
    for (r, &e) in rows.iter().enumerate().skip(next_row) {
        if !a[r][ncols].is_zero() {
            return Err(HeckeError::GapViolation {
                index: -lo,
                exponent: e,
                value: a[r][ncols].to_string(),
            });
        }
    }
    let mut result = target;
    let mut used = Vec::new();
    for (col, (e, (label, series))) in members.iter().enumerate() {
        let x = match pivot_row_of[col] {
            Some(r) => a[r][ncols].clone(),
            None => BigRational::zero(),
        };
        if x.is_zero() {
            continue;
        }
        if !x.is_integer() {
            return Err(HeckeError::NonIntegralCombination {
                exponent: *e,
                value: x.to_string(),
            });
        }
        let xi = x.to_integer();
        result = result.add(&series.scale(&xi));
        used.push((*label, xi));
    }
    Ok((result, used))
}

// ---------------------------------------------------------------------------
// companion forms

/// `φ_p = q^(-p) + A(1) q + ...` of weight `2 - k`.
#[derive(Clone, Debug)]
pub struct PhiForm {
    pub case: CaseId,
    pub p: u64,
    pub series: QSeries,
    /// `(j, c_j)` in `φ_p = Σ c_j base·mult^j`.
    pub recipe: Vec<(u32, BigInt)>,
    /// Precision on which both constructions were compared.
    pub cross_check_precision: i64,
}

/// Builds `φ_p` by pole-order elimination over the companion family and checks it against
/// `Θ^(-r)(ε · master | T(p))`.
pub fn build_phi(case: &CaseStudy, p: u64, precision: i64) -> Result<PhiForm, HeckeError> {
    case.check_prime(p)?;
    let p_i = p as i64;
    let top = ((p_i - case.phi_base_pole()) / case.phi_multiplier_pole()) as u32;
    let step = case.phi_step();
    let first = top % step;
    let count = (top - first) / step + 1;
    let start = case.phi_base().mul(&case.phi_multiplier().pow(first));
    let working = precision.max(2);
    let family = Family::build(&start, &case.phi_multiplier(), first, step, count, working);
    let (_, top_series) = &family.by_order[&-p_i];
    let lead = top_series.at(-p_i).clone();
    if lead.abs() != BigInt::one() {
        return Err(HeckeError::NonIntegralCombination {
            exponent: -p_i,
            value: lead.to_string(),
        });
    }
    let (series, mut used) = family.eliminate(top_series.scale(&lead), -p_i, 1)?;
    let mut recipe = vec![(top, lead)];
    recipe.append(&mut used);

    let via_theta = phi_via_theta(case, p, working)?;
    for e in -p_i..working.min(via_theta.precision()) {
        if series.at(e) != via_theta.at(e) {
            return Err(HeckeError::CrossCheckMismatch { p, exponent: e });
        }
    }
    Ok(PhiForm {
        case: case.id,
        p,
        series: series.truncate(precision),
        recipe,
        cross_check_precision: working,
    })
}

/// `Θ^(-r)(ε · master | T(p))` to `O(q^precision)`, asserted integral.
pub fn phi_via_theta(case: &CaseStudy, p: u64, precision: i64) -> Result<QSeries, HeckeError> {
    let master = case.master_form().expand(p as i64 * precision);
    let image = case.hecke(&master, p, 1, precision)?.scale_i64(case.phi_sign);
    let (rat, integral) = image.theta_inverse(case.phi_theta_power)?;
    if !integral {
        let bad = rat
            .coeffs()
            .iter()
            .enumerate()
            .find(|(_, c)| !c.is_integer())
            .map(|(i, c)| (rat.valuation() + i as i64, c.to_string()))
            .unwrap_or_default();
        return Err(HeckeError::NonIntegralCombination {
            exponent: bad.0,
            value: bad.1,
        });
    }
    Ok(rat.to_integer().expect("integrality checked"))
}
