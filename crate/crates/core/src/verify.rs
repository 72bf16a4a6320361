//! Verification engines for the limit theorems, the congruence lemmas and the
//! operator identities, producing reports that state the precision under
//! which every claim was certified.
//!
//! All checks read from a single expansion of the master form per grid.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::heckebasis::{build_basis_form, build_phi, is_prime, CaseId, CaseStudy, HeckeError};
use crate::qring::{vp_int, QSeries};

/// Number of coefficients past `q^0` checked by default.
pub const DEFAULT_N_CHECK: i64 = 40;
/// Longest master-form expansion a grid may request by default.
pub const DEFAULT_BUDGET: i64 = 1_000_000;
/// Default bound of the nondivisibility sweep.
pub const DEFAULT_SWEEP_BOUND: u64 = 2000;
/// Coefficients with more digits than this are reported by digest.
pub const PRINT_DIGITS: usize = 200;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum VerifyError {
    #[error(transparent)]
    Hecke(#[from] HeckeError),
    #[error("check precision must be positive, got {0}")]
    CheckPrecision(i64),
    #[error("the grid lists no primes")]
    EmptyGrid,
}

// ---------------------------------------------------------------------------
// grids

/// Primes, `m_max` per prime and the precisions of a verification run.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GridSpec {
    pub case: CaseId,
    /// `p -> m_max`.
    pub cells: BTreeMap<u64, u32>,
    pub n_check: i64,
    pub budget: i64,
}

impl GridSpec {
    /// Rejects primes outside the case's residue class.
    pub fn new(
        case: CaseId,
        cells: impl IntoIterator<Item = (u64, u32)>,
        n_check: i64,
        budget: i64,
    ) -> Result<Self, VerifyError> {
        if n_check < 1 {
            return Err(VerifyError::CheckPrecision(n_check));
        }
        let study = CaseStudy::get(case);
        let mut map = BTreeMap::new();
        for (p, m) in cells {
            study.check_prime(p)?;
            let e = map.entry(p).or_insert(m);
            *e = (*e).max(m);
        }
        if map.is_empty() {
            return Err(VerifyError::EmptyGrid);
        }
        Ok(GridSpec {
            case,
            cells: map,
            n_check,
            budget,
        })
    }

    pub fn default_grid(case: CaseId) -> Self {
        let cells: &[(u64, u32)] = match case {
            CaseId::Eo => &[(3, 2), (7, 1), (11, 1), (19, 0), (23, 0)],
            CaseId::Gko => &[(2, 2), (5, 1), (11, 0), (17, 0)],
            CaseId::Bg => &[(3, 2), (7, 1), (11, 0)],
        };
        GridSpec::new(case, cells.iter().copied(), DEFAULT_N_CHECK, DEFAULT_BUDGET)
            .expect("default grid is admissible")
    }

    /// Series are compared on `O(q^(n_check + 1))`.
    pub fn working_precision(&self) -> i64 {
        self.n_check + 1
    }

    /// Master-form precision needed to read `p^e`-fold `U` images to the
    /// working precision; `None` on overflow.
    pub fn required_precision(&self, p: u64, e: u32) -> Option<i64> {
        (p as i64).checked_pow(e)?.checked_mul(self.working_precision())
    }

    pub fn within_budget(&self, p: u64, e: u32) -> bool {
        self.required_precision(p, e)
            .is_some_and(|n| n <= self.budget)
    }

    /// Longest expansion any in-budget cell needs.
    pub fn master_precision(&self) -> i64 {
        let mut best = self.working_precision();
        for (&p, &m_max) in &self.cells {
            for e in 0..=2 * m_max + 1 {
                if let Some(n) = self.required_precision(p, e).filter(|&n| n <= self.budget) {
                    best = best.max(n);
                }
            }
        }
        best
    }
}

// ---------------------------------------------------------------------------
// reports

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Check {
    /// `v_p(C(p^(2m+1)))` equals the case law.
    ValuationLaw,
    /// `v_p(master | U(p^(2m+1)) - C(p^(2m+1)) cusp) >= law + v_p(C(p^(2m+1)))`.
    ConvergenceLaw,
    /// `C(p^(2m+1)) ≡ ± p^((k-1)m) C(p) (mod p^((k-1)(m+1)))`.
    CongruenceLemma,
    /// The valuation implied by the congruence and `v_p(C(p))` matches.
    Consistency,
    /// `master | T(p^n) = χ(p^n) p^((k-1)n) basis(p^n) + C(p^n) cusp`.
    HeckeDecomposition,
    /// `master | T(p^(2m)) = p^(2(k-1)m) basis(p^(2m))`.
    EvenHeckeVanishing,
    /// `master | T(p) = ε Θ^r(φ_p)`.
    HeckeTheta,
    /// `master | U(p) = ε Θ^r(φ_p) + ρ master | V(p)`.
    SingleStepU,
    /// The iterated form of the single-step relation.
    IteratedU,
    /// `master | U(p^(2m+1)) ≡ ε ρ^m Θ^r(φ_p) (mod p^((k-1)(m+1)))`.
    IteratedUCongruence,
    /// `v_p(C(p))` equals the `m = 0` law.
    Nondivisibility,
}

impl Check {
    pub fn label(self) -> &'static str {
        match self {
            Check::ValuationLaw => "valuation-law",
            Check::ConvergenceLaw => "convergence-law",
            Check::CongruenceLemma => "congruence-lemma",
            Check::Consistency => "consistency",
            Check::HeckeDecomposition => "hecke-decomposition",
            Check::EvenHeckeVanishing => "even-hecke-vanishing",
            Check::HeckeTheta => "hecke-theta",
            Check::SingleStepU => "single-step-u",
            Check::IteratedU => "iterated-u",
            Check::IteratedUCongruence => "iterated-u-congruence",
            Check::Nondivisibility => "nondivisibility",
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    Pass,
    Fail,
    InsufficientPrecision,
    Error,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::Pass => "pass",
            Outcome::Fail => "FAIL",
            Outcome::InsufficientPrecision => "insufficient-precision",
            Outcome::Error => "error",
        })
    }
}

/// An exact coefficient, printed when short and digested otherwise.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CoefficientValue {
    /// `n` in `C(n)`.
    pub exponent: u64,
    pub valuation: Option<u64>,
    pub digits: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decimal: Option<String>,
    /// SHA-256 of the decimal string.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sha256: Option<String>,
}

impl CoefficientValue {
    pub fn new(exponent: u64, c: &BigInt, p: u64) -> Self {
        let decimal = c.to_string();
        let digits = decimal.trim_start_matches('-').len();
        let (decimal, sha256) = if digits <= PRINT_DIGITS {
            (Some(decimal), None)
        } else {
            (None, Some(hex::encode(Sha256::digest(decimal.as_bytes()))))
        };
        CoefficientValue {
            exponent,
            valuation: vp_int(c, p),
            digits,
            decimal,
            sha256,
        }
    }
}

impl fmt::Display for CoefficientValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.decimal, &self.sha256) {
            (Some(d), _) => write!(f, "C({}) = {d}", self.exponent),
            (None, Some(h)) => write!(
                f,
                "C({}) has {} digits, sha256 {}",
                self.exponent,
                self.digits,
                &h[..16]
            ),
            (None, None) => write!(f, "C({})", self.exponent),
        }
    }
}

/// One certified claim.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Entry {
    pub check: Check,
    pub p: u64,
    /// `m` for the theorem checks, `n` for Hecke decompositions.
    pub index: u32,
    /// Series compared on `O(q^precision)`; for coefficient checks, the
    /// master-form precision read from.
    pub precision: i64,
    pub outcome: Outcome,
    pub expected: String,
    pub observed: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coefficient: Option<CoefficientValue>,
}

impl Entry {
    fn new(check: Check, p: u64, index: u32, precision: i64) -> Self {
        Entry {
            check,
            p,
            index,
            precision,
            outcome: Outcome::Error,
            expected: String::new(),
            observed: String::new(),
            coefficient: None,
        }
    }

    fn judge(mut self, ok: bool, expected: impl Into<String>, observed: impl Into<String>) -> Self {
        self.outcome = if ok { Outcome::Pass } else { Outcome::Fail };
        self.expected = expected.into();
        self.observed = observed.into();
        self
    }

    fn short(mut self, needed: Option<i64>, have: i64) -> Self {
        self.outcome = Outcome::InsufficientPrecision;
        self.expected = match needed {
            Some(n) => format!("O(q^{n})"),
            None => "O(q^overflow)".into(),
        };
        self.observed = format!("O(q^{have})");
        self
    }

    fn error(mut self, e: impl fmt::Display) -> Self {
        self.outcome = Outcome::Error;
        self.observed = e.to_string();
        self
    }

    fn with_coefficient(mut self, c: CoefficientValue) -> Self {
        self.coefficient = Some(c);
        self
    }

    pub fn passed(&self) -> bool {
        self.outcome == Outcome::Pass
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ValuationReport {
    pub case: CaseId,
    pub n_check: i64,
    pub master_precision: i64,
    pub entries: Vec<Entry>,
}

impl ValuationReport {
    fn new(case: CaseId, n_check: i64, master_precision: i64, mut entries: Vec<Entry>) -> Self {
        entries.sort_by_key(|a| (a.p, a.check, a.index));
        ValuationReport {
            case,
            n_check,
            master_precision,
            entries,
        }
    }

    pub fn passed(&self) -> bool {
        self.entries.iter().all(Entry::passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Entry> {
        self.entries.iter().filter(|e| !e.passed())
    }

    pub fn of(&self, check: Check) -> impl Iterator<Item = &Entry> {
        self.entries.iter().filter(move |e| e.check == check)
    }

    pub fn find(&self, check: Check, p: u64, index: u32) -> Option<&Entry> {
        self.entries
            .iter()
            .find(|e| e.check == check && e.p == p && e.index == index)
    }

    /// 0 when every entry passes, 2 when any entry lacked precision or
    /// errored, 1 otherwise.
    pub fn exit_status(&self) -> i32 {
        if self
            .entries
            .iter()
            .any(|e| matches!(e.outcome, Outcome::InsufficientPrecision | Outcome::Error))
        {
            2
        } else if self.passed() {
            0
        } else {
            1
        }
    }

    pub fn merge(mut self, other: ValuationReport) -> ValuationReport {
        self.entries.extend(other.entries);
        self.master_precision = self.master_precision.max(other.master_precision);
        ValuationReport::new(self.case, self.n_check, self.master_precision, self.entries)
    }
}

// ---------------------------------------------------------------------------
// the engine

/// Runs every check of a grid against one master-form expansion.
pub struct Verifier {
    case: CaseStudy,
    grid: GridSpec,
    master: QSeries,
    cusp: QSeries,
}

fn pow_big(p: u64, e: u64) -> BigInt {
    BigInt::from(p).pow(e as u32)
}

fn show_val(v: Option<u64>) -> String {
    v.map_or("∞".into(), |v| v.to_string())
}

fn first_difference(a: &QSeries, b: &QSeries) -> String {
    let lo = a.valuation().min(b.valuation());
    let hi = a.precision().min(b.precision());
    match (lo..hi).find(|&n| a.coeff(n) != b.coeff(n)) {
        Some(n) => format!("differs at q^{n}"),
        None => "equal".into(),
    }
}

impl Verifier {
    pub fn new(grid: GridSpec) -> Self {
        let case = CaseStudy::get(grid.case);
        let master = case.master_form().expand(grid.master_precision());
        Self::with_master(grid, master)
    }

    /// Uses a precomputed master expansion (from a cache, or altered on
    /// purpose).
    pub fn with_master(grid: GridSpec, master: QSeries) -> Self {
        let case = CaseStudy::get(grid.case);
        let cusp = case.cusp_form().expand(grid.working_precision());
        Verifier {
            case,
            grid,
            master,
            cusp,
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn master(&self) -> &QSeries {
        &self.master
    }

    fn report(&self, entries: Vec<Entry>) -> ValuationReport {
        ValuationReport::new(
            self.grid.case,
            self.grid.n_check,
            self.master.precision(),
            entries,
        )
    }

    fn per_prime(&self, f: impl Fn(u64, u32) -> Vec<Entry> + Sync) -> ValuationReport {
        let cells: Vec<(u64, u32)> = self.grid.cells.iter().map(|(&p, &m)| (p, m)).collect();
        let entries = cells.par_iter().flat_map_iter(|&(p, m)| f(p, m)).collect();
        self.report(entries)
    }

    /// `C(p^(2m+1))` for `0 <= m <= m_max`, read from the master expansion.
    pub fn coefficient_chain(&self, p: u64, m_max: u32) -> Result<Vec<BigInt>, HeckeError> {
        (0..=m_max)
            .map(|m| {
                let n = (p as i64)
                    .checked_pow(2 * m + 1)
                    .ok_or(HeckeError::InsufficientPrecision {
                        needed: i64::MAX,
                        have: self.master.precision(),
                    })?;
                self.master
                    .coeff(n)
                    .cloned()
                    .ok_or(HeckeError::InsufficientPrecision {
                        needed: n + 1,
                        have: self.master.precision(),
                    })
            })
            .collect()
    }

    fn coefficient(&self, p: u64, e: u32) -> Option<BigInt> {
        let n = (p as i64).checked_pow(e)?;
        self.master.coeff(n).cloned()
    }

    fn valuation_entries(&self, p: u64, m_max: u32) -> Vec<Entry> {
        (0..=m_max)
            .map(|m| {
                let entry = Entry::new(Check::ValuationLaw, p, m, self.master.precision());
                let Some(c) = self.coefficient(p, 2 * m + 1) else {
                    return entry.short(
                        (p as i64).checked_pow(2 * m + 1).map(|n| n + 1),
                        self.master.precision(),
                    );
                };
                let v = vp_int(&c, p);
                let law = self.case.valuation_law(p, m);
                entry
                    .judge(v == Some(law), format!("= {law}"), format!("= {}", show_val(v)))
                    .with_coefficient(CoefficientValue::new(p.pow(2 * m + 1), &c, p))
            })
            .collect()
    }

    fn convergence_entries(&self, p: u64, m_max: u32) -> Vec<Entry> {
        let n = self.grid.working_precision();
        (0..=m_max)
            .map(|m| {
                let entry = Entry::new(Check::ConvergenceLaw, p, m, n);
                let needed = self.grid.required_precision(p, 2 * m + 1);
                let (Some(c), true) = (
                    self.coefficient(p, 2 * m + 1),
                    needed.is_some_and(|k| k <= self.master.precision()),
                ) else {
                    return entry.short(needed, self.master.precision());
                };
                let image = self.master.u_op(p.pow(2 * m + 1) as i64).truncate(n);
                let diff = image.sub(&self.cusp.scale(&c));
                let cert = diff.vp_certificate(p);
                let vc = vp_int(&c, p).map_or(i64::MAX, |v| v as i64);
                let law = self.case.convergence_law(p, m) as i64;
                let observed = match cert.bound {
                    None => "∞".to_string(),
                    Some(b) => (b - vc).to_string(),
                };
                entry.judge(
                    cert.bound.is_none() || (vc != i64::MAX && cert.at_least(law + vc)),
                    format!(">= {law}"),
                    format!(">= {observed}"),
                )
            })
            .collect()
    }

    fn congruence_entries(&self, p: u64, m_max: u32) -> Vec<Entry> {
        let k1 = self.case.hecke_weight_exponent() as u64;
        let cp = self.coefficient(p, 1);
        (0..=m_max)
            .map(|m| {
                let entry = Entry::new(Check::CongruenceLemma, p, m, self.master.precision());
                let (Some(c), Some(cp)) = (self.coefficient(p, 2 * m + 1), cp.as_ref()) else {
                    return entry.short(
                        (p as i64).checked_pow(2 * m + 1).map(|n| n + 1),
                        self.master.precision(),
                    );
                };
                let sign = self.case.congruence_sign(m);
                let target = BigInt::from(sign) * pow_big(p, k1 * m as u64) * cp;
                let modulus_exp = k1 * (m as u64 + 1);
                let v = vp_int(&(&c - &target), p);
                let ok = v.is_none_or(|v| v >= modulus_exp);
                let sign_str = if sign < 0 { "-" } else { "" };
                entry.judge(
                    ok,
                    format!("≡ {sign_str}{p}^{} C({p}) mod {p}^{modulus_exp}", k1 * m as u64),
                    format!("difference has valuation {}", show_val(v)),
                )
            })
            .collect()
    }

    fn consistency_entries(&self, p: u64, m_max: u32) -> Vec<Entry> {
        let k1 = self.case.hecke_weight_exponent() as u64;
        let Some(cp) = self.coefficient(p, 1) else {
            return vec![Entry::new(Check::Consistency, p, 0, self.master.precision())
                .short(Some(p as i64 + 1), self.master.precision())];
        };
        let v1 = vp_int(&cp, p);
        let congruences = self.congruence_entries(p, m_max);
        (0..=m_max)
            .map(|m| {
                let entry = Entry::new(Check::Consistency, p, m, self.master.precision());
                let Some(c) = self.coefficient(p, 2 * m + 1) else {
                    return entry.short(
                        (p as i64).checked_pow(2 * m + 1).map(|n| n + 1),
                        self.master.precision(),
                    );
                };
                let observed = vp_int(&c, p);
                let congruent = congruences[m as usize].passed();
                // With the congruence and v_p(C(p)) < k-1 the valuation is forced.
                let derived = v1.filter(|&v| congruent && v < k1).map(|v| k1 * m as u64 + v);
                let law = self.case.valuation_law(p, m);
                entry.judge(
                    derived == Some(law) && observed == Some(law),
                    format!("= {law}"),
                    format!(
                        "derived {}, observed {}",
                        derived.map_or("none".into(), |d| d.to_string()),
                        show_val(observed)
                    ),
                )
            })
            .collect()
    }

    /// `master | T(p^n)` to the working precision, or a short entry.
    fn hecke_image(&self, entry: &Entry, p: u64, n: u32) -> Result<QSeries, Entry> {
        let np = self.grid.working_precision();
        let needed = self.grid.required_precision(p, n);
        if !needed.is_some_and(|k| k <= self.master.precision() && k <= self.grid.budget) {
            return Err(entry.clone().short(needed, self.master.precision()));
        }
        self.case
            .hecke(&self.master, p, n, np)
            .map_err(|e| entry.clone().error(e))
    }

    fn hecke_factor(&self, p: u64, n: u32) -> BigInt {
        BigInt::from(self.case.character.value_pow(p, n))
            * pow_big(p, self.case.hecke_weight_exponent() as u64 * n as u64)
    }

    fn hecke_decomposition_entries(&self, p: u64, m_max: u32) -> Vec<Entry> {
        let np = self.grid.working_precision();
        (0..=2 * m_max + 1)
            .map(|n| {
                let entry = Entry::new(Check::HeckeDecomposition, p, n, np);
                let image = match self.hecke_image(&entry, p, n) {
                    Ok(s) => s,
                    Err(e) => return e,
                };
                let index = p.pow(n) as i64;
                let basis = match build_basis_form(&self.case, index, np) {
                    Ok(b) => b.series,
                    Err(e) => return entry.error(e),
                };
                let c = self.master.at(index).clone();
                let rhs = basis
                    .scale(&self.hecke_factor(p, n))
                    .add(&self.cusp.scale(&c));
                entry.judge(
                    image == rhs,
                    format!("χ(p^n) p^((k-1)n) basis({index}) + C({index}) cusp"),
                    first_difference(&image, &rhs),
                )
            })
            .collect()
    }

    fn even_hecke_entries(&self, p: u64, m_max: u32) -> Vec<Entry> {
        let np = self.grid.working_precision();
        (0..=m_max)
            .map(|m| {
                let entry = Entry::new(Check::EvenHeckeVanishing, p, m, np);
                let image = match self.hecke_image(&entry, p, 2 * m) {
                    Ok(s) => s,
                    Err(e) => return e,
                };
                let index = p.pow(2 * m) as i64;
                let basis = match build_basis_form(&self.case, index, np) {
                    Ok(b) => b.series,
                    Err(e) => return entry.error(e),
                };
                let rhs = basis.scale(&self.hecke_factor(p, 2 * m));
                entry.judge(
                    image == rhs,
                    format!("p^((k-1)2m) basis({index})"),
                    first_difference(&image, &rhs),
                )
            })
            .collect()
    }

    fn identity_entries(&self, p: u64, m_max: u32) -> Vec<Entry> {
        let np = self.grid.working_precision();
        let mut out = Vec::new();
        let short_all = |out: &mut Vec<Entry>, needed: Option<i64>, e: Option<&HeckeError>| {
            let mut push = |check, m| {
                let entry = Entry::new(check, p, m, np);
                out.push(match e {
                    Some(e) => entry.error(e),
                    None => entry.short(needed, self.master.precision()),
                });
            };
            push(Check::HeckeTheta, 0);
            push(Check::SingleStepU, 0);
            for m in 0..=m_max {
                push(Check::IteratedU, m);
                push(Check::IteratedUCongruence, m);
            }
        };
        // The largest usable m for this prime.
        let m_ok = (0..=m_max)
            .rev()
            .find(|&m| {
                self.grid
                    .required_precision(p, 2 * m + 1)
                    .is_some_and(|k| k <= self.master.precision() && k <= self.grid.budget)
            });
        let Some(m_top) = m_ok else {
            short_all(&mut out, self.grid.required_precision(p, 1), None);
            return out;
        };
        let phi_precision = p.pow(2 * m_top) as i64 * np;
        let phi = match build_phi(&self.case, p, phi_precision) {
            Ok(phi) => phi.series,
            Err(e) => {
                short_all(&mut out, None, Some(&e));
                return out;
            }
        };
        let eps = BigInt::from(self.case.phi_sign);
        let rho = self.case.iteration_ratio(p);
        let theta_phi = phi.theta(self.case.phi_theta_power);
        let master_v = self.master.v_op(p as i64).truncate(np);
        let master_u = |e: u32| self.master.u_op(p.pow(e) as i64).truncate(np);
        let lhs_tp = theta_phi.truncate(np).scale(&eps);

        let entry = Entry::new(Check::HeckeTheta, p, 0, np);
        out.push(match self.case.hecke(&self.master, p, 1, np) {
            Ok(image) => entry.judge(
                image == lhs_tp,
                "master | T(p) = ε Θ^r(φ_p)",
                first_difference(&image, &lhs_tp),
            ),
            Err(e) => entry.error(e),
        });

        let one_step = lhs_tp.add(&master_v.scale(&rho));
        let u1 = master_u(1);
        out.push(Entry::new(Check::SingleStepU, p, 0, np).judge(
            u1 == one_step,
            "master | U(p) = ε Θ^r(φ_p) + ρ master | V(p)",
            first_difference(&u1, &one_step),
        ));

        let k1 = self.case.hecke_weight_exponent() as u64;
        for m in 0..=m_max {
            if m > m_top {
                let needed = self.grid.required_precision(p, 2 * m + 1);
                out.push(Entry::new(Check::IteratedU, p, m, np).short(needed, self.master.precision()));
                out.push(
                    Entry::new(Check::IteratedUCongruence, p, m, np)
                        .short(needed, self.master.precision()),
                );
                continue;
            }
            let lhs = master_u(2 * m + 1);
            let mut rhs = master_v.scale(&rho.pow(m + 1));
            for l in 0..=m {
                let term = theta_phi
                    .u_op(p.pow(2 * l) as i64)
                    .truncate(np)
                    .scale(&(&eps * rho.pow(m - l)));
                rhs = rhs.add(&term);
            }
            out.push(Entry::new(Check::IteratedU, p, m, np).judge(
                lhs == rhs,
                "master | U(p^(2m+1)) = Σ ε ρ^(m-l) Θ^r(φ_p) | U(p^(2l)) + ρ^(m+1) master | V(p)",
                first_difference(&lhs, &rhs),
            ));

            let modulus = k1 * (m as u64 + 1);
            let residual = lhs.sub(&lhs_tp.scale(&rho.pow(m)));
            let cert = residual.vp_certificate(p);
            out.push(Entry::new(Check::IteratedUCongruence, p, m, np).judge(
                cert.at_least(modulus as i64),
                format!("≡ ε ρ^m Θ^r(φ_p) mod {p}^{modulus}"),
                format!(
                    "difference has valuation {}",
                    cert.bound.map_or("∞".into(), |b| b.to_string())
                ),
            ));
        }
        out
    }

    pub fn valuation_law(&self) -> ValuationReport {
        self.per_prime(|p, m| self.valuation_entries(p, m))
    }

    pub fn convergence_law(&self) -> ValuationReport {
        self.per_prime(|p, m| self.convergence_entries(p, m))
    }

    pub fn congruence_lemma(&self) -> ValuationReport {
        self.per_prime(|p, m| self.congruence_entries(p, m))
    }

    pub fn consistency(&self) -> ValuationReport {
        self.per_prime(|p, m| self.consistency_entries(p, m))
    }

    pub fn hecke_decomposition(&self) -> ValuationReport {
        self.per_prime(|p, m| self.hecke_decomposition_entries(p, m))
    }

    pub fn even_hecke_vanishing(&self) -> ValuationReport {
        self.per_prime(|p, m| self.even_hecke_entries(p, m))
    }

    pub fn operator_identities(&self) -> ValuationReport {
        self.per_prime(|p, m| self.identity_entries(p, m))
    }

    /// Every check on every cell.
    pub fn run(&self) -> ValuationReport {
        self.per_prime(|p, m| {
            let mut v = self.valuation_entries(p, m);
            v.extend(self.convergence_entries(p, m));
            v.extend(self.congruence_entries(p, m));
            v.extend(self.consistency_entries(p, m));
            v.extend(self.hecke_decomposition_entries(p, m));
            v.extend(self.even_hecke_entries(p, m));
            v.extend(self.identity_entries(p, m));
            v
        })
    }

    /// `v_p(C(p))` against the `m = 0` law for every admissible `p < bound`.
    pub fn sweep(&self, bound: u64) -> ValuationReport {
        self.report(sweep_entries(&self.case, &self.master, bound))
    }
}

fn sweep_entries(case: &CaseStudy, master: &QSeries, bound: u64) -> Vec<Entry> {
    (2..bound)
        .filter(|&p| is_prime(p) && case.prime_residue.contains(p as i64))
        .map(|p| {
            let entry = Entry::new(Check::Nondivisibility, p, 0, master.precision());
            let Some(c) = master.coeff(p as i64) else {
                return entry.short(Some(p as i64 + 1), master.precision());
            };
            let v = vp_int(c, p);
            let law = case.valuation_law(p, 0);
            entry
                .judge(v == Some(law), format!("= {law}"), format!("= {}", show_val(v)))
                .with_coefficient(CoefficientValue::new(p, c, p))
        })
        .collect()
}

// ---------------------------------------------------------------------------
// one-shot entry points

/// `C(p^(2m+1))` for `0 <= m <= m_max` from one expansion of the master form.
pub fn coefficient_chain(
    case: CaseId,
    p: u64,
    m_max: u32,
    n_check: i64,
) -> Result<Vec<BigInt>, VerifyError> {
    let grid = GridSpec::new(case, [(p, m_max)], n_check, i64::MAX)?;
    let top = (p as i64)
        .checked_pow(2 * m_max + 1)
        .ok_or(HeckeError::InsufficientPrecision {
            needed: i64::MAX,
            have: 0,
        })?;
    let master = CaseStudy::get(case).master_form().expand(top + 1);
    Ok(Verifier::with_master(grid, master).coefficient_chain(p, m_max)?)
}

pub fn verify_valuation_law(grid: &GridSpec) -> ValuationReport {
    Verifier::new(grid.clone()).valuation_law()
}

pub fn verify_convergence_law(grid: &GridSpec) -> ValuationReport {
    Verifier::new(grid.clone()).convergence_law()
}

pub fn verify_congruence_lemma(grid: &GridSpec) -> ValuationReport {
    Verifier::new(grid.clone()).congruence_lemma()
}

/// The `φ_p` identities for `0 <= m <= m_max`, compared on
/// `O(q^(n_check + 1))`.
pub fn verify_operator_identities(
    case: CaseId,
    p: u64,
    m_max: u32,
    n_check: i64,
) -> Result<ValuationReport, VerifyError> {
    let grid = GridSpec::new(case, [(p, m_max)], n_check, i64::MAX)?;
    Ok(Verifier::new(grid).operator_identities())
}

/// `master | T(p^(2m)) = p^(2(k-1)m) basis(p^(2m))` on `O(q^(n_check + 1))`.
pub fn verify_vanishing_even_hecke(
    case: CaseId,
    p: u64,
    m: u32,
    n_check: i64,
) -> Result<bool, VerifyError> {
    let grid = GridSpec::new(case, [(p, m)], n_check, i64::MAX)?;
    let v = Verifier::new(grid);
    let entries = v.even_hecke_entries(p, m);
    Ok(entries.iter().all(Entry::passed))
}

/// Every admissible prime below `bound`, from one expansion to `q^bound`.
pub fn sweep_nondivisibility(case: CaseId, bound: u64) -> ValuationReport {
    let study = CaseStudy::get(case);
    let master = study.master_form().expand(bound as i64);
    ValuationReport::new(
        case,
        0,
        master.precision(),
        sweep_entries(&study, &master, bound),
    )
}

/// `Θ^r(φ_p) | U(p^(2l)) ≡ 0 (mod p^(2rl))`, the fact behind the congruence
/// form of the iterated identity.
pub fn theta_phi_divisibility(case: CaseId, p: u64, l: u32, n_check: i64) -> Result<bool, VerifyError> {
    let study = CaseStudy::get(case);
    let np = n_check + 1;
    let phi = build_phi(&study, p, p.pow(2 * l) as i64 * np)?;
    let image = phi
        .series
        .theta(study.phi_theta_power)
        .u_op(p.pow(2 * l) as i64)
        .truncate(np);
    Ok(image.divisible_by_power(p, 2 * study.phi_theta_power * l))
}
