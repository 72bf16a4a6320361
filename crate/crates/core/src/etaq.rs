//! Dedekind eta quotients and their q-expansions.
//!
//! `η(δz) = q^(δ/24) ∏ (1 - q^(δn))`, so a quotient `∏ η(δz)^(r_δ)` expands as
//! `q^(Σ δ r_δ / 24)` times a product of powers of the Euler product taken at
//! `q^δ`. Every Euler factor is pentagonally sparse and its cube is sparse by
//! Jacobi's identity, so expansions are built by repeated sparse
//! multiplication and sparse division rather than dense series products.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::Rational64;
use num_traits::{One, ToPrimitive, Zero};
use thiserror::Error;

use crate::qring::{div_ceil, QSeries};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EtaError {
    #[error("q-prefactor Σ δ·r_δ / 24 = {0}/24 is not an integer")]
    NonIntegralPrefactor(i64),
    #[error("weight Σ r_δ / 2 = {0}/2 is not an integer")]
    NonIntegralWeight(i64),
    #[error("δ = {delta} does not divide the level {level}")]
    DivisorNotDividingLevel { delta: u64, level: u64 },
    #[error("δ must be positive")]
    ZeroDelta,
    #[error("malformed eta descriptor {0:?}: expected `δ:r,δ:r,...`")]
    Parse(String),
}

// ---------------------------------------------------------------------------
// sparse kernels

/// A power series `1 + Σ c_k Q^k` with few nonzero terms.
#[derive(Clone, Debug)]
struct SparseFactor {
    /// `(offset, coefficient)`, ascending; the first entry is `(0, 1)`.
    terms: Vec<(usize, i64)>,
}

impl SparseFactor {
    /// `∏_{n≥1} (1 - Q^(stride·n))` up to `Q^len`, by the pentagonal number theorem.
    fn euler(stride: usize, len: usize) -> Self {
        let mut terms = vec![(0usize, 1i64)];
        let mut k: usize = 1;
        loop {
            let sign = if k % 2 == 1 { -1 } else { 1 };
            let lo = stride * (k * (3 * k - 1) / 2);
            let hi = stride * (k * (3 * k + 1) / 2);
            if lo >= len {
                break;
            }
            terms.push((lo, sign));
            if hi < len {
                terms.push((hi, sign));
            }
            k += 1;
        }
        SparseFactor { terms }
    }

    /// `∏ (1 - Q^(stride·n))^3 = Σ (-1)^n (2n+1) Q^(stride·n(n+1)/2)`.
    fn euler_cube(stride: usize, len: usize) -> Self {
        let mut terms = Vec::new();
        let mut n: usize = 0;
        loop {
            let e = stride * (n * (n + 1) / 2);
            if e >= len {
                break;
            }
            let c = (2 * n + 1) as i64;
            terms.push((e, if n % 2 == 0 { c } else { -c }));
            n += 1;
        }
        SparseFactor { terms }
    }

    /// Factors whose product is `E(Q^stride)^power` (power ≥ 0).
    fn power(stride: usize, power: u64, len: usize) -> Vec<SparseFactor> {
        let mut out = Vec::new();
        if power >= 3 {
            let cube = Self::euler_cube(stride, len);
            out.extend(std::iter::repeat_n(cube, (power / 3) as usize));
        }
        if power % 3 > 0 {
            let single = Self::euler(stride, len);
            out.extend(std::iter::repeat_n(single, (power % 3) as usize));
        }
        out
    }
}

#[derive(Debug)]
struct Overflow;

trait KernelCoeff: Clone {
    fn kzero() -> Self;
    fn is_nil(&self) -> bool;
    /// `self += c · x`
    fn add_mul(&mut self, x: &Self, c: i64, scratch: &mut Self) -> Result<(), Overflow>;
}

impl KernelCoeff for i128 {
    fn kzero() -> Self {
        0
    }
    fn is_nil(&self) -> bool {
        *self == 0
    }
    fn add_mul(&mut self, x: &Self, c: i64, _: &mut Self) -> Result<(), Overflow> {
        let t = x.checked_mul(c as i128).ok_or(Overflow)?;
        *self = self.checked_add(t).ok_or(Overflow)?;
        Ok(())
    }
}

impl KernelCoeff for BigInt {
    fn kzero() -> Self {
        BigInt::zero()
    }
    fn is_nil(&self) -> bool {
        Zero::is_zero(self)
    }
    fn add_mul(&mut self, x: &Self, c: i64, scratch: &mut Self) -> Result<(), Overflow> {
        match c {
            1 => *self += x,
            -1 => *self -= x,
            _ => {
                scratch.clone_from(x);
                *scratch *= c;
                *self += &*scratch;
            }
        }
        Ok(())
    }
}

/// `dense *= factor`, in place, truncated to `dense.len()`.
fn mul_sparse<T: KernelCoeff>(dense: &mut [T], factor: &SparseFactor) -> Result<(), Overflow> {
    let len = dense.len();
    let mut scratch = T::kzero();
    for i in (0..len).rev() {
        if dense[i].is_nil() {
            continue;
        }
        let (lo, hi) = dense.split_at_mut(i + 1);
        let x = &lo[i];
        for &(k, c) in &factor.terms[1..] {
            if i + k >= len {
                break;
            }
            hi[k - 1].add_mul(x, c, &mut scratch)?;
        }
    }
    Ok(())
}

/// `dense /= factor`, in place; exact because the factor has constant term 1.
fn div_sparse<T: KernelCoeff>(dense: &mut [T], factor: &SparseFactor) -> Result<(), Overflow> {
    let len = dense.len();
    let mut scratch = T::kzero();
    for i in 0..len {
        if dense[i].is_nil() {
            continue;
        }
        let (lo, hi) = dense.split_at_mut(i + 1);
        let x = &lo[i];
        for &(k, c) in &factor.terms[1..] {
            if i + k >= len {
                break;
            }
            hi[k - 1].add_mul(x, -c, &mut scratch)?;
        }
    }
    Ok(())
}

/// `∏_{n≥1}(1 - q^n) + O(q^N)`.
pub fn euler_expansion(n: i64) -> QSeries {
    if n <= 0 {
        return QSeries::zero(n);
    }
    let f = SparseFactor::euler(1, n as usize);
    let mut coeffs = vec![BigInt::zero(); n as usize];
    for (e, c) in f.terms {
        coeffs[e] = BigInt::from(c);
    }
    QSeries::new(0, coeffs)
}

// ---------------------------------------------------------------------------
// eta quotients

/// A formal product `∏ η(δz)^(r_δ)` on `Γ0(level)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EtaQuotient {
    level: u64,
    factors: BTreeMap<u64, i64>,
}

impl EtaQuotient {
    /// Builds `∏ η(δz)^(r_δ)`; repeated `δ` entries are merged and zero
    /// exponents dropped. Rejects quotients whose weight or q-prefactor is not
    /// an integer.
    pub fn new(level: u64, factors: &[(u64, i64)]) -> Result<Self, EtaError> {
        let mut map = BTreeMap::new();
        for &(delta, r) in factors {
            if delta == 0 {
                return Err(EtaError::ZeroDelta);
            }
            if level % delta != 0 {
                return Err(EtaError::DivisorNotDividingLevel { delta, level });
            }
            *map.entry(delta).or_insert(0) += r;
        }
        map.retain(|_, r| *r != 0);
        let q = EtaQuotient { level, factors: map };
        q.check()?;
        Ok(q)
    }

    /// The empty product (the constant 1) on `Γ0(level)`.
    pub fn one(level: u64) -> Self {
        EtaQuotient {
            level,
            factors: BTreeMap::new(),
        }
    }

    fn check(&self) -> Result<(), EtaError> {
        let s: i64 = self.factors.iter().map(|(&d, &r)| d as i64 * r).sum();
        if s % 24 != 0 {
            return Err(EtaError::NonIntegralPrefactor(s));
        }
        let w: i64 = self.factors.values().sum();
        if w % 2 != 0 {
            return Err(EtaError::NonIntegralWeight(w));
        }
        Ok(())
    }

    /// Parses `"4:2,8:2"` (pairs `δ:r`). The level defaults to the lcm of the δ.
    pub fn parse(desc: &str, level: Option<u64>) -> Result<Self, EtaError> {
        let bad = || EtaError::Parse(desc.to_string());
        let mut pairs = Vec::new();
        for item in desc.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (d, r) = item.split_once(':').ok_or_else(bad)?;
            let d: u64 = d.trim().parse().map_err(|_| bad())?;
            let r: i64 = r.trim().parse().map_err(|_| bad())?;
            pairs.push((d, r));
        }
        if pairs.is_empty() {
            return Err(bad());
        }
        let level = level.unwrap_or_else(|| pairs.iter().fold(1, |acc, &(d, _)| acc.lcm(&d)));
        Self::new(level, &pairs)
    }

    pub fn level(&self) -> u64 {
        self.level
    }

    pub fn factors(&self) -> &BTreeMap<u64, i64> {
        &self.factors
    }

    pub fn is_one(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn weight(&self) -> i64 {
        self.factors.values().sum::<i64>() / 2
    }

    /// Exponent of the leading power of `q`.
    pub fn prefactor(&self) -> i64 {
        self.factors.iter().map(|(&d, &r)| d as i64 * r).sum::<i64>() / 24
    }

    /// The quotient evaluated at `s·z`.
    pub fn dilate(&self, s: u64) -> Self {
        EtaQuotient {
            level: self.level * s,
            factors: self.factors.iter().map(|(&d, &r)| (d * s, r)).collect(),
        }
    }

    pub fn mul(&self, other: &EtaQuotient) -> Self {
        let mut factors = self.factors.clone();
        for (&d, &r) in &other.factors {
            *factors.entry(d).or_insert(0) += r;
        }
        factors.retain(|_, r| *r != 0);
        EtaQuotient {
            level: self.level.lcm(&other.level),
            factors,
        }
    }

    pub fn pow(&self, k: i64) -> Self {
        EtaQuotient {
            level: self.level,
            factors: if k == 0 {
                BTreeMap::new()
            } else {
                self.factors.iter().map(|(&d, &r)| (d, r * k)).collect()
            },
        }
    }

    /// Same quotient regarded on `Γ0(level)`.
    pub fn with_level(&self, level: u64) -> Result<Self, EtaError> {
        let pairs: Vec<_> = self.factors.iter().map(|(&d, &r)| (d, r)).collect();
        Self::new(level, &pairs)
    }

    /// Exact expansion to `O(q^n)`.
    pub fn expand(&self, n: i64) -> QSeries {
        EtaCombination::from(self.clone()).expand(n)
    }

    /// `expand(self)(scale·z) + add_constant`, to `O(q^n)`.
    pub fn expand_with_shift(&self, scale: u64, add_constant: i64, n: i64) -> QSeries {
        let mut combo = EtaCombination::from(self.dilate(scale));
        if add_constant != 0 {
            combo = combo.add(&EtaCombination::constant(add_constant, self.level * scale));
        }
        combo.expand(n)
    }

    /// Orders of vanishing at the cusps `c/d`, one per divisor `d` of the
    /// level, from the standard eta-quotient order formula
    /// `(N/24) Σ_δ gcd(d,δ)² r_δ / (gcd(d, N/d) d δ)`.
    /// The cusp `1/N` is `∞`, where the order equals the q-prefactor.
    pub fn cusp_orders(&self) -> Vec<CuspOrder> {
        let n = self.level as i64;
        divisors(self.level)
            .into_iter()
            .map(|d| {
                let d = d as i64;
                let mut sum = Rational64::zero();
                for (&delta, &r) in &self.factors {
                    let delta = delta as i64;
                    let g = d.gcd(&delta);
                    sum += Rational64::new(g * g * r, d.gcd(&(n / d)) * d * delta);
                }
                CuspOrder {
                    denominator: d as u64,
                    order: sum * Rational64::new(n, 24),
                }
            })
            .collect()
    }

    /// True when the order is nonnegative at every cusp other than `∞`.
    pub fn holomorphic_away_from_infinity(&self) -> bool {
        self.cusp_orders()
            .iter()
            .filter(|c| c.denominator != self.level)
            .all(|c| c.order >= Rational64::zero())
    }

    fn descriptor(&self) -> String {
        let parts: Vec<String> = self.factors.iter().map(|(d, r)| format!("{d}:{r}")).collect();
        parts.join(",")
    }
}

impl fmt::Display for EtaQuotient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.factors.is_empty() {
            return write!(f, "1");
        }
        let mut first = true;
        for (d, r) in &self.factors {
            if !first {
                write!(f, " ")?;
            }
            first = false;
            let arg = if *d == 1 { "z".to_string() } else { format!("{d}z") };
            write!(f, "η({arg})^{r}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CuspOrder {
    /// Denominator `d` of the cusp class `c/d`.
    pub denominator: u64,
    pub order: Rational64,
}

fn divisors(n: u64) -> Vec<u64> {
    (1..=n).filter(|d| n % d == 0).collect()
}

// ---------------------------------------------------------------------------
// integer combinations of eta quotients

/// A finite sum `Σ c_i · Q_i` of eta quotients with integer coefficients.
///
/// Constants are the empty quotient; this covers shifted forms such as
/// `η³(z)/η³(9z) + 3`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EtaCombination {
    terms: Vec<(BigInt, EtaQuotient)>,
}

impl From<EtaQuotient> for EtaCombination {
    fn from(q: EtaQuotient) -> Self {
        EtaCombination {
            terms: vec![(BigInt::one(), q)],
        }
    }
}

impl EtaCombination {
    pub fn constant(c: i64, level: u64) -> Self {
        EtaCombination {
            terms: vec![(BigInt::from(c), EtaQuotient::one(level))],
        }
    }

    pub fn terms(&self) -> &[(BigInt, EtaQuotient)] {
        &self.terms
    }

    fn simplified(mut terms: Vec<(BigInt, EtaQuotient)>) -> Self {
        terms.sort_by(|a, b| a.1.factors.cmp(&b.1.factors));
        let mut out: Vec<(BigInt, EtaQuotient)> = Vec::new();
        for (c, q) in terms {
            match out.last_mut() {
                Some((c0, q0)) if q0.factors == q.factors => {
                    *c0 += c;
                    q0.level = q0.level.lcm(&q.level);
                }
                _ => out.push((c, q)),
            }
        }
        out.retain(|(c, _)| !c.is_zero());
        EtaCombination { terms: out }
    }

    pub fn add(&self, other: &EtaCombination) -> Self {
        Self::simplified(self.terms.iter().chain(&other.terms).cloned().collect())
    }

    pub fn scale(&self, c: i64) -> Self {
        Self::simplified(
            self.terms
                .iter()
                .map(|(a, q)| (a * BigInt::from(c), q.clone()))
                .collect(),
        )
    }

    pub fn mul(&self, other: &EtaCombination) -> Self {
        let mut terms = Vec::new();
        for (a, p) in &self.terms {
            for (b, q) in &other.terms {
                terms.push((a * b, p.mul(q)));
            }
        }
        Self::simplified(terms)
    }

    pub fn pow(&self, k: u32) -> Self {
        let level = self.terms.first().map_or(1, |(_, q)| q.level);
        let mut acc = EtaCombination::from(EtaQuotient::one(level));
        for _ in 0..k {
            acc = acc.mul(self);
        }
        acc
    }

    pub fn dilate(&self, s: u64) -> Self {
        EtaCombination {
            terms: self.terms.iter().map(|(c, q)| (c.clone(), q.dilate(s))).collect(),
        }
    }

    /// Lowest q-prefactor among the terms.
    pub fn min_prefactor(&self) -> i64 {
        self.terms.iter().map(|(_, q)| q.prefactor()).min().unwrap_or(0)
    }

    /// Canonical text form, stable across runs; used as a cache key.
    pub fn canonical_key(&self) -> String {
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(c, q)| format!("{c}*[{}]", q.descriptor()))
            .collect();
        parts.join("+")
    }

    /// Exact expansion to `O(q^n)`.
    ///
    /// All terms are brought over the common denominator
    /// `∏ E(q^δ)^(D_δ)`; the numerator (small coefficients) is accumulated in
    /// 128-bit integers when it fits, and a single sparse division produces
    /// the large coefficients.
    pub fn expand(&self, n: i64) -> QSeries {
        if self.terms.is_empty() {
            return QSeries::zero(n);
        }
        let base = self.min_prefactor();
        if n <= base {
            return QSeries::zero(n);
        }
        let mut denom: BTreeMap<u64, u64> = BTreeMap::new();
        for (_, q) in &self.terms {
            for (&d, &r) in &q.factors {
                let e = denom.entry(d).or_insert(0);
                *e = (*e).max((-r).max(0) as u64);
            }
        }
        let mut stride = 0u64;
        for (_, q) in &self.terms {
            stride = stride.gcd(&((q.prefactor() - base) as u64));
            for &d in q.factors.keys() {
                stride = stride.gcd(&d);
            }
        }
        let stride = stride.max(1);
        let len = div_ceil(n - base, stride as i64) as usize;

        let numerator = match self.numerator::<i128>(&denom, base, stride, len) {
            Ok(v) => v.into_iter().map(BigInt::from).collect(),
            Err(Overflow) => self
                .numerator::<BigInt>(&denom, base, stride, len)
                .expect("big integers do not overflow"),
        };
        let mut dense = numerator;
        for (&d, &e) in &denom {
            for f in SparseFactor::power((d / stride) as usize, e, len) {
                div_sparse(&mut dense, &f).expect("big integers do not overflow");
            }
        }
        dilate_dense(dense, base, stride as i64, n)
    }

    fn numerator<T: KernelCoeff + FromBig>(
        &self,
        denom: &BTreeMap<u64, u64>,
        base: i64,
        stride: u64,
        len: usize,
    ) -> Result<Vec<T>, Overflow> {
        let mut total: Vec<T> = vec![T::kzero(); len];
        let mut scratch = T::kzero();
        for (c, q) in &self.terms {
            let offset = ((q.prefactor() - base) as u64 / stride) as usize;
            if offset >= len {
                continue;
            }
            let mut part = vec![T::kzero(); len - offset];
            part[0] = T::from_big(&BigInt::one())?;
            for (&d, &e) in denom.iter() {
                let r = q.factors.get(&d).copied().unwrap_or(0);
                let power = (r + e as i64) as u64;
                for f in SparseFactor::power((d / stride) as usize, power, part.len()) {
                    mul_sparse(&mut part, &f)?;
                }
            }
            let c = T::from_big(c)?;
            for (slot, x) in total[offset..].iter_mut().zip(&part) {
                slot.add_scaled(x, &c, &mut scratch)?;
            }
        }
        Ok(total)
    }

    /// Multiplies an existing series by this combination, using the same
    /// sparse kernels. The result is known to `O(q^(f.N + min prefactor))`.
    pub fn apply_to(&self, f: &QSeries) -> QSeries {
        let base = self.min_prefactor();
        let precision = f.precision() + base;
        let Some(order) = f.order() else {
            return QSeries::zero(precision);
        };
        let mut stride = 0u64;
        for (e, _) in f.terms() {
            stride = stride.gcd(&((e - order) as u64));
        }
        for (_, q) in &self.terms {
            stride = stride.gcd(&((q.prefactor() - base) as u64));
            for &d in q.factors.keys() {
                stride = stride.gcd(&d);
            }
        }
        let stride = stride.max(1) as i64;
        let len = div_ceil(f.precision() - order, stride) as usize;
        let compressed: Vec<BigInt> = (0..len)
            .map(|j| f.at(order + stride * j as i64).clone())
            .collect();

        let mut total = vec![BigInt::zero(); len];
        for (c, q) in &self.terms {
            let offset = ((q.prefactor() - base) / stride) as usize;
            if offset >= len {
                continue;
            }
            let mut part = compressed[..len - offset].to_vec();
            for (&d, &r) in &q.factors {
                for fac in SparseFactor::power((d as i64 / stride) as usize, r.unsigned_abs(), part.len()) {
                    if r > 0 {
                        mul_sparse(&mut part, &fac).expect("big integers do not overflow");
                    } else {
                        div_sparse(&mut part, &fac).expect("big integers do not overflow");
                    }
                }
            }
            for (slot, x) in total[offset..].iter_mut().zip(&part) {
                *slot += c * x;
            }
        }
        dilate_dense(total, order + base, stride, precision)
    }
}

trait FromBig: Sized {
    fn from_big(x: &BigInt) -> Result<Self, Overflow>;
    fn add_scaled(&mut self, x: &Self, c: &Self, scratch: &mut Self) -> Result<(), Overflow>;
}

impl FromBig for i128 {
    fn from_big(x: &BigInt) -> Result<Self, Overflow> {
        x.to_i128().ok_or(Overflow)
    }
    fn add_scaled(&mut self, x: &Self, c: &Self, _: &mut Self) -> Result<(), Overflow> {
        let t = x.checked_mul(*c).ok_or(Overflow)?;
        *self = self.checked_add(t).ok_or(Overflow)?;
        Ok(())
    }
}

impl FromBig for BigInt {
    fn from_big(x: &BigInt) -> Result<Self, Overflow> {
        Ok(x.clone())
    }
    fn add_scaled(&mut self, x: &Self, c: &Self, _: &mut Self) -> Result<(), Overflow> {
        *self += x * c;
        Ok(())
    }
}

/// Turns coefficients of `Q^j` (with `q^e = q^base · Q^j`, `Q = q^stride`)
/// into a dense series truncated to `O(q^n)`.
fn dilate_dense(dense: Vec<BigInt>, base: i64, stride: i64, n: i64) -> QSeries {
    if n <= base {
        return QSeries::zero(n);
    }
    let mut coeffs = vec![BigInt::zero(); (n - base) as usize];
    for (j, c) in dense.into_iter().enumerate() {
        let idx = j * stride as usize;
        if idx >= coeffs.len() {
            break;
        }
        coeffs[idx] = c;
    }
    QSeries::new(base, coeffs)
}

impl fmt::Display for EtaCombination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (c, q)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            if q.is_one() {
                write!(f, "{c}")?;
            } else if c.is_one() {
                write!(f, "{q}")?;
            } else {
                write!(f, "{c}·{q}")?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(terms: &[(i64, i64)], n: i64) -> QSeries {
        QSeries::from_terms(terms, n)
    }

    /// Dense `∏_{n<N} (1 - q^(δn))` built factor by factor.
    fn naive_euler(delta: usize, n: usize) -> Vec<i64> {
        let mut c = vec![0i64; n];
        c[0] = 1;
        let mut k = 1;
        while delta * k < n {
            for i in (delta * k..n).rev() {
                c[i] -= c[i - delta * k];
            }
            k += 1;
        }
        c
    }

    #[test]
    fn first_pentagonal_terms() {
        assert_eq!(euler_expansion(6), s(&[(0, 1), (1, -1), (2, -1), (5, 1)], 6));
        assert_eq!(euler_expansion(6).precision(), 6);
    }

    #[test]
    fn pentagonal_density() {
        let e = euler_expansion(10_000);
        let bound = 2 * ((10_000f64 * 2.0 / 3.0).sqrt().ceil() as usize) + 2;
        assert!(e.terms().count() <= bound);
        assert!(e.coeffs().iter().all(|c| c.abs_sub_one_le()));
    }

    trait SmallCheck {
        fn abs_sub_one_le(&self) -> bool;
    }
    impl SmallCheck for BigInt {
        fn abs_sub_one_le(&self) -> bool {
            *self >= BigInt::from(-1) && *self <= BigInt::one()
        }
    }

    #[test]
    fn euler_matches_naive_product() {
        let e = euler_expansion(300);
        let naive = naive_euler(1, 300);
        for (i, c) in naive.iter().enumerate() {
            assert_eq!(e.at(i as i64), &BigInt::from(*c));
        }
    }

    #[test]
    fn euler_cube_matches_jacobi() {
        let f = SparseFactor::euler_cube(1, 200);
        let mut dense = vec![BigInt::zero(); 200];
        for (e, c) in &f.terms {
            dense[*e] = BigInt::from(*c);
        }
        let cube = euler_expansion(200).pow(3);
        assert_eq!(QSeries::new(0, dense), cube);
    }

    #[test]
    fn euler_round_trip() {
        let e = euler_expansion(500);
        let prod = e.mul(&e.invert(500).unwrap());
        assert_eq!(prod, QSeries::one(500));
        assert_eq!(prod.precision(), 500);
    }

    #[test]
    fn sparse_division_inverts_multiplication() {
        let f = SparseFactor::euler(3, 100);
        let orig: Vec<BigInt> = (0..100).map(|i| BigInt::from(i * i - 7)).collect();
        let mut v = orig.clone();
        mul_sparse(&mut v, &f).unwrap();
        div_sparse(&mut v, &f).unwrap();
        assert_eq!(v, orig);
    }

    #[test]
    fn i128_kernel_reports_overflow() {
        let f = SparseFactor::euler_cube(1, 10);
        let mut v = vec![i128::MAX / 2; 10];
        assert!(mul_sparse(&mut v, &f).is_err());
    }

    #[test]
    fn construction_checks() {
        assert!(EtaQuotient::new(32, &[(4, 2), (8, 2)]).is_ok());
        assert_eq!(
            EtaQuotient::new(8, &[(4, 1)]),
            Err(EtaError::NonIntegralPrefactor(4))
        );
        assert_eq!(
            EtaQuotient::new(12, &[(1, 1), (23, 1)]),
            Err(EtaError::DivisorNotDividingLevel { delta: 23, level: 12 })
        );
        assert_eq!(
            EtaQuotient::new(24, &[(24, 1)]),
            Err(EtaError::NonIntegralWeight(1))
        );
        let q = EtaQuotient::parse("4:2, 8:2", None).unwrap();
        assert_eq!(q.level(), 8);
        assert_eq!(q.weight(), 2);
        assert_eq!(q.prefactor(), 1);
        assert!(EtaQuotient::parse("4;2", None).is_err());
        assert!(EtaQuotient::parse("", None).is_err());
    }

    #[test]
    fn leading_exponent_is_prefactor() {
        for (level, f) in [
            (32u64, vec![(4u64, 2i64), (8, 2)]),
            (16, vec![(4, -2), (8, 6), (16, -4)]),
            (9, vec![(3, 2), (9, -6)]),
            (9, vec![(1, 3), (9, -3)]),
        ] {
            let q = EtaQuotient::new(level, &f).unwrap();
            assert_eq!(q.expand(30).order(), Some(q.prefactor()));
            assert_eq!(q.expand(30).valuation(), q.prefactor());
        }
    }

    #[test]
    fn expansion_respects_products() {
        let a = EtaQuotient::new(16, &[(4, -2), (8, 6), (16, -4)]).unwrap();
        let b = EtaQuotient::new(32, &[(4, 2), (8, 2)]).unwrap();
        let merged = a.mul(&b).expand(60);
        let separate = a.expand(70).mul(&b.expand(70));
        assert_eq!(merged, separate.truncate(60));
        assert_eq!(merged.precision(), 60);
    }

    #[test]
    fn naive_expansion_agrees() {
        // g(z) = η²(4z)η²(8z)
        let n = 120;
        let e4 = naive_euler(4, n);
        let e8 = naive_euler(8, n);
        let to_series = |v: &[i64]| QSeries::new(0, v.iter().map(|&x| BigInt::from(x)).collect());
        let (e4, e8) = (to_series(&e4), to_series(&e8));
        let naive = e4.mul(&e4).mul(&e8).mul(&e8).shift(1).truncate(n as i64);
        let g = EtaQuotient::new(32, &[(4, 2), (8, 2)]).unwrap().expand(n as i64);
        assert_eq!(g, naive);
    }

    #[test]
    fn apply_to_matches_expand() {
        let l1 = EtaCombination::from(EtaQuotient::new(9, &[(1, 3), (9, -3)]).unwrap())
            .add(&EtaCombination::constant(3, 9));
        let g1 = EtaQuotient::new(9, &[(3, 8)]).unwrap();
        let direct = EtaCombination::from(g1.clone()).mul(&l1.pow(2)).expand(50);
        let applied = l1.apply_to(&l1.apply_to(&g1.expand(52)));
        assert_eq!(applied.precision(), 50);
        assert_eq!(direct, applied);
    }

    #[test]
    fn big_numerators_fall_back_from_i128() {
        let q = EtaQuotient::new(2, &[(1, 312), (2, -144)]).unwrap();
        let a = q.expand(40);
        let b = euler_expansion(40)
            .pow(312)
            .mul(&euler_expansion(20).v_op(2).pow(144).invert(40).unwrap())
            .shift(q.prefactor());
        assert_eq!(a, b.truncate(40));
    }

    #[test]
    fn shifted_expansion() {
        let l = EtaQuotient::new(16, &[(4, -2), (8, 6), (16, -4)]).unwrap();
        let l2z = l.expand_with_shift(2, 0, 7);
        assert_eq!(l2z, s(&[(-2, 1), (6, 2)], 7));
        assert_eq!(l.expand(30).v_op(2).truncate(40), l.expand_with_shift(2, 0, 40));
    }

    #[test]
    fn cusp_order_at_infinity_is_prefactor() {
        let g = EtaQuotient::new(32, &[(4, 2), (8, 2)]).unwrap();
        let orders = g.cusp_orders();
        let inf = orders.iter().find(|c| c.denominator == 32).unwrap();
        assert_eq!(inf.order, Rational64::from_integer(1));
        assert!(orders.iter().all(|c| c.order >= Rational64::zero()));
    }

    #[test]
    fn keys_are_canonical() {
        let a = EtaCombination::from(EtaQuotient::new(9, &[(9, -3), (1, 3)]).unwrap())
            .add(&EtaCombination::constant(3, 9));
        let b = EtaCombination::constant(3, 9)
            .add(&EtaCombination::from(EtaQuotient::new(9, &[(1, 3), (9, -3)]).unwrap()));
        assert_eq!(a.canonical_key(), b.canonical_key());
        assert_eq!(a.canonical_key(), "3*[]+1*[1:3,9:-3]");
    }
}
