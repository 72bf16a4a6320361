//! Truncated Laurent series in `q` with exact coefficients.
//!
//! A [`QSeries`] stores the coefficients of `q^v, q^(v+1), ..., q^(N-1)` where
//! `v` is the stored valuation and `N` the precision: every exponent below `N`
//! is known exactly, everything at or above `N` is unknown (`O(q^N)`).
//! Exponents below the stored valuation are known to be zero.
//!
//! The operators follow the usual conventions for q-expansions of modular
//! forms: `U(m)` keeps every `m`-th coefficient, `V(m)` dilates exponents by
//! `m`, and `Θ = q d/dq` multiplies the `n`-th coefficient by `n`.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SeriesError {
    #[error("leading coefficient {0} is not a unit")]
    NotAUnit(BigInt),
    #[error("cannot invert a series with no known nonzero coefficient")]
    ZeroSeries,
    #[error("constant term {0} is nonzero; Θ cannot be inverted")]
    ConstantTermNonzero(String),
    #[error("operator index must be positive, got {0}")]
    NonPositiveIndex(i64),
}

/// Truncated Laurent series with arbitrary-size integer coefficients.
#[derive(Clone, Debug)]
pub struct QSeries {
    valuation: i64,
    precision: i64,
    coeffs: Vec<BigInt>,
}

/// Truncated Laurent series with exact rational coefficients.
#[derive(Clone, Debug)]
pub struct RatSeries {
    valuation: i64,
    precision: i64,
    coeffs: Vec<BigRational>,
}

impl QSeries {
    /// Builds a series from coefficients of `q^valuation, q^(valuation+1), ...`;
    /// the precision is `valuation + coeffs.len()`.
    pub fn new(valuation: i64, coeffs: Vec<BigInt>) -> Self {
        let precision = valuation + coeffs.len() as i64;
        QSeries {
            valuation,
            precision,
            coeffs,
        }
    }

    /// The zero series known up to `O(q^precision)`.
    pub fn zero(precision: i64) -> Self {
        QSeries {
            valuation: precision,
            precision,
            coeffs: Vec::new(),
        }
    }

    pub fn one(precision: i64) -> Self {
        Self::monomial(BigInt::one(), 0, precision)
    }

    /// `c q^exponent + O(q^precision)`; a monomial at or past the precision is
    /// swallowed by the error term.
    pub fn monomial(c: BigInt, exponent: i64, precision: i64) -> Self {
        if exponent >= precision {
            return Self::zero(precision);
        }
        let mut coeffs = vec![BigInt::zero(); (precision - exponent) as usize];
        coeffs[0] = c;
        QSeries::new(exponent, coeffs)
    }

    /// Builds a series from sparse `(exponent, coefficient)` terms.
    /// Terms at or beyond `precision` are dropped.
    pub fn from_terms<C: Into<BigInt> + Clone>(terms: &[(i64, C)], precision: i64) -> Self {
        let lowest = terms.iter().map(|(e, _)| *e).min().unwrap_or(precision);
        let valuation = lowest.min(precision);
        let mut coeffs = vec![BigInt::zero(); (precision - valuation) as usize];
        for (e, c) in terms {
            if *e < precision {
                coeffs[(*e - valuation) as usize] += c.clone().into();
            }
        }
        QSeries::new(valuation, coeffs)
    }

    pub fn valuation(&self) -> i64 {
        self.valuation
    }

    pub fn precision(&self) -> i64 {
        self.precision
    }

    pub fn coeffs(&self) -> &[BigInt] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<BigInt> {
        self.coeffs
    }

    /// Coefficient of `q^n`, or `None` when `n` is past the precision.
    pub fn coeff(&self, n: i64) -> Option<&BigInt> {
        if n >= self.precision {
            None
        } else if n < self.valuation {
            Some(&BigInt::ZERO)
        } else {
            Some(&self.coeffs[(n - self.valuation) as usize])
        }
    }

    /// Like [`QSeries::coeff`] but panics past the precision.
    pub fn at(&self, n: i64) -> &BigInt {
        self.coeff(n)
            .unwrap_or_else(|| panic!("coefficient of q^{n} unknown (precision {})", self.precision))
    }

    /// Nonzero terms as `(exponent, coefficient)`.
    pub fn terms(&self) -> impl Iterator<Item = (i64, &BigInt)> + '_ {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(move |(i, c)| (self.valuation + i as i64, c))
    }

    /// Exponent of the first nonzero known coefficient.
    pub fn order(&self) -> Option<i64> {
        self.coeffs
            .iter()
            .position(|c| !c.is_zero())
            .map(|i| self.valuation + i as i64)
    }

    /// True when every known coefficient is zero.
    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(Zero::is_zero)
    }

    /// Drops leading zero coefficients, moving the stored valuation up to the
    /// first nonzero term (or to the precision for a zero series).
    pub fn normalized(mut self) -> Self {
        match self.coeffs.iter().position(|c| !c.is_zero()) {
            Some(0) => self,
            Some(i) => {
                self.coeffs.drain(..i);
                self.valuation += i as i64;
                self
            }
            None => Self::zero(self.precision),
        }
    }

    /// Forgets every coefficient at exponents `>= n`.
    pub fn truncate(&self, n: i64) -> Self {
        let precision = n.min(self.precision);
        if precision <= self.valuation {
            return Self::zero(precision);
        }
        QSeries::new(
            self.valuation,
            self.coeffs[..(precision - self.valuation) as usize].to_vec(),
        )
    }

    pub fn add(&self, other: &QSeries) -> QSeries {
        self.combine(other, |a, b| *a += b)
    }

    pub fn sub(&self, other: &QSeries) -> QSeries {
        self.combine(other, |a, b| *a -= b)
    }

    fn combine(&self, other: &QSeries, op: impl Fn(&mut BigInt, &BigInt)) -> QSeries {
        let precision = self.precision.min(other.precision);
        let valuation = self.valuation.min(other.valuation).min(precision);
        let mut coeffs = vec![BigInt::zero(); (precision - valuation) as usize];
        for (i, slot) in coeffs.iter_mut().enumerate() {
            let n = valuation + i as i64;
            if n >= self.valuation {
                *slot += &self.coeffs[(n - self.valuation) as usize];
            }
            if n >= other.valuation {
                op(slot, &other.coeffs[(n - other.valuation) as usize]);
            }
        }
        QSeries {
            valuation,
            precision,
            coeffs,
        }
    }

    pub fn neg(&self) -> QSeries {
        QSeries {
            valuation: self.valuation,
            precision: self.precision,
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
        }
    }

    pub fn scale(&self, c: &BigInt) -> QSeries {
        if c.is_zero() {
            return QSeries::zero(self.precision);
        }
        QSeries {
            valuation: self.valuation,
            precision: self.precision,
            coeffs: self.coeffs.iter().map(|x| x * c).collect(),
        }
    }

    pub fn scale_i64(&self, c: i64) -> QSeries {
        self.scale(&BigInt::from(c))
    }

    /// Multiplies by `q^k`.
    pub fn shift(&self, k: i64) -> QSeries {
        QSeries {
            valuation: self.valuation + k,
            precision: self.precision + k,
            coeffs: self.coeffs.clone(),
        }
    }

    /// Cauchy product. The result has valuation `a.v + b.v` and precision
    /// `min(a.N + b.v, b.N + a.v)`.
    pub fn mul(&self, other: &QSeries) -> QSeries {
        let valuation = self.valuation + other.valuation;
        let precision = (self.precision + other.valuation).min(other.precision + self.valuation);
        if precision <= valuation {
            return QSeries::zero(precision);
        }
        let len = (precision - valuation) as usize;
        let mut out = vec![BigInt::zero(); len];
        // Drive the loop with the sparser operand.
        let nnz = |s: &QSeries| s.coeffs.iter().filter(|c| !c.is_zero()).count();
        let (sparse, dense) = if nnz(self) <= nnz(other) {
            (self, other)
        } else {
            (other, self)
        };
        for (i, x) in sparse.coeffs.iter().enumerate() {
            if i >= len || x.is_zero() {
                continue;
            }
            let room = (len - i).min(dense.coeffs.len());
            let target = &mut out[i..i + room];
            if x.is_one() {
                for (t, y) in target.iter_mut().zip(&dense.coeffs) {
                    *t += y;
                }
            } else if (-x).is_one() {
                for (t, y) in target.iter_mut().zip(&dense.coeffs) {
                    *t -= y;
                }
            } else {
                for (t, y) in target.iter_mut().zip(&dense.coeffs) {
                    if !y.is_zero() {
                        *t += x * y;
                    }
                }
            }
        }
        QSeries {
            valuation,
            precision,
            coeffs: out,
        }
    }

    pub fn pow(&self, e: u32) -> QSeries {
        if e == 0 {
            return QSeries::one(self.relative_precision());
        }
        let mut acc = self.clone();
        for _ in 1..e {
            acc = acc.mul(self);
        }
        acc
    }

    /// Number of known coefficients from the first nonzero term onward.
    pub fn relative_precision(&self) -> i64 {
        self.precision - self.order().unwrap_or(self.precision)
    }

    /// Multiplicative inverse. The leading coefficient must be `±1`.
    ///
    /// The result has valuation `-order(a)` and precision
    /// `min(target_precision, a.N - 2 order(a))`, which is the most that the
    /// known coefficients of `a` determine.
    pub fn invert(&self, target_precision: i64) -> Result<QSeries, SeriesError> {
        let a = self.clone().normalized();
        let v = a.order().ok_or(SeriesError::ZeroSeries)?;
        let lead = a.coeffs[0].clone();
        let sign = if lead.is_one() {
            1
        } else if (-&lead).is_one() {
            -1
        } else {
            return Err(SeriesError::NotAUnit(lead));
        };
        let precision = target_precision.min(a.precision - 2 * v);
        if precision <= -v {
            return Ok(QSeries::zero(precision));
        }
        let len = (precision + v) as usize;
        let mut b: Vec<BigInt> = Vec::with_capacity(len);
        // b_0 = 1/lead; b_n = -(1/lead) sum_{k>=1} a_k b_{n-k}
        b.push(BigInt::from(sign));
        for n in 1..len {
            let mut acc = BigInt::zero();
            for k in 1..=n.min(a.coeffs.len() - 1) {
                let ak = &a.coeffs[k];
                if !ak.is_zero() && !b[n - k].is_zero() {
                    acc += ak * &b[n - k];
                }
            }
            b.push(if sign == 1 { -acc } else { acc });
        }
        Ok(QSeries {
            valuation: -v,
            precision,
            coeffs: b,
        })
    }

    /// `U(m)`: the coefficient of `q^n` becomes `a(mn)`.
    pub fn u_op(&self, m: i64) -> QSeries {
        assert!(m >= 1, "U(m) needs m >= 1");
        if m == 1 {
            return self.clone();
        }
        let valuation = div_ceil(self.valuation, m);
        let precision = div_ceil(self.precision, m);
        let coeffs = (valuation..precision)
            .map(|n| self.coeffs[(m * n - self.valuation) as usize].clone())
            .collect();
        QSeries {
            valuation,
            precision,
            coeffs,
        }
    }

    /// `V(m)`: the coefficient of `q^(mn)` becomes `a(n)`; other exponents are 0.
    pub fn v_op(&self, m: i64) -> QSeries {
        assert!(m >= 1, "V(m) needs m >= 1");
        if m == 1 {
            return self.clone();
        }
        let valuation = m * self.valuation;
        let precision = m * self.precision;
        let mut coeffs = vec![BigInt::zero(); (precision - valuation) as usize];
        for (i, c) in self.coeffs.iter().enumerate() {
            coeffs[i * m as usize] = c.clone();
        }
        QSeries {
            valuation,
            precision,
            coeffs,
        }
    }

    /// `Θ^power` with `Θ = q d/dq`.
    pub fn theta(&self, power: u32) -> QSeries {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let n = BigInt::from(self.valuation + i as i64);
                c * n.pow(power)
            })
            .collect();
        QSeries {
            valuation: self.valuation,
            precision: self.precision,
            coeffs,
        }
    }

    /// Formal inverse of `Θ^power`: divides the `n`-th coefficient by `n^power`
    /// and sets the constant term to zero. Returns the rational result and
    /// whether every coefficient turned out to be an integer.
    pub fn theta_inverse(&self, power: u32) -> Result<(RatSeries, bool), SeriesError> {
        if let Some(c0) = self.coeff(0) {
            if !c0.is_zero() {
                return Err(SeriesError::ConstantTermNonzero(c0.to_string()));
            }
        }
        let mut integral = true;
        let coeffs: Vec<BigRational> = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let n = self.valuation + i as i64;
                if n == 0 || c.is_zero() {
                    return BigRational::zero();
                }
                let r = BigRational::new(c.clone(), BigInt::from(n).pow(power));
                if !r.is_integer() {
                    integral = false;
                }
                r
            })
            .collect();
        Ok((
            RatSeries {
                valuation: self.valuation,
                precision: self.precision,
                coeffs,
            },
            integral,
        ))
    }

    pub fn to_rational(&self) -> RatSeries {
        RatSeries {
            valuation: self.valuation,
            precision: self.precision,
            coeffs: self
                .coeffs
                .iter()
                .map(|c| BigRational::from_integer(c.clone()))
                .collect(),
        }
    }

    /// Certified p-adic valuation over the known coefficients.
    pub fn vp_certificate(&self, p: u64) -> ValCertificate {
        certificate(
            self.precision,
            self.terms().map(|(e, c)| (e, vp_int(c, p).expect("nonzero") as i64)),
        )
    }

    /// True when every known coefficient is divisible by `p^k`.
    pub fn divisible_by_power(&self, p: u64, k: u32) -> bool {
        let modulus = BigInt::from(p).pow(k);
        self.coeffs.iter().all(|c| (c % &modulus).is_zero())
    }
}

/// Equality on the range where both series are known.
impl PartialEq for QSeries {
    fn eq(&self, other: &Self) -> bool {
        let hi = self.precision.min(other.precision);
        let lo = self.valuation.min(other.valuation);
        (lo..hi).all(|n| self.coeff(n) == other.coeff(n))
    }
}

impl fmt::Display for QSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_terms(f, self.terms().map(|(e, c)| (e, c.to_string())), self.precision)
    }
}

impl RatSeries {
    pub fn valuation(&self) -> i64 {
        self.valuation
    }

    pub fn precision(&self) -> i64 {
        self.precision
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.coeffs
    }

    pub fn coeff(&self, n: i64) -> Option<BigRational> {
        if n >= self.precision {
            None
        } else if n < self.valuation {
            Some(BigRational::zero())
        } else {
            Some(self.coeffs[(n - self.valuation) as usize].clone())
        }
    }

    pub fn is_integral(&self) -> bool {
        self.coeffs.iter().all(BigRational::is_integer)
    }

    /// Converts back to integer coefficients, or `None` if some coefficient
    /// has a nontrivial denominator.
    pub fn to_integer(&self) -> Option<QSeries> {
        if !self.is_integral() {
            return None;
        }
        Some(QSeries {
            valuation: self.valuation,
            precision: self.precision,
            coeffs: self.coeffs.iter().map(|c| c.numer().clone()).collect(),
        })
    }

    /// p-adic valuation certificate; coefficients with a denominator divisible
    /// by `p` contribute negative valuations.
    pub fn vp_certificate(&self, p: u64) -> ValCertificate {
        certificate(
            self.precision,
            self.coeffs
                .iter()
                .enumerate()
                .filter(|(_, c)| !c.is_zero())
                .map(|(i, c)| {
                    let v = vp_int(c.numer(), p).unwrap() as i64 - vp_int(c.denom(), p).unwrap() as i64;
                    (self.valuation + i as i64, v)
                }),
        )
    }
}

impl PartialEq for RatSeries {
    fn eq(&self, other: &Self) -> bool {
        let hi = self.precision.min(other.precision);
        let lo = self.valuation.min(other.valuation);
        (lo..hi).all(|n| self.coeff(n) == other.coeff(n))
    }
}

impl fmt::Display for RatSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms = self
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(i, c)| (self.valuation + i as i64, c.to_string()));
        write_terms(f, terms, self.precision)
    }
}

fn write_terms(
    f: &mut fmt::Formatter<'_>,
    terms: impl Iterator<Item = (i64, String)>,
    precision: i64,
) -> fmt::Result {
    let mut first = true;
    for (e, c) in terms {
        let (neg, mag) = match c.strip_prefix('-') {
            Some(m) => (true, m.to_string()),
            None => (false, c),
        };
        if first {
            if neg {
                write!(f, "-")?;
            }
        } else {
            write!(f, " {} ", if neg { '-' } else { '+' })?;
        }
        first = false;
        let mag = if mag == "1" && e != 0 { String::new() } else { mag };
        match e {
            0 => write!(f, "{mag}")?,
            1 => write!(f, "{mag}q")?,
            _ => write!(f, "{mag}q^{e}")?,
        }
    }
    if first {
        write!(f, "O(q^{precision})")
    } else {
        write!(f, " + O(q^{precision})")
    }
}

/// Outcome of a valuation scan over the known range of a series.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ValCertificate {
    /// `min v_p(a(n))` over known `n`; `None` stands for `+∞` (all known
    /// coefficients vanish).
    pub bound: Option<i64>,
    pub attained_at: Option<i64>,
    pub precision: i64,
    /// True when the series is identically zero on the known range.
    pub exact: bool,
}

impl ValCertificate {
    /// Whether the certified valuation is at least `k` (always true for the
    /// zero series).
    pub fn at_least(&self, k: i64) -> bool {
        self.bound.is_none_or(|b| b >= k)
    }
}

fn certificate(precision: i64, vals: impl Iterator<Item = (i64, i64)>) -> ValCertificate {
    let best = vals.min_by_key(|&(_, v)| v);
    match best {
        Some((e, v)) => ValCertificate {
            bound: Some(v),
            attained_at: Some(e),
            precision,
            exact: false,
        },
        None => ValCertificate {
            bound: None,
            attained_at: None,
            precision,
            exact: true,
        },
    }
}

/// p-adic valuation of an integer; `None` for zero.
pub fn vp_int(x: &BigInt, p: u64) -> Option<u64> {
    if x.is_zero() {
        return None;
    }
    let p = BigInt::from(p);
    let mut v = 0;
    let mut x = x.abs();
    loop {
        let (q, r) = x.div_rem(&p);
        if !r.is_zero() {
            return Some(v);
        }
        x = q;
        v += 1;
    }
}

pub(crate) fn div_ceil(a: i64, b: i64) -> i64 {
    Integer::div_ceil(&a, &b)
}
