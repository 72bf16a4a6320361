//! Slow, independent reference expansions: eta products by repeated
//! multiplication and division by `(1 - q^j)`, dense schoolbook products.

#![allow(dead_code)]

pub mod props;

use num_bigint::BigInt;
use num_traits::Zero;

/// Dense Laurent polynomial `Σ c[i] q^(val + i)`, known below `val + c.len()`.
#[derive(Clone, Debug, PartialEq)]
pub struct Naive {
    pub val: i64,
    pub c: Vec<BigInt>,
}

impl Naive {
    pub fn top(&self) -> i64 {
        self.val + self.c.len() as i64
    }

    pub fn at(&self, n: i64) -> BigInt {
        if n < self.val {
            return BigInt::zero();
        }
        assert!(n < self.top(), "q^{n} unknown");
        self.c[(n - self.val) as usize].clone()
    }

    pub fn mul(&self, o: &Naive) -> Naive {
        let val = self.val + o.val;
        let top = (self.top() + o.val).min(o.top() + self.val);
        let len = (top - val).max(0) as usize;
        let mut c = vec![BigInt::zero(); len];
        for (i, a) in self.c.iter().enumerate() {
            for (j, b) in o.c.iter().enumerate() {
                if i + j < len {
                    c[i + j] += a * b;
                }
            }
        }
        Naive { val, c }
    }

    pub fn add(&self, o: &Naive) -> Naive {
        let val = self.val.min(o.val);
        let top = self.top().min(o.top());
        let c = (val..top).map(|n| self.at(n) + o.at(n)).collect();
        Naive { val, c }
    }

    pub fn scale(&self, k: i64) -> Naive {
        Naive {
            val: self.val,
            c: self.c.iter().map(|x| x * k).collect(),
        }
    }

    pub fn constant(k: i64, top: i64) -> Naive {
        let mut c = vec![BigInt::zero(); top as usize];
        c[0] = BigInt::from(k);
        Naive { val: 0, c }
    }
}

/// `Π_δ η(δz)^(r_δ)` to `O(q^top)`; `Σ δ r_δ` must be divisible by 24.
pub fn eta_product(factors: &[(u64, i64)], top: i64) -> Naive {
    let shift: i64 = factors.iter().map(|&(d, r)| d as i64 * r).sum();
    assert_eq!(shift % 24, 0, "non-integral prefactor");
    let val = shift / 24;
    let len = (top - val).max(0) as usize;
    let mut c = vec![BigInt::zero(); len];
    if len > 0 {
        c[0] = BigInt::from(1);
    }
    for &(d, r) in factors {
        for k in 1.. {
            let j = (k * d) as usize;
            if j >= len {
                break;
            }
            for _ in 0..r.abs() {
                if r > 0 {
                    for i in (j..len).rev() {
                        let t = c[i - j].clone();
                        c[i] -= t;
                    }
                } else {
                    for i in j..len {
                        let t = c[i - j].clone();
                        c[i] += t;
                    }
                }
            }
        }
    }
    Naive { val, c }
}

pub fn g(top: i64) -> Naive {
    eta_product(&[(4, 2), (8, 2)], top)
}

pub fn l(top: i64) -> Naive {
    eta_product(&[(4, -2), (8, 6), (16, -4)], top)
}

/// `L(2z)`.
pub fn l2z(top: i64) -> Naive {
    eta_product(&[(8, -2), (16, 6), (32, -4)], top)
}

/// `-g·L(2z)^r`.
pub fn eo_er(r: u32, top: i64) -> Naive {
    let mut acc = g(top + 2 * r as i64).scale(-1);
    for _ in 0..r {
        acc = acc.mul(&l2z(top + 2 * r as i64));
    }
    trim(acc, top)
}

pub fn f(top: i64) -> Naive {
    eo_er(1, top)
}

pub fn g1(top: i64) -> Naive {
    eta_product(&[(3, 8)], top)
}

pub fn l1(top: i64) -> Naive {
    eta_product(&[(1, 3), (9, -3)], top).add(&Naive::constant(3, top))
}

pub fn big_g(top: i64) -> Naive {
    let l = l1(top + 2);
    trim(g1(top + 2).mul(&l).mul(&l), top)
}

pub fn g2(top: i64) -> Naive {
    eta_product(&[(4, 6)], top)
}

pub fn l2(top: i64) -> Naive {
    l(top)
}

pub fn h(top: i64) -> Naive {
    let l = l2(top + 2);
    trim(g2(top + 2).mul(&l).mul(&l), top)
}

pub fn trim(mut s: Naive, top: i64) -> Naive {
    assert!(s.top() >= top, "oracle lost precision");
    s.c.truncate((top - s.val) as usize);
    s
}
