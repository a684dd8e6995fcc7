use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

/// Largest field order supported by the table-driven arithmetic.
pub const MAX_ORDER: u32 = 1 << 20;

/// Additive tables are materialised for odd characteristic up to this order.
const ADD_TABLE_LIMIT: u32 = 512;

/// Field element stored as its integer code: the little-endian base-p digits
/// of the code are the polynomial coefficients.
#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct FieldElem(pub u32);

impl FieldElem {
    pub const ZERO: FieldElem = FieldElem(0);
    pub const ONE: FieldElem = FieldElem(1);

    pub fn code(self) -> u32 {
        self.0
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

impl fmt::Display for FieldElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FieldError {
    #[error("{0} is not prime")]
    NotPrime(u32),
    #[error("extension degree must be at least 1")]
    ZeroDegree,
    #[error("field order {p}^{n} exceeds {MAX_ORDER}")]
    TooLarge { p: u32, n: u32 },
    #[error("{0} is not a prime power")]
    NotPrimePower(u32),
    #[error("q = {0} is not an even power of a prime")]
    NotAnEvenPrimePower(u32),
    #[error("no irreducible polynomial of degree {n} over F_{p}")]
    NoIrreducible { p: u32, n: u32 },
    #[error("division by zero")]
    DivisionByZero,
    #[error("code {code} is not an element of F_{q}")]
    BadCode { code: u32, q: u32 },
    #[error("F_{small} is not a subfield of F_{big}")]
    NotSubfield { small: u32, big: u32 },
}

pub fn is_prime(p: u32) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2u32;
    while d.saturating_mul(d) <= p {
        if p % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// Splits `q` into `(p, n)` with `q = p^n`.
pub fn prime_power(q: u32) -> Result<(u32, u32), FieldError> {
    if q < 2 {
        return Err(FieldError::NotPrimePower(q));
    }
    let p = (2..=q).find(|d| q % d == 0).unwrap_or(q);
    let mut rest = q;
    let mut n = 0;
    while rest % p == 0 {
        rest /= p;
        n += 1;
    }
    if rest != 1 {
        return Err(FieldError::NotPrimePower(q));
    }
    Ok((p, n))
}

fn prime_factors(mut v: u32) -> Vec<u32> {
    let mut out = Vec::new();
    let mut d = 2;
    while d * d <= v {
        if v % d == 0 {
            out.push(d);
            while v % d == 0 {
                v /= d;
            }
        }
        d += 1;
    }
    if v > 1 {
        out.push(v);
    }
    out
}

fn digits(mut code: u32, p: u32, n: usize) -> Vec<u32> {
    let mut out = vec![0; n];
    for d in out.iter_mut() {
        *d = code % p;
        code /= p;
    }
    out
}

fn undigits(ds: &[u32], p: u32) -> u32 {
    ds.iter().rev().fold(0, |acc, &d| acc * p + d)
}

/// Remainder of `a` modulo a monic `m` over F_p; coefficient lists low to high.
fn poly_rem(a: &[u32], m: &[u32], p: u32) -> Vec<u32> {
    let dm = m.len() - 1;
    let mut r = a.to_vec();
    while r.len() > dm {
        let lead = *r.last().unwrap();
        let shift = r.len() - 1 - dm;
        if lead != 0 {
            for (i, &c) in m.iter().enumerate() {
                let j = i + shift;
                r[j] = (r[j] + p - (lead * c) % p) % p;
            }
        }
        r.pop();
    }
    r
}

fn is_irreducible(m: &[u32], p: u32) -> bool {
    let n = m.len() - 1;
    for d in 1..=n / 2 {
        for low in 0..p.pow(d as u32) {
            let mut div = digits(low, p, d);
            div.push(1);
            if poly_rem(m, &div, p).iter().all(|&c| c == 0) {
                return false;
            }
        }
    }
    true
}

/// Schoolbook multiply-and-reduce on digit codes; used only while building tables.
fn slow_mul(a: u32, b: u32, p: u32, modulus: &[u32]) -> u32 {
    let n = modulus.len() - 1;
    let da = digits(a, p, n);
    let db = digits(b, p, n);
    let mut prod = vec![0u32; 2 * n - 1];
    for (i, &x) in da.iter().enumerate() {
        if x == 0 {
            continue;
        }
        for (j, &y) in db.iter().enumerate() {
            prod[i + j] = (prod[i + j] + x * y) % p;
        }
    }
    undigits(&poly_rem(&prod, modulus, p), p)
}

fn slow_pow(mut base: u32, mut e: u64, p: u32, modulus: &[u32]) -> u32 {
    let mut acc = 1;
    while e > 0 {
        if e & 1 == 1 {
            acc = slow_mul(acc, base, p, modulus);
        }
        base = slow_mul(base, base, p, modulus);
        e >>= 1;
    }
    acc
}

/// Arithmetic context for F_{p^n}. Immutable once built.
#[derive(Clone)]
pub struct FieldCtx {
    p: u32,
    n: u32,
    q: u32,
    modulus: Vec<u32>,
    primitive: u32,
    exp: Vec<u32>,
    log: Vec<u32>,
    neg: Vec<u32>,
    add: Option<Vec<u32>>,
    pow_p: Vec<u32>,
}

impl fmt::Debug for FieldCtx {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FieldCtx")
            .field("p", &self.p)
            .field("n", &self.n)
            .field("modulus", &self.modulus)
            .finish()
    }
}

impl PartialEq for FieldCtx {
    fn eq(&self, other: &Self) -> bool {
        self.p == other.p && self.n == other.n && self.modulus == other.modulus
    }
}

impl Eq for FieldCtx {}

/// Builds F_{p^n} with the smallest monic irreducible modulus, ordering
/// candidates by their non-leading coefficients read high to low.
pub fn field_new(p: u32, n: u32) -> Result<FieldCtx, FieldError> {
    if !is_prime(p) {
        return Err(FieldError::NotPrime(p));
    }
    if n == 0 {
        return Err(FieldError::ZeroDegree);
    }
    let q = (0..n)
        .try_fold(1u64, |acc, _| {
            let v = acc * p as u64;
            (v <= MAX_ORDER as u64).then_some(v)
        })
        .ok_or(FieldError::TooLarge { p, n })? as u32;
    let nu = n as usize;
    let modulus = if n == 1 {
        vec![0, 1]
    } else {
        (0..q)
            .map(|low| {
                let mut m = digits(low, p, nu);
                m.push(1);
                m
            })
            .find(|m| m[0] != 0 && is_irreducible(m, p))
            .ok_or(FieldError::NoIrreducible { p, n })?
    };
    FieldCtx::with_modulus(p, modulus)
}

impl FieldCtx {
    fn with_modulus(p: u32, modulus: Vec<u32>) -> Result<Self, FieldError> {
        let n = (modulus.len() - 1) as u32;
        let q = p.pow(n);
        let order = (q - 1) as u64;
        let factors = prime_factors(q - 1);
        let primitive = if q == 2 {
            1
        } else {
            (2..q)
                .find(|&g| {
                    factors
                        .iter()
                        .all(|&r| slow_pow(g, order / r as u64, p, &modulus) != 1)
                })
                .ok_or(FieldError::NoIrreducible { p, n })?
        };
        let span = (q - 1) as usize;
        let mut exp = vec![0u32; 2 * span.max(1)];
        let mut log = vec![0u32; q as usize];
        let mut cur = 1u32;
        for i in 0..span {
            exp[i] = cur;
            exp[i + span] = cur;
            log[cur as usize] = i as u32;
            cur = slow_mul(cur, primitive, p, &modulus);
        }
        if q == 2 {
            exp = vec![1, 1];
        }
        let nu = n as usize;
        let pow_p: Vec<u32> = (0..nu).map(|i| p.pow(i as u32)).collect();
        let neg = (0..q)
            .map(|c| {
                let d: Vec<u32> = digits(c, p, nu).iter().map(|&x| (p - x) % p).collect();
                undigits(&d, p)
            })
            .collect();
        let add = (p != 2 && q <= ADD_TABLE_LIMIT).then(|| {
            let mut t = vec![0u32; (q * q) as usize];
            for a in 0..q {
                let da = digits(a, p, nu);
                for b in 0..q {
                    let db = digits(b, p, nu);
                    let s: Vec<u32> = da.iter().zip(&db).map(|(x, y)| (x + y) % p).collect();
                    t[(a * q + b) as usize] = undigits(&s, p);
                }
            }
            t
        });
        Ok(FieldCtx {
            p,
            n,
            q,
            modulus,
            primitive,
            exp,
            log,
            neg,
            add,
            pow_p,
        })
    }

    pub fn characteristic(&self) -> u32 {
        self.p
    }

    pub fn degree(&self) -> u32 {
        self.n
    }

    pub fn order(&self) -> u32 {
        self.q
    }

    /// Modulus coefficients, low to high, monic.
    pub fn modulus(&self) -> &[u32] {
        &self.modulus
    }

    pub fn primitive(&self) -> FieldElem {
        FieldElem(self.primitive)
    }

    pub fn elem(&self, code: u32) -> Result<FieldElem, FieldError> {
        if code < self.q {
            Ok(FieldElem(code))
        } else {
            Err(FieldError::BadCode { code, q: self.q })
        }
    }

    /// Image of the integer `k` under Z → F_p ⊂ F_q.
    pub fn scalar(&self, k: i64) -> FieldElem {
        FieldElem(k.rem_euclid(self.p as i64) as u32)
    }

    pub fn elements(&self) -> impl Iterator<Item = FieldElem> {
        (0..self.q).map(FieldElem)
    }

    pub fn nonzero(&self) -> impl Iterator<Item = FieldElem> {
        (1..self.q).map(FieldElem)
    }

    pub fn coeffs(&self, a: FieldElem) -> Vec<u32> {
        digits(a.0, self.p, self.n as usize)
    }

    pub fn from_coeffs(&self, c: &[u32]) -> FieldElem {
        let mut code = 0u32;
        for (i, &d) in c.iter().enumerate().take(self.n as usize) {
            code += (d % self.p) * self.pow_p[i];
        }
        FieldElem(code)
    }

    #[inline]
    pub fn add(&self, a: FieldElem, b: FieldElem) -> FieldElem {
        if self.p == 2 {
            return FieldElem(a.0 ^ b.0);
        }
        if let Some(t) = &self.add {
            return FieldElem(t[(a.0 * self.q + b.0) as usize]);
        }
        let (mut x, mut y) = (a.0, b.0);
        let mut code = 0;
        for &w in &self.pow_p {
            code += ((x % self.p + y % self.p) % self.p) * w;
            x /= self.p;
            y /= self.p;
        }
        FieldElem(code)
    }

    #[inline]
    pub fn neg(&self, a: FieldElem) -> FieldElem {
        FieldElem(self.neg[a.0 as usize])
    }

    #[inline]
    pub fn sub(&self, a: FieldElem, b: FieldElem) -> FieldElem {
        self.add(a, self.neg(b))
    }

    #[inline]
    pub fn mul(&self, a: FieldElem, b: FieldElem) -> FieldElem {
        if a.0 == 0 || b.0 == 0 {
            return FieldElem::ZERO;
        }
        let i = self.log[a.0 as usize] + self.log[b.0 as usize];
        FieldElem(self.exp[i as usize])
    }

    pub fn inv(&self, a: FieldElem) -> Result<FieldElem, FieldError> {
        if a.0 == 0 {
            return Err(FieldError::DivisionByZero);
        }
        let span = self.q - 1;
        let i = (span - self.log[a.0 as usize]) % span;
        Ok(FieldElem(self.exp[i as usize]))
    }

    pub fn div(&self, a: FieldElem, b: FieldElem) -> Result<FieldElem, FieldError> {
        Ok(self.mul(a, self.inv(b)?))
    }

    pub fn pow(&self, a: FieldElem, e: u64) -> FieldElem {
        if e == 0 {
            return FieldElem::ONE;
        }
        if a.0 == 0 {
            return FieldElem::ZERO;
        }
        let span = (self.q - 1) as u64;
        let i = (self.log[a.0 as usize] as u64 * (e % span)) % span;
        FieldElem(self.exp[i as usize])
    }

    /// Σ a_i b_i.
    pub fn dot(&self, a: &[FieldElem], b: &[FieldElem]) -> FieldElem {
        a.iter()
            .zip(b)
            .fold(FieldElem::ZERO, |acc, (&x, &y)| self.add(acc, self.mul(x, y)))
    }

    pub fn sum<I: IntoIterator<Item = FieldElem>>(&self, it: I) -> FieldElem {
        it.into_iter().fold(FieldElem::ZERO, |acc, x| self.add(acc, x))
    }

    /// Evaluates a polynomial with coefficients in F_p (low to high) at `x`.
    pub fn eval_prime_poly(&self, coeffs: &[u32], x: FieldElem) -> FieldElem {
        coeffs.iter().rev().fold(FieldElem::ZERO, |acc, &c| {
            self.add(self.mul(acc, x), FieldElem(c % self.p))
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f4_modulus_and_square_of_x() {
        let f = field_new(2, 2).unwrap();
        assert_eq!(f.modulus(), &[1, 1, 1]);
        let x = FieldElem(2);
        assert_eq!(f.mul(x, x), FieldElem(3));
    }

    #[test]
    fn prime_field_modulus_is_x() {
        let f = field_new(3, 1).unwrap();
        assert_eq!(f.modulus(), &[0, 1]);
        assert_eq!(f.inv(FieldElem(2)).unwrap(), FieldElem(2));
    }

    #[test]
    fn small_moduli() {
        assert_eq!(field_new(3, 2).unwrap().modulus(), &[1, 0, 1]);
        assert_eq!(field_new(5, 2).unwrap().modulus(), &[2, 0, 1]);
        assert_eq!(field_new(2, 3).unwrap().modulus(), &[1, 1, 0, 1]);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert_eq!(field_new(4, 1).unwrap_err(), FieldError::NotPrime(4));
        assert_eq!(field_new(2, 0).unwrap_err(), FieldError::ZeroDegree);
        assert!(matches!(field_new(2, 21), Err(FieldError::TooLarge { .. })));
        let f = field_new(5, 1).unwrap();
        assert_eq!(f.inv(FieldElem::ZERO), Err(FieldError::DivisionByZero));
        assert!(f.elem(5).is_err());
    }

    #[test]
    fn prime_power_split() {
        assert_eq!(prime_power(25).unwrap(), (5, 2));
        assert_eq!(prime_power(2).unwrap(), (2, 1));
        assert!(prime_power(12).is_err());
        assert!(prime_power(1).is_err());
    }

    #[test]
    fn pow_matches_repeated_mul() {
        let f = field_new(3, 2).unwrap();
        for a in f.elements() {
            let mut acc = FieldElem::ONE;
            for e in 0..20u64 {
                assert_eq!(f.pow(a, e), acc);
                acc = f.mul(acc, a);
            }
        }
    }

    #[test]
    fn digitwise_add_agrees_with_table() {
        let f = field_new(3, 7).unwrap();
        assert!(f.add.is_none());
        let small = field_new(3, 2).unwrap();
        for a in 0..9 {
            for b in 0..9 {
                let big = f.add(FieldElem(a), FieldElem(b));
                assert_eq!(big, small.add(FieldElem(a), FieldElem(b)));
            }
        }
    }
}
