//! GF(2^m) via log/antilog tables and GF(p) via `u64` modular arithmetic.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Field elements are their canonical integer representation in `0..q`:
/// polynomial bit patterns for GF(2^m), residues for GF(p).
pub type Elem = u32;

/// Primitive polynomials for GF(2^m), `m = 1..=16`, bit `i` holding the
/// coefficient of `x^i`. `0x11D` is `x⁸ + x⁴ + x³ + x² + 1`.
pub const PRIMITIVE_POLYS: [u32; 16] = [
    0x3, 0x7, 0xB, 0x13, 0x25, 0x43, 0x89, 0x11D, 0x211, 0x409, 0x805, 0x1053, 0x201B, 0x4443, 0x8003, 0x1100B,
];

#[derive(Debug)]
enum Kind {
    Binary { m: u32, poly: u32, exp: Vec<Elem>, log: Vec<u32> },
    Prime { p: u64 },
}

/// A finite field; cheap to clone (tables are shared).
#[derive(Clone)]
pub struct Field(Arc<Kind>);

impl Field {
    /// GF(2^m) with the default primitive polynomial.
    pub fn binary(m: u32) -> Result<Self> {
        if !(1..=16).contains(&m) {
            return Err(Error::UnsupportedField(format!("GF(2^{m}): need 1 <= m <= 16")));
        }
        Self::binary_with_poly(m, PRIMITIVE_POLYS[m as usize - 1])
    }

    /// GF(2^m) modulo `poly`, which must be primitive of degree `m`.
    pub fn binary_with_poly(m: u32, poly: u32) -> Result<Self> {
        if !(1..=16).contains(&m) || poly >> m != 1 {
            return Err(Error::UnsupportedField(format!("polynomial {poly:#x} is not of degree {m}")));
        }
        let q = 1usize << m;
        let mut exp = vec![0; 2 * (q - 1)];
        let mut log = vec![u32::MAX; q];
        let mut x: u32 = 1;
        for i in 0..q - 1 {
            if log[x as usize] != u32::MAX {
                return Err(Error::UnsupportedField(format!("polynomial {poly:#x} is not primitive")));
            }
            exp[i] = x;
            log[x as usize] = i as u32;
            x <<= 1;
            if x & q as u32 != 0 {
                x ^= poly;
            }
        }
        if x != 1 {
            return Err(Error::UnsupportedField(format!("polynomial {poly:#x} is not primitive")));
        }
        for i in q - 1..exp.len() {
            exp[i] = exp[i - (q - 1)];
        }
        Ok(Field(Arc::new(Kind::Binary { m, poly, exp, log })))
    }

    /// GF(p) for a prime `p < 2³¹`.
    pub fn prime(p: u64) -> Result<Self> {
        if p >= 1 << 31 || !is_prime(p) {
            return Err(Error::UnsupportedField(format!("{p} is not a prime below 2^31")));
        }
        Ok(Field(Arc::new(Kind::Prime { p })))
    }

    /// The field of order `q`: a power of two up to `2^16`, or a prime below `2^31`.
    pub fn with_order(q: u64) -> Result<Self> {
        if q.is_power_of_two() && q >= 2 {
            Self::binary(q.trailing_zeros())
        } else {
            Self::prime(q).map_err(|_| Error::UnsupportedField(format!("order {q} is neither 2^m (m <= 16) nor a prime < 2^31")))
        }
    }

    /// Field of order `q` with an explicit GF(2^m) polynomial (`poly = 0`
    /// selects the default; ignored for prime fields).
    pub fn from_parts(q: u64, poly: u32) -> Result<Self> {
        if poly != 0 && q.is_power_of_two() {
            Self::binary_with_poly(q.trailing_zeros(), poly)
        } else {
            Self::with_order(q)
        }
    }

    pub fn order(&self) -> u64 {
        match *self.0 {
            Kind::Binary { m, .. } => 1 << m,
            Kind::Prime { p } => p,
        }
    }

    pub fn characteristic(&self) -> u64 {
        match *self.0 {
            Kind::Binary { .. } => 2,
            Kind::Prime { p } => p,
        }
    }

    /// Reduction polynomial, or 0 for a prime field.
    pub fn poly(&self) -> u32 {
        match *self.0 {
            Kind::Binary { poly, .. } => poly,
            Kind::Prime { .. } => 0,
        }
    }

    pub fn contains(&self, a: Elem) -> bool {
        (a as u64) < self.order()
    }

    #[inline]
    pub fn add(&self, a: Elem, b: Elem) -> Elem {
        match *self.0 {
            Kind::Binary { .. } => a ^ b,
            Kind::Prime { p } => ((a as u64 + b as u64) % p) as Elem,
        }
    }

    #[inline]
    pub fn neg(&self, a: Elem) -> Elem {
        match *self.0 {
            Kind::Binary { .. } => a,
            Kind::Prime { p } => ((p - a as u64) % p) as Elem,
        }
    }

    #[inline]
    pub fn sub(&self, a: Elem, b: Elem) -> Elem {
        self.add(a, self.neg(b))
    }

    #[inline]
    pub fn mul(&self, a: Elem, b: Elem) -> Elem {
        match &*self.0 {
            Kind::Binary { exp, log, .. } => {
                if a == 0 || b == 0 {
                    0
                } else {
                    exp[(log[a as usize] + log[b as usize]) as usize]
                }
            }
            Kind::Prime { p } => ((a as u64 * b as u64) % p) as Elem,
        }
    }

    pub fn inv(&self, a: Elem) -> Option<Elem> {
        if a == 0 {
            return None;
        }
        Some(match &*self.0 {
            Kind::Binary { exp, log, m, .. } => {
                let order = (1u32 << m) - 1;
                exp[((order - log[a as usize]) % order) as usize]
            }
            Kind::Prime { p } => self.pow(a, p - 2),
        })
    }

    pub fn div(&self, a: Elem, b: Elem) -> Option<Elem> {
        self.inv(b).map(|ib| self.mul(a, ib))
    }

    pub fn pow(&self, a: Elem, mut e: u64) -> Elem {
        let mut base = a;
        let mut acc = 1;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        acc
    }

    /// `∑ aᵢbᵢ`.
    pub fn dot(&self, a: &[Elem], b: &[Elem]) -> Elem {
        a.iter().zip(b).fold(0, |acc, (&x, &y)| self.add(acc, self.mul(x, y)))
    }

    pub fn random<R: Rng + ?Sized>(&self, rng: &mut R) -> Elem {
        rng.gen_range(0..self.order()) as Elem
    }

    /// A generator of the multiplicative group.
    pub fn primitive_element(&self) -> Elem {
        match *self.0 {
            Kind::Binary { m, .. } => {
                if m == 1 {
                    1
                } else {
                    2
                }
            }
            Kind::Prime { p } => {
                let factors = prime_factors(p - 1);
                (1..p as Elem)
                    .find(|&g| factors.iter().all(|&f| self.pow(g, (p - 1) / f) != 1))
                    .expect("a cyclic group has a generator")
            }
        }
    }
}

impl PartialEq for Field {
    fn eq(&self, other: &Self) -> bool {
        self.order() == other.order() && self.poly() == other.poly()
    }
}

impl Eq for Field {}

impl fmt::Debug for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self.0 {
            Kind::Binary { m, poly, .. } => write!(f, "GF(2^{m}, {poly:#x})"),
            Kind::Prime { p } => write!(f, "GF({p})"),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct FieldRepr {
    q: u64,
    poly: u32,
}

impl Serialize for Field {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        FieldRepr { q: self.order(), poly: self.poly() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Field {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = FieldRepr::deserialize(d)?;
        Field::from_parts(r.q, r.poly).map_err(serde::de::Error::custom)
    }
}

fn is_prime(n: u64) -> bool {
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

fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            out.push(d);
            while n % d == 0 {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}
