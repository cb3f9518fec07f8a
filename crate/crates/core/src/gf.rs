//! Arithmetic over GF(2^r), 1 <= r <= 8.
//!
//! Elements are plain bytes; the field context carries the reduction
//! polynomial and log/antilog tables, so several fields can coexist.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default reduction polynomial for GF(256): x^8 + x^4 + x^3 + x^2 + 1.
pub const DEFAULT_POLY_256: u32 = 0x11D;

/// Commonly used primitive polynomials, indexed by degree.
const DEFAULT_POLYS: [u32; 9] = [0, 0x3, 0x7, 0xB, 0x13, 0x25, 0x43, 0x89, DEFAULT_POLY_256];

/// One element of a binary extension field.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[repr(transparent)]
pub struct GfElement(pub u8);

impl GfElement {
    pub const ZERO: GfElement = GfElement(0);
    pub const ONE: GfElement = GfElement(1);

    #[inline]
    pub fn value(self) -> u8 {
        self.0
    }

    #[inline]
    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

impl fmt::Display for GfElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<u8> for GfElement {
    fn from(v: u8) -> Self {
        GfElement(v)
    }
}

/// Field GF(2^r) defined by an irreducible polynomial.
#[derive(Clone, PartialEq, Eq)]
pub struct GfContext {
    r: u32,
    q: usize,
    poly: u32,
    log: Vec<u8>,
    antilog: Vec<u8>,
}

impl fmt::Debug for GfContext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GfContext")
            .field("r", &self.r)
            .field("q", &self.q)
            .field("poly", &format_args!("{:#x}", self.poly))
            .finish()
    }
}

/// Degree of a GF(2)[x] polynomial stored as a bit mask.
fn degree(p: u32) -> i32 {
    31 - p.leading_zeros() as i32
}

/// Remainder of `a` divided by `b` over GF(2).
fn poly_rem(mut a: u32, b: u32) -> u32 {
    let db = degree(b);
    while a != 0 && degree(a) >= db {
        a ^= b << (degree(a) - db);
    }
    a
}

/// Trial division by every polynomial of degree 1..=deg/2.
fn is_irreducible(poly: u32, deg: u32) -> bool {
    if degree(poly) != deg as i32 || poly & 1 == 0 {
        return false;
    }
    for d in 1..=deg / 2 {
        for divisor in (1u32 << d)..(1u32 << (d + 1)) {
            if poly_rem(poly, divisor) == 0 {
                return false;
            }
        }
    }
    true
}

impl GfContext {
    /// Builds GF(2^r) from a reduction polynomial given as an (r+1)-bit mask.
    pub fn new(r: u32, poly: u32) -> Result<Self> {
        if !(1..=8).contains(&r) {
            return Err(Error::FieldDegree(r));
        }
        if !is_irreducible(poly, r) {
            return Err(Error::ReduciblePolynomial { poly, degree: r });
        }
        let q = 1usize << r;
        let order = q - 1;

        // Find a generator of the multiplicative group; x need not be primitive.
        let slow_mul = |a: u32, b: u32| -> u32 {
            let mut acc = 0u32;
            for bit in 0..r {
                if (b >> bit) & 1 == 1 {
                    acc ^= a << bit;
                }
            }
            poly_rem(acc, poly)
        };
        let generator = (1..q as u32)
            .find(|&g| {
                let mut x = 1u32;
                for k in 1..=order {
                    x = slow_mul(x, g);
                    if x == 1 {
                        return k == order;
                    }
                }
                false
            })
            .expect("multiplicative group of a field is cyclic");

        let mut log = vec![0u8; q];
        let mut antilog = vec![0u8; q];
        let mut x = 1u32;
        for (k, slot) in antilog.iter_mut().enumerate().take(order) {
            *slot = x as u8;
            log[x as usize] = k as u8;
            x = slow_mul(x, generator);
        }
        antilog[order] = antilog[0];
        Ok(GfContext { r, q, poly, log, antilog })
    }

    /// Field with the default polynomial for degree `r`.
    pub fn with_default_poly(r: u32) -> Result<Self> {
        if !(1..=8).contains(&r) {
            return Err(Error::FieldDegree(r));
        }
        Self::new(r, DEFAULT_POLYS[r as usize])
    }

    /// Default reduction polynomial for degree `r` (1..=8).
    pub fn default_poly(r: u32) -> Option<u32> {
        DEFAULT_POLYS.get(r as usize).copied().filter(|&p| p != 0)
    }

    /// Field of order `q = 2^r` with the default polynomial.
    pub fn of_order(q: usize) -> Result<Self> {
        if !q.is_power_of_two() || q < 2 {
            return Err(Error::NotPowerOfTwo(q));
        }
        Self::with_default_poly(q.trailing_zeros())
    }

    pub fn r(&self) -> u32 {
        self.r
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn poly(&self) -> u32 {
        self.poly
    }

    pub fn log_table(&self) -> &[u8] {
        &self.log
    }

    pub fn antilog_table(&self) -> &[u8] {
        &self.antilog
    }

    /// Checks that `value` is an element of this field.
    pub fn element(&self, value: u32) -> Result<GfElement> {
        if (value as usize) < self.q {
            Ok(GfElement(value as u8))
        } else {
            Err(Error::ElementRange { value, q: self.q })
        }
    }

    #[inline]
    pub fn add(&self, a: GfElement, b: GfElement) -> GfElement {
        GfElement(a.0 ^ b.0)
    }

    #[inline]
    pub fn mul(&self, a: GfElement, b: GfElement) -> GfElement {
        GfElement(self.mul_raw(a.0, b.0))
    }

    #[inline]
    pub(crate) fn mul_raw(&self, a: u8, b: u8) -> u8 {
        if a == 0 || b == 0 {
            return 0;
        }
        let order = self.q - 1;
        let s = self.log[a as usize] as usize + self.log[b as usize] as usize;
        self.antilog[if s >= order { s - order } else { s }]
    }

    pub fn inv(&self, a: GfElement) -> Result<GfElement> {
        if a.0 == 0 {
            return Err(Error::ZeroInverse);
        }
        let order = self.q - 1;
        let l = self.log[a.0 as usize] as usize;
        Ok(GfElement(self.antilog[(order - l) % order]))
    }

    /// Table of `t -> c * t` for every field element `t`.
    pub fn mul_row(&self, c: GfElement) -> Vec<u8> {
        (0..self.q).map(|t| self.mul_raw(c.0, t as u8)).collect()
    }

    /// All field elements in increasing order.
    pub fn elements(&self) -> impl Iterator<Item = GfElement> {
        (0..self.q).map(|v| GfElement(v as u8))
    }
}
