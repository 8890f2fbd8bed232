//! Arithmetic in GF(2^8).
//!
//! The field is built over the primitive polynomial x^8 + x^4 + x^3 + x^2 + 1
//! (0x11D) with generator α = x = 0x02. Log/antilog tables are built once on
//! first use and checked against a bitwise carry-less multiply.

use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Sub};
use std::sync::LazyLock;

/// Primitive polynomial x^8 + x^4 + x^3 + x^2 + 1.
pub const PRIMITIVE_POLY: u16 = 0x11D;

/// Multiplicative order of the field.
pub const ORDER: usize = 255;

struct Tables {
    // exp is doubled so exp[log a + log b] never needs a modulo.
    exp: [u8; 2 * ORDER],
    log: [u8; 256],
}

static TABLES: LazyLock<Tables> = LazyLock::new(|| {
    let mut exp = [0u8; 2 * ORDER];
    let mut log = [0u8; 256];
    let mut x: u8 = 1;
    for i in 0..ORDER {
        exp[i] = x;
        exp[i + ORDER] = x;
        log[x as usize] = i as u8;
        x = mul_bitwise(x, 2);
    }
    assert_eq!(x, 1, "0x02 must generate the multiplicative group");
    Tables { exp, log }
});

/// Shift-and-add multiply with reduction by [`PRIMITIVE_POLY`].
///
/// Slow, table-free reference used to validate the log tables.
pub const fn mul_bitwise(a: u8, b: u8) -> u8 {
    let mut a = a as u16;
    let mut b = b;
    let mut acc: u16 = 0;
    while b != 0 {
        if b & 1 != 0 {
            acc ^= a;
        }
        a <<= 1;
        if a & 0x100 != 0 {
            a ^= PRIMITIVE_POLY;
        }
        b >>= 1;
    }
    acc as u8
}

/// One element of GF(2^8).
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Gf256(pub u8);

impl Gf256 {
    pub const ZERO: Gf256 = Gf256(0);
    pub const ONE: Gf256 = Gf256(1);

    /// α^power, with the exponent taken modulo 255.
    pub fn alpha_pow(power: usize) -> Gf256 {
        Gf256(TABLES.exp[power % ORDER])
    }

    /// Discrete log base α. `None` for zero.
    pub fn log(self) -> Option<usize> {
        (self.0 != 0).then(|| TABLES.log[self.0 as usize] as usize)
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }

    /// Multiplicative inverse. Panics on zero.
    pub fn inv(self) -> Gf256 {
        let l = self.log().expect("zero has no inverse in GF(2^8)");
        Gf256(TABLES.exp[ORDER - l])
    }

    pub fn pow(self, e: usize) -> Gf256 {
        match self.log() {
            None if e == 0 => Gf256::ONE,
            None => Gf256::ZERO,
            Some(l) => Gf256(TABLES.exp[(l * (e % ORDER)) % ORDER]),
        }
    }
}

impl fmt::Debug for Gf256 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Gf256({:#04x})", self.0)
    }
}

impl From<u8> for Gf256 {
    fn from(v: u8) -> Self {
        Gf256(v)
    }
}

impl From<Gf256> for u8 {
    fn from(v: Gf256) -> Self {
        v.0
    }
}

impl Add for Gf256 {
    type Output = Gf256;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn add(self, rhs: Gf256) -> Gf256 {
        Gf256(self.0 ^ rhs.0)
    }
}

// Addition in characteristic 2 is XOR.
#[allow(clippy::suspicious_op_assign_impl)]
impl AddAssign for Gf256 {
    fn add_assign(&mut self, rhs: Gf256) {
        self.0 ^= rhs.0;
    }
}

impl Sub for Gf256 {
    type Output = Gf256;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn sub(self, rhs: Gf256) -> Gf256 {
        Gf256(self.0 ^ rhs.0)
    }
}

impl Mul for Gf256 {
    type Output = Gf256;
    fn mul(self, rhs: Gf256) -> Gf256 {
        mul(self.0, rhs.0).into()
    }
}

impl MulAssign for Gf256 {
    fn mul_assign(&mut self, rhs: Gf256) {
        *self = *self * rhs;
    }
}

impl Div for Gf256 {
    type Output = Gf256;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, rhs: Gf256) -> Gf256 {
        self * rhs.inv()
    }
}

/// Table-driven product of two field elements.
#[inline]
pub fn mul(a: u8, b: u8) -> u8 {
    if a == 0 || b == 0 {
        return 0;
    }
    let t = &*TABLES;
    t.exp[t.log[a as usize] as usize + t.log[b as usize] as usize]
}
