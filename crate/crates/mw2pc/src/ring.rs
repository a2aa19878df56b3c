//! Ring elements of `Z_{2^l}` for runtime-chosen widths `1 <= l <= 128`,
//! plus fixed-point encoding.
//!
//! Elements are stored reduced in a `u128` together with their width. All
//! arithmetic wraps modulo `2^l` and panics (debug and release) if operand
//! widths disagree — mixing rings is a programming error, not a runtime
//! condition.
//!
//! Fixed-point values use the usual two's-complement convention: an `l`-bit
//! element `x` with `f` fractional bits encodes the real number
//! `(x - MSB(x) * 2^l) / 2^f`.

use crate::{Error, Result};

/// An element of `Z_{2^l}`, stored reduced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct RingElem {
    value: u128,
    width: u8,
}

/// Bit mask selecting the low `width` bits.
#[inline(always)]
pub fn width_mask(width: u8) -> u128 {
    debug_assert!((1..=128).contains(&width), "ring width {width} out of range");
    if width == 128 {
        u128::MAX
    } else {
        (1u128 << width) - 1
    }
}

impl RingElem {
    /// Creates an element of `Z_{2^width}`, reducing `value` modulo `2^width`.
    ///
    /// Panics if `width` is outside `1..=128`.
    #[inline(always)]
    pub fn new(width: u8, value: u128) -> Self {
        assert!((1..=128).contains(&width), "ring width {width} out of range");
        Self { value: value & width_mask(width), width }
    }

    /// The additive identity of `Z_{2^width}`.
    #[inline(always)]
    pub fn zero(width: u8) -> Self {
        Self::new(width, 0)
    }

    /// The multiplicative identity of `Z_{2^width}`.
    #[inline(always)]
    pub fn one(width: u8) -> Self {
        Self::new(width, 1)
    }

    /// Creates an element from a signed integer (two's-complement wrap).
    #[inline(always)]
    pub fn from_signed(width: u8, value: i128) -> Self {
        Self::new(width, value as u128)
    }

    /// The reduced representative in `[0, 2^width)`.
    #[inline(always)]
    pub fn value(self) -> u128 {
        self.value
    }

    /// The ring width `l`.
    #[inline(always)]
    pub fn width(self) -> u8 {
        self.width
    }

    /// The ring modulus `2^width` (as `u128`; `width = 128` would overflow and
    /// is rejected).
    #[inline(always)]
    pub fn modulus(self) -> u128 {
        assert!(self.width < 128, "modulus of a 128-bit ring overflows u128");
        1u128 << self.width
    }

    /// Most significant bit: `1{x >= 2^(width-1)}`.
    #[inline(always)]
    pub fn msb(self) -> bool {
        self.value >> (self.width - 1) & 1 == 1
    }

    /// Two's-complement interpretation: `x - MSB(x) * 2^width`.
    #[inline(always)]
    pub fn to_signed(self) -> i128 {
        if self.width == 128 {
            self.value as i128
        } else if self.msb() {
            self.value as i128 - (1i128 << self.width)
        } else {
            self.value as i128
        }
    }

    /// Logical (zero-fill) right shift by `k` bits within the same ring.
    #[inline(always)]
    pub fn shr_logical(self, k: u8) -> Self {
        debug_assert!(k <= self.width, "shift {k} exceeds width {}", self.width);
        let v = if k == 128 { 0 } else { self.value >> k };
        Self { value: v, width: self.width }
    }

    /// Re-embeds the element in a ring of a different width: reduction when
    /// narrowing, zero-extension when widening.
    #[inline(always)]
    pub fn resize(self, new_width: u8) -> Self {
        Self::new(new_width, self.value)
    }

    /// Wrapping addition in `Z_{2^width}`.
    #[inline(always)]
    pub fn wrapping_add(self, rhs: Self) -> Self {
        debug_assert_eq!(self.width, rhs.width, "width mismatch in add");
        Self { value: self.value.wrapping_add(rhs.value) & width_mask(self.width), width: self.width }
    }

    /// Wrapping subtraction in `Z_{2^width}`.
    #[inline(always)]
    pub fn wrapping_sub(self, rhs: Self) -> Self {
        debug_assert_eq!(self.width, rhs.width, "width mismatch in sub");
        Self { value: self.value.wrapping_sub(rhs.value) & width_mask(self.width), width: self.width }
    }

    /// Wrapping multiplication in `Z_{2^width}`.
    #[inline(always)]
    pub fn wrapping_mul(self, rhs: Self) -> Self {
        debug_assert_eq!(self.width, rhs.width, "width mismatch in mul");
        Self { value: self.value.wrapping_mul(rhs.value) & width_mask(self.width), width: self.width }
    }

    /// Wrapping negation in `Z_{2^width}`.
    #[inline(always)]
    pub fn wrapping_neg(self) -> Self {
        Self { value: self.value.wrapping_neg() & width_mask(self.width), width: self.width }
    }

    /// Adds a public `u128` constant (reduced) to the element.
    #[inline(always)]
    pub fn add_const(self, c: u128) -> Self {
        Self { value: self.value.wrapping_add(c) & width_mask(self.width), width: self.width }
    }

    /// Multiplies by a public `u128` constant (reduced).
    #[inline(always)]
    pub fn mul_const(self, c: u128) -> Self {
        Self { value: self.value.wrapping_mul(c) & width_mask(self.width), width: self.width }
    }
}

impl std::ops::Add for RingElem {
    type Output = RingElem;
    #[inline(always)]
    fn add(self, rhs: Self) -> Self {
        self.wrapping_add(rhs)
    }
}

impl std::ops::Sub for RingElem {
    type Output = RingElem;
    #[inline(always)]
    fn sub(self, rhs: Self) -> Self {
        self.wrapping_sub(rhs)
    }
}

impl std::ops::Mul for RingElem {
    type Output = RingElem;
    #[inline(always)]
    fn mul(self, rhs: Self) -> Self {
        self.wrapping_mul(rhs)
    }
}

impl std::ops::Neg for RingElem {
    type Output = RingElem;
    #[inline(always)]
    fn neg(self) -> Self {
        self.wrapping_neg()
    }
}

impl std::iter::Sum for RingElem {
    fn sum<I: Iterator<Item = Self>>(mut iter: I) -> Self {
        let first = iter.next().expect("sum of an empty RingElem iterator has no width");
        iter.fold(first, |acc, x| acc + x)
    }
}

impl std::fmt::Display for RingElem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}", self.value, self.width)
    }
}

/// Fixed-point layout: ring width `l` and fractional bits `f`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FixMeta {
    /// Ring width in bits.
    pub l: u8,
    /// Fractional bits.
    pub f: u8,
}

impl FixMeta {
    /// Creates a layout, checking `1 <= l <= 128` and `f < l`.
    pub fn new(l: u8, f: u8) -> Result<Self> {
        if !(1..=128).contains(&l) {
            return Err(Error::InvalidParam(format!("fixed-point width {l} out of range")));
        }
        if f >= l {
            return Err(Error::InvalidParam(format!("fractional bits {f} must be < width {l}")));
        }
        Ok(Self { l, f })
    }

    /// One unit in the last place: `2^-f`.
    pub fn ulp(self) -> f64 {
        (0.5f64).powi(self.f as i32)
    }
}

/// Encodes a real number as `floor(x * 2^f) mod 2^l`.
///
/// This is the public encoding used at protocol boundaries; values whose
/// magnitude exceeds the signed range simply wrap, like any ring arithmetic.
pub fn encode_fix(x: f64, meta: FixMeta) -> RingElem {
    let scaled = (x * (meta.f as f64).exp2()).floor();
    RingElem::from_signed(meta.l, scaled as i128)
}

/// Encodes a real number as `round(x * 2^f) mod 2^l` (ties away from zero).
///
/// Used for locally-held function values inside the transcendental pipelines,
/// where nearest-rounding is needed to stay inside the ULP budgets.
pub fn encode_fix_round(x: f64, meta: FixMeta) -> RingElem {
    let scaled = (x * (meta.f as f64).exp2()).round();
    RingElem::from_signed(meta.l, scaled as i128)
}

/// Decodes an element to the real number it encodes:
/// `(x - MSB(x) * 2^l) / 2^f`.
pub fn decode_real(x: RingElem, meta: FixMeta) -> f64 {
    debug_assert_eq!(x.width(), meta.l, "decode width mismatch");
    x.to_signed() as f64 * (-(meta.f as f64)).exp2()
}
