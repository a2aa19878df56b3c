//! Additive and boolean secret sharing over `Z_{2^l}`, plus the plaintext
//! wrap / MW references the protocols are checked against.
//!
//! A value `x` in `Z_{2^l}` is additively shared as `x = x0 + x1 mod 2^l`;
//! single bits are XOR-shared. Shares are thin newtypes over [`RingElem`] /
//! `bool` so that protocol signatures say which role a slice plays.

use rand::Rng;

use crate::ring::{width_mask, RingElem};

/// One party's additive share of a ring element.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ArithShare(pub RingElem);

impl ArithShare {
    /// Width of the underlying ring.
    #[inline(always)]
    pub fn width(self) -> u8 {
        self.0.width()
    }

    /// Reduced representative of this share.
    #[inline(always)]
    pub fn value(self) -> u128 {
        self.0.value()
    }
}

impl std::ops::Add for ArithShare {
    type Output = ArithShare;
    #[inline(always)]
    fn add(self, rhs: Self) -> Self {
        ArithShare(self.0 + rhs.0)
    }
}

impl std::ops::Sub for ArithShare {
    type Output = ArithShare;
    #[inline(always)]
    fn sub(self, rhs: Self) -> Self {
        ArithShare(self.0 - rhs.0)
    }
}

impl std::ops::Neg for ArithShare {
    type Output = ArithShare;
    #[inline(always)]
    fn neg(self) -> Self {
        ArithShare(-self.0)
    }
}

/// One party's XOR share of a bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct BoolShare(pub bool);

impl std::ops::BitXor for BoolShare {
    type Output = BoolShare;
    #[inline(always)]
    fn bitxor(self, rhs: Self) -> Self {
        BoolShare(self.0 ^ rhs.0)
    }
}

impl BoolShare {
    /// Flips the shared bit (exactly one party should call this).
    #[inline(always)]
    pub fn flip(self) -> Self {
        BoolShare(!self.0)
    }
}

/// Splits `x` into a uniformly random additive sharing.
pub fn share<R: Rng>(rng: &mut R, x: RingElem) -> (ArithShare, ArithShare) {
    let r = RingElem::new(x.width(), rng.gen::<u128>() & width_mask(x.width()));
    (ArithShare(r), ArithShare(x - r))
}

/// Reconstructs a value from both additive shares.
pub fn reconstruct(a: ArithShare, b: ArithShare) -> RingElem {
    a.0 + b.0
}

/// Splits a bit into a uniformly random XOR sharing.
pub fn share_bool<R: Rng>(rng: &mut R, b: bool) -> (BoolShare, BoolShare) {
    let r = rng.gen::<bool>();
    (BoolShare(r), BoolShare(b ^ r))
}

/// Reconstructs a bit from both XOR shares.
pub fn reconstruct_bool(a: BoolShare, b: BoolShare) -> bool {
    a.0 ^ b.0
}

/// Plaintext wrap bit: `1{x0 + x1 >= 2^l}` for an `l`-bit sharing.
pub fn wrap_plain(x0: RingElem, x1: RingElem) -> bool {
    debug_assert_eq!(x0.width(), x1.width());
    x0.value().checked_add(x1.value()).map_or(true, |s| s > width_mask(x0.width()))
}

/// Plaintext MW coefficient: `MSB(x0 + x1) + Wrap(x0, x1)`, in `{0, 1, 2}`.
pub fn mw_plain(x0: RingElem, x1: RingElem) -> u8 {
    (x0 + x1).msb() as u8 + wrap_plain(x0, x1) as u8
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn share_reconstruct_roundtrip() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        for l in [1u8, 8, 37, 80, 128] {
            for _ in 0..50 {
                let x = RingElem::new(l, rng.gen::<u128>() & width_mask(l));
                let (a, b) = share(&mut rng, x);
                assert_eq!(reconstruct(a, b), x);
            }
        }
        for _ in 0..20 {
            let b = rng.gen::<bool>();
            let (s0, s1) = share_bool(&mut rng, b);
            assert_eq!(reconstruct_bool(s0, s1), b);
        }
    }

    #[test]
    fn wrap_and_mw_frozen_examples() {
        let e = |v| RingElem::new(8, v);
        assert!(wrap_plain(e(255), e(1)));
        assert!(!wrap_plain(e(254), e(1)));
        assert_eq!(mw_plain(e(200), e(200)), 2);
        assert_eq!(mw_plain(e(100), e(100)), 1); // 200: MSB set, no wrap
        assert_eq!(mw_plain(e(1), e(2)), 0);
    }

    #[test]
    fn wrap_handles_full_width() {
        let a = RingElem::new(128, u128::MAX);
        assert!(wrap_plain(a, RingElem::new(128, 1)));
        assert!(!wrap_plain(a, RingElem::new(128, 0)));
    }
}
