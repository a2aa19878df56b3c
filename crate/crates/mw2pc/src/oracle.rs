//! Brute-force plaintext oracles, the ULP accuracy metric, and small
//! verification-report helpers.
//!
//! Everything here is written directly on `u128`/`i128`/`f64` arithmetic,
//! independent of the ring/protocol code it is used to judge. Test suites and
//! the `verify` CLI subcommand compare protocol outputs against these
//! references; accuracy suites aggregate [`UlpStats`].

/// Plaintext most-significant bit of `x mod 2^l`.
pub fn msb_ref(x: u128, l: u8) -> bool {
    assert!((1..=127).contains(&l), "oracle width {l} out of range");
    (x % (1u128 << l)) >> (l - 1) & 1 == 1
}

/// Plaintext wrap bit of a share pair: `1{(x0 mod L) + (x1 mod L) >= L}`.
pub fn wrap_ref(x0: u128, x1: u128, l: u8) -> bool {
    let m = 1u128 << l;
    x0 % m + x1 % m >= m
}

/// Plaintext MW coefficient `MSB(x) + Wrap(x0, x1)` in `{0, 1, 2}`.
pub fn mw_ref(x0: u128, x1: u128, l: u8) -> u8 {
    let m = 1u128 << l;
    let s = x0 % m + x1 % m;
    msb_ref(s, l) as u8 + (s >= m) as u8
}

/// Signed value encoded by a share pair: `x0 + x1 - MW * 2^l`.
pub fn int_ref(x0: u128, x1: u128, l: u8) -> i128 {
    let m = 1u128 << l;
    let s = x0 % m + x1 % m;
    s as i128 - mw_ref(x0, x1, l) as i128 * m as i128
}

/// Whether the reduced value `x mod 2^l` encodes a signed integer with
/// `|int| < B`, i.e. lies in `[0, B) ∪ [L - B, L)`.
pub fn in_bound_ref(x: u128, l: u8, b: u128) -> bool {
    let m = 1u128 << l;
    let x = x % m;
    x < b || x >= m - b
}

/// The four feasible regions of the physical sum `x0 + x1` when
/// `|int(x)| < B`, and the MW value on each.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SumRegion {
    /// `[0, B)` — positive value, no wrap: MW = 0.
    A,
    /// `[L - B, L)` — negative value, no wrap: MW = 1.
    B,
    /// `[L, L + B)` — positive value, one wrap: MW = 1.
    C,
    /// `[2L - B, 2L)` — negative value, one wrap: MW = 2.
    D,
    /// The sum is outside every feasible region (the bound is violated).
    Infeasible,
}

/// Classifies the physical sum of a share pair under the bound `|int| < B`.
pub fn region_ref(x0: u128, x1: u128, l: u8, b: u128) -> SumRegion {
    let m = 1u128 << l;
    let s = x0 % m + x1 % m;
    if s < b {
        SumRegion::A
    } else if s >= m - b && s < m {
        SumRegion::B
    } else if s >= m && s < m + b {
        SumRegion::C
    } else if s >= m && s - m >= m - b {
        SumRegion::D
    } else {
        SumRegion::Infeasible
    }
}

impl SumRegion {
    /// MW coefficient on the region (`None` when infeasible).
    pub fn mw(self) -> Option<u8> {
        match self {
            SumRegion::A => Some(0),
            SumRegion::B | SumRegion::C => Some(1),
            SumRegion::D => Some(2),
            SumRegion::Infeasible => None,
        }
    }

    /// MSB of the reduced sum on the region (`None` when infeasible).
    pub fn msb(self) -> Option<bool> {
        match self {
            SumRegion::A | SumRegion::C => Some(false),
            SumRegion::B | SumRegion::D => Some(true),
            SumRegion::Infeasible => None,
        }
    }
}

/// Plaintext comparison `1{x < y}`.
pub fn comp_ref(x: u128, y: u128) -> bool {
    x < y
}

/// Divisor-reduction identity (Lemma 1): when `x - y` (as an exact integer
/// difference of `l`-bit values) lies in `[A, L) ∪ [-L, 0)`, comparison
/// survives flooring both operands by `A`.
///
/// Returns `None` if the precondition fails, otherwise whether the identity
/// `Comp(y, x) = Comp(floor(y/A), floor(x/A))` holds.
pub fn lemma1_holds(x: u128, y: u128, a: u128, l: u8) -> Option<bool> {
    let m = 1i128 << l;
    let d = x as i128 - y as i128;
    if !((d >= a as i128 && d < m) || d < 0) {
        return None;
    }
    Some((y < x) == (y / a < x / a))
}

/// Wrap-reduction identity (Lemma 2): when `x0 + x1` lies in
/// `[0, L) ∪ [L + A, 2L)`, the wrap bit equals
/// `Comp(floor((L - x0)/A), floor(x1/A))`.
///
/// Returns `None` if the precondition fails, otherwise whether the identity
/// holds.
pub fn lemma2_holds(x0: u128, x1: u128, a: u128, l: u8) -> Option<bool> {
    let m = 1u128 << l;
    let s = x0 % m + x1 % m;
    if !(s < m || s >= m + a) {
        return None;
    }
    let wrap = s >= m;
    Some(wrap == ((m - x0 % m) / a < x1 % m / a))
}

/// Floor division of a signed integer by a positive public divisor.
pub fn div_floor_ref(x: i128, d: u128) -> i128 {
    x.div_euclid(d as i128)
}

/// Euclidean remainder (always in `[0, d)`).
pub fn mod_ref(x: i128, d: u128) -> i128 {
    x.rem_euclid(d as i128)
}

/// Faithful truncation reference: `floor(x / 2^k)` on the signed value.
pub fn trunc_ref(x: i128, k: u8) -> i128 {
    x.div_euclid(1i128 << k)
}

/// `a^x` reference.
pub fn exp_ref(base: f64, x: f64) -> f64 {
    base.powf(x)
}

/// `e^{-x}` reference (negative exponential of a non-negative argument).
pub fn rexp_ref(x: f64) -> f64 {
    (-x).exp()
}

/// Sine reference.
pub fn sin_ref(x: f64) -> f64 {
    x.sin()
}

/// `1/x` reference.
pub fn recip_ref(x: f64) -> f64 {
    1.0 / x
}

/// Plaintext softmax of one row.
pub fn softmax_ref(row: &[f64]) -> Vec<f64> {
    let mx = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = row.iter().map(|&v| (v - mx).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.iter().map(|&e| e / sum).collect()
}

/// Decimal grid used to pre-round references before ULP comparison.
pub const DECIMAL_UNIT: f64 = 1e-6;

/// Rounds `a` to the nearest multiple of `unit`, ties to even.
pub fn round_to_multiple(a: f64, unit: f64) -> f64 {
    (a / unit).round_ties_even() * unit
}

/// ULP error of `computed` against `reference` for an output with `out_frac`
/// fractional bits: the reference is first snapped to the decimal grid
/// ([`DECIMAL_UNIT`], ties to even), and the difference is expressed in units
/// of `2^-out_frac`.
pub fn ulp_error(reference: f64, computed: f64, out_frac: u8) -> f64 {
    let snapped = round_to_multiple(reference, DECIMAL_UNIT);
    (snapped - computed).abs() * (out_frac as f64).exp2()
}

/// Running max / average of ULP errors.
#[derive(Debug, Clone, Copy, Default)]
pub struct UlpStats {
    /// Number of samples.
    pub count: u64,
    /// Largest error seen.
    pub max: f64,
    /// Sum of errors (for the average).
    pub sum: f64,
}

impl UlpStats {
    /// Records one error sample.
    pub fn observe(&mut self, e: f64) {
        self.count += 1;
        self.sum += e;
        if e > self.max {
            self.max = e;
        }
    }

    /// Average error (0 when empty).
    pub fn avg(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.sum / self.count as f64
        }
    }

    /// Merges another accumulator into this one.
    pub fn merge(&mut self, other: &UlpStats) {
        self.count += other.count;
        self.sum += other.sum;
        if other.max > self.max {
            self.max = other.max;
        }
    }
}

/// Outcome of an exhaustive or randomized sweep.
#[derive(Debug, Clone, Default)]
pub struct VerifyReport {
    /// Cases checked.
    pub cases: u64,
    /// Cases that failed.
    pub failures: u64,
    /// Human-readable detail of the first failure.
    pub first_failure: Option<String>,
}

impl VerifyReport {
    /// Records a case; `detail` is only rendered on the first failure.
    pub fn check(&mut self, ok: bool, detail: impl FnOnce() -> String) {
        self.cases += 1;
        if !ok {
            self.failures += 1;
            if self.first_failure.is_none() {
                self.first_failure = Some(detail());
            }
        }
    }

    /// True when every case passed (and at least one case ran).
    pub fn pass(&self) -> bool {
        self.cases > 0 && self.failures == 0
    }

    /// Merges another report into this one.
    pub fn merge(&mut self, other: VerifyReport) {
        self.cases += other.cases;
        self.failures += other.failures;
        if self.first_failure.is_none() {
            self.first_failure = other.first_failure;
        }
    }
}
