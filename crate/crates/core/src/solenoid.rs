//! Points, frequencies and characters of the solenoid Σ_N.
//!
//! A solenoid is the inverse limit of circles under the power maps
//! z ↦ z^{n_j}. Everything here works at a finite working depth J taken
//! from the factor list. Beyond J the factor sequence repeats cyclically,
//! which is what lets series tails run past the working depth in the
//! time domain.

use std::cmp::Ordering;
use std::f64::consts::TAU;
use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Tolerance for compatibility checks on floating-point angles.
pub const TOL_POINT: f64 = 1e-9;

/// Levels for which floating-point products are cached.
const CACHED_LEVELS: usize = 4096;

/// The factor sequence N = (n_1, ..., n_J) with its cumulative products.
#[derive(Clone)]
pub struct SolenoidSpec {
    factors: Vec<u64>,
    products: Vec<BigUint>,
    products_f64: Vec<f64>,
    ln_period_product: f64,
}

impl fmt::Debug for SolenoidSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SolenoidSpec").field("factors", &self.factors).finish()
    }
}

impl PartialEq for SolenoidSpec {
    fn eq(&self, other: &Self) -> bool {
        self.factors == other.factors
    }
}

impl Eq for SolenoidSpec {}

impl SolenoidSpec {
    pub fn new(factors: Vec<u64>) -> Result<Self> {
        if factors.is_empty() {
            return Err(LabError::InvalidSpec("at least one factor is required".into()));
        }
        if let Some(bad) = factors.iter().find(|&&n| n < 2) {
            return Err(LabError::InvalidSpec(format!("factor {bad} is smaller than 2")));
        }
        let mut products = Vec::with_capacity(factors.len() + 1);
        products.push(BigUint::one());
        for &n in &factors {
            let next = products.last().unwrap() * BigUint::from(n);
            products.push(next);
        }
        let mut products_f64 = Vec::with_capacity(CACHED_LEVELS + 1);
        products_f64.push(1.0);
        for j in 1..=CACHED_LEVELS {
            let n = factors[(j - 1) % factors.len()] as f64;
            products_f64.push(products_f64[j - 1] * n);
        }
        let ln_period_product = factors.iter().map(|&n| (n as f64).ln()).sum();
        Ok(Self {
            factors,
            products,
            products_f64,
            ln_period_product,
        })
    }

    /// The dyadic solenoid (2, 2, ..., 2) with `depth` factors.
    pub fn dyadic(depth: usize) -> Self {
        Self::new(vec![2; depth.max(1)]).expect("dyadic factors are valid")
    }

    /// Working depth J.
    pub fn depth(&self) -> usize {
        self.factors.len()
    }

    pub fn factors(&self) -> &[u64] {
        &self.factors
    }

    /// n_j for j ≥ 1, extended cyclically beyond the working depth.
    pub fn factor(&self, j: usize) -> u64 {
        assert!(j >= 1, "factors are indexed from 1");
        self.factors[(j - 1) % self.factors.len()]
    }

    /// Exact P_j = n_1⋯n_j.
    pub fn product(&self, j: usize) -> BigUint {
        if j < self.products.len() {
            return self.products[j].clone();
        }
        let mut p = self.products.last().unwrap().clone();
        for i in self.products.len()..=j {
            p *= BigUint::from(self.factor(i));
        }
        p
    }

    /// P_j as a float; infinite once it leaves the cached range.
    pub fn product_f64(&self, j: usize) -> f64 {
        self.products_f64.get(j).copied().unwrap_or(f64::INFINITY)
    }

    /// Natural log of the product of one full cycle of factors.
    pub fn ln_period_product(&self) -> f64 {
        self.ln_period_product
    }

    /// P_hi / P_lo as a machine integer.
    pub fn block(&self, lo: usize, hi: usize) -> Result<i64> {
        debug_assert!(lo <= hi);
        let mut acc: i64 = 1;
        for i in lo + 1..=hi {
            acc = acc
                .checked_mul(self.factor(i) as i64)
                .ok_or(LabError::Overflow)?;
        }
        Ok(acc)
    }
}

#[derive(Serialize, Deserialize)]
struct SpecJson {
    factors: Vec<u64>,
}

impl Serialize for SolenoidSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        SpecJson {
            factors: self.factors.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for SolenoidSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = SpecJson::deserialize(d)?;
        SolenoidSpec::new(raw.factors).map_err(serde::de::Error::custom)
    }
}

/// An element r = m / P_j of N̂ in canonical form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Frequency {
    level: u32,
    numerator: i64,
}

impl Ord for Frequency {
    fn cmp(&self, other: &Self) -> Ordering {
        self.level
            .cmp(&other.level)
            .then(self.numerator.unsigned_abs().cmp(&other.numerator.unsigned_abs()))
            .then(self.numerator.cmp(&other.numerator))
    }
}

impl PartialOrd for Frequency {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Frequency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/P_{}", self.numerator, self.level)
    }
}

impl Frequency {
    pub const ZERO: Frequency = Frequency {
        level: 0,
        numerator: 0,
    };

    /// Canonical frequency m / P_level. Fails if the reduced level exceeds
    /// the working depth.
    pub fn new(spec: &SolenoidSpec, level: usize, numerator: i64) -> Result<Self> {
        let f = Self::canonical(spec, level, numerator);
        if f.level as usize > spec.depth() {
            return Err(LabError::LevelOutOfRange {
                level: f.level as usize,
                max: spec.depth(),
            });
        }
        Ok(f)
    }

    /// Canonical reduction without the working-depth check.
    pub(crate) fn canonical(spec: &SolenoidSpec, level: usize, numerator: i64) -> Self {
        if numerator == 0 {
            return Self::ZERO;
        }
        let mut level = level;
        let mut m = numerator;
        while level > 0 {
            let n = spec.factor(level) as i64;
            if m % n != 0 {
                break;
            }
            m /= n;
            level -= 1;
        }
        Frequency {
            level: level as u32,
            numerator: m,
        }
    }

    /// The generator 1/P_j (and its negative when `sign < 0`).
    pub(crate) fn unit(level: usize, sign: i64) -> Self {
        Frequency {
            level: level as u32,
            numerator: sign,
        }
    }

    pub fn level(&self) -> usize {
        self.level as usize
    }

    pub fn numerator(&self) -> i64 {
        self.numerator
    }

    pub fn is_zero(&self) -> bool {
        self.numerator == 0
    }

    pub fn neg(&self) -> Self {
        Frequency {
            level: self.level,
            numerator: -self.numerator,
        }
    }

    /// Exact rational value m / P_j.
    pub fn value(&self, spec: &SolenoidSpec) -> BigRational {
        BigRational::new(
            BigInt::from(self.numerator),
            BigInt::from(spec.product(self.level())),
        )
    }

    pub fn to_f64(&self, spec: &SolenoidSpec) -> f64 {
        self.numerator as f64 / spec.product_f64(self.level())
    }

    /// Numerator of this frequency written over P_level for a finer level.
    pub fn numerator_at(&self, spec: &SolenoidSpec, level: usize) -> Result<i64> {
        debug_assert!(level >= self.level());
        self.numerator
            .checked_mul(spec.block(self.level(), level)?)
            .ok_or(LabError::Overflow)
    }

    pub fn checked_add(&self, spec: &SolenoidSpec, other: &Frequency) -> Result<Frequency> {
        let level = self.level().max(other.level());
        let m = self
            .numerator_at(spec, level)?
            .checked_add(other.numerator_at(spec, level)?)
            .ok_or(LabError::Overflow)?;
        Ok(Self::canonical(spec, level, m))
    }

    /// Parses an exact rational into N̂; fails unless its denominator
    /// divides some P_j with j ≤ J.
    pub fn from_rational(spec: &SolenoidSpec, r: &BigRational) -> Result<Self> {
        if r.is_zero() {
            return Ok(Self::ZERO);
        }
        for level in 0..=spec.depth() {
            let p = BigInt::from(spec.product(level));
            let (q, rem) = (r.numer() * &p).div_rem(r.denom());
            if rem.is_zero() {
                let m = q.to_i64().ok_or(LabError::Overflow)?;
                return Ok(Self::canonical(spec, level, m));
            }
        }
        Err(LabError::InvalidArgument(format!(
            "{r} is not in the frequency group at depth {}",
            spec.depth()
        )))
    }

    /// Fractional part of r·t, in [0, 1).
    pub fn phase_at_time(&self, spec: &SolenoidSpec, t: f64) -> f64 {
        phase(self.numerator, spec.product_f64(self.level()), t)
    }
}

/// Exact value of a frequency.
pub fn frequency_value(spec: &SolenoidSpec, r: &Frequency) -> BigRational {
    r.value(spec)
}

/// frac(m·t/period). The period reduction happens first so large times
/// do not lose the phase.
pub(crate) fn phase(m: i64, period: f64, t: f64) -> f64 {
    if m == 0 || !period.is_finite() {
        return 0.0;
    }
    wrap01(m as f64 * (t.rem_euclid(period) / period))
}

/// m·t/period reduced to [−1/2, 1/2]. Keeps full relative precision
/// when the product is tiny, which the wrapped phase does not for t < 0.
pub(crate) fn phase_centered(m: i64, period: f64, t: f64) -> f64 {
    if m == 0 || !period.is_finite() {
        return 0.0;
    }
    let a = m as f64 * ((t % period) / period);
    a - a.round()
}

/// exp(2πi·phase) − 1 without cancellation.
pub(crate) fn cis_minus_one(phase: f64) -> Complex64 {
    let half = std::f64::consts::PI * phase;
    let (s, c) = half.sin_cos();
    // 2i·sin(θ/2)·e^{iθ/2}
    Complex64::new(-2.0 * s * s, 2.0 * s * c)
}

pub(crate) fn wrap01(a: f64) -> f64 {
    let w = a.rem_euclid(1.0);
    if w >= 1.0 {
        0.0
    } else {
        w
    }
}

/// Fractional part of m·a with the product rounding error restored.
fn frac_product(m: f64, a: f64) -> f64 {
    let p = m * a;
    let e = m.mul_add(a, -p);
    wrap01((p - p.floor()) + e)
}

/// exp(2πi·phase).
pub(crate) fn cis(phase: f64) -> Complex64 {
    let (s, c) = (TAU * phase).sin_cos();
    Complex64::new(c, s)
}

/// A depth-D point of Σ_N stored as angles t_1..t_D with z_j = exp(2πi t_j).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolenoidPoint {
    angles: Vec<f64>,
}

impl SolenoidPoint {
    pub fn new(angles: Vec<f64>) -> Result<Self> {
        if angles.is_empty() {
            return Err(LabError::DepthOutOfRange { depth: 0, max: usize::MAX });
        }
        if let Some(a) = angles.iter().find(|a| !(0.0..1.0).contains(*a)) {
            return Err(LabError::InvalidArgument(format!("angle {a} is outside [0, 1)")));
        }
        Ok(Self { angles })
    }

    /// The identity e at the given depth.
    pub fn identity(depth: usize) -> Self {
        Self {
            angles: vec![0.0; depth.max(1)],
        }
    }

    /// Builds a compatible point from its deepest angle by pushing it
    /// down through the bonding maps.
    pub fn from_top_angle(spec: &SolenoidSpec, top: f64, depth: usize) -> Result<Self> {
        check_depth(spec, depth)?;
        let mut angles = vec![0.0; depth];
        angles[depth - 1] = wrap01(top);
        for j in (1..depth).rev() {
            angles[j - 1] = wrap01(spec.factor(j) as f64 * angles[j]);
        }
        Ok(Self { angles })
    }

    pub fn random<R: Rng + ?Sized>(spec: &SolenoidSpec, depth: usize, rng: &mut R) -> Result<Self> {
        Self::from_top_angle(spec, rng.random::<f64>(), depth)
    }

    pub fn depth(&self) -> usize {
        self.angles.len()
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    /// t_j ≡ n_j·t_{j+1} (mod 1) for every pair of neighbouring angles.
    pub fn is_compatible(&self, spec: &SolenoidSpec, tol: f64) -> bool {
        self.angles.windows(2).enumerate().all(|(i, w)| {
            let d = wrap01(w[0] - spec.factor(i + 1) as f64 * w[1]);
            d.min(1.0 - d) <= tol
        })
    }

    /// The point truncated to a smaller depth.
    pub fn truncate(&self, depth: usize) -> Result<Self> {
        if depth == 0 || depth > self.depth() {
            return Err(LabError::DepthOutOfRange {
                depth,
                max: self.depth(),
            });
        }
        Ok(Self {
            angles: self.angles[..depth].to_vec(),
        })
    }
}

fn check_depth(spec: &SolenoidSpec, depth: usize) -> Result<()> {
    if depth == 0 || depth > spec.depth() + 1 {
        return Err(LabError::DepthOutOfRange {
            depth,
            max: spec.depth() + 1,
        });
    }
    Ok(())
}

/// π_N(t) at the given depth: angles (t, t/n_1, ..., t/P_{D-1}) mod 1.
pub fn pi_n(spec: &SolenoidSpec, t: f64, depth: usize) -> Result<SolenoidPoint> {
    check_depth(spec, depth)?;
    let angles = (0..depth).map(|j| phase(1, spec.product_f64(j), t)).collect();
    Ok(SolenoidPoint { angles })
}

/// Group operation: angle-wise addition mod 1.
pub fn add(x: &SolenoidPoint, y: &SolenoidPoint) -> Result<SolenoidPoint> {
    if x.depth() != y.depth() {
        return Err(LabError::DepthMismatch(x.depth(), y.depth()));
    }
    let angles = x
        .angles
        .iter()
        .zip(&y.angles)
        .map(|(a, b)| wrap01(a + b))
        .collect();
    Ok(SolenoidPoint { angles })
}

/// x + π_N(s) without building the intermediate point.
pub fn shift_along_arc(spec: &SolenoidSpec, x: &SolenoidPoint, s: f64) -> SolenoidPoint {
    let angles = x
        .angles
        .iter()
        .enumerate()
        .map(|(j, a)| wrap01(a + phase(1, spec.product_f64(j), s)))
        .collect();
    SolenoidPoint { angles }
}

/// Truncated metric value with the bound on the ignored coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Distance {
    pub value: f64,
    pub truncation_bound: f64,
}

/// Σ_{j≤D} 2^{-j}|z_j − w_j|, plus the bound 2^{1−D} on the rest.
pub fn metric(x: &SolenoidPoint, y: &SolenoidPoint) -> Result<Distance> {
    if x.depth() != y.depth() {
        return Err(LabError::DepthMismatch(x.depth(), y.depth()));
    }
    let mut value = 0.0;
    let mut weight = 1.0;
    for (a, b) in x.angles.iter().zip(&y.angles) {
        weight *= 0.5;
        // |e^{2πia} − e^{2πib}| = 2|sin(π(a − b))|
        value += weight * 2.0 * (std::f64::consts::PI * (a - b)).sin().abs();
    }
    Ok(Distance {
        value,
        truncation_bound: 2.0 * weight,
    })
}

/// χ_r(x) = exp(2πi·m·t_{j+1}) for r = m / P_j.
pub fn character(r: &Frequency, x: &SolenoidPoint) -> Result<Complex64> {
    let need = r.level() + 1;
    if x.depth() < need {
        return Err(LabError::InsufficientDepth {
            have: x.depth(),
            need,
        });
    }
    Ok(cis(frac_product(r.numerator as f64, x.angles[r.level()])))
}

/// A point with exact rational angles.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactPoint {
    angles: Vec<BigRational>,
}

fn frac_exact(r: &BigRational) -> BigRational {
    r - r.floor()
}

impl ExactPoint {
    pub fn new(angles: Vec<BigRational>) -> Result<Self> {
        if angles.is_empty() {
            return Err(LabError::DepthOutOfRange { depth: 0, max: usize::MAX });
        }
        let one = BigRational::one();
        if let Some(a) = angles.iter().find(|a| a.is_negative() || **a >= one) {
            return Err(LabError::InvalidArgument(format!("angle {a} is outside [0, 1)")));
        }
        Ok(Self { angles })
    }

    pub fn angles(&self) -> &[BigRational] {
        &self.angles
    }

    pub fn depth(&self) -> usize {
        self.angles.len()
    }

    pub fn is_compatible(&self, spec: &SolenoidSpec) -> bool {
        self.angles.windows(2).enumerate().all(|(i, w)| {
            let n = BigRational::from_integer(BigInt::from(spec.factor(i + 1)));
            frac_exact(&(&w[0] - n * &w[1])).is_zero()
        })
    }

    pub fn add(&self, other: &ExactPoint) -> Result<ExactPoint> {
        if self.depth() != other.depth() {
            return Err(LabError::DepthMismatch(self.depth(), other.depth()));
        }
        let angles = self
            .angles
            .iter()
            .zip(&other.angles)
            .map(|(a, b)| frac_exact(&(a + b)))
            .collect();
        Ok(ExactPoint { angles })
    }

    pub fn to_float(&self) -> SolenoidPoint {
        let angles = self
            .angles
            .iter()
            .map(|a| wrap01(a.to_f64().unwrap_or(0.0)))
            .collect();
        SolenoidPoint { angles }
    }
}

/// π_N(t) in exact arithmetic.
pub fn pi_n_exact(spec: &SolenoidSpec, t: &BigRational, depth: usize) -> Result<ExactPoint> {
    check_depth(spec, depth)?;
    let angles = (0..depth)
        .map(|j| {
            let p = BigRational::from_integer(BigInt::from(spec.product(j)));
            frac_exact(&(t / p))
        })
        .collect();
    Ok(ExactPoint { angles })
}

/// Parses "p/q" or an integer string into an exact rational.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let parse_int = |t: &str| {
        t.trim()
            .parse::<BigInt>()
            .map_err(|e| LabError::Parse(format!("bad rational {s:?}: {e}")))
    };
    match s.split_once('/') {
        Some((p, q)) => {
            let q = parse_int(q)?;
            if q.is_zero() {
                return Err(LabError::Parse(format!("zero denominator in {s:?}")));
            }
            Ok(BigRational::new(parse_int(p)?, q))
        }
        None => Ok(BigRational::from_integer(parse_int(s)?)),
    }
}

pub fn format_rational(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q(s: &str) -> BigRational {
        parse_rational(s).unwrap()
    }

    #[test]
    fn spec_rejects_small_factors() {
        assert!(SolenoidSpec::new(vec![]).is_err());
        assert!(SolenoidSpec::new(vec![2, 1]).is_err());
        let spec = SolenoidSpec::new(vec![2, 3, 5]).unwrap();
        assert_eq!(spec.product(3), BigUint::from(30u32));
        for j in 1..=10 {
            assert!(spec.product(j) > spec.product(j - 1));
            assert!(spec.product(j) >= BigUint::from(2u32).pow(j as u32));
        }
        // cyclic extension
        assert_eq!(spec.factor(4), 2);
        assert_eq!(spec.product(4), BigUint::from(60u32));
    }

    #[test]
    fn pi_n_identity_and_examples() {
        let spec = SolenoidSpec::new(vec![2, 2]).unwrap();
        assert_eq!(pi_n(&spec, 0.0, 3).unwrap(), SolenoidPoint::identity(3));
        assert_eq!(pi_n(&spec, 1.0, 3).unwrap().angles(), &[0.0, 0.5, 0.25]);
        assert!(pi_n(&spec, 1.0, 4).is_err());
        assert!(pi_n(&spec, 1.0, 0).is_err());

        let spec = SolenoidSpec::new(vec![2, 3]).unwrap();
        let x = pi_n_exact(&spec, &q("5"), 3).unwrap();
        assert_eq!(x.angles(), &[q("0"), q("1/2"), q("5/6")]);
        assert!(x.is_compatible(&spec));
    }

    #[test]
    fn add_identity_and_inverse() {
        let spec = SolenoidSpec::new(vec![2]).unwrap();
        let x = SolenoidPoint::new(vec![0.5, 0.25]).unwrap();
        assert_eq!(add(&x, &SolenoidPoint::identity(2)).unwrap(), x);
        let y = SolenoidPoint::new(vec![0.5, 0.75]).unwrap();
        assert_eq!(add(&x, &y).unwrap(), SolenoidPoint::identity(2));
        assert!(x.is_compatible(&spec, TOL_POINT));
        assert!(matches!(
            add(&x, &SolenoidPoint::identity(3)),
            Err(LabError::DepthMismatch(2, 3))
        ));
    }

    #[test]
    fn metric_examples() {
        let x = SolenoidPoint::new(vec![0.0]).unwrap();
        let y = SolenoidPoint::new(vec![0.5]).unwrap();
        let d = metric(&x, &y).unwrap();
        assert!((d.value - 1.0).abs() < 1e-15);
        assert_eq!(d.truncation_bound, 1.0);
        assert_eq!(metric(&x, &x).unwrap().value, 0.0);
    }

    #[test]
    fn character_examples() {
        let spec = SolenoidSpec::new(vec![2, 2]).unwrap();
        let x = pi_n(&spec, 1.0, 3).unwrap();
        let half = Frequency::new(&spec, 1, 1).unwrap();
        let chi = character(&half, &x).unwrap();
        assert!((chi - Complex64::new(-1.0, 0.0)).norm() < 1e-15);
        assert_eq!(character(&Frequency::ZERO, &x).unwrap(), Complex64::new(1.0, 0.0));
        let deep = Frequency::new(&spec, 2, 1).unwrap();
        assert!(matches!(
            character(&deep, &x.truncate(2).unwrap()),
            Err(LabError::InsufficientDepth { have: 2, need: 3 })
        ));
    }

    #[test]
    fn frequency_value_examples() {
        let spec = SolenoidSpec::new(vec![2, 3]).unwrap();
        let r = Frequency::new(&spec, 2, 3).unwrap();
        assert_eq!((r.level(), r.numerator()), (1, 1));
        assert_eq!(frequency_value(&spec, &r), q("1/2"));
        assert_eq!(frequency_value(&spec, &Frequency::new(&spec, 0, 5).unwrap()), q("5"));
        assert_eq!(Frequency::new(&spec, 2, 0).unwrap(), Frequency::ZERO);
        assert!(Frequency::new(&spec, 3, 1).is_err());
        assert_eq!(Frequency::from_rational(&spec, &q("5/6")).unwrap(), Frequency::new(&spec, 2, 5).unwrap());
        assert!(Frequency::from_rational(&spec, &q("1/5")).is_err());
    }

    #[test]
    fn exact_addition_stays_compatible() {
        let spec = SolenoidSpec::new(vec![2, 3, 5]).unwrap();
        let x = pi_n_exact(&spec, &q("7/3"), 4).unwrap();
        let y = pi_n_exact(&spec, &q("-11/2"), 4).unwrap();
        let z = x.add(&y).unwrap();
        assert!(z.is_compatible(&spec));
        assert_eq!(z, pi_n_exact(&spec, &(q("7/3") + q("-11/2")), 4).unwrap());
    }

    fn spec_strategy() -> impl Strategy<Value = SolenoidSpec> {
        prop::collection::vec(2u64..6, 1..7).prop_map(|f| SolenoidSpec::new(f).unwrap())
    }

    proptest! {
        #[test]
        fn homomorphism(spec in spec_strategy(), t in -1e3f64..1e3, s in -1e3f64..1e3) {
            let d = spec.depth() + 1;
            let lhs = pi_n(&spec, t + s, d).unwrap();
            let rhs = add(&pi_n(&spec, t, d).unwrap(), &pi_n(&spec, s, d).unwrap()).unwrap();
            prop_assert!(metric(&lhs, &rhs).unwrap().value < 1e-12);
            prop_assert!(lhs.is_compatible(&spec, TOL_POINT));
        }

        #[test]
        fn character_matches_exponential(spec in spec_strategy(), m in -50i64..50, lvl in 0usize..6, t in -100f64..100.0) {
            let level = lvl.min(spec.depth() - 1);
            let r = Frequency::new(&spec, level, m).unwrap();
            let x = pi_n(&spec, t, spec.depth()).unwrap();
            // exact phase r·t mod 1 from the binary value of t
            let exact = r.value(&spec) * BigRational::from_float(t).unwrap();
            let expected = cis((&exact - exact.floor()).to_f64().unwrap());
            prop_assert!((character(&r, &x).unwrap() - expected).norm() < 1e-12);
        }

        #[test]
        fn canonical_form_unique(spec in spec_strategy(), m in -1000i64..1000, level in 0usize..7) {
            let level = level.min(spec.depth());
            let r = Frequency::new(&spec, level, m).unwrap();
            let again = Frequency::new(&spec, r.level(), r.numerator()).unwrap();
            prop_assert_eq!(r, again);
            let via_value = Frequency::from_rational(&spec, &r.value(&spec)).unwrap();
            prop_assert_eq!(r, via_value);
        }

        #[test]
        fn metric_symmetric_and_triangle(spec in spec_strategy(), a in 0f64..1.0, b in 0f64..1.0, c in 0f64..1.0) {
            let d = spec.depth() + 1;
            let x = SolenoidPoint::from_top_angle(&spec, a, d).unwrap();
            let y = SolenoidPoint::from_top_angle(&spec, b, d).unwrap();
            let z = SolenoidPoint::from_top_angle(&spec, c, d).unwrap();
            let xy = metric(&x, &y).unwrap().value;
            prop_assert!((xy - metric(&y, &x).unwrap().value).abs() < 1e-15);
            prop_assert!(xy <= metric(&x, &z).unwrap().value + metric(&z, &y).unwrap().value + 1e-15);
        }
    }
}
