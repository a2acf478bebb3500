//! Sparse Fourier–Bohr series with frequencies in N̂.
//!
//! A [`BohrSeries`] is a finite map from canonical frequencies to complex
//! coefficients plus at most one structured tail (see [`TailSpec`]).
//! Evaluation sums the finite part in level-major order, then the tail
//! level by level until its closed-form remainder drops below the
//! requested tolerance.

mod analysis;
mod json;
mod tail;

pub use analysis::{
    certify_positive, dk_distance, field_jet, holder_estimate, positivity_certificate, reciprocal,
    reciprocal_with_grid, sampled_sup, DkOrder, Positivity, Reciprocal,
};
pub use json::{CoefficientJson, SeriesJson, TailJson};
pub use tail::{Part, TailKind, TailSpec};

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{LabError, Result};
use crate::solenoid::{character, cis, phase, Frequency, SolenoidPoint, SolenoidSpec};

/// Tolerance used when checking conjugate symmetry of supplied data.
const SYMMETRY_TOL: f64 = 1e-12;

/// A value together with a bound on the truncation error it carries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub value: Complex64,
    pub error_bound: f64,
}

#[derive(Debug, Clone)]
pub struct BohrSeries {
    spec: Arc<SolenoidSpec>,
    coefficients: BTreeMap<Frequency, Complex64>,
    tail: Option<TailSpec>,
    real: bool,
}

impl PartialEq for BohrSeries {
    fn eq(&self, other: &Self) -> bool {
        self.spec == other.spec
            && self.coefficients == other.coefficients
            && self.tail == other.tail
            && self.real == other.real
    }
}

fn zero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

impl BohrSeries {
    pub fn zero(spec: Arc<SolenoidSpec>) -> Self {
        BohrSeries {
            spec,
            coefficients: BTreeMap::new(),
            tail: None,
            real: true,
        }
    }

    pub fn constant(spec: Arc<SolenoidSpec>, c: Complex64) -> Self {
        let mut s = Self::zero(spec);
        s.real = c.im == 0.0;
        if c != zero() {
            s.coefficients.insert(Frequency::ZERO, c);
        }
        s
    }

    pub fn real_constant(spec: Arc<SolenoidSpec>, c: f64) -> Self {
        Self::constant(spec, Complex64::new(c, 0.0))
    }

    /// Builds a series from (frequency, coefficient) pairs, merging repeats.
    /// The result is flagged real only if the data is conjugate symmetric.
    pub fn from_terms<I>(spec: Arc<SolenoidSpec>, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Frequency, Complex64)>,
    {
        let mut coefficients = BTreeMap::new();
        for (r, c) in terms {
            if r.level() > spec.depth() {
                return Err(LabError::LevelOutOfRange {
                    level: r.level(),
                    max: spec.depth(),
                });
            }
            *coefficients.entry(r).or_insert_with(zero) += c;
        }
        coefficients.retain(|_, c| *c != zero());
        let mut s = BohrSeries {
            spec,
            coefficients,
            tail: None,
            real: false,
        };
        s.real = s.is_conjugate_symmetric(SYMMETRY_TOL);
        Ok(s)
    }

    /// a·cos(2πrt) as a real series.
    pub fn cosine(spec: Arc<SolenoidSpec>, r: Frequency, amplitude: f64) -> Result<Self> {
        let half = Complex64::new(amplitude / 2.0, 0.0);
        Self::from_terms(spec, [(r, half), (r.neg(), half)])
    }

    /// a·sin(2πrt) as a real series.
    pub fn sine(spec: Arc<SolenoidSpec>, r: Frequency, amplitude: f64) -> Result<Self> {
        let c = Complex64::new(0.0, -amplitude / 2.0);
        Self::from_terms(spec, [(r, c), (r.neg(), c.conj())])
    }

    pub fn with_tail(mut self, tail: TailSpec) -> Result<Self> {
        tail.validate()?;
        let real = self.real && tail.is_real();
        self.tail = Some(tail);
        self.real = real;
        Ok(self)
    }

    /// Claims the series is real-valued; verifies conjugate symmetry and
    /// symmetrizes the coefficients exactly.
    pub fn into_real(mut self) -> Result<Self> {
        if !self.is_conjugate_symmetric(SYMMETRY_TOL) {
            return Err(LabError::NotReal);
        }
        if let Some(t) = &self.tail {
            if !t.is_real() {
                return Err(LabError::NotReal);
            }
        }
        let keys: Vec<Frequency> = self.coefficients.keys().copied().collect();
        for r in keys {
            let c = self.coefficient(&r);
            let d = self.coefficient(&r.neg()).conj();
            let avg = (c + d) * 0.5;
            if r.is_zero() {
                self.coefficients.insert(r, Complex64::new(avg.re, 0.0));
            } else {
                self.coefficients.insert(r, avg);
                self.coefficients.insert(r.neg(), avg.conj());
            }
        }
        self.coefficients.retain(|_, c| *c != zero());
        self.real = true;
        Ok(self)
    }

    fn is_conjugate_symmetric(&self, tol: f64) -> bool {
        let scale = self.coefficients.values().map(|c| c.norm()).fold(1.0, f64::max);
        self.coefficients.iter().all(|(r, c)| {
            let mirror = self.coefficient(&r.neg());
            (c - mirror.conj()).norm() <= tol * scale
        })
    }

    pub fn spec(&self) -> &SolenoidSpec {
        &self.spec
    }

    pub fn spec_arc(&self) -> &Arc<SolenoidSpec> {
        &self.spec
    }

    pub fn coefficients(&self) -> &BTreeMap<Frequency, Complex64> {
        &self.coefficients
    }

    pub fn coefficient(&self, r: &Frequency) -> Complex64 {
        self.coefficients.get(r).copied().unwrap_or_else(zero)
    }

    pub fn tail(&self) -> Option<&TailSpec> {
        self.tail.as_ref()
    }

    pub fn is_real(&self) -> bool {
        self.real
    }

    /// No tail at all.
    pub fn is_finite(&self) -> bool {
        self.tail.is_none()
    }

    /// Tail present but not absolutely summable (e.g. the formal integral
    /// of ρ_m); only truncations of such a series can be evaluated.
    pub fn has_divergent_tail(&self) -> bool {
        self.tail.is_some_and(|t| !t.is_summable(&self.spec))
    }

    /// Highest level among the finite coefficients.
    pub fn max_level(&self) -> usize {
        self.coefficients.keys().map(|r| r.level()).max().unwrap_or(0)
    }

    /// Largest |numerator| of the finite part written over P_level.
    pub fn harmonics_at(&self, level: usize) -> Result<i64> {
        let mut h = 0i64;
        for r in self.coefficients.keys() {
            if r.level() <= level {
                h = h.max(r.numerator_at(&self.spec, level)?.abs());
            }
        }
        Ok(h)
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty() && self.tail.is_none()
    }

    /// M{f}: the coefficient at frequency 0. Tails never carry it.
    pub fn mean_value(&self) -> Complex64 {
        self.coefficient(&Frequency::ZERO)
    }

    /// The finite part alone.
    pub fn without_tail(&self) -> BohrSeries {
        let mut out = self.clone();
        out.tail = None;
        out.real = self.real || out.is_conjugate_symmetric(SYMMETRY_TOL);
        out
    }

    /// The series with its zero-frequency coefficient removed.
    pub fn without_mean(&self) -> BohrSeries {
        let mut out = self.clone();
        out.coefficients.remove(&Frequency::ZERO);
        out
    }

    /// Σ|f_r| over the finite part plus the tail's l1 norm.
    pub fn l1_norm(&self) -> f64 {
        let finite: f64 = self.coefficients.values().map(|c| c.norm()).sum();
        finite + self.tail.map_or(0.0, |t| t.l1_norm(&self.spec))
    }

    /// Σ|f_r| over every term above `level`: a sup-norm bound for
    /// f − partial_sum(f, level).
    pub fn remainder(&self, level: usize) -> f64 {
        let finite: f64 = self
            .coefficients
            .iter()
            .filter(|(r, _)| r.level() > level)
            .map(|(_, c)| c.norm())
            .sum();
        finite + self.tail.map_or(0.0, |t| t.remainder(&self.spec, level))
    }

    fn check_same_spec(&self, other: &BohrSeries) -> Result<()> {
        if self.spec != other.spec {
            return Err(LabError::InvalidArgument("series live on different solenoids".into()));
        }
        Ok(())
    }

    pub fn add(&self, other: &BohrSeries) -> Result<BohrSeries> {
        self.check_same_spec(other)?;
        let mut coefficients = self.coefficients.clone();
        for (r, c) in &other.coefficients {
            *coefficients.entry(*r).or_insert_with(zero) += c;
        }
        coefficients.retain(|_, c| *c != zero());
        let tail = match (self.tail, other.tail) {
            (None, t) | (t, None) => t,
            (Some(a), Some(b)) if a.same_shape(&b) => {
                let sum = a.scale + b.scale;
                (sum != zero()).then_some(TailSpec { scale: sum, ..a })
            }
            _ => {
                return Err(LabError::UnsupportedTail(
                    "cannot add two tails of different shape".into(),
                ))
            }
        };
        let mut out = BohrSeries {
            spec: self.spec.clone(),
            coefficients,
            real: self.real && other.real,
            tail,
        };
        if !out.real {
            out.real = out.tail.is_none_or(|t| t.is_real()) && out.is_conjugate_symmetric(SYMMETRY_TOL);
        }
        Ok(out)
    }

    pub fn sub(&self, other: &BohrSeries) -> Result<BohrSeries> {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, c: Complex64) -> BohrSeries {
        let mut coefficients: BTreeMap<_, _> =
            self.coefficients.iter().map(|(r, v)| (*r, v * c)).collect();
        coefficients.retain(|_, v| *v != zero());
        let tail = self.tail.map(|t| t.scaled(c)).filter(|t| t.scale != zero());
        BohrSeries {
            spec: self.spec.clone(),
            coefficients,
            tail,
            real: self.real && c.im == 0.0,
        }
    }

    pub fn add_constant(&self, c: Complex64) -> BohrSeries {
        let mut out = self.clone();
        *out.coefficients.entry(Frequency::ZERO).or_insert_with(zero) += c;
        out.coefficients.retain(|_, v| *v != zero());
        out.real = self.real && c.im == 0.0;
        out
    }

    /// Product of two series. Each product term sits at the exact sum of
    /// the two frequencies. Tails are rejected: the product of a tail with
    /// anything leaves the level-sparse family.
    pub fn mul(&self, other: &BohrSeries) -> Result<BohrSeries> {
        self.check_same_spec(other)?;
        if self.tail.is_some() || other.tail.is_some() {
            return Err(LabError::UnsupportedTail(
                "products of tailed series are not supported".into(),
            ));
        }
        let mut coefficients = BTreeMap::new();
        for (r, a) in &self.coefficients {
            for (s, b) in &other.coefficients {
                let sum = r.checked_add(&self.spec, s)?;
                *coefficients.entry(sum).or_insert_with(zero) += a * b;
            }
        }
        coefficients.retain(|_, c: &mut Complex64| *c != zero());
        Ok(BohrSeries {
            spec: self.spec.clone(),
            coefficients,
            tail: None,
            real: self.real && other.real,
        })
    }

    /// d/dt of f_e: each coefficient picks up 2πi·r. A tail keeps its
    /// family with power raised by one.
    pub fn derivative(&self) -> BohrSeries {
        let mut coefficients: BTreeMap<_, _> = self
            .coefficients
            .iter()
            .filter(|(r, _)| !r.is_zero())
            .map(|(r, c)| (*r, c * Complex64::new(0.0, TAU * r.to_f64(&self.spec))))
            .collect();
        coefficients.retain(|_, c| *c != zero());
        BohrSeries {
            spec: self.spec.clone(),
            coefficients,
            tail: self.tail.map(|t| t.derivative()),
            real: self.real,
        }
    }

    /// Formal integral with zero constant term: f_r ↦ f_r/(2πir). The
    /// integral of a ρ_m tail has constant-magnitude coefficients and comes
    /// back flagged divergent.
    pub fn formal_integral(&self) -> Result<BohrSeries> {
        let mean = self.mean_value();
        if mean != zero() {
            return Err(LabError::NonzeroMean {
                re: mean.re,
                im: mean.im,
            });
        }
        let coefficients = self
            .coefficients
            .iter()
            .map(|(r, c)| (*r, c / Complex64::new(0.0, TAU * r.to_f64(&self.spec))))
            .collect();
        Ok(BohrSeries {
            spec: self.spec.clone(),
            coefficients,
            tail: self.tail.map(|t| t.formal_integral()),
            real: self.real,
        })
    }

    /// Level-j partial sum: every coefficient with level ≤ j, tail terms
    /// included. Periodic with period P_j.
    pub fn partial_sum(&self, level: usize) -> Result<BohrSeries> {
        if level > self.spec.depth() {
            return Err(LabError::LevelOutOfRange {
                level,
                max: self.spec.depth(),
            });
        }
        let mut coefficients: BTreeMap<_, _> = self
            .coefficients
            .iter()
            .filter(|(r, _)| r.level() <= level)
            .map(|(r, c)| (*r, *c))
            .collect();
        if let Some(t) = &self.tail {
            for j in t.start_level..=level {
                for (sign, c) in t.level_terms(&self.spec, j) {
                    *coefficients.entry(Frequency::unit(j, sign)).or_insert_with(zero) += c;
                }
            }
        }
        coefficients.retain(|_, c| *c != zero());
        Ok(BohrSeries {
            spec: self.spec.clone(),
            coefficients,
            tail: None,
            real: self.real,
        })
    }

    /// Tail level needed to push the truncation error below `tol`.
    fn tail_cutoff(&self, tol: f64) -> Result<Option<(TailSpec, usize)>> {
        match &self.tail {
            None => Ok(None),
            Some(t) => {
                let level = t
                    .truncation_level(&self.spec, tol)
                    .ok_or(LabError::DivergentTail)?;
                Ok(Some((*t, level)))
            }
        }
    }

    /// Σ f_r exp(2πirt) with the tail cut where its remainder is below `tol`.
    pub fn evaluate_at_time(&self, t: f64, tol: f64) -> Result<Evaluation> {
        if !(tol > 0.0) {
            return Err(LabError::InvalidArgument("tolerance must be positive".into()));
        }
        let cutoff = self.tail_cutoff(tol)?;
        let mut value = self.evaluate_finite(t);
        let mut error_bound = 0.0;
        if let Some((tail, level)) = cutoff {
            for j in tail.start_level..=level {
                let period = self.spec.product_f64(j);
                for (sign, c) in tail.level_terms(&self.spec, j) {
                    value += c * cis(phase(sign, period, t));
                }
            }
            error_bound = tail.remainder(&self.spec, level);
        }
        Ok(Evaluation { value, error_bound })
    }

    /// The finite part only, at time t.
    pub fn evaluate_finite(&self, t: f64) -> Complex64 {
        self.coefficients
            .iter()
            .map(|(r, c)| c * cis(r.phase_at_time(&self.spec, t)))
            .sum()
    }

    /// Σ f_r χ_r(x), tail cut as in [`Self::evaluate_at_time`].
    pub fn evaluate_at_point(&self, x: &SolenoidPoint, tol: f64) -> Result<Evaluation> {
        if !(tol > 0.0) {
            return Err(LabError::InvalidArgument("tolerance must be positive".into()));
        }
        let cutoff = self.tail_cutoff(tol)?;
        let mut value = zero();
        for (r, c) in &self.coefficients {
            value += c * character(r, x)?;
        }
        let mut error_bound = 0.0;
        if let Some((tail, level)) = cutoff {
            if x.depth() < level + 1 {
                return Err(LabError::InsufficientDepth {
                    have: x.depth(),
                    need: level + 1,
                });
            }
            for j in tail.start_level..=level {
                for (sign, c) in tail.level_terms(&self.spec, j) {
                    value += c * character(&Frequency::unit(j, sign), x)?;
                }
            }
            error_bound = tail.remainder(&self.spec, level);
        }
        Ok(Evaluation { value, error_bound })
    }

    /// The series restricted to the orbit s ↦ x + π_N(s): a finite list of
    /// terms (c_r χ_r(x), r) cheap to evaluate along the arc.
    pub fn along_orbit(&self, x: &SolenoidPoint, tol: f64) -> Result<OrbitSeries> {
        let cutoff = self.tail_cutoff(tol)?;
        let mut terms = Vec::with_capacity(self.coefficients.len());
        for (r, c) in &self.coefficients {
            terms.push(OrbitTerm {
                numerator: r.numerator(),
                period: self.spec.product_f64(r.level()),
                coefficient: c * character(r, x)?,
            });
        }
        let mut error_bound = 0.0;
        if let Some((tail, level)) = cutoff {
            if x.depth() < level + 1 {
                return Err(LabError::InsufficientDepth {
                    have: x.depth(),
                    need: level + 1,
                });
            }
            for j in tail.start_level..=level {
                for (sign, c) in tail.level_terms(&self.spec, j) {
                    terms.push(OrbitTerm {
                        numerator: sign,
                        period: self.spec.product_f64(j),
                        coefficient: c * character(&Frequency::unit(j, sign), x)?,
                    });
                }
            }
            error_bound = tail.remainder(&self.spec, level);
        }
        Ok(OrbitSeries { terms, error_bound })
    }
}

#[derive(Debug, Clone, Copy)]
struct OrbitTerm {
    numerator: i64,
    period: f64,
    coefficient: Complex64,
}

/// A series pulled back to one arc component: s ↦ f(x + π_N(s)).
#[derive(Debug, Clone)]
pub struct OrbitSeries {
    terms: Vec<OrbitTerm>,
    error_bound: f64,
}

impl OrbitSeries {
    pub fn eval(&self, s: f64) -> Complex64 {
        self.terms
            .iter()
            .map(|t| t.coefficient * cis(phase(t.numerator, t.period, s)))
            .sum()
    }

    pub fn eval_re(&self, s: f64) -> f64 {
        self.eval(s).re
    }

    pub fn error_bound(&self) -> f64 {
        self.error_bound
    }
}
