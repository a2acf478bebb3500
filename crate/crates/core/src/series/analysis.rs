//! Numerical operations on series: reciprocals, positivity certificates,
//! Hölder estimates, flow-direction jets and the C^k distances.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::BohrSeries;
use crate::error::{LabError, Result};
use crate::solenoid::Frequency;

/// Largest grid the reciprocal projection will try.
const MAX_GRID: usize = 1 << 20;

/// Number of d_r terms kept when evaluating d_∞; the rest weigh < 2^-48.
const D_INFINITY_TERMS: usize = 48;

#[derive(Debug, Clone)]
pub struct Reciprocal {
    pub series: BohrSeries,
    /// max |λ_e·v_e − 1| on a check grid offset from the projection grid.
    pub residual: f64,
    pub grid: usize,
    pub level: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Positivity {
    pub min_sample: f64,
    pub lipschitz: f64,
    pub step: f64,
    /// sup-norm bound of everything above the sampled level.
    pub remainder: f64,
    pub min_bound: f64,
    pub certified: bool,
}

fn grid_size(harmonics: i64, factor: usize, floor: usize) -> usize {
    (harmonics.max(1) as usize * factor).max(floor).next_power_of_two()
}

/// Lower bound for v over Σ_N from samples of its level-j partial sum.
///
/// The sampled minimum is corrected by L·h/2 (L the Lipschitz constant
/// of the partial sum, h the sample step) and by the l1 mass above
/// level j.
pub fn positivity_certificate(v: &BohrSeries, level: usize) -> Result<Positivity> {
    positivity_certificate_with_grid(v, level, 4096)
}

pub fn positivity_certificate_with_grid(
    v: &BohrSeries,
    level: usize,
    min_samples: usize,
) -> Result<Positivity> {
    if !v.is_real() {
        return Err(LabError::NotReal);
    }
    let spec = v.spec();
    let trunc = v.partial_sum(level)?;
    let remainder = v.remainder(level);
    let lipschitz: f64 = trunc
        .coefficients()
        .iter()
        .map(|(r, c)| TAU * r.to_f64(spec).abs() * c.norm())
        .sum();
    let samples = grid_size(trunc.harmonics_at(level)?, 64, min_samples);
    let period = spec.product_f64(level);
    let step = period / samples as f64;
    let min_sample = (0..samples)
        .map(|k| trunc.evaluate_finite(step * k as f64).re)
        .fold(f64::INFINITY, f64::min);
    let min_bound = min_sample - lipschitz * step / 2.0 - remainder;
    Ok(Positivity {
        min_sample,
        lipschitz,
        step,
        remainder,
        min_bound,
        certified: min_bound > 0.0 && min_bound.is_finite(),
    })
}

/// Certificate for a series that may carry a tail: the finite part is
/// sampled at its own top level and the tail is bounded by its l1 norm.
pub fn certify_positive(v: &BohrSeries) -> Result<Positivity> {
    if !v.is_real() {
        return Err(LabError::NotReal);
    }
    let finite = v.without_tail();
    let mut cert = positivity_certificate(&finite, finite.max_level())?;
    if let Some(t) = v.tail() {
        let l1 = t.l1_norm(v.spec());
        cert.remainder += l1;
        cert.min_bound -= l1;
        cert.certified = cert.min_bound > 0.0 && cert.min_bound.is_finite();
    }
    Ok(cert)
}

/// Level-j Fourier expansion of 1/v.
pub fn reciprocal(v: &BohrSeries, level: usize, tol: f64) -> Result<Reciprocal> {
    reciprocal_with_grid(v, level, tol, 0)
}

/// [`reciprocal`] with a lower bound on the projection grid size.
///
/// 1/v_e is sampled over one period P_j on a power-of-two grid of at least
/// 8·(number of harmonics) points and projected onto the harmonics m/P_j
/// by a discrete transform. The grid doubles until the upper quarter of
/// the spectrum falls below tol/10. Coefficient pairs below tol are
/// dropped.
pub fn reciprocal_with_grid(
    v: &BohrSeries,
    level: usize,
    tol: f64,
    min_grid: usize,
) -> Result<Reciprocal> {
    if !(tol > 0.0) {
        return Err(LabError::InvalidArgument("tolerance must be positive".into()));
    }
    let cert = positivity_certificate(v, level)?;
    if !cert.certified {
        return Err(LabError::NotPositive(cert.min_bound));
    }
    let spec = v.spec_arc().clone();
    let trunc = v.partial_sum(level)?;
    let period = spec.product_f64(level);
    let mut grid = grid_size(trunc.harmonics_at(level)?, 8, min_grid.max(16));
    let mut planner = FftPlanner::<f64>::new();

    let coeffs = loop {
        let mut buf: Vec<Complex64> = (0..grid)
            .map(|k| {
                let t = period * k as f64 / grid as f64;
                Complex64::new(1.0 / trunc.evaluate_finite(t).re, 0.0)
            })
            .collect();
        planner.plan_fft_forward(grid).process(&mut buf);
        let norm = 1.0 / grid as f64;
        for c in buf.iter_mut() {
            *c *= norm;
        }
        let half = grid / 2;
        let high = (grid / 4..half)
            .map(|m| buf[m].norm().max(buf[grid - m].norm()))
            .fold(0.0, f64::max);
        if high < tol / 10.0 || grid >= MAX_GRID {
            break buf;
        }
        grid *= 2;
    };

    let half = grid / 2;
    let mut terms = vec![(Frequency::ZERO, Complex64::new(coeffs[0].re, 0.0))];
    for m in 1..half {
        let avg = (coeffs[m] + coeffs[grid - m].conj()) * 0.5;
        if avg.norm() >= tol {
            terms.push((Frequency::new(&spec, level, m as i64)?, avg));
            terms.push((Frequency::new(&spec, level, -(m as i64))?, avg.conj()));
        }
    }
    let series = BohrSeries::from_terms(spec.clone(), terms)?.into_real()?;

    // λ on the half-step offset grid by one inverse transform
    let checks = (4 * grid).max(1024);
    let mut spectrum = vec![Complex64::new(0.0, 0.0); checks];
    for (r, c) in series.coefficients() {
        let m = r.numerator_at(&spec, level)?;
        let shift = Complex64::from_polar(1.0, std::f64::consts::PI * m as f64 / checks as f64);
        spectrum[m.rem_euclid(checks as i64) as usize] += c * shift;
    }
    planner.plan_fft_inverse(checks).process(&mut spectrum);
    let residual = spectrum
        .iter()
        .enumerate()
        .map(|(k, l)| {
            let t = period * (k as f64 + 0.5) / checks as f64;
            (l.re * trunc.evaluate_finite(t).re - 1.0).abs()
        })
        .fold(0.0, f64::max);
    let limit = 100.0 * tol;
    if residual > limit {
        return Err(LabError::Reconstruction { residual, limit });
    }
    Ok(Reciprocal {
        series,
        residual,
        grid,
        level,
    })
}

/// Lower bound for the α-Hölder constant of f_e from sampled increments.
///
/// Times are spread over one period by a golden-ratio sequence; δ runs
/// over 61 log-spaced values in [1e-6, 1].
pub fn holder_estimate(f: &BohrSeries, alpha: f64, trials: usize) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(LabError::InvalidArgument(format!("Hölder exponent {alpha} not in (0, 1]")));
    }
    let spec = f.spec();
    let level = match f.tail() {
        None => f.max_level(),
        Some(t) => f.max_level().max(t.start_level),
    };
    // keep t moderate so increments stay resolvable in f64
    let period = spec.product_f64(level).min(1e4);
    let golden = (5f64.sqrt() - 1.0) / 2.0;
    let tol = 1e-15;
    let deltas: Vec<f64> = (0..=60).map(|i| 10f64.powf(-6.0 + i as f64 * 0.1)).collect();
    let mut best: f64 = 0.0;
    for i in 0..trials.max(1) {
        let t = ((i + 1) as f64 * golden).fract() * period;
        let base = f.evaluate_at_time(t, tol)?.value;
        for &d in &deltas {
            let inc = (f.evaluate_at_time(t + d, tol)?.value - base).norm();
            best = best.max(inc / d.powf(alpha));
        }
    }
    Ok(best)
}

/// Jets along the flow direction: v¹ = v, v^{j+1} = (v^j)′·v.
pub fn field_jet(v: &BohrSeries, k: usize) -> Result<Vec<BohrSeries>> {
    if !v.is_finite() {
        return Err(LabError::DivergentTail);
    }
    let mut jets = Vec::with_capacity(k);
    if k == 0 {
        return Ok(jets);
    }
    jets.push(v.clone());
    for _ in 1..k {
        let next = jets.last().unwrap().derivative().mul(v)?;
        jets.push(next);
    }
    Ok(jets)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DkOrder {
    Finite(usize),
    Infinity,
}

/// max over a sampled period of |f|, for a finite series.
fn sampled_max_finite(f: &BohrSeries) -> Result<f64> {
    let level = f.max_level();
    let samples = grid_size(f.harmonics_at(level)?, 16, 1024);
    let period = f.spec().product_f64(level);
    Ok((0..samples)
        .map(|k| f.evaluate_finite(period * k as f64 / samples as f64).norm())
        .fold(0.0, f64::max))
}

/// d_k(v, w) = Σ_{j≤k} max |v^j − w^j|, or the weighted d_∞.
///
/// Only finite series have finite jets. For k = 1 it is enough that the
/// difference v − w is finite (identical tails cancel).
pub fn dk_distance(v: &BohrSeries, w: &BohrSeries, order: DkOrder) -> Result<f64> {
    let diff = v.sub(w)?;
    match order {
        DkOrder::Finite(0) => Err(LabError::InvalidArgument("d_k needs k ≥ 1".into())),
        DkOrder::Finite(1) => {
            if !diff.is_finite() {
                return Err(LabError::DivergentTail);
            }
            sampled_max_finite(&diff)
        }
        DkOrder::Finite(k) => {
            let jv = field_jet(v, k)?;
            let jw = field_jet(w, k)?;
            let mut total = 0.0;
            for (a, b) in jv.iter().zip(&jw) {
                total += sampled_max_finite(&a.sub(b)?)?;
            }
            Ok(total)
        }
        DkOrder::Infinity => {
            if !v.is_finite() || !w.is_finite() {
                return Err(LabError::DivergentTail);
            }
            let mut jv = v.clone();
            let mut jw = w.clone();
            let mut d_r = 0.0;
            let mut total = 0.0;
            let mut weight = 1.0;
            for r in 1..=D_INFINITY_TERMS {
                if r > 1 {
                    jv = jv.derivative().mul(v)?;
                    jw = jw.derivative().mul(w)?;
                }
                d_r += sampled_max_finite(&jv.sub(&jw)?)?;
                weight *= 0.5;
                total += if d_r.is_finite() {
                    weight * d_r / (1.0 + d_r)
                } else {
                    weight
                };
            }
            Ok(total)
        }
    }
}

/// max |f(t)| over `samples` evenly spaced times in [0, window).
pub fn sampled_sup(f: &BohrSeries, window: f64, samples: usize, tol: f64) -> Result<f64> {
    let mut best: f64 = 0.0;
    for k in 0..samples.max(1) {
        let t = window * k as f64 / samples.max(1) as f64;
        best = best.max(f.evaluate_at_time(t, tol)?.value.norm());
    }
    Ok(best)
}
