//! Linear flows, flows generated by a positive field, return times to the
//! section S_x and the conjugacy h to a linear flow.
//!
//! Every orbit stays on one arc x + π_N(s), so a generated flow is the
//! scalar equation ds/du = v(x + π_N(s)) integrated by fixed-step RK4.

use std::f64::consts::TAU;
use std::sync::Arc;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::ode::{rk4_integrate, rk4_step};
use crate::quadrature::adaptive_simpson;
pub use crate::series::field_jet;
use crate::series::{certify_positive, reciprocal, BohrSeries, CoefficientJson, OrbitSeries, Positivity};
use crate::solenoid::{
    cis_minus_one, metric, phase_centered, shift_along_arc, wrap01, SolenoidPoint, SolenoidSpec,
};

pub const DEFAULT_STEP: f64 = 1e-3;
/// Tail truncation tolerance used when a field is pulled back to an orbit.
pub const DEFAULT_TOL: f64 = 1e-13;
const MIN_STEP: f64 = 1e-9;

fn check_point(spec: &SolenoidSpec, x: &SolenoidPoint) -> Result<()> {
    if x.depth() > spec.depth() + 1 {
        return Err(LabError::DepthOutOfRange {
            depth: x.depth(),
            max: spec.depth() + 1,
        });
    }
    Ok(())
}

/// φ_N^α(t, x) = π_N(αt) + x.
#[derive(Debug, Clone)]
pub struct LinearFlow {
    spec: Arc<SolenoidSpec>,
    alpha: f64,
}

impl LinearFlow {
    pub fn new(spec: Arc<SolenoidSpec>, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(LabError::InvalidArgument(format!("linear flow speed {alpha} must be positive")));
        }
        Ok(LinearFlow { spec, alpha })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn spec(&self) -> &SolenoidSpec {
        &self.spec
    }

    pub fn evolve(&self, t: f64, x: &SolenoidPoint) -> Result<SolenoidPoint> {
        check_point(&self.spec, x)?;
        Ok(shift_along_arc(&self.spec, x, self.alpha * t))
    }
}

pub fn linear_evolve(flow: &LinearFlow, t: f64, x: &SolenoidPoint) -> Result<SolenoidPoint> {
    flow.evolve(t, x)
}

/// Smallest t > 0 with p_1(φ(t, x)) = p_1(x), found by scanning the
/// first-coordinate offset for its wrap and bisecting.
pub fn linear_first_return(flow: &LinearFlow, x: &SolenoidPoint) -> Result<f64> {
    let x1 = x.angles()[0];
    let offset = |t: f64| -> Result<f64> { Ok(wrap01(flow.evolve(t, x)?.angles()[0] - x1)) };
    let dt = 0.01 / flow.alpha;
    let mut lo = 0.0;
    let mut prev = 0.0;
    loop {
        let hi = lo + dt;
        let cur = offset(hi)?;
        if cur < prev {
            // the wrap lies in (lo, hi]
            let (mut a, mut b) = (lo, hi);
            for _ in 0..200 {
                let m = 0.5 * (a + b);
                if m <= a || m >= b {
                    break;
                }
                if offset(m)? >= prev {
                    a = m;
                } else {
                    b = m;
                }
            }
            return Ok(b);
        }
        prev = cur;
        lo = hi;
    }
}

/// The flow generated by a positive field v.
#[derive(Debug, Clone)]
pub struct GeneratedFlow {
    v: BohrSeries,
    step: f64,
    tol: f64,
    positivity: Positivity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub t: f64,
    pub s: f64,
    pub point: SolenoidPoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectionReturn {
    pub time: f64,
    pub landing: SolenoidPoint,
}

impl GeneratedFlow {
    pub fn new(v: BohrSeries) -> Result<Self> {
        Self::with_settings(v, DEFAULT_STEP, DEFAULT_TOL)
    }

    pub fn with_settings(v: BohrSeries, step: f64, tol: f64) -> Result<Self> {
        if !(step >= MIN_STEP) || !step.is_finite() {
            return Err(LabError::StepUnderflow(step));
        }
        if !(tol > 0.0) {
            return Err(LabError::InvalidArgument("tolerance must be positive".into()));
        }
        let positivity = certify_positive(&v)?;
        if !positivity.certified {
            return Err(LabError::NotPositive(positivity.min_bound));
        }
        Ok(GeneratedFlow {
            v,
            step,
            tol,
            positivity,
        })
    }

    pub fn field(&self) -> &BohrSeries {
        &self.v
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn positivity(&self) -> &Positivity {
        &self.positivity
    }

    fn orbit(&self, x: &SolenoidPoint) -> Result<OrbitSeries> {
        check_point(self.v.spec(), x)?;
        self.v.along_orbit(x, self.tol)
    }

    /// s(t) for the orbit through x.
    pub fn arc_coordinate(&self, t: f64, x: &SolenoidPoint) -> Result<f64> {
        let orbit = self.orbit(x)?;
        Ok(rk4_integrate(&|_, s| orbit.eval_re(s), 0.0, t, self.step))
    }

    pub fn evolve(&self, t: f64, x: &SolenoidPoint) -> Result<SolenoidPoint> {
        let s = self.arc_coordinate(t, x)?;
        Ok(shift_along_arc(self.v.spec(), x, s))
    }

    /// Arc coordinates at each of `times`, integrating outward from 0 in
    /// both directions so each stretch is covered once.
    pub fn arc_at_times(&self, x: &SolenoidPoint, times: &[f64]) -> Result<Vec<f64>> {
        let orbit = self.orbit(x)?;
        let f = |_: f64, s: f64| orbit.eval_re(s);
        let mut out = vec![0.0; times.len()];
        let mut order: Vec<usize> = (0..times.len()).collect();
        order.sort_by(|&a, &b| times[a].total_cmp(&times[b]));
        let (neg, pos): (Vec<usize>, Vec<usize>) = order.into_iter().partition(|&i| times[i] < 0.0);
        for chain in [pos, neg.into_iter().rev().collect()] {
            let (mut u, mut s) = (0.0, 0.0);
            for i in chain {
                s = rk4_integrate(&f, s, times[i] - u, self.step);
                u = times[i];
                out[i] = s;
            }
        }
        Ok(out)
    }

    /// Samples t = k·t_end/samples for k = 0..=samples.
    pub fn trajectory(&self, x: &SolenoidPoint, t_end: f64, samples: usize) -> Result<Vec<TrajectoryPoint>> {
        let samples = samples.max(1);
        let times: Vec<f64> = (0..=samples).map(|k| t_end * k as f64 / samples as f64).collect();
        let arcs = self.arc_at_times(x, &times)?;
        Ok(times
            .into_iter()
            .zip(arcs)
            .map(|(t, s)| TrajectoryPoint {
                t,
                s,
                point: shift_along_arc(self.v.spec(), x, s),
            })
            .collect())
    }

    /// Time to travel arc length exactly 1 from x, and the landing point
    /// x + π_N(1). Steps run until the next would pass s = 1; the last
    /// piece is one RK4 step of dt/ds = 1/v.
    pub fn section_return(&self, x: &SolenoidPoint) -> Result<SectionReturn> {
        let orbit = self.orbit(x)?;
        let f = |_: f64, s: f64| orbit.eval_re(s);
        let h = self.step;
        let max_steps = (1.0 / (self.positivity.min_bound * h)).ceil() as usize + 2;
        let mut s = 0.0;
        let mut n = 0usize;
        loop {
            let next = rk4_step(&f, n as f64 * h, s, h);
            if next >= 1.0 {
                break;
            }
            s = next;
            n += 1;
            if n > max_steps {
                return Err(LabError::StepUnderflow(h));
            }
        }
        let dt = rk4_step(&|u: f64, _| 1.0 / orbit.eval_re(u), s, 0.0, 1.0 - s);
        Ok(SectionReturn {
            time: n as f64 * h + dt,
            landing: shift_along_arc(self.v.spec(), x, 1.0),
        })
    }
}

pub fn flow_evolve(flow: &GeneratedFlow, t: f64, x: &SolenoidPoint) -> Result<SolenoidPoint> {
    flow.evolve(t, x)
}

pub fn section_return(flow: &GeneratedFlow, x: &SolenoidPoint) -> Result<SectionReturn> {
    flow.section_return(x)
}

/// τ = Σ τ_r χ_r with τ_0 = λ_0 and τ_r = λ_r (e^{2πir} − 1)/(2πir).
/// A tail is expanded up to the level where its remainder drops below
/// `tol` (capped at the working depth).
pub fn return_time_series(lambda: &BohrSeries, tol: f64) -> Result<BohrSeries> {
    if !lambda.is_real() {
        return Err(LabError::NotReal);
    }
    let spec = lambda.spec_arc().clone();
    let base = match lambda.tail() {
        None => lambda.clone(),
        Some(t) => {
            let level = t
                .truncation_level(&spec, tol)
                .ok_or(LabError::DivergentTail)?
                .min(spec.depth());
            lambda.partial_sum(level)?
        }
    };
    let terms: Vec<_> = base
        .coefficients()
        .iter()
        .map(|(r, c)| {
            if r.is_zero() {
                return (*r, *c);
            }
            let period = spec.product_f64(r.level());
            let bracket = cis_minus_one(phase_centered(r.numerator(), period, 1.0));
            (*r, c * bracket / Complex64::new(0.0, TAU * r.to_f64(&spec)))
        })
        .collect();
    BohrSeries::from_terms(spec, terms)?.into_real()
}

/// `count` random points of the given depth from a seeded ChaCha8 stream.
pub fn random_points(spec: &SolenoidSpec, depth: usize, count: usize, seed: u64) -> Result<Vec<SolenoidPoint>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| SolenoidPoint::random(spec, depth, &mut rng))
        .collect()
}

/// ∫_0^1 λ(x + π_N(u)) du by adaptive Simpson.
pub fn return_time_quadrature(lambda: &BohrSeries, x: &SolenoidPoint, tol: f64) -> Result<f64> {
    let orbit = lambda.along_orbit(x, tol * 0.1)?;
    Ok(adaptive_simpson(|u| orbit.eval_re(u), 0.0, 1.0, tol))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConjugacyOptions {
    pub times: usize,
    pub points: usize,
    pub t_min: f64,
    pub t_max: f64,
    pub seed: u64,
    pub step: f64,
    pub reciprocal_tol: f64,
    pub residual_limit: f64,
}

impl Default for ConjugacyOptions {
    fn default() -> Self {
        ConjugacyOptions {
            times: 20,
            points: 20,
            t_min: -5.0,
            t_max: 5.0,
            seed: 0,
            step: DEFAULT_STEP,
            reciprocal_tol: 1e-13,
            residual_limit: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationGrid {
    pub times: usize,
    pub points: usize,
    pub t_min: f64,
    pub t_max: f64,
    pub depth: usize,
    pub seed: u64,
    pub step: f64,
}

#[derive(Debug, Clone)]
pub struct ConjugacyData {
    pub lambda: BohrSeries,
    pub delta: BohrSeries,
    pub alpha: f64,
    pub residual: f64,
    pub grid: VerificationGrid,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConjugacyReport {
    pub alpha: f64,
    pub delta_coefficients: Vec<CoefficientJson>,
    pub residual: f64,
    pub grid: VerificationGrid,
}

impl ConjugacyData {
    /// h(x) = x + π_N(δ(x)/λ_0).
    pub fn apply(&self, x: &SolenoidPoint) -> Result<SolenoidPoint> {
        let d = self.delta.evaluate_at_point(x, 1e-15)?.value.re;
        Ok(shift_along_arc(self.delta.spec(), x, d * self.alpha))
    }

    pub fn check(&self, limit: f64) -> Result<()> {
        if !(self.residual <= limit) {
            return Err(LabError::ResidualTooLarge {
                residual: self.residual,
                limit,
            });
        }
        Ok(())
    }

    pub fn report(&self) -> ConjugacyReport {
        ConjugacyReport {
            alpha: self.alpha,
            delta_coefficients: self.delta.to_json().coefficients,
            residual: self.residual,
            grid: self.grid.clone(),
        }
    }
}

/// Builds h with default options and rejects residuals above 1e-6.
pub fn build_conjugacy(v: &BohrSeries) -> Result<ConjugacyData> {
    let opts = ConjugacyOptions::default();
    let data = build_conjugacy_with(v, &opts)?;
    data.check(opts.residual_limit)?;
    Ok(data)
}

/// λ = 1/v, δ = ∫(λ − λ_0) with δ_0 = 0, α = 1/λ_0, and the residual
/// max d(h(φ(t, x)), φ^α(t, h(x))) over the verification grid. The
/// residual is returned, not checked.
pub fn build_conjugacy_with(v: &BohrSeries, opts: &ConjugacyOptions) -> Result<ConjugacyData> {
    if !v.is_finite() {
        return Err(LabError::UnsupportedTail("the conjugacy needs a finite field".into()));
    }
    let spec = v.spec_arc().clone();
    let flow = GeneratedFlow::with_settings(v.clone(), opts.step, DEFAULT_TOL)?;
    let lambda = reciprocal(v, v.max_level(), opts.reciprocal_tol)?.series;
    let lambda0 = lambda.mean_value().re;
    let delta = lambda.without_mean().formal_integral()?;
    let alpha = 1.0 / lambda0;
    let linear = LinearFlow::new(spec.clone(), alpha)?;

    let depth = spec.depth() + 1;
    let points = random_points(&spec, depth, opts.points, opts.seed)?;
    let times: Vec<f64> = match opts.times {
        0 => Vec::new(),
        1 => vec![opts.t_min],
        n => (0..n)
            .map(|k| opts.t_min + (opts.t_max - opts.t_min) * k as f64 / (n - 1) as f64)
            .collect(),
    };

    let mut data = ConjugacyData {
        lambda,
        delta,
        alpha,
        residual: 0.0,
        grid: VerificationGrid {
            times: opts.times,
            points: opts.points,
            t_min: opts.t_min,
            t_max: opts.t_max,
            depth,
            seed: opts.seed,
            step: opts.step,
        },
    };
    let per_point = points
        .par_iter()
        .map(|x| {
            let hx = data.apply(x)?;
            let arcs = flow.arc_at_times(x, &times)?;
            let mut worst: f64 = 0.0;
            for (&t, &s) in times.iter().zip(&arcs) {
                let lhs = data.apply(&shift_along_arc(&spec, x, s))?;
                let rhs = linear.evolve(t, &hx)?;
                worst = worst.max(metric(&lhs, &rhs)?.value);
            }
            Ok(worst)
        })
        .collect::<Result<Vec<f64>>>()?;
    data.residual = per_point.into_iter().fold(0.0, f64::max);
    Ok(data)
}
