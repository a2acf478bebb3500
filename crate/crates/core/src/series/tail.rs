use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::solenoid::SolenoidSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailKind {
    Rho,
    GeometricLevel,
}

/// Which part of the complex level series a tail carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Part {
    #[default]
    Full,
    Real,
    Imaginary,
}

/// A structured infinite tail with one generator frequency per level.
///
/// Level j ≥ `start_level` carries the amplitude
/// `A_j = scale · ratio^(j − start) · P_j^(−power)` at frequency 1/P_j.
/// With `part = Real` (resp. `Imaginary`) the tail is the real (resp.
/// imaginary) part of that series: A_j/2 at ±1/P_j (resp. ±A_j/(2i)).
///
/// ρ_m is `Rho` with ratio 1 and power 1. Derivatives raise the power and
/// formal integrals lower it, so the family is closed under both.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailSpec {
    pub kind: TailKind,
    pub start_level: usize,
    pub scale: Complex64,
    pub part: Part,
    pub ratio: f64,
    pub power: i32,
}

impl TailSpec {
    /// scale·ρ_m (or its real/imaginary part).
    pub fn rho(start_level: usize, scale: Complex64, part: Part) -> Self {
        TailSpec {
            kind: TailKind::Rho,
            start_level,
            scale,
            part,
            ratio: 1.0,
            power: 1,
        }
    }

    pub fn geometric(start_level: usize, base: Complex64, ratio: f64, part: Part) -> Result<Self> {
        if !(ratio.abs() < 1.0) {
            return Err(LabError::InvalidArgument(format!(
                "geometric tail ratio {ratio} must satisfy |ratio| < 1"
            )));
        }
        Ok(TailSpec {
            kind: TailKind::GeometricLevel,
            start_level,
            scale: base,
            part,
            ratio,
            power: 0,
        })
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if self.start_level == 0 {
            return Err(LabError::InvalidArgument("tail start level must be at least 1".into()));
        }
        if !self.ratio.is_finite() || !self.scale.re.is_finite() || !self.scale.im.is_finite() {
            return Err(LabError::InvalidArgument("tail parameters must be finite".into()));
        }
        Ok(())
    }

    /// A_j for level j (zero below the start level).
    pub fn amplitude(&self, spec: &SolenoidSpec, j: usize) -> Complex64 {
        if j < self.start_level {
            return Complex64::new(0.0, 0.0);
        }
        let geometric = self.ratio.powi((j - self.start_level) as i32);
        let p = spec.product_f64(j);
        let weight = match self.power {
            0 => 1.0,
            k if p.is_infinite() => {
                if k > 0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            k => p.powi(-k),
        };
        self.scale * (geometric * weight)
    }

    /// Terms (sign, coefficient) at frequencies sign/P_j for level j.
    pub fn level_terms(&self, spec: &SolenoidSpec, j: usize) -> Vec<(i64, Complex64)> {
        let a = self.amplitude(spec, j);
        if a == Complex64::new(0.0, 0.0) {
            return Vec::new();
        }
        match self.part {
            Part::Full => vec![(1, a)],
            Part::Real => vec![(1, a * 0.5), (-1, a * 0.5)],
            Part::Imaginary => {
                let c = a / Complex64::new(0.0, 2.0);
                vec![(1, c), (-1, -c)]
            }
        }
    }

    /// Σ|coefficients| at level j.
    pub fn level_l1(&self, spec: &SolenoidSpec, j: usize) -> f64 {
        self.amplitude(spec, j).norm()
    }

    /// Magnitude ratio between level j + J and level j.
    pub fn cycle_factor(&self, spec: &SolenoidSpec) -> f64 {
        self.cycle_factor_with_weight(spec, 0)
    }

    /// Same ratio for magnitudes multiplied by P_j^extra.
    fn cycle_factor_with_weight(&self, spec: &SolenoidSpec, extra: i32) -> f64 {
        if self.ratio == 0.0 || self.scale == Complex64::new(0.0, 0.0) {
            return 0.0;
        }
        let ln_q = spec.depth() as f64 * self.ratio.abs().ln()
            + (extra - self.power) as f64 * spec.ln_period_product();
        ln_q.exp()
    }

    /// Σ_{j ≥ first} w(j) for magnitudes that shrink by `q` per cycle,
    /// summed in closed form.
    fn cyclic_sum(spec: &SolenoidSpec, first: usize, q: f64, w: impl Fn(usize) -> f64) -> f64 {
        let block: f64 = (first..first + spec.depth()).map(w).sum();
        if block == 0.0 {
            return 0.0;
        }
        if q >= 1.0 {
            return f64::INFINITY;
        }
        block / (1.0 - q)
    }

    pub fn is_summable(&self, spec: &SolenoidSpec) -> bool {
        self.cycle_factor(spec) < 1.0
    }

    /// Σ_{j > level} |A_j|; infinite for non-summable tails.
    pub fn remainder(&self, spec: &SolenoidSpec, level: usize) -> f64 {
        let first = (level + 1).max(self.start_level);
        Self::cyclic_sum(spec, first, self.cycle_factor(spec), |j| self.level_l1(spec, j))
    }

    /// Total Σ_j |A_j|.
    pub fn l1_norm(&self, spec: &SolenoidSpec) -> f64 {
        self.remainder(spec, 0)
    }

    /// Σ_{j > level} |A_j|·P_j / (2π): the l1 norm of the formal integral's
    /// coefficients beyond `level`.
    pub fn integral_l1(&self, spec: &SolenoidSpec, level: usize) -> f64 {
        let first = (level + 1).max(self.start_level);
        let q = self.cycle_factor_with_weight(spec, 1);
        Self::cyclic_sum(spec, first, q, |j| {
            self.level_l1(spec, j) * spec.product_f64(j) / TAU
        })
    }

    /// Per-cycle growth factor of the formal integral's coefficient
    /// magnitudes. Square sums of those coefficients diverge iff ≥ 1.
    pub fn integral_cycle_factor(&self, spec: &SolenoidSpec) -> f64 {
        self.cycle_factor_with_weight(spec, 1)
    }

    /// Smallest level L ≥ start − 1 with remainder(L) < tol.
    pub fn truncation_level(&self, spec: &SolenoidSpec, tol: f64) -> Option<usize> {
        if !self.is_summable(spec) {
            return None;
        }
        let mut level = self.start_level - 1;
        while self.remainder(spec, level) >= tol {
            level += 1;
            if spec.product_f64(level).is_infinite() {
                break;
            }
        }
        Some(level)
    }

    pub fn is_real(&self) -> bool {
        self.part != Part::Full && self.scale.im == 0.0
    }

    pub fn scaled(&self, c: Complex64) -> TailSpec {
        TailSpec {
            scale: self.scale * c,
            ..*self
        }
    }

    /// Same structure apart from the scale, so two tails can be added.
    pub fn same_shape(&self, other: &TailSpec) -> bool {
        self.kind == other.kind
            && self.start_level == other.start_level
            && self.part == other.part
            && self.ratio == other.ratio
            && self.power == other.power
    }

    /// Tail of the t-derivative: ±2πi/P_j times each term.
    pub fn derivative(&self) -> TailSpec {
        let (part, factor) = match self.part {
            Part::Full => (Part::Full, Complex64::new(0.0, TAU)),
            Part::Real => (Part::Imaginary, Complex64::new(-TAU, 0.0)),
            Part::Imaginary => (Part::Real, Complex64::new(TAU, 0.0)),
        };
        TailSpec {
            scale: self.scale * factor,
            part,
            power: self.power + 1,
            ..*self
        }
    }

    /// Tail of the formal integral: each term divided by ±2πi/P_j.
    pub fn formal_integral(&self) -> TailSpec {
        let (part, factor) = match self.part {
            Part::Full => (Part::Full, Complex64::new(0.0, -1.0 / TAU)),
            Part::Real => (Part::Imaginary, Complex64::new(1.0 / TAU, 0.0)),
            Part::Imaginary => (Part::Real, Complex64::new(-1.0 / TAU, 0.0)),
        };
        TailSpec {
            scale: self.scale * factor,
            part,
            power: self.power - 1,
            ..*self
        }
    }

    /// sup-norm bound |scale|·2^{1−m} for a ρ_m-type tail.
    pub fn rho_sup_bound(&self) -> f64 {
        self.scale.norm() * 0.5f64.powi(self.start_level as i32 - 1)
    }
}
