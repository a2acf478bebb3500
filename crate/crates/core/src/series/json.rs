use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{BohrSeries, Part, TailKind, TailSpec};
use crate::error::{LabError, Result};
use crate::solenoid::{Frequency, SolenoidSpec};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoefficientJson {
    pub level: usize,
    pub m: i64,
    pub re: f64,
    pub im: f64,
}

/// Wire form of a tail. Rho tails use `scale_*`, geometric tails `base_*`
/// and `ratio`; `power` only appears once derivatives or integrals have
/// moved a tail off its default.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TailJson {
    pub kind: TailKind,
    pub start_level: usize,
    #[serde(default, alias = "base_re", skip_serializing_if = "Option::is_none")]
    pub scale_re: Option<f64>,
    #[serde(default, alias = "base_im", skip_serializing_if = "Option::is_none")]
    pub scale_im: Option<f64>,
    #[serde(default)]
    pub part: Part,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ratio: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub power: Option<i32>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeriesJson {
    pub spec: SolenoidSpec,
    #[serde(default)]
    pub real: bool,
    #[serde(default)]
    pub coefficients: Vec<CoefficientJson>,
    #[serde(default)]
    pub tail: Option<TailJson>,
}

impl From<&TailSpec> for TailJson {
    fn from(t: &TailSpec) -> Self {
        let (ratio, power) = match t.kind {
            TailKind::Rho => (
                (t.ratio != 1.0).then_some(t.ratio),
                (t.power != 1).then_some(t.power),
            ),
            TailKind::GeometricLevel => (Some(t.ratio), (t.power != 0).then_some(t.power)),
        };
        TailJson {
            kind: t.kind,
            start_level: t.start_level,
            scale_re: Some(t.scale.re),
            scale_im: Some(t.scale.im),
            part: t.part,
            ratio,
            power,
        }
    }
}

impl TryFrom<&TailJson> for TailSpec {
    type Error = LabError;

    fn try_from(j: &TailJson) -> Result<Self> {
        let scale = Complex64::new(j.scale_re.unwrap_or(1.0), j.scale_im.unwrap_or(0.0));
        let mut tail = match j.kind {
            TailKind::Rho => TailSpec::rho(j.start_level, scale, j.part),
            TailKind::GeometricLevel => {
                let ratio = j.ratio.ok_or_else(|| {
                    LabError::Parse("geometric_level tail needs a ratio".into())
                })?;
                TailSpec::geometric(j.start_level, scale, ratio, j.part)?
            }
        };
        if let Some(r) = j.ratio {
            tail.ratio = r;
        }
        if let Some(p) = j.power {
            tail.power = p;
        }
        tail.validate()?;
        Ok(tail)
    }
}

impl BohrSeries {
    pub fn to_json(&self) -> SeriesJson {
        SeriesJson {
            spec: self.spec().clone(),
            real: self.is_real(),
            coefficients: self
                .coefficients()
                .iter()
                .map(|(r, c)| CoefficientJson {
                    level: r.level(),
                    m: r.numerator(),
                    re: c.re,
                    im: c.im,
                })
                .collect(),
            tail: self.tail().map(TailJson::from),
        }
    }

    pub fn from_json(j: &SeriesJson) -> Result<Self> {
        let spec = Arc::new(j.spec.clone());
        Self::from_json_with_spec(j, spec)
    }

    /// Same as [`Self::from_json`] but shares an existing spec allocation.
    pub fn from_json_with_spec(j: &SeriesJson, spec: Arc<SolenoidSpec>) -> Result<Self> {
        if *spec != j.spec {
            return Err(LabError::InvalidArgument("series spec does not match".into()));
        }
        let terms = j
            .coefficients
            .iter()
            .map(|c| Ok((Frequency::new(&spec, c.level, c.m)?, Complex64::new(c.re, c.im))))
            .collect::<Result<Vec<_>>>()?;
        let mut s = BohrSeries::from_terms(spec, terms)?;
        if let Some(t) = &j.tail {
            s = s.with_tail(TailSpec::try_from(t)?)?;
        }
        if j.real {
            s = s.into_real()?;
        }
        Ok(s)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_json()).expect("series JSON is always serializable")
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let j: SeriesJson = serde_json::from_str(s).map_err(|e| LabError::Parse(e.to_string()))?;
        Self::from_json(&j)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_documented_layout() {
        let text = r#"{"spec": {"factors": [2, 2, 2]}, "real": true,
            "coefficients": [{"level": 0, "m": 0, "re": 1.0, "im": 0.0}],
            "tail": {"kind": "rho", "start_level": 1, "scale_re": 1.0, "scale_im": 0.0, "part": "imaginary"}}"#;
        let s = BohrSeries::from_json_str(text).unwrap();
        assert!(s.is_real());
        let t = s.tail().unwrap();
        assert_eq!((t.kind, t.start_level, t.part, t.power), (TailKind::Rho, 1, Part::Imaginary, 1));
        let back = BohrSeries::from_json_str(&s.to_json_string()).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn derivative_tail_survives_round_trip() {
        let text = r#"{"spec": {"factors": [2, 3]},
            "tail": {"kind": "geometric_level", "start_level": 2, "base_re": 0.5, "base_im": 0.0, "ratio": 0.125}}"#;
        let s = BohrSeries::from_json_str(text).unwrap().derivative();
        let back = BohrSeries::from_json_str(&s.to_json_string()).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(BohrSeries::from_json_str("{").is_err());
        let asym = r#"{"spec": {"factors": [2]}, "real": true,
            "coefficients": [{"level": 1, "m": 1, "re": 1.0, "im": 0.0}]}"#;
        assert!(matches!(BohrSeries::from_json_str(asym), Err(LabError::NotReal)));
        let deep = r#"{"spec": {"factors": [2]},
            "coefficients": [{"level": 2, "m": 1, "re": 1.0, "im": 0.0}]}"#;
        assert!(BohrSeries::from_json_str(deep).is_err());
    }
}
