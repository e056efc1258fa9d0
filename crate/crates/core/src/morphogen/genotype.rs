use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const PARAMS: usize = 12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GenotypeError {
    #[error("expected {PARAMS} parameters, got {0}")]
    Arity(usize),
    #[error("non-finite parameter {0}")]
    NonFinite(usize),
}

/// One row of the parameter range table.
#[derive(Debug, Clone, Copy)]
pub struct ParamRange {
    pub name: &'static str,
    pub lo: f64,
    pub hi: f64,
}

/// Physical range of each parameter. `repulsion_radius` is expressed in
/// multiples of `rest_length`; the simulator multiplies the two.
pub const RANGES: [ParamRange; PARAMS] = [
    ParamRange {
        name: "spring_stiffness",
        lo: 0.0,
        hi: 1.0,
    },
    ParamRange {
        name: "rest_length",
        lo: 0.005,
        hi: 0.02,
    },
    ParamRange {
        name: "repulsion_strength",
        lo: 0.0,
        hi: 1.0,
    },
    ParamRange {
        name: "repulsion_radius",
        lo: 0.0,
        hi: 4.0,
    },
    ParamRange {
        name: "smoothing",
        lo: 0.0,
        hi: 1.0,
    },
    ParamRange {
        name: "normal_push",
        lo: -1.0,
        hi: 1.0,
    },
    ParamRange {
        name: "food_base_rate",
        lo: 0.0,
        hi: 0.2,
    },
    ParamRange {
        name: "curvature_food_bias",
        lo: -1.0,
        hi: 1.0,
    },
    ParamRange {
        name: "split_threshold",
        lo: 0.5,
        hi: 5.0,
    },
    ParamRange {
        name: "damping",
        lo: 0.5,
        hi: 1.0,
    },
    ParamRange {
        name: "food_noise",
        lo: 0.0,
        hi: 1.0,
    },
    ParamRange {
        name: "duration",
        lo: 0.0,
        hi: 1.0,
    },
];

/// Twelve growth parameters, both as normalized coordinates and mapped
/// through [`RANGES`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Genotype {
    u: [f64; PARAMS],
    physical: [f64; PARAMS],
}

/// A parameter that had to be clamped into [0, 1].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClampWarning {
    pub index: usize,
    pub raw: f64,
    pub clamped: f64,
}

impl Genotype {
    /// Normalized coordinates in [0, 1].
    pub fn u(&self) -> &[f64; PARAMS] {
        &self.u
    }

    pub fn physical(&self) -> &[f64; PARAMS] {
        &self.physical
    }

    /// Builds from coordinates that are already known to lie in [0, 1].
    /// Out-of-range values are clamped silently; use [`validate_genotype`]
    /// when the caller needs the warnings.
    pub fn from_unit(u: [f64; PARAMS]) -> Result<Self, GenotypeError> {
        validate_genotype(&u).map(|(g, _)| g)
    }

    pub fn spring_stiffness(&self) -> f64 {
        self.physical[0]
    }
    pub fn rest_length(&self) -> f64 {
        self.physical[1]
    }
    pub fn repulsion_strength(&self) -> f64 {
        self.physical[2]
    }
    /// Absolute repulsion radius in world units.
    pub fn repulsion_radius(&self) -> f64 {
        self.physical[3] * self.physical[1]
    }
    pub fn smoothing(&self) -> f64 {
        self.physical[4]
    }
    pub fn normal_push(&self) -> f64 {
        self.physical[5]
    }
    pub fn food_base_rate(&self) -> f64 {
        self.physical[6]
    }
    pub fn curvature_food_bias(&self) -> f64 {
        self.physical[7]
    }
    pub fn split_threshold(&self) -> f64 {
        self.physical[8]
    }
    pub fn damping(&self) -> f64 {
        self.physical[9]
    }
    pub fn food_noise(&self) -> f64 {
        self.physical[10]
    }

    /// round(100 + 1900 * duration)
    pub fn steps(&self) -> usize {
        (100.0 + 1900.0 * self.physical[11]).round() as usize
    }
}

/// Clamps raw coordinates into [0, 1] and maps them through the range table.
pub fn validate_genotype(raw: &[f64]) -> Result<(Genotype, Vec<ClampWarning>), GenotypeError> {
    if raw.len() != PARAMS {
        return Err(GenotypeError::Arity(raw.len()));
    }
    if let Some(i) = raw.iter().position(|x| !x.is_finite()) {
        return Err(GenotypeError::NonFinite(i));
    }
    let mut warnings = Vec::new();
    let mut u = [0.0; PARAMS];
    let mut physical = [0.0; PARAMS];
    for (i, &x) in raw.iter().enumerate() {
        let c = x.clamp(0.0, 1.0);
        if c != x {
            warnings.push(ClampWarning {
                index: i,
                raw: x,
                clamped: c,
            });
        }
        u[i] = c;
        physical[i] = RANGES[i].lo + c * (RANGES[i].hi - RANGES[i].lo);
    }
    Ok((Genotype { u, physical }, warnings))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn midpoint_has_no_warnings() {
        let (g, w) = validate_genotype(&[0.5; PARAMS]).unwrap();
        assert_eq!(g.u(), &[0.5; PARAMS]);
        assert!(w.is_empty());
        assert_eq!(g.rest_length(), 0.005 + 0.5 * 0.015);
    }

    #[test]
    fn clamps_and_reports_index() {
        let mut raw = [0.5; PARAMS];
        raw[3] = 1.5;
        let (g, w) = validate_genotype(&raw).unwrap();
        assert_eq!(g.u()[3], 1.0);
        assert_eq!(
            w,
            vec![ClampWarning {
                index: 3,
                raw: 1.5,
                clamped: 1.0
            }]
        );
    }

    #[test]
    fn rejects_nan_and_wrong_arity() {
        let mut raw = [0.5; PARAMS];
        raw[0] = f64::NAN;
        let err = validate_genotype(&raw).unwrap_err();
        assert_eq!(err.to_string(), "non-finite parameter 0");
        assert_eq!(
            validate_genotype(&[0.1; 11]).unwrap_err(),
            GenotypeError::Arity(11)
        );
    }

    #[test]
    fn steps_span_documented_range() {
        let mut raw = [0.5; PARAMS];
        raw[11] = 0.0;
        assert_eq!(Genotype::from_unit(raw).unwrap().steps(), 100);
        raw[11] = 1.0;
        assert_eq!(Genotype::from_unit(raw).unwrap().steps(), 2000);
    }

    proptest! {
        #[test]
        fn clamp_is_idempotent(raw in proptest::array::uniform12(-2.0f64..3.0)) {
            let (g, _) = validate_genotype(&raw).unwrap();
            let (g2, w2) = validate_genotype(g.u()).unwrap();
            prop_assert_eq!(&g, &g2);
            prop_assert!(w2.is_empty());
            for ((p, u), r) in g.physical().iter().zip(g.u()).zip(RANGES.iter()) {
                prop_assert_eq!(*p, r.lo + u * (r.hi - r.lo));
            }
        }
    }
}
