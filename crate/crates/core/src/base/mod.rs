//! Ground sets, fractional points, element subsets, seeded random streams
//! and independent activation sampling.

mod rng;
mod set;

pub use rng::{splitmix64, tags, SeedSpec, TrialRng};
pub use set::{ElementSet, Members, Subsets, MAX_ELEMENTS};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Tolerance used when comparing probabilities against scaled polytope bounds.
pub const FEAS_TOL: f64 = 1e-9;

/// Ground set `{0, .., n-1}` with optional labels.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundSet {
    n: usize,
    labels: Option<Vec<String>>,
}

impl GroundSet {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 || n > MAX_ELEMENTS {
            return Err(invalid(format!(
                "ground set size must be in 1..={MAX_ELEMENTS}, got {n}"
            )));
        }
        Ok(GroundSet { n, labels: None })
    }

    pub fn with_labels(n: usize, labels: Vec<String>) -> Result<Self> {
        let mut g = Self::new(n)?;
        if labels.len() != n {
            return Err(invalid(format!("labels: expected {n} labels, got {}", labels.len())));
        }
        g.labels = Some(labels);
        Ok(g)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn full(&self) -> ElementSet {
        ElementSet::full(self.n)
    }

    pub fn label(&self, e: usize) -> String {
        match &self.labels {
            Some(l) => l[e].clone(),
            None => e.to_string(),
        }
    }
}

/// A vector `x` in `[0,1]^n`, optionally tagged with the scale `b` it was
/// verified against (`x ∈ b·P`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FractionalPoint {
    values: Vec<f64>,
    validated_scale: Option<f64>,
}

impl FractionalPoint {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() > MAX_ELEMENTS {
            return Err(invalid(format!(
                "x: at most {MAX_ELEMENTS} coordinates supported, got {}",
                values.len()
            )));
        }
        for (e, &v) in values.iter().enumerate() {
            if !v.is_finite() || !(0.0..=1.0).contains(&v) {
                return Err(invalid(format!("x[{e}] = {v} is not a probability")));
            }
        }
        Ok(FractionalPoint {
            values,
            validated_scale: None,
        })
    }

    pub fn zeros(n: usize) -> Self {
        FractionalPoint {
            values: vec![0.0; n],
            validated_scale: None,
        }
    }

    /// Builds a point, clamping coordinates into `[0,1]`. For results of
    /// floating-point arithmetic that may land a rounding error outside.
    pub(crate) fn clamped(values: Vec<f64>) -> Self {
        FractionalPoint {
            values: values.into_iter().map(|v| v.clamp(0.0, 1.0)).collect(),
            validated_scale: None,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, e: usize) -> f64 {
        self.values[e]
    }

    pub fn validated_scale(&self) -> Option<f64> {
        self.validated_scale
    }

    pub fn with_validated_scale(mut self, b: f64) -> Self {
        self.validated_scale = Some(b);
        self
    }

    /// Sum of coordinates over `set`.
    pub fn sum_over(&self, set: ElementSet) -> f64 {
        set.iter().map(|e| self.values[e]).sum()
    }

    /// Support `{e : x_e > 0}`.
    pub fn support(&self) -> ElementSet {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, &v)| v > 0.0)
            .map(|(e, _)| e)
            .collect()
    }

    /// Coordinate-wise product `b·x`. A recorded validation scale `s` becomes `b·s`.
    pub fn scale(&self, b: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&b) {
            return Err(invalid(format!("scale b = {b} must lie in [0,1]")));
        }
        Ok(FractionalPoint {
            values: self.values.iter().map(|v| v * b).collect(),
            validated_scale: self.validated_scale.map(|s| s * b),
        })
    }

    /// Coordinate-wise product `p ∘ x`.
    pub fn hadamard(&self, p: &[f64]) -> Result<Self> {
        if p.len() != self.len() {
            return Err(crate::Error::GroundMismatch {
                expected: self.len(),
                got: p.len(),
            });
        }
        Ok(FractionalPoint::clamped(
            self.values.iter().zip(p).map(|(x, p)| x * p).collect(),
        ))
    }
}

/// `scale_point` as a free function.
pub fn scale_point(x: &FractionalPoint, b: f64) -> Result<FractionalPoint> {
    x.scale(b)
}

/// Draws `R(x)`: every element enters independently with probability `x_e`.
///
/// Exactly one uniform draw is consumed per element regardless of `x_e`, so
/// two points of equal length consume identical amounts of a stream.
pub fn sample_active_set<R: Rng + ?Sized>(x: &FractionalPoint, rng: &mut R) -> ElementSet {
    let mut set = ElementSet::EMPTY;
    for (e, &p) in x.values.iter().enumerate() {
        if rng.gen::<f64>() < p {
            set.insert(e);
        }
    }
    set
}

/// Keeps every member of `active` independently with probability `b`.
pub fn downsample_active<R: Rng + ?Sized>(active: ElementSet, b: f64, rng: &mut R) -> ElementSet {
    active.iter().filter(|_| rng.gen::<f64>() < b).collect()
}

/// The JSON instance fragment `{"n": int, "x": [floats], "seed": int}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointFragment {
    pub n: usize,
    pub x: Vec<f64>,
    #[serde(default)]
    pub seed: Option<u64>,
}

impl PointFragment {
    pub fn into_point(self) -> Result<(FractionalPoint, Option<SeedSpec>)> {
        if self.x.len() != self.n {
            return Err(invalid(format!(
                "x: expected {} coordinates (n), got {}",
                self.n,
                self.x.len()
            )));
        }
        Ok((FractionalPoint::new(self.x)?, self.seed.map(SeedSpec::new)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_zero_and_all_one_points() {
        let seed = SeedSpec::new(1);
        let mut rng = seed.stream(0);
        let zeros = FractionalPoint::zeros(5);
        let ones = FractionalPoint::new(vec![1.0; 5]).unwrap();
        for _ in 0..1000 {
            assert!(sample_active_set(&zeros, &mut rng).is_empty());
            assert_eq!(sample_active_set(&ones, &mut rng), ElementSet::full(5));
        }
    }

    #[test]
    fn downsample_extremes() {
        let mut rng = SeedSpec::new(9).stream(0);
        let s = ElementSet::from_indices([0, 2, 3]);
        for _ in 0..100 {
            assert_eq!(downsample_active(s, 1.0, &mut rng), s);
            assert!(downsample_active(s, 0.0, &mut rng).is_empty());
        }
    }

    #[test]
    fn scale_point_examples() {
        let x = FractionalPoint::new(vec![0.4, 0.8]).unwrap();
        assert_eq!(x.scale(1.0).unwrap().values(), &[0.4, 0.8]);
        assert_eq!(x.scale(0.0).unwrap().values(), &[0.0, 0.0]);
        assert_eq!(x.scale(0.5).unwrap().values(), &[0.2, 0.4]);
        assert!(x.scale(1.5).is_err());
    }

    #[test]
    fn rejects_bad_coordinates() {
        assert!(FractionalPoint::new(vec![0.5, 1.2]).is_err());
        assert!(FractionalPoint::new(vec![f64::NAN]).is_err());
        assert!(GroundSet::new(0).is_err());
        assert!(GroundSet::with_labels(2, vec!["a".into()]).is_err());
    }

    #[test]
    fn fragment_parses() {
        let f: PointFragment = serde_json::from_str(r#"{"n":2,"x":[0.1,0.2],"seed":5}"#).unwrap();
        let (x, seed) = f.into_point().unwrap();
        assert_eq!(x.len(), 2);
        assert_eq!(seed, Some(SeedSpec::new(5)));
        let bad: PointFragment = serde_json::from_str(r#"{"n":3,"x":[0.1,0.2]}"#).unwrap();
        assert!(bad.into_point().is_err());
    }
}
