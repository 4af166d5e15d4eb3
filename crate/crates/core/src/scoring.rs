use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::Label;
use crate::error::{Error, Result};

/// How a pair score is compared with a threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    /// Score is a cosine similarity; high means same meaning.
    #[serde(rename = "cosine")]
    CosineSim,
    /// Score is a Euclidean distance; low means same meaning.
    #[serde(rename = "euclidean")]
    Euclidean,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::CosineSim => "cosine",
            Mode::Euclidean => "euclidean",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cosine" => Ok(Mode::CosineSim),
            "euclidean" => Ok(Mode::Euclidean),
            other => Err(Error::InvalidConfig(format!("unknown mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Decision {
    pub label: Label,
    pub score: f64,
    pub mode: Mode,
    pub threshold: f64,
}

impl Decision {
    pub fn new(score: f64, mode: Mode, threshold: f64) -> Self {
        Self {
            label: decide(score, mode, threshold),
            score,
            mode,
            threshold,
        }
    }
}

fn check_lengths(u: &[f64], v: &[f64]) -> Result<()> {
    if u.len() != v.len() {
        return Err(Error::LengthMismatch {
            left: u.len(),
            right: v.len(),
        });
    }
    Ok(())
}

pub fn cosine_similarity(u: &[f64], v: &[f64]) -> Result<f64> {
    check_lengths(u, v)?;
    let (mut dot, mut nu, mut nv) = (0.0, 0.0, 0.0);
    for (a, b) in u.iter().zip(v) {
        dot += a * b;
        nu += a * a;
        nv += b * b;
    }
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::DegenerateVector);
    }
    Ok((dot / (nu.sqrt() * nv.sqrt())).clamp(-1.0, 1.0))
}

/// `1 - cosine_similarity(u, v)`.
pub fn cosine_distance(u: &[f64], v: &[f64]) -> Result<f64> {
    cosine_similarity(u, v).map(|s| 1.0 - s)
}

pub fn euclidean_distance(u: &[f64], v: &[f64]) -> Result<f64> {
    check_lengths(u, v)?;
    Ok(u.iter()
        .zip(v)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt())
}

/// The score of `u` against `v` under `mode`.
pub fn score(mode: Mode, u: &[f64], v: &[f64]) -> Result<f64> {
    match mode {
        Mode::CosineSim => cosine_similarity(u, v),
        Mode::Euclidean => euclidean_distance(u, v),
    }
}

/// Similarity at or above `threshold` is SAME; distance strictly below it is
/// SAME. A cosine score equal to the threshold is therefore SAME.
pub fn decide(score: f64, mode: Mode, threshold: f64) -> Label {
    let same = match mode {
        Mode::CosineSim => score >= threshold,
        Mode::Euclidean => score < threshold,
    };
    if same {
        Label::Same
    } else {
        Label::Different
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn cosine_cases() {
        let u = [0.3, -2.0, 5.0];
        assert_abs_diff_eq!(cosine_similarity(&u, &u).unwrap(), 1.0, epsilon = 1e-15);
        assert_eq!(cosine_similarity(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert_abs_diff_eq!(
            cosine_similarity(&[1.0, 0.0], &[1.0, 1.0]).unwrap(),
            std::f64::consts::FRAC_1_SQRT_2,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            cosine_distance(&[1.0, 0.0], &[0.0, 1.0]).unwrap(),
            1.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn cosine_errors() {
        assert!(matches!(
            cosine_similarity(&[0.0, 0.0], &[1.0, 0.0]),
            Err(Error::DegenerateVector)
        ));
        assert!(matches!(
            cosine_similarity(&[1.0], &[1.0, 0.0]),
            Err(Error::LengthMismatch { left: 1, right: 2 })
        ));
    }

    #[test]
    fn euclidean_cases() {
        assert_eq!(euclidean_distance(&[1.5, 2.0], &[1.5, 2.0]).unwrap(), 0.0);
        assert_eq!(euclidean_distance(&[0.0, 0.0], &[3.0, 4.0]).unwrap(), 5.0);
        assert_eq!(euclidean_distance(&[1.0; 4], &[0.0; 4]).unwrap(), 2.0);
        assert!(euclidean_distance(&[1.0], &[]).is_err());
    }

    #[test]
    fn decision_rule() {
        assert_eq!(decide(0.95, Mode::CosineSim, 0.917), Label::Same);
        assert_eq!(decide(0.5, Mode::CosineSim, 0.917), Label::Different);
        assert_eq!(decide(1.0, Mode::Euclidean, 1.148), Label::Same);
        assert_eq!(decide(2.0, Mode::Euclidean, 1.148), Label::Different);
        assert_eq!(decide(0.917, Mode::CosineSim, 0.917), Label::Same);
        assert_eq!(decide(1.148, Mode::Euclidean, 1.148), Label::Different);
        let d = Decision::new(0.95, Mode::CosineSim, 0.917);
        assert_eq!(d.label, Label::Same);
    }

    #[test]
    fn mode_names() {
        assert_eq!("cosine".parse::<Mode>().unwrap(), Mode::CosineSim);
        assert_eq!("euclidean".parse::<Mode>().unwrap(), Mode::Euclidean);
        assert!("manhattan".parse::<Mode>().is_err());
        assert_eq!(serde_json::to_string(&Mode::Euclidean).unwrap(), "\"euclidean\"");
    }

    fn vec3() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-10.0f64..10.0, 3)
    }

    proptest! {
        #[test]
        fn cosine_is_scale_invariant(u in vec3(), v in vec3(), c in 0.001f64..1000.0) {
            prop_assume!(u.iter().any(|x| x.abs() > 1e-3) && v.iter().any(|x| x.abs() > 1e-3));
            let scaled: Vec<f64> = u.iter().map(|x| x * c).collect();
            let a = cosine_similarity(&u, &v).unwrap();
            let b = cosine_similarity(&scaled, &v).unwrap();
            prop_assert!((a - b).abs() < 1e-12);
            prop_assert!((-1.0..=1.0).contains(&a));
        }

        #[test]
        fn euclidean_is_a_metric(a in vec3(), b in vec3(), c in vec3()) {
            let ab = euclidean_distance(&a, &b).unwrap();
            let ba = euclidean_distance(&b, &a).unwrap();
            let bc = euclidean_distance(&b, &c).unwrap();
            let ac = euclidean_distance(&a, &c).unwrap();
            prop_assert_eq!(ab, ba);
            prop_assert!(ac <= ab + bc + 1e-12);
            prop_assert!(ab >= 0.0);
        }

        #[test]
        fn cosine_decision_is_monotone(s in -1.0f64..1.0, bump in 0.0f64..1.0, t in -1.0f64..1.0) {
            if decide(s, Mode::CosineSim, t) == Label::Same {
                prop_assert_eq!(decide(s + bump, Mode::CosineSim, t), Label::Same);
            }
            if decide(s, Mode::Euclidean, t) == Label::Same {
                prop_assert_eq!(decide(s - bump, Mode::Euclidean, t), Label::Same);
            }
        }
    }
}
