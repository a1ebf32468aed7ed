//! Label-producing decision rules.

use serde::ser::{SerializeStruct, Serializer};
use serde::Serialize;

use crate::dataset::{Dataset, DatasetId};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum Classifier {
    /// Predicts +1 iff `x[feature] > tau`. `tau` may be infinite.
    Threshold { feature: usize, tau: f64 },
    /// Predicts +1 iff `<weights, x> + bias > 0`.
    Linear { weights: Vec<f64>, bias: f64 },
    /// Predicts `polarity` iff `x[feature] > tau`, else `-polarity`.
    Stump {
        feature: usize,
        tau: f64,
        polarity: i8,
    },
    /// Fixed predictions, only evaluable on the dataset they were bound to.
    Enumerated {
        dataset: DatasetId,
        predictions: Vec<i8>,
    },
}

impl Classifier {
    pub fn threshold(tau: f64) -> Self {
        Classifier::Threshold { feature: 0, tau }
    }

    /// Always predicts `label`.
    pub fn constant(label: i8) -> Self {
        Classifier::Stump {
            feature: 0,
            tau: f64::NEG_INFINITY,
            polarity: label.signum(),
        }
    }

    pub fn enumerated(data: &Dataset, predictions: Vec<i8>) -> Result<Self> {
        if predictions.len() != data.len() {
            return Err(Error::InvalidParameter(format!(
                "{} predictions for {} examples",
                predictions.len(),
                data.len()
            )));
        }
        if predictions.iter().any(|&p| p != 1 && p != -1) {
            return Err(Error::InvalidParameter("predictions must be -1 or +1".into()));
        }
        Ok(Classifier::Enumerated {
            dataset: data.id(),
            predictions,
        })
    }

    /// Enumerated classifier that is correct exactly where `correct[j]` holds.
    pub fn from_correctness(data: &Dataset, correct: &[bool]) -> Result<Self> {
        if correct.len() != data.len() {
            return Err(Error::InvalidParameter(format!(
                "{} correctness flags for {} examples",
                correct.len(),
                data.len()
            )));
        }
        let predictions = data
            .labels()
            .iter()
            .zip(correct)
            .map(|(&y, &c)| if c { y } else { -y })
            .collect();
        Ok(Classifier::Enumerated {
            dataset: data.id(),
            predictions,
        })
    }

    /// Fails unless the classifier can be evaluated on `data`.
    pub fn check(&self, data: &Dataset) -> Result<()> {
        match self {
            Classifier::Threshold { feature, .. } | Classifier::Stump { feature, .. } => {
                if *feature >= data.dim() {
                    return Err(Error::DimensionMismatch {
                        expected: feature + 1,
                        found: data.dim(),
                    });
                }
            }
            Classifier::Linear { weights, .. } => {
                if weights.len() != data.dim() {
                    return Err(Error::DimensionMismatch {
                        expected: weights.len(),
                        found: data.dim(),
                    });
                }
            }
            Classifier::Enumerated {
                dataset,
                predictions,
            } => {
                if *dataset != data.id() || predictions.len() != data.len() {
                    return Err(Error::ForeignDataset);
                }
            }
        }
        Ok(())
    }

    fn predict_unchecked(&self, data: &Dataset, j: usize) -> i8 {
        match self {
            Classifier::Threshold { feature, tau } => {
                if data.value(j, *feature) > *tau {
                    1
                } else {
                    -1
                }
            }
            Classifier::Linear { weights, bias } => {
                let s: f64 = weights.iter().zip(data.row(j)).map(|(w, x)| w * x).sum::<f64>() + bias;
                if s > 0.0 {
                    1
                } else {
                    -1
                }
            }
            Classifier::Stump {
                feature,
                tau,
                polarity,
            } => {
                if data.value(j, *feature) > *tau {
                    *polarity
                } else {
                    -*polarity
                }
            }
            Classifier::Enumerated { predictions, .. } => predictions[j],
        }
    }

    pub fn predictions(&self, data: &Dataset) -> Result<Vec<i8>> {
        self.check(data)?;
        Ok((0..data.len()).map(|j| self.predict_unchecked(data, j)).collect())
    }

    /// Per-example correctness flags on `data`.
    pub fn correct(&self, data: &Dataset) -> Result<Vec<bool>> {
        self.check(data)?;
        Ok((0..data.len())
            .map(|j| self.predict_unchecked(data, j) == data.label(j))
            .collect())
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Classifier::Threshold { .. } => "threshold",
            Classifier::Linear { .. } => "linear",
            Classifier::Stump { .. } => "stump",
            Classifier::Enumerated { .. } => "enumerated",
        }
    }

    /// Threshold value for threshold classifiers and stumps.
    pub fn tau(&self) -> Option<f64> {
        match self {
            Classifier::Threshold { tau, .. } | Classifier::Stump { tau, .. } => Some(*tau),
            _ => None,
        }
    }
}

/// FNV-1a digest of a prediction vector; a compact snapshot of a strategy.
pub fn fingerprint(predictions: &[i8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &p in predictions {
        h ^= p as u8 as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Serializes non-finite reals as the strings `"inf"` / `"-inf"` / `"nan"`,
/// which plain JSON numbers cannot carry.
pub(crate) fn ext_real<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else if v.is_nan() {
        s.serialize_str("nan")
    } else if *v > 0.0 {
        s.serialize_str("inf")
    } else {
        s.serialize_str("-inf")
    }
}

pub(crate) fn ext_reals<S: Serializer>(vs: &[f64], s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    struct R(f64);
    impl Serialize for R {
        fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
            ext_real(&self.0, s)
        }
    }
    let mut seq = s.serialize_seq(Some(vs.len()))?;
    for v in vs {
        seq.serialize_element(&R(*v))?;
    }
    seq.end()
}

impl Serialize for Classifier {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        struct Real(f64);
        impl Serialize for Real {
            fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
                ext_real(&self.0, s)
            }
        }
        match self {
            Classifier::Threshold { feature, tau } => {
                let mut st = s.serialize_struct("Classifier", 3)?;
                st.serialize_field("kind", "threshold")?;
                st.serialize_field("feature", feature)?;
                st.serialize_field("tau", &Real(*tau))?;
                st.end()
            }
            Classifier::Linear { weights, bias } => {
                let mut st = s.serialize_struct("Classifier", 3)?;
                st.serialize_field("kind", "linear")?;
                st.serialize_field("weights", weights)?;
                st.serialize_field("bias", bias)?;
                st.end()
            }
            Classifier::Stump {
                feature,
                tau,
                polarity,
            } => {
                let mut st = s.serialize_struct("Classifier", 4)?;
                st.serialize_field("kind", "stump")?;
                st.serialize_field("feature", feature)?;
                st.serialize_field("tau", &Real(*tau))?;
                st.serialize_field("polarity", polarity)?;
                st.end()
            }
            Classifier::Enumerated { predictions, .. } => {
                let mut st = s.serialize_struct("Classifier", 3)?;
                st.serialize_field("kind", "enumerated")?;
                st.serialize_field("len", &predictions.len())?;
                st.serialize_field("fingerprint", &format!("{:016x}", fingerprint(predictions)))?;
                st.end()
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(xs: &[f64], ys: &[i8]) -> Dataset {
        Dataset::from_scalars(xs.to_vec(), ys.to_vec()).unwrap()
    }

    #[test]
    fn infinite_thresholds_are_constants() {
        let d = line(&[-5.0, 0.0, 5.0], &[1, 1, 1]);
        assert_eq!(Classifier::threshold(f64::NEG_INFINITY).predictions(&d).unwrap(), vec![1, 1, 1]);
        assert_eq!(Classifier::threshold(f64::INFINITY).predictions(&d).unwrap(), vec![-1, -1, -1]);
        assert_eq!(Classifier::constant(-1).predictions(&d).unwrap(), vec![-1, -1, -1]);
    }

    #[test]
    fn threshold_is_strict() {
        let d = line(&[0.0, 0.5], &[1, 1]);
        assert_eq!(Classifier::threshold(0.0).predictions(&d).unwrap(), vec![-1, 1]);
    }

    #[test]
    fn stump_polarity() {
        let d = line(&[-1.0, 1.0], &[1, -1]);
        let s = Classifier::Stump { feature: 0, tau: 0.0, polarity: -1 };
        assert_eq!(s.correct(&d).unwrap(), vec![true, true]);
    }

    #[test]
    fn enumerated_is_bound_to_its_dataset() {
        let d = line(&[0.0, 1.0], &[1, -1]);
        let e = Classifier::enumerated(&d, vec![1, 1]).unwrap();
        assert_eq!(e.correct(&d).unwrap(), vec![true, false]);
        let other = line(&[0.0, 1.0], &[1, -1]);
        assert!(matches!(e.correct(&other), Err(Error::ForeignDataset)));
        assert!(e.correct(&d.clone()).is_ok());
    }

    #[test]
    fn dimension_mismatch() {
        let d = line(&[0.0], &[1]);
        let h = Classifier::Linear { weights: vec![1.0, 1.0], bias: 0.0 };
        assert!(matches!(h.predictions(&d), Err(Error::DimensionMismatch { .. })));
        let t = Classifier::Threshold { feature: 1, tau: 0.0 };
        assert!(t.predictions(&d).is_err());
    }

    #[test]
    fn serializes_infinite_tau_as_string() {
        let s = serde_json::to_string(&Classifier::threshold(f64::NEG_INFINITY)).unwrap();
        assert_eq!(s, r#"{"kind":"threshold","feature":0,"tau":"-inf"}"#);
    }
}
