use serde::{Deserialize, Serialize};

use super::DomainError;

/// How arm identity enters the model input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Encoding {
    /// One model and one history per arm; inputs are the raw context.
    Disjoint,
    /// A single shared model; inputs are the context with a one-hot arm indicator appended.
    OneHot,
}

impl Encoding {
    pub fn other(self) -> Self {
        match self {
            Self::Disjoint => Self::OneHot,
            Self::OneHot => Self::Disjoint,
        }
    }

    /// Model input dimension for contexts of width `p` and `arms` arms.
    pub fn input_dim(self, p: usize, arms: usize) -> usize {
        match self {
            Self::Disjoint => p,
            Self::OneHot => p + arms,
        }
    }
}

impl std::fmt::Display for Encoding {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Disjoint => "disjoint",
            Self::OneHot => "one-hot",
        })
    }
}

/// A model input together with the encoding that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedPoint {
    pub values: Vec<f64>,
    pub encoding: Encoding,
}

/// Appends the indicator `e_k` of length `arms` to `x`.
pub fn encode_onehot(x: &[f64], arm: usize, arms: usize) -> Result<EncodedPoint, DomainError> {
    if arm >= arms {
        return Err(DomainError::ArmIndex { arm, arms });
    }
    let mut values = Vec::with_capacity(x.len() + arms);
    values.extend_from_slice(x);
    values.extend((0..arms).map(|k| if k == arm { 1.0 } else { 0.0 }));
    Ok(EncodedPoint {
        values,
        encoding: Encoding::OneHot,
    })
}

/// Encodes `x` for `arm` under either encoding.
pub fn encode(
    encoding: Encoding,
    x: &[f64],
    arm: usize,
    arms: usize,
) -> Result<EncodedPoint, DomainError> {
    match encoding {
        Encoding::OneHot => encode_onehot(x, arm, arms),
        Encoding::Disjoint => {
            if arm >= arms {
                return Err(DomainError::ArmIndex { arm, arms });
            }
            Ok(EncodedPoint {
                values: x.to_vec(),
                encoding: Encoding::Disjoint,
            })
        }
    }
}
