use std::fmt;

pub const FEATURE_COUNT: usize = 9;

pub const FEATURE_NAMES: [&str; FEATURE_COUNT] = [
    "danceability",
    "valence",
    "energy",
    "tempo",
    "loudness",
    "speechiness",
    "instrumentalness",
    "liveness",
    "acousticness",
];

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FeatureError {
    #[error("expected {} feature values ({}), found {found}", FEATURE_COUNT, FEATURE_NAMES.join(", "))]
    WrongCount { found: usize },
    #[error("feature '{name}' = {value} is outside [0, 1]")]
    OutOfRange { name: &'static str, value: f64 },
    #[error("unknown feature '{0}' (expected one of: {names})", names = FEATURE_NAMES.join(", "))]
    UnknownFeature(String),
    #[error("could not parse '{0}' as a number")]
    Parse(String),
}

pub fn feature_index(name: &str) -> Result<usize, FeatureError> {
    let lower = name.trim().to_ascii_lowercase();
    FEATURE_NAMES
        .iter()
        .position(|&n| n == lower)
        .ok_or_else(|| FeatureError::UnknownFeature(name.to_string()))
}

/// Nine rescaled audio descriptors, each in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AudioFeatures([f64; FEATURE_COUNT]);

impl AudioFeatures {
    pub fn new(values: [f64; FEATURE_COUNT]) -> Result<Self, FeatureError> {
        for (i, &v) in values.iter().enumerate() {
            if !(0.0..=1.0).contains(&v) {
                return Err(FeatureError::OutOfRange {
                    name: FEATURE_NAMES[i],
                    value: v,
                });
            }
        }
        Ok(Self(values))
    }

    pub fn from_slice(values: &[f64]) -> Result<Self, FeatureError> {
        let arr: [f64; FEATURE_COUNT] =
            values.try_into().map_err(|_| FeatureError::WrongCount {
                found: values.len(),
            })?;
        Self::new(arr)
    }

    /// Parses comma-separated values in [`FEATURE_NAMES`] order.
    pub fn parse_list(text: &str) -> Result<Self, FeatureError> {
        let values = text
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|_| FeatureError::Parse(t.trim().to_string()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_slice(&values)
    }

    pub fn uniform(value: f64) -> Result<Self, FeatureError> {
        Self::new([value; FEATURE_COUNT])
    }

    pub fn values(&self) -> &[f64; FEATURE_COUNT] {
        &self.0
    }

    pub fn get(&self, index: usize) -> f64 {
        self.0[index]
    }

    pub fn with(mut self, index: usize, value: f64) -> Result<Self, FeatureError> {
        if index >= FEATURE_COUNT {
            return Err(FeatureError::WrongCount { found: index + 1 });
        }
        self.0[index] = value;
        Self::new(self.0)
    }
}

impl fmt::Display for AudioFeatures {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|v| format!("{v}")).collect();
        f.write_str(&parts.join(","))
    }
}

/// `Σᵢ (predictedᵢ − targetᵢ)²` accumulated in index order. Both the fitness
/// and its consumers go through this one function.
#[inline]
pub fn squared_distance(predicted: &[f64], target: &AudioFeatures) -> f64 {
    debug_assert_eq!(predicted.len(), FEATURE_COUNT);
    predicted
        .iter()
        .zip(target.values())
        .map(|(p, t)| (p - t) * (p - t))
        .sum()
}
