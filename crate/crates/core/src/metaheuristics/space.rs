use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::OptimizeError;

/// Whether a dimension is searched as a real number or decoded to an integer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParamKind {
    Integer,
    Continuous,
}

/// One bounded dimension of a search space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSpec {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub kind: ParamKind,
}

impl ParamSpec {
    pub fn integer(name: impl Into<String>, lower: f64, upper: f64) -> Self {
        Self {
            name: name.into(),
            lower,
            upper,
            kind: ParamKind::Integer,
        }
    }

    pub fn continuous(name: impl Into<String>, lower: f64, upper: f64) -> Self {
        Self {
            name: name.into(),
            lower,
            upper,
            kind: ParamKind::Continuous,
        }
    }

    #[inline]
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    #[inline]
    pub fn clamp(&self, value: f64) -> f64 {
        value.clamp(self.lower, self.upper)
    }

    /// Maps a raw gene to the value handed to the objective's consumer.
    ///
    /// Integer dimensions round half away from zero and then clamp, so an
    /// integer range whose bounds are not themselves integers still decodes
    /// inside `[lower, upper]`.
    pub fn decode(&self, gene: f64) -> f64 {
        match self.kind {
            ParamKind::Continuous => self.clamp(gene),
            ParamKind::Integer => {
                let rounded = self.clamp(gene).round();
                if rounded > self.upper {
                    self.upper.floor()
                } else if rounded < self.lower {
                    self.lower.ceil()
                } else {
                    rounded
                }
            }
        }
    }
}

/// Ordered list of dimensions; the order fixes the gene layout of every candidate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    params: Vec<ParamSpec>,
}

impl SearchSpace {
    pub fn new(params: Vec<ParamSpec>) -> Result<Self, OptimizeError> {
        if params.is_empty() {
            return Err(OptimizeError::InvalidSpace(
                "search space needs at least one parameter".into(),
            ));
        }
        let mut seen = HashSet::new();
        for p in &params {
            if !seen.insert(p.name.as_str()) {
                return Err(OptimizeError::InvalidSpace(format!(
                    "duplicate parameter name `{}`",
                    p.name
                )));
            }
            if !(p.lower.is_finite() && p.upper.is_finite()) || p.lower >= p.upper {
                return Err(OptimizeError::InvalidSpace(format!(
                    "parameter `{}` needs finite bounds with lower < upper, got [{}, {}]",
                    p.name, p.lower, p.upper
                )));
            }
        }
        Ok(Self { params })
    }

    /// The same box `[lower, upper]` in every one of `dims` continuous dimensions.
    pub fn uniform(dims: usize, lower: f64, upper: f64) -> Result<Self, OptimizeError> {
        Self::new(
            (0..dims)
                .map(|i| ParamSpec::continuous(format!("x{i}"), lower, upper))
                .collect(),
        )
    }

    #[inline]
    pub fn dims(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[ParamSpec] {
        &self.params
    }

    pub fn param(&self, name: &str) -> Option<&ParamSpec> {
        self.params.iter().find(|p| p.name == name)
    }

    pub fn clamp(&self, genes: &mut [f64]) {
        for (g, p) in genes.iter_mut().zip(&self.params) {
            *g = p.clamp(*g);
        }
    }

    pub fn contains(&self, genes: &[f64]) -> bool {
        genes.len() == self.dims()
            && genes
                .iter()
                .zip(&self.params)
                .all(|(g, p)| *g >= p.lower && *g <= p.upper)
    }

    pub(crate) fn check_len(&self, len: usize) -> Result<(), OptimizeError> {
        if len != self.dims() {
            return Err(OptimizeError::DimensionMismatch {
                expected: self.dims(),
                found: len,
            });
        }
        Ok(())
    }

    /// Decodes a gene vector into named values (integers rounded, everything clamped).
    pub fn decode(&self, genes: &[f64]) -> Result<DecodedParams, OptimizeError> {
        self.check_len(genes.len())?;
        Ok(DecodedParams(
            self.params
                .iter()
                .zip(genes)
                .map(|(p, g)| (p.name.clone(), p.decode(*g)))
                .collect(),
        ))
    }
}

/// Decoded values keyed by parameter name, in search-space order.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodedParams(Vec<(String, f64)>);

impl DecodedParams {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.0.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.0.iter().map(|(n, v)| (n.as_str(), *v))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for DecodedParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (name, value)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{name}={value}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_empty_and_inverted_spaces() {
        assert!(SearchSpace::new(vec![]).is_err());
        assert!(SearchSpace::new(vec![ParamSpec::continuous("a", 1.0, 1.0)]).is_err());
        assert!(SearchSpace::new(vec![ParamSpec::continuous("a", 2.0, 1.0)]).is_err());
        let dup = vec![
            ParamSpec::continuous("a", 0.0, 1.0),
            ParamSpec::integer("a", 0.0, 3.0),
        ];
        assert!(matches!(
            SearchSpace::new(dup),
            Err(OptimizeError::InvalidSpace(msg)) if msg.contains("duplicate")
        ));
    }

    #[test]
    fn integer_decode_rounds_to_nearest() {
        let p = ParamSpec::integer("batch_size", 16.0, 256.0);
        assert_eq!(p.decode(23.6), 24.0);
        assert_eq!(p.decode(23.5), 24.0);
        assert_eq!(p.decode(23.4), 23.0);
    }

    #[test]
    fn decode_on_bounds_is_identity() {
        let p = ParamSpec::integer("epochs", 10.0, 1000.0);
        assert_eq!(p.decode(10.0), 10.0);
        assert_eq!(p.decode(1000.0), 1000.0);
        let lr = ParamSpec::continuous("lr", 1e-4, 0.5);
        assert_eq!(lr.decode(1e-4), 1e-4);
        assert_eq!(lr.decode(0.5), 0.5);
    }

    #[test]
    fn continuous_decode_passes_through() {
        let lr = ParamSpec::continuous("learning_rate", 1e-4, 0.5);
        assert_eq!(lr.decode(0.1), 0.1);
    }

    #[test]
    fn integer_decode_stays_inside_fractional_bounds() {
        let p = ParamSpec::integer("k", 0.6, 3.4);
        assert_eq!(p.decode(0.6), 1.0);
        assert_eq!(p.decode(3.4), 3.0);
    }

    #[test]
    fn decode_keys_by_name() {
        let space = SearchSpace::new(vec![
            ParamSpec::integer("batch_size", 16.0, 256.0),
            ParamSpec::continuous("learning_rate", 1e-4, 0.5),
        ])
        .unwrap();
        let d = space.decode(&[23.6, 0.1]).unwrap();
        assert_eq!(d.get("batch_size"), Some(24.0));
        assert_eq!(d.get("learning_rate"), Some(0.1));
        assert_eq!(d.get("epochs"), None);
        assert!(space.decode(&[1.0]).is_err());
    }
}
