use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::def::{InitRule, ParamSpec};
use crate::error::{mismatch, Error, Result};

/// One named parameter array with its declared shape.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamArray {
    pub shape: Vec<usize>,
    pub data: Vec<f32>,
}

impl ParamArray {
    pub fn new(shape: Vec<usize>, data: Vec<f32>) -> Result<Self> {
        let n: usize = shape.iter().product();
        if n != data.len() {
            return Err(mismatch!("{} values for shape {shape:?}", data.len()));
        }
        Ok(Self { shape, data })
    }
}

/// Parameter table keyed by layer-qualified name, iterated in name order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct NetworkWeights {
    entries: BTreeMap<String, ParamArray>,
}

impl NetworkWeights {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, array: ParamArray) -> Option<ParamArray> {
        self.entries.insert(name.into(), array)
    }

    pub fn get(&self, name: &str) -> Option<&ParamArray> {
        self.entries.get(name)
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut ParamArray> {
        self.entries.get_mut(name)
    }

    pub fn remove(&mut self, name: &str) -> Option<ParamArray> {
        self.entries.remove(name)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &ParamArray)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn parameter_count(&self) -> usize {
        self.entries.values().map(|a| a.data.len()).sum()
    }

    /// Seeded draw for every spec, in spec order.
    ///
    /// Weights and biases: uniform `±sqrt(1/fan_in)`. Batch-norm statistics:
    /// scale `U[0.8, 1.2)`, shift and mean `U[-0.1, 0.1)`, variance `U[0.5, 1.5)`.
    pub fn seeded(specs: &[ParamSpec], seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Self::new();
        for spec in specs {
            let n: usize = spec.shape.iter().product();
            let (lo, hi) = match spec.init {
                InitRule::FanIn(fan_in) => {
                    let b = libm::sqrtf(1.0 / fan_in.max(1) as f32);
                    (-b, b)
                }
                InitRule::BnScale => (0.8, 1.2),
                InitRule::BnShift | InitRule::BnMean => (-0.1, 0.1),
                InitRule::BnVar => (0.5, 1.5),
            };
            let data = (0..n).map(|_| rng.random_range(lo..hi)).collect();
            out.insert(
                spec.name.clone(),
                ParamArray {
                    shape: spec.shape.clone(),
                    data,
                },
            );
        }
        out
    }

    /// Every spec present with the declared shape and nothing else.
    pub fn validate(&self, specs: &[ParamSpec]) -> Result<()> {
        for spec in specs {
            let a = self
                .entries
                .get(&spec.name)
                .ok_or_else(|| Error::MissingParameter(spec.name.clone()))?;
            if a.shape != spec.shape || a.data.len() != spec.shape.iter().product::<usize>() {
                return Err(Error::ParameterShape {
                    name: spec.name.clone(),
                    expected: spec.shape.clone(),
                    found: a.shape.clone(),
                });
            }
        }
        if self.entries.len() != specs.len() {
            let declared: BTreeMap<&str, ()> = specs.iter().map(|s| (s.name.as_str(), ())).collect();
            if let Some(orphan) = self.entries.keys().find(|k| !declared.contains_key(k.as_str())) {
                return Err(Error::UnexpectedParameter(orphan.clone()));
            }
        }
        Ok(())
    }
}
