//! Named parameter tensors shared by layers, the optimizer, gradient checks
//! and checkpoints.

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Anything that owns trainable tensors in a fixed, named order.
pub trait Params {
    fn params(&self) -> Vec<(String, &Tensor)>;
    fn params_mut(&mut self) -> Vec<(String, &mut Tensor)>;

    fn param_set(&self) -> ParamSet {
        ParamSet {
            entries: self
                .params()
                .into_iter()
                .map(|(name, t)| (name, t.clone()))
                .collect(),
        }
    }

    /// Overwrites every parameter from `set`, matching by name and shape.
    fn load_param_set(&mut self, set: &ParamSet) -> Result<()> {
        let mut targets = self.params_mut();
        if targets.len() != set.len() {
            return Err(Error::State(format!(
                "parameter count mismatch: {} vs {}",
                targets.len(),
                set.len()
            )));
        }
        for (name, target) in targets.iter_mut() {
            let source = set
                .get(name)
                .ok_or_else(|| Error::State(format!("missing parameter {name}")))?;
            if source.shape() != target.shape() {
                return Err(Error::dim("load_param_set", target.shape(), source.shape()));
            }
            target.data_mut().copy_from_slice(source.data());
        }
        Ok(())
    }

    fn zero_params(&mut self) {
        for (_, t) in self.params_mut() {
            t.data_mut().fill(0.0);
        }
    }

    /// Elementwise `self += other`; both sides must have identical layouts.
    fn accumulate(&mut self, other: &Self) -> Result<()>
    where
        Self: Sized,
    {
        for ((name, dst), (_, src)) in self.params_mut().into_iter().zip(other.params()) {
            if dst.shape() != src.shape() {
                return Err(Error::State(format!("layout mismatch at {name}")));
            }
            dst.add_assign(src)?;
        }
        Ok(())
    }

    fn num_values(&self) -> usize {
        self.params().iter().map(|(_, t)| t.len()).sum()
    }
}

/// Ordered list of named tensors.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParamSet {
    entries: Vec<(String, Tensor)>,
}

impl ParamSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, tensor: Tensor) {
        let name = name.into();
        match self.entries.iter_mut().find(|(n, _)| *n == name) {
            Some((_, t)) => *t = tensor,
            None => self.entries.push((name, tensor)),
        }
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.entries.iter().find(|(n, _)| n == name).map(|(_, t)| t)
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Tensor> {
        self.entries
            .iter_mut()
            .find(|(n, _)| n == name)
            .map(|(_, t)| t)
    }

    pub fn require(&self, name: &str) -> Result<&Tensor> {
        self.get(name)
            .ok_or_else(|| Error::State(format!("missing parameter {name}")))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.entries.iter().map(|(n, t)| (n.as_str(), t))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (&str, &mut Tensor)> {
        self.entries.iter_mut().map(|(n, t)| (n.as_str(), t))
    }

    pub fn names(&self) -> Vec<&str> {
        self.entries.iter().map(|(n, _)| n.as_str()).collect()
    }

    /// Prefixes every name with `prefix.` and appends to `self`.
    pub fn extend_prefixed(&mut self, prefix: &str, other: ParamSet) {
        for (n, t) in other.entries {
            self.entries.push((format!("{prefix}.{n}"), t));
        }
    }
}

impl FromIterator<(String, Tensor)> for ParamSet {
    fn from_iter<I: IntoIterator<Item = (String, Tensor)>>(iter: I) -> Self {
        let mut set = ParamSet::new();
        for (n, t) in iter {
            set.insert(n, t);
        }
        set
    }
}

/// Prepends `prefix.` to each name of a nested parameter list.
pub(crate) fn prefixed<T>(prefix: &str, inner: Vec<(String, T)>) -> Vec<(String, T)> {
    inner
        .into_iter()
        .map(|(n, t)| (format!("{prefix}.{n}"), t))
        .collect()
}
