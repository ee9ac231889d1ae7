//! Named trainable parameters with accumulated gradients.

use std::collections::HashMap;

use rand::Rng;

use crate::array::DenseArray;
use crate::error::{Result, TmurError};
use crate::seeding;

/// Handle to a parameter inside a [`ParamStore`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ParamId(pub(crate) usize);

impl ParamId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Debug)]
pub struct Parameter {
    pub name: String,
    pub value: DenseArray,
    pub grad: DenseArray,
}

/// Ordered collection of parameters. Registration order is part of the
/// model contract: serialization and optimizer state both follow it.
#[derive(Clone, Debug, Default)]
pub struct ParamStore {
    items: Vec<Parameter>,
    index: HashMap<String, usize>,
}

impl ParamStore {
    pub fn new() -> Self {
        ParamStore::default()
    }

    pub fn register(&mut self, name: impl Into<String>, value: DenseArray) -> Result<ParamId> {
        let name = name.into();
        if self.index.contains_key(&name) {
            return Err(TmurError::state(format!(
                "parameter '{name}' registered twice"
            )));
        }
        let grad = DenseArray::zeros(value.rows(), value.cols());
        let id = ParamId(self.items.len());
        self.index.insert(name.clone(), id.0);
        self.items.push(Parameter { name, value, grad });
        Ok(id)
    }

    /// Xavier-uniform weight matrix: `U(-a, a)` with
    /// `a = sqrt(6 / (fan_in + fan_out))`. The stream is derived from the
    /// run seed and the parameter name, so adding parameters elsewhere never
    /// shifts this one's initial values.
    pub fn register_xavier(
        &mut self,
        name: impl Into<String>,
        rows: usize,
        cols: usize,
        seed: u64,
    ) -> Result<ParamId> {
        let name = name.into();
        let a = (6.0 / (rows + cols) as f64).sqrt();
        let mut rng = seeding::stream(seed, &format!("init/{name}"));
        let mut value = DenseArray::zeros(rows, cols);
        for v in value.data_mut() {
            *v = rng.gen_range(-a..a);
        }
        self.register(name, value)
    }

    pub fn register_zeros(
        &mut self,
        name: impl Into<String>,
        rows: usize,
        cols: usize,
    ) -> Result<ParamId> {
        self.register(name, DenseArray::zeros(rows, cols))
    }

    pub fn register_ones(
        &mut self,
        name: impl Into<String>,
        rows: usize,
        cols: usize,
    ) -> Result<ParamId> {
        self.register(name, DenseArray::filled(rows, cols, 1.0))
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn get(&self, id: ParamId) -> &Parameter {
        &self.items[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Parameter {
        &mut self.items[id.0]
    }

    pub fn find(&self, name: &str) -> Option<ParamId> {
        self.index.get(name).copied().map(ParamId)
    }

    /// Iterate in registration order.
    pub fn iter(&self) -> impl Iterator<Item = (ParamId, &Parameter)> {
        self.items.iter().enumerate().map(|(i, p)| (ParamId(i), p))
    }

    pub fn zero_grads(&mut self) {
        for p in &mut self.items {
            for g in p.grad.data_mut() {
                *g = 0.0;
            }
        }
    }

    pub(crate) fn accumulate_grad(&mut self, id: ParamId, delta: &DenseArray) {
        let grad = &mut self.items[id.0].grad;
        debug_assert_eq!(grad.shape(), delta.shape());
        for (g, d) in grad.data_mut().iter_mut().zip(delta.data()) {
            *g += d;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_duplicate_names() {
        let mut store = ParamStore::new();
        store.register("w", DenseArray::zeros(2, 2)).unwrap();
        assert!(store.register("w", DenseArray::zeros(2, 2)).is_err());
    }

    #[test]
    fn xavier_init_is_seeded_and_bounded() {
        let mut a = ParamStore::new();
        let mut b = ParamStore::new();
        let ia = a.register_xavier("layer.weight", 4, 6, 3407).unwrap();
        let ib = b.register_xavier("layer.weight", 4, 6, 3407).unwrap();
        assert_eq!(a.get(ia).value, b.get(ib).value);
        let bound = (6.0 / 10.0f64).sqrt();
        assert!(a.get(ia).value.data().iter().all(|v| v.abs() < bound));
        // A different seed produces different values.
        let mut c = ParamStore::new();
        let ic = c.register_xavier("layer.weight", 4, 6, 7).unwrap();
        assert_ne!(a.get(ia).value, c.get(ic).value);
    }

    #[test]
    fn init_depends_on_name_not_registration_order() {
        let mut a = ParamStore::new();
        a.register_xavier("first", 3, 3, 42).unwrap();
        let wa = a.register_xavier("target", 3, 3, 42).unwrap();
        let mut b = ParamStore::new();
        let wb = b.register_xavier("target", 3, 3, 42).unwrap();
        assert_eq!(a.get(wa).value, b.get(wb).value);
    }
}
