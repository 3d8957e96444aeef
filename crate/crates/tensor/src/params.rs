//! Named parameter registry.
//!
//! Tensors are immutable, so a trainable weight is a [`Param`] cell whose
//! current value is swapped wholesale by the optimizer between unrolls.
//! Network structs and the [`ParamMap`] share the same cells.

use std::cell::RefCell;
use std::collections::HashMap;
use std::rc::Rc;

use crate::error::{Result, TensorError};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

#[derive(Clone)]
pub struct Param<S: Scalar> {
    cell: Rc<RefCell<Tensor<S>>>,
}

impl<S: Scalar> Param<S> {
    pub fn new(value: Tensor<S>) -> Self {
        assert!(value.requires_grad(), "parameters must require grad");
        Param {
            cell: Rc::new(RefCell::new(value)),
        }
    }

    /// Current value handle (cheap clone of the shared buffer).
    pub fn value(&self) -> Tensor<S> {
        self.cell.borrow().clone()
    }

    /// Replaces the value. The old tensor stays valid for any tape that
    /// still references it.
    pub fn set(&self, value: Tensor<S>) -> Result<()> {
        let cur = self.cell.borrow().shape().to_vec();
        if value.shape() != cur.as_slice() {
            return Err(TensorError::ShapeMismatch {
                op: "param set",
                lhs: cur,
                rhs: value.shape().to_vec(),
            });
        }
        assert!(value.requires_grad(), "parameters must require grad");
        *self.cell.borrow_mut() = value;
        Ok(())
    }

    pub fn shape(&self) -> Vec<usize> {
        self.cell.borrow().shape().to_vec()
    }

    pub fn numel(&self) -> usize {
        self.cell.borrow().numel()
    }

    pub fn grad(&self) -> Option<Vec<S>> {
        self.cell.borrow().grad()
    }

    pub fn clear_grad(&self) {
        self.cell.borrow().clear_grad();
    }
}

/// Ordered name -> parameter map. Iteration order is insertion order, which
/// makes optimizer updates and checkpoint layout deterministic.
pub struct ParamMap<S: Scalar> {
    entries: Vec<(String, Param<S>)>,
    index: HashMap<String, usize>,
}

impl<S: Scalar> ParamMap<S> {
    pub fn new() -> Self {
        ParamMap {
            entries: Vec::new(),
            index: HashMap::new(),
        }
    }

    /// Registers a fresh parameter under `name` and returns its handle.
    pub fn create(&mut self, name: impl Into<String>, value: Tensor<S>) -> Param<S> {
        let name = name.into();
        let param = Param::new(value);
        self.insert(name, param.clone()).expect("unique param name");
        param
    }

    pub fn insert(&mut self, name: String, param: Param<S>) -> Result<()> {
        if self.index.contains_key(&name) {
            return Err(TensorError::DuplicateParam(name));
        }
        self.index.insert(name.clone(), self.entries.len());
        self.entries.push((name, param));
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&Param<S>> {
        self.index.get(name).map(|&i| &self.entries[i].1)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Param<S>)> {
        self.entries.iter().map(|(n, p)| (n.as_str(), p))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total_params(&self) -> usize {
        self.entries.iter().map(|(_, p)| p.numel()).sum()
    }

    pub fn clear_grads(&self) {
        for (_, p) in &self.entries {
            p.clear_grad();
        }
    }

    /// Snapshot of all values as plain buffers (for cross-thread replicas).
    pub fn export_values(&self) -> Vec<(String, Vec<usize>, Vec<S>)> {
        self.entries
            .iter()
            .map(|(n, p)| {
                let v = p.value();
                (n.clone(), v.shape().to_vec(), v.data().to_vec())
            })
            .collect()
    }

    /// Loads a full snapshot produced by [`Self::export_values`]. Names and
    /// shapes must match exactly.
    pub fn load_values(&self, values: &[(String, Vec<usize>, Vec<S>)]) -> Result<()> {
        if values.len() != self.entries.len() {
            return Err(TensorError::Checkpoint(format!(
                "expected {} parameters, got {}",
                self.entries.len(),
                values.len()
            )));
        }
        for (name, shape, data) in values {
            let param = self
                .get(name)
                .ok_or_else(|| TensorError::UnknownParam(name.clone()))?;
            if param.shape() != *shape {
                return Err(TensorError::ShapeMismatch {
                    op: "load_values",
                    lhs: param.shape(),
                    rhs: shape.clone(),
                });
            }
            param.set(Tensor::param(data.clone(), shape)?)?;
        }
        Ok(())
    }
}

impl<S: Scalar> Default for ParamMap<S> {
    fn default() -> Self {
        Self::new()
    }
}
