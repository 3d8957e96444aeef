use std::cell::{Cell, Ref, RefCell};
use std::rc::Rc;

use crate::error::{Result, TensorError};
use crate::scalar::Scalar;

/// Dense row-major tensor. The data buffer is immutable once created; only
/// the gradient slot is interior-mutable, written during a backward pass.
///
/// Cloning is cheap (shared buffer). A tensor is not tied to any tape; ops
/// executed through a recording [`crate::Tape`] capture handles to it.
#[derive(Clone)]
pub struct Tensor<S: Scalar> {
    inner: Rc<Inner<S>>,
}

struct Inner<S: Scalar> {
    shape: Vec<usize>,
    data: Vec<S>,
    grad: RefCell<Option<Vec<S>>>,
    requires_grad: Cell<bool>,
}

impl<S: Scalar> Tensor<S> {
    /// Constant (non-differentiable) tensor. Rejects non-finite values and
    /// shape/length disagreement.
    pub fn from_vec(data: Vec<S>, shape: &[usize]) -> Result<Self> {
        let numel: usize = shape.iter().product();
        if numel != data.len() {
            return Err(TensorError::LengthMismatch {
                len: data.len(),
                shape: shape.to_vec(),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(TensorError::NonFinite { op: "from_vec" });
        }
        Ok(Self::new_internal(data, shape.to_vec(), false))
    }

    /// Leaf parameter: participates in gradient accumulation.
    pub fn param(data: Vec<S>, shape: &[usize]) -> Result<Self> {
        let t = Self::from_vec(data, shape)?;
        t.inner.requires_grad.set(true);
        Ok(t)
    }

    pub fn zeros(shape: &[usize]) -> Self {
        let n = shape.iter().product();
        Self::new_internal(vec![S::zero(); n], shape.to_vec(), false)
    }

    pub fn ones(shape: &[usize]) -> Self {
        let n = shape.iter().product();
        Self::new_internal(vec![S::one(); n], shape.to_vec(), false)
    }

    pub fn scalar(v: S) -> Self {
        Self::new_internal(vec![v], vec![1], false)
    }

    pub(crate) fn new_internal(data: Vec<S>, shape: Vec<usize>, requires_grad: bool) -> Self {
        debug_assert_eq!(shape.iter().product::<usize>(), data.len());
        Tensor {
            inner: Rc::new(Inner {
                shape,
                data,
                grad: RefCell::new(None),
                requires_grad: Cell::new(requires_grad),
            }),
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.inner.shape
    }

    pub fn rank(&self) -> usize {
        self.inner.shape.len()
    }

    pub fn numel(&self) -> usize {
        self.inner.data.len()
    }

    pub fn data(&self) -> &[S] {
        &self.inner.data
    }

    pub fn requires_grad(&self) -> bool {
        self.inner.requires_grad.get()
    }

    /// Copy of the accumulated gradient, if any.
    pub fn grad(&self) -> Option<Vec<S>> {
        self.inner.grad.borrow().clone()
    }

    pub(crate) fn grad_ref(&self) -> Ref<'_, Option<Vec<S>>> {
        self.inner.grad.borrow()
    }

    pub fn clear_grad(&self) {
        *self.inner.grad.borrow_mut() = None;
    }

    /// Detached copy: same data, no grad participation, no shared buffer.
    pub fn detach(&self) -> Tensor<S> {
        Self::new_internal(self.inner.data.clone(), self.inner.shape.clone(), false)
    }

    /// Adds `g` into the gradient slot (allocating zeros first if empty).
    pub(crate) fn accumulate_grad(&self, g: &[S]) {
        debug_assert_eq!(g.len(), self.numel());
        let mut slot = self.inner.grad.borrow_mut();
        match slot.as_mut() {
            Some(acc) => {
                for (a, b) in acc.iter_mut().zip(g) {
                    *a += *b;
                }
            }
            None => *slot = Some(g.to_vec()),
        }
    }

    pub(crate) fn seed_grad_ones(&self) {
        *self.inner.grad.borrow_mut() = Some(vec![S::one(); self.numel()]);
    }

    /// Interprets the tensor as a matrix, returning (rows, cols).
    pub fn as_2d(&self, op: &'static str) -> Result<(usize, usize)> {
        match self.shape() {
            [r, c] => Ok((*r, *c)),
            s => Err(TensorError::BadShape {
                op,
                expected: "rank-2 tensor".into(),
                got: s.to_vec(),
            }),
        }
    }

    /// Interprets the tensor as an image volume, returning (channels, h, w).
    pub fn as_3d(&self, op: &'static str) -> Result<(usize, usize, usize)> {
        match self.shape() {
            [c, h, w] => Ok((*c, *h, *w)),
            s => Err(TensorError::BadShape {
                op,
                expected: "rank-3 tensor".into(),
                got: s.to_vec(),
            }),
        }
    }

    /// Value at a rank-2 index. Test/debug helper.
    pub fn at2(&self, r: usize, c: usize) -> S {
        let cols = self.shape()[1];
        self.inner.data[r * cols + c]
    }

    /// Exact bit-level equality of shape and data.
    pub fn bits_eq(&self, other: &Tensor<S>) -> bool {
        self.shape() == other.shape()
            && self
                .data()
                .iter()
                .zip(other.data())
                .all(|(a, b)| Scalar::to_f64(*a).to_bits() == Scalar::to_f64(*b).to_bits())
    }
}

impl<S: Scalar> std::fmt::Debug for Tensor<S> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Tensor{:?}", self.shape())?;
        if self.numel() <= 16 {
            write!(f, " {:?}", self.data())?;
        }
        Ok(())
    }
}

pub(crate) fn ensure_finite<S: Scalar>(op: &'static str, data: &[S]) -> Result<()> {
    if data.iter().any(|v| !v.is_finite()) {
        Err(TensorError::NonFinite { op })
    } else {
        Ok(())
    }
}
