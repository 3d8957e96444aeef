use std::cell::{Cell, RefCell};

use crate::error::{Result, TensorError};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Execution record for reverse-mode differentiation.
///
/// Ops executed through a recording tape push one backward closure each, in
/// execution order, so inputs always precede consumers. [`Tape::backward`]
/// consumes the tape and replays the closures exactly once in reverse.
///
/// A tape belongs to one logical execution stream; it is not `Sync`.
pub struct Tape<S: Scalar> {
    steps: RefCell<Vec<Box<dyn Fn()>>>,
    recording: Cell<bool>,
    _marker: std::marker::PhantomData<S>,
}

impl<S: Scalar> Tape<S> {
    /// Recording tape, for forward passes that will be differentiated.
    pub fn new() -> Self {
        Tape {
            steps: RefCell::new(Vec::new()),
            recording: Cell::new(true),
            _marker: std::marker::PhantomData,
        }
    }

    /// Non-recording tape for acting/evaluation: ops run forward only and
    /// intermediates are dropped as usual.
    pub fn inference() -> Self {
        let t = Self::new();
        t.recording.set(false);
        t
    }

    pub fn is_recording(&self) -> bool {
        self.recording.get()
    }

    pub fn len(&self) -> usize {
        self.steps.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub(crate) fn record(&self, step: impl Fn() + 'static) {
        self.steps.borrow_mut().push(Box::new(step));
    }

    /// Reverse pass from a scalar loss. Seeds the loss gradient with one,
    /// then visits every recorded op once, newest first. Gradients
    /// accumulate additively into every `requires_grad` tensor reachable
    /// from the loss. Consumes the tape.
    pub fn backward(self, loss: &Tensor<S>) -> Result<()> {
        if loss.numel() != 1 {
            return Err(TensorError::NonScalarLoss {
                shape: loss.shape().to_vec(),
            });
        }
        let steps = self.steps.into_inner();
        if steps.is_empty() {
            return Err(TensorError::EmptyTape);
        }
        loss.seed_grad_ones();
        for step in steps.iter().rev() {
            step();
        }
        Ok(())
    }
}

impl<S: Scalar> Default for Tape<S> {
    fn default() -> Self {
        Self::new()
    }
}
