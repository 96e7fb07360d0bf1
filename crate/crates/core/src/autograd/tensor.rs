use std::cell::{Ref, RefCell, RefMut};
use std::collections::{HashMap, HashSet};
use std::fmt;
use std::rc::Rc;

use super::ops::Op;
use super::TensorError;

pub(crate) struct Node {
    pub(crate) shape: Vec<usize>,
    pub(crate) data: RefCell<Vec<f64>>,
    pub(crate) grad: RefCell<Option<Vec<f64>>>,
    pub(crate) requires_grad: bool,
    pub(crate) op: Option<Op>,
}

/// A dense row-major `f64` array that records how it was produced.
///
/// Cloning a `Tensor` is cheap and yields a handle to the same node, so a
/// parameter cloned into several layers shares one data and gradient buffer.
#[derive(Clone)]
pub struct Tensor(pub(crate) Rc<Node>);

impl Tensor {
    fn build(
        data: Vec<f64>,
        shape: Vec<usize>,
        requires_grad: bool,
        op: Option<Op>,
    ) -> Result<Self, TensorError> {
        let numel: usize = shape.iter().product();
        if shape.iter().any(|&d| d == 0) || numel != data.len() {
            return Err(TensorError::Length {
                len: data.len(),
                shape,
            });
        }
        Ok(Tensor(Rc::new(Node {
            shape,
            data: RefCell::new(data),
            grad: RefCell::new(None),
            requires_grad,
            op,
        })))
    }

    /// A leaf that does not take part in differentiation.
    pub fn constant(data: Vec<f64>, shape: &[usize]) -> Result<Self, TensorError> {
        Self::build(data, shape.to_vec(), false, None)
    }

    /// A trainable leaf.
    pub fn param(data: Vec<f64>, shape: &[usize]) -> Result<Self, TensorError> {
        Self::build(data, shape.to_vec(), true, None)
    }

    pub fn scalar(value: f64) -> Self {
        Self::build(vec![value], vec![1], false, None).expect("scalar shape is valid")
    }

    pub(crate) fn from_op(data: Vec<f64>, shape: Vec<usize>, op: Op) -> Self {
        let requires_grad = op.inputs().iter().any(|t| t.requires_grad());
        let op = requires_grad.then_some(op);
        Self::build(data, shape, requires_grad, op).expect("op produced a consistent shape")
    }

    pub fn shape(&self) -> &[usize] {
        &self.0.shape
    }

    pub fn numel(&self) -> usize {
        self.0.shape.iter().product()
    }

    pub fn requires_grad(&self) -> bool {
        self.0.requires_grad
    }

    pub fn is_leaf(&self) -> bool {
        self.0.op.is_none()
    }

    pub fn data(&self) -> Ref<'_, Vec<f64>> {
        self.0.data.borrow()
    }

    /// Mutable access to the values of a leaf. Used by optimizers and
    /// checkpoint loading; mutating a tensor that feeds a live graph makes
    /// that graph's recorded values stale.
    pub fn data_mut(&self) -> RefMut<'_, Vec<f64>> {
        self.0.data.borrow_mut()
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.0.data.borrow().clone()
    }

    /// The single value of a one-element tensor.
    pub fn item(&self) -> f64 {
        debug_assert_eq!(self.numel(), 1);
        self.0.data.borrow()[0]
    }

    pub fn grad(&self) -> Option<Vec<f64>> {
        self.0.grad.borrow().clone()
    }

    pub fn zero_grad(&self) {
        *self.0.grad.borrow_mut() = None;
    }

    pub(crate) fn accumulate_grad(&self, g: Vec<f64>) {
        let mut slot = self.0.grad.borrow_mut();
        match slot.as_mut() {
            Some(acc) => acc.iter_mut().zip(&g).for_each(|(a, b)| *a += b),
            None => *slot = Some(g),
        }
    }

    pub(crate) fn id(&self) -> usize {
        Rc::as_ptr(&self.0) as usize
    }

    /// Nodes reachable from `self` that require gradients, inputs before
    /// the nodes that consume them.
    fn topo_order(&self) -> Vec<Tensor> {
        let mut order = Vec::new();
        let mut visited = HashSet::new();
        // (node, children already pushed)
        let mut stack = vec![(self.clone(), false)];
        while let Some((node, expanded)) = stack.pop() {
            if expanded {
                order.push(node);
                continue;
            }
            if !visited.insert(node.id()) {
                continue;
            }
            stack.push((node.clone(), true));
            if let Some(op) = &node.0.op {
                for input in op.inputs() {
                    if input.requires_grad() && !visited.contains(&input.id()) {
                        stack.push((input.clone(), false));
                    }
                }
            }
        }
        order
    }

    /// Reverse-mode sweep from a one-element loss. Gradients add into the
    /// `grad` buffers of every reachable tensor that requires them; call
    /// [`Tensor::zero_grad`] on parameters between steps.
    pub fn backward(&self) -> Result<(), TensorError> {
        if self.numel() != 1 {
            return Err(TensorError::NonScalarLoss(self.shape().to_vec()));
        }
        if !self.requires_grad() {
            return Ok(());
        }
        let order = self.topo_order();
        let mut pending: HashMap<usize, Vec<f64>> = HashMap::new();
        pending.insert(self.id(), vec![1.0]);
        for node in order.iter().rev() {
            let Some(g) = pending.remove(&node.id()) else {
                continue;
            };
            if let Some(op) = &node.0.op {
                let out = node.0.data.borrow();
                for (input, gi) in op.backward(&out, &g) {
                    if !input.requires_grad() {
                        continue;
                    }
                    if input.is_leaf() {
                        input.accumulate_grad(gi);
                    } else {
                        match pending.get_mut(&input.id()) {
                            Some(acc) => acc.iter_mut().zip(&gi).for_each(|(a, b)| *a += b),
                            None => {
                                pending.insert(input.id(), gi);
                            }
                        }
                    }
                }
            }
            node.accumulate_grad(g);
        }
        Ok(())
    }

    /// Signs (`x > 0`) of every PReLU input reachable from `self`, in a
    /// stable traversal order. Gradient checks use this to detect when a
    /// finite-difference probe crosses a kink.
    #[doc(hidden)]
    pub fn prelu_input_signs(&self) -> Vec<bool> {
        let mut signs = Vec::new();
        for node in self.topo_order() {
            if let Some(Op::Prelu { x, .. }) = &node.0.op {
                signs.extend(x.data().iter().map(|&v| v > 0.0));
            }
        }
        signs
    }
}

impl fmt::Debug for Tensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Tensor")
            .field("shape", &self.0.shape)
            .field("data", &*self.0.data.borrow())
            .field("requires_grad", &self.0.requires_grad)
            .finish()
    }
}
