use std::cell::RefCell;
use std::rc::Rc;

use crate::{NdError, NdResult, Scalar, Tensor};

/// Maps the upstream gradient to one contribution per parent.
///
/// The mask says which parents actually need a gradient; entries for masked
/// parents may be skipped and returned as `None` to avoid dead work.
type VjpFn<T> = Box<dyn Fn(&Tensor<T>, &[bool]) -> Vec<Option<Tensor<T>>>>;

struct Node<T> {
    value: Rc<Tensor<T>>,
    parents: Vec<usize>,
    vjp: Option<VjpFn<T>>,
    needs_grad: bool,
}

/// Wengert tape. Operations append nodes in evaluation order, so the reverse
/// of the recording order is already a topological order for backprop.
///
/// A graph is single-threaded by design; independent computations (for
/// example the elements of a batch) each get their own graph.
pub struct Graph<T> {
    nodes: RefCell<Vec<Node<T>>>,
}

impl<T: Scalar> Graph<T> {
    #[allow(clippy::new_ret_no_self)]
    pub fn new() -> Rc<Self> {
        Rc::new(Self {
            nodes: RefCell::new(Vec::new()),
        })
    }

    /// Introduces a trainable leaf.
    pub fn var(self: &Rc<Self>, value: Tensor<T>, needs_grad: bool) -> Var<T> {
        self.push_node(Rc::new(value), Vec::new(), None, needs_grad)
    }

    /// Introduces a leaf that never receives a gradient.
    pub fn constant(self: &Rc<Self>, value: Tensor<T>) -> Var<T> {
        self.var(value, false)
    }

    pub(crate) fn push_op(
        self: &Rc<Self>,
        value: Tensor<T>,
        parents: Vec<usize>,
        vjp: VjpFn<T>,
    ) -> Var<T> {
        let needs_grad = {
            let nodes = self.nodes.borrow();
            parents.iter().any(|&p| nodes[p].needs_grad)
        };
        let vjp = if needs_grad { Some(vjp) } else { None };
        self.push_node(Rc::new(value), parents, vjp, needs_grad)
    }

    fn push_node(
        self: &Rc<Self>,
        value: Rc<Tensor<T>>,
        parents: Vec<usize>,
        vjp: Option<VjpFn<T>>,
        needs_grad: bool,
    ) -> Var<T> {
        let mut nodes = self.nodes.borrow_mut();
        nodes.push(Node {
            value,
            parents,
            vjp,
            needs_grad,
        });
        Var {
            graph: Rc::clone(self),
            id: nodes.len() - 1,
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.borrow().len()
    }

    /// Accumulates gradients of the scalar `root` with respect to every leaf
    /// that was created with `needs_grad`.
    ///
    /// The tape is walked from `root` down to node 0; contributions are added
    /// in recording order, so repeated runs produce bitwise-identical sums.
    /// Gradients of interior nodes are dropped as soon as their parents have
    /// been served; only leaf gradients are retained in the result.
    pub fn backward(self: &Rc<Self>, root: &Var<T>) -> NdResult<Gradients<T>> {
        if !Rc::ptr_eq(self, &root.graph) {
            return Err(NdError::GraphMismatch("backward"));
        }
        let nodes = self.nodes.borrow();
        let root_node = &nodes[root.id];
        if root_node.value.len() != 1 {
            return Err(NdError::NonScalarRoot(root_node.value.shape().to_vec()));
        }

        let mut grads: Vec<Option<Tensor<T>>> = Vec::new();
        grads.resize_with(root.id + 1, || None);
        grads[root.id] = Some(Tensor::scalar(T::one()));

        let mut mask = Vec::new();
        for id in (0..=root.id).rev() {
            if grads[id].is_none() || !nodes[id].needs_grad {
                continue;
            }
            let Some(vjp) = nodes[id].vjp.as_ref() else {
                continue; // leaf: keep its gradient
            };
            let g = grads[id].take().expect("checked above");
            mask.clear();
            mask.extend(nodes[id].parents.iter().map(|&p| nodes[p].needs_grad));
            let contributions = vjp(&g, &mask);
            debug_assert_eq!(contributions.len(), nodes[id].parents.len());
            for (slot, contribution) in nodes[id].parents.iter().zip(contributions) {
                let Some(c) = contribution else { continue };
                match &mut grads[*slot] {
                    Some(acc) => acc.add_in_place(&c),
                    empty => *empty = Some(c),
                }
            }
        }

        Ok(Gradients {
            graph: Rc::clone(self),
            grads,
        })
    }
}

/// Handle to one node of a [`Graph`].
pub struct Var<T> {
    graph: Rc<Graph<T>>,
    id: usize,
}

impl<T> Clone for Var<T> {
    fn clone(&self) -> Self {
        Self {
            graph: Rc::clone(&self.graph),
            id: self.id,
        }
    }
}

impl<T: Scalar> Var<T> {
    pub fn value(&self) -> Rc<Tensor<T>> {
        Rc::clone(&self.graph.nodes.borrow()[self.id].value)
    }

    pub fn shape(&self) -> Vec<usize> {
        self.graph.nodes.borrow()[self.id].value.shape().to_vec()
    }

    pub fn graph(&self) -> &Rc<Graph<T>> {
        &self.graph
    }

    pub(crate) fn id(&self) -> usize {
        self.id
    }

    pub fn needs_grad(&self) -> bool {
        self.graph.nodes.borrow()[self.id].needs_grad
    }

    /// Re-enters the value as a fresh constant leaf: same numbers, no history.
    /// Backprop through any consumer stops here.
    pub fn detach(&self) -> Var<T> {
        let value = self.value();
        self.graph.push_node(value, Vec::new(), None, false)
    }

    pub(crate) fn same_graph(&self, other: &Var<T>, op: &'static str) -> NdResult<()> {
        if Rc::ptr_eq(&self.graph, &other.graph) {
            Ok(())
        } else {
            Err(NdError::GraphMismatch(op))
        }
    }
}

/// Leaf gradients produced by [`Graph::backward`].
pub struct Gradients<T> {
    graph: Rc<Graph<T>>,
    grads: Vec<Option<Tensor<T>>>,
}

impl<T: Scalar> Gradients<T> {
    /// Gradient with respect to `var`, if one was accumulated.
    ///
    /// Returns `None` for constants, for leaves unreachable from the root,
    /// and for interior nodes (whose gradients are not retained).
    pub fn get(&self, var: &Var<T>) -> Option<&Tensor<T>> {
        debug_assert!(Rc::ptr_eq(&self.graph, &var.graph));
        self.grads.get(var.id).and_then(|g| g.as_ref())
    }

    /// Moves the gradient for `var` out of the result.
    pub fn take(&mut self, var: &Var<T>) -> Option<Tensor<T>> {
        debug_assert!(Rc::ptr_eq(&self.graph, &var.graph));
        self.grads.get_mut(var.id).and_then(|g| g.take())
    }
}

#[cfg(test)]
mod tests {
    use crate::{Graph, NdError, Tensor};

    #[test]
    fn fan_out_accumulates_once_per_use() {
        let g = Graph::<f64>::new();
        let x = g.var(Tensor::new(vec![2], vec![3.0, -2.0]).unwrap(), true);
        let s = x.mul(&x).unwrap();
        let t = s.add(&s).unwrap();
        let root = t.sum();
        let grads = g.backward(&root).unwrap();
        // d/dx of 2 x^2 is 4 x
        assert_eq!(grads.get(&x).unwrap().data(), &[12.0, -8.0]);
    }

    #[test]
    fn detach_keeps_value_and_blocks_gradient() {
        let g = Graph::<f64>::new();
        let x = g.var(Tensor::new(vec![2], vec![3.0, 5.0]).unwrap(), true);
        let d = x.detach();
        assert_eq!(d.value().data(), x.value().data());
        assert!(!d.needs_grad());

        // x * detach(x) differentiates like x * const
        let y = x.mul(&d).unwrap();
        let grads = g.backward(&y.sum()).unwrap();
        assert_eq!(grads.get(&x).unwrap().data(), &[3.0, 5.0]);
        assert!(grads.get(&d).is_none());
    }

    #[test]
    fn constants_receive_no_gradient() {
        let g = Graph::<f64>::new();
        let x = g.var(Tensor::scalar(2.0), true);
        let c = g.constant(Tensor::scalar(7.0));
        let grads = g.backward(&x.mul(&c).unwrap()).unwrap();
        assert_eq!(grads.get(&x).unwrap().data(), &[7.0]);
        assert!(grads.get(&c).is_none());
    }

    #[test]
    fn backward_rejects_non_scalar_root() {
        let g = Graph::<f64>::new();
        let x = g.var(Tensor::new(vec![3], vec![1.0, 2.0, 3.0]).unwrap(), true);
        let y = x.mul_scalar(2.0);
        assert!(matches!(
            g.backward(&y),
            Err(NdError::NonScalarRoot(shape)) if shape == vec![3]
        ));
    }

    #[test]
    fn cross_graph_operands_are_rejected() {
        let g1 = Graph::<f64>::new();
        let g2 = Graph::<f64>::new();
        let a = g1.var(Tensor::scalar(1.0), true);
        let b = g2.var(Tensor::scalar(2.0), true);
        assert!(matches!(a.add(&b), Err(NdError::GraphMismatch("add"))));
    }

    #[test]
    fn repeated_backward_is_bitwise_stable() {
        let g = Graph::<f64>::new();
        let x = g.var(
            Tensor::new(vec![4], vec![0.3, -1.7, 2.9, 0.01]).unwrap(),
            true,
        );
        let y = x.mul(&x).unwrap().add(&x).unwrap();
        let root = y.mean();
        let first = g.backward(&root).unwrap().get(&x).unwrap().clone();
        let second = g.backward(&root).unwrap().get(&x).unwrap().clone();
        let bits = |t: &Tensor<f64>| t.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&first), bits(&second));
    }

    #[test]
    fn leaf_root_gets_unit_gradient() {
        let g = Graph::<f64>::new();
        let x = g.var(Tensor::scalar(5.0), true);
        let grads = g.backward(&x).unwrap();
        assert_eq!(grads.get(&x).unwrap().data(), &[1.0]);
    }
}
