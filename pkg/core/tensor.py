# tensor.py
#
# This module provides a small dense-matrix engine with reverse-mode differentiation.
# A Tape records every primitive applied to Matrix nodes together with a pullback that maps
# the output gradient to input gradients; gradient() replays the tape backwards.
# All values are 2-D float64 numpy arrays; scalars are 1 x 1 matrices.
#
# Usage:
#   tape = Tape()
#   w = tape.parameter("w", np.ones((3, 2)))
#   loss = tape.sum(tape.relu(tape.matmul(x, w)))
#   grads = gradient(tape, loss)       # {"w": ndarray}
#
# Helper modules: Uses numpy only.

import numpy as np

from core.errors import ContractError, ShapeError

LOG_FLOOR = 1e-12


class Matrix:
    """A node on a tape: an immutable 2-D float64 value and its position in the record."""
    __slots__ = ("value", "index", "name")

    def __init__(self, value, index, name=None):
        self.value = value
        self.index = index
        self.name = name

    @property
    def shape(self):
        return self.value.shape

    @property
    def rows(self):
        return self.value.shape[0]

    @property
    def cols(self):
        return self.value.shape[1]

    def __repr__(self):
        label = f" {self.name}" if self.name else ""
        return f"Matrix#{self.index}{label}{self.shape}"


def _as_2d(value):
    array = np.array(value, dtype=np.float64)
    if array.ndim == 0:
        array = array.reshape(1, 1)
    elif array.ndim == 1:
        array = array.reshape(1, -1)
    elif array.ndim != 2:
        raise ShapeError(f"matrices must be 2-D, got {array.ndim}-D")
    array.setflags(write=False)
    return array


class Tape:
    """
    Ordered record of primitive operations. Nodes are appended in evaluation order, so the
    record is acyclic and every node is produced before it is used.
    """

    def __init__(self):
        self.nodes = []
        self.parents = []
        self.pullbacks = []
        self.parameters = {}

    def __len__(self):
        return len(self.nodes)

    # --- leaves ---

    def _record(self, value, parents=(), pullback=None, name=None):
        node = Matrix(value, len(self.nodes), name)
        self.nodes.append(node)
        self.parents.append(tuple(parents))
        self.pullbacks.append(pullback)
        return node

    def constant(self, value, name=None):
        return self._record(_as_2d(value), name=name)

    def parameter(self, name, value):
        """Register a trainable leaf; gradient() reports its gradient under `name`."""
        if name in self.parameters:
            raise ContractError(f"parameter '{name}' is already registered on this tape")
        node = self._record(_as_2d(value), name=name)
        self.parameters[name] = node
        return node

    def _node(self, x):
        if isinstance(x, Matrix):
            return x
        return self.constant(x)

    # --- primitives ---

    def matmul(self, a, b):
        a, b = self._node(a), self._node(b)
        if a.cols != b.rows:
            raise ShapeError(f"matmul {a.shape} @ {b.shape}")
        A, B = a.value, b.value
        return self._record(A @ B, (a, b), lambda g: (g @ B.T, A.T @ g))

    def add(self, a, b):
        """Elementwise sum; b may also be a 1 x cols row broadcast over the rows of a."""
        a, b = self._node(a), self._node(b)
        if a.shape == b.shape:
            return self._record(a.value + b.value, (a, b), lambda g: (g, g))
        if b.rows == 1 and b.cols == a.cols:
            return self._record(a.value + b.value, (a, b), lambda g: (g, g.sum(axis=0, keepdims=True)))
        raise ShapeError(f"add {a.shape} + {b.shape}")

    def sub(self, a, b):
        return self.add(a, self.scalar_mul(b, -1.0))

    def transpose(self, a):
        a = self._node(a)
        return self._record(a.value.T.copy(), (a,), lambda g: (g.T,))

    def relu(self, a):
        """max(x, 0); the subgradient at 0 is 0."""
        a = self._node(a)
        active = a.value > 0
        return self._record(np.where(active, a.value, 0.0), (a,), lambda g: (g * active,))

    def row_softmax(self, a):
        a = self._node(a)
        shifted = a.value - a.value.max(axis=1, keepdims=True)
        e = np.exp(shifted)
        y = e / e.sum(axis=1, keepdims=True)
        return self._record(y, (a,), lambda g: (y * (g - np.sum(g * y, axis=1, keepdims=True)),))

    def row_l2_normalize(self, a, eps=1e-12):
        """x / max(||x||, eps) per row; an all-zero row stays zero."""
        a = self._node(a)
        norms = np.sqrt(np.sum(a.value ** 2, axis=1, keepdims=True))
        safe = np.maximum(norms, eps)
        y = a.value / safe
        big = norms > eps

        def pullback(g):
            radial = np.where(big, y * np.sum(g * y, axis=1, keepdims=True), 0.0)
            return ((g - radial) / safe,)

        return self._record(y, (a,), pullback)

    def elementwise_mul(self, a, b):
        a, b = self._node(a), self._node(b)
        if a.shape != b.shape:
            raise ShapeError(f"elementwise_mul {a.shape} * {b.shape}")
        A, B = a.value, b.value
        return self._record(A * B, (a, b), lambda g: (g * B, g * A))

    def sum(self, a):
        a = self._node(a)
        shape = a.shape
        return self._record(np.array([[a.value.sum()]]), (a,), lambda g: (np.full(shape, g[0, 0]),))

    def mean(self, a):
        a = self._node(a)
        shape, size = a.shape, a.value.size
        if size == 0:
            raise ShapeError("mean of an empty matrix")
        return self._record(np.array([[a.value.mean()]]), (a,), lambda g: (np.full(shape, g[0, 0] / size),))

    def log(self, a):
        """Natural log with the input clamped at LOG_FLOOR."""
        a = self._node(a)
        x = a.value
        above = x > LOG_FLOOR
        clamped = np.maximum(x, LOG_FLOOR)
        return self._record(np.log(clamped), (a,), lambda g: (np.where(above, g / clamped, 0.0),))

    def scalar_mul(self, a, s):
        a = self._node(a)
        s = float(s)
        return self._record(a.value * s, (a,), lambda g: (g * s,))

    def concat_cols(self, blocks):
        blocks = [self._node(b) for b in blocks]
        if not blocks:
            raise ShapeError("concat_cols needs at least one block")
        rows = blocks[0].rows
        if any(b.rows != rows for b in blocks):
            raise ShapeError(f"concat_cols row counts {[b.rows for b in blocks]}")
        bounds = np.cumsum([0] + [b.cols for b in blocks])
        value = np.concatenate([b.value for b in blocks], axis=1)
        return self._record(value, blocks,
                            lambda g: tuple(g[:, bounds[i]:bounds[i + 1]] for i in range(len(blocks))))

    def gather_rows(self, a, indices):
        a = self._node(a)
        idx = np.asarray(indices, dtype=np.int64)
        if idx.ndim != 1 or (idx.size and (idx.min() < 0 or idx.max() >= a.rows)):
            raise ShapeError(f"gather_rows indices out of range for {a.shape}")
        shape = a.shape

        def pullback(g):
            out = np.zeros(shape)
            np.add.at(out, idx, g)
            return (out,)

        return self._record(a.value[idx], (a,), pullback)

    def sym_degree_normalize(self, a, eps=1e-12):
        """
        D^-1/2 A D^-1/2 with d = A 1 (row sums) floored at eps; the diagonal is kept.
        """
        a = self._node(a)
        if a.rows != a.cols:
            raise ShapeError(f"sym_degree_normalize needs a square matrix, got {a.shape}")
        A = a.value
        d = A.sum(axis=1)
        live = d > eps
        r = 1.0 / np.sqrt(np.maximum(d, eps))
        y = r[:, None] * A * r[None, :]

        def pullback(g):
            direct = g * r[:, None] * r[None, :]
            grad_r = np.sum(g * A * r[None, :], axis=1) + np.sum(g * A * r[:, None], axis=0)
            grad_d = np.where(live, -0.5 * r ** 3 * grad_r, 0.0)
            return (direct + grad_d[:, None],)

        return self._record(y, (a,), pullback)


def gradient(tape, loss):
    """
    Reverse accumulation from a scalar loss node.

    Returns:
        dict: parameter name -> gradient array (zeros for parameters the loss does not reach).

    Raises:
        ContractError: the loss is not 1 x 1 or does not belong to this tape.
    """
    if not isinstance(loss, Matrix) or loss.shape != (1, 1):
        raise ContractError("gradient() needs a 1 x 1 loss node")
    if loss.index >= len(tape.nodes) or tape.nodes[loss.index] is not loss:
        raise ContractError("loss node was not recorded on this tape")
    grads = [None] * (loss.index + 1)
    grads[loss.index] = np.ones((1, 1))
    for index in range(loss.index, -1, -1):
        g = grads[index]
        pullback = tape.pullbacks[index]
        if g is None or pullback is None:
            continue
        for parent, parent_grad in zip(tape.parents[index], pullback(g)):
            if parent_grad is None:
                continue
            if grads[parent.index] is None:
                grads[parent.index] = np.array(parent_grad, dtype=np.float64)
            else:
                grads[parent.index] = grads[parent.index] + parent_grad
    result = {}
    for name, node in tape.parameters.items():
        g = grads[node.index] if node.index <= loss.index else None
        result[name] = np.zeros(node.shape) if g is None else g
    return result


def adam_init(params):
    return {"t": 0,
            "m": {name: np.zeros_like(value) for name, value in params.items()},
            "v": {name: np.zeros_like(value) for name, value in params.items()}}


def adam_step(params, grads, state, lr, beta1=0.9, beta2=0.999, eps=1e-8):
    """
    One bias-corrected Adam update.

    Args:
        params (dict): name -> array.
        grads (dict): name -> gradient array of the same shape.
        state (dict): {"t", "m", "v"} as returned by adam_init or a previous step.

    Returns:
        (new_params, new_state); the inputs are not modified.
    """
    t = state["t"] + 1
    new_params, m_all, v_all = {}, {}, {}
    for name, value in params.items():
        g = grads[name]
        if g.shape != value.shape:
            raise ShapeError(f"gradient for '{name}' has shape {g.shape}, parameter {value.shape}")
        m = beta1 * state["m"][name] + (1.0 - beta1) * g
        v = beta2 * state["v"][name] + (1.0 - beta2) * g * g
        m_hat = m / (1.0 - beta1 ** t)
        v_hat = v / (1.0 - beta2 ** t)
        new_params[name] = value - lr * m_hat / (np.sqrt(v_hat) + eps)
        m_all[name], v_all[name] = m, v
    return new_params, {"t": t, "m": m_all, "v": v_all}
