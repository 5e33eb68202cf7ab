"""Minimal float64 reverse-mode autodiff on numpy arrays.

The engine covers exactly the primitives the summarization model needs:
matrix products, transpose, concatenation, slicing/gather, elementwise
tanh/sigmoid/log, stable (log-)softmax and reductions.  Every operation
records a backward closure; :func:`backward` replays them in reverse
topological order and accumulates exact analytic gradients into the
:class:`ParamStore` that produced the leaf tensors.

Values are always float64: the corpus is small and the finite-difference
gradient checks need the headroom.
"""

from __future__ import annotations

from typing import Callable, Iterable

import numpy as np

from kgsum.errors import ContractError, DimensionError, TrainingError

__all__ = [
    "Tensor",
    "ParamStore",
    "Adam",
    "backward",
    "grad_check",
    "constant",
    "add",
    "sub",
    "mul",
    "scale",
    "neg",
    "matmul",
    "transpose",
    "concat",
    "stack",
    "rows",
    "row",
    "slice_",
    "pad_to",
    "tanh",
    "sigmoid",
    "log",
    "softmax",
    "log_softmax",
    "lstm_step",
    "sum_",
    "mean_rows",
    "dot",
    "copy_",
    "cross_entropy_with_logits",
]


class Tensor:
    """A node in the computation graph: a float64 array plus the closure
    that routes its output gradient to its parents."""

    __slots__ = ("value", "parents", "backward_fn", "grad", "requires_grad", "store", "name")

    def __init__(
        self,
        value: np.ndarray,
        parents: tuple["Tensor", ...] = (),
        backward_fn: Callable[[np.ndarray], None] | None = None,
        requires_grad: bool = False,
        store: "ParamStore | None" = None,
        name: str | None = None,
    ):
        self.value = value
        self.parents = parents
        self.backward_fn = backward_fn
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self.store = store
        self.name = name

    @property
    def shape(self) -> tuple[int, ...]:
        return self.value.shape

    def item(self) -> float:
        return float(self.value)

    def __repr__(self) -> str:
        tag = self.name or "tensor"
        return f"<{tag} shape={self.value.shape}>"


def constant(value: np.ndarray | float | list) -> Tensor:
    """A graph leaf that neither requires nor receives gradients."""
    return Tensor(np.asarray(value, dtype=np.float64))


def _acc(t: Tensor, g: np.ndarray, fresh: bool) -> None:
    """Accumulate gradient ``g`` into ``t``.  ``fresh`` marks arrays the
    caller allocated for this call alone, which may be adopted without a
    defensive copy."""
    if not t.requires_grad:
        return
    if t.grad is None:
        t.grad = g if fresh else g.copy()
    else:
        t.grad += g


def _grad_buffer(t: Tensor) -> np.ndarray:
    """The node's gradient buffer, materialized as zeros on first use.

    For scatter-style backward rules (row writes, gathers) accumulating
    in place beats building a dense zero array per contribution."""
    if t.grad is None:
        t.grad = np.zeros_like(t.value)
    return t.grad


def _unary(x: Tensor, value: np.ndarray, dx: Callable[[np.ndarray], np.ndarray]) -> Tensor:
    def backward_fn(g: np.ndarray) -> None:
        _acc(x, dx(g), fresh=True)

    return Tensor(value, (x,), backward_fn, requires_grad=x.requires_grad)


def add(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise sum; also supports matrix + row-vector (bias) form."""
    av, bv = a.value, b.value
    if av.shape == bv.shape:
        def backward_fn(g: np.ndarray) -> None:
            _acc(a, g, fresh=False)
            _acc(b, g, fresh=False)
    elif av.ndim == 2 and bv.ndim == 1 and av.shape[1] == bv.shape[0]:
        def backward_fn(g: np.ndarray) -> None:
            _acc(a, g, fresh=False)
            _acc(b, g.sum(axis=0), fresh=True)
    else:
        raise DimensionError(f"add: incompatible shapes {av.shape} and {bv.shape}")
    return Tensor(av + bv, (a, b), backward_fn, requires_grad=a.requires_grad or b.requires_grad)


def sub(a: Tensor, b: Tensor) -> Tensor:
    if a.value.shape != b.value.shape:
        raise DimensionError(f"sub: incompatible shapes {a.value.shape} and {b.value.shape}")

    def backward_fn(g: np.ndarray) -> None:
        _acc(a, g, fresh=False)
        _acc(b, -g, fresh=True)

    return Tensor(a.value - b.value, (a, b), backward_fn, requires_grad=a.requires_grad or b.requires_grad)


def mul(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise (Hadamard) product of same-shape tensors."""
    if a.value.shape != b.value.shape:
        raise DimensionError(f"mul: incompatible shapes {a.value.shape} and {b.value.shape}")

    def backward_fn(g: np.ndarray) -> None:
        _acc(a, g * b.value, fresh=True)
        _acc(b, g * a.value, fresh=True)

    return Tensor(a.value * b.value, (a, b), backward_fn, requires_grad=a.requires_grad or b.requires_grad)


def scale(x: Tensor, k: float) -> Tensor:
    return _unary(x, x.value * k, lambda g: g * k)


def neg(x: Tensor) -> Tensor:
    return _unary(x, -x.value, lambda g: -g)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Matrix/vector product for the 2x2, 2x1, 1x2 and 1x1 (dot) cases."""
    av, bv = a.value, b.value
    if av.ndim == 2 and bv.ndim == 2:
        if av.shape[1] != bv.shape[0]:
            raise DimensionError(f"matmul: incompatible shapes {av.shape} and {bv.shape}")

        def backward_fn(g: np.ndarray) -> None:
            _acc(a, g @ bv.T, fresh=True)
            _acc(b, av.T @ g, fresh=True)
    elif av.ndim == 2 and bv.ndim == 1:
        if av.shape[1] != bv.shape[0]:
            raise DimensionError(f"matmul: incompatible shapes {av.shape} and {bv.shape}")

        def backward_fn(g: np.ndarray) -> None:
            _acc(a, np.outer(g, bv), fresh=True)
            _acc(b, av.T @ g, fresh=True)
    elif av.ndim == 1 and bv.ndim == 2:
        if av.shape[0] != bv.shape[0]:
            raise DimensionError(f"matmul: incompatible shapes {av.shape} and {bv.shape}")

        def backward_fn(g: np.ndarray) -> None:
            _acc(a, bv @ g, fresh=True)
            _acc(b, np.outer(av, g), fresh=True)
    elif av.ndim == 1 and bv.ndim == 1:
        if av.shape[0] != bv.shape[0]:
            raise DimensionError(f"matmul: incompatible shapes {av.shape} and {bv.shape}")

        def backward_fn(g: np.ndarray) -> None:
            _acc(a, g * bv, fresh=True)
            _acc(b, g * av, fresh=True)
    else:
        raise DimensionError(f"matmul: unsupported ranks {av.shape} and {bv.shape}")
    return Tensor(av @ bv, (a, b), backward_fn, requires_grad=a.requires_grad or b.requires_grad)


def dot(a: Tensor, b: Tensor) -> Tensor:
    return matmul(a, b)


def transpose(x: Tensor) -> Tensor:
    if x.value.ndim != 2:
        raise DimensionError(f"transpose: expected a matrix, got shape {x.value.shape}")
    return _unary(x, x.value.T.copy(), lambda g: g.T.copy())


def concat(parts: Iterable[Tensor], axis: int = 0) -> Tensor:
    parts = list(parts)
    values = [p.value for p in parts]
    sizes = [v.shape[axis] for v in values]
    offsets = np.cumsum([0] + sizes)

    def backward_fn(g: np.ndarray) -> None:
        for p, lo, hi in zip(parts, offsets[:-1], offsets[1:]):
            sl = [slice(None)] * g.ndim
            sl[axis] = slice(lo, hi)
            _acc(p, np.ascontiguousarray(g[tuple(sl)]), fresh=True)

    return Tensor(
        np.concatenate(values, axis=axis),
        tuple(parts),
        backward_fn,
        requires_grad=any(p.requires_grad for p in parts),
    )


def stack(vectors: Iterable[Tensor]) -> Tensor:
    """Stack 1-D tensors into the rows of a matrix."""
    vectors = list(vectors)

    def backward_fn(g: np.ndarray) -> None:
        for i, v in enumerate(vectors):
            _acc(v, g[i].copy(), fresh=True)

    return Tensor(
        np.stack([v.value for v in vectors]),
        tuple(vectors),
        backward_fn,
        requires_grad=any(v.requires_grad for v in vectors),
    )


def rows(table: Tensor, indices: np.ndarray | list[int]) -> Tensor:
    """Gather rows of a matrix; the gradient scatter-adds back."""
    idx = np.asarray(indices, dtype=np.intp)

    def backward_fn(g: np.ndarray) -> None:
        if table.requires_grad:
            np.add.at(_grad_buffer(table), idx, g)

    return Tensor(table.value[idx], (table,), backward_fn, requires_grad=table.requires_grad)


def row(mat: Tensor, i: int) -> Tensor:
    def backward_fn(g: np.ndarray) -> None:
        if mat.requires_grad:
            _grad_buffer(mat)[i] += g

    return Tensor(mat.value[i].copy(), (mat,), backward_fn, requires_grad=mat.requires_grad)


def slice_(x: Tensor, start: int, stop: int) -> Tensor:
    """Contiguous slice along the last axis."""
    def backward_fn(g: np.ndarray) -> None:
        dx = np.zeros_like(x.value)
        dx[..., start:stop] = g
        _acc(x, dx, fresh=True)

    return Tensor(
        np.ascontiguousarray(x.value[..., start:stop]),
        (x,),
        backward_fn,
        requires_grad=x.requires_grad,
    )


def pad_to(x: Tensor, length: int) -> Tensor:
    """Zero-pad a vector on the right up to ``length``."""
    n = x.value.shape[0]
    if x.value.ndim != 1 or n > length:
        raise DimensionError(f"pad_to: cannot pad shape {x.value.shape} to {length}")
    value = np.zeros(length, dtype=np.float64)
    value[:n] = x.value

    def backward_fn(g: np.ndarray) -> None:
        _acc(x, np.ascontiguousarray(g[:n]), fresh=True)

    return Tensor(value, (x,), backward_fn, requires_grad=x.requires_grad)


def tanh(x: Tensor) -> Tensor:
    y = np.tanh(x.value)
    return _unary(x, y, lambda g: g * (1.0 - y * y))


def sigmoid(x: Tensor) -> Tensor:
    y = _sigmoid_value(x.value)
    return _unary(x, y, lambda g: g * y * (1.0 - y))


def log(x: Tensor) -> Tensor:
    return _unary(x, np.log(x.value), lambda g: g / x.value)


def _softmax_value(v: np.ndarray) -> np.ndarray:
    shifted = v - v.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def softmax(x: Tensor) -> Tensor:
    """Stable softmax over the last axis (rows for matrices)."""
    s = _softmax_value(x.value)

    def dx(g: np.ndarray) -> np.ndarray:
        inner = (g * s).sum(axis=-1, keepdims=True)
        return s * (g - inner)

    return _unary(x, s, dx)


def log_softmax(x: Tensor) -> Tensor:
    """Fused, stable log-softmax over the last axis."""
    shifted = x.value - x.value.max(axis=-1, keepdims=True)
    lse = np.log(np.exp(shifted).sum(axis=-1, keepdims=True))
    y = shifted - lse
    s = np.exp(y)

    def dx(g: np.ndarray) -> np.ndarray:
        return g - s * g.sum(axis=-1, keepdims=True)

    return _unary(x, y, dx)


def sum_(x: Tensor) -> Tensor:
    return _unary(x, np.asarray(x.value.sum()), lambda g: np.full_like(x.value, float(g)))


def _sigmoid_value(v: np.ndarray) -> np.ndarray:
    # clipping at |500| leaves the float64 result untouched and avoids
    # overflow in exp for saturated gates
    return 1.0 / (1.0 + np.exp(-np.clip(v, -500.0, 500.0)))


def lstm_step(
    proj: Tensor,
    t: int,
    b: Tensor,
    Wh: Tensor,
    h_prev: Tensor | None,
    c_prev: Tensor | None,
    hidden: int,
) -> tuple[Tensor, Tensor]:
    """One fused LSTM cell step with exact hand-derived backward.

    Pre-activations are ``z = proj[t] + b + h_prev @ Wh`` with gate layout
    ``[input, forget, output, candidate]``; returns the new hidden and
    cell states.  Fusing the gate arithmetic into two graph nodes (cell,
    hidden) keeps sequence graphs small; the backward closures route
    exact gradients to ``proj[t]``, ``b``, ``Wh``, ``h_prev`` and
    ``c_prev``.  Correctness is pinned by finite-difference tests against
    the equivalent composition of primitive ops.
    """
    H = hidden
    zv = proj.value[t] + b.value
    if h_prev is not None:
        zv = zv + h_prev.value @ Wh.value
    gates = _sigmoid_value(zv[: 3 * H])
    i_g, f_g, o_g = gates[:H], gates[H : 2 * H], gates[2 * H :]
    cand = np.tanh(zv[3 * H :])
    c_val = i_g * cand
    if c_prev is not None:
        c_val = c_val + f_g * c_prev.value

    requires = (
        proj.requires_grad
        or b.requires_grad
        or Wh.requires_grad
        or (h_prev is not None and h_prev.requires_grad)
        or (c_prev is not None and c_prev.requires_grad)
    )

    # Gate gradients from the hidden node are parked in ``dz`` and routed
    # once by the cell node: ``c`` is a parent of ``h``, so reverse
    # topological order guarantees ``h``'s backward runs first.
    dz = np.zeros_like(zv)

    def route_z() -> None:
        if proj.requires_grad:
            _grad_buffer(proj)[t] += dz
        if h_prev is not None:
            _acc(h_prev, Wh.value @ dz, fresh=True)
            _acc(Wh, np.outer(h_prev.value, dz), fresh=True)
        _acc(b, dz, fresh=True)

    def c_backward(gc: np.ndarray) -> None:
        dz[:H] = gc * cand * i_g * (1.0 - i_g)
        dz[3 * H :] = gc * i_g * (1.0 - cand * cand)
        if c_prev is not None:
            dz[H : 2 * H] = gc * c_prev.value * f_g * (1.0 - f_g)
            _acc(c_prev, gc * f_g, fresh=True)
        route_z()

    c_parents = tuple(p for p in (proj, b, Wh, h_prev, c_prev) if p is not None)
    c = Tensor(c_val, c_parents, c_backward, requires_grad=requires)

    tc = np.tanh(c_val)
    h_val = o_g * tc

    def h_backward(gh: np.ndarray) -> None:
        dz[2 * H : 3 * H] = gh * tc * o_g * (1.0 - o_g)
        _acc(c, gh * o_g * (1.0 - tc * tc), fresh=True)

    h_parents = tuple(p for p in (proj, b, Wh, h_prev) if p is not None) + (c,)
    h = Tensor(h_val, h_parents, h_backward, requires_grad=requires)
    return h, c


def mean_rows(x: Tensor) -> Tensor:
    """Column means of a matrix (a permutation-invariant row summary)."""
    if x.value.ndim != 2:
        raise DimensionError(f"mean_rows: expected a matrix, got shape {x.value.shape}")
    n = x.value.shape[0]
    return _unary(x, x.value.mean(axis=0), lambda g: np.tile(g / n, (n, 1)))


def copy_(x: Tensor) -> Tensor:
    """Identity with value semantics: mutating the result's value leaves
    the source untouched."""
    return _unary(x, x.value.copy(), lambda g: g.copy())


def cross_entropy_with_logits(logits: Tensor, target: np.ndarray) -> Tensor:
    """-sum(target * log_softmax(logits)) as one numerically-safe graph."""
    t = np.asarray(target, dtype=np.float64)
    if logits.value.shape != t.shape:
        raise DimensionError(
            f"cross_entropy: incompatible shapes {logits.value.shape} and {t.shape}"
        )
    return neg(dot(constant(t), log_softmax(logits)))


def _topo_order(root: Tensor) -> list[Tensor]:
    order: list[Tensor] = []
    seen: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node.parents:
            if id(p) not in seen and p.requires_grad:
                stack.append((p, False))
    return order


def backward(loss: Tensor) -> None:
    """Accumulate d(loss)/d(leaf) for every reachable parameter leaf.

    ``loss`` must be scalar.  Gradients land both on the graph nodes and,
    for leaves created by a :class:`ParamStore`, in the store's gradient
    buffers; repeated calls without an intervening reset accumulate.
    """
    if loss.value.shape != ():
        raise ContractError(f"backward requires a scalar loss, got shape {loss.value.shape}")
    if not loss.requires_grad:
        return
    order = _topo_order(loss)
    loss.grad = np.asarray(1.0)
    for node in reversed(order):
        if node.backward_fn is not None and node.grad is not None:
            node.backward_fn(node.grad)
    for node in order:
        if node.store is not None and node.grad is not None:
            node.store.grads[node.name] += node.grad


class ParamStore:
    """Named parameters with paired gradient buffers and frozen flags.

    Frozen parameters still appear in checkpoints but never require
    gradients and are never touched by the optimizer.
    """

    def __init__(self) -> None:
        self.params: dict[str, np.ndarray] = {}
        self.grads: dict[str, np.ndarray] = {}
        self.trainable: dict[str, bool] = {}

    def add(self, name: str, value: np.ndarray, trainable: bool = True) -> None:
        if name in self.params:
            raise ContractError(f"parameter {name!r} already exists")
        arr = np.asarray(value, dtype=np.float64)
        self.params[name] = arr
        self.grads[name] = np.zeros_like(arr)
        self.trainable[name] = trainable

    def tensor(self, name: str) -> Tensor:
        """A graph leaf bound to this store; gradients reaching it are
        deposited into ``grads[name]`` on backward."""
        if self.trainable[name]:
            return Tensor(self.params[name], requires_grad=True, store=self, name=name)
        return Tensor(self.params[name])

    def zero_grads(self) -> None:
        for g in self.grads.values():
            g[...] = 0.0

    def names(self) -> list[str]:
        return list(self.params)

    def trainable_names(self) -> list[str]:
        return [n for n, t in self.trainable.items() if t]

    def n_params(self) -> int:
        return sum(p.size for p in self.params.values())

    def state_dict(self) -> dict[str, np.ndarray]:
        return {n: p.copy() for n, p in self.params.items()}

    def load_state_dict(self, state: dict[str, np.ndarray]) -> None:
        for n, p in state.items():
            if n not in self.params:
                raise ContractError(f"unknown parameter {n!r} in state dict")
            if self.params[n].shape != p.shape:
                raise DimensionError(
                    f"parameter {n!r}: shape {p.shape} != expected {self.params[n].shape}"
                )
            self.params[n][...] = p


class Adam:
    """Adaptive-moment-estimation optimizer over a :class:`ParamStore`."""

    def __init__(self, lr: float = 1e-3, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self._m: dict[str, np.ndarray] = {}
        self._v: dict[str, np.ndarray] = {}
        self._scratch: dict[str, np.ndarray] = {}

    def step(self, store: ParamStore) -> None:
        """Update trainable parameters from their gradients, then clear
        all gradient buffers.  Frozen parameters are untouched."""
        self.t += 1
        b1t = 1.0 - self.beta1**self.t
        b2t = 1.0 - self.beta2**self.t
        for name in store.trainable_names():
            g = store.grads[name]
            if not np.all(np.isfinite(g)):
                raise TrainingError(f"non-finite gradient for parameter {name!r}")
            if name not in self._m:
                self._m[name] = np.zeros_like(g)
                self._v[name] = np.zeros_like(g)
                self._scratch[name] = np.empty_like(g)
            m, v, scratch = self._m[name], self._v[name], self._scratch[name]
            m *= self.beta1
            np.multiply(g, 1.0 - self.beta1, out=scratch)
            m += scratch
            v *= self.beta2
            np.multiply(g, g, out=scratch)
            scratch *= 1.0 - self.beta2
            v += scratch
            np.divide(v, b2t, out=scratch)
            np.sqrt(scratch, out=scratch)
            scratch += self.eps
            np.divide(m, scratch, out=scratch)
            scratch *= self.lr / b1t
            store.params[name] -= scratch
        store.zero_grads()


def grad_check(
    closure: Callable[[], Tensor],
    store: ParamStore,
    eps: float = 1e-5,
) -> float:
    """Max relative error between analytic and central-difference gradients.

    The closure must rebuild the loss graph deterministically on every
    call; two baseline evaluations are compared to detect violations.
    The error for each parameter element is
    ``|analytic - numeric| / max(1e-12, |analytic| + |numeric|)``.
    """
    base = closure().item()
    if closure().item() != base:
        raise ContractError("closure is not deterministic: two evaluations differ")

    store.zero_grads()
    loss = closure()
    backward(loss)
    analytic = {n: store.grads[n].copy() for n in store.trainable_names()}
    store.zero_grads()

    worst = 0.0
    for name in store.trainable_names():
        param = store.params[name]
        flat = param.reshape(-1)
        ana = analytic[name].reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + eps
            f_plus = closure().item()
            flat[i] = orig - eps
            f_minus = closure().item()
            flat[i] = orig
            numeric = (f_plus - f_minus) / (2.0 * eps)
            denom = max(1e-12, abs(ana[i]) + abs(numeric))
            worst = max(worst, abs(ana[i] - numeric) / denom)
    return worst
