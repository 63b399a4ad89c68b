"""Dense float64 arrays with tape-based reverse-mode differentiation.

Storage and arithmetic sit on numpy; the tape, the primitive set and the
backward pass are implemented here. A tape records primitive ops in creation
order (define-by-run) and is rebuilt for every forward pass.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "NumericError",
    "Tensor",
    "Tape",
    "matmul",
    "add",
    "sub",
    "mul",
    "sin",
    "exp",
    "log",
    "square",
    "clip",
    "add_bias",
    "sum_all",
    "sum_rows",
    "as_array",
]


class NumericError(ValueError):
    """A primitive produced (or would produce) non-finite values."""


def as_array(x) -> np.ndarray:
    """Coerce to a C-contiguous float64 ndarray (at least 2 never copies needlessly)."""
    a = np.asarray(x, dtype=np.float64)
    return np.ascontiguousarray(a)


def _is_scalar_shape(shape) -> bool:
    return int(np.prod(shape, dtype=np.int64)) == 1


class Tensor:
    """Immutable-by-convention value node. Tracked tensors carry a tape index."""

    __slots__ = ("data", "tape", "idx", "name")

    def __init__(self, data, tape: "Tape | None" = None, idx: int = -1, name: str | None = None):
        self.data = as_array(data)
        self.tape = tape
        self.idx = idx
        self.name = name

    @property
    def shape(self):
        return self.data.shape

    def item(self) -> float:
        return float(self.data.reshape(-1)[0])

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, tracked={self.tape is not None})"

    # arithmetic sugar; plain numbers/arrays lift to untracked constants
    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __matmul__(self, other):
        return matmul(self, other)

    def __neg__(self):
        return mul(self, -1.0)


class Tape:
    """Ordered record of primitive ops; backward visits each node exactly once."""

    def __init__(self):
        self._parents: list[tuple[int, ...]] = []
        self._vjps: list = []  # None for leaves/constants
        self._shapes: list[tuple[int, ...]] = []
        self._leaf_names: dict[str, int] = {}

    def _record(self, data: np.ndarray, parents: tuple[int, ...], vjp) -> Tensor:
        idx = len(self._parents)
        self._parents.append(parents)
        self._vjps.append(vjp)
        self._shapes.append(data.shape)
        return Tensor(data, tape=self, idx=idx)

    def watch(self, name: str, value) -> Tensor:
        """Register a named leaf. Unused leaves still get zero gradients."""
        if name in self._leaf_names:
            raise ValueError(f"leaf {name!r} already watched on this tape")
        t = self._record(as_array(value), (), None)
        t.name = name
        self._leaf_names[name] = t.idx
        return t

    def backward(self, loss: Tensor) -> dict[str, np.ndarray]:
        """Gradients of a scalar loss with respect to every watched leaf."""
        if loss.tape is not self:
            raise ValueError("loss does not belong to this tape")
        if not _is_scalar_shape(loss.data.shape):
            raise ValueError(f"backward requires a scalar loss, got shape {loss.data.shape}")
        n = len(self._parents)
        adj: list[np.ndarray | None] = [None] * n
        adj[loss.idx] = np.ones_like(loss.data)
        # non-finite values flow through silently; callers check the results
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            for i in range(loss.idx, -1, -1):
                a = adj[i]
                if a is None or self._vjps[i] is None:
                    continue
                for pidx, contrib in zip(self._parents[i], self._vjps[i](a)):
                    # accumulation allocates, so storing a view on first touch is safe
                    adj[pidx] = contrib if adj[pidx] is None else adj[pidx] + contrib
        grads = {}
        for name, idx in self._leaf_names.items():
            g = adj[idx]
            grads[name] = np.zeros(self._shapes[idx]) if g is None else as_array(g)
        return grads


def _lift(x) -> Tensor:
    if isinstance(x, Tensor):
        return x
    return Tensor(x)


def _result_tape(a: Tensor, b: Tensor | None = None) -> "Tape | None":
    ta = a.tape
    tb = b.tape if b is not None else None
    if ta is not None and tb is not None and ta is not tb:
        raise ValueError("operands belong to different tapes")
    return ta or tb


def _emit(tape, data, parent_tensors, vjp_builder) -> Tensor:
    """Register on the tape when any input is tracked, else return a plain value."""
    if tape is None:
        return Tensor(data)
    tracked = [(i, t.idx) for i, t in enumerate(parent_tensors) if t.tape is tape]
    parents = tuple(idx for _, idx in tracked)
    full_vjp = vjp_builder()

    def vjp(adj, keep=tuple(i for i, _ in tracked), f=full_vjp):
        outs = f(adj)
        return tuple(outs[i] for i in keep)

    return tape._record(data, parents, vjp)


def matmul(a, b) -> Tensor:
    a, b = _lift(a), _lift(b)
    if a.data.ndim != 2 or b.data.ndim != 2 or a.data.shape[1] != b.data.shape[0]:
        raise ValueError(f"matmul shape mismatch: {a.data.shape} x {b.data.shape}")
    with np.errstate(over="ignore", invalid="ignore"):
        out = a.data @ b.data
    ad, bd = a.data, b.data

    def build():
        return lambda adj: (adj @ bd.T, ad.T @ adj)

    return _emit(_result_tape(a, b), out, (a, b), build)


def _binary_elementwise(a, b, f, dfa, dfb, opname):
    a, b = _lift(a), _lift(b)
    sa, sb = a.data.shape, b.data.shape
    if not (sa == sb or _is_scalar_shape(sa) or _is_scalar_shape(sb)):
        raise ValueError(f"{opname}: shapes {sa} and {sb} are neither equal nor scalar-broadcast")
    with np.errstate(over="ignore", invalid="ignore"):
        out = f(a.data, b.data)
    ad, bd = a.data, b.data

    def reduce_to(g, shape):
        if g.shape == shape:
            return g
        return np.sum(g).reshape(shape)  # scalar operand: fold the broadcast axis back

    def build():
        return lambda adj: (reduce_to(dfa(adj, ad, bd), sa), reduce_to(dfb(adj, ad, bd), sb))

    return _emit(_result_tape(a, b), out, (a, b), build)


def add(a, b) -> Tensor:
    return _binary_elementwise(
        a, b, lambda x, y: x + y, lambda g, x, y: g, lambda g, x, y: g, "add"
    )


def sub(a, b) -> Tensor:
    return _binary_elementwise(
        a, b, lambda x, y: x - y, lambda g, x, y: g, lambda g, x, y: -g, "sub"
    )


def mul(a, b) -> Tensor:
    return _binary_elementwise(
        a, b, lambda x, y: x * y, lambda g, x, y: g * y, lambda g, x, y: g * x, "mul"
    )


def _unary(x, f, df, opname, check=None):
    x = _lift(x)
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        out = f(x.data)
    if check is not None and not np.all(np.isfinite(out)):
        raise NumericError(f"{opname} produced non-finite values")
    xd = x.data

    def build():
        return lambda adj: (df(adj, xd, out),)

    return _emit(_result_tape(x), out, (x,), build)


def sin(x) -> Tensor:
    return _unary(x, np.sin, lambda g, xd, o: g * np.cos(xd), "sin")


def exp(x) -> Tensor:
    return _unary(x, np.exp, lambda g, xd, o: g * o, "exp", check=True)


def log(x) -> Tensor:
    x = _lift(x)
    if np.any(x.data <= 0.0):
        raise NumericError("log of non-positive value")
    return _unary(x, np.log, lambda g, xd, o: g / xd, "log")


def square(x) -> Tensor:
    return _unary(x, np.square, lambda g, xd, o: 2.0 * g * xd, "square")


def clip(x, lo: float, hi: float) -> Tensor:
    """Clamp with pass-through gradient on [lo, hi] and zero outside."""

    def df(g, xd, o):
        return g * ((xd >= lo) & (xd <= hi))

    return _unary(x, lambda v: np.clip(v, lo, hi), df, "clip")


def add_bias(x, b) -> Tensor:
    """Row-broadcast bias add: (n, k) + (1, k). The sole non-scalar broadcast."""
    x, b = _lift(x), _lift(b)
    if x.data.ndim != 2 or b.data.shape != (1, x.data.shape[1]):
        raise ValueError(f"add_bias: expected (n,k)+(1,k), got {x.data.shape}+{b.data.shape}")
    out = x.data + b.data

    def build():
        return lambda adj: (adj, adj.sum(axis=0, keepdims=True))

    return _emit(_result_tape(x, b), out, (x, b), build)


def sum_all(x) -> Tensor:
    x = _lift(x)
    out = np.array([[x.data.sum()]])
    shape = x.data.shape

    def build():
        return lambda adj: (np.full(shape, adj.reshape(-1)[0]),)

    return _emit(_result_tape(x), out, (x,), build)


def sum_rows(x) -> Tensor:
    """Sum over the second axis: (n, k) -> (n, 1)."""
    x = _lift(x)
    if x.data.ndim != 2:
        raise ValueError(f"sum_rows expects a 2-d tensor, got shape {x.data.shape}")
    out = x.data.sum(axis=1, keepdims=True)
    k = x.data.shape[1]

    def build():
        return lambda adj: (np.repeat(adj, k, axis=1),)

    return _emit(_result_tape(x), out, (x,), build)
