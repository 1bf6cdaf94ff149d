"""Dense-tensor arithmetic with reverse-mode automatic differentiation.

A small numpy-backed engine: each op records its inputs and a backward
closure, ``backward`` walks the graph in reverse topological order, and
``adam_step`` applies the standard bias-corrected Adam update.  There is
no broadcasting between tensors; the only implicit alignment is between
a tensor and a python scalar.  Per-channel and per-row alignments get
their own named ops (``channel_scale``, ``add_bias``) so every shape
contract stays explicit.
"""

from __future__ import annotations

import contextlib
import math

import numpy as np


class ShapeError(ValueError):
    """Operand shapes do not conform for the attempted op."""


_grad_enabled = True


@contextlib.contextmanager
def no_grad():
    """Disable graph recording inside the block (inference mode)."""
    global _grad_enabled
    prev = _grad_enabled
    _grad_enabled = False
    try:
        yield
    finally:
        _grad_enabled = prev


class Tensor:
    """A dense array plus an optional gradient accumulator.

    ``data`` is a float32 or float64 ndarray.  ``grad`` is lazily created
    on the first backward pass and accumulates across passes until
    ``zero_grads`` is called.
    """

    __slots__ = ("data", "requires_grad", "grad", "_parents", "_backward", "_op")

    def __init__(self, data, requires_grad=False):
        arr = np.asarray(data)
        if arr.dtype not in (np.float32, np.float64):
            arr = arr.astype(np.float64)
        self.data = arr
        self.requires_grad = bool(requires_grad)
        self.grad = None
        self._parents = ()
        self._backward = None
        self._op = "leaf"

    @property
    def shape(self):
        return self.data.shape

    @property
    def size(self):
        return self.data.size

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, op={self._op}, requires_grad={self.requires_grad})"

    def item(self):
        return float(self.data.reshape(-1)[0])

    # python-number operands are the one permitted implicit alignment
    def __add__(self, other):
        if isinstance(other, Tensor):
            return add(self, other)
        return add_scalar(self, float(other))

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Tensor):
            return sub(self, other)
        return add_scalar(self, -float(other))

    def __rsub__(self, other):
        return add_scalar(mul_scalar(self, -1.0), float(other))

    def __mul__(self, other):
        if isinstance(other, Tensor):
            return mul(self, other)
        return mul_scalar(self, float(other))

    __rmul__ = __mul__

    def __neg__(self):
        return mul_scalar(self, -1.0)


def _result(data, parents, backward, op):
    """Wrap an op result, recording the graph only when it is needed."""
    out = Tensor(data)
    if _grad_enabled and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = tuple(parents)
        out._backward = backward
        out._op = op
    return out


def _check_same_shape(op, a, b):
    if a.data.shape != b.data.shape:
        raise ShapeError(f"{op}: operand shapes {a.data.shape} and {b.data.shape} differ")


# ---------------------------------------------------------------------------
# elementwise ops


def add(a, b):
    _check_same_shape("add", a, b)

    def backward(g):
        return ((a, g), (b, g))

    return _result(a.data + b.data, (a, b), backward, "add")


def sub(a, b):
    _check_same_shape("sub", a, b)

    def backward(g):
        return ((a, g), (b, -g))

    return _result(a.data - b.data, (a, b), backward, "sub")


def mul(a, b):
    _check_same_shape("mul", a, b)

    def backward(g):
        return ((a, g * b.data), (b, g * a.data))

    return _result(a.data * b.data, (a, b), backward, "mul")


def add_scalar(a, s):
    def backward(g):
        return ((a, g),)

    return _result(a.data + s, (a,), backward, "add_scalar")


def mul_scalar(a, s):
    def backward(g):
        return ((a, g * s),)

    return _result(a.data * s, (a,), backward, "mul_scalar")


def exp(a):
    out_data = np.exp(a.data)

    def backward(g):
        return ((a, g * out_data),)

    return _result(out_data, (a,), backward, "exp")


def tanh(a):
    out_data = np.tanh(a.data)

    def backward(g):
        return ((a, g * (1.0 - out_data * out_data)),)

    return _result(out_data, (a,), backward, "tanh")


def relu(a):
    mask = a.data > 0

    def backward(g):
        return ((a, g * mask),)

    # np.maximum (not where) so NaN propagates instead of masking to 0
    return _result(np.maximum(a.data, 0.0), (a,), backward, "relu")


# ---------------------------------------------------------------------------
# linear-algebra ops


def matmul(a, b):
    if a.data.ndim != 2 or b.data.ndim != 2:
        raise ShapeError(f"matmul: expects 2D operands, got {a.data.shape} and {b.data.shape}")
    if a.data.shape[1] != b.data.shape[0]:
        raise ShapeError(f"matmul: inner dims of {a.data.shape} and {b.data.shape} differ")

    def backward(g):
        return ((a, g @ b.data.T), (b, a.data.T @ g))

    return _result(a.data @ b.data, (a, b), backward, "matmul")


def add_bias(x, b):
    """Add a length-m bias row vector to every row of an (n, m) matrix."""
    if x.data.ndim != 2 or b.data.ndim != 1 or x.data.shape[1] != b.data.shape[0]:
        raise ShapeError(f"add_bias: got matrix {x.data.shape} and bias {b.data.shape}")

    def backward(g):
        return ((x, g), (b, g.sum(axis=0)))

    return _result(x.data + b.data[None, :], (x, b), backward, "add_bias")


def channel_scale(x, s):
    """Multiply each channel (last axis) of x by the matching entry of s."""
    if s.data.ndim != 1 or x.data.shape[-1] != s.data.shape[0]:
        raise ShapeError(f"channel_scale: got tensor {x.data.shape} and scale {s.data.shape}")

    def backward(g):
        axes = tuple(range(x.data.ndim - 1))
        return ((x, g * s.data), (s, (g * x.data).sum(axis=axes)))

    return _result(x.data * s.data, (x, s), backward, "channel_scale")


def concat(tensors, axis=-1):
    tensors = list(tensors)
    if not tensors:
        raise ShapeError("concat: needs at least one tensor")
    ref = tensors[0].data.shape
    for t in tensors[1:]:
        a, b = list(ref), list(t.data.shape)
        a[axis] = b[axis] = 0
        if a != b:
            raise ShapeError(f"concat: shapes {ref} and {t.data.shape} differ off the concat axis")
    sizes = [t.data.shape[axis] for t in tensors]
    offsets = np.cumsum([0] + sizes)

    def backward(g):
        pieces = []
        for t, lo, hi in zip(tensors, offsets[:-1], offsets[1:]):
            key = [slice(None)] * g.ndim
            key[axis] = slice(lo, hi)
            pieces.append((t, g[tuple(key)]))
        return tuple(pieces)

    return _result(np.concatenate([t.data for t in tensors], axis=axis), tensors, backward, "concat")


def getitem(x, key):
    """Basic (non-fancy) slicing with scatter-back gradient."""

    def backward(g):
        full = np.zeros_like(x.data)
        full[key] = g
        return ((x, full),)

    return _result(x.data[key], (x,), backward, "getitem")


def slice_channels(x, start, stop):
    return getitem(x, (Ellipsis, slice(start, stop)))


def reshape(x, shape):
    old = x.data.shape

    def backward(g):
        return ((x, g.reshape(old)),)

    return _result(x.data.reshape(shape), (x,), backward, "reshape")


def gather_pixels(x, iy, ix):
    """Pick N pixel vectors from an (H, W, C) tensor: out[n] = x[iy[n], ix[n]]."""
    if x.data.ndim != 3:
        raise ShapeError(f"gather_pixels: expects (H, W, C), got {x.data.shape}")
    iy = np.asarray(iy, dtype=np.intp)
    ix = np.asarray(ix, dtype=np.intp)

    def backward(g):
        full = np.zeros_like(x.data)
        np.add.at(full, (iy, ix), g)
        return ((x, full),)

    return _result(x.data[iy, ix], (x,), backward, "gather_pixels")


def take_rows(x, idx):
    """Pick rows of a 2D tensor by index array (duplicates allowed)."""
    if x.data.ndim != 2:
        raise ShapeError(f"take_rows: expects 2D, got {x.data.shape}")
    idx = np.asarray(idx, dtype=np.intp)

    def backward(g):
        full = np.zeros_like(x.data)
        np.add.at(full, idx, g)
        return ((x, full),)

    return _result(x.data[idx], (x,), backward, "take_rows")


def row_scale(x, s):
    """Scale each row of an (N, M) tensor by the matching entry of a
    constant length-N vector (no gradient flows to the weights)."""
    s = np.asarray(s, dtype=np.float64)
    if x.data.ndim != 2 or s.ndim != 1 or x.data.shape[0] != s.shape[0]:
        raise ShapeError(f"row_scale: got tensor {x.data.shape} and weights {s.shape}")

    def backward(g):
        return ((x, g * s[:, None]),)

    return _result(x.data * s[:, None], (x,), backward, "row_scale")


# ---------------------------------------------------------------------------
# reductions


def tsum(x):
    def backward(g):
        return ((x, np.full_like(x.data, float(g))),)

    return _result(np.asarray(x.data.sum()), (x,), backward, "sum")


def mean(x):
    n = x.data.size

    def backward(g):
        return ((x, np.full_like(x.data, float(g) / n)),)

    return _result(np.asarray(x.data.mean()), (x,), backward, "mean")


def mse(a, b):
    """Mean squared error between two same-shape tensors (scalar output)."""
    _check_same_shape("mse", a, b)
    diff = a.data - b.data
    n = diff.size

    def backward(g):
        scaled = (2.0 * float(g) / n) * diff
        return ((a, scaled), (b, -scaled))

    return _result(np.asarray(np.mean(diff * diff)), (a, b), backward, "mse")


# ---------------------------------------------------------------------------
# 2D convolution (stride 1, odd kernel, zero or reflect padding)


def _pad_indices(n, p, mode):
    idx = np.arange(-p, n + p)
    if mode == "reflect":
        idx = np.abs(idx)
        idx = np.where(idx >= n, 2 * (n - 1) - idx, idx)
    return idx


def conv2d(x, w, b=None, padding="zero"):
    """Same-size 2D convolution of an (H, W, Cin) tensor.

    Kernel w has shape (K, K, Cin, Cout) with K odd; the optional bias b
    has shape (Cout,).  Stride is fixed at 1 and the output keeps the
    input's spatial dims.
    """
    H, W, cin = _conv_check(x, w, b)
    K = w.data.shape[0]
    p = K // 2
    cout = w.data.shape[3]

    if padding == "zero":
        xp = np.pad(x.data, ((p, p), (p, p), (0, 0)))
    elif padding == "reflect":
        ri = _pad_indices(H, p, "reflect")
        ci = _pad_indices(W, p, "reflect")
        xp = x.data[np.ix_(ri, ci)]
    else:
        raise ValueError(f"conv2d: unknown padding mode {padding!r}")

    # im2col: one BLAS matmul instead of a K*K python loop per pixel
    win = np.lib.stride_tricks.sliding_window_view(xp, (K, K), axis=(0, 1))
    cols = win.transpose(0, 1, 3, 4, 2).reshape(H * W, K * K * cin)
    wmat = w.data.reshape(K * K * cin, cout)
    out = cols @ wmat
    if b is not None:
        out = out + b.data[None, :]
    out = out.reshape(H, W, cout)

    parents = (x, w) if b is None else (x, w, b)

    def backward(g):
        gmat = g.reshape(H * W, cout)
        gw = (cols.T @ gmat).reshape(K, K, cin, cout)
        gcols = (gmat @ wmat.T).reshape(H, W, K, K, cin)
        gxp = np.zeros_like(xp)
        for u in range(K):
            for v in range(K):
                gxp[u:u + H, v:v + W, :] += gcols[:, :, u, v, :]
        if padding == "zero":
            gx = gxp[p:p + H, p:p + W, :]
        else:
            gx = np.zeros_like(x.data)
            np.add.at(gx, np.ix_(ri, ci), gxp)
        grads = [(x, gx), (w, gw)]
        if b is not None:
            grads.append((b, gmat.sum(axis=0)))
        return tuple(grads)

    return _result(out, parents, backward, "conv2d")


def _conv_check(x, w, b):
    if x.data.ndim != 3:
        raise ShapeError(f"conv2d: input must be (H, W, C), got {x.data.shape}")
    if w.data.ndim != 4 or w.data.shape[0] != w.data.shape[1]:
        raise ShapeError(f"conv2d: kernel must be (K, K, Cin, Cout), got {w.data.shape}")
    if w.data.shape[0] % 2 != 1:
        raise ShapeError(f"conv2d: kernel size {w.data.shape[0]} must be odd")
    if x.data.shape[2] != w.data.shape[2]:
        raise ShapeError(f"conv2d: input channels {x.data.shape} do not match kernel {w.data.shape}")
    if b is not None and (b.data.ndim != 1 or b.data.shape[0] != w.data.shape[3]):
        raise ShapeError(f"conv2d: bias {b.data.shape} does not match kernel {w.data.shape}")
    return x.data.shape[0], x.data.shape[1], x.data.shape[2]


# ---------------------------------------------------------------------------
# backward pass


def backward(loss):
    """Accumulate d(loss)/d(t) into t.grad for every reachable tensor.

    loss must be scalar.  Calling backward twice without zero_grads adds
    the two gradient fields together.
    """
    if loss.data.size != 1:
        raise ValueError(f"backward: loss must be scalar, got shape {loss.data.shape}")

    topo = []
    visited = set()
    stack = [(loss, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            topo.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if id(p) not in visited:
                stack.append((p, False))

    flowing = {id(loss): np.ones_like(loss.data)}
    for node in reversed(topo):
        g = flowing.pop(id(node), None)
        if g is None:
            continue
        if node.requires_grad:
            node.grad = g.copy() if node.grad is None else node.grad + g
        if node._backward is None:
            continue
        for parent, contrib in node._backward(g):
            if not parent.requires_grad:
                continue
            acc = flowing.get(id(parent))
            flowing[id(parent)] = contrib if acc is None else acc + contrib


def zero_grads(params):
    for p in params:
        p.grad = None


# ---------------------------------------------------------------------------
# Adam optimizer


class AdamState:
    """First/second moment accumulators for a fixed parameter list."""

    def __init__(self, params, beta1=0.9, beta2=0.999, epsilon=1e-8):
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon
        self.step_count = 0
        self.m = [np.zeros_like(p.data) for p in params]
        self.v = [np.zeros_like(p.data) for p in params]


def adam_step(params, grads, state, lr):
    """One Adam update with bias correction.

    grads may be None, in which case each parameter's .grad is used
    (missing gradients count as zero).
    """
    if lr <= 0:
        raise ValueError(f"adam_step: lr must be positive, got {lr}")
    if grads is None:
        grads = [p.grad for p in params]
    if len(grads) != len(params) or len(params) != len(state.m):
        raise ShapeError("adam_step: params, grads and state lengths differ")

    state.step_count += 1
    t = state.step_count
    bc1 = 1.0 - state.beta1 ** t
    bc2 = 1.0 - state.beta2 ** t
    for i, (p, g) in enumerate(zip(params, grads)):
        if g is None:
            g = np.zeros_like(p.data)
        if g.shape != p.data.shape:
            raise ShapeError(f"adam_step: grad shape {g.shape} does not match param {p.data.shape}")
        if not np.all(np.isfinite(g)):
            raise FloatingPointError(f"adam_step: non-finite gradient at parameter index {i}")
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * (g * g)
        m_hat = state.m[i] / bc1
        v_hat = state.v[i] / bc2
        p.data = p.data - lr * m_hat / (np.sqrt(v_hat) + state.epsilon)


def cosine_lr(step, total, lr0):
    """Cosine annealing from lr0 at step 0 down to 0 at step == total."""
    if total <= 0:
        raise ValueError(f"cosine_lr: total must be positive, got {total}")
    if step < 0 or step > total:
        raise ValueError(f"cosine_lr: step {step} outside [0, {total}]")
    return lr0 * (1.0 + math.cos(math.pi * step / total)) / 2.0
