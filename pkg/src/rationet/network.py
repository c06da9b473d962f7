"""A two-layer perceptron with hand-written analytic derivatives.

The scored function is

    u(x) = g0( b1 . relu(a1 @ x + a0) + b0 )

with a ReLU hidden layer of width `hidden` and a selectable scalar output
nonlinearity g0.  Everything downstream (training, sequential detection,
local statistics) needs three exact derivative paths: the gradient with
respect to the parameters, the gradient with respect to the input, and the
parameter gradient of a weighted input gradient.  All are implemented in
closed form on top of numpy; ReLU's second derivative is zero almost
everywhere, so only g0 contributes curvature to the mixed path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DimensionError, FormatError, ParamError


@dataclass(frozen=True)
class OutputNonlinearity:
    """Scalar output map with its first two derivatives and range label."""

    kind: str
    value: Callable[[np.ndarray], np.ndarray]
    deriv: Callable[[np.ndarray], np.ndarray]
    second: Callable[[np.ndarray], np.ndarray]
    range_label: str
    param: float | None = None

    @property
    def spec(self) -> str:
        if self.param is None:
            return self.kind
        return f"{self.kind}:{self.param:g}"


def identity_output() -> OutputNonlinearity:
    return OutputNonlinearity(
        "identity",
        value=lambda v: np.asarray(v, dtype=float),
        deriv=lambda v: np.ones_like(np.asarray(v, dtype=float)),
        second=lambda v: np.zeros_like(np.asarray(v, dtype=float)),
        range_label="real",
    )


def relu_output() -> OutputNonlinearity:
    return OutputNonlinearity(
        "relu",
        value=lambda v: np.maximum(v, 0.0),
        deriv=lambda v: (np.asarray(v, dtype=float) > 0).astype(float),
        second=lambda v: np.zeros_like(np.asarray(v, dtype=float)),
        range_label="nonnegative",
    )


def elu_output(c: float = 0.01) -> OutputNonlinearity:
    """Strictly positive output: c*e^v below zero, v + c above."""
    if c <= 0:
        raise ParamError("elu constant must be positive")

    def value(v, c=c):
        v = np.asarray(v, dtype=float)
        return np.where(v <= 0, c * np.exp(np.minimum(v, 0.0)), v + c)

    def deriv(v, c=c):
        v = np.asarray(v, dtype=float)
        return np.where(v <= 0, c * np.exp(np.minimum(v, 0.0)), 1.0)

    def second(v, c=c):
        v = np.asarray(v, dtype=float)
        return np.where(v <= 0, c * np.exp(np.minimum(v, 0.0)), 0.0)

    return OutputNonlinearity("elu", value, deriv, second, "positive", param=c)


def exp_output() -> OutputNonlinearity:
    return OutputNonlinearity(
        "exp", value=np.exp, deriv=np.exp, second=np.exp, range_label="positive"
    )


def sigmoid_output() -> OutputNonlinearity:
    def value(v):
        v = np.asarray(v, dtype=float)
        return np.where(v >= 0, 1.0 / (1.0 + np.exp(-np.abs(v))),
                        np.exp(-np.abs(v)) / (1.0 + np.exp(-np.abs(v))))

    def deriv(v):
        s = value(v)
        return s * (1.0 - s)

    def second(v):
        s = value(v)
        return s * (1.0 - s) * (1.0 - 2.0 * s)

    return OutputNonlinearity("sigmoid", value, deriv, second, "unit")


def tanh_output() -> OutputNonlinearity:
    def deriv(v):
        t = np.tanh(v)
        return 1.0 - t * t

    def second(v):
        t = np.tanh(v)
        return -2.0 * t * (1.0 - t * t)

    return OutputNonlinearity("tanh", np.tanh, deriv, second, "symmetric_unit")


def bounded_rational_output(s: float = 2.0) -> OutputNonlinearity:
    """g0(v) = s*v / (s - 1 + |v|^s), a saturating map onto [-1, 1]."""
    if s <= 1:
        raise ParamError("bounded_rational exponent must exceed 1")

    def value(v, s=s):
        v = np.asarray(v, dtype=float)
        return s * v / (s - 1.0 + np.abs(v) ** s)

    def deriv(v, s=s):
        v = np.asarray(v, dtype=float)
        den = s - 1.0 + np.abs(v) ** s
        return s * (s - 1.0) * (1.0 - np.abs(v) ** s) / den**2

    def second(v, s=s):
        v = np.asarray(v, dtype=float)
        a = np.abs(v)
        den = s - 1.0 + a**s
        return -(s**2) * (s - 1.0) * np.sign(v) * a ** (s - 1.0) * (s + 1.0 - a**s) / den**3

    return OutputNonlinearity(
        "bounded_rational", value, deriv, second, "symmetric_unit", param=s
    )


_OUTPUT_BUILDERS = {
    "identity": identity_output,
    "relu": relu_output,
    "elu": elu_output,
    "exp": exp_output,
    "sigmoid": sigmoid_output,
    "tanh": tanh_output,
    "bounded_rational": bounded_rational_output,
}


def output_from_name(spec: str) -> OutputNonlinearity:
    """Build an output nonlinearity from a "name" or "name:param" string."""
    name, _, arg = spec.strip().partition(":")
    name = name.strip().lower()
    if name not in _OUTPUT_BUILDERS:
        raise ParamError(
            f"unknown output nonlinearity {spec!r}; "
            f"valid kinds: {', '.join(sorted(_OUTPUT_BUILDERS))}"
        )
    builder = _OUTPUT_BUILDERS[name]
    if arg:
        return builder(float(arg))
    return builder()


@dataclass
class Mlp2:
    """Two-layer network: `a1` (hidden x k), `a0`, `b1` (hidden), `b0`."""

    a1: np.ndarray
    a0: np.ndarray
    b1: np.ndarray
    b0: float
    g0: OutputNonlinearity

    def __post_init__(self):
        self.a1 = np.asarray(self.a1, dtype=float)
        self.a0 = np.asarray(self.a0, dtype=float)
        self.b1 = np.asarray(self.b1, dtype=float)
        self.b0 = float(self.b0)
        if self.a1.ndim != 2:
            raise DimensionError("a1 must be a (hidden, k) matrix")
        hidden = self.a1.shape[0]
        if self.a0.shape != (hidden,) or self.b1.shape != (hidden,):
            raise DimensionError("a0 and b1 must have one entry per hidden unit")

    @property
    def k(self) -> int:
        return self.a1.shape[1]

    @property
    def hidden(self) -> int:
        return self.a1.shape[0]

    @property
    def param_count(self) -> int:
        return self.hidden * (self.k + 2) + 1

    @classmethod
    def init(cls, k: int, hidden: int, g0: OutputNonlinearity, seed) -> "Mlp2":
        """Uniform init scaled by fan-in/fan-out; offsets start at zero."""
        if k < 1 or hidden < 1:
            raise DimensionError("k and hidden must be positive")
        rng = np.random.default_rng(seed)
        bound1 = math.sqrt(6.0 / (k + hidden))
        a1 = rng.uniform(-bound1, bound1, size=(hidden, k))
        bound2 = math.sqrt(6.0 / (hidden + 1))
        b1 = rng.uniform(-bound2, bound2, size=hidden)
        return cls(a1=a1, a0=np.zeros(hidden), b1=b1, b0=0.0, g0=g0)

    @classmethod
    def ramp_init(
        cls, k: int, hidden: int, g0: OutputNonlinearity, seed, span: float = 2.5
    ) -> "Mlp2":
        """Hidden units start as hinges tiling [-span, span] instead of the
        all-at-the-origin layout of `init`.

        With every kink at zero the optimizer has to drag kinks into place
        through flat-gradient territory, which is slow and easily leaves the
        fit lopsided; pre-spread kinks let the output weights do most of the
        work.  Best suited to fitting smooth functions of low-dimensional
        standardized inputs.  For k > 1 each unit gets a random unit-length
        direction and its kink plane is offset along it.
        """
        if k < 1 or hidden < 1:
            raise DimensionError("k and hidden must be positive")
        if span <= 0:
            raise DimensionError("span must be positive")
        rng = np.random.default_rng(seed)
        offsets = np.linspace(-span, span, hidden)
        if k == 1:
            signs = np.where(np.arange(hidden) % 2 == 0, 1.0, -1.0)
            a1 = signs.reshape(hidden, 1)
            a0 = -signs * offsets
        else:
            a1 = rng.standard_normal((hidden, k))
            a1 /= np.linalg.norm(a1, axis=1, keepdims=True)
            a0 = -offsets
        b1 = rng.normal(0.0, 0.05, size=hidden)
        return cls(a1=a1, a0=a0, b1=b1, b0=0.0, g0=g0)

    def prepare_input(self, x) -> tuple[np.ndarray, bool]:
        """Coerce input to (n, k); returns the matrix and a single-sample flag."""
        arr = np.asarray(x, dtype=float)
        if arr.ndim == 0:
            if self.k != 1:
                raise DimensionError(f"scalar input for a network with k={self.k}")
            return arr.reshape(1, 1), True
        if arr.ndim == 1:
            if arr.shape[0] == self.k:
                return arr.reshape(1, self.k), True
            if self.k == 1:
                return arr.reshape(-1, 1), False
            raise DimensionError(
                f"1-d input of length {arr.shape[0]} for a network with k={self.k}"
            )
        if arr.ndim == 2 and arr.shape[1] == self.k:
            return arr, False
        raise DimensionError(f"input shape {arr.shape} does not match k={self.k}")

    def forward(self, x):
        X, single = self.prepare_input(x)
        _, _, _, u = forward_parts(self, X)
        return float(u[0]) if single else u

    def __call__(self, x):
        return self.forward(x)

    def to_vector(self) -> np.ndarray:
        """Flatten parameters as [a1 row-major, a0, b1, b0]."""
        return np.concatenate(
            [self.a1.ravel(), self.a0, self.b1, np.array([self.b0])]
        )

    def with_vector(self, vec: np.ndarray) -> "Mlp2":
        vec = np.asarray(vec, dtype=float)
        if vec.shape != (self.param_count,):
            raise DimensionError(
                f"parameter vector has length {vec.shape}, expected {self.param_count}"
            )
        n, k = self.hidden, self.k
        a1 = vec[: n * k].reshape(n, k).copy()
        a0 = vec[n * k : n * k + n].copy()
        b1 = vec[n * k + n : n * k + 2 * n].copy()
        b0 = float(vec[-1])
        return Mlp2(a1=a1, a0=a0, b1=b1, b0=b0, g0=self.g0)

    def serialize(self) -> bytes:
        return serialize(self)

    def copy(self) -> "Mlp2":
        return Mlp2(self.a1.copy(), self.a0.copy(), self.b1.copy(), self.b0, self.g0)


def forward_parts(net: Mlp2, X: np.ndarray):
    """Hidden pre-activations z, activations h, output pre-activation v, u."""
    z = X @ net.a1.T + net.a0
    h = np.maximum(z, 0.0)
    v = h @ net.b1 + net.b0
    u = net.g0.value(v)
    return z, h, v, u


def weighted_grad_sum(net: Mlp2, X: np.ndarray, w: np.ndarray) -> np.ndarray:
    """sum_i w_i * d u(x_i) / d theta, flattened like `to_vector`."""
    z, h, v, _ = forward_parts(net, X)
    cw = np.asarray(w, dtype=float) * net.g0.deriv(v)
    mask = (z > 0).astype(float)
    t = mask * cw[:, None]
    ga1 = net.b1[:, None] * (t.T @ X)
    ga0 = net.b1 * t.sum(axis=0)
    gb1 = h.T @ cw
    gb0 = cw.sum()
    return np.concatenate([ga1.ravel(), ga0, gb1, np.array([gb0])])


def grad_theta(net: Mlp2, x) -> np.ndarray:
    """Gradient of u at a single input with respect to all parameters."""
    X, single = net.prepare_input(x)
    if not single:
        raise DimensionError("grad_theta expects a single input point")
    return weighted_grad_sum(net, X, np.ones(1))


def grad_input_batch(net: Mlp2, X: np.ndarray) -> np.ndarray:
    """Rows of d u / d x for each sample in X (n, k)."""
    z, _, v, _ = forward_parts(net, X)
    mask = (z > 0).astype(float)
    return net.g0.deriv(v)[:, None] * ((mask * net.b1) @ net.a1)


def grad_input(net: Mlp2, x) -> np.ndarray:
    X, single = net.prepare_input(x)
    if not single:
        raise DimensionError("grad_input expects a single input point")
    return grad_input_batch(net, X)[0]


def weighted_mixed_grad_sum(
    net: Mlp2, X: np.ndarray, P: np.ndarray, w: np.ndarray
) -> np.ndarray:
    """sum_i w_i * d/d theta [ p_i . grad_x u(x_i) ], flattened.

    The hidden ReLU is piecewise linear, so its mask is locally constant and
    only g0 contributes second-order terms.
    """
    z, h, v, _ = forward_parts(net, X)
    w = np.asarray(w, dtype=float)
    mask = (z > 0).astype(float)
    ap = P @ net.a1.T
    masked_ap = mask * ap
    q = masked_ap @ net.b1
    c1 = w * net.g0.second(v) * q
    c2 = w * net.g0.deriv(v)
    gb0 = c1.sum()
    gb1 = h.T @ c1 + masked_ap.T @ c2
    ga0 = net.b1 * (mask.T @ c1)
    ga1 = net.b1[:, None] * ((mask * c1[:, None]).T @ X + (mask * c2[:, None]).T @ P)
    return np.concatenate([ga1.ravel(), ga0, gb1, np.array([gb0])])


def grad_theta_of_input_grad(net: Mlp2, x, p) -> np.ndarray:
    """Parameter gradient of p . grad_x u at a single input point."""
    X, single = net.prepare_input(x)
    if not single:
        raise DimensionError("grad_theta_of_input_grad expects a single input point")
    p = np.asarray(p, dtype=float).reshape(1, net.k)
    return weighted_mixed_grad_sum(net, X, p, np.ones(1))


def fd_grad_theta(net: Mlp2, x, step: float = 1e-5) -> np.ndarray:
    """Central-difference parameter gradient, for checking the analytic one."""
    theta = net.to_vector()
    grad = np.empty_like(theta)
    for i in range(theta.size):
        up, down = theta.copy(), theta.copy()
        up[i] += step
        down[i] -= step
        grad[i] = (net.with_vector(up).forward(x)
                   - net.with_vector(down).forward(x)) / (2.0 * step)
    return grad


def fd_grad_input(net: Mlp2, x, step: float = 1e-5) -> np.ndarray:
    """Central-difference input gradient at a single point."""
    x = np.asarray(x, dtype=float).reshape(net.k)
    grad = np.empty(net.k)
    for l in range(net.k):
        up, down = x.copy(), x.copy()
        up[l] += step
        down[l] -= step
        grad[l] = (net.forward(up) - net.forward(down)) / (2.0 * step)
    return grad


def fd_grad_theta_of_input_grad(net: Mlp2, x, p, step: float = 1e-5) -> np.ndarray:
    """Central-difference check of grad_theta_of_input_grad."""
    p = np.asarray(p, dtype=float).reshape(net.k)
    theta = net.to_vector()
    grad = np.empty_like(theta)
    for i in range(theta.size):
        up, down = theta.copy(), theta.copy()
        up[i] += step
        down[i] -= step
        grad[i] = (p @ grad_input(net.with_vector(up), x)
                   - p @ grad_input(net.with_vector(down), x)) / (2.0 * step)
    return grad


def _format_row(values) -> str:
    return " ".join(f"{float(v):.17g}" for v in np.atleast_1d(values))


def serialize(net: Mlp2) -> bytes:
    """Self-describing text encoding; 17 significant digits round-trip floats."""
    lines = [
        "mlp2",
        f"k {net.k}",
        f"hidden {net.hidden}",
        f"g0 {net.g0.spec}",
        "a1",
    ]
    lines.extend(_format_row(row) for row in net.a1)
    lines.append("a0")
    lines.append(_format_row(net.a0))
    lines.append("b1")
    lines.append(_format_row(net.b1))
    lines.append("b0")
    lines.append(_format_row(net.b0))
    return ("\n".join(lines) + "\n").encode("ascii")


def deserialize(data: bytes | str) -> Mlp2:
    if isinstance(data, bytes):
        data = data.decode("ascii", errors="replace")
    lines = [ln.strip() for ln in data.splitlines() if ln.strip()]
    try:
        if lines[0] != "mlp2":
            raise FormatError(f"bad header {lines[0]!r}")
        tag, k_str = lines[1].split()
        if tag != "k":
            raise FormatError("missing k field")
        k = int(k_str)
        tag, hidden_str = lines[2].split()
        if tag != "hidden":
            raise FormatError("missing hidden field")
        hidden = int(hidden_str)
        tag, _, g0_spec = lines[3].partition(" ")
        if tag != "g0":
            raise FormatError("missing g0 field")
        g0 = output_from_name(g0_spec)
        if lines[4] != "a1":
            raise FormatError("missing a1 block")
        a1_rows = lines[5 : 5 + hidden]
        a1 = np.array([[float(v) for v in row.split()] for row in a1_rows])
        if a1.shape != (hidden, k):
            raise FormatError(f"a1 block has shape {a1.shape}, expected {(hidden, k)}")
        pos = 5 + hidden
        if lines[pos] != "a0":
            raise FormatError("missing a0 block")
        a0 = np.array([float(v) for v in lines[pos + 1].split()])
        if lines[pos + 2] != "b1":
            raise FormatError("missing b1 block")
        b1 = np.array([float(v) for v in lines[pos + 3].split()])
        if lines[pos + 4] != "b0":
            raise FormatError("missing b0 block")
        b0 = float(lines[pos + 5])
        if a0.shape != (hidden,) or b1.shape != (hidden,):
            raise FormatError("a0/b1 length does not match the declared width")
    except FormatError:
        raise
    except (IndexError, ValueError) as exc:
        raise FormatError(f"model record does not parse: {exc}") from exc
    return Mlp2(a1=a1, a0=a0, b1=b1, b0=b0, g0=g0)


def save_model(net: Mlp2, path) -> None:
    with open(path, "wb") as fh:
        fh.write(serialize(net))


def load_model(path) -> Mlp2:
    with open(path, "rb") as fh:
        return deserialize(fh.read())
