"""Forward passes of simplicial layers: SNN, SCNN, simplicial MPNN and Bi-SCNN.

Feature arrays are laid out with simplices on the first axis: ``(N_k, d)`` for
a single cochain or ``(N_k, B, d)`` for a batch of ``B`` independent samples
sharing one complex. Weight matrices act on the last axis, Laplacians on the
first, so samples in a batch never mix.

Every forward function accepts an optional ``cache`` dict. When given, it is
filled with the intermediates that :mod:`tspnet.training` needs for the
backward pass.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp

from .complex import HodgeTriple
from .errors import DimensionMismatch

__all__ = [
    "ACTIVATIONS",
    "Activation",
    "BiOutputs",
    "HeadParams",
    "LayerParams",
    "MpnnParams",
    "binarize_features",
    "biscnn_layer_forward",
    "biscnn_network_forward",
    "feature_normalize",
    "get_activation",
    "hard_tanh",
    "matmul_last",
    "mpnn_forward",
    "poly_forward",
    "readout_head",
    "scnn_forward",
    "sign_fn",
    "snn_forward",
    "softmax",
]


# ---------------------------------------------------------------------------
# elementwise pieces


def sign_fn(x) -> np.ndarray:
    """+1 where ``x >= 0``, -1 elsewhere (zero maps to +1)."""
    x = np.asarray(x, dtype=np.float64)
    return np.where(x >= 0, 1.0, -1.0)


def hard_tanh(x) -> tuple[np.ndarray, np.ndarray]:
    """Clamp to ``[-1, 1]``; the boolean mask is true where ``|x| <= 1`` (boundary included)."""
    x = np.asarray(x, dtype=np.float64)
    clipped = np.clip(x, -1.0, 1.0)
    return clipped, clipped == x


def feature_normalize(X) -> np.ndarray:
    """Row-wise mean absolute value, ``m_i = ||X_i||_1 / d``.

    A 1-D input is a single-feature signal, so ``m = |x|``. Batched input
    ``(N, B, d)`` gives ``(N, B)``.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        return np.abs(X)
    return np.abs(X).mean(axis=-1)


@dataclass(frozen=True)
class BiOutputs:
    """Magnitude vector ``m`` and sign pattern ``q`` emitted by a binarizing layer."""

    m: np.ndarray
    q: np.ndarray

    def weighted(self) -> np.ndarray:
        """``m`` broadcast over columns times ``q``."""
        return self.m[..., None] * self.q if self.q.ndim > self.m.ndim else self.m * self.q


def binarize_features(X, mode: str = "infer") -> BiOutputs:
    """Factor ``X`` into per-row magnitude and sign, ``X_bar = m o Sign(X)``.

    ``mode="train"`` uses the hard-tanh surrogate instead of the exact sign.
    """
    _check_mode(mode)
    m = feature_normalize(X)
    q = hard_tanh(X)[0] if mode == "train" else sign_fn(X)
    return BiOutputs(m, q)


def _check_mode(mode: str) -> None:
    if mode not in ("train", "infer"):
        raise ValueError(f"mode must be 'train' or 'infer', got {mode!r}")


@dataclass(frozen=True)
class Activation:
    name: str
    fn: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    deriv: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    odd: bool = False

    def __call__(self, x):
        return self.fn(np.asarray(x, dtype=np.float64))

    def grad(self, x):
        return self.deriv(np.asarray(x, dtype=np.float64))


LEAKY_SLOPE = 0.01

ACTIVATIONS: dict[str, Activation] = {
    "id": Activation("id", lambda x: x, np.ones_like, odd=True),
    "lr": Activation(
        "lr",
        lambda x: np.where(x >= 0, x, LEAKY_SLOPE * x),
        lambda x: np.where(x >= 0, 1.0, LEAKY_SLOPE),
    ),
    "tanh": Activation("tanh", np.tanh, lambda x: 1.0 - np.tanh(x) ** 2, odd=True),
    "hard_tanh": Activation("hard_tanh", lambda x: hard_tanh(x)[0], lambda x: hard_tanh(x)[1].astype(np.float64), odd=True),
}
_ALIASES = {"identity": "id", "leaky_relu": "lr", "hardtanh": "hard_tanh"}


def get_activation(name: str | Activation) -> Activation:
    if isinstance(name, Activation):
        return name
    key = _ALIASES.get(name, name)
    try:
        return ACTIVATIONS[key]
    except KeyError:
        raise ValueError(f"unknown activation {name!r}; choose from {sorted(ACTIVATIONS)}") from None


# ---------------------------------------------------------------------------
# linear polynomial part shared by SNN / SCNN / Bi-SCNN


def apply_op(L: sp.spmatrix | None, Z: np.ndarray) -> np.ndarray:
    """``L`` acting on the simplex axis of ``Z`` (``None`` is the identity)."""
    if L is None:
        return Z
    return np.asarray(L @ Z.reshape(Z.shape[0], -1)).reshape(Z.shape)


def matmul_last(Z: np.ndarray, W: np.ndarray) -> np.ndarray:
    """``Z @ W`` on the last axis, done as one 2-D product."""
    return (Z.reshape(-1, Z.shape[-1]) @ W).reshape(Z.shape[:-1] + (W.shape[1],))


# A term is (operator or None, first power, [W_0, W_1, ...]) and contributes
# sum_j L^(first + j) Z W_j.
Term = tuple["sp.spmatrix | None", int, list]


def poly_forward(terms: Sequence[Term], Z: np.ndarray, cache: dict | None = None) -> np.ndarray:
    """Evaluate ``sum over terms of sum_j L^(p0+j) Z W_j``.

    The cheaper association is picked from the layer widths: Laplacian powers
    are applied before the weights when ``d_in <= d_out`` and after them
    otherwise, so the sparse products always run on ``min(d_in, d_out)``
    columns.
    """
    d_in = Z.shape[-1]
    d_out = next(W.shape[1] for _, _, Ws in terms for W in Ws)
    aggregate_first = d_in <= d_out
    A = np.zeros(Z.shape[:-1] + (d_out,))
    powers: list[list[np.ndarray]] = []
    for L, p0, Ws in terms:
        for W in Ws:
            if W.shape != (d_in, d_out):
                raise DimensionMismatch(f"weight shape {W.shape} does not match ({d_in}, {d_out})")
        if not Ws:
            powers.append([])
            continue
        if aggregate_first:
            P = Z
            for _ in range(p0):
                P = apply_op(L, P)
            stack = [P]
            for _ in range(len(Ws) - 1):
                P = apply_op(L, P)
                stack.append(P)
            for P, W in zip(stack, Ws):
                A += matmul_last(P, W)
            powers.append(stack)
        else:
            acc = matmul_last(Z, Ws[-1])
            for W in reversed(Ws[:-1]):
                acc = matmul_last(Z, W) + apply_op(L, acc)
            for _ in range(p0):
                acc = apply_op(L, acc)
            A += acc
            powers.append([])
    if cache is not None:
        cache["Z"] = Z
        cache["aggregate_first"] = aggregate_first
        cache["powers"] = powers
    return A


# ---------------------------------------------------------------------------
# parameters


def _uniform(rng: np.random.Generator, shape: tuple[int, ...], fan: int) -> np.ndarray:
    a = np.sqrt(6.0 / fan)
    return rng.uniform(-a, a, size=shape)


@dataclass
class LayerParams:
    """Weights of one convolutional layer.

    ``gamma[j]`` multiplies ``L_lower^(first_power + j)``, ``theta[j]``
    multiplies ``L_upper^(first_power + j)`` and ``xi`` is the identity tap.
    With ``full=True`` the ``gamma`` taps act on the full Laplacian (SNN) and
    ``theta``/``xi`` are unused. An empty tap list means the adjacency does
    not exist at this order and the weights are not part of the model.
    """

    gamma: list[np.ndarray] = field(default_factory=list)
    theta: list[np.ndarray] = field(default_factory=list)
    xi: np.ndarray | None = None
    first_power: int = 1
    full: bool = False

    @classmethod
    def init(
        cls,
        triple: HodgeTriple,
        d_in: int,
        d_out: int,
        rng: np.random.Generator,
        j_lower: int = 1,
        j_upper: int = 1,
        kind: str = "scnn",
        identity_taps: bool = False,
    ) -> "LayerParams":
        """Fan-scaled uniform init, ``a = sqrt(6 / (d_in + d_out))``.

        ``identity_taps`` adds the ``j = 0`` power to every polynomial, which
        is how the reference SNN/SCNN baselines count their taps.
        """
        fan = d_in + d_out
        shape = (d_in, d_out)
        first = 0 if identity_taps else 1
        if kind == "snn":
            n = j_lower + (1 if identity_taps else 0)
            return cls([_uniform(rng, shape, fan) for _ in range(n)], first_power=first, full=True)
        extra = 1 if identity_taps else 0
        n_lo = j_lower + extra if triple.lower is not None else 0
        n_up = j_upper + extra if triple.upper is not None else 0
        gamma = [_uniform(rng, shape, fan) for _ in range(n_lo)]
        theta = [_uniform(rng, shape, fan) for _ in range(n_up)]
        xi = _uniform(rng, shape, fan)
        return cls(gamma, theta, xi, first)

    def terms(self, triple: HodgeTriple) -> list[Term]:
        if self.full:
            return [(triple.full, self.first_power, self.gamma)]
        if self.gamma and triple.lower is None:
            raise DimensionMismatch(f"order {triple.k} has no lower adjacency but gamma taps were given")
        if self.theta and triple.upper is None:
            raise DimensionMismatch(f"order {triple.k} has no upper adjacency but theta taps were given")
        out: list[Term] = []
        if self.gamma:
            out.append((triple.lower, self.first_power, self.gamma))
        if self.theta:
            out.append((triple.upper, self.first_power, self.theta))
        if self.xi is not None:
            out.append((None, 0, [self.xi]))
        return out

    def arrays(self) -> dict[str, np.ndarray]:
        named = {f"gamma{j}": W for j, W in enumerate(self.gamma)}
        named.update({f"theta{j}": W for j, W in enumerate(self.theta)})
        if self.xi is not None:
            named["xi"] = self.xi
        return named


@dataclass
class MpnnParams:
    """Per-face weights ``gamma_vec`` (length N_{k-1}) and per-coface ``theta_vec`` (N_{k+1})."""

    gamma_vec: np.ndarray | None
    theta_vec: np.ndarray | None

    @classmethod
    def init(cls, n_faces: int | None, n_cofaces: int | None, width: int, rng: np.random.Generator) -> "MpnnParams":
        fan = 2 * width
        g = _uniform(rng, (n_faces,), fan) if n_faces else None
        t = _uniform(rng, (n_cofaces,), fan) if n_cofaces else None
        return cls(g, t)

    def arrays(self) -> dict[str, np.ndarray]:
        named = {}
        if self.gamma_vec is not None:
            named["gamma_vec"] = self.gamma_vec
        if self.theta_vec is not None:
            named["theta_vec"] = self.theta_vec
        return named


@dataclass
class HeadParams:
    """Two affine readout layers (with biases) after mean pooling."""

    W1: np.ndarray
    b1: np.ndarray
    W2: np.ndarray
    b2: np.ndarray

    @classmethod
    def init(cls, d_in: int, hidden: int, n_classes: int, rng: np.random.Generator) -> "HeadParams":
        return cls(
            _uniform(rng, (d_in, hidden), d_in + hidden),
            np.zeros(hidden),
            _uniform(rng, (hidden, n_classes), hidden + n_classes),
            np.zeros(n_classes),
        )

    def arrays(self) -> dict[str, np.ndarray]:
        return {"W1": self.W1, "b1": self.b1, "W2": self.W2, "b2": self.b2}


# ---------------------------------------------------------------------------
# layers


def _as_features(Z, n: int) -> np.ndarray:
    Z = np.asarray(Z, dtype=np.float64)
    if Z.ndim == 1:
        Z = Z[:, None]
    if Z.shape[0] != n:
        raise DimensionMismatch(f"features have {Z.shape[0]} rows, complex order has {n}")
    return Z


def snn_forward(
    triple: HodgeTriple,
    Z,
    gammas: Sequence[np.ndarray] | LayerParams,
    act: str | Activation = "id",
    first_power: int = 1,
    cache: dict | None = None,
) -> np.ndarray:
    """``act(sum_j L_k^j Z Gamma_j)`` on the full Hodge Laplacian."""
    if isinstance(gammas, LayerParams):
        first_power = gammas.first_power
        gammas = gammas.gamma
    act = get_activation(act)
    Z = _as_features(Z, triple.size)
    A = poly_forward([(triple.full, first_power, list(gammas))], Z, cache)
    if cache is not None:
        cache["A"] = A
    return act(A)


def scnn_forward(
    triple: HodgeTriple,
    Z,
    params: LayerParams,
    act: str | Activation = "id",
    cache: dict | None = None,
) -> np.ndarray:
    """``act(sum_j L_l^j Z Gamma_j + sum_j L_u^j Z Theta_j + Z Xi)``."""
    act = get_activation(act)
    Z = _as_features(Z, triple.size)
    A = poly_forward(params.terms(triple), Z, cache)
    if cache is not None:
        cache["A"] = A
    return act(A)


def mpnn_forward(
    B_k: sp.spmatrix | None,
    B_k1: sp.spmatrix | None,
    Z,
    params: MpnnParams,
    act: str | Activation = "id",
    cache: dict | None = None,
) -> np.ndarray:
    """``act(B_k^T diag(gamma) B_k Z + B_{k+1} diag(theta) B_{k+1}^T Z)``.

    ``B_k`` is ``None`` at order 0 and ``B_k1`` is ``None`` at the top order.
    The layer keeps the feature width.
    """
    act = get_activation(act)
    if B_k is not None:
        n = B_k.shape[1]
    elif B_k1 is not None:
        n = B_k1.shape[0]
    else:
        n = np.shape(Z)[0]
    Z = _as_features(Z, n)
    flat = Z.reshape(n, -1)
    A = np.zeros_like(flat)
    down = up = None
    if params.gamma_vec is not None:
        if B_k is None or params.gamma_vec.shape != (B_k.shape[0],):
            raise DimensionMismatch("gamma_vec length must equal the number of (k-1)-simplices")
        down = np.asarray(B_k @ flat)
        A += B_k.T @ (params.gamma_vec[:, None] * down)
    if params.theta_vec is not None:
        if B_k1 is None or params.theta_vec.shape != (B_k1.shape[1],):
            raise DimensionMismatch("theta_vec length must equal the number of (k+1)-simplices")
        up = np.asarray(B_k1.T @ flat)
        A += B_k1 @ (params.theta_vec[:, None] * up)
    A = A.reshape(Z.shape)
    if cache is not None:
        cache.update(Z=Z, down=down, up=up, A=A)
    return act(A)


def biscnn_layer_forward(
    triple: HodgeTriple,
    Z_in,
    params: LayerParams,
    mode: str = "train",
    cache: dict | None = None,
) -> BiOutputs:
    """One binarizing layer with two outputs.

    ``m = feature_normalize(Z_in)``; the sign surrogate ``S`` of the input
    goes through the length-1 lower/upper/identity convolution and the
    result is binarized again into ``q``. Only ``q`` feeds the next layer.
    ``mode="train"`` uses hard-tanh for both binarizations, ``"infer"`` the
    exact sign.
    """
    _check_mode(mode)
    if len(params.gamma) > 1 or len(params.theta) > 1 or params.full or params.first_power != 1:
        raise ValueError("binarizing layers use length-1 filters on the split Laplacian")
    Z_in = _as_features(Z_in, triple.size)
    m = feature_normalize(Z_in)
    S, s_mask = hard_tanh(Z_in)
    if mode == "infer":
        S = sign_fn(Z_in)
    sub = {} if cache is not None else None
    A = poly_forward(params.terms(triple), S, sub)
    q, q_mask = hard_tanh(A)
    if mode == "infer":
        q = sign_fn(A)
    if cache is not None:
        cache.update(Z_in=Z_in, s_mask=s_mask, poly=sub, q_mask=q_mask, m=m, q=q)
    return BiOutputs(m, q)


def _m_product(ms: Sequence[np.ndarray]) -> np.ndarray:
    out = np.ones_like(ms[0])
    for m in ms:
        out = out * m
    return out


def biscnn_network_forward(
    triple: HodgeTriple,
    stack: Sequence[LayerParams],
    X,
    mode: str = "train",
    include_first_m: bool = True,
    cache: dict | None = None,
) -> np.ndarray:
    """``P`` stacked binarizing layers; output ``(prod_p m_p) o q_P``.

    The first layer sees the raw features; later layers see the previous
    ``q``. ``include_first_m=False`` drops ``m_1`` from the product.
    """
    if not stack:
        raise ValueError("need at least one layer")
    Z = X
    ms, caches = [], []
    for params in stack:
        c = {} if cache is not None else None
        out = biscnn_layer_forward(triple, Z, params, mode, c)
        ms.append(out.m)
        caches.append(c)
        Z = out.q
    used = ms if include_first_m else ms[1:]
    M = _m_product(used) if used else np.ones_like(ms[0])
    if cache is not None:
        cache.update(layers=caches, ms=ms, M=M, q=Z, include_first_m=include_first_m)
    return M[..., None] * Z


def softmax(logits) -> np.ndarray:
    z = np.asarray(logits, dtype=np.float64)
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def readout_head(Z, head: HeadParams, act: str | Activation = "tanh", cache: dict | None = None) -> np.ndarray:
    """Mean-pool over simplices, two affine layers, softmax.

    ``Z`` is ``(N, d)`` for one sample or ``(N, B, d)`` for a batch; the
    result is ``(n_classes,)`` or ``(B, n_classes)``.
    """
    act = get_activation(act)
    Z = np.asarray(Z, dtype=np.float64)
    if Z.shape[-1] != head.W1.shape[0]:
        raise DimensionMismatch(f"readout expects {head.W1.shape[0]} features, got {Z.shape[-1]}")
    pooled = Z.mean(axis=0)
    H = matmul_last(pooled, head.W1) if pooled.ndim > 1 else pooled @ head.W1
    H = H + head.b1
    hidden = act(H)
    logits = hidden @ head.W2 + head.b2
    probs = softmax(logits)
    if cache is not None:
        cache.update(n_rows=Z.shape[0], pooled=pooled, H=H, hidden=hidden, probs=probs)
    return probs
