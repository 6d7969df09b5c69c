"""Reverse-mode gradients, losses, Adam and the two experiment loops.

Gradients are written by hand for each layer type. Binarizing layers are
differentiated through their hard-tanh surrogate (straight-through
estimator): the sign's gradient is the indicator ``|x| <= 1``.
"""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field, fields
from typing import Mapping

import numpy as np

from .complex import SimplicialComplex, hodge_laplacians, incidence_matrix
from .errors import DimensionMismatch, EmptyMask, LabelOutOfRange, StaleTape, TrainingError
from .layers import (
    HeadParams,
    LayerParams,
    MpnnParams,
    apply_op,
    matmul_last,
    biscnn_network_forward,
    get_activation,
    mpnn_forward,
    readout_head,
    scnn_forward,
    snn_forward,
)

__all__ = [
    "ARCHITECTURES",
    "AdamState",
    "GradientTape",
    "Metrics",
    "SimplicialModel",
    "TrainConfig",
    "adam_step",
    "binary_fraction",
    "build_model",
    "count_parameters",
    "cross_entropy_loss",
    "imputation_accuracy",
    "l1_loss",
    "poly_backward",
    "summarize_runs",
    "train_classification",
    "train_imputation",
]

ARCHITECTURES = ("snn", "scnn", "biscnn", "mpnn")


# ---------------------------------------------------------------------------
# losses


def l1_loss(pred, target, mask) -> tuple[float, np.ndarray]:
    """Mean absolute error over the entries where ``mask`` is true."""
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    mask = np.asarray(mask, dtype=bool)
    if pred.shape != target.shape or mask.shape != pred.shape:
        raise DimensionMismatch(f"shapes differ: pred {pred.shape}, target {target.shape}, mask {mask.shape}")
    count = int(mask.sum())
    if count == 0:
        raise EmptyMask("no known entries to fit")
    diff = pred - target
    loss = float(np.abs(diff[mask]).sum() / count)
    grad = np.where(mask, np.sign(diff), 0.0) / count
    return loss, grad


def cross_entropy_loss(probs, labels) -> tuple[float, np.ndarray]:
    """Mean negative log-likelihood and its gradient at the logits."""
    probs = np.atleast_2d(np.asarray(probs, dtype=np.float64))
    labels = np.atleast_1d(np.asarray(labels))
    n, c = probs.shape
    if labels.shape != (n,):
        raise DimensionMismatch(f"{n} probability rows but {labels.shape} labels")
    if np.any(labels < 0) or np.any(labels >= c) or not np.all(labels == np.round(labels)):
        raise LabelOutOfRange(f"labels must be integers in [0, {c})")
    labels = labels.astype(np.int64)
    picked = probs[np.arange(n), labels]
    loss = float(-np.mean(np.log(np.maximum(picked, np.finfo(np.float64).tiny))))
    grad = probs.copy()
    grad[np.arange(n), labels] -= 1.0
    return loss, grad / n


# ---------------------------------------------------------------------------
# backward passes


def poly_backward(terms, cache: dict, dA: np.ndarray,
                  need_input: bool = True) -> tuple[np.ndarray | None, list[list[np.ndarray]]]:
    """Vector-Jacobian product of :func:`tspnet.layers.poly_forward`.

    Relies on every operator being symmetric, which holds for all Hodge
    Laplacians. ``need_input=False`` skips the input gradient and returns
    ``None`` in its place.
    """
    Z = cache["Z"]
    d_in, d_out = Z.shape[-1], dA.shape[-1]
    flat_Z = Z.reshape(-1, d_in)
    flat_dA = dA.reshape(-1, d_out)
    dZ = np.zeros_like(Z) if need_input else None
    grads: list[list[np.ndarray]] = []
    for (L, p0, Ws), stack in zip(terms, cache["powers"]):
        if not Ws:
            grads.append([])
            continue
        if cache["aggregate_first"]:
            gW = [P.reshape(-1, d_in).T @ flat_dA for P in stack]
            grads.append(gW)
            if not need_input:
                continue
            acc = matmul_last(dA, Ws[-1].T)
            for W in reversed(Ws[:-1]):
                acc = matmul_last(dA, W.T) + apply_op(L, acc)
            for _ in range(p0):
                acc = apply_op(L, acc)
            dZ += acc
            continue
        R = dA
        for _ in range(p0):
            R = apply_op(L, R)
        Rs = [R]
        for _ in range(len(Ws) - 1):
            R = apply_op(L, R)
            Rs.append(R)
        grads.append([flat_Z.T @ R.reshape(-1, d_out) for R in Rs])
        if need_input:
            for R, W in zip(Rs, Ws):
                dZ += matmul_last(R, W.T)
    return dZ, grads


def _named_poly_grads(params: LayerParams, grads: list[list[np.ndarray]]) -> dict[str, np.ndarray]:
    out: dict[str, np.ndarray] = {}
    it = iter(grads)
    if params.full:
        for j, g in enumerate(next(it)):
            out[f"gamma{j}"] = g
        return out
    if params.gamma:
        for j, g in enumerate(next(it)):
            out[f"gamma{j}"] = g
    if params.theta:
        for j, g in enumerate(next(it)):
            out[f"theta{j}"] = g
    if params.xi is not None:
        out["xi"] = next(it)[0]
    return out


def _mpnn_backward(B_k, B_k1, params: MpnnParams, cache: dict, dA: np.ndarray):
    Z = cache["Z"]
    n = Z.shape[0]
    flat_dA = dA.reshape(n, -1)
    dZ = np.zeros_like(flat_dA)
    grads = {}
    if params.gamma_vec is not None:
        g_down = np.asarray(B_k @ flat_dA)
        grads["gamma_vec"] = (cache["down"] * g_down).sum(axis=1)
        dZ += B_k.T @ (params.gamma_vec[:, None] * g_down)
    if params.theta_vec is not None:
        g_up = np.asarray(B_k1.T @ flat_dA)
        grads["theta_vec"] = (cache["up"] * g_up).sum(axis=1)
        dZ += B_k1 @ (params.theta_vec[:, None] * g_up)
    return dZ.reshape(Z.shape), grads


def _excluding_products(ms: list[np.ndarray]) -> list[np.ndarray]:
    """For each index, the product of all other entries (no division)."""
    n = len(ms)
    prefix = [np.ones_like(ms[0])]
    for m in ms[:-1]:
        prefix.append(prefix[-1] * m)
    suffix = [np.ones_like(ms[0])] * n
    for i in range(n - 2, -1, -1):
        suffix[i] = suffix[i + 1] * ms[i + 1]
    return [prefix[i] * suffix[i] for i in range(n)]


# ---------------------------------------------------------------------------
# model


@dataclass
class GradientTape:
    """Forward intermediates for one call, tied to the parameter values used."""

    model_id: int
    snapshot: dict[str, np.ndarray]
    layers: list[dict]
    network: dict
    head: dict | None
    mode: str


class SimplicialModel:
    """A stack of simplicial layers on one order ``k``, optionally with a readout head.

    Parameters live in plain numpy arrays that :func:`adam_step` updates in
    place through :meth:`parameters`.
    """

    def __init__(
        self,
        arch: str,
        K: SimplicialComplex,
        k: int,
        widths: list[int],
        activation: str = "lr",
        seed: int | np.random.SeedSequence = 0,
        j_lower: int = 1,
        j_upper: int = 1,
        identity_taps: bool = False,
        include_first_m: bool = True,
        head: tuple[int, int] | None = None,
        output_activation: str | None = None,
    ):
        if arch not in ARCHITECTURES:
            raise ValueError(f"unknown architecture {arch!r}")
        if len(widths) < 2:
            raise ValueError("need at least one layer")
        self.arch = arch
        self.k = k
        self.triple = hodge_laplacians(K, k)
        self.B_k = incidence_matrix(K, k).astype(np.float64) if k >= 1 else None
        self.B_k1 = incidence_matrix(K, k + 1).astype(np.float64) if k < K.order else None
        self.activation = get_activation(activation)
        out_act = output_activation if output_activation is not None else activation
        self.layer_acts = [self.activation] * (len(widths) - 2) + [get_activation(out_act)]
        self.include_first_m = include_first_m
        self.widths = list(widths)
        rng = np.random.default_rng(seed)

        self.layers: list = []
        for d_in, d_out in zip(widths[:-1], widths[1:]):
            if arch == "mpnn":
                n_faces = self.B_k.shape[0] if self.B_k is not None else None
                n_cof = self.B_k1.shape[1] if self.B_k1 is not None else None
                self.layers.append(MpnnParams.init(n_faces, n_cof, d_in, rng))
            elif arch == "snn":
                self.layers.append(LayerParams.init(self.triple, d_in, d_out, rng, j_lower, kind="snn", identity_taps=identity_taps))
            elif arch == "scnn":
                self.layers.append(LayerParams.init(self.triple, d_in, d_out, rng, j_lower, j_upper, identity_taps=identity_taps))
            else:
                self.layers.append(LayerParams.init(self.triple, d_in, d_out, rng, 1, 1))
        self.head = HeadParams.init(widths[-1], head[0], head[1], rng) if head else None

    # -- parameters -------------------------------------------------------
    def parameters(self) -> dict[str, np.ndarray]:
        named = {}
        for p, layer in enumerate(self.layers):
            for name, arr in layer.arrays().items():
                named[f"layer{p}.{name}"] = arr
        if self.head is not None:
            for name, arr in self.head.arrays().items():
                named[f"head.{name}"] = arr
        return named

    def n_parameters(self) -> int:
        return int(sum(a.size for a in self.parameters().values()))

    # -- forward ----------------------------------------------------------
    def _prepare(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X[:, None, None]
        elif X.ndim == 2:
            X = X[:, None, :]
        if X.shape[0] != self.triple.size or X.shape[-1] != self.widths[0]:
            raise DimensionMismatch(f"expected ({self.triple.size}, B, {self.widths[0]}) input, got {X.shape}")
        return X

    def forward(self, X, mode: str = "train", record: bool = True):
        """Run the network on ``X`` of shape ``(N_k, B, d_in)`` (2-D/1-D are promoted).

        Returns ``(output, tape)``; ``tape`` is ``None`` when ``record`` is false.
        With a head, ``output`` holds class probabilities of shape ``(B, C)``.
        """
        X = self._prepare(X)
        layer_caches: list[dict] = []
        net_cache: dict = {}
        if self.arch == "biscnn":
            Z = biscnn_network_forward(self.triple, self.layers, X, mode, self.include_first_m, net_cache if record else None)
        else:
            Z = X
            for params, act in zip(self.layers, self.layer_acts):
                c: dict | None = {} if record else None
                if self.arch == "mpnn":
                    Z = mpnn_forward(self.B_k, self.B_k1, Z, params, act, c)
                elif self.arch == "snn":
                    Z = snn_forward(self.triple, Z, params, act, cache=c)
                else:
                    Z = scnn_forward(self.triple, Z, params, act, c)
                layer_caches.append(c)
        head_cache: dict | None = None
        if self.head is not None:
            head_cache = {} if record else None
            Z = readout_head(Z, self.head, self.activation, head_cache)
        if not record:
            return Z, None
        snap = {n: a.copy() for n, a in self.parameters().items()}
        return Z, GradientTape(id(self), snap, layer_caches, net_cache, head_cache, mode)

    def predict(self, X, mode: str = "train") -> np.ndarray:
        return self.forward(X, mode, record=False)[0]

    # -- backward ---------------------------------------------------------
    def backward(self, tape: GradientTape, grad_out) -> dict[str, np.ndarray]:
        """Gradients of the loss for every parameter.

        ``grad_out`` is the loss gradient at the network output, or at the
        logits when the model has a readout head.
        """
        if tape is None or tape.model_id != id(self):
            raise StaleTape("tape was recorded by a different model")
        current = self.parameters()
        if current.keys() != tape.snapshot.keys() or any(
            not np.array_equal(current[n], tape.snapshot[n]) for n in current
        ):
            raise StaleTape("parameters changed since the forward pass")
        grads: dict[str, np.ndarray] = {}
        g = np.asarray(grad_out, dtype=np.float64)
        if self.head is not None:
            g = self._head_backward(tape.head, g, grads)
        if self.arch == "biscnn":
            self._biscnn_backward(tape.network, g, grads)
            return grads
        for p in range(len(self.layers) - 1, -1, -1):
            params, cache, act = self.layers[p], tape.layers[p], self.layer_acts[p]
            dA = act.grad(cache["A"])
            dA *= g
            if self.arch == "mpnn":
                g, named = _mpnn_backward(self.B_k, self.B_k1, params, cache, dA)
            else:
                terms = params.terms(self.triple)
                g, raw = poly_backward(terms, cache, dA, need_input=p > 0)
                named = _named_poly_grads(params, raw)
            for name, val in named.items():
                grads[f"layer{p}.{name}"] = val
        return grads

    def _head_backward(self, cache: dict, dlogits: np.ndarray, grads: dict) -> np.ndarray:
        head = self.head
        dlogits = dlogits.reshape(cache["probs"].shape)
        grads["head.W2"] = np.atleast_2d(cache["hidden"]).T @ np.atleast_2d(dlogits)
        grads["head.b2"] = np.atleast_2d(dlogits).sum(axis=0)
        dH = (dlogits @ head.W2.T) * self.activation.grad(cache["H"])
        grads["head.W1"] = np.atleast_2d(cache["pooled"]).T @ np.atleast_2d(dH)
        grads["head.b1"] = np.atleast_2d(dH).sum(axis=0)
        dpooled = dH @ head.W1.T
        n = cache["n_rows"]
        return np.broadcast_to(dpooled / n, (n,) + dpooled.shape).copy()

    def _biscnn_backward(self, cache: dict, dout: np.ndarray, grads: dict) -> None:
        ms, M, q = cache["ms"], cache["M"], cache["q"]
        dout = dout.reshape(q.shape)
        dq = dout * M[..., None]
        dM = (dout * q).sum(axis=-1)
        start = 0 if cache["include_first_m"] else 1
        dms: list[np.ndarray | None] = [None] * len(ms)
        if len(ms) > start:
            for i, others in enumerate(_excluding_products(ms[start:])):
                dms[start + i] = dM * others
        for p in range(len(self.layers) - 1, -1, -1):
            params, c = self.layers[p], cache["layers"][p]
            dA = np.where(c["q_mask"], dq, 0.0)
            terms = params.terms(self.triple)
            dS, raw = poly_backward(terms, c["poly"], dA, need_input=p > 0)
            for name, val in _named_poly_grads(params, raw).items():
                grads[f"layer{p}.{name}"] = val
            if p == 0:
                break
            Z_in = c["Z_in"]
            dq = dS
            dq *= c["s_mask"]
            if dms[p] is not None:
                term = np.sign(Z_in)
                term *= (dms[p] / Z_in.shape[-1])[..., None]
                dq += term


def build_model(config: "TrainConfig", K: SimplicialComplex, k: int, d_in: int, d_out: int | None,
                seed, head: tuple[int, int] | None = None) -> SimplicialModel:
    """Model for ``config`` on order ``k``; MPNN layers keep the input width."""
    if d_out is None:
        d_out = config.filters
    if config.arch == "mpnn":
        widths = [d_in] * (config.layers + 1)
    else:
        widths = [d_in] + [config.filters] * (config.layers - 1) + [d_out]
    out_act = None if head else "id"
    return SimplicialModel(
        config.arch, K, k, widths, config.activation, seed,
        config.j_lower, config.j_upper, config.identity_taps,
        config.include_first_m, head, out_act,
    )


def count_parameters(model: SimplicialModel | Mapping[int, SimplicialModel]) -> int | dict:
    """Number of scalar trainable values.

    A mapping of per-order models gives ``{"per_order": {k: n}, "total": n}``.
    """
    if isinstance(model, Mapping):
        per = {k: m.n_parameters() for k, m in model.items()}
        return {"per_order": per, "total": sum(per.values())}
    return model.n_parameters()


# ---------------------------------------------------------------------------
# optimizer


@dataclass
class AdamState:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)


def adam_step(params: dict[str, np.ndarray], grads: dict[str, np.ndarray], state: AdamState):
    """Bias-corrected Adam update, applied to ``params`` in place."""
    state.step += 1
    t = state.step
    c1 = 1.0 - state.beta1**t
    c2 = 1.0 - state.beta2**t
    for name, p in params.items():
        g = grads.get(name)
        if g is None:
            continue
        if g.shape != p.shape:
            raise DimensionMismatch(f"gradient for {name} has shape {g.shape}, parameter {p.shape}")
        m = state.m.setdefault(name, np.zeros_like(p))
        v = state.v.setdefault(name, np.zeros_like(p))
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * g * g
        p -= state.lr * (m / c1) / (np.sqrt(v / c2) + state.eps)
    return params, state


# ---------------------------------------------------------------------------
# experiments


@dataclass
class TrainConfig:
    task: str = "impute"
    arch: str = "biscnn"
    layers: int = 2
    filters: int = 30
    j_lower: int = 1
    j_upper: int = 1
    activation: str = "lr"
    iterations: int = 1000
    lr: float = 1e-3
    seed: int = 0
    missing_rate: float = 0.1
    batch_size: int = 40
    repeats: int = 1
    hidden: int = 30
    identity_taps: bool = False
    include_first_m: bool = True
    eval_mode: str = "train"

    def __post_init__(self):
        if self.task not in ("impute", "classify"):
            raise ValueError(f"task must be 'impute' or 'classify', got {self.task!r}")
        if self.arch not in ARCHITECTURES:
            raise ValueError(f"arch must be one of {ARCHITECTURES}, got {self.arch!r}")
        get_activation(self.activation)
        for name in ("layers", "filters", "j_lower", "j_upper", "iterations", "batch_size", "repeats", "hidden"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be a positive integer")
        if not (0.0 < self.missing_rate < 1.0):
            raise ValueError(f"missing_rate must lie in (0, 1), got {self.missing_rate}")
        if self.lr < 0:
            raise ValueError("lr must be non-negative")
        if self.eval_mode not in ("train", "infer"):
            raise ValueError("eval_mode must be 'train' or 'infer'")

    @classmethod
    def from_dict(cls, data: Mapping) -> "TrainConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**dict(data))

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class Metrics:
    """Outcome of one training run.

    ``accuracy`` is the percentage of held-out entries (imputation) or test
    trajectories (classification) predicted correctly. For imputation,
    ``accuracy_all`` scores every entry, known ones included; when an order
    is too small for any entry to be hidden, ``accuracy`` equals it.
    """

    losses: list[float]
    accuracy: float
    seconds: float
    n_params: int
    baseline_accuracy: float | None = None
    accuracy_all: float | None = None
    baseline_accuracy_all: float | None = None
    train_accuracy: float | None = None
    binary_fraction: list[float] | None = None


def imputation_accuracy(pred, truth, rel: float = 0.01, zero_tol: float = 1e-6) -> np.ndarray:
    """Per-entry correctness: within ``rel`` of the truth, or ``|pred| <= zero_tol`` at zero truth."""
    pred = np.asarray(pred, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    return np.where(truth == 0, np.abs(pred) <= zero_tol, np.abs(pred - truth) <= rel * np.abs(truth))


def _run_seed(config: TrainConfig, repeat: int, k: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([config.seed, repeat, k])


def _fit(model: SimplicialModel, batches, loss_fn, config: TrainConfig, k: int) -> tuple[list[float], float]:
    """Adam loop shared by both tasks; times forward+backward, skipping the warm-up iteration."""
    state = AdamState(lr=config.lr)
    params = model.parameters()
    losses, seconds = [], 0.0
    for it, (X, target) in enumerate(batches):
        t0 = time.perf_counter()
        out, tape = model.forward(X)
        loss, g = loss_fn(out, target)
        grads = model.backward(tape, g)
        elapsed = time.perf_counter() - t0
        if it > 0:
            seconds += elapsed
        if not np.isfinite(loss):
            raise TrainingError(f"order {k}: loss became non-finite at iteration {it}")
        losses.append(loss)
        adam_step(params, grads, state)
    return losses, seconds


def binary_fraction(model: SimplicialModel, X, mode: str = "train") -> list[float] | None:
    """Per binarizing layer, the share of convolution inputs that are exactly +1 or -1.

    ``None`` for architectures without binarization.
    """
    if model.arch != "biscnn":
        return None
    _, tape = model.forward(X, mode)
    return [float(np.mean(np.abs(c["poly"]["Z"]) == 1.0)) for c in tape.network["layers"]]


def train_imputation(K: SimplicialComplex, features: Mapping[int, np.ndarray], config: TrainConfig,
                     repeat: int = 0) -> dict[int, Metrics]:
    """Fit one independent model per order and impute a random subset of entries.

    Hidden entries are filled with the median of the known ones in the same
    order, the model is trained on the known entries with the L1 loss, and
    accuracy is the share of hidden entries predicted within 1%.
    """
    from .data import mask_features

    results = {}
    for k in sorted(features):
        x = np.asarray(features[k], dtype=np.float64).reshape(-1)
        if x.size != K.n(k):
            raise DimensionMismatch(f"order {k}: {x.size} feature values for {K.n(k)} simplices")
        mask_seed, init_seed = _run_seed(config, repeat, k).spawn(2)
        filled, mask = mask_features(x, config.missing_rate, int(mask_seed.generate_state(1)[0]))
        known = mask.known
        model = build_model(config, K, k, 1, 1, init_seed)
        X = filled[:, None, None]
        target = x[:, None, None]
        known3 = known[:, None, None]
        try:
            losses, seconds = _fit(model, [(X, target)] * config.iterations,
                                   lambda out, t: l1_loss(out, t, known3), config, k)
        except (TrainingError, DimensionMismatch):
            raise
        except (ArithmeticError, ValueError, RuntimeError) as exc:
            raise TrainingError(f"order {k}: {exc}") from exc
        pred = model.predict(X, config.eval_mode).reshape(-1)
        # tiny orders can have floor(rate * N) == 0; score every entry then
        hidden = ~known if (~known).any() else np.ones_like(known)
        ok = imputation_accuracy(pred, x)
        base = imputation_accuracy(filled, x)
        results[k] = Metrics(
            losses=losses,
            accuracy=100.0 * float(ok[hidden].mean()),
            seconds=seconds,
            n_params=model.n_parameters(),
            baseline_accuracy=100.0 * float(base[hidden].mean()),
            accuracy_all=100.0 * float(ok.mean()),
            baseline_accuracy_all=100.0 * float(base.mean()),
            binary_fraction=binary_fraction(model, X, config.eval_mode),
        )
    return results


def train_classification(dataset, config: TrainConfig, repeat: int = 0, n_classes: int = 2) -> Metrics:
    """Train layers plus readout on edge flows and report held-out accuracy.

    Each iteration draws ``batch_size`` training trajectories (cycling
    through seeded permutations) and processes them as one batch along the
    sample axis.
    """
    K = dataset.complex
    flows = np.asarray(dataset.flows, dtype=np.float64)
    labels = np.asarray(dataset.labels, dtype=np.int64)
    train_idx = np.asarray(dataset.train, dtype=np.int64)
    test_idx = np.asarray(dataset.test, dtype=np.int64)
    order_seed, init_seed = _run_seed(config, repeat, 1).spawn(2)
    rng = np.random.default_rng(order_seed)
    model = build_model(config, K, 1, 1, None, init_seed, head=(config.hidden, n_classes))
    bs = min(config.batch_size, train_idx.size)

    def batches():
        queue: list[int] = []
        for _ in range(config.iterations):
            if len(queue) < bs:
                queue.extend(rng.permutation(train_idx).tolist())
            batch, queue = queue[:bs], queue[bs:]
            yield flows[batch].T[:, :, None], labels[batch]

    try:
        losses, seconds = _fit(model, batches(), cross_entropy_loss, config, 1)
    except (TrainingError, DimensionMismatch, LabelOutOfRange):
        raise
    except (ArithmeticError, ValueError, RuntimeError) as exc:
        raise TrainingError(f"order 1: {exc}") from exc

    def accuracy(idx):
        probs = model.predict(flows[idx].T[:, :, None], config.eval_mode)
        return 100.0 * float(np.mean(probs.argmax(axis=1) == labels[idx]))

    return Metrics(
        losses=losses,
        accuracy=accuracy(test_idx),
        seconds=seconds,
        n_params=model.n_parameters(),
        train_accuracy=accuracy(train_idx),
        binary_fraction=binary_fraction(model, flows[test_idx].T[:, :, None], config.eval_mode),
    )


def summarize_runs(runs: list[Metrics]) -> dict:
    """Mean and population standard deviation over repeats."""
    acc = np.array([r.accuracy for r in runs])
    out = {
        "repeats": len(runs),
        "accuracy_mean": float(acc.mean()),
        "accuracy_std": float(acc.std()),
        "n_params": runs[0].n_params,
        "final_loss_mean": float(np.mean([r.losses[-1] for r in runs])),
    }
    for key in ("baseline_accuracy", "accuracy_all", "baseline_accuracy_all", "train_accuracy"):
        vals = [getattr(r, key) for r in runs]
        if vals[0] is not None:
            arr = np.array(vals)
            out[f"{key}_mean"] = float(arr.mean())
            out[f"{key}_std"] = float(arr.std())
    return out
