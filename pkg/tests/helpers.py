"""Shared fixtures-as-functions for the test modules."""

import numpy as np

from tspnet.complex import build_complex, flag_complex

FILLED_TRIANGLE = {0: [[0], [1], [2]], 1: [[0, 1], [0, 2], [1, 2]], 2: [[0, 1, 2]]}
HOLLOW_TRIANGLE = {0: [[0], [1], [2]], 1: [[0, 1], [0, 2], [1, 2]]}


def filled_triangle():
    return build_complex(FILLED_TRIANGLE)


def hollow_triangle():
    return build_complex(HOLLOW_TRIANGLE)


def random_complex(rng: np.random.Generator, n_max: int = 20, p: float | None = None, max_order: int = 3):
    n = int(rng.integers(2, n_max + 1))
    p = rng.uniform(0.15, 0.6) if p is None else p
    edges = [(a, b) for a in range(n) for b in range(a + 1, n) if rng.random() < p]
    return flag_complex(n, edges, max_order)



def _kinks(model, tape) -> np.ndarray:
    """Boolean pattern of which side of every kink each pre-activation sits on."""
    parts = []
    if model.arch == "biscnn":
        for c in tape.network["layers"]:
            parts += [c["s_mask"], c["q_mask"], c["Z_in"] > 0, c["Z_in"] < 0,
                      c["poly"]["Z"] > 0, c["Z_in"] >= 1, c["Z_in"] <= -1]
    else:
        for c in tape.layers:
            parts += [c["A"] >= 0, np.abs(c["A"]) <= 1]
    if tape.head is not None:
        parts += [tape.head["H"] >= 0, np.abs(tape.head["H"]) <= 1]
    return np.concatenate([np.asarray(p, dtype=bool).ravel() for p in parts])


def gradient_check(model, X, loss_fn, h=1e-5, rtol=1e-4, floor=1e-6, mode="train"):
    """Central differences against ``model.backward`` for every parameter coordinate.

    ``loss_fn(output) -> (loss, grad)``. Coordinates whose perturbation moves
    any pre-activation across a kink or clamp boundary are skipped.
    Returns ``(checked, passed, skipped, worst_relative_error)``.
    """
    out, tape = model.forward(X, mode)
    grads = model.backward(tape, loss_fn(out)[1])
    base = _kinks(model, tape)
    checked = passed = skipped = 0
    worst = 0.0
    for name, p in model.parameters().items():
        for i in range(p.size):
            old = p.flat[i]
            p.flat[i] = old + h
            out_p, tape_p = model.forward(X, mode)
            p.flat[i] = old - h
            out_m, tape_m = model.forward(X, mode)
            p.flat[i] = old
            if not (np.array_equal(_kinks(model, tape_p), base) and np.array_equal(_kinks(model, tape_m), base)):
                skipped += 1
                continue
            fd = (loss_fn(out_p)[0] - loss_fn(out_m)[0]) / (2 * h)
            an = grads[name].flat[i]
            err = abs(fd - an) / max(abs(fd), abs(an), floor)
            checked += 1
            passed += err <= rtol
            worst = max(worst, err)
    return checked, passed, skipped, worst


def smooth_loss(target_shape, seed=0):
    """A quadratic loss with a fixed random target, smooth in the output."""
    T = np.random.default_rng(seed).normal(size=target_shape)

    def fn(out):
        diff = out - T
        return 0.5 * float(np.sum(diff * diff)), diff

    return fn
