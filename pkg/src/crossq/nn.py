"""Dense feed-forward networks with explicit backpropagation and Adam.

Rectifier hidden layers, identity output, float64 everywhere. All
operations are pure: inputs are never mutated, and a fixed seed or state
yields bit-identical results on repeated calls.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ShapeError

Array = np.ndarray

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


@dataclass
class MlpParams:
    """Layer weights of a rectifier MLP.

    ``layers[i]`` is ``(weight, bias)`` with weight shaped (out, in) and
    bias shaped (out,). Hidden layers use max(0, x); the last layer is
    affine with no activation.
    """

    layers: list[tuple[Array, Array]]

    @property
    def layer_sizes(self) -> list[int]:
        sizes = [self.layers[0][0].shape[1]]
        sizes.extend(w.shape[0] for w, _ in self.layers)
        return sizes

    def copy(self) -> "MlpParams":
        return MlpParams([(w.copy(), b.copy()) for w, b in self.layers])

    def validate(self) -> None:
        if not self.layers:
            raise ShapeError("an MLP needs at least one layer")
        prev_out = None
        for idx, (w, b) in enumerate(self.layers):
            if w.ndim != 2 or b.ndim != 1 or w.shape[0] != b.shape[0]:
                raise ShapeError(f"layer {idx}: weight {w.shape} and bias {b.shape} disagree")
            if prev_out is not None and w.shape[1] != prev_out:
                raise ShapeError(
                    f"layer {idx}: expects {w.shape[1]} inputs but layer {idx - 1} emits {prev_out}"
                )
            if not (np.isfinite(w).all() and np.isfinite(b).all()):
                raise ShapeError(f"layer {idx}: non-finite parameter")
            prev_out = w.shape[0]


@dataclass
class ForwardCache:
    """Intermediates of one forward pass, consumed by :func:`mlp_backward`."""

    inputs: Array
    pre: list[Array]
    post: list[Array]


@dataclass
class AdamState:
    """First/second moment accumulators mirroring an MlpParams."""

    m: list[tuple[Array, Array]]
    v: list[tuple[Array, Array]]
    t: int = 0
    beta1: float = ADAM_BETA1
    beta2: float = ADAM_BETA2
    eps: float = ADAM_EPS


def mlp_init(layer_sizes: list[int], seed: int | np.random.Generator) -> MlpParams:
    """Create random parameters for the given layer sizes.

    Weights are uniform on [-1/sqrt(fan_in), +1/sqrt(fan_in)], biases zero,
    so fresh value estimates start near zero.
    """
    if len(layer_sizes) < 2:
        raise ConfigError("need at least an input and an output size")
    if any(int(n) < 1 for n in layer_sizes):
        raise ConfigError(f"layer sizes must be >= 1, got {layer_sizes}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    layers = []
    for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:]):
        bound = 1.0 / np.sqrt(fan_in)
        w = rng.uniform(-bound, bound, size=(fan_out, fan_in))
        b = np.zeros(fan_out)
        layers.append((w, b))
    return MlpParams(layers)


def mlp_forward(params: MlpParams, inputs: Array) -> tuple[Array, ForwardCache]:
    """Batched forward pass. ``inputs`` is (batch, in_dim)."""
    x = np.asarray(inputs, dtype=np.float64)
    if x.ndim != 2:
        raise ShapeError(f"inputs must be 2-D (batch, features), got shape {x.shape}")
    if x.shape[1] != params.layers[0][0].shape[1]:
        raise ShapeError(
            f"inputs have {x.shape[1]} features but the first layer expects "
            f"{params.layers[0][0].shape[1]}"
        )
    pre: list[Array] = []
    post: list[Array] = []
    act = x
    last = len(params.layers) - 1
    for idx, (w, b) in enumerate(params.layers):
        z = act @ w.T + b
        pre.append(z)
        act = z if idx == last else np.maximum(z, 0.0)
        post.append(act)
    return post[-1], ForwardCache(inputs=x, pre=pre, post=post)


def mlp_value(params: MlpParams, x: Array) -> Array:
    """Single-input forward pass without a cache; ``x`` is (in_dim,)."""
    act = x
    last = len(params.layers) - 1
    for idx, (w, b) in enumerate(params.layers):
        z = w @ act + b
        act = z if idx == last else np.maximum(z, 0.0)
    return act


def mlp_backward(
    params: MlpParams, cache: ForwardCache, output_grads: Array
) -> list[tuple[Array, Array]]:
    """Backpropagate upstream output gradients to every weight and bias.

    ``output_grads`` holds dLoss/dOutput for the batch that produced
    ``cache``; the return value mirrors ``params.layers``.
    """
    n_layers = len(params.layers)
    if len(cache.pre) != n_layers:
        raise ShapeError(f"cache has {len(cache.pre)} layers, params have {n_layers}")
    delta = np.asarray(output_grads, dtype=np.float64)
    if delta.shape != cache.post[-1].shape:
        raise ShapeError(
            f"output_grads shape {delta.shape} does not match outputs {cache.post[-1].shape}"
        )
    grads: list[tuple[Array, Array]] = [None] * n_layers  # type: ignore[list-item]
    for idx in range(n_layers - 1, -1, -1):
        below = cache.post[idx - 1] if idx > 0 else cache.inputs
        grads[idx] = (delta.T @ below, delta.sum(axis=0))
        if idx > 0:
            # rectifier derivative: pass gradient only where pre-activation > 0
            delta = (delta @ params.layers[idx][0]) * (cache.pre[idx - 1] > 0.0)
    return grads


def adam_init(
    params: MlpParams,
    beta1: float = ADAM_BETA1,
    beta2: float = ADAM_BETA2,
    eps: float = ADAM_EPS,
) -> AdamState:
    zeros = lambda: [(np.zeros_like(w), np.zeros_like(b)) for w, b in params.layers]
    return AdamState(m=zeros(), v=zeros(), t=0, beta1=beta1, beta2=beta2, eps=eps)


def _check_mirrors(params: MlpParams, other: list[tuple[Array, Array]], label: str) -> None:
    if len(other) != len(params.layers):
        raise ShapeError(f"{label} has {len(other)} layers, params have {len(params.layers)}")
    for idx, ((w, b), (ow, ob)) in enumerate(zip(params.layers, other)):
        if ow.shape != w.shape or ob.shape != b.shape:
            raise ShapeError(f"{label} layer {idx} shape mismatch")


def adam_step(
    params: MlpParams,
    grads: list[tuple[Array, Array]],
    state: AdamState,
    alpha: float,
) -> tuple[MlpParams, AdamState]:
    """One Adam update with bias correction; returns fresh params and state."""
    _check_mirrors(params, grads, "grads")
    _check_mirrors(params, state.m, "adam state")
    t = state.t + 1
    b1, b2, eps = state.beta1, state.beta2, state.eps
    corr1 = 1.0 - b1**t
    corr2 = 1.0 - b2**t
    new_layers = []
    new_m = []
    new_v = []
    for (w, b), (gw, gb), (mw, mb), (vw, vb) in zip(params.layers, grads, state.m, state.v):
        upd = []
        for p, g, m, v in ((w, gw, mw, vw), (b, gb, mb, vb)):
            m2 = b1 * m + (1.0 - b1) * g
            v2 = b2 * v + (1.0 - b2) * g * g
            p2 = p - alpha * (m2 / corr1) / (np.sqrt(v2 / corr2) + eps)
            upd.append((p2, m2, v2))
        new_layers.append((upd[0][0], upd[1][0]))
        new_m.append((upd[0][1], upd[1][1]))
        new_v.append((upd[0][2], upd[1][2]))
    return MlpParams(new_layers), AdamState(
        m=new_m, v=new_v, t=t, beta1=b1, beta2=b2, eps=eps
    )


def mse_output_grad(outputs: Array, targets: Array) -> tuple[float, Array]:
    """Mean-squared error over all output entries and its output gradient."""
    diff = outputs - targets
    loss = float(np.mean(diff * diff))
    return loss, (2.0 / diff.size) * diff


def gradient_check_suite(
    n_fixtures: int = 20, seed: int = 2024, step: float = 1e-5
) -> tuple[float, list[float]]:
    """Compare backprop to central finite differences on random fixtures.

    Each fixture is a random net with at most 3 layers of at most 16 units
    trained against a squared-error loss. Returns the overall max relative
    error and the per-fixture maxima.
    """
    rng = np.random.default_rng(seed)
    per_fixture = []
    for _ in range(n_fixtures):
        depth = int(rng.integers(1, 4))
        sizes = [int(rng.integers(1, 17)) for _ in range(depth + 1)]
        params = mlp_init(sizes, rng)
        batch = int(rng.integers(1, 6))
        inputs = rng.normal(size=(batch, sizes[0]))
        targets = rng.normal(size=(batch, sizes[-1]))
        per_fixture.append(_fixture_max_rel_error(params, inputs, targets, step))
    return max(per_fixture), per_fixture


def _fixture_max_rel_error(
    params: MlpParams, inputs: Array, targets: Array, step: float
) -> float:
    outputs, cache = mlp_forward(params, inputs)
    _, grad_out = mse_output_grad(outputs, targets)
    analytic = mlp_backward(params, cache, grad_out)

    def loss_at(p: MlpParams) -> float:
        out, _ = mlp_forward(p, inputs)
        return mse_output_grad(out, targets)[0]

    worst = 0.0
    for idx in range(len(params.layers)):
        for slot in (0, 1):
            arr = params.layers[idx][slot]
            grad = analytic[idx][slot]
            flat = arr.ravel()
            for pos in range(flat.size):
                original = flat[pos]
                probe = params.copy()
                pflat = probe.layers[idx][slot].ravel()
                pflat[pos] = original + step
                hi = loss_at(probe)
                pflat[pos] = original - step
                lo = loss_at(probe)
                fd = (hi - lo) / (2.0 * step)
                a = grad.ravel()[pos]
                rel = abs(a - fd) / max(abs(a), abs(fd), 1.0)
                if rel > worst:
                    worst = rel
    return worst
