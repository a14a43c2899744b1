"""Estimators of the maximum expected value over a set of actions.

Three estimators built from per-action sample sets:

* single: max over sample means — positively biased.
* double: one sample set picks the argmax action, an independent set
  supplies the value there — non-positively biased.
* cross: the double rule generalized to K independent sets, selecting
  with set i and evaluating with set j != i.

Plus an exact enumeration of each estimator's expectation for small
discrete distributions, and a vectorized Monte-Carlo bias measurement.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, EstimationError

Array = np.ndarray

A_SELECTS = "a_selects"
B_SELECTS = "b_selects"


@dataclass
class ActionSamples:
    """Per-action lists of scalar samples."""

    samples: list[Array]

    def __post_init__(self) -> None:
        if not self.samples:
            raise EstimationError("need at least one action")
        self.samples = [np.asarray(s, dtype=np.float64).ravel() for s in self.samples]

    @property
    def n_actions(self) -> int:
        return len(self.samples)

    def means(self) -> Array:
        out = np.empty(self.n_actions)
        for a, s in enumerate(self.samples):
            if s.size == 0:
                raise EstimationError(f"action {a} has no samples")
            out[a] = s.mean()
        return out


@dataclass(frozen=True)
class DistributionSpec:
    """Ground-truth discrete reward distribution, one per action.

    ``support[a]`` and ``probs[a]`` describe action a's outcome
    distribution; probabilities must sum to 1 within 1e-12.
    """

    support: tuple[tuple[float, ...], ...]
    probs: tuple[tuple[float, ...], ...]

    def __post_init__(self) -> None:
        if len(self.support) != len(self.probs) or not self.support:
            raise ConfigError("support and probs must list the same non-zero action count")
        for a, (vals, ps) in enumerate(zip(self.support, self.probs)):
            if len(vals) != len(ps) or not vals:
                raise ConfigError(f"action {a}: support and probs lengths differ or empty")
            if any(p < 0 for p in ps) or abs(sum(ps) - 1.0) > 1e-12:
                raise ConfigError(f"action {a}: probabilities must be >= 0 and sum to 1")
            if not all(np.isfinite(v) for v in vals):
                raise ConfigError(f"action {a}: non-finite support value")

    @property
    def n_actions(self) -> int:
        return len(self.support)

    def true_means(self) -> Array:
        return np.array(
            [sum(v * p for v, p in zip(vals, ps)) for vals, ps in zip(self.support, self.probs)]
        )

    def true_max_mean(self) -> float:
        return float(self.true_means().max())


def single_max_estimate(samples: ActionSamples) -> float:
    """Max over the per-action sample means."""
    return float(samples.means().max())


def double_estimate(
    samples_a: ActionSamples, samples_b: ActionSamples, direction: str = A_SELECTS
) -> float:
    """Select the argmax action with one set, read the value off the other.

    ``direction`` names the selecting set; argmax ties go to the lowest
    action index. Averaging both directions is the caller's business.
    """
    if samples_a.n_actions != samples_b.n_actions:
        raise EstimationError(
            f"action counts differ: {samples_a.n_actions} vs {samples_b.n_actions}"
        )
    if direction == A_SELECTS:
        selector, evaluator = samples_a, samples_b
    elif direction == B_SELECTS:
        selector, evaluator = samples_b, samples_a
    else:
        raise ConfigError(f"unknown direction {direction!r}")
    best = int(np.argmax(selector.means()))
    return float(evaluator.means()[best])


def cross_estimate(sample_sets: list[ActionSamples], selector: int, evaluator: int) -> float:
    """K-set generalization: set ``selector`` picks the action, set
    ``evaluator`` values it. The two indices must differ."""
    k = len(sample_sets)
    if k < 2:
        raise EstimationError(f"need at least 2 sample sets, got {k}")
    if selector == evaluator:
        raise EstimationError("selector and evaluator must be different sets")
    if not (0 <= selector < k and 0 <= evaluator < k):
        raise EstimationError(f"set index out of range for K={k}")
    counts = {s.n_actions for s in sample_sets}
    if len(counts) != 1:
        raise EstimationError(f"sample sets disagree on action count: {sorted(counts)}")
    best = int(np.argmax(sample_sets[selector].means()))
    return float(sample_sets[evaluator].means()[best])


def _mean_distribution(values: tuple[float, ...], probs: tuple[float, ...], n: int):
    """Distribution of the mean of n i.i.d. draws, as (mean, prob) pairs."""
    acc: dict[float, float] = {}
    for combo in itertools.product(range(len(values)), repeat=n):
        p = 1.0
        total = 0.0
        for idx in combo:
            p *= probs[idx]
            total += values[idx]
        mean = total / n
        acc[mean] = acc.get(mean, 0.0) + p
    return sorted(acc.items())


def exact_expected_estimate(dist: DistributionSpec, kind: str, n_per_action: int) -> float:
    """Exact expectation of an estimator under ``dist`` by enumeration.

    Feasible for small supports and sample counts. For double/cross the
    expectation is sum_a P(argmax = a) * true_mean_a, because the
    evaluating set is independent of the selecting one; it therefore does
    not depend on K.
    """
    if n_per_action < 1:
        raise ConfigError("n_per_action must be >= 1")
    mean_dists = [
        _mean_distribution(vals, ps, n_per_action)
        for vals, ps in zip(dist.support, dist.probs)
    ]
    if kind == "single":
        total = 0.0
        for combo in itertools.product(*mean_dists):
            p = 1.0
            best = -np.inf
            for mean, prob in combo:
                p *= prob
                if mean > best:
                    best = mean
            total += p * best
        return total
    if kind in ("double", "cross"):
        select_prob = np.zeros(dist.n_actions)
        for combo in itertools.product(*mean_dists):
            p = 1.0
            for _, prob in combo:
                p *= prob
            means = [mean for mean, _ in combo]
            select_prob[int(np.argmax(means))] += p
        return float(select_prob @ dist.true_means())
    raise ConfigError(f"unknown estimator kind {kind!r}")


def _validate_kind_k(kind: str, k: int) -> None:
    if kind == "single":
        if k != 1:
            raise ConfigError("single estimator uses exactly one sample set (K=1)")
    elif kind == "double":
        if k != 2:
            raise ConfigError("double estimator uses exactly two sample sets (K=2)")
    elif kind == "cross":
        if k < 2:
            raise ConfigError("cross estimator needs K >= 2 sample sets")
    else:
        raise ConfigError(f"unknown estimator kind {kind!r}")


def estimator_bias_mc(
    dist: DistributionSpec,
    kind: str,
    k: int,
    n_per_action: int,
    trials: int,
    seed: int,
) -> tuple[float, float]:
    """Monte-Carlo mean and standard error of an estimator under ``dist``.

    Every trial draws fresh sample sets (k of them, n_per_action samples
    per action each) and applies the estimator. double selects with its
    first set; cross draws an ordered (selector, evaluator) pair uniformly
    per trial. Deterministic for a fixed seed.
    """
    if trials < 1:
        raise ConfigError("trials must be >= 1")
    _validate_kind_k(kind, k)
    rng = np.random.default_rng(seed)
    n_actions = dist.n_actions
    # sample means per (trial, set, action), drawn action-major for stable streams
    means = np.empty((trials, k, n_actions))
    for a in range(n_actions):
        vals = np.asarray(dist.support[a])
        ps = np.asarray(dist.probs[a])
        draws = rng.choice(vals, size=(trials, k, n_per_action), p=ps)
        means[:, :, a] = draws.mean(axis=2)
    rows = np.arange(trials)
    if kind == "single":
        estimates = means[:, 0, :].max(axis=1)
    elif kind == "double":
        chosen = np.argmax(means[:, 0, :], axis=1)
        estimates = means[rows, 1, chosen]
    else:
        sel = rng.integers(0, k, size=trials)
        other = rng.integers(0, k - 1, size=trials)
        ev = other + (other >= sel)
        chosen = np.argmax(means[rows, sel, :], axis=1)
        estimates = means[rows, ev, chosen]
    mean = float(estimates.mean())
    if trials == 1:
        return mean, float("inf")
    se = float(estimates.std(ddof=1) / np.sqrt(trials))
    return mean, se


def _two_point(lo: float, hi: float) -> tuple[tuple[float, ...], tuple[float, ...]]:
    return (lo, hi), (0.5, 0.5)


#: Named reward distributions used by the CLI and the verification suite.
#: fair2/fair3 have equal true means; the asym_* specs are 2-action cases
#: with distinct means where the estimator biases have known signs.
BUILTIN_SPECS: dict[str, DistributionSpec] = {
    "fair2": DistributionSpec(
        support=((0.0, 1.0), (0.0, 1.0)),
        probs=((0.5, 0.5), (0.5, 0.5)),
    ),
    "fair3": DistributionSpec(
        support=((0.0, 1.0),) * 3,
        probs=((0.5, 0.5),) * 3,
    ),
    "asym_gap": DistributionSpec(
        support=((0.0, 2.0), (0.6, 1.0)),
        probs=((0.5, 0.5), (0.5, 0.5)),
    ),
    "asym_noisy": DistributionSpec(
        support=((-1.0, 3.0), (0.9,)),
        probs=((0.5, 0.5), (1.0,)),
    ),
    "asym_three": DistributionSpec(
        support=((0.0, 1.0, 2.0), (0.4, 1.4)),
        probs=((1 / 3, 1 / 3, 1 / 3), (0.5, 0.5)),
    ),
}

#: The 2-action members of BUILTIN_SPECS whose actions have distinct means.
ASYMMETRIC_SPEC_NAMES = ("asym_gap", "asym_noisy", "asym_three")


def load_spec(text: str) -> DistributionSpec:
    """Parse a distribution from key-value text.

    One line per action::

        action.0 = 0:0.5, 1:0.5
        action.1 = 0.6:0.5, 1.0:0.5

    Each entry is ``value:probability``.
    """
    rows: dict[int, tuple[tuple[float, ...], tuple[float, ...]]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'action.N = v:p, ...'")
        key, _, value = line.partition("=")
        key = key.strip()
        if not key.startswith("action."):
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        try:
            idx = int(key[len("action."):])
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad action index in {key!r}") from exc
        vals = []
        ps = []
        for entry in value.split(","):
            entry = entry.strip()
            if not entry:
                continue
            v, _, p = entry.partition(":")
            try:
                vals.append(float(v))
                ps.append(float(p))
            except ValueError as exc:
                raise ConfigError(f"line {lineno}: bad entry {entry!r}") from exc
        rows[idx] = (tuple(vals), tuple(ps))
    if not rows:
        raise ConfigError("empty distribution spec")
    if sorted(rows) != list(range(len(rows))):
        raise ConfigError(f"action indices must be 0..{len(rows) - 1}, got {sorted(rows)}")
    return DistributionSpec(
        support=tuple(rows[i][0] for i in range(len(rows))),
        probs=tuple(rows[i][1] for i in range(len(rows))),
    )


def resolve_spec(name_or_path: str) -> DistributionSpec:
    """Look up a built-in spec by name, or parse one from a file path."""
    if name_or_path in BUILTIN_SPECS:
        return BUILTIN_SPECS[name_or_path]
    try:
        with open(name_or_path, "r", encoding="utf-8") as fh:
            return load_spec(fh.read())
    except FileNotFoundError:
        raise ConfigError(
            f"{name_or_path!r} is neither a built-in spec "
            f"({', '.join(sorted(BUILTIN_SPECS))}) nor a readable file"
        ) from None
