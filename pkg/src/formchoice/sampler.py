"""Adaptive query construction.

Each survey round builds one paired comparison in two moves and then
attaches functional attributes:

1. The first body maximizes the squared distance to its nearest
   previously-shown body (own plus all earlier respondents), pushing
   the questionnaire into unexplored regions of the design box.
2. The second body trades utility balance against exploration: it
   maximizes a weighted sum of a balance kernel exp(-(S(x1) - S(x2))^2),
   which peaks when the current model scores both bodies alike, and the
   same squared-distance exploration terms (to the first body and to
   history).  The balance weight dominates (0.99 vs 0.01).
3. The price/fuel-economy levels for both alternatives come from an
   exhaustive search over all 625 ordered level pairs, scoring utility
   balance of the two complete products plus dummy-space dissimilarity
   from history, with ties resolved in lexicographic profile order.

The continuous searches use a small genetic algorithm: tournament
selection with (population - 1) players per tournament, a parent set as
large as the population, one-point crossover, and a 0.1-probability
single-coordinate mutation of width 0.05, clamped to the box.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
from numpy.typing import NDArray

from .overall_learner import N_LEVELS, dummy_code

BALANCE_WEIGHT = 0.99
EXPLORE_WEIGHT = 0.01

FIRST_SAMPLER_POP = 20
FIRST_SAMPLER_GENERATIONS = 100
SECOND_SAMPLER_POP = 50
SECOND_SAMPLER_GENERATIONS = 500


@dataclass(frozen=True)
class GAConfig:
    pop_size: int
    generations: int
    mutation_prob: float = 0.1
    mutation_scale: float = 0.05

    def __post_init__(self):
        if self.pop_size < 2:
            raise ValueError("pop_size must be at least 2")
        if self.generations < 0:
            raise ValueError("generations must be nonnegative")


def ga_optimize(
    objective: Callable[[NDArray], NDArray],
    dims: int,
    config: GAConfig,
    rng: np.random.Generator,
) -> tuple[NDArray, float]:
    """Maximize a batch objective over the unit box.

    ``objective`` maps an (n, dims) batch to n fitness values.  Candidates
    with non-finite fitness are discarded with a warning; if an entire
    population evaluates non-finite the search fails.

    Returns the best candidate ever evaluated and its fitness.
    """
    pop = rng.random((config.pop_size, dims))
    best_x: NDArray | None = None
    best_f = -np.inf
    warned = False

    for _ in range(config.generations + 1):
        fit = np.asarray(objective(pop), dtype=float)
        if fit.shape != (config.pop_size,):
            raise ValueError("objective must return one fitness per candidate")
        bad = ~np.isfinite(fit)
        if bad.any():
            if not warned:
                warnings.warn(
                    f"discarding {int(bad.sum())} non-finite candidate fitness value(s)",
                    RuntimeWarning,
                    stacklevel=2,
                )
                warned = True
            fit = np.where(bad, -np.inf, fit)
        if not np.isfinite(fit).any():
            raise ValueError("all candidate fitness values are non-finite")
        gen_best = int(np.argmax(fit))
        if fit[gen_best] > best_f:
            best_f = float(fit[gen_best])
            best_x = pop[gen_best].copy()

        if _ == config.generations:
            break

        # parent set as large as the population, each parent the winner
        # of a (pop_size - 1)-player tournament
        n = config.pop_size
        players = np.argsort(rng.random((n, n)), axis=1)[:, : n - 1]
        parents = players[np.arange(n), np.argmax(fit[players], axis=1)]

        children = pop[parents].copy()
        for k in range(0, n - 1, 2):
            a, b = children[k].copy(), children[k + 1].copy()
            cut = int(rng.integers(1, dims)) if dims > 1 else 1
            children[k, cut:], children[k + 1, cut:] = b[cut:], a[cut:]

        mutate = rng.random(n) < config.mutation_prob
        idx = rng.integers(0, dims, size=n)
        delta = rng.uniform(-config.mutation_scale, config.mutation_scale, size=n)
        rows = np.where(mutate)[0]
        children[rows, idx[rows]] += delta[rows]
        np.clip(children, 0.0, 1.0, out=children)
        pop = children

    assert best_x is not None
    return best_x, best_f


def latin_hypercube(n: int, dims: int, rng: np.random.Generator) -> NDArray:
    """Stratified sample of the unit box: one point per stratum per axis."""
    if n < 1:
        raise ValueError("need at least one sample")
    cells = np.stack([rng.permutation(n) for _ in range(dims)], axis=1)
    return (cells + rng.random((n, dims))) / n


def _min_sq_dist(cands: NDArray, history: NDArray) -> NDArray:
    """Row-wise min squared distance from candidates to history points."""
    if history.shape[0] == 0:
        return np.zeros(cands.shape[0])
    cn = (cands * cands).sum(axis=1)[:, None]
    hn = (history * history).sum(axis=1)[None, :]
    sq = cn + hn - 2.0 * cands @ history.T
    np.maximum(sq, 0.0, out=sq)
    return sq.min(axis=1)


def sample_first_form(
    history: NDArray,
    dims: int = 19,
    config: GAConfig | None = None,
    rng: np.random.Generator | None = None,
) -> NDArray:
    """Pick the exploration body: farthest from everything shown so far.

    With no history every point is equally good and a uniform draw from
    the box is returned.
    """
    rng = rng if rng is not None else np.random.default_rng()
    history = np.asarray(history, dtype=float).reshape(-1, dims)
    if history.shape[0] == 0:
        return rng.random(dims)
    config = config or GAConfig(FIRST_SAMPLER_POP, FIRST_SAMPLER_GENERATIONS)
    best, _ = ga_optimize(lambda X: _min_sq_dist(X, history), dims, config, rng)
    return best


def sample_second_form(
    first: NDArray,
    score_fn: Callable[[NDArray], NDArray],
    history: NDArray,
    v1: float = BALANCE_WEIGHT,
    v2: float = EXPLORE_WEIGHT,
    config: GAConfig | None = None,
    rng: np.random.Generator | None = None,
) -> NDArray:
    """Pick the comparison body for an already-chosen first body.

    Maximizes v1 * exp(-(S(x1) - S(x2))^2) plus v2 times the exploration
    terms (squared distance to the first body and to the nearest shown
    body).  An untrained model scores every body 0, which freezes the
    balance kernel at its peak and leaves pure exploration.
    """
    rng = rng if rng is not None else np.random.default_rng()
    first = np.asarray(first, dtype=float)
    dims = first.shape[0]
    history = np.asarray(history, dtype=float).reshape(-1, dims)
    config = config or GAConfig(SECOND_SAMPLER_POP, SECOND_SAMPLER_GENERATIONS)
    s1 = float(np.asarray(score_fn(first[None, :])).ravel()[0])

    def objective(X: NDArray) -> NDArray:
        s2 = np.asarray(score_fn(X), dtype=float).ravel()
        balance = np.exp(-((s1 - s2) ** 2))
        spread = ((X - first[None, :]) ** 2).sum(axis=1) + _min_sq_dist(X, history)
        return v1 * balance + v2 * spread

    best, _ = ga_optimize(objective, dims, config, rng)
    return best


def _all_profiles() -> NDArray:
    levels = np.arange(1, N_LEVELS + 1)
    p, m = np.meshgrid(levels, levels, indexing="ij")
    return np.column_stack([p.ravel(), m.ravel()])  # lexicographic (price, mpg)


_PROFILES = _all_profiles()
_PROFILE_DUMMIES = dummy_code(_PROFILES)


def sample_function_pair(
    w: NDArray,
    s1: float,
    s2: float,
    history_levels: NDArray,
    v1: float = BALANCE_WEIGHT,
    v2: float = EXPLORE_WEIGHT,
) -> tuple[NDArray, NDArray]:
    """Attach price/fuel-economy levels to a body pair.

    Scores every ordered pair of the 25 level profiles by utility
    balance of the two complete products under the current overall
    weights ``w`` plus dummy-space dissimilarity (between the two
    profiles, and from each to the nearest previously shown profile).
    Returns (levels1, levels2); ties resolve to the lexicographically
    first pair in (price, mpg) order.
    """
    w = np.asarray(w, dtype=float)
    hist = np.asarray(history_levels, dtype=np.int64).reshape(-1, 2)
    util = _PROFILE_DUMMIES @ w[1:]
    u1 = w[0] * float(s1) + util
    u2 = w[0] * float(s2) + util
    balance = np.exp(-((u1[:, None] - u2[None, :]) ** 2))

    d = _PROFILE_DUMMIES
    cross = ((d[:, None, :] - d[None, :, :]) ** 2).sum(axis=2)
    if hist.shape[0]:
        hd = dummy_code(hist)
        to_hist = _min_sq_dist(d, hd)
    else:
        to_hist = np.zeros(d.shape[0])
    dissim = cross + to_hist[:, None] + to_hist[None, :]

    score = v1 * balance + v2 * dissim
    flat = int(np.argmax(score))  # first max in C order = lexicographic
    i, j = divmod(flat, d.shape[0])
    return _PROFILES[i].copy(), _PROFILES[j].copy()
