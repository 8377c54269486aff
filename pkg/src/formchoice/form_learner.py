"""Nonlinear form preference learner.

A respondent's form preference is an ordinal utility over car bodies,
learned from graded paired comparisons ("A looks much better than B"
counts twice the margin of "A looks better than B").  The model is a
hard-margin ranking machine in a Gaussian kernel space over the 325
distance features: training solves the ranking dual (see ``ranksvm``)
with kernel interactions, and scoring sums kernel contrasts against the
stored comparison pairs.

Scores are relative: only differences matter, the zero point is
arbitrary, and an untrained model scores everything 0.

Individual scores are stabilized by mixing with the population mean
score ("shrinkage"): early in a study the mix weight follows a fixed
schedule from 1.0 down to 0.7; once a respondent is finished the weight
is re-picked by leave-one-out cross validation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from .geometry import N_FEATURES
from .ranksvm import DEFAULT_CAP, DEFAULT_MAX_ITER, DEFAULT_TOL, solve_dual

DEFAULT_GAMMA = 1.0 / N_FEATURES  # inverse feature count

MUCH_BETTER_MARGIN = 2.0
BETTER_MARGIN = 1.0

ETA_START = 1.0
ETA_END = 0.7
DEFAULT_ETA_GRID = tuple(np.round(np.linspace(0.0, 1.0, 11), 10))

MODEL_FORMAT_VERSION = 1


def gaussian_kernel(a: NDArray, b: NDArray, gamma: float = DEFAULT_GAMMA) -> NDArray:
    """exp(-gamma * squared distance) between rows of a and rows of b."""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    sq = (
        (a * a).sum(axis=1)[:, None]
        + (b * b).sum(axis=1)[None, :]
        - 2.0 * (a @ b.T)
    )
    np.maximum(sq, 0.0, out=sq)
    return np.exp(-gamma * sq)


@dataclass
class FormModel:
    """Trained kernel ranking model for one respondent.

    ``pos``/``neg`` hold the preferred and unpreferred feature vectors of
    every answered comparison, ``margins`` the graded margin targets,
    ``alpha`` the dual weights.
    """

    pos: NDArray = field(default_factory=lambda: np.zeros((0, N_FEATURES)))
    neg: NDArray = field(default_factory=lambda: np.zeros((0, N_FEATURES)))
    alpha: NDArray = field(default_factory=lambda: np.zeros(0))
    margins: NDArray = field(default_factory=lambda: np.zeros(0))
    gamma: float = DEFAULT_GAMMA
    converged: bool = True
    kkt_residual: float = 0.0
    capped: bool = False

    @property
    def n_pairs(self) -> int:
        return int(self.alpha.shape[0])

    def score(self, feats: NDArray) -> NDArray:
        """Form score of one or many feature vectors (0 for an empty model)."""
        feats = np.asarray(feats, dtype=float)
        squeeze = feats.ndim == 1
        batch = feats[None, :] if squeeze else feats
        if self.n_pairs == 0:
            out = np.zeros(batch.shape[0])
        else:
            out = (gaussian_kernel(batch, self.pos, self.gamma)
                   - gaussian_kernel(batch, self.neg, self.gamma)) @ self.alpha
        return float(out[0]) if squeeze else out

    def score_pair_margin(self, pos_feats: NDArray, neg_feats: NDArray) -> NDArray:
        return np.asarray(self.score(np.atleast_2d(pos_feats))) - np.asarray(
            self.score(np.atleast_2d(neg_feats))
        )

    def to_dict(self) -> dict:
        return {
            "format_version": MODEL_FORMAT_VERSION,
            "kind": "form",
            "gamma": float(self.gamma),
            "pos": self.pos.tolist(),
            "neg": self.neg.tolist(),
            "alpha": self.alpha.tolist(),
            "margins": self.margins.tolist(),
            "converged": bool(self.converged),
            "kkt_residual": float(self.kkt_residual),
            "capped": bool(self.capped),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "FormModel":
        if doc.get("format_version") != MODEL_FORMAT_VERSION or doc.get("kind") != "form":
            raise ValueError("unsupported form model document")
        return cls(
            pos=np.asarray(doc["pos"], dtype=float).reshape(-1, N_FEATURES),
            neg=np.asarray(doc["neg"], dtype=float).reshape(-1, N_FEATURES),
            alpha=np.asarray(doc["alpha"], dtype=float),
            margins=np.asarray(doc["margins"], dtype=float),
            gamma=float(doc["gamma"]),
            converged=bool(doc["converged"]),
            kkt_residual=float(doc["kkt_residual"]),
            capped=bool(doc["capped"]),
        )


def form_q_matrix(pos: NDArray, neg: NDArray, gamma: float) -> NDArray:
    """Kernel interaction matrix of comparison differences."""
    return (
        gaussian_kernel(pos, pos, gamma)
        + gaussian_kernel(neg, neg, gamma)
        - gaussian_kernel(pos, neg, gamma)
        - gaussian_kernel(neg, pos, gamma)
    )


def train_form(
    pos: NDArray,
    neg: NDArray,
    margins: NDArray,
    gamma: float = DEFAULT_GAMMA,
    cap: float = DEFAULT_CAP,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> FormModel:
    """Fit the kernel ranking model to answered comparisons.

    Parameters
    ----------
    pos, neg : (n, 325) arrays
        Normalized features of the preferred / unpreferred design of
        each comparison.
    margins : (n,) array
        Margin target per comparison (1 = better, 2 = much better).
    """
    pos = np.asarray(pos, dtype=float).reshape(-1, N_FEATURES)
    neg = np.asarray(neg, dtype=float).reshape(-1, N_FEATURES)
    margins = np.asarray(margins, dtype=float).ravel()
    if not (pos.shape[0] == neg.shape[0] == margins.shape[0]):
        raise ValueError("pos, neg and margins must have equal lengths")
    if pos.shape[0] == 0:
        return FormModel(gamma=gamma)
    sol = solve_dual(form_q_matrix(pos, neg, gamma), margins, cap=cap, tol=tol, max_iter=max_iter)
    return FormModel(
        pos=pos,
        neg=neg,
        alpha=sol.alpha,
        margins=margins,
        gamma=gamma,
        converged=sol.converged,
        kkt_residual=sol.kkt_residual,
        capped=sol.capped,
    )


class FormPopulation:
    """Mean form score over a set of finished respondents' models.

    Models are stacked into flat arrays so a population score is one
    kernel evaluation, not a Python loop over members.
    """

    def __init__(self, models: list[FormModel]):
        self.n_members = len(models)
        nonempty = [m for m in models if m.n_pairs > 0]
        if self.n_members == 0 or not nonempty:
            self._pos = np.zeros((0, N_FEATURES))
            self._neg = np.zeros((0, N_FEATURES))
            self._weights = np.zeros(0)
            self._gamma = DEFAULT_GAMMA
        else:
            gammas = {float(m.gamma) for m in nonempty}
            if len(gammas) != 1:
                raise ValueError("population models must share a kernel width")
            self._gamma = gammas.pop()
            self._pos = np.concatenate([m.pos for m in nonempty])
            self._neg = np.concatenate([m.neg for m in nonempty])
            self._weights = np.concatenate([m.alpha for m in nonempty]) / self.n_members

    def score_mean(self, feats: NDArray) -> NDArray:
        """Average member score of one or many feature vectors."""
        feats = np.asarray(feats, dtype=float)
        squeeze = feats.ndim == 1
        batch = feats[None, :] if squeeze else feats
        if self._weights.shape[0] == 0:
            out = np.zeros(batch.shape[0])
        else:
            out = (gaussian_kernel(batch, self._pos, self._gamma)
                   - gaussian_kernel(batch, self._neg, self._gamma)) @ self._weights
        return float(out[0]) if squeeze else out


def mix_scores(own: NDArray | float, population_mean: NDArray | float, eta: float):
    """Shrunk score: eta * own + (1 - eta) * population mean."""
    if not 0.0 <= eta <= 1.0:
        raise ValueError("eta must lie in [0, 1]")
    return eta * np.asarray(own) + (1.0 - eta) * np.asarray(population_mean)


class MixedFormScorer:
    """Convenience scorer combining one respondent with the population."""

    def __init__(self, individual: FormModel, population: FormPopulation | None, eta: float):
        if not 0.0 <= eta <= 1.0:
            raise ValueError("eta must lie in [0, 1]")
        self.individual = individual
        self.population = population
        self.eta = eta

    def score(self, feats: NDArray) -> NDArray:
        own = self.individual.score(feats)
        if self.population is None or self.eta == 1.0:
            pop = np.zeros_like(np.asarray(own, dtype=float))
        else:
            pop = self.population.score_mean(feats)
        return mix_scores(own, pop, self.eta)


def eta_schedule(index: int, n_total: int, start: float = ETA_START, end: float = ETA_END) -> float:
    """Scheduled mix weight for the respondent with 1-based arrival index."""
    if index < 1:
        raise ValueError("respondent index is 1-based")
    if n_total <= 1:
        return start
    frac = (min(index, n_total) - 1) / (n_total - 1)
    return start + (end - start) * frac


def select_eta(
    pos: NDArray,
    neg: NDArray,
    margins: NDArray,
    population: FormPopulation | None,
    grid: tuple[float, ...] = DEFAULT_ETA_GRID,
    fallback: float = ETA_START,
    gamma: float = DEFAULT_GAMMA,
) -> tuple[float, NDArray]:
    """Pick the mix weight by leave-one-out misordering count.

    Returns the chosen eta and the per-grid-point misorder counts.  With
    fewer than two answered comparisons there is nothing to cross
    validate and the fallback (scheduled) value is returned.  Ties are
    broken toward the largest eta, trusting the individual model.
    """
    pos = np.asarray(pos, dtype=float).reshape(-1, N_FEATURES)
    neg = np.asarray(neg, dtype=float).reshape(-1, N_FEATURES)
    margins = np.asarray(margins, dtype=float).ravel()
    n = pos.shape[0]
    grid_arr = np.asarray(grid, dtype=float)
    if (grid_arr < 0).any() or (grid_arr > 1).any():
        raise ValueError("eta grid must lie in [0, 1]")
    if n < 2:
        return float(fallback), np.zeros(grid_arr.shape[0], dtype=int)

    own_delta = np.empty(n)
    pop_delta = np.empty(n)
    keep = np.ones(n, dtype=bool)
    for j in range(n):
        keep[:] = True
        keep[j] = False
        fold = train_form(pos[keep], neg[keep], margins[keep], gamma=gamma)
        own_delta[j] = fold.score(pos[j]) - fold.score(neg[j])
        if population is None:
            pop_delta[j] = 0.0
        else:
            pop_delta[j] = population.score_mean(pos[j]) - population.score_mean(neg[j])

    mixed = grid_arr[:, None] * own_delta[None, :] + (1 - grid_arr[:, None]) * pop_delta[None, :]
    misorders = (mixed <= 0.0).sum(axis=1)
    best = misorders.min()
    eta = float(grid_arr[misorders == best].max())
    return eta, misorders
