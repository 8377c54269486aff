"""Overall (purchase) preference learner.

A purchase question shows two complete products, each a car body plus a
price level and a fuel-economy level, and asks which one the respondent
would buy.  The overall utility is linear in a 9-dimensional profile
vector: the respondent's form score of the body followed by dummy codes
for the two 5-level functional attributes (level 1 is the baseline and
codes to all zeros, so each attribute contributes 4 dummies).

During a survey the weights come from the same hard-margin ranking dual
as the form learner, but with a linear kernel, so the weight vector is
an explicit sum of answer differences.  The margin constant is an
arbitrary positive number: rescaling it rescales the weights without
changing any implied choice.  After a study the weights are re-estimated
jointly across respondents by the hierarchical Bayes sampler in ``hb``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from .ranksvm import DEFAULT_CAP, DEFAULT_MAX_ITER, DEFAULT_TOL, linear_q, solve_dual

N_LEVELS = 5
N_ATTRIBUTES = 2
N_DUMMIES = N_ATTRIBUTES * (N_LEVELS - 1)  # 8
PROFILE_DIM = 1 + N_DUMMIES  # form score + dummies

DEFAULT_MARGIN = 1.0
MODEL_FORMAT_VERSION = 1


def dummy_code(levels: NDArray) -> NDArray:
    """Dummy-code attribute levels.

    Parameters
    ----------
    levels : (..., 2) int array
        Levels in 1..5 for (price, mpg).

    Returns
    -------
    (..., 8) float array; level 1 codes to zeros in its block.
    """
    arr = np.asarray(levels)
    squeeze = arr.ndim == 1
    if squeeze:
        arr = arr[None, :]
    if arr.shape[-1] != N_ATTRIBUTES:
        raise ValueError(f"expected {N_ATTRIBUTES} attribute levels")
    if ((arr < 1) | (arr > N_LEVELS)).any():
        raise ValueError(f"levels must lie in 1..{N_LEVELS}")
    n = arr.shape[0]
    out = np.zeros((n, N_DUMMIES))
    for a in range(N_ATTRIBUTES):
        lv = arr[:, a]
        hot = lv > 1
        out[np.arange(n)[hot], a * (N_LEVELS - 1) + lv[hot] - 2] = 1.0
    return out[0] if squeeze else out


def decode_dummy(dummies: NDArray) -> NDArray:
    """Inverse of dummy_code; rejects vectors that are not valid codes."""
    arr = np.asarray(dummies, dtype=float)
    squeeze = arr.ndim == 1
    if squeeze:
        arr = arr[None, :]
    if arr.shape[-1] != N_DUMMIES:
        raise ValueError(f"expected {N_DUMMIES} dummies")
    levels = np.ones(arr.shape[:-1] + (N_ATTRIBUTES,), dtype=int)
    for a in range(N_ATTRIBUTES):
        block = arr[..., a * (N_LEVELS - 1): (a + 1) * (N_LEVELS - 1)]
        if not np.isin(block, (0.0, 1.0)).all() or (block.sum(axis=-1) > 1).any():
            raise ValueError("not a valid dummy coding")
        hot = block.argmax(axis=-1)
        has = block.sum(axis=-1) == 1
        levels[..., a] = np.where(has, hot + 2, 1)
    return levels[0] if squeeze else levels


def profile_vector(form_score: NDArray | float, levels: NDArray) -> NDArray:
    """Assemble [form score, dummies] profile rows."""
    s = np.atleast_1d(np.asarray(form_score, dtype=float))
    d = np.atleast_2d(dummy_code(levels))
    if s.shape[0] != d.shape[0]:
        raise ValueError("form_score and levels must align")
    out = np.column_stack([s, d])
    return out[0] if np.asarray(form_score).ndim == 0 and np.asarray(levels).ndim == 1 else out


@dataclass
class OverallModel:
    """Linear ranking model over profile vectors."""

    w: NDArray = field(default_factory=lambda: np.zeros(PROFILE_DIM))
    alpha: NDArray = field(default_factory=lambda: np.zeros(0))
    margin: float = DEFAULT_MARGIN
    converged: bool = True
    kkt_residual: float = 0.0
    capped: bool = False

    @property
    def n_pairs(self) -> int:
        return int(self.alpha.shape[0])

    def utility(self, profiles: NDArray) -> NDArray:
        return np.asarray(profiles, dtype=float) @ self.w

    def to_dict(self) -> dict:
        return {
            "format_version": MODEL_FORMAT_VERSION,
            "kind": "overall",
            "w": self.w.tolist(),
            "alpha": self.alpha.tolist(),
            "margin": float(self.margin),
            "converged": bool(self.converged),
            "kkt_residual": float(self.kkt_residual),
            "capped": bool(self.capped),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "OverallModel":
        if doc.get("format_version") != MODEL_FORMAT_VERSION or doc.get("kind") != "overall":
            raise ValueError("unsupported overall model document")
        return cls(
            w=np.asarray(doc["w"], dtype=float),
            alpha=np.asarray(doc["alpha"], dtype=float),
            margin=float(doc["margin"]),
            converged=bool(doc["converged"]),
            kkt_residual=float(doc["kkt_residual"]),
            capped=bool(doc["capped"]),
        )


def train_overall(
    chosen: NDArray,
    unchosen: NDArray,
    margin: float = DEFAULT_MARGIN,
    cap: float = DEFAULT_CAP,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> OverallModel:
    """Fit the linear ranking model to answered purchase questions.

    ``chosen`` and ``unchosen`` are (n, 9) profile arrays.  The margin
    constant applies to every answer; only its sign matters for the
    implied choices.
    """
    if margin <= 0:
        raise ValueError("margin must be positive")
    chosen = np.asarray(chosen, dtype=float).reshape(-1, PROFILE_DIM)
    unchosen = np.asarray(unchosen, dtype=float).reshape(-1, PROFILE_DIM)
    if chosen.shape[0] != unchosen.shape[0]:
        raise ValueError("chosen and unchosen must have equal lengths")
    if chosen.shape[0] == 0:
        return OverallModel(margin=margin)
    diffs = chosen - unchosen
    sol = solve_dual(
        linear_q(diffs), np.full(diffs.shape[0], float(margin)),
        cap=cap, tol=tol, max_iter=max_iter,
    )
    return OverallModel(
        w=diffs.T @ sol.alpha,
        alpha=sol.alpha,
        margin=float(margin),
        converged=sol.converged,
        kkt_residual=sol.kkt_residual,
        capped=sol.capped,
    )


def shrink_weights(own: NDArray, population: NDArray, eta: float) -> NDArray:
    """Shrunk weight vector: eta * own + (1 - eta) * population mean."""
    if not 0.0 <= eta <= 1.0:
        raise ValueError("eta must lie in [0, 1]")
    own = np.asarray(own, dtype=float)
    population = np.asarray(population, dtype=float)
    return eta * own + (1.0 - eta) * population


def choice_probability(w: NDArray, first: NDArray, second: NDArray) -> NDArray | float:
    """Logit probability that the first profile is chosen over the second."""
    w = np.asarray(w, dtype=float)
    d = np.atleast_2d(np.asarray(second, dtype=float) - np.asarray(first, dtype=float))
    p = 1.0 / (1.0 + np.exp(np.clip(d @ w, -500, 500)))
    return float(p[0]) if np.asarray(first).ndim == 1 else p


def predict_choice(w: NDArray, first: NDArray, second: NDArray) -> NDArray | int:
    """Deterministic choice: 0 for the first profile, 1 for the second.

    Exact utility ties go to the first profile, so the rule is a pure
    argmax and uniform scaling of w never changes it.
    """
    w = np.asarray(w, dtype=float)
    d = np.atleast_2d(np.asarray(second, dtype=float) - np.asarray(first, dtype=float))
    pick = (d @ w > 0.0).astype(int)
    return int(pick[0]) if np.asarray(first).ndim == 1 else pick
