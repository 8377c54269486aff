"""Post-hoc analytics over finalized studies.

Turns posterior weight estimates and form scorers into the quantities a
product team acts on: attribute importances, respondent segments,
per-segment best designs, and the exchange rates between styling changes
and money or fuel economy.

Partworth layout everywhere in this module: rows of shape (2, 5), first
row the five price levels ($23K, $25K, $26K, $29K, $31K), second row the
five fuel-economy levels (23/27 .. 26/32 city/highway mpg).  Differences
between levels are what matter; any constant shift per attribute cancels.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray
from scipy.cluster.hierarchy import fcluster, linkage

from .geometry import N_VARIABLES, default_normalization, features_batch
from .sampler import GAConfig, ga_optimize

# Quartile levels of a 5-level attribute (0-based indices 1 and 3) span
# $4,000 of price and 2 city mpg of fuel economy.
_IQ_LOW, _IQ_HIGH = 1, 3
PRICE_SPAN_K = 4.0
MPG_SPAN = 2.0

FD_STEP = 0.01  # finite-difference step; trade-offs use the same 0.01
                # perturbation their "x100" convention is defined on

GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class ImportanceTriple:
    """Per-respondent attribute importances."""

    form: float   # weight on the form score
    price: float  # spread of the five price partworths
    mpg: float    # spread of the five fuel-economy partworths

    def __post_init__(self):
        if self.price < 0 or self.mpg < 0:
            raise ValueError("level spreads cannot be negative")

    def as_array(self) -> NDArray:
        return np.array([self.form, self.price, self.mpg])


def _mean_weights(posterior) -> NDArray:
    """Accept an HBResult, a draw stack (D, N, 9), or mean weights (N, 9)."""
    if hasattr(posterior, "posterior_mean"):
        W = posterior.posterior_mean()
    else:
        W = np.asarray(posterior, dtype=float)
        if W.ndim == 3:
            W = W.mean(axis=0)
    W = np.atleast_2d(W)
    if W.shape[-1] != 9:
        raise ValueError("expected 9 columns: form weight plus 8 level dummies")
    return W


def partworth_table(posterior) -> NDArray:
    """(N, 2, 5) partworths, zero-meaned within person and attribute.

    The estimation basis pins level 1 of each attribute at zero; the
    zero-mean convention is the usual way to tabulate such estimates and
    leaves every level difference unchanged.
    """
    W = _mean_weights(posterior)
    pw = np.zeros((W.shape[0], 2, 5))
    pw[:, 0, 1:] = W[:, 1:5]
    pw[:, 1, 1:] = W[:, 5:9]
    return pw - pw.mean(axis=2, keepdims=True)


def importances(posterior) -> list[ImportanceTriple]:
    """Form weight plus max-minus-min level spreads, per respondent."""
    W = _mean_weights(posterior)
    pw = partworth_table(W)
    return [
        ImportanceTriple(
            form=float(W[i, 0]),
            price=float(np.ptp(pw[i, 0])),
            mpg=float(np.ptp(pw[i, 1])),
        )
        for i in range(W.shape[0])
    ]


@dataclass
class ClusterResult:
    labels: NDArray         # (N,) ints in 0..k-1
    centroids: NDArray      # (k, 3) in raw units
    centroids_std: NDArray  # (k, 3) in z-score units
    sizes: NDArray          # (k,)
    mean: NDArray           # (3,) standardization offsets
    scale: NDArray          # (3,)


def _as_triple_array(triples) -> NDArray:
    if isinstance(triples, np.ndarray):
        X = np.atleast_2d(np.asarray(triples, dtype=float))
    else:
        X = np.array([t.as_array() for t in triples])
    if X.ndim != 2:
        raise ValueError("expected one row of importances per respondent")
    return X


def cluster(triples, k: int = 4, seed: int = 0) -> ClusterResult:
    """Segment respondents on z-scored importances.

    Ward-linkage hierarchical clustering cut at ``k`` provides starting
    centroids, which a plain Lloyd refinement then polishes.  The whole
    procedure is deterministic; ``seed`` is kept in the signature for
    interface stability but nothing random remains once the hierarchical
    seeding is fixed.
    """
    X = _as_triple_array(triples)
    n = X.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"k must lie in 1..{n}")
    mean = X.mean(axis=0)
    scale = X.std(axis=0)
    scale = np.where(scale < 1e-12, 1.0, scale)
    Z = (X - mean) / scale

    if k == 1:
        labels = np.zeros(n, dtype=int)
    else:
        tree = linkage(Z, method="ward")
        labels = fcluster(tree, t=k, criterion="maxclust") - 1
        centroids = np.array([Z[labels == c].mean(axis=0) for c in range(k)])
        for _ in range(100):
            dists = ((Z[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
            new_labels = dists.argmin(axis=1)
            if np.array_equal(new_labels, labels):
                break
            labels = new_labels
            for c in range(k):
                members = Z[labels == c]
                if len(members):
                    centroids[c] = members.mean(axis=0)

    sizes = np.bincount(labels, minlength=k)
    centroids_std = np.array([
        Z[labels == c].mean(axis=0) if sizes[c] else np.zeros(Z.shape[1])
        for c in range(k)
    ])
    return ClusterResult(
        labels=labels,
        centroids=centroids_std * scale + mean,
        centroids_std=centroids_std,
        sizes=sizes,
        mean=mean,
        scale=scale,
    )


def group_scorer(scorers) -> "callable":
    """Design-space callable: mean form score of a group's members."""
    norm = default_normalization()

    def score(X: NDArray) -> NDArray:
        feats = norm.transform(features_batch(np.atleast_2d(X)))
        return np.mean([s.score(feats) for s in scorers], axis=0)

    return score


def _golden_section(f, lo: float, hi: float, tol: float = 1e-4) -> float:
    """Scalar maximizer of ``f`` on [lo, hi]."""
    a, b = lo, hi
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = f(d)
    return (a + b) / 2.0


@dataclass
class OptimalDesign:
    design: NDArray
    score: float
    degenerate: bool
    restart_scores: NDArray


def optimal_design(score_fn, config: GAConfig | None = None, restarts: int = 5,
                   seed: int = 0, polish_sweeps: int = 2) -> OptimalDesign:
    """Best design in the box under a form scorer.

    Several seeded GA searches keep the best candidate, then a
    coordinate-wise golden-section polish tightens each variable in
    turn.  A scorer that cannot rank anything (constant output) is
    flagged degenerate rather than dressed up as a preference.
    """
    config = config or GAConfig(20, 100)
    best_x, best_f = None, -np.inf
    restart_scores = np.empty(restarts)
    for r in range(restarts):
        x, f = ga_optimize(score_fn, N_VARIABLES, config,
                           np.random.default_rng([seed, r]))
        restart_scores[r] = f
        if f > best_f:
            best_x, best_f = x, f

    for _ in range(polish_sweeps):
        for kdim in range(N_VARIABLES):
            def along(v, kdim=kdim):
                probe = best_x.copy()
                probe[kdim] = v
                return float(np.asarray(score_fn(probe[None, :])).ravel()[0])
            best_x[kdim] = _golden_section(along, 0.0, 1.0)
        best_f = float(np.asarray(score_fn(best_x[None, :])).ravel()[0])

    probes = np.vstack([np.random.default_rng([seed, 87]).random((64, N_VARIABLES)),
                        best_x[None, :]])
    spread = float(np.ptp(np.asarray(score_fn(probes), dtype=float)))
    return OptimalDesign(design=best_x, score=best_f,
                         degenerate=spread < 1e-9,
                         restart_scores=restart_scores)


@dataclass
class Sensitivity:
    value: float          # lambda-weighted form utility at the point
    gradient: NDArray     # (19,)
    hessian_diag: NDArray # (19,)
    step: float


def sensitivities(score_fn, lam: float, x_star: NDArray,
                  h: float = FD_STEP) -> Sensitivity:
    """Central-difference gradient and Hessian diagonal of lam * score."""
    x_star = np.asarray(x_star, dtype=float)
    probes = np.vstack([x_star[None, :],
                        x_star[None, :] + h * np.eye(N_VARIABLES),
                        x_star[None, :] - h * np.eye(N_VARIABLES)])
    vals = lam * np.asarray(score_fn(probes), dtype=float).ravel()
    f0, fp, fm = vals[0], vals[1:1 + N_VARIABLES], vals[1 + N_VARIABLES:]
    return Sensitivity(
        value=float(f0),
        gradient=(fp - fm) / (2.0 * h),
        hessian_diag=(fp - 2.0 * f0 + fm) / h**2,
        step=h,
    )


def is_interior_maximum(sens: Sensitivity) -> bool:
    """Curvature everywhere negative and gradient flat at the scale the
    finite-difference step can resolve."""
    if not np.all(sens.hessian_diag < 0):
        return False
    tol = 10.0 * sens.step**2 * float(np.abs(sens.hessian_diag).max())
    return float(np.abs(sens.gradient).max()) < tol


def per_kilodollar_utility(partworths: NDArray) -> float:
    """Utility per $1000, from the quartile price levels ($4K apart)."""
    pw = np.asarray(partworths, dtype=float)
    return float((pw[0, _IQ_LOW] - pw[0, _IQ_HIGH]) / PRICE_SPAN_K)


def per_mpg_utility(partworths: NDArray) -> float:
    """Utility per city mpg, from the quartile fuel-economy levels."""
    pw = np.asarray(partworths, dtype=float)
    return float((pw[1, _IQ_HIGH] - pw[1, _IQ_LOW]) / MPG_SPAN)


@dataclass
class TradeoffRow:
    variable: int         # 1-based design variable index
    hessian_diag: float
    wttp: float           # $1000s a 0.01 shift is worth, x100 convention
    wttm: float           # city mpg, same convention
    usable: bool


def wtt(score_fn, lam: float, partworths: NDArray, x_star: NDArray,
        h: float = FD_STEP) -> list[TradeoffRow]:
    """Willingness-to-trade table for one respondent at their optimum.

    The utility lost to a symmetric 0.01 perturbation of each design
    variable is priced against the per-$1000 and per-mpg utilities and
    reported on the x100 convention.  Respondents whose price or
    fuel-economy partworths run the wrong way get flagged rows instead
    of sign-flipped numbers.
    """
    sens = sensitivities(score_fn, lam, np.asarray(x_star, dtype=float), h)
    # utility drop from the perturbation, per variable (>= 0 at a max)
    drop = -0.5 * h**2 * sens.hessian_diag
    per_kd = per_kilodollar_utility(partworths)
    per_mpg = per_mpg_utility(partworths)
    usable = per_kd > 0 and per_mpg > 0
    rows = []
    for k in range(N_VARIABLES):
        rows.append(TradeoffRow(
            variable=k + 1,
            hessian_diag=float(sens.hessian_diag[k]),
            wttp=float(100.0 * drop[k] / per_kd) if usable else float("nan"),
            wttm=float(100.0 * drop[k] / per_mpg) if usable else float("nan"),
            usable=usable,
        ))
    return rows


def aggregate_wtt(rows_per_respondent: list[list[TradeoffRow]],
                  labels: NDArray | None = None) -> list[dict]:
    """Median trade-off table across respondents, overall and per group."""
    if not rows_per_respondent:
        raise ValueError("no trade-off rows to aggregate")
    labels = (np.zeros(len(rows_per_respondent), dtype=int)
              if labels is None else np.asarray(labels))
    groups = np.unique(labels)

    def med(values):
        values = [v for v in values if np.isfinite(v)]
        return float(np.median(values)) if values else float("nan")

    table = []
    for k in range(N_VARIABLES):
        row = {
            "variable": k + 1,
            "hessian_diag": med([r[k].hessian_diag for r in rows_per_respondent]),
            "wttp_median": med([r[k].wttp for r in rows_per_respondent]),
            "wttm_median": med([r[k].wttm for r in rows_per_respondent]),
        }
        for g in groups:
            members = [rows_per_respondent[i] for i in np.flatnonzero(labels == g)]
            row[f"wttp_group{g}"] = med([r[k].wttp for r in members])
            row[f"wttm_group{g}"] = med([r[k].wttm for r in members])
        table.append(row)
    return table


def wtp_mpg(partworths: NDArray) -> float:
    """Dollars per city mpg implied by one respondent's partworths."""
    per_kd = per_kilodollar_utility(partworths)
    if abs(per_kd) < 1e-12:
        raise ValueError("price partworths are flat; dollars per unit "
                         "utility is undefined")
    return per_mpg_utility(partworths) / per_kd * 1000.0


def wtp_mpg_summary(partworth_sets: NDArray) -> dict:
    """Study-level dollars-per-mpg: median over respondents with usable
    (strictly positive) per-$1000 utility."""
    values, flagged = [], 0
    for pw in partworth_sets:
        per_kd = per_kilodollar_utility(pw)
        if per_kd <= 1e-12:
            flagged += 1
            continue
        values.append(per_mpg_utility(pw) / per_kd * 1000.0)
    return {
        "median": float(np.median(values)) if values else float("nan"),
        "n_used": len(values),
        "n_flagged": flagged,
    }
