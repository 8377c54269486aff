"""Hierarchical Bayes estimation of overall preference weights.

Post-study estimation pools all respondents' purchase answers in a
binary logit with normally distributed individual weight vectors:

    W_i ~ N(0, Lambda),   Pr(first chosen) = logistic(W_i' (X1 - X2)),

with a conjugate inverse-Wishart prior on Lambda.  Sampling alternates
a random-walk Metropolis step per respondent (proposal covariance is a
scaled copy of the current Lambda, with the scale adapted during
burn-in toward a 0.3 acceptance rate) and an exact inverse-Wishart draw
for Lambda.

The respondent-level prior is centered at zero on purpose: with few
answers per person the pooled covariance, not a pooled mean, carries
the shrinkage.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray
from scipy.stats import invwishart

DEFAULT_ITERATIONS = 20_000
DEFAULT_BURN_IN = 10_000
DEFAULT_THIN = 10
ACCEPTANCE_TARGET = 0.3
_ADAPT_RATE = 0.01


@dataclass
class HBResult:
    """Posterior draws and chain diagnostics."""

    draws: NDArray          # (n_draws, n_respondents, dim)
    lambda_draws: NDArray   # (n_draws, dim, dim)
    acceptance: NDArray     # (n_respondents,) post-burn-in acceptance rates
    manifest: dict = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)

    def posterior_mean(self) -> NDArray:
        return self.draws.mean(axis=0)

    def posterior_sd(self) -> NDArray:
        return self.draws.std(axis=0)


def _log_likelihood(W: NDArray, diffs: NDArray, signs: NDArray, mask: NDArray) -> NDArray:
    """Per-respondent binary logit log likelihood.

    diffs : (N, J, k) chosen-minus-unchosen profile differences
    signs : unused questions are masked out via ``mask``
    """
    z = np.einsum("njk,nk->nj", diffs, W) * signs
    ll = -np.logaddexp(0.0, -z)
    return (ll * mask).sum(axis=1)


def data_digest(diffs: NDArray, mask: NDArray) -> str:
    h = hashlib.sha256()
    h.update(np.ascontiguousarray(diffs, dtype=float).tobytes())
    h.update(np.ascontiguousarray(mask, dtype=np.uint8).tobytes())
    return h.hexdigest()


def fit_hb(
    diffs: NDArray,
    mask: NDArray | None = None,
    iterations: int = DEFAULT_ITERATIONS,
    burn_in: int = DEFAULT_BURN_IN,
    thin: int = DEFAULT_THIN,
    prior_df: int | None = None,
    prior_scale: NDArray | None = None,
    initial_step: float = 0.2,
    seed: int | list[int] | None = 0,
) -> HBResult:
    """Run the Gibbs/Metropolis sampler.

    Parameters
    ----------
    diffs : (N, J, k) array
        Chosen-minus-unchosen profile differences.  Every answered
        question contributes one row; the chosen alternative is always
        the minuend, so the implied response sign is +1.
    mask : (N, J) boolean array, optional
        Marks which question slots are real (respondents may differ in
        answered counts).  Default: all.
    prior_df : int
        Inverse-Wishart degrees of freedom; default dim + 3.
    prior_scale : (k, k) array
        Inverse-Wishart scale; default identity * prior_df.
    """
    diffs = np.asarray(diffs, dtype=float)
    if diffs.ndim != 3:
        raise ValueError("diffs must be (respondents, questions, dim)")
    n, j, k = diffs.shape
    if n == 0:
        raise ValueError("need at least one respondent")
    if mask is None:
        mask = np.ones((n, j), dtype=bool)
    else:
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != (n, j):
            raise ValueError("mask shape must match diffs")
    if burn_in >= iterations:
        raise ValueError("burn_in must be smaller than iterations")

    df = int(prior_df) if prior_df is not None else k + 3
    if df < k + 1:
        raise ValueError("prior_df must be at least dim + 1")
    scale = np.asarray(prior_scale, dtype=float) if prior_scale is not None else np.eye(k) * df
    if scale.shape != (k, k):
        raise ValueError("prior_scale must be (dim, dim)")

    rng = np.random.default_rng(seed)
    signs = np.ones((n, j))
    maskf = mask.astype(float)

    W = np.zeros((n, k))
    Lam = np.eye(k)
    steps = np.full(n, float(initial_step))
    loglik = _log_likelihood(W, diffs, signs, maskf)
    quad = np.zeros(n)  # W' Lam^-1 W per respondent

    kept_W: list[NDArray] = []
    kept_L: list[NDArray] = []
    accepted_post = np.zeros(n)
    post_iters = 0

    for it in range(iterations):
        chol = np.linalg.cholesky(Lam)
        prop = W + steps[:, None] * (rng.standard_normal((n, k)) @ chol.T)
        loglik_prop = _log_likelihood(prop, diffs, signs, maskf)
        lam_inv_prop = np.linalg.solve(Lam, prop.T).T
        quad_prop = np.einsum("nk,nk->n", prop, lam_inv_prop)
        log_ratio = (loglik_prop - loglik) - 0.5 * (quad_prop - quad)
        accept = np.log(rng.random(n)) < log_ratio
        W[accept] = prop[accept]
        loglik[accept] = loglik_prop[accept]
        quad[accept] = quad_prop[accept]

        if it < burn_in:
            steps *= np.exp(_ADAPT_RATE * (accept.astype(float) - ACCEPTANCE_TARGET))
            np.clip(steps, 1e-4, 20.0, out=steps)
        else:
            accepted_post += accept
            post_iters += 1

        # conjugate covariance update
        Lam = invwishart.rvs(df=df + n, scale=scale + W.T @ W, random_state=rng)
        Lam = np.atleast_2d(Lam)
        lam_inv_w = np.linalg.solve(Lam, W.T).T
        quad = np.einsum("nk,nk->n", W, lam_inv_w)

        if it >= burn_in and (it - burn_in) % thin == 0:
            kept_W.append(W.copy())
            kept_L.append(Lam.copy())

    acceptance = accepted_post / max(post_iters, 1)
    warnings = []
    bad = (acceptance < 0.05) | (acceptance > 0.8)
    if bad.any():
        warnings.append(
            f"{int(bad.sum())} respondent chain(s) outside the 0.05-0.8 acceptance band"
        )

    manifest = {
        "iterations": int(iterations),
        "burn_in": int(burn_in),
        "thin": int(thin),
        "prior_df": df,
        "seed": seed if seed is None or isinstance(seed, int) else list(map(int, np.atleast_1d(seed))),
        "respondents": int(n),
        "dim": int(k),
        "data_sha256": data_digest(diffs, mask),
        "mean_acceptance": float(acceptance.mean()),
    }
    return HBResult(
        draws=np.stack(kept_W),
        lambda_draws=np.stack(kept_L),
        acceptance=acceptance,
        manifest=manifest,
        warnings=warnings,
    )
