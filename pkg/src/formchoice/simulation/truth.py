"""Synthetic respondents with known preferences.

A respondent's visual taste is a nonlinear function of the 19 design
variables: one cubic-spline main effect per variable plus a bilinear
interaction for every variable pair.  Functional taste is a partworth
table over the two attributes.  Because the preferences are known
exactly, predicted orderings can be scored against noiseless truth.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from numpy.typing import NDArray
from scipy.interpolate import CubicSpline
from scipy.special import expit

from ..geometry import N_VARIABLES

N_INTERACTIONS = N_VARIABLES * (N_VARIABLES - 1) // 2

# Every main effect is the same S-curve scaled by a per-variable draw:
# a natural cubic through these four values (times gamma) at the knots.
SHAPE_KNOTS = (0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0)
SHAPE_VALUES = (-1.0 / 3.0, 1.0, -1.0, 1.0 / 3.0)

_WIGGLE = CubicSpline(SHAPE_KNOTS, SHAPE_VALUES, bc_type="natural")

# Partworth pattern over attribute levels 2..5; level 1 is the dummy
# baseline and stays at zero.  The pattern sums to zero, which keeps the
# per-attribute offset where shrinkage pulls it.
LEVEL_PATTERN = np.array([0.0, -1.0, -1.0 / 3.0, 1.0 / 3.0, 1.0])

_IU, _JU = np.triu_indices(N_VARIABLES, k=1)


def shape_curve(x: NDArray, kind: str = "wiggle") -> NDArray:
    """Unit main-effect curve: the S-curve, or its straight stand-in."""
    x = np.asarray(x, dtype=float)
    if kind == "wiggle":
        return _WIGGLE(x)
    if kind == "linear":
        return x - 0.5
    raise ValueError(f"unknown shape kind {kind!r}")


@dataclass(frozen=True)
class Scenario:
    """One cell of the synthetic-population grid.

    The three binary factors set the distribution parameters: response
    accuracy sets the partworth magnitude (0.5 or 3), heterogeneity the
    variance relative to that magnitude (0.5x or 3x), and form
    importance the target ratio of form to function utility (1:2 or
    2:1) that ``lam`` is calibrated to.
    """

    form_importance: str
    response_accuracy: str
    heterogeneity: str
    beta_mean: float
    beta_var: float
    gamma_mean: float
    gamma_var: float
    delta_var: float
    lam: float
    shape: str = "wiggle"

    @property
    def name(self) -> str:
        return "/".join((self.form_importance, self.response_accuracy,
                         self.heterogeneity))

    def with_lambda(self, lam: float) -> "Scenario":
        return replace(self, lam=lam)


@dataclass
class TrueRespondent:
    gamma: NDArray        # (19,) spline amplitudes
    delta: NDArray        # (19,19) symmetric interaction matrix, zero diagonal
    partworths: NDArray   # (2,5) per-attribute level values, level 1 == 0
    lam: float
    shape: str = "wiggle"
    much_threshold: float = 0.0

    def form_score(self, designs: NDArray) -> NDArray:
        designs = np.asarray(designs, dtype=float)
        squeeze = designs.ndim == 1
        x = designs[None, :] if squeeze else designs
        main = shape_curve(x, self.shape) @ self.gamma
        inter = 0.5 * np.einsum("ni,ij,nj->n", x, self.delta, x)
        out = main + inter
        return float(out[0]) if squeeze else out

    def function_part(self, levels: NDArray) -> NDArray:
        levels = np.atleast_2d(np.asarray(levels, dtype=int))
        out = (self.partworths[0, levels[:, 0] - 1]
               + self.partworths[1, levels[:, 1] - 1])
        return float(out[0]) if out.shape == (1,) else out

    def utility(self, designs: NDArray, levels: NDArray) -> NDArray:
        return self.lam * self.form_score(designs) + self.function_part(levels)


def calibrate_delta_variance(gamma_mean: float, gamma_var: float,
                             n: int = 1000, rng=None,
                             target_ratio: float = 2.0,
                             shape: str = "wiggle") -> float:
    """Interaction-draw variance making main-effect terms dominate.

    Draws n single main-effect terms and n unit-variance interaction
    terms at random inputs, then scales the interaction distribution so
    mean |main| : mean |interaction| hits target_ratio (2:1 default).
    """
    rng = np.random.default_rng(rng)
    gammas = rng.normal(gamma_mean, np.sqrt(gamma_var), n)
    main = np.abs(gammas * shape_curve(rng.random(n), shape))
    unit = np.abs(rng.standard_normal(n) * rng.random(n) * rng.random(n))
    if main.mean() == 0.0:
        return 0.0
    sd = main.mean() / (target_ratio * unit.mean())
    return float(sd**2)


def calibrate_lambda(beta_mean: float, beta_var: float, gamma_mean: float,
                     gamma_var: float, delta_var: float,
                     target_ratio: float, n: int = 10000, rng=None,
                     shape: str = "wiggle") -> float:
    """Form-score weight hitting the target form:function utility ratio.

    Draws n (respondent, profile) pairs and solves
    mean |lam * S| = target_ratio * mean |partworth sum| for lam.
    """
    rng = np.random.default_rng(rng)
    x = rng.random((n, N_VARIABLES))
    gammas = rng.normal(gamma_mean, np.sqrt(gamma_var), (n, N_VARIABLES))
    deltas = rng.normal(0.0, np.sqrt(delta_var), (n, N_INTERACTIONS))
    scores = ((gammas * shape_curve(x, shape)).sum(axis=1)
              + (deltas * (x[:, _IU] * x[:, _JU])).sum(axis=1))
    betas = rng.normal(beta_mean, np.sqrt(beta_var), (n, 2))
    levels = rng.integers(1, 6, size=(n, 2))
    function = (betas[:, 0] * LEVEL_PATTERN[levels[:, 0] - 1]
                + betas[:, 1] * LEVEL_PATTERN[levels[:, 1] - 1])
    mean_score = np.abs(scores).mean()
    if mean_score == 0.0:
        raise ValueError("form scores are identically zero; cannot calibrate")
    return float(target_ratio * np.abs(function).mean() / mean_score)


def make_scenario(form_importance: str, response_accuracy: str,
                  heterogeneity: str, calibration_seed: int = 0,
                  shape: str = "wiggle") -> Scenario:
    for label, value in (("form_importance", form_importance),
                         ("response_accuracy", response_accuracy),
                         ("heterogeneity", heterogeneity)):
        if value not in ("low", "high"):
            raise ValueError(f"{label} must be 'low' or 'high', got {value!r}")
    beta_mean = 0.5 if response_accuracy == "low" else 3.0
    beta_var = (0.5 if heterogeneity == "low" else 3.0) * beta_mean
    delta_var = calibrate_delta_variance(
        beta_mean, beta_var, rng=np.random.default_rng([calibration_seed, 17]),
        shape=shape,
    )
    lam = calibrate_lambda(
        beta_mean, beta_var, beta_mean, beta_var, delta_var,
        target_ratio=0.5 if form_importance == "low" else 2.0,
        rng=np.random.default_rng([calibration_seed, 18]), shape=shape,
    )
    return Scenario(
        form_importance=form_importance, response_accuracy=response_accuracy,
        heterogeneity=heterogeneity, beta_mean=beta_mean, beta_var=beta_var,
        gamma_mean=beta_mean, gamma_var=beta_var, delta_var=delta_var,
        lam=lam, shape=shape,
    )


def scenario_grid(calibration_seed: int = 0) -> list[Scenario]:
    """All eight factor combinations, low-before-high in each factor."""
    grid = []
    for form in ("low", "high"):
        for accuracy in ("low", "high"):
            for het in ("low", "high"):
                grid.append(make_scenario(form, accuracy, het,
                                          calibration_seed=calibration_seed))
    return grid


def linear_sanity_scenario(calibration_seed: int = 0) -> Scenario:
    """Straight-line main effects, no interactions: a truth any linear
    model can represent exactly."""
    scenario = make_scenario("low", "high", "low",
                             calibration_seed=calibration_seed, shape="linear")
    return replace(scenario, delta_var=0.0)


THRESHOLD_PAIRS = 10000


def gen_respondent(scenario: Scenario, rng) -> TrueRespondent:
    rng = np.random.default_rng(rng)
    gamma = rng.normal(scenario.gamma_mean, np.sqrt(scenario.gamma_var),
                       N_VARIABLES)
    delta = np.zeros((N_VARIABLES, N_VARIABLES))
    draws = rng.normal(0.0, np.sqrt(scenario.delta_var), N_INTERACTIONS)
    delta[_IU, _JU] = draws
    delta += delta.T
    betas = rng.normal(scenario.beta_mean, np.sqrt(scenario.beta_var), 2)
    partworths = betas[:, None] * LEVEL_PATTERN[None, :]
    respondent = TrueRespondent(gamma=gamma, delta=delta,
                                partworths=partworths, lam=scenario.lam,
                                shape=scenario.shape)
    gaps = np.abs(respondent.form_score(rng.random((THRESHOLD_PAIRS, N_VARIABLES)))
                  - respondent.form_score(rng.random((THRESHOLD_PAIRS, N_VARIABLES))))
    respondent.much_threshold = float(np.median(gaps))
    return respondent


def gen_population(scenario: Scenario, n: int, rng) -> list[TrueRespondent]:
    rng = np.random.default_rng(rng)
    return [gen_respondent(scenario, rng) for _ in range(n)]


def simulate_form_answer(respondent: TrueRespondent, x_left: NDArray,
                         x_right: NDArray, rng, flip_prob: float = 0.0,
                         noiseless: bool = False) -> str:
    """Graded paired-comparison answer from true form scores.

    Direction is a logit draw on the raw score difference (deterministic
    when noiseless); strength compares |difference| to the respondent's
    own median gap; flip_prob reverses the direction afterwards.
    """
    diff = respondent.form_score(x_left) - respondent.form_score(x_right)
    if noiseless:
        left = diff >= 0
    else:
        left = rng.random() < expit(diff)
    if flip_prob > 0 and rng.random() < flip_prob:
        left = not left
    much = abs(diff) > respondent.much_threshold
    side = "left" if left else "right"
    return f"{side}_much_better" if much else f"{side}_better"


def simulate_purchase_answer(respondent: TrueRespondent, x_left: NDArray,
                             x_right: NDArray, levels_left, levels_right,
                             rng, noiseless: bool = False) -> str:
    du = (respondent.utility(x_left, levels_left)
          - respondent.utility(x_right, levels_right))
    if noiseless:
        return "left" if du >= 0 else "right"
    return "left" if rng.random() < expit(du) else "right"


def simulate_response(respondent: TrueRespondent, question: dict, rng,
                      flip_prob: float = 0.0, noiseless: bool = False) -> str:
    """Answer an engine-style question payload carrying design_vectors."""
    x_left, x_right = (np.asarray(v, dtype=float)
                       for v in question["design_vectors"])
    if question["question_type"] == "form":
        return simulate_form_answer(respondent, x_left, x_right, rng,
                                    flip_prob=flip_prob, noiseless=noiseless)
    if question["question_type"] == "purchase":
        left, right = question["function_profiles"]
        return simulate_purchase_answer(respondent, x_left, x_right,
                                        left, right, rng, noiseless=noiseless)
    raise ValueError(f"unknown question type {question['question_type']!r}")
