"""Vehicle body parameterization.

A car body is described by 19 design variables, each in [0, 1].  The
variables drive 26 three-dimensional control points laid out on a sedan
silhouette: ten points on the longitudinal centerline (bumpers, grille,
hood, windshield, roof, backlight, tail) and eight left/right pairs
(hood and greenhouse corners, waistline, wheel arch tops).  The mapping
from variables to points is data-driven: ``control_mapping.json`` names
every variable, every point, and the placement rule for each coordinate,
so the correspondence is inspectable and versioned.

Left and right points mirror across the centerline plane y = 0, so every
decoded body is laterally symmetric.  All points fit inside a unit
bounding box with the body length normalized to 1.

The learner-facing representation of a body is the vector of all 325
pairwise Euclidean distances between control points, taken in canonical
row-major pair order (0,1), (0,2), ..., (24,25).  Distances are invariant
to rigid motion of the body and scale linearly under uniform scaling.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources

import numpy as np
from numpy.typing import NDArray

N_VARIABLES = 19
N_POINTS = 26
N_FEATURES = N_POINTS * (N_POINTS - 1) // 2  # 325

# Canonical pair order for the distance features.
_PAIR_I, _PAIR_J = np.triu_indices(N_POINTS, k=1)

_COORDS = {"x": 0, "y": 1, "z": 2}


def _load_mapping() -> dict:
    ref = resources.files("formchoice.geometry") / "data" / "control_mapping.json"
    with ref.open("r", encoding="utf-8") as fh:
        return json.load(fh)


_MAPPING = _load_mapping()

MAPPING_VERSION: int = _MAPPING["version"]
VARIABLE_NAMES: tuple[str, ...] = tuple(_MAPPING["variables"])
POINT_NAMES: tuple[str, ...] = tuple(p["name"] for p in _MAPPING["points"])


def control_mapping() -> dict:
    """Return a deep copy of the variable-to-control-point mapping document."""
    return json.loads(json.dumps(_MAPPING))


def _check_designs(designs: NDArray) -> NDArray:
    arr = np.asarray(designs, dtype=float)
    squeeze = arr.ndim == 1
    if squeeze:
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[1] != N_VARIABLES:
        raise ValueError(f"designs must have {N_VARIABLES} variables, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise ValueError("design variables must be finite")
    if (arr < 0.0).any() or (arr > 1.0).any():
        raise ValueError("design variables must lie in [0, 1]")
    return arr


def decode_batch(designs: NDArray) -> NDArray:
    """Decode design vectors to control points.

    Parameters
    ----------
    designs : array of shape (n, 19)
        Design variables in [0, 1].

    Returns
    -------
    array of shape (n, 26, 3)
        Control point coordinates (x fore-aft, y lateral, z up).
    """
    arr = _check_designs(designs)
    n = arr.shape[0]
    pts = np.zeros((n, N_POINTS, 3))
    for spec in _MAPPING["points"]:
        idx = spec["index"]
        for coord, c in _COORDS.items():
            rule = spec[coord]
            kind = rule["rule"]
            if kind == "const":
                pts[:, idx, c] = rule["value"]
            elif kind == "affine":
                v = arr[:, rule["var"]]
                val = rule["lo"] + (rule["hi"] - rule["lo"]) * v
                pts[:, idx, c] = rule.get("sign", 1) * val
            elif kind == "offset":
                pts[:, idx, c] = pts[:, rule["point"], _COORDS[rule["coord"]]] + rule["delta"]
            elif kind == "midpoint":
                a, b = rule["points"]
                cc = _COORDS[rule["coord"]]
                pts[:, idx, c] = 0.5 * (pts[:, a, cc] + pts[:, b, cc])
            elif kind == "width_avg":
                a, b = rule["points"]
                half = 0.5 * (np.abs(pts[:, a, 1]) + np.abs(pts[:, b, 1]))
                pts[:, idx, c] = rule["sign"] * (half + rule["delta"])
            else:  # pragma: no cover - mapping file is shipped with the package
                raise ValueError(f"unknown mapping rule {kind!r}")
    return pts


def decode(design: NDArray) -> NDArray:
    """Decode one design vector to its (26, 3) control point array."""
    return decode_batch(design)[0]


def features_from_points(points: NDArray) -> NDArray:
    """Pairwise distances of a control point set, in canonical pair order.

    Accepts a single (26, 3) array or a batch (n, 26, 3).
    """
    pts = np.asarray(points, dtype=float)
    squeeze = pts.ndim == 2
    if squeeze:
        pts = pts[None]
    if pts.shape[-2:] != (N_POINTS, 3):
        raise ValueError(f"expected (..., {N_POINTS}, 3) points, got {pts.shape}")
    diff = pts[:, _PAIR_I, :] - pts[:, _PAIR_J, :]
    dist = np.sqrt((diff * diff).sum(axis=2))
    return dist[0] if squeeze else dist


def features_batch(designs: NDArray) -> NDArray:
    """Distance features for a batch of designs, shape (n, 325)."""
    return features_from_points(decode_batch(designs))


def features(design: NDArray) -> NDArray:
    """Distance features for one design, shape (325,)."""
    return features_batch(np.asarray(design, dtype=float)[None, :])[0]


@dataclass(frozen=True)
class NormalizationStats:
    """Per-feature z-scoring statistics, frozen for a study.

    Features whose sample deviation is numerically zero (distances
    between fully fixed control points) get unit scale so they normalize
    to a constant instead of dividing by zero.
    """

    mean: NDArray
    scale: NDArray
    sample_size: int
    seed: int

    def transform(self, feats: NDArray) -> NDArray:
        return (np.asarray(feats, dtype=float) - self.mean) / self.scale

    def to_dict(self) -> dict:
        return {
            "version": 1,
            "sample_size": int(self.sample_size),
            "seed": int(self.seed),
            "mean": [float(v) for v in self.mean],
            "scale": [float(v) for v in self.scale],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "NormalizationStats":
        mean = np.asarray(doc["mean"], dtype=float)
        scale = np.asarray(doc["scale"], dtype=float)
        if mean.shape != (N_FEATURES,) or scale.shape != (N_FEATURES,):
            raise ValueError("normalization stats have wrong feature count")
        return cls(mean=mean, scale=scale, sample_size=int(doc["sample_size"]), seed=int(doc["seed"]))


DEFAULT_NORMALIZATION_SEED = 20240501
DEFAULT_NORMALIZATION_SAMPLE = 10_000


def fit_normalization(
    sample_size: int = DEFAULT_NORMALIZATION_SAMPLE,
    seed: int = DEFAULT_NORMALIZATION_SEED,
) -> NormalizationStats:
    """Fit z-scoring statistics over uniformly sampled designs."""
    if sample_size < 2:
        raise ValueError("sample_size must be at least 2")
    rng = np.random.default_rng(seed)
    sample = rng.random((sample_size, N_VARIABLES))
    feats = features_batch(sample)
    mean = feats.mean(axis=0)
    scale = feats.std(axis=0)
    scale = np.where(scale < 1e-9, 1.0, scale)
    return NormalizationStats(mean=mean, scale=scale, sample_size=sample_size, seed=seed)


def default_normalization() -> NormalizationStats:
    """Load the frozen statistics shipped with the package."""
    ref = resources.files("formchoice.geometry") / "data" / "normalization_stats.json"
    with ref.open("r", encoding="utf-8") as fh:
        return NormalizationStats.from_dict(json.load(fh))
