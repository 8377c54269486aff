from .controls import (
    DEFAULT_NORMALIZATION_SAMPLE,
    DEFAULT_NORMALIZATION_SEED,
    MAPPING_VERSION,
    N_FEATURES,
    N_POINTS,
    N_VARIABLES,
    POINT_NAMES,
    VARIABLE_NAMES,
    NormalizationStats,
    control_mapping,
    decode,
    decode_batch,
    default_normalization,
    features,
    features_batch,
    features_from_points,
    fit_normalization,
)
from .mesh import (
    DEFAULT_RESOLUTION,
    MAX_RESOLUTION,
    N_PATCHES,
    Mesh,
    face_count,
    tessellate,
    tessellate_points,
    vertex_count,
)

__all__ = [
    "DEFAULT_NORMALIZATION_SAMPLE",
    "DEFAULT_NORMALIZATION_SEED",
    "DEFAULT_RESOLUTION",
    "MAPPING_VERSION",
    "MAX_RESOLUTION",
    "N_FEATURES",
    "N_PATCHES",
    "N_POINTS",
    "N_VARIABLES",
    "POINT_NAMES",
    "VARIABLE_NAMES",
    "Mesh",
    "NormalizationStats",
    "control_mapping",
    "decode",
    "decode_batch",
    "default_normalization",
    "face_count",
    "features",
    "features_batch",
    "features_from_points",
    "fit_normalization",
    "tessellate",
    "tessellate_points",
    "vertex_count",
]
