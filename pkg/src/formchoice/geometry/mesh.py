"""Display mesh generation.

The 26 control points are lofted into a watertight-enough body surface
built from bicubic Bezier patches.  The body is sampled on a structured
grid: 12 longitudinal stations (nose to tail, passing through every
centerline control point plus the two wheel arches) by 4 section levels
(center top, shoulder, waist, rocker).  Each grid cell becomes one
bicubic patch whose control net comes from a Catmull-Rom style Hermite
fit, so adjacent patches share boundary curves exactly.  The left half
mirrors the right across y = 0.

Tessellating at resolution r subdivides every patch edge r times, giving
(r + 1)^2 vertices and 2 r^2 triangles per patch.  Patches do not share
vertex indices; watertightness is geometric (coincident boundary
coordinates), which keeps the count formula exact and the wire format
trivial.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from .controls import decode

N_STATIONS = 12
N_LEVELS = 4
PATCHES_PER_HALF = (N_STATIONS - 1) * (N_LEVELS - 1)
N_PATCHES = 2 * PATCHES_PER_HALF

DEFAULT_RESOLUTION = 6
MAX_RESOLUTION = 64

_SHOULDER_DROP = 0.96
_WAIST_Z = 0.17
_ROCKER_Z = 0.07
_ROCKER_PULL = 0.94


def vertex_count(resolution: int) -> int:
    return N_PATCHES * (resolution + 1) ** 2


def face_count(resolution: int) -> int:
    return N_PATCHES * 2 * resolution**2


@dataclass
class Mesh:
    """Triangle mesh with per-patch provenance."""

    vertices: NDArray
    faces: NDArray
    patches: list[dict] = field(default_factory=list)

    def to_wire(self) -> dict:
        return {
            "vertices": [[float(c) for c in v] for v in self.vertices],
            "faces": [[int(i) for i in f] for f in self.faces],
            "patches": [dict(p) for p in self.patches],
        }

    @classmethod
    def from_wire(cls, doc: dict) -> "Mesh":
        return cls(
            vertices=np.asarray(doc["vertices"], dtype=float),
            faces=np.asarray(doc["faces"], dtype=np.int64),
            patches=[dict(p) for p in doc.get("patches", [])],
        )


def _lerp_widths(anchors_x: NDArray, anchors_w: NDArray, x: NDArray) -> NDArray:
    return np.interp(x, anchors_x, anchors_w)


def _station_table(points: NDArray) -> tuple[NDArray, NDArray, NDArray, NDArray]:
    """Per-station x, top-profile z, greenhouse half-width, body half-width."""
    px = points[:, 0]
    pz = points[:, 2]
    wy = np.abs(points[:, 1])

    arch_front_x = points[22, 0]
    arch_rear_x = points[24, 0]
    xs = np.array(
        [
            px[0], px[1], px[2], arch_front_x, px[3], px[4],
            px[5], px[6], px[7], arch_rear_x, px[8], px[9],
        ]
    )

    # Top profile through the centerline points; arch stations interpolate
    # between their longitudinal neighbors.
    spine_x = np.array([px[0], px[1], px[2], px[3], px[4], px[5], px[6], px[7], px[8], px[9]])
    spine_z = np.array([0.16, pz[1], pz[2], pz[3], pz[4], pz[5], pz[6], pz[7], pz[8], 0.16])
    z_top = np.interp(xs, spine_x, spine_z)

    # Greenhouse / top-surface half-width from the corner pairs.
    top_anchor_x = np.array([px[0], px[1], px[2] + 0.01, px[3], px[4] + 0.01, px[6], 0.96, px[9]])
    top_anchor_w = np.array([0.09, 0.12, wy[10], wy[12], wy[14], wy[16], wy[18], 0.10])
    w_top = _lerp_widths(top_anchor_x, top_anchor_w, xs)

    # Body half-width at the waist from hood corners, arches, waist, tail.
    body_anchor_x = np.array([px[0], px[1], px[2] + 0.01, arch_front_x, points[20, 0], arch_rear_x, 0.96, px[9]])
    body_anchor_w = np.array([0.11, 0.13, wy[10] + 0.02, wy[22], wy[20], wy[24], wy[18] + 0.02, 0.11])
    w_body = _lerp_widths(body_anchor_x, body_anchor_w, xs)

    return xs, z_top, w_top, w_body


def _half_grid(points: NDArray) -> NDArray:
    """Right-half section grid, shape (N_STATIONS, N_LEVELS, 3)."""
    xs, z_top, w_top, w_body = _station_table(points)
    grid = np.zeros((N_STATIONS, N_LEVELS, 3))
    grid[:, 0] = np.stack([xs, np.zeros_like(xs), z_top], axis=1)
    grid[:, 1] = np.stack([xs, w_top, z_top * _SHOULDER_DROP - 0.005], axis=1)
    grid[:, 2] = np.stack([xs, w_body, np.full_like(xs, _WAIST_Z)], axis=1)
    grid[:, 3] = np.stack([xs, w_body * _ROCKER_PULL, np.full_like(xs, _ROCKER_Z)], axis=1)
    return grid


def _grid_tangents(grid: NDArray) -> tuple[NDArray, NDArray, NDArray]:
    """Central-difference tangents and twists over a 2-D point grid."""
    du = np.empty_like(grid)
    du[1:-1] = 0.5 * (grid[2:] - grid[:-2])
    du[0] = grid[1] - grid[0]
    du[-1] = grid[-1] - grid[-2]

    dv = np.empty_like(grid)
    dv[:, 1:-1] = 0.5 * (grid[:, 2:] - grid[:, :-2])
    dv[:, 0] = grid[:, 1] - grid[:, 0]
    dv[:, -1] = grid[:, -1] - grid[:, -2]

    duv = np.empty_like(grid)
    duv[1:-1] = 0.5 * (dv[2:] - dv[:-2])
    duv[0] = dv[1] - dv[0]
    duv[-1] = dv[-1] - dv[-2]
    return du, dv, duv


def _bezier_nets(grid: NDArray) -> NDArray:
    """Bicubic Bezier control nets for every grid cell.

    Returns shape (cells_u, cells_v, 4, 4, 3).  Hermite corner data
    (position, tangents, twist) converts to the Bernstein basis, which
    makes shared cell edges carry identical control points.
    """
    du, dv, duv = _grid_tangents(grid)
    nu, nv = grid.shape[0] - 1, grid.shape[1] - 1
    nets = np.zeros((nu, nv, 4, 4, 3))

    p00, p10 = grid[:-1, :-1], grid[1:, :-1]
    p01, p11 = grid[:-1, 1:], grid[1:, 1:]
    u00, u10, u01, u11 = du[:-1, :-1], du[1:, :-1], du[:-1, 1:], du[1:, 1:]
    v00, v10, v01, v11 = dv[:-1, :-1], dv[1:, :-1], dv[:-1, 1:], dv[1:, 1:]
    w00, w10, w01, w11 = duv[:-1, :-1], duv[1:, :-1], duv[:-1, 1:], duv[1:, 1:]

    nets[:, :, 0, 0] = p00
    nets[:, :, 3, 0] = p10
    nets[:, :, 0, 3] = p01
    nets[:, :, 3, 3] = p11
    nets[:, :, 1, 0] = p00 + u00 / 3
    nets[:, :, 2, 0] = p10 - u10 / 3
    nets[:, :, 1, 3] = p01 + u01 / 3
    nets[:, :, 2, 3] = p11 - u11 / 3
    nets[:, :, 0, 1] = p00 + v00 / 3
    nets[:, :, 0, 2] = p01 - v01 / 3
    nets[:, :, 3, 1] = p10 + v10 / 3
    nets[:, :, 3, 2] = p11 - v11 / 3
    nets[:, :, 1, 1] = p00 + u00 / 3 + v00 / 3 + w00 / 9
    nets[:, :, 2, 1] = p10 - u10 / 3 + v10 / 3 - w10 / 9
    nets[:, :, 1, 2] = p01 + u01 / 3 - v01 / 3 - w01 / 9
    nets[:, :, 2, 2] = p11 - u11 / 3 - v11 / 3 + w11 / 9
    return nets


def _bernstein(resolution: int) -> NDArray:
    t = np.linspace(0.0, 1.0, resolution + 1)[:, None]
    return np.hstack([(1 - t) ** 3, 3 * t * (1 - t) ** 2, 3 * t**2 * (1 - t), t**3])


def _patch_faces(resolution: int, offset: int) -> NDArray:
    r = resolution
    idx = np.arange((r + 1) * (r + 1)).reshape(r + 1, r + 1) + offset
    a = idx[:-1, :-1].ravel()
    b = idx[1:, :-1].ravel()
    c = idx[1:, 1:].ravel()
    d = idx[:-1, 1:].ravel()
    return np.concatenate([np.stack([a, b, c], 1), np.stack([a, c, d], 1)])


def tessellate(design: NDArray, resolution: int = DEFAULT_RESOLUTION) -> Mesh:
    """Build the display mesh for a design vector.

    Parameters
    ----------
    design : (19,) array
        Design variables in [0, 1].
    resolution : int
        Subdivisions per patch edge; must be in [1, MAX_RESOLUTION].
    """
    if not 1 <= resolution <= MAX_RESOLUTION:
        raise ValueError(f"resolution must be in [1, {MAX_RESOLUTION}]")
    points = decode(design)
    return tessellate_points(points, resolution)


def tessellate_points(points: NDArray, resolution: int = DEFAULT_RESOLUTION) -> Mesh:
    """Build the display mesh from an explicit (26, 3) control point set."""
    if not 1 <= resolution <= MAX_RESOLUTION:
        raise ValueError(f"resolution must be in [1, {MAX_RESOLUTION}]")
    right = _half_grid(np.asarray(points, dtype=float))
    left = right.copy()
    left[:, :, 1] *= -1.0

    bern = _bernstein(resolution)
    verts: list[NDArray] = []
    faces: list[NDArray] = []
    patches: list[dict] = []
    offset = 0
    for side, grid in (("right", right), ("left", left)):
        nets = _bezier_nets(grid)
        for i in range(nets.shape[0]):
            for j in range(nets.shape[1]):
                pts = np.einsum("ua,vb,abk->uvk", bern, bern, nets[i, j])
                n_v = (resolution + 1) ** 2
                n_f = 2 * resolution**2
                verts.append(pts.reshape(n_v, 3))
                faces.append(_patch_faces(resolution, offset))
                patches.append(
                    {
                        "name": f"{side}_s{i}_l{j}",
                        "vertex_start": offset,
                        "vertex_count": n_v,
                        "face_start": sum(len(f) for f in faces) - n_f,
                        "face_count": n_f,
                    }
                )
                offset += n_v
    return Mesh(
        vertices=np.concatenate(verts),
        faces=np.concatenate(faces).astype(np.int64),
        patches=patches,
    )
