import json

import numpy as np
import pytest

from formchoice import geometry as g


MID = np.full(g.N_VARIABLES, 0.5)


class TestDecode:
    def test_shapes_and_determinism(self):
        pts = g.decode(MID)
        assert pts.shape == (26, 3)
        assert np.array_equal(pts, g.decode(MID))

    def test_mid_range_golden(self):
        pts = g.decode(MID)
        expected = np.array(
            [
                [0.10, 0.0, 0.29],       # hood_front_mid
                [0.36, 0.0, 0.36],       # hood_windshield_mid
                [0.70, 0.0, 0.45],       # roof_backlight_mid
                [0.97, 0.0, 0.26],       # tail_top_mid
                [0.11, -0.17, 0.27],     # hood_front_corner_left
                [0.5725, -0.20, 0.17],   # waist_left
                [0.185, -0.195, 0.15],   # front_arch_top_left
                [0.84, -0.1875, 0.15],   # rear_arch_top_left
            ]
        )
        assert np.allclose(pts[[2, 3, 6, 8, 10, 20, 22, 24]], expected, atol=1e-12)

    def test_lateral_symmetry(self):
        rng = np.random.default_rng(7)
        pts = g.decode_batch(rng.random((20, 19)))
        # left/right pairs occupy consecutive indices 10..25
        left = pts[:, 10:26:2]
        right = pts[:, 11:26:2]
        mirrored = left.copy()
        mirrored[:, :, 1] *= -1
        assert np.allclose(mirrored, right, atol=1e-12)

    def test_unit_bounding_box(self):
        rng = np.random.default_rng(11)
        pts = g.decode_batch(rng.random((200, 19)))
        extent = pts.max(axis=(0, 1)) - pts.min(axis=(0, 1))
        assert (extent <= 1.0 + 1e-12).all()

    def test_single_variable_locality(self):
        base = g.decode(MID)
        alt = MID.copy()
        alt[7] = 0.9  # roof/backlight join elevation
        moved = np.where(np.abs(g.decode(alt) - base).sum(axis=1) > 1e-12)[0]
        names = {g.POINT_NAMES[i] for i in moved}
        assert names == {
            "roof_backlight_mid",
            "roof_backlight_corner_left",
            "roof_backlight_corner_right",
        }

    def test_out_of_range_rejected(self):
        bad = MID.copy()
        bad[3] = 1.2
        with pytest.raises(ValueError):
            g.decode(bad)
        with pytest.raises(ValueError):
            g.decode(np.full(18, 0.5))
        nan = MID.copy()
        nan[0] = np.nan
        with pytest.raises(ValueError):
            g.decode(nan)

    def test_mapping_document(self):
        doc = g.control_mapping()
        assert doc["version"] == g.MAPPING_VERSION
        assert len(doc["variables"]) == 19
        assert len(doc["points"]) == 26
        driven = {
            rule["var"]
            for p in doc["points"]
            for rule in (p["x"], p["y"], p["z"])
            if rule["rule"] == "affine"
        }
        # every design variable drives at least one coordinate
        assert driven == set(range(19))


class TestFeatures:
    def test_count_and_order(self):
        f = g.features(MID)
        assert f.shape == (325,)
        pts = g.decode(MID)
        # canonical order starts with pairs (0,1), (0,2), ...
        assert np.isclose(f[0], np.linalg.norm(pts[0] - pts[1]))
        assert np.isclose(f[1], np.linalg.norm(pts[0] - pts[2]))
        assert np.isclose(f[324], np.linalg.norm(pts[24] - pts[25]))

    def test_mid_range_golden(self):
        f = g.features(MID)
        head = [0.1414213562373095, 0.2147091055358389, 0.4440720662234903,
                0.6140032573203501, 0.7156116265125938]
        assert np.allclose(f[:5], head, atol=1e-12)
        assert np.isclose(f.sum(), 154.35798818953097, atol=1e-9)

    def test_identical_designs_identical_features(self):
        rng = np.random.default_rng(3)
        d = rng.random(19)
        assert np.array_equal(g.features(d), g.features(d.copy()))

    def test_uniform_scaling(self):
        rng = np.random.default_rng(5)
        pts = g.decode(rng.random(19))
        for k in (0.5, 2.0, 7.3):
            assert np.allclose(g.features_from_points(k * pts), k * g.features_from_points(pts))

    def test_nonnegative(self):
        rng = np.random.default_rng(9)
        f = g.features_batch(rng.random((50, 19)))
        assert (f >= 0).all()


class TestNormalization:
    def test_transform_and_inverse_consistency(self):
        stats = g.default_normalization()
        rng = np.random.default_rng(13)
        f = g.features_batch(rng.random((100, 19)))
        z = stats.transform(f)
        assert z.shape == f.shape
        back = z * stats.scale + stats.mean
        assert np.allclose(back, f, atol=1e-12)

    def test_frozen_stats_reproducible(self):
        stats = g.fit_normalization(sample_size=g.DEFAULT_NORMALIZATION_SAMPLE,
                                    seed=g.DEFAULT_NORMALIZATION_SEED)
        shipped = g.default_normalization()
        assert np.allclose(stats.mean, shipped.mean, atol=1e-12)
        assert np.allclose(stats.scale, shipped.scale, atol=1e-12)

    def test_constant_features_unit_scale(self):
        shipped = g.default_normalization()
        assert int((shipped.scale == 1.0).sum()) == 3
        z = shipped.transform(g.features(MID))
        assert np.isfinite(z).all()

    def test_sample_standardization(self):
        stats = g.fit_normalization(sample_size=500, seed=42)
        rng = np.random.default_rng(42)
        f = g.features_batch(rng.random((500, 19)))
        z = stats.transform(f)
        varying = stats.scale != 1.0
        assert np.allclose(z[:, varying].mean(axis=0), 0.0, atol=1e-9)
        assert np.allclose(z[:, varying].std(axis=0), 1.0, atol=1e-9)

    def test_round_trip_serialization(self):
        stats = g.fit_normalization(sample_size=100, seed=1)
        clone = g.NormalizationStats.from_dict(json.loads(json.dumps(stats.to_dict())))
        assert np.array_equal(clone.mean, stats.mean)
        assert np.array_equal(clone.scale, stats.scale)


class TestMesh:
    def test_count_formula(self):
        for r in (1, 2, 5):
            m = g.tessellate(MID, resolution=r)
            assert m.vertices.shape == (g.vertex_count(r), 3)
            assert m.faces.shape == (g.face_count(r), 3)

    def test_resolution_scaling(self):
        assert g.face_count(4) == 4 * g.face_count(2)

    def test_face_indices_valid(self):
        m = g.tessellate(MID, resolution=3)
        assert m.faces.min() >= 0
        assert m.faces.max() < len(m.vertices)

    def test_no_degenerate_faces(self):
        m = g.tessellate(MID, resolution=g.DEFAULT_RESOLUTION)
        tri = m.vertices[m.faces]
        area = 0.5 * np.linalg.norm(
            np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0]), axis=1
        )
        assert area.min() > 1e-9

    def test_mirror_symmetry(self):
        rng = np.random.default_rng(21)
        m = g.tessellate(rng.random(19), resolution=2)
        v = np.round(m.vertices, 9)
        refl = v.copy()
        refl[:, 1] *= -1
        key = lambda a: np.lexsort((a[:, 2], a[:, 1], a[:, 0]))
        assert np.allclose(v[key(v)], refl[key(refl)], atol=1e-6)

    def test_adjacent_patches_share_edges(self):
        # patches in one longitudinal strip must join coordinates exactly
        m = g.tessellate(MID, resolution=4)
        by_name = {p["name"]: p for p in m.patches}
        a = by_name["right_s0_l0"]
        b = by_name["right_s1_l0"]
        va = m.vertices[a["vertex_start"]: a["vertex_start"] + a["vertex_count"]].reshape(5, 5, 3)
        vb = m.vertices[b["vertex_start"]: b["vertex_start"] + b["vertex_count"]].reshape(5, 5, 3)
        assert np.allclose(va[4], vb[0], atol=1e-6)

    def test_wire_round_trip(self):
        m = g.tessellate(MID, resolution=2)
        doc = m.to_wire()
        assert set(doc) >= {"vertices", "faces"}
        clone = g.Mesh.from_wire(json.loads(json.dumps(doc)))
        assert np.allclose(clone.vertices, m.vertices)
        assert np.array_equal(clone.faces, m.faces)
        assert clone.faces.min() == 0

    def test_bad_resolution(self):
        with pytest.raises(ValueError):
            g.tessellate(MID, resolution=0)
        with pytest.raises(ValueError):
            g.tessellate(MID, resolution=g.MAX_RESOLUTION + 1)
