import numpy as np
import pytest

import fundsol as fs
from fundsol.errors import MaterialValidationError, UnknownMaterialError
from fundsol.materials import (
    MaterialConstants,
    full_to_voigt,
    load_material_json,
    rotation_from_angles,
    save_material_json,
    voigt_to_full,
    format_material,
)

ALL_BUILTINS = ["Laplace", "Cu", "Au", "Ni", "PZT-4", "PVDF", "M1", "M2"]


def rot_z(deg):
    a = np.radians(deg)
    return np.array(
        [[np.cos(a), -np.sin(a), 0], [np.sin(a), np.cos(a), 0], [0, 0, 1]]
    )


class TestBuiltins:
    def test_table_values(self):
        cu = fs.builtin("Cu")
        assert cu.elastic[0, 0] == 168e9
        assert cu.elastic[0, 1] == 121e9
        assert cu.elastic[3, 3] == 75e9
        ni = fs.builtin("Ni")
        assert ni.elastic[0, 0] == 251e9
        assert ni.elastic[3, 3] == 124e9
        m2 = fs.builtin("M2")
        assert m2.lam[0, 0] == 0.6
        assert m2.q[2, 2] == 699.7
        pvdf = fs.builtin("PVDF")
        assert pvdf.e[2, 0] == 0.032  # e_311
        pzt = fs.builtin("PZT-4")
        assert pzt.eps[0, 0] == pytest.approx(6.461e-9)
        assert pzt.elastic[5, 5] == pytest.approx((139.0 - 77.8) / 2 * 1e9)

    @pytest.mark.parametrize("name", ALL_BUILTINS)
    def test_all_builtins_valid(self, name):
        assert fs.validate(fs.builtin(name)) == []

    def test_iso_elastic_parsed_name(self):
        mat = fs.builtin("IsoElastic(2.5,0.25)")
        # lam = 2 mu nu / (1 - 2 nu) = 2.5; c11 = lam + 2 mu
        assert mat.elastic[0, 0] == pytest.approx(7.5)
        assert mat.elastic[3, 3] == pytest.approx(2.5)

    def test_unknown_name_lists_available(self):
        with pytest.raises(UnknownMaterialError, match="Cu"):
            fs.builtin("Unobtainium")


class TestValidate:
    def test_asymmetric_voigt_names_the_pair(self):
        cu = fs.builtin("Cu")
        el = np.array(cu.elastic)
        el[0, 1] += 1e7  # C12 != C21
        bad = MaterialConstants("Cu-bad", 3, el)
        violations = fs.validate(bad)
        assert len(violations) == 1
        assert "C[1,2]" in violations[0] and "C[2,1]" in violations[0]

    def test_not_positive_definite(self):
        el = np.array(fs.builtin("Cu").elastic)
        el -= 2 * np.max(el) * np.eye(6)
        violations = fs.validate(MaterialConstants("bad", 3, el))
        assert any("positive definite" in v for v in violations)

    def test_missing_coupling_block(self):
        violations = fs.validate(
            MaterialConstants("no-eps", 4, fs.builtin("Cu").elastic, e=np.zeros((3, 6)))
        )
        assert any("'eps'" in v for v in violations)

    def test_extend_raises_on_invalid(self):
        el = np.array(fs.builtin("Cu").elastic)
        el[0, 1] += 1e7
        with pytest.raises(MaterialValidationError):
            fs.extend(MaterialConstants("bad", 3, el))


class TestExtend:
    def test_cu_entries(self, ext_cu):
        assert ext_cu.c[0, 0, 0, 0] == 168e9
        assert ext_cu.c[1, 0, 0, 1] == 75e9  # c_1212 in tensor form

    def test_pzt4_dielectric_sign(self):
        ext = fs.extend(fs.builtin("PZT-4"))
        assert ext.c[0, 3, 3, 0] == pytest.approx(-6.461e-9)

    def test_laplace_is_identity(self, ext_laplace):
        expect = np.zeros((3, 1, 1, 3))
        for k in range(3):
            expect[k, 0, 0, k] = 1.0
        assert np.array_equal(ext_laplace.c, expect)

    @pytest.mark.parametrize("name", ALL_BUILTINS)
    def test_major_symmetry(self, name):
        ext = fs.extend(fs.builtin(name))
        swapped = np.transpose(ext.c, (3, 2, 1, 0))  # c[l, K, J, i]
        assert np.max(np.abs(ext.c - swapped)) == 0.0

    def test_m2_coupling_blocks(self):
        ext = fs.extend(fs.builtin("M2"))
        # c[i, j, 5, l] = q_{l i j}: q_333 sits at i=j=2, l=2
        assert ext.c[2, 2, 4, 2] == 699.7
        assert ext.c[0, 3, 4, 0] == -0.6  # -lambda_11
        assert ext.c[2, 4, 4, 2] == pytest.approx(-10.0e-6, rel=1e-15)  # -kappa_33

    def test_hash_distinguishes_materials(self, ext_cu, ext_m2):
        assert ext_cu.material_hash != ext_m2.material_hash
        assert ext_cu.material_hash == fs.extend(fs.builtin("Cu")).material_hash


class TestVoigt:
    def test_round_trip_bijection(self):
        rng = np.random.default_rng(0)
        v = rng.normal(size=(6, 6))
        v = 0.5 * (v + v.T)
        assert np.array_equal(full_to_voigt(voigt_to_full(v)), v)

    def test_full_has_minor_symmetries(self):
        c = voigt_to_full(fs.builtin("Cu").elastic)
        assert np.array_equal(c, np.transpose(c, (1, 0, 2, 3)))
        assert np.array_equal(c, np.transpose(c, (0, 1, 3, 2)))
        assert np.array_equal(c, np.transpose(c, (2, 3, 0, 1)))


class TestRotate:
    def test_identity(self):
        cu = fs.builtin("Cu")
        rot = fs.rotate(cu, np.eye(3))
        assert np.allclose(rot.elastic, cu.elastic, rtol=0, atol=0)

    def test_isotropic_invariant(self):
        iso = fs.iso_elastic(1.0, 0.25)  # lam = mu = 1
        R = rotation_from_angles(37.0, 61.0)
        rot = fs.rotate(iso, R)
        assert np.allclose(rot.elastic, iso.elastic, rtol=1e-13, atol=1e-13)

    def test_cubic_z90_invariant_against_brute_force(self):
        cu = fs.builtin("Cu")
        R = rot_z(90.0)
        # brute-force index rotation as the oracle
        c = voigt_to_full(cu.elastic)
        brute = np.einsum("ia,jb,kc,ld,abcd->ijkl", R, R, R, R, c)
        assert np.allclose(full_to_voigt(brute), cu.elastic, rtol=1e-12, atol=1e-3)
        rot = fs.rotate(cu, R)
        assert np.allclose(rot.elastic, cu.elastic, rtol=1e-12, atol=1e-3)

    def test_composition(self):
        m2 = fs.builtin("M2")
        R1 = rotation_from_angles(60.0, 30.0)
        R2 = rot_z(45.0)
        a = fs.rotate(fs.rotate(m2, R1), R2)
        b = fs.rotate(m2, R2 @ R1)
        for attr in ("elastic", "e", "q", "eps", "lam", "kappa"):
            va, vb = getattr(a, attr), getattr(b, attr)
            scale = np.max(np.abs(vb)) or 1.0
            assert np.max(np.abs(va - vb)) <= 1e-10 * scale

    def test_rejects_non_orthogonal(self):
        with pytest.raises(ValueError):
            fs.rotate(fs.builtin("Cu"), np.eye(3) * 1.001)

    def test_rejects_improper(self):
        with pytest.raises(ValueError):
            fs.rotate(fs.builtin("Cu"), -np.eye(3))

    def test_laplace_rotation(self):
        lap = fs.builtin("Laplace")
        rot = fs.rotate(lap, rotation_from_angles(10.0, 20.0))
        assert np.allclose(rot.elastic[:3, :3], np.eye(3), rtol=0, atol=1e-14)


class TestZenerFamily:
    def test_c44_values(self):
        assert fs.zener_family(1.0).elastic[3, 3] == pytest.approx(23.5e9)
        assert fs.zener_family(50.0).elastic[3, 3] == pytest.approx(1175e9)

    def test_invalid_ratio(self):
        with pytest.raises(ValueError):
            fs.zener_family(0.0)

    def test_unit_ratio_is_isotropic(self):
        # symbol eigenvalues must be direction-independent
        ext = fs.extend(fs.zener_family(1.0))
        rng = np.random.default_rng(2)
        ref = np.sort(np.linalg.eigvalsh(fs.symbol_matrix(ext, [0, 0, 1.0])))
        for _ in range(25):
            xi = rng.normal(size=3)
            xi /= np.linalg.norm(xi)
            eig = np.sort(np.linalg.eigvalsh(fs.symbol_matrix(ext, xi)))
            assert np.max(np.abs(eig - ref)) <= 1e-10 * ref[-1]


class TestMaterialJson:
    def test_round_trip(self, tmp_path):
        for name in ("Cu", "PZT-4", "M2", "Laplace"):
            mat = fs.builtin(name)
            path = tmp_path / f"{name}.json"
            save_material_json(mat, path)
            back = load_material_json(path)
            assert back.field_dim == mat.field_dim
            assert np.allclose(back.elastic, mat.elastic, rtol=1e-15, atol=0)
            for attr in ("e", "q", "eps", "lam", "kappa"):
                a, b = getattr(mat, attr), getattr(back, attr)
                assert (a is None) == (b is None)
                if a is not None:
                    assert np.allclose(a, b, rtol=1e-15, atol=0)

    def test_missing_field_raises(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"name": "x"}')
        with pytest.raises(ValueError, match="field_dim"):
            load_material_json(path)


def test_format_material_shows_table_values():
    text = format_material(fs.builtin("Cu"))
    assert "168" in text and "elastic constants" in text
    text = format_material(fs.builtin("M2"))
    assert "piezomagnetic" in text and "699.7" in text
