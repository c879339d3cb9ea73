import json
import math
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qgenfun.errors import BlochOutOfBall, ConfigInvalid, GapClosure, GaugePole, WrongDimension
from qgenfun.matcore import validate_density
from qgenfun.states import (
    PAULI,
    SIGMA_X,
    StateFamily,
    bloch_from_rho,
    build_family,
    canonical_bloch,
    dirac_ground_ket,
    ket_density,
    load_model_config,
    parse_model_config,
    random_bloch_family,
    rho_from_bloch,
    spin_bloch,
    ssh_dvector,
)

I2 = np.eye(2)
CONFIGS = Path(__file__).resolve().parents[1] / "configs"


class TestBloch:
    def test_origin(self):
        np.testing.assert_allclose(rho_from_bloch([0, 0, 0]).mat, I2 / 2)

    def test_north_pole(self):
        np.testing.assert_allclose(rho_from_bloch([0, 0, 1]).mat, np.diag([1, 0]))

    def test_half(self):
        np.testing.assert_allclose(rho_from_bloch([0, 0, 0.5]).mat, np.diag([0.75, 0.25]))

    def test_clamp_and_reject(self):
        rho_from_bloch([0, 0, 1 + 1e-13])
        with pytest.raises(BlochOutOfBall):
            rho_from_bloch([0, 0, 1 + 1e-6])

    def test_inverse_examples(self):
        np.testing.assert_allclose(bloch_from_rho(I2 / 2), [0, 0, 0], atol=1e-16)
        np.testing.assert_allclose(bloch_from_rho(np.diag([0.75, 0.25])), [0, 0, 0.5])
        np.testing.assert_allclose(bloch_from_rho(0.5 * (I2 + 0.3 * SIGMA_X)), [0.3, 0, 0])

    def test_wrong_dimension(self):
        with pytest.raises(WrongDimension):
            bloch_from_rho(np.eye(3) / 3)

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.floats(-1, 1), min_size=3, max_size=3))
    def test_round_trip(self, v):
        r = np.array(v)
        if np.linalg.norm(r) > 1:
            r = r / np.linalg.norm(r)
        rho = rho_from_bloch(r).mat
        np.testing.assert_allclose(rho_from_bloch(bloch_from_rho(rho)).mat, rho, atol=1e-12)
        lam = np.linalg.eigvalsh(rho)
        n = np.linalg.norm(r)
        np.testing.assert_allclose(lam, [(1 - n) / 2, (1 + n) / 2], atol=1e-12)


class TestCanonical:
    def test_low_temperature(self):
        np.testing.assert_allclose(canonical_bloch([0, 0, 1], 50.0), [0, 0, -1], atol=1e-12)

    def test_high_temperature(self):
        assert abs(np.linalg.norm(canonical_bloch([0, 0, 1], 0.001)) - 0.001) < 1e-9

    def test_ssh_zone_edge(self):
        np.testing.assert_allclose(canonical_bloch([0.4, 0, 0], 2.0),
                                   [-0.66403677026784899, 0, 0], atol=1e-15)

    def test_gap(self):
        with pytest.raises(GapClosure):
            canonical_bloch([0, 0, 0], 1.0)

    @settings(max_examples=50, deadline=None)
    @given(st.floats(1e-3, 5), st.floats(-3, 3), st.floats(-3, 3), st.floats(0.1, 3))
    def test_antiparallel(self, beta, a, b, c):
        d = np.array([a, b, c])
        r = canonical_bloch(d, beta)
        dn = np.linalg.norm(d)
        assert abs(np.linalg.norm(r) - math.tanh(beta * dn)) < 1e-12
        assert r @ d <= 0

    def test_high_t_limit(self):
        assert np.linalg.norm(canonical_bloch([0.3, 0.4, 0], 1e-6 / 0.5)) <= 1e-6


class TestSSH:
    def test_examples(self):
        np.testing.assert_allclose(ssh_dvector(0.0, 0.2), [2, 0, 0])
        np.testing.assert_allclose(ssh_dvector(math.pi, 0.2), [0.4, 0, 0], atol=1e-15)
        d = ssh_dvector(math.pi / 2, 0.0)
        np.testing.assert_allclose(d, [1, 1, 0], atol=1e-15)
        assert abs(np.linalg.norm(d) - math.sqrt(2)) < 1e-15

    def test_gap_closes_for_uniform_chain(self):
        with pytest.raises(GapClosure):
            ssh_dvector(math.pi, 0.0)


class TestDiracKet:
    def test_south_pole(self):
        np.testing.assert_allclose(dirac_ground_ket([0, 0, -1]), [-1, 0], atol=1e-15)

    def test_equator(self):
        np.testing.assert_allclose(dirac_ground_ket([1, 0, 0]), np.array([-1, 1]) / math.sqrt(2))

    def test_pole(self):
        with pytest.raises(GaugePole):
            dirac_ground_ket([0, 0, 1])
        with pytest.raises(GaugePole):
            dirac_ground_ket([0, 0, -1], chart="north")

    @settings(max_examples=100, deadline=None)
    @given(st.floats(-2, 2), st.floats(-2, 2), st.floats(-2, 2), st.sampled_from(["south", "north"]))
    def test_ground_state(self, a, b, c, chart):
        d = np.array([a, b, c])
        dn = np.linalg.norm(d)
        if dn < 1e-3 or (chart == "south" and c / dn > 0.999) or (chart == "north" and c / dn < -0.999):
            return
        psi = dirac_ground_ket(d, chart=chart)
        h = sum(di * s for di, s in zip(d, PAULI))
        assert abs(np.vdot(psi, psi) - 1) < 1e-12
        assert np.linalg.norm(h @ psi + dn * psi) < 1e-10


def test_spin_bloch():
    np.testing.assert_allclose(spin_bloch(0), [0, 0, 0])
    np.testing.assert_allclose(spin_bloch(1), [0, 0, 0.76159415595576489])
    np.testing.assert_allclose(spin_bloch(-1), -spin_bloch(1))


class TestBuild:
    def test_spin(self, spin):
        assert spin.param_dim == 1 and spin.dim == 2
        assert spin.has_bloch and spin.has_dvec and not spin.is_pure

    def test_ssh(self, ssh05):
        assert ssh05.param_dim == 1
        for k in np.linspace(-3, 3, 7):
            np.testing.assert_allclose(ssh05.bloch(k), canonical_bloch(ssh_dvector(k, 0.2), 2.0))

    def test_ssh_ground(self, ssh0):
        assert ssh0.is_pure and ssh0.has_bloch and ssh0.has_dvec and ssh0.analytic_gauge

    def test_dirac(self, dirac_p, dirac_m):
        for fam in (dirac_p, dirac_m):
            assert fam.is_pure and fam.param_dim == 2
            for x in ([0, 0], [0.3, -0.7], [2, 1]):
                psi = fam.ket(x)
                d = fam.dvec(x)
                h = sum(di * s for di, s in zip(d, PAULI))
                assert np.linalg.norm(h @ psi + np.linalg.norm(d) * psi) < 1e-10

    @pytest.mark.parametrize("cfg", [
        {"model": "spin"},
        {"model": "ssh", "delta_t": 0.2, "temperature": 0.5},
        {"model": "ssh", "delta_t": -0.4, "temperature": 0.0},
        {"model": "dirac2d", "mass": 1.0},
        {"model": "dirac2d", "mass": -0.5, "temperature": 0.3},
    ])
    def test_valid_densities(self, cfg):
        fam = build_family(cfg)
        rng = np.random.default_rng(11)
        for _ in range(100):
            x = rng.uniform(-3, 3, size=fam.param_dim)
            rho = fam.rho(x)
            validate_density(rho)
            if fam.has_bloch:
                np.testing.assert_allclose(rho, rho_from_bloch(fam.bloch(x)).mat, atol=1e-12)
            if fam.is_pure:
                np.testing.assert_allclose(rho, ket_density(fam.ket(x)), atol=1e-12)
                np.testing.assert_allclose(np.linalg.eigvalsh(rho), [0, 1], atol=1e-12)

    def test_low_temperature_limit(self):
        cold = build_family({"model": "ssh", "delta_t": 0.2, "temperature": 0.4 / 41})
        for k in np.linspace(-3, 3, 13):
            d = ssh_dvector(k, 0.2)
            psi = dirac_ground_ket(d)
            assert np.linalg.norm(cold.rho(k) - ket_density(psi)) <= 1e-10


class TestConfig:
    def test_defaults(self):
        cfg = parse_model_config({"model": "ssh"})
        assert cfg.params == {"delta_t": 0.2, "temperature": 0.0, "hopping": 1.0}

    @pytest.mark.parametrize("bad, needle", [
        ({"model": "ising"}, "model"),
        ({"model": "ssh", "delta_t": 0.0}, "delta_t"),
        ({"model": "ssh", "temperature": -1}, "temperature"),
        ({"model": "ssh", "hopping": 0}, "hopping"),
        ({"model": "spin", "mass": 1}, "mass"),
        ({"model": "dirac2d", "mass": "big"}, "mass"),
        ({"model": "custom", "target": "bloch", "param_dim": 1, "components": [[]]}, "components"),
        ({"model": "custom", "target": "blob", "param_dim": 1, "components": []}, "target"),
    ])
    def test_rejections(self, bad, needle):
        with pytest.raises(ConfigInvalid) as exc:
            parse_model_config(bad)
        assert needle in str(exc.value)

    def test_multiple_problems_listed(self):
        with pytest.raises(ConfigInvalid) as exc:
            parse_model_config({"model": "ssh", "delta_t": 0, "temperature": -2})
        assert "delta_t" in str(exc.value) and "temperature" in str(exc.value)

    def test_load_from_path_and_string(self, tmp_path):
        p = tmp_path / "m.json"
        p.write_text(json.dumps({"model": "dirac2d", "mass": -1}))
        assert load_model_config(str(p)).params["mass"] == -1
        assert load_model_config('{"model": "spin"}').model == "spin"
        with pytest.raises(ConfigInvalid):
            load_model_config("{not json")

    def test_custom_bloch(self):
        cfg = {"model": "custom", "target": "bloch", "param_dim": 1,
               "components": [[{"coef": 0.5, "atoms": [["sin", 0, 1.0, 0.0]]}],
                              [],
                              [{"coef": 0.5, "atoms": [["cos", 0, 1.0, 0.0]]}]]}
        fam = build_family(cfg)
        np.testing.assert_allclose(fam.bloch(0.3), [0.5 * math.sin(0.3), 0, 0.5 * math.cos(0.3)])

    def test_custom_dvec_thermal(self):
        cfg = {"model": "custom", "target": "dvec", "param_dim": 2, "temperature": 1.0,
               "components": [[{"coef": 1.0, "atoms": [["poly", 0, 1]]}],
                              [{"coef": 1.0, "atoms": [["poly", 1, 1]]}],
                              [{"coef": 1.0}]]}
        fam = build_family(cfg)
        np.testing.assert_allclose(fam.bloch([0, 0]), [0, 0, -math.tanh(1)])

    def test_custom_real_ket(self):
        cfg = json.loads((CONFIGS / "real_ket.json").read_text())
        fam = build_family(cfg)
        assert fam.real_ket and fam.is_pure
        np.testing.assert_allclose(fam.ket(0.4), [math.cos(0.4), math.sin(0.4)])


def test_random_family_inside_ball():
    rng = np.random.default_rng(3)
    for _ in range(10):
        fam = random_bloch_family(rng, param_dim=2, rmax=0.9)
        for x in rng.uniform(-5, 5, size=(20, 2)):
            assert np.linalg.norm(fam.bloch(x)) < 0.9


def test_from_ket_normalizes():
    fam = StateFamily.from_ket(lambda x: np.array([1.0, x[0]]), 1)
    assert abs(np.linalg.norm(fam.ket(2.0)) - 1) < 1e-15
