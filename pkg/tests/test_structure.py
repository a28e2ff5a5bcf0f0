import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from conftest import MAIN_FIXTURES, config_of
from ergodia import CylFn, DepthError
from ergodia import structure as sx
from ergodia.fixtures import load_fixture, random_config, model_from_config


@pytest.mark.parametrize("name", MAIN_FIXTURES + ("bijective",))
@pytest.mark.parametrize("n", [0, 1, 2, 3, 4, 5])
def test_sigma_n_classes_oracle(name, n):
    model, _ = load_fixture(name)
    labels = sx.sigma_n_classes(model, n)
    expect = oracles.sigma_n_class_count(config_of(name)["admissible"], model.depth, n)
    assert labels.max() + 1 == expect


@pytest.mark.parametrize("name, dims", [
    ("fix-a", [8, 4, 2, 1]),
    ("fix-c", [5, 3, 2, 1]),
    ("bijective", [2, 2, 2, 2]),
])
def test_exactness_dims(name, dims):
    model, _ = load_fixture(name)
    probe = sx.exactness_probe(model)
    assert probe["dims"] == dims
    assert probe["exact"] is (dims[-1] == 1)


@pytest.mark.parametrize("name, h_inf, layers", [
    ("fix-a", 1, [4, 2, 1]),
    ("fix-c", 1, [2, 1, 1]),
    ("bijective", 2, [0, 0, 0]),
])
def test_wold_frozen(name, h_inf, layers):
    model, mu = load_fixture(name)
    rep = sx.wold(model, mu, tol=1e-10)
    assert rep.dim_H_infinity == h_inf
    assert rep.dim_shift_layers == layers
    assert rep.complete
    for c in rep.checks(1e-10):
        assert c.passed, c.name


def test_wold_unitary_part_is_constants():
    model, mu = load_fixture("fix-a")
    rep = sx.wold(model, mu)
    v = rep.H_infinity[:, 0]
    np.testing.assert_allclose(np.abs(v), 1.0, atol=1e-12)


def test_wold_rejects_noninvariant(fix_b):
    with pytest.raises(ValueError):
        sx.wold(*fix_b)


def test_wold_json(fix_a):
    js = sx.wold(*fix_a).to_json()
    assert js["dim_shift_layers"] == [4, 2, 1] and js["complete"]


@pytest.mark.parametrize("name, dim", [("fix-a", 1), ("fix-b", 1), ("fix-c", 1), ("bijective", 2)])
def test_ergodicity_probe(name, dim):
    model, mu = load_fixture(name)
    r = sx.ergodicity_probe(model, mu)
    assert r["fixed_dim"] == r["perron_dim"] == dim
    assert r["ergodic"] is (dim == 1)


def test_recurrence_sums_frozen(fix_b):
    model, mu = fix_b
    sums = sx.recurrence_partial_sums(model, mu, CylFn.constant(model), 1)
    # 1 + ω with ω(x) = 1/ρ(x₂)
    np.testing.assert_allclose(sums[1].values_at(2).real, [5 / 3, 7 / 3, 5 / 3, 7 / 3], atol=1e-15)


def test_recurrence_rejects_negative(fix_a):
    model, mu = fix_a
    with pytest.raises(ValueError):
        sx.recurrence_partial_sums(model, mu, CylFn.constant(model, -1.0), 1)
    with pytest.raises(DepthError):
        sx.recurrence_partial_sums(model, mu, CylFn.constant(model).promote(2), 2)


@pytest.mark.parametrize("name, n_states", [("fix-a", 32), ("fix-c", 13)])
def test_solenoid_invariant(name, n_states):
    model, mu = load_fixture(name)
    sol = sx.solenoid_build(model, mu, 2, tol=1e-12)
    assert sol.n_states == n_states
    for c in sol.checks:
        assert c.expect == "le" and c.passed, c.name
    assert np.sum(sol.prob) == pytest.approx(1.0, abs=1e-14)


def test_solenoid_noninvariant(fix_b):
    sol = sx.solenoid_build(*fix_b, 2, tol=1e-12)
    by = {c.name: c for c in sol.checks}
    assert by["solenoid.U_isometry"].expect == "info"
    assert by["solenoid.U_isometry"].deviation > 0.01
    for name in ("solenoid.factor_identity", "solenoid.marginal", "solenoid.V0_isometry"):
        assert by[name].passed


def test_solenoid_budget(fix_a):
    with pytest.raises(DepthError):
        sx.solenoid_build(*fix_a, 12)
    with pytest.raises(DepthError):
        sx.solenoid_build(*fix_a, 0)


@given(st.integers(0, 50), st.integers(1, 3))
def test_solenoid_marginal_random(seed, d_sol):
    model, mu = model_from_config(random_config(seed))
    sol = sx.solenoid_build(model, mu, d_sol, tol=1e-12)
    by = {c.name: c for c in sol.checks}
    assert by["solenoid.marginal"].deviation <= 1e-12
    assert by["solenoid.V0_isometry"].deviation <= 1e-12
    assert by["solenoid.factor_identity"].deviation == 0.0


@given(st.integers(0, 50))
def test_measurable_basis_dimension(seed):
    model, mu = model_from_config(random_config(seed, 3, 3))
    for n in range(4):
        B = sx.measurable_basis(model, n)
        assert B.shape == (model.dim(3), sx.exactness_probe(model)["dims"][n])
