import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ergodia import CylFn
from ergodia import filters as fl
from ergodia.fixtures import haar_bank, load_fixture, silo_bank
from ergodia.markovian import omega

HADAMARD = np.array([[1, 1], [1, -1]]) / np.sqrt(2)


@pytest.fixture
def fix_a_banks():
    model, mu = load_fixture("fix-a")
    return (fl.FilterBank(tuple(silo_bank(model)), model, mu),
            fl.FilterBank(tuple(haar_bank(model)), model, mu))


@pytest.fixture
def fix_b_weighted():
    model, mu = load_fixture("fix-b")
    return fl.cyclic_construct(model, mu, omega(model, mu))


def test_connect_silo_haar(fix_a_banks):
    silo, haar = fix_a_banks
    G = fl.connect(silo, haar)
    assert G.depth == 0
    np.testing.assert_allclose(G.matrices[0], HADAMARD, atol=1e-15)
    assert fl.loop_act(G, silo).sup_dist(haar) <= 1e-15


def test_connect_rejects_non_member(fix_a_banks):
    silo, haar = fix_a_banks
    bad = silo.with_filters([m * 1.2 for m in silo])
    with pytest.raises(ValueError):
        fl.connect(silo, bad)


def test_connect_rejects_different_weights(fix_b_weighted):
    model, mu = load_fixture("fix-b")
    plain = fl.phi_map(fix_b_weighted)
    with pytest.raises(ValueError, match="weights"):
        fl.connect(fix_b_weighted, plain)


@pytest.mark.parametrize("depth", [0, 1])
def test_freeness_and_transitivity(fix_a_banks, depth):
    silo, _ = fix_a_banks
    rng = np.random.default_rng(11)
    for _ in range(20):
        H = fl.LoopElement.random(silo.model, 2, depth, rng)
        r = fl.transitivity_defect(silo, H)
        assert r["freeness"] <= 1e-12
        assert r["transitivity"] <= 1e-12


@given(st.integers(0, 2**32 - 1))
def test_free_transitive_weighted(seed):
    rng = np.random.default_rng(seed)
    model, mu = load_fixture("fix-b")
    bank = fl.cyclic_construct(model, mu, omega(model, mu))
    H = fl.LoopElement.random(model, 2, 0, rng)
    r = fl.transitivity_defect(bank, H)
    assert r["freeness"] <= 1e-10 and r["transitivity"] <= 1e-10


@given(st.integers(0, 2**32 - 1))
def test_compose_law_and_inverse(seed):
    rng = np.random.default_rng(seed)
    model, mu = load_fixture("fix-a")
    bank = fl.FilterBank(tuple(haar_bank(model)), model, mu)
    G = fl.LoopElement.random(model, 2, 1, rng)
    H = fl.LoopElement.random(model, 2, 0, rng)
    assert fl.loop_compose_law(G, H, bank) <= 1e-12
    assert fl.loop_act(G.inverse(), fl.loop_act(G, bank)).sup_dist(bank) <= 1e-12


def test_closure_over_random_pairs(fix_a_banks):
    rng = np.random.default_rng(51)
    silo, haar = fix_a_banks
    for k in range(50):
        bank = silo if k % 2 else haar
        G = fl.LoopElement.random(bank.model, 2, int(rng.integers(0, 2)), rng)
        assert fl.loop_act(G, bank, verify=True).is_member(1e-10)


def test_identity_and_rotation(fix_a_banks):
    silo, haar = fix_a_banks
    assert fl.loop_act(fl.LoopElement.identity(silo.model, 2), silo).sup_dist(silo) == 0.0
    assert fl.loop_act(fl.LoopElement.rotation(haar.model, 0.3), haar).is_member()


def test_loop_element_validation(fix_a_banks):
    model = fix_a_banks[0].model
    with pytest.raises(ValueError, match="unitary"):
        fl.LoopElement.constant(model, [[1, 1], [0, 1]])
    with pytest.raises(ValueError, match="shape"):
        fl.LoopElement(model, 1, np.zeros((3, 2, 2)))
    G = fl.LoopElement.constant(model, [[1, 1], [0, 1]], check=False)
    assert G.unitarity_defect > 0.5
    with pytest.raises(ValueError, match="size"):
        fl.loop_act(fl.LoopElement.identity(model, 3), fix_a_banks[0])


def test_loop_element_json_round_trip(rng):
    model, _ = load_fixture("fix-a")
    G = fl.LoopElement.random(model, 2, 1, rng)
    H = fl.LoopElement.from_json(model, G.to_json())
    assert H.sup_dist(G) == 0.0


def test_reduce_keeps_action(fix_a_banks, rng):
    silo, _ = fix_a_banks
    G = fl.LoopElement.random(silo.model, 2, 0, rng).promote(2)
    assert G.reduce().depth == 0
    assert fl.loop_act(G.reduce(), silo).sup_dist(fl.loop_act(G, silo)) <= 1e-14


def test_phi_map_round_trip(fix_b_weighted):
    plain = fl.phi_map(fix_b_weighted)
    assert plain.phi is None and plain.space == "sigma"
    assert plain.is_member()
    back = fl.phi_unmap(plain, fix_b_weighted.phi)
    assert back.sup_dist(fix_b_weighted) <= 1e-14


def test_phi_unmap_rejects_non_markovian(fix_b_weighted):
    plain = fl.phi_map(fix_b_weighted)
    with pytest.raises(ValueError):
        fl.phi_unmap(plain, CylFn.constant(plain.model))


@given(st.integers(0, 2**32 - 1))
def test_phi_equivariance(seed):
    rng = np.random.default_rng(seed)
    model, mu = load_fixture("fix-b")
    bank = fl.cyclic_construct(model, mu, omega(model, mu))
    G = fl.LoopElement.random(model, 2, 1, rng)
    assert fl.phi_equivariance(bank, G) <= 1e-13


def test_cyclic_construct_fix_a_is_silo(fix_a_banks):
    silo, _ = fix_a_banks
    bank = fl.cyclic_construct(silo.model, silo.measure)
    assert bank.is_member(1e-12)
    assert bank.sup_dist(silo) <= 1e-14


def test_cyclic_construct_needs_weight_for_noninvariant():
    model, mu = load_fixture("fix-b")
    with pytest.raises(ValueError, match="invariant"):
        fl.cyclic_construct(model, mu)
    with pytest.raises(ValueError, match="Markovian"):
        fl.cyclic_construct(model, mu, CylFn.constant(model))


def test_cyclic_construct_weighted_member(fix_b_weighted):
    assert fix_b_weighted.is_member(1e-10)
    assert fix_b_weighted.meta["ranks"] == [2, 2, 2, 2]


def test_cyclic_frame_on_subshift():
    model, mu = load_fixture("fix-c")
    bank = fl.cyclic_construct(model, mu)
    assert bank.meta["ranks"] == [2, 2, 1]
    assert bank.meta["rank_sum"] == 5 == model.dim(3)
    rep = fl.frame_report(bank)
    assert rep["complete"]
    assert rep["reconstruction"] <= 1e-14
    assert rep["partial_orthonormality"] <= 1e-14


def test_bijective_shift_single_filter():
    model, mu = load_fixture("bijective")
    bank = fl.cyclic_construct(model, mu)
    assert len(bank) == 1
    assert bank.sup_dist(fl.FilterBank((CylFn.constant(model),), model, mu)) <= 1e-15
    assert bank.is_member()


@pytest.mark.parametrize("scale", [0.5, 1.5, 2.0])
def test_corruption_flips_verdict(fix_a_banks, scale):
    silo, _ = fix_a_banks
    bank = fl.cyclic_construct(silo.model, silo.measure)
    bad = fl.corrupt(bank, 0, scale)
    assert not bad.is_member()
    assert fl.sum_ranges_defect(bad) > 0.1
    assert fl.sum_ranges_defect(bank) <= 1e-14


def test_corruption_frozen_defect(fix_a_banks):
    silo, _ = fix_a_banks
    bad = fl.corrupt(fl.cyclic_construct(silo.model, silo.measure), 0, 1.5)
    assert fl.sum_ranges_defect(bad) == pytest.approx(1.25, abs=1e-14)


@given(st.integers(0, 2**32 - 1))
def test_normalize_cyclic(seed):
    rng = np.random.default_rng(seed)
    model, mu = load_fixture("fix-b")
    w = omega(model, mu)
    h = CylFn.random(model, 2, rng)
    m = fl.normalize_cyclic(h, model, mu, w)
    bank = fl.FilterBank((m,), model, mu, w)
    grid = bank.membership().grid
    assert grid[0, 0] <= 1e-12


def test_cyclic_orthogonality(fix_b_weighted, rng):
    assert fl.cyclic_orthogonality(fix_b_weighted, rng) <= 1e-13


def test_bank_json_round_trip(fix_b_weighted):
    model, mu = fix_b_weighted.model, fix_b_weighted.measure
    again = fl.FilterBank.from_json(model, mu, fix_b_weighted.to_json())
    assert again.sup_dist(fix_b_weighted) == 0.0
    assert again.phi.sup_dist(fix_b_weighted.phi) == 0.0


def test_connect_formulas_weighted(fix_b_weighted):
    H = fl.LoopElement.random(fix_b_weighted.model, 2, 1, np.random.default_rng(5))
    v = fl.connect_variants(fix_b_weighted, fl.loop_act(H, fix_b_weighted))
    assert v["phi_map"]["miss"] <= 1e-12 and v["phi_map"]["unitarity"] <= 1e-12
    # G = A H with A diagonal: A_ii = 1/(2π(w₁)) for S*_σ, 1/√(2π(w₁)) for S*_φ;
    # max |A² - 1| is 9/4 - 1 and 3/2 - 1
    assert v["sigma"]["miss"] > 0.1 and v["phi"]["miss"] > 0.1
    assert v["sigma"]["unitarity"] == pytest.approx(1.25, abs=1e-12)
    assert v["phi"]["unitarity"] == pytest.approx(0.5, abs=1e-12)


@given(st.integers(0, 2**32 - 1))
def test_connect_formulas_agree_unweighted(seed):
    model, mu = load_fixture("fix-a")
    bank = fl.FilterBank(tuple(haar_bank(model)), model, mu)
    H = fl.LoopElement.random(model, 2, 1, np.random.default_rng(seed))
    v = fl.connect_variants(bank, fl.loop_act(H, bank))
    assert max(x["miss"] for x in v.values()) <= 1e-12
