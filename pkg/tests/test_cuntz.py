import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ergodia import CylFn, inner
from ergodia import cuntz
from ergodia import operators as ops
from ergodia.filters import FilterBank, LoopElement, cyclic_construct, loop_act
from ergodia.fixtures import haar_bank, load_fixture, silo_bank
from ergodia.markovian import omega


@pytest.fixture
def fix_b_bank():
    model, mu = load_fixture("fix-b")
    w = omega(model, mu)
    # 1[x₁ = i]/√π_i: S*_σ(ω |m_i|²) = 1 for the Markov chain with uniform rows
    pi = [1 / 3, 2 / 3]
    filters = [CylFn.letter_indicator(model, 1, i) * (1 / np.sqrt(pi[i])) for i in range(2)]
    return filters, w, model, mu


@pytest.mark.parametrize("bank", [silo_bank, haar_bank])
def test_classical_banks_fix_a(bank):
    model, mu = load_fixture("fix-a")
    rep = cuntz.verify_cuntz(bank(model), None, model, mu, tol=1e-12)
    assert rep.verdict
    assert rep.condition_i <= 1e-14
    assert rep.condition_ii <= 1e-14
    assert max(rep.isometry) <= 1e-14
    assert rep.sum_ranges <= 1e-14
    assert rep.range_orthogonality <= 1e-14
    assert rep.adjoint_consistency <= 1e-14
    dec = cuntz.subspace_decomposition(bank(model), None, model, mu)
    assert dec["dims"] == [4, 4] and dec["complete"]
    assert dec["max_cross_cosine"] <= 1e-12


def test_quasi_invariant_bank(fix_b_bank):
    filters, w, model, mu = fix_b_bank
    rep = cuntz.verify_cuntz(filters, w, model, mu, tol=1e-10)
    assert rep.verdict
    dec = cuntz.subspace_decomposition(filters, w, model, mu)
    assert dec["sum"] == 8 and dec["max_cross_cosine"] <= 1e-9


def test_unweighted_bank_on_noninvariant_measure_rejected(fix_b_bank):
    filters, _, model, mu = fix_b_bank
    with pytest.raises(ValueError, match="Markovian"):
        cuntz.verify_cuntz(filters, None, model, mu)


def test_dropped_filter_breaks_completeness():
    model, mu = load_fixture("fix-a")
    rep = cuntz.cuntz_conditions(haar_bank(model)[:1], None, model, mu)
    assert rep.condition_i <= 1e-14
    assert rep.condition_ii == pytest.approx(0.5, abs=1e-14)
    assert rep.structural is not None
    assert not rep.verdict
    dec = cuntz.subspace_decomposition(haar_bank(model)[:1], None, model, mu)
    assert dec["dims"] == [4] and not dec["complete"]
    assert all(c.passed for c in cuntz.incomplete_checks(haar_bank(model)[:1], None, model, mu))


def test_variable_fiber_rejected():
    model, mu = load_fixture("fix-c")
    with pytest.raises(ValueError, match="fiber cardinality"):
        cuntz.verify_cuntz([CylFn.constant(model)], None, model, mu)


def test_rescaled_filter_fails_orthonormality():
    model, mu = load_fixture("fix-a")
    bad = [1.1 * m for m in silo_bank(model)]
    rep = cuntz.verify_cuntz(bad, None, model, mu)
    assert rep.condition_i == pytest.approx(0.21, abs=1e-12)
    assert not rep.verdict


def test_tstar_formula(fix_b_bank):
    filters, w, model, mu = fix_b_bank
    for a in filters:
        for b in filters:
            _, dev = cuntz.tstar_t(a, b, w, model, mu)
            assert dev <= 1e-13


def test_explicit_adjoint_formula(fix_b_bank, rng):
    filters, w, model, mu = fix_b_bank
    for m in filters:
        T = cuntz.build_T(m, w, model, mu)
        Ts = cuntz.build_Tstar(m, w, model, mu)
        for _ in range(5):
            f = CylFn.random(model, T.in_depth, rng)
            g = CylFn.random(model, 3, rng)
            assert abs(inner(T(f), g, mu) - inner(f, Ts(g), mu)) <= 1e-13


@given(st.integers(0, 2**32 - 1))
def test_isometry_criterion_random_filters(seed):
    rng = np.random.default_rng(seed)
    model, mu = load_fixture("fix-b")
    w = omega(model, mu)
    m = CylFn.random(model, 2, rng)
    c = cuntz.isometry_criterion(m, w, model, mu)
    assert (c["isometry_defect"] <= 1e-10) == (c["criterion"] <= 1e-10)
    bank = cyclic_construct(model, mu, w)
    for f in bank:
        c = cuntz.isometry_criterion(f, w, model, mu)
        assert max(c.values()) <= 1e-12


@given(st.integers(0, 2**32 - 1))
def test_loop_images_satisfy_relations(seed):
    rng = np.random.default_rng(seed)
    model, mu = load_fixture("fix-a")
    bank = FilterBank(tuple(haar_bank(model)), model, mu)
    G = LoopElement.random(model, 2, 1, rng)
    img = loop_act(G, bank)
    rep = cuntz.verify_cuntz(img.filters, None, model, mu, tol=1e-10)
    assert rep.verdict


@given(st.integers(0, 2**32 - 1))
def test_similarity_transport(seed):
    rng = np.random.default_rng(seed)
    model, mu = load_fixture("fix-a")
    g = CylFn.random(model, 1, rng, positive=True)
    assert cuntz.similarity_transport(silo_bank(model), None, g, model, mu) <= 1e-12


def test_parseval_diagnostics():
    model, mu = load_fixture("fix-a")
    fin, integ = cuntz.parseval_report(silo_bank(model), None, model, mu)
    assert fin.passed and integ.expect == "info"
    assert integ.deviation == pytest.approx(2.0)


def test_report_serialization(tmp_path):
    model, mu = load_fixture("fix-a")
    rep = cuntz.verify_cuntz(haar_bank(model), None, model, mu)
    js = rep.to_json()
    assert js["verdict"] is True
    assert np.array(js["condition_i_grid"]).shape == (2, 2)
    rep.grid_to_csv(tmp_path / "g.csv")
    assert (tmp_path / "g.csv").read_text().count("\n") == 3
    names = [c.name for c in rep.checks("x")]
    assert "x.condition_ii" in names


def test_weighted_projection_equals_expectation():
    # 𝔼_φ for φ = ω is the same projection as 𝔼 when ω is σ^{-1}(B)-measurable
    model, mu = load_fixture("fix-b")
    w = omega(model, mu)
    Ephi = ops.cond_expect(model, mu, w)
    E = ops.conditional_expectation(model, mu)
    assert ops.opdist(Ephi.matrix, E.matrix) <= 1e-14
