import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ergodia import kernels
from ergodia.fixtures import load_fixture

BACKENDS = kernels.available_backends()


def test_python_backend_always_available():
    assert "python" in BACKENDS
    assert kernels.BACKEND in BACKENDS


def test_compiled_backend_built():
    # the editable install compiles the extension; a missing one is a build problem
    assert "cython" in BACKENDS


@pytest.fixture(params=sorted(BACKENDS))
def impl(request):
    return BACKENDS[request.param]


@st.composite
def fiber_problem(draw):
    n_out = draw(st.integers(1, 12))
    n = draw(st.integers(1, 60))
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    index = rng.integers(0, n_out, size=n)
    values = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return values, index, n_out


@given(fiber_problem())
def test_fiber_sum_matches_bincount(problem):
    values, index, n_out = problem
    ref = np.bincount(index, weights=values.real, minlength=n_out) + \
        1j * np.bincount(index, weights=values.imag, minlength=n_out)
    for impl in BACKENDS.values():
        np.testing.assert_allclose(impl.fiber_sum(values, index, n_out), ref, atol=1e-12)


def test_fiber_sum_read_only_input(impl):
    v = np.arange(6, dtype=np.complex128)
    idx = np.array([0, 1, 0, 1, 2, 2], dtype=np.intp)
    v.setflags(write=False)
    idx.setflags(write=False)
    np.testing.assert_allclose(impl.fiber_sum(v, idx, 3), [2, 4, 9])


def test_fiber_sum_real_input(impl):
    out = impl.fiber_sum(np.array([1.0, 2.0, 3.0]), np.array([1, 1, 0]), 2)
    np.testing.assert_allclose(out, [3.0, 3.0])


@given(st.integers(0, 2**32 - 1), st.integers(1, 4))
def test_gram_schmidt_parity_and_orthonormality(seed, L):
    rng = np.random.default_rng(seed)
    model, mu = load_fixture("fix-b")
    D = model.depth
    gens = rng.standard_normal((L, model.dim(D))) + 1j * rng.standard_normal((L, model.dim(D)))
    w = mu.masses(D) / mu.masses(D - 1)[model.tail_index(D)]
    idx = model.tail_index(D)
    results = {name: impl.fiber_gram_schmidt(gens, w, idx, model.dim(D - 1))
               for name, impl in BACKENDS.items()}
    q_ref, r_ref = results["python"]
    for q, r in results.values():
        np.testing.assert_allclose(q, q_ref, atol=1e-12)
        np.testing.assert_array_equal(r, r_ref)
    # every fiber has two points: at most two survivors
    assert np.all(r_ref == min(L, 2))
    for i in range(L):
        for j in range(L):
            g = np.bincount(idx, weights=(q_ref[i] * q_ref[j].conj() * w).real, minlength=model.dim(D - 1))
            expect = np.where(r_ref > i, 1.0, 0.0) if i == j else 0.0
            np.testing.assert_allclose(g, expect, atol=1e-10)


def test_gram_schmidt_drops_dependent(impl):
    gens = np.array([[1.0, 1.0], [2.0, 2.0]])
    q, ranks = impl.fiber_gram_schmidt(gens, np.array([0.5, 0.5]), np.array([0, 0]), 1)
    assert list(ranks) == [1]
    np.testing.assert_allclose(q[1], 0.0, atol=1e-14)
    np.testing.assert_allclose(np.abs(q[0]), 1.0)


def test_backend_env_switch(monkeypatch):
    import importlib

    monkeypatch.setenv("ERGODIA_PURE_PYTHON", "1")
    mod = importlib.reload(kernels)
    try:
        assert mod.BACKEND == "python"
    finally:
        monkeypatch.delenv("ERGODIA_PURE_PYTHON")
        importlib.reload(kernels)
