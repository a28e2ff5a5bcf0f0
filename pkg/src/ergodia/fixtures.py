"""Canonical shift/measure configurations and filter banks used in tests and the CLI."""
from __future__ import annotations

import copy

import numpy as np

from .symspace import CylFn, ShiftModel, measure_from_config

_CONFIGS = {
    "fix-a": {
        "alphabet": 2,
        "admissible": [[1, 1], [1, 1]],
        "depth": 3,
        "measure": {"kind": "bernoulli", "params": {"weights": ["1/2", "1/2"]}},
    },
    "fix-b": {
        "alphabet": 2,
        "admissible": [[1, 1], [1, 1]],
        "depth": 3,
        "measure": {
            "kind": "markov",
            "params": {"initial": ["1/3", "2/3"], "transition": [["1/2", "1/2"], ["1/2", "1/2"]]},
        },
    },
    "fix-c": {
        "alphabet": 2,
        "admissible": [[1, 1], [1, 0]],
        "depth": 3,
        "measure": {
            "kind": "markov",
            "params": {"initial": ["2/3", "1/3"], "transition": [["1/2", "1/2"], ["1", "0"]]},
        },
    },
    # two disjoint fixed points: the shift is a bijection of a two-point space
    "bijective": {
        "alphabet": 2,
        "admissible": [[1, 0], [0, 1]],
        "depth": 3,
        "measure": {
            "kind": "markov",
            "params": {"initial": ["1/2", "1/2"], "transition": [["1", "0"], ["0", "1"]]},
        },
    },
}

FIXTURES = tuple(_CONFIGS)


def fixture_config(name: str) -> dict:
    key = name.lower()
    if key not in _CONFIGS:
        raise KeyError(f"unknown fixture {name!r}; known: {', '.join(FIXTURES)}")
    return copy.deepcopy(_CONFIGS[key])


def random_config(seed: int, alphabet: int = 2, depth: int = 3) -> dict:
    """Seeded strictly positive Markov measure on a full shift.

    Probabilities are rounded to rationals with denominator 1000 and written
    as fraction strings so the config is exact.
    """
    rng = np.random.default_rng(seed)

    def simplex():
        raw = rng.integers(100, 1000, size=alphabet)
        cuts = np.round(raw / raw.sum() * 1000).astype(int)
        cuts[-1] = 1000 - cuts[:-1].sum()
        return [f"{c}/1000" for c in cuts]

    return {
        "alphabet": alphabet,
        "admissible": [[1] * alphabet for _ in range(alphabet)],
        "depth": depth,
        "measure": {
            "kind": "markov",
            "params": {"initial": simplex(), "transition": [simplex() for _ in range(alphabet)]},
        },
    }


def model_from_config(cfg: dict, depth: int | None = None):
    """Build ``(model, measure)`` from a config dict; ``depth`` overrides the budget."""
    for key in ("alphabet", "admissible", "depth", "measure"):
        if key not in cfg:
            raise KeyError(key)
    A = np.asarray(cfg["admissible"], dtype=int)
    if A.shape != (int(cfg["alphabet"]),) * 2:
        raise ValueError("admissible table does not match alphabet size")
    model = ShiftModel(A, int(cfg["depth"] if depth is None else depth))
    return model, measure_from_config(model, cfg["measure"])


def load_fixture(name: str, depth: int | None = None):
    return model_from_config(fixture_config(name), depth)


def silo_bank(model):
    """``m_i = √N · 1[x_1 = i]`` on a full shift."""
    N = model.alphabet_size
    return [np.sqrt(N) * CylFn.letter_indicator(model, 1, i) for i in range(N)]


def haar_bank(model):
    """``m_0 = 1``, ``m_1 = (-1)^{x_1}`` on the full two-shift."""
    if model.alphabet_size != 2:
        raise ValueError("the Haar pair lives on a two-letter alphabet")
    return [CylFn(model, 1, [1.0, 1.0]), CylFn(model, 1, [1.0, -1.0])]
