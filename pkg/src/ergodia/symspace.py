"""Finite symbolic model of a shift space with a measure.

Everything downstream works on *cylinder functions*: complex functions of the
first ``d`` letters of a one-sided sequence.  The space of such functions at
depth ``d`` is indexed by the admissible words of length ``d`` in
lexicographic order; that order is the canonical basis for every matrix in
the package.

Depth bookkeeping: composing with the shift raises depth by one, transfer
operators lower it by one, products take the maximum.  Nothing is ever
truncated silently; exceeding the model's depth budget raises
:class:`DepthError`.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, NamedTuple, Sequence

import numpy as np

from .kernels import fiber_sum

DEFAULT_TOL = 1e-9

Word = tuple


class DepthError(ValueError):
    """Raised when an operation would exceed the depth budget."""


class MeasureError(ValueError):
    """Raised for invalid or degenerate measure parameters."""


def _readonly(a):
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


class ShiftModel:
    """One-sided subshift of finite type with a depth budget.

    Parameters
    ----------
    admissible : array_like, shape (N, N)
        0/1 matrix; ``admissible[a, b] == 1`` iff letter ``b`` may follow ``a``.
    depth : int
        Depth budget ``D``: the largest cylinder depth any computation may use.
    """

    def __init__(self, admissible, depth: int):
        A = np.asarray(admissible)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError("admissibility table must be square")
        if A.shape[0] < 2:
            raise ValueError("alphabet needs at least two letters")
        if not np.all((A == 0) | (A == 1)):
            raise ValueError("admissibility table must be 0/1")
        A = A.astype(np.int8)
        if np.any(A.sum(axis=1) == 0):
            raise ValueError("every letter needs an admissible successor")
        if np.any(A.sum(axis=0) == 0):
            raise ValueError("every letter needs an admissible predecessor (shift must be onto)")
        if int(depth) < 1:
            raise ValueError("depth budget must be at least 1")
        self.admissible = _readonly(A)
        self.depth = int(depth)
        self._letters = {0: _readonly(np.zeros((1, 0), dtype=np.intp))}
        self._codes = {0: np.zeros(1, dtype=np.int64)}
        self._tail = {}
        self._trunc = {}

    # construction helpers
    @classmethod
    def full(cls, n: int, depth: int) -> "ShiftModel":
        return cls(np.ones((n, n), dtype=int), depth)

    def with_depth(self, depth: int) -> "ShiftModel":
        return ShiftModel(self.admissible, depth)

    @property
    def alphabet_size(self) -> int:
        return self.admissible.shape[0]

    @property
    def is_full(self) -> bool:
        return bool(np.all(self.admissible == 1))

    @property
    def fiber_sizes(self) -> np.ndarray:
        """Number of admissible predecessors of each letter."""
        return self.admissible.sum(axis=0).astype(int)

    @property
    def min_transfer_depth(self) -> int:
        """Smallest input depth at which fiber sums are functions of the base word.

        On a full shift every word has all letters as predecessors, so depth 1
        suffices.  On a proper subshift the admissible predecessors of ``x``
        depend on ``x_1``, so the base word must contain at least one letter.
        """
        return 1 if self.is_full else 2

    @property
    def constant_fiber(self) -> int | None:
        """Common preimage count of the shift, or ``None`` if it varies."""
        s = np.unique(self.fiber_sizes)
        return int(s[0]) if s.size == 1 else None

    def same_shift(self, other: "ShiftModel") -> bool:
        return self is other or np.array_equal(self.admissible, other.admissible)

    def to_config(self) -> dict:
        return {
            "alphabet": self.alphabet_size,
            "admissible": self.admissible.astype(int).tolist(),
            "depth": self.depth,
        }

    def __repr__(self):
        kind = "full" if self.is_full else "sft"
        return f"ShiftModel({kind}, N={self.alphabet_size}, D={self.depth})"

    # enumeration
    def check_depth(self, d: int) -> int:
        d = int(d)
        if d < 0:
            raise DepthError(f"negative depth {d}")
        if d > self.depth:
            raise DepthError(f"depth budget exhausted: need {d}, budget is {self.depth}")
        return d

    def letters(self, d: int) -> np.ndarray:
        """Admissible words of length ``d`` as an ``(n_d, d)`` integer array."""
        d = self.check_depth(d)
        if d not in self._letters:
            prev = self.letters(d - 1)
            N = self.alphabet_size
            if d == 1:
                rows = np.arange(N, dtype=np.intp)[:, None]
                parent = np.zeros(N, dtype=np.intp)
            else:
                last = prev[:, -1]
                # appending letters in order to lex-sorted parents keeps lex order
                par, nxt = np.nonzero(self.admissible[last])
                rows = np.column_stack([prev[par], nxt.astype(np.intp)])
                parent = par.astype(np.intp)
            self._letters[d] = _readonly(rows)
            self._trunc[d] = _readonly(parent)
            self._codes[d] = rows.astype(np.int64) @ (N ** np.arange(d - 1, -1, -1, dtype=np.int64))
            tail_codes = self._codes[d] % (N ** (d - 1))
            tail = np.searchsorted(self._codes[d - 1], tail_codes)
            self._tail[d] = _readonly(tail.astype(np.intp))
        return self._letters[d]

    def words(self, d: int) -> list:
        return [tuple(int(x) for x in row) for row in self.letters(d)]

    def dim(self, d: int) -> int:
        return self.letters(d).shape[0]

    def tail_index(self, d: int) -> np.ndarray:
        """For each word ``a w`` of length ``d``, the position of ``w`` at depth ``d-1``."""
        if d < 1:
            raise DepthError("depth-0 words have no tail")
        self.letters(d)
        return self._tail[d]

    def trunc_index(self, d: int) -> np.ndarray:
        """For each word of length ``d``, the position of its length ``d-1`` prefix."""
        if d < 1:
            raise DepthError("depth-0 words have no prefix")
        self.letters(d)
        return self._trunc[d]

    def first_letter(self, d: int) -> np.ndarray:
        return self.letters(d)[:, 0]

    def is_admissible(self, word: Sequence[int]) -> bool:
        w = tuple(word)
        if any(not 0 <= a < self.alphabet_size for a in w):
            return False
        return all(self.admissible[a, b] for a, b in zip(w, w[1:]))

    def index(self, word: Sequence[int]) -> int:
        w = tuple(int(a) for a in word)
        if not self.is_admissible(w):
            raise ValueError(f"word {w} is not admissible")
        d = len(w)
        code = 0
        for a in w:
            code = code * self.alphabet_size + a
        self.letters(d)
        return int(np.searchsorted(self._codes[d], code))

    def label(self, word: Sequence[int]) -> str:
        if len(word) == 0:
            return "ε"
        sep = "" if self.alphabet_size <= 10 else "."
        return sep.join(str(a) for a in word)

    def labels(self, d: int) -> list:
        return [self.label(w) for w in self.words(d)]


def admissible_words(model: ShiftModel, d: int) -> list:
    """Lexicographically ordered admissible words of length ``d``."""
    return model.words(d)


class CylFn:
    """Complex cylinder function of depth ``depth`` on ``model``.

    ``values[i]`` is the value on the ``i``-th admissible word of length
    ``depth``.  Instances are immutable.
    """

    __slots__ = ("model", "depth", "values")

    def __init__(self, model: ShiftModel, depth: int, values):
        depth = model.check_depth(depth)
        v = np.asarray(values, dtype=np.complex128).reshape(-1)
        if v.shape[0] != model.dim(depth):
            raise ValueError(
                f"expected {model.dim(depth)} values at depth {depth}, got {v.shape[0]}"
            )
        object.__setattr__(self, "model", model)
        object.__setattr__(self, "depth", depth)
        object.__setattr__(self, "values", _readonly(v))

    def __setattr__(self, name, value):
        raise AttributeError("CylFn is immutable")

    # constructors
    @classmethod
    def constant(cls, model, c=1.0) -> "CylFn":
        return cls(model, 0, [c])

    @classmethod
    def from_function(cls, model, depth: int, fn: Callable[[tuple], complex]) -> "CylFn":
        return cls(model, depth, [fn(w) for w in model.words(depth)])

    @classmethod
    def indicator(cls, model, depth: int, predicate: Callable[[tuple], bool]) -> "CylFn":
        return cls.from_function(model, depth, lambda w: 1.0 if predicate(w) else 0.0)

    @classmethod
    def letter_indicator(cls, model, position: int, letter: int) -> "CylFn":
        """``1[x_position = letter]`` with 1-based positions."""
        return cls.indicator(model, position, lambda w: w[position - 1] == letter)

    @classmethod
    def random(cls, model, depth, rng, complex_=True, positive=False) -> "CylFn":
        n = model.dim(depth)
        if positive:
            return cls(model, depth, rng.uniform(0.5, 2.0, n))
        v = rng.standard_normal(n)
        if complex_:
            v = v + 1j * rng.standard_normal(n)
        return cls(model, depth, v)

    # depth handling
    def promote(self, d: int) -> "CylFn":
        d = self.model.check_depth(d)
        if d < self.depth:
            raise DepthError(f"cannot promote depth {self.depth} down to {d}")
        v = self.values
        for k in range(self.depth + 1, d + 1):
            v = v[self.model.trunc_index(k)]
        return CylFn(self.model, d, v)

    def values_at(self, d: int) -> np.ndarray:
        return self.promote(d).values

    def reduce(self, tol: float = 1e-12) -> "CylFn":
        """Smallest-depth function that promotes back to ``self`` within ``tol``."""
        f = self
        while f.depth > 0:
            idx = self.model.trunc_index(f.depth)
            n = self.model.dim(f.depth - 1)
            counts = np.bincount(idx, minlength=n)
            mean = fiber_sum(f.values, idx, n) / counts
            if np.max(np.abs(f.values - mean[idx])) > tol:
                break
            f = CylFn(self.model, f.depth - 1, mean)
        return f

    def compose_shift(self, n: int = 1) -> "CylFn":
        """``f ∘ σ^n``."""
        f = self
        for _ in range(n):
            d = self.model.check_depth(f.depth + 1)
            f = CylFn(self.model, d, f.values[self.model.tail_index(d)])
        return f

    # pointwise algebra
    def _pair(self, other):
        if isinstance(other, CylFn):
            if not self.model.same_shift(other.model):
                raise ValueError("cylinder functions live on different shift models")
            d = max(self.depth, other.depth)
            return d, self.values_at(d), other.values_at(d)
        return self.depth, self.values, np.complex128(other)

    def __add__(self, other):
        d, a, b = self._pair(other)
        return CylFn(self.model, d, a + b)

    __radd__ = __add__

    def __sub__(self, other):
        d, a, b = self._pair(other)
        return CylFn(self.model, d, a - b)

    def __rsub__(self, other):
        d, a, b = self._pair(other)
        return CylFn(self.model, d, b - a)

    def __mul__(self, other):
        d, a, b = self._pair(other)
        return CylFn(self.model, d, a * b)

    __rmul__ = __mul__

    def __truediv__(self, other):
        d, a, b = self._pair(other)
        if np.any(b == 0):
            raise ZeroDivisionError("division by a cylinder function with zeros")
        return CylFn(self.model, d, a / b)

    def __rtruediv__(self, other):
        if np.any(self.values == 0):
            raise ZeroDivisionError("division by a cylinder function with zeros")
        return CylFn(self.model, self.depth, np.complex128(other) / self.values)

    def __neg__(self):
        return CylFn(self.model, self.depth, -self.values)

    def conj(self) -> "CylFn":
        return CylFn(self.model, self.depth, self.values.conj())

    def abs2(self) -> "CylFn":
        return CylFn(self.model, self.depth, np.abs(self.values) ** 2)

    def sqrt(self) -> "CylFn":
        if not self.is_real() or np.any(self.values.real < 0):
            raise ValueError("sqrt needs a real nonnegative function")
        return CylFn(self.model, self.depth, np.sqrt(self.values.real))

    @property
    def real(self) -> np.ndarray:
        return self.values.real

    def is_real(self, tol: float = 1e-12) -> bool:
        return bool(np.all(np.abs(self.values.imag) <= tol))

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values))) if self.values.size else 0.0

    def sup_dist(self, other) -> float:
        return (self - other).max_abs()

    def allclose(self, other, tol: float = 1e-12) -> bool:
        return self.sup_dist(other) <= tol

    def __call__(self, word: Sequence[int]) -> complex:
        w = tuple(word)
        if len(w) < self.depth:
            raise DepthError(f"need at least {self.depth} letters to evaluate")
        return complex(self.values[self.model.index(w[: self.depth])])

    def __repr__(self):
        return f"CylFn(depth={self.depth}, values={np.array2string(self.values, precision=4)})"

    # serialization
    def to_json(self) -> dict:
        return {"depth": self.depth, "values": [[float(z.real), float(z.imag)] for z in self.values]}

    @classmethod
    def from_json(cls, model, data: dict) -> "CylFn":
        vals = []
        for z in data["values"]:
            if isinstance(z, (list, tuple)):
                vals.append(complex(_num(z[0]), _num(z[1]) if len(z) > 1 else 0.0))
            else:
                vals.append(complex(_num(z)))
        return cls(model, int(data["depth"]), vals)


def _num(x) -> float:
    if isinstance(x, str):
        return float(Fraction(x))
    return float(x)


def promote(f: CylFn, d: int) -> CylFn:
    return f.promote(d)


def multiply(f: CylFn, g: CylFn) -> CylFn:
    return f * g


# ---------------------------------------------------------------------------
# measures


class Measure:
    """Cylinder measure on a :class:`ShiftModel`.

    Subclasses implement ``_masses(d)``; masses are cached per depth and
    every admissible cylinder up to the depth budget must have strictly
    positive mass.
    """

    kind = "abstract"

    def __init__(self, model: ShiftModel):
        self.model = model
        self._mass_cache = {}

    def _validate(self):
        m = self.masses(self.model.depth)
        if not np.all(np.isfinite(m)) or np.any(m <= 0):
            raise MeasureError("every admissible cylinder must have strictly positive mass")

    def masses(self, d: int) -> np.ndarray:
        d = self.model.check_depth(d)
        if d not in self._mass_cache:
            self._mass_cache[d] = _readonly(np.asarray(self._masses(d), dtype=np.float64))
        return self._mass_cache[d]

    def _masses(self, d):
        raise NotImplementedError

    def mass(self, word: Sequence[int]) -> float:
        return float(self.masses(len(word))[self.model.index(word)])

    @property
    def total(self) -> float:
        return float(self.masses(0)[0])

    def pushforward_masses(self, d: int, n: int = 1) -> np.ndarray:
        """Masses of ``μ∘σ^{-n}`` on depth-``d`` cylinders: ``Σ_{|u|=n} μ([u w])``."""
        m = self.masses(self.model.check_depth(d + n))
        for k in range(d + n, d, -1):
            m = fiber_sum(m, self.model.tail_index(k), self.model.dim(k - 1)).real
        return m

    def invariance_defect(self, d: int | None = None) -> float:
        """``max |μ∘σ^{-1}(w) / μ(w) - 1|`` over depth-``d`` words."""
        d = self.model.depth - 1 if d is None else d
        return float(np.max(np.abs(self.pushforward_masses(d) / self.masses(d) - 1.0)))

    def is_invariant(self, tol: float = DEFAULT_TOL) -> bool:
        return self.invariance_defect() <= tol

    @property
    def memory(self) -> int:
        """Number of base letters the conditional weights ``μ(aw)/μ(w)`` depend on."""
        return 1

    @property
    def min_transfer_depth(self) -> int:
        """Smallest input depth at which transfer operators are exact.

        ``S*_σ`` maps ``V_d`` into ``V_{d-1}`` only once the base word ``w``
        determines both the admissible predecessors and the conditional
        weights of the fiber over ``x ∈ [w]``.
        """
        return max(self.model.min_transfer_depth, self.memory + 1)

    def on(self, model: ShiftModel) -> "Measure":
        """Same measure on a model with the same shift but another budget."""
        raise NotImplementedError

    def to_config(self) -> dict:
        raise NotImplementedError

    @property
    def key(self) -> str:
        """Stable identifier derived from the measure parameters."""
        blob = json.dumps(self.to_config(), sort_keys=True, default=str)
        return f"{self.kind}:{hashlib.sha1(blob.encode()).hexdigest()[:12]}"

    def same_as(self, other: "Measure") -> bool:
        return self is other or (self.model.same_shift(other.model) and self.key == other.key)


def _as_probability_vector(p, name: str) -> np.ndarray:
    v = np.array([_num(x) for x in np.ravel(p)], dtype=np.float64)
    if np.any(v < 0):
        raise MeasureError(f"{name} has negative entries")
    if abs(v.sum() - 1.0) > 1e-12:
        raise MeasureError(f"{name} must sum to 1 (got {v.sum()!r})")
    return v


def _fmt(x) -> object:
    return str(x) if isinstance(x, (str, Fraction)) else float(x)


class Bernoulli(Measure):
    """Product measure ``Π p_{w_i}`` on a full shift."""

    kind = "bernoulli"

    def __init__(self, model, weights):
        super().__init__(model)
        if not model.is_full:
            raise MeasureError("Bernoulli measures need a full shift")
        self._raw = list(np.ravel(weights))
        self.weights = _readonly(_as_probability_vector(weights, "weights"))
        if self.weights.shape[0] != model.alphabet_size:
            raise MeasureError("one weight per letter required")
        self._validate()

    def _masses(self, d):
        return np.prod(self.weights[self.model.letters(d)], axis=1)

    @property
    def memory(self) -> int:
        return 0

    def on(self, model):
        return Bernoulli(model, self._raw)

    def to_config(self):
        return {"kind": self.kind, "params": {"weights": [_fmt(x) for x in self._raw]}}


class Markov(Measure):
    """Markov measure ``π_{w_1} Π P_{w_i w_{i+1}}``.

    ``P[a, b]`` must vanish exactly on inadmissible transitions and each row
    must sum to one.
    """

    kind = "markov"

    def __init__(self, model, initial, transition):
        super().__init__(model)
        self._raw_init = list(np.ravel(initial))
        self._raw_trans = [list(row) for row in transition]
        self.initial = _readonly(_as_probability_vector(initial, "initial"))
        P = np.array([[_num(x) for x in row] for row in transition], dtype=np.float64)
        N = model.alphabet_size
        if self.initial.shape != (N,) or P.shape != (N, N):
            raise MeasureError("initial/transition shapes do not match the alphabet")
        if np.any(P < 0):
            raise MeasureError("transition weights must be nonnegative")
        if np.any((P > 0) != (model.admissible == 1)):
            raise MeasureError("transition weights must vanish exactly on inadmissible pairs")
        if np.max(np.abs(P.sum(axis=1) - 1.0)) > 1e-12:
            raise MeasureError("transition rows must sum to 1")
        self.transition = _readonly(P)
        self._validate()

    def _masses(self, d):
        if d == 0:
            return np.ones(1)
        if d == 1:
            return self.initial.copy()
        L = self.model.letters(d)
        return self.masses(d - 1)[self.model.trunc_index(d)] * self.transition[L[:, -2], L[:, -1]]

    @property
    def memory(self) -> int:
        # a chain whose rows all equal the initial law is a product measure
        same = np.max(np.abs(self.transition - self.initial[None, :])) <= 1e-15
        return 0 if (self.model.is_full and same) else 1

    def stationary(self) -> bool:
        return bool(np.max(np.abs(self.initial @ self.transition - self.initial)) <= 1e-12)

    def on(self, model):
        return Markov(model, self._raw_init, self._raw_trans)

    def to_config(self):
        return {
            "kind": self.kind,
            "params": {
                "initial": [_fmt(x) for x in self._raw_init],
                "transition": [[_fmt(x) for x in row] for row in self._raw_trans],
            },
        }


class Density(Measure):
    """``dν = h dμ`` for a strictly positive real cylinder function ``h``."""

    kind = "density"

    def __init__(self, base: Measure, density: CylFn):
        super().__init__(base.model)
        if not base.model.same_shift(density.model):
            raise MeasureError("density and base measure live on different models")
        if not density.is_real() or np.any(density.real <= 0):
            raise MeasureError("density must be real and strictly positive")
        self.base = base
        self.density = density
        self._validate()

    def _masses(self, d):
        k = self.density.depth
        if d >= k:
            return self.base.masses(d) * self.density.values_at(d).real
        m = self.masses(d + 1)
        return fiber_sum(m, self.model.trunc_index(d + 1), self.model.dim(d)).real

    @property
    def memory(self) -> int:
        return max(self.base.memory, self.density.depth)

    def on(self, model):
        return Density(self.base.on(model), CylFn(model, self.density.depth, self.density.values))

    def to_config(self):
        return {
            "kind": self.kind,
            "params": {"base": self.base.to_config(), "density": self.density.to_json()},
        }


def measure_from_config(model: ShiftModel, cfg: dict) -> Measure:
    kind = str(cfg.get("kind", "")).lower()
    params = cfg.get("params", {})
    if kind == "bernoulli":
        return Bernoulli(model, params["weights"])
    if kind == "markov":
        return Markov(model, params["initial"], params["transition"])
    if kind == "density":
        base = measure_from_config(model, params["base"])
        return Density(base, CylFn.from_json(model, params["density"]))
    raise MeasureError(f"unknown measure kind {cfg.get('kind')!r}")


def cyl_mass(measure: Measure, w: Sequence[int]) -> float:
    return measure.mass(w)


def inner(f: CylFn, g: CylFn, measure: Measure) -> complex:
    """``<f, g>`` in ``L^2(μ)``, conjugate-linear in ``g``."""
    d = max(f.depth, g.depth)
    m = measure.masses(d)
    return complex(np.sum(f.values_at(d) * g.values_at(d).conj() * m))


def norm(f: CylFn, measure: Measure) -> float:
    return float(np.sqrt(inner(f, f, measure).real))


# ---------------------------------------------------------------------------
# conditional measures on shift fibers


@dataclass(frozen=True)
class ConditionalSystem:
    """Conditional weights on the preimage fibers ``σ^{-1}([w])``, ``|w| = depth``.

    ``weights[i]`` belongs to the ``i``-th admissible word ``a w`` of length
    ``depth + 1`` and equals ``μ([a w]) / Σ_b μ([b w])``.
    """

    model: ShiftModel
    depth: int
    weights: np.ndarray

    def fiber(self, w: Sequence[int]) -> dict:
        w = tuple(w)
        out = {}
        for a in range(self.model.alphabet_size):
            if self.model.is_admissible((a,) + w):
                out[a] = float(self.weights[self.model.index((a,) + w)])
        return out

    def fiber_totals(self) -> np.ndarray:
        d1 = self.depth + 1
        return fiber_sum(self.weights, self.model.tail_index(d1), self.model.dim(self.depth)).real


def fiber_system(model: ShiftModel, measure: Measure, d: int) -> ConditionalSystem:
    """Rokhlin conditional weights on the fibers over depth-``d`` cylinders."""
    model.check_depth(d + 1)
    if d + 1 < measure.min_transfer_depth:
        raise DepthError(f"fiber weights over depth-{d} words are not determined by the base word; "
                         f"need d ≥ {measure.min_transfer_depth - 1}")
    num = measure.masses(d + 1)
    tail = model.tail_index(d + 1)
    den = fiber_sum(num, tail, model.dim(d)).real
    if np.any(den <= 0):
        raise MeasureError(f"measure not backward quasi-invariant at resolution {d}")
    return ConditionalSystem(model, d, _readonly(num / den[tail]))


class Measurability(NamedTuple):
    measurable: bool
    deviation: float
    factor: CylFn | None


def is_sigma_inv_measurable(f: CylFn, tol: float = DEFAULT_TOL) -> Measurability:
    """Test whether ``f = g ∘ σ`` for some ``g``; return ``g`` when it does."""
    if f.depth == 0:
        return Measurability(True, 0.0, f)
    model = f.model
    if f.depth < model.min_transfer_depth:
        f = f.promote(model.min_transfer_depth)
    tail = model.tail_index(f.depth)
    n = model.dim(f.depth - 1)
    counts = np.bincount(tail, minlength=n)
    g = fiber_sum(f.values, tail, n) / counts
    dev = float(np.max(np.abs(f.values - g[tail])))
    ok = dev <= tol
    return Measurability(ok, dev, CylFn(model, f.depth - 1, g) if ok else None)


def random_words(model: ShiftModel, d: int, rng, k: int) -> Iterable[tuple]:
    words = model.words(d)
    for i in rng.integers(0, len(words), size=k):
        yield words[i]
