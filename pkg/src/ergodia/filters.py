"""Generalized wavelet filters and the loop group acting on them.

A filter bank ``m = (m_0, …, m_{L-1})`` lives either in the weighted space
(``T_i = M_{m_i} S_φ`` satisfy the Cuntz relations) or in the unweighted
space (``φ = 1`` in the formulas, no Markovian requirement on the constant).
Measurable unitary-valued functions ``G`` act by

    m^G_i = Σ_j (conj(g_ji) ∘ σ) m_j,

freely and transitively; :func:`connect` recovers the unique ``G`` between
two banks.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.stats import unitary_group

from .cuntz import CuntzReport, completeness_matrix, cuntz_conditions
from .kernels import fiber_gram_schmidt
from .markovian import is_markovian
from .operators import adjoint_op, opdist
from .symspace import DEFAULT_TOL, CylFn, DepthError, Measure, ShiftModel

UNITARY_TOL = 1e-10


@dataclass(frozen=True)
class FilterBank:
    """Ordered filters over one model and measure.

    ``phi=None`` marks the unweighted space; otherwise ``phi`` is the
    Markovian weight of ``S_φ``.
    """

    filters: tuple
    model: ShiftModel
    measure: Measure
    phi: CylFn | None = None
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        fs = tuple(self.filters)
        if not fs:
            raise ValueError("a filter bank needs at least one filter")
        for m in fs:
            if not self.model.same_shift(m.model):
                raise ValueError("filters live on a different shift model")
        object.__setattr__(self, "filters", fs)

    @property
    def space(self) -> str:
        return "sigma" if self.phi is None else "phi"

    @property
    def depth(self) -> int:
        return max(m.depth for m in self.filters)

    def __len__(self):
        return len(self.filters)

    def __getitem__(self, i):
        return self.filters[i]

    def __iter__(self):
        return iter(self.filters)

    def weight(self) -> CylFn:
        return CylFn.constant(self.model) if self.phi is None else self.phi

    def with_filters(self, filters) -> "FilterBank":
        return FilterBank(tuple(filters), self.model, self.measure, self.phi)

    def sup_dist(self, other: "FilterBank") -> float:
        if len(self) != len(other):
            return float("inf")
        return max(a.sup_dist(b) for a, b in zip(self, other))

    def membership(self, tol: float = DEFAULT_TOL) -> CuntzReport:
        """Cuntz report for ``T_i = M_{m_i} S_φ`` (``φ = 1`` in the unweighted space)."""
        return cuntz_conditions(self.filters, self.weight(), self.model, self.measure, tol,
                                certify=self.phi is not None)

    def is_member(self, tol: float = DEFAULT_TOL) -> bool:
        return self.membership(tol).verdict

    def to_json(self) -> dict:
        return {
            "space": self.space,
            "phi": None if self.phi is None else self.phi.to_json(),
            "filters": [m.to_json() for m in self.filters],
        }

    @classmethod
    def from_json(cls, model, measure, data) -> "FilterBank":
        phi = data.get("phi")
        return cls(tuple(CylFn.from_json(model, f) for f in data["filters"]), model, measure,
                   None if phi is None else CylFn.from_json(model, phi))


def _unitary_defect(mats: np.ndarray) -> float:
    L = mats.shape[-1]
    prod = np.einsum("wki,wkj->wij", mats.conj(), mats)
    return float(np.max(np.abs(prod - np.eye(L)))) if mats.size else 0.0


class LoopElement:
    """Unitary-matrix-valued cylinder function ``w ↦ G(w)`` at depth ``depth``.

    ``matrices[k]`` is ``G`` on the ``k``-th admissible word of length ``depth``.
    Pass ``check=False`` to build a non-unitary fiber map on purpose.
    """

    def __init__(self, model: ShiftModel, depth: int, matrices, check: bool = True):
        depth = model.check_depth(depth)
        G = np.array(matrices, dtype=np.complex128)
        if G.ndim == 2:
            G = np.broadcast_to(G, (model.dim(depth),) + G.shape).copy()
        if G.ndim != 3 or G.shape[0] != model.dim(depth) or G.shape[1] != G.shape[2]:
            raise ValueError(f"expected shape ({model.dim(depth)}, L, L), got {G.shape}")
        self.unitarity_defect = _unitary_defect(G)
        if check and self.unitarity_defect > UNITARY_TOL:
            raise ValueError(f"loop element is not unitary (defect {self.unitarity_defect:.3g})")
        G.setflags(write=False)
        self.model = model
        self.depth = depth
        self.matrices = G

    @property
    def size(self) -> int:
        return self.matrices.shape[1]

    @classmethod
    def constant(cls, model, U, check=True) -> "LoopElement":
        return cls(model, 0, np.asarray(U)[None], check)

    @classmethod
    def identity(cls, model, L: int) -> "LoopElement":
        return cls.constant(model, np.eye(L))

    @classmethod
    def random(cls, model, L: int, depth: int, rng) -> "LoopElement":
        n = model.dim(depth)
        mats = unitary_group.rvs(L, size=n, random_state=rng) if L > 1 else \
            np.exp(2j * np.pi * rng.random(n))[:, None, None]
        return cls(model, depth, np.reshape(mats, (n, L, L)))

    @classmethod
    def rotation(cls, model, theta: float) -> "LoopElement":
        c, s = np.cos(theta), np.sin(theta)
        return cls.constant(model, [[c, -s], [s, c]])

    def promote(self, d: int) -> "LoopElement":
        if d < self.depth:
            raise DepthError(f"cannot promote depth {self.depth} down to {d}")
        G = self.matrices
        for k in range(self.depth + 1, d + 1):
            G = G[self.model.trunc_index(k)]
        return LoopElement(self.model, d, G, check=False)

    def entry(self, i: int, j: int) -> CylFn:
        return CylFn(self.model, self.depth, self.matrices[:, i, j])

    def __matmul__(self, other: "LoopElement") -> "LoopElement":
        """Pointwise product ``(GH)(w) = G(w) H(w)``."""
        d = max(self.depth, other.depth)
        A, B = self.promote(d).matrices, other.promote(d).matrices
        return LoopElement(self.model, d, A @ B, check=False)

    def inverse(self) -> "LoopElement":
        return LoopElement(self.model, self.depth, np.conj(np.swapaxes(self.matrices, 1, 2)), check=False)

    def reduce(self, tol: float = 1e-12) -> "LoopElement":
        L = self.size
        d = max(self.entry(i, j).reduce(tol).depth for i in range(L) for j in range(L))
        G = np.empty((self.model.dim(d), L, L), dtype=np.complex128)
        for i in range(L):
            for j in range(L):
                G[:, i, j] = self.entry(i, j).reduce(tol).values_at(d)
        return LoopElement(self.model, d, G, check=False)

    def sup_dist(self, other: "LoopElement") -> float:
        d = max(self.depth, other.depth)
        return float(np.max(np.abs(self.promote(d).matrices - other.promote(d).matrices)))

    def to_json(self) -> dict:
        return {
            "depth": self.depth,
            "matrices": [[[[float(z.real), float(z.imag)] for z in row] for row in M]
                         for M in self.matrices],
        }

    @classmethod
    def from_json(cls, model, data, check=True) -> "LoopElement":
        M = np.array(data["matrices"], dtype=np.float64)
        return cls(model, int(data["depth"]), M[..., 0] + 1j * M[..., 1], check)

    def __repr__(self):
        return f"LoopElement(L={self.size}, depth={self.depth})"


def loop_act(G: LoopElement, bank: FilterBank, verify: bool = False,
             tol: float = DEFAULT_TOL) -> FilterBank:
    """``m^G_i = Σ_j (conj(g_ji)∘σ) m_j``.

    With ``verify=True`` the input must be a member and the output is
    re-verified; a failure raises ``RuntimeError``.
    """
    L = len(bank)
    if G.size != L:
        raise ValueError(f"loop element of size {G.size} cannot act on {L} filters")
    model = bank.model
    d = model.check_depth(max(G.depth + 1, bank.depth))
    if verify and not bank.is_member(tol):
        raise ValueError("input bank does not satisfy the Cuntz relations")
    shifted = [[G.entry(j, i).conj().compose_shift().values_at(d) for j in range(L)] for i in range(L)]
    vals = [m.values_at(d) for m in bank]
    out = [CylFn(model, d, sum(shifted[i][j] * vals[j] for j in range(L))).reduce()
           for i in range(L)]
    result = bank.with_filters(out)
    if verify and not result.is_member(tol):
        raise RuntimeError("loop action left the filter set")
    return result


def loop_compose_law(G: LoopElement, H: LoopElement, bank: FilterBank) -> float:
    """``‖(m^G)^H - m^{GH}‖_∞``."""
    return loop_act(H, loop_act(G, bank)).sup_dist(loop_act(G @ H, bank))


def phi_map(bank: FilterBank) -> FilterBank:
    """``m_i ↦ √φ m_i`` from the weighted to the unweighted space."""
    if bank.phi is None:
        return bank
    if np.any(bank.phi.real <= 0):
        raise ValueError("phi has zeros; the map is not invertible")
    r = bank.phi.sqrt()
    return FilterBank(tuple(r * m for m in bank), bank.model, bank.measure, None)


def phi_unmap(bank: FilterBank, phi: CylFn, tol: float = DEFAULT_TOL) -> FilterBank:
    """Inverse of :func:`phi_map` for a Markovian ``phi``."""
    if bank.phi is not None:
        raise ValueError("bank is already weighted")
    cert = is_markovian(phi, bank.model, bank.measure, tol)
    if not cert.valid or np.any(phi.real <= 0):
        raise ValueError("phi must be strictly positive and Markovian")
    r = phi.sqrt()
    return FilterBank(tuple(m / r for m in bank), bank.model, bank.measure, phi)


def phi_equivariance(bank: FilterBank, G: LoopElement) -> float:
    """``‖Φ(m^G) - (Φm)^G‖_∞``."""
    return phi_map(loop_act(G, bank)).sup_dist(loop_act(G, phi_map(bank)))


def connect(m: FilterBank, n: FilterBank, tol: float = DEFAULT_TOL) -> LoopElement:
    """The loop element ``G`` with ``m^G = n``: ``g_ij = S*_σ(m_i conj(n_j))``.

    Weighted banks are first carried to the unweighted space.  Raises
    ``ValueError`` if the recovered ``G`` is not unitary or does not map
    ``m`` onto ``n`` (one of the inputs is then not a filter bank).
    """
    if not m.measure.same_as(n.measure):
        raise ValueError("banks are defined over different measures")
    if m.space != n.space or (m.phi is not None and m.phi.sup_dist(n.phi) > tol):
        raise ValueError("banks use different weights")
    if len(m) != len(n):
        raise ValueError("banks have different sizes")
    a, b = phi_map(m), phi_map(n)
    model, L = m.model, len(m)
    d = max(a.depth, b.depth, m.measure.min_transfer_depth)
    Sst = adjoint_op(model, m.measure, d)
    G = np.empty((model.dim(d - 1), L, L), dtype=np.complex128)
    for i in range(L):
        for j in range(L):
            G[:, i, j] = Sst((a[i] * b[j].conj()).promote(d)).values
    loop = LoopElement(model, d - 1, G, check=False)
    if loop.unitarity_defect > max(tol, UNITARY_TOL):
        raise ValueError(f"connecting map is not unitary (defect {loop.unitarity_defect:.3g})")
    loop = LoopElement(model, loop.depth, loop.matrices).reduce()
    miss = loop_act(loop, m).sup_dist(n)
    if miss > tol:
        raise ValueError(f"connecting map does not carry m onto n (deviation {miss:.3g})")
    return loop


def _raw_connect(m: FilterBank, n: FilterBank, weight) -> LoopElement:
    model, mu, L = m.model, m.measure, len(m)
    d = max(m.depth, n.depth, weight.depth, mu.min_transfer_depth)
    Sst = adjoint_op(model, mu, d)
    G = np.empty((model.dim(d - 1), L, L), dtype=np.complex128)
    for i in range(L):
        for j in range(L):
            G[:, i, j] = Sst((weight * m[i] * n[j].conj()).promote(d)).values
    return LoopElement(model, d - 1, G, check=False)


def connect_variants(m: FilterBank, n: FilterBank) -> dict:
    """Miss ``‖m^G - n‖`` for the literal candidate formulas of the connecting map.

    ``"sigma"`` uses ``g_ij = S*_σ(m_i conj(n_j))`` on the weighted filters,
    ``"phi"`` uses ``S*_φ(m_i conj(n_j)) = S*_σ(√φ m_i conj(n_j))`` and
    ``"phi_map"`` is ``S*_σ(φ m_i conj(n_j))``, the route taken by
    :func:`connect`.  All three coincide for unweighted banks.
    """
    one = CylFn.constant(m.model)
    phi = one if m.phi is None else m.phi
    out = {}
    for key, w in (("sigma", one), ("phi", phi.sqrt()), ("phi_map", phi)):
        G = _raw_connect(m, n, w)
        out[key] = {"miss": loop_act(G, m).sup_dist(n), "unitarity": G.unitarity_defect}
    return out


def transitivity_defect(m: FilterBank, H: LoopElement, tol: float = DEFAULT_TOL) -> dict:
    """Freeness ``connect(m, m^H) = H`` and transitivity ``m^{connect(m, n)} = n``."""
    n = loop_act(H, m)
    G = connect(m, n, tol)
    return {"freeness": G.sup_dist(H), "transitivity": loop_act(G, m).sup_dist(n)}


# ---------------------------------------------------------------------------
# cyclic construction


def fiber_weights(model: ShiftModel, measure: Measure, phi: CylFn | None = None,
                  depth: int | None = None) -> np.ndarray:
    """``φ(aw) μ([aw]) / μ([w])`` over words ``aw`` of length ``depth``."""
    d = model.depth if depth is None else depth
    w = measure.masses(d) / measure.masses(d - 1)[model.tail_index(d)]
    if phi is not None:
        w = w * phi.values_at(d).real
    return w


def normalize_cyclic(h: CylFn, model: ShiftModel, measure: Measure, phi: CylFn | None = None) -> CylFn:
    """``m = h (g∘σ)`` with ``g = S*_σ(φ|h|²)^{-1/2}``, so ``S*_σ(φ|m|²) = 1``."""
    d = max(h.depth, 0 if phi is None else phi.depth, measure.min_transfer_depth)
    weight = h.abs2() if phi is None else phi * h.abs2()
    s = adjoint_op(model, measure, d)(weight.promote(d))
    if np.any(s.real <= 0):
        raise ValueError("h vanishes on a whole fiber")
    return h * (1.0 / s.sqrt()).compose_shift()


def _compact_fibers(q: np.ndarray, weights: np.ndarray, index: np.ndarray, n_out: int) -> np.ndarray:
    """Move the k-th surviving generator of every fiber into row k."""
    alive = np.array([np.bincount(index, weights=np.abs(row) ** 2 * weights, minlength=n_out) > 0
                      for row in q])
    slot = np.cumsum(alive, axis=0) - 1
    out = np.zeros_like(q)
    for i in range(q.shape[0]):
        rows = slot[i][index]
        keep = alive[i][index]
        out[rows[keep], np.nonzero(keep)[0]] = q[i, keep]
    return out


def cyclic_construct(model: ShiftModel, measure: Measure, phi: CylFn | None = None,
                     generators=None, tol: float = DEFAULT_TOL) -> FilterBank:
    """Fiberwise orthonormal filters from lexicographic letter indicators.

    Each fiber ``σ^{-1}([w])``, ``|w| = D-1``, carries the inner product
    ``⟨u, v⟩_w = S*_σ(φ u conj(v))(w)``; the generators (default
    ``1[x_1 = a]``) are orthonormalized fiber by fiber.  On a full shift
    this yields ``N`` filters satisfying the Cuntz relations; on a
    subshift the ranks vary and the result is a module frame whose ranks
    are recorded in ``meta["ranks"]``.
    """
    if phi is None and not measure.is_invariant(tol):
        raise ValueError("unweighted construction needs an invariant measure; pass a Markovian phi")
    if phi is not None:
        cert = is_markovian(phi, model, measure, tol)
        if not cert.valid:
            raise ValueError("phi is not Markovian for this measure")
    D = model.depth
    if generators is None:
        generators = [CylFn.letter_indicator(model, 1, a) for a in range(model.alphabet_size)]
    gens = np.array([g.values_at(D) for g in generators])
    q, ranks = fiber_gram_schmidt(gens, fiber_weights(model, measure, phi, D),
                                  model.tail_index(D), model.dim(D - 1))
    q = _compact_fibers(np.asarray(q), fiber_weights(model, measure, phi, D), model.tail_index(D),
                        model.dim(D - 1))
    filters = [CylFn(model, D, row).reduce() for row in q[:max(1, int(ranks.max()))]]
    meta = {"ranks": ranks.astype(int).tolist(), "rank_sum": int(ranks.sum()),
            "dim_V": model.dim(D), "constant_fiber": model.constant_fiber}
    return FilterBank(tuple(filters), model, measure, phi, meta)


def frame_report(bank: FilterBank, tol: float = DEFAULT_TOL) -> dict:
    """Completeness of a (possibly variable-rank) cyclic frame.

    Reports the rank sum against ``dim V_D``, the reconstruction defect of
    ``Σ m_i 𝔼(conj(m_i) f) = f`` and per-fiber orthonormality where a filter
    is supported.
    """
    model, measure = bank.model, bank.measure
    phi = bank.weight()
    D = model.depth
    C = completeness_matrix(bank.filters, phi, model, measure)
    recon = float(np.max(np.abs(C - np.eye(C.shape[0]))))
    Sst = adjoint_op(model, measure, D)
    ranks = np.asarray(bank.meta.get("ranks", []))
    ortho = 0.0
    for i, mi in enumerate(bank):
        for j, mj in enumerate(bank):
            v = Sst((phi * mj.conj() * mi).promote(D)).values
            target = np.zeros_like(v)
            if i == j:
                target = (Sst((phi * mi.abs2()).promote(D)).values.real > 0.5).astype(float)
            ortho = max(ortho, float(np.max(np.abs(v - target))))
    rank_sum = int(ranks.sum()) if ranks.size else None
    return {
        "ranks": ranks.tolist(),
        "rank_sum": rank_sum,
        "dim_V": model.dim(D),
        "complete": rank_sum == model.dim(D) and recon <= tol,
        "reconstruction": recon,
        "partial_orthonormality": ortho,
    }


def sum_ranges_defect(bank: FilterBank) -> float:
    """``‖Σ_i T_i T_i* - I‖`` regardless of other conditions."""
    C = completeness_matrix(bank.filters, bank.weight(), bank.model, bank.measure)
    return opdist(C, np.eye(C.shape[0]))


def cyclic_orthogonality(bank: FilterBank, rng, trials: int = 10) -> float:
    """``max |⟨(γ₁∘σ) m_i, (γ₂∘σ) m_j⟩|`` for random γ and ``i ≠ j``."""
    model, measure = bank.model, bank.measure
    D = model.depth
    phi = bank.weight()
    worst = 0.0
    r = phi.sqrt()
    for _ in range(trials):
        g1 = CylFn.random(model, D - 1, rng).compose_shift()
        g2 = CylFn.random(model, D - 1, rng).compose_shift()
        for i, mi in enumerate(bank):
            for j, mj in enumerate(bank):
                if i != j:
                    u = (g1 * r * mi).values_at(D)
                    v = (g2 * r * mj).values_at(D)
                    worst = max(worst, abs(np.sum(u * v.conj() * measure.masses(D))))
    return float(worst)


def corrupt(bank: FilterBank, index: int = 0, scale: float = 1.5) -> FilterBank:
    """Scale one filter by a constant: the fiber map ``diag(1, …, scale, …, 1)`` is not unitary."""
    L = len(bank)
    M = np.eye(L, dtype=np.complex128)
    M[index, index] = scale
    return loop_act(LoopElement.constant(bank.model, M, check=False), bank)
