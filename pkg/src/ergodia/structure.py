"""Global structure of the shift on the finite model.

* Wold decomposition of the isometry ``S_σ`` inside ``V_D``.
* Exactness and ergodicity probes at finite resolution.
* Partial recurrence sums ``Σ (f∘σ^n) ω_n``.
* A truncated solenoid (natural extension) with the embedding
  ``V_0 f = f∘π_0`` and the induced operator ``U = V_0 S_σ V_0*``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import null_space, orth, svd

from .operators import adjoint_op, compose_op, promote_op, rn_data, rokhlin_transfer
from .report import holds, info
from .symspace import DEFAULT_TOL, CylFn, DepthError, Measure, ShiftModel, fiber_system

RANK_TOL = 1e-10


# ---------------------------------------------------------------------------
# σ^{-n}(B)-measurable subspaces of V_D


def _find(parent, i):
    while parent[i] != i:
        parent[i] = parent[parent[i]]
        i = parent[i]
    return i


def sigma_n_classes(model: ShiftModel, n: int) -> np.ndarray:
    """Label depth-``D`` words by the classes of ``u ~ u'`` iff ``σ^n`` can identify them.

    Two words are identified when they admit extensions ``x ∈ [u]``,
    ``x' ∈ [u']`` with ``σ^n x = σ^n x'``.  A function in ``V_D`` factors
    through ``σ^n`` exactly when it is constant on the transitive closure,
    so the number of classes is the dimension of the ``σ^{-n}(B)``-measurable
    part of ``V_D``.
    """
    D = model.depth
    W = model.letters(D)
    m = W.shape[0]
    parent = list(range(m))

    def union(i, j):
        a, b = _find(parent, i), _find(parent, j)
        if a != b:
            parent[max(a, b)] = min(a, b)

    if n < D:
        keys = {}
        for i, row in enumerate(W):
            keys.setdefault(tuple(row[n:]), []).append(i)
        groups = keys.values()
    else:
        A = model.admissible.astype(np.int64)
        reach = np.linalg.matrix_power(A, n - D + 1) > 0  # last letter -> letter at n+1
        groups = []
        for c in range(model.alphabet_size):
            groups.append([i for i, row in enumerate(W) if reach[row[-1], c]])
    for g in groups:
        for j in g[1:]:
            union(g[0], j)
    roots = [_find(parent, i) for i in range(m)]
    _, labels = np.unique(roots, return_inverse=True)
    return labels


def measurable_basis(model: ShiftModel, n: int) -> np.ndarray:
    """Class-indicator basis (columns) of the ``σ^{-n}(B)``-measurable part of ``V_D``."""
    labels = sigma_n_classes(model, n)
    B = np.zeros((labels.size, labels.max() + 1))
    B[np.arange(labels.size), labels] = 1.0
    return B


def _onb(A: np.ndarray, sqrt_w: np.ndarray) -> np.ndarray:
    """Orthonormal basis (Euclidean, weighted coordinates) of the range of ``A``."""
    if A.size == 0 or A.shape[1] == 0:
        return np.zeros((A.shape[0], 0))
    return orth(sqrt_w[:, None] * A, rcond=RANK_TOL)


def _intersect(Q1: np.ndarray, Q2: np.ndarray) -> np.ndarray:
    """Intersection of two subspaces from their principal angles."""
    if Q1.shape[1] == 0 or Q2.shape[1] == 0:
        return np.zeros((Q1.shape[0], 0))
    U, s, _ = svd(Q1.conj().T @ Q2)
    k = int(np.sum(s >= 1.0 - RANK_TOL))
    return Q1 @ U[:, :k]


def _complement(Q_big: np.ndarray, Q_small: np.ndarray) -> np.ndarray:
    if Q_big.shape[1] == 0:
        return Q_big
    P = Q_big - Q_small @ (Q_small.conj().T @ Q_big) if Q_small.shape[1] else Q_big
    if not np.any(np.abs(P) > RANK_TOL):
        return np.zeros((Q_big.shape[0], 0))
    return orth(P, rcond=RANK_TOL)


# ---------------------------------------------------------------------------
# Wold decomposition


@dataclass
class WoldReport:
    """Unitary part and shift layers of ``S_σ`` restricted to ``V_D``.

    Bases are orthonormal in ``L²(μ)`` and stored as value columns at depth ``D``.
    """

    dim_H_infinity: int
    dim_shift_layers: list
    dim_V: int
    unitary_part: np.ndarray
    unitary_defect: float
    orthogonality: float
    norm_preservation: float
    layer_annihilation: float
    H_infinity: np.ndarray = field(repr=False, default=None)
    layers: list = field(repr=False, default_factory=list)

    @property
    def complete(self) -> bool:
        return self.dim_H_infinity + sum(self.dim_shift_layers) == self.dim_V

    def checks(self, tol: float = DEFAULT_TOL) -> list:
        return [
            holds("structure.wold_completeness", "dim ℋ_∞ + Σ dim S^k N = dim V",
                  abs(self.dim_V - self.dim_H_infinity - sum(self.dim_shift_layers)), 0.0),
            holds("structure.wold_orthogonality", "ℋ_∞ ⊥ S^k N ⊥ S^l N", self.orthogonality, tol),
            holds("structure.wold_norm_criterion", "‖(S*)^n f‖ = ‖f‖ on ℋ_∞", self.norm_preservation, tol),
            holds("structure.wold_layers", "(S*)^{k+1} vanishes on S^k N", self.layer_annihilation, tol),
            holds("structure.wold_unitary_part", "S restricted to ℋ_∞ is unitary", self.unitary_defect, tol),
        ]

    def to_json(self) -> dict:
        return {
            "dim_H_infinity": self.dim_H_infinity,
            "dim_shift_layers": list(self.dim_shift_layers),
            "dim_V": self.dim_V,
            "complete": self.complete,
            "unitary_part": [[[float(z.real), float(z.imag)] for z in row] for row in self.unitary_part],
            "unitary_defect": self.unitary_defect,
            "orthogonality": self.orthogonality,
            "norm_preservation": self.norm_preservation,
            "layer_annihilation": self.layer_annihilation,
        }


def wold(model: ShiftModel, measure: Measure, depth: int | None = None,
         tol: float = DEFAULT_TOL) -> WoldReport:
    """Wold decomposition ``V_D = ℋ_∞ ⊕ ⊕_k S^k N`` with ``N = ker S*``.

    ``ℋ_∞`` is the intersection of the ranges of ``S^n``, ``n ≤ depth``,
    computed by successive principal-angle intersections.
    """
    if not measure.is_invariant(tol):
        raise ValueError("S_σ is an isometry only for invariant measures")
    D = model.depth
    depth = D if depth is None else int(depth)
    if depth < 0:
        raise DepthError("negative Wold depth")
    w = measure.masses(D)
    sw = np.sqrt(w)
    ranges = [_onb(measurable_basis(model, n), sw) for n in range(depth + 1)]
    nested = [ranges[0]]
    for n in range(1, depth + 1):
        nested.append(_intersect(nested[-1], ranges[n]))
    H = nested[-1]
    layers = [_complement(nested[k], nested[k + 1]) for k in range(depth)]

    blocks = [H] + layers
    ortho = 0.0
    for a in range(len(blocks)):
        for b in range(a + 1, len(blocks)):
            if blocks[a].shape[1] and blocks[b].shape[1]:
                ortho = max(ortho, float(np.max(np.abs(blocks[a].conj().T @ blocks[b]))))

    # back to function values
    to_vals = lambda Q: Q / sw[:, None]  # noqa: E731
    n_max = min(depth, D - measure.min_transfer_depth + 1)
    adj = []
    op = None
    for n in range(1, n_max + 1):
        step = adjoint_op(model, measure, D - n + 1)
        op = step if op is None else op.then(step)
        adj.append(op)

    def norms(F, d):
        return np.sqrt(np.sum(np.abs(F) ** 2 * measure.masses(d)[:, None], axis=0))

    Hv = to_vals(H)
    norm_dev = 0.0
    for n, op in enumerate(adj, start=1):
        if Hv.shape[1]:
            norm_dev = max(norm_dev, float(np.max(np.abs(norms(op.matrix @ Hv, D - n) - 1.0))))
    annihil = 0.0
    for k, Lk in enumerate(layers):
        if k < len(adj) and Lk.shape[1]:
            annihil = max(annihil, float(np.max(np.abs(adj[k].matrix @ to_vals(Lk)))))

    # S on ℋ_∞: compress S* (promoted back to depth D) to the ℋ_∞ basis; its adjoint is S
    if H.shape[1] and D >= measure.min_transfer_depth:
        back = adjoint_op(model, measure, D).then(promote_op(model, D - 1, D))
        M_star = H.conj().T @ (sw[:, None] * (back.matrix @ Hv))
        M = M_star.conj().T
        udef = float(np.max(np.abs(M.conj().T @ M - np.eye(M.shape[0]))))
        # ℋ_∞ must be invariant under S*
        leak = back.matrix @ Hv
        leak_w = sw[:, None] * leak
        udef = max(udef, float(np.max(np.abs(leak_w - H @ (H.conj().T @ leak_w)))))
    else:
        M = np.zeros((0, 0), dtype=np.complex128)
        udef = 0.0

    return WoldReport(
        dim_H_infinity=int(H.shape[1]),
        dim_shift_layers=[int(L.shape[1]) for L in layers],
        dim_V=model.dim(D),
        unitary_part=M,
        unitary_defect=udef,
        orthogonality=ortho,
        norm_preservation=norm_dev,
        layer_annihilation=annihil,
        H_infinity=Hv,
        layers=[to_vals(L) for L in layers],
    )


# ---------------------------------------------------------------------------
# exactness / ergodicity / recurrence


def exactness_probe(model: ShiftModel, depth: int | None = None) -> dict:
    """Dimensions of the ``σ^{-n}(B)``-measurable subspaces of ``V_D``, ``n = 0..depth``.

    Exactness at resolution ``D`` shows up as dimensions decaying to 1.
    Dimensions are computed twice: by class counting and by matrix rank.
    """
    depth = model.depth if depth is None else int(depth)
    dims = [int(sigma_n_classes(model, n).max() + 1) for n in range(depth + 1)]
    ranks = [int(np.linalg.matrix_rank(measurable_basis(model, n))) for n in range(depth + 1)]
    if dims != ranks:
        raise RuntimeError("class count and rank disagree")
    strict = all(a > b for a, b in zip(dims, dims[1:]) if a > 1)
    return {"dims": dims, "exact": dims[-1] == 1, "decreasing": strict}


def ergodicity_probe(model: ShiftModel, measure: Measure, tol: float = 1e-10) -> dict:
    """Dimension of ``{f ∈ V_{D-1} : f∘σ = f}`` and of the eigenvalue-1 space of ``R∘promote``."""
    D = model.depth
    S = compose_op(model, measure, D - 1).matrix
    P = promote_op(model, D - 1, D).matrix
    fixed = null_space(S - P, rcond=tol).shape[1]
    R = rokhlin_transfer(model, measure, D).matrix
    K = R @ P
    perron = null_space(K - np.eye(K.shape[0]), rcond=tol).shape[1]
    return {"fixed_dim": int(fixed), "perron_dim": int(perron), "ergodic": fixed == 1}


def recurrence_partial_sums(model: ShiftModel, measure: Measure, f: CylFn, n_max: int) -> list:
    """``[Σ_{n≤k} (f∘σ^n) ω_n for k = 0..n_max]`` with ``ω_0 = 1``."""
    if not f.is_real() or np.any(f.real < 0):
        raise ValueError("recurrence sums need a nonnegative function")
    if n_max > model.depth - f.depth:
        raise DepthError(f"n_max must be ≤ D - depth(f) = {model.depth - f.depth}")
    data = rn_data(model, measure, max(1, min(n_max, model.depth - max(1, measure.memory))))
    sums = [f]
    total = f
    for n in range(1, n_max + 1):
        if n not in data.omega_n:
            raise DepthError(f"ω_{n} needs depth budget > {n}")
        total = total + f.compose_shift(n) * data.omega_n[n]
        sums.append(total)
    return sums


# ---------------------------------------------------------------------------
# truncated solenoid


@dataclass
class SolenoidModel:
    """Truncated natural extension ``(x_0, …, x_d)`` with ``σ(x_{i+1}) = x_i``.

    A state is an admissible word ``u = a_d … a_1 w`` of length ``d + D``:
    ``x_i`` is the tail ``u[d-i:]`` and ``π_0(u) = w`` the last ``D`` letters.
    ``σ̂`` keeps the word and moves the split point (``x'_0 = σ x_0`` is known
    to depth ``D-1``), so it is a bijection between truncations; ``τ`` is its
    inverse.  The measure ``𝕡`` is ``μ(w)`` times the conditional fiber
    weights of the prefix letters.
    """

    model: ShiftModel
    measure: Measure
    d_sol: int
    ext_model: ShiftModel
    states: np.ndarray
    proj0: np.ndarray
    proj0_shifted: np.ndarray
    prob: np.ndarray
    checks: list = field(default_factory=list)
    V0: np.ndarray = field(repr=False, default=None)
    U: np.ndarray = field(repr=False, default=None)

    @property
    def n_states(self) -> int:
        return self.states.shape[0]

    def to_json(self) -> dict:
        return {
            "d_sol": self.d_sol,
            "depth": self.model.depth,
            "n_states": self.n_states,
            "measure_extension": "conditional fiber weights",
            "checks": [c.to_json() for c in self.checks],
        }


def _word_index(model, d, words):
    N = model.alphabet_size
    codes = words.astype(np.int64) @ (N ** np.arange(d - 1, -1, -1, dtype=np.int64))
    ref = model.letters(d).astype(np.int64) @ (N ** np.arange(d - 1, -1, -1, dtype=np.int64))
    return np.searchsorted(ref, codes)


def solenoid_build(model: ShiftModel, measure: Measure, d_sol: int, total_budget: int = 14,
                   tol: float = DEFAULT_TOL) -> SolenoidModel:
    D = model.depth
    if d_sol < 1:
        raise DepthError("solenoid truncation needs d_sol ≥ 1")
    if d_sol + D > total_budget:
        raise DepthError(f"d_sol + D = {d_sol + D} exceeds the solenoid budget {total_budget}")
    E = d_sol + D
    ext = model.with_depth(E)
    mu = measure.on(ext)
    states = ext.letters(E)
    proj0 = _word_index(model, D, states[:, d_sol:])
    proj0_shifted = _word_index(model, D - 1, states[:, d_sol + 1:])

    # 𝕡(u) = μ(w) Π_i c(a_i | a_{i-1} … a_1 w)
    prob = measure.masses(D)[proj0].astype(np.float64)
    for k in range(D + 1, E + 1):
        cs = fiber_system(ext, mu, k - 1)
        idx = _word_index(ext, k, states[:, E - k:])
        prob = prob * cs.weights[idx]

    # factor identity π_0∘σ̂ = σ∘π_0, purely combinatorial
    shifted_base = model.tail_index(D)[proj0]
    factor_dev = float(np.count_nonzero(shifted_base != proj0_shifted))

    # 𝕡∘π_0^{-1} = μ
    marg = np.zeros(model.dim(D))
    np.add.at(marg, proj0, prob)
    marg_dev = float(np.max(np.abs(marg - measure.masses(D))))

    # V_0 on V_D and V_{D-1}
    n = states.shape[0]
    V0 = np.zeros((n, model.dim(D)))
    V0[np.arange(n), proj0] = 1.0
    V0_low = np.zeros((n, model.dim(D - 1)))
    V0_low[np.arange(n), proj0_shifted] = 1.0
    V0_prev = np.zeros((n, model.dim(D - 1)))
    V0_prev[np.arange(n), _word_index(model, D - 1, states[:, d_sol:E - 1])] = 1.0
    gram = V0.T @ (prob[:, None] * V0)
    gram_dev = float(np.max(np.abs(gram - np.diag(measure.masses(D)))))

    # U = V_0 S_σ V_0*, with V_0* the 𝕡-adjoint of the depth-(D-1) embedding
    S = compose_op(model, measure, D - 1).matrix
    V0_prev_star = (V0_prev.T * prob[None, :]) / measure.masses(D - 1)[:, None]
    U = V0 @ S @ V0_prev_star
    # U acts on range(V_0) as composition with σ̂
    comp_dev = float(np.max(np.abs(U @ V0_prev - V0_low)))
    UV = U @ V0_prev
    iso = V0_prev.T @ (prob[:, None] * V0_prev)
    iso_img = UV.T @ (prob[:, None] * UV)
    iso_dev = float(np.max(np.abs(iso_img - iso)))
    invariant = measure.is_invariant(tol)

    checks = [
        holds("solenoid.factor_identity", "π_0∘σ̂ = σ∘π_0", factor_dev, 0.0),
        holds("solenoid.marginal", "𝕡∘π_0^{-1} = μ", marg_dev, tol),
        holds("solenoid.V0_isometry", "⟨V_0 f, V_0 g⟩_𝕡 = ⟨f, g⟩_μ", gram_dev, tol),
        holds("solenoid.U_is_composition", "U V_0 f = (V_0 f)∘σ̂", comp_dev, tol),
    ]
    if invariant:
        checks.append(holds("solenoid.U_isometry", "U isometric on range(V_0)", iso_dev, tol))
    else:
        checks.append(info("solenoid.U_isometry", "U isometric on range(V_0)", iso_dev, tol,
                           note="U is isometric only for invariant μ"))
    return SolenoidModel(model, measure, d_sol, ext, states, proj0, proj0_shifted, prob,
                         checks, V0, U)
