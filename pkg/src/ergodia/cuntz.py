"""Weighted-shift isometries ``T_m = M_m S_φ`` and their Cuntz relations.

Given a Markovian ``φ`` and filters ``m_0, …, m_{L-1}``, the operators
``T_i f = m_i √φ (f∘σ)`` are isometries with orthogonal ranges summing to
the identity exactly when

* ``S*_σ(φ conj(m_j) m_i) = δ_ij``       (orthonormality on every fiber), and
* ``Σ_i m_i 𝔼_φ(conj(m_i) f) = f``        (completeness).

Both are checked on the finite model: the first on the depth-``D`` fiber
system, the second on the full word basis of ``V_D``.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import orth, svdvals

from .markovian import is_markovian
from .operators import (
    DepthOp,
    adjoint_op,
    multiply_op,
    opdist,
    phi_adjoint,
    phi_compose,
)
from .report import fails, holds, info
from .symspace import DEFAULT_TOL, CylFn, Density, DepthError, Measure, ShiftModel


def _one(model):
    return CylFn.constant(model, 1.0)


def _certified_phi(phi, model, measure, tol):
    phi = _one(model) if phi is None else phi
    cert = is_markovian(phi, model, measure, tol)
    if not cert.valid:
        raise ValueError(f"phi is not Markovian for this measure (deviation {cert.deviation:.3g})")
    if np.any(phi.real <= 0):
        raise ValueError("phi has zeros; the range of S_phi loses rank there")
    return phi


def build_T(m: CylFn, phi: CylFn | None, model: ShiftModel, measure: Measure,
            tol: float = DEFAULT_TOL, in_depth: int | None = None, certify: bool = True) -> DepthOp:
    """``T_m = M_m ∘ S_φ`` from ``V_{in_depth}`` (default ``D-1``) to ``V_D``."""
    phi = _certified_phi(phi, model, measure, tol) if certify else (phi if phi is not None else _one(model))
    d = model.depth - 1 if in_depth is None else in_depth
    S = phi_compose(phi, model, measure, d)
    out = model.check_depth(max(S.out_depth, m.depth))
    op = S.then(multiply_op(m, out))
    op.name = "T_m"
    return op


def build_Tstar(m: CylFn, phi: CylFn | None, model: ShiftModel, measure: Measure,
                tol: float = DEFAULT_TOL, in_depth: int | None = None, certify: bool = True) -> DepthOp:
    """``T*_m = S*_φ ∘ M_{conj m}`` from ``V_{in_depth}`` (default ``D``)."""
    phi = _certified_phi(phi, model, measure, tol) if certify else (phi if phi is not None else _one(model))
    d = model.depth if in_depth is None else in_depth
    if max(m.depth, phi.depth) > d:
        raise DepthError("filter or weight deeper than the operator input")
    op = multiply_op(m.conj(), d).then(phi_adjoint(phi, model, measure, d))
    op.name = "T*_m"
    return op


def tstar_t(m1: CylFn, m2: CylFn, phi: CylFn | None, model: ShiftModel, measure: Measure,
            tol: float = DEFAULT_TOL):
    """Multiplier of ``T*_{m1} T_{m2}``: ``S*_φ(√φ conj(m1) m2)``.

    Returns ``(multiplier, deviation)`` where ``deviation`` compares the
    operator product with multiplication by the multiplier on ``V_{D-1}``.
    """
    phi = _certified_phi(phi, model, measure, tol)
    d = max(m1.depth, m2.depth, phi.depth, measure.min_transfer_depth)
    g = phi.sqrt() * m1.conj() * m2
    mult = phi_adjoint(phi, model, measure, d)(g.promote(d))
    T2 = build_T(m2, phi, model, measure, tol, certify=False)
    T1s = build_Tstar(m1, phi, model, measure, tol, in_depth=T2.out_depth, certify=False)
    prod = T2.then(T1s).matrix
    M = multiply_op(mult, max(mult.depth, T2.in_depth)).matrix
    return mult, opdist(prod, M)


@dataclass
class CuntzReport:
    """Deviations of the Cuntz conditions for a filter bank.

    ``structural`` carries a reason string when the relations cannot hold
    for dimensional reasons (wrong filter count); the numerical deviations
    are still computed.
    """

    L: int
    N: int
    grid: np.ndarray
    condition_ii: float
    isometry: list
    tol: float
    structural: str | None = None
    sum_ranges: float | None = None
    range_orthogonality: float | None = None
    adjoint_consistency: float = 0.0
    extra: dict = field(default_factory=dict)

    @property
    def condition_i(self) -> float:
        return float(np.max(self.grid)) if self.grid.size else 0.0

    @property
    def verdict(self) -> bool:
        devs = [self.condition_i, self.condition_ii, *self.isometry, self.adjoint_consistency]
        if self.sum_ranges is not None:
            devs += [self.sum_ranges, self.range_orthogonality]
        return self.structural is None and all(d <= self.tol for d in devs)

    def checks(self, prefix: str = "cuntz") -> list:
        out = [
            holds(f"{prefix}.condition_i", "S*_σ(φ conj(m_j) m_i) = δ_ij", self.condition_i, self.tol),
            holds(f"{prefix}.condition_ii", "Σ m_i 𝔼_φ(conj(m_i) f) = f", self.condition_ii, self.tol),
            holds(f"{prefix}.isometries", "T_i* T_i = I", max(self.isometry, default=0.0), self.tol),
            holds(f"{prefix}.adjoint_formula", "T_m* = S*_φ M_conj(m)", self.adjoint_consistency, self.tol),
        ]
        if self.sum_ranges is not None:
            out.append(holds(f"{prefix}.sum_TT*", "Σ T_i T_i* = I", self.sum_ranges, self.tol))
            out.append(holds(f"{prefix}.range_orthogonality", "T_i* T_j = 0 for i ≠ j",
                             self.range_orthogonality, self.tol))
        return out

    def to_json(self) -> dict:
        return {
            "L": self.L,
            "N": self.N,
            "condition_i_grid": [[float(x) for x in row] for row in self.grid],
            "condition_i": self.condition_i,
            "condition_ii": self.condition_ii,
            "isometry": [float(x) for x in self.isometry],
            "adjoint_consistency": self.adjoint_consistency,
            "sum_ranges": self.sum_ranges,
            "range_orthogonality": self.range_orthogonality,
            "structural": self.structural,
            "tol": self.tol,
            "verdict": self.verdict,
        }

    def grid_to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["i\\j"] + [str(j) for j in range(self.L)])
            for i, row in enumerate(self.grid):
                w.writerow([str(i)] + [repr(float(x)) for x in row])


def orthonormality_grid(filters, phi: CylFn, model: ShiftModel, measure: Measure) -> np.ndarray:
    """``grid[i, j] = ‖S*_σ(φ conj(m_j) m_i) - δ_ij‖_∞``."""
    L = len(filters)
    d = max([phi.depth, measure.min_transfer_depth] + [m.depth for m in filters])
    Sst = adjoint_op(model, measure, d)
    grid = np.zeros((L, L))
    for i in range(L):
        for j in range(L):
            v = Sst(phi * filters[j].conj() * filters[i].promote(d))
            grid[i, j] = v.sup_dist(1.0 if i == j else 0.0)
    return grid


def completeness_matrix(filters, phi: CylFn, model: ShiftModel, measure: Measure) -> np.ndarray:
    """Matrix of ``f ↦ Σ_i m_i S_φS*_φ(conj(m_i) f)`` on ``V_D``."""
    D = model.depth
    E = phi_adjoint(phi, model, measure, D).then(phi_compose(phi, model, measure, D - 1))
    C = np.zeros((model.dim(D),) * 2, dtype=np.complex128)
    for m in filters:
        C += multiply_op(m, D).matrix @ E.matrix @ multiply_op(m.conj(), D).matrix
    return C


def cuntz_conditions(filters, phi: CylFn | None, model: ShiftModel, measure: Measure,
                     tol: float = DEFAULT_TOL, certify: bool = True) -> CuntzReport:
    """Evaluate every Cuntz condition; ``certify=False`` skips the Markovian check on φ."""
    N = model.constant_fiber
    if N is None:
        raise ValueError(
            "fiber cardinality varies across the shift "
            f"(sizes {model.fiber_sizes.tolist()}); use filters.cyclic_construct for a module frame"
        )
    filters = list(filters)
    if not filters:
        raise ValueError("empty filter bank")
    if certify:
        phi = _certified_phi(phi, model, measure, tol)
    elif phi is None:
        phi = _one(model)
    D = model.depth
    if max(m.depth for m in filters) > D or phi.depth > D:
        raise DepthError("filters or weight exceed the depth budget")
    L = len(filters)
    grid = orthonormality_grid(filters, phi, model, measure)
    C = completeness_matrix(filters, phi, model, measure)
    cond_ii = float(np.max(np.abs(C - np.eye(C.shape[0]))))

    Ts = [build_T(m, phi, model, measure, tol, certify=False).matrix for m in filters]
    ops = [build_T(m, phi, model, measure, tol, certify=False) for m in filters]
    adj = [op.adjoint_matrix(measure) for op in ops]
    explicit = [build_Tstar(m, phi, model, measure, tol, certify=False).matrix for m in filters]
    adjoint_consistency = max(opdist(a, b) for a, b in zip(adj, explicit))
    I_in = np.eye(Ts[0].shape[1])
    iso = [opdist(a @ T, I_in) for a, T in zip(adj, Ts)]

    structural = None
    if L != N:
        structural = f"filter count {L} differs from fiber cardinality {N}"
    rep = CuntzReport(L, N, grid, cond_ii, iso, tol, structural,
                      adjoint_consistency=adjoint_consistency)
    if rep.condition_i <= tol and cond_ii <= tol:
        total = sum(T @ a for T, a in zip(Ts, adj))
        rep.sum_ranges = opdist(total, np.eye(total.shape[0]))
        cross = 0.0
        for i in range(L):
            for j in range(L):
                if i != j:
                    cross = max(cross, float(np.max(np.abs(adj[i] @ Ts[j]))))
        rep.range_orthogonality = cross
    return rep


def verify_cuntz(filters, phi: CylFn | None, model: ShiftModel, measure: Measure,
                 tol: float = DEFAULT_TOL) -> CuntzReport:
    """Cuntz relations for ``T_i = M_{m_i} S_φ`` with certified Markovian ``φ``."""
    return cuntz_conditions(filters, phi, model, measure, tol, certify=True)


def _weighted_basis(A: np.ndarray, masses: np.ndarray, tol: float) -> np.ndarray:
    B = np.sqrt(masses)[:, None] * A
    if B.size == 0 or not np.any(B):
        return np.zeros((A.shape[0], 0))
    return orth(B, rcond=tol)


def subspace_decomposition(filters, phi: CylFn | None, model: ShiftModel, measure: Measure,
                           tol: float = DEFAULT_TOL, rank_tol: float = 1e-10) -> dict:
    """Dimensions and mutual principal angles of the ranges ``m_i ℋ_φ`` in ``V_D``."""
    phi = _certified_phi(phi, model, measure, tol)
    masses = measure.masses(model.depth)
    bases = [_weighted_basis(build_T(m, phi, model, measure, tol, certify=False).matrix, masses, rank_tol)
             for m in filters]
    dims = [b.shape[1] for b in bases]
    worst = 0.0
    for i in range(len(bases)):
        for j in range(i + 1, len(bases)):
            if bases[i].shape[1] and bases[j].shape[1]:
                worst = max(worst, float(svdvals(bases[i].conj().T @ bases[j])[0]))
    total = model.dim(model.depth)
    return {
        "dims": dims,
        "sum": int(sum(dims)),
        "dim_V": int(total),
        "complete": int(sum(dims)) == total,
        "max_cross_cosine": worst,
    }


def isometry_criterion(m: CylFn, phi: CylFn | None, model, measure, tol=DEFAULT_TOL) -> dict:
    """``T_m`` isometric against ``S*_φ(√φ |m|²) = 1`` and ``𝔼_φ(√φ|m|²) = √φ``."""
    phi = _certified_phi(phi, model, measure, tol)
    T = build_T(m, phi, model, measure, tol, certify=False)
    iso = opdist(T.adjoint_matrix(measure) @ T.matrix, np.eye(T.shape[1]))
    d = max(m.depth, phi.depth, measure.min_transfer_depth)
    g = (phi.sqrt() * m.abs2()).promote(d)
    crit = phi_adjoint(phi, model, measure, d)(g).sup_dist(1.0)
    E = phi_adjoint(phi, model, measure, d).then(phi_compose(phi, model, measure, d - 1))
    proj = E(g).sup_dist(phi.sqrt())
    return {"isometry_defect": iso, "criterion": crit, "projection_form": proj}


def similarity_transport(filters, phi: CylFn | None, g: CylFn, model: ShiftModel, measure: Measure,
                         tol: float = DEFAULT_TOL) -> float:
    """Compare ``T_i*T_j`` in ``L²(μ)`` with the transported family in ``L²(g dμ)``.

    The transported weight is ``ψ = (g∘σ) φ / g``; the transported operators
    ``M_{m_i} S_ψ`` are the conjugates ``M_{√g}^{-1} T_{m_i} M_{√g}``.
    """
    phi = _certified_phi(phi, model, measure, tol)
    if not g.is_real() or np.any(g.real <= 0):
        raise ValueError("g must be real and strictly positive")
    nu = Density(measure, g)
    psi = g.compose_shift() * phi / g
    worst = 0.0
    ops_mu = [build_T(m, phi, model, measure, tol, certify=False) for m in filters]
    ops_nu = [build_T(m, psi, model, nu, tol, certify=True) for m in filters]
    d_in = ops_mu[0].in_depth
    d_out = ops_mu[0].out_depth
    root = g.sqrt()
    U_in = multiply_op(root, max(root.depth, d_in)).matrix if root.depth <= d_in else None
    for a, A in enumerate(ops_mu):
        for b, B in enumerate(ops_mu):
            G_mu = A.adjoint_matrix(measure) @ B.matrix
            G_nu = ops_nu[a].adjoint_matrix(nu) @ ops_nu[b].matrix
            worst = max(worst, opdist(G_mu, G_nu))
        if U_in is not None:
            # conjugation identity itself: M_{√g} T̃ = T M_{√g}
            lhs = multiply_op(root, d_out).matrix @ ops_nu[a].matrix
            rhs = A.matrix @ U_in
            worst = max(worst, opdist(lhs, rhs))
    return worst


def parseval_report(filters, phi: CylFn | None, model: ShiftModel, measure: Measure,
                    tol: float = DEFAULT_TOL) -> list:
    """Pointwise size of ``Σ_i |m_i|²`` and its integral, as diagnostics."""
    d = max(m.depth for m in filters)
    total = sum((m.abs2().promote(d) for m in filters[1:]), filters[0].abs2().promote(d))
    vals = total.real
    integral = float(np.sum(vals * measure.masses(d)))
    finite = bool(np.all(np.isfinite(vals)))
    return [
        holds("cuntz.parseval_pointwise_finite", "Σ_i |m_i(x)|² < ∞ a.e.",
              0.0 if finite else float("inf"), tol,
              extra={"max": float(vals.max()), "min": float(vals.min())}),
        info("cuntz.parseval_integral", "∫ Σ_i |m_i|² dμ", integral, tol),
    ]


def cuntz_checks(filters, phi, model, measure, tol=DEFAULT_TOL, prefix="cuntz") -> list:
    """Checks for a bank expected to satisfy the relations."""
    rep = verify_cuntz(filters, phi, model, measure, tol)
    out = rep.checks(prefix)
    if rep.structural is not None:
        out.append(holds(f"{prefix}.structure", rep.structural, float("inf"), tol))
    return out


def incomplete_checks(filters, phi, model, measure, tol=DEFAULT_TOL, prefix="cuntz") -> list:
    """Checks for a bank expected to *fail* completeness (e.g. a dropped filter)."""
    rep = cuntz_conditions(filters, phi, model, measure, tol)
    return [
        holds(f"{prefix}.condition_i", "S*_σ(φ conj(m_j) m_i) = δ_ij", rep.condition_i, tol),
        fails(f"{prefix}.condition_ii_fails", "Σ m_i 𝔼_φ(conj(m_i) f) ≠ f", rep.condition_ii, 0.4),
    ]
