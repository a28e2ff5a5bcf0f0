"""Composition, transfer and conditional-expectation operators.

Every operator is a :class:`DepthOp`: a linear map from cylinder functions
of one depth to another, available both as a vectorized closure and as a
dense matrix in the canonical word basis.  Identity checks compare matrices
in the induced sup-norm (maximum absolute row sum), which is the operator
norm on bounded functions.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np

from .kernels import fiber_sum
from .report import fails, holds, info
from .symspace import (
    DEFAULT_TOL,
    CylFn,
    DepthError,
    Density,
    Measure,
    ShiftModel,
    fiber_system,
    is_sigma_inv_measurable,
)


def opnorm(A) -> float:
    """Induced sup-norm ``max_i Σ_j |A_ij|``."""
    A = np.asarray(A)
    if A.size == 0:
        return 0.0
    return float(np.max(np.sum(np.abs(A), axis=1)))


def opdist(A, B) -> float:
    return opnorm(np.asarray(A) - np.asarray(B))


class DepthOp:
    """Linear map ``V_{in_depth} → V_{out_depth}``.

    ``apply`` acts on value arrays of shape ``(n_in,)`` or ``(n_in, k)``.
    """

    def __init__(self, name: str, model: ShiftModel, in_depth: int, out_depth: int,
                 apply: Callable[[np.ndarray], np.ndarray]):
        self.name = name
        self.model = model
        self.in_depth = model.check_depth(in_depth)
        self.out_depth = model.check_depth(out_depth)
        self._apply = apply

    @property
    def shape(self):
        return self.model.dim(self.out_depth), self.model.dim(self.in_depth)

    def apply_values(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=np.complex128)
        if v.shape[0] != self.shape[1]:
            raise ValueError(f"{self.name}: expected {self.shape[1]} rows, got {v.shape[0]}")
        return self._apply(v)

    def __call__(self, f: CylFn) -> CylFn:
        if f.depth > self.in_depth:
            raise DepthError(f"{self.name} accepts depth ≤ {self.in_depth}, got {f.depth}")
        return CylFn(self.model, self.out_depth, self.apply_values(f.values_at(self.in_depth)))

    @cached_property
    def matrix(self) -> np.ndarray:
        m = self.apply_values(np.eye(self.shape[1], dtype=np.complex128))
        m.setflags(write=False)
        return m

    def then(self, other: "DepthOp") -> "DepthOp":
        """``other ∘ self``, promoting in between when depths differ."""
        if other.in_depth < self.out_depth:
            raise DepthError(f"cannot feed depth {self.out_depth} into {other.name}")
        first = self
        if other.in_depth > self.out_depth:
            first = self.then(promote_op(self.model, self.out_depth, other.in_depth))
        return DepthOp(f"{other.name}∘{self.name}", self.model, self.in_depth, other.out_depth,
                       lambda v: other._apply(first._apply(v)))

    def __matmul__(self, other: "DepthOp") -> "DepthOp":
        return other.then(self)

    def adjoint_matrix(self, measure: Measure) -> np.ndarray:
        """Matrix of the ``L^2(μ)`` adjoint: ``W_in^{-1} A^H W_out``."""
        w_in = measure.masses(self.in_depth)
        w_out = measure.masses(self.out_depth)
        return (self.matrix.conj().T * w_out[None, :]) / w_in[:, None]

    def linearity_defect(self, rng, trials: int = 4) -> float:
        n = self.shape[1]
        worst = 0.0
        for _ in range(trials):
            x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
            y = rng.standard_normal(n) + 1j * rng.standard_normal(n)
            a, b = rng.standard_normal(2)
            lhs = self.apply_values(a * x + b * y)
            rhs = a * self.apply_values(x) + b * self.apply_values(y)
            worst = max(worst, float(np.max(np.abs(lhs - rhs))),
                        float(np.max(np.abs(self.matrix @ x - self.apply_values(x)))))
        return worst

    def to_csv(self, path) -> None:
        rows = self.model.labels(self.out_depth)
        cols = self.model.labels(self.in_depth)
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow([self.name] + cols)
            for label, row in zip(rows, self.matrix):
                w.writerow([label] + [f"{float(z.real)!r},{float(z.imag)!r}" for z in row])

    def __repr__(self):
        return f"DepthOp({self.name}: V_{self.in_depth} -> V_{self.out_depth})"


def _batched(v, scale):
    return scale if v.ndim == 1 else scale[:, None]


def promote_op(model: ShiftModel, d_from: int, d_to: int) -> DepthOp:
    idx = np.arange(model.dim(d_from))
    for k in range(d_from + 1, d_to + 1):
        idx = idx[model.trunc_index(k)]
    return DepthOp(f"P[{d_from}->{d_to}]", model, d_from, d_to, lambda v: v[idx])


def multiply_op(t: CylFn, depth: int | None = None) -> DepthOp:
    """Multiplication by ``t`` on ``V_depth`` (``depth ≥ depth(t)``)."""
    model = t.model
    depth = t.depth if depth is None else depth
    tv = t.values_at(depth)
    return DepthOp("M", model, depth, depth, lambda v: v * _batched(v, tv))


def compose_op(model: ShiftModel, measure: Measure | None = None, in_depth: int | None = None) -> DepthOp:
    """``S_σ f = f ∘ σ`` from ``V_d`` to ``V_{d+1}`` (default ``d = D-1``)."""
    d = model.depth - 1 if in_depth is None else in_depth
    out = model.check_depth(d + 1)
    tail = model.tail_index(out)
    return DepthOp("S", model, d, out, lambda v: v[tail])


def _fiber_average(model, d, weights):
    """Closure ``g ↦ Σ_a weights(aw) g(aw)`` from ``V_d`` to ``V_{d-1}``."""
    tail = model.tail_index(d)
    n = model.dim(d - 1)

    def apply(v):
        return fiber_sum(v * _batched(v, weights), tail, n)

    return apply


def adjoint_op(model: ShiftModel, measure: Measure, in_depth: int | None = None) -> DepthOp:
    """``S*_σ g (w) = Σ_a g(aw) μ([aw]) / μ([w])`` from ``V_d`` to ``V_{d-1}``."""
    d = model.depth if in_depth is None else model.check_depth(in_depth)
    if d < measure.min_transfer_depth:
        raise DepthError(f"adjoint needs in_depth ≥ {measure.min_transfer_depth} on this shift")
    m = measure.masses(d)
    parent = measure.masses(d - 1)[model.tail_index(d)]
    return DepthOp("S*", model, d, d - 1, _fiber_average(model, d, m / parent))


def rokhlin_transfer(model: ShiftModel, measure: Measure, in_depth: int | None = None) -> DepthOp:
    """Fiber integral against the conditional measures: ``R_σ f(w) = Σ_a c(a|w) f(aw)``."""
    d = model.depth if in_depth is None else model.check_depth(in_depth)
    if d < measure.min_transfer_depth:
        raise DepthError(f"transfer operator needs in_depth ≥ {measure.min_transfer_depth} on this shift")
    cs = fiber_system(model, measure, d - 1)
    return DepthOp("R", model, d, d - 1, _fiber_average(model, d, cs.weights))


def weighted_compose(t: CylFn, model: ShiftModel, measure: Measure | None = None,
                     in_depth: int | None = None) -> DepthOp:
    """``P_t f = t · (f ∘ σ)``."""
    d = model.depth - 1 if in_depth is None else in_depth
    out = model.check_depth(max(d + 1, t.depth))
    tail = model.tail_index(d + 1)
    lift = promote_op(model, d + 1, out)
    tv = t.values_at(out)

    def apply(v):
        return lift._apply(v[tail]) * _batched(v, tv)

    return DepthOp("P_t", model, d, out, apply)


def weighted_adjoint(t: CylFn, model: ShiftModel, measure: Measure, in_depth: int | None = None) -> DepthOp:
    """``P*_t g = S*_σ(conj(t) g)``."""
    d = model.depth if in_depth is None else model.check_depth(in_depth)
    if t.depth > d:
        raise DepthError("weight deeper than the operator input")
    tc = t.conj().values_at(d)
    base = adjoint_op(model, measure, d)
    return DepthOp("P*_t", model, d, d - 1, lambda v: base._apply(v * _batched(v, tc)))


def phi_compose(phi: CylFn, model, measure=None, in_depth=None) -> DepthOp:
    """``S_φ f = √φ (f ∘ σ)``."""
    op = weighted_compose(phi.sqrt(), model, measure, in_depth)
    op.name = "S_phi"
    return op


def phi_adjoint(phi: CylFn, model, measure, in_depth=None) -> DepthOp:
    """``S*_φ g = S*_σ(√φ g)``."""
    op = weighted_adjoint(phi.sqrt(), model, measure, in_depth)
    op.name = "S*_phi"
    return op


def adjoint_power(model, measure, k: int, in_depth: int | None = None) -> DepthOp:
    """``S*_{σ^k} = (S*_σ)^k``, the adjoint of composition with ``σ^k``."""
    d = model.depth if in_depth is None else in_depth
    op = adjoint_op(model, measure, d)
    for j in range(1, k):
        op = op.then(adjoint_op(model, measure, d - j))
    op.name = f"S*^{k}"
    return op


def transfer_expectation(R: DepthOp) -> DepthOp:
    """``E(f) = R(f) ∘ σ`` for a transfer operator ``R``."""
    S = compose_op(R.model, None, R.out_depth)
    op = R.then(S)
    op.name = f"E[{R.name}]"
    return op


# ---------------------------------------------------------------------------
# Radon–Nikodym data


@dataclass
class RNData:
    """Backward and forward Radon–Nikodym derivatives of a measure.

    ``rho_n[n]`` is ``d(μ∘σ^{-n})/dμ`` and ``omega_n[n]`` is
    ``d(μ∘σ^n)/dμ = 1 / (ρ_n ∘ σ^n)``; both cached for ``1 ≤ n ≤ n_max``.
    """

    model: ShiftModel
    measure: Measure
    rho_n: dict = field(default_factory=dict)
    omega_n: dict = field(default_factory=dict)
    pushforward: dict = field(default_factory=dict)
    checks: list = field(default_factory=list)

    @property
    def rho(self) -> CylFn:
        return self.rho_n[1]

    @property
    def omega(self) -> CylFn:
        return self.omega_n[1]


def _rho(model, measure, n):
    d = model.depth - n
    vals = measure.pushforward_masses(d, n) / measure.masses(d)
    return CylFn(model, d, vals).reduce()


def rn_data(model: ShiftModel, measure: Measure, n_max: int | None = None,
            tol: float = DEFAULT_TOL, seed: int = 0) -> RNData:
    """Compute ``ρ_n`` from pushforward masses and ``ω_n = 1/(ρ_n∘σ^n)``.

    ``ρ_n`` is evaluated at the deepest available resolution ``D - n``,
    which must still resolve the measure's conditional weights.
    """
    top = model.depth - max(1, measure.memory)
    n_max = top if n_max is None else n_max
    if not 1 <= n_max <= top:
        raise DepthError(f"n_max must lie in [1, {top}] for this measure and budget")
    out = RNData(model, measure)
    for n in range(1, n_max + 1):
        rho = _rho(model, measure, n)
        if np.any(rho.real <= 0):
            raise ValueError("pushforward is not equivalent to the measure")
        out.rho_n[n] = rho
        out.omega_n[n] = (1.0 / rho).compose_shift(n)
        out.pushforward[n] = measure.pushforward_masses(model.depth - n, n)

    rho, omega = out.rho, out.omega
    out.checks.append(holds("rn.omega_times_rho_shift", "ω(x)·ρ(σx) = 1",
                            (omega * rho.compose_shift()).sup_dist(1.0), tol))
    meas = is_sigma_inv_measurable(omega, tol)
    out.checks.append(holds("rn.omega_sigma_measurable", "ω is σ^{-1}(B)-measurable",
                            meas.deviation, tol))
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(8):
        f = CylFn.random(model, model.depth - 1, rng)
        lhs = np.sum(f.compose_shift().values_at(model.depth) * omega.values_at(model.depth)
                     * measure.masses(model.depth))
        rhs = np.sum(f.values * measure.masses(model.depth - 1))
        worst = max(worst, abs(lhs - rhs))
    out.checks.append(holds("rn.omega_defining_identity", "∫(f∘σ)ω dμ = ∫f dμ", worst, tol))
    return out


def cocycle_report(data: RNData, tol: float = DEFAULT_TOL) -> list:
    """Compare ``ρ_{n+m}`` with the chain rule and with the shifted product form.

    The chain rule ``ρ_{n+m} = ρ_n · d(ν∘σ^{-m})/dν`` with ``ν = μ∘σ^{-n}``
    always holds.  The shifted product ``ρ_m(σ^n x) ρ_n(x)`` is recorded as
    a diagnostic only: it fails for generic non-invariant measures.
    """
    model, measure = data.model, data.measure
    checks = []
    n_max = max(data.rho_n)
    for n in range(1, n_max + 1):
        for m in range(1, n_max + 1 - n):
            d = model.depth - n - m
            nu = measure.pushforward_masses(d, n)
            nu_m = measure.pushforward_masses(d, n + m)
            chain = (nu / measure.masses(d)) * (nu_m / nu)
            direct = data.rho_n[n + m].values_at(d)
            checks.append(holds(f"rn.chain_rule[{n},{m}]", "ρ_{n+m} = ρ_n·dν∘σ^{-m}/dν",
                                np.max(np.abs(chain - direct)), tol))
            shifted = data.rho_n[m].compose_shift(n) * data.rho_n[n]
            if shifted.depth <= model.depth - n - m:
                dev = shifted.sup_dist(data.rho_n[n + m])
            else:
                dev = (shifted - data.rho_n[n + m]).max_abs()
            checks.append(info(f"rn.shifted_cocycle[{n},{m}]", "ρ_{n+m}(x) = ρ_m(σ^n x)ρ_n(x)",
                               dev, tol, note="multiplicative form; holds for invariant measures only"))
    return checks


def rho_transport(h: CylFn, model: ShiftModel, measure: Measure) -> CylFn:
    """``ρ_ν`` for ``dν = h dμ``, computed as ``S*_σ(h) / h``."""
    d = max(h.depth, measure.min_transfer_depth)
    return adjoint_op(model, measure, d)(h) / h


def check_rho_transport(h: CylFn, model, measure, tol=DEFAULT_TOL) -> list:
    nu = Density(measure, h)
    direct = _rho(model, nu, 1)
    ours = rho_transport(h, model, measure)
    rho_mu = _rho(model, measure, 1)
    shifted = h.compose_shift() * rho_mu / h
    return [
        holds("rn.rho_transport", "ρ_ν = S*_σ(h)/h = ρ_μ R_σ(h)/h", direct.sup_dist(ours), tol),
        info("rn.rho_transport_shifted", "ρ_ν = (h∘σ)ρ_μ/h", direct.sup_dist(shifted), tol,
             note="holds only when h is σ-invariant"),
    ]


# ---------------------------------------------------------------------------
# conditional expectations and identity checks


def cond_expect(model: ShiftModel, measure: Measure, phi: CylFn | None = None,
                depth: int | None = None, tol: float = DEFAULT_TOL) -> DepthOp:
    """``𝔼_σ = S_σS*_σ`` (invariant μ) or ``𝔼_φ = S_φS*_φ``  on ``V_depth``."""
    d = model.depth if depth is None else model.check_depth(depth)
    if phi is None:
        if not measure.is_invariant(tol):
            raise ValueError("S_σS*_σ is a projection only for σ-invariant measures; pass phi")
        op = adjoint_op(model, measure, d).then(compose_op(model, measure, d - 1))
        op.name = "E_sigma"
        return op
    from .markovian import is_markovian

    cert = is_markovian(phi, model, measure, tol)
    if not cert.valid:
        raise ValueError(f"phi is not Markovian (deviation {cert.deviation:.3g})")
    op = phi_adjoint(phi, model, measure, d).then(phi_compose(phi, model, measure, d - 1))
    op.name = "E_phi"
    return op


def conditional_expectation(model, measure, depth=None) -> DepthOp:
    """Orthogonal projection onto ``σ^{-1}(B)``-measurables, for any measure: ``S_σ R_σ``."""
    d = model.depth if depth is None else depth
    op = transfer_expectation(rokhlin_transfer(model, measure, d))
    op.name = "E"
    return op


def check_pullout(op: DepthOp, model: ShiftModel, n_pairs: int = 100, seed: int = 0,
                  rng=None) -> float:
    """``max ‖op((f∘σ) g) - f·op(g)‖_∞`` over random ``f, g``."""
    rng = np.random.default_rng(seed) if rng is None else rng
    d = op.in_depth
    if d < model.min_transfer_depth:
        raise DepthError(f"pull-out probe needs in_depth ≥ {model.min_transfer_depth}")
    worst = 0.0
    for _ in range(n_pairs):
        f = CylFn.random(model, d - 1, rng)
        g = CylFn.random(model, d, rng)
        lhs = op(f.compose_shift() * g)
        rhs = f * op(g)
        worst = max(worst, lhs.sup_dist(rhs))
    return worst


def check_transfer_identities(model: ShiftModel, measure: Measure, tol: float = DEFAULT_TOL) -> list:
    """``R_σ`` versus ``S*_σ`` and ``ρ_μ R_σ`` versus ``S*_σ``.

    ``R_σ = S*_σ`` is expected exactly when μ is invariant; the weighted
    identity is expected always.
    """
    R = rokhlin_transfer(model, measure)
    Sst = adjoint_op(model, measure)
    rho = rn_data(model, measure, 1).rho
    rhoR = R.then(multiply_op(rho, max(rho.depth, R.out_depth)))
    invariant = measure.is_invariant(tol)
    dev1 = opdist(R.matrix, Sst.matrix)
    lifted = promote_op(model, Sst.out_depth, rhoR.out_depth).matrix @ Sst.matrix
    dev2 = opdist(rhoR.matrix, lifted)
    first = (holds if invariant else fails)("transfer.R_eq_Sstar",
                                            "R_σ = S*_σ iff μ invariant", dev1, tol,
                                            extra={"invariant": invariant})
    second = holds("transfer.rhoR_eq_Sstar", "ρ_μ R_σ = S*_σ", dev2, tol)
    E_R = transfer_expectation(R)
    E_true = conditional_expectation(model, measure)
    Sst_S = Sst.then(compose_op(model, measure, model.depth - 1))
    third = (holds if invariant else fails)("transfer.E_R_eq_SSstar",
                                            "R(f)∘σ = S_σS*_σ f iff ρR = S*",
                                            opdist(E_R.matrix, Sst_S.matrix), tol)
    fourth = holds("transfer.E_R_is_projection", "R(f)∘σ is the conditional expectation",
                   opdist(E_R.matrix, E_true.matrix), tol)
    return [first, second, third, fourth]


def projection_checks(E: DepthOp, measure: Measure, prefix: str, tol: float = DEFAULT_TOL) -> list:
    M = E.matrix
    return [
        holds(f"{prefix}.idempotent", "E² = E", opdist(M @ M, M), tol),
        holds(f"{prefix}.self_adjoint", "E* = E in L²(μ)", opdist(E.adjoint_matrix(measure), M), tol),
    ]


def weighted_rank(A: np.ndarray, measure_out: np.ndarray, tol: float = 1e-10) -> int:
    """Rank of ``A`` after weighting rows by ``√μ`` (range dimension in L²(μ))."""
    B = np.sqrt(measure_out)[:, None] * np.asarray(A)
    if B.size == 0:
        return 0
    s = np.linalg.svd(B, compute_uv=False)
    return int(np.sum(s > tol * max(1.0, s[0])))


def isometry_defect(op: DepthOp, measure: Measure) -> float:
    """``‖op* op - I‖`` on ``V_in``."""
    G = op.adjoint_matrix(measure) @ op.matrix
    return opdist(G, np.eye(G.shape[0]))


def check_isometry_criterion(t: CylFn, model, measure, tol=DEFAULT_TOL) -> tuple:
    """Return ``(isometry defect of P_t, ‖S*_σ(|t|²) - 1‖_∞)``."""
    P = weighted_compose(t, model, measure)
    crit = adjoint_op(model, measure, max(t.depth, measure.min_transfer_depth))(t.abs2()).sup_dist(1.0)
    return isometry_defect(P, measure), crit
