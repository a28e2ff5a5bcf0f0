"""Markovian functions: nonnegative ``φ`` with ``S*_σ(φ) = 1``.

A Markovian function for ``(σ, μ)`` makes ``f ↦ √φ (f∘σ)`` an isometry of
``L²(μ)``.  This module certifies membership, moves Markovian functions
between equivalent measures, and builds products adapted to ``σ^k``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .operators import adjoint_op, adjoint_power, compose_op, conditional_expectation, rn_data
from .report import holds, info
from .symspace import DEFAULT_TOL, CylFn, Density, DepthError, Measure, ShiftModel, is_sigma_inv_measurable


@dataclass(frozen=True)
class MarkovianCertificate:
    """Membership record for ``φ ∈ M(σ^k, μ)``.

    ``deviation`` is ``‖S*(φ) - 1‖_∞`` and ``integral_deviation`` the worst
    error of ``∫(f∘σ^k)φ dμ = ∫f dμ`` over cylinder indicators ``f``.
    """

    phi: CylFn
    measure_id: str
    deviation: float
    integral_deviation: float
    tol: float
    power: int = 1

    @property
    def valid(self) -> bool:
        return self.deviation <= self.tol and self.integral_deviation <= self.tol

    def to_json(self) -> dict:
        return {
            "phi": self.phi.to_json(),
            "measure_id": self.measure_id,
            "power": self.power,
            "deviation": self.deviation,
            "integral_deviation": self.integral_deviation,
            "tol": self.tol,
            "valid": self.valid,
        }


def _check_phi(phi: CylFn):
    if not phi.is_real():
        raise ValueError("Markovian candidates must be real")
    if np.any(phi.real < -1e-15):
        raise ValueError("Markovian candidates must be nonnegative")


def is_markovian(phi: CylFn, model: ShiftModel, measure: Measure,
                 tol: float = DEFAULT_TOL, power: int = 1) -> MarkovianCertificate:
    """Certify ``S*_{σ^k}(φ) = 1`` (``k = power``)."""
    _check_phi(phi)
    d = max(phi.depth, power + measure.min_transfer_depth - 1)
    if d > model.depth:
        raise DepthError(f"need depth {d} for a σ^{power} certificate, budget is {model.depth}")
    op = adjoint_power(model, measure, power, d)
    dev = op(phi).sup_dist(1.0)
    # ∫(1_[w]∘σ^k) φ dμ against μ([w]) for every word of length d-k
    low = d - power
    S = compose_op(model, measure, low)
    for j in range(1, power):
        S = S.then(compose_op(model, measure, low + j))
    # column w of S is 1_[w]∘σ^k
    vals = S.matrix.T @ (phi.values_at(d) * measure.masses(d))
    integral = float(np.max(np.abs(vals - measure.masses(low))))
    return MarkovianCertificate(phi, measure.key, float(dev), integral, tol, power)


def _require(phi, model, measure, tol, what="phi"):
    cert = is_markovian(phi, model, measure, tol)
    if not cert.valid:
        raise ValueError(f"{what} is not Markovian for this measure (deviation {cert.deviation:.3g})")
    return cert


def _positive(g: CylFn, what="g"):
    if not g.is_real() or np.any(g.real <= 0):
        raise ValueError(f"{what} must be real and strictly positive")


def alpha_action(f: CylFn, phi: CylFn, model: ShiftModel | None = None) -> CylFn:
    """``α_f(φ) = (f∘σ / f) · φ``."""
    _positive(f, "f")
    return (f.compose_shift() / f) * phi


def transport(phi: CylFn, g: CylFn, model: ShiftModel, measure: Measure,
              tol: float = DEFAULT_TOL) -> CylFn:
    """Move ``φ ∈ M(σ, μ)`` to ``M(σ, ν)`` for ``dν = g dμ``: ``g^{-1} φ (g∘σ)``."""
    _require(phi, model, measure, tol)
    _positive(g)
    return alpha_action(g, phi)


def density_measure(g: CylFn, measure: Measure) -> Density:
    """``dν = g dμ`` (``g`` need not be normalized)."""
    return Density(measure, g)


def alpha_group_law(f: CylFn, g: CylFn, phi: CylFn) -> float:
    """``‖α_f α_g φ - α_{fg} φ‖_∞``."""
    return alpha_action(f, alpha_action(g, phi)).sup_dist(alpha_action(f * g, phi))


def alpha_freeness(f: CylFn, phi: CylFn, tol: float = DEFAULT_TOL) -> dict:
    """Whether ``α_f`` fixes ``φ``, compared with ``f∘σ = f``.

    For strictly positive ``φ`` the two are equivalent; on an exact shift
    the second forces ``f`` to be constant.  ``violation`` flags a mismatch.
    """
    dev = alpha_action(f, phi).sup_dist(phi)
    inv = f.compose_shift().sup_dist(f)
    fixed = dev <= tol
    invariant = inv <= tol
    return {"fixed": bool(fixed), "deviation": float(dev), "sigma_invariant": bool(invariant),
            "f_constant": f.reduce(tol).depth == 0, "violation": bool(fixed != invariant)}


def power_product(phis, model: ShiftModel, measure: Measure, tol: float = DEFAULT_TOL):
    """``ψ = (φ_k∘σ^{k-1}) ··· (φ_2∘σ) φ_1`` with its ``σ^k`` certificate."""
    phis = list(phis)
    if not phis:
        raise ValueError("need at least one factor")
    for i, p in enumerate(phis):
        _require(p, model, measure, tol, f"factor {i + 1}")
    psi = phis[0]
    for i, p in enumerate(phis[1:], start=1):
        psi = psi * p.compose_shift(i)
    return psi, is_markovian(psi, model, measure, tol, power=len(phis))


def om_nu_from_om_mu(phi: CylFn, h: CylFn, model: ShiftModel, measure: Measure) -> CylFn:
    """``φ (h∘σ) / 𝔼_σ(h)``: the σ^{-1}(B)-measurable Markovian function of ``h dμ``.

    With ``φ = ω_μ`` this equals ``ω_ν``.
    """
    _positive(h, "h")
    E = conditional_expectation(model, measure, max(h.depth, measure.min_transfer_depth))
    return phi * h.compose_shift() / E(h)


def check_om_mu_nu(h: CylFn, psi: CylFn, phi: CylFn, model: ShiftModel, measure: Measure,
                   tol: float = DEFAULT_TOL) -> list:
    """``‖𝔼_σ(h) ψ - φ (h∘σ)‖_∞`` with certification of both inputs.

    The identity characterizes the σ^{-1}(B)-measurable members: for such ``ψ``
    (certified for ``ν = h dμ``) and ``φ`` (certified for ``μ``) it holds, and
    it is then equivalent to ``ψ = ω_ν``, ``φ = ω_μ``.  A non-measurable
    ``ψ`` is recorded as a diagnostic instead of a pass/fail check.
    """
    _positive(h, "h")
    nu = Density(measure, h)
    cert_psi = is_markovian(psi, model, nu, tol)
    cert_phi = is_markovian(phi, model, measure, tol)
    if not (cert_psi.valid and cert_phi.valid):
        raise ValueError("both ψ (for h dμ) and φ (for μ) must be Markovian")
    E = conditional_expectation(model, measure, max(h.depth, measure.min_transfer_depth))
    dev = (E(h) * psi).sup_dist(phi * h.compose_shift())
    measurable = is_sigma_inv_measurable(psi, tol).measurable and \
        is_sigma_inv_measurable(phi, tol).measurable
    name, anchor = "markovian.om_mu_nu", "𝔼_σ(h)ω_ν = ω_μ(h∘σ)"
    if measurable:
        return [holds(name, anchor, dev, tol)]
    return [info(name, anchor, dev, tol, note="inputs not σ^{-1}(B)-measurable")]


def random_markovian(model: ShiftModel, measure: Measure, depth: int, rng) -> CylFn:
    """Random strictly positive Markovian function ``h / (S*_σ(h)∘σ)``."""
    if depth < measure.min_transfer_depth:
        raise DepthError(f"random Markovian functions need depth ≥ {measure.min_transfer_depth}")
    h = CylFn.random(model, depth, rng, positive=True)
    return h / adjoint_op(model, measure, depth)(h).compose_shift()


def convex_combination(phi1: CylFn, phi2: CylFn, t: float) -> CylFn:
    if not 0.0 <= t <= 1.0:
        raise ValueError("t must lie in [0, 1]")
    return t * phi1 + (1.0 - t) * phi2


def certification_kernel_dim(model: ShiftModel, measure: Measure, depth: int,
                             tol: float = 1e-10) -> int:
    """Dimension of the kernel of the linear part ``φ ↦ S*_σ(φ)`` on ``V_depth``."""
    M = adjoint_op(model, measure, depth).matrix
    if M.size == 0:
        return model.dim(depth)
    return int(M.shape[1] - np.linalg.matrix_rank(M, tol=tol))


def omega(model: ShiftModel, measure: Measure) -> CylFn:
    """Forward Radon–Nikodym derivative ``ω_μ``."""
    return rn_data(model, measure, 1).omega
