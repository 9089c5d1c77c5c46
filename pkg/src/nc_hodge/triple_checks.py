"""Commutator structure of ``D_u``: left action, twisted right action, grading.

``beta(a) = e^{hu} a e^{-hu}``. On the right, ``R_{beta(a)}`` is formed in
operator form as ``R_{e^{-hu}} R_a R_{e^{hu}}``, which equals the multiplication
by the element on exact models and stays consistent with ``K_u`` on truncated
ones.

Sign note: the derivations are anti-Hermitian on ``H_0``, so the derivative
part of ``d^*`` is ``-sum_j d_j (x) T_j^H`` and the closed form of
``[D_u, L_a]`` carries ``T_j - T_j^H``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .complex_engine import (
    GradedOperator,
    GradedSpace,
    build_d,
    build_D,
    build_gamma,
    build_space,
    lift_h0,
    operator_norm,
)
from .lie_exterior import build_T
from .system_models import ConformalElement, SystemModel, build_conformal_element, build_nc_torus, exp_element


def _exp_right(model, h, s):
    if h is None or s == 0 or not np.any(h.coords):
        return np.eye(model.N0, dtype=complex)
    return exp_element(model, h, s).right


def _exp_left(model, h, s):
    if h is None or s == 0 or not np.any(h.coords):
        return np.eye(model.N0, dtype=complex)
    return exp_element(model, h, s).left


def left_commutator_check(space: GradedSpace, D: GradedOperator, a, h: ConformalElement | None, u: float) -> dict:
    """``[D_u, L_a]`` against ``sum_j L_{d_j a} R_{e^{-hu}} (x) (T_j - T_j^H)``."""
    model = space.model
    La = lift_h0(space, model.left_mult(a))
    comm = D @ La - La @ D
    Rm = _exp_right(model, h, -u)
    closed = None
    for j in range(space.n):
        T = build_T(space.basis, j)
        term = space.lift(T - T.T, model.left_mult(model.derive(j, a)) @ Rm)
        closed = term if closed is None else closed + term
    norm = operator_norm(comm)
    return {
        "norm": norm,
        "residual": operator_norm(comm - closed),
        "bound": 1e-9 * norm + 1e-12,
        "approximate": not model.exact,
    }


def right_beta_operator(model: SystemModel, a, h, u) -> np.ndarray:
    return _exp_right(model, h, -u) @ model.right_mult(a) @ _exp_right(model, h, u)


def twisted_commutator_check(space: GradedSpace, D: GradedOperator, a, h, u, input_mask=None) -> dict:
    """Norms of ``D_u R_a - R_{beta(a)} D_u`` and ``[D_u, R_a]``.

    ``input_mask`` restricts to input vectors supported on a sub-window.
    """
    model = space.model
    Ra = lift_h0(space, model.right_mult(a))
    Rb = lift_h0(space, right_beta_operator(model, a, h, u))
    twisted = D @ Ra - Rb @ D
    untwisted = D @ Ra - Ra @ D
    if input_mask is not None:
        twisted = twisted.restrict_columns(input_mask)
        untwisted = untwisted.restrict_columns(input_mask)
    return {
        "twisted": operator_norm(twisted),
        "untwisted": operator_norm(untwisted),
        "twisted_operator": twisted,
    }


def scalar_shift_residual(space, D, a, h, u, c: float = 1.0) -> float:
    """``||X(a + c 1) - X(a)||`` for the twisted commutator X (exactly 0 in theory)."""
    a = np.asarray(a, dtype=complex)
    X0 = twisted_commutator_check(space, D, a, h, u)["twisted_operator"]
    X1 = twisted_commutator_check(space, D, a + c * space.model.unit, h, u)["twisted_operator"]
    return (X1 - X0).max_abs()


class Beta:
    """``beta(a) = e^{hu} a e^{-hu}`` as ``L_{e^{hu}} R_{e^{-hu}}`` on coordinates."""

    def __init__(self, model: SystemModel, h, u):
        self.forward = _exp_left(model, h, u) @ _exp_right(model, h, -u)
        self.backward = _exp_left(model, h, -u) @ _exp_right(model, h, u)

    def __call__(self, a):
        return self.forward @ np.asarray(a, dtype=complex)

    def inverse(self, a):
        return self.backward @ np.asarray(a, dtype=complex)


def beta_element(model: SystemModel, h, u, a) -> np.ndarray:
    return Beta(model, h, u)(a)


def beta_inverse_element(model: SystemModel, h, u, a) -> np.ndarray:
    return Beta(model, h, u).inverse(a)


def beta_checks(model: SystemModel, h, u, seed: int = 0, max_pairs: int = 4096) -> dict:
    """Residuals of multiplicativity, unitarity ``beta(a)^* = beta^{-1}(a^*)`` and invertibility."""
    rng = np.random.default_rng(seed)
    beta = Beta(model, h, u)
    basis = list(np.eye(model.N0, dtype=complex))
    samples = model.generators() + [model.random_hermitian(rng), model.random_hermitian(rng) * 1j]
    if model.N0**2 <= max_pairs:
        pairs = [(x, y) for x in basis for y in basis]
    else:
        pairs = [(x, y) for x in samples for y in samples]
    mult = 0.0
    for x, y in pairs:
        lhs = beta(model.product(x, y))
        rhs = model.product(beta(x), beta(y))
        mult = max(mult, float(np.max(np.abs(lhs - rhs))))
    unit = inv = 0.0
    for x in (basis if model.N0 <= 64 else []) + samples:
        unit = max(unit, float(np.max(np.abs(model.star(beta(x)) - beta.inverse(model.star(x))))))
        inv = max(inv, float(np.max(np.abs(beta.inverse(beta(x)) - x))))
    return {"multiplicativity": mult, "unitarity": unit, "invertibility": inv, "approximate": not model.exact}


def grading_and_evenness_check(space: GradedSpace, D: GradedOperator, gamma: GradedOperator | None = None, samples=None) -> dict:
    gamma = gamma or build_gamma(space)
    model = space.model
    samples = samples if samples is not None else model.generators()
    dnorm = operator_norm(D)
    anti = operator_norm(gamma @ D + D @ gamma)
    left = right = 0.0
    for a in samples:
        La = lift_h0(space, model.left_mult(a))
        Ra = lift_h0(space, model.right_mult(a))
        left = max(left, (gamma @ La - La @ gamma).max_abs())
        right = max(right, (gamma @ Ra - Ra @ gamma).max_abs())
    sq = (gamma @ gamma - space.identity()).max_abs()
    return {
        "anticommutator": anti,
        "anticommutator_bound": 1e-12 * max(dnorm, 1.0),
        "left_even": left,
        "right_even": right,
        "gamma_squared": sq,
    }


@dataclass
class CommutatorReport:
    """Norms per element and per truncation size, plus the thresholds used."""

    elements: dict = field(default_factory=dict)
    growth: list = field(default_factory=list)
    beta: dict = field(default_factory=dict)
    grading: dict = field(default_factory=dict)
    thresholds: dict = field(default_factory=dict)
    seed: int = 0

    def growth_verdict(self) -> dict:
        if len(self.growth) < 2:
            return {}
        first, last = self.growth[0], self.growth[-1]
        tw_var = max(abs(g["twisted"] / first["twisted"] - 1) for g in self.growth)
        untw_ratio = last["untwisted"] / first["untwisted"]
        return {
            "twisted_variation": tw_var,
            "untwisted_ratio": untw_ratio,
            "twisted_bounded": tw_var < self.thresholds.get("twisted_variation", 0.5),
            "untwisted_grows": untw_ratio >= self.thresholds.get("untwisted_growth", 2.0),
        }

    def to_dict(self):
        return {
            "elements": self.elements,
            "growth": self.growth,
            "growth_verdict": self.growth_verdict(),
            "beta": self.beta,
            "grading": self.grading,
            "thresholds": self.thresholds,
            "thresholds_are_conventions": True,
            "seed": self.seed,
        }


def torus_growth_family(theta, sizes, amplitude: float = 0.3, u: float = 1.0, template="cos1", mode=(0, 1), padding: int = 0) -> list[dict]:
    """Twisted and untwisted right-commutator norms on a family of torus windows."""
    rows = []
    for M in sizes:
        model = build_nc_torus(theta, M, padding)
        space = build_space(model)
        h = build_conformal_element(model, template, amplitude)
        D = build_D(space, build_d(space), h, u)
        mask = None
        if padding:
            inner = model.inner_mask().astype(float)
            mask = np.tile(inner, space.basis.dim)
        res = twisted_commutator_check(space, D, model.monomial(mode), h, u, input_mask=mask)
        rows.append({"M": int(M), "twisted": res["twisted"], "untwisted": res["untwisted"], "approximate": True})
    return rows
