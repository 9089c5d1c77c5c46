"""Graded Hilbert space ``H = (+)_k H_0 (x) L^k g*`` and the operators on it.

Coordinates are ordered degree-major; inside degree ``k`` the multi-index is the
slow index and the ``H_0`` basis the fast one, so an operator ``A (x) B`` with
``A`` acting on the exterior algebra and ``B`` on ``H_0`` is ``np.kron(A, B)``.
Operators are stored as dense degree blocks ``(k_out, k_in)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import comb

import numpy as np
import scipy.sparse.linalg as spla

from .errors import ConsistencyError, ParameterError, StructureError
from .lie_exterior import (
    ExteriorBasis,
    LieAlgebraSpec,
    build_bracket_matrix,
    build_grading,
    build_T,
    validate_lie_algebra,
)
from .system_models import ConformalElement, FuzzySphere, SystemModel, exp_element, expm_hermitian

DENSE_LIMIT = 4096


@dataclass(frozen=True)
class GradedSpace:
    model: SystemModel
    basis: ExteriorBasis
    lie: LieAlgebraSpec

    @property
    def n(self) -> int:
        return self.basis.n

    @property
    def N0(self) -> int:
        return self.model.N0

    @property
    def degree_dims(self) -> list[int]:
        return [comb(self.n, k) * self.N0 for k in range(self.n + 1)]

    @property
    def offsets(self) -> list[int]:
        return [self.basis.degree_offset(k) * self.N0 for k in range(self.n + 2)]

    @property
    def total_dim(self) -> int:
        return self.N0 * self.basis.dim

    def degree_slice(self, k: int) -> slice:
        off = self.offsets
        return slice(off[k], off[k + 1])

    def degree_of_index(self) -> np.ndarray:
        return np.repeat(np.arange(self.n + 1), self.degree_dims)

    def lift(self, lam: np.ndarray, op: np.ndarray, label: str = "") -> "GradedOperator":
        """``lam (x) op`` split into degree blocks."""
        blocks = {}
        for ko in range(self.n + 1):
            so = self.basis.degree_slice(ko)
            for ki in range(self.n + 1):
                sub = lam[so, self.basis.degree_slice(ki)]
                if np.any(sub):
                    blocks[(ko, ki)] = np.kron(sub, op)
        return GradedOperator(self, blocks, label=label)

    def block_diagonal(self, per_degree: list[np.ndarray], label: str = "") -> "GradedOperator":
        """Degree-0 operator acting as ``I (x) per_degree[k]`` on degree k."""
        blocks = {k: None for k in range(self.n + 1)}
        for k in range(self.n + 1):
            blocks[k] = np.kron(np.eye(comb(self.n, k)), per_degree[k])
        return GradedOperator(self, {(k, k): b for k, b in blocks.items()}, degree_shift=0, label=label)

    def identity(self) -> "GradedOperator":
        return self.block_diagonal([np.eye(self.N0)] * (self.n + 1), label="I")


def build_space(model: SystemModel, lie: LieAlgebraSpec | None = None) -> GradedSpace:
    lie = lie or model.lie
    if lie.n != model.n:
        raise StructureError(f"model has {model.n} derivations but the Lie algebra has dimension {lie.n}")
    return GradedSpace(model, ExteriorBasis(model.n), lie)


@dataclass
class GradedOperator:
    space: GradedSpace
    blocks: dict
    degree_shift: int | str | None = None
    hermitian: bool = False
    label: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.degree_shift is None:
            shifts = {ko - ki for ko, ki in self.blocks}
            self.degree_shift = shifts.pop() if len(shifts) == 1 else ("mixed" if shifts else 0)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.space.total_dim,) * 2

    def block(self, ko: int, ki: int) -> np.ndarray:
        b = self.blocks.get((ko, ki))
        if b is None:
            dims = self.space.degree_dims
            return np.zeros((dims[ko], dims[ki]), dtype=complex)
        return b

    def dense(self) -> np.ndarray:
        out = np.zeros(self.shape, dtype=complex)
        for (ko, ki), b in self.blocks.items():
            out[self.space.degree_slice(ko), self.space.degree_slice(ki)] = b
        return out

    def matvec(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x)
        out = np.zeros(x.shape, dtype=complex)
        for (ko, ki), b in self.blocks.items():
            out[self.space.degree_slice(ko)] += b @ x[self.space.degree_slice(ki)]
        return out

    @property
    def H(self) -> "GradedOperator":
        blocks = {(ki, ko): b.conj().T for (ko, ki), b in self.blocks.items()}
        shift = -self.degree_shift if isinstance(self.degree_shift, int) else self.degree_shift
        return GradedOperator(self.space, blocks, shift, self.hermitian, f"{self.label}^H")

    def __matmul__(self, other: "GradedOperator") -> "GradedOperator":
        blocks = {}
        for (ko, km), a in self.blocks.items():
            for (km2, ki), b in other.blocks.items():
                if km != km2:
                    continue
                prod = a @ b
                if (ko, ki) in blocks:
                    blocks[(ko, ki)] = blocks[(ko, ki)] + prod
                else:
                    blocks[(ko, ki)] = prod
        return GradedOperator(self.space, blocks)

    def _combine(self, other, sign):
        blocks = {key: b.copy() for key, b in self.blocks.items()}
        for key, b in other.blocks.items():
            blocks[key] = blocks[key] + sign * b if key in blocks else sign * b
        return GradedOperator(self.space, blocks)

    def __add__(self, other):
        return self._combine(other, 1)

    def __sub__(self, other):
        return self._combine(other, -1)

    def __mul__(self, scalar):
        return GradedOperator(self.space, {k: scalar * b for k, b in self.blocks.items()}, self.degree_shift)

    __rmul__ = __mul__

    def frobenius(self) -> float:
        return float(np.sqrt(sum(np.linalg.norm(b) ** 2 for b in self.blocks.values())))

    def max_abs(self) -> float:
        return max((float(np.max(np.abs(b))) for b in self.blocks.values() if b.size), default=0.0)

    def restrict_columns(self, mask: np.ndarray) -> "GradedOperator":
        """Keep only input coordinates where ``mask`` (over the full space) is true."""
        blocks = {}
        for (ko, ki), b in self.blocks.items():
            m = mask[self.space.degree_slice(ki)]
            blocks[(ko, ki)] = b * m[None, :]
        return GradedOperator(self.space, blocks, self.degree_shift)

    def check_degree_shift(self, tol: float = 0.0) -> float:
        """Largest block entry off the declared degree shift (0 when consistent)."""
        if not isinstance(self.degree_shift, int):
            return 0.0
        worst = 0.0
        for (ko, ki), b in self.blocks.items():
            if ko - ki != self.degree_shift and b.size:
                worst = max(worst, float(np.max(np.abs(b))))
        if worst > tol:
            raise ConsistencyError(f"{self.label}: entries of size {worst:.3g} off the declared degree shift")
        return worst


def operator_norm(op, dense_limit: int = DENSE_LIMIT) -> float:
    """Largest singular value via a Hermitian eigensolve of ``A^H A``."""
    if isinstance(op, np.ndarray):
        if not op.size:
            return 0.0
        gram = op.conj().T @ op
        return float(np.sqrt(max(np.linalg.eigvalsh((gram + gram.conj().T) / 2)[-1], 0.0)))
    if not op.blocks:
        return 0.0
    if op.space.total_dim <= dense_limit:
        return operator_norm(op.dense())
    adj = op.H
    n = op.space.total_dim
    lin = spla.LinearOperator((n, n), matvec=lambda x: adj.matvec(op.matvec(x)), dtype=complex)
    v0 = np.ones(n, dtype=complex) / np.sqrt(n)
    w = spla.eigsh(lin, k=1, which="LA", v0=v0, tol=1e-12, return_eigenvectors=False)
    return float(np.sqrt(max(w[0].real, 0.0)))


# -- operators -----------------------------------------------------------------


def build_d(space: GradedSpace) -> GradedOperator:
    """Chevalley-Eilenberg differential ``sum_j d_j (x) T_j + bracket term``."""
    model, basis = space.model, space.basis
    if len(model.derivations) != space.n:
        raise StructureError("number of derivations does not match the Lie algebra dimension")
    d = None
    for j in range(space.n):
        term = space.lift(build_T(basis, j), model.derivations[j])
        d = term if d is None else d + term
    B = build_bracket_matrix(space.lie, basis)
    if np.any(B):
        d = d + space.lift(B, np.eye(space.N0))
    d.degree_shift, d.label = 1, "d"
    return d


def build_d_adjoint(space: GradedSpace, d: GradedOperator) -> GradedOperator:
    dstar = d.H
    dstar.degree_shift, dstar.label = -1, "d*"
    return dstar


def d_adjoint_formula(space: GradedSpace) -> GradedOperator:
    """Adjoint assembled term by term: ``sum_j d_j^H (x) T_j^H + conj(bracket)^H``.

    With anti-Hermitian derivations ``d_j^H = -d_j``.
    """
    out = None
    for j in range(space.n):
        dj = space.model.derivations[j]
        term = space.lift(build_T(space.basis, j).T, dj.conj().T)
        out = term if out is None else out + term
    B = build_bracket_matrix(space.lie, space.basis)
    if np.any(B):
        out = out + space.lift(B.conj().T, np.eye(space.N0))
    out.degree_shift, out.label = -1, "d*(formula)"
    return out


def weight_exponent(space: GradedSpace, k: int) -> float:
    return space.n / 2 - k


def build_K(space: GradedSpace, h: ConformalElement | None, u: float) -> GradedOperator:
    """Right multiplication by ``e^{(n/2 - k) u h}`` on degree k."""
    if h is None or u == 0 or not np.any(h.coords):
        K = space.identity()
    else:
        mats = [exp_element(space.model, h, weight_exponent(space, k) * u).right for k in range(space.n + 1)]
        K = space.block_diagonal(mats)
    K.label, K.hermitian = f"K_{u:g}", True
    return K


def build_d_u(space, d, h, u) -> GradedOperator:
    du = build_K(space, h, u) @ d @ build_K(space, h, -u)
    du.degree_shift, du.label = 1, f"d_{u:g}"
    return du


def build_D(space: GradedSpace, d: GradedOperator, h: ConformalElement | None, u: float) -> GradedOperator:
    """``D_u = K_u d K_{-u} + K_{-u} d^* K_u``; the second summand is the adjoint of the first."""
    du = build_d_u(space, d, h, u)
    D = du + du.H
    D.degree_shift, D.hermitian, D.label = "mixed", True, f"D_{u:g}"
    D.meta = {"u": u, "h": h.describe() if h is not None else None}
    return D


@dataclass
class Laplacians:
    blocks: list
    off_degree_residual: float

    def __getitem__(self, k):
        return self.blocks[k]

    def __len__(self):
        return len(self.blocks)


def build_laplacians(space: GradedSpace, D: GradedOperator, tol: float = 1e-10) -> Laplacians:
    D2 = D @ D
    scale = D2.max_abs() or 1.0
    off = 0.0
    for (ko, ki), b in D2.blocks.items():
        if ko != ki and b.size:
            off = max(off, float(np.max(np.abs(b))))
    rel = off / scale
    if rel > tol:
        raise ConsistencyError(f"D_u^2 has off-degree blocks of relative size {rel:.3g}")
    laps = []
    for k in range(space.n + 1):
        L = D2.block(k, k)
        laps.append((L + L.conj().T) / 2)
    return Laplacians(laps, rel)


def laplacian_blocks_from_d_u(space: GradedSpace, du: GradedOperator) -> list[np.ndarray]:
    """``Delta_k = d_u^H d_u + d_u d_u^H`` on degree k, without forming D_u^2."""
    laps = []
    for k in range(space.n + 1):
        L = np.zeros((space.degree_dims[k],) * 2, dtype=complex)
        if (k + 1, k) in du.blocks:
            A = du.blocks[(k + 1, k)]
            L += A.conj().T @ A
        if (k, k - 1) in du.blocks:
            B = du.blocks[(k, k - 1)]
            L += B @ B.conj().T
        laps.append((L + L.conj().T) / 2)
    return laps


def build_gamma(space: GradedSpace) -> GradedOperator:
    g = space.lift(build_grading(space.basis), np.eye(space.N0), label="gamma")
    g.degree_shift, g.hermitian = 0, True
    return g


def lift_h0(space: GradedSpace, op: np.ndarray, label: str = "") -> GradedOperator:
    """``I (x) op`` (multiplication operators act trivially on forms)."""
    return space.block_diagonal([op] * (space.n + 1), label=label)


# -- conformal comparison maps -------------------------------------------------


@dataclass
class ConformalMaps:
    gram: np.ndarray
    L: np.ndarray
    H: np.ndarray
    U: np.ndarray
    unitarity_residual: float
    adjoint_residual: float
    conjugation_residual: float
    d_phi: np.ndarray
    d_phi_adjoint: np.ndarray


def weighted_gram(model: FuzzySphere, W: np.ndarray) -> np.ndarray:
    """``G[p, q] = phi_0(b_p^* b_q W)`` from the basis matrices."""
    B = model.basis_matrices()
    return np.einsum("pij,qik,kj->pq", B.conj(), B, W) / model.N


def build_conformal_maps(space: GradedSpace, h: ConformalElement, D_half: GradedOperator | None = None) -> ConformalMaps:
    """Maps between the reference space and the conformally weighted space.

    The weighted space shares the coordinates of ``H`` but carries the Gram
    matrix of ``(a, a')_phi = phi_0(a^* a' e^{(n/2-k) h})`` on degree k.
    Checks ``U^dag (d_phi + d_phi^*) U = D_{1/2}`` where ``U^dag = U^H G``.
    """
    model = space.model
    if not model.exact or not isinstance(model, FuzzySphere) or h.matrix is None:
        raise ParameterError("conformal maps need an exact matrix model")
    n, N0 = space.n, space.N0
    grams, hs, us = [], [], []
    for k in range(n + 1):
        w = weight_exponent(space, k)
        G_k = weighted_gram(model, expm_hermitian(h.matrix, w))
        if np.min(np.linalg.eigvalsh((G_k + G_k.conj().T) / 2)) <= 0:
            raise ConsistencyError("weighted Gram matrix is not positive definite")
        grams.append(G_k)
        hs.append(model.right_mult(model.to_coords(expm_hermitian(h.matrix, w))))
        us.append(model.right_mult(model.to_coords(expm_hermitian(h.matrix, -w / 2))))
    G = space.block_diagonal(grams).dense()
    Hmap = space.block_diagonal(hs).dense()
    U = space.block_diagonal(us).dense()
    L = np.eye(space.total_dim)

    d = build_d(space).dense()
    d_phi_adj = np.linalg.solve(G, d.conj().T @ G)
    U_dag = U.conj().T @ G
    if D_half is None:
        D_half = build_D(space, build_d(space), h, 0.5)
    conj = U_dag @ (d + d_phi_adj) @ U - D_half.dense()
    return ConformalMaps(
        gram=G,
        L=L,
        H=Hmap,
        U=U,
        unitarity_residual=float(np.max(np.abs(U.conj().T @ G @ U - np.eye(space.total_dim)))),
        adjoint_residual=float(np.max(np.abs(L.conj().T @ G - Hmap))),
        conjugation_residual=operator_norm(conj),
        d_phi=d,
        d_phi_adjoint=d_phi_adj,
    )


def perturbation_profile(space: GradedSpace, h: ConformalElement, u: float, vs) -> list[dict]:
    """Finite shadow of the relative bound for ``D_{u+v} - D_u``.

    Reports ``||D_{u+v} - D_u||`` and ``||(D_{u+v} - D_u)(1 + D_u^2)^{-1/2}||``;
    both should shrink to 0 with v.
    """
    d = build_d(space)
    Du = build_D(space, d, h, u).dense()
    w, V = np.linalg.eigh(Du)
    resolvent = (V / np.sqrt(1 + w**2)) @ V.conj().T
    rows = []
    for v in vs:
        diff = build_D(space, d, h, u + v).dense() - Du
        rows.append({"v": float(v), "absolute": operator_norm(diff), "relative": operator_norm(diff @ resolvent)})
    return rows


def complex_invariants(space: GradedSpace, d: GradedOperator, tol: float = 1e-10, seed: int = 0) -> dict:
    """Nilpotency and adjointness residuals for the reference differential."""
    rng = np.random.default_rng(seed)
    dd = d @ d
    nd = operator_norm(d)
    dstar = d_adjoint_formula(space)
    x = rng.standard_normal(space.total_dim) + 1j * rng.standard_normal(space.total_dim)
    y = rng.standard_normal(space.total_dim) + 1j * rng.standard_normal(space.total_dim)
    lhs = np.vdot(d.matvec(x), y)
    rhs = np.vdot(x, dstar.matvec(y))
    scale = np.linalg.norm(x) * np.linalg.norm(y) * max(nd, 1.0)
    return {
        "d_norm": nd,
        "d_squared": operator_norm(dd) / max(nd**2, 1e-300) if dd.blocks else 0.0,
        "adjointness": float(abs(lhs - rhs) / scale),
        "adjoint_formula": (dstar - build_d_adjoint(space, d)).max_abs(),
        "lie_violations": validate_lie_algebra(space.lie),
    }
