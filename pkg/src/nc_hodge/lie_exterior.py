"""Lie algebra structure constants and the exterior algebra of the dual.

Generators are indexed from 0. Structure constants are stored as ``c[k, i, j]``
with ``[d_i, d_j] = sum_k c[k, i, j] d_k``. The exterior algebra uses the
orthonormal multi-index basis, ordered by degree and then lexicographically.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from math import comb

import numpy as np

from .errors import StructureError

JACOBI_TOL = 1e-12


@dataclass(frozen=True)
class LieAlgebraSpec:
    n: int
    c: np.ndarray
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float)
        object.__setattr__(self, "c", c)
        if self.n < 1:
            raise StructureError(f"dimension must be positive, got {self.n}")
        if c.shape != (self.n, self.n, self.n):
            raise StructureError(
                f"structure constants must have shape {(self.n,) * 3}, got {c.shape}"
            )
        if self.labels is not None and len(self.labels) != self.n:
            raise StructureError("one label per generator is required")

    def to_dict(self):
        return {"n": self.n, "c": self.c.tolist(), "labels": list(self.labels or [])}


def su2() -> LieAlgebraSpec:
    """su(2) with ``c[k, i, j] = -eps_{ijk}``, matching ``d_j = ad(i J_j)``."""
    c = np.zeros((3, 3, 3))
    for i, j, k in [(0, 1, 2), (1, 2, 0), (2, 0, 1)]:
        c[k, i, j] = -1.0
        c[k, j, i] = 1.0
    return LieAlgebraSpec(3, c, ("J1", "J2", "J3"))


def abelian(n: int) -> LieAlgebraSpec:
    return LieAlgebraSpec(n, np.zeros((n, n, n)))


def validate_lie_algebra(spec: LieAlgebraSpec, tol: float = JACOBI_TOL) -> list[str]:
    """Return a list of violated identities (empty iff the bracket is a Lie bracket)."""
    c = spec.c
    if c.shape != (spec.n,) * 3:
        raise StructureError(f"bad structure constant shape {c.shape}")
    problems = []
    asym = c + c.transpose(0, 2, 1)
    for k, i, j in zip(*np.nonzero(np.abs(asym) > tol)):
        if i <= j:
            problems.append(
                f"antisymmetry: c[{k}][{i}][{j}] + c[{k}][{j}][{i}] = {asym[k, i, j]:.3g}"
            )
    # J[l, i, j, k] = sum_m c[m,i,j] c[l,m,k] + cyclic(i, j, k)
    first = np.einsum("mij,lmk->lijk", c, c)
    jac = first + first.transpose(0, 2, 3, 1) + first.transpose(0, 3, 1, 2)
    for l, i, j, k in zip(*np.nonzero(np.abs(jac) > tol)):
        problems.append(f"jacobi: (i,j,k,l)=({i},{j},{k},{l}) residual {jac[l, i, j, k]:.3g}")
    return problems


@dataclass(frozen=True)
class ExteriorBasis:
    n: int
    multi_indices: tuple[tuple[int, ...], ...] = field(init=False)

    def __post_init__(self):
        idx = tuple(t for k in range(self.n + 1) for t in combinations(range(self.n), k))
        object.__setattr__(self, "multi_indices", idx)
        object.__setattr__(self, "_position", {t: p for p, t in enumerate(idx)})

    @property
    def dim(self) -> int:
        return 2**self.n

    def position(self, idx) -> int:
        return self._position[tuple(idx)]

    def degree_dim(self, k: int) -> int:
        return comb(self.n, k)

    def degree_offset(self, k: int) -> int:
        return sum(comb(self.n, q) for q in range(k))

    def degree_slice(self, k: int) -> slice:
        start = self.degree_offset(k)
        return slice(start, start + comb(self.n, k))

    def degrees(self) -> np.ndarray:
        return np.array([len(t) for t in self.multi_indices])

    def to_dict(self):
        return {"n": self.n, "multi_indices": [list(t) for t in self.multi_indices]}

    @classmethod
    def from_dict(cls, data):
        basis = cls(int(data["n"]))
        stored = tuple(tuple(t) for t in data["multi_indices"])
        if stored != basis.multi_indices:
            raise StructureError("stored multi-index order does not match the canonical order")
        return basis


def wedge_insert(j: int, idx, n: int | None = None) -> tuple[int, tuple[int, ...] | None]:
    """Compute ``w_j ^ w_idx`` as ``(sign, sorted multi-index)``; sign 0 if j repeats."""
    if j < 0 or (n is not None and j >= n):
        raise IndexError(f"generator index {j} out of range")
    idx = tuple(idx)
    if j in idx:
        return 0, None
    smaller = sum(1 for i in idx if i < j)
    return (-1) ** smaller, tuple(sorted(idx + (j,)))


def wedge_sort(seq) -> tuple[int, tuple[int, ...] | None]:
    """Sign of the permutation sorting ``seq``; 0 when an index repeats."""
    seq = list(seq)
    if len(set(seq)) != len(seq):
        return 0, None
    sign = 1
    for a in range(len(seq)):
        for b in range(a + 1, len(seq)):
            if seq[a] > seq[b]:
                sign = -sign
    return sign, tuple(sorted(seq))


def build_T(basis: ExteriorBasis, j: int) -> np.ndarray:
    if not 0 <= j < basis.n:
        raise IndexError(f"generator index {j} out of range")
    T = np.zeros((basis.dim, basis.dim))
    for col, idx in enumerate(basis.multi_indices):
        sign, out = wedge_insert(j, idx)
        if sign:
            T[basis.position(out), col] = sign
    return T


def build_T_adjoint(basis: ExteriorBasis, j: int) -> np.ndarray:
    return build_T(basis, j).conj().T


def contract(j: int, idx) -> tuple[int, tuple[int, ...] | None]:
    """Combinatorial annihilation: delete j from idx with sign (-1)^(position)."""
    idx = tuple(idx)
    if j not in idx:
        return 0, None
    p = idx.index(j)
    return (-1) ** p, idx[:p] + idx[p + 1 :]


def bracket_term(spec: LieAlgebraSpec, basis: ExteriorBasis) -> dict:
    """Bracket part of the Chevalley-Eilenberg differential on each multi-index.

    Maps ``(i_1..i_K)`` to a dict ``{multi-index: coefficient}`` representing
    ``-1/2 sum_{k,a,b} (-1)^(k+1) c[i_k, a, b] w_a ^ w_b ^ (idx without i_k)``.
    """
    if spec.n != basis.n:
        raise StructureError("Lie algebra and exterior basis dimensions differ")
    out = {}
    for idx in basis.multi_indices:
        acc = {}
        for k, ik in enumerate(idx):  # k is 0-based, so (-1)^(k+1) in 1-based terms is (-1)^k
            rest = idx[:k] + idx[k + 1 :]
            pos_sign = (-1) ** k
            for a in range(spec.n):
                for b in range(spec.n):
                    coef = spec.c[ik, a, b]
                    if coef == 0.0:
                        continue
                    sign, target = wedge_sort((a, b) + rest)
                    if sign:
                        acc[target] = acc.get(target, 0.0) - 0.5 * pos_sign * sign * coef
        out[idx] = {t: v for t, v in acc.items() if v != 0.0}
    return out


def build_bracket_matrix(spec: LieAlgebraSpec, basis: ExteriorBasis) -> np.ndarray:
    B = np.zeros((basis.dim, basis.dim))
    for idx, terms in bracket_term(spec, basis).items():
        col = basis.position(idx)
        for target, coef in terms.items():
            B[basis.position(target), col] += coef
    return B


def build_grading(basis: ExteriorBasis) -> np.ndarray:
    return np.diag((-1.0) ** basis.degrees())


def build_degree_projection(basis: ExteriorBasis, k: int) -> np.ndarray:
    if not 0 <= k <= basis.n:
        raise IndexError(f"degree {k} outside [0, {basis.n}]")
    return np.diag((basis.degrees() == k).astype(float))
