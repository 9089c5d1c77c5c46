"""Finite-dimensional ergodic C*-dynamical systems.

Two families are provided:

* the fuzzy sphere ``M_N`` with SU(2) acting by conjugation (exact), and
* the noncommutative n-torus truncated to the Fourier window ``|k_i| <= M``
  (products leaving the window are dropped).

Elements are coordinate vectors in an orthonormal basis of the GNS space
``H_0`` for the invariant trace, so every multiplication operator is a plain
``N0 x N0`` matrix and the GNS inner product is the Euclidean one.
"""

from __future__ import annotations

import hashlib
import itertools
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError, StructureError
from .lie_exterior import LieAlgebraSpec, abelian, su2

RESIDUAL_TOL = 1e-10


def expm_hermitian(A: np.ndarray, s: float = 1.0) -> np.ndarray:
    """exp(s A) for Hermitian A via eigendecomposition."""
    return expm_from_eigh(np.linalg.eigh(A), s)


def expm_from_eigh(eig, s: float) -> np.ndarray:
    w, V = eig
    return (V * np.exp(s * w)) @ V.conj().T


def spin_matrices(N: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Spin-(N-1)/2 angular momentum matrices, basis m = j, j-1, ..., -j."""
    j = (N - 1) / 2
    m = j - np.arange(N)
    Jp = np.zeros((N, N), dtype=complex)
    for a in range(1, N):
        Jp[a - 1, a] = np.sqrt(j * (j + 1) - m[a] * (m[a] + 1))
    J1 = (Jp + Jp.conj().T) / 2
    J2 = (Jp - Jp.conj().T) / 2j
    J3 = np.diag(m).astype(complex)
    return J1, J2, J3


@dataclass
class SystemModel:
    """Common interface: GNS space, derivations, multiplications, trace."""

    n: int
    N0: int
    derivations: list
    trace: np.ndarray
    unit: np.ndarray
    exact: bool
    lie: LieAlgebraSpec
    kind: str = "generic"
    params: dict = field(default_factory=dict)
    labels: list = field(default_factory=list)

    def left_mult(self, x) -> np.ndarray:
        raise NotImplementedError

    def right_mult(self, x) -> np.ndarray:
        raise NotImplementedError

    def star(self, x) -> np.ndarray:
        raise NotImplementedError

    def generators(self) -> list[np.ndarray]:
        raise NotImplementedError

    def product(self, x, y) -> np.ndarray:
        return self.left_mult(x) @ np.asarray(y, dtype=complex)

    def phi(self, x) -> complex:
        return complex(self.trace @ np.asarray(x, dtype=complex))

    def derive(self, j: int, x) -> np.ndarray:
        return self.derivations[j] @ np.asarray(x, dtype=complex)

    def random_hermitian(self, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
        x = rng.standard_normal(self.N0) + 1j * rng.standard_normal(self.N0)
        return scale * (x + self.star(x)) / 2

    def fingerprint(self) -> str:
        """Short content hash of the model parameters."""
        payload = json.dumps({"kind": self.kind, **self.params}, sort_keys=True, default=str)
        return hashlib.sha256(payload.encode()).hexdigest()[:12]

    def to_dict(self) -> dict:
        """Self-describing export: labels, row-major matrices, metadata."""

        def enc(a):
            a = np.asarray(a)
            return {"shape": list(a.shape), "real": a.real.ravel().tolist(), "imag": a.imag.ravel().tolist()}

        return {
            "kind": self.kind,
            "params": self.params,
            "exact": self.exact,
            "n": self.n,
            "N0": self.N0,
            "basis_labels": self.labels,
            "lie": self.lie.to_dict(),
            "derivations": [enc(D) for D in self.derivations],
            "trace": enc(self.trace),
            "unit": enc(self.unit),
            "fingerprint": self.fingerprint(),
        }


class FuzzySphere(SystemModel):
    """``M_N`` with the adjoint SU(2) action; ``d_j = ad(i J_j)``.

    Orthonormal basis ``sqrt(N) E_ab`` (row-major), so the coordinates of a
    matrix ``a`` are ``a.ravel() / sqrt(N)``.
    """

    def __init__(self, N: int):
        if int(N) != N or N < 2:
            raise ParameterError(f"fuzzy sphere needs integer N >= 2, got {N}")
        N = int(N)
        self.N = N
        self.J = spin_matrices(N)
        I = np.eye(N)
        ders = [1j * (np.kron(J, I) - np.kron(I, J.T)) for J in self.J]
        # phi_0(a) = tr(a) / N = <1, a>
        trace = np.conj(self.to_coords(I))
        super().__init__(
            n=3,
            N0=N * N,
            derivations=ders,
            trace=trace,
            unit=self.to_coords(I),
            exact=True,
            lie=su2(),
            kind="fuzzy_sphere",
            params={"N": N},
            labels=[f"E{a}{b}" for a in range(N) for b in range(N)],
        )

    def to_coords(self, a) -> np.ndarray:
        return np.asarray(a, dtype=complex).ravel() / np.sqrt(self.N)

    def to_matrix(self, x) -> np.ndarray:
        return np.sqrt(self.N) * np.asarray(x, dtype=complex).reshape(self.N, self.N)

    def basis_matrices(self) -> np.ndarray:
        eye = np.eye(self.N0).reshape(self.N0, self.N, self.N)
        return np.sqrt(self.N) * eye.astype(complex)

    def left_mult(self, x) -> np.ndarray:
        return np.kron(self.to_matrix(x), np.eye(self.N))

    def right_mult(self, x) -> np.ndarray:
        return np.kron(np.eye(self.N), self.to_matrix(x).T)

    def star(self, x) -> np.ndarray:
        return self.to_coords(self.to_matrix(x).conj().T)

    def generators(self) -> list[np.ndarray]:
        return [self.to_coords(J) for J in self.J]


class NCTorus(SystemModel):
    """Noncommutative n-torus on the Fourier window ``|k_i| <= M``.

    Product convention ``U^k U^l = exp(-i pi <k, theta l>) U^(k+l)``, so
    ``(U^k)* = U^-k`` and ``U^l U^k = exp(2 pi i <k, theta l>) U^k U^l``.
    Derivations ``d_j U^k = 2 pi i k_j U^k``.
    """

    def __init__(self, theta, M: int, padding: int = 0):
        theta = np.atleast_2d(np.asarray(theta, dtype=float))
        if theta.ndim != 2 or theta.shape[0] != theta.shape[1]:
            raise ParameterError("theta must be a square matrix")
        if not np.allclose(theta, -theta.T, atol=1e-14, rtol=0):
            raise ParameterError("theta must be antisymmetric")
        if int(M) != M or M < 1 or padding < 0:
            raise ParameterError(f"truncation radius must be >= 1, got {M}")
        n = theta.shape[0]
        self.theta = theta
        self.M = int(M)
        self.padding = int(padding)
        self.radius = self.M + self.padding
        R = self.radius
        self.modes = np.array(list(itertools.product(range(-R, R + 1), repeat=n)), dtype=int)
        self.width = 2 * R + 1
        N0 = len(self.modes)
        ders = [np.diag(2j * np.pi * self.modes[:, j]).astype(complex) for j in range(n)]
        zero = self.index_of(np.zeros(n, dtype=int))
        unit = np.zeros(N0, dtype=complex)
        unit[zero] = 1.0
        super().__init__(
            n=n,
            N0=N0,
            derivations=ders,
            trace=unit.copy(),
            unit=unit,
            exact=False,
            lie=abelian(n),
            kind="nc_torus",
            params={"theta": theta.tolist(), "M": self.M, "padding": self.padding},
            labels=["U(" + ",".join(map(str, k)) + ")" for k in self.modes],
        )

    def index_of(self, k) -> int:
        k = np.asarray(k)
        if np.any(np.abs(k) > self.radius):
            raise KeyError(tuple(k))
        return int(self._encode(k[None, :])[0])

    def _encode(self, ks: np.ndarray) -> np.ndarray:
        idx = np.zeros(len(ks), dtype=int)
        for j in range(ks.shape[1]):
            idx = idx * self.width + (ks[:, j] + self.radius)
        return idx

    def inner_mask(self) -> np.ndarray:
        """Modes inside the unpadded window ``|k_i| <= M``."""
        return np.all(np.abs(self.modes) <= self.M, axis=1)

    def monomial(self, k) -> np.ndarray:
        x = np.zeros(self.N0, dtype=complex)
        x[self.index_of(k)] = 1.0
        return x

    def _mult(self, x, side: str) -> np.ndarray:
        x = np.asarray(x, dtype=complex)
        support = np.flatnonzero(x)
        out = np.zeros((self.N0, self.N0), dtype=complex)
        cols = np.arange(self.N0)
        for p in support:
            k = self.modes[p]
            targets = self.modes + k
            ok = np.all(np.abs(targets) <= self.radius, axis=1)
            if side == "left":  # U^k U^l
                phase = np.exp(-1j * np.pi * (self.modes @ (self.theta.T @ k)))
            else:  # U^l U^k
                phase = np.exp(-1j * np.pi * (self.modes @ (self.theta @ k)))
            rows = self._encode(targets[ok])
            out[rows, cols[ok]] += x[p] * phase[ok]
        return out

    def left_mult(self, x) -> np.ndarray:
        return self._mult(x, "left")

    def right_mult(self, x) -> np.ndarray:
        return self._mult(x, "right")

    def star(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=complex)
        neg = self._encode(-self.modes)
        return np.conj(x[neg])

    def generators(self) -> list[np.ndarray]:
        gens = []
        for j in range(self.n):
            e = np.zeros(self.n, dtype=int)
            e[j] = 1
            gens += [self.monomial(e), self.monomial(-e)]
        return gens


def build_fuzzy_sphere(N: int) -> FuzzySphere:
    return FuzzySphere(N)


def build_nc_torus(theta, M: int, padding: int = 0) -> NCTorus:
    return NCTorus(theta, M, padding)


def golden_theta(n: int = 2) -> np.ndarray:
    """Antisymmetric theta with theta_12 = (sqrt(5) - 1) / 2."""
    theta = np.zeros((n, n))
    if n >= 2:
        g = (np.sqrt(5.0) - 1.0) / 2.0
        theta[0, 1], theta[1, 0] = g, -g
    return theta


# -- conformal element --------------------------------------------------------


@dataclass
class ConformalElement:
    coords: np.ndarray
    left: np.ndarray
    right: np.ndarray
    template: str
    amplitude: float
    matrix: np.ndarray | None = None
    _eigh: dict = field(default_factory=dict, repr=False, compare=False)

    def describe(self) -> dict:
        return {"template": self.template, "amplitude": float(self.amplitude)}

    def eigh(self, which: str):
        """Cached eigendecomposition of ``matrix``, ``left`` or ``right``."""
        if which not in self._eigh:
            self._eigh[which] = np.linalg.eigh(getattr(self, which))
        return self._eigh[which]


FUZZY_TEMPLATES = ("j3", "j3_over_n", "j3_squared", "random_hermitian")
TORUS_TEMPLATES = ("cos1", "cos_all", "random_hermitian")


def build_conformal_element(model: SystemModel, template="j3", amplitude: float = 0.0, seed: int = 0) -> ConformalElement:
    """``h = amplitude * template`` as a selfadjoint model element.

    ``template`` is a name or an explicit coordinate vector / N x N matrix.
    """
    s = float(amplitude)
    name = template if isinstance(template, str) else "explicit"
    matrix = None
    if isinstance(model, FuzzySphere):
        N = model.N
        J3 = model.J[2]
        if isinstance(template, str):
            if template == "j3":
                base = J3
            elif template == "j3_over_n":
                base = J3 / N
            elif template == "j3_squared":
                base = J3 @ J3 / N
            elif template == "random_hermitian":
                rng = np.random.default_rng(seed)
                g = rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N))
                base = (g + g.conj().T) / (2 * np.sqrt(N))
            else:
                raise ParameterError(f"unknown fuzzy-sphere template {template!r}")
        else:
            base = np.asarray(template, dtype=complex)
            if base.shape == (model.N0,):
                base = model.to_matrix(base)
        if base.shape != (N, N):
            raise StructureError("template shape does not match the model")
        if not np.allclose(base, base.conj().T, atol=1e-12, rtol=0):
            raise ParameterError("conformal template must be Hermitian")
        matrix = s * (base + base.conj().T) / 2
        coords = model.to_coords(matrix)
    else:
        if isinstance(template, str):
            if template == "cos1":
                e = np.zeros(model.n, dtype=int)
                e[0] = 1
                base = (model.monomial(e) + model.monomial(-e)) / 2
            elif template == "cos_all":
                base = np.zeros(model.N0, dtype=complex)
                for j in range(model.n):
                    e = np.zeros(model.n, dtype=int)
                    e[j] = 1
                    base += (model.monomial(e) + model.monomial(-e)) / 2
            elif template == "random_hermitian":
                rng = np.random.default_rng(seed)
                base = np.zeros(model.N0, dtype=complex)
                for j in range(model.n):
                    e = np.zeros(model.n, dtype=int)
                    e[j] = 1
                    c = (rng.standard_normal() + 1j * rng.standard_normal()) / 2
                    base += c * model.monomial(e) + np.conj(c) * model.monomial(-e)
            else:
                raise ParameterError(f"unknown torus template {template!r}")
        else:
            base = np.asarray(template, dtype=complex)
        if base.shape != (model.N0,):
            raise StructureError("template shape does not match the model")
        if not np.allclose(base, model.star(base), atol=1e-12, rtol=0):
            raise ParameterError("conformal template must be selfadjoint")
        coords = s * base
    return ConformalElement(
        coords=coords,
        left=model.left_mult(coords),
        right=model.right_mult(coords),
        template=name,
        amplitude=s,
        matrix=matrix,
    )


@dataclass
class Exponential:
    """Multiplication operators by ``e^{s h}`` and its coordinates."""

    left: np.ndarray
    right: np.ndarray
    coords: np.ndarray
    approximate: bool


def exp_element(model: SystemModel, h: ConformalElement, s: float) -> Exponential:
    """``L`` and ``R`` of ``e^{s h}``.

    Exact models exponentiate the element itself; truncated models exponentiate
    the compressed multiplication operators, which keeps the one-parameter group
    law and positivity exact on the window.
    """
    if h.matrix is not None and isinstance(model, FuzzySphere):
        E = expm_from_eigh(h.eigh("matrix"), s)
        coords = model.to_coords(E)
        return Exponential(model.left_mult(coords), model.right_mult(coords), coords, False)
    left = expm_from_eigh(h.eigh("left"), s)
    right = expm_from_eigh(h.eigh("right"), s)
    return Exponential(left, right, right @ model.unit, not model.exact)


# -- invariant suite -----------------------------------------------------------


@dataclass
class InvariantResult:
    name: str
    residual: float
    bound: float
    hard: bool = True
    note: str = ""

    @property
    def passed(self) -> bool:
        return bool(self.residual <= self.bound)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "residual": float(self.residual),
            "bound": float(self.bound),
            "passed": self.passed,
            "hard": self.hard,
            "note": self.note,
        }


def _max_abs(a) -> float:
    a = np.asarray(a)
    return float(np.max(np.abs(a))) if a.size else 0.0


def joint_kernel_dim(model: SystemModel, tol: float = 1e-9) -> int:
    stacked = np.vstack(model.derivations)
    s = np.linalg.svd(stacked, compute_uv=False)
    scale = max(s.max(), 1.0)
    return int(np.sum(s <= tol * scale)) + max(0, model.N0 - len(s))


def model_invariants(model: SystemModel, lie: LieAlgebraSpec | None = None, seed: int = 0, tol: float = RESIDUAL_TOL) -> list[InvariantResult]:
    """Trace, invariance, skewness, Leibniz, bracket, ergodicity, commutation."""
    lie = lie or model.lie
    if lie.n != model.n:
        raise StructureError(f"Lie algebra dimension {lie.n} != model dimension {model.n}")
    rng = np.random.default_rng(seed)
    D = model.derivations
    out = []
    tag = model.kind

    # phi(b_p b_q) = phi(b_q b_p) over all basis pairs
    rows = np.array([model.trace @ model.left_mult(e) for e in np.eye(model.N0, dtype=complex)])
    out.append(InvariantResult(f"{tag}.trace_property", _max_abs(rows - rows.T), tol))

    out.append(InvariantResult(f"{tag}.trace_invariance", max(_max_abs(model.trace @ d) for d in D), tol))
    out.append(InvariantResult(f"{tag}.derivation_skew", max(_max_abs(d + d.conj().T) for d in D), tol))

    samples = model.generators() + [model.random_hermitian(rng)]
    star_res = max(
        _max_abs(model.derive(j, model.star(a)) - model.star(model.derive(j, a)))
        for j in range(model.n)
        for a in samples
    )
    out.append(InvariantResult(f"{tag}.star_derivation", star_res, tol))

    leib = max(
        _max_abs(d @ model.left_mult(a) - model.left_mult(a) @ d - model.left_mult(d @ a))
        for d in D
        for a in samples
    )
    out.append(InvariantResult(f"{tag}.leibniz", leib, tol))

    br = 0.0
    for i in range(model.n):
        for j in range(model.n):
            lhs = D[i] @ D[j] - D[j] @ D[i]
            rhs = sum(lie.c[k, i, j] * D[k] for k in range(model.n))
            br = max(br, _max_abs(lhs - rhs))
    out.append(InvariantResult(f"{tag}.bracket_consistency", br, tol))

    kdim = joint_kernel_dim(model)
    unit_res = max(_max_abs(d @ model.unit) for d in D)
    out.append(InvariantResult(f"{tag}.ergodic_kernel_dim", float(abs(kdim - 1)), 0.0, note=f"dim={kdim}"))
    out.append(InvariantResult(f"{tag}.unit_flat", unit_res, tol))

    star_rep = max(_max_abs(model.left_mult(model.star(a)) - model.left_mult(a).conj().T) for a in samples)
    out.append(InvariantResult(f"{tag}.left_star_representation", star_rep, tol))

    comm = max(
        _max_abs(model.left_mult(a) @ model.right_mult(b) - model.right_mult(b) @ model.left_mult(a))
        for a in samples
        for b in samples
    )
    note = "" if model.exact else "truncated window; informational"
    out.append(InvariantResult(f"{tag}.left_right_commute", comm, tol, hard=model.exact, note=note))
    return out


# -- multiplicities ------------------------------------------------------------


@dataclass
class SpinMultiplicity:
    spin: int
    casimir: float
    dim: int
    multiplicity: int

    def to_dict(self):
        return {"spin": self.spin, "casimir": self.casimir, "dim": self.dim, "multiplicity": self.multiplicity}


def multiplicity_report(model: SystemModel, tol: float = 1e-8) -> list[SpinMultiplicity]:
    """Casimir eigenspace decomposition of H_0 for an SU(2) model."""
    from .errors import DegeneracyError

    if model.n != 3 or model.kind != "fuzzy_sphere":
        raise ParameterError("multiplicity_report applies to the fuzzy sphere")
    casimir = -sum(d @ d for d in model.derivations)
    w = np.linalg.eigvalsh((casimir + casimir.conj().T) / 2)
    ls = (-1 + np.sqrt(1 + 4 * np.clip(w, 0, None))) / 2
    spins = np.rint(ls)
    if np.max(np.abs(ls - spins), initial=0.0) > tol * max(1.0, ls.max()):
        raise DegeneracyError("Casimir eigenvalues are not of the form l(l+1)")
    report = []
    for l in sorted(set(spins.astype(int))):
        dim = int(np.sum(spins == l))
        if dim % (2 * l + 1):
            raise DegeneracyError(f"spin {l} eigenspace of dimension {dim} is not a multiple of {2 * l + 1}")
        report.append(SpinMultiplicity(int(l), float(l * (l + 1)), dim, int(dim // (2 * l + 1))))
    return report
