"""Spectra, Hodge decomposition, cohomology, index, heat traces, summability."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .complex_engine import GradedOperator
from .errors import ConsistencyError, DegeneracyError, ParameterError

KERNEL_TAU = 1e-9
MIN_GAP_RATIO = 100.0


@dataclass
class Eigen:
    values: np.ndarray
    vectors: np.ndarray | None


def _as_dense(op) -> np.ndarray:
    return op.dense() if isinstance(op, GradedOperator) else np.asarray(op)


def _check_hermitian(A: np.ndarray, tol: float, label: str = "operator"):
    scale = max(float(np.max(np.abs(A))) if A.size else 0.0, 1.0)
    asym = float(np.max(np.abs(A - A.conj().T))) if A.size else 0.0
    if asym > tol * scale:
        raise ConsistencyError(f"{label} is not Hermitian (residual {asym:.3g})")


def hermitian_eigendecompose(op, vectors: bool = True, tol: float = 1e-12) -> Eigen:
    """Ascending real eigenvalues (and orthonormal eigenvectors) of a Hermitian operator.

    Degree-preserving graded operators are diagonalized block by block.
    """
    if isinstance(op, GradedOperator):
        if not op.hermitian:
            raise ConsistencyError(f"{op.label or 'operator'} is not flagged Hermitian")
        if op.degree_shift == 0 and all(ko == ki for ko, ki in op.blocks):
            vals, vecs = [], []
            sp = op.space
            for k in range(sp.n + 1):
                B = op.block(k, k)
                _check_hermitian(B, tol, op.label)
                if vectors:
                    w, V = np.linalg.eigh(B)
                    full = np.zeros((sp.total_dim, V.shape[1]), dtype=complex)
                    full[sp.degree_slice(k)] = V
                    vecs.append(full)
                else:
                    w = np.linalg.eigvalsh(B)
                vals.append(w)
            w = np.concatenate(vals)
            order = np.argsort(w, kind="stable")
            return Eigen(w[order], np.hstack(vecs)[:, order] if vectors else None)
        A = op.dense()
    else:
        A = np.asarray(op)
    _check_hermitian(A, tol)
    A = (A + A.conj().T) / 2
    if vectors:
        w, V = np.linalg.eigh(A)
        return Eigen(w, V)
    return Eigen(np.linalg.eigvalsh(A), None)


@dataclass
class KernelDecision:
    dim: int
    threshold: float
    largest_zero: float
    smallest_nonzero: float
    gap_ratio: float
    degenerate: bool

    def to_dict(self):
        return {k: (float(v) if isinstance(v, (float, np.floating)) else v) for k, v in self.__dict__.items()}


def kernel_split(values, scale: float, tau: float = KERNEL_TAU, min_gap: float = MIN_GAP_RATIO) -> KernelDecision:
    """Count values with ``|v| <= tau * scale``; the gap ratio is smallest nonzero / threshold."""
    a = np.abs(np.asarray(values, dtype=float))
    thr = tau * scale
    zero = a <= thr
    largest_zero = float(a[zero].max()) if zero.any() else 0.0
    smallest_nonzero = float(a[~zero].min()) if (~zero).any() else np.inf
    gap = smallest_nonzero / thr if thr > 0 else np.inf
    return KernelDecision(int(zero.sum()), thr, largest_zero, smallest_nonzero, gap, bool(gap < min_gap))


@dataclass
class HodgeDecomposition:
    E_minus: np.ndarray
    E_zero: np.ndarray
    E_plus: np.ndarray
    residuals: dict
    kernel: KernelDecision

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.E_minus.shape[1], self.E_zero.shape[1], self.E_plus.shape[1]


def _range_basis(A: np.ndarray, abs_thr: float) -> np.ndarray:
    U, s, _ = np.linalg.svd(A, full_matrices=False)
    return U[:, s > abs_thr]


def hodge_decompose(D, d_u, d_u_adj, tau: float = KERNEL_TAU, tol: float = 1e-9) -> HodgeDecomposition:
    """Orthonormal bases of ``ran d_u^dag``, ``ker D_u`` and ``ran d_u``."""
    Dd = _as_dense(D)
    eig = hermitian_eigendecompose(D if isinstance(D, GradedOperator) else Dd)
    lam2 = eig.values**2
    scale = float(lam2.max()) if lam2.size else 0.0
    kern = kernel_split(lam2, scale, tau)
    E0 = eig.vectors[:, np.abs(eig.values) ** 2 <= kern.threshold]
    # singular values of d_u: s^2 <= tau * ||D||^2 is numerically zero
    sv_thr = np.sqrt(tau * scale)
    Ep = _range_basis(_as_dense(d_u), sv_thr)
    Em = _range_basis(_as_dense(d_u_adj), sv_thr)

    def cross(X, Y):
        return float(np.max(np.abs(X.conj().T @ Y))) if X.size and Y.size else 0.0

    total = Dd.shape[0]
    res = {
        "plus_minus": cross(Ep, Em),
        "plus_zero": cross(Ep, E0),
        "minus_zero": cross(Em, E0),
        "dimension_defect": int(total - (Ep.shape[1] + E0.shape[1] + Em.shape[1])),
    }
    out = HodgeDecomposition(Em, E0, Ep, res, kern)
    if res["dimension_defect"] != 0:
        raise DegeneracyError(
            f"Hodge dimensions {out.dims} do not sum to {total}; gap ratio {kern.gap_ratio:.3g}"
        )
    return out


@dataclass
class Cohomology:
    dims: list
    decisions: list
    scale: float

    @property
    def min_gap_ratio(self) -> float:
        return min(dec.gap_ratio for dec in self.decisions)

    @property
    def degenerate(self) -> bool:
        return any(dec.degenerate for dec in self.decisions)


def cohomology_dims(laplacian_eigs, tau: float = KERNEL_TAU, min_gap: float = MIN_GAP_RATIO, strict: bool = True) -> Cohomology:
    """``dim ker Delta_k`` by thresholding against the largest Laplacian eigenvalue."""
    eigs = [np.asarray(e, dtype=float) for e in laplacian_eigs]
    scale = max(float(np.max(np.abs(e))) for e in eigs if e.size)
    decisions = [kernel_split(e, scale, tau, min_gap) for e in eigs]
    coh = Cohomology([dec.dim for dec in decisions], decisions, scale)
    if strict and coh.degenerate:
        raise DegeneracyError(
            f"ambiguous kernel gap (ratio {coh.min_gap_ratio:.3g} < {min_gap}); adjust tau or the amplitude"
        )
    return coh


def euler_characteristic(dims) -> int:
    return int(sum((-1) ** k * int(v) for k, v in enumerate(dims)))


def odd_index(D: GradedOperator, gamma: GradedOperator, tau: float = KERNEL_TAU) -> dict:
    """``dim ker D^+ - dim ker D^-`` as the trace of the grading on ``ker D_u``."""
    eig = hermitian_eigendecompose(D)
    lam2 = eig.values**2
    kern = kernel_split(lam2, float(lam2.max()), tau)
    V = eig.vectors[:, lam2 <= kern.threshold]
    G = gamma.dense()
    restricted = V.conj().T @ G @ V
    signs = np.linalg.eigvalsh((restricted + restricted.conj().T) / 2) if V.size else np.array([])
    even = int(np.sum(signs > 0.5))
    odd = int(np.sum(signs < -0.5))
    purity = float(np.max(np.abs(np.abs(signs) - 1))) if signs.size else 0.0
    return {"index": even - odd, "ker_even": even, "ker_odd": odd, "kernel": kern, "grading_purity": purity}


def heat_trace(eigs, t: float) -> float:
    if t <= 0:
        raise ParameterError(f"heat time must be positive, got {t}")
    return float(np.sum(np.exp(-t * np.asarray(eigs, dtype=float))))


def mckean_singer(laplacian_eigs, t: float) -> float:
    return float(sum((-1) ** k * heat_trace(e, t) for k, e in enumerate(laplacian_eigs)))


def t_grid(t_min: float = 0.01, t_max: float = 10.0, per_decade: int = 16) -> np.ndarray:
    decades = np.log10(t_max) - np.log10(t_min)
    count = int(round(decades * per_decade)) + 1
    return np.logspace(np.log10(t_min), np.log10(t_max), count)


@dataclass
class HeatFit:
    exponent: float
    a0: float
    window: list
    inconclusive: bool
    sizes: list

    def to_dict(self):
        return {
            "exponent": self.exponent,
            "a0": self.a0,
            "window": [float(t) for t in self.window],
            "inconclusive": self.inconclusive,
            "sizes": self.sizes,
            "approximate": True,
        }


def heat_coefficient_fit(family: dict, ts, fit_t_max: float = 0.04, saturation: float = 0.01, min_points: int = 3) -> HeatFit:
    """Fit ``log Tr e^{-t Delta} = exponent * log t + log a0`` where truncation has saturated.

    ``family`` maps a truncation size to the eigenvalues of one Laplacian. A
    grid time is usable when the trace of the largest size differs from the
    next smaller one by less than ``saturation`` (relative) and ``t <= fit_t_max``.
    """
    sizes = sorted(family)
    if len(sizes) < 2:
        raise ParameterError("heat fit needs at least two truncation sizes")
    ts = np.asarray(ts, dtype=float)
    big = np.array([heat_trace(family[sizes[-1]], t) for t in ts])
    small = np.array([heat_trace(family[sizes[-2]], t) for t in ts])
    ok = (np.abs(big - small) / big < saturation) & (ts <= fit_t_max)
    if ok.sum() < min_points:
        return HeatFit(float("nan"), float("nan"), list(ts[ok]), True, sizes)
    slope, intercept = np.polyfit(np.log(ts[ok]), np.log(big[ok]), 1)
    return HeatFit(float(slope), float(np.exp(intercept)), list(ts[ok]), False, sizes)


# -- summability ----------------------------------------------------------------


def resolvent_singular_values(d_spectrum) -> np.ndarray:
    """Singular values of ``(1 + D^2)^{-1/2}`` from eigenvalues of ``D^2``, descending."""
    lam2 = np.clip(np.asarray(d_spectrum, dtype=float), 0.0, None)
    return np.sort(1.0 / np.sqrt(1.0 + lam2))[::-1]


def p_plus_norm(mu, p: float) -> np.ndarray:
    """Running supremum of ``sigma_k / k^{(p-1)/p}`` (``sigma_k / log k`` for p = 1)."""
    if p < 1:
        raise ParameterError("p must be >= 1")
    mu = np.sort(np.asarray(mu, dtype=float))[::-1]
    sigma = np.cumsum(mu)
    k = np.arange(1, len(mu) + 1, dtype=float)
    if p == 1:
        ratio = np.full_like(sigma, np.nan)
        ratio[1:] = sigma[1:] / np.log(k[1:])
        ratio[0] = 0.0
    else:
        ratio = sigma / k ** ((p - 1) / p)
    return np.maximum.accumulate(ratio)


@dataclass
class SummabilityReport:
    sizes: list
    p_hat: float
    p_hat_stderr: float
    per_size: dict
    p_plus: dict = field(default_factory=dict)
    slope: float = float("nan")

    def to_dict(self):
        return {
            "sizes": list(self.sizes),
            "p_hat": self.p_hat,
            "p_hat_stderr": self.p_hat_stderr,
            "band": [self.p_hat - 2 * self.p_hat_stderr, self.p_hat + 2 * self.p_hat_stderr],
            "slope": self.slope,
            "per_size": {str(k): v for k, v in self.per_size.items()},
            "p_plus_sup": {str(k): v for k, v in self.p_plus.items()},
        }


def fit_window(count: int, drop_top: float = 0.1, drop_bottom: float = 0.4) -> slice:
    return slice(int(drop_top * count), int(round((1 - drop_bottom) * count)))


def _slope_fit(x, y):
    A = np.vstack([x, np.ones_like(x)]).T
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    dof = max(len(x) - 2, 1)
    sxx = np.sum((x - x.mean()) ** 2)
    stderr = np.sqrt(np.sum(resid**2) / dof / sxx) if sxx > 0 else np.inf
    return float(coef[0]), float(stderr)


def spectral_dimension_fit(family: dict, ps=(1, 2, 3), drop_top: float = 0.1, drop_bottom: float = 0.4) -> SummabilityReport:
    """Pooled log-log fit of ``mu_k`` against k over the middle of each spectrum.

    ``family`` maps a size label to the eigenvalues of ``D_u^2``. Returns
    ``p_hat = -1 / slope`` with a standard-error band, per-size estimates and
    the final partial supremum of each requested p+ profile.
    """
    if len(family) < 3:
        raise ParameterError("spectral dimension fit needs at least three sizes")
    xs, ys, per_size, p_plus = [], [], {}, {}
    for size in sorted(family):
        mu = resolvent_singular_values(family[size])
        k = np.arange(1, len(mu) + 1, dtype=float)
        w = fit_window(len(mu), drop_top, drop_bottom)
        x, y = np.log(k[w]), np.log(mu[w])
        s, _ = _slope_fit(x, y)
        per_size[size] = -1.0 / s
        p_plus[size] = {str(p): float(p_plus_norm(mu, p)[-1]) for p in ps}
        xs.append(x)
        ys.append(y)
    slope, stderr = _slope_fit(np.concatenate(xs), np.concatenate(ys))
    p_hat = -1.0 / slope
    return SummabilityReport(sorted(family), p_hat, stderr / slope**2, per_size, p_plus, slope)


def weyl_count_dimension(eigenvalues, lo_frac: float = 0.1, hi_frac: float = 0.6) -> float:
    """Brute-force Weyl exponent: slope of log #{lambda <= L} against log sqrt(L)."""
    lam = np.sort(np.clip(np.asarray(eigenvalues, dtype=float), 0, None))
    lam = lam[lam > 0]
    counts = np.arange(1, len(lam) + 1)
    w = slice(int(lo_frac * len(lam)), int(hi_frac * len(lam)))
    slope, _ = _slope_fit(np.log(np.sqrt(lam[w])), np.log(counts[w]))
    return slope


# -- report ----------------------------------------------------------------------


@dataclass
class HodgeReport:
    h: dict | None
    u: float
    eigenvalues: list
    cohomology: Cohomology
    chi: int
    index: dict
    mckean_singer: dict
    hodge_residuals: dict | None = None
    approximate: bool = False

    def to_dict(self):
        return {
            "h": self.h,
            "u": self.u,
            "dims": self.cohomology.dims,
            "chi": self.chi,
            "odd_index": self.index["index"],
            "ker_even": self.index["ker_even"],
            "ker_odd": self.index["ker_odd"],
            "kernel_gap": [d.to_dict() for d in self.cohomology.decisions],
            "mckean_singer": self.mckean_singer,
            "hodge_residuals": self.hodge_residuals,
            "approximate": self.approximate,
        }
