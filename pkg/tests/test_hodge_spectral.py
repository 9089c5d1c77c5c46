import numpy as np
import pytest
from conftest import fuzzy, torus
from hypothesis import given, settings
from hypothesis import strategies as st

from nc_hodge.complex_engine import build_D, build_d_u, build_gamma, build_laplacians, laplacian_blocks_from_d_u
from nc_hodge.errors import ConsistencyError, DegeneracyError, ParameterError
from nc_hodge.hodge_spectral import (
    cohomology_dims,
    euler_characteristic,
    fit_window,
    heat_coefficient_fit,
    heat_trace,
    hermitian_eigendecompose,
    hodge_decompose,
    kernel_split,
    mckean_singer,
    odd_index,
    p_plus_norm,
    resolvent_singular_values,
    spectral_dimension_fit,
    t_grid,
    weyl_count_dimension,
)
from nc_hodge.system_models import build_conformal_element


def _laplacian_eigs(space, D):
    return [np.linalg.eigvalsh(L) for L in build_laplacians(space, D).blocks]


def test_kernel_split_threshold_and_gap():
    dec = kernel_split(np.array([1e-14, 0.5, 2.0]), scale=2.0)
    assert dec.dim == 1 and not dec.degenerate
    assert dec.gap_ratio == pytest.approx(0.5 / (1e-9 * 2.0))
    close = kernel_split(np.array([1e-14, 1e-8, 2.0]), scale=2.0)
    assert close.degenerate


def test_cohomology_strict_raises_on_ambiguous_gap():
    eigs = [np.array([0.0, 3e-8]), np.array([1.0])]
    with pytest.raises(DegeneracyError):
        cohomology_dims(eigs)
    assert cohomology_dims(eigs, strict=False).degenerate


def test_eigendecompose_rejects_non_hermitian():
    with pytest.raises(ConsistencyError):
        hermitian_eigendecompose(np.array([[0.0, 1.0], [0.0, 0.0]]))


@pytest.mark.parametrize("amp,u", [(0.0, 0.0), (0.3, 0.5), (0.6, 1.0)])
def test_fuzzy_cohomology_and_index(amp, u):
    _, space, d = fuzzy(2)
    h = build_conformal_element(space.model, "j3", amp) if amp else None
    D = build_D(space, d, h, u)
    eigs = _laplacian_eigs(space, D)
    coh = cohomology_dims(eigs)
    assert coh.dims == [1, 0, 0, 1]
    assert euler_characteristic(coh.dims) == 0
    idx = odd_index(D, build_gamma(space))
    assert idx["index"] == 0 and idx["ker_even"] == idx["ker_odd"] == 1
    for t in (0.1, 1.0, 10.0):
        assert abs(mckean_singer(eigs, t)) < 1e-8


def test_torus_cohomology_is_exterior_algebra():
    _, space, d = torus(1)
    coh = cohomology_dims(_laplacian_eigs(space, build_D(space, d, None, 0.0)))
    assert coh.dims == [1, 2, 1]


def test_hodge_decomposition_fuzzy():
    _, space, d = fuzzy(3)
    h = build_conformal_element(space.model, "j3", 0.6)
    du = build_d_u(space, d, h, 1.0)
    hd = hodge_decompose(build_D(space, d, h, 1.0), du, du.H)
    assert sum(hd.dims) == space.total_dim
    assert hd.dims[1] == 2
    assert max(hd.residuals[k] for k in ("plus_minus", "plus_zero", "minus_zero")) < 1e-9


def test_heat_trace_rejects_nonpositive_time():
    with pytest.raises(ParameterError):
        heat_trace([1.0], 0.0)


def test_heat_trace_on_known_spectrum():
    assert heat_trace([0.0, np.log(2.0)], 1.0) == pytest.approx(1.5)


def test_t_grid_endpoints():
    ts = t_grid(0.01, 10.0, 16)
    assert ts[0] == pytest.approx(0.01) and ts[-1] == pytest.approx(10.0)
    assert len(ts) == 49


@pytest.mark.parametrize("n", [1, 2])
def test_heat_fit_commutative_torus(n):
    family = {}
    for M in (4, 8, 16):
        _, space, d = torus(M, n=n, golden=False)
        family[M] = np.linalg.eigvalsh(laplacian_blocks_from_d_u(space, build_d_u(space, d, None, 0.0))[0])
    fit = heat_coefficient_fit(family, t_grid())
    assert not fit.inconclusive
    assert fit.exponent == pytest.approx(-n / 2, abs=0.1)
    # Gaussian-integral oracle: (4 pi t)^{-n/2}
    assert fit.a0 == pytest.approx((4 * np.pi) ** (-n / 2), rel=0.1)


def test_heat_fit_reports_inconclusive_without_saturation():
    family = {4: np.arange(10.0), 8: np.arange(20.0)}
    assert heat_coefficient_fit(family, t_grid()).inconclusive


def test_resolvent_singular_values_sorted():
    mu = resolvent_singular_values([3.0, 0.0, 8.0])
    assert np.allclose(mu, [1.0, 0.5, 1 / 3])


@pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
def test_p_plus_norm_bounded_for_power_law(p):
    # mu_k = k^{-1/p}: sum_{k<=K} mu_k ~ p/(p-1) K^{(p-1)/p}
    k = np.arange(1, 20001, dtype=float)
    sup = p_plus_norm(k ** (-1 / p), p)
    assert sup[-1] == pytest.approx(sup[len(sup) // 2], rel=0.02)
    assert sup[-1] <= p / (p - 1) + 1e-9


def test_p_plus_norm_diverges_below_dimension():
    k = np.arange(1, 20001, dtype=float)
    sup = p_plus_norm(k ** (-1 / 3), 2)
    # ratio grows like K^{2/3 - 1/2}: 100^{1/6} ~ 2.15 over two decades
    assert sup[-1] > 2.0 * sup[len(sup) // 100]


def test_p_below_one_rejected():
    with pytest.raises(ParameterError):
        p_plus_norm([1.0], 0.5)


def test_fit_window_bounds():
    w = fit_window(100)
    assert (w.start, w.stop) == (10, 60)


@settings(max_examples=15, deadline=None)
@given(st.floats(1.0, 4.0))
def test_spectral_dimension_recovers_synthetic_power_law(p):
    # eigenvalues of D^2 with counting function ~ L^{p/2}: lambda_k = k^{2/p}
    family = {s: np.arange(1, s * 400 + 1, dtype=float) ** (2 / p) for s in (1, 2, 3)}
    rep = spectral_dimension_fit(family)
    assert rep.p_hat == pytest.approx(p, rel=0.15)


def test_spectral_dimension_needs_three_sizes():
    with pytest.raises(ParameterError):
        spectral_dimension_fit({1: np.ones(4), 2: np.ones(4)})


def test_weyl_count_on_torus():
    _, space, d = torus(12, golden=False)
    lam = np.concatenate(laplacian_blocks_and_eigs(space, d))
    assert weyl_count_dimension(lam) == pytest.approx(2.0, abs=0.2)


def laplacian_blocks_and_eigs(space, d):
    return [np.linalg.eigvalsh(L) for L in laplacian_blocks_from_d_u(space, build_d_u(space, d, None, 0.0))]
