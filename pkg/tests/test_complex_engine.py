import numpy as np
import pytest
from conftest import fuzzy, torus

from nc_hodge.complex_engine import (
    build_conformal_maps,
    build_D,
    build_d_adjoint,
    build_d_u,
    build_gamma,
    build_K,
    build_laplacians,
    build_space,
    complex_invariants,
    d_adjoint_formula,
    laplacian_blocks_from_d_u,
    operator_norm,
    perturbation_profile,
)
from nc_hodge.errors import StructureError
from nc_hodge.lie_exterior import abelian
from nc_hodge.system_models import build_conformal_element, build_fuzzy_sphere


@pytest.mark.parametrize("N", [2, 3, 4])
def test_fuzzy_space_layout(N):
    _, space, d = fuzzy(N)
    assert list(space.degree_dims) == [N * N * c for c in (1, 3, 3, 1)]
    assert space.total_dim == 8 * N * N
    assert set(d.blocks) == {(1, 0), (2, 1), (3, 2)}
    assert d.check_degree_shift() == 0.0


def test_lie_dimension_mismatch_rejected():
    with pytest.raises(StructureError):
        build_space(build_fuzzy_sphere(2), abelian(2))


@pytest.mark.parametrize("case", [("fuzzy", 2), ("fuzzy", 3), ("fuzzy", 4), ("torus", 1), ("torus", 3)])
def test_nilpotent_and_adjoint(case):
    kind, size = case
    _, space, d = fuzzy(size) if kind == "fuzzy" else torus(size)
    inv = complex_invariants(space, d)
    assert inv["d_squared"] <= 1e-12
    assert inv["adjointness"] <= 1e-12
    assert inv["adjoint_formula"] <= 1e-12 * inv["d_norm"]
    assert inv["lie_violations"] == []


def test_adjoint_formula_uses_minus_derivations():
    # d_j is anti-Hermitian, so the derivative part of d^* is -sum d_j (x) T_j^H
    _, space, d = torus(1)
    assert np.allclose(d_adjoint_formula(space).dense(), build_d_adjoint(space, d).dense())
    assert np.allclose(space.model.derivations[0].conj().T, -space.model.derivations[0])


def test_graded_operator_arithmetic_matches_dense(rng):
    _, space, d = fuzzy(2)
    h = build_conformal_element(space.model, "j3", 0.3)
    K = build_K(space, h, 0.7)
    dd, Kd = d.dense(), K.dense()
    assert np.allclose((K @ d).dense(), Kd @ dd)
    assert np.allclose((d + d.H).dense(), dd + dd.conj().T)
    assert np.allclose((2.0 * d - d).dense(), dd)
    x = rng.standard_normal(space.total_dim)
    assert np.allclose(d.matvec(x), dd @ x)


@pytest.mark.parametrize("u", [0.0, 0.5, 1.0])
def test_K_inverse_and_hermitian(u):
    _, space, _ = fuzzy(3)
    h = build_conformal_element(space.model, "j3", 0.6)
    KK = build_K(space, h, u) @ build_K(space, h, -u)
    assert np.allclose(KK.dense(), np.eye(space.total_dim))
    Kd = build_K(space, h, u).dense()
    assert np.allclose(Kd, Kd.conj().T)


def test_D_at_zero_is_d_plus_adjoint():
    _, space, d = fuzzy(3)
    h = build_conformal_element(space.model, "j3", 0.3)
    assert np.allclose(build_D(space, d, h, 0.0).dense(), (d + d.H).dense())


@pytest.mark.parametrize("amp,u", [(0.0, 0.0), (0.3, 0.5), (0.6, 1.0)])
def test_laplacians_agree_two_ways(amp, u):
    _, space, d = fuzzy(3)
    h = build_conformal_element(space.model, "j3", amp) if amp else None
    D = build_D(space, d, h, u)
    laps = build_laplacians(space, D)
    alt = laplacian_blocks_from_d_u(space, build_d_u(space, d, h, u))
    assert laps.off_degree_residual < 1e-12
    for a, b in zip(laps.blocks, alt):
        assert np.allclose(a, b)


@pytest.mark.parametrize("N", [2, 3, 4, 5])
def test_fuzzy_scalar_laplacian_is_casimir(N):
    # oracle: Delta_0 = -sum d_j^2 has eigenvalue l(l+1) with multiplicity 2l+1
    _, space, d = fuzzy(N)
    laps = build_laplacians(space, build_D(space, d, None, 0.0))
    w = np.sort(np.linalg.eigvalsh(laps[0]))
    expected = np.sort(np.concatenate([[l * (l + 1)] * (2 * l + 1) for l in range(N)]))
    assert np.allclose(w, expected)


def test_torus_scalar_laplacian():
    _, space, d = torus(2)
    laps = build_laplacians(space, build_D(space, d, None, 0.0))
    k = space.model.modes
    assert np.allclose(np.sort(np.linalg.eigvalsh(laps[0])), np.sort(4 * np.pi**2 * np.sum(k**2, axis=1)))


def test_gamma_squares_to_identity():
    _, space, _ = fuzzy(2)
    g = build_gamma(space).dense()
    assert np.allclose(g @ g, np.eye(space.total_dim))


@pytest.mark.parametrize("N", [2, 3])
@pytest.mark.parametrize("template", ["j3", "random_hermitian"])
def test_conformal_unitary_comparison(N, template):
    _, space, _ = fuzzy(N)
    h = build_conformal_element(space.model, template, 0.3, seed=4)
    maps = build_conformal_maps(space, h)
    assert maps.conjugation_residual <= 1e-9
    assert maps.unitarity_residual <= 1e-10
    assert maps.adjoint_residual <= 1e-10


def test_operator_norm_paths_agree():
    _, space, d = fuzzy(3)
    D = build_D(space, d, build_conformal_element(space.model, "j3", 0.3), 0.5)
    dense = operator_norm(D)
    sparse = operator_norm(D, dense_limit=8)
    assert sparse == pytest.approx(dense, rel=1e-8)
    assert dense == pytest.approx(np.linalg.norm(D.dense(), 2), rel=1e-10)


def test_perturbation_profile_shrinks():
    _, space, _ = fuzzy(3)
    h = build_conformal_element(space.model, "j3", 0.5)
    rows = perturbation_profile(space, h, 0.5, [0.1, 0.01, 0.001])
    rel = [r["relative"] for r in rows]
    assert rel[0] > rel[1] > rel[2]
    assert rel[2] < 1e-2
