"""Acceptance criteria 1-10, each at its stated tolerance.

Every test records a one-line verdict that the terminal summary prints (see
conftest.py). Run standalone with ``python tests/test_acceptance.py``.
"""

import time

import numpy as np
import pytest
from conftest import ACCEPTANCE, fuzzy, torus

from nc_hodge.cli import main
from nc_hodge.complex_engine import (
    build_conformal_maps,
    build_D,
    build_d_u,
    build_gamma,
    build_laplacians,
    complex_invariants,
    laplacian_blocks_from_d_u,
)
from nc_hodge.hodge_spectral import (
    cohomology_dims,
    euler_characteristic,
    heat_coefficient_fit,
    hodge_decompose,
    mckean_singer,
    odd_index,
    spectral_dimension_fit,
    t_grid,
    weyl_count_dimension,
)
from nc_hodge.system_models import build_conformal_element, golden_theta, multiplicity_report
from nc_hodge.triple_checks import (
    beta_checks,
    left_commutator_check,
    scalar_shift_residual,
    torus_growth_family,
)

AMPLITUDES = (0.0, 0.3, 0.6)
US = (0.0, 0.5, 1.0)
HEAT_TIMES = (0.1, 1.0, 10.0)


def record(k, ok, detail):
    ACCEPTANCE[k] = (bool(ok), detail)
    print(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
    return ok


def _h(model, amp, template="j3"):
    return build_conformal_element(model, template, amp) if amp else None


def test_criterion_01_complex_integrity():
    worst_sq = worst_adj = 0.0
    cases = [fuzzy(N) for N in range(2, 7)] + [torus(M) for M in range(1, 5)]
    for _, space, d in cases:
        inv = complex_invariants(space, d)
        # ||d^2|| <= 1e-10 ||d||^2 is the relative residual stored in d_squared
        worst_sq = max(worst_sq, inv["d_squared"])
        worst_adj = max(worst_adj, inv["adjointness"])
    ok = worst_sq <= 1e-10 and worst_adj <= 1e-10
    assert record(1, ok, f"max ||d^2||/||d||^2 = {worst_sq:.2e}, adjointness = {worst_adj:.2e} (bound 1e-10)")


def test_criterion_02_hodge_decomposition():
    worst, defects = 0.0, 0
    for N in (2, 3, 4):
        model, space, d = fuzzy(N)
        for amp in AMPLITUDES:
            h = _h(model, amp)
            for u in US:
                du = build_d_u(space, d, h, u)
                hd = hodge_decompose(build_D(space, d, h, u), du, du.H)
                worst = max(worst, hd.residuals["plus_minus"], hd.residuals["plus_zero"], hd.residuals["minus_zero"])
                defects += abs(hd.residuals["dimension_defect"]) + abs(sum(hd.dims) - space.total_dim)
    ok = worst <= 1e-9 and defects == 0
    assert record(2, ok, f"27 cells: max orthogonality residual {worst:.2e} (bound 1e-9), dimension defects {defects}")


def _cells():
    for N in (2, 3, 4):
        model, space, d = fuzzy(N)
        for amp in AMPLITUDES:
            h = _h(model, amp)
            for u in US:
                D = build_D(space, d, h, u)
                eigs = [np.linalg.eigvalsh(L) for L in build_laplacians(space, D).blocks]
                yield (N, amp, u), space, D, eigs


def test_criterion_03_conformal_invariance_of_chi():
    bad, min_gap = [], np.inf
    for key, _, _, eigs in _cells():
        coh = cohomology_dims(eigs, strict=False)
        min_gap = min(min_gap, coh.min_gap_ratio)
        if coh.dims != [1, 0, 0, 1] or euler_characteristic(coh.dims) != 0 or coh.min_gap_ratio < 100:
            bad.append(key)
    model, space, d = torus(2)
    tor = cohomology_dims([np.linalg.eigvalsh(L) for L in build_laplacians(space, build_D(space, d, None, 0.0)).blocks])
    ok = not bad and tor.dims == [1, 2, 1] and euler_characteristic(tor.dims) == 0
    assert record(3, ok, f"fuzzy 27 cells dims (1,0,0,1), min gap ratio {min_gap:.2e}; torus dims {tuple(tor.dims)}; bad {bad}")


def test_criterion_04_index_identities():
    worst_ms, mismatch = 0.0, []
    for key, space, D, eigs in _cells():
        chi = euler_characteristic(cohomology_dims(eigs).dims)
        idx = odd_index(D, build_gamma(space))["index"]
        for t in HEAT_TIMES:
            worst_ms = max(worst_ms, abs(mckean_singer(eigs, t) - chi))
        if idx != chi:
            mismatch.append(key)
    _, space, d = torus(2)
    D = build_D(space, d, None, 0.0)
    eigs = [np.linalg.eigvalsh(L) for L in build_laplacians(space, D).blocks]
    chi_t = euler_characteristic(cohomology_dims(eigs).dims)
    if odd_index(D, build_gamma(space))["index"] != chi_t:
        mismatch.append("torus")
    worst_ms = max([worst_ms] + [abs(mckean_singer(eigs, t) - chi_t) for t in HEAT_TIMES])
    ok = not mismatch and worst_ms <= 1e-8
    assert record(4, ok, f"chi = odd index in all runs; max |McKean-Singer - chi| = {worst_ms:.2e} (bound 1e-8)")


def test_criterion_05_conjugation_identity():
    t0 = time.perf_counter()
    worst = 0.0
    for N in (2, 3):
        model, space, _ = fuzzy(N)
        worst = max(worst, build_conformal_maps(space, _h(model, 0.3)).conjugation_residual)
    dt = time.perf_counter() - t0
    ok = worst <= 1e-9 and dt < 1.0
    assert record(5, ok, f"||U^dag (d_phi + d_phi^*) U - D_1/2|| = {worst:.2e} (bound 1e-9), {dt:.2f} s")


def _summability_family(kind, sizes, amp, u):
    family = {}
    for s in sizes:
        model, space, d = fuzzy(s) if kind == "fuzzy" else torus(s)
        template = "j3" if kind == "fuzzy" else "cos1"
        h = build_conformal_element(model, template, amp) if amp else None
        du = build_d_u(space, d, h, u)
        family[s] = np.concatenate([np.linalg.eigvalsh(L) for L in laplacian_blocks_from_d_u(space, du)])
    return family


@pytest.mark.slow
def test_criterion_06_summability():
    rows, ok = [], True
    for kind, sizes, target, band in (("fuzzy", range(4, 17), 3.0, 0.5), ("torus", range(4, 17), 2.0, 0.4)):
        for amp, u in ((0.0, 0.0), (0.3, 0.5)):
            fam = _summability_family(kind, sizes, amp, u)
            rep = spectral_dimension_fit(fam)
            weyl = weyl_count_dimension(fam[max(fam)]) if amp == 0 else float("nan")
            hit = abs(rep.p_hat - target) <= band
            ok &= hit
            rows.append(f"{kind}({amp:g},{u:g}) p={rep.p_hat:.3f} weyl={weyl:.3f} target {target:g}+-{band:g} {'ok' if hit else 'miss'}")
    assert record(6, ok, "; ".join(rows))


def test_criterion_07_heat_asymptotics():
    parts, ok = [], True
    for n in (1, 2):
        family = {}
        for M in (4, 8, 16):
            _, space, d = torus(M, n=n, golden=False)
            family[M] = np.linalg.eigvalsh(laplacian_blocks_from_d_u(space, build_d_u(space, d, None, 0.0))[0])
        fit = heat_coefficient_fit(family, t_grid())
        ok &= not fit.inconclusive and abs(fit.exponent + n / 2) <= 0.1
        parts.append(f"n={n} exponent {fit.exponent:.4f} (oracle {-n / 2})")
        if n == 2:
            oracle = 1 / (4 * np.pi)
            rel = abs(fit.a0 - oracle) / oracle
            ok &= rel <= 0.1
            parts.append(f"a0 {fit.a0:.5f} vs 1/(4 pi) = {oracle:.5f} ({100 * rel:.2f}%)")
    assert record(7, ok, "[approximate] " + "; ".join(parts))


def test_criterion_08_twisted_triple():
    rng = np.random.default_rng(8)
    left = beta = shift = 0.0
    for N in (2, 3):
        model, space, d = fuzzy(N)
        for amp in (0.3, 0.6):
            h = _h(model, amp)
            for u in US:
                D = build_D(space, d, h, u)
                for a in model.generators() + [model.random_hermitian(rng)]:
                    res = left_commutator_check(space, D, a, h, u)
                    left = max(left, res["residual"])
                bc = beta_checks(model, h, u)
                beta = max(beta, bc["multiplicativity"], bc["unitarity"])
                shift = max(shift, scalar_shift_residual(space, D, model.random_hermitian(rng), h, u))
    rows = torus_growth_family(golden_theta(), [4, 16], amplitude=0.3, u=1.0)
    untw_ratio = rows[1]["untwisted"] / rows[0]["untwisted"]
    tw_var = abs(rows[1]["twisted"] / rows[0]["twisted"] - 1)
    ok = left <= 1e-9 and beta <= 1e-10 and shift <= 1e-12 and untw_ratio >= 2.0 and tw_var <= 0.5
    detail = (
        f"left residual {left:.2e}, beta {beta:.2e}, shift {shift:.2e}; "
        f"torus untwisted x{untw_ratio:.2f} (>= 2), twisted drift {100 * tw_var:.1f}% (<= 50%)"
    )
    assert record(8, ok, detail)


def test_criterion_09_multiplicity_bound():
    bad = []
    for N in range(2, 7):
        report = multiplicity_report(fuzzy(N)[0])
        if [r.spin for r in report] != list(range(N)) or any(not (r.multiplicity == 1 <= 2 * r.spin + 1 == r.dim) for r in report):
            bad.append(N)
    assert record(9, not bad, f"m = 1 <= 2l+1 for l = 0..N-1, N = 2..6; failures {bad}")


def test_criterion_10_determinism(tmp_path):
    cfg = tmp_path / "det.yaml"
    cfg.write_text(
        "model: {type: fuzzy_sphere, N: 3}\n"
        "conformal: {amplitudes: [0, 0.3, 0.6]}\n"
        "summability: {sizes: [4, 6, 8]}\n"
        "heat: {sizes: [4, 6]}\n"
        "seed: 11\n"
    )
    codes = [main(["all", "--config", str(cfg), "--out", str(tmp_path / f"run{i}"), "-q"]) for i in (1, 2)]
    reports = [next((tmp_path / f"run{i}").glob("*/report.json")).read_bytes() for i in (1, 2)]
    ok = reports[0] == reports[1] and codes == [0, 0]
    assert record(10, ok, f"two `all` runs byte-identical: {reports[0] == reports[1]} ({len(reports[0])} bytes), exit codes {codes}")


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q", "-s"]))
