"""Experiment orchestration: model build, invariant suite, per-(h, u) analyses."""

from __future__ import annotations

import hashlib
import json
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import io
from .complex_engine import (
    build_conformal_maps,
    build_d,
    build_d_u,
    build_D,
    build_gamma,
    build_space,
    complex_invariants,
    laplacian_blocks_from_d_u,
)
from .config import SUBCOMMANDS, RunConfig
from .errors import ConfigError, DegeneracyError
from .hodge_spectral import (
    HodgeReport,
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
from .lie_exterior import LieAlgebraSpec, abelian, su2, validate_lie_algebra
from .system_models import (
    build_conformal_element,
    build_fuzzy_sphere,
    build_nc_torus,
    golden_theta,
    model_invariants,
    multiplicity_report,
)
from .triple_checks import (
    CommutatorReport,
    beta_checks,
    grading_and_evenness_check,
    left_commutator_check,
    scalar_shift_residual,
    torus_growth_family,
    twisted_commutator_check,
)

THREADS_ENV = "NC_HODGE_THREADS"

ANALYSES = {
    "validate": set(),
    "spectrum": {"spectrum"},
    "euler": {"spectrum", "euler"},
    "hodge": {"spectrum", "euler", "hodge"},
    "heat": {"spectrum", "euler", "heat"},
    "summability": {"summability"},
    "twisted": {"twisted"},
    "all": {"spectrum", "euler", "hodge", "heat", "summability", "twisted"},
}


@dataclass
class InvariantTable:
    rows: list = field(default_factory=list)

    def add(self, name, residual, bound, hard=True, note=""):
        if any(r["name"] == name for r in self.rows):
            raise ValueError(f"invariant {name!r} recorded twice")
        residual = float(residual)
        passed = bool(np.isfinite(residual) and residual <= bound)
        self.rows.append(
            {"name": name, "residual": residual, "bound": float(bound), "passed": passed, "hard": bool(hard), "note": note}
        )

    def extend(self, rows):
        for r in rows:
            self.add(r["name"], r["residual"], r["bound"], r["hard"], r.get("note", ""))

    def first_failure(self):
        return next((r for r in self.rows if r["hard"] and not r["passed"]), None)


@dataclass
class RunReport:
    subcommand: str
    config: dict
    config_hash: str
    run_hash: str
    model: dict
    invariants: InvariantTable
    hodge: list = field(default_factory=list)
    summability: dict | None = None
    heat: dict | None = None
    commutators: dict | None = None
    multiplicities: list | None = None
    warnings: list = field(default_factory=list)
    spectra: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.invariants.first_failure() is None

    def to_dict(self) -> dict:
        """Deterministic content; timings and raw spectra are stored separately."""
        return {
            "subcommand": self.subcommand,
            "config": self.config,
            "config_hash": self.config_hash,
            "run_hash": self.run_hash,
            "model": self.model,
            "passed": self.passed,
            "first_failure": self.invariants.first_failure(),
            "invariants": self.invariants.rows,
            "hodge": self.hodge,
            "summability": self.summability,
            "heat": self.heat,
            "commutators": self.commutators,
            "multiplicities": self.multiplicities,
            "warnings": self.warnings,
        }


def build_model(cfg: RunConfig, size: int | None = None):
    m = cfg.model
    if m.type == "fuzzy_sphere":
        return build_fuzzy_sphere(size or m.N)
    if m.theta == "golden":
        theta = golden_theta(m.n)
    elif isinstance(m.theta, (int, float)):
        if m.n != 2:
            raise ConfigError("a scalar theta needs n = 2", "model.theta")
        theta = np.array([[0.0, m.theta], [-m.theta, 0.0]])
    else:
        theta = np.asarray(m.theta, dtype=float)
        if theta.shape != (m.n, m.n):
            raise ConfigError(f"theta must be {m.n} x {m.n}", "model.theta")
    return build_nc_torus(theta, size or m.M, m.padding)


def resolve_lie(cfg: RunConfig, model) -> LieAlgebraSpec:
    lie = cfg.lie
    if lie is None:
        return model.lie
    if isinstance(lie, dict):
        try:
            c = np.asarray(lie["c"], dtype=float)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"structure constants are not numeric: {exc}", "lie.c") from exc
        if c.ndim != 3 or c.shape[0] != model.n:
            raise ConfigError(f"structure constants must have shape {(model.n,) * 3}", "lie.c")
        return LieAlgebraSpec(model.n, c)
    if lie == "su2":
        spec = su2()
    elif lie == "abelian":
        spec = abelian(model.n)
    else:
        try:
            spec = abelian(int(lie.split("_", 1)[1]))
        except ValueError as exc:
            raise ConfigError(f"unknown preset {lie!r}", "lie") from exc
    if spec.n != model.n:
        raise ConfigError(f"preset {lie!r} has dimension {spec.n}, model has {model.n}", "lie")
    return spec


def thread_count() -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _tag(amp, u):
    return f"[a={amp:g},u={u:g}]"


def invariant_suite(cfg: RunConfig, model, space, d, lie, table: InvariantTable) -> dict:
    tol = cfg.tolerances.invariant
    problems = validate_lie_algebra(lie)
    table.add("lie.structure_constants", len(problems), 0.5, note="; ".join(problems[:3]))
    for r in model_invariants(model, lie, seed=cfg.seed, tol=tol):
        table.add(f"model.{r.name}", r.residual, r.bound, r.hard, r.note)
    ci = complex_invariants(space, d, tol=tol, seed=cfg.seed)
    table.add("complex.d_squared", ci["d_squared"], tol)
    table.add("complex.adjointness", ci["adjointness"], tol)
    table.add("complex.adjoint_formula", ci["adjoint_formula"], tol * max(ci["d_norm"], 1.0))
    out = {"d_norm": ci["d_norm"]}
    if model.kind == "fuzzy_sphere":
        mult = multiplicity_report(model)
        excess = max(m.multiplicity - m.dim for m in mult)
        table.add("model.multiplicity_bound", max(excess, 0), 0.5, note="m(V) <= dim V per spin")
        out["multiplicities"] = [m.to_dict() for m in mult]
    return out


def conformal_suite(cfg: RunConfig, model, space, table: InvariantTable):
    """Unitary comparison of the weighted complex with ``D_{1/2}`` (exact matrix models)."""
    if not model.exact:
        return
    for amp in cfg.conformal.amplitudes:
        if amp == 0:
            continue
        h = build_conformal_element(model, cfg.conformal.template, amp, _cseed(cfg))
        maps = build_conformal_maps(space, h)
        table.add(f"conformal.conjugation[a={amp:g}]", maps.conjugation_residual, cfg.tolerances.residual)
        table.add(f"conformal.unitarity[a={amp:g}]", maps.unitarity_residual, cfg.tolerances.residual)


def _size(model) -> str:
    return f"N{model.N}" if model.kind == "fuzzy_sphere" else f"M{model.M}"


def _cseed(cfg):
    return cfg.conformal.seed if cfg.conformal.seed is not None else cfg.seed


def run_point(cfg: RunConfig, model, space, d, amp: float, u: float, analyses: set):
    """One (h, u) pipeline. Returns (report dict, invariant rows, spectra)."""
    tol = cfg.tolerances
    tag = _tag(amp, u)
    rows = []

    def add(name, residual, bound, hard=True, note=""):
        rows.append({"name": f"{name}{tag}", "residual": residual, "bound": bound, "hard": hard, "note": note})

    h = build_conformal_element(model, cfg.conformal.template, amp, _cseed(cfg)) if amp else None
    D = build_D(space, d, h, u)
    D2 = D @ D
    scale = D2.max_abs() or 1.0
    off = max((float(np.max(np.abs(b))) for (ko, ki), b in D2.blocks.items() if ko != ki and b.size), default=0.0)
    add("operator.off_degree", off / scale, tol.invariant)
    add("operator.hermitian", (D - D.H).max_abs() / (D.max_abs() or 1.0), tol.invariant)
    eigs = []
    for k in range(space.n + 1):
        L = D2.block(k, k)
        eigs.append(np.linalg.eigvalsh((L + L.conj().T) / 2))
    result = {"h": h.describe() if h else None, "u": u, "approximate": bool(h is not None and not model.exact)}
    if "euler" in analyses:
        coh = cohomology_dims(eigs, tol.kernel_tau, tol.min_gap, strict=False)
        chi = euler_characteristic(coh.dims)
        add("cohomology.kernel_gap", 1.0 / coh.min_gap_ratio, 1.0 / tol.min_gap)
        idx = odd_index(D, build_gamma(space), tol.kernel_tau)
        add("index.odd_index_equals_chi", abs(idx["index"] - chi), 0.5)
        ms = {f"{t:g}": mckean_singer(eigs, t) for t in cfg.heat.check_times}
        add("index.mckean_singer", max(abs(v - chi) for v in ms.values()), tol.heat_index)
        hodge_res = None
        if "hodge" in analyses:
            du = build_d_u(space, d, h, u)
            try:
                hd = hodge_decompose(D, du, du.H, tol.kernel_tau)
                hodge_res = {**hd.residuals, "dims": list(hd.dims)}
                ortho = max(hd.residuals["plus_minus"], hd.residuals["plus_zero"], hd.residuals["minus_zero"])
                defect = abs(hd.residuals["dimension_defect"])
            except DegeneracyError as exc:
                hodge_res = {"error": str(exc)}
                ortho, defect = float("inf"), float("inf")
            add("hodge.orthogonality", ortho, tol.residual)
            add("hodge.dimension_sum", defect, 0.5)
        report = HodgeReport(result["h"], u, [e.tolist() for e in eigs], coh, chi, idx, ms, hodge_res, result["approximate"])
        result.update(report.to_dict())
    return result, rows, eigs


def summability_suite(cfg: RunConfig, table: InvariantTable) -> dict:
    s = cfg.summability
    n = build_model(cfg, s.sizes[0]).n
    target, band = (3.0, 0.5) if cfg.model.type == "fuzzy_sphere" else (float(n), 0.4)
    out = {"target": target, "band": band, "points": []}
    for amp, u in s.points:
        family = {}
        for size in s.sizes:
            model = build_model(cfg, size)
            space = build_space(model, resolve_lie(cfg, model))
            h = build_conformal_element(model, cfg.conformal.template, amp, _cseed(cfg)) if amp else None
            du = build_d_u(space, build_d(space), h, u)
            family[size] = np.concatenate([np.linalg.eigvalsh(L) for L in laplacian_blocks_from_d_u(space, du)])
        rep = spectral_dimension_fit(family, s.p, s.drop_top, s.drop_bottom)
        weyl = weyl_count_dimension(family[max(family)])
        entry = {"amplitude": amp, "u": u, **rep.to_dict(), "weyl_count": weyl}
        out["points"].append(entry)
        tag = _tag(amp, u)
        table.add(f"summability.p_hat{tag}", abs(rep.p_hat - target), band, hard=False, note="fitted spectral dimension")
        table.add(f"summability.weyl_agreement{tag}", abs(rep.p_hat - weyl), band, hard=False, note="fit vs counting")
    return out


def heat_suite(cfg: RunConfig, table: InvariantTable) -> dict:
    """Leading heat asymptotics of Delta_0 at h = 0 over a truncation family."""
    family = {}
    for size in cfg.heat.sizes:
        model = build_model(cfg, size)
        space = build_space(model, resolve_lie(cfg, model))
        du = build_d_u(space, build_d(space), None, 0.0)
        family[size] = np.linalg.eigvalsh(laplacian_blocks_from_d_u(space, du)[0])
    ts = t_grid(cfg.heat.t_min, cfg.heat.t_max, cfg.heat.per_decade)
    fit = heat_coefficient_fit(family, ts, cfg.heat.fit_t_max, cfg.heat.saturation)
    out = fit.to_dict()
    if cfg.model.type == "nc_torus":
        n = build_model(cfg, cfg.heat.sizes[0]).n
        out["oracle_exponent"] = -n / 2
        table.add("heat.exponent", abs(fit.exponent - (-n / 2)), 0.1, hard=False, note="approximate")
        if n == 2:
            a0 = 1 / (4 * np.pi)
            out["oracle_a0"] = a0
            table.add("heat.a0", abs(fit.a0 - a0) / a0, 0.1, hard=False, note="approximate")
    return out


def twisted_suite(cfg: RunConfig, model, space, d, table: InvariantTable) -> dict:
    t = cfg.twisted
    tol = cfg.tolerances
    h = build_conformal_element(model, cfg.conformal.template, t.amplitude, _cseed(cfg)) if t.amplitude else None
    D = build_D(space, d, h, t.u)
    rng = np.random.default_rng(cfg.seed)
    elements = model.generators() + [model.random_hermitian(rng)]
    names = [f"generator_{i}" for i in range(len(elements) - 1)] + ["random"]
    report = CommutatorReport(
        thresholds={"twisted_variation": t.twisted_variation, "untwisted_growth": t.untwisted_growth},
        seed=cfg.seed,
    )
    worst_left = worst_shift = 0.0
    for name, a in zip(names, elements):
        left = left_commutator_check(space, D, a, h, t.u)
        tw = twisted_commutator_check(space, D, a, h, t.u)
        report.elements[name] = {"left_norm": left["norm"], "left_residual": left["residual"], "twisted": tw["twisted"], "untwisted": tw["untwisted"]}
        worst_left = max(worst_left, left["residual"] / max(left["norm"], 1.0))
    worst_shift = scalar_shift_residual(space, D, elements[-1], h, t.u)
    table.add("triple.left_commutator", worst_left, tol.residual, hard=model.exact)
    table.add("triple.scalar_shift", worst_shift, 1e-12)
    report.beta = beta_checks(model, h, t.u, cfg.seed) if h is not None else {"multiplicativity": 0.0, "unitarity": 0.0, "invertibility": 0.0}
    for key in ("multiplicativity", "unitarity", "invertibility"):
        table.add(f"triple.beta_{key}", report.beta[key], tol.invariant, hard=model.exact)
    report.grading = grading_and_evenness_check(space, D)
    table.add("triple.grading_anticommutes", report.grading["anticommutator"], report.grading["anticommutator_bound"])
    table.add("triple.grading_even", max(report.grading["left_even"], report.grading["right_even"]), tol.invariant)
    if model.kind == "nc_torus" and len(t.sizes) >= 2:
        report.growth = torus_growth_family(
            model.theta, t.sizes, t.amplitude, t.u, cfg.conformal.template, tuple(t.mode), t.padding
        )
        v = report.growth_verdict()
        table.add("triple.twisted_bounded", v["twisted_variation"], t.twisted_variation, hard=False, note="artifact threshold")
        table.add("triple.untwisted_growth", 1.0 / v["untwisted_ratio"], 1.0 / t.untwisted_growth, hard=False, note="artifact threshold")
    return report.to_dict()


def run(cfg: RunConfig, subcommand: str = "all") -> RunReport:
    if subcommand not in SUBCOMMANDS:
        raise ConfigError(f"unknown subcommand {subcommand!r}", "subcommand")
    analyses = ANALYSES[subcommand]
    timings = {}
    t0 = time.perf_counter()
    model = build_model(cfg)
    lie = resolve_lie(cfg, model)
    space = build_space(model, lie)
    d = build_d(space)
    table = InvariantTable()
    chash = cfg.content_hash()
    run_hash = hashlib.sha256(f"{chash}:{subcommand}".encode()).hexdigest()[:16]
    report = RunReport(
        subcommand=subcommand,
        config=json.loads(json.dumps(cfg.to_dict(), default=str)),
        config_hash=chash,
        run_hash=run_hash,
        model={"kind": model.kind, "params": model.params, "exact": model.exact, "fingerprint": model.fingerprint(),
               "n": model.n, "N0": model.N0, "total_dim": space.total_dim},
        invariants=table,
        warnings=list(cfg.warnings),
    )
    suite = invariant_suite(cfg, model, space, d, lie, table)
    report.multiplicities = suite.get("multiplicities")
    if subcommand in ("validate", "all"):
        conformal_suite(cfg, model, space, table)
    timings["invariants"] = time.perf_counter() - t0

    if analyses & {"spectrum", "euler", "hodge"}:
        t1 = time.perf_counter()
        points = [(a, u) for a in cfg.conformal.amplitudes for u in cfg.u]
        with ThreadPoolExecutor(max_workers=thread_count()) as pool:
            results = list(pool.map(lambda p: run_point(cfg, model, space, d, p[0], p[1], analyses), points))
        for (amp, u), (res, rows, eigs) in zip(points, results):
            table.extend(rows)
            report.hodge.append(res)
            report.spectra[io.spectrum_filename(model.fingerprint(), res["h"], u, _size(model))] = eigs
        timings["hodge"] = time.perf_counter() - t1
    if "heat" in analyses:
        t1 = time.perf_counter()
        report.heat = heat_suite(cfg, table)
        timings["heat"] = time.perf_counter() - t1
    if "summability" in analyses:
        t1 = time.perf_counter()
        report.summability = summability_suite(cfg, table)
        timings["summability"] = time.perf_counter() - t1
    if "twisted" in analyses:
        t1 = time.perf_counter()
        report.commutators = twisted_suite(cfg, model, space, d, table)
        timings["twisted"] = time.perf_counter() - t1
    timings["total"] = time.perf_counter() - t0
    report.timings = timings
    return report


def write_outputs(report: RunReport, root) -> Path:
    """``<root>/<run_hash>/``: report.json, CSV spectra, timings.json."""
    out = Path(root) / report.run_hash
    out.mkdir(parents=True, exist_ok=True)
    io.write_json(out / "report.json", report.to_dict())
    for name, eigs in report.spectra.items():
        io.write_spectrum_csv(out / name, eigs)
    (out / "timings.json").write_text(json.dumps(report.timings, indent=2, sort_keys=True) + "\n")
    return out
