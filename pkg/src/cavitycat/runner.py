"""Scenario execution: protocols, sweeps, and serialized outputs."""
from __future__ import annotations

import csv
import json
import math
import os
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import analysis as an
from . import hilbert as hb
from . import protocols as pr
from .config import TWO_PI, ScenarioConfig
from .errors import CavityCatError, DomainError, ResourceError, SingularityError

DETECTION_SAMPLES = 64


@dataclass
class RunReport:
    """Everything a run produced, in sweep order."""

    config: dict
    derived: dict
    rows: list
    summary: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)
    errors: list = field(default_factory=list)
    duration_s: float = 0.0
    grid: an.PhaseSpaceGrid | None = field(default=None, repr=False)

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "derived": self.derived,
            "rows": self.rows,
            "summary": self.summary,
            "warnings": self.warnings,
            "errors": self.errors,
            "duration_s": self.duration_s,
        }

    def to_json(self) -> str:
        return json.dumps(_jsonable(self.to_dict()), indent=2, allow_nan=True)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def derived_parameters(cfg: ScenarioConfig) -> dict:
    """Delta, g, g√N, phases and the three protocol durations (SI units, angular frequencies)."""
    p = cfg.params()
    out = {"delta": p.delta, "g": p.g, "g_eff": p.g_eff, "g_eff_hz": p.g_eff / TWO_PI}
    try:
        t_star = cfg.t_star if cfg.t_star is not None else p.t_cat()
        out.update(
            t_star=t_star,
            phi=p.phase(t_star),
            t_prime=p.t_cat(),
            t_double_prime=p.duration_for_phase(math.pi / 4),
            ratio=p.ratio(max(cfg.alpha.magnitude**2, 1.0)),
        )
    except SingularityError as exc:
        out["error"] = str(exc)
    return out


# --------------------------------------------------------------------------
# single points


def _common(cfg):
    return dict(
        atom_cutoff=cfg.cutoffs.atom_cutoff,
        switching=cfg.switching,
        threshold=cfg.tolerances.dispersive_threshold,
        leakage_tol=cfg.tolerances.leakage,
    )


def _branch_fidelity(res, k):
    out = res.outcomes[k]
    if out is None:
        return None
    try:
        ref = pr.analytic_cat(res.alpha_tilde, res.phi, k, out.collapsed.basis.factors[0].size)
    except CavityCatError:
        return None
    return an.fidelity(ref, out.collapsed)


def _lifetime(t_r, alpha_tilde):
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        try:
            est = an.cat_lifetime(t_r, alpha_tilde)
        except (DomainError, SingularityError) as exc:
            return None, [f"lifetime: {exc}"]
    return est.t, [f"lifetime: {w.message}" for w in caught]


def _run_cat(cfg):
    res = pr.cat_protocol(cfg.params(), cfg.alpha.value, cfg.t_star, **_common(cfg))
    exp = res.expected_probabilities
    life, notes = _lifetime(cfg.t_r, res.alpha_tilde)
    row = {
        "t_star": res.t_star,
        "phi": res.phi,
        "alpha_tilde_abs": abs(res.alpha_tilde),
        "p_branch1": res.probabilities[0],
        "p_branch2": res.probabilities[1],
        "p_branch1_analytic": exp[0],
        "p_branch2_analytic": exp[1],
        "fidelity_branch1": _branch_fidelity(res, 1),
        "fidelity_branch2": _branch_fidelity(res, 2),
        "ratio": res.ratio,
        "lifetime_s": life,
    }
    return row, list(res.warnings) + notes


def _run_detection(cfg):
    res = pr.detection_run(cfg.params(), cfg.alpha.value, cfg.delta_prime_rad, cfg.delta_t, **_common(cfg))
    row = {"delta_t": cfg.delta_t, "P1_simulated": res.p1, "P1_analytic": res.p1_analytic, "ratio": res.ratio}
    return row, list(res.warnings)


def _compass_peaks(state):
    return len(an.local_maxima(an.husimi(state), 0.5))


def _run_compass(cfg):
    res = pr.compass_protocol(cfg.params(), cfg.alpha.value, cfg.seed_branch, **_common(cfg))
    row = {
        "seed_branch": cfg.seed_branch,
        "alpha_star_abs": abs(res.alpha_star),
        "alpha_star_arg": float(np.angle(res.alpha_star)),
        "p_outcome0": res.probabilities[0],
        "p_outcome1": res.probabilities[1],
        "ratio": res.ratio,
    }
    for k in (0, 1):
        if res.outcomes[k] is None:
            row[f"fidelity_outcome{k}"] = None
            row[f"husimi_peaks_outcome{k}"] = None
            continue
        row[f"fidelity_outcome{k}"] = an.fidelity(res.expected(k), res.state(k))
        row[f"husimi_peaks_outcome{k}"] = _compass_peaks(res.state(k))
    return row, list(res.warnings)


def _run_hp(cfg):
    p = cfg.params()
    t = cfg.hp.t if cfg.hp.t is not None else p.t_cat()
    rows = an.hp_convergence(
        cfg.hp.N_list,
        cfg.alpha.value,
        p,
        t,
        photon_cutoff=cfg.cutoffs.photon_cutoff,
        atom_cutoff=cfg.cutoffs.atom_cutoff,
        leakage_tol=cfg.tolerances.leakage,
    )
    return [r.__dict__.copy() for r in rows], []


def _grid_state(cfg):
    g = cfg.grid
    if g.state == "coherent":
        return hb.coherent_state(cfg.alpha.value, cfg.cutoffs.atom_cutoff), []
    if g.state == "cat":
        res = pr.cat_protocol(cfg.params(), cfg.alpha.value, cfg.t_star, **_common(cfg))
        return res.branch(g.branch), list(res.warnings)
    res = pr.compass_protocol(cfg.params(), cfg.alpha.value, g.branch, **_common(cfg))
    return res.state(0), list(res.warnings)


def _run_wigner(cfg):
    psi, notes = _grid_state(cfg)
    spec = an.GridSpec(half_width=cfg.grid.half_width, points=cfg.grid.points)
    grid = an.wigner(psi, spec) if cfg.grid.kind == "wigner" else an.husimi(psi, spec)
    row = {
        "kind": grid.kind,
        "state": cfg.grid.state,
        "integral": grid.integral(),
        "min": float(grid.values.min()),
        "max": float(grid.values.max()),
        "peaks_above_half_max": len(an.local_maxima(grid, 0.5)),
    }
    return (row, grid), notes


_RUNNERS = {
    "cat": _run_cat,
    "detection": _run_detection,
    "compass": _run_compass,
    "hp_convergence": _run_hp,
    "wigner": _run_wigner,
}


def _point(cfg):
    try:
        out, notes = _RUNNERS[cfg.protocol](cfg)
        return out, notes, None
    except CavityCatError as exc:
        return None, [], exc


# --------------------------------------------------------------------------
# scenario


def default_detection_sweep(cfg: ScenarioConfig) -> ScenarioConfig:
    """64 delay values covering one period ``pi / (|alpha|^2 Delta')`` of the detection signal."""
    n = cfg.alpha.magnitude**2
    if n == 0 or cfg.delta_prime == 0:
        return cfg
    period = math.pi / (n * abs(cfg.delta_prime_rad))
    data = cfg.model_dump()
    data["sweep"] = {
        "parameter": "delta_t",
        "values": [float(v) for v in np.linspace(0.0, period, DETECTION_SAMPLES)],
    }
    return ScenarioConfig.model_validate(data)


def check_outputs_writable(cfg: ScenarioConfig):
    """Raise OSError early when an output directory cannot be written."""
    for out in cfg.outputs:
        d = os.path.dirname(os.path.abspath(out.path))
        os.makedirs(d, exist_ok=True)
        if not os.access(d, os.W_OK):
            raise PermissionError(f"output directory {d} is not writable")


def run_scenario(cfg: ScenarioConfig, threads: int = 1, write: bool = True) -> RunReport:
    """Run the configured protocol over every sweep point and write the declared outputs.

    Points run on up to ``threads`` workers; results are collected in sweep
    order and a failing point is recorded in ``errors`` without stopping the
    others. File outputs are written after all points complete.
    """
    start = time.perf_counter()
    if write:
        check_outputs_writable(cfg)
    if cfg.protocol == "detection" and cfg.sweep is None:
        cfg = default_detection_sweep(cfg)
    points = cfg.runs()
    sweep_name = cfg.sweep.parameter if cfg.sweep else None

    if threads > 1 and len(points) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_point, points))
    else:
        results = [_point(p) for p in points]

    report = RunReport(config=cfg.model_dump(), derived=derived_parameters(cfg), rows=[])
    for i, (pt, (out, notes, exc)) in enumerate(zip(points, results)):
        label = {sweep_name: cfg.sweep.values[i]} if sweep_name else {}
        report.warnings.extend({"point": i, **label, "message": m} for m in notes)
        if exc is not None:
            report.errors.append({"point": i, **label, "type": type(exc).__name__, "message": str(exc)})
            continue
        if cfg.protocol == "wigner":
            out, grid = out
            if report.grid is None:
                report.grid = grid
        outs = out if isinstance(out, list) else [out]
        for r in outs:
            if sweep_name and sweep_name not in r:
                r = {sweep_name: cfg.sweep.values[i], **r}
            report.rows.append(r)

    report.summary = _summarize(cfg, report.rows)
    report.duration_s = time.perf_counter() - start
    if write:
        write_outputs(cfg, report)
    return report


def _summarize(cfg, rows):
    s = {}
    if not rows:
        return s
    if cfg.protocol == "detection":
        sim = np.array([r["P1_simulated"] for r in rows])
        ana = np.array([r["P1_analytic"] for r in rows])
        s["rms_residual"] = float(np.sqrt(np.mean((sim - ana) ** 2)))
        s["max_residual"] = float(np.max(np.abs(sim - ana)))
    elif cfg.protocol == "hp_convergence":
        inf = [r["infidelity"] for r in rows]
        s["monotone_fidelity"] = bool(all(b <= a for a, b in zip(inf, inf[1:])))
        if len(rows) >= 2 and min(inf) > 0:
            s["loglog_slope"] = an.loglog_slope([r["excitation_fraction"] for r in rows], inf)
    return s


# --------------------------------------------------------------------------
# writers


def write_table(path, rows):
    cols = []
    for r in rows:
        for k in r:
            if k not in cols:
                cols.append(k)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        for r in rows:
            w.writerow(["" if r.get(c) is None else repr(r[c]) if isinstance(r.get(c), float) else r[c] for c in cols])


def write_grid(path, grid: an.PhaseSpaceGrid):
    """Matrix CSV: first row ``p\\x`` then the x axis; each following row starts with its p value."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow([f"{grid.kind}:p\\x"] + [repr(float(v)) for v in grid.x])
        for pv, row in zip(grid.p, grid.values):
            w.writerow([repr(float(pv))] + [repr(float(v)) for v in row])


def write_outputs(cfg: ScenarioConfig, report: RunReport):
    for out in cfg.outputs:
        if out.kind == "report":
            with open(out.path, "w", encoding="utf-8") as fh:
                fh.write(report.to_json())
        elif out.kind == "table":
            write_table(out.path, report.rows)
        elif out.kind == "grid":
            if report.grid is None:
                report.warnings.append({"message": f"no phase-space grid for {out.path}"})
                continue
            write_grid(out.path, report.grid)

