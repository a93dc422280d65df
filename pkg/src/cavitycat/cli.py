"""Command-line entry point.

``cavitycat run scenario.toml`` runs a scenario document. The protocol
subcommands (``cat``, ``detection``, ``compass``, ``hp-convergence``,
``wigner``) take an optional scenario file plus flags that override it, and
force the protocol. Frequencies on the command line are in Hz.

Exit codes: 0 success, 1 I/O failure, 2 parse error, 3 validation error,
4 resource limit, 5 protocol runtime error.
"""
from __future__ import annotations

import argparse
import os
import sys

from .config import parse_config, _build
from .errors import CavityCatError, ConfigParseError, ConfigValidationError, ResourceError
from .runner import run_scenario

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

EXIT_OK = 0
EXIT_IO = 1
EXIT_PARSE = 2
EXIT_VALIDATION = 3
EXIT_RESOURCE = 4
EXIT_PROTOCOL = 5

PROTOCOLS = {
    "cat": "cat",
    "detection": "detection",
    "compass": "compass",
    "hp-convergence": "hp_convergence",
    "wigner": "wigner",
}

# flag -> (section or None, key)
_OVERRIDES = {
    "delta1": ("model", "delta1"),
    "delta2": ("model", "delta2"),
    "omega_c": ("model", "omega_c"),
    "omega_rf": ("model", "omega_rf"),
    "N": ("model", "N"),
    "alpha": ("alpha", "magnitude"),
    "alpha_phase": ("alpha", "phase"),
    "delta_prime": (None, "delta_prime"),
    "delta_t": (None, "delta_t"),
    "t_r": (None, "t_r"),
    "t_star": (None, "t_star"),
    "seed_branch": (None, "seed_branch"),
    "switching": (None, "switching"),
    "atom_cutoff": ("cutoffs", "atom_cutoff"),
    "photon_cutoff": ("cutoffs", "photon_cutoff"),
}


def _common_flags(p):
    p.add_argument("--out-dir", help="write outputs into this directory (file names kept)")
    p.add_argument("--threads", type=int, default=1, help="maximum concurrent sweep points")
    p.add_argument("--validate-only", action="store_true", help="parse and validate, then exit")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cavitycat", description="Cavity cat-state protocol simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scenario file")
    run.add_argument("config", help="TOML scenario file")
    _common_flags(run)

    for name in PROTOCOLS:
        p = sub.add_parser(name, help=f"run the {name} protocol")
        p.add_argument("config", nargs="?", help="optional TOML scenario file to start from")
        p.add_argument("--delta1", type=float, help="Hz")
        p.add_argument("--delta2", type=float, help="Hz")
        p.add_argument("--omega-c", dest="omega_c", type=float, help="Hz")
        p.add_argument("--omega-rf", dest="omega_rf", type=float, help="Hz")
        p.add_argument("--N", dest="N", type=int, help="atom number")
        p.add_argument("--alpha", type=float, help="coherent amplitude |alpha|")
        p.add_argument("--alpha-phase", dest="alpha_phase", type=float, help="rad")
        p.add_argument("--delta-prime", dest="delta_prime", type=float, help="Hz")
        p.add_argument("--delta-t", dest="delta_t", type=float, help="s")
        p.add_argument("--t-r", dest="t_r", type=float, help="s")
        p.add_argument("--t-star", dest="t_star", type=float, help="s")
        p.add_argument("--seed-branch", dest="seed_branch", type=int)
        p.add_argument("--switching", choices=["adiabatic", "sudden"])
        p.add_argument("--atom-cutoff", dest="atom_cutoff", type=int)
        p.add_argument("--photon-cutoff", dest="photon_cutoff", type=int)
        p.add_argument("--N-list", dest="N_list", type=int, nargs="+", help="atom numbers (hp-convergence)")
        p.add_argument("--report", help="path of the JSON report")
        p.add_argument("--table", help="path of the CSV table")
        p.add_argument("--grid", help="path of the phase-space grid CSV")
        _common_flags(p)
    return parser


def _read(path):
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read()


def _load_document(args):
    if args.command == "run":
        return parse_config(_read(args.config))
    data = {}
    if args.config:
        try:
            data = tomllib.loads(_read(args.config))
        except tomllib.TOMLDecodeError as exc:
            raise ConfigParseError(str(exc)) from None
    data["protocol"] = PROTOCOLS[args.command]
    for flag, (section, key) in _OVERRIDES.items():
        value = getattr(args, flag)
        if value is None:
            continue
        target = data.setdefault(section, {}) if section else data
        target[key] = value
    if args.N_list:
        data.setdefault("hp", {})["N_list"] = args.N_list
    outs = [{"kind": k, "path": getattr(args, k)} for k in ("report", "table", "grid") if getattr(args, k)]
    if outs:
        data["outputs"] = outs
    return _build(data)


def _redirect(cfg, out_dir):
    data = cfg.model_dump()
    outs = data["outputs"] or [
        {"kind": "report", "path": "report.json"},
        {"kind": "table", "path": f"{cfg.protocol}.csv"},
    ]
    if cfg.protocol == "wigner" and not any(o["kind"] == "grid" for o in outs):
        outs.append({"kind": "grid", "path": f"{cfg.grid.kind}.csv"})
    data["outputs"] = [{"kind": o["kind"], "path": os.path.join(out_dir, os.path.basename(o["path"]))} for o in outs]
    if cfg.auto_cutoff:
        data["cutoffs"]["atom_cutoff"] = None
    return _build(data)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _load_document(args)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ConfigParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ConfigValidationError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION

    if args.validate_only:
        print(f"ok: {cfg.protocol} scenario, {len(cfg.runs())} run(s)")
        return EXIT_OK
    if args.out_dir:
        cfg = _redirect(cfg, args.out_dir)
    if args.threads < 1:
        print("validation error: --threads must be >= 1", file=sys.stderr)
        return EXIT_VALIDATION

    try:
        report = run_scenario(cfg, threads=args.threads)
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ResourceError as exc:
        print(f"resource error: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except CavityCatError as exc:
        print(f"protocol error: {exc}", file=sys.stderr)
        return EXIT_PROTOCOL

    if not cfg.outputs:
        print(report.to_json())
    else:
        print(f"{cfg.protocol}: {len(report.rows)} row(s), {len(report.errors)} failed point(s), "
              f"{report.duration_s:.2f} s")
    for e in report.errors:
        print(f"point {e['point']}: {e['type']}: {e['message']}", file=sys.stderr)
    if report.errors:
        if any(e["type"] == ResourceError.__name__ for e in report.errors):
            return EXIT_RESOURCE
        return EXIT_PROTOCOL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
