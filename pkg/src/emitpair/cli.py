"""Command-line front end.

Thin dispatch over the core package: parses a JSON run config (or built-in
defaults), converts wavelength-unit inputs to internal units, runs one
command and writes CSV/PGM/JSON outputs.  ``emitpair serve`` starts the HTTP
service wrapping the same core.

Exit codes: 0 success, 1 config error, 2 numerical error, 3 geometry error.
All linear algebra runs with BLAS pinned to one thread and fixed-size work
chunks, so output bytes are independent of ``--threads``.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from . import __version__, gridio, validate
from .config import (
    DEFAULT_DIFFUSIVE_MEDIUM,
    detector_from_model,
    emitters_from_model,
    fixed_emitter_from_model,
    grid_from_model,
    load_config,
    rect_from_model,
    resolve_medium,
    scanning_emitter_from_model,
)
from .coherence import coherence_report
from .errors import (
    CoincidentPointsError,
    ConfigError,
    EmitpairError,
    GeometryError,
    PackingError,
)
from .scan import (
    LAMBDA,
    classification_map,
    diffusion_diagnostics,
    dos_maps,
    find_extremal_detectors,
    g2_map,
)
from .schemas import EmittersModel, MediumFileRef, RunConfigModel
from .config import save_medium
from .solver import assemble

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERICAL = 2
EXIT_GEOMETRY = 3

_DEFAULT_OUT = "emitpair"


def entrypoint() -> None:
    sys.exit(main(sys.argv[1:]))


def main(argv: list[str]) -> int:
    try:
        args = _parse_args(argv)
        if args.command == "serve":
            return _cmd_serve(args)
        cfg = _build_config(args)
        with threadpool_limits(limits=1):
            return run(cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (GeometryError, PackingError, CoincidentPointsError) as exc:
        print(f"geometry error: {exc}", file=sys.stderr)
        return EXIT_GEOMETRY
    except (EmitpairError, ArithmeticError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def _parse_args(argv: list[str]) -> argparse.Namespace:
    parser = argparse.ArgumentParser(
        prog="emitpair",
        description="Two-emitter photon coherence in 2D structured media")
    parser.add_argument("--version", action="version", version=f"emitpair {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    commands = ["gen-medium", "diagnose", "g2", "g2-map", "dos-maps",
                "find-detectors", "validate"]
    for name in commands:
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path, help="JSON run configuration")
        p.add_argument("--seed", type=int, help="override the medium seed")
        p.add_argument("--threads", type=int, help="worker-thread hint (never changes output bytes)")
        p.add_argument("--out", type=str, help="output path prefix")
    serve = sub.add_parser("serve", help="start the HTTP service")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8234)
    return parser.parse_args(argv)


def _build_config(args: argparse.Namespace) -> RunConfigModel:
    if args.config is not None:
        cfg = load_config(args.config)
        if cfg.command != args.command:
            raise ConfigError(
                f"config is for command {cfg.command!r}, invoked as {args.command!r}")
    else:
        cfg = _default_config(args.command)
    updates = {}
    if args.seed is not None:
        updates["seed"] = args.seed
    if args.threads is not None:
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        updates["threads"] = args.threads
    if args.out is not None:
        updates["out"] = args.out
    return cfg.model_copy(update=updates) if updates else cfg


def _default_config(command: str) -> RunConfigModel:
    if command in ("gen-medium", "diagnose", "g2-map", "dos-maps"):
        return RunConfigModel(
            command=command,
            medium=DEFAULT_DIFFUSIVE_MEDIUM,
            emitters=EmittersModel(r1=(0.0, 0.0), r2=(0.0, 0.0)),
        )
    if command == "validate":
        return RunConfigModel(command="validate")
    raise ConfigError(f"command {command!r} requires --config")


def run(cfg: RunConfigModel) -> int:
    """Execute one validated run configuration."""
    handler = {
        "gen-medium": _cmd_gen_medium,
        "diagnose": _cmd_diagnose,
        "g2": _cmd_g2,
        "g2-map": _cmd_g2_map,
        "dos-maps": _cmd_dos_maps,
        "find-detectors": _cmd_find_detectors,
        "validate": _cmd_validate,
    }[cfg.command]
    return handler(cfg)


def _out_prefix(cfg: RunConfigModel) -> str:
    return cfg.out if cfg.out else _DEFAULT_OUT


def _provenance(cfg: RunConfigModel, medium=None, k_ell=None) -> dict:
    prov = {"tool": "emitpair", "version": __version__, "command": cfg.command}
    if medium is not None:
        prov.update({
            "medium_digest": medium.digest(),
            "n_scatterers": medium.n,
            "mode": medium.mode.value,
            "seed": medium.metadata.get("seed"),
        })
    if k_ell is not None:
        prov["k_ell"] = k_ell
    return prov


def _print_provenance(prov: dict) -> None:
    for key, val in prov.items():
        print(f"# {key}: {val}")


def _medium_with_diag(cfg: RunConfigModel):
    medium = resolve_medium(cfg.medium, cfg.seed)
    k_ell = None
    if medium.n:
        k_ell = diffusion_diagnostics(medium).k_ell
    return medium, k_ell


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, sort_keys=True, indent=2, default=_plain) + "\n",
                    newline="\n")


def _plain(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return str(obj)


def _cmd_gen_medium(cfg: RunConfigModel) -> int:
    if isinstance(cfg.medium, MediumFileRef):
        raise ConfigError("gen-medium needs inline medium parameters, not a file reference")
    medium, k_ell = _medium_with_diag(cfg)
    prov = _provenance(cfg, medium, k_ell)
    _print_provenance(prov)
    path = Path(f"{_out_prefix(cfg)}.medium.json")
    save_medium(medium, path)
    print(f"wrote {path}")
    return EXIT_OK


def _cmd_diagnose(cfg: RunConfigModel) -> int:
    medium = resolve_medium(cfg.medium, cfg.seed)
    diag = diffusion_diagnostics(medium)
    prov = _provenance(cfg, medium, diag.k_ell)
    _print_provenance(prov)
    payload = {
        "provenance": prov,
        "sigma_s": diag.sigma_s,
        "ell": diag.ell if np.isfinite(diag.ell) else None,
        "k_ell": diag.k_ell if np.isfinite(diag.k_ell) else None,
        "optical_thickness": diag.optical_thickness,
        "diffusive": diag.diffusive,
    }
    _write_json(Path(f"{_out_prefix(cfg)}.diagnostics.json"), payload)
    print(f"sigma_s={diag.sigma_s:.6g}  ell={diag.ell:.6g}  "
          f"k_ell={diag.k_ell:.6g}  optical_thickness={diag.optical_thickness:.6g}  "
          f"diffusive={diag.diffusive}")
    return EXIT_OK


def _require(cfg: RunConfigModel, section: str):
    value = getattr(cfg, section)
    if value is None:
        raise ConfigError(f"command {cfg.command!r} requires the {section!r} section")
    return value


def _cmd_g2(cfg: RunConfigModel) -> int:
    emitters = _require(cfg, "emitters")
    detectors = _require(cfg, "detectors")
    medium, k_ell = _medium_with_diag(cfg)
    fact = assemble(medium)
    report = coherence_report(
        fact, emitters_from_model(emitters),
        detector_from_model(detectors.a), detector_from_model(detectors.b),
        tol_super=cfg.tolerances.tol_super, tol_sub=cfg.tolerances.tol_sub)
    prov = _provenance(cfg, medium, k_ell)
    _print_provenance(prov)
    c_ge, c_eg = report.projected_amplitudes
    payload = {
        "provenance": prov,
        "g2": report.g2,
        "big_g2": report.big_g2,
        "amplitude_residual": report.amplitude_residual,
        "phase_residual": report.phase_residual,
        "subradiance_residual": report.subradiance_residual,
        "projected_amplitudes": [[c_ge.real, c_ge.imag], [c_eg.real, c_eg.imag]],
        "classification": report.classification.value,
        "emissive_power_gap": report.emissive_power_gap,
        "cdos_gap": report.cdos_gap,
    }
    _write_json(Path(f"{_out_prefix(cfg)}.report.json"), payload)
    print(f"g2={report.g2:.12g}  big_g2={report.big_g2:.12g}  "
          f"classification={report.classification.value}")
    return EXIT_OK


def _cmd_g2_map(cfg: RunConfigModel) -> int:
    emitters = _require(cfg, "emitters")
    medium, k_ell = _medium_with_diag(cfg)
    fact = assemble(medium)
    prov = _provenance(cfg, medium, k_ell)
    _print_provenance(prov)
    grid = g2_map(fact, fixed_emitter_from_model(emitters),
                  scanning_emitter_from_model(cfg.scanning),
                  grid_from_model(cfg.grid), threads=cfg.threads)
    grid.metadata["tool_version"] = __version__
    prefix = _out_prefix(cfg)
    gridio.export_csv(grid, f"{prefix}.g2.csv")
    gridio.export_pgm(grid, f"{prefix}.g2.pgm")
    cls = classification_map(grid, cfg.tolerances.tol_super, cfg.tolerances.tol_sub)
    gridio.export_csv(cls, f"{prefix}.classification.csv")
    gridio.export_pgm(cls, f"{prefix}.classification.pgm")
    print(f"wrote {prefix}.g2.csv / .pgm and {prefix}.classification.csv / .pgm")
    return EXIT_OK


def _cmd_dos_maps(cfg: RunConfigModel) -> int:
    emitters = _require(cfg, "emitters")
    medium, k_ell = _medium_with_diag(cfg)
    fact = assemble(medium)
    prov = _provenance(cfg, medium, k_ell)
    _print_provenance(prov)
    r1, u1, _ = fixed_emitter_from_model(emitters)
    ldos, cdos = dos_maps(fact, (r1, u1), grid_from_model(cfg.grid), threads=cfg.threads)
    prefix = _out_prefix(cfg)
    for grid, tag in ((ldos, "ldos"), (cdos, "cdos")):
        grid.metadata["tool_version"] = __version__
        gridio.export_csv(grid, f"{prefix}.{tag}.csv")
        finite = grid.values[np.isfinite(grid.values)]
        vmin = float(finite.min()) if finite.size else 0.0
        vmax = float(finite.max()) if finite.size else 1.0
        if vmax <= vmin:
            vmax = vmin + 1.0
        gridio.export_pgm(grid, f"{prefix}.{tag}.pgm", vmin=vmin, vmax=vmax)
    print(f"wrote {prefix}.ldos.* and {prefix}.cdos.*")
    return EXIT_OK


def _cmd_find_detectors(cfg: RunConfigModel) -> int:
    emitters = _require(cfg, "emitters")
    search = _require(cfg, "search")
    medium, k_ell = _medium_with_diag(cfg)
    fact = assemble(medium)
    prov = _provenance(cfg, medium, k_ell)
    _print_provenance(prov)
    da, db, value = find_extremal_detectors(
        fact, emitters_from_model(emitters), rect_from_model(search.region),
        search.target, coarse=search.coarse)
    payload = {
        "provenance": prov,
        "target": search.target,
        "g2": value,
        "a": {"r": [da.r[0] / LAMBDA, da.r[1] / LAMBDA], "e": list(da.e)},
        "b": {"r": [db.r[0] / LAMBDA, db.r[1] / LAMBDA], "e": list(db.e)},
    }
    _write_json(Path(f"{_out_prefix(cfg)}.detectors.json"), payload)
    print(f"{search.target} g2={value:.12g} at a={payload['a']['r']} b={payload['b']['r']}")
    return EXIT_OK


def _cmd_validate(cfg: RunConfigModel) -> int:
    ok = validate.run_suite()
    return EXIT_OK if ok else EXIT_NUMERICAL


def _cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import app
    uvicorn.run(app, host=args.host, port=args.port)
    return EXIT_OK

