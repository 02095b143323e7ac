"""Run-config parsing, core-object conversion and medium-file I/O.

Config files are versioned JSON validated against the models in
``emitpair.schemas``; unknown keys are a hard error naming the offending
key.  All user-facing lengths are wavelengths (internal units are k*r with
k = 1; one wavelength = 2*pi).

Medium files carry the exact wavelength-unit positions produced by the
generator, so saving and reloading a medium reproduces bit-identical
internal coordinates.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np
import pydantic

from .coherence import Detector, EmitterPair
from .em2d import PolMode, Polarizability
from .errors import ConfigError
from .scan import LAMBDA, GridSpec, Rect, generate_medium
from .schemas import (
    DetectorModel,
    EmittersModel,
    GridModel,
    MediumFileRef,
    MediumParams,
    RectModel,
    RunConfigModel,
    ScanEmitterModel,
)
from .solver import Medium2D

__all__ = [
    "load_config",
    "parse_config",
    "dump_config",
    "save_medium",
    "load_medium",
    "medium_from_params",
    "emitters_from_model",
    "detector_from_model",
    "grid_from_model",
    "rect_from_model",
    "DEFAULT_DIFFUSIVE_MEDIUM",
]

# Default diffusive-regime medium: k*ell ~ 5 at this density/strength
# (optical thickness ~7.5 over the 6x6 wavelength region).
DEFAULT_DIFFUSIVE_MEDIUM = MediumParams(
    seed=42,
    n_scatterers=300,
    region=RectModel(x0=-3.0, y0=-3.0, width=6.0, height=6.0),
    alpha_bare=2.9323,
    exclusion_radius=0.05,
    mode="TE",
    wavelength_nm=698.0,
)


def parse_config(data: dict) -> RunConfigModel:
    """Validate a config dict, turning pydantic errors into ConfigError."""
    try:
        return RunConfigModel.model_validate(data)
    except pydantic.ValidationError as exc:
        raise ConfigError(_format_validation_error(exc)) from exc


def load_config(path) -> RunConfigModel:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: config root must be a JSON object")
    return parse_config(data)


def dump_config(cfg: RunConfigModel) -> str:
    return json.dumps(cfg.model_dump(mode="json"), sort_keys=True, indent=2) + "\n"


def _format_validation_error(exc: pydantic.ValidationError) -> str:
    parts = []
    for err in exc.errors():
        loc = ".".join(str(p) for p in err["loc"]) or "<root>"
        if err["type"] == "extra_forbidden":
            parts.append(f"unknown key: {loc}")
        else:
            parts.append(f"{loc}: {err['msg']}")
    return "invalid configuration: " + "; ".join(parts)


# ---------------------------------------------------------------------------
# conversions to core objects (wavelength units -> internal units)
# ---------------------------------------------------------------------------

def _unit(v) -> tuple[float, float]:
    x, y = float(v[0]), float(v[1])
    n = math.hypot(x, y)
    if n == 0.0:
        raise ConfigError("orientation/polarization vectors must be nonzero")
    return (x / n, y / n)


def _cplx(v) -> complex:
    return complex(float(v[0]), float(v[1]))


def rect_from_model(m: RectModel) -> Rect:
    return Rect(x0=m.x0, y0=m.y0, width=m.width, height=m.height)


def medium_from_params(params: MediumParams, seed_override: int | None = None) -> Medium2D:
    return generate_medium(
        seed=params.seed if seed_override is None else seed_override,
        n_scatterers=params.n_scatterers,
        region=rect_from_model(params.region),
        alpha_bare=params.alpha_bare,
        exclusion_radius=params.exclusion_radius,
        mode=PolMode.from_tag(params.mode),
        wavelength=params.wavelength_nm,
    )


def resolve_medium(section, seed_override: int | None = None) -> Medium2D:
    """Inline params (possibly seed-overridden) or a medium file on disk."""
    if section is None:
        section = MediumParams()
    if isinstance(section, MediumFileRef):
        return load_medium(section.path)
    return medium_from_params(section, seed_override)


def emitters_from_model(m: EmittersModel) -> EmitterPair:
    return EmitterPair(
        r1=(m.r1[0] * LAMBDA, m.r1[1] * LAMBDA),
        r2=(m.r2[0] * LAMBDA, m.r2[1] * LAMBDA),
        u1=_unit(m.u1), u2=_unit(m.u2),
        p1=_cplx(m.p1), p2=_cplx(m.p2),
    )


def detector_from_model(m: DetectorModel) -> Detector:
    return Detector(r=(m.r[0] * LAMBDA, m.r[1] * LAMBDA), e=_unit(m.e))


def grid_from_model(m: GridModel) -> GridSpec:
    return GridSpec(origin=tuple(m.origin), extent=tuple(m.extent), nx=m.nx, ny=m.ny)


def fixed_emitter_from_model(m: EmittersModel):
    """(r1, u1, p1) triple for map scans, internal units."""
    return ((m.r1[0] * LAMBDA, m.r1[1] * LAMBDA), _unit(m.u1), _cplx(m.p1))


def scanning_emitter_from_model(m: ScanEmitterModel):
    return (_unit(m.u), _cplx(m.p))


# ---------------------------------------------------------------------------
# medium files
# ---------------------------------------------------------------------------

def save_medium(medium: Medium2D, path) -> Path:
    path = Path(path)
    payload = medium.canonical_dict()
    payload["metadata"] = _plain(medium.metadata)
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n", newline="\n")
    return path


def load_medium(path) -> Medium2D:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read medium file {path}: {exc}") from exc
    if data.get("format") != "emitpair.medium.v1":
        raise ConfigError(f"{path}: not an emitpair medium file")
    mode = PolMode.from_tag(data["mode"])
    pols = [Polarizability(alpha_bare=ab, alpha=complex(a[0], a[1]))
            for ab, a in zip(data["alpha_bare"], data["alpha"])]
    return Medium2D.from_lambda(mode, np.array(data["positions_lambda"], dtype=float),
                                pols, metadata=data.get("metadata", {}))


def _plain(obj):
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj
