"""Pydantic models for run configurations and service request/response bodies.

All lengths are in wavelengths; complex amplitudes are [re, im] pairs.
Every model forbids unknown keys so that config typos fail loudly.
"""

from __future__ import annotations

from typing import Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field

Vec2 = tuple[float, float]


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


class RectModel(StrictModel):
    x0: float
    y0: float
    width: float = Field(gt=0)
    height: float = Field(gt=0)


class MediumParams(StrictModel):
    """Inline parameters for a seeded random medium (n_scatterers = 0 is free space)."""

    seed: int = Field(default=1, ge=0)
    n_scatterers: int = Field(default=0, ge=0)
    region: RectModel = RectModel(x0=-3.0, y0=-3.0, width=6.0, height=6.0)
    alpha_bare: float = 2.9323
    exclusion_radius: float = Field(default=0.05, ge=0)
    mode: Literal["TM", "TE"] = "TE"
    wavelength_nm: float = 698.0


class MediumFileRef(StrictModel):
    path: str


MediumSection = Union[MediumParams, MediumFileRef]


class EmittersModel(StrictModel):
    r1: Vec2
    r2: Vec2
    u1: Vec2 = (1.0, 0.0)
    u2: Vec2 = (1.0, 0.0)
    p1: Vec2 = (1.0, 0.0)
    p2: Vec2 = (1.0, 0.0)


class DetectorModel(StrictModel):
    r: Vec2
    e: Vec2 = (1.0, 0.0)


class DetectorsModel(StrictModel):
    a: DetectorModel
    b: DetectorModel


class GridModel(StrictModel):
    origin: Vec2 = (-3.0, -3.0)
    extent: Vec2 = (6.0, 6.0)
    nx: int = Field(default=201, gt=0)
    ny: int = Field(default=201, gt=0)


class ScanEmitterModel(StrictModel):
    """Orientation/amplitude of the emitter that scans across the grid."""

    u: Vec2 = (1.0, 0.0)
    p: Vec2 = (1.0, 0.0)


class SearchModel(StrictModel):
    region: RectModel
    target: Literal["maximize", "minimize"] = "maximize"
    coarse: int = Field(default=12, gt=1)


class TolerancesModel(StrictModel):
    tol_super: float = Field(default=0.05, gt=0)
    tol_sub: float = Field(default=0.05, gt=0)


Command = Literal["gen-medium", "diagnose", "g2", "g2-map", "dos-maps",
                  "find-detectors", "validate"]


class RunConfigModel(StrictModel):
    """One run of the tool: exactly one command plus its parameter sections."""

    version: Literal[1] = 1
    command: Command
    seed: Optional[int] = None          # overrides medium.seed when given
    threads: int = Field(default=1, ge=1)
    out: Optional[str] = None
    medium: Optional[MediumSection] = None
    emitters: Optional[EmittersModel] = None
    detectors: Optional[DetectorsModel] = None
    grid: GridModel = GridModel()
    scanning: ScanEmitterModel = ScanEmitterModel()
    search: Optional[SearchModel] = None
    tolerances: TolerancesModel = TolerancesModel()


# ---------------------------------------------------------------------------
# service request/response bodies
# ---------------------------------------------------------------------------

class MediumRequest(StrictModel):
    medium: MediumParams


class MediumCreated(StrictModel):
    medium_id: str
    n_scatterers: int
    mode: str
    cond_estimate: float


class DiagnosticsResponse(StrictModel):
    sigma_s: float
    ell: float
    k_ell: float
    optical_thickness: float
    diffusive: bool


class MediumBody(StrictModel):
    """Reference a stored medium by id or supply parameters inline."""

    medium_id: Optional[str] = None
    medium: Optional[MediumParams] = None


class G2Request(MediumBody):
    emitters: EmittersModel
    detectors: DetectorsModel
    tolerances: TolerancesModel = TolerancesModel()


class G2Response(StrictModel):
    g2: float
    big_g2: float
    amplitude_residual: float
    phase_residual: float
    subradiance_residual: float
    projected_amplitudes: tuple[Vec2, Vec2]
    classification: str
    emissive_power_gap: float
    cdos_gap: float


class MapRequest(MediumBody):
    emitters: Optional[EmittersModel] = None    # fixed emitter from r1/u1/p1
    scanning: ScanEmitterModel = ScanEmitterModel()
    grid: GridModel = GridModel()
    threads: int = Field(default=1, ge=1)


class MapResponse(StrictModel):
    channel: str
    origin: Vec2
    extent: Vec2
    nx: int
    ny: int
    values: list[list[Optional[float]]]         # row-major; None marks missing pixels
    metadata: dict


class DosMapsResponse(StrictModel):
    ldos: MapResponse
    cdos: MapResponse


class DetectorSearchRequest(MediumBody):
    emitters: EmittersModel
    search: SearchModel


class DetectorSearchResponse(StrictModel):
    a: DetectorModel
    b: DetectorModel
    g2: float


class HealthResponse(StrictModel):
    status: str
    version: str
