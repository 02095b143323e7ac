"""FastAPI service wrapping the core package.

Media are generated once, assembled, and cached in memory keyed by digest,
so repeated g2/map queries against the same disordered medium reuse the
factorization.  Request and response bodies are the pydantic models from
``emitpair.schemas``; domain errors map to HTTP 400/422/500.
"""

from __future__ import annotations

import math
import threading
from collections import OrderedDict

import numpy as np
from fastapi import FastAPI, HTTPException

from . import __version__
from .coherence import coherence_report
from .config import (
    detector_from_model,
    emitters_from_model,
    fixed_emitter_from_model,
    grid_from_model,
    medium_from_params,
    rect_from_model,
    scanning_emitter_from_model,
)
from .errors import EmitpairError, GeometryError, PackingError, SingularSystemError
from .scan import MapGrid, diffusion_diagnostics, dos_maps, find_extremal_detectors, g2_map, LAMBDA
from .schemas import (
    DetectorModel,
    DetectorSearchRequest,
    DetectorSearchResponse,
    DiagnosticsResponse,
    DosMapsResponse,
    G2Request,
    G2Response,
    HealthResponse,
    MapRequest,
    MapResponse,
    MediumBody,
    MediumCreated,
    MediumRequest,
)
from .solver import SystemFactorization, assemble

__all__ = ["app", "create_app"]

_STORE_LIMIT = 16


class _MediumStore:
    """Digest-keyed LRU of assembled factorizations."""

    def __init__(self, limit: int = _STORE_LIMIT):
        self._lock = threading.Lock()
        self._items: OrderedDict[str, SystemFactorization] = OrderedDict()
        self._limit = limit

    def put(self, fact: SystemFactorization) -> str:
        mid = fact.medium.digest()[:16]
        with self._lock:
            self._items[mid] = fact
            self._items.move_to_end(mid)
            while len(self._items) > self._limit:
                self._items.popitem(last=False)
        return mid

    def get(self, mid: str) -> SystemFactorization:
        with self._lock:
            if mid not in self._items:
                raise KeyError(mid)
            self._items.move_to_end(mid)
            return self._items[mid]


def _grid_response(grid: MapGrid) -> MapResponse:
    rows: list[list[float | None]] = []
    for iy in range(grid.ny):
        row = [(None if not np.isfinite(v) else float(v)) for v in grid.values[iy]]
        rows.append(row)
    return MapResponse(channel=grid.channel.value, origin=grid.origin,
                       extent=grid.extent, nx=grid.nx, ny=grid.ny,
                       values=rows, metadata=grid.metadata)


def create_app() -> FastAPI:
    app = FastAPI(title="emitpair", version=__version__,
                  description="Two-emitter photon coherence in 2D structured media")
    store = _MediumStore()

    def resolve(body: MediumBody) -> SystemFactorization:
        if body.medium_id is not None:
            try:
                return store.get(body.medium_id)
            except KeyError:
                raise HTTPException(status_code=404,
                                    detail=f"unknown medium_id {body.medium_id!r}")
        params = body.medium
        if params is None:
            raise HTTPException(status_code=400,
                                detail="provide either medium_id or medium")
        fact = assemble(medium_from_params(params))
        store.put(fact)
        return fact

    @app.exception_handler(EmitpairError)
    async def _domain_error(_, exc: EmitpairError):
        from fastapi.responses import JSONResponse
        status = 500 if isinstance(exc, SingularSystemError) else 400
        return JSONResponse(status_code=status,
                            content={"error": type(exc).__name__, "detail": str(exc)})

    @app.get("/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse(status="ok", version=__version__)

    @app.post("/media", response_model=MediumCreated)
    def create_medium(req: MediumRequest) -> MediumCreated:
        try:
            fact = assemble(medium_from_params(req.medium))
        except (PackingError, GeometryError) as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        mid = store.put(fact)
        return MediumCreated(medium_id=mid, n_scatterers=fact.medium.n,
                             mode=fact.medium.mode.value,
                             cond_estimate=fact.cond_estimate)

    @app.get("/media/{medium_id}")
    def get_medium(medium_id: str) -> dict:
        try:
            fact = store.get(medium_id)
        except KeyError:
            raise HTTPException(status_code=404, detail=f"unknown medium_id {medium_id!r}")
        payload = fact.medium.canonical_dict()
        payload["metadata"] = fact.medium.metadata
        return payload

    @app.post("/media/{medium_id}/diagnostics", response_model=DiagnosticsResponse)
    def diagnostics(medium_id: str) -> DiagnosticsResponse:
        try:
            fact = store.get(medium_id)
        except KeyError:
            raise HTTPException(status_code=404, detail=f"unknown medium_id {medium_id!r}")
        d = diffusion_diagnostics(fact.medium)
        return DiagnosticsResponse(
            sigma_s=d.sigma_s, ell=_finite(d.ell), k_ell=_finite(d.k_ell),
            optical_thickness=d.optical_thickness, diffusive=d.diffusive)

    @app.post("/g2", response_model=G2Response)
    def g2(req: G2Request) -> G2Response:
        fact = resolve(req)
        report = coherence_report(
            fact, emitters_from_model(req.emitters),
            detector_from_model(req.detectors.a), detector_from_model(req.detectors.b),
            tol_super=req.tolerances.tol_super, tol_sub=req.tolerances.tol_sub)
        c_ge, c_eg = report.projected_amplitudes
        return G2Response(
            g2=report.g2, big_g2=report.big_g2,
            amplitude_residual=report.amplitude_residual,
            phase_residual=report.phase_residual,
            subradiance_residual=report.subradiance_residual,
            projected_amplitudes=((c_ge.real, c_ge.imag), (c_eg.real, c_eg.imag)),
            classification=report.classification.value,
            emissive_power_gap=report.emissive_power_gap,
            cdos_gap=report.cdos_gap)

    @app.post("/maps/g2", response_model=MapResponse)
    def map_g2(req: MapRequest) -> MapResponse:
        fact = resolve(req)
        if req.emitters is None:
            raise HTTPException(status_code=400, detail="emitters section required")
        grid = g2_map(fact, fixed_emitter_from_model(req.emitters),
                      scanning_emitter_from_model(req.scanning),
                      grid_from_model(req.grid), threads=req.threads)
        return _grid_response(grid)

    @app.post("/maps/dos", response_model=DosMapsResponse)
    def map_dos(req: MapRequest) -> DosMapsResponse:
        fact = resolve(req)
        if req.emitters is None:
            raise HTTPException(status_code=400, detail="emitters section required")
        r1, u1, _ = fixed_emitter_from_model(req.emitters)
        ldos, cdos = dos_maps(fact, (r1, u1), grid_from_model(req.grid),
                              threads=req.threads)
        return DosMapsResponse(ldos=_grid_response(ldos), cdos=_grid_response(cdos))

    @app.post("/detectors/search", response_model=DetectorSearchResponse)
    def detector_search(req: DetectorSearchRequest) -> DetectorSearchResponse:
        fact = resolve(req)
        da, db, value = find_extremal_detectors(
            fact, emitters_from_model(req.emitters),
            rect_from_model(req.search.region), req.search.target,
            coarse=req.search.coarse)
        return DetectorSearchResponse(
            a=DetectorModel(r=(da.r[0] / LAMBDA, da.r[1] / LAMBDA), e=da.e),
            b=DetectorModel(r=(db.r[0] / LAMBDA, db.r[1] / LAMBDA), e=db.e),
            g2=value)

    return app


def _finite(x: float) -> float:
    return x if math.isfinite(x) else 1.0e308


app = create_app()
