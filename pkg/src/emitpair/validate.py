"""Self-contained invariant suite behind the ``validate`` CLI command.

Each check re-derives an identity the package must satisfy (special-function
identities, solver oracles, coherence bounds, export round-trips) and runs in
seconds; together they cover the load-bearing invariants without requiring
any development dependencies.  The pytest suite runs the same material at
full depth.
"""

from __future__ import annotations

import math
import tempfile
from pathlib import Path

import numpy as np

from . import gridio
from .coherence import (
    Detector,
    EmitterPair,
    big_g2,
    cdos_bound_residual,
    farfield_power_check,
    g2_detectors,
    g2_via_projection,
    p1_integrated,
    p2_integrated,
)
from .em2d import PolMode, dress_polarizability, green0_im_coincident
from .scan import GridSpec, MapChannel, MapGrid, Rect, generate_medium, g2_map
from .solver import Medium2D, assemble, im_green_projected, total_green
from .specfun import ASYMPTOTIC_CUTOFF, SERIES_CUTOFF, bessel01, _asym01, _series01, _steed01

__all__ = ["run_suite", "CHECKS"]


def _check_wronskian():
    x = np.logspace(-3, 3, 1000)
    j0, y0, j1, y1 = bessel01(x)
    res = np.abs(j1 * y0 - j0 * y1 - 2.0 / (np.pi * x))
    worst = float(np.max(res / np.maximum(1.0, 2.0 / (np.pi * x))))
    return worst <= 1e-11, f"max scaled residual {worst:.2e}"


def _check_regime_continuity():
    worst = 0.0
    for lo_fn, hi_fn, cut in ((_series01, _steed01, SERIES_CUTOFF),
                              (_steed01, _asym01, ASYMPTOTIC_CUTOFF)):
        x = np.linspace(cut - 0.5, cut + 0.5, 101)
        a = np.array(lo_fn(x))
        b = np.array(hi_fn(x))
        env = np.maximum(np.hypot(a[0], a[1]), np.hypot(a[2], a[3]))
        worst = max(worst, float(np.max(np.abs(a - b) / env)))
    return worst <= 1e-10, f"max overlap disagreement {worst:.2e}"


def _check_hankel_derivative():
    # step 1e-5*x keeps the FD truncation term (~1.3e-11 x^1.5) under 1e-8
    # only for x <= ~80; sample within that window
    worst = 0.0
    for x in (0.7, 3.0, 9.5, 25.0, 60.0):
        h = 1e-5 * x
        j0p, y0p, _, _ = bessel01(np.array([x + h]))
        j0m, y0m, _, _ = bessel01(np.array([x - h]))
        d = ((j0p - j0m) + 1j * (y0p - y0m))[0] / (2 * h)
        _, _, j1, y1 = bessel01(np.array([x]))
        worst = max(worst, abs((j1[0] + 1j * y1[0]) - (-d)))
    return worst <= 1e-8, f"max |H1 + dH0/dx| {worst:.2e}"


def _check_optical_theorem():
    worst = 0.0
    for mode in (PolMode.TM_SCALAR, PolMode.TE_TENSOR):
        imc = green0_im_coincident(mode)
        for ab in np.linspace(-6, 6, 20):
            if ab == 0.0:
                continue
            pol = dress_polarizability(float(ab), mode)
            ext = pol.alpha.imag
            sca = abs(pol.alpha) ** 2 * imc
            worst = max(worst, abs(ext - sca) / abs(ext))
    return worst <= 1e-10, f"max extinction/scattering mismatch {worst:.2e}"


def _check_solver_oracles():
    from scipy import special as sp

    def g0(a, b):
        rho = float(np.hypot(*(np.asarray(a, float) - np.asarray(b, float))))
        return 0.25j * complex(sp.hankel1(0, rho))

    pol_a = dress_polarizability(1.5, PolMode.TM_SCALAR)
    pol_b = dress_polarizability(-0.8, PolMode.TM_SCALAR)
    s1, s2 = (0.0, 0.0), (1.1, 0.0)
    r, rp = (2.0, 1.0), (-1.5, 0.3)
    f1 = assemble(Medium2D(1.0, PolMode.TM_SCALAR, [s1], [pol_a]))
    one = g0(r, rp) + g0(r, s1) * pol_a.alpha * g0(s1, rp)
    e1 = abs(total_green(f1, r, rp).value - one) / abs(one)
    f2 = assemble(Medium2D(1.0, PolMode.TM_SCALAR, [s1, s2], [pol_a, pol_b]))
    g12 = g0(s1, s2)
    det = 1.0 - pol_a.alpha * pol_b.alpha * g12 * g12
    x1 = (g0(s1, rp) + pol_b.alpha * g12 * g0(s2, rp)) / det
    x2 = (g0(s2, rp) + pol_a.alpha * g12 * g0(s1, rp)) / det
    two = g0(r, rp) + g0(r, s1) * pol_a.alpha * x1 + g0(r, s2) * pol_b.alpha * x2
    e2 = abs(total_green(f2, r, rp).value - two) / abs(two)
    ok = e1 <= 1e-12 and e2 <= 1e-10
    return ok, f"one-scatterer {e1:.2e}, two-scatterer {e2:.2e}"


def _check_reciprocity():
    med = generate_medium(11, 40, Rect(-0.8, -0.8, 1.6, 1.6), 2.0, 0.01,
                          PolMode.TE_TENSOR)
    fact = assemble(med)
    rng = np.random.default_rng(2)
    worst = 0.0
    for _ in range(20):
        a = rng.uniform(-7, 7, 2)
        b = rng.uniform(-7, 7, 2)
        ga = total_green(fact, a, b).value
        gb = total_green(fact, b, a).value
        worst = max(worst, float(np.max(np.abs(ga - gb.T)) / np.max(np.abs(ga))))
    return worst <= 1e-10, f"max reciprocity defect {worst:.2e}"


def _check_free_space_big_g2():
    from scipy import special as sp
    fact = assemble(Medium2D(1.0, PolMode.TM_SCALAR, np.empty((0, 2)), []))
    worst = 0.0
    for d in np.linspace(0.3, 20, 20):
        em = EmitterPair(r1=(0.0, 0.0), r2=(float(d), 0.0))
        worst = max(worst, abs(big_g2(fact, em) - 0.5 * (1 + sp.j0(d) ** 2)))
    return worst <= 1e-10, f"max closed-form error {worst:.2e}"


def _check_fringe_law():
    fact = assemble(Medium2D(1.0, PolMode.TM_SCALAR, np.empty((0, 2)), []))
    d, radius = 2.7, 1.0e3
    em = EmitterPair(r1=(-d / 2, 0.0), r2=(d / 2, 0.0))
    rng = np.random.default_rng(5)
    worst = 0.0
    for _ in range(10):
        ta, tb = rng.uniform(0, 2 * np.pi, 2)
        da = Detector(r=(radius * math.cos(ta), radius * math.sin(ta)))
        db = Detector(r=(radius * math.cos(tb), radius * math.sin(tb)))
        want = math.cos(0.5 * d * (math.cos(ta) - math.cos(tb))) ** 2
        worst = max(worst, abs(g2_detectors(fact, em, da, db) - want))
    return worst <= 2e-3, f"max fringe-law error {worst:.2e}"


def _random_configs(n_cfg: int, seed: int):
    rng = np.random.default_rng(seed)
    med = generate_medium(23, 30, Rect(-0.7, -0.7, 1.4, 1.4), 2.2, 0.01,
                          PolMode.TE_TENSOR)
    fact = assemble(med)
    pos = med.positions

    def pick():
        while True:
            p = rng.uniform(-6, 6, 2)
            if np.min(np.hypot(pos[:, 0] - p[0], pos[:, 1] - p[1])) > 1e-3:
                return tuple(p)

    def unit():
        v = rng.normal(size=2)
        v /= np.hypot(*v)
        return tuple(v)

    for _ in range(n_cfg):
        em = EmitterPair(r1=pick(), r2=pick(), u1=unit(), u2=unit(),
                         p1=complex(*rng.normal(size=2)), p2=complex(*rng.normal(size=2)))
        da = Detector(r=pick(), e=unit())
        db = Detector(r=pick(), e=unit())
        yield fact, em, da, db


def _check_bounds_and_paths():
    worst_eq = 0.0
    worst_bound = 0.0
    for fact, em, da, db in _random_configs(300, 17):
        g2 = g2_detectors(fact, em, da, db)
        alt = g2_via_projection(fact, em, da, db)
        gg = big_g2(fact, em)
        worst_eq = max(worst_eq, abs(g2 - alt))
        worst_bound = max(worst_bound, g2 - 1.0, -g2, gg - 1.0, -gg)
    ok = worst_eq <= 1e-12 and worst_bound <= 1e-12
    return ok, f"path mismatch {worst_eq:.2e}, bound excess {worst_bound:.2e}"


def _check_cdos_bound():
    med = generate_medium(29, 30, Rect(-0.7, -0.7, 1.4, 1.4), 1.8, 0.01,
                          PolMode.TE_TENSOR)
    fact = assemble(med)
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(300):
        p = rng.uniform(-6, 6, 2)
        q = rng.uniform(-6, 6, 2)
        u = rng.normal(size=2); u /= np.hypot(*u)
        w = rng.normal(size=2); w /= np.hypot(*w)
        worst = min(worst, cdos_bound_residual(fact, p, q, u, w))
    return worst >= -1e-10, f"min residual {worst:.2e}"


def _check_integrated_consistency():
    worst = 0.0
    for fact, em, _, _ in _random_configs(50, 31):
        p1 = p1_integrated(fact, em)
        p2 = p2_integrated(fact, em)
        worst = max(worst, abs(p2 / (p1 * p1) - big_g2(fact, em)))
    return worst <= 1e-14, f"max |P2/P1^2 - G2| {worst:.2e}"


def _check_farfield_identity():
    med = generate_medium(37, 12, Rect(-0.6, -0.6, 1.2, 1.2), 2.0, 0.02,
                          PolMode.TE_TENSOR)
    fact = assemble(med)
    em = EmitterPair(r1=(0.4, 0.1), r2=(-1.0, 0.7), u1=(1.0, 0.0), u2=(0.6, 0.8),
                     p1=1.0, p2=0.8j)
    ff = farfield_power_check(fact, em, 1, 1.0e3, 1024)
    ref = p1_integrated(fact, em)
    err = abs(ff - ref) / ref
    return err <= 0.01, f"order-1 quadrature mismatch {err:.2e}"


def _check_ldos_positivity():
    med = generate_medium(41, 30, Rect(-0.7, -0.7, 1.4, 1.4), 2.5, 0.01,
                          PolMode.TM_SCALAR)
    fact = assemble(med)
    rng = np.random.default_rng(9)
    worst = math.inf
    for _ in range(200):
        p = rng.uniform(-6, 6, 2)
        worst = min(worst, im_green_projected(fact, p, p))
    return worst >= -1e-12, f"min LDOS {worst:.2e}"


def _check_export_roundtrip():
    rng = np.random.default_rng(1)
    values = rng.uniform(0, 1, (7, 5))
    values[2, 3] = np.nan
    grid = MapGrid(origin=(-1.0, -1.0), extent=(2.0, 2.0), nx=5, ny=7,
                   values=values, channel=MapChannel.G2, metadata={"seed": 1})
    with tempfile.TemporaryDirectory() as tmp:
        path = gridio.export_csv(grid, Path(tmp) / "roundtrip.csv")
        back = gridio.import_csv(path)
        same = np.array_equal(back.values, values, equal_nan=True)
        gridio.export_pgm(grid, Path(tmp) / "roundtrip.pgm")
    return same, "CSV round-trip exact" if same else "CSV round-trip mismatch"


def _check_map_determinism():
    med = generate_medium(43, 25, Rect(-0.6, -0.6, 1.2, 1.2), 2.9323, 0.05,
                          PolMode.TE_TENSOR)
    fact = assemble(med)
    spec = GridSpec(origin=(-0.6, -0.6), extent=(1.2, 1.2), nx=21, ny=21)
    fixed = ((0.0, 0.0), (1.0, 0.0), 1.0 + 0.0j)
    scanning = ((1.0, 0.0), 1.0 + 0.0j)
    a = g2_map(fact, fixed, scanning, spec, threads=1)
    b = g2_map(fact, fixed, scanning, spec, threads=4)
    same = np.array_equal(a.values, b.values, equal_nan=True)
    return same, "rasters bit-identical across worker counts" if same else "raster mismatch"


CHECKS = [
    ("wronskian-identity", _check_wronskian),
    ("regime-continuity", _check_regime_continuity),
    ("hankel-derivative", _check_hankel_derivative),
    ("optical-theorem", _check_optical_theorem),
    ("solver-closed-forms", _check_solver_oracles),
    ("reciprocity", _check_reciprocity),
    ("free-space-big-g2", _check_free_space_big_g2),
    ("fringe-law", _check_fringe_law),
    ("bounds-and-path-equivalence", _check_bounds_and_paths),
    ("cdos-bound", _check_cdos_bound),
    ("integrated-consistency", _check_integrated_consistency),
    ("farfield-identity", _check_farfield_identity),
    ("ldos-positivity", _check_ldos_positivity),
    ("export-roundtrip", _check_export_roundtrip),
    ("map-determinism", _check_map_determinism),
]


def run_suite(printer=print) -> bool:
    """Run every check, print one PASS/FAIL line each; True iff all pass."""
    all_ok = True
    for name, fn in CHECKS:
        try:
            ok, detail = fn()
        except Exception as exc:  # noqa: BLE001 - a crashed check is a failed check
            ok, detail = False, f"raised {type(exc).__name__}: {exc}"
        all_ok &= ok
        printer(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
    return all_ok
