"""Pair-detection coherence observables for two independent single-photon emitters.

Both emitters start excited and are read out either by two polarized point
detectors or by detection integrated over all output channels:

* ``g2_detectors``: normalized two-detector coincidence factor, built from
  the four propagation amplitudes G_ai = e_a . G(r_a, r_i) . u_i.  It is
  bounded by [0, 1] for any environment (antibunching).
* ``projected_state``: emitter superposition left after the first detection;
  feeding it through the conditional-probability route gives a second,
  independent code path to g2 (``g2_via_projection``).
* ``condition_residuals``: scale-free residuals of the three extremum
  conditions (amplitude balance and phase matching for g2 = 1; destructive
  pairing for g2 = 0).
* ``big_g2`` and ``p1_integrated``/``p2_integrated``: channel-integrated
  correlation factor and detection probabilities, closed forms in the
  projected Im G (LDOS/CDOS) of a lossless medium.
* ``farfield_power_check``: brute-force angular quadrature of the same
  integrated quantities on a far-field circle; the independent cross-check
  of the closed forms through the full solver.

Powers are reported in reduced units (mu0 = omega = k = 1); the correlation
factors are ratios and carry no units.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .em2d import PolMode, green0_im_coincident
from .errors import (
    DomainError,
    FarFieldValidityError,
    UndefinedCorrelationError,
    UndefinedProjectionError,
)
from .solver import (
    SystemFactorization,
    _direct_projected,
    greens_projected,
    greens_vector,
    im_green_projected,
    obs_rows,
    rhs_columns,
)

__all__ = [
    "EmitterPair",
    "Detector",
    "Classification",
    "CoherenceReport",
    "g2_detectors",
    "projected_state",
    "g2_via_projection",
    "condition_residuals",
    "big_g2",
    "p1_integrated",
    "p2_integrated",
    "farfield_power_check",
    "cdos_bound_residual",
    "classify_emission",
    "superradiance_diagnostics",
    "coherence_report",
]


@dataclass(frozen=True)
class EmitterPair:
    """Two fixed-dipole emitters sharing one transition frequency.

    Positions in internal units; orientations are in-plane unit vectors
    (ignored in TM); p1/p2 are complex dipole amplitudes, not both zero.
    """

    r1: tuple[float, float]
    r2: tuple[float, float]
    u1: tuple[float, float] = (1.0, 0.0)
    u2: tuple[float, float] = (1.0, 0.0)
    p1: complex = 1.0 + 0.0j
    p2: complex = 1.0 + 0.0j

    def __post_init__(self):
        if self.p1 == 0 and self.p2 == 0:
            raise DomainError("emitter amplitudes must not both be zero")

    @property
    def positions(self) -> np.ndarray:
        return np.array([self.r1, self.r2], dtype=float)

    @property
    def orientations(self) -> np.ndarray:
        return np.array([self.u1, self.u2], dtype=float)


@dataclass(frozen=True)
class Detector:
    """A point detector with an in-plane polarization axis (ignored in TM)."""

    r: tuple[float, float]
    e: tuple[float, float] = (1.0, 0.0)


class Classification(enum.Enum):
    SUPERRADIANT = "superradiant"
    SUBRADIANT = "subradiant"
    INTERMEDIATE = "intermediate"


@dataclass(frozen=True)
class CoherenceReport:
    """Bundle of the pair-coherence observables for one configuration."""

    g2: float
    amplitude_residual: float
    phase_residual: float
    subradiance_residual: float
    projected_amplitudes: tuple[complex, complex]
    classification: Classification
    big_g2: float
    emissive_power_gap: float = field(default=float("nan"))
    cdos_gap: float = field(default=float("nan"))


# ---------------------------------------------------------------------------
# detector-resolved observables
# ---------------------------------------------------------------------------

def _detector_amplitudes(fact: SystemFactorization, em: EmitterPair,
                         detectors: list[Detector]) -> np.ndarray:
    """G_ai matrix of shape (n_detectors, 2)."""
    obs = np.array([d.r for d in detectors], dtype=float)
    if fact.medium.mode is PolMode.TE_TENSOR:
        e = np.array([d.e for d in detectors], dtype=float)
        return greens_projected(fact, obs, e, em.positions, em.orientations)
    return greens_projected(fact, obs, None, em.positions, None)


def g2_detectors(fact: SystemFactorization, em: EmitterPair,
                 da: Detector, db: Detector) -> float:
    """Normalized two-detector coincidence factor; always in [0, 1]."""
    g = _detector_amplitudes(fact, em, [da, db])
    return _g2_from_amplitudes(em.p1, em.p2, g[0, 0], g[0, 1], g[1, 0], g[1, 1])


def _g2_from_amplitudes(p1, p2, ga1, ga2, gb1, gb2) -> float:
    den_a = abs(p1 * ga1) ** 2 + abs(p2 * ga2) ** 2
    den_b = abs(p1 * gb1) ** 2 + abs(p2 * gb2) ** 2
    if den_a == 0.0 or den_b == 0.0:
        raise UndefinedCorrelationError("both emitters are dark at a detector")
    num = abs(p1 * p2) ** 2 * abs(ga1 * gb2 + ga2 * gb1) ** 2
    return float(num / (den_a * den_b))


def projected_state(fact: SystemFactorization, em: EmitterPair,
                    da: Detector) -> tuple[complex, complex]:
    """Emitter-pair amplitudes (c_ge, c_eg) after one detection at ``da``.

    c_ge multiplies the state with emitter 1 de-excited; the pair is
    normalized so |c_ge|^2 + |c_eg|^2 = 1.
    """
    g = _detector_amplitudes(fact, em, [da])
    a1 = em.p1 * g[0, 0]
    a2 = em.p2 * g[0, 1]
    norm = np.hypot(abs(a1), abs(a2))
    if norm == 0.0:
        raise UndefinedProjectionError("post-detection state has zero norm")
    return complex(a1 / norm), complex(a2 / norm)


def g2_via_projection(fact: SystemFactorization, em: EmitterPair,
                      da: Detector, db: Detector) -> float:
    """g2 recomputed as a conditional-detection ratio through the projected state.

    Second code path used to cross-check ``g2_detectors``: the probability of
    the second detection given the first, normalized by the same detection
    from the fully excited pair.
    """
    c_ge, c_eg = projected_state(fact, em, da)
    g = _detector_amplitudes(fact, em, [db])
    gb1, gb2 = g[0, 0], g[0, 1]
    den = abs(em.p1 * gb1) ** 2 + abs(em.p2 * gb2) ** 2
    if den == 0.0:
        raise UndefinedCorrelationError("both emitters are dark at detector b")
    num = abs(c_ge * em.p2 * gb2 + c_eg * em.p1 * gb1) ** 2
    return float(num / den)


def condition_residuals(fact: SystemFactorization, em: EmitterPair,
                        da: Detector, db: Detector) -> tuple[float, float, float]:
    """Scale-free residuals of the coherence extremum conditions.

    Returns (amplitude_residual, phase_residual, subradiance_residual):
    the first two vanish together exactly when g2 = 1 (balanced detection
    efficiency and matched two-path phase), the last exactly when g2 = 0.
    The subradiance residual is independent of the emitter amplitudes.
    """
    g = _detector_amplitudes(fact, em, [da, db])
    ga1, ga2, gb1, gb2 = g[0, 0], g[0, 1], g[1, 0], g[1, 1]
    a = abs(em.p1) ** 2 * abs(ga1 * gb1)
    b = abs(em.p2) ** 2 * abs(ga2 * gb2)
    amplitude = abs(a - b) / (a + b) if (a + b) > 0.0 else 0.0
    d = np.angle(ga1 * gb2) - np.angle(ga2 * gb1)
    phase = abs((d + np.pi) % (2.0 * np.pi) - np.pi)
    num = abs(ga1 * gb2 + ga2 * gb1)
    den = abs(ga1 * gb2) + abs(ga2 * gb1)
    subradiance = num / den if den > 0.0 else 0.0
    return float(amplitude), float(phase), float(subradiance)


# ---------------------------------------------------------------------------
# channel-integrated observables
# ---------------------------------------------------------------------------

def _im_green_pair(fact: SystemFactorization, em: EmitterPair) -> tuple[float, float, float]:
    """(ImG11, ImG22, ImG12) with one batched solve."""
    med = fact.medium
    te = med.mode is PolMode.TE_TENSOR
    imc = green0_im_coincident(med.mode)
    r1 = np.asarray(em.r1, float)
    r2 = np.asarray(em.r2, float)
    u1 = np.asarray(em.u1, float)
    u2 = np.asarray(em.u2, float)
    coincident = np.array_equal(r1, r2)

    if med.n == 0:
        if coincident:
            i12 = imc * float(np.dot(u1, u2)) if te else imc
        else:
            if te:
                i12 = float(greens_projected(fact, r1[None, :], u1[None, :],
                                             r2[None, :], u2[None, :])[0, 0].imag)
            else:
                i12 = float(greens_projected(fact, r1[None, :], None,
                                             r2[None, :], None)[0, 0].imag)
        return imc, imc, i12

    src = em.positions
    dirs = em.orientations if te else None
    x = fact.solve(rhs_columns(fact, src, dirs))
    w1 = obs_rows(fact, r1[None, :], u1[None, :] if te else None)
    w2 = obs_rows(fact, r2[None, :], u2[None, :] if te else None)
    i11 = imc + float((w1 @ x[:, 0])[0].imag)
    i22 = imc + float((w2 @ x[:, 1])[0].imag)
    cross = complex((w1 @ x[:, 1])[0])
    if coincident:
        direct12 = imc * float(np.dot(u1, u2)) if te else imc
        i12 = direct12 + cross.imag
    else:
        d12 = _direct_projected(med, r1[None, :], u1[None, :] if te else None,
                                r2[None, :], u2[None, :] if te else None)[0, 0]
        i12 = float((d12 + cross).imag)
    return i11, i22, float(i12)


def big_g2(fact: SystemFactorization, em: EmitterPair) -> float:
    """Correlation factor for detection integrated over all output channels.

    2 |p1 p2|^2 [ImG11 ImG22 + ImG12^2] / (|p1|^2 ImG11 + |p2|^2 ImG22)^2,
    bounded by [0, 1] in any lossless environment.
    """
    i11, i22, i12 = _im_green_pair(fact, em)
    return _big_g2_from_im(em.p1, em.p2, i11, i22, i12)


def _big_g2_from_im(p1, p2, i11, i22, i12) -> float:
    den = (abs(p1) ** 2 * i11 + abs(p2) ** 2 * i22) ** 2
    if den == 0.0:
        raise UndefinedCorrelationError("zero integrated single-detection probability")
    num = 2.0 * abs(p1 * p2) ** 2 * (i11 * i22 + i12 * i12)
    return float(num / den)


def p1_integrated(fact: SystemFactorization, em: EmitterPair) -> float:
    """Single-detection probability integrated over all output channels (reduced units)."""
    i11, i22, _ = _im_green_pair(fact, em)
    return 0.5 * (abs(em.p1) ** 2 * i11 + abs(em.p2) ** 2 * i22)


def p2_integrated(fact: SystemFactorization, em: EmitterPair) -> float:
    """Double-detection probability integrated over all output channels (reduced units)."""
    i11, i22, i12 = _im_green_pair(fact, em)
    return 0.5 * abs(em.p1 * em.p2) ** 2 * (i11 * i22 + i12 * i12)


def cdos_bound_residual(fact: SystemFactorization, r1, r2, u1=None, u2=None) -> float:
    """sqrt(ImG11 ImG22) - |ImG12|; nonnegative for any lossless medium."""
    i11 = im_green_projected(fact, r1, r1, u1, u1)
    i22 = im_green_projected(fact, r2, r2, u2, u2)
    i12 = im_green_projected(fact, r1, r2, u1, u2)
    return float(np.sqrt(max(i11, 0.0) * max(i22, 0.0)) - abs(i12))


def superradiance_diagnostics(fact: SystemFactorization, em: EmitterPair) -> tuple[float, float]:
    """(emissive-power gap, CDOS gap): both vanish exactly at big_g2 = 1.

    The first is | |p1|^2 ImG11 - |p2|^2 ImG22 | (the emitters must have the
    same emissive power); the second is ImG11 ImG22 - ImG12^2 (the cross
    density of states must saturate its bound).
    """
    i11, i22, i12 = _im_green_pair(fact, em)
    return (float(abs(abs(em.p1) ** 2 * i11 - abs(em.p2) ** 2 * i22)),
            float(i11 * i22 - i12 * i12))


def classify_emission(fact: SystemFactorization, em: EmitterPair,
                      tol_super: float = 0.05, tol_sub: float = 0.05) -> Classification:
    """Label a configuration by its channel-integrated correlation factor."""
    value = big_g2(fact, em)
    return _classify_value(value, tol_super, tol_sub)


def _classify_value(value: float, tol_super: float, tol_sub: float) -> Classification:
    if 1.0 - value <= tol_super:
        return Classification.SUPERRADIANT
    if value <= tol_sub:
        return Classification.SUBRADIANT
    return Classification.INTERMEDIATE


def coherence_report(fact: SystemFactorization, em: EmitterPair,
                     da: Detector, db: Detector,
                     tol_super: float = 0.05, tol_sub: float = 0.05) -> CoherenceReport:
    """Full observable bundle for one emitter/detector configuration."""
    g2 = g2_detectors(fact, em, da, db)
    amp, phase, sub = condition_residuals(fact, em, da, db)
    c_ge, c_eg = projected_state(fact, em, da)
    gg = big_g2(fact, em)
    power_gap, cdos_gap = superradiance_diagnostics(fact, em)
    return CoherenceReport(
        g2=g2,
        amplitude_residual=amp,
        phase_residual=phase,
        subradiance_residual=sub,
        projected_amplitudes=(c_ge, c_eg),
        classification=_classify_value(gg, tol_super, tol_sub),
        big_g2=gg,
        emissive_power_gap=power_gap,
        cdos_gap=cdos_gap,
    )


# ---------------------------------------------------------------------------
# far-field quadrature oracle
# ---------------------------------------------------------------------------

def farfield_power_check(fact: SystemFactorization, em: EmitterPair,
                         order: int, radius: float, n_angles: int) -> float:
    """Integrated detection probability from brute-force far-field quadrature.

    Trapezoidal (periodic, hence spectrally accurate) integration of the
    squared field amplitudes over a circle of the given radius centered on
    the origin, summing the two in-plane polarizations (radial/tangential)
    per angle in TE.  ``order`` selects the single- (1) or double- (2)
    detection probability; the result should match ``p1_integrated`` /
    ``p2_integrated`` up to finite-radius corrections of order 1/(k*radius).
    """
    if order not in (1, 2):
        raise DomainError(f"order must be 1 or 2, got {order!r}")
    med = fact.medium
    k = med.k
    if radius * k < 1.0e3:
        raise FarFieldValidityError(
            f"far-field quadrature needs k*radius >= 1e3, got {radius * k:.3g}")
    interior = [np.asarray(em.r1, float), np.asarray(em.r2, float)]
    if med.n:
        interior.append(med.positions)
    rmax = max(float(np.max(np.hypot(p[..., 0], p[..., 1]))) for p in interior)
    if rmax > 0.5 * radius:
        raise FarFieldValidityError(
            "all scatterers and emitters must lie within radius/2 of the origin")

    theta = 2.0 * np.pi * np.arange(n_angles) / n_angles
    ring = radius * np.stack([np.cos(theta), np.sin(theta)], axis=1)
    w = 2.0 * np.pi * radius / n_angles

    te = med.mode is PolMode.TE_TENSOR
    v = greens_vector(fact, ring, em.positions, em.orientations if te else None)
    if te:
        e_rad = np.stack([np.cos(theta), np.sin(theta)], axis=1)
        e_tan = np.stack([-np.sin(theta), np.cos(theta)], axis=1)
        # channel layout: (angle, polarization) flattened, same angle weight
        s1 = np.concatenate([np.einsum("oa,oa->o", e_rad, v[:, :, 0]),
                             np.einsum("oa,oa->o", e_tan, v[:, :, 0])])
        s2 = np.concatenate([np.einsum("oa,oa->o", e_rad, v[:, :, 1]),
                             np.einsum("oa,oa->o", e_tan, v[:, :, 1])])
    else:
        s1 = v[:, 0]
        s2 = v[:, 1]

    if order == 1:
        total = (abs(em.p1) ** 2 * np.sum(np.abs(s1) ** 2)
                 + abs(em.p2) ** 2 * np.sum(np.abs(s2) ** 2))
        return float(0.5 * w * total)

    pair = s1[:, np.newaxis] * s2[np.newaxis, :] + s2[:, np.newaxis] * s1[np.newaxis, :]
    total = np.sum(np.abs(pair) ** 2)
    return float(0.25 * (w * w) * abs(em.p1 * em.p2) ** 2 * total)
