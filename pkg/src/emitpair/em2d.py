"""Free-space 2D Green functions and lossless point-scatterer polarizability.

Two polarizations are supported:

* TM (scalar): electric field out of plane, G0 = (i/4) H0(k rho).
* TE (tensor): electric field in plane.  Applying (I + grad grad / k^2) to
  the scalar form gives the 2x2 dyadic

      G0 = (i/4) [ (H0 - H1/u) I + (2 H1/u - H0) n x n ],   u = k rho,

  with n the unit vector along rho.  Its eigenvalue along n (longitudinal)
  is (i/4) H1/u and across n (transverse) is (i/4)(H0 - H1/u).

Unit convention: mu0*omega^2 = 1 and distances enter only as k*rho, so a
2D Green value is dimensionless.  The coincidence-limit imaginary parts are
then 1/4 (TM) and 1/8 per diagonal tensor component (TE), independent of k.

Scatterers are "dressed" so that Im(1/alpha) = -Im G0(r, r) exactly, the 2D
optical theorem; media built from such polarizabilities are lossless, which
the channel-integrated detection formulas require.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import CoincidentPointsError, DegenerateScattererError, DomainError
from .specfun import hankel01

__all__ = [
    "PolMode",
    "GreenValue",
    "Polarizability",
    "green0",
    "green0_im_coincident",
    "dress_polarizability",
]


class PolMode(enum.Enum):
    """Polarization mode: out-of-plane scalar (TM) or in-plane tensor (TE)."""

    TM_SCALAR = "TM"
    TE_TENSOR = "TE"

    @classmethod
    def from_tag(cls, tag: str) -> "PolMode":
        for mode in cls:
            if mode.value == tag:
                return mode
        raise DomainError(f"unknown polarization mode {tag!r}; use 'TM' or 'TE'")


@dataclass(frozen=True)
class GreenValue:
    """A Green-function evaluation: complex scalar (TM) or complex 2x2 (TE)."""

    mode: PolMode
    value: complex | np.ndarray


@dataclass(frozen=True)
class Polarizability:
    """Bare strength and the dressed (radiatively corrected) value at omega."""

    alpha_bare: float
    alpha: complex

    def optical_theorem_residual(self, mode: PolMode) -> float:
        """Im(1/alpha) + Im G0_coincident; exactly 0 for a lossless scatterer."""
        return float(np.imag(1.0 / self.alpha) + green0_im_coincident(mode))


def green0_im_coincident(mode: PolMode) -> float:
    """Coincidence limit of Im G0: 1/4 (TM); 1/8 per diagonal component (TE).

    The TE tensor limit is (1/8) I: off-diagonal components vanish by
    isotropy.  Independent of k in 2D.
    """
    if mode is PolMode.TM_SCALAR:
        return 0.25
    return 0.125


def dress_polarizability(alpha_bare: float, mode: PolMode, k: float = 1.0) -> Polarizability:
    """Radiatively dress a bare polarizability so the scatterer is lossless.

    alpha = alpha_bare / (1 - i * ImG0_coincident * alpha_bare), which makes
    Im(1/alpha) = -ImG0_coincident hold as an algebraic identity.  ``k`` is
    accepted for interface symmetry; the 2D coincident Im G0 does not depend
    on it.
    """
    if alpha_bare == 0.0:
        raise DegenerateScattererError("alpha_bare must be nonzero")
    if not k > 0.0:
        raise DomainError(f"k must be > 0, got {k!r}")
    imc = green0_im_coincident(mode)
    alpha = alpha_bare / (1.0 - 1j * imc * alpha_bare)
    return Polarizability(alpha_bare=float(alpha_bare), alpha=complex(alpha))


def green0(mode: PolMode, k: float, r, rp) -> GreenValue:
    """Free-space Green function between two distinct points.

    TM returns a complex scalar; TE a complex 2x2 array.  Raises
    CoincidentPointsError at r == rp (use green0_im_coincident for the
    finite imaginary part there).
    """
    if not k > 0.0:
        raise DomainError(f"k must be > 0, got {k!r}")
    r = np.asarray(r, dtype=float)
    rp = np.asarray(rp, dtype=float)
    d = r - rp
    rho = float(np.hypot(d[0], d[1]))
    if rho == 0.0:
        raise CoincidentPointsError("green0 is singular at coincident points")
    if mode is PolMode.TM_SCALAR:
        return GreenValue(mode, complex(_g0_scalar(k, np.asarray(rho))))
    return GreenValue(mode, _g0_tensor(k, d[np.newaxis, :])[0])


# ---------------------------------------------------------------------------
# vectorized kernels (shared with the solver)
# ---------------------------------------------------------------------------

def _g0_scalar(k: float, rho: np.ndarray) -> np.ndarray:
    """(i/4) H0(k rho) for an array of distances rho > 0."""
    h0, _ = hankel01(k * rho)
    return 0.25j * h0


def _g0_tensor(k: float, dvec: np.ndarray) -> np.ndarray:
    """TE 2x2 tensor for displacement vectors dvec of shape (..., 2)."""
    rho = np.hypot(dvec[..., 0], dvec[..., 1])
    u = k * rho
    h0, h1 = hankel01(u)
    t = h1 / u
    trans = 0.25j * (h0 - t)         # eigenvalue across the separation
    dyad = 0.25j * (2.0 * t - h0)    # coefficient of n x n
    n = dvec / rho[..., np.newaxis]
    out = np.zeros(dvec.shape[:-1] + (2, 2), dtype=complex)
    nn = n[..., :, np.newaxis] * n[..., np.newaxis, :]
    out[..., 0, 0] = trans + dyad * nn[..., 0, 0]
    out[..., 1, 1] = trans + dyad * nn[..., 1, 1]
    out[..., 0, 1] = dyad * nn[..., 0, 1]
    out[..., 1, 0] = out[..., 0, 1]
    return out
