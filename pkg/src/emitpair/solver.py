"""Coupled-dipole (Foldy-Lax) solution for the Green function of a structured medium.

The exciting field at each scatterer solves a dense linear system with unit
diagonal blocks and off-diagonal blocks -alpha_m * G0(r_j, r_m).  The system
matrix depends only on the scatterer configuration, so it is LU-factorized
once (row-pivoted elimination) and reused for every source/observation pair;
each additional solve costs O(N^2) per right-hand side.

The total Green function is then

    G(r, r') = G0(r, r') + sum_j G0(r, r_j) alpha_j x_j,
    with (M x)_j = G0(r_j, r'),

and for coincident arguments only the (finite) imaginary part is exposed:
Im G(r, r) = Im G0_coincident + Im[self-scattering correction].

A SystemFactorization is immutable after assembly; concurrent read-only
solves are safe.  All reductions have a fixed summation order, so results do
not depend on how callers partition work (the scan module relies on this for
bit-identical rasters at any worker count).
"""

from __future__ import annotations

import hashlib
import json
import threading
import warnings

import numpy as np
from scipy.linalg import get_lapack_funcs, lu_factor, lu_solve

from .em2d import PolMode, GreenValue, green0_im_coincident, _g0_scalar, _g0_tensor
from .errors import CoincidentPointsError, DomainError, GeometryError, SingularSystemError

__all__ = [
    "Medium2D",
    "SystemFactorization",
    "assemble",
    "total_green",
    "im_green_projected",
    "COND_WARN_THRESHOLD",
]

TWO_PI = 2.0 * np.pi
COND_WARN_THRESHOLD = 1.0e12

# scipy's bundled BLAS is not safe against concurrent entry from Python
# threads (numpy's is); every scipy-LAPACK call in this package goes through
# this lock so that factorizations can be shared across worker threads.
_SCIPY_LAPACK_LOCK = threading.Lock()


class Medium2D:
    """A 2D arrangement of point scatterers at wavenumber k.

    Positions are stored in the package's internal units (dimensionless k*r
    with k = 1 for media built by this package); ``positions_lambda`` keeps
    the exact wavelength-unit coordinates so that files round-trip bit-for-bit.
    """

    def __init__(self, k, mode, positions, polarizabilities, metadata=None,
                 positions_lambda=None):
        if not k > 0.0:
            raise DomainError(f"k must be > 0, got {k!r}")
        positions = np.array(positions, dtype=float).reshape(-1, 2)
        pols = tuple(polarizabilities)
        if len(pols) != positions.shape[0]:
            raise GeometryError(
                f"{positions.shape[0]} positions but {len(pols)} polarizabilities")
        if positions_lambda is None:
            positions_lambda = positions / TWO_PI
        else:
            positions_lambda = np.array(positions_lambda, dtype=float).reshape(-1, 2)
            if positions_lambda.shape != positions.shape:
                raise GeometryError("positions_lambda shape mismatch")
        self.k = float(k)
        self.mode = mode
        self.positions = positions
        self.positions_lambda = positions_lambda
        self.polarizabilities = pols
        self.alphas = np.array([p.alpha for p in pols], dtype=complex)
        self.alpha_bares = np.array([p.alpha_bare for p in pols], dtype=float)
        self.metadata = dict(metadata or {})
        for arr in (self.positions, self.positions_lambda, self.alphas, self.alpha_bares):
            arr.setflags(write=False)

    @classmethod
    def from_lambda(cls, mode, positions_lambda, polarizabilities, metadata=None):
        """Build from wavelength-unit coordinates (internal k = 1)."""
        positions_lambda = np.array(positions_lambda, dtype=float).reshape(-1, 2)
        return cls(1.0, mode, positions_lambda * TWO_PI, polarizabilities,
                   metadata=metadata, positions_lambda=positions_lambda)

    @property
    def n(self) -> int:
        return self.positions.shape[0]

    @property
    def scatterers(self):
        return [(self.positions[i], self.polarizabilities[i]) for i in range(self.n)]

    def validate_lossless(self, tol: float = 1e-12) -> None:
        """Check the optical-theorem identity for every scatterer."""
        for i, pol in enumerate(self.polarizabilities):
            res = pol.optical_theorem_residual(self.mode)
            if abs(res) > tol:
                raise DomainError(
                    f"scatterer {i} violates the optical theorem (residual {res:.3e})")

    def canonical_dict(self) -> dict:
        return {
            "format": "emitpair.medium.v1",
            "k": self.k,
            "mode": self.mode.value,
            "positions_lambda": [[float(x), float(y)] for x, y in self.positions_lambda],
            "alpha_bare": [float(a) for a in self.alpha_bares],
            "alpha": [[float(a.real), float(a.imag)] for a in self.alphas],
        }

    def digest(self) -> str:
        payload = json.dumps(self.canonical_dict(), sort_keys=True,
                             separators=(",", ":")).encode()
        return hashlib.sha256(payload).hexdigest()


class SystemFactorization:
    """Factorized Foldy-Lax interaction matrix; immutable, reusable for any solve."""

    def __init__(self, medium: Medium2D, lu, piv, cond_estimate: float):
        self.medium = medium
        self._lu = lu
        self._piv = piv
        self.cond_estimate = float(cond_estimate)
        if lu is not None:
            self._lu.setflags(write=False)
            self._piv.setflags(write=False)

    @property
    def n(self) -> int:
        return self.medium.n

    @property
    def dim(self) -> int:
        if self.medium.mode is PolMode.TM_SCALAR:
            return self.n
        return 2 * self.n

    def solve(self, b: np.ndarray) -> np.ndarray:
        """Solve M x = b for one or many right-hand-side columns.

        Safe to call from any number of threads; the underlying LAPACK call
        is serialized (see _SCIPY_LAPACK_LOCK).
        """
        if self._lu is None:
            return np.array(b, dtype=complex)
        with _SCIPY_LAPACK_LOCK:
            return lu_solve((self._lu, self._piv), b)


def assemble(medium: Medium2D) -> SystemFactorization:
    """Build and LU-factorize the interaction matrix of a medium.

    Raises GeometryError on duplicate scatterer positions and
    SingularSystemError (carrying the condition estimate) if elimination
    breaks down; a condition estimate above COND_WARN_THRESHOLD only warns,
    since near-resonant media are physically meaningful.
    """
    n = medium.n
    if n == 0:
        return SystemFactorization(medium, None, None, 1.0)

    pos = medium.positions
    dvec = pos[:, np.newaxis, :] - pos[np.newaxis, :, :]
    dist = np.hypot(dvec[..., 0], dvec[..., 1])
    off = ~np.eye(n, dtype=bool)
    if n > 1 and np.any(dist[off] == 0.0):
        raise GeometryError("duplicate scatterer positions")

    k = medium.k
    alphas = medium.alphas
    if medium.mode is PolMode.TM_SCALAR:
        g = _g0_scalar(k, np.where(off, dist, 1.0))
        m = -(alphas[np.newaxis, :] * g)
        np.fill_diagonal(m, 1.0)
    else:
        safe = np.where(off[..., np.newaxis], dvec, np.array([1.0, 0.0]))
        t = _g0_tensor(k, safe)                      # (N, N, 2, 2)
        t = t * alphas[np.newaxis, :, np.newaxis, np.newaxis]
        m4 = -np.transpose(t, (0, 2, 1, 3)).copy()   # (N, 2, N, 2)
        idx = np.arange(n)
        m4[idx, :, idx, :] = 0.0
        m4[idx, 0, idx, 0] = 1.0
        m4[idx, 1, idx, 1] = 1.0
        m = m4.reshape(2 * n, 2 * n)

    if not np.all(np.isfinite(m.view(float))):
        raise SingularSystemError("interaction matrix has non-finite entries",
                                  cond_estimate=float("inf"))
    anorm = np.linalg.norm(m, 1)
    with _SCIPY_LAPACK_LOCK:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")          # exact-singularity warning; gecon decides
            lu, piv = lu_factor(m)
        (gecon,) = get_lapack_funcs(("gecon",), (m,))
        rcond, info = gecon(lu, anorm)
    if info != 0 or not np.isfinite(rcond) or rcond == 0.0:
        raise SingularSystemError(
            "Foldy-Lax interaction matrix is numerically singular",
            cond_estimate=float("inf"))
    cond = 1.0 / float(rcond)
    if cond > COND_WARN_THRESHOLD:
        warnings.warn(
            f"ill-conditioned interaction matrix (cond estimate {cond:.3e})",
            RuntimeWarning, stacklevel=2)
    return SystemFactorization(medium, lu, piv, cond)


# ---------------------------------------------------------------------------
# vectorized building blocks (shared with coherence and scan)
# ---------------------------------------------------------------------------

def _check_unit(u, what: str) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    norms = np.hypot(u[..., 0], u[..., 1])
    if np.any(np.abs(norms - 1.0) > 1e-9):
        raise DomainError(f"{what} must be unit vectors")
    return u


def _distances(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    d = a[:, np.newaxis, :] - b[np.newaxis, :, :]
    return np.hypot(d[..., 0], d[..., 1]), d


def rhs_columns(fact: SystemFactorization, src_pts: np.ndarray,
                src_dirs: np.ndarray | None = None) -> np.ndarray:
    """Right-hand-side columns G0(r_j, src) for a batch of source points.

    TE sources with ``src_dirs`` give one contracted column per source;
    without directions, two basis columns per source (full tensor).
    """
    med = fact.medium
    src_pts = np.asarray(src_pts, dtype=float).reshape(-1, 2)
    dist, dvec = _distances(med.positions, src_pts)
    if np.any(dist == 0.0):
        raise GeometryError("source point coincides with a scatterer")
    if med.mode is PolMode.TM_SCALAR:
        return _g0_scalar(med.k, dist)
    t = _g0_tensor(med.k, dvec)                      # (N, S, 2, 2)
    if src_dirs is None:
        n, s = dist.shape
        return np.transpose(t, (0, 2, 1, 3)).reshape(2 * n, 2 * s)
    u = np.asarray(src_dirs, dtype=float).reshape(-1, 2)
    b = np.einsum("jsab,sb->jas", t, u)
    return b.reshape(2 * dist.shape[0], dist.shape[1])


def obs_rows(fact: SystemFactorization, obs_pts: np.ndarray,
             obs_dirs: np.ndarray | None = None) -> np.ndarray:
    """Observation-side operator rows G0(obs, r_j) * alpha_j.

    Multiplying these rows by solved columns yields the scattered part of
    the total Green function.
    """
    med = fact.medium
    obs_pts = np.asarray(obs_pts, dtype=float).reshape(-1, 2)
    dist, dvec = _distances(obs_pts, med.positions)
    if np.any(dist == 0.0):
        raise GeometryError("observation point coincides with a scatterer")
    if med.mode is PolMode.TM_SCALAR:
        return _g0_scalar(med.k, dist) * med.alphas[np.newaxis, :]
    t = _g0_tensor(med.k, dvec) * med.alphas[np.newaxis, :, np.newaxis, np.newaxis]
    o, n = dist.shape
    if obs_dirs is None:
        return np.transpose(t, (0, 2, 1, 3)).reshape(2 * o, 2 * n)
    e = np.asarray(obs_dirs, dtype=float).reshape(-1, 2)
    w = np.einsum("ojab,oa->ojb", t, e)
    return w.reshape(o, 2 * n)


def _direct_projected(med: Medium2D, obs_pts, obs_dirs, src_pts, src_dirs) -> np.ndarray:
    dist, dvec = _distances(obs_pts, src_pts)
    if np.any(dist == 0.0):
        raise CoincidentPointsError("observation point coincides with a source")
    if med.mode is PolMode.TM_SCALAR:
        return _g0_scalar(med.k, dist)
    t = _g0_tensor(med.k, dvec)
    return np.einsum("osab,oa,sb->os", t, obs_dirs, src_dirs)


def greens_projected(fact: SystemFactorization, obs_pts, obs_dirs,
                     src_pts, src_dirs) -> np.ndarray:
    """e_o . G(r_o, r_s) . u_s for all (observation, source) pairs, shape (O, S)."""
    med = fact.medium
    obs_pts = np.asarray(obs_pts, dtype=float).reshape(-1, 2)
    src_pts = np.asarray(src_pts, dtype=float).reshape(-1, 2)
    if med.mode is PolMode.TE_TENSOR:
        obs_dirs = _check_unit(np.asarray(obs_dirs, float).reshape(-1, 2), "detector polarizations")
        src_dirs = _check_unit(np.asarray(src_dirs, float).reshape(-1, 2), "dipole orientations")
    out = _direct_projected(med, obs_pts, obs_dirs, src_pts, src_dirs)
    if med.n:
        x = fact.solve(rhs_columns(fact, src_pts, src_dirs if med.mode is PolMode.TE_TENSOR else None))
        out = out + obs_rows(fact, obs_pts, obs_dirs if med.mode is PolMode.TE_TENSOR else None) @ x
    return out


def greens_vector(fact: SystemFactorization, obs_pts, src_pts, src_dirs) -> np.ndarray:
    """G(r_o, r_s) . u_s as field vectors: shape (O, 2, S) for TE, (O, S) for TM."""
    med = fact.medium
    obs_pts = np.asarray(obs_pts, dtype=float).reshape(-1, 2)
    src_pts = np.asarray(src_pts, dtype=float).reshape(-1, 2)
    if med.mode is PolMode.TM_SCALAR:
        dist, _ = _distances(obs_pts, src_pts)
        if np.any(dist == 0.0):
            raise CoincidentPointsError("observation point coincides with a source")
        out = _g0_scalar(med.k, dist)
        if med.n:
            x = fact.solve(rhs_columns(fact, src_pts))
            out = out + obs_rows(fact, obs_pts) @ x
        return out
    src_dirs = _check_unit(np.asarray(src_dirs, float).reshape(-1, 2), "dipole orientations")
    dist, dvec = _distances(obs_pts, src_pts)
    if np.any(dist == 0.0):
        raise CoincidentPointsError("observation point coincides with a source")
    t = _g0_tensor(med.k, dvec)
    out = np.einsum("osab,sb->oas", t, src_dirs)
    if med.n:
        x = fact.solve(rhs_columns(fact, src_pts, src_dirs))
        o = obs_pts.shape[0]
        out = out + (obs_rows(fact, obs_pts) @ x).reshape(o, 2, -1)
    return out


def _on_scatterer(med: Medium2D, pt: np.ndarray) -> bool:
    if med.n == 0:
        return False
    return bool(np.any(np.all(med.positions == pt[np.newaxis, :], axis=1)))


def total_green(fact: SystemFactorization, r, rp) -> GreenValue:
    """Total Green function of the structured medium between distinct points."""
    med = fact.medium
    r = np.asarray(r, dtype=float).reshape(2)
    rp = np.asarray(rp, dtype=float).reshape(2)
    if np.array_equal(r, rp):
        raise CoincidentPointsError("total_green requires distinct points")
    for pt in (r, rp):
        if _on_scatterer(med, pt):
            raise GeometryError("evaluation point coincides with a scatterer")
    if med.mode is PolMode.TM_SCALAR:
        val = _g0_scalar(med.k, np.asarray(np.hypot(*(r - rp))))
        if med.n:
            x = fact.solve(rhs_columns(fact, rp[np.newaxis, :]))
            val = val + (obs_rows(fact, r[np.newaxis, :]) @ x)[0, 0]
        return GreenValue(med.mode, complex(val))
    val = _g0_tensor(med.k, (r - rp)[np.newaxis, :])[0]
    if med.n:
        x = fact.solve(rhs_columns(fact, rp[np.newaxis, :]))
        val = val + (obs_rows(fact, r[np.newaxis, :]) @ x).reshape(2, 2)
    return GreenValue(med.mode, val)


def scattering_correction_projected(fact: SystemFactorization, pt, u_obs, u_src) -> complex:
    """u_obs . G_scat(pt, pt) . u_src: the finite self-correction at one point."""
    med = fact.medium
    pt = np.asarray(pt, dtype=float).reshape(1, 2)
    if med.n == 0:
        return 0.0 + 0.0j
    if med.mode is PolMode.TM_SCALAR:
        x = fact.solve(rhs_columns(fact, pt))
        return complex((obs_rows(fact, pt) @ x)[0, 0])
    x = fact.solve(rhs_columns(fact, pt, np.asarray(u_src, float).reshape(1, 2)))
    w = obs_rows(fact, pt, np.asarray(u_obs, float).reshape(1, 2))
    return complex((w @ x)[0, 0])


def im_green_projected(fact: SystemFactorization, r_j, r_k, u_j=None, u_k=None) -> float:
    """u_j . Im G(r_j, r_k) . u_k; finite also at r_j == r_k.

    Proportional to the local density of states for coincident arguments and
    to the cross density of states otherwise.  Orientations are ignored in TM.
    """
    med = fact.medium
    r_j = np.asarray(r_j, dtype=float).reshape(2)
    r_k = np.asarray(r_k, dtype=float).reshape(2)
    te = med.mode is PolMode.TE_TENSOR
    if te:
        u_j = _check_unit(np.asarray(u_j, float).reshape(1, 2), "orientations")[0]
        u_k = _check_unit(np.asarray(u_k, float).reshape(1, 2), "orientations")[0]
    for pt in (r_j, r_k):
        if _on_scatterer(med, pt):
            raise GeometryError("evaluation point coincides with a scatterer")
    if np.array_equal(r_j, r_k):
        imc = green0_im_coincident(med.mode)
        base = imc * float(np.dot(u_j, u_k)) if te else imc
        corr = scattering_correction_projected(fact, r_j, u_j, u_k)
        return float(base + corr.imag)
    if te:
        val = greens_projected(fact, r_j[np.newaxis, :], u_j[np.newaxis, :],
                               r_k[np.newaxis, :], u_k[np.newaxis, :])[0, 0]
    else:
        val = greens_projected(fact, r_j[np.newaxis, :], None,
                               r_k[np.newaxis, :], None)[0, 0]
    return float(val.imag)
