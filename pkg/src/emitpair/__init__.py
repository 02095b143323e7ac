"""emitpair: photon coherence of two single-photon emitters in 2D scattering media.

Coupled-dipole (Foldy-Lax) solver for the total Green function of a
collection of lossless point scatterers, plus the pair-detection
observables built on it: the two-detector correlation factor g2, the
post-detection projected emitter state, superradiance/subradiance
condition residuals, the channel-integrated correlation factor, and
raster maps of all of the above.

Internal unit convention: all lengths are dimensionless k*r (k = 1), the
Green prefactor mu0*omega^2 is set to 1, and user-facing lengths (CLI,
configs, file formats) are expressed in wavelengths; one wavelength equals
2*pi internal units.  Absolute powers are therefore reported in these
reduced units; correlation factors are ratios and are unaffected.
"""

from .coherence import (
    Classification,
    CoherenceReport,
    Detector,
    EmitterPair,
    big_g2,
    cdos_bound_residual,
    classify_emission,
    coherence_report,
    condition_residuals,
    farfield_power_check,
    g2_detectors,
    g2_via_projection,
    p1_integrated,
    p2_integrated,
    projected_state,
    superradiance_diagnostics,
)
from .em2d import (
    GreenValue,
    Polarizability,
    PolMode,
    dress_polarizability,
    green0,
    green0_im_coincident,
)
from .errors import (
    CoincidentPointsError,
    ConfigError,
    DegenerateScattererError,
    DomainError,
    EmitpairError,
    FarFieldValidityError,
    GeometryError,
    PackingError,
    SingularSystemError,
    UndefinedCorrelationError,
    UndefinedProjectionError,
    UnsupportedOrderError,
)
from .gridio import export_csv, export_pgm, import_csv
from .scan import (
    MapChannel,
    MapGrid,
    Rect,
    SplitMix64,
    classification_map,
    diffusion_diagnostics,
    dos_maps,
    find_extremal_detectors,
    g2_map,
    generate_medium,
)
from .solver import (
    Medium2D,
    SystemFactorization,
    assemble,
    im_green_projected,
    total_green,
)
from .specfun import CylFnValue, bessel01, hankel01, hankel1

__version__ = "0.1.0"
