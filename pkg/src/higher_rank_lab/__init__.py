"""Numerical toolkit for polytopal balls ``E_t`` in ``SL_d(R)/SO(d)``.

Modules
-------
root_algebra
    Type ``A_{d-1}`` roots, Weyl group and spectral parameters.
chamber_geometry
    The vertex ``X0``, the cone at it, Brion volumes and angle constants.
group_numerics
    Cartan and Iwasawa decompositions, Haar sampling of ``E_t`` and volumes.
spherical_analysis
    Spherical functions, the c-function and the Levi main term.
propagator
    The transform ``h_t``, cone integrals and time averages.
cli
    The ``higher-rank-lab`` command.
"""

from .chamber_geometry import (
    alternating_brion_sum,
    appendix_b_constants,
    brion_volume,
    compute_x0,
    mu_basis,
    shrink_parameters,
    volume_leading_term,
    x0_oracle,
)
from .errors import LabError
from .group_numerics import (
    cartan_decompose,
    cartan_norm,
    i2_integral,
    intersection_ratio,
    iwasawa_h0,
    sample_e_t,
    sample_e_t_batch,
    support_bound_scan,
    volume_e_t,
)
from .propagator import h_t, j_cone, j_cone_quadrature, replacement_check, tau1, time_average
from .root_algebra import ChamberVector, SpectralParameter, build_root_datum
from .spherical_analysis import (
    SphericalQuadrature,
    c_function,
    expansion_error_scan,
    main_term_phi,
    plancherel_density,
    spherical_phi,
)

__version__ = "0.1.0"

__all__ = [
    "ChamberVector", "LabError", "SpectralParameter", "SphericalQuadrature",
    "alternating_brion_sum", "appendix_b_constants", "brion_volume", "build_root_datum",
    "c_function", "cartan_decompose", "cartan_norm", "compute_x0", "expansion_error_scan",
    "h_t", "i2_integral", "intersection_ratio", "iwasawa_h0", "j_cone", "j_cone_quadrature",
    "main_term_phi", "mu_basis", "plancherel_density", "replacement_check", "sample_e_t",
    "sample_e_t_batch", "shrink_parameters", "spherical_phi", "support_bound_scan", "tau1",
    "time_average", "volume_e_t", "volume_leading_term", "x0_oracle",
]
