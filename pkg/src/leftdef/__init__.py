"""Left-definite Sturm-Liouville problems with measure coefficients.

The equation ``-(f^[1])' + chi f = z rho f`` is posed in the energy space
H^1(a, b); rho may change sign.  Submodules, from the ground up:

``coeffs``     problem data, hypotheses, endpoint classes
``propagate``  initial value problems and Wronskians
``sobolev``    the energy space, point evaluations, inner products
``operator``   self-adjoint realizations and the resolvent kernel
``spectrum``   entire families, Weyl function, eigenvalues and weights
``debranges``  de Branges functions and the spaces B(c)
``inverse``    Liouville maps, asymptotics, peakon reconstruction
``cli``        command line front end
"""

from .coeffs import (
    Atom,
    BoundaryCondition,
    EndpointClass,
    Interval,
    MeasureCoeff,
    Problem,
    Segment,
    classify_endpoint,
    compute_sigma_set,
    validate,
)
from .debranges import embedding_check, kernel_eval, ordering_check, space_dimension
from .errors import LeftDefError
from .inverse import LiouvilleMap, apply_liouville, ch_forward, ch_inverse, verify_liouville
from .operator import green_function, realize
from .problemfile import dump_problem, dumps_problem, load_problem, loads_problem
from .propagate import solve_ivp, wronskian_V, wronskian_W
from .sobolev import delta_a, delta_c, ground_solutions, h1_inner
from .spectrum import SpectralData, eigenvalues, phi_family, theta_family, weyl_m

__version__ = "0.1.0"

__all__ = [
    "Atom",
    "BoundaryCondition",
    "EndpointClass",
    "Interval",
    "LeftDefError",
    "LiouvilleMap",
    "MeasureCoeff",
    "Problem",
    "Segment",
    "SpectralData",
    "apply_liouville",
    "ch_forward",
    "ch_inverse",
    "classify_endpoint",
    "compute_sigma_set",
    "delta_a",
    "delta_c",
    "dump_problem",
    "dumps_problem",
    "eigenvalues",
    "embedding_check",
    "green_function",
    "ground_solutions",
    "h1_inner",
    "kernel_eval",
    "load_problem",
    "loads_problem",
    "ordering_check",
    "phi_family",
    "realize",
    "solve_ivp",
    "space_dimension",
    "theta_family",
    "validate",
    "verify_liouville",
    "weyl_m",
    "wronskian_V",
    "wronskian_W",
]
