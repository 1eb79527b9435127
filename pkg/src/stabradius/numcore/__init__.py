"""Dense linear algebra, quadrature and line-search primitives."""

from .eig import eigenvalues, hessenberg, spectral_abscissa
from .expm import expm
from .linalg import (
    L1,
    L2,
    LINF,
    InducedNorm,
    NormSpec,
    as_matrix,
    as_square,
    batch_induced_norm,
    induced_norm_estimate,
    induced_norm_upper,
    induced_pnorm,
    norming_vector,
    resolvent_apply,
    vector_norm,
)
from .quadrature import Quadrature, integrate_decaying, integrate_panels
from .search import LineMax, golden_section_max, maximize_on_line

__all__ = [
    "L1", "L2", "LINF", "InducedNorm", "LineMax", "NormSpec", "Quadrature",
    "as_matrix", "as_square", "batch_induced_norm", "eigenvalues", "expm",
    "golden_section_max", "hessenberg", "induced_norm_estimate", "induced_norm_upper",
    "induced_pnorm", "integrate_decaying", "integrate_panels", "maximize_on_line",
    "norming_vector", "resolvent_apply", "spectral_abscissa", "vector_norm",
]
