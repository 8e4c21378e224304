"""Numerical toolkit for composition operators with quasiconformal symbols on the Bergman space."""

__version__ = "0.1.0"

from .distortion import agm, complete_elliptic_k, grotzsch_mu, psi, psi_inverse  # noqa: E402
from .qcmap import (  # noqa: E402
    AngularShear,
    Composition,
    Identity,
    QcMap,
    RadialStretch,
    Rotation,
    Spiral,
    builtin_zoo,
    map_from_spec,
)
from .quadrature import DiskQuadrature, build_quadrature  # noqa: E402

__all__ = [
    "agm", "complete_elliptic_k", "grotzsch_mu", "psi", "psi_inverse",
    "QcMap", "Identity", "Rotation", "Spiral", "RadialStretch", "AngularShear", "Composition",
    "builtin_zoo", "map_from_spec", "DiskQuadrature", "build_quadrature",
]
