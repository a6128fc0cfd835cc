"""Monte Carlo and quadrature evaluation of the collision operator.

Submodules:

* ``mc``          sampling configuration and chunked estimate plumbing
* ``transitions`` proposal sampling of collision transitions per model family
* ``estimators``  Q, collision frequency, linearized parts, weak moments
* ``k1matrix``    dense discretization of the multiplicative kernel part
* ``k2diag``      integrability diagnostic for the reduced exchange kernel
"""

from .mc import MCEstimate, QuadratureConfig
from .estimators import (
    DistributionFn,
    collision_frequency,
    entropy_production,
    eval_k,
    eval_q,
    weak_moment,
)
from .k1matrix import GridSpec, K1Matrix, assemble_k1
from .k2diag import K2Diagnostic, k2_integrability_diagnostic

__all__ = [
    "DistributionFn",
    "GridSpec",
    "K1Matrix",
    "K2Diagnostic",
    "MCEstimate",
    "QuadratureConfig",
    "assemble_k1",
    "collision_frequency",
    "entropy_production",
    "eval_k",
    "eval_q",
    "k2_integrability_diagnostic",
    "weak_moment",
]
