"""Integrability diagnostic for the reduced exchange-kernel norm.

The squared norm of the exchange contribution reduces, after closed-form
integration of the state variables, to a weighted integral over the unit
square of energy-split parameters:

    G(r, R) = Psi(r, R)^2 (1-r)^(d-3-z) r^(d/2-2) R (1-R)^(3d/2-3-z)

with d the internal-energy dimension and z the kernel energy exponent.
The diagnostic computes partial integrals over nested squares
(eps, 1-eps)^2 and pairs the numeric Cauchy test with the analytic
corner-exponent test (every edge exponent > -1); the verdict requires
both tests, and a disagreement raises an inconsistency flag.  The set of
corner exponents includes the mirrored (r <-> 1-r) assignment, which is
the form taken by the companion contribution where the roles of the two
post-collisional internal energies swap.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = ["K2Diagnostic", "k2_integrability_diagnostic"]

DEFAULT_EPSILONS = (1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6)
_GL_POINTS = 16
_PANELS_PER_DECADE = 6


@dataclass(frozen=True)
class K2Diagnostic:
    delta: float
    zeta: float
    epsilons: tuple[float, ...]
    partials: tuple[float, ...]
    cauchy_change: float
    corner_exponents: dict[str, float]
    numeric_integrable: bool
    analytic_integrable: bool
    verdict: str
    inconsistent: bool

    def rows(self) -> list[tuple[float, float]]:
        """(epsilon, partial_integral) pairs for tabular output."""
        return list(zip(self.epsilons, self.partials))


def _check_symmetry(psi: Callable) -> None:
    r = np.array([0.11, 0.29, 0.5, 0.83])
    R = np.array([0.21, 0.47, 0.64, 0.9])
    a = np.asarray(psi(r, R), dtype=float)
    b = np.asarray(psi(1.0 - r, R), dtype=float)
    if not np.allclose(a, b, rtol=1e-9, atol=1e-12):
        raise ValueError("psi must be symmetric under r <-> 1-r")


def _edge_nodes(eps: float):
    """Gauss-Legendre nodes on (eps, 1-eps), panels geometric near both ends."""
    n_panels = max(2, int(np.ceil(_PANELS_PER_DECADE * np.log10(0.5 / eps))))
    edges = eps * (0.5 / eps) ** np.linspace(0.0, 1.0, n_panels + 1)
    x, w = np.polynomial.legendre.leggauss(_GL_POINTS)
    lo, hi = edges[:-1], edges[1:]
    mid = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    left = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    wl = (half[:, None] * w[None, :]).ravel()
    nodes = np.concatenate([left, 1.0 - left])
    weights = np.concatenate([wl, wl])
    return nodes, weights


def _integrand(delta: float, zeta: float, psi: Callable | None):
    er1 = delta - 3.0 - zeta
    er0 = 0.5 * delta - 2.0
    eR1 = 1.5 * delta - 3.0 - zeta

    def g(r, R):
        base = (1.0 - r) ** er1 * r**er0 * R * (1.0 - R) ** eR1
        if psi is not None:
            base = base * np.asarray(psi(r, R), dtype=float) ** 2
        return base

    return g


def _partial_integral(g, eps: float) -> float:
    r, wr = _edge_nodes(eps)
    R, wR = _edge_nodes(eps)
    vals = g(r[:, None], R[None, :])
    return float(wr @ vals @ wR)


def _edge_slope(g, which: str) -> float:
    """Power-law order of the integrand along one edge, fitted numerically."""
    t = 10.0 ** np.arange(-4.0, -7.5, -1.0)
    if which == "r0":
        vals = g(t, np.full_like(t, 0.5))
    elif which == "r1":
        vals = g(1.0 - t, np.full_like(t, 0.5))
    elif which == "R0":
        vals = g(np.full_like(t, 0.5), t)
    else:
        vals = g(np.full_like(t, 0.5), 1.0 - t)
    logs = np.log(np.maximum(vals, 1e-300))
    slope = np.polyfit(np.log(t), logs, 1)[0]
    return float(slope)


def k2_integrability_diagnostic(
    delta: float,
    zeta: float,
    psi: Callable | None = None,
    epsilons: tuple[float, ...] = DEFAULT_EPSILONS,
    cauchy_tol: float = 0.01,
) -> K2Diagnostic:
    """Decide integrability of the reduced kernel-norm integrand.

    Partial integrals are computed over (eps, 1-eps)^2 for each epsilon;
    the verdict is "integrable" only when the last two partials agree
    within ``cauchy_tol`` relative AND all corner exponents exceed -1.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    if zeta <= -1:
        raise ValueError("zeta must exceed -1")
    if psi is not None:
        _check_symmetry(psi)
    epsilons = tuple(sorted(epsilons, reverse=True))
    if len(epsilons) < 2:
        raise ValueError("need at least two epsilon values")

    g = _integrand(delta, zeta, psi)
    partials = tuple(_partial_integral(g, eps) for eps in epsilons)
    ref = max(abs(partials[-1]), 1e-300)
    cauchy_change = abs(partials[-1] - partials[-2]) / ref
    numeric = cauchy_change < cauchy_tol

    if psi is None:
        exps = {
            "r -> 0": 0.5 * delta - 2.0,
            "r -> 1": delta - 3.0 - zeta,
            "R -> 0": 1.0,
            "R -> 1": 1.5 * delta - 3.0 - zeta,
        }
    else:
        exps = {name: _edge_slope(g, key) for name, key in
                [("r -> 0", "r0"), ("r -> 1", "r1"), ("R -> 0", "R0"), ("R -> 1", "R1")]}
    # the companion contribution swaps the two post-collisional internal
    # energies, mirroring the r powers; for symmetric psi this swaps the
    # two r-edge exponents and keeps the R edges
    exps["r -> 0 (mirror)"] = exps["r -> 1"]
    exps["r -> 1 (mirror)"] = exps["r -> 0"]
    analytic = all(e > -1.0 for e in exps.values())

    verdict = "integrable" if (numeric and analytic) else "divergent"
    return K2Diagnostic(
        delta=float(delta),
        zeta=float(zeta),
        epsilons=epsilons,
        partials=partials,
        cauchy_change=float(cauchy_change),
        corner_exponents=exps,
        numeric_integrable=numeric,
        analytic_integrable=analytic,
        verdict=verdict,
        inconsistent=numeric != analytic,
    )
