"""Equilibrium distributions and detailed-balance machinery.

The product form

    M(v, I) = n * (m / (2 pi k_B T_kin))^(3/2) exp(-m|v-u|^2 / (2 k_B T_kin))
                * g(I; T_int)

covers every family: g is the normalized continuous internal-energy law
I^(delta/2-1) exp(-I/(k_B T_int)) / (Gamma(delta/2) (k_B T_int)^(delta/2)),
the Gibbs law over discrete levels, or 1 for monatomic species.  With
T_kin = T_int this is the single-temperature equilibrium of the exchange and
discrete families; with distinct temperatures it is the resonant-family
equilibrium (and doubles as a handy non-equilibrium state for the other
families).

Detailed balance is checked in log space: the residual M'M'_* Phi - M M_* is
evaluated as exp(log-loss) * expm1(log-gain - log-loss), which keeps the
relative error near machine precision even deep in the tails.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import special
from scipy.optimize import brentq

from .collide import ParticleState
from .model import (
    ContinuousEnergy,
    DiscreteLevels,
    EnergyModel,
    MixtureSpec,
    Monatomic,
    UnitSystem,
    phi_weight,
)

__all__ = [
    "EquilibriumParams",
    "Maxwellian",
    "MomentSummary",
    "maxwellian_eval",
    "partition_function",
    "psi_res",
    "detailed_balance_residual",
    "equilibrium_moments",
    "mean_internal_energy",
    "internal_temperature",
]


@dataclass(frozen=True)
class EquilibriumParams:
    """Densities per species, shared drift velocity, and temperature(s).

    ``T_kin`` and ``T_int`` coincide for a true single-temperature
    equilibrium; they may differ, which is the resonant-family equilibrium
    (velocities and internal energies then equilibrate separately).
    """

    n: tuple[float, ...]
    u: np.ndarray
    T_kin: float
    T_int: float

    def __post_init__(self) -> None:
        n = self.n if isinstance(self.n, tuple) else tuple(np.atleast_1d(self.n))
        object.__setattr__(self, "n", tuple(float(x) for x in n))
        object.__setattr__(self, "u", np.asarray(self.u, dtype=float))
        if self.u.shape != (3,):
            raise ValueError("drift velocity must be a 3-vector")
        if any(x < 0 for x in self.n):
            raise ValueError("densities must be nonnegative")
        if self.T_kin <= 0 or self.T_int <= 0:
            raise ValueError("temperatures must be positive")

    @classmethod
    def single(cls, n, u, T: float) -> "EquilibriumParams":
        return cls(n=n, u=u, T_kin=T, T_int=T)

    @property
    def T(self) -> float:
        if self.T_kin != self.T_int:
            raise ValueError("two-temperature state has no single T")
        return self.T_kin


def partition_function(energy: EnergyModel, T: float, units: UnitSystem = UnitSystem()) -> float:
    """Internal-energy partition function at temperature T.

    Continuous: Gamma(delta/2) (k_B T)^(delta/2); discrete: the weighted
    Gibbs sum; monatomic: 1.
    """
    kT = units.k_B * T
    if isinstance(energy, Monatomic):
        return 1.0
    if isinstance(energy, ContinuousEnergy):
        return float(special.gamma(0.5 * energy.delta) * kT ** (0.5 * energy.delta))
    if isinstance(energy, DiscreteLevels):
        E = np.asarray(energy.energies)
        g = np.asarray(energy.degeneracies)
        return float(np.sum(g * np.exp(-E / kT)))
    raise TypeError(f"unknown energy model {type(energy).__name__}")


def psi_res(Z, delta: float):
    """Self-convolution of the internal-energy weight at total energy Z.

    Equals Z^(delta-1) * Gamma(delta/2)^2 / Gamma(delta); vectorized in Z.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    Z = np.asarray(Z, dtype=float)
    if np.any(Z < 0):
        raise ValueError("total internal energy must be nonnegative")
    c = special.gamma(0.5 * delta) ** 2 / special.gamma(delta)
    out = c * Z ** (delta - 1.0)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class Maxwellian:
    """Evaluable equilibrium distribution over a whole mixture.

    ``density`` and ``log_density`` broadcast over batched inputs;
    ``sample`` draws particle states for one species.  The internal argument
    is a continuous energy, a level index, or None depending on the species.
    """

    spec: MixtureSpec
    params: EquilibriumParams
    units: UnitSystem = field(default_factory=UnitSystem)

    def __post_init__(self) -> None:
        if len(self.params.n) != self.spec.n_species:
            raise ValueError("need one density per species")

    def _kin_log(self, v, species: int):
        m = self.spec.species[species].mass
        kT = self.units.k_B * self.params.T_kin
        dv = np.asarray(v, dtype=float) - self.params.u
        return 1.5 * np.log(m / (2.0 * np.pi * kT)) - 0.5 * m * np.sum(dv * dv, axis=-1) / kT

    def _int_log(self, internal, species: int):
        e = self.spec.species[species].energy
        kT = self.units.k_B * self.params.T_int
        if isinstance(e, Monatomic):
            if internal is not None:
                raise ValueError("monatomic species carries no internal state")
            return 0.0
        if isinstance(e, ContinuousEnergy):
            I = np.asarray(internal, dtype=float)
            d = e.delta
            with np.errstate(divide="ignore"):
                lphi = np.where(
                    0.5 * d - 1.0 == 0.0, 0.0, (0.5 * d - 1.0) * np.log(np.maximum(I, 1e-300))
                )
                if d < 2.0 and np.any(I == 0.0):
                    raise ValueError("I = 0 requires delta >= 2")
            return lphi - I / kT - special.gammaln(0.5 * d) - 0.5 * d * np.log(kT)
        if isinstance(e, DiscreteLevels):
            k = np.asarray(internal)
            E = np.asarray(e.energies)[k]
            g = np.asarray(e.degeneracies)[k]
            q = partition_function(e, self.params.T_int, self.units)
            return np.log(g) - E / kT - np.log(q)
        raise TypeError(f"unknown energy model {type(e).__name__}")

    def log_density(self, v, internal=None, species: int = 0):
        n = self.params.n[species]
        if n == 0.0:
            shape = np.broadcast_shapes(np.shape(v)[:-1] or (1,))
            return np.full(shape, -np.inf)
        return np.log(n) + self._kin_log(v, species) + self._int_log(internal, species)

    def density(self, v, internal=None, species: int = 0):
        if self.params.n[species] == 0.0:
            out = np.zeros(np.shape(v)[:-1])
            return out if out.ndim else float(out)
        out = np.exp(self.log_density(v, internal, species))
        return out if np.ndim(out) else float(out)

    def sample(self, rng: np.random.Generator, n: int, species: int = 0):
        """Draw n states: returns (velocities, internal) where internal is an
        energy array, a level-index array, or None."""
        sp = self.spec.species[species]
        kTk = self.units.k_B * self.params.T_kin
        v = self.params.u + rng.normal(0.0, np.sqrt(kTk / sp.mass), (n, 3))
        e = sp.energy
        if isinstance(e, Monatomic):
            return v, None
        kTi = self.units.k_B * self.params.T_int
        if isinstance(e, ContinuousEnergy):
            return v, rng.gamma(0.5 * e.delta, kTi, n)
        weights = np.asarray(e.degeneracies) * np.exp(-np.asarray(e.energies) / kTi)
        weights = weights / weights.sum()
        return v, rng.choice(len(weights), size=n, p=weights)


def maxwellian_eval(M: Maxwellian, state: ParticleState) -> float:
    """Evaluate a Maxwellian at one particle state."""
    sp = M.spec.species[state.species]
    internal = state.level if isinstance(sp.energy, DiscreteLevels) else state.I
    return float(M.density(state.v, internal, state.species))


# ---------------------------------------------------------------------------
# detailed balance
# ---------------------------------------------------------------------------


def _log_phi_side(energy: EnergyModel, pre_internal, post_internal):
    """One particle's contribution to log Phi (pre over post weight)."""
    if isinstance(energy, Monatomic):
        return 0.0
    if isinstance(energy, ContinuousEnergy):
        c = 0.5 * energy.delta - 1.0
        if c == 0.0:
            return 0.0
        I0 = np.asarray(pre_internal, dtype=float)
        I1 = np.asarray(post_internal, dtype=float)
        return c * (np.log(I0) - np.log(I1))
    if isinstance(energy, DiscreteLevels):
        g = np.asarray(energy.degeneracies)
        return np.log(g[np.asarray(pre_internal)]) - np.log(g[np.asarray(post_internal)])
    raise TypeError(f"unknown energy model {type(energy).__name__}")


def detailed_balance_residual(
    M: Maxwellian,
    pre: Sequence[tuple],
    post: Sequence[tuple],
    species: tuple[int, int] = (0, 0),
    relative: bool = False,
):
    """Detailed-balance residual M'M'_* Phi - M M_* for batched collisions.

    ``pre`` and ``post`` are pairs ((v1, internal1), (v2, internal2)) of
    batched arrays; ``species`` names the two colliding species.  Phi is the
    ratio of pre to post internal-energy weights, the factor that makes the
    strong (pointwise) form of detailed balance hold at equilibrium.  With
    ``relative=True`` the residual is divided by M M_* (computed stably via
    expm1 of the log difference).
    """
    (v1, i1), (v2, i2) = pre
    (w1, j1), (w2, j2) = post
    i, j = species
    log_gain = M.log_density(w1, j1, i) + M.log_density(w2, j2, j)
    log_loss = M.log_density(v1, i1, i) + M.log_density(v2, i2, j)
    log_phi = _log_phi_side(M.spec.species[i].energy, i1, j1) + _log_phi_side(
        M.spec.species[j].energy, i2, j2
    )
    rel = np.expm1(log_gain + log_phi - log_loss)
    return rel if relative else np.exp(log_loss) * rel


# ---------------------------------------------------------------------------
# moments
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MomentSummary:
    n: float
    u: np.ndarray
    T_velocity: float
    mean_internal: float


def mean_internal_energy(energy: EnergyModel, T: float, units: UnitSystem = UnitSystem()) -> float:
    """Equilibrium mean internal energy per particle at temperature T."""
    kT = units.k_B * T
    if isinstance(energy, Monatomic):
        return 0.0
    if isinstance(energy, ContinuousEnergy):
        return 0.5 * energy.delta * kT
    if isinstance(energy, DiscreteLevels):
        E = np.asarray(energy.energies)
        g = np.asarray(energy.degeneracies)
        w = g * np.exp(-E / kT)
        return float(np.sum(w * E) / np.sum(w))
    raise TypeError(f"unknown energy model {type(energy).__name__}")


def internal_temperature(
    energy: EnergyModel, mean_I: float, units: UnitSystem = UnitSystem()
) -> float:
    """Invert the equilibrium mean internal energy for the temperature.

    Closed form for the continuous law; bracketed root solve for discrete
    levels.  Returns inf when mean_I sits at or above the infinite-T limit
    of a discrete spectrum.
    """
    if isinstance(energy, Monatomic):
        raise ValueError("monatomic species has no internal temperature")
    if isinstance(energy, ContinuousEnergy):
        if mean_I <= 0:
            raise ValueError("mean internal energy must be positive")
        return 2.0 * mean_I / (energy.delta * units.k_B)
    if isinstance(energy, DiscreteLevels):
        E = np.asarray(energy.energies)
        g = np.asarray(energy.degeneracies)
        if mean_I <= E[0]:
            raise ValueError("mean internal energy at or below the ground level")
        limit = float(np.sum(g * E) / np.sum(g))
        if mean_I >= limit:
            return np.inf
        scale = E[-1] - E[0]
        f = lambda T: mean_internal_energy(energy, T, units) - mean_I
        lo, hi = 1e-8 * scale / units.k_B, 1e12 * scale / units.k_B
        return float(brentq(f, lo, hi, xtol=1e-14, rtol=1e-14))
    raise TypeError(f"unknown energy model {type(energy).__name__}")


def equilibrium_moments(
    params: EquilibriumParams,
    energy: EnergyModel,
    units: UnitSystem = UnitSystem(),
    species_density: float | None = None,
) -> MomentSummary:
    """Closed-form moments of the product equilibrium for one species."""
    n = params.n[0] if species_density is None else species_density
    return MomentSummary(
        n=n,
        u=params.u.copy(),
        T_velocity=params.T_kin,
        mean_internal=mean_internal_energy(energy, params.T_int, units),
    )
