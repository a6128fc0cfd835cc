"""Exact collision rules for all model families.

Two layers live here.  The array layer (:func:`monatomic_rule`,
:func:`bl_poly_poly`, :func:`resonant_rule`, :func:`discrete_rule`, ...) works
on numpy arrays with leading batch dimensions and is what the Monte Carlo
estimators and the relaxation simulator call.  The object layer
(:func:`collide_borgnakke_larsen` and friends) wraps single collisions in
:class:`ParticleState` / :class:`CollisionOutcome` records and validates its
inputs.

Conventions: the pre-collision pair is (v, I) and (v_*, I_*); V = v - v_* is
the relative velocity; E is the conserved pair energy in the center-of-mass
frame, (mu/2)|V|^2 plus whatever internal energy the two particles carry.
Exchange collisions split E via the kinetic fraction R and the internal split
r; resonant collisions conserve kinetic and internal energy separately;
discrete transitions are admissible only when the relative speed can absorb
the level jump.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .model import (
    ContinuousEnergy,
    DiscreteLevels,
    MixtureSpec,
    Monatomic,
)

__all__ = [
    "ParticleState",
    "MonatomicParams",
    "BorgnakkeLarsenParams",
    "PolyMonoParams",
    "ResonantParams",
    "DiscreteParams",
    "CollisionParams",
    "CollisionOutcome",
    "InverseParams",
    "DefectReport",
    "unit_vector",
    "com_energy",
    "total_energy",
    "monatomic_rule",
    "bl_poly_poly",
    "bl_poly_mono",
    "resonant_rule",
    "discrete_rule",
    "collide_monatomic",
    "collide_borgnakke_larsen",
    "collide_resonant",
    "collide_discrete",
    "inverse_parameters",
    "invariant_defect",
    "jacobian_bl",
]

_SIGMA_TOL = 1e-12


def unit_vector(sigma, tol: float = _SIGMA_TOL) -> np.ndarray:
    """Check that sigma is unit length within ``tol`` and renormalize it."""
    sigma = np.asarray(sigma, dtype=float)
    norm = np.sqrt(np.sum(sigma**2, axis=-1))
    if np.any(np.abs(norm - 1.0) > tol):
        raise ValueError("sigma must be a unit vector (|sigma| - 1 beyond tolerance)")
    return sigma / norm[..., None]


# ---------------------------------------------------------------------------
# array layer
# ---------------------------------------------------------------------------


def _dot(a, b):
    return np.sum(a * b, axis=-1)


def com_energy(mu, v, v_star, internal=0.0, internal_star=0.0):
    """Conserved pair energy (mu/2)|v - v_*|^2 + internal + internal_star."""
    v = np.asarray(v, dtype=float)
    v_star = np.asarray(v_star, dtype=float)
    V = v - v_star
    return 0.5 * np.asarray(mu) * _dot(V, V) + np.asarray(internal) + np.asarray(
        internal_star
    )


def _mass_center(v, v_star, m, m_star):
    return (m * v + m_star * v_star) / (m + m_star)


def _post_velocities(center, gprime, sigma, m, m_star):
    """Scattered pair with relative speed gprime along sigma, momentum kept."""
    tot = m + m_star
    gs = np.asarray(gprime)[..., None] * sigma
    return center + (m_star / tot) * gs, center - (m / tot) * gs


def monatomic_rule(v, v_star, sigma, m: float = 1.0, m_star: float | None = None):
    """Elastic scattering: relative speed preserved, direction rotated to sigma."""
    v = np.asarray(v, dtype=float)
    v_star = np.asarray(v_star, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    if m_star is None:
        m_star = m
    g = np.sqrt(_dot(v - v_star, v - v_star))
    center = _mass_center(v, v_star, m, m_star)
    return _post_velocities(center, g, sigma, m, m_star)


def bl_poly_poly(v, v_star, I, I_star, r, R, sigma, m: float, m_star: float | None = None):
    """Exchange collision between two continuous-energy particles.

    Returns (v', v'_*, I', I'_*, E).  The kinetic fraction R and internal
    split r must lie in [0, 1]; E = (mu/2)|V|^2 + I + I_*; post energies are
    (mu/2)|V'|^2 = R E, I' = r(1-R)E, I'_* = (1-r)(1-R)E.
    """
    v = np.asarray(v, dtype=float)
    v_star = np.asarray(v_star, dtype=float)
    if m_star is None:
        m_star = m
    mu = m * m_star / (m + m_star)
    I = np.asarray(I, dtype=float)
    I_star = np.asarray(I_star, dtype=float)
    r = np.asarray(r, dtype=float)
    R = np.asarray(R, dtype=float)
    E = com_energy(mu, v, v_star, I, I_star)
    center = _mass_center(v, v_star, m, m_star)
    gprime = np.sqrt(2.0 * R * E / mu)
    vp, vsp = _post_velocities(center, gprime, np.asarray(sigma, dtype=float), m, m_star)
    Ip = r * (1.0 - R) * E
    Isp = (1.0 - r) * (1.0 - R) * E
    return vp, vsp, Ip, Isp, E


def bl_poly_mono(v, v_star, I, R, sigma, m: float, m_star: float, poly_first: bool = True):
    """Exchange collision where only one particle carries internal energy.

    ``poly_first`` says whether the internal energy I travels with the first
    particle.  Returns (v', v'_*, I_post, E) with I_post = (1 - R)E attached
    to whichever particle is polyatomic.
    """
    v = np.asarray(v, dtype=float)
    v_star = np.asarray(v_star, dtype=float)
    mu = m * m_star / (m + m_star)
    R = np.asarray(R, dtype=float)
    E = com_energy(mu, v, v_star, np.asarray(I, dtype=float))
    center = _mass_center(v, v_star, m, m_star)
    gprime = np.sqrt(2.0 * R * E / mu)
    vp, vsp = _post_velocities(center, gprime, np.asarray(sigma, dtype=float), m, m_star)
    del poly_first  # the carrier does not change the velocity update
    return vp, vsp, (1.0 - R) * E, E


def resonant_rule(v, v_star, I, I_star, I_prime, sigma):
    """Resonant collision: velocities scatter elastically, internal energy
    redistributes as (I', I + I_* - I').  Equal masses only."""
    vp, vsp = monatomic_rule(v, v_star, sigma)
    I_prime = np.asarray(I_prime, dtype=float)
    Isp = np.asarray(I, dtype=float) + np.asarray(I_star, dtype=float) - I_prime
    return vp, vsp, I_prime, Isp


def discrete_rule(v, v_star, delta_I, sigma, m: float, m_star: float | None = None):
    """Level-jump collision.  Returns (v', v'_*, admissible).

    The transition absorbs delta_I (post minus pre level energies) from the
    relative motion; it is admissible iff |V|^2 >= 2*delta_I/mu.  For
    inadmissible entries the pre velocities are returned unchanged with
    admissible = False.
    """
    v = np.asarray(v, dtype=float)
    v_star = np.asarray(v_star, dtype=float)
    if m_star is None:
        m_star = m
    mu = m * m_star / (m + m_star)
    delta_I = np.asarray(delta_I, dtype=float)
    V = v - v_star
    g2_post = _dot(V, V) - 2.0 * delta_I / mu
    ok = g2_post >= 0.0
    gprime = np.sqrt(np.where(ok, g2_post, 0.0))
    center = _mass_center(v, v_star, m, m_star)
    vp, vsp = _post_velocities(center, gprime, np.asarray(sigma, dtype=float), m, m_star)
    okb = np.broadcast_to(ok[..., None], vp.shape)
    return np.where(okb, vp, v), np.where(okb, vsp, v_star), ok


def jacobian_bl(r, R):
    """Volume distortion 8/((1-r)(1-R)) of the exchange-collision map.

    Defined for r, R in [0, 1); raises at the upper boundary.
    """
    r = np.asarray(r, dtype=float)
    R = np.asarray(R, dtype=float)
    if np.any((r < 0) | (r >= 1) | (R < 0) | (R >= 1)):
        raise ValueError("jacobian_bl requires r, R in [0, 1)")
    out = 8.0 / ((1.0 - r) * (1.0 - R))
    return out if out.ndim else float(out)


# ---------------------------------------------------------------------------
# object layer
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ParticleState:
    """One particle: velocity plus whatever internal state its species has.

    ``I`` is set for continuous-energy species, ``level`` for discrete ones,
    neither for monatomic species.  ``species`` indexes into the
    MixtureSpec's species tuple.
    """

    v: np.ndarray
    species: int = 0
    I: float | None = None
    level: int | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "v", np.asarray(self.v, dtype=float))
        if self.v.shape != (3,):
            raise ValueError("particle velocity must be a 3-vector")
        if self.I is not None and self.I < 0:
            raise ValueError("internal energy must be nonnegative")


@dataclass(frozen=True)
class MonatomicParams:
    sigma: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "sigma", unit_vector(self.sigma))


@dataclass(frozen=True)
class BorgnakkeLarsenParams:
    """Exchange parameters: internal split r, kinetic fraction R, direction sigma."""

    r: float
    R: float
    sigma: np.ndarray

    def __post_init__(self) -> None:
        if not (0.0 <= self.r <= 1.0 and 0.0 <= self.R <= 1.0):
            raise ValueError("r and R must lie in [0, 1]")
        object.__setattr__(self, "sigma", unit_vector(self.sigma))


@dataclass(frozen=True)
class PolyMonoParams:
    """Exchange parameters when only one particle has internal structure."""

    R: float
    sigma: np.ndarray

    def __post_init__(self) -> None:
        if not 0.0 <= self.R <= 1.0:
            raise ValueError("R must lie in [0, 1]")
        object.__setattr__(self, "sigma", unit_vector(self.sigma))


@dataclass(frozen=True)
class ResonantParams:
    I_prime: float
    sigma: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "sigma", unit_vector(self.sigma))


@dataclass(frozen=True)
class DiscreteParams:
    k_prime: int
    l_prime: int
    sigma: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "sigma", unit_vector(self.sigma))


CollisionParams = Union[
    MonatomicParams, BorgnakkeLarsenParams, PolyMonoParams, ResonantParams, DiscreteParams
]


@dataclass(frozen=True)
class CollisionOutcome:
    post: tuple[ParticleState, ParticleState]
    admissible: bool
    E: float
    jacobian: float | None = None


def _internal_of(spec: MixtureSpec, s: ParticleState) -> float:
    kind = spec.species[s.species].energy
    if isinstance(kind, Monatomic):
        return 0.0
    if isinstance(kind, ContinuousEnergy):
        if s.I is None:
            raise ValueError("continuous-energy particle is missing I")
        return float(s.I)
    if isinstance(kind, DiscreteLevels):
        if s.level is None:
            raise ValueError("discrete-level particle is missing its level")
        return kind.energies[s.level]
    raise TypeError(f"unknown energy model {type(kind).__name__}")


def total_energy(spec: MixtureSpec, s1: ParticleState, s2: ParticleState) -> float:
    """Conserved pair energy in the center-of-mass frame."""
    mu = spec.reduced_mass(s1.species, s2.species)
    return float(
        com_energy(mu, s1.v, s2.v, _internal_of(spec, s1), _internal_of(spec, s2))
    )


def collide_monatomic(v, v_star, sigma) -> tuple[np.ndarray, np.ndarray]:
    """Single-species elastic scattering; sigma is validated and renormalized."""
    return monatomic_rule(v, v_star, unit_vector(sigma))


def collide_borgnakke_larsen(
    spec: MixtureSpec,
    s1: ParticleState,
    s2: ParticleState,
    params: CollisionParams,
) -> CollisionOutcome:
    """Exchange collision dispatched on which of the two particles is polyatomic.

    Both polyatomic -> BorgnakkeLarsenParams; exactly one -> PolyMonoParams;
    neither -> MonatomicParams.  A params variant that does not match the
    pair raises ValueError.  The jacobian field is only filled for the
    equal-mass two-polyatomic case.
    """
    sp1, sp2 = spec.species[s1.species], spec.species[s2.species]
    m1, m2 = sp1.mass, sp2.mass
    poly1, poly2 = sp1.polyatomic, sp2.polyatomic
    if isinstance(sp1.energy, DiscreteLevels) or isinstance(sp2.energy, DiscreteLevels):
        raise ValueError("exchange collisions need continuous or monatomic species")

    if poly1 and poly2:
        if not isinstance(params, BorgnakkeLarsenParams):
            raise ValueError("two polyatomic particles need BorgnakkeLarsenParams")
        vp, vsp, Ip, Isp, E = bl_poly_poly(
            s1.v, s2.v, s1.I, s2.I, params.r, params.R, params.sigma, m1, m2
        )
        jac = jacobian_bl(params.r, params.R) if (m1 == m2 and params.r < 1 and params.R < 1) else None
        post = (
            ParticleState(v=vp, species=s1.species, I=float(Ip)),
            ParticleState(v=vsp, species=s2.species, I=float(Isp)),
        )
        return CollisionOutcome(post=post, admissible=True, E=float(E), jacobian=jac)

    if poly1 != poly2:
        if not isinstance(params, PolyMonoParams):
            raise ValueError("a polyatomic-monatomic pair needs PolyMonoParams")
        I = s1.I if poly1 else s2.I
        vp, vsp, I_post, E = bl_poly_mono(
            s1.v, s2.v, I, params.R, params.sigma, m1, m2, poly_first=poly1
        )
        post = (
            ParticleState(v=vp, species=s1.species, I=float(I_post) if poly1 else None),
            ParticleState(v=vsp, species=s2.species, I=float(I_post) if poly2 else None),
        )
        return CollisionOutcome(post=post, admissible=True, E=float(E))

    if not isinstance(params, MonatomicParams):
        raise ValueError("two monatomic particles need MonatomicParams")
    vp, vsp = monatomic_rule(s1.v, s2.v, params.sigma, m1, m2)
    E = total_energy(spec, s1, s2)
    post = (
        ParticleState(v=vp, species=s1.species),
        ParticleState(v=vsp, species=s2.species),
    )
    return CollisionOutcome(post=post, admissible=True, E=float(E))


def collide_resonant(
    spec: MixtureSpec,
    s1: ParticleState,
    s2: ParticleState,
    params: ResonantParams,
) -> CollisionOutcome:
    """Resonant collision: kinetic and internal energies conserved separately."""
    sp = spec.species[s1.species]
    if s1.species != s2.species or not isinstance(sp.energy, ContinuousEnergy):
        raise ValueError("resonant collisions need a single continuous-energy species")
    if s1.I is None or s2.I is None:
        raise ValueError("resonant collision needs both internal energies")
    Z = s1.I + s2.I
    if not 0.0 <= params.I_prime <= Z:
        raise ValueError("I_prime must lie in [0, I + I_*]")
    vp, vsp, Ip, Isp = resonant_rule(s1.v, s2.v, s1.I, s2.I, params.I_prime, params.sigma)
    E = total_energy(spec, s1, s2)
    post = (
        ParticleState(v=vp, species=s1.species, I=float(Ip)),
        ParticleState(v=vsp, species=s2.species, I=float(Isp)),
    )
    return CollisionOutcome(post=post, admissible=True, E=float(E))


def collide_discrete(
    spec: MixtureSpec,
    s1: ParticleState,
    s2: ParticleState,
    params: DiscreteParams,
) -> CollisionOutcome:
    """Level transition (k, l) -> (k', l'); inadmissible jumps are flagged,
    not raised, and leave the pair unchanged."""
    e1, e2 = spec.species[s1.species].energy, spec.species[s2.species].energy
    if not (isinstance(e1, DiscreteLevels) and isinstance(e2, DiscreteLevels)):
        raise ValueError("discrete collisions need discrete-level species")
    if s1.level is None or s2.level is None:
        raise ValueError("discrete collision needs both levels")
    m1, m2 = spec.species[s1.species].mass, spec.species[s2.species].mass
    delta_I = (
        e1.energies[params.k_prime]
        + e2.energies[params.l_prime]
        - e1.energies[s1.level]
        - e2.energies[s2.level]
    )
    vp, vsp, ok = discrete_rule(s1.v, s2.v, delta_I, params.sigma, m1, m2)
    E = total_energy(spec, s1, s2)
    if not ok:
        return CollisionOutcome(post=(s1, s2), admissible=False, E=float(E))
    post = (
        ParticleState(v=vp, species=s1.species, level=params.k_prime),
        ParticleState(v=vsp, species=s2.species, level=params.l_prime),
    )
    return CollisionOutcome(post=post, admissible=True, E=float(E))


# ---------------------------------------------------------------------------
# inversion and bookkeeping
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class InverseParams:
    """Reverse-collision parameters; fields are None where degenerate.

    ``degenerate`` lists which quantities could not be defined (zero relative
    speed leaves sigma undefined, zero internal energy leaves r undefined,
    zero pair energy leaves R undefined).
    """

    r: float | None
    R: float | None
    sigma: np.ndarray | None
    degenerate: tuple[str, ...] = ()


@dataclass(frozen=True)
class DefectReport:
    """Post-minus-pre invariant defects for one collision."""

    momentum: np.ndarray
    energy: float
    kinetic: float
    internal: float


def invariant_defect(
    spec: MixtureSpec, pre: tuple[ParticleState, ParticleState],
    post: tuple[ParticleState, ParticleState],
) -> DefectReport:
    """Momentum / energy defects of a collision, with the kinetic-internal
    split reported separately (the resonant family conserves both)."""
    (a, b), (c, d) = pre, post
    ma, mb = spec.species[a.species].mass, spec.species[b.species].mass
    mom = ma * c.v + mb * d.v - (ma * a.v + mb * b.v)
    kin_pre = 0.5 * ma * float(_dot(a.v, a.v)) + 0.5 * mb * float(_dot(b.v, b.v))
    kin_post = 0.5 * ma * float(_dot(c.v, c.v)) + 0.5 * mb * float(_dot(d.v, d.v))
    int_pre = _internal_of(spec, a) + _internal_of(spec, b)
    int_post = _internal_of(spec, c) + _internal_of(spec, d)
    return DefectReport(
        momentum=mom,
        energy=(kin_post + int_post) - (kin_pre + int_pre),
        kinetic=kin_post - kin_pre,
        internal=int_post - int_pre,
    )


def inverse_parameters(
    spec: MixtureSpec,
    pre: tuple[ParticleState, ParticleState],
    post: tuple[ParticleState, ParticleState],
    shell_tol: float = 1e-10,
) -> InverseParams:
    """Parameters (r', R', sigma') of the collision taking ``post`` back to ``pre``.

    Computed from the pre pair: R' is its kinetic energy fraction
    (mu/2)|V|^2 / E, r' its internal split I/(I + I_*), sigma' its relative
    direction V/|V|.  Both pairs must sit on the same conservation shell
    within ``shell_tol`` (relative), else ValueError.  Degenerate
    configurations come back flagged instead of inventing values.
    """
    d = invariant_defect(spec, pre, post)
    a, b = pre
    scale = max(
        abs(total_energy(spec, a, b)),
        float(np.max(np.abs(spec.species[a.species].mass * a.v))),
        1e-300,
    )
    if abs(d.energy) > shell_tol * scale or np.any(np.abs(d.momentum) > shell_tol * scale):
        raise ValueError("pre and post pairs are not on the same conservation shell")

    mu = spec.reduced_mass(a.species, b.species)
    V = a.v - b.v
    g2 = float(_dot(V, V))
    E = total_energy(spec, a, b)
    degenerate: list[str] = []

    if E > 0.0:
        R = 0.5 * mu * g2 / E
    else:
        R = None
        degenerate.append("R: zero pair energy")

    Ia = a.I if spec.species[a.species].polyatomic else None
    Ib = b.I if spec.species[b.species].polyatomic else None
    if Ia is not None and Ib is not None:
        Z = Ia + Ib
        if Z > 0.0:
            r = Ia / Z
        else:
            r = None
            degenerate.append("r: zero internal energy")
    else:
        r = None
        if Ia is None and Ib is None:
            degenerate.append("r: no internal degrees of freedom")
        else:
            degenerate.append("r: single-sided internal energy")

    if g2 > 0.0:
        sigma = V / np.sqrt(g2)
    else:
        sigma = None
        degenerate.append("sigma: zero relative velocity")

    return InverseParams(r=r, R=R, sigma=sigma, degenerate=tuple(degenerate))
