"""Stochastic particle simulation of space-homogeneous relaxation.

Binary collisions are realized with a majorant (no-time-counter) scheme:
candidate pairs are drawn uniformly, accepted with probability equal to the
pair's total transition rate divided by a majorant bound, and accepted pairs
exchange energy through the exact collision rules of :mod:`polykin.collide`.
Exchange parameters are drawn from the Beta laws matching the transition
weights, so accepted collisions follow the kernel's law exactly and the
per-collision conservation defects are at rounding level.

Candidates are processed sequentially: a candidate whose partners were hit
earlier in the same step is re-evaluated against the current particle states
with its original acceptance uniform, so the chain has exact sequential
semantics while the clean majority stays vectorized.

Scope: energy-power kernels (a split weight is allowed only when constant 1);
continuous and discrete internal structure, single species or binary
mixtures.  Resonant collisions are excluded here and exercised through the
Monte Carlo estimators instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy import optimize, special

from .collide import bl_poly_mono, bl_poly_poly, discrete_rule, monatomic_rule
from .equilib import EquilibriumParams, Maxwellian, internal_temperature, mean_internal_energy
from .model import (
    ContinuousEnergy,
    DiscreteLevels,
    MixtureSpec,
    Monatomic,
    PowerLawE,
    PsiWeighted,
    UnitSystem,
)

__all__ = [
    "Ensemble",
    "MajorantViolation",
    "RelaxConfig",
    "TimeSeries",
    "equilibrium_temperature",
    "h_estimate",
    "init_ensemble",
    "nonincreasing_trend",
    "relax_summary",
    "run",
    "step",
]

_MAJORANT_SAFETY = 2.0
_MAJORANT_PROBE_PAIRS = 4096


class MajorantViolation(RuntimeError):
    """Raised when too many sampled rates exceed the majorant bound."""

    def __init__(self, message: str, diagnostics: dict):
        super().__init__(message)
        self.diagnostics = diagnostics


@dataclass
class RelaxConfig:
    """Simulation controls.

    ``b_maj`` overrides the automatic majorant (sampled-rate quantile with a
    safety factor).  ``cadence`` is the number of steps between recorded
    moment rows.  A step aborts when more than ``violation_tol`` of its
    candidates exceed the majorant.
    """

    dt: float = 0.01
    n_particles: int = 10_000
    seed: int = 0
    cadence: int = 10
    b_maj: Optional[float] = None
    violation_tol: float = 1e-3

    def __post_init__(self) -> None:
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.n_particles < 2:
            raise ValueError("need at least two particles")
        if self.cadence < 1:
            raise ValueError("cadence must be at least 1")
        if self.b_maj is not None and self.b_maj <= 0:
            raise ValueError("majorant bound must be positive")
        if not 0.0 <= self.violation_tol <= 1.0:
            raise ValueError("violation_tol must be a fraction")


@dataclass
class Ensemble:
    """Particle arrays plus the simulation clock and counters.

    ``internal`` holds internal energies (zero for monatomic species, the
    level energy for discrete species); ``levels`` holds level indices where
    applicable.  Collisions mutate the arrays in place.
    """

    spec: MixtureSpec
    v: np.ndarray
    internal: np.ndarray
    levels: np.ndarray
    species: np.ndarray
    rng: np.random.Generator
    time: float = 0.0
    collisions: int = 0
    majorant_violations: int = 0
    units: UnitSystem = field(default_factory=UnitSystem)
    _majorants: dict = field(default_factory=dict, repr=False)

    @property
    def n_particles(self) -> int:
        return self.v.shape[0]

    @property
    def masses(self) -> np.ndarray:
        m = np.array([sp.mass for sp in self.spec.species])
        return m[self.species]

    def momentum(self) -> np.ndarray:
        return np.sum(self.masses[:, None] * self.v, axis=0)

    def kinetic_energy(self) -> float:
        return float(0.5 * np.sum(self.masses * np.sum(self.v * self.v, axis=1)))

    def internal_energy(self) -> float:
        return float(np.sum(self.internal))

    def total_energy(self) -> float:
        return self.kinetic_energy() + self.internal_energy()

    def bulk_velocity(self) -> np.ndarray:
        m = self.masses
        return np.sum(m[:, None] * self.v, axis=0) / np.sum(m)

    def kinetic_temperature(self) -> float:
        du = self.v - self.bulk_velocity()
        m = self.masses
        return float(np.sum(m * np.sum(du * du, axis=1)) / (3.0 * self.n_particles * self.units.k_B))

    def internal_temperature(self) -> float:
        """Species-wise inversion of the mean internal energy, combined with
        internal-degree-of-freedom weights; nan without internal structure."""
        temps, weights = [], []
        for s, sp in enumerate(self.spec.species):
            mask = self.species == s
            if not np.any(mask) or isinstance(sp.energy, Monatomic):
                continue
            mean_i = float(np.mean(self.internal[mask]))
            t = internal_temperature(sp.energy, mean_i, self.units)
            w = sp.energy.delta if isinstance(sp.energy, ContinuousEnergy) else 2.0
            temps.append(t)
            weights.append(w * np.count_nonzero(mask))
        if not temps:
            return float("nan")
        return float(np.average(temps, weights=weights))

    def mean_internal(self) -> float:
        return float(np.mean(self.internal))


@dataclass(frozen=True)
class TimeSeries:
    """Sampled relaxation moments; one row per recorded time."""

    t: np.ndarray
    T_kin: np.ndarray
    T_int: np.ndarray
    mean_I: np.ndarray
    H: np.ndarray
    collisions: np.ndarray
    seed: int
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if np.any(np.diff(self.t) <= 0):
            raise ValueError("times must be strictly increasing")

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"# seed={self.seed}\n")
            fh.write("t,T_kin,T_int,mean_I,H,collisions\n")
            for k in range(len(self.t)):
                fh.write(
                    f"{self.t[k]:.17g},{self.T_kin[k]:.17g},"
                    f"{self.T_int[k]:.17g},{self.mean_I[k]:.17g},"
                    f"{self.H[k]:.17g},{int(self.collisions[k])}\n"
                )


def init_ensemble(
    spec: MixtureSpec,
    n: int,
    T_kin0: float,
    T_int0: float,
    u0=None,
    seed: int = 0,
    units: UnitSystem = UnitSystem(),
) -> Ensemble:
    """Factorized two-temperature initial data.

    Velocities are Gaussian about ``u0`` at ``T_kin0``; internal energies
    follow the species' equilibrium law at ``T_int0``.  Particles are split
    evenly across species (remainder to the earlier species).
    """
    if n < 2:
        raise ValueError("need at least two particles")
    if T_kin0 <= 0 or T_int0 <= 0:
        raise ValueError("temperatures must be positive")
    u0 = np.zeros(3) if u0 is None else np.asarray(u0, dtype=float)
    ns = spec.n_species
    counts = [n // ns + (1 if k < n % ns else 0) for k in range(ns)]
    params = EquilibriumParams(n=tuple(1.0 for _ in range(ns)), u=u0,
                               T_kin=T_kin0, T_int=T_int0)
    M = Maxwellian(spec, params, units)
    rng = np.random.Generator(np.random.PCG64(seed))
    v = np.empty((n, 3))
    internal = np.zeros(n)
    levels = np.full(n, -1, dtype=np.int64)
    species = np.empty(n, dtype=np.int64)
    start = 0
    for s, count in enumerate(counts):
        stop = start + count
        vs, extra = M.sample(rng, count, s)
        v[start:stop] = vs
        species[start:stop] = s
        energy = spec.species[s].energy
        if isinstance(energy, ContinuousEnergy):
            internal[start:stop] = extra
        elif isinstance(energy, DiscreteLevels):
            levels[start:stop] = extra
            internal[start:stop] = np.asarray(energy.energies)[extra]
        start = stop
    return Ensemble(spec=spec, v=v, internal=internal, levels=levels,
                    species=species, rng=rng, units=units)


def _kernel_parameters(kernel) -> tuple[float, float]:
    """(C, zeta) for kernels the simulator supports."""
    if isinstance(kernel, PowerLawE):
        return kernel.C, kernel.zeta
    if isinstance(kernel, PsiWeighted) and kernel.psi is None:
        return kernel.C, kernel.zeta
    raise ValueError(
        "the relaxation simulator supports energy-power kernels only"
    )


@dataclass(frozen=True)
class _PairType:
    """Static per-species-pair data for candidate generation."""

    i: int
    j: int
    idx_i: np.ndarray
    idx_j: np.ndarray
    mass_i: float
    mass_j: float
    mu: float
    C: float
    zeta: float
    style: str          # "cont-cont" | "poly-mono" | "mono-poly" | "mono-mono" | "disc-disc"
    c_weight: float     # closed-form integral of the exchange weight and direction
    beta_r: tuple[float, float] | None
    beta_R: tuple[float, float] | None
    n_pairs: float


def _pair_types(ensemble: Ensemble) -> list[_PairType]:
    spec = ensemble.spec
    out = []
    for i in range(spec.n_species):
        for j in range(i, spec.n_species):
            idx_i = np.flatnonzero(ensemble.species == i)
            idx_j = np.flatnonzero(ensemble.species == j)
            if idx_i.size == 0 or idx_j.size == 0:
                continue
            ei, ej = spec.species[i].energy, spec.species[j].energy
            C, zeta = _kernel_parameters(spec.kernel(i, j))
            cont_i = isinstance(ei, ContinuousEnergy)
            cont_j = isinstance(ej, ContinuousEnergy)
            disc_i = isinstance(ei, DiscreteLevels)
            disc_j = isinstance(ej, DiscreteLevels)
            beta_r = beta_R = None
            if cont_i and cont_j:
                style = "cont-cont"
                beta_r = (0.5 * ei.delta, 0.5 * ej.delta)
                beta_R = (1.5, 0.5 * (ei.delta + ej.delta))
                cw = 4.0 * np.pi * special.beta(*beta_r) * special.beta(*beta_R)
            elif cont_i and isinstance(ej, Monatomic):
                style = "poly-mono"
                beta_R = (1.5, 0.5 * ei.delta)
                cw = 4.0 * np.pi * special.beta(*beta_R)
            elif isinstance(ei, Monatomic) and cont_j:
                style = "mono-poly"
                beta_R = (1.5, 0.5 * ej.delta)
                cw = 4.0 * np.pi * special.beta(*beta_R)
            elif isinstance(ei, Monatomic) and isinstance(ej, Monatomic):
                style = "mono-mono"
                cw = 4.0 * np.pi
            elif disc_i and disc_j:
                style = "disc-disc"
                cw = 4.0 * np.pi
            else:
                raise ValueError(
                    f"no collision rule couples species {i} and {j}"
                )
            mi, mj = spec.species[i].mass, spec.species[j].mass
            n_pairs = (
                idx_i.size * (idx_i.size - 1) / 2.0 if i == j
                else float(idx_i.size) * float(idx_j.size)
            )
            if n_pairs <= 0:
                continue
            out.append(_PairType(
                i=i, j=j, idx_i=idx_i, idx_j=idx_j, mass_i=mi, mass_j=mj,
                mu=mi * mj / (mi + mj), C=C, zeta=zeta, style=style,
                c_weight=cw, beta_r=beta_r, beta_R=beta_R, n_pairs=n_pairs,
            ))
    return out


def _rates(ensemble: Ensemble, pt: _PairType, ii: np.ndarray, jj: np.ndarray) -> np.ndarray:
    """Total transition rate for the given particle pairs."""
    dv = ensemble.v[ii] - ensemble.v[jj]
    g2 = np.sum(dv * dv, axis=-1)
    E = 0.5 * pt.mu * g2 + ensemble.internal[ii] + ensemble.internal[jj]
    if pt.style != "disc-disc":
        return pt.C * pt.c_weight * E ** (0.5 * pt.zeta)
    ei = ensemble.spec.species[pt.i].energy
    ej = ensemble.spec.species[pt.j].energy
    li = np.asarray(ei.energies)
    lj = np.asarray(ej.energies)
    gi = np.asarray(ei.degeneracies)
    gj = np.asarray(ej.degeneracies)
    pre = ensemble.internal[ii] + ensemble.internal[jj]
    total = np.zeros(len(ii))
    for kp in range(len(li)):
        for lp in range(len(lj)):
            gp2 = g2 - 2.0 * (li[kp] + lj[lp] - pre) / pt.mu
            total += gi[kp] * gj[lp] * np.sqrt(np.maximum(gp2, 0.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        out = pt.C * pt.c_weight * np.where(E > 0, E ** (0.5 * pt.zeta - 0.5), 0.0) * total
    return out


def _ensure_majorants(ensemble: Ensemble, config: RelaxConfig) -> None:
    """Sampled-rate majorant per pair type, cached on the ensemble."""
    if ensemble._majorants:
        return
    for pt in _pair_types(ensemble):
        key = (pt.i, pt.j)
        if config.b_maj is not None:
            ensemble._majorants[key] = config.b_maj
            continue
        rng = np.random.Generator(
            np.random.PCG64(np.random.SeedSequence([8231, pt.i, pt.j]))
        )
        m = min(_MAJORANT_PROBE_PAIRS, int(pt.n_pairs))
        if pt.i == pt.j:
            a = rng.integers(0, pt.idx_i.size, m)
            k = rng.integers(1, pt.idx_i.size, m)
            ii = pt.idx_i[a]
            jj = pt.idx_i[(a + k) % pt.idx_i.size]
        else:
            ii = pt.idx_i[rng.integers(0, pt.idx_i.size, m)]
            jj = pt.idx_j[rng.integers(0, pt.idx_j.size, m)]
        vals = _rates(ensemble, pt, ii, jj)
        if vals.size == 0:
            top = 0.0
        elif vals.size == 1:
            top = float(vals[0])
        else:
            top = float(np.quantile(vals, 1.0 - 1e-6))
        ensemble._majorants[key] = _MAJORANT_SAFETY * top


def _sphere_from_uniforms(z: float, phi: float) -> np.ndarray:
    s = math.sqrt(max(1.0 - z * z, 0.0))
    return np.array([s * math.cos(phi), s * math.sin(phi), z])


def _apply_continuous(ensemble: Ensemble, pt: _PairType, a: int, b: int,
                      r: float, R: float, sigma: np.ndarray) -> None:
    v1 = ensemble.v[a][None, :]
    v2 = ensemble.v[b][None, :]
    sig = sigma[None, :]
    if pt.style == "cont-cont":
        I1 = ensemble.internal[a:a + 1]
        I2 = ensemble.internal[b:b + 1]
        w1, w2, J1, J2, _ = bl_poly_poly(v1, v2, I1, I2, np.array([r]),
                                         np.array([R]), sig, pt.mass_i, pt.mass_j)
        ensemble.internal[a] = J1[0]
        ensemble.internal[b] = J2[0]
    elif pt.style == "poly-mono":
        w1, w2, J, _ = bl_poly_mono(v1, v2, ensemble.internal[a:a + 1],
                                    np.array([R]), sig, pt.mass_i, pt.mass_j)
        ensemble.internal[a] = J[0]
    elif pt.style == "mono-poly":
        w2, w1, J, _ = bl_poly_mono(v2, v1, ensemble.internal[b:b + 1],
                                    np.array([R]), sig, pt.mass_j, pt.mass_i)
        ensemble.internal[b] = J[0]
    else:
        w1, w2 = monatomic_rule(v1, v2, sig, pt.mass_i, pt.mass_j)
    ensemble.v[a] = w1[0]
    ensemble.v[b] = w2[0]


def _apply_discrete(ensemble: Ensemble, pt: _PairType, a: int, b: int,
                    u_channel: float, sigma: np.ndarray) -> bool:
    ei = ensemble.spec.species[pt.i].energy
    ej = ensemble.spec.species[pt.j].energy
    li = np.asarray(ei.energies)
    lj = np.asarray(ej.energies)
    gi = np.asarray(ei.degeneracies)
    gj = np.asarray(ej.degeneracies)
    dv = ensemble.v[a] - ensemble.v[b]
    g2 = float(np.dot(dv, dv))
    pre = ensemble.internal[a] + ensemble.internal[b]
    gp2 = g2 - 2.0 * (li[:, None] + lj[None, :] - pre) / pt.mu
    w_ch = gi[:, None] * gj[None, :] * np.sqrt(np.maximum(gp2, 0.0))
    total = float(w_ch.sum())
    if total <= 0.0:
        return False
    flat = np.cumsum(w_ch.ravel())
    pick = int(np.searchsorted(flat, u_channel * total, side="right"))
    pick = min(pick, flat.size - 1)
    kp, lp = divmod(pick, lj.size)
    d_i = li[kp] + lj[lp] - pre
    w1, w2, ok = discrete_rule(ensemble.v[a][None, :], ensemble.v[b][None, :],
                               np.array([d_i]), sigma[None, :],
                               pt.mass_i, pt.mass_j)
    if not bool(ok[0]):
        return False
    ensemble.v[a] = w1[0]
    ensemble.v[b] = w2[0]
    ensemble.levels[a] = kp
    ensemble.levels[b] = lp
    ensemble.internal[a] = li[kp]
    ensemble.internal[b] = lj[lp]
    return True


def step(ensemble: Ensemble, config: RelaxConfig) -> Ensemble:
    """Advance the ensemble by one time step of length ``config.dt``."""
    if ensemble.n_particles < 2:
        raise ValueError("need at least two particles to step")
    _ensure_majorants(ensemble, config)
    rng = ensemble.rng
    n_total = ensemble.n_particles
    step_candidates = 0
    step_violations = 0
    for pt in _pair_types(ensemble):
        # rates are re-vectorized per block, so staleness is block-local
        dirty = bytearray(n_total)
        any_dirty = False
        b_maj = ensemble._majorants[(pt.i, pt.j)]
        if b_maj <= 0.0:
            continue
        x = pt.n_pairs * b_maj * config.dt / n_total
        m = int(x)
        if rng.random() < x - m:
            m += 1
        if m == 0:
            continue
        step_candidates += m
        # all candidate randomness drawn up front, in a fixed order
        if pt.i == pt.j:
            a_loc = rng.integers(0, pt.idx_i.size, m)
            k_loc = rng.integers(1, pt.idx_i.size, m)
            ii = pt.idx_i[a_loc]
            jj = pt.idx_i[(a_loc + k_loc) % pt.idx_i.size]
        else:
            ii = pt.idx_i[rng.integers(0, pt.idx_i.size, m)]
            jj = pt.idx_j[rng.integers(0, pt.idx_j.size, m)]
        u_acc = rng.random(m)
        z = rng.uniform(-1.0, 1.0, m)
        phi = rng.uniform(0.0, 2.0 * np.pi, m)
        if pt.style == "cont-cont":
            r_draw = rng.beta(*pt.beta_r, m)
            R_draw = rng.beta(*pt.beta_R, m)
        elif pt.style in ("poly-mono", "mono-poly"):
            r_draw = np.zeros(m)
            R_draw = rng.beta(*pt.beta_R, m)
        elif pt.style == "disc-disc":
            r_draw = rng.random(m)       # channel selector
            R_draw = np.zeros(m)
        else:
            r_draw = np.zeros(m)
            R_draw = np.zeros(m)

        rates = _rates(ensemble, pt, ii, jj)
        acc_pre = u_acc * b_maj < rates
        viol_pre = rates > b_maj

        ii_l = ii.tolist()
        jj_l = jj.tolist()
        acc_l = acc_pre.tolist()
        viol_l = viol_pre.tolist()
        u_l = u_acc.tolist()
        z_l = z.tolist()
        phi_l = phi.tolist()
        r_l = r_draw.tolist()
        R_l = R_draw.tolist()

        for k in range(m):
            a, b = ii_l[k], jj_l[k]
            if any_dirty and (dirty[a] or dirty[b]):
                rate = float(_rates(ensemble, pt, np.array([a]), np.array([b]))[0])
                accept = u_l[k] * b_maj < rate
                if rate > b_maj:
                    step_violations += 1
            else:
                accept = acc_l[k]
                if viol_l[k]:
                    step_violations += 1
            if not accept:
                continue
            sigma = _sphere_from_uniforms(z_l[k], phi_l[k])
            if pt.style == "disc-disc":
                collided = _apply_discrete(ensemble, pt, a, b, r_l[k], sigma)
            else:
                _apply_continuous(ensemble, pt, a, b, r_l[k], R_l[k], sigma)
                collided = True
            if collided:
                ensemble.collisions += 1
                dirty[a] = 1
                dirty[b] = 1
                any_dirty = True

    ensemble.majorant_violations += step_violations
    if step_candidates and step_violations / step_candidates > config.violation_tol:
        raise MajorantViolation(
            "sampled rates exceeded the majorant too often",
            diagnostics={
                "step_candidates": step_candidates,
                "step_violations": step_violations,
                "violation_fraction": step_violations / step_candidates,
                "majorants": {f"{i}-{j}": v
                              for (i, j), v in ensemble._majorants.items()},
                "time": ensemble.time,
            },
        )
    ensemble.time += config.dt
    return ensemble


def _scott_bins(x: np.ndarray, cap: int) -> int:
    sd = float(np.std(x))
    if sd == 0.0:
        return 1
    width = 3.5 * sd / len(x) ** (1.0 / 3.0)
    span = float(np.max(x) - np.min(x))
    if width <= 0 or span <= 0:
        return 1
    return max(1, min(cap, int(np.ceil(span / width))))


def h_estimate(ensemble: Ensemble, n_speed: int = 64, n_internal: int = 32) -> float:
    """Histogram estimate of the entropy functional.

    Continuous species contribute the mean of log f + (1 - delta/2) log I,
    with f reconstructed isotropically from a speed-by-internal-energy
    histogram; discrete species contribute log of the per-level velocity
    density relative to the level's degeneracy.  Bin counts fall back to
    Scott's rule when the sample is too small to fill the default grid.
    """
    n = ensemble.n_particles
    if n < 1000:
        raise ValueError("need at least 1000 particles for a stable histogram")
    u = ensemble.bulk_velocity()
    total = 0.0
    for s, sp in enumerate(ensemble.spec.species):
        mask = ensemble.species == s
        ns = int(np.count_nonzero(mask))
        if ns == 0:
            continue
        frac = ns / n
        dv = ensemble.v[mask] - u
        c = np.sqrt(np.sum(dv * dv, axis=1))
        nc = n_speed if ns >= 20 * n_speed else max(8, _scott_bins(c, n_speed))
        c_edges = np.linspace(0.0, float(c.max()) * (1.0 + 1e-9), nc + 1)
        energy = sp.energy
        if isinstance(energy, ContinuousEnergy):
            I = ensemble.internal[mask]
            ni = n_internal if ns >= 20 * n_internal else max(4, _scott_bins(I, n_internal))
            i_edges = np.linspace(0.0, float(I.max()) * (1.0 + 1e-9), ni + 1)
            counts, _, _ = np.histogram2d(c, I, bins=(c_edges, i_edges))
            area = np.diff(c_edges)[:, None] * np.diff(i_edges)[None, :]
            mids = 0.5 * (c_edges[:-1] + c_edges[1:])
            with np.errstate(divide="ignore"):
                log_f = (
                    np.log(np.maximum(counts, 1e-300))
                    - math.log(n)
                    - np.log(area)
                    - np.log(4.0 * np.pi * mids[:, None] ** 2)
                )
            ci = np.clip(np.searchsorted(c_edges, c, side="right") - 1, 0, nc - 1)
            ki = np.clip(np.searchsorted(i_edges, I, side="right") - 1, 0, ni - 1)
            weight = (1.0 - 0.5 * energy.delta) * np.log(np.maximum(I, 1e-300))
            total += frac * float(np.mean(log_f[ci, ki] + weight))
        elif isinstance(energy, Monatomic):
            counts, _ = np.histogram(c, bins=c_edges)
            widths = np.diff(c_edges)
            mids = 0.5 * (c_edges[:-1] + c_edges[1:])
            with np.errstate(divide="ignore"):
                log_f = (
                    np.log(np.maximum(counts, 1e-300))
                    - math.log(n)
                    - np.log(widths)
                    - np.log(4.0 * np.pi * mids**2)
                )
            ci = np.clip(np.searchsorted(c_edges, c, side="right") - 1, 0, nc - 1)
            total += frac * float(np.mean(log_f[ci]))
        else:
            degeneracies = np.asarray(energy.degeneracies)
            lev = ensemble.levels[mask]
            for k in range(len(degeneracies)):
                lmask = lev == k
                nk = int(np.count_nonzero(lmask))
                if nk == 0:
                    continue
                ck = c[lmask]
                nck = n_speed if nk >= 20 * n_speed else max(8, _scott_bins(ck, n_speed))
                edges = np.linspace(0.0, float(ck.max()) * (1.0 + 1e-9), nck + 1)
                counts, _ = np.histogram(ck, bins=edges)
                widths = np.diff(edges)
                mids = 0.5 * (edges[:-1] + edges[1:])
                with np.errstate(divide="ignore"):
                    log_f = (
                        np.log(np.maximum(counts, 1e-300))
                        - math.log(n)
                        - np.log(widths)
                        - np.log(4.0 * np.pi * mids**2)
                    )
                ci = np.clip(np.searchsorted(edges, ck, side="right") - 1, 0, nck - 1)
                total += (nk / n) * float(
                    np.mean(log_f[ci]) - math.log(degeneracies[k])
                )
    return total


def equilibrium_temperature(ensemble: Ensemble) -> float:
    """Temperature implied by the conserved center-of-momentum energy."""
    n = ensemble.n_particles
    u = ensemble.bulk_velocity()
    du = ensemble.v - u
    e_com = 0.5 * float(np.sum(ensemble.masses * np.sum(du * du, axis=1)))
    e_com += ensemble.internal_energy()
    k_B = ensemble.units.k_B
    counts = [int(np.count_nonzero(ensemble.species == s))
              for s in range(ensemble.spec.n_species)]
    if all(not isinstance(sp.energy, DiscreteLevels) for sp in ensemble.spec.species):
        dof = 0.0
        for sp, ns in zip(ensemble.spec.species, counts):
            d = sp.energy.delta if isinstance(sp.energy, ContinuousEnergy) else 0.0
            dof += ns * (3.0 + d)
        return 2.0 * e_com / (k_B * dof)

    def gap(T: float) -> float:
        tot = 0.0
        for sp, ns in zip(ensemble.spec.species, counts):
            tot += ns * (1.5 * k_B * T + mean_internal_energy(sp.energy, T, ensemble.units))
        return tot - e_com

    hi = 2.0 * e_com / (1.5 * k_B * n)
    return float(optimize.brentq(gap, 1e-12, max(hi, 1e-9), xtol=1e-12, rtol=1e-12))


def nonincreasing_trend(t: np.ndarray, values: np.ndarray, z: float = 3.0) -> bool:
    """True when the least-squares slope is nonpositive within noise."""
    t = np.asarray(t, dtype=float)
    values = np.asarray(values, dtype=float)
    if len(t) < 3:
        raise ValueError("need at least three points for a trend")
    design = np.column_stack([np.ones_like(t), t])
    coef, res, _, _ = np.linalg.lstsq(design, values, rcond=None)
    slope = float(coef[1])
    dof = len(t) - 2
    if dof <= 0 or res.size == 0:
        return slope <= 0.0
    s2 = float(res[0]) / dof
    var = s2 / float(np.sum((t - t.mean()) ** 2))
    return slope <= z * math.sqrt(var) + 1e-12


def run(
    spec: MixtureSpec,
    config: RelaxConfig,
    T_kin0: float,
    T_int0: float,
    t_end: float,
    u0=None,
    units: UnitSystem = UnitSystem(),
) -> TimeSeries:
    """Relax a fresh two-temperature ensemble to ``t_end``.

    Records moments every ``config.cadence`` steps (plus the initial and
    final states) and returns the series with conservation and equilibrium
    diagnostics in ``meta``.
    """
    if t_end <= 0:
        raise ValueError("t_end must be positive")
    ens = init_ensemble(spec, config.n_particles, T_kin0, T_int0, u0,
                        seed=config.seed, units=units)
    e0 = ens.total_energy()
    p0 = ens.momentum()
    t_eq = equilibrium_temperature(ens)
    n_steps = int(round(t_end / config.dt))
    rows = []

    def record() -> None:
        rows.append((
            ens.time,
            ens.kinetic_temperature(),
            ens.internal_temperature(),
            ens.mean_internal(),
            h_estimate(ens) if ens.n_particles >= 1000 else float("nan"),
            ens.collisions,
        ))

    record()
    for k in range(n_steps):
        step(ens, config)
        if (k + 1) % config.cadence == 0 or k + 1 == n_steps:
            record()
    e1 = ens.total_energy()
    p1 = ens.momentum()
    cols = list(zip(*rows))
    scale_p = max(float(np.sum(np.abs(ens.masses[:, None] * ens.v))), 1e-300)
    meta = {
        "t_eq": t_eq,
        "energy_initial": e0,
        "energy_final": e1,
        "energy_drift": abs(e1 - e0) / max(abs(e0), 1e-300),
        "momentum_drift": float(np.max(np.abs(p1 - p0))) / scale_p,
        "majorant_violations": ens.majorant_violations,
        "T_kin_final": ens.kinetic_temperature(),
        "T_int_final": ens.internal_temperature(),
        "mean_I_final": ens.mean_internal(),
    }
    return TimeSeries(
        t=np.asarray(cols[0]),
        T_kin=np.asarray(cols[1]),
        T_int=np.asarray(cols[2]),
        mean_I=np.asarray(cols[3]),
        H=np.asarray(cols[4]),
        collisions=np.asarray(cols[5], dtype=np.int64),
        seed=config.seed,
        meta=meta,
    )


def relax_summary(series: TimeSeries) -> dict:
    """Machine-readable run verdicts for reporting."""
    t_eq = series.meta["t_eq"]
    gap = abs(series.meta["T_kin_final"] - series.meta["T_int_final"]) / t_eq
    h = series.H[np.isfinite(series.H)]
    t_h = series.t[np.isfinite(series.H)]
    trend = nonincreasing_trend(t_h, h) if len(h) >= 3 else None
    return {
        "seed": series.seed,
        "t_eq": t_eq,
        "T_kin_final": series.meta["T_kin_final"],
        "T_int_final": series.meta["T_int_final"],
        "equipartition_gap": gap,
        "equipartition_within_2pct": bool(gap <= 0.02),
        "mean_I_final": series.meta["mean_I_final"],
        "energy_drift": series.meta["energy_drift"],
        "momentum_drift": series.meta["momentum_drift"],
        "collisions": int(series.collisions[-1]),
        "majorant_violations": series.meta["majorant_violations"],
        "h_nonincreasing": trend,
    }
