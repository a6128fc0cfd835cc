"""Chunked, reproducible Monte Carlo accumulation.

Estimators in this package draw samples in fixed-size chunks, each with its
own child RNG stream spawned from the configured seed.  Chunk statistics are
merged in chunk-index order, so a result depends only on (inputs, seed,
chunk size) and not on how many worker threads executed the chunks.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

__all__ = ["MCEstimate", "QuadratureConfig", "accumulate"]

# Cancellation floor: differences smaller than this relative to the summed
# term magnitudes are indistinguishable from rounding noise and are treated
# as exact zeros by the estimators.
SNAP_RTOL = 64.0 * np.finfo(float).eps


@dataclass(frozen=True)
class QuadratureConfig:
    """Sample budget, seed, and proposal overrides for the MC estimators.

    The proposal defaults (partner velocity Gaussian at the reference
    temperature, internal energy Gamma with the equilibrium shape, Beta
    draws matching the transition-weight powers, uniform scattering
    direction) are derived per call; the optional fields below override
    them.  ``i_truncation`` caps proposed internal energies, restricting
    the integration domain to [0, i_truncation].
    """

    n_samples: int
    seed: int = 0
    chunk_size: int = 250_000
    beta_r: tuple[float, float] | None = None
    beta_R: tuple[float, float] | None = None
    gamma_shape: float | None = None
    proposal_temperature: float | None = None
    i_truncation: float | None = None
    threads: int | None = None

    def __post_init__(self) -> None:
        if self.n_samples < 1:
            raise ValueError("n_samples must be at least 1")
        if self.chunk_size < 1:
            raise ValueError("chunk_size must be at least 1")
        for name in ("beta_r", "beta_R"):
            shapes = getattr(self, name)
            if shapes is not None and (shapes[0] <= 0 or shapes[1] <= 0):
                raise ValueError(f"{name} shapes must be positive")
        if self.gamma_shape is not None and self.gamma_shape <= 0:
            raise ValueError("gamma_shape must be positive")
        if self.proposal_temperature is not None and self.proposal_temperature <= 0:
            raise ValueError("proposal_temperature must be positive")
        if self.i_truncation is not None and self.i_truncation <= 0:
            raise ValueError("i_truncation must be positive")


@dataclass(frozen=True)
class MCEstimate:
    """Importance-sampling estimate with its standard error."""

    value: float
    stderr: float
    n_samples: int
    seed: int
    diagnostics: dict = field(default_factory=dict, compare=False)

    def __post_init__(self) -> None:
        if self.stderr < 0:
            raise ValueError("standard error must be nonnegative")


def _worker_count(cfg: QuadratureConfig) -> int:
    want = cfg.threads if cfg.threads is not None else 1
    cap = os.environ.get("POLYKIN_THREADS")
    if cap is not None:
        want = min(want, max(1, int(cap)))
    return max(1, want)


def _chunk_stats(values: np.ndarray) -> tuple[int, float, float]:
    n = values.size
    mean = float(values.mean())
    m2 = float(np.sum((values - mean) ** 2))
    return n, mean, m2


def _merge(acc: tuple[int, float, float], new: tuple[int, float, float]):
    n1, m1, s1 = acc
    n2, m2, s2 = new
    if n1 == 0:
        return new
    n = n1 + n2
    d = m2 - m1
    return n, m1 + d * n2 / n, s1 + s2 + d * d * n1 * n2 / n


def accumulate(
    sampler: Callable[[np.random.Generator, int], tuple[np.ndarray, dict]],
    cfg: QuadratureConfig,
    seed_seq: np.random.SeedSequence | None = None,
) -> MCEstimate:
    """Run ``sampler(rng, count)`` over chunks and merge the statistics.

    ``sampler`` returns per-sample estimator values plus a dict of integer
    diagnostic counters (summed across chunks).  The reduction order is the
    chunk index order regardless of the worker count.
    """
    if seed_seq is None:
        seed_seq = np.random.SeedSequence(cfg.seed)
    n_chunks = math.ceil(cfg.n_samples / cfg.chunk_size)
    sizes = [cfg.chunk_size] * (n_chunks - 1)
    sizes.append(cfg.n_samples - cfg.chunk_size * (n_chunks - 1))
    children = seed_seq.spawn(n_chunks)

    def run_chunk(k: int):
        rng = np.random.Generator(np.random.PCG64(children[k]))
        values, diag = sampler(rng, sizes[k])
        values = np.asarray(values, dtype=float)
        if values.shape != (sizes[k],):
            raise ValueError("sampler returned a wrong-shaped value array")
        if not np.all(np.isfinite(values)):
            raise FloatingPointError(
                f"non-finite estimator values in chunk {k}: "
                f"{int(np.sum(~np.isfinite(values)))} samples"
            )
        return _chunk_stats(values), diag

    workers = _worker_count(cfg)
    if workers == 1 or n_chunks == 1:
        results = [run_chunk(k) for k in range(n_chunks)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run_chunk, range(n_chunks)))

    acc = (0, 0.0, 0.0)
    diagnostics: dict = {"n_chunks": n_chunks}
    for stats, diag in results:
        acc = _merge(acc, stats)
        for key, val in diag.items():
            diagnostics[key] = diagnostics.get(key, 0) + val
    n, mean, m2 = acc
    stderr = math.sqrt(m2 / (n * (n - 1))) if n > 1 and m2 > 0.0 else 0.0
    return MCEstimate(mean, stderr, n, cfg.seed, diagnostics)
