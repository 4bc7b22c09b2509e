"""Seeded Euler-Maruyama simulation of the threshold diffusion.

Paths are generated with ``substeps`` internal Euler steps per observation
lag, so the observation grid is decoupled from the discretization grid.
Randomness comes from per-replicate PCG64 substreams keyed by
``(seed, *key)`` through ``numpy.random.SeedSequence``, which makes every
replicate reproducible independently of execution order.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .model import ModelParams

__all__ = [
    "SamplingScheme",
    "PathSample",
    "substream",
    "simulate_path",
    "write_path_csv",
    "read_path_csv",
]

# substeps per kernel call; keeps the per-chunk normal buffer around 8 MB
_CHUNK_SUBSTEPS = 1 << 20


@dataclass(frozen=True)
class SamplingScheme:
    """Observation grid: lag ``h``, ``n_obs`` increments, ``substeps``
    internal Euler steps per lag.  Total horizon is ``h * n_obs``."""

    h: float
    n_obs: int
    substeps: int = 8

    def __post_init__(self) -> None:
        if self.h <= 0:
            raise ValueError("observation lag must be positive")
        if self.n_obs < 1:
            raise ValueError("need at least one observation increment")
        if self.substeps < 1:
            raise ValueError("need at least one Euler substep per lag")

    @property
    def horizon(self) -> float:
        return self.h * self.n_obs


@dataclass(frozen=True)
class PathSample:
    """A discretely observed trajectory with seed provenance."""

    t0: float
    h: float
    values: np.ndarray
    seed: int
    substeps: int = 1

    def __post_init__(self) -> None:
        if self.h <= 0:
            raise ValueError("observation lag must be positive")
        if len(self.values) < 2:
            raise ValueError("a path needs at least two observations")

    @property
    def n_obs(self) -> int:
        return len(self.values) - 1

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.h * np.arange(len(self.values))


def substream(seed: int, *key: int) -> np.random.Generator:
    """Independent generator keyed by (seed, *key); order-independent."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence((seed, *key))))


@njit(cache=True, nogil=True)
def _euler_scan(x0, z, substeps, b_plus, b_minus, s_plus, s_minus, thr, dt, sqdt, out):
    """Advance ``x`` through ``z.size`` Euler substeps, recording every
    ``substeps``-th point into ``out``.  Returns the final state."""
    x = x0
    n = z.size // substeps
    idx = 0
    for i in range(n):
        for _ in range(substeps):
            if x >= thr:
                x = x + b_plus * dt + s_plus * sqdt * z[idx]
            else:
                x = x + b_minus * dt + s_minus * sqdt * z[idx]
            idx += 1
        out[i] = x
    return x


def simulate_path(
    params: ModelParams,
    x0: float,
    scheme: SamplingScheme,
    seed: int,
    key: tuple[int, ...] = (),
) -> PathSample:
    """Euler-Maruyama path observed on the grid of ``scheme``.

    Deterministic given ``(params, x0, scheme, seed, key)``; ``key`` selects
    an independent substream (e.g. the replicate index in an ensemble).
    Ergodicity is not required: raw parameters are simulated as given.
    Coefficients on the threshold itself use the plus branch.
    """
    rng = substream(seed, *key)
    dt = scheme.h / scheme.substeps
    sqdt = float(np.sqrt(dt))
    values = np.empty(scheme.n_obs + 1)
    values[0] = x0

    obs_per_chunk = max(1, _CHUNK_SUBSTEPS // scheme.substeps)
    x = float(x0)
    done = 0
    while done < scheme.n_obs:
        n = min(obs_per_chunk, scheme.n_obs - done)
        z = rng.standard_normal(n * scheme.substeps)
        x = _euler_scan(
            x,
            z,
            scheme.substeps,
            params.b_plus,
            params.b_minus,
            params.sigma_plus,
            params.sigma_minus,
            params.threshold,
            dt,
            sqdt,
            values[done + 1 : done + 1 + n],
        )
        done += n
    return PathSample(
        t0=0.0, h=scheme.h, values=values, seed=seed, substeps=scheme.substeps
    )


def write_path_csv(path: PathSample, stream: io.TextIOBase) -> None:
    """Write the ``t,x`` path format at full double precision."""
    stream.write("t,x\n")
    times = path.times
    for t, x in zip(times, path.values):
        stream.write(f"{t:.17g},{x:.17g}\n")


def read_path_csv(stream: io.TextIOBase) -> PathSample:
    """Parse the ``t,x`` path format; infers the lag from the time column."""
    header = stream.readline().strip()
    if header.replace(" ", "") != "t,x":
        raise ValueError(f"expected 't,x' header, got {header!r}")
    times = []
    values = []
    for lineno, line in enumerate(stream, start=2):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split(",")
        if len(parts) != 2:
            raise ValueError(f"line {lineno}: expected two columns")
        try:
            times.append(float(parts[0]))
            values.append(float(parts[1]))
        except ValueError as exc:
            raise ValueError(f"line {lineno}: non-numeric cell") from exc
    if len(values) < 2:
        raise ValueError("a path needs at least two observations")
    times_arr = np.asarray(times)
    diffs = np.diff(times_arr)
    h = float(np.median(diffs))
    if h <= 0 or not np.allclose(diffs, h, rtol=1e-9, atol=1e-12 * max(1.0, abs(h))):
        raise ValueError("time grid must be equally spaced and increasing")
    return PathSample(t0=float(times_arr[0]), h=h, values=np.asarray(values), seed=-1)
