"""Classical QUBO minimisers standing in for annealer reads.

Every read draws its randomness from its own generator, seeded from
``(master_seed, read_index)`` through :class:`numpy.random.SeedSequence`, so a
read's result does not depend on which other reads ran, in what order, or on
how many worker threads were used.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numba
import numpy as np

from .encoder import Bitstring, QuboMatrix, qubo_energy
from .errors import ConfigurationError, InputError

BRUTE_FORCE_MAX_DIM = 24
_CHUNK_BITS = 16


@dataclass(frozen=True)
class SamplerConfig:
    reads: int = 100
    sweeps: int = 1000
    beta_start: float = 0.1
    beta_end: float = 10.0
    tabu_tenure: int = 10
    master_seed: int = 0

    def __post_init__(self):
        if self.reads < 1:
            raise ConfigurationError("reads must be >= 1")
        if self.sweeps < 1:
            raise ConfigurationError("sweeps must be >= 1")
        if not 0 < self.beta_start < self.beta_end:
            raise ConfigurationError("need 0 < beta_start < beta_end")
        if self.tabu_tenure < 0:
            raise ConfigurationError("tabu_tenure must be >= 0")
        if not 0 <= self.master_seed < 2**64:
            raise ConfigurationError("master_seed must fit in an unsigned 64-bit integer")


@dataclass(frozen=True)
class Sample:
    x: Bitstring
    energy: float
    read_index: int


@dataclass(frozen=True)
class SampleSet:
    samples: tuple[Sample, ...]
    source_dimension: int

    def __post_init__(self):
        ordered = tuple(sorted(self.samples, key=lambda s: s.read_index))
        if any(len(s.x) != self.source_dimension for s in ordered):
            raise InputError("all samples must have the source dimension")
        object.__setattr__(self, "samples", ordered)

    def __len__(self):
        return len(self.samples)

    def __iter__(self):
        return iter(self.samples)

    @property
    def energies(self) -> np.ndarray:
        return np.array([s.energy for s in self.samples])

    @property
    def lowest(self) -> Sample:
        return min(self.samples, key=lambda s: (s.energy, s.read_index))

    def to_dict(self) -> dict:
        return {
            "source_dimension": self.source_dimension,
            "samples": [
                {"read_index": s.read_index, "x": "".join(map(str, s.x)), "energy": s.energy}
                for s in self.samples
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SampleSet":
        samples = tuple(
            Sample(tuple(int(c) for c in s["x"]), float(s["energy"]), int(s["read_index"]))
            for s in data["samples"]
        )
        return cls(samples, int(data["source_dimension"]))


def read_rng(master_seed: int, read_index: int) -> np.random.Generator:
    """Generator for one read; a pure function of ``(master_seed, read_index)``."""
    return np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=(read_index,)))


def derive_seed(master_seed: int, *path: int) -> int:
    """Deterministic 64-bit child seed for a named sub-stream, e.g. one instance of an experiment."""
    seq = np.random.SeedSequence(master_seed, spawn_key=tuple(path))
    return int(seq.generate_state(1, dtype=np.uint64)[0])


def _bit_table(dim: int, start: int, stop: int) -> np.ndarray:
    """Rows are the bitstrings with integer codes ``start..stop-1``; bit 0 is the most significant."""
    codes = np.arange(start, stop, dtype=np.int64)
    shifts = np.arange(dim - 1, -1, -1, dtype=np.int64)
    return ((codes[:, None] >> shifts) & 1).astype(np.float64)


def brute_force_minimize(q: QuboMatrix) -> tuple[float, list[Bitstring]]:
    """Exact minimum and every minimising bitstring, by enumerating all 2^dim states.

    Argmins are returned in lexicographic order of their bitstrings.
    """
    dim = q.dimension
    if dim > BRUTE_FORCE_MAX_DIM:
        raise InputError(f"brute force refused for dimension {dim} > {BRUTE_FORCE_MAX_DIM}")
    if dim == 0:
        return 0.0, [()]
    upper = q.upper
    total = 1 << dim
    chunk = 1 << min(dim, _CHUNK_BITS)
    best = math.inf
    winners: list[np.ndarray] = []
    for start in range(0, total, chunk):
        bits = _bit_table(dim, start, start + chunk)
        energies = np.einsum("ij,ij->i", bits @ upper, bits)
        low = energies.min()
        if low < best:
            best = float(low)
            winners = []
        if low == best:
            winners.append(start + np.flatnonzero(energies == low))
    codes = np.concatenate(winners)
    argmins = [tuple((int(c) >> (dim - 1 - i)) & 1 for i in range(dim)) for c in codes]
    return best, argmins


@numba.njit(cache=True, nogil=True)
def _anneal_kernel(couplings, diagonal, x, uniforms, betas):
    dim = x.shape[0]
    field_ = diagonal.copy()
    for i in range(dim):
        if x[i]:
            for j in range(dim):
                field_[j] += couplings[i, j]
    for sweep in range(betas.shape[0]):
        beta = betas[sweep]
        for i in range(dim):
            delta = field_[i] if x[i] == 0 else -field_[i]
            if delta <= 0.0 or uniforms[sweep, i] < math.exp(-beta * delta):
                sign = 1.0 if x[i] == 0 else -1.0
                x[i] = 1 - x[i]
                for j in range(dim):
                    field_[j] += sign * couplings[i, j]
    return x


@numba.njit(cache=True, nogil=True)
def _tabu_kernel(couplings, diagonal, x, iterations, tenure):
    dim = x.shape[0]
    field_ = diagonal.copy()
    energy = 0.0
    for i in range(dim):
        if x[i]:
            energy += field_[i]
            for j in range(dim):
                field_[j] += couplings[i, j]
    best = x.copy()
    best_energy = energy
    free_at = np.zeros(dim, dtype=np.int64)
    for it in range(iterations):
        move = -1
        move_delta = 0.0
        for i in range(dim):
            delta = field_[i] if x[i] == 0 else -field_[i]
            allowed = free_at[i] <= it or energy + delta < best_energy
            if allowed and (move < 0 or delta < move_delta):
                move = i
                move_delta = delta
        if move < 0 or (tenure == 0 and move_delta >= 0.0):
            break
        sign = 1.0 if x[move] == 0 else -1.0
        x[move] = 1 - x[move]
        for j in range(dim):
            field_[j] += sign * couplings[move, j]
        energy += move_delta
        free_at[move] = it + tenure + 1
        if energy < best_energy:
            best_energy = energy
            best[:] = x
    return best


def _run_reads(
    q: QuboMatrix,
    config: SamplerConfig,
    read_fn: Callable[[int], np.ndarray],
    workers: int,
) -> SampleSet:
    indices = range(config.reads)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            states = list(pool.map(read_fn, indices))
    else:
        states = [read_fn(r) for r in indices]
    samples = []
    for r, state in zip(indices, states):
        x = tuple(int(b) for b in state)
        samples.append(Sample(x, qubo_energy(q, x), r))
    return SampleSet(tuple(samples), q.dimension)


def simulated_annealing_sample(q: QuboMatrix, config: SamplerConfig, workers: int = 1) -> SampleSet:
    """Single-bit-flip Metropolis annealing with a geometric inverse-temperature schedule.

    Each read starts from a uniformly random bitstring and performs ``sweeps``
    full passes over all bits; the final state is reported.
    """
    couplings = np.ascontiguousarray(q.couplings)
    diagonal = np.array(q.diagonal)
    betas = np.geomspace(config.beta_start, config.beta_end, config.sweeps)

    def one_read(r: int) -> np.ndarray:
        rng = read_rng(config.master_seed, r)
        x = rng.integers(0, 2, size=q.dimension, dtype=np.int8)
        uniforms = rng.random((config.sweeps, q.dimension))
        return _anneal_kernel(couplings, diagonal, x, uniforms, betas)

    return _run_reads(q, config, one_read, workers)


def tabu_sample(q: QuboMatrix, config: SamplerConfig, workers: int = 1) -> SampleSet:
    """Restarted steepest-descent tabu search; each read reports its best state.

    A move is the single flip with the lowest energy change among bits that are
    not tabu (a tabu bit is allowed if it beats the read's best energy). Flipped
    bits stay tabu for ``tabu_tenure`` iterations; each read runs at most
    ``sweeps`` iterations. With tenure 0 a read stops at the first local minimum,
    which is plain greedy descent.
    """
    couplings = np.ascontiguousarray(q.couplings)
    diagonal = np.array(q.diagonal)

    def one_read(r: int) -> np.ndarray:
        rng = read_rng(config.master_seed, r)
        x = rng.integers(0, 2, size=q.dimension, dtype=np.int8)
        return _tabu_kernel(couplings, diagonal, x, config.sweeps, config.tabu_tenure)

    return _run_reads(q, config, one_read, workers)


def brute_force_sample(q: QuboMatrix, config: SamplerConfig, workers: int = 1) -> SampleSet:
    """Exact sampler: read ``r`` returns the ``r mod k``-th of the ``k`` ground states."""
    _, argmins = brute_force_minimize(q)

    def one_read(r: int) -> np.ndarray:
        return np.array(argmins[r % len(argmins)], dtype=np.int8)

    return _run_reads(q, config, one_read, 1)


SAMPLERS = {
    "sa": simulated_annealing_sample,
    "tabu": tabu_sample,
    "brute": brute_force_sample,
}


def sample(q: QuboMatrix, method: str, config: SamplerConfig, workers: int = 1) -> SampleSet:
    try:
        sampler = SAMPLERS[method]
    except KeyError:
        raise ConfigurationError(f"unknown sampler {method!r}; choose from {sorted(SAMPLERS)}") from None
    return sampler(q, config, workers=workers)
