"""Seeded Monte Carlo of the detection process.

One window: every detector false-clicks with probability ``epsilon``; each
photon lands on a uniformly random detector and, if that detector has not
already false-clicked, registers with probability ``eta``. The click count
is the number of detectors that fired. Photons that land on a
false-clicked detector are absorbed.

Trials are split into fixed-size chunks, and chunk ``c`` draws from the
``SeedSequence(seed).spawn``-style substream ``(seed, c)``. Counts therefore
do not depend on how chunks are distributed over threads.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .clickmodel import DetectorBank
from .fockoptics import beamsplitter_fock

__all__ = [
    "TrialConfig",
    "EmpiricalPMF",
    "simulate_window",
    "estimate_pmf",
    "simulate_noon_window",
    "estimate_noon",
    "CHUNK_SIZE",
]

CHUNK_SIZE = 1 << 16


@dataclass(frozen=True)
class TrialConfig:
    bank: DetectorBank
    photons: int
    trials: int
    seed: int = 0

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError(f"trials must be at least 1, got {self.trials}")
        if self.photons < 0:
            raise ValueError(f"photon number must be non-negative, got {self.photons}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned value")


@dataclass(frozen=True, eq=False)
class EmpiricalPMF:
    counts: np.ndarray
    trials: int

    @property
    def frequencies(self) -> np.ndarray:
        return self.counts / self.trials

    @property
    def stderr(self) -> np.ndarray:
        """Per-bin binomial standard error ``sqrt(p(1-p)/trials)`` from the sample."""
        p = self.frequencies
        return np.sqrt(p * (1.0 - p) / self.trials)


def _clicks(bank: DetectorBank, photons: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Click counts for a batch of windows; ``photons[t]`` photons in window ``t``."""
    trials = photons.shape[0]
    d, eta, eps = bank.count, float(bank.eta), float(bank.epsilon)
    clicked = rng.random((trials, d)) < eps
    width = int(photons.max(initial=0))
    if width:
        target = rng.integers(0, d, size=(trials, width))
        registered = rng.random((trials, width)) < eta
        registered &= np.arange(width)[None, :] < photons[:, None]
        rows = np.broadcast_to(np.arange(trials)[:, None], target.shape)
        # absorption by a false-clicked detector changes nothing: it already fired
        clicked[rows[registered], target[registered]] = True
    return clicked.sum(axis=1)


def simulate_window(bank: DetectorBank, photons: int, rng: np.random.Generator) -> int:
    """Click count of one measurement window."""
    return int(_clicks(bank, np.array([photons]), rng)[0])


def _chunk_rng(seed: int, chunk: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(chunk,))))


def _chunks(trials: int, chunk_size: int):
    return [(c, min(chunk_size, trials - c * chunk_size)) for c in range(math.ceil(trials / chunk_size))]


def _run(work, jobs, threads):
    if threads <= 1 or len(jobs) == 1:
        return [work(job) for job in jobs]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(work, jobs))


def estimate_pmf(config: TrialConfig, threads: int = 1, chunk_size: int = CHUNK_SIZE) -> EmpiricalPMF:
    """Histogram of click counts over ``config.trials`` seeded windows."""
    bank = config.bank

    def work(job):
        chunk, size = job
        rng = _chunk_rng(config.seed, chunk)
        clicks = _clicks(bank, np.full(size, config.photons), rng)
        return np.bincount(clicks, minlength=bank.count + 1)

    counts = sum(_run(work, _chunks(config.trials, chunk_size), threads))
    return EmpiricalPMF(np.asarray(counts, dtype=np.int64), config.trials)


def _branch_weights(photons_per_port: int) -> np.ndarray:
    split = beamsplitter_fock(photons_per_port, photons_per_port, Fraction(1, 2)).probabilities
    return np.array([float(w) for w in split])


def _noon_batch(banks, photons_per_port, size, rng, leak, weights):
    total = 2 * photons_per_port
    n = rng.choice(total + 1, size=size, p=weights)
    n1 = rng.binomial(n, leak)
    n2 = rng.binomial(total - n, leak)
    return _clicks(banks[0], n1, rng), _clicks(banks[1], n2, rng)


def simulate_noon_window(banks, photons_per_port: int, rng: np.random.Generator, leak: float = 0.5) -> tuple:
    """Click pair ``(C1, C2)`` from one heralding window.

    Samples the first-splitter branch ``n`` from the squared amplitudes of
    ``|p, p>``, leaks each arm binomially, then runs one window per bank.
    """
    c1, c2 = _noon_batch(banks, photons_per_port, 1, rng, float(leak), _branch_weights(photons_per_port))
    return int(c1[0]), int(c2[0])


def estimate_noon(
    banks,
    photons_per_port: int,
    trials: int,
    seed: int = 0,
    leak: float = 0.5,
    threads: int = 1,
    chunk_size: int = CHUNK_SIZE,
) -> np.ndarray:
    """Joint click-count histogram ``counts[C1, C2]`` for the heralding setup."""
    if trials < 1:
        raise ValueError(f"trials must be at least 1, got {trials}")
    weights = _branch_weights(photons_per_port)
    shape = (banks[0].count + 1, banks[1].count + 1)

    def work(job):
        chunk, size = job
        rng = _chunk_rng(seed, chunk)
        c1, c2 = _noon_batch(banks, photons_per_port, size, rng, float(leak), weights)
        out = np.zeros(shape, dtype=np.int64)
        np.add.at(out, (c1, c2), 1)
        return out

    return sum(_run(work, _chunks(trials, chunk_size), threads))
