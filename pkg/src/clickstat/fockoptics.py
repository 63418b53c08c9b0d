"""Two-mode Fock states through beam splitters and two-arm retrodiction.

The main use is heralding in a Mach-Zehnder interferometer whose inner
mirrors are replaced by leaky beam splitters: ``|p, p>`` enters the first
50:50 splitter, each arm then leaks photons towards its own multiplexed
detector bank, and the pair of click counts is inverted into a joint
posterior over the leaked photon numbers ``(N1, N2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .clickmodel import DetectorBank, likelihood, pmf_noisy
from .combinatorics import binom_pmf, is_rational, resolve_exact
from .retrodict import ImpossibleObservation

__all__ = [
    "TwoModeAmplitudes",
    "JointPrior",
    "JointPosterior",
    "beamsplitter_fock",
    "noon_joint_prior",
    "joint_retrodict",
    "joint_evidence",
]


@dataclass(frozen=True)
class TwoModeAmplitudes:
    """Output amplitudes over ``|k, T-k>`` for ``k = 0..T``.

    In exact mode amplitude ``k`` is ``coefficients[k] * sqrt(radicands[k])``
    with both factors rational, so the squared amplitudes are exact.
    """

    total: int
    coefficients: tuple
    radicands: tuple | None = None

    @property
    def exact(self) -> bool:
        return self.radicands is not None

    @property
    def amplitudes(self) -> np.ndarray:
        if not self.exact:
            return np.asarray(self.coefficients, dtype=float)
        return np.array([float(c) * math.sqrt(r) for c, r in zip(self.coefficients, self.radicands)])

    @property
    def probabilities(self):
        """Squared amplitudes; Fractions in exact mode."""
        if self.exact:
            return tuple(c * c * r for c, r in zip(self.coefficients, self.radicands))
        return self.amplitudes**2

    def __getitem__(self, k: int):
        return self.amplitudes[k]


def beamsplitter_fock(m: int, n: int, transmissivity=Fraction(1, 2), exact: bool | None = None) -> TwoModeAmplitudes:
    """Amplitudes of ``|m, n>`` after a lossless beam splitter.

    Uses the real transform ``a -> sqrt(t) a + sqrt(r) b``,
    ``b -> -sqrt(r) a + sqrt(t) b`` on creation operators and collects the
    monomials of ``(a')^m (b')^n``.
    """
    if m < 0 or n < 0:
        raise ValueError("photon numbers must be non-negative")
    exact, (t,) = resolve_exact(exact, transmissivity)
    if not 0 <= t <= 1:
        raise ValueError(f"transmissivity must lie in [0, 1], got {t}")
    r = 1 - t
    total = m + n
    coefficients, radicands = [], []
    for k in range(total + 1):
        # choose p of the m 'a' factors and q of the n 'b' factors to land in mode a
        s = 0
        t_odd = (k + n) % 2
        r_odd = (m + k) % 2
        for p in range(max(0, k - n), min(m, k) + 1):
            q = k - p
            sign = -1 if q % 2 else 1
            t_pow = (p + n - q - t_odd) // 2
            r_pow = (m - p + q - r_odd) // 2
            s += sign * math.comb(m, p) * math.comb(n, q) * t**t_pow * r**r_pow
        norm = Fraction(math.factorial(k) * math.factorial(total - k), math.factorial(m) * math.factorial(n))
        radicand = t**t_odd * r**r_odd * norm
        if exact:
            coefficients.append(Fraction(s))
            radicands.append(radicand)
        else:
            coefficients.append(float(s) * math.sqrt(float(radicand)))
    if exact:
        return TwoModeAmplitudes(total, tuple(coefficients), tuple(radicands))
    return TwoModeAmplitudes(total, tuple(coefficients))


def _as_matrix(rows) -> np.ndarray:
    rows = [list(r) for r in rows]
    if all(is_rational(x) for r in rows for x in r):
        return np.array([[Fraction(x) for x in r] for r in rows], dtype=object)
    return np.array(rows, dtype=float)


@dataclass(frozen=True, eq=False)
class JointPrior:
    """``probs[N1, N2]``: probability of ``N1`` photons at bank 1 and ``N2`` at bank 2."""

    probs: np.ndarray

    @property
    def exact(self) -> bool:
        return self.probs.dtype == object

    @property
    def shape(self):
        return self.probs.shape

    def __getitem__(self, idx):
        n1, n2 = idx
        if n1 >= self.probs.shape[0] or n2 >= self.probs.shape[1]:
            return 0 * self.probs[0, 0]
        return self.probs[n1, n2]

    def total(self):
        return self.probs.sum()

    def marginal(self, axis: int):
        """Marginal over arm ``axis`` (0 for bank 1, 1 for bank 2)."""
        return self.probs.sum(axis=1 - axis)

    @classmethod
    def from_marginals(cls, first: Sequence, second: Sequence) -> "JointPrior":
        return cls(_as_matrix([[a * b for b in second] for a in first]))


@dataclass(frozen=True, eq=False)
class JointPosterior:
    clicks: tuple
    banks: tuple
    probs: np.ndarray
    evidence: object

    @property
    def exact(self) -> bool:
        return self.probs.dtype == object

    def __getitem__(self, idx):
        return self.probs[idx]

    def total(self):
        return self.probs.sum()

    @property
    def mode(self) -> tuple:
        """Most probable ``(N1, N2)``; ties resolve to the first in row-major order."""
        rows, cols = self.probs.shape
        best = (0, 0)
        for i in range(rows):
            for j in range(cols):
                if self.probs[i, j] > self.probs[best]:
                    best = (i, j)
        return best

    @property
    def mode_probability(self):
        return self.probs[self.mode]


def noon_joint_prior(photons_per_port: int, leak_transmissivity=Fraction(1, 2), exact: bool | None = None) -> JointPrior:
    """Joint distribution of photons leaked to the two detector banks.

    ``|p, p>`` passes a 50:50 splitter into ``sum_n c_n |n, 2p-n>``; each
    arm then leaks every photon independently with probability
    ``leak_transmissivity``. Different ``n`` leave orthogonal states in the
    interferometer, so the branches add in probability.
    """
    if photons_per_port < 0:
        raise ValueError("photons_per_port must be non-negative")
    exact, (leak,) = resolve_exact(exact, leak_transmissivity)
    if not 0 <= leak <= 1:
        raise ValueError(f"leak transmissivity must lie in [0, 1], got {leak}")
    total = 2 * photons_per_port
    split = beamsplitter_fock(photons_per_port, photons_per_port, Fraction(1, 2), exact=exact).probabilities
    zero = Fraction(0) if exact else 0.0
    probs = [[zero] * (total + 1) for _ in range(total + 1)]
    for n, weight in enumerate(split):
        if not weight:
            continue
        for n1 in range(n + 1):
            p1 = binom_pmf(n1, n, leak)
            for n2 in range(total - n + 1):
                probs[n1][n2] += weight * p1 * binom_pmf(n2, total - n, leak)
    return JointPrior(_as_matrix(probs) if exact else np.array(probs, dtype=float))


def _columns(bank: DetectorBank, clicks: int, n_max: int, exact: bool):
    column = likelihood(bank, clicks, n_max, exact=exact)
    return np.array(column, dtype=object) if exact else np.asarray(column, dtype=float)


def joint_retrodict(
    bank1: DetectorBank,
    bank2: DetectorBank,
    prior: JointPrior,
    clicks1: int,
    clicks2: int,
    exact: bool | None = None,
) -> JointPosterior:
    """``P(N1, N2 | C1, C2)`` by Bayes' rule with independent banks.

    The likelihood factorizes as ``P1(C1|N1) P2(C2|N2)``; the banks need not
    be identical.
    """
    for bank, clicks in ((bank1, clicks1), (bank2, clicks2)):
        if not 0 <= clicks <= bank.count:
            raise ValueError(f"clicks must lie in [0, {bank.count}], got {clicks}")
    if exact is None:
        exact = prior.exact and bank1.is_rational and bank2.is_rational
    rows, cols = prior.shape
    l1 = _columns(bank1, clicks1, rows - 1, exact)
    l2 = _columns(bank2, clicks2, cols - 1, exact)
    weights = prior.probs if exact or not prior.exact else prior.probs.astype(float)
    joint = np.outer(l1, l2) * weights
    evidence = joint.sum()
    if evidence == 0:
        raise ImpossibleObservation(f"clicks ({clicks1}, {clicks2}) have zero probability under this prior")
    return JointPosterior((clicks1, clicks2), (bank1, bank2), joint / evidence, evidence)


def joint_evidence(bank1: DetectorBank, bank2: DetectorBank, prior: JointPrior, exact: bool | None = None) -> np.ndarray:
    """Prior-predictive click distribution ``P(C1, C2)`` as a ``(D1+1, D2+1)`` matrix."""
    if exact is None:
        exact = prior.exact and bank1.is_rational and bank2.is_rational
    rows, cols = prior.shape

    def table(bank, size):
        pmfs = [pmf_noisy(bank, n, exact=exact).probs for n in range(size)]
        return np.array([list(p) for p in pmfs], dtype=object if exact else float)  # [N, C]

    t1, t2 = table(bank1, rows), table(bank2, cols)
    weights = prior.probs if exact or not prior.exact else prior.probs.astype(float)
    return t1.T.dot(weights).dot(t2)
