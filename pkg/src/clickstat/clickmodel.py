"""Click-count distributions for multiplexed banks of on/off detectors.

``N`` photons are spread uniformly over ``D`` detectors. Each detector
reports only whether it fired. Three nested models are provided:

* :func:`pmf_ideal` -- perfect detectors (occupancy of ``D`` bins)
* :func:`pmf_lossy` -- per-photon efficiency ``eta``, no false counts
* :func:`pmf_noisy` -- efficiency ``eta`` and per-detector false-count
  probability ``epsilon``

Every function has an exact backend (Fractions) and a floating backend
(log domain). The exact one is chosen automatically when all inputs are
rational.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Sequence, Union

import numpy as np
from scipy.special import logsumexp

from .combinatorics import (
    binom_pmf,
    falling_factorial,
    is_rational,
    log_binom_pmf,
    log_binom_pmf_matrix,
    log_binom_pmf_vector,
    log_stirling2_table,
    resolve_exact,
    stirling2,
)

__all__ = [
    "DetectorBank",
    "ClickPMF",
    "pmf_ideal",
    "pmf_lossy",
    "pmf_noisy",
    "likelihood",
    "all_detect_probability",
    "epsilon_from_rate",
]

Number = Union[int, float, Fraction]


@dataclass(frozen=True)
class DetectorBank:
    """``count`` on/off detectors sharing efficiency ``eta`` and false-count
    probability ``epsilon`` (per detector, per measurement window)."""

    count: int
    eta: Number = 1
    epsilon: Number = 0

    def __post_init__(self):
        if isinstance(self.count, bool) or not isinstance(self.count, int) or self.count < 1:
            raise ValueError(f"detector count must be a positive integer, got {self.count!r}")
        for name in ("eta", "epsilon"):
            value = getattr(self, name)
            if not 0 <= value <= 1:
                raise ValueError(f"{name} must lie in [0, 1], got {value!r}")

    @property
    def is_ideal(self) -> bool:
        return self.eta == 1 and self.epsilon == 0

    @property
    def is_rational(self) -> bool:
        return is_rational(self.eta) and is_rational(self.epsilon)

    def as_dict(self) -> dict:
        return {"detectors": self.count, "eta": _jsonable(self.eta), "epsilon": _jsonable(self.epsilon)}


def _jsonable(x):
    return str(x) if isinstance(x, Fraction) else x


@dataclass(frozen=True)
class ClickPMF:
    """Distribution of the click count ``C = 0..D`` for ``photons`` inputs.

    ``probs`` is a tuple of Fractions for the exact backend and a float
    ndarray for the floating one.
    """

    bank: DetectorBank
    photons: int
    probs: Union[tuple, np.ndarray]

    @property
    def exact(self) -> bool:
        return isinstance(self.probs, tuple)

    def __getitem__(self, clicks: int):
        return self.probs[clicks]

    def __len__(self):
        return len(self.probs)

    def __iter__(self):
        return iter(self.probs)

    def total(self):
        return sum(self.probs) if self.exact else float(np.sum(self.probs))

    def mean(self):
        return sum(c * p for c, p in enumerate(self.probs))


# ---------------------------------------------------------------------------
# ideal detectors


@lru_cache(maxsize=4096)
def _ideal_exact(detectors: int, photons: int, clicks: int) -> Fraction:
    # P_0(C|k) is 1 only for C = k = 0; Python's 0**0 == 1 gives exactly that.
    if clicks > detectors or clicks > photons:
        return Fraction(0)
    numerator = falling_factorial(detectors, clicks) * stirling2(photons, clicks)
    return Fraction(numerator, detectors**photons)


@lru_cache(maxsize=256)
def _log_ideal_row(detectors: int, clicks: int, max_photons: int) -> np.ndarray:
    """``log P_detectors(clicks | k)`` for ``k = 0..max_photons``."""
    out = np.full(max_photons + 1, -np.inf)
    if clicks > detectors:
        pass
    elif detectors == 0:
        out[0] = 0.0
    else:
        logs = log_stirling2_table(max_photons, clicks)[:, clicks]
        k = np.arange(max_photons + 1)
        out = math.log(falling_factorial(detectors, clicks)) + logs - k * math.log(detectors)
    out.flags.writeable = False
    return out


def _check_counts(detectors, photons):
    if isinstance(detectors, bool) or not isinstance(detectors, int) or detectors < 1:
        raise ValueError(f"detector count must be a positive integer, got {detectors!r}")
    if photons < 0:
        raise ValueError(f"photon number must be non-negative, got {photons!r}")


def pmf_ideal(detectors: int, photons: int, exact: bool = True) -> ClickPMF:
    """Click distribution for perfect detectors.

    ``P(C) = C(D, C) C! S(N, C) / D^N``: choose which ``C`` detectors fire and
    count the surjections of the photons onto them.
    """
    _check_counts(detectors, photons)
    bank = DetectorBank(detectors, 1, 0)
    if exact:
        probs = tuple(_ideal_exact(detectors, photons, c) for c in range(detectors + 1))
    else:
        logs = [_log_ideal_row(detectors, c, photons)[photons] for c in range(detectors + 1)]
        probs = np.exp(logs)
    return ClickPMF(bank, photons, probs)


# ---------------------------------------------------------------------------
# lossy, noiseless detectors


def pmf_lossy(detectors: int, eta: Number, photons: int, exact: bool | None = None) -> ClickPMF:
    """Click distribution with efficiency ``eta`` and no false counts.

    Thins the photons binomially and then applies the ideal model:
    ``P(C) = sum_{k=C}^{N} p_eta(k|N) P_D(C|k)``.
    """
    _check_counts(detectors, photons)
    exact, (eta,) = resolve_exact(exact, eta)
    bank = DetectorBank(detectors, eta, 0 if exact else 0.0)
    top = min(detectors, photons)
    if exact:
        survivors = [binom_pmf(k, photons, eta) for k in range(photons + 1)]
        probs = [Fraction(0)] * (detectors + 1)
        for c in range(top + 1):
            probs[c] = sum(
                (survivors[k] * _ideal_exact(detectors, k, c) for k in range(c, photons + 1)),
                Fraction(0),
            )
        return ClickPMF(bank, photons, tuple(probs))
    log_survivors = log_binom_pmf_vector(photons, eta)
    logs = np.full(detectors + 1, -np.inf)
    for c in range(top + 1):
        logs[c] = logsumexp(log_survivors + _log_ideal_row(detectors, c, photons))
    return ClickPMF(bank, photons, np.exp(logs))


# ---------------------------------------------------------------------------
# noisy detectors


def _noisy_exact(detectors: int, eta: Fraction, eps: Fraction, photons: int) -> tuple:
    probs = [Fraction(0)] * (detectors + 1)
    for i in range(detectors + 1):
        p_false = binom_pmf(i, detectors, eps)
        if not p_false:
            continue
        active = detectors - i
        reach = Fraction(active, detectors)
        # thinned[k] = sum_{j=k}^{N} p_reach(j|N) p_eta(k|j): the j and k sums
        # of the triple sum with their order exchanged.
        p_reach = [binom_pmf(j, photons, reach) for j in range(photons + 1)]
        thinned = [Fraction(0)] * (photons + 1)
        for j, pj in enumerate(p_reach):
            if not pj:
                continue
            for k in range(j + 1):
                pk = binom_pmf(k, j, eta)
                if pk:
                    thinned[k] += pj * pk
        for real in range(min(active, photons) + 1):
            s = Fraction(0)
            for k in range(real, photons + 1):
                if thinned[k]:
                    s += thinned[k] * _ideal_exact_any(active, k, real)
            probs[i + real] += p_false * s
    return tuple(probs)


def _ideal_exact_any(detectors: int, photons: int, clicks: int) -> Fraction:
    """Like :func:`_ideal_exact` but also defined for zero detectors."""
    if detectors == 0:
        return Fraction(1 if clicks == 0 and photons == 0 else 0)
    return _ideal_exact(detectors, photons, clicks)


def _log_noisy(detectors: int, eta: float, eps: float, photons: int) -> np.ndarray:
    logs = np.full(detectors + 1, -np.inf)
    log_eta = log_binom_pmf_matrix(photons, eta)  # [j, k]
    for i in range(detectors + 1):
        log_false = log_binom_pmf(i, detectors, eps)
        if log_false == -math.inf:
            continue
        active = detectors - i
        log_reach = log_binom_pmf_vector(photons, active / detectors)  # [j]
        top = min(active, photons)
        ideal = np.array([_log_ideal_row(active, c, photons) for c in range(top + 1)])  # [c, k]
        # inner k-sum, then j-sum, as in the triple sum
        inner = logsumexp(log_eta[None, :, :] + ideal[:, None, :], axis=2)  # [c, j]
        middle = logsumexp(log_reach[None, :] + inner, axis=1)  # [c]
        logs[i : i + top + 1] = np.logaddexp(logs[i : i + top + 1], log_false + middle)
    return logs


def pmf_noisy(bank: DetectorBank, photons: int, exact: bool | None = None) -> ClickPMF:
    """Click distribution for a bank with efficiency and false counts.

    Sums over ``i`` false clicks, the ``j`` photons that reach the ``D - i``
    detectors still able to fire, and the ``k`` of those that are
    registered::

        P(C|N) = sum_i p_eps(i|D) sum_j p_{(D-i)/D}(j|N) sum_k p_eta(k|j) P_{D-i}(C-i|k)
    """
    if not isinstance(bank, DetectorBank):
        raise TypeError("pmf_noisy expects a DetectorBank")
    _check_counts(bank.count, photons)
    exact, (eta, eps) = resolve_exact(exact, bank.eta, bank.epsilon)
    if exact:
        probs = _noisy_exact(bank.count, eta, eps, photons)
    else:
        probs = np.exp(_log_noisy(bank.count, eta, eps, photons))
    return ClickPMF(DetectorBank(bank.count, eta, eps), photons, probs)


# ---------------------------------------------------------------------------
# likelihood columns for retrodiction


def _column_exact(detectors: int, eta: Fraction, eps: Fraction, clicks: int, n_max: int) -> list:
    column = [Fraction(0)] * (n_max + 1)
    for i in range(clicks + 1):
        p_false = binom_pmf(i, detectors, eps)
        if not p_false:
            continue
        active, real = detectors - i, clicks - i
        if real > active:
            continue
        # after[j] = sum_k p_eta(k|j) P_active(real|k) does not depend on N
        after = []
        for j in range(n_max + 1):
            s = Fraction(0)
            for k in range(real, j + 1):
                pk = binom_pmf(k, j, eta)
                if pk:
                    s += pk * _ideal_exact_any(active, k, real)
            after.append(s)
        reach = Fraction(active, detectors)
        for n in range(n_max + 1):
            s = Fraction(0)
            for j in range(real, n + 1):
                if after[j]:
                    s += binom_pmf(j, n, reach) * after[j]
            column[n] += p_false * s
    return column


def _log_column(detectors: int, eta: float, eps: float, clicks: int, n_max: int) -> np.ndarray:
    column = np.full(n_max + 1, -np.inf)
    log_eta = log_binom_pmf_matrix(n_max, eta)  # [j, k]
    for i in range(clicks + 1):
        log_false = log_binom_pmf(i, detectors, eps)
        if log_false == -math.inf:
            continue
        active, real = detectors - i, clicks - i
        if real > active:
            continue
        after = logsumexp(log_eta + _log_ideal_row(active, real, n_max)[None, :], axis=1)  # [j]
        log_reach = log_binom_pmf_matrix(n_max, active / detectors)  # [n, j]
        column = np.logaddexp(column, log_false + logsumexp(log_reach + after[None, :], axis=1))
    return column


def likelihood(bank: DetectorBank, clicks: int, n_max: int, exact: bool | None = None):
    """``P(clicks | N)`` for ``N = 0..n_max``: one column of the click model.

    Returns a list of Fractions (exact) or a float ndarray.
    """
    exact, (eta, eps) = resolve_exact(exact, bank.eta, bank.epsilon)
    _check_clicks(bank, clicks)
    if exact:
        return _column_exact(bank.count, eta, eps, clicks, n_max)
    return np.exp(_log_column(bank.count, eta, eps, clicks, n_max))


def log_likelihood(bank: DetectorBank, clicks: int, n_max: int) -> np.ndarray:
    """Floating-point ``log P(clicks | N)`` for ``N = 0..n_max``."""
    _check_clicks(bank, clicks)
    return _log_column(bank.count, float(bank.eta), float(bank.epsilon), clicks, n_max)


def _check_clicks(bank, clicks):
    if not 0 <= clicks <= bank.count:
        raise ValueError(f"clicks must lie in [0, {bank.count}], got {clicks}")


# ---------------------------------------------------------------------------
# closed forms


def all_detect_probability(detectors: int, eta: Number, photons: int, exact: bool | None = None):
    """Probability that every one of ``photons`` inputs produces its own click.

    Only the term where all photons survive contributes, giving
    ``eta^N D!/((D-N)! D^N)``; this tends to ``eta^N`` as ``D`` grows.
    """
    _check_counts(detectors, photons)
    if photons > detectors:
        raise ValueError(f"cannot resolve {photons} photons with {detectors} detectors")
    exact, (eta,) = resolve_exact(exact, eta)
    if not 0 <= eta <= 1:
        raise ValueError(f"eta must lie in [0, 1], got {eta}")
    spread = Fraction(falling_factorial(detectors, photons), detectors**photons)
    if exact:
        return eta**photons * spread
    return eta**photons * float(spread)


def epsilon_from_rate(rate: float, window: float) -> float:
    """False-count probability for a Poisson dark rate over one gate window.

    ``1 - exp(-rate * window)``; for ``rate * window << 1`` this is close to
    the product itself.
    """
    if rate < 0:
        raise ValueError(f"dark-count rate must be non-negative, got {rate}")
    if window <= 0:
        raise ValueError(f"gate window must be positive, got {window}")
    return -math.expm1(-rate * window)


def click_pmfs(bank: DetectorBank, photon_numbers: Sequence[int], exact: bool | None = None) -> list:
    """Convenience: :func:`pmf_noisy` over several photon numbers."""
    return [pmf_noisy(bank, n, exact=exact) for n in photon_numbers]
