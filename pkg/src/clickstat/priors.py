"""Photon-number priors.

Each prior exposes ``pmf(n)``, ``log_pmf(n)`` and a tail bound used to pick a
truncation point. ``weight(n)`` is the pmf up to a constant factor and is
what retrodiction multiplies into the likelihood; for a Poisson prior with
rational mean it drops the irrational ``exp(-mu)`` so the exact backend
stays exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.stats import poisson as _poisson

from .combinatorics import is_rational

__all__ = [
    "PhotonPrior",
    "Poisson",
    "Thermal",
    "SqueezedGain",
    "Custom",
    "prior_pmf",
    "truncation_bound",
    "parse_prior",
    "DEFAULT_TAIL_TOL",
]

DEFAULT_TAIL_TOL = 1e-12


class PhotonPrior:
    """Base class. ``n_max`` is ``None`` for priors with unbounded support."""

    n_max: int | None = None

    @property
    def rational(self) -> bool:
        return False

    def pmf(self, n: int):
        raise NotImplementedError

    def log_pmf(self, n: int) -> float:
        p = self.pmf(n)
        return math.log(p) if p > 0 else -math.inf

    def weight(self, n: int):
        return self.pmf(n)

    def tail(self, n: int) -> float:
        """Prior mass strictly above ``n``."""
        raise NotImplementedError

    def describe(self) -> str:
        raise NotImplementedError

    def _check(self, n):
        if n < 0:
            raise ValueError(f"photon number must be non-negative, got {n}")
        if self.n_max is not None and n > self.n_max:
            raise ValueError(f"N={n} lies beyond the prior's truncation at {self.n_max}")


@dataclass(frozen=True)
class Poisson(PhotonPrior):
    """Coherent-state photon statistics with mean ``mu``."""

    mu: float

    def __post_init__(self):
        if not self.mu >= 0 or math.isinf(self.mu):
            raise ValueError(f"Poisson mean must be finite and non-negative, got {self.mu}")

    @property
    def rational(self) -> bool:
        return is_rational(self.mu)

    def pmf(self, n: int) -> float:
        return math.exp(self.log_pmf(n))

    def log_pmf(self, n: int) -> float:
        self._check(n)
        if self.mu == 0:
            return 0.0 if n == 0 else -math.inf
        return n * math.log(self.mu) - float(self.mu) - math.lgamma(n + 1)

    def weight(self, n: int):
        if self.rational:
            self._check(n)
            return Fraction(self.mu) ** n / math.factorial(n)
        return self.pmf(n)

    @property
    def weight_scale(self) -> float:
        """Factor turning :meth:`weight` into :meth:`pmf`."""
        return math.exp(-float(self.mu)) if self.rational else 1.0

    def tail(self, n: int) -> float:
        return float(_poisson.sf(n, float(self.mu)))

    def describe(self) -> str:
        return f"poisson:mu={self.mu}"


@dataclass(frozen=True)
class Thermal(PhotonPrior):
    """Bose-Einstein statistics, ``mu^N / (mu+1)^(N+1)``."""

    mu: float

    def __post_init__(self):
        if not self.mu >= 0:
            raise ValueError(f"thermal mean must be non-negative, got {self.mu}")

    @property
    def rational(self) -> bool:
        return is_rational(self.mu)

    @property
    def ratio(self):
        """``mu/(mu+1)``, the geometric ratio of successive masses."""
        if self.rational:
            return Fraction(self.mu) / (Fraction(self.mu) + 1)
        if math.isinf(self.mu):
            return 1.0
        return self.mu / (self.mu + 1.0)

    def pmf(self, n: int):
        self._check(n)
        if self.rational:
            mu = Fraction(self.mu)
            return mu**n / (mu + 1) ** (n + 1)
        return math.exp(self.log_pmf(n))

    def log_pmf(self, n: int) -> float:
        self._check(n)
        mu = float(self.mu)
        if mu == 0:
            return 0.0 if n == 0 else -math.inf
        # log(mu/(mu+1)) written to stay accurate for very large mu
        return -n * math.log1p(1.0 / mu) - math.log1p(mu)

    def tail(self, n: int):
        r = self.ratio
        return r ** (n + 1)

    def describe(self) -> str:
        return f"thermal:mu={self.mu}"


@dataclass(frozen=True, init=False)
class SqueezedGain(Thermal):
    """One arm of a two-mode squeezed vacuum with gain ``g``.

    The photon-number distribution per mode is thermal with mean
    ``sinh(g)^2``; the squeezing phase does not enter.
    """

    g: float = 0.0

    def __init__(self, g: float):
        if not g >= 0:
            raise ValueError(f"gain must be non-negative, got {g}")
        object.__setattr__(self, "g", float(g))
        object.__setattr__(self, "mu", math.sinh(g) ** 2)

    def describe(self) -> str:
        return f"squeezed:g={self.g}"


@dataclass(frozen=True, eq=False)
class Custom(PhotonPrior):
    """Finite prior from non-negative weights over ``N = 0..len(weights)-1``."""

    weights: tuple

    def __init__(self, weights: Sequence):
        weights = tuple(weights)
        if not weights:
            raise ValueError("custom prior needs at least one weight")
        if any(not w >= 0 for w in weights):
            raise ValueError("custom prior weights must be non-negative")
        total = sum(weights)
        if not (total > 0 and math.isfinite(total)):
            raise ValueError("custom prior weights must have a positive finite sum")
        object.__setattr__(self, "weights", weights)

    def __eq__(self, other):
        return isinstance(other, Custom) and self.weights == other.weights

    def __hash__(self):
        return hash(self.weights)

    @property
    def n_max(self) -> int:
        return len(self.weights) - 1

    @property
    def rational(self) -> bool:
        return all(is_rational(w) for w in self.weights)

    def pmf(self, n: int):
        self._check(n)
        if self.rational:
            return Fraction(self.weights[n]) / sum(self.weights)
        return float(self.weights[n]) / float(sum(self.weights))

    def weight(self, n: int):
        self._check(n)
        return Fraction(self.weights[n]) if self.rational else float(self.weights[n])

    def tail(self, n: int):
        return sum(self.weights[n + 1 :]) / sum(self.weights)

    def describe(self) -> str:
        return "custom:" + ",".join(str(w) for w in self.weights)


def prior_pmf(prior: PhotonPrior, n: int):
    """Prior mass at ``n``."""
    return prior.pmf(n)


def truncation_bound(prior: PhotonPrior, tail_tol: float = DEFAULT_TAIL_TOL) -> int:
    """Smallest ``N_max`` whose tail mass above ``N_max`` is at most ``tail_tol``."""
    if not 0 < tail_tol < 1:
        raise ValueError(f"tail tolerance must lie in (0, 1), got {tail_tol}")
    if isinstance(prior, Custom):
        raise TypeError("custom priors already have finite support")
    if prior.mu == 0:
        return 0
    if isinstance(prior, Thermal):
        r = prior.ratio
        if r == 1:
            raise ValueError("infinite thermal mean has no finite truncation")
        # closed-form guess, then settle the boundary with the prior's own
        # (exact for rational mu) tail evaluation
        n = max(0, math.ceil(math.log(tail_tol) / math.log(float(r))) - 1)
        while n > 0 and prior.tail(n - 1) <= tail_tol:
            n -= 1
        while prior.tail(n) > tail_tol:
            n += 1
        return n
    n = max(0, int(float(prior.mu)))
    while prior.tail(n) > tail_tol:
        n += max(1, int(math.sqrt(float(prior.mu))))
    while n > 0 and prior.tail(n - 1) <= tail_tol:
        n -= 1
    return n


def _parse_number(text: str, exact: bool):
    text = text.strip()
    if exact:
        return Fraction(text)
    value = float(text)
    return value


def parse_prior(text: str, exact: bool = False) -> PhotonPrior:
    """Parse ``poisson:mu=2``, ``thermal:mu=0.5``, ``squeezed:g=1`` or
    ``custom:1,2,1``.

    With ``exact=True`` numbers are read as exact decimals (``"0.1"`` becomes
    ``1/10``). Squeezed priors have an irrational mean and stay floating.
    """
    kind, sep, rest = text.partition(":")
    kind = kind.strip().lower()
    if not sep:
        raise ValueError(f"prior {text!r} is missing ':'")
    try:
        if kind == "custom":
            return Custom([_parse_number(w, exact) for w in rest.split(",")])
        key, eq, value = rest.partition("=")
        key = key.strip()
        if not eq:
            raise ValueError(f"prior {text!r} is missing '='")
        if kind == "poisson" and key == "mu":
            return Poisson(_parse_number(value, exact))
        if kind == "thermal" and key == "mu":
            return Thermal(_parse_number(value, exact))
        if kind == "squeezed" and key == "g":
            if exact:
                raise ValueError("squeezed priors have an irrational mean; drop --exact")
            return SqueezedGain(float(value))
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"invalid prior {text!r}: {exc}") from None
    raise ValueError(f"unknown prior {text!r}")


def prior_weights(prior: PhotonPrior, n_max: int):
    """Unnormalized weights for ``N = 0..n_max``."""
    return [prior.weight(n) for n in range(n_max + 1)]


def log_prior_vector(prior: PhotonPrior, n_max: int) -> np.ndarray:
    return np.array([prior.log_pmf(n) for n in range(n_max + 1)])
