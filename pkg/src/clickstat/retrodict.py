"""Bayesian retrodiction of the photon number from an observed click count."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

import numpy as np
from scipy.special import logsumexp

from .clickmodel import DetectorBank, likelihood, log_likelihood
from .combinatorics import stirling2
from .priors import DEFAULT_TAIL_TOL, Custom, PhotonPrior, Poisson, log_prior_vector, truncation_bound

__all__ = [
    "ImpossibleObservation",
    "Posterior",
    "PosteriorSummary",
    "retrodict",
    "retrodict_poisson_ideal",
    "retrodict_thermal_ideal",
    "posterior_summary",
    "choose_cutoff",
    "MAX_PHOTONS",
]

# Hard ceiling on the photon-number cutoff; the float column costs O(C * N_max^2).
MAX_PHOTONS = 4096


class ImpossibleObservation(ValueError):
    """No photon number with prior support can produce the observed clicks."""


@dataclass(frozen=True)
class Posterior:
    clicks: int
    bank: DetectorBank
    prior: PhotonPrior
    probs: Union[tuple, np.ndarray]
    evidence: float

    @property
    def exact(self) -> bool:
        return isinstance(self.probs, tuple)

    @property
    def n_max(self) -> int:
        return len(self.probs) - 1

    def __getitem__(self, n: int):
        return self.probs[n] if n <= self.n_max else 0 * self.probs[0]

    def __len__(self):
        return len(self.probs)


@dataclass(frozen=True)
class PosteriorSummary:
    mode: int
    mean: float
    mode_probability: float


def _likelihood_tail(bank: DetectorBank, clicks: int, n: int) -> float:
    """Upper bound on ``sum_{N > n} P(clicks | N)``.

    Any outcome with ``clicks < D`` leaves some ``D - clicks`` detectors dark,
    which needs every photon to miss them or be lost; a union bound over
    those detector sets gives a geometric series. Returns ``inf`` when the
    likelihood does not decay.
    """
    dark = bank.count - clicks
    q = 1.0 - dark * float(bank.eta) / bank.count
    if dark == 0 or q >= 1.0:
        return math.inf
    if q <= 0.0:
        return 0.0
    return math.comb(bank.count, dark) * q ** (n + 1) / (1.0 - q)


def _smallest_cutoff(bank, clicks, target) -> int | None:
    dark = bank.count - clicks
    q = 1.0 - dark * float(bank.eta) / bank.count
    if dark == 0 or q >= 1.0:
        return None
    if q <= 0.0:
        return clicks
    n = math.ceil(math.log(target * (1.0 - q) / math.comb(bank.count, dark)) / math.log(q)) - 1
    n = max(n, clicks, 0)
    while n > 0 and _likelihood_tail(bank, clicks, n - 1) <= target:
        n -= 1
    while _likelihood_tail(bank, clicks, n) > target:
        n += 1
    return n


def choose_cutoff(bank: DetectorBank, prior: PhotonPrior, clicks: int, tail_tol: float, evidence=None) -> int:
    """Photon-number cutoff whose neglected posterior mass is below ``tail_tol``.

    The neglected joint mass is bounded both by the prior tail and by the
    likelihood tail; the smaller cutoff wins. ``evidence`` (when known)
    turns the absolute likelihood bound into a relative one.
    """
    if isinstance(prior, Custom):
        return prior.n_max
    cutoff = truncation_bound(prior, tail_tol) if prior.mu != math.inf else None
    target = tail_tol * (1.0 if evidence is None else min(1.0, float(evidence)))
    if target > 0:
        lik = _smallest_cutoff(bank, clicks, target)
        if lik is not None:
            cutoff = lik if cutoff is None else min(cutoff, lik)
    if cutoff is None:
        raise ValueError("likelihood and prior both have unbounded tails; pass n_max explicitly")
    return cutoff


def _bayes(bank, prior, clicks, n_max, exact):
    if exact:
        column = likelihood(bank, clicks, n_max, exact=True)
        joint = [column[n] * prior.weight(n) for n in range(n_max + 1)]
        total = sum(joint, Fraction(0))
        if total == 0:
            raise ImpossibleObservation(f"{clicks} clicks cannot occur under {prior.describe()} with {bank}")
        probs = tuple(x / total for x in joint)
        evidence = total * _weight_scale(prior)
        return probs, evidence
    logs = log_likelihood(bank, clicks, n_max) + log_prior_vector(prior, n_max)
    log_evidence = logsumexp(logs)
    if log_evidence == -math.inf:
        raise ImpossibleObservation(f"{clicks} clicks cannot occur under {prior.describe()} with {bank}")
    return np.exp(logs - log_evidence), float(np.exp(log_evidence))


def _weight_scale(prior):
    if isinstance(prior, Poisson) and prior.rational:
        return prior.weight_scale  # exp(-mu) is irrational; evidence goes float
    if isinstance(prior, Custom):
        return 1 / sum(Fraction(w) for w in prior.weights)
    return 1


def retrodict(
    bank: DetectorBank,
    prior: PhotonPrior,
    clicks: int,
    tail_tol: float = DEFAULT_TAIL_TOL,
    n_max: int | None = None,
    exact: bool | None = None,
    max_photons: int = MAX_PHOTONS,
) -> Posterior:
    """Posterior ``P(N | clicks)`` by Bayes' rule over ``N = 0..n_max``.

    Likelihoods come from the full noisy click model. When ``n_max`` is not
    given it is chosen so the neglected posterior mass stays below
    ``tail_tol``. Raises :class:`ImpossibleObservation` if the evidence is 0.
    """
    if not 0 <= clicks <= bank.count:
        raise ValueError(f"clicks must lie in [0, {bank.count}], got {clicks}")
    if exact is None:
        exact = bank.is_rational and prior.rational
    elif exact and not prior.rational:
        raise ValueError(f"{prior.describe()} is not rational; use the floating backend")
    if n_max is None:
        n_max = choose_cutoff(bank, prior, clicks, tail_tol)
        if n_max > max_photons:
            raise ValueError(f"photon cutoff {n_max} exceeds max_photons={max_photons}")
        probs, evidence = _bayes(bank, prior, clicks, n_max, exact)
        # the relative likelihood bound needs the evidence; one refinement
        # is enough because evidence only grows with the cutoff
        refined = choose_cutoff(bank, prior, clicks, tail_tol, evidence)
        if refined > n_max:
            if refined > max_photons:
                raise ValueError(f"photon cutoff {refined} exceeds max_photons={max_photons}")
            n_max = refined
            probs, evidence = _bayes(bank, prior, clicks, n_max, exact)
    else:
        if prior.n_max is not None and n_max > prior.n_max:
            n_max = prior.n_max
        probs, evidence = _bayes(bank, prior, clicks, n_max, exact)
    return Posterior(clicks, bank, prior, probs, evidence)


def _check_closed_form(detectors, mu, clicks, n):
    if detectors < 1:
        raise ValueError("need at least one detector")
    if not 0 <= clicks <= detectors:
        raise ValueError(f"clicks must lie in [0, {detectors}], got {clicks}")
    if n < 0:
        raise ValueError("photon number must be non-negative")
    if not mu >= 0:
        raise ValueError(f"mean photon number must be non-negative, got {mu}")
    if mu == 0 and clicks > 0:
        raise ImpossibleObservation("clicks observed from vacuum with ideal detectors")


def retrodict_poisson_ideal(detectors: int, mu: float, clicks: int, n: int) -> float:
    """Ideal-detector posterior under a Poisson prior, in closed form.

    With ``x = mu / D``: ``C! S(N, C) x^N / (N! (e^x - 1)^C)``.
    """
    _check_closed_form(detectors, mu, clicks, n)
    if clicks == 0 or mu == 0:
        return 1.0 if n == 0 else 0.0
    s = stirling2(n, clicks)
    if s == 0:
        return 0.0
    x = float(mu) / detectors
    log_value = (
        math.log(math.factorial(clicks) * s)
        - math.lgamma(n + 1)
        + n * math.log(x)
        - clicks * math.log(math.expm1(x))
    )
    return math.exp(log_value)


def retrodict_thermal_ideal(detectors: int, mu, clicks: int, n: int, exact: bool | None = None):
    """Ideal-detector posterior under a thermal prior, in closed form.

    With ``a = D + D/mu``: ``S(N, C) a^-N (a-1)(a-2)...(a-C)``. Exact for
    rational ``mu``; ``mu = inf`` gives the flat-prior limit ``a = D``
    (which needs ``C < D``).
    """
    _check_closed_form(detectors, mu, clicks, n)
    if clicks == 0 or mu == 0:
        value = 1 if n == 0 else 0
        return Fraction(value) if (exact or (exact is None and isinstance(mu, (int, Fraction)))) else float(value)
    if exact is None:
        exact = isinstance(mu, (int, Fraction))
    s = stirling2(n, clicks)
    if exact:
        a = detectors + detectors / Fraction(mu)
        falling = Fraction(1)
        for j in range(1, clicks + 1):
            falling *= a - j
        return s * falling / a**n
    a = detectors + (0.0 if math.isinf(mu) else detectors / float(mu))
    if a - clicks <= 0:
        raise ValueError("flat-prior limit is improper when every detector clicks")
    if s == 0:
        return 0.0
    log_value = math.log(s) - n * math.log(a) + sum(math.log(a - j) for j in range(1, clicks + 1))
    return math.exp(log_value)


def posterior_summary(posterior) -> PosteriorSummary:
    """Mode, mean and the mass at the mode. Ties go to the smaller ``N``."""
    probs = posterior.probs if isinstance(posterior, Posterior) else posterior
    mode = 0
    for n, p in enumerate(probs):
        if p > probs[mode]:
            mode = n
    mean = sum(n * p for n, p in enumerate(probs))
    return PosteriorSummary(mode, mean, probs[mode])
