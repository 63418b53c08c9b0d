"""Combinatorial primitives shared by the click model.

Two backends live side by side. The exact backend works on Python integers
and :class:`fractions.Fraction`; the floating backend works in the log
domain so that very small probabilities survive products of many factors.
"""

from __future__ import annotations

import math
import numbers
import threading
import warnings
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy.special import gammaln, xlog1py, xlogy

__all__ = [
    "StirlingTable",
    "stirling2",
    "stirling_table",
    "log_stirling2_table",
    "binom_pmf",
    "log_binom_pmf",
    "log_binom_pmf_vector",
    "log_binom_pmf_matrix",
    "falling_factorial",
    "is_rational",
    "resolve_exact",
]


def is_rational(x) -> bool:
    return isinstance(x, numbers.Rational)


def resolve_exact(exact, *params):
    """Choose a backend and coerce ``params`` to match it.

    ``exact=None`` picks the exact backend when every parameter is an int or
    Fraction. Forcing ``exact=True`` on floats converts them by their binary
    value, which is rarely what a caller means, so a warning is emitted.
    """
    if exact is None:
        exact = all(is_rational(p) for p in params)
    if exact:
        inexact = [p for p in params if not is_rational(p)]
        if inexact:
            warnings.warn(
                f"converting float parameters {inexact} to exact rationals by binary value; "
                "pass Fraction('0.6')-style values to avoid representation error",
                stacklevel=3,
            )
        return True, tuple(Fraction(p) for p in params)
    return False, tuple(float(p) for p in params)


class StirlingTable:
    """Immutable table of Stirling numbers of the second kind.

    Rows ``0..max_n`` and columns ``0..max_k`` are filled with the recurrence
    ``S(n+1, k) = k S(n, k) + S(n, k-1)``. Entries are exact Python ints.
    """

    __slots__ = ("max_n", "max_k", "_rows")

    def __init__(self, max_n: int, max_k: int | None = None):
        if max_n < 0:
            raise ValueError("max_n must be non-negative")
        if max_k is None:
            max_k = max_n
        if max_k < 0:
            raise ValueError("max_k must be non-negative")
        self.max_n = max_n
        self.max_k = max_k
        row = [1] + [0] * max_k
        rows = [tuple(row)]
        for _ in range(max_n):
            new = [0] * (max_k + 1)
            for k in range(1, max_k + 1):
                new[k] = k * row[k] + row[k - 1]
            row = new
            rows.append(tuple(row))
        self._rows = tuple(rows)

    def __getitem__(self, nk: tuple[int, int]) -> int:
        n, k = nk
        if not (0 <= n <= self.max_n and 0 <= k <= self.max_k):
            raise IndexError(f"S({n}, {k}) outside table of size ({self.max_n}, {self.max_k})")
        return self._rows[n][k]

    def row(self, n: int) -> tuple[int, ...]:
        return self._rows[n]

    def __repr__(self):
        return f"StirlingTable(max_n={self.max_n}, max_k={self.max_k})"


def _ceil_pow2(n: int) -> int:
    return 1 << max(n, 1).bit_length() if n & (n - 1) else max(n, 1)


@lru_cache(maxsize=32)
def stirling_table(max_n: int, max_k: int) -> StirlingTable:
    """Cached :class:`StirlingTable` of at least the requested size."""
    return StirlingTable(max_n, max_k)


_table_lock = threading.Lock()


def stirling2(n: int, k: int) -> int:
    """Stirling number of the second kind ``S(n, k)``, with ``S(0, 0) = 1``."""
    if n < 0 or k < 0:
        raise ValueError("stirling2 requires n >= 0 and k >= 0")
    if k > n:
        return 0
    if k == 0:
        return 1 if n == 0 else 0
    # Sizes are rounded up so nearby queries share one cached table.
    with _table_lock:
        table = stirling_table(_ceil_pow2(n), _ceil_pow2(k))
    return table[n, k]


@lru_cache(maxsize=64)
def log_stirling2_table(max_n: int, max_k: int) -> np.ndarray:
    """``log S(n, k)`` for ``0 <= n <= max_n``, ``0 <= k <= max_k``.

    The recurrence is run directly in the log domain; every term is
    non-negative so there is no cancellation. Zero entries are ``-inf``.
    The returned array is read-only because it is shared through the cache.
    """
    table = np.full((max_n + 1, max_k + 1), -np.inf)
    table[0, 0] = 0.0
    logk = np.log(np.arange(1, max_k + 1, dtype=float))
    with np.errstate(divide="ignore"):
        for n in range(1, max_n + 1):
            prev = table[n - 1]
            table[n, 1:] = np.logaddexp(logk + prev[1:], prev[:-1])
    table.flags.writeable = False
    return table


def _check_binom_args(m, n, xi):
    if n < 0 or m < 0 or m > n:
        raise ValueError(f"binomial pmf needs 0 <= m <= n, got m={m}, n={n}")
    if not 0 <= xi <= 1:
        raise ValueError(f"success probability must lie in [0, 1], got {xi}")


def binom_pmf(m: int, n: int, xi):
    """``C(n, m) xi^m (1-xi)^(n-m)``; a Fraction when ``xi`` is rational."""
    _check_binom_args(m, n, xi)
    if is_rational(xi):
        xi = Fraction(xi)
        return math.comb(n, m) * xi**m * (1 - xi) ** (n - m)
    xi = float(xi)
    return math.comb(n, m) * xi**m * (1.0 - xi) ** (n - m)


def log_binom_pmf(m: int, n: int, xi) -> float:
    _check_binom_args(m, n, xi)
    xi = float(xi)
    out = math.log(math.comb(n, m))
    # 0 * log(0) is taken as 0, matching the 0^0 = 1 convention.
    if m:
        if xi == 0.0:
            return -math.inf
        out += m * math.log(xi)
    if n - m:
        if xi == 1.0:
            return -math.inf
        out += (n - m) * math.log1p(-xi)
    return out


def log_binom_pmf_vector(n: int, xi: float) -> np.ndarray:
    """``log p_xi(m|n)`` for every ``m = 0..n`` as an array."""
    return _log_binom_grid(np.float64(n), np.arange(n + 1, dtype=float), xi)


def log_binom_pmf_matrix(rows: int, xi: float) -> np.ndarray:
    """``M[n, m] = log p_xi(m|n)`` for ``0 <= m, n <= rows``; ``-inf`` above the diagonal."""
    n = np.arange(rows + 1, dtype=float)[:, None]
    m = np.arange(rows + 1, dtype=float)[None, :]
    return _log_binom_grid(n, m, xi)


def _log_binom_grid(n, m, xi) -> np.ndarray:
    xi = float(xi)
    if not 0 <= xi <= 1:
        raise ValueError(f"success probability must lie in [0, 1], got {xi}")
    n, m = np.broadcast_arrays(n, m)
    below = m <= n
    rest = np.where(below, n - m, 0.0)
    out = gammaln(n + 1) - gammaln(m + 1) - gammaln(rest + 1) + xlogy(m, xi) + xlog1py(rest, -xi)
    return np.where(below, out, -np.inf)


def falling_factorial(x: int, k: int) -> int:
    """``x (x-1) ... (x-k+1)``; 1 for ``k = 0`` and 0 once a factor hits zero."""
    if k < 0:
        raise ValueError("falling_factorial requires k >= 0")
    if x >= 0:
        return math.perm(x, k)
    out = 1
    for i in range(k):
        out *= x - i
    return out
