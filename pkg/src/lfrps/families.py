"""Zero-truncated power series compounding laws.

Each family is a discrete distribution P(N=n) = a_n theta^n / C(theta) on
n = 1, 2, ..., defined by its coefficient sequence a_n and generating
function C(theta) = sum_n a_n theta^n.  Everything the rest of the package
needs from the compounding law lives here: C and its first three
derivatives, the inverse of C, the pmf, and the parameter domain.

All C-function evaluations use closed forms.  The geometric family
additionally admits an extended parameter range theta < 1 (theta != 0)
under which the compound density stays valid even though the pmf no
longer does; the pmf therefore always enforces the native domain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Tuple

import numpy as np

__all__ = ["DomainError", "Family"]


class DomainError(ValueError):
    """Parameter outside the family's domain."""


GEOMETRIC = "geometric"
POISSON = "poisson"
LOGARITHMIC = "logarithmic"
BINOMIAL = "binomial"
DEGENERATE = "degenerate"

_KINDS = (GEOMETRIC, POISSON, LOGARITHMIC, BINOMIAL, DEGENERATE)

# integer codes shared with the compiled EM kernel
KIND_CODES = {k: i for i, k in enumerate(_KINDS)}


@dataclass(frozen=True)
class Family:
    """A power-series compounding family.

    ``m`` is only meaningful for the binomial variant, where it is a fixed
    structural constant (number of replicas), never an estimated parameter.
    """

    kind: str
    m: int = 1

    def __post_init__(self) -> None:
        if self.kind not in _KINDS:
            raise DomainError(f"unknown family kind {self.kind!r}")
        if self.kind == BINOMIAL and (self.m < 1 or self.m != int(self.m)):
            raise DomainError(f"binomial family needs integer m >= 1, got {self.m}")

    # -- construction helpers ------------------------------------------------

    @classmethod
    def geometric(cls) -> "Family":
        return cls(GEOMETRIC)

    @classmethod
    def poisson(cls) -> "Family":
        return cls(POISSON)

    @classmethod
    def logarithmic(cls) -> "Family":
        return cls(LOGARITHMIC)

    @classmethod
    def binomial(cls, m: int) -> "Family":
        return cls(BINOMIAL, m=int(m))

    @classmethod
    def degenerate(cls) -> "Family":
        return cls(DEGENERATE)

    @classmethod
    def parse(cls, spec: str) -> "Family":
        """Parse a CLI-style family name: geometric|poisson|logarithmic|binomial:m|degenerate."""
        spec = spec.strip().lower()
        if spec.startswith("binomial"):
            _, sep, mtxt = spec.partition(":")
            if not sep:
                raise DomainError("binomial family requires 'binomial:m' syntax")
            try:
                m = int(mtxt)
            except ValueError:
                raise DomainError(f"invalid binomial m {mtxt!r}") from None
            return cls.binomial(m)
        if spec not in _KINDS:
            raise DomainError(f"unknown family {spec!r}")
        return cls(spec)

    @property
    def name(self) -> str:
        if self.kind == BINOMIAL:
            return f"binomial:{self.m}"
        return self.kind

    @property
    def code(self) -> int:
        return KIND_CODES[self.kind]

    # -- parameter domain ----------------------------------------------------

    def theta_bounds(self, extended: bool = False) -> Tuple[float, float]:
        """Open interval of admissible theta.

        ``extended=True`` widens the geometric domain to theta < 1 (theta=0
        excluded separately) which keeps the compound cdf valid; all other
        families keep their native domain.
        """
        if self.kind == GEOMETRIC:
            return (-math.inf if extended else 0.0, 1.0)
        if self.kind == LOGARITHMIC:
            return (0.0, 1.0)
        # poisson, binomial, degenerate
        return (0.0, math.inf)

    def contains(self, theta: float, extended: bool = False) -> bool:
        lo, hi = self.theta_bounds(extended)
        if self.kind == GEOMETRIC and extended and theta == 0.0:
            return False
        return lo < theta < hi

    def check_theta(self, theta: float, extended: bool = False) -> None:
        if not self.contains(theta, extended):
            lo, hi = self.theta_bounds(extended)
            raise DomainError(
                f"theta={theta!r} outside the {self.name} domain ({lo}, {hi})"
                + (" excluding 0" if self.kind == GEOMETRIC and extended else "")
            )

    def default_theta(self) -> float:
        """Scale-free mid-domain starting value for estimation."""
        if self.kind in (GEOMETRIC, LOGARITHMIC):
            return 0.5
        return 1.0

    # -- generating function -------------------------------------------------

    def c(self, theta: float, order: int = 0) -> float:
        """C(theta) and its first three derivatives, closed form.

        The geometric family is evaluated on its extended domain theta < 1;
        the other families insist on their native domain.
        """
        if order not in (0, 1, 2, 3):
            raise ValueError(f"order must be in 0..3, got {order}")
        self.check_theta(theta, extended=True)
        if self.kind == GEOMETRIC:
            q = 1.0 - theta
            if order == 0:
                return theta / q
            return math.factorial(order) / q ** (order + 1)
        if self.kind == POISSON:
            return math.expm1(theta) if order == 0 else math.exp(theta)
        if self.kind == LOGARITHMIC:
            q = 1.0 - theta
            if order == 0:
                return -math.log1p(-theta)
            return math.factorial(order - 1) / q ** order
        if self.kind == BINOMIAL:
            m = self.m
            if order == 0:
                return math.expm1(m * math.log1p(theta))
            coef = 1.0
            for j in range(order):
                coef *= m - j
            return coef * (1.0 + theta) ** (m - order)
        # degenerate: C(theta) = theta
        return (theta, 1.0, 0.0, 0.0)[order]

    def c_inverse(self, y: float) -> float:
        """Inverse of C, closed form per family.

        For the geometric family negative y is admissible (it corresponds to
        extended theta < 0); the other families require y > 0.
        """
        if self.kind == GEOMETRIC:
            if y <= -1.0:
                raise DomainError(f"y={y!r} outside the range of geometric C")
            return y / (1.0 + y)
        if y <= 0.0:
            raise DomainError(f"y={y!r} outside the range of {self.name} C (y > 0)")
        if self.kind == POISSON:
            return math.log1p(y)
        if self.kind == LOGARITHMIC:
            if y >= 745.0:  # exp(-y) underflows; theta would round to 1
                raise DomainError(f"y={y!r} too large for logarithmic inverse")
            theta = -math.expm1(-y)
            return theta
        if self.kind == BINOMIAL:
            return math.expm1(math.log1p(y) / self.m)
        return y

    def theta_over_c(self, theta: float) -> float:
        """theta / C(theta), stable closed form (positive on the extended domain)."""
        self.check_theta(theta, extended=True)
        if self.kind == GEOMETRIC:
            return 1.0 - theta
        if self.kind == DEGENERATE:
            return 1.0
        return theta / self.c(theta)

    def log_theta_over_c(self, theta: float) -> float:
        """log(theta / C(theta)); the form in which theta enters the log-likelihood."""
        if self.kind == GEOMETRIC:
            self.check_theta(theta, extended=True)
            return math.log1p(-theta)
        return math.log(self.theta_over_c(theta))

    def ratio_uc1_over_c(self, u: float) -> float:
        """u * C'(u) / C(u), with its u -> 0 limit (= 1) handled explicitly.

        This is the hazard shape factor; it stays finite where C(u) itself
        underflows, which keeps hazard evaluation safe far in the tail.
        """
        if u == 0.0:
            return 1.0
        if self.kind == GEOMETRIC:
            return 1.0 / (1.0 - u)
        if self.kind == POISSON:
            return u / -math.expm1(-u)
        if self.kind == LOGARITHMIC:
            return u / ((1.0 - u) * -math.log1p(-u))
        if self.kind == BINOMIAL:
            return u * self.m * (1.0 + u) ** (self.m - 1) / math.expm1(self.m * math.log1p(u))
        return 1.0

    # -- vectorized forms (same closed forms, numpy arrays) -------------------

    def c_vec(self, u, order: int = 0):
        """Vectorized c(); no domain checks, callers stay inside the domain."""
        u = np.asarray(u, dtype=float)
        if self.kind == GEOMETRIC:
            q = 1.0 - u
            return u / q if order == 0 else math.factorial(order) / q ** (order + 1)
        if self.kind == POISSON:
            return np.expm1(u) if order == 0 else np.exp(u)
        if self.kind == LOGARITHMIC:
            q = 1.0 - u
            if order == 0:
                return -np.log1p(-u)
            return math.factorial(order - 1) / q ** order
        if self.kind == BINOMIAL:
            m = self.m
            if order == 0:
                return np.expm1(m * np.log1p(u))
            coef = 1.0
            for j in range(order):
                coef *= m - j
            return coef * (1.0 + u) ** (m - order)
        return (u, np.ones_like(u), np.zeros_like(u), np.zeros_like(u))[order]

    def c_inverse_vec(self, y):
        y = np.asarray(y, dtype=float)
        if self.kind == GEOMETRIC:
            return y / (1.0 + y)
        if self.kind == POISSON:
            return np.log1p(y)
        if self.kind == LOGARITHMIC:
            return -np.expm1(-y)
        if self.kind == BINOMIAL:
            return np.expm1(np.log1p(y) / self.m)
        return y

    def ratio_uc1_over_c_vec(self, u):
        """Vectorized u C'(u)/C(u) with the u -> 0 limit patched to 1."""
        u = np.asarray(u, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            if self.kind == GEOMETRIC:
                r = 1.0 / (1.0 - u)
            elif self.kind == POISSON:
                r = u / -np.expm1(-u)
            elif self.kind == LOGARITHMIC:
                r = u / ((1.0 - u) * -np.log1p(-u))
            elif self.kind == BINOMIAL:
                r = u * self.m * (1.0 + u) ** (self.m - 1) / np.expm1(self.m * np.log1p(u))
            else:
                r = np.ones_like(u)
        return np.where(u == 0.0, 1.0, r)

    # -- pmf -----------------------------------------------------------------

    def coefficient(self, n: int) -> float:
        """The series coefficient a_n."""
        if n < 1 or n != int(n):
            raise ValueError(f"n must be a positive integer, got {n}")
        if self.kind == GEOMETRIC:
            return 1.0
        if self.kind == POISSON:
            return 1.0 / math.factorial(n) if n <= 170 else math.exp(-math.lgamma(n + 1))
        if self.kind == LOGARITHMIC:
            return 1.0 / n
        if self.kind == BINOMIAL:
            return float(math.comb(self.m, n)) if n <= self.m else 0.0
        return 1.0 if n == 1 else 0.0

    def pmf(self, theta: float, n: int) -> float:
        """P(N = n) = a_n theta^n / C(theta), native domain only."""
        if n < 1 or n != int(n):
            raise ValueError(f"n must be a positive integer, got {n}")
        self.check_theta(theta)
        if self.kind == POISSON:
            # theta^n / n! in log scale to survive large n
            logp = n * math.log(theta) - math.lgamma(n + 1) - math.log(self.c(theta))
            return math.exp(logp)
        return self.coefficient(n) * theta ** n / self.c(theta)

    def pmf_terms(self, theta: float, tail_tol: float = 1e-12,
                  n_max: int = 10 ** 6) -> Iterator[Tuple[int, float]]:
        """Yield (n, pmf) until the cumulative mass exceeds 1 - tail_tol.

        Geometric and logarithmic tails with theta near 1 decay slowly,
        hence the generous n_max cutoff.
        """
        self.check_theta(theta)
        total = 0.0
        for n in range(1, n_max + 1):
            p = self.pmf(theta, n)
            yield n, p
            total += p
            if total >= 1.0 - tail_tol:
                return
            if self.kind == BINOMIAL and n >= self.m:
                return
            if self.kind == DEGENERATE:
                return
