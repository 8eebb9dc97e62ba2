"""Closed-form constants and critical exponents for

    Δu + μ|x|⁻²u + |x|ˡ|u|^{p−1}u = 0   in R^N.

Everything here is a pure function of (N, l, μ, p). An infinite critical
exponent is returned as ``math.inf``; serializers turn it into the literal
string ``"inf"``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from scipy.optimize import bisect

#: smallest admissible p - 1 for exponent computations
P_FLOOR = 1e-9

RTOL_IDENTITY = 1e-12
RTOL_ROOT = 1e-12


class ParameterError(ValueError):
    """Raised when (N, l, mu, p) violate the equation's preconditions."""


def mu_bar(N: int) -> float:
    return (N - 2) ** 2 / 4.0


def sobolev_exponent(N: int, l: float) -> float:
    """(N + 2 + 2l)/(N - 2)."""
    return (N + 2 + 2 * l) / (N - 2)


def _check_Nlmu(N, l, mu):
    if int(N) != N or N < 3:
        raise ParameterError(f"N must be an integer >= 3 (got N={N})")
    if not l > -2:
        raise ParameterError(f"l must satisfy l > -2 (got l={l})")
    if not mu < mu_bar(N):
        raise ParameterError(
            f"mu must satisfy mu < (N-2)^2/4 = {mu_bar(N)} (got mu={mu})")


@dataclass(frozen=True)
class Parameters:
    """A point (N, l, mu, p) of the parameter space."""

    N: int
    l: float
    mu: float
    p: float

    def __post_init__(self):
        _check_Nlmu(self.N, self.l, self.mu)
        if not self.p > 1:
            raise ParameterError(f"p must satisfy p > 1 (got p={self.p})")
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "l", float(self.l))
        object.__setattr__(self, "mu", float(self.mu))
        object.__setattr__(self, "p", float(self.p))

    @property
    def mu_bar(self) -> float:
        return mu_bar(self.N)

    def as_dict(self) -> dict:
        return {"N": self.N, "l": self.l, "mu": self.mu, "p": self.p}


@dataclass(frozen=True)
class DerivedConstants:
    params: Parameters
    mu_bar: float
    mu_plus: float
    l_minus: float
    m: float  # (l+2)/(p-1), the Emden-Fowler scaling exponent
    A: float
    L_pow: float
    nu_minus: float
    nu_plus: float
    w0: Optional[float]
    sobolev_p: float

    @property
    def has_w0(self) -> bool:
        return self.w0 is not None

    @property
    def gap(self) -> float:
        """L^{p-1} - mu, the linear coefficient of the phase system."""
        return self.L_pow - self.params.mu


def nu_roots(N: int, mu: float) -> tuple[float, float]:
    """Roots nu_- <= nu_+ of nu(N - 2 - nu) = mu.

    nu_- is written as mu / (sqrt(mu_bar) + sqrt(mu_bar - mu)) to avoid
    cancellation for small |mu|.
    """
    a = math.sqrt(mu_bar(N))
    b = math.sqrt(mu_bar(N) - mu)
    if a + b == 0.0:
        return 0.0, 0.0
    nu_minus = mu / (a + b)
    return nu_minus, (N - 2) - nu_minus


def derive(params: Parameters) -> DerivedConstants:
    N, l, mu, p = params.N, params.l, params.mu, params.p
    m = (l + 2) / (p - 1)
    L_pow = m * (N - 2 - m)
    nu_m, nu_p = nu_roots(N, mu)
    w0 = (L_pow - mu) ** (1.0 / (p - 1)) if L_pow > mu else None
    return DerivedConstants(
        params=params,
        mu_bar=mu_bar(N),
        mu_plus=max(mu, 0.0),
        l_minus=min(l, 0.0),
        m=m,
        A=N - 2 - 2 * m,
        L_pow=L_pow,
        nu_minus=nu_m,
        nu_plus=nu_p,
        w0=w0,
        sobolev_p=sobolev_exponent(N, l),
    )


def _check_p(p):
    if not p >= 1 + P_FLOOR:
        raise ParameterError(f"p must satisfy p >= 1 + {P_FLOOR} (got p={p})")


def gamma_max(params: Parameters) -> float:
    """Upper end gamma_M(p, mu) of the admissible Moser-iteration range."""
    _check_p(params.p)
    return _gamma_max(params.N, params.mu, params.p)


def _gamma_max(N, mu, p):
    mb = mu_bar(N)
    mp = max(mu, 0.0)
    num = (2 * mb - mp) * p + mp - mb + 2 * math.sqrt(mb * (mb - mp) * p * (p - 1))
    return num / ((p - 1) * mp + mb)


def f_of_p(params: Parameters, form: str = "quotient") -> float:
    """The function f(p, mu) whose level set f = N defines p_c.

    ``form="quotient"`` uses (2p + l + (l+2) gamma_M)/(p - 1);
    ``form="expanded"`` uses the algebraically equivalent closed form that
    never calls :func:`gamma_max`.
    """
    _check_p(params.p)
    return _f(params.N, params.l, params.mu, params.p, form)


def _f(N, l, mu, p, form="quotient"):
    if form == "quotient":
        return (2 * p + l + (l + 2) * _gamma_max(N, mu, p)) / (p - 1)
    if form == "expanded":
        mb = mu_bar(N)
        mp = max(mu, 0.0)
        q = p - 1
        inner = mb + mb / q + math.sqrt(mb * (mb - mp) * (1 + 1 / q))
        return 2 + 2 * (l + 2) / (q * mp + mb) * inner
    raise ValueError(f"unknown form {form!r}")


def p_critical_closed_form(N: int, l: float) -> float:
    """p_c(l, 0); infinite when N <= 10 + 4l."""
    if N <= 10 + 4 * l:
        return math.inf
    n = N - 2
    num = n * n - 2 * (l + 2) * (N + l) + 2 * (l + 2) * math.sqrt((N + l) ** 2 - n * n)
    return num / (n * (N - 10 - 4 * l))


def p_critical_bisect(N: int, l: float, mu: float, rtol: float = RTOL_ROOT) -> float:
    """Root of f(p, mu) = N by bracketed bisection.

    The bracket is [1 + 1e-9, P] with P doubled until f(P, mu) < N. Returns
    ``math.inf`` if no finite root exists (mu <= 0 and N <= 10 + 4l).
    """
    _check_Nlmu(N, l, mu)
    # f -> 2 as p -> inf when mu > 0, but f -> 2 + 4(l+2) when mu <= 0
    if mu <= 0 and N <= 10 + 4 * l:
        return math.inf
    lo = 1 + P_FLOOR
    hi = 2.0
    while _f(N, l, mu, hi) >= N:
        hi = 1 + 2 * (hi - 1)
        if hi > 1e300:
            return math.inf
    return bisect(lambda p: _f(N, l, mu, p) - N, lo, hi, xtol=1e-300,
                  rtol=max(rtol, 4 * 2.2e-16), maxiter=2000)


def p_critical(N: int, l: float, mu: float, rtol: float = RTOL_ROOT) -> float:
    """Critical exponent p_c(l, mu).

    For mu <= 0 this is the closed form (constant in mu); for mu > 0 it is
    the unique root of f(p, mu) = N.
    """
    _check_Nlmu(N, l, mu)
    if mu <= 0:
        return p_critical_closed_form(N, l)
    return p_critical_bisect(N, l, mu, rtol=rtol)


def h_cubic(m: float, mu: float, N: int, l: float) -> float:
    """h_mu(m) = 4m^3 + 4(l+4-N)m^2 + (N-2)(N-10-4l)m + 4mu(l+2).

    With m = (l+2)/(p-1), h >= 0 is the inequality mu >= L^{p-1} - A^2/(4(p-1)).
    """
    return (4 * m ** 3 + 4 * (l + 4 - N) * m ** 2
            + (N - 2) * (N - 10 - 4 * l) * m + 4 * mu * (l + 2))


def _require_supercritical_dim(N, l):
    if not N > 10 + 4 * l:
        raise ParameterError(
            f"curves mu_*, p_*, p_+- need N > 10 + 4l (got N={N}, l={l})")


def mu_star(N: int, l: float) -> float:
    _require_supercritical_dim(N, l)
    return -(2 * N + l - 2) * (N - 10 - 4 * l) ** 2 / (108 * (l + 2))


def p_star(N: int, l: float) -> float:
    _require_supercritical_dim(N, l)
    return (N + 2 + 2 * l) / (N - 10 - 4 * l)


def m_plus_minus(mu: float, N: int, l: float) -> tuple[float, float]:
    """Roots (m_+, m_-), m_+ <= m_-, of h_mu in [0, sqrt(mu_bar))."""
    _require_supercritical_dim(N, l)
    ms = mu_star(N, l)
    if not ms <= mu <= 0:
        raise ParameterError(f"mu must lie in [mu_*, 0] = [{ms}, 0] (got mu={mu})")
    m_peak = (N - 10 - 4 * l) / 6
    m_top = math.sqrt(mu_bar(N))

    def h(m):
        return h_cubic(m, mu, N, l)

    # mu == mu_* up to rounding: double root at the peak
    if h(m_peak) <= 1e-13 * (N - 2) ** 3:
        return m_peak, m_peak
    m_plus = 0.0 if mu == 0 else bisect(h, 0.0, m_peak, xtol=1e-300, rtol=8.9e-16, maxiter=2000)
    m_minus = bisect(h, m_peak, m_top, xtol=1e-300, rtol=8.9e-16, maxiter=2000)
    return m_plus, m_minus


def p_plus_minus(mu: float, N: int, l: float) -> tuple[float, float]:
    """(p_-, p_+) bounding the mu <= 0 branch of the stable set; p_+ may be inf."""
    m_plus, m_minus = m_plus_minus(mu, N, l)
    p_minus = (l + 2) / m_minus + 1
    p_plus = math.inf if m_plus == 0 else (l + 2) / m_plus + 1
    return p_minus, p_plus


def upper_exponent(N: int, l: float, mu: float) -> float:
    """(l+2)/nu_- + 1, the upper end of the mu > 0 stable branch."""
    nu_m, _ = nu_roots(N, mu)
    if nu_m <= 0:
        return math.inf
    return (l + 2) / nu_m + 1


def h_balance(p: float, gamma: float, N: int, l: float) -> float:
    """H(p, gamma, l) = N(p-1) - (gamma+1)l - 2(p+gamma)."""
    return N * (p - 1) - (gamma + 1) * l - 2 * (p + gamma)


def gamma_star(p: float, N: int, l: float) -> float:
    """The gamma at which H(p, gamma, l) vanishes."""
    return (N * (p - 1) - 2 * p - l) / (l + 2)
