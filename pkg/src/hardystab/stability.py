"""Second variation Q_u(phi) for radial u and radial test functions.

All integrals are taken in t = ln r, where

    Q_u(phi) = |S^{N-1}| * integral of
               [phi_t^2 - mu phi^2 - p r^{l+2} |u|^{p-1} phi^2] e^{(N-2)t} dt.

Radial test functions can only falsify stability, never prove it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import minimize

from .exponents import Parameters, derive
from .phase import DynamicsError, RadialSolution
from .quadrature import integrate, sphere_area


@dataclass(frozen=True)
class TestFunction:
    """phi(r) = b(s) exp(-tilt (t - center)) / M with s = (ln r - center)/half_width.

    b(s) = (1 - s^2)^3 on |s| < 1 (C^2 at the edge) and M normalizes
    sup|phi| to 1. A tilt of (N-2)/2 turns phi into a Hardy-weighted bump,
    the family along which the Hardy quotient approaches (N-2)^2/4.
    """

    __test__ = False  # not a pytest class

    center_log_r: float
    half_width_log_r: float
    tilt: float = 0.0
    kind: str = "RadialBump"

    def __post_init__(self):
        if not self.half_width_log_r > 0:
            raise ValueError("half_width_log_r must be positive")

    @property
    def support_log_r(self) -> tuple[float, float]:
        return (self.center_log_r - self.half_width_log_r,
                self.center_log_r + self.half_width_log_r)

    @property
    def support(self) -> tuple[float, float]:
        lo, hi = self.support_log_r
        return math.exp(lo), math.exp(hi)

    @property
    def _peak(self) -> float:
        """s at which (1 - s^2)^3 e^{-k s} is largest."""
        k = self.tilt * self.half_width_log_r
        return 0.0 if k == 0 else (3 - math.sqrt(9 + k * k)) / k

    @property
    def _norm_unscaled(self) -> float:
        s = self._peak
        return (1 - s * s) ** 3

    @property
    def _norm_exponent(self) -> float:
        return -self.tilt * self.half_width_log_r * self._peak

    def log_values(self, t, weight: float = 0.0):
        """(phi, d phi/dt) at log-radii t, both times e^{weight t}; zero
        outside the support.

        The weight is folded into a single exponential: for wide tilted bumps
        phi alone underflows where phi^2 e^{(N-2)t} is still of order one.
        """
        t = np.asarray(t, dtype=float)
        W = self.half_width_log_r
        s = (t - self.center_log_r) / W
        inside = np.abs(s) < 1
        q = np.where(inside, 1 - s * s, 0.0)
        b = q ** 3
        db = -6 * s * q ** 2 / W
        log_norm = math.log(self._norm_unscaled) + self._norm_exponent
        e = np.exp(-self.tilt * (t - self.center_log_r) + weight * t - log_norm)
        return b * e, (db - self.tilt * b) * e

    def __call__(self, r):
        return self.log_values(np.log(np.asarray(r, dtype=float)))[0]


@dataclass(frozen=True)
class QuadraticFormReport:
    value: float
    gradient_term: float
    hardy_term: float
    potential_term: float
    quadrature_error_estimate: float

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in
                ("value", "gradient_term", "hardy_term", "potential_term",
                 "quadrature_error_estimate")}


def _check_support(u: RadialSolution, phi: TestFunction):
    lo, hi = phi.support
    dlo, dhi = u.domain
    if lo < dlo * (1 - 1e-12) or hi > dhi * (1 + 1e-12):
        raise ValueError(
            f"test function support {phi.support} leaves the solution domain {u.domain}")


def q_form_radial(u: RadialSolution, phi: TestFunction,
                  params: Parameters | None = None, rtol: float = 1e-10
                  ) -> QuadraticFormReport:
    prm = params or u.params
    _check_support(u, phi)
    N, l, mu, p = prm.N, prm.l, prm.mu, prm.p

    def integrand(t):
        r = np.exp(t)
        f, ft = phi.log_values(t, (N - 2) / 2)
        uu, _ = u.evaluator(r)
        pot = p * r ** (l + 2) * np.abs(uu) ** (p - 1)
        return np.vstack([ft * ft, mu * f * f, pot * f * f])

    a, b = phi.support_log_r
    res = integrate(integrand, a, b, rtol=rtol, breakpoints=u.breakpoints(a, b))
    omega = sphere_area(N)
    g, h, v = (omega * x for x in res.value)
    return QuadraticFormReport(g - h - v, g, h, v, float(omega * np.sum(res.error)))


def q_form_power_law(phi: TestFunction, params: Parameters, rtol: float = 1e-10
                     ) -> QuadraticFormReport:
    """Q_{U_s}(phi) using r^{l+2} U_s^{p-1} = L^{p-1} - mu.

    The potential collapses to a Hardy term with coefficient
    mu + p(L^{p-1} - mu).
    """
    c = derive(params)
    if not c.has_w0:
        raise DynamicsError("U_s needs L^(p-1) > mu")
    N = params.N
    coeff = params.p * c.gap

    def integrand(t):
        f, ft = phi.log_values(t, (N - 2) / 2)
        return np.vstack([ft * ft, f * f])

    a, b = phi.support_log_r
    res = integrate(integrand, a, b, rtol=rtol)
    omega = sphere_area(N)
    g, s = omega * res.value
    return QuadraticFormReport(g - (params.mu + coeff) * s, g, params.mu * s,
                               coeff * s, float(omega * np.sum(res.error)))


@dataclass(frozen=True)
class HardyMargin:
    margin: float
    ok: bool


def hardy_sufficient(params: Parameters) -> HardyMargin:
    """mu_bar - (mu + p(L^{p-1} - mu)); non-negative means U_s (and every
    solution below it) is stable by Hardy's inequality."""
    c = derive(params)
    if not c.has_w0:
        raise DynamicsError(
            f"hardy test needs L^(p-1) > mu (L^(p-1)={c.L_pow}, mu={params.mu})")
    margin = c.mu_bar - (params.mu + params.p * c.gap)
    return HardyMargin(margin, margin >= 0)


@dataclass(frozen=True)
class FamilyBounds:
    """Grid of RadialBump test functions: centers x widths (log radius)."""

    center: tuple[float, float, int] = (-4.0, 4.0, 4)
    width: tuple[float, float, int] = (0.5, 32.0, 5)
    tilt: Optional[float] = None  # None -> (N-2)/2

    def functions(self, N: int) -> list[TestFunction]:
        tilt = (N - 2) / 2 if self.tilt is None else self.tilt
        cs = np.linspace(*self.center) if self.center[2] > 1 else [self.center[0]]
        ws = np.geomspace(*self.width) if self.width[2] > 1 else [self.width[0]]
        # order fixes the tie-break: smaller width first, then smaller center
        return [TestFunction(float(c), float(w), tilt) for w, c in product(ws, cs)]


@dataclass
class SearchResult:
    found: Optional[TestFunction]
    report: Optional[QuadraticFormReport]
    best_ratio: float  # min Q / gradient_term seen
    q_values: list = field(default_factory=list)

    def as_dict(self) -> dict:
        out = {"found": self.found is not None, "best_ratio": self.best_ratio,
               "q_values": self.q_values}
        if self.found is not None:
            out["test_function"] = {
                "center_log_r": self.found.center_log_r,
                "half_width_log_r": self.found.half_width_log_r,
                "tilt": self.found.tilt,
            }
            out["q"] = self.report.as_dict()
        return out


def adversarial_search(u: RadialSolution, params: Parameters | None = None,
                       family_bounds: FamilyBounds | None = None,
                       threshold: float = 1e-8, refine: bool = True,
                       rtol: float = 1e-10) -> SearchResult:
    """Look for a bump with Q_u(phi) < -threshold * gradient_term.

    The coarse grid is scanned in its fixed order; the most negative
    normalized value wins (ties go to the earlier grid point). If nothing
    on the grid is negative, Nelder-Mead refines (center, log width) from
    the best grid point.
    """
    prm = params or u.params
    fb = family_bounds or FamilyBounds()
    best = None
    q_values = []
    for phi in fb.functions(prm.N):
        rep = q_form_radial(u, phi, prm, rtol=rtol)
        ratio = rep.value / rep.gradient_term
        q_values.append({"center_log_r": phi.center_log_r,
                         "half_width_log_r": phi.half_width_log_r,
                         "q": rep.value, "ratio": ratio})
        if best is None or ratio < best[0]:
            best = (ratio, phi, rep)
    ratio, phi, rep = best
    if ratio < -threshold:
        return SearchResult(phi, rep, ratio, q_values)
    if refine:
        tilt = phi.tilt
        w_lo, w_hi = fb.width[0], fb.width[1]
        c_lo, c_hi = fb.center[0], fb.center[1]

        def objective(x):
            c = min(max(x[0], c_lo), c_hi)
            w = math.exp(min(max(x[1], math.log(w_lo)), math.log(w_hi)))
            try:
                rp = q_form_radial(u, TestFunction(c, w, tilt), prm, rtol=rtol)
            except ValueError:
                return math.inf
            return rp.value / rp.gradient_term

        opt = minimize(objective, [phi.center_log_r, math.log(phi.half_width_log_r)],
                       method="Nelder-Mead",
                       options={"xatol": 1e-3, "fatol": 1e-12, "maxfev": 120})
        if opt.fun < ratio:
            c = min(max(opt.x[0], c_lo), c_hi)
            w = math.exp(min(max(opt.x[1], math.log(w_lo)), math.log(w_hi)))
            phi = TestFunction(float(c), float(w), tilt)
            rep = q_form_radial(u, phi, prm, rtol=rtol)
            ratio = rep.value / rep.gradient_term
            if ratio < -threshold:
                return SearchResult(phi, rep, ratio, q_values)
    return SearchResult(None, None, ratio, q_values)


def weak_form_residual(u: RadialSolution, phi: TestFunction,
                       params: Parameters | None = None, rtol: float = 1e-9
                       ) -> tuple[float, float]:
    """(residual, normalization) of the weak form tested against phi.

    The residual is the integral of u' phi' - mu u phi / r^2 - r^l |u|^{p-1} u phi
    (times r^{N-1}); the normalization is the largest of those three
    integrals in absolute value. The default rtol is 1e-9 because shot
    solutions are only C^2 across integrator steps.
    """
    prm = params or u.params
    _check_support(u, phi)
    N, l, mu, p = prm.N, prm.l, prm.mu, prm.p

    def integrand(t):
        r = np.exp(t)
        f, ft = phi.log_values(t, (N - 2) / 2)
        uu, du = u.evaluator(r)
        half = np.exp((N - 2) / 2 * t)
        return np.vstack([du * r * half * ft,
                          -mu * uu * half * f,
                          -r ** (l + 2) * np.abs(uu) ** (p - 1) * uu * half * f])

    a, b = phi.support_log_r
    res = integrate(integrand, a, b, rtol=rtol, atol=1e-300, breakpoints=u.breakpoints(a, b))
    terms = np.asarray(res.value)
    return float(terms.sum()), float(np.abs(terms).max())


def verify_weak_solution(u: RadialSolution, params: Parameters | None = None,
                         phi_set: Sequence[TestFunction] = ()) -> float:
    """Largest |weak-form residual| / gradient term over ``phi_set``."""
    worst = 0.0
    for phi in phi_set:
        res, norm = weak_form_residual(u, phi, params)
        if norm == 0:
            if res != 0:
                return math.inf
            continue
        worst = max(worst, abs(res) / norm)
    return worst


def random_bumps(n: int, seed: int = 0, center=(-3.0, 3.0), width=(0.3, 3.0),
                 tilt: float = 0.0) -> list[TestFunction]:
    rng = np.random.default_rng(seed)
    cs = rng.uniform(*center, size=n)
    ws = np.exp(rng.uniform(math.log(width[0]), math.log(width[1]), size=n))
    return [TestFunction(float(c), float(w), tilt) for c, w in zip(cs, ws)]
