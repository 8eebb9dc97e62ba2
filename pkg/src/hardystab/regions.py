"""Where in the (mu, p)-plane stable solutions exist, and where they cannot.

``classify`` labels a single point; ``sweep`` labels a grid and samples the
dividing curves so the region diagram can be drawn from the output alone.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np

from .exponents import (
    ParameterError,
    Parameters,
    derive,
    mu_bar,
    mu_star,
    p_critical,
    p_plus_minus,
    sobolev_exponent,
    upper_exponent,
)

BOUNDARY_TOL = 1e-9
SCHEMA_VERSION = 1

UNSTABLE, STABLE, UNKNOWN, INVALID, BOUNDARY = (
    "Unstable", "Stable", "Unknown", "Invalid", "Boundary")


@dataclass(frozen=True)
class RegionLabel:
    variant: str
    detail: str

    def __str__(self):
        return f"{self.variant}:{self.detail}"


# the curves are pure functions of (N, l, mu); sweeps hit each mu many times
@lru_cache(maxsize=4096)
def _p_c(N, l, mu):
    return p_critical(N, l, mu)


@lru_cache(maxsize=4096)
def _p_pm(N, l, mu):
    if N > 10 + 4 * l and mu_star(N, l) <= mu <= 0:
        return p_plus_minus(mu, N, l)
    return None


def _ge(a, b, tol):
    """a >= b up to a relative tolerance (b may be inf)."""
    if math.isinf(b):
        return a >= b
    return a >= b - tol * max(1.0, abs(b))


def _lt(a, b, tol):
    if math.isinf(b):
        return a < b
    return a < b + tol * max(1.0, abs(b))


def _near(a, b, tol):
    return math.isfinite(b) and abs(a - b) <= tol * max(1.0, abs(b))


def membership_S(params: Parameters, tol: float = BOUNDARY_TOL) -> bool:
    N, l, mu, p = params.N, params.l, params.mu, params.p
    if mu > 0:
        return _ge(p, _p_c(N, l, mu), tol) and _lt(p, upper_exponent(N, l, mu), tol)
    pm = _p_pm(N, l, mu)
    if pm is None:
        return False
    return _ge(p, pm[0], tol) and (math.isinf(pm[1]) or p <= pm[1] + tol * max(1.0, pm[1]))


def sigma_margins(params: Parameters) -> tuple[float, float, float]:
    """Signed slacks of the three inequalities defining Sigma.

    Each is positive when the inequality holds strictly: p above the
    Sobolev-type exponent, L^{p-1} above mu, and mu above
    L^{p-1} - A^2/(4(p-1)).
    """
    c = derive(params)
    p, mu = params.p, params.mu
    return (p - sobolev_exponent(params.N, params.l),
            c.L_pow - mu,
            mu - (c.L_pow - c.A ** 2 / (4 * (p - 1))))


def membership_Sigma(params: Parameters, tol: float = BOUNDARY_TOL) -> bool:
    a, b, c = sigma_margins(params)
    scale = max(1.0, params.mu_bar)
    return a > -tol * max(1.0, params.p) and b > -tol * scale and c >= -tol * scale


def near_boundary(params: Parameters, tol: float) -> Optional[str]:
    """Name of a dividing curve within ``tol`` (relative) of the point, or None."""
    N, l, mu, p = params.N, params.l, params.mu, params.p
    if _near(p, _p_c(N, l, mu), tol):
        return "p_c"
    if mu > 0 and _near(p, upper_exponent(N, l, mu), tol):
        return "upper"
    pm = _p_pm(N, l, mu)
    if pm is not None:
        if _near(p, pm[0], tol):
            return "p_minus"
        if _near(p, pm[1], tol):
            return "p_plus"
    if N > 10 + 4 * l and (_near(mu, mu_star(N, l), tol) or abs(mu) <= tol):
        return "mu_edge"
    return None


def classify(params: Parameters | dict, tol: float = BOUNDARY_TOL) -> RegionLabel:
    """Label one point. Never raises: bad parameters give an Invalid label."""
    try:
        prm = params if isinstance(params, Parameters) else Parameters(**params)
    except (ParameterError, TypeError) as exc:
        return RegionLabel(INVALID, _invalid_code(str(exc)))
    N, l, mu, p = prm.N, prm.l, prm.mu, prm.p
    curve = near_boundary(prm, tol)
    if curve is not None and curve != "mu_edge":
        return RegionLabel(BOUNDARY, f"near_{curve}")
    if p < _p_c(N, l, mu):
        return RegionLabel(UNSTABLE, "below_p_c")
    if membership_S(prm, tol):
        return RegionLabel(STABLE, "in_S")
    if N > 10 + 4 * l and mu < 0:
        if mu < mu_star(N, l):
            return RegionLabel(UNKNOWN, "below_mu_star")
        pm = _p_pm(N, l, mu)
        return RegionLabel(UNKNOWN, "below_p_minus" if p < pm[0] else "above_p_plus")
    # mu > 0 and p beyond (l+2)/nu_- + 1: no result covers this either
    return RegionLabel(UNKNOWN, "above_upper")


def _invalid_code(msg: str) -> str:
    for key, code in (("N must", "bad_N"), ("l must", "bad_l"),
                      ("mu must", "mu_not_below_mu_bar"), ("p must", "p_not_above_1")):
        if key in msg:
            return code
    return "bad_parameters"


# -- sweeps -----------------------------------------------------------------------

@dataclass(frozen=True)
class SweepGrid:
    """Rectangular grid; a count of 1 means the single value ``lo``."""

    N: int
    l: float
    mu_range: tuple[float, float, int]
    p_range: tuple[float, float, int]

    def __post_init__(self):
        for name, (lo, hi, n) in (("mu_range", self.mu_range), ("p_range", self.p_range)):
            if int(n) != n or n < 1:
                raise ParameterError(f"{name} count must be a positive integer")
            if n > 1 and not lo < hi:
                raise ParameterError(f"{name} needs lo < hi")
        if self.mu_values()[-1] >= mu_bar(self.N):
            raise ParameterError(f"mu range must stay below mu_bar = {mu_bar(self.N)}")

    @staticmethod
    def _axis(lo, hi, n):
        return np.array([lo], dtype=float) if n == 1 else np.linspace(lo, hi, int(n))

    def mu_values(self):
        return self._axis(*self.mu_range)

    def p_values(self):
        return self._axis(*self.p_range)

    def as_dict(self):
        return {"N": self.N, "l": self.l, "mu_range": list(self.mu_range),
                "p_range": list(self.p_range)}


@dataclass
class SweepResult:
    grid: SweepGrid
    cells: list  # (mu, p, RegionLabel), row-major: mu outer, p inner
    curves: dict  # name -> list of (mu, value or None)

    def counts(self) -> dict:
        out: dict = {}
        for _, _, lab in self.cells:
            out[lab.variant] = out.get(lab.variant, 0) + 1
        return out


def curve_values(N: int, l: float, mu: float) -> dict:
    pm = _p_pm(N, l, mu)
    return {
        "p_c": _p_c(N, l, mu),
        "p_minus": pm[0] if pm else None,
        "p_plus": pm[1] if pm else None,
        "upper": upper_exponent(N, l, mu) if mu > 0 else None,
    }


def sweep(grid: SweepGrid, tol: float = BOUNDARY_TOL) -> SweepResult:
    cells = []
    curves: dict = {k: [] for k in ("p_c", "p_minus", "p_plus", "upper")}
    for mu in grid.mu_values():
        mu = float(mu)
        for k, v in curve_values(grid.N, grid.l, mu).items():
            curves[k].append((mu, v))
        for p in grid.p_values():
            p = float(p)
            cells.append((mu, p, classify(Parameters(grid.N, grid.l, mu, p), tol)))
    return SweepResult(grid, cells, curves)


# -- serialization ------------------------------------------------------------------

def fmt(x) -> str:
    """17 significant digits; infinities as the literal "inf"; None as ""."""
    if x is None:
        return ""
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")


def json_number(x):
    if x is None:
        return None
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return float(format(x, ".17g"))


def sweep_csv(result: SweepResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["mu", "p", "label", "detail"])
    for mu, p, lab in result.cells:
        w.writerow([fmt(mu), fmt(p), lab.variant, lab.detail])
    return buf.getvalue()


def curves_csv(result: SweepResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    names = list(result.curves)
    w.writerow(["mu", *names])
    for i, (mu, _) in enumerate(result.curves["p_c"]):
        w.writerow([fmt(mu), *(fmt(result.curves[n][i][1]) for n in names)])
    return buf.getvalue()


def sweep_json(result: SweepResult) -> str:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "grid": result.grid.as_dict(),
        "cells": [{"mu": json_number(mu), "p": json_number(p), "label": lab.variant,
                   "detail": lab.detail} for mu, p, lab in result.cells],
        "curves": {k: [{"mu": json_number(mu), "value": json_number(v)} for mu, v in series]
                   for k, series in result.curves.items()},
    }
    return json.dumps(doc, indent=1) + "\n"


# -- samplers -----------------------------------------------------------------------

def sample_stable(N: int, l: float, n: int, seed: int = 0, margin: float = 1e-3,
                  p_span: float = 20.0) -> list[Parameters]:
    """``n`` random points of S, alternating between the mu > 0 branch and
    (when N > 10 + 4l) the mu <= 0 branch, kept ``margin`` away from the
    bounding curves in relative terms."""
    rng = np.random.default_rng(seed)
    out = []
    two = N > 10 + 4 * l
    while len(out) < n:
        neg = two and len(out) % 2 == 1
        if neg:
            mu = rng.uniform(mu_star(N, l), 0.0) * (1 - margin)
            lo, hi = _p_pm(N, l, mu)
        else:
            mu = rng.uniform(0.0, mu_bar(N)) * (1 - margin)
            if mu <= 0:
                continue
            lo, hi = _p_c(N, l, mu), upper_exponent(N, l, mu)
        hi = min(hi, lo + p_span)
        a, b = lo * (1 + margin), hi * (1 - margin)
        if not a < b:
            continue
        prm = Parameters(N, l, float(mu), float(rng.uniform(a, b)))
        if classify(prm).variant == STABLE:
            out.append(prm)
    return out


def sample_unstable(N: int, l: float, n: int, seed: int = 0, p_max: float = 30.0,
                    mu_lo: float | None = None, require=None) -> list[Parameters]:
    """``n`` random points labelled Unstable, optionally filtered by ``require``."""
    rng = np.random.default_rng(seed)
    lo = -mu_bar(N) if mu_lo is None else mu_lo
    out = []
    for _ in range(1000 * n):
        mu = float(rng.uniform(lo, mu_bar(N)))
        if mu >= mu_bar(N):
            continue
        pc = min(_p_c(N, l, mu), p_max)
        sob = sobolev_exponent(N, l)
        prm = Parameters(N, l, mu, float(rng.uniform(1.0, pc)) if pc > 1 else 1.5)
        if classify(prm).variant != UNSTABLE or prm.p <= 1 + 1e-6:
            continue
        if require is not None and not require(prm):
            continue
        out.append(prm)
        if len(out) == n:
            return out
    raise RuntimeError("could not draw enough Unstable points")
