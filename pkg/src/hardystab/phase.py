"""Emden-Fowler phase plane for radial solutions.

With w(t) = r^m u(r), t = ln r and m = (l+2)/(p-1), a radial solution of the
equation becomes the autonomous system

    w' = v
    v' = -A v + (L^{p-1} - mu) w - |w|^{p-1} w

whose equilibria are the origin (the trivial solution) and (+-w0, 0) (the
singular solution U_s). Regular radial solutions are the branches of the
unstable manifold of the origin.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .exponents import DerivedConstants, ParameterError, Parameters, derive
from .ode import IntegratorConfig, integrate


class DynamicsError(RuntimeError):
    """The phase-plane preconditions of a computation do not hold."""

    def __init__(self, message, trajectory=None):
        super().__init__(message)
        self.trajectory = trajectory


@dataclass(frozen=True)
class PhaseState:
    t: float
    w: float
    v: float


def vector_field(state, constants: DerivedConstants) -> tuple[float, float]:
    """Right-hand side (w', v') at a phase point ``(w, v)`` or a PhaseState."""
    if isinstance(state, PhaseState):
        w, v = state.w, state.v
    else:
        w, v = state
    p = constants.params.p
    return v, -constants.A * v + constants.gap * w - abs(w) ** (p - 1) * w


def energy(state, constants: DerivedConstants):
    """E_w = v^2/2 - (L^{p-1} - mu) w^2/2 + |w|^{p+1}/(p+1). Works on arrays."""
    if isinstance(state, PhaseState):
        w, v = state.w, state.v
    else:
        w, v = state
    p = constants.params.p
    w = np.asarray(w, dtype=float)
    v = np.asarray(v, dtype=float)
    out = 0.5 * v ** 2 - 0.5 * constants.gap * w ** 2 + np.abs(w) ** (p + 1) / (p + 1)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class EquilibriumReport:
    location: tuple[float, float]
    eigenvalues: tuple[complex, complex]
    kind: str  # Saddle, StableNode, StableSpiral, Degenerate, Unstable
    linear_coefficient: float  # c in lambda^2 + A lambda - c = 0

    @property
    def discriminant(self) -> float:
        return self.eigenvalues_discriminant

    @property
    def eigenvalues_discriminant(self) -> float:
        lam1, lam2 = self.eigenvalues
        return float(((lam1 - lam2) ** 2).real)

    def as_dict(self) -> dict:
        return {
            "location": list(self.location),
            "eigenvalues": [[z.real, z.imag] for z in self.eigenvalues],
            "type": self.kind,
        }


def _classify(lams, tol=1e-14):
    l1, l2 = lams
    if abs(l1.imag) > tol:
        if l1.real < 0:
            return "StableSpiral"
        return "Degenerate" if l1.real == 0 else "Unstable"
    a, b = sorted((l1.real, l2.real))
    if a < 0 < b:
        return "Saddle"
    if a == 0 or b == 0 or a == b:
        return "Degenerate"
    if b < 0:
        return "StableNode"
    return "Unstable"


def _linearization(c, A, location):
    disc = A * A + 4 * c
    s = cmath.sqrt(disc)
    lams = ((-A + s) / 2, (-A - s) / 2)
    return EquilibriumReport(location, lams, _classify(lams), c)


def equilibria(constants: DerivedConstants) -> list[EquilibriumReport]:
    """Origin always; (+-w0, 0) when L^{p-1} > mu."""
    A = constants.A
    out = [_linearization(constants.gap, A, (0.0, 0.0))]
    if constants.has_w0:
        c = -(constants.params.p - 1) * constants.gap
        w0 = constants.w0
        out.append(_linearization(c, A, (w0, 0.0)))
        out.append(_linearization(c, A, (-w0, 0.0)))
    return out


def positive_node_discriminant(constants: DerivedConstants) -> float:
    """A^2 - 4(p-1)(L^{p-1} - mu); negative means (w0, 0) is a spiral."""
    return constants.A ** 2 - 4 * (constants.params.p - 1) * constants.gap


def unstable_eigenvalue(constants: DerivedConstants) -> float:
    return (-constants.A + math.sqrt(constants.A ** 2 + 4 * constants.gap)) / 2


# -- quintic Hermite interpolation -----------------------------------------

def _hermite5(s, h, y0, d0, dd0, y1, d1, dd1):
    s2 = s * s
    s3 = s2 * s
    s4 = s3 * s
    s5 = s4 * s
    H0 = 1 - 10 * s3 + 15 * s4 - 6 * s5
    H1 = s - 6 * s3 + 8 * s4 - 3 * s5
    H2 = 0.5 * (s2 - 3 * s3 + 3 * s4 - s5)
    H3 = 10 * s3 - 15 * s4 + 6 * s5
    H4 = -4 * s3 + 7 * s4 - 3 * s5
    H5 = 0.5 * (s3 - 2 * s4 + s5)
    return (y0 * H0 + h * d0 * H1 + h * h * dd0 * H2
            + y1 * H3 + h * d1 * H4 + h * h * dd1 * H5)


@dataclass
class Trajectory:
    """Accepted integrator states on one branch of the unstable manifold."""

    t: np.ndarray
    w: np.ndarray
    v: np.ndarray
    constants: DerivedConstants
    converged_to: Optional[str] = None  # "w0" when it settled at (w0, 0)
    sign_changes_of_w_minus_w0: int = 0
    max_energy_violation: float = 0.0
    lambda_plus: float = float("nan")
    offset: float = float("nan")
    branch: int = 1
    status: str = ""

    def __len__(self):
        return len(self.t)

    @property
    def states(self) -> list[PhaseState]:
        return [PhaseState(*x) for x in zip(self.t, self.w, self.v)]

    def _second_derivs(self):
        c = self.constants
        p = c.params.p
        dv = -c.A * self.v + c.gap * self.w - np.abs(self.w) ** (p - 1) * self.w
        ddv = -c.A * dv + (c.gap - p * np.abs(self.w) ** (p - 1)) * self.v
        return dv, ddv

    def energies(self) -> np.ndarray:
        return energy((self.w, self.v), self.constants)

    def at(self, t) -> tuple[np.ndarray, np.ndarray]:
        """(w, v) at arbitrary t.

        Interior points use quintic Hermite interpolation on the accepted
        steps. Before the first state the linear unstable mode is used; after
        the last state a decaying linear mode continues the trajectory (C^1)
        towards the equilibrium, when converged.
        """
        t = np.atleast_1d(np.asarray(t, dtype=float))
        ts = self.t
        if len(ts) < 2:
            raise ValueError("trajectory has fewer than two states")
        dv, ddv = self._second_derivs()
        w = np.empty_like(t)
        v = np.empty_like(t)
        left = t < ts[0]
        right = t > ts[-1]
        mid = ~(left | right)
        lam = self.lambda_plus
        if left.any():
            w[left] = self.w[0] * np.exp(lam * (t[left] - ts[0]))
            v[left] = self.v[0] * np.exp(lam * (t[left] - ts[0]))
        if right.any():
            if self.converged_to == "w0":
                # w0 + (a + b s) e^{-kappa s}: matches w and w' at the last state
                k = self.tail_rate()
                s = t[right] - ts[-1]
                a = self.w[-1] - self.branch * self.constants.w0
                b = self.v[-1] + k * a
                e = np.exp(-k * s)
                w[right] = self.branch * self.constants.w0 + (a + b * s) * e
                v[right] = (b - k * (a + b * s)) * e
            else:
                raise ValueError("t beyond the end of a non-converged trajectory")
        if mid.any():
            tm = t[mid]
            i = np.clip(np.searchsorted(ts, tm, side="right") - 1, 0, len(ts) - 2)
            h = ts[i + 1] - ts[i]
            s = (tm - ts[i]) / h
            w[mid] = _hermite5(s, h, self.w[i], self.v[i], dv[i],
                               self.w[i + 1], self.v[i + 1], dv[i + 1])
            v[mid] = _hermite5(s, h, self.v[i], dv[i], ddv[i],
                               self.v[i + 1], dv[i + 1], ddv[i + 1])
        return w, v

    def tail_rate(self) -> float:
        """Slowest decay rate of the linearization at (w0, 0)."""
        eig = equilibria(self.constants)[1].eigenvalues
        return -max(z.real for z in eig)

    def envelope_ok(self, rtol: float = 1e-9) -> bool:
        """0 < |w| < w0 at every state, up to ``rtol * w0`` overshoot."""
        if not self.constants.has_w0:
            return False
        aw = self.branch * self.w
        return bool(np.all(aw > 0) and np.all(aw < self.constants.w0 * (1 + rtol)))

    @property
    def t_range(self) -> tuple[float, float]:
        lo = -math.inf
        hi = math.inf if self.converged_to == "w0" else float(self.t[-1])
        return lo, hi


def shoot_unstable_manifold(
    constants: DerivedConstants,
    offset: float = 1e-8,
    t_max: float | None = None,
    integrator_cfg: IntegratorConfig | None = None,
    branch: int = 1,
    anchor: bool = True,
    conv_tol: float = 1e-8,
    conv_window: float = 5.0,
    sign_tol: float = 1e-9,
) -> Trajectory:
    """Integrate the branch of the unstable manifold of the origin.

    The start point is ``offset`` times the unit unstable eigenvector
    (negated for ``branch=-1``). With ``anchor=True`` the start time is
    ln(w_start)/lambda_+, so that w ~ e^{lambda_+ t} as t -> -inf and the
    reconstructed u satisfies r^{nu_-} u -> 1 at the origin. Integration stops
    at t = ``t_max`` (that is, r = e^{t_max}) unless it converges first; the
    start time drops far below zero when lambda_+ is small, so a fixed span
    would not do. The default ``t_max`` is 200 + 40/kappa, where kappa is the
    slowest rate involved (lambda_+ or the weakest decay at (w0, 0)); near
    the edges of S either can be small. The default integrator uses rtol
    1e-10 and atol 1e-10 * offset.

    Raises DynamicsError if the origin is not a saddle or if w reaches zero
    (leaves the half plane of its branch).
    """
    if branch not in (1, -1):
        raise ValueError("branch must be +1 or -1")
    if not offset > 0:
        raise ValueError("offset must be positive")
    origin = equilibria(constants)[0]
    if origin.kind != "Saddle":
        raise DynamicsError(
            f"origin is not a saddle (type {origin.kind}); need L^(p-1) > mu")
    lam = unstable_eigenvalue(constants)
    norm = math.hypot(1.0, lam)
    w_start = branch * offset / norm
    v_start = branch * offset * lam / norm
    t0 = math.log(offset / norm) / lam if anchor else 0.0

    A = constants.A
    gap = constants.gap
    pm1 = constants.params.p - 1
    if t_max is None:
        kappa = lam
        if constants.has_w0:
            kappa = min(kappa, -max(z.real for z in equilibria(constants)[1].eigenvalues))
        t_max = 200.0 + 40.0 / kappa

    def rhs(t, y):
        w, v = y
        return np.array([v, -A * v + gap * w - abs(w) ** pm1 * w])

    w0 = branch * constants.w0 if constants.has_w0 else None
    state = {"last_far": t0}

    def stop(t, y):
        if branch * y[0] <= 0:
            return "left_half_plane"
        if w0 is not None:
            if math.hypot(y[0] - w0, y[1]) > conv_tol:
                state["last_far"] = t
            elif t - state["last_far"] >= conv_window:
                return "converged"
        return None

    # the start point has size `offset`, so absolute error is measured on that scale
    cfg = integrator_cfg or IntegratorConfig(rtol=1e-10, atol=1e-10 * offset)
    if not t_max > t0:
        raise ValueError(f"t_max={t_max} is before the start time {t0}")
    sol = integrate(rhs, t0, [w_start, v_start], t_max, cfg, stop=stop)
    traj = Trajectory(
        t=sol.t, w=sol.y[:, 0], v=sol.y[:, 1], constants=constants,
        lambda_plus=lam, offset=offset, branch=branch,
        status=sol.message or sol.status,
    )
    if sol.message == "converged":
        traj.converged_to = "w0"
    if w0 is not None:
        # crossings below sign_tol * w0 are integrator noise around a node
        dev = traj.w - w0
        d = np.sign(dev[np.abs(dev) > sign_tol * abs(w0)])
        traj.sign_changes_of_w_minus_w0 = int(np.count_nonzero(d[1:] != d[:-1]))
    E = traj.energies()
    rel = np.diff(E) / np.maximum(1.0, np.abs(E[:-1]))
    traj.max_energy_violation = float(max(rel.max(initial=0.0), 0.0))
    if sol.message == "left_half_plane":
        raise DynamicsError("trajectory reached w = 0 and left its half plane",
                            trajectory=traj)
    return traj


# -- radial solutions --------------------------------------------------------

RadialEvaluator = Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]]


@dataclass
class RadialSolution:
    """Samples (r, u, du/dr) of a radial solution plus an evaluator.

    ``evaluate(r)`` returns (u, du/dr) anywhere in ``domain``; it is exact for
    closed-form profiles and interpolated for shot solutions.
    """

    params: Parameters
    r: np.ndarray
    u: np.ndarray
    du_dr: np.ndarray
    evaluator: RadialEvaluator
    domain: tuple[float, float] = (0.0, math.inf)
    lambda_fit: float = float("nan")
    decay_slope_fit: float = float("nan")
    kind: str = "grid"  # grid, singular, zero, shot, kelvin
    second_derivative: Optional[Callable[[np.ndarray], np.ndarray]] = None
    meta: dict = field(default_factory=dict)
    knots_log_r: tuple = ()  # ln r where the evaluator loses smoothness

    def breakpoints(self, a: float, b: float) -> list[float]:
        """Knots strictly inside (a, b), in log radius."""
        return [k for k in self.knots_log_r if a < k < b]

    def evaluate(self, r):
        r = np.asarray(r, dtype=float)
        lo, hi = self.domain
        if np.any(r < lo * (1 - 1e-12)) or np.any(r > hi * (1 + 1e-12)):
            raise ValueError(f"radius outside solution domain {self.domain}")
        return self.evaluator(r)


def _default_grid(lo=-4.0, hi=4.0, n=401):
    return np.exp(np.linspace(lo, hi, n))


def singular_profile(constants: DerivedConstants) -> Callable[[np.ndarray], np.ndarray]:
    """r -> U_s(r) = w0 r^{-m}."""
    if not constants.has_w0:
        raise DynamicsError("singular solution needs L^(p-1) > mu")
    w0, m = constants.w0, constants.m
    return lambda r: w0 * np.asarray(r, dtype=float) ** (-m)


def singular_solution(constants: DerivedConstants, r=None) -> RadialSolution:
    """The power-law solution U_s(r) = (L^{p-1} - mu)^{1/(p-1)} r^{-(l+2)/(p-1)}."""
    if not constants.has_w0:
        raise DynamicsError(
            f"singular solution needs L^(p-1) > mu "
            f"(L^(p-1)={constants.L_pow}, mu={constants.params.mu})")
    w0, m = constants.w0, constants.m

    def ev(r):
        r = np.asarray(r, dtype=float)
        u = w0 * r ** (-m)
        return u, -m * u / r

    def d2(r):
        r = np.asarray(r, dtype=float)
        return m * (m + 1) * w0 * r ** (-m - 2)

    r = _default_grid() if r is None else np.asarray(r, dtype=float)
    u, du = ev(r)
    return RadialSolution(constants.params, r, u, du, ev, kind="singular",
                          second_derivative=d2, lambda_fit=float("nan"),
                          decay_slope_fit=-m)


def zero_solution(params: Parameters, r=None) -> RadialSolution:
    def ev(r):
        r = np.asarray(r, dtype=float)
        return np.zeros_like(r), np.zeros_like(r)

    r = _default_grid() if r is None else np.asarray(r, dtype=float)
    return RadialSolution(params, r, np.zeros_like(r), np.zeros_like(r), ev,
                          kind="zero", second_derivative=lambda r: np.zeros_like(np.asarray(r, float)))


def _decay_fit(traj: Trajectory, c: DerivedConstants, n=64):
    """Fit ln u against ln r over the earliest decade of radius.

    Points where w strays more than 10% from the leading mode
    w_first e^{lambda_+ (t - t_first)} are dropped.
    """
    t_first = traj.t[0]
    ts = np.linspace(t_first, t_first + math.log(10.0), n)
    ts = ts[ts <= traj.t[-1]]
    w, _ = traj.at(ts)
    lead = traj.w[0] * np.exp(traj.lambda_plus * (ts - t_first))
    keep = np.abs(w - lead) <= 0.1 * np.abs(lead)
    ts, w = ts[keep], w[keep]
    if len(ts) < 2:
        return float("nan"), float("nan")
    slope, _ = np.polyfit(ts, np.log(np.abs(w)) - c.m * ts, 1)
    lam = float(np.abs(traj.w[0]) * math.exp((c.nu_minus - c.m) * t_first))
    return float(slope), lam


def to_radial(traj: Trajectory, constants: DerivedConstants | None = None,
              r=None) -> RadialSolution:
    """Map a trajectory back to u(r) = r^{-m} w(ln r).

    Samples sit at the accepted integrator states unless ``r`` is given.
    """
    if len(traj) == 0:
        raise ValueError("empty trajectory")
    c = constants or traj.constants
    m = c.m

    def ev(r):
        r = np.asarray(r, dtype=float)
        shape = r.shape
        t = np.log(r.ravel())
        w, v = traj.at(t)
        scale = r.ravel() ** (-m)
        u = scale * w
        du = scale / r.ravel() * (v - m * w)
        return u.reshape(shape), du.reshape(shape)

    if len(traj) == 1:
        w, v = traj.w, traj.v
        rr = np.exp(traj.t)
        return RadialSolution(c.params, rr, rr ** -m * w, rr ** (-m - 1) * (v - m * w),
                              lambda r: (_ for _ in ()).throw(ValueError("single state")),
                              domain=(rr[0], rr[0]), kind="shot")
    if r is None:
        # skip states where r^{-m-1} overflows; they are far inside the linear regime
        keep = traj.t * (-m - 1) < 700.0
        rr = np.exp(traj.t[keep])
        u = rr ** (-m) * traj.w[keep]
        du = rr ** (-m - 1) * (traj.v[keep] - m * traj.w[keep])
    else:
        rr = np.asarray(r, dtype=float)
        u, du = ev(rr)
    lo, hi = traj.t_range
    domain = (0.0 if lo == -math.inf else math.exp(lo),
              math.inf if hi == math.inf else math.exp(hi))
    slope, lam = _decay_fit(traj, c)
    return RadialSolution(c.params, rr, u, du, ev, domain=domain, kind="shot",
                          lambda_fit=lam, decay_slope_fit=slope,
                          meta={"converged_to": traj.converged_to},
                          knots_log_r=(float(traj.t[0]), float(traj.t[-1])))


def constant_trajectory(constants: DerivedConstants, t) -> Trajectory:
    """The fixed point (w0, 0) sampled at times ``t``."""
    t = np.asarray(t, dtype=float)
    w = np.full_like(t, constants.w0)
    traj = Trajectory(t, w, np.zeros_like(t), constants, converged_to="w0",
                      lambda_plus=0.0)
    return traj


def radial_residual(sol: RadialSolution, r, method: str = "fd", h: float = 1e-3):
    """Relative residual of u'' + (N-1)u'/r + mu u/r^2 + r^l |u|^{p-1} u.

    ``method="fd"`` takes u'' as a central difference of u' with log-step h;
    ``method="exact"`` uses the solution's own second derivative. The result
    is divided by the sum of the absolute values of the four terms.
    """
    prm = sol.params
    r = np.asarray(r, dtype=float)
    u, du = sol.evaluate(r)
    if method == "exact":
        if sol.second_derivative is None:
            raise ValueError("solution has no closed-form second derivative")
        d2 = sol.second_derivative(r)
    elif method == "fd":
        rp, rm = r * math.exp(h), r * math.exp(-h)
        d2 = (sol.evaluate(rp)[1] - sol.evaluate(rm)[1]) / (rp - rm)
    else:
        raise ValueError(f"unknown method {method!r}")
    terms = [d2, (prm.N - 1) * du / r, prm.mu * u / r ** 2,
             r ** prm.l * np.abs(u) ** (prm.p - 1) * u]
    res = sum(terms)
    scale = sum(np.abs(x) for x in terms)
    return np.where(scale > 0, np.abs(res) / np.where(scale > 0, scale, 1.0), 0.0)


def kelvin_exponent(params: Parameters) -> float:
    """Weight exponent (N-2)(p-1) - (l+4) of the Kelvin-transformed equation."""
    return (params.N - 2) * (params.p - 1) - (params.l + 4)


def kelvin_transform(sol: RadialSolution, constants: DerivedConstants | None = None
                     ) -> tuple[RadialSolution, Parameters]:
    """v(r) = r^{2-N} u(1/r), a solution of the equation with l -> m, mu unchanged."""
    prm = sol.params
    N = prm.N
    m_new = kelvin_exponent(prm)
    if not m_new > -2:
        raise ParameterError(
            f"Kelvin exponent {m_new} <= -2; need p > (N+l)/(N-2)")
    new_params = Parameters(N, m_new, prm.mu, prm.p)

    def ev(r):
        r = np.asarray(r, dtype=float)
        u, du = sol.evaluator(1.0 / r)
        v = r ** (2 - N) * u
        dv = (2 - N) * r ** (1 - N) * u - r ** (-N) * du
        return v, dv

    d2 = None
    if sol.second_derivative is not None:
        def d2(r):
            r = np.asarray(r, dtype=float)
            u, du = sol.evaluator(1.0 / r)
            ddu = sol.second_derivative(1.0 / r)
            return ((2 - N) * (1 - N) * r ** (-N) * u
                    + (2 - N) * r ** (1 - N) * du * (-r ** -2)
                    + N * r ** (-N - 1) * du
                    - r ** (-N) * ddu * (-r ** -2))

    rr = (1.0 / sol.r)[::-1]
    v, dv = ev(rr)
    lo, hi = sol.domain
    domain = (0.0 if hi == math.inf else 1.0 / hi, math.inf if lo == 0 else 1.0 / lo)
    out = RadialSolution(new_params, rr, v, dv, ev, domain=domain, kind="kelvin",
                         second_derivative=d2, meta={"source_kind": sol.kind})
    return out, new_params


def shoot_solution(params: Parameters, **kwargs) -> tuple[Trajectory, RadialSolution]:
    """Convenience: derive, shoot the positive branch, reconstruct u."""
    c = derive(params)
    traj = shoot_unstable_manifold(c, **kwargs)
    return traj, to_radial(traj, c)
