"""Acceptance suite: one PASS/FAIL line per criterion, with runtime.

Run ``pytest tests/test_acceptance.py`` (lines appear in the summary) or
``python3 tests/test_acceptance.py`` to print the lines directly.
"""

import math
import time
from contextlib import contextmanager

import numpy as np
import pytest
from scipy.stats import qmc

from hardystab.cli import main as cli_main
from hardystab.estimates import (
    alpha_beta,
    annulus_growth,
    pohozaev_check,
    pohozaev_power_law,
    scaling_exponent,
    scaling_exponent_infimum,
)
from hardystab.exponents import (
    Parameters,
    derive,
    f_of_p,
    gamma_max,
    mu_bar,
    p_critical,
    p_critical_bisect,
    p_critical_closed_form,
    sobolev_exponent,
)
from hardystab.phase import positive_node_discriminant, shoot_solution, singular_solution, unstable_eigenvalue
from hardystab.regions import membership_S, membership_Sigma, near_boundary, sample_stable, sample_unstable, sigma_margins
from hardystab.stability import adversarial_search, hardy_sufficient, random_bumps, verify_weak_solution

RESULTS: list[str] = []


@contextmanager
def criterion(number, title, budget=None):
    """Time the body; it sets box["ok"] and box["detail"]. Records one line."""
    box = {"ok": False, "detail": ""}
    start = time.perf_counter()
    try:
        yield box
    finally:
        secs = time.perf_counter() - start
        ok = box["ok"] and (budget is None or secs < budget)
        limit = f" (limit {budget:g} s)" if budget else ""
        line = f"[{'PASS' if ok else 'FAIL'}] {number:>2}. {title}: {box['detail']} [{secs:.2f} s{limit}]"
        RESULTS.append(line)
        print(line)
    assert ok, line


def random_tuples(n, seed, mu_lo=-20.0):
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < n:
        N = int(rng.integers(3, 26))
        mu = float(rng.uniform(mu_lo, mu_bar(N)))
        if mu >= mu_bar(N):
            continue
        out.append(Parameters(N, float(rng.uniform(-1.9, 6.0)), mu, float(rng.uniform(1.01, 50.0))))
    return out


@pytest.fixture(scope="module")
def stable_tuples():
    return sample_stable(12, 0, 10, seed=1) + sample_stable(15, 1, 10, seed=2)


@pytest.fixture(scope="module")
def shots(stable_tuples):
    return {}


def test_c01_closed_form_p_c():
    with criterion(1, "p_c closed form vs bisection root of f(p,0)=N", budget=1.0) as box:
        worst, count = 0.0, 0
        for N in range(11, 21):
            for l in (-0.5, 0.0, 1.0, 2.0):
                if N > 10 + 4 * l:
                    a, b = p_critical_closed_form(N, l), p_critical_bisect(N, l, 0.0)
                    worst = max(worst, abs(a - b) / a)
                    count += 1
        box["ok"] = worst < 1e-9
        box["detail"] = f"{count} pairs, max rel diff {worst:.2e} (tol 1e-9)"


def test_c02_limit_laws():
    with criterion(2, "p_c limits at mu -> 0+ and mu -> mu_bar", budget=1.0) as box:
        d0 = d1 = 0.0
        diverging = []
        for N in (11, 13):
            for l in (0.0, 1.0):
                pc0 = p_critical(N, l, 0.0)
                if math.isinf(pc0):
                    # N <= 10 + 4l: the limit is +inf, approached like C/mu
                    a, b = p_critical(N, l, 1e-6), p_critical(N, l, 1e-8)
                    diverging.append(a > 1e6 and abs(1e-8 * b / (1e-6 * a) - 1) < 1e-3)
                else:
                    d0 = max(d0, abs(p_critical(N, l, 1e-6) - pc0))
                d1 = max(d1, abs(p_critical(N, l, mu_bar(N) - 1e-6) - sobolev_exponent(N, l)))
        box["ok"] = d0 < 1e-4 and d1 < 1e-3 and all(diverging)
        box["detail"] = (f"finite p_c(l,0): max |p_c(1e-6)-p_c(0)| {d0:.2e} (tol 1e-4); "
                         f"infinite p_c(l,0): {sum(diverging)}/{len(diverging)} diverge like 1/mu; "
                         f"max |p_c(mu_bar-1e-6)-p_S| {d1:.2e} (tol 1e-3)")


def test_c03_S_equals_Sigma():
    with criterion(3, "S = Sigma on 10,000 Sobol points per (N,l)", budget=10.0) as box:
        mismatches = skipped = 0
        for N, l in [(11, 0.0), (12, 0.0), (15, 1.0)]:
            pts = qmc.Sobol(2, scramble=True, seed=100 + N).random_base2(14)[:10000]
            mus = -2.0 + pts[:, 0] * (mu_bar(N) + 2.0) * 0.9999
            ps = 1.0 + 1e-6 + 40.0 * pts[:, 1]
            for mu, p in zip(mus, ps):
                prm = Parameters(N, l, float(mu), float(p))
                if near_boundary(prm, 1e-6):
                    skipped += 1
                    continue
                mismatches += membership_S(prm) != membership_Sigma(prm)
        box["ok"] = mismatches == 0
        box["detail"] = f"{mismatches} mismatches, {skipped} points in boundary bands"


def test_c04_eigenvalue_identity():
    with criterion(4, "lambda_+ + nu_- = (l+2)/(p-1)", budget=1.0) as box:
        worst = 0.0
        for prm in random_tuples(100, seed=4):
            c = derive(prm)
            worst = max(worst, abs(unstable_eigenvalue(c) + c.nu_minus - c.m) / max(1.0, c.m))
        box["ok"] = worst < 1e-10
        box["detail"] = f"100 tuples, max error {worst:.2e} (tol 1e-10)"


def test_c05_shooting(stable_tuples, shots):
    with criterion(5, "shooting on 20 tuples of S", budget=30.0) as box:
        fails = []
        worst = {"energy": 0.0, "weak": 0.0, "slope": 0.0}
        for i, prm in enumerate(stable_tuples):
            c = derive(prm)
            traj, sol = shoot_solution(prm)
            shots[i] = sol
            weak = verify_weak_solution(sol, prm, random_bumps(10, seed=i))
            slope = abs(sol.decay_slope_fit + c.nu_minus)
            worst["energy"] = max(worst["energy"], traj.max_energy_violation)
            worst["weak"] = max(worst["weak"], weak)
            worst["slope"] = max(worst["slope"], slope)
            if not (traj.converged_to == "w0" and traj.envelope_ok()
                    and traj.max_energy_violation < 1e-9 and weak < 1e-6 and slope < 1e-3):
                fails.append(prm)
        n_neg = sum(p.mu <= 0 for p in stable_tuples)
        box["ok"] = not fails and 0 < n_neg < len(stable_tuples)
        box["detail"] = (f"{len(stable_tuples) - len(fails)}/20 ok ({n_neg} with mu <= 0); "
                         f"energy {worst['energy']:.1e}, weak {worst['weak']:.1e}, "
                         f"slope err {worst['slope']:.1e}")


def test_c06_stability(stable_tuples, shots):
    with criterion(6, "stability on S, instability below p_c", budget=60.0) as box:
        bad_margin = found_neg = 0
        for i, prm in enumerate(stable_tuples):
            sol = shots.get(i) or shoot_solution(prm)[1]
            bad_margin += hardy_sufficient(prm).margin < 0
            found_neg += adversarial_search(sol, prm).found is not None
        unstable = sample_unstable(11, 0.0, 5, seed=6, require=_negative_margin) + \
            sample_unstable(14, 0.5, 5, seed=7, require=_negative_margin)
        missed = sum(adversarial_search(singular_solution(derive(prm)), prm).found is None
                     for prm in unstable)
        box["ok"] = bad_margin == 0 and found_neg == 0 and missed == 0
        box["detail"] = (f"S: {bad_margin} negative margins, {found_neg} negative Q; "
                         f"Unstable: {10 - missed}/10 with Q < 0 found")


def _negative_margin(prm):
    return derive(prm).has_w0 and hardy_sufficient(prm).margin < 0


def test_c07_spiral_dichotomy():
    with criterion(7, "discriminant sign vs third Sigma inequality", budget=5.0) as box:
        mismatches = banded = 0
        for prm in random_tuples(1000, seed=7):
            c = derive(prm)
            third = sigma_margins(prm)[2]
            if abs(third) < 1e-6 * max(1.0, c.mu_bar):
                banded += 1
                continue
            mismatches += (positive_node_discriminant(c) >= 0) != (third >= 0)
        box["ok"] = mismatches == 0
        box["detail"] = f"1000 samples, {mismatches} mismatches, {banded} in bands"


def test_c08_pohozaev(stable_tuples, shots):
    with criterion(8, "Pohozaev identity", budget=10.0) as box:
        rng = np.random.default_rng(8)
        worst_s = worst_o = worst_u = 0.0
        for k in range(20):
            prm = stable_tuples[k % len(stable_tuples)]
            us = singular_solution(derive(prm))
            sigma = float(np.exp(rng.uniform(-3.0, 1.0)))
            R = sigma * float(np.exp(rng.uniform(0.2, 4.0)))
            num = pohozaev_check(us, prm, sigma, R)
            exact = pohozaev_power_law(prm, sigma, R)
            worst_s = max(worst_s, num.residual, exact.residual)
            worst_o = max(worst_o, abs(num.lhs - exact.lhs) / max(abs(exact.lhs), 1.0),
                          abs(num.rhs - exact.rhs) / max(abs(exact.rhs), 1.0))
        for i, prm in enumerate(stable_tuples):
            sol = shots.get(i) or shoot_solution(prm)[1]
            worst_u = max(worst_u, pohozaev_check(sol, prm, 0.1, 10.0).residual)
        box["ok"] = worst_s < 1e-8 and worst_o < 1e-8 and worst_u < 1e-5
        box["detail"] = (f"U_s residual {worst_s:.1e}, vs closed form {worst_o:.1e} (tol 1e-8); "
                         f"shot residual on (0.1,10) {worst_u:.1e} (tol 1e-5)")


def test_c09_scaling_exponent():
    with criterion(9, "inf of scaling exponent = N - f; U_s annulus rate", budget=10.0) as box:
        worst = 0.0
        for prm in random_tuples(200, seed=9):
            worst = max(worst, abs(scaling_exponent_infimum(prm) - (prm.N - f_of_p(prm))))
        worst_rate = 0.0
        for prm in [Parameters(12, 0, 0, 5), Parameters(11, 1, 3.0, 4.0), Parameters(20, 2, -4.0, 7.5)]:
            us = singular_solution(derive(prm))
            for gamma in (1.0, 0.5 * (1 + gamma_max(prm))):
                rep = annulus_growth(us, prm, gamma, radii=[2, 4, 8, 16, 32])
                worst_rate = max(worst_rate, abs(rep.rate - scaling_exponent(prm, gamma)))
        box["ok"] = worst < 1e-8 and worst_rate < 1e-4
        box["detail"] = f"200 tuples, max inf error {worst:.1e} (tol 1e-8); annulus rate error {worst_rate:.1e} (tol 1e-4)"


def test_c10_alpha_beta_positive():
    with criterion(10, "alpha, beta > 0 below gamma_M", budget=5.0) as box:
        rng = np.random.default_rng(10)
        violations = 0
        for prm in random_tuples(10000, seed=10):
            gm = gamma_max(prm)
            gamma = float(rng.uniform(1.0, gm - 1e-6))
            a, b = alpha_beta(prm, gamma)
            violations += not (b > 0 and (a is None or a > 0))
        box["ok"] = violations == 0
        box["detail"] = f"10000 triples, {violations} violations"


def test_c11_determinism(tmp_path):
    with criterion(11, "byte-identical sweep output") as box:
        paths = [tmp_path / "run1.csv", tmp_path / "run2.csv"]
        codes = [cli_main(["sweep", "--N", "11", "--l", "0", "--mu-range", "-0.3:0.24:50",
                           "--p-range", "1.1:20:50", "--seed", "7", "--out", str(p)])
                 for p in paths]
        same = paths[0].read_bytes() == paths[1].read_bytes()
        curves = [p.with_name(p.stem + ".curves.csv").read_bytes() for p in paths]
        box["ok"] = codes == [0, 0] and same and curves[0] == curves[1]
        box["detail"] = f"cells identical: {same}, curves identical: {curves[0] == curves[1]}"


if __name__ == "__main__":
    import sys
    sys.exit(pytest.main([__file__, "-q", "-s", "-p", "no:cacheprovider"]))
