"""Numerical verification of the supporting estimates behind the CLTs.

Four checks, each producing a LemmaReport with per-case numbers:

- corr_asymptotics: the closed-form increment correlation approaches its
  leading large-separation form, with relative error decreasing along a
  distance grid and below 1% at the largest distance.
- corr_envelope: |corr| <= c * l1^(2-alpha) * d^(alpha-2) on the constrained
  geometry family; the empirical constant must be stable when the minimum
  separation doubles.
- neighbor_prob_bounds: Monte Carlo two-adjacency probabilities (plus three
  standard errors) stay below their closed-form envelopes
  pi (1 + 4/pi) R^2 exp(-pi R^2 / 4) at unit intensity.
- exp_moment_bound: the exponential moment of R^(alpha-2) over the radial
  law with CDF r^2/N on [0, sqrt(N)] stays below
  1 + c1 (sqrt N)^(alpha-2) + c2 / N with c1 = 2/alpha and
  c2 = exp(d0^(alpha-2)) d0^(2(alpha-1)) / (1 - alpha).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .errors import NumericalError, ParameterError
from .fbf import increment_corr_asymptotic, increment_corr_exact, powa
from .ioutil import write_json
from .varints import Q_VARIANTS, estimate_p21, estimate_q21

__all__ = [
    "LemmaReport",
    "BoundProbe",
    "DEGENERATE_FACTOR_TOL",
    "check_corr_asymptotics",
    "check_corr_envelope",
    "check_p2n_bounds",
    "check_exp_moment_bound",
    "default_p2n_probes",
    "neighbor_bound",
    "write_lemma_json",
]

DEGENERATE_FACTOR_TOL = 0.05
_REL_ERR_TARGET = 0.01


@dataclass(frozen=True)
class LemmaReport:
    lemma_id: str
    cases: tuple
    passed: bool

    def to_json_dict(self) -> dict:
        return {"lemma_id": self.lemma_id, "cases": list(self.cases), "pass": self.passed}


def write_lemma_json(report: LemmaReport, path) -> None:
    write_json(path, report.to_json_dict())


def _default_angle_grid():
    vals = (0.0, 0.25 * math.pi, 0.5 * math.pi, 0.75 * math.pi)
    return tuple((t, b) for t in vals for b in vals)


def check_corr_asymptotics(
    alpha: float,
    l1: float = 1.0,
    l2: float = 1.0,
    angle_grid=None,
    d_grid=(10.0, 100.0, 1000.0),
) -> LemmaReport:
    """Exact vs leading-order correlation along a distance grid.

    Cases whose angle factor cos b cos t - (1 - alpha) sin b sin t is within
    DEGENERATE_FACTOR_TOL of zero are skipped (the leading term vanishes
    there) and recorded as such.
    """
    if angle_grid is None:
        angle_grid = _default_angle_grid()
    angle_grid = tuple(angle_grid)
    d_grid = tuple(float(d) for d in d_grid)
    if not angle_grid or not d_grid:
        raise ParameterError("angle_grid and d_grid must be nonempty")
    if any(b <= a for a, b in zip(d_grid, d_grid[1:])):
        raise ParameterError("d_grid must be increasing")
    cases = []
    all_ok = True
    for theta, beta in angle_grid:
        factor = math.cos(beta) * math.cos(theta) - (1.0 - alpha) * math.sin(beta) * math.sin(theta)
        inputs = {"theta": theta, "beta": beta, "l1": l1, "l2": l2, "alpha": alpha, "d_grid": list(d_grid)}
        if abs(factor) <= DEGENERATE_FACTOR_TOL:
            cases.append(
                {"inputs": inputs, "lhs": None, "rhs": None, "margin": None, "skipped": True}
            )
            continue
        rel_errs = []
        for d in d_grid:
            x1 = np.array([0.0, d])
            x2 = x1 + l1 * np.array([math.cos(theta), math.sin(theta)])
            x3 = np.array([0.0, 0.0])
            x4 = l2 * np.array([math.cos(beta), math.sin(beta)])
            exact = increment_corr_exact(x1, x2, x3, x4, alpha)
            asym = increment_corr_asymptotic(l1, l2, d, theta, beta, alpha)
            rel_errs.append(abs(exact - asym) / abs(exact))
        decreasing = all(b < a for a, b in zip(rel_errs, rel_errs[1:]))
        ok = decreasing and rel_errs[-1] < _REL_ERR_TARGET
        all_ok = all_ok and ok
        cases.append(
            {
                "inputs": inputs,
                "lhs": rel_errs[-1],
                "rhs": _REL_ERR_TARGET,
                "margin": _REL_ERR_TARGET - rel_errs[-1],
                "rel_errors": rel_errs,
                "decreasing": decreasing,
                "skipped": False,
            }
        )
    if all(c.get("skipped") for c in cases):
        raise ParameterError("every angle case degenerate; nothing to check")
    return LemmaReport("corr_asymptotics", tuple(cases), all_ok)


def _envelope_max_ratio(alpha, epsilon, sample_count, rng, d0, d_span=100.0):
    """max |corr| / (l1^(2-alpha) d^(alpha-2)) over the constrained family."""
    u = rng.random(sample_count)
    d = d0 * d_span**u  # log-uniform on [d0, d0 * d_span]
    t1 = rng.random(sample_count)
    l1 = np.maximum(t1, 1e-9) * powa(d, epsilon)
    l2 = np.maximum(rng.random(sample_count), 1e-9) * l1
    th = rng.random(sample_count) * 2.0 * math.pi
    be = rng.random(sample_count) * 2.0 * math.pi
    best = 0.0
    for k in range(sample_count):
        x1 = np.zeros(2)
        x2 = l1[k] * np.array([math.cos(th[k]), math.sin(th[k])])
        x3 = np.array([d[k], 0.0])
        x4 = x3 + l2[k] * np.array([math.cos(be[k]), math.sin(be[k])])
        corr = increment_corr_exact(x1, x2, x3, x4, alpha)
        ratio = abs(corr) / (l1[k] ** (2.0 - alpha) * d[k] ** (alpha - 2.0))
        if ratio > best:
            best = ratio
    return best


def check_corr_envelope(
    alpha: float,
    epsilon: float = 0.3,
    sample_count: int = 20000,
    rng=None,
    d0: float = 20.0,
) -> LemmaReport:
    """Empirical envelope constant and its stability under doubling d0.

    The same dimensionless draws drive both d0 values (common random
    numbers), so the comparison isolates the d0 dependence.
    """
    if not (0.0 < epsilon < 0.5):
        raise ParameterError("epsilon must lie in (0, 1/2)")
    if rng is None:
        raise ParameterError("an explicit rng is required")
    state = rng.bit_generator.state
    c_base = float(_envelope_max_ratio(alpha, epsilon, sample_count, rng, d0))
    rng.bit_generator.state = state  # replay identical draws at doubled d0
    c_doubled = float(_envelope_max_ratio(alpha, epsilon, sample_count, rng, 2.0 * d0))
    rel_change = abs(c_doubled - c_base) / c_base
    ok = math.isfinite(c_base) and math.isfinite(c_doubled) and rel_change <= 0.10
    case = {
        "inputs": {
            "alpha": alpha,
            "epsilon": epsilon,
            "sample_count": sample_count,
            "d0": d0,
            "d0_doubled": 2.0 * d0,
        },
        "lhs": c_doubled,
        "rhs": c_base,
        "margin": 0.10 - rel_change,
        "relative_change": rel_change,
    }
    return LemmaReport("corr_envelope", (case,), ok)


# ---------------------------------------------------------------------------
# neighbor-probability bounds


@dataclass(frozen=True)
class BoundProbe:
    """One sweep configuration: kind 'pair' or a shared-vertex variant tuple."""

    kind: object
    points: tuple
    inner: int


def neighbor_bound(r: float, intensity: float = 1.0) -> float:
    """pi N (1 + 4 / (pi N)) r^2 exp(-pi N r^2 / 4)."""
    n = intensity
    return math.pi * n * (1.0 + 4.0 / (math.pi * n)) * r * r * math.exp(-0.25 * math.pi * n * r * r)


def _probe_bound_radius(probe: BoundProbe) -> float:
    p = [np.asarray(q, dtype=float) for q in probe.points]
    if probe.kind == "pair":
        d12 = float(np.hypot(*(p[1] - p[0])))
        d34 = float(np.hypot(*(p[3] - p[2])))
        if d34 > d12:
            raise ParameterError("pair probe requires the second pair no longer than the first")
        return d12
    x1, x2, xlast = p
    d12 = float(np.hypot(*(x2 - x1)))
    if probe.kind == (3, 1):
        other = float(np.hypot(*(xlast - x1)))
    elif probe.kind == (3, 2):
        other = float(np.hypot(*(xlast - x2)))
    elif probe.kind == (4, 1):
        other = float(np.hypot(*(x1 - xlast)))
    elif probe.kind == (4, 2):
        other = float(np.hypot(*(x2 - xlast)))
    else:
        raise ParameterError(f"unknown probe kind {probe.kind!r}")
    return max(d12, other)


def default_p2n_probes(inner: int = 200000) -> tuple:
    """Twenty-configuration sweep mixing informative, stringent and trivial cases.

    Stringent cases (bounds near 1e-5) get five times the base budget so a
    single Monte Carlo success cannot push estimate + 3 SE past the bound;
    uninformative cases run at a tenth.
    """
    probes = []

    def pair(d, n):
        pts = ((0.0, 0.0), (d, 0.0), (0.0, 5.0), (d, 5.0))
        probes.append(BoundProbe("pair", pts, n))

    hi = 5 * inner
    lo = max(100, inner // 10)
    pair(2.0, lo)  # bound > 1: trivially satisfied, flagged uninformative
    pair(2.5, inner)
    pair(3.0, inner)
    pair(3.5, inner)
    pair(4.0, hi)
    pair(4.5, hi)  # stringent: bound ~ 1.8e-5

    c, s = math.cos(math.pi / 3.0), math.sin(math.pi / 3.0)
    for r in (2.5, 3.25, 4.0):
        n = inner if r < 4.0 else hi
        probes.append(BoundProbe((3, 1), ((0.0, 0.0), (r, 0.0), (r * c, r * s)), n))
        probes.append(BoundProbe((3, 2), ((0.0, 0.0), (r, 0.0), (r + r * c, r * s)), n))
        probes.append(BoundProbe((4, 1), ((0.0, 0.0), (r, 0.0), (-r * c, -r * s)), n))
        probes.append(BoundProbe((4, 2), ((0.0, 0.0), (r, 0.0), (r - r * c, -r * s)), n))
    probes.append(BoundProbe((3, 1), ((0.0, 0.0), (2.0, 0.0), (2.0 * c, 2.0 * s)), lo))
    r = 4.5
    probes.append(BoundProbe((4, 2), ((0.0, 0.0), (r, 0.0), (r - r * c, -r * s)), hi))
    assert len(probes) == 20
    return tuple(probes)


def check_p2n_bounds(samples=None, inner: int = 200000, rng=None) -> LemmaReport:
    """Estimate + 3 SE must not exceed the closed-form bound for every probe.

    Bounds above 1 hold for any probability; such cases auto-pass and are
    flagged uninformative (their Monte Carlo side still runs, at reduced
    cost in the default sweep).
    """
    if rng is None:
        raise ParameterError("an explicit rng is required")
    if samples is None:
        samples = default_p2n_probes(inner)
    cases = []
    all_ok = True
    for idx, probe in enumerate(samples):
        radius = _probe_bound_radius(probe)
        bound = neighbor_bound(radius)
        sub = rng.spawn(1)[0]
        if probe.kind == "pair":
            est = estimate_p21(*probe.points, probe.inner, sub)
        else:
            est = estimate_q21(probe.kind, probe.points, probe.inner, sub)
        lhs = est.value + 3.0 * est.std_error
        ok = lhs <= bound or bound >= 1.0
        all_ok = all_ok and ok
        cases.append(
            {
                "inputs": {
                    "kind": str(probe.kind),
                    "points": [list(map(float, p)) for p in probe.points],
                    "inner": probe.inner,
                    "bound_radius": radius,
                },
                "lhs": lhs,
                "rhs": bound,
                "margin": bound - lhs,
                "estimate": est.value,
                "std_error": est.std_error,
                "undetermined": est.undetermined,
                "uninformative": bound >= 1.0,
            }
        )
        del idx
    return LemmaReport("neighbor_prob_bounds", tuple(cases), all_ok)


def check_exp_moment_bound(alpha: float, d0: float, n_grid) -> LemmaReport:
    """Quadrature value of E[exp(R^(alpha-2) 1[R >= d0])] against the bound.

    R has CDF r^2/N on [0, sqrt(N)], so E = d0^2/N plus the integral of
    exp(r^(alpha-2)) 2r/N over [d0, sqrt(N)].  Passes when every N from the
    smallest passing one onward satisfies E <= bound.
    """
    if not (0.0 < alpha < 1.0):
        raise ParameterError(f"alpha must lie in (0, 1), got {alpha}")
    if d0 <= 0.0:
        raise ParameterError("d0 must be positive")
    n_grid = tuple(float(n) for n in n_grid)
    if not n_grid or any(math.sqrt(n) <= d0 for n in n_grid):
        raise ParameterError("n_grid entries must satisfy sqrt(N) > d0")
    c1 = 2.0 / alpha
    c2 = math.exp(d0 ** (alpha - 2.0)) * d0 ** (2.0 * (alpha - 1.0)) / (1.0 - alpha)
    cases = []
    statuses = []
    for n in sorted(n_grid):
        sqrt_n = math.sqrt(n)

        def integrand(r):
            return math.exp(r ** (alpha - 2.0)) * 2.0 * r / n

        val, err = integrate.quad(integrand, d0, sqrt_n, limit=400, epsabs=1e-12, epsrel=1e-12)
        if not math.isfinite(val) or err > 1e-9:
            raise NumericalError(
                "quadrature failed to converge", {"N": n, "estimate": val, "abserr": err}
            )
        e_val = d0 * d0 / n + val
        bound = 1.0 + c1 * sqrt_n ** (alpha - 2.0) + c2 / n
        ok = e_val <= bound
        statuses.append(ok)
        cases.append(
            {
                "inputs": {"alpha": alpha, "d0": d0, "N": n, "c1": c1, "c2": c2},
                "lhs": e_val,
                "rhs": bound,
                "margin": bound - e_val,
            }
        )
    smallest = None
    for k in range(len(statuses)):
        if all(statuses[k:]):
            smallest = sorted(n_grid)[k]
            break
    passed = smallest is not None
    for c in cases:
        c["smallest_passing_N"] = smallest
    return LemmaReport("exp_moment_bound", tuple(cases), passed)
