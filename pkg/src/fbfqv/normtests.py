"""Normality tests for replicate statistics: Jarque-Bera and fitted-normal KS.

The KS test fits mean and variance from the data, so the plain Kolmogorov
distribution is wrong; we use the Lilliefors correction in its standard
published forms.  Rejection decisions come from Stephens' modified-statistic
table for the normal case with both parameters estimated:

    T = D (sqrt(n) - 0.01 + 0.85 / sqrt(n)),
    critical T: 0.775 (15%), 0.819 (10%), 0.895 (5%), 0.995 (2.5%), 1.035 (1%).

Reported p-values use the Dallal-Wilkinson approximation

    p = exp(-7.01256 D'^2 (n' + 2.78019) + 2.99587 D' sqrt(n' + 2.78019)
            - 0.122119 + 0.974598 / sqrt(n') + 1.67997 / n'),

with (D', n') = (D (n/100)^0.49, 100) when n > 100, clamped to [0, 1]; the
formula is accurate for p <= 0.10, which covers every rejection decision
made here, and is only indicative above that range.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats as _st

from .errors import DegenerateInputError, ParameterError

__all__ = [
    "MIN_N_JB",
    "MIN_N_KS",
    "STEPHENS_TABLE",
    "TestResult",
    "NormalityReport",
    "sample_moments",
    "jarque_bera",
    "ks_fitted_normal",
    "normality_tests",
]

MIN_N_JB = 8
MIN_N_KS = 20

# (critical value of T, significance level)
STEPHENS_TABLE = (
    (0.775, 0.15),
    (0.819, 0.10),
    (0.895, 0.05),
    (0.995, 0.025),
    (1.035, 0.01),
)


@dataclass(frozen=True)
class TestResult:
    name: str
    statistic: float | None
    p_value: float | None
    status: str  # "ok" or "insufficient"
    details: dict = field(default_factory=dict)

    def rejects(self, level: float = 0.01) -> bool:
        if self.status != "ok":
            return False
        return self.p_value < level


@dataclass(frozen=True)
class NormalityReport:
    jb: TestResult
    ks: TestResult

    def any_rejection(self, level: float = 0.01) -> bool:
        return self.jb.rejects(level) or self.ks.rejects(level)


def sample_moments(values):
    """(n, mean, sample variance, skewness, excess kurtosis).

    Variance uses ddof=1; skewness and kurtosis use population central
    moments, matching the Jarque-Bera statistic's definition.
    """
    x = np.asarray(values, dtype=float).ravel()
    n = len(x)
    if n < 2:
        raise ParameterError("need at least two values")
    mean = float(np.mean(x))
    c = x - mean
    m2 = float(np.mean(c * c))
    if m2 <= 0.0:
        raise DegenerateInputError("degenerate (constant) sample")
    m3 = float(np.mean(c**3))
    m4 = float(np.mean(c**4))
    var = float(np.var(x, ddof=1))
    skew = m3 / m2**1.5
    ex_kurt = m4 / (m2 * m2) - 3.0
    return n, mean, var, skew, ex_kurt


def jarque_bera(values) -> TestResult:
    """JB = n/6 (S^2 + K^2/4) against chi-square with 2 degrees of freedom."""
    x = np.asarray(values, dtype=float).ravel()
    if len(x) < MIN_N_JB:
        return TestResult("jarque_bera", None, None, "insufficient", {"n": len(x)})
    n, _, _, skew, ex_kurt = sample_moments(x)
    stat = n / 6.0 * (skew * skew + 0.25 * ex_kurt * ex_kurt)
    p = float(_st.chi2.sf(stat, 2))
    return TestResult("jarque_bera", float(stat), p, "ok", {"n": n, "skew": skew, "ex_kurt": ex_kurt})


def _lilliefors_p(d: float, n: int) -> float:
    if n > 100:
        dm = d * (n / 100.0) ** 0.49
        nn = 100.0
    else:
        dm = d
        nn = float(n)
    logp = (
        -7.01256 * dm * dm * (nn + 2.78019)
        + 2.99587 * dm * math.sqrt(nn + 2.78019)
        - 0.122119
        + 0.974598 / math.sqrt(nn)
        + 1.67997 / nn
    )
    return min(1.0, max(0.0, math.exp(logp)))


def ks_fitted_normal(values) -> TestResult:
    """Lilliefors test: KS distance to a normal with fitted mean and sd."""
    x = np.asarray(values, dtype=float).ravel()
    if len(x) < MIN_N_KS:
        return TestResult("ks_fitted_normal", None, None, "insufficient", {"n": len(x)})
    n = len(x)
    mean = float(np.mean(x))
    sd = float(np.std(x, ddof=1))
    if sd <= 0.0:
        raise DegenerateInputError("degenerate (constant) sample")
    z = _st.norm.cdf((np.sort(x) - mean) / sd)
    i = np.arange(1, n + 1)
    d = float(max(np.max(i / n - z), np.max(z - (i - 1) / n)))
    t = d * (math.sqrt(n) - 0.01 + 0.85 / math.sqrt(n))
    rejections = {str(level): t > crit for crit, level in STEPHENS_TABLE}
    return TestResult(
        "ks_fitted_normal",
        d,
        _lilliefors_p(d, n),
        "ok",
        {"n": n, "modified_statistic": t, "table_rejections": rejections},
    )


def normality_tests(values) -> NormalityReport:
    """Both tests; short samples yield explicit 'insufficient' results."""
    return NormalityReport(jb=jarque_bera(values), ks=ks_fitted_normal(values))
