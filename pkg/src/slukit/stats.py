"""Pearson / Spearman correlation with Student-t significance."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence

from .errors import UndefinedCorrelationError


class PerfectCorrelationWarning(UserWarning):
    """|coef| == 1: t is infinite and p is set to 0 by convention."""


def _check(x, y):
    if len(x) != len(y):
        raise ValueError(f"length mismatch: {len(x)} != {len(y)}")
    if len(x) < 3:
        raise ValueError("need at least 3 observations")


def pearson(x: Sequence[float], y: Sequence[float]) -> float:
    _check(x, y)
    n = len(x)
    mx = math.fsum(x) / n
    my = math.fsum(y) / n
    dx = [a - mx for a in x]
    dy = [b - my for b in y]
    sxx = math.fsum(a * a for a in dx)
    syy = math.fsum(b * b for b in dy)
    if sxx == 0 or syy == 0:
        raise UndefinedCorrelationError("correlation is undefined for a constant vector")
    r = math.fsum(a * b for a, b in zip(dx, dy)) / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, r))


def rankdata(x: Sequence[float]) -> list[float]:
    """1-based ranks, ties get the mean of the ranks they span."""
    order = sorted(range(len(x)), key=lambda i: x[i])
    ranks = [0.0] * len(x)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and x[order[j + 1]] == x[order[i]]:
            j += 1
        avg = (i + j) / 2 + 1
        for k in range(i, j + 1):
            ranks[order[k]] = avg
        i = j + 1
    return ranks


def spearman(x: Sequence[float], y: Sequence[float]) -> float:
    _check(x, y)
    return pearson(rankdata(x), rankdata(y))


def spearman_shortcut(x: Sequence[float], y: Sequence[float]) -> float:
    """1 - 6*sum(d^2)/(n(n^2-1)); only exact when neither vector has ties."""
    _check(x, y)
    n = len(x)
    d2 = sum((a - b) ** 2 for a, b in zip(rankdata(x), rankdata(y)))
    return 1 - 6 * d2 / (n * (n * n - 1))


def _betacf(a, b, x, eps=1e-16, max_iter=10_000):
    # continued fraction for the incomplete beta (modified Lentz)
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1, a - 1
    c = 1.0
    d = 1 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1 / d
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1 + aa * d
        d = tiny if abs(d) < tiny else d
        c = 1 + aa / c
        c = tiny if abs(c) < tiny else c
        d = 1 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1 + aa * d
        d = tiny if abs(d) < tiny else d
        c = 1 + aa / c
        c = tiny if abs(c) < tiny else c
        d = 1 / d
        delta = d * c
        h *= delta
        if abs(delta - 1) < eps:
            return h
    raise ArithmeticError("incomplete beta continued fraction did not converge")


def betainc(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta function I_x(a, b)."""
    if not 0 <= x <= 1:
        raise ValueError("x must be in [0, 1]")
    if x == 0 or x == 1:
        return x
    lbt = math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b) + a * math.log(x) + b * math.log1p(-x)
    bt = math.exp(lbt)
    if x < (a + 1) / (a + b + 2):
        return bt * _betacf(a, b, x) / a
    return 1 - bt * _betacf(b, a, 1 - x) / b


def t_sf_two_tailed(t: float, df: float) -> float:
    """2 * P(T > |t|) for Student's t with ``df`` degrees of freedom."""
    if math.isinf(t):
        return 0.0
    return betainc(df / 2, 0.5, df / (df + t * t))


def p_value(coef: float, n: int) -> tuple[float, float]:
    """t statistic and two-tailed p for a correlation coefficient over ``n`` pairs."""
    if n < 3:
        raise ValueError("need n >= 3")
    if not -1 <= coef <= 1:
        raise ValueError("coefficient outside [-1, 1]")
    if abs(coef) == 1:
        warnings.warn("perfect correlation; p set to 0", PerfectCorrelationWarning, stacklevel=2)
        return math.copysign(math.inf, coef), 0.0
    df = n - 2
    t = coef * math.sqrt(df / (1 - coef * coef))
    return t, min(1.0, t_sf_two_tailed(t, df))


def stars(p: float) -> str:
    if p < 0.01:
        return "**"
    if p < 0.05:
        return "*"
    return ""


@dataclass(frozen=True)
class CorrelationReport:
    r: float
    r_s: float
    t_r: float
    t_rs: float
    p_r: float
    p_rs: float
    n: int

    @property
    def stars_r(self) -> str:
        return stars(self.p_r)

    @property
    def stars_rs(self) -> str:
        return stars(self.p_rs)

    def to_dict(self) -> dict:
        return {"n": self.n, "r": self.r, "t_r": self.t_r, "p_r": self.p_r, "stars_r": self.stars_r,
                "r_s": self.r_s, "t_rs": self.t_rs, "p_rs": self.p_rs, "stars_rs": self.stars_rs}

    def block(self, x_name="x", y_name="y") -> str:
        """Two-row text block: coefficients with significance markers."""
        return (
            f"Correlation coef.\t{x_name} ~ {y_name}\tn={self.n}\n"
            f"Pearson (r)\t{self.r:.2f}{self.stars_r}\tt={self.t_r:.3f}\tp={self.p_r:.3g}\n"
            f"Spearman (r_s)\t{self.r_s:.2f}{self.stars_rs}\tt={self.t_rs:.3f}\tp={self.p_rs:.3g}\n"
            "* p<0.05 ; ** p<0.01\n"
        )


def correlate(x: Sequence[float], y: Sequence[float]) -> CorrelationReport:
    r = pearson(x, y)
    rs = spearman(x, y)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", PerfectCorrelationWarning)
        t_r, p_r = p_value(r, len(x))
        t_rs, p_rs = p_value(rs, len(x))
    return CorrelationReport(r, rs, t_r, t_rs, p_r, p_rs, len(x))
