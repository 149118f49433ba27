"""Two-sample t-tests (pooled and Welch) with a self-contained Student-t CDF."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .core import TRAIT_CODES, TraitVector

_BETA_RTOL = 1e-10
_BETA_MAXITER = 1000
_TINY = 1e-300


class DegenerateSampleError(ValueError):
    """Both groups have zero variance but different means; t is infinite."""


@dataclass(frozen=True)
class SampleSummary:
    n: int
    mean: float
    sd: float


@dataclass(frozen=True)
class TTestResult:
    statistic: float
    df: float
    p_two_tailed: float
    variant: str
    a: SampleSummary
    b: SampleSummary


def summarize(sample: Sequence[float]) -> SampleSummary:
    x = np.asarray(sample, dtype=float)
    if x.size == 0:
        raise ValueError("cannot summarize an empty sample")
    sd = float(np.std(x, ddof=1)) if x.size > 1 else 0.0
    return SampleSummary(int(x.size), float(np.mean(x)), sd)


def _betacf(a: float, b: float, x: float) -> float:
    # modified Lentz evaluation of the incomplete-beta continued fraction
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    d = 1.0 / (d if abs(d) > _TINY else _TINY)
    h = d
    for m in range(1, _BETA_MAXITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = 1.0 / (d if abs(d) > _TINY else _TINY)
        c = 1.0 + aa / c
        c = c if abs(c) > _TINY else _TINY
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = 1.0 / (d if abs(d) > _TINY else _TINY)
        c = 1.0 + aa / c
        c = c if abs(c) > _TINY else _TINY
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _BETA_RTOL * 1e-2:
            return h
    raise ArithmeticError(f"incomplete beta did not converge for a={a}, b={b}, x={x}")


def betainc_regularized(a: float, b: float, x: float, y: float | None = None) -> float:
    """I_x(a, b) for a, b > 0 and 0 <= x <= 1.

    ``y`` may carry an exactly computed ``1 - x`` to avoid cancellation near x = 1.
    """
    if not (0.0 <= x <= 1.0):
        raise ValueError("x must lie in [0, 1]")
    if y is None:
        y = 1.0 - x
    if x == 0.0 or y == 0.0:
        return 0.0 if x == 0.0 else 1.0
    ln_front = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
                + a * math.log(x) + b * math.log(y))
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, y) / b


def _two_tailed(t: float, df: float) -> float:
    t2 = t * t
    return betainc_regularized(df / 2.0, 0.5, df / (df + t2), t2 / (df + t2))


def t_sf(t: float, df: float) -> float:
    """Upper-tail probability P(T > t) for Student's t with ``df`` degrees of freedom."""
    if df <= 0:
        raise ValueError("df must be positive")
    tail = 0.5 * _two_tailed(t, df)
    return tail if t >= 0 else 1.0 - tail


def t_cdf(t: float, df: float) -> float:
    return t_sf(-t, df)


def p_two_tailed(t: float, df: float) -> float:
    return min(1.0, _two_tailed(t, df))


def t_test(a: Sequence[float], b: Sequence[float], variant: str = "pooled") -> TTestResult:
    sa, sb = summarize(a), summarize(b)
    if sa.n < 2 or sb.n < 2:
        raise ValueError("each sample needs at least 2 observations")
    if variant not in ("pooled", "welch"):
        raise ValueError(f"unknown t-test variant {variant!r}")
    va, vb = sa.sd ** 2, sb.sd ** 2
    diff = sa.mean - sb.mean

    if va == 0.0 and vb == 0.0:
        if diff != 0.0:
            raise DegenerateSampleError("zero variance in both groups with different means")
        df = float(sa.n + sb.n - 2)
        return TTestResult(0.0, df, 1.0, variant, sa, sb)

    if variant == "pooled":
        df = float(sa.n + sb.n - 2)
        sp2 = ((sa.n - 1) * va + (sb.n - 1) * vb) / df
        se = math.sqrt(sp2 * (1.0 / sa.n + 1.0 / sb.n))
    else:
        qa, qb = va / sa.n, vb / sb.n
        se = math.sqrt(qa + qb)
        df = (qa + qb) ** 2 / (qa * qa / (sa.n - 1) + qb * qb / (sb.n - 1))
    t = diff / se
    return TTestResult(t, df, p_two_tailed(t, df), variant, sa, sb)


def compare_evolved_traits(best_runs: Sequence[TraitVector], worst_runs: Sequence[TraitVector]
                           ) -> dict[str, dict[str, TTestResult]]:
    """Per-trait pooled and Welch tests on per-run team-mean traits.

    Returns ``{trait_code: {"pooled": ..., "welch": ...}}`` in N, E, O, A, C order.
    """
    a = np.array([tv.as_array() for tv in best_runs])
    b = np.array([tv.as_array() for tv in worst_runs])
    if len(a) < 2 or len(b) < 2:
        raise ValueError("each side needs at least 2 evolved teams")
    return {
        code: {v: t_test(a[:, k], b[:, k], v) for v in ("pooled", "welch")}
        for k, code in enumerate(TRAIT_CODES)
    }


COMPARE_COLUMNS = ("trait", "variant", "n1", "mean1", "sd1", "n2", "mean2", "sd2", "t", "df", "p")


def comparison_rows(table: Mapping[str, Mapping[str, TTestResult]]):
    for trait, by_variant in table.items():
        for variant, r in by_variant.items():
            yield (trait, variant, r.a.n, r.a.mean, r.a.sd, r.b.n, r.b.mean, r.b.sd,
                   r.statistic, r.df, r.p_two_tailed)
