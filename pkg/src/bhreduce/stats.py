"""Empirical-vs-analytic comparison machinery.

The limit theorems are asymptotic and come with no convergence rates, so the
finite-t pass policy is deliberately two-sided: a cell passes when the
empirical proportion is within max(3 Wilson half-widths, 0.05 absolute) of
the limit value, and sweeps over growing t must additionally show the error
shrinking.  Chi-square aggregation pools cells with expected count below 5
(classical rule) into the tail cell.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

import numpy as np
from scipy.special import ndtri
from scipy.stats import chi2 as _chi2_dist


class InsufficientSampleError(ValueError):
    """Raised when a comparison is asked to run on an empty sample."""


@dataclass(frozen=True)
class EmpiricalDist:
    """Counts per outcome with stable labels."""

    labels: Tuple
    counts: np.ndarray
    n: int

    @classmethod
    def from_counts(cls, counts: Dict) -> "EmpiricalDist":
        labels = tuple(counts.keys())
        arr = np.asarray([counts[k] for k in labels], dtype=np.int64)
        if np.any(arr < 0):
            raise ValueError("counts must be nonnegative")
        return cls(labels=labels, counts=arr, n=int(arr.sum()))

    @classmethod
    def from_samples(cls, values: Sequence[int]) -> "EmpiricalDist":
        vals, counts = np.unique(np.asarray(values), return_counts=True)
        return cls(labels=tuple(vals.tolist()), counts=counts.astype(np.int64), n=len(values))

    def proportion(self, label) -> float:
        idx = self.labels.index(label)
        return self.counts[idx] / self.n


@dataclass(frozen=True)
class PassPolicy:
    """|empirical - limit| <= max(z_mult half-widths, abs_slack) per cell."""

    z_mult: float = 3.0
    abs_slack: float = 0.05
    confidence: float = 0.95
    pool_threshold: float = 5.0


@dataclass
class ComparisonReport:
    rows: List[Dict] = field(default_factory=list)
    chi2: float = 0.0
    dof: int = 0
    chi2_pvalue: float = 1.0
    tv_distance: float = 0.0
    n: int = 0
    passed: bool = True

    def to_dict(self) -> Dict:
        return {
            "rows": self.rows,
            "chi2": self.chi2,
            "dof": self.dof,
            "chi2_pvalue": self.chi2_pvalue,
            "tv_distance": self.tv_distance,
            "n": self.n,
            "passed": self.passed,
        }


def wilson_interval(successes: int, n: int, confidence: float = 0.95) -> Tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if n < 1:
        raise InsufficientSampleError("need n >= 1 for an interval")
    if not (0 <= successes <= n):
        raise ValueError("successes must lie in [0, n]")
    if not (0.0 < confidence < 1.0):
        raise ValueError("confidence must lie in (0, 1)")
    z = float(ndtri(0.5 + confidence / 2.0))
    p = successes / n
    denom = 1.0 + z * z / n
    center = (p + z * z / (2 * n)) / denom
    half = (z / denom) * math.sqrt(p * (1.0 - p) / n + z * z / (4.0 * n * n))
    lo = 0.0 if successes == 0 else max(0.0, center - half)  # boundary exactness
    hi = 1.0 if successes == n else min(1.0, center + half)
    return lo, hi


def wilson_halfwidth(successes: int, n: int, confidence: float = 0.95) -> float:
    lo, hi = wilson_interval(successes, n, confidence)
    return (hi - lo) / 2.0


def compare_pmf(
    empirical: EmpiricalDist,
    analytic: Dict,
    policy: PassPolicy = PassPolicy(),
) -> ComparisonReport:
    """Compare an empirical distribution against analytic cell probabilities.

    `analytic` maps labels to probabilities; mass not covered by the labels
    forms an implicit tail cell (it must be nonnegative).  Returns per-cell
    Wilson intervals and z-scores, the pooled chi-square statistic, the total
    variation distance over the labelled cells, and the policy verdict.
    """
    n = empirical.n
    if n == 0:
        raise InsufficientSampleError("empty empirical sample; nothing to compare")
    p_analytic = {k: float(v) for k, v in analytic.items()}
    if any(v < -1e-12 for v in p_analytic.values()):
        raise ValueError("analytic probabilities must be nonnegative")
    covered = math.fsum(p_analytic.values())
    if covered > 1.0 + 1e-9:
        raise ValueError(f"analytic probabilities sum to {covered} > 1")
    tail_p = max(0.0, 1.0 - covered)

    emp = dict(zip(empirical.labels, empirical.counts.tolist()))
    tail_count = n - sum(emp.get(k, 0) for k in p_analytic)

    rows: List[Dict] = []
    passed = True
    tv = 0.0
    for label, p in p_analytic.items():
        c = int(emp.get(label, 0))
        phat = c / n
        lo, hi = wilson_interval(c, n, policy.confidence)
        half = (hi - lo) / 2.0
        if 0.0 < p < 1.0:
            z = (phat - p) / math.sqrt(p * (1.0 - p) / n)
        else:
            z = 0.0 if phat == p else math.inf

        tol = max(policy.z_mult * half, policy.abs_slack)
        ok = abs(phat - p) <= tol
        passed &= ok
        tv += abs(phat - p)
        rows.append(
            {
                "label": label,
                "count": c,
                "empirical": phat,
                "wilson_lo": lo,
                "wilson_hi": hi,
                "analytic": p,
                "z": z,
                "tolerance": tol,
                "ok": bool(ok),
            }
        )
    tv = 0.5 * (tv + abs(tail_count / n - tail_p))

    # chi-square with pooling of thin cells into the tail
    pooled_obs, pooled_exp = [], []
    pool_obs, pool_exp = float(tail_count), n * tail_p
    for label, p in p_analytic.items():
        expect = n * p
        if expect < policy.pool_threshold:
            pool_obs += emp.get(label, 0)
            pool_exp += expect
        else:
            pooled_obs.append(float(emp.get(label, 0)))
            pooled_exp.append(expect)
    if pool_exp > 0:
        pooled_obs.append(pool_obs)
        pooled_exp.append(pool_exp)
    chi2 = float(
        sum((o - e) ** 2 / e for o, e in zip(pooled_obs, pooled_exp) if e > 0)
    )
    dof = max(len(pooled_exp) - 1, 1)
    return ComparisonReport(
        rows=rows,
        chi2=chi2,
        dof=dof,
        chi2_pvalue=float(_chi2_dist.sf(chi2, dof)),
        tv_distance=tv,
        n=n,
        passed=bool(passed),
    )


def ks_exponential(samples: np.ndarray) -> float:
    """sup_z | ecdf(z) - (1 - e^{-z}) | for positive samples."""
    samples = np.asarray(samples, dtype=float)
    if samples.size == 0:
        raise InsufficientSampleError("empty sample for KS comparison")
    if np.any(samples < 0):
        raise ValueError("KS-vs-exponential requires nonnegative samples")
    x = np.sort(samples)
    n = len(x)
    cdf = -np.expm1(-x)
    upper = np.max(np.arange(1, n + 1) / n - cdf)
    lower = np.max(cdf - np.arange(0, n) / n)
    return float(max(upper, lower))


@dataclass
class SweepResult:
    t: List[float]
    value: List[float]
    predicted: List[float]
    ratio: List[float]
    error: List[float]
    slope: float          # least-squares slope of log|error| vs log t
    status: str           # "converged" | "trivial" | "not-converged"

    @property
    def converged(self) -> bool:
        return self.status in ("converged", "trivial")


def convergence_sweep(
    entries: Sequence[Tuple[float, float, float]],
    final_window: int = 3,
) -> SweepResult:
    """Assess value/predicted -> 1 along an increasing t grid.

    The sweep converges when |ratio - 1| decreases across the final
    `final_window` grid points; an (almost) constant error sequence counts as
    trivially converged (nothing left to improve).
    """
    entries = sorted(entries, key=lambda e: e[0])
    ts = [float(e[0]) for e in entries]
    if len(ts) != len(set(ts)):
        raise ValueError("duplicate t values in sweep")
    values = [float(e[1]) for e in entries]
    preds = [float(e[2]) for e in entries]
    ratios = [v / p if p != 0 else float("inf") for v, p in zip(values, preds)]
    errors = [abs(r - 1.0) for r in ratios]

    finite = [(math.log(t), math.log(e)) for t, e in zip(ts, errors) if e > 0]
    if len(finite) >= 2:
        xs = np.array([f[0] for f in finite])
        ys = np.array([f[1] for f in finite])
        slope = float(np.polyfit(xs, ys, 1)[0])
    else:
        slope = float("-inf")  # errors identically ~0

    span = max(errors) - min(errors)
    scale = max(max(errors), 1e-300)
    if span <= 1e-12 or span / scale <= 1e-6:
        status = "trivial"
    else:
        tail = errors[-final_window:]
        decreasing = all(b < a + 1e-15 for a, b in zip(tail, tail[1:]))
        status = "converged" if decreasing and len(tail) >= 2 else "not-converged"
    return SweepResult(
        t=ts, value=values, predicted=preds, ratio=ratios, error=errors,
        slope=slope, status=status,
    )
