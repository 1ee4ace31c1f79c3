"""Offspring and lifetime laws for critical Bellman-Harris processes.

An offspring law is a finite pmf (f_0, ..., f_K) with mean exactly 1
(criticality) and positive, finite variance.  A lifetime law is either a
lattice pmf on {1, 2, ...} with span 1, or a continuous distribution
(exponential or uniform).  From the two the model constants are derived:

    mu = E[tau],   sigma2 = Var[xi],   B = sigma2 / (2 mu),

B being the scale constant of every asymptotic law in the package (survival
probability ~ 1/(B t), Yaglom scaling Z(t)/(B t), conditioning thresholds
B*phi(t) and B*a*t).

All law objects are immutable after construction and safe to share across
workers; sampling always takes an explicit stream.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from .rng import Stream

PMF_TOL = 1e-12        # tolerated deviation of sum(pmf) from 1 before rejection
CRITICAL_TOL = 1e-9    # tolerated deviation of the offspring mean from 1


class ModelError(ValueError):
    """Invalid model specification (non-normalized pmf, non-critical mean, ...)."""


@dataclass(frozen=True)
class OffspringLaw:
    """Finite offspring pmf with criticality metadata.

    `second_log_moment` is E[xi^2 log(xi+1)], the extra moment required by
    the local limit theorem; finite automatically for finite support.
    """

    pmf: np.ndarray
    mean: float
    variance: float
    second_log_moment: float

    @property
    def kmax(self) -> int:
        return len(self.pmf) - 1

    def pgf(self, s: float) -> float:
        """f(s) = sum_k f_k s^k by Horner evaluation."""
        acc = 0.0
        for fk in self.pmf[::-1]:
            acc = acc * s + fk
        return acc

    def pgf_derivatives(self, s: float, order: int) -> np.ndarray:
        """(f(s), f'(s), ..., f^(order)(s)) by repeated Horner on the derivative
        coefficient arrays."""
        out = np.empty(order + 1)
        coeffs = self.pmf.astype(float)
        for r in range(order + 1):
            acc = 0.0
            for c in coeffs[::-1]:
                acc = acc * s + c
            out[r] = acc
            coeffs = coeffs[1:] * np.arange(1, len(coeffs))
        return out


@dataclass(frozen=True)
class LifetimeLaw:
    """Lifetime distribution G: lattice pmf on {1..Lmax} or a continuous family."""

    kind: str                       # "lattice" | "exponential" | "uniform"
    mean: float
    third_moment: float
    lattice_pmf: Optional[np.ndarray] = None   # index ell-1 -> g_ell
    rate: Optional[float] = None               # exponential
    a: Optional[float] = None                  # uniform lower endpoint
    b: Optional[float] = None                  # uniform upper endpoint
    degenerate: bool = False                   # single-atom lattice (oracle mode only)

    @property
    def is_lattice(self) -> bool:
        return self.kind == "lattice"

    @property
    def lmax(self) -> int:
        if self.lattice_pmf is None:
            raise ModelError("lmax is defined only for lattice lifetimes")
        return len(self.lattice_pmf)

    def cdf(self, t: float) -> float:
        """G(t) = P(tau <= t)."""
        if t < 0:
            return 0.0
        if self.kind == "lattice":
            n = min(int(math.floor(t)), self.lmax)
            return float(np.sum(self.lattice_pmf[:n]))
        if self.kind == "exponential":
            return -math.expm1(-self.rate * t)
        # uniform(a, b)
        if t <= self.a:
            return 0.0
        if t >= self.b:
            return 1.0
        return (t - self.a) / (self.b - self.a)

    def sf(self, t: float) -> float:
        """1 - G(t), computed without cancellation for the exponential tail."""
        if self.kind == "exponential":
            return math.exp(-self.rate * t) if t >= 0 else 1.0
        return 1.0 - self.cdf(t)


@dataclass(frozen=True)
class ModelConstants:
    mu: float
    sigma2: float
    B: float
    is_lattice: bool


@dataclass(frozen=True)
class Model:
    """An offspring law, a lifetime law, and the derived constants."""

    offspring: OffspringLaw
    lifetime: LifetimeLaw
    constants: ModelConstants
    oracle_mode: bool = False
    name: str = ""


def make_offspring(pmf: Sequence[float]) -> OffspringLaw:
    """Validate and package an offspring pmf.

    Rejects empty/negative input, non-normalized mass (beyond 1e-12; smaller
    residuals are renormalized away), non-critical mean (beyond 1e-9) and
    zero variance.
    """
    arr = np.asarray(pmf, dtype=float)
    if arr.ndim != 1 or len(arr) == 0:
        raise ModelError("offspring pmf must be a nonempty sequence")
    if np.any(arr < 0) or np.any(arr > 1):
        raise ModelError("offspring probabilities must lie in [0, 1]")
    total = float(np.sum(arr))
    if abs(total - 1.0) > PMF_TOL:
        raise ModelError(
            f"offspring pmf sums to {total!r}; residual mass exceeds {PMF_TOL}"
        )
    arr = arr / total
    k = np.arange(len(arr), dtype=float)
    mean = float(np.dot(k, arr))
    if abs(mean - 1.0) > CRITICAL_TOL:
        raise ModelError(f"offspring mean {mean!r} is not critical (|mean-1| > {CRITICAL_TOL})")
    second = float(np.dot(k * k, arr))
    variance = second - mean * mean
    if variance <= 0.0:
        raise ModelError("offspring variance must be positive (degenerate law rejected)")
    second_log = float(np.dot(k * k * np.log1p(k), arr))
    arr.setflags(write=False)
    return OffspringLaw(pmf=arr, mean=mean, variance=variance, second_log_moment=second_log)


def make_lattice_lifetime(pmf_by_step: dict, *, allow_degenerate: bool = False) -> LifetimeLaw:
    """Lattice lifetime from {step: probability} with positive integer steps.

    The support must have gcd 1 (span 1) and at least two atoms unless
    `allow_degenerate` (oracle mode, e.g. tau == 1 for the Galton-Watson
    closed-form oracle).
    """
    if not pmf_by_step:
        raise ModelError("lattice lifetime pmf is empty")
    steps = {}
    for raw_step, p in pmf_by_step.items():
        step = int(raw_step)
        if step != float(raw_step) or step < 1:
            raise ModelError(f"lattice lifetime step {raw_step!r} is not a positive integer")
        if p < 0:
            raise ModelError("lattice lifetime probabilities must be nonnegative")
        steps[step] = steps.get(step, 0.0) + float(p)
    support = sorted(s for s, p in steps.items() if p > 0)
    if not support:
        raise ModelError("lattice lifetime pmf has no mass")
    total = sum(steps.values())
    if abs(total - 1.0) > PMF_TOL:
        raise ModelError(f"lattice lifetime pmf sums to {total!r}")
    span = 0
    for s in support:
        span = math.gcd(span, s)
    if span > 1:
        raise ModelError(f"lattice lifetime support has span {span} > 1; span 1 required")
    degenerate = len(support) == 1
    if degenerate and not allow_degenerate:
        raise ModelError(
            "degenerate single-atom lattice lifetime is permitted only in "
            "oracle mode (theorem checks require two support atoms)"
        )
    lmax = support[-1]
    g = np.zeros(lmax)
    for s, p in steps.items():
        g[s - 1] = p / total
    g.setflags(write=False)
    ell = np.arange(1, lmax + 1, dtype=float)
    mu = float(np.dot(ell, g))
    third = float(np.dot(ell**3, g))
    return LifetimeLaw(
        kind="lattice", mean=mu, third_moment=third, lattice_pmf=g, degenerate=degenerate
    )


def make_exponential_lifetime(rate: float) -> LifetimeLaw:
    if rate <= 0:
        raise ModelError("exponential rate must be positive")
    return LifetimeLaw(
        kind="exponential", mean=1.0 / rate, third_moment=6.0 / rate**3, rate=float(rate)
    )


def make_uniform_lifetime(a: float, b: float) -> LifetimeLaw:
    if not (0 <= a < b):
        raise ModelError("uniform lifetime requires 0 <= a < b")
    mean = 0.5 * (a + b)
    third = (b**4 - a**4) / (4.0 * (b - a))
    return LifetimeLaw(kind="uniform", mean=mean, third_moment=third, a=float(a), b=float(b))


def make_lifetime(spec: dict, *, allow_degenerate: bool = False) -> LifetimeLaw:
    """Build a lifetime law from its JSON-style description."""
    kind = spec.get("kind")
    if kind == "lattice":
        return make_lattice_lifetime(spec["pmf"], allow_degenerate=allow_degenerate)
    if kind == "exponential":
        return make_exponential_lifetime(spec["rate"])
    if kind == "uniform":
        return make_uniform_lifetime(spec["a"], spec["b"])
    raise ModelError(f"unknown lifetime kind {kind!r}")


def constants(offspring: OffspringLaw, lifetime: LifetimeLaw) -> ModelConstants:
    """Derive (mu, sigma2, B, is_lattice); pure and deterministic."""
    return ModelConstants(
        mu=lifetime.mean,
        sigma2=offspring.variance,
        B=offspring.variance / (2.0 * lifetime.mean),
        is_lattice=lifetime.is_lattice,
    )


def make_model(
    offspring_pmf: Sequence[float],
    lifetime_spec: dict,
    *,
    oracle_mode: bool = False,
    name: str = "",
) -> Model:
    off = make_offspring(offspring_pmf)
    life = make_lifetime(lifetime_spec, allow_degenerate=oracle_mode)
    return Model(
        offspring=off,
        lifetime=life,
        constants=constants(off, life),
        oracle_mode=oracle_mode,
        name=name,
    )


# ---------------------------------------------------------------------------
# Sampling


def sample_offspring(law: OffspringLaw, stream: Stream, size: Optional[int] = None):
    """Offspring draw(s) by inverse cdf on the finite pmf."""
    cdf = np.cumsum(law.pmf)
    if size is None:
        return int(np.searchsorted(cdf, stream.uniform(), side="right"))
    u = stream.uniforms(size)
    return np.searchsorted(cdf, u, side="right").astype(np.int64)


def sample_lifetime(law: LifetimeLaw, stream: Stream, size: Optional[int] = None):
    """Lifetime draw(s): inverse cdf (lattice), -log(1-u)/rate, or a+(b-a)u."""
    if size is None:
        u = stream.uniform()
        if law.kind == "lattice":
            return float(np.searchsorted(np.cumsum(law.lattice_pmf), u, side="right") + 1)
        if law.kind == "exponential":
            return -math.log1p(-u) / law.rate
        return law.a + (law.b - law.a) * u
    u = stream.uniforms(size)
    if law.kind == "lattice":
        return (np.searchsorted(np.cumsum(law.lattice_pmf), u, side="right") + 1).astype(float)
    if law.kind == "exponential":
        return -np.log1p(-u) / law.rate
    return law.a + (law.b - law.a) * u


# ---------------------------------------------------------------------------
# Model files and built-in models


def model_to_dict(model: Model) -> dict:
    life = model.lifetime
    if life.kind == "lattice":
        lifetime = {
            "kind": "lattice",
            "pmf": {str(i + 1): float(p) for i, p in enumerate(life.lattice_pmf) if p > 0},
        }
    elif life.kind == "exponential":
        lifetime = {"kind": "exponential", "rate": life.rate}
    else:
        lifetime = {"kind": "uniform", "a": life.a, "b": life.b}
    return {
        "offspring": {"pmf": [float(p) for p in model.offspring.pmf]},
        "lifetime": lifetime,
        "oracle_mode": model.oracle_mode,
    }


def load_model(path: Union[str, Path]) -> Model:
    """Read and validate a model JSON document."""
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    try:
        pmf = doc["offspring"]["pmf"]
        lifetime_spec = doc["lifetime"]
    except (KeyError, TypeError) as exc:
        raise ModelError(f"model file {path}: missing field {exc}") from exc
    oracle = bool(doc.get("oracle_mode", False))
    return make_model(pmf, lifetime_spec, oracle_mode=oracle, name=Path(path).stem)


def save_model(model: Model, path: Union[str, Path]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(model), fh, indent=2, sort_keys=True)
        fh.write("\n")


def geometric_offspring_pmf(kmax: int = 60) -> list:
    """Critical geometric offspring f_k = 2^-(k+1), truncated at `kmax`.

    Residual mass 2^-(kmax+1) (< 1e-18 at the default truncation) is far
    below the 1e-12 normalization tolerance and gets renormalized away.
    """
    return [2.0 ** -(k + 1) for k in range(kmax + 1)]


def builtin_model(name: str) -> Model:
    """The three models used throughout the test and acceptance suites.

    bin-lat : offspring (1/2, 0, 1/2), lifetime uniform on {1, 2}; B = 1/3.
    geo-exp : geometric offspring, exponential(1) lifetime; B = 1.
    geo-det : geometric offspring, tau == 1 (oracle mode; Galton-Watson
              closed form F_n(s) = (n - (n-1)s) / (n+1 - ns)); B = 1.
    """
    key = name.lower().replace("_", "-")
    if key == "bin-lat":
        return make_model(
            [0.5, 0.0, 0.5], {"kind": "lattice", "pmf": {"1": 0.5, "2": 0.5}}, name="bin-lat"
        )
    if key == "geo-exp":
        return make_model(
            geometric_offspring_pmf(), {"kind": "exponential", "rate": 1.0}, name="geo-exp"
        )
    if key == "geo-det":
        return make_model(
            geometric_offspring_pmf(),
            {"kind": "lattice", "pmf": {"1": 1.0}},
            oracle_mode=True,
            name="geo-det",
        )
    raise ModelError(f"unknown builtin model {name!r} (expected bin-lat, geo-exp or geo-det)")
