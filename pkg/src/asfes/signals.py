"""Dither and demodulation signals, the softened max, and period arithmetic.

Frequencies are stored as exact rationals times a common base scale so that
admissibility (no duplicate frequencies, no pair summing to a third) and the
common period are decided in integer arithmetic rather than floating point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Sequence

import numpy as np

from .errors import (
    DuplicateFrequency,
    NonPositiveAmplitude,
    NonPositiveDelta,
    ResonantTriple,
    ValidationError,
)


def _as_fraction(r) -> Fraction:
    if isinstance(r, Fraction):
        return r
    if isinstance(r, int):
        return Fraction(r)
    if isinstance(r, str):
        return Fraction(r)
    if isinstance(r, float):
        if not r.is_integer():
            raise ValidationError(
                f"frequency ratio {r!r} is a non-integer float; pass a string "
                "or Fraction so the rational value is exact"
            )
        return Fraction(int(r))
    raise ValidationError(f"cannot interpret frequency ratio {r!r}")


@dataclass(frozen=True)
class DitherConfig:
    """Probing amplitude plus frequencies ``base_scale * ratio_i``."""

    amplitude: float
    ratios: tuple
    base_scale: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "amplitude", float(self.amplitude))
        object.__setattr__(self, "base_scale", float(self.base_scale))
        ratios = tuple(_as_fraction(r) for r in self.ratios)
        object.__setattr__(self, "ratios", ratios)
        if self.amplitude <= 0.0:
            raise NonPositiveAmplitude("dither amplitude must be positive")
        if self.base_scale <= 0.0:
            raise ValidationError("base_scale must be positive")
        if not ratios:
            raise ValidationError("at least one dither frequency is required")
        if any(r <= 0 for r in ratios):
            raise ValidationError("frequency ratios must be positive")
        validate_frequencies(ratios)

    @property
    def dimension(self) -> int:
        return len(self.ratios)

    def omegas(self) -> np.ndarray:
        """Frequencies in radians per unit time."""
        return self.base_scale * np.array([float(r) for r in self.ratios])

    @property
    def omega_max(self) -> float:
        return self.base_scale * float(max(self.ratios))


def validate_frequencies(cfg) -> None:
    """Reject duplicate ratios and any pair summing to a third ratio.

    Accepts a :class:`DitherConfig` or a plain sequence of ratios.  The
    checks use exact rational comparison.
    """
    ratios: Sequence[Fraction]
    if isinstance(cfg, DitherConfig):
        ratios = cfg.ratios
    else:
        ratios = tuple(_as_fraction(r) for r in cfg)
    n = len(ratios)
    for i, j in combinations(range(n), 2):
        if ratios[i] == ratios[j]:
            raise DuplicateFrequency(i, j)
    for i, j in combinations(range(n), 2):
        for k in range(n):
            if k == i or k == j:
                continue
            if ratios[i] + ratios[j] == ratios[k]:
                raise ResonantTriple(i, j, k)


def smooth_max(x, delta: float):
    """Softened positive part (x + sqrt(x^2 + delta)) / 2.

    Strictly positive for every x, exceeding max(x, 0) by at most
    sqrt(delta)/2 (the gap peaks at x = 0).  Keeping the output positive is
    what lets the safety filter gain stay differentiable.
    """
    if delta <= 0.0:
        raise NonPositiveDelta("delta must be positive")
    x = np.asarray(x, dtype=float)
    out = 0.5 * (x + np.sqrt(x * x + delta))
    return float(out) if out.ndim == 0 else out


def dither(cfg: DitherConfig, t: float) -> np.ndarray:
    """Probing signal, component i equal to a*sin(omega_i t)."""
    return cfg.amplitude * np.sin(cfg.omegas() * t)


def demod(cfg: DitherConfig, t: float) -> np.ndarray:
    """Demodulation signal, component i equal to (2/a)*sin(omega_i t)."""
    return (2.0 / cfg.amplitude) * np.sin(cfg.omegas() * t)


def newton_demod(amplitude: float, omega: float, t: float) -> float:
    """Second-order demodulator (16/a^2)(sin^2(omega t) - 1/2), scalar case."""
    if amplitude <= 0.0:
        raise NonPositiveAmplitude("amplitude must be positive")
    s = math.sin(omega * t)
    return (16.0 / amplitude**2) * (s * s - 0.5)


def common_period(cfg: DitherConfig) -> float:
    """Common period of sin(ratio_i * tau) in the normalized phase tau.

    Computed exactly as 2*pi*lcm(q_i)/gcd(p_i) for ratios p_i/q_i in lowest
    terms.  Divide by ``base_scale`` for the period in plant time; see
    :func:`signal_period`.
    """
    num = math.gcd(*(r.numerator for r in cfg.ratios))
    den = math.lcm(*(r.denominator for r in cfg.ratios))
    return 2.0 * math.pi * den / num


def signal_period(cfg: DitherConfig) -> float:
    """Interval after which the dither and demodulation signals repeat."""
    return common_period(cfg) / cfg.base_scale
