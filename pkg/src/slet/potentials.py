"""Radial potentials and their truncated Taylor data.

A potential is described by a :class:`PotentialSpec` holding a Lorentz
4-vector part ``V(r)`` and a Lorentz scalar part ``S(r)``.  Every evaluation
returns a :class:`RadialSeries`: the value and the first eight radial
derivatives at a point, which is what the shifted-l expansion consumes.

Builtin kinds use closed-form derivatives.  Numerical differentiation is
never used here because sixth to eighth derivatives by finite differences are
far too noisy for the coefficient ladder.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigurationError, DomainError

#: Highest derivative order carried by a potential series.
MAX_ORDER = 8

_FACTORIALS = np.array([math.factorial(n) for n in range(MAX_ORDER + 4)], dtype=float)


class PotentialKind(str, enum.Enum):
    COULOMB_VECTOR = "coulomb_vector"
    LINEAR_SCALAR = "linear_scalar"
    POWER_LAW_EQUAL_MIX = "power_law_equal_mix"
    CUSTOM = "custom"


@dataclass(frozen=True)
class RadialSeries:
    """Value and derivatives of a radial function at ``r``.

    ``d[n]`` is the n-th derivative, so ``d[0]`` is the value.  Potential
    series carry orders 0..8; derived quantities (such as the effective
    potential, which consumes two derivatives of ``y``) carry fewer.

    Products follow the Leibniz rule, which makes this a small forward-mode
    Taylor arithmetic.
    """

    r: float
    d: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "d", np.asarray(self.d, dtype=float))

    @property
    def order(self) -> int:
        return len(self.d) - 1

    @property
    def value(self) -> float:
        return float(self.d[0])

    def __getitem__(self, n: int) -> float:
        return float(self.d[n])

    def __len__(self) -> int:
        return len(self.d)

    def taylor(self) -> np.ndarray:
        """Taylor coefficients ``d[n] / n!``."""
        return self.d / _FACTORIALS[: len(self.d)]

    @classmethod
    def from_taylor(cls, r: float, c: np.ndarray) -> "RadialSeries":
        return cls(r, np.asarray(c) * _FACTORIALS[: len(c)])

    @classmethod
    def constant(cls, r: float, value: float, order: int = MAX_ORDER) -> "RadialSeries":
        d = np.zeros(order + 1)
        d[0] = value
        return cls(r, d)

    @classmethod
    def power(cls, r: float, p: float, coef: float = 1.0, order: int = MAX_ORDER) -> "RadialSeries":
        """Series of ``coef * r**p``."""
        return cls(r, _power_derivatives(coef, p, r, order))

    def truncated(self, order: int) -> "RadialSeries":
        return RadialSeries(self.r, self.d[: order + 1])

    def derivative(self) -> "RadialSeries":
        """Series of the first derivative (one order shorter)."""
        return RadialSeries(self.r, self.d[1:])

    def _coerce(self, other) -> "RadialSeries":
        if isinstance(other, RadialSeries):
            return other
        return RadialSeries.constant(self.r, float(other), self.order)

    def __add__(self, other):
        other = self._coerce(other)
        n = min(len(self.d), len(other.d))
        return RadialSeries(self.r, self.d[:n] + other.d[:n])

    __radd__ = __add__

    def __sub__(self, other):
        other = self._coerce(other)
        n = min(len(self.d), len(other.d))
        return RadialSeries(self.r, self.d[:n] - other.d[:n])

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __neg__(self):
        return RadialSeries(self.r, -self.d)

    def __mul__(self, other):
        if not isinstance(other, RadialSeries):
            return RadialSeries(self.r, self.d * float(other))
        n = min(len(self.d), len(other.d))
        c = np.convolve(self.taylor()[:n], other.taylor()[:n])[:n]
        return RadialSeries.from_taylor(self.r, c)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, RadialSeries):
            return self * other.reciprocal()
        return RadialSeries(self.r, self.d / float(other))

    def reciprocal(self) -> "RadialSeries":
        a = self.taylor()
        if a[0] == 0.0:
            raise DomainError("reciprocal of a series with zero value")
        b = np.zeros_like(a)
        b[0] = 1.0 / a[0]
        for k in range(1, len(a)):
            b[k] = -np.dot(a[1 : k + 1], b[k - 1 :: -1][:k]) / a[0]
        return RadialSeries.from_taylor(self.r, b)

    def sqrt(self) -> "RadialSeries":
        a = self.taylor()
        if a[0] <= 0.0:
            raise DomainError("square root of a non-positive series")
        s = np.zeros_like(a)
        s[0] = math.sqrt(a[0])
        for k in range(1, len(a)):
            s[k] = (a[k] - np.dot(s[1:k], s[k - 1 : 0 : -1])) / (2.0 * s[0])
        return RadialSeries.from_taylor(self.r, s)

    def extrapolate(self, h: float) -> float:
        """Evaluate the truncated Taylor polynomial at ``r + h``."""
        return float(np.polyval(self.taylor()[::-1], h))


def _power_derivatives(coef: float, p: float, r, order: int) -> np.ndarray:
    """Derivatives 0..order of ``coef * r**p``; ``r`` may be an array."""
    r = np.asarray(r, dtype=float)
    out = np.empty((order + 1,) + r.shape)
    falling = coef
    for n in range(order + 1):
        if falling == 0.0:
            out[n] = 0.0
        else:
            out[n] = falling * r ** (p - n)
        falling *= p - n
    return out


@dataclass(frozen=True)
class PotentialSpec:
    """Declarative description of ``S(r)`` and ``V(r)``.

    Use the constructors :meth:`coulomb`, :meth:`linear_scalar`,
    :meth:`power_law` and :meth:`custom` rather than filling fields by hand.
    Custom evaluators take a radius and return nine numbers: the value and
    derivatives 1..8.
    """

    kind: PotentialKind
    alpha: float | None = None
    A: float | None = None
    nu: float | None = None
    V0: float = 0.0
    vector_fn: Callable[[float], Sequence[float]] | None = field(default=None, compare=False)
    scalar_fn: Callable[[float], Sequence[float]] | None = field(default=None, compare=False)

    def __post_init__(self):
        try:
            kind = PotentialKind(self.kind)
        except ValueError:
            raise ConfigurationError(f"unknown potential kind {self.kind!r}") from None
        object.__setattr__(self, "kind", kind)
        if kind is PotentialKind.COULOMB_VECTOR:
            if self.alpha is None or not 0.0 < self.alpha < 1.0:
                raise ConfigurationError("Coulomb coupling must satisfy 0 < alpha < 1")
        elif kind is PotentialKind.LINEAR_SCALAR:
            if self.A is None or not self.A > 0.0:
                raise ConfigurationError("linear scalar strength A must be positive")
        elif kind is PotentialKind.POWER_LAW_EQUAL_MIX:
            if self.A is None or not self.A > 0.0:
                raise ConfigurationError("power-law strength A must be positive")
            if self.nu is None or not self.nu > 0.0:
                raise ConfigurationError("power-law exponent nu must be positive")
        elif self.vector_fn is None and self.scalar_fn is None:
            raise ConfigurationError("custom potential needs a vector or scalar evaluator")

    @classmethod
    def coulomb(cls, alpha: float) -> "PotentialSpec":
        """Vector Coulomb well ``V = -alpha/r``, ``S = 0``."""
        return cls(PotentialKind.COULOMB_VECTOR, alpha=alpha)

    @classmethod
    def linear_scalar(cls, A: float) -> "PotentialSpec":
        """Scalar confinement ``S = A r``, ``V = 0``."""
        return cls(PotentialKind.LINEAR_SCALAR, A=A)

    @classmethod
    def power_law(cls, A: float, nu: float, V0: float = 0.0) -> "PotentialSpec":
        """Equal mixture ``V = S = A r**nu + V0``."""
        return cls(PotentialKind.POWER_LAW_EQUAL_MIX, A=A, nu=nu, V0=V0)

    @classmethod
    def custom(cls, vector=None, scalar=None) -> "PotentialSpec":
        return cls(PotentialKind.CUSTOM, vector_fn=vector, scalar_fn=scalar)

    @property
    def is_equal_mix(self) -> bool:
        return self.kind is PotentialKind.POWER_LAW_EQUAL_MIX

    def length_scale(self, m: float) -> float:
        """Natural radius used to seed root brackets."""
        if self.kind is PotentialKind.LINEAR_SCALAR:
            return self.A ** -0.5
        if self.kind is PotentialKind.POWER_LAW_EQUAL_MIX:
            return self.A ** (-1.0 / (self.nu + 1.0))
        return 1.0 / m


def _check_radius(r) -> None:
    if isinstance(r, float):
        if not (r > 0.0 and math.isfinite(r)):
            raise DomainError(f"radius must be positive and finite, got {r!r}")
        return
    if np.any(np.asarray(r) <= 0.0) or not np.all(np.isfinite(r)):
        raise DomainError(f"radius must be positive and finite, got {r!r}")


def _custom_table(fn, r, order: int) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    if fn is None:
        return np.zeros((order + 1,) + r.shape)
    flat = [np.asarray(fn(float(x)), dtype=float) for x in r.ravel()]
    for row in flat:
        if row.shape != (MAX_ORDER + 1,):
            raise ConfigurationError("custom evaluator must return 9 values (orders 0..8)")
    table = np.stack(flat, axis=-1)[: order + 1] if flat else np.zeros((order + 1, 0))
    return table.reshape((order + 1,) + r.shape)


def vector_table(spec: PotentialSpec, r, order: int = MAX_ORDER) -> np.ndarray:
    """Derivatives of ``V`` with shape ``(order + 1, *r.shape)``."""
    _check_radius(r)
    kind = spec.kind
    if kind is PotentialKind.COULOMB_VECTOR:
        return _power_derivatives(-spec.alpha, -1.0, r, order)
    if kind is PotentialKind.LINEAR_SCALAR:
        return np.zeros((order + 1,) + np.shape(r))
    if kind is PotentialKind.POWER_LAW_EQUAL_MIX:
        out = _power_derivatives(spec.A, spec.nu, r, order)
        out[0] += spec.V0
        return out
    if kind is PotentialKind.CUSTOM:
        return _custom_table(spec.vector_fn, r, order)
    raise ConfigurationError(f"unknown potential kind {kind!r}")


def scalar_table(spec: PotentialSpec, r, order: int = MAX_ORDER) -> np.ndarray:
    """Derivatives of ``S`` with shape ``(order + 1, *r.shape)``."""
    _check_radius(r)
    kind = spec.kind
    if kind is PotentialKind.COULOMB_VECTOR:
        return np.zeros((order + 1,) + np.shape(r))
    if kind is PotentialKind.LINEAR_SCALAR:
        return _power_derivatives(spec.A, 1.0, r, order)
    if kind is PotentialKind.POWER_LAW_EQUAL_MIX:
        return vector_table(spec, r, order)
    if kind is PotentialKind.CUSTOM:
        return _custom_table(spec.scalar_fn, r, order)
    raise ConfigurationError(f"unknown potential kind {kind!r}")


def eval_vector_series(spec: PotentialSpec, r: float, order: int = MAX_ORDER) -> RadialSeries:
    """``V(r)`` and its derivatives up to ``order``."""
    return RadialSeries(float(r), vector_table(spec, float(r), order))


def eval_scalar_series(spec: PotentialSpec, r: float, order: int = MAX_ORDER) -> RadialSeries:
    """``S(r)`` and its derivatives up to ``order``."""
    return RadialSeries(float(r), scalar_table(spec, float(r), order))


def eval_y_series(spec: PotentialSpec, r: float, order: int = MAX_ORDER) -> RadialSeries:
    """``y = V - S``, the combination that drives the spin-dependent term.

    For the equal mixture this is identically zero at every order.
    """
    if spec.is_equal_mix:
        _check_radius(r)
        return RadialSeries(float(r), np.zeros(order + 1))
    return eval_vector_series(spec, r, order) - eval_scalar_series(spec, r, order)
