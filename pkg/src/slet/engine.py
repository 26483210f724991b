"""Shifted-l expansion of one relativistic bound state.

The radial equation for the large Dirac component (or the Klein-Gordon
radial function when ``lam == 0``) is rewritten with ``l = lbar + beta`` and
expanded in ``1/lbar`` around the minimum ``r0`` of the leading energy.  The
pipeline for one state is

1. :func:`solve_expansion_point` - coupled fixed point for ``(r0, beta, w)``;
2. :func:`coefficient_ladder` - anharmonic coefficients of the shifted
   oscillator, in two passes because ``delta1``/``delta2`` need ``E2``;
3. :func:`energy_series` - ``E0 + E2/lbar**2 + E3/lbar**3``.

:func:`solve_state` runs all three.  Everything here is a pure function of
``(PotentialSpec, StateSpec)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import ConfigurationError, ConvergenceError, DomainError, NoBoundStateError
from .potentials import (
    PotentialSpec,
    RadialSeries,
    eval_scalar_series,
    eval_vector_series,
    scalar_table,
    vector_table,
)

R0_TOL = 1e-12
MAX_ITERATIONS = 200
DAMPING = 0.5
E1_TOL = 1e-10
SCAN_DECADES = (-6.0, 6.0)
SCAN_POINTS_PER_DECADE = 20
DISC_CLAMP = 1e-12


@dataclass(frozen=True)
class StateSpec:
    """Quantum numbers of one state.

    ``k`` is the Dirac quantum number, ``-(l+1)`` for ``j = l + 1/2`` and
    ``l`` for ``j = l - 1/2``.  ``lam`` switches the spin-dependent term on
    (Dirac, 1) or off (Klein-Gordon, 0).
    """

    n_r: int
    l: int
    k: int
    lam: int
    m: float

    def __post_init__(self):
        if self.n_r < 0 or self.l < 0:
            raise ConfigurationError("n_r and l must be non-negative")
        if self.k == 0 or self.k * (self.k + 1) != self.l * (self.l + 1):
            raise ConfigurationError(f"k={self.k} is incompatible with l={self.l}")
        if self.lam not in (0, 1):
            raise ConfigurationError("lam must be 0 (Klein-Gordon) or 1 (Dirac)")
        if not self.m > 0.0:
            raise ConfigurationError("particle mass must be positive")

    @property
    def j(self) -> float:
        return self.l + 0.5 if self.k < 0 else self.l - 0.5


@dataclass(frozen=True)
class ExpansionPoint:
    r0: float
    beta: float
    w: float
    lbar: float
    Q: float
    E0: float
    iterations: int
    residual: float  # relative residual of the r0 condition
    curvature: float  # finite-difference d2E0/dr0^2


@dataclass(frozen=True)
class CoefficientSet:
    eps1: float
    eps2: float
    eps3: float
    eps4: float
    delta3: float
    delta4: float
    delta5: float
    delta6: float
    alpha1: float
    delta1: float | None = None
    delta2: float | None = None
    alpha2: float | None = None

    @property
    def eps(self) -> tuple[float, float, float, float]:
        return (self.eps1, self.eps2, self.eps3, self.eps4)

    @property
    def deltas(self) -> tuple:
        return (self.delta1, self.delta2, self.delta3, self.delta4, self.delta5, self.delta6)


@dataclass(frozen=True)
class EnergyBreakdown:
    state: StateSpec
    potential: PotentialSpec
    E0: float
    E1: float
    E2: float
    E3: float
    E2_term: float
    E3_term: float
    E_total: float
    r0: float
    beta: float
    w: float
    lbar: float
    coefficients: CoefficientSet
    point: ExpansionPoint

    @property
    def W(self) -> float:
        return self.E_total - self.state.m

    @property
    def E_second(self) -> float:
        """Energy truncated after the ``1/lbar**2`` term."""
        return self.E0 + self.E2_term


def gamma_series(spec: PotentialSpec, state: StateSpec, r: float, order: int = 6) -> RadialSeries:
    """Effective potential ``gamma = -V**2 + (m + S)**2 + U`` with derivatives.

    ``U = (lam/4m) [y'' - 2k y'/r + 3 y'**2/(4m)]`` with ``y = V - S``.  Two
    orders of the potential are spent on ``y''``, so an order-8 potential
    yields ``gamma`` up to order 6.
    """
    if r <= 0.0:
        raise DomainError(f"radius must be positive, got {r!r}")
    n = order + 2
    v = eval_vector_series(spec, r, n)
    s = eval_scalar_series(spec, r, n)
    mass = s + state.m
    gamma = (mass * mass - v * v).truncated(order)
    if state.lam:
        yp = (v - s).derivative()
        ypp = yp.derivative()
        inv_r = RadialSeries.power(r, -1.0, order=order)
        u = ypp - 2.0 * state.k * (yp * inv_r) + (3.0 / (4.0 * state.m)) * (yp * yp)
        gamma = gamma + u.truncated(order) * (state.lam / (4.0 * state.m))
    return gamma


def _leading_from(v0: float, g0: float, r0: float, Q: float) -> float:
    radicand = v0 * v0 + Q / (r0 * r0) + g0
    if radicand < 0.0:
        raise NoBoundStateError(f"no bound expansion at r0={r0:g}: negative radicand {radicand:g}")
    return v0 + math.sqrt(radicand)


def leading_energy(spec: PotentialSpec, state: StateSpec, r0: float, Q: float) -> float:
    """Particle-branch leading energy ``V + sqrt(V**2 + Q/r0**2 + gamma)``."""
    v = eval_vector_series(spec, r0, 0)
    g = gamma_series(spec, state, r0, 0)
    return _leading_from(v[0], g[0], r0, Q)


def _local(spec, state, r: float) -> tuple[float, float, float, float, float, float]:
    """``V, V', V'', gamma, gamma', gamma''`` as plain floats.

    Same quantities as :func:`gamma_series` truncated at order 2, written
    out by hand because the r0 search evaluates them hundreds of times.
    """
    v = vector_table(spec, r, 4)
    s = scalar_table(spec, r, 4)
    ms = state.m + s[0]
    g0 = ms * ms - v[0] * v[0]
    g1 = 2.0 * (ms * s[1] - v[0] * v[1])
    g2 = 2.0 * (s[1] * s[1] + ms * s[2] - v[1] * v[1] - v[0] * v[2])
    if state.lam:
        y1, y2, y3, y4 = (v[i] - s[i] for i in range(1, 5))
        k, m = state.k, state.m
        c = state.lam / (4.0 * m)
        q = 3.0 / (4.0 * m)
        u0 = y2 - 2.0 * k * y1 / r + q * y1 * y1
        u1 = y3 - 2.0 * k * (y2 / r - y1 / r**2) + 2.0 * q * y1 * y2
        u2 = y4 - 2.0 * k * (y3 / r - 2.0 * y2 / r**2 + 2.0 * y1 / r**3) + 2.0 * q * (y2 * y2 + y1 * y3)
        g0 += c * u0
        g1 += c * u1
        g2 += c * u2
    return float(v[0]), float(v[1]), float(v[2]), float(g0), float(g1), float(g2)


def _residual(spec, state, Q: float, r: float) -> tuple[float, float]:
    """Residual of the r0 condition and its slope in r.

    The discriminant ``b**2 - 4c`` is evaluated in the factored form
    ``r**6 V'**2 [4V**2 + 4gamma + 4rVV' + 2r gamma' + r**2 V'**2]`` which
    vanishes exactly when ``V' = 0`` instead of leaving roundoff whose square
    root would be ~1e-8 of ``b``.
    """
    v0, v1, v2, g0, g1, g2 = _local(spec, state, r)
    r3 = r**3
    core = 2.0 * v0 * v1 + g1 + r * v1 * v1
    core_p = 2.0 * v1 * v1 + 2.0 * v0 * v2 + g2 + v1 * v1 + 2.0 * r * v1 * v2
    f = r3 * core - 2.0 * Q
    fp = 3.0 * r * r * core + r3 * core_p
    inner = 4.0 * v0 * v0 + 4.0 * g0 + 4.0 * r * v0 * v1 + 2.0 * r * g1 + (r * v1) ** 2
    size = 4.0 * v0 * v0 + 4.0 * abs(g0) + abs(4.0 * r * v0 * v1) + abs(2.0 * r * g1) + (r * v1) ** 2
    if v1 == 0.0 or abs(inner) <= DISC_CLAMP * size:
        return f, fp
    if inner < 0.0:
        raise DomainError(f"negative discriminant in the r0 condition at r={r:g}")
    inner_p = (
        8.0 * v0 * v1
        + 4.0 * g1
        + 4.0 * (v0 * v1 + r * v1 * v1 + r * v0 * v2)
        + 2.0 * (g1 + r * g2)
        + 2.0 * r * v1 * v1
        + 2.0 * r * r * v1 * v2
    )
    sq = math.sqrt(inner)
    f += r3 * abs(v1) * sq
    fp += 3.0 * r * r * abs(v1) * sq + r3 * math.copysign(1.0, v1) * v2 * sq + r3 * abs(v1) * inner_p / (2.0 * sq)
    return f, fp


def _e0_derivatives(spec, state, r: float, Q: float) -> tuple[float, float, float]:
    """``E0`` and its first two derivatives in r at fixed Q."""
    v0, v1, v2, g0, g1, g2 = _local(spec, state, r)
    rad = v0 * v0 + Q / r**2 + g0
    if rad <= 0.0:
        raise NoBoundStateError(f"no bound expansion at r0={r:g}: negative radicand {rad:g}")
    rad1 = 2.0 * v0 * v1 - 2.0 * Q / r**3 + g1
    rad2 = 2.0 * v1 * v1 + 2.0 * v0 * v2 + 6.0 * Q / r**4 + g2
    sq = math.sqrt(rad)
    return v0 + sq, v1 + rad1 / (2.0 * sq), v2 + rad2 / (2.0 * sq) - rad1 * rad1 / (4.0 * rad * sq)


def _curvature(spec, state, r0: float, Q: float) -> float:
    h = 1e-4 * r0
    e = [leading_energy(spec, state, r0 + s * h, Q) for s in (-1, 0, 1)]
    return (e[0] - 2.0 * e[1] + e[2]) / (h * h)


def _polish(spec, state, Q: float, lo: float, hi: float) -> float:
    root = brentq(lambda x: _residual(spec, state, Q, x)[0], lo, hi, xtol=1e-15 * lo, rtol=1e-15, maxiter=200)
    for _ in range(2):
        f, fp = _residual(spec, state, Q, root)
        if fp == 0.0 or not math.isfinite(fp):
            break
        step = f / fp
        if not lo <= root - step <= hi:
            break
        root -= step
        if abs(step) <= 1e-16 * root:
            break
    return root


def _is_minimum(spec, state, r: float, Q: float) -> float | None:
    """Leading energy at ``r`` if it is a genuine minimum, else ``None``."""
    try:
        e0, e1, e2 = _e0_derivatives(spec, state, r, Q)
    except (DomainError, NoBoundStateError):
        return None
    v1 = _local(spec, state, r)[1]
    # squaring the stationarity condition admits roots where dE0/dr = 2V'
    if abs(e1) > 1e-6 * abs(v1) + 1e-9 * abs(e0) / r:
        return None
    if e2 <= 0.0:
        return None
    return e0


def _scan_roots(spec, state, Q: float) -> list[float]:
    lo, hi = SCAN_DECADES
    num = int((hi - lo) * SCAN_POINTS_PER_DECADE) + 1
    grid = spec.length_scale(state.m) * np.logspace(lo, hi, num)
    values = []
    for x in grid:
        try:
            values.append(_residual(spec, state, Q, x)[0])
        except (DomainError, NoBoundStateError, FloatingPointError):
            values.append(math.nan)
    roots = []
    for i in range(num - 1):
        a, b = values[i], values[i + 1]
        if math.isfinite(a) and math.isfinite(b) and a * b < 0.0:
            roots.append(_polish(spec, state, Q, grid[i], grid[i + 1]))
    return roots


def _newton(spec, state, Q: float, x: float) -> float | None:
    for _ in range(12):
        try:
            f, fp = _residual(spec, state, Q, x)
        except (DomainError, NoBoundStateError):
            return None
        if fp == 0.0 or not math.isfinite(fp):
            return None
        step = f / fp
        if abs(step) > 0.2 * x:
            return None
        x -= step
        if abs(step) <= 4e-16 * x:
            return x
    return None


def _locate_r0(spec, state, Q: float, near: float | None) -> float:
    if near is not None:
        root = _newton(spec, state, Q, near)
        if root is not None and _is_minimum(spec, state, root, Q) is not None:
            return root
        for factor in (1.02, 1.2, 2.0):
            lo, hi = near / factor, near * factor
            try:
                flo = _residual(spec, state, Q, lo)[0]
                fhi = _residual(spec, state, Q, hi)[0]
            except (DomainError, NoBoundStateError):
                continue
            if flo * fhi < 0.0:
                root = _polish(spec, state, Q, lo, hi)
                if _is_minimum(spec, state, root, Q) is not None:
                    return root
    best = None
    for root in _scan_roots(spec, state, Q):
        e0 = _is_minimum(spec, state, root, Q)
        if e0 is not None and (best is None or e0 < best[0]):
            best = (e0, root)
    if best is None:
        raise NoBoundStateError(f"no minimum of the leading energy for n_r={state.n_r}, l={state.l}, Q={Q:g}")
    return best[1]


def _frequency(v2: float, g2: float, r0: float, Q: float, e0: float) -> float:
    w2 = 12.0 + 2.0 * r0**4 * g2 / Q + 4.0 * r0**4 * v2 * e0 / Q
    if w2 <= 0.0:
        raise NoBoundStateError(f"imaginary oscillator frequency (w^2={w2:g})")
    return math.sqrt(w2)


def solve_expansion_point(
    spec: PotentialSpec,
    state: StateSpec,
    *,
    tol: float = R0_TOL,
    max_iter: int = MAX_ITERATIONS,
    damping: float = DAMPING,
) -> ExpansionPoint:
    """Self-consistent ``(r0, beta, w)`` for one state.

    Each sweep solves the r0 condition at the current shift, evaluates
    ``E0`` and the oscillator frequency ``w``, and moves ``beta`` halfway
    toward ``-(1 + (n_r + 1/2) w)/2``, the value that cancels the first-order
    energy.  Stops once both ``r0`` and ``beta`` are stable to ``tol``.
    """
    n_r, l = state.n_r, state.l
    beta = -(1.0 + (n_r + 0.5) * 2.0) / 2.0
    r0 = None
    step_r = step_beta = math.inf
    for it in range(1, max_iter + 1):
        lbar = l - beta
        if lbar <= 0.0:
            raise NoBoundStateError(f"non-positive lbar={lbar:g}")
        Q = lbar * lbar
        r_new = _locate_r0(spec, state, Q, r0)
        v0, _, v2, g0, _, g2 = _local(spec, state, r_new)
        e0 = _leading_from(v0, g0, r_new, Q)
        w = _frequency(v2, g2, r_new, Q, e0)
        beta_target = -(1.0 + (n_r + 0.5) * w) / 2.0
        step_r = abs(r_new - r0) / r_new if r0 is not None else math.inf
        step_beta = abs(beta_target - beta) / max(1.0, abs(beta))
        if step_r < tol and step_beta < tol:
            f, _ = _residual(spec, state, Q, r_new)
            return ExpansionPoint(
                r0=r_new,
                beta=beta,
                w=w,
                lbar=lbar,
                Q=Q,
                E0=e0,
                iterations=it,
                residual=abs(f) / (2.0 * Q),
                curvature=_curvature(spec, state, r_new, Q),
            )
        r0 = r_new
        beta = damping * beta + (1.0 - damping) * beta_target
    raise ConvergenceError(
        f"expansion point did not converge in {max_iter} iterations "
        f"(|dr0|/r0={step_r:.2e}, |dbeta|={step_beta:.2e})",
        residual=max(step_r, step_beta),
    )


def anharmonic_corrections(
    eps: tuple[float, float, float, float],
    w: float,
    n_r: int,
    deltas: tuple | None = None,
) -> tuple[float, float | None]:
    """Second- and third-order eigenvalue corrections of the shifted oscillator.

    ``eps`` are the coefficients of ``x, x**2, x**3, x**4`` at order
    ``lbar**-1/2`` and ``lbar**-1``; ``deltas`` those of ``x .. x**6`` at
    orders ``lbar**-3/2`` and ``lbar**-2``.  Returns ``(alpha1, alpha2)``,
    with ``alpha2`` None when ``deltas`` is not supplied or incomplete.
    """
    if not w > 0.0:
        raise DomainError("oscillator frequency must be positive")
    n = n_r
    e1, e2, e3, e4 = (c / w ** (0.5 * (j + 1)) for j, c in enumerate(eps))
    p1 = 1 + 2 * n
    p2 = 1 + 2 * n + 2 * n * n
    alpha1 = p1 * e2 + 3 * p2 * e4 - (e1 * e1 + 6 * p1 * e1 * e3 + (11 + 30 * n + 30 * n * n) * e3 * e3) / w
    if deltas is None or any(d is None for d in deltas):
        return alpha1, None
    d1, d2, d3, d4, d5, d6 = (c / w ** (0.5 * (j + 1)) for j, c in enumerate(deltas))
    q3 = 11 + 30 * n + 30 * n * n
    first = p1 * d2 + 3 * p2 * d4 + 5 * (3 + 8 * n + 6 * n * n + 4 * n**3) * d6
    second = (
        p1 * e2 * e2
        + 12 * p2 * e2 * e4
        + 2 * (21 + 59 * n + 51 * n * n + 34 * n**3) * e4 * e4
        + 2 * e1 * d1
        + 6 * p1 * e1 * d3
        + 30 * p2 * e1 * d5
        + 6 * p1 * e3 * d1
        + 2 * q3 * e3 * d3
        + 10 * (13 + 40 * n + 42 * n * n + 28 * n**3) * e3 * d5
    )
    third = (
        4 * e1 * e1 * e2
        + 36 * p1 * e1 * e2 * e3
        + 8 * q3 * e2 * e3 * e3
        + 24 * p1 * e1 * e1 * e4
        + 8 * (31 + 78 * n + 78 * n * n) * e1 * e3 * e4
        + 12 * (57 + 189 * n + 225 * n * n + 150 * n**3) * e3 * e3 * e4
    )
    fourth = (
        8 * e1**3 * e3
        + 108 * p1 * e1 * e1 * e3 * e3
        + 48 * q3 * e1 * e3**3
        + 30 * (31 + 109 * n + 141 * n * n + 94 * n**3) * e3**4
    )
    alpha2 = first - second / w + third / w**2 - fourth / w**3
    return alpha1, alpha2


def coefficient_ladder(
    spec: PotentialSpec,
    state: StateSpec,
    pt: ExpansionPoint,
    E0: float | None = None,
    E2: float | None = None,
) -> CoefficientSet:
    """Anharmonic coefficients at the expansion point.

    Without ``E2`` only the ``eps`` family, ``delta3..delta6`` and ``alpha1``
    are filled; passing ``E2`` completes ``delta1``, ``delta2`` and
    ``alpha2``.
    """
    e0 = pt.E0 if E0 is None else E0
    r, Q, beta = pt.r0, pt.Q, pt.beta
    v = eval_vector_series(spec, r, 6)
    g = gamma_series(spec, state, r, 6)
    s = 2.0 * beta + 1.0
    bb = beta * (beta + 1.0)

    def ladder(n: int) -> float:
        return r ** (n + 2) / (math.factorial(n) * Q) * (g[n] + 2.0 * v[n] * e0)

    eps = (-2.0 * s, 3.0 * s, -4.0 + ladder(3), 5.0 + ladder(4))
    d3, d4 = -4.0 * s, 5.0 * s
    d5 = -6.0 + ladder(5)
    d6 = 7.0 + ladder(6)
    if E2 is None:
        alpha1, _ = anharmonic_corrections(eps, pt.w, state.n_r)
        return CoefficientSet(*eps, d3, d4, d5, d6, alpha1)
    d1 = -2.0 * bb + 2.0 * r**3 * v[1] * E2 / Q
    d2 = 3.0 * bb + r**4 * v[2] * E2 / Q
    alpha1, alpha2 = anharmonic_corrections(eps, pt.w, state.n_r, (d1, d2, d3, d4, d5, d6))
    return CoefficientSet(*eps, d3, d4, d5, d6, alpha1, d1, d2, alpha2)


def _prefactor(spec, pt: ExpansionPoint) -> float:
    gap = pt.E0 - eval_vector_series(spec, pt.r0, 0)[0]
    if gap == 0.0:
        raise NoBoundStateError("degenerate expansion: E0 equals V(r0)")
    return pt.Q / (2.0 * pt.r0**2 * gap)


def second_order_energy(spec: PotentialSpec, pt: ExpansionPoint, alpha1: float) -> float:
    """``E2`` (before division by ``lbar**2``)."""
    return _prefactor(spec, pt) * (pt.beta * (pt.beta + 1.0) + alpha1)


def energy_series(
    spec: PotentialSpec, state: StateSpec, pt: ExpansionPoint, coeffs: CoefficientSet
) -> EnergyBreakdown:
    if coeffs.alpha2 is None:
        raise ConfigurationError("energy_series needs the completed coefficient set (with E2)")
    pref = _prefactor(spec, pt)
    beta = pt.beta
    e1 = pref * (2.0 * beta + 1.0 + (state.n_r + 0.5) * pt.w)
    if abs(e1) > E1_TOL * abs(pt.E0):
        raise ConvergenceError(f"first-order energy not cancelled: E1/E0={e1 / pt.E0:.2e}", residual=abs(e1 / pt.E0))
    e2 = pref * (beta * (beta + 1.0) + coeffs.alpha1)
    e3 = pref * coeffs.alpha2
    e2_term = e2 / pt.lbar**2
    e3_term = e3 / pt.lbar**3
    return EnergyBreakdown(
        state=state,
        potential=spec,
        E0=pt.E0,
        E1=e1,
        E2=e2,
        E3=e3,
        E2_term=e2_term,
        E3_term=e3_term,
        E_total=pt.E0 + e2_term + e3_term,
        r0=pt.r0,
        beta=beta,
        w=pt.w,
        lbar=pt.lbar,
        coefficients=coeffs,
        point=pt,
    )


def solve_state(spec: PotentialSpec, state: StateSpec) -> EnergyBreakdown:
    """Full pipeline: expansion point, both coefficient passes, energy series."""
    pt = solve_expansion_point(spec, state)
    partial = coefficient_ladder(spec, state, pt)
    e2 = second_order_energy(spec, pt, partial.alpha1)
    full = coefficient_ladder(spec, state, pt, E2=e2)
    return energy_series(spec, state, pt, full)
