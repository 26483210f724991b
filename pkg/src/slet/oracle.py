"""Independent reference energies.

Three checks that share no code path with the expansion itself:

* closed-form Klein-Gordon and Dirac energies in a pure Coulomb well;
* a Numerov shooting solver for the same reduced radial equation (same
  effective spin term ``U``), counting nodes to select ``n_r``;
* direct diagonalization of the shifted anharmonic oscillator, fitted in
  powers of ``1/lbar`` to recover ``alpha1`` and ``alpha2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .engine import CoefficientSet, StateSpec, solve_state
from .errors import ConfigurationError, ConvergenceError, DomainError, FitError, NoBoundStateError
from .potentials import PotentialKind, PotentialSpec, scalar_table, vector_table

MIN_STEPS = 10_000
DEFAULT_STEPS = 20_000
DECAY_EXPONENT = 40.0  # WKB attenuation integral past the outer turning point
NUMEROV_LIMIT = 0.1  # largest allowed h**2 g / 12
REFINE_TOL = 1e-8
FIT_COND_MAX = 1e8


# -- closed forms ------------------------------------------------------------


def exact_coulomb_kg(n_r: int, l: int, alpha: float, m: float = 1.0) -> float:
    """Klein-Gordon energy in ``V = -alpha/r``."""
    if n_r < 0 or l < 0:
        raise DomainError("n_r and l must be non-negative")
    disc = (l + 0.5) ** 2 - alpha**2
    if disc <= 0.0:
        raise DomainError(f"no bound state: alpha={alpha} >= l + 1/2")
    return m / math.sqrt(1.0 + alpha**2 / (n_r + 0.5 + math.sqrt(disc)) ** 2)


def exact_coulomb_dirac(n_r: int, k: int, alpha: float, m: float = 1.0) -> float:
    """Dirac energy in ``V = -alpha/r``.

    ``n_r`` is the Dirac radial number, which starts at 1 for ``k > 0``; see
    :func:`dirac_radial_number` for the conversion from the node count of the
    large component.
    """
    if n_r < 0 or k == 0:
        raise DomainError("need n_r >= 0 and k != 0")
    if k > 0 and n_r == 0:
        raise DomainError("n_r = 0 is forbidden for k > 0")
    disc = k * k - alpha**2
    if disc <= 0.0:
        raise DomainError(f"no bound state: alpha={alpha} >= |k|")
    return m / math.sqrt(1.0 + alpha**2 / (n_r + math.sqrt(disc)) ** 2)


def dirac_radial_number(n_r: int, k: int) -> int:
    """Dirac radial number for a large component with ``n_r`` nodes."""
    return n_r + 1 if k > 0 else n_r


def exact_coulomb(spec: PotentialSpec, state: StateSpec) -> float:
    """Closed-form energy for a state of the Coulomb preset."""
    if spec.kind is not PotentialKind.COULOMB_VECTOR:
        raise ConfigurationError("exact energies exist only for the pure Coulomb vector potential")
    if state.lam == 0:
        return exact_coulomb_kg(state.n_r, state.l, spec.alpha, state.m)
    return exact_coulomb_dirac(dirac_radial_number(state.n_r, state.k), state.k, spec.alpha, state.m)


# -- shooting ----------------------------------------------------------------


@dataclass(frozen=True)
class ShootingConfig:
    """Grid and bracket for :func:`shoot_energy`.

    ``match_tol`` is the relative width at which the energy bisection stops.
    """

    r_min: float
    r_max: float
    steps: int
    E_bracket: tuple[float, float]
    node_target: int
    match_tol: float = 1e-14

    def __post_init__(self):
        if not 0.0 < self.r_min < self.r_max:
            raise ConfigurationError("need 0 < r_min < r_max")
        if self.steps < MIN_STEPS:
            raise ConfigurationError(f"steps must be >= {MIN_STEPS}")
        lo, hi = self.E_bracket
        if not lo < hi:
            raise ConfigurationError("energy bracket must satisfy low < high")
        if self.node_target < 0:
            raise ConfigurationError("node_target must be non-negative")
        if not self.match_tol > 0.0:
            raise ConfigurationError("match_tol must be positive")


@njit(cache=True)
def _count_nodes(g, h, phi0, phi1):
    """Numerov march of phi'' = g phi; returns the number of sign changes."""
    f = h * h / 12.0
    prev, cur = phi0, phi1
    nodes = 0
    sign = 1.0 if phi1 >= 0.0 else -1.0
    for i in range(1, g.shape[0] - 1):
        nxt = (2.0 * cur * (1.0 + 5.0 * f * g[i]) - prev * (1.0 - f * g[i - 1])) / (1.0 - f * g[i + 1])
        if nxt != 0.0:
            s = 1.0 if nxt > 0.0 else -1.0
            if s != sign:
                nodes += 1
                sign = s
        prev, cur = cur, nxt
        if abs(cur) > 1e150:
            prev *= 1e-150
            cur *= 1e-150
    return nodes


class _RadialProblem:
    """Reduced radial equation on a logarithmic grid.

    With ``r = exp(x)`` and ``R = sqrt(r) phi`` the equation becomes
    ``phi'' = (r**2 q + 1/4) phi``, regular enough for Numerov at both ends.
    """

    def __init__(self, spec: PotentialSpec, state: StateSpec, r_min: float, r_max: float, steps: int):
        self.x = np.linspace(math.log(r_min), math.log(r_max), steps + 1)
        self.h = self.x[1] - self.x[0]
        r = np.exp(self.x)
        self.r2 = r * r
        static, self.V = _effective_terms(spec, state, r)
        self.base = state.l * (state.l + 1) + self.r2 * static + 0.25
        self.power = state.l + 0.5
        self._stiff = self.h**2 / 12.0

    def nodes(self, energy: float) -> int:
        g = self.base - self.r2 * (energy - self.V) ** 2
        if self._stiff * float(np.max(np.abs(g))) > NUMEROV_LIMIT:
            raise ConfigurationError("radial grid too coarse for the Numerov step; raise steps or shrink r_max")
        return int(_count_nodes(g, self.h, 1.0, math.exp(self.power * self.h)))


def _effective_terms(spec: PotentialSpec, state: StateSpec, r: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """``U + (m+S)**2`` and ``V`` on an array of radii."""
    v = vector_table(spec, r, 2)
    s = scalar_table(spec, r, 2)
    m = state.m
    mass = (m + s[0]) ** 2
    if state.lam == 0 or spec.is_equal_mix:
        return mass, v[0]
    y1 = v[1] - s[1]
    y2 = v[2] - s[2]
    u = (y2 - 2.0 * state.k * y1 / r + 3.0 * y1 * y1 / (4.0 * m)) / (4.0 * m)
    return mass + u, v[0]


def _q(spec: PotentialSpec, state: StateSpec, r: np.ndarray, energy: float) -> np.ndarray:
    static, v = _effective_terms(spec, state, r)
    return state.l * (state.l + 1) / (r * r) + static - (energy - v) ** 2


def radial_window(spec: PotentialSpec, state: StateSpec, energy: float) -> tuple[float, float]:
    """``(r_min, r_max)`` that safely contain a state of energy <= ``energy``.

    ``r_max`` lies past the outer turning point by a WKB attenuation of
    ``exp(-DECAY_EXPONENT)``.  Going much deeper buys nothing and, in a
    confining well, makes ``r**2 q`` too stiff for the Numerov step.
    """
    scale = spec.length_scale(state.m)
    r = scale * np.logspace(-6.0, 6.0, 12 * 400 + 1)
    q = _q(spec, state, r, energy)
    allowed = np.nonzero(q < 0.0)[0]
    if allowed.size == 0:
        raise NoBoundStateError(f"E={energy} has no classically allowed region")
    last = allowed[-1]
    if last == r.size - 1:
        raise NoBoundStateError(f"E={energy} is not bound within r <= {r[-1]:.3g}")
    r_turn = r[last]
    tail = np.sqrt(np.maximum(q[last:], 0.0))
    attenuation = np.concatenate(([0.0], np.cumsum(0.5 * (tail[1:] + tail[:-1]) * np.diff(r[last:]))))
    deep = np.nonzero(attenuation >= DECAY_EXPONENT)[0]
    if deep.size == 0:
        raise NoBoundStateError(f"E={energy}: wave function does not decay inside the scan range")
    r_max = r[last + deep[0]]
    return 1e-6 * r_turn, r_max


def shoot_energy(spec: PotentialSpec, state: StateSpec, cfg: ShootingConfig, check_refinement: bool = True) -> float:
    """Eigenvalue with ``cfg.node_target`` nodes, by node-count bisection.

    The bracket must hold exactly the target state: ``node_target`` nodes at
    the low end and one more at the high end.  With ``check_refinement`` the
    solve is repeated at half the step and must agree to ``REFINE_TOL``.
    """
    energy = _bisect(spec, state, cfg, cfg.steps)
    if check_refinement:
        fine = _bisect(spec, state, cfg, 2 * cfg.steps)
        drift = abs(fine - energy) / abs(fine)
        if drift > REFINE_TOL:
            raise ConvergenceError(f"step halving moved the energy by {drift:.2e}", residual=drift)
        energy = fine
    return energy


def _bisect(spec, state, cfg: ShootingConfig, steps: int) -> float:
    prob = _RadialProblem(spec, state, cfg.r_min, cfg.r_max, steps)
    lo, hi = cfg.E_bracket
    n_lo, n_hi = prob.nodes(lo), prob.nodes(hi)
    target = cfg.node_target
    if n_lo > target or n_hi <= target:
        raise NoBoundStateError(f"no eigenvalue with {target} nodes in [{lo}, {hi}] (nodes {n_lo}..{n_hi})")
    if n_lo != target or n_hi != target + 1:
        raise NoBoundStateError(f"bracket [{lo}, {hi}] holds more than the target state (nodes {n_lo}..{n_hi})")
    while hi - lo > cfg.match_tol * max(abs(lo), abs(hi)):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if prob.nodes(mid) <= target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def bracket_state(
    spec: PotentialSpec, state: StateSpec, guess: float, steps: int = DEFAULT_STEPS, match_tol: float = 1e-14
) -> ShootingConfig:
    """Shooting configuration around an approximate energy ``guess``.

    The bracket is widened geometrically until node counts pin exactly the
    state with ``state.n_r`` nodes.
    """
    spread = 0.05 * max(abs(guess - state.m), 1e-3 * state.m)
    top = guess + 8.0 * spread
    if spec.kind is PotentialKind.COULOMB_VECTOR:
        top = min(top, 0.5 * (guess + state.m))
    r_min, r_max = radial_window(spec, state, top)
    prob = _RadialProblem(spec, state, r_min, r_max, steps)
    target = state.n_r

    lo, step = guess - spread, spread
    for _ in range(60):
        if prob.nodes(lo) <= target:
            break
        lo -= step
        step *= 2.0
    else:
        raise NoBoundStateError("could not place the lower end of the bracket")
    hi, step = min(guess + spread, top), spread
    for _ in range(60):
        if prob.nodes(hi) > target:
            break
        if hi >= top:
            raise NoBoundStateError("state lies above the bracketing window")
        hi = min(hi + step, top)
        step *= 2.0
    # Shrink towards the target so the bracket holds one eigenvalue only.
    for _ in range(200):
        n_lo, n_hi = prob.nodes(lo), prob.nodes(hi)
        if n_lo == target and n_hi == target + 1:
            break
        mid = 0.5 * (lo + hi)
        if prob.nodes(mid) <= target:
            lo = mid
        else:
            hi = mid
    else:
        raise NoBoundStateError("could not isolate the target state")
    return ShootingConfig(r_min, r_max, steps, (lo, hi), target, match_tol)


def shoot_state(spec: PotentialSpec, state: StateSpec, guess: float | None = None, steps: int = DEFAULT_STEPS) -> float:
    """Shooting energy, seeded by the expansion when no guess is given."""
    if guess is None:
        guess = solve_state(spec, state).E_total
    return shoot_energy(spec, state, bracket_state(spec, state, guess, steps))


# -- anharmonic oscillator ---------------------------------------------------


@dataclass(frozen=True)
class AnharmonicFit:
    alpha1: float
    alpha2: float
    residual: float  # rms misfit of shift * lbar
    condition: float


# Near-exact cases (Coulomb) have alpha2 orders of magnitude below the next
# coefficient, so alpha2/lbar**2 only shows up at lbar ~ 1e6.  The polished
# levels (see _polish_level) stay accurate that far out.
DEFAULT_LBAR = tuple(float(2**p) for p in range(11, 21))


def _position_powers(w: float, size: int, top: int) -> list[np.ndarray]:
    """Matrices of x**1..x**top in the oscillator basis, truncated to ``size``."""
    big = size + top
    off = np.sqrt(np.arange(1, big) / w)
    x = np.diag(off, 1) + np.diag(off, -1)
    out, acc = [], np.eye(big)
    for _ in range(top):
        acc = acc @ x
        out.append(acc[:size, :size].copy())
    return out


def _perturbation(coeffs: CoefficientSet, g: float, xp: list) -> np.ndarray:
    e1, e2, e3, e4 = coeffs.eps
    d1, d2, d3, d4, d5, d6 = coeffs.deltas
    v = g * (e1 * xp[0] + e3 * xp[2])
    v += g**2 * (e2 * xp[1] + e4 * xp[3])
    v += g**3 * (d1 * xp[0] + d3 * xp[2] + d5 * xp[4])
    v += g**4 * (d2 * xp[1] + d4 * xp[3] + d6 * xp[5])
    return v


def _polish_level(level: np.ndarray, v: np.ndarray, n: int, shift: float, sweeps: int = 60) -> float:
    """Refine an eigenvalue of ``diag(level) + v`` near ``level[n] + shift``.

    With the component ``n`` pinned to one, the rest of the eigenvector
    solves a linear system and the shift follows from row ``n``.  All terms
    are of the size of the perturbation, so the result carries an absolute
    error far below what a dense eigensolver gives on the full spectrum.
    """
    rest = np.arange(level.size) != n
    block = v[np.ix_(rest, rest)] + np.diag(level[rest] - level[n])
    col = v[rest, n]
    row = v[n, rest]
    eye = np.eye(block.shape[0])
    change = math.inf
    for _ in range(sweeps):
        psi = np.linalg.solve(block - shift * eye, -col)
        new = float(v[n, n] + row @ psi)
        change, shift = abs(new - shift), new
        if change <= 1e-15 * abs(new):
            return new
    if change <= 1e-12 * abs(shift):
        return shift  # stalled at round-off
    raise ConvergenceError("oscillator level refinement did not settle", residual=change)


def oscillator_shift(
    coeffs: CoefficientSet, w: float, n_r: int, lbar: float, basis: int = 240, powers: list | None = None
) -> float:
    """``mu - (n_r + 1/2) w`` for the shifted oscillator level continuing ``n_r``."""
    if basis < 200:
        raise ConfigurationError("basis must have at least 200 states")
    if any(d is None for d in coeffs.deltas):
        raise ConfigurationError("the coefficient set lacks delta1/delta2")
    xp = powers if powers is not None else _position_powers(w, basis, 6)
    level = np.arange(basis) * w
    v = _perturbation(coeffs, lbar**-0.5, xp)
    vals, vecs = np.linalg.eigh(np.diag(level - n_r * w) + v)
    pick = int(np.argmax(np.abs(vecs[n_r, :])))
    return _polish_level(level, v, n_r, float(vals[pick]))


def oscillator_level(
    coeffs: CoefficientSet, w: float, n_r: int, lbar: float, basis: int = 240, powers: list | None = None
) -> float:
    """Eigenvalue of the shifted oscillator that continues level ``n_r``."""
    return (n_r + 0.5) * w + oscillator_shift(coeffs, w, n_r, lbar, basis, powers)


def anharmonic_fit(
    coeffs: CoefficientSet,
    w: float,
    n_r: int,
    lbar_samples=DEFAULT_LBAR,
    basis: int = 240,
    terms: int = 6,
) -> AnharmonicFit:
    """Estimate ``alpha1``/``alpha2`` by diagonalizing at several ``lbar``.

    The level shift is even in ``lbar**-1/2``, so ``lbar * shift`` is fitted
    to ``alpha1 + alpha2/lbar + ...`` with ``terms`` coefficients.
    """
    samples = np.asarray(sorted(set(float(s) for s in lbar_samples)))
    if samples.size < 4:
        raise ConfigurationError("need at least 4 distinct lbar samples")
    if samples.size <= terms:
        raise ConfigurationError("need more samples than fitted terms")
    if terms < 2:
        raise ConfigurationError("need at least two fitted terms")
    if np.any(samples <= 0.0):
        raise ConfigurationError("lbar samples must be positive")
    powers = _position_powers(w, basis, 6)
    scaled_shift = np.array([s * oscillator_shift(coeffs, w, n_r, s, basis, powers) for s in samples])
    t = 1.0 / samples
    design = np.column_stack([t**i for i in range(terms)])
    norms = np.linalg.norm(design, axis=0)
    cond = float(np.linalg.cond(design / norms))
    if not cond < FIT_COND_MAX:
        raise FitError(f"fit condition number {cond:.3g} exceeds {FIT_COND_MAX:.0e}")
    sol, *_ = np.linalg.lstsq(design / norms, scaled_shift, rcond=None)
    sol = sol / norms
    resid = float(np.sqrt(np.mean((design @ sol - scaled_shift) ** 2)))
    return AnharmonicFit(float(sol[0]), float(sol[1]), resid, cond)
