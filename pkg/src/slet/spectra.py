"""From quantum numbers to observables, and the nine table presets.

A :class:`ParticleSystem` says how an engine energy becomes something
measurable: a binding energy, a meson mass ``2E`` or ``E + m_spectator``, or
the scaled power-law eigenvalue.  :func:`run_table` evaluates a whole preset
row by row; a row that fails keeps its diagnostic and the others still run.
"""

from __future__ import annotations

import csv
import enum
import io
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from decimal import ROUND_HALF_EVEN, Decimal
from fractions import Fraction
from importlib import resources
from typing import Callable, Iterable, Sequence, TypeVar

from .engine import EnergyBreakdown, StateSpec, solve_state
from .errors import ConfigurationError, SletError
from .oracle import exact_coulomb
from .potentials import PotentialKind, PotentialSpec

ALPHA_FS = 1 / 137.03602
PION_KEV = 139577.0
ELECTRON_EV = 0.5110041e6
LINEAR_A = 0.137
LINEAR_M = 1.12
POWER_NU = 0.1
POWER_V0 = -2.028
POWER_SCALE_A = 1.709
POWER_A = POWER_SCALE_A ** (POWER_NU + 1.0)
M_CHARM = 1.6179
M_BOTTOM = 5.0114
M_STRANGE = 0.325
M_DOWN = 0.01


class MassRule(str, enum.Enum):
    BINDING = "binding"
    TWICE_E = "twice_e"
    E_PLUS_SPECTATOR = "e_plus_spectator"
    SCALED_EPSILON = "scaled_epsilon"


@dataclass(frozen=True)
class ParticleSystem:
    """Particle (or quark) plus the rule turning its energy into an observable.

    ``scale`` converts engine energies into the output unit: the Coulomb
    presets run with ``m = 1`` and report binding energies times the rest
    energy in keV or eV.
    """

    label: str
    m: float
    mass_rule: MassRule = MassRule.BINDING
    spectator_mass: float | None = None
    scale: float = 1.0
    unit: str = "GeV"

    def __post_init__(self):
        object.__setattr__(self, "mass_rule", MassRule(self.mass_rule))
        needs = self.mass_rule is MassRule.E_PLUS_SPECTATOR
        if needs and self.spectator_mass is None:
            raise ConfigurationError(f"{self.label}: spectator mass required for E + m_spectator")
        if not needs and self.spectator_mass is not None:
            raise ConfigurationError(f"{self.label}: spectator mass only applies to E + m_spectator")
        if not self.m > 0.0:
            raise ConfigurationError(f"{self.label}: mass must be positive")


@dataclass
class SpectrumRow:
    """One state of a spectrum.

    ``value`` is the observable at full order; ``value_e0`` and ``value_e2``
    are the same observable built from ``E0`` and ``E0 + E2/lbar**2``.  A row
    whose state failed has ``error`` set and no values.
    """

    label: str
    n_r: int
    l: int
    j: float | None
    unit: str
    value: float | None = None
    value_e0: float | None = None
    value_e2: float | None = None
    breakdown: EnergyBreakdown | None = field(default=None, repr=False)
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


def _half_integer(j) -> Fraction:
    f = Fraction(j).limit_denominator(2)
    if f.denominator != 2 or f <= 0:
        raise ConfigurationError(f"j must be a positive half-integer, got {j!r}")
    return f


def kappa_of(l: int, j) -> int:
    """Dirac quantum number for orbital ``l`` and total ``j = l +/- 1/2``."""
    jf = _half_integer(j)
    if jf == l + Fraction(1, 2):
        return -(l + 1)
    if jf == l - Fraction(1, 2):
        if l == 0:
            raise ConfigurationError("j = l - 1/2 is impossible for l = 0")
        return l
    raise ConfigurationError(f"j={j} is not l +/- 1/2 for l={l}")


def kg_state_of(n_r: int, l: int, m: float, j=None) -> StateSpec:
    """Klein-Gordon state; ``k`` only matters for the (switched-off) spin term."""
    k = -(l + 1) if j is None else kappa_of(l, j)
    return StateSpec(n_r=n_r, l=l, k=k, lam=0, m=m)


def dirac_state_of(n_r: int, l: int, j, m: float) -> StateSpec:
    return StateSpec(n_r=n_r, l=l, k=kappa_of(l, j), lam=1, m=m)


def observable_value(system: ParticleSystem, potential: PotentialSpec, energy: float) -> float:
    """Observable for a given total energy."""
    rule = system.mass_rule
    if rule is MassRule.BINDING:
        return (energy - system.m) * system.scale
    if rule is MassRule.TWICE_E:
        return 2.0 * energy * system.scale
    if rule is MassRule.E_PLUS_SPECTATOR:
        return (energy + system.spectator_mass) * system.scale
    if rule is MassRule.SCALED_EPSILON:
        if potential.kind is not PotentialKind.POWER_LAW_EQUAL_MIX:
            raise ConfigurationError("the scaled eigenvalue needs the equal-mix power law")
        A, nu, V0, m = potential.A, potential.nu, potential.V0, system.m
        return (energy - m - 2.0 * V0) * ((energy + m) * (2.0 * A) ** (-2.0 / nu)) ** (nu / (nu + 2.0))
    raise ConfigurationError(f"unknown mass rule {rule!r}")


def observable(system: ParticleSystem, breakdown: EnergyBreakdown, label: str = "") -> SpectrumRow:
    st = breakdown.state
    pot = breakdown.potential
    return SpectrumRow(
        label=label,
        n_r=st.n_r,
        l=st.l,
        j=st.j if st.lam else None,
        unit=system.unit,
        value=observable_value(system, pot, breakdown.E_total),
        value_e0=observable_value(system, pot, breakdown.E0),
        value_e2=observable_value(system, pot, breakdown.E_second),
        breakdown=breakdown,
    )


# -- presets -----------------------------------------------------------------

_L_LETTER = "spdfghik"


def state_label(n_r: int, l: int, j=None) -> str:
    """Spectroscopic label, e.g. ``2p`` or ``3d3/2``."""
    n = n_r + l + 1
    text = f"{n}{_L_LETTER[l]}"
    if j is not None:
        jf = _half_integer(j)
        text += f"{jf.numerator}/2"
    return text


@dataclass(frozen=True)
class TablePreset:
    id: str
    title: str
    potential: PotentialSpec
    system: ParticleSystem
    lam: int
    states: tuple  # (n_r, l, j or None)
    negate: bool = False  # tables that print -W

    def state_specs(self) -> list[tuple[str, StateSpec]]:
        out = []
        for n_r, l, j in self.states:
            if self.lam:
                spec = dirac_state_of(n_r, l, j, self.system.m)
            else:
                spec = kg_state_of(n_r, l, self.system.m)
            out.append((state_label(n_r, l, j if self.lam and not self.potential.is_equal_mix else None), spec))
        return out


_COULOMB_KG = [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2), (3, 0), (2, 1), (1, 2), (0, 3)]
_COULOMB_DIRAC = [
    (0, 0, 0.5), (1, 0, 0.5), (0, 1, 0.5), (0, 1, 1.5),
    (2, 0, 0.5), (1, 1, 0.5), (1, 1, 1.5), (0, 2, 1.5), (0, 2, 2.5),
    (3, 0, 0.5), (2, 1, 0.5), (2, 1, 1.5), (1, 2, 1.5), (1, 2, 2.5), (0, 3, 2.5), (0, 3, 3.5),
]  # fmt: skip
_POWER_STATES = [(0, 0), (1, 0), (2, 0), (3, 0), (4, 0), (0, 1), (1, 1), (0, 2)]


def _grid(ls: Iterable[int], j_shift: float | None):
    return tuple((n, l, None if j_shift is None else l + j_shift) for n in range(5) for l in ls)


def _power(system: ParticleSystem, tid: str, title: str) -> TablePreset:
    return TablePreset(
        tid,
        title,
        PotentialSpec.power_law(POWER_A, POWER_NU, POWER_V0),
        system,
        1,
        tuple((n, l, l + 0.5) for n, l in _POWER_STATES),
    )


PRESETS: dict[str, TablePreset] = {
    "t1": TablePreset(
        "t1",
        "Klein-Gordon pion in a vector Coulomb well, -W in keV",
        PotentialSpec.coulomb(ALPHA_FS),
        ParticleSystem("pion", 1.0, MassRule.BINDING, scale=PION_KEV, unit="keV"),
        0,
        tuple((n, l, None) for n, l in _COULOMB_KG),
        negate=True,
    ),
    "t2": TablePreset(
        "t2",
        "Dirac electron in a vector Coulomb well, -W in eV",
        PotentialSpec.coulomb(ALPHA_FS),
        ParticleSystem("electron", 1.0, MassRule.BINDING, scale=ELECTRON_EV, unit="eV"),
        1,
        tuple(_COULOMB_DIRAC),
        negate=True,
    ),
    "t3": TablePreset(
        "t3",
        "Klein-Gordon c-cbar masses, scalar linear confinement (GeV)",
        PotentialSpec.linear_scalar(LINEAR_A),
        ParticleSystem("c", LINEAR_M, MassRule.TWICE_E),
        0,
        _grid(range(4), None),
    ),
    "t4": TablePreset(
        "t4",
        "Dirac c-cbar masses, scalar linear confinement, j = l + 1/2 (GeV)",
        PotentialSpec.linear_scalar(LINEAR_A),
        ParticleSystem("c", LINEAR_M, MassRule.TWICE_E),
        1,
        _grid(range(4), 0.5),
    ),
    "t5": TablePreset(
        "t5",
        "Dirac c-cbar masses, scalar linear confinement, j = l - 1/2 (GeV)",
        PotentialSpec.linear_scalar(LINEAR_A),
        ParticleSystem("c", LINEAR_M, MassRule.TWICE_E),
        1,
        _grid(range(1, 5), -0.5),
    ),
    "t6": _power(
        ParticleSystem("c", M_CHARM, MassRule.SCALED_EPSILON, unit=""),
        "t6",
        "scaled eigenvalues, c quark, equal-mix power law",
    ),
    "t7": _power(ParticleSystem("b", M_BOTTOM, MassRule.TWICE_E), "t7", "b-bbar masses, equal-mix power law (GeV)"),
    "t8": _power(ParticleSystem("s", M_STRANGE, MassRule.TWICE_E), "t8", "s-sbar masses, equal-mix power law (GeV)"),
    "t9": _power(
        ParticleSystem("d", M_DOWN, MassRule.E_PLUS_SPECTATOR, spectator_mass=M_CHARM),
        "t9",
        "c-dbar masses (E_d + m_c), equal-mix power law (GeV)",
    ),
}


def get_preset(preset: str) -> TablePreset:
    try:
        return PRESETS[preset.lower()]
    except KeyError:
        raise ConfigurationError(f"unknown table preset {preset!r}; choose from {', '.join(PRESETS)}") from None


T = TypeVar("T")
R = TypeVar("R")


def thread_count() -> int:
    """Worker cap from ``SLET_THREADS``; 0 or unset means one per CPU."""
    raw = os.environ.get("SLET_THREADS", "0")
    try:
        n = int(raw)
    except ValueError:
        raise ConfigurationError(f"SLET_THREADS must be an integer, got {raw!r}") from None
    if n < 0:
        raise ConfigurationError("SLET_THREADS must be >= 0")
    return n or (os.cpu_count() or 1)


def ordered_map(fn: Callable[[T], R], items: Sequence[T]) -> list[R]:
    """``map`` that may fan out over threads but keeps input order."""
    workers = min(thread_count(), len(items))
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def solve_row(potential: PotentialSpec, system: ParticleSystem, label: str, state: StateSpec) -> SpectrumRow:
    """Evaluate one state, converting engine failures into a diagnostic row."""
    try:
        return observable(system, solve_state(potential, state), label)
    except SletError as exc:
        return SpectrumRow(
            label=label,
            n_r=state.n_r,
            l=state.l,
            j=state.j if state.lam else None,
            unit=system.unit,
            error=f"{type(exc).__name__}: {exc}",
        )


def run_table(preset: str | TablePreset) -> list[SpectrumRow]:
    """All rows of a preset, in the preset's order."""
    p = preset if isinstance(preset, TablePreset) else get_preset(preset)
    jobs = p.state_specs()
    return ordered_map(lambda job: solve_row(p.potential, p.system, job[0], job[1]), jobs)


# -- golden comparison -------------------------------------------------------

# Columns holding this method's own printed results, with the absolute
# tolerance applied after rounding to the printed precision.
TOLERANCES: dict[str, dict[str, float]] = {
    "t1": {"neg_w0": 2e-5, "neg_w2": 2e-5, "neg_w3": 2e-5, "exact": 1e-5},
    "t2": {"neg_w0": 1e-4, "neg_w2": 1e-4, "neg_w3": 1e-4, "exact": 1e-4},
    "t3": {"slet": 1e-3},
    "t4": {"slet": 1e-3},
    "t5": {"slet": 1e-3},
    "t6": {"slet": 2e-4},
    "t7": {"slet": 5e-4},
    "t8": {"slet": 5e-4},
    "t9": {"slet": 5e-4},
}
# Absorbs binary round-off when a deviation equals the tolerance exactly.
_SLACK = 1e-12


@dataclass(frozen=True)
class GoldenCell:
    """One printed number: the state, the column it sits in, and its text."""

    n_r: int
    l: int
    j: float | None
    column: str
    printed: str

    @property
    def value(self) -> float:
        return float(self.printed)

    @property
    def decimals(self) -> int:
        return -Decimal(self.printed).as_tuple().exponent

    @property
    def key(self) -> tuple:
        return (self.n_r, self.l, self.j)


@dataclass(frozen=True)
class CellCheck:
    cell: GoldenCell
    label: str
    computed: float | None
    rounded: float | None
    deviation: float | None
    tolerance: float
    error: str | None = None

    @property
    def passed(self) -> bool:
        return self.error is None and self.deviation <= self.tolerance + _SLACK

    @property
    def relative(self) -> float | None:
        if self.computed is None or self.cell.value == 0.0:
            return None
        return (self.computed - self.cell.value) / self.cell.value


def load_golden(preset: str) -> list[GoldenCell]:
    """Printed values of a preset table, in file order."""
    tid = get_preset(preset).id
    text = resources.files("slet").joinpath("data", "golden", f"{tid}.csv").read_text(encoding="utf-8")
    cells = []
    for rec in csv.DictReader(io.StringIO(text)):
        cells.append(
            GoldenCell(
                n_r=int(rec["n_r"]),
                l=int(rec["l"]),
                j=float(rec["j"]) if rec["j"] else None,
                column=rec["column"],
                printed=rec["printed"],
            )
        )
    return cells


def round_half_even(x: float, decimals: int) -> float:
    return float(Decimal(repr(x)).quantize(Decimal(1).scaleb(-decimals), rounding=ROUND_HALF_EVEN))


def accuracy(value: float, reference: float) -> float:
    """Percent accuracy ``100 (1 - |value - reference| / |reference|)``."""
    if reference == 0.0:
        raise ConfigurationError("accuracy is undefined against a zero reference")
    return 100.0 * (1.0 - abs((value - reference) / reference))


def column_value(preset: TablePreset, row: SpectrumRow, column: str) -> float:
    """The computed number that belongs in a printed column."""
    sign = -1.0 if preset.negate else 1.0
    if column in ("neg_w3", "slet"):
        return sign * row.value
    if column == "neg_w0":
        return sign * row.value_e0
    if column == "neg_w2":
        return sign * row.value_e2
    if column == "exact":
        bd = row.breakdown
        return sign * observable_value(preset.system, preset.potential, exact_coulomb(bd.potential, bd.state))
    raise ConfigurationError(f"column {column!r} has no computed counterpart")


def _row_key(row: SpectrumRow) -> tuple:
    return (row.n_r, row.l, row.j if row.j is not None else None)


def compare_table(preset: str, rows: list[SpectrumRow] | None = None) -> list[CellCheck]:
    """Check every printed cell this package reproduces (own results and exact values)."""
    p = get_preset(preset)
    rows = run_table(p) if rows is None else rows
    by_key = {_row_key(r): r for r in rows}
    tolerances = TOLERANCES[p.id]
    checks = []
    for cell in load_golden(p.id):
        tol = tolerances.get(cell.column)
        if tol is None:
            continue
        j = cell.j if p.lam else None
        row = by_key.get((cell.n_r, cell.l, j))
        label = row.label if row else state_label(cell.n_r, cell.l, j)
        if row is None or not row.ok:
            reason = row.error if row else "state missing from the computed table"
            checks.append(CellCheck(cell, label, None, None, None, tol, reason))
            continue
        try:
            value = column_value(p, row, cell.column)
        except SletError as exc:
            checks.append(CellCheck(cell, label, None, None, None, tol, f"{type(exc).__name__}: {exc}"))
            continue
        rounded = round_half_even(value, cell.decimals)
        checks.append(CellCheck(cell, label, value, rounded, abs(rounded - cell.value), tol))
    return checks
