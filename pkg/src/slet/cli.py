"""Command-line front end.

``slet spectrum --config run.json``    spectrum of a custom configuration
``slet table t4 [--compare]``           a preset table, optionally checked
``slet oracle --config run.json --mode exact|shoot|anharmonic``

Exit status: 0 success, 1 usage or configuration error, 2 a state failed or
a comparison did not pass.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import dataclass
from typing import Sequence

import jsonschema

from .engine import StateSpec
from .errors import ConfigurationError, SletError
from .oracle import anharmonic_fit, exact_coulomb, shoot_state
from .potentials import PotentialKind, PotentialSpec
from .spectra import (
    MassRule,
    ParticleSystem,
    SpectrumRow,
    accuracy,
    compare_table,
    dirac_state_of,
    get_preset,
    kg_state_of,
    load_golden,
    observable_value,
    ordered_map,
    run_table,
    solve_row,
    state_label,
)

EXIT_OK, EXIT_USAGE, EXIT_FAILED = 0, 1, 2

_INDEX = {
    "oneOf": [
        {"type": "integer", "minimum": 0},
        {
            "type": "array",
            "items": {"type": "integer", "minimum": 0},
            "minItems": 2,
            "maxItems": 2,
        },
    ]
}

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["potential", "particle", "states"],
    "properties": {
        "potential": {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["coulomb_vector", "linear_scalar", "power_law_equal_mix"]},
                "alpha": {"type": "number"},
                "A": {"type": "number"},
                "nu": {"type": "number"},
                "V0": {"type": "number"},
            },
        },
        "particle": {
            "type": "object",
            "additionalProperties": False,
            "required": ["m"],
            "properties": {
                "label": {"type": "string"},
                "m": {"type": "number"},
                "mass_rule": {"enum": [r.value for r in MassRule]},
                "spectator_mass": {"type": "number"},
                "scale": {"type": "number"},
                "unit": {"type": "string"},
            },
        },
        "states": {
            "type": "array",
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["n_r", "l"],
                "properties": {
                    "n_r": _INDEX,
                    "l": _INDEX,
                    "j": {"oneOf": [{"type": "number"}, {"enum": ["l+1/2", "l-1/2"]}]},
                },
            },
        },
        "lambda": {"enum": [0, 1]},
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "format": {"enum": ["csv", "markdown"]},
                "precision": {"type": "integer", "minimum": 0, "maximum": 15},
            },
        },
        "oracle": {"type": "boolean"},
        "preset": {"type": "string"},
    },
}


@dataclass
class RunConfig:
    potential: PotentialSpec
    system: ParticleSystem
    states: list[tuple[str, StateSpec]]
    lam: int
    fmt: str = "markdown"
    precision: int = 8
    oracle: bool = False
    preset: str | None = None


def _span(value) -> range:
    if isinstance(value, int):
        return range(value, value + 1)
    lo, hi = value
    if hi < lo:
        raise ConfigurationError(f"empty range {value}")
    return range(lo, hi + 1)


def _potential(doc: dict) -> PotentialSpec:
    kind = PotentialKind(doc["kind"])
    try:
        if kind is PotentialKind.COULOMB_VECTOR:
            return PotentialSpec.coulomb(doc["alpha"])
        if kind is PotentialKind.LINEAR_SCALAR:
            return PotentialSpec.linear_scalar(doc["A"])
        return PotentialSpec.power_law(doc["A"], doc["nu"], doc.get("V0", 0.0))
    except KeyError as exc:
        raise ConfigurationError(f"potential {kind.value} needs parameter {exc.args[0]!r}") from None


def _expand_states(entries: list, lam: int, m: float) -> list[tuple[str, StateSpec]]:
    keyed = []
    for entry in entries:
        for n_r in _span(entry["n_r"]):
            for l in _span(entry["l"]):
                j = entry.get("j")
                if j == "l+1/2":
                    j = l + 0.5
                elif j == "l-1/2":
                    if l == 0:
                        continue  # no j = l - 1/2 partner for s states
                    j = l - 0.5
                if lam:
                    state = dirac_state_of(n_r, l, l + 0.5 if j is None else j, m)
                else:
                    state = kg_state_of(n_r, l, m, j)
                keyed.append(((n_r, l, state.j), state_label(n_r, l, state.j if lam else None), state))
    if not keyed:
        raise ConfigurationError("the state list is empty")
    keyed.sort(key=lambda t: t[0])
    out, seen = [], set()
    for key, label, state in keyed:
        if key not in seen:
            seen.add(key)
            out.append((label, state))
    return out


def parse_config(doc: dict) -> RunConfig:
    """Validate a configuration document and build the run objects."""
    try:
        jsonschema.validate(doc, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigurationError(f"config {where}: {exc.message}") from None
    part = doc["particle"]
    system = ParticleSystem(
        label=part.get("label", "particle"),
        m=part["m"],
        mass_rule=MassRule(part.get("mass_rule", MassRule.BINDING.value)),
        spectator_mass=part.get("spectator_mass"),
        scale=part.get("scale", 1.0),
        unit=part.get("unit", "GeV"),
    )
    lam = doc.get("lambda", 0)
    out = doc.get("output", {})
    preset = doc.get("preset")
    if preset is not None:
        get_preset(preset)
    return RunConfig(
        potential=_potential(doc["potential"]),
        system=system,
        states=_expand_states(doc["states"], lam, system.m),
        lam=lam,
        fmt=out.get("format", "markdown"),
        precision=out.get("precision", 8),
        oracle=doc.get("oracle", False),
        preset=preset,
    )


def load_config(path: str) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigurationError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}: invalid JSON ({exc})") from None
    return parse_config(doc)


# -- rendering ---------------------------------------------------------------


def _fmt(value, precision: int, sci: bool = False) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.{precision}e}" if sci else f"{value:.{precision}f}"
    return str(value)


def render(header: Sequence[str], rows: Sequence[Sequence], fmt: str, precision: int, sci: bool = False) -> str:
    cells = [[_fmt(v, precision, sci) for v in row] for row in rows]
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(cells)
        return buf.getvalue()
    lines = ["| " + " | ".join(header) + " |", "|" + "|".join("---" for _ in header) + "|"]
    lines += ["| " + " | ".join(c.replace("|", "/") for c in row) + " |" for row in cells]
    return "\n".join(lines) + "\n"


def _j_text(j) -> str:
    return "" if j is None else f"{int(2 * j)}/2"


SPECTRUM_HEADER = ["state", "n_r", "l", "j", "E0", "E0+E2", "E", "observable", "error"]


def spectrum_rows(rows: list[SpectrumRow]) -> list[list]:
    out = []
    for r in rows:
        bd = r.breakdown
        out.append(
            [
                r.label,
                r.n_r,
                r.l,
                _j_text(r.j),
                bd.E0 if bd else None,
                bd.E_second if bd else None,
                bd.E_total if bd else None,
                r.value,
                r.error or "",
            ]
        )
    return out


def _reference_energy(cfg: RunConfig, row: SpectrumRow) -> float:
    """Exact energy for Coulomb, shooting energy otherwise."""
    bd = row.breakdown
    if cfg.potential.kind is PotentialKind.COULOMB_VECTOR:
        return exact_coulomb(cfg.potential, bd.state)
    return shoot_state(cfg.potential, bd.state, bd.E_total)


def cmd_spectrum(args) -> int:
    cfg = load_config(args.config)
    fmt = args.format or cfg.fmt
    rows = ordered_map(lambda job: solve_row(cfg.potential, cfg.system, *job), cfg.states)
    table = spectrum_rows(rows)
    header = list(SPECTRUM_HEADER)
    failed = not all(r.ok for r in rows)
    if cfg.oracle:
        header.insert(-1, "oracle")

        def reference(row: SpectrumRow):
            if not row.ok:
                return None, ""
            try:
                return observable_value(cfg.system, cfg.potential, _reference_energy(cfg, row)), ""
            except SletError as exc:
                return None, f"oracle {type(exc).__name__}: {exc}"

        refs = ordered_map(reference, rows)
        for line, (value, err) in zip(table, refs):
            line.insert(-1, value)
            if err:
                line[-1] = "; ".join(filter(None, [line[-1], err]))
                failed = True
    sys.stdout.write(render(header, table, fmt, cfg.precision))
    return EXIT_FAILED if failed else EXIT_OK


def cmd_table(args) -> int:
    p = get_preset(args.preset)
    rows = run_table(p)
    sign = -1.0 if p.negate else 1.0
    unit = p.system.unit
    names = ("-W0", "-W2", "-W3") if p.negate else ("E0 obs", "E0+E2 obs", "value")
    header = ["state", "n_r", "l", "j", *(f"{n} [{unit}]" if unit else n for n in names), "error"]
    body = []
    for r in rows:
        vals = [None if v is None else sign * v for v in (r.value_e0, r.value_e2, r.value)]
        body.append([r.label, r.n_r, r.l, _j_text(r.j), *vals, r.error or ""])
    out = [f"{p.id}: {p.title}\n", render(header, body, args.format, args.precision)]
    status = EXIT_OK if all(r.ok for r in rows) else EXIT_FAILED
    if args.compare:
        checks = compare_table(p.id, rows)
        cmp_rows = [
            [
                c.label,
                c.cell.column,
                c.computed,
                c.cell.printed,
                c.rounded,
                c.deviation,
                c.relative,
                c.tolerance,
                "PASS" if c.passed else "FAIL",
                c.error or "",
            ]
            for c in checks
        ]
        head = ["state", "column", "computed", "printed", "rounded", "abs dev", "rel dev", "tol", "verdict", "error"]
        passed = sum(c.passed for c in checks)
        out.append("\n" + render(head, cmp_rows, args.format, max(args.precision, 6)))
        out.append(f"\n{passed}/{len(checks)} cells pass\n")
        if passed != len(checks):
            status = EXIT_FAILED
    sys.stdout.write("".join(out))
    return status


def _golden_slet(preset: str | None) -> dict:
    if preset is None:
        return {}
    p = get_preset(preset)
    col = "neg_w3" if p.negate else "slet"
    sign = -1.0 if p.negate else 1.0
    return {(c.n_r, c.l, c.j if p.lam else None): sign * c.value for c in load_golden(p.id) if c.column == col}


def _oracle_row(cfg: RunConfig, mode: str, golden: dict, label: str, state: StateSpec) -> list:
    row = solve_row(cfg.potential, cfg.system, label, state)
    gold = golden.get((state.n_r, state.l, state.j if state.lam else None))
    base = [label, state.n_r, state.l, _j_text(state.j if state.lam else None)]
    if not row.ok:
        return base + [None] * 5 + [gold, row.error]
    bd = row.breakdown
    try:
        if mode == "anharmonic":
            c = bd.coefficients
            fit = anharmonic_fit(c, bd.w, state.n_r)
            return base + [
                c.alpha1,
                fit.alpha1,
                _rel(fit.alpha1, c.alpha1),
                c.alpha2,
                fit.alpha2,
                _rel(fit.alpha2, c.alpha2),
                "",
            ]
        if mode == "exact":
            energy = exact_coulomb(cfg.potential, state)
        else:
            energy = shoot_state(cfg.potential, state, bd.E_total)
    except SletError as exc:
        return base + [row.value, None, None, None, None, gold, f"{type(exc).__name__}: {exc}"]
    ref = observable_value(cfg.system, cfg.potential, energy)
    return base + [row.value, ref, _rel(row.value, ref), accuracy(row.value, ref), gold, _rel(row.value, gold), ""]


def _rel(value, ref):
    if value is None or ref is None or ref == 0.0:
        return None
    return (value - ref) / ref


def cmd_oracle(args) -> int:
    if args.config:
        cfg = load_config(args.config)
    else:
        p = get_preset(args.preset)
        cfg = RunConfig(p.potential, p.system, p.state_specs(), p.lam, preset=p.id)
    fmt = args.format or cfg.fmt
    golden = _golden_slet(cfg.preset)
    rows = ordered_map(lambda job: _oracle_row(cfg, args.mode, golden, *job), cfg.states)
    if args.mode == "anharmonic":
        header = ["state", "n_r", "l", "j", "alpha1", "alpha1 fit", "rel", "alpha2", "alpha2 fit", "rel", "error"]
    else:
        header = ["state", "n_r", "l", "j", "SLET", args.mode, "rel", "accuracy %", "golden", "rel golden", "error"]
    text = render(header, rows, fmt, cfg.precision, sci=args.mode == "anharmonic")
    failed = any(r[-1] for r in rows)
    if args.mode != "anharmonic":
        acc = [r[7] for r in rows if r[7] is not None]
        if acc:
            text += f"\naccuracy vs {args.mode}: min {min(acc):.4f}%  max {max(acc):.4f}%\n"
    sys.stdout.write(text)
    return EXIT_FAILED if failed else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="slet", description="Shifted-l expansion bound-state spectra.")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("spectrum", help="spectrum of a JSON configuration")
    sp.add_argument("--config", required=True)
    sp.add_argument("--format", choices=["csv", "markdown"])
    sp.set_defaults(func=cmd_spectrum)

    tb = sub.add_parser("table", help="run a preset table (t1..t9)")
    tb.add_argument("preset")
    tb.add_argument("--compare", action="store_true", help="check against the printed values")
    tb.add_argument("--format", choices=["csv", "markdown"], default="markdown")
    tb.add_argument("--precision", type=int, default=5)
    tb.set_defaults(func=cmd_table)

    orc = sub.add_parser("oracle", help="compare against an independent reference")
    src = orc.add_mutually_exclusive_group(required=True)
    src.add_argument("--config")
    src.add_argument("--preset")
    orc.add_argument("--mode", choices=["exact", "shoot", "anharmonic"], required=True)
    orc.add_argument("--format", choices=["csv", "markdown"])
    orc.set_defaults(func=cmd_oracle)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        return args.func(args)
    except ConfigurationError as exc:
        print(f"slet: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SletError as exc:
        print(f"slet: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
