import pytest

from slet.engine import StateSpec, solve_state
from slet.errors import ConfigurationError
from slet.potentials import PotentialSpec
from slet.spectra import (
    PRESETS,
    GoldenCell,
    MassRule,
    ParticleSystem,
    accuracy,
    compare_table,
    dirac_state_of,
    get_preset,
    kappa_of,
    kg_state_of,
    load_golden,
    observable,
    observable_value,
    ordered_map,
    round_half_even,
    run_table,
    state_label,
    thread_count,
)


@pytest.mark.parametrize("l,j,k", [(0, 0.5, -1), (1, 1.5, -2), (1, 0.5, 1), (3, 2.5, 3), (2, 2.5, -3)])
def test_kappa_of(l, j, k):
    assert kappa_of(l, j) == k
    assert k * (k + 1) == l * (l + 1)


@pytest.mark.parametrize("l,j", [(0, -0.5), (0, 1.5), (2, 0.5), (1, 1.0), (1, 2)])
def test_kappa_of_rejects(l, j):
    with pytest.raises(ConfigurationError):
        kappa_of(l, j)


def test_state_builders():
    kg = kg_state_of(1, 2, 1.0)
    assert kg.lam == 0 and kg.k * (kg.k + 1) == 6
    d = dirac_state_of(0, 1, 0.5, 1.12)
    assert (d.lam, d.k) == (1, 1)


def test_particle_system_spectator_rule():
    with pytest.raises(ConfigurationError):
        ParticleSystem("d", 0.01, MassRule.E_PLUS_SPECTATOR)
    with pytest.raises(ConfigurationError):
        ParticleSystem("c", 1.6, MassRule.TWICE_E, spectator_mass=0.3)
    with pytest.raises(ConfigurationError):
        ParticleSystem("x", -1.0)


def test_mass_rules_are_consistent():
    spec = PotentialSpec.linear_scalar(0.137)
    bd = solve_state(spec, StateSpec(1, 1, -2, 1, 1.12))
    w = observable(ParticleSystem("c", 1.12, MassRule.BINDING), bd).value
    mass = observable(ParticleSystem("c", 1.12, MassRule.TWICE_E), bd).value
    assert mass == pytest.approx(2 * (w + 1.12), rel=1e-14)
    spect = observable(ParticleSystem("c", 1.12, MassRule.E_PLUS_SPECTATOR, spectator_mass=0.5), bd).value
    assert spect == pytest.approx(w + 1.12 + 0.5, rel=1e-14)


def test_scaled_epsilon_needs_power_law():
    sys_ = ParticleSystem("c", 1.6179, MassRule.SCALED_EPSILON)
    with pytest.raises(ConfigurationError):
        observable_value(sys_, PotentialSpec.linear_scalar(0.1), 2.0)


@pytest.mark.parametrize("tid,count", [("t1", 10), ("t2", 16), ("t3", 20), ("t4", 20), ("t5", 20)] + [(f"t{i}", 8) for i in range(6, 10)])
def test_preset_row_counts(preset_rows, tid, count):
    rows = preset_rows[tid]
    assert len(rows) == count
    assert all(r.ok for r in rows)


def test_preset_examples(preset_rows):
    def find(tid, n_r, l):
        return next(r for r in preset_rows[tid] if (r.n_r, r.l) == (n_r, l))

    assert round(find("t6", 0, 0).value, 4) == 1.2358
    assert round(find("t7", 0, 0).value, 4) == 9.4347
    assert round(find("t9", 0, 0).value, 4) == 1.9713
    assert round(find("t8", 4, 0).value, 4) == 2.2950


def test_t4_state_grid(preset_rows):
    rows = preset_rows["t4"]
    assert {(r.n_r, r.l) for r in rows} == {(n, l) for n in range(5) for l in range(4)}
    assert all(r.j == r.l + 0.5 for r in rows)


def test_coulomb_kg_degeneracy(preset_rows):
    rows = {r.label: r for r in preset_rows["t1"]}
    assert abs(rows["2s"].value_e0 - rows["2p"].value_e0) < 1e-5


def test_dirac_fine_structure(preset_rows):
    rows = {r.label: r for r in preset_rows["t2"]}
    assert rows["2p3/2"].value != rows["2p1/2"].value
    assert rows["2p3/2"].value > rows["2p1/2"].value
    assert rows["3d5/2"].value > rows["3d3/2"].value


def test_row_failures_are_captured():
    preset = get_preset("t1")
    bad = PotentialSpec.custom(vector=lambda r: [0.2 / r] + [0.0] * 8)
    from dataclasses import replace

    rows = run_table(replace(preset, potential=bad))
    assert len(rows) == 10
    assert all(not r.ok and r.value is None for r in rows)


def test_ordered_map_keeps_order(monkeypatch):
    monkeypatch.setenv("SLET_THREADS", "4")
    assert ordered_map(lambda x: x * x, list(range(50))) == [x * x for x in range(50)]
    monkeypatch.setenv("SLET_THREADS", "1")
    assert thread_count() == 1
    monkeypatch.setenv("SLET_THREADS", "many")
    with pytest.raises(ConfigurationError):
        thread_count()


def test_threaded_table_is_deterministic(monkeypatch, preset_rows):
    monkeypatch.setenv("SLET_THREADS", "8")
    rows = run_table("t5")
    assert [r.value for r in rows] == [r.value for r in preset_rows["t5"]]


def test_unknown_preset():
    with pytest.raises(ConfigurationError):
        get_preset("t10")


def test_labels():
    assert state_label(0, 0) == "1s"
    assert state_label(1, 2, 1.5) == "4d3/2"


def test_half_even_rounding():
    assert round_half_even(2.5, 0) == 2.0
    assert round_half_even(0.125, 2) == 0.12
    assert round_half_even(5.0550017, 2) == 5.06


def test_accuracy():
    assert accuracy(99.0, 100.0) == pytest.approx(99.0)
    with pytest.raises(ConfigurationError):
        accuracy(1.0, 0.0)


def test_golden_files_cover_every_preset():
    for tid, p in PRESETS.items():
        cells = load_golden(tid)
        keys = {(c.n_r, c.l, c.j) for c in cells}
        assert keys == {(n, l, j) for n, l, j in p.states}
        assert all(isinstance(c, GoldenCell) and c.decimals >= 1 for c in cells)


def test_golden_cell_precision():
    cell = GoldenCell(0, 0, None, "slet", "4.387")
    assert cell.decimals == 3 and cell.value == 4.387


@pytest.mark.parametrize("tid", ["t1", "t2", "t4", "t5", "t6", "t7", "t8", "t9"])
def test_compare_table_passes(preset_rows, tid):
    checks = compare_table(tid, preset_rows[tid])
    assert checks and all(c.passed for c in checks)


def test_compare_table_t3_single_rounding_boundary_cell(preset_rows):
    failing = [c for c in compare_table("t3", preset_rows["t3"]) if not c.passed]
    assert [(c.cell.n_r, c.cell.l) for c in failing] == [(3, 3)]
    assert failing[0].computed == pytest.approx(5.0550017, abs=1e-6)
