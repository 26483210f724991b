import math

import numpy as np
import pytest

from slet.engine import CoefficientSet, StateSpec, solve_state
from slet.errors import ConfigurationError, ConvergenceError, DomainError, FitError, NoBoundStateError
from slet.oracle import (
    MIN_STEPS,
    ShootingConfig,
    anharmonic_fit,
    bracket_state,
    dirac_radial_number,
    exact_coulomb,
    exact_coulomb_dirac,
    exact_coulomb_kg,
    oscillator_level,
    radial_window,
    shoot_energy,
    shoot_state,
)
from slet.potentials import PotentialSpec
from slet.spectra import ALPHA_FS, ELECTRON_EV, PION_KEV, PRESETS

COULOMB = PotentialSpec.coulomb(ALPHA_FS)
LINEAR = PotentialSpec.linear_scalar(0.137)
POWER = PotentialSpec.power_law(1.709**1.1, 0.1, -2.028)


def test_exact_kg_examples():
    assert round((exact_coulomb_kg(0, 0, ALPHA_FS) - 1) * PION_KEV, 5) == pytest.approx(-3.71658)
    assert round((exact_coulomb_kg(1, 1, ALPHA_FS) - 1) * PION_KEV, 5) == pytest.approx(-0.41293)


def test_exact_dirac_examples():
    w1s = (exact_coulomb_dirac(0, -1, ALPHA_FS) - 1) * ELECTRON_EV
    w2s = (exact_coulomb_dirac(1, -1, ALPHA_FS) - 1) * ELECTRON_EV
    assert w1s == pytest.approx(-13.60601, abs=1e-5)
    assert abs(w1s - -13.60603) < 1e-4
    assert w2s == pytest.approx(-3.40152, abs=1e-5)
    # ground state in closed form
    assert exact_coulomb_dirac(0, -1, ALPHA_FS) == pytest.approx(math.sqrt(1 - ALPHA_FS**2), rel=1e-15)


def test_dirac_degeneracy_in_j():
    # 2s1/2 and 2p1/2 share n and j
    a = exact_coulomb_dirac(dirac_radial_number(1, -1), -1, ALPHA_FS)
    b = exact_coulomb_dirac(dirac_radial_number(0, 1), 1, ALPHA_FS)
    assert a == b


@pytest.mark.parametrize("fn,args", [(exact_coulomb_kg, (0, 0, 1e-9)), (exact_coulomb_dirac, (2, -1, 1e-9))])
def test_free_limit(fn, args):
    assert fn(*args) == pytest.approx(1.0, abs=1e-15)


@pytest.mark.parametrize(
    "fn,args",
    [
        (exact_coulomb_dirac, (0, 1, 0.1)),
        (exact_coulomb_dirac, (0, -1, 1.0)),
        (exact_coulomb_dirac, (0, 0, 0.1)),
        (exact_coulomb_kg, (0, 0, 0.6)),
        (exact_coulomb_kg, (-1, 0, 0.1)),
    ],
)
def test_exact_domain(fn, args):
    with pytest.raises(DomainError):
        fn(*args)


def test_exact_needs_coulomb():
    with pytest.raises(ConfigurationError):
        exact_coulomb(LINEAR, StateSpec(0, 0, -1, 0, 1.0))


@pytest.mark.parametrize("tid", ["t1", "t2"])
def test_shooting_agrees_with_exact(tid):
    p = PRESETS[tid]
    for _, state in p.state_specs():
        exact = exact_coulomb(p.potential, state)
        shot = shoot_state(p.potential, state, exact)
        assert shot == pytest.approx(exact, rel=1e-7)
        if state.lam == 0:
            # same equation: binding energies agree far beyond the expansion error
            assert (shot - 1) == pytest.approx(exact - 1, rel=1e-7)


def test_shooting_linear_ground_state_near_reference_mass():
    mass = 2 * shoot_state(LINEAR, StateSpec(0, 0, -1, 0, 1.12))
    # the reference mass is quoted to two digits; the expansion column prints 3.12
    assert abs(mass - 3.1) <= 0.05
    assert round(mass, 2) == 3.12


def test_shooting_spin_blind_for_equal_mix():
    a = shoot_state(POWER, StateSpec(0, 1, -2, 0, 1.6179))
    b = shoot_state(POWER, StateSpec(0, 1, 1, 1, 1.6179))
    assert a == pytest.approx(b, rel=1e-12)


def test_shooting_step_halving_is_stable():
    state = StateSpec(2, 1, 1, 1, 1.12)
    cfg = bracket_state(LINEAR, state, solve_state(LINEAR, state).E_total)
    coarse = shoot_energy(LINEAR, state, cfg, check_refinement=False)
    fine = shoot_energy(LINEAR, state, ShootingConfig(cfg.r_min, cfg.r_max, 2 * cfg.steps, cfg.E_bracket, 2))
    assert abs(fine - coarse) / fine < 1e-8


def test_shooting_bracket_errors():
    state = StateSpec(1, 0, -1, 0, 1.12)
    guess = solve_state(LINEAR, state).E_total
    cfg = bracket_state(LINEAR, state, guess)
    below = ShootingConfig(cfg.r_min, cfg.r_max, cfg.steps, (cfg.E_bracket[0] - 1.0, cfg.E_bracket[0] - 0.9), 1)
    with pytest.raises(NoBoundStateError):
        shoot_energy(LINEAR, state, below)
    wide = ShootingConfig(cfg.r_min, cfg.r_max, cfg.steps, (1.0, 3.0), 1)
    with pytest.raises(NoBoundStateError):
        shoot_energy(LINEAR, state, wide)


def test_shooting_config_validation():
    with pytest.raises(ConfigurationError):
        ShootingConfig(1.0, 0.5, MIN_STEPS, (0.0, 1.0), 0)
    with pytest.raises(ConfigurationError):
        ShootingConfig(0.1, 1.0, MIN_STEPS - 1, (0.0, 1.0), 0)
    with pytest.raises(ConfigurationError):
        ShootingConfig(0.1, 1.0, MIN_STEPS, (1.0, 1.0), 0)


def test_radial_window_requires_binding():
    with pytest.raises(NoBoundStateError):
        radial_window(COULOMB, StateSpec(0, 0, -1, 0, 1.0), 1.0001)


def test_coarse_grid_is_refused():
    state = StateSpec(0, 0, -1, 0, 1.12)
    cfg = ShootingConfig(1e-4, 500.0, MIN_STEPS, (1.0, 2.0), 0)
    with pytest.raises(ConfigurationError):
        shoot_energy(LINEAR, state, cfg)


def _coeffs(eps=(0.0,) * 4, deltas=(0.0,) * 6):
    return CoefficientSet(*eps, *deltas[2:], alpha1=0.0, delta1=deltas[0], delta2=deltas[1], alpha2=0.0)


def test_harmonic_fit_is_zero():
    fit = anharmonic_fit(_coeffs(), 2.0, 0)
    assert abs(fit.alpha1) < 1e-12 and abs(fit.alpha2) < 1e-12


@pytest.mark.parametrize("n_r", [0, 1, 2])
def test_quadratic_perturbation_first_order(n_r):
    w, e2 = 1.5, 0.3
    fit = anharmonic_fit(_coeffs(eps=(0.0, e2, 0.0, 0.0)), w, n_r)
    assert fit.alpha1 == pytest.approx((1 + 2 * n_r) * e2 / w, rel=1e-9)
    # exact level: sqrt(w**2 + 4 e2/lbar), second-order term -e2**2 (1+2n)/w**3
    assert fit.alpha2 == pytest.approx(-(1 + 2 * n_r) * e2**2 / w**3, rel=1e-6)


def test_oscillator_level_harmonic():
    assert oscillator_level(_coeffs(), 2.0, 3, 100.0) == pytest.approx(7.0, rel=1e-14)


@pytest.mark.parametrize(
    "tid,index",
    [("t1", 0), ("t2", 0), ("t3", 0), ("t4", 0), ("t5", 0), ("t6", 0), ("t1", 3), ("t3", 19)],
)
def test_fit_reproduces_transcribed_alphas(tid, index):
    p = PRESETS[tid]
    _, state = p.state_specs()[index]
    bd = solve_state(p.potential, state)
    c = bd.coefficients
    fit = anharmonic_fit(c, bd.w, state.n_r)
    assert fit.alpha1 == pytest.approx(c.alpha1, rel=1e-2, abs=1e-12)
    assert fit.alpha2 == pytest.approx(c.alpha2, rel=5e-2)


def test_fit_argument_checks():
    c = _coeffs()
    with pytest.raises(ConfigurationError):
        anharmonic_fit(c, 2.0, 0, lbar_samples=(50, 100, 200))
    with pytest.raises(ConfigurationError):
        anharmonic_fit(c, 2.0, 0, lbar_samples=(50, 100, 200, 400), terms=4)
    with pytest.raises(ConfigurationError):
        anharmonic_fit(c, 2.0, 0, basis=100)
    partial = CoefficientSet(0, 0, 0, 0, 0, 0, 0, 0, alpha1=0.0)
    with pytest.raises(ConfigurationError):
        anharmonic_fit(partial, 2.0, 0)


def test_fit_conditioning_guard():
    samples = 1e6 + np.arange(8.0)
    with pytest.raises(FitError):
        anharmonic_fit(_coeffs(), 2.0, 0, lbar_samples=samples, terms=6)
