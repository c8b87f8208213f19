import json

import mpmath
import pytest

from fracnls.elliptic import exact_profile, k_of_omega
from fracnls.errors import CountInconsistencyError, DomainError
from fracnls.grid import derivative, inner_product
from fracnls.krein import (
    INCONCLUSIVE,
    SPECTRALLY_UNSTABLE,
    STABLE_CANDIDATE,
    analyze_wave,
    dnorm_domega,
    krein_verdict,
    v_even,
    v_even_solve,
    v_odd,
)
from fracnls.linops import LinearizedOperator, apply, max_cutoff


def half_dnorm_exact(omega):
    """(1/2) d||phi||^2/domega for s = 1 from ||phi||^2 = 16 K (K - E) / pi."""
    mpmath.mp.dps = 30
    m = lambda k: k * k
    norm = lambda k: 16 * mpmath.ellipk(m(k)) * (mpmath.ellipk(m(k)) - mpmath.ellipe(m(k))) / mpmath.pi
    om = lambda k: 4 * (1 + k * k) * mpmath.ellipk(m(k)) ** 2 / mpmath.pi**2
    k = mpmath.mpf(k_of_omega(omega))
    return float(mpmath.diff(norm, k) / mpmath.diff(om, k) / 2)


def counts(l1_odd, l1_even, l2_odd, l2_even, extra=None):
    c = {("L1", "odd"): l1_odd, ("L1", "even"): l1_even, ("L2", "odd"): l2_odd, ("L2", "even"): l2_even}
    c.update(extra or {})
    return c


@pytest.mark.parametrize(
    "c, vo, ve, verdict, diffs",
    [
        (counts(0, 1, 0, 0), 1.0, 1.0, SPECTRALLY_UNSTABLE, (0, 1, 1)),
        (counts(0, 1, 0, 0), -1.0, 1.0, SPECTRALLY_UNSTABLE, (-1, 1, 0)),
        (counts(0, 1, 0, 2), 1.0, 1.0, SPECTRALLY_UNSTABLE, (0, 3, 3)),
        (counts(0, 1, 1, 1), 1.0, -1.0, SPECTRALLY_UNSTABLE, (1, 1, 2)),
        (counts(0, 1, 0, 2), 1.0, -1.0, INCONCLUSIVE, (0, 2, 2)),
        (counts(2, 0, 0, 0), 1.0, 1.0, INCONCLUSIVE, (2, 0, 2)),
        (counts(0, 1, 0, 0), 1.0, -1.0, STABLE_CANDIDATE, (0, 0, 0)),
        (counts(0, 0, 0, 0), 1.0, 1.0, STABLE_CANDIDATE, (0, 0, 0)),
    ],
)
def test_verdict_logic(exact_15, c, vo, ve, verdict, diffs):
    rep = krein_verdict(exact_15, c, vo, ve)
    assert rep.verdict == verdict
    assert (rep.diff_odd, rep.diff_even, rep.diff_full) == diffs
    assert rep.n_V_full == rep.n_V_odd + rep.n_V_even


def test_verdict_checks_full_counts(exact_15):
    good = counts(0, 1, 0, 2, {("L1", "full"): 1, ("L2", "full"): 2})
    assert krein_verdict(exact_15, good, 1.0, -1.0).n_L_full == 3
    with pytest.raises(CountInconsistencyError):
        krein_verdict(exact_15, counts(0, 1, 0, 2, {("L2", "full"): 1}), 1.0, -1.0)


@pytest.mark.parametrize("omega", [1.2, 1.5, 2.0])
def test_v_odd_matches_elliptic_oracle(grid, omega):
    vo = v_odd(exact_profile(omega, grid))
    assert vo > 0
    assert vo == pytest.approx(half_dnorm_exact(omega), rel=1e-6)


def test_dnorm_tracks_v_odd(wave_s1, wave_half):
    for wave in (wave_s1, wave_half):
        vo = v_odd(wave)
        dn = dnorm_domega(wave.s, wave.omega, 1e-3, wave=wave)
        assert abs(dn - vo) <= 1e-3 * abs(vo)


def test_dnorm_step_refinement(wave_half):
    coarse = dnorm_domega(0.5, 2.0, 4e-3, wave=wave_half)
    fine = dnorm_domega(0.5, 2.0, 2e-3, wave=wave_half)
    exact = v_odd(wave_half)
    # centered differences: halving h cuts the error by about four
    assert abs(fine - exact) < 0.5 * abs(coarse - exact)


def test_dnorm_domain(wave_half):
    with pytest.raises(DomainError):
        dnorm_domega(0.5, 1.01, 0.01, wave=wave_half)
    with pytest.raises(DomainError):
        dnorm_domega(0.5, 2.0, 0.0, wave=wave_half)


def test_v_even_negative_and_self_adjoint(wave_half):
    ve, sol = v_even_solve(wave_half)
    assert ve < 0
    beta = sol.solution
    l2beta = apply(LinearizedOperator("L2", wave_half, "even"), beta)
    assert inner_product(beta, l2beta) == pytest.approx(ve, rel=1e-8)
    assert inner_product(beta, derivative(wave_half.field)) == ve


def test_v_signs_stable_under_cutoff_doubling(grid, wave_half):
    wide = max_cutoff(grid)
    assert v_even(wave_half, 1024) == pytest.approx(v_even(wave_half, wide), rel=1e-8)
    assert v_odd(wave_half, 1024) == pytest.approx(v_odd(wave_half, wide), rel=1e-8)


@pytest.fixture(scope="module")
def report_half(wave_half):
    return analyze_wave(wave_half)


def test_analyze_wave(report_half):
    rep = report_half
    assert rep.v_odd > 0 and rep.v_even < 0
    assert (rep.n_L_odd, rep.n_L_even, rep.n_L_full) == (0, 3, 3)
    assert (rep.diff_odd, rep.diff_even, rep.diff_full) == (0, 2, 2)
    assert rep.verdict == INCONCLUSIVE
    d = rep.diagnostics
    assert abs(d["v_cross_chi_dphi"]) <= 1e-8 and abs(d["v_cross_beta_phi"]) <= 1e-8
    assert d["fd_relative_gap"] <= 1e-3
    assert rep.operator_counts["L2_odd"] == {"n_neg": 0, "n_zero": 1}
    assert rep.operator_counts["L1_even"] == {"n_neg": 1, "n_zero": 1}


def test_report_json(report_half):
    rec = json.loads(report_half.to_json())
    assert rec["verdict"] == INCONCLUSIVE
    assert rec["provenance"]["n_modes"] == 4096
    assert rec["v_odd"] == report_half.v_odd
