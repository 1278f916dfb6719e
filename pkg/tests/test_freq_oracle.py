import numpy as np
import pytest

from errors import FitError, ProfileError
from freq_oracle import (
    ORACLE_COLUMNS,
    QuadratureSpec,
    RadialProfile,
    continuous_norm,
    guaranteed_exponent,
    heat_only_exponent,
    oracle_decay_fit,
    oracle_table,
    radial_moment,
)

HEAT_ONLY = RadialProfile(a=1.0, k0=1.0, seeded=('u_perp',))


def test_radial_moment_matches_gamma_values():
    spec = QuadratureSpec()
    # int_0^inf y^p exp(-y^2) dy = Gamma((p + 1) / 2) / 2
    assert radial_moment(0.0, 16, spec) == pytest.approx(np.sqrt(np.pi) / 2.0, rel=1e-12)
    assert radial_moment(4.0, 16, spec) == pytest.approx(3.0 * np.sqrt(np.pi) / 8.0, rel=1e-12)
    with pytest.raises(ProfileError):
        radial_moment(-1.0, 16, spec)


def test_heat_only_initial_norm():
    # |xi_h|^2 exp(-2|xi|^2) over xi3 > 0: (pi / 4) * sqrt(2 pi) / 4
    value = continuous_norm(HEAT_ONLY, 0.0, 'u_h')
    assert value ** 2 == pytest.approx(np.pi * np.sqrt(2.0 * np.pi) / 16.0, rel=1e-8)


def test_heat_only_decay_is_exact_power():
    ratio = continuous_norm(HEAT_ONLY, 99.0, 'u_h') / continuous_norm(HEAT_ONLY, 0.0, 'u_h')
    assert ratio == pytest.approx(0.01, rel=1e-7)
    assert heat_only_exponent(1.0) == -1.0


def test_heat_only_fit():
    result = oracle_decay_fit(HEAT_ONLY, 0.95, 'u_h', 'one', t_grid=np.geomspace(10.0, 1e4, 12))
    assert result.fit.exponent == pytest.approx(-1.0, abs=0.03)
    assert result.guaranteed == pytest.approx(-0.475)
    assert result.holds


def test_unseeded_fields_vanish():
    assert continuous_norm(HEAT_ONLY, 5.0, 'theta') == 0.0
    assert continuous_norm(HEAT_ONLY, 5.0, 'u3') == 0.0
    assert continuous_norm(RadialProfile(amplitude=0.0), 5.0) == 0.0


def test_norm_decreases_and_gradient_faster():
    profile = RadialProfile(a=1.0, k0=1.0)
    early = continuous_norm(profile, 10.0, 'all', 'one')
    late = continuous_norm(profile, 100.0, 'all', 'one')
    assert late < early
    grad_ratio = (continuous_norm(profile, 100.0, 'all', 'grad_h')
                  / continuous_norm(profile, 10.0, 'all', 'grad_h'))
    assert grad_ratio < late / early


def test_weights_and_fields_validated():
    profile = RadialProfile()
    with pytest.raises(ProfileError):
        continuous_norm(profile, 1.0, 'pressure')
    with pytest.raises(ProfileError):
        continuous_norm(profile, 1.0, 'all', 'd1')
    with pytest.raises(ProfileError):
        continuous_norm(profile, 1.0, 'all', 'lambda')
    with pytest.raises(ProfileError):
        continuous_norm(profile, -1.0)


def test_profile_admissibility():
    with pytest.raises(ProfileError):
        RadialProfile(seeded=('u1',))
    with pytest.raises(ProfileError):
        RadialProfile(k0=0.0)
    with pytest.raises(ProfileError):
        RadialProfile(a=-0.1).check_admissible(0.95)
    with pytest.raises(ProfileError):
        RadialProfile(a=0.9).check_admissible(0.95)
    RadialProfile(a=0.9, seeded=('u_perp', 'theta')).check_admissible(0.95)


def test_guaranteed_exponents():
    assert guaranteed_exponent('one', 0.95) == pytest.approx(-0.475)
    assert guaranteed_exponent('grad_h', 0.95) == pytest.approx(-0.975)
    assert guaranteed_exponent('lambda', 0.95) == 0.0


def test_oracle_fit_needs_enough_times():
    with pytest.raises(FitError):
        oracle_decay_fit(HEAT_ONLY, 0.95, 'u_h', t_grid=np.geomspace(10.0, 100.0, 5))


def test_oracle_table_columns():
    table = oracle_table(RadialProfile(), 0.95, [1.0, 2.0], QuadratureSpec(tol=1e-8))
    assert list(table.columns) == ['t'] + list(ORACLE_COLUMNS)
    assert np.all(table[list(ORACLE_COLUMNS)].to_numpy() > 0)


def test_theta_driven_by_seeded_u3():
    profile = RadialProfile(a=1.0, k0=1.0, seeded=('u3',))
    assert continuous_norm(profile, 0.0, 'theta') == 0.0
    assert continuous_norm(profile, 1.0, 'theta') > 0.0
    result = oracle_decay_fit(profile, 0.95, 'theta', 'one', t_grid=np.geomspace(10.0, 1e4, 12),
                              spec=QuadratureSpec(tol=1e-8))
    # theta ~ sin(t s) / s against the heat factor gives a t^-1/2 norm
    assert result.fit.exponent == pytest.approx(-0.5, abs=0.05)
    assert result.holds
