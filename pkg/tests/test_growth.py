import numpy as np
import pytest

from diagnostics import growth_condition_check
from errors import ConfigurationError
from variational import ActionConfig, Perturbation, get_perturbation


class BrokenPerturbation(Perturbation):
    name = 'broken'

    def density(self, phi, psi):
        raise ValueError("no density")

    def grad_psi(self, phi, psi):
        return psi

    def grad_phi(self, phi, psi):
        return np.zeros(np.shape(phi))


def test_canonical_hook_passes(rng):
    config = ActionConfig(alpha=1.5)
    report = growth_condition_check(config.hook(), rng, config=config)
    assert report.verdict == 'PASS'
    assert report.failed == []
    assert report.fitted_mu == pytest.approx(2.4, rel=1e-6)
    assert report.conditions['F1']['value'] == pytest.approx(2.4, rel=1e-6)
    # informational only: the regularity exponent must exceed 3
    assert not report.conditions['F6']['passed']
    assert report.windows['existence']['satisfied']
    assert report.windows['regularity']['satisfied']


def test_negative_power_violates_positivity(rng):
    report = growth_condition_check(get_perturbation('power', mu=4.0, coefficient=-1.0), rng)
    assert report.verdict == 'FAIL'
    assert report.failed == ['F2', 'F4']


def test_weighted_quadratic_is_not_superquadratic(rng):
    report = growth_condition_check(get_perturbation('weighted_quadratic'), rng)
    assert report.verdict == 'FAIL'
    assert 'F2' in report.failed
    assert 'F5' in report.failed
    assert report.conditions['F3']['passed']
    assert report.conditions['F3']['value'] == pytest.approx(2.0, rel=1e-6)


def test_quintic_growth_breaks_the_first_condition(rng):
    report = growth_condition_check(get_perturbation('power', mu=5.0), rng)
    assert 'F1' in report.failed
    assert report.conditions['F1']['value'] == pytest.approx(5.0, rel=1e-6)
    assert report.conditions['F2']['passed']


def test_report_serialises_without_samples(rng):
    report = growth_condition_check(get_perturbation('canonical', mu=3.0), rng)
    data = report.to_dict()
    assert 'samples' not in data
    assert set(data['conditions']) == {'F1', 'F2', 'F3', 'F4', 'F5', 'F6', 'F7'}
    assert len(report.samples) == 31


def test_hook_errors_surface_as_configuration_errors(rng):
    with pytest.raises(ConfigurationError) as info:
        growth_condition_check(BrokenPerturbation(), rng)
    assert info.value.key == "action.perturbation"
