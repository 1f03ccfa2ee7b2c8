"""Shared parameter sets for the test suite.

Two reference points recur everywhere: a moderately coupled emitter
(eta = nu) used for dynamics checks, and a strongly coupled one
(eta = 1.5 nu) whose spectrum shows a resolved sideband progression.
"""

import math

import pytest

from vibronic import model

TAU = 2.0 * math.pi  # one mode period at nu = 1


def dynamics_params(m_bar: float) -> model.ModelParams:
    """eta = nu, Gamma = 0.1 nu: underdamped TLS on a warm mode."""
    return model.ModelParams(
        omega=0.0, nu=1.0, eta=1.0, Gamma=0.1, gamma=0.2, m_bar=m_bar
    )


def sideband_params(m_bar: float = 0.05, eta: float = 1.5) -> model.ModelParams:
    """eta = 1.5 nu, Gamma = 0.01 nu: narrow lines, strong progression."""
    return model.ModelParams(
        omega=0.0, nu=1.0, eta=eta, Gamma=0.01, gamma=0.2, m_bar=m_bar
    )


@pytest.fixture(scope="session")
def sideband_derived() -> model.DerivedParams:
    return model.derive(sideband_params())
