"""Shared fixtures.  The heavy databases are session-scoped so the acceptance
suite and the module tests reuse one enumeration each."""
import pytest

from geodlab.group import enumerate_modular_ball, enumerate_orbit
from geodlab.orbits import build_periodic_orbits
from geodlab.presets import modular_group, schottky_pair, schottky_parabolic
from geodlab.pressure import GammaKAnalyzer, critical_exponent


@pytest.fixture(scope="session")
def pair_presentation():
    return schottky_pair()


@pytest.fixture(scope="session")
def pair_db(pair_presentation):
    return enumerate_orbit(pair_presentation, 14, 20.0)


@pytest.fixture(scope="session")
def pair_census(pair_presentation, pair_db):
    return build_periodic_orbits(pair_presentation, pair_db, 18.0)


@pytest.fixture(scope="session")
def pair_delta(pair_db):
    return critical_exponent(pair_db, None)


@pytest.fixture(scope="session")
def pair_analyzer(pair_db):
    return GammaKAnalyzer(pair_db)


@pytest.fixture(scope="session")
def parab_presentation():
    return schottky_parabolic()


@pytest.fixture(scope="session")
def parab_db(parab_presentation):
    return enumerate_orbit(parab_presentation, 80, 19.0)


@pytest.fixture(scope="session")
def parab_census(parab_presentation, parab_db):
    return build_periodic_orbits(parab_presentation, parab_db, 18.0)


@pytest.fixture(scope="session")
def parab_delta(parab_db):
    return critical_exponent(parab_db, None)


@pytest.fixture(scope="session")
def parab_analyzer(parab_db):
    return GammaKAnalyzer(parab_db)


@pytest.fixture(scope="session")
def modular_db():
    return enumerate_modular_ball(modular_group(), 12.0)
