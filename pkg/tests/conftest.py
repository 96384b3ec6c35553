import pytest

from bellbench import AngleConfig, settings_table

ALL_PAIRS = (
    ("a", "b"), ("b_prime", "a"), ("b", "a_prime"), ("a_prime", "b_prime"),
    ("a_prime", "r"), ("r", "b_prime"), ("r", "r"),
)

# The configuration realizing the canonical difference tuple (120, 120, 120, 0).
OPTIMAL_ANGLES = AngleConfig(60.0, 120.0, 0.0, 0.0, 0.0)


@pytest.fixture
def optimal_ideal_table():
    return settings_table(OPTIMAL_ANGLES, ALL_PAIRS)
