import math

import pytest

from levinorm.construction import SearchPolicy, run
from levinorm.dyadic import Dyadic
from levinorm.schedule import NRule, QRule, Schedule


def sqrt2_start(bits: int = 1200) -> Dyadic:
    """frac(sqrt(2)) truncated to `bits` bits: a deterministic start value with
    a rich binary expansion (a zero start makes every desk-scale search accept
    candidate 0, leaving a degenerate orbit)."""
    num = math.isqrt(2 << (2 * bits)) - (1 << bits)
    return Dyadic(num, bits)


@pytest.fixture(scope="session")
def corollary_original_run():
    """Original schedule (n_r = 2^r - 2, q_r = 2^(2^r + r + 1)), bases j + 1,
    speeds 2^j, start 0, steps 5..7."""
    schedule = Schedule.corollary()
    return run(schedule, SearchPolicy(), 7)


@pytest.fixture(scope="session")
def quadratic_deep_run():
    """Quadratic schedule (n_r = r^2, derived q), sqrt(2) start, steps 5..32;
    deep enough to certify more than 1024 binary digits."""
    schedule = Schedule.corollary(
        n_rule=NRule(NRule.QUADRATIC),
        q_rule=QRule(QRule.DERIVED),
        start=sqrt2_start(),
    )
    return run(schedule, SearchPolicy(), 32)
