"""Re-derive the frozen oracle values so a drifting oracle fails loudly."""
import pytest

import oracles


@pytest.mark.parametrize("point", sorted(oracles.FROZEN_RETARDED))
def test_retarded_bump_frozen(point):
    got = oracles.retarded_bump_solution(*point, (0.2, 0.5), (0.1, 0.1))
    assert got == pytest.approx(oracles.FROZEN_RETARDED[point], abs=1e-12)


def test_retarded_bump_plateau_is_half_mass():
    # well inside the cone of the whole source the solution is -1/2 of the unit mass
    assert oracles.retarded_bump_solution(0.6, 0.5, (0.2, 0.5), (0.1, 0.1)) == pytest.approx(-0.5, abs=1e-12)
    assert oracles.retarded_bump_solution(0.05, 0.5, (0.2, 0.5), (0.1, 0.1)) == 0.0


@pytest.mark.parametrize("key", sorted(oracles.FROZEN_SEMINORM_SIN_K1))
def test_seminorm_frozen(key):
    assert oracles.seminorm_sin_k1(*key) == pytest.approx(oracles.FROZEN_SEMINORM_SIN_K1[key], rel=1e-14)


@pytest.mark.parametrize("k", sorted(oracles.FROZEN_OMEGA))
def test_omega_frozen(k):
    assert oracles.brute_omega_counts(k) == oracles.FROZEN_OMEGA[k]


def test_retarded_pairing_frozen():
    got = oracles.retarded_pairing((0.35, 0.62), (0.06, 0.1), (0.12, 0.5), (0.06, 0.1))
    assert got == pytest.approx(oracles.FROZEN_RETARDED_PAIRING, rel=1e-9)
