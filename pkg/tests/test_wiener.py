"""
Tests de trayectorias de Wiener reproducibles
"""

import numpy as np
import pytest

from modules.flux_noise import (
    WienerPathError,
    coarsen,
    member_seeds,
    sample_wiener,
    stack_increments,
)


class TestSampleWiener:
    """Muestreo con semilla fija"""

    def test_same_seed_same_path(self):
        a = sample_wiener(7, 1e-3, 1.0)
        b = sample_wiener(7, 1e-3, 1.0)
        np.testing.assert_array_equal(a.values, b.values)

    def test_different_seed_differs(self):
        a = sample_wiener(7, 1e-3, 1.0)
        b = sample_wiener(8, 1e-3, 1.0)
        assert not np.array_equal(a.values, b.values)

    def test_starts_at_zero(self):
        path = sample_wiener(3, 1e-2, 0.5)
        assert path.values[0] == 0.0
        assert path.n_steps == 50
        assert path.increments.shape == (50,)
        assert path.times[-1] == pytest.approx(0.5)

    def test_values_read_only(self):
        path = sample_wiener(3, 1e-2, 0.5)
        with pytest.raises(ValueError):
            path.values[1] = 0.0

    def test_increment_variance(self):
        dt = 1e-5
        inc = sample_wiener(1, dt, 1.0).increments
        assert 0.97 * dt <= np.var(inc) <= 1.03 * dt

    @pytest.mark.parametrize("dt,horizon", [(0.0, 1.0), (-1e-3, 1.0), (1e-3, 0.0), (0.3, 1.0)])
    def test_invalid_parameters(self, dt, horizon):
        with pytest.raises(WienerPathError):
            sample_wiener(0, dt, horizon)

    def test_error_is_value_error(self):
        assert issubclass(WienerPathError, ValueError)


class TestCoarsening:
    """Submuestreo consistente de la misma trayectoria"""

    def test_factor_one_is_identity(self):
        path = sample_wiener(5, 1e-3, 1.0)
        np.testing.assert_array_equal(path.coarsen(1).values, path.values)

    def test_terminal_preserved(self):
        path = sample_wiener(5, 1e-3, 1.0)
        assert path.coarsen(10).terminal == path.terminal
        assert coarsen(path, 100).terminal == path.terminal

    def test_coarse_increment_is_block_sum(self):
        path = sample_wiener(5, 1e-3, 1.0)
        fine = path.increments.reshape(100, 10).sum(axis=1)
        np.testing.assert_allclose(path.coarsen(10).increments, fine, atol=1e-12)

    def test_non_dividing_factor_rejected(self):
        path = sample_wiener(5, 1e-3, 1.0)
        with pytest.raises(WienerPathError, match="no divide"):
            path.coarsen(3)

    def test_to_step(self):
        path = sample_wiener(5, 1e-3, 1.0)
        np.testing.assert_array_equal(path.to_step(1e-2).values, path.coarsen(10).values)
        assert path.to_step(1e-2).dt == pytest.approx(1e-2)
        with pytest.raises(WienerPathError):
            path.to_step(1.5e-3)


class TestEnsembleHelpers:
    """Semillas y apilado de incrementos"""

    def test_member_seeds(self):
        assert member_seeds(10, 3) == [10, 11, 12]
        assert member_seeds(10, 0) == []

    def test_stack_increments(self):
        paths = [sample_wiener(s, 1e-3, 1.0) for s in member_seeds(0, 2)]
        stacked = stack_increments(paths, 1e-2)
        assert stacked.shape == (2, 100)
        np.testing.assert_array_equal(stacked[1], paths[1].to_step(1e-2).increments)
