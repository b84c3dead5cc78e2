"""Grid and field container tests: representations, invariants, snapshot IO."""

import struct

import numpy as np
import pytest

import vcross as vc
from vcross.fields import next_power_of_two
from vcross.solver import SNAPSHOT_MAGIC, load_state, save_state


class TestGrid:
    def test_spacing_times_n_is_exactly_two_pi(self):
        for n in (16, 64, 256):
            g = vc.Grid(n)
            assert g.spacing * n == 2.0 * np.pi

    @pytest.mark.parametrize("n", [8, 12, 100, 96])
    def test_rejects_non_power_of_two_or_small(self, n):
        with pytest.raises(ValueError):
            vc.Grid(n)

    def test_dealias_mask_keeps_two_thirds(self, grid64):
        assert grid64.dealias[0, 0]
        assert grid64.dealias[21, 21]  # 64 // 3 = 21
        assert not grid64.dealias[22, 0]
        assert not grid64.dealias[0, 22]
        assert not grid64.dealias[32, 0]  # Nyquist row

    def test_wavenumbers_are_integers(self, grid64):
        assert grid64.kx[1, 0] == 1.0
        assert grid64.kx[-1, 0] == -1.0
        assert grid64.ky[0, -1] == 32.0


class TestScalarField:
    def test_roundtrip_physical_spectral(self, grid64):
        rng = np.random.default_rng(0)
        vals = rng.standard_normal((64, 64))
        f = vc.ScalarField.from_values(grid64, vals)
        back = vc.ScalarField.from_spectrum(grid64, f.spectrum)
        assert np.max(np.abs(back.values - vals)) <= 1e-12 * np.max(np.abs(vals))

    def test_mean_reads_zero_mode(self, grid64):
        vals = np.full((64, 64), 0.73)
        f = vc.ScalarField.from_values(grid64, vals)
        assert f.mean == pytest.approx(0.73, abs=1e-14)

    def test_rejects_nonfinite(self, grid64):
        vals = np.zeros((64, 64))
        vals[3, 3] = np.nan
        with pytest.raises(vc.InvalidFieldError):
            vc.ScalarField.from_values(grid64, vals)

    def test_rejects_bad_shape(self, grid64):
        with pytest.raises(vc.InvalidFieldError):
            vc.ScalarField.from_values(grid64, np.zeros((64, 32)))

    def test_spectral_derivative_single_mode(self, grid64):
        X, _ = grid64.meshgrid()
        f = vc.ScalarField.from_values(grid64, np.sin(3 * X))
        fx, fy = f.gradient_arrays()
        assert np.max(np.abs(fx - 3 * np.cos(3 * X))) < 1e-12
        assert np.max(np.abs(fy)) < 1e-12


class TestVelocityField:
    def test_divergence_rel_zero_field(self, grid64):
        vel = vc.VelocityField(vc.ScalarField.zeros(grid64), vc.ScalarField.zeros(grid64))
        assert vel.divergence_rel() == 0.0

    def test_max_speed_componentwise(self, grid64):
        X, Y = grid64.meshgrid()
        vel = vc.VelocityField(
            vc.ScalarField.from_values(grid64, 0.25 * np.sin(X)),
            vc.ScalarField.from_values(grid64, 2.0 * np.sin(Y)),
        )
        assert vel.max_speed() == pytest.approx(2.0, rel=1e-12)


class TestSnapshotFormat:
    def test_roundtrip(self, grid64, tmp_path):
        rng = np.random.default_rng(1)
        f = vc.ScalarField.from_values(grid64, rng.standard_normal((64, 64)))
        state = vc.SimState(f, time=1.25, inversion_exponent=1.5)
        path = tmp_path / "snap.vcrs"
        save_state(path, state)
        back = load_state(path)
        assert back.time == 1.25
        assert back.inversion_exponent == 1.5
        assert np.array_equal(back.theta.values, f.values)

    def test_header_layout(self, grid64, tmp_path):
        state = vc.SimState(vc.ScalarField.zeros(grid64), time=0.5)
        path = tmp_path / "snap.vcrs"
        save_state(path, state)
        raw = path.read_bytes()
        magic, version, nx, ny, t, alpha = struct.unpack("<4sIQQdd", raw[:40])
        assert magic == SNAPSHOT_MAGIC == b"VCRS"
        assert version == 1
        assert (nx, ny) == (64, 64)
        assert t == 0.5 and alpha == 1.0
        assert len(raw) == 40 + 8 * 64 * 64

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "bad.vcrs"
        path.write_bytes(b"XXXX" + b"\x00" * 64)
        with pytest.raises(ValueError, match="magic"):
            load_state(path)


def test_next_power_of_two():
    assert next_power_of_two(5) == 16
    assert next_power_of_two(16) == 16
    assert next_power_of_two(17) == 32
    assert next_power_of_two(1000) == 1024
