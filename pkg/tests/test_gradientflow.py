"""Grid sampling, energy quadrature, stable stepping, and flow runs."""

import numpy as np
import pytest

from qcflow import DeterminantCollapse
from qcflow.gradientflow import (
    compatibility_check,
    dtmax,
    energy,
    explicit_step,
    interior_operator,
    make_grid,
    read_snapshot,
    run_flow,
    write_snapshot,
)
from qcflow.maps import affine_map, bump_map, identity_map, radial_stretch
from qcflow.operators import lp_nondiv


def identity_grid(shape=(33, 33), h=1.0 / 32.0):
    return make_grid(identity_map(2), shape, h)


def bump_grid(shape=(33, 33), h=1.0 / 32.0, amp=0.05):
    return make_grid(bump_map(2, amp), shape, h)


class TestMakeGrid:
    def test_identity_values_are_coordinates(self):
        g = identity_grid((9, 9), 0.125)
        np.testing.assert_array_equal(g.values, g.node_coordinates())

    def test_boundary_mask_is_box_edge(self):
        g = identity_grid((6, 5), 0.1)
        assert g.boundary_mask[0].all() and g.boundary_mask[-1].all()
        assert g.boundary_mask[:, 0].all() and g.boundary_mask[:, -1].all()
        assert not g.boundary_mask[1:-1, 1:-1].any()

    def test_det_cache_positive(self):
        g = bump_grid((17, 17), 1.0 / 16.0)
        assert np.min(g.det_cache) > 0.0

    def test_rank_mismatch_rejected(self):
        with pytest.raises(ValueError):
            make_grid(identity_map(2), (9, 9, 9), 0.1)

    def test_too_few_nodes_rejected(self):
        with pytest.raises(ValueError):
            make_grid(identity_map(2), (3, 9), 0.1)


class TestEnergy:
    def test_identity_value(self):
        # K^2 = 2 at every node, so the p=2 mean is exactly 4
        assert energy(identity_grid(), 2.0) == pytest.approx(4.0, abs=1e-12)

    def test_affine_value(self):
        g = make_grid(affine_map([[2.0, 0.0], [0.0, 0.5]]), (17, 17), 1.0 / 16.0)
        assert energy(g, 1.0) == pytest.approx(4.25, abs=1e-12)

    def test_quadrature_second_order(self):
        vals = [
            energy(bump_grid(shape, h), 2.0)
            for shape, h in (((17, 17), 1 / 16), ((33, 33), 1 / 32), ((65, 65), 1 / 64))
        ]
        ratio = (vals[1] - vals[0]) / (vals[2] - vals[1])
        assert 3.2 <= ratio <= 4.8


class TestCompatibility:
    def test_affine_zero(self):
        g = make_grid(affine_map([[2.0, 0.0], [0.3, 0.5]]), (17, 17), 1.0 / 16.0)
        assert compatibility_check(g, 2.0) <= 1e-10

    def test_bump_vanishes_second_order_at_edge(self):
        # the bump profile is cubic at its ends, so boundary Hessians are
        # analytically zero and the discrete residual decays like h^2
        coarse = compatibility_check(bump_grid((33, 33), 1 / 32), 2.0)
        fine = compatibility_check(bump_grid((65, 65), 1 / 64), 2.0)
        assert 3.0 <= coarse / fine <= 5.0

    def test_radial_matches_pointwise_operator(self):
        # on a box away from the origin the boundary residual converges
        # to the analytic operator norm along the edge
        m = radial_stretch(2.0, 2)
        g = make_grid(m, (17, 17), 1.0 / 16.0, origin=[1.0, 1.0])
        compat = compatibility_check(g, 2.0)
        coords = g.node_coordinates()
        oracle = 0.0
        for idx in np.ndindex(g.shape):
            if g.boundary_mask[idx]:
                oracle = max(oracle, np.max(np.abs(lp_nondiv(m.jet(coords[idx]), 2.0))))
        assert compat == pytest.approx(oracle, rel=1e-2)


class TestDtmax:
    def test_identity_hand_value(self):
        # safety 0.2 times h^2 over the coefficient mass 32 at q = I
        assert dtmax(identity_grid(), 2.0) == pytest.approx(6.103515625e-06, rel=1e-12)

    def test_doubling_h_quadruples(self):
        fine = dtmax(identity_grid((33, 33), 1.0 / 32.0), 2.0)
        coarse = dtmax(identity_grid((17, 17), 1.0 / 16.0), 2.0)
        assert coarse == pytest.approx(4.0 * fine, rel=1e-12)

    def test_monotone_decreasing_in_p(self):
        g = bump_grid((17, 17), 1.0 / 16.0)
        d1, d2, d5 = (dtmax(g, p) for p in (1.0, 2.0, 5.0))
        assert d1 > d2 > d5 > 0.0

    def test_identity_step_sequence_stable(self):
        g = identity_grid((17, 17), 1.0 / 16.0)
        dt = dtmax(g, 2.0)
        e0 = energy(g, 2.0)
        for _ in range(200):
            g = explicit_step(g, 2.0, dt)
        assert energy(g, 2.0) == pytest.approx(e0, abs=1e-12)


class TestExplicitStep:
    def test_affine_stationary(self):
        g = make_grid(affine_map([[2.0, 0.0], [0.0, 0.5]]), (17, 17), 1.0 / 16.0)
        update = interior_operator(g, 1.0)
        assert np.max(np.abs(update)) <= 1e-10

    def test_single_step_reduces_bump_energy(self):
        g = bump_grid()
        dt = dtmax(g, 2.0)
        stepped = explicit_step(g, 2.0, dt)
        assert energy(stepped, 2.0) < energy(g, 2.0)

    def test_boundary_nodes_never_move(self):
        g = bump_grid((17, 17), 1.0 / 16.0)
        stepped = explicit_step(g, 2.0, dtmax(g, 2.0))
        np.testing.assert_array_equal(
            stepped.values[g.boundary_mask], g.values[g.boundary_mask]
        )

    def test_oversized_step_caught(self):
        # far above the stability bound the move either collapses the
        # determinant or raises the energy for the monitor to catch
        g = bump_grid((17, 17), 1.0 / 16.0)
        dt = 2000.0 * dtmax(g, 2.0)
        try:
            stepped = explicit_step(g, 2.0, dt)
        except DeterminantCollapse:
            return
        assert energy(stepped, 2.0) > energy(g, 2.0)


class TestRunFlow:
    def test_affine_energy_constant(self):
        g = make_grid(affine_map([[2.0, 0.0], [0.0, 0.5]]), (17, 17), 1.0 / 16.0)
        stats = run_flow(g, 1.0, t_final=1e-4)
        assert stats.halt_reason is None
        np.testing.assert_allclose(stats.energy, stats.energy[0], atol=1e-11)
        np.testing.assert_array_equal(stats.final_grid.values, g.values)

    def test_bump_energy_decreases(self):
        g = bump_grid()
        stats = run_flow(g, 2.0, t_final=5e-4)
        assert stats.halt_reason is None
        e0 = stats.energy[0]
        tol = 1e-12 * (1.0 + e0)
        assert np.all(np.diff(stats.energy) <= tol)
        assert stats.energy[-1] < e0
        assert stats.times[-1] == pytest.approx(5e-4, rel=1e-12)

    def test_min_det_floor_maintained(self):
        g = bump_grid()
        floor = 0.5 * float(np.min(g.det_cache))
        stats = run_flow(g, 2.0, t_final=5e-4)
        assert np.all(stats.min_det >= floor)

    def test_boundary_frozen_through_run(self):
        g = bump_grid((17, 17), 1.0 / 16.0)
        stats = run_flow(g, 2.0, t_final=2e-4)
        np.testing.assert_array_equal(
            stats.final_grid.values[g.boundary_mask], g.values[g.boundary_mask]
        )

    def test_lp_norm_monotone(self):
        # energy is the p-th power of the discrete norm, so the norm
        # series inherits monotonicity
        g = bump_grid()
        stats = run_flow(g, 2.0, t_final=3e-4)
        norms = stats.energy ** (1.0 / 2.0)
        assert np.all(np.diff(norms) <= 1e-12 * (1.0 + norms[0]))

    def test_picard_mode_runs(self):
        g = bump_grid((17, 17), 1.0 / 16.0)
        stats = run_flow(g, 2.0, t_final=2e-4, mode="picard", outer=3)
        assert stats.halt_reason is None
        assert stats.energy[-1] <= stats.energy[0]

    def test_unknown_mode_rejected(self):
        with pytest.raises(ValueError):
            run_flow(identity_grid((17, 17), 1.0 / 16.0), 2.0, 1e-4, mode="verlet")

    def test_stats_csv(self, tmp_path):
        g = bump_grid((17, 17), 1.0 / 16.0)
        stats = run_flow(g, 2.0, t_final=1e-4)
        path = tmp_path / "series.csv"
        stats.write_csv(path)
        lines = path.read_text().strip().split("\n")
        assert lines[0] == "step,time,energy,min_det,dt"
        assert len(lines) == stats.times.size + 1


class TestSnapshots:
    def test_round_trip(self, tmp_path):
        g = bump_grid((9, 9), 0.125)
        path = tmp_path / "grid.bin"
        write_snapshot(g, path)
        values, h = read_snapshot(path)
        np.testing.assert_array_equal(values, g.values)
        assert h == g.h

    def test_binary_layout(self, tmp_path):
        g = identity_grid((5, 4), 0.25)
        path = tmp_path / "grid.bin"
        write_snapshot(g, path)
        raw = path.read_bytes()
        assert np.frombuffer(raw, dtype="<i8", count=1)[0] == 2
        assert tuple(np.frombuffer(raw, dtype="<i8", count=2, offset=8)) == (5, 4)
        assert np.frombuffer(raw, dtype="<f8", count=1, offset=24)[0] == 0.25
        assert len(raw) == 8 * (1 + 2 + 1) + 8 * 5 * 4 * 2
