import math

import numpy as np
import pytest

from cayley_ising.ising_field import FieldQuad, ModelParams, fixed_point_residual
from cayley_ising.reduction import (
    ALPHA_PRIME,
    alpha_critical,
    count_I3_solutions,
    gamma_cubic,
    psi,
)
from cayley_ising.solvers import (
    count_phi_crossings,
    default_seed_box,
    isolate_and_refine,
    scan_alpha,
    solve_full_system,
)

ALPHA_CR = 6.371369510371674


class TestIsolateAndRefine:
    def test_cubic_roots_above_two(self):
        # at alpha = 10 the reduced cubic has exactly two roots past 2
        roots = isolate_and_refine(
            lambda x: gamma_cubic(x, 10.0), 2.0, 11.1, grid_n=10_000
        )
        assert len(roots) == 2
        for r in roots:
            assert abs(gamma_cubic(r, 10.0)) < 1e-8

    def test_psi_root(self):
        roots = isolate_and_refine(psi, ALPHA_PRIME, 50.0, grid_n=4000)
        assert len(roots) == 1
        assert roots[0] == pytest.approx(alpha_critical(), abs=1e-10)

    def test_no_roots(self):
        assert isolate_and_refine(lambda x: x * x + 1.0, -3.0, 3.0) == []

    def test_exact_grid_zero_counted_once(self):
        # 0.5 lands exactly on the grid of [0, 1] with 3 nodes
        roots = isolate_and_refine(lambda x: x - 0.5, 0.0, 1.0, grid_n=3)
        assert len(roots) == 1
        assert roots[0] == pytest.approx(0.5, abs=1e-12)

    def test_nan_rejected(self):
        with pytest.raises(ValueError):
            isolate_and_refine(lambda x: math.sqrt(x - 2.0) if x >= 2 else float("nan"),
                               0.0, 3.0, grid_n=10)

    def test_interval_validation(self):
        with pytest.raises(ValueError):
            isolate_and_refine(lambda x: x, 1.0, 1.0)
        with pytest.raises(ValueError):
            isolate_and_refine(lambda x: x, 0.0, 1.0, grid_n=1)


def test_default_seed_box_grows_with_coupling():
    assert default_seed_box(4, 1.0) == 3.0  # floor
    assert default_seed_box(4, 100.0) > default_seed_box(4, 10.0)
    assert default_seed_box(8, 0.01) > 3.0  # symmetric in ln alpha


class TestSolveFullSystem:
    def test_balanced_supercritical(self):
        p = ModelParams(k=4, a_size=4, alpha=10.0)
        res = solve_full_system(p)
        assert len(res.records) == 5
        assert all(r.flags.in_i3 for r in res.records)
        assert all(r.residual < 1e-10 for r in res.records)
        h1s = sorted(r.h.h1 for r in res.records)
        assert h1s[0] == pytest.approx(-h1s[-1], abs=1e-9)
        assert h1s[2] == pytest.approx(0.0, abs=1e-9)
        assert h1s[-1] == pytest.approx(4.325422442199874, abs=1e-6)
        assert h1s[-2] == pytest.approx(2.734043421342407, abs=1e-6)

    def test_single_index_low_alpha(self):
        p = ModelParams(k=4, a_size=1, alpha=0.1)
        res = solve_full_system(p)
        assert len(res.records) == 11
        assert len(res.filtered("I1")) == 3
        assert len(res.filtered("I3")) == 5
        ti = sorted(r.h.h1 for r in res.filtered("I1"))
        assert ti[2] == pytest.approx(4.603183, abs=1e-5)

    def test_solution_set_closed_under_negation_and_swap(self):
        p = ModelParams(k=4, a_size=1, alpha=0.1)
        res = solve_full_system(p)
        sols = np.array([r.h.as_array() for r in res.records])

        def contains(v):
            return np.min(np.max(np.abs(sols - v), axis=1)) < 1e-8

        for row in sols:
            assert contains(-row)
            assert contains(row[::-1])

    def test_nontrivial_ti_below_unit_alpha(self):
        p = ModelParams(k=2, a_size=1, alpha=0.2)
        res = solve_full_system(p)
        ti = sorted(r.h.h1 for r in res.filtered("I1"))
        assert len(ti) == 3
        assert ti[2] == pytest.approx(1.316957896924817, abs=1e-9)

    def test_flat_only_at_weak_coupling(self):
        p = ModelParams(k=3, a_size=2, alpha=1.05)
        res = solve_full_system(p)
        assert len(res.records) == 1
        assert res.records[0].flags.ti

    def test_explicit_seeds_are_honored(self):
        p = ModelParams(k=4, a_size=4, alpha=10.0)
        seeds = np.array([[4.3, 2.1, -2.1, -4.3]])
        res = solve_full_system(p, seeds=seeds)
        assert any(
            abs(r.h.h1 - 4.325422442199874) < 1e-6 for r in res.records
        )

    def test_filtered_rejects_unknown_restriction(self):
        p = ModelParams(k=2, a_size=1, alpha=0.5)
        with pytest.raises(ValueError):
            solve_full_system(p).filtered("I9")


class TestScanAlpha:
    def test_single_index_window(self):
        rep = scan_alpha(4, 1, 0.13, 0.18, 12, restrict="I3")
        assert rep.counts[0] == 5
        assert rep.counts[-1] == 1
        pairs = [(t.count_before, t.count_after) for t in rep.transitions]
        assert pairs == [(5, 3), (3, 1)]
        for t in rep.transitions:
            assert t.alpha_hi - t.alpha_lo < 1e-3
            assert 0.15 < t.midpoint < 0.16

    def test_balanced_window_brackets_the_critical_point(self):
        rep = scan_alpha(4, 4, 6.2, 6.5, 16, restrict="I3")
        pairs = [(t.count_before, t.count_after) for t in rep.transitions]
        assert pairs == [(1, 3), (3, 5)]
        lo, hi = rep.transitions[0], rep.transitions[1]
        assert lo.alpha_hi < ALPHA_CR < hi.alpha_lo
        assert rep.diagnostics["counter"] == "closed-form"
        assert rep.diagnostics["count_mismatches"] == []

    def test_jobs_do_not_change_the_outcome(self):
        a = scan_alpha(3, 3, 2.0, 4.0, 5, restrict="I3")
        b = scan_alpha(3, 3, 2.0, 4.0, 5, restrict="I3", jobs=2)
        assert a.counts == b.counts
        assert [t.as_dict() for t in a.transitions] == [
            t.as_dict() for t in b.transitions
        ]

    def test_grid_validation(self):
        with pytest.raises(ValueError):
            scan_alpha(4, 1, 0.3, 0.1, 10)
        with pytest.raises(ValueError):
            scan_alpha(4, 1, 0.1, 0.3, 1)
        with pytest.raises(ValueError):
            scan_alpha(4, 1, 0.1, 0.3, 10, restrict="nope")


class TestPhiCrossings:
    def test_five_crossings_frozen(self):
        r = count_phi_crossings(5, 3.0)
        assert r.count == 5
        expected = (0.0714943, 0.37292, 1.0, 2.68154, 13.9871)
        assert len(r.crossings) == 5
        for got, want in zip(r.crossings, expected):
            assert got == pytest.approx(want, rel=1e-4)

    @pytest.mark.parametrize(
        "k,alpha,count",
        [(6, 2.5, 3), (6, 1.2, 1), (6, 5.0, 5)],
    )
    def test_counts(self, k, alpha, count):
        assert count_phi_crossings(k, alpha).count == count

    def test_unit_crossing_always_reported(self):
        for k, alpha in ((2, 1.7), (5, 3.0), (6, 5.0)):
            r = count_phi_crossings(k, alpha)
            assert any(c == 1.0 for c in r.crossings)

    def test_crossings_come_in_reciprocal_pairs(self):
        # the composed map commutes with x -> 1/x, so its crossing set
        # is symmetric on the log axis
        r = count_phi_crossings(6, 5.0)
        cs = sorted(r.crossings)
        for a, b in zip(cs, reversed(cs)):
            assert a * b == pytest.approx(1.0, rel=1e-6)

    def test_records_solve_the_full_system(self):
        r = count_phi_crossings(5, 3.0)
        assert len(r.records) == r.count
        for rec in r.records:
            assert rec.residual < 1e-9
            assert rec.source == "phi-crossing"
            assert fixed_point_residual(rec.h, rec.params) < 1e-9

    def test_range_validation(self):
        with pytest.raises(ValueError):
            count_phi_crossings(5, 3.0, x_lo=2.0, x_hi=10.0)
        with pytest.raises(ValueError):
            count_phi_crossings(5, 3.0, grid_n=4)


def test_cross_path_reduction_vs_full_solver():
    # the scalar-chain solutions and the multistart projections must be
    # the same five points
    full = solve_full_system(ModelParams(k=4, a_size=4, alpha=10.0))
    via_reduction = count_I3_solutions(4, 10.0)
    a = sorted([r.h.as_array().tolist() for r in full.filtered("I3")])
    b = sorted([r.h.as_array().tolist() for r in via_reduction.records])
    assert len(a) == len(b) == 5
    for x, y in zip(a, b):
        assert np.max(np.abs(np.array(x) - np.array(y))) < 1e-6
