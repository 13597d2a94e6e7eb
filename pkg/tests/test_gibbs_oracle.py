import itertools
import math

import numpy as np
import pytest

from cayley_ising.cayley_group import (
    ResourceLimitError,
    SubgroupSpec,
    ball,
    in_HA,
    parent,
)
from cayley_ising.gibbs_oracle import (
    check_compatibility,
    check_eq4,
    hamiltonian,
    mu_n_table,
)
from cayley_ising.ising_field import (
    FieldQuad,
    ModelParams,
    W_map,
    assign_field,
    f_field,
)


def _spec(k, members):
    return SubgroupSpec(k=k, members=frozenset(members))


def _brute_table(params, quad, spec, n):
    """Reference measure computed with dict configs and plain floats."""
    b = ball(n, params.k)
    weights = {}
    for spins in itertools.product((-1, 1), repeat=len(b.vertices)):
        cfg = dict(zip(b.vertices, spins))
        e = 0.0
        for level in b.levels[1:]:
            for w in level:
                e += params.coupling * cfg[w] * cfg[parent(w)]
        for w in b.boundary:
            e += assign_field(w, spec, quad) * cfg[w]
        weights[spins] = math.exp(e)
    z = sum(weights.values())
    return b, {cfg: v / z for cfg, v in weights.items()}


def _ti_field(k, theta):
    """Nonzero solution of h = k f(h) by bisection, for theta > 0."""
    g = lambda h: k * f_field(h, theta) - h
    lo, hi = 0.5, 20.0
    assert g(lo) > 0 > g(hi)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if g(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


class TestHamiltonian:
    def test_aligned_configuration(self):
        b = ball(2, 2)
        cfg = {w: 1 for w in b.vertices}
        # nine edges, all parallel
        assert hamiltonian(cfg, 1.0, 2, 2) == -9.0
        assert hamiltonian(cfg, 3.0, 1, 2) == -9.0

    def test_flipped_root(self):
        b = ball(2, 2)
        cfg = {w: 1 for w in b.vertices}
        cfg[()] = -1  # breaks the three root edges only
        assert hamiltonian(cfg, 1.0, 2, 2) == -3.0

    def test_level_alternating(self):
        b = ball(1, 2)
        cfg = {w: (1 if len(w) % 2 == 0 else -1) for w in b.vertices}
        assert hamiltonian(cfg, 1.0, 1, 2) == 3.0

    def test_missing_vertex(self):
        cfg = {w: 1 for w in ball(1, 2).vertices}
        del cfg[(1,)]
        with pytest.raises(ValueError):
            hamiltonian(cfg, 1.0, 1, 2)

    def test_invalid_spin(self):
        cfg = {w: 1 for w in ball(1, 2).vertices}
        cfg[(1,)] = 0
        with pytest.raises(ValueError):
            hamiltonian(cfg, 1.0, 1, 2)


class TestMuTable:
    def test_matches_brute_force(self):
        params = ModelParams(k=2, a_size=1, alpha=0.3)
        quad = FieldQuad(0.4, -0.2, 0.9, 0.1)
        spec = _spec(2, {1})
        table = mu_n_table(params, quad, spec, 2)
        b, ref = _brute_table(params, quad, spec, 2)
        assert table.vertices == b.vertices
        for spins, p in ref.items():
            cfg = dict(zip(b.vertices, spins))
            assert table.prob_of(cfg) == pytest.approx(p, rel=1e-12, abs=1e-15)

    def test_normalization(self):
        params = ModelParams(k=3, a_size=2, alpha=4.0)
        table = mu_n_table(params, FieldQuad(1.0, -0.5, 0.3, 0.0), _spec(3, {1, 2}), 1)
        assert float(np.sum(table.probs)) == pytest.approx(1.0, abs=1e-12)
        assert math.isfinite(table.log_z)
        assert table.z_n > 0

    def test_uniform_when_free(self):
        # J = 0 and h = 0: every configuration equally likely
        params = ModelParams(k=2, a_size=1, J=0.0, beta=1.0)
        table = mu_n_table(params, FieldQuad(0, 0, 0, 0), _spec(2, {1}), 2)
        n = len(table.probs)
        assert np.all(table.probs == table.probs[0])
        assert table.probs[0] == pytest.approx(1.0 / n, rel=1e-12)

    def test_index_of_bit_convention(self):
        params = ModelParams(k=2, a_size=1, alpha=2.0)
        table = mu_n_table(params, FieldQuad(0, 0, 0, 0), _spec(2, {1}), 1)
        all_up = {w: 1 for w in table.vertices}
        all_down = {w: -1 for w in table.vertices}
        assert table.index_of(all_up) == len(table.probs) - 1
        assert table.index_of(all_down) == 0

    def test_global_flip_symmetry_is_bit_exact(self):
        params = ModelParams(k=3, a_size=2, alpha=6.0)
        quad = FieldQuad(0.8, -1.1, 0.25, 1.9)
        spec = _spec(3, {1, 3})
        plus = mu_n_table(params, quad, spec, 2)
        minus = mu_n_table(params, -quad, spec, 2)
        # negating every field while flipping every spin permutes the
        # weight vector by index complement; normalization is ordered
        # to survive that permutation without rounding
        assert np.array_equal(plus.probs, minus.probs[::-1])

    def test_depth_zero_rejected(self):
        params = ModelParams(k=2, a_size=1, alpha=2.0)
        with pytest.raises(ValueError):
            mu_n_table(params, FieldQuad(0, 0, 0, 0), _spec(2, {1}), 0)

    def test_config_cap(self):
        params = ModelParams(k=4, a_size=2, alpha=2.0)
        with pytest.raises(ResourceLimitError):
            mu_n_table(params, FieldQuad(0, 0, 0, 0), _spec(4, {1, 2}), 2)
        # and an explicit tiny cap trips even small balls
        with pytest.raises(ResourceLimitError):
            mu_n_table(ModelParams(k=2, a_size=1, alpha=2.0),
                       FieldQuad(0, 0, 0, 0), _spec(2, {1}), 2, cap=64)

    def test_spec_params_mismatch(self):
        params = ModelParams(k=2, a_size=1, alpha=2.0)
        with pytest.raises(ValueError):
            mu_n_table(params, FieldQuad(0, 0, 0, 0), _spec(2, {1, 3}), 1)
        with pytest.raises(ValueError):
            mu_n_table(params, FieldQuad(0, 0, 0, 0), _spec(3, {1}), 1)


class TestCompatibility:
    def test_consistent_field_has_tiny_defect(self):
        theta = 0.75  # alpha = 1/7
        hstar = _ti_field(2, theta)
        params = ModelParams(k=2, a_size=1, theta=theta)
        quad = FieldQuad(hstar, hstar, hstar, hstar)
        assert check_compatibility(params, quad, _spec(2, {1}), 2) < 1e-12

    def test_inconsistent_field_fails(self):
        params = ModelParams(k=2, a_size=1, alpha=0.2)
        defect = check_compatibility(params, FieldQuad(1, 1, 1, 1), _spec(2, {1}), 2)
        assert defect > 1e-4

    def test_defect_linear_in_perturbation(self):
        params = ModelParams(k=2, a_size=1, alpha=0.2)
        hs = 1.316957896924817  # solves h = 2 f(h) at this alpha
        spec = _spec(2, {1})
        defects = []
        for eps in (1e-4, 1e-6):
            quad = FieldQuad(hs + eps, hs, hs, hs)
            defects.append(check_compatibility(params, quad, spec, 2))
        assert 0.01 < defects[0] / 1e-4 < 0.5
        assert defects[1] / defects[0] == pytest.approx(1e-2, rel=0.05)

    def test_zero_field_always_compatible(self):
        # the flat zero law is consistent at any coupling
        for theta in (-0.6, 0.35):
            params = ModelParams(k=2, a_size=1, theta=theta)
            assert check_compatibility(
                params, FieldQuad(0, 0, 0, 0), _spec(2, {2}), 2
            ) < 1e-13

    def test_depth_validation(self):
        params = ModelParams(k=2, a_size=1, alpha=0.2)
        with pytest.raises(ValueError):
            check_compatibility(params, FieldQuad(0, 0, 0, 0), _spec(2, {1}), 1)


class TestEq4:
    def test_antisymmetric_solution_passes(self):
        from cayley_ising.reduction import count_I3_solutions

        c = count_I3_solutions(4, 10.0)
        spec = _spec(4, {1, 2, 3, 4})
        for rec in c.records:
            rep = check_eq4(rec.h, rec.params, spec, depth=4)
            assert rep.max_residual < 1e-9

    def test_per_role_matches_component_residuals(self):
        # for an arbitrary (non-solution) quad the per-role residuals
        # are exactly the four component defects of the reduced map
        params = ModelParams(k=2, a_size=1, alpha=0.7)
        quad = FieldQuad(0.6, -0.8, 1.4, 0.3)
        spec = _spec(2, {1})
        rep = check_eq4(quad, params, spec, depth=4)
        w = W_map(quad, params)
        for role, (have, want) in enumerate(zip(quad, w), start=1):
            assert rep.per_role[role] == pytest.approx(abs(have - want), abs=1e-12)
        assert rep.max_residual == max(rep.per_role.values())

    def test_all_roles_seen_at_depth_four(self):
        params = ModelParams(k=2, a_size=1, alpha=0.7)
        rep = check_eq4(FieldQuad(1, 2, 3, 4), params, _spec(2, {1}), depth=4)
        assert all(v is not None for v in rep.per_role.values())

    def test_shallow_depth_misses_some_roles(self):
        # role 2 (inside, parent outside) first appears at distance 3
        params = ModelParams(k=2, a_size=1, alpha=0.7)
        rep = check_eq4(FieldQuad(1, 2, 3, 4), params, _spec(2, {1}), depth=2)
        assert rep.per_role[2] is None

    def test_zero_quad_exact(self):
        params = ModelParams(k=3, a_size=2, alpha=5.0)
        rep = check_eq4(FieldQuad(0, 0, 0, 0), params, _spec(3, {1, 2}), depth=3)
        assert rep.max_residual == 0.0

    def test_depth_validation(self):
        params = ModelParams(k=2, a_size=1, alpha=0.7)
        with pytest.raises(ValueError):
            check_eq4(FieldQuad(0, 0, 0, 0), params, _spec(2, {1}), depth=1)

    def test_report_dict(self):
        params = ModelParams(k=2, a_size=1, alpha=0.7)
        rep = check_eq4(FieldQuad(0, 0, 0, 0), params, _spec(2, {1}), depth=3)
        d = rep.as_dict()
        assert d["depth"] == 3
        assert set(d["per_role"]) == {"1", "2", "3", "4"}
