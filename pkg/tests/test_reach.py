import itertools

import numpy as np
import pytest

from pwa_nav.dynamics import AffineField, AffineModel, linearize_at, terrain_model
from pwa_nav.feasibility import TOL_STRICT, Relation, decide_feasibility
from pwa_nav.geometry import Polytope, build_grid_partition, triangulate
from pwa_nav.reach import (
    ModelDeviationBounds,
    PiecewiseInterpolationLaw,
    ReachStatus,
    UnboundedTransitError,
    decide_exit_facet,
    deviation_bounds,
    expanded_vertex_system,
    predict_exit_facet,
    robust_vertex_system,
    sign_patterns,
    synthesize_controller,
    t0_upper_bound,
    vertex_constraint_system,
)

BOX = np.array([[-5.0, 5.0], [-5.0, 5.0]])
UNIT_SQUARE = Polytope.box([0.0, 0.0], [1.0, 1.0])
EXIT_RIGHT = 1  # facet x1 = 1 of the unit square


def single_integrator():
    return AffineModel(np.zeros((2, 2)), np.eye(2), np.zeros(2), np.zeros(2))


def random_model(rng, scale=1.0):
    return AffineModel(
        rng.normal(scale=scale, size=(2, 2)),
        rng.normal(scale=scale, size=(2, 2)),
        rng.normal(scale=scale, size=2),
        np.zeros(2),
    )


SOLVER_TOL = 1e-9  # LP primal feasibility slack


def rows_satisfied(sys, u):
    for r in sys.rows:
        val = float(np.dot(r.coeffs, u))
        if r.relation is Relation.STRICT_GREATER:
            if val - r.rhs <= TOL_STRICT - SOLVER_TOL:
                return False
        elif val > r.rhs + SOLVER_TOL:
            return False
    return True


class TestDeviationBounds:
    def test_zero_distance(self):
        model = single_integrator()
        b = deviation_bounds(model, [1.0, 2.0], [1.0, 2.0], 0.03, 0.03)
        assert b.eps_A == 0.0 and b.eps_B == 0.0 and b.eps_c == 0.0

    def test_unit_distance_scales_lipschitz(self):
        model = single_integrator()
        b = deviation_bounds(model, [0.0, 0.0], [1.0, 0.0], 0.03, 0.03)
        assert b.eps_A == pytest.approx(0.03)
        assert b.eps_B == pytest.approx(0.03)

    def test_eps_c_formula(self):
        # ||A|| = 0.2, distance 1, ||x2|| = 10, L_df = 0.03:
        # 2*0.2*1 + 0.5*0.03*1 + 0.03*1*10 = 0.715
        model = AffineModel(np.diag([0.2, 0.0]), np.eye(2), np.zeros(2), np.zeros(2))
        b = deviation_bounds(model, [9.0, 0.0], [10.0, 0.0], 0.03, 0.03)
        assert b.eps_c == pytest.approx(0.715)

    def test_bounds_hold_on_terrain_linearizations(self):
        env = terrain_model()
        rng = np.random.default_rng(0)
        for _ in range(100):
            x1 = rng.uniform(-10, 10, size=2)
            x2 = rng.uniform(-10, 10, size=2)
            m1 = linearize_at(env, x1)
            m2 = linearize_at(env, x2)
            b = deviation_bounds(m1, x1, x2, env.L_df, env.L_g)
            assert np.linalg.norm(m2.A - m1.A, ord=2) <= b.eps_A + 1e-9
            assert np.linalg.norm(m2.B - m1.B, ord=2) <= b.eps_B + 1e-9
            assert np.linalg.norm(m2.c - m1.c) <= b.eps_c + 1e-9

    def test_negative_bounds_rejected(self):
        with pytest.raises(ValueError):
            ModelDeviationBounds(-0.1, 0.0, 0.0)


class TestVertexConstraintSystem:
    def test_exit_vertex_rows(self):
        # Vertex (1,1) lies on the exit facet x1=1 and the top facet:
        # rows {u1 > 0, u2 <= 0}.
        sys = vertex_constraint_system(UNIT_SQUARE, EXIT_RIGHT, 3, single_integrator(), BOX)
        assert rows_satisfied(sys, np.array([1.0, 0.0]))
        assert not rows_satisfied(sys, np.array([-1.0, 0.0]))
        assert not rows_satisfied(sys, np.array([1.0, 1.0]))

    def test_non_exit_vertex_keeps_all_incident_rows(self):
        # Vertex (0,0): rows {u1 > 0, -u1 <= 0, -u2 <= 0}.
        sys = vertex_constraint_system(UNIT_SQUARE, EXIT_RIGHT, 0, single_integrator(), BOX)
        assert len(sys.rows) == 3
        assert rows_satisfied(sys, np.array([1.0, 0.0]))
        assert not rows_satisfied(sys, np.array([1.0, -1.0]))

    def test_drift_against_small_control_box(self):
        model = AffineModel(np.zeros((2, 2)), np.eye(2), [-4.5, -4.5], np.zeros(2))
        # Vertex (1,0): {u1 > 4.5, -u2 <= 4.5}; feasible at u = (5, 0).
        sys = vertex_constraint_system(UNIT_SQUARE, EXIT_RIGHT, 2, model, BOX)
        assert decide_feasibility(sys).feasible
        small = np.array([[-4.0, 4.0], [-4.0, 4.0]])
        sys_small = vertex_constraint_system(UNIT_SQUARE, EXIT_RIGHT, 2, model, small)
        assert not decide_feasibility(sys_small).feasible


class TestDecideExitFacet:
    def test_single_integrator_all_facets_exist(self):
        model = single_integrator()
        for facet in range(4):
            assert decide_exit_facet(UNIT_SQUARE, facet, model, BOX).status \
                is ReachStatus.EXISTS

    def test_no_motion_is_absent(self):
        model = AffineModel(np.zeros((2, 2)), np.zeros((2, 2)), np.zeros(2), np.zeros(2))
        for facet in range(4):
            assert decide_exit_facet(UNIT_SQUARE, facet, model, BOX).status \
                is ReachStatus.ABSENT

    def test_witnesses_satisfy_vertex_systems(self):
        rng = np.random.default_rng(1)
        checked = 0
        while checked < 30:
            model = random_model(rng)
            for facet in range(4):
                dec = decide_exit_facet(UNIT_SQUARE, facet, model, BOX)
                if dec.status is ReachStatus.EXISTS:
                    for j, u in enumerate(dec.witnesses):
                        sys = vertex_constraint_system(UNIT_SQUARE, facet, j, model, BOX)
                        assert rows_satisfied(sys, u)
                        assert np.all(u >= BOX[:, 0]) and np.all(u <= BOX[:, 1])
                    checked += 1

    def test_matches_input_sampling_oracle_on_terrain_cells(self):
        env = terrain_model()
        part = build_grid_partition([[-10, 10], [-10, 10]], (20, 20))
        rng = np.random.default_rng(2)
        grid = np.arange(-5.0, 5.0 + 1e-12, 0.05)
        U = np.array(list(itertools.product(grid, grid)))
        for cid in rng.choice(part.n_cells, size=6, replace=False):
            model = linearize_at(env, part.center(cid))
            cell = part.cell(int(cid))
            for _, facet in part.neighbors(int(cid)):
                dec = decide_exit_facet(cell, facet, model, BOX)
                sampled_ok = True
                for j in range(cell.n_vertices):
                    sys = vertex_constraint_system(cell, facet, j, model, BOX)
                    vals = {r: U @ np.asarray(r.coeffs) for r in sys.rows}
                    ok = np.ones(len(U), dtype=bool)
                    for r, v in vals.items():
                        if r.relation is Relation.STRICT_GREATER:
                            ok &= v > r.rhs + TOL_STRICT
                        else:
                            ok &= v <= r.rhs
                    if not ok.any():
                        sampled_ok = False
                        break
                assert (dec.status is ReachStatus.EXISTS) == sampled_ok


class TestPerturbedSystems:
    def test_pattern_count(self):
        assert len(sign_patterns(2)) == 4
        assert len(sign_patterns(3)) == 8

    def test_zero_bounds_reduce_to_nominal_plus_signs(self):
        zero = ModelDeviationBounds(0.0, 0.0, 0.0)
        model = single_integrator()
        nominal = vertex_constraint_system(UNIT_SQUARE, EXIT_RIGHT, 3, model, BOX)
        for pat in sign_patterns(2):
            robust = robust_vertex_system(
                UNIT_SQUARE, EXIT_RIGHT, 3, model, zero, pat, BOX
            )
            # The leading rows coincide with the nominal ones.
            for r_nom, r_rob in zip(nominal.rows, robust.rows):
                assert np.allclose(r_nom.coeffs, r_rob.coeffs)
                assert r_nom.rhs == pytest.approx(r_rob.rhs)
                assert r_nom.relation == r_rob.relation
            assert len(robust.rows) == len(nominal.rows) + 2  # sign rows

    def test_robust_contained_in_nominal_contained_in_expanded(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            model = random_model(rng)
            bounds = ModelDeviationBounds(*rng.uniform(0, 0.5, size=3))
            j = rng.integers(0, 4)
            facet = rng.integers(0, 4)
            pat = sign_patterns(2)[rng.integers(0, 4)]
            nominal = vertex_constraint_system(UNIT_SQUARE, facet, j, model, BOX)
            robust = robust_vertex_system(UNIT_SQUARE, facet, j, model, bounds, pat, BOX)
            expanded = expanded_vertex_system(UNIT_SQUARE, facet, j, model, bounds, pat, BOX)
            for u in rng.uniform(-5, 5, size=(200, 2)):
                if rows_satisfied(robust, u):
                    assert rows_satisfied(nominal, u)
                nominal_and_signed = rows_satisfied(nominal, u) and all(
                    (u[k] > TOL_STRICT if pat[k] > 0 else u[k] <= 0.0)
                    for k in range(2)
                )
                if nominal_and_signed:
                    assert rows_satisfied(expanded, u)

    def test_expansion_recovers_borderline_case(self):
        # u1 > 4.5 is infeasible over [-4,4]^2; loosening by eps_c = 1 admits it.
        model = AffineModel(np.zeros((2, 2)), np.eye(2), [-4.5, 0.0], np.zeros(2))
        small = np.array([[-4.0, 4.0], [-4.0, 4.0]])
        nominal = vertex_constraint_system(UNIT_SQUARE, EXIT_RIGHT, 3, model, small)
        assert not decide_feasibility(nominal).feasible
        bounds = ModelDeviationBounds(0.0, 0.0, 1.0)
        feasible_patterns = [
            decide_feasibility(
                expanded_vertex_system(UNIT_SQUARE, EXIT_RIGHT, 3, model, bounds, pat, small)
            ).feasible
            for pat in sign_patterns(2)
        ]
        assert any(feasible_patterns)


class TestPredictExitFacet:
    def test_zero_bound_collapse(self):
        rng = np.random.default_rng(4)
        zero = ModelDeviationBounds(0.0, 0.0, 0.0)
        for _ in range(50):
            model = random_model(rng)
            for facet in range(4):
                pred = predict_exit_facet(UNIT_SQUARE, facet, model, zero, BOX)
                dec = decide_exit_facet(UNIT_SQUARE, facet, model, BOX)
                assert pred.status is not ReachStatus.UNCERTAIN
                assert pred.status is dec.status

    def test_huge_bounds_uncertain(self):
        huge = ModelDeviationBounds(100.0, 100.0, 100.0)
        model = single_integrator()
        for facet in range(4):
            assert predict_exit_facet(UNIT_SQUARE, facet, model, huge, BOX).status \
                is ReachStatus.UNCERTAIN

    def test_soundness_under_bounded_perturbation(self):
        rng = np.random.default_rng(5)
        trials = 0
        while trials < 100:
            model = random_model(rng)
            eps = rng.uniform(0.01, 0.5, size=3)
            bounds = ModelDeviationBounds(*eps)
            dA = rng.normal(size=(2, 2))
            dA *= rng.uniform(0, eps[0]) / max(np.linalg.norm(dA, ord=2), 1e-12)
            dB = rng.normal(size=(2, 2))
            dB *= rng.uniform(0, eps[1]) / max(np.linalg.norm(dB, ord=2), 1e-12)
            dc = rng.normal(size=2)
            dc *= rng.uniform(0, eps[2]) / max(np.linalg.norm(dc), 1e-12)
            perturbed = AffineModel(model.A + dA, model.B + dB, model.c + dc, model.center)
            facet = rng.integers(0, 4)
            pred = predict_exit_facet(UNIT_SQUARE, facet, model, bounds, BOX)
            if pred.status is ReachStatus.UNCERTAIN:
                continue
            true = decide_exit_facet(UNIT_SQUARE, facet, perturbed, BOX)
            assert pred.status is true.status
            trials += 1

    def test_monotonicity_in_bounds(self):
        rng = np.random.default_rng(6)
        for _ in range(50):
            model = random_model(rng)
            small = rng.uniform(0, 0.2, size=3)
            large = small + rng.uniform(0, 0.3, size=3)
            facet = rng.integers(0, 4)
            p_small = predict_exit_facet(
                UNIT_SQUARE, facet, model, ModelDeviationBounds(*small), BOX
            ).status
            p_large = predict_exit_facet(
                UNIT_SQUARE, facet, model, ModelDeviationBounds(*large), BOX
            ).status
            if p_large is ReachStatus.EXISTS:
                assert p_small is ReachStatus.EXISTS
            if p_large is ReachStatus.ABSENT:
                assert p_small is ReachStatus.ABSENT


class TestControllerSynthesis:
    def test_constant_witnesses_give_constant_law(self):
        u_star = np.array([0.7, -0.3])
        witnesses = [u_star] * 4
        law = synthesize_controller(UNIT_SQUARE, witnesses, (0.4, 0.6))
        assert np.allclose(law.F, 0.0, atol=1e-12)
        assert np.allclose(law.g, u_star)

    def test_identity_interpolation(self):
        # Witnesses equal to vertex coordinates interpolate u = x.
        witnesses = [v.copy() for v in UNIT_SQUARE.vertices]
        law = synthesize_controller(UNIT_SQUARE, witnesses, (0.3, 0.3))
        assert np.allclose(law.F, np.eye(2), atol=1e-12)
        assert np.allclose(law.g, 0.0, atol=1e-12)

    def test_vertex_reproduction(self):
        rng = np.random.default_rng(7)
        cell = Polytope.box([2.0, -1.0], [5.0, 0.5])
        for _ in range(20):
            witnesses = [rng.normal(size=2) for _ in range(4)]
            x0 = rng.uniform((2, -1), (5, 0.5))
            law = synthesize_controller(cell, witnesses, x0)
            for local_idx, j in enumerate(law.simplex.vertex_indices):
                assert np.allclose(
                    law.input(cell.vertices[j]), witnesses[j], atol=1e-9
                )

    def test_piecewise_law_continuous_across_diagonal(self):
        rng = np.random.default_rng(8)
        witnesses = [rng.normal(size=2) for _ in range(4)]
        law = PiecewiseInterpolationLaw(UNIT_SQUARE, witnesses)
        for t in np.linspace(0.05, 0.95, 7):
            x = np.array([t, t])  # on the shared diagonal
            above = law.input(x + np.array([-1e-9, 1e-9]))
            below = law.input(x + np.array([1e-9, -1e-9]))
            assert np.allclose(above, below, atol=1e-6)

    def test_piecewise_law_matches_witnesses_at_all_vertices(self):
        rng = np.random.default_rng(9)
        witnesses = [rng.normal(size=2) for _ in range(4)]
        law = PiecewiseInterpolationLaw(UNIT_SQUARE, witnesses)
        for j, v in enumerate(UNIT_SQUARE.vertices):
            assert np.allclose(law.input(v), witnesses[j], atol=1e-9)


class TestT0Bound:
    def test_unit_speed_from_left_facet(self):
        model = single_integrator()
        witnesses = [np.array([1.0, 0.0])] * 4
        bound = t0_upper_bound(UNIT_SQUARE, EXIT_RIGHT, model, witnesses,
                               x0=np.array([0.0, 0.5]))
        assert bound == pytest.approx(1.0)

    def test_unit_speed_from_midpoint(self):
        model = single_integrator()
        witnesses = [np.array([1.0, 0.0])] * 4
        bound = t0_upper_bound(UNIT_SQUARE, EXIT_RIGHT, model, witnesses,
                               x0=np.array([0.5, 0.5]))
        assert bound == pytest.approx(0.5)

    def test_worst_case_alpha_without_entry_state(self):
        model = single_integrator()
        witnesses = [np.array([2.0, 0.0])] * 4
        bound = t0_upper_bound(UNIT_SQUARE, EXIT_RIGHT, model, witnesses)
        assert bound == pytest.approx(0.5)

    def test_nonpositive_flow_rejected(self):
        model = single_integrator()
        witnesses = [np.array([0.0, 0.0])] * 4
        with pytest.raises(UnboundedTransitError):
            t0_upper_bound(UNIT_SQUARE, EXIT_RIGHT, model, witnesses)
