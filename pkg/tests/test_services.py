"""
Unit Tests for TrustRoute Services
Tests metric spaces, the instance model, tour solvers, network costs,
cover errors, prediction generators and instance files.
"""

import itertools
import math
import os
import sys
import tempfile
import unittest
from collections import Counter

import numpy as np

# Add parent directory to path
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from services import instance_io
from services.cover_error import (
    CostOracle,
    cover_report,
    gamma_k,
    gamma_k_exhaustive,
    halfline_reduced_lambda,
    lambda_halfline,
    lambda_k,
    prior_errors,
    steiner_tree_oracle,
)
from services.instance_model import (
    Instance,
    PredictionSet,
    ProblemKind,
    Request,
    RideRequest,
    match_predictions,
    split_errors,
    split_requests,
)
from services.metric_space import (
    GraphInput,
    from_matrix,
    grid_graph,
    half_line_space,
    line_space,
    metric_closure,
)
from services.network_costs import gamma_fl, gamma_sf, gamma_st
from services.prediction_gen import (
    NoiseSpec,
    derive_seed,
    partial,
    perturb,
    scalar_prediction,
    synth_instances,
    synth_rides,
)
from services.tour_oracle import (
    TourProblem,
    TourSolver,
    approx_tour,
    evaluate_order,
    exact_tour,
    gamma_darp,
    gamma_tsp,
    halfline_makespan,
    optimal_makespan,
)


def grid_space(rows=3, cols=3):
    return metric_closure(grid_graph(rows, cols))


class TestMetricSpace(unittest.TestCase):
    """Test metric construction and validation"""

    def test_asymmetric_matrix_rejected(self):
        with self.assertRaises(ValueError) as ctx:
            from_matrix([[0, 1], [2, 0]], 0)
        self.assertIn("asymmetric", str(ctx.exception))

    def test_triangle_violation_names_triple(self):
        with self.assertRaises(ValueError) as ctx:
            from_matrix([[0, 1, 5], [1, 0, 1], [5, 1, 0]], 0)
        self.assertIn("Triangle", str(ctx.exception))

    def test_origin_out_of_range(self):
        with self.assertRaises(ValueError):
            from_matrix([[0, 1], [1, 0]], 3)

    def test_matrix_is_read_only(self):
        space = from_matrix([[0, 1], [1, 0]], 0)
        with self.assertRaises(ValueError):
            space.dist[0, 1] = 3.0

    def test_metric_closure_shortest_paths(self):
        space = metric_closure(GraphInput(edges=((0, 1, 1.0), (1, 2, 2.0), (0, 2, 10.0)), origin=0))
        self.assertEqual(space.d(0, 2), 3.0)
        self.assertEqual(space.d(2, 0), 3.0)

    def test_metric_closure_keeps_cheapest_duplicate_edge(self):
        space = metric_closure(GraphInput(edges=((0, 1, 4.0), (1, 0, 2.0)), origin=0))
        self.assertEqual(space.d(0, 1), 2.0)

    def test_disconnected_graph_rejected(self):
        with self.assertRaises(ValueError) as ctx:
            metric_closure(GraphInput(edges=((0, 1, 1.0), (2, 3, 1.0)), origin=0))
        self.assertIn("disconnected", str(ctx.exception))

    def test_non_positive_weight_rejected(self):
        with self.assertRaises(ValueError):
            metric_closure(GraphInput(edges=((0, 1, 0.0),), origin=0))

    def test_line_space_appends_origin(self):
        space = line_space([1.0, -2.0])
        self.assertEqual(space.n, 3)
        self.assertEqual(space.origin, 2)
        self.assertEqual(space.d(0, 1), 3.0)
        self.assertEqual(space.coord(space.origin), 0.0)

    def test_half_line_rejects_negative(self):
        with self.assertRaises(ValueError):
            half_line_space([1.0, -0.5])

    def test_grid_graph(self):
        graph = grid_graph(2, 3)
        self.assertEqual(len(graph.edges), 7)
        space = metric_closure(graph)
        self.assertEqual(space.d(0, 5), 3.0)
        with self.assertRaises(ValueError):
            grid_graph(0, 3)

    def test_metric_closure_is_idempotent(self):
        space = grid_space(3, 4)
        pairs = tuple((i, j, float(space.d(i, j))) for i in range(space.n) for j in range(i + 1, space.n))
        again = metric_closure(GraphInput(edges=pairs, origin=space.origin, n=space.n))
        self.assertTrue(np.array_equal(again.dist, space.dist))
        self.assertEqual(again.origin, space.origin)


class TestInstanceModel(unittest.TestCase):
    """Test requests, instances and prediction splits"""

    def setUp(self):
        self.space = grid_space()

    def test_negative_release_rejected(self):
        with self.assertRaises(ValueError):
            Request(1, -0.1)
        with self.assertRaises(ValueError):
            RideRequest(1, 2, -1.0)

    def test_instance_rejects_unknown_point(self):
        with self.assertRaises(ValueError):
            Instance(self.space, ProblemKind.TSP, (Request(42, 0.0),))

    def test_instance_rejects_wrong_kind(self):
        with self.assertRaises(ValueError):
            Instance(self.space, ProblemKind.DARP, (Request(1, 0.0),))

    def test_prediction_needs_exactly_one_form(self):
        with self.assertRaises(ValueError):
            PredictionSet()
        with self.assertRaises(ValueError):
            PredictionSet(requests=(), makespan_prediction=1.0)

    def test_scalar_prediction_only_on_half_line(self):
        inst = Instance(self.space, ProblemKind.TSP, (Request(1, 0.0),))
        with self.assertRaises(ValueError):
            PredictionSet(makespan_prediction=2.0).validate_for(inst)
        with self.assertRaises(ValueError):
            PredictionSet(makespan_prediction=2.0).as_list()

    def test_split_is_a_multiset_split(self):
        a, b, c = Request(1, 0.0), Request(2, 1.0), Request(3, 0.0)
        unexpected, absent, correct = split_requests([a, a, b], [a, c])
        self.assertEqual(unexpected, [a, b])
        self.assertEqual(absent, [c])
        self.assertEqual(correct, [a])

    def test_release_must_match_bit_for_bit(self):
        unexpected, absent, correct = split_requests([Request(1, 0.1 + 0.2)], [Request(1, 0.3)])
        self.assertEqual(len(correct), 0)
        self.assertEqual(len(unexpected), 1)
        self.assertEqual(len(absent), 1)

    def test_match_predictions_lowest_index_first(self):
        a, x = Request(1, 0.0), Request(4, 0.0)
        self.assertEqual(match_predictions([a, a, x], [a, Request(5, 0.0), a]), [0, 2, None])

    def test_split_errors_swap_roles_symmetrically(self):
        space = grid_space()
        for seed in range(6):
            inst = synth_instances(space, 1, 5, 4.0, seed=seed)[0]
            noisy = perturb(inst, NoiseSpec(sigma_location=1.0, sigma_release=1.0, seed=seed))
            pred = PredictionSet(requests=partial(inst, 0.6, seed).requests + noisy.requests[:2])
            unexpected, absent, correct = split_errors(inst, pred)
            swapped = split_errors(Instance(space, ProblemKind.TSP, pred.requests),
                                   PredictionSet(requests=inst.requests))
            self.assertEqual(Counter(swapped[0]), Counter(absent))
            self.assertEqual(Counter(swapped[1]), Counter(unexpected))
            self.assertEqual(Counter(swapped[2]), Counter(correct))


class TestTourOracle(unittest.TestCase):
    """Test exact and approximate tour computation"""

    def test_empty_tour_goes_home(self):
        space = line_space([2.0])
        tour = exact_tour(TourProblem(space, 0, 1.0, (), space.origin))
        self.assertEqual(tour.order, ())
        self.assertEqual(tour.completion, 3.0)

    def test_line_two_sides(self):
        space = line_space([1.0, -1.0])
        reqs = (Request(0, 0.0), Request(1, 0.0))
        tour = exact_tour(TourProblem(space, space.origin, 0.0, reqs, space.origin))
        self.assertEqual(tour.completion, 4.0)
        self.assertEqual(tour.order, (0, 1))

    def test_waits_for_release(self):
        space = half_line_space([2.0])
        reqs = (Request(0, 5.0),)
        tour = exact_tour(TourProblem(space, space.origin, 0.0, reqs, space.origin))
        self.assertEqual(tour.completion, 7.0)

    def test_exact_matches_brute_force(self):
        space = grid_space(3, 3)
        rng = np.random.default_rng(17)
        for _ in range(15):
            reqs = tuple(Request(int(rng.integers(0, 9)), float(rng.integers(0, 8))) for _ in range(5))
            problem = TourProblem(space, space.origin, 0.0, reqs, space.origin)
            brute = min(evaluate_order(problem, perm) for perm in itertools.permutations(range(5)))
            tour = exact_tour(problem)
            self.assertAlmostEqual(tour.completion, brute, places=9)
            self.assertAlmostEqual(evaluate_order(problem, tour.order), tour.completion, places=9)

    def test_exact_rides(self):
        space = line_space([1.0, 3.0])
        rides = (RideRequest(0, 1, 0.0),)
        tour = exact_tour(TourProblem(space, space.origin, 0.0, rides, space.origin))
        self.assertEqual(tour.completion, 6.0)

    def test_exact_cap(self):
        space = grid_space()
        reqs = tuple(Request(i, 0.0) for i in range(1, 4))
        with self.assertRaises(ValueError) as ctx:
            exact_tour(TourProblem(space, 0, 0.0, reqs, 0), cap=2)
        self.assertIn("approx_tour", str(ctx.exception))

    def test_approx_not_better_than_exact(self):
        space = grid_space(3, 3)
        rng = np.random.default_rng(5)
        for _ in range(10):
            reqs = tuple(Request(int(rng.integers(0, 9)), float(rng.integers(0, 6))) for _ in range(6))
            problem = TourProblem(space, space.origin, 0.0, reqs, space.origin)
            approx = approx_tour(problem)
            self.assertFalse(approx.exact)
            self.assertGreaterEqual(approx.completion, exact_tour(problem).completion - 1e-9)

    def test_approx_within_three_times_exact(self):
        space = grid_space(4, 4)
        suite = synth_instances(space, 100, 10, 8.0, seed=23)
        for inst in suite:
            problem = TourProblem(space, space.origin, 0.0, inst.requests, space.origin)
            exact = exact_tour(problem).completion
            self.assertLessEqual(approx_tour(problem).completion, 3.0 * exact + 1e-9)

    def test_approx_rejects_small_nu(self):
        space = grid_space()
        with self.assertRaises(ValueError):
            approx_tour(TourProblem(space, 0, 0.0, (Request(1, 0.0),), 0), nu=1.5)

    def test_solver_falls_back_over_cap(self):
        space = half_line_space([float(i) for i in range(1, 17)])
        inst = Instance(space, ProblemKind.TSP, tuple(Request(i, 0.0) for i in range(16)))
        solver = TourSolver("exact")
        self.assertEqual(solver.makespan(inst), 32.0)
        self.assertEqual(solver.fallbacks, 1)

    def test_gamma_tsp(self):
        space = half_line_space([1.0, 3.0])
        anchor = Request(0, 1.0)
        self.assertEqual(gamma_tsp(space, [anchor], anchor), 0.0)
        self.assertEqual(gamma_tsp(space, [Request(1, 2.0)], anchor), 4.0)

    def test_halfline_closed_form_matches_exact(self):
        space = half_line_space([1.0, 3.0])
        inst = Instance(space, ProblemKind.TSP, (Request(0, 5.0), Request(1, 0.0)))
        self.assertEqual(halfline_makespan(space, inst.requests), 6.0)
        self.assertEqual(optimal_makespan(inst), 6.0)


class TestNetworkCosts(unittest.TestCase):
    """Test Steiner tree, Steiner forest and facility location values"""

    def test_steiner_tree_on_square(self):
        space = grid_space(2, 2)
        self.assertEqual(gamma_st(space, [1, 2, 3], 0), 3.0)
        self.assertEqual(gamma_st(space, [0], 0), 0.0)

    def test_steiner_tree_uses_steiner_point(self):
        # star with centre 4; connecting the leaves through the centre is cheapest
        space = metric_closure(GraphInput(edges=((0, 4, 1.0), (1, 4, 1.0), (2, 4, 1.0), (3, 4, 1.0)), origin=0))
        self.assertEqual(gamma_st(space, [1, 2, 3], 0), 4.0)

    def test_steiner_forest_free_pair_shortcut(self):
        space = line_space([0.0, 10.0, 1.0, 9.0])
        self.assertEqual(gamma_sf(space, [(0, 1)], (2, 3)), 2.0)
        self.assertEqual(gamma_sf(space, [(2, 3)], (2, 3)), 0.0)

    def test_facility_location(self):
        space = half_line_space([1.0, 2.0])
        costs = [5.0, 1.0, 0.0]
        self.assertEqual(gamma_fl(space, [1], 0, costs), 6.0)


def monotone_table(rng, left, right):
    weights = {(a, b): float(rng.uniform(0.0, 10.0)) for a in left for b in right}

    def evaluate(subset, b):
        vals = [weights[(a, b)] for a in subset]
        return max(vals) + 0.5 * sum(vals)

    return CostOracle("table", evaluate, monotone=True)


class TestCoverError(unittest.TestCase):
    """Test hyperedge covers and the cover error"""

    def test_identical_elements_need_no_cover(self):
        oracle = CostOracle("unit", lambda subset, b: 1.0)
        cost, edges = gamma_k(["a", "b"], ["a", "b", "c"], 1, oracle)
        self.assertEqual(cost, 0.0)
        self.assertEqual(edges, [])

    def test_repeated_identical_elements_pair_one_for_one(self):
        oracle = CostOracle("self", lambda subset, b: 0.0 if subset == (b,) else float(len(subset)))
        cost, edges = gamma_k(["a", "a", "b"], ["a", "b"], 1, oracle)
        self.assertEqual(cost, 0.0)
        self.assertEqual(len(edges), 1)
        self.assertEqual(edges[0].left, ("a",))
        self.assertEqual(edges[0].right, "a")

    def test_empty_right_side_is_infinite(self):
        oracle = CostOracle("unit", lambda subset, b: 1.0)
        cost, _ = gamma_k(["a"], [], 1, oracle)
        self.assertTrue(math.isinf(cost))

    def test_partition_dp_matches_exhaustive(self):
        rng = np.random.default_rng(2024)
        for trial in range(200):
            left = [f"a{i}" for i in range(int(rng.integers(1, 7)))]
            right = [f"b{j}" for j in range(int(rng.integers(1, 5)))]
            oracle = monotone_table(rng, left, right)
            previous = math.inf
            for k in (1, 2, 3, math.inf):
                dp, edges = gamma_k(left, right, k, oracle)
                brute, _ = gamma_k_exhaustive(left, right, k, oracle)
                self.assertAlmostEqual(dp, brute, places=9, msg=f"trial {trial} k={k}")
                self.assertAlmostEqual(sum(e.cost for e in edges), dp, places=9)
                covered = sorted(x for e in edges for x in e.left)
                self.assertEqual(covered, sorted(left))
                self.assertLessEqual(dp, previous + 1e-9)
                previous = dp

    def test_k1_closed_form(self):
        rng = np.random.default_rng(7)
        left, right = ["a0", "a1", "a2"], ["b0", "b1"]
        oracle = monotone_table(rng, left, right)
        cost, _ = gamma_k(left, right, 1, oracle)
        expected = sum(min(oracle.evaluate((a,), b) for b in right) for a in left)
        self.assertAlmostEqual(cost, expected, places=12)

    def test_perfect_prediction_has_zero_error(self):
        space = grid_space()
        inst = Instance(space, ProblemKind.TSP, (Request(1, 0.0), Request(5, 2.0)))
        report = cover_report("tsp", inst, PredictionSet(requests=inst.requests), 1)
        self.assertEqual(report.lambda_k, 0.0)

    def test_tsp_lambda_single_shift(self):
        space = half_line_space([1.0, 3.0])
        inst = Instance(space, ProblemKind.TSP, (Request(1, 2.0),))
        pred = PredictionSet(requests=(Request(0, 1.0),))
        report = cover_report("tsp", inst, pred, 1)
        # a round trip between coordinates 1 and 3 either way
        self.assertEqual(report.gamma_k_actual, 4.0)
        self.assertEqual(report.gamma_inf_pred, 4.0)
        self.assertEqual(report.lambda_k, 8.0)

    def test_halfline_lambda_equals_reduced_cover(self):
        space = half_line_space([float(i) for i in range(1, 11)])
        rng = np.random.default_rng(99)
        for inst in synth_instances(space, 100, 4, 10.0, seed=3):
            chat = float(rng.uniform(0.0, 30.0))
            c_star = halfline_makespan(space, inst.requests)
            self.assertEqual(lambda_halfline(inst, chat), abs(chat - c_star))
            self.assertEqual(halfline_reduced_lambda(inst, chat), abs(chat - c_star))

    def test_counting_errors_overstate_a_clustered_instance(self):
        eps, n = 0.01, 8
        # origin 0, x1 = 1, x2 = 2, seven points 3..9 within eps of x2
        edges = [(0, 1, 1.0), (0, 2, 1.0)] + [(2, y, eps) for y in range(3, 10)]
        space = metric_closure(GraphInput(edges=tuple(edges), origin=0))
        actual = (Request(1, 0.0),) + tuple(Request(y, 0.0) for y in range(3, 10))
        inst = Instance(space, ProblemKind.TSP, actual)
        pred = PredictionSet(requests=(Request(1, 0.0), Request(2, 0.0)))

        prior = prior_errors(inst, pred)
        self.assertEqual(prior.eta, 7)
        self.assertGreaterEqual(prior.delta, 6)
        self.assertLessEqual(prior.d_matching, 4 * eps + 1e-12)

        report = lambda_k(inst, pred, 1, steiner_tree_oracle(space))
        self.assertLessEqual(report.lambda_k, 2 * n * eps + 1e-12)
        self.assertAlmostEqual(report.lambda_k, 8 * eps, places=12)

    def test_darp_oracle_charges_transport_on_both_sides(self):
        space = line_space([1.0, 3.0, 4.0])
        ride = RideRequest(0, 1, 0.0)
        extra_actual = RideRequest(2, 0, 0.0)
        extra_predicted = RideRequest(2, 1, 1.0)
        inst = Instance(space, ProblemKind.DARP, (ride, extra_actual))
        pred = PredictionSet(requests=(ride, extra_predicted))
        report = cover_report("darp", inst, pred, 1)
        transport = 2.0
        expected_pred = min(gamma_darp(space, [extra_predicted], anchor, transport)
                            for anchor in (ride, extra_actual))
        expected_actual = min(gamma_darp(space, [extra_actual], anchor, transport)
                              for anchor in (ride, extra_predicted))
        self.assertAlmostEqual(report.gamma_inf_pred, expected_pred, places=12)
        self.assertAlmostEqual(report.gamma_k_actual, expected_actual, places=12)
        self.assertGreaterEqual(report.gamma_inf_pred, transport)
        self.assertGreaterEqual(report.gamma_k_actual, transport)

    def test_darp_transport_is_zero_without_common_rides(self):
        space = line_space([1.0, 3.0, 4.0])
        inst = Instance(space, ProblemKind.DARP, (RideRequest(0, 1, 0.0),))
        pred = PredictionSet(requests=(RideRequest(2, 1, 0.0),))
        report = cover_report("darp", inst, pred, 1)
        self.assertAlmostEqual(report.gamma_inf_pred,
                               gamma_darp(space, [RideRequest(2, 1, 0.0)], RideRequest(0, 1, 0.0), 0.0), places=12)

    def test_facility_location_discount(self):
        space = half_line_space([1.0, 2.0])
        inst = Instance(space, ProblemKind.TSP, (Request(1, 0.0),))
        pred = PredictionSet(requests=(Request(0, 0.0),))
        report = cover_report("fl", inst, pred, 1, opening_costs=[3.0, 3.0, 3.0])
        # a facility serving one client pays no opening cost: |2 - 1| each way
        self.assertEqual(report.lambda_k, 2.0)

    def test_unknown_oracle(self):
        space = grid_space()
        inst = Instance(space, ProblemKind.TSP, ())
        with self.assertRaises(ValueError):
            cover_report("nope", inst, PredictionSet(requests=()), 1)


class TestPredictionGen(unittest.TestCase):
    """Test seeded instance and prediction generation"""

    def setUp(self):
        self.space = grid_space(4, 4)
        self.instances = synth_instances(self.space, 5, 10, 20.0, seed=1)

    def test_zero_noise_is_identity(self):
        pred = perturb(self.instances[0], NoiseSpec(seed=9))
        self.assertEqual(pred.requests, self.instances[0].requests)

    def test_location_noise_keeps_releases(self):
        inst = self.instances[1]
        pred = perturb(inst, NoiseSpec(sigma_location=2.0, seed=4))
        self.assertEqual([r.release for r in pred.requests], [r.release for r in inst.requests])
        self.assertTrue(all(self.space.contains(r.loc) for r in pred.requests))

    def test_release_noise_never_negative(self):
        pred = perturb(self.instances[2], NoiseSpec(sigma_release=50.0, seed=4))
        self.assertTrue(all(r.release >= 0 for r in pred.requests))

    def test_seeded_runs_repeat(self):
        spec = NoiseSpec(sigma_release=1.0, sigma_location=1.5, seed=123)
        self.assertEqual(perturb(self.instances[3], spec), perturb(self.instances[3], spec))
        self.assertEqual(synth_instances(self.space, 3, 4, 5.0, seed=8)[2].requests,
                         synth_instances(self.space, 3, 4, 5.0, seed=8)[2].requests)

    def test_partial_cardinality(self):
        inst = self.instances[4]
        half = partial(inst, 0.5, seed=2)
        self.assertEqual(len(half.requests), 5)
        self.assertTrue(all(r in inst.requests for r in half.requests))
        self.assertEqual(partial(inst, 1.0, seed=2).requests, inst.requests)
        self.assertEqual(partial(inst, 0.0, seed=2).requests, ())

    def test_synth_shapes(self):
        flat = synth_instances(self.space, 100, 10, 0.0, seed=6)
        self.assertEqual(len(flat), 100)
        self.assertTrue(all(len(inst) == 10 for inst in flat))
        self.assertTrue(all(r.release == 0.0 for inst in flat for r in inst.requests))

    def test_synth_rides_distinct_endpoints(self):
        for inst in synth_rides(self.space, 10, 6, 5.0, seed=3):
            self.assertEqual(inst.kind, ProblemKind.DARP)
            self.assertTrue(all(r.pickup != r.dropoff for r in inst.requests))

    def test_scalar_prediction(self):
        space = half_line_space([1.0, 2.0])
        inst = Instance(space, ProblemKind.TSP, (Request(1, 1.0),))
        self.assertEqual(scalar_prediction(inst, 0.5).makespan_prediction, 4.5)
        self.assertEqual(scalar_prediction(inst, -10.0).makespan_prediction, 0.0)

    def test_derived_seeds_differ(self):
        self.assertNotEqual(derive_seed(1, 0, 0), derive_seed(1, 0, 1))
        self.assertEqual(derive_seed(1, 2, 3), derive_seed(1, 2, 3))

    def test_invalid_noise(self):
        with self.assertRaises(ValueError):
            NoiseSpec(sigma_location=-1.0)
        with self.assertRaises(ValueError):
            NoiseSpec(fraction=1.5)


class TestInstanceIO(unittest.TestCase):
    """Test instance and prediction files"""

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()

    def tearDown(self):
        self.tmp.cleanup()

    def test_line_instance_round_trip(self):
        space = line_space([1.5, -2.0])
        inst = Instance(space, ProblemKind.TSP, (Request(0, 1.0), Request(1, 0.5)))
        path = os.path.join(self.tmp.name, "inst.json")
        instance_io.save_instance(inst, path)
        loaded = instance_io.load_instance(path)
        self.assertEqual(loaded.requests, inst.requests)
        self.assertEqual(loaded.origin, inst.origin)
        self.assertTrue(np.array_equal(loaded.space.dist, space.dist))

    def test_graph_csv_instance(self):
        with open(os.path.join(self.tmp.name, "g.csv"), "w") as handle:
            handle.write("u,v,w\n0,1,2.0\n1,2,1.0\n")
        path = os.path.join(self.tmp.name, "inst.json")
        with open(path, "w") as handle:
            handle.write('{"kind": "darp", "origin": 0, "graph_csv": "g.csv", '
                         '"requests": [{"pickup": 2, "dropoff": 1, "release": 0.0}]}')
        inst = instance_io.load_instance(path)
        self.assertEqual(inst.kind, ProblemKind.DARP)
        self.assertEqual(inst.space.d(0, 2), 3.0)

    def test_scalar_prediction_file(self):
        path = os.path.join(self.tmp.name, "pred.json")
        instance_io.save_prediction(PredictionSet(makespan_prediction=2.5), path)
        self.assertEqual(instance_io.load_prediction(path).makespan_prediction, 2.5)

    def test_missing_space_rejected(self):
        with self.assertRaises(ValueError):
            instance_io.instance_from_dict({"kind": "tsp", "requests": []})


def run_tests():
    """Run all unit tests"""
    loader = unittest.TestLoader()
    suite = unittest.TestSuite()

    suite.addTests(loader.loadTestsFromTestCase(TestMetricSpace))
    suite.addTests(loader.loadTestsFromTestCase(TestInstanceModel))
    suite.addTests(loader.loadTestsFromTestCase(TestTourOracle))
    suite.addTests(loader.loadTestsFromTestCase(TestNetworkCosts))
    suite.addTests(loader.loadTestsFromTestCase(TestCoverError))
    suite.addTests(loader.loadTestsFromTestCase(TestPredictionGen))
    suite.addTests(loader.loadTestsFromTestCase(TestInstanceIO))

    runner = unittest.TextTestRunner(verbosity=2)
    result = runner.run(suite)
    return result.wasSuccessful()


if __name__ == '__main__':
    success = run_tests()
    sys.exit(0 if success else 1)
