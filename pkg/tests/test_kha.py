import numpy as np
import pytest

from conftest import FakeRng
from elitopt.algorithms.kha import (
    Kha,
    KhaParams,
    advance_position,
    crossover,
    diffusion,
    fitness_ratio,
    food_point,
    foraging_attraction,
    foraging_motion,
    induced_motion,
    local_attraction,
    mutate_toward_best,
    operator_probability,
    sensing_distance,
    target_attraction,
    time_step,
)
from elitopt.core import (
    ConfigError,
    PenaltyParams,
    Problem,
    RunConfig,
    RunContext,
    SearchSpace,
    run,
)

EPS = 1e-10


def toy_problem(dim=2, width=4.0):
    space = SearchSpace(lower=np.full(dim, -width), upper=np.full(dim, width))

    def evaluate(x):
        return float(np.sum(np.asarray(x) ** 2)), np.empty(0)

    return Problem(name="toy", space=space, evaluate=evaluate)


class TestSensingAndRatio:
    def test_two_krill_radius(self):
        positions = np.array([[0.0], [1.0]])
        # sum of distances is 1 for either krill, herd of 2
        assert sensing_distance(0, positions) == pytest.approx(0.1)
        assert sensing_distance(1, positions) == pytest.approx(0.1)

    def test_two_krill_radius_excludes_both(self):
        # the radius (mean distance / 5) is always below the only pairwise
        # distance, so a herd of two has no neighbors at all
        positions = np.array([[0.0], [1.0]])
        assert sensing_distance(0, positions) < 1.0

    def test_flat_population(self):
        assert fitness_ratio(3.0, 5.0, 0.0) == 0.0
        assert fitness_ratio(3.0, 5.0, -1.0) == 0.0

    def test_sign_convention(self):
        # worse krill relative to a better one gives a positive ratio,
        # which points the motion toward the better one
        assert fitness_ratio(10.0, 0.0, 10.0) == pytest.approx(1.0)
        assert fitness_ratio(0.0, 10.0, 10.0) == pytest.approx(-1.0)


class TestLocalAttraction:
    def test_three_krill_single_neighbor(self):
        # krill 1 sits inside krill 0's radius (1.01 / 15), krill 2 outside;
        # only the near, better neighbor contributes: 0.1 * unit vector
        positions = np.array([[0.0], [0.01], [1.0]])
        fitness = np.array([1.0, 0.0, 10.0])
        alpha = local_attraction(0, positions, fitness, 10.0, EPS)
        assert alpha[0] == pytest.approx(0.1, abs=1e-6)

    def test_no_neighbors(self):
        positions = np.array([[0.0], [5.0]])
        alpha = local_attraction(0, positions, fitness=np.array([1.0, 2.0]),
                                 spread=1.0, eps=EPS)
        assert np.all(alpha == 0.0)

    def test_flat_fitness_gives_zero(self):
        positions = np.array([[0.0], [0.001], [0.002]])
        fitness = np.array([4.0, 4.0, 4.0])
        alpha = local_attraction(1, positions, fitness, 0.0, EPS)
        assert np.all(alpha == 0.0)


class TestTargetAttraction:
    def test_best_krill_zero_but_draw_consumed(self):
        positions = np.array([[1.0, 1.0], [3.0, 0.0]])
        fitness = np.array([0.0, 5.0])
        fake = FakeRng(randoms=[0.5])
        pull = target_attraction(0, positions, fitness, positions[0], 0.0,
                                 5.0, 0.5, EPS, fake)
        assert np.allclose(pull, 0.0)
        assert fake.exhausted

    def test_late_run_amplifier(self):
        # khat = 1 and unit direction, so the output is the coefficient itself
        positions = np.array([[0.0, 0.0]])
        fitness = np.array([10.0])
        best = np.array([1.0, 0.0])
        pull = target_attraction(0, positions, fitness, best, 0.0, 10.0,
                                 frac=1.0, eps=EPS, rng=FakeRng(randoms=[1.0]))
        assert pull[0] == pytest.approx(4.0, abs=1e-6)
        assert pull[1] == pytest.approx(0.0)

    def test_early_run_amplifier(self):
        positions = np.array([[0.0, 0.0]])
        fitness = np.array([10.0])
        best = np.array([1.0, 0.0])
        pull = target_attraction(0, positions, fitness, best, 0.0, 10.0,
                                 frac=0.0, eps=EPS, rng=FakeRng(randoms=[0.5]))
        assert pull[0] == pytest.approx(1.0, abs=1e-6)


class TestFoodPoint:
    def test_equal_fitness_is_centroid(self):
        positions = np.array([[0.0, 0.0], [1.0, 2.0]])
        x_food, k_food = food_point(positions, np.array([2.0, 2.0]))
        assert np.allclose(x_food, [0.5, 1.0])
        assert k_food == pytest.approx(2.0)

    def test_better_krill_pulls_harder(self):
        # weights 1/1 and 1/2: food lands at 1/3 toward the worse one
        positions = np.array([[0.0], [1.0]])
        x_food, k_food = food_point(positions, np.array([1.0, 2.0]))
        assert x_food[0] == pytest.approx(1.0 / 3.0)
        assert k_food == pytest.approx(4.0 / 3.0)

    def test_single_krill(self):
        x_food, k_food = food_point(np.array([[3.0]]), np.array([5.0]))
        assert x_food[0] == pytest.approx(3.0)
        assert k_food == pytest.approx(5.0)

    def test_non_positive_fitness_shifted(self):
        positions = np.array([[0.0], [1.0]])
        x_food, k_food = food_point(positions, np.array([0.0, 1.0]))
        # the zero-fitness krill dominates the shifted weights
        assert x_food[0] == pytest.approx(0.0, abs=1e-6)
        assert np.isfinite(k_food)

    def test_negative_fitness_shifted(self):
        positions = np.array([[-2.0], [2.0]])
        x_food, k_food = food_point(positions, np.array([-4.0, 4.0]))
        assert x_food[0] == pytest.approx(-2.0, abs=1e-6)
        assert np.isfinite(k_food)


class TestForaging:
    def test_zero_differences(self):
        positions = np.array([[1.0, 2.0]])
        fitness = np.array([3.0])
        fake = FakeRng(randoms=[0.7])
        beta = foraging_attraction(0, positions, fitness, positions[0], 3.0,
                                   positions[0], 3.0, 2.0, 0.5, EPS, fake)
        assert np.allclose(beta, 0.0)
        assert fake.exhausted

    def test_food_coefficient(self):
        positions = np.array([[0.0, 0.0]])
        fitness = np.array([10.0])
        food = np.array([1.0, 0.0])
        beta = foraging_attraction(
            0, positions, fitness, food, 0.0, positions[0], 10.0,
            spread=10.0, frac=1.0, eps=EPS, rng=FakeRng(randoms=[0.0]))
        assert beta[0] == pytest.approx(2.0, abs=1e-6)

    def test_motion_recursion(self):
        out = foraging_motion(np.array([1.0, -1.0]), np.array([0.04, 0.0]),
                              speed=0.02, inertia=0.5)
        assert np.allclose(out, [0.04, -0.02])


class TestInducedMotion:
    def test_recursion(self):
        out = induced_motion(np.array([1.0, -1.0]), np.array([0.02, 0.0]),
                             n_max=0.01, inertia=0.5)
        assert np.allclose(out, [0.02, -0.01])

    def test_zero_ceiling_keeps_inertia_only(self):
        out = induced_motion(np.array([5.0]), np.array([0.8]), 0.0, 0.25)
        assert out[0] == pytest.approx(0.2)


class TestDiffusion:
    def test_final_iteration_is_zero(self):
        fake = FakeRng(randoms=[0.3, 0.9])
        out = diffusion(2, frac=1.0, d_max=0.005, rng=fake)
        assert np.all(out == 0.0)
        assert fake.exhausted

    def test_recorded_direction(self):
        out = diffusion(1, frac=0.5, d_max=0.005, rng=FakeRng(randoms=[1.0]))
        assert out[0] == pytest.approx(0.0025)

    def test_bounded_by_ceiling(self, rng):
        out = diffusion(20, frac=0.0, d_max=0.005, rng=rng)
        assert np.all(np.abs(out) <= 0.005)


class TestTimeStep:
    def test_summed_widths(self):
        space = SearchSpace(lower=[0.0, 0.0], upper=[1.0, 2.0])
        assert time_step(0.5, space) == pytest.approx(1.5)

    def test_degenerate_space(self):
        space = SearchSpace(lower=[5.0], upper=[5.0])
        assert time_step(0.5, space) == 0.0

    def test_large_factor(self):
        space = SearchSpace(lower=[0.0], upper=[10.0])
        assert time_step(2.0, space) == pytest.approx(20.0)


class TestAdvance:
    def test_scaled_motion(self):
        out = advance_position(np.array([0.0]), 1.5, np.array([0.1]))
        assert out[0] == pytest.approx(0.15)

    def test_zero_motion(self):
        x = np.array([1.0, -2.0])
        assert np.array_equal(advance_position(x, 1.5, np.zeros(2)), x)


class TestOperatorProbability:
    def test_at_best(self):
        assert operator_probability(0.0) == 1.0
        assert operator_probability(-0.5) == 1.0

    def test_scaling(self):
        assert operator_probability(0.5) == pytest.approx(0.1)
        assert operator_probability(1.0) == pytest.approx(0.05)

    def test_capped(self):
        assert operator_probability(0.01) == 1.0


class TestCrossoverMutation:
    def test_crossover_all_copied(self):
        out = crossover(np.array([0.0, 0.0]), np.array([1.0, 2.0]), 1.0,
                        FakeRng(randoms=[0.5, 0.5]))
        assert np.allclose(out, [1.0, 2.0])

    def test_crossover_probability_zero(self):
        fake = FakeRng(randoms=[0.5, 0.5])
        out = crossover(np.array([3.0, 4.0]), np.array([1.0, 2.0]), 0.0, fake)
        assert np.allclose(out, [3.0, 4.0])
        assert fake.exhausted

    def test_crossover_per_variable_coins(self):
        fake = FakeRng(randoms=[0.1, 0.9])
        out = crossover(np.array([0.0, 0.0]), np.array([7.0, 7.0]), 0.5, fake)
        assert np.allclose(out, [7.0, 0.0])

    def test_mutation_zero_mu_copies_best(self):
        out = mutate_toward_best(
            np.array([5.0, 5.0]), np.array([1.0, 2.0]),
            np.array([9.0, 9.0]), np.array([-9.0, -9.0]),
            mu=0.0, prob=1.0, rng=FakeRng(randoms=[0.0, 0.0]))
        assert np.allclose(out, [1.0, 2.0])

    def test_mutation_identical_donors_copy_best(self):
        donor = np.array([4.0, -4.0])
        out = mutate_toward_best(
            np.array([5.0, 5.0]), np.array([1.0, 2.0]), donor, donor,
            mu=0.77, prob=1.0, rng=FakeRng(randoms=[0.0, 0.0]))
        assert np.allclose(out, [1.0, 2.0])

    def test_mutation_difference_scaled(self):
        out = mutate_toward_best(
            np.array([0.0]), np.array([1.0]), np.array([3.0]), np.array([1.0]),
            mu=0.5, prob=1.0, rng=FakeRng(randoms=[0.0]))
        assert out[0] == pytest.approx(2.0)


class TestKhaStep:
    def make_ctx(self, problem):
        return RunContext(problem, PenaltyParams())

    def test_population_size_preserved(self, rng):
        problem = toy_problem()
        algo = Kha()
        ctx = self.make_ctx(problem)
        population, state = algo.init_population(ctx, problem.space, 7, rng)
        out = algo.step(population, state, ctx, problem.space, 1, 10, rng)
        assert len(out) == 7

    def test_all_motion_off_positions_fixed(self, rng):
        params = KhaParams(induced_max=0.0, foraging_speed=0.0,
                           diffusion_max=0.0, crossover=False, mutation=False)
        problem = toy_problem()
        algo = Kha(params)
        ctx = self.make_ctx(problem)
        population, state = algo.init_population(ctx, problem.space, 5, rng)
        before = np.array([c.position for c in population])
        out = algo.step(population, state, ctx, problem.space, 1, 10, rng)
        after = np.array([c.position for c in out])
        assert np.array_equal(before, after)

    def test_injected_slot_restarts_fresh(self, rng):
        # freeze all motion so a slot's state is directly observable, then
        # swap in a worse candidate behind the algorithm's back: its stale
        # personal best must be dropped for the slot's own new record
        params = KhaParams(induced_max=0.0, foraging_speed=0.0,
                           diffusion_max=0.0, crossover=False, mutation=False)
        problem = toy_problem()
        algo = Kha(params)
        ctx = self.make_ctx(problem)
        population, state = algo.init_population(ctx, problem.space, 4, rng)
        population = algo.step(population, state, ctx, problem.space, 1, 10, rng)

        injected = ctx.evaluate(np.array([3.5, 3.5]))
        assert injected.fitness > state.pb_fitness[0]
        population[0] = injected
        algo.step(population, state, ctx, problem.space, 2, 10, rng)
        assert np.array_equal(state.pb_positions[0], injected.position)
        assert state.pb_fitness[0] == injected.fitness

    def test_untouched_slot_keeps_personal_best(self, rng):
        params = KhaParams(induced_max=0.0, foraging_speed=0.0,
                           diffusion_max=0.0, crossover=False, mutation=False)
        problem = toy_problem()
        algo = Kha(params)
        ctx = self.make_ctx(problem)
        population, state = algo.init_population(ctx, problem.space, 4, rng)
        pb_before = state.pb_fitness.copy()
        algo.step(population, state, ctx, problem.space, 1, 10, rng)
        assert np.array_equal(state.pb_fitness, pb_before)

    def test_declared_evaluation_cost(self):
        assert Kha().evals_per_iteration(25) == 25

    def test_run_never_regresses_and_deterministic(self):
        problem = toy_problem(dim=3)
        config = RunConfig(population_size=12, max_iterations=20, seed=42,
                           memory_enabled=False)
        r1 = run(Kha(), problem, config)
        r2 = run(Kha(), problem, config)
        bests = [h[1] for h in r1.history]
        assert all(b2 <= b1 for b1, b2 in zip(bests, bests[1:]))
        assert r1.history == r2.history

    def test_param_validation(self):
        with pytest.raises(ConfigError):
            KhaParams(induced_max=-0.1)
        with pytest.raises(ConfigError):
            KhaParams(inertia_induced=1.5)
        with pytest.raises(ConfigError):
            KhaParams(epsilon=0.0)
