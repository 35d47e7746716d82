import math

import numpy as np
import pytest

from app.core.errors import ContractViolation
from app.models.agent import (
    REFERENCE_BEST_SUCCESS,
    SOAR_DEFAULT,
    ActionSelection,
    AgentOptions,
    HyperParams,
    TraceKind,
)
from app.models.gridworld import Action, GridSpec
from app.utils.sarsa import (
    QTable,
    TraceTable,
    Transition,
    init_agent,
    run_episode,
    run_episodes,
    sarsa_lambda_update,
    select_action_egreedy,
    select_action_softmax,
    softmax_probs,
)

OPEN_3X3 = GridSpec(width=3, height=3, start=(2, 0), goal=(0, 2))


def hp(alpha=0.5, epsilon=0.1, gamma=0.9, lambda_=0.9) -> HyperParams:
    return HyperParams(alpha=alpha, epsilon=epsilon, gamma=gamma, lambda_=lambda_)


class TestActionSelection:

    def test_greedy_picks_the_best_action(self, rng):
        q = QTable(3, 3)
        q[(1, 1), Action.UP] = 1.0
        assert all(select_action_egreedy(q, (1, 1), 0.0, rng) is Action.UP for _ in range(200))

    def test_full_exploration_is_uniform(self, rng):
        q = QTable(3, 3)
        q[(0, 0), Action.RIGHT] = 5.0
        counts = np.bincount([select_action_egreedy(q, (0, 0), 1.0, rng) for _ in range(10_000)], minlength=4)
        sigma = math.sqrt(10_000 * 0.25 * 0.75)
        assert np.all(np.abs(counts - 2500) < 4 * sigma)

    def test_ties_are_broken_uniformly(self, rng):
        q = QTable(3, 3)
        counts = np.bincount([select_action_egreedy(q, (2, 2), 0.0, rng) for _ in range(10_000)], minlength=4)
        sigma = math.sqrt(10_000 * 0.25 * 0.75)
        assert np.all(np.abs(counts - 2500) < 4 * sigma)

    def test_softmax_examples(self):
        q = QTable(1, 2)
        np.testing.assert_allclose(softmax_probs(q, (0, 0), 1.0), [0.25] * 4, atol=1e-12)
        q[(0, 1), Action.UP] = 1.0
        probs = softmax_probs(q, (0, 1), 1.0)
        assert probs[Action.UP] == pytest.approx(math.e / (math.e + 3), abs=1e-12)
        assert probs.sum() == pytest.approx(1.0, abs=1e-12)

    def test_softmax_is_shift_invariant_and_flattens_with_tau(self):
        q = QTable(1, 1)
        q.values[0, 0] = [0.3, -1.2, 2.0, 0.7]
        shifted = q.copy()
        shifted.values += 100.0
        np.testing.assert_allclose(softmax_probs(q, (0, 0), 0.5), softmax_probs(shifted, (0, 0), 0.5), atol=1e-12)
        peaks = [softmax_probs(q, (0, 0), tau).max() for tau in (0.1, 1.0, 10.0, 1000.0)]
        assert peaks == sorted(peaks, reverse=True)
        np.testing.assert_allclose(softmax_probs(q, (0, 0), 1e6), [0.25] * 4, atol=1e-5)

    def test_softmax_rejects_non_positive_tau(self, rng):
        with pytest.raises(ContractViolation):
            select_action_softmax(QTable(1, 1), (0, 0), 0.0, rng)


class TestUpdate:

    def test_one_step_reduction(self):
        q, traces = QTable(2, 2), TraceTable()
        sarsa_lambda_update(q, traces, Transition((0, 0), 1, 1.0, (1, 0), 2), hp(alpha=1.0, gamma=0.0, lambda_=0.0))
        assert q[(0, 0), 1] == 1.0
        assert len(traces) == 0

    def test_zero_step_size_leaves_q_unchanged(self):
        q, traces = QTable(2, 2), TraceTable()
        q.values[:] = 0.3
        before = q.values.copy()
        sarsa_lambda_update(q, traces, Transition((0, 0), 0, 1.0, (0, 1), 3), hp(alpha=0.0))
        np.testing.assert_array_equal(q.values, before)

    def test_terminal_reward_credits_the_whole_chain(self):
        q, traces = QTable(1, 3), TraceTable()
        params = hp(alpha=0.4, gamma=1.0, lambda_=1.0)
        sarsa_lambda_update(q, traces, Transition((0, 0), Action.RIGHT, 0.0, (0, 1), Action.RIGHT), params)
        sarsa_lambda_update(q, traces, Transition((0, 1), Action.RIGHT, 1.0, (0, 2), None), params)
        assert q[(0, 0), Action.RIGHT] == pytest.approx(0.4)
        assert q[(0, 1), Action.RIGHT] == pytest.approx(0.4)

    def test_replacing_traces_cap_at_one(self):
        q, traces = QTable(1, 2), TraceTable()
        params = hp(alpha=0.0, gamma=1.0, lambda_=1.0)
        for _ in range(3):
            sarsa_lambda_update(q, traces, Transition((0, 0), 0, 0.0, (0, 0), 0), params, TraceKind.REPLACING)
        assert traces.get_trace((0, 0), 0) == 1.0
        accumulating = TraceTable()
        for _ in range(3):
            sarsa_lambda_update(q, accumulating, Transition((0, 0), 0, 0.0, (0, 0), 0), params)
        assert accumulating.get_trace((0, 0), 0) == 3.0

    def test_trace_variants_coincide_without_lambda(self, default_env):
        params = hp(lambda_=0.0)
        runs = [
            run_episodes(default_env, params, 5, 100, np.random.default_rng(3), AgentOptions(traces=kind))
            for kind in TraceKind
        ]
        assert runs[0] == runs[1]

    def test_zero_lambda_is_one_step_sarsa(self, default_env):
        params = hp(alpha=0.4, epsilon=0.3, gamma=0.8, lambda_=0.0)
        q, traces = init_agent(default_env.spec)
        reference = np.zeros_like(q.values)
        agent_rng, reference_rng = np.random.default_rng(21), np.random.default_rng(21)
        for episode in range(6):
            run_episode(default_env, q, traces, params, episode, 150, agent_rng)

            table = QTable(default_env.spec.height, default_env.spec.width)
            table.values = reference
            state = default_env.reset(episode)
            action = select_action_egreedy(table, state.position, params.epsilon, reference_rng)
            while state.step_count < 150:
                next_state, reward, terminal = default_env.step(state, action)
                (r, c), a = state.position, int(action)
                if terminal:
                    target = reward
                else:
                    next_action = select_action_egreedy(table, next_state.position, params.epsilon, reference_rng)
                    (nr, nc) = next_state.position
                    target = reward + params.gamma * reference[nr, nc, int(next_action)]
                reference[r, c, a] += params.alpha * (target - reference[r, c, a])
                state = next_state
                if terminal:
                    break
                action = next_action

            np.testing.assert_array_equal(q.values, reference)


class TestEpisodes:

    def test_cutoff_marks_failure(self, default_env, rng):
        q, traces = init_agent(default_env.spec)
        result, _, _ = run_episode(default_env, q, traces, SOAR_DEFAULT, 0, 3, rng)
        assert not result.success
        assert result.steps == 3

    def test_converged_greedy_policy_walks_the_shortest_path(self):
        rng = np.random.default_rng(11)
        train = hp(alpha=0.5, epsilon=0.2, gamma=0.9, lambda_=0.8)
        q, traces = init_agent(OPEN_3X3)
        for episode in range(500):
            run_episode(OPEN_3X3, q, traces, train, episode, 100, rng)
        greedy = hp(alpha=0.0, epsilon=0.0, gamma=0.9, lambda_=0.8)
        for episode in range(5):
            result, _, _ = run_episode(OPEN_3X3, q, traces, greedy, episode, 100, rng)
            assert result.success
            assert result.steps == 4

    def test_same_seed_same_result(self, default_env):
        first = run_episodes(default_env, SOAR_DEFAULT, 4, 120, np.random.default_rng(99))
        second = run_episodes(default_env, SOAR_DEFAULT, 4, 120, np.random.default_rng(99))
        assert first == second
        assert [r.episode_index for r in first] == [0, 1, 2, 3]

    def test_softmax_agent_runs(self, default_env, rng):
        options = AgentOptions(action_selection=ActionSelection.SOFTMAX, softmax_tau=0.5)
        results = run_episodes(default_env, SOAR_DEFAULT, 3, 80, rng, options)
        assert all(1 <= r.steps <= 80 for r in results)

    def test_init_agent_is_fresh_and_ignores_theta(self, default_spec):
        q1, e1 = init_agent(default_spec, SOAR_DEFAULT)
        q2, e2 = init_agent(default_spec, hp(alpha=0.9, epsilon=0.0))
        assert not q1.values.any()
        np.testing.assert_array_equal(q1.values, q2.values)
        assert e1 == e2 == {}

    def test_invalid_cutoff(self, default_env, rng):
        q, traces = init_agent(default_env.spec)
        with pytest.raises(ContractViolation):
            run_episode(default_env, q, traces, SOAR_DEFAULT, 0, 0, rng)

    @pytest.mark.parametrize("params", [
        SOAR_DEFAULT,
        REFERENCE_BEST_SUCCESS,
        HyperParams(alpha=0.5, epsilon=0.2, gamma=0.5, lambda_=0.9),
    ])
    @pytest.mark.parametrize("kind", list(TraceKind))
    def test_q_values_stay_within_the_discounted_bound(self, default_env, params, kind):
        q, traces = init_agent(default_env.spec)
        rng = np.random.default_rng(5)
        bound = 1.0 / (1.0 - params.gamma)
        for episode in range(20):
            run_episode(default_env, q, traces, params, episode, 200, rng, AgentOptions(traces=kind))
            assert np.abs(q.values).max() <= bound + 1e-12

    def test_reported_theta_beats_a_uniform_random_policy(self, default_env):
        uniform = hp(alpha=0.0, epsilon=1.0)
        learned, random_walk = [], []
        for seed in range(6):
            learned += [r.success for r in run_episodes(default_env, REFERENCE_BEST_SUCCESS, 50, 400,
                                                        np.random.default_rng(seed))]
            random_walk += [r.success for r in run_episodes(default_env, uniform, 50, 400,
                                                            np.random.default_rng(100 + seed))]
        assert np.mean(learned) > np.mean(random_walk)
