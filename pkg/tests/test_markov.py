import numpy as np
import pytest

from lrsm.errors import StructureError
from lrsm.markov import (
    check_frequency_matrix,
    check_transition_matrix,
    conditional_mean,
    empirical_frequency,
    ergodicity_failure,
    estimate_from_frequency,
    estimate_transition,
    frequency_to_transition,
    load_trajectory,
    mixing_time,
    pair_chain,
    save_trajectory,
    simulate_chain,
    spectral_baseline,
    stationary_distribution,
)
from lrsm.solver import SolverConfig, solve
from lrsm.matops import project_simplex
from lrsm.synth import InstanceSpec, gen_transition

from oracles import power_iteration_stationary


def random_ergodic_chain(p, seed, floor=0.02):
    rng = np.random.default_rng(seed)
    P = rng.uniform(size=(p, p)) + floor
    return P / P.sum(axis=1, keepdims=True)


class TestValidators:
    def test_transition_accepts_and_rejects(self):
        check_transition_matrix(np.array([[0.5, 0.5], [0.1, 0.9]]))
        with pytest.raises(ValueError):
            check_transition_matrix(np.array([[0.5, 0.6], [0.1, 0.9]]))
        with pytest.raises(ValueError):
            check_transition_matrix(np.array([[1.5, -0.5], [0.1, 0.9]]))

    def test_frequency_accepts_and_rejects(self):
        check_frequency_matrix(np.full((2, 2), 0.25))
        with pytest.raises(ValueError):
            check_frequency_matrix(np.full((2, 2), 0.3))
        with pytest.raises(ValueError):
            check_frequency_matrix(np.array([[1.1, -0.1], [0.0, 0.0]]))


class TestSimulate:
    def test_absorbing_identity_constant_trajectory(self):
        traj = simulate_chain(np.eye(4), 20, init=2, seed=0)
        assert np.all(traj == 2)

    def test_deterministic_two_cycle(self):
        P = np.array([[0.0, 1.0], [1.0, 0.0]])
        traj = simulate_chain(P, 9, init=0, seed=5)
        assert np.array_equal(traj, np.arange(10) % 2)

    def test_seed_determinism(self):
        P = random_ergodic_chain(4, 1)
        a = simulate_chain(P, 100, "stationary", seed=7)
        b = simulate_chain(P, 100, "stationary", seed=7)
        assert np.array_equal(a, b)

    def test_counts_match_rows_within_three_sigma(self):
        P = random_ergodic_chain(3, 2)
        traj = simulate_chain(P, 1_000_000, "stationary", seed=3)
        for i in range(3):
            rows = traj[:-1] == i
            n_i = rows.sum()
            for j in range(3):
                phat = np.mean(traj[1:][rows] == j)
                se = np.sqrt(P[i, j] * (1 - P[i, j]) / n_i)
                assert abs(phat - P[i, j]) <= 3 * se + 1e-12

    def test_stationary_init_requires_ergodic(self):
        with pytest.raises(StructureError):
            simulate_chain(np.eye(3), 5, init="stationary", seed=0)

    def test_custom_distribution_init(self):
        traj = simulate_chain(np.eye(3), 3, init=[0.0, 0.0, 1.0], seed=0)
        assert traj[0] == 2


class TestEmpiricalFrequency:
    def test_alternating_trajectory(self):
        F = empirical_frequency([0, 1, 0, 1, 0], 2)
        assert np.allclose(F, [[0.0, 0.5], [0.5, 0.0]])

    def test_constant_trajectory(self):
        F = empirical_frequency([0, 0, 0, 0], 2)
        assert np.allclose(F, [[1.0, 0.0], [0.0, 0.0]])

    def test_total_sum_one(self):
        rng = np.random.default_rng(4)
        traj = rng.integers(0, 6, size=500)
        F = empirical_frequency(traj, 6)
        assert abs(F.sum() - 1.0) < 1e-12

    def test_state_out_of_range(self):
        with pytest.raises(ValueError):
            empirical_frequency([0, 5], 3)

    def test_too_short(self):
        with pytest.raises(ValueError):
            empirical_frequency([1], 3)

    def test_permutation_equivariance(self):
        rng = np.random.default_rng(5)
        traj = rng.integers(0, 5, size=300)
        F = empirical_frequency(traj, 5)
        for seed in range(5):
            perm = np.random.default_rng(seed).permutation(5)
            F_perm = empirical_frequency(perm[traj], 5)
            assert np.allclose(F_perm[np.ix_(perm, perm)], F)


class TestStationary:
    def test_doubly_stochastic_gives_uniform(self):
        P = np.array([[0.2, 0.5, 0.3], [0.5, 0.3, 0.2], [0.3, 0.2, 0.5]])
        assert np.allclose(stationary_distribution(P), 1.0 / 3.0)

    def test_two_state_closed_form(self):
        P = np.array([[0.9, 0.1], [0.5, 0.5]])
        assert np.allclose(stationary_distribution(P), [5.0 / 6.0, 1.0 / 6.0])

    def test_matches_power_iteration_oracle(self):
        P = random_ergodic_chain(6, 6)
        pi = stationary_distribution(P)
        assert np.max(np.abs(pi - power_iteration_stationary(P))) < 1e-8

    def test_residual_small(self):
        P = random_ergodic_chain(10, 7)
        pi = stationary_distribution(P)
        assert np.sum(np.abs(pi @ P - pi)) <= 1e-10

    def test_reducible_named_failure(self):
        P = np.eye(3)
        with pytest.raises(StructureError, match="irreducible"):
            stationary_distribution(P)

    def test_periodic_named_failure(self):
        P = np.array([[0.0, 1.0], [1.0, 0.0]])
        with pytest.raises(StructureError, match="period"):
            stationary_distribution(P)


class TestMixingTime:
    def test_rank_one_mixes_immediately(self):
        row = np.array([0.2, 0.3, 0.5])
        P = np.tile(row, (3, 1))
        assert mixing_time(P, 0.25) == 1

    def test_identity_not_ergodic(self):
        with pytest.raises(StructureError):
            mixing_time(np.eye(2), 0.25)

    def test_lazy_cycle_matches_bruteforce(self):
        # lazy random walk on a 4-cycle
        P = np.zeros((4, 4))
        for i in range(4):
            P[i, i] = 0.5
            P[i, (i + 1) % 4] = 0.25
            P[i, (i - 1) % 4] = 0.25
        pi = stationary_distribution(P)
        k, M = None, np.eye(4)
        for step in range(1, 10_000):
            M = M @ P
            if 0.5 * np.max(np.sum(np.abs(M - pi), axis=1)) <= 0.25:
                k = step
                break
        assert mixing_time(P, 0.25) == k

    def test_eps_range(self):
        with pytest.raises(ValueError):
            mixing_time(np.eye(2), 1.5)


class TestPairChain:
    def test_full_support_two_states(self):
        P = np.array([[0.3, 0.7], [0.6, 0.4]])
        pairs, Q, mu = pair_chain(P)
        assert len(pairs) == 4
        assert np.allclose(Q.sum(axis=1), 1.0)
        assert abs(mu.sum() - 1.0) < 1e-12

    def test_mu_matches_stationary_of_q(self):
        P = random_ergodic_chain(4, 8)
        pairs, Q, mu = pair_chain(P)
        pi = stationary_distribution(P)
        for m, (i, j) in enumerate(pairs):
            assert mu[m] == pytest.approx(pi[i] * P[i, j], rel=1e-10)
        assert np.sum(np.abs(mu - stationary_distribution(Q))) <= 1e-9

    def test_zero_probability_pairs_excluded(self):
        P = np.array([[0.0, 1.0, 0.0], [0.5, 0.0, 0.5], [0.5, 0.5, 0.0]])
        pairs, Q, mu = pair_chain(P)
        assert (0, 0) not in pairs and (0, 2) not in pairs
        assert np.allclose(Q.sum(axis=1), 1.0)

    def test_mixing_time_identity_small_panel(self):
        from oracles import pair_mixing_time_from_state_starts
        for seed in range(10):
            p = 2 + seed % 5
            P = random_ergodic_chain(p, 100 + seed)
            pairs, Q, mu = pair_chain(P)
            tau_pair = pair_mixing_time_from_state_starts(pairs, Q, mu, P, 0.25)
            assert tau_pair == mixing_time(P, 0.25)

    def test_point_mass_pair_starts_need_one_extra_step(self):
        # from a deterministic pair state the n-th pair involves n+1
        # underlying transitions, so the standard point-start mixing time of
        # the pair chain exceeds the base chain's by exactly one
        for seed in range(5):
            P = random_ergodic_chain(3 + seed % 3, 300 + seed)
            _, Q, _ = pair_chain(P)
            assert mixing_time(Q, 0.25) == mixing_time(P, 0.25) + 1


class TestConditionalMean:
    def test_ones_vector(self):
        P = random_ergodic_chain(5, 9)
        assert np.allclose(conditional_mean(P, np.ones(5)), 1.0)

    def test_uniform_rows_give_mean(self):
        P = np.full((4, 4), 0.25)
        v = np.array([1.0, 2.0, 3.0, 4.0])
        assert np.allclose(conditional_mean(P, v), v.mean())

    def test_operator_norm_bound(self):
        rng = np.random.default_rng(10)
        P = random_ergodic_chain(6, 11)
        P_hat = random_ergodic_chain(6, 12)
        for _ in range(20):
            v = rng.standard_normal(6)
            lhs = np.linalg.norm(conditional_mean(P_hat, v) - conditional_mean(P, v))
            assert lhs <= np.linalg.norm(P_hat - P) * np.linalg.norm(v) + 1e-12

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            conditional_mean(np.eye(3), np.ones(4))


class TestFrequencyToTransition:
    def test_uniform(self):
        F = np.full((3, 3), 1.0 / 9.0)
        assert np.allclose(frequency_to_transition(F), 1.0 / 3.0)

    def test_zero_row_becomes_uniform(self):
        F = np.array([[0.0, 0.0], [0.5, 0.5]])
        P = frequency_to_transition(F)
        assert np.allclose(P[0], 0.5)

    def test_round_trip_from_ergodic_chain(self):
        P = random_ergodic_chain(5, 13)
        pi = stationary_distribution(P)
        F = pi[:, None] * P
        assert np.max(np.abs(frequency_to_transition(F) - P)) < 1e-12


class TestEstimation:
    @staticmethod
    def exact_frequency_instance(p, s, seed):
        """Frequency matrix that is exactly rank-3 plus s-sparse (nonnegative,
        total one): scaling a low-rank-plus-sparse sum preserves both parts."""
        from lrsm.synth import gen_lowrank_sparse
        _, _, M = gen_lowrank_sparse(InstanceSpec(p=p, r=3, s=s, seed=seed))
        return M / M.sum()

    def test_noise_free_fixed_point(self):
        F_star = self.exact_frequency_instance(20, 20, seed=9)
        cfg = SolverConfig(3, 20)
        F_hat, P_hat, report = estimate_from_frequency(F_star, cfg)
        assert np.linalg.norm(F_hat - F_star) <= 1e-6
        P_star = F_star / F_star.sum(axis=1, keepdims=True)
        assert np.linalg.norm(P_hat - P_star) <= 1e-5

    def test_rows_sum_to_one(self):
        inst = InstanceSpec(p=15, r=3, s=15, t=1.0, seed=4)
        P_star, F_star, _, _ = gen_transition(inst)
        traj = simulate_chain(P_star, 4000, "stationary", seed=5)
        F_hat, P_hat, _ = estimate_transition(traj, 15, SolverConfig(3, 15))
        assert np.max(np.abs(P_hat.sum(axis=1) - 1.0)) <= 1e-12
        assert abs(F_hat.sum() - 1.0) <= 1e-12
        assert F_hat.min() >= 0.0

    def test_postprocessing_never_hurts_global_mode(self):
        # truncation and global projection cannot move the fit away from a
        # feasible ground truth
        inst = InstanceSpec(p=12, r=3, s=12, t=1.0, seed=6)
        P_star, F_star, _, _ = gen_transition(inst)
        traj = simulate_chain(P_star, 3000, "stationary", seed=7)
        F_tilde = empirical_frequency(traj, 12)
        L, S, _ = solve(F_tilde, SolverConfig(3, 12))
        F0 = L.to_dense() + S.to_dense()
        F1 = np.clip(F0, 0.0, 1.0)
        F_hat = project_simplex(F1, "global")
        d0 = np.linalg.norm(F0 - F_star)
        d1 = np.linalg.norm(F1 - F_star)
        d2 = np.linalg.norm(F_hat - F_star)
        assert d1 <= d0 + 1e-12
        assert d2 <= d1 + 1e-12

    def test_error_shrinks_with_n(self):
        inst = InstanceSpec(p=15, r=3, s=15, t=1.0, seed=8)
        P_star, F_star, _, _ = gen_transition(inst)
        errs = []
        for n in (2000, 64_000):
            traj = simulate_chain(P_star, n, "stationary", seed=9)
            F_hat, _, _ = estimate_transition(traj, 15, SolverConfig(3, 15))
            errs.append(np.linalg.norm(F_hat - F_star))
        assert errs[1] < errs[0] / 2

    def test_frequency_concentrates_over_seed_panel(self):
        inst = InstanceSpec(p=5, r=3, s=5, t=1.0, seed=10)
        P_star, F_star, _, _ = gen_transition(inst)
        for seed in range(20):
            traj = simulate_chain(P_star, 1_000_000, "stationary", seed=seed)
            F_tilde = empirical_frequency(traj, 5)
            assert np.max(np.abs(F_tilde - F_star)) < 5e-3


class TestSpectralBaseline:
    def test_feasible_low_rank_input_unchanged(self):
        # exactly rank-3, nonnegative, total one
        F3 = TestEstimation.exact_frequency_instance(10, 0, seed=11)
        F_hat, _ = spectral_baseline(F3, 3)
        assert np.max(np.abs(F_hat - F3)) <= 1e-8

    def test_output_satisfies_invariants(self):
        rng = np.random.default_rng(12)
        traj = rng.integers(0, 8, size=2000)
        F_tilde = empirical_frequency(traj, 8)
        F_hat, P_hat = spectral_baseline(F_tilde, 3)
        check_frequency_matrix(F_hat)
        check_transition_matrix(P_hat)


class TestTrajectoryIO:
    def test_round_trip(self, tmp_path):
        traj = np.array([0, 3, 2, 2, 1])
        path = tmp_path / "traj.txt"
        save_trajectory(path, traj)
        assert np.array_equal(load_trajectory(path), traj)

    def test_empty_rejected(self, tmp_path):
        path = tmp_path / "empty.txt"
        path.write_text("")
        with pytest.raises(ValueError):
            load_trajectory(path)


class TestErgodicity:
    def test_ergodic_chain_passes(self):
        assert ergodicity_failure(random_ergodic_chain(4, 14)) is None

    def test_reducible_detected(self):
        P = np.array([[1.0, 0.0], [0.5, 0.5]])
        assert "irreducible" in ergodicity_failure(P)

    def test_periodic_detected(self):
        P = np.array([[0.0, 1.0], [1.0, 0.0]])
        assert "period" in ergodicity_failure(P)
