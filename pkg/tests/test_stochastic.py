"""MCWF and Gillespie trajectory engines: jump statistics, coset-pair
closure, cross-engine agreement, and seeded determinism."""

import numpy as np
import pytest
from scipy import stats

from tdqec.codes import (
    build_lookup_table,
    build_repetition,
    build_three_qubit,
    build_trickle_down,
    build_uncorrected,
)
from tdqec.engines import (
    CosetPairState,
    SimConfig,
    ctmc_bitstring_gillespie,
    gillespie_ensemble,
    mcwf_ensemble,
    mcwf_evolve,
    weight_chain_generator,
    weight_chain_transient,
)
from tdqec.engines.records import PHASE_STATE
from tdqec.engines.stochastic import build_rate_table, mcwf_step_plan
from tdqec.opcore import GuardError


def phase_vector(n):
    psi = np.zeros(1 << n, dtype=complex)
    psi[0] = PHASE_STATE.alpha
    psi[(1 << n) - 1] = PHASE_STATE.beta
    return psi


class TestStepPlanGuard:
    def test_explicit_dt_violating_guard_rejected(self):
        cfg = SimConfig(t_grid=[1.0], dt=0.5)
        with pytest.raises(GuardError, match="dt guard"):
            mcwf_step_plan(np.array([1.0]), max_rate=1.0, config=cfg)

    def test_auto_dt_respects_cap(self):
        cfg = SimConfig(t_grid=[1.0], dt_rate_cap=0.08)
        plan = mcwf_step_plan(np.array([1.0]), max_rate=4.0, config=cfg)
        h, k = plan[0]
        assert h * 4.0 <= 0.08 + 1e-12
        assert h * k == pytest.approx(1.0)


class TestJumpProbabilityBookkeeping:
    def test_codespace_rate_is_n_gamma_e_under_lookup(self):
        js = build_lookup_table(build_repetition(5), 1.0, gamma_e=0.07)
        table = build_rate_table(js)
        assert table.total[0] == pytest.approx(5 * 0.07)
        assert table.total[0b11111] == pytest.approx(5 * 0.07)

    def test_gillespie_rate_table_n3(self):
        js = build_lookup_table(build_repetition(3), 1.0, gamma_e=0.2)
        channels = js.applicable(0b001)
        rates = sorted(r for r, _, _ in channels)
        assert rates == pytest.approx([0.2, 0.2, 0.2, 1.0])
        corr = next(c for c in channels if c[0] == pytest.approx(1.0))
        assert 0b001 ^ corr[1] == 0

    def test_hypercube_walk_without_correction(self):
        js = build_uncorrected(build_repetition(5), gamma_e=0.3)
        for s in (0, 7, 31):
            channels = js.applicable(s)
            assert len(channels) == 5
            assert all(r == pytest.approx(0.3) for r, _, _ in channels)
            assert sorted(m for _, m, _ in channels) == [1, 2, 4, 8, 16]


class TestPoissonStatistics:
    def test_jump_count_is_poisson_without_correction(self):
        # only bit flips active: total jump count over [0, T] ~ Poisson(n Ge T)
        n, ge, t_max = 3, 0.5, 1.0
        js = build_uncorrected(build_repetition(n), gamma_e=ge)
        cfg = SimConfig(t_grid=[t_max], n_traj=10_000, master_seed=424242,
                        dt=0.002 / (n * ge))
        _, counts = mcwf_ensemble(js, cfg, count_jumps=True)
        mean = n * ge * t_max
        kmax = 8
        observed = np.bincount(np.minimum(counts, kmax), minlength=kmax + 1)
        expected = stats.poisson.pmf(np.arange(kmax + 1), mean)
        expected[kmax] = stats.poisson.sf(kmax - 1, mean)
        result = stats.chisquare(observed, expected * len(counts))
        assert result.pvalue > 0.01


class TestCosetPairClosure:
    def test_dense_mcwf_keeps_pair_form_every_step(self):
        js = build_trickle_down(build_repetition(3), 1.0, 1, gamma_e=0.3)
        cfg = SimConfig(t_grid=np.linspace(0.5, 6.0, 12), master_seed=5)
        rec = mcwf_evolve(phase_vector(3), js, cfg, traj_index=0, pair_check=True)
        assert rec.engine == "mcwf-dense"

    def test_dense_and_pair_paths_produce_identical_events(self):
        js = build_lookup_table(build_repetition(3), 1.0, gamma_e=0.25)
        cfg = SimConfig(t_grid=np.linspace(0.5, 8.0, 16), master_seed=99)
        for idx in range(6):
            dense = mcwf_evolve(phase_vector(3), js, cfg, traj_index=idx)
            pair = mcwf_evolve(CosetPairState(0), js, cfg, traj_index=idx)
            assert [e[1] for e in dense.events] == [e[1] for e in pair.events]
            assert dense.path == pair.path
            assert dense.decode_flags == pair.decode_flags


class TestRecords:
    def test_replay_consistency_mcwf(self):
        js = build_trickle_down(build_repetition(5), 1.0, 2, gamma_e=0.2)
        cfg = SimConfig(t_grid=np.linspace(1.0, 15.0, 8), master_seed=31)
        rec = mcwf_evolve(CosetPairState(0), js, cfg, traj_index=3)
        assert rec.replay_states(cfg.t_grid) == rec.path
        times = [e[0] for e in rec.events]
        assert times == sorted(times)

    def test_replay_consistency_gillespie(self):
        js = build_trickle_down(build_repetition(5), 1.0, 2, gamma_e=0.2)
        cfg = SimConfig(t_grid=np.linspace(1.0, 15.0, 8), master_seed=31)
        rec = ctmc_bitstring_gillespie(0, js, cfg, traj_index=3)
        assert rec.replay_states(cfg.t_grid) == rec.path
        assert rec.engine == "gillespie"

    def test_single_trajectory_matches_ensemble_member(self):
        js = build_lookup_table(build_repetition(3), 1.0, gamma_e=0.3)
        cfg = SimConfig(t_grid=np.linspace(0.5, 5.0, 10), n_traj=50, master_seed=77)
        series = mcwf_ensemble(js, cfg)
        flags = np.zeros((len(cfg.t_grid), cfg.n_traj))
        for i in range(cfg.n_traj):
            rec = mcwf_evolve(CosetPairState(0), js, cfg, traj_index=i)
            flags[:, i] = rec.decode_flags
        assert np.allclose(series.values, flags.mean(axis=1))


class TestDeterminism:
    def test_mcwf_ensemble_is_reproducible(self):
        js = build_trickle_down(build_repetition(5), 1.0, 2, gamma_e=0.15)
        cfg = lambda: SimConfig(t_grid=np.linspace(1.0, 20.0, 6), n_traj=500, master_seed=2024)
        a = mcwf_ensemble(js, cfg())
        b = mcwf_ensemble(js, cfg())
        assert np.array_equal(a.values, b.values)
        assert np.array_equal(a.stderr, b.stderr)

    def test_gillespie_records_bit_identical(self):
        js = build_lookup_table(build_repetition(5), 1.0, gamma_e=0.15)
        cfg = SimConfig(t_grid=np.linspace(1.0, 20.0, 6), master_seed=909)
        a = ctmc_bitstring_gillespie(0, js, cfg, traj_index=4)
        b = ctmc_bitstring_gillespie(0, js, cfg, traj_index=4)
        assert a.events == b.events
        assert a.path == b.path

    def test_different_indices_differ(self):
        js = build_lookup_table(build_repetition(5), 1.0, gamma_e=0.15)
        cfg = SimConfig(t_grid=np.linspace(1.0, 20.0, 6), master_seed=909)
        a = ctmc_bitstring_gillespie(0, js, cfg, traj_index=0)
        b = ctmc_bitstring_gillespie(0, js, cfg, traj_index=1)
        assert a.events != b.events


class TestCrossEngine:
    def test_gillespie_matches_mcwf_marginal(self):
        js = build_trickle_down(build_repetition(5), 1.0, 2, gamma_e=0.1)
        tgrid = np.array([10.0])
        mc = mcwf_ensemble(js, SimConfig(t_grid=tgrid, n_traj=10_000, master_seed=8))
        gl = gillespie_ensemble(js, SimConfig(t_grid=tgrid, n_traj=10_000, master_seed=9))
        z = abs(mc.values[0] - gl.values[0]) / np.hypot(mc.stderr[0], gl.stderr[0])
        assert z < 3.0

    def test_gillespie_matches_exact_chain(self):
        js = build_three_qubit(1.0, gamma_e=0.2)
        tgrid = np.array([1.0, 3.0, 6.0])
        chain = weight_chain_transient(weight_chain_generator(js), t_grid=tgrid)
        gl = gillespie_ensemble(js, SimConfig(t_grid=tgrid, n_traj=20_000, master_seed=15))
        z = np.abs(gl.values - chain.values) / np.maximum(gl.stderr, 1e-9)
        assert np.max(z) < 3.0

    def test_mcwf_matches_exact_chain(self):
        js = build_lookup_table(build_repetition(5), 1.0, gamma_e=0.1)
        tgrid = np.array([5.0, 15.0, 30.0])
        chain = weight_chain_transient(weight_chain_generator(js), t_grid=tgrid)
        mc = mcwf_ensemble(js, SimConfig(t_grid=tgrid, n_traj=20_000, master_seed=21))
        z = np.abs(mc.values - chain.values) / np.maximum(mc.stderr, 1e-9)
        assert np.max(z) < 3.0
