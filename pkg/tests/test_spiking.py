"""Spiking chains against the scalar oracle, rate bounds, and sparsity behavior."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spikeprompt.autodiff import SurrogateSpec, Tensor, no_grad, sum_all
from spikeprompt.spiking import (IF_KIND, SIGNED_IF_KIND, SpikingConfig, if_chain,
                                 oracle_simulate, signed_if_chain, sparsity)


def chain_value(kind, drive, threshold, horizon):
    cfg = SpikingConfig(mu=threshold if kind == IF_KIND else 1.0,
                        gamma=threshold if kind == SIGNED_IF_KIND else 1.0,
                        horizon=horizon)
    fn = if_chain if kind == IF_KIND else signed_if_chain
    with no_grad():
        return fn(Tensor([[drive]]), cfg).values[0, 0]


class TestConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            SpikingConfig(mu=0.0)
        with pytest.raises(ValueError):
            SpikingConfig(gamma=-0.1)
        with pytest.raises(ValueError):
            SpikingConfig(horizon=0)


class TestIfChainExamples:
    def test_zero_drive_never_fires(self):
        cfg = SpikingConfig(mu=0.25, horizon=8)
        out = if_chain(Tensor(np.zeros((3, 2))), cfg)
        assert np.array_equal(out.values, np.zeros((3, 2)))

    def test_fires_every_step(self):
        # v: 0.3 (fire, reset 0.05), 0.35 (fire) -> average 1.0
        assert chain_value(IF_KIND, 0.3, 0.25, 2) == 1.0

    def test_single_spike_in_four_steps(self):
        # v: 0.1, 0.2, 0.3 (fire, reset 0.05), 0.15 -> average 0.25
        assert chain_value(IF_KIND, 0.1, 0.25, 4) == 0.25

    def test_fires_exactly_at_threshold(self):
        assert chain_value(IF_KIND, 0.25, 0.25, 1) == 1.0


class TestSignedChainExamples:
    def test_negative_drive_fires_minus_one(self):
        assert chain_value(SIGNED_IF_KIND, -0.5, 0.3, 1) == -1.0

    def test_dead_zone(self):
        cfg = SpikingConfig(gamma=0.3, horizon=4)
        out = signed_if_chain(Tensor(np.zeros((2, 2))), cfg)
        assert np.array_equal(out.values, np.zeros((2, 2)))

    def test_half_rate(self):
        # u: 0.2 (no fire), 0.4 (fire +1) -> average 0.5
        assert chain_value(SIGNED_IF_KIND, 0.2, 0.3, 2) == 0.5

    def test_fires_exactly_at_thresholds(self):
        assert chain_value(SIGNED_IF_KIND, 0.3, 0.3, 1) == 1.0
        assert chain_value(SIGNED_IF_KIND, -0.3, 0.3, 1) == -1.0


class TestOracle:
    def test_if_examples(self):
        assert oracle_simulate(IF_KIND, 0.3, 0.25, 2) == ([1.0, 1.0], 1.0)
        train, avg = oracle_simulate(IF_KIND, -0.1, 0.25, 8)
        assert train == [0.0] * 8 and avg == 0.0

    def test_signed_example(self):
        assert oracle_simulate(SIGNED_IF_KIND, -0.5, 0.3, 1) == ([-1.0], -1.0)

    def test_unknown_kind(self):
        with pytest.raises(ValueError, match="unknown chain kind"):
            oracle_simulate("leaky", 0.1, 0.2, 1)


@settings(max_examples=300, deadline=None)
@given(st.floats(-2, 2, allow_nan=False), st.floats(0.005, 0.5), st.integers(1, 16))
def test_if_chain_equals_oracle_exactly(drive, threshold, horizon):
    _, avg = oracle_simulate(IF_KIND, drive, threshold, horizon)
    assert chain_value(IF_KIND, drive, threshold, horizon) == avg


@settings(max_examples=300, deadline=None)
@given(st.floats(-2, 2, allow_nan=False), st.floats(0.005, 0.5), st.integers(1, 16))
def test_signed_chain_equals_oracle_exactly(drive, threshold, horizon):
    _, avg = oracle_simulate(SIGNED_IF_KIND, drive, threshold, horizon)
    assert chain_value(SIGNED_IF_KIND, drive, threshold, horizon) == avg


@settings(max_examples=200, deadline=None)
@given(st.floats(0, 0.999), st.floats(0.01, 0.5), st.integers(1, 16))
def test_if_rate_bound(frac, mu, horizon):
    # constant drive 0 <= alpha < mu: average within 1/T of alpha/mu
    alpha = frac * mu
    value = chain_value(IF_KIND, alpha, mu, horizon)
    assert abs(value - alpha / mu) < 1.0 / horizon


@settings(max_examples=100, deadline=None)
@given(st.floats(1, 5), st.floats(0.01, 0.5), st.integers(1, 16))
def test_if_saturates_at_or_above_threshold(ratio, mu, horizon):
    assert chain_value(IF_KIND, ratio * mu, mu, horizon) == 1.0


@settings(max_examples=100, deadline=None)
@given(st.floats(-3, 0), st.floats(0.01, 0.5), st.integers(1, 16))
def test_if_zero_for_nonpositive_drive(alpha, mu, horizon):
    assert chain_value(IF_KIND, alpha, mu, horizon) == 0.0


@settings(max_examples=200, deadline=None)
@given(st.floats(-2, 2, allow_nan=False), st.floats(0.01, 0.5), st.integers(1, 16))
def test_signed_clamp_bound_and_antisymmetry(drive, gamma, horizon):
    value = chain_value(SIGNED_IF_KIND, drive, gamma, horizon)
    target = min(max(drive / gamma, -1.0), 1.0)
    assert abs(value - target) < 1.0 / horizon
    assert chain_value(SIGNED_IF_KIND, -drive, gamma, horizon) == -value


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2 ** 31 - 1), st.integers(1, 8))
def test_outputs_on_quantization_grid(seed, horizon):
    rng = np.random.default_rng(seed)
    drive = Tensor(rng.uniform(-1, 1, (3, 4)))
    cfg = SpikingConfig(mu=0.2, gamma=0.2, horizon=horizon)
    with no_grad():
        h = if_chain(drive, cfg).values
        p = signed_if_chain(drive, cfg).values
    grid = np.arange(-horizon, horizon + 1) * (1.0 / horizon)
    assert np.isin(h, grid).all() and (h >= 0).all()
    assert np.isin(p, grid).all()


class TestSparsity:
    def test_zero_matrix(self):
        assert sparsity(np.zeros((3, 3))) == 1.0

    def test_half_zeros(self):
        assert sparsity(np.array([[0.0, 1.0], [0.0, 2.0]])) == 0.5

    def test_accepts_tensor_and_tolerance(self):
        t = Tensor([[1e-8, 1.0]])
        assert sparsity(t) == 0.0
        assert sparsity(t, tol=1e-6) == 0.5

    def test_matches_fire_fraction_against_oracle(self):
        # T=1: entries fire exactly where drive >= mu
        rng = np.random.default_rng(7)
        mu = 0.25
        alpha = rng.uniform(0, mu / 2 + mu, (50, 20))
        cfg = SpikingConfig(mu=mu, horizon=1)
        with no_grad():
            h = if_chain(Tensor(alpha), cfg)
        oracle_zero = sum(oracle_simulate(IF_KIND, a, mu, 1)[1] == 0.0
                          for a in alpha.ravel())
        assert sparsity(h) == oracle_zero / alpha.size


class TestSparsityMonotonicity:
    def test_nondecreasing_in_threshold_per_instance(self):
        rng = np.random.default_rng(0)
        drive = Tensor(rng.uniform(-0.4, 0.4, (40, 30)))
        grid = (0.005, 0.05, 0.1, 0.2, 0.3)
        for horizon in (1, 2, 4, 8):
            for chain, key in ((if_chain, "mu"), (signed_if_chain, "gamma")):
                values = []
                for thr in grid:
                    cfg = SpikingConfig(**{key: thr}, horizon=horizon)
                    with no_grad():
                        values.append(sparsity(chain(drive, cfg)))
                assert values == sorted(values)

    def test_seed_mean_sparser_at_smaller_horizon(self):
        grid = (0.005, 0.05, 0.1, 0.2, 0.3)
        for thr in grid:
            by_horizon = {1: [], 8: []}
            for seed in range(20):
                rng = np.random.default_rng(seed)
                drive = Tensor(rng.uniform(-0.4, 0.4, (20, 15)))
                for horizon in (1, 8):
                    cfg = SpikingConfig(mu=thr, gamma=thr, horizon=horizon)
                    with no_grad():
                        by_horizon[horizon].append(sparsity(if_chain(drive, cfg)))
            assert np.mean(by_horizon[1]) >= np.mean(by_horizon[8])


def test_gradients_flow_through_chain():
    # wide window covers every pre-activation, so every step contributes
    cfg = SpikingConfig(mu=0.2, gamma=0.2, horizon=4, surrogate=SurrogateSpec(width=10.0))
    alpha = Tensor([[0.1, 0.3]], requires_grad=True)
    sum_all(if_chain(alpha, cfg)).backward()
    assert (np.abs(alpha.grad) > 0).all()
    drive = Tensor([[0.1, -0.3]], requires_grad=True)
    sum_all(signed_if_chain(drive, cfg)).backward()
    assert (np.abs(drive.grad) > 0).all()
