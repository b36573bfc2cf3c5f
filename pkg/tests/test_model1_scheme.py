import logging

import numpy as np
import pytest
from scipy.stats import kstest

from models.channels import ChannelParams, InterferenceSpec, SchemeParams, hop1
from models.lattice import (CodewordIndex, build_chain, index_to_point, lattice_coordinates, mod_lattice,
                            nearest_point, point_to_index)
from models.model1_scheme import (Model1State, list_anchor, m1_encode_source, m1_hop2_decode, m1_hop2_encode,
                                  m1_list_from_index, m1_relay_list, m1_relay_scale, m1_resolve,
                                  run_model1_trial, true_list_point)
from utils.errors import AmbiguousListError, ConfigurationError
from utils.rates import scheme_error_bound
from utils.stats import RunCounters

logger = logging.getLogger(__name__)


def _noiseless_params(**kwargs):
    return SchemeParams.from_snrs(255.0, 255.0, noiseless=True, **kwargs)


def test_encode_without_dither_returns_codeword():
    chain = build_chain(4, 4, 2)
    state = Model1State.draw(chain, 1.0, np.random.default_rng(0))
    state.u1 = np.zeros(chain.n)
    assert np.allclose(m1_encode_source(state), state.codeword)


def test_source_output_uniform():
    chain = build_chain(1, 2, 2)
    rng = np.random.default_rng(20)
    samples = [m1_encode_source(Model1State.draw(chain, 1.0, rng))[0] for _ in range(5000)]
    assert kstest(samples, "uniform", args=(-chain.coarse.a / 2, chain.coarse.a)).pvalue > 0.001


def test_hop2_codeword_uniform():
    chain = build_chain(1, 2, 2)
    rng = np.random.default_rng(21)
    u = point_to_index(chain, np.array([chain.quant.a]), "quant")
    samples = [m1_hop2_encode(Model1State.draw(chain, 1.0, rng), u)[0] for _ in range(5000)]
    assert kstest(samples, "uniform", args=(-chain.coarse.a / 2, chain.coarse.a)).pvalue > 0.001


def test_state_rejects_bad_alpha():
    chain = build_chain(2, 2, 2)
    with pytest.raises(ConfigurationError):
        Model1State.draw(chain, 1.5, np.random.default_rng(0))


def test_relay_scale_identity_noiseless():
    chain = build_chain(4, 2, 2)
    rng = np.random.default_rng(1)
    for _ in range(200):
        state = Model1State.draw(chain, 1.0, rng)
        s = rng.uniform(-1e9, 1e9, size=chain.n)
        y2p = m1_relay_scale(state, m1_encode_source(state) + s)
        shifted = s + state.uq
        expected = state.codeword + nearest_point(chain.quant, shifted) + (shifted - nearest_point(chain.quant, shifted))
        residual = mod_lattice(chain.coarse, y2p - expected)
        assert np.max(np.abs(residual)) <= 1e-9 * 1e9


@pytest.mark.parametrize("anchor", ["region", "nearest"])
def test_noiseless_list_holds_true_point(anchor):
    chain = build_chain(4, 2, 2)
    rng = np.random.default_rng(2)
    for _ in range(1000):
        state = Model1State.draw(chain, 1.0, rng)
        s = np.full(chain.n, rng.uniform(-1e6, 1e6))
        u, candidates = m1_relay_list(state, m1_relay_scale(state, m1_encode_source(state) + s), anchor)
        assert len(candidates) == 16
        coords = np.mod(lattice_coordinates(chain.quant, candidates), chain.quant_radix)
        v = np.mod(true_list_point(state, s), chain.quant_radix)
        assert np.any(np.all(coords == v, axis=1))


def test_list_rebuilt_from_index():
    chain = build_chain(3, 2, 3)
    rng = np.random.default_rng(3)
    state = Model1State.draw(chain, 1.0, rng)
    y2p = m1_relay_scale(state, m1_encode_source(state) + rng.normal(0.0, 10.0, size=chain.n))
    u, candidates = m1_relay_list(state, y2p)
    assert u.k == chain.quant_radix
    assert np.allclose(np.sort(m1_list_from_index(chain, u), axis=0), np.sort(candidates, axis=0))


def test_collapsed_chain_list_is_single_coset():
    chain = build_chain(3, 4, 1)
    rng = np.random.default_rng(4)
    state = Model1State.draw(chain, 1.0, rng)
    y2p = m1_relay_scale(state, m1_encode_source(state))
    u, candidates = m1_relay_list(state, y2p)
    assert len(candidates) == 1
    assert np.allclose(candidates[0], index_to_point(chain, u, "quant"))


def test_hop2_round_trip_noiseless():
    chain = build_chain(4, 2, 2)
    params = _noiseless_params()
    rng = np.random.default_rng(5)
    for _ in range(200):
        state = Model1State.draw(chain, 1.0, rng)
        u = CodewordIndex.from_array(rng.integers(0, chain.quant_radix, size=chain.n), chain.quant_radix)
        x2 = m1_hop2_encode(state, u)
        assert np.mean(x2 ** 2) <= 3.0 + 1e-9
        assert m1_hop2_decode(chain, params, x2, state.u2) == u


def test_hop2_without_dither_sends_codeword():
    chain = build_chain(2, 2, 2)
    state = Model1State.draw(chain, 1.0, np.random.default_rng(6))
    state.u2 = np.zeros(chain.n)
    u = CodewordIndex((3, 1), chain.quant_radix)
    assert np.allclose(m1_hop2_encode(state, u), index_to_point(chain, u, "quant"))


def test_resolve_without_interference():
    chain = build_chain(4, 2, 2)
    rng = np.random.default_rng(7)
    state = Model1State.draw(chain, 1.0, rng)
    state.uq = np.zeros(chain.n)
    u, candidates = m1_relay_list(state, m1_relay_scale(state, m1_encode_source(state)))
    t_hat = m1_resolve(state, candidates, np.zeros(chain.n))
    assert point_to_index(chain, t_hat, "message") == state.message


def test_resolve_reports_ambiguity():
    chain = build_chain(1, 2, 2)
    state = Model1State.draw(chain, 1.0, np.random.default_rng(8))
    state.uq = np.zeros(1)
    aq = chain.quant.a
    with pytest.raises(AmbiguousListError) as info:
        m1_resolve(state, np.array([[0.0], [-2 * aq]]), np.zeros(1))
    assert info.value.survivors == 2
    with pytest.raises(AmbiguousListError):
        m1_resolve(state, np.array([[aq]]), np.zeros(1))


def test_list_anchor_region_contains_observation_cell():
    chain = build_chain(2, 2, 2)
    y = np.array([0.1, -0.4])
    center = list_anchor(chain, y)
    offset = (y - center) / chain.fine.a
    assert np.all(offset > -0.5 - 1e-12) and np.all(offset <= 0.5 + 1e-12)


@pytest.mark.parametrize("kind", ["constant:1e9", "gaussian:1e12", "sinusoid:1e6", "uniform:1e3"])
def test_noiseless_end_to_end(kind):
    chain = build_chain(8, 2, 2)
    params = _noiseless_params()
    spec = InterferenceSpec.parse(kind)
    rng = np.random.default_rng(9)
    for trial in range(300):
        record = run_model1_trial(chain, params, spec, rng, trial)
        assert not record.error
        assert not any(record.stages.values())


def test_disabling_cancellation_breaks_decoding():
    chain = build_chain(8, 2, 2)
    params = _noiseless_params(cancel_interference=False)
    spec = InterferenceSpec("gaussian", 1e12)
    rng = np.random.default_rng(10)
    errors = sum(run_model1_trial(chain, params, spec, rng, t).error for t in range(50))
    assert errors > 40


def test_noisy_operation_below_union_bound():
    chain = build_chain(8, 2, 2)
    params = SchemeParams.from_snrs(255.0, 255.0)
    spec = InterferenceSpec("gaussian", 1e12)
    rng = np.random.default_rng(11)
    counters = RunCounters()
    for trial in range(2000):
        counters.add(run_model1_trial(chain, params, spec, rng, trial))
    bound = scheme_error_bound(1, 2, 2, 8, 255.0, 255.0)
    assert counters.errors / counters.trials < bound
    assert counters.stage_errors["relay"] + counters.stage_errors["hop2"] + \
        counters.stage_errors["ambiguity"] >= counters.errors


def test_hop2_index_error_rate_at_24_db():
    chain = build_chain(8, 2, 2)
    params = SchemeParams.from_snrs(255.0, 255.0)
    rng = np.random.default_rng(12)
    misses = 0
    for _ in range(2000):
        state = Model1State.draw(chain, params.alpha1, rng)
        u = CodewordIndex.from_array(rng.integers(0, chain.quant_radix, size=chain.n), chain.quant_radix)
        y3 = m1_hop2_encode(state, u) + rng.normal(0.0, np.sqrt(1.0 / 255.0), size=chain.n)
        misses += m1_hop2_decode(chain, params, y3, state.u2) != u
    assert misses / 2000 < 0.05
