import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from beamalign.alignment import (
    AlignmentConfig,
    beam_gain,
    normalize_constant_modulus,
    run_alignment,
    throughput,
    trace_to_csv,
    trace_to_json,
)
from beamalign.baselines import random_beams, svd_optimal_bound
from beamalign.channel import PilotConfig, assemble_channel
from beamalign.errors import ConfigError, DimensionMismatchError
from beamalign.geometry import SceneConfig


@pytest.fixture
def small_cfg(small_scene):
    return AlignmentConfig(scene=small_scene, rounds=5, seed=3)


@pytest.fixture
def small_channel(small_scene):
    return assemble_channel(small_scene, 2, 0.01, seed=3)


def test_normalize_idempotent(rng):
    v = np.exp(1j * rng.uniform(0, 2 * math.pi, 7)) / math.sqrt(7)
    np.testing.assert_allclose(normalize_constant_modulus(v), v, atol=1e-15)


@pytest.mark.parametrize("k", [1, 7, 201])
def test_normalize_moduli_and_norm(rng, k):
    v = rng.standard_normal(k) + 1j * rng.standard_normal(k)
    out = normalize_constant_modulus(v)
    np.testing.assert_allclose(np.abs(out), 1.0 / math.sqrt(k), atol=1e-15)
    assert np.linalg.norm(out) == pytest.approx(1.0, rel=1e-12)


def test_normalize_zero_elements_get_zero_phase():
    v = np.array([0.0 + 0.0j, 3.0 + 4.0j])
    out = normalize_constant_modulus(v)
    assert out[0] == pytest.approx(1.0 / math.sqrt(2))


@settings(max_examples=25, deadline=None)
@given(st.lists(st.complex_numbers(min_magnitude=1e-6, max_magnitude=1e6,
                                   allow_nan=False, allow_infinity=False),
                min_size=1, max_size=32))
def test_normalize_constant_modulus_property(values):
    v = np.array(values)
    out = normalize_constant_modulus(v)
    k = v.size
    assert np.allclose(np.abs(out), 1.0 / math.sqrt(k), atol=1e-12)
    # phases survive normalization
    assert np.allclose(out * math.sqrt(k), v / np.abs(v), atol=1e-9)


def test_throughput_zero_channel():
    s = np.ones(4, dtype=complex) / 2.0
    p = np.ones(4, dtype=complex) / 2.0
    assert throughput(np.zeros((4, 4)), s, p, 0.1, 1e-9) == 0.0


def test_beam_gain_two_orderings_agree(rng, small_channel):
    H = small_channel.matrix
    p, s = random_beams(31, 31, rng)
    direct = beam_gain(H, s, p)
    flipped = float(abs(p @ H.T @ s) ** 2)
    assert direct == pytest.approx(flipped, rel=1e-12)


def test_throughput_bounded_by_svd(rng, small_channel):
    H = small_channel.matrix
    bound = svd_optimal_bound(H, 0.1, 1e-9)
    for _ in range(1000):
        p, s = random_beams(31, 31, rng)
        assert throughput(H, s, p, 0.1, 1e-9) <= bound


def test_run_alignment_record_count_and_modulus(small_cfg, small_channel):
    trace = run_alignment(small_cfg, small_channel)
    assert len(trace.records) == 5
    for record in trace.records:
        np.testing.assert_allclose(
            np.abs(record.probing_beam), 1.0 / math.sqrt(31), atol=1e-12
        )
        np.testing.assert_allclose(
            np.abs(record.sensing_beam), 1.0 / math.sqrt(31), atol=1e-12
        )
    np.testing.assert_allclose(
        np.abs(trace.initial_probing_beam), 1.0 / math.sqrt(31), atol=1e-12
    )


def test_run_alignment_deterministic(small_cfg, small_channel):
    a = run_alignment(small_cfg, small_channel)
    b = run_alignment(small_cfg, small_channel)
    for ra, rb in zip(a.records, b.records):
        np.testing.assert_array_equal(ra.probing_beam, rb.probing_beam)
        np.testing.assert_array_equal(ra.sensing_beam, rb.sensing_beam)
        assert ra.throughput == rb.throughput


def test_run_alignment_wavenumber_dimension_contract(small_scene, small_channel):
    # mapper outputs live in the truncated wavenumber domain; beams are
    # expanded to the antenna domain only through the transform
    from beamalign.geometry import build_scene
    from beamalign.wavenumber import los_truncated_index_set

    bs, ue = build_scene(small_scene)
    expected = los_truncated_index_set(bs, ue, small_scene.wavelength).size
    assert expected == 5
    cfg = AlignmentConfig(scene=small_scene, rounds=3, seed=0)
    trace = run_alignment(cfg, small_channel)
    assert trace.records[0].probing_beam.shape == (31,)


def test_run_alignment_no_lookahead(small_cfg, small_channel):
    trace = run_alignment(small_cfg, small_channel)
    for t, record in enumerate(trace.records, start=1):
        assert record.bs_updates_at_beam == t - 1
        assert record.ue_updates_at_beam == t - 1


def test_run_alignment_zero_noise_deterministic(small_scene):
    pilot = PilotConfig(bs_noise_power=0.0, ue_noise_power=0.0)
    cfg = AlignmentConfig(scene=small_scene, pilot=pilot, rounds=4, seed=9)
    channel = assemble_channel(small_scene, 0, 0.0, seed=9)
    a = run_alignment(cfg, channel)
    b = run_alignment(cfg, channel)
    for ra, rb in zip(a.records, b.records):
        assert ra.throughput == rb.throughput


def test_run_alignment_shape_mismatch(small_cfg):
    other = assemble_channel(SceneConfig(bs_antennas=9, ue_antennas=9, distance=1.0),
                             0, 0.0, seed=0)
    with pytest.raises(DimensionMismatchError):
        run_alignment(small_cfg, other)


def test_alignment_config_validation(small_scene):
    with pytest.raises(ConfigError):
        AlignmentConfig(scene=small_scene, rounds=0)
    with pytest.raises(ConfigError):
        AlignmentConfig(scene=small_scene, bs_learning_rate=0.0)


def test_ablation_runs_without_transform(small_scene, small_channel):
    cfg = AlignmentConfig(scene=small_scene, rounds=3, seed=1, use_wtm=False)
    trace = run_alignment(cfg, small_channel)
    assert len(trace.records) == 3


def test_localization_error_changes_transforms_not_channel(small_scene, small_channel):
    clean = run_alignment(AlignmentConfig(scene=small_scene, rounds=3, seed=2),
                          small_channel)
    perturbed = run_alignment(
        AlignmentConfig(scene=small_scene, rounds=3, seed=2, localization_error=0.2),
        small_channel,
    )
    assert clean.svd_bound == perturbed.svd_bound  # channel untouched
    assert not np.array_equal(
        clean.records[0].probing_beam, perturbed.records[0].probing_beam
    )


def test_trace_serialization(small_cfg, small_channel):
    trace = run_alignment(small_cfg, small_channel)
    payload = json.loads(trace_to_json(trace))
    assert len(payload["rounds"]) == 5
    assert payload["rounds"][0]["round"] == 1
    assert payload["svd_bound"] == pytest.approx(trace.svd_bound)
    csv_text = trace_to_csv(trace)
    lines = csv_text.strip().split("\n")
    assert lines[0] == "round,bs_loss,ue_loss,beam_gain,throughput"
    assert len(lines) == 6
    first = lines[1].split(",")
    assert float(first[4]) == pytest.approx(trace.records[0].throughput)
