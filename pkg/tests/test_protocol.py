import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import irs_reconfig.field as fe
from irs_reconfig.geometry import BlockageArea, Point3, hex_disc_grid
from irs_reconfig.overhead import OverheadParams, localization_time_bound
from irs_reconfig.phase_design import IlluminationSpec, full_illumination_profile
from irs_reconfig.protocol import (
    EVENT_KINDS,
    MobilitySegment,
    ProtocolConfig,
    chord_angles,
    ls_estimate,
    mean_chord_length,
    mu_position,
    run_many,
    run_protocol,
    sample_crossing,
)

BLK = BlockageArea((20.0, 60.0, 1.0), 20.0)
T_LOC = localization_time_bound(OverheadParams())


def _cfg(thr_db=10.0, **kw):
    return ProtocolConfig(gamma_thr_linear=fe.db_to_linear(thr_db), t_loc_s=T_LOC, **kw)


def _non_estimates(trace):
    return [e for e in trace.events if e.kind != "estimate"]


# -- mobility ---------------------------------------------------------------

def test_crossing_is_reproducible_and_on_the_circle():
    a = sample_crossing(BLK, 0.75, 11)
    b = sample_crossing(BLK, 0.75, 11)
    assert a == b
    assert a != sample_crossing(BLK, 0.75, 12)
    for p in (a.entry, a.exit):
        assert math.hypot(p.x - 20.0, p.y - 60.0) == pytest.approx(10.0, rel=1e-12)
        assert p.z == 1.0


def test_crossing_rejects_bad_inputs():
    with pytest.raises(ValueError):
        sample_crossing(BLK, 0.0, 1)
    with pytest.raises(ValueError):
        sample_crossing(BlockageArea((0, 0, 0), 0.0), 1.0, 1)
    with pytest.raises(ValueError):
        MobilitySegment((0, 0, 0), (0, 0, 0), 1.0)


def test_mean_chord_length_monte_carlo():
    r = 10.0
    ang = chord_angles(np.random.default_rng(2024), 1_000_000)
    chords = 2 * r * np.abs(np.sin((ang[:, 0] - ang[:, 1]) / 2))
    assert chords.mean() == pytest.approx(mean_chord_length(r), rel=0.005)
    assert mean_chord_length(r) == pytest.approx(4 * r / math.pi)


def test_sample_crossing_uses_the_batch_sampler():
    seg = sample_crossing(BLK, 1.0, 5)
    a, b = chord_angles(np.random.default_rng(5), 1)[0]
    assert seg.entry.x == pytest.approx(20 + 10 * math.cos(a), abs=1e-12)
    assert seg.exit.y == pytest.approx(60 + 10 * math.sin(b), abs=1e-12)


def test_mu_position_along_chord():
    seg = MobilitySegment((0.0, 0.0, 1.0), (6.0, 8.0, 1.0), 2.0)
    assert seg.duration_s == pytest.approx(5.0)
    assert mu_position(seg, 0.0) == seg.entry
    assert mu_position(seg, 5.0) == seg.exit
    mid = mu_position(seg, 2.5)
    assert mid.x == pytest.approx(3.0) and mid.y == pytest.approx(4.0)
    with pytest.raises(ValueError):
        mu_position(seg, 5.1)
    with pytest.raises(ValueError):
        mu_position(seg, -0.1)


# -- LS estimation ----------------------------------------------------------

def test_ls_noiseless_is_exact():
    s = np.array([1 + 1j, -1 + 0.5j, 0.3j])
    h = 0.7 - 0.2j
    h_hat, res = ls_estimate(s, h * s)
    assert h_hat == pytest.approx(h, abs=1e-15)
    assert res == pytest.approx(0.0, abs=1e-28)


def test_ls_rejects_bad_pilots():
    with pytest.raises(ValueError):
        ls_estimate([0, 0], [1, 1])
    with pytest.raises(ValueError):
        ls_estimate([1, 1], [1])


def test_ls_unbiased_on_pure_noise():
    rng = np.random.default_rng(1)
    n, n_plt, sigma2, p = 100_000, 3, 0.5, 2.0
    s = np.full((n, n_plt), math.sqrt(p), dtype=complex)
    y = math.sqrt(sigma2 / 2) * (rng.standard_normal((n, n_plt)) + 1j * rng.standard_normal((n, n_plt)))
    h_hat, _ = ls_estimate(s, y)
    sd = math.sqrt(sigma2 / (n_plt * p))
    assert abs(h_hat.mean()) < 3 * sd / math.sqrt(n)


def test_ls_mse_unit_pilots():
    rng = np.random.default_rng(2)
    n, n_plt, sigma2 = 100_000, 3, 0.8
    h = 0.3 + 0.4j
    s = np.ones((n, n_plt), dtype=complex)
    noise = math.sqrt(sigma2 / 2) * (rng.standard_normal((n, n_plt)) + 1j * rng.standard_normal((n, n_plt)))
    h_hat, _ = ls_estimate(s, h * s + noise)
    assert np.mean(np.abs(h_hat - h) ** 2) == pytest.approx(sigma2 / 3, rel=0.05)


# -- protocol loop ----------------------------------------------------------

def test_config_validation():
    with pytest.raises(ValueError):
        _cfg(time_step_s=0.01)
    with pytest.raises(ValueError):
        _cfg(snr_mode="psychic")
    with pytest.raises(ValueError):
        ProtocolConfig(1.0, t_loc_s=0.0)
    assert _cfg().time_step_s == pytest.approx(0.0024)


def _check_trace_invariants(trace, cfg):
    times = [e.timestamp_s for e in trace.events]
    assert times == sorted(times)
    assert all(e.kind in EVENT_KINDS for e in trace.events)
    assert trace.events[-1].kind == "exit"
    assert 0.0 <= trace.overhead_fraction <= 1.0
    assert all(s >= cfg.t_loc_s + cfg.t_irs_s - 1e-12 for s in trace.t_upd_samples_s)
    # localize -> reconfigure -> estimates -> threshold_crossed
    kinds = [e.kind for e in _non_estimates(trace)][:-1]
    expect = "localize"
    for k in kinds:
        assert k == expect
        expect = {"localize": "reconfigure", "reconfigure": "threshold_crossed",
                  "threshold_crossed": "localize"}[k]
    # no estimate inside a localization window
    locs = [e.timestamp_s for e in trace.events if e.kind == "localize"]
    for e in trace.events:
        if e.kind == "estimate":
            assert not any(t <= e.timestamp_s < t + cfg.t_loc_s + cfg.t_irs_s for t in locs)


@pytest.mark.parametrize("seed", [0, 1, 2])
@pytest.mark.parametrize("delta", [0.0, 8.0])
def test_trace_invariants(scenario, seed, delta):
    cfg = _cfg(rng_seed=seed)
    trace = run_protocol(scenario, BLK, IlluminationSpec(None, delta), cfg, sample_crossing(BLK, 0.75, seed))
    _check_trace_invariants(trace, cfg)
    assert trace.count("localize") == trace.count("reconfigure") or \
        trace.count("localize") == trace.count("reconfigure") + 1


def test_invariants_with_irs_delay_and_estimated_snr(scenario):
    cfg = _cfg(t_irs_s=0.01, snr_mode="estimated", snr_window=4, rng_seed=3)
    trace = run_protocol(scenario, BLK, IlluminationSpec(None, 0.0), cfg, sample_crossing(BLK, 1.0, 3))
    _check_trace_invariants(trace, cfg)
    assert trace.count("reconfigure") >= 1


def test_estimates_follow_coherence_grid(scenario):
    cfg = _cfg(rng_seed=4)
    trace = run_protocol(scenario, BLK, IlluminationSpec(None, 0.0), cfg, sample_crossing(BLK, 0.75, 4))
    recfg = [e.timestamp_s for e in trace.events if e.kind == "reconfigure"]
    est = [e.timestamp_s for e in trace.events if e.kind == "estimate"]
    assert len(est) == len(trace.channel_estimates) > 0
    for t in est:
        anchor = max(r for r in recfg if r <= t)
        k = (t - anchor) / cfg.t_coh_s
        assert abs(k - round(k)) < 1e-6


def test_full_illumination_needs_one_configuration(scenario):
    blk = BlockageArea((20.0, 60.0, 1.0), 10.0)
    prof = full_illumination_profile(scenario.panel, scenario.bs, blk, scenario.carrier)
    pts = hex_disc_grid(blk.center, blk.diameter_m, 0.05)
    worst = fe.snr_many(scenario.panel, prof, scenario.bs, pts, scenario.radio, scenario.carrier).min()
    cfg = ProtocolConfig(gamma_thr_linear=0.5 * worst, t_loc_s=T_LOC)
    seg = sample_crossing(blk, 0.75, 9)
    trace = run_protocol(scenario, blk, IlluminationSpec(blk.center, blk.diameter_m), cfg, seg)
    assert trace.count("localize") == 1 and trace.count("reconfigure") == 1
    assert trace.count("threshold_crossed") == 0
    assert trace.t_upd_samples_s == [pytest.approx(seg.duration_s)]


def test_stationary_user_never_retriggers(scenario):
    mu = Point3(20.0, 60.0, 1.0)
    seg = MobilitySegment(mu, Point3(20.0, 60.0 + 1e-6, 1.0), 1e-7)
    g = fe.gamma_max(scenario.panel, scenario.bs, mu, scenario.radio, scenario.carrier)
    cfg = ProtocolConfig(gamma_thr_linear=0.9 * g, t_loc_s=T_LOC)
    trace = run_protocol(scenario, BLK, IlluminationSpec(None, 0.0), cfg, seg)
    assert trace.count("threshold_crossed") == 0
    assert trace.count("reconfigure") == 1


def test_halving_the_step_keeps_the_event_sequence(scenario):
    seg = sample_crossing(BLK, 0.75, 6)
    coarse = _cfg(rng_seed=6)
    fine = replace(coarse, time_step_s=coarse.time_step_s / 2)
    a = _non_estimates(run_protocol(scenario, BLK, IlluminationSpec(None, 0.0), coarse, seg))
    b = _non_estimates(run_protocol(scenario, BLK, IlluminationSpec(None, 0.0), fine, seg))
    assert [e.kind for e in a] == [e.kind for e in b]
    for x, y in zip(a, b):
        assert abs(x.timestamp_s - y.timestamp_s) <= coarse.time_step_s + 1e-12


def test_trace_is_deterministic(scenario):
    seg = sample_crossing(BLK, 0.75, 8)
    cfg = _cfg(rng_seed=8)
    a = run_protocol(scenario, BLK, IlluminationSpec(None, 8.0), cfg, seg)
    b = run_protocol(scenario, BLK, IlluminationSpec(None, 8.0), cfg, seg)
    assert a.events == b.events
    assert a.channel_estimates == b.channel_estimates
    assert a.t_upd_samples_s == b.t_upd_samples_s


@settings(max_examples=12, deadline=None)
@given(st.integers(0, 10_000), st.floats(-5.0, 15.0), st.floats(0.1, 5.0))
def test_raising_threshold_never_reduces_reconfigurations(scenario, seed, thr_db, step_db):
    seg = sample_crossing(BLK, 1.0, seed)
    illum = IlluminationSpec(None, 0.0)
    low = run_protocol(scenario, BLK, illum, _cfg(thr_db, rng_seed=seed), seg)
    high = run_protocol(scenario, BLK, illum, _cfg(thr_db + step_db, rng_seed=seed), seg)
    assert high.count("reconfigure") >= low.count("reconfigure")


def test_run_many_seeds(scenario):
    traces = run_many(scenario, BLK, IlluminationSpec(None, 0.0), _cfg(), 0.75, 3, base_seed=40)
    assert [t.crossing_time_s for t in traces] == [
        sample_crossing(BLK, 0.75, 40 + i).duration_s for i in range(3)]


def test_update_period_is_seconds(scenario):
    traces = run_many(scenario, BLK, IlluminationSpec(None, 0.0), _cfg(), 1.0, 5)
    means = [t.mean_t_upd_s for t in traces if t.t_upd_samples_s]
    assert 0.5 <= float(np.mean(means)) <= 60.0
