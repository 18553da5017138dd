import json

import numpy as np
import pytest

from driftvqe.drift import (
    DriftEpisode,
    DriftTrace,
    EpisodeRate,
    NoiseConfig,
    TraceFormatError,
    apply_drift,
    generate_trace,
    load_trace,
    save_trace,
    zero_trace,
)


class TestGeneration:
    def test_zero_config_is_all_zeros(self):
        tr = generate_trace(NoiseConfig(horizon_jobs=50))
        assert tr.offsets == (0.0,) * 50
        assert zero_trace(50).offsets == (0.0,) * 50

    def test_step_episode_definition(self):
        cfg = NoiseConfig(
            horizon_jobs=20, episodes=(DriftEpisode(10, 5, 0.1, "STEP"),)
        )
        tr = generate_trace(cfg)
        assert tr.offsets[9] == 0.0
        assert tr.offsets[10:15] == (0.1,) * 5
        assert tr.offsets[15] == 0.0

    def test_spike_decays_from_onset(self):
        cfg = NoiseConfig(horizon_jobs=10, episodes=(DriftEpisode(2, 4, 0.2, "SPIKE"),))
        off = generate_trace(cfg).offsets
        assert off[2] == pytest.approx(0.2)
        assert off[2] > off[3] > off[4] > off[5] > 0.0
        assert off[6] == 0.0

    def test_single_job_spike_is_impulse(self):
        cfg = NoiseConfig(horizon_jobs=5, episodes=(DriftEpisode(2, 1, -0.3, "SPIKE"),))
        assert generate_trace(cfg).offsets == (0.0, 0.0, -0.3, 0.0, 0.0)

    def test_ramp_reaches_magnitude_on_last_job(self):
        cfg = NoiseConfig(horizon_jobs=10, episodes=(DriftEpisode(1, 4, 0.4, "RAMP"),))
        off = generate_trace(cfg).offsets
        assert off[1] == pytest.approx(0.1)
        assert off[4] == pytest.approx(0.4)
        assert off[5] == 0.0

    def test_random_walk_is_seeded_and_nonzero(self):
        cfg = NoiseConfig(
            horizon_jobs=30, seed=4, episodes=(DriftEpisode(5, 20, 0.05, "RANDOM_WALK"),)
        )
        a = generate_trace(cfg).offsets
        b = generate_trace(cfg).offsets
        assert a == b
        assert any(v != 0.0 for v in a[5:25])
        assert a[:5] == (0.0,) * 5 and a[25:] == (0.0,) * 5

    def test_determinism_full_config(self):
        cfg = NoiseConfig(
            horizon_jobs=200,
            seed=9,
            baseline_std=0.01,
            rates={
                "STEP": EpisodeRate(0.02, (0.05, 0.2), (3, 12)),
                "SPIKE": EpisodeRate(0.01, (0.1, 0.3), (1, 3)),
            },
        )
        t1, t2 = generate_trace(cfg), generate_trace(cfg)
        assert t1.offsets == t2.offsets
        assert t1.episodes == t2.episodes

    def test_superposition_of_episodes(self):
        e1 = DriftEpisode(3, 6, 0.2, "STEP")
        e2 = DriftEpisode(5, 10, -0.15, "RANDOM_WALK")
        both = generate_trace(NoiseConfig(horizon_jobs=40, seed=8, episodes=(e1, e2)))
        only1 = generate_trace(NoiseConfig(horizon_jobs=40, seed=8, episodes=(e1,)))
        only2 = generate_trace(NoiseConfig(horizon_jobs=40, seed=8, episodes=(e2,)))
        assert np.allclose(
            np.array(both.offsets),
            np.array(only1.offsets) + np.array(only2.offsets),
            atol=1e-15,
        )

    def test_rate_sampled_episodes_stay_in_horizon(self):
        cfg = NoiseConfig(
            horizon_jobs=100,
            seed=2,
            rates={"STEP": EpisodeRate(0.05, (0.05, 0.1), (5, 30))},
        )
        tr = generate_trace(cfg)
        assert len(tr.episodes) > 0
        assert all(0 <= e.start_job < 100 for e in tr.episodes)

    def test_spread_reproduction_target(self):
        # wandering trace around a -0.62 batch mean with a range near 0.22
        cfg = NoiseConfig(
            horizon_jobs=100,
            seed=5,
            baseline_std=0.01,
            episodes=(DriftEpisode(0, 100, 0.015, "RANDOM_WALK"),),
        )
        means = -0.62 + np.array(generate_trace(cfg).offsets)
        spread = means.max() - means.min()
        assert 0.15 < spread < 0.30
        assert -0.70 < means.mean() < -0.55

    def test_validation(self):
        with pytest.raises(ValueError):
            DriftEpisode(0, 0, 0.1, "STEP")
        with pytest.raises(ValueError):
            DriftEpisode(0, 5, 0.1, "BLIP")
        with pytest.raises(ValueError):
            NoiseConfig(horizon_jobs=0)
        with pytest.raises(ValueError):
            NoiseConfig(horizon_jobs=5, baseline_std=-1)
        with pytest.raises(ValueError):
            NoiseConfig(horizon_jobs=5, energy_scale=0.0)
        with pytest.raises(ValueError):
            EpisodeRate(rate_per_job=-0.1)


class TestApplyDrift:
    def test_identity_when_offset_zero(self):
        tr = zero_trace(10)
        assert apply_drift(-0.62, tr, 3, 1.0) == -0.62

    def test_scaling_arithmetic(self):
        cfg = NoiseConfig(horizon_jobs=4, episodes=(DriftEpisode(2, 1, 0.11, "STEP"),))
        tr = generate_trace(cfg)
        assert apply_drift(-0.62, tr, 2, 2.0) == pytest.approx(-0.40)

    def test_job_out_of_range(self):
        tr = zero_trace(5)
        with pytest.raises(IndexError):
            apply_drift(0.0, tr, 5, 1.0)
        with pytest.raises(IndexError):
            apply_drift(0.0, tr, -1, 1.0)


class TestPersistence:
    def _trace(self):
        cfg = NoiseConfig(
            horizon_jobs=60,
            seed=21,
            baseline_std=0.004,
            rates={"STEP": EpisodeRate(0.03, (0.05, 0.15), (2, 8))},
            episodes=(DriftEpisode(7, 3, -0.2, "SPIKE"),),
        )
        return generate_trace(cfg)

    def test_round_trip(self, tmp_path):
        tr = self._trace()
        path = tmp_path / "trace.json"
        save_trace(tr, path)
        back = load_trace(path)
        assert back.offsets == tr.offsets
        assert back.config == tr.config
        assert back.episodes == tr.episodes

    def test_regenerate_from_embedded_config(self, tmp_path):
        tr = self._trace()
        path = tmp_path / "trace.json"
        save_trace(tr, path)
        back = load_trace(path)
        assert generate_trace(back.config).offsets == tr.offsets

    def test_truncated_file_is_format_error(self, tmp_path):
        tr = self._trace()
        path = tmp_path / "trace.json"
        save_trace(tr, path)
        text = path.read_text()
        path.write_text(text[: len(text) // 2])
        with pytest.raises(TraceFormatError):
            load_trace(path)

    def test_missing_fields_is_format_error(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"seed": 3}))
        with pytest.raises(TraceFormatError, match="config"):
            load_trace(path)

    def test_offsets_horizon_mismatch_rejected(self):
        cfg = NoiseConfig(horizon_jobs=5)
        with pytest.raises(TraceFormatError):
            DriftTrace(offsets=(0.0,) * 4, config=cfg, episodes=())
