import logging

import numpy as np
import pytest

from distpsz.dsp import SignalHistory
from distpsz.errors import ConfigError, DataError, DimensionError, PlantFileNotFound
from distpsz.plants import (
    PlantSet,
    SynthRirSpec,
    load_plant_set,
    perturb_plants,
    propagate,
    read_meta,
    save_plant_set,
    synth_plant_set,
)


def _plants(rng, M=2, L=3, J=5):
    return PlantSet(rng.standard_normal((M, L, J)), rng.standard_normal((M, L, J)))


class TestPlantSet:
    def test_shape_properties(self, rng):
        p = _plants(rng)
        assert (p.M, p.L, p.J) == (2, 3, 5)

    def test_rejects_non_finite(self):
        b = np.zeros((1, 1, 3))
        b[0, 0, 1] = np.nan
        with pytest.raises(DataError):
            PlantSet(b, np.zeros((1, 1, 3)))

    def test_rejects_mismatched_zones(self):
        with pytest.raises(DimensionError):
            PlantSet(np.zeros((1, 1, 3)), np.zeros((1, 2, 3)))

    def test_immutable(self, rng):
        with pytest.raises(ValueError):
            _plants(rng).bright[0, 0, 0] = 1.0


class TestFiles:
    def test_round_trip_bit_exact(self, rng, tmp_path):
        p = _plants(rng)
        save_plant_set(p, tmp_path)
        q = load_plant_set(tmp_path, p.L, p.M, p.J)
        assert np.array_equal(p.bright, q.bright) and np.array_equal(p.dark, q.dark)
        assert read_meta(tmp_path) == {"L": "3", "M": "2", "J": "5", "sample_rate": "4000.0"}

    def test_file_naming_and_layout(self, tmp_path):
        b = np.zeros((2, 3, 4))
        b[1, 2] = [1, 2, 3, 4]
        save_plant_set(PlantSet(b, np.zeros_like(b)), tmp_path)
        raw = (tmp_path / "bright_2_1.f64").read_bytes()
        np.testing.assert_array_equal(np.frombuffer(raw, dtype="<f8"), [1, 2, 3, 4])

    def test_all_zero_files(self, tmp_path):
        save_plant_set(PlantSet(np.zeros((2, 2, 3)), np.zeros((2, 2, 3))), tmp_path)
        q = load_plant_set(tmp_path, 2, 2, 3)
        assert not q.bright.any() and not q.dark.any()

    def test_truncates_long_files(self, rng, tmp_path, caplog):
        p = _plants(rng, J=10)
        save_plant_set(p, tmp_path)
        with caplog.at_level(logging.WARNING):
            q = load_plant_set(tmp_path, p.L, p.M, 4)
        np.testing.assert_array_equal(q.bright, p.bright[..., :4])
        assert "truncated" in caplog.text

    def test_zero_pads_short_files(self, rng, tmp_path):
        p = _plants(rng, J=3)
        save_plant_set(p, tmp_path)
        q = load_plant_set(tmp_path, p.L, p.M, 6)
        np.testing.assert_array_equal(q.dark[..., :3], p.dark)
        assert not q.dark[..., 3:].any()

    def test_missing_file_names_triple(self, rng, tmp_path):
        save_plant_set(_plants(rng), tmp_path)
        (tmp_path / "dark_1_0.f64").unlink()
        with pytest.raises(PlantFileNotFound) as err:
            load_plant_set(tmp_path, 3, 2, 5)
        assert (err.value.zone, err.value.l, err.value.m) == ("dark", 1, 0)

    def test_non_finite_file(self, rng, tmp_path):
        save_plant_set(_plants(rng), tmp_path)
        np.array([1.0, np.inf], dtype="<f8").tofile(tmp_path / "bright_0_0.f64")
        with pytest.raises(DataError):
            load_plant_set(tmp_path, 3, 2, 5)


class TestSynth:
    def test_deterministic(self):
        spec = SynthRirSpec(J=32, seed=5)
        a, b = synth_plant_set(spec, 3, 3), synth_plant_set(spec, 3, 3)
        assert np.array_equal(a.bright, b.bright) and np.array_equal(a.dark, b.dark)

    def test_no_tail_gives_single_tap(self):
        spec = SynthRirSpec(J=16, direct_delay_range=(2, 9), tail_scale=0.0, gain=1.0,
                            ring_coupling=1.0, decay_rate=1e-9)
        p = synth_plant_set(spec, 2, 2)
        for h in p.bright.reshape(-1, 16):
            nz = np.flatnonzero(h)
            assert nz.size == 1 and h[nz[0]] == 1.0 and 2 <= nz[0] <= 9

    def test_dark_attenuation_and_coupling(self):
        spec = SynthRirSpec(J=16, direct_delay_range=(1, 6), tail_scale=0.0, gain=1.0, dark_attenuation=0.25,
                            ring_coupling=0.5)
        p = synth_plant_set(spec, 4, 4)
        peaks_b = np.abs(p.bright).max(axis=-1)
        peaks_d = np.abs(p.dark).max(axis=-1)
        # ring distance between mic m and loudspeaker l on a 4-ring
        dist = np.array([[min(abs(m - l), 4 - abs(m - l)) for l in range(4)] for m in range(4)])
        np.testing.assert_allclose(peaks_b, 0.5 ** dist)
        np.testing.assert_allclose(peaks_d, 0.25 * 0.5 ** dist)

    def test_tail_envelope(self):
        """|tail[j]| <= scale * decay^j * max|draw|, and the envelope holds statistically."""
        J, decay, scale = 64, 0.9, 0.3
        spec_kw = dict(J=J, direct_delay_range=(0, 0), decay_rate=decay, tail_scale=scale,
                       gain=1.0, ring_coupling=1.0)
        env = scale * decay ** np.arange(J)
        tails = []
        for seed in range(100):
            h = synth_plant_set(SynthRirSpec(seed=seed, **spec_kw), 1, 1).bright[0, 0]
            tail = h[1:]
            tails.append(tail / env[1:])
        tails = np.array(tails)
        draws_bound = np.abs(tails).max()
        assert draws_bound < 6.0  # max |N(0,1)| over 6300 draws
        # normalised tail is standard normal at every tap
        assert np.abs(tails.std(axis=0).mean() - 1.0) < 0.05
        assert np.abs(tails.mean()) < 0.05

    @pytest.mark.parametrize("kw", [
        dict(decay_rate=0.0), dict(decay_rate=1.0), dict(direct_delay_range=(0, 200)),
        dict(dark_attenuation=1.5), dict(gain=0.0), dict(ring_coupling=0.0),
    ])
    def test_invalid_spec(self, kw):
        with pytest.raises(ConfigError):
            synth_plant_set(SynthRirSpec(**kw), 2, 2)

    def test_perturbation_level(self):
        p = synth_plant_set(SynthRirSpec(J=128), 4, 4)
        q = perturb_plants(p, 20.0, seed=1)
        err = (q.bright - p.bright) ** 2
        ratio = err.mean(axis=-1) / (p.bright ** 2).mean(axis=-1)
        assert 10 * np.log10(ratio.mean()) == pytest.approx(-20.0, abs=0.5)


def _hist(seq, cap):
    h = SignalHistory(cap)
    h.extend(seq)
    return h


class TestPropagate:
    def test_identity_plant(self):
        p = PlantSet(np.array([[[1.0, 0, 0]]]), np.zeros((1, 1, 3)))
        assert propagate([_hist([4, 5, 6], 3)], p, "bright", 0) == 6.0

    def test_silent_loudspeakers(self, rng):
        p = _plants(rng, M=2, L=3, J=5)
        assert propagate([SignalHistory(5) for _ in range(3)], p, "dark", 1) == 0.0

    def test_double_sum(self):
        b = np.array([[[1.0, 1.0], [0.0, 2.0]]])
        p = PlantSet(b, np.zeros_like(b))
        # windows newest-first [1, 2] and [3, 4]
        u = [_hist([2, 1], 2), _hist([4, 3], 2)]
        assert propagate(u, p, "bright", 0) == 11.0

    def test_index_out_of_range(self, rng):
        p = _plants(rng)
        with pytest.raises(DimensionError):
            propagate([SignalHistory(5)] * 3, p, "bright", 2)

    def test_linear_in_signals(self, rng):
        p = _plants(rng, M=1, L=2, J=4)
        u1 = [rng.standard_normal(4) for _ in range(2)]
        u2 = [rng.standard_normal(4) for _ in range(2)]
        mix = [2 * a - 3 * b for a, b in zip(u1, u2)]
        assert propagate(mix, p, "bright", 0) == pytest.approx(
            2 * propagate(u1, p, "bright", 0) - 3 * propagate(u2, p, "bright", 0), rel=1e-12)
