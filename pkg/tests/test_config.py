"""Config parsing: defaults, precise errors, presets, round trip."""

import pytest

from oodlab.config import (
    ConfigError,
    ExperimentConfig,
    PRESETS,
    parse_config,
    preset_config,
    serialize_config,
)


MINIMAL = "[method]\nmethod = see_ood\n"


class TestParsing:
    def test_minimal_fills_defaults(self):
        cfg = parse_config(MINIMAL)
        assert cfg.method == "see_ood"
        assert cfg.train.iterations == 2000
        assert cfg.train.batch_ind == 64
        assert cfg.tnr_targets == (0.95, 0.99)
        assert cfg.replications == 3
        assert cfg.grid.resolution == 200
        assert cfg.data_source == "builtin"

    def test_empty_train_section_keeps_defaults(self):
        cfg = parse_config(MINIMAL + "\n[train]\n")
        assert cfg.train.iterations == 2000
        assert cfg.train.lr_d == pytest.approx(1e-4)

    def test_values_override(self):
        text = MINIMAL + (
            "[train]\n"
            "iterations = 50\n"
            "discriminator_arch = 2 32 3\n"
            "[eval]\n"
            "tnr_targets = 0.9 0.95\n"
            "grid_resolution = 50\n"
        )
        cfg = parse_config(text)
        assert cfg.train.iterations == 50
        assert cfg.train.discriminator_arch == (2, 32, 3)
        assert cfg.tnr_targets == (0.9, 0.95)
        assert cfg.grid.resolution == 50

    def test_comments_and_blanks_ignored(self):
        text = "# top\n\n[method]\n; note\nmethod = wood\n"
        assert parse_config(text).method == "wood"

    def test_missing_method_rejected(self):
        with pytest.raises(ConfigError, match="method"):
            parse_config("[train]\niterations = 5\n")

    def test_unknown_key_names_key_and_line(self):
        with pytest.raises(ConfigError, match=r"line 3.*'momentum'"):
            parse_config("[method]\nmethod = wood\nmomentum = 0.9\n")

    def test_unknown_section_names_line(self):
        with pytest.raises(ConfigError, match=r"line 1.*optimizer"):
            parse_config("[optimizer]\n")

    def test_invalid_value_names_key_and_line(self):
        with pytest.raises(ConfigError, match=r"line 4.*'iterations'"):
            parse_config("[method]\nmethod = wood\n[train]\niterations = soon\n")

    def test_zero_replications_rejected(self):
        with pytest.raises(ConfigError):
            parse_config(MINIMAL + "[eval]\nreplications = 0\n")

    def test_bad_tnr_rejected(self):
        with pytest.raises(ConfigError):
            parse_config(MINIMAL + "[eval]\ntnr_targets = 1.5\n")

    def test_duplicate_key_rejected(self):
        with pytest.raises(ConfigError, match="duplicate"):
            parse_config(MINIMAL + "[train]\nn_d = 1\nn_d = 2\n")

    def test_csv_source_requires_path(self):
        with pytest.raises(ConfigError, match="path"):
            parse_config(MINIMAL + "[data]\nsource = csv\n")

    def test_bad_method_value(self):
        with pytest.raises(ConfigError, match="method"):
            parse_config("[method]\nmethod = extra\n")


class TestPresets:
    def test_known_names(self):
        assert set(PRESETS) == {"setting1", "setting2", "wood2d"}

    def test_setting1_tuple(self):
        cfg = preset_config("setting1")
        t = cfg.train
        assert (t.beta_ood, t.beta_z, t.n_d, t.n_g, t.lr_d, t.lr_g) == (
            1.0, 0.001, 2, 1, 0.0001, 0.0001)
        assert cfg.method == "see_ood"
        assert cfg.ood_subsample == 2

    def test_setting2_tuple(self):
        t = preset_config("setting2").train
        assert (t.beta_ood, t.beta_z, t.n_d, t.n_g, t.lr_d, t.lr_g) == (
            1.0, 100.0, 1, 3, 0.0001, 0.001)

    def test_wood2d_values(self):
        cfg = preset_config("wood2d")
        assert cfg.method == "wood"
        assert cfg.train.beta_ood == 1.0
        assert cfg.train.lr_d == pytest.approx(1e-3)

    def test_adam_moments_shared(self):
        for name in PRESETS:
            t = preset_config(name).train
            assert (t.adam_beta1, t.adam_beta2) == (0.5, 0.999)

    def test_preset_in_file_with_overrides(self):
        text = "[method]\npreset = setting1\n[train]\niterations = 7\n"
        cfg = parse_config(text)
        assert cfg.train.iterations == 7
        assert cfg.train.n_d == 2

    def test_unknown_preset(self):
        with pytest.raises(ConfigError, match="preset"):
            parse_config("[method]\npreset = setting9\n")


class TestRoundTrip:
    def test_setting1_round_trips(self):
        original = preset_config("setting1")
        assert parse_config(serialize_config(original)) == original

    @pytest.mark.parametrize("name", sorted(PRESETS))
    def test_all_presets_round_trip(self, name):
        original = preset_config(name)
        assert parse_config(serialize_config(original)) == original

    def test_custom_config_round_trips(self):
        cfg = parse_config(MINIMAL + (
            "[data]\nsource = builtin\nood_subsample = 5\n"
            "[eval]\ntnr_targets = 0.9\nreplications = 2\noutput_dir = results\n"
        ))
        assert parse_config(serialize_config(cfg)) == cfg


class TestExperimentConfigValidation:
    def test_replications_floor(self):
        with pytest.raises(ConfigError):
            ExperimentConfig(replications=0)

    def test_negative_subsample(self):
        with pytest.raises(ConfigError):
            ExperimentConfig(ood_subsample=-1)
