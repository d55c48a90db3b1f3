import json
from pathlib import Path

import pytest

from mubspectra.config import (
    _FIELD_NAMES,
    _JSON_TYPES,
    ExperimentConfig,
    ExperimentFlags,
)


class TestExperimentConfig:
    def test_defaults(self):
        config = ExperimentConfig()
        assert (config.n, config.bases, config.p) == (13, 14, 6)
        assert config.out == Path("out")
        assert config.ks_threshold == 0.08
        assert config.dimensions == (13,)
        assert not config.below_sqrt_bound

    def test_explicit_bases(self):
        config = ExperimentConfig(n=25, m=4)
        assert config.bases == 4
        assert config.below_sqrt_bound

    @pytest.mark.parametrize(
        "kwargs, message",
        [
            ({"n": 1}, "at least 2"),
            ({"n": 3, "m": 5}, "m <= n\\+1"),
            ({"m": 0}, "m <= n\\+1"),
            ({"y": 1.0}, "must lie in"),
            ({"n": 3, "y": 0.1}, "p = round"),
            ({"trials": 0}, "at least one trial"),
            ({"seed": -1}, "64 unsigned bits"),
            ({"lmax": 9}, "lmax"),
            ({"bins": 0}, "at least one bin"),
            ({"workers": 0}, "at least one worker"),
            ({"ks_threshold": 0}, "must be positive"),
        ],
    )
    def test_rejects(self, kwargs, message):
        with pytest.raises(ValueError, match=message):
            ExperimentConfig(**kwargs)

    def test_for_dimension(self):
        config = ExperimentConfig(sweep=(13, 31, 61))
        assert config.dimensions == (13, 31, 61)
        sub = config.for_dimension(31)
        assert (sub.n, sub.bases, sub.p, sub.sweep) == (31, 32, 16, ())

    def test_to_dict_is_json(self):
        payload = ExperimentConfig(sweep=(3, 5), basis=Path("b.json")).to_dict()
        text = json.dumps(payload)
        assert '"sweep": [3, 5]' in text
        assert payload["p"] == 6 and payload["bases"] == 14


class TestFromRuntimeArgs:
    def test_no_arguments_gives_defaults(self):
        assert ExperimentConfig.from_runtime_args(ExperimentFlags()) == (
            ExperimentConfig()
        )

    def test_flags_override_defaults(self):
        flags = ExperimentFlags(n=5, trials=3, sweep=[3, 5], out=Path("x"))
        config = ExperimentConfig.from_runtime_args(flags)
        assert (config.n, config.trials, config.sweep) == (5, 3, (3, 5))
        assert config.out == Path("x")

    def test_file_then_flags(self, tmp_path):
        path = tmp_path / "c.json"
        path.write_text(json.dumps({"n": 31, "trials": 7, "out": "results"}))
        config = ExperimentConfig.from_runtime_args(ExperimentFlags(trials=3), path)
        assert (config.n, config.trials) == (31, 3)
        assert config.out == Path("results")

    def test_config_flag(self, tmp_path):
        path = tmp_path / "c.json"
        path.write_text(json.dumps({"y": 0.25, "sweep": [13, 31]}))
        config = ExperimentConfig.from_runtime_args(ExperimentFlags(config=path))
        assert config.y == 0.25
        assert config.sweep == (13, 31)

    def test_unknown_key(self, tmp_path):
        path = tmp_path / "c.json"
        path.write_text(json.dumps({"n": 5, "colour": "blue"}))
        with pytest.raises(ValueError, match="Unknown keys.*colour"):
            ExperimentConfig.from_runtime_args(ExperimentFlags(), path)

    def test_unreadable_file(self, tmp_path):
        with pytest.raises(ValueError, match="Cannot read"):
            ExperimentConfig.from_runtime_args(
                ExperimentFlags(), tmp_path / "missing.json"
            )

    def test_non_object_file(self, tmp_path):
        path = tmp_path / "c.json"
        path.write_text("[1, 2]")
        with pytest.raises(ValueError, match="JSON object"):
            ExperimentConfig.from_runtime_args(ExperimentFlags(), path)

    def test_invalid_values_surface(self):
        with pytest.raises(ValueError, match="at least one trial"):
            ExperimentConfig.from_runtime_args(ExperimentFlags(trials=0))

    @pytest.mark.parametrize(
        "payload",
        [
            {"n": "13"},
            {"n": 13.0},
            {"trials": True},
            {"y": "0.5"},
            {"m": [4]},
            {"out": 3},
            {"sweep": 13},
            {"sweep": [13, "31"]},
            {"verbose": 1},
        ],
    )
    def test_wrong_types(self, tmp_path, payload):
        path = tmp_path / "c.json"
        path.write_text(json.dumps(payload))
        key = next(iter(payload))
        with pytest.raises(ValueError, match=f"Config key '{key}'.*must be"):
            ExperimentConfig.from_runtime_args(ExperimentFlags(), path)

    def test_accepted_types(self, tmp_path):
        path = tmp_path / "c.json"
        payload = {"m": None, "y": 1 / 3, "ks_threshold": 1, "basis": None}
        path.write_text(json.dumps(payload))
        config = ExperimentConfig.from_runtime_args(ExperimentFlags(), path)
        assert (config.m, config.ks_threshold, config.basis) == (None, 1, None)

    def test_every_field_has_a_json_type(self):
        assert set(_JSON_TYPES) == set(_FIELD_NAMES)
