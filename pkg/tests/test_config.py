import math

import pytest
import yaml

from windfound.config import (
    ConfigError,
    RunConfig,
    applied_defaults,
    config_from_dict,
    dump_config,
    parse_config,
)
from windfound.units import UnitError, parse_quantity


def write(tmp_path, data, name="run.yaml"):
    p = tmp_path / name
    p.write_text(yaml.safe_dump(data) if not isinstance(data, str) else data)
    return p


class TestParse:
    def test_minimal(self, tmp_path):
        cfg = parse_config(write(tmp_path, {"preset": "table1", "analysis": {"kind": "static"}}))
        assert cfg.analysis.kind == "static"
        assert cfg.geometry.base_radius == 0.9
        assert cfg.material_set()["soil"].cohesion == 17.6e3

    def test_empty_file_is_all_defaults(self, tmp_path):
        assert parse_config(write(tmp_path, "")) == RunConfig()

    def test_poisson_range_cited(self, tmp_path):
        p = write(tmp_path, {"materials": {"soil": {"nu": 0.6}}})
        with pytest.raises(ConfigError, match=r"materials.*[Pp]oisson"):
            parse_config(p)

    @pytest.mark.parametrize("data, path", [
        ({"geometry": {"base_radiuss": 1.0}}, "geometry.base_radiuss"),
        ({"analysis": {"solver": {"tolerance": 1}}}, "analysis.solver.tolerance"),
        ({"materials": {"granite": {}}}, "materials.granite"),
        ({"materials": {"soil": {"colour": 1}}}, "materials.soil.colour"),
        ({"wind": {"seed": 1.5}}, "wind.seed"),
        ({"analysis": {"bbar": "yes"}}, "analysis.bbar"),
        ({"loads": {"Fz": "12 furlongs"}}, "loads.Fz"),
    ])
    def test_errors_carry_key_path(self, data, path):
        with pytest.raises(ConfigError) as exc:
            config_from_dict(data)
        assert str(exc.value).startswith(path)

    def test_invalid_kind(self):
        with pytest.raises(ConfigError, match="kind"):
            config_from_dict({"analysis": {"kind": "dynamic"}})

    def test_invalid_yaml(self, tmp_path):
        with pytest.raises(ConfigError, match="YAML"):
            parse_config(write(tmp_path, "a: [1, 2"))

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="cannot read"):
            parse_config(tmp_path / "nope.yaml")

    def test_history_needs_mean_force(self):
        with pytest.raises(ConfigError, match="mean_force"):
            config_from_dict({"analysis": {"kind": "time_history"}})
        cfg = config_from_dict({"analysis": {"kind": "time_history"}, "loads": {"Fr": "2 kN"}})
        assert cfg.wind.mean_force is None and cfg.simplified_loads().Fr == 2000.0

    def test_turbine_and_simplified_exclusive(self):
        with pytest.raises(ConfigError, match="either"):
            config_from_dict({"loads": {"Fz": 1.0, "turbine": {"Fx": 3.0}}})

    def test_turbine_loads_simplified(self):
        cfg = config_from_dict({"loads": {"turbine": {"Fx": "3 kN", "Fy": "4 kN", "Mz": 9.0}}})
        loads = cfg.simplified_loads()
        assert loads.Fr == pytest.approx(5000.0)
        assert loads.dropped == (("Mz", 9.0),)

    def test_moment_follows_arm(self):
        cfg = config_from_dict({"loads": {"Fr": 100.0}, "analysis": {"moment_arm": "50 cm"}})
        assert cfg.simplified_loads().Mr == pytest.approx(50.0)


class TestUnits:
    @pytest.mark.parametrize("text, value", [
        ("17.6 kPa", 17.6e3), ("5 mm", 5e-3), ("2kN", 2e3), ("1.5 kN*m", 1.5e3), ("212.8 GPa", 212.8e9),
        ("10 min", 600.0), ("1.8 g/cm3", 1800.0), ("17.2 ue", 17.2e-6), ("-3e2 N", -300.0), (4, 4.0),
        ("inf", math.inf),
    ])
    def test_parse(self, text, value):
        assert parse_quantity(text) == pytest.approx(value)

    @pytest.mark.parametrize("bad", ["abc", "5 parsecs", True, None, [1]])
    def test_reject(self, bad):
        with pytest.raises(UnitError):
            parse_quantity(bad)

    def test_config_normalizes(self):
        cfg = config_from_dict({"materials": {"soil": {"cohesion": "20 kPa"}}, "geometry": {"base_radius": "80 cm"}})
        assert cfg.material_set()["soil"].cohesion == 20e3
        assert cfg.geometry.base_radius == pytest.approx(0.8)


class TestRoundTrip:
    @pytest.mark.parametrize("data", [
        {},
        {"analysis": {"kind": "pushover", "load_cap": "30 kN", "solver": {"max_cutbacks": 4}}},
        {"analysis": {"kind": "time_history"}, "loads": {"Fz": "5 kN", "Fr": "1 kN"},
         "wind": {"dt": 5.0, "hold": 20.0}, "output": {"formats": ["csv"]}},
        {"materials": {"soil": {"cohesion": 20e3, "dilation_angle": 5.0}}, "geometry": {"far_field": "lateral"}},
        {"loads": {"turbine": {"Fx": 1.0, "My": 2.0}}},
    ])
    def test_dump_parse_identical(self, data, tmp_path):
        cfg = config_from_dict(data)
        again = parse_config(write(tmp_path, dump_config(cfg)))
        assert again == cfg
        assert again.digest() == cfg.digest()
        assert dump_config(again) == dump_config(cfg)

    def test_digest_sensitive(self):
        assert config_from_dict({}).digest() != config_from_dict({"wind": {"seed": 1}}).digest()


def test_applied_defaults():
    data = {"analysis": {"kind": "static"}, "loads": {"Fz": 1.0}}
    got = applied_defaults(data)
    assert "geometry" in got and "analysis.interface" in got and "loads.Fr" in got
    assert "analysis.kind" not in got and "loads.Fz" not in got
