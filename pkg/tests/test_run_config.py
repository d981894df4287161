"""
Tests de la configuración de corridas (YAML -> RunConfig)
"""

import pytest
import yaml

from modules.run_config import ConfigError, RunConfig, parse_config


def write_yaml(tmp_path, data, name="run.yaml"):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(data), encoding="utf-8")
    return path


class TestDefaults:
    """Valores por defecto de config.py"""

    def test_minimal_config(self):
        config = parse_config({"experiment": "simulate"})
        assert config.solver.epsilon == 0.05
        assert config.solver.delta == 0.0025
        assert config.flux.preset == "burgers1d"
        assert config.noise.preset == "noise-linear"
        assert config.ensemble.seed == 20240601
        assert config.section is None

    def test_experiment_from_cli(self):
        config = parse_config(None, experiment="energy-check")
        assert config.experiment == "energy-check"
        assert config.section.c0_override is None

    def test_default_flux_in_2d(self):
        config = parse_config({"experiment": "simulate",
                               "solver": {"dim": 2, "n_per_axis": 16}})
        assert config.flux.preset == "stream2d-smooth"

    def test_default_ladder(self):
        config = parse_config({"experiment": "limit-study",
                               "limit_study": {"k_min": 2, "k_max": 4}})
        levels = config.levels()
        assert [lv.k for lv in levels] == [2, 3, 4]
        assert levels[-1].delta == pytest.approx(4.0 ** -4)


class TestRejections:
    """Claves desconocidas y restricciones violadas"""

    def test_unknown_section(self):
        with pytest.raises(ConfigError, match="Sección desconocida"):
            parse_config({"experiment": "simulate", "plots": {}})

    def test_unknown_key(self):
        with pytest.raises(ConfigError, match="Clave desconocida 'eps'"):
            parse_config({"experiment": "simulate", "solver": {"eps": 0.1}})

    def test_missing_experiment(self):
        with pytest.raises(ConfigError, match="experiment"):
            parse_config({"solver": {}})

    def test_unknown_experiment(self):
        with pytest.raises(ConfigError, match="desconocido"):
            parse_config({"experiment": "plot"})

    def test_cli_and_file_disagree(self):
        with pytest.raises(ConfigError, match="se pidió"):
            parse_config({"experiment": "simulate"}, experiment="energy-check")

    def test_section_of_other_experiment(self):
        with pytest.raises(ConfigError, match="no corresponde"):
            parse_config({"experiment": "simulate", "energy": {"c0_override": 1.0}})

    @pytest.mark.parametrize("solver", [
        {"epsilon": 0.0},
        {"delta": 0.75},
        {"dt": 0.3, "T": 1.0},
        {"n_per_axis": 15},
    ])
    def test_invalid_solver(self, solver):
        with pytest.raises(ConfigError):
            parse_config({"experiment": "simulate", "solver": solver})

    def test_flux_dimension_mismatch(self):
        with pytest.raises(ConfigError, match="dimensión"):
            parse_config({"experiment": "simulate", "flux": {"preset": "stream2d-rough"}})

    def test_unknown_flux_parameter(self):
        with pytest.raises(ConfigError, match="Parámetros inválidos"):
            parse_config({"experiment": "simulate",
                          "flux": {"preset": "burgers1d", "params": {"wiggle": 1}}})

    def test_product_requires_2d(self):
        with pytest.raises(ConfigError, match="dim = 2"):
            parse_config({"experiment": "simulate", "initial_condition": {"kind": "product"}})

    def test_singular_scaling_violation(self):
        data = {"experiment": "limit-study",
                "limit_study": {"levels": [{"k": 1, "epsilon": 0.1, "delta": 0.02}]}}
        with pytest.raises(ConfigError, match="exceeds bound"):
            parse_config(data)

    def test_scaling_message_names_condition_and_bound(self):
        data = {"experiment": "limit-study", "thresholds": {"neps_bound": 1.5},
                "limit_study": {"levels": [{"k": 1, "epsilon": 0.1, "delta": 0.02}]}}
        with pytest.raises(ConfigError, match=r"condición neps.*neps_bound = 1\.5"):
            parse_config(data)

    def test_level_without_delta(self):
        data = {"experiment": "limit-study", "limit_study": {"levels": [{"epsilon": 0.1}]}}
        with pytest.raises(ConfigError, match="epsilon y delta"):
            parse_config(data)

    def test_convergence_dt_not_dividing_horizon(self):
        data = {"experiment": "convergence-check", "solver": {"T": 1.0},
                "convergence": {"dts": [0.3]}}
        with pytest.raises(ConfigError, match="múltiplo"):
            parse_config(data)

    def test_invalid_ensemble(self):
        with pytest.raises(ConfigError, match="n_paths"):
            parse_config({"experiment": "energy-check", "ensemble": {"n_paths": 0}})

    def test_nondegeneracy_box(self):
        with pytest.raises(ConfigError, match="lambda_box"):
            parse_config({"experiment": "nondegeneracy",
                          "nondegeneracy": {"lambda_box": [1.0, -1.0]}})


class TestFiles:
    """Lectura, escritura y eco"""

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="no encontrado"):
            parse_config(tmp_path / "nope.yaml")

    def test_invalid_yaml(self, tmp_path):
        path = tmp_path / "bad.yaml"
        path.write_text("experiment: [simulate\n", encoding="utf-8")
        with pytest.raises(ConfigError, match="YAML inválido"):
            parse_config(path)

    def test_save_load_roundtrip(self, tmp_path):
        config = parse_config({"experiment": "energy-check",
                               "noise": {"preset": "noise-const", "params": {"sigma": 0.1}},
                               "energy": {"c0_override": 2.0}})
        config.save(tmp_path / "saved.yaml")
        loaded = RunConfig.load(tmp_path / "saved.yaml")
        assert loaded.to_dict() == config.to_dict()
        assert loaded.build_noise().sigma == 0.1

    def test_overrides(self, tmp_path):
        path = write_yaml(tmp_path, {"experiment": "simulate", "ensemble": {"seed": 3}})
        config = parse_config(path, overrides={"seed": 9, "paths": 5, "threads": 2,
                                               "out": str(tmp_path / "o")})
        assert config.ensemble.seed == 9
        assert config.ensemble.n_paths == 5
        assert config.out_dir == tmp_path / "o"

    def test_echo_excludes_run_only_fields(self):
        a = parse_config({"experiment": "simulate"}, overrides={"out": "a", "threads": 1})
        b = parse_config({"experiment": "simulate"}, overrides={"out": "b", "threads": 4})
        assert a.echo() == b.echo()
        assert "dir" not in a.echo()["output"]
        assert "threads" not in a.echo()["ensemble"]
