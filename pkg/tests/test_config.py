import pytest

from onsketch.config import default_checkpoints, make_config, parse_config
from onsketch.errors import InvalidConfig


class TestMakeConfig:
    def test_minimal_config_fully_populated(self):
        cfg = make_config(model="linear", d=2)
        assert cfg.model == "linear" and cfg.d == 2
        assert cfg.design == "identity"
        assert cfg.sigma2 == 1.0
        assert cfg.sketch == "kaczmarz" and cfg.columns == 1
        assert cfg.tau == 5
        assert cfg.gamma_mode == "estimated"
        assert cfg.steps == 200_000
        assert cfg.reps == 200
        assert cfg.c_phi == 1.0 and cfg.phi == 0.501
        assert cfg.refresh_every == 1
        assert cfg.q == 0.05
        assert cfg.checkpoints[-1] == cfg.steps
        assert cfg.out is None

    def test_exact_tau_sentinel(self):
        assert make_config(tau="exact").tau is None
        assert make_config(tau=None).tau is None
        assert make_config(tau="7").tau == 7

    def test_steps_default_scales_with_dimension(self):
        assert make_config(d=10).steps == 200_000
        assert make_config(d=11).steps == 400_000

    def test_phi_range_rejected(self):
        with pytest.raises(InvalidConfig, match="phi"):
            make_config(phi=0.4)
        with pytest.raises(InvalidConfig, match="phi"):
            make_config(phi=1.2)

    def test_unknown_key_rejected(self):
        with pytest.raises(InvalidConfig, match="turbo"):
            make_config(turbo=1)

    def test_error_messages_name_the_key(self):
        for key, value in [
            ("q", 1.5),
            ("r", 1.0),
            ("sigma2", 0.0),
            ("reps", 0),
            ("steps", 0),
            ("d", 0),
            ("refresh_every", 0),
            ("mc_samples_mu_nu", 1),
            ("seed", -3),
        ]:
            with pytest.raises(InvalidConfig, match=key):
                make_config(**{key: value})

    def test_kaczmarz_forces_single_column(self):
        with pytest.raises(InvalidConfig, match="columns"):
            make_config(sketch="kaczmarz", columns=2)
        assert make_config(sketch="gaussian", columns=3).columns == 3

    def test_checkpoints_parse_and_validate(self):
        cfg = make_config(steps=1000, checkpoints="100, 500,1000")
        assert cfg.checkpoints == (100, 500, 1000)
        with pytest.raises(InvalidConfig, match="checkpoints"):
            make_config(steps=1000, checkpoints="2000")

    def test_tau_parse_error(self):
        with pytest.raises(InvalidConfig, match="tau"):
            make_config(tau="sometimes")


def test_default_checkpoints_geometric():
    cps = default_checkpoints(200_000)
    assert cps[-1] == 200_000
    assert cps[0] >= 98
    ratios = [b / a for a, b in zip(cps, cps[1:])]
    assert all(1.9 < r < 2.1 for r in ratios)
    assert default_checkpoints(50) == (50,)


class TestParseConfig:
    def test_file_roundtrip(self, tmp_path):
        path = tmp_path / "exp.cfg"
        path.write_text(
            "# comment line\n"
            "model = logistic\n"
            "d = 4\n"
            "tau = exact\n"
            "design = toeplitz\n"
            "r = 0.4\n"
            "steps = 5000\n"
        )
        cfg = parse_config(path)
        assert cfg.model == "logistic"
        assert cfg.d == 4
        assert cfg.tau is None
        assert cfg.design == "toeplitz"
        assert cfg.steps == 5000

    def test_flags_override_file(self, tmp_path):
        path = tmp_path / "exp.cfg"
        path.write_text("d = 4\nsteps = 5000\n")
        cfg = parse_config(path, {"d": "6", "reps": 10})
        assert cfg.d == 6
        assert cfg.steps == 5000
        assert cfg.reps == 10

    def test_unknown_file_key(self, tmp_path):
        path = tmp_path / "exp.cfg"
        path.write_text("frobnicate = 3\n")
        with pytest.raises(InvalidConfig, match="frobnicate"):
            parse_config(path)

    def test_malformed_line(self, tmp_path):
        path = tmp_path / "exp.cfg"
        path.write_text("model linear\n")
        with pytest.raises(InvalidConfig, match="key = value"):
            parse_config(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(InvalidConfig, match="not found"):
            parse_config(tmp_path / "nope.cfg")


def test_as_dict_round_trips_tau():
    assert make_config(tau="exact").as_dict()["tau"] == "exact"
    assert make_config(tau=9).as_dict()["tau"] == 9
