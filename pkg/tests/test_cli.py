"""Config parsing, artifact layout, determinism and exit codes of the driver."""

import json

import numpy as np
import pytest

from gausstent import count_in_layer
from gausstent.cli import (
    DEFAULT_TOLERANCES,
    ConfigError,
    SessionConfig,
    dumps_config,
    loads_config,
    main,
    read_config,
)

SMALL_1D = """\
n = 1
R = 4.0
h = 0.03125
t_min = 0.03125
seed = 1
"""


@pytest.fixture()
def small_cfg(tmp_path):
    path = tmp_path / "session.cfg"
    path.write_text(SMALL_1D)
    return path


class TestConfig:
    def test_round_trip_random(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            p = int(rng.integers(0, 5))
            cfg = SessionConfig(
                n=int(rng.integers(1, 3)),
                q=float(rng.uniform(1.1, 5.0)),
                h=2.0 ** -int(rng.integers(3, 9)),
                t_min=2.0 ** -int(rng.integers(3, 9)),
                R=float(rng.uniform(0.5, 16.0)),
                p=p,
                kappa=int(rng.choice([0, p + 4, p + 5])),
                eta=float(rng.uniform(0.55, 0.95)),
                seed=int(rng.integers(0, 10**6)),
                tolerances={k: v * rng.uniform(0.5, 2.0) for k, v in DEFAULT_TOLERANCES.items()},
            )
            assert loads_config(dumps_config(cfg)) == cfg

    def test_empty_text_gives_defaults(self):
        assert loads_config("") == SessionConfig()

    def test_comments_and_blanks_skipped(self):
        cfg = loads_config("# a comment\n\nseed = 9\n")
        assert cfg.seed == 9

    def test_unknown_key(self):
        with pytest.raises(ConfigError, match="unknown key"):
            loads_config("volume = 11\n")

    def test_bad_value(self):
        with pytest.raises(ConfigError, match="bad value"):
            loads_config("n = banana\n")

    def test_missing_equals(self):
        with pytest.raises(ConfigError, match="expected"):
            loads_config("n 1\n")

    def test_validation(self):
        for bad in (
            {"n": 5},
            {"q": 1.0},
            {"eta": 0.4},
            {"R": -1.0},
            {"p": -1},
            {"tolerances": {"ball": -1e-9}},
        ):
            with pytest.raises(ConfigError):
                SessionConfig(**bad)

    def test_kappa_resolution(self):
        assert SessionConfig().kappa_resolved == 6
        assert SessionConfig(p=3).kappa_resolved == 7
        assert SessionConfig(kappa=9).kappa_resolved == 9

    def test_n3_has_no_lattice(self):
        cfg = SessionConfig(n=3)
        assert cfg.window().lower.shape == (3,)
        with pytest.raises(ConfigError):
            cfg.grid()

    def test_read_config_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="cannot read"):
            read_config(tmp_path / "absent.cfg")


class TestGridCommand:
    def test_counts_and_seed(self, small_cfg, tmp_path):
        out = tmp_path / "out"
        assert main(["--config", str(small_cfg), "--out", str(out), "grid"]) == 0
        payload = json.loads((out / "grid.json").read_text())
        assert payload["seed"] == 1
        for l_str, count in payload["counts"].items():
            assert count == count_in_layer(0, int(l_str), 1)
        # the closed window corner 4.0 already lies in layer 3
        assert payload["max_layer"] == 3

    def test_byte_determinism(self, small_cfg, tmp_path):
        outs = []
        for name in ("a", "b"):
            out = tmp_path / name
            assert main(["--config", str(small_cfg), "--out", str(out), "grid"]) == 0
            outs.append((out / "grid.json").read_bytes())
        assert outs[0] == outs[1]

    def test_seed_override(self, small_cfg, tmp_path):
        out = tmp_path / "out"
        assert main(["--config", str(small_cfg), "--out", str(out), "--seed", "42", "grid"]) == 0
        assert json.loads((out / "grid.json").read_text())["seed"] == 42

    def test_n2_writes_svg(self, tmp_path):
        cfg = tmp_path / "n2.cfg"
        cfg.write_text("n = 2\nR = 1.0\nh = 0.0625\nt_min = 0.0625\nseed = 7\n")
        out = tmp_path / "out"
        assert main(["--config", str(cfg), "--out", str(out), "grid"]) == 0
        doc = (out / "grid.svg").read_text()
        assert doc.startswith("<!-- seed = 7 -->")
        assert "<svg" in doc


class TestTentNormCommand:
    TRIPLETS = [[0, 100, 0.5], [2, 128, 1.5], [1, 140, 0.25]]

    def run_with(self, small_cfg, tmp_path, input_path):
        out = tmp_path / input_path.stem
        code = main(
            ["--config", str(small_cfg), "--out", str(out), "tent-norm", "--input", str(input_path)]
        )
        assert code == 0
        return json.loads((out / "tent_norm.json").read_text())

    def test_json_and_csv_inputs_agree(self, small_cfg, tmp_path):
        jpath = tmp_path / "f.json"
        jpath.write_text(json.dumps({"triplets": self.TRIPLETS}))
        cpath = tmp_path / "f.csv"
        cpath.write_text(
            "# sparse input\ns,j,v\n" + "\n".join(",".join(map(str, t)) for t in self.TRIPLETS)
        )
        from_json = self.run_with(small_cfg, tmp_path, jpath)
        from_csv = self.run_with(small_cfg, tmp_path, cpath)
        assert from_json["t1q_norm"] == from_csv["t1q_norm"]
        assert from_json["t1q_norm"] > 0.0
        assert from_json["active_pairs"] == from_csv["active_pairs"]

    def test_csv_has_seed_line(self, small_cfg, tmp_path):
        out = tmp_path / "out"
        assert main(["--config", str(small_cfg), "--out", str(out), "tent-norm"]) == 0
        first = (out / "tent_norm.csv").read_text().splitlines()[0]
        assert first == "# seed = 1"

    def test_out_of_range_triplet(self, small_cfg, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"triplets": [[0, 99999, 1.0]]}))
        out = tmp_path / "out"
        code = main(["--config", str(small_cfg), "--out", str(out), "tent-norm", "--input", str(bad)])
        assert code == 2

    def test_unknown_profile(self, small_cfg, tmp_path):
        out = tmp_path / "out"
        code = main(
            ["--config", str(small_cfg), "--out", str(out), "tent-norm", "--profile", "mesa"]
        )
        assert code == 2


class TestApertureCommand:
    def test_identity_row_and_determinism(self, small_cfg, tmp_path):
        texts = []
        for name in ("a", "b"):
            out = tmp_path / name
            assert main(["--config", str(small_cfg), "--out", str(out), "aperture"]) == 0
            texts.append((out / "aperture.csv").read_text())
        assert texts[0] == texts[1]
        lines = texts[0].splitlines()
        assert lines[0] == "# seed = 1"
        assert lines[1].split(",")[5] == "ratio"
        identity = lines[2].split(",")
        assert float(identity[0]) == float(identity[1]) == 1.5
        assert float(identity[5]) == 1.0
        widened = lines[3].split(",")
        assert float(widened[5]) >= 1.0
        assert int(widened[7]) == 1


class TestDecomposeCommand:
    def test_small_run(self, small_cfg, tmp_path):
        out = tmp_path / "out"
        assert main(["--config", str(small_cfg), "--out", str(out), "decompose"]) == 0
        payload = json.loads((out / "decompose.json").read_text())
        assert payload["report"]["reconstruction_rel"] <= 1e-9
        assert payload["report"]["atom_support_ok"]
        assert len(payload["terms"]) == payload["report"]["terms"] > 0

    def test_ball_tolerance_exhaustion(self, tmp_path):
        cfg = tmp_path / "tight.cfg"
        cfg.write_text(
            "n = 2\nR = 1.0\nh = 0.0625\nt_min = 0.0625\nseed = 3\ntol.ball = 1e-20\n"
        )
        out = tmp_path / "out"
        assert main(["--config", str(cfg), "--out", str(out), "decompose"]) == 3


class TestExitCodes:
    def test_bad_config_file(self, tmp_path):
        cfg = tmp_path / "broken.cfg"
        cfg.write_text("volume = 11\n")
        assert main(["--config", str(cfg), "--out", str(tmp_path), "grid"]) == 2

    def test_usage_error(self):
        with pytest.raises(SystemExit) as exc:
            main(["no-such-command"])
        assert exc.value.code == 2

    def test_missing_command(self):
        with pytest.raises(SystemExit) as exc:
            main([])
        assert exc.value.code == 2
