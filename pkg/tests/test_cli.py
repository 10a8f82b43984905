import hashlib
import json
import os
import subprocess
import sys

import numpy as np
import pytest

from wicklab.cli import COMMANDS, main, parse_config, read_config_file
from wicklab.errors import ValidationError
from wicklab.fourier import SpectralField
from wicklab.besov import besov_norm


def run_cli(args, env_threads=None, cwd=None):
    env = dict(os.environ)
    if env_threads is not None:
        env["WICKLAB_THREADS"] = str(env_threads)
    return subprocess.run([sys.executable, "-m", "wicklab", *args], capture_output=True, text=True, env=env, cwd=cwd)


def test_defaults_and_precedence(tmp_path):
    cfg = parse_config("gmc-demo")
    assert cfg.params["gamma"] == 1.0 and cfg.params["beta"] == 0.5
    assert set(cfg.sources.values()) == {"default"}
    f = tmp_path / "run.cfg"
    f.write_text("# comment\ngamma = 0.5\nreplicas=10\n")
    cfg = parse_config("gmc-demo", {"gamma": "1.5"}, read_config_file(str(f)))
    assert cfg.params["gamma"] == 1.5 and cfg.sources["gamma"] == "flag"
    assert cfg.params["replicas"] == 10 and cfg.sources["replicas"] == "file"


def test_rejections():
    with pytest.raises(ValidationError) as e:
        parse_config("gmc-demo", {"gamma": "6.0"})
    assert e.value.key == "gamma"
    with pytest.raises(ValidationError) as e:
        parse_config("gmc-demo", {"beta": "0.1", "gamma": "2.0"})
    assert e.value.key == "beta"
    with pytest.raises(ValidationError) as e:
        parse_config("simulate", file_values={"bogus": "1"})
    assert e.value.key == "bogus"
    with pytest.raises(ValidationError):
        parse_config("simulate", {"dt": "0"})


def test_error_line_and_exit_code(capsys):
    assert main(["gmc-demo", "--gamma", "6.0"]) == 2
    err = capsys.readouterr().err.strip().splitlines()
    assert len(err) == 1 and err[0].startswith("error code=validation key=gamma ")


def test_no_convergence_exit_code(monkeypatch, capsys):
    import wicklab.support as support
    from wicklab.errors import NoConvergence

    def fail(*a, **k):
        raise NoConvergence("stalled")

    monkeypatch.setattr(support, "match_moments", fail)
    assert main(["match-moments"]) == 3
    assert capsys.readouterr().err.startswith("error code=no-convergence")


def test_hermite_check(capsys):
    assert main(["hermite-check"]) == 0
    lines = capsys.readouterr().out.strip().split("\n")
    assert lines[0] == "identity,max_relative_residual"
    assert all(float(l.split(",")[1]) <= 1e-10 for l in lines[1:])


def test_besov_command(tmp_path, capsys):
    f = SpectralField.from_modes({(0, 0): 0.3, (3, 1): 0.2 + 0.1j, (-3, -1): 0.2 - 0.1j})
    path = tmp_path / "f.json"
    path.write_text(f.to_json())
    assert main(["besov", "--field", str(path), "--alpha", "-0.4", "--p", "2", "--q", "inf"]) == 0
    out = capsys.readouterr().out.strip()
    assert float(out) == pytest.approx(besov_norm(f, -0.4, 2, np.inf), rel=1e-11)
    assert len(out.replace("-", "").replace(".", "").split("e")[0].lstrip("0")) <= 12
    assert main(["besov", "--field", str(tmp_path / "missing.json")]) == 2


def test_match_moments_writes_profile_and_manifest(tmp_path):
    out = tmp_path / "mm.csv"
    assert main(["match-moments", "--N", "1", "--out", str(out)]) == 0
    prof = SpectralField.from_json((tmp_path / "mm.profile.json").read_text())
    assert prof.n == 32 and prof.hermitian
    manifest = json.loads((tmp_path / "mm.csv.manifest.json").read_text())
    assert manifest["config"]["N"] == 1
    assert manifest["checksums"]["mm.csv"] == hashlib.sha256(out.read_bytes()).hexdigest()
    assert {"version", "timestamp", "command"} <= set(manifest)
    assert out.read_bytes().endswith(b"\n") and b"\r" not in out.read_bytes()


SMALL_ARGS = {
    "hermite-check": [],
    "simulate": ["--n", "3", "--replicas", "3", "--steps", "3"],
    "wick-cov": ["--n", "2", "--replicas", "1200"],
    "kernel-decay": ["--n-list", "2,4,8"],
    "match-moments": ["--N", "1"],
    "support-demo": ["--n-list", "4,8", "--seeds", "3"],
    "gmc-demo": ["--n", "2", "--replicas", "1500", "--gap-list", "2,4"],
}


def test_every_command_covered():
    assert set(SMALL_ARGS) | {"besov"} == set(COMMANDS)


@pytest.mark.parametrize("command", sorted(SMALL_ARGS))
def test_deterministic_across_runs_and_threads(command):
    args = [command, *SMALL_ARGS[command]]
    a = run_cli(args, env_threads=1)
    b = run_cli(args, env_threads=1)
    c = run_cli(args, env_threads=8)
    assert a.returncode == 0, a.stderr
    assert a.stdout == b.stdout == c.stdout
    assert a.stdout.splitlines()[0].count(",") >= 1


def test_config_file_trailing_comments(tmp_path):
    f = tmp_path / "run.cfg"
    f.write_text("n_list = 2, 4  # short run\n\n   # indented comment\nalpha=0.3#tight\n")
    assert read_config_file(str(f)) == {"n_list": "2, 4", "alpha": "0.3"}
    cfg = parse_config("kernel-decay", file_values=read_config_file(str(f)))
    assert cfg.params["n_list"] == (2, 4) and cfg.params["alpha"] == 0.3
