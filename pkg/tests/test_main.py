from click.testing import CliRunner

from main import cli


def _write_config(tmp_path, text):
    path = tmp_path / "scan.toml"
    path.write_text(text)
    return path


def test_run_and_verify(tmp_path):
    out = tmp_path / "results" / "scan.csv"
    config = _write_config(tmp_path, f'K = [3]\nd = [1, 2]\np = ["2", "inf"]\nout = "{out.as_posix()}"\n')
    runner = CliRunner()
    result = runner.invoke(cli, ["run", str(config)])
    assert result.exit_code == 0, result.output
    assert out.exists()

    verified = runner.invoke(cli, ["verify", str(out)])
    assert verified.exit_code == 0, verified.output
    assert "4/4" in verified.output

    plotted = runner.invoke(cli, ["plot", str(out)])
    assert plotted.exit_code == 0
    assert (tmp_path / "results" / "scan.plot.py").exists()


def test_flags_override_file(tmp_path):
    out = tmp_path / "flags.csv"
    config = _write_config(tmp_path, 'K = [3]\nd = [1]\np = ["3"]\n')
    result = CliRunner().invoke(cli, ["run", str(config), "--p", "2", "--out", str(out)])
    assert result.exit_code == 0, result.output
    assert "exact-2" in out.read_text()


def test_invalid_config(tmp_path):
    config = _write_config(tmp_path, "K = [4]\nd = [30]\n")
    result = CliRunner().invoke(cli, ["run", str(config)])
    assert result.exit_code == 1


def test_selftest():
    result = CliRunner().invoke(cli, ["selftest"])
    assert result.exit_code == 0, result.output
