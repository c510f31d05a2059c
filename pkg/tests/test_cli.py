"""This module tests the command-line entry point."""

import json
from pathlib import Path

import pytest
from pytest import CaptureFixture, MonkeyPatch

from chaoslab import main
from chaoslab.cli import EXIT_OK, EXIT_RUNTIME_ERROR, EXIT_USAGE_ERROR, dispatch

GOLDEN = Path(__file__).parent / "data"


def _files(directory: Path) -> dict[str, bytes]:
    return {
        str(path.relative_to(directory)): path.read_bytes()
        for path in sorted(directory.rglob("*"))
        if path.is_file()
    }


class TestDispatch:
    """This class tests parsing, exit codes and printed summaries."""

    @staticmethod
    def test_fc_theory(capsys: CaptureFixture[str]) -> None:
        """Tests that the cooperator asymptote is printed with ten decimals."""
        assert dispatch(["game", "fc-theory"]) == EXIT_OK
        assert capsys.readouterr().out == "0.3177661667\n"

    @staticmethod
    @pytest.mark.parametrize(
        "argv",
        [
            ["dance"],
            ["map"],
            ["game", "run", "--update", "sometimes"],
            ["map", "orbit", "--n", "x"],
        ],
        ids=["command", "action", "choice", "type"],
    )
    def test_usage_errors(argv: list[str]) -> None:
        """Tests that malformed command lines exit with 2."""
        assert dispatch(argv) == EXIT_USAGE_ERROR

    @staticmethod
    def test_help(capsys: CaptureFixture[str]) -> None:
        """Tests that --help exits successfully."""
        assert dispatch(["--help"]) == EXIT_OK
        assert "lattice" in capsys.readouterr().out

    @staticmethod
    @pytest.mark.parametrize(
        "argv",
        [
            ["map", "orbit", "--a", "5"],
            ["lattice", "classify", "--n", "5", "--steps", "20"],
            ["forecast", "rho", "--input", "missing.csv"],
        ],
        ids=["domain", "insufficient", "missing-file"],
    )
    def test_runtime_errors(argv: list[str], capsys: CaptureFixture[str]) -> None:
        """Tests that failing experiments exit with 1 and explain why on stderr."""
        assert dispatch(argv) == EXIT_RUNTIME_ERROR
        assert capsys.readouterr().err.startswith("chaoslab: error:")

    @staticmethod
    def test_map_orbit(capsys: CaptureFixture[str]) -> None:
        """Tests the summary of an orbit ending at the fixed point 0."""
        assert dispatch(["map", "orbit", "--x0", "0.5", "--n", "3", "--transient", "0"]) == 0
        assert capsys.readouterr().out == "0.0\n"

    @staticmethod
    def test_json_to_stdout(capsys: CaptureFixture[str]) -> None:
        """Tests that --format json without --out prints the full report."""
        argv = ["map", "orbit", "--n", "4", "--transient", "0", "--format", "json", "--seed", "3"]
        assert dispatch(argv) == EXIT_OK
        report = json.loads(capsys.readouterr().out)
        assert report["kind"] == "map orbit"
        assert report["seed"] is None
        assert report["config"]["map"]["a"] == 4.0
        assert [r["t"] for r in report["results"]["records"]] == [0, 1, 2, 3]

    @staticmethod
    def test_game_window(capsys: CaptureFixture[str]) -> None:
        """Tests that an all-C board keeps a mean f_C of 1."""
        argv = ["game", "run", "--n", "5", "--fraction-c", "1", "--generations", "3"]
        assert dispatch(argv) == EXIT_OK
        assert capsys.readouterr().out == "1.0000\n"

    @staticmethod
    def test_kaleidoscope(capsys: CaptureFixture[str]) -> None:
        """Tests the symmetry verdict and the first minimum of a small kaleidoscope."""
        argv = ["game", "kaleidoscope", "--n", "99", "--b", "1.9", "--generations", "40"]
        assert dispatch(argv) == EXIT_OK
        out = capsys.readouterr().out
        assert out.startswith("symmetric=true minima=[")
        assert "32" in out


class TestArtifacts:
    """This class tests the files written with --out."""

    @staticmethod
    def test_game_artifacts(tmp_path: Path) -> None:
        """Tests the report, CSV file and frames of a game run."""
        argv = ["game", "run", "--n", "9", "--generations", "4", "--frames-every", "2"]
        assert dispatch([*argv, "--out", str(tmp_path)]) == EXIT_OK
        assert sorted(_files(tmp_path)) == [
            "frames/game-run-00000.ppm",
            "frames/game-run-00002.ppm",
            "frames/game-run-00004.ppm",
            "game-run.csv",
            "game-run.json",
        ]
        report = json.loads((tmp_path / "game-run.json").read_text(encoding="utf-8"))
        assert report["config"]["game"]["n"] == 9 and report["seed"] == 0
        assert report["config"]["frames_every"] == 2
        lines = (tmp_path / "game-run.csv").read_text(encoding="utf-8").splitlines()
        assert lines[0] == "t,f_C" and len(lines) == 6
        assert (tmp_path / "frames/game-run-00002.ppm").read_bytes().startswith(b"P6\n9 9\n255\n")

    @staticmethod
    @pytest.mark.parametrize(
        "argv",
        [
            ["game", "run", "--n", "12", "--update", "async-random-order", "--generations", "3"],
            ["lattice", "run", "--n", "6", "--steps", "30", "--frames-every", "10"],
            ["forecast", "rho", "--synthetic", "noise", "--length", "300", "--seed", "8"],
        ],
        ids=["game", "lattice", "forecast"],
    )
    def test_reruns_are_identical(argv: list[str], tmp_path: Path) -> None:
        """Tests that identical command lines write byte-identical files."""
        first, second = tmp_path / "first", tmp_path / "second"
        assert dispatch([*argv, "--out", str(first)]) == EXIT_OK
        assert dispatch([*argv, "--out", str(second)]) == EXIT_OK
        assert _files(first) == _files(second)
        assert _files(first)

    @staticmethod
    @pytest.mark.parametrize(
        "argv",
        [
            ["map", "lyapunov", "--n", "2000", "--window", "500", "--epsilon", "0.001"],
            "map bifurcate --params 5 --keep 3 --transient 50 --x0 0.2".split(),
            ["map", "density", "--n", "5000", "--x0", "0.3", "--transient", "10", "--bins", "20"],
            ["forecast", "rho", "--synthetic", "sine", "--noise", "0.3", "--length", "300"],
            ["lattice", "run", "--preset", "spiral", "--steps", "12", "--frames-every", "6"],
            "game run --n 9 --generations 6 --window-start 2 --frames-every 3".split(),
            ["game", "kaleidoscope", "--generations", "3", "--format", "json"],
        ],
        ids=["lyapunov", "bifurcate", "density", "forecast", "lattice", "game", "kaleidoscope"],
    )
    def test_report_replays_the_run(argv: list[str], tmp_path: Path) -> None:
        """Tests that the command line stored in a report rewrites identical files."""
        first, second = tmp_path / "first", tmp_path / "second"
        assert dispatch([*argv, "--out", str(first)]) == EXIT_OK
        report = json.loads((first / f"{argv[0]}-{argv[1]}.json").read_text(encoding="utf-8"))
        assert report["argv"][:2] == argv[:2]
        assert dispatch([*report["argv"], "--out", str(second)]) == EXIT_OK
        assert _files(first) == _files(second)

    @staticmethod
    def test_kaleidoscope_golden_frame(tmp_path: Path) -> None:
        """Tests that the kaleidoscope writes the stored second-generation frame."""
        argv = ["game", "kaleidoscope", "--n", "7", "--generations", "2", "--frames-every", "2"]
        assert dispatch([*argv, "--out", str(tmp_path)]) == EXIT_OK
        written = (tmp_path / "frames" / "game-kaleidoscope-00002.ppm").read_bytes()
        assert written == (GOLDEN / "kaleidoscope-7-00002.ppm").read_bytes()

    @staticmethod
    @pytest.mark.parametrize(
        "extra, seed", [([], 2), (["--seed", "7"], 7)], ids=["preset", "explicit"]
    )
    def test_lattice_preset_seed(extra: list[str], seed: int, capsys: CaptureFixture[str]) -> None:
        """Tests that a preset's pinned seed applies unless --seed is given."""
        argv = ["lattice", "run", "--preset", "spiral", "--steps", "3", "--format", "json"]
        assert dispatch([*argv, *extra]) == EXIT_OK
        report = json.loads(capsys.readouterr().out)
        assert report["seed"] == seed == report["config"]["lattice"]["seed"]
        assert report["argv"][report["argv"].index("--seed") + 1] == str(seed)

    @staticmethod
    @pytest.mark.parametrize(
        "argv, n",
        [
            (["game", "kaleidoscope", "--generations", "60"], 125),
            (["game", "kaleidoscope", "--generations", "10"], 99),
            (["game", "kaleidoscope", "--generations", "60", "--n", "51"], 51),
        ],
        ids=["grown", "smallest", "explicit"],
    )
    def test_kaleidoscope_board_size(argv: list[str], n: int, capsys: CaptureFixture[str]) -> None:
        """Tests that the kaleidoscope board is sized so the front never reaches the edge."""
        assert dispatch([*argv, "--format", "json"]) == EXIT_OK
        assert json.loads(capsys.readouterr().out)["config"]["game"]["n"] == n

    @staticmethod
    def test_search_grid_defaults(capsys: CaptureFixture[str]) -> None:
        """Tests that the embedding search covers E <= 10 and tau <= 4 by default."""
        argv = ["forecast", "search", "--length", "400", "--format", "json"]
        assert dispatch(argv) == EXIT_OK
        report = json.loads(capsys.readouterr().out)
        assert (report["config"]["e_max"], report["config"]["tau_max"]) == (10, 4)
        assert len(report["results"]["records"]) == 40

    @staticmethod
    def test_series_from_file(tmp_path: Path, capsys: CaptureFixture[str]) -> None:
        """Tests that a forecast reads a single-column CSV series."""
        values = [0.1]
        for _ in range(399):
            values.append(4.0 * values[-1] * (1.0 - values[-1]))
        source = tmp_path / "series.csv"
        source.write_text("x\n" + "\n".join(repr(v) for v in values) + "\n", encoding="utf-8")
        assert dispatch(["forecast", "rho", "--input", str(source), "--p-max", "3"]) == EXIT_OK
        assert float(capsys.readouterr().out) > 0.9


class TestMain:
    """This class tests the console script."""

    @staticmethod
    def test_main_exits_with_code(monkeypatch: MonkeyPatch, capsys: CaptureFixture[str]) -> None:
        """Tests that main turns the dispatch result into the process exit code."""
        monkeypatch.setattr("sys.argv", ["chaoslab", "game", "fc-theory"])
        with pytest.raises(SystemExit) as exit_info:
            main()
        assert exit_info.value.code == EXIT_OK
        assert capsys.readouterr().out.startswith("0.31776")

    @staticmethod
    def test_main_usage_error(monkeypatch: MonkeyPatch) -> None:
        """Tests that a usage error ends the process with 2."""
        monkeypatch.setattr("sys.argv", ["chaoslab", "lattice"])
        with pytest.raises(SystemExit) as exit_info:
            main()
        assert exit_info.value.code == EXIT_USAGE_ERROR
