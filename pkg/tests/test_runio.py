"""This module tests the random stream, records and frames shared by all simulations."""

import hashlib
import json
import math
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from pytest import MonkeyPatch
from scipy import stats

from chaoslab.errors import InsufficientDataError
from chaoslab.forecasting import RhoCurve
from chaoslab.games import run
from chaoslab.options import GameConfig, GameInit, LatticeBoundary, LatticeConfig
from chaoslab.runio import (
    Frame,
    RecordFormatting,
    Stream,
    game_frame,
    lattice_frame,
    parallel_map,
    read_csv,
    read_series,
    rng_grid,
    rng_sequence,
    rng_value,
    splitmix64,
    write_csv,
    write_frame,
    write_report,
)

GOLDEN = Path(__file__).parent / "data"
KALEIDOSCOPE_SHA256 = "6061dee5ebeceec19371665d4e8cc77504ae4b74e304a18f242ab7e5aa528740"


class TestRandomStream:
    """This class tests the counter-based random stream."""

    @staticmethod
    @pytest.mark.parametrize(
        "word, expected",
        [(0, 0xE220A8397B1DCDAF), (0x9E3779B97F4A7C15, 0x6E789E6AA1B965F4)],
        ids=["zero", "golden gamma"],
    )
    def test_splitmix64_vectors(word: int, expected: int) -> None:
        """Tests the mixing function against the published SplitMix64 outputs."""
        assert splitmix64(word) == expected

    @staticmethod
    @given(seed=st.integers(0, 2**64 - 1), key=st.lists(st.integers(0, 2**32), max_size=4))
    def test_value_is_reproducible_unit_interval(seed: int, key: list[int]) -> None:
        """Tests that a value is a pure function of (seed, key) in [0, 1)."""
        value = rng_value(seed, key)
        assert value == rng_value(seed, tuple(key))
        assert 0.0 <= value < 1.0

    @staticmethod
    def test_grid_matches_scalar_values() -> None:
        """Tests that rng_grid reproduces per-key scalar draws."""
        grid = rng_grid(42, Stream.GAME_WINNER, 7, (4, 5))
        for x in range(4):
            for y in range(5):
                assert grid[x, y] == rng_value(42, (Stream.GAME_WINNER, 7, x, y))

    @staticmethod
    def test_sequence_matches_scalar_values() -> None:
        """Tests that rng_sequence reproduces per-counter scalar draws."""
        values = rng_sequence(3, Stream.SYNTHETIC, 6, start=10)
        assert [rng_value(3, (Stream.SYNTHETIC, 10 + i)) for i in range(6)] == values.tolist()

    @staticmethod
    def test_streams_and_seeds_differ() -> None:
        """Tests that different seeds and streams give different values."""
        assert rng_value(0, (Stream.GAME_INIT, 0)) != rng_value(1, (Stream.GAME_INIT, 0))
        assert rng_value(0, (Stream.GAME_INIT, 0)) != rng_value(0, (Stream.GAME_ORDER, 0))

    @staticmethod
    def test_uniformity() -> None:
        """Tests mean and Kolmogorov-Smirnov distance of 10^5 consecutive draws."""
        values = rng_sequence(0, Stream.SYNTHETIC, 100_000)
        assert abs(values.mean() - 0.5) < 0.01
        assert stats.kstest(values, "uniform").statistic < 0.01

    @staticmethod
    def test_no_collisions() -> None:
        """Tests that 10^5 distinct keys give 10^5 distinct values."""
        values = rng_sequence(12345, Stream.AGGREGATE, 100_000)
        assert np.unique(values).size == values.size


class TestParallelMap:
    """This class tests the ordered parallel map."""

    @staticmethod
    @pytest.mark.parametrize("threads", ["1", "4"], ids=["sequential", "threads"])
    def test_order_is_kept(monkeypatch: MonkeyPatch, threads: str) -> None:
        """Tests that results come back in input order for any thread count."""
        monkeypatch.setenv("CHAOSLAB_THREADS", threads)
        assert parallel_map(lambda i: i * i, range(20)) == [i * i for i in range(20)]


class TestFrames:
    """This class tests the binary image frames."""

    @staticmethod
    def test_game_palette_bytes(tmp_path: Path) -> None:
        """Tests the exact bytes of a 2×1 frame holding C after C and D after D."""
        strategies = np.array([[1, 0]], dtype=np.uint8)
        path = write_frame(game_frame(strategies, strategies.copy()), tmp_path / "f.ppm")
        assert path.read_bytes() == b"P6\n2 1\n255\n" + bytes([0, 0, 255, 255, 0, 0])

    @staticmethod
    def test_kaleidoscope_golden_frame(tmp_path: Path) -> None:
        """Tests the second generation of a single defector on a 7×7 board byte by byte."""
        board = run(GameConfig(n=7, init=GameInit.SINGLE_D_CENTER, generations=2)).final
        path = write_frame(game_frame(board.strategies, board.previous), tmp_path / "k.ppm")
        golden = (GOLDEN / "kaleidoscope-7-00002.ppm").read_bytes()
        assert hashlib.sha256(golden).hexdigest() == KALEIDOSCOPE_SHA256
        assert path.read_bytes() == golden

    @staticmethod
    def test_game_palette_transitions() -> None:
        """Tests green for C after D and yellow for D after C."""
        frame = game_frame(np.array([[1, 0]], np.uint8), np.array([[0, 1]], np.uint8))
        assert frame.pixels.tolist() == [[[0, 255, 0], [255, 255, 0]]]

    @staticmethod
    def test_empty_lattice_is_black(tmp_path: Path) -> None:
        """Tests that an all-empty lattice frame has an all-zero payload."""
        zeros = np.zeros((3, 4))
        path = write_frame(lattice_frame(zeros, zeros, 1.386, 0.693), tmp_path / "l.pgm", "pgm")
        content = path.read_bytes()
        header = b"P5\n4 3\n255\n"
        assert content.startswith(header) and content[len(header) :] == bytes(12)

    @staticmethod
    def test_lattice_shading_classes() -> None:
        """Tests the host-only and parasitoid ramps at equilibrium densities."""
        hosts = np.array([[1.386, 1.386]])
        parasitoids = np.array([[0.0, 0.693]])
        shades = lattice_frame(hosts, parasitoids, 1.386, 0.693).pixels
        assert 64 <= shades[0, 0] <= 176
        assert 192 <= shades[0, 1] <= 255

    @staticmethod
    def test_frame_rejects_wrong_format(tmp_path: Path) -> None:
        """Tests that an RGB frame cannot be written as PGM."""
        frame = Frame(np.zeros((2, 2, 3), dtype=np.uint8))
        with pytest.raises(ValueError):
            write_frame(frame, tmp_path / "x.pgm", "pgm")

    @staticmethod
    def test_frame_rejects_float_pixels() -> None:
        """Tests that non-byte pixels raise TypeError."""
        with pytest.raises(TypeError):
            Frame(np.zeros((2, 2)))  # type: ignore[arg-type]


class TestRecords:
    """This class tests CSV and JSON records."""

    @staticmethod
    def test_csv_line_count(tmp_path: Path) -> None:
        """Tests that three records give a header and three lines."""
        records = [{"t": t, "f_C": f} for t, f in enumerate([0.9, 0.5, 0.318])]
        path = write_csv(records, tmp_path / "fc.csv")
        assert path.read_text(encoding="utf-8").splitlines() == [
            "t,f_C",
            "0,0.9",
            "1,0.5",
            "2,0.318",
        ]

    @staticmethod
    def test_csv_round_trip_is_lossless(tmp_path: Path) -> None:
        """Tests that a written rho curve reads back bit-exactly."""
        rho = np.array([0.1 + 1e-17, 2.0 / 3.0, math.pi / 7.0, np.nan])
        curve = RhoCurve(
            horizons=np.arange(1, 5), rho=rho, n_predictions=np.array([10, 10, 10, 10])
        )
        path = write_csv(curve.to_records(), tmp_path / "rho.csv")
        rows = read_csv(path)
        assert [float(row["rho"]) for row in rows[:3]] == rho[:3].tolist()
        assert rows[3]["rho"] == ""

    @staticmethod
    def test_csv_rejects_heterogeneous_records(tmp_path: Path) -> None:
        """Tests that records with differing keys raise ValueError."""
        with pytest.raises(ValueError):
            write_csv([{"a": 1}, {"b": 2}], tmp_path / "bad.csv")

    @staticmethod
    def test_csv_rejects_no_records(tmp_path: Path) -> None:
        """Tests that an empty record list raises ValueError."""
        with pytest.raises(ValueError):
            write_csv([], tmp_path / "empty.csv")

    @staticmethod
    @pytest.mark.parametrize(
        "content", ["x\n0.5\n0.25\n", "0.5\n0.25\n"], ids=["header", "no header"]
    )
    def test_read_series(tmp_path: Path, content: str) -> None:
        """Tests that a leading header row is skipped."""
        path = tmp_path / "series.csv"
        path.write_text(content, encoding="utf-8")
        assert read_series(path).tolist() == [0.5, 0.25]

    @staticmethod
    def test_read_series_without_values(tmp_path: Path) -> None:
        """Tests that a file holding only a header raises InsufficientDataError."""
        path = tmp_path / "series.csv"
        path.write_text("x\n", encoding="utf-8")
        with pytest.raises(InsufficientDataError):
            read_series(path)

    @staticmethod
    def test_report_echoes_config(tmp_path: Path) -> None:
        """Tests that a report holds everything needed to rebuild the configuration."""
        config = LatticeConfig(mu_h=0.05, mu_p=1.0, steps=5000, seed=7)
        path = write_report(tmp_path / "r.json", "lattice run", config, {"label": "x"}, seed=7)
        report = json.loads(path.read_text(encoding="utf-8"))

        echoed = dict(report["config"])
        echoed["boundary"] = LatticeBoundary(echoed["boundary"])
        echoed["init"] = type(config.init)(echoed["init"])
        assert LatticeConfig(**echoed) == config
        assert report["seed"] == 7 and report["format_version"] == 1
        assert "argv" not in report

    @staticmethod
    def test_report_keeps_replay_argv(tmp_path: Path) -> None:
        """Tests that the replay command line is stored verbatim."""
        argv = ["game", "run", "--b", "1.9", "--seed", "3"]
        path = write_report(tmp_path / "r.json", "game run", {}, {}, seed=3, argv=argv)
        assert json.loads(path.read_text(encoding="utf-8"))["argv"] == argv

    @staticmethod
    def test_non_finite_values_become_null() -> None:
        """Tests that NaN and infinities are recorded as None."""
        assert RecordFormatting.to_record([1.0, float("nan"), float("inf")]) == [1.0, None, None]
