"""This module tests the configuration dataclasses."""

from dataclasses import FrozenInstanceError
from typing import Any

import pytest
from pytest import MonkeyPatch

from chaoslab.errors import DomainError
from chaoslab.options import (
    EmbeddingConfig,
    GameConfig,
    LatticeConfig,
    MapKind,
    MapSpec,
    PatchParams,
    Payoffs,
    thread_count,
)


class TestDefaultOptions:
    """This class tests the defaults of the configuration dataclasses."""

    @staticmethod
    def test_default_map() -> None:
        """Tests that the default map is the fully chaotic logistic map."""
        spec = MapSpec()
        assert spec.kind is MapKind.LOGISTIC and spec.a == 4.0
        assert spec.parameter_name == "a" and spec.parameter == 4.0

    @staticmethod
    def test_default_embedding() -> None:
        """Tests the default embedding E = 3, tau = 1 without exclusion."""
        config = EmbeddingConfig()
        assert (config.dimension, config.tau, config.exclusion) == (3, 1, 0)

    @staticmethod
    def test_default_lattice() -> None:
        """Tests that the default lattice uses the spiral dispersal rates."""
        config = LatticeConfig()
        assert (config.n, config.mu_h, config.mu_p) == (30, 1.0, 0.89)

    @staticmethod
    def test_default_payoffs() -> None:
        """Tests R = 1, T = b, S = P = 0."""
        payoffs = Payoffs()
        assert (payoffs.reward, payoffs.temptation, payoffs.sucker, payoffs.punishment) == (
            1.0,
            1.9,
            0.0,
            0.0,
        )

    @staticmethod
    def test_options_are_frozen() -> None:
        """Tests that configurations cannot be changed after creation."""
        config = GameConfig()
        with pytest.raises(FrozenInstanceError):
            config.b = 2.0  # type: ignore[misc]


class TestCustomOptions:
    """This class tests the validation of custom options."""

    @staticmethod
    def test_with_parameter_replaces_ricker_rate() -> None:
        """Tests that with_parameter sets r0 for the Ricker map."""
        spec = MapSpec(kind=MapKind.RICKER).with_parameter(5.0)
        assert spec.r0 == 5.0 and spec.kind is MapKind.RICKER

    @staticmethod
    @pytest.mark.parametrize(
        "kwargs",
        [
            {"a": 4.5},
            {"a": 0.0},
            {"a": float("nan")},
            {"kind": MapKind.RICKER, "r0": 0.0},
            {"kind": MapKind.RICKER, "scale": -1.0},
        ],
        ids=["a too large", "a zero", "a nan", "r0 zero", "negative scale"],
    )
    def test_invalid_map(kwargs: dict[str, Any]) -> None:
        """Tests that parameters outside the map's domain raise DomainError."""
        with pytest.raises(DomainError):
            MapSpec(**kwargs)

    @staticmethod
    def test_invalid_kind_type() -> None:
        """Tests that a plain string is rejected as map kind."""
        with pytest.raises(TypeError):
            MapSpec(kind="logistic")  # type: ignore[arg-type]

    @staticmethod
    @pytest.mark.parametrize(
        "kwargs",
        [{"dimension": 0}, {"tau": 0}, {"exclusion": -1}],
        ids=["dimension", "tau", "exclusion"],
    )
    def test_invalid_embedding(kwargs: dict[str, Any]) -> None:
        """Tests that invalid embeddings raise DomainError."""
        with pytest.raises(DomainError):
            EmbeddingConfig(**kwargs)

    @staticmethod
    @pytest.mark.parametrize(
        "kwargs",
        [{"r0": 0.0}, {"attack": -1.0}, {"c": 0.0}],
        ids=["r0", "attack", "c"],
    )
    def test_invalid_patch(kwargs: dict[str, Any]) -> None:
        """Tests that non-positive rates raise DomainError."""
        with pytest.raises(DomainError):
            PatchParams(**kwargs)

    @staticmethod
    def test_normalized_patch() -> None:
        """Tests that normalization keeps R0 and sets attack = c = 1."""
        assert PatchParams(r0=3.0, attack=2.0, c=5.0).normalized() == PatchParams(r0=3.0)

    @staticmethod
    @pytest.mark.parametrize(
        "kwargs",
        [{"n": 0}, {"mu_h": 1.5}, {"mu_p": -0.1}, {"steps": 0}, {"seed": -1}, {"seed": 2**64}],
        ids=["n", "mu_h", "mu_p", "steps", "negative seed", "seed overflow"],
    )
    def test_invalid_lattice(kwargs: dict[str, Any]) -> None:
        """Tests that invalid lattice settings raise DomainError."""
        with pytest.raises(DomainError):
            LatticeConfig(**kwargs)

    @staticmethod
    def test_single_patch_lattice() -> None:
        """Tests that a single patch is an admissible lattice."""
        assert LatticeConfig(n=1).n == 1

    @staticmethod
    @pytest.mark.parametrize(
        "kwargs",
        [{"b": 1.0}, {"epsilon": 1.0}, {"n": 2}, {"stiffness": 0.0}, {"fraction_c": 1.1}],
        ids=["b", "epsilon", "n", "stiffness", "fraction_c"],
    )
    def test_invalid_game(kwargs: dict[str, Any]) -> None:
        """Tests that invalid game settings raise DomainError."""
        with pytest.raises(DomainError):
            GameConfig(**kwargs)

    @staticmethod
    def test_boolean_seed_is_rejected() -> None:
        """Tests that a boolean is not accepted as seed."""
        with pytest.raises(TypeError):
            GameConfig(seed=True)


class TestThreadCount:
    """This class tests the CHAOSLAB_THREADS environment variable."""

    @staticmethod
    def test_explicit_value(monkeypatch: MonkeyPatch) -> None:
        """Tests that a positive value is used as is."""
        monkeypatch.setenv("CHAOSLAB_THREADS", "3")
        assert thread_count() == 3

    @staticmethod
    @pytest.mark.parametrize("raw", ["0", ""], ids=["zero", "empty"])
    def test_automatic(monkeypatch: MonkeyPatch, raw: str) -> None:
        """Tests that zero or an empty value means all cores."""
        monkeypatch.setenv("CHAOSLAB_THREADS", raw)
        assert thread_count() >= 1

    @staticmethod
    def test_unset(monkeypatch: MonkeyPatch) -> None:
        """Tests that an unset variable means all cores."""
        monkeypatch.delenv("CHAOSLAB_THREADS")
        assert thread_count() >= 1

    @staticmethod
    @pytest.mark.parametrize("raw", ["-1", "many"], ids=["negative", "text"])
    def test_invalid(monkeypatch: MonkeyPatch, raw: str) -> None:
        """Tests that invalid values raise ValueError."""
        monkeypatch.setenv("CHAOSLAB_THREADS", raw)
        with pytest.raises(ValueError):
            thread_count()
