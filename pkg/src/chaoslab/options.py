"""
This module contains the configuration dataclasses which are used to customize
the maps, forecasts, lattices and games of chaoslab.
"""

import math
import os
from dataclasses import dataclass, field, replace
from enum import StrEnum

from chaoslab.errors import DomainError

THREADS_VARIABLE = "CHAOSLAB_THREADS"
SEED_LIMIT = 2**64


class MapKind(StrEnum):
    """First-order difference equations available to the maps module."""

    LOGISTIC = "logistic"
    RICKER = "ricker"


class Protocol(StrEnum):
    """How a series is split into pattern library and predictees."""

    HALF_SPLIT_FORWARD = "half-split-forward"
    HALF_SPLIT_BACKWARD = "half-split-backward"
    FULL_WITH_EXCLUSION = "full-with-exclusion"


class LatticeBoundary(StrEnum):
    """Treatment of dispersers leaving the edge of the patch array."""

    CYCLIC = "cyclic"
    ABSORBING = "absorbing"
    REDISTRIBUTE = "redistribute"


class LatticeInit(StrEnum):
    """Initial conditions of a host-parasitoid lattice."""

    UNIFORM_RANDOM = "uniform-random"
    CENTRAL_SEED = "central-seed"


class Neighborhood(StrEnum):
    """Sets of sites a player interacts with and can be replaced by."""

    MOORE_SELF = "moore8+self"
    MOORE = "moore8"
    VON_NEUMANN = "vonNeumann4"


class GameBoundary(StrEnum):
    """Edge treatment of the game board."""

    FIXED = "fixed"
    PERIODIC = "periodic"


class UpdateMode(StrEnum):
    """Rules by which site ownership changes between generations."""

    SYNC_DETERMINISTIC = "sync-deterministic"
    SYNC_PROBABILISTIC = "sync-probabilistic"
    ASYNC_RANDOM_ORDER = "async-random-order"


class GameInit(StrEnum):
    """Initial boards of a spatial game."""

    RANDOM = "random"
    SINGLE_D_CENTER = "single-D-center"
    EXPLICIT = "explicit"


class ClusterKind(StrEnum):
    """Minority blocks embedded by a cluster experiment."""

    D_BLOCK = "D-block"
    C_BLOCK = "C-block"


def _require_kind(value: object, kind: type, name: str) -> None:
    if not isinstance(value, kind):
        raise TypeError(f"{name} must be a {kind.__name__}. Invalid: {value!r}")


def _require_finite(name: str, *values: float) -> None:
    invalid = [v for v in values if not math.isfinite(v)]
    if invalid:
        raise DomainError(f"{name} must be finite. Invalid: {invalid}")


def _require_seed(seed: int) -> None:
    if isinstance(seed, bool) or not isinstance(seed, int):
        raise TypeError(f"seed must be an integer. Invalid: {seed!r}")
    if not 0 <= seed < SEED_LIMIT:
        raise DomainError(f"seed must be an unsigned 64-bit value. Invalid: {seed}")


def _require_fraction(name: str, value: float) -> None:
    if not 0.0 <= value <= 1.0:
        raise DomainError(f"{name} must lie in [0, 1]. Invalid: {value}")


@dataclass(frozen=True)
class MapSpec:
    """
    Parameters of a one-dimensional map.

    Attributes:
        kind: The map family.
        a: Control parameter of the logistic map x -> a·x·(1-x), 0 < a <= 4.
        r0: Intrinsic rate of the Ricker map N -> R0·N·exp(-scale·N), R0 > 0.
        scale: Density scale of the Ricker map, scale > 0.
    """

    kind: MapKind = field(default=MapKind.LOGISTIC)
    a: float = field(default=4.0)
    r0: float = field(default=20.0)
    scale: float = field(default=1.0)

    def __post_init__(self) -> None:
        """
        Validates the parameters of the chosen map family.

        Raises:
            TypeError: If kind is not a MapKind.
            DomainError: If a parameter lies outside its valid range.
        """
        _require_kind(self.kind, MapKind, "kind")
        _require_finite("map parameters", self.a, self.r0, self.scale)

        if self.kind is MapKind.LOGISTIC and not 0.0 < self.a <= 4.0:
            raise DomainError(f"The logistic map requires 0 < a <= 4. Invalid: {self.a}")

        if self.kind is MapKind.RICKER and (self.r0 <= 0.0 or self.scale <= 0.0):
            raise DomainError(
                f"The Ricker map requires R0 > 0 and scale > 0. Invalid: {self.r0}, {self.scale}"
            )

    @property
    def parameter_name(self) -> str:
        """Name of the bifurcation parameter of this map family."""
        return "a" if self.kind is MapKind.LOGISTIC else "r0"

    @property
    def parameter(self) -> float:
        """Value of the bifurcation parameter."""
        return self.a if self.kind is MapKind.LOGISTIC else self.r0

    def with_parameter(self, value: float) -> "MapSpec":
        """Returns a copy whose bifurcation parameter is set to value."""
        return replace(self, **{self.parameter_name: float(value)})


@dataclass(frozen=True)
class EmbeddingConfig:
    """
    Delay embedding and library protocol of a simplex forecast.

    Attributes:
        dimension: Embedding dimension E.
        tau: Lag between delay coordinates in steps.
        exclusion: Half-width of the window around a predictee that is kept
            out of the library when the protocol is full-with-exclusion.
        protocol: How library and predictees are taken from the series.
    """

    dimension: int = field(default=3)
    tau: int = field(default=1)
    exclusion: int = field(default=0)
    protocol: Protocol = field(default=Protocol.HALF_SPLIT_FORWARD)

    def __post_init__(self) -> None:
        """
        Validates the embedding parameters.

        Raises:
            TypeError: If protocol is not a Protocol.
            DomainError: If dimension or tau are below 1 or exclusion is negative.
        """
        _require_kind(self.protocol, Protocol, "protocol")
        if self.dimension < 1 or self.tau < 1:
            raise DomainError(
                f"dimension and tau must be at least 1. Invalid: {self.dimension}, {self.tau}"
            )
        if self.exclusion < 0:
            raise DomainError(f"exclusion may not be negative. Invalid: {self.exclusion}")


@dataclass(frozen=True)
class ClassifierThresholds:
    """
    Conventions used to label the shape of a ρ-vs-T_p curve.

    Attributes:
        chaos_min_rho: Minimum ρ(1) of chaos-like and periodic curves.
        chaos_min_drop: Minimum decline ρ(1) - ρ(p_max) of chaos-like curves.
        noise_max_rho: Upper bound of |ρ| across a noise-like curve.
        periodic_max_range: Upper bound of the spread of ρ across a periodic curve.
    """

    chaos_min_rho: float = field(default=0.5)
    chaos_min_drop: float = field(default=0.3)
    noise_max_rho: float = field(default=0.2)
    periodic_max_range: float = field(default=0.1)


@dataclass(frozen=True)
class PatchParams:
    """
    Nicholson-Bailey dynamics within one patch.

    Attributes:
        r0: Intrinsic reproductive rate of the hosts.
        attack: Searching efficiency of a parasitoid.
        c: Number of parasitoids emerging from a parasitized host.
    """

    r0: float = field(default=2.0)
    attack: float = field(default=1.0)
    c: float = field(default=1.0)

    def __post_init__(self) -> None:
        """
        Validates that all rates are positive.

        Raises:
            DomainError: If a rate is not a positive finite number.
        """
        _require_finite("patch parameters", self.r0, self.attack, self.c)
        if min(self.r0, self.attack, self.c) <= 0.0:
            raise DomainError(
                f"r0, attack and c must be positive. Invalid: {self.r0}, {self.attack}, {self.c}"
            )

    def normalized(self) -> "PatchParams":
        """Returns the conjugate parameters with attack = c = 1."""
        return PatchParams(r0=self.r0)


@dataclass(frozen=True)
class LatticeConfig:  # pylint: disable=too-many-instance-attributes
    """
    Geometry, dispersal and run length of a host-parasitoid lattice.

    Attributes:
        n: Side length of the n×n patch array.
        mu_h: Fraction of hosts dispersing each generation.
        mu_p: Fraction of parasitoids dispersing each generation.
        boundary: Treatment of dispersers leaving the array.
        init: Initial condition.
        init_low: Lower random factor applied to the equilibrium (uniform-random).
        init_high: Upper random factor applied to the equilibrium (uniform-random).
        seed_density: Densities (H0, P0) of the seeded patch (central-seed).
            The equilibrium is used when omitted.
        seed: Seed of the counter-based random stream.
        steps: Number of generations.
        extinction_factor: Extinction threshold relative to the host equilibrium.
        stasis_tolerance: Largest per-patch change of a static lattice.
        transient_fraction: Leading fraction of the run ignored by the classifier.
    """

    n: int = field(default=30)
    mu_h: float = field(default=1.0)
    mu_p: float = field(default=0.89)
    boundary: LatticeBoundary = field(default=LatticeBoundary.CYCLIC)
    init: LatticeInit = field(default=LatticeInit.UNIFORM_RANDOM)
    init_low: float = field(default=0.9)
    init_high: float = field(default=1.1)
    seed_density: tuple[float, float] | None = field(default=None)
    seed: int = field(default=0)
    steps: int = field(default=2000)
    extinction_factor: float = field(default=1e-10)
    stasis_tolerance: float = field(default=1e-8)
    transient_fraction: float = field(default=0.5)

    def __post_init__(self) -> None:
        """
        Validates the lattice configuration.

        Raises:
            TypeError: If boundary or init have the wrong type.
            DomainError: If a size, fraction or factor is out of range.
        """
        _require_kind(self.boundary, LatticeBoundary, "boundary")
        _require_kind(self.init, LatticeInit, "init")
        _require_seed(self.seed)
        _require_fraction("mu_h", self.mu_h)
        _require_fraction("mu_p", self.mu_p)
        _require_fraction("transient_fraction", self.transient_fraction)

        if self.n < 1:
            raise DomainError(f"n must be at least 1. Invalid: {self.n}")
        if self.steps < 1:
            raise DomainError(f"steps must be at least 1. Invalid: {self.steps}")
        if not 0.0 <= self.init_low <= self.init_high:
            raise DomainError(
                f"init factors must satisfy 0 <= low <= high. "
                f"Invalid: {self.init_low}, {self.init_high}"
            )
        if self.seed_density is not None and min(self.seed_density) < 0.0:
            raise DomainError(f"seed_density may not be negative. Invalid: {self.seed_density}")
        if self.extinction_factor <= 0.0 or self.stasis_tolerance <= 0.0:
            raise DomainError("extinction_factor and stasis_tolerance must be positive.")


@dataclass(frozen=True)
class Payoffs:
    """
    Prisoner's Dilemma payoffs with R = 1, T = b, S = 0 and P = epsilon.

    Attributes:
        b: Temptation, the advantage of a defector against a cooperator.
        epsilon: Punishment of mutual defection.
    """

    b: float = field(default=1.9)
    epsilon: float = field(default=0.0)

    def __post_init__(self) -> None:
        """
        Validates T > R > P >= S.

        Raises:
            DomainError: If b <= 1 or epsilon lies outside [0, 1).
        """
        _require_finite("payoffs", self.b, self.epsilon)
        if self.b <= 1.0:
            raise DomainError(f"b must exceed 1. Invalid: {self.b}")
        if not 0.0 <= self.epsilon < 1.0:
            raise DomainError(f"epsilon must lie in [0, 1). Invalid: {self.epsilon}")

    @property
    def reward(self) -> float:
        """Payoff R of mutual cooperation."""
        return 1.0

    @property
    def temptation(self) -> float:
        """Payoff T of a defector meeting a cooperator."""
        return self.b

    @property
    def sucker(self) -> float:
        """Payoff S of a cooperator meeting a defector."""
        return 0.0

    @property
    def punishment(self) -> float:
        """Payoff P of mutual defection."""
        return self.epsilon


@dataclass(frozen=True)
class GameConfig:  # pylint: disable=too-many-instance-attributes
    """
    Board, rules and run length of a spatial Prisoner's Dilemma.

    Attributes:
        n: Side length of the n×n board.
        b: Defector advantage.
        epsilon: Punishment of mutual defection.
        neighborhood: Interaction and replacement neighborhood.
        boundary: Edge treatment.
        update: Update rule.
        stiffness: Exponent m of probabilistic winning.
        generations: Number of generations.
        init: Initial board.
        fraction_c: Expected fraction of cooperators of a random board.
        seed: Seed of the counter-based random stream.
    """

    n: int = field(default=99)
    b: float = field(default=1.9)
    epsilon: float = field(default=0.0)
    neighborhood: Neighborhood = field(default=Neighborhood.MOORE_SELF)
    boundary: GameBoundary = field(default=GameBoundary.FIXED)
    update: UpdateMode = field(default=UpdateMode.SYNC_DETERMINISTIC)
    stiffness: float = field(default=8.0)
    generations: int = field(default=200)
    init: GameInit = field(default=GameInit.RANDOM)
    fraction_c: float = field(default=0.9)
    seed: int = field(default=0)

    def __post_init__(self) -> None:
        """
        Validates the game configuration.

        Raises:
            TypeError: If an enumerated option has the wrong type.
            DomainError: If a size, rate or fraction is out of range.
        """
        _require_kind(self.neighborhood, Neighborhood, "neighborhood")
        _require_kind(self.boundary, GameBoundary, "boundary")
        _require_kind(self.update, UpdateMode, "update")
        _require_kind(self.init, GameInit, "init")
        _require_seed(self.seed)
        _require_fraction("fraction_c", self.fraction_c)
        Payoffs(self.b, self.epsilon)

        if self.n < 3:
            raise DomainError(f"n must be at least 3. Invalid: {self.n}")
        if self.generations < 0:
            raise DomainError(f"generations may not be negative. Invalid: {self.generations}")
        if not self.stiffness > 0.0:
            raise DomainError(f"stiffness must be positive. Invalid: {self.stiffness}")

    @property
    def payoffs(self) -> Payoffs:
        """The payoff matrix of this game."""
        return Payoffs(self.b, self.epsilon)


def thread_count() -> int:
    """
    Resolves the parallelism cap from the CHAOSLAB_THREADS environment variable.

    Returns:
        int: The number of worker threads; 0 or an unset variable means all cores.

    Raises:
        ValueError: If the variable is not a non-negative integer.
    """
    raw = os.environ.get(THREADS_VARIABLE, "0").strip() or "0"
    try:
        requested = int(raw)
    except ValueError as e:
        raise ValueError(f"{THREADS_VARIABLE} must be an integer. Invalid: {raw!r}") from e

    if requested < 0:
        raise ValueError(f"{THREADS_VARIABLE} may not be negative. Invalid: {requested}")

    if requested == 0:
        return os.cpu_count() or 1
    return requested
