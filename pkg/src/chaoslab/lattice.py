"""
This module contains the host-parasitoid coupled map lattice: Nicholson-Bailey
dynamics within every patch, dispersal of fixed fractions to the eight
neighboring patches, and the classification of the resulting regimes.
"""

import logging
from dataclasses import dataclass, field
from enum import StrEnum
from typing import Any, cast

import numpy as np
from numpy.typing import NDArray
from scipy.signal import find_peaks

from chaoslab.errors import DomainError, InsufficientDataError, NonFiniteStateError
from chaoslab.options import LatticeBoundary, LatticeConfig, LatticeInit, PatchParams
from chaoslab.runio import Frame, Stream, lattice_frame, rng_grid

logger = logging.getLogger(__name__)

OVERFLOW_LIMIT = 1e300
MIN_CLASSIFIED_GENERATIONS = 500

# Row-major order of the eight Moore offsets.
MOORE_OFFSETS = ((-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1))

# The spiral start is pinned: with seeds 0 and 1 the ±10% grid collapses onto
# the homogeneous single-patch mode and dies out.
PRESETS: dict[str, dict[str, Any]] = {
    "spiral": {"n": 30, "mu_h": 1.0, "mu_p": 0.89, "steps": 2000, "seed": 2},
    "chaos": {"n": 30, "mu_h": 0.2, "mu_p": 0.89, "steps": 2000},
    "crystal": {"n": 30, "mu_h": 0.05, "mu_p": 1.0, "steps": 5000},
}


class Regime(StrEnum):
    """Long-run behaviour of a lattice."""

    EXTINCT = "extinct"
    STATIC_HETEROGENEOUS = "static-heterogeneous"
    PERSISTENT_OSCILLATORY = "persistent-oscillatory"


@dataclass(frozen=True)
class LatticeState:
    """
    Host and parasitoid densities of every patch at one generation.

    Attributes:
        hosts: n×n host densities.
        parasitoids: n×n parasitoid densities.
        t: Generation.
    """

    hosts: NDArray[np.float64]
    parasitoids: NDArray[np.float64]
    t: int = field(default=0)

    def __post_init__(self) -> None:
        """
        Validates shapes and values of the density grids.

        Raises:
            DomainError: If the grids are not equal squares of finite, non-negative values.
        """
        hosts = np.asarray(self.hosts, dtype=np.float64)
        parasitoids = np.asarray(self.parasitoids, dtype=np.float64)
        if hosts.ndim != 2 or hosts.shape[0] != hosts.shape[1] or hosts.shape != parasitoids.shape:
            raise DomainError(
                "Densities must be two equal square grids. "
                f"Invalid: {hosts.shape}, {parasitoids.shape}"
            )
        for grid in (hosts, parasitoids):
            if not np.all(np.isfinite(grid)) or np.any(grid < 0.0):
                raise DomainError("Densities must be finite and non-negative.")
        object.__setattr__(self, "hosts", hosts)
        object.__setattr__(self, "parasitoids", parasitoids)

    @property
    def n(self) -> int:
        """Side length of the patch array."""
        return int(self.hosts.shape[0])


@dataclass(frozen=True)
class LatticeRun:  # pylint: disable=too-many-instance-attributes
    """
    Record of a lattice simulation.

    Attributes:
        config: The lattice configuration.
        params: The patch parameters.
        mean_h: Global mean host density per generation, starting at t = 0.
        mean_p: Global mean parasitoid density per generation.
        residual: Largest per-patch change of H or P from generation t to t + 1.
        final: State after the last simulated generation.
        extinction_threshold: Global mean host density below which the run is extinct.
        extinct_at: Generation at which the run went extinct, if it did.
        frames: Rendered (generation, frame) pairs.
    """

    config: LatticeConfig
    params: PatchParams
    mean_h: NDArray[np.float64]
    mean_p: NDArray[np.float64]
    residual: NDArray[np.float64]
    final: LatticeState
    extinction_threshold: float
    extinct_at: int | None = None
    frames: list[tuple[int, Frame]] = field(default_factory=list)

    @property
    def generations(self) -> int:
        """Number of simulated generations."""
        return int(self.residual.size)

    def to_records(self) -> list[dict[str, Any]]:
        """Returns one `t,meanH,meanP` record per generation."""
        return [
            {"t": t, "meanH": float(h), "meanP": float(p)}
            for t, (h, p) in enumerate(zip(self.mean_h, self.mean_p))
        ]


@dataclass(frozen=True)
class RegimeReport:
    """
    Classification of a lattice run.

    Attributes:
        label: The regime.
        temporal_variance: Variance of the global mean host density after the transient.
        spatial_variance: Variance of the final host densities across patches.
        stasis_residual: Largest per-patch change after the transient.
        dominant_period: Period of the strongest oscillation of the global host density.
        generations: Number of generations the classification is based on.
    """

    label: Regime
    temporal_variance: float
    spatial_variance: float
    stasis_residual: float
    dominant_period: float | None
    generations: int


def local_update(
    hosts: NDArray[np.float64] | float,
    parasitoids: NDArray[np.float64] | float,
    params: PatchParams,
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """
    Applies one generation of Nicholson-Bailey dynamics to every patch.

    Args:
        hosts: Host densities H.
        parasitoids: Parasitoid densities P.
        params (PatchParams): Reproduction, attack and emergence rates.

    Returns:
        tuple: H' = R0·H·exp(-a·P) and P' = c·H·(1 - exp(-a·P)).
    """
    hosts = np.asarray(hosts, dtype=np.float64)
    searched = params.attack * np.asarray(parasitoids, dtype=np.float64)
    escaped = np.exp(-searched)
    return params.r0 * hosts * escaped, params.c * hosts * -np.expm1(-searched)


def nb_equilibrium(params: PatchParams) -> tuple[float, float]:
    """
    Returns the positive fixed point (H*, P*) of the Nicholson-Bailey map.

    Raises:
        DomainError: If R0 <= 1.
    """
    if params.r0 <= 1.0:
        raise DomainError(f"There is no positive equilibrium for R0 <= 1. Invalid: {params.r0}")
    log_r0 = float(np.log(params.r0))
    hosts = params.r0 * log_r0 / (params.attack * params.c * (params.r0 - 1.0))
    return hosts, log_r0 / params.attack


def _shift(grid: NDArray[np.float64], dx: int, dy: int, cyclic: bool) -> NDArray[np.float64]:
    """Moves every entry by (dx, dy); off-grid entries wrap or are dropped."""
    if cyclic:
        return cast(NDArray[np.float64], np.roll(grid, (dx, dy), axis=(0, 1)))

    n_rows, n_cols = grid.shape
    shifted = np.zeros_like(grid)
    shifted[max(dx, 0) : n_rows + min(dx, 0), max(dy, 0) : n_cols + min(dy, 0)] = grid[
        max(-dx, 0) : n_rows + min(-dx, 0), max(-dy, 0) : n_cols + min(-dy, 0)
    ]
    return shifted


def _neighbor_counts(shape: tuple[int, int]) -> NDArray[np.float64]:
    ones = np.ones(shape, dtype=np.float64)
    counts = np.zeros(shape, dtype=np.float64)
    for dx, dy in MOORE_OFFSETS:
        counts += _shift(ones, dx, dy, False)
    return counts


def disperse(
    grid: NDArray[np.float64], mu: float, boundary: LatticeBoundary = LatticeBoundary.CYCLIC
) -> NDArray[np.float64]:
    """
    Moves the fraction mu of every patch evenly to its eight neighbors.

    Args:
        grid (NDArray): n×n densities.
        mu (float): Dispersing fraction in [0, 1].
        boundary (LatticeBoundary): cyclic wraps around the edges, absorbing
            drops shares leaving the array, redistribute splits mu evenly among
            the neighbors that exist.

    Returns:
        NDArray: A new grid; the input is not modified.
    """
    if not 0.0 <= mu <= 1.0:
        raise DomainError(f"mu must lie in [0, 1]. Invalid: {mu}")
    grid = np.asarray(grid, dtype=np.float64)
    if grid.size == 1:
        return grid.copy()

    if boundary is LatticeBoundary.REDISTRIBUTE:
        shares = mu * grid / _neighbor_counts(grid.shape)
    else:
        shares = (mu / 8.0) * grid

    cyclic = boundary is LatticeBoundary.CYCLIC
    result = (1.0 - mu) * grid
    for dx, dy in MOORE_OFFSETS:
        result = result + _shift(shares, dx, dy, cyclic)
    return cast(NDArray[np.float64], result)


def _initial_state(
    config: LatticeConfig, normalized: PatchParams, scale: tuple[float, float]
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Returns the initial grids in normalized units h = a·c·H, p = a·P."""
    shape = (config.n, config.n)
    if config.init is LatticeInit.UNIFORM_RANDOM:
        h_star, p_star = nb_equilibrium(normalized)
        span = config.init_high - config.init_low
        h_factors = config.init_low + span * rng_grid(config.seed, Stream.LATTICE_INIT, 0, shape)
        p_factors = config.init_low + span * rng_grid(config.seed, Stream.LATTICE_INIT, 1, shape)
        return h_star * h_factors, p_star * p_factors

    hosts, parasitoids = np.zeros(shape), np.zeros(shape)
    if config.seed_density is None:
        h0, p0 = nb_equilibrium(normalized)
    else:
        h0, p0 = scale[0] * config.seed_density[0], scale[1] * config.seed_density[1]
    hosts[config.n // 2, config.n // 2] = h0
    parasitoids[config.n // 2, config.n // 2] = p0
    return hosts, parasitoids


def simulate(
    config: LatticeConfig,
    params: PatchParams | None = None,
    frames_every: int | None = None,
    initial: LatticeState | None = None,
) -> LatticeRun:
    """
    Runs the lattice for config.steps generations.

    Every generation applies local_update on all patches, then disperses
    hosts with mu_h, then parasitoids with mu_p. The run is integrated in the
    coordinates h = a·c·H, p = a·P, in which attack = c = 1, and reported in
    the caller's units. It stops early once the global mean host density
    falls below the extinction threshold.

    Args:
        config (LatticeConfig): Geometry, dispersal, initial condition and run length.
        params (PatchParams, optional): Patch dynamics; defaults to R0 = 2, a = c = 1.
        frames_every (int, optional): Render a frame every k generations.
        initial (LatticeState, optional): Explicit initial densities replacing config.init.

    Returns:
        LatticeRun: Global density series, final state and frames.

    Raises:
        NonFiniteStateError: If a density becomes non-finite or exceeds 1e300.
    """
    params = params or PatchParams()
    normalized = params.normalized()
    scale = (params.attack * params.c, params.attack)

    if initial is not None:
        if initial.n != config.n:
            raise DomainError(f"The initial state is {initial.n} wide, the config {config.n}")
        h, p = scale[0] * initial.hosts, scale[1] * initial.parasitoids
    else:
        h, p = _initial_state(config, normalized, scale)

    reference = nb_equilibrium(params) if params.r0 > 1.0 else (1.0, 1.0)
    threshold = config.extinction_factor * reference[0]
    frames: list[tuple[int, Frame]] = []

    def record(t: int) -> None:
        if frames_every and t % frames_every == 0:
            frames.append((t, lattice_frame(h / scale[0], p / scale[1], *reference)))

    mean_h = [float(np.mean(h)) / scale[0]]
    mean_p = [float(np.mean(p)) / scale[1]]
    residual: list[float] = []
    extinct_at: int | None = None
    record(0)

    for t in range(1, config.steps + 1):
        new_h, new_p = local_update(h, p, normalized)
        new_h = disperse(new_h, config.mu_h, config.boundary)
        new_p = disperse(new_p, config.mu_p, config.boundary)

        if not (np.all(np.isfinite(new_h)) and np.all(np.isfinite(new_p))) or max(
            float(new_h.max()), float(new_p.max())
        ) > OVERFLOW_LIMIT:
            raise NonFiniteStateError("The lattice state is no longer finite", t)

        residual.append(
            max(
                float(np.abs(new_h - h).max()) / scale[0],
                float(np.abs(new_p - p).max()) / scale[1],
            )
        )
        h, p = new_h, new_p
        mean_h.append(float(np.mean(h)) / scale[0])
        mean_p.append(float(np.mean(p)) / scale[1])
        record(t)

        if mean_h[-1] < threshold:
            extinct_at = t
            logger.info("Hosts went extinct at generation %d", t)
            break

    return LatticeRun(
        config=config,
        params=params,
        mean_h=np.array(mean_h),
        mean_p=np.array(mean_p),
        residual=np.array(residual),
        final=LatticeState(h / scale[0], p / scale[1], t=len(residual)),
        extinction_threshold=threshold,
        extinct_at=extinct_at,
        frames=frames,
    )


def oscillation_peaks(series: NDArray[np.float64]) -> NDArray[np.float64]:
    """Returns the successive local maxima of a density series."""
    values = np.asarray(series, dtype=np.float64)
    indices, _ = find_peaks(values)
    return cast(NDArray[np.float64], values[indices])


def dominant_period(series: NDArray[np.float64]) -> float | None:
    """Period of the largest non-constant Fourier component, or None for a flat series."""
    values = np.asarray(series, dtype=np.float64)
    spectrum = np.abs(np.fft.rfft(values - values.mean()))
    if values.size < 4 or not np.any(spectrum[1:] > 0.0):
        return None
    k = 1 + int(np.argmax(spectrum[1:]))
    return values.size / k


def classify_regime(run: LatticeRun) -> RegimeReport:
    """
    Labels a run as extinct, static-heterogeneous or persistent-oscillatory.

    Statistics are taken after the leading transient_fraction of the run.
    Extinct runs are labelled regardless of their length.

    Raises:
        InsufficientDataError: If fewer than 500 generations follow the transient.
    """
    config = run.config
    transient = int(config.transient_fraction * run.generations)
    after = run.mean_h[transient + 1 :]
    spatial_variance = float(np.var(run.final.hosts))

    if run.extinct_at is not None:
        return RegimeReport(
            label=Regime.EXTINCT,
            temporal_variance=float(np.var(after)) if after.size else 0.0,
            spatial_variance=spatial_variance,
            stasis_residual=float(run.residual[-1]),
            dominant_period=dominant_period(run.mean_h),
            generations=run.generations,
        )

    if run.generations - transient < MIN_CLASSIFIED_GENERATIONS:
        raise InsufficientDataError(
            f"Classification needs {MIN_CLASSIFIED_GENERATIONS} generations after the "
            f"transient, the run has {run.generations - transient}"
        )

    stasis = float(run.residual[transient:].max())
    if stasis < config.stasis_tolerance and spatial_variance > 0.0:
        label = Regime.STATIC_HETEROGENEOUS
    else:
        label = Regime.PERSISTENT_OSCILLATORY

    logger.debug("Regime %s with residual %.3g", label, stasis)
    return RegimeReport(
        label=label,
        temporal_variance=float(np.var(after)),
        spatial_variance=spatial_variance,
        stasis_residual=stasis,
        dominant_period=dominant_period(after),
        generations=run.generations,
    )


def preset(name: str, **overrides: Any) -> LatticeConfig:
    """
    Returns the configuration of a named dispersal regime.

    Raises:
        ValueError: If the preset is unknown.
    """
    if name not in PRESETS:
        raise ValueError(f"Unknown preset {name!r}. Valid: {', '.join(PRESETS)}")
    return LatticeConfig(**{**PRESETS[name], **overrides})
