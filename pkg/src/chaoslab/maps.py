"""
This module contains the first-order difference equations of chaoslab:
iteration, Lyapunov exponents, the predictability horizon, bifurcation
scans and invariant-density checks.
"""

import logging
import math
from dataclasses import dataclass
from typing import Literal, cast

import numpy as np
from numpy.typing import NDArray
from scipy import stats

from chaoslab.errors import DomainError, InsufficientDataError, NonFiniteStateError, NotChaoticError
from chaoslab.options import MapKind, MapSpec
from chaoslab.runio import parallel_map

logger = logging.getLogger(__name__)

DEFAULT_TRANSIENT = 1000
DEFAULT_X0 = 0.3
DEFAULT_ITERATES = 10_000
SLOPE_FLOOR = 1e-300
MIN_GLOBAL_ITERATES = 1000
MIN_WINDOW = 10
MIN_BINS = 8
OVERFLOW_LIMIT = 1e300


@dataclass(frozen=True)
class Orbit:
    """
    A trajectory of a map after its transient.

    Attributes:
        samples: The recorded states.
        x0: The initial state.
        transient: Number of leading iterates discarded before recording.
        spec: The map that generated the samples.
    """

    samples: NDArray[np.float64]
    x0: float
    transient: int
    spec: MapSpec


@dataclass(frozen=True)
class LyapunovEstimate:
    """
    Mean logarithmic slope along an orbit.

    Attributes:
        exponent: Estimate of λ in nats per iterate.
        n_iterates: Number of iterates averaged.
        clamped: Number of iterates whose slope was zero or below 1e-300 and
            whose logarithm was clamped. A positive count marks a superstable
            orbit whose true exponent is negative infinity.
        window_series: Sliding-window means (local Lyapunov exponents), if requested.
    """

    exponent: float
    n_iterates: int
    clamped: int = 0
    window_series: NDArray[np.float64] | None = None

    @property
    def superstable(self) -> bool:
        """True if the orbit met a zero slope."""
        return self.clamped > 0


@dataclass(frozen=True)
class BifurcationColumn:
    """Attractor samples recorded at one parameter value."""

    parameter: float
    samples: NDArray[np.float64]


@dataclass(frozen=True)
class DensityHistogram:
    """
    A normalized histogram of orbit samples.

    Attributes:
        edges: Bin edges, one more than bins.
        mass: Probability mass per bin, summing to one.
        reference: Reference mass per bin, if a reference density was requested.
        occupied_bins: Number of bins with positive mass.
    """

    edges: NDArray[np.float64]
    mass: NDArray[np.float64]
    reference: NDArray[np.float64] | None = None
    occupied_bins: int = 0

    @property
    def l1_distance(self) -> float | None:
        """Sum of absolute differences between mass and reference."""
        if self.reference is None:
            return None
        return float(np.abs(self.mass - self.reference).sum())


class OneDimensionalMap:
    """
    Evaluates a map and its derivative.

    The Ricker map is evaluated in the scaled variable y = scale·N, for which
    it reads y -> R0·y·exp(-y), and states are converted back to densities.
    Orbits of different scales are therefore exact rescalings of each other
    whenever the scaled initial states agree.

    Args:
        spec (MapSpec): The map parameters.
    """

    def __init__(self, spec: MapSpec):
        self.spec = spec

    def check_initial_state(self, x0: float) -> None:
        """
        Validates an initial state.

        Raises:
            DomainError: If x0 lies outside the map's domain.
        """
        if not math.isfinite(x0):
            raise DomainError(f"The initial state must be finite. Invalid: {x0}")
        if self.spec.kind is MapKind.LOGISTIC and not 0.0 <= x0 <= 1.0:
            raise DomainError(f"The logistic map requires x0 in [0, 1]. Invalid: {x0}")
        if self.spec.kind is MapKind.RICKER and x0 < 0.0:
            raise DomainError(f"The Ricker map requires x0 >= 0. Invalid: {x0}")

    def slopes(self, states: NDArray[np.float64]) -> NDArray[np.float64]:
        """Returns dF/dx evaluated at every state."""
        spec = self.spec
        if spec.kind is MapKind.LOGISTIC:
            return cast(NDArray[np.float64], spec.a * (1.0 - 2.0 * states))
        y = spec.scale * states
        return cast(NDArray[np.float64], spec.r0 * np.exp(-y) * (1.0 - y))

    def fixed_point(self) -> float:
        """
        Returns the nontrivial fixed point.

        Raises:
            DomainError: If the map has no positive fixed point.
        """
        spec = self.spec
        if spec.kind is MapKind.LOGISTIC:
            if spec.a <= 1.0:
                raise DomainError(f"The logistic map has no positive fixed point for a = {spec.a}")
            return 1.0 - 1.0 / spec.a
        if spec.r0 <= 1.0:
            raise DomainError(f"The Ricker map has no positive fixed point for R0 = {spec.r0}")
        return math.log(spec.r0) / spec.scale

    def orbit(self, x0: float, n: int, transient: int) -> NDArray[np.float64]:
        """Returns n states following `transient` discarded iterates."""
        self.check_initial_state(x0)
        if self.spec.kind is MapKind.LOGISTIC:
            return self._logistic_orbit(x0, n, transient)
        return self._ricker_orbit(x0, n, transient)

    def _logistic_orbit(self, x0: float, n: int, transient: int) -> NDArray[np.float64]:
        a = self.spec.a
        x = x0
        samples: list[float] = []
        for step in range(transient + n):
            x = a * x * (1.0 - x)
            if not 0.0 <= x <= 1.0:
                raise NonFiniteStateError(f"The logistic orbit left [0, 1] with x = {x}", step)
            if step >= transient:
                samples.append(x)
        return np.array(samples, dtype=np.float64)

    def _ricker_orbit(self, x0: float, n: int, transient: int) -> NDArray[np.float64]:
        r0 = self.spec.r0
        scale = self.spec.scale
        y = scale * x0
        samples: list[float] = []
        for step in range(transient + n):
            y = r0 * y * math.exp(-y)
            if not 0.0 <= y < OVERFLOW_LIMIT:
                raise NonFiniteStateError(f"The Ricker orbit broke down with y = {y}", step)
            if step >= transient:
                samples.append(y)
        return np.array(samples, dtype=np.float64) / scale


def iterate(
    spec: MapSpec, x0: float, n: int, transient: int = DEFAULT_TRANSIENT
) -> Orbit:
    """
    Iterates a map and records n states after discarding a transient.

    Args:
        spec (MapSpec): The map.
        x0 (float): The initial state.
        n (int): Number of recorded states, at least 1.
        transient (int): Number of discarded leading iterates.

    Returns:
        Orbit: The recorded trajectory; identical inputs give identical samples.

    Raises:
        DomainError: If x0, n or transient are invalid.
        NonFiniteStateError: If an iterate leaves the map's domain.
    """
    if n < 1:
        raise DomainError(f"n must be at least 1. Invalid: {n}")
    if transient < 0:
        raise DomainError(f"transient may not be negative. Invalid: {transient}")

    samples = OneDimensionalMap(spec).orbit(x0, n, transient)
    return Orbit(samples=samples, x0=x0, transient=transient, spec=spec)


def lyapunov(
    spec: MapSpec,
    x0: float = DEFAULT_X0,
    n: int = DEFAULT_ITERATES,
    transient: int = DEFAULT_TRANSIENT,
    window: int | None = None,
) -> LyapunovEstimate:
    """
    Estimates the Lyapunov exponent as the orbit average of ln|dF/dx|.

    Slopes below 1e-300 in magnitude are clamped to 1e-300 and counted.

    Args:
        spec (MapSpec): The map.
        x0 (float): The initial state.
        n (int): Number of averaged iterates, at least 1000.
        transient (int): Number of discarded leading iterates.
        window (int, optional): Width of the sliding window of local exponents, at least 10.

    Returns:
        LyapunovEstimate: The global estimate and, if requested, the local series.
    """
    if n < MIN_GLOBAL_ITERATES:
        raise InsufficientDataError(
            f"A global estimate needs at least {MIN_GLOBAL_ITERATES} iterates. Invalid: {n}"
        )
    if window is not None and not MIN_WINDOW <= window <= n:
        raise DomainError(f"window must lie in [{MIN_WINDOW}, n]. Invalid: {window}")

    orbit = iterate(spec, x0, n, transient)
    magnitudes = np.abs(OneDimensionalMap(spec).slopes(orbit.samples))
    clamped = int(np.count_nonzero(magnitudes < SLOPE_FLOOR))
    logs = np.log(np.maximum(magnitudes, SLOPE_FLOOR))

    window_series = None
    if window is not None:
        sums = np.concatenate(([0.0], np.cumsum(logs)))
        window_series = (sums[window:] - sums[:-window]) / window

    estimate = LyapunovEstimate(
        exponent=float(logs.mean()),
        n_iterates=n,
        clamped=clamped,
        window_series=window_series,
    )
    logger.debug("lambda(%s=%s) = %.6f", spec.parameter_name, spec.parameter, estimate.exponent)
    return estimate


def lyapunov_horizon(exponent: float, epsilon: float) -> float:
    """
    Returns the horizon ln(1/epsilon)/exponent beyond which forecasts fail.

    Raises:
        NotChaoticError: If the exponent is not positive.
        DomainError: If epsilon lies outside (0, 1).
    """
    if not exponent > 0.0:
        raise NotChaoticError(f"not chaotic: horizon undefined for lambda = {exponent}")
    if not 0.0 < epsilon < 1.0:
        raise DomainError(f"epsilon must lie in (0, 1). Invalid: {epsilon}")
    return math.log(1.0 / epsilon) / exponent


def _parameter_grid(low: float, high: float, count: int) -> NDArray[np.float64]:
    if low > high:
        raise DomainError(f"The parameter range is empty: {low} > {high}")
    if low == high:
        return np.array([low], dtype=np.float64)
    if count < 2:
        raise DomainError(f"A parameter range needs at least 2 values. Invalid: {count}")
    return np.linspace(low, high, count)


def bifurcation_scan(
    template: MapSpec,
    low: float,
    high: float,
    n_params: int,
    settle: int = DEFAULT_TRANSIENT,
    keep: int = 100,
    x0: float = DEFAULT_X0,
) -> list[BifurcationColumn]:
    """
    Records attractor samples across a range of the bifurcation parameter.

    A degenerate range low == high yields a single column.

    Returns:
        list[BifurcationColumn]: Columns ordered by parameter.
    """
    parameters = _parameter_grid(low, high, n_params)
    specs = [template.with_parameter(p) for p in parameters]

    def column(spec: MapSpec) -> BifurcationColumn:
        orbit = iterate(spec, x0, keep, transient=settle)
        return BifurcationColumn(parameter=spec.parameter, samples=orbit.samples)

    logger.info("Scanning %d values of %s", len(specs), template.parameter_name)
    return parallel_map(column, specs)


def lyapunov_scan(
    template: MapSpec,
    parameters: NDArray[np.float64],
    n: int = DEFAULT_ITERATES,
    transient: int = DEFAULT_TRANSIENT,
    x0: float = DEFAULT_X0,
) -> NDArray[np.float64]:
    """Returns the Lyapunov exponent for every parameter, in order."""
    specs = [template.with_parameter(p) for p in parameters]
    exponents = parallel_map(lambda spec: lyapunov(spec, x0, n, transient).exponent, specs)
    return np.array(exponents, dtype=np.float64)


def chaos_onset(
    template: MapSpec,
    low: float = 3.5,
    high: float = 3.7,
    step: float = 0.001,
    n: int = DEFAULT_ITERATES,
    transient: int = DEFAULT_TRANSIENT,
) -> float | None:
    """
    Returns the smallest parameter on a regular grid with a positive exponent.

    Returns:
        float | None: The onset, or None if no grid value is chaotic.
    """
    count = int(round((high - low) / step)) + 1
    parameters = low + step * np.arange(count)
    exponents = lyapunov_scan(template, parameters, n, transient)
    chaotic = np.flatnonzero(exponents > 0.0)
    if chaotic.size == 0:
        return None
    return float(parameters[chaotic[0]])


def arcsine_cdf(x: NDArray[np.float64]) -> NDArray[np.float64]:
    """Distribution function (2/π)·arcsin(√x) of the density 1/(π·√(x(1-x)))."""
    return cast(NDArray[np.float64], 2.0 / np.pi * np.arcsin(np.sqrt(np.clip(x, 0.0, 1.0))))


def arcsine_transform(samples: NDArray[np.float64]) -> NDArray[np.float64]:
    """Maps arcsine-distributed samples onto uniformly distributed ones."""
    return arcsine_cdf(samples)


def uniformity_test(samples: NDArray[np.float64]) -> tuple[float, float]:
    """
    Kolmogorov-Smirnov test of samples against the uniform law on [0, 1].

    Returns:
        tuple[float, float]: The KS statistic and its p-value.
    """
    result = stats.kstest(samples, "uniform")
    return float(result.statistic), float(result.pvalue)


def density_histogram(
    orbit: Orbit | NDArray[np.float64],
    bins: int = 50,
    reference: Literal["arcsine", "uniform"] | None = None,
    support: tuple[float, float] = (0.0, 1.0),
) -> DensityHistogram:
    """
    Bins orbit samples into a normalized histogram.

    Args:
        orbit (Orbit | NDArray): The orbit or its samples.
        bins (int): Number of equal-width bins, at least 8.
        reference (str, optional): arcsine or uniform reference mass per bin.
        support (tuple[float, float]): The binned interval.

    Returns:
        DensityHistogram: Mass per bin; a degenerate orbit simply occupies one bin.

    Raises:
        DomainError: If bins < 8 or the support is empty.
        InsufficientDataError: If there are fewer samples than bins.
    """
    samples = orbit.samples if isinstance(orbit, Orbit) else np.asarray(orbit, dtype=np.float64)
    if bins < MIN_BINS:
        raise DomainError(f"bins must be at least {MIN_BINS}. Invalid: {bins}")
    if samples.size < bins:
        raise InsufficientDataError(f"{samples.size} samples are too few for {bins} bins")
    low, high = support
    if not low < high:
        raise DomainError(f"The support is empty: {support}")

    counts, edges = np.histogram(samples, bins=bins, range=(low, high))
    inside = int(counts.sum())
    if inside == 0:
        raise InsufficientDataError(f"No sample lies inside the support {support}")
    mass = counts / inside

    reference_mass = None
    if reference == "arcsine":
        reference_mass = np.diff(arcsine_cdf(edges))
    elif reference == "uniform":
        reference_mass = np.diff(edges) / (high - low)

    return DensityHistogram(
        edges=edges,
        mass=mass,
        reference=reference_mass,
        occupied_bins=int(np.count_nonzero(counts)),
    )
