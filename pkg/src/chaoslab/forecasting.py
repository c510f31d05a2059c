"""
This module contains the nonlinear forecasting toolkit: delay embedding,
simplex projection from a library of past patterns, ρ-vs-T_p curves,
embedding search, a linear autoregressive baseline, chaos/noise
classification and the aggregation experiment.
"""

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from enum import StrEnum
from typing import Any, cast

import numpy as np
from numpy.typing import NDArray
from scipy.spatial.distance import cdist
from scipy.special import ndtri

from chaoslab.errors import DomainError, InsufficientDataError
from chaoslab.maps import DEFAULT_TRANSIENT, Orbit, iterate
from chaoslab.options import ClassifierThresholds, EmbeddingConfig, MapSpec, Protocol
from chaoslab.runio import Stream, parallel_map, rng_sequence, rng_value

logger = logging.getLogger(__name__)

MIN_PREDICTIONS = 10
MIN_CLASSIFIED_HORIZON = 5
RIDGE_FACTOR = 1e-8


class Verdict(StrEnum):
    """Shapes of a ρ-vs-T_p curve."""

    CHAOS_LIKE = "chaos-like"
    NOISE_LIKE = "noise-like"
    PERIODIC_PLUS_NOISE = "periodic-plus-noise"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class Series:
    """
    A uniformly sampled scalar time series.

    Attributes:
        values: The observations.
        label: Free text describing the series.
    """

    values: NDArray[np.float64]
    label: str = field(default="")

    def __post_init__(self) -> None:
        """
        Validates length and finiteness of the observations.

        Raises:
            InsufficientDataError: If there are fewer than two observations.
            DomainError: If an observation is not finite.
        """
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 1 or values.size < 2:
            raise InsufficientDataError(
                f"A series needs at least 2 values. Invalid: {values.shape}"
            )
        if not np.all(np.isfinite(values)):
            raise DomainError("A series may only contain finite values.")
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return int(self.values.size)


@dataclass(frozen=True)
class Library:
    """
    Delay vectors {x_t, x_{t-τ}, ..., x_{t-(E-1)τ}} tagged with their time index t.

    Attributes:
        points: One row per delay vector.
        times: Time index t of every row, increasing.
        source: The series the vectors were taken from.
        dimension: Embedding dimension E.
        tau: Lag τ.
        end: Exclusive end of the segment whose values may serve as targets.
    """

    points: NDArray[np.float64]
    times: NDArray[np.intp]
    source: NDArray[np.float64]
    dimension: int
    tau: int
    end: int

    def __len__(self) -> int:
        return int(self.times.size)

    def admits(self, p: int) -> NDArray[np.bool_]:
        """Marks the points whose p-step continuation lies inside the segment."""
        return cast(NDArray[np.bool_], self.times + p < self.end)


@dataclass(frozen=True)
class RhoCurve:
    """
    Forecast skill as a function of the prediction interval.

    Attributes:
        horizons: Prediction intervals T_p = 1, ..., p_max.
        rho: Pearson correlation per interval; NaN where undefined.
        n_predictions: Number of predictions per interval.
        decay_rate: Slope of ln ρ against T_p over the leading positive ρ values.
    """

    horizons: NDArray[np.intp]
    rho: NDArray[np.float64]
    n_predictions: NDArray[np.intp]
    decay_rate: float | None = None

    @property
    def p_max(self) -> int:
        """The longest prediction interval."""
        return int(self.horizons[-1])

    @property
    def undefined(self) -> NDArray[np.bool_]:
        """Marks intervals whose predictees had zero variance."""
        return np.isnan(self.rho)

    def at(self, horizon: int) -> float:
        """Returns ρ at one prediction interval."""
        return float(self.rho[horizon - 1])

    def to_records(self) -> list[dict[str, Any]]:
        """Returns one `T_p,rho,n` record per interval."""
        return [
            {"T_p": int(t), "rho": None if math.isnan(r) else float(r), "n": int(n)}
            for t, r, n in zip(self.horizons, self.rho, self.n_predictions)
        ]


@dataclass(frozen=True)
class SearchResult:
    """
    Outcome of an embedding search.

    Attributes:
        dimension: Selected embedding dimension.
        tau: Selected lag.
        score: ρ at the evaluation interval for the selected pair.
        table: (E, tau, ρ) for every evaluated pair; ρ is None if undefined or inadmissible.
    """

    dimension: int
    tau: int
    score: float
    table: list[tuple[int, int, float | None]]


@dataclass(frozen=True)
class NeighborTable:
    """
    The library neighbors used for every predictee at one prediction interval.

    Attributes:
        predictee_times: Time index of every predictee whose continuation is observed.
        times: Time indices of the E+1 nearest neighbors, one row per predictee.
        distances: Distances of those neighbors, increasing along each row.
    """

    predictee_times: NDArray[np.intp]
    times: NDArray[np.intp]
    distances: NDArray[np.float64]


@dataclass(frozen=True)
class _Predictees:
    """Predictee vectors of a protocol with their distances to the library."""

    values: NDArray[np.float64]
    library: Library
    times: NDArray[np.intp]
    distances: NDArray[np.float64]
    excluded: NDArray[np.bool_] | None
    neighbors: int


def embed(series: Series, dimension: int, tau: int) -> Library:
    """
    Builds the pattern library of all delay vectors of a series.

    Args:
        series (Series): The observations.
        dimension (int): Embedding dimension E >= 1.
        tau (int): Lag τ >= 1.

    Returns:
        Library: len(series) - (E-1)·τ points tagged with their time index.

    Raises:
        InsufficientDataError: If the series is not longer than (E-1)·τ + 1.
    """
    return _segment_library(series.values, 0, len(series), dimension, tau)


def _segment_library(
    values: NDArray[np.float64], start: int, stop: int, dimension: int, tau: int
) -> Library:
    """Embeds values[start:stop] keeping absolute time indices."""
    if dimension < 1 or tau < 1:
        raise DomainError(f"dimension and tau must be at least 1. Invalid: {dimension}, {tau}")
    span = (dimension - 1) * tau
    if stop - start <= span + 1:
        raise InsufficientDataError(
            f"A segment of {stop - start} values is too short for E = {dimension}, tau = {tau}"
        )

    times = np.arange(start + span, stop, dtype=np.intp)
    offsets = tau * np.arange(dimension, dtype=np.intp)
    points = values[times[:, None] - offsets[None, :]]
    return Library(
        points=points, times=times, source=values, dimension=dimension, tau=tau, end=stop
    )


def reconstruct(library: Library, index: int) -> NDArray[np.float64]:
    """Returns the series values behind the library point at row index."""
    t = int(library.times[index])
    offsets = library.tau * np.arange(library.dimension)
    return cast(NDArray[np.float64], library.source[t - offsets])


def _simplex_weights(distances: NDArray[np.float64]) -> NDArray[np.float64]:
    """
    Computes exp(-d_i/d_1) along the last axis, d_1 being the first (nearest) distance.

    If d_1 is zero, every zero-distance neighbor weighs 1 and all others 0.
    """
    nearest = distances[..., :1]
    degenerate = nearest == 0.0
    safe = np.where(degenerate, 1.0, nearest)
    weights = np.where(
        degenerate, (distances == 0.0).astype(np.float64), np.exp(-distances / safe)
    )
    return cast(NDArray[np.float64], weights)


def _weighted_means(
    distances: NDArray[np.float64], targets: NDArray[np.float64]
) -> NDArray[np.float64]:
    weights = _simplex_weights(distances)
    return cast(NDArray[np.float64], (weights * targets).sum(axis=-1) / weights.sum(axis=-1))


def simplex_predict(
    library: Library,
    query: NDArray[np.float64],
    query_time: int | None = None,
    p: int = 1,
    exclusion: int = 0,
) -> float:
    """
    Projects a query point p steps ahead from its E+1 nearest library neighbors.

    Neighbors are ranked by Euclidean distance, ties by smaller time index.
    Their p-step continuations are averaged with weights exp(-d_i/d_1).

    Args:
        library (Library): The pattern library.
        query (NDArray): An E-dimensional delay vector.
        query_time (int, optional): Time index of the query; library points
            within ±exclusion of it are not used.
        p (int): Prediction interval.
        exclusion (int): Half-width of the excluded window around query_time.

    Returns:
        float: The predicted value.

    Raises:
        InsufficientDataError: If fewer than E+2 library points are eligible.
    """
    query = np.asarray(query, dtype=np.float64).reshape(1, -1)
    if query.shape[1] != library.dimension:
        raise DomainError(
            f"The query has {query.shape[1]} coordinates, the library {library.dimension}"
        )

    eligible = library.admits(p)
    if query_time is not None:
        eligible &= np.abs(library.times - query_time) > exclusion
    candidates = np.flatnonzero(eligible)

    neighbors = library.dimension + 1
    if candidates.size < neighbors + 1:
        raise InsufficientDataError(
            f"Only {candidates.size} library points are eligible, {neighbors + 1} are needed"
        )

    distances = cdist(query, library.points[candidates])[0]
    times = library.times[candidates]
    nearest = np.lexsort((times, distances))[:neighbors]
    targets = library.source[times[nearest] + p]
    return float(_weighted_means(distances[nearest], targets))


def pearson(x: NDArray[np.float64], y: NDArray[np.float64]) -> float | None:
    """
    Textbook Pearson correlation coefficient.

    Returns:
        float | None: ρ in [-1, 1], or None if either input has zero variance.
    """
    dx = np.asarray(x, dtype=np.float64) - np.mean(x)
    dy = np.asarray(y, dtype=np.float64) - np.mean(y)
    denominator = math.sqrt(float(np.sum(dx * dx)) * float(np.sum(dy * dy)))
    if denominator == 0.0:
        return None
    return max(-1.0, min(1.0, float(np.sum(dx * dy)) / denominator))


def _split_segments(
    length: int, protocol: Protocol
) -> tuple[tuple[int, int], tuple[int, int]]:
    """Returns the (library segment, predictee segment) of a protocol."""
    half = length // 2
    if protocol is Protocol.HALF_SPLIT_FORWARD:
        return (0, half), (half, length)
    if protocol is Protocol.HALF_SPLIT_BACKWARD:
        return (half, length), (0, half)
    return (0, length), (0, length)


def _decay_rate(horizons: NDArray[np.intp], rho: NDArray[np.float64]) -> float | None:
    """Fits ln ρ against T_p over the leading run of positive ρ."""
    positive = np.isfinite(rho) & (rho > 0.0)
    prefix = int(np.argmin(positive)) if not positive.all() else positive.size
    if prefix < 2:
        return None
    slope, _ = np.polyfit(horizons[:prefix].astype(np.float64), np.log(rho[:prefix]), 1)
    return float(slope)


def _curve(
    horizons: NDArray[np.intp], results: Sequence[tuple[float | None, int]]
) -> RhoCurve:
    rho = np.array([np.nan if r is None else r for r, _ in results], dtype=np.float64)
    counts = np.array([n for _, n in results], dtype=np.intp)
    return RhoCurve(
        horizons=horizons, rho=rho, n_predictions=counts, decay_rate=_decay_rate(horizons, rho)
    )


def _predictees(series: Series, config: EmbeddingConfig) -> _Predictees:
    values = series.values
    (lib_start, lib_stop), (pred_start, pred_stop) = _split_segments(len(series), config.protocol)
    library = _segment_library(values, lib_start, lib_stop, config.dimension, config.tau)

    span = (config.dimension - 1) * config.tau
    times = np.arange(max(pred_start, span), pred_stop, dtype=np.intp)
    offsets = config.tau * np.arange(config.dimension, dtype=np.intp)
    distances = cdist(values[times[:, None] - offsets[None, :]], library.points)

    excluded: NDArray[np.bool_] | None = None
    if config.protocol is Protocol.FULL_WITH_EXCLUSION:
        excluded = np.abs(times[:, None] - library.times[None, :]) <= config.exclusion
    return _Predictees(values, library, times, distances, excluded, config.dimension + 1)


def _nearest(prepared: _Predictees, p: int) -> NeighborTable:
    """Picks the E+1 nearest eligible neighbors, ties going to the smaller time index."""
    rows = prepared.times + p < prepared.values.size
    if np.count_nonzero(rows) < MIN_PREDICTIONS:
        raise InsufficientDataError(f"T_p = {p} admits only {np.count_nonzero(rows)} predictions")

    library = prepared.library
    eligible = np.broadcast_to(library.admits(p), prepared.distances.shape)
    if prepared.excluded is not None:
        eligible = eligible & ~prepared.excluded
    eligible = eligible[rows]
    if eligible.sum(axis=1).min() < prepared.neighbors + 1:
        raise InsufficientDataError(
            f"A predictee has fewer than {prepared.neighbors + 1} neighbors"
        )

    masked = np.where(eligible, prepared.distances[rows], np.inf)
    nearest = np.argsort(masked, axis=1, kind="stable")[:, : prepared.neighbors]
    return NeighborTable(
        predictee_times=prepared.times[rows],
        times=library.times[nearest],
        distances=np.take_along_axis(masked, nearest, axis=1),
    )


def forecast_neighbors(series: Series, config: EmbeddingConfig, p: int) -> NeighborTable:
    """
    Returns the library neighbors rho_curve uses at the prediction interval p.

    Raises:
        InsufficientDataError: If the interval admits fewer than 10 predictions or
            a predictee has fewer than E+2 eligible neighbors.
    """
    if p < 1:
        raise DomainError(f"p must be at least 1. Invalid: {p}")
    return _nearest(_predictees(series, config), p)


def rho_curve(series: Series, config: EmbeddingConfig, p_max: int) -> RhoCurve:
    """
    Correlates simplex forecasts with observations for T_p = 1, ..., p_max.

    Args:
        series (Series): The observations.
        config (EmbeddingConfig): Embedding and library protocol.
        p_max (int): Longest prediction interval.

    Returns:
        RhoCurve: ρ per interval; undefined intervals hold NaN.

    Raises:
        InsufficientDataError: If an interval admits fewer than 10 predictions or
            a predictee has fewer than E+2 eligible neighbors.
    """
    if p_max < 1:
        raise DomainError(f"p_max must be at least 1. Invalid: {p_max}")

    prepared = _predictees(series, config)
    values = prepared.values

    def interval(p: int) -> tuple[float | None, int]:
        table = _nearest(prepared, p)
        targets = values[table.times + p]
        predictions = _weighted_means(table.distances, targets)
        observations = values[table.predictee_times + p]
        return pearson(predictions, observations), int(predictions.size)

    horizons = np.arange(1, p_max + 1, dtype=np.intp)
    curve = _curve(horizons, parallel_map(interval, [int(p) for p in horizons]))
    logger.debug(
        "rho curve %s E=%d tau=%d: %s", series.label, config.dimension, config.tau, curve.rho
    )
    return curve


def grid_search(
    series: Series,
    dimensions: Sequence[int],
    taus: Sequence[int],
    template: EmbeddingConfig | None = None,
    p_eval: int = 1,
) -> SearchResult:
    """
    Selects the (E, τ) pair with the highest ρ at the evaluation interval.

    Ties go to the smaller E, then the smaller τ. Pairs the series cannot
    support are recorded as inadmissible.

    Raises:
        DomainError: If a range is empty.
        InsufficientDataError: If no pair is admissible.
    """
    if not dimensions or not taus:
        raise DomainError("The search ranges may not be empty.")
    template = template or EmbeddingConfig()
    pairs = [(e, tau) for e in sorted(set(dimensions)) for tau in sorted(set(taus))]

    def evaluate(pair: tuple[int, int]) -> float | None:
        config = EmbeddingConfig(
            dimension=pair[0],
            tau=pair[1],
            exclusion=template.exclusion,
            protocol=template.protocol,
        )
        try:
            rho = rho_curve(series, config, p_eval).at(p_eval)
        except InsufficientDataError:
            logger.debug("E=%d tau=%d is inadmissible for %s", pair[0], pair[1], series.label)
            return None
        return None if math.isnan(rho) else rho

    scores = parallel_map(evaluate, pairs)
    table = [(e, tau, score) for (e, tau), score in zip(pairs, scores)]

    best: tuple[int, int, float] | None = None
    for e, tau, score in table:
        if score is not None and (best is None or score > best[2]):
            best = (e, tau, score)

    if best is None:
        raise InsufficientDataError("No (E, tau) pair is admissible for this series.")

    logger.info("Selected E=%d tau=%d with rho=%.4f", *best)
    return SearchResult(dimension=best[0], tau=best[1], score=best[2], table=table)


def _least_squares(design: NDArray[np.float64], target: NDArray[np.float64]) -> NDArray[np.float64]:
    """Solves the normal equations, falling back to ridge 1e-8·trace if they are singular."""
    gram = design.T @ design
    moment = design.T @ target
    if np.linalg.matrix_rank(gram) == gram.shape[0]:
        try:
            return cast(NDArray[np.float64], np.linalg.solve(gram, moment))
        except np.linalg.LinAlgError:
            pass

    ridge = RIDGE_FACTOR * float(np.trace(gram)) or RIDGE_FACTOR
    logger.debug("Singular normal equations, using ridge %.3g", ridge)
    return cast(
        NDArray[np.float64], np.linalg.solve(gram + ridge * np.eye(gram.shape[0]), moment)
    )


def ar_rho_curve(
    series: Series,
    order: int,
    protocol: Protocol = Protocol.HALF_SPLIT_FORWARD,
    p_max: int = 10,
) -> RhoCurve:
    """
    ρ-vs-T_p curve of a global linear autoregression used as a baseline.

    The model x_t = c + Σ β_k·x_{t-k}, k = 1..order, is fitted by least
    squares on the library segment of the protocol and iterated p steps
    from every predictee.

    Raises:
        InsufficientDataError: If the series is shorter than 10·order.
    """
    if order < 1:
        raise DomainError(f"order must be at least 1. Invalid: {order}")
    if len(series) < 10 * order:
        raise InsufficientDataError(f"An AR({order}) fit needs at least {10 * order} values")

    values = series.values
    (lib_start, lib_stop), (pred_start, pred_stop) = _split_segments(len(series), protocol)

    fit_times = np.arange(lib_start + order, lib_stop, dtype=np.intp)
    lags = np.arange(1, order + 1, dtype=np.intp)
    design = np.column_stack([np.ones(fit_times.size), values[fit_times[:, None] - lags[None, :]]])
    coefficients = _least_squares(design, values[fit_times])

    predictee_times = np.arange(max(pred_start, order - 1), pred_stop, dtype=np.intp)
    history = values[predictee_times[:, None] - np.arange(order)[None, :]]

    results: list[tuple[float | None, int]] = []
    for p in range(1, p_max + 1):
        forecast = coefficients[0] + history @ coefficients[1:]
        history = np.column_stack([forecast, history[:, :-1]])
        rows = predictee_times + p < len(series)
        if np.count_nonzero(rows) < MIN_PREDICTIONS:
            raise InsufficientDataError(
                f"T_p = {p} admits only {np.count_nonzero(rows)} predictions"
            )
        observations = values[predictee_times[rows] + p]
        results.append((pearson(forecast[rows], observations), int(np.count_nonzero(rows))))

    return _curve(np.arange(1, p_max + 1, dtype=np.intp), results)


def classify(
    curve: RhoCurve,
    baseline: RhoCurve | None = None,
    thresholds: ClassifierThresholds | None = None,
) -> Verdict:
    """
    Labels the shape of a ρ-vs-T_p curve.

    Checks run in order: chaos-like (high ρ(1) that falls off), noise-like
    (small |ρ| throughout), periodic-plus-noise (high and flat ρ). A chaos-like
    curve must also beat the linear baseline at T_p = 1 when one is given.

    Raises:
        DomainError: If the curve is shorter than five intervals.
    """
    if curve.p_max < MIN_CLASSIFIED_HORIZON:
        raise DomainError(f"Classification needs p_max >= {MIN_CLASSIFIED_HORIZON}")
    thresholds = thresholds or ClassifierThresholds()

    rho = curve.rho
    if np.isnan(rho).any():
        return Verdict.INCONCLUSIVE
    first, last = float(rho[0]), float(rho[-1])

    if first >= thresholds.chaos_min_rho and first - last >= thresholds.chaos_min_drop:
        if baseline is not None and not first > baseline.at(1):
            return Verdict.INCONCLUSIVE
        return Verdict.CHAOS_LIKE
    if float(np.abs(rho).max()) < thresholds.noise_max_rho:
        return Verdict.NOISE_LIKE
    if first >= thresholds.chaos_min_rho and float(np.ptp(rho)) < thresholds.periodic_max_range:
        return Verdict.PERIODIC_PLUS_NOISE
    return Verdict.INCONCLUSIVE


def independent_components(spec: MapSpec, k: int, seed: int = 0) -> list[tuple[MapSpec, float]]:
    """Draws k initial states in [0.05, 0.95] from the aggregation stream."""
    if k < 1:
        raise DomainError(f"k must be at least 1. Invalid: {k}")
    return [(spec, 0.05 + 0.9 * rng_value(seed, (Stream.AGGREGATE, i))) for i in range(k)]


def aggregate_orbits(orbits: Sequence[Orbit | NDArray[np.float64]], label: str = "") -> Series:
    """
    Sums component orbits elementwise.

    Raises:
        DomainError: If there are no components or their lengths differ.
    """
    arrays = [o.samples if isinstance(o, Orbit) else np.asarray(o, np.float64) for o in orbits]
    if not arrays:
        raise DomainError("There are no components to aggregate.")
    lengths = {a.size for a in arrays}
    if len(lengths) != 1:
        raise DomainError(f"Component length mismatch: {sorted(lengths)}")
    return Series(np.sum(np.stack(arrays), axis=0), label=label)


def aggregate_series(
    components: Sequence[tuple[MapSpec, float]],
    n: int,
    transient: int = DEFAULT_TRANSIENT,
) -> Series:
    """Returns the elementwise sum of independently initialized map orbits."""
    orbits = [iterate(spec, x0, n, transient) for spec, x0 in components]
    return aggregate_orbits(orbits, label=f"sum of {len(orbits)} maps")


def logistic_series(
    n: int, a: float = 4.0, x0: float = 0.3, transient: int = DEFAULT_TRANSIENT
) -> Series:
    """A logistic-map orbit as a series."""
    return Series(iterate(MapSpec(a=a), x0, n, transient).samples, label=f"logistic a={a}")


def white_noise(n: int, seed: int = 0) -> Series:
    """Independent uniform values on [0, 1)."""
    return Series(rng_sequence(seed, Stream.SYNTHETIC, n), label="white noise")


def sine_series(n: int, period: float = 20.0, noise: float = 0.0, seed: int = 0) -> Series:
    """A sampled sinusoid, optionally plus uniform noise of the given amplitude."""
    t = np.arange(n, dtype=np.float64)
    values = np.sin(2.0 * np.pi * t / period)
    if noise > 0.0:
        values = values + noise * (rng_sequence(seed, Stream.SYNTHETIC, n) - 0.5)
    return Series(values, label=f"sine period={period}")


def ar1_series(
    n: int, phi: float = 0.9, sigma: float = 1.0, seed: int = 0, burn_in: int = 100
) -> Series:
    """A Gaussian AR(1) process x_{t+1} = phi·x_t + sigma·e_t."""
    uniforms = rng_sequence(seed, Stream.SYNTHETIC, n + burn_in) + 2.0**-54
    innovations = sigma * ndtri(uniforms)
    x = 0.0
    values: list[float] = []
    for e in innovations:
        x = phi * x + float(e)
        values.append(x)
    return Series(np.array(values[burn_in:], dtype=np.float64), label=f"AR(1) phi={phi}")
