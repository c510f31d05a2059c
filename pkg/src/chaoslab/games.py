"""
This module contains the spatial Prisoner's Dilemma: every site plays the
one-shot game with its neighbors and is taken over by the strategy of the
best-scoring site around it.
"""

import logging
import math
from collections.abc import Iterator
from dataclasses import dataclass, field, replace
from enum import StrEnum
from itertools import chain
from typing import Any, cast

import numpy as np
from numpy.typing import NDArray
from scipy.integrate import quad

from chaoslab.errors import BoundaryContactError, DomainError
from chaoslab.options import (
    ClusterKind,
    GameBoundary,
    GameConfig,
    GameInit,
    Neighborhood,
    Payoffs,
    UpdateMode,
)
from chaoslab.runio import Frame, Stream, game_frame, rng_grid

logger = logging.getLogger(__name__)

DEFECT = np.uint8(0)
COOPERATE = np.uint8(1)

GROWTH_FACTOR = 1.5
SHRINK_FACTOR = 0.5
# Generations judged by a cluster verdict; a shrinking D block settles into a 4-cycle.
VERDICT_WINDOW = 4

Offset = tuple[int, int]

_MOORE: tuple[Offset, ...] = ((-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1))
_VON_NEUMANN: tuple[Offset, ...] = ((-1, 0), (0, -1), (0, 1), (1, 0))


def interaction_offsets(neighborhood: Neighborhood) -> tuple[Offset, ...]:
    """Offsets of the sites a player scores against, in row-major order."""
    if neighborhood is Neighborhood.MOORE_SELF:
        return _MOORE[:4] + ((0, 0),) + _MOORE[4:]
    if neighborhood is Neighborhood.MOORE:
        return _MOORE
    return _VON_NEUMANN


def candidate_offsets(neighborhood: Neighborhood) -> tuple[Offset, ...]:
    """Offsets of the neighbors that may take over a site, in row-major order."""
    return _VON_NEUMANN if neighborhood is Neighborhood.VON_NEUMANN else _MOORE


class ClusterVerdict(StrEnum):
    """Fate of an embedded minority block."""

    GROWS = "grows"
    SHRINKS = "shrinks"
    STATIC = "static"


@dataclass(frozen=True)
class Board:
    """
    Strategies of all players.

    Attributes:
        strategies: n×n grid of DEFECT (0) and COOPERATE (1).
        previous: The strategies one generation earlier.
        generation: Number of updates applied.
        degenerate: Sites of the last probabilistic update whose candidates all scored zero.
    """

    strategies: NDArray[np.uint8]
    previous: NDArray[np.uint8]
    generation: int = field(default=0)
    degenerate: int = field(default=0)

    def __post_init__(self) -> None:
        """
        Validates shape and values of the strategy grids.

        Raises:
            DomainError: If the grids are not equal squares of 0 and 1 entries.
        """
        strategies = np.asarray(self.strategies, dtype=np.uint8)
        previous = np.asarray(self.previous, dtype=np.uint8)
        if (
            strategies.ndim != 2
            or strategies.shape[0] != strategies.shape[1]
            or strategies.shape != previous.shape
        ):
            raise DomainError(
                "A board needs two equal square grids. "
                f"Invalid: {strategies.shape}, {previous.shape}"
            )
        if strategies.max(initial=0) > 1 or previous.max(initial=0) > 1:
            raise DomainError("Strategies must be DEFECT (0) or COOPERATE (1).")
        object.__setattr__(self, "strategies", strategies)
        object.__setattr__(self, "previous", previous)

    @classmethod
    def fresh(cls, strategies: NDArray[np.uint8]) -> "Board":
        """Creates a generation-0 board whose previous strategies equal the current ones."""
        grid = np.asarray(strategies, dtype=np.uint8)
        return cls(strategies=grid, previous=grid.copy())

    @property
    def n(self) -> int:
        """Side length of the board."""
        return int(self.strategies.shape[0])

    @property
    def cooperators(self) -> int:
        """Number of sites held by C."""
        return int(np.count_nonzero(self.strategies))

    @property
    def fraction_c(self) -> float:
        """Fraction of sites held by C."""
        return self.cooperators / self.strategies.size


@dataclass(frozen=True)
class FcSeries:
    """
    Fraction of cooperators per generation.

    Attributes:
        values: f_C at generations 0, 1, ..., G.
    """

    values: NDArray[np.float64]

    def __len__(self) -> int:
        return int(self.values.size)

    def to_records(self) -> list[dict[str, Any]]:
        """Returns one `t,f_C` record per generation."""
        return [{"t": t, "f_C": float(f)} for t, f in enumerate(self.values)]


@dataclass(frozen=True)
class GameRun:
    """
    Record of a spatial game.

    Attributes:
        config: The game configuration.
        fc: Fraction of cooperators per generation.
        final: The last board.
        frames: Rendered (generation, frame) pairs.
        degenerate: Total number of degenerate site updates.
    """

    config: GameConfig
    fc: FcSeries
    final: Board
    frames: list[tuple[int, Frame]] = field(default_factory=list)
    degenerate: int = 0


@dataclass(frozen=True)
class ClusterReport:
    """
    Outcome of a cluster experiment.

    Attributes:
        verdict: Whether the minority grew, shrank or stayed.
        kind: Block strategy.
        k: Initial block side length.
        b: Defector advantage.
        n: Side length of the board used.
        counts: Minority population per generation.
    """

    verdict: ClusterVerdict
    kind: ClusterKind
    k: int
    b: float
    n: int
    counts: list[int]


def _neighbor_view(
    grid: NDArray[Any], offset: Offset, periodic: bool, fill: Any
) -> NDArray[Any]:
    """Returns a grid whose [x, y] entry is grid[x + dx, y + dy], or fill beyond a fixed edge."""
    dx, dy = offset
    if periodic:
        return np.roll(grid, (-dx, -dy), axis=(0, 1))

    n_rows, n_cols = grid.shape
    view = np.full_like(grid, fill)
    view[max(-dx, 0) : n_rows + min(-dx, 0), max(-dy, 0) : n_cols + min(-dy, 0)] = grid[
        max(dx, 0) : n_rows + min(dx, 0), max(dy, 0) : n_cols + min(dy, 0)
    ]
    return view


def score_grid(
    strategies: NDArray[np.uint8],
    payoffs: Payoffs,
    neighborhood: Neighborhood = Neighborhood.MOORE_SELF,
    boundary: GameBoundary = GameBoundary.FIXED,
) -> NDArray[np.float64]:
    """
    Scores every player against its neighborhood.

    Scores are built from integer counts of C and D opponents, so players
    meeting the same opponents score bit-equal values.

    Returns:
        NDArray: n×n scores.
    """
    periodic = boundary is GameBoundary.PERIODIC
    ones = np.ones(strategies.shape, dtype=np.int64)
    cooperating = strategies.astype(np.int64)
    n_c = np.zeros(strategies.shape, dtype=np.int64)
    n_all = np.zeros(strategies.shape, dtype=np.int64)
    for offset in interaction_offsets(neighborhood):
        n_c += _neighbor_view(cooperating, offset, periodic, 0)
        n_all += _neighbor_view(ones, offset, periodic, 0)
    n_d = n_all - n_c

    as_c = n_c * payoffs.reward + n_d * payoffs.sucker
    as_d = n_c * payoffs.temptation + n_d * payoffs.punishment
    return cast(NDArray[np.float64], np.where(strategies == COOPERATE, as_c, as_d))


def score(
    board: Board,
    x: int,
    y: int,
    payoffs: Payoffs,
    neighborhood: Neighborhood = Neighborhood.MOORE_SELF,
    boundary: GameBoundary = GameBoundary.FIXED,
) -> float:
    """
    Sum of the payoffs of the player at (x, y) against its neighborhood.

    Raises:
        IndexError: If (x, y) lies outside the board.
    """
    if not (0 <= x < board.n and 0 <= y < board.n):
        raise IndexError(f"({x}, {y}) lies outside the {board.n}×{board.n} board")
    return _site_score(board.strategies, x, y, payoffs, neighborhood, boundary)


def _site_score(
    strategies: NDArray[np.uint8],
    x: int,
    y: int,
    payoffs: Payoffs,
    neighborhood: Neighborhood,
    boundary: GameBoundary,
) -> float:
    n = strategies.shape[0]
    n_c = n_d = 0
    for dx, dy in interaction_offsets(neighborhood):
        u, v = x + dx, y + dy
        if boundary is GameBoundary.PERIODIC:
            u, v = u % n, v % n
        elif not (0 <= u < n and 0 <= v < n):
            continue
        if strategies[u, v] == COOPERATE:
            n_c += 1
        else:
            n_d += 1

    if strategies[x, y] == COOPERATE:
        return n_c * payoffs.reward + n_d * payoffs.sucker
    return n_c * payoffs.temptation + n_d * payoffs.punishment


def _deterministic_winners(
    strategies: NDArray[np.uint8], scores: NDArray[np.float64], config: GameConfig
) -> NDArray[np.uint8]:
    """
    Picks the best-scoring strategy around every site.

    The incumbent keeps a tied maximum; otherwise the first best neighbor in
    row-major order wins.
    """
    periodic = config.boundary is GameBoundary.PERIODIC
    best_score = scores.copy()
    best_strategy = strategies.copy()
    for offset in candidate_offsets(config.neighborhood):
        rival_score = _neighbor_view(scores, offset, periodic, -np.inf)
        rival_strategy = _neighbor_view(strategies, offset, periodic, DEFECT)
        better = rival_score > best_score
        best_score = np.where(better, rival_score, best_score)
        best_strategy = np.where(better, rival_strategy, best_strategy)
    return best_strategy.astype(np.uint8)


def _probabilistic_winners(
    board: Board, scores: NDArray[np.float64], config: GameConfig
) -> tuple[NDArray[np.uint8], int]:
    """Site adopts candidate i with probability s_i^m / Σ s_j^m."""
    periodic = config.boundary is GameBoundary.PERIODIC
    offsets = candidate_offsets(config.neighborhood)
    weights = [scores**config.stiffness]
    strategies = [board.strategies]
    for offset in offsets:
        weights.append(_neighbor_view(scores, offset, periodic, 0.0) ** config.stiffness)
        strategies.append(_neighbor_view(board.strategies, offset, periodic, DEFECT))

    cumulative = np.cumsum(np.stack(weights), axis=0)
    total = cumulative[-1]
    draws = rng_grid(config.seed, Stream.GAME_WINNER, board.generation, scores.shape)
    chosen = np.argmax(cumulative > draws * total, axis=0)

    degenerate = total == 0.0
    chosen = np.where(degenerate, 0, chosen)
    winners = np.take_along_axis(np.stack(strategies), chosen[None, :, :], axis=0)[0]
    return winners.astype(np.uint8), int(np.count_nonzero(degenerate))


def _asynchronous_sweep(board: Board, config: GameConfig) -> NDArray[np.uint8]:
    """Updates sites one at a time in a seeded random order on the evolving board."""
    strategies = board.strategies.copy()
    n = board.n
    payoffs = config.payoffs
    periodic = config.boundary is GameBoundary.PERIODIC
    draws = rng_grid(config.seed, Stream.GAME_ORDER, board.generation, strategies.shape)
    order = np.argsort(draws.ravel(), kind="stable")

    for site in order:
        x, y = divmod(int(site), n)
        best_score = _site_score(strategies, x, y, payoffs, config.neighborhood, config.boundary)
        best_strategy = strategies[x, y]
        for dx, dy in candidate_offsets(config.neighborhood):
            u, v = x + dx, y + dy
            if periodic:
                u, v = u % n, v % n
            elif not (0 <= u < n and 0 <= v < n):
                continue
            rival = _site_score(strategies, u, v, payoffs, config.neighborhood, config.boundary)
            if rival > best_score:
                best_score, best_strategy = rival, strategies[u, v]
        strategies[x, y] = best_strategy
    return strategies


def step(board: Board, config: GameConfig) -> Board:
    """
    Advances the board by one generation.

    Args:
        board (Board): The current board.
        config (GameConfig): Payoffs, neighborhood, boundary and update rule.
            Random draws are keyed by (config.seed, board.generation, x, y).

    Returns:
        Board: The next board; its previous strategies are the current ones.
    """
    if board.n != config.n:
        raise DomainError(f"The board is {board.n} wide, the config {config.n}")

    degenerate = 0
    if config.update is UpdateMode.ASYNC_RANDOM_ORDER:
        winners = _asynchronous_sweep(board, config)
    else:
        scores = score_grid(board.strategies, config.payoffs, config.neighborhood, config.boundary)
        if config.update is UpdateMode.SYNC_PROBABILISTIC:
            winners, degenerate = _probabilistic_winners(board, scores, config)
        else:
            winners = _deterministic_winners(board.strategies, scores, config)

    if degenerate:
        logger.debug("%d degenerate sites at generation %d", degenerate, board.generation)
    return Board(
        strategies=winners,
        previous=board.strategies.copy(),
        generation=board.generation + 1,
        degenerate=degenerate,
    )


def initial_board(config: GameConfig, strategies: NDArray[np.uint8] | None = None) -> Board:
    """
    Builds the generation-0 board of a configuration.

    Raises:
        DomainError: If an explicit board is required but missing or has the wrong size.
    """
    shape = (config.n, config.n)
    if config.init is GameInit.EXPLICIT or strategies is not None:
        if strategies is None:
            raise DomainError("An explicit initial board is required.")
        if np.shape(strategies) != shape:
            raise DomainError(f"The initial board must be {shape}. Invalid: {np.shape(strategies)}")
        return Board.fresh(np.asarray(strategies, dtype=np.uint8))

    if config.init is GameInit.SINGLE_D_CENTER:
        grid = np.full(shape, COOPERATE, dtype=np.uint8)
        grid[config.n // 2, config.n // 2] = DEFECT
        return Board.fresh(grid)

    draws = rng_grid(config.seed, Stream.GAME_INIT, 0, shape)
    return Board.fresh((draws < config.fraction_c).astype(np.uint8))


def evolve(config: GameConfig, initial: Board | None = None) -> Iterator[Board]:
    """Yields the initial board and every subsequent one up to config.generations."""
    board = initial or initial_board(config)
    yield board
    for _ in range(config.generations):
        board = step(board, config)
        yield board


def run(
    config: GameConfig,
    initial: Board | None = None,
    frames_every: int | None = None,
) -> GameRun:
    """
    Plays config.generations updates and records f_C for generations 0..G.

    Args:
        config (GameConfig): The game.
        initial (Board, optional): Starting board replacing config.init.
        frames_every (int, optional): Render a frame every k generations.

    Returns:
        GameRun: f_C series, final board and frames.
    """
    fc: list[float] = []
    frames: list[tuple[int, Frame]] = []
    degenerate = 0
    history = evolve(config, initial)
    board = next(history)
    for board in chain([board], history):
        fc.append(board.fraction_c)
        degenerate += board.degenerate
        if frames_every and board.generation % frames_every == 0:
            frames.append((board.generation, game_frame(board.strategies, board.previous)))

    logger.info("Final f_C %.4f after %d generations", fc[-1], config.generations)
    return GameRun(
        config=config,
        fc=FcSeries(np.array(fc, dtype=np.float64)),
        final=board,
        frames=frames,
        degenerate=degenerate,
    )


def fc_theory() -> float:
    """The asymptotic cooperator fraction 12·ln 2 - 8 for 1.8 < b < 2."""
    return 12.0 * math.log(2.0) - 8.0


def fc_quadrature() -> float:
    """Evaluates 4·∫₀¹ s(1-s)(1+s)⁻² ds numerically."""
    value, _ = quad(lambda s: 4.0 * s * (1.0 - s) / (1.0 + s) ** 2, 0.0, 1.0, epsabs=1e-13)
    return float(value)


def fc_window(series: FcSeries, start: int, stop: int) -> float:
    """
    Mean f_C over generations start..stop inclusive.

    Raises:
        DomainError: If the window is empty or outside the series.
    """
    if not 0 <= start <= stop < len(series):
        raise DomainError(f"Window [{start}, {stop}] lies outside 0..{len(series) - 1}")
    return float(np.mean(series.values[start : stop + 1]))


def fc_square(board: Board, t: int, center: Offset | None = None) -> float:
    """
    Fraction of C inside the (2t + 1)² square centred on the initial defector.

    Args:
        board (Board): The board.
        t (int): Half-width of the square, usually the generation.
        center (tuple, optional): Site of the initial defector; the board centre by default.

    Returns:
        float: f_C within the square, clipped to the board.
    """
    if t < 0:
        raise DomainError(f"t may not be negative. Invalid: {t}")
    x, y = center if center is not None else (board.n // 2, board.n // 2)
    if not (0 <= x < board.n and 0 <= y < board.n):
        raise DomainError(f"The centre ({x}, {y}) lies outside the board")
    window = board.strategies[max(x - t, 0) : x + t + 1, max(y - t, 0) : y + t + 1]
    return float(np.count_nonzero(window)) / window.size


def kaleidoscope_size(generations: int, smallest: int = 99) -> int:
    """
    Odd side length on which a single central defector never feels the edge.

    The front moves one site per generation and an edge changes scores two
    sites further in, so 2·generations + 5 keeps every recorded board equal to
    the unbounded one.
    """
    return max(smallest | 1, 2 * generations + 5)


def is_dihedral_symmetric(grid: NDArray[Any]) -> bool:
    """Checks invariance under all rotations and reflections of the square."""
    grid = np.asarray(grid)
    if grid.ndim != 2 or grid.shape[0] != grid.shape[1]:
        return False
    images = [np.rot90(grid, k) for k in range(1, 4)]
    images += [grid.T, np.fliplr(grid), np.flipud(grid), np.rot90(grid, 2).T]
    return all(np.array_equal(grid, image) for image in images)


def _touches_edge(grid: NDArray[np.uint8], minority: np.uint8) -> bool:
    edges = (grid[0, :], grid[-1, :], grid[:, 0], grid[:, -1])
    return any(bool(np.any(edge == minority)) for edge in edges)


def cluster_experiment(
    b: float,
    kind: ClusterKind,
    k: int,
    generations: int,
    template: GameConfig | None = None,
    n: int | None = None,
) -> ClusterReport:
    """
    Embeds a k×k block of the minority strategy in a sea of the other and follows it.

    Unless n is given, the board is 2·k + 4·generations wide, which a frontier
    moving one site per generation cannot cross. The verdict looks at the
    smallest minority count of the last four generations: the block grows if
    it stays above 1.5 times its initial size and shrinks if it dips below 0.5
    times.

    Raises:
        DomainError: If the block does not fit strictly inside the board.
        BoundaryContactError: If the minority reaches the board edge.
    """
    if k < 1 or generations < 1:
        raise DomainError(f"k and generations must be positive. Invalid: {k}, {generations}")
    template = template or GameConfig()
    n = n if n is not None else max(3, 2 * k + 4 * generations)
    if n < k + 2:
        raise DomainError(f"A {k}×{k} block does not fit inside a {n}×{n} board")
    config = replace(
        template,
        n=n,
        b=b,
        update=UpdateMode.SYNC_DETERMINISTIC,
        init=GameInit.EXPLICIT,
        generations=generations,
    )

    minority = DEFECT if kind is ClusterKind.D_BLOCK else COOPERATE
    grid = np.full((n, n), 1 - minority, dtype=np.uint8)
    corner = n // 2 - k // 2
    grid[corner : corner + k, corner : corner + k] = minority

    counts: list[int] = []
    for board in evolve(config, Board.fresh(grid)):
        counts.append(int(np.count_nonzero(board.strategies == minority)))
        if _touches_edge(board.strategies, minority):
            raise BoundaryContactError(
                f"The {kind} cluster reached the edge at generation {board.generation}"
            )

    settled = min(counts[-VERDICT_WINDOW:])
    if settled > GROWTH_FACTOR * counts[0]:
        verdict = ClusterVerdict.GROWS
    elif settled < SHRINK_FACTOR * counts[0]:
        verdict = ClusterVerdict.SHRINKS
    else:
        verdict = ClusterVerdict.STATIC

    logger.info("%s(%d) at b=%s %s: %d -> %d", kind, k, b, verdict, counts[0], counts[-1])
    return ClusterReport(verdict=verdict, kind=kind, k=k, b=b, n=n, counts=counts)
