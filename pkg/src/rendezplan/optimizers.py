"""Four population-search algorithms over box-bounded candidate vectors.

All four share one calling convention: a context supplying ``dim``,
``flat_bounds()``, ``evaluate_batch(pop)`` and ``polygon(vec)``, a config
dataclass, a seed, and an optional warm-start vector seeded into the initial
population verbatim (the one deliberate exception to bounds clipping, so a
replanner can hand over a tail solution that pokes out of the new corridor).

Each runner documents its draw order; together with the seeded substream
this makes runs bit-reproducible, which the tests rely on.  Best-so-far
tracking is global over every evaluated candidate, so the recorded history
is non-increasing by construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cost import CostBreakdown
from .errors import ConfigError
from .seeding import TAG_OPTIMIZER, substream
from .spline import ControlPolygon

__all__ = [
    "ALGORITHMS",
    "PsoConfig",
    "BboConfig",
    "FaConfig",
    "DeConfig",
    "OptimizerRun",
    "pso_run",
    "bbo_run",
    "fa_run",
    "de_run",
    "optimize",
    "default_config",
    "pso_velocity_update",
    "bbo_rates",
    "bbo_species_probabilities",
    "bbo_mutation_rates",
    "fa_attraction",
    "fa_sequential_move",
    "de_mutant",
    "de_crossover",
]

ALGORITHMS = ("pso", "bbo", "fa", "de")
_ALGO_TAG = {"pso": 0, "bbo": 1, "fa": 2, "de": 3}


# ---------------------------------------------------------------------------
# configs


@dataclass(frozen=True)
class PsoConfig:
    """Particle swarm settings; inertia decays linearly start -> end."""

    population: int = 100
    iterations: int = 100
    inertia_start: float = 1.4
    inertia_end: float = 0.5
    cognitive: float = 2.0
    social: float = 2.0
    velocity_fraction: float = 0.2

    def __post_init__(self) -> None:
        if self.population < 2:
            raise ConfigError("need at least two particles")
        if self.iterations < 1:
            raise ConfigError("need at least one iteration")
        if not (2.0 <= self.cognitive <= 2.5 and 2.0 <= self.social <= 2.5):
            raise ConfigError("acceleration coefficients must lie in [2.0, 2.5]")
        if not 0.0 < self.velocity_fraction <= 1.0:
            raise ConfigError("velocity_fraction must be in (0, 1]")


@dataclass(frozen=True)
class BboConfig:
    """Habitat-migration settings.

    Each generation keeps the ``kept`` best habitats unchanged, admits the
    ``recombined`` best migrated-and-mutated offspring, and fills the rest
    of the population with fresh random habitats.
    """

    population: int = 100
    iterations: int = 100
    kept: int = 40
    recombined: int = 40
    immigration_max: float = 1.0
    emigration_max: float = 1.0
    mutation_max: float = 0.1

    def __post_init__(self) -> None:
        if self.population < 2:
            raise ConfigError("need at least two habitats")
        if self.iterations < 1:
            raise ConfigError("need at least one iteration")
        if self.kept < 1 or self.recombined < 0:
            raise ConfigError("kept must be >= 1 and recombined >= 0")
        if self.kept + self.recombined > self.population:
            raise ConfigError("kept + recombined exceeds population")
        if min(self.immigration_max, self.emigration_max) <= 0:
            raise ConfigError("migration rates must be positive")
        if not 0.0 <= self.mutation_max <= 1.0:
            raise ConfigError("mutation_max must be in [0, 1]")

    @property
    def fresh(self) -> int:
        return self.population - self.kept - self.recombined


@dataclass(frozen=True)
class FaConfig:
    """Firefly settings; the random-walk scale decays as random_scale * damping^t."""

    population: int = 100
    iterations: int = 100
    attraction_base: float = 2.0
    absorption: float = 1.0
    damping: float = 0.96
    random_scale: float = 0.4

    def __post_init__(self) -> None:
        if self.population < 2:
            raise ConfigError("need at least two fireflies")
        if self.iterations < 1:
            raise ConfigError("need at least one iteration")
        if self.attraction_base <= 0 or self.absorption < 0:
            raise ConfigError("attraction_base must be positive, absorption non-negative")
        if not 0.0 < self.damping <= 1.0:
            raise ConfigError("damping must be in (0, 1]")
        if self.random_scale < 0:
            raise ConfigError("random_scale must be non-negative")


@dataclass(frozen=True)
class DeConfig:
    """Differential-evolution settings; the scale factor is redrawn per generation."""

    population: int = 100
    iterations: int = 100
    scale_low: float = 0.2
    scale_high: float = 0.8
    crossover_rate: float = 0.2
    donor_blend: bool = False

    def __post_init__(self) -> None:
        if self.population < 4:
            raise ConfigError("need at least four members (three donors plus the parent)")
        if self.iterations < 1:
            raise ConfigError("need at least one iteration")
        if not 0.0 < self.scale_low <= self.scale_high:
            raise ConfigError("scale bounds must satisfy 0 < low <= high")
        if not 0.0 <= self.crossover_rate <= 1.0:
            raise ConfigError("crossover_rate must be in [0, 1]")


# ---------------------------------------------------------------------------
# run record


@dataclass(eq=False)
class OptimizerRun:
    algorithm: str
    best: ControlPolygon | None
    best_vector: np.ndarray
    best_cost: CostBreakdown
    history_best: np.ndarray
    history_mean: np.ndarray
    history_collision: np.ndarray
    iterations_used: int
    evaluations: int
    seed: int

    def history_csv(self) -> str:
        lines = ["iteration,best_total,mean_total,collision_violation"]
        for k in range(len(self.history_best)):
            lines.append(
                f"{k},{self.history_best[k]:.9g},"
                f"{self.history_mean[k]:.9g},{self.history_collision[k]:.9g}"
            )
        return "\n".join(lines) + "\n"

    def summary(self) -> dict:
        return {
            "algorithm": self.algorithm,
            "seed": self.seed,
            "iterations": self.iterations_used,
            "evaluations": self.evaluations,
            "best_total": self.best_cost.total,
            "best_terms": list(self.best_cost.terms),
            "feasible": self.best_cost.feasible,
        }


class _Tracker:
    """Global best plus per-iteration history over all evaluated batches."""

    def __init__(self) -> None:
        self.best_total = np.inf
        self.best_vec: np.ndarray | None = None
        self.best_breakdown: CostBreakdown | None = None
        self.h_best: list[float] = []
        self.h_mean: list[float] = []
        self.h_coll: list[float] = []
        self.evaluations = 0

    def absorb(self, pop: np.ndarray, totals: np.ndarray, breakdowns) -> None:
        self.evaluations += len(totals)
        i = int(np.argmin(totals))
        if totals[i] < self.best_total:
            self.best_total = float(totals[i])
            self.best_vec = np.array(pop[i], dtype=float)
            self.best_breakdown = breakdowns[i]

    def record(self, totals: np.ndarray) -> None:
        self.h_best.append(self.best_total)
        self.h_mean.append(float(np.mean(totals)))
        self.h_coll.append(float(self.best_breakdown.collision_term))


def _finish(algorithm: str, ctx, tracker: _Tracker, iterations: int, seed: int) -> OptimizerRun:
    history = np.array(tracker.h_best)
    assert (np.diff(history) <= 0.0).all()  # best-so-far can never regress
    try:
        polygon = ctx.polygon(tracker.best_vec)
    except (AttributeError, ConfigError):
        polygon = None  # toy contexts without a spline interpretation
    return OptimizerRun(
        algorithm=algorithm,
        best=polygon,
        best_vector=tracker.best_vec,
        best_cost=tracker.best_breakdown,
        history_best=history,
        history_mean=np.array(tracker.h_mean),
        history_collision=np.array(tracker.h_coll),
        iterations_used=iterations,
        evaluations=tracker.evaluations,
        seed=seed,
    )


def _warm_vector(warm_start, dim: int) -> np.ndarray:
    if isinstance(warm_start, ControlPolygon):
        vec = warm_start.as_vector()
    else:
        vec = np.asarray(warm_start, dtype=float).ravel()
    if vec.shape != (dim,):
        raise ConfigError(f"warm start must have {dim} coordinates, got {vec.shape}")
    return vec


def _init_population(rng, lo, hi, count):
    return lo + rng.random((count, len(lo))) * (hi - lo)


# ---------------------------------------------------------------------------
# particle swarm


def pso_velocity_update(velocity, position, local_best, global_best, inertia, cognitive, r_local, social, r_global):
    """One velocity update: damped old velocity plus two weighted pulls."""
    return (
        inertia * velocity
        + cognitive * r_local * (local_best - position)
        + social * r_global * (global_best - position)
    )


def pso_run(ctx, cfg: PsoConfig = PsoConfig(), seed: int = 0, warm_start=None) -> OptimizerRun:
    """Particle swarm with linearly decaying inertia and clamped velocities.

    Draw order: one (pop, dim) uniform block for positions, one for
    velocities (scaled to the clamp range), then per iteration one (pop,
    dim) block for the local pull and one for the global pull.
    """
    rng = substream(seed, TAG_OPTIMIZER, _ALGO_TAG["pso"])
    lo, hi = ctx.flat_bounds()
    n_pop = cfg.population
    pos = _init_population(rng, lo, hi, n_pop)
    v_max = cfg.velocity_fraction * (hi - lo)
    vel = (2.0 * rng.random((n_pop, ctx.dim)) - 1.0) * v_max
    if warm_start is not None:
        pos[0] = _warm_vector(warm_start, ctx.dim)

    totals, breakdowns = ctx.evaluate_batch(pos)
    tracker = _Tracker()
    tracker.absorb(pos, totals, breakdowns)
    tracker.record(totals)

    local_pos = pos.copy()
    local_tot = totals.copy()
    g = int(np.argmin(local_tot))
    global_pos = local_pos[g].copy()

    denom = max(cfg.iterations - 1, 1)
    for t in range(cfg.iterations):
        inertia = cfg.inertia_start + (cfg.inertia_end - cfg.inertia_start) * (t / denom)
        r_local = rng.random((n_pop, ctx.dim))
        r_global = rng.random((n_pop, ctx.dim))
        vel = pso_velocity_update(
            vel, pos, local_pos, global_pos[None, :], inertia, cfg.cognitive, r_local, cfg.social, r_global
        )
        np.clip(vel, -v_max, v_max, out=vel)
        pos = np.clip(pos + vel, lo, hi)
        totals, breakdowns = ctx.evaluate_batch(pos)
        improved = totals <= local_tot  # ties refresh the memory
        local_pos[improved] = pos[improved]
        local_tot[improved] = totals[improved]
        g = int(np.argmin(local_tot))
        global_pos = local_pos[g].copy()
        tracker.absorb(pos, totals, breakdowns)
        tracker.record(totals)
    return _finish("pso", ctx, tracker, cfg.iterations, seed)


# ---------------------------------------------------------------------------
# habitat migration


def bbo_rates(species, species_max, emigration_max=1.0, immigration_max=1.0):
    """Linear immigration/emigration rates for a species count in [0, max]."""
    species = np.asarray(species, dtype=float)
    lam = immigration_max * (1.0 - species / species_max)
    mu = emigration_max * species / species_max
    return lam, mu


def bbo_species_probabilities(species_max, emigration_max=1.0, immigration_max=1.0):
    """Stationary distribution of the species-count birth-death chain.

    Detailed balance gives p[s+1]/p[s] = lam[s]/mu[s+1]; accumulated in log
    space for head room at large counts.  With equal max rates this is the
    symmetric binomial distribution.
    """
    counts = np.arange(species_max + 1)
    lam, mu = bbo_rates(counts, species_max, emigration_max, immigration_max)
    log_p = np.zeros(species_max + 1)
    log_p[1:] = np.cumsum(np.log(lam[:-1]) - np.log(mu[1:]))
    p = np.exp(log_p - log_p.max())
    return p / p.sum()


def bbo_mutation_rates(probability, mutation_max=0.1, probability_max=None):
    """Mutation rate shrinking to zero at the most probable species count."""
    probability = np.asarray(probability, dtype=float)
    if probability_max is None:
        probability_max = probability.max()
    return mutation_max * (1.0 - probability / probability_max)


def bbo_run(ctx, cfg: BboConfig = BboConfig(), seed: int = 0, warm_start=None) -> OptimizerRun:
    """Habitat migration with rank-based species counts.

    Habitats are ranked each generation; rank r hosts population-minus-r
    species, so good habitats emigrate and poor ones immigrate.  Migration
    copies single coordinates between habitats; mutation resamples
    coordinates at a rate that vanishes for the most probable species count.

    Draw order per generation: for each habitat in index order one uniform
    immigration gate; when it opens, one (pop,) uniform block of emigration
    gates, then one integer coordinate index per open gate (in habitat
    order).  After migration: one (pop, dim) uniform mutation-gate block and
    one (pop, dim) uniform replacement-value block, then one (fresh, dim)
    uniform block for the fresh random habitats.
    """
    rng = substream(seed, TAG_OPTIMIZER, _ALGO_TAG["bbo"])
    lo, hi = ctx.flat_bounds()
    n_pop, dim = cfg.population, ctx.dim
    pop = _init_population(rng, lo, hi, n_pop)
    if warm_start is not None:
        pop[0] = _warm_vector(warm_start, dim)

    totals, breakdowns = ctx.evaluate_batch(pop)
    tracker = _Tracker()
    tracker.absorb(pop, totals, breakdowns)
    tracker.record(totals)

    species_max = n_pop
    prob = bbo_species_probabilities(species_max, cfg.emigration_max, cfg.immigration_max)
    prob_max = float(prob.max())

    for _ in range(cfg.iterations):
        order = np.argsort(totals, kind="stable")
        rank = np.empty(n_pop, dtype=int)
        rank[order] = np.arange(n_pop)
        species = species_max - rank
        lam, mu = bbo_rates(species, species_max, cfg.emigration_max, cfg.immigration_max)
        rates = bbo_mutation_rates(prob[species], cfg.mutation_max, prob_max)

        snapshot = pop.copy()
        offspring = pop.copy()
        for i in range(n_pop):
            if rng.random() < lam[i]:
                gates = rng.random(n_pop)
                hits = np.nonzero(gates < mu)[0]
                if hits.size:
                    coords = rng.integers(0, dim, size=hits.size)
                    offspring[i, coords] = snapshot[hits, coords]

        gates = rng.random((n_pop, dim))
        values = _init_population(rng, lo, hi, n_pop)
        mutate = gates < rates[:, None]
        offspring[mutate] = values[mutate]
        np.clip(offspring, lo, hi, out=offspring)

        off_tot, off_bd = ctx.evaluate_batch(offspring)
        tracker.absorb(offspring, off_tot, off_bd)

        fresh = _init_population(rng, lo, hi, cfg.fresh)
        if cfg.fresh:
            fresh_tot, fresh_bd = ctx.evaluate_batch(fresh)
            tracker.absorb(fresh, fresh_tot, fresh_bd)
        else:
            fresh_tot = np.empty(0)

        keep_idx = order[: cfg.kept]
        off_idx = np.argsort(off_tot, kind="stable")[: cfg.recombined]
        pop = np.vstack([pop[keep_idx], offspring[off_idx], fresh])
        totals = np.concatenate([totals[keep_idx], off_tot[off_idx], fresh_tot])
        tracker.record(totals)
    return _finish("bbo", ctx, tracker, cfg.iterations, seed)


# ---------------------------------------------------------------------------
# firefly


def fa_attraction(distance, base=2.0, absorption=1.0):
    """Attraction strength at a given kernel distance."""
    distance = np.asarray(distance, dtype=float)
    return base * np.exp(-absorption * distance**2)


def fa_sequential_move(position, betas, attractors, noises):
    """Apply a sequence of damped pulls toward fixed attractors, plus noise.

    Each step k maps x to (1 - b_k) x + b_k a_k + n_k; the closed form
    below equals that left-to-right recursion without the Python loop.
    """
    betas = np.asarray(betas, dtype=float)
    attractors = np.asarray(attractors, dtype=float)
    noises = np.asarray(noises, dtype=float)
    one_minus = 1.0 - betas
    full = np.cumprod(one_minus[::-1])[::-1]  # full[k] = prod of (1-b) from k on
    suffix = np.append(full[1:], 1.0)
    pulled = (betas[:, None] * attractors + noises) * suffix[:, None]
    return position * full[0] + pulled.sum(axis=0)


def fa_run(ctx, cfg: FaConfig = FaConfig(), seed: int = 0, warm_start=None) -> OptimizerRun:
    """Firefly search: dimmer members chase brighter lower-indexed ones.

    Brightness and attractor positions come from a generation-start
    snapshot; member i compares itself against snapshot members j < i only,
    accumulating one pull per brighter j in index order.  Kernel distances
    use box-normalized coordinates so attraction reach is independent of
    corridor scale; pulls and noise act on raw coordinates (noise scaled
    per-dimension by box width).  The brightest member (ties to the lowest
    index) takes only a random-walk step.

    Draw order per generation: for each member in index order one
    (n_brighter, dim) uniform noise block, then one (dim,) uniform block for
    the brightest member's walk.
    """
    rng = substream(seed, TAG_OPTIMIZER, _ALGO_TAG["fa"])
    lo, hi = ctx.flat_bounds()
    n_pop, dim = cfg.population, ctx.dim
    width = hi - lo
    width_safe = np.where(width > 0, width, 1.0)
    pop = _init_population(rng, lo, hi, n_pop)
    if warm_start is not None:
        pop[0] = _warm_vector(warm_start, dim)

    totals, breakdowns = ctx.evaluate_batch(pop)
    tracker = _Tracker()
    tracker.absorb(pop, totals, breakdowns)
    tracker.record(totals)

    for t in range(cfg.iterations):
        alpha = cfg.random_scale * cfg.damping**t
        snap = pop.copy()
        snap_tot = totals.copy()
        normalized = (snap - lo) / width_safe
        brightest = int(np.argmin(snap_tot))
        moved = pop.copy()
        for i in range(n_pop):
            brighter = np.nonzero(snap_tot[:i] < snap_tot[i])[0]
            if brighter.size == 0:
                continue
            dist = np.sqrt(((normalized[brighter] - normalized[i]) ** 2).sum(axis=1))
            betas = fa_attraction(dist, cfg.attraction_base, cfg.absorption)
            noises = alpha * (rng.random((brighter.size, dim)) - 0.5) * width
            moved[i] = fa_sequential_move(pop[i], betas, snap[brighter], noises)
        walk = alpha * (rng.random(dim) - 0.5) * width
        moved[brightest] = pop[brightest] + walk
        pop = np.clip(moved, lo, hi)
        totals, breakdowns = ctx.evaluate_batch(pop)
        tracker.absorb(pop, totals, breakdowns)
        tracker.record(totals)
    return _finish("fa", ctx, tracker, cfg.iterations, seed)


# ---------------------------------------------------------------------------
# differential evolution


def de_mutant(base, plus, minus, scale):
    """Difference mutation: base plus a scaled donor difference."""
    return base + scale * (plus - minus)


def de_crossover(parent, mutant, gates, forced, rate):
    """Binomial crossover: mutant coordinates where the gate opens or at the
    forced index, parent coordinates elsewhere."""
    take = gates <= rate
    take[np.arange(len(parent)), forced] = True
    return np.where(take, mutant, parent)


def de_run(ctx, cfg: DeConfig = DeConfig(), seed: int = 0, warm_start=None) -> OptimizerRun:
    """Differential evolution, one-difference mutation with binomial crossover.

    Per member, three pairwise-distinct donors (all different from the
    member) give mutant = donor3 + scale * (donor1 - donor2); the scale is
    redrawn once per generation.  Selection is nested: a mutant that beats
    the parent advances directly; otherwise the crossed offspring advances
    only if it beats the parent.  With donor_blend on, donor3 is replaced by
    a random convex combination of all three donors.

    Draw order per generation: one uniform scale factor; one (pop, pop)
    uniform block whose row-wise ranking picks the donors; with donor_blend,
    one (pop, 3) uniform weight block; one (pop,) integer block of forced
    crossover indices; one (pop, dim) uniform crossover-gate block.
    """
    rng = substream(seed, TAG_OPTIMIZER, _ALGO_TAG["de"])
    lo, hi = ctx.flat_bounds()
    n_pop, dim = cfg.population, ctx.dim
    pop = _init_population(rng, lo, hi, n_pop)
    if warm_start is not None:
        pop[0] = _warm_vector(warm_start, dim)

    totals, breakdowns = ctx.evaluate_batch(pop)
    tracker = _Tracker()
    tracker.absorb(pop, totals, breakdowns)
    tracker.record(totals)

    rows = np.arange(n_pop)
    for _ in range(cfg.iterations):
        scale = rng.uniform(cfg.scale_low, cfg.scale_high)
        keys = rng.random((n_pop, n_pop))
        perm = np.argsort(keys, axis=1, kind="stable")
        not_self = perm != rows[:, None]
        first_three = not_self & (np.cumsum(not_self, axis=1) <= 3)
        donors = perm[first_three].reshape(n_pop, 3)
        d1, d2, d3 = donors[:, 0], donors[:, 1], donors[:, 2]
        if cfg.donor_blend:
            w = rng.random((n_pop, 3))
            w = w / w.sum(axis=1, keepdims=True)
            base = w[:, :1] * pop[d1] + w[:, 1:2] * pop[d2] + w[:, 2:] * pop[d3]
        else:
            base = pop[d3]
        mutant = np.clip(de_mutant(base, pop[d1], pop[d2], scale), lo, hi)
        forced = rng.integers(0, dim, n_pop)
        gates = rng.random((n_pop, dim))
        offspring = de_crossover(pop, mutant, gates, forced, cfg.crossover_rate)

        mut_tot, mut_bd = ctx.evaluate_batch(mutant)
        tracker.absorb(mutant, mut_tot, mut_bd)
        off_tot, off_bd = ctx.evaluate_batch(offspring)
        tracker.absorb(offspring, off_tot, off_bd)

        take_mutant = mut_tot < totals
        take_offspring = ~take_mutant & (off_tot < totals)
        pop = pop.copy()
        pop[take_mutant] = mutant[take_mutant]
        totals = totals.copy()
        totals[take_mutant] = mut_tot[take_mutant]
        pop[take_offspring] = offspring[take_offspring]
        totals[take_offspring] = off_tot[take_offspring]
        tracker.record(totals)
    return _finish("de", ctx, tracker, cfg.iterations, seed)


# ---------------------------------------------------------------------------
# dispatch


_RUNNERS = {
    "pso": (pso_run, PsoConfig),
    "bbo": (bbo_run, BboConfig),
    "fa": (fa_run, FaConfig),
    "de": (de_run, DeConfig),
}


def default_config(algo: str, **overrides):
    """Config dataclass for an algorithm tag, with field overrides."""
    if algo not in _RUNNERS:
        raise ConfigError(f"unknown algorithm '{algo}', expected one of {ALGORITHMS}")
    return _RUNNERS[algo][1](**overrides)


def optimize(algo: str, ctx, cfg=None, seed: int = 0, warm_start=None) -> OptimizerRun:
    """Run one algorithm by tag; cfg defaults to the algorithm's defaults."""
    if algo not in _RUNNERS:
        raise ConfigError(f"unknown algorithm '{algo}', expected one of {ALGORITHMS}")
    runner, cfg_type = _RUNNERS[algo]
    if cfg is None:
        cfg = cfg_type()
    if not isinstance(cfg, cfg_type):
        raise ConfigError(f"{algo} expects {cfg_type.__name__}, got {type(cfg).__name__}")
    return runner(ctx, cfg, seed=seed, warm_start=warm_start)
