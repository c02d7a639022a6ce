"""The ten low-level training heuristics and their shared entity state.

Seven gradient-based update rules (SGD, Momentum, NAG, Adagrad, RMSProp,
Adadelta, Adam) plus three population-based metaheuristics (PSO, DE, GA),
all operating on flat parameter vectors. Every heuristic reads and writes
slices of a common per-entity state record; state a heuristic does not
maintain itself is kept fresh by proxying the update to a designated
provider heuristic (see ``ProxyMap`` and ``apply_with_proxies``), so
entities can switch heuristics without stale or missing state.

Randomized heuristics draw from a ``numpy.random.Generator`` in a
documented order (see each docstring), which makes fixed-seed runs
reproducible and lets tests drive them with scripted values.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, ClassVar, Mapping, Union

import numpy as np

from .errors import ConfigError, DivergenceError

KINDS = ("sgd", "momentum", "nag", "adagrad", "rmsprop", "adadelta", "adam", "pso", "de", "ga")
GRADIENT_KINDS = KINDS[:7]
METAHEURISTIC_KINDS = KINDS[7:]

SELF = "self"
IMPLICIT = "implicit"

#: Entity state parameters subject to proxy resolution.
STATE_PARAMS = (
    "velocity",
    "first_moment",
    "second_moment",
    "accumulated_delta",
    "position_delta",
    "step_counter",
    "gradient",
    "loss",
)


def decay_schedule(initial: float, rate: float, step: int) -> float:
    """Inverse time decay: initial / (1 + rate * step)."""
    if rate < 0:
        raise ValueError("decay rate must be >= 0")
    return initial / (1.0 + rate * step)


@dataclass(frozen=True)
class Decayed:
    """A hyper-parameter with an initial value and an inverse-time decay rate."""

    initial: float
    rate: float = 0.0

    def at(self, step: int) -> float:
        return decay_schedule(self.initial, self.rate, step)


@dataclass(frozen=True)
class SGDConfig:
    kind: ClassVar[str] = "sgd"
    learning_rate: Decayed = Decayed(0.1, 0.01)


@dataclass(frozen=True)
class MomentumConfig:
    kind: ClassVar[str] = "momentum"
    learning_rate: Decayed = Decayed(0.1, 0.01)
    momentum: float = 0.9


@dataclass(frozen=True)
class NAGConfig:
    kind: ClassVar[str] = "nag"
    learning_rate: Decayed = Decayed(0.1, 0.01)
    momentum: float = 0.9


@dataclass(frozen=True)
class AdagradConfig:
    kind: ClassVar[str] = "adagrad"
    learning_rate: Decayed = Decayed(0.1, 0.01)
    epsilon: float = 1e-7


@dataclass(frozen=True)
class RMSPropConfig:
    kind: ClassVar[str] = "rmsprop"
    learning_rate: Decayed = Decayed(0.1, 0.01)
    rho: float = 0.95
    epsilon: float = 1e-7


@dataclass(frozen=True)
class AdadeltaConfig:
    kind: ClassVar[str] = "adadelta"
    learning_rate: Decayed = Decayed(1.0, 0.95)
    rho: float = 0.95
    epsilon: float = 1e-7


@dataclass(frozen=True)
class AdamConfig:
    kind: ClassVar[str] = "adam"
    learning_rate: Decayed = Decayed(0.1, 0.01)
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-7


@dataclass(frozen=True)
class PSOConfig:
    kind: ClassVar[str] = "pso"
    population_size: int = 10
    learning_rate: Decayed = Decayed(1.0, 0.9)
    inertia_weight: float = 0.729844
    cognitive_control: float = 1.49618
    social_control: float = 1.49618
    velocity_clip_min: float = -1.0
    velocity_clip_max: float = 1.0


@dataclass(frozen=True)
class DEConfig:
    kind: ClassVar[str] = "de"
    population_size: int = 10
    selection_strategy: str = "best"
    crossover_strategy: str = "exp"
    recombination_probability: Decayed = Decayed(0.9, 0.1)
    beta: Decayed = Decayed(2.0, 0.1)


@dataclass(frozen=True)
class GAConfig:
    kind: ClassVar[str] = "ga"
    population_size: int = 10
    selection_strategy: str = "rand"
    crossover_strategy: str = "bin"
    mutation_rate: Decayed = Decayed(0.2, 0.05)


HeuristicConfig = Union[
    SGDConfig, MomentumConfig, NAGConfig, AdagradConfig, RMSPropConfig,
    AdadeltaConfig, AdamConfig, PSOConfig, DEConfig, GAConfig,
]

_CONFIG_TYPES = {
    cls.kind: cls
    for cls in (SGDConfig, MomentumConfig, NAGConfig, AdagradConfig, RMSPropConfig,
                AdadeltaConfig, AdamConfig, PSOConfig, DEConfig, GAConfig)
}


def default_config(kind: str) -> HeuristicConfig:
    """The stock configuration for a heuristic kind."""
    try:
        return _CONFIG_TYPES[kind]()
    except KeyError:
        raise ConfigError(f"unknown heuristic kind {kind!r}") from None


@dataclass
class EntityState:
    """One candidate solution plus all heuristic state attached to it."""

    entity_id: int
    position: np.ndarray
    velocity: np.ndarray
    gradient: np.ndarray
    position_delta: np.ndarray
    first_moment: np.ndarray
    second_moment: np.ndarray
    accumulated_delta: np.ndarray
    step_counter: int
    loss: float
    pbest_position: np.ndarray
    pbest_loss: float

    @classmethod
    def fresh(cls, entity_id: int, position: np.ndarray) -> "EntityState":
        n = position.shape[0]
        z = lambda: np.zeros(n)
        return cls(
            entity_id=entity_id,
            position=np.asarray(position, dtype=np.float64),
            velocity=z(), gradient=z(), position_delta=z(),
            first_moment=z(), second_moment=z(), accumulated_delta=z(),
            step_counter=0, loss=np.inf,
            pbest_position=np.asarray(position, dtype=np.float64).copy(),
            pbest_loss=np.inf,
        )


@dataclass
class PopulationState:
    """The entity pool plus shared global-best memory."""

    entities: list
    gbest_position: np.ndarray
    gbest_loss: float

    @classmethod
    def from_entities(cls, entities) -> "PopulationState":
        pop = cls(entities=list(entities), gbest_position=entities[0].position.copy(),
                  gbest_loss=np.inf)
        pop.refresh_gbest()
        return pop

    def refresh_gbest(self) -> None:
        for e in self.entities:
            if e.pbest_loss < self.gbest_loss:
                self.gbest_loss = e.pbest_loss
                self.gbest_position = e.pbest_position.copy()

    def snapshot(self) -> "PopulationSnapshot":
        return PopulationSnapshot(
            positions=np.stack([e.position for e in self.entities]).copy(),
            gbest_position=self.gbest_position.copy(),
            gbest_loss=self.gbest_loss,
        )


@dataclass(frozen=True)
class PopulationSnapshot:
    """Immutable view of the population taken at the start of a step.

    All cross-entity reads during a step go through the snapshot, so entity
    updates within a step are order-independent.
    """

    positions: np.ndarray  # (J, n)
    gbest_position: np.ndarray
    gbest_loss: float

    @property
    def size(self):
        return self.positions.shape[0]


def _require_finite(entity: EntityState, kind: str, *fields_to_check: str) -> None:
    for name in fields_to_check:
        value = getattr(entity, name)
        if not np.all(np.isfinite(value)):
            raise DivergenceError(f"non-finite {name} after update", heuristic=kind)


def _move(entity: EntityState, new_position: np.ndarray, kind: str) -> None:
    entity.position_delta = new_position - entity.position
    entity.position = new_position
    _require_finite(entity, kind, "position")


def apply_sgd(entity: EntityState, gradient: np.ndarray, config: SGDConfig, step: int) -> EntityState:
    lr = config.learning_rate.at(step)
    _move(entity, entity.position - lr * gradient, "sgd")
    return entity


def apply_momentum(entity: EntityState, gradient: np.ndarray, config: MomentumConfig, step: int) -> EntityState:
    """Heavy-ball update: v <- m*v - lr*g; x <- x + v."""
    lr = config.learning_rate.at(step)
    entity.velocity = config.momentum * entity.velocity - lr * gradient
    _move(entity, entity.position + entity.velocity, "momentum")
    _require_finite(entity, "momentum", "velocity")
    return entity


def apply_nag(entity: EntityState, gradient: np.ndarray, config: NAGConfig, step: int) -> EntityState:
    """Nesterov update: v <- m*v - lr*g; x <- x + m*v - lr*g."""
    lr = config.learning_rate.at(step)
    entity.velocity = config.momentum * entity.velocity - lr * gradient
    _move(entity, entity.position + config.momentum * entity.velocity - lr * gradient, "nag")
    _require_finite(entity, "nag", "velocity")
    return entity


def apply_adagrad(entity: EntityState, gradient: np.ndarray, config: AdagradConfig, step: int) -> EntityState:
    lr = config.learning_rate.at(step)
    entity.second_moment = entity.second_moment + gradient * gradient
    _move(entity, entity.position - lr * gradient / (np.sqrt(entity.second_moment) + config.epsilon), "adagrad")
    _require_finite(entity, "adagrad", "second_moment")
    return entity


def apply_rmsprop(entity: EntityState, gradient: np.ndarray, config: RMSPropConfig, step: int) -> EntityState:
    lr = config.learning_rate.at(step)
    entity.second_moment = config.rho * entity.second_moment + (1.0 - config.rho) * gradient * gradient
    _move(entity, entity.position - lr * gradient / (np.sqrt(entity.second_moment) + config.epsilon), "rmsprop")
    _require_finite(entity, "rmsprop", "second_moment")
    return entity


def apply_adadelta(entity: EntityState, gradient: np.ndarray, config: AdadeltaConfig, step: int) -> EntityState:
    """Accumulates squared gradients and squared position deltas (both
    rho-averaged) and scales the step by their RMS ratio."""
    lr = config.learning_rate.at(step)
    rho, eps = config.rho, config.epsilon
    entity.second_moment = rho * entity.second_moment + (1.0 - rho) * gradient * gradient
    delta = -np.sqrt(entity.accumulated_delta + eps) / np.sqrt(entity.second_moment + eps) * gradient
    entity.accumulated_delta = rho * entity.accumulated_delta + (1.0 - rho) * delta * delta
    _move(entity, entity.position + lr * delta, "adadelta")
    _require_finite(entity, "adadelta", "second_moment", "accumulated_delta")
    return entity


def apply_adam(entity: EntityState, gradient: np.ndarray, config: AdamConfig, step: int) -> EntityState:
    lr = config.learning_rate.at(step)
    b1, b2 = config.beta1, config.beta2
    t = entity.step_counter + 1
    entity.first_moment = b1 * entity.first_moment + (1.0 - b1) * gradient
    entity.second_moment = b2 * entity.second_moment + (1.0 - b2) * gradient * gradient
    m_hat = entity.first_moment / (1.0 - b1 ** t)
    v_hat = entity.second_moment / (1.0 - b2 ** t)
    entity.step_counter = t
    _move(entity, entity.position - lr * m_hat / (np.sqrt(v_hat) + config.epsilon), "adam")
    _require_finite(entity, "adam", "first_moment", "second_moment")
    return entity


def _pso_velocity(entity, snapshot, config, rng):
    # Draw order: r1 vector, then r2 vector.
    n = entity.position.shape[0]
    r1 = rng.random(n)
    r2 = rng.random(n)
    v = (config.inertia_weight * entity.velocity
         + config.cognitive_control * r1 * (entity.pbest_position - entity.position)
         + config.social_control * r2 * (snapshot.gbest_position - entity.position))
    return np.clip(v, config.velocity_clip_min, config.velocity_clip_max)


def apply_pso(entity: EntityState, population: PopulationSnapshot, config: PSOConfig,
              step: int, rng) -> EntityState:
    """Inertia-weight PSO step with per-coordinate velocity clipping.

    Consumes two uniform vectors from ``rng`` (cognitive then social).
    """
    entity.velocity = _pso_velocity(entity, population, config, rng)
    _move(entity, entity.position + config.learning_rate.at(step) * entity.velocity, "pso")
    _require_finite(entity, "pso", "velocity")
    return entity


def _pick_other(u: float, exclude, size: int) -> int:
    """Map a uniform draw to an index in [0, size) excluding ``exclude``."""
    choices = [i for i in range(size) if i not in exclude]
    return choices[min(int(u * len(choices)), len(choices) - 1)]


def apply_de(entity: EntityState, population: PopulationSnapshot, config: DEConfig,
             step: int, rng, objective: Callable[[np.ndarray], float]) -> EntityState:
    """DE/best/1 mutation with exponential crossover and greedy selection.

    Donor = gbest + beta * (x_r1 - x_r2) with r1, r2 random entities
    distinct from each other and from this one. The trial replaces the
    position only when its objective value is <= the current position's
    (both evaluated here, on the caller's objective).

    Draw order: one uniform for r1, one for r2, one for the crossover start
    index, then one uniform per attempted extension of the crossover
    segment.
    """
    j_pool = population.size
    if j_pool < 3:
        raise ConfigError("DE (best-base) needs a population of at least 3 entities")
    me = entity.entity_id
    r1 = _pick_other(rng.random(), {me}, j_pool)
    r2 = _pick_other(rng.random(), {me, r1}, j_pool)
    beta = config.beta.at(step)
    donor = population.gbest_position + beta * (population.positions[r1] - population.positions[r2])

    n = entity.position.shape[0]
    cr = config.recombination_probability.at(step)
    start = min(int(rng.random() * n), n - 1)
    length = 1
    while length < n and rng.random() < cr:
        length += 1
    trial = entity.position.copy()
    idx = (start + np.arange(length)) % n
    trial[idx] = donor[idx]

    trial_loss = objective(trial)
    current_loss = objective(entity.position)
    if trial_loss <= current_loss:
        _move(entity, trial, "de")
        entity.loss = trial_loss
    else:
        entity.position_delta = np.zeros(n)
        entity.loss = current_loss
    _require_finite(entity, "de", "position")
    if not np.isfinite(entity.loss):
        raise DivergenceError("non-finite loss", heuristic="de")
    return entity


def apply_ga(entity: EntityState, population: PopulationSnapshot, config: GAConfig,
             step: int, rng, objective: Callable[[np.ndarray], float]) -> EntityState:
    """Uniform crossover with a random partner, Gaussian mutation, greedy
    replacement.

    One offspring is built by taking each gene from the partner with
    probability 0.5, then mutating each gene with probability equal to the
    decayed mutation rate (perturbation sigma = 0.1*|gene| + 1e-3). The
    offspring replaces the position only if it strictly improves the
    objective value of the current position.

    Draw order: one uniform for the partner index, a uniform vector for the
    crossover mask, a uniform vector for the mutation mask, then one normal
    per mutated gene.
    """
    j_pool = population.size
    if j_pool < 2:
        raise ConfigError("GA needs a population of at least 2 entities")
    partner = _pick_other(rng.random(), {entity.entity_id}, j_pool)
    n = entity.position.shape[0]
    take_partner = rng.random(n) < 0.5
    child = np.where(take_partner, population.positions[partner], entity.position)

    mutate = rng.random(n) < config.mutation_rate.at(step)
    if mutate.any():
        sigma = 0.1 * np.abs(child[mutate]) + 1e-3
        child[mutate] = child[mutate] + rng.normal(0.0, sigma)

    child_loss = objective(child)
    current_loss = objective(entity.position)
    if child_loss < current_loss:
        _move(entity, child, "ga")
        entity.loss = child_loss
    else:
        entity.position_delta = np.zeros(n)
        entity.loss = current_loss
    _require_finite(entity, "ga", "position")
    if not np.isfinite(entity.loss):
        raise DivergenceError("non-finite loss", heuristic="ga")
    return entity


#: Fields each heuristic's own update refreshes (besides position).
PRIMARY_FIELDS = {
    "sgd": frozenset({"position_delta"}),
    "momentum": frozenset({"velocity", "position_delta"}),
    "nag": frozenset({"velocity", "position_delta"}),
    "adagrad": frozenset({"second_moment", "position_delta"}),
    "rmsprop": frozenset({"second_moment", "position_delta"}),
    "adadelta": frozenset({"second_moment", "accumulated_delta", "position_delta"}),
    "adam": frozenset({"first_moment", "second_moment", "step_counter", "position_delta"}),
    "pso": frozenset({"velocity", "position_delta"}),
    "de": frozenset({"position_delta", "loss"}),
    "ga": frozenset({"position_delta", "loss"}),
}

_DEFAULT_PROVIDERS = {
    "velocity": "pso",
    "first_moment": "adam",
    "second_moment": "adam",
    "accumulated_delta": "adadelta",
    "step_counter": "adam",
}


@dataclass(frozen=True)
class ProxyMap:
    """Resolution of every entity state parameter, per heuristic kind.

    ``table[kind][param]`` is ``"self"`` (the heuristic maintains the
    parameter in its own update), ``"implicit"`` (the training loop
    maintains it), or the kind of the provider heuristic whose update
    fragment is outsourced.
    """

    table: Mapping[str, Mapping[str, str]]

    def __post_init__(self):
        for kind, row in self.table.items():
            if kind not in KINDS:
                raise ConfigError(f"unknown heuristic kind {kind!r} in proxy map")
            for param in STATE_PARAMS:
                if param not in row:
                    raise ConfigError(f"proxy map for {kind!r} does not resolve {param!r}")
                res = row[param]
                if res in (SELF, IMPLICIT):
                    continue
                if res not in KINDS:
                    raise ConfigError(f"unknown provider {res!r} for {kind}.{param}")
                # Providers must own the parameter themselves: rules out chains/cycles.
                if (res, param) not in _FRAGMENTS:
                    raise ConfigError(f"{res!r} has no update fragment for {param!r}")

    def resolution(self, kind: str, param: str) -> str:
        try:
            return self.table[kind][param]
        except KeyError:
            raise ConfigError(f"proxy map does not resolve {kind}.{param}") from None


def default_proxy_map() -> ProxyMap:
    """Velocity from PSO, moments and step counter from Adam, accumulated
    delta from Adadelta; gradient and loss from the training loop."""
    table = {}
    for kind in KINDS:
        row = {}
        for param in STATE_PARAMS:
            if param == "gradient":
                row[param] = IMPLICIT
            elif param == "loss":
                row[param] = SELF if param in PRIMARY_FIELDS[kind] else IMPLICIT
            elif param in PRIMARY_FIELDS[kind]:
                row[param] = SELF
            else:
                row[param] = _DEFAULT_PROVIDERS[param]
        table[kind] = row
    return ProxyMap(table)


def _frag_velocity_pso(entity, snapshot, config, step, rng):
    entity.velocity = _pso_velocity(entity, snapshot, config, rng)


def _frag_first_moment_adam(entity, snapshot, config, step, rng):
    entity.first_moment = config.beta1 * entity.first_moment + (1.0 - config.beta1) * entity.gradient


def _frag_second_moment_adam(entity, snapshot, config, step, rng):
    entity.second_moment = (config.beta2 * entity.second_moment
                            + (1.0 - config.beta2) * entity.gradient * entity.gradient)


def _frag_step_counter_adam(entity, snapshot, config, step, rng):
    entity.step_counter += 1


def _frag_accumulated_delta_adadelta(entity, snapshot, config, step, rng):
    # Runs after the primary update, against the realized position delta.
    entity.accumulated_delta = (config.rho * entity.accumulated_delta
                                + (1.0 - config.rho) * entity.position_delta ** 2)


_FRAGMENTS = {
    ("pso", "velocity"): _frag_velocity_pso,
    ("adam", "first_moment"): _frag_first_moment_adam,
    ("adam", "second_moment"): _frag_second_moment_adam,
    ("adam", "step_counter"): _frag_step_counter_adam,
    ("adadelta", "accumulated_delta"): _frag_accumulated_delta_adadelta,
}

_GRADIENT_APPLIES = {
    "sgd": apply_sgd,
    "momentum": apply_momentum,
    "nag": apply_nag,
    "adagrad": apply_adagrad,
    "rmsprop": apply_rmsprop,
    "adadelta": apply_adadelta,
    "adam": apply_adam,
}


def apply_with_proxies(entity: EntityState, population: PopulationSnapshot,
                       selected: HeuristicConfig,
                       gradient_provider: Callable[[np.ndarray], np.ndarray],
                       objective: Callable[[np.ndarray], float],
                       proxy_map: ProxyMap, step: int, rng,
                       provider_configs: Mapping[str, HeuristicConfig] | None = None) -> EntityState:
    """One full entity step: primary heuristic update plus proxied state
    refreshes, leaving no state parameter stale.

    The gradient is always refreshed first (the moment fragments need it
    even under metaheuristics), then the selected heuristic's own update
    runs, then the provider fragments for every parameter the selected
    heuristic does not maintain. Finally the loss at the new position is
    evaluated (unless the heuristic already evaluated it, as DE/GA do) and
    the personal best is refreshed.
    """
    if provider_configs is None:
        provider_configs = {}
    kind = selected.kind
    resolutions = proxy_map.table.get(kind)
    if resolutions is None:
        raise ConfigError(f"proxy map has no row for heuristic {kind!r}")

    if resolutions["gradient"] == IMPLICIT:
        g = np.asarray(gradient_provider(entity.position), dtype=np.float64)
        if not np.isfinite(g).all():
            raise DivergenceError("non-finite gradient", heuristic=kind)
        entity.gradient = g

    if kind in _GRADIENT_APPLIES:
        _GRADIENT_APPLIES[kind](entity, entity.gradient, selected, step)
    elif kind == "pso":
        apply_pso(entity, population, selected, step, rng)
    elif kind == "de":
        apply_de(entity, population, selected, step, rng, objective)
    elif kind == "ga":
        apply_ga(entity, population, selected, step, rng, objective)
    else:
        raise ConfigError(f"unknown heuristic kind {kind!r}")

    for param in STATE_PARAMS:
        res = resolutions[param]
        if res in (SELF, IMPLICIT):
            continue
        fragment = _FRAGMENTS.get((res, param))
        if fragment is None:
            raise ConfigError(f"unresolved state parameter {param!r} for {kind!r}")
        cfg = provider_configs.get(res) or default_config(res)
        fragment(entity, population, cfg, step, rng)

    if resolutions["loss"] == IMPLICIT:
        value = objective(entity.position)
        if not np.isfinite(value):
            raise DivergenceError("non-finite loss", heuristic=kind)
        entity.loss = value

    if entity.loss < entity.pbest_loss:
        entity.pbest_loss = entity.loss
        entity.pbest_position = entity.position.copy()
    return entity
