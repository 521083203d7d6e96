"""Offline training on recorded trajectories and the online NSGA-II loop that
uses the model as its offspring generator, updating it from fresh evaluations
each generation."""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .core import (
    EvaluationBudget,
    Population,
    Problem,
    evaluate,
    random_population,
)
from .dataset import TrajectoryDataset, TrajectoryPair, TrajectorySink
from .errors import BudgetExhausted, CapacityError, ConfigError, ContractViolation, DataError
from .metrics import igd
from .model import PopulationTransformer, teacher_forced_loss
from .moea import TEACHERS, nsga2_select
from .nn import Adam

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class PretrainConfig:
    steps: int = 1000
    batch_size: int = 64
    lr: float = 1e-3
    lr_final: float | None = None  # cosine-decay target; None keeps lr constant
    beta1: float = 0.9
    beta2: float = 0.999
    weight_decay: float = 0.1
    seed: int = 0
    eval_every: int = 50

    def __post_init__(self):
        if self.steps < 1 or self.batch_size < 1:
            raise ConfigError("steps and batch_size must be >= 1")
        if self.lr <= 0 or (self.lr_final is not None and self.lr_final <= 0):
            raise ConfigError("learning rates must be positive")

    def lr_at(self, step: int) -> float:
        if self.lr_final is None:
            return self.lr
        frac = (step - 1) / max(1, self.steps - 1)
        return self.lr_final + 0.5 * (self.lr - self.lr_final) * (1.0 + np.cos(np.pi * frac))


@dataclass(frozen=True)
class FinetuneConfig:
    """Per-generation online update inside the optimization loop."""

    steps_per_generation: int = 1
    lr: float = 1e-4
    enabled: bool = True

    def __post_init__(self):
        if self.steps_per_generation < 0:
            raise ConfigError("steps_per_generation must be >= 0")
        if self.lr <= 0:
            raise ConfigError("learning rate must be positive")


def collect_trajectories(problems: list[Problem], teachers: list[str], seeds: list[int],
                         n_pop: int, evals: int) -> TrajectoryDataset:
    """Run every (problem, teacher, seed) cell and gather its generation pairs.

    A failing cell is logged and skipped; collection continues. Cells run in
    sorted key order, so identical inputs give byte-identical datasets.
    """
    for t in teachers:
        if t not in TEACHERS:
            raise ConfigError(f"unknown teacher {t!r} (known: {sorted(TEACHERS)})")
    dataset = TrajectoryDataset(extra={"population_size": n_pop, "evaluations_per_run": evals})
    cells = sorted(
        ((p, t, s) for p in problems for t in teachers for s in seeds),
        key=lambda c: (c[0].spec.name, c[0].spec.d, c[0].spec.m, c[1], c[2]),
    )
    for problem, teacher, seed in cells:
        sink = TrajectorySink()
        try:
            TEACHERS[teacher](problem, n_pop, evals, seed=seed, sink=sink)
        except Exception:
            log.exception("collection cell failed: %s/%s/seed=%s; skipping",
                          problem.spec.name, teacher, seed)
            continue
        dataset.pairs.extend(sink.pairs)
    return dataset


def _check_pair_capacity(pair: TrajectoryPair, model: PopulationTransformer) -> None:
    cfg = model.config
    if pair.d > cfg.d_hat or pair.m > cfg.m_hat or pair.size > cfg.max_seq:
        raise CapacityError(
            f"pair {pair.problem_name} (d={pair.d}, m={pair.m}, n={pair.size}) exceeds model "
            f"capacity (d_hat={cfg.d_hat}, m_hat={cfg.m_hat}, max_seq={cfg.max_seq})"
        )


def pretrain(dataset: TrajectoryDataset, model: PopulationTransformer,
             cfg: PretrainConfig) -> list[tuple[int, float]]:
    """Shuffled mini-batch teacher forcing for ``cfg.steps`` Adam steps.

    Batches only mix pairs with equal (d, m, population size) so the padding
    pattern is uniform; groups and pairs are reshuffled every pass. Returns
    the logged (step, mean batch loss) curve.
    """
    if not dataset.pairs:
        raise DataError("cannot pretrain on an empty dataset")
    for pair in dataset.pairs:
        _check_pair_capacity(pair, model)
    groups: dict[tuple, list[TrajectoryPair]] = {}
    for pair in sorted(dataset.pairs, key=TrajectoryPair.sort_key):
        groups.setdefault(pair.group_key(), []).append(pair)
    rng = np.random.default_rng(cfg.seed)
    model.optimizer = Adam(model.parameters(), lr=cfg.lr, beta1=cfg.beta1,
                           beta2=cfg.beta2, weight_decay=cfg.weight_decay)

    def batches():
        while True:
            keys = sorted(groups)
            rng.shuffle(keys)
            for key in keys:
                pairs = groups[key][:]
                rng.shuffle(pairs)
                for i in range(0, len(pairs), cfg.batch_size):
                    yield pairs[i:i + cfg.batch_size]

    curve: list[tuple[int, float]] = []
    stream = batches()
    for step in range(1, cfg.steps + 1):
        batch = next(stream)
        model.zero_grad()
        total = 0.0
        for pair in batch:
            total += teacher_forced_loss(model, pair.x_g, pair.x_g1, pair.unit_spec())
        inv = 1.0 / len(batch)
        for p in model.parameters():
            if p.grad is not None:
                p.grad *= inv
        model.optimizer.lr = cfg.lr_at(step)
        model.optimizer.step()
        mean_loss = total * inv
        if step % cfg.eval_every == 0 or step == cfg.steps or step == 1:
            if not np.isfinite(mean_loss):
                raise DataError(f"non-finite training loss at step {step}")
            curve.append((step, mean_loss))
    return curve


def finetune_step(model: PopulationTransformer, x_g: Population, x_g1: Population,
                  problem: Problem, cfg: FinetuneConfig) -> float | None:
    """One online update: train toward the survivors of (parents u offspring).

    The target is nsga2_select over the union at the parent population size,
    i.e. the model learns what selection kept. Disabled or zero-step configs
    leave the model untouched. Returns the last observed loss (or None).
    """
    if not cfg.enabled or cfg.steps_per_generation == 0:
        return None
    if not (x_g.all_evaluated and x_g1.all_evaluated):
        raise ContractViolation("online update requires evaluated populations")
    union = Population(x_g.members + x_g1.members, x_g1.generation_index)
    target = nsga2_select(union, len(x_g))
    pair = TrajectoryPair.from_populations(
        problem.spec, x_g, target, teacher="online", seed=0,
        generation=x_g.generation_index,
    )
    if model.optimizer is None or model.optimizer.lr != cfg.lr:
        model.optimizer = Adam(model.parameters(), lr=cfg.lr, weight_decay=0.0)
    loss = None
    for _ in range(cfg.steps_per_generation):
        model.zero_grad()
        loss = teacher_forced_loss(model, pair.x_g, pair.x_g1, pair.unit_spec())
        model.optimizer.step()
    return loss


@dataclass
class ModelRunResult:
    population: Population
    log: list[dict]
    evaluations: int


def run_nsga2_model(problem: Problem, model: PopulationTransformer, n_pop: int,
                    evals: int, fine_cfg: FinetuneConfig = FinetuneConfig(),
                    seed: int = 0, reference_front: np.ndarray | None = None) -> ModelRunResult:
    """NSGA-II where the model produces each offspring generation.

    Initialize and evaluate N solutions, then while budget remains: sort,
    crowding-select, generate offspring through the model (each evaluated as
    produced), run the online update, merge. A trailing partial generation is
    merged and logged before the loop ends.
    """
    if n_pop < 2:
        raise ContractViolation("population size must be at least 2")
    if evals < n_pop:
        raise ContractViolation("budget must cover at least the initial population")
    if n_pop > model.config.max_seq:
        raise CapacityError(f"population size {n_pop} exceeds model capacity "
                            f"{model.config.max_seq}")
    budget = EvaluationBudget(evals)
    rng = np.random.default_rng(seed)
    pool = evaluate(random_population(problem, n_pop, rng), problem, budget)
    run_log: list[dict] = []
    generation = 0
    while budget.remaining > 0:
        parents = nsga2_select(pool, n_pop)
        parents = Population(parents.members, generation)
        result = model.generate(parents, problem, budget, rng, n_offspring=n_pop)
        loss = finetune_step(model, parents, result.population, problem, fine_cfg)
        pool = Population(parents.members + result.population.members, generation)
        entry = {
            "generation": generation,
            "evaluations": budget.used,
            "offspring_evaluated": len(result.population),
            "partial": result.exhausted,
            "loss": loss,
        }
        if reference_front is not None:
            current = nsga2_select(pool, n_pop)
            entry["igd"] = igd(reference_front, current.objectives()).value
        run_log.append(entry)
        generation += 1
    final = nsga2_select(pool, n_pop)
    return ModelRunResult(population=final, log=run_log, evaluations=budget.used)
