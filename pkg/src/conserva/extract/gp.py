"""Island-model genetic programming symbolic regression.

Each island is a small population evolved by tournament selection, subtree
crossover, subtree mutation and point mutation. Fitness is the mean squared
error after an optimal linear rescaling of the expression's output, multiplied
by a parsimony factor. The front always opens with the target mean as its
complexity-1 baseline. Expressions are evaluated in parallel; every random
choice is made sequentially from the island's own stream, so the result only
depends on the seed.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from ..random_streams import derive_rng
from .expression import ARITY, BINARY_OPS, UNARY_OPS, Node, NodeType, affine, apply, complexity, const, evaluate, to_prefix, var

log = logging.getLogger(__name__)

MIN_SAMPLES = 100

Path = Tuple[int, ...]


@dataclass
class GpConfig:
    iterations: int = 50
    population_size: int = 15
    islands: int = 4
    cycles_per_iteration: int = 5
    tournament_size: int = 3
    p_crossover: float = 0.7
    p_subtree_mutation: float = 0.2
    p_point_mutation: float = 0.1
    max_depth: int = 8
    init_max_depth: int = 4
    const_low: float = -2.0
    const_high: float = 2.0
    parsimony: float = 0.001
    immigrants: int = 1
    seed: int = 0
    n_jobs: int = 1
    variable_names: Optional[List[str]] = None

    @classmethod
    def from_dict(cls, config: Mapping[str, Any], **overrides) -> "GpConfig":
        known = {k: v for k, v in dict(config).items() if k in cls.__dataclass_fields__}
        known.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**known)

    def __post_init__(self):
        if self.population_size < 2 or self.islands < 1 or self.iterations < 0:
            raise ValueError("GP needs population_size >= 2, islands >= 1, iterations >= 0")
        total = self.p_crossover + self.p_subtree_mutation + self.p_point_mutation
        if not np.isclose(total, 1.0):
            raise ValueError(f"operator probabilities must sum to 1, got {total}")
        if self.init_max_depth > self.max_depth:
            raise ValueError("init_max_depth cannot exceed max_depth")


@dataclass(frozen=True)
class GpExpression:
    """A hall-of-fame entry with its linear scaling folded in"""
    expression: Node
    mse: float
    complexity: int

    @property
    def prefix(self) -> str:
        return to_prefix(self.expression)


@dataclass
class _Score:
    mse: float
    fitness: float
    slope: float = 0.0
    intercept: float = 0.0


@dataclass
class _Island:
    index: int
    rng: np.random.Generator
    population: List[Node] = field(default_factory=list)
    scores: List[_Score] = field(default_factory=list)


def _linear_scaled_mse(pred: np.ndarray, target: np.ndarray) -> Tuple[float, float, float]:
    pm = float(pred.mean())
    tm = float(target.mean())
    pc = pred - pm
    tc = target - tm
    denom = float(np.dot(pc, pc))
    if denom <= 1e-14 * len(pred) * (1.0 + pm * pm):
        slope = 0.0
    else:
        slope = float(np.dot(pc, tc)) / denom
    intercept = tm - slope * pm
    residual = slope * pred + intercept - target
    return float(np.mean(residual * residual)), slope, intercept


class GpRegressor:
    """Symbolic regression engine over named input columns"""

    def __init__(self, config: GpConfig):
        self.config = config
        self._cache: Dict[str, _Score] = {}
        self._hall: Dict[int, Tuple[float, Node]] = {}
        self._pool: Optional[ThreadPoolExecutor] = None
        self._names: List[str] = []
        self._env: Dict[str, np.ndarray] = {}
        self._target = np.zeros(0)

    # Tree construction

    def _terminal(self, rng: np.random.Generator) -> Node:
        names = self._names
        if rng.random() < len(names) / (len(names) + 1.0):
            return var(names[int(rng.integers(len(names)))])
        return const(rng.uniform(self.config.const_low, self.config.const_high))

    def _operator(self, rng: np.random.Generator, arity: Optional[int] = None) -> str:
        ops = BINARY_OPS + UNARY_OPS if arity is None else (BINARY_OPS if arity == 2 else UNARY_OPS)
        return ops[int(rng.integers(len(ops)))]

    def _random_tree(self, rng: np.random.Generator, depth: int, full: bool) -> Node:
        if depth <= 1:
            return self._terminal(rng)
        n_ops = len(ARITY)
        if not full and rng.random() < len(self._names) / (len(self._names) + n_ops):
            return self._terminal(rng)
        op = self._operator(rng)
        return apply(op, *(self._random_tree(rng, depth - 1, full) for _ in range(ARITY[op])))

    def _ramped(self, rng: np.random.Generator, count: int) -> List[Node]:
        trees = []
        depths = range(2, self.config.init_max_depth + 1)
        for i in range(count):
            depth = depths[i % len(depths)] if len(depths) else 1
            trees.append(self._random_tree(rng, depth, full=bool(i % 2)))
        return trees

    # Subtree addressing

    @staticmethod
    def _paths(node: Node, prefix: Path = ()) -> List[Path]:
        paths = [prefix]
        for i, child in enumerate(node.children):
            paths.extend(GpRegressor._paths(child, prefix + (i,)))
        return paths

    @staticmethod
    def _get(node: Node, path: Path) -> Node:
        for i in path:
            node = node.children[i]
        return node

    @staticmethod
    def _replace(node: Node, path: Path, new: Node) -> Node:
        if not path:
            return new
        children = list(node.children)
        children[path[0]] = GpRegressor._replace(children[path[0]], path[1:], new)
        return Node(node.node_type, node.value, tuple(children))

    def _pick(self, rng: np.random.Generator, node: Node) -> Path:
        paths = self._paths(node)
        return paths[int(rng.integers(len(paths)))]

    # Variation operators

    def _crossover(self, rng, parent: Node, donor: Node) -> Node:
        return self._replace(parent, self._pick(rng, parent), self._get(donor, self._pick(rng, donor)))

    def _subtree_mutation(self, rng, parent: Node) -> Node:
        depth = int(rng.integers(1, self.config.init_max_depth + 1))
        return self._replace(parent, self._pick(rng, parent), self._random_tree(rng, depth, full=False))

    def _point_mutation(self, rng, parent: Node) -> Node:
        path = self._pick(rng, parent)
        target = self._get(parent, path)
        if target.node_type == NodeType.OPERATOR:
            new = Node(NodeType.OPERATOR, self._operator(rng, ARITY[target.value]), target.children)
        else:
            new = self._terminal(rng)
        return self._replace(parent, path, new)

    # Evaluation

    def _score(self, node: Node) -> _Score:
        key = to_prefix(node)
        cached = self._cache.get(key)
        if cached is not None:
            return cached
        values, valid = evaluate(node, self._env)
        if not valid.all():
            score = _Score(mse=float("inf"), fitness=float("inf"))
        else:
            mse, slope, intercept = _linear_scaled_mse(values, self._target)
            score = _Score(mse, mse * (1.0 + self.config.parsimony * complexity(node)), slope, intercept)
        return score

    def _evaluate(self, nodes: Sequence[Node]) -> List[_Score]:
        if self._pool is None:
            scores = [self._score(n) for n in nodes]
        else:
            scores = list(self._pool.map(self._score, nodes))
        for node, score in zip(nodes, scores):
            self._cache.setdefault(to_prefix(node), score)
            self._record(node, score)
        return scores

    def _record(self, node: Node, score: _Score) -> None:
        """Keep the best expression per complexity of its folded form"""
        if not np.isfinite(score.mse):
            return
        folded = affine(node, score.slope, score.intercept)
        c = complexity(folded)
        best = self._hall.get(c)
        if best is None or score.mse < best[0]:
            self._hall[c] = (score.mse, folded)

    # Evolution

    def _tournament(self, island: _Island) -> Node:
        size = min(self.config.tournament_size, len(island.population))
        picks = island.rng.choice(len(island.population), size=size, replace=False)
        best = min(picks, key=lambda i: (island.scores[i].fitness, i))
        return island.population[best]

    def _offspring(self, island: _Island) -> Node:
        cfg = self.config
        rng = island.rng
        parent = self._tournament(island)
        r = rng.random()
        if r < cfg.p_crossover:
            child = self._crossover(rng, parent, self._tournament(island))
        elif r < cfg.p_crossover + cfg.p_subtree_mutation:
            child = self._subtree_mutation(rng, parent)
        else:
            child = self._point_mutation(rng, parent)
        return parent if child.depth > cfg.max_depth else child

    def _generation(self, island: _Island) -> None:
        cfg = self.config
        elite = int(np.argmin([s.fitness for s in island.scores]))
        children = [island.population[elite]]
        n_immigrants = min(cfg.immigrants, cfg.population_size - 1)
        while len(children) < cfg.population_size - n_immigrants:
            children.append(self._offspring(island))
        children.extend(self._ramped(island.rng, n_immigrants))
        island.population = children
        island.scores = self._evaluate(children)

    def _migrate(self, islands: List[_Island]) -> None:
        if len(islands) < 2:
            return
        best = [isl.population[int(np.argmin([s.fitness for s in isl.scores]))] for isl in islands]
        best_scores = [min(isl.scores, key=lambda s: s.fitness) for isl in islands]
        for i, isl in enumerate(islands):
            src = (i - 1) % len(islands)
            worst = int(np.argmax([s.fitness for s in isl.scores]))
            isl.population[worst] = best[src]
            isl.scores[worst] = best_scores[src]

    def fit(self, inputs: np.ndarray, target: np.ndarray) -> List[GpExpression]:
        """Evolve expressions and return the (complexity, MSE) Pareto front"""
        inputs = np.asarray(inputs, dtype=np.float64)
        target = np.asarray(target, dtype=np.float64).ravel()
        if inputs.ndim != 2 or inputs.shape[0] != target.shape[0]:
            raise ValueError("inputs must be (n, D) with one target per row")
        if inputs.shape[0] < MIN_SAMPLES:
            raise ValueError(f"GP needs at least {MIN_SAMPLES} samples, got {inputs.shape[0]}")
        cfg = self.config
        self._names = list(cfg.variable_names or [f"x{j + 1}" for j in range(inputs.shape[1])])
        if len(self._names) != inputs.shape[1]:
            raise ValueError("variable_names must match the input width")
        self._env = {name: inputs[:, j] for j, name in enumerate(self._names)}
        self._target = target
        self._cache.clear()
        self._hall.clear()
        # the mean of the target is the complexity-1 baseline of every front
        mean = float(target.mean())
        self._record(const(mean), _Score(float(np.mean((target - mean) ** 2)), 0.0, 0.0, mean))

        self._pool = ThreadPoolExecutor(max_workers=cfg.n_jobs) if cfg.n_jobs > 1 else None
        try:
            islands = [_Island(i, derive_rng(cfg.seed, "gp", i)) for i in range(cfg.islands)]
            for isl in islands:
                isl.population = self._ramped(isl.rng, cfg.population_size)
                isl.scores = self._evaluate(isl.population)
            for iteration in range(cfg.iterations):
                for isl in islands:
                    for _ in range(cfg.cycles_per_iteration):
                        self._generation(isl)
                self._migrate(islands)
                if log.isEnabledFor(logging.DEBUG):
                    best = min(self._hall.values(), key=lambda h: h[0])[0] if self._hall else float("inf")
                    log.debug(f"GP iteration {iteration + 1}/{cfg.iterations}: best mse {best:.3e}")
        finally:
            if self._pool is not None:
                self._pool.shutdown()
            self._pool = None
        return self.pareto_front()

    def pareto_front(self) -> List[GpExpression]:
        entries = [GpExpression(node, mse, complexity(node)) for mse, node in self._hall.values()]
        entries.sort(key=lambda e: (e.complexity, e.mse))
        front: List[GpExpression] = []
        for entry in entries:
            if not front or entry.mse < front[-1].mse:
                front.append(entry)
        return front


def gp_symreg(inputs: np.ndarray, target: np.ndarray, config: Optional[GpConfig] = None) -> List[GpExpression]:
    """Pareto-optimal expressions for target ~ f(inputs), simplest first"""
    config = config or GpConfig()
    front = GpRegressor(config).fit(inputs, target)
    if front:
        log.info(f"GP front: {len(front)} expressions, best mse {front[-1].mse:.3e}")
    return front
