"""
Experiment studies that emit plot data as CSV: accuracy against homophily,
training evolution, ablations, robustness to noise and hyperparameter
sensitivity. Every sub-run is a pure function of (graph, config), so
running them on a thread pool gives the same rows as running them in order.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Optional

import numpy as np
from scipy.stats import spearmanr

from ..graph import (
    Graph,
    homophily_ratio,
    inject_label_noise,
    load_graph,
    perturb_edges,
    remove_edges_by_class,
)
from ..training import train
from ..utils.rng import derive_seed
from ..utils.schemas import MetricsRecord, NoiseSpec, TrainConfig
from ..utils.serialization import dumps, write_csv
from .train import best_test_accuracy, load_config, with_overrides

logger = logging.getLogger(__name__)

MIN_LADDER_RUNGS = 8
LADDER_SPAN = 0.9

ABLATIONS = {
    'full': {},
    'no-negatives': {'use_negatives': False},
    'fixed-beta': {'fixed_beta': 1.0},
}

NO_SPARSIFICATION = {'fusion_alpha': 1.0, 'freeze_sparsifier': True}

ROBUSTNESS_KINDS = {
    'edge': 'edge-perturb',
    'label-sym': 'label-symmetric',
    'label-asym': 'label-asymmetric',
}

SENSITIVITY_PARAMS = ('fusion_alpha', 'batch_size', 'temperature', 'negatives')


def _run_all(jobs: int, fn: Callable, tasks: Iterable) -> list:
    """Map `fn` over `tasks`, keeping task order in the results"""
    tasks = list(tasks)
    if jobs <= 1:
        return [fn(task) for task in tasks]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, tasks))


def _best(task: tuple[Graph, TrainConfig]) -> MetricsRecord:
    """Metrics at the epoch with the best validation accuracy"""
    graph, config = task
    return train(graph, config).best_record


def _corrupt(graph: Graph, kind: str, ratio: float, seed: int) -> Graph:
    spec = NoiseSpec(kind=kind, ratio=ratio, seed=seed)
    if kind == 'edge-perturb':
        return perturb_edges(graph, spec)
    return inject_label_noise(graph, spec)


REMOVAL_MODES = ('class', 'uniform')


def removal_ladder(graph: Graph, rungs: int, seed: int, removal: str = 'class') -> list[tuple[float, Graph]]:
    """Subgraphs spanning a range of homophily.

    With `removal='class'` rung values run evenly over [-0.9, 0.9]; a
    negative value v drops the share |v| of intra-class edges (lower
    homophily), a positive one drops that share of inter-class edges
    (higher homophily). With `removal='uniform'` rung values run over
    [0, 0.9] and each drops that share of all edges at random, so the
    homophily spread comes only from sampling variation.
    """
    if removal not in REMOVAL_MODES:
        raise ValueError(f"removal must be one of {REMOVAL_MODES}, got {removal!r}")
    ladder = []
    if removal == 'uniform':
        for k, value in enumerate(np.linspace(0.0, LADDER_SPAN, rungs)):
            value = float(value)
            ladder.append((value, remove_edges_by_class(graph, value, "any", derive_seed(seed, "rung", k))))
        return ladder
    for value in np.linspace(-LADDER_SPAN, LADDER_SPAN, rungs):
        value = float(value)
        if value < 0:
            sub = remove_edges_by_class(graph, -value, "intra", seed)
        elif value > 0:
            sub = remove_edges_by_class(graph, value, "inter", seed)
        else:
            sub = graph
        ladder.append((value, sub))
    return ladder


def study_correlation(data: str, out: str, config: Optional[str] = None, overrides: Optional[dict] = None,
                      rungs: int = MIN_LADDER_RUNGS, jobs: int = 1, removal: str = 'class') -> str:
    """Train from scratch on each rung of an edge-removal ladder; emit (homophily, test accuracy) rows"""

    if rungs < MIN_LADDER_RUNGS:
        raise ValueError(f"the correlation ladder needs at least {MIN_LADDER_RUNGS} rungs, got {rungs}")
    base = load_config(config, overrides)
    # Rungs measure the structure as given, so the sparsifier never runs
    base = with_overrides(base, warmup_epochs=base.epochs)
    graph = load_graph(data)
    ladder = removal_ladder(graph, rungs, base.seed, removal)

    logger.info(f"Correlation study: {rungs} {removal} rungs on {graph!r}")
    accuracies = [r.test_acc for r in _run_all(jobs, _best, [(sub, base) for _, sub in ladder])]

    rows = []
    for (value, sub), acc in zip(ladder, accuracies):
        rows.append([value, sub.n_edges, homophily_ratio(sub), acc])
    write_csv(out, ['removal', 'n_edges', 'homophily', 'test_acc'], rows)

    homophily = [row[2] for row in rows]
    rho = spearmanr(homophily, accuracies).correlation
    return dumps({
        'out': str(out),
        'rows': len(rows),
        'removal': removal,
        'homophily_min': min(homophily),
        'homophily_max': max(homophily),
        'spearman': float(rho),
    })


def study_evolution(data: str, out: str, objective: str = "homophily", config: Optional[str] = None,
                    overrides: Optional[dict] = None) -> str:
    """Per-epoch edge count, homophily and accuracy of one bi-level run"""

    base = with_overrides(load_config(config, overrides), objective_mode=objective)
    graph = load_graph(data)
    logger.info(f"Evolution study with the {objective} objective")
    result = train(graph, base)

    rows = [
        [r.epoch, r.phase, r.hard_edge_count, r.hard_homophily_true, r.hard_homophily_pseudo,
         r.homophily_objective, r.train_acc, r.val_acc, r.test_acc]
        for r in result.history
    ]
    write_csv(
        out,
        ['epoch', 'phase', 'hard_edge_count', 'hard_homophily_true', 'hard_homophily_pseudo',
         'homophily_objective', 'train_acc', 'val_acc', 'test_acc'],
        rows,
    )

    bilevel = [r for r in result.history if r.phase == 'bilevel']
    summary = {'out': str(out), 'objective': objective, 'epochs': len(result.history), 'n_edges': graph.n_edges}
    if bilevel:
        first, last = bilevel[0], bilevel[-1]
        summary.update({
            'initial_edge_count': first.hard_edge_count,
            'final_edge_count': last.hard_edge_count,
            'initial_homophily': first.hard_homophily_true,
            'final_homophily': last.hard_homophily_true,
        })
    summary['test_acc_at_best'] = best_test_accuracy(result)
    return dumps(summary)


def study_ablation(data: str, out: str, config: Optional[str] = None, overrides: Optional[dict] = None,
                   seeds: int = 5, jobs: int = 1) -> str:
    """Full model against the no-negatives and fixed-interpolation variants"""

    base = load_config(config, overrides)
    graph = load_graph(data)
    tasks = [
        (name, seed, with_overrides(base, seed=base.seed + seed, **update))
        for name, update in ABLATIONS.items()
        for seed in range(seeds)
    ]
    logger.info(f"Ablation study: {len(ABLATIONS)} variants x {seeds} seeds")
    accuracies = [r.test_acc for r in _run_all(jobs, _best, [(graph, cfg) for _, _, cfg in tasks])]

    rows = [[name, cfg.seed, acc] for (name, _, cfg), acc in zip(tasks, accuracies)]
    write_csv(out, ['variant', 'seed', 'test_acc'], rows)
    means = {name: float(np.mean([r[2] for r in rows if r[0] == name])) for name in ABLATIONS}
    return dumps({'out': str(out), 'seeds': seeds, 'mean_test_acc': means})


def study_robustness(data: str, out: str, kind: str = "edge", ratios: Iterable[float] = (0.0, 0.1, 0.2, 0.3),
                     config: Optional[str] = None, overrides: Optional[dict] = None,
                     seeds: int = 5, jobs: int = 1) -> str:
    """Accuracy under growing label or edge noise, GSSC against the no-sparsification variant"""

    if kind not in ROBUSTNESS_KINDS:
        raise ValueError(f"unknown noise kind {kind!r}, expected one of {sorted(ROBUSTNESS_KINDS)}")
    ratios = sorted({0.0, *(float(r) for r in ratios)})
    base = load_config(config, overrides)
    graph = load_graph(data)
    variants = {'gssc': {}, 'no-sparsification': NO_SPARSIFICATION}

    tasks = []
    for ratio in ratios:
        for seed in range(seeds):
            noisy = _corrupt(graph, ROBUSTNESS_KINDS[kind], ratio, base.seed + seed)
            for name, update in variants.items():
                tasks.append((ratio, name, noisy, with_overrides(base, seed=base.seed + seed, **update)))
    logger.info(f"Robustness study: {kind} noise at ratios {ratios}, {seeds} seeds")
    accuracies = [r.test_acc for r in _run_all(jobs, _best, [(g, cfg) for _, _, g, cfg in tasks])]

    rows = [[ratio, name, cfg.seed, acc] for (ratio, name, _, cfg), acc in zip(tasks, accuracies)]
    write_csv(out, ['ratio', 'variant', 'seed', 'test_acc'], rows)

    means = {
        name: {str(ratio): float(np.mean([r[3] for r in rows if r[0] == ratio and r[1] == name])) for ratio in ratios}
        for name in variants
    }
    drops = {name: {k: means[name]['0.0'] - v for k, v in per_ratio.items()} for name, per_ratio in means.items()}
    return dumps({'out': str(out), 'kind': kind, 'mean_test_acc': means, 'accuracy_drop': drops})


def study_sensitivity(data: str, out: str, param: str, values: Iterable[float], config: Optional[str] = None,
                      overrides: Optional[dict] = None, seeds: int = 1, jobs: int = 1) -> str:
    """Test accuracy (at the best validation epoch) across values of one hyperparameter"""

    if param not in SENSITIVITY_PARAMS:
        raise ValueError(f"unknown parameter {param!r}, expected one of {SENSITIVITY_PARAMS}")
    base = load_config(config, overrides)
    graph = load_graph(data)
    cast = int if param in ('batch_size', 'negatives') else float
    values = [cast(v) for v in values]
    tasks = [(value, with_overrides(base, seed=base.seed + seed, **{param: value})) for value in values for seed in range(seeds)]
    logger.info(f"Sensitivity study over {param} = {values}")
    records = _run_all(jobs, _best, [(graph, cfg) for _, cfg in tasks])

    rows = [[value, cfg.seed, r.val_acc, r.test_acc] for (value, cfg), r in zip(tasks, records)]
    write_csv(out, [param, 'seed', 'val_acc', 'test_acc'], rows)
    val = {str(v): float(np.mean([r[2] for r in rows if r[0] == v])) for v in values}
    test = {str(v): float(np.mean([r[3] for r in rows if r[0] == v])) for v in values}
    # Earliest value wins ties
    best = max(values, key=lambda v: val[str(v)])
    return dumps({
        'out': str(out),
        'param': param,
        'mean_val_acc': val,
        'mean_test_acc': test,
        'best_value': best,
        'test_acc_at_best': test[str(best)],
    })
