"""
Canonical on-disk dataset format: nodes.tsv, edges.tsv, splits.json
"""

import json
import logging
from pathlib import Path

import numpy as np

from ..utils.errors import GraphFormatError, GraphInvariantError, GsscError
from ..utils.serialization import atomic_directory, fingerprint_files, format_float
from .core import SPLITS, Graph

logger = logging.getLogger(__name__)

NODES_FILE = "nodes.tsv"
EDGES_FILE = "edges.tsv"
SPLITS_FILE = "splits.json"
DATASET_FILES = (NODES_FILE, EDGES_FILE, SPLITS_FILE)


def _require(directory: Path, name: str) -> Path:
    path = directory / name
    if not path.is_file():
        raise GsscError(f"missing dataset file: {path}")
    return path


def _parse_nodes(path: Path):
    labels, rows = [], []
    width = None
    with open(path, encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            line = raw.rstrip("\n")
            if not line:
                raise GraphFormatError(path, lineno, "empty line")
            fields = line.split("\t")
            if len(fields) < 2:
                raise GraphFormatError(path, lineno, "expected node_id<TAB>label<TAB>features")
            try:
                node_id = int(fields[0])
            except ValueError:
                raise GraphFormatError(path, lineno, f"non-integer node id {fields[0]!r}") from None
            if node_id != lineno - 1:
                raise GraphFormatError(path, lineno, f"node id {node_id} out of order, expected {lineno - 1}")
            try:
                label = int(fields[1])
            except ValueError:
                raise GraphFormatError(path, lineno, f"non-integer label {fields[1]!r}") from None
            if label < 0:
                raise GraphFormatError(path, lineno, f"negative label {label}")
            try:
                values = [float(x) for x in fields[2:]]
            except ValueError as e:
                raise GraphFormatError(path, lineno, f"non-numeric feature ({e})") from None
            if width is None:
                width = len(values)
            elif len(values) != width:
                raise GraphFormatError(path, lineno, f"expected {width} features, got {len(values)}")
            labels.append(label)
            rows.append(values)
    features = np.array(rows, dtype=np.float64).reshape(len(rows), width or 0)
    return features, np.array(labels, dtype=np.int64)


def _parse_edges(path: Path, n_nodes: int) -> np.ndarray:
    edges = []
    seen = {}
    with open(path, encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            line = raw.rstrip("\n")
            if not line:
                raise GraphFormatError(path, lineno, "empty line")
            fields = line.split("\t")
            if len(fields) != 2:
                raise GraphFormatError(path, lineno, "expected src<TAB>dst")
            try:
                src, dst = int(fields[0]), int(fields[1])
            except ValueError:
                raise GraphFormatError(path, lineno, "non-integer endpoint") from None
            for node in (src, dst):
                if not 0 <= node < n_nodes:
                    raise GraphFormatError(path, lineno, f"edge endpoint {node} out of range [0, {n_nodes})")
            if src == dst:
                raise GraphFormatError(path, lineno, f"self-loop on node {src}")
            key = (min(src, dst), max(src, dst))
            if key in seen:
                raise GraphFormatError(path, lineno, f"duplicate edge {key}, first seen at line {seen[key]}")
            seen[key] = lineno
            edges.append(key)
    return np.array(edges, dtype=np.int64).reshape(-1, 2)


def _is_index(value) -> bool:
    # JSON true/false decode to bool, which is an int subclass
    return isinstance(value, int) and not isinstance(value, bool)


def load_graph(directory) -> Graph:
    """Read and validate a dataset directory"""
    directory = Path(directory)
    nodes_path = _require(directory, NODES_FILE)
    edges_path = _require(directory, EDGES_FILE)
    splits_path = _require(directory, SPLITS_FILE)

    features, labels = _parse_nodes(nodes_path)
    edges = _parse_edges(edges_path, len(labels))
    try:
        splits = json.loads(splits_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise GraphFormatError(splits_path, e.lineno, e.msg) from None
    if not isinstance(splits, dict):
        raise GraphFormatError(splits_path, 1, "expected a JSON object")
    for name in SPLITS:
        if not isinstance(splits.get(name), list) or not all(_is_index(i) for i in splits[name]):
            raise GraphFormatError(splits_path, 1, f"'{name}' must be an integer array")

    n_classes = splits.get("n_classes")
    if n_classes is not None and (not _is_index(n_classes) or n_classes < 1):
        raise GraphFormatError(splits_path, 1, "'n_classes' must be a positive integer")
    if n_classes is None:
        n_classes = int(labels.max()) + 1 if len(labels) else 1
    elif len(labels) and labels.max() >= n_classes:
        bad = int(np.flatnonzero(labels >= n_classes)[0])
        raise GraphFormatError(nodes_path, bad + 1, f"label id {labels[bad]} >= n_classes {n_classes}")

    try:
        graph = Graph(features, edges, labels, n_classes, splits["train"], splits["val"], splits["test"])
    except GraphInvariantError as e:
        raise GraphInvariantError(f"{directory}: {e}") from None
    logger.info(f"Loaded {graph} from {directory}")
    return graph


def save_graph(graph: Graph, directory) -> None:
    """Write `graph` to `directory`, replacing any existing contents atomically"""
    directory = Path(directory)
    try:
        with atomic_directory(directory) as scratch:
            with open(scratch / NODES_FILE, "w", encoding="utf-8", newline="\n") as handle:
                for i in range(graph.n_nodes):
                    fields = [str(i), str(int(graph.labels[i]))]
                    fields.extend(format_float(x) for x in graph.features[i])
                    handle.write("\t".join(fields) + "\n")
            with open(scratch / EDGES_FILE, "w", encoding="utf-8", newline="\n") as handle:
                for src, dst in graph.edges:
                    handle.write(f"{int(src)}\t{int(dst)}\n")
            splits = {name: [int(i) for i in graph.split(name)] for name in SPLITS}
            splits["n_classes"] = graph.n_classes
            (scratch / SPLITS_FILE).write_text(json.dumps(splits, sort_keys=True) + "\n", encoding="utf-8")
    except OSError as e:
        raise GsscError(f"cannot write dataset to {directory}: {e}") from e
    logger.info(f"Saved {graph} to {directory}")


def dataset_fingerprint(directory) -> str:
    directory = Path(directory)
    return fingerprint_files(directory / name for name in DATASET_FILES)
