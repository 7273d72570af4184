"""Text file formats: graphs, dataset manifests, model checkpoints.

All three formats are line-oriented, human-inspectable, and versioned.
Floats are written with 17 significant digits, which round-trips IEEE
float64 exactly.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

from .gin import GinConfig, ModelParams
from .graph import Graph, from_edge_list

__all__ = [
    "GRAPH_FORMAT_VERSION",
    "MANIFEST_FORMAT_VERSION",
    "CHECKPOINT_FORMAT_VERSION",
    "REF_KINDS",
    "ManifestEntry",
    "save_graph",
    "load_graph",
    "save_manifest",
    "load_manifest",
    "save_checkpoint",
    "load_checkpoint",
]

GRAPH_FORMAT_VERSION = 1
MANIFEST_FORMAT_VERSION = 1
CHECKPOINT_FORMAT_VERSION = 1

SPLITS = ("train", "val", "test")
REF_KINDS = ("exact", "bound", "best_found")


class FormatError(ValueError):
    """Malformed or wrong-version file, with location diagnostics."""


def _fail(path: str, lineno: int, message: str) -> None:
    raise FormatError(f"{path}:{lineno}: {message}")


def save_graph(g: Graph, path: str) -> None:
    """DIMACS-like text: `p <n> <m>` header then 0-indexed `e <u> <v>` lines."""
    with open(path, "w") as fh:
        fh.write(f"c format_version {GRAPH_FORMAT_VERSION}\n")
        fh.write(f"p {g.n} {g.m}\n")
        for u, v in g.edges:
            fh.write(f"e {u} {v}\n")


def load_graph(path: str) -> Graph:
    n = None
    declared_m = None
    edges: List[Tuple[int, int]] = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            parts = line.split()
            tag = parts[0]
            if tag == "c":
                if len(parts) >= 3 and parts[1] == "format_version":
                    version = int(parts[2])
                    if version > GRAPH_FORMAT_VERSION:
                        _fail(path, lineno, f"unsupported graph format version {version}")
                continue
            if tag == "p":
                if len(parts) != 3:
                    _fail(path, lineno, "expected 'p <n> <m>'")
                try:
                    n, declared_m = int(parts[1]), int(parts[2])
                except ValueError:
                    _fail(path, lineno, "non-integer fields in 'p' line")
                continue
            if tag == "e":
                if n is None:
                    _fail(path, lineno, "'e' line before 'p' header")
                if len(parts) != 3:
                    _fail(path, lineno, "expected 'e <u> <v>'")
                try:
                    edges.append((int(parts[1]), int(parts[2])))
                except ValueError:
                    _fail(path, lineno, "non-integer node ids in 'e' line")
                continue
            _fail(path, lineno, f"unknown line tag {tag!r}")
    if n is None:
        _fail(path, 1, "missing 'p' header line")
    if declared_m is not None and declared_m != len(edges):
        _fail(path, 1, f"header declares {declared_m} edges, file has {len(edges)}")
    try:
        return from_edge_list(n, edges)
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from exc


@dataclass(frozen=True)
class ManifestEntry:
    filename: str
    split: str
    reference: Optional[float] = None
    ref_kind: Optional[str] = None

    def __post_init__(self):
        if self.split not in SPLITS:
            raise ValueError(f"unknown split {self.split!r}")
        if (self.reference is None) != (self.ref_kind is None):
            raise ValueError("reference value and kind must come together")
        if self.ref_kind is not None and self.ref_kind not in REF_KINDS:
            raise ValueError(f"unknown reference kind {self.ref_kind!r}")


def save_manifest(entries: List[ManifestEntry], path: str) -> None:
    """One line per instance: filename, split, optional reference + kind."""
    with open(path, "w") as fh:
        fh.write(f"manifest_version {MANIFEST_FORMAT_VERSION}\n")
        for e in entries:
            if e.reference is None:
                fh.write(f"{e.filename} {e.split}\n")
            else:
                fh.write(f"{e.filename} {e.split} {e.reference:.17g} {e.ref_kind}\n")


def load_manifest(path: str) -> List[ManifestEntry]:
    entries: List[ManifestEntry] = []
    seen: Dict[str, int] = {}
    with open(path) as fh:
        lines = fh.readlines()
    if not lines:
        _fail(path, 1, "empty manifest")
    head = lines[0].split()
    if len(head) != 2 or head[0] != "manifest_version":
        _fail(path, 1, "expected 'manifest_version <v>' header")
    version = int(head[1])
    if version > MANIFEST_FORMAT_VERSION:
        _fail(path, 1, f"unsupported manifest version {version}")
    for lineno, raw in enumerate(lines[1:], start=2):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) not in (2, 4):
            _fail(path, lineno, "expected 'filename split [reference kind]'")
        name, split = parts[0], parts[1]
        if name in seen:
            _fail(path, lineno, f"duplicate instance {name!r} (first at line {seen[name]})")
        seen[name] = lineno
        ref = None
        kind = None
        if len(parts) == 4:
            try:
                ref = float(parts[2])
            except ValueError:
                _fail(path, lineno, f"bad reference value {parts[2]!r}")
            kind = parts[3]
        try:
            entries.append(ManifestEntry(name, split, ref, kind))
        except ValueError as exc:
            _fail(path, lineno, str(exc))
    return entries


def save_checkpoint(params: ModelParams, path: str) -> None:
    """Self-describing text container: version, architecture, tensors."""
    cfg = params.config
    with open(path, "w") as fh:
        fh.write(f"checkpoint_version {CHECKPOINT_FORMAT_VERSION}\n")
        fh.write(
            f"config layers={cfg.layers} hidden_dim={cfg.hidden_dim} "
            f"mlp_depth={cfg.mlp_depth} input_dim={cfg.input_dim} "
            f"epsilon={cfg.epsilon:.17g}\n"
        )
        for name, w in params.named_weights():
            dims = " ".join(str(d) for d in w.shape)
            fh.write(f"tensor {name} {len(w.shape)} {dims}".rstrip() + "\n")
            flat = np.asarray(w, dtype=np.float64).ravel()
            fh.write(" ".join(f"{v:.17g}" for v in flat) + "\n")


def load_checkpoint(path: str) -> ModelParams:
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines:
        _fail(path, 1, "empty checkpoint")
    head = lines[0].split()
    if len(head) != 2 or head[0] != "checkpoint_version":
        _fail(path, 1, "expected 'checkpoint_version <v>' header")
    if int(head[1]) > CHECKPOINT_FORMAT_VERSION:
        _fail(path, 1, f"unsupported checkpoint version {head[1]}")
    if len(lines) < 2 or not lines[1].startswith("config "):
        _fail(path, 2, "expected config line")
    fields = dict(kv.split("=") for kv in lines[1].split()[1:])
    try:
        cfg = GinConfig(
            layers=int(fields["layers"]),
            hidden_dim=int(fields["hidden_dim"]),
            mlp_depth=int(fields["mlp_depth"]),
            input_dim=int(fields["input_dim"]),
            epsilon=float(fields["epsilon"]),
        )
    except (KeyError, ValueError) as exc:
        raise FormatError(f"{path}:2: bad config line ({exc})") from exc
    weights = []
    i = 2
    while i < len(lines):
        if not lines[i].strip():
            i += 1
            continue
        parts = lines[i].split()
        if parts[0] != "tensor":
            _fail(path, i + 1, f"expected tensor header, got {parts[0]!r}")
        ndim = int(parts[2])
        shape = tuple(int(d) for d in parts[3 : 3 + ndim])
        if i + 1 >= len(lines):
            _fail(path, i + 1, "tensor header without data line")
        try:
            values = np.fromiter(
                (float(tok) for tok in lines[i + 1].split()), dtype=np.float64
            )
        except ValueError as exc:
            raise FormatError(f"{path}:{i + 2}: bad float ({exc})") from exc
        expected = int(np.prod(shape)) if shape else 1
        if values.size != expected:
            _fail(path, i + 2, f"expected {expected} values, got {values.size}")
        weights.append(values.reshape(shape))
        i += 2
    try:
        return ModelParams(
            config=cfg, weights=tuple(weights), fingerprint=cfg.fingerprint()
        )
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from exc


def dataset_paths(directory: str) -> Tuple[str, str]:
    """(manifest path, directory) convention for dataset folders."""
    return os.path.join(directory, "manifest.txt"), directory
