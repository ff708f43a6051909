"""Versioned text model files.

Layout::

    XIM-MODEL v1
    method=c-xim
    seed=0
    <key>=<value>           # config echo and run metadata, sorted by key
    prototypes <M> <D>      # omitted for median models on dissimilarity input
    <M rows, comma separated>
    nodes <M> <d>
    <M rows>
    medians <M>             # median models only
    <one comma separated row>
    end
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import StructureError, format_float

MAGIC = "XIM-MODEL v1"


@dataclass(eq=False)
class ModelFile:
    method: str
    seed: int
    nodes: np.ndarray
    prototypes: Optional[np.ndarray] = None
    medians: Optional[np.ndarray] = None
    meta: dict = field(default_factory=dict)

    @property
    def dim(self) -> Optional[int]:
        return None if self.prototypes is None else self.prototypes.shape[1]


def _block(name, arr):
    arr = np.atleast_2d(arr)
    lines = [f"{name} {arr.shape[0]} {arr.shape[1]}"]
    lines += [",".join(format_float(v) for v in row) for row in arr]
    return lines


def dumps(model: ModelFile) -> str:
    lines = [MAGIC, f"method={model.method}", f"seed={int(model.seed)}"]
    for k in sorted(model.meta):
        lines.append(f"{k}={model.meta[k]}")
    if model.prototypes is not None:
        lines += _block("prototypes", model.prototypes)
    lines += _block("nodes", model.nodes)
    if model.medians is not None:
        lines.append(f"medians {len(model.medians)}")
        lines.append(",".join(str(int(i)) for i in model.medians))
    lines.append("end")
    return "\n".join(lines) + "\n"


def save_model(model: ModelFile, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps(model))


def _read_matrix(lines, pos, rows, cols):
    block = lines[pos : pos + rows]
    if len(block) != rows:
        raise StructureError("truncated model file")
    mat = np.array([[float(v) for v in ln.split(",")] for ln in block], dtype=float).reshape(rows, cols)
    return mat, pos + rows


def loads(text: str) -> ModelFile:
    lines = text.splitlines()
    if not lines or lines[0].strip() != MAGIC:
        raise StructureError(f"not a model file (expected first line {MAGIC!r})")
    meta = {}
    protos = nodes = medians = None
    pos = 1
    while pos < len(lines):
        ln = lines[pos].strip()
        pos += 1
        if ln == "end":
            break
        head = ln.split()
        if head[0] in ("prototypes", "nodes") and len(head) == 3:
            mat, pos = _read_matrix(lines, pos, int(head[1]), int(head[2]))
            if head[0] == "prototypes":
                protos = mat
            else:
                nodes = mat
        elif head[0] == "medians" and len(head) == 2:
            medians = np.array([int(v) for v in lines[pos].split(",")], dtype=int)
            pos += 1
        elif "=" in ln:
            k, v = ln.split("=", 1)
            meta[k] = v
        else:
            raise StructureError(f"unexpected model line {ln!r}")
    if nodes is None:
        raise StructureError("model file has no nodes block")
    method = meta.pop("method", "")
    seed = int(meta.pop("seed", "0"))
    return ModelFile(method, seed, nodes, protos, medians, meta)


def load_model(path) -> ModelFile:
    with open(path, "r", encoding="utf-8") as fh:
        return loads(fh.read())
