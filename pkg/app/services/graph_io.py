"""
グラフ・パラメータの JSON/YAML 入出力

グラフ JSON: {n, model: "sbm"|"cbm", x: [...], y: [...], edges: [[u, v, sign], ...]} (u < v)
"""
from pathlib import Path
from typing import Any, Dict, Optional, Union
import json
import sys

import numpy as np
import yaml

from api.errors import InputError
from define_model.models import BinaryModelParams, LabeledGraph, ModelParams


def graph_to_dict(graph: LabeledGraph) -> Dict[str, Any]:
    upper_u, upper_v = np.nonzero(np.triu(graph.edges, k=1))
    edges = [[int(u), int(v), int(graph.edges[u, v])] for u, v in zip(upper_u, upper_v)]
    return {
        "n": graph.n,
        "model": graph.model,
        "x": [] if graph.x is None else graph.x.tolist(),
        "y": [] if graph.y is None else graph.y.tolist(),
        "edges": edges,
    }


def graph_from_dict(document: Dict[str, Any]) -> LabeledGraph:
    """
    JSON 文書から LabeledGraph を復元

    Raises:
        InputError: 必須フィールドの欠落、範囲外のノード番号
    """
    try:
        n = int(document["n"])
        model = document.get("model", "sbm")
        edge_list = document.get("edges", [])
    except (KeyError, TypeError, ValueError) as e:
        raise InputError(f"malformed graph document: {e}")

    edges = np.zeros((n, n), dtype=np.int8)
    for entry in edge_list:
        if len(entry) == 2:
            u, v, sign = int(entry[0]), int(entry[1]), 1
        elif len(entry) == 3:
            u, v, sign = int(entry[0]), int(entry[1]), int(entry[2])
        else:
            raise InputError(f"edge entries must be [u, v] or [u, v, sign], got {entry}")
        if not (0 <= u < n and 0 <= v < n) or u == v:
            raise InputError(f"invalid edge ({u}, {v}) for n={n}")
        edges[u, v] = sign
        edges[v, u] = sign

    x = document.get("x") or None
    y = document.get("y") or None
    return LabeledGraph(n=n, model=model, edges=edges, x=x, y=y)


def params_from_dict(document: Dict[str, Any]) -> ModelParams:
    return ModelParams.model_validate(document)


def model_from_dict(document: Dict[str, Any]) -> Union[BinaryModelParams, ModelParams]:
    """q0 を持つ文書は二値モデル、それ以外は一般形 (P, Q, Xi) として読む"""
    if isinstance(document, dict) and "q0" in document:
        return BinaryModelParams.model_validate(document)
    return params_from_dict(document)


def load_document(path: Union[str, Path]) -> Any:
    """
    JSON または YAML ファイルを読み込む（拡張子 .yaml/.yml は YAML として扱う）

    Raises:
        InputError: ファイルが存在しない/読めない/解析できない
    """
    path = Path(path)
    if not path.exists():
        raise InputError(f"file not found: {path}")
    try:
        with open(path, 'r', encoding='utf-8') as f:
            if path.suffix in (".yaml", ".yml"):
                return yaml.safe_load(f)
            return json.load(f)
    except (OSError, json.JSONDecodeError, yaml.YAMLError) as e:
        raise InputError(f"failed to read {path}: {e}")


def write_text(text: str, path: Optional[Union[str, Path]] = None) -> None:
    """path が None なら標準出力へ"""
    if path is None:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")
        return
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, 'w', encoding='utf-8', newline="") as f:
            f.write(text)
    except OSError as e:
        raise InputError(f"failed to write {path}: {e}")


def dump_json(document: Any, path: Optional[Union[str, Path]] = None) -> None:
    write_text(json.dumps(document, indent=2, sort_keys=False), path)


def load_graph(path: Union[str, Path]) -> LabeledGraph:
    return graph_from_dict(load_document(path))


def load_model(path: Union[str, Path]) -> Union[BinaryModelParams, ModelParams]:
    return model_from_dict(load_document(path))
