"""
二潜在変数ブロックモデルのサンプラー

確率的ブロックモデル (sbm) と検閲ブロックモデル (cbm) のグラフを生成する。
乱数は (seed, ストリーム番号) をキーにした Philox から取り出すため、
どの行をどの順番で生成しても結果は同じになる。
"""
from typing import Optional, Tuple
import logging
import math

import numpy as np

from api.errors import DomainError
from define_model.models import BinaryModelParams, LabeledGraph, ModelParams

logger = logging.getLogger(__name__)

LABEL_STREAM = 0
_KEY_MASK = (1 << 64) - 1


def micro_index(i: int, j: int, m_x: int, m_y: Optional[int] = None) -> int:
    """
    マイクロコミュニティ (i, j) の行列インデックス j*m_x + i

    Raises:
        DomainError: ラベルが範囲外
    """
    if m_x <= 0 or not 0 <= i < m_x:
        raise DomainError(f"community label {i} out of range for m_x={m_x}")
    if j < 0 or (m_y is not None and j >= m_y):
        raise DomainError(f"auxiliary label {j} out of range for m_y={m_y}")
    return j * m_x + i


def stream(seed: int, index: int) -> np.random.Generator:
    """(seed, index) をキーとするカウンタベースの乱数生成器"""
    key = np.array([int(seed) & _KEY_MASK, int(index) & _KEY_MASK], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def edge_scale(n: int) -> float:
    """log n / n（n = 1 では 0）"""
    return math.log(n) / n if n > 1 else 0.0


def _largest_remainder(weights: np.ndarray, n: int) -> np.ndarray:
    raw = weights * n
    counts = np.floor(raw).astype(np.int64)
    short = n - int(counts.sum())
    if short > 0:
        order = np.argsort(-(raw - counts), kind="stable")
        counts[order[:short]] += 1
    return counts


def sample_labels(params: ModelParams, n: int, seed: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    ノードの潜在変数 (x, y) を生成する

    balanced_x の場合は、シード付き置換で選んだちょうど floor(n/2) 個のノードに
    x = +1（ラベル 1）を割り当て、y は x で条件付けた P の行から独立に引く。
    それ以外は (x, y) を P から i.i.d. に引く。
    """
    rng = stream(seed, LABEL_STREAM)
    prior = params.prior_matrix()

    if not params.balanced_x:
        idx = rng.choice(params.size, size=n, p=params.prior_vector() / params.prior_vector().sum())
        return idx % params.m_x, idx // params.m_x

    x = np.zeros(n, dtype=np.int64)
    x[rng.permutation(n)[: n // 2]] = 1

    if params.exact_y_count:
        counts = _largest_remainder(prior.sum(axis=0), n)
        y = np.repeat(np.arange(params.m_y), counts)[rng.permutation(n)]
        return x, y

    row_mass = prior.sum(axis=1, keepdims=True)
    if np.any(row_mass <= 0):
        raise DomainError("balanced_x requires both communities to have positive prior mass")
    cumulative = np.cumsum(prior / row_mass, axis=1)
    u = rng.random(n)
    y = (u[:, None] >= cumulative[x]).sum(axis=1)
    return x, np.minimum(y, params.m_y - 1)


def _sample(params: ModelParams, n: int, seed: int, signed: bool) -> LabeledGraph:
    if n < 1:
        raise DomainError(f"n must be at least 1, got {n}")
    x, y = sample_labels(params, n, seed)
    idx = y * params.m_x + x

    rates = params.q_matrix() * edge_scale(n)
    positive = params.xi_matrix() if signed else None
    edges = np.zeros((n, n), dtype=np.int8)
    clipped = 0

    for v in range(n - 1):
        others = idx[v + 1:]
        raw = rates[idx[v], others]
        clipped += int(np.count_nonzero(raw > 1.0))
        # 行 0: 辺の有無, 行 1: 符号
        draws = stream(seed, v + 1).random((2, others.size))
        present = draws[0] < np.minimum(raw, 1.0)
        if signed:
            sign = np.where(draws[1] < positive[idx[v], others], 1, -1)
            edges[v, v + 1:] = present * sign
        else:
            edges[v, v + 1:] = present

    edges = edges + edges.T
    if clipped:
        logger.warning(f"{clipped} pair probabilities exceeded 1 at n={n} and were clipped")

    graph = LabeledGraph(
        n=n,
        model="cbm" if signed else "sbm",
        edges=edges,
        x=x,
        y=y,
        clipped_pairs=clipped,
    )
    logger.info(f"Sampled {graph.model} graph n={n} seed={seed} edges={int(np.count_nonzero(edges)) // 2}")
    return graph


def sample_sbm(params: ModelParams, n: int, seed: int) -> LabeledGraph:
    """
    確率的ブロックモデルのグラフを生成

    Args:
        params: Xi を持たないモデル
        n: ノード数
        seed: 乱数シード

    Returns:
        LabeledGraph: {0,1} の隣接行列と真のラベル

    Raises:
        DomainError: Xi を持つモデル、または n < 1
    """
    if params.is_censored:
        raise DomainError("sample_sbm needs a model without Xi; use sample_cbm")
    return _sample(params, n, seed, signed=False)


def sample_cbm(params: ModelParams, n: int, seed: int) -> LabeledGraph:
    """
    検閲ブロックモデルのグラフを生成

    辺の有無は sample_sbm と同じ規則、存在する辺は確率 Xi で +1、それ以外は -1。
    """
    if not params.is_censored:
        raise DomainError("sample_cbm needs a model with Xi")
    return _sample(params, n, seed, signed=True)


def sample_graph(params: ModelParams, n: int, seed: int) -> LabeledGraph:
    if params.is_censored:
        return sample_cbm(params, n, seed)
    return sample_sbm(params, n, seed)


def binary_to_general(params: BinaryModelParams, exact_y_count: bool = False) -> ModelParams:
    """
    二値モデルを一般形 (P, Q, Ξ) に変換する

    x は均衡、y は x と独立で P(y = +1) = ρ。Q は x, y が一致するかどうかで
    q0 (両方一致), q1 (x のみ不一致), q2 (y のみ不一致), q3 (両方不一致)。
    Ξ は同じマイクロコミュニティ内で 1-ξ、それ以外 ξ。
    """
    rho = params.rho
    prior = [[(1 - rho) / 2, rho / 2], [(1 - rho) / 2, rho / 2]]

    rates = [[0.0] * 4 for _ in range(4)]
    signs = [[0.0] * 4 for _ in range(4)] if params.is_censored else None
    table = {(True, True): params.q0, (False, True): params.q1,
             (True, False): params.q2, (False, False): params.q3}
    for a in range(4):
        for b in range(4):
            same_x = (a % 2) == (b % 2)
            same_y = (a // 2) == (b // 2)
            rates[a][b] = table[(same_x, same_y)]
            if signs is not None:
                signs[a][b] = 1 - params.xi if (same_x and same_y) else params.xi

    return ModelParams(
        m_x=2,
        m_y=2,
        P=prior,
        Q=rates,
        Xi=signs,
        balanced_x=True,
        exact_y_count=exact_y_count,
    )


def classic_cbm(a: float, xi: float, balanced: bool = True) -> ModelParams:
    """単一潜在変数の検閲ブロックモデル（m_y = 1 の特殊ケース）"""
    if a < 0 or not 0 <= xi <= 1:
        raise DomainError(f"invalid censored model a={a}, xi={xi}")
    return ModelParams(
        m_x=2,
        m_y=1,
        P=[[0.5], [0.5]],
        Q=[[a, a], [a, a]],
        Xi=[[1 - xi, xi], [xi, 1 - xi]],
        balanced_x=balanced,
    )
