"""
小さなグラフでの厳密最尤推定（総当たり）

均衡した ±1 ベクトル全体で x^T C x を最大化する。C は SDP と同じ目的関数行列。
"""
from itertools import combinations
import logging

import numpy as np

from api.errors import DomainError
from api.response_model import DetectionResult
from define_model.models import BinaryModelParams, LabeledGraph, Scenario
from services.detect import align_and_score
from services.sdp import build_objective

logger = logging.getLogger(__name__)

MAX_BRUTE_FORCE_NODES = 16

# 対数尤度（定数を除く）= scale · x^T C x
_LIKELIHOOD_SCALE = {
    "sbm_known_y": 1 / 8,
    "sbm_unknown_y": 1.0,
    "cbm_known_y": 1 / 4,
    "cbm_unknown_y": 1 / 4,
}


def log_likelihood(graph: LabeledGraph, params: BinaryModelParams, x, scenario: Scenario) -> float:
    """
    二値モデルの対数尤度（x に依らない定数を除く）

    sbm_known_y: (T1/8) x^T B x + (T2/8) x^T A x
    sbm_unknown_y: x^T A x
    cbm_known_y: ¼ x^T R x、cbm_unknown_y: ¼ x^T (T A + T2 A∘A) x
    """
    C = build_objective(graph, params, scenario).C
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.size != graph.n:
        raise DomainError(f"x must have length {graph.n}")
    return float(_LIKELIHOOD_SCALE[scenario] * (x @ C @ x))


def balanced_vectors(n: int):
    """x_0 = +1 に固定した均衡 ±1 ベクトルを列挙（−x は同値なので省く）"""
    if n < 2 or n % 2:
        raise DomainError(f"balanced enumeration needs an even n >= 2, got {n}")
    half = n // 2
    for rest in combinations(range(1, n), half - 1):
        x = -np.ones(n, dtype=np.int64)
        x[0] = 1
        x[list(rest)] = 1
        yield x


def ml_bruteforce(graph: LabeledGraph, objective: Scenario, params: BinaryModelParams) -> DetectionResult:
    """
    均衡ベクトル全体での x^T C x の最大化

    Args:
        graph: n ≤ 16 のグラフ
        objective: 目的関数のシナリオ
        params: 二値モデル（係数 T, T1, T2 に使う）

    Returns:
        DetectionResult: x_hat は x_0 = +1 の代表元、ties は最大値を共有する他の
        ベクトル数（±x は 1 つと数える）

    Raises:
        DomainError: n が奇数、または 16 を超える
    """
    n = graph.n
    if n > MAX_BRUTE_FORCE_NODES:
        raise DomainError(f"brute-force ML supports n <= {MAX_BRUTE_FORCE_NODES}, got {n}")
    C = build_objective(graph, params, objective).C

    candidates = np.array(list(balanced_vectors(n)), dtype=float)
    values = np.einsum("ki,ij,kj->k", candidates, C, candidates)
    best = float(values.max())
    tol = 1e-9 * max(1.0, abs(best))
    winners = np.flatnonzero(values >= best - tol)
    x_hat = candidates[winners[0]].astype(np.int64)
    ties = int(winners.size - 1)
    if ties:
        logger.info(f"brute-force ML: {winners.size} balanced vectors share the maximum")

    errors = None
    if graph.x is not None:
        errors = align_and_score(x_hat, graph.x_signs(), "global_sign")
    return DetectionResult(
        x_hat=x_hat,
        errors=errors,
        ties=ties,
        objective=best,
    )
