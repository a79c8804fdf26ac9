"""
SDP 緩和の構築・低ランク解法・丸め

max ⟨Z, C⟩  s.t.  Z ⪰ 0, Z_ii = 1, ⟨Z, J⟩ = 0

Z = VV^T (V は n×r、各行が単位ベクトル) とおき、⟨Z, J⟩ = ‖V^T 1‖² をペナルティ μ で扱う。
各行を順に厳密最大化する座標上昇法で解くので、μ を固定した間は目的関数が単調に増える。
μ を固定した各段階は、勾配ノルムか目的関数の相対変化が閾値を下回った時点で打ち切る。
"""
from typing import Optional
import logging
import math

import numpy as np

from api.errors import DomainError
from api.response_model import SdpObjective, SdpSolution
from define_model.models import BinaryModelParams, LabeledGraph, Scenario, SCENARIOS
from define_model.settings import get_settings
from services.thresholds import sdp_coefficients

logger = logging.getLogger(__name__)


def build_objective(graph: LabeledGraph, params: BinaryModelParams, scenario: Scenario) -> SdpObjective:
    """
    シナリオごとの目的関数行列 C

    sbm_known_y:   T1·B + T2·A,  B = (yy^T)∘A
    sbm_unknown_y: A
    cbm_known_y:   T·A + T·(A∘W) + T1·(A∘A∘W) + T2·(A∘A),  W = yy^T
    cbm_unknown_y: T·A + T2·(A∘A)

    Raises:
        DomainError: グラフの符号とシナリオが合わない、y 既知シナリオで y がない
    """
    if scenario not in SCENARIOS:
        raise DomainError(f"unknown scenario {scenario}")
    censored = scenario.startswith("cbm")
    if graph.is_signed != censored:
        raise DomainError(f"scenario {scenario} does not match a {graph.model} graph")
    if censored and not params.is_censored:
        raise DomainError(f"scenario {scenario} needs xi in the model parameters")
    known_y = scenario.endswith("_known_y")
    if known_y and graph.y is None:
        raise DomainError(f"scenario {scenario} needs the graph's y labels")

    t, t1, t2, t3 = sdp_coefficients(params)
    adjacency = graph.adjacency()
    support = graph.support()
    coefficients = {"T1": t1, "T2": t2, "T3": t3}
    if t is not None:
        coefficients["T"] = t

    if known_y:
        y = graph.y_signs().astype(float)
        agreement = np.outer(y, y)

    if scenario == "sbm_known_y":
        C = t1 * (agreement * adjacency) + t2 * adjacency
    elif scenario == "sbm_unknown_y":
        C = adjacency.copy()
    elif scenario == "cbm_known_y":
        C = t * adjacency + t * (adjacency * agreement) + t1 * (support * agreement) + t2 * support
    else:
        C = t * adjacency + t2 * support

    return SdpObjective(C=C, scenario=scenario, coefficients=coefficients)


def default_rank(n: int) -> int:
    return max(2, int(math.ceil(math.sqrt(2 * n))))


def _normalize_rows(V: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(V, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    return V / norms


def _mean_row_weight(matrix: np.ndarray) -> float:
    """平均の行和 |M_ij| を n で割ったもの（初期ペナルティの尺度）"""
    return float(np.abs(matrix).sum(axis=1).mean()) / max(matrix.shape[0], 1)


def _riemannian_grad_norm(V: np.ndarray, G: np.ndarray, s: np.ndarray, mu: float, offset: float) -> float:
    # ユークリッド勾配 2(CV − μ c 1 s^T) を各行の接空間へ射影
    euclid = 2.0 * (G - mu * offset * s[None, :])
    radial = np.sum(euclid * V, axis=1, keepdims=True)
    return float(np.linalg.norm(euclid - radial * V))


def solve(
    objective: SdpObjective,
    rank: Optional[int] = None,
    max_iter: Optional[int] = None,
    seed: int = 0,
    balance: int = 0,
    keep_factor: bool = True,
) -> SdpSolution:
    """
    SDP 緩和を低ランク分解 Z = VV^T で解く

    Args:
        objective: build_objective の結果
        rank: V の列数（既定は ceil(sqrt(2n))、最小 2）
        max_iter: 掃引回数の上限（既定は settings.solver_max_iter）
        seed: 初期値の乱数シード
        balance: x^T 1 の目標値。0 以外では ⟨Z, J⟩ = balance² を目標にする
        keep_factor: V を結果に含めるか

    Returns:
        SdpSolution: 丸めたラベルと収束情報。収束しなかった場合も converged=False で返す

    Raises:
        DomainError: n < 2、または n と balance の偶奇が合わない
    """
    settings = get_settings()
    C = np.asarray(objective.C, dtype=float)
    n = C.shape[0]
    if n < 2 or (n - balance) % 2 != 0 or abs(balance) > n:
        raise DomainError(f"cannot balance n={n} nodes to x^T 1 = {balance}")

    r = rank or default_rank(n)
    max_iter = settings.solver_max_iter if max_iter is None else max_iter
    scale = float(np.linalg.norm(C))
    grad_tol = settings.solver_grad_tol * max(scale, 1.0)
    target = float(balance) ** 2

    off = C - np.diag(np.diag(C))
    V = _normalize_rows(np.random.default_rng(seed).standard_normal((n, r)))
    G = off @ V
    s = V.sum(axis=0)
    mu = settings.penalty_start * max(_mean_row_weight(off), 1e-12)

    def penalized() -> float:
        gap = s @ s - target
        penalty = mu * gap if balance == 0 else mu * gap ** 2
        return float(np.sum(G * V) - penalty)

    history = []
    iterations = 0
    converged = False
    stopped_by = "max_iter"
    grad_norm = math.inf
    previous = None
    while iterations < max_iter:
        iterations += 1
        for i in range(n):
            old = V[i].copy()
            rest = s - old
            if balance == 0:
                direction = G[i] - mu * rest
            else:
                direction = G[i] - 2.0 * mu * (s @ s - target) * rest
            norm = np.linalg.norm(direction)
            if norm == 0:
                continue
            new = direction / norm
            delta = new - old
            V[i] = new
            G += np.outer(off[:, i], delta)
            s = rest + new
        current = penalized()
        history.append((mu, current))

        offset = 1.0 if balance == 0 else 2.0 * (s @ s - target)
        grad_norm = _riemannian_grad_norm(V, G, s, mu, offset)
        # μ を固定した段階の終了: 勾配が十分小さいか、目的関数の相対変化が止まった
        obj_tol = settings.solver_obj_tol * max(1.0, abs(current))
        stalled = previous is not None and abs(current - previous) <= obj_tol
        previous = current
        if grad_norm <= grad_tol or stalled:
            violation = abs(s @ s - target) / n ** 2
            if violation <= settings.balance_tol:
                converged = True
                stopped_by = "gradient" if grad_norm <= grad_tol else "objective"
                break
            # V はそのまま次の段階の初期値にする
            mu *= settings.penalty_growth
            previous = None
            logger.debug(f"balance violation {violation:.3e}; penalty raised to {mu:.3e}")

    if not converged:
        logger.warning(f"SDP solver stopped after {iterations} sweeps (grad norm {grad_norm:.3e})")

    x_hat, margin = round_labels(V, balance)
    value = float(np.sum(G * V) + np.trace(C))
    solution = SdpSolution(
        V=V if keep_factor else None,
        objective=value,
        x_hat=x_hat,
        margin=margin,
        iterations=iterations,
        grad_norm=grad_norm,
        converged=converged,
        balance_violation=float(abs(s @ s - target) / n ** 2),
        penalty=mu,
        rank=r,
        history=history,
        stopped_by=stopped_by,
    )
    logger.info(f"SDP {objective.scenario} n={n} r={r}: {iterations} sweeps, objective {value:.6g}")
    return solution


def round_labels(V: np.ndarray, balance: int = 0):
    """
    Z = VV^T の最大固有ベクトルの符号でラベルを決める

    x^T 1 = balance になるまで、多い側から |score| の小さいノードを反転する
    （同点はノード番号の小さい順）。符号は x̂_0 = +1 にそろえる。

    Returns:
        (x_hat, 上位 2 固有値の差)
    """
    V = np.asarray(V, dtype=float)
    n = V.shape[0]
    left, singular, _ = np.linalg.svd(V, full_matrices=False)
    score = left[:, 0]
    eigs = singular ** 2
    margin = float(eigs[0] - eigs[1]) if eigs.size > 1 else float(eigs[0])

    x = np.where(score >= 0, 1, -1).astype(np.int64)
    excess = int(x.sum()) - balance
    if excess != 0:
        side = 1 if excess > 0 else -1
        candidates = np.flatnonzero(x == side)
        order = candidates[np.argsort(np.abs(score[candidates]), kind="stable")]
        x[order[: abs(excess) // 2]] = -side

    if balance == 0 and n and x[0] < 0:
        x = -x
    return x, margin
