"""
双対証明書による SDP 最適性の確認

S = diag(d*) + λ*J − C,  d*_i = Σ_j C_ij x̂_j x̂_i

S x̂ = 0、S ⪰ 0、第 2 最小固有値 > 0 が成り立てば Z = x̂x̂^T が SDP の一意な最適解。
λ* は下界の値から始め、通らなければ辺の重みの尺度に倍率 (2, 4, 8) を掛けて再試行する。
"""
from typing import Optional
import logging

import numpy as np

from api.errors import DomainError
from api.response_model import CertificateReport
from define_model.models import BinaryModelParams, LabeledGraph, Scenario, SCENARIOS
from define_model.settings import get_settings
from services.eigen import gershgorin_bound, smallest_eigenpair
from services.sampler import edge_scale
from services.sdp import build_objective
from services.thresholds import sdp_coefficients

logger = logging.getLogger(__name__)


def empirical_rho(graph: LabeledGraph) -> Optional[float]:
    """グラフの y から ρ̂ = |{v: y_v = +1}| / n"""
    if graph.y is None:
        return None
    return float(np.mean(np.asarray(graph.y) == 1))


def _censored_class_bound(params: BinaryModelParams, n: int, spread: float, known_y: bool) -> float:
    """
    検閲モデルの λ*: E[C_ij] の x に依らない部分

    f(s, t) = E[C_ij | x_i x_j = s, y_i y_j = t] を
    α + γ t と分けたとき、α + max(γ, 0)(2ρ−1)² を返す。
    """
    t_sign, t1, t2, _ = sdp_coefficients(params)
    q0, q1, q2, q3 = params.q
    rates = {(1, 1): q0, (-1, 1): q1, (1, -1): q2, (-1, -1): q3}
    bias = 1.0 - 2.0 * params.xi
    scale = edge_scale(n)

    def f(s: int, t: int) -> float:
        mean_sign = bias if (s, t) == (1, 1) else -bias
        if known_y:
            weight = t_sign * mean_sign * (1 + t) + t1 * t + t2
        else:
            weight = t_sign * mean_sign + t2
        return scale * rates[(s, t)] * weight

    alpha = sum(f(s, 1) + f(s, -1) for s in (1, -1)) / 4
    gamma = sum(f(s, 1) - f(s, -1) for s in (1, -1)) / 4
    return alpha + max(gamma, 0.0) * spread


def lambda_lower_bound(
    params: BinaryModelParams,
    n: int,
    scenario: Scenario,
    rho_hat: Optional[float] = None,
) -> float:
    """
    λ* の下界

    sbm_known_y:   ¼[T1 c1 + T2 c2](2ρ−1)²
    sbm_unknown_y: ¼[c1 (2ρ̂−1)² + c2]
    c1 = (log n / n)(q0 − q2 + q1 − q3), c2 = (log n / n)(q0 + q2 + q1 + q3)

    rho_hat が None の場合、y 既知では params.rho、y 未知では (2ρ̂−1)² = 1 を使う。
    """
    if scenario not in SCENARIOS:
        raise DomainError(f"unknown scenario {scenario}")
    known_y = scenario.endswith("_known_y")
    if rho_hat is None:
        spread = (2 * params.rho - 1) ** 2 if known_y else 1.0
    else:
        spread = (2 * rho_hat - 1) ** 2

    if scenario.startswith("cbm"):
        return _censored_class_bound(params, n, spread, known_y)

    q0, q1, q2, q3 = params.q
    scale = edge_scale(n)
    c1 = scale * (q0 - q2 + q1 - q3)
    c2 = scale * (q0 + q2 + q1 + q3)
    if known_y:
        _, t1, t2, _ = sdp_coefficients(params)
        return 0.25 * (t1 * c1 + t2 * c2) * spread
    return 0.25 * (c1 * spread + c2)


def _as_balanced_signs(x_hat) -> np.ndarray:
    x = np.asarray(x_hat, dtype=np.int64).reshape(-1)
    if not np.all(np.isin(x, (-1, 1))):
        raise DomainError("certificate needs a ±1 label vector")
    if int(x.sum()) != 0:
        raise DomainError(f"certificate needs a balanced label vector, got x^T 1 = {int(x.sum())}")
    return x


def check_certificate(C: np.ndarray, x: np.ndarray, lambda_star: float, seed: int = 0) -> CertificateReport:
    """与えられた λ* で S を組み、3 条件を確認する"""
    settings = get_settings()
    xf = x.astype(float)
    d = (C @ xf) * xf
    S = np.diag(d) + lambda_star * np.ones_like(C) - C

    residual = float(np.linalg.norm(S @ xf))
    scale = max(gershgorin_bound(S), 1.0)
    tol_e = settings.eigen_tol * scale
    tol_r = settings.certificate_residual_tol * max(float(np.linalg.norm(C)), 1.0)

    smallest = smallest_eigenpair(S, seed=seed).value
    second = smallest_eigenpair(S, orthogonal_to=xf, seed=seed).value
    certified = residual <= tol_r and smallest >= -tol_e and second > tol_e
    return CertificateReport(
        S_min_eig=smallest,
        S_second_eig=second,
        residual_norm=residual,
        lambda_star=lambda_star,
        is_certified=bool(certified),
    )


def certify(
    graph: LabeledGraph,
    params: BinaryModelParams,
    scenario: Scenario,
    x_hat,
    rho_hat: Optional[float] = None,
) -> CertificateReport:
    """
    x̂ が SDP 緩和の一意な最適解を与えるか確認する

    Args:
        graph: 観測グラフ
        params: 二値モデル
        scenario: 4 シナリオのいずれか
        x_hat: 均衡した ±1 ラベル
        rho_hat: λ* に使う ρ̂（省略時はグラフの y から、なければ保守的な値）

    Returns:
        CertificateReport: 最後に試した λ* での結果と試行回数

    Raises:
        DomainError: x̂ が ±1 でない、または均衡していない
    """
    x = _as_balanced_signs(x_hat)
    if x.size != graph.n:
        raise DomainError(f"x_hat must have length {graph.n}")
    C = build_objective(graph, params, scenario).C
    if rho_hat is None:
        rho_hat = empirical_rho(graph)

    base = lambda_lower_bound(params, graph.n, scenario, rho_hat)
    # 再試行の尺度は平均的な辺の重みと C の平均成分を下限とする
    n = graph.n
    unit = max(
        base,
        0.25 * edge_scale(n) * float(np.sum(params.q)),
        float(np.abs(C).sum()) / (n * n),
    )

    report = None
    factors = get_settings().lambda_retry_factors
    for attempt, factor in enumerate(factors, start=1):
        lam = base if attempt == 1 else unit * factor
        report = check_certificate(C, x, lam).model_copy(update={"attempts": attempt})
        if report.is_certified:
            break
        logger.debug(f"certificate failed with lambda*={lam:.6g} (attempt {attempt})")

    if not report.is_certified:
        logger.info(f"no certificate for {scenario} n={graph.n} after {len(factors)} attempts")
    return report
