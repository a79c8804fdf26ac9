"""
厳密復元の閾値

一般形 (ModelParams) では Chernoff-Hellinger ダイバージェンスの最小値、
二値モデル (BinaryModelParams) では η₁, η₂ による SDP の閾値を計算する。
いずれも値が 1 を超えれば厳密復元可能。
"""
from concurrent.futures import ThreadPoolExecutor
from itertools import combinations
from typing import Callable, Iterable, List, Optional, Sequence, Tuple
import logging
import math

import numpy as np

from api.errors import DomainError
from api.response_model import BoundaryPoint, RegionSweepResult, ThresholdReport
from define_model.models import BinaryModelParams, ModelParams, Scenario, SCENARIOS
from define_model.settings import get_settings, resolve_threads
from services.divergence import ch_divergence, rate_vectors

logger = logging.getLogger(__name__)

# 単調性確認に使う q0 の評価点数
_MONOTONE_GRID_POINTS = 17


def _report(which: str, value: float, argmin: Optional[tuple] = None) -> ThresholdReport:
    margin = get_settings().critical_margin
    return ThresholdReport(
        which=which,
        value=float(value),
        argmin=argmin,
        exact_recovery=bool(value > 1.0),
        critical=bool(abs(value - 1.0) <= margin),
    )


def _min_over(pairs: Iterable[Tuple[tuple, np.ndarray, tuple, np.ndarray]]) -> Tuple[float, Optional[tuple]]:
    best, where = math.inf, None
    for left_key, left, right_key, right in pairs:
        value = ch_divergence(left, right).value
        if value < best:
            best, where = value, (left_key, right_key)
    return best, where


def _micro_pairs(params: ModelParams, vector: Callable) -> Iterable:
    cells = [(i, j) for j in range(params.m_y) for i in range(params.m_x)]
    for (i, j), (k, l) in combinations(cells, 2):
        yield (i, j), vector(i, j), (k, l), vector(k, l)


def _community_pairs(params: ModelParams, vector: Callable) -> Iterable:
    for j in range(params.m_y):
        for i, k in combinations(range(params.m_x), 2):
            yield (j, i), vector(i, j), (j, k), vector(k, j)


def _require_censored(params: ModelParams, censored: bool) -> None:
    if params.is_censored != censored:
        kind = "a censored model (Xi)" if censored else "a model without Xi"
        raise DomainError(f"this threshold needs {kind}")


def _q(params: ModelParams) -> Callable:
    return lambda i, j: rate_vectors(params, i, j).q_vec


def _q_tilde(params: ModelParams) -> Callable:
    return lambda i, j: rate_vectors(params, i, j).q_tilde


def _gh(params: ModelParams) -> Callable:
    def vector(i, j):
        rv = rate_vectors(params, i, j)
        return np.concatenate([rv.g_vec, rv.h_vec])
    return vector


def _gh_tilde(params: ModelParams) -> Callable:
    def vector(i, j):
        rv = rate_vectors(params, i, j)
        return np.concatenate([rv.g_tilde, rv.h_tilde])
    return vector


def _flatten_argmin(where: Optional[tuple]) -> Optional[tuple]:
    # ((j, i), (j, k)) -> (j, i, k)
    if where is None:
        return None
    (j, i), (_, k) = where
    return (j, i, k)


def threshold_micro_sbm(params: ModelParams) -> ThresholdReport:
    """全マイクロコミュニティの復元: min_{(i,j)≠(k,l)} Div(q_{i,j}, q_{k,l})"""
    _require_censored(params, False)
    value, where = _min_over(_micro_pairs(params, _q(params)))
    return _report("micro_sbm", value, where)


def threshold_gamma1(params: ModelParams) -> ThresholdReport:
    """y 既知での x の復元: γ₁ = min_j min_{i≠k} Div(q_{i,j}, q_{k,j})"""
    _require_censored(params, False)
    value, where = _min_over(_community_pairs(params, _q(params)))
    return _report("gamma1", value, _flatten_argmin(where))


def threshold_gamma2(params: ModelParams) -> ThresholdReport:
    """y 未知での x の復元: γ₂ = min_j min_{i≠k} Div(q̃_{i,j}, q̃_{k,j})"""
    _require_censored(params, False)
    value, where = _min_over(_community_pairs(params, _q_tilde(params)))
    return _report("gamma2", value, _flatten_argmin(where))


def threshold_micro_cbm(params: ModelParams) -> ThresholdReport:
    _require_censored(params, True)
    value, where = _min_over(_micro_pairs(params, _gh(params)))
    return _report("micro_cbm", value, where)


def threshold_gamma3(params: ModelParams) -> ThresholdReport:
    _require_censored(params, True)
    value, where = _min_over(_community_pairs(params, _gh(params)))
    return _report("gamma3", value, _flatten_argmin(where))


def threshold_gamma4(params: ModelParams) -> ThresholdReport:
    _require_censored(params, True)
    value, where = _min_over(_community_pairs(params, _gh_tilde(params)))
    return _report("gamma4", value, _flatten_argmin(where))


def all_thresholds(params: ModelParams) -> List[ThresholdReport]:
    """モデルの種類に応じた 3 つの閾値をまとめて返す"""
    if params.is_censored:
        return [threshold_micro_cbm(params), threshold_gamma3(params), threshold_gamma4(params)]
    return [threshold_micro_sbm(params), threshold_gamma1(params), threshold_gamma2(params)]


def _as_q(q) -> np.ndarray:
    q = np.asarray(q, dtype=float).reshape(-1)
    if q.shape != (4,):
        raise DomainError(f"q must have 4 entries, got {q.size}")
    if np.any(q < 0):
        raise DomainError("q entries must be nonnegative")
    return q


def eta1(q, rho: float) -> float:
    """η₁(q, ρ) = (ρ/2)(√q0 − √q1)² + ((1−ρ)/2)(√q2 − √q3)²"""
    q0, q1, q2, q3 = np.sqrt(_as_q(q))
    return float(rho / 2 * (q0 - q1) ** 2 + (1 - rho) / 2 * (q2 - q3) ** 2)


def eta2(q, rho: float) -> float:
    """η₂(q, ρ) = ½(√(q0ρ + q2(1−ρ)) − √(q1ρ + q3(1−ρ)))²"""
    q0, q1, q2, q3 = _as_q(q)
    return float(0.5 * (math.sqrt(q0 * rho + q2 * (1 - rho)) - math.sqrt(q1 * rho + q3 * (1 - rho))) ** 2)


def binary_rate_vectors(params: BinaryModelParams) -> Tuple[np.ndarray, Optional[np.ndarray], Optional[np.ndarray]]:
    """
    二値モデルの (q, g, h)

    g = [(1−ξ)q0, ξq1, ξq2, ξq3], h = [ξq0, (1−ξ)q1, (1−ξ)q2, (1−ξ)q3]
    無検閲モデルでは g, h は None。
    """
    q = params.q
    if not params.is_censored:
        return q, None, None
    xi = params.xi
    same = np.array([1 - xi, xi, xi, xi])
    return q, same * q, (1 - same) * q


def sdp_coefficients(params: BinaryModelParams) -> Tuple[Optional[float], float, float, float]:
    """(T, T1, T2, T3)。T は検閲モデルでのみ定義される"""
    q0, q1, q2, q3 = params.q
    t1 = math.log(q0 * q3 / (q2 * q1))
    t2 = math.log(q0 * q2 / (q1 * q3))
    t3 = math.log(q0 * q1 / (q2 * q3))
    t = math.log((1 - params.xi) / params.xi) if params.is_censored else None
    return t, t1, t2, t3


def sdp_threshold(params: BinaryModelParams, known_y: bool) -> ThresholdReport:
    """
    SDP による x の厳密復元条件

    y 既知: ρ ≤ 0.5 なら η₁(·, ρ)、ρ > 0.5 なら η₁(·, 1−ρ)
    y 未知: min{η₂(·, ρ), η₂(·, 1−ρ)}
    検閲モデルでは g と h の値を足し合わせる。
    """
    q, g, h = binary_rate_vectors(params)
    rho = params.rho

    if known_y:
        eta, which = eta1, "eta1"
        candidates = [rho if rho <= 0.5 else 1 - rho]
    else:
        eta, which = eta2, "eta2"
        candidates = [rho, 1 - rho]

    def _value(r: float) -> float:
        if g is None:
            return eta(q, r)
        return eta(g, r) + eta(h, r)

    values = [(_value(r), r) for r in candidates]
    value, chosen = min(values)
    return _report(which, value, (chosen,))


def partial_reveal_threshold(params: ModelParams, beta1: float, beta2: float) -> ThresholdReport:
    """
    y を一部公開した場合の x の復元条件

    SBM: min(γ₁ + β₁, γ₂ + β₂)、CBM: min(γ₃ + β₁, γ₄ + β₂)

    Raises:
        DomainError: β が負
    """
    if beta1 < 0 or beta2 < 0:
        raise DomainError(f"beta values must be nonnegative, got ({beta1}, {beta2})")
    if params.is_censored:
        known, unknown = threshold_gamma3(params), threshold_gamma4(params)
    else:
        known, unknown = threshold_gamma1(params), threshold_gamma2(params)
    return combine_partial_reveal(known.value, unknown.value, beta1, beta2)


def combine_partial_reveal(gamma_known: float, gamma_unknown: float, beta1: float, beta2: float) -> ThresholdReport:
    first = gamma_known + beta1
    second = gamma_unknown + beta2
    if first <= second:
        return _report("partial_reveal", first, ("known", beta1))
    return _report("partial_reveal", second, ("unknown", beta2))


def beta_from_erasure(epsilon: float, n: int) -> Tuple[float, float]:
    """
    消去確率 ε の有限 n での評価: β₁ = −log(1−ε)/log n, β₂ = −log ε/log n

    ε = 0 では β₂ = inf、ε = 1 では β₁ = inf。
    """
    if not 0.0 <= epsilon <= 1.0:
        raise DomainError(f"erasure probability must lie in [0, 1], got {epsilon}")
    if n < 2:
        raise DomainError(f"n must be at least 2, got {n}")
    log_n = math.log(n)
    beta1 = math.inf if epsilon == 1.0 else -math.log1p(-epsilon) / log_n
    beta2 = math.inf if epsilon == 0.0 else -math.log(epsilon) / log_n
    return beta1, beta2


def genie_error_bound(params: ModelParams, n: int, scenario: Scenario) -> float:
    """
    ノード当たりの MAP 誤り確率の上界

    Σ_{i<k} max{P_i, P_k} n^{−Div} を補助ラベル j ごとに計算して最大値を取る。
    y 未知では q̃（または [g̃, h̃]）と x の周辺確率を使う。
    """
    if scenario not in SCENARIOS:
        raise DomainError(f"unknown scenario {scenario}")
    if n < 2:
        raise DomainError(f"n must be at least 2, got {n}")
    _require_censored(params, scenario.startswith("cbm"))
    prior = params.prior_matrix()

    if scenario.endswith("_known_y"):
        vector = _gh(params) if params.is_censored else _q(params)
        weights = prior
    else:
        vector = _gh_tilde(params) if params.is_censored else _q_tilde(params)
        weights = np.repeat(prior.sum(axis=1, keepdims=True), params.m_y, axis=1)

    worst = 0.0
    for j in range(params.m_y):
        total = 0.0
        for i, k in combinations(range(params.m_x), 2):
            div = ch_divergence(vector(i, j), vector(k, j)).value
            total += max(weights[i, j], weights[k, j]) * n ** (-div)
        worst = max(worst, total)
    return worst


def _sweep_one(base: BinaryModelParams, known_y: bool, rho: float, lo: float, hi: float, tol: float):
    params = base.with_rho(rho)

    def condition(q0: float) -> float:
        return sdp_threshold(params.with_q0(q0), known_y).value

    if condition(lo) > 1.0 or condition(hi) <= 1.0:
        return None, "bracket"

    floor = max(params.q1, params.q2, params.q3)
    grid = np.linspace(max(lo, floor), hi, _MONOTONE_GRID_POINTS)
    values = np.array([condition(q0) for q0 in grid])
    if np.any(np.diff(values) < -1e-12):
        return None, "monotone"

    while hi - lo > tol:
        mid = (lo + hi) / 2
        if condition(mid) > 1.0:
            hi = mid
        else:
            lo = mid
    return hi, None


def region_sweep(
    base: BinaryModelParams,
    scenario: Scenario,
    rho_grid: Sequence[float],
    q0_bounds: Tuple[float, float],
    threads: Optional[int] = None,
) -> RegionSweepResult:
    """
    厳密復元領域の境界曲線 (ρ, q0*) を二分法で求める

    Args:
        base: q1, q2, q3 (と ξ) を固定した二値モデル
        scenario: sbm_known_y など。cbm 系は base に ξ が必要
        rho_grid: ρ の格子
        q0_bounds: 全 ρ で閾値を挟む (lo, hi)
        threads: 並列数（出力順は rho_grid の順）

    Raises:
        DomainError: 挟めない ρ、または q0 について単調でない ρ がある
    """
    if scenario not in SCENARIOS:
        raise DomainError(f"unknown scenario {scenario}")
    if scenario.startswith("cbm") != base.is_censored:
        raise DomainError(f"scenario {scenario} does not match the model's signedness")
    lo, hi = sorted(float(v) for v in q0_bounds)
    if lo <= 0:
        raise DomainError(f"q0 bounds must be positive, got {q0_bounds}")
    known_y = scenario.endswith("_known_y")
    tol = get_settings().sweep_q0_tol
    rhos = [float(r) for r in rho_grid]

    workers = resolve_threads(threads)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        outcomes = list(pool.map(lambda r: _sweep_one(base, known_y, r, lo, hi, tol), rhos))

    bad_bracket = [r for r, (_, issue) in zip(rhos, outcomes) if issue == "bracket"]
    bad_monotone = [r for r, (_, issue) in zip(rhos, outcomes) if issue == "monotone"]
    if bad_bracket:
        raise DomainError(f"q0 bounds {(lo, hi)} do not bracket the threshold for rho={bad_bracket}")
    if bad_monotone:
        raise DomainError(f"threshold is not monotone in q0 for rho={bad_monotone}")

    points = [BoundaryPoint(rho=r, q0_star=q0, scenario=scenario) for r, (q0, _) in zip(rhos, outcomes)]
    logger.info(f"Swept {len(points)} rho values for {scenario}")
    return RegionSweepResult(scenario=scenario, points=points)


def region_csv(result: RegionSweepResult) -> str:
    """rho,q0_star,scenario の CSV（小数 6 桁）"""
    lines = ["rho,q0_star,scenario"]
    lines.extend(f"{p.rho:.6f},{p.q0_star:.6f},{p.scenario}" for p in result.points)
    return "\n".join(lines) + "\n"
