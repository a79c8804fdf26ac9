"""
Chernoff-Hellinger ダイバージェンスと辺頻度ベクトル

Div(a, b) = max_{t in [0,1]} Σ_i [t a_i + (1-t) b_i - a_i^t b_i^(1-t)]

g(t) は凹関数なので黄金分割探索で最大化する。
0^0 = 1 の規約は numpy.power がそのまま満たす（a_i = 0 < b_i の項は t > 0 で (1-t) b_i）。
"""
from typing import Callable, Optional, Sequence, Tuple
import logging
import math

import numpy as np
from scipy.stats import poisson

from api.errors import DomainError
from api.response_model import DivergenceResult, RateVectors
from define_model.models import ModelParams
from define_model.settings import get_settings
from services.sampler import micro_index

logger = logging.getLogger(__name__)

INV_PHI = (math.sqrt(5) - 1) / 2  # 1 / phi
INV_PHI_SQUARE = (3 - math.sqrt(5)) / 2  # 1 / phi^2

# 総当たりで扱える Poisson 座標数の上限
MAX_BRUTE_FORCE_DIM = 4
TAIL_MASS = 1e-12


def golden_section_max(
    f: Callable[[float], float],
    a: float,
    b: float,
    tol: float = 1e-12,
    max_iter: int = 200,
) -> Tuple[float, int]:
    """
    単峰関数 f の [a, b] 上の最大点を黄金分割探索で求める

    Returns:
        (最終区間の中点, 反復回数)
    """
    a, b = min(a, b), max(a, b)
    h = b - a
    if h <= tol:
        return (a + b) / 2, 0

    # Required steps to achieve tolerance
    steps = min(max_iter, int(math.ceil(math.log(tol / h) / math.log(INV_PHI))))

    c = a + INV_PHI_SQUARE * h
    d = a + INV_PHI * h
    yc = f(c)
    yd = f(d)

    iterations = 0
    for _ in range(steps - 1):
        iterations += 1
        if yc > yd:
            b = d
            d = c
            yd = yc
            h = INV_PHI * h
            c = a + INV_PHI_SQUARE * h
            yc = f(c)
        else:
            a = c
            c = d
            yc = yd
            h = INV_PHI * h
            d = a + INV_PHI * h
            yd = f(d)

    if yc > yd:
        return (a + d) / 2, iterations
    return (c + b) / 2, iterations


def _as_rate_vector(values, name: str) -> np.ndarray:
    vector = np.asarray(values, dtype=float).reshape(-1)
    if not np.all(np.isfinite(vector)):
        raise DomainError(f"{name} must be finite")
    if np.any(vector < 0):
        raise DomainError(f"{name} must be nonnegative")
    return vector


def ch_objective(a: np.ndarray, b: np.ndarray, t: float) -> float:
    """g(t) = Σ [t a + (1-t) b - a^t b^(1-t)]"""
    with np.errstate(divide="ignore", invalid="ignore"):
        mixed = np.power(a, t) * np.power(b, 1.0 - t)
    return float(np.sum(t * a + (1.0 - t) * b - mixed))


def ch_divergence(a, b) -> DivergenceResult:
    """
    Chernoff-Hellinger ダイバージェンス

    Args:
        a, b: 同じ長さの非負ベクトル

    Returns:
        DivergenceResult: 最大値、最大点 t*、探索の反復回数

    Raises:
        DomainError: 長さ不一致、負の要素
    """
    a = _as_rate_vector(a, "a")
    b = _as_rate_vector(b, "b")
    if a.shape != b.shape:
        raise DomainError(f"vectors must have the same length, got {a.size} and {b.size}")
    if np.array_equal(a, b):
        return DivergenceResult(value=0.0, t_star=0.5, iterations=0)

    settings = get_settings()
    t_star, iterations = golden_section_max(
        lambda t: ch_objective(a, b, t),
        0.0,
        1.0,
        tol=settings.golden_tol,
        max_iter=settings.golden_max_iter,
    )
    value = max(ch_objective(a, b, t_star), 0.0)
    return DivergenceResult(value=value, t_star=t_star, iterations=iterations)


def rate_vectors(params: ModelParams, i: int, j: int) -> RateVectors:
    """
    マイクロコミュニティ (i, j) の辺頻度ベクトル

    q_vec = diag(p) Q e_{j m_x + i}
    q_tilde[i'] = Σ_j' P[i'][j'] Q[j' m_x + i'][j m_x + i]
    g, h は Ξ*Q, (1-Ξ)*Q で同様に定義する
    """
    col = micro_index(i, j, params.m_x, params.m_y)
    p = params.prior_vector()
    rates = params.q_matrix()

    def _collapse(vec: np.ndarray) -> np.ndarray:
        # index j' m_x + i'  ->  (j', i') then sum over j'
        return vec.reshape(params.m_y, params.m_x).sum(axis=0)

    q_vec = p * rates[:, col]
    empty = np.zeros(0)
    g_vec = h_vec = g_tilde = h_tilde = empty
    if params.is_censored:
        signs = params.xi_matrix()
        g_vec = p * (signs * rates)[:, col]
        h_vec = p * ((1.0 - signs) * rates)[:, col]
        g_tilde = _collapse(g_vec)
        h_tilde = _collapse(h_vec)

    return RateVectors(
        i=i,
        j=j,
        q_vec=q_vec,
        q_tilde=_collapse(q_vec),
        g_vec=g_vec,
        h_vec=h_vec,
        g_tilde=g_tilde,
        h_tilde=h_tilde,
    )


def _tail_bound(a: np.ndarray, b: np.ndarray, caps: np.ndarray) -> float:
    """切り捨てた領域の質量の上界（座標ごとの和集合評価）"""
    return float(np.sum(np.maximum(poisson.sf(caps, a), poisson.sf(caps, b))))


def _auto_caps(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    per_coordinate = TAIL_MASS / (10 * a.size)
    caps = np.array([int(poisson.isf(per_coordinate, max(ai, bi))) + 1 for ai, bi in zip(a, b)])
    while _tail_bound(a, b, caps) >= TAIL_MASS / 10:
        caps += 1
    return caps


def poisson_min_sum(
    a,
    b,
    p: float = 1.0,
    p_hat: float = 1.0,
    truncation: Optional[Sequence[int]] = None,
) -> float:
    """
    I(a, b) = Σ_{d in Z+^m} min{P_a(d) p, P_b(d) p_hat} の打ち切り厳密和

    テスト用のオラクル。座標ごとに 0..truncation[i] を総当たりする。

    Args:
        a, b: 正の平均ベクトル（次元 4 以下）
        p, p_hat: 正の重み
        truncation: 座標ごとの上限。None なら裾の質量 < 1e-12 となるよう自動決定

    Raises:
        DomainError: 次元超過、非正の要素、打ち切り不足
    """
    a = _as_rate_vector(a, "a")
    b = _as_rate_vector(b, "b")
    if a.shape != b.shape:
        raise DomainError("a and b must have the same length")
    if a.size > MAX_BRUTE_FORCE_DIM:
        raise DomainError(f"brute-force oracle supports dimension <= {MAX_BRUTE_FORCE_DIM}, got {a.size}")
    if np.any(a <= 0) or np.any(b <= 0) or p <= 0 or p_hat <= 0:
        raise DomainError("poisson_min_sum needs positive means and weights")

    if truncation is None:
        caps = _auto_caps(a, b)
    else:
        caps = np.asarray(truncation, dtype=np.int64).reshape(-1)
        if caps.shape != a.shape:
            raise DomainError("truncation must give one cap per coordinate")
    tail = max(p, p_hat) * _tail_bound(a, b, caps)
    if tail >= TAIL_MASS:
        raise DomainError(f"truncation {caps.tolist()} leaves tail mass {tail:.3e} >= {TAIL_MASS}")

    log_a = np.zeros(())
    log_b = np.zeros(())
    for mean_a, mean_b, cap in zip(a, b, caps):
        support = np.arange(cap + 1)
        log_a = np.add.outer(log_a, poisson.logpmf(support, mean_a))
        log_b = np.add.outer(log_b, poisson.logpmf(support, mean_b))

    return float(np.sum(np.minimum(np.exp(log_a) * p, np.exp(log_b) * p_hat)))


def poisson_min_sum_pair(
    a, b, a_hat, b_hat,
    p: float = 1.0,
    p_hat: float = 1.0,
    truncation: Optional[Sequence[int]] = None,
) -> float:
    """
    I(a, b, â, b̂) = Σ_{d,w} min{P_a(d) P_â(w) p, P_b(d) P_b̂(w) p_hat}

    d と w は独立なので、連結ベクトル [a, â], [b, b̂] の I に等しい。
    """
    left = np.concatenate([_as_rate_vector(a, "a"), _as_rate_vector(a_hat, "a_hat")])
    right = np.concatenate([_as_rate_vector(b, "b"), _as_rate_vector(b_hat, "b_hat")])
    return poisson_min_sum(left, right, p, p_hat, truncation)


def poisson_min_sum_bounds(a, b, p: float = 1.0, p_hat: float = 1.0) -> Tuple[float, float]:
    """
    I(a, b) の上下界

    upper = max{p, p_hat} e^{-Div(a,b)}
    lower = min{p, p_hat} e^{-Div(a,b)} Π_i (1/e) (a_i^t* b_i^(1-t*))^(-1/2)
    """
    a = _as_rate_vector(a, "a")
    b = _as_rate_vector(b, "b")
    div = ch_divergence(a, b)
    t = div.t_star
    mixed = np.power(a, t) * np.power(b, 1.0 - t)
    factor = float(np.prod(np.exp(-1.0) / np.sqrt(mixed)))
    decay = math.exp(-div.value)
    return min(p, p_hat) * decay * factor, max(p, p_hat) * decay


def poisson_min_sum_pair_bounds(
    a, b, a_hat, b_hat, p: float = 1.0, p_hat: float = 1.0
) -> Tuple[float, float]:
    """
    I(a, b, â, b̂) の上下界（連結ベクトルの Div を使う）

    lower の因子は Π_i (1/e^2) [(a_i â_i)^t* (b_i b̂_i)^(1-t*)]^(-1/2)
    """
    a = _as_rate_vector(a, "a")
    b = _as_rate_vector(b, "b")
    a_hat = _as_rate_vector(a_hat, "a_hat")
    b_hat = _as_rate_vector(b_hat, "b_hat")
    div = ch_divergence(np.concatenate([a, a_hat]), np.concatenate([b, b_hat]))
    t = div.t_star
    mixed = np.power(a * a_hat, t) * np.power(b * b_hat, 1.0 - t)
    factor = float(np.prod(np.exp(-2.0) / np.sqrt(mixed)))
    decay = math.exp(-div.value)
    return min(p, p_hat) * decay * factor, max(p, p_hat) * decay
