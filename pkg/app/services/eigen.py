"""
対称行列の最小固有値（シフト付きべき乗法と減次）
"""
from typing import NamedTuple, Optional
import logging

import numpy as np

from define_model.settings import get_settings

logger = logging.getLogger(__name__)


class EigenPair(NamedTuple):
    value: float
    vector: np.ndarray
    iterations: int
    converged: bool


def gershgorin_bound(matrix: np.ndarray) -> float:
    """max_i Σ_j |M_ij|（スペクトル半径の上界）"""
    return float(np.abs(matrix).sum(axis=1).max()) if matrix.size else 0.0


def _unit(vector: np.ndarray) -> Optional[np.ndarray]:
    norm = np.linalg.norm(vector)
    return None if norm == 0 else vector / norm


def smallest_eigenpair(
    matrix: np.ndarray,
    orthogonal_to: Optional[np.ndarray] = None,
    tol: Optional[float] = None,
    max_iter: Optional[int] = None,
    seed: int = 0,
) -> EigenPair:
    """
    対称行列の最小固有値を σI − M のべき乗法で求める

    orthogonal_to を与えると、その方向を除いた部分空間（減次）での最小固有値を返す。
    残差 ‖Mv − θv‖ が tol·σ 以下で収束。上限回数で収束しなければ密な固有値分解に切り替える。

    Args:
        matrix: 対称行列
        orthogonal_to: 除外する方向（正規化不要）
        tol: 相対許容誤差（既定は settings.eigen_tol）
        max_iter: 反復上限（既定は settings.eigen_max_iter）
        seed: 初期ベクトルの乱数シード

    Returns:
        EigenPair: 固有値、固有ベクトル、反復回数、べき乗法で収束したか
    """
    settings = get_settings()
    tol = settings.eigen_tol if tol is None else tol
    max_iter = settings.eigen_max_iter if max_iter is None else max_iter

    n = matrix.shape[0]
    u = None if orthogonal_to is None else _unit(np.asarray(orthogonal_to, dtype=float))

    def project(v: np.ndarray) -> np.ndarray:
        return v if u is None else v - (u @ v) * u

    sigma = max(gershgorin_bound(matrix), 1.0)
    rng = np.random.default_rng(seed)
    v = _unit(project(rng.standard_normal(n)))
    if v is None:
        return _dense_smallest(matrix, u, 0)

    theta = float(v @ matrix @ v)
    for iteration in range(1, max_iter + 1):
        w = project(sigma * v - matrix @ v)
        w = _unit(w)
        if w is None:
            # v lies in the top eigenspace of σI − M
            return EigenPair(theta, v, iteration, True)
        v = w
        mv = matrix @ v
        theta = float(v @ mv)
        residual = np.linalg.norm(project(mv) - theta * v)
        if residual <= tol * sigma:
            return EigenPair(theta, v, iteration, True)

    logger.warning(f"power iteration did not converge in {max_iter} steps (n={n}); using a dense solver")
    return _dense_smallest(matrix, u, max_iter)


def _dense_smallest(matrix: np.ndarray, u: Optional[np.ndarray], iterations: int) -> EigenPair:
    if u is None:
        values, vectors = np.linalg.eigh(matrix)
        return EigenPair(float(values[0]), vectors[:, 0], iterations, False)
    # P M P + 2σ uu^T: u は最大固有値側へ移り、残りは補空間での固有値
    projector = np.eye(matrix.shape[0]) - np.outer(u, u)
    shifted = projector @ matrix @ projector + 2 * max(gershgorin_bound(matrix), 1.0) * np.outer(u, u)
    values, vectors = np.linalg.eigh(shifted)
    return EigenPair(float(values[0]), vectors[:, 0], iterations, False)
