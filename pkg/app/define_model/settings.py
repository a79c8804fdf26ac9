"""
数値計算の既定値とスレッド数の設定

環境変数は RECOVERY_THREADS のみを参照する（.env からの読み込みにも対応）。
"""
import os
from functools import lru_cache
from typing import Optional, Tuple

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict

THREADS_ENV = "RECOVERY_THREADS"


class Settings(BaseModel):
    """Numerical defaults shared by the services."""
    model_config = ConfigDict(frozen=True)

    # golden-section search over t in [0, 1]
    golden_max_iter: int = 200
    golden_tol: float = 1e-12

    # |value - 1| below this is reported as "critical"
    critical_margin: float = 1e-9

    # low-rank SDP solver
    solver_max_iter: int = 100_000
    solver_grad_tol: float = 1e-8
    # relative change of the penalized objective between sweeps
    solver_obj_tol: float = 1e-9
    balance_tol: float = 1e-6
    penalty_start: float = 1.0
    penalty_growth: float = 10.0

    # eigen computations for the certificate
    eigen_tol: float = 1e-9
    eigen_max_iter: int = 10_000
    certificate_residual_tol: float = 1e-8
    lambda_retry_factors: Tuple[float, ...] = (1.0, 2.0, 4.0, 8.0)

    # region sweep
    sweep_q0_tol: float = 1e-6

    # Monte Carlo harness
    default_trials: int = 1000
    threads: int = 1


def resolve_threads(override: Optional[int] = None) -> int:
    """
    並列数を決定する

    優先順位: 引数 (--threads) > RECOVERY_THREADS > 1

    Args:
        override: CLI から渡された値

    Returns:
        int: 1 以上のスレッド数
    """
    if override is not None:
        return max(1, int(override))
    load_dotenv()
    raw = os.environ.get(THREADS_ENV)
    if raw is None or raw.strip() == "":
        return 1
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    """Settingsのシングルトンインスタンスを取得"""
    return Settings(threads=resolve_threads())
