from pydantic import BaseModel, ConfigDict, PlainSerializer
from typing import Annotated, Dict, List, Literal, Optional, Tuple
import numpy as np

# numpy 配列は JSON 出力時にリストへ変換する
NDArray = Annotated[
    np.ndarray,
    PlainSerializer(lambda a: np.asarray(a).tolist(), return_type=list, when_used="json"),
]

ThresholdKind = Literal[
    "micro_sbm", "gamma1", "gamma2", "micro_cbm", "gamma3", "gamma4",
    "eta1", "eta2", "partial_reveal",
]


class DivergenceResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    value: float
    t_star: float
    iterations: int


class RateVectors(BaseModel):
    """マイクロコミュニティ (i, j) の辺頻度ベクトル

    g/h 系は検閲モデルでのみ値を持つ（それ以外は空配列）。
    """
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    i: int
    j: int
    q_vec: NDArray
    q_tilde: NDArray
    g_vec: NDArray
    h_vec: NDArray
    g_tilde: NDArray
    h_tilde: NDArray


class ThresholdReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    which: ThresholdKind
    value: float
    # ((i, j), (k, l)) または (j, i, k) など、最小値を与えた組
    argmin: Optional[Tuple] = None
    exact_recovery: bool
    # |value - 1| が臨界幅以内（漸近的に未決定）
    critical: bool = False


class BoundaryPoint(BaseModel):
    model_config = ConfigDict(frozen=True)

    rho: float
    q0_star: float
    scenario: str


class RegionSweepResult(BaseModel):
    scenario: str
    points: List[BoundaryPoint]


class DegreeProfile(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    d: NDArray
    w: NDArray


class DetectionResult(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    x_hat: NDArray
    per_node_scores: Optional[NDArray] = None
    errors: Optional[int] = None
    # 同点で最小インデックスを選んだノード数
    ties: int = 0
    # 全仮説が -inf になったノード数
    degenerate_nodes: int = 0
    objective: Optional[float] = None


class SdpObjective(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    C: NDArray
    scenario: str
    coefficients: Dict[str, float]


class SdpSolution(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    V: Optional[NDArray] = None
    objective: float
    x_hat: NDArray
    # 上位 2 固有値の差
    margin: float
    iterations: int
    grad_norm: float
    converged: bool
    balance_violation: float
    penalty: float
    rank: int
    # 掃引ごとの (ペナルティ係数, ペナルティ付き目的関数値)
    history: List[Tuple[float, float]] = []
    # "gradient" | "objective" | "max_iter"
    stopped_by: Optional[str] = None


class CertificateReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    S_min_eig: float
    S_second_eig: float
    residual_norm: float
    lambda_star: float
    is_certified: bool
    attempts: int = 1


class TrialRecord(BaseModel):
    """ジャーナル 1 行分"""
    model_config = ConfigDict(frozen=True)

    trial: int
    seed: int
    n: int
    scenario: Optional[str] = None
    q0: Optional[float] = None
    rho: Optional[float] = None
    xi: Optional[float] = None
    errors: int
    exact: bool
    certified: Optional[bool] = None
    wall_ms: float
    failed: bool = False


class AggregateRow(BaseModel):
    """CSV 1 行分 (scenario,n,q0,rho,xi,trials,aep,...)"""
    model_config = ConfigDict(frozen=True)

    scenario: str
    n: int
    q0: Optional[float] = None
    rho: Optional[float] = None
    xi: Optional[float] = None
    trials: int
    aep: float
    aep_ci_lo: float
    aep_ci_hi: float
    exact_rate: float
    certified_rate: Optional[float] = None
    # record_timing が無効なら None（CSV では空欄）
    mean_ms: Optional[float] = None
    # AEP が 1e-4 未満のとき点推定ではなく上限として扱う
    aep_is_upper_bound: bool = False
    failed_trials: int = 0


class ExperimentReport(BaseModel):
    name: str
    rows: List[AggregateRow]
    output: Optional[str] = None
    journal: Optional[str] = None


class EmpiricalThreshold(BaseModel):
    q0_star: float
    rate_ci_lo: float
    rate_ci_hi: float
    q0_grid: List[float]
    success_rates: List[float]
    monotone: bool


class FigureReport(BaseModel):
    figure: int
    csv_path: str
    script_path: str
    # y 既知の境界が全ての ρ で y 未知の境界以下か
    known_dominates: bool
