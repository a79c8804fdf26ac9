"""
二潜在変数ブロックモデルのドメイン型

ModelParams: 一般形 (P, Q, Ξ)
BinaryModelParams: 二値モデル (q0..q3, ξ, ρ)
LabeledGraph: 隣接行列（無符号 or 符号付き）と真のラベル
ExperimentConfig: モンテカルロ実験の設定
"""
from typing import List, Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

Scenario = Literal["sbm_known_y", "sbm_unknown_y", "cbm_known_y", "cbm_unknown_y"]
Detector = Literal["map", "sdp", "ml_bruteforce"]
GraphKind = Literal["sbm", "cbm"]

SCENARIOS: tuple = ("sbm_known_y", "sbm_unknown_y", "cbm_known_y", "cbm_unknown_y")

_SYM_TOL = 1e-12


def _is_symmetric(matrix: np.ndarray) -> bool:
    return bool(np.allclose(matrix, matrix.T, rtol=0.0, atol=_SYM_TOL))


class ModelParams(BaseModel):
    """一般形の生成モデル

    行列 Q, Ξ の行・列 j*m_x + i はマイクロコミュニティ (i, j) に対応する。
    """
    model_config = ConfigDict(frozen=True)

    m_x: int = Field(gt=0)
    m_y: int = Field(gt=0)
    P: List[List[float]]
    Q: List[List[float]]
    Xi: Optional[List[List[float]]] = None
    # 二値モデルの設定: x を厳密に半々に割り当てる
    balanced_x: bool = False
    # y をちょうど round(n * 周辺確率) 個ずつ割り当てる（感度確認用）
    exact_y_count: bool = False

    @model_validator(mode="after")
    def _check_invariants(self) -> "ModelParams":
        size = self.m_x * self.m_y
        prior = np.asarray(self.P, dtype=float)
        if prior.shape != (self.m_x, self.m_y):
            raise ValueError(f"P must be {self.m_x}x{self.m_y}, got {prior.shape}")
        if np.any(prior < 0):
            raise ValueError("P entries must be nonnegative")
        if abs(prior.sum() - 1.0) > 1e-12:
            raise ValueError(f"P entries must sum to 1, got {prior.sum()!r}")

        rates = np.asarray(self.Q, dtype=float)
        if rates.shape != (size, size):
            raise ValueError(f"Q must be {size}x{size}, got {rates.shape}")
        if np.any(rates < 0):
            raise ValueError("Q entries must be nonnegative")
        if not _is_symmetric(rates):
            raise ValueError("Q must be symmetric")

        if self.Xi is not None:
            signs = np.asarray(self.Xi, dtype=float)
            if signs.shape != (size, size):
                raise ValueError(f"Xi must be {size}x{size}, got {signs.shape}")
            if np.any(signs < 0) or np.any(signs > 1):
                raise ValueError("Xi entries must lie in [0, 1]")
            if not _is_symmetric(signs):
                raise ValueError("Xi must be symmetric")

        if self.balanced_x and self.m_x != 2:
            raise ValueError("balanced_x requires m_x = 2")
        if self.exact_y_count and not self.balanced_x:
            raise ValueError("exact_y_count is only defined for the balanced binary setting")
        return self

    @property
    def size(self) -> int:
        return self.m_x * self.m_y

    @property
    def is_censored(self) -> bool:
        return self.Xi is not None

    def prior_matrix(self) -> np.ndarray:
        return np.asarray(self.P, dtype=float)

    def prior_vector(self) -> np.ndarray:
        """p = vec(P), column-major so that p[j*m_x + i] = P[i][j]."""
        return self.prior_matrix().flatten(order="F")

    def q_matrix(self) -> np.ndarray:
        return np.asarray(self.Q, dtype=float)

    def xi_matrix(self) -> Optional[np.ndarray]:
        if self.Xi is None:
            return None
        return np.asarray(self.Xi, dtype=float)


class BinaryModelParams(BaseModel):
    """二値モデル: m_x = m_y = 2, x は均衡, y は周辺確率 ρ"""
    model_config = ConfigDict(frozen=True)

    q0: float = Field(gt=0)
    q1: float = Field(gt=0)
    q2: float = Field(gt=0)
    q3: float = Field(gt=0)
    # T = log((1-ξ)/ξ) > 0 が必要
    xi: Optional[float] = Field(default=None, gt=0.0, lt=0.5)
    rho: float = Field(gt=0.0, lt=1.0)

    @property
    def q(self) -> np.ndarray:
        return np.array([self.q0, self.q1, self.q2, self.q3], dtype=float)

    @property
    def is_censored(self) -> bool:
        return self.xi is not None

    def with_q0(self, q0: float) -> "BinaryModelParams":
        return self.model_copy(update={"q0": float(q0)})

    def with_rho(self, rho: float) -> "BinaryModelParams":
        return self.model_copy(update={"rho": float(rho)})


class LabeledGraph(BaseModel):
    """対称な隣接行列と真のラベル

    edges は {0,1} (sbm) または {-1,0,+1} (cbm)。構築後は読み取り専用。
    """
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    n: int = Field(ge=1)
    model: GraphKind = "sbm"
    edges: np.ndarray
    x: Optional[np.ndarray] = None
    y: Optional[np.ndarray] = None
    # min(1, Q log n / n) で切り詰めたペア数
    clipped_pairs: int = 0

    @field_validator("edges", mode="before")
    @classmethod
    def _as_edge_array(cls, value):
        return np.array(value, dtype=np.int8)

    @field_validator("x", "y", mode="before")
    @classmethod
    def _as_label_array(cls, value):
        if value is None:
            return None
        return np.array(value, dtype=np.int64).reshape(-1)

    @model_validator(mode="after")
    def _check_invariants(self) -> "LabeledGraph":
        if self.edges.shape != (self.n, self.n):
            raise ValueError(f"edges must be {self.n}x{self.n}, got {self.edges.shape}")
        if not np.array_equal(self.edges, self.edges.T):
            raise ValueError("edges must be symmetric")
        if np.any(np.diag(self.edges) != 0):
            raise ValueError("edges must have a zero diagonal")
        allowed = (0, 1) if self.model == "sbm" else (-1, 0, 1)
        if not np.all(np.isin(self.edges, allowed)):
            raise ValueError(f"{self.model} edges must take values in {allowed}")
        for name in ("x", "y"):
            labels = getattr(self, name)
            if labels is None:
                continue
            if labels.shape != (self.n,):
                raise ValueError(f"{name} must have length {self.n}")
            if np.any(labels < 0):
                raise ValueError(f"{name} labels must be nonnegative")
            labels.setflags(write=False)
        self.edges.setflags(write=False)
        return self

    @property
    def is_signed(self) -> bool:
        return self.model == "cbm"

    def adjacency(self) -> np.ndarray:
        """A as float (signed for cbm)."""
        return self.edges.astype(float)

    def support(self) -> np.ndarray:
        """A∘A: the unsigned adjacency."""
        return (self.edges != 0).astype(float)

    def degrees(self) -> np.ndarray:
        return (self.edges != 0).sum(axis=1)

    def x_signs(self) -> Optional[np.ndarray]:
        return None if self.x is None else to_signs(self.x)

    def y_signs(self) -> Optional[np.ndarray]:
        return None if self.y is None else to_signs(self.y)


def to_signs(labels: np.ndarray) -> np.ndarray:
    """Binary labels {0,1} -> {-1,+1} (label 1 is +1)."""
    return 2 * np.asarray(labels, dtype=np.int64) - 1


def from_signs(signs: np.ndarray) -> np.ndarray:
    return (np.asarray(signs, dtype=np.int64) > 0).astype(np.int64)


class ExperimentConfig(BaseModel):
    """モンテカルロ実験の設定

    q0_values を与えると q0 ごとに別の点として集計する（表の各行に相当）。
    """
    model_config = ConfigDict(frozen=True)

    name: str = "experiment"
    binary: Optional[BinaryModelParams] = None
    params: Optional[ModelParams] = None
    scenario: Scenario
    detector: Detector = "sdp"
    n_values: List[int] = Field(min_length=1)
    q0_values: Optional[List[float]] = None
    trials: int = Field(default=1000, ge=1)
    base_seed: int = Field(default=0, ge=0)
    # map 検出器で y を部分的に公開する割合 (1 - ε)
    revealed_fraction: Optional[float] = Field(default=None, ge=0.0, le=1.0)
    certify: bool = True
    # CSV の mean_ms を埋める（実行時間は実行ごとに変わる）
    record_timing: bool = False
    # map 検出器の尤度（binomial は y 既知のみ）
    likelihood: Literal["poisson", "binomial"] = "poisson"
    output: Optional[str] = None
    journal: Optional[str] = None
    threads: Optional[int] = Field(default=None, ge=1)

    @model_validator(mode="after")
    def _check_invariants(self) -> "ExperimentConfig":
        if (self.binary is None) == (self.params is None):
            raise ValueError("exactly one of 'binary' and 'params' must be given")
        censored = self.binary.is_censored if self.binary is not None else self.params.is_censored
        if self.scenario.startswith("cbm") != censored:
            raise ValueError(f"scenario {self.scenario} does not match the model's signedness")
        if self.detector in ("sdp", "ml_bruteforce"):
            if self.binary is None:
                raise ValueError(f"detector {self.detector} needs binary model parameters")
            odd = [n for n in self.n_values if n % 2 != 0 or n < 2]
            if odd:
                raise ValueError(f"detector {self.detector} needs even n >= 2, got {odd}")
        if self.q0_values is not None and self.binary is None:
            raise ValueError("q0_values requires binary model parameters")
        if any(n < 1 for n in self.n_values):
            raise ValueError("n values must be positive")
        return self
