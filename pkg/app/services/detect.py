"""
次数プロファイルによる MAP 検出（ジーニー補助）

ノード v 以外のマイクロコミュニティを既知（genie_labels）として、
v の x を仮説検定で推定する。各マイクロコミュニティへの辺数は Poisson で近似し、
平均は λ^{(i',j')}_{i,j} = P[i'][j'] Q[j'm_x+i'][j m_x+i] log n。
"""
from typing import Literal, Optional, Tuple
import logging
import math

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.special import logsumexp, xlogy

from api.errors import DomainError
from api.response_model import DegreeProfile, DetectionResult
from define_model.models import LabeledGraph, ModelParams, Scenario, SCENARIOS

logger = logging.getLogger(__name__)

Likelihood = Literal["poisson", "binomial"]
Symmetry = Literal["global_sign", "label_permutation"]


def micro_labels(graph: LabeledGraph, params: ModelParams) -> np.ndarray:
    """真のラベルから micro-community 番号 y*m_x + x を作る"""
    if graph.x is None:
        raise DomainError("graph has no ground-truth x")
    y = graph.y if graph.y is not None else np.zeros(graph.n, dtype=np.int64)
    return np.asarray(y) * params.m_x + np.asarray(graph.x)


def _check_labels(labels, n: int, size: int) -> np.ndarray:
    labels = np.asarray(labels, dtype=np.int64).reshape(-1)
    if labels.shape != (n,):
        raise DomainError(f"labels must have length {n}, got {labels.size}")
    if np.any(labels < 0) or np.any(labels >= size):
        raise DomainError(f"labels must lie in [0, {size})")
    return labels


def degree_profile(graph: LabeledGraph, v: int, labels, size: Optional[int] = None) -> DegreeProfile:
    """
    ノード v の次数プロファイル

    Args:
        graph: グラフ
        v: 対象ノード
        labels: 全ノードの micro-community 番号（v 自身の値は使わない）
        size: micro-community の数（省略時は labels の最大値 + 1）

    Returns:
        DegreeProfile: d は正の辺（sbm では全ての辺）、w は負の辺の本数
    """
    if not 0 <= v < graph.n:
        raise DomainError(f"node {v} out of range for n={graph.n}")
    labels = np.asarray(labels, dtype=np.int64).reshape(-1)
    size = int(labels.max()) + 1 if size is None else size
    labels = _check_labels(labels, graph.n, size)
    row = graph.edges[v]
    d = np.bincount(labels[row > 0], minlength=size)
    w = np.bincount(labels[row < 0], minlength=size)
    return DegreeProfile(d=d, w=w)


def degree_profiles(graph: LabeledGraph, labels: np.ndarray, size: int) -> Tuple[np.ndarray, np.ndarray]:
    """全ノード分の (D, W)、形状 (n, size)"""
    onehot = np.eye(size)[labels]
    positive = (graph.edges > 0).astype(float)
    negative = (graph.edges < 0).astype(float)
    return positive @ onehot, negative @ onehot


def _rates(params: ModelParams, scale: float) -> Tuple[np.ndarray, np.ndarray]:
    """(正, 負) の辺率行列 [c, h]。無検閲モデルでは負は 0"""
    rates = params.q_matrix() * scale
    if params.is_censored:
        signs = params.xi_matrix()
        return signs * rates, (1.0 - signs) * rates
    return rates, np.zeros_like(rates)


def _poisson_scores(counts: np.ndarray, means: np.ndarray) -> np.ndarray:
    # Σ_c [d_c log λ_c − λ_c]、d! は仮説に依らないので省く
    return xlogy(counts[:, :, None], means[None, :, :]).sum(axis=1) - means.sum(axis=0)[None, :]


def _log_likelihoods(
    graph: LabeledGraph,
    params: ModelParams,
    labels: np.ndarray,
    likelihood: Likelihood,
    aggregate: bool,
) -> np.ndarray:
    """
    各ノード・各仮説 (micro-community h) の対数尤度、形状 (n, size)

    aggregate=True では y を周辺化した集計カウント Σ_j d^{(l,j)} を使う。
    """
    n, size = graph.n, params.size
    D, W = degree_profiles(graph, labels, size)
    log_n = math.log(n) if n > 1 else 0.0

    if likelihood == "binomial":
        if aggregate:
            raise DomainError("the exact binomial likelihood needs y revealed for every node")
        prob = np.minimum(params.q_matrix() * (log_n / n if n > 1 else 0.0), 1.0)
        signs = params.xi_matrix() if params.is_censored else np.ones_like(prob)
        pos, neg, none = signs * prob, (1.0 - signs) * prob, 1.0 - prob
        others = np.bincount(labels, minlength=size)[None, :] - np.eye(size)[labels]
        rest = others - D - W
        return (
            (xlogy(D[:, :, None], pos[None]).sum(axis=1))
            + (xlogy(W[:, :, None], neg[None]).sum(axis=1))
            + (xlogy(rest[:, :, None], none[None]).sum(axis=1))
        )

    prior = params.prior_vector()[:, None]
    pos, neg = _rates(params, log_n)
    pos, neg = prior * pos, prior * neg
    if aggregate:
        def collapse_counts(c):
            return c.reshape(n, params.m_y, params.m_x).sum(axis=1)

        def collapse_means(m):
            return m.reshape(params.m_y, params.m_x, size).sum(axis=0)

        D, W = collapse_counts(D), collapse_counts(W)
        pos, neg = collapse_means(pos), collapse_means(neg)

    scores = _poisson_scores(D, pos)
    if params.is_censored:
        scores = scores + _poisson_scores(W, neg)
    return scores


def _decide(scores: np.ndarray) -> Tuple[np.ndarray, int, int]:
    """行ごとの argmax（同点は最小インデックス）と同点数・全 −inf 数"""
    best = scores.max(axis=1)
    x_hat = np.argmax(scores, axis=1)
    degenerate = np.isneginf(best)
    ties = ((scores == best[:, None]).sum(axis=1) > 1) & ~degenerate
    return x_hat, int(ties.sum()), int(degenerate.sum())


def _genie(graph: LabeledGraph, params: ModelParams, genie_labels) -> np.ndarray:
    if genie_labels is None:
        return micro_labels(graph, params)
    return _check_labels(genie_labels, graph.n, params.size)


def _check_kind(graph: LabeledGraph, params: ModelParams, censored: bool) -> None:
    if params.is_censored != censored or graph.is_signed != censored:
        kind = "a signed graph with a censored model" if censored else "an unsigned graph with a model without Xi"
        raise DomainError(f"this detector needs {kind}")


def _map_detect(
    graph: LabeledGraph,
    params: ModelParams,
    genie_labels,
    revealed: np.ndarray,
    likelihood: Likelihood,
) -> DetectionResult:
    labels = _genie(graph, params, genie_labels)
    n, m_x, m_y = graph.n, params.m_x, params.m_y
    with np.errstate(divide="ignore"):
        log_prior = np.log(params.prior_vector())

    scores = np.full((n, m_x), -np.inf)
    if revealed.any():
        if graph.y is None:
            raise DomainError("known-y detection needs the graph's y labels")
        full = _log_likelihoods(graph, params, labels, likelihood, aggregate=False) + log_prior[None, :]
        y = np.asarray(graph.y)
        cols = y[:, None] * m_x + np.arange(m_x)[None, :]
        known = np.take_along_axis(full, cols, axis=1)
        scores[revealed] = known[revealed]

    hidden = ~revealed
    if hidden.any():
        collapsed = _log_likelihoods(graph, params, labels, likelihood, aggregate=True) + log_prior[None, :]
        # (n, j, i) で j について log-sum-exp
        per_y = collapsed.reshape(n, m_y, m_x)
        with np.errstate(divide="ignore"):
            marginal = logsumexp(per_y, axis=1)
        scores[hidden] = marginal[hidden]

    x_hat, ties, degenerate = _decide(scores)
    if ties or degenerate:
        logger.warning(f"MAP detection: {ties} tied nodes, {degenerate} nodes with no feasible hypothesis")

    # 仮説番号はジーニーのラベルと同じ向き（整列しない）
    errors = None
    if graph.x is not None:
        errors = int(np.count_nonzero(x_hat != np.asarray(graph.x)))
    return DetectionResult(
        x_hat=x_hat,
        per_node_scores=scores,
        errors=errors,
        ties=ties,
        degenerate_nodes=degenerate,
    )


def map_known_y(graph: LabeledGraph, params: ModelParams, genie_labels=None,
                likelihood: Likelihood = "poisson") -> DetectionResult:
    """
    y 既知の MAP: argmax_i P(d | H_i, y_v) P_{i, y_v}

    Args:
        graph: 無符号グラフ（真の y を持つこと）
        params: Xi を持たないモデル
        genie_labels: 他ノードの micro-community 番号（省略時は真のラベル）
        likelihood: "poisson"（既定）または厳密な "binomial"
    """
    _check_kind(graph, params, False)
    return _map_detect(graph, params, genie_labels, np.ones(graph.n, dtype=bool), likelihood)


def map_unknown_y(graph: LabeledGraph, params: ModelParams, genie_labels=None) -> DetectionResult:
    """y 未知の MAP: argmax_i Σ_{y_v} Π_l P(Σ_j d^{(l,j)} | H_i, y_v) P_{i,y_v}"""
    _check_kind(graph, params, False)
    return _map_detect(graph, params, genie_labels, np.zeros(graph.n, dtype=bool), "poisson")


def map_cbm_known_y(graph: LabeledGraph, params: ModelParams, genie_labels=None,
                    likelihood: Likelihood = "poisson") -> DetectionResult:
    _check_kind(graph, params, True)
    return _map_detect(graph, params, genie_labels, np.ones(graph.n, dtype=bool), likelihood)


def map_cbm_unknown_y(graph: LabeledGraph, params: ModelParams, genie_labels=None) -> DetectionResult:
    _check_kind(graph, params, True)
    return _map_detect(graph, params, genie_labels, np.zeros(graph.n, dtype=bool), "poisson")


def map_partial_y(graph: LabeledGraph, params: ModelParams, genie_labels, revealed_mask,
                  likelihood: Likelihood = "poisson") -> DetectionResult:
    """
    y を一部公開した MAP

    revealed_mask が True のノードは y 既知の規則、それ以外は y 未知の規則で判定する。
    """
    mask = np.asarray(revealed_mask, dtype=bool).reshape(-1)
    if mask.shape != (graph.n,):
        raise DomainError(f"revealed_mask must have length {graph.n}")
    _check_kind(graph, params, params.is_censored)
    return _map_detect(graph, params, genie_labels, mask, likelihood)


def reveal_mask(n: int, revealed_fraction: float, rng: np.random.Generator) -> np.ndarray:
    """ちょうど round((1-ε) n) 個のノードの y を公開するマスク"""
    mask = np.zeros(n, dtype=bool)
    mask[rng.permutation(n)[: int(round(revealed_fraction * n))]] = True
    return mask


def map_detect(graph: LabeledGraph, params: ModelParams, scenario: Scenario,
               genie_labels=None, likelihood: Likelihood = "poisson") -> DetectionResult:
    """シナリオ名で MAP 検出器を選ぶ"""
    if scenario not in SCENARIOS:
        raise DomainError(f"unknown scenario {scenario}")
    dispatch = {
        "sbm_known_y": lambda: map_known_y(graph, params, genie_labels, likelihood),
        "sbm_unknown_y": lambda: map_unknown_y(graph, params, genie_labels),
        "cbm_known_y": lambda: map_cbm_known_y(graph, params, genie_labels, likelihood),
        "cbm_unknown_y": lambda: map_cbm_unknown_y(graph, params, genie_labels),
    }
    return dispatch[scenario]()


def align_and_score(x_hat, x_true, symmetry: Symmetry = "global_sign") -> int:
    """
    対称性で揃えた後の誤り数

    global_sign: x̂ と反転 x̂ の Hamming 距離の小さい方（±1 または {0,1} のラベル）
    label_permutation: ラベルの置換全体での最小 Hamming 距離（割当問題で解く）
    """
    x_hat = np.asarray(x_hat, dtype=np.int64).reshape(-1)
    x_true = np.asarray(x_true, dtype=np.int64).reshape(-1)
    if x_hat.shape != x_true.shape:
        raise DomainError(f"label vectors differ in length: {x_hat.size} vs {x_true.size}")

    if symmetry == "global_sign":
        signed = np.any(x_hat < 0) or np.any(x_true < 0)
        if not signed and (np.any(x_hat > 1) or np.any(x_true > 1)):
            raise DomainError("global_sign alignment needs binary labels")
        flipped = -x_hat if signed else 1 - x_hat
        return int(min(np.count_nonzero(x_hat != x_true), np.count_nonzero(flipped != x_true)))

    if symmetry != "label_permutation":
        raise DomainError(f"unknown symmetry {symmetry}")
    values_hat, inv_hat = np.unique(x_hat, return_inverse=True)
    values_true, inv_true = np.unique(x_true, return_inverse=True)
    confusion = np.zeros((values_hat.size, values_true.size), dtype=np.int64)
    np.add.at(confusion, (inv_hat, inv_true), 1)
    rows, cols = linear_sum_assignment(confusion, maximize=True)
    return int(x_true.size - confusion[rows, cols].sum())
