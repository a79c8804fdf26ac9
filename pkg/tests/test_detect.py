"""
ジーニー補助の MAP 検出と誤り数の数え方のテストコード
"""
import math

import numpy as np
import pytest

from api.errors import DomainError
from define_model.models import BinaryModelParams, LabeledGraph, ModelParams
from services.detect import (
    align_and_score,
    degree_profile,
    map_cbm_known_y,
    map_cbm_unknown_y,
    map_detect,
    map_known_y,
    map_partial_y,
    map_unknown_y,
    micro_labels,
    reveal_mask,
)
from services.sampler import binary_to_general, sample_graph, stream


@pytest.fixture
def easy_sbm():
    """閾値の十分内側の SBM（n = 400）"""
    params = binary_to_general(BinaryModelParams(q0=40.0, q1=1.0, q2=3.0, q3=1.0, rho=0.5))
    return params, sample_graph(params, 400, seed=1)


@pytest.fixture
def easy_cbm():
    params = binary_to_general(BinaryModelParams(q0=40.0, q1=1.0, q2=3.0, q3=1.0, rho=0.5, xi=0.1))
    return params, sample_graph(params, 400, seed=2)


def _single_latent(rates) -> ModelParams:
    return ModelParams(m_x=2, m_y=1, P=[[0.5], [0.5]], Q=rates)


def _without_y(graph: LabeledGraph) -> LabeledGraph:
    return LabeledGraph(n=graph.n, model=graph.model, edges=graph.edges, x=graph.x)


def test_micro_labels(planted_sbm_graph):
    """micro-community 番号は y*m_x + x"""
    params = binary_to_general(BinaryModelParams(q0=9, q1=1, q2=3, q3=1, rho=0.5))
    assert micro_labels(planted_sbm_graph, params).tolist() == [3, 1, 3, 1, 2, 0, 2, 0]


def test_degree_profile(planted_sbm_graph):
    """ノード 0 の隣接は 1, 2, 3（番号 1, 3, 1）"""
    params = binary_to_general(BinaryModelParams(q0=9, q1=1, q2=3, q3=1, rho=0.5))
    labels = micro_labels(planted_sbm_graph, params)
    profile = degree_profile(planted_sbm_graph, 0, labels, size=4)
    assert profile.d.tolist() == [0, 2, 0, 1]
    assert profile.w.tolist() == [0, 0, 0, 0]
    with pytest.raises(DomainError):
        degree_profile(planted_sbm_graph, 8, labels, size=4)


def test_degree_profile_splits_signs():
    """正の辺は d、負の辺は w に数える"""
    edges = np.zeros((3, 3), dtype=np.int8)
    edges[0, 1] = edges[1, 0] = 1
    edges[0, 2] = edges[2, 0] = -1
    graph = LabeledGraph(n=3, model="cbm", edges=edges, x=[0, 1, 1], y=[0, 0, 1])
    profile = degree_profile(graph, 0, [0, 1, 3], size=4)
    assert profile.d.tolist() == [0, 1, 0, 0]
    assert profile.w.tolist() == [0, 0, 0, 1]


def test_map_known_y_recovers_easy_instance(easy_sbm):
    """閾値の十分内側では誤りなし"""
    params, graph = easy_sbm
    result = map_known_y(graph, params)
    assert result.errors == 0
    assert result.per_node_scores.shape == (400, 2)
    assert result.degenerate_nodes == 0


def test_map_unknown_y_recovers_easy_instance(easy_sbm):
    params, graph = easy_sbm
    assert map_unknown_y(graph, params).errors == 0


def test_binomial_likelihood_with_known_y(easy_sbm):
    """厳密な二項尤度も y 既知なら使える"""
    params, graph = easy_sbm
    assert map_known_y(graph, params, likelihood="binomial").errors == 0


def test_binomial_likelihood_needs_revealed_y(easy_sbm):
    """y を隠したノードがあると二項尤度は使えない"""
    params, graph = easy_sbm
    mask = np.zeros(graph.n, dtype=bool)
    with pytest.raises(DomainError):
        map_partial_y(graph, params, micro_labels(graph, params), mask, "binomial")


def test_map_censored_detectors(easy_cbm):
    """符号付きグラフでも y 既知・未知の両方で誤りなし"""
    params, graph = easy_cbm
    assert map_cbm_known_y(graph, params).errors == 0
    assert map_cbm_unknown_y(graph, params).errors == 0


def test_partial_reveal_interpolates(easy_sbm):
    """全公開なら y 既知、全非公開なら y 未知と同じ判定"""
    params, graph = easy_sbm
    labels = micro_labels(graph, params)
    everything = map_partial_y(graph, params, labels, np.ones(graph.n, dtype=bool))
    nothing = map_partial_y(graph, params, labels, np.zeros(graph.n, dtype=bool))
    np.testing.assert_array_equal(everything.x_hat, map_known_y(graph, params).x_hat)
    np.testing.assert_array_equal(nothing.x_hat, map_unknown_y(graph, params).x_hat)


def test_reveal_mask_size():
    """ちょうど round(fraction * n) 個を公開"""
    mask = reveal_mask(10, 0.3, stream(0, 1 << 40))
    assert mask.sum() == 3
    assert reveal_mask(10, 1.0, stream(0, 1)).all()


def test_map_detect_dispatch(easy_sbm, easy_cbm):
    """シナリオ名で検出器を選び、グラフの種類と合わなければエラー"""
    params, graph = easy_sbm
    np.testing.assert_array_equal(
        map_detect(graph, params, "sbm_known_y").x_hat, map_known_y(graph, params).x_hat
    )
    with pytest.raises(DomainError):
        map_detect(graph, params, "cbm_known_y")
    with pytest.raises(DomainError):
        map_detect(graph, params, "sbm_partial")
    cbm_params, cbm_graph = easy_cbm
    with pytest.raises(DomainError):
        map_known_y(cbm_graph, cbm_params)


def test_known_y_needs_y(planted_sbm_graph):
    """y のないグラフで y 既知の検出はできない"""
    params = _single_latent([[3.0, 1.0], [1.0, 3.0]])
    with pytest.raises(DomainError):
        map_known_y(_without_y(planted_sbm_graph), params)


def test_ties_choose_smallest_index(planted_sbm_graph):
    """仮説が区別できなければ全ノード同点で x = 0"""
    params = _single_latent([[2.0, 2.0], [2.0, 2.0]])
    result = map_unknown_y(_without_y(planted_sbm_graph), params)
    assert result.ties == 8
    assert result.x_hat.tolist() == [0] * 8
    assert result.errors == 4


def test_degenerate_nodes_are_counted(planted_sbm_graph):
    """平均 0 の class に辺があるノードはどの仮説も -inf"""
    params = _single_latent([[1.0, 0.0], [0.0, 1.0]])
    result = map_unknown_y(_without_y(planted_sbm_graph), params)
    assert result.degenerate_nodes == 2
    assert np.isneginf(result.per_node_scores[3]).all()


def test_align_and_score_global_sign():
    """全体の符号反転は誤りに数えない（±1 と {0,1} の両方）"""
    truth = np.array([1, 1, -1, -1])
    assert align_and_score(-truth, truth) == 0
    assert align_and_score(np.array([1, -1, -1, -1]), truth) == 1
    assert align_and_score(np.array([0, 0, 1, 1]), np.array([1, 1, 0, 0])) == 0
    with pytest.raises(DomainError):
        align_and_score(truth[:3], truth)


def test_align_and_score_label_permutation():
    """ラベルの置換全体で最小の誤り数"""
    truth = np.array([0, 0, 1, 1, 2, 2])
    assert align_and_score(np.array([2, 2, 0, 0, 1, 1]), truth, "label_permutation") == 0
    assert align_and_score(np.array([2, 2, 0, 1, 1, 1]), truth, "label_permutation") == 1


def test_genie_errors_are_not_realigned(easy_sbm):
    """x を入れ替えたジーニーのラベルでは全ノードが誤りになる（置換で揃えない）"""
    # 前提データ作成
    params, graph = easy_sbm
    x = np.asarray(graph.x)
    y = np.asarray(graph.y)
    flipped = y * params.m_x + (1 - x)

    result = map_known_y(graph, params, genie_labels=flipped)

    # 確認
    np.testing.assert_array_equal(result.x_hat, 1 - x)
    assert result.errors == graph.n


def test_single_auxiliary_label_reduces_to_known_y():
    """m_y = 1 では y 未知の検出が y 既知と一致する"""
    # 前提データ作成
    params = _single_latent([[6.0, 1.0], [1.0, 6.0]])
    graph = sample_graph(params, 200, seed=11)

    known = map_known_y(graph, params)
    unknown = map_unknown_y(graph, params)

    # 確認
    np.testing.assert_array_equal(known.x_hat, unknown.x_hat)
    np.testing.assert_allclose(known.per_node_scores, unknown.per_node_scores)
    assert known.errors == unknown.errors


def test_extra_edge_to_own_class_raises_its_score():
    """自分の class への辺を 1 本足すと、正しい仮説の差が log(λ_同 / λ_異) だけ増える"""
    # 前提データ作成
    params = _single_latent([[6.0, 1.0], [1.0, 6.0]])
    graph = sample_graph(params, 200, seed=12)
    x = np.asarray(graph.x)
    v = 0
    u = next(u for u in range(1, graph.n) if x[u] == x[v] and graph.edges[v, u] == 0)
    edges = graph.edges.copy()
    edges[v, u] = edges[u, v] = 1
    denser = LabeledGraph(n=graph.n, model="sbm", edges=edges, x=graph.x, y=graph.y)

    before = map_known_y(graph, params).per_node_scores[v]
    after = map_known_y(denser, params).per_node_scores[v]

    # 確認
    own, other = x[v], 1 - x[v]
    assert after[own] - after[other] == pytest.approx(before[own] - before[other] + math.log(6.0))
    assert after[own] > before[own]


def test_deterministic_edges_give_no_errors():
    """同じ class 内は確率 1、異なる class 間は確率 0 の辺なら誤りなし"""
    n = 60
    dense = n / math.log(n)
    params = _single_latent([[dense, 0.0], [0.0, dense]])
    graph = sample_graph(params, n, seed=13)

    for detector in (map_known_y, map_unknown_y):
        result = detector(graph, params)
        assert result.errors == 0
        assert result.degenerate_nodes == 0


def test_uninformative_signs_are_random_guessing():
    """ξ = 0.5 で Q が定数なら判定は事前確率の最大（ここでは 0.5）の当て推量"""
    # 前提データ作成
    n = 400
    params = ModelParams(
        m_x=2, m_y=1, P=[[0.5], [0.5]],
        Q=[[5.0, 5.0], [5.0, 5.0]], Xi=[[0.5, 0.5], [0.5, 0.5]], balanced_x=True,
    )
    graph = sample_graph(params, n, seed=14)

    # 確認
    for detector in (map_cbm_known_y, map_cbm_unknown_y):
        rate = detector(graph, params).errors / n
        assert abs(rate - 0.5) <= 3 * math.sqrt(0.25 / n)


def test_sign_flip_symmetry():
    """辺の符号と ξ ↔ 1 − ξ を同時に入れ替えても判定は同じ"""
    # 前提データ作成
    params = binary_to_general(BinaryModelParams(q0=6.0, q1=1.0, q2=3.0, q3=1.0, rho=0.5, xi=0.1))
    graph = sample_graph(params, 300, seed=15)
    mirrored_params = params.model_copy(update={"Xi": (1.0 - params.xi_matrix()).tolist()})
    mirrored = LabeledGraph(n=graph.n, model="cbm", edges=-graph.edges, x=graph.x, y=graph.y)

    # 確認
    for detector in (map_cbm_known_y, map_cbm_unknown_y):
        original = detector(graph, params)
        swapped = detector(mirrored, mirrored_params)
        np.testing.assert_array_equal(original.x_hat, swapped.x_hat)
        np.testing.assert_allclose(original.per_node_scores, swapped.per_node_scores)


def _detection_error_rate(binary: BinaryModelParams, scenario: str, n: int, seeds) -> float:
    params = binary_to_general(binary)
    errors = sum(map_detect(sample_graph(params, n, seed), params, scenario).errors for seed in seeds)
    return errors / (n * len(seeds))


@pytest.mark.slow
@pytest.mark.parametrize("scenario, inside, outside, xi", [
    ("sbm_known_y", 9.0, 7.0, None),
    ("sbm_unknown_y", 10.0, 8.0, None),
    ("cbm_known_y", 6.0, 4.0, 0.1),
    ("cbm_unknown_y", 7.0, 5.0, 0.1),
])
def test_error_rate_gap_across_region(scenario, inside, outside, xi):
    """q2 = 3, q1 = q3 = 1, rho = 0.5, n = 500: 領域の内側は外側より誤りが少ない"""
    seeds = range(40)
    inside_binary = BinaryModelParams(q0=inside, q1=1.0, q2=3.0, q3=1.0, rho=0.5, xi=xi)
    outside_binary = inside_binary.with_q0(outside)

    inside_rate = _detection_error_rate(inside_binary, scenario, 500, seeds)
    outside_rate = _detection_error_rate(outside_binary, scenario, 500, seeds)

    assert inside_rate < outside_rate
    if scenario in ("sbm_known_y", "sbm_unknown_y", "cbm_known_y"):
        assert inside_rate <= 1e-3
