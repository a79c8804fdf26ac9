"""
総当たり最尤推定のテストコード
"""
import numpy as np
import pytest

from api.errors import DomainError
from define_model.models import BinaryModelParams, LabeledGraph
from services.ml import balanced_vectors, log_likelihood, ml_bruteforce
from services.sampler import binary_to_general, sample_graph
from services.sdp import build_objective


def test_balanced_vectors():
    """x_0 = +1 に固定した均衡ベクトル C(n-1, n/2-1) 本"""
    vectors = [v.tolist() for v in balanced_vectors(4)]
    assert vectors == [[1, 1, -1, -1], [1, -1, 1, -1], [1, -1, -1, 1]]
    assert sum(1 for _ in balanced_vectors(10)) == 126
    with pytest.raises(DomainError):
        list(balanced_vectors(5))


def test_log_likelihood_unknown_y(planted_sbm_graph, binary_sbm_params):
    """sbm_unknown_y では x^T A x（辺 12 本が同じ側、1 本が反対側）"""
    x = planted_sbm_graph.x_signs()
    assert log_likelihood(planted_sbm_graph, binary_sbm_params, x, "sbm_unknown_y") == pytest.approx(22.0)


def test_log_likelihood_known_y_scale(planted_sbm_graph, binary_sbm_params):
    """sbm_known_y は x^T C x / 8"""
    x = planted_sbm_graph.x_signs()
    C = build_objective(planted_sbm_graph, binary_sbm_params, "sbm_known_y").C
    value = log_likelihood(planted_sbm_graph, binary_sbm_params, x, "sbm_known_y")
    assert value == pytest.approx(float(x @ C @ x) / 8)
    with pytest.raises(DomainError):
        log_likelihood(planted_sbm_graph, binary_sbm_params, x[:4], "sbm_known_y")


def test_ml_bruteforce_finds_planted_partition(planted_sbm_graph, binary_sbm_params):
    """2 つの完全グラフの分割が一意な最大"""
    result = ml_bruteforce(planted_sbm_graph, "sbm_unknown_y", binary_sbm_params)
    assert result.x_hat.tolist() == [1, 1, 1, 1, -1, -1, -1, -1]
    assert result.errors == 0
    assert result.ties == 0
    assert result.objective == pytest.approx(22.0)


def test_ml_bruteforce_reports_ties(binary_sbm_params):
    """辺のないグラフでは全ての均衡ベクトルが同点"""
    graph = LabeledGraph(n=4, edges=np.zeros((4, 4), dtype=np.int8), x=[1, 1, 0, 0], y=[0, 1, 0, 1])
    result = ml_bruteforce(graph, "sbm_unknown_y", binary_sbm_params)
    assert result.ties == 2
    assert result.x_hat.tolist() == [1, 1, -1, -1]


def test_ml_bruteforce_size_limits(binary_sbm_params):
    """n > 16 と奇数の n はエラー"""
    big = LabeledGraph(n=18, edges=np.zeros((18, 18), dtype=np.int8))
    with pytest.raises(DomainError):
        ml_bruteforce(big, "sbm_unknown_y", binary_sbm_params)
    odd = LabeledGraph(n=5, edges=np.zeros((5, 5), dtype=np.int8))
    with pytest.raises(DomainError):
        ml_bruteforce(odd, "sbm_unknown_y", binary_sbm_params)


@pytest.mark.parametrize("scenario", ["sbm_known_y", "sbm_unknown_y"])
def test_ml_bruteforce_commutes_with_node_order(scenario):
    """ノードの並べ替えは最大値を変えず、解も同じように並べ替わる（全体の符号を除く）"""
    # 前提データ作成
    binary = BinaryModelParams(q0=12.0, q1=0.5, q2=6.0, q3=0.5, rho=0.5)
    graph = sample_graph(binary_to_general(binary), 12, 31)
    perm = np.random.default_rng(32).permutation(graph.n)
    shuffled = LabeledGraph(
        n=graph.n,
        model="sbm",
        edges=graph.edges[np.ix_(perm, perm)],
        x=np.asarray(graph.x)[perm],
        y=np.asarray(graph.y)[perm],
    )

    original = ml_bruteforce(graph, scenario, binary)
    permuted = ml_bruteforce(shuffled, scenario, binary)

    # 確認
    assert permuted.objective == pytest.approx(original.objective)
    assert permuted.ties == original.ties
    assert permuted.errors == original.errors or original.ties > 0
    if original.ties == 0:
        expected = original.x_hat[perm]
        assert permuted.x_hat.tolist() in (expected.tolist(), (-expected).tolist())
