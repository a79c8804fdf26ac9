"""
テスト共通のフィクスチャ
"""
import numpy as np
import pytest

from define_model.models import BinaryModelParams, LabeledGraph
from define_model.settings import get_settings
from services import preset_loader


@pytest.fixture
def binary_sbm_params() -> BinaryModelParams:
    """表 I の SBM 列（y 既知、閾値の内側）"""
    return BinaryModelParams(q0=9.0, q1=1.0, q2=3.0, q3=1.0, rho=0.5)


@pytest.fixture
def binary_cbm_params() -> BinaryModelParams:
    """表 I の CBM 列（y 既知、閾値の内側）"""
    return BinaryModelParams(q0=6.0, q1=1.0, q2=3.0, q3=1.0, rho=0.5, xi=0.1)


@pytest.fixture
def planted_sbm_graph() -> LabeledGraph:
    """2 つの完全グラフ（各 4 ノード）を 1 本の辺でつないだグラフ"""
    n = 8
    x = np.array([1, 1, 1, 1, 0, 0, 0, 0])
    y = np.array([1, 0, 1, 0, 1, 0, 1, 0])
    edges = np.zeros((n, n), dtype=np.int8)
    for block in (range(0, 4), range(4, 8)):
        for u in block:
            for v in block:
                if u != v:
                    edges[u, v] = 1
    edges[3, 4] = edges[4, 3] = 1
    return LabeledGraph(n=n, model="sbm", edges=edges, x=x, y=y)


@pytest.fixture(autouse=True)
def _isolated_environment(monkeypatch):
    """RECOVERY_THREADS とシングルトンの状態をテストごとに初期化"""
    monkeypatch.delenv("RECOVERY_THREADS", raising=False)
    get_settings.cache_clear()
    monkeypatch.setattr(preset_loader, "_preset_loader_instance", None)
    yield
    get_settings.cache_clear()
