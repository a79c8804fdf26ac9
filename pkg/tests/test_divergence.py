"""
Chernoff-Hellinger ダイバージェンスと Poisson 和の上下界のテストコード
"""
import math

import numpy as np
import pytest

from api.errors import DomainError
from define_model.models import BinaryModelParams
from services.divergence import (
    ch_divergence,
    ch_objective,
    golden_section_max,
    poisson_min_sum,
    poisson_min_sum_bounds,
    poisson_min_sum_pair,
    poisson_min_sum_pair_bounds,
    rate_vectors,
)
from services.sampler import binary_to_general


def _closed_form_1d(a: float, b: float):
    """1 次元の最大点 t* = log((a-b) / (b log(a/b))) / log(a/b)"""
    ratio = math.log(a / b)
    t = math.log((a - b) / (b * ratio)) / ratio
    value = t * a + (1 - t) * b - a ** t * b ** (1 - t)
    return t, value


def _mixed_means(a, b, t):
    return np.power(a, t) * np.power(b, 1 - t)


def test_golden_section_finds_parabola_peak():
    """f(t) = -(t - 0.3)^2 の最大点"""
    t, iterations = golden_section_max(lambda t: -(t - 0.3) ** 2, 0.0, 1.0, tol=1e-10)
    assert t == pytest.approx(0.3, abs=1e-6)
    assert iterations > 0


def test_symmetric_pair_has_unit_divergence():
    """a = [1, 4], b = [4, 1] では t* = 1/2、Div = 1"""
    result = ch_divergence([1, 4], [4, 1])
    assert result.value == pytest.approx(1.0, abs=1e-10)
    assert result.t_star == pytest.approx(0.5, abs=1e-6)


@pytest.mark.parametrize("a, b", [(9.0, 1.0), (1.0, 4.0), (0.5, 2.0), (3.0, 2.9)])
def test_one_dimensional_closed_form(a, b):
    """1 次元では t* と Div に閉じた式がある"""
    t_expected, value_expected = _closed_form_1d(a, b)
    result = ch_divergence([a], [b])
    assert result.t_star == pytest.approx(t_expected, abs=1e-5)
    assert result.value == pytest.approx(value_expected, rel=1e-9, abs=1e-14)


def test_identical_vectors():
    """a = b なら Div = 0、t* = 1/2"""
    result = ch_divergence([2.0, 3.0], [2.0, 3.0])
    assert result.value == 0.0
    assert result.t_star == 0.5
    assert result.iterations == 0


def test_swapping_arguments_mirrors_t():
    """Div(a, b) = Div(b, a)、t* は 1 - t* になる"""
    forward = ch_divergence([2.0, 0.5, 7.0], [1.0, 3.0, 2.0])
    backward = ch_divergence([1.0, 3.0, 2.0], [2.0, 0.5, 7.0])
    assert forward.value == pytest.approx(backward.value, rel=1e-10)
    assert forward.t_star == pytest.approx(1 - backward.t_star, abs=1e-5)


def test_zero_coordinate_convention():
    """a_i = 0 の座標は t > 0 で (1 - t) b_i を与える（0^0 = 1）"""
    assert ch_objective(np.array([0.0]), np.array([1.0]), 0.0) == 0.0
    result = ch_divergence([0.0, 1.0], [1.0, 1.0])
    assert result.value == pytest.approx(1.0, abs=1e-6)


def test_divergence_is_nonnegative():
    """ランダムなベクトルで Div >= 0 かつ g(t*) >= g(t)"""
    rng = np.random.default_rng(0)
    for _ in range(20):
        a, b = rng.uniform(0, 5, size=(2, 4))
        result = ch_divergence(a, b)
        assert result.value >= 0.0
        for t in np.linspace(0, 1, 11):
            assert result.value >= ch_objective(a, b, t) - 1e-9


def test_divergence_scales_linearly():
    """Div(c a, c b) = c Div(a, b)、最大点は変わらない"""
    rng = np.random.default_rng(1)
    for _ in range(10):
        a, b = rng.uniform(0.1, 5, size=(2, 3))
        base = ch_divergence(a, b)
        for c in (0.5, 3.0, 10.0):
            scaled = ch_divergence(c * a, c * b)
            assert scaled.value == pytest.approx(c * base.value, rel=1e-6, abs=1e-12)
            assert scaled.t_star == pytest.approx(base.t_star, abs=1e-5)


def test_objective_is_concave_and_vanishes_at_ends():
    """g(0) = g(1) = 0、g は t について凹"""
    rng = np.random.default_rng(2)
    for _ in range(20):
        a, b = rng.uniform(0.1, 5, size=(2, 4))
        assert ch_objective(a, b, 0.0) == pytest.approx(0.0, abs=1e-12)
        assert ch_objective(a, b, 1.0) == pytest.approx(0.0, abs=1e-12)
        s, t = np.sort(rng.uniform(0, 1, size=2))
        middle = ch_objective(a, b, (s + t) / 2)
        assert middle >= (ch_objective(a, b, s) + ch_objective(a, b, t)) / 2 - 1e-12


@pytest.mark.parametrize("a, b", [([1.0, -1.0], [1.0, 1.0]), ([1.0], [1.0, 2.0]), ([math.nan], [1.0])])
def test_invalid_inputs(a, b):
    """負の要素、長さ不一致、非有限値は DomainError"""
    with pytest.raises(DomainError):
        ch_divergence(a, b)


def test_rate_vectors_for_binary_model():
    """q_{0,0} = diag(p) Q e_0、q̃ は y について和を取る"""
    params = binary_to_general(BinaryModelParams(q0=9, q1=1, q2=3, q3=1, rho=0.3))
    rv = rate_vectors(params, 0, 0)
    np.testing.assert_allclose(rv.q_vec, [0.35 * 9, 0.35 * 1, 0.15 * 3, 0.15 * 1])
    np.testing.assert_allclose(rv.q_tilde, [0.35 * 9 + 0.15 * 3, 0.35 * 1 + 0.15 * 1])
    assert rv.g_vec.size == 0


def test_rate_vectors_censored_split():
    """g + h = q"""
    params = binary_to_general(BinaryModelParams(q0=6, q1=1, q2=3, q3=1, rho=0.5, xi=0.1))
    rv = rate_vectors(params, 1, 0)
    np.testing.assert_allclose(rv.g_vec + rv.h_vec, rv.q_vec)
    np.testing.assert_allclose(rv.g_tilde + rv.h_tilde, rv.q_tilde)


def test_poisson_min_sum_of_equal_means():
    """同じ平均なら I = min(p, p_hat)"""
    assert poisson_min_sum([2.0, 1.5], [2.0, 1.5], p=0.3, p_hat=0.8) == pytest.approx(0.3, abs=1e-10)


def test_poisson_min_sum_rejects_short_truncation():
    """裾の質量が残る打ち切り、次元超過は DomainError"""
    with pytest.raises(DomainError):
        poisson_min_sum([5.0], [1.0], truncation=[3])
    with pytest.raises(DomainError):
        poisson_min_sum([1.0] * 5, [2.0] * 5)


def _draw_instance(rng, dim: int):
    """下界の Stirling 評価が成り立つ、全座標で a^t* b^(1-t*) >= 1 の例だけを使う"""
    for _ in range(10_000):
        a, b = rng.uniform(0.1, 5.0, size=(2, dim))
        t = ch_divergence(a, b).t_star
        if np.all(_mixed_means(a, b, t) >= 1.0):
            return a, b
    raise AssertionError("no admissible instance found")


def test_poisson_min_sum_sandwich():
    """50 例で lower <= I(a, b) <= upper"""
    rng = np.random.default_rng(2024)
    for _ in range(50):
        dim = int(rng.integers(1, 4))
        a, b = _draw_instance(rng, dim)
        p, p_hat = rng.uniform(0.2, 1.0, size=2)
        exact = poisson_min_sum(a, b, p, p_hat)
        lower, upper = poisson_min_sum_bounds(a, b, p, p_hat)
        assert lower <= exact + 1e-12
        assert exact <= upper + 1e-12


def test_poisson_min_sum_pair_sandwich():
    """符号付きの組 (d, w) でも lower <= I <= upper（各部分 2 次元まで）"""
    rng = np.random.default_rng(7)
    for _ in range(50):
        m = int(rng.integers(1, 3))
        left, right = _draw_instance(rng, 2 * m)
        a, a_hat = left[:m], left[m:]
        b, b_hat = right[:m], right[m:]
        p, p_hat = rng.uniform(0.2, 1.0, size=2)
        exact = poisson_min_sum_pair(a, b, a_hat, b_hat, p, p_hat)
        lower, upper = poisson_min_sum_pair_bounds(a, b, a_hat, b_hat, p, p_hat)
        assert lower <= exact + 1e-12
        assert exact <= upper + 1e-12


def test_pair_bound_matches_concatenated_bound():
    """組の上下界は連結ベクトルの上下界と一致"""
    a, a_hat, b, b_hat = [2.0], [1.5], [4.0], [0.5]
    pair = poisson_min_sum_pair_bounds(a, b, a_hat, b_hat)
    flat = poisson_min_sum_bounds(a + a_hat, b + b_hat)
    assert pair == pytest.approx(flat, rel=1e-12)
