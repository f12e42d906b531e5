"""Channel mixing, polynomial adapter, gates, order combining and the variants."""

import numpy as np
import pytest

from library.errors import DimensionError
from library.numerics import Tensor, finite_diff_check, ops
from library.polyops import (
    LOW_ORDERS,
    VARIANTS,
    FullProjectionRef,
    PolyParams,
    expand_coefficients,
    full_projection_reference,
    gate_combine,
    get_transform,
    lcm_apply,
    mopa_apply,
    order_combine,
    poly_state_transform,
)


def _state(shape, seed=0):
    return Tensor(np.random.default_rng(seed).normal(size=shape))


class TestLcm:
    def test_identity(self):
        h = _state((2, 3, 4))
        np.testing.assert_array_equal(lcm_apply(h, Tensor(np.eye(3))).data, h.data)

    def test_swap(self):
        h = _state((2, 5))
        out = lcm_apply(h, Tensor([[0.0, 1.0], [1.0, 0.0]]))
        np.testing.assert_array_equal(out.data, h.data[::-1])

    def test_hand_arithmetic(self):
        u, v = np.array([1.0, 2.0, 3.0]), np.array([10.0, 20.0, 30.0])
        out = lcm_apply(Tensor(np.stack([u, v])), Tensor([[1.0, 1.0], [0.0, 1.0]]))
        np.testing.assert_allclose(out.data, np.stack([u + v, v]))

    def test_single_channel_scales(self):
        h = _state((4, 1, 5))
        out = lcm_apply(h, Tensor([[2.5]]))
        np.testing.assert_allclose(out.data, 2.5 * h.data)

    def test_channel_mismatch(self):
        with pytest.raises(DimensionError):
            lcm_apply(_state((3, 4)), Tensor(np.eye(2)))


class TestMopa:
    def test_ones_and_zeros(self):
        h = _state((2, 3, 4))
        np.testing.assert_array_equal(mopa_apply(h, Tensor(np.ones((3, 4)))).data, h.data)
        np.testing.assert_array_equal(mopa_apply(h, Tensor(np.zeros((3, 4)))).data, 0.0)

    def test_single_slot(self):
        h = np.zeros((2, 3))
        h[1, 2] = 3.0
        m = np.ones((2, 3))
        m[1, 2] = 2.0
        assert mopa_apply(Tensor(h), Tensor(m)).data[1, 2] == 6.0

    def test_shape_mismatch(self):
        with pytest.raises(DimensionError):
            mopa_apply(_state((3, 4)), Tensor(np.ones((3, 5))))


class TestGate:
    def test_zero_scales_average(self):
        a, b = _state((2, 3, 4), 1), _state((2, 3, 4), 2)
        mix, gates = gate_combine(a, b, Tensor([0.0]), Tensor([0.0]))
        np.testing.assert_allclose(gates.g_l.data, 0.5)
        np.testing.assert_allclose(mix.data, 0.5 * (a.data + b.data))

    def test_equal_branches_pass_through(self):
        a = _state((3, 5))
        mix, _ = gate_combine(a, a, Tensor([3.0]), Tensor([-7.0]))
        np.testing.assert_allclose(mix.data, a.data, atol=1e-14)

    def test_saturation(self):
        rng = np.random.default_rng(3)
        a = Tensor(rng.uniform(0.5, 2.0, size=(4, 6)))
        b = Tensor(rng.uniform(0.5, 2.0, size=(4, 6)))
        mix, gates = gate_combine(a, b, Tensor([20.0]), Tensor([-20.0]))
        assert np.all(gates.g_l.data >= 1.0 - 1e-6)
        np.testing.assert_allclose(mix.data, a.data, atol=1e-5)

    def test_convexity(self):
        a, b = _state((5, 3, 6), 4), _state((5, 3, 6), 5)
        mix, gates = gate_combine(a, b, Tensor([1.3]), Tensor([-0.4]))
        np.testing.assert_allclose(gates.g_l.data + gates.g_m.data, 1.0, atol=1e-6)
        lo, hi = np.minimum(a.data, b.data), np.maximum(a.data, b.data)
        assert np.all(mix.data >= lo - 1e-12) and np.all(mix.data <= hi + 1e-12)


class TestOrderCombine:
    def test_splice_identity(self):
        lcm_full = _state((2, 3, 6))
        out = order_combine(lcm_full, lcm_full[..., LOW_ORDERS:])
        np.testing.assert_array_equal(out.data, lcm_full.data)

    def test_zero_mix(self):
        lcm_full = _state((2, 3, 6))
        out = order_combine(lcm_full, Tensor(np.zeros((2, 3, 4))))
        np.testing.assert_array_equal(out.data[..., :2], lcm_full.data[..., :2])
        np.testing.assert_array_equal(out.data[..., 2:], 0.0)

    def test_small_state_rejected(self):
        with pytest.raises(DimensionError):
            order_combine(_state((3, 2)), Tensor(np.zeros((3, 0))))


class TestVariants:
    def test_registry_order(self):
        assert VARIANTS == ("full", "gate_only", "no_lcm", "no_mopa", "vanilla")

    def test_unknown_variant(self):
        with pytest.raises(ValueError, match="unknown variant"):
            get_transform("poly")

    @pytest.mark.parametrize("variant", VARIANTS)
    def test_degenerate_start_is_identity(self, variant):
        h = _state((2, 3, 4, 5))
        params = PolyParams.init(3, 5, variant, "float64")
        np.testing.assert_array_equal(poly_state_transform(h, params).data, h.data)

    def test_parameter_shapes(self):
        full = PolyParams.init(4, 6, "full", "float64")
        assert full.l_mat.shape == (4, 4)
        assert full.m_mat.shape == (4, 4)
        assert full.p_l.shape == full.p_m.shape == (1,)
        assert PolyParams.init(4, 6, "gate_only", "float64").m_mat.shape == (4, 6)
        assert PolyParams.init(4, 6, "no_lcm", "float64").l_mat is None
        assert PolyParams.init(4, 6, "no_mopa", "float64").m_mat is None
        assert PolyParams.init(4, 6, "vanilla", "float64").parameters() == []

    def test_full_needs_three_orders(self):
        with pytest.raises(DimensionError):
            PolyParams.init(2, 2, "full", "float64")

    def test_low_orders_follow_lcm(self):
        rng = np.random.default_rng(11)
        params = PolyParams.init(3, 5, "full", "float64")
        params.l_mat.assign(rng.normal(size=(3, 3)))
        params.m_mat.assign(rng.normal(size=(3, 3)))
        params.p_l.assign([0.7])
        params.p_m.assign([-1.1])
        h = _state((2, 3, 4, 5), 12)
        out = poly_state_transform(h, params)
        mixed = np.einsum("ij,bjdn->bidn", params.l_mat.data, h.data)
        np.testing.assert_allclose(out.data[..., :2], mixed[..., :2], atol=1e-12)

    def test_low_orders_bit_exact_against_lcm(self):
        rng = np.random.default_rng(13)
        params = PolyParams.init(2, 4, "full", "float64")
        params.l_mat.assign(rng.normal(size=(2, 2)))
        h = _state((1, 2, 3, 4), 14)
        channel_major = ops.transpose(h, (0, 2, 1, 3))
        lcm = ops.transpose(lcm_apply(channel_major, params.l_mat), (0, 2, 1, 3))
        out = poly_state_transform(h, params)
        np.testing.assert_array_equal(out.data[..., :2], lcm.data[..., :2])

    def test_mopa_saturation_zeroes_high_orders(self):
        params = PolyParams.init(2, 5, "full", "float64")
        params.m_mat.assign(np.zeros((2, 3)))
        params.p_l.assign([-40.0])
        params.p_m.assign([40.0])
        h = Tensor(np.random.default_rng(15).uniform(0.5, 1.5, size=(1, 2, 3, 5)))
        out = poly_state_transform(h, params)
        np.testing.assert_array_equal(out.data[..., :2], h.data[..., :2])
        np.testing.assert_allclose(out.data[..., 2:], 0.0, atol=1e-6)

    def test_trace_is_channel_major(self):
        params = PolyParams.init(3, 5, "full", "float64")
        trace = {}
        poly_state_transform(_state((2, 3, 4, 5)), params, trace)
        assert set(trace) == {"pre_mopa", "post_mopa", "gate_l"}
        assert trace["pre_mopa"].shape == (2, 4, 3, 3)
        np.testing.assert_allclose(trace["gate_l"], 0.5)

    def test_sequence_layout(self):
        params = PolyParams.init(2, 4, "no_mopa", "float64")
        params.l_mat.assign([[0.0, 1.0], [1.0, 0.0]])
        h = _state((1, 2, 6, 3, 4))
        out = poly_state_transform(h, params)
        np.testing.assert_array_equal(out.data, h.data[:, ::-1])

    def test_state_rank_checked(self):
        with pytest.raises(DimensionError):
            poly_state_transform(_state((3, 4, 5)), PolyParams.init(3, 5, "full", "float64"))

    def test_gradients(self):
        rng = np.random.default_rng(16)
        params = PolyParams.init(2, 4, "full", "float64")
        params.l_mat.assign(np.eye(2) + 0.3 * rng.normal(size=(2, 2)))
        params.m_mat.assign(1.0 + 0.3 * rng.normal(size=(2, 2)))
        params.p_l.assign([0.4])
        params.p_m.assign([-0.2])
        h = _state((1, 2, 3, 4), 17)
        weights = _state((1, 2, 3, 4), 18)

        def objective():
            return ops.sum(poly_state_transform(h, params) * weights)

        report = finite_diff_check(objective, params.parameters())
        assert report.passed, report.worst()


class TestFullProjectionReference:
    def test_dimensions(self):
        coeffs = np.random.default_rng(0).normal(size=(2, 3))
        expanded = expand_coefficients(coeffs, 2)
        assert expanded.shape == (10,)
        out = full_projection_reference(expanded, FullProjectionRef.averaging(2, 2))
        assert out.shape == (3,)

    def test_averaging_constants(self):
        ref = FullProjectionRef.averaging(2, 2)
        expanded = np.concatenate([np.full(1, 4.0), np.full(3, 4.0), np.full(6, 4.0)])
        np.testing.assert_allclose(full_projection_reference(expanded, ref), 4.0)

    def test_single_channel_scales_orders(self):
        coeffs = np.array([[1.5, -2.0, 0.5]])
        ref = FullProjectionRef.averaging(1, 2)
        expanded = expand_coefficients(coeffs, 2)
        out = full_projection_reference(expanded, ref)
        assert out[0] == pytest.approx(1.5)
        assert out.shape == (3,)

    def test_wrong_count_cites_total(self):
        with pytest.raises(DimensionError, match="count_total"):
            full_projection_reference(np.zeros(9), FullProjectionRef.averaging(2, 2))

    def test_tanh_activation(self):
        ref = FullProjectionRef.random(2, 2, np.random.default_rng(1))
        out = full_projection_reference(np.ones(10), ref)
        assert np.all(np.abs(out) < 1.0)
