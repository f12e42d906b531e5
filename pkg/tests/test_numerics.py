"""Autograd: recorded ops, gradients, finite-difference oracle."""

import numpy as np
import pytest

from library.errors import DimensionError, NumericError
from library.numerics import (
    Graph,
    Parameter,
    Tensor,
    backward,
    finite_diff_check,
    matmul,
    ops,
    softmax,
)


class TestTensor:
    def test_python_scalars_default_to_float64(self):
        assert Tensor(1.5).dtype == np.float64
        assert Tensor([1, 2, 3]).dtype == np.float64

    def test_float32_is_kept(self):
        t = Tensor(np.ones(3, dtype=np.float32))
        assert t.dtype == np.float32

    def test_unsupported_dtype_is_rejected(self):
        with pytest.raises(TypeError):
            Tensor(np.ones(3), dtype=np.int32)

    def test_non_finite_values_raise(self):
        with pytest.raises(NumericError):
            Tensor([1.0, np.nan])
        with pytest.raises(NumericError):
            Tensor([np.inf])

    def test_item_needs_single_element(self):
        assert Tensor([[2.5]]).item() == 2.5
        with pytest.raises(ValueError):
            Tensor([1.0, 2.0]).item()

    def test_parameter_grad_starts_at_zero(self):
        p = Parameter(np.ones((2, 3)), name="w")
        np.testing.assert_array_equal(p.grad, np.zeros((2, 3)))
        assert p.requires_grad

    def test_assign_keeps_buffer_and_checks_shape(self):
        p = Parameter(np.zeros(3), name="w")
        buffer = p.data
        p.assign([1.0, 2.0, 3.0])
        assert p.data is buffer
        np.testing.assert_array_equal(p.data, [1.0, 2.0, 3.0])
        with pytest.raises(ValueError):
            p.assign(np.zeros(4))


class TestGraph:
    def test_nothing_recorded_outside_graph(self):
        w = Parameter(np.ones(3), name="w")
        out = ops.sum(w * w)
        assert not out.requires_grad

    def test_constants_are_not_recorded(self):
        with Graph() as g:
            ops.sum(Tensor(np.ones(3)) * 2.0)
        assert len(g) == 0

    def test_square_gradient(self):
        w = Parameter(np.array([1.0, -2.0, 3.0]), name="w")
        with Graph() as g:
            loss = ops.sum(w * w)
        backward(g, loss)
        np.testing.assert_allclose(w.grad, 2.0 * w.data)

    def test_backward_accumulates(self):
        w = Parameter(np.array([1.0, 2.0]), name="w")
        with Graph() as g:
            loss = ops.sum(w * 3.0)
        backward(g, loss)
        backward(g, loss)
        np.testing.assert_allclose(w.grad, [6.0, 6.0])

    def test_unused_parameter_keeps_zero_grad(self):
        used = Parameter(np.ones(2), name="used")
        unused = Parameter(np.ones(2), name="unused")
        with Graph() as g:
            loss = ops.sum(used)
        backward(g, loss)
        np.testing.assert_array_equal(unused.grad, [0.0, 0.0])

    def test_backward_needs_scalar(self):
        w = Parameter(np.ones(2), name="w")
        with Graph() as g:
            out = w * 2.0
        with pytest.raises(ValueError):
            backward(g, out)

    def test_broadcast_gradient_sums_back(self):
        b = Parameter(np.zeros((1, 3)), name="b")
        x = Tensor(np.ones((4, 3)))
        with Graph() as g:
            loss = ops.sum(x + b)
        backward(g, loss)
        np.testing.assert_allclose(b.grad, np.full((1, 3), 4.0))

    def test_shared_intermediate_gradients_add(self):
        w = Parameter(np.array([2.0]), name="w")
        with Graph() as g:
            h = w * w
            loss = ops.sum(h + h)
        backward(g, loss)
        np.testing.assert_allclose(w.grad, [8.0])


class TestOps:
    def test_log_of_zero_raises(self):
        with pytest.raises(NumericError):
            ops.log(Tensor([0.0, 1.0]))

    def test_broadcast_mismatch_raises(self):
        with pytest.raises(DimensionError):
            ops.add(Tensor(np.ones((2, 3))), Tensor(np.ones((4,))))

    def test_matmul_inner_extent_mismatch(self):
        with pytest.raises(DimensionError):
            matmul(Tensor(np.ones((2, 3))), Tensor(np.ones((4, 2))))

    def test_matmul_needs_matrices(self):
        with pytest.raises(DimensionError):
            matmul(Tensor(np.ones(3)), Tensor(np.ones((3, 2))))

    def test_batched_matmul_broadcasts(self):
        a = Tensor(np.ones((5, 2, 3)))
        b = Tensor(np.ones((3, 4)))
        out = matmul(a, b)
        assert out.shape == (5, 2, 4)
        np.testing.assert_allclose(out.data, 3.0)

    def test_softmax_rows_sum_to_one(self):
        rng = np.random.default_rng(0)
        x = Tensor(rng.normal(size=(4, 7)) * 50.0)
        out = softmax(x, axis=-1)
        np.testing.assert_allclose(out.data.sum(axis=-1), 1.0, atol=1e-12)
        assert np.all(out.data >= 0.0)

    def test_dropout_identity_at_eval(self):
        x = Tensor(np.arange(6.0))
        rng = np.random.default_rng(0)
        np.testing.assert_array_equal(ops.dropout(x, 0.5, rng, training=False).data, x.data)
        np.testing.assert_array_equal(ops.dropout(x, 0.0, rng, training=True).data, x.data)

    def test_dropout_scales_kept_units(self):
        x = Tensor(np.ones(10_000))
        out = ops.dropout(x, 0.25, np.random.default_rng(1), training=True).data
        kept = out[out != 0.0]
        np.testing.assert_allclose(kept, 1.0 / 0.75)
        assert 0.2 < 1.0 - kept.size / out.size < 0.3

    def test_getitem_gradient_scatters(self):
        w = Parameter(np.arange(5.0), name="w")
        with Graph() as g:
            loss = ops.sum(w[1:3])
        backward(g, loss)
        np.testing.assert_array_equal(w.grad, [0.0, 1.0, 1.0, 0.0, 0.0])


class TestFiniteDifference:
    def test_composite_objective_passes(self):
        rng = np.random.default_rng(3)
        w = Parameter(rng.normal(size=(3, 4)), name="w")
        b = Parameter(rng.normal(size=(4,)), name="b")
        x = Tensor(rng.normal(size=(5, 3)))

        def objective():
            h = ops.tanh(matmul(x, w) + b)
            return ops.mean(ops.silu(h) * ops.sigmoid(h) + ops.softplus(h) ** 2.0)

        report = finite_diff_check(objective, [w, b], eps=1e-6, tol=1e-6)
        assert report.passed, report.worst()
        assert set(report.errors) == {"w", "b"}

    def test_softmax_concat_stack_pass(self):
        rng = np.random.default_rng(4)
        a = Parameter(rng.normal(size=(2, 3)), name="a")
        c = Parameter(rng.normal(size=(2, 3)), name="c")

        def objective():
            joined = ops.concat([a, c], axis=1)
            stacked = ops.stack([a, c], axis=0)
            return ops.sum(softmax(joined, axis=-1) * joined) + ops.sum(ops.exp(stacked) * 0.1)

        report = finite_diff_check(objective, [a, c])
        assert report.passed, report.worst()

    def test_gradcheck_restores_grad_buffers(self):
        w = Parameter(np.ones(2), name="w")
        w.grad = np.array([7.0, 7.0])
        finite_diff_check(lambda: ops.sum(w * w), [w])
        np.testing.assert_array_equal(w.grad, [7.0, 7.0])

    def test_non_deterministic_objective_raises(self):
        w = Parameter(np.ones(2), name="w")
        rng = np.random.default_rng(0)
        with pytest.raises(NumericError):
            finite_diff_check(lambda: ops.sum(w * rng.normal()), [w])

    def test_float32_parameters_rejected(self):
        w = Parameter(np.ones(2, dtype=np.float32), name="w")
        with pytest.raises(TypeError):
            finite_diff_check(lambda: ops.sum(w), [w])
