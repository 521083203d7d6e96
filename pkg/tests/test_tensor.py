import numpy as np
import pytest

from popformer.errors import ShapeError, TapeError
from popformer.nn import (
    Adam,
    Tape,
    Tensor,
    add,
    causal_mask,
    const,
    gradient_check,
    logistic,
    matmul,
    mean_all,
    mlp_block,
    mlp_params,
    mul,
    multi_head_attention,
    attention_params,
    norm_params,
    layer_norm,
    linear,
    relu,
    softmax,
    sub,
    sum_all,
    uniform_linear,
)
from popformer.nn.layers import LinearParams, MlpParams, NormParams
from popformer.nn.tensor import _emit


def leaf(data):
    return Tensor(np.asarray(data, dtype=float), requires_grad=True)


class TestMatmul:
    def test_identity(self):
        m = np.arange(9.0).reshape(3, 3)
        out = matmul(const(np.eye(3)), const(m))
        assert np.array_equal(out.data, m)

    def test_hand_product(self):
        out = matmul(const([[1.0, 2.0], [3.0, 4.0]]), const([[5.0], [6.0]]))
        assert np.array_equal(out.data, [[17.0], [39.0]])

    def test_grad_of_sum_is_ones_times_bt(self):
        a = leaf(np.random.default_rng(0).normal(size=(3, 4)))
        b = const(np.random.default_rng(1).normal(size=(4, 2)))
        with Tape() as tape:
            loss = sum_all(matmul(a, b))
        tape.backward(loss)
        assert np.allclose(a.grad, np.ones((3, 2)) @ b.data.T)

    def test_shape_error_names_both_shapes(self):
        with pytest.raises(ShapeError) as exc:
            matmul(const(np.zeros((2, 3))), const(np.zeros((2, 3))))
        assert "(2, 3)" in str(exc.value)

    def test_batched_3d(self):
        rng = np.random.default_rng(2)
        a, b = rng.normal(size=(4, 2, 3)), rng.normal(size=(4, 3, 5))
        out = matmul(const(a), const(b))
        assert np.allclose(out.data, a @ b)

    def test_finite_differences(self):
        rng = np.random.default_rng(3)
        a = leaf(rng.normal(size=(3, 4)))
        b = leaf(rng.normal(size=(4, 2)))
        report = gradient_check(lambda: sum_all(mul(matmul(a, b), matmul(a, b))), [a, b])
        assert report["max_rel_err"] <= 1e-6


class TestElementwise:
    def test_broadcast_add_backward(self):
        x = leaf(np.random.default_rng(0).normal(size=(5, 3)))
        b = leaf(np.zeros(3))
        with Tape() as tape:
            loss = sum_all(add(x, b))
        tape.backward(loss)
        assert np.allclose(b.grad, 5 * np.ones(3))
        assert np.allclose(x.grad, np.ones((5, 3)))

    def test_relu_negative_region_zero_gradient(self):
        x = leaf([-1.0, -0.5, 0.5, 2.0])
        with Tape() as tape:
            loss = sum_all(relu(x))
        tape.backward(loss)
        assert np.array_equal(x.grad, [0.0, 0.0, 1.0, 1.0])

    def test_logistic_range_and_grad(self):
        x = leaf([-800.0, 0.0, 800.0])
        out = logistic(x)
        assert np.allclose(out.data, [0.0, 0.5, 1.0])
        report = gradient_check(lambda: sum_all(logistic(leafed)), [leafed := leaf([0.3, -1.2])])
        assert report["max_rel_err"] <= 1e-6

    def test_fd_on_mixed_expression(self):
        rng = np.random.default_rng(5)
        a = leaf(rng.normal(size=(4, 3)))
        b = leaf(rng.normal(size=(4, 3)))

        def loss():
            return mean_all(mul(sub(a, b), relu(add(a, b))))

        assert gradient_check(loss, [a, b])["max_rel_err"] <= 1e-6


class TestSoftmax:
    def test_uniform_on_equal_logits(self):
        out = softmax(const([0.0, 0.0]))
        assert np.allclose(out.data, [0.5, 0.5])

    def test_large_logits_no_overflow(self):
        out = softmax(const([1000.0, 0.0]))
        assert np.allclose(out.data, [1.0, 0.0])

    def test_mask_hides_position(self):
        out = softmax(const([1.0, 1.0, 1.0]), mask=np.array([True, True, False]))
        assert np.allclose(out.data, [0.5, 0.5, 0.0])

    def test_fully_masked_row_zeros_and_warns(self):
        with pytest.warns(RuntimeWarning):
            out = softmax(const([[1.0, 2.0]]), mask=np.array([[False, False]]))
        assert np.array_equal(out.data, [[0.0, 0.0]])

    def test_rows_sum_to_one(self):
        rng = np.random.default_rng(0)
        out = softmax(const(rng.normal(size=(20, 7)) * 10))
        assert np.allclose(out.data.sum(axis=1), 1.0, atol=1e-9)

    def test_masked_rows_sum_to_one_over_unmasked(self):
        rng = np.random.default_rng(1)
        mask = rng.random((10, 6)) > 0.4
        mask[:, 0] = True
        out = softmax(const(rng.normal(size=(10, 6))), mask=mask)
        assert np.allclose(out.data.sum(axis=1), 1.0, atol=1e-9)
        assert np.all(out.data[~mask] == 0.0)

    def test_finite_differences(self):
        x = leaf(np.random.default_rng(2).normal(size=(3, 4)))
        w = const(np.random.default_rng(3).normal(size=(3, 4)))

        def loss():
            return sum_all(mul(softmax(x), w))

        assert gradient_check(loss, [x])["max_rel_err"] <= 1e-6


class TestLayerNorm:
    def test_constant_row_maps_to_zero(self):
        p = norm_params(4)
        out = layer_norm(const(np.full((2, 4), 3.7)), p)
        assert np.allclose(out.data, 0.0, atol=1e-9)

    def test_row_statistics(self):
        rng = np.random.default_rng(0)
        p = norm_params(64)
        out = layer_norm(const(rng.normal(size=(10, 64)) * 5 + 2), p).data
        assert np.allclose(out.mean(axis=1), 0.0, atol=1e-6)
        assert np.allclose(out.std(axis=1), 1.0, atol=1e-2)

    def test_shape_error(self):
        p = norm_params(3)
        with pytest.raises(ShapeError):
            layer_norm(const(np.zeros((2, 4))), p)

    def test_finite_differences(self):
        rng = np.random.default_rng(1)
        x = leaf(rng.normal(size=(4, 6)))
        p = norm_params(6)
        p.gain.data = rng.normal(size=6)
        p.bias.data = rng.normal(size=6)
        w = const(rng.normal(size=(4, 6)))

        def loss():
            return sum_all(mul(layer_norm(x, p), w))

        report = gradient_check(loss, [x, p.gain, p.bias])
        assert report["max_rel_err"] <= 1e-4


class TestAttention:
    def test_single_position_output_is_projected_value(self):
        rng = np.random.default_rng(0)
        p = attention_params(rng, 8)
        q = const(rng.normal(size=(1, 8)))
        v = const(rng.normal(size=(1, 8)))
        out = multi_head_attention(q, v, v, p, heads=2)
        want = (v.data @ p.v.w.data + p.v.b.data) @ p.out.w.data + p.out.b.data
        assert np.allclose(out.data, want)

    def test_causal_mask_blocks_future_rows(self):
        rng = np.random.default_rng(1)
        p = attention_params(rng, 8)
        x = rng.normal(size=(5, 8))
        mask = causal_mask(5)
        base = multi_head_attention(const(x), const(x), const(x), p, 2, mask=mask).data
        x2 = x.copy()
        x2[3] += 10.0  # perturb row 3; rows 0..2 must be bitwise unchanged
        pert = multi_head_attention(const(x2), const(x2), const(x2), p, 2, mask=mask).data
        assert np.array_equal(base[:3], pert[:3])
        assert not np.allclose(base[3:], pert[3:])

    def test_causal_gradient_zero_above_diagonal(self):
        rng = np.random.default_rng(2)
        p = attention_params(rng, 8)
        x = leaf(rng.normal(size=(4, 8)))
        row_pick = const(np.eye(4)[1][:, None] * np.ones((1, 8)))  # select output row 1
        with Tape() as tape:
            out = multi_head_attention(x, x, x, p, 2, mask=causal_mask(4))
            loss = sum_all(mul(out, row_pick))
        tape.backward(loss)
        assert np.all(x.grad[2:] == 0.0)  # inputs after position 1 cannot matter

    def test_full_jacobian_against_finite_differences(self):
        rng = np.random.default_rng(3)
        p = attention_params(rng, 8)
        x = leaf(rng.normal(size=(3, 8)))
        params = [x, p.q.w, p.q.b, p.k.w, p.k.b, p.v.w, p.v.b, p.out.w, p.out.b]
        w = const(rng.normal(size=(3, 8)))

        def loss():
            return sum_all(mul(multi_head_attention(x, x, x, p, 2, mask=causal_mask(3)), w))

        assert gradient_check(loss, params)["max_rel_err"] <= 1e-4

    def test_width_must_divide_heads(self):
        rng = np.random.default_rng(4)
        p = attention_params(rng, 8)
        x = const(rng.normal(size=(3, 8)))
        with pytest.raises(Exception):
            multi_head_attention(x, x, x, p, heads=3)


class TestMlp:
    def test_zero_weights_zero_output(self):
        p = MlpParams(
            inner=LinearParams(leaf(np.zeros((6, 24))), leaf(np.zeros(24))),
            outer=LinearParams(leaf(np.zeros((24, 6))), leaf(np.zeros(6))),
        )
        out = mlp_block(const(np.random.default_rng(0).normal(size=(3, 6))), p)
        assert np.array_equal(out.data, np.zeros((3, 6)))

    def test_finite_differences(self):
        rng = np.random.default_rng(1)
        p = mlp_params(rng, 6, 24)
        x = leaf(rng.normal(size=(4, 6)))

        def loss():
            return mean_all(mul(mlp_block(x, p), mlp_block(x, p)))

        params = [x, p.inner.w, p.inner.b, p.outer.w, p.outer.b]
        assert gradient_check(loss, params, max_entries=40)["max_rel_err"] <= 1e-4


class TestTape:
    def test_backward_twice_rejected(self):
        x = leaf([1.0, 2.0])
        with Tape() as tape:
            loss = sum_all(mul(x, x))
        tape.backward(loss)
        with pytest.raises(TapeError):
            tape.backward(loss)

    def test_no_tape_no_recording(self):
        x = leaf([1.0])
        out = mul(x, x)
        assert out.requires_grad is False

    def test_scalar_loss_required(self):
        x = leaf(np.ones((2, 2)))
        with Tape() as tape:
            y = mul(x, x)
        with pytest.raises(ShapeError):
            tape.backward(y)

    def test_gradient_accumulates_across_reuse(self):
        x = leaf([2.0])
        with Tape() as tape:
            loss = add(sum_all(mul(x, x)), sum_all(x))  # x^2 + x
        tape.backward(loss)
        assert np.allclose(x.grad, [5.0])


class TestAdam:
    def test_zero_grad_zero_decay_is_identity(self):
        p = leaf(np.array([1.0, -2.0, 3.0]))
        before = p.data.copy()
        opt = Adam([p], lr=0.1, weight_decay=0.0)
        p.grad = np.zeros_like(p.data)
        opt.step()
        assert np.array_equal(p.data, before)

    def test_first_step_is_sign_like(self):
        p = leaf(np.array([1.0, 1.0]))
        opt = Adam([p], lr=0.01, weight_decay=0.0)
        g = np.array([0.5, -3.0])
        p.grad = g.copy()
        opt.step()
        want = np.array([1.0, 1.0]) - 0.01 * g / (np.abs(g) + 1e-8)
        assert np.allclose(p.data, want, atol=1e-9)

    def test_weight_decay_applies_without_gradient(self):
        p = leaf(np.array([2.0]))
        opt = Adam([p], lr=0.1, weight_decay=0.5)
        p.grad = np.zeros(1)
        opt.step()
        assert np.allclose(p.data, [2.0 * (1 - 0.1 * 0.5)])

    def test_quadratic_bowl_converges(self):
        rng = np.random.default_rng(0)
        w = leaf(rng.normal(size=8))
        w.data /= np.linalg.norm(w.data)  # start at norm 1
        opt = Adam([w], lr=0.01, weight_decay=0.0)
        for _ in range(500):
            opt.zero_grad()
            with Tape() as tape:
                loss = sum_all(mul(w, w))
            tape.backward(loss)
            opt.step()
        assert np.linalg.norm(w.data) < 1e-2


class TestGradientCheckHarness:
    def test_linear_layer_tight(self):
        rng = np.random.default_rng(0)
        p = uniform_linear(rng, 5, 3)
        x = const(rng.normal(size=(4, 5)))

        def loss():
            return sum_all(linear(x, p))

        assert gradient_check(loss, [p.w, p.b])["max_rel_err"] <= 1e-6

    def test_corrupted_backward_fails_check(self):
        # a primitive whose backward rule is deliberately wrong must be caught
        x = leaf([0.5, -1.0, 2.0])

        def bad_square(t):
            out_data = t.data ** 2

            def backward(g):
                from popformer.nn.tensor import _accum
                _accum(t, g * 3.0 * t.data)  # wrong: should be 2x

            return _emit(out_data, (t,), backward)

        report = gradient_check(lambda: sum_all(bad_square(x)), [x])
        assert report["max_rel_err"] > 1e-2
