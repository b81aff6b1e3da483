import numpy as np
import pytest
from scipy.special import expit

from dpmne.autoencoder import (AutoencoderParams, decode, encode, init_autoencoder,
                               reconstruction_loss, train_view_autoencoder,
                               view_loss, view_loss_and_grads)
from dpmne.optim import flatten, unflatten


def straight_line_forward(params, X):
    """Independent re-implementation of the whole layer recurrence."""
    fns = {"identity": lambda z: z, "tanh": np.tanh, "sigmoid": expit}
    h = np.asarray(X, dtype=np.float64)
    for k, (W, b) in enumerate(zip(params.enc_weights, params.enc_biases)):
        h = fns[params.activation](h @ W + b)
    x = h
    for k, (W, b) in enumerate(zip(params.dec_weights, params.dec_biases)):
        act = params.output_activation if k == len(params.dec_weights) - 1 else params.activation
        x = fns[act](x @ W + b)
    return h, x


def identity_params(dim):
    eye = np.eye(dim)
    zero = np.zeros(dim)
    return AutoencoderParams([eye.copy()], [zero.copy()], [eye.copy()], [zero.copy()],
                             activation="identity", output_activation="identity")


def central_difference(fun, vec, eps=1e-6):
    grad = np.zeros_like(vec)
    for i in range(vec.size):
        up = vec.copy()
        dn = vec.copy()
        up[i] += eps
        dn[i] -= eps
        grad[i] = (fun(up) - fun(dn)) / (2.0 * eps)
    return grad


def rel_error(a, b):
    return np.linalg.norm(a - b) / max(np.linalg.norm(a), np.linalg.norm(b), 1e-12)


class TestEncode:
    def test_all_masked_input_encodes_to_zero(self):
        params = init_autoencoder(4, (3,), rng=np.random.default_rng(0))
        H = encode(params, np.zeros((5, 4)), np.zeros(5, dtype=bool))
        assert np.array_equal(H, np.zeros((5, 3)))

    def test_identity_network_reproduces_present_rows(self):
        params = identity_params(3)
        X = np.arange(12.0).reshape(4, 3)
        mask = np.array([True, False, True, True])
        X = X * mask[:, None]
        H = encode(params, X, mask)
        np.testing.assert_array_equal(H[mask], X[mask])
        assert np.all(H[~mask] == 0.0)

    @pytest.mark.parametrize("seed", range(4))
    def test_forward_matches_straight_line_oracle(self, seed):
        rng = np.random.default_rng(seed)
        params = init_autoencoder(5, (7, 3), rng=rng)
        X = rng.random((8, 5))
        H = encode(params, X)
        H_oracle, X_oracle = straight_line_forward(params, X)
        assert np.max(np.abs(H - H_oracle)) < 1e-12
        assert np.max(np.abs(decode(params, H) - X_oracle)) < 1e-12

    def test_masked_row_storage_never_changes_output(self):
        rng = np.random.default_rng(9)
        params = init_autoencoder(4, (3,), rng=rng)
        X = rng.random((6, 4))
        mask = np.array([True, True, False, True, False, True])
        X[~mask] = 0.0
        base = encode(params, X, mask)
        X_poisoned = X.copy()
        X_poisoned[~mask] = rng.random((2, 4)) * 100
        assert np.array_equal(encode(params, X_poisoned, mask), base)

    def test_shape_mismatch_rejected(self):
        params = init_autoencoder(4, (3,), rng=np.random.default_rng(0))
        with pytest.raises(ValueError):
            encode(params, np.zeros((5, 3)))
        with pytest.raises(ValueError):
            encode(params, np.zeros((5, 4)), np.ones(4, dtype=bool))


class TestDecode:
    def test_round_trip_through_identity_network(self):
        params = identity_params(2)
        X = np.array([[0.1, 0.2], [0.3, 0.4]])
        np.testing.assert_array_equal(decode(params, encode(params, X)), X)

    def test_zero_hidden_row_decodes_to_bias_response(self):
        rng = np.random.default_rng(1)
        params = init_autoencoder(4, (3,), rng=rng)
        params.dec_biases[0][:] = rng.random(4)
        out = decode(params, np.zeros((1, 3)))
        np.testing.assert_allclose(out[0], expit(params.dec_biases[0]), atol=1e-15)


class TestReconstructionLoss:
    def test_perfect_reconstruction_is_zero(self):
        X = np.random.default_rng(0).random((4, 3))
        assert reconstruction_loss(X, X) == 0.0

    def test_single_differing_row_gives_its_squared_norm(self):
        X = np.zeros((3, 4))
        Xh = X.copy()
        v = np.array([1.0, -2.0, 0.5, 3.0])
        Xh[1] = v
        mask = np.array([False, True, False])
        assert reconstruction_loss(X, Xh, mask) == pytest.approx(float(v @ v), abs=1e-12)

    def test_masked_instance_matches_elementwise_oracle(self):
        rng = np.random.default_rng(2)
        X, Xh = rng.random((6, 5)), rng.random((6, 5))
        mask = np.array([True, False, True, True, False, True])
        oracle = 0.0
        for i in range(6):
            if not mask[i]:
                continue
            for j in range(5):
                oracle += (X[i, j] - Xh[i, j]) ** 2
        assert abs(reconstruction_loss(X, Xh, mask) - oracle) < 1e-12

    def test_shape_mismatch_rejected(self):
        with pytest.raises(ValueError):
            reconstruction_loss(np.zeros((2, 2)), np.zeros((3, 2)))


def small_problem(seed, n=10, d_in=5, hidden=(6, 4), d=3, missing=2):
    rng = np.random.default_rng(seed)
    params = init_autoencoder(d_in, hidden, rng=rng)
    mask = np.ones(n, dtype=bool)
    mask[rng.choice(n, size=missing, replace=False)] = False
    X = rng.random((n, d_in))
    X[~mask] = 0.0
    Y = rng.standard_normal((n, d))
    B = rng.standard_normal((d, params.code_dim))
    return params, X, mask, Y, B


class TestTrainViewAutoencoder:
    @pytest.mark.parametrize("seed", range(3))
    def test_plain_gradient_matches_finite_differences(self, seed):
        # alpha = 0 reduces to an ordinary autoencoder
        params, X, mask, _, _ = small_problem(seed)
        templates = params.all_arrays()
        vec = flatten(templates)
        _, grads = view_loss_and_grads(params, X, mask, alpha=0.0, lam=0.01)

        def fun(v):
            return view_loss(params.replace_arrays(unflatten(v, templates)),
                             X, mask, alpha=0.0, lam=0.01)

        assert rel_error(flatten(grads), central_difference(fun, vec)) < 1e-5

    @pytest.mark.parametrize("seed", range(3))
    def test_coupled_gradient_matches_finite_differences(self, seed):
        params, X, mask, Y, B = small_problem(seed + 10)
        templates = params.all_arrays()
        vec = flatten(templates)
        _, grads = view_loss_and_grads(params, X, mask, Y, B, alpha=0.7, lam=0.05)

        def fun(v):
            return view_loss(params.replace_arrays(unflatten(v, templates)),
                             X, mask, Y, B, alpha=0.7, lam=0.05)

        assert rel_error(flatten(grads), central_difference(fun, vec)) < 1e-5

    def test_zero_steps_leaves_params_unchanged(self):
        params, X, mask, Y, B = small_problem(4)
        out = train_view_autoencoder(params, X, mask, Y, B, 1.0, 0.01, steps=0)
        for before, after in zip(params.all_arrays(), out.all_arrays()):
            assert np.array_equal(before, after)

    @pytest.mark.parametrize("seed", range(4))
    def test_loss_never_increases(self, seed):
        params, X, mask, Y, B = small_problem(seed + 20)
        before = view_loss(params, X, mask, Y, B, alpha=1.0, lam=0.01)
        out = train_view_autoencoder(params, X, mask, Y, B, 1.0, 0.01, steps=8, lr=0.5)
        after = view_loss(out, X, mask, Y, B, alpha=1.0, lam=0.01)
        assert after <= before + 1e-12

    def test_non_finite_input_raises(self):
        params, X, mask, Y, B = small_problem(5)
        X = X.copy()
        X[0, 0] = np.nan
        mask = np.ones_like(mask)
        with pytest.raises(FloatingPointError):
            train_view_autoencoder(params, X, mask, Y, B, 1.0, 0.01, steps=1)

    def test_loss_invariant_under_node_permutation(self):
        params, X, mask, Y, B = small_problem(6)
        perm = np.random.default_rng(0).permutation(X.shape[0])
        a = view_loss(params, X, mask, Y, B, alpha=0.9, lam=0.02)
        b = view_loss(params, X[perm], mask[perm], Y[perm], B, alpha=0.9, lam=0.02)
        assert a == pytest.approx(b, rel=1e-12)
