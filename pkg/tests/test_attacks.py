import numpy as np
import pytest

from oracles import LinearModel
from stvsa.adversarial import (AttackConfig, cw_attack, input_gradient, mi_fgsm, pgd, run_attack,
                               voltage_channels, weight_checksum)
from stvsa.adversarial.attacks import U_RANGE


def linear_inputs(us):
    x = np.zeros((len(us), 1, 3))
    x[:, 0, 0] = 0.4
    x[:, 0, 1] = -0.2
    x[:, 0, 2] = us
    return x


# -- config ------------------------------------------------------------------------------

def test_config_validation():
    with pytest.raises(ValueError):
        AttackConfig("fgsm")
    with pytest.raises(ValueError):
        AttackConfig("pgd", -0.1)
    with pytest.raises(ValueError):
        AttackConfig("pgd", None)
    with pytest.raises(ValueError):
        AttackConfig("mifgsm", 0.1, steps=0)
    assert AttackConfig("pgd", 0.04).alpha == pytest.approx(0.01)
    assert AttackConfig("mifgsm", 0.05, steps=10).alpha == pytest.approx(0.005)


def test_voltage_channels():
    assert voltage_channels(9) == (6, 7, 8)
    assert voltage_channels(3) == (2,)
    with pytest.raises(ValueError):
        voltage_channels(4)


# -- trivial cases --------------------------------------------------------------------------

@pytest.mark.parametrize("method", ["mifgsm", "pgd"])
def test_zero_epsilon_identity(toy_trained, toy_data, method):
    x, y = toy_data[1].x[:10], toy_data[1].y[:10]
    out = run_attack(toy_trained, x, y, AttackConfig(method, 0.0))
    np.testing.assert_array_equal(out.x_adv, x)


def test_cw_zero_iterations_identity(toy_trained, toy_data):
    x, y = toy_data[1].x[:10], toy_data[1].y[:10]
    out = cw_attack(toy_trained, x, y, AttackConfig("cw", 0.5, max_iterations=0))
    np.testing.assert_array_equal(out.x_adv, x)


def test_cw_already_misclassified_returns_input():
    model = LinearModel(10.0, -10.0)       # predicts 1 above u = 1
    x = linear_inputs([1.2])
    out = cw_attack(model, x, np.array([0]), AttackConfig("cw", None))
    np.testing.assert_array_equal(out.x_adv, x)


def test_zero_gradient_leaves_input():
    model = LinearModel(0.0, 3.0)           # constant logits, class 1 always
    x = linear_inputs([1.0, 0.8])
    out = mi_fgsm(model, x, np.array([1, 1]), AttackConfig("mifgsm", 0.05))
    np.testing.assert_array_equal(out.x_adv, x)
    assert not out.success.any()


def test_fgsm_reduction_bit_exact(toy_trained, toy_data):
    x, y = toy_data[1].x[:12], toy_data[1].y[:12]
    eps = 0.02
    grad = input_gradient(toy_trained, x, y)
    want = x.copy()
    want[..., 2] = np.clip(x[..., 2] + eps * np.sign(grad[..., 2]), *U_RANGE)
    out = mi_fgsm(toy_trained, x, y, AttackConfig("mifgsm", eps, steps=1, momentum=0.0))
    np.testing.assert_array_equal(out.x_adv, want)


# -- budget soundness -----------------------------------------------------------------------

@pytest.mark.parametrize("method,eps", [("mifgsm", 0.01), ("mifgsm", 0.05), ("pgd", 0.03), ("pgd", 0.05),
                                        ("cw", 0.03), ("cw", 0.2)])
def test_budget_and_mask(toy_trained, toy_data, method, eps):
    x, y = toy_data[1].x, toy_data[1].y
    before = weight_checksum(toy_trained)
    out = run_attack(toy_trained, x, y, AttackConfig(method, eps), np.random.default_rng(3))
    assert weight_checksum(toy_trained) == before
    d = out.delta
    np.testing.assert_array_equal(d[..., :2], 0.0)
    if method == "cw":
        assert np.all(out.l2 <= eps * (1 + 1e-12))
    else:
        assert np.all(out.linf <= eps + 1e-12)
    u = out.x_adv[..., 2]
    assert u.min() >= U_RANGE[0] and u.max() <= U_RANGE[1]


def test_unbounded_cw_mask_and_weights(toy_trained, toy_data):
    x, y = toy_data[1].x[:16], toy_data[1].y[:16]
    before = weight_checksum(toy_trained)
    out = cw_attack(toy_trained, x, y, AttackConfig("cw", None))
    assert weight_checksum(toy_trained) == before
    np.testing.assert_array_equal(out.delta[..., :2], 0.0)


def test_custom_channel_mask(toy_trained, toy_data):
    x, y = toy_data[1].x[:8], toy_data[1].y[:8]
    out = pgd(toy_trained, x, y, AttackConfig("pgd", 0.05, channels=(0,)))
    np.testing.assert_array_equal(out.delta[..., 1:], 0.0)
    assert np.abs(out.delta[..., 0]).max() > 0


# -- closed-form linear oracle -----------------------------------------------------------------

W, B = 10.0, -10.0   # decision boundary at u = 1


def _threshold_cases():
    # (u, label): margin / |w| = |u - 1|
    return [(1.03, 1), (0.96, 0), (1.011, 1), (0.9875, 0)]


@pytest.mark.parametrize("method", ["mifgsm", "pgd", "cw"])
def test_linear_success_threshold(method):
    model = LinearModel(W, B)
    for u, label in _threshold_cases():
        dist = abs(u - 1.0)
        for eps, flips in ((dist - 1e-9, False), (dist + 1e-9, True)):
            cfg = AttackConfig(method, eps, max_iterations=300)
            out = run_attack(model, linear_inputs([u]), np.array([label]), cfg, np.random.default_rng(0))
            assert bool(out.success[0]) is flips, (method, u, eps)


def test_linear_sweep_matches_closed_form():
    model = LinearModel(W, B)
    us = 1.0 + (np.arange(-20, 20) + 0.5) * 0.005   # no point sits exactly on an epsilon
    y = (us > 1).astype(int)
    for eps in (0.01, 0.03, 0.05):
        out = mi_fgsm(model, linear_inputs(us), y, AttackConfig("mifgsm", eps))
        np.testing.assert_array_equal(out.success, np.abs(us - 1) < eps)


def test_pgd_loss_monotone_on_linear_oracle():
    model = LinearModel(W, B)
    us = np.array([1.02, 0.97, 1.2, 0.6])
    y = (us > 1).astype(int)
    for alpha in (0.005, 0.02, 0.05):
        out = pgd(model, linear_inputs(us), y, AttackConfig("pgd", 0.05, step_size=alpha, steps=15),
                  np.random.default_rng(1))
        trace = np.array(out.meta["loss_trace"])
        assert np.all(np.diff(trace) >= -1e-12)


def test_cw_least_norm_crossing():
    model = LinearModel(W, B)
    us = np.array([1.05, 0.92, 1.2])
    y = (us > 1).astype(int)
    cfg = AttackConfig("cw", None, max_iterations=200)
    out = cw_attack(model, linear_inputs(us), y, cfg)
    assert out.success.all()
    crossing = np.abs(us - 1.0)
    # moves along -sign(w * margin), only on U, and stops within one Adam step past the crossing
    np.testing.assert_array_equal(np.sign(out.delta[:, 0, 2]), np.where(y == 1, -1, 1))
    assert np.all(out.l2 >= crossing - 1e-12)
    assert np.all(out.l2 <= crossing + 1.2 * cfg.lr)
