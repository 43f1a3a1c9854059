import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from stvsa.harness.training import Dataset, TrainConfig, train  # noqa: E402
from stvsa.models import ModelConfig, build_model  # noqa: E402

TOY_MODEL = dict(seq_len=4, feature_dim=3, d_model=8, n_heads=2, d_ff=16, n_encoder_layers=1,
                 n_qubits=2, n_qlayers=2)


def toy_windows(n, seed):
    """Two classes separated by the voltage level (channel 2) with a small sag slope on class 1."""
    rng = np.random.default_rng(seed)
    y = np.arange(n) % 2
    x = np.empty((n, 4, 3))
    x[..., 0] = rng.normal(0.5, 0.05, (n, 4))
    x[..., 1] = rng.normal(0.1, 0.05, (n, 4))
    level = np.where(y == 1, 0.97, 1.03)[:, None]
    slope = np.where(y == 1, -0.004, 0.0)[:, None] * np.arange(4)
    x[..., 2] = level + slope + rng.normal(0, 0.01, (n, 4))
    return Dataset(x, y)


@pytest.fixture(scope="session")
def toy_data():
    return toy_windows(160, 0), toy_windows(80, 1)


@pytest.fixture(scope="session")
def toy_trained(toy_data):
    """A small QSTAformer fitted to the toy voltage-level task (shared, treat as read-only)."""
    tr, te = toy_data
    model = build_model(ModelConfig(**TOY_MODEL), 0)
    train(model, tr, TrainConfig(epochs=12, batch_size=16, lr_max=1e-2, lr_min=1e-3), rng=np.random.default_rng(0))
    return model


# acceptance criterion -> (passed, detail); printed once at the end of the session
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
