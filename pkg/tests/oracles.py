"""Independent reference implementations used by the tests.

Nothing here imports the package's kernels: the circuit oracle builds full
2^n x 2^n matrices with Kronecker products, FCM and k-means are written from
the textbook updates.
"""

import numpy as np

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI = {"X": X, "Y": Y, "Z": Z}


def rot(axis, theta):
    return np.cos(theta / 2) * I2 - 1j * np.sin(theta / 2) * PAULI[axis]


def on_qubit(gate, qubit, n_total):
    """Embed a 1-qubit gate; qubit 0 is the leftmost Kronecker factor (most significant bit)."""
    mats = [gate if q == qubit else I2 for q in range(n_total)]
    out = mats[0]
    for m in mats[1:]:
        out = np.kron(out, m)
    return out


def cnot_matrix(control, target, n_total):
    p0 = np.array([[1, 0], [0, 0]], dtype=complex)
    p1 = np.array([[0, 0], [0, 1]], dtype=complex)
    a = [p0 if q == control else I2 for q in range(n_total)]
    b = [p1 if q == control else (X if q == target else I2) for q in range(n_total)]

    def kron_all(ms):
        out = ms[0]
        for m in ms[1:]:
            out = np.kron(out, m)
        return out

    return kron_all(a) + kron_all(b)


def dense_circuit_unitary(n, theta, features):
    nt = n + 1
    u = np.eye(2 ** nt, dtype=complex)
    for j in range(n):
        u = on_qubit(rot("X", features[j]), j, nt) @ u
    for layer in np.atleast_2d(theta):
        for j in range(n):
            u = on_qubit(rot("Y", layer[j]), j, nt) @ u
        for j in range(n):
            u = cnot_matrix(j, (j + 1) % n, nt) @ u
        u = cnot_matrix(n - 1, n, nt) @ u
        u = on_qubit(rot("Y", layer[n]), n, nt) @ u
    return u


def dense_state(n, theta, features):
    psi0 = np.zeros(2 ** (n + 1), dtype=complex)
    psi0[0] = 1.0
    return dense_circuit_unitary(n, theta, features) @ psi0


def dense_expectations(n, theta, features):
    psi = dense_state(n, theta, features)
    return np.array([np.real(np.conj(psi) @ on_qubit(Z, j, n + 1) @ psi) for j in range(n)])


def fcm_textbook(x, n_clusters=2, iters=500, seed=0, tol=1e-10):
    """Bezdek FCM with m = 2, random-membership start."""
    rng = np.random.default_rng(seed)
    u = rng.random((len(x), n_clusters))
    u /= u.sum(axis=1, keepdims=True)
    for _ in range(iters):
        w = u ** 2
        c = (w.T @ x) / w.sum(axis=0)[:, None]
        d2 = ((x[:, None, :] - c[None]) ** 2).sum(-1)
        d2 = np.maximum(d2, 1e-300)
        inv = 1.0 / d2
        u_new = inv / inv.sum(axis=1, keepdims=True)
        if np.abs(u_new - u).max() < tol:
            u = u_new
            break
        u = u_new
    return u.argmax(axis=1), c


def kmeans(x, k=2, iters=100, seed=0):
    rng = np.random.default_rng(seed)
    c = x[rng.choice(len(x), k, replace=False)]
    for _ in range(iters):
        lab = ((x[:, None] - c[None]) ** 2).sum(-1).argmin(1)
        c = np.stack([x[lab == j].mean(0) for j in range(k)])
    return lab, c


def same_partition(a, b):
    a = np.asarray(a)
    b = np.asarray(b)
    return np.array_equal(a, b) or np.array_equal(a, 1 - b)


class LinearModel:
    """Two-class linear scorer on a single voltage channel: logit_1 - logit_0 = w * x + b.

    Exposes the small slice of the classifier interface the attacks use.
    Input shape ``[B, 1, 3]`` with the last feature the U channel.
    """

    def __init__(self, w: float, b: float):
        from stvsa.autodiff import Tensor
        self.W = Tensor(np.array([[0.0, 0.0], [0.0, 0.0], [-w / 2, w / 2]]), requires_grad=True)
        self.bias = Tensor(np.array([-b / 2, b / 2]), requires_grad=True)

    def parameters(self):
        return [self.W, self.bias]

    def named_parameters(self, prefix=""):
        yield prefix + "W", self.W
        yield prefix + "bias", self.bias

    def set_requires_grad(self, flag):
        for p in self.parameters():
            p.requires_grad = flag

    def logits(self, x):
        from stvsa.autodiff import Tensor, ops
        xt = x if isinstance(x, Tensor) else Tensor(np.asarray(x, dtype=np.float64))
        return ops.matmul(ops.reshape(xt, (xt.shape[0], 3)), self.W) + self.bias

    def predict(self, x):
        return self.logits(x).data.argmax(axis=1)
