"""Exact statevector simulation of the angle-encoded, ring-entangled circuit.

Register layout: ``n_qubits`` main qubits followed by one auxiliary qubit
(index ``n_qubits``). Qubit 0 is the most significant bit of the basis index,
so ``|10>`` means qubit 0 is set.

Circuit per evaluation::

    |0...0>  ->  RX(feature_j) on main qubit j
             ->  repeat n_layers:
                   RY(theta[l, j]) on every main qubit j
                   CNOT(j -> (j+1) mod n) for j = 0..n-1
                   CNOT(n-1 -> aux), RY(theta[l, n]) on aux
             ->  <Z_j> for the main qubits

The low-level kernels act in place on a batch of amplitude vectors with shape
``(N, 2**n_total)``; every rotation accepts either one angle or one angle per
batch row.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from functools import lru_cache

import numpy as np

SHIFT = np.pi / 2
AXES = ("X", "Y", "Z")


class CircuitError(ValueError):
    pass


@dataclass(frozen=True)
class CircuitSpec:
    n_qubits: int = 4
    n_layers: int = 4
    encoding: str = "angle-rx"
    entanglement: str = "ring-aux"

    def __post_init__(self):
        if self.n_qubits < 2:
            raise CircuitError(f"n_qubits must be >= 2, got {self.n_qubits}")
        if self.n_layers < 1:
            raise CircuitError(f"n_layers must be >= 1, got {self.n_layers}")
        if self.encoding != "angle-rx":
            raise CircuitError(f"unsupported encoding {self.encoding!r}")
        if self.entanglement != "ring-aux":
            raise CircuitError(f"unsupported entanglement {self.entanglement!r}")

    @property
    def n_total(self) -> int:
        return self.n_qubits + 1

    @property
    def dim(self) -> int:
        return 2 ** self.n_total

    @property
    def param_shape(self) -> tuple[int, int]:
        return (self.n_layers, self.n_qubits + 1)

    def to_dict(self) -> dict:
        return asdict(self)


# -- in-place kernels -----------------------------------------------------------

def _check_qubit(n_total: int, qubit: int) -> None:
    if not 0 <= qubit < n_total:
        raise CircuitError(f"qubit {qubit} out of range for {n_total}-qubit register")


def rotate(amps: np.ndarray, n_total: int, qubit: int, axis: str, theta) -> np.ndarray:
    """Apply R_axis(theta) = exp(-i theta P / 2) to ``qubit`` of every row, in place."""
    _check_qubit(n_total, qubit)
    n = amps.shape[0]
    theta = np.asarray(theta, dtype=np.float64)
    if theta.ndim:
        theta = theta.reshape(n, 1, 1)
    c = np.cos(theta / 2)
    s = np.sin(theta / 2)
    if axis == "Y" and amps.flags.c_contiguous:
        # real matrix: work on the float view, interleaved re/im stay in the last axis
        fv = amps.view(np.float64).reshape(n, 2 ** qubit, 2, 2 ** (n_total - qubit))
        a0 = fv[:, :, 0, :].copy()
        a1 = fv[:, :, 1, :]
        fv[:, :, 0, :] *= c
        fv[:, :, 0, :] -= s * a1
        a1 *= c
        a0 *= s
        a1 += a0
        return amps
    view = amps.reshape(n, 2 ** qubit, 2, 2 ** (n_total - qubit - 1))
    a0 = view[:, :, 0, :].copy()
    a1 = view[:, :, 1, :]
    if axis == "Y":
        view[:, :, 0, :] = c * a0 - s * a1
        view[:, :, 1, :] = s * a0 + c * a1
    elif axis == "X":
        view[:, :, 0, :] = c * a0 - 1j * s * a1
        view[:, :, 1, :] = c * a1 - 1j * s * a0
    elif axis == "Z":
        view[:, :, 0, :] = a0 * (c - 1j * s)
        view[:, :, 1, :] = a1 * (c + 1j * s)
    else:
        raise CircuitError(f"unknown rotation axis {axis!r}")
    return amps


@lru_cache(maxsize=None)
def _cnot_perm(n_total: int, control: int, target: int) -> np.ndarray:
    idx = np.arange(2 ** n_total)
    cbit = 1 << (n_total - 1 - control)
    tbit = 1 << (n_total - 1 - target)
    return np.where(idx & cbit, idx ^ tbit, idx)


def cnot(amps: np.ndarray, n_total: int, control: int, target: int) -> np.ndarray:
    """Flip ``target`` on the control=1 subspace of every row, in place."""
    _check_qubit(n_total, control)
    _check_qubit(n_total, target)
    if control == target:
        raise CircuitError(f"CNOT control and target must differ (both {control})")
    if not amps.flags.c_contiguous:
        amps[:] = amps[:, _cnot_perm(n_total, control, target)]
        return amps
    # swap the target halves inside the control=1 block
    lo, hi = min(control, target), max(control, target)
    view = amps.reshape(amps.shape[0], 2 ** lo, 2, 2 ** (hi - lo - 1), 2, 2 ** (n_total - hi - 1))
    if control < target:
        sub = view[:, :, 1]
        t0, t1 = sub[:, :, :, 0], sub[:, :, :, 1]
    else:
        sub = view[:, :, :, :, 1]
        t0, t1 = sub[:, :, 0], sub[:, :, 1]
    tmp = t0.copy()
    t0[...] = t1
    t1[...] = tmp
    return amps


@lru_cache(maxsize=None)
def z_signs(n_total: int, n_measured: int) -> np.ndarray:
    """``[2**n_total, n_measured]`` matrix of +/-1 eigenvalues of Z_j per basis state."""
    idx = np.arange(2 ** n_total)[:, None]
    shifts = n_total - 1 - np.arange(n_measured)[None, :]
    return 1.0 - 2.0 * ((idx >> shifts) & 1)


# -- single-state API -------------------------------------------------------------

class StateVector:
    """Single register state, mutated in place by the gate methods."""

    def __init__(self, n_total: int):
        if n_total < 1:
            raise CircuitError("register needs at least one qubit")
        self.n_total = n_total
        self.amps = np.zeros((1, 2 ** n_total), dtype=np.complex128)
        self.amps[0, 0] = 1.0

    @property
    def vector(self) -> np.ndarray:
        return self.amps[0]

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.amps[0]) ** 2)))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amps[0]) ** 2

    def copy(self) -> "StateVector":
        out = StateVector(self.n_total)
        out.amps = self.amps.copy()
        return out

    def apply_rotation(self, qubit: int, axis: str, theta: float) -> "StateVector":
        if not np.isfinite(theta):
            raise CircuitError(f"rotation angle must be finite, got {theta}")
        rotate(self.amps, self.n_total, qubit, axis, theta)
        return self

    def apply_cnot(self, control: int, target: int) -> "StateVector":
        cnot(self.amps, self.n_total, control, target)
        return self


def apply_rotation(state: StateVector, qubit: int, axis: str, theta: float) -> StateVector:
    return state.apply_rotation(qubit, axis, theta)


def apply_cnot(state: StateVector, control: int, target: int) -> StateVector:
    return state.apply_cnot(control, target)


# -- circuit stages, batched --------------------------------------------------------

def encode_batch(amps: np.ndarray, n_total: int, features: np.ndarray) -> np.ndarray:
    """RX(features[:, j]) on main qubit j for each row; the auxiliary is untouched."""
    for j in range(features.shape[1]):
        rotate(amps, n_total, j, "X", features[:, j])
    return amps


def layer_batch(amps: np.ndarray, n_qubits: int, layer_angles: np.ndarray) -> np.ndarray:
    """One variational layer; ``layer_angles`` is ``[N, n_qubits + 1]`` or ``[n_qubits + 1]``."""
    n_total = n_qubits + 1
    angles = np.asarray(layer_angles, dtype=np.float64)
    per_row = angles.ndim == 2
    for j in range(n_qubits):
        rotate(amps, n_total, j, "Y", angles[:, j] if per_row else angles[j])
    for j in range(n_qubits):
        cnot(amps, n_total, j, (j + 1) % n_qubits)
    cnot(amps, n_total, n_qubits - 1, n_qubits)
    rotate(amps, n_total, n_qubits, "Y", angles[:, n_qubits] if per_row else angles[n_qubits])
    return amps


def expectations_batch(amps: np.ndarray, n_qubits: int) -> np.ndarray:
    """``<Z_j>`` for main qubits of each row, shape ``[N, n_qubits]``."""
    probs = amps.real ** 2 + amps.imag ** 2
    return probs @ z_signs(n_qubits + 1, n_qubits)


def run_batch(spec: CircuitSpec, theta: np.ndarray, features: np.ndarray) -> np.ndarray:
    """Evaluate many circuits at once.

    ``features`` is ``[N, n]``; ``theta`` is either shared ``[layers, n+1]`` or
    per-row ``[N, layers, n+1]``. Returns ``[N, n]`` expectation values.
    """
    features = np.atleast_2d(np.asarray(features, dtype=np.float64))
    theta = np.asarray(theta, dtype=np.float64)
    n = features.shape[0]
    if features.shape[1] != spec.n_qubits:
        raise CircuitError(f"expected {spec.n_qubits} features, got {features.shape[1]}")
    if theta.shape[-2:] != spec.param_shape:
        raise CircuitError(f"theta shape {theta.shape} does not end in {spec.param_shape}")
    amps = np.zeros((n, spec.dim), dtype=np.complex128)
    amps[:, 0] = 1.0
    encode_batch(amps, spec.n_total, features)
    for layer in range(spec.n_layers):
        layer_batch(amps, spec.n_qubits, theta[:, layer] if theta.ndim == 3 else theta[layer])
    return expectations_batch(amps, spec.n_qubits)


# -- single-circuit API -----------------------------------------------------------------

def angle_encode(state: StateVector, features) -> StateVector:
    features = np.asarray(features, dtype=np.float64)
    n_main = state.n_total - 1
    if features.shape != (n_main,):
        raise CircuitError(f"expected {n_main} features, got shape {features.shape}")
    encode_batch(state.amps, state.n_total, features[None, :])
    return state


def variational_layer(state: StateVector, layer_angles) -> StateVector:
    layer_angles = np.asarray(layer_angles, dtype=np.float64)
    if layer_angles.shape != (state.n_total,):
        raise CircuitError(f"expected {state.n_total} layer angles, got shape {layer_angles.shape}")
    layer_batch(state.amps, state.n_total - 1, layer_angles)
    return state


def pauli_z_expectations(state: StateVector) -> np.ndarray:
    return expectations_batch(state.amps, state.n_total - 1)[0]


def run_circuit(spec: CircuitSpec, params, features) -> np.ndarray:
    """Fresh ``|0...0>`` -> encode -> layers -> ``<Z_j>`` of the main register."""
    params = np.asarray(params, dtype=np.float64)
    if params.shape != spec.param_shape:
        raise CircuitError(f"params shape {params.shape} != {spec.param_shape}")
    state = StateVector(spec.n_total)
    angle_encode(state, features)
    for layer in range(spec.n_layers):
        variational_layer(state, params[layer])
    return pauli_z_expectations(state)


def circuit_jacobian(spec: CircuitSpec, params, features) -> tuple[np.ndarray, np.ndarray]:
    """Parameter-shift derivatives of ``<Z_j>``.

    Returns ``(d_theta, d_features)`` with shapes ``[n, layers, n+1]`` and
    ``[n, n]``; entry ``[j, ...]`` is the derivative of ``<Z_j>``. Every angle
    feeds exactly one rotation, so ``(f(a + pi/2) - f(a - pi/2)) / 2`` is exact.
    """
    params = np.asarray(params, dtype=np.float64)
    features = np.asarray(features, dtype=np.float64)
    n, (nl, nc) = spec.n_qubits, spec.param_shape
    n_theta = nl * nc
    rows = 2 * (n_theta + n)
    thetas = np.broadcast_to(params, (rows, nl, nc)).copy()
    feats = np.broadcast_to(features, (rows, n)).copy()
    flat = thetas.reshape(rows, n_theta)
    for k in range(n_theta):
        flat[2 * k, k] += SHIFT
        flat[2 * k + 1, k] -= SHIFT
    for j in range(n):
        r = 2 * (n_theta + j)
        feats[r, j] += SHIFT
        feats[r + 1, j] -= SHIFT
    ev = run_batch(spec, thetas, feats)
    diff = 0.5 * (ev[0::2] - ev[1::2])
    d_theta = diff[:n_theta].T.reshape(n, nl, nc)
    d_feat = diff[n_theta:].T
    return d_theta, d_feat


# -- fast path for many circuits sharing theta -----------------------------------------

def product_states(features: np.ndarray, n_qubits: int) -> np.ndarray:
    """``RX(f_0)|0> (x) ... (x) RX(f_{n-1})|0> (x) |0>`` for each row, ``[N, 2**(n+1)]``."""
    half = 0.5 * features
    factors = np.stack([np.cos(half), -1j * np.sin(half)], axis=-1)
    state = factors[:, 0, :]
    for j in range(1, n_qubits):
        state = (state[:, :, None] * factors[:, j, None, :]).reshape(features.shape[0], -1)
    out = np.zeros((features.shape[0], 2 * state.shape[1]), dtype=np.complex128)
    out[:, 0::2] = state
    return out


def _pauli_y_rows(rows: np.ndarray, n_total: int, qubit: int) -> np.ndarray:
    """Y on ``qubit`` of every row (new array)."""
    view = rows.reshape(rows.shape[0], 2 ** qubit, 2, 2 ** (n_total - qubit - 1))
    out = np.empty_like(view)
    out[:, :, 0] = -1j * view[:, :, 1]
    out[:, :, 1] = 1j * view[:, :, 0]
    return out.reshape(rows.shape)


# Above this many bytes of per-gate matrices the block falls back to gate-by-gate
# differentiation on the batch states (10 qubits x 6 layers would need ~9 GB dense).
DENSE_GRAD_BYTES = 512 * 2 ** 20


class VariationalBlock:
    """The variational stack for one ``theta``, materialised as a dense unitary.

    ``U`` is built by pushing the computational basis through the in-place
    kernels, gate by gate. The snapshots taken after each trainable rotation
    give every parameter-shifted unitary without re-simulating the circuit:
    shifting gate k by s is ``U P_k^dagger R_k(s) P_k`` with ``P_k`` the prefix
    up to and including gate k.

    When those matrices would exceed ``max_dense_bytes``, or ``n_rows`` says
    the batch is too small to pay for them, none of them is built, not even
    ``U``; states and gradients are then computed by walking the gates on the
    batch itself (same numbers, memory linear in the batch).
    """

    def __init__(self, spec: CircuitSpec, theta: np.ndarray, with_shifts: bool = False,
                 with_generators: bool | None = None, max_dense_bytes: int = DENSE_GRAD_BYTES,
                 n_rows: int | None = None):
        self.spec = spec
        self.theta = np.asarray(theta, dtype=np.float64)
        n, nt, dim = spec.n_qubits, spec.n_total, spec.dim
        if with_generators is None:
            with_generators = with_shifts
        self.with_shifts, self.with_generators = with_shifts, with_generators
        n_rot = spec.n_layers * (n + 1)
        n_mats = 1 + n_rot * ((with_shifts or with_generators) + 2 * with_shifts + with_generators)
        self.dense = n_mats * dim * dim * 16 <= max_dense_bytes
        if n_rows is not None:
            # building U and the per-gate matrices is O(dim^3) per rotation against
            # O(rows * dim) per gate on the batch; measured crossover near dim^2 = 64 rows
            self.dense = self.dense and dim * dim <= 64 * max(n_rows, 1)
        keep = (with_shifts or with_generators) and self.dense
        self.unitary: np.ndarray | None = None
        self.shifted: np.ndarray | None = None
        self.generators: np.ndarray | None = None
        if not self.dense:
            return
        rows = np.eye(dim, dtype=np.complex128)  # row r holds (prefix applied to |r>)
        snapshots: list[tuple[int, np.ndarray]] = []
        for op in self.gates():
            if op[0] == "ry":
                rotate(rows, nt, op[1], "Y", op[2])
                if keep:
                    snapshots.append((op[1], rows.copy()))
            else:
                cnot(rows, nt, op[1], op[2])
        self.unitary = rows.T.copy()
        if with_shifts and keep:
            shifted = np.empty((2 * len(snapshots), dim, dim), dtype=np.complex128)
            for k, (qubit, prefix_rows) in enumerate(snapshots):
                back = self.unitary @ prefix_rows.conj()
                for sign_i, s in enumerate((SHIFT, -SHIFT)):
                    moved = rotate(prefix_rows.copy(), nt, qubit, "Y", s)
                    shifted[2 * k + sign_i] = back @ moved.T
            self.shifted = shifted
        if with_generators and keep:
            generators = np.empty((len(snapshots), dim, dim), dtype=np.complex128)
            for k, (qubit, prefix_rows) in enumerate(snapshots):
                back = self.unitary @ prefix_rows.conj()
                generators[k] = back @ _pauli_y_rows(prefix_rows, nt, qubit).T
            self.generators = generators

    def gates(self):
        """The variational stack as ``("ry", qubit, angle, k)`` / ``("cx", control, target)``,
        with ``k`` the flat index into ``theta``."""
        n = self.spec.n_qubits
        ops = []
        for layer in range(self.spec.n_layers):
            base = layer * (n + 1)
            ops += [("ry", j, self.theta[layer, j], base + j) for j in range(n)]
            ops += [("cx", j, (j + 1) % n) for j in range(n)]
            ops += [("cx", n - 1, n), ("ry", n, self.theta[layer, n], base + n)]
        return ops

    def apply(self, states: np.ndarray) -> np.ndarray:
        if self.unitary is not None:
            return states @ self.unitary.T
        amps, nt = states.copy(), self.spec.n_total
        for op in self.gates():
            if op[0] == "ry":
                rotate(amps, nt, op[1], "Y", op[2])
            else:
                cnot(amps, nt, op[1], op[2])
        return amps

    def expectations(self, features: np.ndarray) -> np.ndarray:
        states = self.apply(product_states(features, self.spec.n_qubits))
        return expectations_batch(states, self.spec.n_qubits)

    def feature_jacobian(self, features: np.ndarray, chunk: int = 4096) -> np.ndarray:
        """``[N, n_out, n_in]`` parameter-shift derivatives w.r.t. the encoded angles."""
        n = self.spec.n_qubits
        per = max(1, chunk // (2 * n))
        parts = []
        for lo in range(0, len(features), per):
            f = features[lo:lo + per]
            m = len(f)
            shifted = np.repeat(f[:, None, :], 2 * n, axis=1)
            for j in range(n):
                shifted[:, 2 * j, j] += SHIFT
                shifted[:, 2 * j + 1, j] -= SHIFT
            ev = self.expectations(shifted.reshape(m * 2 * n, n)).reshape(m, n, 2, n)
            parts.append(0.5 * (ev[:, :, 0, :] - ev[:, :, 1, :]).transpose(0, 2, 1))
        return np.concatenate(parts) if parts else np.zeros((0, n, n))

    def theta_vjp(self, features: np.ndarray, grad_out: np.ndarray) -> np.ndarray:
        """``sum_{m,j} grad_out[m, j] * d<Z_j>_m / d theta`` via the shifted unitaries."""
        if not self.with_shifts:
            raise CircuitError("block was built without shift unitaries")
        n, dim = self.spec.n_qubits, self.spec.dim
        weights = grad_out @ z_signs(self.spec.n_total, n).T
        psi = product_states(features, n)
        if self.shifted is None:
            return self._theta_vjp_gates(psi, weights)
        k = self.shifted.shape[0]
        # one GEMM over every shifted unitary, then a per-sample diagonal observable
        states = (psi @ self.shifted.reshape(k * dim, dim).T).reshape(len(psi), k, dim)
        ev = np.einsum("mkx,mx->k", states.real ** 2 + states.imag ** 2, weights)
        return (0.5 * (ev[0::2] - ev[1::2])).reshape(self.spec.param_shape)

    def _theta_vjp_gates(self, psi: np.ndarray, weights: np.ndarray) -> np.ndarray:
        nt = self.spec.n_total
        ops = self.gates()
        out = np.zeros(self.theta.size)
        for i, op in enumerate(ops):
            if op[0] != "ry":
                continue
            ev = []
            for s in (SHIFT, -SHIFT):
                amps = psi.copy()
                for other in ops:
                    if other[0] == "cx":
                        cnot(amps, nt, other[1], other[2])
                    else:
                        rotate(amps, nt, other[1], "Y", other[2] + (s if other is op else 0.0))
                ev.append(np.sum((amps.real ** 2 + amps.imag ** 2) * weights))
            out[op[3]] = 0.5 * (ev[0] - ev[1])
        return out.reshape(self.spec.param_shape)

    def vjp(self, features: np.ndarray, grad_out: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Adjoint-form vector-Jacobian product: ``(d/d features [N, n], d/d theta)``.

        Same numbers as contracting the parameter-shift Jacobians with
        ``grad_out``. With ``v = W U psi`` (``W`` the per-row weighted Z
        observable), ``dE/dtheta_k = Im <v| A_k |psi>`` where
        ``A_k = U P_k^dagger Y_k P_k``; the batch sum collapses to one
        ``dim x dim`` correlation matrix.
        """
        if not self.with_generators:
            raise CircuitError("block was built without generator matrices")
        n, nt = self.spec.n_qubits, self.spec.n_total
        psi = product_states(features, n)
        phi = self.apply(psi)
        v = phi * (grad_out @ z_signs(nt, n).T)
        if self.generators is None:
            lam, g_theta = self._adjoint_sweep(phi, v)
        else:
            corr = v.conj().T @ psi
            g_theta = np.einsum("kxy,xy->k", self.generators, corr).imag
            lam = v @ self.unitary.conj()
        g_feat = np.stack([_im_inner_x(lam, psi, nt, j) for j in range(n)], axis=1)
        return g_feat, g_theta.reshape(self.spec.param_shape)

    def _adjoint_sweep(self, phi: np.ndarray, lam: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Undo the gates one at a time on the final states ``phi`` and the
        weighted co-states ``lam``; each RY contributes ``Im <lam|Y|phi>``.
        Returns ``(U^dagger lam, d/d theta)``. Both inputs are overwritten."""
        nt = self.spec.n_total
        g = np.zeros(self.theta.size)
        for op in reversed(self.gates()):
            if op[0] == "cx":
                cnot(phi, nt, op[1], op[2])
                cnot(lam, nt, op[1], op[2])
                continue
            _, q, angle, k = op
            g[k] = _im_inner_y(lam, phi, nt, q)
            rotate(phi, nt, q, "Y", -angle)
            rotate(lam, nt, q, "Y", -angle)
        return lam, g


def _im_inner_y(lam: np.ndarray, phi: np.ndarray, n_total: int, qubit: int) -> float:
    """Batch-summed ``Im <lam| Y_qubit |phi>`` = ``Re(l1* p0) - Re(l0* p1)``, on float views."""
    shape = (phi.shape[0], 2 ** qubit, 2, 2 ** (n_total - qubit))
    l, p = lam.view(np.float64).reshape(shape), phi.view(np.float64).reshape(shape)
    return float(np.einsum("abc,abc->", l[:, :, 1], p[:, :, 0])
                 - np.einsum("abc,abc->", l[:, :, 0], p[:, :, 1]))


def _im_inner_x(lam: np.ndarray, psi: np.ndarray, n_total: int, qubit: int) -> np.ndarray:
    """Per-row ``Im <lam| X_qubit |psi>``."""
    shape = (psi.shape[0], 2 ** qubit, 2, 2 ** (n_total - qubit - 1))
    l, p = lam.reshape(shape), psi.reshape(shape)
    inner = l[:, :, 0].conj() * p[:, :, 1] + l[:, :, 1].conj() * p[:, :, 0]
    return inner.imag.reshape(psi.shape[0], -1).sum(axis=1)
