"""Brute-force references the tests compare the fast paths against.

Everything here is built the slow, obvious way: dense 2^N x 2^N matrices via
Kronecker products, CNOT from its truth table, rotations from explicit
cos/sin entries, derivatives from central differences. Nothing imports the
package's kernels.
"""
from __future__ import annotations

from functools import reduce

import numpy as np

I2 = np.eye(2, dtype=np.complex128)


def oracle_rz(angle: float) -> np.ndarray:
    h = 0.5 * angle
    return np.array(
        [[np.cos(h) - 1j * np.sin(h), 0.0], [0.0, np.cos(h) + 1j * np.sin(h)]],
        dtype=np.complex128,
    )


def oracle_ry(angle: float) -> np.ndarray:
    h = 0.5 * angle
    return np.array([[np.cos(h), -np.sin(h)], [np.sin(h), np.cos(h)]], dtype=np.complex128)


def oracle_rot(phi: float, theta: float, omega: float) -> np.ndarray:
    return oracle_rz(omega) @ oracle_ry(theta) @ oracle_rz(phi)


def dense_1q(u: np.ndarray, qubit: int, num_qubits: int) -> np.ndarray:
    """Lift a 2x2 matrix to the full space; qubit 0 is the leftmost kron factor."""
    factors = [I2] * num_qubits
    factors[qubit] = u
    return reduce(np.kron, factors)


def dense_cnot(num_qubits: int, control: int, target: int) -> np.ndarray:
    """CNOT from its truth table over basis states (qubit 0 = most significant bit)."""
    dim = 1 << num_qubits
    m = np.zeros((dim, dim), dtype=np.complex128)
    for b in range(dim):
        control_set = (b >> (num_qubits - 1 - control)) & 1
        out = b ^ (1 << (num_qubits - 1 - target)) if control_set else b
        m[out, b] = 1.0
    return m


def dense_z(num_qubits: int, qubit: int) -> np.ndarray:
    z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=np.complex128)
    return dense_1q(z, qubit, num_qubits)


def dense_ansatz(angles: np.ndarray, num_qubits: int) -> np.ndarray:
    """Full unitary of the layered ansatz as an explicit matrix product."""
    dim = 1 << num_qubits
    u = np.eye(dim, dtype=np.complex128)
    for layer in angles:
        for q in range(num_qubits):
            u = dense_1q(oracle_rot(*layer[q]), q, num_qubits) @ u
        if num_qubits > 1:
            for i in range(num_qubits):
                u = dense_cnot(num_qubits, i, (i + 1) % num_qubits) @ u
    return u


def dense_circuit_expectations(input_v: np.ndarray, angles: np.ndarray) -> np.ndarray:
    """Embed, run the dense ansatz matrix, read out every <Z_q>."""
    v = np.asarray(input_v, dtype=np.float64)
    num_qubits = int(np.log2(v.size))
    norm = np.linalg.norm(v)
    psi = np.zeros(v.size, dtype=np.complex128)
    if norm < 1e-12:
        psi[0] = 1.0
    else:
        psi[:] = v / norm
    psi = dense_ansatz(angles, num_qubits) @ psi
    return np.array(
        [np.vdot(psi, dense_z(num_qubits, q) @ psi).real for q in range(num_qubits)]
    )


def central_difference(f, x: np.ndarray, step: float = 1e-6) -> np.ndarray:
    """Elementwise central differences of f at x; f maps x to scalar or array."""
    x = np.asarray(x, dtype=np.float64)
    probe = np.asarray(f(x))
    grad = np.zeros(x.shape + probe.shape, dtype=np.float64)
    flat = x.reshape(-1)
    for i in range(flat.size):
        old = flat[i]
        flat[i] = old + step
        hi = np.asarray(f(x))
        flat[i] = old - step
        lo = np.asarray(f(x))
        flat[i] = old
        grad.reshape(flat.size, -1)[i] = ((hi - lo) / (2.0 * step)).reshape(-1)
    return grad


def relative_mismatch(candidate: np.ndarray, reference: np.ndarray, floor: float = 1e-8) -> float:
    """Largest elementwise relative error over entries whose reference
    magnitude exceeds `floor`; 0.0 when the mask is empty."""
    candidate = np.asarray(candidate, dtype=np.float64)
    reference = np.asarray(reference, dtype=np.float64)
    mask = np.abs(reference) > floor
    if not mask.any():
        return 0.0
    return float(np.max(np.abs(candidate[mask] - reference[mask]) / np.abs(reference[mask])))
