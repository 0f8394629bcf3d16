"""Dense statevector simulation of the model's quantum hidden layer.

Conventions, fixed once and relied on everywhere:
  - qubit 0 is the most significant bit of the basis-state index, so
    |q0 q1 ... q_{N-1}> sits at index sum_j q_j * 2^(N-1-j);
  - Rot(phi, theta, omega) = RZ(omega) @ RY(theta) @ RZ(phi), i.e. RZ(phi)
    acts first;
  - RZ(a) = diag(exp(-ia/2), exp(+ia/2)), RY(a) = [[cos a/2, -sin a/2],
    [sin a/2, cos a/2]], both of the form exp(-i * a * P / 2);
  - amplitudes are complex128, angles float64.

Kernels accept amplitude arrays of shape (..., 2^N) so whole batches of
states advance per call; the single-state API wraps the same kernels.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

# Below this L2 norm an embedding input is treated as zero and mapped to
# |0...0>, with all input derivatives defined as zero.
ZERO_NORM_THRESHOLD = 1e-12

_PAULI_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=np.complex128)


def _num_qubits_for(dim: int) -> int:
    if dim < 2 or dim & (dim - 1):
        raise ValueError(f"amplitude vector length must be a power of two >= 2, got {dim}")
    return dim.bit_length() - 1


@dataclass
class Statevector:
    """Pure N-qubit state held as 2^N dense complex amplitudes."""

    amplitudes: np.ndarray
    num_qubits: int

    @classmethod
    def zero(cls, num_qubits: int) -> Statevector:
        if num_qubits < 1:
            raise ValueError(f"need at least one qubit, got {num_qubits}")
        amps = np.zeros(1 << num_qubits, dtype=np.complex128)
        amps[0] = 1.0
        return cls(amps, num_qubits)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


@dataclass
class CircuitParams:
    """Rotation angles of the layered ansatz, shaped (layers, qubits, 3)."""

    angles: np.ndarray

    def __post_init__(self):
        self.angles = np.asarray(self.angles, dtype=np.float64)
        if self.angles.ndim != 3 or self.angles.shape[2] != 3:
            raise ValueError(f"angles must have shape (K, N, 3), got {self.angles.shape}")
        if self.angles.shape[0] < 1 or self.angles.shape[1] < 1:
            raise ValueError(f"need K >= 1 and N >= 1, got shape {self.angles.shape}")

    @property
    def num_layers(self) -> int:
        return self.angles.shape[0]

    @property
    def num_qubits(self) -> int:
        return self.angles.shape[1]

    @property
    def num_params(self) -> int:
        return self.angles.size

    @classmethod
    def random(cls, num_layers: int, num_qubits: int, rng: np.random.Generator) -> CircuitParams:
        return cls(rng.uniform(0.0, 2.0 * np.pi, size=(num_layers, num_qubits, 3)))


@dataclass
class GradientResult:
    """Gradients of the N Pauli-Z expectations of one circuit evaluation.

    d_params[k, q, p, o] = d<Z_o> / d angles[k, q, p]
    d_input[o, i]        = d<Z_o> / d input_v[i]   (None for methods that
    do not differentiate through the embedding)
    """

    d_params: np.ndarray
    d_input: np.ndarray | None


def _rz(angle: float) -> np.ndarray:
    half = 0.5 * angle
    return np.array([[np.exp(-1j * half), 0.0], [0.0, np.exp(1j * half)]], dtype=np.complex128)


def _ry(angle: float) -> np.ndarray:
    c, s = np.cos(0.5 * angle), np.sin(0.5 * angle)
    return np.array([[c, -s], [s, c]], dtype=np.complex128)


def _ry_real(angle: float) -> np.ndarray:
    c, s = np.cos(0.5 * angle), np.sin(0.5 * angle)
    return np.array([[c, -s], [s, c]], dtype=np.float64)


def rot_matrix(phi: float, theta: float, omega: float) -> np.ndarray:
    """2x2 matrix of Rot(phi, theta, omega); RZ(phi) is applied first."""
    return _rz(omega) @ _ry(theta) @ _rz(phi)


def _apply_1q(amps: np.ndarray, num_qubits: int, qubit: int, u: np.ndarray) -> np.ndarray:
    """Apply a 2x2 matrix to one qubit of amplitudes shaped (..., 2^N).

    Every branch computes the same 2-term dot per output element, so batching
    cannot reassociate sums; the dispatch only picks the fastest memory
    layout for the stride at this qubit position.
    """
    lead = amps.shape[:-1]
    right = 1 << (num_qubits - qubit - 1)
    if right == 1:
        out = amps.reshape(-1, 2) @ u.T
    elif right <= 8:
        x = amps.reshape(-1, 2, right)
        y = np.ascontiguousarray(x.transpose(1, 0, 2).reshape(2, -1))
        out = (u @ y).reshape(2, -1, right).transpose(1, 0, 2)
    else:
        out = np.matmul(u, amps.reshape(-1, 2, right))
    return out.reshape(*lead, 1 << num_qubits)


def _apply_1q_real(amps: np.ndarray, num_qubits: int, qubit: int, u: np.ndarray) -> np.ndarray:
    """Apply a real 2x2 matrix to one qubit of complex amplitudes.

    A real matrix mixes real and imaginary parts independently, so the
    interleaved float64 view gives the same result at half the arithmetic.
    """
    lead = amps.shape[:-1]
    right = 1 << (num_qubits - qubit - 1)
    if right == 1:
        out = amps.reshape(-1, 2) @ u.T.astype(np.complex128)
        return out.reshape(*lead, 1 << num_qubits)
    xr = amps.view(np.float64).reshape(-1, 2, 2 * right)
    out = np.matmul(u, xr)
    return out.view(np.complex128).reshape(*lead, 1 << num_qubits)


@lru_cache(maxsize=None)
def _cnot_perm(num_qubits: int, control: int, target: int) -> np.ndarray:
    # CNOT permutes basis states and is an involution, so gathering with its
    # own permutation applies it.
    idx = np.arange(1 << num_qubits)
    cbit = 1 << (num_qubits - 1 - control)
    tbit = 1 << (num_qubits - 1 - target)
    return np.where(idx & cbit, idx ^ tbit, idx)


def _apply_cnot(amps: np.ndarray, num_qubits: int, control: int, target: int) -> np.ndarray:
    return amps[..., _cnot_perm(num_qubits, control, target)]


@lru_cache(maxsize=None)
def _entangler_perm(num_qubits: int) -> np.ndarray:
    """The whole circular entangler CNOT(i, (i+1) mod N), i ascending, as one
    basis permutation; gathers are exact, so fusing changes no amplitude."""
    perm = np.arange(1 << num_qubits)
    for i in range(num_qubits):
        perm = perm[_cnot_perm(num_qubits, i, (i + 1) % num_qubits)]
    return perm


@lru_cache(maxsize=None)
def _entangler_perm_inv(num_qubits: int) -> np.ndarray:
    return np.argsort(_entangler_perm(num_qubits))


@lru_cache(maxsize=None)
def _z_signs(num_qubits: int) -> np.ndarray:
    """(N, 2^N) matrix; row q holds the Z eigenvalue of each basis state on qubit q."""
    idx = np.arange(1 << num_qubits)
    bits = (idx >> (num_qubits - 1 - np.arange(num_qubits)[:, None])) & 1
    return (1.0 - 2.0 * bits).astype(np.float64)


def _check_qubit(num_qubits: int, qubit: int) -> None:
    if not 0 <= qubit < num_qubits:
        raise ValueError(f"qubit index {qubit} out of range for {num_qubits} qubits")


def amplitude_embed(input_v: np.ndarray) -> Statevector:
    """L2-normalize a real vector of length 2^N into an N-qubit state.

    A vector with norm below ZERO_NORM_THRESHOLD maps to |0...0>.
    """
    v = np.asarray(input_v, dtype=np.float64)
    if v.ndim != 1:
        raise ValueError(f"embedding input must be a vector, got shape {v.shape}")
    n = _num_qubits_for(v.size)
    if not np.all(np.isfinite(v)):
        raise ValueError("embedding input contains non-finite entries")
    amps = np.zeros(v.size, dtype=np.complex128)
    norm = float(np.linalg.norm(v))
    if norm < ZERO_NORM_THRESHOLD:
        amps[0] = 1.0
    else:
        amps[:] = v / norm
    return Statevector(amps, n)


def apply_rot(state: Statevector, qubit: int, phi: float, theta: float, omega: float) -> Statevector:
    _check_qubit(state.num_qubits, qubit)
    u = rot_matrix(phi, theta, omega)
    return Statevector(_apply_1q(state.amplitudes, state.num_qubits, qubit, u), state.num_qubits)


def apply_cnot(state: Statevector, control: int, target: int) -> Statevector:
    _check_qubit(state.num_qubits, control)
    _check_qubit(state.num_qubits, target)
    if control == target:
        raise ValueError(f"control and target must differ, both are {control}")
    return Statevector(
        _apply_cnot(state.amplitudes, state.num_qubits, control, target), state.num_qubits
    )


def ansatz_amps(amps: np.ndarray, num_qubits: int, angles: np.ndarray) -> np.ndarray:
    """Run the layered ansatz over amplitudes shaped (..., 2^N).

    Each layer applies Rot(*angles[k, q]) to every qubit, then the circular
    entangler CNOT(i, (i+1) mod N) for i ascending; N=1 has no entangler.
    """
    for layer in angles:
        for q in range(num_qubits):
            amps = _apply_1q(amps, num_qubits, q, rot_matrix(*layer[q]))
        if num_qubits > 1:
            amps = amps[..., _entangler_perm(num_qubits)]
    return amps


def run_ansatz(state: Statevector, params: CircuitParams) -> Statevector:
    if params.num_qubits != state.num_qubits:
        raise ValueError(
            f"params are for {params.num_qubits} qubits, state has {state.num_qubits}"
        )
    return Statevector(
        ansatz_amps(state.amplitudes, state.num_qubits, params.angles), state.num_qubits
    )


def z_expectations_amps(amps: np.ndarray, num_qubits: int) -> np.ndarray:
    """Per-qubit <Z> of amplitudes shaped (..., 2^N); returns (..., N) float64."""
    probs = amps.real**2 + amps.imag**2
    return probs @ _z_signs(num_qubits).T


def pauli_z_expectations(state: Statevector) -> np.ndarray:
    return z_expectations_amps(state.amplitudes, state.num_qubits)


# --- embedding as a differentiable map over batches -------------------------

def embed_unit_batch(v: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Normalize rows of a real (..., 2^N) array.

    Returns (unit, norms, fallback); fallback rows are |0...0>.
    """
    v = np.asarray(v, dtype=np.float64)
    norms = np.linalg.norm(v, axis=-1)
    fallback = norms < ZERO_NORM_THRESHOLD
    safe = np.where(fallback, 1.0, norms)
    unit = v / safe[..., None]
    if fallback.any():
        unit[fallback] = 0.0
        unit[fallback, ..., 0] = 1.0
    return unit, norms, fallback


def embed_backward(
    d_unit: np.ndarray, unit: np.ndarray, norms: np.ndarray, fallback: np.ndarray
) -> np.ndarray:
    """Pull a gradient w.r.t. normalized amplitudes back to the raw vector.

    With u = v / |v|, the Jacobian is (I - u u^T) / |v|; fallback rows get a
    zero gradient by definition.
    """
    proj = np.sum(d_unit * unit, axis=-1, keepdims=True)
    safe = np.where(fallback, 1.0, norms)
    out = (d_unit - proj * unit) / safe[..., None]
    if fallback.any():
        out[fallback] = 0.0
    return out


# --- gradients ---------------------------------------------------------------

def _op_sequence(angles: np.ndarray) -> list[tuple]:
    """Ansatz as elementary ops: ('rz'|'ry', qubit, angle, angle_index) and
    ('cnot', control, target, None)."""
    num_layers, num_qubits, _ = angles.shape
    ops: list[tuple] = []
    for k in range(num_layers):
        for q in range(num_qubits):
            ops.append(("rz", q, angles[k, q, 0], (k, q, 0)))
            ops.append(("ry", q, angles[k, q, 1], (k, q, 1)))
            ops.append(("rz", q, angles[k, q, 2], (k, q, 2)))
        if num_qubits > 1:
            for i in range(num_qubits):
                ops.append(("cnot", i, (i + 1) % num_qubits, None))
    return ops


def _unapply_op(amps: np.ndarray, num_qubits: int, op: tuple) -> np.ndarray:
    kind, a, b, _ = op
    if kind == "cnot":
        return _apply_cnot(amps, num_qubits, a, b)
    gate = _rz(-b) if kind == "rz" else _ry(-b)
    return _apply_1q(amps, num_qubits, a, gate)


def _apply_generator(amps: np.ndarray, num_qubits: int, op: tuple) -> np.ndarray:
    kind, qubit = op[0], op[1]
    if kind == "rz":
        return amps * _z_signs(num_qubits)[qubit]
    return _apply_1q(amps, num_qubits, qubit, _PAULI_Y)


def _embed_for_gradient(input_v: np.ndarray) -> tuple[np.ndarray, np.ndarray, float, bool, int]:
    v = np.asarray(input_v, dtype=np.float64)
    if v.ndim != 1:
        raise ValueError(f"embedding input must be a vector, got shape {v.shape}")
    n = _num_qubits_for(v.size)
    if not np.all(np.isfinite(v)):
        raise ValueError("embedding input contains non-finite entries")
    norm = float(np.linalg.norm(v))
    fallback = norm < ZERO_NORM_THRESHOLD
    psi0 = np.zeros(v.size, dtype=np.complex128)
    if fallback:
        psi0[0] = 1.0
    else:
        psi0[:] = v / norm
    return v, psi0, norm, fallback, n


def gradients_adjoint(input_v: np.ndarray, params: CircuitParams) -> GradientResult:
    """All-observable gradients in one forward pass plus one backward sweep.

    For each rotation exp(-i * angle * P / 2) the derivative of <Z_o> is
    Im(<lambda_o| P |psi>) evaluated just after that gate, where lambda_o is
    Z_o |psi_final> pulled back through the later gates. After the full sweep
    lambda_o equals U^dag Z_o U |psi_0>, which yields the embedding gradient
    2 Re(lambda_o) chained through the normalization Jacobian.
    """
    v, psi0, norm, fallback, n = _embed_for_gradient(input_v)
    if params.num_qubits != n:
        raise ValueError(f"params are for {params.num_qubits} qubits, input has {n}")
    ops = _op_sequence(params.angles)
    psi = psi0
    for op in ops:
        kind, a, b, _ = op
        if kind == "cnot":
            psi = _apply_cnot(psi, n, a, b)
        else:
            psi = _apply_1q(psi, n, a, _rz(b) if kind == "rz" else _ry(b))
    lam = _z_signs(n) * psi[None, :]  # (N, 2^N): row o is Z_o |psi_final>

    d_params = np.zeros(params.angles.shape + (n,), dtype=np.float64)
    for op in reversed(ops):
        if op[0] != "cnot":
            g_psi = _apply_generator(psi, n, op)
            d_params[op[3]] = (lam.conj() @ g_psi).imag
        psi = _unapply_op(psi, n, op)
        lam = _unapply_op(lam, n, op)

    if fallback:
        d_input = np.zeros((n, v.size), dtype=np.float64)
    else:
        d_embed = 2.0 * lam.real  # (N, 2^N): d<Z_o>/d psi0, psi0 real
        unit = v / norm
        proj = d_embed @ unit
        d_input = (d_embed - proj[:, None] * unit[None, :]) / norm
    return GradientResult(d_params, d_input)


def gradients_parameter_shift(input_v: np.ndarray, params: CircuitParams) -> GradientResult:
    """Exact angle gradients from +-pi/2 shifted evaluations.

    Valid because every rotation's generator has eigenvalues +-1/2. Does not
    differentiate through the embedding (d_input is None).
    """
    _, psi0, _, _, n = _embed_for_gradient(input_v)
    if params.num_qubits != n:
        raise ValueError(f"params are for {params.num_qubits} qubits, input has {n}")
    angles = params.angles
    d_params = np.zeros(angles.shape + (n,), dtype=np.float64)
    for idx in np.ndindex(angles.shape):
        shifted = angles.copy()
        shifted[idx] += 0.5 * np.pi
        e_plus = z_expectations_amps(ansatz_amps(psi0, n, shifted), n)
        shifted[idx] -= np.pi
        e_minus = z_expectations_amps(ansatz_amps(psi0, n, shifted), n)
        d_params[idx] = 0.5 * (e_plus - e_minus)
    return GradientResult(d_params, None)


def _rz_phases(num_qubits: int, qubit: int, angle: float) -> np.ndarray:
    """Diagonal of RZ(angle) on one qubit over the full basis."""
    half = 0.5 * angle
    return np.where(_z_signs(num_qubits)[qubit] > 0.0,
                    np.exp(-1j * half), np.exp(1j * half))


def _rz_vjp_term(lam: np.ndarray, psi: np.ndarray, num_qubits: int, qubit: int) -> float:
    # Im(<lam| Z_q |psi>) without materializing Z_q |psi>
    dim = 1 << num_qubits
    zrow = _z_signs(num_qubits)[qubit]
    lm = lam.reshape(-1, dim)
    x = psi.reshape(-1, dim)
    return float(np.einsum("bd,bd,d->", lm.real, x.imag, zrow)
                 - np.einsum("bd,bd,d->", lm.imag, x.real, zrow))


def _ry_vjp_term(lam: np.ndarray, psi: np.ndarray, num_qubits: int, qubit: int) -> float:
    # Im(<lam| Y_q |psi>) = Re(sum conj(lam_1) psi_0 - conj(lam_0) psi_1)
    right = 1 << (num_qubits - qubit - 1)
    x = psi.reshape(-1, 2, right)
    lm = lam.reshape(-1, 2, right)
    x0, x1 = x[:, 0], x[:, 1]
    l0, l1 = lm[:, 0], lm[:, 1]
    return float(np.einsum("ar,ar->", l1.real, x0.real)
                 + np.einsum("ar,ar->", l1.imag, x0.imag)
                 - np.einsum("ar,ar->", l0.real, x1.real)
                 - np.einsum("ar,ar->", l0.imag, x1.imag))


def ansatz_vjp(
    amps_out: np.ndarray, num_qubits: int, angles: np.ndarray, upstream: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Batched vector-Jacobian product through expectations and ansatz.

    amps_out: (..., 2^N) final amplitudes of the forward pass.
    upstream: (..., N) dL/d<Z>, one weight row per batch element.
    Returns (d_angles summed over the batch, d_unit (..., 2^N)) where d_unit
    is the loss gradient w.r.t. the real embedded amplitudes.

    Walks the circuit backwards layer by layer; each angle's contribution is
    Im(<lam| P |psi>) with psi just after that gate, reduced over the batch
    in place. RZ gates unapply as diagonal phase multiplies.
    """
    signs = _z_signs(num_qubits)
    lam = (upstream @ signs).astype(np.complex128) * amps_out
    psi = amps_out.copy()  # private buffers allow in-place phase multiplies
    d_angles = np.zeros(angles.shape, dtype=np.float64)
    num_layers = angles.shape[0]
    for k in range(num_layers - 1, -1, -1):
        if num_qubits > 1:
            inv = _entangler_perm_inv(num_qubits)
            psi = psi[..., inv]
            lam = lam[..., inv]
        for q in range(num_qubits - 1, -1, -1):
            phi, theta, omega = angles[k, q]
            d_angles[k, q, 2] = _rz_vjp_term(lam, psi, num_qubits, q)
            phases = np.conj(_rz_phases(num_qubits, q, omega))
            np.multiply(psi, phases, out=psi)
            np.multiply(lam, phases, out=lam)
            d_angles[k, q, 1] = _ry_vjp_term(lam, psi, num_qubits, q)
            inv_ry = _ry_real(-theta)
            psi = _apply_1q_real(psi, num_qubits, q, inv_ry)
            lam = _apply_1q_real(lam, num_qubits, q, inv_ry)
            d_angles[k, q, 0] = _rz_vjp_term(lam, psi, num_qubits, q)
            phases = np.conj(_rz_phases(num_qubits, q, phi))
            np.multiply(psi, phases, out=psi)
            np.multiply(lam, phases, out=lam)
    return d_angles, 2.0 * lam.real
