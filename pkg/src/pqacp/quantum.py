"""Density-matrix backend for the quantum part of configurations.

Qubit ``i`` of a state is ``registers[i]``; register 0 is the most
significant tensor factor.  Gates are embedded on their targets by axis
permutation of the reshaped density tensor.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import (
    InvalidState, NonProjector, NonUnitary, RegisterMismatch, RegisterNameClash,
    UnknownRegister, ZeroProbabilityBranch,
)

EPS_Q = 1e-9

PUBLIC = "public"
INTERNAL = "internal"


@dataclass(frozen=True)
class Register:
    name: str
    visibility: str = PUBLIC

    def __post_init__(self):
        if self.visibility not in (PUBLIC, INTERNAL):
            raise ValueError(f"visibility must be {PUBLIC!r} or {INTERNAL!r}")


def _freeze(m):
    m = np.array(m, dtype=complex)
    m.flags.writeable = False
    return m


class QState:
    """Immutable density matrix over named qubit registers."""

    __slots__ = ("registers", "matrix", "_fp")

    def __init__(self, registers: Sequence, matrix, *, check: bool = True, tol: float = EPS_Q):
        regs = tuple(r if isinstance(r, Register) else Register(r) for r in registers)
        names = [r.name for r in regs]
        if len(set(names)) != len(names):
            raise RegisterNameClash(f"duplicate register names in {names}")
        m = _freeze(matrix)
        d = 2 ** len(regs)
        if m.shape != (d, d):
            raise InvalidState(f"matrix shape {m.shape} does not fit {len(regs)} qubit(s)")
        self.registers = regs
        self.matrix = m
        self._fp = None
        if check:
            validate_density(m, tol)

    @property
    def names(self) -> tuple:
        return tuple(r.name for r in self.registers)

    @property
    def nqubits(self) -> int:
        return len(self.registers)

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise UnknownRegister(f"no register named {name!r}") from None

    def public_names(self) -> tuple:
        return tuple(r.name for r in self.registers if r.visibility == PUBLIC)

    def fingerprint(self, digits: int = 6) -> bytes:
        """Hash of the rounded matrix; equal states share it except at rounding edges."""
        if self._fp is None:
            r = np.round(self.matrix, digits) + 0.0  # drops negative zeros
            h = hashlib.blake2b(self.names.__repr__().encode(), digest_size=16)
            h.update(np.ascontiguousarray(r).tobytes())
            self._fp = h.digest()
        return self._fp

    def __repr__(self):
        return f"QState({list(self.names)}, trace={np.trace(self.matrix).real:.6g})"


def validate_density(m, tol: float = EPS_Q):
    if not np.allclose(m, m.conj().T, atol=tol, rtol=0):
        raise InvalidState("density matrix is not Hermitian")
    tr = np.trace(m)
    if abs(tr - 1) > tol:
        raise InvalidState(f"trace {tr.real:.12g} differs from 1")
    ev = np.linalg.eigvalsh((m + m.conj().T) / 2)
    if ev.min() < -tol:
        raise InvalidState(f"density matrix has negative eigenvalue {ev.min():.3g}")


# ---------------------------------------------------------------- effects

@dataclass(frozen=True, eq=False)
class UnitaryEffect:
    U: np.ndarray
    targets: tuple

    def __post_init__(self):
        object.__setattr__(self, "U", _freeze(self.U))
        object.__setattr__(self, "targets", tuple(self.targets))
        _check_dims(self.U, self.targets)
        if not is_unitary(self.U):
            raise NonUnitary("matrix is not unitary")


@dataclass(frozen=True, eq=False)
class ProjectionEffect:
    P: np.ndarray
    targets: tuple
    branch_weight: Fraction = Fraction(1)
    family: str = ""
    index: int = 0

    def __post_init__(self):
        object.__setattr__(self, "P", _freeze(self.P))
        object.__setattr__(self, "targets", tuple(self.targets))
        _check_dims(self.P, self.targets)
        if not is_projector(self.P):
            raise NonProjector("matrix is not an orthogonal projector")


@dataclass(frozen=True)
class Identity:
    targets: tuple = field(default=())


def _check_dims(M, targets):
    d = 2 ** len(targets)
    if M.shape != (d, d):
        raise ValueError(f"matrix shape {M.shape} does not match {len(targets)} target(s)")
    if len(set(targets)) != len(targets):
        raise ValueError("repeated target register")


def is_unitary(U, tol: float = EPS_Q) -> bool:
    U = np.asarray(U, dtype=complex)
    return U.shape[0] == U.shape[1] and np.allclose(U.conj().T @ U, np.eye(U.shape[0]), atol=tol, rtol=0)


def is_projector(P, tol: float = EPS_Q) -> bool:
    P = np.asarray(P, dtype=complex)
    return (P.shape[0] == P.shape[1] and np.allclose(P @ P, P, atol=tol, rtol=0)
            and np.allclose(P, P.conj().T, atol=tol, rtol=0))


# ------------------------------------------------------------- operations

def _left(s: QState, M: np.ndarray, targets, rho=None) -> np.ndarray:
    """(M ⊗ I_rest) · rho, with M placed on the target registers."""
    k = s.nqubits
    axes = [s.index(t) for t in targets]
    m = len(axes)
    rho = s.matrix if rho is None else rho
    T = rho.reshape((2,) * (2 * k))
    Mt = M.reshape((2,) * (2 * m))
    out = np.tensordot(Mt, T, axes=(list(range(m, 2 * m)), axes))
    out = np.moveaxis(out, list(range(m)), axes)
    return out.reshape(2 ** k, 2 ** k)


def _sandwich(s: QState, M, targets) -> np.ndarray:
    """M ϱ M† with M embedded on the targets."""
    a = _left(s, M, targets, s.matrix.conj().T)      # M ϱ†
    return _left(s, M, targets, a.conj().T)          # M (ϱ M†)


def apply_unitary(s: QState, e: UnitaryEffect) -> QState:
    for t in e.targets:
        s.index(t)
    if not is_unitary(e.U):
        raise NonUnitary("matrix is not unitary")
    return QState(s.registers, _sandwich(s, e.U, e.targets), check=False)


def measure_probability(s: QState, e: ProjectionEffect) -> float:
    for t in e.targets:
        s.index(t)
    if not is_projector(e.P):
        raise NonProjector("matrix is not an orthogonal projector")
    p = float(np.trace(_left(s, e.P, e.targets)).real)
    return min(1.0, max(0.0, p))


def apply_projection(s: QState, e: ProjectionEffect, tol: float = EPS_Q) -> QState:
    p = measure_probability(s, e)
    if p <= tol:
        raise ZeroProbabilityBranch(f"projection has probability {p:.3g}")
    m = _sandwich(s, e.P, e.targets) / p
    return QState(s.registers, m, check=False)


def tensor(s1: QState, s2: QState) -> QState:
    clash = set(s1.names) & set(s2.names)
    if clash:
        raise RegisterNameClash(f"register name(s) {sorted(clash)} in both states")
    return QState(s1.registers + s2.registers, np.kron(s1.matrix, s2.matrix), check=False)


def reorder(s: QState, names: Sequence[str]) -> np.ndarray:
    """Matrix of s with registers permuted into the given order."""
    k = s.nqubits
    perm = [s.index(n) for n in names]
    T = s.matrix.reshape((2,) * (2 * k))
    T = np.transpose(T, perm + [p + k for p in perm])
    return T.reshape(2 ** k, 2 ** k)


def state_eq(s1: QState, s2: QState, tol: float = EPS_Q) -> bool:
    if sorted(s1.names) != sorted(s2.names):
        raise RegisterMismatch(f"register sets differ: {s1.names} vs {s2.names}")
    order = sorted(s1.names)
    a = s1.matrix if list(s1.names) == order else reorder(s1, order)
    b = s2.matrix if list(s2.names) == order else reorder(s2, order)
    return float(np.max(np.abs(a - b), initial=0.0)) <= tol


def partial_trace(s: QState, keep: Sequence[str]) -> QState:
    """Reduced state on the kept registers (in the given order)."""
    k = s.nqubits
    keep = list(keep)
    idx = [s.index(n) for n in keep]
    drop = [i for i in range(k) if i not in idx]
    T = s.matrix.reshape((2,) * (2 * k))
    letters = [chr(97 + i) for i in range(k)]
    row = letters[:]
    col = [chr(65 + i) for i in range(k)]
    for i in drop:
        col[i] = row[i]
    out = "".join(row[i] for i in idx) + "".join(col[i] for i in idx)
    M = np.einsum("".join(row) + "".join(col) + "->" + out, T)
    d = 2 ** len(keep)
    regs = [s.registers[i] for i in idx]
    return QState(regs, M.reshape(d, d), check=False)


def public_part(s: QState) -> QState:
    return partial_trace(s, s.public_names())


# ----------------------------------------------------------- constructors

def basis_state(registers: Sequence, bits: str | None = None) -> QState:
    regs = [r if isinstance(r, Register) else Register(r) for r in registers]
    bits = bits or "0" * len(regs)
    if len(bits) != len(regs):
        raise InvalidState("bit string length differs from register count")
    d = 2 ** len(regs)
    m = np.zeros((d, d), dtype=complex)
    i = int(bits, 2) if bits else 0
    m[i, i] = 1
    return QState(regs, m, check=False)


def pure_state(registers: Sequence, vec) -> QState:
    v = np.asarray(vec, dtype=complex).reshape(-1)
    n = np.linalg.norm(v)
    if n == 0:
        raise InvalidState("zero vector")
    v = v / n
    return QState(registers, np.outer(v, v.conj()))


def random_density(nqubits: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Random density matrix (Ginibre construction)."""
    d = 2 ** nqubits
    r = rank or d
    G = rng.normal(size=(d, r)) + 1j * rng.normal(size=(d, r))
    m = G @ G.conj().T
    return m / np.trace(m)


# common gates
I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
CNOT = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)
SWAP = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex)
P0 = np.array([[1, 0], [0, 0]], dtype=complex)
P1 = np.array([[0, 0], [0, 1]], dtype=complex)


def kron_all(mats) -> np.ndarray:
    out = np.eye(1, dtype=complex)
    for m in mats:
        out = np.kron(out, m)
    return out


def basis_projector(bits: str) -> np.ndarray:
    d = 2 ** len(bits)
    P = np.zeros((d, d), dtype=complex)
    i = int(bits, 2)
    P[i, i] = 1
    return P
