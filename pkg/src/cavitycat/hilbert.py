"""Truncated Hilbert spaces: bases, states, operators and tensor products.

Amplitudes are stored in row-major order over the basis factors, so for a
basis ``[Qubit, FockMode(n)]`` the amplitude of ``|p, m>`` sits at index
``p * (n + 1) + m``.

Collective spins use the Dicke ordering: index ``k`` counts excited atoms and
``J_z = k - N/2``, which is the Holstein-Primakoff identification
``J_z = b^dag b - N/2``.
"""
from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass
from functools import reduce
from typing import Sequence, Union

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components
from scipy.special import gammainc, gammaln

from .errors import (
    BasisMismatchError,
    DomainError,
    NonHermitianError,
    TruncationError,
)

#: Tail weight a truncated coherent state may discard.
TAIL_TOLERANCE = 1e-10
#: Operators sparser than this are stored in CSR form.
SPARSE_DENSITY = 0.10
HERMITIAN_TOLERANCE = 1e-12


class Kind(str, enum.Enum):
    FOCK = "fock"
    QUBIT = "qubit"
    SPIN = "spin"


@dataclass(frozen=True)
class Subsystem:
    """One tensor factor.

    ``size`` is the Fock cutoff ``n_max`` for :attr:`Kind.FOCK`, the atom
    number ``N`` for :attr:`Kind.SPIN` and is ignored for qubits.
    """

    kind: Kind
    size: int = 1

    def __post_init__(self):
        if self.kind is Kind.QUBIT:
            object.__setattr__(self, "size", 1)
        elif int(self.size) != self.size or self.size < 1:
            raise DomainError(f"{self.kind.value} factor needs size >= 1, got {self.size}")
        object.__setattr__(self, "size", int(self.size))

    @property
    def dim(self) -> int:
        return 2 if self.kind is Kind.QUBIT else self.size + 1

    def __repr__(self):
        if self.kind is Kind.QUBIT:
            return "Qubit()"
        name = "FockMode" if self.kind is Kind.FOCK else "CollectiveSpin"
        return f"{name}({self.size})"


def FockMode(cutoff: int) -> Subsystem:
    return Subsystem(Kind.FOCK, cutoff)


def Qubit() -> Subsystem:
    return Subsystem(Kind.QUBIT)


def CollectiveSpin(N: int) -> Subsystem:
    return Subsystem(Kind.SPIN, N)


@dataclass(frozen=True)
class Basis:
    """Ordered list of tensor factors."""

    factors: tuple

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(self.factors))
        if not self.factors:
            raise DomainError("a basis needs at least one factor")

    @property
    def dims(self) -> tuple:
        return tuple(f.dim for f in self.factors)

    @property
    def total_dim(self) -> int:
        return int(np.prod(self.dims))

    def __len__(self):
        return len(self.factors)

    def __add__(self, other: "Basis") -> "Basis":
        return Basis(self.factors + other.factors)

    def __repr__(self):
        return " ⊗ ".join(map(repr, self.factors))


def as_basis(spec: Union[Basis, Subsystem, Sequence[Subsystem]]) -> Basis:
    if isinstance(spec, Basis):
        return spec
    if isinstance(spec, Subsystem):
        return Basis((spec,))
    return Basis(tuple(spec))


# --------------------------------------------------------------------------
# states


@dataclass(frozen=True, eq=False)
class StateVector:
    """Pure state over a tensor-product basis. Amplitudes are read-only."""

    basis: Basis
    amplitudes: np.ndarray

    def __post_init__(self):
        basis = as_basis(self.basis)
        amps = np.array(self.amplitudes, dtype=complex).ravel()
        if amps.size != basis.total_dim:
            raise DomainError(
                f"{amps.size} amplitudes do not fit basis {basis} of dimension {basis.total_dim}"
            )
        amps.setflags(write=False)
        object.__setattr__(self, "basis", basis)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def dim(self) -> int:
        return self.basis.total_dim

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self) -> "StateVector":
        nrm = self.norm()
        if nrm == 0.0:
            raise DomainError("cannot normalize the zero vector")
        return StateVector(self.basis, self.amplitudes / nrm)

    def tensor_view(self) -> np.ndarray:
        """Amplitudes reshaped to one axis per factor."""
        return self.amplitudes.reshape(self.basis.dims)

    def populations(self, factor: int) -> np.ndarray:
        """Marginal level populations of one factor."""
        t = np.abs(self.tensor_view()) ** 2
        axes = tuple(i for i in range(len(self.basis)) if i != factor)
        return t.sum(axis=axes) if axes else t

    def expect(self, op: "Operator") -> complex:
        return inner_product(self, op @ self)

    def __repr__(self):
        return f"StateVector({self.basis}, norm={self.norm():.12g})"


def _check_cutoff(cutoff) -> int:
    if int(cutoff) != cutoff or cutoff < 1:
        raise DomainError(f"Fock cutoff must be an integer >= 1, got {cutoff}")
    return int(cutoff)


def fock_state(n: int, cutoff: int) -> StateVector:
    cutoff = _check_cutoff(cutoff)
    if int(n) != n or not 0 <= n <= cutoff:
        raise DomainError(f"Fock level {n} outside 0..{cutoff}")
    amps = np.zeros(cutoff + 1, dtype=complex)
    amps[int(n)] = 1.0
    return StateVector(Basis((FockMode(cutoff),)), amps)


def qubit_state(c0: complex, c1: complex) -> StateVector:
    """Normalized ``c0|0> + c1|1>``."""
    return StateVector(Basis((Qubit(),)), [c0, c1]).normalized()


def default_cutoff(alpha: complex) -> int:
    """Cutoff rule ``ceil(|a|^2 + 8|a| + 10)``.

    Keeps the discarded Poisson tail below 1e-10 for ``|alpha|^2 <= 400``.
    """
    r = abs(alpha)
    return int(math.ceil(r * r + 8.0 * r + 10.0))


def poisson_tail(mean: float, cutoff: int) -> float:
    """Weight of a Poisson distribution beyond ``cutoff``."""
    if mean == 0.0:
        return 0.0
    return float(gammainc(cutoff + 1, mean))


def _required_cutoff(mean: float, tol: float) -> int:
    c = max(1, int(mean))
    while poisson_tail(mean, c) >= tol:
        c += max(1, c // 8)
    while c > 1 and poisson_tail(mean, c - 1) < tol:
        c -= 1
    return c


def coherent_amplitudes(alpha: complex, cutoff: int) -> np.ndarray:
    """Untruncated-normalization amplitudes ``e^{-|a|^2/2} a^n / sqrt(n!)``."""
    n = np.arange(cutoff + 1)
    r = abs(alpha)
    if r == 0.0:
        out = np.zeros(cutoff + 1, dtype=complex)
        out[0] = 1.0
        return out
    logmag = -0.5 * r * r + n * math.log(r) - 0.5 * gammaln(n + 1)
    return np.exp(logmag) * np.exp(1j * n * np.angle(alpha))


def coherent_state(alpha: complex, cutoff: int | None = None, tol: float = TAIL_TOLERANCE) -> StateVector:
    """Truncated coherent state, renormalized after truncation.

    Raises
    ------
    TruncationError
        If the Poisson weight above ``cutoff`` exceeds ``tol``. The error
        carries the smallest adequate cutoff in ``required_cutoff``.
    """
    cutoff = default_cutoff(alpha) if cutoff is None else _check_cutoff(cutoff)
    mean = abs(alpha) ** 2
    tail = poisson_tail(mean, cutoff)
    if tail > tol:
        need = _required_cutoff(mean, tol)
        raise TruncationError(
            f"cutoff {cutoff} discards weight {tail:.3g} of |alpha={alpha}>; use cutoff >= {need}",
            required_cutoff=need,
        )
    amps = coherent_amplitudes(alpha, cutoff)
    return StateVector(Basis((FockMode(cutoff),)), amps / np.linalg.norm(amps))


def dicke_state(N: int, k: int) -> StateVector:
    """Symmetric state with ``k`` of ``N`` atoms excited."""
    if not 0 <= k <= N:
        raise DomainError(f"excitation {k} outside 0..{N}")
    amps = np.zeros(N + 1, dtype=complex)
    amps[k] = 1.0
    return StateVector(Basis((CollectiveSpin(N),)), amps)


def atomic_coherent_state(N: int, eta: complex) -> StateVector:
    """Spin-coherent state with mean excitation ``|eta|^2``.

    Obtained by rotating the zero-excitation Dicke state,
    ``|zeta> ∝ exp(zeta J_+)|J_z = -N/2>``, with ``zeta`` fixed by
    ``N |zeta|^2 / (1 + |zeta|^2) = |eta|^2``. For ``|eta|^2 / N -> 0`` the
    amplitudes tend to those of the bosonic coherent state ``|eta>``.
    """
    if int(N) != N or N < 1:
        raise DomainError(f"atom number must be a positive integer, got {N}")
    N = int(N)
    m = abs(eta) ** 2
    if m > N:
        raise DomainError(f"mean excitation |eta|^2 = {m:g} exceeds N = {N}")
    if m / N > 0.1:
        warnings.warn(
            f"excitation fraction {m / N:.3g} is not small; the bosonic picture is inaccurate",
            stacklevel=2,
        )
    if m == 0.0:
        return dicke_state(N, 0)
    if m == N:
        return StateVector(Basis((CollectiveSpin(N),)), np.eye(N + 1)[N] * np.exp(1j * N * np.angle(eta)))
    k = np.arange(N + 1)
    log_z2 = math.log(m) - math.log(N - m)
    logc = 0.5 * (gammaln(N + 1) - gammaln(k + 1) - gammaln(N - k + 1)) + 0.5 * k * log_z2
    amps = np.exp(logc - logc.max()) * np.exp(1j * k * np.angle(eta))
    return StateVector(Basis((CollectiveSpin(N),)), amps / np.linalg.norm(amps))


# --------------------------------------------------------------------------
# operators


class Operator:
    """Matrix on a basis, stored dense or CSR depending on fill.

    Hermitian-flagged operators are checked on construction.
    """

    def __init__(self, basis, matrix, hermitian: bool = False, storage: str | None = None):
        basis = as_basis(basis)
        n = basis.total_dim
        if sp.issparse(matrix):
            m = sp.csr_array(matrix, dtype=complex)
        else:
            m = np.asarray(matrix, dtype=complex)
        if m.shape != (n, n):
            raise DomainError(f"matrix shape {m.shape} does not match basis dimension {n}")
        if storage is None:
            nnz = m.nnz if sp.issparse(m) else np.count_nonzero(m)
            storage = "sparse" if nnz < SPARSE_DENSITY * n * n else "dense"
        if storage == "sparse":
            m = sp.csr_array(m)
            m.eliminate_zeros()
        elif storage == "dense":
            m = m.toarray() if sp.issparse(m) else m.copy()
            m.setflags(write=False)
        else:
            raise DomainError(f"unknown storage {storage!r}")
        self.basis = basis
        self.matrix = m
        self.storage = storage
        self.hermitian = bool(hermitian)
        self._blocks = None
        if hermitian:
            dev = self.hermiticity_error()
            if dev > HERMITIAN_TOLERANCE * max(1.0, self.max_abs()):
                raise NonHermitianError(f"operator flagged Hermitian deviates by {dev:.3g}")

    @property
    def dim(self) -> int:
        return self.basis.total_dim

    def dense(self) -> np.ndarray:
        return self.matrix.toarray() if sp.issparse(self.matrix) else np.array(self.matrix)

    def max_abs(self) -> float:
        if sp.issparse(self.matrix):
            return float(abs(self.matrix).max()) if self.matrix.nnz else 0.0
        return float(np.abs(self.matrix).max()) if self.matrix.size else 0.0

    def hermiticity_error(self) -> float:
        d = self.matrix - self.matrix.conj().T
        if sp.issparse(d):
            return float(abs(d).max()) if d.nnz else 0.0
        return float(np.abs(d).max())

    def dag(self) -> "Operator":
        return Operator(self.basis, self.matrix.conj().T, hermitian=self.hermitian, storage=self.storage)

    def _check(self, other):
        if other.basis != self.basis:
            raise BasisMismatchError(f"basis {other.basis} does not match {self.basis}")

    def __matmul__(self, other):
        if isinstance(other, StateVector):
            self._check(other)
            return StateVector(self.basis, self.matrix @ other.amplitudes)
        if isinstance(other, Operator):
            self._check(other)
            return Operator(self.basis, self.matrix @ other.matrix)
        return NotImplemented

    def __add__(self, other):
        if not isinstance(other, Operator):
            return NotImplemented
        self._check(other)
        return Operator(self.basis, self.matrix + other.matrix, hermitian=self.hermitian and other.hermitian)

    def __sub__(self, other):
        if not isinstance(other, Operator):
            return NotImplemented
        self._check(other)
        return Operator(self.basis, self.matrix - other.matrix, hermitian=self.hermitian and other.hermitian)

    def __mul__(self, scalar):
        if not np.isscalar(scalar):
            return NotImplemented
        herm = self.hermitian and np.isreal(scalar)
        return Operator(self.basis, self.matrix * scalar, hermitian=herm)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def commutator(self, other: "Operator") -> "Operator":
        return self @ other - other @ self

    def norm(self) -> float:
        """Frobenius norm."""
        if sp.issparse(self.matrix):
            return float(sp.linalg.norm(self.matrix))
        return float(np.linalg.norm(self.matrix))

    def blocks(self) -> list:
        """Index sets of the invariant subspaces of the sparsity graph.

        Excitation-conserving Hamiltonians split into small blocks, which
        keeps exact diagonalization cheap even for large total dimension.
        """
        if self._blocks is None:
            pattern = sp.csr_array(self.matrix) if not sp.issparse(self.matrix) else self.matrix
            pattern = abs(pattern) + abs(pattern.T)
            ncomp, labels = connected_components(pattern, directed=False)
            order = np.argsort(labels, kind="stable")
            splits = np.flatnonzero(np.diff(labels[order])) + 1
            self._blocks = [np.sort(ix) for ix in np.split(order, splits)]
        return self._blocks

    def __repr__(self):
        return f"Operator({self.basis}, storage={self.storage}, hermitian={self.hermitian})"


def identity(basis) -> Operator:
    basis = as_basis(basis)
    return Operator(basis, sp.identity(basis.total_dim, dtype=complex, format="csr"), hermitian=True)


def ladder_ops(cutoff: int) -> tuple:
    """Truncated ``(a, a_dag)`` with ``<n-1|a|n> = sqrt(n)``."""
    cutoff = _check_cutoff(cutoff)
    basis = Basis((FockMode(cutoff),))
    a = sp.diags(np.sqrt(np.arange(1, cutoff + 1)), 1, format="csr", dtype=complex)
    return Operator(basis, a, storage="sparse"), Operator(basis, a.T.conj(), storage="sparse")


def number_op(cutoff: int) -> Operator:
    cutoff = _check_cutoff(cutoff)
    return Operator(
        Basis((FockMode(cutoff),)), sp.diags(np.arange(cutoff + 1, dtype=complex), 0), hermitian=True
    )


def collective_spin_ops(N: int) -> tuple:
    """``(J_z, J_+, J_-)`` in the ``(N+1)``-dimensional Dicke representation."""
    if int(N) != N or N < 1:
        raise DomainError(f"atom number must be a positive integer, got {N}")
    N = int(N)
    basis = Basis((CollectiveSpin(N),))
    k = np.arange(N + 1, dtype=float)
    jz = sp.diags(k - N / 2.0, 0, format="csr", dtype=complex)
    # <k+1|J_+|k> = sqrt((k+1)(N-k))
    jp = sp.diags(np.sqrt((k[:-1] + 1.0) * (N - k[:-1])), -1, format="csr", dtype=complex)
    return (
        Operator(basis, jz, hermitian=True),
        Operator(basis, jp, storage="sparse"),
        Operator(basis, jp.T.conj(), storage="sparse"),
    )


def pauli_ops() -> tuple:
    """``(sigma_x, sigma_y, sigma_z)`` on the photon subspace ``{|0>, |1>}``.

    Built from ``sigma_x = a^dag + a``, ``sigma_y = i(a^dag - a)`` and
    ``sigma_z = 1 - 2 a^dag a``, so the vacuum is the ``+1`` eigenstate of
    ``sigma_z``.
    """
    basis = Basis((Qubit(),))
    a = np.array([[0, 1], [0, 0]], dtype=complex)
    ad = a.conj().T
    sx = ad + a
    sy = 1j * (ad - a)
    sz = np.eye(2) - 2 * ad @ a
    return tuple(Operator(basis, m, hermitian=True) for m in (sx, sy, sz))


def photon_raising() -> Operator:
    """``sigma_+ = |1><0|``: creates the photon excitation."""
    return Operator(Basis((Qubit(),)), np.array([[0, 0], [1, 0]], dtype=complex))


def tensor(*items):
    """Kronecker product of states or of operators, factors in argument order."""
    if len(items) < 2:
        raise DomainError("tensor needs at least two operands")
    if all(isinstance(x, StateVector) for x in items):
        return reduce(
            lambda x, y: StateVector(x.basis + y.basis, np.kron(x.amplitudes, y.amplitudes)), items
        )
    if all(isinstance(x, Operator) for x in items):

        def kron(x, y):
            if sp.issparse(x.matrix) or sp.issparse(y.matrix):
                m = sp.kron(x.matrix, y.matrix, format="csr")
            else:
                m = np.kron(x.matrix, y.matrix)
            return Operator(x.basis + y.basis, m, hermitian=x.hermitian and y.hermitian)

        return reduce(kron, items)
    raise TypeError("tensor operands must all be StateVector or all be Operator")


def embed(op: Operator, basis, factor: int) -> Operator:
    """Lift a single-factor operator to ``basis``, acting on ``factor``."""
    basis = as_basis(basis)
    if op.basis.factors != (basis.factors[factor],):
        raise BasisMismatchError(f"{op.basis} is not factor {factor} of {basis}")
    parts = [identity(Basis((f,))) for f in basis.factors]
    parts[factor] = op
    return tensor(*parts) if len(parts) > 1 else op


def inner_product(x: StateVector, y: StateVector) -> complex:
    """``<x|y>``, conjugate-linear in ``x``."""
    if x.basis != y.basis:
        raise BasisMismatchError(f"basis {x.basis} does not match {y.basis}")
    return complex(np.vdot(x.amplitudes, y.amplitudes))


def apply_local(psi: StateVector, matrix: np.ndarray, factor: int) -> StateVector:
    """Apply a small dense matrix to one factor of ``psi``."""
    t = psi.tensor_view()
    out = np.tensordot(np.asarray(matrix, dtype=complex), t, axes=([1], [factor]))
    out = np.moveaxis(out, 0, factor)
    return StateVector(psi.basis, out.ravel())
