"""Quantum operations in Kraus form.

Choi convention: ``C(Phi) = sum_ij |i><j| (x) Phi(|i><j|)``, input factor
first. With it, ``tr_out C = (Phi^*(1))^T``, so an operation is trace
preserving exactly when the output partial trace of its Choi matrix is the
identity.
"""

from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence, Tuple

import numpy as np

from . import linop
from .errors import AmbiguousClassification, InvalidInput, NotCompletelyPositive
from .qobjects import random_pure_state
from .tolerances import TOL_EQ, TOL_PSD, TOL_RANK, TOL_STRICT

PURITY_SAMPLES = 25
PURITY_TOL = 1e-8
PURITY_SEED = 0x5EED


@dataclass(frozen=True)
class QuantumOperation:
    """Completely positive, trace non-increasing map ``rho -> sum_k K rho K^dag``."""

    kraus: Tuple[np.ndarray, ...]
    in_dim: int = field(init=False)
    out_dim: int = field(init=False)

    def __post_init__(self):
        ks = tuple(np.array(k, dtype=np.complex128) for k in self.kraus)
        if not ks:
            raise InvalidInput("an operation needs at least one Kraus operator")
        shape = ks[0].shape
        for k in ks:
            linop.as_matrix(k, "Kraus operator")
            if k.shape != shape:
                raise InvalidInput(f"Kraus operators have mixed shapes {shape} and {k.shape}")
            k.setflags(write=False)
        object.__setattr__(self, "kraus", ks)
        object.__setattr__(self, "out_dim", shape[0])
        object.__setattr__(self, "in_dim", shape[1])
        over = np.linalg.eigvalsh(linop.hermitize(self.effect()))[-1] - 1.0
        if over > TOL_PSD:
            raise InvalidInput(f"operation increases trace (sum K^dag K exceeds 1 by {over:.3g})")

    def effect(self):
        """The compatible effect ``sum_k K^dag K``."""
        return sum(k.conj().T @ k for k in self.kraus)

    def __call__(self, m):
        return apply(self, m)

    @property
    def n_kraus(self):
        return len(self.kraus)


def identity_channel(dim):
    return QuantumOperation((np.eye(dim),))


def unitary_channel(u):
    u = linop.as_square(u, "unitary")
    if not linop.is_unitary(u):
        raise InvalidInput("matrix is not unitary")
    return QuantumOperation((u,))


def depolarizing_channel(dim):
    """Completely depolarizing channel ``tr[.] 1/d``."""
    ks = []
    for i in range(dim):
        for j in range(dim):
            k = np.zeros((dim, dim), dtype=np.complex128)
            k[i, j] = 1 / np.sqrt(dim)
            ks.append(k)
    return QuantumOperation(tuple(ks))


def _check_input(op, m, dim, which):
    a = linop.as_matrix(m)
    if a.shape != (dim, dim):
        raise InvalidInput(f"{which} expects a {dim}x{dim} operator, got {a.shape}")
    return a


def apply(op: QuantumOperation, m):
    a = _check_input(op, m, op.in_dim, "apply")
    return sum(k @ a @ k.conj().T for k in op.kraus)


def dual_apply(op: QuantumOperation, m):
    a = _check_input(op, m, op.out_dim, "dual_apply")
    return sum(k.conj().T @ a @ k for k in op.kraus)


def compose(after: QuantumOperation, before: QuantumOperation):
    """``after o before`` with Kraus set ``{A_i B_j}``."""
    if after.in_dim != before.out_dim:
        raise InvalidInput(f"cannot compose: {before.out_dim} -> {after.in_dim}")
    return QuantumOperation(tuple(a @ b for a in after.kraus for b in before.kraus))


def tensor(a: QuantumOperation, b: QuantumOperation):
    return QuantumOperation(tuple(np.kron(x, y) for x in a.kraus for y in b.kraus))


def kraus_sum(ops: Sequence[QuantumOperation]):
    """Operation whose Kraus set is the union of ``ops``."""
    ks = []
    for op in ops:
        ks.extend(op.kraus)
    return QuantumOperation(tuple(ks))


# -- Choi representation ----------------------------------------------------


class ChoiMatrix(NamedTuple):
    in_dim: int
    out_dim: int
    matrix: np.ndarray


def _kraus_vector(k):
    # (id (x) K)|Omega> with |Omega> = sum_i |i>|i>, indexed (i, a)
    return k.T.reshape(-1)


def to_choi(op: QuantumOperation):
    c = np.zeros((op.in_dim * op.out_dim,) * 2, dtype=np.complex128)
    for k in op.kraus:
        v = _kraus_vector(k)
        c += np.outer(v, v.conj())
    return ChoiMatrix(op.in_dim, op.out_dim, linop.hermitize(c))


def choi_from_map(fn, in_dim, out_dim):
    """Choi matrix of an arbitrary linear map given as a Python callable."""
    c = np.zeros((in_dim * out_dim,) * 2, dtype=np.complex128)
    for i, j, e in linop.matrix_units(in_dim):
        c[i * out_dim:(i + 1) * out_dim, j * out_dim:(j + 1) * out_dim] = fn(e)
    return ChoiMatrix(in_dim, out_dim, c)


def _rank_cut(w, tol_rank):
    top = w[-1] if w.size else 0.0
    if top <= 0:
        return 0
    return int(np.sum(w > tol_rank * top))


def choi_rank(op_or_choi, tol_rank=TOL_RANK):
    c = op_or_choi if isinstance(op_or_choi, ChoiMatrix) else to_choi(op_or_choi)
    return _rank_cut(np.linalg.eigvalsh(linop.hermitize(c.matrix)), tol_rank)


def kraus_from_choi(c: ChoiMatrix, tol_rank=TOL_RANK, tol_psd=TOL_PSD):
    """Minimal Kraus form from the spectral decomposition of a Choi matrix.

    Returns exactly ``choi_rank(c)`` operators. An all-zero Choi matrix
    yields a single zero Kraus operator.

    Raises:
        NotCompletelyPositive: if the Choi matrix has an eigenvalue below ``-tol_psd``.
    """
    m = linop.as_hermitian(c.matrix, "Choi matrix", atol=1e-9)
    if m.shape != (c.in_dim * c.out_dim,) * 2:
        raise InvalidInput(f"Choi shape {m.shape} does not match dims {(c.in_dim, c.out_dim)}")
    w, v = np.linalg.eigh(m)
    if w[0] < -tol_psd:
        raise NotCompletelyPositive(f"Choi matrix has eigenvalue {w[0]:.3g}")
    r = _rank_cut(w, tol_rank)
    if r == 0:
        return QuantumOperation((np.zeros((c.out_dim, c.in_dim)),))
    ks = []
    for idx in range(len(w) - 1, len(w) - 1 - r, -1):
        vec = np.sqrt(w[idx]) * v[:, idx]
        ks.append(vec.reshape(c.in_dim, c.out_dim).T)
    return QuantumOperation(tuple(ks))


def choi_distance(a, b):
    """Entrywise max distance between Choi matrices."""
    ca = a if isinstance(a, ChoiMatrix) else to_choi(a)
    cb = b if isinstance(b, ChoiMatrix) else to_choi(b)
    if ca.matrix.shape != cb.matrix.shape:
        raise InvalidInput("operations have different dimensions")
    return linop.max_abs(ca.matrix - cb.matrix)


def minimal_kraus(op: QuantumOperation, tol_rank=TOL_RANK):
    return kraus_from_choi(to_choi(op), tol_rank)


# -- classification ---------------------------------------------------------


@dataclass(frozen=True)
class ChannelClassification:
    trace_preserving: bool
    trace_nonincreasing: bool
    unital: bool
    bistochastic: bool
    strictly_positive: bool
    min_kraus_count: int
    trace_residual: float
    unit_residual: Optional[float]
    min_output_eigenvalue: float


def classify_channel(op: QuantumOperation, tol=TOL_EQ, tol_strict=TOL_STRICT, tol_rank=TOL_RANK):
    eye_in = np.eye(op.in_dim)
    tr_res = linop.max_abs(op.effect() - eye_in)
    over = float(np.linalg.eigvalsh(linop.hermitize(op.effect()))[-1] - 1.0)
    out_unit = apply(op, eye_in)
    if op.in_dim == op.out_dim:
        unit_res = linop.max_abs(out_unit - eye_in)
    else:
        unit_res = None
    tp = tr_res <= tol
    unital = unit_res is not None and unit_res <= tol
    lo = float(np.linalg.eigvalsh(linop.hermitize(out_unit))[0])
    return ChannelClassification(
        trace_preserving=tp,
        trace_nonincreasing=over <= TOL_PSD,
        unital=unital,
        bistochastic=tp and unital,
        strictly_positive=lo > tol_strict,
        min_kraus_count=choi_rank(op, tol_rank),
        trace_residual=tr_res,
        unit_residual=unit_res,
        min_output_eigenvalue=lo,
    )


SINGLE_KRAUS = "single_kraus"
PURE_PREPARE = "pure_prepare"
NOT_PURITY_PRESERVING = "not_purity_preserving"


@dataclass(frozen=True)
class PurityClass:
    """Davies-form tag of an operation.

    ``witness`` is the Kraus operator ``K`` for ``single_kraus`` and the pair
    ``(E, phi)`` for ``pure_prepare``; ``margin`` is the ratio of the second
    to the largest Choi eigenvalue, which tells how close the call was.
    """

    tag: str
    witness: object
    margin: float

    @property
    def purity_preserving(self):
        return self.tag in (SINGLE_KRAUS, PURE_PREPARE)


def _pure_prepare_factor(op, choi, tol_rank):
    """Return ``(E, phi, residual)`` if the Choi matrix factorizes as ``E^T (x) |phi><phi|``."""
    out_marginal = linop.partial_trace(choi.matrix, (op.in_dim, op.out_dim), keep=1)
    w, v = np.linalg.eigh(linop.hermitize(out_marginal))
    if _rank_cut(w, tol_rank) != 1:
        return None
    phi = v[:, -1]
    e = op.effect()
    candidate = np.kron(e.T, np.outer(phi, phi.conj()))
    return e, phi, linop.max_abs(choi.matrix - candidate)


def _sampled_purity(op, n=PURITY_SAMPLES, seed=PURITY_SEED, tol=PURITY_TOL):
    rng = np.random.default_rng(seed)
    for _ in range(n):
        out = linop.hermitize(apply(op, random_pure_state(op.in_dim, rng)))
        w = np.linalg.eigvalsh(out)
        tr = float(np.sum(w))
        second = w[-2] if w.size > 1 else 0.0
        if second > tol * max(tr, 0.0) + 1e-15:
            return False
    return True


def purity_class(op: QuantumOperation, tol_rank=TOL_RANK):
    """Tag an operation by the two purity-preserving forms, or neither.

    A Choi factorization test and a sampling test on seeded random pure
    inputs must agree.

    Raises:
        AmbiguousClassification: when the two tests disagree.
    """
    choi = to_choi(op)
    w, v = np.linalg.eigh(choi.matrix)
    top = w[-1]
    margin = float(w[-2] / top) if top > 0 and w.size > 1 else 0.0
    rank = _rank_cut(w, tol_rank)
    if rank == 0:
        # the zero operation has no pure outputs at all
        return PurityClass(NOT_PURITY_PRESERVING, None, margin)
    sampled = _sampled_purity(op)
    if rank == 1:
        k = np.sqrt(top) * v[:, -1].reshape(op.in_dim, op.out_dim).T
        tag, witness = SINGLE_KRAUS, k
    else:
        fac = _pure_prepare_factor(op, choi, tol_rank) if rank > 1 else None
        if fac is not None and fac[2] <= PURITY_TOL:
            tag, witness = PURE_PREPARE, (fac[0], fac[1])
        else:
            tag, witness = NOT_PURITY_PRESERVING, None
    if (tag != NOT_PURITY_PRESERVING) != sampled:
        raise AmbiguousClassification(
            f"factorization says {tag} but pure-input sampling says "
            f"{'pure' if sampled else 'mixed'} (margin {margin:.3g})"
        )
    return PurityClass(tag, witness, margin)


def polar_unitary(k):
    """Unitary ``U`` with ``K = U sqrt(K^dag K)`` (from the SVD of ``K``)."""
    w, _, vh = np.linalg.svd(k)
    return w @ vh


def random_operation(in_dim, out_dim=None, n_kraus=2, seed=None, trace_preserving=True):
    """Seeded random operation; if not trace preserving, ``sum K^dag K`` is scaled below 1."""
    rng = np.random.default_rng(seed) if not isinstance(seed, np.random.Generator) else seed
    out_dim = in_dim if out_dim is None else out_dim
    gs = [rng.standard_normal((out_dim, in_dim)) + 1j * rng.standard_normal((out_dim, in_dim))
          for _ in range(n_kraus)]
    s = linop.hermitize(sum(g.conj().T @ g for g in gs))
    w, v = np.linalg.eigh(s)
    if trace_preserving:
        if w[0] <= 1e-12:
            raise InvalidInput("cannot normalize to a channel: Kraus family is rank deficient")
        inv_sqrt = (v / np.sqrt(w)) @ v.conj().T
        return QuantumOperation(tuple(g @ inv_sqrt for g in gs))
    scale = 1.0 / np.sqrt(w[-1] * (1 + rng.uniform(0.1, 1.0)))
    return QuantumOperation(tuple(g * scale for g in gs))
