"""Measurement processes ``(H_A, xi, E, J)`` and what they induce.

Joint operators are ordered system first, apparatus second.
"""

from dataclasses import dataclass, field, replace
from typing import Dict, List, Sequence, Tuple

import numpy as np

from . import channels, linop
from .channels import QuantumOperation
from .errors import InvalidInput, MalformedProcess, ThirdLawObstruction
from .instruments import (
    Instrument,
    efficient_instrument,
    induced_observable,
    luders_instrument,
    random_instrument,
)
from .qobjects import (
    FULL_RANK_MIX,
    Observable,
    check_state,
    classify_observable,
    maximally_mixed,
    random_state,
)
from .tolerances import P_FLOOR, TOL_EQ, TOL_STRICT

SYSTEM = 0
APPARATUS = 1


@dataclass(frozen=True)
class MeasurementProcess:
    """Apparatus preparation ``xi``, premeasurement channel and objectification instrument.

    ``decomposable`` is a user-declared annotation: ``False`` marks a process
    whose premeasurement/objectification split is formal only.
    """

    sys_dim: int
    app_dim: int
    xi: np.ndarray
    premeasurement: QuantumOperation
    objectification: Instrument
    decomposable: bool = True
    metadata: Dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        d, n = int(self.sys_dim), int(self.app_dim)
        if d < 1 or n < 1:
            raise MalformedProcess("dimensions must be positive")
        try:
            xi = check_state(self.xi, "apparatus state xi")
        except InvalidInput as exc:
            raise MalformedProcess(str(exc)) from exc
        if xi.shape[0] != n:
            raise MalformedProcess(f"xi has dimension {xi.shape[0]}, expected {n}")
        xi.setflags(write=False)
        e = self.premeasurement
        if (e.in_dim, e.out_dim) != (d * n, d * n):
            raise MalformedProcess(f"premeasurement must act on dimension {d * n}")
        res = linop.max_abs(e.effect() - np.eye(d * n))
        if res > TOL_EQ:
            raise MalformedProcess(f"premeasurement is not trace preserving (residual {res:.3g})")
        j = self.objectification
        if (j.in_dim, j.out_dim) != (n, n):
            raise MalformedProcess(f"objectification must act on the apparatus (dimension {n})")
        object.__setattr__(self, "sys_dim", d)
        object.__setattr__(self, "app_dim", n)
        object.__setattr__(self, "xi", xi)

    @property
    def labels(self):
        return self.objectification.labels

    @property
    def pointer(self) -> Observable:
        return induced_observable(self.objectification)

    @property
    def dims(self):
        return (self.sys_dim, self.app_dim)

    def joint_objectification(self, label=None):
        """``id_S (x) J_x``, or ``id_S (x) J_X`` when ``label`` is None."""
        idn = channels.identity_channel(self.sys_dim)
        if label is None:
            j = channels.kraus_sum(self.objectification.operations)
        else:
            j = self.objectification[label]
        return channels.tensor(idn, j)

    def composed_channel(self):
        """``(id_S (x) J_X) o E``."""
        return channels.compose(self.joint_objectification(), self.premeasurement)


# -- restriction maps -------------------------------------------------------


def restriction_map(joint, anchor, dims, traced=APPARATUS):
    """Conditional expectation of a joint operator with respect to ``anchor``.

    ``traced=APPARATUS`` gives ``tr_A[M (1 (x) anchor)]`` (an operator on the
    system); ``traced=SYSTEM`` gives ``tr_S[M (anchor (x) 1)]``.
    """
    d_s, d_a = dims
    m = linop.as_matrix(joint)
    a = linop.as_square(anchor, "anchor")
    if traced == APPARATUS:
        if a.shape[0] != d_a:
            raise InvalidInput("anchor must live on the apparatus")
        return linop.partial_trace(m @ np.kron(np.eye(d_s), a), dims, keep=SYSTEM)
    if traced == SYSTEM:
        if a.shape[0] != d_s:
            raise InvalidInput("anchor must live on the system")
        return linop.partial_trace(m @ np.kron(a, np.eye(d_a)), dims, keep=APPARATUS)
    raise InvalidInput(f"traced must be {SYSTEM} or {APPARATUS}")


# -- derived objects --------------------------------------------------------


def _system_op_from_map(fn, dim):
    return channels.kraus_from_choi(channels.choi_from_map(fn, dim, dim))


def induced_instrument(proc: MeasurementProcess, check=True):
    """System instrument ``I_x(rho) = tr_A[(id (x) J_x)(E(rho (x) xi))]``.

    Each operation is assembled from its action on matrix units and
    reduced to minimal Kraus form through its Choi matrix. With ``check``
    the effects are compared with the dual route ``Gamma_xi(E^*(1 (x) Z_x))``.
    """
    d, n = proc.dims
    premeasured = {}
    for i, j, e in linop.matrix_units(d):
        premeasured[i, j] = channels.apply(proc.premeasurement, np.kron(e, proc.xi))
    ops = []
    for x in proc.labels:
        jx = proc.joint_objectification(x)
        c = np.zeros((d * d, d * d), dtype=np.complex128)
        for (i, j), omega in premeasured.items():
            c[i * d:(i + 1) * d, j * d:(j + 1) * d] = linop.partial_trace(
                channels.apply(jx, omega), proc.dims, keep=SYSTEM
            )
        ops.append(channels.kraus_from_choi(channels.ChoiMatrix(d, d, c)))
    try:
        inst = Instrument(proc.labels, tuple(ops))
    except InvalidInput as exc:
        raise MalformedProcess(f"induced instrument is malformed: {exc}") from exc
    if check:
        pointer = proc.pointer
        for x, op, z in zip(proc.labels, inst.operations, pointer.effects):
            dual = restriction_map(
                channels.dual_apply(proc.premeasurement, np.kron(np.eye(d), z)), proc.xi, proc.dims
            )
            res = linop.max_abs(dual - op.effect())
            if res > TOL_EQ:
                raise MalformedProcess(f"outcome {x!r}: primal and dual effects differ by {res:.3g}")
    return inst


@dataclass(frozen=True)
class PosteriorBundle:
    """Posterior states of a process for one prior system state."""

    rho: np.ndarray
    xi: np.ndarray
    dims: Tuple[int, int]
    probabilities: np.ndarray
    # unnormalized (id (x) J_x) E (rho (x) xi), one per outcome
    blocks: Tuple[np.ndarray, ...]
    joints: Tuple[np.ndarray, ...]
    system: Tuple[np.ndarray, ...]
    apparatus: Tuple[np.ndarray, ...]
    degenerate: Tuple[bool, ...]


def posterior_bundle(proc: MeasurementProcess, rho, p_floor=P_FLOOR):
    """Posterior joint and marginal states; outcomes with ``p <= p_floor`` are flagged.

    A flagged outcome gets the maximally mixed joint state as its
    (arbitrary) posterior; it still enters every average with weight ``p``.
    """
    rho = check_state(rho, "prior state")
    if rho.shape[0] != proc.sys_dim:
        raise InvalidInput(f"prior has dimension {rho.shape[0]}, expected {proc.sys_dim}")
    omega = channels.apply(proc.premeasurement, np.kron(rho, proc.xi))
    blocks, joints, sys_post, app_post, degenerate = [], [], [], [], []
    probs = []
    for x in proc.labels:
        b = linop.hermitize(channels.apply(proc.joint_objectification(x), omega))
        p = float(np.trace(b).real)
        blocks.append(b)
        probs.append(max(p, 0.0))
        if p > p_floor:
            s = b / p
            degenerate.append(False)
        else:
            s = maximally_mixed(proc.sys_dim * proc.app_dim)
            degenerate.append(True)
        joints.append(s)
        sys_post.append(linop.hermitize(linop.partial_trace(s, proc.dims, keep=SYSTEM)))
        app_post.append(linop.hermitize(linop.partial_trace(s, proc.dims, keep=APPARATUS)))
    return PosteriorBundle(
        rho=rho,
        xi=proc.xi,
        dims=proc.dims,
        probabilities=np.array(probs),
        blocks=tuple(blocks),
        joints=tuple(joints),
        system=tuple(sys_post),
        apparatus=tuple(app_post),
        degenerate=tuple(degenerate),
    )


def effective_apparatus_instrument(proc: MeasurementProcess, rho):
    """Apparatus instrument ``Phi_x(B) = J_x(tr_S[E(rho (x) B)])``."""
    rho = check_state(rho, "prior state")
    n = proc.app_dim
    ops = []
    for x in proc.labels:
        jx = proc.objectification[x]

        def fn(b, jx=jx):
            joint = channels.apply(proc.premeasurement, np.kron(rho, b))
            return channels.apply(jx, linop.partial_trace(joint, proc.dims, keep=APPARATUS))

        ops.append(_system_op_from_map(fn, n))
    return Instrument(proc.labels, tuple(ops))


def apparatus_observable_G(proc: MeasurementProcess, rho):
    """Prior-dependent apparatus observable ``G_x = Gamma_rho(E^*(1 (x) Z_x))``."""
    rho = check_state(rho, "prior state")
    effects = []
    for z in proc.pointer.effects:
        lifted = channels.dual_apply(proc.premeasurement, np.kron(np.eye(proc.sys_dim), z))
        effects.append(linop.hermitize(restriction_map(lifted, rho, proc.dims, traced=SYSTEM)))
    return Observable(proc.labels, tuple(effects))


# -- constructions ----------------------------------------------------------


def _projector_instrument(labels, projectors):
    return Instrument(tuple(labels), tuple(QuantumOperation((p,)) for p in projectors))


def ozawa_dilation(inst: Instrument):
    """Unitary premeasurement with pure apparatus and projective pointer.

    The apparatus has one basis vector per Kraus operator ``K_{x,i}``; the
    isometry ``V psi = sum K_{x,i} psi (x) |x,i>`` is completed to a unitary
    on the joint space by an orthonormal basis of the complement of its
    range. The pointer is ``Z_x = sum_i |x,i><x,i|`` and the objectification
    is its Lüders instrument.
    """
    d = inst.in_dim
    if inst.out_dim != d:
        raise InvalidInput("dilation needs an instrument acting in one space")
    owners: List[int] = []
    kraus: List[np.ndarray] = []
    for idx, op in enumerate(inst.operations):
        ks = [k for k in op.kraus if linop.max_abs(k) > 0]
        if not ks:
            raise InvalidInput(f"outcome {inst.labels[idx]!r} has a zero operation")
        kraus.extend(ks)
        owners.extend([idx] * len(ks))
    m = len(kraus)
    v = np.zeros((d * m, d), dtype=np.complex128)
    for a, k in enumerate(kraus):
        v[a::m, :] = k  # rows s*m + a
    u_svd, _, _ = np.linalg.svd(v, full_matrices=True)
    complement = u_svd[:, d:]
    u = np.zeros((d * m, d * m), dtype=np.complex128)
    cols_v = [j * m for j in range(d)]
    cols_rest = [c for c in range(d * m) if c % m != 0]
    u[:, cols_v] = v
    u[:, cols_rest] = complement
    if not linop.is_unitary(u, atol=1e-9):
        raise InvalidInput("instrument Kraus family does not form an isometry")
    xi = linop.basis_projector(m, 0)
    projectors = []
    for idx in range(len(inst)):
        diag = np.array([1.0 if o == idx else 0.0 for o in owners])
        projectors.append(np.diag(diag).astype(np.complex128))
    meta = {
        "construction": "ozawa_dilation",
        "completion": "svd_orthonormal_complement",
        "kraus_owners": [inst.labels[o] for o in owners],
        "leftover_pointer_vectors": "none",
    }
    return MeasurementProcess(
        sys_dim=d,
        app_dim=m,
        xi=xi,
        premeasurement=QuantumOperation((u,)),
        objectification=_projector_instrument(inst.labels, projectors),
        metadata=meta,
    )


def with_apparatus_state(proc: MeasurementProcess, xi, **meta):
    return replace(proc, xi=np.array(xi, dtype=np.complex128), metadata={**proc.metadata, **meta})


def smoothed(proc: MeasurementProcess, eps=FULL_RANK_MIX):
    """Replace ``xi`` by ``(1 - eps) xi + eps 1/d_A``."""
    xi = (1 - eps) * proc.xi + eps * maximally_mixed(proc.app_dim)
    return with_apparatus_state(proc, xi, smoothing_eps=eps)


def with_objectification(proc: MeasurementProcess, inst: Instrument):
    return replace(proc, objectification=inst)


def trash_and_prepare_instrument(n, labels=None):
    """``J_x(B) = <x|B|x> 1/N``: reads the pointer basis, re-prepares the complete mixture."""
    labels = [str(i) for i in range(n)] if labels is None else list(labels)
    ops = []
    for x in range(n):
        ks = []
        for b in range(n):
            k = np.zeros((n, n), dtype=np.complex128)
            k[b, x] = 1 / np.sqrt(n)
            ks.append(k)
        ops.append(QuantumOperation(tuple(ks)))
    return Instrument(tuple(labels), tuple(ops))


def thermo_construction(obs: Observable, unitaries: Sequence, xi=None):
    """Third-law compatible process realizing ``U_x sqrt(E_x) . sqrt(E_x) U_x^dag``.

    The apparatus is an ``N``-level pointer. The premeasurement ``E2 o E1``
    first writes the outcome cyclically into the pointer with Kraus
    operators ``K_x = sum_a sqrt(E_{x+a}) (x) |x+a><a|`` (indices mod N),
    then applies ``U_x`` conditioned on pointer value ``x`` while dephasing
    the pointer. Objectification is :func:`trash_and_prepare_instrument`.

    Raises:
        ThirdLawObstruction: if ``obs`` or ``xi`` is not strictly positive.
    """
    n, d = len(obs), obs.dim
    if not classify_observable(obs).strictly_positive:
        raise ThirdLawObstruction("observable is not strictly positive")
    xi = maximally_mixed(n) if xi is None else check_state(xi, "xi")
    if xi.shape[0] != n:
        raise InvalidInput(f"xi must have dimension {n} (one level per outcome)")
    if linop.min_eigenvalue(xi) <= TOL_STRICT:
        raise ThirdLawObstruction("apparatus state xi is not strictly positive")
    efficient_instrument(obs, unitaries)  # validates the unitaries
    roots = [linop.matrix_sqrt(e) for e in obs.effects]
    e1 = []
    for x in range(n):
        k = np.zeros((d * n, d * n), dtype=np.complex128)
        for a in range(n):
            shift = np.zeros((n, n))
            shift[(x + a) % n, a] = 1.0
            k += np.kron(roots[(x + a) % n], shift)
        e1.append(k)
    e2 = [np.kron(np.asarray(u, dtype=np.complex128), linop.basis_projector(n, x))
          for x, u in enumerate(unitaries)]
    premeasurement = channels.compose(QuantumOperation(tuple(e2)), QuantumOperation(tuple(e1)))
    return MeasurementProcess(
        sys_dim=d,
        app_dim=n,
        xi=xi,
        premeasurement=premeasurement,
        objectification=trash_and_prepare_instrument(n, obs.labels),
        metadata={"construction": "thermo_construction"},
    )


def product_process(sys_dim, xi, objectification: Instrument):
    """Process with trivial premeasurement ``E = id``; measures only the apparatus."""
    xi = check_state(xi, "xi")
    return MeasurementProcess(
        sys_dim=sys_dim,
        app_dim=xi.shape[0],
        xi=xi,
        premeasurement=channels.identity_channel(sys_dim * xi.shape[0]),
        objectification=objectification,
        metadata={"construction": "product"},
    )


def random_process(sys_dim, app_dim, n_outcomes, seed=None, n_kraus=2):
    """Seeded generic process: random joint channel, mixed ``xi``, random objectification."""
    rng = np.random.default_rng(seed)
    premeasurement = channels.random_operation(sys_dim * app_dim, n_kraus=n_kraus, seed=rng)
    xi = random_state(app_dim, rng)
    obj = random_instrument(app_dim, n_outcomes, n_kraus=n_kraus, seed=rng)
    return MeasurementProcess(sys_dim, app_dim, xi, premeasurement, obj, metadata={"construction": "random"})


def luders_dilation(obs: Observable):
    return ozawa_dilation(luders_instrument(obs))
