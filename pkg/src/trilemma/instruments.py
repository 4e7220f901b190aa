"""Discrete instruments: outcome-indexed operations that sum to a channel."""

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from . import channels, linop
from .channels import PurityClass, QuantumOperation
from .errors import InvalidInput, MalformedInstrument
from .qobjects import Observable, ginibre, is_trivial_effect
from .tolerances import TOL_EQ, TOL_STRICT


@dataclass(frozen=True)
class Instrument:
    """Operations ``I_x`` keyed by ordered labels; outcome index = label position."""

    labels: Tuple[str, ...]
    operations: Tuple[QuantumOperation, ...]

    def __post_init__(self):
        labels = tuple(str(x) for x in self.labels)
        ops = tuple(self.operations)
        if not ops or len(labels) != len(ops):
            raise MalformedInstrument("need one label per operation and at least one outcome")
        if len(set(labels)) != len(labels):
            raise MalformedInstrument(f"duplicate labels in {labels}")
        dims = {(op.in_dim, op.out_dim) for op in ops}
        if len(dims) != 1:
            raise MalformedInstrument(f"operations have mismatched dimensions {sorted(dims)}")
        total = sum(op.effect() for op in ops)
        res = linop.max_abs(total - np.eye(ops[0].in_dim))
        if res > TOL_EQ:
            raise MalformedInstrument(f"total channel is not trace preserving (residual {res:.3g})")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "operations", ops)

    @classmethod
    def from_operations(cls, operations: Sequence[QuantumOperation], labels: Optional[Sequence[str]] = None):
        if labels is None:
            labels = [str(i) for i in range(len(operations))]
        return cls(tuple(labels), tuple(operations))

    @property
    def in_dim(self):
        return self.operations[0].in_dim

    @property
    def out_dim(self):
        return self.operations[0].out_dim

    def __len__(self):
        return len(self.operations)

    def __getitem__(self, label):
        return self.operations[self.labels.index(str(label))]


def induced_observable(inst: Instrument):
    """Effects ``E_x = I_x^*(1)``."""
    eye = np.eye(inst.out_dim)
    try:
        return Observable(inst.labels, tuple(channels.dual_apply(op, eye) for op in inst.operations))
    except InvalidInput as exc:
        raise MalformedInstrument(f"induced observable is invalid: {exc}") from exc


def total_channel(inst: Instrument):
    return channels.kraus_sum(inst.operations)


def luders_instrument(obs: Observable):
    """Square-root instrument ``rho -> sqrt(E_x) rho sqrt(E_x)``."""
    return Instrument(obs.labels, tuple(QuantumOperation((linop.matrix_sqrt(e),)) for e in obs.effects))


def efficient_instrument(obs: Observable, unitaries: Sequence):
    """``rho -> U_x sqrt(E_x) rho sqrt(E_x) U_x^dag`` with one unitary per outcome."""
    if len(unitaries) != len(obs):
        raise InvalidInput(f"expected {len(obs)} unitaries, got {len(unitaries)}")
    ops = []
    for x, e, u in zip(obs.labels, obs.effects, unitaries):
        u = linop.as_square(u, f"unitary for outcome {x!r}")
        if u.shape[0] != obs.dim or not linop.is_unitary(u):
            raise InvalidInput(f"U for outcome {x!r} is not a {obs.dim}-dimensional unitary")
        ops.append(QuantumOperation((u @ linop.matrix_sqrt(e),)))
    return Instrument(obs.labels, tuple(ops))


@dataclass(frozen=True)
class InstrumentClassification:
    quasicomplete: bool
    efficient: bool
    strictly_positive: bool
    per_outcome: Tuple[PurityClass, ...]
    # outcomes whose effect is alpha * 1; a single Kraus there is p(x) U . U^dag
    trivial_outcomes: Tuple[str, ...]


def classify_instrument(inst: Instrument, tol_strict=TOL_STRICT):
    """Quasicomplete / efficient / strictly positive flags.

    Raises:
        AmbiguousClassification: propagated from :func:`channels.purity_class`.
    """
    per = tuple(channels.purity_class(op) for op in inst.operations)
    eye = np.eye(inst.in_dim)
    sp = all(
        float(np.linalg.eigvalsh(linop.hermitize(channels.apply(op, eye)))[0]) > tol_strict
        for op in inst.operations
    )
    trivial = tuple(
        x for x, op in zip(inst.labels, inst.operations) if is_trivial_effect(op.effect())[0]
    )
    return InstrumentClassification(
        quasicomplete=all(p.purity_preserving for p in per),
        efficient=all(p.tag == channels.SINGLE_KRAUS for p in per),
        strictly_positive=sp,
        per_outcome=per,
        trivial_outcomes=trivial,
    )


def instrument_choi_distance(a: Instrument, b: Instrument):
    """Largest per-outcome Choi distance between two instruments with matching labels."""
    if a.labels != b.labels:
        raise InvalidInput(f"label mismatch: {a.labels} vs {b.labels}")
    return max(channels.choi_distance(x, y) for x, y in zip(a.operations, b.operations))


def random_instrument(dim, n_outcomes, n_kraus=2, seed=None):
    """Seeded instrument with ``n_kraus`` Kraus operators per outcome."""
    rng = np.random.default_rng(seed) if not isinstance(seed, np.random.Generator) else seed
    gs = [[ginibre(rng, dim, dim) for _ in range(n_kraus)] for _ in range(n_outcomes)]
    s = linop.hermitize(sum(g.conj().T @ g for block in gs for g in block))
    w, v = np.linalg.eigh(s)
    inv_sqrt = (v / np.sqrt(w)) @ v.conj().T
    ops = [QuantumOperation(tuple(g @ inv_sqrt for g in block)) for block in gs]
    return Instrument.from_operations(ops)
