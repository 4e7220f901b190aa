"""Entropic bookkeeping of measurement processes and the law audits.

All entropies are in nats.
"""

from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np

from . import channels, linop
from .errors import InternalInconsistency, InvalidInput
from .instruments import Instrument, classify_instrument, induced_observable
from .measproc import (
    APPARATUS,
    SYSTEM,
    MeasurementProcess,
    PosteriorBundle,
    induced_instrument,
    posterior_bundle,
)
from .qobjects import (
    check_distribution,
    check_state,
    classify_observable,
    maximally_mixed,
    random_full_rank_state,
    random_pure_state,
    random_state,
)
from .tolerances import TOL_PSD, TOL_STRICT

IDENTITY_TOL = 1e-8
SECOND_LAW_TOL = 1e-8
PANEL_SIZE = 50


def _entropy_of_spectrum(w, tol=TOL_PSD):
    w = np.asarray(w, dtype=float)
    if w.size and w.min() < -tol:
        raise InvalidInput(f"negative eigenvalue {w.min():.3g} in entropy argument")
    # no cutoff above zero: both routes of the entropy identity must see the same tail
    w = w[w > 0]
    return float(-np.sum(w * np.log(w)))


def shannon_entropy(p):
    p = check_distribution(p)
    nz = p[p > 0]
    return float(-np.sum(nz * np.log(nz)))


def von_neumann_entropy(rho):
    """``-tr[rho ln rho]`` with ``0 ln 0 = 0``.

    Accepts unnormalized positive operators too; no trace check is made.
    """
    return _entropy_of_spectrum(np.linalg.eigvalsh(linop.as_hermitian(rho)))


def relative_entropy(rho, sigma, tol=TOL_PSD):
    """Umegaki relative entropy ``tr[rho (ln rho - ln sigma)]``.

    Returns ``inf`` when the support of ``rho`` is not inside that of ``sigma``.
    """
    rho = check_state(rho)
    sigma = linop.as_hermitian(sigma, "sigma")
    ws, vs = np.linalg.eigh(sigma)
    if ws[0] < -tol:
        raise InvalidInput("sigma is not positive semidefinite")
    kernel = vs[:, ws <= tol]
    if kernel.size and linop.max_abs(kernel.conj().T @ rho @ kernel) > tol:
        return float("inf")
    log_rho = linop.matrix_log_on_support(rho, tol)
    log_sigma = linop.matrix_log_on_support(sigma, tol)
    return float(np.trace(rho @ (log_rho - log_sigma)).real)


def mutual_information(joint, dims):
    """``S(A) + S(B) - S(AB)`` of a bipartite state."""
    joint = linop.as_hermitian(joint)
    a = linop.partial_trace(joint, dims, keep=0)
    b = linop.partial_trace(joint, dims, keep=1)
    return von_neumann_entropy(a) + von_neumann_entropy(b) - von_neumann_entropy(joint)


def mutual_information_relative(joint, dims):
    """Same quantity as :func:`mutual_information`, as ``D(AB || A (x) B)``."""
    joint = check_state(joint)
    a = linop.partial_trace(joint, dims, keep=0)
    b = linop.partial_trace(joint, dims, keep=1)
    return relative_entropy(joint, np.kron(a, b))


def holevo_chi(weights, states: Sequence):
    """``S(sum p_x rho_x) - sum p_x S(rho_x)``."""
    p = check_distribution(weights)
    if len(states) != p.size:
        raise InvalidInput("need one state per weight")
    avg = sum(px * np.asarray(s) for px, s in zip(p, states))
    return von_neumann_entropy(avg) - sum(px * von_neumann_entropy(s) for px, s in zip(p, states))


def glo_info_gain(bundle: PosteriorBundle, side=SYSTEM):
    """Prior entropy minus average posterior entropy on one side of the process.

    May be negative.
    """
    if side == SYSTEM:
        prior, posts = bundle.rho, bundle.system
    elif side == APPARATUS:
        prior, posts = bundle.xi, bundle.apparatus
    else:
        raise InvalidInput(f"side must be {SYSTEM} or {APPARATUS}")
    avg = sum(float(p) * von_neumann_entropy(s) for p, s in zip(bundle.probabilities, posts))
    return float(von_neumann_entropy(prior) - avg)


def instrument_glo(inst: Instrument, rho):
    """GLO information gain of a system instrument for prior ``rho``."""
    rho = check_state(rho)
    total = 0.0
    for op in inst.operations:
        out = linop.hermitize(channels.apply(op, rho))
        p = float(np.trace(out).real)
        if p > 0:
            total += p * von_neumann_entropy(out / p)
    return von_neumann_entropy(rho) - total


# -- second law -------------------------------------------------------------


@dataclass(frozen=True)
class ThermoReport:
    probabilities: Tuple[float, ...]
    shannon: float
    glo_system: float
    glo_apparatus: float
    avg_mutual_info: float
    per_outcome_mutual_info: Tuple[float, ...]
    eq5_lhs: float
    eq5_rhs: float
    delta_S_total: float
    identity_residual: float
    second_law_pass: bool
    tolerance: float = SECOND_LAW_TOL
    beta: Optional[float] = None
    net_cycle_work: Optional[float] = None

    @property
    def slack(self):
        return self.eq5_lhs - self.eq5_rhs

    def as_dict(self):
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        d["slack"] = self.slack
        return d


def register_entropy(bundle: PosteriorBundle):
    """``S(sigma_SAK)`` from the pooled spectra of the unnormalized outcome blocks.

    The register state is block diagonal, so its spectrum is the union of
    the block spectra; no division by ``p(x)`` is involved.
    """
    spectra = [np.linalg.eigvalsh(b) for b in bundle.blocks]
    return _entropy_of_spectrum(np.concatenate(spectra))


def second_law_audit(proc: MeasurementProcess, rho, beta=None, tol=SECOND_LAW_TOL):
    """Evaluate the entropy balance of one run of ``proc`` on prior ``rho``.

    The total entropy change is computed from the register state and
    compared with its decomposition into Shannon entropy, the two GLO
    gains and the average posterior mutual information.

    Raises:
        InternalInconsistency: if the two routes disagree by more than 1e-8.
    """
    b = posterior_bundle(proc, rho)
    p = b.probabilities
    shannon = shannon_entropy(p / p.sum())
    glo_s = glo_info_gain(b, SYSTEM)
    glo_a = glo_info_gain(b, APPARATUS)
    mis = tuple(
        0.0 if deg else mutual_information(j, b.dims) for j, deg in zip(b.joints, b.degenerate)
    )
    avg_mi = float(np.dot(p, mis))
    rhs = glo_s + glo_a + avg_mi
    delta = register_entropy(b) - von_neumann_entropy(np.kron(b.rho, b.xi))
    residual = float(abs(delta - (shannon - rhs)))
    if residual > IDENTITY_TOL:
        raise InternalInconsistency(
            f"entropy identity violated: delta_S={delta!r}, H - rhs={shannon - rhs!r}"
        )
    work = None
    if beta is not None:
        work = net_cycle_work(delta, beta)
    return ThermoReport(
        probabilities=tuple(float(x) for x in p),
        shannon=shannon,
        glo_system=glo_s,
        glo_apparatus=glo_a,
        avg_mutual_info=avg_mi,
        per_outcome_mutual_info=mis,
        eq5_lhs=shannon,
        eq5_rhs=rhs,
        delta_S_total=delta,
        identity_residual=residual,
        second_law_pass=delta >= -tol,
        tolerance=tol,
        beta=beta,
        net_cycle_work=work,
    )


def energy_accounting(rho, hamiltonian, beta):
    """Return ``(internal energy tr[H rho], free energy tr[H rho] - S/beta)``."""
    if not beta > 0:
        raise InvalidInput("beta must be positive")
    rho = check_state(rho)
    h = linop.as_hermitian(hamiltonian, "Hamiltonian")
    energy = float(np.trace(h @ rho).real)
    return energy, energy - von_neumann_entropy(rho) / beta


def net_cycle_work(delta_S, beta):
    """Net work of the adiabatic-then-isothermal cycle, ``-delta_S / beta``."""
    if not beta > 0:
        raise InvalidInput("beta must be positive")
    return -delta_S / beta


# -- third law --------------------------------------------------------------


@dataclass(frozen=True)
class ThirdLawAudit:
    passed: bool
    xi_min_eigenvalue: float
    premeasurement_strictly_positive: bool
    premeasurement_min_output_eigenvalue: float
    tolerance: float

    def __bool__(self):
        return self.passed


def third_law_audit(proc: MeasurementProcess, tol_strict=TOL_STRICT):
    lo = linop.min_eigenvalue(proc.xi)
    cls = channels.classify_channel(proc.premeasurement, tol_strict=tol_strict)
    return ThirdLawAudit(
        passed=lo > tol_strict and cls.strictly_positive,
        xi_min_eigenvalue=lo,
        premeasurement_strictly_positive=cls.strictly_positive,
        premeasurement_min_output_eigenvalue=cls.min_output_eigenvalue,
        tolerance=tol_strict,
    )


# -- negative GLO search ----------------------------------------------------


def search_negative_glo(inst: Instrument, trials=200, seed=0):
    """Random-restart search for the prior minimizing the GLO gain.

    The maximally mixed state is always evaluated; then trial ``t`` draws
    a pure state for even ``t`` and a full-rank state for odd ``t``.
    Returns ``(rho, value)`` of the minimizer.
    """
    d = inst.in_dim
    best_rho = maximally_mixed(d)
    best = instrument_glo(inst, best_rho)
    rng = np.random.default_rng(seed)
    for t in range(trials):
        if t % 2 == 0:
            rho = random_pure_state(d, rng)
        else:
            rho = random_full_rank_state(d, rng)
        value = instrument_glo(inst, rho)
        if value < best:
            best, best_rho = value, rho
    return best_rho, best


# -- trilemma ---------------------------------------------------------------

ARM_LAWS = "i"
ARM_AUTONOMOUS = "ii"
ARM_QUASICOMPLETE = "iii"


@dataclass(frozen=True)
class TrilemmaVerdict:
    """Which of the three mutually exclusive properties a process has.

    Arm (ii) is read as bistochasticity of the premeasurement alone.
    ``second_law_evidence`` is ``"certificate"`` when the composed channel is
    bistochastic (all priors covered) and ``"panel"`` when the entropy
    balance was only checked on ``panel_size`` seeded priors.
    """

    law_compatible: bool
    premeasurement_autonomous_ok: bool
    quasicomplete: bool
    failed_arms: Tuple[str, ...]
    third_law: bool
    second_law: bool
    second_law_evidence: str
    panel_size: int
    worst_panel_slack: Optional[float]
    nontrivial: bool
    notes: Tuple[str, ...] = field(default=())

    @property
    def pattern(self):
        return (self.law_compatible, self.premeasurement_autonomous_ok, self.quasicomplete)


def state_panel(dim, size=PANEL_SIZE, seed=0):
    """Maximally mixed state followed by seeded pure, full-rank and Wishart states."""
    rng = np.random.default_rng(seed)
    panel = [maximally_mixed(dim)]
    draws = (random_pure_state, random_full_rank_state, random_state)
    while len(panel) < size:
        panel.append(draws[len(panel) % 3](dim, rng))
    return panel


def trilemma_classify(proc: MeasurementProcess, panel_size=PANEL_SIZE, seed=0):
    """Evaluate the three arms for ``proc``.

    Raises:
        AmbiguousClassification: propagated from instrument classification.
        InternalInconsistency: if all three arms hold for a nontrivial observable.
    """
    inst = induced_instrument(proc)
    nontrivial = classify_observable(induced_observable(inst)).nontrivial
    third = third_law_audit(proc).passed
    composed = channels.classify_channel(proc.composed_channel())
    worst = None
    if composed.bistochastic:
        second, evidence = True, "certificate"
    else:
        slacks = [second_law_audit(proc, rho).delta_S_total
                  for rho in state_panel(proc.sys_dim, panel_size, seed)]
        worst = float(min(slacks))
        second, evidence = worst >= -SECOND_LAW_TOL, "panel"
    arm_i = third and second
    arm_ii = channels.classify_channel(proc.premeasurement).bistochastic
    arm_iii = classify_instrument(inst).quasicomplete
    failed = tuple(
        name for name, ok in ((ARM_LAWS, arm_i), (ARM_AUTONOMOUS, arm_ii), (ARM_QUASICOMPLETE, arm_iii))
        if not ok
    )
    notes = []
    if not nontrivial:
        notes.append("induced observable is trivial; the trilemma is vacuous")
    elif not failed:
        raise InternalInconsistency("all three trilemma arms hold for a nontrivial observable")
    return TrilemmaVerdict(
        law_compatible=arm_i,
        premeasurement_autonomous_ok=arm_ii,
        quasicomplete=arm_iii,
        failed_arms=failed,
        third_law=third,
        second_law=second,
        second_law_evidence=evidence,
        panel_size=0 if evidence == "certificate" else panel_size,
        worst_panel_slack=worst,
        nontrivial=nontrivial,
        notes=tuple(notes),
    )
