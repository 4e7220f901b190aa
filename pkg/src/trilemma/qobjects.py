"""States, effects, observables and seeded random instances of them."""

from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence, Tuple

import numpy as np

from . import linop
from .errors import InvalidInput
from .tolerances import TOL_EQ, TOL_PSD, TOL_STRICT

FULL_RANK_MIX = 0.05


def _frozen(a):
    a = np.array(a, dtype=np.complex128)
    a.setflags(write=False)
    return a


def check_state(rho, name="state", tol=TOL_PSD):
    """Validate a density matrix and return it as a Hermitian array."""
    r = linop.as_hermitian(rho, name)
    tr = float(np.trace(r).real)
    if abs(tr - 1.0) > 1e-10:
        raise InvalidInput(f"{name} has trace {tr!r}, expected 1")
    lo = float(np.linalg.eigvalsh(r)[0])
    if lo < -tol:
        raise InvalidInput(f"{name} is not positive semidefinite (min eigenvalue {lo:.3g})")
    return r


def check_effect(e, name="effect", tol=TOL_PSD):
    m = linop.as_hermitian(e, name)
    w = np.linalg.eigvalsh(m)
    if w[0] < -tol or w[-1] > 1 + tol:
        raise InvalidInput(f"{name} eigenvalues [{w[0]:.3g}, {w[-1]:.3g}] outside [0, 1]")
    return m


def maximally_mixed(dim):
    return np.eye(dim, dtype=np.complex128) / dim


def pure_state(vector):
    v = np.asarray(vector, dtype=np.complex128).reshape(-1)
    n = np.linalg.norm(v)
    if n == 0:
        raise InvalidInput("zero vector")
    v = v / n
    return np.outer(v, v.conj())


@dataclass(frozen=True)
class Observable:
    """A discrete POVM ``{E_x}`` with ordered string labels.

    Zero effects are rejected rather than pruned so that labels keep
    their positions.
    """

    labels: Tuple[str, ...]
    effects: Tuple[np.ndarray, ...]

    def __post_init__(self):
        labels = tuple(str(x) for x in self.labels)
        if len(labels) < 1 or len(labels) != len(self.effects):
            raise InvalidInput("need one label per effect and at least one outcome")
        if len(set(labels)) != len(labels):
            raise InvalidInput(f"duplicate labels in {labels}")
        effects = tuple(_frozen(check_effect(e, f"effect {x!r}")) for x, e in zip(labels, self.effects))
        dims = {e.shape[0] for e in effects}
        if len(dims) != 1:
            raise InvalidInput(f"effects have mismatched dimensions {sorted(dims)}")
        for x, e in zip(labels, effects):
            if linop.max_abs(e) <= TOL_STRICT:
                raise InvalidInput(f"effect {x!r} is zero; remove the outcome instead")
        total = sum(effects)
        res = linop.max_abs(total - np.eye(total.shape[0]))
        if res > TOL_EQ:
            raise InvalidInput(f"effects sum to identity only up to {res:.3g}")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "effects", effects)

    @classmethod
    def from_effects(cls, effects: Sequence, labels: Optional[Sequence[str]] = None):
        if labels is None:
            labels = [str(i) for i in range(len(effects))]
        return cls(tuple(labels), tuple(effects))

    @property
    def dim(self):
        return self.effects[0].shape[0]

    @property
    def n_outcomes(self):
        return len(self.effects)

    def __len__(self):
        return len(self.effects)


def computational_basis_observable(dim):
    return Observable.from_effects([linop.basis_projector(dim, i) for i in range(dim)])


def born_probability(obs: Observable, rho):
    """Outcome distribution ``p(x) = tr[E_x rho]`` clipped to ``[0, 1]``."""
    r = check_state(rho)
    if r.shape[0] != obs.dim:
        raise InvalidInput(f"state dimension {r.shape[0]} != observable dimension {obs.dim}")
    p = np.array([np.trace(e @ r).real for e in obs.effects])
    return np.clip(p, 0.0, 1.0)


def check_distribution(p):
    p = np.asarray(p, dtype=float).reshape(-1)
    if p.size < 1 or not np.all(np.isfinite(p)):
        raise InvalidInput("distribution must be a non-empty finite vector")
    if np.any(p < -1e-10) or np.any(p > 1 + 1e-10):
        raise InvalidInput("probabilities outside [0, 1]")
    if abs(p.sum() - 1.0) > 1e-9:
        raise InvalidInput(f"probabilities sum to {p.sum()!r}")
    return np.clip(p, 0.0, 1.0)


def is_trivial_effect(e, tol=TOL_EQ):
    """Return ``(True, alpha)`` when ``e == alpha * 1``, else ``(False, None)``."""
    m = np.asarray(e)
    d = m.shape[0]
    alpha = float(np.trace(m).real) / d
    if linop.max_abs(m - alpha * np.eye(d)) <= tol:
        return True, alpha
    return False, None


class ObservableClassification(NamedTuple):
    nontrivial: bool
    projective: bool
    strictly_positive: bool


def classify_observable(obs: Observable, tol=TOL_EQ, tol_strict=TOL_STRICT):
    nontrivial = any(not is_trivial_effect(e, tol)[0] for e in obs.effects)
    projective = True
    for i, a in enumerate(obs.effects):
        for j, b in enumerate(obs.effects):
            target = a if i == j else 0.0
            if linop.max_abs(a @ b - target) > tol:
                projective = False
                break
        if not projective:
            break
    strictly_positive = all(linop.min_eigenvalue(e) > tol_strict for e in obs.effects)
    return ObservableClassification(nontrivial, projective, strictly_positive)


# -- random instances -------------------------------------------------------


def _rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def ginibre(rng, rows, cols):
    return rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))


def random_state(dim, seed=None, rank=None):
    """Wishart-style mixed state ``G G^dag / tr``."""
    rng = _rng(seed)
    g = ginibre(rng, dim, dim if rank is None else rank)
    rho = g @ g.conj().T
    return linop.hermitize(rho / np.trace(rho).real)


def random_pure_state(dim, seed=None):
    rng = _rng(seed)
    return pure_state(ginibre(rng, dim, 1))


def random_full_rank_state(dim, seed=None, eps=FULL_RANK_MIX, max_tries=100):
    rng = _rng(seed)
    for _ in range(max_tries):
        rho = (1 - eps) * random_state(dim, rng) + eps * maximally_mixed(dim)
        if linop.min_eigenvalue(rho) > TOL_STRICT:
            return rho
    raise InvalidInput(f"could not draw a full-rank state with eps={eps}")


def random_unitary(dim, seed=None):
    """Haar unitary from QR of a Ginibre matrix with phases fixed on the diagonal of R."""
    rng = _rng(seed)
    q, r = np.linalg.qr(ginibre(rng, dim, dim))
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def random_povm(dim, n_outcomes, seed=None):
    """Normalize Gram blocks ``M_i^dag M_i`` by the inverse square root of their sum."""
    if n_outcomes < 1:
        raise InvalidInput("n_outcomes must be >= 1")
    rng = _rng(seed)
    grams = []
    for _ in range(n_outcomes):
        m = ginibre(rng, dim, dim)
        grams.append(m.conj().T @ m)
    w, v = np.linalg.eigh(linop.hermitize(sum(grams)))
    inv_sqrt = (v / np.sqrt(w)) @ v.conj().T
    effects = [linop.hermitize(inv_sqrt @ g @ inv_sqrt) for g in grams]
    # absorb the last rounding error into one effect
    effects[-1] = linop.hermitize(effects[-1] + np.eye(dim) - sum(effects))
    return Observable.from_effects(effects)


_KINDS = ("state", "pure_state", "full_rank_state", "povm", "unitary")


def random_object(kind, dim, n_outcomes=2, seed=None):
    if dim < 1:
        raise InvalidInput("dim must be >= 1")
    if kind == "state":
        return random_state(dim, seed)
    if kind == "pure_state":
        return random_pure_state(dim, seed)
    if kind == "full_rank_state":
        return random_full_rank_state(dim, seed)
    if kind == "povm":
        return random_povm(dim, n_outcomes, seed)
    if kind == "unitary":
        return random_unitary(dim, seed)
    raise InvalidInput(f"unknown kind {kind!r}; expected one of {_KINDS}")
