"""Command-line front end: ``construct``, ``audit`` and ``verify``.

Exit codes: 0 all checks pass, 2 some check failed, 3 invalid input,
4 internal inconsistency (two computation routes disagree).
"""

import argparse
import json
import sys
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional

import numpy as np

from . import __version__, channels, linop, serialization, tolerances
from .errors import InternalInconsistency, InvalidInput, TrilemmaError
from .instruments import (
    classify_instrument,
    efficient_instrument,
    induced_observable,
    instrument_choi_distance,
    luders_instrument,
    random_instrument,
)
from .measproc import (
    induced_instrument,
    ozawa_dilation,
    random_process,
    smoothed,
    thermo_construction,
)
from .qobjects import (
    classify_observable,
    is_trivial_effect,
    random_full_rank_state,
    random_povm,
    random_pure_state,
    random_state,
    random_unitary,
)
from .thermo import (
    SECOND_LAW_TOL,
    second_law_audit,
    state_panel,
    third_law_audit,
    trilemma_classify,
)

EXIT_OK = 0
EXIT_FAILED = 2
EXIT_INVALID = 3
EXIT_INCONSISTENT = 4

MAX_DIM = 4
MAX_OUTCOMES = 4
MAX_TRIALS = 10000


def subseed(seed, index):
    """Per-trial seed: a hash of ``(seed, index)`` via ``numpy.random.SeedSequence``.

    Trial results depend only on their own subseed, so sweeps can be split
    across workers without changing the report.
    """
    return int(np.random.SeedSequence([int(seed), int(index)]).generate_state(1, np.uint64)[0])


# -- reports ----------------------------------------------------------------


@dataclass
class Report:
    command: str
    config: Dict
    checks: List[Dict] = field(default_factory=list)
    payload: Dict = field(default_factory=dict)

    def check(self, name, passed, residual, tolerance, **extra):
        self.checks.append(
            {"name": name, "passed": bool(passed), "residual": _plain(residual), "tolerance": tolerance, **extra}
        )

    @property
    def passed(self):
        return all(c["passed"] for c in self.checks)

    def as_dict(self):
        return {
            "tool": "trilemma",
            "version": __version__,
            "command": self.command,
            "config": self.config,
            "passed": self.passed,
            "n_checks": len(self.checks),
            "n_failed": sum(not c["passed"] for c in self.checks),
            "checks": self.checks,
            "payload": self.payload,
        }

    def to_markdown(self):
        d = self.as_dict()
        lines = [
            f"# trilemma {self.command}",
            "",
            f"version {__version__}, seed {self.config.get('seed')}, "
            f"{d['n_checks']} checks, {d['n_failed']} failed",
            "",
            "| check | passed | residual | tolerance |",
            "|---|---|---|---|",
        ]
        for c in self.checks:
            lines.append(f"| {c['name']} | {'yes' if c['passed'] else 'NO'} | {c['residual']} | {c['tolerance']} |")
        return "\n".join(lines) + "\n"


def _plain(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, float) and not np.isfinite(v):
        return None
    return v


def _jsonable(o):
    if isinstance(o, dict):
        return {str(k): _jsonable(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_jsonable(v) for v in o]
    if isinstance(o, np.ndarray):
        return _jsonable(o.tolist())
    if isinstance(o, complex):
        return [o.real, o.imag]
    return _plain(o)


def _emit_report(report: Report, args):
    if args.format == "markdown":
        text = report.to_markdown()
    else:
        text = serialization.dumps(_jsonable(report.as_dict()))
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK if report.passed else EXIT_FAILED


def _config(args, **extra):
    cfg = {k: v for k, v in vars(args).items() if k not in ("func",) and v is not None}
    cfg.update(extra)
    cfg.setdefault("seed", getattr(args, "seed", None))
    cfg["tolerances"] = {
        "psd": tolerances.TOL_PSD,
        "strict": tolerances.TOL_STRICT,
        "rank": tolerances.TOL_RANK,
        "p_floor": tolerances.P_FLOOR,
    }
    return cfg


# -- construct --------------------------------------------------------------


def cmd_construct(args):
    obs = inst = None
    if args.instrument:
        inst = serialization.load(args.instrument, "instrument")
    elif args.observable:
        obs = serialization.load(args.observable, "observable")
    else:
        raise InvalidInput("construct needs --observable or --instrument")
    unitaries = serialization.load(args.unitaries, "unitaries") if args.unitaries else None
    if args.kind == "ozawa":
        if inst is None:
            inst = luders_instrument(obs) if unitaries is None else efficient_instrument(obs, unitaries)
        proc = ozawa_dilation(inst)
        if args.smooth:
            proc = smoothed(proc, args.smooth)
    else:
        if obs is None:
            obs = induced_observable(inst)
        if unitaries is None:
            unitaries = [np.eye(obs.dim)] * len(obs)
        xi = serialization.load(args.xi, "state") if args.xi else None
        proc = thermo_construction(obs, unitaries, xi)
    proc.metadata.update({
        "pure_xi": bool(np.linalg.matrix_rank(proc.xi, tol=tolerances.TOL_STRICT) == 1),
        "third_law": third_law_audit(proc).passed,
        "version": __version__,
    })
    text = serialization.dumps(serialization.encode_process(proc))
    # the written file must load back
    serialization.decode_process(json.loads(text))
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


# -- audit ------------------------------------------------------------------


def cmd_audit(args):
    proc = serialization.load(args.process, "process")
    if args.state:
        states = [serialization.load(args.state, "state")]
    else:
        n = args.random_states
        states = [_panel_state(proc.sys_dim, subseed(args.seed, t), t) for t in range(n)]
    report = Report("audit", _config(args))
    audits = []
    for t, rho in enumerate(states):
        r = second_law_audit(proc, rho, beta=args.beta)
        report.check(f"second_law[{t}]", r.second_law_pass, r.delta_S_total, -r.tolerance)
        audits.append(r.as_dict())
    third = third_law_audit(proc)
    inst = induced_instrument(proc)
    icls = classify_instrument(inst)
    verdict = trilemma_classify(proc, seed=args.seed)
    report.payload = {
        "second_law": audits,
        "third_law": vars(third),
        "induced_instrument": {
            "quasicomplete": icls.quasicomplete,
            "efficient": icls.efficient,
            "strictly_positive": icls.strictly_positive,
            "per_outcome": [{"label": x, "tag": p.tag, "margin": p.margin}
                            for x, p in zip(inst.labels, icls.per_outcome)],
        },
        "trilemma": vars(verdict),
    }
    return _emit_report(report, args)


def _panel_state(dim, seed, index):
    rng = np.random.default_rng(seed)
    kind = index % 3
    if kind == 0:
        return random_pure_state(dim, rng)
    if kind == 1:
        return random_full_rank_state(dim, rng)
    return random_state(dim, rng)


# -- verify -----------------------------------------------------------------


def _nogo_trial(d, n, seed, report, t):
    rng = np.random.default_rng(seed)
    if t % 2 == 0:
        target = efficient_instrument(random_povm(d, n, rng), [random_unitary(d, rng) for _ in range(n)])
    else:
        target = random_instrument(d, n, n_kraus=2, seed=rng)
    proc = smoothed(ozawa_dilation(target))
    inst = induced_instrument(proc)
    worst = None
    ok = True
    for op in inst.operations:
        if is_trivial_effect(op.effect())[0]:
            continue
        count = channels.choi_rank(op)
        worst = count if worst is None else min(worst, count)
        ok = ok and count >= 2
    report.check(f"nogo[{t}]", ok, worst, 2, kind="min_kraus_count")


def _lemma2_trial(d, n, seed, report, t):
    rng = np.random.default_rng(seed)
    proc = random_process(d, n, n, seed=rng)
    rho = random_state(d, rng)
    r = second_law_audit(proc, rho)  # raises on breach
    report.check(f"lemma2_identity[{t}]", r.identity_residual <= 1e-8, r.identity_residual, 1e-8)


def _lemma3_trial(d, n, seed, report, t):
    rng = np.random.default_rng(seed)
    obs = random_povm(d, n, rng)
    us = [random_unitary(d, rng) for _ in range(n)]
    proc = thermo_construction(obs, us, random_full_rank_state(n, rng))
    inst = induced_instrument(proc)
    worst = 0.0
    for op, z in zip(inst.operations, proc.pointer.effects):
        for _, _, b in linop.matrix_units(d):
            lhs = channels.dual_apply(proc.premeasurement, np.kron(b, z))
            rhs = np.kron(channels.dual_apply(op, b), np.eye(n))
            worst = max(worst, linop.max_abs(lhs - rhs))
    report.check(f"lemma3[{t}]", worst <= 1e-9, worst, 1e-9)


def theorem2_closure(obs, unitaries, xi=None, panel=50, seed=0):
    """Check every closure property of the thermodynamic construction.

    Returns ``{name: (passed, residual, tolerance)}``.
    """
    out = {}
    proc = thermo_construction(obs, unitaries, xi)
    target = efficient_instrument(obs, unitaries)
    dist = instrument_choi_distance(induced_instrument(proc), target)
    out["reproduces_target"] = (dist <= 1e-9, dist, 1e-9)
    third = third_law_audit(proc)
    out["third_law"] = (third.passed, third.xi_min_eigenvalue, tolerances.TOL_STRICT)
    d, n = obs.dim, len(obs)
    unit_res = linop.max_abs(channels.apply(proc.premeasurement, np.eye(d * n)) - np.eye(d * n))
    if classify_observable(obs).nontrivial:
        out["premeasurement_not_unital"] = (unit_res > 1e-3, unit_res, 1e-3)
    same = thermo_construction(obs, [unitaries[0]] * n, xi)
    comp = channels.classify_channel(same.composed_channel())
    comp_res = max(comp.trace_residual, comp.unit_residual)
    out["equal_unitaries_bistochastic"] = (comp_res <= 1e-9, comp_res, 1e-9)
    worst_mi = worst_glo_a = 0.0
    worst_delta = np.inf
    for rho in state_panel(d, panel, seed):
        r = second_law_audit(proc, rho)
        worst_mi = max(worst_mi, max(abs(m) for m in r.per_outcome_mutual_info))
        worst_glo_a = max(worst_glo_a, r.glo_apparatus)
        worst_delta = min(worst_delta, r.delta_S_total)
    out["mutual_information_zero"] = (worst_mi <= 1e-9, worst_mi, 1e-9)
    out["apparatus_glo_nonpositive"] = (worst_glo_a <= 1e-9, worst_glo_a, 1e-9)
    out["second_law_panel"] = (worst_delta >= -SECOND_LAW_TOL, worst_delta, -SECOND_LAW_TOL)
    return out


def _theorem2_trial(d, n, seed, report, t):
    rng = np.random.default_rng(seed)
    obs = random_povm(d, n, rng)
    us = [random_unitary(d, rng) for _ in range(n)]
    for name, (ok, res, tol) in theorem2_closure(obs, us, seed=subseed(seed, 1)).items():
        report.check(f"theorem2[{t}].{name}", ok, res, tol)


def davies_fixtures(d, seed):
    """One operation of each form: single Kraus, measure-and-prepare pure, two-Kraus mixture."""
    rng = np.random.default_rng(seed)
    k = random_unitary(d, rng) @ linop.matrix_sqrt(random_povm(d, 2, rng).effects[0])
    single = channels.QuantumOperation((k,))
    e = random_povm(d, 2, rng).effects[0]
    phi = random_pure_state(d, rng)
    vec = np.linalg.eigh(phi)[1][:, -1]
    root = linop.matrix_sqrt(e)
    prep = channels.QuantumOperation(tuple(np.outer(vec, root[i, :]) for i in range(d)))
    mixture = channels.random_operation(d, n_kraus=2, seed=rng, trace_preserving=False)
    return {channels.SINGLE_KRAUS: single, channels.PURE_PREPARE: prep,
            channels.NOT_PURITY_PRESERVING: mixture}


def _davies_trial(d, n, seed, report, t):
    for expected, op in davies_fixtures(d, seed).items():
        got = channels.purity_class(op)
        report.check(f"davies[{t}].{expected}", got.tag == expected, got.margin, tolerances.TOL_RANK, tag=got.tag)


SUITES: Dict[str, Callable] = {
    "nogo": _nogo_trial,
    "lemma2_identity": _lemma2_trial,
    "lemma3": _lemma3_trial,
    "theorem2": _theorem2_trial,
    "davies": _davies_trial,
}


def cmd_verify(args):
    if not (1 <= args.dim <= MAX_DIM and 1 <= args.outcomes <= MAX_OUTCOMES and 1 <= args.trials <= MAX_TRIALS):
        raise InvalidInput(
            f"parameters outside caps: dim <= {MAX_DIM}, outcomes <= {MAX_OUTCOMES}, trials <= {MAX_TRIALS}"
        )
    if args.suite in ("nogo", "lemma3", "theorem2") and (args.dim < 2 or args.outcomes < 2):
        raise InvalidInput(f"suite {args.suite} needs dim >= 2 and outcomes >= 2")
    report = Report("verify", _config(args))
    trial = SUITES[args.suite]
    for t in range(args.trials):
        trial(args.dim, args.outcomes, subseed(args.seed, t), report, t)
    return _emit_report(report, args)


# -- entry point ------------------------------------------------------------


def build_parser():
    parser = argparse.ArgumentParser(prog="trilemma", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("-o", "--output", help="write to this file instead of stdout")
        p.add_argument("--format", choices=("json", "markdown"), default="json")
        p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("construct", help="build a measurement process file")
    p.add_argument("kind", choices=("ozawa", "thermo"))
    p.add_argument("--observable")
    p.add_argument("--instrument")
    p.add_argument("--unitaries")
    p.add_argument("--xi", help="apparatus state file (thermo only)")
    p.add_argument("--smooth", type=float, help="mix xi with the complete mixture (ozawa only)")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_construct)

    p = sub.add_parser("audit", help="second/third-law audit and trilemma verdict of a process")
    p.add_argument("process")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--state")
    g.add_argument("--random-states", type=int, default=50)
    p.add_argument("--beta", type=float)
    common(p)
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("verify", help="run a seeded property suite")
    p.add_argument("suite", choices=sorted(SUITES))
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--outcomes", type=int, default=2)
    p.add_argument("--trials", type=int, default=20)
    common(p)
    p.set_defaults(func=cmd_verify)
    return parser


def _error(kind, exc, code):
    doc = {"error": kind, "message": str(exc)}
    loc = getattr(exc, "location", None)
    if loc is not None:
        doc["location"] = loc
    sys.stderr.write(serialization.dumps(doc))
    return code


def main(argv: Optional[List[str]] = None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "beta", None) is not None and not args.beta > 0:
        return _error("InvalidInput", "beta must be positive", EXIT_INVALID)
    try:
        return args.func(args)
    except InternalInconsistency as exc:
        return _error(type(exc).__name__, exc, EXIT_INCONSISTENT)
    except (InvalidInput, OSError) as exc:
        return _error(type(exc).__name__, exc, EXIT_INVALID)
    except TrilemmaError as exc:
        return _error(type(exc).__name__, exc, EXIT_FAILED)


if __name__ == "__main__":
    sys.exit(main())
