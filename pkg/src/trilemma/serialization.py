"""JSON file formats.

* complex scalar: ``[re, im]``
* matrix: row-major nested list of complex scalars
* state: ``{"matrix": M}``
* observable: ``{"effects": [{"label": str, "matrix": M}, ...]}``
* unitaries: ``{"unitaries": [M, ...]}`` ordered like the observable's outcomes
* operation: ``{"in_dim": int, "out_dim": int, "kraus": [M, ...]}``
* instrument: ``{"operations": [{"label": str, "kraus": [M, ...]}, ...]}``
* process: ``{"sys_dim", "app_dim", "xi": M, "premeasurement": operation,
  "objectification": [{"label", "kraus"}, ...], "decomposable": bool,
  "metadata": {...}}``

Floats are written with 17 significant digits, so ``save -> load -> save``
reproduces the file byte for byte.
"""

import json
import math
from pathlib import Path

import numpy as np

from .channels import QuantumOperation
from .errors import InvalidInput
from .instruments import Instrument
from .measproc import MeasurementProcess
from .qobjects import Observable, check_state


class ParseError(InvalidInput):
    """Malformed file content; ``location`` is a dotted path into the document."""

    def __init__(self, message, location="$"):
        super().__init__(f"{location}: {message}")
        self.location = location
        self.detail = message


# -- writer -----------------------------------------------------------------


def _scalar(o):
    if o is None:
        return "null"
    if isinstance(o, (bool, np.bool_)):
        return "true" if o else "false"
    if isinstance(o, (int, np.integer)):
        return str(int(o))
    if isinstance(o, (float, np.floating)):
        x = float(o)
        if not math.isfinite(x):
            raise InvalidInput(f"cannot serialize non-finite number {x!r}")
        return format(x, ".17g")
    if isinstance(o, str):
        return json.dumps(o)
    raise TypeError(f"cannot serialize {type(o).__name__}")


def _is_flat(o):
    # inline lists of scalars and lists of [re, im] pairs
    if not isinstance(o, (list, tuple)):
        return False
    return all(
        not isinstance(e, (list, tuple, dict))
        or (isinstance(e, (list, tuple)) and all(not isinstance(f, (list, tuple, dict)) for f in e))
        for e in o
    )


def _emit(o, level, out):
    pad = "  " * level
    if isinstance(o, dict):
        if not o:
            out.append("{}")
            return
        out.append("{\n")
        items = list(o.items())
        for i, (k, v) in enumerate(items):
            out.append(f"{pad}  {json.dumps(str(k))}: ")
            _emit(v, level + 1, out)
            out.append(",\n" if i < len(items) - 1 else "\n")
        out.append(pad + "}")
    elif isinstance(o, (list, tuple)):
        if _is_flat(o):
            parts = []
            for e in o:
                if isinstance(e, (list, tuple)):
                    parts.append("[" + ", ".join(_scalar(f) for f in e) + "]")
                else:
                    parts.append(_scalar(e))
            out.append("[" + ", ".join(parts) + "]")
            return
        out.append("[\n")
        for i, v in enumerate(o):
            out.append(pad + "  ")
            _emit(v, level + 1, out)
            out.append(",\n" if i < len(o) - 1 else "\n")
        out.append(pad + "]")
    else:
        out.append(_scalar(o))


def dumps(obj):
    out = []
    _emit(obj, 0, out)
    out.append("\n")
    return "".join(out)


# -- encoders ---------------------------------------------------------------


def encode_matrix(m):
    a = np.asarray(m, dtype=np.complex128)
    return [[[float(z.real), float(z.imag)] for z in row] for row in a]


def encode_state(rho):
    return {"matrix": encode_matrix(rho)}


def encode_observable(obs: Observable):
    return {"effects": [{"label": x, "matrix": encode_matrix(e)} for x, e in zip(obs.labels, obs.effects)]}


def encode_operation(op: QuantumOperation):
    return {"in_dim": op.in_dim, "out_dim": op.out_dim, "kraus": [encode_matrix(k) for k in op.kraus]}


def _encode_outcomes(inst: Instrument):
    return [{"label": x, "kraus": [encode_matrix(k) for k in op.kraus]}
            for x, op in zip(inst.labels, inst.operations)]


def encode_instrument(inst: Instrument):
    return {"operations": _encode_outcomes(inst)}


def encode_process(proc: MeasurementProcess):
    return {
        "sys_dim": proc.sys_dim,
        "app_dim": proc.app_dim,
        "xi": encode_matrix(proc.xi),
        "premeasurement": encode_operation(proc.premeasurement),
        "objectification": _encode_outcomes(proc.objectification),
        "decomposable": bool(proc.decomposable),
        "metadata": proc.metadata,
    }


def encode_unitaries(unitaries):
    return {"unitaries": [encode_matrix(u) for u in unitaries]}


# -- decoders ---------------------------------------------------------------


def _require(doc, key, where):
    if not isinstance(doc, dict):
        raise ParseError("expected an object", where)
    if key not in doc:
        raise ParseError(f"missing key {key!r}", where)
    return doc[key]


def _number(v, where):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ParseError("expected a number", where)
    if not math.isfinite(v):
        raise ParseError("non-finite number", where)
    return float(v)


def decode_matrix(doc, where="$"):
    if not isinstance(doc, list) or not doc:
        raise ParseError("matrix must be a non-empty list of rows", where)
    rows = []
    width = None
    for i, row in enumerate(doc):
        rw = f"{where}[{i}]"
        if not isinstance(row, list) or not row:
            raise ParseError("row must be a non-empty list", rw)
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise ParseError(f"ragged row of length {len(row)}, expected {width}", rw)
        vals = []
        for j, z in enumerate(row):
            zw = f"{rw}[{j}]"
            if not isinstance(z, list) or len(z) != 2:
                raise ParseError("complex scalar must be [re, im]", zw)
            vals.append(complex(_number(z[0], zw + "[0]"), _number(z[1], zw + "[1]")))
        rows.append(vals)
    return np.array(rows, dtype=np.complex128)


def _wrap(fn, where):
    try:
        return fn()
    except ParseError:
        raise
    except InvalidInput as exc:
        raise ParseError(str(exc), where) from exc


def decode_state(doc, where="$"):
    m = decode_matrix(_require(doc, "matrix", where), f"{where}.matrix")
    return _wrap(lambda: check_state(m), where)


def decode_observable(doc, where="$"):
    effects = _require(doc, "effects", where)
    if not isinstance(effects, list):
        raise ParseError("effects must be a list", f"{where}.effects")
    labels, mats = [], []
    for i, e in enumerate(effects):
        ew = f"{where}.effects[{i}]"
        label = _require(e, "label", ew)
        if not isinstance(label, str):
            raise ParseError("label must be a string", f"{ew}.label")
        labels.append(label)
        mats.append(decode_matrix(_require(e, "matrix", ew), f"{ew}.matrix"))
    return _wrap(lambda: Observable(tuple(labels), tuple(mats)), where)


def _decode_kraus_list(doc, where):
    if not isinstance(doc, list) or not doc:
        raise ParseError("kraus must be a non-empty list", where)
    return [decode_matrix(k, f"{where}[{i}]") for i, k in enumerate(doc)]


def decode_operation(doc, where="$"):
    ks = _decode_kraus_list(_require(doc, "kraus", where), f"{where}.kraus")
    op = _wrap(lambda: QuantumOperation(tuple(ks)), where)
    for key, val in (("in_dim", op.in_dim), ("out_dim", op.out_dim)):
        declared = _require(doc, key, where)
        if declared != val:
            raise ParseError(f"{key}={declared!r} but Kraus operators imply {val}", f"{where}.{key}")
    return op


def _decode_outcomes(doc, where):
    if not isinstance(doc, list) or not doc:
        raise ParseError("expected a non-empty list of outcomes", where)
    labels, ops = [], []
    for i, e in enumerate(doc):
        ew = f"{where}[{i}]"
        label = _require(e, "label", ew)
        if not isinstance(label, str):
            raise ParseError("label must be a string", f"{ew}.label")
        ks = _decode_kraus_list(_require(e, "kraus", ew), f"{ew}.kraus")
        labels.append(label)
        ops.append(_wrap(lambda ks=ks: QuantumOperation(tuple(ks)), ew))
    return _wrap(lambda: Instrument(tuple(labels), tuple(ops)), where)


def decode_instrument(doc, where="$"):
    return _decode_outcomes(_require(doc, "operations", where), f"{where}.operations")


def decode_process(doc, where="$"):
    sys_dim = _require(doc, "sys_dim", where)
    app_dim = _require(doc, "app_dim", where)
    for key, v in (("sys_dim", sys_dim), ("app_dim", app_dim)):
        if isinstance(v, bool) or not isinstance(v, int):
            raise ParseError("expected an integer", f"{where}.{key}")
    xi = decode_matrix(_require(doc, "xi", where), f"{where}.xi")
    pre = decode_operation(_require(doc, "premeasurement", where), f"{where}.premeasurement")
    obj = _decode_outcomes(_require(doc, "objectification", where), f"{where}.objectification")
    decomposable = doc.get("decomposable", True)
    if not isinstance(decomposable, bool):
        raise ParseError("expected a boolean", f"{where}.decomposable")
    metadata = doc.get("metadata", {})
    if not isinstance(metadata, dict):
        raise ParseError("expected an object", f"{where}.metadata")
    return _wrap(
        lambda: MeasurementProcess(sys_dim, app_dim, xi, pre, obj, decomposable, metadata), where
    )


def decode_unitaries(doc, where="$"):
    us = _require(doc, "unitaries", where)
    if not isinstance(us, list) or not us:
        raise ParseError("unitaries must be a non-empty list", f"{where}.unitaries")
    return [decode_matrix(u, f"{where}.unitaries[{i}]") for i, u in enumerate(us)]


ENCODERS = {
    "state": encode_state,
    "observable": encode_observable,
    "operation": encode_operation,
    "instrument": encode_instrument,
    "process": encode_process,
    "unitaries": encode_unitaries,
}

DECODERS = {
    "state": decode_state,
    "observable": decode_observable,
    "operation": decode_operation,
    "instrument": decode_instrument,
    "process": decode_process,
    "unitaries": decode_unitaries,
}


def save(obj, kind, path):
    Path(path).write_text(dumps(ENCODERS[kind](obj)))


def load(path, kind):
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, f"line {exc.lineno} column {exc.colno}") from exc
    return DECODERS[kind](doc)
