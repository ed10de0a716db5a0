"""JSON encodings for matrices, assemblages and Gaussian objects.

Complex matrices: ``{"dim": n, "entries": [[[re, im], ...], ...]}`` (row
major).  Real matrices use plain numbers in place of ``[re, im]`` pairs.
Gaussian bipartite states: ``{"modes_a", "modes_b", "V", "r"}``.
"""

from __future__ import annotations

import json

import numpy as np

from .errors import InvalidInputError
from .finite import MeasurementAssemblage, StateAssemblage
from .gaussian import GaussianBipartiteState, GaussianChannel, GaussianMeasurement, GaussianState


class ParseError(InvalidInputError):
    """Malformed JSON input; the message names the offending location."""


def matrix_to_json(m):
    m = np.asarray(m)
    if np.iscomplexobj(m):
        entries = [[[float(z.real), float(z.imag)] for z in row] for row in m]
    else:
        entries = [[float(z) for z in row] for row in m]
    return {"dim": int(m.shape[0]), "entries": entries}


def matrix_from_json(d, where="matrix"):
    if isinstance(d, dict):
        if "entries" not in d:
            raise ParseError(f"{where}: missing 'entries'")
        rows, dim = d["entries"], d.get("dim")
    else:
        rows, dim = d, None
    if not isinstance(rows, list) or not rows or not all(isinstance(r, list) for r in rows):
        raise ParseError(f"{where}: entries must be a non-empty list of rows")
    out = []
    for i, row in enumerate(rows):
        vals = []
        for j, z in enumerate(row):
            if isinstance(z, list):
                if len(z) != 2 or not all(isinstance(t, (int, float)) for t in z):
                    raise ParseError(f"{where}[{i}][{j}]: complex entries are [re, im] pairs")
                vals.append(complex(z[0], z[1]))
            elif isinstance(z, (int, float)) and not isinstance(z, bool):
                vals.append(float(z))
            else:
                raise ParseError(f"{where}[{i}][{j}]: expected a number or [re, im] pair")
        out.append(vals)
    if len({len(r) for r in out}) != 1:
        raise ParseError(f"{where}: rows have different lengths")
    m = np.array(out)
    if dim is not None and m.shape[0] != dim:
        raise ParseError(f"{where}: 'dim' is {dim} but there are {m.shape[0]} rows")
    return m


def _vector(v, where):
    if v is None:
        return None
    if not isinstance(v, list) or not all(isinstance(t, (int, float)) and not isinstance(t, bool) for t in v):
        raise ParseError(f"{where}: expected a list of numbers")
    return np.array(v, dtype=float)


def measurement_assemblage_to_json(a):
    return {"labels": list(a.labels), "settings": [[matrix_to_json(e) for e in s.effects] for s in a.settings]}


def measurement_assemblage_from_json(d):
    try:
        sets = d["settings"]
    except (KeyError, TypeError):
        raise ParseError("assemblage: missing 'settings'") from None
    rows = tuple(tuple(matrix_from_json(e, f"settings[{x}][{a}]") for a, e in enumerate(s)) for x, s in enumerate(sets))
    return MeasurementAssemblage(rows)


def state_assemblage_to_json(a):
    return {"labels": list(a.labels), "members": [[matrix_to_json(e) for e in row] for row in a.members]}


def state_assemblage_from_json(d):
    try:
        rows = d["members"]
    except (KeyError, TypeError):
        raise ParseError("assemblage: missing 'members'") from None
    return StateAssemblage(tuple(tuple(matrix_from_json(e, f"members[{x}][{a}]") for a, e in enumerate(r)) for x, r in enumerate(rows)))


def gaussian_state_to_json(st):
    if isinstance(st, GaussianBipartiteState):
        return {"modes_a": st.modes_a, "modes_b": st.modes_b, "V": st.V.tolist(), "r": st.r.tolist()}
    return {"modes": st.modes, "V": st.V.tolist(), "r": st.r.tolist()}


def gaussian_state_from_json(d):
    if not isinstance(d, dict):
        raise ParseError("state: expected a JSON object")
    if "V" not in d:
        raise ParseError("state: missing 'V'")
    v = matrix_from_json(d["V"], "V")
    if np.iscomplexobj(v):
        raise ParseError("V: covariance matrices are real")
    r = _vector(d.get("r"), "r")
    if "modes_a" in d:
        ma, mb = d["modes_a"], d.get("modes_b")
        if not isinstance(ma, int) or (mb is not None and not isinstance(mb, int)):
            raise ParseError("modes_a/modes_b: expected integers")
        if mb is not None and 2 * (ma + mb) != v.shape[0]:
            raise ParseError(f"V: expected size {2 * (ma + mb)} for modes ({ma}, {mb}), got {v.shape[0]}")
        return GaussianBipartiteState.from_matrix(v, ma, r)
    return GaussianState(v, r)


def gaussian_channel_to_json(ch):
    return {"M": ch.M.tolist(), "N": ch.N.tolist(), "c": ch.c.tolist()}


def gaussian_channel_from_json(d):
    try:
        return GaussianChannel(matrix_from_json(d["M"], "M"), matrix_from_json(d["N"], "N"), _vector(d.get("c"), "c"))
    except (KeyError, TypeError):
        raise ParseError("channel: expected keys 'M' and 'N'") from None


def gaussian_measurement_to_json(meas):
    return {"K": meas.K.tolist(), "L": meas.L.tolist(), "m": meas.m.tolist()}


def gaussian_measurement_from_json(d):
    try:
        return GaussianMeasurement(matrix_from_json(d["K"], "K"), matrix_from_json(d["L"], "L"), _vector(d.get("m"), "m"))
    except (KeyError, TypeError):
        raise ParseError("measurement: expected keys 'K' and 'L'") from None


def load_json(path):
    """Read a JSON file, turning syntax errors into :class:`ParseError` with line and column."""
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    except OSError as exc:
        raise ParseError(f"{path}: {exc.strerror}") from None
