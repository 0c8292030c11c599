"""JSON and CSV export of matrices, solutions and coalescence samples.

All numbers are written as decimal strings with a fixed number of
significant digits, so identical inputs give byte-identical files.
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path


from .basis import as_function, basis_hash
from .specfun import format_decimal, get_precision

LOG_CONVENTION = "g = ln((s^2+t^2)/2) = 2 ln r"
SIGN_CONVENTION = "(delta^2 K - delta U) C = E (-S) C, weight u(t^2-s^2)"
RESIDUAL_DEFINITION = "regular coefficient f of the fit a/x + f + b x to (H-E)Psi at x = eps, eps/2, eps/4"


def decimal(x, digits=30):
    """Decimal string with ``digits`` significant digits (plain for exact integers)."""
    if x is None:
        return ""
    return format_decimal(x, digits)


def _basis_listing(basis, digits):
    return [as_function(f).to_dict(digits) for f in basis]


def _dump_json(obj):
    return json.dumps(obj, indent=1, sort_keys=False) + "\n"


def _csv_text(rows, comments=()):
    buf = io.StringIO()
    for line in comments:
        buf.write(f"# {line}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerows(rows)
    return buf.getvalue()


def _write(path, text):
    if path is None or str(path) == "-":
        return text
    Path(path).write_text(text)
    return text


def matrices_payload(mats, digits=30):
    meta = {
        "Z": decimal(mats.Z, digits),
        "precision_bits": get_precision(),
        "size": len(mats.basis),
        "basis_hash": basis_hash(mats.basis),
        "log_convention": LOG_CONVENTION,
        "sign_convention": SIGN_CONVENTION,
        "k_asymmetry": decimal(mats.k_asymmetry, 6),
        "basis": _basis_listing(mats.basis, digits),
    }
    out = {"metadata": meta}
    for name in ("S", "U", "K"):
        out[name] = [[decimal(x, digits) for x in row] for row in getattr(mats, name)]
    return out


def write_matrices(mats, path=None, fmt="json", digits=30):
    """JSON: one document. CSV: ``<stem>_S.csv``, ``_U.csv``, ``_K.csv``.

    Returns the text written (for CSV, the three files joined).
    """
    payload = matrices_payload(mats, digits)
    if fmt == "json":
        return _write(path, _dump_json(payload))
    meta = payload["metadata"]
    comments = [f"Z={meta['Z']} precision_bits={meta['precision_bits']} basis_hash={meta['basis_hash']}",
                f"log_convention: {LOG_CONVENTION}", f"sign_convention: {SIGN_CONVENTION}"]
    texts = []
    for name in ("S", "U", "K"):
        text = _csv_text(payload[name], comments + [f"matrix {name}"])
        texts.append(text)
        if path is not None and str(path) != "-":
            p = Path(path)
            _write(p.with_name(f"{p.stem}_{name}.csv"), text)
    return "".join(texts)


def result_payload(result, basis, Z, digits=30):
    return {
        "Z": decimal(Z, digits),
        "energy": decimal(result.energy, digits),
        "delta": decimal(result.delta, digits),
        "residual_norm": decimal(result.residual_norm, 6),
        "min_pivot": decimal(result.min_pivot, 6),
        "dropped": list(result.dropped),
        "method": result.method,
        "precision_bits": get_precision(),
        "size": len(basis),
        "basis_hash": basis_hash(basis),
        "notes": list(result.notes),
        "scan": [[decimal(d, digits), decimal(e, digits)] for d, e in result.scan],
        "coefficients": [
            {"label": as_function(f).label, "value": decimal(c, digits)}
            for f, c in zip(basis, result.coefficients)
        ],
    }


def write_result(result, basis, Z, path=None, fmt="json", digits=30):
    payload = result_payload(result, basis, Z, digits)
    if fmt == "json":
        return _write(path, _dump_json(payload))
    rows = [["key", "value"]]
    for key in ("Z", "energy", "delta", "residual_norm", "min_pivot", "method", "precision_bits",
                "size", "basis_hash"):
        rows.append([key, payload[key]])
    rows.append(["dropped", " ".join(map(str, payload["dropped"]))])
    for note in payload["notes"]:
        rows.append(["note", note])
    for d, e in payload["scan"]:
        rows.append(["scan", f"{d} {e}"])
    for k, entry in enumerate(payload["coefficients"]):
        rows.append([f"C[{k}] {entry['label']}", entry["value"]])
    return _write(path, _csv_text(rows))


def samples_payload(samples, kind, Z, delta, basis, digits=30):
    return {
        "kind": kind,
        "Z": decimal(Z, digits),
        "delta": decimal(delta, digits),
        "basis_hash": basis_hash(basis),
        "residual_definition": RESIDUAL_DEFINITION,
        "samples": [
            {"R": decimal(x.R, digits), "wf_value": decimal(x.wf_value, digits),
             "residual": decimal(x.residual, digits), "log10_ratio": decimal(x.log10_ratio, digits)}
            for x in samples
        ],
    }


def write_samples(samples, kind, Z, delta, basis, path=None, fmt="csv", digits=30):
    payload = samples_payload(samples, kind, Z, delta, basis, digits)
    if fmt == "json":
        return _write(path, _dump_json(payload))
    comments = [f"kind={kind} Z={payload['Z']} delta={payload['delta']} basis_hash={payload['basis_hash']}",
                f"residual: {RESIDUAL_DEFINITION}"]
    rows = [["R", "wf_value", "residual", "log10_ratio"]]
    rows += [[x["R"], x["wf_value"], x["residual"], x["log10_ratio"]] for x in payload["samples"]]
    return _write(path, _csv_text(rows, comments))


def read_samples_csv(text):
    """Parse a samples CSV back into (header comments, list of row dicts)."""
    lines = text.splitlines()
    comments = [ln[2:] for ln in lines if ln.startswith("# ")]
    body = [ln for ln in lines if not ln.startswith("#")]
    reader = csv.DictReader(body)
    return comments, list(reader)
