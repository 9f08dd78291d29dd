"""Canonical JSON/CSV serialization with atomic writes.

All structured objects go to JSON with sorted keys and default float repr
(shortest round-trip), so identical inputs produce bitwise-identical files.
Complex coefficient vectors serialize as [[re, im], ...] pairs tagged with
the basis content hash; loading against a different build of the basis
fails loudly rather than reinterpreting coefficients.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import os
import tempfile

import numpy as np

from .basis import Basis, SpectralScalar


class BasisMismatchError(RuntimeError):
    """Serialized coefficients belong to a different basis build."""


def canonical_dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=False)


def compact_dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def sha256_hex(data) -> str:
    if isinstance(data, str):
        data = data.encode("utf-8")
    return hashlib.sha256(data).hexdigest()


def file_sha256(path) -> str:
    with open(path, "rb") as fh:
        return sha256_hex(fh.read())


def atomic_write_text(path, text):
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json(path, obj):
    atomic_write_text(path, canonical_dumps(obj) + "\n")


def read_json(path):
    with open(path, "r") as fh:
        return json.load(fh)


def write_csv(path, header, rows, preamble=None):
    """Rows are dicts keyed by header entries; preamble lines go in front
    as '# ...' comments (config echo / input hashes)."""
    buf = io.StringIO()
    if preamble:
        for line in preamble:
            buf.write(f"# {line}\n")
    writer = csv.DictWriter(buf, fieldnames=list(header), lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({key: _csv_cell(row[key]) for key in header})
    atomic_write_text(path, buf.getvalue())


def _csv_cell(value):
    if isinstance(value, (np.floating, float)):
        return repr(float(value))
    if isinstance(value, (np.integer, int)):
        return int(value)
    return value


def read_csv(path):
    with open(path, "r") as fh:
        lines = [line for line in fh if not line.startswith("#")]
    return list(csv.DictReader(lines))


# ---------------------------------------------------------------------------
# coefficient vectors


def _pairs(coeffs):
    return [[float(c.real), float(c.imag)] for c in coeffs]


def _unpairs(pairs):
    arr = np.asarray(pairs, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError("coefficient list must be [[re, im], ...]")
    return arr[:, 0] + 1j * arr[:, 1]


def scalar_to_json(f: SpectralScalar):
    return {
        "degree": f.basis.degree,
        "basis_id": f.basis.basis_id,
        "coeffs": _pairs(f.coeffs),
    }


def scalar_from_json(basis: Basis, obj) -> SpectralScalar:
    if obj["basis_id"] != basis.basis_id:
        raise BasisMismatchError(
            f"file basis {obj['basis_id']} (N={obj['degree']}) does not match "
            f"built basis {basis.basis_id} (N={basis.degree})")
    coeffs = _unpairs(obj["coeffs"])
    if coeffs.shape[0] != basis.size:
        raise BasisMismatchError("coefficient count does not match basis size")
    return basis.scalar(coeffs)


def deformation_to_json(phi, config=None, provenance=None):
    out = {
        "type": "deformation_tensor",
        "coefficient": scalar_to_json(phi.coefficient),
    }
    if config is not None:
        out["config"] = config
    if provenance is not None:
        out["provenance"] = provenance
    return out


def deformation_from_json(basis: Basis, obj):
    from .flow import DeformationTensor
    if obj.get("type") != "deformation_tensor":
        raise ValueError("not a deformation tensor file")
    return DeformationTensor(scalar_from_json(basis, obj["coefficient"]))


def contact_field_to_json(X):
    return {
        "kind": "contact",
        "basis_id": X.basis.basis_id,
        "degree": X.basis.degree,
        "g": _pairs(X.generating.coeffs),
    }


def contact_field_from_json(suite, obj):
    from .fields import contact_from_generating
    if obj.get("kind") != "contact":
        raise ValueError("not a contact field file")
    g = scalar_from_json(suite.basis, {"basis_id": obj["basis_id"],
                                       "degree": obj["degree"],
                                       "coeffs": obj["g"]})
    return contact_from_generating(suite, g.real_part())


def complex_contact_to_json(Z):
    return {
        "kind": "complex_contact",
        "basis_id": Z.basis.basis_id,
        "degree": Z.basis.degree,
        "f": _pairs(Z.parameter.coeffs),
    }


def diffeo_to_json(F):
    return {
        "basis_id": F.basis.basis_id,
        "steps": F.steps,
        "generator_g": None if F.generator is None else _pairs(F.generator.generating.coeffs),
    }


def result_to_json(result, config=None, input_sha256=None):
    out = {
        "type": "normal_form_result",
        "converged": bool(result.converged),
        "iterations": int(result.iterations),
        "flow_steps": int(result.flow_steps),
        "x_generating": scalar_to_json(result.x.generating),
        "y_parameter": scalar_to_json(result.y.parameter),
        "y_certificate": float(result.y.certificate),
        "psi": scalar_to_json(result.psi.coefficient),
        "residuals": {
            "defining": float(result.defining_residual()),
            "gauge": float(result.gauge_residual()),
            "harmonicity": float(result.harmonicity()),
        },
        "norm_report": result.norm_report(),
        "max_truncation_mass": float(result.max_truncation_mass()),
        "history": result.history,
    }
    if config is not None:
        out["config"] = config
    if input_sha256 is not None:
        out["input_sha256"] = input_sha256
    return out


HISTORY_HEADER = ["iter", "chi_norm", "xi_norm", "trunc_mass"]
