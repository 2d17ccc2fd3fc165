"""The toolkit's file format: one self-describing JSON document per object.

Every file carries a kind tag (group | kernel | cpmap | observable |
instrument | phase_space | state), a version tag equal to "1", and the
kind's payload.  Complex numbers are [re, im] pairs and matrices row-major
nested arrays of them; groups are multiplication tables or named
constructors.  Unknown fields are rejected.
"""

from __future__ import annotations

import json

import numpy as np

from .cpmaps import CPMapSpec, CPSymmetry
from .cstar import FiniteCStarAlgebra, ModuleSpace, TensorSplit
from .fingroup import (
    FiniteGroup,
    GroupAction,
    MultiplierRep,
    SubgroupData,
    TwoCocycle,
    heisenberg_rep,
)
from .instruments import InstrumentSpec, ObservableSpec, Symmetry
from .kernels import CovariantKernelSpec

KINDS = ("group", "kernel", "cpmap", "observable", "instrument", "phase_space", "state")


class SpecFileError(ValueError):
    """The document does not conform to the format."""


def _complex_out(z: complex):
    return [float(np.real(z)), float(np.imag(z))]


def matrix_out(mat) -> list:
    mat = np.asarray(mat, dtype=np.complex128)
    return [[_complex_out(z) for z in row] for row in mat]


def _complex_in(obj, path):
    if (
        not isinstance(obj, (list, tuple))
        or len(obj) != 2
        or not all(isinstance(v, (int, float)) for v in obj)
    ):
        raise SpecFileError(f"{path}: complex numbers are [re, im] pairs")
    return complex(obj[0], obj[1])


def matrix_in(obj, path) -> np.ndarray:
    if not isinstance(obj, list) or not obj or not all(isinstance(r, list) for r in obj):
        raise SpecFileError(f"{path}: matrices are nested row-major arrays")
    rows = [[_complex_in(z, f"{path}[{i}][{j}]") for j, z in enumerate(r)] for i, r in enumerate(obj)]
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise SpecFileError(f"{path}: ragged matrix")
    return np.array(rows, dtype=np.complex128)


def _check_fields(obj, path, required, optional=()):
    if not isinstance(obj, dict):
        raise SpecFileError(f"{path}: expected an object")
    unknown = set(obj) - set(required) - set(optional)
    if unknown:
        raise SpecFileError(f"{path}: unknown fields {sorted(unknown)}")
    missing = set(required) - set(obj)
    if missing:
        raise SpecFileError(f"{path}: missing fields {sorted(missing)}")


# -- groups ------------------------------------------------------------------


def group_in(obj, path="group") -> FiniteGroup:
    if not isinstance(obj, dict):
        raise SpecFileError(f"{path}: expected an object")
    if "mul" in obj:
        _check_fields(obj, path, ["mul"])
        return FiniteGroup(np.array(obj["mul"], dtype=np.int64))
    _check_fields(obj, path, ["name"], ["n", "d"])
    name = obj.get("name")
    if name == "cyclic":
        return FiniteGroup.cyclic(int(obj["n"]))
    if name == "dihedral":
        return FiniteGroup.dihedral(int(obj["n"]))
    if name == "symmetric":
        n = int(obj["n"])
        if n > 4:
            raise SpecFileError(f"{path}: symmetric groups supported up to n = 4")
        return FiniteGroup.symmetric(n)
    if name == "heisenberg":
        return heisenberg_rep(int(obj["d"]))[0]
    raise SpecFileError(f"{path}: unknown group constructor {name!r}")


def group_out(group: FiniteGroup) -> dict:
    return {"mul": [[int(v) for v in row] for row in group.mul]}


def rep_in(obj, group, path="rep") -> MultiplierRep:
    _check_fields(obj, path, ["matrices"], ["cocycle", "unitary"])
    mats = np.stack([matrix_in(m, f"{path}.matrices[{i}]") for i, m in enumerate(obj["matrices"])])
    if "cocycle" in obj:
        cocycle = TwoCocycle(group, matrix_in(obj["cocycle"], f"{path}.cocycle"))
    else:
        cocycle = TwoCocycle.trivial(group)
    return MultiplierRep(group, cocycle, mats, bool(obj.get("unitary", True)))


def rep_out(rep: MultiplierRep) -> dict:
    out = {"matrices": [matrix_out(rep(g)) for g in rep.group.elements()]}
    if not rep.cocycle.is_trivial():
        out["cocycle"] = matrix_out(rep.cocycle.values)
    return out


# -- payloads per kind ---------------------------------------------------------


def kernel_in(payload) -> tuple[CovariantKernelSpec, list]:
    _check_fields(
        payload,
        "payload",
        ["group", "action", "alpha", "sigma", "rep", "module", "blocks"],
        ["z_pairs"],
    )
    group = group_in(payload["group"])
    action = GroupAction(group, np.array(payload["action"], dtype=np.int64))
    alpha = matrix_in(payload["alpha"], "payload.alpha")
    sigma = TwoCocycle(group, matrix_in(payload["sigma"], "payload.sigma"))
    rep = rep_in(payload["rep"], group, "payload.rep")
    _check_fields(payload["module"], "payload.module", ["k", "n_v"])
    module = ModuleSpace(int(payload["module"]["k"]), int(payload["module"]["n_v"]))
    rows = payload["blocks"]
    x = action.set_size
    if not isinstance(rows, list) or len(rows) != x:
        raise SpecFileError("payload.blocks: need one row of blocks per point")
    blocks = np.stack(
        [
            np.stack([matrix_in(rows[i][j], f"payload.blocks[{i}][{j}]") for j in range(x)])
            for i in range(x)
        ]
    )
    spec = CovariantKernelSpec(action, alpha, sigma, rep, module, blocks)
    z_pairs = [(int(a), int(b)) for a, b in payload.get("z_pairs", [[i, i] for i in range(x)])]
    return spec, z_pairs


def kernel_out(spec: CovariantKernelSpec, z_pairs=None) -> dict:
    payload = {
        "group": group_out(spec.action.group),
        "action": [[int(v) for v in row] for row in spec.action.table],
        "alpha": matrix_out(spec.alpha),
        "sigma": matrix_out(spec.sigma.values),
        "rep": rep_out(spec.rep),
        "module": {"k": spec.module.k, "n_v": spec.module.n_v},
        "blocks": [
            [matrix_out(spec.blocks[i, j]) for j in range(spec.x_size)]
            for i in range(spec.x_size)
        ],
    }
    if z_pairs is not None:
        payload["z_pairs"] = [[int(a), int(b)] for a, b in z_pairs]
    return payload


def cpmap_in(payload) -> CPMapSpec:
    _check_fields(payload, "payload", ["blocks", "module", "values"], ["symmetry", "tensor"])
    algebra = FiniteCStarAlgebra(tuple(int(b) for b in payload["blocks"]))
    _check_fields(payload["module"], "payload.module", ["k", "n_v"])
    module = ModuleSpace(int(payload["module"]["k"]), int(payload["module"]["n_v"]))
    values = np.stack(
        [matrix_in(v, f"payload.values[{i}]") for i, v in enumerate(payload["values"])]
    )
    symmetry = None
    if "symmetry" in payload:
        sym = payload["symmetry"]
        _check_fields(sym, "payload.symmetry", ["group", "u", "rep"])
        group = group_in(sym["group"], "payload.symmetry.group")
        symmetry = CPSymmetry(
            u=rep_in(sym["u"], group, "payload.symmetry.u"),
            rep=rep_in(sym["rep"], group, "payload.symmetry.rep"),
        )
    tensor = None
    if "tensor" in payload:
        t = payload["tensor"]
        _check_fields(t, "payload.tensor", ["left_blocks", "right_blocks"])
        tensor = TensorSplit(
            FiniteCStarAlgebra(tuple(int(b) for b in t["left_blocks"])),
            FiniteCStarAlgebra(tuple(int(b) for b in t["right_blocks"])),
        )
    return CPMapSpec(algebra, module, values, symmetry, tensor)


def cpmap_out(spec: CPMapSpec) -> dict:
    payload = {
        "blocks": list(spec.algebra.blocks),
        "module": {"k": spec.module.k, "n_v": spec.module.n_v},
        "values": [matrix_out(v) for v in spec.values],
    }
    if spec.symmetry is not None:
        payload["symmetry"] = {
            "group": group_out(spec.symmetry.group),
            "u": rep_out(spec.symmetry.u),
            "rep": rep_out(spec.symmetry.rep),
        }
    if spec.tensor is not None:
        payload["tensor"] = {
            "left_blocks": list(spec.tensor.left.blocks),
            "right_blocks": list(spec.tensor.right.blocks),
        }
    return payload


def _symmetry_in(payload, need_out_rep):
    group = group_in(payload["group"])
    sub = SubgroupData(group, tuple(int(m) for m in payload["subgroup"]))
    rep = rep_in(payload["rep"], group, "payload.rep")
    out_rep = None
    if need_out_rep:
        out_rep = rep_in(payload["out_rep"], group, "payload.out_rep")
    return Symmetry(sub, rep, out_rep)


def observable_in(payload) -> ObservableSpec:
    _check_fields(payload, "payload", ["group", "subgroup", "rep", "effects"])
    symmetry = _symmetry_in(payload, need_out_rep=False)
    effects = np.stack(
        [matrix_in(e, f"payload.effects[{i}]") for i, e in enumerate(payload["effects"])]
    )
    return ObservableSpec(effects, symmetry)


def observable_out(spec: ObservableSpec) -> dict:
    return {
        "group": group_out(spec.symmetry.group),
        "subgroup": [int(m) for m in spec.symmetry.sub.members],
        "rep": rep_out(spec.symmetry.rep),
        "effects": [matrix_out(e) for e in spec.effects],
    }


def instrument_in(payload) -> InstrumentSpec:
    _check_fields(payload, "payload", ["group", "subgroup", "rep", "out_rep", "choi"])
    symmetry = _symmetry_in(payload, need_out_rep=True)
    choi = np.stack(
        [matrix_in(c, f"payload.choi[{i}]") for i, c in enumerate(payload["choi"])]
    )
    return InstrumentSpec(choi, symmetry)


def instrument_out(spec: InstrumentSpec) -> dict:
    return {
        "group": group_out(spec.symmetry.group),
        "subgroup": [int(m) for m in spec.symmetry.sub.members],
        "rep": rep_out(spec.symmetry.rep),
        "out_rep": rep_out(spec.symmetry.out_rep),
        "choi": [matrix_out(c) for c in spec.choi],
    }


def phase_space_in(payload):
    _check_fields(payload, "payload", ["d", "seed_ops"])
    d = int(payload["d"])
    ops = [matrix_in(b, f"payload.seed_ops[{i}]") for i, b in enumerate(payload["seed_ops"])]
    return d, ops


def state_in(payload) -> np.ndarray:
    _check_fields(payload, "payload", ["matrix"])
    return matrix_in(payload["matrix"], "payload.matrix")


def group_payload_in(payload):
    _check_fields(payload, "payload", ["group"], ["action", "cocycle", "rep"])
    group = group_in(payload["group"])
    out = {"group": group}
    if "action" in payload:
        out["action"] = GroupAction(group, np.array(payload["action"], dtype=np.int64))
    if "cocycle" in payload:
        out["cocycle"] = TwoCocycle(group, matrix_in(payload["cocycle"], "payload.cocycle"))
    if "rep" in payload:
        out["rep"] = rep_in(payload["rep"], group, "payload.rep")
    return out


# -- documents ----------------------------------------------------------------


def parse_document(text: str) -> tuple[str, dict]:
    """Parse and structurally validate a document; returns (kind, payload)."""
    obj = json.loads(text)
    _check_fields(obj, "document", ["kind", "version", "payload"])
    if obj["version"] != "1":
        raise SpecFileError(f'unsupported version {obj["version"]!r}, expected "1"')
    if obj["kind"] not in KINDS:
        raise SpecFileError(f'unknown kind {obj["kind"]!r}')
    return obj["kind"], obj["payload"]


def load(text: str):
    """Parse a document into its toolkit object."""
    kind, payload = parse_document(text)
    if kind == "group":
        return kind, group_payload_in(payload)
    if kind == "kernel":
        return kind, kernel_in(payload)
    if kind == "cpmap":
        return kind, cpmap_in(payload)
    if kind == "observable":
        return kind, observable_in(payload)
    if kind == "instrument":
        return kind, instrument_in(payload)
    if kind == "phase_space":
        return kind, phase_space_in(payload)
    if kind == "state":
        return kind, state_in(payload)
    raise SpecFileError(f"unhandled kind {kind!r}")


def document(kind: str, payload: dict) -> str:
    if kind not in KINDS:
        raise SpecFileError(f"unknown kind {kind!r}")
    return json.dumps(
        {"kind": kind, "version": "1", "payload": payload},
        sort_keys=True,
        indent=1,
    )
