"""JSON instance files with canonical forms and tamper detection.

Every file is an InstanceFile object: a schema version, a kind tag, and a
payload.  Payloads either carry explicit canonical data (rings, modules,
determinant-lattice instances, Stark families) or generator parameters plus
a digest of the derived canonical forms (Selmer instances and towers, whose
in-memory representation is large but fully determined by the seed).  On
load the canonical form is recomputed and compared, so any edit to the
payload that changes the mathematics is reported as a mismatch.

Serialization is byte-deterministic: sorted keys, compact separators, a
single trailing newline.
"""

from __future__ import annotations

import hashlib
import json

import numpy as np

from . import linalg
from .lattice import EtncInstance, ScaledElem
from .modules import FPModule
from .rings import RingHandle, build_ring

SCHEMA_VERSION = 1

KINDS = ("ring", "module", "selmer", "stark", "etnc", "tower")


class SerializationError(ValueError):
    pass


def canonical_dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":")) + "\n"


def _digest(obj) -> str:
    return hashlib.sha256(canonical_dumps(obj).encode()).hexdigest()


def _intlist(a) -> list:
    return [int(x) for x in np.asarray(a).ravel()]


# -- ring ----------------------------------------------------------------------


def ring_to_payload(ring: RingHandle) -> dict:
    return {
        "p": int(ring.p),
        "m": int(ring.m),
        "f": int(ring.f),
        "group": [int(d) for d in ring.group],
        "delta": [int(d) for d in ring.delta],
    }


def ring_from_payload(obj: dict) -> RingHandle:
    try:
        return build_ring(int(obj["p"]), int(obj["m"]), int(obj["f"]),
                          tuple(obj["group"]), tuple(obj.get("delta", ())))
    except (KeyError, TypeError, ValueError) as exc:
        raise SerializationError(f"bad ring payload: {exc}") from exc


# -- modules --------------------------------------------------------------------


def module_to_payload(mod: FPModule) -> dict:
    return {
        "ring": ring_to_payload(mod.ring),
        "ngens": int(mod.b),
        "relations": [_intlist(row) for row in mod.span],
    }


def module_from_payload(obj: dict) -> FPModule:
    ring = ring_from_payload(obj["ring"])
    try:
        ngens = int(obj["ngens"])
        rel = linalg.as_matrix(obj["relations"], ngens * ring.n)
    except (KeyError, TypeError, ValueError) as exc:
        raise SerializationError(f"bad module payload: {exc}") from exc
    canon = linalg.howell(rel, ring.q, ring.p)
    if [_intlist(r) for r in canon] != obj["relations"]:
        raise SerializationError("relation matrix is not in canonical form")
    return FPModule(ring, ngens, canon)


# -- generated instances ---------------------------------------------------------


SELMER_PARAM_KEYS = ("recipe", "seed", "p", "m", "f", "group", "core_ranks",
                     "cond_ranks", "chi0", "delta", "aux_count", "depth")


def selmer_digest(inst) -> str:
    """Digest of every canonical span the instance carries."""
    data = {}
    for name, tier in inst.tiers.items():
        entry = {"ring": ring_to_payload(tier.ring)}
        for (side, key) in sorted(tier.glob):
            glob = tier.glob[(side, key)]
            entry["|".join([side, *key])] = {
                "span": [_intlist(r) for r in glob.module.span],
                "phi": [_intlist(r) for r in glob.phi],
            }
        data[name] = entry
    return _digest(data)


def selmer_to_payload(params: dict, inst) -> dict:
    clean = {k: params[k] for k in SELMER_PARAM_KEYS if k in params}
    clean["group"] = list(clean.get("group", (3,)))
    for key in ("core_ranks", "cond_ranks"):
        if clean.get(key) is not None:
            clean[key] = list(clean[key])
    return {"params": clean, "digest": selmer_digest(inst)}


def selmer_from_payload(obj: dict):
    from .generate import generate_instance

    try:
        params = dict(obj["params"])
        params["group"] = tuple(params.get("group", (3,)))
        for key in ("core_ranks", "cond_ranks"):
            if params.get(key) is not None:
                params[key] = tuple(params[key])
        stored = obj["digest"]
    except (KeyError, TypeError) as exc:
        raise SerializationError(f"bad selmer payload: {exc}") from exc
    inst = generate_instance(**params)
    if selmer_digest(inst) != stored:
        raise SerializationError("digest mismatch: payload does not match "
                                 "the regenerated canonical forms")
    return inst


def tower_to_payload(params: dict, tower: dict) -> dict:
    clean = {k: params[k] for k in ("seed", "p", "m", "f", "group",
                                    "quotient") if k in params}
    clean["group"] = list(clean.get("group", (9,)))
    clean["quotient"] = list(clean.get("quotient", (3,)))
    data = {
        "relations": [_intlist(r) for r in tower["module"].span],
        "element": _intlist(tower["element"]),
    }
    return {"params": clean, "digest": _digest(data)}


def tower_from_payload(obj: dict) -> dict:
    from .generate import generate_tower

    try:
        params = dict(obj["params"])
        params["group"] = tuple(params.get("group", (9,)))
        params["quotient"] = tuple(params.get("quotient", (3,)))
        stored = obj["digest"]
    except (KeyError, TypeError) as exc:
        raise SerializationError(f"bad tower payload: {exc}") from exc
    tower = generate_tower(**params)
    data = {
        "relations": [_intlist(r) for r in tower["module"].span],
        "element": _intlist(tower["element"]),
    }
    if _digest(data) != stored:
        raise SerializationError("digest mismatch: payload does not match "
                                 "the regenerated canonical forms")
    return tower


# -- stark families ---------------------------------------------------------------


def stark_to_payload(selmer_params: dict, inst, rank: int, depth: int,
                     solution: dict) -> dict:
    """Solver output pinned to the poset order and sign convention."""
    off = solution["offsets"]
    keys = [k for k in off if k != "total"]
    family = {}
    for gen in solution["generators"]:
        for key in keys:
            s, e = off[key]
            label = "+".join(key) if key else "-"
            family.setdefault(label, []).append(_intlist(
                np.asarray(gen)[s:e]))
    return {
        "selmer": selmer_to_payload(selmer_params, inst),
        "rank": int(rank),
        "depth": int(depth),
        "poset_order": "sorted-labels",
        "sign_version": 1,
        "family": family,
    }


def stark_from_payload(obj: dict):
    from .stark import StarkSystem

    if obj.get("sign_version") != 1 or obj.get("poset_order") != "sorted-labels":
        raise SerializationError("unsupported transition convention")
    inst = selmer_from_payload(obj["selmer"])
    system = StarkSystem(inst, int(obj["rank"]), int(obj["depth"]))
    solution = system.solve()
    stored = obj["family"]
    rebuilt = stark_to_payload(obj["selmer"]["params"], inst, obj["rank"],
                               obj["depth"], solution)["family"]
    if rebuilt != stored:
        raise SerializationError("family does not match the regenerated "
                                 "solver output")
    return system, solution


# -- determinant-lattice instances -------------------------------------------------


def _scaled_to_obj(x: ScaledElem) -> dict:
    return {"vec": _intlist(x.vec), "offset": int(x.offset)}


def etnc_to_payload(inst: EtncInstance) -> dict:
    return {
        "ring": ring_to_payload(inst.ring_m),
        "h": int(inst.h),
        "r": int(inst.r),
        "lattice": [[_intlist(x) for x in row] for row in inst.lattice_mat],
        "h2": [[_intlist(x) for x in row] for row in inst.h2_mat],
        "lambda": [[_scaled_to_obj(x) for x in row]
                   for row in inst.lambda_mat],
        "lstar": _scaled_to_obj(inst.lstar),
        "epsilon": inst.epsilon,
    }


def etnc_from_payload(obj: dict) -> EtncInstance:
    ring_m = ring_from_payload(obj["ring"])
    try:
        h = int(obj["h"])
        r = int(obj["r"])
        rw = ring_m.at_precision(ring_m.m + h)
        lattice = [[np.array(x, dtype=np.int64) for x in row]
                   for row in obj["lattice"]]
        h2 = [[np.array(x, dtype=np.int64) for x in row]
              for row in obj["h2"]]
        lam = [[ScaledElem(rw, np.array(x["vec"], dtype=np.int64),
                           int(x["offset"])) for x in row]
               for row in obj["lambda"]]
        lstar = ScaledElem(rw, np.array(obj["lstar"]["vec"], dtype=np.int64),
                           int(obj["lstar"]["offset"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise SerializationError(f"bad etnc payload: {exc}") from exc
    for name, mats in (("lattice", lattice), ("h2", h2)):
        for row in mats:
            for x in row:
                if x.shape != (rw.n,) or (x % rw.q != x).any() or (x < 0).any():
                    raise SerializationError(
                        f"{name} entry is not reduced into the canonical range")
    inst = EtncInstance(ring_m, h, r, lattice, h2, lam, lstar,
                        epsilon=obj.get("epsilon", "full"))
    return inst


# -- instance files ------------------------------------------------------------------


def dump_instance(kind: str, payload: dict, note: str | None = None) -> str:
    if kind not in KINDS:
        raise SerializationError(f"unknown kind {kind!r}")
    obj = {"schema": SCHEMA_VERSION, "kind": kind, "payload": payload}
    if note is not None:
        obj["note"] = note
    return canonical_dumps(obj)


def parse_instance(text: str) -> dict:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SerializationError(f"not valid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise SerializationError("instance file must be a JSON object")
    if obj.get("schema") != SCHEMA_VERSION:
        raise SerializationError(
            f"schema version {obj.get('schema')!r} is not supported "
            f"(expected {SCHEMA_VERSION})")
    if obj.get("kind") not in KINDS:
        raise SerializationError(f"unknown kind {obj.get('kind')!r}")
    if not isinstance(obj.get("payload"), dict):
        raise SerializationError("payload must be a JSON object")
    return obj


LOADERS = {
    "ring": ring_from_payload,
    "module": module_from_payload,
    "selmer": selmer_from_payload,
    "stark": stark_from_payload,
    "etnc": etnc_from_payload,
    "tower": tower_from_payload,
}


def load_instance(text: str):
    """Parse, recompute canonical forms, and build the in-memory object."""
    obj = parse_instance(text)
    return obj["kind"], LOADERS[obj["kind"]](obj["payload"])


def write_file(path: str, text: str) -> None:
    with open(path, "w") as fh:
        fh.write(text)


def read_file(path: str) -> str:
    with open(path) as fh:
        return fh.read()
