"""Batch command-line interface.

Every command reads JSON instance files (or explicit flags), prints one
machine-readable JSON report with a stable check identifier, and exits
with 0 on pass, 1 on a property violation (the offending instance is
saved next to the report as a re-runnable instance file), 2 on input
errors, and 3 when a verdict would need more precision headroom than the
instance declares.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import hashlib
import os
import sys

import numpy as np

from . import lattice, oracle, serialize
from .generate import GenerationError, generate_etnc, generate_instance, \
    generate_tower
from .lattice import PrecisionError
from .modules import bidual_and_image, fitting_ideal, yakovlev_decompose
from .oracle import OracleBoundsError
from .rings import IdealCanon, build_ring
from .selmer import cartesian_check, core_rank, core_vertex_search, \
    theorem_free_report, validate_instance
from .serialize import SerializationError, canonical_dumps
from .stark import StarkSystem, stark_fitting_report, stark_solve

PASS, VIOLATION, INPUT_ERROR, INSUFFICIENT_PRECISION = 0, 1, 2, 3


class CliError(ValueError):
    pass


def _intlist(a):
    return [int(x) for x in np.asarray(a).ravel()]


def _matrix(a):
    return [_intlist(row) for row in a]


def _ideal_obj(ideal: IdealCanon) -> dict:
    return {"matrix": _matrix(ideal.matrix), "log_size": ideal.log_size()}


def _lattice_obj(lat) -> dict:
    return {"span": _matrix(lat.span), "offset": int(lat.offset),
            "epsilon": lat.epsilon}


def _load(path: str, expected: str):
    try:
        text = serialize.read_file(path)
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc}") from exc
    kind, obj = serialize.load_instance(text)
    if kind != expected:
        raise CliError(f"{path} holds a {kind!r} instance, expected {expected!r}")
    return obj, text


def _group(text: str) -> tuple:
    if not text:
        return ()
    return tuple(int(x) for x in text.split(","))


def _save_counterexample(args, source_text: str | None, note: str) -> str | None:
    if source_text is None:
        return None
    tag = hashlib.sha256(source_text.encode()).hexdigest()[:12]
    path = os.path.join(args.counterexample_dir,
                        f"counterexample-{args.command}-{tag}.json")
    obj = serialize.parse_instance(source_text)
    obj["note"] = note
    serialize.write_file(path, canonical_dumps(obj))
    return path


def _emit(report: dict, verdict: bool | None, args,
          source_text: str | None = None, note: str = "") -> int:
    if verdict is not None:
        report["verdict"] = "PASS" if verdict else "FAIL"
        if not verdict:
            path = _save_counterexample(args, source_text,
                                        note or report["check_id"])
            if path:
                report["counterexample"] = path
    sys.stdout.write(canonical_dumps(report))
    if verdict is None or verdict:
        return PASS
    return VIOLATION


# -- command handlers ----------------------------------------------------------


def cmd_ring(args) -> int:
    ring = build_ring(args.p, args.m, args.f, _group(args.group),
                      _group(args.delta))
    report = {
        "check_id": "RING-BUILD",
        "ring": serialize.ring_to_payload(ring),
        "cardinality_log": ring.n * ring.m,
        "basis_dim": ring.n,
    }
    return _emit(report, None, args)


def cmd_fitting(args) -> int:
    mod, text = _load(args.file, "module")
    ideal = fitting_ideal(mod, args.j)
    ann_ok = True
    if args.j == 0:
        from .modules import annihilator_contains

        ann_ok = all(annihilator_contains(mod, row) for row in ideal.matrix)
    report = {
        "check_id": "FITT-ANN",
        "j": args.j,
        "fitting": _ideal_obj(ideal),
        "fitting_in_annihilator": ann_ok,
    }
    return _emit(report, ann_ok, args, text, "Fitt^0 not inside the annihilator")


def cmd_bidual(args) -> int:
    mod, text = _load(args.file, "module")
    if args.elem:
        x = np.array([int(v) for v in args.elem.split(",")], dtype=np.int64)
    else:
        x = np.zeros(args.r * mod.amb, dtype=np.int64)
        for i in range(args.r):
            x[i * mod.amb + i * mod.ring.n] = 1
    if x.size != args.r * mod.amb:
        raise CliError("element has wrong length for the wedge degree")
    _, ideal = bidual_and_image(mod, args.r, x)
    report = {
        "check_id": "BIDUAL-IMAGE",
        "r": args.r,
        "image_ideal": _ideal_obj(ideal),
    }
    return _emit(report, None, args)


def cmd_selmer(args) -> int:
    inst, text = _load(args.file, "selmer")
    checks = validate_instance(inst)
    report = {"check_id": "INSTANCE-VALID", "checks": checks}
    return _emit(report, checks["ok"], args, text, "validation failure")


def cmd_core_rank(args) -> int:
    inst, text = _load(args.file, "selmer")
    out = core_rank(inst)
    ok = out["matches_declared"] is not False
    report = {"check_id": "CORE-RANK", "core_rank": out["core_rank"],
              "matches_declared": out["matches_declared"]}
    return _emit(report, ok, args, text, "core rank mismatch")


def cmd_core_vertex(args) -> int:
    inst, text = _load(args.file, "selmer")
    out = core_vertex_search(inst)
    report = {
        "check_id": "CORE-VERTEX",
        "found": out["found"],
        "core_vertices": [
            {"labels": list(v["labels"]), "nu": v["nu"],
             "rank": v["selmer_rank"]}
            for v in out["core_vertices"]
        ],
    }
    return _emit(report, None, args)


def cmd_cartesian(args) -> int:
    inst, text = _load(args.file, "selmer")
    out = cartesian_check(inst)
    report = {"check_id": "CARTESIAN", "cartesian": out["cartesian"],
              "declared": inst.meta.get("cartesian")}
    ok = out["cartesian"] == inst.meta.get("cartesian")
    return _emit(report, ok, args, text, "cartesian property mismatch")


def cmd_thm_free(args) -> int:
    inst, text = _load(args.file, "selmer")
    out = theorem_free_report(inst)
    report = {"check_id": "EQUIV-CONSISTENT", "report": _plain(out)}
    ok = out.get("equivalences-consistent", out["validation_ok"])
    return _emit(report, ok, args, text,
                 "freeness equivalences inconsistent")


def cmd_stark(args) -> int:
    inst, text = _load(args.file, "selmer")
    if args.action == "solve":
        system, sol = stark_solve(inst, args.rank, args.depth)
        report = {
            "check_id": "STARK-FREE-RANK-ONE",
            "free_rank_one": sol["free_rank_one"],
            "log_size": sol["log_size"],
            "generators": [_intlist(g) for g in sol["generators"]],
        }
        return _emit(report, sol["free_rank_one"], args, text,
                     "system of compatible families is not free of rank one")
    if args.action == "ij":
        system, sol = stark_solve(inst, args.rank, args.depth)
        if not sol["generators"]:
            raise CliError("no generator to evaluate")
        gen = sol["generators"][0]
        ideals = {str(j): _ideal_obj(system.ij_invariant(gen, j))
                  for j in range(system.depth + 1)}
        report = {"check_id": "STARK-IJ", "ij": ideals}
        return _emit(report, None, args)
    out = stark_fitting_report(inst, args.rank, args.depth)
    report = {"check_id": "STARK-FITTING", "report": _plain(out)}
    return _emit(report, out["all_equal"] and out["free_rank_one"], args,
                 text, "Stark ideals differ from the Fitting ideals")


def cmd_euler_poly(args) -> int:
    ring = build_ring(args.p, args.m, args.f, _group(args.group))
    if args.elliptic:
        a_ell, ell = (int(v) for v in args.elliptic.split(","))
        out = lattice.euler_poly_elliptic(ring, a_ell, ell)
        report = {
            "check_id": "EULER-POLY",
            "coeffs": [_intlist(c) for c in out["coeffs"]],
            "weil_ok": out["weil_ok"],
        }
        return _emit(report, out["weil_ok"], args, None)
    import json as _json

    frob = [[np.array(x, dtype=np.int64) for x in row]
            for row in _json.loads(args.frobenius)]
    coeffs = lattice.euler_poly_frobenius(ring, frob)
    report = {"check_id": "EULER-POLY",
              "coeffs": [_intlist(c) for c in coeffs]}
    return _emit(report, None, args)


def cmd_bk_check(args) -> int:
    inst, text = _load(args.file, "etnc")
    out = lattice.bk_image_check(inst)
    report = {
        "check_id": "BK-PRODUCT",
        "im_eta": _lattice_obj(out["im_eta"]),
        "xi": _lattice_obj(out["xi"]),
        "fitting": _ideal_obj(out["fitting"]),
    }
    return _emit(report, out["verdict"], args, text,
                 "product identity fails")


def cmd_xi(args) -> int:
    inst, text = _load(args.file, "etnc")
    out = lattice.bk_image_check(inst)
    tnc = lattice.tnc_check(out["xi"], m=inst.ring_m.m)
    report = {
        "check_id": "TNC-LATTICE",
        "xi": _lattice_obj(out["xi"]),
        "integral_and_trivial": tnc,
    }
    return _emit(report, None, args)


def cmd_assoc_order(args) -> int:
    inst, text = _load(args.file, "etnc")
    out = lattice.bk_image_check(inst)
    ao = lattice.associated_order(out["xi"])
    report = {
        "check_id": "ASSOC-ORDER",
        "order": _lattice_obj(ao["order"]),
        "min_order": ao["min_order"],
        "contains_base_ring": ao["contains_base_ring"],
        "stabilizes": ao["stabilizes"],
    }
    return _emit(report, ao["stabilizes"] and ao["contains_base_ring"],
                 args, text, "associated order fails its defining property")


def cmd_codescent(args) -> int:
    tower, text = _load(args.file, "tower")
    out = lattice.codescent_check(tower["module"], tower["quotient_ring"],
                                  tower["element"])
    report = {"check_id": "CODESCENT", "checks": out}
    return _emit(report, out["ok"], args, text, "codescent surjectivity fails")


def cmd_artin(args) -> int:
    factors = _group(args.group)
    chars = [tuple(int(v) for v in part.split(","))
             for part in args.chars.split(";") if part]
    dec = lattice.artin_decompose(factors, chars)
    back = lattice.artin_assemble(factors, dec["coefficients"])
    counts = {}
    for chi in chars:
        chi = tuple(c % d for c, d in zip(chi, factors))
        counts[chi] = counts.get(chi, 0) + 1
    ok = back == counts and dec["m"] == 1
    report = {
        "check_id": "ARTIN-INDUCTION",
        "m": dec["m"],
        "coefficients": [
            {"subgroup": sorted(list(map(list, h))), "n": v}
            for h, v in sorted(dec["coefficients"].items(),
                               key=lambda kv: (len(kv[0]), sorted(kv[0])))
        ],
        "reconstructs": ok,
    }
    return _emit(report, ok, args, None)


def cmd_yakovlev(args) -> int:
    mod, text = _load(args.file, "module")
    out = yakovlev_decompose(mod)
    report = {
        "check_id": "YAKOVLEV-RECONSTRUCT",
        "multiplicities": {str(k): v for k, v in
                           out["multiplicities"].items()},
        "epsilon_levels": out["epsilon_levels"],
    }
    return _emit(report, None, args)


def cmd_gen(args) -> int:
    params = {"seed": args.seed, "p": args.p, "m": args.m, "f": args.f,
              "group": _group(args.group)}
    if args.recipe in ("cartesian", "non-cartesian", "core-vertex-depth"):
        params.update({"recipe": args.recipe, "chi0": args.chi0,
                       "delta": args.defect, "aux_count": args.aux_count,
                       "depth": args.depth,
                       "core_ranks": _group(args.core_ranks)})
        inst = generate_instance(**params)
        text = serialize.dump_instance(
            "selmer", serialize.selmer_to_payload(params, inst))
    elif args.recipe == "etnc-basic":
        inst = generate_etnc(args.seed, p=args.p, m=args.m, f=args.f,
                             group=_group(args.group), r=args.r)
        text = serialize.dump_instance("etnc", serialize.etnc_to_payload(inst))
    elif args.recipe == "tower":
        params["quotient"] = _group(args.quotient)
        tower = generate_tower(**params)
        text = serialize.dump_instance(
            "tower", serialize.tower_to_payload(params, tower))
    else:
        raise CliError(f"unknown recipe {args.recipe!r}")
    if args.out:
        serialize.write_file(args.out, text)
        report = {"check_id": "GEN", "recipe": args.recipe, "out": args.out}
        return _emit(report, None, args)
    sys.stdout.write(text)
    return PASS


def cmd_oracle(args) -> int:
    if args.task == "fitting-minors":
        mod, text = _load(args.file, "module")
        main = fitting_ideal(mod, args.j)
        elems = oracle.fitting_elements(mod, args.j)
        ok = oracle.ideal_agrees(main, elems)
        report = {"check_id": "ORACLE-AGREE", "task": args.task,
                  "main": _ideal_obj(main), "oracle_size": len(elems)}
        return _emit(report, ok, args, text, "fitting oracle disagrees")
    if args.task == "bidual-image":
        mod, text = _load(args.file, "module")
        x = np.zeros(mod.amb, dtype=np.int64)
        x[0] = 1
        if args.elem:
            x = np.array([int(v) for v in args.elem.split(",")],
                         dtype=np.int64)
        _, main = bidual_and_image(mod, 1, x)
        elems = oracle.image_ideal_elements(mod, 1, x)
        ok = oracle.ideal_agrees(main, elems)
        report = {"check_id": "ORACLE-AGREE", "task": args.task,
                  "main": _ideal_obj(main), "oracle_size": len(elems)}
        return _emit(report, ok, args, text, "image-ideal oracle disagrees")
    if args.task == "ideal-membership":
        mod, text = _load(args.file, "module")
        ring = mod.ring
        gens = [row[: ring.n] for row in mod.span]
        x = np.array([int(v) for v in args.elem.split(",")], dtype=np.int64) \
            if args.elem else ring.one()
        main = IdealCanon(ring, gens).contains(x)
        brute = oracle.ideal_membership(ring, gens, x)
        report = {"check_id": "ORACLE-AGREE", "task": args.task,
                  "main": bool(main), "oracle": bool(brute)}
        return _emit(report, main == brute, args, text,
                     "membership oracle disagrees")
    if args.task == "stark-enumerate":
        inst, text = _load(args.file, "selmer")
        system, sol = stark_solve(inst, args.rank, 1)
        enum = oracle.stark_enumerate(system)
        ok = enum["count"] == system.ring.p ** sol["log_size"]
        report = {"check_id": "ORACLE-AGREE", "task": args.task,
                  "solver_log_size": sol["log_size"],
                  "enumerated": enum["count"]}
        return _emit(report, ok, args, text, "stark oracle disagrees")
    if args.task == "stabilizer":
        inst, text = _load(args.file, "etnc")
        out = lattice.bk_image_check(inst)
        ao = lattice.associated_order(out["xi"])
        ring = out["xi"].ring
        d = ao["denominator_bound"]
        elems = oracle.stabilizer_elements(ring, out["xi"].span, d)
        from . import linalg

        brute = linalg.howell(np.array(sorted(elems), dtype=np.int64),
                              ring.q, ring.p)
        ok = np.array_equal(brute, ao["order"].span)
        report = {"check_id": "ORACLE-AGREE", "task": args.task,
                  "order": _lattice_obj(ao["order"]),
                  "oracle_rows": _matrix(brute)}
        return _emit(report, ok, args, text, "stabilizer oracle disagrees")
    raise CliError(f"unknown oracle task {args.task!r}")


def cmd_batch(args) -> int:
    """Run one command over many files; reports are aggregated in sorted
    file order regardless of completion order."""
    sub = [args.subcommand] + (args.subargs or [])
    files = sorted(args.files)

    def run(path):
        import subprocess

        proc = subprocess.run(
            [sys.executable, "-m", "selstark.cli"] + sub + [path],
            capture_output=True, text=True)
        return path, proc.returncode, proc.stdout

    results = []
    if args.jobs > 1:
        with concurrent.futures.ThreadPoolExecutor(args.jobs) as pool:
            results = list(pool.map(run, files))
    else:
        results = [run(path) for path in files]
    worst = PASS
    for path, code, out in sorted(results):
        sys.stdout.write(canonical_dumps({"file": path, "exit": code,
                                          "report": out.strip()}))
        worst = max(worst, code)
    return worst


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return _intlist(obj)
    if isinstance(obj, IdealCanon):
        return _ideal_obj(obj)
    return obj


# -- parser ----------------------------------------------------------------------


def _ring_flags(sp):
    sp.add_argument("--p", type=int, default=3)
    sp.add_argument("--m", type=int, default=2)
    sp.add_argument("--f", type=int, default=1)
    sp.add_argument("--group", default="3")
    sp.add_argument("--delta", default="")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="selstark",
        description="verification engine for finite-level Selmer, Stark, "
                    "and determinant-lattice algebra")
    ap.add_argument("--counterexample-dir", default=".")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("ring")
    _ring_flags(sp)
    sp.set_defaults(func=cmd_ring)

    sp = sub.add_parser("fitting")
    sp.add_argument("file")
    sp.add_argument("--j", type=int, default=0)
    sp.set_defaults(func=cmd_fitting)

    sp = sub.add_parser("bidual")
    sp.add_argument("file")
    sp.add_argument("--r", type=int, default=1)
    sp.add_argument("--elem", default="")
    sp.set_defaults(func=cmd_bidual)

    for name, func in (("selmer", cmd_selmer), ("core-rank", cmd_core_rank),
                       ("core-vertex", cmd_core_vertex),
                       ("cartesian", cmd_cartesian),
                       ("thm-free", cmd_thm_free)):
        sp = sub.add_parser(name)
        sp.add_argument("file")
        sp.set_defaults(func=func)

    sp = sub.add_parser("stark")
    sp.add_argument("action", choices=["solve", "ij", "report"])
    sp.add_argument("file")
    sp.add_argument("--rank", type=int, default=None)
    sp.add_argument("--depth", type=int, default=None)
    sp.set_defaults(func=cmd_stark)

    sp = sub.add_parser("euler-poly")
    _ring_flags(sp)
    sp.add_argument("--elliptic", default="")
    sp.add_argument("--frobenius", default="")
    sp.set_defaults(func=cmd_euler_poly)

    for name, func in (("bk-check", cmd_bk_check), ("xi", cmd_xi),
                       ("assoc-order", cmd_assoc_order),
                       ("codescent", cmd_codescent),
                       ("yakovlev", cmd_yakovlev)):
        sp = sub.add_parser(name)
        sp.add_argument("file")
        sp.set_defaults(func=func)

    sp = sub.add_parser("artin")
    sp.add_argument("--group", required=True)
    sp.add_argument("--chars", required=True)
    sp.set_defaults(func=cmd_artin)

    sp = sub.add_parser("gen")
    sp.add_argument("--recipe", required=True)
    sp.add_argument("--seed", type=int, required=True)
    _ring_flags(sp)
    sp.add_argument("--quotient", default="3")
    sp.add_argument("--core-ranks", dest="core_ranks", default="1,1")
    sp.add_argument("--chi0", type=int, default=1)
    sp.add_argument("--defect", dest="defect", type=int, default=0)
    sp.add_argument("--aux-count", dest="aux_count", type=int, default=2)
    sp.add_argument("--depth", type=int, default=None)
    sp.add_argument("--r", type=int, default=1)
    sp.add_argument("--out", default="")
    sp.set_defaults(func=cmd_gen)

    sp = sub.add_parser("oracle")
    sp.add_argument("task", choices=["ideal-membership", "bidual-image",
                                     "stark-enumerate", "stabilizer",
                                     "fitting-minors"])
    sp.add_argument("file")
    sp.add_argument("--j", type=int, default=0)
    sp.add_argument("--rank", type=int, default=None)
    sp.add_argument("--elem", default="")
    sp.set_defaults(func=cmd_oracle)

    sp = sub.add_parser("batch")
    sp.add_argument("subcommand")
    sp.add_argument("--jobs", type=int, default=1)
    sp.add_argument("--subargs", nargs="*", default=[])
    sp.add_argument("files", nargs="+")
    sp.set_defaults(func=cmd_batch)

    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return INPUT_ERROR if exc.code else PASS
    try:
        return args.func(args)
    except PrecisionError as exc:
        sys.stdout.write(canonical_dumps(
            {"verdict": "INSUFFICIENT_PRECISION", "error": str(exc)}))
        return INSUFFICIENT_PRECISION
    except (CliError, SerializationError, GenerationError, OracleBoundsError,
            ValueError) as exc:
        sys.stdout.write(canonical_dumps(
            {"verdict": "INPUT_ERROR", "error": str(exc)}))
        return INPUT_ERROR


if __name__ == "__main__":
    sys.exit(main())
