"""Instance files and the command-line interface: round trips, tamper
detection, deterministic bytes, exit codes."""

import io
import contextlib
import json
import os

import numpy as np
import pytest

from selstark import cli, serialize
from selstark.generate import generate_etnc, generate_instance, generate_tower
from selstark.modules import present_module
from selstark.rings import build_ring
from selstark.serialize import SerializationError


def run_cli(tmp_path, *argv):
    buf = io.StringIO()
    with contextlib.redirect_stdout(buf):
        code = cli.main(["--counterexample-dir", str(tmp_path), *argv])
    return code, buf.getvalue()


@pytest.fixture()
def module_file(tmp_path):
    ring = build_ring(3, 2, 1, (3,))
    g = ring.group_elem([1])
    mod = present_module(ring, 1, [[(g - ring.one()) % ring.q],
                                   [ring.from_int(3)]])
    path = tmp_path / "module.json"
    path.write_text(serialize.dump_instance(
        "module", serialize.module_to_payload(mod)))
    return str(path), mod


def test_module_round_trip(module_file):
    path, mod = module_file
    kind, loaded = serialize.load_instance(serialize.read_file(path))
    assert kind == "module"
    assert loaded.same_presentation(mod)


def test_module_tamper_detection(module_file, tmp_path):
    path, _ = module_file
    obj = json.loads(serialize.read_file(path))
    obj["payload"]["relations"][0][0] += 1
    bad = tmp_path / "tampered.json"
    bad.write_text(serialize.canonical_dumps(obj))
    with pytest.raises(SerializationError):
        serialize.load_instance(bad.read_text())
    code, out = run_cli(tmp_path, "fitting", str(bad))
    assert code == 2


def test_selmer_round_trip_and_digest():
    params = {"recipe": "cartesian", "seed": 31, "p": 3, "m": 2, "f": 1,
              "group": (3,)}
    inst = generate_instance(**params, verify=False)
    text = serialize.dump_instance(
        "selmer", serialize.selmer_to_payload(params, inst))
    kind, loaded = serialize.load_instance(text)
    assert kind == "selmer"
    assert serialize.selmer_digest(loaded) == serialize.selmer_digest(inst)
    # a digest edit is detected
    obj = json.loads(text)
    obj["payload"]["digest"] = "0" * 64
    with pytest.raises(SerializationError):
        serialize.load_instance(serialize.canonical_dumps(obj))


def test_etnc_and_tower_round_trip():
    inst = generate_etnc(32)
    text = serialize.dump_instance("etnc", serialize.etnc_to_payload(inst))
    kind, loaded = serialize.load_instance(text)
    assert kind == "etnc"
    assert serialize.dump_instance(
        "etnc", serialize.etnc_to_payload(loaded)) == text

    params = {"seed": 33}
    tower = generate_tower(**params)
    ttext = serialize.dump_instance(
        "tower", serialize.tower_to_payload(params, tower))
    kind, loaded = serialize.load_instance(ttext)
    assert kind == "tower"
    assert (loaded["module"].span == tower["module"].span).all()


def test_serialization_is_byte_deterministic():
    texts = set()
    for _ in range(3):
        inst = generate_etnc(34)
        texts.add(serialize.dump_instance(
            "etnc", serialize.etnc_to_payload(inst)))
    assert len(texts) == 1


def test_cli_pass_and_reports(tmp_path, module_file):
    path, _ = module_file
    code, out = run_cli(tmp_path, "ring", "--p", "3", "--m", "2")
    assert code == 0 and json.loads(out)["check_id"] == "RING-BUILD"
    code, out = run_cli(tmp_path, "fitting", path)
    assert code == 0 and json.loads(out)["verdict"] == "PASS"
    code, out = run_cli(tmp_path, "oracle", "fitting-minors", path)
    assert code == 0
    code, out = run_cli(tmp_path, "artin", "--group", "9", "--chars",
                        "1;2;4;5;7;8")
    assert code == 0 and json.loads(out)["reconstructs"]


def test_cli_gen_then_check_pipeline(tmp_path):
    sel = tmp_path / "sel.json"
    code, _ = run_cli(tmp_path, "gen", "--recipe", "cartesian", "--seed",
                      "35", "--m", "1", "--out", str(sel))
    assert code == 0
    for command in ("selmer", "core-rank", "cartesian", "thm-free"):
        code, out = run_cli(tmp_path, command, str(sel))
        assert code == 0, (command, out)
    code, _ = run_cli(tmp_path, "stark", "report", str(sel))
    assert code == 0

    etnc = tmp_path / "etnc.json"
    code, _ = run_cli(tmp_path, "gen", "--recipe", "etnc-basic", "--seed",
                      "36", "--out", str(etnc))
    assert code == 0
    for command in ("bk-check", "xi", "assoc-order"):
        code, out = run_cli(tmp_path, command, str(etnc))
        assert code == 0, (command, out)

    tower = tmp_path / "tower.json"
    code, _ = run_cli(tmp_path, "gen", "--recipe", "tower", "--seed", "37",
                      "--group", "9", "--quotient", "3", "--out", str(tower))
    assert code == 0
    code, _ = run_cli(tmp_path, "codescent", str(tower))
    assert code == 0


def test_cli_input_errors_exit_2(tmp_path):
    code, _ = run_cli(tmp_path, "fitting", str(tmp_path / "missing.json"))
    assert code == 2
    code, _ = run_cli(tmp_path, "no-such-command")
    assert code == 2


def test_cli_insufficient_precision_exits_3(tmp_path):
    ring = build_ring(3, 2, 1, (3,))
    n = ring.n
    one = [1] + [0] * (n - 1)
    three = [3] + [0] * (n - 1)
    payload = {
        "ring": serialize.ring_to_payload(ring),
        "h": 0, "r": 1,
        "lattice": [[one]],
        "h2": [[three]],
        "lambda": [[{"vec": one, "offset": 1}]],
        "lstar": {"vec": one, "offset": 0},
        "epsilon": "full",
    }
    path = tmp_path / "lowh.json"
    path.write_text(serialize.dump_instance("etnc", payload))
    code, out = run_cli(tmp_path, "bk-check", str(path))
    assert code == 3
    assert json.loads(out)["verdict"] == "INSUFFICIENT_PRECISION"


def test_cli_violation_saves_a_rerunnable_counterexample(tmp_path):
    sel = tmp_path / "sel.json"
    code, _ = run_cli(tmp_path, "gen", "--recipe", "cartesian", "--seed",
                      "38", "--m", "1", "--aux-count", "2", "--depth", "2",
                      "--out", str(sel))
    assert code == 0
    # a forced wedge degree above the core rank has no rank-one family
    code, out = run_cli(tmp_path, "stark", "solve", str(sel),
                        "--depth", "1", "--rank", "2")
    assert code == 1
    saved = json.loads(out)["counterexample"]
    assert os.path.exists(saved)
    # the dump is a loadable instance file that reproduces the failure
    code, _ = run_cli(tmp_path, "stark", "solve", saved,
                      "--depth", "1", "--rank", "2")
    assert code == 1
    code, _ = run_cli(tmp_path, "selmer", saved)
    assert code == 0


def test_cli_batch_aggregates_in_sorted_order(tmp_path):
    paths = []
    for seed in (40, 41):
        path = tmp_path / f"sel{seed}.json"
        run_cli(tmp_path, "gen", "--recipe", "cartesian", "--seed",
                str(seed), "--m", "1", "--out", str(path))
        paths.append(str(path))
    code, out = run_cli(tmp_path, "batch", "selmer", "--jobs", "2",
                        *sorted(paths, reverse=True))
    assert code == 0
    lines = [json.loads(line) for line in out.splitlines()]
    assert [l["file"] for l in lines] == sorted(paths)
