import json
import subprocess
import sys
from pathlib import Path

import pytest

from ftcs.cli import EXIT_IO, EXIT_NO_CROSSING, EXIT_OK, EXIT_VALIDATION, RunManifest, main, parse_rates, sha256_file
from ftcs.iso import complexes_isomorphic
from ftcs.lattices import cubic_edge_id, generate, pipeline, syndrome_graph
from ftcs.noise import ErrorPattern
from ftcs.serialize import complex_to_text, dump, load

CONFIGS = Path(__file__).resolve().parents[1] / "configs"

SMALL_SWEEP = """[sweep]
lattice = cubic
sizes = 4, 6
model = pauli
rates = 0.02, 0.03
trials = 200
seed = 77
chunk = 64
"""


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def small_cfg(tmp_path) -> Path:
    p = tmp_path / "small.cfg"
    p.write_text(SMALL_SWEEP)
    return p


class TestGenerate:
    def test_diamond_degrees(self, capsys, tmp_path):
        code, out, _ = run(capsys, "generate", "diamond", "--L", 4, "--out", tmp_path)
        assert code == EXIT_OK and out.strip() == "{4: 128}"
        assert (tmp_path / "diamond_L4.complex.txt").exists()
        man = RunManifest.read(tmp_path / "diamond_L4.manifest.json")
        assert man.status == "complete" and set(man.outputs) == {"complex", "graph", "degrees"}
        assert man.outputs["graph"]["sha256"] == sha256_file(tmp_path / "diamond_L4.primal-graph.txt")

    def test_bad_size(self, capsys, tmp_path):
        code, _, err = run(capsys, "generate", "cubic", "--L", 1, "--out", tmp_path)
        assert code == EXIT_VALIDATION and "L must be ≥ 2" in err

    def test_unknown_lattice(self, capsys, tmp_path):
        code, _, err = run(capsys, "generate", "hexagonal", "--L", 2, "--out", tmp_path)
        assert code == EXIT_VALIDATION and "error:" in err

    def test_json_roundtrip(self, capsys, tmp_path):
        assert run(capsys, "generate", "triamond", "--L", 2, "--format", "json", "--out", tmp_path)[0] == 0
        assert load(tmp_path / "triamond_L2.complex.json") == generate(("triamond", 2))
        assert load(tmp_path / "triamond_L2.primal-graph.json") == syndrome_graph("triamond", 2)

    def test_env_output_dir(self, capsys, tmp_path, monkeypatch):
        monkeypatch.setenv("FTCS_OUTPUT_DIR", str(tmp_path / "env"))
        assert run(capsys, "generate", "cubic", "--L", 2)[0] == 0
        assert (tmp_path / "env" / "cubic_L2.complex.txt").exists()

    def test_output_dir_is_a_file(self, capsys, tmp_path):
        blocker = tmp_path / "blocker"
        blocker.write_text("")
        code, _, err = run(capsys, "generate", "cubic", "--L", 2, "--out", blocker)
        assert code == EXIT_IO and "error:" in err


class TestVerify:
    def test_diamond_passes(self, capsys):
        code, out, _ = run(capsys, "verify", "--lattice", "diamond", "--L", 2)
        assert code == EXIT_OK
        assert "FAIL" not in out and "PASS self-dual (L=2)" in out and "PASS double dual is isomorphic" in out

    def test_file(self, capsys, tmp_path):
        dump(generate(("triamond", 2)), tmp_path / "t.txt")
        assert run(capsys, "verify", tmp_path / "t.txt")[0] == EXIT_OK

    def test_removed_face(self, capsys, tmp_path):
        # cell 0 drops face 0: face 0 then has one cell and cell 0 is no longer closed
        text = complex_to_text(generate(("cubic", 2))).replace("cell 0 0 1 2 3 7 14\n", "cell 0 1 2 3 7 14\n")
        p = tmp_path / "broken.txt"
        p.write_text(text)
        code, out, _ = run(capsys, "verify", p)
        assert code == EXIT_VALIDATION
        lines = out.splitlines()
        face_line = next(s for s in lines if "face belongs to exactly two cells" in s)
        assert face_line.startswith("FAIL") and "face 0" in face_line
        stab_line = next(s for s in lines if "cell stabilizers" in s)
        assert stab_line.startswith("FAIL") and "cell 0" in stab_line
        assert "SKIP dual complex is valid" in out

    def test_parse_error(self, capsys, tmp_path):
        p = tmp_path / "junk.txt"
        p.write_text("ftcs-complex 1\nL 2\nvertex 3 0 0 0\n")
        code, _, err = run(capsys, "verify", p)
        assert code == EXIT_VALIDATION and "junk.txt:3" in err

    def test_missing_file(self, capsys, tmp_path):
        assert run(capsys, "verify", tmp_path / "nope.txt")[0] == EXIT_IO

    def test_nothing_to_verify(self, capsys):
        assert run(capsys, "verify")[0] == EXIT_VALIDATION


class TestSplit:
    def test_diamond_pipeline(self, capsys, tmp_path):
        ins = tmp_path / "ins.json"
        ins.write_text(json.dumps({"instructions": [i.to_json() for i in pipeline("diamond", 2)]}))
        out = tmp_path / "d.txt"
        code, stdout, _ = run(capsys, "split", ins, "--lattice", "cubic", "--L", 2, "--out", out)
        assert code == EXIT_OK and "V=16" in stdout
        assert complexes_isomorphic(load(out), generate(("diamond", 2)))


class TestDecode:
    def test_three_edge_chain_trace(self, capsys, tmp_path):
        # L=8 so the three-edge chain is the short way between its endpoints
        g = syndrome_graph("cubic", 8)
        dump(g, tmp_path / "g.txt")
        chain = [cubic_edge_id(8, (x, 0, 0), 0) for x in range(3)]
        (tmp_path / "p.json").write_text(json.dumps(ErrorPattern.from_ids(g.num_edges, chain).to_json()))
        code, out, _ = run(capsys, "decode", tmp_path / "g.txt", tmp_path / "p.json", "--trace", tmp_path / "t.jsonl")
        assert code == EXIT_OK
        res = json.loads(out)
        assert res["annihilates"] and res["residual_syndrome_empty"] and not res["logical_failure"]
        assert res["weight"] == 3
        events = [json.loads(s) for s in (tmp_path / "t.jsonl").read_text().splitlines()]
        assert events[0]["event"] == "init" and len(events[0]["syndrome"]) == 2
        assert events[-1] == {"event": "done", "rounds": res["rounds"], "correction": res["correction"]}

    def test_syndrome_file(self, capsys, tmp_path):
        dump(generate(("cubic", 2)), tmp_path / "c.txt")
        g = syndrome_graph("cubic", 2)
        (tmp_path / "s.json").write_text(json.dumps({"syndrome": g.edges[0].tolist(), "erased": [0]}))
        code, out, _ = run(capsys, "decode", tmp_path / "c.txt", tmp_path / "s.json")
        assert code == EXIT_OK and json.loads(out)["correction"] == [0]

    def test_pattern_size_mismatch(self, capsys, tmp_path):
        dump(syndrome_graph("cubic", 2), tmp_path / "g.txt")
        (tmp_path / "p.json").write_text(json.dumps(ErrorPattern.from_ids(5, [1]).to_json()))
        assert run(capsys, "decode", tmp_path / "g.txt", tmp_path / "p.json")[0] == EXIT_VALIDATION


class TestSweep:
    def test_config_and_manifest(self, capsys, tmp_path, small_cfg):
        code, out, _ = run(capsys, "sweep", small_cfg, "--out", tmp_path, "--quiet")
        assert code == EXIT_OK and Path(out.strip()) == tmp_path / "small.csv"
        man = RunManifest.read(tmp_path / "small.manifest.json")
        assert man.status == "complete" and man.seed == 77
        assert man.outputs["csv"]["sha256"] == sha256_file(tmp_path / "small.csv")
        assert len((tmp_path / "small.csv").read_text().splitlines()) == 5

    def test_flags_override_config(self, capsys, tmp_path, small_cfg):
        run(capsys, "sweep", small_cfg, "--out", tmp_path, "--quiet", "--trials", 20, "--sizes", "4")
        man = RunManifest.read(tmp_path / "small.manifest.json")
        assert man.config["trials"] == 20 and man.config["sizes"] == [4]

    def test_seed_drawn_and_recorded(self, capsys, tmp_path):
        code, _, err = run(capsys, "sweep", "--lattice", "cubic", "--sizes", "4", "--model", "erasure",
                           "--rates", "0.2", "--trials", 10, "--out", tmp_path, "--quiet")
        assert code == EXIT_OK and "drew seed" in err
        seed = int(err.split("drew seed")[1].split()[0])
        man = RunManifest.read(tmp_path / "cubic_erasure.manifest.json")
        assert man.seed == seed == man.config["seed"] and "seed_drawn" not in man.config

    def test_replay_is_byte_identical(self, capsys, tmp_path, small_cfg):
        run(capsys, "sweep", small_cfg, "--out", tmp_path / "a", "--quiet")
        run(capsys, "sweep", "--replay", tmp_path / "a" / "small.manifest.json", "--out", tmp_path / "b", "--quiet")
        a, b = tmp_path / "a" / "small.csv", tmp_path / "b" / "small.csv"
        assert a.read_bytes() == b.read_bytes()
        ma = RunManifest.read(tmp_path / "a" / "small.manifest.json")
        mb = RunManifest.read(tmp_path / "b" / "small.manifest.json")
        assert ma.config == mb.config and ma.outputs == mb.outputs

    def test_resume_interrupted(self, capsys, tmp_path, small_cfg):
        run(capsys, "sweep", small_cfg, "--out", tmp_path / "full", "--quiet")
        ref = (tmp_path / "full" / "small.csv").read_bytes()
        part = tmp_path / "part"
        part.mkdir()
        man = json.loads((tmp_path / "full" / "small.manifest.json").read_text())
        man["status"], man["finished"] = "running", None
        (part / "small.manifest.json").write_text(json.dumps(man))
        # two complete rows and a torn third line
        lines = ref.decode().splitlines(keepends=True)
        (part / "small.csv").write_text("".join(lines[:3]) + lines[3][:10])
        code, _, err = run(capsys, "sweep", "--resume", part / "small.manifest.json")
        assert code == EXIT_OK
        assert (part / "small.csv").read_bytes() == ref

    def test_bad_config(self, capsys, tmp_path):
        p = tmp_path / "bad.cfg"
        p.write_text("[sweep]\nlattice = cubic\nflavour = strange\n")
        code, _, err = run(capsys, "sweep", p, "--out", tmp_path)
        assert code == EXIT_VALIDATION and "flavour" in err

    def test_not_a_sweep_manifest(self, capsys, tmp_path):
        run(capsys, "generate", "cubic", "--L", 2, "--out", tmp_path)
        assert run(capsys, "sweep", "--replay", tmp_path / "cubic_L2.manifest.json")[0] == EXIT_VALIDATION


class TestThreshold:
    def test_bundled_triamond_config(self, capsys, tmp_path):
        code, out, _ = run(capsys, "sweep", CONFIGS / "fig9d_small.cfg", "--out", tmp_path, "--quiet")
        assert code == EXIT_OK
        code, out, _ = run(capsys, "threshold", tmp_path / "fig9d_small.csv", "--bootstrap", 100,
                           "--out", tmp_path / "t.json")
        assert code == EXIT_OK
        est = json.loads(out)
        assert est == json.loads((tmp_path / "t.json").read_text())
        assert abs(est["crossing"] - 0.55) <= 0.02

    def test_no_crossing(self, capsys, tmp_path, small_cfg):
        # two rates far below threshold on small sizes: the curves never cross inside the window
        p = tmp_path / "low.cfg"
        p.write_text(SMALL_SWEEP.replace("rates = 0.02, 0.03", "rates = 0.001, 0.002, 0.003")
                     .replace("trials = 200", "trials = 50"))
        run(capsys, "sweep", p, "--out", tmp_path, "--quiet")
        code, _, err = run(capsys, "threshold", tmp_path / "low.csv", "--bootstrap", 0)
        assert code == EXIT_NO_CROSSING and "no threshold crossing" in err

    def test_report(self, capsys, tmp_path, small_cfg):
        run(capsys, "sweep", small_cfg, "--out", tmp_path, "--quiet")
        code, out, _ = run(capsys, "report", tmp_path / "small.csv")
        rows = out.splitlines()
        assert code == EXIT_OK and rows[0].startswith("lattice,model,L,rate") and len(rows) == 5


@pytest.mark.parametrize("text, rates", [("0.1, 0.2", (0.1, 0.2)), ("0.50:0.60:0.05", (0.5, 0.55, 0.6))])
def test_parse_rates(text, rates):
    assert parse_rates(text) == rates


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "ftcs", "--version"], capture_output=True, text=True)
    assert out.returncode == 0 and out.stdout.startswith("ftcs ")
