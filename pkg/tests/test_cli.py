import gzip
import hashlib
import json
from pathlib import Path

import numpy as np
import pytest

from cstarweb import io
from cstarweb._accel import HAS_NUMBA
from cstarweb.cli import _attach_negative_values, run

GOLDEN = Path(__file__).parent / "golden" / "render_h_entry_1024.ppm.gz"


def cli(tmp_path, *argv):
    return run(["--out", str(tmp_path), *argv])


def manifest(tmp_path):
    return {e["path"]: e for e in json.loads((tmp_path / "manifest.json").read_text())["artifacts"]}


def test_negative_values_are_attached():
    assert _attach_negative_values(["--window", "-6,6,-6,6", "--px", "8"]) == \
        ["--window=-6,6,-6,6", "--px", "8"]
    assert _attach_negative_values(["--lambda", "-.5"]) == ["--lambda=-.5"]
    assert _attach_negative_values(["--a", "--b"]) == ["--a", "--b"]


# -- render --------------------------------------------------------------------


@pytest.mark.skipif(not HAS_NUMBA, reason="golden render is pinned to the compiled kernel")
def test_render_matches_golden(tmp_path):
    code = cli(tmp_path, "--backend", "numba", "render", "--lambda", "32", "--window",
               "-6,6,-6,6", "--px", "1024", "--layer", "h-entry")
    assert code == 0
    with gzip.open(GOLDEN, "rb") as fh:
        assert (tmp_path / "render.ppm").read_bytes() == fh.read()


def test_render_small_and_manifest(tmp_path):
    assert cli(tmp_path, "render", "--px", "40,30", "--budget", "20") == 0
    data = (tmp_path / "render.ppm").read_bytes()
    assert io.read_ppm(tmp_path / "render.ppm").shape == (30, 40, 3)
    entry = manifest(tmp_path)["render.ppm"]
    assert entry["sha256"] == hashlib.sha256(data).hexdigest()
    assert entry["kind"] == "ppm"
    assert entry["params"]["budget"] == 20 and entry["params"]["lambda"] == 32.0
    assert entry["argv"][-2:] == ["--budget", "20"]


def test_render_complement_pbm(tmp_path):
    assert cli(tmp_path, "render", "--logpolar", "-2,2", "--px", "64", "--budget", "14",
               "--layer", "i-complement") == 0
    mask = io.read_pbm(tmp_path / "i_complement.pbm")
    assert mask.shape == (64, 64)
    assert mask.any() and not mask.all()


def test_render_is_thread_invariant(tmp_path):
    out = []
    for threads in ("1", "4", "16"):
        d = tmp_path / threads
        assert cli(d, "--threads", threads, "render", "--px", "48", "--budget", "24") == 0
        out.append((d / "render.ppm").read_bytes())
    assert out[0] == out[1] == out[2]


def test_manifest_entry_regenerates_artifact(tmp_path):
    assert cli(tmp_path / "a", "render", "--px", "32", "--budget", "16", "--window", "-3,3,-3,3") == 0
    entry = manifest(tmp_path / "a")["render.ppm"]
    assert cli(tmp_path / "b", *entry["argv"][2:]) == 0
    assert (tmp_path / "b" / "render.ppm").read_bytes() == (tmp_path / "a" / "render.ppm").read_bytes()


def test_manifest_merges_runs(tmp_path):
    assert cli(tmp_path, "render", "--px", "16", "--budget", "16") == 0
    assert cli(tmp_path, "topo", "websheck", "--fixture", "circles-with-spoke", "--n", "5") == 0
    assert set(manifest(tmp_path)) == {"render.ppm", "websheck.json"}
    assert cli(tmp_path, "render", "--px", "16", "--budget", "16", "--output", "other.ppm") == 0
    assert set(manifest(tmp_path)) == {"render.ppm", "websheck.json", "other.ppm"}


def test_render_lambda_too_small(tmp_path):
    assert cli(tmp_path, "render", "--px", "8", "--lambda", "1.5") == 2


# -- config --------------------------------------------------------------------


def test_config_precedence(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"lambda": 8, "budget": 18, "px": "12"}))
    assert cli(tmp_path, "--config", str(cfg), "render", "--budget", "22") == 0
    p = manifest(tmp_path)["render.ppm"]["params"]
    assert p["lambda"] == 8.0 and p["budget"] == 22 and p["grid"]["width"] == 12


def test_bad_config(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text("[1, 2]")
    assert cli(tmp_path, "--config", str(cfg), "render") == 2
    assert cli(tmp_path, "--config", str(tmp_path / "missing.json"), "render") == 2


@pytest.mark.parametrize("argv", [
    [],
    ["paint"],
    ["render", "--layer", "nope"],
    ["render", "--px", "0"],
    ["render", "--window", "1,2,3"],
    ["render", "--budget", "5", "--px", "8"],
    ["trace", "--kind", "a-n"],
])
def test_usage_errors(tmp_path, argv, capsys):
    assert cli(tmp_path, *argv) == 2
    assert "usage" in capsys.readouterr().err


# -- trace ---------------------------------------------------------------------


def _csv(path):
    lines = path.read_text().splitlines()
    return lines[0].split(","), lines[1:]


def test_trace_preimage(tmp_path):
    assert cli(tmp_path, "trace", "--kind", "preimage", "--window", "0.3,4,-2,2",
               "--resolution", "200") == 0
    header, rows = _csv(tmp_path / "trace_preimage.csv")
    assert header[:1] and len(rows) > 50


def test_trace_barrier(tmp_path):
    assert cli(tmp_path, "trace", "--kind", "barrier", "--window", "-6,-0.2,0.05,3",
               "--resolution", "200") == 0
    assert len(_csv(tmp_path / "trace_barrier.csv")[1]) > 50


def test_trace_a_n(tmp_path):
    assert cli(tmp_path, "trace", "--kind", "a-n", "--n", "10") == 0
    assert cli(tmp_path, "trace", "--kind", "a-n-prime", "--n", "10", "--window",
               "-8,-0.5,0.02,3.12", "--resolution", "300") == 0
    m = manifest(tmp_path)
    assert m["trace_a-n.csv"]["params"]["n"] == 10
    assert m["trace_a-n-prime.csv"]["params"]["polylines"] == 1


def test_trace_too_coarse(tmp_path):
    argv = ["trace", "--kind", "preimage", "--window", "-0.1,0.1,0.005,0.1",
            "--resolution", "40"]
    assert cli(tmp_path, *argv) == 1
    assert cli(tmp_path, *argv, "--on-coarse", "skip") == 0
    # a window through the origin is rejected before tracing
    assert cli(tmp_path, "trace", "--window", "-0.05,0.05,-0.05,0.05") == 2


def test_trace_is_deterministic(tmp_path):
    for d in ("a", "b"):
        assert cli(tmp_path / d, "trace", "--kind", "barrier", "--window", "-4,-0.2,0.05,3",
                   "--resolution", "120") == 0
    assert (tmp_path / "a" / "trace_barrier.csv").read_bytes() == \
        (tmp_path / "b" / "trace_barrier.csv").read_bytes()


# -- verify --------------------------------------------------------------------


def test_verify_growth(tmp_path, capsys):
    assert cli(tmp_path, "verify", "growth", "--lambda", "2", "--samples", "20000") == 0
    doc = json.loads((tmp_path / "verify_growth.json").read_text())
    assert doc["pass"] and doc["worst_margin"] >= 0
    assert "PASS" in capsys.readouterr().err


def test_verify_halfline(tmp_path):
    assert cli(tmp_path, "verify", "halfline", "--n-min", "5", "--n-max", "8") == 0
    assert cli(tmp_path, "verify", "halfline", "--n-min", "1", "--n-max", "1") == 1
    assert cli(tmp_path, "verify", "halfline", "--lambda", "4") == 2


def test_verify_channels(tmp_path, capsys):
    assert cli(tmp_path, "verify", "channels", "--samples", "2500") == 0
    doc = json.loads((tmp_path / "verify_channels.json").read_text())
    assert [d["lemma"] for d in doc] == ["C+", "C-", "C_even", "C_odd"]
    assert cli(tmp_path, "verify", "channels", "--R", "4", "--parity", "as_written",
               "--samples", "2500") == 1
    assert "FAIL" in capsys.readouterr().err


def test_verify_shadow(tmp_path):
    assert cli(tmp_path, "verify", "shadow", "--steps", "8") == 0
    doc = json.loads((tmp_path / "verify_shadow.json").read_text())
    assert doc["pass"] and doc["details"]["distance"] <= 1e-6
    assert cli(tmp_path, "verify", "shadow", "--chain", "orbit", "--point", "3,0") == 0
    doc = json.loads((tmp_path / "verify_shadow.json").read_text())
    assert doc["details"]["distance"] <= 1e-3


# -- topo ----------------------------------------------------------------------


def test_topo_websheck_spoke(tmp_path):
    assert cli(tmp_path, "topo", "websheck", "--fixture", "circles-with-spoke", "--n", "5") == 0
    doc = json.loads((tmp_path / "websheck.json").read_text())
    assert doc["is_cstar_spiders_web"] and doc["rings"] >= 4


@pytest.mark.parametrize("name", ["circles", "single-circle"])
def test_topo_websheck_fails(tmp_path, name):
    assert cli(tmp_path, "topo", "websheck", "--fixture", name) == 1
    assert not json.loads((tmp_path / "websheck.json").read_text())["is_cstar_spiders_web"]


def test_topo_websheck_plane_fixture_is_projected(tmp_path):
    assert cli(tmp_path, "topo", "websheck", "--fixture", "plane-squares-web") == 0


def test_topo_random_fixture_uses_seed(tmp_path):
    codes = {cli(tmp_path / str(s), "topo", "websheck", "--fixture", "random-web", "--seed", str(s))
             for s in range(12)}
    assert codes == {0, 1}
    a = (tmp_path / "3" / "websheck.json").read_bytes()
    assert cli(tmp_path / "again", "topo", "websheck", "--fixture", "random-web", "--seed", "3") in (0, 1)
    assert (tmp_path / "again" / "websheck.json").read_bytes() == a


def test_topo_lift(tmp_path):
    assert cli(tmp_path, "topo", "lift", "--fixture", "circles-with-spoke", "--copies", "2") == 0
    mask = io.read_pbm(tmp_path / "lift.pbm")
    assert json.loads((tmp_path / "lift.json").read_text())["plane_spiders_web"]
    assert mask.shape[0] == 2 * 64
    assert cli(tmp_path, "topo", "lift", "--fixture", "circles") == 1


def test_topo_separate(tmp_path):
    assert cli(tmp_path, "topo", "separate", "--fixture", "circles", "--n", "3", "--cell", "16,5") == 0
    doc = json.loads((tmp_path / "separate.json").read_text())
    assert doc == {"cell": [16, 5], "separated": True}
    assert cli(tmp_path, "topo", "separate", "--fixture", "single-circle", "--cell", "5,0") == 1
    # the default cell is the raster center, which lies on the circle here
    assert cli(tmp_path, "topo", "separate", "--fixture", "circles", "--n", "3") == 2


def test_topo_input_pbm(tmp_path):
    m = np.zeros((20, 16), dtype=bool)
    m[[0, 5, 10, 15, 19]] = True
    m[:, 3] = True
    io.write_pbm(tmp_path / "m.pbm", m)
    assert cli(tmp_path, "topo", "websheck", "--input", str(tmp_path / "m.pbm"),
               "--logpolar", "-1,1") == 0
    assert cli(tmp_path, "topo", "websheck", "--input", str(tmp_path / "m.pbm")) == 2


def test_unknown_fixture_is_usage_error(tmp_path, capsys):
    assert cli(tmp_path, "topo", "websheck", "--fixture", "moebius") == 2
    assert "moebius" in capsys.readouterr().err
