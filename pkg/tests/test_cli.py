import json
import os

import pytest

from tpoly import cli, svg
from tpoly.lattice import isosceles


def run(argv):
    return cli.main(argv)


def test_ihp_command(tmp_path):
    out = tmp_path / "ihp.json"
    assert run(["ihp", "--d", "7", "--p", "17", "--lmax", "36",
                "--json", str(out)]) == 0
    data = json.loads(out.read_text())
    assert data["schema"] == "tpoly/1"
    assert [28, "259/1"] in data["vertices"]
    assert [36, "387/1"] in data["vertices"]


def test_gnp_vertices_command(tmp_path, capsys):
    out = tmp_path / "v.json"
    assert run(["gnp-vertices", "--d", "7", "--p", "17", "--kmax", "2",
                "--json", str(out)]) == 0
    rows = json.loads(out.read_text())["rows"]
    assert rows[0]["x_k"] == 28 and rows[0]["h_Tk"] == 259
    assert rows[1]["x_k"] == 105


def test_hodge_h_command(tmp_path):
    out = tmp_path / "h.json"
    assert run(["hodge-h", "--d", "5", "--p", "11", "--k", "1",
                "--json", str(out)]) == 0
    data = json.loads(out.read_text())
    assert data["h_greedy"] == data["h_oracle"] == 80


def test_dwork_np_command(tmp_path):
    f = tmp_path / "f.json"
    f.write_text(json.dumps({"3,0": 1, "0,3": 2, "1,1": 3}))
    out = tmp_path / "np.json"
    assert run(["dwork-np", "--d", "3", "--p", "7", "--f", str(f),
                "--tprec", "18", "--lmax", "6", "--json", str(out)]) == 0
    data = json.loads(out.read_text())
    assert data["valuations"]["0"] == 0
    assert data["valuations"]["6"] == 16


def test_leading_coeff_command(tmp_path):
    f = tmp_path / "f.json"
    f.write_text(json.dumps({"3,0": 1, "0,3": 2, "1,1": 3}))
    out = tmp_path / "lead.json"
    assert run(["leading-coeff", "--d", "3", "--p", "7", "--f", str(f),
                "--json", str(out)]) == 0
    data = json.loads(out.read_text())
    assert data["h_T1"] == 16 and data["unit_mod_p"]
    assert data["match"]


def test_special_command(tmp_path):
    out = tmp_path / "cls.json"
    assert run(["special", "--d", "5", "--p", "11",
                "--emit-classes", str(out)]) == 0
    data = json.loads(out.read_text())
    assert data["count"] == 1
    assert data["classes"][0]["size"] == 1


def test_beta_command(tmp_path):
    out = tmp_path / "beta.json"
    pic = tmp_path / "beta.svg"
    assert run(["beta", "--d", "13", "--p", "41", "--json", str(out),
                "--svg", str(pic)]) == 0
    data = json.loads(out.read_text())
    assert data["status"] == "ok" and data["sign"] == 1
    assert pic.read_text().startswith("<svg")

    out2 = tmp_path / "beta717.json"
    assert run(["beta", "--d", "7", "--p", "17", "--json", str(out2)]) == 2
    assert json.loads(out2.read_text())["status"] == "out-of-hypothesis"


def test_figure_command(tmp_path):
    for which in ("t1", "y0"):
        out = tmp_path / f"{which}.svg"
        assert run(["figure", "--d", "7", "--p", "17", "--which", which,
                    "--out", str(out)]) == 0
        text = out.read_text()
        assert text.startswith("<svg") and text.rstrip().endswith("</svg>")
    out = tmp_path / "regions.svg"
    assert run(["figure", "--d", "16", "--p", "19", "--which", "regions",
                "--out", str(out)]) == 0
    body = out.read_text()
    assert 'class="k1"' in body and 'class="k2"' in body


def test_figure_markers_match_paper_sets(tmp_path):
    text = svg.figure_y0(isosceles(7), 17)
    # nine bullets at Y0, nine circles at m(Y0)
    assert text.count('class="bullet"') == 9
    assert text.count('class="circle"') == 9


def test_figure_byte_deterministic():
    a = svg.figure_t1_split(isosceles(7), 17)
    b = svg.figure_t1_split(isosceles(7), 17)
    assert a == b


def test_verify_command_and_exit_code(tmp_path):
    out = tmp_path / "verify.json"
    assert run(["verify", "--d", "5", "--p", "11", "--seed", "1",
                "--json", str(out)]) == 0
    rep = json.loads(out.read_text())
    assert rep["failures"] == 0
    assert all(c["status"] in ("pass", "out-of-hypothesis")
               for c in rep["checks"])
    assert rep["seed"] == 1


def test_verify_rejects_bad_config():
    with pytest.raises(SystemExit):
        run(["verify", "--d", "7", "--p", "15"])
    with pytest.raises(SystemExit):
        run(["verify", "--d", "7", "--p", "7"])
