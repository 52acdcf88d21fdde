import numpy as np
import pytest

from cylres import Sheet
from cylres.cli import main
from cylres.config import parse_config
from cylres.exceptions import ConfigError
from cylres.records import records_from_csv
from cylres.smith import LaurentMatrixGerm, conjugated_germ, random_unit_germ, write_germ

WINDOW = """
[cross_section]
kind = interval
truncate = 64
[potential]
kind = step
v0 = 4
[experiment]
kind = window_count
m_min = 2
m_max = 3
rho = 3.0
"""


def test_parse_full_config():
    cfg = parse_config(WINDOW + "[discretization]\nn_t = 32\nl_max = 40 ; comment\n[output]\ndir = /tmp/x\n")
    assert cfg.kind == "window_count" and (cfg.m_min, cfg.m_max, cfg.rho) == (2, 3, 3.0)
    assert cfg.disc.n_t == 32 and cfg.disc.l_max == 40 and cfg.out_dir == "/tmp/x"
    assert cfg.catalog().n_modes == 64
    assert cfg.potential.vnorm == 4.0


@pytest.mark.parametrize("raw", ["1, 2", "[1,2]", "2,1"])
def test_sheet_forms(raw):
    assert parse_config(f"[experiment]\nsheet = {raw}\n").sheet == Sheet.of(1, 2)


@pytest.mark.parametrize("text", [
    "[nonsense]\nx = 1\n",
    "[experiment]\nfoo = 1\n",
    "[experiment]\nkind = dance\n",
    "[experiment]\nm_min = two\n",
    "[experiment]\nm_min = 2.5\n",
    "[experiment]\nrho = 1\nbeta = 0.5\n",
    "[experiment]\nbeta = 1.5\n",
    "[experiment]\nradii = 3, 2\n",
    "[cross_section]\nkind = torus\n",
    "[cross_section]\nkind = interval\nlength = -1\n",
    "[potential]\ngeometry = moebius\n",
    "[discretization]\nquad = simpson\n",
    "not a config",
])
def test_bad_configs(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def _write(tmp_path, text, name="run.cfg"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_exit_codes(tmp_path, capsys):
    assert main(["bogus"]) == 1
    assert main(["count"]) == 1
    assert main(["count", "--config", str(tmp_path / "missing.cfg")]) == 1
    cfg = _write(tmp_path, WINDOW)
    assert main(["sum", "--config", cfg]) == 1          # kind mismatch
    assert main(["count", "--config", cfg, "--workers", "0"]) == 1
    assert main(["smith"]) == 1


def test_zero_potential_count_is_empty(tmp_path):
    cfg = _write(tmp_path, WINDOW.replace("kind = step\nv0 = 4", "kind = zero"))
    out = tmp_path / "out"
    assert main(["count", "--config", cfg, "--out", str(out)]) == 0
    recs, _ = records_from_csv((out / "resonances.csv").read_text())
    assert recs == []
    manifest = (out / "manifest.txt").read_text()
    assert "status = ok" in manifest


def test_count_is_deterministic_across_workers(tmp_path):
    cfg = _write(tmp_path, WINDOW.replace("m_max = 3", "m_max = 2\nsides = +, -"))
    texts = []
    for w in (1, 2):
        out = tmp_path / f"w{w}"
        assert main(["count", "--config", cfg, "--out", str(out), "--workers", str(w)]) == 0
        texts.append(((out / "resonances.csv").read_text(), (out / "counts.csv").read_text()))
    assert texts[0] == texts[1]
    recs, extra = records_from_csv(texts[0][0])
    assert sum(r.multiplicity for r in recs) > 0
    assert {m for m, _ in extra} == {"2"}


def test_smith_subcommand(tmp_path, capsys):
    germ = _write(tmp_path, write_germ(LaurentMatrixGerm(0j, 0, np.eye(2)[None])), "id.txt")
    assert main(["smith", "--germ", germ]) == 0
    assert capsys.readouterr().out.strip() == "mu_m=0 mu_d=0 certified=true"
    rng = np.random.default_rng(0)
    g = conjugated_germ([-2, 1], random_unit_germ(rng, 2, 21), random_unit_germ(rng, 2, 21), 20)
    germ = _write(tmp_path, write_germ(g), "g.txt")
    assert main(["smith", "--germ", germ]) == 0
    assert capsys.readouterr().out.strip() == "mu_m=2 mu_d=1 certified=true"
    bad = _write(tmp_path, "z0 = 0\n", "bad.txt")
    assert main(["smith", "--germ", bad]) == 1


def test_carleman_subcommand(capsys):
    assert main(["carleman"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "function,R,zero_side,integral_side,residual"
    assert len(lines) == 10
    assert max(float(l.split(",")[-1]) for l in lines[1:]) < 1e-6


def test_catalog_subcommand(tmp_path):
    cfg = _write(tmp_path, "[cross_section]\nkind = sphere\nn_thresholds = 4\n")
    out = tmp_path / "cat"
    assert main(["catalog", "--config", cfg, "--out", str(out)]) == 0
    rows = (out / "catalog.csv").read_text().strip().splitlines()
    assert len(rows) == 1 + 1 + 3 + 5 + 7


def test_smatrix_subcommand(tmp_path):
    cfg = _write(tmp_path, """
[cross_section]
kind = interval
truncate = 12
[potential]
kind = step
v0 = 4
[experiment]
kind = smatrix_probe
sheet = 1, 2
points = 3.3-0.7j, 5+2j
""")
    out = tmp_path / "sm"
    assert main(["smatrix", "--config", cfg, "--out", str(out)]) == 0
    ident = (out / "inverse_identity.csv").read_text().strip().splitlines()
    assert len(ident) == 3 and all(float(l.split(",")[-1]) < 1e-8 for l in ident[1:])
