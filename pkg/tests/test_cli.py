import csv
import io
import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from logwell import cli
from logwell.config import PotentialInput, RunConfig
from logwell.errors import ConfigError

FOUR_WELL_SCALED = ["--form", "scaled", "--omega2", "0.11", "--g2", "1", "--spike", "1,1.7"]
SIX_WELL_SCALED = ["--form", "scaled", "--omega2", "0.11", "--g2", "2", "--spike", "2.3,1.7", "--spike", "5,11.3"]
SIX_WELL_CANON = ["--omega2", "0.11", "--g2", "2",
              "--spike", f"2.3,{math.sqrt(1.7 / 0.11)!r}", "--spike", f"5,{math.sqrt(11.3 / 0.11)!r}"]
K1_SWEEP = ["--omega2", "1", "--spike", "0.5,1", "--target-spike", "3,1"]


def run(argv):
    out = io.StringIO()
    code = cli.run(argv, stdout=out)
    return code, out.getvalue()


def parse_csv(text):
    meta = [l for l in text.splitlines() if l.startswith("#")]
    body = [l for l in text.splitlines() if not l.startswith("#")]
    rows = list(csv.DictReader(body))
    return meta, rows


def column(rows, name):
    return np.array([float(r[name]) for r in rows])


def local_minima(v):
    return int(np.sum((v[1:-1] < v[:-2]) & (v[1:-1] < v[2:])))


potential_inputs = st.builds(
    PotentialInput,
    form=st.just("canonical"),
    omega2=st.floats(0.1, 5),
    g2=st.floats(0, 5),
    spikes=st.lists(st.builds(lambda h, s: {"h2": h, "s": s}, st.floats(0.1, 3), st.floats(0.1, 3)),
                    max_size=3).map(tuple),
)


@given(
    potential_inputs,
    st.integers(100, 9000),
    st.sampled_from(["leading", "matrix", "rs", "numeric"]),
    st.one_of(st.none(), st.floats(3, 30)),
    st.one_of(st.none(), st.tuples(st.integers(0, 5), st.integers(0, 5))),
)
def test_config_round_trip(pot, N, method, L, pair):
    cfg = RunConfig(potential=pot, target=pot, N=N, method=method, L=L, wells=pair, format="json")
    assert RunConfig.from_json(cfg.to_json()) == cfg


@pytest.mark.parametrize(
    "doc",
    [
        {"potential": {"omega2": 1.0}, "bogus": 1},
        {"potential": {"omega2": 1.0, "colour": "red"}},
        {"potential": {"omega2": 1.0, "spikes": [{"h2": 1.0, "s": 1.0, "x": 0}]}},
        {"potential": {"form": "scaled", "omega2": 1.0, "spikes": [{"h2": 1.0, "s": 1.0}]}},
        {"potential": {"g2": 1.0}},
        {"N": "many"},
        {"method": "magic"},
    ],
)
def test_strict_schema(doc):
    with pytest.raises(ConfigError):
        RunConfig.from_dict(doc)


def test_scaled_conversion():
    spec, offset = PotentialInput("scaled", 0.11, 1.0, ({"lambda2": 1.0, "h2": 1.7},)).canonical()
    assert spec.spikes[0][1] == pytest.approx(math.sqrt(1.7 / 0.11))
    assert offset == pytest.approx(-2.0 * math.log(0.11))


def test_scaled_reported_values_constant_shift():
    _, a = parse_csv(run(["potential"] + SIX_WELL_SCALED)[1])
    _, b = parse_csv(run(["potential"] + SIX_WELL_CANON)[1])
    xa, xb = column(a, "x"), column(b, "x")
    assert np.array_equal(xa, xb)
    diff = column(a, "V") - column(b, "V")
    assert np.ptp(diff) < 1e-12 * max(1.0, np.max(np.abs(column(b, "V"))))
    assert diff[0] == pytest.approx(-2.0 * (2.3 + 5.0) * math.log(0.11), rel=1e-12)


def test_scaled_matches_direct_formula():
    _, rows = parse_csv(run(["potential", "--L", "8", "--dump-samples", "201"] + FOUR_WELL_SCALED)[1])
    x, v = column(rows, "x"), column(rows, "V")
    direct = 0.11 * x**2 - np.log(x**2) - np.log((0.11 * x**2 - 1.7) ** 2)
    np.testing.assert_allclose(v, direct, rtol=1e-10, atol=1e-10)


def test_potential_dump_multiwell_shapes():
    code, text = run(["potential", "--L", "8", "--dump-samples", "4001"] + FOUR_WELL_SCALED)
    assert code == 0
    _, rows = parse_csv(text)
    v = column(rows, "V")
    assert local_minima(v) == 4
    code, text = run(["potential", "--dump-samples", "20001"] + SIX_WELL_SCALED)
    _, rows = parse_csv(text)
    assert local_minima(column(rows, "V")) == 6
    _, wrows = parse_csv(run(["wells"] + SIX_WELL_SCALED)[1])
    assert len(wrows) == 6


def test_potential_dump_pure_ho():
    _, rows = parse_csv(run(["potential", "--omega2", "1", "--L", "5"])[1])
    x, v = column(rows, "x"), column(rows, "V")
    assert len(rows) == 1001
    assert np.max(np.abs(v - x * x)) == 0.0


def test_potential_dump_skips_singular_points():
    _, rows = parse_csv(run(["potential", "--omega2", "1", "--g2", "1", "--L", "5", "--dump-samples", "11"])[1])
    assert len(rows) == 10 and 0.0 not in column(rows, "x")


def test_csv_format_and_determinism():
    argv = ["spectrum", "--method", "numeric", "--N", "2000", "--k", "4"] + FOUR_WELL_SCALED
    code, a = run(argv)
    assert code == 0 and a == run(argv)[1]
    meta, rows = parse_csv(a)
    assert any(l.startswith("# spec_hash: ") for l in meta)
    assert any(l.startswith("# logwell: ") for l in meta)
    header = [l for l in a.splitlines() if not l.startswith("#")][0]
    assert header == "n,E,dominant_region"
    assert len(rows) == 4
    e = rows[0]["E"]
    assert float(e) == float("%.17g" % float(e)) and len(e.replace("-", "").replace(".", "")) >= 15


def test_wells_table():
    _, rows = parse_csv(run(["wells", "--omega2", "1", "--spike", "1,1"])[1])
    np.testing.assert_allclose(column(rows, "R"), [-math.sqrt(3), 0, math.sqrt(3)], atol=1e-12)
    np.testing.assert_allclose(column(rows, "c2"), [3, 3, 3], rtol=1e-12)


@pytest.mark.parametrize("method", ["leading", "matrix", "rs"])
def test_spectrum_local_methods(method):
    code, text = run(["spectrum", "--method", method, "--omega2", "1", "--g2", "100", "--n-max", "2"])
    assert code == 0
    _, rows = parse_csv(text)
    assert len(rows) == 6
    e0 = float(rows[0]["E"])
    assert e0 == pytest.approx(-359.103, abs=0.01)


def test_compare_pure_ho():
    _, rows = parse_csv(run(["compare", "--omega2", "1"])[1])
    assert len(rows) == 8
    assert np.max(np.abs(column(rows, "dE"))) < 1e-3


def test_compare_k0_shrinking_gap():
    gaps = []
    for g in (5, 10, 20):
        _, rows = parse_csv(run(["compare", "--omega2", "1", "--g2", str(g * g), "--k", "2"])[1])
        gaps.append(abs(float(rows[0]["dE"])))
    assert gaps[0] > gaps[1] > gaps[2] and gaps[0] < 0.01


def test_scan_one_crossing_csv():
    code, text = run(["scan"] + K1_SWEEP)
    assert code == 0
    crossings = [json.loads(l.split(": ", 1)[1]) for l in text.splitlines() if l.startswith("# crossing: ")]
    assert len(crossings) == 1
    assert crossings[0]["status"] in ("confirmed", "unconfirmed")
    _, rows = parse_csv(text)
    assert len(rows) == 3 * 101


def test_scan_json(tmp_path):
    out = tmp_path / "scan.json"
    code, text = run(["scan", "--format", "json", "--out", str(out)] + K1_SWEEP)
    assert code == 0 and text == ""
    doc = json.loads(out.read_text())
    assert len(doc["crossing"]) == 1 and doc["event"] == []
    assert doc["crossing"][0]["t_star"] == pytest.approx(0.4466208, abs=1e-6)
    assert not list(tmp_path.glob(".logwell-*"))


def test_scan_explicit_pair():
    code, text = run(["scan", "--wells", "0,2"] + K1_SWEEP)
    assert code == 0
    assert not [l for l in text.splitlines() if l.startswith("# crossing: ")]


def test_config_file(tmp_path):
    cfg = RunConfig(potential=PotentialInput("canonical", 1.0, 0.0, ({"h2": 1.0, "s": 1.0},)))
    path = tmp_path / "run.json"
    path.write_text(cfg.to_json())
    code, text = run(["wells", "--config", str(path)])
    assert code == 0 and len(parse_csv(text)[1]) == 3
    # flags override the file
    code, text = run(["wells", "--config", str(path), "--spike", "1,1", "--spike", "1,3"])
    assert len(parse_csv(text)[1]) == 5


def error_of(capsys):
    return json.loads(capsys.readouterr().err.strip().splitlines()[-1])


def test_exit_code_config_error(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"potential": {"omega2": 1.0}, "nonsense": True}))
    assert cli.run(["wells", "--config", str(path)], stdout=io.StringIO()) == 2
    assert error_of(capsys)["error"] == "ConfigError"
    assert cli.run(["wells", "--omega2", "-1"], stdout=io.StringIO()) == 2
    assert error_of(capsys)["error"] == "NonPositiveOmega2"
    assert cli.run(["wells", "--spike", "1;1"], stdout=io.StringIO()) == 2
    assert cli.run(["scan", "--omega2", "1"], stdout=io.StringIO()) == 2


def test_exit_code_numerical_error(capsys):
    argv = ["spectrum", "--method", "numeric", "--N", "1500"] + SIX_WELL_SCALED
    assert cli.run(argv, stdout=io.StringIO()) == 3
    err = error_of(capsys)
    assert err["error"] == "ClearanceImpossible" and "try N=" in err["message"]


def test_atomic_write_replaces(tmp_path):
    target = tmp_path / "out.csv"
    target.write_text("old")
    cli.write_atomic(str(target), "new")
    assert target.read_text() == "new"
    assert [p.name for p in tmp_path.iterdir()] == ["out.csv"]
