import json
import math

import pytest

from cmsthermo import cli, reports


def write(tmp_path, text, name="exp.toml"):
    p = tmp_path / name
    p.write_text(text)
    return p


GOLDEN = """
kind = "pressure"
seed = 3

[graph]
family = "golden"

[potential]
type = "zero"
"""


def test_pressure_run_on_golden(tmp_path, capsys):
    code = cli.main(["run", "--config", str(write(tmp_path, GOLDEN)), "--no-cache"])
    assert code == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["kind"] == "pressure" and rep["verdict"] == "conclusive"
    assert rep["result"]["value"] == pytest.approx(math.log((1 + math.sqrt(5)) / 2), abs=1e-12)


def test_run_writes_json_and_csv(tmp_path, capsys):
    cfg = write(tmp_path, 'kind = "pinf"\n[graph]\nfamily = "star"\n[potential]\ntype = "zero"\n')
    out = tmp_path / "out"
    assert cli.main(["run", "--config", str(cfg), "--out", str(out), "--no-cache"]) == 0
    rep = json.loads((out / "pinf.json").read_text())
    assert rep["result"]["verdict"] == "-inf" and rep["result"]["value"] == "-inf"
    assert list(out.glob("pinf_*.csv"))


def test_runs_are_deterministic(tmp_path):
    cfg = cli.validate({"kind": "pinf", "graph": {"family": "renewal"},
                        "potential": {"type": "log_law", "beta": 1.0}, "seed": 11})
    a, _, _ = cli.run(cfg, timestamp="t1")
    b, _, _ = cli.run(cfg, cache_dir=tmp_path, timestamp="t2")
    c, _, _ = cli.run(cfg, cache_dir=tmp_path, timestamp="t3")
    ta, tb, tc = (reports.strip_timestamp(reports.dumps(r)) for r in (a, b, c))
    assert ta == tb == tc


def test_seed_changes_random_graphs():
    base = {"kind": "pressure", "graph": {"family": "random", "n": 7}, "potential": {"type": "zero"}}
    vals = {cli.run(cli.validate(dict(base, seed=s)))[0]["result"]["value"] for s in range(4)}
    assert len(vals) > 1


@pytest.mark.parametrize("raw, path", [
    ({"kind": "nope", "graph": {"family": "golden"}}, "kind"),
    ({"kind": "pressure"}, "graph"),
    ({"kind": "pressure", "graph": {"family": "tree"}}, "graph.family"),
    ({"kind": "pressure", "graph": {"family": "golden"}, "schedules": {"N": [10, 10]}}, "schedules.N"),
    ({"kind": "pressure", "graph": {"family": "golden"}, "schedules": {"prefix": 5}}, "schedules.prefix"),
    ({"kind": "pressure", "graph": {"family": "golden"}, "potential": {"type": "magic"}}, "potential.type"),
    ({"kind": "suspend", "graph": {"family": "golden"}}, "roof"),
    ({"kind": "pressure", "graph": {"family": "golden"}, "colour": 1}, "colour"),
    ({"kind": "pressure", "graph": {"family": "finite", "edges": []}}, "graph.edges"),
    ({"kind": "pressure", "graph": {"family": "golden"}, "seed": "x"}, "seed"),
])
def test_validation_errors_name_the_field(raw, path):
    with pytest.raises(cli.ConfigError) as err:
        cli.validate(raw)
    assert err.value.path == path


def test_non_increasing_schedule_exit_code(tmp_path, capsys):
    cfg = write(tmp_path, GOLDEN + "\n[schedules]\nN = [10, 5]\n")
    assert cli.main(["run", "--config", str(cfg)]) == 1
    assert "schedules.N" in capsys.readouterr().err


def test_undecided_exit_code(tmp_path, capsys):
    cfg = write(tmp_path, 'kind = "spr"\n[graph]\nfamily = "full"\n[potential]\ntype = "zero"\n')
    assert cli.main(["run", "--config", str(cfg), "--no-cache"]) == 2
    assert json.loads(capsys.readouterr().out)["verdict"] == "undecided"


def test_census_overflow_is_reported(tmp_path, capsys):
    # a fixed 30-symbol truncation of the full shift has 30^11 return words of length 12
    cfg = write(tmp_path, 'kind = "discriminant"\n[graph]\nfamily = "full"\nN = 30\n'
                          '[potential]\ntype = "zero"\n')
    assert cli.main(["run", "--config", str(cfg), "--no-cache"]) == 1
    assert "census too large" in capsys.readouterr().err


def test_unparsable_config(tmp_path, capsys):
    assert cli.main(["run", "--config", str(write(tmp_path, "kind = = 1"))]) == 1
    assert "config error" in capsys.readouterr().err


def test_json_config(tmp_path, capsys):
    cfg = write(tmp_path, json.dumps({"kind": "beta", "graph": {"family": "golden"},
                                      "potential": {"type": "indicator", "word": [1]}}), "exp.json")
    assert cli.main(["run", "--config", str(cfg), "--no-cache"]) == 0
    assert json.loads(capsys.readouterr().out)["result"]["beta"] == 0.5


def test_dump_graph(capsys):
    assert cli.main(["dump-graph", "--family", "golden", "--N", "2"]) == 0
    assert capsys.readouterr().out == "cms-truncation v1\n1 2\n2 1\n2 2\n"
    assert cli.main(["dump-graph", "--family", "finite", "--N", "3", "--edges", "1-2,2-1"]) == 0


def test_verify_empty_family_list(capsys):
    assert cli.main(["verify", "--families", ""]) == 0
    assert "nothing to check" in capsys.readouterr().out


def test_verify_negative_control(capsys):
    assert cli.main(["verify", "--ids", "2", "--inject", "golden_entropy=0.5"]) == 1
    out = capsys.readouterr().out
    assert "[FAIL]" in out and "failed: 2" in out


def test_verify_rejects_unknown_constant(capsys):
    assert cli.main(["verify", "--ids", "1", "--inject", "nonsense=1"]) == 1


def test_verify_selected_check_passes(capsys):
    assert cli.main(["verify", "--ids", "1,2"]) == 0
    assert "2/2 checks passed" in capsys.readouterr().out
