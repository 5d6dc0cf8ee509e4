import json

import pytest

from qcurrents.cli import (ConfigError, RunConfig, UnknownOperator, build_operator,
                           dump_operator, main, run)


def _doc(**kw):
    return run(RunConfig(**kw))


def _strip(doc):
    doc = dict(doc)
    doc.pop("runtime_ms")
    return doc


def test_json_schema(capsys):
    assert main(["run", "--suite", "relations", "--degree", "1", "--window", "1",
                 "--report", "json"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert set(doc) >= {"version", "config", "reports", "conventions", "runtime_ms"}
    rep = doc["reports"][0]
    assert set(rep) >= {"check_id", "params", "status", "assertions", "failures", "truncated"}
    assert doc["config"]["D"] == 2 and doc["config"]["L"] == 1


def test_deterministic_reports():
    a = _doc(suite="ope", N=0, W=1, seed=3)
    b = _doc(suite="ope", N=0, W=1, seed=3)
    assert json.dumps(_strip(a), sort_keys=True) == json.dumps(_strip(b), sort_keys=True)


def test_exit_status_reflects_failures(tmp_path):
    out = tmp_path / "r.txt"
    assert main(["run", "--suite", "relations", "--degree", "0", "--window", "1",
                 "--out", str(out)]) == 0
    assert main(["run", "--suite", "relations", "--degree", "0", "--window", "1",
                 "--delta-parse", "a", "--out", str(out)]) == 1
    assert "FAIL" in out.read_text()


def test_caps():
    with pytest.raises(ConfigError):
        RunConfig(suite="all", m=5, N=12).validate()
    with pytest.raises(ConfigError):
        RunConfig(m=3).validate()
    RunConfig(m=3, sectors=[0] * 4, backend="numeric").validate()
    RunConfig(m=5, N=12, sectors=[0] * 6, force=True).validate()


def test_config_error_exit_code(capsys):
    assert main(["run", "--level-m", "5", "--degree", "12"]) == 2
    assert "caps" in capsys.readouterr().err


@pytest.mark.parametrize("bad", [dict(sectors=[2]), dict(m=1, sectors=[0]), dict(W=-1),
                                 dict(q=0j), dict(backend="gpu")])
def test_invalid_configs(bad):
    with pytest.raises(ConfigError):
        RunConfig(**bad).validate()


def test_both_backends_add_cross_check():
    doc = _doc(suite="relations", sectors=[0], N=0, W=1, backend="both")
    ids = [r["check_id"] for r in doc["reports"]]
    assert ids == ["defining_relations", "defining_relations", "cross_backend"]
    assert doc["summary"]["passed"]


def test_warm_cache_matches_cold(tmp_path):
    cold = _doc(suite="relations", N=1, W=1, cache_dir=str(tmp_path))
    warm = _doc(suite="relations", N=1, W=1, cache_dir=str(tmp_path))
    assert cold["reports"][0]["notes"] != warm["reports"][0]["notes"]  # built, then hit
    assert cold["reports"][1:] == warm["reports"][1:]


def test_dump_xplus_tails():
    text = dump_operator("x+", K=3)
    assert "creation slot 1 k=1: q^-1/2" in text
    assert "creation slot 1 k=2: (1)/(1 + q^2)" in text


def test_dump_contraction():
    assert dump_operator("contract(x+, x+)").startswith("z^2 * (1 - q^-2 x) * (1 - x)")


def test_dump_identity_json():
    d = json.loads(dump_operator("identity", fmt="json"))
    assert d["prefactor"] == "1"
    assert all(a == "0" for row in d["creation"] + d["annihilation"] for a in row)


def test_dump_level_operators():
    assert build_operator("V+", m=1).nslots == 2
    assert build_operator("phi-_2", m=1).nslots == 2
    with pytest.raises(UnknownOperator):
        build_operator("X+_3", m=1)
    with pytest.raises(UnknownOperator):
        build_operator("nonsense")


def test_unknown_operator_exit(capsys):
    assert main(["dump-operator", "nonsense"]) == 2
