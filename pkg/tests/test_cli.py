import json

import pytest

from odk.cli import RunConfig, main, parse_point
from odk.errors import ParseError, ValidationError

from conftest import CORPUS, GROUPS


def run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr()


def test_density_exit_codes(capsys):
    code, out = run(capsys, "density", "--input", str(CORPUS / "one_sqrt2.json"), "--mode", "exact")
    assert code == 0 and json.loads(out.out)["outcome"] == "CERTIFIED_DENSE"
    code, out = run(capsys, "density", "--input", str(CORPUS / "one_threehalves.json"))
    assert code == 1 and json.loads(out.out)["relation"]["s"] == [2, 3]
    code, out = run(capsys, "density", "--input", str(CORPUS / "one_threehalves.json"), "--mode", "float")
    assert code == 1 and json.loads(out.out)["outcome"] == "NOT_DENSE_NUMERIC"


def test_density_unknown(tmp_path, capsys):
    path = tmp_path / "gray.json"
    path.write_text(json.dumps({"ambient": "real", "generators": [[1, 0], [0, 1e-8], [1.4142135623730951, 0]]}))
    assert run(capsys, "density", "--input", str(path))[0] == 2


def test_malformed_json(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text('{"ambient": ')
    code, out = run(capsys, "density", "--input", str(path))
    assert code == 3 and "line 1" in out.err
    assert run(capsys, "density", "--input", str(tmp_path / "missing.json"))[0] == 3


def test_bad_flags_are_errors(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["density", "--input", "x.json", "--bogus"])
    assert exc.value.code == 3


def test_certify_and_verify(tmp_path, capsys):
    cert = tmp_path / "cert.json"
    code, _ = run(capsys, "certify", "--input", str(GROUPS / "gl1_two_exp.json"), "--point", "1", "--out", str(cert))
    assert code == 0
    data = json.loads(cert.read_text())
    assert data["claim"] == "DENSE"
    assert run(capsys, "verify", "--input", str(cert))[0] == 0

    data["verdict"]["relation"] = {"s": [1, 1, 0], "residual": 0.0, "height": 1}
    bad = tmp_path / "bad_s.json"
    bad.write_text(json.dumps(data))
    assert run(capsys, "verify", "--input", str(bad))[0] == 1

    data = json.loads(cert.read_text())
    data["alpha"] = [a + 1e-3 for a in data["alpha"]]
    bad.write_text(json.dumps(data))
    assert run(capsys, "verify", "--input", str(bad))[0] == 1


@pytest.mark.parametrize("group", ["scalar_two.json", "rotation_sqrt2.json"])
def test_certify_not_found(group, capsys):
    code, out = run(capsys, "certify", "--input", str(GROUPS / group), "--point", "1")
    assert code == 2 and json.loads(out.out)["claim"] == "NOT_FOUND"


def test_certify_zero_point(capsys):
    code, out = run(capsys, "certify", "--input", str(GROUPS / "gl1_two_exp.json"), "--point", "0")
    assert code == 3 and "VALIDATION" in out.err


def test_certify_is_byte_identical(tmp_path, capsys):
    paths = [tmp_path / f"c{i}.json" for i in range(2)]
    for p in paths:
        main(["certify", "--input", str(GROUPS / "gl1_two_exp.json"), "--point", "1", "--out", str(p)])
    assert paths[0].read_bytes() == paths[1].read_bytes()


def test_sample_subgroup(tmp_path, capsys):
    csv = tmp_path / "pts.csv"
    code, out = run(capsys, "sample", "--input", str(CORPUS / "one_sqrt2.json"), "--box", "1000",
                    "--window", "0.5", "--center", "0.5", "--grid", "0.001", "--csv", str(csv))
    assert code == 0
    assert json.loads(out.out)["dispersion"] < 0.01
    lines = csv.read_text().splitlines()
    assert lines[0] == "x0" and len(lines) > 1000
    float(lines[1])


def test_sample_orbit_low_occupancy(capsys):
    code, out = run(capsys, "sample", "--input", str(GROUPS / "scalar_two.json"), "--point", "1", "--box", "20")
    assert code == 0 and json.loads(out.out)["occupancy"] < 0.1


def test_run_config():
    with pytest.raises(ValidationError):
        RunConfig(residual_tol=0)
    with pytest.raises(ValidationError):
        RunConfig(height_bound=0)
    assert RunConfig().seed == 0


def test_parse_point():
    assert list(parse_point("1, 2+1j")) == [1, 2 + 1j]
    with pytest.raises(ParseError):
        parse_point("1,abc")
