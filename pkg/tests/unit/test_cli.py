"""Tests for the command-line interface."""

import hashlib
import json
from collections.abc import Callable
from fractions import Fraction
from pathlib import Path
from typing import Any

import pytest
from pytest_mock import MockerFixture

from k3_monodromy.cli import main, to_jsonable
from k3_monodromy.config import settings
from k3_monodromy.errors import PathFailureError
from k3_monodromy.local_rings import UNBOUNDED

PermsFile = Callable[[list[list[int]]], str]


def run(capsys: pytest.CaptureFixture[str], *argv: str) -> tuple[int, Any, Any]:
    """Run the CLI and return (exit code, parsed stdout, manifest from stderr)."""
    code = main(list(argv))
    out, err = capsys.readouterr()
    if code != 0:
        return code, None, err
    manifest = json.loads(err.strip().splitlines()[-1])
    assert manifest["output_sha256"] == hashlib.sha256(out.encode("utf-8")).hexdigest()
    return code, json.loads(out), manifest


@pytest.fixture
def perms_file(tmp_path: Path) -> PermsFile:
    """Fixture writing a permutation list and returning its path factory."""

    def write(perms: list[list[int]]) -> str:
        path = tmp_path / "perms.json"
        path.write_text(json.dumps(perms), encoding="utf-8")
        return str(path)

    return write


def test_yz(capsys: pytest.CaptureFixture[str]) -> None:
    """Test yz --gmax 4 prints the first five counts."""
    code, data, manifest = run(capsys, "yz", "--gmax", "4")
    assert code == 0
    assert data == [1, 24, 324, 3200, 25650]
    assert manifest["subcommand"] == "yz"
    assert manifest["seed"] == 0


def test_yz_large_counts_are_strings(capsys: pytest.CaptureFixture[str]) -> None:
    """Test coefficients beyond 2^53 are written as decimal strings."""
    _, data, _ = run(capsys, "yz", "--gmax", "40")
    assert all(isinstance(v, int) for v in data[:5])
    assert isinstance(data[-1], str) and int(data[-1]) > 2**53


def test_eps(capsys: pytest.CaptureFixture[str]) -> None:
    """Test eps --p 2 --q 3 prints 2."""
    code, data, _ = run(capsys, "eps", "--p", "2", "--q", "3")
    assert code == 0
    assert data == 2


def test_eps_not_coprime(capsys: pytest.CaptureFixture[str]) -> None:
    """Test non-coprime exponents are a domain failure."""
    code, _, err = run(capsys, "eps", "--p", "2", "--q", "4")
    assert code == 1
    assert "coprime" in err


def test_colength(capsys: pytest.CaptureFixture[str]) -> None:
    """Test colength of (x + y, xy) is 2."""
    _, data, _ = run(capsys, "localring", "colength", "--ideal", "x + y, x*y")
    assert data["colength"] == 2


def test_colength_unbounded(capsys: pytest.CaptureFixture[str]) -> None:
    """Test a principal ideal has unbounded colength."""
    _, data, _ = run(capsys, "localring", "colength", "--ideal", "x*y")
    assert data["colength"] == "unbounded"


def test_milnor_cusp(capsys: pytest.CaptureFixture[str]) -> None:
    """Test y^2 - x^3 has Milnor number 2."""
    _, data, manifest = run(capsys, "localring", "milnor", "--f", "y^2 - x^3")
    assert data == {"f": "y^2 - x^3", "milnor": 2, "type": "cusp"}
    assert manifest["subcommand"] == "localring milnor"


def test_embed_cusp(capsys: pytest.CaptureFixture[str]) -> None:
    """Test a cusp in a length-3 scheme gives a one-dimensional family."""
    _, data, _ = run(capsys, "localring", "embed", "--sing", "cusp", "--n", "3")
    assert data["embedding"] == {"dim": 1}


def test_identity_not_transitive(capsys: pytest.CaptureFixture[str], perms_file: PermsFile) -> None:
    """Test identity generators on three points are not transitive."""
    code, data, _ = run(capsys, "group", "analyze", "--perms", perms_file([[0, 1, 2], [0, 1, 2]]))
    assert code == 0
    assert not data["transitive"]
    assert not data["certified_symmetric"]


def test_s3(capsys: pytest.CaptureFixture[str], perms_file: PermsFile) -> None:
    """Test a transposition and a 3-cycle certify S_3."""
    _, data, _ = run(capsys, "group", "analyze", "--perms", perms_file([[1, 0, 2], [1, 2, 0]]))
    assert data["certified_symmetric"]
    assert data["order"] == 6


def test_not_a_permutation(capsys: pytest.CaptureFixture[str], perms_file: PermsFile) -> None:
    """Test a repeated image is a usage error."""
    code, _, _ = run(capsys, "group", "analyze", "--perms", perms_file([[0, 0, 1]]))
    assert code == 2


def test_bad_json(capsys: pytest.CaptureFixture[str], tmp_path: Path) -> None:
    """Test an unreadable permutation file is a usage error."""
    path = tmp_path / "broken.json"
    path.write_text("[[0, 1", encoding="utf-8")
    code, _, err = run(capsys, "group", "analyze", "--perms", str(path))
    assert code == 2
    assert "not valid JSON" in err


def test_four_solutions(capsys: pytest.CaptureFixture[str], tmp_path: Path) -> None:
    """Test {x^2 - 1, y^2 - 1} from a JSON system file."""
    path = tmp_path / "system.json"
    path.write_text(json.dumps({"variables": ["x", "y"], "equations": ["x^2 - 1", "y^2 - 1"]}))
    _, data, _ = run(capsys, "solve", "--system", str(path), "--seed", "3")
    assert data["count"] == 4
    assert all(s["status"] == "success" for s in data["solutions"])


def test_missing_equations(capsys: pytest.CaptureFixture[str], tmp_path: Path) -> None:
    """Test a system file without equations."""
    path = tmp_path / "system.json"
    path.write_text(json.dumps({"variables": ["x"]}))
    code, _, _ = run(capsys, "solve", "--system", str(path))
    assert code == 2


def test_path_failure(capsys: pytest.CaptureFixture[str], tmp_path: Path, mocker: MockerFixture) -> None:
    """Test too many failed paths exit with 1."""
    mocker.patch("k3_monodromy.cli.solve", side_effect=PathFailureError("2 of 2 paths failed", []))
    path = tmp_path / "system.json"
    path.write_text(json.dumps({"variables": ["x"], "equations": ["x^2 - 2"]}))
    code, _, err = run(capsys, "solve", "--system", str(path))
    assert code == 1
    assert "2 of 2 paths failed" in err


def test_unknown_flag(capsys: pytest.CaptureFixture[str]) -> None:
    """Test an unknown flag is a usage error."""
    code, _, err = run(capsys, "yz", "--gmax", "4", "--bogus")
    assert code == 2
    assert "usage" in err


def test_missing_subcommand(capsys: pytest.CaptureFixture[str]) -> None:
    """Test no subcommand is a usage error."""
    assert run(capsys)[0] == 2


def test_glue_needs_forms(capsys: pytest.CaptureFixture[str]) -> None:
    """Test glue without forms or --random."""
    assert run(capsys, "glue")[0] == 2


def test_glue_input_file(capsys: pytest.CaptureFixture[str], tmp_path: Path) -> None:
    """Test glue reads both quartics and a node of C from a JSON file."""
    path = tmp_path / "glue.json"
    path.write_text(
        json.dumps({"g": "y*z*t^2 + y^4 + z^4", "h": "x^4 + y^4 + z^4", "sing_c": [[0, 0, 1]]}), encoding="utf-8"
    )
    code, data, _ = run(capsys, "glue", "--input", str(path))
    assert code == 0
    assert data["a"] == "1"
    assert [entry["partial"] for entry in data["certificate"]] == ["f_x"]
    assert data["input"]["sing_c"] == [["0", "0", "1"]]


def test_glue_input_file_bad_point(capsys: pytest.CaptureFixture[str], tmp_path: Path) -> None:
    """Test a point without three coordinates is a usage error."""
    path = tmp_path / "glue.json"
    path.write_text(json.dumps({"g": "y^4 + z^4 + t^4", "h": "x^4 + y^4 + z^4", "sing_c": [[0, 1]]}))
    code, _, err = run(capsys, "glue", "--input", str(path))
    assert code == 2
    assert "3-element" in err


def test_unsupported_degree(capsys: pytest.CaptureFixture[str]) -> None:
    """Test certify rejects degrees outside 4..6."""
    assert run(capsys, "monodromy", "certify", "--degree", "7", "--loops", "1")[0] == 2


def test_certify_arguments(capsys: pytest.CaptureFixture[str], mocker: MockerFixture) -> None:
    """Test certify forwards degree, loops, seed and threads."""
    certify = mocker.patch("k3_monodromy.cli.certify_cover", return_value={"degree": 6})
    _, data, manifest = run(
        capsys, "monodromy", "certify", "--degree", "6", "--loops", "12", "--seed", "7", "--threads", "2"
    )
    certify.assert_called_once_with(6, 12, 7, mocker.ANY, 2, hunt=None)
    assert data == {"degree": 6}
    assert manifest["seed"] == 7


def test_out_and_manifest(capsys: pytest.CaptureFixture[str], tmp_path: Path) -> None:
    """Test --out writes the output and a manifest whose digest matches it."""
    out = tmp_path / "yz.json"
    assert main(["yz", "--gmax", "2", "--out", str(out)]) == 0
    assert capsys.readouterr().out == ""
    text = out.read_text(encoding="utf-8")
    manifest = json.loads((tmp_path / "yz.json.manifest.json").read_text(encoding="utf-8"))
    assert json.loads(text) == [1, 24, 324]
    assert manifest["output_sha256"] == hashlib.sha256(text.encode("utf-8")).hexdigest()
    assert manifest["argv"] == ["yz", "--gmax", "2", "--out", str(out)]


def test_same_seed_same_output(capsys: pytest.CaptureFixture[str]) -> None:
    """Test two runs with one seed print identical JSON."""
    first = run(capsys, "incidence", "rank", "--configs", "3", "--seed", "5")
    second = run(capsys, "incidence", "rank", "--configs", "3", "--seed", "5")
    assert first[1] == second[1] == {"configs": 3, "full_rank": 3, "vandermonde_rank_3": 3}
    assert first[2]["output_sha256"] == second[2]["output_sha256"]


def test_settings_file(capsys: pytest.CaptureFixture[str], tmp_path: Path) -> None:
    """Test the seed comes from a settings file unless --seed overrides it."""
    path = tmp_path / "run.env"
    path.write_text("K3MONO_SEED=9\n", encoding="utf-8")
    assert run(capsys, "yz", "--gmax", "1", "--settings", str(path))[2]["seed"] == 9
    assert run(capsys, "yz", "--gmax", "1", "--settings", str(path), "--seed", "4")[2]["seed"] == 4


def test_settings_file_truncation(capsys: pytest.CaptureFixture[str], tmp_path: Path) -> None:
    """Test colength truncation limits from a settings file reach the computation."""
    path = tmp_path / "run.env"
    path.write_text("K3MONO_COLENGTH_INITIAL_TRUNC=3\nK3MONO_COLENGTH_TRUNC_CAP=3\n", encoding="utf-8")
    _, data, _ = run(capsys, "localring", "colength", "--ideal", "x^4, y^4", "--settings", str(path))
    assert data["colength"] == "unbounded"
    _, data, _ = run(capsys, "localring", "colength", "--ideal", "x^4, y^4")
    assert data["colength"] == 16


def test_missing_settings_file(capsys: pytest.CaptureFixture[str], tmp_path: Path) -> None:
    """Test a settings path that does not exist."""
    assert run(capsys, "yz", "--gmax", "1", "--settings", str(tmp_path / "nope.env"))[0] == 2


def test_settings_restored(capsys: pytest.CaptureFixture[str]) -> None:
    """Test command-line overrides do not leak into the process settings."""
    before = settings.seed
    run(capsys, "yz", "--gmax", "1", "--seed", str(before + 11))
    assert settings.seed == before


def test_to_jsonable_values() -> None:
    """Test rationals, complex numbers, big integers and sentinels."""
    assert to_jsonable(Fraction(1, 2)) == "1/2"
    assert to_jsonable(1 + 2j) == [1.0, 2.0]
    assert to_jsonable(2**60) == str(2**60)
    assert to_jsonable(2**53) == 2**53
    assert to_jsonable(float("inf")) == "inf"
    assert to_jsonable(UNBOUNDED) == "unbounded"
    assert to_jsonable({1: (True, None)}) == {"1": [True, None]}
