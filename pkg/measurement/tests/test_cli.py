import json
import os

import numpy as np
import pytest
import yaml

from conftest import data_path, mutated_preset, repeat
from run_experiment import EXIT_INVALID, EXIT_OK, EXIT_RUNTIME, main
from utils.exceptions import PipelineError
from utils.experiment_functions import PRESET_DIR, preset_text
from utils.pipeline_functions import stage

CNOT = os.path.join(PRESET_DIR, "cnot-readout.yaml")


def test_check_valid(capsys):
    assert main(["check", CNOT]) == EXIT_OK
    assert "Experiment spec is valid." in capsys.readouterr().err


def test_check_invalid(capsys):
    assert main(["check", data_path("ancilla_only.yaml")]) == EXIT_INVALID
    err = capsys.readouterr().err
    assert "Experiment spec is NOT valid:" in err
    assert "  - meter: meter violates Pointer Hypothesis" in err


def test_missing_file():
    assert main(["check", data_path("does_not_exist.yaml")]) == EXIT_INVALID


def test_run_writes_json(tmp_path):
    out = tmp_path / "report.json"
    assert main(["-q", "run", CNOT, "--runs", "300", "--seed", "4", "--out", str(out)]) == EXIT_OK
    report = json.loads(out.read_text())
    assert report["runs"] == 300
    assert report["seed"] == 4
    assert sum(report["counts"].values()) == 300


def test_run_writes_csv(tmp_path):
    out = tmp_path / "report.csv"
    assert main(["-q", "run", CNOT, "-n", "100", "-f", "csv", "-o", str(out)]) == EXIT_OK
    assert out.read_text().splitlines()[0].startswith("outcome,")


def test_run_invalid_document():
    assert main(["-q", "run", data_path("unknown_key.yaml")]) == EXIT_INVALID


def test_run_runtime_error(tmp_path):
    doc = yaml.safe_load(preset_text("cnot-readout"))
    doc["grid"] = {"d": 1, "n": 2, "spacing": 1.0}
    doc["object"]["packet"] = {"kind": "gaussian", "center": [0.0], "momentum_spread": [0.5]}
    doc["meter"][0]["shares_particle_types"] = ["electron"]
    # valid document, but the ensemble region holds no grid point
    doc["meter"][0]["ensemble"] = {"lower": [0.2], "upper": [0.4]}
    doc["coupling"]["dim"] = 8
    doc["coupling"]["rows"] = [[1.0 if i == j else 0.0 for j in range(8)] for i in range(8)]
    path = tmp_path / "runtime.yaml"
    path.write_text(yaml.safe_dump(doc, sort_keys=False))
    assert main(["check", str(path)]) == EXIT_OK
    assert main(["-q", "run", str(path), "-n", "10", "-o", str(tmp_path / "out.json")]) == EXIT_RUNTIME


def test_preset_list(capsys):
    assert main(["preset", "list"]) == EXIT_OK
    assert capsys.readouterr().out.split() == ["cnot-readout", "stern-gerlach-default"]


def test_preset_dump(tmp_path):
    out = tmp_path / "sg.yaml"
    assert main(["preset", "dump", "stern-gerlach-default", "--out", str(out)]) == EXIT_OK
    assert main(["check", str(out)]) == EXIT_OK


def test_preset_dump_unknown():
    assert main(["preset", "dump", "nope"]) == EXIT_INVALID
    assert main(["preset", "dump"]) == EXIT_INVALID


def test_exit_codes_are_distinct():
    assert len({EXIT_OK, EXIT_INVALID, EXIT_RUNTIME}) == 3


def test_non_utf8_document(tmp_path, capsys):
    path = tmp_path / "latin1.yaml"
    path.write_bytes(b"name: \xff\xfe\n")
    assert main(["check", str(path)]) == EXIT_INVALID
    assert "not UTF-8 text" in capsys.readouterr().err
    assert main(["-q", "run", str(path)]) == EXIT_INVALID


def test_directory_as_document(tmp_path):
    assert main(["check", str(tmp_path)]) == EXIT_INVALID
    assert main(["-q", "run", str(tmp_path)]) == EXIT_INVALID


def test_numerical_failure_names_the_stage():
    with pytest.raises(PipelineError, match=r"^\[evolve\] singular"):
        with stage("evolve"):
            raise np.linalg.LinAlgError("singular matrix")
    with pytest.raises(PipelineError, match=r"^\[sample\] MemoryError$"):
        with stage("sample"):
            raise MemoryError()


@repeat(40)
def test_check_exit_code_on_mutated_documents(seed, tmp_path):
    path = tmp_path / "mutated.yaml"
    content = mutated_preset(seed).encode("utf-8", "surrogatepass")
    if seed % 4 == 3:
        at = seed * 7 % (len(content) + 1)
        content = content[:at] + b"\xc3\x28\xff" + content[at:]
    path.write_bytes(content)
    assert main(["check", str(path)]) in (EXIT_OK, EXIT_INVALID)
