"""Exit codes, output files and flag handling of the command line."""

import json

import numpy as np
import pytest

import ddreg
from ddreg.cli import main
from ddreg.examples import REFERENCE, fixture_text
from ddreg.fileio import load_problem, load_regulator, save_regulator


@pytest.fixture()
def scalar_path(tmp_path):
    path = tmp_path / "scalar_problem.json"
    path.write_text(fixture_text("scalar"))
    return path


@pytest.fixture()
def planar_path(tmp_path):
    path = tmp_path / "planar_problem.json"
    path.write_text(fixture_text("planar"))
    return path


def test_check_informative_exits_zero(scalar_path, capsys):
    assert main(["check", str(scalar_path)]) == 0
    out = capsys.readouterr().out
    assert "informative for regulator design via condition2" in out
    assert "rank(X2_minus): 1 of 1" in out


def test_check_not_informative_exits_two(scalar_path, capsys):
    assert main(["check", str(scalar_path), "--unknown-a3"]) == 2
    out = capsys.readouterr().out
    assert "not informative for regulator design" in out


def test_usage_errors_exit_one(capsys):
    assert main(["check"]) == 1
    assert main(["frobnicate"]) == 1
    capsys.readouterr()


def test_missing_problem_file_exits_one(tmp_path, capsys):
    assert main(["check", str(tmp_path / "absent.json")]) == 1
    assert "error:" in capsys.readouterr().err


def test_version_flag(capsys):
    assert main(["--version"]) == 0
    assert f"ddreg {ddreg.__version__}" in capsys.readouterr().out


def test_seed_env_fallback(scalar_path, capsys, monkeypatch):
    monkeypatch.setenv("DDREG_SEED", "7")
    assert main(["check", str(scalar_path)]) == 0
    assert "seed: 7" in capsys.readouterr().out
    monkeypatch.setenv("DDREG_SEED", "seven")
    assert main(["check", str(scalar_path)]) == 1


def test_synth_writes_regulator_file(planar_path, tmp_path, capsys):
    out_path = tmp_path / "regulator.json"
    assert main(["synth", str(planar_path), "-o", str(out_path)]) == 0
    out = capsys.readouterr().out
    assert "closed-loop spectral radius" in out
    doc = load_regulator(out_path)
    assert np.allclose(doc.regulator.K2, REFERENCE["planar"]["K2"], atol=1e-12)
    assert doc.problem_sha256 == load_problem(planar_path).sha256


def test_synth_not_informative_writes_nothing(scalar_path, tmp_path, capsys):
    out_path = tmp_path / "regulator.json"
    code = main(
        ["synth", str(scalar_path), "--unknown-a3", "-o", str(out_path)]
    )
    assert code == 2
    assert not out_path.exists()
    capsys.readouterr()


def test_simulate_end_to_end(planar_path, tmp_path, capsys):
    reg_path = tmp_path / "regulator.json"
    csv_path = tmp_path / "trajectories.csv"
    assert main(["synth", str(planar_path), "-o", str(reg_path)]) == 0
    code = main(
        [
            "simulate",
            str(planar_path),
            str(reg_path),
            "--out",
            str(csv_path),
            "--members",
            "3",
        ]
    )
    assert code == 0
    out = capsys.readouterr().out
    assert "member 0:" in out
    assert "decay=PASS" in out
    lines = csv_path.read_text().strip().split("\n")
    assert lines[0].startswith("t,x1_1")
    assert lines[0].endswith("member_id")


def test_simulate_warns_on_problem_hash_mismatch(planar_path, tmp_path, capsys):
    reg_path = tmp_path / "regulator.json"
    assert main(["synth", str(planar_path), "-o", str(reg_path)]) == 0
    planar_path.write_text(planar_path.read_text() + "\n")
    code = main(
        [
            "simulate",
            str(planar_path),
            str(reg_path),
            "--out",
            str(tmp_path / "t.csv"),
        ]
    )
    assert code == 0
    assert "hash mismatch" in capsys.readouterr().err


def test_simulate_flags_destabilizing_regulator(planar_path, tmp_path, capsys):
    problem = load_problem(planar_path).problem
    bad = ddreg.Regulator(
        K1=np.zeros((problem.m, problem.n1)),
        K2=np.zeros((problem.m, problem.n2)),
        provenance="condition1",
    )
    reg_path = tmp_path / "bad_regulator.json"
    save_regulator(reg_path, bad, problem_sha256=load_problem(planar_path).sha256)
    code = main(
        [
            "simulate",
            str(planar_path),
            str(reg_path),
            "--out",
            str(tmp_path / "t.csv"),
            "--horizon",
            "30",
        ]
    )
    assert code == 2
    assert "decay=FAIL" in capsys.readouterr().out


def test_example_commands_run_end_to_end(tmp_path, capsys):
    for name in ("scalar", "planar"):
        outdir = tmp_path / name
        assert main(["example", name, "--outdir", str(outdir)]) == 0
        out = capsys.readouterr().out
        assert "verification over" in out
        assert "PASS" in out
        assert (outdir / f"{name}_problem.json").exists()
        assert (outdir / f"{name}_regulator.json").exists()
        assert (outdir / f"{name}_trajectories.csv").exists()


def test_gen_data_reproduces_the_bundled_fixture(scalar_path, tmp_path, capsys):
    problem = load_problem(scalar_path).problem
    known = problem.known
    system_doc = {
        "A1": known.A1.tolist(),
        "A2": REFERENCE["scalar"]["true_A2"].tolist(),
        "B2": REFERENCE["scalar"]["true_B2"].tolist(),
        "A3": known.A3.tolist(),
        "D1": known.D1.tolist(),
        "D2": known.D2.tolist(),
        "E": known.E.tolist(),
    }
    system_path = tmp_path / "system.json"
    system_path.write_text(json.dumps(system_doc))
    out_path = tmp_path / "generated_problem.json"
    code = main(
        [
            "gen-data",
            str(system_path),
            "-o",
            str(out_path),
            "--inputs",
            "1,0,0",
            "--x1-0",
            "1,0,0.5",
            "--x2-0",
            "0",
        ]
    )
    assert code == 0
    capsys.readouterr()
    generated = load_problem(out_path).problem
    assert np.allclose(generated.data.X2, problem.data.X2, atol=1e-12)
    assert np.allclose(generated.data.X1_minus, problem.data.X1_minus, atol=1e-12)
    assert main(["check", str(out_path)]) == 0
    capsys.readouterr()


def test_gen_data_requires_tau_or_inputs(tmp_path, capsys):
    system_path = tmp_path / "system.json"
    known = load_problem_from_fixture().known
    system_doc = {
        "A1": known.A1.tolist(),
        "A2": [[1.0]],
        "B2": [[1.0]],
        "A3": known.A3.tolist(),
        "D1": known.D1.tolist(),
        "D2": known.D2.tolist(),
        "E": known.E.tolist(),
    }
    system_path.write_text(json.dumps(system_doc))
    code = main(["gen-data", str(system_path), "-o", str(tmp_path / "p.json")])
    assert code == 1
    assert "either --inputs or --tau" in capsys.readouterr().err


def load_problem_from_fixture():
    from ddreg.fileio import parse_problem

    return parse_problem(fixture_text("scalar")).problem


def test_gen_data_random_inputs_are_seeded(tmp_path, capsys):
    known = load_problem_from_fixture().known
    system_doc = {
        "A1": known.A1.tolist(),
        "A2": [[1.0]],
        "B2": [[1.0]],
        "A3": known.A3.tolist(),
        "D1": known.D1.tolist(),
        "D2": known.D2.tolist(),
        "E": known.E.tolist(),
    }
    system_path = tmp_path / "system.json"
    system_path.write_text(json.dumps(system_doc))
    a_path, b_path = tmp_path / "a.json", tmp_path / "b.json"
    for out in (a_path, b_path):
        code = main(
            [
                "gen-data",
                str(system_path),
                "-o",
                str(out),
                "--tau",
                "4",
                "--seed",
                "11",
            ]
        )
        assert code == 0
    capsys.readouterr()
    assert a_path.read_text() == b_path.read_text()
