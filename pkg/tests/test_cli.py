import json

import pandas as pd
import pytest

from bioshadow.cli.base import EXIT_INPUT_ERROR
from bioshadow.cli.base import EXIT_MISMATCH
from bioshadow.cli.base import EXIT_OK
from bioshadow.cli.base import EXIT_UNREACHABLE
from bioshadow.cli.main import main
from bioshadow.scenario import save_scenario
from conftest import ARABLE
from conftest import FOREST
from conftest import build_scenario
from conftest import species
from conftest import technology


@pytest.fixture
def two_cell_dir(tmp_path, two_cell_scenario):
    return save_scenario(two_cell_scenario, tmp_path / "two_cell")


@pytest.fixture
def blocked_dir(tmp_path):
    scenario = build_scenario(
        current=[[ARABLE, ARABLE]],
        potential=[[FOREST, FOREST]],
        species_list=[species("sp1", [FOREST], [0, 1])],
        technologies=[technology("arable_to_forest", [ARABLE], FOREST)],
        costs={"cost_arable_to_forest": [[10.0, -9999.0]]},
    )
    return save_scenario(scenario, tmp_path / "blocked")


@pytest.fixture
def footprint_file(tmp_path):
    path = tmp_path / "footprint.json"
    path.write_text(json.dumps({"label": "quarry", "changes": [{"cell_id": 0, "forced_class": ARABLE}]}))
    return path


def run(*argv):
    return main([str(a) for a in argv])


def test_gen_synthetic_is_deterministic(tmp_path):
    for name in ("a", "b"):
        assert run("gen-synthetic", "--seed", 9, "--rows", 6, "--cols", 5, "--out", tmp_path / name) == EXIT_OK
    files = sorted(p.relative_to(tmp_path / "a") for p in (tmp_path / "a").rglob("*") if p.is_file())
    assert files
    for rel in files:
        assert (tmp_path / "a" / rel).read_bytes() == (tmp_path / "b" / rel).read_bytes()


def test_validate(scenario_dir, capsys):
    assert run("validate", "--scenario", scenario_dir) == EXIT_OK
    assert "0 error(s)" in capsys.readouterr().out


def test_validate_json(scenario_dir, capsys):
    assert run("validate", "--scenario", scenario_dir, "--json") == EXIT_OK
    report = json.loads(capsys.readouterr().out)
    assert report["ok"] is True
    assert report["errors"] == []


def test_validate_json_parse_error(scenario_dir, capsys):
    (scenario_dir / "manifest.json").write_text("{")
    assert run("validate", "--scenario", scenario_dir, "--json") == EXIT_INPUT_ERROR
    report = json.loads(capsys.readouterr().out)
    assert report["ok"] is False
    assert report["errors"][0]["file"] == "manifest.json"


def test_validate_without_retained_species(tmp_path, capsys):
    scenario = build_scenario(
        current=[[ARABLE, ARABLE]],
        potential=[[FOREST, FOREST]],
        species_list=[species("farm", [ARABLE], [0, 1])],
        technologies=[technology("arable_to_forest", [ARABLE], FOREST)],
        costs={"cost_arable_to_forest": [[10.0, 20.0]]},
    )
    path = save_scenario(scenario, tmp_path / "no_species")
    assert run("validate", "--scenario", path, "--json") == EXIT_INPUT_ERROR
    report = json.loads(capsys.readouterr().out)
    assert [e["code"] for e in report["errors"]] == ["no-species"]
    assert report["excluded_species"] == ["farm"]
    assert run("build-curve", "--scenario", path, "--out", tmp_path / "out") == EXIT_INPUT_ERROR


def test_missing_scenario(tmp_path, capsys):
    assert run("build-curve", "--scenario", tmp_path / "nope", "--out", tmp_path / "out") == EXIT_INPUT_ERROR
    assert "bioshadow build-curve: error:" in capsys.readouterr().err


def test_target_out_of_range(two_cell_dir):
    assert run("shadow-price", "--scenario", two_cell_dir, "--target", 1.5) == EXIT_INPUT_ERROR


def test_build_curve_outputs(two_cell_dir, tmp_path):
    out = tmp_path / "out"
    assert run("build-curve", "--scenario", two_cell_dir, "--out", out) == EXIT_OK
    curve = pd.read_csv(out / "curve.csv")
    assert curve["cell_id"].tolist() == [0, 1]
    assert curve["mbrc"].tolist() == pytest.approx([10 / 0.5 ** 0.25, 20 / (1 - 0.5 ** 0.25)], rel=1e-12)
    assert pd.read_csv(out / "map.csv")["rank"].tolist() == [1, 2]
    summary = json.loads((out / "summary.json").read_text())
    assert summary["step_count"] == 2
    assert summary["total_cost"] == 30.0
    assert summary["baseline_index"] == 0.0
    assert summary["mode"] == "lazy"


@pytest.mark.parametrize("mode", ["exact", "lazy"])
def test_outputs_independent_of_threads(scenario_dir, tmp_path, mode):
    outputs = []
    for threads in (1, 4, 8):
        out = tmp_path / f"{mode}_{threads}"
        args = ["build-curve", "--scenario", scenario_dir, "--mode", mode, "--threads", threads, "--out", out]
        assert run(*args) == EXIT_OK
        outputs.append({name: (out / name).read_bytes() for name in ("curve.csv", "map.csv", "summary.json")})
    assert outputs[0] == outputs[1] == outputs[2]


def test_shadow_price(two_cell_dir, tmp_path, capsys):
    out = tmp_path / "out"
    assert run("shadow-price", "--scenario", two_cell_dir, "--target", 0.9, "--out", out) == EXIT_OK
    quote = json.loads(capsys.readouterr().out)
    assert quote["price_per_unit_index"] == pytest.approx(125.70, abs=1e-2)
    assert quote["marginal_step"] == 2
    assert json.loads((out / "quote.json").read_text()) == quote


def test_shadow_price_unreachable(blocked_dir, capsys):
    assert run("shadow-price", "--scenario", blocked_dir, "--target", 0.95) == EXIT_UNREACHABLE
    assert "cannot be reached" in capsys.readouterr().err


def test_price_project(two_cell_dir, footprint_file, capsys):
    args = ["price-project", "--scenario", two_cell_dir, "--target", 0.5, "--footprint", footprint_file]
    assert run(*args) == EXIT_OK
    appraisal = json.loads(capsys.readouterr().out)
    assert appraisal["label"] == "quarry"
    assert appraisal["total_cost"] == pytest.approx(10.0, rel=1e-12)


def test_price_project_with_foreign_quote(two_cell_dir, footprint_file, tmp_path):
    quote_dir = tmp_path / "quote"
    assert run("shadow-price", "--scenario", two_cell_dir, "--target", 0.5, "--z", 0.35, "--out", quote_dir) == EXIT_OK
    args = [
        "price-project", "--scenario", two_cell_dir, "--target", 0.5,
        "--footprint", footprint_file, "--quote", quote_dir / "quote.json",
    ]
    assert run(*args) == EXIT_MISMATCH


def test_sweep_z(two_cell_dir, tmp_path):
    out = tmp_path / "out"
    assert run("sweep-z", "--scenario", two_cell_dir, "--target", 0.5, "--out", out) == EXIT_OK
    sweep = pd.read_csv(out / "sweep.csv")
    assert sweep["label"].tolist() == ["low", "central", "high"]
    assert sweep["z"].tolist() == [0.15, 0.25, 0.35]
    assert not sweep["unreachable"].any()


def test_sweep_z_unreachable(blocked_dir, tmp_path):
    out = tmp_path / "out"
    assert run("sweep-z", "--scenario", blocked_dir, "--target", 0.99, "--out", out) == EXIT_UNREACHABLE
    assert pd.read_csv(out / "sweep.csv")["unreachable"].all()


def test_tech_curves(scenario_dir, synthetic_scenario, tmp_path):
    out = tmp_path / "out"
    assert run("tech-curves", "--scenario", scenario_dir, "--out", out) == EXIT_OK
    for tech in synthetic_scenario.technologies:
        assert (out / f"curve_{tech.technology_id}.csv").is_file()
    assert (out / "curve_combined.csv").is_file()


def test_price_table(two_cell_dir, footprint_file, tmp_path):
    out = tmp_path / "out"
    args = ["price-table", "--scenario", two_cell_dir, "--targets", 0.5, 0.95, "--footprint", footprint_file]
    assert run(*args, "--out", out) == EXIT_OK
    table = pd.read_csv(out / "price_table.csv")
    assert len(table) == 6
    assert table["z_label"].tolist() == ["low", "low", "central", "central", "high", "high"]
