import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any
from typing import List
from typing import Optional
from typing import Sequence

import pandas as pd
from pydantic import BaseModel
from pydantic import Field
from pydantic import PositiveInt
from pydantic import validator

from bioshadow.cba import load_footprint
from bioshadow.cba import price_project
from bioshadow.cba import project_delta_index
from bioshadow.cli.base import EXIT_INPUT_ERROR
from bioshadow.cli.base import EXIT_OK
from bioshadow.cli.base import EXIT_UNREACHABLE
from bioshadow.cli.base import CommandLineBase
from bioshadow.cli.base import is_arguments_for
from bioshadow.cli.base import is_command_for
from bioshadow.core import ShadowPricer
from bioshadow.curve import ShadowPriceQuote
from bioshadow.curve import build_curve
from bioshadow.curve import write_curve_csv
from bioshadow.exceptions import ScenarioError
from bioshadow.json import bioshadow_encoder
from bioshadow.prioritizer.main import PrioritizerMode
from bioshadow.scenario.io import load_scenario
from bioshadow.scenario.io import save_scenario
from bioshadow.scenario.model import Scenario
from bioshadow.scenario.synthetic import SyntheticParams
from bioshadow.scenario.synthetic import gen_synthetic
from bioshadow.scenario.validation import validate


__all__ = ["RunConfig", "DefaultCommandLine", "main"]


log = logging.getLogger(__name__)


MAP_COLUMNS = ["cell_id", "rank", "technology_id", "cost", "marginal_benefit", "cost_effectiveness"]


class RunConfig(BaseModel):
    scenario_path: Optional[Path] = None
    z_override: Optional[float] = Field(None, gt=0, lt=1)
    mode: PrioritizerMode = PrioritizerMode.LAZY
    target: Optional[float] = Field(None, gt=0, le=1)
    output_dir: Path = Path(".")
    threads: PositiveInt = 1
    seed: Optional[int] = None
    as_json: bool = False
    footprint_path: Optional[Path] = None
    quote_path: Optional[Path] = None
    targets: List[float] = []

    class Config:
        allow_mutation = False

    @validator("targets", each_item=True)
    def targets_in_range(cls, v):
        if not 0 < v <= 1:
            raise ValueError(f"target must lie in (0, 1], got {v}")
        return v

    @classmethod
    def from_args(cls, args: argparse.Namespace) -> "RunConfig":
        return cls(
            scenario_path=getattr(args, "scenario", None),
            z_override=getattr(args, "z", None),
            mode=getattr(args, "mode", PrioritizerMode.LAZY),
            target=getattr(args, "target", None),
            output_dir=getattr(args, "out", None) or Path("."),
            threads=getattr(args, "threads", 1),
            seed=getattr(args, "seed", None),
            as_json=getattr(args, "json", False),
            footprint_path=getattr(args, "footprint", None),
            quote_path=getattr(args, "quote", None),
            targets=getattr(args, "targets", None) or [],
        )


def _dump_json(obj: Any) -> str:
    return json.dumps(obj, default=bioshadow_encoder, indent=2, sort_keys=False)


def _write_json(obj: Any, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(_dump_json(obj) + "\n")
    return path


def _write_csv(df: pd.DataFrame, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    df.to_csv(path, index=False, lineterminator="\n")
    return path


class DefaultCommandLine(CommandLineBase):
    description = "Target-compatible biodiversity shadow prices from restoration cost curves."

    # ==========================================================================
    # Shared arguments
    # ==========================================================================

    @is_arguments_for(
        "build-curve", "shadow-price", "price-project", "sweep-z", "validate", "tech-curves", "price-table",
    )
    def _scenario_arguments(self, parser: argparse.ArgumentParser):
        parser.add_argument("--scenario", type=Path, required=True, help="Scenario package directory.")

    @is_arguments_for("build-curve", "shadow-price", "price-project", "sweep-z", "tech-curves", "price-table")
    def _prioritizer_arguments(self, parser: argparse.ArgumentParser):
        parser.add_argument("--mode", type=PrioritizerMode, choices=list(PrioritizerMode), default=PrioritizerMode.LAZY)
        parser.add_argument("--threads", type=int, default=1, help="Worker threads; never changes any output.")

    @is_arguments_for("build-curve", "shadow-price", "price-project", "tech-curves")
    def _z_arguments(self, parser: argparse.ArgumentParser):
        parser.add_argument("--z", type=float, default=None, help="Override the manifest's central z for this run.")

    @is_arguments_for("shadow-price", "price-project", "sweep-z")
    def _target_arguments(self, parser: argparse.ArgumentParser):
        parser.add_argument("--target", type=float, required=True, help="Target biodiversity index in (0, 1].")

    @is_arguments_for("build-curve")
    def _optional_target_arguments(self, parser: argparse.ArgumentParser):
        parser.add_argument("--target", type=float, default=None, help="Stop the sequence at this index.")

    @is_arguments_for(
        "build-curve", "shadow-price", "price-project", "sweep-z", "gen-synthetic", "tech-curves", "price-table",
    )
    def _output_arguments(self, parser: argparse.ArgumentParser):
        parser.add_argument("--out", type=Path, default=None, help="Output directory.")

    @is_arguments_for("price-project", "price-table")
    def _footprint_arguments(self, parser: argparse.ArgumentParser):
        parser.add_argument("--footprint", type=Path, required=True, help="Project footprint JSON file.")

    # ==========================================================================
    # Helpers
    # ==========================================================================

    def load(self, config: RunConfig) -> Scenario:
        return load_scenario(config.scenario_path)

    def pricer(self, config: RunConfig, scenario: Scenario) -> ShadowPricer:
        return ShadowPricer(scenario, z=config.z_override, mode=config.mode, threads=config.threads)

    def emit(self, obj: Any, config: RunConfig, filename: str):
        print(_dump_json(obj))
        if filename:
            _write_json(obj, config.output_dir / filename)

    # ==========================================================================
    # Commands
    # ==========================================================================

    @is_command_for("build-curve", help="Build the MBRC curve and write curve.csv, summary.json and map.csv.")
    def cmd_build_curve(self, args: argparse.Namespace) -> int:
        config = RunConfig.from_args(args)
        scenario = self.load(config)
        pricer = self.pricer(config, scenario)
        sequence = pricer.sequence(target=config.target)
        curve = build_curve(sequence)
        if not sequence.steps:
            log.warning("The restoration sequence is empty; curve.csv has no steps")

        out = config.output_dir
        write_curve_csv(curve, out / "curve.csv")
        _write_csv(pd.DataFrame([
            {
                "cell_id": step.action.cell_id,
                "rank": rank,
                "technology_id": step.action.technology_id,
                "cost": step.action.cost,
                "marginal_benefit": step.marginal_benefit,
                "cost_effectiveness": step.cost_effectiveness,
            }
            for rank, step in enumerate(sequence.steps, start=1)
        ], columns=MAP_COLUMNS), out / "map.csv")
        summary = {
            "baseline_index": sequence.baseline_index,
            "final_index": sequence.final_index,
            "step_count": len(sequence.steps),
            "total_cost": sequence.total_cost,
            "z": sequence.z,
            "mode": config.mode.value,
            "n_species": sequence.n_species,
            "excluded_species": len(sequence.excluded_species),
            "baseline_extinction_risk": 1.0 - sequence.baseline_index,
            "n_candidates": sequence.n_candidates,
        }
        _write_json(summary, out / "summary.json")
        return EXIT_OK

    @is_command_for("shadow-price", help="Print the shadow price quote at --target.")
    def cmd_shadow_price(self, args: argparse.Namespace) -> int:
        config = RunConfig.from_args(args)
        quote = self.pricer(config, self.load(config)).shadow_price(config.target)
        self.emit(quote.export(), config, "quote.json" if args.out else "")
        return EXIT_OK

    @is_arguments_for("price-project")
    def _quote_arguments(self, parser: argparse.ArgumentParser):
        parser.add_argument("--quote", type=Path, default=None, help="Price with a previously exported quote JSON.")

    @is_command_for("price-project", help="Price a project footprint at the shadow price of --target.")
    def cmd_price_project(self, args: argparse.Namespace) -> int:
        config = RunConfig.from_args(args)
        scenario = self.load(config)
        pricer = self.pricer(config, scenario)
        footprint = load_footprint(config.footprint_path)
        if config.quote_path is None:
            appraisal = pricer.appraise(footprint, config.target)
        else:
            quote = self._read_quote(config.quote_path)
            sequence = pricer.sequence(target=config.target)
            impact = project_delta_index(
                scenario, footprint, pricer.z, "at_target", config.target, sequence, habitat=pricer.habitat,
            )
            appraisal = price_project(quote, impact)
        self.emit(appraisal.export(), config, "appraisal.json" if args.out else "")
        return EXIT_OK

    def _read_quote(self, path: Path) -> ShadowPriceQuote:
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as e:
            raise ScenarioError(f"{path}: cannot read quote: {e}")
        return ShadowPriceQuote.parse_obj(data)

    @is_command_for("sweep-z", help="Shadow price at --target for the manifest's low, central and high z.")
    def cmd_sweep_z(self, args: argparse.Namespace) -> int:
        config = RunConfig.from_args(args)
        entries = self.pricer(config, self.load(config)).sweep(config.target)
        frame = pd.DataFrame([e.export() for e in entries.values()])
        _write_csv(frame, config.output_dir / "sweep.csv")
        if all(e.unreachable for e in entries.values()):
            best = max(e.max_index for e in entries.values())
            print(
                f"{self.prog} sweep-z: error: target {config.target!r} is unreachable for every z;"
                f" the maximum achievable index is {best!r}",
                file=sys.stderr,
            )
            return EXIT_UNREACHABLE
        return EXIT_OK

    @is_arguments_for("gen-synthetic")
    def _synthetic_arguments(self, parser: argparse.ArgumentParser):
        defaults = SyntheticParams()
        parser.add_argument("--seed", type=int, default=0)
        parser.add_argument("--rows", type=int, default=defaults.rows)
        parser.add_argument("--cols", type=int, default=defaults.cols)
        parser.add_argument("--species", type=int, default=defaults.n_species)
        parser.add_argument("--technologies", type=int, default=defaults.n_technologies)
        parser.add_argument("--cost-distribution", default=defaults.cost_distribution,
                            choices=["lognormal", "uniform", "constant"])
        parser.add_argument("--range-density", type=float, default=defaults.range_density)
        parser.add_argument("--suitability-density", type=float, default=defaults.suitability_density)
        parser.add_argument("--loss-species-share", type=float, default=defaults.loss_species_share)
        parser.add_argument("--aggregation-factor", type=int, default=defaults.aggregation_factor)

    @is_command_for("gen-synthetic", help="Write a seeded synthetic scenario package to --out.")
    def cmd_gen_synthetic(self, args: argparse.Namespace) -> int:
        config = RunConfig.from_args(args)
        params = SyntheticParams(
            rows=args.rows,
            cols=args.cols,
            n_species=args.species,
            n_technologies=args.technologies,
            cost_distribution=args.cost_distribution,
            range_density=args.range_density,
            suitability_density=args.suitability_density,
            loss_species_share=args.loss_species_share,
            aggregation_factor=args.aggregation_factor,
        )
        save_scenario(gen_synthetic(config.seed, params), config.output_dir)
        return EXIT_OK

    @is_arguments_for("validate")
    def _validate_arguments(self, parser: argparse.ArgumentParser):
        parser.add_argument("--json", action="store_true", help="Print the report as JSON.")

    @is_command_for("validate", help="Validate a scenario package.")
    def cmd_validate(self, args: argparse.Namespace) -> int:
        config = RunConfig.from_args(args)
        try:
            report = validate(load_scenario(config.scenario_path, check=False))
        except ScenarioError as e:
            if not config.as_json:
                raise
            print(_dump_json({"ok": False, "errors": [{"code": "parse-error", "message": str(e),
                                                       "file": getattr(e, "file", None)}], "warnings": []}))
            return EXIT_INPUT_ERROR
        if config.as_json:
            print(_dump_json({
                "ok": report.ok,
                "errors": [i.dict() for i in report.errors],
                "warnings": [i.dict() for i in report.warnings],
                "excluded_species": report.excluded_species,
            }))
        else:
            print(report.render())
        return EXIT_OK if report.ok else EXIT_INPUT_ERROR

    @is_command_for("tech-curves", help="Write one curve per technology plus the combined curve.")
    def cmd_tech_curves(self, args: argparse.Namespace) -> int:
        config = RunConfig.from_args(args)
        pricer = self.pricer(config, self.load(config))
        for technology_id, curve in pricer.technology_curves().items():
            write_curve_csv(curve, config.output_dir / f"curve_{technology_id}.csv")
        write_curve_csv(pricer.curve(), config.output_dir / "curve_combined.csv")
        return EXIT_OK

    @is_arguments_for("price-table")
    def _price_table_arguments(self, parser: argparse.ArgumentParser):
        parser.add_argument("--targets", type=float, nargs="+", required=True, help="Target indices.")

    @is_command_for("price-table", help="Shadow price and project cost for every (z, target) pair.")
    def cmd_price_table(self, args: argparse.Namespace) -> int:
        config = RunConfig.from_args(args)
        pricer = self.pricer(config, self.load(config))
        rows = pricer.price_table(config.targets, load_footprint(config.footprint_path))
        frame = pd.DataFrame([r.dict() for r in rows])
        _write_csv(frame, config.output_dir / "price_table.csv")
        if rows and all(r.unreachable for r in rows):
            return EXIT_UNREACHABLE
        return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    return DefaultCommandLine().run(argv)
