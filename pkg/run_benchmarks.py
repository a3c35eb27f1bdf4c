"""
Benchmark Sweep: filter accuracy over several seeds

Runs each shipped benchmark configuration over a list of filter seeds and
reports the spread of RMSE and MAE, parameter re-estimation counts and
run times. With --compare-centered the same sweep is repeated with priors
centred at the true parameters as a reference.
"""

import argparse
import logging
from pathlib import Path
from typing import Dict, List, Optional

from config.run_config import RunConfig, load_run_config
from core.commands import print_section
from core.model_spec import load_model
from core.seed_sweep import SeedSweep

DEFAULT_CONFIGS = ["models/lv_run.json", "models/stc_run.json", "models/pif45_run.json"]
DEFAULT_SEEDS = [1, 2, 3, 4, 5]


def print_stats(label: str, stats: dict):
    """Pretty-print sweep statistics."""
    print(f"\n{label}:")
    print(f"  Median RMSE:             {stats['median_rmse']:>12.5g}")
    print(f"  Mean RMSE:               {stats['mean_rmse']:>12.5g}")
    print(f"  P5 / P95 RMSE:           {stats['p5_rmse']:>12.5g} / {stats['p95_rmse']:.5g}")
    print(f"\n  Median MAE:              {stats['median_mae']:>12.5g}")
    print(f"  Mean MAE:                {stats['mean_mae']:>12.5g}")
    print(f"  P5 / P95 MAE:            {stats['p5_mae']:>12.5g} / {stats['p95_mae']:.5g}")
    print(f"\n  Median Wall Time (s):    {stats['median_wall_time']:>12.2f}")
    print(f"  Max Wall Time (s):       {stats['max_wall_time']:>12.2f}")


def scored_variable(cfg: RunConfig, requested: Optional[str]) -> str:
    if requested:
        return requested
    if cfg.evidence is not None and cfg.evidence.schedule is not None and cfg.evidence.schedule.variables:
        return cfg.evidence.schedule.variables[0]
    return load_model(cfg.model_path).variable_names[0]


def sweep_config(path: Path, seeds: List[int], variable: Optional[str],
                 compare_centered: bool, output_dir: Path) -> Dict[str, float]:
    cfg = load_run_config(path)
    var = scored_variable(cfg, variable)
    name = path.stem

    print_section(f"BENCHMARK: {name}")
    print(f"\n  Model:            {cfg.model_path}")
    print(f"  Variable:         {var}")
    print(f"  Particles:        {cfg.filter.n_particles}")
    print(f"  Seeds:            {', '.join(str(s) for s in seeds)}")

    results = SeedSweep(cfg, var).run(seeds)
    stats = SeedSweep.summary_stats(results)
    print_stats("Priors from the model", stats)
    n_params = int(results['n_params'].iloc[0])
    if n_params:
        print("\n  Parameters closer to truth than prior (per seed):")
        for row in results.itertuples():
            print(f"    seed {row.seed:<6} {row.params_improved}/{n_params}")

    output_dir.mkdir(parents=True, exist_ok=True)
    results.to_csv(output_dir / f"sweep_{name}.csv", index=False)

    summary_lines = [f"BENCHMARK SWEEP: {name}", "=" * 70, ""]
    summary_lines += [f"  {key}: {val:.6g}" for key, val in stats.items()]

    if compare_centered:
        centered = SeedSweep(cfg.centered_at_truth(), var).run(seeds)
        centered_stats = SeedSweep.summary_stats(centered)
        print_stats("Priors centred at truth", centered_stats)
        ratio = stats['median_rmse'] / centered_stats['median_rmse'] if centered_stats['median_rmse'] > 0 else float('inf')
        print(f"\n  RMSE ratio (model priors / centred priors): {ratio:.3f}")
        centered.to_csv(output_dir / f"sweep_{name}_centered.csv", index=False)
        summary_lines += ["", "PRIORS CENTRED AT TRUTH:", "-" * 70]
        summary_lines += [f"  {key}: {val:.6g}" for key, val in centered_stats.items()]
        summary_lines.append(f"  rmse_ratio: {ratio:.6g}")

    (output_dir / f"sweep_{name}.txt").write_text("\n".join(summary_lines) + "\n", encoding="utf-8")
    return stats


def main():
    """
    Multi-seed sweep over the shipped benchmarks.
    """
    parser = argparse.ArgumentParser(description="Multi-seed accuracy sweep of benchmark configs")
    parser.add_argument("--config", action="append", default=None,
                        help="Run configuration (repeatable; defaults to the shipped three)")
    parser.add_argument("--seeds", type=int, nargs="+", default=DEFAULT_SEEDS)
    parser.add_argument("--var", default=None, help="Variable to score (default: first evidence variable)")
    parser.add_argument("--compare-centered", action="store_true",
                        help="Repeat each sweep with priors centred at the true parameters")
    parser.add_argument("--output-dir", default="outputs/benchmarks")
    args = parser.parse_args()
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")

    configs = args.config or DEFAULT_CONFIGS
    output_dir = Path(args.output_dir)
    for config in configs:
        sweep_config(Path(config), args.seeds, args.var, args.compare_centered, output_dir)

    print_section("SWEEP COMPLETE")
    print(f"\n  Results in {output_dir}\n")


if __name__ == "__main__":
    main()
