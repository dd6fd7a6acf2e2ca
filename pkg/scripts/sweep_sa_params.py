"""Grid sweep of self-assessment parameters on the disturbance scenario.

Prints, per setting, the disturbance summary and the lowest nominal
below-threshold fraction.  This is how the package defaults were chosen.

    python3 scripts/sweep_sa_params.py --runs 60 --alpha 0.8 0.9 --n-st 30 --accel-std 0.1 0.2
"""

from __future__ import annotations

import argparse
import itertools
from dataclasses import asdict, dataclass

import numpy as np

from sltrack.assessment import ASPECTS
from sltrack.harness import get_preset, run_monte_carlo
from sltrack.harness.evaluation import exceed, summarize_paper_run


@dataclass(frozen=True)
class Setting:
    alpha: float
    n_st: int
    p_td: float
    gate_prob: float
    nis_window: int
    accel_std: float


def evaluate(setting: Setting, runs: int) -> dict:
    sa = {k: v for k, v in asdict(setting).items() if k != "accel_std"}
    cfg = get_preset("paper_scenario").replace(accel_std=setting.accel_std).with_sa(**sa)
    summary = summarize_paper_run(run_monte_carlo(cfg, runs=runs).mean)
    nominal = run_monte_carlo(cfg.replace(disturbances=()), runs=runs).mean
    start = 2 * setting.n_st
    lowest = min(
        float(np.mean(~exceed(nominal, s, a)[start:])) for s in range(1, cfg.num_sensors + 1) for a in ASPECTS
    )
    return {"summary": summary, "nominal_lowest_below": lowest}


def main() -> None:
    d = Setting(0.8, 30, 0.9995, 0.999, 100, 0.2)
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--runs", type=int, default=40)
    ap.add_argument("--alpha", type=float, nargs="+", default=[d.alpha])
    ap.add_argument("--n-st", type=int, nargs="+", default=[d.n_st])
    ap.add_argument("--p-td", type=float, nargs="+", default=[d.p_td])
    ap.add_argument("--gate-prob", type=float, nargs="+", default=[d.gate_prob])
    ap.add_argument("--nis-window", type=int, nargs="+", default=[d.nis_window])
    ap.add_argument("--accel-std", type=float, nargs="+", default=[d.accel_std])
    args = ap.parse_args()
    grid = itertools.product(args.alpha, args.n_st, args.p_td, args.gate_prob, args.nis_window, args.accel_std)
    for values in grid:
        setting = Setting(*values)
        out = evaluate(setting, args.runs)
        print(setting)
        print("   ", out["summary"])
        print(f"    nominal lowest below-threshold fraction {out['nominal_lowest_below']:.3f}")


if __name__ == "__main__":
    main()
