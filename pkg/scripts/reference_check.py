"""Compare sampled nearest-neighbour outcomes with both reference weightings.

    python3 scripts/reference_check.py [--scans 100000] [--pd 0.9] [--clutter 4]
"""

from __future__ import annotations

import argparse

import numpy as np

from sltrack.assessment import Aspect, reference_probabilities
from sltrack.harness import get_preset
from sltrack.harness.evaluation import sample_outcome_frequencies
from sltrack.harness.runner import build_setup
from sltrack.tracker import SensorModel, association_reference, reference_coeffs, steady_state_innovation_covs


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--scans", type=int, default=100_000)
    ap.add_argument("--pd", type=float, default=0.9)
    ap.add_argument("--clutter", type=float, default=4.0)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()

    cfg = get_preset("nominal")
    setup = build_setup(cfg)
    nominal = setup.sensors[0]
    sensor = SensorModel(args.pd, args.clutter, nominal.fov_volume, nominal.meas_noise_cov)
    cov = steady_state_innovation_covs(setup.motion, [sensor] * cfg.num_sensors)[0]
    binning = setup.binning[0]
    x0, x1, y0, y1 = cfg.fov
    freq = sample_outcome_frequencies(sensor, cov, binning, args.scans, np.random.default_rng(args.seed), (x1 - x0, y1 - y0))
    used = reference_probabilities(Aspect.OVERALL, binning, association_reference(sensor, cov), args.clutter)
    closed = reference_probabilities(Aspect.OVERALL, binning, reference_coeffs(sensor), args.clutter)
    print("bin          empirical  nn-reference  closed-form")
    labels = [f"chi2 bin {j}" for j in range(binning.bins)] + ["missed"]
    for lab, f, u, c in zip(labels, freq, used, closed):
        print(f"{lab:12s} {f:9.4f} {u:13.4f} {c:12.4f}")


if __name__ == "__main__":
    main()
