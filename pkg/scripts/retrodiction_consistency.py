"""Compare Bayes-inverted forward probabilities with directly retrodicted ones.

Draws random preparation devices, measurement devices and unitaries, then
reports the worst disagreement per Hilbert-space dimension.

    python3 scripts/retrodiction_consistency.py --setups 1000 --max-dim 12
"""

import argparse
import math
from dataclasses import dataclass

import numpy as np

from retroloop.devices import MeasurementDevice, PreparationDevice, validate
from retroloop.fock import ModeRegister, OperatorMatrix
from retroloop.formalisms import ExperimentSetup, bayes_retrodict, retrodictive_probability


@dataclass(frozen=True)
class ConsistencyStudy:
    setups: int = 200
    min_dim: int = 2
    max_dim: int = 10
    max_outcomes: int = 5
    seed: int = 0


def _psd(rng, d):
    g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return g @ g.conj().T


def random_setup(rng, d, n_prep, n_meas) -> ExperimentSetup:
    reg = ModeRegister(("a",), d - 1)
    prep = [_psd(rng, d) for _ in range(n_prep)]
    total = sum(np.trace(p).real for p in prep)
    meas = [_psd(rng, d) for _ in range(n_meas)]
    w, v = np.linalg.eigh(sum(meas))
    root = v @ np.diag(w**-0.5) @ v.conj().T
    q, r = np.linalg.qr((rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))) / math.sqrt(2))
    return ExperimentSetup(
        PreparationDevice(reg, {f"p{k}": OperatorMatrix(reg, p / total) for k, p in enumerate(prep)}),
        OperatorMatrix(reg, q * (np.diag(r) / np.abs(np.diag(r)))),
        MeasurementDevice(reg, {f"m{k}": OperatorMatrix(reg, root @ m @ root) for k, m in enumerate(meas)}),
    )


def main(study: ConsistencyStudy):
    rng = np.random.default_rng(study.seed)
    worst: dict[int, float] = {}
    for _ in range(study.setups):
        d = int(rng.integers(study.min_dim, study.max_dim + 1))
        n_prep, n_meas = (int(k) for k in rng.integers(1, study.max_outcomes + 1, size=2))
        setup = random_setup(rng, d, n_prep, n_meas)
        assert not validate(setup.preparation) and not validate(setup.measurement)
        for j in setup.measurement.outcomes:
            b, r = bayes_retrodict(setup, j), retrodictive_probability(setup, j)
            gap = max(abs(b[i] - r[i]) for i in b)
            worst[d] = max(worst.get(d, 0.0), gap)
    print("dim  worst |P_bayes(i|j) - P_retro(i|j)|")
    for d in sorted(worst):
        print(f"{d:>3}  {worst[d]:.2e}")


if __name__ == "__main__":
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    for name, default in vars(ConsistencyStudy()).items():
        p.add_argument("--" + name.replace("_", "-"), type=int, default=default)
    main(ConsistencyStudy(**vars(p.parse_args())))
