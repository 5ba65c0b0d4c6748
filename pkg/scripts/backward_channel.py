"""Detector statistics and retrodicted |out> states of the double beam splitter.

    python3 scripts/backward_channel.py --a0 0.6 --a1 0.8i --configs 20
"""

import argparse
import math
from dataclasses import dataclass

import numpy as np

from retroloop.circuit import evaluate
from retroloop.runner import format_complex
from retroloop.scenarios import TimeMachineConfig, backward_channel, no_signaling_check


@dataclass(frozen=True)
class ChannelStudy:
    a0: complex = 1 / math.sqrt(2)
    a1: complex = 1 / math.sqrt(2)
    configs: int = 20  # random inputs for the no-signaling comparison
    seed: int = 0


def random_configs(rng, n):
    out = []
    for _ in range(n):
        theta, p0, p1 = rng.uniform(0, math.pi / 2), *rng.uniform(0, 2 * math.pi, 2)
        out.append(TimeMachineConfig(math.cos(theta) * np.exp(1j * p0), math.sin(theta) * np.exp(1j * p1)))
    return out


def main(study: ChannelStudy):
    report = backward_channel(TimeMachineConfig(study.a0, study.a1))
    print(f"{'record':<12}{'probability':>14}   retrodicted |out> = x0|0> + x1|1>")
    for rec in report.records:
        state = "never observed" if rec.out_state is None else ", ".join(
            format_complex(z) for z in rec.out_state.amplitudes
        )
        print(f"{rec.outcome:<12}{rec.probability:>14.6f}   {state}")
    print(f"{'total':<12}{report.total_probability:>14.6f}")
    print("averaged |out> density matrix:")
    print(np.array2string(report.averaged_state.matrix.real, precision=6, suppress_small=True))

    checks = no_signaling_check(random_configs(np.random.default_rng(study.seed), study.configs))
    print(
        f"no-signaling over {study.configs} random inputs: max pairwise trace distance "
        f"{checks.max_pairwise_trace_distance:.2e}, max distance to I/2 {checks.max_oracle_trace_distance:.2e}"
    )


if __name__ == "__main__":
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--a0", default="sqrt(1/2)", help="vacuum amplitude of |in> (expression)")
    p.add_argument("--a1", default="sqrt(1/2)", help="one-photon amplitude of |in> (expression)")
    p.add_argument("--configs", type=int, default=ChannelStudy.configs)
    p.add_argument("--seed", type=int, default=ChannelStudy.seed)
    a = p.parse_args()
    main(ChannelStudy(evaluate(a.a0), evaluate(a.a1), a.configs, a.seed))
