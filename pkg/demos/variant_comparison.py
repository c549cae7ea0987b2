"""Head-to-head comparison of the four controller configurations.

Runs the 10-switch ring scenario with injected link failures under every
mechanism variant, sweeping the number of parallel flows, and prints the
seed-averaged success rate, throughput and mean path restoration delay.
The full resilience manager recovers within a millisecond; the
proactive-only configuration pays up to one estimation interval; strong
contracts alone abandon flows whose detours violate the strong bound; and
without resilience management a broken path stays broken.
"""

import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from sdnsim.harness import run_experiment
from sdnsim.scenario import load_scenario

SCENARIOS = os.path.join(os.path.dirname(__file__), "..", "scenarios")


def main() -> None:
    scenario = load_scenario(os.path.join(SCENARIOS, "industrial_ring_e1.scn"))
    seeds = [1, 2, 3, 4]
    result = run_experiment(scenario, ["woRM", "sRM", "pRM", "RM"], seeds,
                            sweep=("flows", [2, 4, 6, 8, 10]))

    print(f"{len(result.sweep_values)} flow counts x {len(seeds)} seeds, "
          f"4 injected link failures per run\n")
    print(f"{'mechanism':<10} {'success':>9} {'tput Mbps':>10} "
          f"{'restore':>12} {'warnings':>9}")
    for variant in result.variants:
        success = result.sweep_mean(variant, "success_rate")
        tput = result.sweep_mean(variant, "throughput_bps") / 1e6
        restore = result.sweep_mean(variant, "restoration_mean")
        warn = result.sweep_mean(variant, "warning_count")
        restore_text = ("-" if restore is None
                        else f"{restore / 1e6:10.3f}ms")
        print(f"{variant:<10} {success:>9.4f} {tput:>10.3f} "
              f"{restore_text:>12} {warn:>9.1f}")


if __name__ == "__main__":
    main()
