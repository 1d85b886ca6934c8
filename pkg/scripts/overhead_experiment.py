"""Measure wire overhead versus audience size.

Runs the toggle-once-per-second workload at several client counts and
prints per-client upstream and downstream payload rates, demonstrating the
fixed-size broadcast: downstream cost per client does not grow with N.
"""

import argparse

from vaudience.harness import Scenario, ScenarioEvent, run_scenario
from vaudience.server import SessionConfig
from vaudience.state import ReactionKind


def toggle_scenario(n_clients: int, duration_s: float) -> Scenario:
    events = []
    for i in range(n_clients):
        kind = ReactionKind(i % 4)
        t, active = 0.5 + (i % 100) * 0.009, True
        while t < duration_s - 0.6:
            events.append(ScenarioEvent(round(t, 3), i, kind, active))
            active = not active
            t += 1.0
    events.sort(key=lambda ev: ev.time_s)
    return Scenario(n_clients, duration_s, tuple(events))


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sizes", type=int, nargs="+", default=[5, 25, 100])
    parser.add_argument("--duration-s", type=float, default=15.0)
    args = parser.parse_args()

    print(f"{'N':>5} {'up B/s':>8} {'down B/s':>9} {'bcast frame':>12} {'conv ms':>8}")
    for n in args.sizes:
        report = run_scenario(toggle_scenario(n, args.duration_s),
                              SessionConfig(), seed=n)
        frame = max(report.broadcast_frame_sizes) if report.broadcast_frame_sizes else 0
        print(
            f"{n:>5} {report.upstream_bytes_per_client_per_s:>8.2f}"
            f" {report.broadcast_bytes_per_client_per_s:>9.2f}"
            f" {frame:>12} {report.convergence_latency_ms_max:>8.0f}"
        )


if __name__ == "__main__":
    main()
