"""Search the corridor of ``fig2`` for a spot hidden from the upper room.

Each start runs the randomized normalized descent; the finals are then
probed along a compass of directions to confirm they are local minima.

Run: python3 demos/hiding_spot.py
"""

from visopt.cli import optimize
from visopt.scenario import load_scenario

sc = load_scenario("fig2")
cfg, runs, checks = optimize(sc, seed=3)
for run, (passed, _) in zip(runs, checks):
    x, y = run.final
    start = run.iterates[0]
    print(f"start ({start.x:5.2f}, {start.y:5.2f}) V={start.value:7.3f}  ->  "
          f"({x:5.2f}, {y:5.2f}) V={run.final_value:.2e} after {len(run.iterates) - 1} steps, "
          f"local minimum: {passed}")
