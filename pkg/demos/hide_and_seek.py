"""Both sides of the game: a hider minimizes what it can see, a seeker maximizes it.

Run: python3 demos/hide_and_seek.py
"""

from visopt.cli import optimize
from visopt.scenario import load_scenario

for name in ("saddle", "hide_and_seek", "climbers"):
    sc = load_scenario(name)
    _, runs, checks = optimize(sc, seed=0)
    print(f"\n{name} ({sc.mode}imize, {len(runs)} starts)")
    for run, chk in zip(runs, checks):
        if run.error:
            print("  error:", run.error)
            continue
        first = run.iterates[0].value
        verdict = "local optimum" if chk[0] else "not confirmed"
        print(f"  V {first:8.3f} -> {run.final_value:8.3f}  ({verdict})")
