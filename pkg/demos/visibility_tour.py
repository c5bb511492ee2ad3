"""Walk through the visibility machinery on the built-in ``fig2`` room.

Run: python3 demos/visibility_tour.py
"""

import numpy as np

from visopt import anchors, dd_area, load_scenario, metric_V_area, visibility_region

sc = load_scenario("fig2")
fs, cs = sc.fs, sc.structure

print("reflex vertices:", sorted(r.label for r in fs.reflex))
print(f"{len(cs.segments)} inflection segments split the room into {len(cs.faces)} faces")

for x in [(0.0, 0.0), (3.0, 0.0), (2.0, 2.0), (8.0, 4.0)]:
    region = visibility_region(fs, x)
    anc = anchors(fs, x)
    print(f"\nobserver at {x}")
    print(f"  visible area {metric_V_area(fs, x):.4f} (region area {region.area:.4f})")
    print(f"  anchors {sorted(anc.labels)}")
    for name, nu in (("east", (1.0, 0.0)), ("north", (0.0, 1.0))):
        d = dd_area(fs, cs, np.array(x), np.array(nu))
        print(f"  d(area)/d{name} = {d.value:+.4f}")
