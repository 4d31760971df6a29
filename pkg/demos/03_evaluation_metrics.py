"""The line and layout metrics on hand-made examples."""
import math

import numpy as np

from semline import ImageFrame, Line, auc, ea_score, evaluate, hiou, line_miou

frame = ImageFrame(400, 400)
half = Line.from_endpoints((0, 200), (399, 200), frame)
quarter = Line.from_endpoints((0, 100), (399, 100), frame)
print(f"mIoU half vs quarter horizontals: {line_miou(half, quarter, frame):.4f}  (7/12 = {7 / 12:.4f})")
print(f"EA of the same pair: {ea_score(half, quarter, frame):.4f}")
print(f"EA of perpendicular center lines: {ea_score(Line(0, 0), Line(0, math.pi / 2), frame):.4f}")

print(f"\nHIoU horizontal vs vertical: {hiou([Line(0, 0)], [Line(0, math.pi / 2)], frame):.4f}")
print(f"HIoU no lines vs one center line: {hiou([], [Line(0, 0)], frame):.4f}")

# a slightly perturbed detection over three images
rng = np.random.default_rng(1)
items = []
for n in range(3):
    gt = [Line(rng.uniform(-80, 80), rng.uniform(0, math.pi)) for _ in range(3)]
    det = [l.shifted(rng.normal(0, 3), rng.normal(0, 0.02)) for l in gt[:2]]
    items.append((f"img{n}", frame, det, gt))
rep = evaluate(items)
print(f"\nAUC_F {rep.auc_f:.4f}, mean HIoU {rep.hiou_mean:.4f}")
for tau in (0.5, 0.9, 0.98):
    i = int(np.argmin(np.abs(rep.tau - tau)))
    print(f"  tau={rep.tau[i]:.2f}  P={rep.precision[i]:.3f}  R={rep.recall[i]:.3f}  F={rep.f_measure[i]:.3f}")
print("AUC of a constant 0.5 curve:", auc(lambda t: 0.5))
