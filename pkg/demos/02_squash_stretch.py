"""Squash-and-stretch scoring on a pulsing ellipse.

A cartoon ball that flattens and stretches while keeping its apparent
area scores high on both components; a rigid shape gets deformation 0;
and without a rebound the combined score is 0 by definition.
"""

import math

import numpy as np

from animetric import MaskSequence, anisotropy_series, squash_stretch_score


def ellipse_frame(a, b, size=128):
    yy, xx = np.mgrid[0:size, 0:size].astype(float)
    c = (size - 1) / 2
    return ((((xx - c) / a) ** 2 + ((yy - c) / b) ** 2) <= 1.0).astype(np.uint8)


# Keep the area roughly constant while the aspect ratio pulses: classic
# squash-and-stretch. a*b stays near 24*24.
frames = []
for t in range(24):
    squeeze = 1 + 0.35 * math.sin(2 * math.pi * t / 24)
    frames.append(ellipse_frame(24 * squeeze, 24 / squeeze))
bouncy = MaskSequence(data=np.stack(frames))

u = anisotropy_series(bouncy)
print("elongation over time (log axis ratio):")
print("  " + " ".join(f"{v:.2f}" for v in u))

result = squash_stretch_score(bouncy, rebound=True, tau=0.2)
print(f"\npulsing ellipse, rebound seen:")
print(f"  area preservation : {result.area_score:6.2f}")
print(f"  deformation       : {result.deformation_score:6.2f}")
print(f"  combined          : {result.combined_score:6.2f}  (= 0.7*area + 0.3*deformation)")

rigid = MaskSequence(data=np.stack([ellipse_frame(24, 24)] * 24))
rigid_result = squash_stretch_score(rigid, rebound=True)
print(f"\nrigid disc, rebound seen:")
print(f"  area preservation : {rigid_result.area_score:6.2f}")
print(f"  deformation       : {rigid_result.deformation_score:6.2f}")
print(f"  combined          : {rigid_result.combined_score:6.2f}")

gated = squash_stretch_score(bouncy, rebound=False)
print(f"\npulsing ellipse but no rebound detected:")
print(f"  combined          : {gated.combined_score:6.2f}  (gated to zero)")
