"""Dynamic degree, diversity, novelty, and semantic extension.

All four reduce to small, fully deterministic statistics once the
extractor has produced flow fields and feature vectors.
"""

import numpy as np

from animetric import (
    EmbeddingSet,
    FlowSequence,
    diversity_score,
    dynamic_degree,
    novelty_score,
    semantic_extension,
)

rng = np.random.default_rng(0)

# --- dynamic degree: is there real motion, scaled to the resolution? ---
h = w = 256
lively = np.zeros((8, 32, 32, 2), dtype=np.float32)
lively[:5, ..., 0] = 9.0  # 5 of 8 sampled pairs move hard
sluggish = np.zeros((8, 32, 32, 2), dtype=np.float32)
sluggish[0, ..., 0] = 9.0  # only 1 of 8

for name, flows in [("lively", lively), ("sluggish", sluggish)]:
    result = dynamic_degree(FlowSequence(data=flows), h, w)
    print(
        f"{name:9s} threshold={result.threshold_used:.1f} "
        f"moving={result.moving_fraction:.0%} dynamic={result.is_dynamic}"
    )

# --- diversity: five samples from the same input, pooled features ---
base = rng.normal(size=24)
clones = np.stack([base + rng.normal(0, 0.01, 24) for _ in range(5)]).astype(np.float32)
varied = rng.normal(size=(5, 24)).astype(np.float32)
print(f"\ndiversity of near-clones : {diversity_score(clones):6.2f}")
print(f"diversity of varied set  : {diversity_score(varied):6.2f}")

# --- novelty: distance from a minimally-extended reference video ---
reference = EmbeddingSet(vectors=rng.normal(size=(4, 16)).astype(np.float32), source_tag="demo")
predictable = EmbeddingSet(
    vectors=(reference.vectors + rng.normal(0, 0.05, (4, 16))).astype(np.float32)
)
surprising = EmbeddingSet(vectors=rng.normal(size=(4, 16)).astype(np.float32))
print(f"\nnovelty of a predictable clip: {novelty_score(predictable, reference):6.2f}")
print(f"novelty of a surprising clip : {novelty_score(surprising, reference):6.2f}")

# --- semantic extension: plausible content beyond the prompt ---
tally = semantic_extension(
    {
        "new_characters": "yes",
        "new_objects": "yes",
        "camera_editing": "no",
        "scene_expansion": "yes",
        "environment_change": "no",
    },
    action_count=2,
)
print(
    f"\nsemantic extension: {tally.new_action_count} new actions + "
    f"{tally.raw_points - min(tally.new_action_count, 5)} aspects "
    f"-> raw {tally.raw_points}/10 -> {tally.normalized:.0f}"
)
