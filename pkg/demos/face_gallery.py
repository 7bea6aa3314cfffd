"""
Enrolling faces and matching sightings
======================================

Real deployments plug a face encoder in front of the gallery. Here a seeded
synthetic source stands in for it so the demo is reproducible.
"""

import numpy as np

from parktrack import Gallery, Subject, SyntheticEmbeddingSource, cosine_similarity

src = SyntheticEmbeddingSource(dimension=128, seed=7, noise_deg=35)
gallery = Gallery(dimension=128, threshold=0.8)
for sid, weight in [("S1", 73.3), ("S2", 66.0), ("S3", 81.2)]:
    gallery.enroll(Subject(sid, f"walker {sid}", weight, src.encode(sid)))
print("enrolled:", [s.subject_id for s in gallery])

# Two enrolled identities sit well apart.
print("S1 vs S2:", round(cosine_similarity(src.encode("S1"), src.encode("S2")), 3))

rng = np.random.default_rng(0)
for sid in ["S1", "S2", "S3"]:
    query = src.sighting(sid, rng)
    print(sid, "->", gallery.identify(query))

# A stranger falls below the threshold.
print("stranger ->", gallery.identify(src.encode("visitor-42")))

# Sweeping the threshold shows the accept/reject trade-off.
queries = [src.sighting("S2", rng) for _ in range(200)]
scores = np.array([gallery.identify(q, threshold=1e-9).score for q in queries])
for tau in (0.7, 0.8, 0.9, 0.95):
    print(f"tau={tau:.2f}  accepted {np.mean(scores >= tau):.0%}")
