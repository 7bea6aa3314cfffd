"""
A simulated morning at the park
===============================

Walkers circle the loop, a camera at the start line fires on every crossing
(sometimes missing one), and the tracker turns sightings into sessions.
"""

from parktrack import DetectionModel, Scenario, SessionTracker, WalkerProfile, replay, simulate
from parktrack.activity_model import format_truncated

horizon = 1800.0
walkers = tuple(
    WalkerProfile.constant(sid, w, v, horizon, start_offset_m=off)
    for sid, w, v, off in [("S1", 73.3, 6.3, 0.0), ("S2", 49.5, 8.8, 30.0), ("S3", 78.1, 3.8, 70.0)]
)
scenario = Scenario(110.0, horizon, walkers, DetectionModel(detect_prob=0.9, jitter_s=1.5, seed=11))
events, truth = simulate(scenario)
print(len(events), "sightings, first few:")
for e in events[:5]:
    print("  ", e.to_json_line())

tracker = SessionTracker({w.subject_id: w.weight_kg for w in walkers}, perimeter_m=110.0)
result = replay(events, None, tracker)

print(f"{'id':<4}{'laps':>6}{'true':>6}{'pace':>8}{'MET':>6}{'kcal':>9}{'true kcal':>11}")
for sid, t in truth.walkers.items():
    s = result.final(sid)
    print(
        f"{sid:<4}{result.laps[sid]:>6}{t.true_laps:>6}{s.avg_pace_kmh:>8.2f}{s.met:>6}"
        f"{format_truncated(s.total_kcal):>9}{format_truncated(t.true_kcal):>11}"
    )
# Missed crossings only ever shorten the count; they never invent laps.
# A few misses can still drag the average pace across a band edge, which
# changes the MET and moves the estimate far more than the lost distance does.
