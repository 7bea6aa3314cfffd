import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from parktrack.errors import EmptySessionError, InvalidParameterError, OrderingError, RoutingError, SessionStateError
from parktrack.session_tracker import (
    Decision,
    SessionTracker,
    SightingEvent,
    WalkSession,
    close_session,
    default_debounce,
    ingest_sighting,
    load_session_record,
    session_stats,
)


def ev(t, sid="S1", score=1.0):
    return SightingEvent(t, sid, score)


def test_default_debounce():
    assert default_debounce(110.0) == pytest.approx(26.4)


class TestIngest:
    def test_three_crossings(self):
        s = WalkSession("S1", 70.0, 110.0, 26.4)
        decisions = [ingest_sighting(s, ev(t)) for t in (0, 66, 132)]
        assert decisions == [Decision.SESSION_STARTED, Decision.ACCEPTED_NEW_LAP, Decision.ACCEPTED_NEW_LAP]
        assert s.laps == 2

    def test_debounced(self):
        s = WalkSession("S1", 70.0, 110.0, 26.4)
        s.ingest(ev(0))
        assert s.ingest(ev(10)) is Decision.DEBOUNCED
        assert s.laps == 0
        assert s.last_accepted_s == 0

    def test_out_of_order(self):
        s = WalkSession("S1", 70.0)
        s.ingest(ev(60))
        with pytest.raises(OrderingError):
            s.ingest(ev(50))
        assert s.laps == 0 and s.last_seen_s == 60

    def test_wrong_subject(self):
        with pytest.raises(RoutingError):
            WalkSession("S1", 70.0).ingest(ev(0, "S2"))

    def test_closed(self):
        s = WalkSession("S1", 70.0)
        s.ingest(ev(0))
        s.close()
        with pytest.raises(SessionStateError):
            s.ingest(ev(100))

    def test_low_score_rejected(self):
        s = WalkSession("S1", 70.0, min_score=0.9)
        assert s.ingest(ev(0, score=0.5)) is Decision.REJECTED
        assert s.t0_s is None

    def test_bad_event(self):
        with pytest.raises(InvalidParameterError):
            SightingEvent(-1.0, "S1")
        with pytest.raises(InvalidParameterError):
            SightingEvent(1.0, "S1", 2.0)


class TestStats:
    def _session(self, laps, weight=70.5):
        s = WalkSession("S1", weight, 110.0, 26.4)
        for k in range(laps + 1):
            s.ingest(ev(k * 60.0))
        return s

    def test_example_185(self):
        s = self._session(28)
        st_ = session_stats(s, s.t0_s + 1800)
        assert s.laps == 28
        assert st_.total_kcal == pytest.approx(185.0625, rel=1e-12)

    def test_now_equals_t0(self):
        s = self._session(3)
        z = s.stats(s.t0_s)
        assert (z.distance_m, z.total_kcal, z.met) == (0.0, 0.0, 2.0)

    def test_zero_laps(self):
        w = 64.0
        s = self._session(0, w)
        z = s.stats(1800.0)
        assert (z.avg_pace_kmh, z.met) == (0.0, 2.0)
        assert z.total_kcal == pytest.approx(2 * w * 3.5 / 200 * 30, rel=1e-12)

    def test_empty(self):
        with pytest.raises(EmptySessionError):
            WalkSession("S1", 70).stats(10)

    def test_query_before_start(self):
        s = self._session(1)
        with pytest.raises(InvalidParameterError):
            s.stats(-1)

    def test_idempotent(self):
        s = self._session(5)
        assert s.stats(400) == s.stats(400)
        assert s.laps == 5


class TestClose:
    def test_close_matches_stats(self, tmp_path):
        s = WalkSession("S1", 70.5, 110.0, 26.4)
        for k in range(29):
            s.ingest(ev(k * 60.0))
        expected = s.stats(1800)
        final = close_session(s, 1800, tmp_path)
        assert final == expected
        [path] = (tmp_path / "sessions").iterdir()
        record = load_session_record(path)
        assert record["stats"] == final
        assert record["laps"] == 28 and record["state"] == "closed"
        with pytest.raises(SessionStateError):
            close_session(s, 1800)

    def test_close_zero_laps_persisted(self, tmp_path):
        s = WalkSession("S/odd id", 70.0)
        s.ingest(ev(5.0, "S/odd id"))
        final = close_session(s, None, tmp_path)
        assert final.distance_m == 0.0
        files = list((tmp_path / "sessions").iterdir())
        assert len(files) == 1 and "/" not in files[0].name
        assert json.loads(files[0].read_text())["subject_id"] == "S/odd id"


class TestTracker:
    def test_routes_and_times_out(self):
        tr = SessionTracker({"A": 70.0, "B": 80.0}, timeout_s=300)
        for t in (0, 66, 132):
            tr.ingest(ev(t, "A"))
        tr.ingest(ev(10, "B"))
        tr.ingest(ev(1000, "A"))  # > 300 s gap: new session for A, B expired too
        assert [c.session.subject_id for c in tr.closed] == ["A", "B"]
        tr.close_all()
        assert [c.session.laps for c in tr.closed] == [2, 0, 0]
        assert tr.final_stats()["A"].distance_m == 0.0

    def test_unknown_subject(self):
        with pytest.raises(RoutingError):
            SessionTracker({"A": 70}).ingest(ev(0, "Z"))


@st.composite
def event_times(draw):
    gaps = draw(st.lists(st.floats(min_value=0, max_value=120, allow_nan=False), min_size=1, max_size=80))
    return list(np.cumsum(gaps))


class TestProperties:
    @given(event_times(), st.floats(min_value=0, max_value=60))
    def test_conservation_monotonicity_debounce(self, times, debounce):
        s = WalkSession("S1", 70.0, 110.0, debounce)
        accepted = []
        prev_laps, prev_last = 0, -1.0
        for t in times:
            d = s.ingest(ev(float(t)))
            if d in (Decision.SESSION_STARTED, Decision.ACCEPTED_NEW_LAP):
                accepted.append(float(t))
            assert s.laps == len(accepted) - 1
            assert s.laps >= prev_laps and s.last_accepted_s >= prev_last
            prev_laps, prev_last = s.laps, s.last_accepted_s
        assert all(b - a >= debounce for a, b in zip(accepted, accepted[1:]))

    @pytest.mark.parametrize("v_kmh", [3.8, 5.0, 6.0, 7.1, 8.8, 12.0])
    def test_constant_speed_oracle(self, v_kmh):
        # perfect per-lap detection at constant speed: laps == floor(v*T/P)
        lap_s = 110 * 3600 / (v_kmh * 1000)
        horizon = 1800.0
        s = WalkSession("S1", 70.0, 110.0)
        k = 0
        while k * lap_s <= horizon:
            s.ingest(ev(k * lap_s))
            k += 1
        expected = int(v_kmh / 3.6 * horizon // 110)
        assert s.laps == expected
        pace = s.stats(horizon).avg_pace_kmh
        assert abs(pace - v_kmh) <= 110 / horizon * 3.6 + 1e-9
