import json

import pytest

from geoground.dataset import build_dataset, load_dataset
from geoground.review import ReviewDecision, ReviewService, UnknownSampleError
from tests.test_dataset import make_scene


class FakeClock:
    def __init__(self, start=1000.0):
        self.now = start

    def __call__(self):
        return self.now

    def advance(self, seconds):
        self.now += seconds


@pytest.fixture
def samples():
    scenes = [make_scene(f"im{i}", [("airport", {}), ("dam", {})]) for i in range(3)]
    return build_dataset(scenes, seed=13)


@pytest.fixture
def service(samples, tmp_path):
    return ReviewService(samples, log_path=tmp_path / "decisions.jsonl",
                         lease_ttl=300.0, clock=FakeClock())


class TestLeases:
    def test_lease_exclusivity(self, samples, tmp_path):
        clock = FakeClock()
        service = ReviewService(samples[:1], clock=clock)
        first = service.lease_next("alice")
        assert first is not None
        assert service.lease_next("bob") is None  # single sample already leased
        sample, lease_id = first
        service.submit_decision(sample.sample_id, "accept", "alice", lease_id=lease_id)
        assert service.lease_next("bob") is None  # queue exhausted

    def test_expired_lease_releases_sample(self, samples):
        clock = FakeClock()
        service = ReviewService(samples[:1], lease_ttl=300.0, clock=clock)
        service.lease_next("alice")
        assert service.lease_next("bob") is None
        clock.advance(301)
        leased = service.lease_next("bob")
        assert leased is not None

    def test_distinct_samples_lease_concurrently(self, service):
        a = service.lease_next("alice")
        b = service.lease_next("bob")
        assert a is not None and b is not None
        assert a[0].sample_id != b[0].sample_id


class TestDecisions:
    def test_accept_transitions_status(self, service):
        sample, lease_id = service.lease_next("alice")
        ack = service.submit_decision(sample.sample_id, "accept", "alice", lease_id=lease_id)
        assert ack.status == "accepted"
        assert service.status_of(sample.sample_id) == "accepted"

    def test_edit_requires_text(self, service):
        sample, lease_id = service.lease_next("alice")
        with pytest.raises(ValueError, match="edited_text"):
            service.submit_decision(sample.sample_id, "edit", "alice", lease_id=lease_id)

    def test_edit_records_conformance_flag(self, service):
        sample, lease_id = service.lease_next("alice")
        service.submit_decision(sample.sample_id, "edit", "alice",
                                edited_text="The blue vehicle", lease_id=lease_id)
        decision = service.decisions[-1]
        assert decision.template_conformant is True

        sample2, lease2 = service.lease_next("alice")
        service.submit_decision(sample2.sample_id, "edit", "alice",
                                edited_text="whatever free text!!", lease_id=lease2)
        assert service.decisions[-1].template_conformant is False

    def test_unknown_sample(self, service):
        with pytest.raises(UnknownSampleError):
            service.submit_decision("missing", "accept", "alice")

    def test_duplicate_payload_logged_once(self, service):
        sample, lease_id = service.lease_next("alice")
        service.submit_decision(sample.sample_id, "accept", "alice", lease_id=lease_id)
        ack = service.submit_decision(sample.sample_id, "accept", "alice", lease_id=lease_id)
        assert ack.duplicate is True
        matching = [d for d in service.decisions if d.sample_id == sample.sample_id]
        assert len(matching) == 1

    def test_conflict_last_write_wins(self, service):
        sample, lease_id = service.lease_next("alice")
        service.submit_decision(sample.sample_id, "accept", "alice", lease_id=lease_id)
        ack = service.submit_decision(sample.sample_id, "reject", "bob")
        assert ack.conflict is True
        assert service.status_of(sample.sample_id) == "rejected"
        # both decisions stay in the log
        assert len([d for d in service.decisions if d.sample_id == sample.sample_id]) == 2

    def test_explicit_timestamps_decide_winner(self, samples):
        service = ReviewService(samples, clock=FakeClock())
        target = samples[0].sample_id
        service.submit_decision(target, "reject", "bob", timestamp_ms=2000)
        service.submit_decision(target, "accept", "alice", timestamp_ms=1500)
        assert service.status_of(target) == "rejected"

    def test_progress_counters(self, service, samples):
        total = len(samples)
        assert service.progress() == {"pending": total, "accepted": 0,
                                      "rejected": 0, "edited": 0}
        sample, lease_id = service.lease_next("alice")
        service.submit_decision(sample.sample_id, "accept", "alice", lease_id=lease_id)
        progress = service.progress()
        assert progress["accepted"] == 1 and progress["pending"] == total - 1


class TestExportAndReplay:
    def run_reviews(self, service):
        decided = []
        while (leased := service.lease_next("alice")) is not None:
            sample, lease_id = leased
            n = len(decided)
            if n % 3 == 0:
                service.submit_decision(sample.sample_id, "accept", "alice", lease_id=lease_id)
            elif n % 3 == 1:
                service.submit_decision(sample.sample_id, "reject", "alice", lease_id=lease_id)
            else:
                service.submit_decision(sample.sample_id, "edit", "alice",
                                        edited_text="The edited description",
                                        lease_id=lease_id)
            decided.append(sample.sample_id)
        return decided

    def test_export_excludes_pending_and_rejected(self, samples, tmp_path):
        service = ReviewService(samples, log_path=tmp_path / "log.jsonl", clock=FakeClock())
        sample, lease_id = service.lease_next("alice")
        service.submit_decision(sample.sample_id, "accept", "alice", lease_id=lease_id)
        sample2, lease2 = service.lease_next("alice")
        service.submit_decision(sample2.sample_id, "reject", "alice", lease_id=lease2)
        service.export_verified(tmp_path / "out")
        exported = load_dataset(tmp_path / "out" / "verified.jsonl")
        assert [s.sample_id for s in exported] == [sample.sample_id]
        assert exported[0].status == "accepted"
        progress = json.loads((tmp_path / "out" / "progress.json").read_text())
        assert progress["rejected"] == 1 and progress["pending"] == len(samples) - 2

    def test_edited_text_appears_in_export(self, samples, tmp_path):
        service = ReviewService(samples, log_path=tmp_path / "log.jsonl", clock=FakeClock())
        sample, lease_id = service.lease_next("alice")
        service.submit_decision(sample.sample_id, "edit", "alice",
                                edited_text="The edited description", lease_id=lease_id)
        service.export_verified(tmp_path / "out")
        exported = load_dataset(tmp_path / "out" / "verified.jsonl")
        assert exported[0].expression.text == "The edited description"
        assert exported[0].status == "edited"

    def test_replay_reproduces_export_bytes(self, samples, tmp_path):
        log_path = tmp_path / "log.jsonl"
        service = ReviewService(samples, log_path=log_path, clock=FakeClock())
        self.run_reviews(service)
        service.export_verified(tmp_path / "first")

        replayed = ReviewService.from_log(samples, log_path)
        replayed.export_verified(tmp_path / "second")

        first = (tmp_path / "first" / "verified.jsonl").read_bytes()
        second = (tmp_path / "second" / "verified.jsonl").read_bytes()
        assert first == second
        assert (tmp_path / "first" / "progress.json").read_bytes() == \
            (tmp_path / "second" / "progress.json").read_bytes()

    def test_snapshot_written_periodically(self, samples, tmp_path):
        service = ReviewService(samples, log_path=tmp_path / "log.jsonl",
                                snapshot_path=tmp_path / "snap.json",
                                snapshot_every=2, clock=FakeClock())
        self.run_reviews(service)
        snap = json.loads((tmp_path / "snap.json").read_text())
        assert snap["log_length"] >= 2
        assert all(entry["status"] in ("accepted", "rejected", "edited")
                   for entry in snap["decided"].values())


class TestDecisionRecord:
    def test_round_trip(self):
        decision = ReviewDecision("s1", "edit", "alice", 1234,
                                  edited_text="The big dam", lease_id="L1",
                                  template_conformant=True)
        assert ReviewDecision.from_dict(decision.to_dict()) == decision

    def test_bad_verdict_rejected(self):
        with pytest.raises(ValueError):
            ReviewDecision("s1", "maybe", "alice", 1)
