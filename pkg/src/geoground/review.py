"""Human verification of generated expressions.

Single-pass review: each pending sample is leased to one reviewer at a time,
every decision is appended to an immutable JSONL log, and the current state
is a pure fold over that log. Replaying a log from an empty state therefore
reproduces the exact same export. Majority voting is intentionally not
implemented; one decision settles a sample (later decisions win by
timestamp, with the conflict kept in the log).
"""

from __future__ import annotations

import json
import threading
import time
import uuid
from dataclasses import dataclass, replace
from pathlib import Path

from .dataset import GroundingSample, export_dataset
from .expressions import matches_template
from .ingest import ImageRecord

VERDICTS = ("accept", "reject", "edit")

_VERDICT_TO_STATUS = {"accept": "accepted", "reject": "rejected", "edit": "edited"}


@dataclass(frozen=True)
class ReviewDecision:
    sample_id: str
    verdict: str
    reviewer: str
    timestamp_ms: int
    edited_text: str | None = None
    lease_id: str | None = None
    template_conformant: bool | None = None

    def __post_init__(self) -> None:
        if self.verdict not in VERDICTS:
            raise ValueError(f"unknown verdict {self.verdict!r}")
        if self.verdict == "edit" and not (self.edited_text or "").strip():
            raise ValueError("edit decisions need non-empty edited_text")

    def payload_key(self) -> tuple:
        return (self.sample_id, self.verdict, self.reviewer, self.edited_text)

    def to_dict(self) -> dict:
        return {
            "sample_id": self.sample_id,
            "verdict": self.verdict,
            "reviewer": self.reviewer,
            "timestamp_ms": self.timestamp_ms,
            "edited_text": self.edited_text,
            "lease_id": self.lease_id,
            "template_conformant": self.template_conformant,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ReviewDecision":
        return cls(
            sample_id=data["sample_id"],
            verdict=data["verdict"],
            reviewer=data["reviewer"],
            timestamp_ms=int(data["timestamp_ms"]),
            edited_text=data.get("edited_text"),
            lease_id=data.get("lease_id"),
            template_conformant=data.get("template_conformant"),
        )


@dataclass
class Lease:
    lease_id: str
    sample_id: str
    reviewer: str
    expires_at: float


@dataclass(frozen=True)
class SubmitAck:
    sample_id: str
    status: str
    duplicate: bool = False
    conflict: bool = False


class UnknownSampleError(KeyError):
    pass


class ReviewService:
    """Queue, decision log, and export for one loaded dataset."""

    def __init__(self, samples: list[GroundingSample],
                 images: dict[str, ImageRecord] | None = None,
                 log_path: str | Path | None = None,
                 lease_ttl: float = 300.0,
                 snapshot_path: str | Path | None = None,
                 snapshot_every: int = 100,
                 clock=time.time):
        self._samples = {s.sample_id: s for s in samples}
        if len(self._samples) != len(samples):
            raise ValueError("duplicate sample ids in dataset")
        self.images = images or {}
        self.lease_ttl = lease_ttl
        self._clock = clock
        self._log_path = Path(log_path) if log_path else None
        self._snapshot_path = Path(snapshot_path) if snapshot_path else None
        self._snapshot_every = snapshot_every
        self._lock = threading.Lock()
        self._decisions: list[ReviewDecision] = []
        self._seen_payloads: set[tuple] = set()
        self._winner: dict[str, ReviewDecision] = {}
        self._leases: dict[str, Lease] = {}
        self._last_ts = 0

    @classmethod
    def from_log(cls, samples: list[GroundingSample], log_path: str | Path,
                 **kwargs) -> "ReviewService":
        """Rebuild state by folding an existing decision log."""
        service = cls(samples, log_path=log_path, **kwargs)
        path = Path(log_path)
        if path.exists():
            with open(path, encoding="utf-8") as fh:
                for line in fh:
                    line = line.strip()
                    if line:
                        service._apply(ReviewDecision.from_dict(json.loads(line)))
        return service

    def _now_ms(self) -> int:
        ts = int(self._clock() * 1000)
        self._last_ts = max(ts, self._last_ts + 1)  # keep timestamps strictly increasing
        return self._last_ts

    def _apply(self, decision: ReviewDecision) -> None:
        self._decisions.append(decision)
        self._seen_payloads.add(decision.payload_key())
        self._last_ts = max(self._last_ts, decision.timestamp_ms)
        current = self._winner.get(decision.sample_id)
        if current is None or decision.timestamp_ms >= current.timestamp_ms:
            self._winner[decision.sample_id] = decision
        self._leases.pop(decision.sample_id, None)

    def status_of(self, sample_id: str) -> str:
        decision = self._winner.get(sample_id)
        return _VERDICT_TO_STATUS[decision.verdict] if decision else "pending"

    def get_sample(self, sample_id: str) -> GroundingSample | None:
        return self._samples.get(sample_id)

    def lease_next(self, reviewer: str) -> tuple[GroundingSample, str] | None:
        """Claim the next pending sample for a reviewer, or None when done."""
        with self._lock:
            now = self._clock()
            for sample_id in sorted(self._samples):
                if sample_id in self._winner:
                    continue
                lease = self._leases.get(sample_id)
                if lease is not None and lease.expires_at > now:
                    continue
                lease = Lease(uuid.uuid4().hex, sample_id, reviewer, now + self.lease_ttl)
                self._leases[sample_id] = lease
                return self._samples[sample_id], lease.lease_id
            return None

    def submit_decision(self, sample_id: str, verdict: str, reviewer: str,
                        edited_text: str | None = None,
                        lease_id: str | None = None,
                        timestamp_ms: int | None = None) -> SubmitAck:
        """Record one decision; identical re-submissions are not re-logged."""
        with self._lock:
            if sample_id not in self._samples:
                raise UnknownSampleError(sample_id)
            conformant = None
            if verdict == "edit" and edited_text:
                conformant = (matches_template(edited_text, "phrase")
                              or matches_template(edited_text, "sentence"))
            decision = ReviewDecision(
                sample_id=sample_id,
                verdict=verdict,
                reviewer=reviewer,
                timestamp_ms=timestamp_ms if timestamp_ms is not None else self._now_ms(),
                edited_text=edited_text,
                lease_id=lease_id,
                template_conformant=conformant,
            )
            if decision.payload_key() in self._seen_payloads:
                return SubmitAck(sample_id, self.status_of(sample_id), duplicate=True)
            previous = self._winner.get(sample_id)
            conflict = previous is not None and previous.reviewer != reviewer
            self._apply(decision)
            self._write_log(decision)
            return SubmitAck(sample_id, self.status_of(sample_id), conflict=conflict)

    def _write_log(self, decision: ReviewDecision) -> None:
        if self._log_path is None:
            return
        self._log_path.parent.mkdir(parents=True, exist_ok=True)
        with open(self._log_path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(decision.to_dict()) + "\n")
        if self._snapshot_path is not None and len(self._decisions) % self._snapshot_every == 0:
            self.save_snapshot(self._snapshot_path)

    def progress(self) -> dict[str, int]:
        counts = {"pending": 0, "accepted": 0, "rejected": 0, "edited": 0}
        for sample_id in self._samples:
            counts[self.status_of(sample_id)] += 1
        return counts

    def current_samples(self) -> list[GroundingSample]:
        """Samples with review status and edits applied, in id order."""
        out = []
        for sample_id in sorted(self._samples):
            sample = self._samples[sample_id]
            decision = self._winner.get(sample_id)
            if decision is None:
                out.append(sample)
                continue
            status = _VERDICT_TO_STATUS[decision.verdict]
            expression = sample.expression
            if decision.verdict == "edit":
                expression = replace(expression, text=decision.edited_text)
            out.append(replace(sample, status=status, expression=expression))
        return out

    def export_verified(self, out_dir: str | Path, format: str = "jsonl") -> list[Path]:
        """Write accepted and edited samples plus a progress summary."""
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        verified = [s for s in self.current_samples() if s.status in ("accepted", "edited")]
        target = out / "verified.jsonl" if format == "jsonl" else out / "verified_xml"
        written = export_dataset(verified, target, format=format, images=self.images)
        progress_path = out / "progress.json"
        with open(progress_path, "w", encoding="utf-8") as fh:
            json.dump(self.progress(), fh, indent=2, sort_keys=True)
            fh.write("\n")
        return written + [progress_path]

    def save_snapshot(self, path: str | Path) -> None:
        """Materialized fold of the log; purely an optimization for restarts."""
        state = {
            sample_id: {
                "status": self.status_of(sample_id),
                "edited_text": (self._winner[sample_id].edited_text
                                if sample_id in self._winner else None),
                "timestamp_ms": (self._winner[sample_id].timestamp_ms
                                 if sample_id in self._winner else None),
            }
            for sample_id in sorted(self._samples)
            if sample_id in self._winner
        }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump({"decided": state, "log_length": len(self._decisions)}, fh,
                      indent=2, sort_keys=True)
            fh.write("\n")

    @property
    def decisions(self) -> list[ReviewDecision]:
        return list(self._decisions)
