"""HTTP JSON API over the review service, for the browser review client.

Endpoints mirror the JSONL schemas:
  GET  /api/queue/next?reviewer=R   next pending sample + lease, or done
  POST /api/decisions               one decision, acked
  GET  /api/progress                status counters
  GET  /api/samples/{id}/image      image bytes, box geometry in X-Bbox
"""

from __future__ import annotations

import json
import mimetypes
from pathlib import Path

from fastapi import FastAPI, HTTPException, Response
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel

from .dataset import sample_to_dict
from .review import ReviewService, UnknownSampleError


class DecisionBody(BaseModel):
    sample_id: str
    verdict: str
    reviewer: str
    edited_text: str | None = None
    lease_id: str | None = None


def create_app(service: ReviewService, images_root: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="geoground review")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
        expose_headers=["X-Bbox"],
    )
    root = Path(images_root) if images_root else None

    @app.get("/api/queue/next")
    def queue_next(reviewer: str = "anonymous"):
        leased = service.lease_next(reviewer)
        if leased is None:
            return {"done": True, "progress": service.progress()}
        sample, lease_id = leased
        return {
            "done": False,
            "lease_id": lease_id,
            "sample": sample_to_dict(sample),
            "image_url": f"/api/samples/{sample.sample_id}/image",
            "progress": service.progress(),
        }

    @app.post("/api/decisions")
    def post_decision(body: DecisionBody):
        try:
            ack = service.submit_decision(
                sample_id=body.sample_id,
                verdict=body.verdict,
                reviewer=body.reviewer,
                edited_text=body.edited_text,
                lease_id=body.lease_id,
            )
        except UnknownSampleError:
            raise HTTPException(status_code=404, detail=f"unknown sample {body.sample_id}")
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        return {
            "sample_id": ack.sample_id,
            "status": ack.status,
            "duplicate": ack.duplicate,
            "conflict": ack.conflict,
        }

    @app.get("/api/progress")
    def progress():
        return service.progress()

    @app.get("/api/samples/{sample_id}/image")
    def sample_image(sample_id: str):
        sample = service.get_sample(sample_id)
        if sample is None:
            raise HTTPException(status_code=404, detail=f"unknown sample {sample_id}")
        image = service.images.get(sample.image_id)
        if image is None or not image.file_path:
            raise HTTPException(status_code=404, detail=f"no image file for {sample.image_id}")
        path = Path(image.file_path)
        if root is not None and not path.is_absolute():
            path = root / path
        if not path.is_file():
            raise HTTPException(status_code=404, detail=f"image file missing: {path}")
        media_type = mimetypes.guess_type(path.name)[0] or "application/octet-stream"
        headers = {"X-Bbox": json.dumps(list(sample.bbox.as_tuple()))}
        return Response(content=path.read_bytes(), media_type=media_type, headers=headers)

    return app
