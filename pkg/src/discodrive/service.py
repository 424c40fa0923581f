"""Annotation service: serves evaluation sessions to human annotators over
plain JSON/HTTP, persists ratings append-only, and exposes aggregated
summaries.

State is file-backed and rebuildable: session manifests are JSON files
written once at creation, ratings go to a single append-only JSONL log.
Restarting the service over the same state directory reproduces identical
session state.
"""

from __future__ import annotations

import hashlib
import json
import random
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .corpus import Dialog
from .evalharness import (
    LIKERT_ANCHORS,
    METRIC_SETS,
    PAIRWISE_PROMPTS,
    AggregationParams,
    Pair,
    RatingRecord,
    RatingValidationError,
    aggregate_likert,
    aggregate_pairwise,
    aggregate_pairwise_majority,
    validate_record_for_mode,
)


class SessionError(ValueError):
    pass


class UnknownSessionError(SessionError):
    pass


class UnknownEvaluatorError(SessionError):
    pass


class DuplicateRatingError(SessionError):
    pass


@dataclass(frozen=True)
class EvalSession:
    id: str
    mode: str
    items: tuple[dict, ...]
    evaluator_ids: tuple[str, ...]
    order_seed: int

    def item_ids(self) -> list[str]:
        return [item["item_id"] for item in self.items]


def form_spec(mode: str) -> dict:
    """Metric form served with every item: Likert anchors for rating modes,
    choice prompts for pairwise."""
    metrics = []
    for name in METRIC_SETS[mode]:
        if mode == "pairwise":
            metrics.append({"name": name, "kind": "choice", "prompt": PAIRWISE_PROMPTS[name]})
        else:
            low, high = LIKERT_ANCHORS[(mode, name)]
            metrics.append(
                {"name": name, "kind": "likert", "anchors": {"1": low, "5": high}}
            )
    return {"mode": mode, "metrics": metrics}


# ---------------------------------------------------------------------------
# Manifest helpers
# ---------------------------------------------------------------------------

def intrinsic_items(dialogs: Sequence[Dialog]) -> list[dict]:
    return [{"item_id": d.id, "dialog": d.to_json()} for d in dialogs]


def _blind_dialog(dialog: Dialog) -> dict:
    """Turns only: no ids, domains, scenarios, spans, or provenance. Span
    presence alone would reveal which side is the synthetic corpus."""
    return {
        "turns": [{"speaker": t.speaker.value, "text": t.text} for t in dialog.turns]
    }


def pairwise_items(pairs: Sequence[Pair]) -> list[dict]:
    """Manifest entries keep the source mapping server-side; next_item
    strips it before anything reaches an annotator."""
    return [
        {
            "item_id": p.pair_id,
            "a": _blind_dialog(p.shown_a),
            "b": _blind_dialog(p.shown_b),
            "sources": {"a": p.source_a, "b": p.source_b},
        }
        for p in pairs
    ]


# ---------------------------------------------------------------------------
# Store
# ---------------------------------------------------------------------------

class AnnotationStore:
    """File-backed session and rating state with a single-writer lock for
    appends; reads serve from in-memory snapshots rebuilt on restart."""

    def __init__(self, state_dir: str | Path):
        self.state_dir = Path(state_dir)
        self.sessions_dir = self.state_dir / "sessions"
        self.log_path = self.state_dir / "ratings.jsonl"
        self.sessions_dir.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self._sessions: dict[str, EvalSession] = {}
        self._records: list[RatingRecord] = []
        self._rated: set[tuple[str, str, str, str]] = set()
        self._replay()

    # -- persistence --------------------------------------------------------

    def _replay(self) -> None:
        for path in sorted(self.sessions_dir.glob("*.json")):
            obj = json.loads(path.read_text(encoding="utf-8"))
            session = EvalSession(
                id=obj["id"],
                mode=obj["mode"],
                items=tuple(obj["items"]),
                evaluator_ids=tuple(obj["evaluator_ids"]),
                order_seed=int(obj["order_seed"]),
            )
            self._sessions[session.id] = session
        if self.log_path.exists():
            with self.log_path.open("r", encoding="utf-8") as fh:
                for line in fh:
                    if not line.strip():
                        continue
                    record = RatingRecord.from_json(json.loads(line))
                    self._remember(record)

    def _remember(self, record: RatingRecord) -> None:
        self._records.append(record)
        self._rated.add(
            (record.session_id or "", record.evaluator_id, record.item_id, record.metric_name)
        )

    # -- sessions ------------------------------------------------------------

    def create_session(
        self,
        mode: str,
        items: Sequence[dict],
        evaluator_ids: Sequence[str],
        session_id: str | None = None,
        order_seed: int = 0,
    ) -> EvalSession:
        if mode not in METRIC_SETS:
            raise SessionError(f"unknown mode {mode!r}")
        if not items:
            raise SessionError("manifest must be non-empty")
        if len(set(evaluator_ids)) != len(evaluator_ids) or not evaluator_ids:
            raise SessionError("evaluator ids must be non-empty and unique")
        ids = [item.get("item_id") for item in items]
        if None in ids or len(set(ids)) != len(ids):
            raise SessionError("manifest items need unique item_id fields")
        if session_id is None:
            session_id = f"session-{len(self._sessions):04d}"
        if session_id in self._sessions:
            raise SessionError(f"session {session_id!r} already exists")
        session = EvalSession(
            id=session_id,
            mode=mode,
            items=tuple(items),
            evaluator_ids=tuple(evaluator_ids),
            order_seed=order_seed,
        )
        path = self.sessions_dir / f"{session_id}.json"
        path.write_text(
            json.dumps(
                {
                    "id": session.id,
                    "mode": session.mode,
                    "items": list(session.items),
                    "evaluator_ids": list(session.evaluator_ids),
                    "order_seed": session.order_seed,
                },
                ensure_ascii=False,
            ),
            encoding="utf-8",
        )
        self._sessions[session.id] = session
        return session

    def get_session(self, session_id: str) -> EvalSession:
        session = self._sessions.get(session_id)
        if session is None:
            raise UnknownSessionError(f"no session {session_id!r}")
        return session

    # -- item flow ------------------------------------------------------------

    def _evaluator_order(self, session: EvalSession, evaluator_id: str) -> list[int]:
        digest = hashlib.sha256(f"{session.order_seed}\x1f{evaluator_id}".encode()).digest()
        rng = random.Random(int.from_bytes(digest[:8], "big"))
        order = list(range(len(session.items)))
        rng.shuffle(order)
        return order

    def _is_item_complete(self, session: EvalSession, evaluator_id: str, item_id: str) -> bool:
        return all(
            (session.id, evaluator_id, item_id, metric) in self._rated
            for metric in METRIC_SETS[session.mode]
        )

    def next_item(self, session_id: str, evaluator_id: str) -> dict | None:
        """First unrated item in the evaluator's seeded order; None when the
        session is complete for that evaluator. Pairwise payloads are
        blinded (sources stripped)."""
        session = self.get_session(session_id)
        if evaluator_id not in session.evaluator_ids:
            raise UnknownEvaluatorError(f"{evaluator_id!r} is not enrolled in {session_id!r}")
        for idx in self._evaluator_order(session, evaluator_id):
            item = session.items[idx]
            if self._is_item_complete(session, evaluator_id, item["item_id"]):
                continue
            payload = {k: v for k, v in item.items() if k != "sources"}
            rated = [
                metric
                for metric in METRIC_SETS[session.mode]
                if (session.id, evaluator_id, item["item_id"], metric) in self._rated
            ]
            return {
                "session_id": session.id,
                "item": payload,
                "form": form_spec(session.mode),
                "already_rated": rated,
            }
        return None

    # -- ratings ------------------------------------------------------------

    def submit_rating(self, session_id: str, record: RatingRecord) -> None:
        """Validate and append one judgment. Resubmission for an already
        rated (evaluator, item, metric) is rejected; the log is append-only."""
        session = self.get_session(session_id)
        if record.evaluator_id not in session.evaluator_ids:
            raise UnknownEvaluatorError(
                f"{record.evaluator_id!r} is not enrolled in {session_id!r}"
            )
        if record.item_id not in session.item_ids():
            raise RatingValidationError(f"item {record.item_id!r} is not in the manifest")
        validate_record_for_mode(record, session.mode)
        stored = RatingRecord(
            evaluator_id=record.evaluator_id,
            item_id=record.item_id,
            metric_name=record.metric_name,
            value=record.value,
            choice=record.choice,
            timestamp=record.timestamp if record.timestamp is not None else time.time(),
            session_id=session_id,
        )
        with self._lock:
            key = (session_id, stored.evaluator_id, stored.item_id, stored.metric_name)
            if key in self._rated:
                raise DuplicateRatingError(
                    f"{stored.evaluator_id!r} already rated {stored.metric_name!r} "
                    f"on item {stored.item_id!r}"
                )
            with self.log_path.open("a", encoding="utf-8") as fh:
                fh.write(json.dumps(stored.to_json(), ensure_ascii=False) + "\n")
                fh.flush()
            self._remember(stored)

    def session_records(self, session_id: str) -> list[RatingRecord]:
        return [r for r in self._records if r.session_id == session_id]

    # -- summary -------------------------------------------------------------

    def summary(self, session_id: str, params: AggregationParams | None = None) -> dict:
        """Aggregated report; partial data allowed and marked with the
        completion fraction. Pairwise summaries include the unblinded
        per-source counts (the only place unblinding happens)."""
        session = self.get_session(session_id)
        records = self.session_records(session_id)
        metrics = METRIC_SETS[session.mode]
        total = len(session.items) * len(session.evaluator_ids)
        done = sum(
            1
            for evaluator in session.evaluator_ids
            for item_id in session.item_ids()
            if self._is_item_complete(session, evaluator, item_id)
        )
        out: dict = {
            "session_id": session.id,
            "mode": session.mode,
            "items": len(session.items),
            "evaluators": list(session.evaluator_ids),
            "judgments": {"completed": done, "total": total},
            "completion": done / total if total else 0.0,
        }
        if session.mode == "pairwise":
            raw = aggregate_pairwise(records)
            out["pairwise"] = {m: raw.get(m, {"A": 0, "B": 0}) for m in metrics}
            out["pairwise_majority"] = aggregate_pairwise_majority(records)
            sources = {
                item["item_id"]: item.get("sources", {}) for item in session.items
            }
            unblinded: dict[str, dict[str, int]] = {}
            for record in records:
                if record.choice is None:
                    continue
                source = sources.get(record.item_id, {}).get(record.choice.lower())
                if source is None:
                    continue
                counts = unblinded.setdefault(record.metric_name, {})
                counts[source] = counts.get(source, 0) + 1
            out["pairwise_by_source"] = unblinded
        else:
            summaries = aggregate_likert(records, params, allow_partial=True)
            out["likert"] = {
                name: {
                    "mean": s.mean,
                    "half_width": s.half_width,
                    "count": s.count,
                    "rendered": s.render(),
                }
                for name, s in summaries.items()
            }
            out["insufficient"] = [
                m for m in metrics if m not in summaries
            ]
        return out


# ---------------------------------------------------------------------------
# HTTP layer
# ---------------------------------------------------------------------------

def create_app(store: AnnotationStore, ui_dir: str | Path | None = None):
    """FastAPI app over the store; static UI bundle mounted at / when a
    directory is provided."""
    from fastapi import Body, FastAPI, HTTPException, Query
    from fastapi.responses import JSONResponse

    app = FastAPI(title="discodrive annotation service")

    def _http_error(exc: Exception) -> HTTPException:
        if isinstance(exc, UnknownSessionError):
            return HTTPException(status_code=404, detail=str(exc))
        if isinstance(exc, DuplicateRatingError):
            return HTTPException(status_code=409, detail=str(exc))
        return HTTPException(status_code=422, detail=str(exc))

    @app.post("/sessions")
    def post_session(body: dict = Body(...)):
        try:
            session = store.create_session(
                mode=body.get("mode", ""),
                items=body.get("items", []),
                evaluator_ids=body.get("evaluator_ids", []),
                session_id=body.get("session_id"),
                order_seed=int(body.get("order_seed", 0)),
            )
        except (SessionError, RatingValidationError) as exc:
            raise _http_error(exc)
        return {
            "id": session.id,
            "mode": session.mode,
            "items": len(session.items),
            "evaluator_ids": list(session.evaluator_ids),
        }

    @app.get("/sessions/{session_id}/next")
    def get_next(session_id: str, evaluator: str = Query(...)):
        try:
            payload = store.next_item(session_id, evaluator)
        except SessionError as exc:
            raise _http_error(exc)
        if payload is None:
            return JSONResponse({"done": True})
        return payload

    @app.post("/sessions/{session_id}/ratings")
    def post_ratings(session_id: str, body: dict = Body(...)):
        raw = body.get("ratings", [body]) if isinstance(body, dict) else []
        accepted = 0
        try:
            for obj in raw:
                record = RatingRecord.from_json(obj)
                store.submit_rating(session_id, record)
                accepted += 1
        except (SessionError, RatingValidationError, KeyError) as exc:
            raise _http_error(
                exc if isinstance(exc, SessionError) else RatingValidationError(str(exc))
            )
        return {"accepted": accepted}

    @app.get("/sessions/{session_id}/summary")
    def get_summary(session_id: str):
        try:
            return store.summary(session_id)
        except SessionError as exc:
            raise _http_error(exc)

    if ui_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app


def serve(state_dir: str | Path, host: str = "127.0.0.1", port: int = 8700,
          ui_dir: str | Path | None = None) -> None:
    import uvicorn

    app = create_app(AnnotationStore(state_dir), ui_dir=ui_dir)
    uvicorn.run(app, host=host, port=port, log_level="warning")
