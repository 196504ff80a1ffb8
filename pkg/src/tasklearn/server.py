"""HTTP service: world state, pending proposals, decisions, report, events.

The learning loop runs on a background thread in interactive oversight mode;
decisions arrive through POST and unblock it. All payloads are JSON mirrors
of the domain types; /events is a server-sent-event stream of loop
transitions.
"""

import json
import queue
import threading
from pathlib import Path

from fastapi import FastAPI, Response
from fastapi.responses import StreamingResponse
from fastapi.staticfiles import StaticFiles

from tasklearn.agent import (
    EventBus,
    INTERACTIVE,
    LoopConfig,
    Services,
    run_task,
)
from tasklearn.errors import (
    AlreadyDecidedError,
    DecisionTimeoutError,
    InvalidDecisionError,
    UnknownProposalError,
)
from tasklearn.oversight import (
    Decision,
    OversightQueue,
    PreferenceModel,
    accept,
    modify,
    reject,
)
from tasklearn.parser import GoalExpr, InterpretationFailure, Lexicon, parse_goal
from tasklearn.verifier import check_affordable, ground, to_grounded
from tasklearn.world import Scenario, world_summary


class AgentSession:
    """One learning run plus the shared state the API exposes."""

    def __init__(
        self,
        scenario: Scenario,
        gateway,
        cfg: LoopConfig | None = None,
        prefs: PreferenceModel | None = None,
        episode_log=None,
        rules=None,
        ledger=None,
    ):
        from tasklearn.gateway import TokenLedger
        from tasklearn.memory import EpisodeLog, RuleStore

        self.scenario = scenario
        self.cfg = cfg or LoopConfig(oversight_timeout=None)
        self.lexicon = Lexicon.from_scenario(scenario)
        self.events = EventBus()
        self.oversight = OversightQueue(validator=self._validate_goal)
        self.services = Services(
            gateway=gateway,
            ledger=ledger or TokenLedger(),
            templates=_default_templates(),
            rules=rules if rules is not None else RuleStore(),
            episodes=episode_log if episode_log is not None else EpisodeLog(),
            oversight=self.oversight,
            lexicon=self.lexicon,
            prefs=prefs,
            events=self.events,
            oversight_mode=INTERACTIVE,
        )
        self._lock = threading.Lock()
        self._world = scenario.world
        self._world_summary_cache: dict | None = None
        self._report = None
        self._status = "idle"
        self._error: str | None = None
        self._thread: threading.Thread | None = None
        self._collector = self.events.subscribe()
        threading.Thread(target=self._collect, daemon=True).start()

    # -- background loop ----------------------------------------------------

    def start(self):
        if self._thread is not None:
            return
        self._status = "running"
        self._thread = threading.Thread(target=self._run, daemon=True)
        self._thread.start()

    def _run(self):
        try:
            report, world = run_task(self.scenario, self.cfg, self.services)
            with self._lock:
                self._report = report
                self._world = world
                self._status = "done"
        except DecisionTimeoutError as exc:
            # Resumable: compiled rules fast-forward a rerun past every
            # object already learned.
            with self._lock:
                self._status = "suspended"
                self._error = str(exc)
        except Exception as exc:  # surfaced through /state
            with self._lock:
                self._status = "error"
                self._error = str(exc)

    def _collect(self):
        while True:
            event = self._collector.get()
            if event.get("type") in ("task_started", "executed") and "world" in event:
                with self._lock:
                    self._world_summary_cache = event["world"]

    # -- snapshots ----------------------------------------------------------

    def state(self) -> dict:
        with self._lock:
            if self._status == "running" and self._world_summary_cache is not None:
                summary = self._world_summary_cache
            else:
                summary = world_summary(self._world)
            return {
                "scenario": self.scenario.name,
                "task": self.scenario.task,
                "status": self._status,
                "error": self._error,
                "world": summary,
                "ledger": self.services.ledger.snapshot(),
            }

    def report_json(self) -> dict | None:
        with self._lock:
            return self._report.to_json() if self._report else None

    # -- decision validation -------------------------------------------------

    def _validate_goal(self, goal: GoalExpr) -> list[str]:
        # Validation against the starting world is conservative but
        # sufficient: scenarios never lose entities mid-run.
        with self._lock:
            world = self._world
        bound = ground(goal, world)
        if not isinstance(bound, dict):
            kind = "ambiguous" if bound.ambiguous else "ungroundable"
            return [f"{kind} referent: {bound.referent}"]
        failure = check_affordable(
            to_grounded(goal, bound), world, self.scenario.embodiment, self.cfg.depth_cap
        )
        if failure is not None:
            return [f"not achievable: {failure.reason}"]
        return []

    def parse_sentence(self, sentence: str) -> GoalExpr | InterpretationFailure:
        return parse_goal(sentence, self.lexicon)


def _default_templates():
    from tasklearn.prompts import default_bank

    return default_bank()


def create_app(session: AgentSession, static_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="tasklearn oversight console")

    @app.get("/state")
    def get_state():
        return session.state()

    @app.get("/proposals")
    def get_proposals(state: str = "pending"):
        if state == "pending":
            proposals = session.oversight.pending()
        else:
            proposals = [
                p
                for p in session.oversight.all_proposals()
                if state in ("all", p.state)
            ]
        return [p.to_json() for p in proposals]

    @app.post("/proposals/{proposal_id}/decision")
    def post_decision(proposal_id: int, payload: dict, response: Response):
        kind = payload.get("decision")
        decision: Decision
        if kind == "accept":
            decision = accept()
        elif kind == "reject":
            reason = payload.get("reason")
            if reason not in (None, "nonsensical", "wrong-preference"):
                response.status_code = 400
                return {"errors": [{"field": "reason", "message": f"unknown reason '{reason}'"}]}
            decision = reject(reason)
        elif kind == "modify":
            sentence = payload.get("sentence", "")
            parsed = session.parse_sentence(sentence)
            if isinstance(parsed, InterpretationFailure):
                response.status_code = 400
                return {"errors": [{"field": "sentence", "message": parsed.describe()}]}
            decision = modify(parsed)
        else:
            response.status_code = 400
            return {
                "errors": [
                    {"field": "decision", "message": f"unknown decision '{kind}'"}
                ]
            }
        try:
            proposal = session.oversight.decide(proposal_id, decision)
        except UnknownProposalError as exc:
            response.status_code = 404
            return {"errors": [{"field": "id", "message": str(exc)}]}
        except AlreadyDecidedError as exc:
            response.status_code = 409
            return {"errors": [{"field": "id", "message": str(exc)}]}
        except InvalidDecisionError as exc:
            response.status_code = 400
            return {
                "errors": [{"field": "sentence", "message": p} for p in exc.problems]
            }
        return proposal.to_json()

    @app.get("/report")
    def get_report():
        report = session.report_json()
        if report is None:
            return {"status": session.state()["status"], "report": None}
        return {"status": "done", "report": report}

    @app.get("/preferences")
    def get_preferences():
        prefs = session.services.prefs
        if prefs is None:
            return {"preferences": {}, "blocklist": []}
        out: dict[str, dict[str, str]] = {}
        for (task, noun), template in prefs.entries.items():
            from tasklearn.parser import NounPhrase, render, substitute_focus

            sentence = render(substitute_focus(template, NounPhrase((), noun)))
            out.setdefault(task, {})[noun] = sentence
        return {
            "preferences": out,
            "blocklist": [
                {"noun": noun, "location": loc} for noun, loc in sorted(prefs.blocklist)
            ],
        }

    @app.post("/preferences")
    def post_preferences(payload: dict, response: Response):
        try:
            prefs = PreferenceModel.from_config(payload, session.lexicon)
        except ValueError as exc:
            response.status_code = 400
            return {"errors": [{"field": "preferences", "message": str(exc)}]}
        session.services.prefs = prefs
        return {"ok": True}

    @app.get("/events")
    def get_events():
        # Subscribe before the response streams so no transition is missed
        # between the request landing and the first read.
        q = session.events.subscribe()

        def stream():
            try:
                while True:
                    try:
                        event = q.get(timeout=1.0)
                    except queue.Empty:
                        yield ": keep-alive\n\n"
                        continue
                    yield f"data: {json.dumps(event)}\n\n"
                    if event.get("type") == "task_done":
                        break
            finally:
                session.events.unsubscribe(q)

        return StreamingResponse(stream(), media_type="text/event-stream")

    if static_dir is not None and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="console")

    return app


def serve(
    scenario: Scenario,
    gateway,
    port: int = 8765,
    prefs: PreferenceModel | None = None,
    static_dir: str | Path | None = None,
    episode_log=None,
):
    """Run the oversight service until interrupted."""
    import uvicorn

    session = AgentSession(scenario, gateway, prefs=prefs, episode_log=episode_log)
    app = create_app(session, static_dir=static_dir)
    session.start()
    uvicorn.run(app, host="127.0.0.1", port=port, log_level="warning")
