"""The extraction loop: gap detection, prompting, verification, repair,
oversight, execution, and rule compilation, driven object by object.

The loop is strictly sequential (one gap in flight at a time). It consults
compiled rules first, then the completion backend, and falls back to the
human channel only when the backend is exhausted — rejected or unviable
responses trigger repair prompts up to the per-gap budget.
"""

import queue
import threading
from dataclasses import dataclass, field, replace

from tasklearn.errors import GatewayError, PreconditionError
from tasklearn.gateway import LLMGateway, TokenLedger, estimate_tokens
from tasklearn.memory import (
    KIND_HUMAN,
    KIND_LLM,
    KIND_RULE,
    EpisodeLog,
    EpisodeRecord,
    RuleStore,
    WorkingContext,
)
from tasklearn.oversight import (
    ACCEPT,
    MODIFY,
    OversightQueue,
    PreferenceModel,
    Proposal,
    accept,
    oracle_decide,
)
from tasklearn.parser import (
    ActionStep,
    GoalExpr,
    KIND_ACTION,
    KIND_GOAL,
    Lexicon,
    action_phrase,
    render,
    render_action,
    substitute_focus,
)
from tasklearn.planner import Trace, execute, plan, retrospect_compile
from tasklearn.prompts import (
    GAP_MISSING_ACTION,
    GAP_MISSING_GOAL,
    GAP_REPAIR_NEEDED,
    PromptInstance,
    TemplateBank,
    build_repair,
    instantiate,
    select_template,
)
from tasklearn.verifier import (
    FailureCategory,
    ResponseCategory,
    USER_REJECTED,
    VerificationReport,
    categorize,
    ground,
    map_action_step,
    to_grounded,
    verify,
)
from tasklearn.world import (
    Embodiment,
    HELD,
    Scenario,
    WorldState,
    apply_action,
    digest,
    goal_holds,
    perceive,
    world_summary,
)

ORACLE = "oracle"
INTERACTIVE = "interactive"

METHOD_RULE = "rule"
METHOD_LLM = "llm"
METHOD_HUMAN = "human"
METHOD_UNLEARNED = "unlearned"

_REJECTION_WORDING = {
    "nonsensical": "it is not sensible",
    "wrong-preference": "it does not match the user's preference",
}


@dataclass(frozen=True)
class LoopConfig:
    max_repairs_per_gap: int = 3
    use_planner_first: bool = True
    llm_before_human: bool = True
    depth_cap: int = 12
    oversight_timeout: float | None = 300.0
    max_action_steps: int = 12

    def __post_init__(self):
        if self.max_repairs_per_gap < 0:
            raise ValueError("max_repairs_per_gap must be >= 0")


@dataclass(frozen=True)
class KnowledgeGap:
    kind: str
    ctx: WorkingContext
    issue: FailureCategory | None = None
    prior: PromptInstance | None = None
    failed: str | None = None


class EventBus:
    """Fan-out of loop transitions to any number of subscriber queues."""

    def __init__(self):
        self._lock = threading.Lock()
        self._subscribers: list[queue.SimpleQueue] = []

    def subscribe(self) -> queue.SimpleQueue:
        q: queue.SimpleQueue = queue.SimpleQueue()
        with self._lock:
            self._subscribers.append(q)
        return q

    def unsubscribe(self, q: queue.SimpleQueue):
        with self._lock:
            if q in self._subscribers:
                self._subscribers.remove(q)

    def publish(self, event_type: str, **payload):
        event = {"type": event_type, **payload}
        with self._lock:
            subscribers = list(self._subscribers)
        for q in subscribers:
            q.put(event)


@dataclass
class Services:
    """Everything learn_object needs beyond the world itself."""

    gateway: LLMGateway
    ledger: TokenLedger
    templates: TemplateBank
    rules: RuleStore
    episodes: EpisodeLog
    oversight: OversightQueue
    lexicon: Lexicon | None = None
    prefs: PreferenceModel | None = None
    events: EventBus | None = None
    oversight_mode: str = ORACLE

    def emit(self, event_type: str, **payload):
        if self.events is not None:
            self.events.publish(event_type, **payload)


@dataclass
class ObjectOutcome:
    object_id: str
    noun: str
    method: str
    llm_calls: int = 0
    repairs: int = 0
    decisions: int = 0
    categories: list[str] = field(default_factory=list)
    rule_id: str | None = None
    goal_sentence: str | None = None
    error: str | None = None

    def to_json(self) -> dict:
        return {
            "object_id": self.object_id,
            "noun": self.noun,
            "method": self.method,
            "llm_calls": self.llm_calls,
            "repairs": self.repairs,
            "decisions": self.decisions,
            "categories": list(self.categories),
            "rule_id": self.rule_id,
            "goal": self.goal_sentence,
            "error": self.error,
        }


@dataclass
class TaskReport:
    scenario: str
    task: str
    outcomes: list[ObjectOutcome] = field(default_factory=list)
    category_tally: dict[str, int] = field(default_factory=dict)
    ledger: dict = field(default_factory=dict)
    final_digest: str = ""

    @property
    def llm_calls(self) -> int:
        return sum(o.llm_calls for o in self.outcomes)

    @property
    def repairs(self) -> int:
        return sum(o.repairs for o in self.outcomes)

    @property
    def oversight_decisions(self) -> int:
        return sum(o.decisions for o in self.outcomes)

    @property
    def rules_compiled(self) -> int:
        return sum(1 for o in self.outcomes if o.rule_id is not None and o.method != METHOD_RULE)

    def to_json(self) -> dict:
        return {
            "scenario": self.scenario,
            "task": self.task,
            "objects": [o.to_json() for o in self.outcomes],
            "llm_calls": self.llm_calls,
            "repairs": self.repairs,
            "oversight_decisions": self.oversight_decisions,
            "rules_compiled": self.rules_compiled,
            "category_tally": dict(sorted(self.category_tally.items())),
            "ledger": dict(self.ledger),
            "final_digest": self.final_digest,
        }


def build_context(
    world: WorldState, obj_id: str, task_name: str, steps: tuple[str, ...] = ()
) -> WorkingContext:
    obj = world.objects[obj_id]
    if obj.at == HELD:
        containment = HELD
    else:
        containment = f"{obj.rel} {world.locations[obj.at].name}"
    return WorkingContext(
        task_name=task_name,
        agent_room=world.locations[world.agent_at].name,
        focus_id=obj_id,
        focus_noun=obj.noun,
        focus_adjectives=obj.adjectives,
        focus_containment=containment,
        steps_so_far=steps,
    )


def detect_gap(
    ctx: WorkingContext,
    rules: RuleStore,
    cfg: LoopConfig = LoopConfig(),
    verified_goal: GoalExpr | None = None,
    planning_failed: bool = False,
) -> KnowledgeGap | None:
    """What knowledge is missing right now, if any.

    With a verified goal in hand, an action gap exists only when the planner
    is turned off or has failed; otherwise compiled rules decide whether a
    goal gap remains.
    """
    if verified_goal is not None:
        if not cfg.use_planner_first or planning_failed:
            return KnowledgeGap(GAP_MISSING_ACTION, ctx)
        return None
    if rules.match(ctx) is not None:
        return None
    return KnowledgeGap(GAP_MISSING_GOAL, ctx)


def _decide(proposal: Proposal, services: Services, cfg: LoopConfig):
    pid = services.oversight.submit(proposal)
    services.emit("proposal", proposal=proposal.to_json())
    if services.oversight_mode == ORACLE:
        if proposal.goal is not None and services.prefs is not None:
            decision = oracle_decide(proposal, services.prefs)
        else:
            decision = accept()
        services.oversight.decide(pid, decision)
    else:
        decision = services.oversight.await_decision(pid, timeout=cfg.oversight_timeout)
    services.emit("decision", proposal_id=pid, decision=decision.to_json())
    return decision


def _human_goal(ctx: WorkingContext, services: Services) -> GoalExpr | None:
    """Direct goal entry through the human channel: in oracle mode (and in
    serve mode, via the preference editor) the preference model is the
    human's statement of the goal."""
    if services.prefs is None:
        return None
    template = services.prefs.lookup(ctx.task_name, ctx.focus_noun)
    if template is None:
        return None
    return substitute_focus(template, ctx.focus_noun_phrase())


def _record_llm_episode(
    services: Services,
    ctx: WorkingContext,
    prompt: PromptInstance,
    response: str,
    report: VerificationReport,
    category: ResponseCategory,
    decision=None,
) -> int:
    return services.episodes.append(
        EpisodeRecord(
            kind=KIND_LLM,
            task=ctx.task_name,
            object_id=ctx.focus_id,
            template=prompt.kind,
            prompt=prompt.text,
            response=response,
            report=report.to_json(),
            category=category.value,
            decision=decision.to_json() if decision is not None else None,
            tokens_sent=estimate_tokens(prompt.text),
            tokens_received=estimate_tokens(response),
        )
    )


def _rejection_issue(reason: str | None) -> FailureCategory:
    wording = _REJECTION_WORDING.get(reason or "", "it was rejected")
    return FailureCategory(USER_REJECTED, wording)


def _elicit_goal(
    ctx: WorkingContext,
    world: WorldState,
    emb: Embodiment,
    cfg: LoopConfig,
    services: Services,
    outcome: ObjectOutcome,
) -> tuple[GoalExpr | None, VerificationReport | None, str]:
    """Prompt-verify-repair until an accepted goal, a Modify, or exhaustion.

    Returns (goal, report-if-accepted-from-llm, method). Every response is
    logged exactly once with its category.
    """
    template = services.templates.template_for(select_template(GAP_MISSING_GOAL))
    prompt = instantiate(template, ctx)
    repairs_left = cfg.max_repairs_per_gap
    while True:
        services.emit(
            "prompt", object_id=ctx.focus_id, template=prompt.kind, text=prompt.text
        )
        try:
            responses = services.gateway.complete(prompt, services.ledger)
        except GatewayError:
            services.episodes.append(
                EpisodeRecord(
                    kind=KIND_LLM,
                    task=ctx.task_name,
                    object_id=ctx.focus_id,
                    template=prompt.kind,
                    prompt=prompt.text,
                    tokens_sent=estimate_tokens(prompt.text),
                )
            )
            raise
        text = responses[0]
        outcome.llm_calls += 1
        services.emit("response", object_id=ctx.focus_id, text=text)
        report = verify(
            text, world, emb, services.lexicon, expect=KIND_GOAL, depth=cfg.depth_cap
        )
        services.emit(
            "verified", object_id=ctx.focus_id, viable=report.viable, report=report.to_json()
        )
        if report.viable:
            assert isinstance(report.parsed, GoalExpr)
            proposal = Proposal(
                proposal_id=0,
                sentence=render(report.parsed),
                goal=report.parsed,
                task_name=ctx.task_name,
                focus_id=ctx.focus_id,
                focus_noun=ctx.focus_noun,
                prompt=prompt.text,
                response=text,
                report=report.to_json(),
                bindings=dict(report.bindings or {}),
            )
            decision = _decide(proposal, services, cfg)
            outcome.decisions += 1
            category = categorize(report, decision, services.prefs)
            outcome.categories.append(category.value)
            _record_llm_episode(services, ctx, prompt, text, report, category, decision)
            if decision.kind == ACCEPT:
                return report.parsed, report, METHOD_LLM
            if decision.kind == MODIFY:
                return decision.goal, None, METHOD_HUMAN
            issue = _rejection_issue(decision.reason)
        else:
            outcome.categories.append(ResponseCategory.UNVIABLE.value)
            _record_llm_episode(
                services, ctx, prompt, text, report, ResponseCategory.UNVIABLE
            )
            issue = report.repair_issue
        if repairs_left > 0:
            gap = KnowledgeGap(
                GAP_REPAIR_NEEDED, ctx, issue=issue, prior=prompt, failed=text
            )
            prompt = build_repair(gap.prior, gap.failed, gap.issue)
            repairs_left -= 1
            outcome.repairs += 1
            continue
        return None, None, METHOD_UNLEARNED


def _achieve(
    goal: GoalExpr,
    ctx: WorkingContext,
    world: WorldState,
    emb: Embodiment,
    cfg: LoopConfig,
    services: Services,
    outcome: ObjectOutcome,
    bindings=None,
    compile_rule: bool = True,
) -> WorldState:
    """Make a verified goal true: plan and execute, or ask for action steps
    when the planner is off or defeated; then compile the rule."""
    if bindings is None:
        prebound = {
            np: ctx.focus_id for np in goal.phrases() if np.noun == ctx.focus_noun
        }
        bound = ground(goal, world, prebound=prebound)
        if not isinstance(bound, dict):
            outcome.error = f"goal failed to ground: {bound.referent}"
            outcome.method = METHOD_UNLEARNED
            return world
        bindings = bound
    grounded = to_grounded(goal, bindings)
    trace = None
    if cfg.use_planner_first:
        seq = plan(world, emb, grounded, cfg.depth_cap)
        if seq is not None:
            services.emit(
                "plan",
                object_id=ctx.focus_id,
                length=len(seq),
                actions=[a.render() for a in seq],
            )
            world, trace = execute(world, seq)
            services.emit(
                "executed",
                object_id=ctx.focus_id,
                digest=trace.final_digest,
                world=world_summary(world),
            )
    if trace is None:
        gap = detect_gap(ctx, services.rules, cfg, verified_goal=goal, planning_failed=True)
        assert gap is not None and gap.kind == GAP_MISSING_ACTION
        services.emit("gap", object_id=ctx.focus_id, kind=gap.kind)
        world, trace = _act_via_llm(grounded, ctx, world, emb, cfg, services, outcome)
        if trace is None:
            outcome.error = "goal verified but not achieved"
            outcome.method = METHOD_UNLEARNED
            return world
        services.emit(
            "executed",
            object_id=ctx.focus_id,
            digest=trace.final_digest,
            world=world_summary(world),
        )
    outcome.goal_sentence = render(goal)
    if compile_rule:
        rule = retrospect_compile(trace, ctx, goal, grounded)
        stored = services.rules.add(
            replace(rule, provenance=len(services.episodes.records()) or None)
        )
        outcome.rule_id = stored.rule_id
        services.emit("rule", object_id=ctx.focus_id, rule_id=stored.rule_id)
    return world


def _act_via_llm(
    grounded,
    ctx: WorkingContext,
    world: WorldState,
    emb: Embodiment,
    cfg: LoopConfig,
    services: Services,
    outcome: ObjectOutcome,
) -> tuple[WorldState, Trace | None]:
    """Ask the backend for one next step at a time until the goal holds."""
    steps: tuple[str, ...] = ()
    executed: list[tuple[str, object]] = []
    template = services.templates.template_for(select_template(GAP_MISSING_ACTION))
    for _ in range(cfg.max_action_steps):
        if goal_holds(world, grounded):
            break
        step_ctx = build_context(world, ctx.focus_id, ctx.task_name, steps)
        prompt = instantiate(template, step_ctx)
        repairs_left = cfg.max_repairs_per_gap
        applied = False
        while not applied:
            services.emit(
                "prompt", object_id=ctx.focus_id, template=prompt.kind, text=prompt.text
            )
            text = services.gateway.complete(prompt, services.ledger)[0]
            outcome.llm_calls += 1
            report = verify(
                text, world, emb, services.lexicon, expect=KIND_ACTION, depth=cfg.depth_cap
            )
            if report.viable:
                assert isinstance(report.parsed, ActionStep)
                proposal = Proposal(
                    proposal_id=0,
                    sentence=render_action(report.parsed),
                    goal=None,
                    task_name=ctx.task_name,
                    focus_id=ctx.focus_id,
                    focus_noun=ctx.focus_noun,
                    prompt=prompt.text,
                    response=text,
                    report=report.to_json(),
                )
                decision = _decide(proposal, services, cfg)
                outcome.decisions += 1
                category = categorize(report, decision, services.prefs)
                outcome.categories.append(category.value)
                _record_llm_episode(services, ctx, prompt, text, report, category, decision)
                if decision.kind == ACCEPT:
                    action = map_action_step(report.parsed, report.bindings or {}, world, emb)
                    try:
                        before = digest(world)
                        world = apply_action(world, action)
                        executed.append((before, action))
                        steps = steps + (action_phrase(report.parsed),)
                        applied = True
                        continue
                    except PreconditionError as exc:
                        issue = FailureCategory(
                            "not-affordable", f"precondition failed: {exc.failed_atom}"
                        )
                else:
                    issue = _rejection_issue(decision.reason)
            else:
                outcome.categories.append(ResponseCategory.UNVIABLE.value)
                _record_llm_episode(
                    services, ctx, prompt, text, report, ResponseCategory.UNVIABLE
                )
                issue = report.repair_issue
            if repairs_left > 0:
                prompt = build_repair(prompt, text, issue)
                repairs_left -= 1
                outcome.repairs += 1
                continue
            # Elicitation exhausted; the planner is the last resort.
            seq = plan(world, emb, grounded, cfg.depth_cap)
            if seq is None:
                return world, None
            world, trace = execute(world, seq)
            return world, Trace(
                steps=tuple(executed) + trace.steps,
                final_digest=trace.final_digest,
                final_world=world,
            )
    if goal_holds(world, grounded):
        return world, Trace(
            steps=tuple(executed), final_digest=digest(world), final_world=world
        )
    return world, None


def learn_object(
    ctx: WorkingContext,
    world: WorldState,
    emb: Embodiment,
    cfg: LoopConfig,
    services: Services,
) -> tuple[WorldState, ObjectOutcome]:
    """Run the full loop for one perceived object, returning the successor
    world and what happened."""
    obj = world.objects[ctx.focus_id]
    outcome = ObjectOutcome(object_id=ctx.focus_id, noun=obj.noun, method=METHOD_LLM)
    services.emit(
        "object_started",
        object_id=ctx.focus_id,
        noun=obj.noun,
        containment=ctx.focus_containment,
    )

    gap = detect_gap(ctx, services.rules, cfg)
    if gap is None:
        hit = services.rules.match(ctx)
        assert hit is not None
        rule, goal = hit
        outcome.method = METHOD_RULE
        world = _achieve(
            goal, ctx, world, emb, cfg, services, outcome, compile_rule=False
        )
        outcome.rule_id = rule.rule_id
        services.episodes.append(
            EpisodeRecord(
                kind=KIND_RULE,
                task=ctx.task_name,
                object_id=ctx.focus_id,
                rule_id=rule.rule_id,
                response=render(goal),
            )
        )
        services.emit("object_done", outcome=outcome.to_json())
        return world, outcome
    services.emit("gap", object_id=ctx.focus_id, kind=gap.kind)

    goal: GoalExpr | None = None
    report: VerificationReport | None = None
    method = METHOD_HUMAN
    if cfg.llm_before_human:
        goal, report, method = _elicit_goal(ctx, world, emb, cfg, services, outcome)
    if goal is None:
        goal = _human_goal(ctx, services)
        if goal is None:
            outcome.method = METHOD_UNLEARNED
            services.emit("object_done", outcome=outcome.to_json())
            return world, outcome
        method = METHOD_HUMAN
        services.episodes.append(
            EpisodeRecord(
                kind=KIND_HUMAN,
                task=ctx.task_name,
                object_id=ctx.focus_id,
                response=render(goal),
            )
        )
    outcome.method = method
    bindings = dict(report.bindings) if report is not None and report.bindings else None
    world = _achieve(goal, ctx, world, emb, cfg, services, outcome, bindings=bindings)
    services.emit("object_done", outcome=outcome.to_json())
    return world, outcome


def run_task(
    scenario: Scenario, cfg: LoopConfig, services: Services
) -> tuple[TaskReport, WorldState]:
    """Learn every perceived object in id order, folding world state through.

    World mutations persist across objects; the report tallies calls,
    repairs, decisions, rules and response categories for the whole run.
    """
    world = scenario.world
    emb = scenario.embodiment
    if services.lexicon is None:
        services.lexicon = Lexicon.from_scenario(scenario)
    report = TaskReport(scenario=scenario.name, task=scenario.task)
    object_ids = [p.object_id for p in perceive(world, emb)]
    services.emit(
        "task_started",
        scenario=scenario.name,
        task=scenario.task,
        objects=object_ids,
        world=world_summary(world),
    )
    for oid in object_ids:
        ctx = build_context(world, oid, scenario.task)
        world, outcome = learn_object(ctx, world, emb, cfg, services)
        report.outcomes.append(outcome)
        for category in outcome.categories:
            report.category_tally[category] = report.category_tally.get(category, 0) + 1
    report.ledger = services.ledger.snapshot()
    report.final_digest = digest(world)
    services.emit("task_done", report=report.to_json())
    return report, world
