"""tasklearn: goal-knowledge extraction from language models with grounded
verification, planning, human oversight, and rule compilation."""

__version__ = "0.1.0"

from tasklearn.agent import LoopConfig, Services, learn_object, run_task
from tasklearn.gateway import BackendConfig, GenerationParams, LLMGateway, TokenLedger
from tasklearn.memory import EpisodeLog, EpisodeRecord, ProceduralRule, RuleStore, WorkingContext
from tasklearn.oversight import Decision, OversightQueue, PreferenceModel, Proposal, oracle_decide
from tasklearn.parser import ActionStep, GoalExpr, Lexicon, parse_action, parse_goal, render
from tasklearn.planner import execute, plan, retrospect_compile
from tasklearn.prompts import PromptInstance, PromptTemplate, TemplateBank, build_repair, instantiate
from tasklearn.verifier import ResponseCategory, VerificationReport, categorize, ground, verify
from tasklearn.world import (
    Embodiment,
    Location,
    ObjectInstance,
    Scenario,
    WorldState,
    apply_action,
    goal_holds,
    legal_actions,
    load_scenario,
    load_scenario_file,
    perceive,
)

__all__ = [name for name in dir() if not name.startswith("_")]
