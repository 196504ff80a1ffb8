"""Exception taxonomy shared across the package."""


class TaskLearnError(Exception):
    """Base class for all package errors."""


class ScenarioError(TaskLearnError):
    """Scenario document failed validation. Carries one message per problem."""

    def __init__(self, problems: list[str]):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class PreconditionError(TaskLearnError):
    """An action was applied in a state where a precondition does not hold."""

    def __init__(self, action: str, failed_atom: str):
        self.action = action
        self.failed_atom = failed_atom
        super().__init__(f"{action}: {failed_atom}")


class TemplateError(TaskLearnError):
    """Prompt instantiation could not fill a slot."""

    def __init__(self, slot: str):
        self.slot = slot
        super().__init__(f"missing slot value: {slot}")


class GatewayError(TaskLearnError):
    """Base class for completion-backend failures."""


class BudgetExhaustedError(GatewayError):
    pass


class ScriptExhaustedError(GatewayError):
    pass


class ReplayKeyMissingError(GatewayError):
    """The replay corpus has no entry for the prompt. Usually fixture drift."""

    def __init__(self, key: str, prompt: str):
        self.key = key
        self.prompt = prompt
        super().__init__(f"no replay entry for key {key} (prompt: {prompt[:80]}...)")


class BackendConnectionError(GatewayError):
    pass


class StorageError(TaskLearnError):
    pass


class NotFoundError(TaskLearnError):
    pass


class CompileError(TaskLearnError):
    """Retrospection was asked to compile a rule from a trace that did not
    achieve the goal."""


class OversightError(TaskLearnError):
    pass


class UnknownProposalError(OversightError):
    pass


class AlreadyDecidedError(OversightError):
    pass


class DecisionTimeoutError(OversightError):
    pass


class InvalidDecisionError(OversightError):
    """A Modify decision carried a goal that fails validation."""

    def __init__(self, problems: list[str]):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))
