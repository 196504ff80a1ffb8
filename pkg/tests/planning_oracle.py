"""Independent planning oracle: iterative deepening over the full
legal-action space, with no pruning and no code shared with the planner's
search. Deliberately slow; only for small fixtures."""

from tasklearn.world import apply_action, goal_holds, legal_actions, state_key


def oracle_plan_length(world, emb, goal, max_depth: int = 12) -> int | None:
    """Length of a shortest plan, or None if none exists within max_depth."""
    for limit in range(max_depth + 1):
        found = _dfs(world, emb, goal, limit, {state_key(world): limit})
        if found:
            return limit
    return None


def _dfs(world, emb, goal, remaining: int, best_seen: dict) -> bool:
    if goal_holds(world, goal):
        return True
    if remaining == 0:
        return False
    for action in legal_actions(world, emb):
        succ = apply_action(world, action)
        key = state_key(succ)
        depth = best_seen.get(key)
        new_remaining = remaining - 1
        if depth is not None and depth >= new_remaining:
            continue
        best_seen[key] = new_remaining
        if _dfs(succ, emb, goal, new_remaining, best_seen):
            return True
    return False
