"""Maps classifier verdicts onto operator actions.

Rules are an ordered list evaluated first-match-wins; a verdict no rule
matches yields an implicit LOG_ONLY action, so every verdict produces
exactly one action. Actions are emitted as records for an external
consumer, never enforced here.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from typing import Optional

from .errors import InvalidProbability, InvalidRule
from .features import Label
from .sessions import MalwareCategory


class ActionKind(enum.Enum):
    BLOCK_GATEWAY_TRAFFIC = "block_gateway_traffic"
    NOTIFY_ADMIN = "notify_admin"
    LOG_ONLY = "log_only"

    @classmethod
    def from_wire(cls, name: str) -> "ActionKind":
        for member in cls:
            if member.value == name:
                return member
        raise ValueError(f"unknown action {name!r}")


@dataclass(frozen=True)
class Verdict:
    gateway_id: str
    window_start_micros: int
    category: MalwareCategory
    label: Label
    score: float

    def __post_init__(self):
        if not (0.0 <= self.score <= 1.0):
            raise InvalidProbability(f"verdict score must be in [0, 1], got {self.score}")


@dataclass(frozen=True)
class PolicyRule:
    label: Label
    action: ActionKind
    category: Optional[MalwareCategory] = None
    min_score: Optional[float] = None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.min_score is not None and not (0.0 <= self.min_score <= 1.0):
            raise InvalidRule(f"min_score must be in [0, 1], got {self.min_score}")

    def matches(self, verdict: Verdict) -> bool:
        if self.label is not verdict.label:
            return False
        if self.category is not None and self.category is not verdict.category:
            return False
        if self.min_score is not None and verdict.score < self.min_score:
            return False
        return True


@dataclass(frozen=True)
class PolicyAction:
    action: ActionKind
    gateway_id: str
    verdict: Verdict
    rule_index: int  # -1 when no rule matched
    issued_at: Optional[str] = None


def evaluate(rules: list, verdict: Verdict, issued_at: Optional[str] = None) -> list:
    """Exactly one action per verdict, from the first matching rule."""
    for index, rule in enumerate(rules):
        if rule.matches(verdict):
            return [PolicyAction(action=rule.action, gateway_id=verdict.gateway_id,
                                 verdict=verdict, rule_index=index, issued_at=issued_at)]
    return [PolicyAction(action=ActionKind.LOG_ONLY, gateway_id=verdict.gateway_id,
                         verdict=verdict, rule_index=-1, issued_at=issued_at)]


_RULE_KEYS = {"category", "label", "min_score", "action", "params"}


def parse_rules(text: str) -> list:
    """JSON array of {label, action, category?, min_score?, params?} objects."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidRule(f"rules file is not valid JSON: {exc}") from exc
    if not isinstance(raw, list):
        raise InvalidRule("rules file must be a JSON array")

    rules = []
    for i, obj in enumerate(raw):
        if not isinstance(obj, dict):
            raise InvalidRule(f"rule {i}: must be an object")
        unknown = set(obj) - _RULE_KEYS
        if unknown:
            raise InvalidRule(f"rule {i}: unknown keys {sorted(unknown)}")
        try:
            label = Label.from_wire(obj["label"])
            action = ActionKind.from_wire(obj["action"])
        except KeyError as exc:
            raise InvalidRule(f"rule {i}: missing key {exc}") from exc
        except (TypeError, ValueError) as exc:
            raise InvalidRule(f"rule {i}: {exc}") from exc
        category = None
        if obj.get("category") is not None:
            try:
                category = MalwareCategory.from_wire(obj["category"])
            except ValueError as exc:
                raise InvalidRule(f"rule {i}: {exc}") from exc
        min_score = obj.get("min_score")
        if min_score is not None:
            if isinstance(min_score, bool) or not isinstance(min_score, (int, float)):
                raise InvalidRule(f"rule {i}: min_score must be a number")
            min_score = float(min_score)
        params = obj.get("params") or {}
        if not isinstance(params, dict):
            raise InvalidRule(f"rule {i}: params must be an object")
        try:
            rules.append(PolicyRule(label=label, action=action, category=category,
                                    min_score=min_score, params=params))
        except InvalidRule as exc:
            raise InvalidRule(f"rule {i}: {exc}") from exc
    return rules


def load_rules(path) -> list:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_rules(fh.read())


def action_to_row(act: PolicyAction) -> dict:
    """Flat JSON-lines row: the action plus its triggering verdict."""
    return {
        "action": act.action.value,
        "gateway": act.gateway_id,
        "category": act.verdict.category.value,
        "window_start_us": act.verdict.window_start_micros,
        "label": act.verdict.label.value,
        "score": act.verdict.score,
        "rule_index": act.rule_index,
        "issued_at": act.issued_at,
    }
