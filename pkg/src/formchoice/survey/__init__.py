"""Survey orchestration: engine, persistence, HTTP service."""

from .api import create_app
from .engine import (
    FORM_ANSWER_VALUES,
    PURCHASE_ANSWER_VALUES,
    AnswerError,
    FinalizeReport,
    Session,
    StateError,
    Study,
    replay_form_models,
    replay_study,
)
from .store import EventStore, read_events

__all__ = [
    "FORM_ANSWER_VALUES",
    "PURCHASE_ANSWER_VALUES",
    "AnswerError",
    "EventStore",
    "FinalizeReport",
    "Session",
    "StateError",
    "Study",
    "create_app",
    "read_events",
    "replay_form_models",
    "replay_study",
]
