"""Base-learner implementations; each module exposes the same function names."""

from . import enet, svm

__all__ = [
    "enet",
    "svm",
]
