"""Volumes, hyperareas and separability probabilities of two-qubit and qubit-qutrit states."""

__version__ = "0.1.0"

from . import core, integrate, measures, scenarios, weightfit  # noqa: E402,F401
