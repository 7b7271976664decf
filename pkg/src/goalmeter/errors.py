"""Shared exception base for the toolkit.

Concrete error classes live next to the operations that raise them;
they all derive from GoalMeterError so callers (notably the CLI) can
catch toolkit failures without swallowing unrelated bugs.
"""


class GoalMeterError(Exception):
    pass
