"""Exception hierarchy shared by all scoutnet modules."""


class ScoutnetError(Exception):
    """Base class for every error raised by this package."""


class LatticeError(ScoutnetError):
    """A lattice violates a structural invariant (builder or loader)."""


class TopologyError(LatticeError):
    """A topology document failed to parse or validate."""


class PathBudgetError(ScoutnetError):
    """Admissible path enumeration exceeded the configured budget."""

    def __init__(self, budget: int, count: int):
        super().__init__(
            f"path budget exceeded: generated {count} fronts with budget {budget}"
        )
        self.budget = budget
        self.count = count


class ProtocolOrderError(ScoutnetError):
    """An operation was applied out of protocol order (e.g. closing twice)."""


class DarkTrialError(ScoutnetError):
    """Every detector interfered to (near) zero intensity; no selection possible."""


class DeadlockError(ScoutnetError):
    """The reverse-query barrier can never be satisfied (cyclic trace graph)."""


class ConfigError(ScoutnetError):
    """A run configuration is malformed or incomplete."""
