"""Structured failure types shared across the optimizer modules."""


class Infeasible(RuntimeError):
    """A constraint set admits no solution; carries the failing constraint name."""

    def __init__(self, constraint, detail=""):
        self.constraint = constraint
        self.detail = detail
        msg = f"infeasible: {constraint}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)
