"""Named parametric time schedules.

Window widths phi(t) and series arguments psi(t) are restricted to three
declarative forms so experiment specs stay portable and auditable:

    "pow:G"   -> t ** G        (0 < G)
    "lin:A"   -> A * t         (0 < A)
    "const:C" -> C             (0 < C)
"""

from __future__ import annotations

from dataclasses import dataclass


class ScheduleError(ValueError):
    pass


@dataclass(frozen=True)
class Schedule:
    form: str     # "pow" | "lin" | "const"
    param: float

    def __call__(self, t: float) -> float:
        if self.form == "pow":
            return float(t) ** self.param
        if self.form == "lin":
            return self.param * float(t)
        return self.param

    @property
    def sublinear(self) -> bool:
        """Whether the schedule is o(t), as the sublinear-window laws require."""
        return self.form == "const" or (self.form == "pow" and self.param < 1.0)

    def __str__(self) -> str:
        return f"{self.form}:{self.param:g}"


def parse_schedule(text: str) -> Schedule:
    try:
        form, raw = text.split(":", 1)
        param = float(raw)
    except ValueError as exc:
        raise ScheduleError(
            f"schedule {text!r} is not of the form pow:G | lin:A | const:C"
        ) from exc
    if form not in ("pow", "lin", "const"):
        raise ScheduleError(f"unknown schedule form {form!r}")
    if param <= 0:
        raise ScheduleError("schedule parameter must be positive")
    return Schedule(form=form, param=param)
