"""Problem registry addressable by name, plus the concrete problem families."""
from __future__ import annotations

from ..errors import ConfigError
from .lsmop import LsmopProblem
from .synthetic import ShiftClusterProblem
from .zdt import ZdtProblem

__all__ = [
    "LsmopProblem",
    "ShiftClusterProblem",
    "ZdtProblem",
    "available_problems",
    "make_problem",
]

_ZDT_VARIANTS = (1, 2, 3, 4, 6)
_LSMOP_VARIANTS = tuple(range(1, 10))


def available_problems() -> list[str]:
    names = [f"zdt{v}" for v in _ZDT_VARIANTS]
    names += [f"lsmop{v}" for v in _LSMOP_VARIANTS]
    names.append("shift")
    return names


def make_problem(name: str, d: int | None = None, m: int | None = None, **kwargs):
    """Build a problem by registry name, e.g. ``make_problem("zdt1", d=30)``.

    ZDT is always bi-objective; LSMOP defaults to m=3 and d=100*m; the shift
    family defaults to d=8, m=2.
    """
    key = name.strip().lower()
    if key.startswith("zdt"):
        variant = int(key[3:])
        if variant not in _ZDT_VARIANTS:
            raise ConfigError(f"unknown problem {name!r}")
        if m not in (None, 2):
            raise ConfigError("ZDT problems are bi-objective; omit m or pass m=2")
        return ZdtProblem(variant, d=30 if d is None else d)
    if key.startswith("lsmop"):
        variant = int(key[5:])
        if variant not in _LSMOP_VARIANTS:
            raise ConfigError(f"unknown problem {name!r}")
        m = 3 if m is None else m
        return LsmopProblem(variant, d=100 * m if d is None else d, m=m)
    if key == "shift":
        return ShiftClusterProblem(d=8 if d is None else d, m=2 if m is None else m, **kwargs)
    raise ConfigError(f"unknown problem {name!r} (known: {', '.join(available_problems())})")
