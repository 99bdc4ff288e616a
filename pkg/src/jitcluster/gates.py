"""Entangling procedures and their cluster-accounting constants.

``c1`` is the number of qubits lost from the main buffer length after a
successful attempt, ``c2`` the number removed after a failed one.
"""

from __future__ import annotations

from dataclasses import dataclass

from jitcluster.errors import ConstructionUnsupportedError


@dataclass(frozen=True)
class EntanglingProcedure:
    name: str
    c1: int
    c2: int
    broker_client: bool = False

    def __post_init__(self) -> None:
        for field_name in ("c1", "c2"):
            value = getattr(self, field_name)
            if isinstance(value, bool) or not isinstance(value, int):
                raise ValueError(f"{field_name} must be an integer, got {value!r}")
            if value < 0:
                raise ValueError(f"{field_name} must be nonnegative, got {value}")
        if self.broker_client and (self.c1 != 0 or self.c2 != 0):
            raise ValueError("broker-client procedures must have c1 = c2 = 0")


TYPE_I_FUSION = EntanglingProcedure("Type-I fusion", 2, 2)
TYPE_II_FUSION = EntanglingProcedure("Type-II fusion", 3, 2)
DOUBLE_HERALDING = EntanglingProcedure("Double-heralding", 1, 1)
REPEAT_UNTIL_SUCCESS = EntanglingProcedure("Repeat-until-success", 1, 0)
BROKER_CLIENT = EntanglingProcedure("Broker-client", 0, 0, broker_client=True)

_CATALOG = (TYPE_I_FUSION, TYPE_II_FUSION, DOUBLE_HERALDING, REPEAT_UNTIL_SUCCESS, BROKER_CLIENT)

# CLI short names
ALIASES = {
    "fusion1": TYPE_I_FUSION,
    "fusion2": TYPE_II_FUSION,
    "dh": DOUBLE_HERALDING,
    "rus": REPEAT_UNTIL_SUCCESS,
    "bc": BROKER_CLIENT,
}


def catalog() -> list[EntanglingProcedure]:
    """The five built-in procedures, in table order."""
    return list(_CATALOG)


def get_procedure(name: str) -> EntanglingProcedure:
    """Look up a procedure by short alias or full name, case-insensitively."""
    key = name.strip().lower()
    if key in ALIASES:
        return ALIASES[key]
    for proc in _CATALOG:
        if proc.name.lower() == key:
            return proc
    known = ", ".join(sorted(ALIASES))
    raise ValueError(f"unknown entangling procedure {name!r} (known: {known})")


def supports_2d_construction(proc: EntanglingProcedure) -> bool:
    # Failed vertical attempts are cleaned up by Z-measuring one cherry per
    # chain, which only works if a failure removes at most one qubit.
    return proc.c2 <= 1


def require_2d_construction(proc: EntanglingProcedure) -> None:
    if not supports_2d_construction(proc):
        raise ConstructionUnsupportedError(
            f"{proc.name} has c2 = {proc.c2} > 1; vertical edges cannot be built "
            "without breaking the horizontal chains"
        )
