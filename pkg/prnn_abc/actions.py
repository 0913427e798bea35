from __future__ import annotations

import argparse
from argparse import Action
from argparse import ArgumentError
from argparse import Namespace

from .types import Grid


class OnOffAction(Action):
    """A Custom action that accepts `on` or `off` (case insensitive)
    and stores a boolean.
    """

    def __call__(
        self: OnOffAction,
        parser: argparse.ArgumentParser,  # noqa: ARG002
        namespace: Namespace,
        values: str,
        option_string: str | None = None,  # noqa: ARG002
    ) -> None:
        value = values.lower()
        if value not in {"on", "off"}:
            raise ArgumentError(self, f"can only be 'on' or 'off', got {values!r}")
        setattr(namespace, self.dest, value == "on")


class GridAction(Action):
    """Parse a sweep axis such as ``vartheta=10,20,40``.

    The option may be repeated, or axes separated by ``;``, and each axis is
    merged into one ordered mapping of key -> values.
    """

    def __call__(
        self: GridAction,
        parser: argparse.ArgumentParser,  # noqa: ARG002
        namespace: Namespace,
        values: str,
        option_string: str | None = None,  # noqa: ARG002
    ) -> None:
        grid: dict[str, list[float]] = dict(getattr(namespace, self.dest, None) or {})
        axes = [axis.strip() for axis in values.split(";") if axis.strip()]
        if not axes:
            raise ArgumentError(self, "grid is empty, expected 'key=v1,v2,...'")
        for axis in axes:
            key, sep, raw = axis.partition("=")
            key = key.strip()
            if not sep or not key:
                raise ArgumentError(self, f"expected 'key=v1,v2,...', got {axis!r}")
            grid[key] = _parse_values(self, key, raw)
        setattr(namespace, self.dest, grid)


def _parse_values(action: Action, key: str, raw: str) -> list[float]:
    items = [item.strip() for item in raw.split(",") if item.strip()]
    if not items:
        raise ArgumentError(action, f"no values given for {key!r}")
    try:
        return [float(item) for item in items]
    except ValueError:
        raise ArgumentError(action, f"values for {key!r} must be numbers") from None


def grid_size(grid: Grid) -> int:
    size = 1
    for values in grid.values():
        size *= len(values)
    return size
