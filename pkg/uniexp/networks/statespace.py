from functools import cached_property
from typing import Iterator, Literal, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict

from uniexp.exceptions import InputError

ModelKind = Literal["imm_death", "moran", "sir", "seirs", "sir_birth"]


class StateSpaceMap(BaseModel):
    """
    Bijection between model states and 0-based matrix indices.

    Attributes:
        kind (str): Model family.
        dims (tuple[int, ...]): Model-specific sizes, e.g. (n_pop,) or
            (S0, I0, S1, I1) for a birth statespace.
        labels (tuple[str, ...]): Species names, one per state coordinate.
        states (np.ndarray): Integer array of shape (n_states, len(labels)).
        coffin (Optional[int]): Index of the absorbing coffin state, always last.
    """

    kind: ModelKind
    dims: tuple[int, ...]
    labels: tuple[str, ...]
    states: np.ndarray
    coffin: Optional[int] = None

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    @property
    def d(self) -> int:
        return self.states.shape[0] + (1 if self.coffin is not None else 0)

    @cached_property
    def lookup(self) -> dict[tuple[int, ...], int]:
        return {tuple(int(x) for x in row): i for i, row in enumerate(self.states)}

    def index_of(self, state: Sequence[int]) -> int:
        """
        Raises:
            InputError: If the state is not part of the statespace.
        """
        try:
            return self.lookup[tuple(int(x) for x in state)]
        except KeyError:
            raise InputError(f"state {tuple(state)} is not in the {self.kind} statespace") from None

    def indices_of(self, states: np.ndarray) -> np.ndarray:
        """Vectorised index_of; unknown states map to the coffin, or -1 without one."""
        missing = self.coffin if self.coffin is not None else -1
        return np.fromiter(
            (self.lookup.get(tuple(int(x) for x in row), missing) for row in states),
            dtype=np.int64,
            count=len(states),
        )

    def state_of(self, index: int) -> Optional[tuple[int, ...]]:
        """
        State tuple at `index`; None for the coffin.

        Raises:
            InputError: If the index is out of range.
        """
        if not 0 <= index < self.d:
            raise InputError(f"index {index} out of range for d={self.d}")
        if index == self.coffin:
            return None
        return tuple(int(x) for x in self.states[index])

    def column(self, label: str) -> np.ndarray:
        """Species counts over the non-coffin states."""
        return self.states[:, self.labels.index(label)]

    def point_mass(self, state: Sequence[int]) -> np.ndarray:
        nu = np.zeros(self.d)
        nu[self.index_of(state)] = 1.0
        return nu

    def rows(self) -> Iterator[tuple]:
        """(index, *state, is_coffin) rows with 1-based indices, for CSV export."""
        for i, row in enumerate(self.states):
            yield (i + 1, *(int(x) for x in row), 0)
        if self.coffin is not None:
            yield (self.coffin + 1, *([""] * len(self.labels)), 1)
