from dataclasses import dataclass, field, replace
from typing import Tuple

Triple = Tuple[float, float, float]


@dataclass(frozen=True)
class DemandTotals:
    """Summed preference levels of the services assigned to one server at one timestamp."""
    gamma_c: int = 0
    gamma_s: int = 0
    gamma_b: int = 0

    def as_triple(self) -> Tuple[int, int, int]:
        return (self.gamma_c, self.gamma_s, self.gamma_b)

    def add(self, prefs: Tuple[int, int, int]) -> "DemandTotals":
        return DemandTotals(self.gamma_c + prefs[0], self.gamma_s + prefs[1], self.gamma_b + prefs[2])


@dataclass(frozen=True)
class LoadState:
    """Utilizations of one server at the start of timestamp t.

    history ends with the current rho triple and holds at most k entries.
    """
    eid: int
    t: int
    rho: Triple
    history: Tuple[Triple, ...] = field(default_factory=tuple)

    @property
    def rho_c(self) -> float:
        return self.rho[0]

    @property
    def rho_s(self) -> float:
        return self.rho[1]

    @property
    def rho_b(self) -> float:
        return self.rho[2]

    def with_current(self, rho: Triple) -> "LoadState":
        """Same timestamp, replaced utilizations (last history entry follows)."""
        history = self.history[:-1] + (rho,) if self.history else (rho,)
        return replace(self, rho=rho, history=history)

    def advanced(self, rho: Triple, k: int) -> "LoadState":
        """State for t+1 with rho appended to a history capped at k entries."""
        history = (self.history + (rho,))[-k:]
        return LoadState(eid=self.eid, t=self.t + 1, rho=rho, history=history)
