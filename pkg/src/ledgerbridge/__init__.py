"""ledgerbridge: a desk-scale simulation of robot pub/sub networks joined
through a permissioned ledger.

Submodules:
    clock     deterministic 1 ms event loop
    ledger    identities, ordering, hash chain, world state, events
    bus       host-local publish/subscribe
    netem     point-to-point links with delay, jitter and loss
    bridge    event-driven and polling relays between bus and ledger
    drones    single-integrator drones, waypoint controller, trajectories
    config    scenario configuration (JSON) with materialized defaults
    scenario  wiring + the scenario runner producing run reports
    report    CSV / JSON / chain-dump writers
    compare   events-vs-polling comparison and speed sweeps
    gateway   live session server speaking newline-delimited JSON
    cli       `ledgerbridge` command line entry point
"""

from . import (  # noqa: F401
    bridge,
    bus,
    clock,
    compare,
    config,
    drones,
    ledger,
    netem,
    report,
    scenario,
)
from .errors import (  # noqa: F401
    BadSignature,
    ConfigInvalid,
    EmptySeries,
    LedgerError,
    NotAuthorized,
    Unauthorized,
    UnknownBlock,
    UnknownDrone,
    UnknownLink,
)

__version__ = "0.1.0"
