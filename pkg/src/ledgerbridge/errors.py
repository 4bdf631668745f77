"""Error types shared across the simulator."""


class LedgerError(Exception):
    """Base class for ledger-side rejections."""


class BadSignature(LedgerError):
    """Transaction signature does not verify against the creator's secret."""


class Unauthorized(LedgerError):
    """Creator unknown, not a channel member, or key outside its write scope."""


class UnknownBlock(LedgerError):
    """Requested block number can never exist (negative)."""


class UnknownLink(Exception):
    """send() on a (src, dst) pair with no configured link."""


class ConfigInvalid(Exception):
    """Scenario config failed validation; message names the offending rule."""


class EmptySeries(Exception):
    """Summary statistics requested over an empty series."""


class UnknownDrone(Exception):
    """Gateway command addressed to a drone id that is not in the scenario."""


class NotAuthorized(Exception):
    """Gateway client identity lacks command scope for the target drone."""
