from __future__ import absolute_import

from typing import Any, Dict, Optional

class JsonableError(Exception):
    """Base of every error the workbench raises on purpose.

    `code` is a stable machine-readable identifier; `exit_status` is what a
    management command exits with when the error escapes to it (2 for
    configuration and I/O trouble, 1 for a failed check).
    """
    code = 'error'
    exit_status = 2

    def __init__(self, error, code=None):
        # type: (str, Optional[str]) -> None
        super(JsonableError, self).__init__(error)
        self.error = error
        if code is not None:
            self.code = code

    def __str__(self):
        # type: () -> str
        return self.to_json_error_msg()

    def to_json_error_msg(self):
        # type: () -> str
        return self.error

    def to_dict(self):
        # type: () -> Dict[str, Any]
        return {'result': 'error', 'code': self.code, 'msg': self.to_json_error_msg()}

class ConfigError(JsonableError):
    code = 'config_error'

class CheckFailed(JsonableError):
    code = 'check_failed'
    exit_status = 1

class VdfError(JsonableError):
    code = 'vdf_error'

class PuzzleError(JsonableError):
    code = 'puzzle_error'

class SolveCancelled(PuzzleError):
    code = 'cancelled'
    exit_status = 1

class BudgetExhausted(PuzzleError):
    code = 'budget_exhausted'
    exit_status = 1

class IdentityError(JsonableError):
    code = 'identity_error'

class ChainError(JsonableError):
    code = 'chain_error'

class BlockAssemblyError(ChainError):
    code = 'assembly_refused'

class LedgerError(JsonableError):
    code = 'ledger_error'

class InsufficientBalance(LedgerError):
    code = 'insufficient_balance'

class AlreadyStaked(LedgerError):
    code = 'already_staked'

class NotValidator(LedgerError):
    code = 'not_validator'

class StakeLocked(LedgerError):
    code = 'locked'

class DuplicateEvidence(LedgerError):
    code = 'duplicate_evidence'

class StaleEvidence(LedgerError):
    code = 'stale_evidence'

class InvalidTransaction(LedgerError):
    code = 'invalid_transaction'

class LedgerInvariantError(LedgerError):
    code = 'ledger_invariant'

class EconError(JsonableError):
    code = 'econ_error'

class BoundsError(JsonableError):
    code = 'bounds_error'

class SimError(JsonableError):
    code = 'sim_error'
