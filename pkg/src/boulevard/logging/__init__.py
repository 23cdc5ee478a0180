from .run_ledger import RunLedger

__all__ = ["RunLedger"]
