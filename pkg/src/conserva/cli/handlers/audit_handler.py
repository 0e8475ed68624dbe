"""Handler for the audit command."""

import asyncio
from typing import Any, Dict

from ...dataset import load
from .base_handler import CommandHandler, find_datasets
from .generate_handler import audit_row


class AuditCommandHandler(CommandHandler):
    """Ground-truth constancy of every stored dataset"""

    async def handle(self, args: Dict[str, Any]) -> None:
        root = self.dataset_root(args)
        paths = find_datasets(root)
        if not paths:
            raise FileNotFoundError(f"no datasets under {root}")

        rows = []
        for path in paths:
            ds = await asyncio.to_thread(load, path)
            rows.append(audit_row(ds))
        print(self.formatter.format_audit(rows, title=f"Ground-truth audit of {root}"))
