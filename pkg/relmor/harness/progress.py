#!/usr/bin/env python3
"""
Grid Progress Tracking
Thread-safe status of every (method, order, seed) cell of an experiment
"""

import logging
import threading
from dataclasses import dataclass, field
from datetime import datetime
from typing import Any, Dict, List, Optional

logger = logging.getLogger(__name__)


@dataclass
class CellProgress:
    """Progress information for one grid cell"""
    cell_id: str
    method: str
    order: int
    seed: int
    status: str  # pending, running, completed, failed
    start_time: Optional[datetime] = None
    end_time: Optional[datetime] = None
    error_message: Optional[str] = None
    details: Dict[str, Any] = field(default_factory=dict)

    @property
    def duration_seconds(self) -> float:
        if self.start_time is None:
            return 0.0
        end = self.end_time or datetime.now()
        return (end - self.start_time).total_seconds()


class GridProgressTracker:
    """Progress tracker for a method x order x seed grid"""

    def __init__(self):
        self.cells: Dict[str, CellProgress] = {}
        self.session_id = datetime.now().strftime("%Y%m%d_%H%M%S")
        self._lock = threading.Lock()

    @staticmethod
    def cell_id(method: str, order: int, seed: int) -> str:
        return f"{method}:r{order}:s{seed}"

    def register(self, method: str, order: int, seed: int) -> str:
        cid = self.cell_id(method, order, seed)
        with self._lock:
            self.cells[cid] = CellProgress(cid, method, order, seed, "pending")
        return cid

    def start_cell(self, cell_id: str) -> None:
        with self._lock:
            cell = self.cells[cell_id]
            cell.status = "running"
            cell.start_time = datetime.now()
        logger.debug(f"Started cell: {cell_id}")

    def complete_cell(self, cell_id: str, details: Optional[Dict[str, Any]] = None) -> None:
        with self._lock:
            cell = self.cells[cell_id]
            cell.status = "completed"
            cell.end_time = datetime.now()
            if details:
                cell.details.update(details)
        logger.info(f"Cell completed: {cell_id} ({cell.duration_seconds:.2f}s)")

    def fail_cell(self, cell_id: str, error_message: str) -> None:
        with self._lock:
            cell = self.cells[cell_id]
            cell.status = "failed"
            cell.end_time = datetime.now()
            cell.error_message = error_message
        logger.error(f"Cell failed: {cell_id} - {error_message}")

    def failed_cells(self) -> List[CellProgress]:
        with self._lock:
            return [c for c in self.cells.values() if c.status == "failed"]

    def get_overall_progress(self) -> Dict[str, Any]:
        with self._lock:
            statuses = [c.status for c in self.cells.values()]
            total = len(statuses)
            completed = statuses.count("completed")
            failed = statuses.count("failed")
            running = statuses.count("running")
            return {
                "total_cells": total,
                "completed_cells": completed,
                "failed_cells": failed,
                "running_cells": running,
                "pending_cells": total - completed - failed - running,
                "overall_percentage": 100.0 * (completed + failed) / total if total else 0.0,
                "session_id": self.session_id,
            }

    def log_summary(self) -> None:
        overall = self.get_overall_progress()
        logger.info("=" * 50)
        logger.info(f"Grid session {overall['session_id']}: "
                    f"{overall['completed_cells']}/{overall['total_cells']} cells completed")
        if overall["failed_cells"]:
            logger.warning(f"Failed cells: {overall['failed_cells']}")
            for cell in self.failed_cells():
                logger.warning(f"   ❌ {cell.cell_id}: {cell.error_message}")
        logger.info("=" * 50)

