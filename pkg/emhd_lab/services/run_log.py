"""
Provenance log for experiment runs.

One JSON object per line: when a run started, which seed and config it
used, how it ended.
"""
from datetime import datetime
from typing import Any, Dict, List, Optional
import json
from pathlib import Path


class RunLogService:
    """Append-only JSON-lines record of run events.

    Args:
        log_path: File receiving the events; its directory is created
    """

    def __init__(self, log_path: str = "out/run_log.jsonl"):
        self.log_path = Path(log_path)
        self.log_path.parent.mkdir(parents=True, exist_ok=True)

    def log_event(self, event: str, experiment: str,
                  details: Optional[Dict[str, Any]] = None) -> None:
        """Record one event.

        Args:
            event: What happened (start, finish, abort, ...)
            experiment: Name of the experiment the event belongs to
            details: Extra JSON-serializable values
        """
        log_entry = {
            "timestamp": datetime.now().isoformat(),
            "event": event,
            "experiment": experiment,
            "details": details or {},
        }

        with open(self.log_path, "a", encoding="utf-8") as f:
            f.write(json.dumps(log_entry, default=str) + "\n")

    def log_start(self, experiment: str, seed: int, config_echo: str) -> None:
        self.log_event("start", experiment, {"seed": seed, "config_echo": config_echo})

    def log_finish(self, experiment: str, summary: Optional[Dict[str, Any]] = None) -> None:
        self.log_event("finish", experiment, summary)

    def log_abort(self, experiment: str, reason: str, time: Optional[float] = None) -> None:
        self.log_event("abort", experiment, {"reason": reason, "time": time})

    def read_events(self) -> List[Dict[str, Any]]:
        """All events recorded so far, oldest first."""
        if not self.log_path.exists():
            return []
        with open(self.log_path, encoding="utf-8") as f:
            return [json.loads(line) for line in f if line.strip()]
