"""
Compute engine for fanning out independent eigenvalue solves.
Runs study points concurrently on a thread pool and returns outcomes in submission order.
"""

import asyncio
import time
from typing import Dict, Any, List, Optional, Callable, Sequence
from dataclasses import dataclass
import logging
from concurrent.futures import ThreadPoolExecutor

logger = logging.getLogger(__name__)


@dataclass
class SolveTask:
    """One independent unit of study work (a radius, a parameter value, a draw)."""
    task_id: str
    task_type: str  # 'radius', 'sweep_point', 'harnack_draw', 'decay_anchor', ...
    func: Callable[..., Any]
    args: tuple = ()
    created_at: float = None

    def __post_init__(self):
        if self.created_at is None:
            self.created_at = time.time()


@dataclass
class TaskOutcome:
    task_id: str
    status: str  # 'completed' or 'failed'
    result: Any = None
    error: Optional[Exception] = None
    compute_time: float = 0.0

    @property
    def ok(self) -> bool:
        return self.status == 'completed'


class SolveEngine:
    """
    Thread-pool task engine for study fan-out.

    - Executes tasks concurrently with at most `max_workers` in flight
    - Records per-task failures without aborting the batch
    - Keeps results in submission order so aggregation is deterministic
    """

    def __init__(self, max_workers: int = 4):
        """Initialize the engine with at most max_workers solves in flight."""
        self.max_workers = max(1, int(max_workers))
        self.executor = ThreadPoolExecutor(max_workers=self.max_workers)

        self.stats = {
            'tasks_submitted': 0,
            'tasks_completed': 0,
            'tasks_failed': 0,
            'total_compute_time': 0.0
        }

    def run_batch(self, tasks: Sequence[SolveTask]) -> List[TaskOutcome]:
        """
        Run a batch of tasks to completion.

        Args:
            tasks: Tasks to execute

        Returns:
            List of TaskOutcome, one per task, in submission order
        """
        if not tasks:
            return []
        self.stats['tasks_submitted'] += len(tasks)
        return asyncio.run(self._run_batch(list(tasks)))

    def map(self, task_type: str, func: Callable[..., Any], items: Sequence[Any]) -> List[TaskOutcome]:
        """Run func(item) for every item as one batch."""
        tasks = [SolveTask(task_id=f"{task_type}_{i}", task_type=task_type, func=func, args=(item,))
                 for i, item in enumerate(items)]
        return self.run_batch(tasks)

    async def _run_batch(self, tasks: List[SolveTask]) -> List[TaskOutcome]:
        loop = asyncio.get_running_loop()
        return list(await asyncio.gather(*(self._execute_task(loop, task) for task in tasks)))

    async def _execute_task(self, loop, task: SolveTask) -> TaskOutcome:
        """Execute a single task in the thread pool."""
        start_time = time.time()
        try:
            logger.debug(f"Executing task {task.task_id}")
            result = await loop.run_in_executor(self.executor, task.func, *task.args)
            self.stats['tasks_completed'] += 1
            return TaskOutcome(task.task_id, 'completed', result=result,
                               compute_time=time.time() - start_time)
        except Exception as e:
            logger.warning(f"Task {task.task_id} failed: {e}")
            self.stats['tasks_failed'] += 1
            return TaskOutcome(task.task_id, 'failed', error=e, compute_time=time.time() - start_time)
        finally:
            self.stats['total_compute_time'] += time.time() - start_time

    def get_stats(self) -> Dict[str, Any]:
        """Get engine statistics."""
        return {
            **self.stats,
            'max_workers': self.max_workers,
            'avg_compute_time': (
                self.stats['total_compute_time'] / max(self.stats['tasks_completed'], 1)
            )
        }

    def shutdown(self):
        """Shutdown the thread pool gracefully."""
        logger.info("Shutting down solve engine...")
        self.executor.shutdown(wait=True)
