"""Ordered block execution over a process pool."""

from concurrent.futures import ProcessPoolExecutor


def run_blocks(fn, tasks, workers=1):
    """Apply ``fn`` to each task and return results in task order.

    With ``workers > 1`` tasks run in a process pool; ``fn`` and the task
    tuples must then be picklable. Results never depend on ``workers``.
    """
    tasks = list(tasks)
    if workers is None or workers <= 1 or len(tasks) <= 1:
        return [fn(*task) for task in tasks]
    with ProcessPoolExecutor(max_workers=int(workers)) as pool:
        futures = [pool.submit(fn, *task) for task in tasks]
        return [f.result() for f in futures]
