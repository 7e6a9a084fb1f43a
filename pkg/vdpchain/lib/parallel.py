from __future__ import absolute_import
from typing import Any, Callable, Dict, Generator, Iterable, Tuple

import errno
import logging
import os
import pickle
import sys
import tempfile

logger = logging.getLogger('vdpchain')

def run_parallel(job, data, threads=6):
    # type: (Callable[[Any], Any], Iterable[Any], int) -> Generator[Tuple[int, Any, Any], None, None]
    """
    Runs `job(item)` for every item in a forked worker, at most `threads`
    at a time, and yields (status, item, result) as workers finish.  Each
    worker pickles its result to a scratch file; status is 0 on success
    and the result is None if the job raised.
    """
    pids = {}  # type: Dict[int, Tuple[Any, str]]

    def wait_for_one():
        # type: () -> Tuple[int, Any, Any]
        while True:
            try:
                (pid, status) = os.wait()
                item, path = pids.pop(pid)
            except KeyError:
                continue
            result = None
            try:
                if status == 0:
                    with open(path, 'rb') as f:
                        result = pickle.load(f)
            finally:
                os.unlink(path)
            return status, item, result

    for item in data:
        fd, path = tempfile.mkstemp(prefix='vdpchain-job-')
        pid = os.fork()
        if pid == 0:
            sys.stdin.close()
            sys.stdin = open(os.devnull, "r")
            code = 0
            try:
                with os.fdopen(fd, 'wb') as f:
                    pickle.dump(job(item), f)
            except Exception:
                logger.exception('parallel job failed for %r', item)
                code = 1
            os._exit(code)

        os.close(fd)
        pids[pid] = (item, path)
        threads = threads - 1

        if threads == 0:
            (status, done_item, result) = wait_for_one()
            threads += 1
            yield (status, done_item, result)
            if status != 0:
                # Stop if any error occurred
                break

    while pids:
        try:
            yield wait_for_one()
        except OSError as e:
            if e.errno == errno.ECHILD:
                break
            else:
                raise
